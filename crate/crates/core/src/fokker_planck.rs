//! Forward solver for the density of controlled wealth,
//! `p_t = -(a p)_x + 1/2 (b^2 p)_xx`, in conservative flux form.
//!
//! Each node owns a control volume (half volumes at the edges, so the
//! discrete mass is the trapezoidal integral). Fluxes live on the faces
//! between neighbouring nodes and vanish on the two outer faces, which makes
//! the scheme conserve mass to rounding. Advection is donor-cell upwinded on
//! the sign of the nodal drift; the nodal diffusion coefficient is credited
//! with the numerical diffusion `|a| dx` of the upwind flux, so wherever the
//! physical diffusion dominates the face flux is the centered one.

use crate::error::Result;
use crate::field::{FieldFrame, FieldTrajectory};
use crate::grid::GridSpec;
use crate::market::MarketModel;
use crate::report::{keys, SolveReport};
use crate::tridiag::Tridiagonal;
use crate::utility::UtilitySpec;
use crate::Error;

/// Drift `a` and diffusion amplitude `b` of the wealth SDE on one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFields {
    pub drift: FieldFrame,
    pub diffusion: FieldFrame,
}

impl CoefficientFields {
    pub fn new(drift: FieldFrame, diffusion: FieldFrame) -> Result<Self> {
        drift.ensure_same_grid(&diffusion)?;
        Ok(Self { drift, diffusion })
    }

    pub fn grid(&self) -> &GridSpec {
        self.drift.grid()
    }

    /// Nodal drift and effective diffusion `max(b^2 - |a| dx, 0)` used by
    /// the interior stencils of both the forward and the backward operator.
    pub(crate) fn upwind_split(&self) -> (Vec<f64>, Vec<f64>) {
        let dx = self.grid().dx();
        let a = self.drift.values().to_vec();
        let d_eff = a
            .iter()
            .zip(self.diffusion.values())
            .map(|(a, b)| (b * b - a.abs() * dx).max(0.0))
            .collect();
        (a, d_eff)
    }
}

/// `a_i = r x_i + (mu - r) alpha_i`, `b_i = sigma alpha_i`.
pub fn build_coefficients(control: &FieldFrame, market: &MarketModel) -> CoefficientFields {
    let drift = control
        .map(|x, alpha| market.drift(x, alpha))
        .expect("affine map of a finite control is finite");
    let diffusion = control
        .map(|_, alpha| market.diffusion(alpha))
        .expect("scaling a finite control is finite");
    CoefficientFields { drift, diffusion }
}

/// Discrete Gaussian of width `2 dx` centred at `x0`, normalized to unit
/// trapezoidal mass.
pub fn mollified_delta(x0: f64, grid: &GridSpec) -> Result<FieldFrame> {
    if !grid.contains_open(x0) {
        return Err(Error::OutOfDomain {
            x: x0,
            x_min: grid.x_min(),
            x_max: grid.x_max(),
        });
    }
    let w = 2.0 * grid.dx();
    let raw = FieldFrame::from_fn(*grid, |x| (-0.5 * ((x - x0) / w).powi(2)).exp())?;
    let mass = raw.integral();
    raw.scaled(1.0 / mass)
}

/// Face flux coefficients: `F_{k+1/2} = left[k] p_k + right[k] p_{k+1}`.
fn face_coefficients(coeffs: &CoefficientFields) -> (Vec<f64>, Vec<f64>) {
    let dx = coeffs.grid().dx();
    let (a, d) = coeffs.upwind_split();
    let n = a.len();
    let mut left = Vec::with_capacity(n - 1);
    let mut right = Vec::with_capacity(n - 1);
    for k in 0..n - 1 {
        left.push(a[k].max(0.0) + 0.5 * d[k] / dx);
        right.push(a[k + 1].min(0.0) - 0.5 * d[k + 1] / dx);
    }
    (left, right)
}

/// Implicit system `(I + dt W^{-1} A) p_new = p_old` of one step.
pub(crate) fn fp_matrix(coeffs: &CoefficientFields, dt: f64) -> Tridiagonal {
    let grid = coeffs.grid();
    let n = grid.n_nodes();
    let (left, right) = face_coefficients(coeffs);
    let mut lower = vec![0.0; n - 1];
    let mut diag = vec![1.0; n];
    let mut upper = vec![0.0; n - 1];
    for i in 0..n {
        let s = dt / grid.weight(i);
        if i + 1 < n {
            diag[i] += s * left[i];
            upper[i] = s * right[i];
        }
        if i > 0 {
            diag[i] -= s * right[i - 1];
            lower[i - 1] = -s * left[i - 1];
        }
    }
    Tridiagonal { lower, diag, upper }
}

/// One backward-Euler step of the forward equation with zero-flux edges.
pub fn step_fp(p: &FieldFrame, coeffs: &CoefficientFields, dt: f64) -> Result<FieldFrame> {
    if p.grid() != coeffs.grid() {
        return Err(Error::GridMismatch);
    }
    let next = fp_matrix(coeffs, dt).solve(p.values())?;
    FieldFrame::new(*p.grid(), next)
}

/// March the density from `p0` through the horizon. The step from level `n`
/// to `n + 1` uses the coefficients built from `control.frame(n)`.
///
/// The report records the total mass per level in `objective_history`, the
/// mass defect per level in `residual_history`, and the diagnostics
/// `mass_drift` (max defect) and `min_density`.
pub fn solve_fp(
    p0: &FieldFrame,
    control: &FieldTrajectory,
    market: &MarketModel,
) -> Result<(FieldTrajectory, SolveReport)> {
    let grid = *control.grid();
    if *p0.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let dt = grid.dt();
    let mut frames = Vec::with_capacity(grid.nt() + 1);
    frames.push(p0.clone());
    for n in 0..grid.nt() {
        let coeffs = build_coefficients(control.frame(n), market);
        let next = step_fp(&frames[n], &coeffs, dt)?;
        frames.push(next);
    }
    let mut report = SolveReport {
        iterations: grid.nt(),
        converged: true,
        ..SolveReport::default()
    };
    for f in &frames {
        let mass = f.total_mass();
        report.objective_history.push(mass);
        report.residual_history.push((mass - 1.0).abs());
    }
    let drift = report.residual_history.iter().copied().fold(0.0, f64::max);
    let traj = FieldTrajectory::new(grid, frames)?;
    report.set(keys::MASS_DRIFT, drift);
    report.set(keys::MIN_DENSITY, traj.min());
    Ok((traj, report))
}

/// Trapezoidal quadrature of `U(x) p(T, x)`.
pub fn expected_utility(p_terminal: &FieldFrame, utility: &UtilitySpec) -> f64 {
    p_terminal.integrate_against(|x| utility.value(x))
}
