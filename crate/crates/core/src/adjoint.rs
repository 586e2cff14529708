//! Backward solver for the multiplier `lambda` of the density constraint:
//! `lambda(T, x) = -U(x)`, `lambda_t + a lambda_x + b^2/2 lambda_xx = 0`.
//!
//! Interior rows are the exact transpose of the forward operator in
//! [`crate::fokker_planck`], so the pairing `sum_i w_i lambda_i p_i` is
//! preserved step by step away from the edges.
//!
//! The edge nodes carry no boundary data. There the increment over a step
//! is extended from the interior with the relative curvature
//! `x lambda_xx / lambda_x` held at its value on the first interior node,
//! which is exact for power laws, logarithms and affine data; a flat slope
//! reduces it to `lambda_xx = 0`. The edge rows reach two nodes in and are
//! handled by a rank-two correction of the tridiagonal solve.

use crate::error::{Error, Result};
use crate::field::{FieldFrame, FieldTrajectory};
use crate::fokker_planck::{build_coefficients, CoefficientFields};
use crate::grid::GridSpec;
use crate::market::MarketModel;
use crate::report::{keys, SolveReport};
use crate::stencil::second_derivative;
use crate::tridiag::Tridiagonal;
use crate::utility::UtilitySpec;

/// `lambda(T, x_i) = -U(x_i)`.
pub fn terminal_condition(utility: &UtilitySpec, grid: &GridSpec) -> Result<FieldFrame> {
    utility.check_grid(grid)?;
    FieldFrame::from_fn(*grid, |x| -utility.value(x))
}

/// Edge row on the edge node and the next two inward. Its right-hand side
/// is `sum_k rhs_coef[k] * rhs[node k]`.
#[derive(Debug, Clone, Copy)]
struct EdgeRow {
    coef: [f64; 3],
    rhs_coef: [f64; 3],
}

/// Assembled implicit backward step. The edge rows reach one node past
/// the tridiagonal band; the solve handles them with a rank-two correction.
pub(crate) struct AdjointSystem {
    matrix: Tridiagonal,
    rows: [EdgeRow; 2],
    // responses of the band to unit loads on the two edge rows
    z: [Vec<f64>; 2],
    coupling: [[f64; 2]; 2],
}

/// Node `k` counted inward from edge `side` (0 left, 1 right).
fn inward(side: usize, k: usize, n: usize) -> usize {
    if side == 0 {
        k
    } else {
        n - 1 - k
    }
}

impl AdjointSystem {
    /// `next` is the multiplier on the later time level, used by the
    /// closures that read the local shape of the solution.
    pub(crate) fn assemble(coeffs: &CoefficientFields, dt: f64, next: &[f64]) -> Result<Self> {
        let grid = coeffs.grid();
        let dx = grid.dx();
        let n = grid.n_nodes();
        let (a, d_eff) = coeffs.upwind_split();
        let mut lower = vec![0.0; n - 1];
        let mut diag = vec![1.0; n];
        let mut upper = vec![0.0; n - 1];
        for i in 1..n - 1 {
            let ap = a[i].max(0.0) / dx;
            let am = a[i].min(0.0) / dx;
            let k = 0.5 * d_eff[i] / (dx * dx);
            upper[i] = -dt * (ap + k);
            lower[i - 1] = -dt * (k - am);
            diag[i] = 1.0 + dt * (ap - am + 2.0 * k);
        }
        let rows = [0, 1].map(|side| edge_row(side, grid, next));
        diag[0] = rows[0].coef[0];
        upper[0] = rows[0].coef[1];
        diag[n - 1] = rows[1].coef[0];
        lower[n - 2] = rows[1].coef[1];
        let matrix = Tridiagonal { lower, diag, upper };
        let mut e0 = vec![0.0; n];
        e0[0] = 1.0;
        let mut e1 = vec![0.0; n];
        e1[n - 1] = 1.0;
        let z = [matrix.solve(&e0)?, matrix.solve(&e1)?];
        let mut coupling = [[0.0; 2]; 2];
        for (r, row) in coupling.iter_mut().enumerate() {
            for (c, entry) in row.iter_mut().enumerate() {
                *entry = f64::from(u8::from(r == c)) + extra_dot(&rows[r], r, &z[c]);
            }
        }
        Ok(Self {
            matrix,
            rows,
            z,
            coupling,
        })
    }

    pub(crate) fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = rhs.len();
        let mut b = rhs.to_vec();
        for side in 0..2 {
            let row = &self.rows[side];
            b[inward(side, 0, n)] = (0..3).map(|k| row.rhs_coef[k] * rhs[inward(side, k, n)]).sum();
        }
        let mut x = self.matrix.solve(&b)?;
        let g = [extra_dot(&self.rows[0], 0, &x), extra_dot(&self.rows[1], 1, &x)];
        let [[p, q], [r, s]] = self.coupling;
        let det = p * s - q * r;
        if det.is_nan() || det.abs() <= 1e-14 {
            return Err(Error::SingularSystem { row: 0, pivot: det });
        }
        let beta = [(s * g[0] - q * g[1]) / det, (p * g[1] - r * g[0]) / det];
        for (i, v) in x.iter_mut().enumerate() {
            *v -= beta[0] * self.z[0][i] + beta[1] * self.z[1][i];
        }
        Ok(x)
    }
}

/// Out-of-band part of edge row `side` applied to `v`.
fn extra_dot(row: &EdgeRow, side: usize, v: &[f64]) -> f64 {
    let n = v.len();
    row.coef[2] * v[inward(side, 2, n)]
}

/// Weight `theta` of the three-point edge extension
/// `d_e = (1 + theta) d_1 - theta d_2` (nodes counted inward), exact for
/// `d = A + B phi(x)`. The shape `phi` has `x phi'' / phi'` (on a positive
/// domain) or `phi'' / phi'` (otherwise) equal to that of `next` at the
/// first interior node; a vanishing slope gives `theta = 1`.
fn edge_weight(side: usize, grid: &GridSpec, next: &[f64]) -> f64 {
    let n = next.len();
    let dx = grid.dx();
    let j = inward(side, 1, n);
    let slope = (next[j + 1] - next[j - 1]) / (2.0 * dx);
    let curv = (next[j + 1] - 2.0 * next[j] + next[j - 1]) / (dx * dx);
    let scale = next[j - 1].abs().max(next[j].abs()).max(next[j + 1].abs());
    if slope.is_nan() || slope.abs() <= 1e-12 * scale / dx {
        return 1.0;
    }
    let kappa = curv / slope;
    let x = [0, 1, 2].map(|k| grid.node(inward(side, k, n)));
    let positive = grid.x_min() > 0.0 || grid.x_max() < 0.0;
    let phi: Box<dyn Fn(f64) -> f64> = if positive {
        let beta = 1.0 + x[1].abs() * kappa;
        if beta.abs() < 1e-8 {
            Box::new(|y: f64| y.abs().ln())
        } else {
            Box::new(move |y: f64| y.abs().powf(beta) / beta)
        }
    } else if (kappa * dx).abs() < 1e-8 {
        Box::new(|y: f64| y)
    } else {
        let x1 = x[1];
        Box::new(move |y: f64| (kappa * (y - x1)).exp() / kappa)
    };
    let theta = (phi(x[0]) - phi(x[1])) / (phi(x[1]) - phi(x[2]));
    if theta.is_finite() && theta > 0.0 {
        theta
    } else {
        1.0
    }
}

/// Edge extension applied to the increment over the step, so a step with
/// zero generator leaves `lambda` unchanged.
fn edge_row(side: usize, grid: &GridSpec, next: &[f64]) -> EdgeRow {
    let theta = edge_weight(side, grid, next);
    let coef = [1.0, -(1.0 + theta), theta];
    EdgeRow { coef, rhs_coef: coef }
}

/// One implicit step backward in time: from `lambda(t + dt)` to
/// `lambda(t)` with the coefficients of level `t`.
pub fn step_adjoint(lam: &FieldFrame, coeffs: &CoefficientFields, dt: f64) -> Result<FieldFrame> {
    if lam.grid() != coeffs.grid() {
        return Err(Error::GridMismatch);
    }
    let sys = AdjointSystem::assemble(coeffs, dt, lam.values())?;
    FieldFrame::new(*lam.grid(), sys.solve(lam.values())?)
}

/// Minimum of the discrete `lambda_xx` over interior nodes.
pub(crate) fn min_interior_curvature(frame: &FieldFrame) -> f64 {
    let d2 = second_derivative(frame);
    let v = d2.values();
    v[1..v.len() - 1].iter().copied().fold(f64::INFINITY, f64::min)
}

/// March `lambda` backward from `-U` under a fixed control. The step from
/// level `n + 1` to `n` uses the coefficients of `control.frame(n)`, the
/// same pairing as the forward solver, so `lambda(0, .)` is the discrete
/// dual of the forward march.
///
/// The report carries `min_lambda_xx` (over interior nodes and all levels),
/// and `max |lambda|` per level in
/// `objective_history`.
pub fn solve_adjoint(
    control: &FieldTrajectory,
    market: &MarketModel,
    utility: &UtilitySpec,
) -> Result<(FieldTrajectory, SolveReport)> {
    let grid = *control.grid();
    let dt = grid.dt();
    let nt = grid.nt();
    let mut frames = vec![FieldFrame::zeros(grid); nt + 1];
    frames[nt] = terminal_condition(utility, &grid)?;
    for n in (0..nt).rev() {
        let coeffs = build_coefficients(control.frame(n), market);
        let sys = AdjointSystem::assemble(&coeffs, dt, frames[n + 1].values())?;
        frames[n] = FieldFrame::new(grid, sys.solve(frames[n + 1].values())?)?;
    }
    let traj = FieldTrajectory::new(grid, frames)?;
    let report = adjoint_report(&traj);
    Ok((traj, report))
}

pub(crate) fn adjoint_report(traj: &FieldTrajectory) -> SolveReport {
    let mut report = SolveReport {
        iterations: traj.grid().nt(),
        converged: true,
        ..SolveReport::default()
    };
    let mut min_curv = f64::INFINITY;
    for f in traj.frames() {
        let c = min_interior_curvature(f);
        min_curv = min_curv.min(c);
        report.residual_history.push(c);
        report.objective_history.push(f.max_abs());
    }
    report.set(keys::MIN_LAMBDA_XX, min_curv);
    report
}
