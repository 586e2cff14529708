//! Direct backward solver for the HJ equation
//! `lambda_t + r x lambda_x - (mu - r)^2 lambda_x^2 / (2 sigma^2 lambda_xx) = 0`
//! by policy iteration: on each time level the control is read off the
//! current iterate and the frozen-policy linear equation is stepped
//! implicitly with the same monotone operator as the adjoint solver.

use crate::adjoint::{adjoint_report, terminal_condition, AdjointSystem};
use crate::control_law::{update_control_detailed, ControlOptions};
use crate::error::{invalid, Result};
use crate::field::{FieldFrame, FieldTrajectory};
use crate::fokker_planck::build_coefficients;
use crate::grid::GridSpec;
use crate::market::MarketModel;
use crate::report::{keys, SolveReport};
use crate::stencil::{first_derivative, second_derivative};
use crate::utility::UtilitySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HjScheme {
    #[default]
    PolicyIterationImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HJOptions {
    pub policy_iters_per_step: usize,
    pub scheme: HjScheme,
    pub control: ControlOptions,
}

impl Default for HJOptions {
    fn default() -> Self {
        Self {
            policy_iters_per_step: 3,
            scheme: HjScheme::default(),
            control: ControlOptions::default(),
        }
    }
}

impl HJOptions {
    pub fn validate(&self) -> Result<()> {
        if self.policy_iters_per_step < 1 {
            return Err(invalid("hj.policy_iters_per_step", "must be at least 1"));
        }
        self.control.validate()
    }
}

/// Multiplier, the policy used on each level, and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct HjSolution {
    pub lambda: FieldTrajectory,
    pub control: FieldTrajectory,
    pub report: SolveReport,
}

/// March backward from `lambda(T) = -U`. The control stored at level `n` is
/// the policy of the last linear solve from `n + 1` to `n`; at `T` it is the
/// control law applied to the terminal data.
///
/// The report carries the largest clip and floor fractions seen on any
/// level, the per-level max change of the final policy sweep in
/// `residual_history`, and the adjoint diagnostics.
pub fn solve_hj(market: &MarketModel, utility: &UtilitySpec, grid: &GridSpec, opts: &HJOptions) -> Result<HjSolution> {
    opts.validate()?;
    let nt = grid.nt();
    let dt = grid.dt();
    let mut lam = vec![FieldFrame::zeros(*grid); nt + 1];
    let mut alpha = vec![FieldFrame::zeros(*grid); nt + 1];
    lam[nt] = terminal_condition(utility, grid)?;
    let terminal = update_control_detailed(&lam[nt], market, &opts.control);
    let mut clip = terminal.clip_fraction();
    let mut floor = terminal.floor_fraction();
    alpha[nt] = terminal.control;
    let mut sweep_change = vec![0.0; nt + 1];
    for n in (0..nt).rev() {
        let mut iterate = lam[n + 1].clone();
        let mut policy = alpha[n + 1].clone();
        for _ in 0..opts.policy_iters_per_step {
            let up = update_control_detailed(&iterate, market, &opts.control);
            clip = clip.max(up.clip_fraction());
            floor = floor.max(up.floor_fraction());
            let coeffs = build_coefficients(&up.control, market);
            let sys = AdjointSystem::assemble(&coeffs, dt, lam[n + 1].values())?;
            let next = FieldFrame::new(*grid, sys.solve(lam[n + 1].values())?)?;
            sweep_change[n] = next
                .values()
                .iter()
                .zip(iterate.values())
                .fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
            iterate = next;
            policy = up.control;
        }
        lam[n] = iterate;
        alpha[n] = policy;
    }
    let lambda = FieldTrajectory::new(*grid, lam)?;
    let control = FieldTrajectory::new(*grid, alpha)?;
    let mut report = adjoint_report(&lambda);
    report.residual_history = sweep_change;
    report.set(keys::CLIP_FRACTION, clip);
    report.set(keys::FLOOR_FRACTION, floor);
    Ok(HjSolution { lambda, control, report })
}

/// Pointwise HJ residual with the nodes where it is meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct HjResidual {
    /// Zero wherever the node is not scored.
    pub field: FieldTrajectory,
    /// `scored[n][i]`: interior time level, interior node, curvature above
    /// the floor.
    pub scored: Vec<Vec<bool>>,
}

impl HjResidual {
    /// Largest `|residual|` over scored nodes, optionally intersected with
    /// `mask[n][i]`.
    pub fn max_scored(&self, mask: Option<&[Vec<bool>]>) -> f64 {
        let mut worst = 0.0f64;
        for (n, row) in self.scored.iter().enumerate() {
            for (i, &s) in row.iter().enumerate() {
                if s && mask.is_none_or(|m| m[n][i]) {
                    worst = worst.max(self.field.frame(n).get(i).abs());
                }
            }
        }
        worst
    }
}

/// HJ residual with centered time differences at interior levels and the
/// curvature-floored quotient in space.
pub fn hj_residual(lam: &FieldTrajectory, market: &MarketModel) -> HjResidual {
    hj_residual_with(lam, market, &ControlOptions::default())
}

pub fn hj_residual_with(lam: &FieldTrajectory, market: &MarketModel, opts: &ControlOptions) -> HjResidual {
    let grid = *lam.grid();
    let nt = grid.nt();
    let n_nodes = grid.n_nodes();
    let dt = grid.dt();
    let ex = market.excess_return();
    let s2 = market.sigma() * market.sigma();
    let mut frames = vec![FieldFrame::zeros(grid); nt + 1];
    let mut scored = vec![vec![false; n_nodes]; nt + 1];
    for n in 1..nt {
        let f = lam.frame(n);
        let lx = first_derivative(f);
        let lxx = second_derivative(f);
        let floor = opts.curvature_floor * lxx.max_abs();
        let mut res = vec![0.0; n_nodes];
        for i in 1..n_nodes - 1 {
            let k = lxx.get(i);
            if k.abs() <= floor {
                continue;
            }
            let lt = (lam.frame(n + 1).get(i) - lam.frame(n - 1).get(i)) / (2.0 * dt);
            let g = lx.get(i);
            res[i] = lt + market.r() * grid.node(i) * g - ex * ex * g * g / (2.0 * s2 * k);
            scored[n][i] = true;
        }
        frames[n] = FieldFrame::new(grid, res).unwrap_or_else(|_| FieldFrame::zeros(grid));
    }
    let field = FieldTrajectory::new(grid, frames).expect("frames built on the trajectory grid");
    HjResidual { field, scored }
}
