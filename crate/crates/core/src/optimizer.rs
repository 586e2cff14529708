//! Forward-backward sweep on the full optimality system: density forward,
//! multiplier backward, pointwise control update, damped.

use crate::adjoint::solve_adjoint;
use crate::control_law::{control_residual_masked, update_control_detailed, ControlOptions};
use crate::error::{invalid, Error, Result};
use crate::field::{FieldFrame, FieldTrajectory};
use crate::fokker_planck::{expected_utility, mollified_delta, solve_fp};
use crate::grid::GridSpec;
use crate::market::MarketModel;
use crate::report::{keys, SolveReport};
use crate::utility::UtilitySpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub max_iters: usize,
    /// Relaxation weight `omega` in `(0, 1]`.
    pub damping: f64,
    /// Sup-norm relative change of the control on the support set.
    pub tol_control: f64,
    /// Relative change of the objective.
    pub tol_objective: f64,
    /// Density level defining the support set `{p > threshold}`.
    pub density_threshold: f64,
    pub control: ControlOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            damping: 0.5,
            tol_control: 1e-4,
            tol_objective: 1e-6,
            density_threshold: 1e-4,
            control: ControlOptions::default(),
        }
    }
}

impl SweepOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(invalid("sweep.max_iters", "must be at least 1"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(invalid("sweep.damping", format!("must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.tol_control > 0.0 && self.tol_objective > 0.0) {
            return Err(invalid("sweep.tol_control/tol_objective", "tolerances must be positive"));
        }
        if !(self.density_threshold >= 0.0 && self.density_threshold.is_finite()) {
            return Err(invalid("sweep.density_threshold", "must be nonnegative"));
        }
        self.control.validate()
    }
}

/// Fields and report of a sweep, converged or not.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub control: FieldTrajectory,
    pub density: FieldTrajectory,
    pub lambda: FieldTrajectory,
    pub report: SolveReport,
}

/// `mask[n][i] = p(t_n, x_i) > threshold`.
pub fn support_mask(density: &FieldTrajectory, threshold: f64) -> Vec<Vec<bool>> {
    density
        .frames()
        .iter()
        .map(|f| f.values().iter().map(|&p| p > threshold).collect())
        .collect()
}

/// `max |new - old| / max |new|` over the masked nodes; 0 when nothing moved.
pub fn relative_change(new: &FieldTrajectory, old: &FieldTrajectory, mask: &[Vec<bool>]) -> f64 {
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for (n, row) in mask.iter().enumerate() {
        let (a, b) = (new.frame(n).values(), old.frame(n).values());
        for (i, &m) in row.iter().enumerate() {
            if m {
                diff = diff.max((a[i] - b[i]).abs());
                scale = scale.max(a[i].abs());
            }
        }
    }
    if diff == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

struct Candidate {
    control: FieldTrajectory,
    clip: f64,
    floor: f64,
}

fn candidate(lambda: &FieldTrajectory, market: &MarketModel, opts: &ControlOptions) -> Result<Candidate> {
    let mut clip = 0.0f64;
    let mut floor = 0.0f64;
    let frames = lambda
        .frames()
        .iter()
        .map(|l| {
            let up = update_control_detailed(l, market, opts);
            clip = clip.max(up.clip_fraction());
            floor = floor.max(up.floor_fraction());
            up.control
        })
        .collect();
    Ok(Candidate {
        control: FieldTrajectory::new(*lambda.grid(), frames)?,
        clip,
        floor,
    })
}

fn relax(old: &FieldTrajectory, cand: &FieldTrajectory, omega: f64) -> Result<FieldTrajectory> {
    let frames = old
        .frames()
        .iter()
        .zip(cand.frames())
        .map(|(a, c)| {
            let v = a.values().iter().zip(c.values()).map(|(a, c)| (1.0 - omega) * a + omega * c).collect();
            FieldFrame::new(*a.grid(), v)
        })
        .collect::<Result<Vec<_>>>()?;
    FieldTrajectory::new(*old.grid(), frames)
}

/// One adjoint solve under `control` followed by the control law on every
/// level: the undamped candidate the sweep relaxes toward.
pub fn adjoint_update(
    control: &FieldTrajectory,
    market: &MarketModel,
    utility: &UtilitySpec,
    opts: &ControlOptions,
) -> Result<(FieldTrajectory, FieldTrajectory)> {
    let (lambda, _) = solve_adjoint(control, market, utility)?;
    let cand = candidate(&lambda, market, opts)?;
    Ok((cand.control, lambda))
}

/// Damped Picard sweep from `alpha = 0`.
///
/// `objective_history[k]` is `J` of the k-th control (entry 0 is the
/// all-cash policy); `residual_history[k - 1]` is the control change of
/// iteration `k`. The final stationarity residual is evaluated on
/// `{p > threshold}` at interior nodes.
pub fn optimize(
    market: &MarketModel,
    utility: &UtilitySpec,
    grid: &GridSpec,
    x0: f64,
    opts: &SweepOptions,
) -> Result<SweepOutcome> {
    let zero = FieldTrajectory::constant_in_time(FieldFrame::zeros(*grid));
    optimize_from(market, utility, x0, zero, opts)
}

/// [`optimize`] started from an arbitrary admissible control.
pub fn optimize_from(
    market: &MarketModel,
    utility: &UtilitySpec,
    x0: f64,
    initial: FieldTrajectory,
    opts: &SweepOptions,
) -> Result<SweepOutcome> {
    opts.validate()?;
    let grid = initial.grid();
    utility.check_grid(grid)?;
    let p0 = mollified_delta(x0, grid)?;
    let mut control = initial.clone();
    let (mut density, mut fp_report) = solve_fp(&p0, &control, market)?;
    let mut objective = expected_utility(density.terminal(), utility);
    let mut report = SolveReport {
        objective_history: vec![objective],
        ..SolveReport::default()
    };
    let mut mass_drift = fp_report.get(keys::MASS_DRIFT).unwrap_or(0.0);
    let mut lambda = control.clone();
    let mut last = (0.0, 0.0, f64::INFINITY, f64::INFINITY);
    for k in 1..=opts.max_iters {
        let (lam, _) = solve_adjoint(&control, market, utility)?;
        let cand = candidate(&lam, market, &opts.control)?;
        let next = relax(&control, &cand.control, opts.damping)?;
        let (p, r) = solve_fp(&p0, &next, market)?;
        fp_report = r;
        mass_drift = mass_drift.max(fp_report.get(keys::MASS_DRIFT).unwrap_or(0.0));
        let j = expected_utility(p.terminal(), utility);
        let mask = support_mask(&p, opts.density_threshold);
        let d_control = relative_change(&next, &control, &mask);
        let d_objective = (j - objective).abs() / j.abs().max(f64::MIN_POSITIVE);
        report.objective_history.push(j);
        report.residual_history.push(d_control);
        report.iterations = k;
        last = (cand.clip, cand.floor, d_control, d_objective);
        control = next;
        density = p;
        lambda = lam;
        objective = j;
        if d_control <= opts.tol_control && d_objective <= opts.tol_objective {
            report.converged = true;
            break;
        }
    }
    let (clip, floor, d_control, d_objective) = last;
    report.set(keys::CLIP_FRACTION, clip);
    report.set(keys::FLOOR_FRACTION, floor);
    report.set(keys::CONTROL_CHANGE, d_control);
    report.set(keys::OBJECTIVE_CHANGE, d_objective);
    report.set(keys::MASS_DRIFT, mass_drift);
    report.set(keys::MIN_DENSITY, density.min());
    let mask = support_mask(&density, opts.density_threshold);
    let residual = (0..=grid.nt())
        .map(|n| control_residual_masked(control.frame(n), lambda.frame(n), market, Some(&mask[n])))
        .fold(0.0, f64::max);
    report.set(keys::CONTROL_RESIDUAL, residual);
    let outcome = SweepOutcome {
        control,
        density,
        lambda,
        report,
    };
    if outcome.report.converged {
        Ok(outcome)
    } else {
        Err(Error::NoConvergence(Box::new(outcome)))
    }
}

/// `|J_final - oracle| / |oracle|`; infinite when the report is empty.
pub fn objective_gap(report: &SolveReport, oracle_value: f64) -> f64 {
    match report.final_objective() {
        Some(j) => (j - oracle_value).abs() / oracle_value.abs(),
        None => f64::INFINITY,
    }
}
