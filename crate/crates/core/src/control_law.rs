//! Pointwise optimal control from the multiplier:
//! `alpha = -(mu - r) lambda_x / (sigma^2 lambda_xx)`.

use crate::error::{invalid, Result};
use crate::field::FieldFrame;
use crate::market::MarketModel;
use crate::stencil::{first_derivative, second_derivative};

/// Regularization of the control quotient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOptions {
    /// Curvature floor relative to `max |lambda_xx|` over the frame.
    pub curvature_floor: f64,
    /// Leverage cap: `|alpha(x)| <= m |x|`.
    pub alpha_max_multiple: f64,
}

impl Default for ControlOptions {
    fn default() -> Self {
        Self {
            curvature_floor: 1e-8,
            alpha_max_multiple: 20.0,
        }
    }
}

impl ControlOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.curvature_floor.is_finite() && self.curvature_floor > 0.0) {
            return Err(invalid("control.curvature_floor", "must be positive"));
        }
        if !(self.alpha_max_multiple.is_finite() && self.alpha_max_multiple > 0.0) {
            return Err(invalid("control.alpha_max_multiple", "must be positive"));
        }
        Ok(())
    }
}

/// Control frame together with the nodes where regularization kicked in.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlUpdate {
    pub control: FieldFrame,
    /// `|lambda_xx|` was below the floor (including exact zeros).
    pub floored: Vec<bool>,
    /// The leverage cap was active.
    pub clipped: Vec<bool>,
}

impl ControlUpdate {
    pub fn clip_fraction(&self) -> f64 {
        fraction(&self.clipped)
    }

    pub fn floor_fraction(&self) -> f64 {
        fraction(&self.floored)
    }

    /// Nodes where the control solves the stationarity condition exactly.
    pub fn regular(&self) -> Vec<bool> {
        self.floored
            .iter()
            .zip(&self.clipped)
            .map(|(f, c)| !f && !c)
            .collect()
    }
}

fn fraction(mask: &[bool]) -> f64 {
    mask.iter().filter(|&&m| m).count() as f64 / mask.len() as f64
}

pub fn update_control(lam: &FieldFrame, market: &MarketModel, opts: &ControlOptions) -> FieldFrame {
    update_control_detailed(lam, market, opts).control
}

pub fn update_control_detailed(lam: &FieldFrame, market: &MarketModel, opts: &ControlOptions) -> ControlUpdate {
    let grid = *lam.grid();
    let lx = first_derivative(lam);
    let lxx = second_derivative(lam);
    let floor = opts.curvature_floor * lxx.max_abs();
    let excess = market.excess_return();
    let s2 = market.sigma() * market.sigma();
    let n = grid.n_nodes();
    let mut alpha = vec![0.0; n];
    let mut floored = vec![false; n];
    let mut clipped = vec![false; n];
    for i in 0..n {
        let k = lxx.get(i);
        if k.abs() <= floor || k == 0.0 {
            floored[i] = true;
        }
        let raw = if k == 0.0 {
            0.0
        } else {
            -excess * lx.get(i) / (s2 * k.abs().max(floor) * k.signum())
        };
        let cap = opts.alpha_max_multiple * grid.node(i).abs();
        alpha[i] = if raw > cap {
            clipped[i] = true;
            cap
        } else if raw < -cap {
            clipped[i] = true;
            -cap
        } else {
            raw
        };
    }
    ControlUpdate {
        control: FieldFrame::new(grid, alpha).expect("regularized quotient is finite"),
        floored,
        clipped,
    }
}

/// Pointwise residual `sigma^2 lambda_xx alpha + (mu - r) lambda_x` on the
/// interior nodes, normalized by `max(1, max |lambda_x|)`.
pub fn control_residual_field(alpha: &FieldFrame, lam: &FieldFrame, market: &MarketModel) -> Vec<f64> {
    let lx = first_derivative(lam);
    let lxx = second_derivative(lam);
    let norm = lx.max_abs().max(1.0);
    let s2 = market.sigma() * market.sigma();
    let excess = market.excess_return();
    (0..alpha.len())
        .map(|i| (s2 * lxx.get(i) * alpha.get(i) + excess * lx.get(i)).abs() / norm)
        .collect()
}

/// Max of [`control_residual_field`] over interior nodes.
pub fn control_residual(alpha: &FieldFrame, lam: &FieldFrame, market: &MarketModel) -> f64 {
    control_residual_masked(alpha, lam, market, None)
}

/// As [`control_residual`], restricted to interior nodes where `mask` holds.
pub fn control_residual_masked(
    alpha: &FieldFrame,
    lam: &FieldFrame,
    market: &MarketModel,
    mask: Option<&[bool]>,
) -> f64 {
    let r = control_residual_field(alpha, lam, market);
    let n = r.len();
    (1..n - 1)
        .filter(|&i| mask.is_none_or(|m| m[i]))
        .map(|i| r[i])
        .fold(0.0, f64::max)
}
