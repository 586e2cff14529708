//! Reference solutions for testing: the Merton closed form for CRRA utility
//! and the weak-form moment identity of the forward equation.
//!
//! For `U(x) = x^gamma / gamma` the multiplier
//! `lambda*(t, x) = -exp(rho (T - t)) U(x)` solves the HJ equation
//! `lambda_t + r x lambda_x - (mu - r)^2 lambda_x^2 / (2 sigma^2 lambda_xx) = 0`
//! identically: with `lambda_x = gamma lambda / x` and
//! `lambda_xx = gamma (gamma - 1) lambda / x^2` the nonlinear term equals
//! `-(mu - r)^2 gamma lambda / (2 sigma^2 (1 - gamma))`, and `lambda_t = -rho lambda`
//! cancels the rest. The optimal control is `alpha* = ratio * x`.

use crate::error::{Error, Result};
use crate::field::FieldTrajectory;
use crate::fokker_planck::build_coefficients;
use crate::grid::GridSpec;
use crate::market::MarketModel;
use crate::sum::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MertonClosedForm {
    /// `alpha*(x) / x = (mu - r) / ((1 - gamma) sigma^2)`.
    pub ratio: f64,
    /// `gamma (r + (mu - r)^2 / (2 sigma^2 (1 - gamma)))`.
    pub rho: f64,
    pub gamma: f64,
    pub horizon: f64,
}

pub fn merton_reference(market: &MarketModel, gamma: f64, grid: &GridSpec) -> Result<MertonClosedForm> {
    if !gamma.is_finite() || gamma == 0.0 || gamma >= 1.0 {
        return Err(Error::BadUtility(format!(
            "closed form needs CRRA gamma < 1, gamma != 0; got {gamma}"
        )));
    }
    let s2 = market.sigma() * market.sigma();
    let ex = market.excess_return();
    Ok(MertonClosedForm {
        ratio: ex / ((1.0 - gamma) * s2),
        rho: gamma * (market.r() + ex * ex / (2.0 * s2 * (1.0 - gamma))),
        gamma,
        horizon: grid.horizon(),
    })
}

impl MertonClosedForm {
    pub fn utility(&self, x: f64) -> f64 {
        x.powf(self.gamma) / self.gamma
    }

    /// Value function `V(t, x) = exp(rho (T - t)) U(x)`.
    pub fn value(&self, t: f64, x: f64) -> f64 {
        (self.rho * (self.horizon - t)).exp() * self.utility(x)
    }

    /// `lambda* = -V`.
    pub fn lambda(&self, t: f64, x: f64) -> f64 {
        -self.value(t, x)
    }

    pub fn control(&self, x: f64) -> f64 {
        self.ratio * x
    }

    pub fn lambda_trajectory(&self, grid: &GridSpec) -> Result<FieldTrajectory> {
        FieldTrajectory::from_fn(*grid, |t, x| self.lambda(t, x))
    }

    pub fn control_trajectory(&self, grid: &GridSpec) -> Result<FieldTrajectory> {
        FieldTrajectory::from_fn(*grid, |_, x| self.control(x))
    }
}

/// Test function for the weak-form identity.
pub trait TestFunction {
    fn value(&self, x: f64) -> f64;
    fn d1(&self, x: f64) -> f64;
    fn d2(&self, x: f64) -> f64;
}

pub struct Constant;
pub struct Identity;
pub struct Square;

impl TestFunction for Constant {
    fn value(&self, _: f64) -> f64 {
        1.0
    }
    fn d1(&self, _: f64) -> f64 {
        0.0
    }
    fn d2(&self, _: f64) -> f64 {
        0.0
    }
}

impl TestFunction for Identity {
    fn value(&self, x: f64) -> f64 {
        x
    }
    fn d1(&self, _: f64) -> f64 {
        1.0
    }
    fn d2(&self, _: f64) -> f64 {
        0.0
    }
}

impl TestFunction for Square {
    fn value(&self, x: f64) -> f64 {
        x * x
    }
    fn d1(&self, x: f64) -> f64 {
        2.0 * x
    }
    fn d2(&self, _: f64) -> f64 {
        2.0
    }
}

/// User-supplied smooth bounded function with its first two derivatives.
pub struct Smooth<F, G, H> {
    pub f: F,
    pub df: G,
    pub d2f: H,
}

impl<F, G, H> TestFunction for Smooth<F, G, H>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }
    fn d1(&self, x: f64) -> f64 {
        (self.df)(x)
    }
    fn d2(&self, x: f64) -> f64 {
        (self.d2f)(x)
    }
}

/// Largest discrepancy over interior time levels in
/// `d/dt <f, p> = <a f_x + b^2/2 f_xx, p> - 1/2 [f_x b^2 p]` (bracket taken
/// between `x_min` and `x_max`). The bracket is the flux of `f` through the
/// reflecting edges of the truncated domain; it vanishes for `f` constant and
/// is negligible whenever the density is small at both edges.
pub fn weak_form_check(
    p_traj: &FieldTrajectory,
    control: &FieldTrajectory,
    market: &MarketModel,
    f: &dyn TestFunction,
) -> Result<f64> {
    p_traj.ensure_same_grid(control)?;
    let grid = *p_traj.grid();
    let nt = grid.nt();
    let dt = grid.dt();
    let n_nodes = grid.n_nodes();
    let moments: Vec<f64> = p_traj.frames().iter().map(|p| p.integrate_against(|x| f.value(x))).collect();
    let mut worst = 0.0f64;
    for n in 1..nt {
        let p = p_traj.frame(n);
        let c = build_coefficients(control.frame(n), market);
        let a = c.drift.values();
        let b = c.diffusion.values();
        let mut rhs = NeumaierSum::new();
        for i in 0..n_nodes {
            let x = grid.node(i);
            let gen = a[i] * f.d1(x) + 0.5 * b[i] * b[i] * f.d2(x);
            rhs.add(grid.weight(i) * gen * p.get(i));
        }
        let last = n_nodes - 1;
        let flux = |i: usize| f.d1(grid.node(i)) * b[i] * b[i] * p.get(i);
        rhs.add(-0.5 * (flux(last) - flux(0)));
        let lhs = (moments[n + 1] - moments[n - 1]) / (2.0 * dt);
        worst = worst.max((lhs - rhs.value()).abs());
    }
    Ok(worst)
}
