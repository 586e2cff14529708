//! Euler-Maruyama simulation of `dX = (r X + (mu - r) alpha) dt + sigma alpha dW`
//! under a feedback control sampled bilinearly from a trajectory.
//!
//! Path `k` draws from its own ChaCha stream `(seed, k)`, so the sample set
//! does not depend on how rayon schedules the work.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::field::{FieldFrame, FieldTrajectory};
use crate::grid::GridSpec;
use crate::market::MarketModel;
use crate::sum::NeumaierSum;
use crate::utility::UtilitySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryPolicy {
    /// Mirror across the nearest edge, matching the zero-flux forward solver.
    #[default]
    Reflect,
    /// Stop the path at the edge it crosses.
    Absorb,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub n_paths: usize,
    pub seed: u64,
    /// Euler steps per PDE time step.
    pub substeps: usize,
    pub boundary_policy: BoundaryPolicy,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            seed: 0,
            substeps: 1,
            boundary_policy: BoundaryPolicy::Reflect,
        }
    }
}

impl McOptions {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 1 {
            return Err(invalid("mc.n_paths", "need at least one path"));
        }
        if self.substeps < 1 {
            return Err(invalid("mc.substeps", "need at least one substep"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`.
    pub stderr: f64,
    pub n: usize,
}

fn simulate_path(
    control: &FieldTrajectory,
    market: &MarketModel,
    x0: f64,
    opts: &McOptions,
    index: usize,
) -> f64 {
    let grid = control.grid();
    let (lo, hi) = (grid.x_min(), grid.x_max());
    let steps = grid.nt() * opts.substeps;
    let h = grid.horizon() / steps as f64;
    let sqrt_h = h.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(index as u64);
    let mut x = x0;
    for s in 0..steps {
        let t = s as f64 * h;
        let alpha = control.sample(t, x);
        let z: f64 = StandardNormal.sample(&mut rng);
        x += market.drift(x, alpha) * h + market.diffusion(alpha) * sqrt_h * z;
        match opts.boundary_policy {
            BoundaryPolicy::Reflect => {
                if x < lo {
                    x = 2.0 * lo - x;
                } else if x > hi {
                    x = 2.0 * hi - x;
                }
                x = x.clamp(lo, hi);
            }
            BoundaryPolicy::Absorb => {
                if x <= lo || x >= hi {
                    return x.clamp(lo, hi);
                }
            }
        }
    }
    x
}

/// Terminal wealth of `n_paths` independent paths started at `x0`, in path
/// order.
pub fn simulate_terminal_wealth(
    control: &FieldTrajectory,
    market: &MarketModel,
    x0: f64,
    opts: &McOptions,
) -> Result<Vec<f64>> {
    opts.validate()?;
    let grid = control.grid();
    if !(x0 >= grid.x_min() && x0 <= grid.x_max()) {
        return Err(Error::OutOfDomain {
            x: x0,
            x_min: grid.x_min(),
            x_max: grid.x_max(),
        });
    }
    Ok((0..opts.n_paths)
        .into_par_iter()
        .map(|k| simulate_path(control, market, x0, opts, k))
        .collect())
}

/// Sample mean and standard error of `U(X_T)`.
pub fn estimate_expected_utility(samples: &[f64], utility: &UtilitySpec) -> Result<McEstimate> {
    utility.validate()?;
    if samples.is_empty() {
        return Err(invalid("samples", "need at least one sample"));
    }
    if let Some(&x) = samples.iter().find(|&&x| !utility.is_defined(x)) {
        return Err(Error::DomainError { x });
    }
    let n = samples.len();
    let mean = samples.iter().map(|&x| utility.value(x)).collect::<NeumaierSum>().value() / n as f64;
    let var = if n > 1 {
        samples
            .iter()
            .map(|&x| (utility.value(x) - mean).powi(2))
            .collect::<NeumaierSum>()
            .value()
            / (n - 1) as f64
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        stderr: (var / n as f64).sqrt(),
        n,
    })
}

/// Histogram on the dual cells of the grid (each node owns its trapezoid
/// weight), normalized to unit trapezoidal mass. Samples outside the domain
/// are assigned to the nearest edge node.
pub fn density_histogram(samples: &[f64], grid: &GridSpec) -> Result<FieldFrame> {
    if samples.is_empty() {
        return Err(invalid("samples", "need at least one sample"));
    }
    let n_nodes = grid.n_nodes();
    let mut counts = vec![0usize; n_nodes];
    for &x in samples {
        let s = ((x - grid.x_min()) / grid.dx()).round();
        let i = if s <= 0.0 { 0 } else { (s as usize).min(n_nodes - 1) };
        counts[i] += 1;
    }
    let total = samples.len() as f64;
    let values = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| c as f64 / (total * grid.weight(i)))
        .collect();
    FieldFrame::new(*grid, values)
}
