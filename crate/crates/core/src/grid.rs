//! Truncated space-time lattice.
//!
//! The wealth axis carries `nx` interior nodes plus two boundary nodes with
//! uniform spacing; the time axis carries `nt + 1` levels from 0 to the
//! horizon.

use crate::error::{invalid, Result};

/// Uniform lattice on `[x_min, x_max] x [0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    x_min: f64,
    x_max: f64,
    nx: usize,
    horizon: f64,
    nt: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, nx: usize, horizon: f64, nt: usize) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() {
            return Err(invalid("grid.x_min/x_max", "bounds must be finite"));
        }
        if x_min >= x_max {
            return Err(invalid(
                "grid.x_min",
                format!("x_min = {x_min} must be below x_max = {x_max}"),
            ));
        }
        if nx < 3 {
            return Err(invalid("grid.nx", format!("need at least 3 interior nodes, got {nx}")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(invalid("grid.horizon", format!("horizon must be positive, got {horizon}")));
        }
        if nt < 1 {
            return Err(invalid("grid.nt", "need at least one time step"));
        }
        Ok(Self {
            x_min,
            x_max,
            nx,
            horizon,
            nt,
        })
    }

    /// Default truncation `[x0/8, 8 x0]` around a positive initial wealth.
    pub fn around(x0: f64, nx: usize, horizon: f64, nt: usize) -> Result<Self> {
        if !(x0.is_finite() && x0 > 0.0) {
            return Err(invalid("x0", format!("default domain needs x0 > 0, got {x0}")));
        }
        Self::new(x0 / 8.0, 8.0 * x0, nx, horizon, nt)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    /// Interior node count.
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of time steps; there are `nt + 1` time levels.
    pub fn nt(&self) -> usize {
        self.nt
    }

    /// Total node count including the two boundary nodes.
    pub fn n_nodes(&self) -> usize {
        self.nx + 2
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx + 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.nt as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n_nodes() {
            self.x_max
        } else {
            self.x_min + i as f64 * self.dx()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| self.node(i)).collect()
    }

    pub fn time(&self, n: usize) -> f64 {
        if n == self.nt {
            self.horizon
        } else {
            n as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.nt).map(|n| self.time(n)).collect()
    }

    /// Trapezoidal quadrature weight of node `i` (half cells at the edges).
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.n_nodes() {
            0.5 * self.dx()
        } else {
            self.dx()
        }
    }

    pub fn contains_open(&self, x: f64) -> bool {
        x > self.x_min && x < self.x_max
    }

    /// Same spatial lattice, different time discretization.
    pub fn with_time(&self, horizon: f64, nt: usize) -> Result<Self> {
        Self::new(self.x_min, self.x_max, self.nx, horizon, nt)
    }

    /// Locate `x` in the lattice: returns the left node index and the
    /// fractional offset in `[0, 1]`, clamping outside points to the edges.
    pub(crate) fn locate(&self, x: f64) -> (usize, f64) {
        let last = self.n_nodes() - 1;
        let s = (x - self.x_min) / self.dx();
        if s <= 0.0 {
            return (0, 0.0);
        }
        if s >= last as f64 {
            return (last - 1, 1.0);
        }
        let i = (s.floor() as usize).min(last - 1);
        (i, s - i as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_nodes() {
        let g = GridSpec::new(0.0, 1.0, 9, 1.0, 4).unwrap();
        assert_eq!(g.n_nodes(), 11);
        assert!((g.dx() - 0.1).abs() < 1e-15);
        assert_eq!(g.node(10), 1.0);
        assert!((g.node(3) - 0.3).abs() < 1e-15);
        assert_eq!(g.time(4), 1.0);
        let total: f64 = (0..g.n_nodes()).map(|i| g.weight(i)).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(1.0, 1.0, 10, 1.0, 10).is_err());
        assert!(GridSpec::new(0.0, 1.0, 2, 1.0, 10).is_err());
        assert!(GridSpec::new(0.0, 1.0, 10, 1.0, 0).is_err());
        assert!(GridSpec::new(0.0, 1.0, 10, -1.0, 10).is_err());
        assert!(GridSpec::new(f64::NAN, 1.0, 10, 1.0, 10).is_err());
    }

    #[test]
    fn default_domain() {
        let g = GridSpec::around(2.0, 10, 1.0, 10).unwrap();
        assert_eq!(g.x_min(), 0.25);
        assert_eq!(g.x_max(), 16.0);
        assert!(GridSpec::around(-1.0, 10, 1.0, 10).is_err());
    }

    #[test]
    fn locate_clamps() {
        let g = GridSpec::new(0.0, 1.0, 9, 1.0, 4).unwrap();
        assert_eq!(g.locate(-3.0), (0, 0.0));
        assert_eq!(g.locate(5.0), (9, 1.0));
        let (i, f) = g.locate(0.25);
        assert_eq!(i, 2);
        assert!((f - 0.5).abs() < 1e-12);
    }
}
