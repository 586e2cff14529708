//! Scalar fields on the lattice: one time level ([`FieldFrame`]) or all of
//! them ([`FieldTrajectory`]).

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::sum::NeumaierSum;

/// Real values at every spatial node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFrame {
    grid: GridSpec,
    values: Vec<f64>,
}

impl FieldFrame {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::LengthMismatch {
                expected: grid.n_nodes(),
                actual: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Panics if `c` is not finite.
    pub fn constant(grid: GridSpec, c: f64) -> Self {
        assert!(c.is_finite(), "constant field must be finite");
        Self {
            grid,
            values: vec![c; grid.n_nodes()],
        }
    }

    /// Sample `f` at every node.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().into_iter().map(f).collect())
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| self.grid.weight(i) * v)
            .collect::<NeumaierSum>()
            .value()
    }

    /// Trapezoidal integral of `f(x) * self(x)`.
    pub fn integrate_against(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| self.grid.weight(i) * f(self.grid.node(i)) * v)
            .collect::<NeumaierSum>()
            .value()
    }

    pub fn total_mass(&self) -> f64 {
        self.integral()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Node-wise map; the result is re-validated for finiteness.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(self.grid.node(i), v))
            .collect();
        Self::new(self.grid, values)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        self.map(|_, v| c * v)
    }

    pub(crate) fn ensure_same_grid(&self, other: &FieldFrame) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Linear interpolation in `x`, clamped to the domain.
    pub fn interpolate(&self, x: f64) -> f64 {
        let (i, s) = self.grid.locate(x);
        (1.0 - s) * self.values[i] + s * self.values[i + 1]
    }
}

/// One frame per time level `0..=nt`, all on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTrajectory {
    grid: GridSpec,
    frames: Vec<FieldFrame>,
}

impl FieldTrajectory {
    pub fn new(grid: GridSpec, frames: Vec<FieldFrame>) -> Result<Self> {
        if frames.len() != grid.nt() + 1 {
            return Err(Error::LengthMismatch {
                expected: grid.nt() + 1,
                actual: frames.len(),
            });
        }
        if frames.iter().any(|f| f.grid != grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, frames })
    }

    /// The same frame repeated at every level.
    pub fn constant_in_time(frame: FieldFrame) -> Self {
        let grid = frame.grid;
        Self {
            grid,
            frames: vec![frame; grid.nt() + 1],
        }
    }

    /// Sample `f(t, x)` on every lattice point.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let frames = (0..=grid.nt())
            .map(|n| {
                let t = grid.time(n);
                FieldFrame::from_fn(grid, |x| f(t, x))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, frames)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn frames(&self) -> &[FieldFrame] {
        &self.frames
    }

    pub fn frame(&self, n: usize) -> &FieldFrame {
        &self.frames[n]
    }

    pub fn initial(&self) -> &FieldFrame {
        &self.frames[0]
    }

    pub fn terminal(&self) -> &FieldFrame {
        &self.frames[self.grid.nt()]
    }

    pub fn levels(&self) -> usize {
        self.frames.len()
    }

    pub fn min(&self) -> f64 {
        self.frames.iter().map(FieldFrame::min).fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.frames.iter().map(FieldFrame::max_abs).fold(0.0, f64::max)
    }

    /// Bilinear interpolation in `(t, x)`, clamped to the lattice.
    pub fn sample(&self, t: f64, x: f64) -> f64 {
        let nt = self.grid.nt();
        let st = (t / self.grid.dt()).clamp(0.0, nt as f64);
        let n = (st.floor() as usize).min(nt - 1);
        let wt = st - n as f64;
        let (i, wx) = self.grid.locate(x);
        let lo = &self.frames[n].values;
        let hi = &self.frames[n + 1].values;
        let a = (1.0 - wx) * lo[i] + wx * lo[i + 1];
        let b = (1.0 - wx) * hi[i] + wx * hi[i + 1];
        (1.0 - wt) * a + wt * b
    }

    pub(crate) fn ensure_same_grid(&self, other: &FieldTrajectory) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}
