//! Terminal utility functions.

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Concave, nondecreasing utility of terminal wealth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UtilitySpec {
    /// `x^gamma / gamma` on `x > 0`, `gamma < 1`, `gamma != 0`.
    Crra { gamma: f64 },
    /// `ln x` on `x > 0`.
    Log,
    /// `-exp(-a x) / a` on the whole line, `a > 0`.
    Exponential { a: f64 },
}

impl UtilitySpec {
    pub fn crra(gamma: f64) -> Result<Self> {
        let u = Self::Crra { gamma };
        u.validate()?;
        Ok(u)
    }

    pub fn exponential(a: f64) -> Result<Self> {
        let u = Self::Exponential { a };
        u.validate()?;
        Ok(u)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Crra { gamma } => {
                if !gamma.is_finite() || gamma >= 1.0 || gamma == 0.0 {
                    return Err(Error::BadUtility(format!(
                        "CRRA needs gamma < 1 and gamma != 0, got {gamma}"
                    )));
                }
            }
            Self::Log => {}
            Self::Exponential { a } => {
                if !(a.is_finite() && a > 0.0) {
                    return Err(Error::BadUtility(format!(
                        "exponential utility needs a > 0, got {a}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_defined(&self, x: f64) -> bool {
        match self {
            Self::Crra { .. } | Self::Log => x > 0.0 && x.is_finite(),
            Self::Exponential { .. } => x.is_finite(),
        }
    }

    /// Checks the utility is defined at every node of `grid`.
    pub fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        self.validate()?;
        match (0..grid.n_nodes()).map(|i| grid.node(i)).find(|&x| !self.is_defined(x)) {
            Some(x) => Err(Error::DomainError { x }),
            None => Ok(()),
        }
    }

    /// `U(x)`; NaN outside the domain.
    pub fn value(&self, x: f64) -> f64 {
        if !self.is_defined(x) {
            return f64::NAN;
        }
        match *self {
            Self::Crra { gamma } => x.powf(gamma) / gamma,
            Self::Log => x.ln(),
            Self::Exponential { a } => -(-a * x).exp() / a,
        }
    }

    pub fn d1(&self, x: f64) -> f64 {
        if !self.is_defined(x) {
            return f64::NAN;
        }
        match *self {
            Self::Crra { gamma } => x.powf(gamma - 1.0),
            Self::Log => 1.0 / x,
            Self::Exponential { a } => (-a * x).exp(),
        }
    }

    pub fn d2(&self, x: f64) -> f64 {
        if !self.is_defined(x) {
            return f64::NAN;
        }
        match *self {
            Self::Crra { gamma } => (gamma - 1.0) * x.powf(gamma - 2.0),
            Self::Log => -1.0 / (x * x),
            Self::Exponential { a } => -a * (-a * x).exp(),
        }
    }

    /// `Some(gamma)` for CRRA utilities.
    pub fn crra_gamma(&self) -> Option<f64> {
        match *self {
            Self::Crra { gamma } => Some(gamma),
            _ => None,
        }
    }
}
