use crate::error::{invalid, Result};

/// Constant-coefficient market: risk-free rate, stock drift and volatility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketModel {
    r: f64,
    mu: f64,
    sigma: f64,
}

impl MarketModel {
    pub fn new(r: f64, mu: f64, sigma: f64) -> Result<Self> {
        if !r.is_finite() {
            return Err(invalid("market.r", format!("must be finite, got {r}")));
        }
        if !mu.is_finite() {
            return Err(invalid("market.mu", format!("must be finite, got {mu}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(invalid("market.sigma", format!("must be positive, got {sigma}")));
        }
        Ok(Self { r, mu, sigma })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `mu - r`.
    pub fn excess_return(&self) -> f64 {
        self.mu - self.r
    }

    /// Wealth drift `r x + (mu - r) alpha`.
    pub fn drift(&self, x: f64, alpha: f64) -> f64 {
        self.r * x + self.excess_return() * alpha
    }

    /// Wealth diffusion amplitude `sigma alpha`.
    pub fn diffusion(&self, alpha: f64) -> f64 {
        self.sigma * alpha
    }
}
