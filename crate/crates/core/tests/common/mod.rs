#![allow(dead_code)]

use merton_cov::{GridSpec, MarketModel, UtilitySpec};

pub fn market() -> MarketModel {
    MarketModel::new(0.03, 0.08, 0.2).unwrap()
}

pub fn utility() -> UtilitySpec {
    UtilitySpec::Crra { gamma: 0.5 }
}

pub fn grid(n: usize) -> GridSpec {
    GridSpec::around(1.0, n, 1.0, n).unwrap()
}

/// `sum_i w_i |u_i - v_i|`.
pub fn l1(grid: &GridSpec, u: &[f64], v: &[f64]) -> f64 {
    (0..grid.n_nodes()).map(|i| grid.weight(i) * (u[i] - v[i]).abs()).sum()
}
