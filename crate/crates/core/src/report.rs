use std::collections::BTreeMap;

/// Iteration counts, histories and named diagnostics from a solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    pub objective_history: Vec<f64>,
    pub residual_history: Vec<f64>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl SolveReport {
    pub fn set(&mut self, name: &str, value: f64) {
        self.diagnostics.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.diagnostics.get(name).copied()
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.objective_history.last().copied()
    }
}

pub mod keys {
    pub const MASS_DRIFT: &str = "mass_drift";
    pub const MIN_DENSITY: &str = "min_density";
    pub const MIN_LAMBDA_XX: &str = "min_lambda_xx";
    pub const CLIP_FRACTION: &str = "clip_fraction";
    pub const FLOOR_FRACTION: &str = "floor_fraction";
    pub const CONTROL_RESIDUAL: &str = "control_residual";
    pub const CONTROL_CHANGE: &str = "control_change";
    pub const OBJECTIVE_CHANGE: &str = "objective_change";
}
