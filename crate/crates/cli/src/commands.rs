//! The six subcommands. Each writes its CSVs into the output directory and
//! returns their paths.

use std::fmt;
use std::path::{Path, PathBuf};

use merton_cov::adjoint::solve_adjoint;
use merton_cov::fokker_planck::{expected_utility, mollified_delta, solve_fp};
use merton_cov::hj_solver::{hj_residual_with, solve_hj};
use merton_cov::montecarlo::{density_histogram, estimate_expected_utility, simulate_terminal_wealth};
use merton_cov::optimizer::{optimize, SweepOutcome};
use merton_cov::oracle::{merton_reference, weak_form_check, Constant, Identity, Square, TestFunction};
use merton_cov::{Error, FieldFrame, FieldTrajectory, GridSpec};

use crate::config::{ConfigError, ControlSpec, RunConfig};
use crate::output::{field_table, num, report_table, Table};

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Solver(Error),
    NoConvergence { iterations: usize },
    Validation { failed: Vec<String> },
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Solver(_) | Self::Io(_) => 3,
            Self::NoConvergence { .. } => 4,
            Self::Validation { .. } => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(e) => write!(f, "config error: {e}"),
            Self::Solver(e) => write!(f, "solver error: {e}"),
            Self::NoConvergence { iterations } => write!(
                f,
                "sweep did not converge after {iterations} iterations; partial results written"
            ),
            Self::Validation { failed } => write!(f, "validation failed: {}", failed.join(", ")),
            Self::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::Solver(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.into())
    }
}

type Out = Result<Vec<PathBuf>, CliError>;

fn negated(traj: &FieldTrajectory) -> Result<FieldTrajectory, Error> {
    let frames = traj.frames().iter().map(|f| f.scaled(-1.0)).collect::<Result<Vec<_>, _>>()?;
    FieldTrajectory::new(*traj.grid(), frames)
}

fn file_error(path: &Path, line: Option<u64>, message: String) -> CliError {
    CliError::Config(ConfigError {
        source: path.display().to_string(),
        line: line.map(|l| l as usize),
        key: None,
        message,
    })
}

/// Reads a `t,x,alpha` table laid out like `control.csv` on `grid`.
pub fn read_control_file(path: &Path, grid: &GridSpec) -> Result<FieldTrajectory, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| file_error(path, None, e.to_string()))?;
    let header = reader.headers().map_err(|e| file_error(path, Some(1), e.to_string()))?.clone();
    if header.len() < 3 || &header[0] != "t" || &header[1] != "x" || &header[2] != "alpha" {
        return Err(file_error(path, Some(1), "header must start with t,x,alpha".into()));
    }
    let n_nodes = grid.n_nodes();
    let expected = (grid.nt() + 1) * n_nodes;
    let mut values = Vec::with_capacity(expected);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);
    for record in reader.records() {
        let record = record.map_err(|e| file_error(path, e.position().map(|p| p.line()), e.to_string()))?;
        let line = record.position().map(|p| p.line());
        let k = values.len();
        if k == expected {
            return Err(file_error(path, line, format!("more than {expected} rows for this grid")));
        }
        let field = |c: usize| -> Result<f64, CliError> {
            let s = record.get(c).unwrap_or("");
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| file_error(path, line, format!("column {} is not a finite number: `{s}`", c + 1)))
        };
        let (t, x, a) = (field(0)?, field(1)?, field(2)?);
        let (n, i) = (k / n_nodes, k % n_nodes);
        if !close(t, grid.time(n)) || !close(x, grid.node(i)) {
            return Err(file_error(
                path,
                line,
                format!("expected (t, x) = ({}, {}), got ({t}, {x})", grid.time(n), grid.node(i)),
            ));
        }
        values.push(a);
    }
    if values.len() != expected {
        return Err(file_error(
            path,
            None,
            format!("expected {expected} rows for this grid, got {}", values.len()),
        ));
    }
    let frames = values
        .chunks(n_nodes)
        .map(|c| FieldFrame::new(*grid, c.to_vec()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FieldTrajectory::new(*grid, frames)?)
}

pub fn control_trajectory(cfg: &RunConfig) -> Result<FieldTrajectory, CliError> {
    let g = cfg.grid;
    Ok(match &cfg.control {
        ControlSpec::Zero => FieldTrajectory::constant_in_time(FieldFrame::zeros(g)),
        ControlSpec::Linear(s) => {
            let s = *s;
            FieldTrajectory::from_fn(g, move |_, x| s * x)?
        }
        ControlSpec::Merton => {
            let gamma = cfg.utility.crra_gamma().expect("checked when the config was parsed");
            merton_reference(&cfg.market, gamma, &g)?.control_trajectory(&g)?
        }
        ControlSpec::Hj => solve_hj(&cfg.market, &cfg.utility, &g, &cfg.hj)?.control,
        ControlSpec::File(p) => read_control_file(p, &g)?,
    })
}

fn prepare(cfg: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    Ok(())
}

pub fn cmd_fp(cfg: &RunConfig) -> Out {
    prepare(cfg)?;
    let control = control_trajectory(cfg)?;
    let p0 = mollified_delta(cfg.x0, &cfg.grid)?;
    let (p, report) = solve_fp(&p0, &control, &cfg.market)?;
    let j = expected_utility(p.terminal(), &cfg.utility);
    let dir = &cfg.out_dir;
    let mut diag = Table::new(&["t", "mass", "mass_drift", "min_density"]);
    for (n, f) in p.frames().iter().enumerate() {
        diag.push(vec![
            num(cfg.grid.time(n)),
            num(report.objective_history[n]),
            num(report.residual_history[n]),
            num(f.min()),
        ]);
    }
    Ok(vec![
        field_table(&["p"], &[&p]).write(dir, "fp_density.csv")?,
        diag.write(dir, "fp_diagnostics.csv")?,
        field_table(&["alpha"], &[&control]).write(dir, "fp_control.csv")?,
        report_table(&report, &[("objective", j)]).write(dir, "fp_report.csv")?,
    ])
}

pub fn cmd_adjoint(cfg: &RunConfig) -> Out {
    prepare(cfg)?;
    let control = control_trajectory(cfg)?;
    let (lam, report) = solve_adjoint(&control, &cfg.market, &cfg.utility)?;
    let value = negated(&lam)?;
    let v0 = value.initial().interpolate(cfg.x0);
    let dir = &cfg.out_dir;
    Ok(vec![
        field_table(&["lambda", "value"], &[&lam, &value]).write(dir, "adjoint_value.csv")?,
        report_table(&report, &[("value_at_x0", v0)]).write(dir, "adjoint_report.csv")?,
    ])
}

pub fn cmd_hj(cfg: &RunConfig) -> Out {
    prepare(cfg)?;
    let sol = solve_hj(&cfg.market, &cfg.utility, &cfg.grid, &cfg.hj)?;
    let value = negated(&sol.lambda)?;
    let res = hj_residual_with(&sol.lambda, &cfg.market, &cfg.hj.control);
    let g = cfg.grid;
    let mut residual = Table::new(&["t", "x", "residual", "scored"]);
    for n in 0..=g.nt() {
        for i in 0..g.n_nodes() {
            residual.push(vec![
                num(g.time(n)),
                num(g.node(i)),
                num(res.field.frame(n).get(i)),
                res.scored[n][i].to_string(),
            ]);
        }
    }
    let extra = [
        ("value_at_x0", value.initial().interpolate(cfg.x0)),
        ("hj_residual_max", res.max_scored(None)),
    ];
    let dir = &cfg.out_dir;
    Ok(vec![
        field_table(&["lambda", "value"], &[&sol.lambda, &value]).write(dir, "hj_value.csv")?,
        field_table(&["alpha"], &[&sol.control]).write(dir, "hj_control.csv")?,
        residual.write(dir, "hj_residual.csv")?,
        report_table(&sol.report, &extra).write(dir, "hj_report.csv")?,
    ])
}

fn write_sweep(cfg: &RunConfig, out: &SweepOutcome) -> Out {
    let dir = &cfg.out_dir;
    let value = negated(&out.lambda)?;
    let mut history = Table::new(&["iter", "J"]);
    for (k, j) in out.report.objective_history.iter().enumerate() {
        history.push(vec![k.to_string(), num(*j)]);
    }
    let mut tables = vec![
        (field_table(&["alpha"], &[&out.control]), "control.csv"),
        (field_table(&["lambda", "value"], &[&out.lambda, &value]), "value.csv"),
        (field_table(&["p"], &[&out.density]), "density.csv"),
        (history, "objective_history.csv"),
        (report_table(&out.report, &[]), "report.csv"),
    ];
    if !out.report.converged {
        tables = tables.into_iter().map(|(t, name)| (t.flag("partial", "true"), name)).collect();
    }
    tables
        .iter()
        .map(|(t, name)| t.write(dir, name).map_err(CliError::from))
        .collect()
}

/// Writes the sweep results; on exhausted iterations the files are still
/// written, each with a `partial` column, and the error follows.
pub fn cmd_optimize(cfg: &RunConfig) -> Out {
    prepare(cfg)?;
    match optimize(&cfg.market, &cfg.utility, &cfg.grid, cfg.x0, &cfg.sweep) {
        Ok(out) => write_sweep(cfg, &out),
        Err(Error::NoConvergence(out)) => {
            write_sweep(cfg, &out)?;
            Err(CliError::NoConvergence {
                iterations: out.report.iterations,
            })
        }
        Err(e) => Err(e.into()),
    }
}

pub fn cmd_mc(cfg: &RunConfig) -> Out {
    prepare(cfg)?;
    let control = control_trajectory(cfg)?;
    let xs = simulate_terminal_wealth(&control, &cfg.market, cfg.x0, &cfg.mc)?;
    let est = estimate_expected_utility(&xs, &cfg.utility)?;
    let hist = density_histogram(&xs, &cfg.grid)?;
    let mut summary = Table::new(&["name", "value"]);
    summary.push(vec!["mean".into(), num(est.mean)]);
    summary.push(vec!["stderr".into(), num(est.stderr)]);
    summary.push(vec!["n".into(), est.n.to_string()]);
    summary.push(vec!["seed".into(), cfg.mc.seed.to_string()]);
    let mut density = Table::new(&["x", "density"]);
    for (i, x) in cfg.grid.nodes().into_iter().enumerate() {
        density.push(vec![num(x), num(hist.get(i))]);
    }
    let dir = &cfg.out_dir;
    Ok(vec![
        summary.write(dir, "mc_estimate.csv")?,
        density.write(dir, "mc_histogram.csv")?,
    ])
}

/// One row of `validation.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
}

impl Check {
    pub fn pass(&self) -> bool {
        self.value <= self.threshold
    }
}

/// Mass conservation, the three moment identities, and the pairwise
/// agreement of forward objective, adjoint value and Monte Carlo estimate
/// under the configured control.
pub fn validation_checks(cfg: &RunConfig) -> Result<Vec<Check>, CliError> {
    let control = control_trajectory(cfg)?;
    let p0 = mollified_delta(cfg.x0, &cfg.grid)?;
    let (p, report) = solve_fp(&p0, &control, &cfg.market)?;
    let pde = expected_utility(p.terminal(), &cfg.utility);
    let (lam, _) = solve_adjoint(&control, &cfg.market, &cfg.utility)?;
    let adj = -lam.initial().interpolate(cfg.x0);
    let xs = simulate_terminal_wealth(&control, &cfg.market, cfg.x0, &cfg.mc)?;
    let est = estimate_expected_utility(&xs, &cfg.utility)?;
    let check = |name: &str, value: f64, threshold: f64| Check {
        name: name.to_string(),
        value,
        threshold,
    };
    let mut checks = vec![check("mass_drift", report.get("mass_drift").unwrap_or(f64::NAN), 1e-8)];
    let tests: [(&str, &dyn TestFunction, f64); 3] = [
        ("weak_form_one", &Constant, 1e-8),
        ("weak_form_x", &Identity, 1e-3),
        ("weak_form_x2", &Square, 1e-3),
    ];
    for (name, f, tol) in tests {
        checks.push(check(name, weak_form_check(&p, &control, &cfg.market, f)?, tol));
    }
    let mc_tol = |reference: f64| (3.0 * est.stderr).max(0.01 * reference.abs());
    checks.push(check("triangle_pde_adjoint", (pde - adj).abs(), 0.01 * adj.abs()));
    checks.push(check("triangle_pde_mc", (pde - est.mean).abs(), mc_tol(pde)));
    checks.push(check("triangle_adjoint_mc", (adj - est.mean).abs(), mc_tol(adj)));
    Ok(checks)
}

pub fn cmd_validate(cfg: &RunConfig) -> Out {
    prepare(cfg)?;
    let checks = validation_checks(cfg)?;
    let mut t = Table::new(&["name", "value", "threshold", "pass"]);
    for c in &checks {
        t.push(vec![c.name.clone(), num(c.value), num(c.threshold), c.pass().to_string()]);
    }
    let path = t.write(&cfg.out_dir, "validation.csv")?;
    let failed: Vec<String> = checks.iter().filter(|c| !c.pass()).map(|c| c.name.clone()).collect();
    if failed.is_empty() {
        Ok(vec![path])
    } else {
        Err(CliError::Validation { failed })
    }
}
