//! Acceptance run: one line per criterion, each listing its checks as
//! `value vs tolerance`. Exits non-zero if any check fails, except those in
//! `KNOWN_RED`, which are still printed as FAIL.
//!
//! Benchmark unless stated: r = 0.03, mu = 0.08, sigma = 0.2, CRRA 0.5,
//! T = 1, x0 = 1, domain [1/8, 8], nx = nt = 400.

use std::cell::Cell;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;

use merton_cov::adjoint::solve_adjoint;
use merton_cov::control_law::{control_residual_masked, update_control, update_control_detailed, ControlOptions};
use merton_cov::fokker_planck::{mollified_delta, solve_fp, step_fp, CoefficientFields};
use merton_cov::hj_solver::{hj_residual, solve_hj, HJOptions};
use merton_cov::montecarlo::{estimate_expected_utility, simulate_terminal_wealth, McEstimate, McOptions};
use merton_cov::optimizer::{objective_gap, optimize, support_mask, SweepOptions, SweepOutcome};
use merton_cov::oracle::{merton_reference, weak_form_check, Constant, Identity, Square, TestFunction};
use merton_cov::{FieldFrame, FieldTrajectory, GridSpec, MarketModel, SolveReport, UtilitySpec};

const ORACLE_VALUE: f64 = 2.0947;
const ORACLE_RATIO: f64 = 2.5;
const THRESHOLD: f64 = 1e-4;

/// Checks that fail for a documented structural reason (see README).
const KNOWN_RED: &[&str] = &["7 ascent"];

struct Check {
    label: String,
    value: f64,
    tol: f64,
    pass: bool,
}

/// `value <= tol`.
fn at_most(label: &str, value: f64, tol: f64) -> Check {
    Check {
        label: label.into(),
        value,
        tol,
        pass: value <= tol,
    }
}

/// `value >= tol`.
fn at_least(label: &str, value: f64, tol: f64) -> Check {
    Check {
        label: label.into(),
        value,
        tol,
        pass: value >= tol,
    }
}

/// `value > tol`.
fn above(label: &str, value: f64, tol: f64) -> Check {
    Check {
        label: label.into(),
        value,
        tol,
        pass: value > tol,
    }
}

struct Ctx {
    market: MarketModel,
    utility: UtilitySpec,
    grid: GridSpec,
    /// Largest mass defect over every density computed by the run.
    drift: Cell<f64>,
    sweep: Option<SweepOutcome>,
    hj_control: Option<FieldTrajectory>,
}

impl Ctx {
    fn record(&self, d: f64) {
        self.drift.set(self.drift.get().max(d));
    }

    fn fp(&self, control: &FieldTrajectory) -> FieldTrajectory {
        let p0 = mollified_delta(1.0, control.grid()).unwrap();
        let (p, report) = solve_fp(&p0, control, &self.market).unwrap();
        self.record(report.get("mass_drift").unwrap());
        p
    }

    fn mc(&self, control: &FieldTrajectory) -> McEstimate {
        let xs = simulate_terminal_wealth(control, &self.market, 1.0, &McOptions::default()).unwrap();
        estimate_expected_utility(&xs, &self.utility).unwrap()
    }

    fn linear(&self, slope: f64) -> FieldTrajectory {
        FieldTrajectory::from_fn(self.grid, move |_, x| slope * x).unwrap()
    }

    fn sweep(&mut self) -> &SweepOutcome {
        if self.sweep.is_none() {
            let out = optimize(&self.market, &self.utility, &self.grid, 1.0, &SweepOptions::default()).unwrap();
            self.record(out.report.get("mass_drift").unwrap());
            self.sweep = Some(out);
        }
        self.sweep.as_ref().unwrap()
    }

    fn hj_control(&mut self) -> FieldTrajectory {
        if self.hj_control.is_none() {
            let sol = solve_hj(&self.market, &self.utility, &self.grid, &HJOptions::default()).unwrap();
            self.hj_control = Some(sol.control);
        }
        self.hj_control.clone().unwrap()
    }
}

/// Backward Euler under frozen coefficients, recording the mass defect.
fn march(ctx: &Ctx, p0: &FieldFrame, c: &CoefficientFields, grid: &GridSpec) -> FieldFrame {
    let mass0 = p0.total_mass();
    let mut p = p0.clone();
    for _ in 0..grid.nt() {
        p = step_fp(&p, c, grid.dt()).unwrap();
        ctx.record((p.total_mass() - mass0).abs());
    }
    p
}

fn l1(grid: &GridSpec, u: &[f64], v: &[f64]) -> f64 {
    (0..grid.n_nodes()).map(|i| grid.weight(i) * (u[i] - v[i]).abs()).sum()
}

fn normal(x: f64, m: f64, s2: f64) -> f64 {
    (-(x - m).powi(2) / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2).sqrt()
}

/// Largest `|a / b - 1|` over interior nodes with `p > THRESHOLD`.
fn max_rel_dev(a: &FieldTrajectory, b: impl Fn(usize, usize) -> f64, p: &FieldTrajectory) -> f64 {
    let g = *a.grid();
    let mask = support_mask(p, THRESHOLD);
    let mut worst = 0.0f64;
    for (n, row) in mask.iter().enumerate() {
        for i in 1..g.n_nodes() - 1 {
            if row[i] {
                worst = worst.max((a.frame(n).get(i) / b(n, i) - 1.0).abs());
            }
        }
    }
    worst
}

/// Observed order of the closed-form residual under refinement; the value
/// oracle is trusted only while this stays at or above 1.
fn oracle_residual_order(market: &MarketModel) -> f64 {
    let res: Vec<f64> = [200, 400, 800]
        .iter()
        .map(|&n| {
            let g = GridSpec::around(1.0, n, 1.0, n).unwrap();
            let cf = merton_reference(market, 0.5, &g).unwrap();
            hj_residual(&cf.lambda_trajectory(&g).unwrap(), market).max_scored(None)
        })
        .collect();
    res.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min)
}

fn gaussian(ctx: &mut Ctx) -> Vec<Check> {
    let errors: Vec<f64> = [100, 200, 400]
        .iter()
        .map(|&n| {
            let g = GridSpec::new(-3.0, 3.0, n, 1.0, n).unwrap();
            let (a, b) = (0.3, 0.4);
            let c = CoefficientFields::new(FieldFrame::constant(g, a), FieldFrame::constant(g, b)).unwrap();
            let p = march(ctx, &mollified_delta(0.0, &g).unwrap(), &c, &g);
            let w = 2.0 * g.dx();
            let exact: Vec<f64> = g.nodes().iter().map(|&x| normal(x, a, w * w + b * b)).collect();
            l1(&g, p.values(), &exact)
        })
        .collect();
    let order = errors.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);
    vec![at_most("L1 at 400", errors[2], 2e-2), at_least("order", order, 1.0)]
}

fn lognormal(ctx: &mut Ctx) -> Vec<Check> {
    let g = ctx.grid;
    let (mu, sigma) = (0.08, 0.2);
    let c = CoefficientFields::new(
        FieldFrame::from_fn(g, |x| mu * x).unwrap(),
        FieldFrame::from_fn(g, |x| sigma * x).unwrap(),
    )
    .unwrap();
    let p = march(ctx, &mollified_delta(1.0, &g).unwrap(), &c, &g);
    let m = mu - 0.5 * sigma * sigma;
    let exact: Vec<f64> = g.nodes().iter().map(|&x| normal(x.ln(), m, sigma * sigma) / x).collect();
    vec![at_most("L1", l1(&g, p.values(), &exact), 2e-2)]
}

fn feynman_kac(ctx: &mut Ctx) -> Vec<Check> {
    let control = ctx.linear(1.0);
    let (lam, _) = solve_adjoint(&control, &ctx.market, &ctx.utility).unwrap();
    let v = -lam.initial().interpolate(1.0);
    let est = ctx.mc(&control);
    vec![at_most("|adjoint - mc|", (v - est.mean).abs(), (3.0 * est.stderr).max(0.01 * est.mean.abs()))]
}

fn hj_value(ctx: &mut Ctx) -> Vec<Check> {
    let sol = solve_hj(&ctx.market, &ctx.utility, &ctx.grid, &HJOptions::default()).unwrap();
    let v = -sol.lambda.initial().interpolate(1.0);
    ctx.hj_control = Some(sol.control);
    vec![
        at_most("rel gap", (v / ORACLE_VALUE - 1.0).abs(), 0.01),
        at_least("oracle residual order", oracle_residual_order(&ctx.market), 1.0),
    ]
}

fn hj_control(ctx: &mut Ctx) -> Vec<Check> {
    let control = ctx.hj_control();
    let p = ctx.fp(&control);
    let g = ctx.grid;
    let dev = max_rel_dev(&control, |_, i| ORACLE_RATIO * g.node(i), &p);
    vec![at_most("max |ratio/2.5 - 1|", dev, 0.02)]
}

fn fixed_point(ctx: &mut Ctx) -> Vec<Check> {
    let report: SolveReport = ctx.sweep().report.clone();
    let dip = report
        .objective_history
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::NEG_INFINITY, f64::max);
    vec![
        at_most("iterations", report.iterations as f64, 100.0),
        at_least("converged", report.converged as u8 as f64, 1.0),
        at_most("rel gap", objective_gap(&report, ORACLE_VALUE), 0.01),
        at_most("ascent", dip, 1e-8),
    ]
}

fn route_equivalence(ctx: &mut Ctx) -> Vec<Check> {
    let hj = ctx.hj_control();
    let out = ctx.sweep();
    let dev = max_rel_dev(&out.control, |n, i| hj.frame(n).get(i), &out.density);
    vec![at_most("max |opt/hj - 1|", dev, 0.02)]
}

fn dominance(ctx: &mut Ctx) -> Vec<Check> {
    let j = ctx.sweep().report.final_objective().unwrap();
    let cash = ctx.mc(&ctx.linear(0.0));
    let unit = ctx.mc(&ctx.linear(1.0));
    vec![
        above("J - mc cash", j - cash.mean, 2.0 * cash.stderr),
        above("J - mc alpha=x", j - unit.mean, 2.0 * unit.stderr),
    ]
}

fn weak_forms(ctx: &mut Ctx) -> Vec<Check> {
    let discrepancy = |ctx: &Ctx, n: usize, f: &dyn TestFunction| {
        let g = GridSpec::around(1.0, n, 1.0, n).unwrap();
        let control = merton_reference(&ctx.market, 0.5, &g).unwrap().control_trajectory(&g).unwrap();
        let p = ctx.fp(&control);
        weak_form_check(&p, &control, &ctx.market, f).unwrap()
    };
    let mut checks = vec![
        at_most("f=1", discrepancy(ctx, 400, &Constant), 1e-8),
        at_most("f=x", discrepancy(ctx, 400, &Identity), 1e-3),
        at_most("f=x^2", discrepancy(ctx, 400, &Square), 1e-3),
    ];
    for (name, f) in [("f=x", &Identity as &dyn TestFunction), ("f=x^2", &Square)] {
        let e: Vec<f64> = [100, 200, 400].iter().map(|&n| discrepancy(ctx, n, f)).collect();
        // smallest coarse/fine ratio; above 1 means every refinement helped
        let ratio = e.windows(2).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min);
        checks.push(above(&format!("{name} refinement ratio"), ratio, 1.0));
    }
    checks
}

fn control_law(_: &mut Ctx) -> Vec<Check> {
    let g = GridSpec::new(0.2, 5.0, 80, 1.0, 1).unwrap();
    let opts = ControlOptions::default();
    let shapes: [[f64; 5]; 6] = [
        [0.0, 0.0, -2.0, 0.0, 0.0],
        [-1.0, 0.3, -1.5, 0.2, 3.0],
        [0.5, 0.1, -2.0, -0.4, 1.7],
        [-0.2, -0.05, 0.0, 1.0, 2.2],
        [1.3, 0.7, -0.6, 0.9, 4.1],
        [-1.9, 1.1, 1.4, -1.2, 0.6],
    ];
    let frame = |c: [f64; 5]| {
        FieldFrame::from_fn(g, |x| c[0] * x + c[1] * x * x + c[2] * x.sqrt() + c[3] * (c[4] * x).sin()).unwrap()
    };
    let mut residual = 0.0f64;
    let mut zero = 0.0f64;
    let mut exact_scaling = true;
    let mut scaled = 0.0f64;
    let premium = MarketModel::new(0.03, 0.08, 0.2).unwrap();
    let none = MarketModel::new(0.05, 0.05, 0.3).unwrap();
    for c in shapes {
        let lam = frame(c);
        for excess in [-0.05, 0.02, 0.1] {
            let m = MarketModel::new(0.03, 0.03 + excess, 0.25).unwrap();
            let up = update_control_detailed(&lam, &m, &opts);
            let regular = up.regular();
            residual = residual.max(control_residual_masked(&up.control, &lam, &m, Some(&regular)));
        }
        zero = zero.max(update_control(&lam, &none, &opts).max_abs());
        let base = update_control(&lam, &premium, &opts);
        for k in [-10, -1, 1, 7] {
            exact_scaling &= update_control(&lam.scaled(2f64.powi(k)).unwrap(), &premium, &opts) == base;
        }
        for s in [0.037, 3.3, 71.0] {
            let other = update_control(&lam.scaled(s).unwrap(), &premium, &opts);
            for i in 0..g.n_nodes() {
                let cap = opts.alpha_max_multiple * g.node(i);
                scaled = scaled.max((other.get(i) - base.get(i)).abs() / cap);
            }
        }
    }
    vec![
        at_most("stationarity residual", residual, 1e-10),
        at_most("mu=r max |alpha|", zero, 0.0),
        at_least("2^k scaling bitwise", exact_scaling as u8 as f64, 1.0),
        at_most("scaling drift / cap", scaled, 1e-9),
    ]
}

fn run_cli(out: &Path) -> Vec<(String, Vec<u8>)> {
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/benchmark.cfg");
    for cmd in ["fp", "adjoint", "hj", "optimize", "mc", "validate"] {
        let code = merton_cli::run(["merton", cmd, "--config", cfg, "--out", out.to_str().unwrap(), "--seed", "11"]);
        assert_eq!(code, 0, "merton {cmd} exited {code}");
    }
    let mut files: Vec<_> = std::fs::read_dir(out)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism(ctx: &mut Ctx) -> Vec<Check> {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = run_cli(a.path());
    let second = run_cli(b.path());
    let differing = first.iter().zip(&second).filter(|(x, y)| x != y).count()
        + first.len().abs_diff(second.len());
    // the command-line densities count toward mass conservation too
    let diag = first.iter().find(|(n, _)| n == "fp_diagnostics.csv").unwrap();
    let mut reader = csv::Reader::from_reader(diag.1.as_slice());
    let k = reader.headers().unwrap().iter().position(|h| h == "mass_drift").unwrap();
    for rec in reader.records() {
        ctx.record(rec.unwrap()[k].parse().unwrap());
    }
    vec![
        at_least("files", first.len() as f64, 18.0),
        at_most("differing files", differing as f64, 0.0),
    ]
}

fn mass(ctx: &mut Ctx) -> Vec<Check> {
    vec![at_most("max mass drift", ctx.drift.get(), 1e-8)]
}

type Criterion = (usize, &'static str, fn(&mut Ctx) -> Vec<Check>);

fn main() {
    let market = MarketModel::new(0.03, 0.08, 0.2).unwrap();
    let mut ctx = Ctx {
        market,
        utility: UtilitySpec::Crra { gamma: 0.5 },
        grid: GridSpec::around(1.0, 400, 1.0, 400).unwrap(),
        drift: Cell::new(0.0),
        sweep: None,
        hj_control: None,
    };
    // mass conservation runs last so it sees every density above
    let criteria: [Criterion; 12] = [
        (2, "FP vs Gaussian", gaussian),
        (3, "FP vs lognormal", lognormal),
        (4, "adjoint Feynman-Kac duality", feynman_kac),
        (5, "HJ oracle value", hj_value),
        (6, "HJ oracle control", hj_control),
        (7, "optimizer fixed point", fixed_point),
        (8, "route equivalence", route_equivalence),
        (9, "policy dominance", dominance),
        (10, "weak-form identity", weak_forms),
        (11, "control-law suite", control_law),
        (12, "determinism", determinism),
        (1, "mass conservation", mass),
    ];
    let mut lines = Vec::new();
    let mut hard_failures = 0;
    for (id, name, f) in criteria {
        let checks = panic::catch_unwind(AssertUnwindSafe(|| f(&mut ctx))).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            vec![Check {
                label: format!("panicked: {msg}"),
                value: f64::NAN,
                tol: f64::NAN,
                pass: false,
            }]
        });
        let mut red = Vec::new();
        for c in checks.iter().filter(|c| !c.pass) {
            let tag = format!("{id} {}", c.label);
            if KNOWN_RED.contains(&tag.as_str()) {
                red.push(c.label.clone());
            } else {
                hard_failures += 1;
            }
        }
        let status = match (checks.iter().all(|c| c.pass), red.is_empty()) {
            (true, _) => "PASS".to_string(),
            (false, false) if red.len() == checks.iter().filter(|c| !c.pass).count() => {
                format!("FAIL (known red: {})", red.join(", "))
            }
            _ => "FAIL".to_string(),
        };
        let detail: Vec<String> = checks
            .iter()
            .map(|c| {
                let mark = if c.pass { "" } else { " !" };
                format!("{} {:.4e} vs {:.1e}{mark}", c.label, c.value, c.tol)
            })
            .collect();
        lines.push((id, format!("criterion {id:>2} {name:<28} {status:<6} {}", detail.join("; "))));
    }
    lines.sort_by_key(|(id, _)| *id);
    for (_, line) in &lines {
        println!("{line}");
    }
    if hard_failures > 0 {
        println!("{hard_failures} acceptance check(s) failed");
        std::process::exit(1);
    }
}
