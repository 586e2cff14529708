//! `section.key = value` run configuration.
//!
//! One assignment per line; `#` starts a comment. Every key has a typed
//! default except the three market parameters. Problems are reported with
//! the line they come from.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use merton_cov::control_law::ControlOptions;
use merton_cov::hj_solver::{HJOptions, HjScheme};
use merton_cov::montecarlo::{BoundaryPolicy, McOptions};
use merton_cov::optimizer::SweepOptions;
use merton_cov::{Error, GridSpec, MarketModel, UtilitySpec};

/// Where the control for `fp`, `adjoint`, `mc` and `validate` comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlSpec {
    Zero,
    /// `alpha = slope * x`.
    Linear(f64),
    /// The closed-form CRRA control.
    Merton,
    /// The policy of the direct HJ solve.
    Hj,
    /// A `t,x,alpha` CSV on the configured grid.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub market: MarketModel,
    pub utility: UtilitySpec,
    pub grid: GridSpec,
    pub x0: f64,
    pub control: ControlSpec,
    pub sweep: SweepOptions,
    pub hj: HJOptions,
    pub mc: McOptions,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source: String,
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.source)?;
        if let Some(line) = self.line {
            write!(f, ":{line}")?;
        }
        if let Some(key) = &self.key {
            write!(f, ": `{key}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

pub const KEYS: &[&str] = &[
    "market.r",
    "market.mu",
    "market.sigma",
    "utility.family",
    "utility.parameter",
    "problem.x0",
    "grid.x_min",
    "grid.x_max",
    "grid.nx",
    "grid.T",
    "grid.nt",
    "control.kind",
    "control.slope",
    "control.file",
    "control.curvature_floor",
    "control.alpha_max_multiple",
    "sweep.max_iters",
    "sweep.damping",
    "sweep.tol_control",
    "sweep.tol_objective",
    "sweep.density_threshold",
    "hj.policy_iters_per_step",
    "hj.scheme",
    "mc.n_paths",
    "mc.seed",
    "mc.substeps",
    "mc.boundary_policy",
    "output.dir",
];

struct Entries {
    source: String,
    map: BTreeMap<String, (String, usize)>,
    base: PathBuf,
}

impl Entries {
    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            source: self.source.clone(),
            line: self.map.get(key).map(|(_, l)| *l),
            key: Some(key.to_string()),
            message: message.into(),
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|(v, _)| v.as_str())
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| self.err(key, format!("expected {what}, got `{v}`"))),
        }
    }

    fn real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        let v = self.parse::<f64>(key, "a number")?;
        match v {
            Some(x) if !x.is_finite() => Err(self.err(key, format!("must be finite, got {x}"))),
            _ => Ok(v),
        }
    }

    fn real_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.real(key)?.unwrap_or(default))
    }

    fn required(&self, key: &str) -> Result<f64, ConfigError> {
        self.real(key)?.ok_or_else(|| self.err(key, "missing required key"))
    }

    fn count_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        Ok(self.parse::<usize>(key, "a nonnegative integer")?.unwrap_or(default))
    }

    fn word(&self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or(default).to_ascii_lowercase()
    }

    /// Attach a solver-side validation error to the line of its key.
    fn lift(&self, e: Error) -> ConfigError {
        let key = match &e {
            Error::InvalidParameter { name, .. } => match *name {
                "grid.horizon" => "grid.T".to_string(),
                "x0" => "problem.x0".to_string(),
                n => n.split('/').next().unwrap_or(n).to_string(),
            },
            Error::BadUtility(_) => "utility.parameter".to_string(),
            Error::DomainError { .. } => "grid.x_min".to_string(),
            _ => String::new(),
        };
        self.err(&key, e.to_string())
    }
}

fn split_lines(text: &str, source: &str, base: PathBuf) -> Result<Entries, ConfigError> {
    let mut map = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fail = |message: String| ConfigError {
            source: source.to_string(),
            line: Some(line),
            key: None,
            message,
        };
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| fail(format!("expected `section.key = value`, got `{body}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(fail(format!("unknown key `{key}`")));
        }
        if value.is_empty() {
            return Err(fail(format!("empty value for `{key}`")));
        }
        if let Some((_, first)) = map.get(key) {
            return Err(fail(format!("`{key}` already set on line {first}")));
        }
        map.insert(key.to_string(), (value.to_string(), line));
    }
    Ok(Entries {
        source: source.to_string(),
        map,
        base,
    })
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            source: path.display().to_string(),
            line: None,
            key: None,
            message: format!("cannot read: {e}"),
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse_with_base(&text, &path.display().to_string(), base)
    }

    /// Relative `control.file` paths resolve against the working directory.
    pub fn parse(text: &str, source: &str) -> Result<Self, ConfigError> {
        Self::parse_with_base(text, source, PathBuf::new())
    }

    fn parse_with_base(text: &str, source: &str, base: PathBuf) -> Result<Self, ConfigError> {
        let e = split_lines(text, source, base)?;
        let market = MarketModel::new(e.required("market.r")?, e.required("market.mu")?, e.required("market.sigma")?)
            .map_err(|err| e.lift(err))?;

        let family = e.word("utility.family", "crra");
        let parameter = e.real("utility.parameter")?;
        let utility = match family.as_str() {
            "crra" => UtilitySpec::crra(parameter.unwrap_or(0.5)),
            "exponential" => UtilitySpec::exponential(parameter.unwrap_or(1.0)),
            "log" => {
                if parameter.is_some() {
                    return Err(e.err("utility.parameter", "log utility takes no parameter"));
                }
                Ok(UtilitySpec::Log)
            }
            other => return Err(e.err("utility.family", format!("expected crra, log or exponential, got `{other}`"))),
        }
        .map_err(|err| e.lift(err))?;

        let x0 = e.real_or("problem.x0", 1.0)?;
        let (x_min, x_max) = match (e.real("grid.x_min")?, e.real("grid.x_max")?) {
            (Some(a), Some(b)) => (a, b),
            (a, b) => {
                let d = GridSpec::around(x0, 3, 1.0, 1).map_err(|err| e.lift(err))?;
                (a.unwrap_or(d.x_min()), b.unwrap_or(d.x_max()))
            }
        };
        let grid = GridSpec::new(
            x_min,
            x_max,
            e.count_or("grid.nx", 400)?,
            e.real_or("grid.T", 1.0)?,
            e.count_or("grid.nt", 400)?,
        )
        .map_err(|err| e.lift(err))?;
        if !grid.contains_open(x0) {
            return Err(e.err("problem.x0", format!("x0 = {x0} must lie strictly inside ({x_min}, {x_max})")));
        }
        utility.check_grid(&grid).map_err(|err| e.lift(err))?;

        let control = match e.word("control.kind", "zero").as_str() {
            "zero" => ControlSpec::Zero,
            "linear" => ControlSpec::Linear(e.real_or("control.slope", 1.0)?),
            "merton" => {
                if utility.crra_gamma().is_none() {
                    return Err(e.err("control.kind", "the merton control needs CRRA utility"));
                }
                ControlSpec::Merton
            }
            "hj" => ControlSpec::Hj,
            "file" => {
                let p = e.raw("control.file").ok_or_else(|| e.err("control.file", "required when control.kind = file"))?;
                ControlSpec::File(e.base.join(p))
            }
            other => {
                return Err(e.err(
                    "control.kind",
                    format!("expected zero, linear, merton, hj or file, got `{other}`"),
                ))
            }
        };
        let law = ControlOptions {
            curvature_floor: e.real_or("control.curvature_floor", 1e-8)?,
            alpha_max_multiple: e.real_or("control.alpha_max_multiple", 20.0)?,
        };
        law.validate().map_err(|err| e.lift(err))?;

        let d = SweepOptions::default();
        let sweep = SweepOptions {
            max_iters: e.count_or("sweep.max_iters", d.max_iters)?,
            damping: e.real_or("sweep.damping", d.damping)?,
            tol_control: e.real_or("sweep.tol_control", d.tol_control)?,
            tol_objective: e.real_or("sweep.tol_objective", d.tol_objective)?,
            density_threshold: e.real_or("sweep.density_threshold", d.density_threshold)?,
            control: law,
        };
        sweep.validate().map_err(|err| {
            let mut c = e.lift(err);
            if c.key.as_deref() == Some("sweep.tol_control") && c.line.is_none() {
                c.line = e.map.get("sweep.tol_objective").map(|(_, l)| *l);
            }
            c
        })?;

        let scheme = match e.word("hj.scheme", "policy_iteration_implicit").as_str() {
            "policy_iteration_implicit" => HjScheme::PolicyIterationImplicit,
            other => return Err(e.err("hj.scheme", format!("expected policy_iteration_implicit, got `{other}`"))),
        };
        let hj = HJOptions {
            policy_iters_per_step: e.count_or("hj.policy_iters_per_step", 3)?,
            scheme,
            control: law,
        };
        hj.validate().map_err(|err| e.lift(err))?;

        let boundary_policy = match e.word("mc.boundary_policy", "reflect").as_str() {
            "reflect" => BoundaryPolicy::Reflect,
            "absorb" => BoundaryPolicy::Absorb,
            other => return Err(e.err("mc.boundary_policy", format!("expected reflect or absorb, got `{other}`"))),
        };
        let mc = McOptions {
            n_paths: e.count_or("mc.n_paths", 100_000)?,
            seed: e.parse::<u64>("mc.seed", "a 64-bit unsigned integer")?.unwrap_or(0),
            substeps: e.count_or("mc.substeps", 1)?,
            boundary_policy,
        };
        mc.validate().map_err(|err| e.lift(err))?;

        Ok(Self {
            market,
            utility,
            grid,
            x0,
            control,
            sweep,
            hj,
            mc,
            out_dir: PathBuf::from(e.raw("output.dir").unwrap_or("out")),
        })
    }
}
