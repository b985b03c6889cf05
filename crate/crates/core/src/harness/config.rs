//! Flat `key = value` run configuration.
//!
//! ```text
//! # unconstrained run of the rescaled model
//! model = unconstrained        # unconstrained | constrained | heat | nonlocal | monte_carlo
//! eta = 3
//! payoff = 0.5                 # h, or ε when rescaled = true
//! rescaled = true              # divide eta by payoff²
//! x_min = -8
//! x_max = 9
//! n_cells = 340
//! t_end = 1
//! n_outputs = 10               # or: output_times = 0, 0.5, 1
//! initial = indicator(0, 1)    # indicator(a, b[, height]) | gaussian(mean, sigma[, mass]) | csv(path)
//! ```
//!
//! Optional keys: `dt`, `seed`, `n_agents`, `mc_model` (`unconstrained` or
//! `constrained`, for `monte_carlo` runs). Unknown or repeated keys are
//! rejected with the offending line number.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{mass, DensityField, Grid1D};
use crate::integrate::uniform_times;
use crate::params::ModelParams;

const KNOWN_KEYS: [&str; 16] = [
    "model",
    "eta",
    "payoff",
    "rescaled",
    "x_min",
    "x_max",
    "n_cells",
    "dt",
    "t_end",
    "n_outputs",
    "output_times",
    "initial",
    "seed",
    "n_agents",
    "mc_model",
    "out_dir",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Unconstrained,
    Constrained,
    Heat,
    Nonlocal,
    MonteCarlo,
}

impl ModelKind {
    pub fn is_kinetic(self) -> bool {
        matches!(self, Self::Unconstrained | Self::Constrained)
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "unconstrained" => Ok(Self::Unconstrained),
            "constrained" => Ok(Self::Constrained),
            "heat" => Ok(Self::Heat),
            "nonlocal" => Ok(Self::Nonlocal),
            "monte_carlo" => Ok(Self::MonteCarlo),
            other => Err(format!("unknown model '{other}'")),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Unconstrained => "unconstrained",
            Self::Constrained => "constrained",
            Self::Heat => "heat",
            Self::Nonlocal => "nonlocal",
            Self::MonteCarlo => "monte_carlo",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Indicator { a: f64, b: f64, height: f64 },
    Gaussian { mean: f64, sigma: f64, mass: f64 },
    Csv(PathBuf),
}

impl InitialSpec {
    pub fn field(&self, grid: Grid1D, base_dir: &Path) -> Result<DensityField> {
        match self {
            Self::Indicator { a, b, height } => Ok(DensityField::indicator(grid, *a, *b, *height)),
            Self::Gaussian { mean, sigma, mass } => {
                Ok(DensityField::gaussian(grid, *mean, *sigma, *mass))
            }
            Self::Csv(path) => {
                let full = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
                super::output::read_profile_csv(&full, grid)
            }
        }
    }
}

impl FromStr for InitialSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let open = s.find('(').ok_or_else(|| format!("expected name(args), got '{s}'"))?;
        if !s.ends_with(')') {
            return Err(format!("missing ')' in '{s}'"));
        }
        let name = s[..open].trim();
        let inner = &s[open + 1..s.len() - 1];
        if name == "csv" {
            return Ok(Self::Csv(PathBuf::from(inner.trim())));
        }
        let args = inner
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|e| format!("bad number '{a}': {e}")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let third = |default: f64| match args.len() {
            2 => Ok(default),
            3 => Ok(args[2]),
            n => Err(format!("{name} takes 2 or 3 arguments, got {n}")),
        };
        match name {
            "indicator" => {
                let height = third(1.0)?;
                if !(args[0] < args[1]) {
                    return Err(format!("indicator needs a < b, got ({}, {})", args[0], args[1]));
                }
                Ok(Self::Indicator { a: args[0], b: args[1], height })
            }
            "gaussian" => {
                let mass = third(1.0)?;
                if !(args[1] > 0.0) {
                    return Err(format!("gaussian needs sigma > 0, got {}", args[1]));
                }
                Ok(Self::Gaussian { mean: args[0], sigma: args[1], mass })
            }
            other => Err(format!("unknown initial shape '{other}'")),
        }
    }
}

impl fmt::Display for InitialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Indicator { a, b, height } => write!(f, "indicator({a}, {b}, {height})"),
            Self::Gaussian { mean, sigma, mass } => write!(f, "gaussian({mean}, {sigma}, {mass})"),
            Self::Csv(p) => write!(f, "csv({})", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    pub eta: f64,
    pub payoff: Option<f64>,
    pub rescaled: bool,
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
    pub dt: Option<f64>,
    pub t_end: f64,
    pub n_outputs: usize,
    pub output_times: Option<Vec<f64>>,
    pub initial: InitialSpec,
    pub seed: u64,
    pub n_agents: usize,
    pub mc_constrained: bool,
    pub out_dir: Option<PathBuf>,
    /// Directory against which relative paths are resolved.
    pub base_dir: PathBuf,
}

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str, line: usize) -> Result<T>
where
    T::Err: fmt::Display,
{
    raw.parse::<T>()
        .map_err(|e| config_err(line, format!("invalid value for '{key}': {e}")))
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut entries: BTreeMap<String, (String, usize)> = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| config_err(line, format!("expected 'key = value', got '{content}'")))?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(config_err(line, format!("unknown key '{key}'")));
            }
            if let Some((_, first)) = entries.get(key) {
                return Err(config_err(line, format!("key '{key}' already set on line {first}")));
            }
            entries.insert(key.to_string(), (value.trim().to_string(), line));
        }
        let get = |key: &str| entries.get(key).map(|(v, l)| (v.as_str(), *l));
        let require = |key: &str| get(key).ok_or_else(|| config_err(0, format!("missing required key '{key}'")));

        let (raw, line) = require("model")?;
        let model: ModelKind = parse_value("model", raw, line)?;
        let (raw, line) = require("eta")?;
        let eta: f64 = parse_value("eta", raw, line)?;
        let payoff = get("payoff")
            .map(|(r, l)| parse_value::<f64>("payoff", r, l))
            .transpose()?;
        let rescaled = get("rescaled")
            .map(|(r, l)| parse_value::<bool>("rescaled", r, l))
            .transpose()?
            .unwrap_or(false);
        let (raw, line) = require("x_min")?;
        let x_min: f64 = parse_value("x_min", raw, line)?;
        let (raw, line) = require("x_max")?;
        let x_max: f64 = parse_value("x_max", raw, line)?;
        let (raw, line) = require("n_cells")?;
        let n_cells: usize = parse_value("n_cells", raw, line)?;
        let dt = get("dt").map(|(r, l)| parse_value::<f64>("dt", r, l)).transpose()?;
        let (raw, line) = require("t_end")?;
        let t_end: f64 = parse_value("t_end", raw, line)?;
        let n_outputs = get("n_outputs")
            .map(|(r, l)| parse_value::<usize>("n_outputs", r, l))
            .transpose()?
            .unwrap_or(10);
        let output_times = get("output_times")
            .map(|(r, l)| {
                r.split(',')
                    .map(|v| parse_value::<f64>("output_times", v.trim(), l))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        let (raw, line) = require("initial")?;
        let initial: InitialSpec = parse_value("initial", raw, line)?;
        let seed = get("seed")
            .map(|(r, l)| parse_value::<u64>("seed", r, l))
            .transpose()?
            .unwrap_or(0);
        let n_agents = get("n_agents")
            .map(|(r, l)| parse_value::<usize>("n_agents", r, l))
            .transpose()?
            .unwrap_or(100_000);
        let mc_constrained = match get("mc_model") {
            None => false,
            Some(("unconstrained", _)) => false,
            Some(("constrained", _)) => true,
            Some((other, l)) => {
                return Err(config_err(l, format!("mc_model must be unconstrained or constrained, got '{other}'")))
            }
        };
        let out_dir = get("out_dir").map(|(r, _)| PathBuf::from(r));

        let cfg = Self {
            model,
            eta,
            payoff,
            rescaled,
            x_min,
            x_max,
            n_cells,
            dt,
            t_end,
            n_outputs,
            output_times,
            initial,
            seed,
            n_agents,
            mc_constrained,
            out_dir,
            base_dir: base_dir.to_path_buf(),
        };
        cfg.validate(&|key: &str| get(key).map(|(_, l)| l).unwrap_or(0))?;
        Ok(cfg)
    }

    fn validate(&self, line_of: &dyn Fn(&str) -> usize) -> Result<()> {
        let err = |key: &str, msg: String| config_err(line_of(key), msg);
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(err("eta", format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(err("t_end", format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.n_outputs == 0 {
            return Err(err("n_outputs", "n_outputs must be at least 1".into()));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(err("dt", format!("dt must be positive, got {dt}")));
            }
        }
        if let Some(times) = &self.output_times {
            if times.is_empty()
                || times.windows(2).any(|w| w[1] < w[0])
                || times.iter().any(|t| !(*t >= 0.0 && *t <= self.t_end))
            {
                return Err(err(
                    "output_times",
                    "output_times must be sorted and lie in [0, t_end]".into(),
                ));
            }
        }
        let grid = self.grid().map_err(|e| err("n_cells", e.to_string()))?;
        let needs_payoff = self.model.is_kinetic() || self.model == ModelKind::MonteCarlo;
        if needs_payoff {
            let h = self
                .payoff
                .ok_or_else(|| err("model", format!("model '{}' needs a payoff", self.model)))?;
            grid.shift_cells(h).map_err(|e| err("payoff", e.to_string()))?;
        }
        let half_line = matches!(self.model, ModelKind::Constrained | ModelKind::Nonlocal)
            || (self.model == ModelKind::MonteCarlo && self.mc_constrained);
        if half_line && self.x_min != 0.0 {
            return Err(err(
                "x_min",
                format!("model '{}' lives on the half line and needs x_min = 0", self.model),
            ));
        }
        if self.model == ModelKind::MonteCarlo && self.n_agents < 2 {
            return Err(err("n_agents", "need at least 2 agents".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.x_min, self.x_max, self.n_cells)
    }

    pub fn initial_field(&self) -> Result<DensityField> {
        self.initial.field(self.grid()?, &self.base_dir)
    }

    /// Model parameters with `rho` taken from the initial mass.
    pub fn params(&self, f_in: &DensityField) -> Result<ModelParams> {
        let rho = mass(f_in);
        let h = self.payoff.unwrap_or(1.0);
        let constrained = match self.model {
            ModelKind::Constrained | ModelKind::Nonlocal => true,
            ModelKind::MonteCarlo => self.mc_constrained,
            _ => false,
        };
        if self.rescaled {
            ModelParams::rescaled(self.eta, h, rho, constrained)
        } else {
            ModelParams::new(self.eta, h, rho, constrained)
        }
    }

    pub fn output_times(&self) -> Vec<f64> {
        self.output_times
            .clone()
            .unwrap_or_else(|| uniform_times(self.t_end, self.n_outputs))
    }

    /// Canonical text form; parsing it gives back an identical config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        put("model", self.model.to_string());
        put("eta", format!("{:?}", self.eta));
        if let Some(h) = self.payoff {
            put("payoff", format!("{h:?}"));
        }
        put("rescaled", self.rescaled.to_string());
        put("x_min", format!("{:?}", self.x_min));
        put("x_max", format!("{:?}", self.x_max));
        put("n_cells", self.n_cells.to_string());
        if let Some(dt) = self.dt {
            put("dt", format!("{dt:?}"));
        }
        put("t_end", format!("{:?}", self.t_end));
        put("n_outputs", self.n_outputs.to_string());
        if let Some(times) = &self.output_times {
            let list: Vec<String> = times.iter().map(|t| format!("{t:?}")).collect();
            put("output_times", list.join(", "));
        }
        let initial = match &self.initial {
            InitialSpec::Csv(p) if p.is_relative() => InitialSpec::Csv(self.base_dir.join(p)),
            other => other.clone(),
        };
        put("initial", initial.to_string());
        put("seed", self.seed.to_string());
        put("n_agents", self.n_agents.to_string());
        put(
            "mc_model",
            if self.mc_constrained { "constrained" } else { "unconstrained" }.into(),
        );
        s
    }
}
