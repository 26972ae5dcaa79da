//! Run configuration: command-line flags merged over an optional JSON file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use serde::{Deserialize, Serialize};

use cocontact::sampling::{Axis, Grid, DEFAULT_SAMPLES, DEFAULT_SEED};
use cocontact::systems::ParamValue;
use cocontact::Scheme;

/// Problems found before anything is computed. Exit code 2.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Simulate,
    HjCheck,
    QuantityCheck,
    Noether,
    Bracket,
    Reconstruct,
}

impl CommandName {
    pub fn name(&self) -> &'static str {
        match self {
            CommandName::Simulate => "simulate",
            CommandName::HjCheck => "hj-check",
            CommandName::QuantityCheck => "quantity-check",
            CommandName::Noether => "noether",
            CommandName::Bracket => "bracket",
            CommandName::Reconstruct => "reconstruct",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the Hamilton equations; CSV trajectory and JSON summary.
    Simulate(Flags),
    /// Hamilton-Jacobi residuals of a section over a grid.
    HjCheck(Flags),
    /// Conserved / dissipated residuals on the sample box.
    QuantityCheck(Flags),
    /// Noether symmetry of a dissipated quantity and its residuals.
    Noether(Flags),
    /// Jacobi bracket of two functions on the sample box.
    Bracket(Flags),
    /// Trajectory rebuilt from a complete solution.
    Reconstruct(Flags),
}

impl Command {
    pub fn split(self) -> (CommandName, Flags) {
        match self {
            Command::Simulate(f) => (CommandName::Simulate, f),
            Command::HjCheck(f) => (CommandName::HjCheck, f),
            Command::QuantityCheck(f) => (CommandName::QuantityCheck, f),
            Command::Noether(f) => (CommandName::Noether, f),
            Command::Bracket(f) => (CommandName::Bracket, f),
            Command::Reconstruct(f) => (CommandName::Reconstruct, f),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Built-in system name.
    #[arg(long)]
    pub system: Option<String>,
    /// Hamiltonian expression in t, q1.., p1.., z.
    #[arg(long = "H", value_name = "EXPR")]
    pub hamiltonian: Option<String>,
    /// Configuration dimension for expression input (default: largest index used).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Parameter bindings `k=v[,k=v...]`.
    #[arg(long)]
    pub params: Option<String>,
    /// Initial point `t,q1..qn,p1..pn,z`.
    #[arg(long, allow_hyphen_values = true)]
    pub init: Option<String>,
    #[arg(long = "t-end", allow_hyphen_values = true)]
    pub t_end: Option<f64>,
    /// Step of the fixed-step RK4 scheme.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Use the adaptive Dormand-Prince scheme.
    #[arg(long)]
    pub adaptive: bool,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    /// `tmin:tmax:N,qmin:qmax:N[,zmin:zmax:N]`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of sample points on the box.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Worker threads (default: number of processors).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// CSV output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON configuration file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Generating function expression (action-independent check).
    #[arg(long = "S", value_name = "EXPR")]
    pub generating: Option<String>,
    /// Section component expression (action-dependent check); repeat once per component.
    #[arg(long, value_name = "EXPR")]
    pub gamma: Vec<String>,
    #[arg(long, value_name = "EXPR")]
    pub f: Option<String>,
    #[arg(long, value_name = "EXPR")]
    pub g: Option<String>,
    /// conserved | dissipated | bracket-characterization | involution.
    #[arg(long)]
    pub kind: Option<String>,
    /// Registered quantity of the system.
    #[arg(long)]
    pub quantity: Option<String>,
    /// Leaf label `l1[,l2...]`.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    /// Start configuration for reconstruct.
    #[arg(long, allow_hyphen_values = true)]
    pub q0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t0: Option<f64>,
}

/// Numbers stay numbers; strings select laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FileParam {
    Number(f64),
    Text(String),
}

/// On-disk configuration. Every key is optional; unknown keys are errors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<CommandName>,
    pub system: Option<String>,
    #[serde(rename = "H")]
    pub hamiltonian: Option<String>,
    pub dim: Option<usize>,
    #[serde(default)]
    pub params: BTreeMap<String, FileParam>,
    pub init: Option<Vec<f64>>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub adaptive: Option<bool>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub grid: Option<String>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(rename = "S")]
    pub generating: Option<String>,
    pub gamma: Option<Vec<String>>,
    pub f: Option<String>,
    pub g: Option<String>,
    pub kind: Option<String>,
    pub quantity: Option<String>,
    pub lambda: Option<Vec<f64>>,
    pub q0: Option<Vec<f64>>,
    pub t0: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
    }
}

/// Where the Hamiltonian comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    System(String),
    /// Expression input; only `bracket` runs without a Hamiltonian.
    Expression { hamiltonian: Option<String>, dim: Option<usize> },
}

/// Validated configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandName,
    pub source: Source,
    pub params: BTreeMap<String, ParamValue>,
    pub init: Option<Vec<f64>>,
    pub t_end: Option<f64>,
    pub scheme: Scheme,
    pub grid: Option<Grid>,
    pub tol: Option<f64>,
    pub seed: u64,
    pub samples: usize,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub generating: Option<String>,
    pub gamma: Vec<String>,
    pub f: Option<String>,
    pub g: Option<String>,
    pub kind: Option<String>,
    pub quantity: Option<String>,
    pub lambda: Option<Vec<f64>>,
    pub q0: Option<Vec<f64>>,
    pub t0: f64,
}

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_RTOL: f64 = 1e-9;
pub const DEFAULT_ATOL: f64 = 1e-12;

/// Comma-separated floats.
pub fn parse_list(key: &str, s: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("--{key}: `{}` is not a number", v.trim())))
        })
        .collect()
}

/// `k=v[,k=v...]`.
pub fn parse_params(s: &str) -> Result<BTreeMap<String, ParamValue>, ConfigError> {
    let mut out = BTreeMap::new();
    for item in s.split(',').filter(|i| !i.trim().is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| bad(format!("--params: `{item}` is not of the form key=value")))?;
        let k = k.trim();
        if k.is_empty() || v.trim().is_empty() {
            return Err(bad(format!("--params: `{item}` is not of the form key=value")));
        }
        if out.insert(k.to_string(), ParamValue::parse(v)).is_some() {
            return Err(bad(format!("--params: `{k}` given twice")));
        }
    }
    Ok(out)
}

/// `tmin:tmax:N,qmin:qmax:N[,zmin:zmax:N]`.
pub fn parse_grid(s: &str) -> Result<Grid, ConfigError> {
    let axes: Vec<Axis> = s
        .split(',')
        .map(|a| Axis::parse(a).map_err(|e| bad(format!("--grid: {e}"))))
        .collect::<Result<_, _>>()?;
    match axes.as_slice() {
        [t, q] => Ok(Grid { t: *t, q: *q, z: None }),
        [t, q, z] => Ok(Grid { t: *t, q: *q, z: Some(*z) }),
        _ => Err(bad("--grid takes two or three axes")),
    }
}

fn positive(key: &str, v: Option<f64>) -> Result<Option<f64>, ConfigError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(bad(format!("{key} must be positive, got {x}"))),
        _ => Ok(v),
    }
}

fn finite(key: &str, v: Option<f64>) -> Result<Option<f64>, ConfigError> {
    match v {
        Some(x) if !x.is_finite() => Err(bad(format!("{key} must be finite"))),
        _ => Ok(v),
    }
}

impl RunConfig {
    /// Merge `flags` over the file named by `--config` (if any) and validate.
    pub fn resolve(command: CommandName, flags: Flags) -> Result<Self, ConfigError> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        RunConfig::merge(command, flags, file)
    }

    pub fn merge(command: CommandName, flags: Flags, file: FileConfig) -> Result<Self, ConfigError> {
        if let Some(c) = file.command {
            if c != command {
                return Err(bad(format!(
                    "config file is for `{}`, not `{}`",
                    c.name(),
                    command.name()
                )));
            }
        }

        let system = flags.system.or(file.system);
        let hamiltonian = flags.hamiltonian.or(file.hamiltonian);
        let dim = flags.dim.or(file.dim);
        let source = match (system, hamiltonian) {
            (Some(_), Some(_)) => return Err(bad("--system and --H are mutually exclusive")),
            (None, None) if command != CommandName::Bracket => {
                return Err(bad("one of --system or --H is required"))
            }
            (Some(s), None) => {
                if dim.is_some() {
                    return Err(bad("--dim applies only to --H"));
                }
                Source::System(s)
            }
            (None, h) => {
                if dim == Some(0) {
                    return Err(bad("--dim must be at least 1"));
                }
                Source::Expression { hamiltonian: h, dim }
            }
        };

        let mut params: BTreeMap<String, ParamValue> = file
            .params
            .into_iter()
            .map(|(k, v)| {
                let v = match v {
                    FileParam::Number(x) => ParamValue::Number(x),
                    FileParam::Text(s) => ParamValue::parse(&s),
                };
                (k, v)
            })
            .collect();
        if let Some(p) = &flags.params {
            params.extend(parse_params(p)?);
        }

        let init = match flags.init {
            Some(s) => Some(parse_list("init", &s)?),
            None => file.init,
        };
        if let Some(v) = &init {
            if v.len() < 4 || v.len() % 2 != 0 {
                return Err(bad(format!("--init needs t, q1..qn, p1..pn, z; got {} values", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(bad("--init must be finite"));
            }
        }

        let dt = positive("dt", flags.dt.or(file.dt))?;
        let rtol = positive("rtol", flags.rtol.or(file.rtol))?;
        let atol = positive("atol", flags.atol.or(file.atol))?;
        let adaptive = flags.adaptive || file.adaptive.unwrap_or(false);
        let scheme = if adaptive {
            if dt.is_some() {
                return Err(bad("--dt applies only to the fixed-step scheme"));
            }
            Scheme::adaptive(rtol.unwrap_or(DEFAULT_RTOL), atol.unwrap_or(DEFAULT_ATOL))
        } else {
            if rtol.is_some() || atol.is_some() {
                return Err(bad("--rtol/--atol require --adaptive"));
            }
            Scheme::rk4(dt.unwrap_or(DEFAULT_DT))
        };

        let grid = match flags.grid.or(file.grid) {
            Some(s) => Some(parse_grid(&s)?),
            None => None,
        };
        let samples = flags.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES);
        if samples == 0 {
            return Err(bad("--samples must be at least 1"));
        }
        let jobs = flags.jobs.or(file.jobs);
        if jobs == Some(0) {
            return Err(bad("--jobs must be at least 1"));
        }
        let lambda = match flags.lambda {
            Some(s) => Some(parse_list("lambda", &s)?),
            None => file.lambda,
        };
        let q0 = match flags.q0 {
            Some(s) => Some(parse_list("q0", &s)?),
            None => file.q0,
        };
        let gamma = if flags.gamma.is_empty() { file.gamma.unwrap_or_default() } else { flags.gamma };

        Ok(RunConfig {
            command,
            source,
            params,
            init,
            t_end: finite("t-end", flags.t_end.or(file.t_end))?,
            scheme,
            grid,
            tol: positive("tol", flags.tol.or(file.tol))?,
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            samples,
            jobs,
            out: flags.out.or(file.out),
            generating: flags.generating.or(file.generating),
            gamma,
            f: flags.f.or(file.f),
            g: flags.g.or(file.g),
            kind: flags.kind.or(file.kind),
            quantity: flags.quantity.or(file.quantity),
            lambda,
            q0,
            t0: finite("t0", flags.t0.or(file.t0))?.unwrap_or(0.0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags() -> Flags {
        Flags {
            system: Some("damped_oscillator".into()),
            ..Flags::default()
        }
    }

    #[test]
    fn params_and_lists() {
        let p = parse_params("kappa=2, mass_law=linear").unwrap();
        assert_eq!(p["kappa"], ParamValue::Number(2.0));
        assert_eq!(p["mass_law"], ParamValue::Choice("linear".into()));
        assert!(parse_params("kappa").is_err());
        assert!(parse_params("a=1,a=2").is_err());
        assert_eq!(parse_list("init", "0,1,-2,2e0").unwrap(), vec![0.0, 1.0, -2.0, 2.0]);
        assert!(parse_list("init", "0,x").is_err());
    }

    #[test]
    fn grid_forms() {
        let g = parse_grid("0:2:5,-1:1:3").unwrap();
        assert_eq!(g.t.count, 5);
        assert!(g.z.is_none());
        assert_eq!(parse_grid("0:2:5,-1:1:3,-2:2:4").unwrap().z.unwrap().count, 4);
        assert!(parse_grid("0:2:5").is_err());
        assert!(parse_grid("0:2:0,-1:1:3").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file: FileConfig = serde_json::from_str(
            r#"{"command": "simulate", "system": "damped_oscillator", "t_end": 3, "params": {"gamma": 0.2}, "dt": 0.01}"#,
        )
        .unwrap();
        let f = Flags {
            system: None,
            t_end: Some(5.0),
            params: Some("k=2".into()),
            ..Flags::default()
        };
        let cfg = RunConfig::merge(CommandName::Simulate, f, file).unwrap();
        assert_eq!(cfg.t_end, Some(5.0));
        assert_eq!(cfg.scheme, Scheme::rk4(0.01));
        assert_eq!(cfg.params.len(), 2);
        assert_eq!(cfg.source, Source::System("damped_oscillator".into()));
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        let err = serde_json::from_str::<FileConfig>(r#"{"sytem": "x"}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");
    }

    #[test]
    fn conflicting_settings() {
        let both = Flags {
            hamiltonian: Some("p1".into()),
            ..flags()
        };
        assert!(RunConfig::merge(CommandName::Simulate, both, FileConfig::default()).is_err());
        assert!(RunConfig::merge(CommandName::Simulate, Flags::default(), FileConfig::default()).is_err());
        let rtol = Flags {
            rtol: Some(1e-6),
            ..flags()
        };
        assert!(RunConfig::merge(CommandName::Simulate, rtol, FileConfig::default()).is_err());
        let file = FileConfig {
            command: Some(CommandName::Noether),
            ..FileConfig::default()
        };
        assert!(RunConfig::merge(CommandName::Simulate, flags(), file).is_err());
        let init = Flags {
            init: Some("0,1,2".into()),
            ..flags()
        };
        assert!(RunConfig::merge(CommandName::Simulate, init, FileConfig::default()).is_err());
        let dt = Flags {
            dt: Some(-1.0),
            ..flags()
        };
        assert!(RunConfig::merge(CommandName::Simulate, dt, FileConfig::default()).is_err());
    }
}
