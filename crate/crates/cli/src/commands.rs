//! The six commands. Each returns a JSON report, optional CSV text and, for
//! checks, a verdict.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde_json::{json, Value};

use cocontact::expressions::EvalError;
use cocontact::geometry::jacobi_bracket;
use cocontact::hamilton_jacobi::{
    action_identity_check, coisotropy_residual, gamma_relatedness_residual_t, hj_dependent_residual,
    hj_independent_residual, reconstruct_t, sweep, Approach, CompleteSolution, GeneratingFunction, GridReport,
    Section, SectionT, SectionTZ,
};
use cocontact::quantities::{
    bracket_characterization_residual, conservation_residual, dissipation_residual, involution_residual,
    noether_symmetry, report, QuantityReport,
};
use cocontact::sampling::{Axis, Grid, PhaseBox};
use cocontact::systems::{build_system_with_defaults, ParamValue, SystemSpec, DEFAULT_T_RANGE, SELF_TEST_TOLERANCE};
use cocontact::{herglotz_action, integrate, Error, Params, PhasePoint, QuantityKind, ScalarField, Trajectory};

use crate::config::{CommandName, ConfigError, RunConfig, Source};
use crate::format;

pub const DEFAULT_T_END: f64 = 1.0;
pub const HJ_TOLERANCE: f64 = 1e-6;
pub const NOETHER_TOLERANCE: f64 = 1e-5;
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-10;

/// Largest index accepted while scanning expressions for their dimension.
const SCAN_DIM: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    /// Exit code 2.
    Config(String),
    /// Exit code 3.
    Runtime(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "configuration error: {m}"),
            RunError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.0)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Parse(_)
            | Error::Dimension { .. }
            | Error::InvalidArgument(_)
            | Error::UnknownSystem(_)
            | Error::MissingParameter(_)
            | Error::UnknownParameter(_)
            | Error::NonPositiveMass { .. }
            | Error::NotApplicable(_)
            | Error::Eval(EvalError::UnboundParameter(_)) => RunError::Config(msg),
            _ => RunError::Runtime(msg),
        }
    }
}

fn config(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Value,
    pub csv: Option<String>,
    /// `None` for commands without a pass/fail verdict.
    pub verdict: Option<bool>,
}

/// Hamiltonian, dimension and parameter bindings of a run.
pub struct Model {
    pub system: Option<SystemSpec>,
    pub hamiltonian: Option<ScalarField>,
    pub n: usize,
    params: Params,
    params_json: Value,
}

fn param_json(v: &ParamValue) -> Value {
    match v {
        ParamValue::Number(x) => json!(x),
        ParamValue::Choice(s) => json!(s),
    }
}

fn expression_sources(cfg: &RunConfig) -> Vec<&str> {
    let mut out: Vec<&str> = Vec::new();
    if let Source::Expression { hamiltonian: Some(h), .. } = &cfg.source {
        out.push(h);
    }
    out.extend(cfg.generating.as_deref());
    out.extend(cfg.gamma.iter().map(String::as_str));
    out.extend(cfg.f.as_deref());
    out.extend(cfg.g.as_deref());
    out
}

impl Model {
    pub fn build(cfg: &RunConfig, t_range: (f64, f64)) -> Result<Self, RunError> {
        match &cfg.source {
            Source::System(name) => {
                let sys = build_system_with_defaults(name, &cfg.params, t_range)?;
                let params = sys
                    .params
                    .iter()
                    .filter_map(|(k, v)| match v {
                        ParamValue::Number(x) => Some((k.clone(), *x)),
                        ParamValue::Choice(_) => None,
                    })
                    .collect();
                let params_json = sys.params.iter().map(|(k, v)| (k.clone(), param_json(v))).collect();
                Ok(Model {
                    hamiltonian: Some(sys.hamiltonian.clone()),
                    n: sys.n,
                    system: Some(sys),
                    params,
                    params_json,
                })
            }
            Source::Expression { hamiltonian, dim } => {
                let mut n = 1;
                let mut used = BTreeSet::new();
                for src in expression_sources(cfg) {
                    let e = cocontact::parse(src, SCAN_DIM).map_err(Error::from)?;
                    n = n.max(e.max_index());
                    used.extend(e.parameters());
                }
                // Points given explicitly also fix the dimension.
                if let Some(v) = &cfg.init {
                    n = n.max(v.len() / 2 - 1);
                }
                if let Some(q) = &cfg.q0 {
                    n = n.max(q.len());
                }
                if let Some(d) = *dim {
                    if d < n {
                        return Err(config(format!("--dim {d} is smaller than the largest index used ({n})")));
                    }
                    n = d;
                }
                let mut params = Params::new();
                for (k, v) in &cfg.params {
                    match v {
                        ParamValue::Number(x) if used.contains(k) => {
                            params.insert(k.clone(), *x);
                        }
                        ParamValue::Number(_) => return Err(config(format!("parameter `{k}` is not used"))),
                        ParamValue::Choice(s) => return Err(config(format!("parameter `{k}` = `{s}` is not a number"))),
                    }
                }
                let params_json = params.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
                let mut model = Model {
                    system: None,
                    hamiltonian: None,
                    n,
                    params,
                    params_json,
                };
                if let Some(h) = hamiltonian {
                    model.hamiltonian = Some(model.field(h)?);
                }
                Ok(model)
            }
        }
    }

    pub fn field(&self, src: &str) -> Result<ScalarField, RunError> {
        Ok(ScalarField::parse(src, self.n, &self.params)?.with_label(src))
    }

    fn h(&self) -> Result<&ScalarField, RunError> {
        self.hamiltonian.as_ref().ok_or_else(|| config("a Hamiltonian (--system or --H) is required"))
    }

    fn system(&self, what: &str) -> Result<&SystemSpec, RunError> {
        self.system
            .as_ref()
            .ok_or_else(|| config(format!("{what} requires --system")))
    }

    fn header(&self, command: CommandName) -> Value {
        json!({
            "command": command.name(),
            "system": self.system.as_ref().map(|s| s.name.clone()),
            "hamiltonian": self.hamiltonian.as_ref().map(|h| h.label().to_string()),
            "n": self.n,
            "params": self.params_json,
        })
    }

    fn sample_box(&self, cfg: &RunConfig) -> Result<Vec<PhasePoint>, RunError> {
        Ok(PhaseBox::default_for(self.n).sample(cfg.samples, cfg.seed)?)
    }
}

fn point_json(x: &PhasePoint) -> Value {
    json!({ "t": x.t, "q": x.q, "p": x.p, "z": x.z })
}

fn steps_json(traj: &Trajectory) -> Value {
    json!({
        "scheme": traj.meta.scheme.name(),
        "accepted": traj.meta.accepted,
        "rejected": traj.meta.rejected,
        "samples": traj.len(),
    })
}

fn axis_json(a: &Axis) -> Value {
    json!({ "min": a.lo, "max": a.hi, "count": a.count })
}

fn check_dim(what: &str, expected: usize, v: &[f64]) -> Result<(), RunError> {
    if v.len() != expected {
        return Err(config(format!("{what} needs {expected} values, got {}", v.len())));
    }
    Ok(())
}

/// Time interval the run touches; built-in systems validate their laws on it.
fn time_range(cfg: &RunConfig) -> (f64, f64) {
    let span = match cfg.command {
        CommandName::Simulate => {
            let t0 = cfg.init.as_ref().map_or(0.0, |v| v[0]);
            (t0, cfg.t_end.unwrap_or(t0 + DEFAULT_T_END))
        }
        CommandName::Reconstruct => (cfg.t0, cfg.t_end.unwrap_or(cfg.t0 + DEFAULT_T_END)),
        CommandName::HjCheck => cfg.grid.as_ref().map_or(DEFAULT_T_RANGE, |g| (g.t.lo, g.t.hi)),
        _ => DEFAULT_T_RANGE,
    };
    (span.0.min(span.1).min(0.0), span.0.max(span.1).max(0.0))
}

fn produces_csv(command: CommandName) -> bool {
    !matches!(command, CommandName::QuantityCheck | CommandName::Noether)
}

/// Run `cfg` on a worker pool of `cfg.jobs` threads (default: all processors).
pub fn run(cfg: &RunConfig) -> Result<Outcome, RunError> {
    if cfg.out.is_some() && !produces_csv(cfg.command) {
        return Err(config(format!("{} writes no CSV; drop --out", cfg.command.name())));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| RunError::Runtime(e.to_string()))?;
    pool.install(|| {
        let model = Model::build(cfg, time_range(cfg))?;
        match cfg.command {
            CommandName::Simulate => simulate(cfg, &model),
            CommandName::HjCheck => hj_check(cfg, &model),
            CommandName::QuantityCheck => quantity_check(cfg, &model),
            CommandName::Noether => noether(cfg, &model),
            CommandName::Bracket => bracket(cfg, &model),
            CommandName::Reconstruct => reconstruct(cfg, &model),
        }
    })
}

fn simulate(cfg: &RunConfig, model: &Model) -> Result<Outcome, RunError> {
    let h = model.h()?;
    let x0 = match (&cfg.init, &model.system) {
        (Some(v), _) => {
            check_dim("--init", 2 * model.n + 2, v)?;
            PhasePoint::from_slice(v)?
        }
        (None, Some(sys)) => sys.default_init.clone(),
        (None, None) => PhasePoint::origin(model.n),
    };
    let t_end = cfg.t_end.unwrap_or(x0.t + DEFAULT_T_END);
    let traj = integrate(h, &x0, t_end, cfg.scheme)?;
    let action = herglotz_action(h, &traj)?;
    let dz = traj.last().z - traj.first().z;
    let report = json!({
        "run": model.header(cfg.command),
        "start": point_json(traj.first()),
        "endpoint": point_json(traj.last()),
        "steps": steps_json(&traj),
        "herglotz_action": action,
        "z_change": dz,
        "action_defect": (action - dz).abs(),
    });
    Ok(Outcome {
        report,
        csv: Some(format::trajectory_csv(&traj)),
        verdict: None,
    })
}

fn sup_mean(r: &GridReport) -> Value {
    json!({ "sup": r.sup, "mean": r.mean, "verdict": r.verdict })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, r| m.max(r.abs()))
}

/// `(t, q, z, residual)`.
type GridRow = (f64, Vec<f64>, f64, f64);

/// Residual at every point for the CSV dump; undefined points give NaN.
fn pointwise<F>(points: &[(f64, Vec<f64>, f64)], residual: F) -> Result<Vec<GridRow>, RunError>
where
    F: Fn(f64, &[f64], f64) -> Result<f64, Error> + Sync,
{
    points
        .par_iter()
        .map(|(t, q, z)| match residual(*t, q, *z) {
            Ok(r) => Ok((*t, q.clone(), *z, r)),
            Err(Error::Eval(EvalError::Domain { .. })) => Ok((*t, q.clone(), *z, f64::NAN)),
            Err(e) => Err(e.into()),
        })
        .collect()
}

fn hj_check(cfg: &RunConfig, model: &Model) -> Result<Outcome, RunError> {
    let h = model.h()?;
    let tol = cfg.tol.unwrap_or(HJ_TOLERANCE);
    let (section, solution, lambda) = match (&cfg.generating, cfg.gamma.is_empty()) {
        (Some(_), false) => return Err(config("--S and --gamma are mutually exclusive")),
        (Some(src), true) => {
            let s = GeneratingFunction::new(model.field(src)?);
            (Section::T(SectionT::from_generating(&s)), src.clone(), None)
        }
        (None, false) => {
            if cfg.gamma.len() != model.n {
                return Err(config(format!("--gamma needs {} components, got {}", model.n, cfg.gamma.len())));
            }
            let fields = cfg.gamma.iter().map(|g| model.field(g)).collect::<Result<Vec<_>, _>>()?;
            (Section::TZ(SectionTZ::new(fields)?), cfg.gamma.join("; "), None)
        }
        (None, true) => {
            let sys = model.system("a built-in solution")?;
            let lambda = cfg.lambda.clone().unwrap_or_else(|| sys.default_lambda.clone());
            check_dim("--lambda", sys.solution().lambda_dim, &lambda)?;
            (sys.solution().section(&lambda)?, sys.solution().name.clone(), Some(lambda))
        }
    };
    let n = model.n;

    let (approach, grid, hj, other, dump) = match &section {
        Section::T(sec) => {
            let grid = cfg.grid.clone().unwrap_or_else(Grid::default_t);
            if grid.z.is_some() {
                return Err(config("a z axis applies only to action-dependent sections"));
            }
            let s = GeneratingFunction::new(sec.action.clone());
            let points: Vec<_> = grid.base_points(n).into_iter().map(|(t, q)| (t, q, 0.0)).collect();
            let residual = |t: f64, q: &[f64], _z: f64| hj_independent_residual(&s, h, t, q);
            let hj = sweep("hj", &points, tol, |t, q, z| Ok(vec![residual(t, q, z)?]))?;
            let rel = sweep("gamma-relatedness", &points, tol, |t, q, _| {
                let (m, a) = gamma_relatedness_residual_t(sec, h, t, q)?;
                Ok(m.into_iter().chain([a]).collect())
            })?;
            let dump = if cfg.out.is_some() {
                Some(format::grid_csv(n, false, &pointwise(&points, residual)?))
            } else {
                None
            };
            (Approach::T, grid, hj, ("gamma_relatedness", rel), dump)
        }
        Section::TZ(sec) => {
            let mut grid = cfg.grid.clone().unwrap_or_else(Grid::default_tz);
            if grid.z.is_none() {
                grid.z = Grid::default_tz().z;
            }
            let points = grid.points_tz(n);
            let residual = |t: f64, q: &[f64], z: f64| Ok(max_abs(&hj_dependent_residual(sec, h, t, q, z)?));
            let hj = sweep("hj", &points, tol, |t, q, z| Ok(vec![residual(t, q, z)?]))?;
            let co = sweep("coisotropy", &points, tol, |t, q, z| {
                Ok(coisotropy_residual(sec, t, q, z)?.into_iter().flatten().collect())
            })?;
            let dump = if cfg.out.is_some() {
                Some(format::grid_csv(n, true, &pointwise(&points, residual)?))
            } else {
                None
            };
            (Approach::TZ, grid, hj, ("coisotropy", co), dump)
        }
    };
    let verdict = hj.verdict && other.1.verdict;
    let mut report = json!({
        "run": model.header(cfg.command),
        "approach": approach.name(),
        "solution": solution,
        "lambda": lambda,
        "grid": {
            "t": axis_json(&grid.t),
            "q": axis_json(&grid.q),
            "z": grid.z.as_ref().map(axis_json),
        },
        "points": hj.points,
        "skipped": hj.skipped,
        "tolerance": tol,
        "residual": sup_mean(&hj),
        "verdict": verdict,
    });
    report[other.0] = sup_mean(&other.1);
    Ok(Outcome {
        report,
        csv: dump,
        verdict: Some(verdict),
    })
}

fn skip_domain<T>(r: Result<T, Error>) -> Result<Option<T>, Error> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Eval(EvalError::Domain { .. })) => Ok(None),
        Err(e) => Err(e),
    }
}

fn quantity_json(r: &QuantityReport) -> Value {
    json!({
        "name": r.label,
        "kind": r.kind.name(),
        "max": r.max,
        "mean": r.mean,
        "samples": r.samples,
        "skipped": r.skipped,
        "verdict": r.verdict,
    })
}

fn parse_kind(s: &str) -> Result<QuantityKind, RunError> {
    QuantityKind::from_name(s).ok_or_else(|| config(format!("unknown quantity kind `{s}`")))
}

fn quantity_check(cfg: &RunConfig, model: &Model) -> Result<Outcome, RunError> {
    let h = model.h()?;
    let tol = cfg.tol.unwrap_or(SELF_TEST_TOLERANCE);
    let mut entries: Vec<(String, QuantityKind, ScalarField)> = Vec::new();
    if let Some(src) = &cfg.f {
        if cfg.quantity.is_some() {
            return Err(config("--f and --quantity are mutually exclusive"));
        }
        let kind = cfg.kind.as_deref().ok_or_else(|| config("--f requires --kind"))?;
        entries.push((src.clone(), parse_kind(kind)?, model.field(src)?));
    } else {
        let sys = model.system("quantity-check without --f")?;
        let selected: Vec<_> = match &cfg.quantity {
            Some(name) => vec![sys.quantity(name)?],
            None => sys.quantities.iter().collect(),
        };
        for q in selected {
            let kind = match &cfg.kind {
                Some(k) => parse_kind(k)?,
                None => q.kind,
            };
            entries.push((q.name.clone(), kind, q.field.clone()));
        }
    }
    let g = match &cfg.g {
        Some(src) => Some(model.field(src)?),
        None => None,
    };
    let points = model.sample_box(cfg)?;
    let mut reports = Vec::new();
    for (name, kind, f) in &entries {
        let r = match kind {
            QuantityKind::Conserved => report(*kind, name, tol, &points, |x| skip_domain(conservation_residual(f, h, x)))?,
            QuantityKind::Dissipated => report(*kind, name, tol, &points, |x| skip_domain(dissipation_residual(f, h, x)))?,
            QuantityKind::BracketCharacterization => report(*kind, name, tol, &points, |x| {
                skip_domain(bracket_characterization_residual(f, h, x))
            })?,
            QuantityKind::Involution => {
                let g = g.as_ref().ok_or_else(|| config("involution requires --g"))?;
                report(*kind, name, tol, &points, |x| Ok(skip_domain(involution_residual(f, g, h, x))?.flatten()))?
            }
            QuantityKind::Symmetry => return Err(config("symmetries are checked by the noether command")),
        };
        reports.push(r);
    }
    let verdict = reports.iter().all(|r| r.verdict);
    let report = json!({
        "run": model.header(cfg.command),
        "box": { "samples": cfg.samples, "seed": cfg.seed },
        "tolerance": tol,
        "quantities": reports.iter().map(quantity_json).collect::<Vec<_>>(),
        "verdict": verdict,
    });
    Ok(Outcome {
        report,
        csv: None,
        verdict: Some(verdict),
    })
}

#[derive(Default)]
struct Stats {
    max: f64,
    sum: f64,
    count: usize,
}

impl Stats {
    fn add(&mut self, v: f64) {
        self.max = self.max.max(v.abs());
        self.sum += v.abs();
        self.count += 1;
    }

    fn json(&self) -> Value {
        if self.count == 0 {
            return json!({ "max": null, "mean": null });
        }
        json!({ "max": self.max, "mean": self.sum / self.count as f64 })
    }
}

fn noether(cfg: &RunConfig, model: &Model) -> Result<Outcome, RunError> {
    let h = model.h()?;
    let tol = cfg.tol.unwrap_or(NOETHER_TOLERANCE);
    let (name, f) = match (&cfg.f, &cfg.quantity) {
        (Some(_), Some(_)) => return Err(config("--f and --quantity are mutually exclusive")),
        (Some(src), None) => (src.clone(), model.field(src)?),
        (None, Some(q)) => {
            let q = model.system("--quantity")?.quantity(q)?;
            (q.name.clone(), q.field.clone())
        }
        (None, None) => {
            let sys = model.system("noether without --f")?;
            let mut dissipated = sys.quantities.iter().filter(|q| q.kind == QuantityKind::Dissipated);
            match (dissipated.next(), dissipated.next()) {
                (Some(q), None) => (q.name.clone(), q.field.clone()),
                _ => return Err(config("choose a quantity with --quantity")),
            }
        }
    };
    let y = noether_symmetry(&f, h);
    let points = model.sample_box(cfg)?;
    let values: Vec<Option<(f64, f64, f64)>> = points
        .par_iter()
        .map(|x| {
            skip_domain((|| {
                let (e, t) = y.residual(x)?;
                Ok((e, t, y.reconstruction_residual(x)?))
            })())
        })
        .collect::<Result<_, Error>>()?;
    let (mut eta, mut tau, mut rec) = (Stats::default(), Stats::default(), Stats::default());
    let mut skipped = 0;
    for v in values {
        match v {
            Some((e, t, r)) => {
                eta.add(e);
                tau.add(t);
                rec.add(r);
            }
            None => skipped += 1,
        }
    }
    let verdict = eta.count > 0 && eta.max <= tol && tau.max <= tol && rec.max <= RECONSTRUCTION_TOLERANCE;
    let report = json!({
        "run": model.header(cfg.command),
        "quantity": name,
        "box": { "samples": cfg.samples, "seed": cfg.seed },
        "points": eta.count,
        "skipped": skipped,
        "eta_residual": eta.json(),
        "tau_residual": tau.json(),
        "reconstruction_residual": rec.json(),
        "tolerance": tol,
        "reconstruction_tolerance": RECONSTRUCTION_TOLERANCE,
        "verdict": verdict,
    });
    Ok(Outcome {
        report,
        csv: None,
        verdict: Some(verdict),
    })
}

/// Position of a coordinate name in `(t, q, p, z)`, if `s` is one.
fn coordinate_slot(s: &str, n: usize) -> Option<usize> {
    let s = s.trim();
    if s == "z" {
        return Some(2 * n + 1);
    }
    let index = |rest: &str| rest.parse::<usize>().ok().filter(|i| (1..=n).contains(i));
    if let Some(i) = s.strip_prefix('q').and_then(index) {
        return Some(i);
    }
    s.strip_prefix('p').and_then(index).map(|i| n + i)
}

/// `{q_i, p_j} = delta`, `{q_i, q_j} = {p_i, p_j} = 0`, `{q_i, z} = -q_i`,
/// `{p_i, z} = -2 p_i`, each checked at every point.
fn darboux_table(n: usize, points: &[PhasePoint]) -> Result<(Vec<Value>, f64), RunError> {
    let name = |slot: usize| match slot {
        s if s <= n => format!("q{s}"),
        s if s <= 2 * n => format!("p{}", s - n),
        _ => "z".to_string(),
    };
    let z = 2 * n + 1;
    type Expected = Box<dyn Fn(&PhasePoint) -> f64 + Sync>;
    let mut pairs: Vec<(usize, usize, String, Expected)> = Vec::new();
    for i in 1..=n {
        for j in 1..=n {
            let d = if i == j { 1.0 } else { 0.0 };
            pairs.push((i, n + j, format!("{d}"), Box::new(move |_| d)));
            if i < j {
                pairs.push((i, j, "0".into(), Box::new(|_| 0.0)));
                pairs.push((n + i, n + j, "0".into(), Box::new(|_| 0.0)));
            }
        }
        pairs.push((i, z, format!("-q{i}"), Box::new(move |x| -x.q[i - 1])));
        pairs.push((n + i, z, format!("-2*p{i}"), Box::new(move |x| -2.0 * x.p[i - 1])));
    }
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for (a, b, expected, value) in &pairs {
        let (fa, fb) = (ScalarField::coordinate(*a, n), ScalarField::coordinate(*b, n));
        let errors: Vec<f64> = points
            .par_iter()
            .map(|x| Ok((jacobi_bracket(&fa, &fb, x)? - value(x)).abs()))
            .collect::<Result<_, Error>>()?;
        let sup = errors.into_iter().fold(0.0f64, f64::max);
        worst = worst.max(sup);
        rows.push(json!({ "f": name(*a), "g": name(*b), "expected": expected, "sup_error": sup }));
    }
    Ok((rows, worst))
}

fn bracket(cfg: &RunConfig, model: &Model) -> Result<Outcome, RunError> {
    let (fs, gs) = match (&cfg.f, &cfg.g) {
        (Some(f), Some(g)) => (f, g),
        _ => return Err(config("bracket requires --f and --g")),
    };
    let (f, g) = (model.field(fs)?, model.field(gs)?);
    let points = model.sample_box(cfg)?;
    let values: Vec<Option<f64>> = points
        .par_iter()
        .map(|x| skip_domain(jacobi_bracket(&f, &g, x)))
        .collect::<Result<_, Error>>()?;
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    let (min, max) = defined
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let stat = |v: f64| if defined.is_empty() { Value::Null } else { json!(v) };
    let mean = defined.iter().sum::<f64>() / defined.len().max(1) as f64;
    let mut report = json!({
        "run": model.header(cfg.command),
        "f": fs,
        "g": gs,
        "box": { "samples": cfg.samples, "seed": cfg.seed },
        "points": defined.len(),
        "skipped": values.len() - defined.len(),
        "min": stat(min),
        "max": stat(max),
        "mean": stat(mean),
        "darboux_table": null,
    });
    if coordinate_slot(fs, model.n).is_some() && coordinate_slot(gs, model.n).is_some() {
        let (rows, worst) = darboux_table(model.n, &points)?;
        report["darboux_table"] = json!({ "entries": rows, "sup_error": worst });
    }
    let rows: Vec<(PhasePoint, f64)> = points.into_iter().zip(values).map(|(x, v)| (x, v.unwrap_or(f64::NAN))).collect();
    Ok(Outcome {
        report,
        csv: Some(format::points_csv(model.n, "bracket", &rows)),
        verdict: None,
    })
}

fn reconstruct(cfg: &RunConfig, model: &Model) -> Result<Outcome, RunError> {
    let h = model.h()?;
    let n = model.n;
    let (solution, lambda) = match &cfg.generating {
        Some(src) => {
            if cfg.lambda.is_some() {
                return Err(config("--lambda applies only to built-in solutions"));
            }
            let sec = SectionT::from_generating(&GeneratingFunction::new(model.field(src)?));
            let family = move |_: &[f64]| Ok(Section::T(sec.clone()));
            (CompleteSolution::new(src.clone(), Approach::T, 0, family, None), Vec::new())
        }
        None => {
            let sys = model.system("reconstruct without --S")?;
            let sol = sys.solution().clone();
            if sol.approach != Approach::T {
                return Err(config(format!("`{}` is an action-dependent family; reconstruct needs --S", sol.name)));
            }
            let lambda = cfg.lambda.clone().unwrap_or_else(|| sys.default_lambda.clone());
            check_dim("--lambda", sol.lambda_dim, &lambda)?;
            (sol, lambda)
        }
    };
    let q0 = match (&cfg.q0, &model.system) {
        (Some(q), _) => q.clone(),
        (None, Some(sys)) => sys.default_init.q.clone(),
        (None, None) => vec![0.0; n],
    };
    check_dim("--q0", n, &q0)?;
    let t_end = cfg.t_end.unwrap_or(cfg.t0 + DEFAULT_T_END);
    let rec = reconstruct_t(&solution, h, &lambda, cfg.t0, &q0, t_end, cfg.scheme)?;
    let direct = integrate(h, rec.first(), t_end, cfg.scheme)?;
    let s = GeneratingFunction::new(solution.section_t(&lambda)?.action);
    let report = json!({
        "run": model.header(cfg.command),
        "solution": solution.name,
        "lambda": lambda,
        "t0": cfg.t0,
        "q0": q0,
        "leaf_start": point_json(rec.first()),
        "endpoint": point_json(rec.last()),
        "steps": steps_json(&rec),
        "direct_sup_difference": rec.sup_distance(&direct)?,
        "action_identity_defect": action_identity_check(&s, h, &rec)?,
    });
    Ok(Outcome {
        report,
        csv: Some(format::trajectory_csv(&rec)),
        verdict: None,
    })
}
