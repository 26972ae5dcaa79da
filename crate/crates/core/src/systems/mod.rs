//! Built-in example systems with closed-form complete solutions.
//!
//! | name | `H` | approach |
//! |---|---|---|
//! | `free_particle_autonomous` | `p^2/2 - kappa z` | T |
//! | `free_particle_tm` | `p^2/2m(t) - kappa z/m(t)` | T |
//! | `falling_particle` | `p^2/2m(t) + m(t) g q + gamma z/m(t)` | TZ |
//! | `damped_oscillator` | `p^2/2m + k q^2/2 - q F(t) + gamma z/m` | TZ |

mod falling;
mod oscillator;
mod params;
mod particles;
mod quadrature;

use std::fmt;
use std::sync::Arc;

pub use params::{Forcing, MassLaw, ParamValue, SystemParams};
pub use quadrature::QuadratureCache;

use crate::error::Error;
use crate::expressions::{EvalError, Params};
use crate::field::ScalarField;
use crate::geometry::PhasePoint;
use crate::hamilton_jacobi::{
    coisotropy_residual, gamma_relatedness_residual_t, hj_dependent_residual, hj_independent_residual, sweep,
    CompleteSolution, GeneratingFunction, GridReport, Section,
};
use crate::quantities::{conservation_residual, dissipation_residual, report, QuantityKind, QuantityReport};
use crate::sampling::{Grid, PhaseBox, DEFAULT_SAMPLES, DEFAULT_SEED};

pub const SYSTEM_NAMES: [&str; 4] = [
    "free_particle_autonomous",
    "free_particle_tm",
    "falling_particle",
    "damped_oscillator",
];

/// Time span used when none is given.
pub const DEFAULT_T_RANGE: (f64, f64) = (0.0, 2.0);

/// Residual tolerance of [`SystemSpec::self_test`].
pub const SELF_TEST_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct RegisteredQuantity {
    pub name: String,
    pub kind: QuantityKind,
    pub field: ScalarField,
}

/// `(lambda, t0, q0, t) -> x(t)` on the leaf `lambda` through `q0` at `t0`.
pub type Orbit = dyn Fn(&[f64], f64, &[f64], f64) -> Result<PhasePoint, Error> + Send + Sync;

#[derive(Clone)]
pub struct SystemSpec {
    pub name: String,
    pub n: usize,
    pub params: SystemParams,
    pub hamiltonian: ScalarField,
    pub quantities: Vec<RegisteredQuantity>,
    pub solutions: Vec<CompleteSolution>,
    pub default_init: PhasePoint,
    pub default_lambda: Vec<f64>,
    orbit: Option<Arc<Orbit>>,
}

impl fmt::Debug for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemSpec")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("params", &self.params)
            .field("hamiltonian", &self.hamiltonian.label())
            .field("quantities", &self.quantities.iter().map(|q| &q.name).collect::<Vec<_>>())
            .field("solutions", &self.solutions)
            .field("orbit", &self.orbit.is_some())
            .finish()
    }
}

impl SystemSpec {
    pub fn quantity(&self, name: &str) -> Result<&RegisteredQuantity, Error> {
        self.quantities.iter().find(|q| q.name == name).ok_or_else(|| {
            let known: Vec<&str> = self.quantities.iter().map(|q| q.name.as_str()).collect();
            Error::InvalidArgument(format!(
                "`{}` has no quantity `{name}` (known: {})",
                self.name,
                known.join(", ")
            ))
        })
    }

    /// The registered complete solution.
    pub fn solution(&self) -> &CompleteSolution {
        &self.solutions[0]
    }

    pub fn has_orbit(&self) -> bool {
        self.orbit.is_some()
    }

    /// Closed-form trajectory on the leaf `lambda` through `(t0, q0)`.
    pub fn orbit(&self, lambda: &[f64], t0: f64, q0: &[f64], t: f64) -> Result<PhasePoint, Error> {
        let orbit = self
            .orbit
            .as_ref()
            .ok_or_else(|| Error::NotApplicable(format!("`{}` has no closed-form orbit", self.name)))?;
        if lambda.len() != self.solution().lambda_dim {
            return Err(Error::Dimension {
                expected: self.solution().lambda_dim,
                found: lambda.len(),
            });
        }
        if q0.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: q0.len(),
            });
        }
        orbit(lambda, t0, q0, t)
    }

    /// Residual of every registered quantity against its declared kind on
    /// the default box.
    pub fn self_test(&self) -> Result<Vec<QuantityReport>, Error> {
        let points = PhaseBox::default_for(self.n).sample(DEFAULT_SAMPLES, DEFAULT_SEED)?;
        self.quantities
            .iter()
            .map(|q| self.check_quantity(q, &points, SELF_TEST_TOLERANCE))
            .collect()
    }

    pub fn check_quantity(
        &self,
        q: &RegisteredQuantity,
        points: &[PhasePoint],
        tolerance: f64,
    ) -> Result<QuantityReport, Error> {
        let h = &self.hamiltonian;
        report(q.kind, q.name.clone(), tolerance, points, |x| {
            let r = match q.kind {
                QuantityKind::Dissipated => dissipation_residual(&q.field, h, x),
                _ => conservation_residual(&q.field, h, x),
            };
            skip_domain(r)
        })
    }

    /// Hamilton-Jacobi residuals of the leaf `lambda` over `grid`. For T
    /// sections each point reports the HJ equation and both tangency
    /// conditions; for TZ sections the HJ equation and the coisotropy
    /// condition. Points where the section is undefined are skipped.
    pub fn hj_report(&self, lambda: &[f64], grid: &Grid, tolerance: f64) -> Result<GridReport, Error> {
        let h = &self.hamiltonian;
        let label = format!("{}: {}", self.name, self.solution().name);
        match self.solution().section(lambda)? {
            Section::T(sec) => {
                let s = GeneratingFunction::new(sec.action.clone());
                let points: Vec<(f64, Vec<f64>, f64)> =
                    grid.base_points(self.n).into_iter().map(|(t, q)| (t, q, 0.0)).collect();
                sweep(label, &points, tolerance, |t, q, _| {
                    let mut r = vec![hj_independent_residual(&s, h, t, q)?];
                    let (momenta, action) = gamma_relatedness_residual_t(&sec, h, t, q)?;
                    r.extend(momenta);
                    r.push(action);
                    Ok(r)
                })
            }
            Section::TZ(sec) => {
                let grid = if grid.z.is_some() { grid.clone() } else { Grid { z: Grid::default_tz().z, ..grid.clone() } };
                let points = grid.points_tz(self.n);
                sweep(label, &points, tolerance, |t, q, z| {
                    let mut r = hj_dependent_residual(&sec, h, t, q, z)?;
                    r.extend(coisotropy_residual(&sec, t, q, z)?.into_iter().flatten());
                    Ok(r)
                })
            }
        }
    }
}

fn skip_domain(r: Result<f64, Error>) -> Result<Option<f64>, Error> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Eval(EvalError::Domain { .. })) => Ok(None),
        Err(e) => Err(e),
    }
}

pub(crate) fn domain_error(node: &str, reason: &str) -> Error {
    EvalError::Domain {
        node: node.to_string(),
        reason: reason.to_string(),
    }
    .into()
}

/// Numeric parameters of a [`SystemParams`] map, for binding into expressions.
pub(crate) fn numeric(params: &SystemParams) -> Params {
    params
        .iter()
        .filter_map(|(k, v)| match v {
            ParamValue::Number(x) => Some((k.clone(), *x)),
            ParamValue::Choice(_) => None,
        })
        .collect()
}

/// Parse `source`, keeping it verbatim as the label.
pub(crate) fn parse_field(source: &str, params: &Params) -> Result<ScalarField, Error> {
    Ok(ScalarField::parse(source, 1, params)?.with_label(source))
}

fn number(v: f64) -> ParamValue {
    ParamValue::Number(v)
}

fn choice(s: &str) -> ParamValue {
    ParamValue::Choice(s.to_string())
}

/// Default parameters of a built-in system.
pub fn default_params(name: &str) -> Result<SystemParams, Error> {
    let pairs: Vec<(&str, ParamValue)> = match name {
        "free_particle_autonomous" => vec![("kappa", number(2.0))],
        "free_particle_tm" => vec![
            ("kappa", number(1.0)),
            ("mass_law", choice("linear")),
            ("m0", number(1.0)),
            ("mass_rate", number(1.0)),
        ],
        "falling_particle" => vec![
            ("g", number(9.8)),
            ("friction", number(0.5)),
            ("mass_law", choice("linear")),
            ("m0", number(1.0)),
            ("mass_rate", number(0.1)),
        ],
        "damped_oscillator" => vec![
            ("m", number(1.0)),
            ("k", number(1.0)),
            ("friction", number(0.2)),
            ("forcing", choice("zero")),
            ("F0", number(0.0)),
            ("omega", number(1.0)),
        ],
        other => return Err(Error::UnknownSystem(other.to_string())),
    };
    Ok(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

/// Build a system from a complete parameter map. `t_range` is the time span
/// on which the mass law must stay positive (together with the lower limits
/// of the registered integrals).
pub fn build_system(name: &str, params: &SystemParams, t_range: (f64, f64)) -> Result<SystemSpec, Error> {
    if !(t_range.0.is_finite() && t_range.1.is_finite()) {
        return Err(Error::InvalidArgument(format!("time range {t_range:?} is not finite")));
    }
    match name {
        "free_particle_autonomous" => particles::autonomous(params),
        "free_particle_tm" => particles::time_dependent_mass(params, t_range),
        "falling_particle" => falling::build(params, t_range),
        "damped_oscillator" => oscillator::build(params),
        other => Err(Error::UnknownSystem(other.to_string())),
    }
}

/// [`build_system`] with `overrides` merged over the defaults.
pub fn build_system_with_defaults(
    name: &str,
    overrides: &SystemParams,
    t_range: (f64, f64),
) -> Result<SystemSpec, Error> {
    let mut params = default_params(name)?;
    for (k, v) in overrides {
        if !params.contains_key(k) {
            return Err(Error::UnknownParameter(k.clone()));
        }
        params.insert(k.clone(), v.clone());
    }
    build_system(name, &params, t_range)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_system_and_parameter() {
        assert!(matches!(
            build_system_with_defaults("pendulum", &SystemParams::new(), DEFAULT_T_RANGE),
            Err(Error::UnknownSystem(_))
        ));
        let extra: SystemParams = [("mass".to_string(), number(1.0))].into();
        assert!(matches!(
            build_system_with_defaults("damped_oscillator", &extra, DEFAULT_T_RANGE),
            Err(Error::UnknownParameter(k)) if k == "mass"
        ));
        let mut missing = default_params("falling_particle").unwrap();
        missing.remove("g");
        assert!(matches!(
            build_system("falling_particle", &missing, DEFAULT_T_RANGE),
            Err(Error::MissingParameter(k)) if k == "g"
        ));
    }

    #[test]
    fn non_positive_mass_is_rejected() {
        let bad: SystemParams = [("mass_rate".to_string(), number(-1.0))].into();
        assert!(matches!(
            build_system_with_defaults("free_particle_tm", &bad, (0.0, 2.0)),
            Err(Error::NonPositiveMass { .. })
        ));
        assert!(build_system_with_defaults("free_particle_tm", &bad, (0.0, 0.5)).is_ok());
        assert!(matches!(
            build_system_with_defaults("falling_particle", &bad, (0.0, 0.5)),
            Err(Error::NonPositiveMass { t }) if t == 1.0
        ));
        let m: SystemParams = [("m".to_string(), number(0.0))].into();
        assert!(build_system_with_defaults("damped_oscillator", &m, DEFAULT_T_RANGE).is_err());
    }

    #[test]
    fn every_builtin_self_tests() {
        for name in SYSTEM_NAMES {
            let sys = build_system_with_defaults(name, &SystemParams::new(), DEFAULT_T_RANGE).unwrap();
            for r in sys.self_test().unwrap() {
                assert!(r.verdict, "{name}: {r:?}");
            }
        }
    }

    #[test]
    fn every_builtin_solves_hj_on_the_default_grid() {
        for name in SYSTEM_NAMES {
            let sys = build_system_with_defaults(name, &SystemParams::new(), DEFAULT_T_RANGE).unwrap();
            let grid = match sys.solution().approach {
                crate::hamilton_jacobi::Approach::T => Grid::default_t(),
                crate::hamilton_jacobi::Approach::TZ => Grid::default_tz(),
            };
            let r = sys.hj_report(&sys.default_lambda, &grid, 1e-6).unwrap();
            assert!(r.verdict, "{name}: {r:?}");
        }
    }

    #[test]
    fn default_init_lies_on_the_default_leaf() {
        for name in SYSTEM_NAMES {
            let sys = build_system_with_defaults(name, &SystemParams::new(), DEFAULT_T_RANGE).unwrap();
            let x = &sys.default_init;
            let on_leaf = match sys.solution().section(&sys.default_lambda).unwrap() {
                Section::T(s) => s.point(x.t, &x.q).unwrap(),
                Section::TZ(s) => s.point(x.t, &x.q, x.z).unwrap(),
            };
            for (a, b) in on_leaf.to_vec().iter().zip(x.to_vec()) {
                assert!((a - b).abs() < 1e-12, "{name}: {on_leaf:?} vs {x:?}");
            }
        }
    }
}
