use std::sync::Arc;

use super::params::{MassLaw, Reader};
use super::{numeric, parse_field, QuadratureCache, RegisteredQuantity, SystemParams, SystemSpec};
use crate::error::Error;
use crate::expressions::{Dual, Params, Scalar};
use crate::field::ScalarField;
use crate::geometry::PhasePoint;
use crate::hamilton_jacobi::{Approach, CompleteSolution, InverseMap, Section, SectionT};
use crate::quantities::QuantityKind;

/// `H = p^2/2 - kappa z`, with `S = e^(kappa t) + (sqrt(kappa/2) q + lambda)^2`.
pub(super) fn autonomous(params: &SystemParams) -> Result<SystemSpec, Error> {
    let r = Reader::new(params, &["kappa"])?;
    let kappa = r.positive("kappa")?;
    let bound = numeric(params);
    let h = parse_field("p1^2/2 - kappa*z", &bound)?;
    let f1 = parse_field("(p1 - kappa*q1)/sqrt(2*kappa)", &bound)?;
    let time = parse_field("log(abs(z - p1^2/(2*kappa)))/kappa", &bound)?;

    let family = move |lambda: &[f64]| -> Result<Section, Error> {
        let p: Params = [("kappa".to_string(), kappa), ("lambda".to_string(), lambda[0])].into();
        let gamma = parse_field("sqrt(2*kappa)*(sqrt(kappa/2)*q1 + lambda)", &p)?;
        let action = parse_field("exp(kappa*t) + (sqrt(kappa/2)*q1 + lambda)^2", &p)?;
        Ok(Section::T(SectionT::new(vec![gamma], action)?))
    };
    let inverse = InverseMap {
        labels: vec!["time".into(), "lambda".into()],
        fields: vec![time, f1.clone()],
    };
    let solution = CompleteSolution::new("S_lambda", Approach::T, 1, family, Some(inverse));

    // q = c e^(kappa t) - sqrt(2/kappa) lambda on the leaf.
    let orbit = move |lambda: &[f64], t0: f64, q0: &[f64], t: f64| {
        let shift = (2.0 / kappa).sqrt() * lambda[0];
        let c = (q0[0] + shift) * (-kappa * t0).exp();
        let e = (kappa * t).exp();
        let q = c * e - shift;
        PhasePoint::new(t, vec![q], vec![kappa * c * e], e + 0.5 * kappa * c * c * e * e)
    };

    let default_lambda = vec![0.0];
    let default_init = orbit(&default_lambda, 0.0, &[1.0], 0.0)?;
    Ok(SystemSpec {
        name: "free_particle_autonomous".into(),
        n: 1,
        params: params.clone(),
        hamiltonian: h,
        quantities: vec![RegisteredQuantity {
            name: "f1".into(),
            kind: QuantityKind::Conserved,
            field: f1,
        }],
        solutions: vec![solution],
        default_init,
        default_lambda,
        orbit: Some(Arc::new(orbit)),
    })
}

/// `H = p^2/2m(t) - kappa z/m(t)`, with
/// `S = lambda1 e^(kappa I(t)) + (sqrt(kappa/2) q + lambda2)^2` and `I(t) = int_0^t 1/m`.
pub(super) fn time_dependent_mass(params: &SystemParams, t_range: (f64, f64)) -> Result<SystemSpec, Error> {
    let r = Reader::new(params, &["kappa", "mass_law", "m0", "mass_rate"])?;
    let kappa = r.positive("kappa")?;
    let mass = MassLaw::read(&r)?;
    mass.check_positive(t_range.0.min(0.0), t_range.1.max(0.0))?;
    let bound = numeric(params);
    let m = mass.source();
    let h = parse_field(&format!("p1^2/(2*{m}) - kappa*z/{m}"), &bound)?;

    let inv_mass = Arc::new(QuadratureCache::new(0.0, move |s| Ok(1.0 / mass.value(s))));
    let i0 = Arc::clone(&inv_mass);
    let f1 = ScalarField::builtin("exp(-kappa*int_0^t 1/m)*(z - p1^2/(2*kappa))", 1, move |x| {
        let decay = i0.integral_dual(&x.t)?.scale(-kappa).exp();
        let p2 = x.p[0].clone() * x.p[0].clone();
        Ok(decay * (x.z.clone() - p2.scale(0.5 / kappa)))
    });
    let f2 = parse_field("(p1 - kappa*q1)/sqrt(2*kappa)", &bound)?;

    let i0 = Arc::clone(&inv_mass);
    let family = move |lambda: &[f64]| -> Result<Section, Error> {
        let (l1, l2) = (lambda[0], lambda[1]);
        let p: Params = [("kappa".to_string(), kappa), ("lambda2".to_string(), l2)].into();
        let gamma = parse_field("sqrt(2*kappa)*(sqrt(kappa/2)*q1 + lambda2)", &p)?;
        let cache = Arc::clone(&i0);
        let action = ScalarField::builtin(
            format!("{l1:?}*exp(kappa*int_0^t 1/m) + (sqrt(kappa/2)*q1 + {l2:?})^2"),
            1,
            move |x: &crate::expressions::Coords<Dual>| {
                let growth = cache.integral_dual(&x.t)?.scale(kappa).exp();
                let b = x.q[0].scale((kappa / 2.0).sqrt()) + Dual::constant(l2);
                Ok(growth.scale(l1) + b.clone() * b)
            },
        );
        Ok(Section::T(SectionT::new(vec![gamma], action)?))
    };
    let inverse = InverseMap {
        labels: vec!["lambda1".into(), "lambda2".into()],
        fields: vec![f1.clone(), f2.clone()],
    };
    let solution = CompleteSolution::new("S_lambda", Approach::T, 2, family, Some(inverse));

    // On the leaf u = p = kappa q + sqrt(2 kappa) lambda2 obeys u' = kappa u/m.
    let i0 = Arc::clone(&inv_mass);
    let orbit = move |lambda: &[f64], t0: f64, q0: &[f64], t: f64| {
        let b = (2.0 * kappa).sqrt() * lambda[1];
        let (a0, a) = (i0.integral(t0)?, i0.integral(t)?);
        let u = (kappa * q0[0] + b) * (kappa * (a - a0)).exp();
        let q = (u - b) / kappa;
        let z = lambda[0] * (kappa * a).exp() + u * u / (2.0 * kappa);
        PhasePoint::new(t, vec![q], vec![u], z)
    };

    let default_lambda = vec![1.0, 0.0];
    let default_init = orbit(&default_lambda, 0.0, &[1.0], 0.0)?;
    Ok(SystemSpec {
        name: "free_particle_tm".into(),
        n: 1,
        params: params.clone(),
        hamiltonian: h,
        quantities: vec![
            RegisteredQuantity {
                name: "f1".into(),
                kind: QuantityKind::Conserved,
                field: f1,
            },
            RegisteredQuantity {
                name: "f2".into(),
                kind: QuantityKind::Conserved,
                field: f2,
            },
        ],
        solutions: vec![solution],
        default_init,
        default_lambda,
        orbit: Some(Arc::new(orbit)),
    })
}
