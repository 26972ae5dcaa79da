use std::sync::Arc;

use super::params::{MassLaw, Reader};
use super::{numeric, parse_field, QuadratureCache, RegisteredQuantity, SystemParams, SystemSpec};
use crate::error::Error;
use crate::expressions::{Dual, Scalar};
use crate::field::ScalarField;
use crate::hamilton_jacobi::{Approach, CompleteSolution, InverseMap, Section, SectionTZ};
use crate::quantities::QuantityKind;

/// `H = p^2/2m + m g q + gamma z/m` with
/// `J(t) = int_1^t gamma/m` and `K(t) = int_1^t e^J(u) m(u) du`:
///
/// * `f = e^J p + g K` (conserved), `k = e^-J f` (dissipated);
/// * the leaf `f = lambda` is `p = e^-J (lambda - g K)`.
pub(super) fn build(params: &SystemParams, t_range: (f64, f64)) -> Result<SystemSpec, Error> {
    let r = Reader::new(params, &["g", "friction", "mass_law", "m0", "mass_rate"])?;
    let g = r.number("g")?;
    let friction = r.number("friction")?;
    let mass = MassLaw::read(&r)?;
    mass.check_positive(t_range.0.min(1.0), t_range.1.max(1.0))?;
    let m = mass.source();
    let h = parse_field(&format!("p1^2/(2*{m}) + {m}*g*q1 + friction*z/{m}"), &numeric(params))?;

    let j = Arc::new(QuadratureCache::new(1.0, move |s| Ok(friction / mass.value(s))));
    let jk = Arc::clone(&j);
    let k = Arc::new(QuadratureCache::new(1.0, move |u| Ok(jk.integral(u)?.exp() * mass.value(u))));

    let (jf, kf) = (Arc::clone(&j), Arc::clone(&k));
    let f = ScalarField::builtin("exp(J)*p1 + g*K", 1, move |x| {
        let ej = jf.integral_dual(&x.t)?.exp();
        Ok(ej * x.p[0].clone() + kf.integral_dual(&x.t)?.scale(g))
    });
    let (jd, kd) = (Arc::clone(&j), Arc::clone(&k));
    let dissipated = ScalarField::builtin("p1 + g*exp(-J)*K", 1, move |x| {
        let ej = jd.integral_dual(&x.t)?.scale(-1.0).exp();
        Ok(x.p[0].clone() + ej * kd.integral_dual(&x.t)?.scale(g))
    });

    let (js, ks) = (Arc::clone(&j), Arc::clone(&k));
    let family = move |lambda: &[f64]| -> Result<Section, Error> {
        let l = lambda[0];
        let (j, k) = (Arc::clone(&js), Arc::clone(&ks));
        let p = ScalarField::builtin(format!("exp(-J)*({l:?} - g*K)"), 1, move |x| {
            let e = j.integral_dual(&x.t)?.scale(-1.0).exp();
            Ok(e * (Dual::constant(l) - k.integral_dual(&x.t)?.scale(g)))
        });
        Ok(Section::TZ(SectionTZ::new(vec![p])?))
    };
    let inverse = InverseMap {
        labels: vec!["lambda".into()],
        fields: vec![f.clone()],
    };
    let solution = CompleteSolution::new("P_lambda", Approach::TZ, 1, family, Some(inverse));

    let default_lambda = vec![1.0];
    let default_init = solution.section_tz(&default_lambda)?.point(0.0, &[0.0], 0.0)?;
    Ok(SystemSpec {
        name: "falling_particle".into(),
        n: 1,
        params: params.clone(),
        hamiltonian: h,
        quantities: vec![
            RegisteredQuantity {
                name: "f".into(),
                kind: QuantityKind::Conserved,
                field: f,
            },
            RegisteredQuantity {
                name: "k".into(),
                kind: QuantityKind::Dissipated,
                field: dissipated,
            },
        ],
        solutions: vec![solution],
        default_init,
        default_lambda,
        orbit: None,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{build_system_with_defaults, ParamValue};
    use super::*;
    use crate::geometry::PhasePoint;

    fn constant_mass() -> SystemSpec {
        let p = [
            ("mass_law".to_string(), ParamValue::Choice("constant".into())),
            ("m0".to_string(), ParamValue::Number(1.0)),
        ]
        .into();
        build_system_with_defaults("falling_particle", &p, (0.0, 2.0)).unwrap()
    }

    #[test]
    fn constant_mass_example_up_to_its_normalization() {
        // e^(0.5 t) p + 9.8 (e^(0.5 t) - e^0.5)/0.5 is e^0.5 times f.
        let sys = constant_mass();
        let f = &sys.quantity("f").unwrap().field;
        for (t, p) in [(0.0, 1.0), (0.7, -0.3), (1.9, 2.0), (1.0, 0.4)] {
            let x = PhasePoint::new(t, vec![0.2], vec![p], 0.1).unwrap();
            let example = (0.5 * t).exp() * p + 9.8 * ((0.5 * t).exp() - 0.5f64.exp()) / 0.5;
            assert!((0.5f64.exp() * f.eval(&x).unwrap() - example).abs() < 1e-11, "t = {t}");
        }
    }

    #[test]
    fn constant_mass_example_is_conserved() {
        let sys = constant_mass();
        let h = sys.hamiltonian.clone();
        let example = ScalarField::parse("exp(0.5*t)*p1 + 9.8*(exp(0.5*t) - exp(0.5))/0.5", 1, &Default::default()).unwrap();
        let x = PhasePoint::new(0.4, vec![1.0], vec![-0.6], 0.3).unwrap();
        assert!(crate::quantities::conservation_residual(&example, &h, &x).unwrap().abs() < 1e-12);
    }

    #[test]
    fn nested_integral_against_closed_form() {
        // m = 1 + 0.1 t, gamma = 0.5: e^J = (m(t)/m(1))^5 and K = (m^7 - m(1)^7)/(0.7 m(1)^5).
        let sys = build_system_with_defaults("falling_particle", &Default::default(), (0.0, 2.0)).unwrap();
        let f = &sys.quantity("f").unwrap().field;
        let (t, p) = (1.8, 0.7);
        let (m, m1) = (1.0 + 0.1 * t, 1.1f64);
        let ej = (m / m1).powi(5);
        let kk = (m.powi(7) - m1.powi(7)) / (0.7 * m1.powi(5));
        let x = PhasePoint::new(t, vec![0.0], vec![p], 0.0).unwrap();
        assert!((f.eval(&x).unwrap() - (ej * p + 9.8 * kk)).abs() < 1e-11);
    }

    #[test]
    fn section_inverts_f() {
        let sys = build_system_with_defaults("falling_particle", &Default::default(), (0.0, 2.0)).unwrap();
        let sec = sys.solution().section_tz(&[-0.8]).unwrap();
        for t in [0.0, 0.5, 1.0, 1.7] {
            let x = sec.point(t, &[0.3], 1.2).unwrap();
            assert!((sys.solution().invert(&x).unwrap()[0] + 0.8).abs() < 1e-12);
        }
    }

    #[test]
    fn dissipated_is_rescaled_conserved() {
        let sys = build_system_with_defaults("falling_particle", &Default::default(), (0.0, 2.0)).unwrap();
        let (f, k) = (&sys.quantity("f").unwrap().field, &sys.quantity("k").unwrap().field);
        let x = PhasePoint::new(0.25, vec![1.0], vec![0.5], 0.0).unwrap();
        let e = (0.5f64 * 10.0 * ((1.0 + 0.025) / 1.1f64).ln()).exp();
        assert!((k.eval(&x).unwrap() * e - f.eval(&x).unwrap()).abs() < 1e-12);
    }
}
