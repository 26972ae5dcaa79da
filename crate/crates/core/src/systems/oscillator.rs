use std::sync::Arc;

use super::params::{Forcing, Reader};
use super::{domain_error, numeric, parse_field, QuadratureCache, RegisteredQuantity, SystemParams, SystemSpec};
use crate::error::Error;
use crate::expressions::{Coords, Dual, Scalar};
use crate::field::ScalarField;
use crate::hamilton_jacobi::{Approach, CompleteSolution, InverseMap, Section, SectionTZ};
use crate::quantities::QuantityKind;

/// Below this `|u| = |kappa^2 t^2 / 4m^2|` the series branch is used.
const SERIES_CUTOFF: f64 = 1e-8;
/// The leaf is undefined where `|gamma Sh + C|` falls below this.
const DENOMINATOR_FLOOR: f64 = 1e-9;

/// Oscillator constants; `kappa2 = gamma^2 - 4km`.
#[derive(Debug, Clone, Copy)]
struct Osc {
    m: f64,
    k: f64,
    gamma: f64,
    kappa2: f64,
}

impl Osc {
    /// `(Sh, C) = (sinh(kappa t/2m)/kappa, cosh(kappa t/2m))`, real for
    /// every sign of `kappa^2`.
    fn sh_c<S: Scalar>(&self, t: &S) -> (S, S) {
        let tv = t.value();
        if (self.kappa2 * tv * tv / (4.0 * self.m * self.m)).abs() < SERIES_CUTOFF {
            self.series(t)
        } else {
            self.closed(t)
        }
    }

    /// Four terms of `sinh(x)/x` and `cosh(x)` in `u = x^2`.
    fn series<S: Scalar>(&self, t: &S) -> (S, S) {
        let m = self.m;
        let one = || S::constant(1.0);
        let u = t.clone() * t.scale(self.kappa2 / (4.0 * m * m));
        let sinhc = one() + u.clone() * (one().scale(1.0 / 6.0) + u.clone() * (one().scale(1.0 / 120.0) + u.scale(1.0 / 5040.0)));
        let cosh = one() + u.clone() * (one().scale(0.5) + u.clone() * (one().scale(1.0 / 24.0) + u.scale(1.0 / 720.0)));
        (t.scale(0.5 / m) * sinhc, cosh)
    }

    fn closed<S: Scalar>(&self, t: &S) -> (S, S) {
        let kappa = self.kappa2.abs().sqrt();
        let x = t.scale(kappa / (2.0 * self.m));
        if self.kappa2 > 0.0 {
            (x.sinh().scale(1.0 / kappa), x.cosh())
        } else {
            (x.sin().scale(1.0 / kappa), x.cos())
        }
    }

    /// `e^(gamma t/2m) (Sh (2kmq + gamma p) + p C)`, the forcing-free part of g.
    fn free_part(&self, x: &Coords<Dual>) -> Dual {
        let (sh, c) = self.sh_c(&x.t);
        let (q, p) = (x.q[0].clone(), x.p[0].clone());
        let growth = x.t.scale(self.gamma / (2.0 * self.m)).exp();
        growth * (sh * (q.scale(2.0 * self.k * self.m) + p.scale(self.gamma)) + p * c)
    }
}

/// `int_1^t F(s) e^(gamma s/2m) (C + gamma Sh) ds`, identically zero without forcing.
#[derive(Clone)]
enum ForcingIntegral {
    Zero,
    Cached(Arc<QuadratureCache>),
}

impl ForcingIntegral {
    fn new(osc: Osc, forcing: Forcing) -> Self {
        if forcing == Forcing::Zero {
            return ForcingIntegral::Zero;
        }
        ForcingIntegral::Cached(Arc::new(QuadratureCache::new(1.0, move |s| {
            let (sh, c) = osc.sh_c(&s);
            Ok(forcing.value(s) * (osc.gamma * s / (2.0 * osc.m)).exp() * (c + osc.gamma * sh))
        })))
    }

    fn eval(&self, t: &Dual) -> Result<Dual, Error> {
        match self {
            ForcingIntegral::Zero => Ok(Dual::constant(0.0)),
            ForcingIntegral::Cached(c) => c.integral_dual(t),
        }
    }
}

/// `H = p^2/2m + k q^2/2 - q F(t) + gamma z/m`:
///
/// * `g = e^(gamma t/2m) (Sh (2kmq + gamma p) + p C) - I_F` (conserved);
/// * `f = e^(-gamma t/m) g` (dissipated);
/// * the leaf `g = lambda` is
///   `p = e^(-gamma t/2m) (lambda + I_F - 2kmq e^(gamma t/2m) Sh) / (gamma Sh + C)`.
pub(super) fn build(params: &SystemParams) -> Result<SystemSpec, Error> {
    let r = Reader::new(params, &["m", "k", "friction", "forcing", "F0", "omega"])?;
    let m = r.positive("m")?;
    let k = r.number("k")?;
    let gamma = r.number("friction")?;
    let forcing = Forcing::read(&r)?;
    let osc = Osc {
        m,
        k,
        gamma,
        kappa2: gamma * gamma - 4.0 * k * m,
    };
    let h = parse_field(
        &format!("p1^2/(2*m) + k*q1^2/2 - q1*{} + friction*z/m", forcing.source()),
        &numeric(params),
    )?;
    let integral = ForcingIntegral::new(osc, forcing);

    let ig = integral.clone();
    let g = ScalarField::builtin("exp(gamma*t/2m)*(Sh*(2*k*m*q1 + gamma*p1) + p1*C) - I_F", 1, move |x| {
        Ok(osc.free_part(x) - ig.eval(&x.t)?)
    });
    let ifd = integral.clone();
    let f = ScalarField::builtin("exp(-gamma*t/m)*g", 1, move |x| {
        let decay = x.t.scale(-gamma / m).exp();
        Ok(decay * (osc.free_part(x) - ifd.eval(&x.t)?))
    });

    let is = integral.clone();
    let family = move |lambda: &[f64]| -> Result<Section, Error> {
        let l = lambda[0];
        let integral = is.clone();
        let p = ScalarField::builtin(format!("P(t, q1; {l:?})"), 1, move |x| {
            let (sh, c) = osc.sh_c(&x.t);
            let den = sh.clone().scale(gamma) + c;
            if den.value.abs() < DENOMINATOR_FLOOR {
                return Err(domain_error("P", "gamma Sh + C vanishes"));
            }
            let growth = x.t.scale(gamma / (2.0 * m)).exp();
            let num = Dual::constant(l) + integral.eval(&x.t)? - x.q[0].scale(2.0 * k * m) * growth.clone() * sh;
            Ok(num / (growth * den))
        });
        Ok(Section::TZ(SectionTZ::new(vec![p])?))
    };
    let inverse = InverseMap {
        labels: vec!["lambda".into()],
        fields: vec![g.clone()],
    };
    let solution = CompleteSolution::new("P_lambda", Approach::TZ, 1, family, Some(inverse));

    let default_lambda = vec![1.0];
    let default_init = solution.section_tz(&default_lambda)?.point(0.0, &[1.0], 0.0)?;
    Ok(SystemSpec {
        name: "damped_oscillator".into(),
        n: 1,
        params: params.clone(),
        hamiltonian: h,
        quantities: vec![
            RegisteredQuantity {
                name: "g".into(),
                kind: QuantityKind::Conserved,
                field: g,
            },
            RegisteredQuantity {
                name: "f".into(),
                kind: QuantityKind::Dissipated,
                field: f,
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
    use super::super::{build_system_with_defaults, ParamValue, SystemParams, DEFAULT_T_RANGE};
    use super::*;
    use crate::geometry::PhasePoint;
    use crate::quantities::{conservation_residual, dissipation_residual};

    fn build(pairs: &[(&str, ParamValue)]) -> SystemSpec {
        let p: SystemParams = pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        build_system_with_defaults("damped_oscillator", &p, DEFAULT_T_RANGE).unwrap()
    }

    fn num(v: f64) -> ParamValue {
        ParamValue::Number(v)
    }

    #[test]
    fn undamped_reduction() {
        let sys = build(&[("friction", num(0.0))]);
        let g = &sys.quantity("g").unwrap().field;
        for (t, q, p) in [(0.3, 1.0, -0.5), (1.7, -0.2, 0.9), (2.0, 1.5, 1.5)] {
            let x = PhasePoint::new(t, vec![q], vec![p], 0.4).unwrap();
            let expected = q * f64::sin(t) + p * f64::cos(t);
            assert!((g.eval(&x).unwrap() - expected).abs() < 1e-14);
            assert!(conservation_residual(g, &sys.hamiltonian, &x).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn branches_meet_at_critical_damping() {
        for kappa2 in [1e-6, -1e-6, 3e-9, -3e-9] {
            let osc = Osc {
                m: 1.0,
                k: 1.0,
                gamma: 2.0,
                kappa2,
            };
            for t in [1e-3, 0.05, 0.2, 1.0, 2.0] {
                let td = Dual::variable(t, 0, 1);
                let (s1, c1) = osc.series(&td);
                let (s2, c2) = osc.closed(&td);
                for (a, b) in [(s1, s2), (c1, c2)] {
                    assert!((a.value - b.value).abs() < 1e-12, "{kappa2} {t}");
                    assert!((a.partials[0] - b.partials[0]).abs() < 1e-9, "{kappa2} {t}");
                }
            }
        }
        // Across the critical friction the conserved quantity moves continuously.
        let x = PhasePoint::new(1.3, vec![0.6], vec![-0.4], 0.0).unwrap();
        let at = |friction: f64| {
            let sys = build(&[("friction", num(friction))]);
            sys.quantity("g").unwrap().field.eval_grad(&x).unwrap()
        };
        let (c, dc) = at(2.0);
        for friction in [2.0 + 1e-9, 2.0 - 1e-9, 2.0 + 1e-12, 2.0 - 1e-12] {
            let (v, dv) = at(friction);
            assert!((v - c).abs() < 1e-6, "{friction}: {v} vs {c}");
            for (a, b) in dv.to_vec().iter().zip(dc.to_vec()) {
                assert!((a - b).abs() < 1e-6, "{friction}: {dv:?} vs {dc:?}");
            }
        }
    }

    #[test]
    fn overdamped_and_underdamped_residuals() {
        for friction in [0.2, 1.99, 2.0, 2.01, 5.0] {
            let sys = build(&[("friction", num(friction))]);
            let (g, f) = (&sys.quantity("g").unwrap().field, &sys.quantity("f").unwrap().field);
            let x = PhasePoint::new(1.1, vec![-0.7], vec![0.3], 1.5).unwrap();
            assert!(conservation_residual(g, &sys.hamiltonian, &x).unwrap().abs() < 1e-12, "{friction}");
            assert!(dissipation_residual(f, &sys.hamiltonian, &x).unwrap().abs() < 1e-12, "{friction}");
        }
    }

    #[test]
    fn forced_quantities() {
        for forcing in ["constant", "sinusoidal"] {
            let sys = build(&[
                ("forcing", ParamValue::Choice(forcing.into())),
                ("F0", num(0.8)),
                ("omega", num(1.7)),
            ]);
            for r in sys.self_test().unwrap() {
                assert!(r.verdict, "{forcing}: {r:?}");
            }
            let sec = sys.solution().section_tz(&[0.4]).unwrap();
            let x = sec.point(0.6, &[0.2], 0.0).unwrap();
            assert!((sys.solution().invert(&x).unwrap()[0] - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn leaf_is_undefined_where_the_denominator_vanishes() {
        // With m = k = 1, gamma = 0.2 the denominator has a root near t = 1.679.
        let sys = build(&[]);
        let sec = sys.solution().section_tz(&[1.0]).unwrap();
        let osc = Osc {
            m: 1.0,
            k: 1.0,
            gamma: 0.2,
            kappa2: 0.04 - 4.0,
        };
        let den = |t: f64| {
            let (sh, c) = osc.sh_c(&t);
            0.2 * sh + c
        };
        let (mut a, mut b) = (1.5, 1.9);
        assert!(den(a) > 0.0 && den(b) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if den(mid) > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        assert!((a - 1.679).abs() < 1e-3);
        assert!(matches!(
            sec.point(a, &[0.0], 0.0),
            Err(Error::Eval(crate::expressions::EvalError::Domain { .. }))
        ));
    }
}
