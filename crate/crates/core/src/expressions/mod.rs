//! User-supplied scalar expressions over `(t, q, p, z)` and named parameters,
//! with exact first derivatives through forward-mode dual numbers.

mod ast;
mod dual;
mod parser;

use std::collections::BTreeMap;

pub use ast::{BinOp, Expr, Func, Var};
pub use dual::{Dual, Scalar};
pub use parser::parse;

use crate::geometry::{Covector, PhasePoint};

/// Parameter bindings, e.g. `kappa -> 2.0`.
pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{kind} at offset {position}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte offset into the source.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("unexpected character `{0}`")]
    Lexical(String),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("`{name}` is out of range for dimension {dimension}")]
    IndexOutOfRange { name: String, dimension: usize },
    #[error("unbalanced parentheses")]
    UnbalancedParentheses,
    #[error("unexpected token {0}")]
    UnexpectedToken(String),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("empty expression")]
    Empty,
    #[error("dimension must be at least 1")]
    ZeroDimension,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("domain error in `{node}`: {reason}")]
    Domain { node: String, reason: String },
    #[error("parameter `{0}` is not bound")]
    UnboundParameter(String),
    #[error("expected a point with at least {expected} degrees of freedom, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("non-finite value in `{node}`")]
    NonFinite { node: String },
}

/// Evaluation environment: one coordinate value per slot of `(t, q, p, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coords<S> {
    pub t: S,
    pub q: Vec<S>,
    pub p: Vec<S>,
    pub z: S,
}

impl<S: Scalar> Coords<S> {
    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn zeros(n: usize) -> Self {
        Coords {
            t: S::constant(0.0),
            q: vec![S::constant(0.0); n],
            p: vec![S::constant(0.0); n],
            z: S::constant(0.0),
        }
    }

    pub fn values(&self) -> Coords<f64> {
        Coords {
            t: self.t.value(),
            q: self.q.iter().map(Scalar::value).collect(),
            p: self.p.iter().map(Scalar::value).collect(),
            z: self.z.value(),
        }
    }
}

impl Coords<f64> {
    pub fn from_point(x: &PhasePoint) -> Self {
        Coords {
            t: x.t,
            q: x.q.clone(),
            p: x.p.clone(),
            z: x.z,
        }
    }
}

impl Coords<Dual> {
    /// Every coordinate seeded as an independent variable, tangents of
    /// length `2n + 2` in `(t, q, p, z)` order.
    pub fn seeded(x: &PhasePoint) -> Self {
        let n = x.dim();
        let len = 2 * n + 2;
        Coords {
            t: Dual::variable(x.t, 0, len),
            q: (0..n).map(|i| Dual::variable(x.q[i], 1 + i, len)).collect(),
            p: (0..n).map(|i| Dual::variable(x.p[i], 1 + n + i, len)).collect(),
            z: Dual::variable(x.z, 1 + 2 * n, len),
        }
    }

    /// All coordinates as constants (no tangent).
    pub fn constant(x: &PhasePoint) -> Self {
        Coords {
            t: Dual::constant(x.t),
            q: x.q.iter().map(|v| Dual::constant(*v)).collect(),
            p: x.p.iter().map(|v| Dual::constant(*v)).collect(),
            z: Dual::constant(x.z),
        }
    }
}

/// Value and differential of `e` at `x`. The value is bit-identical to
/// [`eval`]; the gradient comes from one dual-number pass.
pub fn eval_with_grad(e: &Expr, x: &PhasePoint, params: &Params) -> Result<(f64, Covector), EvalError> {
    let d = e.eval(&Coords::seeded(x), params)?;
    if !d.is_finite() {
        return Err(EvalError::NonFinite { node: e.to_string() });
    }
    Ok((d.value, Covector::from_gradient(x.dim(), &d.gradient(2 * x.dim() + 2))))
}

/// Derivative-free evaluation.
pub fn eval(e: &Expr, x: &PhasePoint, params: &Params) -> Result<f64, EvalError> {
    e.eval(&Coords::from_point(x), params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(t: f64, q: f64, p: f64, z: f64) -> PhasePoint {
        PhasePoint::new(t, vec![q], vec![p], z).unwrap()
    }

    #[test]
    fn product_rule_example() {
        let e = parse("q1*p1", 1).unwrap();
        let (v, g) = eval_with_grad(&e, &pt(0.0, 2.0, 3.0, 0.0), &Params::new()).unwrap();
        assert_eq!(v, 6.0);
        assert_eq!(g.q, vec![3.0]);
        assert_eq!(g.p, vec![2.0]);
        assert_eq!(g.t, 0.0);
        assert_eq!(g.z, 0.0);
    }

    #[test]
    fn symbolic_derivative_matches_dual_gradient() {
        let params: Params = [("a".to_string(), 0.7)].into();
        let x = PhasePoint::new(0.4, vec![0.8, -1.3], vec![1.1, 0.5], 0.9).unwrap();
        for src in [
            "q1^2*p2 - a*z",
            "exp(t*q2)/(1 + p1^2)",
            "sqrt(q1^2 + 1)*log(1 + z^2)",
            "sinh(p1)*cosh(q2) + sin(t)*cos(z)",
            "abs(q2)^3 + q1^a",
            "(1 + q1^2)^(t + p2)",
            "-(-p1)^4 + 3",
        ] {
            let e = parse(src, 2).unwrap();
            let (_, g) = eval_with_grad(&e, &x, &params).unwrap();
            for (slot, gk) in g.to_vec().into_iter().enumerate() {
                let d = e.derivative(Var::from_slot(slot, 2));
                let v = eval(&d, &x, &params).unwrap();
                assert!((v - gk).abs() < 1e-13 * gk.abs().max(1.0), "{src} slot {slot}: {v} vs {gk}");
            }
        }
    }

    #[test]
    fn derivative_folds_constants() {
        let e = parse("q1*p1 + 2*z", 1).unwrap();
        assert_eq!(e.derivative(Var::T), Expr::Num(0.0));
        assert_eq!(e.derivative(Var::Z), Expr::Num(2.0));
        assert_eq!(e.derivative(Var::Q(0)), Expr::Var(Var::P(0)));
    }

    #[test]
    fn exponential_in_time() {
        let e = parse("exp(t)", 1).unwrap();
        let (v, g) = eval_with_grad(&e, &pt(1.0, 0.3, 0.1, 0.0), &Params::new()).unwrap();
        assert_eq!(v, std::f64::consts::E);
        assert_eq!(g.t, std::f64::consts::E);
    }

    #[test]
    fn parameter_binding() {
        let e = parse("p1^2/2 - kappa*z", 1).unwrap();
        let x = pt(0.0, 1.0, 2.0, 1.0);
        assert_eq!(
            eval(&e, &x, &Params::new()).unwrap_err(),
            EvalError::UnboundParameter("kappa".into())
        );
        let params = Params::from([("kappa".to_string(), 2.0)]);
        let (v, g) = eval_with_grad(&e, &x, &params).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(g.p, vec![2.0]);
        assert_eq!(g.z, -2.0);
    }

    #[test]
    fn domain_errors_name_the_node() {
        let x = pt(0.0, -1.0, 0.0, 0.0);
        let cases = [
            ("log(q1)", "log(q1)"),
            ("sqrt(q1)", "sqrt(q1)"),
            ("1/(q1+1)", "(1.0 / (q1 + 1.0))"),
            ("q1^0.5", "(q1 ^ 0.5)"),
        ];
        for (src, node) in cases {
            let e = parse(src, 1).unwrap();
            match eval(&e, &x, &Params::new()).unwrap_err() {
                EvalError::Domain { node: got, .. } => assert_eq!(got, node),
                other => panic!("{src}: {other:?}"),
            }
        }
    }

    #[test]
    fn integer_powers_of_negative_bases() {
        let e = parse("q1^3 + q1^-2", 1).unwrap();
        let (v, g) = eval_with_grad(&e, &pt(0.0, -2.0, 0.0, 0.0), &Params::new()).unwrap();
        assert_eq!(v, -8.0 + 0.25);
        assert!((g.q[0] - (12.0 + 0.25)).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_at_eval() {
        let e = parse("q2", 2).unwrap();
        assert!(matches!(
            eval(&e, &pt(0.0, 1.0, 1.0, 0.0), &Params::new()),
            Err(EvalError::Dimension { expected: 2, found: 1 })
        ));
    }
}
