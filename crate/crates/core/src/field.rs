//! Scalar functions on extended phase space with first-derivative access.

use std::fmt;
use std::sync::Arc;

use crate::error::Error;
use crate::expressions::{self, Coords, Dual, EvalError, Expr, Params, Scalar, Var};
use crate::geometry::{Covector, PhasePoint};

/// Closure form of a built-in field. It receives dual-number coordinates and
/// must propagate their tangents; plain evaluation passes constant duals.
pub type BuiltinFn = dyn Fn(&Coords<Dual>) -> Result<Dual, Error> + Send + Sync;

#[derive(Clone)]
enum Kind {
    Expr { expr: Arc<Expr>, params: Arc<Params> },
    Builtin(Arc<BuiltinFn>),
    /// `d base / d x_slot`, with second derivatives by central differences.
    Partial { base: Box<ScalarField>, slot: usize },
}

/// A cheaply clonable, thread-safe scalar field on `R x T*Q x R` of fixed
/// dimension `n`.
#[derive(Clone)]
pub struct ScalarField {
    n: usize,
    label: Arc<str>,
    kind: Kind,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("n", &self.n)
            .field("label", &self.label)
            .finish()
    }
}

const HESSIAN_STEP: f64 = 1e-5;

impl ScalarField {
    /// Wrap a parsed expression. Parameters must all be bound and indices
    /// must fit in `n`.
    pub fn from_expr(expr: Expr, params: Params, n: usize) -> Result<Self, Error> {
        if expr.max_index() > n {
            return Err(Error::Dimension {
                expected: n,
                found: expr.max_index(),
            });
        }
        if let Some(name) = expr.parameters().into_iter().find(|p| !params.contains_key(p)) {
            return Err(EvalError::UnboundParameter(name).into());
        }
        Ok(ScalarField {
            n,
            label: expr.to_string().into(),
            kind: Kind::Expr {
                expr: Arc::new(expr),
                params: Arc::new(params),
            },
        })
    }

    pub fn parse(source: &str, n: usize, params: &Params) -> Result<Self, Error> {
        let expr = expressions::parse(source, n)?;
        let used = expr.parameters();
        let bound = params
            .iter()
            .filter(|(k, _)| used.contains(k))
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        ScalarField::from_expr(expr, bound, n)
    }

    pub fn builtin(
        label: impl Into<String>,
        n: usize,
        f: impl Fn(&Coords<Dual>) -> Result<Dual, Error> + Send + Sync + 'static,
    ) -> Self {
        ScalarField {
            n,
            label: label.into().into(),
            kind: Kind::Builtin(Arc::new(f)),
        }
    }

    pub fn constant(c: f64, n: usize) -> Self {
        ScalarField::builtin(format!("{c:?}"), n, move |_| Ok(Dual::constant(c)))
    }

    /// The coordinate function in position `slot` of `(t, q, p, z)`.
    pub fn coordinate(slot: usize, n: usize) -> Self {
        let label = match slot {
            0 => "t".to_string(),
            s if s <= n => format!("q{s}"),
            s if s <= 2 * n => format!("p{}", s - n),
            _ => "z".to_string(),
        };
        ScalarField::builtin(label, n, move |x| {
            Ok(match slot {
                0 => x.t.clone(),
                s if s <= n => x.q[s - 1].clone(),
                s if s <= 2 * n => x.p[s - n - 1].clone(),
                _ => x.z.clone(),
            })
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into().into();
        self
    }

    fn check(&self, n: usize) -> Result<(), Error> {
        if n != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: n,
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &PhasePoint) -> Result<f64, Error> {
        self.check(x.dim())?;
        match &self.kind {
            Kind::Expr { expr, params } => Ok(expressions::eval(expr, x, params)?),
            Kind::Builtin(f) => finite(f(&Coords::constant(x))?.value, &self.label),
            Kind::Partial { base, slot } => Ok(base.eval_grad(x)?.1.to_vec()[*slot]),
        }
    }

    /// Value and differential at `x`.
    pub fn eval_grad(&self, x: &PhasePoint) -> Result<(f64, Covector), Error> {
        self.check(x.dim())?;
        let len = 2 * self.n + 2;
        match &self.kind {
            Kind::Expr { expr, params } => Ok(expressions::eval_with_grad(expr, x, params)?),
            Kind::Builtin(f) => {
                let d = f(&Coords::seeded(x))?;
                if !d.is_finite() {
                    return Err(non_finite(&self.label));
                }
                Ok((d.value, Covector::from_gradient(self.n, &d.gradient(len))))
            }
            Kind::Partial { base, slot } => {
                let value = base.eval_grad(x)?.1.to_vec()[*slot];
                let mut hess = vec![0.0; len];
                let v = x.to_vec();
                for (k, h_k) in hess.iter_mut().enumerate() {
                    let h = HESSIAN_STEP * v[k].abs().max(1.0);
                    let mut plus = v.clone();
                    plus[k] += h;
                    let mut minus = v.clone();
                    minus[k] -= h;
                    let gp = base.eval_grad(&PhasePoint::from_slice(&plus)?)?.1.to_vec()[*slot];
                    let gm = base.eval_grad(&PhasePoint::from_slice(&minus)?)?.1.to_vec()[*slot];
                    *h_k = (gp - gm) / (2.0 * h);
                }
                Ok((value, Covector::from_gradient(self.n, &hess)))
            }
        }
    }

    /// Evaluate on dual coordinates, chaining through their tangents.
    pub fn eval_dual(&self, x: &Coords<Dual>) -> Result<Dual, Error> {
        self.check(x.dim())?;
        match &self.kind {
            Kind::Expr { expr, params } => Ok(expr.eval(x, params)?),
            Kind::Builtin(f) => f(x),
            Kind::Partial { .. } => {
                let v = x.values();
                let point = PhasePoint::new(v.t, v.q, v.p, v.z)?;
                let (value, grad) = self.eval_grad(&point)?;
                let slots = std::iter::once(&x.t)
                    .chain(&x.q)
                    .chain(&x.p)
                    .chain(std::iter::once(&x.z));
                let mut out = Dual::constant(value);
                for (g, xi) in grad.to_vec().into_iter().zip(slots) {
                    if !xi.partials.is_empty() {
                        out = out + Dual::new(0.0, xi.partials.iter().map(|d| g * d).collect());
                    }
                }
                Ok(out)
            }
        }
    }

    /// `d self / d x_slot` as a field of its own.
    /// Expression fields differentiate symbolically; other fields take second
    /// derivatives by central differences.
    pub fn partial(&self, slot: usize) -> ScalarField {
        if let Kind::Expr { expr, params } = &self.kind {
            let d = expr.derivative(Var::from_slot(slot, self.n));
            return ScalarField {
                n: self.n,
                label: format!("d({})/dx{slot}", self.label).into(),
                kind: Kind::Expr {
                    expr: Arc::new(d),
                    params: params.clone(),
                },
            };
        }
        ScalarField {
            n: self.n,
            label: format!("d({})/dx{slot}", self.label).into(),
            kind: Kind::Partial {
                base: Box::new(self.clone()),
                slot,
            },
        }
    }

    /// Pointwise combination of two fields of the same dimension.
    pub fn zip_with(
        &self,
        other: &ScalarField,
        label: String,
        op: impl Fn(Dual, Dual) -> Result<Dual, Error> + Send + Sync + 'static,
    ) -> ScalarField {
        let (a, b) = (self.clone(), other.clone());
        ScalarField::builtin(label, self.n, move |x| op(a.eval_dual(x)?, b.eval_dual(x)?))
    }

    pub fn product(&self, other: &ScalarField) -> ScalarField {
        let label = format!("({}) * ({})", self.label, other.label);
        self.zip_with(other, label, |a, b| Ok(a * b))
    }

    pub fn quotient(&self, other: &ScalarField) -> ScalarField {
        let label = format!("({}) / ({})", self.label, other.label);
        let node = label.clone();
        self.zip_with(other, label, move |a, b| {
            if b.value == 0.0 {
                return Err(EvalError::Domain {
                    node: node.clone(),
                    reason: "division by zero".into(),
                }
                .into());
            }
            Ok(a / b)
        })
    }

    pub fn powi(&self, k: i64) -> ScalarField {
        let a = self.clone();
        ScalarField::builtin(format!("({})^{k}", self.label), self.n, move |x| {
            Ok(Scalar::powi(&a.eval_dual(x)?, k))
        })
    }

    pub fn scaled(&self, c: f64) -> ScalarField {
        let a = self.clone();
        ScalarField::builtin(format!("{c:?} * ({})", self.label), self.n, move |x| {
            Ok(a.eval_dual(x)?.scale(c))
        })
    }
}

fn non_finite(label: &str) -> Error {
    EvalError::NonFinite {
        node: label.to_string(),
    }
    .into()
}

fn finite(v: f64, label: &str) -> Result<f64, Error> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(non_finite(label))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(t: f64, q: f64, p: f64, z: f64) -> PhasePoint {
        PhasePoint::new(t, vec![q], vec![p], z).unwrap()
    }

    #[test]
    fn builtin_and_expression_agree() {
        let e = ScalarField::parse("exp(t)*q1*p1 - z^2", 1, &Params::new()).unwrap();
        let b = ScalarField::builtin("same", 1, |x| {
            Ok(x.t.exp() * x.q[0].clone() * x.p[0].clone() - x.z.clone() * x.z.clone())
        });
        let x = pt(0.3, 1.2, -0.7, 0.4);
        let (ve, ge) = e.eval_grad(&x).unwrap();
        let (vb, gb) = b.eval_grad(&x).unwrap();
        assert_eq!(ve, e.eval(&x).unwrap());
        assert_eq!(vb, b.eval(&x).unwrap());
        assert!((ve - vb).abs() < 1e-15);
        for (u, v) in ge.to_vec().iter().zip(gb.to_vec()) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn unbound_parameter_rejected_at_construction() {
        let err = ScalarField::parse("kappa*z", 1, &Params::new()).unwrap_err();
        assert_eq!(err, Error::Eval(EvalError::UnboundParameter("kappa".into())));
    }

    #[test]
    fn partial_field_has_hessian_row() {
        let s = ScalarField::parse("q1^3*t", 1, &Params::new()).unwrap();
        let sq = s.partial(1);
        let x = pt(2.0, 1.5, 0.0, 0.0);
        let (v, g) = sq.eval_grad(&x).unwrap();
        assert!((v - 3.0 * 2.25 * 2.0).abs() < 1e-12);
        assert!((g.t - 3.0 * 2.25).abs() < 1e-14);
        assert!((g.q[0] - 6.0 * 1.5 * 2.0).abs() < 1e-14);
    }

    #[test]
    fn builtin_partial_uses_differences() {
        let s = ScalarField::builtin("q^3 t", 1, |x| Ok(x.q[0].clone() * x.q[0].clone() * x.q[0].clone() * x.t.clone()));
        let (_, g) = s.partial(1).eval_grad(&pt(2.0, 1.5, 0.0, 0.0)).unwrap();
        assert!((g.q[0] - 18.0).abs() < 1e-6);
    }

    #[test]
    fn quotient_reports_zero_denominator() {
        let one = ScalarField::constant(1.0, 1);
        let q = ScalarField::coordinate(1, 1);
        let r = one.quotient(&q);
        assert!(matches!(
            r.eval(&pt(0.0, 0.0, 1.0, 0.0)),
            Err(Error::Eval(EvalError::Domain { .. }))
        ));
        assert_eq!(r.eval(&pt(0.0, 4.0, 1.0, 0.0)).unwrap(), 0.25);
    }

    #[test]
    fn coordinate_fields() {
        let x = PhasePoint::new(1.0, vec![2.0, 3.0], vec![4.0, 5.0], 6.0).unwrap();
        let vals: Vec<f64> = (0..6)
            .map(|s| ScalarField::coordinate(s, 2).eval(&x).unwrap())
            .collect();
        assert_eq!(vals, x.to_vec());
        assert_eq!(ScalarField::coordinate(3, 2).label(), "p1");
    }
}
