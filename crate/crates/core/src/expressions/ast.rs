use std::fmt;

use super::dual::Scalar;
use super::{Coords, EvalError, Params};

/// Phase-space coordinate referenced by an expression. Indices are 0-based;
/// the surface syntax is 1-based (`q1`, `p1`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    Q(usize),
    P(usize),
    Z,
}

impl Var {
    /// Position of this coordinate in the `(t, q, p, z)` ordering.
    pub fn slot(&self, n: usize) -> usize {
        match *self {
            Var::T => 0,
            Var::Q(i) => 1 + i,
            Var::P(i) => 1 + n + i,
            Var::Z => 1 + 2 * n,
        }
    }

    pub fn from_slot(slot: usize, n: usize) -> Var {
        match slot {
            0 => Var::T,
            s if s <= n => Var::Q(s - 1),
            s if s <= 2 * n => Var::P(s - n - 1),
            _ => Var::Z,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Var::T => write!(f, "t"),
            Var::Q(i) => write!(f, "q{}", i + 1),
            Var::P(i) => write!(f, "p{}", i + 1),
            Var::Z => write!(f, "z"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(&self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Sqrt,
    Abs,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

/// Expression tree. Immutable once built; evaluation never mutates it.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Param(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// True when no coordinate appears in the subtree.
    pub fn is_coordinate_free(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Param(_) => true,
            Expr::Var(_) => false,
            Expr::Neg(e) | Expr::Call(_, e) => e.is_coordinate_free(),
            Expr::Binary(_, l, r) => l.is_coordinate_free() && r.is_coordinate_free(),
        }
    }

    /// Parameter names referenced anywhere in the tree, sorted and deduplicated.
    pub fn parameters(&self) -> Vec<String> {
        fn walk(e: &Expr, out: &mut Vec<String>) {
            match e {
                Expr::Param(name) => out.push(name.clone()),
                Expr::Num(_) | Expr::Var(_) => {}
                Expr::Neg(e) | Expr::Call(_, e) => walk(e, out),
                Expr::Binary(_, l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort();
        out.dedup();
        out
    }

    /// Largest configuration index referenced (1-based), or 0.
    pub fn max_index(&self) -> usize {
        match self {
            Expr::Var(Var::Q(i)) | Expr::Var(Var::P(i)) => i + 1,
            Expr::Num(_) | Expr::Param(_) | Expr::Var(_) => 0,
            Expr::Neg(e) | Expr::Call(_, e) => e.max_index(),
            Expr::Binary(_, l, r) => l.max_index().max(r.max_index()),
        }
    }

    /// Symbolic partial derivative with respect to `var`, with constant
    /// folding of zeros and ones. Evaluation of the result fails only where
    /// the original expression already had a domain restriction.
    pub fn derivative(&self, var: Var) -> Expr {
        match self {
            Expr::Num(_) | Expr::Param(_) => Expr::Num(0.0),
            Expr::Var(v) => Expr::Num(if *v == var { 1.0 } else { 0.0 }),
            Expr::Neg(e) => neg(e.derivative(var)),
            Expr::Binary(op, l, r) => {
                let (dl, dr) = (l.derivative(var), r.derivative(var));
                let (l, r) = (l.as_ref().clone(), r.as_ref().clone());
                match op {
                    BinOp::Add => add(dl, dr),
                    BinOp::Sub => sub(dl, dr),
                    BinOp::Mul => add(mul(dl, r), mul(l, dr)),
                    BinOp::Div => {
                        let num = sub(mul(dl, r.clone()), mul(l, dr));
                        if is_zero(&num) {
                            return Expr::Num(0.0);
                        }
                        Expr::binary(BinOp::Div, num, Expr::binary(BinOp::Pow, r, Expr::Num(2.0)))
                    }
                    BinOp::Pow if r.is_coordinate_free() => {
                        if is_zero(&dl) {
                            return Expr::Num(0.0);
                        }
                        let lowered = match &r {
                            Expr::Num(c) if *c == 1.0 => return dl,
                            Expr::Num(c) => Expr::Num(c - 1.0),
                            _ => Expr::binary(BinOp::Sub, r.clone(), Expr::Num(1.0)),
                        };
                        mul(mul(r, Expr::binary(BinOp::Pow, l, lowered)), dl)
                    }
                    BinOp::Pow => {
                        // u^v (v' log u + v u'/u)
                        let log_term = mul(dr, Expr::Call(Func::Log, Box::new(l.clone())));
                        let ratio = if is_zero(&dl) {
                            Expr::Num(0.0)
                        } else {
                            Expr::binary(BinOp::Div, mul(r.clone(), dl), l.clone())
                        };
                        mul(self.clone(), add(log_term, ratio))
                    }
                }
            }
            Expr::Call(func, arg) => {
                let da = arg.derivative(var);
                if is_zero(&da) {
                    return Expr::Num(0.0);
                }
                let a = arg.as_ref().clone();
                let call = |f: Func, e: Expr| Expr::Call(f, Box::new(e));
                let outer = match func {
                    Func::Exp => self.clone(),
                    Func::Log => return Expr::binary(BinOp::Div, da, a),
                    Func::Sin => call(Func::Cos, a),
                    Func::Cos => neg(call(Func::Sin, a)),
                    Func::Sinh => call(Func::Cosh, a),
                    Func::Cosh => call(Func::Sinh, a),
                    Func::Sqrt => return Expr::binary(BinOp::Div, da, mul(Expr::Num(2.0), self.clone())),
                    Func::Abs => Expr::binary(BinOp::Div, a, self.clone()),
                };
                mul(outer, da)
            }
        }
    }

    pub fn eval<S: Scalar>(&self, x: &Coords<S>, params: &Params) -> Result<S, EvalError> {
        let v = match self {
            Expr::Num(c) => S::constant(*c),
            Expr::Var(var) => {
                let n = x.dim();
                match *var {
                    Var::T => x.t.clone(),
                    Var::Z => x.z.clone(),
                    Var::Q(i) | Var::P(i) if i >= n => {
                        return Err(EvalError::Dimension {
                            expected: i + 1,
                            found: n,
                        })
                    }
                    Var::Q(i) => x.q[i].clone(),
                    Var::P(i) => x.p[i].clone(),
                }
            }
            Expr::Param(name) => match params.get(name) {
                Some(v) => S::constant(*v),
                None => return Err(EvalError::UnboundParameter(name.clone())),
            },
            Expr::Neg(e) => -e.eval(x, params)?,
            Expr::Binary(op, l, r) => {
                let a = l.eval(x, params)?;
                let b = r.eval(x, params)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b.value() == 0.0 {
                            return Err(self.domain("division by zero"));
                        }
                        a / b
                    }
                    BinOp::Pow => self.eval_pow(a, b, r)?,
                }
            }
            Expr::Call(func, arg) => {
                let a = arg.eval(x, params)?;
                match func {
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if a.value() <= 0.0 {
                            return Err(self.domain("logarithm of a non-positive number"));
                        }
                        a.ln()
                    }
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Sinh => a.sinh(),
                    Func::Cosh => a.cosh(),
                    Func::Sqrt => {
                        if a.value() < 0.0 {
                            return Err(self.domain("square root of a negative number"));
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                }
            }
        };
        if !v.value().is_finite() {
            return Err(EvalError::NonFinite {
                node: self.to_string(),
            });
        }
        Ok(v)
    }

    fn eval_pow<S: Scalar>(&self, base: S, exponent: S, exponent_expr: &Expr) -> Result<S, EvalError> {
        let e = exponent.value();
        let integral = e.fract() == 0.0 && e.abs() <= i32::MAX as f64;
        if integral && exponent_expr.is_coordinate_free() {
            if base.value() == 0.0 && e < 0.0 {
                return Err(self.domain("zero raised to a negative power"));
            }
            return Ok(base.powi(e as i64));
        }
        if base.value() <= 0.0 {
            return Err(self.domain("non-integer power of a non-positive base"));
        }
        Ok(base.powf(&exponent))
    }

    fn domain(&self, reason: &str) -> EvalError {
        EvalError::Domain {
            node: self.to_string(),
            reason: reason.to_string(),
        }
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Num(c) if *c == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Num(c) if *c == 1.0)
}

fn add(a: Expr, b: Expr) -> Expr {
    match (is_zero(&a), is_zero(&b)) {
        (true, _) => b,
        (_, true) => a,
        _ => Expr::binary(BinOp::Add, a, b),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (is_zero(&a), is_zero(&b)) {
        (_, true) => a,
        (true, _) => neg(b),
        _ => Expr::binary(BinOp::Sub, a, b),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) || is_zero(&b) {
        Expr::Num(0.0)
    } else if is_one(&a) {
        b
    } else if is_one(&b) {
        a
    } else {
        Expr::binary(BinOp::Mul, a, b)
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(0.0) => Expr::Num(0.0),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn fmt_operand(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Neg(_) => write!(f, "({e})"),
        _ => write!(f, "{e}"),
    }
}

/// Unparse. Binary nodes are fully parenthesized so the output reparses to
/// the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) if *c < 0.0 || c.is_sign_negative() => write!(f, "({c:?})"),
            Expr::Num(c) => write!(f, "{c:?}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Param(name) => write!(f, "{name}"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                fmt_operand(e, f)
            }
            Expr::Binary(op, l, r) => {
                write!(f, "(")?;
                fmt_operand(l, f)?;
                write!(f, " {} ", op.symbol())?;
                fmt_operand(r, f)?;
                write!(f, ")")
            }
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}
