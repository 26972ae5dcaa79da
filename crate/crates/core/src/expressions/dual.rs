//! Forward-mode dual numbers.
//!
//! A [`Dual`] carries a value and a dense tangent vector. An empty tangent
//! stands for the zero vector, so constants and "plain" evaluation pay no
//! allocation cost. Mixed-length arithmetic treats the shorter operand as
//! zero-padded; in practice every non-empty tangent in one computation has
//! the same length (the `2n + 2` phase-space coordinates).

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Numeric type the expression evaluator and the built-in formulas are
/// generic over. Implemented by `f64` (value only) and [`Dual`] (value plus
/// first derivatives).
///
/// The value part of every operation must be computed exactly as the `f64`
/// implementation computes it so that both evaluation paths agree bit for bit.
pub trait Scalar:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(value: f64) -> Self;
    fn value(&self) -> f64;
    /// True when the tangent part is identically zero.
    fn is_constant(&self) -> bool;

    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn sinh(&self) -> Self;
    fn cosh(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn abs(&self) -> Self;

    /// Integer power by binary exponentiation (repeated multiplication).
    fn powi(&self, exponent: i64) -> Self {
        if exponent == 0 {
            return Self::constant(1.0);
        }
        let mut base = self.clone();
        let mut e = exponent.unsigned_abs();
        let mut acc: Option<Self> = None;
        while e > 0 {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a * base.clone(),
                });
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        let acc = acc.expect("non-zero exponent");
        if exponent < 0 {
            Self::constant(1.0) / acc
        } else {
            acc
        }
    }

    /// `self^exponent` for a positive base, as `exp(exponent * ln(self))`.
    fn powf(&self, exponent: &Self) -> Self {
        (exponent.clone() * self.ln()).exp()
    }

    fn scale(&self, factor: f64) -> Self {
        self.clone() * Self::constant(factor)
    }
}

impl Scalar for f64 {
    fn constant(value: f64) -> Self {
        value
    }
    fn value(&self) -> f64 {
        *self
    }
    fn is_constant(&self) -> bool {
        true
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn sinh(&self) -> Self {
        f64::sinh(*self)
    }
    fn cosh(&self) -> Self {
        f64::cosh(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dual {
    pub value: f64,
    pub partials: Vec<f64>,
}

impl Dual {
    pub fn new(value: f64, partials: Vec<f64>) -> Self {
        Dual { value, partials }
    }

    pub fn constant(value: f64) -> Self {
        Dual {
            value,
            partials: Vec::new(),
        }
    }

    /// The `index`-th coordinate of a `len`-dimensional space.
    pub fn variable(value: f64, index: usize, len: usize) -> Self {
        let mut partials = vec![0.0; len];
        partials[index] = 1.0;
        Dual { value, partials }
    }

    /// Partial derivative along `index`; zero when the tangent is empty.
    pub fn partial(&self, index: usize) -> f64 {
        self.partials.get(index).copied().unwrap_or(0.0)
    }

    /// Tangent padded to `len` entries.
    pub fn gradient(&self, len: usize) -> Vec<f64> {
        let mut g = self.partials.clone();
        g.resize(len, 0.0);
        g
    }

    /// Chain rule for a scalar function with value `value` and derivative
    /// `slope` at `self.value`.
    pub fn chain(&self, value: f64, slope: f64) -> Dual {
        Dual {
            value,
            partials: self.partials.iter().map(|d| slope * d).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.partials.iter().all(|d| d.is_finite())
    }
}

fn zip_with(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let len = a.len().max(b.len());
    (0..len)
        .map(|i| {
            f(
                a.get(i).copied().unwrap_or(0.0),
                b.get(i).copied().unwrap_or(0.0),
            )
        })
        .collect()
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual {
            value: self.value + rhs.value,
            partials: zip_with(&self.partials, &rhs.partials, |a, b| a + b),
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        Dual {
            value: self.value - rhs.value,
            partials: zip_with(&self.partials, &rhs.partials, |a, b| a - b),
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        let (u, v) = (self.value, rhs.value);
        Dual {
            value: u * v,
            partials: zip_with(&self.partials, &rhs.partials, |du, dv| du * v + u * dv),
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        let (u, v) = (self.value, rhs.value);
        let v2 = v * v;
        Dual {
            value: u / v,
            partials: zip_with(&self.partials, &rhs.partials, |du, dv| {
                (du * v - u * dv) / v2
            }),
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual {
            value: -self.value,
            partials: self.partials.iter().map(|d| -d).collect(),
        }
    }
}

macro_rules! ref_and_scalar_ops {
    ($($tr:ident $method:ident),*) => {$(
        impl<'a> $tr<&'a Dual> for &'a Dual {
            type Output = Dual;
            fn $method(self, rhs: &'a Dual) -> Dual {
                $tr::$method(self.clone(), rhs.clone())
            }
        }
        impl $tr<f64> for Dual {
            type Output = Dual;
            fn $method(self, rhs: f64) -> Dual {
                $tr::$method(self, Dual::constant(rhs))
            }
        }
        impl $tr<Dual> for f64 {
            type Output = Dual;
            fn $method(self, rhs: Dual) -> Dual {
                $tr::$method(Dual::constant(self), rhs)
            }
        }
    )*};
}

ref_and_scalar_ops!(Add add, Sub sub, Mul mul, Div div);

impl Scalar for Dual {
    fn constant(value: f64) -> Self {
        Dual::constant(value)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn is_constant(&self) -> bool {
        self.partials.iter().all(|d| *d == 0.0)
    }
    fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e)
    }
    fn ln(&self) -> Self {
        self.chain(self.value.ln(), 1.0 / self.value)
    }
    fn sin(&self) -> Self {
        self.chain(self.value.sin(), self.value.cos())
    }
    fn cos(&self) -> Self {
        self.chain(self.value.cos(), -self.value.sin())
    }
    fn sinh(&self) -> Self {
        self.chain(self.value.sinh(), self.value.cosh())
    }
    fn cosh(&self) -> Self {
        self.chain(self.value.cosh(), self.value.sinh())
    }
    fn sqrt(&self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s)
    }
    fn abs(&self) -> Self {
        let slope = if self.value > 0.0 {
            1.0
        } else if self.value < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.chain(self.value.abs(), slope)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule() {
        let x = Dual::variable(2.0, 0, 2);
        let y = Dual::variable(3.0, 1, 2);
        let f = &x * &y;
        assert_eq!(f.value, 6.0);
        assert_eq!(f.partials, vec![3.0, 2.0]);
    }

    #[test]
    fn constants_carry_no_tangent() {
        let c = Dual::constant(4.0) * Dual::constant(2.0);
        assert!(c.partials.is_empty());
        assert!(Scalar::is_constant(&c));
    }

    #[test]
    fn powi_matches_repeated_product() {
        let x = Dual::variable(1.5, 0, 1);
        let cube = x.powi(3);
        assert_eq!(cube.value, 1.5 * 1.5 * 1.5);
        assert!((cube.partials[0] - 3.0 * 1.5 * 1.5).abs() < 1e-14);
        let inv = x.powi(-2);
        assert!((inv.value - 1.0 / 2.25).abs() < 1e-15);
        assert!((inv.partials[0] + 2.0 / 1.5f64.powi(3)).abs() < 1e-14);
        assert_eq!(x.powi(0).value, 1.0);
    }

    #[test]
    fn values_agree_with_f64_path() {
        let xs = [0.3, 1.7, -2.2];
        for &v in &xs {
            let d = Dual::variable(v, 0, 1);
            assert_eq!(Scalar::exp(&d).value, Scalar::exp(&v));
            assert_eq!(Scalar::sin(&d).value, Scalar::sin(&v));
            assert_eq!(d.powi(5).value, Scalar::powi(&v, 5));
            assert_eq!(Scalar::cosh(&d).value, Scalar::cosh(&v));
        }
    }
}
