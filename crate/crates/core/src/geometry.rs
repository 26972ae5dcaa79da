//! The canonical cocontact structure `tau = dt`, `eta = dz - p_i dq^i` on
//! `R x T*Q x R`, written directly in Darboux coordinates `(t, q, p, z)`.
//!
//! Vectors and covectors are stored by components in the coordinate
//! (co)frame. Every operation takes its base point explicitly; operands
//! of different dimension are rejected.

use crate::error::Error;
use crate::field::ScalarField;

/// A point `(t, q^1..q^n, p_1..p_n, z)` of extended phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub t: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub z: f64,
}

impl PhasePoint {
    pub fn new(t: f64, q: Vec<f64>, p: Vec<f64>, z: f64) -> Result<Self, Error> {
        if q.len() != p.len() {
            return Err(Error::Dimension {
                expected: q.len(),
                found: p.len(),
            });
        }
        if q.is_empty() {
            return Err(Error::Dimension { expected: 1, found: 0 });
        }
        let x = PhasePoint { t, q, p, z };
        if !x.is_finite() {
            return Err(Error::NonFinitePoint);
        }
        Ok(x)
    }

    /// Build from a flat `(t, q, p, z)` slice of length `2n + 2`.
    pub fn from_slice(v: &[f64]) -> Result<Self, Error> {
        if v.len() < 4 || v.len() % 2 != 0 {
            return Err(Error::Dimension {
                expected: 4,
                found: v.len(),
            });
        }
        let n = (v.len() - 2) / 2;
        PhasePoint::new(v[0], v[1..1 + n].to_vec(), v[1 + n..1 + 2 * n].to_vec(), v[1 + 2 * n])
    }

    pub fn origin(n: usize) -> Self {
        PhasePoint {
            t: 0.0,
            q: vec![0.0; n],
            p: vec![0.0; n],
            z: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.dim() + 2);
        v.push(self.t);
        v.extend_from_slice(&self.q);
        v.extend_from_slice(&self.p);
        v.push(self.z);
        v
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.z.is_finite()
            && self.q.iter().chain(&self.p).all(|v| v.is_finite())
    }

    /// `x + h v`, coordinate-wise.
    pub fn displaced(&self, v: &TangentVector, h: f64) -> PhasePoint {
        PhasePoint {
            t: self.t + h * v.t,
            q: self.q.iter().zip(&v.q).map(|(a, b)| a + h * b).collect(),
            p: self.p.iter().zip(&v.p).map(|(a, b)| a + h * b).collect(),
            z: self.z + h * v.z,
        }
    }

    pub fn norm(&self) -> f64 {
        self.to_vec().iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    fn check(&self, n: usize) -> Result<(), Error> {
        if self.dim() != n {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: n,
            });
        }
        Ok(())
    }
}

macro_rules! coordinate_components {
    ($name:ident) => {
        impl $name {
            pub fn zeros(n: usize) -> Self {
                $name {
                    t: 0.0,
                    q: vec![0.0; n],
                    p: vec![0.0; n],
                    z: 0.0,
                }
            }

            /// From a `(t, q, p, z)`-ordered slice of length `2n + 2`.
            pub fn from_gradient(n: usize, g: &[f64]) -> Self {
                $name {
                    t: g[0],
                    q: g[1..1 + n].to_vec(),
                    p: g[1 + n..1 + 2 * n].to_vec(),
                    z: g[1 + 2 * n],
                }
            }

            pub fn dim(&self) -> usize {
                self.q.len()
            }

            pub fn to_vec(&self) -> Vec<f64> {
                let mut v = Vec::with_capacity(2 * self.dim() + 2);
                v.push(self.t);
                v.extend_from_slice(&self.q);
                v.extend_from_slice(&self.p);
                v.push(self.z);
                v
            }

            pub fn scaled(&self, a: f64) -> Self {
                $name {
                    t: a * self.t,
                    q: self.q.iter().map(|v| a * v).collect(),
                    p: self.p.iter().map(|v| a * v).collect(),
                    z: a * self.z,
                }
            }

            /// `self + a * other`.
            pub fn add_scaled(&self, a: f64, other: &Self) -> Self {
                $name {
                    t: self.t + a * other.t,
                    q: self.q.iter().zip(&other.q).map(|(x, y)| x + a * y).collect(),
                    p: self.p.iter().zip(&other.p).map(|(x, y)| x + a * y).collect(),
                    z: self.z + a * other.z,
                }
            }

            pub fn max_abs(&self) -> f64 {
                self.to_vec().iter().fold(0.0f64, |m, v| m.max(v.abs()))
            }

            pub fn norm(&self) -> f64 {
                self.to_vec().iter().map(|c| c * c).sum::<f64>().sqrt()
            }

            pub fn is_finite(&self) -> bool {
                self.to_vec().iter().all(|v| v.is_finite())
            }
        }
    };
}

/// Tangent vector `t d/dt + q^i d/dq^i + p_i d/dp_i + z d/dz`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub t: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub z: f64,
}

/// One-form `t dt + q_i dq^i + p^i dp_i + z dz`.
#[derive(Debug, Clone, PartialEq)]
pub struct Covector {
    pub t: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub z: f64,
}

coordinate_components!(TangentVector);
coordinate_components!(Covector);

impl Covector {
    /// Pairing `alpha(v)`.
    pub fn apply(&self, v: &TangentVector) -> Result<f64, Error> {
        same_dim(self.dim(), v.dim())?;
        Ok(self.t * v.t + dot(&self.q, &v.q) + dot(&self.p, &v.p) + self.z * v.z)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn same_dim(expected: usize, found: usize) -> Result<(), Error> {
    if expected != found {
        return Err(Error::Dimension { expected, found });
    }
    Ok(())
}

/// Time Reeb field `R_t = d/dt`.
pub fn reeb_time(n: usize) -> TangentVector {
    TangentVector {
        t: 1.0,
        ..TangentVector::zeros(n)
    }
}

/// Contact Reeb field `R_z = d/dz`.
pub fn reeb_action(n: usize) -> TangentVector {
    TangentVector {
        z: 1.0,
        ..TangentVector::zeros(n)
    }
}

/// `tau = dt`.
pub fn tau_form(n: usize) -> Covector {
    Covector {
        t: 1.0,
        ..Covector::zeros(n)
    }
}

/// `eta = dz - p_i dq^i` at `x`.
pub fn eta_form(x: &PhasePoint) -> Covector {
    Covector {
        t: 0.0,
        q: x.p.iter().map(|p| -p).collect(),
        p: vec![0.0; x.dim()],
        z: 1.0,
    }
}

pub fn tau(v: &TangentVector) -> f64 {
    v.t
}

pub fn eta(x: &PhasePoint, v: &TangentVector) -> Result<f64, Error> {
    x.check(v.dim())?;
    Ok(v.z - dot(&x.p, &v.q))
}

/// `d eta (u, v)` with `d eta = dq^i ^ dp_i`.
pub fn d_eta(u: &TangentVector, v: &TangentVector) -> Result<f64, Error> {
    same_dim(u.dim(), v.dim())?;
    Ok(dot(&u.q, &v.p) - dot(&u.p, &v.q))
}

/// `flat(v) = tau(v) tau + i_v d eta + eta(v) eta`.
pub fn flat(x: &PhasePoint, v: &TangentVector) -> Result<Covector, Error> {
    let e = eta(x, v)?;
    let n = x.dim();
    Ok(Covector {
        t: v.t,
        q: (0..n).map(|i| -v.p[i] - e * x.p[i]).collect(),
        p: v.q.clone(),
        z: e,
    })
}

/// Inverse of [`flat`], in closed form.
pub fn sharp(x: &PhasePoint, alpha: &Covector) -> Result<TangentVector, Error> {
    x.check(alpha.dim())?;
    let n = x.dim();
    Ok(TangentVector {
        t: alpha.t,
        q: alpha.p.clone(),
        p: (0..n).map(|i| -alpha.q[i] - alpha.z * x.p[i]).collect(),
        z: alpha.z + dot(&x.p, &alpha.p),
    })
}

/// `Lambda^(alpha) = sharp(alpha) - alpha(R_z) R_z - alpha(R_t) R_t`.
/// Its kernel is spanned by `tau` and `eta`.
pub fn lambda_hat(x: &PhasePoint, alpha: &Covector) -> Result<TangentVector, Error> {
    let mut v = sharp(x, alpha)?;
    v.t -= alpha.t;
    v.z -= alpha.z;
    Ok(v)
}

/// Jacobi bracket from values and differentials at `x`:
///
/// `{f,g} = f_q g_p - g_q f_p - p_i (f_p g_z - g_p f_z) - f g_z + g f_z`.
///
/// The `p_i` weight on the mixed `p`/`z` term comes from the bivector
/// `d/dq ^ d/dp - p d/dp ^ d/dz`; it is what produces `{p_i, z} = -2 p_i`.
pub fn jacobi_bracket_from_jets(
    x: &PhasePoint,
    f: f64,
    df: &Covector,
    g: f64,
    dg: &Covector,
) -> Result<f64, Error> {
    x.check(df.dim())?;
    x.check(dg.dim())?;
    let n = x.dim();
    let mut b = 0.0;
    for i in 0..n {
        b += df.q[i] * dg.p[i] - dg.q[i] * df.p[i];
        b -= x.p[i] * (df.p[i] * dg.z - dg.p[i] * df.z);
    }
    Ok(b - f * dg.z + g * df.z)
}

pub fn jacobi_bracket(f: &ScalarField, g: &ScalarField, x: &PhasePoint) -> Result<f64, Error> {
    let (fv, df) = f.eval_grad(x)?;
    let (gv, dg) = g.eval_grad(x)?;
    jacobi_bracket_from_jets(x, fv, &df, gv, &dg)
}

/// The bracket assembled from the structure maps instead of coordinates:
/// `Lambda(df, dg) + f E(g) - g E(f)` with `Lambda(a, b) = -d eta(sharp a, sharp b)`
/// and `E = -R_z`.
///
/// Its bivector part is the negative of the one in [`jacobi_bracket`]; with
/// this sign a function `f` is dissipated under `H` exactly when
/// `{f, H} = R_t f`.
pub fn structure_bracket_from_jets(
    x: &PhasePoint,
    f: f64,
    df: &Covector,
    g: f64,
    dg: &Covector,
) -> Result<f64, Error> {
    let lambda = -d_eta(&sharp(x, df)?, &sharp(x, dg)?)?;
    Ok(lambda - f * dg.z + g * df.z)
}

pub fn structure_bracket(f: &ScalarField, g: &ScalarField, x: &PhasePoint) -> Result<f64, Error> {
    let (fv, df) = f.eval_grad(x)?;
    let (gv, dg) = g.eval_grad(x)?;
    structure_bracket_from_jets(x, fv, &df, gv, &dg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x1(t: f64, q: f64, p: f64, z: f64) -> PhasePoint {
        PhasePoint::new(t, vec![q], vec![p], z).unwrap()
    }

    #[test]
    fn eta_and_tau_examples() {
        let x = x1(0.0, 1.0, 2.0, 0.0);
        let v = TangentVector {
            t: 0.0,
            q: vec![1.0],
            p: vec![0.0],
            z: 0.0,
        };
        assert_eq!(eta(&x, &v).unwrap(), -2.0);
        assert_eq!(eta(&x, &reeb_action(1)).unwrap(), 1.0);
        assert_eq!(tau(&reeb_action(1)), 0.0);
        assert_eq!(eta(&x, &reeb_time(1)).unwrap(), 0.0);
        assert_eq!(tau(&reeb_time(1)), 1.0);
    }

    #[test]
    fn flat_of_reeb_fields() {
        let x = PhasePoint::new(0.4, vec![1.0, -2.0], vec![0.5, 3.0], 7.0).unwrap();
        assert_eq!(flat(&x, &reeb_time(2)).unwrap(), tau_form(2));
        assert_eq!(flat(&x, &reeb_action(2)).unwrap(), eta_form(&x));
    }

    #[test]
    fn reeb_fields_annihilate_d_eta() {
        let u = TangentVector {
            t: 0.3,
            q: vec![1.0],
            p: vec![-2.0],
            z: 0.7,
        };
        assert_eq!(d_eta(&reeb_time(1), &u).unwrap(), 0.0);
        assert_eq!(d_eta(&reeb_action(1), &u).unwrap(), 0.0);
    }

    #[test]
    fn lambda_hat_kernel_and_example() {
        let x = x1(0.0, 0.0, 0.0, 0.0);
        assert_eq!(lambda_hat(&x, &tau_form(1)).unwrap(), TangentVector::zeros(1));
        let y = x1(1.0, 2.0, -3.0, 0.5);
        assert_eq!(lambda_hat(&y, &eta_form(&y)).unwrap(), TangentVector::zeros(1));
        let dq = Covector {
            q: vec![1.0],
            ..Covector::zeros(1)
        };
        let v = lambda_hat(&x, &dq).unwrap();
        assert_eq!(
            v,
            TangentVector {
                t: 0.0,
                q: vec![0.0],
                p: vec![-1.0],
                z: 0.0
            }
        );
    }

    #[test]
    fn darboux_brackets() {
        let x = x1(0.0, 2.0, 3.0, 5.0);
        let coord = |slot: usize| {
            let mut g = vec![0.0; 4];
            g[slot] = 1.0;
            Covector::from_gradient(1, &g)
        };
        let (q, p, z) = (coord(1), coord(2), coord(3));
        let b = |fv: f64, df: &Covector, gv: f64, dg: &Covector| {
            jacobi_bracket_from_jets(&x, fv, df, gv, dg).unwrap()
        };
        assert_eq!(b(2.0, &q, 3.0, &p), 1.0);
        assert_eq!(b(2.0, &q, 5.0, &z), -2.0);
        assert_eq!(b(3.0, &p, 5.0, &z), -6.0);
        assert_eq!(b(2.0, &q, 2.0, &q), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let x = x1(0.0, 1.0, 1.0, 0.0);
        assert!(matches!(
            eta(&x, &TangentVector::zeros(2)),
            Err(Error::Dimension { .. })
        ));
        assert!(sharp(&x, &Covector::zeros(3)).is_err());
        assert!(PhasePoint::new(0.0, vec![1.0], vec![], 0.0).is_err());
        assert!(PhasePoint::new(f64::NAN, vec![1.0], vec![1.0], 0.0).is_err());
    }
}
