//! The cocontact Hamiltonian vector field and its flow.
//!
//! In Darboux coordinates
//!
//! ```text
//! X_H = d/dt + H_p d/dq - (H_q + p H_z) d/dp + (p H_p - H) d/dz
//! ```
//!
//! Time is not integrated: every sample carries `t0 + k h` (fixed step) or
//! the accumulated accepted steps (adaptive), and `t' = 1` holds exactly.

mod ode;

pub use ode::{solve, OdeSolution, Scheme};

use crate::error::Error;
use crate::expressions::EvalError;
use crate::field::ScalarField;
use crate::geometry::{dot, PhasePoint, TangentVector};

/// `X_H(x)` together with `H(x)`.
pub fn hamiltonian_vector_field_with_value(
    h: &ScalarField,
    x: &PhasePoint,
) -> Result<(TangentVector, f64), Error> {
    let (value, dh) = h.eval_grad(x)?;
    let n = x.dim();
    let v = TangentVector {
        t: 1.0,
        q: dh.p.clone(),
        p: (0..n).map(|i| -(dh.q[i] + x.p[i] * dh.z)).collect(),
        z: dot(&x.p, &dh.p) - value,
    };
    Ok((v, value))
}

pub fn hamiltonian_vector_field(h: &ScalarField, x: &PhasePoint) -> Result<TangentVector, Error> {
    Ok(hamiltonian_vector_field_with_value(h, x)?.0)
}

/// Integrator settings and step statistics attached to a [`Trajectory`].
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorMeta {
    pub scheme: Scheme,
    pub accepted: usize,
    pub rejected: usize,
}

/// Time-ordered samples of an integral curve, with the field value at each
/// sample for Hermite dense output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<PhasePoint>,
    pub velocities: Vec<TangentVector>,
    pub meta: IntegratorMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|x| x.t).collect()
    }

    pub fn first(&self) -> &PhasePoint {
        &self.samples[0]
    }

    pub fn last(&self) -> &PhasePoint {
        self.samples.last().expect("non-empty trajectory")
    }

    /// Cubic Hermite interpolation between the bracketing samples.
    pub fn interpolate(&self, t: f64) -> Result<PhasePoint, Error> {
        let (t0, t1) = (self.first().t, self.last().t);
        if !(t >= t0 && t <= t1) {
            return Err(Error::InvalidArgument(format!(
                "t = {t} outside the trajectory span [{t0}, {t1}]"
            )));
        }
        let k = match self.samples.partition_point(|x| x.t <= t) {
            0 => 0,
            i if i >= self.len() => self.len() - 2,
            i => i - 1,
        };
        let (a, b) = (&self.samples[k], &self.samples[k + 1]);
        let (va, vb) = (&self.velocities[k], &self.velocities[k + 1]);
        let h = b.t - a.t;
        let s = (t - a.t) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let mix = |ya: f64, ma: f64, yb: f64, mb: f64| h00 * ya + h10 * h * ma + h01 * yb + h11 * h * mb;
        let n = a.dim();
        Ok(PhasePoint {
            t,
            q: (0..n).map(|i| mix(a.q[i], va.q[i], b.q[i], vb.q[i])).collect(),
            p: (0..n).map(|i| mix(a.p[i], va.p[i], b.p[i], vb.p[i])).collect(),
            z: mix(a.z, va.z, b.z, vb.z),
        })
    }

    /// Largest coordinate-wise distance to `other`, sample by sample.
    pub fn sup_distance(&self, other: &Trajectory) -> Result<f64, Error> {
        if self.len() != other.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .flat_map(|(a, b)| a.to_vec().into_iter().zip(b.to_vec()).map(|(u, v)| (u - v).abs()))
            .fold(0.0, f64::max))
    }
}

fn state(x: &PhasePoint) -> Vec<f64> {
    let mut y = Vec::with_capacity(2 * x.dim() + 1);
    y.extend_from_slice(&x.q);
    y.extend_from_slice(&x.p);
    y.push(x.z);
    y
}

fn point(t: f64, y: &[f64], n: usize) -> PhasePoint {
    PhasePoint {
        t,
        q: y[..n].to_vec(),
        p: y[n..2 * n].to_vec(),
        z: y[2 * n],
    }
}

/// Integrate the cocontact Hamilton equations from `x0` to `t_end`.
pub fn integrate(h: &ScalarField, x0: &PhasePoint, t_end: f64, scheme: Scheme) -> Result<Trajectory, Error> {
    let n = x0.dim();
    if h.dim() != n {
        return Err(Error::Dimension {
            expected: h.dim(),
            found: n,
        });
    }
    let rhs = |t: f64, y: &[f64]| -> Result<Vec<f64>, Error> {
        let v = hamiltonian_vector_field(h, &point(t, y, n)).map_err(|e| match e {
            Error::Eval(EvalError::NonFinite { .. }) => Error::NonFiniteState { t },
            other => other,
        })?;
        let mut dy = v.q;
        dy.extend(v.p);
        dy.push(v.z);
        Ok(dy)
    };
    let sol = solve(rhs, x0.t, &state(x0), t_end, scheme)?;
    Ok(from_solution(sol, n, scheme, x0))
}

fn from_solution(sol: OdeSolution, n: usize, scheme: Scheme, x0: &PhasePoint) -> Trajectory {
    let mut samples: Vec<PhasePoint> = sol.t.iter().zip(&sol.y).map(|(t, y)| point(*t, y, n)).collect();
    samples[0] = x0.clone();
    let velocities = sol
        .dy
        .iter()
        .map(|d| TangentVector {
            t: 1.0,
            q: d[..n].to_vec(),
            p: d[n..2 * n].to_vec(),
            z: d[2 * n],
        })
        .collect();
    Trajectory {
        samples,
        velocities,
        meta: IntegratorMeta {
            scheme,
            accepted: sol.accepted,
            rejected: sol.rejected,
        },
    }
}

/// Integral over `[a, b]` of the quadratic through three samples.
fn quadratic_piece(xs: [f64; 3], ys: [f64; 3], a: f64, b: f64) -> f64 {
    let (u1, u2) = (xs[1] - xs[0], xs[2] - xs[0]);
    let d1 = (ys[1] - ys[0]) / u1;
    let d2 = ((ys[2] - ys[1]) / (u2 - u1) - d1) / u2;
    let (a, b) = (a - xs[0], b - xs[0]);
    let c1 = d1 - d2 * u1;
    ys[0] * (b - a) + c1 * (b * b - a * a) / 2.0 + d2 * (b * b * b - a * a * a) / 3.0
}

/// Running integral of sampled `y` from `t[0]` to every `t[k]`. Paired
/// intervals use the same quadratic, so even-indexed entries are exactly
/// composite Simpson on nonuniform nodes.
pub fn cumulative_simpson(t: &[f64], y: &[f64]) -> Result<Vec<f64>, Error> {
    if t.len() != y.len() {
        return Err(Error::Dimension {
            expected: t.len(),
            found: y.len(),
        });
    }
    if t.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "Simpson quadrature needs at least 3 samples, got {}",
            t.len()
        )));
    }
    let m = t.len();
    let mut out = Vec::with_capacity(m);
    out.push(0.0);
    let mut acc = 0.0;
    for i in 0..m - 1 {
        let j = if i % 2 == 0 && i + 2 < m { i } else { i - 1 };
        acc += quadratic_piece(
            [t[j], t[j + 1], t[j + 2]],
            [y[j], y[j + 1], y[j + 2]],
            t[i],
            t[i + 1],
        );
        out.push(acc);
    }
    Ok(out)
}

fn lagrangian_samples(h: &ScalarField, traj: &Trajectory) -> Result<Vec<f64>, Error> {
    traj.samples
        .iter()
        .zip(&traj.velocities)
        .map(|(x, v)| Ok(dot(&x.p, &v.q) - h.eval(x)?))
        .collect()
}

/// Herglotz action `A = int (p q' - H) dt` along the samples.
pub fn herglotz_action(h: &ScalarField, traj: &Trajectory) -> Result<f64, Error> {
    Ok(*herglotz_action_cumulative(h, traj)?.last().expect("non-empty"))
}

/// Action from the first sample up to each sample.
pub fn herglotz_action_cumulative(h: &ScalarField, traj: &Trajectory) -> Result<Vec<f64>, Error> {
    cumulative_simpson(&traj.times(), &lagrangian_samples(h, traj)?)
}

/// Five-point central derivative of uniformly spaced samples at index `k`.
/// Returns `None` near the ends or where the spacing is not uniform.
pub(crate) fn five_point_slope(t: &[f64], v: &[f64], k: usize) -> Option<f64> {
    if k < 2 || k + 2 >= t.len() {
        return None;
    }
    let h = t[k + 1] - t[k];
    let uniform = (k - 2..k + 2).all(|i| ((t[i + 1] - t[i]) - h).abs() <= 1e-9 * h);
    if !uniform {
        return None;
    }
    Some((v[k - 2] - 8.0 * v[k - 1] + 8.0 * v[k + 1] - v[k + 2]) / (12.0 * h))
}

/// Largest relative defect of the energy law `d(H o psi)/dt = -(R_z H) H + R_t H`
/// over the interior samples, with the slope taken by a five-point stencil.
/// Relative to `max(|rhs|, 1)`.
pub fn energy_law_residual(h: &ScalarField, traj: &Trajectory) -> Result<f64, Error> {
    let t = traj.times();
    let mut values = Vec::with_capacity(traj.len());
    let mut rhs = Vec::with_capacity(traj.len());
    for x in &traj.samples {
        let (v, dh) = h.eval_grad(x)?;
        values.push(v);
        rhs.push(-dh.z * v + dh.t);
    }
    let mut worst = 0.0f64;
    for k in 0..t.len() {
        if let Some(slope) = five_point_slope(&t, &values, k) {
            worst = worst.max((slope - rhs[k]).abs() / rhs[k].abs().max(1.0));
        }
    }
    Ok(worst)
}
