//! Hamilton-Jacobi theory for cocontact systems.
//!
//! Action-independent approach: sections `(t, q) -> (t, q, gamma, S)`,
//! equation `H o j1_t S + dS/dt = 0`. Action-dependent approach: sections
//! `(t, q, z) -> (t, q, gamma, z)` with image coisotropic.

mod sections;

pub use sections::{Approach, CompleteSolution, Family, GeneratingFunction, InverseMap, Section, SectionT, SectionTZ};

use rayon::prelude::*;

use crate::dynamics::{hamiltonian_vector_field, herglotz_action_cumulative, solve, IntegratorMeta, Scheme, Trajectory};
use crate::error::Error;
use crate::expressions::EvalError;
use crate::field::ScalarField;
use crate::geometry::{dot, PhasePoint};

/// `j1_t S = (t, q, dS/dq, S)`.
pub fn jet_t(s: &GeneratingFunction, t: f64, q: &[f64]) -> Result<PhasePoint, Error> {
    let (v, _, sq) = s.jet(t, q)?;
    PhasePoint::new(t, q.to_vec(), sq, v)
}

/// `gamma_i - dS/dq^i`; zero exactly when each fixed-time image is Legendrian.
pub fn legendrian_residual(sec: &SectionT, t: f64, q: &[f64]) -> Result<Vec<f64>, Error> {
    let j = sec.jet(t, q)?;
    Ok(j.gamma.iter().zip(&j.ds.q).map(|(g, s)| g - s).collect())
}

/// `H(j1_t S) + dS/dt`.
pub fn hj_independent_residual(s: &GeneratingFunction, h: &ScalarField, t: f64, q: &[f64]) -> Result<f64, Error> {
    let (v, st, sq) = s.jet(t, q)?;
    let x = PhasePoint::new(t, q.to_vec(), sq, v)?;
    Ok(h.eval(&x)? + st)
}

/// The two tangency conditions of `X_H` along `Im gamma`:
///
/// * `-(H_q_i + gamma_i H_z) - (dgamma_i/dt + sum_j dgamma_i/dq^j H_p_j)`
/// * `(gamma . H_p - H) - (dS/dt + dS/dq . H_p)`
pub fn gamma_relatedness_residual_t(
    sec: &SectionT,
    h: &ScalarField,
    t: f64,
    q: &[f64],
) -> Result<(Vec<f64>, f64), Error> {
    let j = sec.jet(t, q)?;
    let x = PhasePoint::new(t, q.to_vec(), j.gamma.clone(), j.s)?;
    let (hv, dh) = h.eval_grad(&x)?;
    let n = q.len();
    let momenta = (0..n)
        .map(|i| {
            let dg = &j.dgamma[i];
            -(dh.q[i] + j.gamma[i] * dh.z) - (dg.t + dot(&dg.q, &dh.p))
        })
        .collect();
    let action = (dot(&j.gamma, &dh.p) - hv) - (j.ds.t + dot(&j.ds.q, &dh.p));
    Ok((momenta, action))
}

/// `q' = H_p` on the section (`t' = 1` implied).
pub fn projected_field_t(sec: &SectionT, h: &ScalarField, t: f64, q: &[f64]) -> Result<Vec<f64>, Error> {
    let x = sec.point(t, q)?;
    Ok(h.eval_grad(&x)?.1.p)
}

/// Integrate the projected field on the leaf `lambda` from `(t0, q0)` and
/// lift every sample through the section.
pub fn reconstruct_t(
    sol: &CompleteSolution,
    h: &ScalarField,
    lambda: &[f64],
    t0: f64,
    q0: &[f64],
    t_end: f64,
    scheme: Scheme,
) -> Result<Trajectory, Error> {
    let sec = sol.section_t(lambda)?;
    if sec.dim() != q0.len() || h.dim() != q0.len() {
        return Err(Error::Dimension {
            expected: h.dim(),
            found: q0.len(),
        });
    }
    let ode = solve(|t, q: &[f64]| projected_field_t(&sec, h, t, q), t0, q0, t_end, scheme)?;
    let samples = ode
        .t
        .iter()
        .zip(&ode.y)
        .map(|(t, q)| sec.point(*t, q))
        .collect::<Result<Vec<_>, _>>()?;
    let velocities = samples
        .iter()
        .map(|x| hamiltonian_vector_field(h, x))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Trajectory {
        samples,
        velocities,
        meta: IntegratorMeta {
            scheme,
            accepted: ode.accepted,
            rejected: ode.rejected,
        },
    })
}

/// `f_i = pi_i o Phi^-1`.
pub fn extract_conserved(sol: &CompleteSolution, i: usize) -> Result<ScalarField, Error> {
    let inv = sol
        .inverse
        .as_ref()
        .ok_or_else(|| Error::NotApplicable(format!("`{}` has no inverse map", sol.name)))?;
    inv.fields.get(i).cloned().ok_or(Error::Dimension {
        expected: inv.fields.len(),
        found: i + 1,
    })
}

/// `R_ij = (dgamma_i/dq^j + gamma_j dgamma_i/dz) - (dgamma_j/dq^i + gamma_i dgamma_j/dz)`.
/// Antisymmetric by construction; zero iff `Im gamma` is coisotropic at the point.
pub fn coisotropy_residual(sec: &SectionTZ, t: f64, q: &[f64], z: f64) -> Result<Vec<Vec<f64>>, Error> {
    let (g, dg) = sec.jet(t, q, z)?;
    let n = g.len();
    let mut r = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = (dg[i].q[j] + g[j] * dg[i].z) - (dg[j].q[i] + g[i] * dg[j].z);
            r[i][j] = v;
            r[j][i] = -v;
        }
    }
    Ok(r)
}

fn on_section_tz(sec: &SectionTZ, h: &ScalarField, t: f64, q: &[f64], z: f64) -> Result<TzJet, Error> {
    let (gamma, dgamma) = sec.jet(t, q, z)?;
    let x = PhasePoint::new(t, q.to_vec(), gamma.clone(), z)?;
    let (hv, dh) = h.eval_grad(&x)?;
    Ok(TzJet {
        gamma,
        dgamma,
        hv,
        dh,
    })
}

struct TzJet {
    gamma: Vec<f64>,
    dgamma: Vec<crate::geometry::Covector>,
    hv: f64,
    dh: crate::geometry::Covector,
}

/// `H_q_i + sum_j H_p_j dgamma_j/dq^i + gamma_i (sum_j H_p_j dgamma_j/dz + H_z)
///  + dgamma_i/dt - H dgamma_i/dz`.
pub fn hj_dependent_residual(sec: &SectionTZ, h: &ScalarField, t: f64, q: &[f64], z: f64) -> Result<Vec<f64>, Error> {
    let j = on_section_tz(sec, h, t, q, z)?;
    let n = q.len();
    let hp_gz: f64 = (0..n).map(|k| j.dh.p[k] * j.dgamma[k].z).sum();
    Ok((0..n)
        .map(|i| {
            let push: f64 = (0..n).map(|k| j.dh.p[k] * j.dgamma[k].q[i]).sum();
            j.dh.q[i] + push + j.gamma[i] * (hp_gz + j.dh.z) + j.dgamma[i].t - j.hv * j.dgamma[i].z
        })
        .collect())
}

/// `dgamma_i/dt + sum_j H_p_j dgamma_i/dq^j + dgamma_i/dz (gamma . H_p - H)
///  + H_q_i + gamma_i H_z`. Differs from [`hj_dependent_residual`] by
/// `sum_j H_p_j R_ij`, so the two agree on coisotropic sections.
pub fn gamma_relatedness_residual_tz(
    sec: &SectionTZ,
    h: &ScalarField,
    t: f64,
    q: &[f64],
    z: f64,
) -> Result<Vec<f64>, Error> {
    let j = on_section_tz(sec, h, t, q, z)?;
    let n = q.len();
    let zdot = dot(&j.gamma, &j.dh.p) - j.hv;
    Ok((0..n)
        .map(|i| {
            let dg = &j.dgamma[i];
            dg.t + dot(&dg.q, &j.dh.p) + dg.z * zdot + j.dh.q[i] + j.gamma[i] * j.dh.z
        })
        .collect())
}

/// `H(q, df/dq, f(q))` for an autonomous `H` (evaluated at `t = 0`).
pub fn autonomous_hj_residual(f: &GeneratingFunction, h: &ScalarField, q: &[f64]) -> Result<f64, Error> {
    h.eval(&jet_t(f, 0.0, q)?)
}

/// `max_k |S(t_k, q_k) - S(t_0, q_0) - A[t_0, t_k]|` along `traj`.
pub fn action_identity_check(s: &GeneratingFunction, h: &ScalarField, traj: &Trajectory) -> Result<f64, Error> {
    let action = herglotz_action_cumulative(h, traj)?;
    let s0 = s.value(traj.first().t, &traj.first().q)?;
    let mut worst = 0.0f64;
    for (x, a) in traj.samples.iter().zip(action) {
        worst = worst.max((s.value(x.t, &x.q)? - s0 - a).abs());
    }
    Ok(worst)
}

/// `H(t, q, d alpha/dq, alpha + beta) + d beta/dt` for `S = alpha(q) + beta(t)`.
pub fn separable_split_residual(
    alpha: &GeneratingFunction,
    beta: &GeneratingFunction,
    h: &ScalarField,
    t: f64,
    q: &[f64],
) -> Result<f64, Error> {
    let (a, _, aq) = alpha.jet(t, q)?;
    let (b, bt, _) = beta.jet(t, q)?;
    let x = PhasePoint::new(t, q.to_vec(), aq, a + b)?;
    Ok(h.eval(&x)? + bt)
}

/// Sup-norm summary of a residual over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub label: String,
    pub sup: f64,
    pub mean: f64,
    pub tolerance: f64,
    pub verdict: bool,
    pub points: usize,
    /// Grid points where the section is undefined (domain errors).
    pub skipped: usize,
}

/// Evaluate `residual` at every grid point in parallel; each call returns a
/// vector whose largest entry in absolute value counts. Domain errors mark
/// the point as skipped; other errors abort.
pub fn sweep<F>(
    label: impl Into<String>,
    points: &[(f64, Vec<f64>, f64)],
    tolerance: f64,
    residual: F,
) -> Result<GridReport, Error>
where
    F: Fn(f64, &[f64], f64) -> Result<Vec<f64>, Error> + Sync,
{
    let values: Vec<Result<Option<f64>, Error>> = points
        .par_iter()
        .map(|(t, q, z)| match residual(*t, q, *z) {
            Ok(v) => Ok(Some(v.iter().fold(0.0f64, |m, r| m.max(r.abs())))),
            Err(Error::Eval(EvalError::Domain { .. })) => Ok(None),
            Err(e) => Err(e),
        })
        .collect();
    let mut sup = 0.0f64;
    let mut sum = 0.0;
    let mut count = 0;
    let mut skipped = 0;
    for v in values {
        match v? {
            Some(r) if r.is_nan() => return Err(Error::InvalidArgument("residual is NaN".into())),
            Some(r) => {
                sup = sup.max(r);
                sum += r;
                count += 1;
            }
            None => skipped += 1,
        }
    }
    Ok(GridReport {
        label: label.into(),
        sup,
        mean: if count > 0 { sum / count as f64 } else { 0.0 },
        tolerance,
        verdict: count > 0 && sup <= tolerance,
        points: count,
        skipped,
    })
}
