//! Conserved and dissipated quantities, Noether symmetries and involution.

use std::fmt;

use rayon::prelude::*;

use crate::dynamics::{cumulative_simpson, hamiltonian_vector_field, Trajectory};
use crate::error::Error;
use crate::field::ScalarField;
use crate::geometry::{eta, jacobi_bracket, jacobi_bracket_from_jets, reeb_time, structure_bracket, Covector, PhasePoint, TangentVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuantityKind {
    Conserved,
    Dissipated,
    BracketCharacterization,
    Symmetry,
    Involution,
}

impl QuantityKind {
    pub fn name(&self) -> &'static str {
        match self {
            QuantityKind::Conserved => "conserved",
            QuantityKind::Dissipated => "dissipated",
            QuantityKind::BracketCharacterization => "bracket-characterization",
            QuantityKind::Symmetry => "symmetry",
            QuantityKind::Involution => "involution",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "conserved" => QuantityKind::Conserved,
            "dissipated" => QuantityKind::Dissipated,
            "bracket-characterization" | "bracket" => QuantityKind::BracketCharacterization,
            "symmetry" => QuantityKind::Symmetry,
            "involution" => QuantityKind::Involution,
            _ => return None,
        })
    }
}

impl fmt::Display for QuantityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Residual statistics over a sample set and the verdict at `tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantityReport {
    pub kind: QuantityKind,
    pub label: String,
    pub max: f64,
    pub mean: f64,
    pub tolerance: f64,
    /// `max <= tolerance`, and false when every point was skipped.
    pub verdict: bool,
    pub samples: usize,
    pub skipped: usize,
}

/// Evaluate `residual` at every point in parallel and reduce in order.
/// `Ok(None)` marks a skipped point.
pub fn report<F>(
    kind: QuantityKind,
    label: impl Into<String>,
    tolerance: f64,
    points: &[PhasePoint],
    residual: F,
) -> Result<QuantityReport, Error>
where
    F: Fn(&PhasePoint) -> Result<Option<f64>, Error> + Sync,
{
    let values: Vec<Result<Option<f64>, Error>> = points.par_iter().map(&residual).collect();
    let mut max = 0.0f64;
    let mut sum = 0.0;
    let mut samples = 0;
    let mut skipped = 0;
    for v in values {
        match v? {
            Some(r) => {
                let r = r.abs();
                if r.is_nan() {
                    return Err(Error::InvalidArgument("residual is NaN".into()));
                }
                max = max.max(r);
                sum += r;
                samples += 1;
            }
            None => skipped += 1,
        }
    }
    let mean = if samples > 0 { sum / samples as f64 } else { 0.0 };
    Ok(QuantityReport {
        kind,
        label: label.into(),
        max,
        mean,
        tolerance,
        verdict: samples > 0 && max <= tolerance,
        samples,
        skipped,
    })
}

/// `X_H f` from `df` and `X_H`.
fn lie_derivative(df: &Covector, v: &TangentVector) -> Result<f64, Error> {
    df.apply(v)
}

/// `X_H f + (R_z H) f`; zero for a dissipated quantity.
pub fn dissipation_residual(f: &ScalarField, h: &ScalarField, x: &PhasePoint) -> Result<f64, Error> {
    let (fv, df) = f.eval_grad(x)?;
    let (_, dh) = h.eval_grad(x)?;
    let v = hamiltonian_vector_field(h, x)?;
    Ok(lie_derivative(&df, &v)? + dh.z * fv)
}

/// `X_H g`; zero for a conserved quantity.
pub fn conservation_residual(g: &ScalarField, h: &ScalarField, x: &PhasePoint) -> Result<f64, Error> {
    let (_, dg) = g.eval_grad(x)?;
    lie_derivative(&dg, &hamiltonian_vector_field(h, x)?)
}

/// `{f, H} - R_t f`, with the bracket built from the structure maps
/// ([`structure_bracket`]). Vanishes exactly where [`dissipation_residual`]
/// does; the two differ by sign only.
pub fn bracket_characterization_residual(f: &ScalarField, h: &ScalarField, x: &PhasePoint) -> Result<f64, Error> {
    let (_, df) = f.eval_grad(x)?;
    Ok(structure_bracket(f, h, x)? - df.t)
}

/// A vector field that can be evaluated anywhere.
pub trait VectorField: Sync {
    fn eval(&self, x: &PhasePoint) -> Result<TangentVector, Error>;
}

/// `X_H`.
pub struct HamiltonianField<'a>(pub &'a ScalarField);

impl VectorField for HamiltonianField<'_> {
    fn eval(&self, x: &PhasePoint) -> Result<TangentVector, Error> {
        hamiltonian_vector_field(self.0, x)
    }
}

impl<F> VectorField for F
where
    F: Fn(&PhasePoint) -> Result<TangentVector, Error> + Sync,
{
    fn eval(&self, x: &PhasePoint) -> Result<TangentVector, Error> {
        self(x)
    }
}

/// Infinitesimal symmetry `Y = X_f - R_t` generated by `f`.
#[derive(Debug, Clone)]
pub struct NoetherSymmetry {
    pub f: ScalarField,
    pub h: ScalarField,
}

pub fn noether_symmetry(f: &ScalarField, h: &ScalarField) -> NoetherSymmetry {
    NoetherSymmetry {
        f: f.clone(),
        h: h.clone(),
    }
}

impl VectorField for NoetherSymmetry {
    fn eval(&self, x: &PhasePoint) -> Result<TangentVector, Error> {
        let v = hamiltonian_vector_field(&self.f, x)?;
        Ok(v.add_scaled(-1.0, &reeb_time(x.dim())))
    }
}

impl NoetherSymmetry {
    /// `-eta(Y) - f`; zero by construction.
    pub fn reconstruction_residual(&self, x: &PhasePoint) -> Result<f64, Error> {
        Ok(-eta(x, &self.eval(x)?)? - self.f.eval(x)?)
    }

    pub fn residual(&self, x: &PhasePoint) -> Result<(f64, f64), Error> {
        symmetry_residual(self, &self.h, x)
    }
}

/// Directional derivative `DV(x)[w]` by central differences with step
/// `1e-5 max(1, |x|)` along the unit direction of `w`.
fn jvp(field: &dyn VectorField, x: &PhasePoint, w: &TangentVector) -> Result<TangentVector, Error> {
    let norm = w.norm();
    if norm == 0.0 {
        return Ok(TangentVector::zeros(x.dim()));
    }
    let eps = 1e-5 * x.norm().max(1.0) / norm;
    let plus = field.eval(&x.displaced(w, eps))?;
    let minus = field.eval(&x.displaced(w, -eps))?;
    let d = plus.add_scaled(-1.0, &minus).scaled(1.0 / (2.0 * eps));
    if !d.is_finite() {
        return Err(Error::InvalidArgument("non-finite difference quotient".into()));
    }
    Ok(d)
}

/// `[Y, X](x) = DX(x)[Y(x)] - DY(x)[X(x)]`.
pub fn lie_bracket(y: &dyn VectorField, x_field: &dyn VectorField, x: &PhasePoint) -> Result<TangentVector, Error> {
    let yv = y.eval(x)?;
    let xv = x_field.eval(x)?;
    Ok(jvp(x_field, x, &yv)?.add_scaled(-1.0, &jvp(y, x, &xv)?))
}

/// `(|eta([Y, X_H])|, |tau(Y)|)` at `x`.
pub fn symmetry_residual(y: &dyn VectorField, h: &ScalarField, x: &PhasePoint) -> Result<(f64, f64), Error> {
    let bracket = lie_bracket(y, &HamiltonianField(h), x)?;
    Ok((eta(x, &bracket)?.abs(), y.eval(x)?.t.abs()))
}

/// Residuals for the product/quotient rules: the conservation residual of
/// `f1 / f2` (`None` when `|f2(x)| < 1e-8`) and the dissipation residual of
/// `f1 g`. `f1`, `f2` are meant dissipated and `g` conserved.
pub fn product_quotient_check(
    f1: &ScalarField,
    f2: &ScalarField,
    g: &ScalarField,
    h: &ScalarField,
    x: &PhasePoint,
) -> Result<(Option<f64>, f64), Error> {
    let quotient = if f2.eval(x)?.abs() < 1e-8 {
        None
    } else {
        Some(conservation_residual(&f1.quotient(f2), h, x)?)
    };
    Ok((quotient, dissipation_residual(&f1.product(g), h, x)?))
}

fn autonomous_at(h: &ScalarField, x: &PhasePoint) -> Result<bool, Error> {
    let (v, dh) = h.eval_grad(x)?;
    Ok(dh.t.abs() <= 1e-9 * v.abs().max(1.0))
}

/// `{H f_i, H f_j}(x)` with the Jacobi bracket, or `None` when `R_t H != 0`
/// at `x` and the involution statement does not apply.
pub fn involution_residual(
    fi: &ScalarField,
    fj: &ScalarField,
    h: &ScalarField,
    x: &PhasePoint,
) -> Result<Option<f64>, Error> {
    if !autonomous_at(h, x)? {
        return Ok(None);
    }
    Ok(Some(jacobi_bracket(&h.product(fi), &h.product(fj), x)?))
}

/// The same bracket expanded over its factors,
/// `H^2 {f_i, f_j} + H f_j Lambda(df_i, dH) + H f_i Lambda(dH, df_j)`,
/// with every piece evaluated from first derivatives of `H`, `f_i`, `f_j`.
pub fn involution_expansion(fi: &ScalarField, fj: &ScalarField, h: &ScalarField, x: &PhasePoint) -> Result<f64, Error> {
    let (hv, dh) = h.eval_grad(x)?;
    let (a, da) = fi.eval_grad(x)?;
    let (b, db) = fj.eval_grad(x)?;
    // Lambda(u, v) is the bracket of two functions with zero value.
    let lambda = |u: &Covector, v: &Covector| jacobi_bracket_from_jets(x, 0.0, u, 0.0, v);
    Ok(hv * hv * jacobi_bracket_from_jets(x, a, &da, b, &db)?
        + hv * b * lambda(&da, &dh)?
        + hv * a * lambda(&dh, &db)?)
}

/// Largest relative change `|g(t) - g(t0)| / max(|g(t0)|, 1)` along `traj`.
pub fn conserved_drift(g: &ScalarField, traj: &Trajectory) -> Result<f64, Error> {
    let g0 = g.eval(traj.first())?;
    let mut worst = 0.0f64;
    for x in &traj.samples {
        worst = worst.max((g.eval(x)? - g0).abs() / g0.abs().max(1.0));
    }
    Ok(worst)
}

/// Largest relative defect of `f(psi(t)) exp(int_0^t R_z H) = f(psi(0))`,
/// with the rate integrated by Simpson on the samples.
pub fn dissipated_drift(f: &ScalarField, h: &ScalarField, traj: &Trajectory) -> Result<f64, Error> {
    let rates: Vec<f64> = traj
        .samples
        .iter()
        .map(|x| Ok(h.eval_grad(x)?.1.z))
        .collect::<Result<_, Error>>()?;
    let integral = cumulative_simpson(&traj.times(), &rates)?;
    let f0 = f.eval(traj.first())?;
    let mut worst = 0.0f64;
    for (x, i) in traj.samples.iter().zip(integral) {
        worst = worst.max((f.eval(x)? * i.exp() - f0).abs() / f0.abs().max(1.0));
    }
    Ok(worst)
}
