//! Cached adaptive Simpson quadrature of `int_a^t f(s) ds`.
//!
//! Knots sit on a fixed lattice `a + k * SPACING`. Each knot value is the
//! previous knot's value plus one adaptive Simpson segment, so a knot's value
//! never depends on the order in which queries arrived. A query integrates
//! from the lattice knot between `a` and `t` to `t`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use crate::error::Error;
use crate::expressions::{Dual, EvalError};

pub const SPACING: f64 = 1.0 / 64.0;
/// Segment tolerances are `tol * length / HORIZON`, so the accumulated
/// error stays below `tol` up to `|t - a| = HORIZON`.
pub const HORIZON: f64 = 10.0;
pub const MAX_PANELS: usize = 1 << 20;
pub const DEFAULT_TOLERANCE: f64 = 1e-12;
/// Memoized off-lattice queries are dropped once this many accumulate.
const MEMO_LIMIT: usize = 1 << 16;

pub type Integrand = dyn Fn(f64) -> Result<f64, Error> + Send + Sync;

pub struct QuadratureCache {
    integrand: Arc<Integrand>,
    lower: f64,
    tolerance: f64,
    knots: RwLock<BTreeMap<i64, f64>>,
    // A query's value depends only on `t`, so remembering it is safe.
    memo: RwLock<HashMap<u64, f64>>,
}

impl fmt::Debug for QuadratureCache {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuadratureCache")
            .field("lower", &self.lower)
            .field("tolerance", &self.tolerance)
            .field("knots", &self.knots.read().map(|k| k.len()).unwrap_or(0))
            .finish()
    }
}

impl QuadratureCache {
    pub fn new(lower: f64, integrand: impl Fn(f64) -> Result<f64, Error> + Send + Sync + 'static) -> Self {
        QuadratureCache::with_tolerance(lower, DEFAULT_TOLERANCE, integrand)
    }

    pub fn with_tolerance(
        lower: f64,
        tolerance: f64,
        integrand: impl Fn(f64) -> Result<f64, Error> + Send + Sync + 'static,
    ) -> Self {
        QuadratureCache {
            integrand: Arc::new(integrand),
            lower,
            tolerance,
            knots: RwLock::new(BTreeMap::from([(0, 0.0)])),
            memo: RwLock::new(HashMap::new()),
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn integrand(&self, t: f64) -> Result<f64, Error> {
        (self.integrand)(t)
    }

    fn knot_time(&self, k: i64) -> f64 {
        self.lower + k as f64 * SPACING
    }

    /// Snapshot of the knot table as `(t, value)` pairs.
    pub fn knots(&self) -> Vec<(f64, f64)> {
        let knots = self.knots.read().expect("knot table lock");
        knots.iter().map(|(k, v)| (self.knot_time(*k), *v)).collect()
    }

    fn segment(&self, a: f64, b: f64) -> Result<f64, Error> {
        let eps = self.tolerance * (b - a).abs() / HORIZON;
        adaptive_simpson(&*self.integrand, a, b, eps)
    }

    fn knot(&self, k: i64) -> Result<f64, Error> {
        if let Some(v) = self.knots.read().expect("knot table lock").get(&k) {
            return Ok(*v);
        }
        let mut knots = self.knots.write().expect("knot table lock");
        if k > 0 {
            let (&j, &v) = knots.range(..=k).next_back().expect("knot 0 is always present");
            let mut acc = v;
            for i in j + 1..=k {
                acc += self.segment(self.knot_time(i - 1), self.knot_time(i))?;
                knots.insert(i, acc);
            }
            Ok(acc)
        } else {
            let (&j, &v) = knots.range(k..).next().expect("knot 0 is always present");
            let mut acc = v;
            for i in (k..j).rev() {
                acc -= self.segment(self.knot_time(i), self.knot_time(i + 1))?;
                knots.insert(i, acc);
            }
            Ok(acc)
        }
    }

    /// `int_lower^t f(s) ds`, oriented (negative for `t < lower` with `f > 0`).
    pub fn integral(&self, t: f64) -> Result<f64, Error> {
        if !t.is_finite() {
            return Err(Error::Quadrature(format!("non-finite upper limit {t}")));
        }
        if let Some(v) = self.memo.read().expect("memo lock").get(&t.to_bits()) {
            return Ok(*v);
        }
        let k = ((t - self.lower) / SPACING).trunc() as i64;
        let base = self.knot(k)?;
        let tk = self.knot_time(k);
        let value = if tk == t { base } else { base + self.segment(tk, t)? };
        let mut memo = self.memo.write().expect("memo lock");
        if memo.len() >= MEMO_LIMIT {
            memo.clear();
        }
        memo.insert(t.to_bits(), value);
        Ok(value)
    }

    /// Integral as a function of a dual-number upper limit; the tangent is
    /// `f(t) dt`.
    pub fn integral_dual(&self, t: &Dual) -> Result<Dual, Error> {
        let value = self.integral(t.value)?;
        if t.partials.is_empty() {
            return Ok(Dual::constant(value));
        }
        Ok(t.chain(value, self.integrand(t.value)?))
    }
}

fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

struct Budget {
    panels: usize,
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &Integrand,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
    budget: &mut Budget,
) -> Result<f64, Error> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = simpson(fa, flm, fm, a, m);
    let right = simpson(fm, frm, fb, m, b);
    let delta = left + right - whole;
    budget.panels += 1;
    if budget.panels > MAX_PANELS {
        return Err(Error::Quadrature(format!("more than {MAX_PANELS} panels on [{a}, {b}]")));
    }
    let floor = 64.0 * f64::EPSILON * (left.abs() + right.abs());
    if depth >= 4 && (delta.abs() <= 15.0 * eps.max(floor) || depth > 60) {
        return Ok(left + right + delta / 15.0);
    }
    Ok(refine(f, a, m, fa, flm, fm, left, eps / 2.0, depth + 1, budget)?
        + refine(f, m, b, fm, frm, fb, right, eps / 2.0, depth + 1, budget)?)
}

/// Adaptive Simpson on `[a, b]` to absolute tolerance `eps`.
pub fn adaptive_simpson(f: &Integrand, a: f64, b: f64, eps: f64) -> Result<f64, Error> {
    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a)?, f(m)?, f(b)?);
    for v in [fa, fm, fb] {
        if !v.is_finite() {
            return Err(EvalError::NonFinite { node: "integrand".into() }.into());
        }
    }
    let mut budget = Budget { panels: 0 };
    let v = refine(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), eps, 0, &mut budget)?;
    if !v.is_finite() {
        return Err(Error::Quadrature(format!("non-finite integral on [{a}, {b}]")));
    }
    Ok(v)
}
