//! Explicit Runge-Kutta integration of `y' = f(t, y)` with exact time
//! bookkeeping.

use crate::error::Error;

/// Integration scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// Classical fourth-order Runge-Kutta with constant step.
    Rk4 { h: f64 },
    /// Dormand-Prince 5(4) with local error control.
    Adaptive {
        rtol: f64,
        atol: f64,
        h_min: f64,
        h_max: f64,
    },
}

impl Default for Scheme {
    fn default() -> Self {
        Scheme::Rk4 { h: 1e-3 }
    }
}

impl Scheme {
    pub fn rk4(h: f64) -> Self {
        Scheme::Rk4 { h }
    }

    pub fn adaptive(rtol: f64, atol: f64) -> Self {
        Scheme::Adaptive {
            rtol,
            atol,
            h_min: 1e-12,
            h_max: 0.1,
        }
    }

    pub fn default_adaptive() -> Self {
        Scheme::adaptive(1e-9, 1e-12)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Rk4 { .. } => "rk4",
            Scheme::Adaptive { .. } => "dopri45",
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let ok = match *self {
            Scheme::Rk4 { h } => h > 0.0 && h.is_finite(),
            Scheme::Adaptive {
                rtol,
                atol,
                h_min,
                h_max,
            } => rtol > 0.0 && atol > 0.0 && h_min > 0.0 && h_max >= h_min,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid scheme settings {self:?}")))
        }
    }
}

/// Samples of an ODE solution together with the right-hand side at each
/// sample.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub dy: Vec<Vec<f64>>,
    pub accepted: usize,
    pub rejected: usize,
}

fn axpy(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        if *c != 0.0 {
            for (o, ki) in out.iter_mut().zip(k.iter()) {
                *o += h * c * ki;
            }
        }
    }
    out
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Evaluate `f`, turning non-finite output into [`Error::NonFiniteState`].
fn call<F>(f: &mut F, t: f64, y: &[f64], last_good: f64) -> Result<Vec<f64>, Error>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, Error>,
{
    if !all_finite(y) {
        return Err(Error::NonFiniteState { t: last_good });
    }
    let dy = f(t, y)?;
    if !all_finite(&dy) {
        return Err(Error::NonFiniteState { t: last_good });
    }
    Ok(dy)
}

/// Integrate from `t0` to `t_end > t0`. For the fixed-step scheme sample
/// times are exactly `t0 + k h`; the last step is shortened to land on
/// `t_end` when the span is not a whole number of steps.
pub fn solve<F>(mut f: F, t0: f64, y0: &[f64], t_end: f64, scheme: Scheme) -> Result<OdeSolution, Error>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, Error>,
{
    scheme.validate()?;
    if !(t_end > t0) {
        return Err(Error::InvalidArgument(format!(
            "t_end = {t_end} must exceed the initial time {t0}"
        )));
    }
    match scheme {
        Scheme::Rk4 { h } => rk4(&mut f, t0, y0, t_end, h),
        Scheme::Adaptive {
            rtol,
            atol,
            h_min,
            h_max,
        } => dopri45(&mut f, t0, y0, t_end, rtol, atol, h_min, h_max),
    }
}

fn rk4<F>(f: &mut F, t0: f64, y0: &[f64], t_end: f64, h: f64) -> Result<OdeSolution, Error>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, Error>,
{
    let ratio = (t_end - t0) / h;
    let steps = if (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0) {
        ratio.round() as usize
    } else {
        ratio.ceil() as usize
    }
    .max(1);
    let mut ts = Vec::with_capacity(steps + 1);
    let mut ys = Vec::with_capacity(steps + 1);
    let mut dys = Vec::with_capacity(steps + 1);
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k1 = call(f, t, &y, t)?;
    for k in 1..=steps {
        let t_next = if k == steps { t_end } else { t0 + k as f64 * h };
        let dt = t_next - t;
        let k2 = call(f, t + dt / 2.0, &axpy(&y, dt, &[(0.5, &k1)]), t)?;
        let k3 = call(f, t + dt / 2.0, &axpy(&y, dt, &[(0.5, &k2)]), t)?;
        let k4 = call(f, t_next, &axpy(&y, dt, &[(1.0, &k3)]), t)?;
        let y_next = axpy(
            &y,
            dt,
            &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)],
        );
        let k1_next = call(f, t_next, &y_next, t)?;
        ts.push(t);
        ys.push(std::mem::replace(&mut y, y_next));
        dys.push(std::mem::replace(&mut k1, k1_next));
        t = t_next;
    }
    ts.push(t);
    ys.push(y);
    dys.push(k1);
    Ok(OdeSolution {
        t: ts,
        y: ys,
        dy: dys,
        accepted: steps,
        rejected: 0,
    })
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Fifth-order weights minus the embedded fourth-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[allow(clippy::too_many_arguments)]
fn dopri45<F>(
    f: &mut F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    rtol: f64,
    atol: f64,
    h_min: f64,
    h_max: f64,
) -> Result<OdeSolution, Error>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, Error>,
{
    let dim = y0.len();
    let scale = |a: &[f64], b: &[f64], i: usize| atol + rtol * a[i].abs().max(b[i].abs());
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k0 = call(f, t, &y, t)?;

    // Starting step from the size of y and y'.
    let norm = |v: &[f64]| {
        (v.iter()
            .enumerate()
            .map(|(i, x)| (x / (atol + rtol * y0[i].abs())).powi(2))
            .sum::<f64>()
            / dim.max(1) as f64)
            .sqrt()
    };
    let (d0, d1) = (norm(&y), norm(&k0));
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.clamp(h_min, h_max).min(t_end - t0);

    let mut out = OdeSolution {
        t: vec![t],
        y: vec![y.clone()],
        dy: vec![k0.clone()],
        accepted: 0,
        rejected: 0,
    };
    let mut last_rejected = false;
    while t < t_end {
        let remaining = t_end - t;
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        k.push(k0.clone());
        for s in 1..7 {
            let terms: Vec<(f64, &[f64])> = (0..s).map(|j| (A[s][j], k[j].as_slice())).collect();
            let ys = axpy(&y, h, &terms);
            let ks = call(f, t + C[s] * h, &ys, t)?;
            k.push(ks);
        }
        let terms: Vec<(f64, &[f64])> = (0..6).map(|j| (A[6][j], k[j].as_slice())).collect();
        let y_new = axpy(&y, h, &terms);
        let err_terms: Vec<(f64, &[f64])> = E.iter().zip(&k).map(|(e, kj)| (*e, kj.as_slice())).collect();
        let err_vec = axpy(&vec![0.0; dim], h, &err_terms);
        let err = (err_vec
            .iter()
            .enumerate()
            .map(|(i, e)| (e / scale(&y, &y_new, i)).powi(2))
            .sum::<f64>()
            / dim.max(1) as f64)
            .sqrt();
        if !err.is_finite() {
            return Err(Error::NonFiniteState { t });
        }
        if err <= 1.0 {
            t = if last { t_end } else { t + h };
            y = y_new;
            k0 = k.pop().expect("seven stages");
            out.t.push(t);
            out.y.push(y.clone());
            out.dy.push(k0.clone());
            out.accepted += 1;
            let mut factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if last_rejected {
                factor = factor.min(1.0);
            }
            last_rejected = false;
            h = (h * factor).clamp(h_min, h_max);
        } else {
            out.rejected += 1;
            last_rejected = true;
            if h <= h_min {
                return Err(Error::StepUnderflow { t, h });
            }
            h = (h * (0.9 * err.powf(-0.2)).max(0.2)).max(h_min);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(_t: f64, y: &[f64]) -> Result<Vec<f64>, Error> {
        Ok(vec![-y[0]])
    }

    #[test]
    fn rk4_times_are_exact_multiples() {
        let sol = solve(decay, 0.5, &[1.0], 1.5, Scheme::rk4(0.1)).unwrap();
        assert_eq!(sol.t.len(), 11);
        for (k, t) in sol.t.iter().enumerate() {
            if k < 10 {
                assert_eq!(*t, 0.5 + k as f64 * 0.1);
            }
        }
        assert_eq!(*sol.t.last().unwrap(), 1.5);
        assert!((sol.y[10][0] - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn rk4_short_last_step() {
        let sol = solve(decay, 0.0, &[1.0], 0.25, Scheme::rk4(0.1)).unwrap();
        assert_eq!(sol.t, vec![0.0, 0.1, 0.2, 0.25]);
    }

    #[test]
    fn dopri_meets_tolerance() {
        let sol = solve(decay, 0.0, &[1.0], 5.0, Scheme::default_adaptive()).unwrap();
        assert_eq!(*sol.t.last().unwrap(), 5.0);
        assert!((sol.y.last().unwrap()[0] - (-5.0f64).exp()).abs() < 1e-9);
        assert!(sol.accepted > 10);
    }

    #[test]
    fn blow_up_is_reported() {
        let sol = solve(
            |_t, y: &[f64]| Ok(vec![y[0] * y[0]]),
            0.0,
            &[1.0],
            2.0,
            Scheme::rk4(0.01),
        );
        assert!(matches!(sol, Err(Error::NonFiniteState { .. })));
        let sol = solve(
            |_t, y: &[f64]| Ok(vec![y[0] * y[0]]),
            0.0,
            &[1.0],
            2.0,
            Scheme::default_adaptive(),
        );
        assert!(matches!(
            sol,
            Err(Error::StepUnderflow { .. }) | Err(Error::NonFiniteState { .. })
        ));
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(solve(decay, 1.0, &[1.0], 1.0, Scheme::rk4(0.1)).is_err());
        assert!(solve(decay, 0.0, &[1.0], 1.0, Scheme::rk4(-0.1)).is_err());
    }
}
