//! Reproducible sample sets: shifted Halton points in a box, and tensor grids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::geometry::PhasePoint;

pub const DEFAULT_SAMPLES: usize = 200;
pub const DEFAULT_SEED: u64 = 20240607;

const PRIMES: [u32; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

/// Radical inverse of `index` in `base`.
pub fn halton(mut index: u64, base: u32) -> f64 {
    let b = base as u64;
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % b) as f64;
        index /= b;
    }
    r
}

/// Axis-aligned box in `(t, q, p, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseBox {
    pub t: (f64, f64),
    pub q: Vec<(f64, f64)>,
    pub p: Vec<(f64, f64)>,
    pub z: (f64, f64),
}

impl PhaseBox {
    /// `[0,2] x [-2,2]^n x [-2,2]^n x [-2,2]`.
    pub fn default_for(n: usize) -> Self {
        PhaseBox {
            t: (0.0, 2.0),
            q: vec![(-2.0, 2.0); n],
            p: vec![(-2.0, 2.0); n],
            z: (-2.0, 2.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    fn ranges(&self) -> Vec<(f64, f64)> {
        let mut r = vec![self.t];
        r.extend_from_slice(&self.q);
        r.extend_from_slice(&self.p);
        r.push(self.z);
        r
    }

    /// `count` Halton points with a seeded Cranley-Patterson shift.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<PhasePoint>, Error> {
        let ranges = self.ranges();
        if ranges.len() > PRIMES.len() {
            return Err(Error::InvalidArgument(format!(
                "at most {} coordinates are supported for sampling",
                PRIMES.len()
            )));
        }
        if ranges.iter().any(|(lo, hi)| !(hi >= lo) || !lo.is_finite() || !hi.is_finite()) {
            return Err(Error::InvalidArgument("box bounds must be finite with lo <= hi".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift: Vec<f64> = ranges.iter().map(|_| rng.gen::<f64>()).collect();
        (0..count)
            .map(|k| {
                let v: Vec<f64> = ranges
                    .iter()
                    .enumerate()
                    .map(|(d, (lo, hi))| {
                        let u = (halton(k as u64 + 1, PRIMES[d]) + shift[d]).fract();
                        lo + u * (hi - lo)
                    })
                    .collect();
                PhasePoint::from_slice(&v)
            })
            .collect()
    }
}

/// `N` equally spaced values from `lo` to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self, Error> {
        if count == 0 || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!("bad axis {lo}:{hi}:{count}")));
        }
        Ok(Axis { lo, hi, count })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.hi } else { self.lo + i as f64 * step })
            .collect()
    }

    /// Parse `lo:hi:N`.
    pub fn parse(s: &str) -> Result<Self, Error> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidArgument(format!("axis `{s}` is not of the form lo:hi:N"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo = parts[0].trim().parse().map_err(|_| bad())?;
        let hi = parts[1].trim().parse().map_err(|_| bad())?;
        let n = parts[2].trim().parse().map_err(|_| bad())?;
        Axis::new(lo, hi, n)
    }
}

/// Tensor grid over `(t, q)` and optionally `z`; the same `q` axis is used
/// for every configuration coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub t: Axis,
    pub q: Axis,
    pub z: Option<Axis>,
}

impl Grid {
    /// 50 x 50 over `[0,2] x [-2,2]`.
    pub fn default_t() -> Self {
        Grid {
            t: Axis { lo: 0.0, hi: 2.0, count: 50 },
            q: Axis { lo: -2.0, hi: 2.0, count: 50 },
            z: None,
        }
    }

    /// As [`Grid::default_t`] with 11 levels of `z` in `[-2, 2]`.
    pub fn default_tz() -> Self {
        Grid {
            z: Some(Axis { lo: -2.0, hi: 2.0, count: 11 }),
            ..Grid::default_t()
        }
    }

    /// Base points `(t, q)` for dimension `n`, row-major with `t` slowest.
    pub fn base_points(&self, n: usize) -> Vec<(f64, Vec<f64>)> {
        let qs = self.q.values();
        let mut configs: Vec<Vec<f64>> = vec![Vec::new()];
        for _ in 0..n {
            configs = configs
                .into_iter()
                .flat_map(|c| {
                    qs.iter().map(move |v| {
                        let mut c = c.clone();
                        c.push(*v);
                        c
                    })
                })
                .collect();
        }
        self.t
            .values()
            .into_iter()
            .flat_map(|t| configs.iter().map(move |q| (t, q.clone())))
            .collect()
    }

    /// Points `(t, q, z)`; `z` is 0 when the grid has no `z` axis.
    pub fn points_tz(&self, n: usize) -> Vec<(f64, Vec<f64>, f64)> {
        let zs = self.z.map(|a| a.values()).unwrap_or_else(|| vec![0.0]);
        self.base_points(n)
            .into_iter()
            .flat_map(|(t, q)| zs.iter().map(move |z| (t, q.clone(), *z)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_base_two() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(2, 2), 0.25);
        assert_eq!(halton(3, 2), 0.75);
        assert!((halton(1, 3) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn samples_are_reproducible_and_inside() {
        let b = PhaseBox::default_for(2);
        let a = b.sample(200, 7).unwrap();
        assert_eq!(a, b.sample(200, 7).unwrap());
        assert_ne!(a, b.sample(200, 8).unwrap());
        for x in &a {
            assert!(x.t >= 0.0 && x.t <= 2.0);
            assert!(x.q.iter().chain(&x.p).all(|v| (-2.0..=2.0).contains(v)));
        }
    }

    #[test]
    fn grid_counts() {
        let g = Grid::default_t();
        assert_eq!(g.base_points(1).len(), 2500);
        assert_eq!(Grid::default_tz().points_tz(1).len(), 2500 * 11);
        let v = g.q.values();
        assert_eq!((v[0], v[49]), (-2.0, 2.0));
        assert_eq!(Axis::parse("0:1:5").unwrap().values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(Axis::parse("0:1").is_err());
    }
}
