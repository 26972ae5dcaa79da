use std::fmt;
use std::sync::Arc;

use crate::error::Error;
use crate::expressions::Params;
use crate::field::ScalarField;
use crate::geometry::{Covector, PhasePoint};

fn base_point(t: f64, q: &[f64], z: f64) -> Result<PhasePoint, Error> {
    PhasePoint::new(t, q.to_vec(), vec![0.0; q.len()], z)
}

fn same_dim(expected: usize, found: usize) -> Result<(), Error> {
    if expected != found {
        return Err(Error::Dimension { expected, found });
    }
    Ok(())
}

/// A function `S(t, q)`. It is stored as a phase-space field and evaluated
/// with `p = 0`, `z = 0`; dependence on `p` or `z` is ignored.
#[derive(Debug, Clone)]
pub struct GeneratingFunction(pub ScalarField);

impl GeneratingFunction {
    pub fn new(s: ScalarField) -> Self {
        GeneratingFunction(s)
    }

    pub fn parse(source: &str, n: usize, params: &Params) -> Result<Self, Error> {
        Ok(GeneratingFunction(ScalarField::parse(source, n, params)?))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn field(&self) -> &ScalarField {
        &self.0
    }

    pub fn value(&self, t: f64, q: &[f64]) -> Result<f64, Error> {
        self.0.eval(&base_point(t, q, 0.0)?)
    }

    /// `(S, dS/dt, dS/dq)` at `(t, q)`.
    pub fn jet(&self, t: f64, q: &[f64]) -> Result<(f64, f64, Vec<f64>), Error> {
        let (v, d) = self.0.eval_grad(&base_point(t, q, 0.0)?)?;
        Ok((v, d.t, d.q))
    }
}

/// Section `(t, q) -> (t, q, gamma(t, q), S(t, q))` of the projection onto
/// `R x Q`.
#[derive(Debug, Clone)]
pub struct SectionT {
    pub gamma: Vec<ScalarField>,
    pub action: ScalarField,
}

/// Values and differentials of the section maps at a base point.
pub(crate) struct SectionJetT {
    pub gamma: Vec<f64>,
    pub dgamma: Vec<Covector>,
    pub s: f64,
    pub ds: Covector,
}

impl SectionT {
    pub fn new(gamma: Vec<ScalarField>, action: ScalarField) -> Result<Self, Error> {
        let n = action.dim();
        same_dim(n, gamma.len())?;
        for g in &gamma {
            same_dim(n, g.dim())?;
        }
        Ok(SectionT { gamma, action })
    }

    /// The 1-jet at fixed time of `S`: `gamma_i = dS/dq^i`.
    pub fn from_generating(s: &GeneratingFunction) -> Self {
        let n = s.dim();
        SectionT {
            gamma: (0..n).map(|i| s.0.partial(1 + i)).collect(),
            action: s.0.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.action.dim()
    }

    pub fn point(&self, t: f64, q: &[f64]) -> Result<PhasePoint, Error> {
        same_dim(self.dim(), q.len())?;
        let b = base_point(t, q, 0.0)?;
        let p = self.gamma.iter().map(|g| g.eval(&b)).collect::<Result<Vec<_>, _>>()?;
        PhasePoint::new(t, q.to_vec(), p, self.action.eval(&b)?)
    }

    pub(crate) fn jet(&self, t: f64, q: &[f64]) -> Result<SectionJetT, Error> {
        same_dim(self.dim(), q.len())?;
        let b = base_point(t, q, 0.0)?;
        let mut gamma = Vec::with_capacity(q.len());
        let mut dgamma = Vec::with_capacity(q.len());
        for g in &self.gamma {
            let (v, d) = g.eval_grad(&b)?;
            gamma.push(v);
            dgamma.push(d);
        }
        let (s, ds) = self.action.eval_grad(&b)?;
        Ok(SectionJetT { gamma, dgamma, s, ds })
    }
}

/// Section `(t, q, z) -> (t, q, gamma(t, q, z), z)` of the projection onto
/// `R x Q x R`.
#[derive(Debug, Clone)]
pub struct SectionTZ {
    pub gamma: Vec<ScalarField>,
}

impl SectionTZ {
    pub fn new(gamma: Vec<ScalarField>) -> Result<Self, Error> {
        let n = gamma.len();
        if n == 0 {
            return Err(Error::Dimension { expected: 1, found: 0 });
        }
        for g in &gamma {
            same_dim(n, g.dim())?;
        }
        Ok(SectionTZ { gamma })
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    pub fn point(&self, t: f64, q: &[f64], z: f64) -> Result<PhasePoint, Error> {
        same_dim(self.dim(), q.len())?;
        let b = base_point(t, q, z)?;
        let p = self.gamma.iter().map(|g| g.eval(&b)).collect::<Result<Vec<_>, _>>()?;
        PhasePoint::new(t, q.to_vec(), p, z)
    }

    pub(crate) fn jet(&self, t: f64, q: &[f64], z: f64) -> Result<(Vec<f64>, Vec<Covector>), Error> {
        same_dim(self.dim(), q.len())?;
        let b = base_point(t, q, z)?;
        let mut gamma = Vec::with_capacity(q.len());
        let mut dgamma = Vec::with_capacity(q.len());
        for g in &self.gamma {
            let (v, d) = g.eval_grad(&b)?;
            gamma.push(v);
            dgamma.push(d);
        }
        Ok((gamma, dgamma))
    }
}

#[derive(Debug, Clone)]
pub enum Section {
    T(SectionT),
    TZ(SectionTZ),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Approach {
    /// Action-independent: sections of `R x T*Q x R -> R x Q`, `lambda` in `R^(n+1)`.
    T,
    /// Action-dependent: sections of `R x T*Q x R -> R x Q x R`, `lambda` in `R^n`.
    TZ,
}

impl Approach {
    pub fn name(&self) -> &'static str {
        match self {
            Approach::T => "T",
            Approach::TZ => "TZ",
        }
    }
}

pub type Family = dyn Fn(&[f64]) -> Result<Section, Error> + Send + Sync;

/// Inverse coordinates of a complete solution as phase-space fields.
/// `labels[i]` names component `i` (a `lambda` entry or, for an autonomous
/// family, the time function).
#[derive(Debug, Clone)]
pub struct InverseMap {
    pub labels: Vec<String>,
    pub fields: Vec<ScalarField>,
}

/// A `lambda`-parameterized family of sections.
#[derive(Clone)]
pub struct CompleteSolution {
    pub name: String,
    pub approach: Approach,
    pub lambda_dim: usize,
    family: Arc<Family>,
    pub inverse: Option<InverseMap>,
}

impl fmt::Debug for CompleteSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompleteSolution")
            .field("name", &self.name)
            .field("approach", &self.approach)
            .field("lambda_dim", &self.lambda_dim)
            .field("inverse", &self.inverse.as_ref().map(|i| &i.labels))
            .finish()
    }
}

impl CompleteSolution {
    pub fn new(
        name: impl Into<String>,
        approach: Approach,
        lambda_dim: usize,
        family: impl Fn(&[f64]) -> Result<Section, Error> + Send + Sync + 'static,
        inverse: Option<InverseMap>,
    ) -> Self {
        CompleteSolution {
            name: name.into(),
            approach,
            lambda_dim,
            family: Arc::new(family),
            inverse,
        }
    }

    pub fn section(&self, lambda: &[f64]) -> Result<Section, Error> {
        same_dim(self.lambda_dim, lambda.len())?;
        (self.family)(lambda)
    }

    pub fn section_t(&self, lambda: &[f64]) -> Result<SectionT, Error> {
        match self.section(lambda)? {
            Section::T(s) => Ok(s),
            Section::TZ(_) => Err(Error::NotApplicable(format!("`{}` is an action-dependent family", self.name))),
        }
    }

    pub fn section_tz(&self, lambda: &[f64]) -> Result<SectionTZ, Error> {
        match self.section(lambda)? {
            Section::TZ(s) => Ok(s),
            Section::T(_) => Err(Error::NotApplicable(format!("`{}` is an action-independent family", self.name))),
        }
    }

    /// `Phi^-1(x)`, every component of the inverse map.
    pub fn invert(&self, x: &PhasePoint) -> Result<Vec<f64>, Error> {
        let inv = self
            .inverse
            .as_ref()
            .ok_or_else(|| Error::NotApplicable(format!("`{}` has no inverse map", self.name)))?;
        inv.fields.iter().map(|f| f.eval(x)).collect()
    }
}
