use std::collections::BTreeMap;
use std::fmt;

use crate::error::Error;
use crate::expressions::Scalar;

/// A system parameter: a number or a law selector.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Number(f64),
    Choice(String),
}

impl ParamValue {
    /// Numbers when the text parses as one, selectors otherwise.
    pub fn parse(text: &str) -> Self {
        match text.trim().parse::<f64>() {
            Ok(v) => ParamValue::Number(v),
            Err(_) => ParamValue::Choice(text.trim().to_string()),
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Number(v) => write!(f, "{v}"),
            ParamValue::Choice(s) => f.write_str(s),
        }
    }
}

pub type SystemParams = BTreeMap<String, ParamValue>;

pub(crate) struct Reader<'a> {
    params: &'a SystemParams,
}

impl<'a> Reader<'a> {
    pub fn new(params: &'a SystemParams, allowed: &[&str]) -> Result<Self, Error> {
        if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::UnknownParameter(k.clone()));
        }
        Ok(Reader { params })
    }

    pub fn number(&self, key: &str) -> Result<f64, Error> {
        match self.params.get(key) {
            Some(ParamValue::Number(v)) if v.is_finite() => Ok(*v),
            Some(other) => Err(Error::InvalidArgument(format!("parameter `{key}` must be a finite number, got `{other}`"))),
            None => Err(Error::MissingParameter(key.to_string())),
        }
    }

    pub fn positive(&self, key: &str) -> Result<f64, Error> {
        let v = self.number(key)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(Error::InvalidArgument(format!("parameter `{key}` must be positive, got {v}")))
        }
    }

    pub fn choice(&self, key: &str) -> Result<&'a str, Error> {
        match self.params.get(key) {
            Some(ParamValue::Choice(s)) => Ok(s.as_str()),
            Some(other) => Err(Error::InvalidArgument(format!("parameter `{key}` must be a selector, got `{other}`"))),
            None => Err(Error::MissingParameter(key.to_string())),
        }
    }
}

/// `m(t)` from the closed family used by the built-in systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MassLaw {
    Constant { m0: f64 },
    Linear { m0: f64, rate: f64 },
}

impl MassLaw {
    pub(crate) fn read(r: &Reader) -> Result<Self, Error> {
        match r.choice("mass_law")? {
            "constant" => Ok(MassLaw::Constant { m0: r.number("m0")? }),
            "linear" => Ok(MassLaw::Linear {
                m0: r.number("m0")?,
                rate: r.number("mass_rate")?,
            }),
            other => Err(Error::InvalidArgument(format!(
                "unknown mass_law `{other}` (expected constant or linear)"
            ))),
        }
    }

    pub fn eval<S: Scalar>(&self, t: &S) -> S {
        match *self {
            MassLaw::Constant { m0 } => S::constant(m0),
            MassLaw::Linear { m0, rate } => t.scale(rate) + S::constant(m0),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(&t)
    }

    /// `m(t)` in expression syntax over the parameters `m0`, `mass_rate`.
    pub(crate) fn source(&self) -> &'static str {
        match self {
            MassLaw::Constant { .. } => "m0",
            MassLaw::Linear { .. } => "(m0 + mass_rate*t)",
        }
    }

    /// Affine laws are positive on an interval iff they are at its ends.
    pub fn check_positive(&self, lo: f64, hi: f64) -> Result<(), Error> {
        for t in [lo, hi] {
            if !(self.value(t) > 0.0) {
                return Err(Error::NonPositiveMass { t });
            }
        }
        Ok(())
    }
}

/// `F(t)` for the forced oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Forcing {
    Zero,
    Constant { f0: f64 },
    Sinusoidal { f0: f64, omega: f64 },
}

impl Forcing {
    pub(crate) fn read(r: &Reader) -> Result<Self, Error> {
        match r.choice("forcing")? {
            "zero" => Ok(Forcing::Zero),
            "constant" => Ok(Forcing::Constant { f0: r.number("F0")? }),
            "sinusoidal" => Ok(Forcing::Sinusoidal {
                f0: r.number("F0")?,
                omega: r.number("omega")?,
            }),
            other => Err(Error::InvalidArgument(format!(
                "unknown forcing `{other}` (expected zero, constant or sinusoidal)"
            ))),
        }
    }

    pub fn eval<S: Scalar>(&self, t: &S) -> S {
        match *self {
            Forcing::Zero => S::constant(0.0),
            Forcing::Constant { f0 } => S::constant(f0),
            Forcing::Sinusoidal { f0, omega } => t.scale(omega).sin().scale(f0),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(&t)
    }

    /// `F(t)` in expression syntax over the parameters `F0`, `omega`.
    pub(crate) fn source(&self) -> &'static str {
        match self {
            Forcing::Zero => "0",
            Forcing::Constant { .. } => "F0",
            Forcing::Sinusoidal { .. } => "F0*sin(omega*t)",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(pairs: &[(&str, &str)]) -> SystemParams {
        pairs.iter().map(|(k, v)| (k.to_string(), ParamValue::parse(v))).collect()
    }

    #[test]
    fn reader_rejects_unknown_and_missing() {
        let p = params(&[("kappa", "2"), ("bogus", "1")]);
        assert!(matches!(Reader::new(&p, &["kappa"]), Err(Error::UnknownParameter(k)) if k == "bogus"));
        let p = params(&[("mass_law", "linear"), ("m0", "1")]);
        let r = Reader::new(&p, &["mass_law", "m0", "mass_rate"]).unwrap();
        assert!(matches!(MassLaw::read(&r), Err(Error::MissingParameter(k)) if k == "mass_rate"));
    }

    #[test]
    fn mass_positivity() {
        let m = MassLaw::Linear { m0: 1.0, rate: -1.0 };
        assert!(m.check_positive(0.0, 0.5).is_ok());
        assert!(matches!(m.check_positive(0.0, 2.0), Err(Error::NonPositiveMass { t }) if t == 2.0));
    }

    #[test]
    fn forcing_values() {
        let f = Forcing::Sinusoidal { f0: 2.0, omega: 3.0 };
        assert_eq!(f.value(0.5), 2.0 * 1.5f64.sin());
        assert_eq!(Forcing::Zero.value(1.0), 0.0);
    }
}
