//! Shared fixtures for the criterion benches.

use cocontact::sampling::{PhaseBox, DEFAULT_SEED};
use cocontact::systems::{build_system_with_defaults, SystemParams, SystemSpec, DEFAULT_T_RANGE};
use cocontact::{Params, PhasePoint, ScalarField};

/// A moderately sized n = 2 expression touching every operator class.
pub const MIXED_SOURCE: &str = "p1^2/2 + p2^2/2 + q1^2*q2 - 0.3*z*sin(t) + exp(-q2^2)*cos(p1) + sqrt(1 + z^2)";

pub fn mixed_field() -> ScalarField {
    ScalarField::parse(MIXED_SOURCE, 2, &Params::new()).expect("fixture parses")
}

pub fn system(name: &str) -> SystemSpec {
    build_system_with_defaults(name, &SystemParams::new(), DEFAULT_T_RANGE).expect("built-in system")
}

pub fn points(n: usize, count: usize) -> Vec<PhasePoint> {
    PhaseBox::default_for(n).sample(count, DEFAULT_SEED).expect("sample box")
}
