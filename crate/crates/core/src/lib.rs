//! Time-dependent contact (cocontact) Hamiltonian mechanics in Darboux
//! coordinates `(t, q, p, z)`.
//!
//! * [`expressions`]: parser and dual-number evaluator for user formulas.
//! * [`geometry`]: `tau`, `eta`, flat/sharp, Reeb fields, Jacobi brackets.
//! * [`dynamics`]: Hamiltonian vector fields, RK4 and Dormand-Prince flows,
//!   Herglotz action.
//! * [`quantities`]: conserved and dissipated quantities, Noether symmetries,
//!   involution.
//! * [`hamilton_jacobi`]: sections, both Hamilton-Jacobi residuals, complete
//!   solutions and reconstruction.
//! * [`systems`]: built-in example systems with their closed forms.

pub mod dynamics;
mod error;
pub mod expressions;
pub mod field;
pub mod geometry;
pub mod hamilton_jacobi;
pub mod quantities;
pub mod sampling;
pub mod systems;

pub use dynamics::{hamiltonian_vector_field, herglotz_action, integrate, Scheme, Trajectory};
pub use error::Error;
pub use expressions::{parse, Dual, Expr, Params, Scalar};
pub use field::ScalarField;
pub use geometry::{Covector, PhasePoint, TangentVector};
pub use quantities::{QuantityKind, QuantityReport};
pub use systems::{build_system, SystemSpec};
