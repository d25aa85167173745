//! Invariant differential geometry on Lie-group quotients presented by
//! structure constants.
//!
//! The crate computes, for an invariant almost-Hermitian structure `(g, J, ω)`
//! given in a global frame:
//!
//! * the Nijenhuis tensor and the integrable / almost-Kähler / quasi-Kähler
//!   classification,
//! * the Levi-Civita and canonical connections, their torsion, connection and
//!   curvature forms (real and complex), and the real and complex Ricci and
//!   scalar curvatures,
//! * for the deformed Nakamura threefold, the plurigenera `P_m` and the
//!   Kodaira dimension via a Fourier-mode reduction of the
//!   pluricanonical-section equation.
//!
//! Everything is exact frame-level multilinear algebra over `f64` complex
//! scalars; no discretization or symbolic computation is involved.

// Negated float comparisons are deliberate NaN guards, and explicit index
// loops mirror the tensor formulas they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]
#![allow(clippy::type_complexity)]

pub mod cli_report;
pub mod hermitian_geometry;
pub mod invariant_algebra;
pub mod model_families;
pub mod plurigenus_analysis;
pub mod tolerances;

mod error;

pub use error::AkgeoError;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, AkgeoError>;
