//! Named numerical tolerances used across the crate.
//!
//! The values form three tiers matching how error accumulates: plain
//! frame-level multilinear algebra, one layer of connection solving on top of
//! it, and round trips composing several of those layers.

/// Coefficients below this magnitude are dropped when a form is normalized.
pub const PRUNE_EPS: f64 = 1e-13;

/// Frame-level algebraic identities: products and sums of frame data with no
/// linear solves involved (J^2 = -I, metric compatibility, Jacobi residuals
/// of float-valued structure constants, frame-change round trips).
pub const FRAME: f64 = 1e-12;

/// Identities involving one connection solve (metric/J parallelism, structure
/// equations, skew-Hermitian symmetry of connection and curvature matrices).
pub const CONNECTION: f64 = 1e-10;

/// Composite round trips crossing two or more solve layers (torsion versus
/// Nijenhuis comparisons, expected-table verification defaults).
pub const COMPOSITE: f64 = 1e-9;

/// A metric counts as positive definite when its smallest eigenvalue exceeds
/// this bound.
pub const POSITIVE_DEFINITE_MIN_EIGENVALUE: f64 = 1e-10;

/// `delta(t)` below this magnitude is treated as exactly zero when deciding
/// plurigenera; `delta` vanishes exactly on the `t4 = 0` locus, so this only
/// absorbs float noise in `t4` itself.
pub const DELTA_ZERO: f64 = 1e-12;

/// Relative tolerance for accepting an integer mode pair as a solution of the
/// quadratic mode relation; scaled by the largest coefficient magnitude.
pub const MODE_EQUALITY: f64 = 1e-9;

/// Margin demanded of the smallest principal-symbol eigenvalue in the
/// ellipticity check.
pub const ELLIPTIC_MARGIN: f64 = 1e-10;

/// Domain guard for the deformation coefficients: each parameter pair must
/// satisfy `t_i^2 + t_j^2 < 1 - DOMAIN_MARGIN` so all six coefficient
/// functions stay finite.
pub const DOMAIN_MARGIN: f64 = 1e-9;
