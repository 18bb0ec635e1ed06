//! Shared numeric thresholds.
//!
//! Anything that two or more modules must agree on lives here; one-off
//! tolerances stay at their point of use.

/// Post-measurement norms below this are treated as state annihilation.
pub const ANNIHILATION_EPS: f64 = 1e-14;

/// Interference contrast below which the phase of a curve point is
/// numerically meaningless and the point is flagged invalid.
pub const CONTRAST_VALIDITY_EPS: f64 = 1e-4;

/// Beam-field terms whose centers (mm) and tilts (rad/mm) agree within this
/// tolerance are summed into one term.
pub const TERM_MERGE_TOL: f64 = 1e-9;

/// Hard cap on the number of Gaussian terms a field may accumulate.
pub const TERM_BUDGET: usize = 4096;

/// Largest raw phase gap between neighbouring curve samples before the
/// sampler bisects the interval.
pub const MAX_RAW_PHASE_GAP: f64 = std::f64::consts::FRAC_PI_4;

/// Quantization residual above which a topological index is not trusted.
pub const QUANTIZATION_RESIDUAL_MAX: f64 = 0.2 * std::f64::consts::TAU;
