//! Simulation and analysis of measurement-induced geometric phases and their
//! topological transition, at two levels:
//!
//! * [`qubit`] / [`phase`] — abstract two-level Kraus chains: null-weak
//!   measurements, chi(theta) curves, solid-angle oracles, the quantized jump
//!   `delta chi = 2 pi m`, and the critical measurement strength.
//! * [`optics`] / [`scan`] — the physical layer: Gaussian beams through
//!   quarter-wave-plate / beam-displacer stages, interference readout,
//!   transition location in the beam waist, and `(w0, gamma)` phase diagrams.
//!
//! [`gafit`] fits per-stage beam-displacer imperfections `(nu, beta)` to
//! measured phase/contrast curves with a seeded genetic algorithm, and
//! [`battery`] bundles the cross-validation checks (Kraus vs. geometric
//! oracles, closed-form overlaps vs. quadrature, single-stage correspondence,
//! strength-scale invariance).
//!
//! All reported geometric phases share one orientation convention, fixed in
//! [`phase::oracle`]: positive solid angle for increasing-azimuth trajectories,
//! which makes the projective limit wind to +2 pi.

pub mod battery;
pub mod gafit;
pub mod io;
pub mod optics;
pub mod phase;
pub mod qubit;
pub mod scan;
pub mod tol;

pub use num_complex::Complex64;
