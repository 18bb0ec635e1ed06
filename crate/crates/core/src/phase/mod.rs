//! Measurement-induced geometric phase of null-weak measurement families:
//! chi(theta) curves, topological index extraction, geometric oracles,
//! interferometric readout and the critical-strength finder.
//!
//! # Protocol
//!
//! A family is defined by `N` measurements along `(theta, phi_j)` with
//! `phi_j = 2 pi j / (N + 1)`, postselected on the all-no-click record, acting
//! on the initial state `|theta, phi_0 = 0>`. At `theta = 0` and `theta = pi`
//! every measurement leaves the state untouched, so `e^{i chi}` is 1 at both
//! ends and the unwrapped jump `delta chi = chi(pi) - chi(0)` is quantized in
//! units of 2 pi.
//!
//! # Phase orientation
//!
//! Reported phases use the orientation of [`oracle`]: positive solid angle for
//! increasing-azimuth traversal, so the projective limit winds to +2 pi. The
//! raw chain bracket `<psi0| M_- ... M_- |psi0>` winds the opposite way; the
//! readout amplitude is therefore its complex conjugate, and the fringe
//! `P0(delta) = [1 + Re(e^{-i delta} A)] / 2` peaks at `delta = chi`.

pub mod curve;
pub mod oracle;

pub use curve::{
    curve_from_samples, refine_min_contrast, sample_curve, topological_index, unwrap_curve,
    PhaseCurve, PhasePoint, SampleOptions, TopologicalResult,
};
pub use oracle::{bargmann_oracle, spherical_excess_oracle};

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::qubit::{
    sequence_amplitude, MeasurementSpec, PureQubitState, QubitError, Readout,
};

#[derive(Debug, Error, PartialEq)]
pub enum PhaseError {
    #[error(transparent)]
    Qubit(#[from] QubitError),
    #[error("consecutive states at index {index} are (anti)orthogonal; geodesic undefined")]
    UndefinedGeodesic { index: usize },
    #[error("spherical fan decomposition degenerate beyond recovery")]
    DegenerateFan,
    #[error("raw phase gap {gap:.6} at point {index} is too close to pi; refine the grid")]
    AmbiguousJump { index: usize, gap: f64 },
    #[error("curve has no valid points")]
    NoValidPoints,
    #[error("{which} curve point is below the contrast validity threshold")]
    InvalidEndpoint { which: &'static str },
    #[error("invalid protocol family: {0}")]
    InvalidFamily(String),
    #[error("no topological transition found in zeta = [0, 1]")]
    NoTransition,
}

pub type Result<T> = std::result::Result<T, PhaseError>;

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(std::f64::consts::TAU);
    if y > std::f64::consts::PI {
        y - std::f64::consts::TAU
    } else {
        y
    }
}

/// A measurement family: `N` measurements of strength `zeta` swept over the
/// polar angles of `theta_grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolFamily {
    pub n_measurements: usize,
    pub zeta: f64,
    pub theta_grid: Vec<f64>,
}

impl ProtocolFamily {
    pub fn new(n_measurements: usize, zeta: f64, theta_grid: Vec<f64>) -> Result<Self> {
        if n_measurements == 0 {
            return Err(PhaseError::InvalidFamily("N must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&zeta) {
            return Err(PhaseError::InvalidFamily(format!(
                "zeta = {zeta} outside [0, 1]"
            )));
        }
        if theta_grid.len() < 2
            || theta_grid[0] != 0.0
            || (theta_grid.last().unwrap() - std::f64::consts::PI).abs() > 1e-12
        {
            return Err(PhaseError::InvalidFamily(
                "theta grid must start at 0 and end at pi".into(),
            ));
        }
        if theta_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PhaseError::InvalidFamily(
                "theta grid must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            n_measurements,
            zeta,
            theta_grid,
        })
    }

    /// Family on the default 721-point uniform grid.
    pub fn with_default_grid(n_measurements: usize, zeta: f64) -> Result<Self> {
        Self::new(n_measurements, zeta, default_theta_grid())
    }

    /// Implicit azimuth of measurement `j` (1-based): `2 pi j / (N + 1)`.
    pub fn phi(&self, j: usize) -> f64 {
        std::f64::consts::TAU * j as f64 / (self.n_measurements as f64 + 1.0)
    }

    pub fn specs_at(&self, theta: f64) -> Vec<MeasurementSpec> {
        protocol_specs(self.n_measurements, self.zeta, theta)
    }
}

pub fn default_theta_grid() -> Vec<f64> {
    uniform_grid(0.0, std::f64::consts::PI, 721)
}

pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 1);
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Measurement specs of the family at one polar angle.
pub fn protocol_specs(n: usize, zeta: f64, theta: f64) -> Vec<MeasurementSpec> {
    (1..=n)
        .map(|j| {
            let phi = (std::f64::consts::TAU * j as f64 / (n as f64 + 1.0))
                .rem_euclid(std::f64::consts::TAU);
            MeasurementSpec::new(theta, phi, zeta).expect("protocol angles in range")
        })
        .collect()
}

/// Initial state `|theta, phi_0 = 0>`, aligned with the fictitious j = 0 axis.
pub fn protocol_initial_state(theta: f64) -> PureQubitState {
    PureQubitState::from_angles(theta, 0.0).expect("theta validated by caller")
}

/// Literal no-click chain bracket `<psi0| M_-^{(N)} ... M_-^{(1)} |psi0>`.
pub fn no_click_bracket(n: usize, zeta: f64, theta: f64) -> C64 {
    let specs = protocol_specs(n, zeta, theta);
    let psi0 = protocol_initial_state(theta);
    sequence_amplitude(&specs, &vec![Readout::Minus; n], &psi0).expect("lengths match")
}

/// No-click readout amplitude in the crate's phase orientation (conjugate of
/// the literal bracket; see the module docs).
pub fn readout_amplitude(n: usize, zeta: f64, theta: f64) -> C64 {
    no_click_bracket(n, zeta, theta).conj()
}

/// Post-measurement trajectory of the all-no-click family at one theta.
pub fn protocol_trajectory(n: usize, zeta: f64, theta: f64) -> Result<Vec<PureQubitState>> {
    let specs = protocol_specs(n, zeta, theta);
    let psi0 = protocol_initial_state(theta);
    Ok(crate::qubit::trajectory(
        &specs,
        &vec![Readout::Minus; n],
        &psi0,
    )?)
}

/// chi(theta) over the family's grid: adaptive sampling, then continuity
/// unwrapping anchored at theta = 0 (where the raw phase is exactly zero).
pub fn chi_of_theta(family: &ProtocolFamily) -> Result<PhaseCurve> {
    chi_curve(family, &SampleOptions::default())
}

pub fn chi_curve(family: &ProtocolFamily, opts: &SampleOptions) -> Result<PhaseCurve> {
    let eval = |theta: f64| -> Result<C64> {
        Ok(readout_amplitude(family.n_measurements, family.zeta, theta))
    };
    let samples = sample_curve(&eval, &family.theta_grid, opts)?;
    let mut curve = curve_from_samples(&samples, opts.contrast_eps);
    unwrap_curve(&mut curve.points)?;
    Ok(curve)
}

/// Interferometer output probabilities for the all-no-click chain with a
/// reference-arm phase `delta`.
///
/// `P0 + P1 = 1` holds exactly: `P1` is computed as `1 - P0`.
pub fn interferometer_probability(
    specs: &[MeasurementSpec],
    psi0: &PureQubitState,
    delta: f64,
) -> Result<(f64, f64)> {
    let readouts = vec![Readout::Minus; specs.len()];
    let amp = sequence_amplitude(specs, &readouts, psi0)?.conj();
    let p0 = 0.5 * (1.0 + (C64::from_polar(1.0, -delta) * amp).re);
    Ok((p0, 1.0 - p0))
}

/// Result of the critical-strength bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalStrength {
    pub zeta_c: f64,
    /// Final bisection bracket; its width is at most the requested resolution.
    pub bracket: (f64, f64),
    /// Topological index on the weak side of the bracket.
    pub m_weak: i64,
    /// Topological index on the strong side.
    pub m_strong: i64,
    /// Minimum interference contrast over theta at `zeta_c`.
    pub min_contrast: f64,
    pub theta_at_min: f64,
}

/// Topological index of the family at a given strength, or `None` where the
/// curve cannot be resolved (at the transition itself).
pub fn index_at_zeta(n: usize, zeta: f64) -> Option<i64> {
    let family = ProtocolFamily::with_default_grid(n, zeta).ok()?;
    let curve = chi_curve(&family, &SampleOptions::default()).ok()?;
    let result = topological_index(&curve).ok()?;
    result.is_quantized().then_some(result.m)
}

/// Bisects the jump of the topological index over `zeta in [0, 1]`.
pub fn critical_strength(n: usize, resolution: f64) -> Result<CriticalStrength> {
    if n == 0 {
        return Err(PhaseError::InvalidFamily("N must be at least 1".into()));
    }
    let resolution = resolution.max(1e-12);
    let grid: Vec<f64> = uniform_grid(0.0, 0.999, 41);
    let indices: Vec<Option<i64>> = grid.iter().map(|&z| index_at_zeta(n, z)).collect();

    let mut bracket = None;
    for i in 0..grid.len() - 1 {
        if let (Some(a), Some(b)) = (indices[i], indices[i + 1]) {
            if a != b {
                bracket = Some((grid[i], a, grid[i + 1], b));
                break;
            }
        }
    }
    let (mut lo, m_weak, mut hi, m_strong) = bracket.ok_or(PhaseError::NoTransition)?;

    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        match index_at_zeta(n, mid) {
            Some(m) if m == m_weak => lo = mid,
            // Unresolved means the transition is inside this half too.
            _ => hi = mid,
        }
    }
    let zeta_c = 0.5 * (lo + hi);

    let family = ProtocolFamily::with_default_grid(n, zeta_c)?;
    let eval =
        |theta: f64| -> Result<C64> { Ok(readout_amplitude(n, zeta_c, theta)) };
    let samples = sample_curve(&eval, &family.theta_grid, &SampleOptions::default())?;
    let curve = curve_from_samples(&samples, CONTRAST_FLOOR_FOR_SEARCH);
    let (theta_at_min, min_contrast) = refine_min_contrast(&eval, &curve)?;

    Ok(CriticalStrength {
        zeta_c,
        bracket: (lo, hi),
        m_weak,
        m_strong,
        min_contrast,
        theta_at_min,
    })
}

// The contrast-minimum search must not flag near-zero points invalid.
const CONTRAST_FLOOR_FOR_SEARCH: f64 = 0.0;
