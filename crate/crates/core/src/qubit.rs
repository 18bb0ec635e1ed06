//! Two-level state and operator algebra for null-weak polarization
//! measurements.
//!
//! States live in the `{|up>, |down>}` basis (vertical and horizontal
//! polarization). A measurement along the Bloch direction `(theta, phi)` with
//! raw strength `zeta` has the Kraus pair
//!
//! ```text
//! M_plus  = sqrt(zeta) |down_n><down_n|
//! M_minus = |up_n><up_n| + sqrt(1 - zeta) |down_n><down_n|
//! ```
//!
//! where `|up_n>`, `|down_n>` are the +1/-1 eigenstates of `n . sigma`. The
//! no-click branch `M_minus` is Hermitian and positive, which is what gives
//! chains of such measurements their geometric-phase interpretation.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::tol::ANNIHILATION_EPS;

#[derive(Debug, Error, PartialEq)]
pub enum QubitError {
    #[error("angle {name} = {value} outside {range}")]
    AngleOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("measurement strength zeta = {0} outside [0, 1]")]
    StrengthOutOfRange(f64),
    #[error("state annihilated: post-measurement norm {norm:.3e} below threshold")]
    Annihilated { norm: f64 },
    #[error("amplitudes have zero norm")]
    ZeroNorm,
    #[error("{specs} measurement specs but {readouts} readouts")]
    LengthMismatch { specs: usize, readouts: usize },
}

pub type Result<T> = std::result::Result<T, QubitError>;

/// Measurement readout label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Readout {
    /// "Click": collapse onto `|down_n>`.
    Plus,
    /// "No click": the invertible null branch.
    Minus,
}

/// Normalized pure polarization state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureQubitState {
    pub c_up: C64,
    pub c_down: C64,
}

impl PureQubitState {
    /// State at Bloch angles `(theta, phi)`:
    /// `cos(theta/2)|up> + e^{i phi} sin(theta/2)|down>`.
    ///
    /// The gauge is fixed by a real non-negative `c_up` for `theta < pi`.
    pub fn from_angles(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(QubitError::AngleOutOfRange {
                name: "theta",
                value: theta,
                range: "[0, pi]",
            });
        }
        if !(0.0..std::f64::consts::TAU).contains(&phi) {
            return Err(QubitError::AngleOutOfRange {
                name: "phi",
                value: phi,
                range: "[0, 2pi)",
            });
        }
        let half = 0.5 * theta;
        Ok(Self {
            c_up: C64::new(half.cos(), 0.0),
            c_down: C64::from_polar(half.sin(), phi),
        })
    }

    pub fn from_amplitudes(c_up: C64, c_down: C64) -> Result<Self> {
        let norm = (c_up.norm_sqr() + c_down.norm_sqr()).sqrt();
        if norm < ANNIHILATION_EPS {
            return Err(QubitError::ZeroNorm);
        }
        Ok(Self {
            c_up: c_up / norm,
            c_down: c_down / norm,
        })
    }

    pub fn up() -> Self {
        Self {
            c_up: C64::new(1.0, 0.0),
            c_down: C64::new(0.0, 0.0),
        }
    }

    pub fn down() -> Self {
        Self {
            c_up: C64::new(0.0, 0.0),
            c_down: C64::new(1.0, 0.0),
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.c_up.conj() * other.c_up + self.c_down.conj() * other.c_down
    }

    pub fn norm(&self) -> f64 {
        (self.c_up.norm_sqr() + self.c_down.norm_sqr()).sqrt()
    }

    /// Bloch vector `(x, y, z)`.
    pub fn bloch(&self) -> [f64; 3] {
        let cross = self.c_up.conj() * self.c_down;
        [
            2.0 * cross.re,
            2.0 * cross.im,
            self.c_up.norm_sqr() - self.c_down.norm_sqr(),
        ]
    }
}

/// Complex 2x2 operator in the `{|up>, |down>}` basis, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Operator2 {
    pub m: [[C64; 2]; 2],
}

impl Operator2 {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Self { m: [[a, b], [c, d]] }
    }

    pub fn identity() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Self::new(one, zero, zero, one)
    }

    pub fn diag(a: C64, d: C64) -> Self {
        let zero = C64::new(0.0, 0.0);
        Self::new(a, zero, zero, d)
    }

    /// `|ket><bra|`.
    pub fn outer(ket: &PureQubitState, bra: &PureQubitState) -> Self {
        Self::new(
            ket.c_up * bra.c_up.conj(),
            ket.c_up * bra.c_down.conj(),
            ket.c_down * bra.c_up.conj(),
            ket.c_down * bra.c_down.conj(),
        )
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(
            self.m[0][0] * s,
            self.m[0][1] * s,
            self.m[1][0] * s,
            self.m[1][1] * s,
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.m[0][0] + other.m[0][0],
            self.m[0][1] + other.m[0][1],
            self.m[1][0] + other.m[1][0],
            self.m[1][1] + other.m[1][1],
        )
    }

    pub fn adjoint(&self) -> Self {
        Self::new(
            self.m[0][0].conj(),
            self.m[1][0].conj(),
            self.m[0][1].conj(),
            self.m[1][1].conj(),
        )
    }

    pub fn mul_vec(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// Largest entry-wise deviation from the conjugate transpose.
    pub fn hermiticity_deviation(&self) -> f64 {
        let adj = self.adjoint();
        self.max_abs_diff(&adj)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut max = 0.0_f64;
        for r in 0..2 {
            for c in 0..2 {
                max = max.max((self.m[r][c] - other.m[r][c]).norm());
            }
        }
        max
    }

    /// SU(2) rotation by `angle` about the unit Bloch axis:
    /// `exp(-i angle/2 axis . sigma)`.
    pub fn su2_rotation(axis: [f64; 3], angle: f64) -> Self {
        let half = 0.5 * angle;
        let (s, c) = (half.sin(), half.cos());
        let i = C64::new(0.0, 1.0);
        let [nx, ny, nz] = axis;
        Self::new(
            C64::new(c, 0.0) - i * C64::new(nz * s, 0.0),
            -i * C64::new(nx * s, 0.0) - C64::new(ny * s, 0.0),
            -i * C64::new(nx * s, 0.0) + C64::new(ny * s, 0.0),
            C64::new(c, 0.0) + i * C64::new(nz * s, 0.0),
        )
    }
}

impl std::ops::Mul for Operator2 {
    type Output = Operator2;

    fn mul(self, rhs: Operator2) -> Operator2 {
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                out[r][c] = self.m[r][0] * rhs.m[0][c] + self.m[r][1] * rhs.m[1][c];
            }
        }
        Operator2 { m: out }
    }
}

/// Axis plus raw strength of one null-weak measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSpec {
    pub theta: f64,
    pub phi: f64,
    pub zeta: f64,
}

impl MeasurementSpec {
    pub fn new(theta: f64, phi: f64, zeta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&zeta) {
            return Err(QubitError::StrengthOutOfRange(zeta));
        }
        // Reuse the state constructor's range checks.
        PureQubitState::from_angles(theta, phi)?;
        Ok(Self { theta, phi, zeta })
    }

    /// `(|up_n>, |down_n>)` eigenstates of `n . sigma`.
    pub fn axis_states(&self) -> (PureQubitState, PureQubitState) {
        let up = PureQubitState::from_angles(self.theta, self.phi).expect("validated");
        let phi_down = (self.phi + std::f64::consts::PI) % std::f64::consts::TAU;
        let down = PureQubitState::from_angles(std::f64::consts::PI - self.theta, phi_down)
            .expect("validated");
        (up, down)
    }

    /// Measurement strength `eta = sqrt(-ln(1 - zeta))`.
    ///
    /// Returns `f64::INFINITY` for the projective case `zeta = 1`; all Kraus
    /// construction uses `zeta` directly, so no infinity arithmetic occurs.
    pub fn eta(&self) -> f64 {
        strength_eta(self.zeta).expect("validated")
    }
}

/// `eta = sqrt(-ln(1 - zeta))`, with `+inf` flagging the projective limit.
pub fn strength_eta(zeta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&zeta) {
        return Err(QubitError::StrengthOutOfRange(zeta));
    }
    // ln_1p keeps the weak end accurate: -ln(1 - zeta) = -ln_1p(-zeta).
    Ok((-(-zeta).ln_1p()).sqrt())
}

/// Inverse strength map `zeta = 1 - exp(-eta^2)`.
pub fn zeta_from_eta(eta: f64) -> f64 {
    -(-eta * eta).exp_m1()
}

/// Kraus pair `(M_plus, M_minus)` of the null-weak measurement.
pub fn kraus_pair(spec: &MeasurementSpec) -> (Operator2, Operator2) {
    let (up, down) = spec.axis_states();
    let up_proj = Operator2::outer(&up, &up);
    let down_proj = Operator2::outer(&down, &down);
    let m_plus = down_proj.scale(C64::new(spec.zeta.sqrt(), 0.0));
    let m_minus = up_proj.add(&down_proj.scale(C64::new((1.0 - spec.zeta).sqrt(), 0.0)));
    (m_plus, m_minus)
}

pub fn kraus_for(spec: &MeasurementSpec, readout: Readout) -> Operator2 {
    let (plus, minus) = kraus_pair(spec);
    match readout {
        Readout::Plus => plus,
        Readout::Minus => minus,
    }
}

/// Applies a Kraus operator and renormalizes.
///
/// Returns the post-measurement state together with the norm `sqrt(P(r))` of
/// the unnormalized result.
pub fn apply_kraus(op: &Operator2, state: &PureQubitState) -> Result<(PureQubitState, f64)> {
    let v = op.mul_vec([state.c_up, state.c_down]);
    let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    if norm < ANNIHILATION_EPS {
        return Err(QubitError::Annihilated { norm });
    }
    Ok((
        PureQubitState {
            c_up: v[0] / norm,
            c_down: v[1] / norm,
        },
        norm,
    ))
}

/// Chain bracket `<psi0| M_{r_N} ... M_{r_1} |psi0>` (measurement 1 acts
/// first). `N = 0` gives 1.
pub fn sequence_amplitude(
    specs: &[MeasurementSpec],
    readouts: &[Readout],
    psi0: &PureQubitState,
) -> Result<C64> {
    if specs.len() != readouts.len() {
        return Err(QubitError::LengthMismatch {
            specs: specs.len(),
            readouts: readouts.len(),
        });
    }
    let mut v = [psi0.c_up, psi0.c_down];
    for (spec, r) in specs.iter().zip(readouts) {
        v = kraus_for(spec, *r).mul_vec(v);
    }
    Ok(psi0.c_up.conj() * v[0] + psi0.c_down.conj() * v[1])
}

/// Normalized post-measurement states `[psi0, psi1, ..., psiN]`.
///
/// Errors if any measurement annihilates the running state.
pub fn trajectory(
    specs: &[MeasurementSpec],
    readouts: &[Readout],
    psi0: &PureQubitState,
) -> Result<Vec<PureQubitState>> {
    if specs.len() != readouts.len() {
        return Err(QubitError::LengthMismatch {
            specs: specs.len(),
            readouts: readouts.len(),
        });
    }
    let mut states = Vec::with_capacity(specs.len() + 1);
    states.push(*psi0);
    let mut current = *psi0;
    for (spec, r) in specs.iter().zip(readouts) {
        let (next, _) = apply_kraus(&kraus_for(spec, *r), &current)?;
        states.push(next);
        current = next;
    }
    Ok(states)
}
