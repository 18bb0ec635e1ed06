//! Physical-layer model of the interferometer arm: superpositions of
//! displaced, tilted Gaussian modes tagged with a linear polarization, pushed
//! through quarter-wave-plate / beam-displacer / compensation-plate stages.
//!
//! The beam model is collimated waist-plane Gaussians: elements are thin and
//! propagation between them is ignored, so a mode is fully described by its
//! centroid (mm), transverse wavevector (rad/mm), polarization label and
//! complex amplitude. Overlaps then have a closed form, validated against
//! numerical quadrature in [`quadrature`].
//!
//! A measurement stage is `[P(phi1, alpha), BD, P(gamma, 0)]` with
//! `phi1 = 2 pi/(N+1)` (quarter-wave plates for N = 3). A full `N`-stage setup
//! additionally carries one closing plate `-P(phi1, alpha)` after the last
//! stage: the plate that folds the rotated-frame projection back onto the
//! vertical polarizer, completing the cyclic protocol so that the readout
//! phase at `alpha = 0, pi/2` is exactly trivial and the phase jump across the
//! sweep is quantized. Without it the chain retains a residual wave-plate
//! rotation and the jump is not a multiple of 2 pi.

pub mod fringe;
pub mod jones;
pub mod quadrature;

pub use fringe::{fringe_fit, synthesize_fringe, FringeFit};
pub use jones::{jones_phase_plate, jones_rotation};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phase::wrap_angle;
use crate::qubit::{
    sequence_amplitude, MeasurementSpec, Operator2, PureQubitState, Readout,
};
use crate::tol::{CONTRAST_VALIDITY_EPS, TERM_BUDGET, TERM_MERGE_TOL};

#[derive(Debug, Error, PartialEq)]
pub enum OpticsError {
    #[error("invalid optics configuration: {0}")]
    InvalidConfig(String),
    #[error("fields have different beam parameters (w0 {0} vs {1} mm)")]
    ConfigMismatch(f64, f64),
    #[error("beam field exceeded the {0}-term budget")]
    TermBudget(usize),
    #[error("fringe fit needs at least 3 samples, got {0}")]
    FitTooFewSamples(usize),
    #[error("fringe fit needs samples spanning more than pi of delta (got {0:.3})")]
    FitSpanTooNarrow(f64),
    #[error("fringe fit normal equations are singular")]
    FitSingular,
}

pub type Result<T> = std::result::Result<T, OpticsError>;

/// Global beam and laser parameters. Lengths in mm, wavelength in nm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticsConfig {
    pub wavelength_nm: f64,
    /// Beam waist at the stages, mm.
    pub w0_mm: f64,
    /// Beam-displacer walk-off, mm.
    pub dx_mm: f64,
    /// Net residual retardance per stage after compensation (0 = exact).
    pub gamma_rad: f64,
    /// Optional multiplier on the imperfection tilt phase.
    pub tilt_scale: f64,
}

impl Default for OpticsConfig {
    fn default() -> Self {
        Self {
            wavelength_nm: 632.9,
            w0_mm: 1.0,
            dx_mm: 1.0,
            gamma_rad: 0.0,
            tilt_scale: 1.0,
        }
    }
}

impl OpticsConfig {
    /// Wavenumber in rad/mm.
    pub fn k_per_mm(&self) -> f64 {
        std::f64::consts::TAU / (self.wavelength_nm * 1e-6)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.wavelength_nm.is_finite() || self.wavelength_nm <= 0.0 {
            return Err(OpticsError::InvalidConfig(format!(
                "wavelength_nm = {} must be positive",
                self.wavelength_nm
            )));
        }
        if !self.w0_mm.is_finite() || self.w0_mm <= 0.0 {
            return Err(OpticsError::InvalidConfig(format!(
                "w0_mm = {} must be positive",
                self.w0_mm
            )));
        }
        if !self.dx_mm.is_finite() || self.dx_mm < 0.0 {
            return Err(OpticsError::InvalidConfig(format!(
                "dx_mm = {} must be non-negative",
                self.dx_mm
            )));
        }
        Ok(())
    }

    /// Raw measurement strength of one displacement:
    /// `zeta = 1 - exp(-(dx/w0)^2)`.
    pub fn zeta(&self) -> f64 {
        let eta = self.dx_mm / self.w0_mm;
        crate::qubit::zeta_from_eta(eta)
    }
}

/// Scalar polarization label of a Gaussian term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pol {
    /// Vertical (the `|up>` component; untouched by beam displacers).
    Y,
    /// Horizontal (the `|down>` component; displaced by beam displacers).
    X,
}

impl Pol {
    fn index(self) -> usize {
        match self {
            Pol::Y => 0,
            Pol::X => 1,
        }
    }
}

/// One displaced, tilted Gaussian mode with a polarization label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianTerm {
    pub amp: C64,
    pub pol: Pol,
    /// Centroid (x, y), mm.
    pub center: [f64; 2],
    /// Transverse wavevector (q_x, q_y), rad/mm.
    pub tilt: [f64; 2],
}

/// A finite superposition of Gaussian terms sharing one beam geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamField {
    pub terms: Vec<GaussianTerm>,
    pub w0_mm: f64,
    pub k_per_mm: f64,
}

impl BeamField {
    pub fn empty(config: &OpticsConfig) -> Self {
        Self {
            terms: Vec::new(),
            w0_mm: config.w0_mm,
            k_per_mm: config.k_per_mm(),
        }
    }

    /// Unit-power vertically polarized Gaussian at the origin.
    pub fn vertical_input(config: &OpticsConfig) -> Self {
        let mut field = Self::empty(config);
        field.terms.push(GaussianTerm {
            amp: C64::new(1.0, 0.0),
            pol: Pol::Y,
            center: [0.0, 0.0],
            tilt: [0.0, 0.0],
        });
        field
    }

    /// Adds a term, merging it into an existing one with the same label and
    /// coincident geometry.
    pub fn push_term(&mut self, term: GaussianTerm) -> Result<()> {
        for existing in self.terms.iter_mut() {
            if existing.pol == term.pol
                && (existing.center[0] - term.center[0]).abs() < TERM_MERGE_TOL
                && (existing.center[1] - term.center[1]).abs() < TERM_MERGE_TOL
                && (existing.tilt[0] - term.tilt[0]).abs() < TERM_MERGE_TOL
                && (existing.tilt[1] - term.tilt[1]).abs() < TERM_MERGE_TOL
            {
                existing.amp += term.amp;
                return Ok(());
            }
        }
        if self.terms.len() >= TERM_BUDGET {
            return Err(OpticsError::TermBudget(TERM_BUDGET));
        }
        self.terms.push(term);
        Ok(())
    }

    /// Keeps only the vertically polarized terms.
    pub fn project_vertical(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .copied()
                .filter(|t| t.pol == Pol::Y)
                .collect(),
            w0_mm: self.w0_mm,
            k_per_mm: self.k_per_mm,
        }
    }

    /// Total optical power (the field's self-overlap).
    pub fn total_power(&self) -> f64 {
        overlap(self, self).expect("same geometry").re
    }
}

/// One element of the beam line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Element {
    /// Polarization-space operator; spatial data untouched.
    Jones(Operator2),
    /// Birefringent displacer: walks the horizontal component off by `dx_mm`,
    /// deflects it by `beta_rad` along azimuth `nu_rad`, and imprints the
    /// uncompensated internal phase `gamma_internal` on it.
    Displacer {
        dx_mm: f64,
        beta_rad: f64,
        nu_rad: f64,
        gamma_internal: f64,
    },
}

/// Distributes a polarization-space operator over the spatial terms.
pub fn apply_jones(op: &Operator2, field: &BeamField) -> Result<BeamField> {
    let mut out = BeamField {
        terms: Vec::new(),
        w0_mm: field.w0_mm,
        k_per_mm: field.k_per_mm,
    };
    for term in &field.terms {
        let col = term.pol.index();
        for (row, pol) in [(0, Pol::Y), (1, Pol::X)] {
            let amp = op.m[row][col] * term.amp;
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            out.push_term(GaussianTerm {
                amp,
                pol,
                center: term.center,
                tilt: term.tilt,
            })?;
        }
    }
    out.terms.retain(|t| t.amp.norm_sqr() > 0.0);
    Ok(out)
}

/// Beam-displacer action: vertical terms pass unchanged; horizontal terms are
/// shifted by `(dx, 0)`, tilted by `q = tilt_scale * k sin(beta) (cos nu, sin nu)`
/// and multiplied by `e^{i gamma_internal}`. `beta = 0` is the ideal displacer.
pub fn apply_beam_displacer(
    field: &BeamField,
    dx_mm: f64,
    beta_rad: f64,
    nu_rad: f64,
    gamma_internal: f64,
    tilt_scale: f64,
) -> Result<BeamField> {
    let q = tilt_scale * field.k_per_mm * beta_rad.sin();
    let (qx, qy) = (q * nu_rad.cos(), q * nu_rad.sin());
    let phase = C64::from_polar(1.0, gamma_internal);
    let mut out = BeamField {
        terms: Vec::new(),
        w0_mm: field.w0_mm,
        k_per_mm: field.k_per_mm,
    };
    for term in &field.terms {
        let moved = match term.pol {
            Pol::Y => *term,
            Pol::X => GaussianTerm {
                amp: term.amp * phase,
                pol: Pol::X,
                center: [term.center[0] + dx_mm, term.center[1]],
                tilt: [term.tilt[0] + qx, term.tilt[1] + qy],
            },
        };
        out.push_term(moved)?;
    }
    Ok(out)
}

pub fn apply_element(element: &Element, field: &BeamField, tilt_scale: f64) -> Result<BeamField> {
    match element {
        Element::Jones(op) => apply_jones(op, field),
        Element::Displacer {
            dx_mm,
            beta_rad,
            nu_rad,
            gamma_internal,
        } => apply_beam_displacer(field, *dx_mm, *beta_rad, *nu_rad, *gamma_internal, tilt_scale),
    }
}

/// Sequentially applies `elements` to `input`.
pub fn propagate(elements: &[Element], input: &BeamField, tilt_scale: f64) -> Result<BeamField> {
    let mut field = input.clone();
    for element in elements {
        field = apply_element(element, &field, tilt_scale)?;
    }
    Ok(field)
}

/// Closed-form overlap `<reference|field>`: pairwise Gaussian integrals over
/// terms with matching polarization,
/// `exp(-dc^2/(2 w0^2)) exp(-w0^2 dq^2 / 8) exp(i dq . (c_r + c_f)/2)`
/// per transverse dimension.
pub fn overlap(reference: &BeamField, field: &BeamField) -> Result<C64> {
    if (reference.w0_mm - field.w0_mm).abs() > 1e-12 * reference.w0_mm.abs().max(1.0)
        || (reference.k_per_mm - field.k_per_mm).abs()
            > 1e-9 * reference.k_per_mm.abs().max(1.0)
    {
        return Err(OpticsError::ConfigMismatch(reference.w0_mm, field.w0_mm));
    }
    let w0 = reference.w0_mm;
    let mut total = C64::new(0.0, 0.0);
    for r in &reference.terms {
        for f in &field.terms {
            if r.pol != f.pol {
                continue;
            }
            total += r.amp.conj() * f.amp * pair_overlap(w0, r, f);
        }
    }
    Ok(total)
}

fn pair_overlap(w0: f64, r: &GaussianTerm, f: &GaussianTerm) -> C64 {
    let mut log_mag = 0.0;
    let mut phase = 0.0;
    for dim in 0..2 {
        let dc = f.center[dim] - r.center[dim];
        let dq = f.tilt[dim] - r.tilt[dim];
        log_mag += -dc * dc / (2.0 * w0 * w0) - w0 * w0 * dq * dq / 8.0;
        phase += dq * 0.5 * (r.center[dim] + f.center[dim]);
    }
    C64::from_polar(log_mag.exp(), phase)
}

/// Optical elements of one measurement stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageConfig {
    /// Fast-axis angle of the stage's wave plate, measured from vertical.
    pub alpha_rad: f64,
    /// Residual compensation-plate retardance (0 = exact compensation).
    pub gamma_rad: f64,
    /// Walk-off of this stage's displacer, mm.
    pub dx_mm: f64,
    /// Extraordinary-ray deflection angle (crystal imperfection), rad.
    pub beta_rad: f64,
    /// Azimuth of the deflection, rad.
    pub nu_rad: f64,
}

impl StageConfig {
    pub fn ideal(alpha_rad: f64, dx_mm: f64) -> Self {
        Self {
            alpha_rad,
            gamma_rad: 0.0,
            dx_mm,
            beta_rad: 0.0,
            nu_rad: 0.0,
        }
    }
}

/// The simplified 3-element stage `[P(plate_phi, alpha), BD, P(gamma, 0)]`,
/// in application order.
pub fn stage_elements(cfg: &StageConfig, plate_phi: f64) -> [Element; 3] {
    [
        Element::Jones(jones_phase_plate(plate_phi, cfg.alpha_rad)),
        Element::Displacer {
            dx_mm: cfg.dx_mm,
            beta_rad: cfg.beta_rad,
            nu_rad: cfg.nu_rad,
            gamma_internal: 0.0,
        },
        Element::Jones(jones_phase_plate(cfg.gamma_rad, 0.0)),
    ]
}

/// Stage for the N = 3 experimental layout, where the plates are quarter-wave
/// plates.
pub fn build_stage(cfg: &StageConfig) -> [Element; 3] {
    stage_elements(cfg, std::f64::consts::FRAC_PI_2)
}

/// Unsimplified measurement stage
/// `P(-phi) R(-alpha) P(gamma) BD R(alpha) P(phi)` (in application order the
/// list reads left to right), used to cross-validate the stage-merging
/// algebra.
pub fn naive_stage(theta: f64, phi: f64, cfg: &StageConfig) -> [Element; 6] {
    let alpha = 0.5 * theta;
    [
        Element::Jones(jones_phase_plate(phi, 0.0)),
        Element::Jones(jones_rotation(alpha)),
        Element::Displacer {
            dx_mm: cfg.dx_mm,
            beta_rad: cfg.beta_rad,
            nu_rad: cfg.nu_rad,
            gamma_internal: 0.0,
        },
        Element::Jones(jones_phase_plate(cfg.gamma_rad, 0.0)),
        Element::Jones(jones_rotation(-alpha)),
        Element::Jones(jones_phase_plate(-phi, 0.0)),
    ]
}

/// A full interferometer arm: `N` stages plus the closing plate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub optics: OpticsConfig,
    pub stages: Vec<StageConfig>,
}

impl Setup {
    /// `n` identical ideal stages at plate angle `alpha`, with walk-off and
    /// residual retardance taken from `optics`.
    pub fn protocol(n: usize, alpha: f64, optics: OpticsConfig) -> Self {
        let stages = (0..n)
            .map(|_| StageConfig {
                alpha_rad: alpha,
                gamma_rad: optics.gamma_rad,
                dx_mm: optics.dx_mm,
                beta_rad: 0.0,
                nu_rad: 0.0,
            })
            .collect();
        Self { optics, stages }
    }

    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    /// Stage-plate retardance `2 pi / (N + 1)`.
    pub fn plate_phi(&self) -> f64 {
        std::f64::consts::TAU / (self.stages.len() as f64 + 1.0)
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        let mut setup = self.clone();
        for stage in setup.stages.iter_mut() {
            stage.alpha_rad = alpha;
        }
        setup
    }

    pub fn with_w0(&self, w0_mm: f64) -> Self {
        let mut setup = self.clone();
        setup.optics.w0_mm = w0_mm;
        setup
    }

    pub fn with_gamma(&self, gamma_rad: f64) -> Self {
        let mut setup = self.clone();
        setup.optics.gamma_rad = gamma_rad;
        for stage in setup.stages.iter_mut() {
            stage.gamma_rad = gamma_rad;
        }
        setup
    }

    /// Overrides per-stage `(nu, beta)` imperfections.
    pub fn with_imperfections(&self, pairs: &[(f64, f64)]) -> Self {
        let mut setup = self.clone();
        for (stage, &(nu, beta)) in setup.stages.iter_mut().zip(pairs) {
            stage.nu_rad = nu;
            stage.beta_rad = beta;
        }
        setup
    }

    /// The closing plate `-P(plate_phi, alpha)` appended after the last stage
    /// (see the module docs).
    pub fn closing_plate(&self) -> Operator2 {
        let alpha = self.stages.last().map_or(0.0, |s| s.alpha_rad);
        jones_phase_plate(self.plate_phi(), alpha).scale(C64::new(-1.0, 0.0))
    }

    /// All elements of the arm in application order.
    pub fn element_chain(&self) -> Vec<Element> {
        let phi = self.plate_phi();
        let mut chain: Vec<Element> = self
            .stages
            .iter()
            .flat_map(|s| stage_elements(s, phi))
            .collect();
        if !self.stages.is_empty() {
            chain.push(Element::Jones(self.closing_plate()));
        }
        chain
    }

    /// `<V G | chain | V G>`: the vertical-polarizer interference bracket of
    /// the arm against the undisturbed reference beam.
    pub fn bracket_amplitude(&self) -> Result<C64> {
        self.optics.validate()?;
        let input = BeamField::vertical_input(&self.optics);
        let output = propagate(&self.element_chain(), &input, self.optics.tilt_scale)?;
        overlap(&input.project_vertical(), &output.project_vertical())
    }

    /// Readout amplitude in the crate's phase orientation (conjugate of the
    /// bracket; the fringe peaks at `delta = arg`).
    pub fn readout_amplitude(&self) -> Result<C64> {
        Ok(self.bracket_amplitude()?.conj())
    }

    /// Per-stage raw measurement strengths `zeta_j = 1 - exp(-(dx_j/w0)^2)`.
    pub fn stage_zetas(&self) -> Vec<f64> {
        self.stages
            .iter()
            .map(|s| crate::qubit::zeta_from_eta(s.dx_mm / self.optics.w0_mm))
            .collect()
    }
}

/// Amplitude of the equivalent unsimplified (rotated-input) chain; equals
/// [`Setup::bracket_amplitude`] exactly and exists to cross-check the
/// stage-merging algebra.
pub fn naive_setup_bracket(setup: &Setup) -> Result<C64> {
    setup.optics.validate()?;
    let n = setup.n_stages();
    let alpha = setup.stages.first().map_or(0.0, |s| s.alpha_rad);
    let theta = 2.0 * alpha;
    // psi0 = R(-alpha) |V>, as a two-term field at the origin.
    let (s, c) = alpha.sin_cos();
    let mut input = BeamField::empty(&setup.optics);
    input
        .push_term(GaussianTerm {
            amp: C64::new(c, 0.0),
            pol: Pol::Y,
            center: [0.0, 0.0],
            tilt: [0.0, 0.0],
        })
        .expect("under budget");
    if s != 0.0 {
        input
            .push_term(GaussianTerm {
                amp: C64::new(-s, 0.0),
                pol: Pol::X,
                center: [0.0, 0.0],
                tilt: [0.0, 0.0],
            })
            .expect("under budget");
    }
    let mut elements = Vec::new();
    for (j, stage) in setup.stages.iter().enumerate() {
        let phi = std::f64::consts::TAU * (j + 1) as f64 / (n as f64 + 1.0);
        elements.extend_from_slice(&naive_stage(theta, phi, stage));
    }
    let output = propagate(&elements, &input, setup.optics.tilt_scale)?;
    overlap(&input, &output)
}

/// Comparison of the optical readout against the abstract per-measurement
/// Kraus chain with `sqrt(1 - zeta) = exp(-dx^2/(2 w0^2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrausEquivalence {
    pub optical: C64,
    pub kraus: C64,
    pub deviation: f64,
}

/// For one stage the two amplitudes agree identically; for `N >= 2` the
/// postselection happens on the joint readout of all displacements and the
/// deviation is genuinely nonzero.
pub fn kraus_equivalence(setup: &Setup) -> Result<KrausEquivalence> {
    let optical = setup.readout_amplitude()?;
    let n = setup.n_stages();
    let alpha = setup.stages.first().map_or(0.0, |s| s.alpha_rad);
    let theta = wrap_angle(2.0 * alpha).abs();
    let zetas = setup.stage_zetas();
    let specs: Vec<MeasurementSpec> = zetas
        .iter()
        .enumerate()
        .map(|(j, &zeta)| {
            let phi = (std::f64::consts::TAU * (j + 1) as f64 / (n as f64 + 1.0))
                .rem_euclid(std::f64::consts::TAU);
            MeasurementSpec::new(theta, phi, zeta).expect("angles in range")
        })
        .collect();
    let psi0 = PureQubitState::from_angles(theta, 0.0).expect("theta in range");
    let kraus = sequence_amplitude(&specs, &vec![Readout::Minus; n], &psi0)
        .expect("lengths match")
        .conj();
    Ok(KrausEquivalence {
        optical,
        kraus,
        deviation: (optical - kraus).norm(),
    })
}

/// Interference readout of a setup over a grid of reference-arm phases.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceReadout {
    /// Output power at each requested `delta`, normalized to the input power.
    pub powers: Vec<f64>,
    /// Readout amplitude (crate phase orientation).
    pub amplitude: C64,
    pub chi: f64,
    pub contrast: f64,
}

/// Sweeps the reference phase: `power(delta) = [1 + Re(e^{-i delta} A)] / 2`,
/// an exact cosine peaking at `delta = chi` with amplitude `contrast`.
pub fn interference_readout(setup: &Setup, delta_grid: &[f64]) -> Result<InterferenceReadout> {
    let amplitude = setup.readout_amplitude()?;
    let powers = delta_grid
        .iter()
        .map(|&d| 0.5 * (1.0 + (C64::from_polar(1.0, -d) * amplitude).re))
        .collect();
    Ok(InterferenceReadout {
        powers,
        amplitude,
        chi: if amplitude.norm() >= CONTRAST_VALIDITY_EPS {
            amplitude.arg()
        } else {
            0.0
        },
        contrast: amplitude.norm(),
    })
}

/// 64 uniform reference phases over `[0, 2 pi)`.
pub fn default_delta_grid() -> Vec<f64> {
    (0..64)
        .map(|i| std::f64::consts::TAU * i as f64 / 64.0)
        .collect()
}

#[cfg(test)]
mod tests;
