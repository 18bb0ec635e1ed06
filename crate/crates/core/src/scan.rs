//! Figure-level analyses of the optical setup: chi(alpha) curves against the
//! beam waist, transition location in w0, and the (w0, gamma) topological
//! phase diagram.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optics::{OpticsError, Setup};
use crate::phase::{
    curve_from_samples, refine_min_contrast, sample_curve, topological_index, unwrap_curve,
    PhaseCurve, PhaseError, SampleOptions, TopologicalResult,
};

#[derive(Debug, Error, PartialEq)]
pub enum ScanError {
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error(transparent)]
    Phase(#[from] PhaseError),
    #[error("invalid scan parameters: {0}")]
    InvalidSpec(String),
    #[error("no transition in bracket: m = {m_lo:?} at w0 = {lo} mm and m = {m_hi:?} at {hi} mm")]
    NoTransition {
        lo: f64,
        hi: f64,
        m_lo: Option<i64>,
        m_hi: Option<i64>,
    },
}

pub type Result<T> = std::result::Result<T, ScanError>;

/// Grids for the figure scans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub w0_values_mm: Vec<f64>,
    /// Plate angles, radians in [0, pi/2].
    pub alpha_grid: Vec<f64>,
    pub gamma_values_rad: Option<Vec<f64>>,
    /// Per-stage (nu, beta) pairs, radians.
    pub stage_imperfections: Vec<(f64, f64)>,
}

impl ScanSpec {
    pub fn validate(&self) -> Result<()> {
        let sorted = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if self.w0_values_mm.is_empty() || !sorted(&self.w0_values_mm) {
            return Err(ScanError::InvalidSpec(
                "w0_values_mm must be non-empty and strictly increasing".into(),
            ));
        }
        if self.alpha_grid.len() < 2 || !sorted(&self.alpha_grid) {
            return Err(ScanError::InvalidSpec(
                "alpha_grid must have at least two strictly increasing values".into(),
            ));
        }
        if let Some(gammas) = &self.gamma_values_rad {
            if gammas.is_empty() || !sorted(gammas) {
                return Err(ScanError::InvalidSpec(
                    "gamma_values_rad must be non-empty and strictly increasing".into(),
                ));
            }
        }
        Ok(())
    }
}

/// 181 uniform plate angles over [0, pi/2].
pub fn default_alpha_grid() -> Vec<f64> {
    crate::phase::uniform_grid(0.0, std::f64::consts::FRAC_PI_2, 181)
}

/// chi(alpha) of `setup` at beam waist `w0`, adaptively refined and unwrapped.
pub fn chi_curve_vs_alpha(
    setup: &Setup,
    w0_mm: f64,
    alpha_grid: &[f64],
    opts: &SampleOptions,
) -> Result<PhaseCurve> {
    let at_w0 = setup.with_w0(w0_mm);
    let eval = |alpha: f64| at_w0.with_alpha(alpha).readout_amplitude();
    let samples = sample_curve(&eval, alpha_grid, opts)?;
    let mut curve = curve_from_samples(&samples, opts.contrast_eps);
    unwrap_curve(&mut curve.points)?;
    Ok(curve)
}

/// Index of the curve at one waist, or `None` when the curve cannot be
/// resolved (at the transition).
pub fn index_at_w0(setup: &Setup, w0_mm: f64, alpha_grid: &[f64]) -> Result<Option<i64>> {
    Ok(resolve_index(setup, w0_mm, alpha_grid)?.map(|r| r.m))
}

fn resolve_index(
    setup: &Setup,
    w0_mm: f64,
    alpha_grid: &[f64],
) -> Result<Option<TopologicalResult>> {
    let at_w0 = setup.with_w0(w0_mm);
    let eval = |alpha: f64| at_w0.with_alpha(alpha).readout_amplitude();
    let samples = sample_curve(&eval, alpha_grid, &SampleOptions::default())?;
    let mut curve = curve_from_samples(&samples, SampleOptions::default().contrast_eps);
    if unwrap_curve(&mut curve.points).is_err() {
        return Ok(None);
    }
    match topological_index(&curve) {
        Ok(result) if result.is_quantized() => Ok(Some(result)),
        _ => Ok(None),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionReport {
    pub w0_star_mm: f64,
    /// Final bisection bracket, width at most the requested tolerance.
    pub bracket_mm: (f64, f64),
    /// Index on the small-w0 (strong-measurement) side.
    pub m_strong: i64,
    /// Index on the large-w0 (weak-measurement) side.
    pub m_weak: i64,
    /// Minimum interference contrast over alpha at the transition.
    pub min_contrast: f64,
    pub alpha_at_min: f64,
}

/// Bisects the jump of the topological index over the waist bracket.
pub fn locate_transition(
    setup: &Setup,
    bracket_mm: (f64, f64),
    tol_mm: f64,
) -> Result<TransitionReport> {
    let alpha_grid = default_alpha_grid();
    let (mut lo, mut hi) = bracket_mm;
    if !(lo > 0.0) || hi <= lo {
        return Err(ScanError::InvalidSpec(format!(
            "bad w0 bracket ({lo}, {hi})"
        )));
    }
    let m_lo = index_at_w0(setup, lo, &alpha_grid)?;
    let m_hi = index_at_w0(setup, hi, &alpha_grid)?;
    let (m_strong, m_weak) = match (m_lo, m_hi) {
        (Some(a), Some(b)) if a != b => (a, b),
        _ => {
            return Err(ScanError::NoTransition {
                lo,
                hi,
                m_lo,
                m_hi,
            })
        }
    };
    let tol = tol_mm.max(1e-9);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match index_at_w0(setup, mid, &alpha_grid)? {
            Some(m) if m == m_strong => lo = mid,
            // Unresolved counts as the transition itself.
            _ => hi = mid,
        }
    }
    let w0_star = 0.5 * (lo + hi);

    let at_star = setup.with_w0(w0_star);
    let eval = |alpha: f64| at_star.with_alpha(alpha).readout_amplitude();
    let samples = sample_curve(&eval, &alpha_grid, &SampleOptions::default())?;
    let curve = curve_from_samples(&samples, 0.0);
    let (alpha_at_min, min_contrast) = refine_min_contrast(&eval, &curve)?;

    Ok(TransitionReport {
        w0_star_mm: w0_star,
        bracket_mm: (lo, hi),
        m_strong,
        m_weak,
        min_contrast,
        alpha_at_min,
    })
}

/// One cell of the (w0, gamma) diagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagramCell {
    /// Topological index, or `None` for an unresolved cell.
    pub m: Option<i64>,
    pub min_contrast: f64,
    pub quantization_residual: Option<f64>,
}

/// Grid of topological indices over beam waist and compensation retardance,
/// stored w0-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagram {
    pub w0_values_mm: Vec<f64>,
    pub gamma_values_rad: Vec<f64>,
    pub cells: Vec<DiagramCell>,
}

impl PhaseDiagram {
    pub fn cell(&self, w0_index: usize, gamma_index: usize) -> &DiagramCell {
        &self.cells[w0_index * self.gamma_values_rad.len() + gamma_index]
    }

    /// Number of resolved cells in the trivial phase (m = 0).
    pub fn trivial_cell_count(&self) -> usize {
        self.cells.iter().filter(|c| c.m == Some(0)).count()
    }

    pub fn unresolved_cell_count(&self) -> usize {
        self.cells.iter().filter(|c| c.m.is_none()).count()
    }

    pub fn has_phase(&self, m: i64) -> bool {
        self.cells.iter().any(|c| c.m == Some(m))
    }

    /// True when, for every w0 row, the resolved m = 0 cells form one
    /// contiguous run in gamma.
    pub fn trivial_region_contiguous_in_gamma(&self) -> bool {
        let n_gamma = self.gamma_values_rad.len();
        (0..self.w0_values_mm.len()).all(|i| {
            let ms: Vec<Option<i64>> = (0..n_gamma).map(|j| self.cell(i, j).m).collect();
            let resolved: Vec<i64> = ms.iter().flatten().copied().collect();
            let mut runs = 0;
            let mut inside = false;
            for m in resolved {
                if m == 0 && !inside {
                    runs += 1;
                    inside = true;
                } else if m != 0 {
                    inside = false;
                }
            }
            runs <= 1
        })
    }

    /// True when every gamma column changes m at most once along w0
    /// (ignoring unresolved cells).
    pub fn single_transition_per_gamma(&self) -> bool {
        let n_gamma = self.gamma_values_rad.len();
        (0..n_gamma).all(|j| {
            let resolved: Vec<i64> = (0..self.w0_values_mm.len())
                .filter_map(|i| self.cell(i, j).m)
                .collect();
            resolved.windows(2).filter(|w| w[0] != w[1]).count() <= 1
        })
    }
}

/// Computes the topological index over the (w0, gamma) grid of `spec`.
///
/// Cells are independent and evaluated in parallel; the output ordering is
/// deterministic. Unresolved cells are flagged, not fatal.
pub fn phase_diagram(setup: &Setup, spec: &ScanSpec) -> Result<PhaseDiagram> {
    spec.validate()?;
    let gammas = spec
        .gamma_values_rad
        .clone()
        .ok_or_else(|| ScanError::InvalidSpec("gamma_values_rad required".into()))?;
    let base = setup.with_imperfections(&spec.stage_imperfections);

    let tasks: Vec<(usize, usize)> = (0..spec.w0_values_mm.len())
        .flat_map(|i| (0..gammas.len()).map(move |j| (i, j)))
        .collect();
    let cells: Vec<Result<DiagramCell>> = tasks
        .par_iter()
        .map(|&(i, j)| {
            let cell_setup = base.with_w0(spec.w0_values_mm[i]).with_gamma(gammas[j]);
            let eval = |alpha: f64| cell_setup.with_alpha(alpha).readout_amplitude();
            let samples = sample_curve(&eval, &spec.alpha_grid, &SampleOptions::default())?;
            let mut curve = curve_from_samples(&samples, SampleOptions::default().contrast_eps);
            let min_contrast = curve.min_contrast().1;
            let resolved = if unwrap_curve(&mut curve.points).is_ok() {
                topological_index(&curve).ok().filter(|r| r.is_quantized())
            } else {
                None
            };
            Ok(DiagramCell {
                m: resolved.map(|r| r.m),
                min_contrast,
                quantization_residual: resolved.map(|r| r.quantization_residual),
            })
        })
        .collect();
    let cells = cells.into_iter().collect::<Result<Vec<_>>>()?;

    Ok(PhaseDiagram {
        w0_values_mm: spec.w0_values_mm.clone(),
        gamma_values_rad: gammas,
        cells,
    })
}
