//! Sampled phase curves: adaptive sampling of a complex readout amplitude
//! over an angle grid, continuity unwrapping, and quantized-jump extraction.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::{wrap_angle, PhaseError};
use crate::tol::{CONTRAST_VALIDITY_EPS, MAX_RAW_PHASE_GAP, QUANTIZATION_RESIDUAL_MAX};

/// One sampled point of a phase curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    /// Sweep angle (protocol polar angle, or plate angle for optics curves).
    pub angle: f64,
    /// Principal-value phase of the readout amplitude, in (-pi, pi].
    pub chi_raw: f64,
    /// Continuity-unwrapped phase; equals `chi_raw` modulo 2pi when valid.
    pub chi_unwrapped: f64,
    /// Magnitude of the readout amplitude.
    pub contrast: f64,
    /// False when the contrast is too small for the phase to mean anything.
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCurve {
    pub points: Vec<PhasePoint>,
}

impl PhaseCurve {
    pub fn first(&self) -> &PhasePoint {
        self.points.first().expect("curve is never empty")
    }

    pub fn last(&self) -> &PhasePoint {
        self.points.last().expect("curve is never empty")
    }

    pub fn min_contrast(&self) -> (f64, f64) {
        self.points
            .iter()
            .map(|p| (p.angle, p.contrast))
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("contrast is finite"))
            .expect("curve is never empty")
    }
}

/// Controls for adaptive curve sampling.
#[derive(Debug, Clone, Copy)]
pub struct SampleOptions {
    /// Neighbouring raw-phase gap above which the interval is bisected.
    pub max_raw_gap: f64,
    /// Contrast below which a point is flagged invalid.
    pub contrast_eps: f64,
    /// Maximum bisection depth per initial interval.
    pub max_depth: u32,
    /// Global cap on inserted refinement points.
    pub max_inserted: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            max_raw_gap: MAX_RAW_PHASE_GAP,
            contrast_eps: CONTRAST_VALIDITY_EPS,
            max_depth: 48,
            max_inserted: 20_000,
        }
    }
}

/// Evaluates `eval` on `grid`, bisecting intervals whose raw phase jumps by
/// more than `max_raw_gap` or across which validity changes. Returns samples
/// sorted by angle.
pub fn sample_curve<E, F>(
    eval: &F,
    grid: &[f64],
    opts: &SampleOptions,
) -> Result<Vec<(f64, C64)>, E>
where
    F: Fn(f64) -> Result<C64, E> + Sync,
    E: Send,
{
    let mut samples: Vec<(f64, C64)> = grid
        .par_iter()
        .map(|&x| eval(x).map(|a| (x, a)))
        .collect::<Result<_, E>>()?;

    let needs_split = |a: &(f64, C64), b: &(f64, C64)| -> bool {
        let va = a.1.norm() >= opts.contrast_eps;
        let vb = b.1.norm() >= opts.contrast_eps;
        if va && vb {
            wrap_angle(b.1.arg() - a.1.arg()).abs() > opts.max_raw_gap
        } else {
            // Localize the contrast dip so the invalid span stays narrow.
            va != vb
        }
    };

    let mut inserted: Vec<(f64, C64)> = Vec::new();
    let mut work: Vec<((f64, C64), (f64, C64), u32)> = samples
        .windows(2)
        .filter(|w| needs_split(&w[0], &w[1]))
        .map(|w| (w[0], w[1], 0))
        .collect();
    while let Some((a, b, depth)) = work.pop() {
        if depth >= opts.max_depth
            || inserted.len() >= opts.max_inserted
            || (b.0 - a.0) < 1e-13
        {
            continue;
        }
        let xm = 0.5 * (a.0 + b.0);
        let m = (xm, eval(xm)?);
        inserted.push(m);
        if needs_split(&a, &m) {
            work.push((a, m, depth + 1));
        }
        if needs_split(&m, &b) {
            work.push((m, b, depth + 1));
        }
    }
    samples.extend(inserted);
    samples.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("angles are finite"));
    Ok(samples)
}

/// Turns amplitude samples into phase points (unwrapped field primed with the
/// principal value).
pub fn curve_from_samples(samples: &[(f64, C64)], contrast_eps: f64) -> PhaseCurve {
    let points = samples
        .iter()
        .map(|&(angle, a)| {
            let contrast = a.norm();
            let chi_raw = if contrast > 0.0 { a.arg() } else { 0.0 };
            PhasePoint {
                angle,
                chi_raw,
                chi_unwrapped: chi_raw,
                contrast,
                valid: contrast >= contrast_eps,
            }
        })
        .collect();
    PhaseCurve { points }
}

/// Continuity-unwraps `points` in place.
///
/// The first valid point anchors the branch at its principal value; each
/// later valid point takes the 2pi-shift closest to its valid predecessor.
/// Invalid points are linearly interpolated and keep their flag.
pub fn unwrap_curve(points: &mut [PhasePoint]) -> Result<(), PhaseError> {
    let first_valid = points
        .iter()
        .position(|p| p.valid)
        .ok_or(PhaseError::NoValidPoints)?;

    let mut prev = points[first_valid].chi_raw;
    points[first_valid].chi_unwrapped = prev;
    let mut last_valid = first_valid;
    for i in first_valid + 1..points.len() {
        if !points[i].valid {
            continue;
        }
        let step = wrap_angle(points[i].chi_raw - prev);
        if step.abs() > std::f64::consts::PI - 1e-9 {
            return Err(PhaseError::AmbiguousJump {
                index: i,
                gap: step.abs(),
            });
        }
        prev += step;
        points[i].chi_unwrapped = prev;
        // Interpolate the invalid run we just bridged.
        let (lo, hi) = (last_valid, i);
        if hi - lo > 1 {
            let (a0, c0) = (points[lo].angle, points[lo].chi_unwrapped);
            let (a1, c1) = (points[hi].angle, points[hi].chi_unwrapped);
            for k in lo + 1..hi {
                let t = if a1 > a0 {
                    (points[k].angle - a0) / (a1 - a0)
                } else {
                    0.5
                };
                points[k].chi_unwrapped = c0 + t * (c1 - c0);
            }
        }
        last_valid = i;
    }
    let head_value = points[first_valid].chi_unwrapped;
    for p in points[..first_valid].iter_mut() {
        p.chi_unwrapped = head_value;
    }
    let tail_value = points[last_valid].chi_unwrapped;
    for p in points[last_valid + 1..].iter_mut() {
        p.chi_unwrapped = tail_value;
    }
    Ok(())
}

/// Quantized phase jump over an unwrapped curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologicalResult {
    /// `chi_unwrapped(end) - chi_unwrapped(start)`.
    pub delta_chi: f64,
    /// Nearest integer to `delta_chi / 2pi`.
    pub m: i64,
    /// `|delta_chi - 2 pi m|`.
    pub quantization_residual: f64,
}

impl TopologicalResult {
    /// False indicates an under-resolved grid or broken gauge.
    pub fn is_quantized(&self) -> bool {
        self.quantization_residual < QUANTIZATION_RESIDUAL_MAX
    }
}

pub fn topological_index(curve: &PhaseCurve) -> Result<TopologicalResult, PhaseError> {
    let first = curve.points.first().ok_or(PhaseError::NoValidPoints)?;
    let last = curve.points.last().ok_or(PhaseError::NoValidPoints)?;
    if !first.valid {
        return Err(PhaseError::InvalidEndpoint { which: "first" });
    }
    if !last.valid {
        return Err(PhaseError::InvalidEndpoint { which: "last" });
    }
    let delta_chi = last.chi_unwrapped - first.chi_unwrapped;
    let m = (delta_chi / std::f64::consts::TAU).round() as i64;
    Ok(TopologicalResult {
        delta_chi,
        m,
        quantization_residual: (delta_chi - std::f64::consts::TAU * m as f64).abs(),
    })
}

/// Golden-section polish of the contrast minimum around the lowest sampled
/// point of `curve`.
pub fn refine_min_contrast<E, F>(eval: &F, curve: &PhaseCurve) -> Result<(f64, f64), E>
where
    F: Fn(f64) -> Result<C64, E>,
{
    let idx = curve
        .points
        .iter()
        .enumerate()
        .min_by(|a, b| {
            a.1.contrast
                .partial_cmp(&b.1.contrast)
                .expect("contrast is finite")
        })
        .map(|(i, _)| i)
        .expect("curve is never empty");
    let lo = curve.points[idx.saturating_sub(1)].angle;
    let hi = curve.points[(idx + 1).min(curve.points.len() - 1)].angle;
    if hi <= lo {
        let p = &curve.points[idx];
        return Ok((p.angle, p.contrast));
    }

    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = eval(x1)?.norm();
    let mut f2 = eval(x2)?.norm();
    for _ in 0..90 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = eval(x1)?.norm();
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = eval(x2)?.norm();
        }
    }
    let xm = 0.5 * (a + b);
    Ok((xm, eval(xm)?.norm()))
}
