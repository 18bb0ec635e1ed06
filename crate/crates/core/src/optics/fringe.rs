//! Least-squares retrieval of phase and contrast from interference fringes.

use super::{OpticsError, Result};
use crate::tol::CONTRAST_VALIDITY_EPS;

/// Fit of `power = offset + contrast * cos(delta - chi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFit {
    /// Fringe peak position, in (-pi, pi]. Meaningless when `phase_defined`
    /// is false.
    pub chi: f64,
    /// Fringe amplitude, non-negative.
    pub contrast: f64,
    pub offset: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    /// False when the fitted contrast is below the validity threshold.
    pub phase_defined: bool,
}

impl FringeFit {
    /// Interferometric visibility `(max - min) / (max + min)` of the fitted
    /// fringe. For the normalized readout `[1 + |A| cos(delta - chi)] / 2`
    /// this recovers `|A|`.
    pub fn visibility(&self) -> f64 {
        if self.offset.abs() < 1e-300 {
            return 0.0;
        }
        self.contrast / self.offset
    }
}

/// Linear least squares in `(offset, contrast cos chi, contrast sin chi)`.
///
/// Requires at least three samples spanning more than pi of `delta`.
pub fn fringe_fit(samples: &[(f64, f64)]) -> Result<FringeFit> {
    if samples.len() < 3 {
        return Err(OpticsError::FitTooFewSamples(samples.len()));
    }
    let span = samples
        .iter()
        .map(|s| s.0)
        .fold(f64::NEG_INFINITY, f64::max)
        - samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    if span <= std::f64::consts::PI {
        return Err(OpticsError::FitSpanTooNarrow(span));
    }

    // Normal equations for the design matrix [1, cos d, sin d].
    let mut ata = [[0.0_f64; 3]; 3];
    let mut atb = [0.0_f64; 3];
    for &(delta, power) in samples {
        let row = [1.0, delta.cos(), delta.sin()];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * power;
        }
    }
    let coeffs = solve3(ata, atb).ok_or(OpticsError::FitSingular)?;
    let [offset, a, b] = coeffs;
    let contrast = a.hypot(b);
    let chi = b.atan2(a);

    let mut ss = 0.0;
    for &(delta, power) in samples {
        let model = offset + a * delta.cos() + b * delta.sin();
        ss += (power - model) * (power - model);
    }
    let residual = (ss / samples.len() as f64).sqrt();

    Ok(FringeFit {
        chi,
        contrast,
        offset,
        residual,
        phase_defined: contrast >= CONTRAST_VALIDITY_EPS,
    })
}

/// Noiseless fringe samples for a given model, used for calibration tests and
/// synthetic data generation.
pub fn synthesize_fringe(chi: f64, contrast: f64, offset: f64, deltas: &[f64]) -> Vec<(f64, f64)> {
    deltas
        .iter()
        .map(|&d| (d, offset + contrast * (d - chi).cos()))
        .collect()
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .expect("finite")
        })?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let factor = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut sum = b[row];
        for k in row + 1..3 {
            sum -= a[row][k] * x[k];
        }
        x[row] = sum / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    use crate::optics::default_delta_grid;

    // Box-Muller; keeps the test free of extra dependencies.
    fn gaussian(rng: &mut impl Rng, sigma: f64) -> f64 {
        let u1: f64 = rng.gen::<f64>().max(1e-300);
        let u2: f64 = rng.gen();
        sigma * (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }

    #[test]
    fn exact_recovery_on_noiseless_cosine() {
        let deltas = default_delta_grid();
        let samples = synthesize_fringe(1.2, 0.4, 0.5, &deltas);
        let fit = fringe_fit(&samples).unwrap();
        assert!(fit.phase_defined);
        assert_abs_diff_eq!(fit.chi, 1.2, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.contrast, 0.4, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.offset, 0.5, epsilon = 1e-10);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn constant_samples_leave_phase_undefined() {
        let deltas = default_delta_grid();
        let samples: Vec<_> = deltas.iter().map(|&d| (d, 0.5)).collect();
        let fit = fringe_fit(&samples).unwrap();
        assert!(!fit.phase_defined);
    }

    #[test]
    fn input_validation() {
        assert!(matches!(
            fringe_fit(&[(0.0, 1.0), (1.0, 0.5)]),
            Err(OpticsError::FitTooFewSamples(2))
        ));
        let narrow: Vec<_> = (0..8).map(|i| (i as f64 * 0.1, 1.0)).collect();
        assert!(matches!(
            fringe_fit(&narrow),
            Err(OpticsError::FitSpanTooNarrow(_))
        ));
    }

    #[test]
    fn noise_calibration_64_points() {
        // 1% additive Gaussian noise: |chi_hat - chi| < 0.01 rad in at least
        // 95% of seeded trials, with bias well under sigma/10.
        let deltas = default_delta_grid();
        let truth_chi = 0.9;
        let clean = synthesize_fringe(truth_chi, 0.5, 0.5, &deltas);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trials = 500;
        let mut hits = 0;
        let mut error_sum = 0.0;
        for _ in 0..trials {
            let noisy: Vec<_> = clean
                .iter()
                .map(|&(d, p)| (d, p + gaussian(&mut rng, 0.01)))
                .collect();
            let fit = fringe_fit(&noisy).unwrap();
            let err = crate::phase::wrap_angle(fit.chi - truth_chi);
            error_sum += err;
            if err.abs() < 0.01 {
                hits += 1;
            }
        }
        assert!(hits as f64 >= 0.95 * trials as f64, "hits = {hits}");
        assert!((error_sum / trials as f64).abs() < 1e-3);
    }

    #[test]
    fn fit_handles_arbitrary_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let deltas: Vec<f64> = (0..32).map(|_| rng.gen::<f64>() * TAU).collect();
        let samples = synthesize_fringe(-2.0, 0.3, 0.4, &deltas);
        let fit = fringe_fit(&samples).unwrap();
        assert_abs_diff_eq!(fit.chi, -2.0, epsilon = 1e-9);
    }
}
