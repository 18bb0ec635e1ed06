//! Genetic-algorithm search for the per-stage beam-displacer imperfections
//! `(nu_j, beta_j)` that make simulated phase/contrast curves match measured
//! ones.
//!
//! Tournament selection, uniform crossover, Gaussian mutation with reflection
//! at the box bounds, and elitism. Everything is driven by one seeded RNG, so
//! runs are reproducible; fitness evaluations within a generation are
//! independent and run in parallel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optics::Setup;
use crate::phase::wrap_angle;
use crate::tol::CONTRAST_VALIDITY_EPS;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 1 arcsecond in radians.
pub const ARCSEC: f64 = std::f64::consts::PI / (180.0 * 3600.0);

/// Loss contribution of a simulated point whose phase is undefined.
const INVALID_POINT_PENALTY: f64 = 10.0;

#[derive(Debug, Error, PartialEq)]
pub enum GaError {
    #[error("invalid GA configuration: {0}")]
    InvalidConfig(String),
    #[error("experiment data is empty")]
    EmptyData,
}

pub type Result<T> = std::result::Result<T, GaError>;

/// Per-stage imperfection genes: `(nu, beta)` with `nu in [0, 2pi)` and
/// `beta in [0, beta_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImperfectionGenome {
    pub pairs: Vec<(f64, f64)>,
}

impl ImperfectionGenome {
    pub fn ideal(n_stages: usize) -> Self {
        Self {
            pairs: vec![(0.0, 0.0); n_stages],
        }
    }

    pub fn within_bounds(&self, beta_max: f64) -> bool {
        self.pairs.iter().all(|&(nu, beta)| {
            (0.0..std::f64::consts::TAU).contains(&nu) && (0.0..=beta_max).contains(&beta)
        })
    }
}

/// One measured curve point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub w0_mm: f64,
    pub alpha_rad: f64,
    pub chi_rad: f64,
    pub contrast: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub crossover_rate: f64,
    /// Initial mutation standard deviation of the nu genes, radians.
    pub mutation_std_nu: f64,
    /// Initial mutation standard deviation of the beta genes, radians.
    pub mutation_std_beta: f64,
    /// Geometric decay of the mutation widths per generation; 1 disables
    /// annealing.
    pub mutation_decay: f64,
    /// Probability that a mutation redraws a stage's (nu, beta) pair
    /// uniformly instead of kicking it, keeping basin exploration alive after
    /// the population has converged.
    pub reset_rate: f64,
    pub elitism: usize,
    pub seed: u64,
    /// Upper bound on beta, radians. Default: twice the manufacturer's
    /// 30-arcsecond parallelism bound.
    pub beta_max: f64,
    /// Weight of the contrast term in the loss.
    pub lambda_contrast: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 64,
            generations: 200,
            tournament: 3,
            crossover_rate: 0.7,
            mutation_std_nu: 0.2,
            mutation_std_beta: 5.0 * ARCSEC,
            mutation_decay: 1.0,
            reset_rate: 0.05,
            elitism: 2,
            seed: 1,
            beta_max: 60.0 * ARCSEC,
            lambda_contrast: 1.0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population == 0 {
            return Err(GaError::InvalidConfig("population must be positive".into()));
        }
        if self.tournament == 0 || self.tournament > self.population {
            return Err(GaError::InvalidConfig(format!(
                "tournament size {} outside [1, population]",
                self.tournament
            )));
        }
        if self.elitism >= self.population {
            return Err(GaError::InvalidConfig(
                "elitism must be smaller than the population".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.reset_rate) {
            return Err(GaError::InvalidConfig(format!(
                "reset rate {} outside [0, 1]",
                self.reset_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(GaError::InvalidConfig(format!(
                "crossover rate {} outside [0, 1]",
                self.crossover_rate
            )));
        }
        if self.mutation_std_nu < 0.0 || self.mutation_std_beta < 0.0 || self.beta_max <= 0.0 {
            return Err(GaError::InvalidConfig(
                "mutation widths and beta_max must be positive".into(),
            ));
        }
        if !(self.mutation_decay > 0.0 && self.mutation_decay <= 1.0) {
            return Err(GaError::InvalidConfig(format!(
                "mutation decay {} outside (0, 1]",
                self.mutation_decay
            )));
        }
        Ok(())
    }
}

/// Weighted squared error between simulated and measured curves:
/// `sum w [circ_dist(chi_sim, chi_meas)^2 + lambda (c_sim - c_meas)^2]`.
///
/// Simulated points with undefined phase incur a fixed penalty; a simulation
/// failure makes the genome infinitely unfit instead of aborting the search.
pub fn loss(
    genome: &ImperfectionGenome,
    data: &[ExperimentRecord],
    base: &Setup,
    lambda: f64,
) -> f64 {
    let setup = base.with_imperfections(&genome.pairs);
    let mut total = 0.0;
    for record in data {
        let amp = match setup
            .with_w0(record.w0_mm)
            .with_alpha(record.alpha_rad)
            .readout_amplitude()
        {
            Ok(amp) => amp,
            Err(_) => return f64::INFINITY,
        };
        let contrast = amp.norm();
        if contrast < CONTRAST_VALIDITY_EPS {
            total += record.weight * INVALID_POINT_PENALTY;
            continue;
        }
        let dphi = wrap_angle(amp.arg() - record.chi_rad).abs();
        let dc = contrast - record.contrast;
        total += record.weight * (dphi * dphi + lambda * dc * dc);
    }
    total
}

/// Forward-simulates a genome into synthetic experiment records.
pub fn synthesize_records(
    genome: &ImperfectionGenome,
    base: &Setup,
    w0_values_mm: &[f64],
    alpha_grid: &[f64],
) -> Result<Vec<ExperimentRecord>> {
    let setup = base.with_imperfections(&genome.pairs);
    let mut records = Vec::with_capacity(w0_values_mm.len() * alpha_grid.len());
    for &w0 in w0_values_mm {
        for &alpha in alpha_grid {
            let amp = setup
                .with_w0(w0)
                .with_alpha(alpha)
                .readout_amplitude()
                .map_err(|e| GaError::InvalidConfig(e.to_string()))?;
            records.push(ExperimentRecord {
                w0_mm: w0,
                alpha_rad: alpha,
                chi_rad: amp.arg(),
                contrast: amp.norm(),
                weight: 1.0,
            });
        }
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaResult {
    pub best: ImperfectionGenome,
    pub best_loss: f64,
    /// Best loss after initialization and after each generation
    /// (`generations + 1` entries); non-increasing thanks to elitism.
    pub history: Vec<f64>,
}

/// Runs the search. `n_stages` genomes are sized to the setup.
pub fn evolve(cfg: &GaConfig, data: &[ExperimentRecord], base: &Setup) -> Result<GaResult> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(GaError::EmptyData);
    }
    let n_stages = base.n_stages();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let random_genome = |rng: &mut ChaCha8Rng| ImperfectionGenome {
        pairs: (0..n_stages)
            .map(|_| {
                (
                    rng.gen::<f64>() * std::f64::consts::TAU,
                    rng.gen::<f64>() * cfg.beta_max,
                )
            })
            .collect(),
    };
    let mut population: Vec<ImperfectionGenome> =
        (0..cfg.population).map(|_| random_genome(&mut rng)).collect();

    let evaluate = |pop: &[ImperfectionGenome]| -> Vec<f64> {
        pop.par_iter()
            .map(|g| loss(g, data, base, cfg.lambda_contrast))
            .collect()
    };
    let mut losses = evaluate(&population);
    let mut history = Vec::with_capacity(cfg.generations + 1);
    history.push(best_of(&losses).1);

    for generation in 0..cfg.generations {
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| losses[a].partial_cmp(&losses[b]).expect("loss not NaN"));

        let mut next: Vec<ImperfectionGenome> = order
            .iter()
            .take(cfg.elitism)
            .map(|&i| population[i].clone())
            .collect();

        let anneal = cfg.mutation_decay.powi(generation as i32);
        while next.len() < cfg.population {
            let a = tournament_pick(&losses, cfg.tournament, &mut rng);
            let b = tournament_pick(&losses, cfg.tournament, &mut rng);
            let mut child = if rng.gen::<f64>() < cfg.crossover_rate {
                uniform_crossover(&population[a], &population[b], &mut rng)
            } else {
                population[a].clone()
            };
            // Per-child log-uniform step scale: most offspring explore at the
            // configured width, some fine-tune decades below it.
            let scale = anneal * 10f64.powf(-3.0 * rng.gen::<f64>());
            mutate(&mut child, cfg, scale, &mut rng);
            debug_assert!(child.within_bounds(cfg.beta_max));
            next.push(child);
        }
        population = next;
        losses = evaluate(&population);
        let (_, best) = best_of(&losses);
        // Elitism makes the running best non-increasing.
        history.push(best.min(*history.last().unwrap()));
    }

    let (best_idx, best_loss) = best_of(&losses);
    Ok(GaResult {
        best: population[best_idx].clone(),
        best_loss,
        history,
    })
}

fn best_of(losses: &[f64]) -> (usize, f64) {
    losses
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(&b.1).expect("loss not NaN"))
        .expect("population non-empty")
}

fn tournament_pick(losses: &[f64], size: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut best = rng.gen_range(0..losses.len());
    for _ in 1..size {
        let challenger = rng.gen_range(0..losses.len());
        if losses[challenger] < losses[best] {
            best = challenger;
        }
    }
    best
}

// A stage's (nu, beta) pair is the natural building block, so crossover
// exchanges pairs atomically.
fn uniform_crossover(
    a: &ImperfectionGenome,
    b: &ImperfectionGenome,
    rng: &mut ChaCha8Rng,
) -> ImperfectionGenome {
    ImperfectionGenome {
        pairs: a
            .pairs
            .iter()
            .zip(&b.pairs)
            .map(|(&pa, &pb)| if rng.gen::<bool>() { pa } else { pb })
            .collect(),
    }
}

fn mutate(genome: &mut ImperfectionGenome, cfg: &GaConfig, scale: f64, rng: &mut ChaCha8Rng) {
    for pair in genome.pairs.iter_mut() {
        if rng.gen::<f64>() < cfg.reset_rate {
            pair.0 = rng.gen::<f64>() * std::f64::consts::TAU;
            pair.1 = rng.gen::<f64>() * cfg.beta_max;
            continue;
        }
        pair.0 = reflect(
            pair.0 + gaussian(rng, scale * cfg.mutation_std_nu),
            0.0,
            std::f64::consts::TAU,
        );
        // The upper nu bound is exclusive; 2pi is the same physical angle.
        if pair.0 >= std::f64::consts::TAU {
            pair.0 = 0.0;
        }
        pair.1 = reflect(
            pair.1 + gaussian(rng, scale * cfg.mutation_std_beta),
            0.0,
            cfg.beta_max,
        );
    }
}

/// Reflects `x` into `[lo, hi]`.
fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    let range = hi - lo;
    let r = (x - lo).rem_euclid(2.0 * range);
    lo + if r > range { 2.0 * range - r } else { r }
}

fn gaussian(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    sigma * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
