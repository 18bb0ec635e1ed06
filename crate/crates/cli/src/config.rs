//! JSON run configuration: schema, defaults, validation and the resolved
//! echo embedded in every output file.
//!
//! Units are part of the key names (`w0_mm`, `wavelength_nm`, `gamma_rad`);
//! angles are radians except that `beta` may be given as `beta_arcsec`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mgp_core::gafit::{GaConfig, ARCSEC};
use mgp_core::optics::{OpticsConfig, Setup, StageConfig};
use mgp_core::phase::uniform_grid;
use mgp_core::scan::ScanSpec;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn fail<T>(message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(message.into()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpticsSection {
    pub wavelength_nm: f64,
    pub w0_mm: f64,
    pub dx_mm: f64,
    pub gamma_rad: f64,
    pub tilt_scale: f64,
}

impl Default for OpticsSection {
    fn default() -> Self {
        let d = OpticsConfig::default();
        Self {
            wavelength_nm: d.wavelength_nm,
            w0_mm: d.w0_mm,
            dx_mm: d.dx_mm,
            gamma_rad: d.gamma_rad,
            tilt_scale: d.tilt_scale,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StageSection {
    pub gamma_rad: Option<f64>,
    pub dx_mm: Option<f64>,
    pub nu_rad: Option<f64>,
    pub beta_rad: Option<f64>,
    pub beta_arcsec: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    /// Waists for chi-curve and scan-w0 commands.
    pub w0_values_mm: Vec<f64>,
    pub alpha_points: usize,
    /// Diagram axes.
    pub w0_range_mm: [f64; 2],
    pub w0_points: usize,
    pub gamma_range_rad: [f64; 2],
    pub gamma_points: usize,
    /// Waist bracket for transition location.
    pub bracket_mm: [f64; 2],
    pub transition_tol_mm: f64,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            w0_values_mm: vec![0.6, 0.85, 1.2, 1.6, 2.0, 2.5],
            alpha_points: 181,
            w0_range_mm: [0.3, 2.5],
            w0_points: 64,
            gamma_range_rad: [-std::f64::consts::PI, std::f64::consts::PI],
            gamma_points: 64,
            bracket_mm: [0.3, 3.0],
            transition_tol_mm: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaSection {
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub crossover_rate: f64,
    pub mutation_std_nu_rad: f64,
    pub mutation_std_beta_arcsec: f64,
    pub mutation_decay: f64,
    pub reset_rate: f64,
    pub elitism: usize,
    pub beta_max_arcsec: f64,
    pub lambda_contrast: f64,
}

impl Default for GaSection {
    fn default() -> Self {
        let d = GaConfig::default();
        Self {
            population: d.population,
            generations: d.generations,
            tournament: d.tournament,
            crossover_rate: d.crossover_rate,
            mutation_std_nu_rad: d.mutation_std_nu,
            mutation_std_beta_arcsec: d.mutation_std_beta / ARCSEC,
            mutation_decay: d.mutation_decay,
            reset_rate: d.reset_rate,
            elitism: d.elitism,
            beta_max_arcsec: d.beta_max / ARCSEC,
            lambda_contrast: d.lambda_contrast,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub optics: OpticsSection,
    pub n_stages: usize,
    /// Optional per-stage overrides; padded with defaults up to `n_stages`.
    pub stages: Vec<StageSection>,
    pub scan: ScanSection,
    pub ga: GaSection,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Worker-thread cap; 0 leaves the pool at its default size.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            optics: OpticsSection::default(),
            n_stages: 3,
            stages: Vec::new(),
            scan: ScanSection::default(),
            ga: GaSection::default(),
            output_dir: PathBuf::from("out"),
            seed: 1,
            threads: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigError(format!("cannot read config file {}: {e}", path.display()))
        })?;
        let config: RunConfig = serde_json::from_str(&text).map_err(|e| {
            ConfigError(format!("invalid config {}: {e}", path.display()))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_stages == 0 {
            return fail("n_stages must be at least 1");
        }
        if self.stages.len() > self.n_stages {
            return fail(format!(
                "{} stage overrides given for n_stages = {}",
                self.stages.len(),
                self.n_stages
            ));
        }
        for (i, stage) in self.stages.iter().enumerate() {
            if stage.beta_rad.is_some() && stage.beta_arcsec.is_some() {
                return fail(format!(
                    "stage {i}: give beta_rad or beta_arcsec, not both"
                ));
            }
        }
        let optics = self.optics_config();
        optics
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        if self.scan.alpha_points < 2 {
            return fail("scan.alpha_points must be at least 2");
        }
        if self.scan.w0_points < 1 || self.scan.gamma_points < 1 {
            return fail("scan.w0_points and scan.gamma_points must be at least 1");
        }
        if self.scan.w0_range_mm[1] < self.scan.w0_range_mm[0]
            || self.scan.w0_range_mm[0] <= 0.0
        {
            return fail(format!(
                "scan.w0_range_mm {:?} must be positive and non-decreasing",
                self.scan.w0_range_mm
            ));
        }
        if self.scan.gamma_range_rad[1] < self.scan.gamma_range_rad[0] {
            return fail("scan.gamma_range_rad must be non-decreasing");
        }
        if self.scan.bracket_mm[1] <= self.scan.bracket_mm[0]
            || self.scan.bracket_mm[0] <= 0.0
        {
            return fail(format!(
                "scan.bracket_mm {:?} must be positive and increasing",
                self.scan.bracket_mm
            ));
        }
        if self.scan.w0_values_mm.is_empty() {
            return fail("scan.w0_values_mm must not be empty");
        }
        self.ga_config()
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        Ok(())
    }

    pub fn optics_config(&self) -> OpticsConfig {
        OpticsConfig {
            wavelength_nm: self.optics.wavelength_nm,
            w0_mm: self.optics.w0_mm,
            dx_mm: self.optics.dx_mm,
            gamma_rad: self.optics.gamma_rad,
            tilt_scale: self.optics.tilt_scale,
        }
    }

    /// The configured setup at plate angle zero.
    pub fn setup(&self) -> Setup {
        let optics = self.optics_config();
        let stages = (0..self.n_stages)
            .map(|i| {
                let over = self.stages.get(i).cloned().unwrap_or_default();
                let beta = over
                    .beta_rad
                    .or(over.beta_arcsec.map(|b| b * ARCSEC))
                    .unwrap_or(0.0);
                StageConfig {
                    alpha_rad: 0.0,
                    gamma_rad: over.gamma_rad.unwrap_or(optics.gamma_rad),
                    dx_mm: over.dx_mm.unwrap_or(optics.dx_mm),
                    beta_rad: beta,
                    nu_rad: over.nu_rad.unwrap_or(0.0),
                }
            })
            .collect();
        Setup { optics, stages }
    }

    pub fn alpha_grid(&self) -> Vec<f64> {
        uniform_grid(0.0, std::f64::consts::FRAC_PI_2, self.scan.alpha_points)
    }

    pub fn diagram_spec(&self) -> ScanSpec {
        let setup = self.setup();
        ScanSpec {
            w0_values_mm: uniform_grid(
                self.scan.w0_range_mm[0],
                self.scan.w0_range_mm[1],
                self.scan.w0_points,
            ),
            alpha_grid: self.alpha_grid(),
            gamma_values_rad: Some(uniform_grid(
                self.scan.gamma_range_rad[0],
                self.scan.gamma_range_rad[1],
                self.scan.gamma_points,
            )),
            stage_imperfections: setup
                .stages
                .iter()
                .map(|s| (s.nu_rad, s.beta_rad))
                .collect(),
        }
    }

    pub fn ga_config(&self) -> GaConfig {
        GaConfig {
            population: self.ga.population,
            generations: self.ga.generations,
            tournament: self.ga.tournament,
            crossover_rate: self.ga.crossover_rate,
            mutation_std_nu: self.ga.mutation_std_nu_rad,
            mutation_std_beta: self.ga.mutation_std_beta_arcsec * ARCSEC,
            mutation_decay: self.ga.mutation_decay,
            reset_rate: self.ga.reset_rate,
            elitism: self.ga.elitism,
            seed: self.seed,
            beta_max: self.ga.beta_max_arcsec * ARCSEC,
            lambda_contrast: self.ga.lambda_contrast,
        }
    }

    /// One-line JSON echo of the fully resolved configuration.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let config = RunConfig::default();
        config.validate().unwrap();
        assert_eq!(config.setup().n_stages(), 3);
        assert_eq!(config.alpha_grid().len(), 181);
    }

    #[test]
    fn stage_overrides_apply() {
        let json = r#"{
            "n_stages": 3,
            "stages": [ {"beta_arcsec": 30.0, "nu_rad": 1.0} ],
            "seed": 7
        }"#;
        let config: RunConfig = serde_json::from_str(json).unwrap();
        config.validate().unwrap();
        let setup = config.setup();
        assert!((setup.stages[0].beta_rad - 30.0 * ARCSEC).abs() < 1e-15);
        assert_eq!(setup.stages[0].nu_rad, 1.0);
        assert_eq!(setup.stages[1].beta_rad, 0.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let json = r#"{ "optics": { "w0": 1.0 } }"#;
        assert!(serde_json::from_str::<RunConfig>(json).is_err());
    }

    #[test]
    fn double_beta_is_rejected() {
        let json = r#"{ "stages": [ {"beta_rad": 0.1, "beta_arcsec": 3.0} ] }"#;
        let config: RunConfig = serde_json::from_str(json).unwrap();
        assert!(config.validate().is_err());
    }

    #[test]
    fn echo_round_trips() {
        let config = RunConfig::default();
        let echoed: RunConfig = serde_json::from_str(&config.echo()).unwrap();
        assert_eq!(config.echo(), echoed.echo());
    }
}
