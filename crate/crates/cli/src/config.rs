//! Experiment configuration file.

use std::path::Path;

use bcldpc::capacity::{alpha_grid, QuadratureSpec};
use bcldpc::channel::{ChannelConfig, DensityQuadrature, LabelingRule, User};
use bcldpc::de::{DeOptions, GridSpec};
use bcldpc::units::db_to_linear;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaRange {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub snr_y_db: f64,
    pub snr_z_db: f64,
    pub power: f64,
    pub noise_variance: f64,
    /// Explicit power splits; takes precedence over `alpha_range`.
    pub alphas: Option<Vec<f64>>,
    pub alpha_range: Option<AlphaRange>,
    pub labeling: LabelingRule,
    pub grid: GridSpec,
    pub quadrature: QuadratureSpec,
    pub density_quadrature: DensityQuadrature,
    pub de: DeOptions,
    pub seed: Option<u64>,
    pub out_dir: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            snr_y_db: 5.059,
            snr_z_db: 3.871,
            power: 1.0,
            noise_variance: 1.0,
            alphas: None,
            alpha_range: None,
            labeling: LabelingRule::AdaptiveGray,
            grid: GridSpec::default(),
            quadrature: QuadratureSpec::default(),
            density_quadrature: DensityQuadrature::default(),
            de: DeOptions::default(),
            seed: None,
            out_dir: None,
        }
    }
}

/// Both forms of each user's SNR, stored next to every result.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SnrSummary {
    pub snr_y_db: f64,
    pub snr_y_linear: f64,
    pub snr_z_db: f64,
    pub snr_z_linear: f64,
}

fn invalid(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{path}: {msg}"))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let cfg = Self::parse(&text).map_err(|e| match e {
            CliError::Validation(m) => CliError::Validation(format!("{}:{m}", path.display())),
            other => other,
        })?;
        Ok(cfg)
    }

    /// Parses and validates. Errors carry `line:column` and the field path.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            CliError::Validation(format!("{}:{}: {}: {}", inner.line(), inner.column(), e.path(), inner))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        for (name, v) in [("snr_y_db", self.snr_y_db), ("snr_z_db", self.snr_z_db)] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        if !(self.power > 0.0) {
            return Err(invalid("power", format!("{} must be positive", self.power)));
        }
        if !(self.noise_variance > 0.0) {
            return Err(invalid("noise_variance", format!("{} must be positive", self.noise_variance)));
        }
        if let Some(list) = &self.alphas {
            for (i, a) in list.iter().enumerate() {
                if !(0.0..=1.0).contains(a) {
                    return Err(invalid(&format!("alphas[{i}]"), format!("{a} outside [0, 1]")));
                }
            }
        }
        if let Some(r) = &self.alpha_range {
            for (name, v) in [("alpha_range.start", r.start), ("alpha_range.stop", r.stop)] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(invalid(name, format!("{v} outside [0, 1]")));
                }
            }
            if r.count == 0 {
                return Err(invalid("alpha_range.count", "must be positive"));
            }
        }
        if !(self.grid.llr_max > 0.0) || self.grid.half_levels == 0 {
            return Err(invalid("grid", "llr_max and half_levels must be positive"));
        }
        self.quadrature
            .validate()
            .map_err(|e| invalid("quadrature", e))?;
        if self.density_quadrature.intervals == 0 || !(self.density_quadrature.sigma_span > 0.0) {
            return Err(invalid("density_quadrature", "intervals and sigma_span must be positive"));
        }
        if self.de.max_iterations == 0 || !(0.0..1.0).contains(&self.de.target_error) {
            return Err(invalid("de", "max_iterations > 0 and target_error in [0, 1) required"));
        }
        Ok(())
    }

    pub fn alpha_values(&self) -> Vec<f64> {
        if let Some(list) = &self.alphas {
            return list.clone();
        }
        match self.alpha_range {
            Some(AlphaRange { start, stop, count }) if count > 1 => {
                (0..count).map(|i| start + (stop - start) * i as f64 / (count - 1) as f64).collect()
            }
            Some(AlphaRange { start, .. }) => vec![start],
            None => alpha_grid(201),
        }
    }

    /// Channel at `alpha`, gains from the configured SNRs, power and noise.
    pub fn channel(&self, alpha: f64) -> Result<ChannelConfig, CliError> {
        let gain = |snr_db: f64| (db_to_linear(snr_db) * self.noise_variance / self.power).sqrt();
        ChannelConfig::new(alpha, self.power, self.noise_variance, gain(self.snr_y_db), gain(self.snr_z_db))
            .map_err(CliError::from)
    }

    pub fn snr_summary(&self) -> SnrSummary {
        SnrSummary {
            snr_y_db: self.snr_y_db,
            snr_y_linear: db_to_linear(self.snr_y_db),
            snr_z_db: self.snr_z_db,
            snr_z_linear: db_to_linear(self.snr_z_db),
        }
    }

    pub fn shift_snr(&mut self, user: User, offset_db: f64) {
        match user {
            User::Y => self.snr_y_db += offset_db,
            User::Z => self.snr_z_db += offset_db,
        }
    }
}
