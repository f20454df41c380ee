//! Model parameters and their validation.
//!
//! Powers are linear throughout the library. Conversion from dB happens at
//! the command-line boundary through [`db_to_linear`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Violation};
use crate::quantization::{quantization_params, AdcBits};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// All scalars of the uplink model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Base-station antennas `M`.
    pub num_antennas: usize,
    /// Single-antenna users `K`.
    pub num_users: usize,
    /// Pilot symbols per user `tau`.
    pub pilot_length: usize,
    pub adc_bits: AdcBits,
    /// `kappa` in `chi = kappa * exp(j*phi)`.
    pub rf_scale_magnitude: f64,
    /// `phi`, radians.
    pub rf_phase: f64,
    /// Variance of the RF distortion noise `n_RF`.
    pub rf_noise_var: f64,
    pub pilot_power: f64,
    pub data_power: f64,
    /// Large-scale fading `beta_k`, one per user.
    pub large_scale: Vec<f64>,
}

impl SystemConfig {
    /// Ideal hardware, `tau = K`, unit large-scale fading, 10 dB powers.
    pub fn new(num_antennas: usize, num_users: usize) -> Self {
        Self {
            num_antennas,
            num_users,
            pilot_length: num_users,
            adc_bits: AdcBits::Infinite,
            rf_scale_magnitude: 1.0,
            rf_phase: 0.0,
            rf_noise_var: 0.0,
            pilot_power: 10.0,
            data_power: 10.0,
            large_scale: vec![1.0; num_users],
        }
    }

    pub fn validate(&self) -> Result<ValidatedConfig, ConfigError> {
        validate_config(self)
    }
}

/// Single-cell user placement with a protected central hole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    /// Meters.
    pub cell_radius: f64,
    /// Meters; users never fall inside this radius.
    pub hole_radius: f64,
    pub shadow_std_db: f64,
    pub path_loss_exp: f64,
    pub num_users: usize,
}

impl ScenarioSpec {
    /// 900 m cell, 100 m hole, 8 dB shadowing, exponent 3.8, ten users.
    pub fn reference() -> Self {
        Self {
            cell_radius: 900.0,
            hole_radius: 100.0,
            shadow_std_db: 8.0,
            path_loss_exp: 3.8,
            num_users: 10,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut violations = Vec::new();
        if self.num_users == 0 {
            violations.push(Violation::ZeroCount { name: "num_users" });
        }
        if !(self.hole_radius > 0.0 && self.hole_radius < self.cell_radius) || !self.cell_radius.is_finite() {
            violations.push(Violation::HoleRadius {
                hole_radius: self.hole_radius,
                cell_radius: self.cell_radius,
            });
        }
        if !(self.path_loss_exp > 0.0 && self.path_loss_exp.is_finite()) {
            violations.push(Violation::PathLossExponent(self.path_loss_exp));
        }
        if !(self.shadow_std_db >= 0.0 && self.shadow_std_db.is_finite()) {
            violations.push(Violation::ShadowStd(self.shadow_std_db));
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { violations })
        }
    }
}

/// A [`SystemConfig`] whose invariants hold, with derived quantities cached.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig {
    raw: SystemConfig,
    mu: f64,
    eta: f64,
    chi: Complex64,
    chi_sq: f64,
    beta_sum: f64,
}

impl ValidatedConfig {
    pub fn raw(&self) -> &SystemConfig {
        &self.raw
    }

    pub fn into_raw(self) -> SystemConfig {
        self.raw
    }

    pub fn num_antennas(&self) -> usize {
        self.raw.num_antennas
    }

    pub fn num_users(&self) -> usize {
        self.raw.num_users
    }

    pub fn pilot_length(&self) -> usize {
        self.raw.pilot_length
    }

    pub fn adc_bits(&self) -> AdcBits {
        self.raw.adc_bits
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Common RF gain `chi = kappa * exp(j*phi)`.
    pub fn chi(&self) -> Complex64 {
        self.chi
    }

    /// `|chi|^2`.
    pub fn chi_sq(&self) -> f64 {
        self.chi_sq
    }

    pub fn rf_noise_var(&self) -> f64 {
        self.raw.rf_noise_var
    }

    pub fn pilot_power(&self) -> f64 {
        self.raw.pilot_power
    }

    pub fn data_power(&self) -> f64 {
        self.raw.data_power
    }

    pub fn beta(&self) -> &[f64] {
        &self.raw.large_scale
    }

    pub fn beta_sum(&self) -> f64 {
        self.beta_sum
    }

    /// Returns a copy with the large-scale coefficients replaced.
    pub fn with_beta(&self, beta: Vec<f64>) -> Result<ValidatedConfig, ConfigError> {
        SystemConfig {
            large_scale: beta,
            ..self.raw.clone()
        }
        .validate()
    }
}

fn check_nonnegative(violations: &mut Vec<Violation>, name: &'static str, value: f64) {
    if !(value >= 0.0 && value.is_finite()) {
        violations.push(Violation::NegativeParameter { name, value });
    }
}

/// Checks every invariant of `cfg`, reporting all violations at once.
pub fn validate_config(cfg: &SystemConfig) -> Result<ValidatedConfig, ConfigError> {
    let mut violations = Vec::new();
    if cfg.num_antennas == 0 {
        violations.push(Violation::ZeroCount { name: "num_antennas" });
    }
    if cfg.num_users == 0 {
        violations.push(Violation::ZeroCount { name: "num_users" });
    }
    if cfg.pilot_length == 0 {
        violations.push(Violation::ZeroCount { name: "pilot_length" });
    }
    if cfg.pilot_length < cfg.num_users {
        violations.push(Violation::PilotTooShort {
            pilot_length: cfg.pilot_length,
            num_users: cfg.num_users,
        });
    }
    if !(cfg.rf_scale_magnitude > 0.0 && cfg.rf_scale_magnitude <= 1.0) {
        violations.push(Violation::RfScaleOutOfRange(cfg.rf_scale_magnitude));
    }
    if !cfg.rf_phase.is_finite() {
        violations.push(Violation::NonFinitePhase(cfg.rf_phase));
    }
    check_nonnegative(&mut violations, "rf_noise_var", cfg.rf_noise_var);
    check_nonnegative(&mut violations, "pilot_power", cfg.pilot_power);
    check_nonnegative(&mut violations, "data_power", cfg.data_power);
    if cfg.large_scale.len() != cfg.num_users {
        violations.push(Violation::LargeScaleLength {
            expected: cfg.num_users,
            got: cfg.large_scale.len(),
        });
    }
    for (index, &value) in cfg.large_scale.iter().enumerate() {
        if !(value >= 0.0 && value.is_finite()) {
            violations.push(Violation::NegativeLargeScale { index, value });
        }
    }
    let quant = match quantization_params(cfg.adc_bits) {
        Ok(q) => Some(q),
        Err(_) => {
            violations.push(Violation::ZeroAdcBits);
            None
        }
    };

    match quant {
        Some(q) if violations.is_empty() => {
            let chi = Complex64::from_polar(cfg.rf_scale_magnitude, cfg.rf_phase);
            Ok(ValidatedConfig {
                mu: q.mu,
                eta: q.eta,
                chi,
                chi_sq: cfg.rf_scale_magnitude * cfg.rf_scale_magnitude,
                beta_sum: cfg.large_scale.iter().sum(),
                raw: cfg.clone(),
            })
        }
        _ => Err(ConfigError { violations }),
    }
}

/// JSON configuration document: a system block plus an optional user-drop
/// scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub scenario: Option<ScenarioSpec>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_ii_like() -> SystemConfig {
        SystemConfig {
            adc_bits: AdcBits::Finite(2),
            rf_scale_magnitude: 0.9,
            rf_noise_var: 0.1,
            ..SystemConfig::new(64, 10)
        }
    }

    #[test]
    fn pilot_too_short() {
        let cfg = SystemConfig {
            pilot_length: 8,
            ..SystemConfig::new(16, 10)
        };
        let err = validate_config(&cfg).unwrap_err();
        assert!(err.contains(|v| matches!(v, Violation::PilotTooShort { .. })));
    }

    #[test]
    fn rf_scale_out_of_range() {
        let cfg = SystemConfig {
            rf_scale_magnitude: 1.2,
            ..SystemConfig::new(16, 4)
        };
        let err = validate_config(&cfg).unwrap_err();
        assert_eq!(err.violations, vec![Violation::RfScaleOutOfRange(1.2)]);
    }

    #[test]
    fn every_violation_reported() {
        let cfg = SystemConfig {
            pilot_length: 2,
            rf_scale_magnitude: 0.0,
            rf_noise_var: -1.0,
            data_power: f64::NAN,
            large_scale: vec![1.0, -1.0, 1.0],
            ..SystemConfig::new(0, 4)
        };
        let err = validate_config(&cfg).unwrap_err();
        assert_eq!(err.violations.len(), 7, "{err}");
    }

    #[test]
    fn derived_quantities() {
        let v = validate_config(&table_ii_like()).unwrap();
        let q = quantization_params(AdcBits::Finite(2)).unwrap();
        assert_eq!(v.eta(), q.eta);
        assert_eq!(v.mu(), q.mu);
        assert!((v.chi_sq() - 0.81).abs() < 1e-15);
        assert_eq!(v.beta_sum(), 10.0);
        assert_eq!(v.chi(), Complex64::new(0.9, 0.0));
    }

    #[test]
    fn db_round_trip() {
        assert_eq!(db_to_linear(10.0), 10.0);
        assert_eq!(db_to_linear(0.0), 1.0);
        assert!((linear_to_db(db_to_linear(-7.5)) + 7.5).abs() < 1e-12);
    }

    #[test]
    fn json_document() {
        let doc = r#"{
            "system": {
                "num_antennas": 32, "num_users": 2, "pilot_length": 2,
                "adc_bits": "infinite", "rf_scale_magnitude": 1.0, "rf_phase": 0.0,
                "rf_noise_var": 0.0, "pilot_power": 1.0, "data_power": 1.0,
                "large_scale": [1.0, 0.5]
            },
            "scenario": {
                "cell_radius": 900.0, "hole_radius": 100.0, "shadow_std_db": 8.0,
                "path_loss_exp": 3.8, "num_users": 2
            }
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(doc).unwrap();
        assert_eq!(cfg.system.adc_bits, AdcBits::Infinite);
        assert!(cfg.system.validate().is_ok());
        assert!(cfg.scenario.unwrap().validate().is_ok());

        let bad = doc.replace("\"rf_phase\"", "\"rf_phaze\"");
        assert!(serde_json::from_str::<ExperimentConfig>(&bad).is_err());
    }

    #[test]
    fn scenario_invariants() {
        let mut s = ScenarioSpec::reference();
        assert!(s.validate().is_ok());
        s.hole_radius = 1000.0;
        s.path_loss_exp = 0.0;
        s.shadow_std_db = -1.0;
        assert_eq!(s.validate().unwrap_err().violations.len(), 3);
    }
}
