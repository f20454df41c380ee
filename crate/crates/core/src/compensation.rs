//! Trading ADC resolution against RF gain.
//!
//! For a reference hardware pair `(b_ref, |chi_ref|)` and an alternative
//! resolution `b`, search the RF scale `|chi|` in `(0, 1]` whose closed-form
//! sum rate matches the reference, averaged over an antenna grid. The
//! closed-form rate is strictly increasing in `|chi|`, so bisection applies.

use crate::config::{SystemConfig, ValidatedConfig};
use crate::error::{ConfigError, Result};
use crate::quantization::AdcBits;
use crate::rate::rate_approx;

/// Largest relative sum-rate gap accepted as a match.
pub const MATCH_TOLERANCE: f64 = 0.005;

const MIN_SCALE: f64 = 1e-9;
const BISECTION_STEPS: usize = 200;

/// Closed-form sum rate for every antenna count in `m_grid`.
pub fn sum_rate_curve(base: &SystemConfig, m_grid: &[usize]) -> Result<Vec<f64>, ConfigError> {
    m_grid
        .iter()
        .map(|&m| {
            let cfg: ValidatedConfig = SystemConfig {
                num_antennas: m,
                ..base.clone()
            }
            .validate()?;
            Ok(rate_approx(&cfg).iter().sum())
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn with_hardware(base: &SystemConfig, bits: AdcBits, scale: f64) -> SystemConfig {
    SystemConfig {
        adc_bits: bits,
        rf_scale_magnitude: scale,
        ..base.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompensationMatch {
    pub bits: AdcBits,
    pub scale: f64,
    pub curve: Vec<f64>,
    pub reference_curve: Vec<f64>,
    /// `max_M |R(M) - R_ref(M)| / R_ref(M)`.
    pub max_rel_deviation: f64,
}

impl CompensationMatch {
    pub fn overlaps(&self) -> bool {
        self.max_rel_deviation <= MATCH_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CompensationOutcome {
    Matched(CompensationMatch),
    /// Even `|chi| = 1` falls short of the reference rate.
    Unreachable {
        bits: AdcBits,
        best_mean_rate: f64,
        target_mean_rate: f64,
    },
}

impl CompensationOutcome {
    pub fn is_match(&self) -> bool {
        matches!(self, CompensationOutcome::Matched(m) if m.overlaps())
    }
}

/// Finds `|chi|` for resolution `bits` reproducing the reference sum rate.
///
/// `reference` supplies every other parameter; its `adc_bits` and
/// `rf_scale_magnitude` define the target.
pub fn match_rf_scale(
    reference: &SystemConfig,
    bits: AdcBits,
    m_grid: &[usize],
) -> Result<CompensationOutcome, ConfigError> {
    let reference_curve = sum_rate_curve(reference, m_grid)?;
    let target = mean(&reference_curve);
    let rate_at = |scale: f64| -> Result<f64, ConfigError> {
        Ok(mean(&sum_rate_curve(&with_hardware(reference, bits, scale), m_grid)?))
    };

    let best = rate_at(1.0)?;
    if best < target * (1.0 - MATCH_TOLERANCE) {
        return Ok(CompensationOutcome::Unreachable {
            bits,
            best_mean_rate: best,
            target_mean_rate: target,
        });
    }

    let scale = if best <= target {
        1.0
    } else {
        let (mut lo, mut hi) = (MIN_SCALE, 1.0);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if rate_at(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    };

    let curve = sum_rate_curve(&with_hardware(reference, bits, scale), m_grid)?;
    let max_rel_deviation = curve
        .iter()
        .zip(&reference_curve)
        .map(|(c, r)| ((c - r) / r).abs())
        .fold(0.0, f64::max);
    Ok(CompensationOutcome::Matched(CompensationMatch {
        bits,
        scale,
        curve,
        reference_curve,
        max_rel_deviation,
    }))
}
