//! Parameter sweeps pairing closed-form metrics with Monte Carlo estimates.
//!
//! Every axis point reuses the same master seed, so trial `t` sees the same
//! channel (and, in scenario mode, the same user drop) at each point. Trials
//! run in parallel and are reduced in index order; the result depends only
//! on the sweep description.

use std::fmt;
use std::str::FromStr;

use crate::config::{db_to_linear, ScenarioSpec, SystemConfig, ValidatedConfig};
use crate::error::{Error, Result};
use crate::estimation::{analytic_mse, estimation_trial, mse_floor};
use crate::montecarlo::{check_trials, run_trials, Summary};
use crate::quantization::AdcBits;
use crate::rate::{instantaneous_rates, rate_approx, rate_perfect_csi_bound, rate_simplified};
use crate::rng::{substream, StreamTag};
use crate::scenario::drop_users;

/// Where the large-scale coefficients come from.
#[derive(Debug, Clone, PartialEq)]
pub enum BetaMode {
    /// Use `large_scale` from the configuration in every trial.
    Fixed,
    /// Redraw users per trial; analytic metrics are averaged over the drops.
    Scenario(ScenarioSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    PilotPowerDb,
    DataPowerDb,
    NumAntennas,
    PilotLength,
    AdcBits,
    RfScale,
    RfNoiseVar,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::PilotPowerDb => "pilot_power_db",
            Axis::DataPowerDb => "data_power_db",
            Axis::NumAntennas => "num_antennas",
            Axis::PilotLength => "pilot_length",
            Axis::AdcBits => "adc_bits",
            Axis::RfScale => "rf_scale_magnitude",
            Axis::RfNoiseVar => "rf_noise_var",
        }
    }

    /// Copy of `base` with this axis set to `value`. Count axes round to the
    /// nearest integer; `adc_bits = inf` selects the ideal converter.
    pub fn apply(self, base: &SystemConfig, value: f64) -> SystemConfig {
        let mut cfg = base.clone();
        let count = || {
            if value.is_finite() && value >= 0.0 {
                value.round() as usize
            } else {
                0
            }
        };
        match self {
            Axis::PilotPowerDb => cfg.pilot_power = db_to_linear(value),
            Axis::DataPowerDb => cfg.data_power = db_to_linear(value),
            Axis::NumAntennas => cfg.num_antennas = count(),
            Axis::PilotLength => cfg.pilot_length = count(),
            Axis::AdcBits => {
                cfg.adc_bits = if value.is_infinite() && value > 0.0 {
                    AdcBits::Infinite
                } else {
                    AdcBits::Finite(count() as u32)
                }
            }
            Axis::RfScale => cfg.rf_scale_magnitude = value,
            Axis::RfNoiseVar => cfg.rf_noise_var = value,
        }
        cfg
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Axis::PilotPowerDb,
            Axis::DataPowerDb,
            Axis::NumAntennas,
            Axis::PilotLength,
            Axis::AdcBits,
            Axis::RfScale,
            Axis::RfNoiseVar,
        ]
        .into_iter()
        .find(|a| a.name() == s)
        .ok_or_else(|| Error::UnknownAxis(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Channel-estimation MSE and its high-SNR floor.
    Mse,
    /// Sum rates: Monte Carlo, closed form, perfect-CSI bound, simplified form.
    Rate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base_config: SystemConfig,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub trials: u64,
    pub master_seed: u64,
    pub mode: BetaMode,
    pub metrics: Vec<Metric>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::EmptySweep);
        }
        if self
            .values
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        {
            return Err(Error::UnorderedSweep);
        }
        check_trials(self.trials, 2)?;
        if let BetaMode::Scenario(s) = &self.mode {
            s.validate()?;
        }
        Ok(())
    }
}

pub const METRIC_MSE: &str = "mse";
pub const METRIC_MSE_FLOOR: &str = "mse_floor";
pub const METRIC_SUM_RATE: &str = "sum_rate";
pub const METRIC_SUM_RATE_PERFECT_CSI: &str = "sum_rate_perfect_csi";
pub const METRIC_SUM_RATE_SIMPLIFIED: &str = "sum_rate_simplified";
pub const METRIC_ERROR: &str = "error";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub metric: &'static str,
    pub analytic: Option<f64>,
    pub mc: Option<f64>,
    pub ci95: Option<f64>,
    pub trials: u64,
    pub seed: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: Axis,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, axis_value: f64, metric: &str) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.axis_value == axis_value && r.metric == metric)
    }

    pub fn has_errors(&self) -> bool {
        self.rows.iter().any(|r| r.error.is_some())
    }
}

/// Large-scale coefficients seen by `trial` in scenario mode.
pub fn trial_drop(scenario: &ScenarioSpec, master_seed: u64, trial: u64) -> Result<Vec<f64>> {
    drop_users(scenario, &mut substream(master_seed, trial, StreamTag::UserDrop))
}

/// A single drop for fixed-geometry experiments, distinct from every trial drop.
pub fn fixed_drop(scenario: &ScenarioSpec, master_seed: u64) -> Result<Vec<f64>> {
    trial_drop(scenario, master_seed, u64::MAX)
}

#[derive(Debug, Clone, Default)]
struct TrialValues {
    mse: f64,
    mse_analytic: f64,
    floor: Option<f64>,
    sum_rate: f64,
    sum_rate_approx: f64,
    sum_rate_perfect_csi: f64,
    sum_rate_simplified: f64,
}

fn point_trial(cfg: &ValidatedConfig, spec: &SweepSpec, trial: u64) -> Result<TrialValues> {
    let owned;
    let cfg = match &spec.mode {
        BetaMode::Fixed => cfg,
        BetaMode::Scenario(scenario) => {
            owned = cfg.with_beta(trial_drop(scenario, spec.master_seed, trial)?)?;
            &owned
        }
    };
    let (realization, p_hat, _) = estimation_trial(cfg, spec.master_seed, trial)?;
    let mut out = TrialValues::default();
    if spec.metrics.contains(&Metric::Mse) {
        let mk = (cfg.num_antennas() * cfg.num_users()) as f64;
        out.mse = (&p_hat - &realization.p).norm_squared() / mk;
        out.mse_analytic = analytic_mse(cfg);
        out.floor = mse_floor(cfg).ok();
    }
    if spec.metrics.contains(&Metric::Rate) {
        out.sum_rate = instantaneous_rates(&p_hat, &realization.p, cfg).iter().sum();
        if matches!(spec.mode, BetaMode::Scenario(_)) {
            out.sum_rate_approx = rate_approx(cfg).iter().sum();
            out.sum_rate_perfect_csi = rate_perfect_csi_bound(cfg).iter().sum();
            out.sum_rate_simplified = rate_simplified(cfg).iter().sum();
        }
    }
    Ok(out)
}

fn mean_of(values: &[TrialValues], f: impl Fn(&TrialValues) -> f64) -> f64 {
    values.iter().map(f).sum::<f64>() / values.len() as f64
}

fn point_rows(spec: &SweepSpec, axis_value: f64, threads: Option<usize>) -> Result<Vec<SweepRow>> {
    let cfg = spec.axis.apply(&spec.base_config, axis_value).validate()?;
    let values = run_trials(spec.trials, threads, |t| point_trial(&cfg, spec, t))?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let scenario = matches!(spec.mode, BetaMode::Scenario(_));
    let row = |metric, analytic, mc: Option<Summary>| SweepRow {
        axis_value,
        metric,
        analytic,
        mc: mc.map(|s| s.mean),
        ci95: mc.map(|s| s.ci95),
        trials: spec.trials,
        seed: spec.master_seed,
        error: None,
    };

    let mut rows = Vec::new();
    if spec.metrics.contains(&Metric::Mse) {
        let mc = Summary::from_values(&values.iter().map(|v| v.mse).collect::<Vec<_>>())?;
        let analytic = if scenario {
            mean_of(&values, |v| v.mse_analytic)
        } else {
            analytic_mse(&cfg)
        };
        rows.push(row(METRIC_MSE, Some(analytic), Some(mc)));
        let floor = if scenario {
            values
                .iter()
                .map(|v| v.floor)
                .sum::<Option<f64>>()
                .map(|s| s / values.len() as f64)
        } else {
            mse_floor(&cfg).ok()
        };
        rows.push(row(METRIC_MSE_FLOOR, floor, None));
    }
    if spec.metrics.contains(&Metric::Rate) {
        let mc = Summary::from_values(&values.iter().map(|v| v.sum_rate).collect::<Vec<_>>())?;
        let (approx, perfect, simplified) = if scenario {
            (
                mean_of(&values, |v| v.sum_rate_approx),
                mean_of(&values, |v| v.sum_rate_perfect_csi),
                mean_of(&values, |v| v.sum_rate_simplified),
            )
        } else {
            (
                rate_approx(&cfg).iter().sum(),
                rate_perfect_csi_bound(&cfg).iter().sum(),
                rate_simplified(&cfg).iter().sum(),
            )
        };
        rows.push(row(METRIC_SUM_RATE, Some(approx), Some(mc)));
        rows.push(row(METRIC_SUM_RATE_PERFECT_CSI, Some(perfect), None));
        rows.push(row(METRIC_SUM_RATE_SIMPLIFIED, Some(simplified), None));
    }
    Ok(rows)
}

/// Runs every axis point. A point whose configuration is invalid, or whose
/// trials fail, yields a single `error` row and the sweep continues.
pub fn run_sweep(spec: &SweepSpec, threads: Option<usize>) -> Result<SweepResult> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &value in &spec.values {
        match point_rows(spec, value, threads) {
            Ok(r) => rows.extend(r),
            Err(e) => rows.push(SweepRow {
                axis_value: value,
                metric: METRIC_ERROR,
                analytic: None,
                mc: None,
                ci95: None,
                trials: spec.trials,
                seed: spec.master_seed,
                error: Some(e.to_string()),
            }),
        }
    }
    Ok(SweepResult { axis: spec.axis, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> SystemConfig {
        SystemConfig {
            adc_bits: AdcBits::Finite(2),
            rf_scale_magnitude: 0.9,
            rf_noise_var: 0.1,
            ..SystemConfig::new(16, 4)
        }
    }

    fn spec(axis: Axis, values: Vec<f64>, metrics: Vec<Metric>) -> SweepSpec {
        SweepSpec {
            base_config: base(),
            axis,
            values,
            trials: 300,
            master_seed: 21,
            mode: BetaMode::Fixed,
            metrics,
        }
    }

    #[test]
    fn axis_names_round_trip() {
        for a in [Axis::PilotPowerDb, Axis::NumAntennas, Axis::AdcBits, Axis::RfScale] {
            assert_eq!(a.name().parse::<Axis>().unwrap(), a);
        }
        assert!(matches!("snr".parse::<Axis>(), Err(Error::UnknownAxis(_))));
    }

    #[test]
    fn axis_application() {
        let b = base();
        assert_eq!(Axis::PilotPowerDb.apply(&b, 20.0).pilot_power, 100.0);
        assert_eq!(Axis::NumAntennas.apply(&b, 128.0).num_antennas, 128);
        assert_eq!(Axis::AdcBits.apply(&b, f64::INFINITY).adc_bits, AdcBits::Infinite);
        assert_eq!(Axis::AdcBits.apply(&b, 3.0).adc_bits, AdcBits::Finite(3));
    }

    #[test]
    fn empty_and_unordered_sweeps() {
        let s = spec(Axis::PilotPowerDb, vec![], vec![Metric::Mse]);
        assert!(matches!(run_sweep(&s, None), Err(Error::EmptySweep)));
        let s = spec(Axis::PilotPowerDb, vec![10.0, 0.0], vec![Metric::Mse]);
        assert!(matches!(run_sweep(&s, None), Err(Error::UnorderedSweep)));
        let mut s = spec(Axis::PilotPowerDb, vec![0.0], vec![Metric::Mse]);
        s.trials = 1;
        assert!(matches!(run_sweep(&s, None), Err(Error::TooFewTrials { .. })));
    }

    #[test]
    fn invalid_point_recorded_and_sweep_continues() {
        let s = spec(Axis::PilotLength, vec![2.0, 4.0, 6.0], vec![Metric::Mse]);
        let r = run_sweep(&s, None).unwrap();
        let err = r.row(2.0, METRIC_ERROR).unwrap();
        assert!(err.error.as_deref().unwrap().contains("pilot length"));
        assert!(r.row(4.0, METRIC_MSE).is_some());
        assert!(r.row(6.0, METRIC_MSE).is_some());
        assert_eq!(r.row(6.0, METRIC_MSE_FLOOR).unwrap().analytic, None);
    }

    #[test]
    fn mse_sweep_shape() {
        let s = spec(
            Axis::PilotPowerDb,
            vec![-10.0, 0.0, 10.0, 20.0, 30.0, 40.0],
            vec![Metric::Mse],
        );
        let r = run_sweep(&s, None).unwrap();
        let analytic: Vec<f64> = s
            .values
            .iter()
            .map(|v| r.row(*v, METRIC_MSE).unwrap().analytic.unwrap())
            .collect();
        assert!(analytic.windows(2).all(|w| w[1] < w[0]));
        let floor = r.row(40.0, METRIC_MSE_FLOOR).unwrap().analytic.unwrap();
        assert!((analytic[5] / floor - 1.0).abs() < 1e-3);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let mut s = spec(Axis::NumAntennas, vec![8.0, 16.0], vec![Metric::Mse, Metric::Rate]);
        s.mode = BetaMode::Scenario(ScenarioSpec {
            num_users: 4,
            ..ScenarioSpec::reference()
        });
        let a = run_sweep(&s, Some(1)).unwrap();
        let b = run_sweep(&s, Some(7)).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn rate_rows_consistent() {
        let s = spec(Axis::NumAntennas, vec![16.0, 64.0], vec![Metric::Rate]);
        let r = run_sweep(&s, None).unwrap();
        for m in [16.0, 64.0] {
            let approx = r.row(m, METRIC_SUM_RATE).unwrap().analytic.unwrap();
            let simplified = r.row(m, METRIC_SUM_RATE_SIMPLIFIED).unwrap().analytic.unwrap();
            let perfect = r.row(m, METRIC_SUM_RATE_PERFECT_CSI).unwrap().analytic.unwrap();
            assert!((approx - simplified).abs() < 1e-12 * approx);
            assert!(perfect >= approx);
        }
    }
}
