//! MRC reception and uplink achievable rates.
//!
//! With the estimate `P_hat`, the combiner output for user `n` is
//! `r_n = eta sqrt(rho_u) p_hat_n^H p_n x_n + xi`, where `xi` collects RF,
//! thermal and quantization noise plus multi-user interference. Treating
//! `xi` as Gaussian gives the instantaneous SINR
//! `rho_u eta^2 |p_hat_n^H p_n|^2 / I_G` and the ergodic rate
//! `E log2(1 + SINR)`.
//!
//! The closed-form approximation replaces numerator and `I_G` by their
//! expectations:
//!
//! ```text
//! R_n ~ log2(1 + eta rho_u |chi|^2 beta_n (alpha_n M + 1) / D)
//! D   = rho_u |chi|^2 (sum_i beta_i - eta beta_n) + (1 - eta) alpha_n rho_u |chi|^2 beta_n + sigma^2 + 1
//! ```

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::channel::{aqnm_noise_cov_effective, receive, ChannelRealization, NoiseSources};
use crate::config::ValidatedConfig;
use crate::error::{Error, Result};
use crate::estimation::{estimation_accuracy, estimation_trial};
use crate::montecarlo::{check_trials, run_trials, Summary};
use crate::rng::{complex_normal, complex_normal_vector, substream, StreamTag};

/// Monte Carlo and closed-form rates, bits/s/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub per_user_mc: Vec<f64>,
    pub per_user_approx: Vec<f64>,
    pub sum_mc: f64,
    pub sum_approx: f64,
    /// Per-user 95% half-widths of the Monte Carlo means.
    pub ci95: Vec<f64>,
    /// 95% half-width of the Monte Carlo sum rate.
    pub sum_ci95: f64,
    pub trials: u64,
}

/// `r = P_hat^H y_q`.
pub fn mrc_combine(p_hat: &DMatrix<Complex64>, y_q: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    if p_hat.nrows() != y_q.len() {
        return Err(Error::DimensionMismatch {
            what: "received vector",
            expected: p_hat.nrows(),
            got: y_q.len(),
        });
    }
    Ok(p_hat.adjoint() * y_q)
}

/// `I_G` for user `n` with a precomputed `C_nq` diagonal (data power).
pub fn noise_plus_interference_with(
    p_hat: &DMatrix<Complex64>,
    p: &DMatrix<Complex64>,
    nq_cov_diag: &DVector<f64>,
    cfg: &ValidatedConfig,
    user: usize,
) -> f64 {
    let eta = cfg.eta();
    let ph = p_hat.column(user);
    let norm2 = ph.norm_squared();
    let rf = eta * eta * cfg.rf_noise_var() * norm2;
    let thermal = eta * eta * norm2;
    let quant: f64 = ph.iter().zip(nq_cov_diag.iter()).map(|(v, c)| v.norm_sqr() * c).sum();
    let interference: f64 = (0..p.ncols())
        .filter(|&k| k != user)
        .map(|k| ph.dotc(&p.column(k)).norm_sqr())
        .sum();
    rf + thermal + quant + eta * eta * cfg.data_power() * interference
}

/// Noise-plus-interference power `I_G` seen by user `n` after MRC.
pub fn noise_plus_interference(
    p_hat: &DMatrix<Complex64>,
    p: &DMatrix<Complex64>,
    cfg: &ValidatedConfig,
    user: usize,
) -> f64 {
    let nq = aqnm_noise_cov_effective(p, cfg.data_power(), cfg);
    noise_plus_interference_with(p_hat, p, &nq, cfg, user)
}

fn sinr_with(
    p_hat: &DMatrix<Complex64>,
    p: &DMatrix<Complex64>,
    nq: &DVector<f64>,
    cfg: &ValidatedConfig,
    user: usize,
) -> f64 {
    let ph = p_hat.column(user);
    if ph.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
        return 0.0;
    }
    let eta = cfg.eta();
    let signal = cfg.data_power() * eta * eta * ph.dotc(&p.column(user)).norm_sqr();
    signal / noise_plus_interference_with(p_hat, p, nq, cfg, user)
}

/// Instantaneous SINR of user `n`; zero when its estimate vanishes.
pub fn instantaneous_sinr(
    p_hat: &DMatrix<Complex64>,
    p: &DMatrix<Complex64>,
    cfg: &ValidatedConfig,
    user: usize,
) -> f64 {
    let nq = aqnm_noise_cov_effective(p, cfg.data_power(), cfg);
    sinr_with(p_hat, p, &nq, cfg, user)
}

/// `log2(1 + SINR_n)` for every user on one realization.
pub fn instantaneous_rates(p_hat: &DMatrix<Complex64>, p: &DMatrix<Complex64>, cfg: &ValidatedConfig) -> Vec<f64> {
    let nq = aqnm_noise_cov_effective(p, cfg.data_power(), cfg);
    (0..p.ncols())
        .map(|n| (1.0 + sinr_with(p_hat, p, &nq, cfg, n)).log2())
        .collect()
}

/// Empirical statistics of the MRC output of one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolLevelStats {
    /// `rho_u eta^2 |p_hat_n^H p_n|^2`.
    pub signal_power: f64,
    /// Mean of `|r_n - eta sqrt(rho_u) p_hat_n^H p_n x_n|^2`.
    pub residual_variance: f64,
    /// Closed-form `I_G` for comparison.
    pub predicted_variance: f64,
    pub sinr: f64,
}

/// Simulates the data phase symbol by symbol on a fixed realization and
/// measures the variance of `xi` directly.
pub fn symbol_level_sinr_oracle<R: Rng, S: Rng>(
    realization: &ChannelRealization,
    p_hat: &DMatrix<Complex64>,
    cfg: &ValidatedConfig,
    trials: u64,
    noise: &mut NoiseSources<R>,
    symbols: &mut S,
) -> Result<Vec<SymbolLevelStats>> {
    check_trials(trials, 100)?;
    let k = realization.num_users();
    let eta = cfg.eta();
    let rho = cfg.data_power();
    let nq = aqnm_noise_cov_effective(&realization.p, rho, cfg);
    let gains: Vec<Complex64> = (0..k)
        .map(|n| p_hat.column(n).dotc(&realization.p.column(n)) * (eta * rho.sqrt()))
        .collect();
    let mut residual = vec![0.0; k];
    for _ in 0..trials {
        let x = complex_normal_vector(symbols, k, 1.0);
        let sample = receive(&realization.p, &x, rho, &nq, cfg, noise)?;
        let r = mrc_combine(p_hat, &sample.y_q)?;
        for n in 0..k {
            residual[n] += (r[n] - gains[n] * x[n]).norm_sqr();
        }
    }
    Ok((0..k)
        .map(|n| {
            let residual_variance = residual[n] / trials as f64;
            let signal_power = gains[n].norm_sqr();
            SymbolLevelStats {
                signal_power,
                residual_variance,
                predicted_variance: noise_plus_interference_with(p_hat, &realization.p, &nq, cfg, n),
                sinr: if residual_variance > 0.0 {
                    signal_power / residual_variance
                } else {
                    0.0
                },
            }
        })
        .collect())
}

/// Per-user instantaneous rates for one trial: channel draw, pilot phase,
/// fast LMMSE estimate, then the SINR under data power.
pub fn rate_trial(cfg: &ValidatedConfig, master_seed: u64, trial: u64) -> Result<Vec<f64>> {
    let (realization, p_hat, _) = estimation_trial(cfg, master_seed, trial)?;
    Ok(instantaneous_rates(&p_hat, &realization.p, cfg))
}

/// Aggregates per-trial per-user rates (index order) into a report.
pub fn summarize_rates(per_trial: &[Vec<f64>], per_user_approx: Vec<f64>) -> Result<RateReport> {
    let trials = per_trial.len() as u64;
    check_trials(trials, 2)?;
    let k = per_user_approx.len();
    let mut per_user_mc = Vec::with_capacity(k);
    let mut ci95 = Vec::with_capacity(k);
    for n in 0..k {
        let col: Vec<f64> = per_trial.iter().map(|r| r[n]).collect();
        let s = Summary::from_values(&col)?;
        per_user_mc.push(s.mean);
        ci95.push(s.ci95);
    }
    let sums: Vec<f64> = per_trial.iter().map(|r| r.iter().sum()).collect();
    let sum = Summary::from_values(&sums)?;
    Ok(RateReport {
        sum_mc: sum.mean,
        sum_ci95: sum.ci95,
        sum_approx: per_user_approx.iter().sum(),
        per_user_mc,
        per_user_approx,
        ci95,
        trials,
    })
}

/// Monte Carlo ergodic rate for fixed large-scale fading, next to the
/// closed-form approximation.
pub fn ergodic_rate_mc(
    cfg: &ValidatedConfig,
    trials: u64,
    master_seed: u64,
    threads: Option<usize>,
) -> Result<RateReport> {
    check_trials(trials, 2)?;
    let per_trial = run_trials(trials, threads, |t| rate_trial(cfg, master_seed, t))?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    summarize_rates(&per_trial, rate_approx(cfg))
}

/// Closed-form rate with explicit accuracy coefficients.
pub fn rate_approx_with_alpha(cfg: &ValidatedConfig, alpha: &[f64]) -> Vec<f64> {
    let eta = cfg.eta();
    let rho = cfg.data_power();
    let chi2 = cfg.chi_sq();
    let m = cfg.num_antennas() as f64;
    let sum = cfg.beta_sum();
    cfg.beta()
        .iter()
        .zip(alpha)
        .map(|(&b, &a)| {
            let num = eta * rho * chi2 * b * (a * m + 1.0);
            let d = rho * chi2 * (sum - eta * b) + (1.0 - eta) * a * rho * chi2 * b + cfg.rf_noise_var() + 1.0;
            (1.0 + num / d).log2()
        })
        .collect()
}

/// Closed-form approximation of the ergodic rate of every user.
pub fn rate_approx(cfg: &ValidatedConfig) -> Vec<f64> {
    rate_approx_with_alpha(cfg, &estimation_accuracy(cfg))
}

/// Upper bound with perfect CSI, written in the normalized form whose only
/// hardware-dependent term is `(1 + sigma^2) / (eta rho_u |chi|^2)`.
pub fn rate_perfect_csi_bound(cfg: &ValidatedConfig) -> Vec<f64> {
    let snr = cfg.data_power() * cfg.chi_sq();
    if snr == 0.0 {
        return vec![0.0; cfg.num_users()];
    }
    let eta = cfg.eta();
    let m = cfg.num_antennas() as f64;
    let sum = cfg.beta_sum();
    let noise = (1.0 + cfg.rf_noise_var()) / (eta * snr);
    cfg.beta()
        .iter()
        .map(|&b| {
            let den = sum / eta + (1.0 / eta - 2.0) * b + noise;
            (1.0 + (b + m * b) / den).log2()
        })
        .collect()
}

/// The closed-form rate rearranged so that `eta`, `sigma^2`, `rho_u` and
/// `|chi|` meet in a single denominator term.
pub fn rate_simplified(cfg: &ValidatedConfig) -> Vec<f64> {
    rate_simplified_with_alpha(cfg, &estimation_accuracy(cfg))
}

pub fn rate_simplified_with_alpha(cfg: &ValidatedConfig, alpha: &[f64]) -> Vec<f64> {
    let snr = cfg.data_power() * cfg.chi_sq();
    if snr == 0.0 {
        return vec![0.0; cfg.num_users()];
    }
    let eta = cfg.eta();
    let m = cfg.num_antennas() as f64;
    let sum = cfg.beta_sum();
    let noise = (1.0 + cfg.rf_noise_var()) / (eta * snr);
    cfg.beta()
        .iter()
        .zip(alpha)
        .map(|(&b, &a)| {
            let den = sum / eta + a * b / eta - (1.0 + a) * b + noise;
            (1.0 + b * (a * m + 1.0) / den).log2()
        })
        .collect()
}

/// `E|p_hat_n^H p_n|^2 = M^2 alpha^2 beta^2 |chi|^4 + M alpha beta^2 |chi|^4`.
pub fn signal_moment(cfg: &ValidatedConfig, alpha: &[f64], user: usize) -> f64 {
    let m = cfg.num_antennas() as f64;
    let (a, b, c4) = (alpha[user], cfg.beta()[user], cfg.chi_sq().powi(2));
    m * m * a * a * b * b * c4 + m * a * b * b * c4
}

/// `E sum_{k != n} |p_hat_n^H p_k|^2 = sum_{k != n} M alpha_n beta_k beta_n |chi|^4`.
pub fn cross_moment(cfg: &ValidatedConfig, alpha: &[f64], user: usize) -> f64 {
    let m = cfg.num_antennas() as f64;
    let c4 = cfg.chi_sq().powi(2);
    let bn = cfg.beta()[user];
    cfg.beta()
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != user)
        .map(|(_, bk)| m * alpha[user] * bk * bn * c4)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentCheck {
    pub signal_empirical: f64,
    pub signal_closed: f64,
    pub cross_empirical: f64,
    pub cross_closed: f64,
}

impl MomentCheck {
    pub fn signal_rel_error(&self) -> f64 {
        (self.signal_empirical / self.signal_closed - 1.0).abs()
    }

    pub fn cross_rel_error(&self) -> f64 {
        (self.cross_empirical / self.cross_closed - 1.0).abs()
    }
}

/// Draws estimates and errors from the Gaussian model used for the
/// closed-form rate (`p_hat_k ~ CN(0, |chi|^2 beta_k alpha_k)`,
/// `delta_k ~ CN(0, |chi|^2 beta_k (1 - alpha_k))`, `p_k = p_hat_k + delta_k`,
/// users independent) and estimates the signal and cross moments of `user`.
pub fn gaussian_model_moments<R: Rng + ?Sized>(
    cfg: &ValidatedConfig,
    alpha: &[f64],
    user: usize,
    draws: u64,
    rng: &mut R,
) -> MomentCheck {
    let m = cfg.num_antennas();
    let k = cfg.num_users();
    let chi2 = cfg.chi_sq();
    let (mut signal, mut cross) = (0.0, 0.0);
    for _ in 0..draws {
        let mut p_hat = DMatrix::<Complex64>::zeros(m, k);
        let mut p = DMatrix::<Complex64>::zeros(m, k);
        for j in 0..k {
            let (b, a) = (cfg.beta()[j], alpha[j]);
            for i in 0..m {
                let e = complex_normal(rng, chi2 * b * a);
                let d = complex_normal(rng, chi2 * b * (1.0 - a));
                p_hat[(i, j)] = e;
                p[(i, j)] = e + d;
            }
        }
        let ph = p_hat.column(user);
        signal += ph.dotc(&p.column(user)).norm_sqr();
        cross += (0..k)
            .filter(|&j| j != user)
            .map(|j| ph.dotc(&p.column(j)).norm_sqr())
            .sum::<f64>();
    }
    MomentCheck {
        signal_empirical: signal / draws as f64,
        signal_closed: signal_moment(cfg, alpha, user),
        cross_empirical: cross / draws as f64,
        cross_closed: cross_moment(cfg, alpha, user),
    }
}

/// Moment check on the full pilot/estimation pipeline instead of the
/// Gaussian model.
pub fn pipeline_moments(
    cfg: &ValidatedConfig,
    user: usize,
    trials: u64,
    master_seed: u64,
    threads: Option<usize>,
) -> Result<MomentCheck> {
    let alpha = estimation_accuracy(cfg);
    let per = run_trials(trials, threads, |t| {
        let (ch, p_hat, _) = estimation_trial(cfg, master_seed, t)?;
        let ph = p_hat.column(user);
        let s = ph.dotc(&ch.p.column(user)).norm_sqr();
        let c: f64 = (0..cfg.num_users())
            .filter(|&j| j != user)
            .map(|j| ph.dotc(&ch.p.column(j)).norm_sqr())
            .sum();
        Ok((s, c))
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let n = trials as f64;
    Ok(MomentCheck {
        signal_empirical: per.iter().map(|v| v.0).sum::<f64>() / n,
        signal_closed: signal_moment(cfg, &alpha, user),
        cross_empirical: per.iter().map(|v| v.1).sum::<f64>() / n,
        cross_closed: cross_moment(cfg, &alpha, user),
    })
}

/// Symbol generator for the data phase of trial `trial`.
pub fn symbol_stream(master_seed: u64, trial: u64) -> crate::rng::RandomSource {
    substream(master_seed, trial, StreamTag::Symbols)
}
