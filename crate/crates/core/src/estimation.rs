//! Pilot training and LMMSE estimation of the effective channel `P`.
//!
//! Each user sends one column of a `tau`-point DFT matrix. Stacking the `tau`
//! quantized observations gives `Z_q = eta sqrt(rho_p) P Phi^T + noise`, and
//! the LMMSE estimate of `vec(P)` is `C_pz C_z^{-1} vec(Z_q)`.
//!
//! Two routes compute it:
//!
//! * [`lmmse_dense`] builds the `M tau x M tau` covariances literally from the
//!   Kronecker model and solves the system. It is the reference for small
//!   sizes.
//! * [`lmmse_fast`] uses `Phi^H Phi = tau I` and the push-through identity to
//!   reduce the estimator to a matched filter `Z_q conj(Phi)` followed by the
//!   per-user scale `alpha_k / (eta sqrt(rho_p) tau)`.
//!
//! The per-user accuracy
//!
//! ```text
//! alpha_k = eta rho_p tau |chi|^2 beta_k
//!         / (eta rho_p tau |chi|^2 beta_k + (1 - eta) rho_p |chi|^2 sum_i beta_i + sigma^2 + 1)
//! ```
//!
//! determines both the estimate statistics (`p_hat_k ~ CN(0, |chi|^2 beta_k alpha_k I)`)
//! and the normalized MSE `(1/K) sum_k |chi|^2 beta_k (1 - alpha_k)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::channel::{aqnm_noise_cov, draw_channel_for, receive, ChannelRealization, NoiseSources};
use crate::config::ValidatedConfig;
use crate::error::{Error, Result};
use crate::montecarlo::{check_trials, run_trials, Summary};
use crate::rng::{substream, RandomSource, StreamTag};

/// Largest `M * tau` accepted by [`lmmse_dense`].
pub const DENSE_LIMIT: usize = 4096;

/// Pilot matrix and the quantized observations it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBlock {
    /// `tau x K`, column-orthogonal.
    pub phi: DMatrix<Complex64>,
    /// `M x tau`.
    pub z_q: DMatrix<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub p_hat: DMatrix<Complex64>,
    pub alpha: Vec<f64>,
    pub analytic_mse: f64,
}

/// First `k` columns of the unnormalized `tau`-point DFT matrix,
/// `Phi[t, j] = exp(-2 pi i t j / tau)`.
pub fn dft_pilots(tau: usize, k: usize) -> Result<DMatrix<Complex64>> {
    if tau < k || tau == 0 {
        return Err(Error::PilotTooShort {
            pilot_length: tau,
            num_users: k,
        });
    }
    Ok(DMatrix::from_fn(tau, k, |t, j| {
        let idx = (t * j) % tau;
        Complex64::from_polar(1.0, -2.0 * PI * idx as f64 / tau as f64)
    }))
}

/// Transmits the pilots of every user and quantizes the `tau` observations.
/// `C_nq` is evaluated once for the block with the pilot power.
pub fn collect_pilot_block<R: Rng>(
    realization: &ChannelRealization,
    cfg: &ValidatedConfig,
    noise: &mut NoiseSources<R>,
) -> Result<PilotBlock> {
    let tau = cfg.pilot_length();
    let phi = dft_pilots(tau, cfg.num_users())?;
    let rho = cfg.pilot_power();
    let nq = aqnm_noise_cov(&realization.g, rho, cfg);
    let mut z_q = DMatrix::zeros(realization.num_antennas(), tau);
    for t in 0..tau {
        let x: DVector<Complex64> = phi.row(t).transpose();
        let sample = receive(&realization.p, &x, rho, &nq, cfg, noise)?;
        z_q.set_column(t, &sample.y_q);
    }
    Ok(PilotBlock { phi, z_q })
}

/// `(C_pz, C_z)` of `vec(P)` and `vec(Z_q)` assembled literally:
/// `C_p = |chi|^2 D (x) I_M`, `C_zRF = rho_p Phi_bar C_p Phi_bar^H + (1 + sigma^2) I`,
/// `C_z = eta^2 C_zRF + eta (1 - eta) diag(C_zRF)`, `C_pz = eta sqrt(rho_p) C_p Phi_bar^H`.
pub fn pilot_covariances(phi: &DMatrix<Complex64>, cfg: &ValidatedConfig) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let m = cfg.num_antennas();
    let eta = cfg.eta();
    let rho = cfg.pilot_power();
    let phi_bar = phi.kronecker(&DMatrix::<Complex64>::identity(m, m));
    let c_p_diag = DVector::from_fn(m * cfg.num_users(), |i, _| {
        Complex64::from(cfg.chi_sq() * cfg.beta()[i / m])
    });
    let c_p = DMatrix::from_diagonal(&c_p_diag);

    let n = phi_bar.nrows();
    let c_zrf = &phi_bar * &c_p * phi_bar.adjoint() * Complex64::from(rho)
        + DMatrix::<Complex64>::identity(n, n) * Complex64::from(1.0 + cfg.rf_noise_var());
    let diag = DMatrix::from_diagonal(&c_zrf.diagonal().map(|v| Complex64::from(v.re)));
    let c_z = c_zrf * Complex64::from(eta * eta) + diag * Complex64::from(eta * (1.0 - eta));
    let c_pz = c_p * phi_bar.adjoint() * Complex64::from(eta * rho.sqrt());
    (c_pz, c_z)
}

/// Reference LMMSE estimator solving the full `M tau` system.
pub fn lmmse_dense(block: &PilotBlock, cfg: &ValidatedConfig) -> Result<DMatrix<Complex64>> {
    let m = block.z_q.nrows();
    let size = m * block.z_q.ncols();
    if size > DENSE_LIMIT {
        return Err(Error::DenseTooLarge {
            size,
            limit: DENSE_LIMIT,
        });
    }
    let (c_pz, c_z) = pilot_covariances(&block.phi, cfg);
    let z = DVector::from_column_slice(block.z_q.as_slice());
    let chol = c_z.cholesky().ok_or(Error::SingularCovariance)?;
    let p_vec = c_pz * chol.solve(&z);
    Ok(DMatrix::from_column_slice(m, block.phi.ncols(), p_vec.as_slice()))
}

/// `Z_q conj(Phi)`: per-user despread pilot observations.
pub fn matched_filter(block: &PilotBlock) -> DMatrix<Complex64> {
    &block.z_q * block.phi.map(|v| v.conj())
}

/// Per-user scale `alpha_k / (eta sqrt(rho_p) tau)` applied after the matched filter.
pub fn fast_coefficients(cfg: &ValidatedConfig) -> Vec<f64> {
    let rho = cfg.pilot_power();
    if rho == 0.0 {
        return vec![0.0; cfg.num_users()];
    }
    let denom = cfg.eta() * rho.sqrt() * cfg.pilot_length() as f64;
    estimation_accuracy(cfg).into_iter().map(|a| a / denom).collect()
}

/// Structured LMMSE estimator; equal to [`lmmse_dense`] for any size.
pub fn lmmse_fast(block: &PilotBlock, cfg: &ValidatedConfig) -> DMatrix<Complex64> {
    scale_columns(matched_filter(block), &fast_coefficients(cfg))
}

pub(crate) fn scale_columns(mut y: DMatrix<Complex64>, coeffs: &[f64]) -> DMatrix<Complex64> {
    for (k, mut col) in y.column_iter_mut().enumerate() {
        col *= Complex64::from(coeffs[k]);
    }
    y
}

pub fn estimate_channel(block: &PilotBlock, cfg: &ValidatedConfig) -> ChannelEstimate {
    ChannelEstimate {
        p_hat: lmmse_fast(block, cfg),
        alpha: estimation_accuracy(cfg),
        analytic_mse: analytic_mse(cfg),
    }
}

/// Per-user estimation accuracy `alpha_k` in `[0, 1]`.
pub fn estimation_accuracy(cfg: &ValidatedConfig) -> Vec<f64> {
    let eta = cfg.eta();
    let rho = cfg.pilot_power();
    let tau = cfg.pilot_length() as f64;
    let chi2 = cfg.chi_sq();
    let interference = (1.0 - eta) * rho * chi2 * cfg.beta_sum() + cfg.rf_noise_var() + 1.0;
    cfg.beta()
        .iter()
        .map(|&b| {
            let signal = eta * rho * tau * chi2 * b;
            signal / (signal + interference)
        })
        .collect()
}

/// Normalized MSE `E||p_hat - p||^2 / (MK)`.
pub fn analytic_mse(cfg: &ValidatedConfig) -> f64 {
    let alpha = estimation_accuracy(cfg);
    let chi2 = cfg.chi_sq();
    let total: f64 = cfg
        .beta()
        .iter()
        .zip(&alpha)
        .map(|(b, a)| b * chi2 - a * b * chi2)
        .sum();
    total / cfg.num_users() as f64
}

/// High pilot-SNR limit of [`analytic_mse`]; only defined for `tau = K`.
pub fn mse_floor(cfg: &ValidatedConfig) -> Result<f64> {
    let k = cfg.num_users();
    if cfg.pilot_length() != k {
        return Err(Error::FloorUndefined {
            pilot_length: cfg.pilot_length(),
            num_users: k,
        });
    }
    let kf = k as f64;
    let eta = cfg.eta();
    let sum = cfg.beta_sum();
    Ok(cfg
        .beta()
        .iter()
        .filter(|&&b| b > 0.0)
        .map(|&b| {
            // 1/K - eta b / (eta K b + (1 - eta) S), combined over one denominator
            let residual = (1.0 - eta) * sum / (kf * (eta * kf * b + (1.0 - eta) * sum));
            residual * b * cfg.chi_sq()
        })
        .sum())
}

/// One pilot phase: channel draw, pilot block and fast estimate, all from
/// the trial's substreams. The returned noise sources continue where the
/// pilot phase stopped so a data phase can reuse them.
pub fn estimation_trial(
    cfg: &ValidatedConfig,
    master_seed: u64,
    trial: u64,
) -> Result<(ChannelRealization, DMatrix<Complex64>, NoiseSources<RandomSource>)> {
    let mut rng = substream(master_seed, trial, StreamTag::Channel);
    let realization = draw_channel_for(cfg, &mut rng);
    let mut noise = NoiseSources::for_trial(master_seed, trial);
    let block = collect_pilot_block(&realization, cfg, &mut noise)?;
    let p_hat = lmmse_fast(&block, cfg);
    Ok((realization, p_hat, noise))
}

/// `||p_hat - p||^2 / (MK)` for one trial.
pub fn mse_trial(cfg: &ValidatedConfig, master_seed: u64, trial: u64) -> Result<f64> {
    let (realization, p_hat, _) = estimation_trial(cfg, master_seed, trial)?;
    Ok((p_hat - &realization.p).norm_squared() / (cfg.num_antennas() * cfg.num_users()) as f64)
}

/// Monte Carlo normalized MSE with a 95% interval.
pub fn empirical_mse(cfg: &ValidatedConfig, trials: u64, master_seed: u64, threads: Option<usize>) -> Result<Summary> {
    check_trials(trials, 2)?;
    let values = run_trials(trials, threads, |t| mse_trial(cfg, master_seed, t))?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Summary::from_values(&values)
}
