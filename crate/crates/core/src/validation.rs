//! Self-check suite: every closed form against its independent route.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::channel::{aqnm_noise_cov, draw_channel_for, receive, rf_frontend_output, NoiseSources};
use crate::config::{db_to_linear, SystemConfig, ValidatedConfig};
use crate::error::Result;
use crate::estimation::{
    analytic_mse, collect_pilot_block, empirical_mse, estimation_accuracy, estimation_trial, fast_coefficients,
    lmmse_dense, matched_filter, mse_floor, scale_columns,
};
use crate::quantization::{quantization_params, AdcBits, MU_TABLE};
use crate::rate::{
    gaussian_model_moments, rate_approx, rate_approx_with_alpha, rate_perfect_csi_bound, rate_simplified,
    symbol_level_sinr_oracle, symbol_stream,
};
use crate::rng::{complex_normal_vector, substream, RandomSource, StreamTag};

/// Deliberate defects for checking that the suite can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Drop the `1/tau` in the fast estimator scale.
    AlphaScaling,
}

#[derive(Debug, Clone)]
pub struct ValidationOptions {
    pub seed: u64,
    pub threads: Option<usize>,
    pub fault: Option<Fault>,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            seed: 2024,
            threads: None,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub description: &'static str,
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub fault: Option<Fault>,
    pub all_passed: bool,
    pub checks: Vec<CheckResult>,
}

fn check(name: &'static str, description: &'static str, deviation: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        name,
        description,
        deviation,
        tolerance,
        passed: deviation.is_finite() && deviation <= tolerance,
    }
}

/// Random small configuration with `M <= max_m`, `K <= max_k`, `K <= tau <= max_tau`.
pub fn random_config<R: Rng + ?Sized>(rng: &mut R, max_m: usize, max_k: usize, max_tau: usize) -> ValidatedConfig {
    let k = rng.random_range(1..=max_k);
    let tau = rng.random_range(k..=max_tau.max(k));
    let bits = if rng.random_bool(0.1) {
        AdcBits::Infinite
    } else {
        AdcBits::Finite(rng.random_range(1..=8))
    };
    SystemConfig {
        num_antennas: rng.random_range(1..=max_m),
        num_users: k,
        pilot_length: tau,
        adc_bits: bits,
        rf_scale_magnitude: rng.random_range(0.05..=1.0),
        rf_phase: rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        rf_noise_var: rng.random_range(0.0..2.0),
        pilot_power: db_to_linear(rng.random_range(-20.0..40.0)),
        data_power: db_to_linear(rng.random_range(-20.0..40.0)),
        large_scale: (0..k).map(|_| db_to_linear(rng.random_range(-40.0..5.0))).collect(),
    }
    .validate()
    .expect("random config is valid by construction")
}

/// Configuration used by the statistical checks.
pub fn reference_config() -> ValidatedConfig {
    SystemConfig {
        adc_bits: AdcBits::Finite(2),
        rf_scale_magnitude: 0.9,
        rf_phase: 0.5,
        rf_noise_var: 0.1,
        pilot_power: 10.0,
        data_power: 10.0,
        ..SystemConfig::new(32, 10)
    }
    .validate()
    .expect("reference config is valid")
}

fn rel_frob(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let scale = b.norm();
    if scale == 0.0 {
        a.norm()
    } else {
        (a - b).norm() / scale
    }
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| if *y == 0.0 { x.abs() } else { ((x - y) / y).abs() })
        .fold(0.0, f64::max)
}

fn mu_lookup() -> CheckResult {
    let dev = (1..=5u32)
        .map(|b| (quantization_params(AdcBits::Finite(b)).unwrap().mu - MU_TABLE[b as usize - 1]).abs())
        .fold(0.0, f64::max);
    check("mu_lookup", "tabulated mu for b = 1..5 returned bit-exactly", dev, 0.0)
}

fn estimator_equivalence(opts: &ValidationOptions) -> CheckResult {
    let mut rng = substream(opts.seed, 0, StreamTag::Channel);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let cfg = random_config(&mut rng, 8, 4, 8);
        let mut ch_rng = substream(opts.seed, 1000 + i, StreamTag::Channel);
        let ch = draw_channel_for(&cfg, &mut ch_rng);
        let mut noise = NoiseSources::for_trial(opts.seed, 1000 + i);
        let block = collect_pilot_block(&ch, &cfg, &mut noise).expect("valid block");
        let dense = lmmse_dense(&block, &cfg).expect("small instance");
        let mut coeffs = fast_coefficients(&cfg);
        if opts.fault == Some(Fault::AlphaScaling) {
            let tau = cfg.pilot_length() as f64;
            coeffs.iter_mut().for_each(|c| *c *= tau);
        }
        let fast = scale_columns(matched_filter(&block), &coeffs);
        worst = worst.max(rel_frob(&fast, &dense));
    }
    check(
        "lmmse_fast_vs_dense",
        "structured LMMSE equals dense LMMSE on 100 random instances (M<=8, K<=4, tau<=8), relative Frobenius error",
        worst,
        1e-8,
    )
}

fn rate_identities(opts: &ValidationOptions) -> [CheckResult; 2] {
    let mut rng = substream(opts.seed, 1, StreamTag::Channel);
    let (mut simplified, mut bound) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let cfg = random_config(&mut rng, 512, 16, 32);
        simplified = simplified.max(max_rel(&rate_simplified(&cfg), &rate_approx(&cfg)));
        let ones = vec![1.0; cfg.num_users()];
        bound = bound.max(max_rel(
            &rate_perfect_csi_bound(&cfg),
            &rate_approx_with_alpha(&cfg, &ones),
        ));
    }
    [
        check(
            "rate_simplified_identity",
            "simplified rate form equals the closed-form approximation on 1000 random configs, max relative deviation",
            simplified,
            1e-12,
        ),
        check(
            "rate_perfect_csi_identity",
            "closed-form approximation at alpha = 1 equals the perfect-CSI bound on 1000 random configs",
            bound,
            1e-12,
        ),
    ]
}

fn sample_cov(acc: &DMatrix<Complex64>, n: u64) -> DMatrix<Complex64> {
    acc / Complex64::from(n as f64)
}

fn covariance_checks(opts: &ValidationOptions) -> Result<[CheckResult; 2]> {
    let cfg = SystemConfig {
        large_scale: vec![1.0, 0.4],
        ..SystemConfig {
            adc_bits: AdcBits::Finite(1),
            rf_scale_magnitude: 0.85,
            rf_phase: 0.9,
            rf_noise_var: 0.2,
            ..SystemConfig::new(4, 2)
        }
    }
    .validate()?;
    let rho = 5.0;
    let mut rng = substream(opts.seed, 2, StreamTag::Channel);
    let ch = draw_channel_for(&cfg, &mut rng);
    let nq = aqnm_noise_cov(&ch.g, rho, &cfg);
    let mut noise = NoiseSources::for_trial(opts.seed, 2);
    let mut sym = substream(opts.seed, 2, StreamTag::Symbols);
    let n = 100_000u64;
    let (mut acc_rf, mut acc_q) = (DMatrix::zeros(4, 4), DMatrix::zeros(4, 4));
    for _ in 0..n {
        let x = complex_normal_vector(&mut sym, 2, 1.0);
        let s = receive(&ch.p, &x, rho, &nq, &cfg, &mut noise)?;
        acc_rf += &s.y_rf * s.y_rf.adjoint();
        acc_q += &s.y_q * s.y_q.adjoint();
    }
    let cov_rf = &ch.g * ch.g.adjoint() * Complex64::from(rho * cfg.chi_sq())
        + DMatrix::identity(4, 4) * Complex64::from(1.0 + cfg.rf_noise_var());
    let cov_q = &cov_rf * Complex64::from(cfg.eta().powi(2)) + DMatrix::from_diagonal(&nq.map(Complex64::from));
    Ok([
        check(
            "rf_output_covariance",
            "sample covariance of y_RF over 1e5 draws vs rho |chi|^2 G G^H + (1 + sigma^2) I, relative Frobenius",
            rel_frob(&sample_cov(&acc_rf, n), &cov_rf),
            0.03,
        ),
        check(
            "quantized_output_covariance",
            "sample covariance of y_q over 1e5 draws vs eta^2 Cov(y_RF) + C_nq, relative Frobenius",
            rel_frob(&sample_cov(&acc_q, n), &cov_q),
            0.03,
        ),
    ])
}

fn mse_checks(opts: &ValidationOptions) -> Result<[CheckResult; 2]> {
    let cfg = reference_config();
    let s = empirical_mse(&cfg, 10_000, opts.seed, opts.threads)?;
    let want = analytic_mse(&cfg);
    let high = SystemConfig {
        pilot_power: 1e8,
        ..cfg.raw().clone()
    }
    .validate()?;
    let floor = mse_floor(&high)?;
    Ok([
        check(
            "empirical_mse",
            "Monte Carlo MSE over 1e4 trials vs closed-form MSE, relative",
            (s.mean / want - 1.0).abs(),
            0.02,
        ),
        check(
            "mse_floor_limit",
            "closed-form MSE at rho_p = 1e8 vs the error floor, relative",
            (analytic_mse(&high) / floor - 1.0).abs(),
            1e-4,
        ),
    ])
}

fn moment_checks(opts: &ValidationOptions) -> [CheckResult; 2] {
    let cfg = reference_config();
    let alpha = estimation_accuracy(&cfg);
    let mut rng = substream(opts.seed, 3, StreamTag::Channel);
    let m = gaussian_model_moments(&cfg, &alpha, 0, 100_000, &mut rng);
    [
        check(
            "signal_moment",
            "E|p_hat_n^H p_n|^2 over 1e5 draws vs M^2 a^2 b^2 |chi|^4 + M a b^2 |chi|^4, relative",
            m.signal_rel_error(),
            0.02,
        ),
        check(
            "cross_moment",
            "E sum_{k!=n} |p_hat_n^H p_k|^2 over 1e5 draws vs sum_{k!=n} M a_n b_k b_n |chi|^4, relative",
            m.cross_rel_error(),
            0.02,
        ),
    ]
}

fn symbol_check(opts: &ValidationOptions) -> Result<CheckResult> {
    let cfg = reference_config();
    let (ch, p_hat, mut noise) = estimation_trial(&cfg, opts.seed, 4)?;
    let mut sym = symbol_stream(opts.seed, 4);
    let stats = symbol_level_sinr_oracle(&ch, &p_hat, &cfg, 100_000, &mut noise, &mut sym)?;
    let dev = stats
        .iter()
        .map(|s| (s.residual_variance / s.predicted_variance - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(check(
        "symbol_level_xi_variance",
        "residual MRC variance over 1e5 symbols vs noise-plus-interference power, worst user, relative",
        dev,
        0.02,
    ))
}

fn thermal_only_check(opts: &ValidationOptions) -> Result<CheckResult> {
    let cfg = SystemConfig::new(3, 1).validate()?;
    let mut noise = NoiseSources::<RandomSource>::for_trial(opts.seed, 5);
    let p = DMatrix::zeros(3, 1);
    let x = DVector::zeros(1);
    let n = 50_000u64;
    let mut acc = DMatrix::zeros(3, 3);
    for _ in 0..n {
        let y = rf_frontend_output(&p, &x, 1.0, cfg.rf_noise_var(), &mut noise)?;
        acc += &y * y.adjoint();
    }
    Ok(check(
        "thermal_noise_covariance",
        "silent users, ideal RF: y_RF covariance vs identity, relative Frobenius",
        rel_frob(&sample_cov(&acc, n), &DMatrix::identity(3, 3)),
        0.03,
    ))
}

/// Runs all checks. Check failures are reported in the result; `Err` means
/// the suite itself could not run.
pub fn run_validation(opts: &ValidationOptions) -> Result<ValidationReport> {
    let mut checks = vec![mu_lookup(), estimator_equivalence(opts)];
    checks.extend(rate_identities(opts));
    checks.extend(covariance_checks(opts)?);
    checks.push(thermal_only_check(opts)?);
    checks.extend(mse_checks(opts)?);
    checks.extend(moment_checks(opts));
    checks.push(symbol_check(opts)?);
    Ok(ValidationReport {
        seed: opts.seed,
        fault: opts.fault,
        all_passed: checks.iter().all(|c| c.passed),
        checks,
    })
}
