//! Rayleigh channel, EEVM RF front end and AQNM quantizer.
//!
//! One coherence block sees a fixed channel `G` (`M x K`, entries
//! `h_mk * sqrt(beta_k)`) and a common RF gain `chi`, so the receiver observes
//! the effective channel `P = chi * G`. A transmit vector `x` passes through
//!
//! ```text
//! y_RF = sqrt(rho) * P * x + n_RF + n        n_RF ~ CN(0, sigma^2 I), n ~ CN(0, I)
//! y_q  = eta * y_RF + n_q                    n_q  ~ CN(0, C_nq), drawn independently of y_RF
//! ```
//!
//! `C_nq` is diagonal and conditioned on `G`:
//! `eta (1 - eta) diag(rho |chi|^2 G G^H + (1 + sigma^2) I)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::config::ValidatedConfig;
use crate::error::{Error, Result};
use crate::rng::{complex_normal, complex_normal_matrix, substream, RandomSource, StreamTag};

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Raw channel `G`.
    pub g: DMatrix<Complex64>,
    /// Effective channel `P = chi * G`.
    pub p: DMatrix<Complex64>,
}

impl ChannelRealization {
    pub fn from_raw(g: DMatrix<Complex64>, chi: Complex64) -> Self {
        let p = g.map(|v| chi * v);
        Self { g, p }
    }

    pub fn num_antennas(&self) -> usize {
        self.g.nrows()
    }

    pub fn num_users(&self) -> usize {
        self.g.ncols()
    }
}

/// Draws `G` with `g_mk = h_mk * sqrt(beta_k)`, `h_mk ~ CN(0, 1)`.
pub fn draw_channel<R: Rng + ?Sized>(
    num_antennas: usize,
    beta: &[f64],
    chi: Complex64,
    rng: &mut R,
) -> ChannelRealization {
    let mut g = complex_normal_matrix(rng, num_antennas, beta.len());
    for (k, mut col) in g.column_iter_mut().enumerate() {
        col *= Complex64::from(beta[k].sqrt());
    }
    ChannelRealization::from_raw(g, chi)
}

/// Draws a channel for `cfg` using its large-scale coefficients.
pub fn draw_channel_for<R: Rng + ?Sized>(cfg: &ValidatedConfig, rng: &mut R) -> ChannelRealization {
    draw_channel(cfg.num_antennas(), cfg.beta(), cfg.chi(), rng)
}

/// Enables or disables individual noise terms. Everything is on by default;
/// tests switch terms off to isolate the others.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseSwitches {
    pub rf: bool,
    pub thermal: bool,
    pub quantization: bool,
}

impl Default for NoiseSwitches {
    fn default() -> Self {
        Self {
            rf: true,
            thermal: true,
            quantization: true,
        }
    }
}

impl NoiseSwitches {
    pub fn noiseless() -> Self {
        Self {
            rf: false,
            thermal: false,
            quantization: false,
        }
    }
}

/// Independent generators for the three receiver noise terms.
#[derive(Debug, Clone)]
pub struct NoiseSources<R> {
    pub rf: R,
    pub thermal: R,
    pub quantization: R,
    pub switches: NoiseSwitches,
}

impl NoiseSources<RandomSource> {
    pub fn for_trial(master_seed: u64, trial_id: u64) -> Self {
        Self {
            rf: substream(master_seed, trial_id, StreamTag::RfNoise),
            thermal: substream(master_seed, trial_id, StreamTag::ThermalNoise),
            quantization: substream(master_seed, trial_id, StreamTag::QuantizationNoise),
            switches: NoiseSwitches::default(),
        }
    }

    pub fn with_switches(mut self, switches: NoiseSwitches) -> Self {
        self.switches = switches;
        self
    }
}

/// Output of the RF chains and the quantizer for one transmit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontEndSample {
    pub y_rf: DVector<Complex64>,
    pub y_q: DVector<Complex64>,
    pub nq_cov_diag: DVector<f64>,
}

/// `y_RF = sqrt(rho) * P * x + n_RF + n`.
pub fn rf_frontend_output<R: Rng>(
    p: &DMatrix<Complex64>,
    x: &DVector<Complex64>,
    rho: f64,
    rf_noise_var: f64,
    noise: &mut NoiseSources<R>,
) -> Result<DVector<Complex64>> {
    if x.len() != p.ncols() {
        return Err(Error::DimensionMismatch {
            what: "transmit vector",
            expected: p.ncols(),
            got: x.len(),
        });
    }
    let mut y = p * x * Complex64::from(rho.sqrt());
    if noise.switches.rf && rf_noise_var > 0.0 {
        for v in y.iter_mut() {
            *v += complex_normal(&mut noise.rf, rf_noise_var);
        }
    }
    if noise.switches.thermal {
        for v in y.iter_mut() {
            *v += complex_normal(&mut noise.thermal, 1.0);
        }
    }
    Ok(y)
}

/// Diagonal of `C_nq` from the raw channel `G`.
pub fn aqnm_noise_cov(g: &DMatrix<Complex64>, rho: f64, cfg: &ValidatedConfig) -> DVector<f64> {
    let scale = cfg.eta() * (1.0 - cfg.eta());
    let floor = 1.0 + cfg.rf_noise_var();
    DVector::from_fn(g.nrows(), |m, _| {
        let row_power: f64 = g.row(m).iter().map(|v| v.norm_sqr()).sum();
        scale * (rho * cfg.chi_sq() * row_power + floor)
    })
}

/// Diagonal of `C_nq` from the effective channel, using `|chi|^2 G G^H = P P^H`.
pub fn aqnm_noise_cov_effective(p: &DMatrix<Complex64>, rho: f64, cfg: &ValidatedConfig) -> DVector<f64> {
    let scale = cfg.eta() * (1.0 - cfg.eta());
    let floor = 1.0 + cfg.rf_noise_var();
    DVector::from_fn(p.nrows(), |m, _| {
        let row_power: f64 = p.row(m).iter().map(|v| v.norm_sqr()).sum();
        scale * (rho * row_power + floor)
    })
}

/// `y_q = eta * y_RF + n_q` with independent Gaussian `n_q`.
pub fn quantize_aqnm<R: Rng + ?Sized>(
    y_rf: &DVector<Complex64>,
    nq_cov_diag: &DVector<f64>,
    eta: f64,
    rng: &mut R,
) -> Result<DVector<Complex64>> {
    if nq_cov_diag.len() != y_rf.len() {
        return Err(Error::DimensionMismatch {
            what: "quantization noise covariance",
            expected: y_rf.len(),
            got: nq_cov_diag.len(),
        });
    }
    if let Some((index, &value)) = nq_cov_diag.iter().enumerate().find(|(_, v)| v.is_nan() || **v < 0.0) {
        return Err(Error::NegativeVariance { index, value });
    }
    Ok(DVector::from_fn(y_rf.len(), |m, _| {
        let var = nq_cov_diag[m];
        let scaled = y_rf[m] * eta;
        if var > 0.0 {
            scaled + complex_normal(rng, var)
        } else {
            scaled
        }
    }))
}

/// Runs one transmit vector through RF chains and quantizer with a
/// precomputed `C_nq` diagonal.
pub fn receive<R: Rng>(
    p: &DMatrix<Complex64>,
    x: &DVector<Complex64>,
    rho: f64,
    nq_cov_diag: &DVector<f64>,
    cfg: &ValidatedConfig,
    noise: &mut NoiseSources<R>,
) -> Result<FrontEndSample> {
    let y_rf = rf_frontend_output(p, x, rho, cfg.rf_noise_var(), noise)?;
    let nq_cov_diag = if noise.switches.quantization {
        nq_cov_diag.clone()
    } else {
        DVector::zeros(nq_cov_diag.len())
    };
    let y_q = quantize_aqnm(&y_rf, &nq_cov_diag, cfg.eta(), &mut noise.quantization)?;
    Ok(FrontEndSample { y_rf, y_q, nq_cov_diag })
}
