//! Uplink simulation of a massive MIMO base station with low-resolution
//! ADCs and impaired RF chains.
//!
//! Quantization follows the additive quantization noise model (AQNM), RF
//! impairments the extended error vector magnitude (EEVM) model. The crate
//! provides the channel and receiver chain, LMMSE estimation of the
//! effective channel, MRC rates, their closed-form counterparts, and a
//! reproducible parallel Monte Carlo engine that checks one against the
//! other.

pub mod channel;
pub mod compensation;
pub mod config;
pub mod engine;
pub mod error;
pub mod estimation;
pub mod montecarlo;
pub mod quantization;
pub mod rate;
pub mod rng;
pub mod scenario;
pub mod validation;

pub use channel::{ChannelRealization, FrontEndSample, NoiseSources, NoiseSwitches};
pub use config::{db_to_linear, linear_to_db, ExperimentConfig, ScenarioSpec, SystemConfig, ValidatedConfig};
pub use engine::{Axis, BetaMode, Metric, SweepResult, SweepRow, SweepSpec};
pub use error::{ConfigError, Error, Result, Violation};
pub use estimation::{ChannelEstimate, PilotBlock};
pub use montecarlo::Summary;
pub use quantization::{AdcBits, QuantizationParams};
pub use rate::RateReport;
pub use rng::{RandomSource, StreamTag};
