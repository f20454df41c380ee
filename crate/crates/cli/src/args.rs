use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qmimo_core::validation::Fault;
use qmimo_core::AdcBits;

/// Environment variable supplying the default output directory.
pub const OUT_DIR_ENV: &str = "QMIMO_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "qmimo",
    version,
    about = "Quantized massive MIMO uplink: estimation MSE, MRC rates, hardware trade-offs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Channel-estimation MSE versus pilot SNR for several ADC resolutions.
    MseSweep(MseSweepArgs),
    /// Uplink sum rate versus the number of antennas.
    RateVsM(RateVsMArgs),
    /// RF scale needed by each ADC resolution to match a reference sum rate.
    Compensation(CompensationArgs),
    /// Run every closed-form versus simulation check and emit a JSON report.
    Validate(ValidateArgs),
}

/// Where the large-scale fading coefficients come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BetaSource {
    /// Redraw the users in every trial.
    Scenario,
    /// Draw the users once from the scenario and keep them fixed.
    Drawn,
    /// Use `large_scale` from the configuration file.
    Config,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON configuration with a `system` block and an optional `scenario` block.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, created if absent.
    #[arg(long, env = OUT_DIR_ENV, default_value = "qmimo-out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    /// Worker threads. Changes speed only, never results.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    /// Data SNR in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub rho_u_db: Option<f64>,
    /// Shadow-fading standard deviation in dB.
    #[arg(long)]
    pub shadow_db: Option<f64>,
    /// RF scale magnitude `|chi|`.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// RF distortion noise variance.
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long, value_enum)]
    pub beta: Option<BetaSource>,
}

#[derive(Debug, Args)]
pub struct MseSweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..), default_value_t = 1000)]
    pub trials: u64,
    /// ADC resolutions, one curve each.
    #[arg(long, value_delimiter = ',', default_value = "1,2,inf")]
    pub bits: Vec<AdcBits>,
    /// Pilot SNR grid in dB, strictly increasing.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "-10,-5,0,5,10,15,20,25,30,35,40"
    )]
    pub rho_p_db: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct RateVsMArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..), default_value_t = 1000)]
    pub trials: u64,
    #[arg(long)]
    pub bits: Option<AdcBits>,
    /// Pilot SNR in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub rho_p_db: Option<f64>,
    /// Antenna counts, strictly increasing.
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256")]
    pub antennas: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct CompensationArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Pilot SNR in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub rho_p_db: Option<f64>,
    /// Reference hardware as `bits:kappa`.
    #[arg(long, value_parser = parse_pair, default_value = "5:0.95")]
    pub reference: (AdcBits, f64),
    /// Resolutions to search a matching RF scale for.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3", conflicts_with = "pairs")]
    pub bits: Vec<AdcBits>,
    /// Explicit `bits:kappa` pairs to compare against the reference instead of searching.
    #[arg(long, value_delimiter = ',', value_parser = parse_pair)]
    pub pairs: Vec<(AdcBits, f64)>,
    #[arg(long, value_delimiter = ',', default_value = "32,48,64,80,96,112,128")]
    pub antennas: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, env = OUT_DIR_ENV, default_value = "qmimo-out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    /// Inject a known defect; the report must then fail.
    #[arg(long, value_enum, hide = true)]
    pub inject_fault: Option<FaultArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FaultArg {
    AlphaScaling,
}

impl From<FaultArg> for Fault {
    fn from(f: FaultArg) -> Self {
        match f {
            FaultArg::AlphaScaling => Fault::AlphaScaling,
        }
    }
}

pub fn parse_pair(s: &str) -> Result<(AdcBits, f64), String> {
    let (bits, kappa) = s
        .split_once(':')
        .ok_or_else(|| format!("expected `bits:kappa`, got `{s}`"))?;
    let kappa: f64 = kappa
        .trim()
        .parse()
        .map_err(|_| format!("invalid RF scale `{kappa}`"))?;
    Ok((bits.parse()?, kappa))
}
