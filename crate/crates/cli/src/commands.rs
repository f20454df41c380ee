use std::fs;

use qmimo_core::compensation::{match_rf_scale, sum_rate_curve, CompensationOutcome, MATCH_TOLERANCE};
use qmimo_core::engine::{
    fixed_drop, run_sweep, trial_drop, METRIC_ERROR, METRIC_MSE, METRIC_MSE_FLOOR, METRIC_SUM_RATE,
    METRIC_SUM_RATE_PERFECT_CSI,
};
use qmimo_core::rate::rate_approx;
use qmimo_core::validation::{run_validation, ValidationOptions};
use qmimo_core::{
    db_to_linear, AdcBits, Axis, BetaMode, ExperimentConfig, Metric, ScenarioSpec, SweepResult, SweepSpec, SystemConfig,
};

use crate::args::{BetaSource, CommonArgs, CompensationArgs, MseSweepArgs, RateVsMArgs, ValidateArgs};
use crate::error::CliError;
use crate::output::{compensation_plot, ensure_dir, float, mse_plot, opt_float, rate_plot, write_file, Table};

/// Files written and problems that did not prevent writing them.
#[derive(Debug, Default)]
pub struct Outcome {
    pub warnings: Vec<String>,
}

/// Reference setup used when no configuration file is given: ten users
/// dropped in a 900 m cell, 2-bit ADCs, `|chi| = 0.9`, `sigma^2 = 0.1`,
/// 10 dB pilot and data SNR, 64 antennas.
pub fn default_experiment() -> ExperimentConfig {
    let scenario = ScenarioSpec::reference();
    ExperimentConfig {
        system: SystemConfig {
            adc_bits: AdcBits::Finite(2),
            rf_scale_magnitude: 0.9,
            rf_noise_var: 0.1,
            ..SystemConfig::new(64, scenario.num_users)
        },
        scenario: Some(scenario),
    }
}

fn load_experiment(common: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    let mut exp = match &common.config {
        None => default_experiment(),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
    };
    if let Some(db) = common.rho_u_db {
        exp.system.data_power = db_to_linear(db);
    }
    if let Some(k) = common.kappa {
        exp.system.rf_scale_magnitude = k;
    }
    if let Some(s) = common.sigma2 {
        exp.system.rf_noise_var = s;
    }
    if let Some(db) = common.shadow_db {
        exp.scenario
            .as_mut()
            .ok_or_else(|| CliError::Usage("--shadow-db requires a scenario".into()))?
            .shadow_std_db = db;
    }
    Ok(exp)
}

/// Base configuration and fading mode for the requested beta source.
fn resolve_beta(
    exp: &ExperimentConfig,
    source: Option<BetaSource>,
    seed: u64,
) -> Result<(SystemConfig, BetaMode), CliError> {
    let source = source.unwrap_or(if exp.scenario.is_some() {
        BetaSource::Scenario
    } else {
        BetaSource::Config
    });
    let mut system = exp.system.clone();
    if source == BetaSource::Config {
        return Ok((system, BetaMode::Fixed));
    }
    let scenario = exp
        .scenario
        .clone()
        .ok_or_else(|| CliError::Usage("this beta source requires a scenario".into()))?;
    if scenario.num_users != system.num_users {
        return Err(CliError::Usage(format!(
            "scenario has {} users, system has {}",
            scenario.num_users, system.num_users
        )));
    }
    if source == BetaSource::Drawn {
        system.large_scale = fixed_drop(&scenario, seed)?;
        Ok((system, BetaMode::Fixed))
    } else {
        system.large_scale = vec![1.0; system.num_users];
        Ok((system, BetaMode::Scenario(scenario)))
    }
}

fn threads(t: Option<u64>) -> Option<usize> {
    t.map(|t| t as usize)
}

fn point_errors(result: &SweepResult, label: &str, warnings: &mut Vec<String>) {
    for row in result.rows.iter().filter(|r| r.metric == METRIC_ERROR) {
        warnings.push(format!(
            "{label}, {} = {}: {}",
            result.axis,
            row.axis_value,
            row.error.as_deref().unwrap_or("failed")
        ));
    }
}

pub fn mse_sweep(args: &MseSweepArgs) -> Result<Outcome, CliError> {
    let common = &args.common;
    let exp = load_experiment(common)?;
    let (system, mode) = resolve_beta(&exp, common.beta, common.seed)?;
    ensure_dir(&common.out)?;

    let mut table = Table::new(&[
        "rho_p_db",
        "bits",
        "kappa",
        "sigma2",
        "mse_analytic",
        "mse_floor",
        "mse_mc",
        "ci95",
        "trials",
        "seed",
    ]);
    let mut outcome = Outcome::default();
    for &bits in &args.bits {
        let spec = SweepSpec {
            base_config: SystemConfig {
                adc_bits: bits,
                ..system.clone()
            },
            axis: Axis::PilotPowerDb,
            values: args.rho_p_db.clone(),
            trials: args.trials,
            master_seed: common.seed,
            mode: mode.clone(),
            metrics: vec![Metric::Mse],
        };
        let result = run_sweep(&spec, threads(common.threads))?;
        point_errors(&result, &format!("b = {bits}"), &mut outcome.warnings);
        for &rho in &args.rho_p_db {
            let mse = result.row(rho, METRIC_MSE);
            let floor = result.row(rho, METRIC_MSE_FLOOR).and_then(|r| r.analytic);
            table.push([
                float(rho),
                bits.to_string(),
                float(system.rf_scale_magnitude),
                float(system.rf_noise_var),
                opt_float(mse.and_then(|r| r.analytic)),
                opt_float(floor),
                opt_float(mse.and_then(|r| r.mc)),
                opt_float(mse.and_then(|r| r.ci95)),
                args.trials.to_string(),
                common.seed.to_string(),
            ]);
        }
        eprintln!("mse-sweep: b = {bits}, {} points", args.rho_p_db.len());
    }

    write_file(&common.out, "mse_sweep.csv", &table.into_bytes())?;
    let curves: Vec<String> = args.bits.iter().map(|b| b.to_string()).collect();
    write_file(
        &common.out,
        "mse_sweep.gp",
        mse_plot("mse_sweep.csv", &curves).as_bytes(),
    )?;
    Ok(outcome)
}

/// Closed-form sum rate with ideal converters and RF chain, averaged over
/// the same user drops as the simulation in scenario mode.
fn perfect_hardware_sum_rate(base: &SystemConfig, mode: &BetaMode, trials: u64, seed: u64) -> Result<f64, CliError> {
    let ideal = SystemConfig {
        adc_bits: AdcBits::Infinite,
        rf_scale_magnitude: 1.0,
        rf_phase: 0.0,
        rf_noise_var: 0.0,
        ..base.clone()
    }
    .validate()?;
    Ok(match mode {
        BetaMode::Fixed => rate_approx(&ideal).iter().sum(),
        BetaMode::Scenario(s) => {
            let mut total = 0.0;
            for t in 0..trials {
                total += rate_approx(&ideal.with_beta(trial_drop(s, seed, t)?)?)
                    .iter()
                    .sum::<f64>();
            }
            total / trials as f64
        }
    })
}

pub fn rate_vs_m(args: &RateVsMArgs) -> Result<Outcome, CliError> {
    let common = &args.common;
    let exp = load_experiment(common)?;
    let (mut system, mode) = resolve_beta(&exp, common.beta, common.seed)?;
    if let Some(b) = args.bits {
        system.adc_bits = b;
    }
    if let Some(db) = args.rho_p_db {
        system.pilot_power = db_to_linear(db);
    }
    ensure_dir(&common.out)?;

    let spec = SweepSpec {
        base_config: system.clone(),
        axis: Axis::NumAntennas,
        values: args.antennas.iter().map(|&m| m as f64).collect(),
        trials: args.trials,
        master_seed: common.seed,
        mode: mode.clone(),
        metrics: vec![Metric::Rate],
    };
    let result = run_sweep(&spec, threads(common.threads))?;
    let mut outcome = Outcome::default();
    point_errors(&result, "rate-vs-m", &mut outcome.warnings);

    let mut table = Table::new(&[
        "M",
        "rate_mc_sum",
        "rate_approx_sum",
        "rate_perfect_csi_sum",
        "ci95",
        "trials",
        "seed",
        "rate_perfect_hw_sum",
    ]);
    for &m in &args.antennas {
        let rate = result.row(m as f64, METRIC_SUM_RATE);
        let perfect_csi = result
            .row(m as f64, METRIC_SUM_RATE_PERFECT_CSI)
            .and_then(|r| r.analytic);
        let baseline = rate.map(|_| {
            let base = SystemConfig {
                num_antennas: m,
                ..system.clone()
            };
            perfect_hardware_sum_rate(&base, &mode, args.trials, common.seed)
        });
        table.push([
            m.to_string(),
            opt_float(rate.and_then(|r| r.mc)),
            opt_float(rate.and_then(|r| r.analytic)),
            opt_float(perfect_csi),
            opt_float(rate.and_then(|r| r.ci95)),
            args.trials.to_string(),
            common.seed.to_string(),
            opt_float(baseline.transpose()?),
        ]);
    }
    eprintln!("rate-vs-m: {} antenna counts", args.antennas.len());

    write_file(&common.out, "rate_vs_m.csv", &table.into_bytes())?;
    write_file(&common.out, "rate_vs_m.gp", rate_plot("rate_vs_m.csv").as_bytes())?;
    Ok(outcome)
}

pub fn compensation(args: &CompensationArgs) -> Result<Outcome, CliError> {
    let common = &args.common;
    let exp = load_experiment(common)?;
    let source = match common.beta {
        Some(BetaSource::Scenario) => {
            return Err(CliError::Usage(
                "compensation compares closed-form rates and needs fixed fading; use --beta drawn or --beta config"
                    .into(),
            ))
        }
        Some(s) => s,
        None if exp.scenario.is_some() => BetaSource::Drawn,
        None => BetaSource::Config,
    };
    let (mut system, _) = resolve_beta(&exp, Some(source), common.seed)?;
    if let Some(db) = args.rho_p_db {
        system.pilot_power = db_to_linear(db);
    }
    let (ref_bits, ref_kappa) = args.reference;
    let reference = SystemConfig {
        adc_bits: ref_bits,
        rf_scale_magnitude: ref_kappa,
        ..system
    };
    ensure_dir(&common.out)?;

    let mut table = Table::new(&[
        "bits",
        "kappa",
        "status",
        "M",
        "sum_rate",
        "reference_sum_rate",
        "rel_deviation",
        "seed",
    ]);
    let seed = common.seed.to_string();
    let reference_curve = sum_rate_curve(&reference, &args.antennas)?;
    let push_curve = |table: &mut Table, bits: AdcBits, kappa: f64, status: &str, curve: &[f64]| {
        for ((&m, &r), &r_ref) in args.antennas.iter().zip(curve).zip(&reference_curve) {
            table.push([
                bits.to_string(),
                float(kappa),
                status.to_string(),
                m.to_string(),
                float(r),
                float(r_ref),
                float((r - r_ref) / r_ref),
                seed.clone(),
            ]);
        }
    };
    push_curve(&mut table, ref_bits, ref_kappa, "reference", &reference_curve);

    let mut outcome = Outcome::default();
    if args.pairs.is_empty() {
        for &bits in &args.bits {
            match match_rf_scale(&reference, bits, &args.antennas)? {
                CompensationOutcome::Matched(m) => {
                    let status = if m.overlaps() { "matched" } else { "mismatch" };
                    if !m.overlaps() {
                        outcome.warnings.push(format!(
                            "b = {bits}: best |chi| = {} deviates by {:.3}%",
                            m.scale,
                            100.0 * m.max_rel_deviation
                        ));
                    }
                    push_curve(&mut table, bits, m.scale, status, &m.curve);
                }
                CompensationOutcome::Unreachable {
                    best_mean_rate,
                    target_mean_rate,
                    ..
                } => {
                    outcome.warnings.push(format!(
                        "b = {bits}: unreachable, |chi| = 1 gives mean sum rate {best_mean_rate:.4} below target {target_mean_rate:.4}"
                    ));
                    table.push([
                        bits.to_string(),
                        String::new(),
                        "unreachable".into(),
                        String::new(),
                        float(best_mean_rate),
                        float(target_mean_rate),
                        float((best_mean_rate - target_mean_rate) / target_mean_rate),
                        seed.clone(),
                    ]);
                }
            }
        }
    } else {
        for &(bits, kappa) in &args.pairs {
            let curve = sum_rate_curve(
                &SystemConfig {
                    adc_bits: bits,
                    rf_scale_magnitude: kappa,
                    ..reference.clone()
                },
                &args.antennas,
            )?;
            let dev = curve
                .iter()
                .zip(&reference_curve)
                .map(|(c, r)| ((c - r) / r).abs())
                .fold(0.0, f64::max);
            let matched = dev <= MATCH_TOLERANCE;
            if !matched {
                outcome
                    .warnings
                    .push(format!("b = {bits}, |chi| = {kappa}: deviates by {:.3}%", 100.0 * dev));
            }
            push_curve(
                &mut table,
                bits,
                kappa,
                if matched { "matched" } else { "mismatch" },
                &curve,
            );
        }
    }

    write_file(&common.out, "compensation.csv", &table.into_bytes())?;
    write_file(
        &common.out,
        "compensation.gp",
        compensation_plot("compensation.csv").as_bytes(),
    )?;
    Ok(outcome)
}

/// Runs the self-check suite, writes `validation.json` and prints it.
pub fn validate(args: &ValidateArgs) -> Result<Outcome, CliError> {
    let report = run_validation(&ValidationOptions {
        seed: args.seed,
        threads: threads(args.threads),
        fault: args.inject_fault.map(Into::into),
    })?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    ensure_dir(&args.out)?;
    write_file(&args.out, "validation.json", json.as_bytes())?;
    println!("{json}");
    let warnings = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| {
            format!(
                "check {} failed: deviation {:e} > tolerance {:e}",
                c.name, c.deviation, c.tolerance
            )
        })
        .collect();
    Ok(Outcome { warnings })
}
