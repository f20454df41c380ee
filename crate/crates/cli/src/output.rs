//! CSV serialization and companion gnuplot scripts.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Float with 17 significant digits, enough to round-trip any `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

/// In-memory CSV table with a fixed header.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("writing to memory");
        Self { writer }
    }

    pub fn push<I, S>(&mut self, record: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(record).expect("writing to memory");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory writer never fails")
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))
}

pub fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    Ok(path)
}

const PREAMBLE: &str =
    "set datafile separator ','\nset terminal pngcairo size 900,650\nset grid\nset key left bottom\n";

pub fn mse_plot(csv: &str, curves: &[String]) -> String {
    let list = curves.join(" ");
    format!(
        "{PREAMBLE}set output 'mse_sweep.png'\n\
         set logscale y\n\
         set xlabel 'pilot SNR (dB)'\n\
         set ylabel 'MSE'\n\
         plot for [b in \"{list}\"] '{csv}' skip 1 using 1:(strcol(2) eq b ? $5 : 1/0) with lines title 'analytic b='.b, \\\n\
         \x20    for [b in \"{list}\"] '{csv}' skip 1 using 1:(strcol(2) eq b ? $7 : 1/0):8 with yerrorbars title 'simulated b='.b, \\\n\
         \x20    for [b in \"{list}\"] '{csv}' skip 1 using 1:(strcol(2) eq b ? $6 : 1/0) with lines dashtype 2 title 'floor b='.b\n"
    )
}

pub fn rate_plot(csv: &str) -> String {
    format!(
        "{PREAMBLE}set output 'rate_vs_m.png'\n\
         set xlabel 'antennas M'\n\
         set ylabel 'sum rate (bit/s/Hz)'\n\
         plot '{csv}' skip 1 using 1:2:5 with yerrorbars title 'simulated', \\\n\
         \x20    '' skip 1 using 1:3 with lines title 'approximation', \\\n\
         \x20    '' skip 1 using 1:4 with lines title 'perfect CSI', \\\n\
         \x20    '' skip 1 using 1:8 with lines title 'perfect hardware'\n"
    )
}

pub fn compensation_plot(csv: &str) -> String {
    format!(
        "{PREAMBLE}set output 'compensation.png'\n\
         set xlabel 'antennas M'\n\
         set ylabel 'sum rate (bit/s/Hz)'\n\
         plot for [b in \"1 2 3 4 5 6 7 8 inf\"] '{csv}' skip 1 \\\n\
         \x20    using 4:((strcol(1) eq b && strcol(3) ne 'unreachable') ? $5 : 1/0) with linespoints title 'b='.b\n"
    )
}
