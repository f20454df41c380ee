//! Parallel trial execution with index-ordered reduction.

use rayon::prelude::*;
use rayon::ThreadPoolBuilder;

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Runs `trial(i)` for `i in 0..trials` and returns the results in index
/// order. `threads = None` uses the global pool; the output never depends on
/// the worker count as long as `trial` is a pure function of its index.
pub fn run_trials<T, F>(trials: u64, threads: Option<usize>, trial: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let run = || (0..trials).into_par_iter().map(&trial).collect::<Vec<T>>();
    match threads {
        None => Ok(run()),
        Some(n) => {
            let pool = ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::ThreadPool(e.to_string()))?;
            Ok(pool.install(run))
        }
    }
}

/// Sample mean with a normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// Half-width of the 95% confidence interval.
    pub ci95: f64,
    pub std_dev: f64,
    pub count: u64,
}

impl Summary {
    /// Summarizes `values` in slice order. Needs at least two values.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let n = values.len() as u64;
        if n < 2 {
            return Err(Error::TooFewTrials { min: 2, got: n });
        }
        let nf = n as f64;
        let mean = values.iter().sum::<f64>() / nf;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        let std_dev = var.sqrt();
        Ok(Self {
            mean,
            ci95: Z95 * std_dev / nf.sqrt(),
            std_dev,
            count: n,
        })
    }

    pub fn contains(&self, value: f64) -> bool {
        (value - self.mean).abs() <= self.ci95
    }
}

pub fn check_trials(trials: u64, min: u64) -> Result<()> {
    if trials < min {
        Err(Error::TooFewTrials { min, got: trials })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, StreamTag};
    use rand::Rng;

    #[test]
    fn order_preserved_across_pools() {
        let f = |i: u64| {
            let mut r = substream(77, i, StreamTag::Channel);
            r.random::<f64>()
        };
        let a = run_trials(1000, Some(1), f).unwrap();
        let b = run_trials(1000, Some(8), f).unwrap();
        let c = run_trials(1000, None, f).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        let sa = Summary::from_values(&a).unwrap();
        let sb = Summary::from_values(&b).unwrap();
        assert_eq!(sa.mean.to_bits(), sb.mean.to_bits());
    }

    #[test]
    fn summary_values() {
        let s = Summary::from_values(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((s.std_dev - sd).abs() < 1e-15);
        assert!((s.ci95 - Z95 * sd / 2.0).abs() < 1e-15);
        assert!(Summary::from_values(&[1.0]).is_err());
    }

    #[test]
    fn ci_shrinks_with_root_n() {
        let draw = |n: u64| {
            let v = run_trials(n, None, |i| substream(5, i, StreamTag::Symbols).random::<f64>()).unwrap();
            Summary::from_values(&v).unwrap().ci95
        };
        let ratio = draw(4000) / draw(16000);
        assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
    }
}
