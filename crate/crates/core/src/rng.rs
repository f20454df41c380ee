//! Counter-based random substreams.
//!
//! Every random quantity in a trial comes from a stream addressed by
//! `(master_seed, trial_id, tag)`. The ChaCha key is derived from the seed
//! and trial index; the tag selects the ChaCha stream. Trials can therefore
//! run in any order, on any number of workers, and still reproduce.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type RandomSource = ChaCha8Rng;

/// Which random quantity a stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum StreamTag {
    Channel = 1,
    RfNoise = 2,
    ThermalNoise = 3,
    QuantizationNoise = 4,
    UserDrop = 5,
    Symbols = 6,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn substream(master_seed: u64, trial_id: u64, tag: StreamTag) -> RandomSource {
    substream_raw(master_seed, trial_id, tag as u64)
}

/// Same as [`substream`] with an arbitrary numeric tag.
pub fn substream_raw(master_seed: u64, trial_id: u64, tag: u64) -> RandomSource {
    let mut state = master_seed ^ splitmix64(&mut trial_id.wrapping_add(0xA076_1D64_78BD_642F));
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(tag);
    rng
}

/// One draw from `CN(0, variance)`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

pub fn complex_normal_vector<R: Rng + ?Sized>(rng: &mut R, len: usize, variance: f64) -> DVector<Complex64> {
    DVector::from_fn(len, |_, _| complex_normal(rng, variance))
}

/// `rows x cols` matrix with i.i.d. `CN(0, 1)` entries, filled column-major.
pub fn complex_normal_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| complex_normal(rng, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn deterministic() {
        let mut a = substream(42, 7, StreamTag::Channel);
        let mut b = substream(42, 7, StreamTag::Channel);
        let mut ba = [0u8; 256];
        let mut bb = [0u8; 256];
        a.fill_bytes(&mut ba);
        b.fill_bytes(&mut bb);
        assert_eq!(ba, bb);
    }

    #[test]
    fn distinct_addresses_differ() {
        let first = |s, t, g| substream(s, t, g).next_u64();
        let base = first(1, 0, StreamTag::Channel);
        assert_ne!(base, first(2, 0, StreamTag::Channel));
        assert_ne!(base, first(1, 1, StreamTag::Channel));
        assert_ne!(base, first(1, 0, StreamTag::RfNoise));
    }

    #[test]
    fn distinct_streams_uncorrelated() {
        let n = 1_000_000;
        let mut a = substream(3, 11, StreamTag::ThermalNoise);
        let mut b = substream(3, 11, StreamTag::QuantizationNoise);
        let mut c = substream(3, 12, StreamTag::ThermalNoise);
        let (mut sab, mut sac, mut saa) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let x: f64 = a.sample(StandardNormal);
            let y: f64 = b.sample(StandardNormal);
            let z: f64 = c.sample(StandardNormal);
            sab += x * y;
            sac += x * z;
            saa += x * x;
        }
        assert!((sab / saa).abs() < 0.01);
        assert!((sac / saa).abs() < 0.01);
    }

    #[test]
    fn complex_normal_variance() {
        let mut rng = substream(5, 0, StreamTag::Channel);
        let n = 200_000;
        let v = 2.5;
        let (mut p, mut re2, mut mean) = (0.0, 0.0, Complex64::new(0.0, 0.0));
        for _ in 0..n {
            let z = complex_normal(&mut rng, v);
            p += z.norm_sqr();
            re2 += z.re * z.re;
            mean += z;
        }
        let n = n as f64;
        assert!((p / n / v - 1.0).abs() < 0.01);
        assert!((re2 / n / (v / 2.0) - 1.0).abs() < 0.015);
        assert!((mean / n).norm() < 0.01);
    }
}
