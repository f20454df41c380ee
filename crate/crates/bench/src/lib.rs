//! Shared fixtures for the benchmarks.

use qmimo_core::channel::draw_channel_for;
use qmimo_core::estimation::collect_pilot_block;
use qmimo_core::rng::substream;
use qmimo_core::{AdcBits, NoiseSources, PilotBlock, StreamTag, SystemConfig, ValidatedConfig};

/// 2-bit ADCs, `|chi| = 0.9`, `sigma^2 = 0.1`, unit fading, `tau = K`.
pub fn impaired(m: usize, k: usize) -> ValidatedConfig {
    SystemConfig {
        adc_bits: AdcBits::Finite(2),
        rf_scale_magnitude: 0.9,
        rf_noise_var: 0.1,
        ..SystemConfig::new(m, k)
    }
    .validate()
    .expect("fixture config is valid")
}

/// One pilot block for `cfg`, fixed by `seed`.
pub fn pilot_block(cfg: &ValidatedConfig, seed: u64) -> PilotBlock {
    let ch = draw_channel_for(cfg, &mut substream(seed, 0, StreamTag::Channel));
    collect_pilot_block(&ch, cfg, &mut NoiseSources::for_trial(seed, 0)).expect("fixture block")
}
