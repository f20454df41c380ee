//! ADC resolution and the AQNM gain.
//!
//! A `b`-bit quantizer is linearized as `y_q = eta * y + n_q` with
//! `eta = 1 - mu`, where `mu` is the inverse signal-to-quantization-noise
//! ratio. For `b <= 5` the tabulated optimal non-uniform quantizer values
//! are used; above that the high-resolution approximation
//! `mu = (pi * sqrt(3) / 2) * 2^(-2b)` applies.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Tabulated `mu` for `b = 1..=5`.
pub const MU_TABLE: [f64; 5] = [0.3634, 0.1175, 0.03454, 0.009497, 0.002499];

/// ADC resolution in bits, or an ideal (unquantized) converter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AdcBits {
    Finite(u32),
    Infinite,
}

/// Quantizer distortion parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationParams {
    pub mu: f64,
    pub eta: f64,
}

pub fn quantization_params(bits: AdcBits) -> Result<QuantizationParams> {
    let mu = match bits {
        AdcBits::Infinite => 0.0,
        AdcBits::Finite(0) => return Err(Error::InvalidAdcBits),
        AdcBits::Finite(b) if b <= 5 => MU_TABLE[(b - 1) as usize],
        AdcBits::Finite(b) => PI * 3f64.sqrt() / 2.0 * 2f64.powi(-2 * b as i32),
    };
    Ok(QuantizationParams { mu, eta: 1.0 - mu })
}

impl AdcBits {
    pub fn is_infinite(self) -> bool {
        matches!(self, AdcBits::Infinite)
    }
}

impl fmt::Display for AdcBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdcBits::Finite(b) => write!(f, "{b}"),
            AdcBits::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for AdcBits {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinite" | "infinity" => Ok(AdcBits::Infinite),
            other => other
                .parse::<u32>()
                .map(AdcBits::Finite)
                .map_err(|_| format!("invalid ADC resolution `{s}` (expected a bit count or `inf`)")),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AdcBitsRepr {
    Bits(u32),
    Named(String),
}

impl Serialize for AdcBits {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            AdcBits::Finite(b) => AdcBitsRepr::Bits(b),
            AdcBits::Infinite => AdcBitsRepr::Named("infinite".into()),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AdcBits {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        match AdcBitsRepr::deserialize(deserializer)? {
            AdcBitsRepr::Bits(b) => Ok(AdcBits::Finite(b)),
            AdcBitsRepr::Named(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
#[allow(clippy::approx_constant)] // eta at one bit is 0.6366
mod tests {
    use super::*;

    #[test]
    fn table_values_are_exact() {
        let expected = [
            (1, 0.3634, 0.6366),
            (2, 0.1175, 0.8825),
            (3, 0.03454, 0.96546),
            (4, 0.009497, 0.990503),
            (5, 0.002499, 0.997501),
        ];
        for (b, mu, eta) in expected {
            let q = quantization_params(AdcBits::Finite(b)).unwrap();
            assert_eq!(q.mu, mu);
            assert!((q.eta - eta).abs() < 1e-15);
        }
    }

    #[test]
    fn six_bits_uses_closed_form() {
        // pi*sqrt(3)/2 * 2^-12, evaluated at 30 digits and rounded.
        let q = quantization_params(AdcBits::Finite(6)).unwrap();
        assert!((q.mu - 0.0006642331656131169).abs() < 1e-18);
    }

    #[test]
    fn ideal_adc() {
        let q = quantization_params(AdcBits::Infinite).unwrap();
        assert_eq!((q.mu, q.eta), (0.0, 1.0));
    }

    #[test]
    fn zero_bits_rejected() {
        assert!(matches!(
            quantization_params(AdcBits::Finite(0)),
            Err(Error::InvalidAdcBits)
        ));
    }

    #[test]
    fn monotone_in_bits() {
        let mut prev = quantization_params(AdcBits::Finite(1)).unwrap();
        for b in 2..=16 {
            let q = quantization_params(AdcBits::Finite(b)).unwrap();
            assert!(q.mu < prev.mu, "mu not decreasing at b={b}");
            assert!(q.eta > prev.eta && q.eta > 0.0 && q.eta <= 1.0);
            prev = q;
        }
        assert!(quantization_params(AdcBits::Infinite).unwrap().eta > prev.eta);
    }

    #[test]
    fn parse_and_serde() {
        assert_eq!("inf".parse::<AdcBits>().unwrap(), AdcBits::Infinite);
        assert_eq!("3".parse::<AdcBits>().unwrap(), AdcBits::Finite(3));
        assert!("x".parse::<AdcBits>().is_err());
        let b: AdcBits = serde_json::from_str("\"infinite\"").unwrap();
        assert_eq!(b, AdcBits::Infinite);
        let b: AdcBits = serde_json::from_str("4").unwrap();
        assert_eq!(b, AdcBits::Finite(4));
        assert_eq!(serde_json::to_string(&AdcBits::Infinite).unwrap(), "\"infinite\"");
    }
}
