//! Signal-to-noise ratio, including the noiseless limit.

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// A signal-to-noise ratio in `(0, inf]`. The noiseless limit serializes as
/// the string `"inf"` so JSON and TOML round-trip it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snr(f64);

impl Snr {
    pub const INFINITE: Snr = Snr(f64::INFINITY);

    pub fn new(value: f64) -> Snr {
        Snr(value)
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// Positive and not NaN (infinity is the noiseless limit and valid).
    pub fn is_valid(self) -> bool {
        self.0 > 0.0
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Noise variance for a given signal variance: `sigma_f^2 / SNR`, zero
    /// in the noiseless limit.
    pub fn noise_variance(self, sigma_f2: f64) -> f64 {
        if self.is_infinite() {
            0.0
        } else {
            sigma_f2 / self.0
        }
    }
}

impl From<f64> for Snr {
    fn from(v: f64) -> Snr {
        Snr(v)
    }
}

/// `None` is the noiseless limit.
impl From<Option<f64>> for Snr {
    fn from(v: Option<f64>) -> Snr {
        v.map_or(Snr::INFINITE, Snr)
    }
}

impl fmt::Display for Snr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl std::str::FromStr for Snr {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "inf" | "infinite" | "none" | "noiseless" => Ok(Snr::INFINITE),
            other => other
                .parse::<f64>()
                .map(Snr)
                .map_err(|_| format!("invalid SNR `{s}`")),
        }
    }
}

impl Serialize for Snr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Snr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Snr, D::Error> {
        struct SnrVisitor;
        impl Visitor<'_> for SnrVisitor {
            type Value = Snr;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a positive number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Snr, E> {
                Ok(Snr(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Snr, E> {
                Ok(Snr(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Snr, E> {
                Ok(Snr(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Snr, E> {
                v.parse().map_err(de::Error::custom)
            }
        }
        deserializer.deserialize_any(SnrVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_serde_round_trip() {
        let finite = Snr::new(10.0);
        let json = serde_json::to_string(&finite).unwrap();
        assert_eq!(json, "10.0");
        assert_eq!(serde_json::from_str::<Snr>(&json).unwrap(), finite);

        let inf = Snr::INFINITE;
        let json = serde_json::to_string(&inf).unwrap();
        assert_eq!(json, "\"inf\"");
        assert_eq!(serde_json::from_str::<Snr>(&json).unwrap(), inf);

        assert_eq!("0.5".parse::<Snr>().unwrap(), Snr::new(0.5));
        assert!(Snr::new(-1.0).is_valid() == false);
        assert!(Snr::INFINITE.is_valid());
    }

    #[test]
    fn noise_variance_scales() {
        assert_eq!(Snr::new(10.0).noise_variance(5.0), 0.5);
        assert_eq!(Snr::INFINITE.noise_variance(5.0), 0.0);
    }
}
