//! Extended reals for tuning limits and localizations.
//!
//! Values live in `[-inf, +inf]`. JSON encodes finite values as numbers and
//! the infinities as the strings `"inf"` and `"-inf"`, so documents stay
//! valid JSON without IEEE special cases.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// A point of the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    /// Classifies an `f64`, mapping IEEE infinities to the endpoint variants.
    /// NaN is rejected.
    pub fn new(x: f64) -> Result<Self, Error> {
        if x.is_nan() {
            return Err(Error::invalid("extended real cannot be NaN"));
        }
        Ok(if x == f64::INFINITY {
            ExtReal::PosInf
        } else if x == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(x)
        })
    }

    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_infinite(self) -> bool {
        !self.is_finite()
    }

    /// Finite payload, if any.
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    /// Collapses to `f64`, losing the distinction only notation-wise.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    pub fn abs(self) -> ExtReal {
        match self {
            ExtReal::NegInf | ExtReal::PosInf => ExtReal::PosInf,
            ExtReal::Finite(x) => ExtReal::Finite(x.abs()),
        }
    }

    pub fn is_zero(self) -> bool {
        matches!(self, ExtReal::Finite(x) if x == 0.0)
    }

    fn rank(self) -> u8 {
        match self {
            ExtReal::NegInf => 0,
            ExtReal::Finite(_) => 1,
            ExtReal::PosInf => 2,
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.partial_cmp(b),
            _ => self.rank().partial_cmp(&other.rank()),
        }
    }
}

impl From<f64> for ExtReal {
    /// Panics on NaN; use [`ExtReal::new`] for fallible conversion.
    fn from(x: f64) -> Self {
        ExtReal::new(x).expect("NaN is not an extended real")
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::PosInf => write!(f, "inf"),
        }
    }
}

impl FromStr for ExtReal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim() {
            "inf" | "+inf" => Ok(ExtReal::PosInf),
            "-inf" => Ok(ExtReal::NegInf),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("not an extended real: {other:?}")))
                .and_then(ExtReal::new),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => serializer.serialize_f64(*x),
            ExtReal::PosInf => serializer.serialize_str("inf"),
            ExtReal::NegInf => serializer.serialize_str("-inf"),
        }
    }
}

struct ExtRealVisitor;

impl<'de> Visitor<'de> for ExtRealVisitor {
    type Value = ExtReal;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a finite number or the string \"inf\"/\"-inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<ExtReal, E> {
        ExtReal::new(v).map_err(|e| E::custom(e.to_string()))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExtReal, E> {
        Ok(ExtReal::Finite(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExtReal, E> {
        Ok(ExtReal::Finite(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtReal, E> {
        v.parse().map_err(|e: Error| E::custom(e.to_string()))
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(ExtRealVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_puts_infinities_at_the_ends() {
        assert!(ExtReal::NegInf < ExtReal::Finite(-1e300));
        assert!(ExtReal::Finite(1e300) < ExtReal::PosInf);
        assert!(ExtReal::Finite(1.0) < ExtReal::Finite(2.0));
    }

    #[test]
    fn json_round_trip() {
        let v = vec![ExtReal::PosInf, ExtReal::Finite(0.25), ExtReal::NegInf];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"["inf",0.25,"-inf"]"#);
        let back: Vec<ExtReal> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn nan_is_rejected() {
        assert!(ExtReal::new(f64::NAN).is_err());
        assert!(serde_json::from_str::<ExtReal>("\"nan\"").is_err());
    }

    #[test]
    fn integers_parse_as_finite() {
        let x: ExtReal = serde_json::from_str("3").unwrap();
        assert_eq!(x, ExtReal::Finite(3.0));
    }
}
