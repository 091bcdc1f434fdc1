//! Extended reals with explicit infinity sentinels.

use std::cmp::Ordering;
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

/// A real number or one of the two infinities.
///
/// Infinite values are never represented by large floats. The derived ordering
/// puts `NegInfinity` below every finite value and `Infinity` above.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum ExtReal {
    NegInfinity,
    Finite(f64),
    Infinity,
}

pub use ExtReal::{Finite, Infinity, NegInfinity};

impl ExtReal {
    /// Maps IEEE infinities onto the sentinels. NaN is passed through as `Finite(NaN)`
    /// and is rejected wherever values are validated.
    pub fn from_f64(x: f64) -> Self {
        if x == f64::INFINITY {
            Infinity
        } else if x == f64::NEG_INFINITY {
            NegInfinity
        } else {
            Finite(x)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Finite(x) if x.is_finite())
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Finite(x) => Some(x),
            _ => None,
        }
    }

    /// IEEE view, for plotting and for arithmetic where infinities are harmless.
    pub fn to_f64(self) -> f64 {
        match self {
            NegInfinity => f64::NEG_INFINITY,
            Finite(x) => x,
            Infinity => f64::INFINITY,
        }
    }

    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.to_f64().total_cmp(&other.to_f64())
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::from_f64(x)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NegInfinity => f.write_str("-inf"),
            Finite(x) => write!(f, "{x}"),
            Infinity => f.write_str("inf"),
        }
    }
}

// JSON form: finite values are plain numbers, infinities are the strings "inf" / "-inf".
impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Finite(x) => s.serialize_f64(*x),
            Infinity => s.serialize_str("inf"),
            NegInfinity => s.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct ExtVisitor;
        impl Visitor<'_> for ExtVisitor {
            type Value = ExtReal;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"+inf\", \"-inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<ExtReal, E> {
                Ok(Finite(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExtReal, E> {
                Ok(Finite(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExtReal, E> {
                Ok(Finite(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtReal, E> {
                match v {
                    "inf" | "+inf" => Ok(Infinity),
                    "-inf" => Ok(NegInfinity),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }
        d.deserialize_any(ExtVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_places_sentinels_at_the_ends() {
        assert!(NegInfinity < Finite(-1e300));
        assert!(Finite(1e308) < Infinity);
        assert!(Finite(1.0) < Finite(2.0));
        assert_eq!(Finite(3.0).min(Infinity), Finite(3.0));
    }

    #[test]
    fn json_tokens() {
        let v = vec![Finite(0.1), Infinity, NegInfinity];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[0.1,"inf","-inf"]"#);
        let back: Vec<ExtReal> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        assert!(serde_json::from_str::<ExtReal>("\"infinity\"").is_err());
    }
}
