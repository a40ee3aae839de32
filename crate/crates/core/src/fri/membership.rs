//! Trapezoidal fuzzy sets.

use serde::{Deserialize, Serialize};

use super::FriError;

/// Trapezoid `(support_low, core_low, core_high, support_high)`. Outer
/// bounds may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzySet {
    #[serde(with = "extended")]
    pub support_low: f64,
    #[serde(with = "extended")]
    pub core_low: f64,
    #[serde(with = "extended")]
    pub core_high: f64,
    #[serde(with = "extended")]
    pub support_high: f64,
}

impl FuzzySet {
    pub fn new(support_low: f64, core_low: f64, core_high: f64, support_high: f64) -> Option<Self> {
        let ordered = support_low <= core_low && core_low <= core_high && core_high <= support_high;
        ordered.then_some(Self {
            support_low,
            core_low,
            core_high,
            support_high,
        })
    }

    /// A set whose support equals its core.
    pub fn crisp(low: f64, high: f64) -> Self {
        Self {
            support_low: low,
            core_low: low,
            core_high: high,
            support_high: high,
        }
    }

    pub fn membership(&self, x: f64) -> f64 {
        trapezoid_membership(self, x)
    }
}

pub fn trapezoid_membership(set: &FuzzySet, x: f64) -> f64 {
    if x >= set.core_low && x <= set.core_high {
        1.0
    } else if x > set.support_low && x < set.core_low {
        ((x - set.support_low) / (set.core_low - set.support_low)).clamp(0.0, 1.0)
    } else if x > set.core_high && x < set.support_high {
        ((set.support_high - x) / (set.support_high - set.core_high)).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Share of membership mass on positive instances.
pub fn purity(positive: f64, negative: f64) -> Result<f64, FriError> {
    let total = positive + negative;
    if total > 0.0 {
        Ok(positive / total)
    } else {
        Err(FriError::UndefinedPurity)
    }
}

/// JSON has no infinities; store them as the strings "-inf" / "inf".
mod extended {
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(de::Error::custom(format!("expected a number, got `{other}`"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_and_core() {
        let s = FuzzySet::new(0.0, 2.0, 4.0, 6.0).unwrap();
        assert_eq!(s.membership(1.0), 0.5);
        assert_eq!(s.membership(3.0), 1.0);
        assert_eq!(s.membership(5.5), 0.25);
        assert_eq!(s.membership(7.0), 0.0);
        assert_eq!(s.membership(0.0), 0.0);
    }

    #[test]
    fn infinite_bounds() {
        let s = FuzzySet::new(f64::NEG_INFINITY, f64::NEG_INFINITY, 3.0, 5.0).unwrap();
        assert_eq!(s.membership(-1e300), 1.0);
        assert_eq!(s.membership(4.0), 0.5);
    }

    #[test]
    fn disorder_rejected() {
        assert!(FuzzySet::new(1.0, 0.0, 2.0, 3.0).is_none());
    }

    #[test]
    fn purity_examples() {
        assert_eq!(purity(3.0, 1.0), Ok(0.75));
        assert_eq!(purity(2.0, 0.0), Ok(1.0));
        assert_eq!(purity(1.0 + 0.5, 0.5), Ok(0.75));
        assert_eq!(purity(0.0, 0.0), Err(FriError::UndefinedPurity));
    }

    #[test]
    fn json_round_trip_with_infinities() {
        let s = FuzzySet::new(f64::NEG_INFINITY, 1.0, 2.0, f64::INFINITY).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"-inf\""));
        assert_eq!(serde_json::from_str::<FuzzySet>(&text).unwrap(), s);
    }
}
