use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A percentage held in hundredths, rounded half-up from an exact ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Percent(u64);

impl Percent {
    /// `100 * num / den` rounded half-up to two decimals. `den` must be
    /// positive and `num <= den`.
    pub fn ratio(num: usize, den: usize) -> Percent {
        assert!(den > 0, "percentage of an empty population");
        let (num, den) = (num as u64, den as u64);
        Percent((20_000 * num + den) / (2 * den))
    }

    pub fn from_hundredths(hundredths: u64) -> Percent {
        Percent(hundredths)
    }

    pub fn hundredths(self) -> u64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl Serialize for Percent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Percent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if !(0.0..=100.0).contains(&v) {
            return Err(serde::de::Error::custom(format!("percentage {v} out of range")));
        }
        Ok(Percent((v * 100.0).round() as u64))
    }
}
