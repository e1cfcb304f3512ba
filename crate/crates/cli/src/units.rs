//! Unit-suffixed physical quantities.
//!
//! Every dimensional value in a config is written with an explicit suffix
//! and normalized to atomic units when parsed:
//!
//! | dimension  | accepted suffixes |
//! |------------|-------------------|
//! | time       | `au`, `fs`, `as`  |
//! | length     | `au`              |
//! | frequency  | `au`              |
//! | energy     | `au`              |
//! | field      | `au`              |
//! | intensity  | `wpcm2`, `au`     |
//!
//! Angles are bare radians, `<x> rad`, or multiples of pi such as `pi/6`,
//! `3pi/8` or `0.25 pi`.

use std::f64::consts::PI;
use std::fmt;

use kickshift_core::pulse::ATOMIC_UNIT_INTENSITY;
use serde::{Deserialize, Serialize};

/// Attoseconds per atomic unit of time.
pub const ATTOSECONDS_PER_AU: f64 = 24.188_843_265_857;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Time,
    Length,
    Frequency,
    Energy,
    Field,
    Intensity,
}

impl Dimension {
    fn name(self) -> &'static str {
        match self {
            Dimension::Time => "time",
            Dimension::Length => "length",
            Dimension::Frequency => "frequency",
            Dimension::Energy => "energy",
            Dimension::Field => "field",
            Dimension::Intensity => "intensity",
        }
    }

    /// Atomic units per one of `unit`.
    fn scale(self, unit: &str) -> Option<f64> {
        match (self, unit) {
            (_, "au") => Some(1.0),
            (Dimension::Time, "fs") => Some(1000.0 / ATTOSECONDS_PER_AU),
            (Dimension::Time, "as") => Some(1.0 / ATTOSECONDS_PER_AU),
            (Dimension::Intensity, "wpcm2") => Some(1.0 / ATOMIC_UNIT_INTENSITY),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitError(pub String);

impl fmt::Display for UnitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UnitError {}

/// Parse `"<number> <unit>"` into atomic units.
pub fn parse_quantity(text: &str, dimension: Dimension) -> Result<f64, UnitError> {
    let text = text.trim();
    // the unit starts at the first letter that is not an exponent marker
    let bytes = text.as_bytes();
    let split = (0..bytes.len())
        .find(|&i| {
            let c = bytes[i];
            let exponent = matches!(c, b'e' | b'E')
                && i > 0
                && bytes[i - 1].is_ascii_digit()
                && bytes
                    .get(i + 1)
                    .is_some_and(|n| n.is_ascii_digit() || *n == b'+' || *n == b'-');
            (c.is_ascii_alphabetic() && !exponent) || c.is_ascii_whitespace()
        })
        .unwrap_or(bytes.len());
    let (number, unit) = text.split_at(split);
    let unit = unit.trim();
    if unit.is_empty() {
        return Err(UnitError(format!(
            "{} quantity {text:?} needs a unit suffix",
            dimension.name()
        )));
    }
    let value: f64 = number
        .trim()
        .parse()
        .map_err(|_| UnitError(format!("cannot read a number from {text:?}")))?;
    let scale = dimension.scale(unit).ok_or_else(|| {
        UnitError(format!(
            "unit {unit:?} is not a {} unit (in {text:?})",
            dimension.name()
        ))
    })?;
    if !value.is_finite() {
        return Err(UnitError(format!("{text:?} is not finite")));
    }
    Ok(value * scale)
}

/// Parse an angle in radians.
pub fn parse_angle(text: &str) -> Result<f64, UnitError> {
    let t = text.trim();
    let err = || UnitError(format!("cannot read an angle from {text:?}"));
    if let Some(i) = t.find("pi") {
        let (head, tail) = (t[..i].trim(), t[i + 2..].trim());
        let factor = if head.is_empty() {
            1.0
        } else {
            head.parse::<f64>().map_err(|_| err())?
        };
        let divisor = match tail.strip_prefix('/') {
            Some(d) => d.trim().parse::<f64>().map_err(|_| err())?,
            None if tail.is_empty() => 1.0,
            None => return Err(err()),
        };
        return Ok(factor * PI / divisor);
    }
    t.strip_suffix("rad")
        .unwrap_or(t)
        .trim()
        .parse::<f64>()
        .map_err(|_| err())
}

macro_rules! quantity {
    ($(#[$doc:meta])* $name:ident, $dim:expr) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(pub f64);

        impl $name {
            pub fn au(self) -> f64 {
                self.0
            }
        }

        impl TryFrom<String> for $name {
            type Error = UnitError;
            fn try_from(text: String) -> Result<Self, UnitError> {
                parse_quantity(&text, $dim).map($name)
            }
        }

        impl From<$name> for String {
            fn from(q: $name) -> String {
                format!("{:?} au", q.0)
            }
        }
    };
}

quantity!(
    /// Time in atomic units.
    Time,
    Dimension::Time
);
quantity!(
    /// Length in bohr.
    Length,
    Dimension::Length
);
quantity!(
    /// Angular frequency in atomic units.
    Frequency,
    Dimension::Frequency
);
quantity!(
    /// Energy in hartree.
    Energy,
    Dimension::Energy
);
quantity!(
    /// Field strength in atomic units.
    Field,
    Dimension::Field
);

/// Peak intensity, stored in W/cm^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Intensity(pub f64);

impl Intensity {
    pub fn watts_per_cm2(self) -> f64 {
        self.0
    }
}

impl TryFrom<String> for Intensity {
    type Error = UnitError;
    fn try_from(text: String) -> Result<Self, UnitError> {
        parse_quantity(&text, Dimension::Intensity).map(|au| Intensity(au * ATOMIC_UNIT_INTENSITY))
    }
}

impl From<Intensity> for String {
    fn from(q: Intensity) -> String {
        format!("{:?} wpcm2", q.0)
    }
}

/// Angle in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AngleText", into = "f64")]
pub struct Angle(pub f64);

#[derive(Deserialize)]
#[serde(untagged)]
enum AngleText {
    Number(f64),
    Text(String),
}

impl TryFrom<AngleText> for Angle {
    type Error = UnitError;
    fn try_from(value: AngleText) -> Result<Self, UnitError> {
        match value {
            AngleText::Number(x) => Ok(Angle(x)),
            AngleText::Text(t) => parse_angle(&t).map(Angle),
        }
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

pub fn au_to_fs(t: f64) -> f64 {
    t * ATTOSECONDS_PER_AU / 1000.0
}

pub fn au_to_as(t: f64) -> f64 {
    t * ATTOSECONDS_PER_AU
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffixes_normalize_to_atomic_units() {
        assert_eq!(parse_quantity("0.05 au", Dimension::Time).unwrap(), 0.05);
        let t = parse_quantity("12.7as", Dimension::Time).unwrap();
        assert!((t - 12.7 / ATTOSECONDS_PER_AU).abs() < 1e-15);
        let t = parse_quantity("1.3 fs", Dimension::Time).unwrap();
        assert!((au_to_fs(t) - 1.3).abs() < 1e-12);
        let i = parse_quantity("3.50945e16 wpcm2", Dimension::Intensity).unwrap();
        assert!((i - 1.0).abs() < 1e-12);
        assert_eq!(parse_quantity("-5 au", Dimension::Length).unwrap(), -5.0);
    }

    #[test]
    fn missing_or_wrong_units_are_rejected() {
        assert!(parse_quantity("0.05", Dimension::Time).is_err());
        assert!(parse_quantity("5 fs", Dimension::Length).is_err());
        assert!(parse_quantity("1e18 wpcm2", Dimension::Field).is_err());
        assert!(parse_quantity("x au", Dimension::Time).is_err());
    }

    #[test]
    fn angles() {
        assert!((parse_angle("pi/6").unwrap() - PI / 6.0).abs() < 1e-15);
        assert!((parse_angle("3pi/8").unwrap() - 3.0 * PI / 8.0).abs() < 1e-15);
        assert!((parse_angle("0.25 pi").unwrap() - PI / 4.0).abs() < 1e-15);
        assert_eq!(parse_angle("0.3 rad").unwrap(), 0.3);
        assert_eq!(parse_angle("0").unwrap(), 0.0);
        assert!(parse_angle("pi*2").is_err());
    }

    #[test]
    fn quantities_round_trip_through_text() {
        let t: Time = serde_json::from_str("\"50 as\"").unwrap();
        let text: String = t.into();
        let back = Time::try_from(text).unwrap();
        assert_eq!(back, t);
        let i = Intensity::try_from("4.26e18 wpcm2".to_string()).unwrap();
        assert!((i.watts_per_cm2() / 4.26e18 - 1.0).abs() < 1e-12);
    }
}
