//! Environmental exacerbation-risk increase from air-quality sensor snapshots.
//!
//! Each factor contributes `c * max(0, value - s) / r` percent (temperature
//! uses the distance outside a comfort band instead of `value - s`); the
//! total is the sum. Values at arbitrary locations come from inverse-distance
//! weighting of nearby fresh sensors.

mod config;
mod ingest;
mod interp;
mod map;

pub use config::{InterpolationConfig, RiskConfig, RiskFactorSpec, TemperatureSpec};
pub use ingest::{ingest_snapshot, parse_snapshot, Ingested, SourceKind};
pub use interp::{fresh, haversine_km, interpolate, EARTH_RADIUS_KM};
pub use map::{risk_map, BoundingBox, RiskCell, RiskGrid};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum EnvFactor {
    #[serde(rename = "pm2_5")]
    PM2_5,
    #[serde(rename = "pm10")]
    PM10,
    #[serde(rename = "no2")]
    NO2,
    #[serde(rename = "temperature")]
    TEMPERATURE,
}

impl EnvFactor {
    pub const ALL: [EnvFactor; 4] = [EnvFactor::PM2_5, EnvFactor::PM10, EnvFactor::NO2, EnvFactor::TEMPERATURE];

    pub fn name(self) -> &'static str {
        match self {
            EnvFactor::PM2_5 => "PM2_5",
            EnvFactor::PM10 => "PM10",
            EnvFactor::NO2 => "NO2",
            EnvFactor::TEMPERATURE => "TEMPERATURE",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            EnvFactor::TEMPERATURE => "°F",
            _ => "µg/m³",
        }
    }

    /// Concentrations cannot be negative; temperature can.
    pub fn is_concentration(self) -> bool {
        self != EnvFactor::TEMPERATURE
    }
}

impl fmt::Display for EnvFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EnvFactor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace(['.', '-'], "_").as_str() {
            "PM2_5" | "PM25" => Ok(EnvFactor::PM2_5),
            "PM10" => Ok(EnvFactor::PM10),
            "NO2" => Ok(EnvFactor::NO2),
            "TEMPERATURE" | "TEMP" | "T" => Ok(EnvFactor::TEMPERATURE),
            _ => Err(Error::invalid(format!("unknown environmental factor '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorSample {
    pub sensor_id: String,
    pub latitude: f64,
    pub longitude: f64,
    pub factor: EnvFactor,
    pub value: f64,
    /// UTC seconds.
    pub timestamp: i64,
}

impl SensorSample {
    /// Reason the sample violates its invariants, if any.
    pub fn defect(&self) -> Option<String> {
        if !(-90.0..=90.0).contains(&self.latitude) {
            return Some(format!("latitude {} outside [-90, 90]", self.latitude));
        }
        if !(-180.0..=180.0).contains(&self.longitude) {
            return Some(format!("longitude {} outside [-180, 180]", self.longitude));
        }
        if !self.value.is_finite() {
            return Some(format!("{} value {} is not finite", self.factor, self.value));
        }
        if self.factor.is_concentration() && self.value < 0.0 {
            return Some(format!("{} concentration {} is negative", self.factor, self.value));
        }
        None
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskAssessment {
    /// Percent risk increase per factor that had a value.
    pub contributions: BTreeMap<EnvFactor, f64>,
    pub total: f64,
    pub inputs: BTreeMap<EnvFactor, f64>,
}

impl RiskAssessment {
    pub fn contribution(&self, factor: EnvFactor) -> Option<f64> {
        self.contributions.get(&factor).copied()
    }
}

/// Percent risk increase for each supplied factor value and their sum.
pub fn risk_increase(values: &BTreeMap<EnvFactor, f64>, config: &RiskConfig) -> Result<RiskAssessment> {
    let mut contributions = BTreeMap::new();
    for (&factor, &value) in values {
        if !value.is_finite() {
            return Err(Error::invalid(format!("{factor} value {value} is not finite")));
        }
        if factor.is_concentration() && value < 0.0 {
            return Err(Error::invalid(format!("{factor} concentration {value} is negative")));
        }
        let (excess, rate, coefficient) = match config.spec(factor) {
            Some(spec) => (value - spec.safety_standard, spec.rate, spec.coefficient),
            None => {
                let t = &config.temperature;
                ((value - t.comfort_center).abs() - t.comfort_halfwidth, t.rate, t.coefficient)
            }
        };
        let steps = excess.max(0.0) / rate;
        let steps = if config.stepwise { steps.floor() } else { steps };
        contributions.insert(factor, coefficient * steps);
    }
    let total = contributions.values().sum();
    Ok(RiskAssessment { contributions, total, inputs: values.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn values(pairs: &[(EnvFactor, f64)]) -> BTreeMap<EnvFactor, f64> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn no2_anchor() {
        let cfg = RiskConfig::default();
        let r = risk_increase(&values(&[(EnvFactor::NO2, 50.0)]), &cfg).unwrap();
        assert_eq!(r.total, 2.0);
        let r = risk_increase(&values(&[(EnvFactor::NO2, 40.0), (EnvFactor::PM2_5, 3.0)]), &cfg).unwrap();
        assert_eq!(r.total, 0.0);
    }

    #[test]
    fn combined_example() {
        let r = risk_increase(&values(&[(EnvFactor::PM2_5, 37.0), (EnvFactor::NO2, 50.0)]), &RiskConfig::default()).unwrap();
        assert_eq!(r.contribution(EnvFactor::PM2_5), Some(3.75));
        assert_eq!(r.total, 5.75);
    }

    #[test]
    fn temperature_band_is_symmetric() {
        let cfg = RiskConfig::default();
        let hot = risk_increase(&values(&[(EnvFactor::TEMPERATURE, 95.0)]), &cfg).unwrap();
        let cold = risk_increase(&values(&[(EnvFactor::TEMPERATURE, 45.0)]), &cfg).unwrap();
        assert_eq!(hot.total, 1.5);
        assert_eq!(hot.total, cold.total);
        assert_eq!(risk_increase(&values(&[(EnvFactor::TEMPERATURE, 78.0)]), &cfg).unwrap().total, 0.0);
    }

    #[test]
    fn stepwise_floors_partial_steps() {
        let cfg = RiskConfig { stepwise: true, ..Default::default() };
        let r = risk_increase(&values(&[(EnvFactor::NO2, 59.0)]), &cfg).unwrap();
        assert_eq!(r.total, 2.0);
    }

    #[test]
    fn negative_concentration_is_an_error() {
        assert!(risk_increase(&values(&[(EnvFactor::PM10, -1.0)]), &RiskConfig::default()).is_err());
        assert!(risk_increase(&values(&[(EnvFactor::TEMPERATURE, -10.0)]), &RiskConfig::default()).is_ok());
    }

    #[test]
    fn factor_names_parse() {
        for f in EnvFactor::ALL {
            assert_eq!(f.name().parse::<EnvFactor>().unwrap(), f);
        }
        assert_eq!("pm2.5".parse::<EnvFactor>().unwrap(), EnvFactor::PM2_5);
    }
}
