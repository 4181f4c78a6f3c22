use serde::{Deserialize, Serialize};

use super::EnvFactor;
use crate::error::{Error, Result};

/// Threshold model for a concentration factor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskFactorSpec {
    /// Safety standard, in the factor's unit.
    pub safety_standard: f64,
    /// Factor units per step.
    pub rate: f64,
    /// Percent risk increase per step.
    pub coefficient: f64,
}

/// Temperature risk grows with the distance outside a comfort band (°F).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperatureSpec {
    pub comfort_center: f64,
    pub comfort_halfwidth: f64,
    pub rate: f64,
    pub coefficient: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterpolationConfig {
    pub power: f64,
    pub max_radius_km: f64,
    /// Samples older than this, relative to the snapshot time, are ignored.
    pub freshness_h: f64,
}

impl Default for InterpolationConfig {
    fn default() -> Self {
        InterpolationConfig { power: 2.0, max_radius_km: 50.0, freshness_h: 24.0 }
    }
}

/// All risk-model constants. Only the NO2 row has an external anchor; the
/// other rows are placeholders meant to be overridden.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskConfig {
    /// Count only whole steps above the threshold instead of fractional ones.
    pub stepwise: bool,
    pub pm2_5: RiskFactorSpec,
    pub pm10: RiskFactorSpec,
    pub no2: RiskFactorSpec,
    pub temperature: TemperatureSpec,
    pub interpolation: InterpolationConfig,
}

impl Default for RiskConfig {
    fn default() -> Self {
        RiskConfig {
            stepwise: false,
            pm2_5: RiskFactorSpec { safety_standard: 12.0, rate: 10.0, coefficient: 1.5 },
            pm10: RiskFactorSpec { safety_standard: 50.0, rate: 10.0, coefficient: 1.0 },
            no2: RiskFactorSpec { safety_standard: 40.0, rate: 10.0, coefficient: 2.0 },
            temperature: TemperatureSpec { comfort_center: 70.0, comfort_halfwidth: 10.0, rate: 10.0, coefficient: 1.0 },
            interpolation: InterpolationConfig::default(),
        }
    }
}

impl RiskConfig {
    /// Threshold spec of a concentration factor; `None` for temperature.
    pub fn spec(&self, factor: EnvFactor) -> Option<&RiskFactorSpec> {
        match factor {
            EnvFactor::PM2_5 => Some(&self.pm2_5),
            EnvFactor::PM10 => Some(&self.pm10),
            EnvFactor::NO2 => Some(&self.no2),
            EnvFactor::TEMPERATURE => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rows = [
            ("pm2_5", self.pm2_5.rate, self.pm2_5.coefficient),
            ("pm10", self.pm10.rate, self.pm10.coefficient),
            ("no2", self.no2.rate, self.no2.coefficient),
            ("temperature", self.temperature.rate, self.temperature.coefficient),
        ];
        for (name, rate, coefficient) in rows {
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(Error::Config(format!("{name}.rate must be positive, got {rate}")));
            }
            if !(coefficient >= 0.0 && coefficient.is_finite()) {
                return Err(Error::Config(format!("{name}.coefficient must be non-negative, got {coefficient}")));
            }
        }
        if self.temperature.comfort_halfwidth.is_nan() || self.temperature.comfort_halfwidth < 0.0 {
            return Err(Error::Config("temperature.comfort_halfwidth must be non-negative".into()));
        }
        let i = &self.interpolation;
        if !(i.power > 0.0 && i.max_radius_km > 0.0 && i.freshness_h > 0.0) {
            return Err(Error::Config("interpolation power, radius and freshness must be positive".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RiskConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("risk config serializes")
    }
}
