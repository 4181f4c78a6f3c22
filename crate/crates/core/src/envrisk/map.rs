use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{fresh, interpolate, risk_increase, EnvFactor, RiskAssessment, RiskConfig, SensorSample};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lat_min: f64,
    pub lon_min: f64,
    pub lat_max: f64,
    pub lon_max: f64,
}

impl BoundingBox {
    pub fn validate(&self) -> Result<()> {
        let b = self;
        let finite = [b.lat_min, b.lon_min, b.lat_max, b.lon_max].iter().all(|v| v.is_finite());
        if !finite || !(b.lat_min < b.lat_max && b.lon_min < b.lon_max) {
            return Err(Error::invalid(format!(
                "bounding box ({}, {}) - ({}, {}) is empty",
                b.lat_min, b.lon_min, b.lat_max, b.lon_max
            )));
        }
        if b.lat_min < -90.0 || b.lat_max > 90.0 || b.lon_min < -180.0 || b.lon_max > 180.0 {
            return Err(Error::invalid("bounding box exceeds valid latitude/longitude ranges"));
        }
        Ok(())
    }

    /// Parses `lat_min,lon_min,lat_max,lon_max`.
    pub fn parse(text: &str) -> Result<Self> {
        let v: Vec<f64> = text
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad bounding box component '{p}'"))))
            .collect::<Result<_>>()?;
        let [lat_min, lon_min, lat_max, lon_max] = v[..] else {
            return Err(Error::invalid("bounding box needs lat_min,lon_min,lat_max,lon_max"));
        };
        let b = BoundingBox { lat_min, lon_min, lat_max, lon_max };
        b.validate()?;
        Ok(b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskCell {
    pub lat: f64,
    pub lon: f64,
    /// `None` when no factor could be interpolated at the cell centre.
    pub assessment: Option<RiskAssessment>,
}

/// Cells in row-major order, rows running south to north and columns west to east.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskGrid {
    pub bbox: BoundingBox,
    pub resolution: usize,
    pub timestamp: i64,
    pub cells: Vec<RiskCell>,
}

/// Risk assessment at the centre of each of `resolution`² cells, using the
/// samples no older than the freshness window before `now`.
pub fn risk_map(
    samples: &[SensorSample],
    config: &RiskConfig,
    bbox: BoundingBox,
    resolution: usize,
    now: i64,
) -> Result<RiskGrid> {
    bbox.validate()?;
    config.validate()?;
    if resolution == 0 {
        return Err(Error::invalid("risk map resolution must be at least 1"));
    }
    let interp = &config.interpolation;
    let current = fresh(samples, now, interp.freshness_h * 3600.0);
    let dlat = (bbox.lat_max - bbox.lat_min) / resolution as f64;
    let dlon = (bbox.lon_max - bbox.lon_min) / resolution as f64;
    let mut cells = Vec::with_capacity(resolution * resolution);
    for row in 0..resolution {
        for col in 0..resolution {
            let lat = bbox.lat_min + (row as f64 + 0.5) * dlat;
            let lon = bbox.lon_min + (col as f64 + 0.5) * dlon;
            let values: BTreeMap<EnvFactor, f64> = EnvFactor::ALL
                .into_iter()
                .filter_map(|f| Some((f, interpolate(&current, f, lat, lon, interp.power, interp.max_radius_km)?)))
                .collect();
            let assessment = if values.is_empty() { None } else { Some(risk_increase(&values, config)?) };
            cells.push(RiskCell { lat, lon, assessment });
        }
    }
    Ok(RiskGrid { bbox, resolution, timestamp: now, cells })
}

impl RiskGrid {
    /// Text form: a `#` metadata line, the column header, then one line per cell.
    pub fn to_text(&self) -> String {
        let b = &self.bbox;
        let mut out = format!(
            "# bbox={},{},{},{} resolution={} timestamp={}\nlat,lon,total_pct,pm25_pct,pm10_pct,no2_pct,temp_pct\n",
            b.lat_min, b.lon_min, b.lat_max, b.lon_max, self.resolution, self.timestamp
        );
        let na = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| v.to_string());
        for c in &self.cells {
            let a = c.assessment.as_ref();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                c.lat,
                c.lon,
                na(a.map(|a| a.total)),
                na(a.and_then(|a| a.contribution(EnvFactor::PM2_5))),
                na(a.and_then(|a| a.contribution(EnvFactor::PM10))),
                na(a.and_then(|a| a.contribution(EnvFactor::NO2))),
                na(a.and_then(|a| a.contribution(EnvFactor::TEMPERATURE))),
            );
        }
        out
    }
}
