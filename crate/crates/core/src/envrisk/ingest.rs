//! Snapshot readers.
//!
//! * `purpleair`: JSON with a `fields` name list and `data` rows, as returned
//!   by the sensors listing endpoint. Recognised fields: `sensor_index`,
//!   `latitude`, `longitude`, `last_seen`, `pm2.5_atm` (or `pm2.5`),
//!   `pm10.0_atm` (or `pm10.0`), `temperature` (°F). Rows without
//!   `last_seen` use the top-level `data_time_stamp` or `time_stamp`.
//! * `waqi`: a feed response `{"status": "ok", "data": {...}}`, or `data` /
//!   the whole document as an array of feed objects. Each has `idx`,
//!   `city.geo` `[lat, lon]`, `time.v` (epoch seconds) and `iaqi` entries
//!   `pm25`, `pm10`, `no2`, `t` (°C, converted to °F), each `{"v": x}`.
//! * `generic`: CSV rows `sensor_id,lat,lon,factor,value,timestamp`, with an
//!   optional header row.

use std::path::Path;

use serde_json::Value;

use super::{EnvFactor, SensorSample};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceKind {
    PurpleAir,
    Waqi,
    Generic,
}

impl std::str::FromStr for SourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "purpleair" => Ok(SourceKind::PurpleAir),
            "waqi" => Ok(SourceKind::Waqi),
            "generic" | "csv" => Ok(SourceKind::Generic),
            _ => Err(Error::invalid(format!("unknown snapshot source '{s}' (expected purpleair, waqi or generic)"))),
        }
    }
}

/// Valid samples plus one message per dropped record or value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ingested {
    pub samples: Vec<SensorSample>,
    pub warnings: Vec<String>,
}

impl Ingested {
    fn push(&mut self, position: &str, sample: SensorSample) {
        match sample.defect() {
            Some(why) => self.warnings.push(format!("{position}: dropped {}: {why}", sample.factor)),
            None => self.samples.push(sample),
        }
    }

    /// Coordinates shared by every value of a record; `None` after recording a warning.
    fn coordinates(&mut self, position: &str, lat: Option<f64>, lon: Option<f64>) -> Option<(f64, f64)> {
        match (lat, lon) {
            (Some(la), Some(lo)) if (-90.0..=90.0).contains(&la) && (-180.0..=180.0).contains(&lo) => Some((la, lo)),
            (Some(la), Some(lo)) => {
                self.warnings.push(format!("{position}: dropped record: coordinates ({la}, {lo}) out of range"));
                None
            }
            _ => {
                self.warnings.push(format!("{position}: dropped record: missing coordinates"));
                None
            }
        }
    }
}

pub fn ingest_snapshot(path: &Path, kind: SourceKind) -> Result<Ingested> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    parse_snapshot(&text, kind).map_err(|e| match e {
        Error::Parse { position, message } => Error::Parse { position: format!("{}: {position}", path.display()), message },
        other => other,
    })
}

pub fn parse_snapshot(text: &str, kind: SourceKind) -> Result<Ingested> {
    match kind {
        SourceKind::PurpleAir => parse_purpleair(&parse_json(text)?),
        SourceKind::Waqi => parse_waqi(&parse_json(text)?),
        SourceKind::Generic => parse_generic(text),
    }
}

fn parse_err(position: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse { position: position.into(), message: message.into() }
}

fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text)
        .map_err(|e| parse_err(format!("line {}, column {}", e.line(), e.column()), e.to_string()))
}

/// Numeric JSON value; `null`, absent and non-numeric strings read as missing.
fn number(v: Option<&Value>) -> Option<f64> {
    match v? {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn id_string(v: Option<&Value>) -> Option<String> {
    match v? {
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) if !s.is_empty() => Some(s.clone()),
        _ => None,
    }
}

fn parse_purpleair(doc: &Value) -> Result<Ingested> {
    let fields: Vec<&str> = doc
        .get("fields")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err("document", "missing 'fields' array"))?
        .iter()
        .map(|f| f.as_str().ok_or_else(|| parse_err("fields", "field names must be strings")))
        .collect::<Result<_>>()?;
    let rows = doc.get("data").and_then(Value::as_array).ok_or_else(|| parse_err("document", "missing 'data' array"))?;
    let col = |names: &[&str]| fields.iter().position(|f| names.contains(f));
    let id_col = col(&["sensor_index"]).ok_or_else(|| parse_err("fields", "missing 'sensor_index'"))?;
    let lat_col = col(&["latitude"]).ok_or_else(|| parse_err("fields", "missing 'latitude'"))?;
    let lon_col = col(&["longitude"]).ok_or_else(|| parse_err("fields", "missing 'longitude'"))?;
    let seen_col = col(&["last_seen"]);
    let value_cols: Vec<(EnvFactor, usize)> = [
        (EnvFactor::PM2_5, col(&["pm2.5_atm", "pm2.5"])),
        (EnvFactor::PM10, col(&["pm10.0_atm", "pm10.0"])),
        (EnvFactor::TEMPERATURE, col(&["temperature"])),
    ]
    .into_iter()
    .filter_map(|(f, c)| Some((f, c?)))
    .collect();
    let snapshot_time = number(doc.get("data_time_stamp")).or_else(|| number(doc.get("time_stamp")));

    let mut out = Ingested::default();
    for (r, row) in rows.iter().enumerate() {
        let position = format!("record {}", r + 1);
        let row = row.as_array().ok_or_else(|| parse_err(&position, "data rows must be arrays"))?;
        if row.len() != fields.len() {
            return Err(parse_err(&position, format!("{} values for {} fields", row.len(), fields.len())));
        }
        let id = id_string(row.get(id_col)).ok_or_else(|| parse_err(&position, "missing sensor_index"))?;
        let timestamp = seen_col
            .and_then(|c| number(row.get(c)))
            .or(snapshot_time)
            .ok_or_else(|| parse_err(&position, "no last_seen and no snapshot time stamp"))?;
        let Some((lat, lon)) = out.coordinates(&position, number(row.get(lat_col)), number(row.get(lon_col))) else {
            continue;
        };
        for &(factor, c) in &value_cols {
            match &row[c] {
                Value::Null => {}
                v => {
                    let value = number(Some(v)).unwrap_or(f64::NAN);
                    let sample = SensorSample {
                        sensor_id: id.clone(),
                        latitude: lat,
                        longitude: lon,
                        factor,
                        value,
                        timestamp: timestamp as i64,
                    };
                    out.push(&position, sample);
                }
            }
        }
    }
    Ok(out)
}

fn parse_waqi(doc: &Value) -> Result<Ingested> {
    let feeds: Vec<&Value> = match doc {
        Value::Array(items) => items.iter().collect(),
        Value::Object(_) => match doc.get("data") {
            Some(Value::Array(items)) => items.iter().collect(),
            Some(obj @ Value::Object(_)) => vec![obj],
            _ => return Err(parse_err("document", "missing 'data' feed object")),
        },
        _ => return Err(parse_err("document", "expected a feed object or an array of feeds")),
    };
    let mut out = Ingested::default();
    for (r, feed) in feeds.into_iter().enumerate() {
        let position = format!("record {}", r + 1);
        if !feed.is_object() {
            return Err(parse_err(&position, "feed entries must be objects"));
        }
        let id = id_string(feed.get("idx")).ok_or_else(|| parse_err(&position, "missing 'idx'"))?;
        let timestamp = number(feed.pointer("/time/v")).ok_or_else(|| parse_err(&position, "missing 'time.v'"))?;
        let geo = feed.pointer("/city/geo").and_then(Value::as_array);
        let (lat, lon) = (number(geo.and_then(|g| g.first())), number(geo.and_then(|g| g.get(1))));
        let Some((lat, lon)) = out.coordinates(&position, lat, lon) else {
            continue;
        };
        for (key, factor) in [
            ("pm25", EnvFactor::PM2_5),
            ("pm10", EnvFactor::PM10),
            ("no2", EnvFactor::NO2),
            ("t", EnvFactor::TEMPERATURE),
        ] {
            let Some(entry) = feed.get("iaqi").and_then(|i| i.get(key)) else {
                continue;
            };
            let mut value = number(entry.get("v")).unwrap_or(f64::NAN);
            if factor == EnvFactor::TEMPERATURE {
                value = value * 9.0 / 5.0 + 32.0;
            }
            let sample =
                SensorSample { sensor_id: id.clone(), latitude: lat, longitude: lon, factor, value, timestamp: timestamp as i64 };
            out.push(&position, sample);
        }
    }
    Ok(out)
}

fn parse_generic(text: &str) -> Result<Ingested> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut out = Ingested::default();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(r as u64 + 1, |p| p.line());
            parse_err(format!("line {line}"), e.to_string())
        })?;
        let line = record.position().map_or(r as u64 + 1, |p| p.line());
        let position = format!("line {line}");
        if record.len() != 6 {
            return Err(parse_err(&position, format!("expected 6 fields, found {}", record.len())));
        }
        if r == 0 && record[1].parse::<f64>().is_err() && record[4].parse::<f64>().is_err() {
            continue;
        }
        let optional = |i: usize| -> Result<Option<f64>> {
            let field = &record[i];
            if field.is_empty() || field.eq_ignore_ascii_case("na") {
                return Ok(None);
            }
            field.parse().map(Some).map_err(|_| parse_err(&position, format!("field {} '{field}' is not a number", i + 1)))
        };
        let (lat, lon) = (optional(1)?, optional(2)?);
        let factor: EnvFactor = record[3].parse().map_err(|e: Error| parse_err(&position, e.to_string()))?;
        let value = optional(4)?.unwrap_or(f64::NAN);
        let timestamp: i64 = record[5]
            .parse()
            .map_err(|_| parse_err(&position, format!("timestamp '{}' is not an integer", &record[5])))?;
        if record[0].is_empty() {
            return Err(parse_err(&position, "empty sensor id"));
        }
        let Some((lat, lon)) = out.coordinates(&position, lat, lon) else {
            continue;
        };
        let sample = SensorSample { sensor_id: record[0].to_string(), latitude: lat, longitude: lon, factor, value, timestamp };
        out.push(&position, sample);
    }
    Ok(out)
}
