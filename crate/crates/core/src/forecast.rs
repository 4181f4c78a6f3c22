//! Cough-frequency trend and its combination with environmental risk.
//!
//! Events are counted in fixed buckets, a least-squares line is fitted to the
//! per-hour frequency against time in days, and the line is extrapolated past
//! the last bucket. Each forecast day's severity (frequency over a reference
//! frequency) is amplified by the environmental risk percentage and compared
//! against an alert threshold.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoughEvent {
    /// UTC seconds.
    pub timestamp: f64,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoughTimeSeries {
    pub bucket_duration_s: f64,
    /// Start of the first bucket (UTC seconds).
    pub start: f64,
    pub counts: Vec<u64>,
}

impl CoughTimeSeries {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn bucket_start(&self, i: usize) -> f64 {
        self.start + i as f64 * self.bucket_duration_s
    }

    /// Coughs per hour in each bucket.
    pub fn frequencies(&self) -> Vec<f64> {
        let hours = self.bucket_duration_s / 3600.0;
        self.counts.iter().map(|&c| c as f64 / hours).collect()
    }
}

/// Counts events in contiguous buckets starting at the earliest event and
/// ending with the bucket holding the latest one.
pub fn aggregate(events: &[CoughEvent], bucket_duration_s: f64) -> Result<CoughTimeSeries> {
    if !(bucket_duration_s > 0.0 && bucket_duration_s.is_finite()) {
        return Err(Error::invalid(format!("bucket duration {bucket_duration_s} s must be positive")));
    }
    if let Some(e) = events.iter().find(|e| !e.timestamp.is_finite()) {
        return Err(Error::invalid(format!("event timestamp {} is not finite", e.timestamp)));
    }
    let Some(start) = events.iter().map(|e| e.timestamp).reduce(f64::min) else {
        return Ok(CoughTimeSeries { bucket_duration_s, start: 0.0, counts: Vec::new() });
    };
    let mut counts: Vec<u64> = Vec::new();
    for e in events {
        let i = ((e.timestamp - start) / bucket_duration_s).floor() as usize;
        if i >= counts.len() {
            counts.resize(i + 1, 0);
        }
        counts[i] += 1;
    }
    Ok(CoughTimeSeries { bucket_duration_s, start, counts })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendModel {
    /// Coughs per hour, per day.
    pub slope: f64,
    /// Coughs per hour at the series start.
    pub intercept: f64,
    pub rms_residual: f64,
    /// Offset of the last bucket from the series start, in days.
    pub last_day: f64,
}

impl TrendModel {
    /// Fitted frequency `days` after the series start.
    pub fn at(&self, days: f64) -> f64 {
        self.intercept + self.slope * days
    }
}

/// Ordinary least-squares line through `(x, y)`; returns `(slope, intercept, rms residual)`.
pub fn ols(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("least squares needs at least two paired points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("least squares needs at least two distinct x values"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - (intercept + slope * a)).powi(2)).sum();
    Ok((slope, intercept, (sse / n).sqrt()))
}

/// Linear trend of per-hour frequency against bucket start time in days.
pub fn fit_trend(series: &CoughTimeSeries) -> Result<TrendModel> {
    if series.len() < 2 {
        return Err(Error::invalid(format!("trend needs at least 2 buckets, series has {}", series.len())));
    }
    let days: Vec<f64> = (0..series.len()).map(|i| i as f64 * series.bucket_duration_s / SECONDS_PER_DAY).collect();
    let (slope, intercept, rms_residual) = ols(&days, &series.frequencies())?;
    Ok(TrendModel { slope, intercept, rms_residual, last_day: *days.last().expect("two buckets") })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastConfig {
    /// Coughs per hour regarded as severity 1.
    pub reference_frequency: f64,
    pub alert_threshold: f64,
    pub bucket_s: f64,
    pub horizon_days: usize,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        ForecastConfig { reference_frequency: 10.0, alert_threshold: 1.5, bucket_s: 3600.0, horizon_days: 7 }
    }
}

/// Severity amplified by an environmental risk increase given in percent.
pub fn combined_score(severity: f64, env_total_pct: f64) -> f64 {
    severity * (1.0 + env_total_pct / 100.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub horizon_days: usize,
    pub trend: TrendModel,
    pub reference_frequency: f64,
    pub env_risk_pct: f64,
    /// Coughs per hour on forecast days 1..=horizon after the last bucket.
    pub predicted_frequency: Vec<f64>,
    pub combined_score: Vec<f64>,
    pub threshold: f64,
    pub alert: bool,
    /// First forecast day whose score reaches the threshold.
    pub alert_day: Option<usize>,
}

/// Extrapolates `trend` for `horizon_days` days past the last bucket.
pub fn make_forecast(trend: &TrendModel, env_total_pct: f64, horizon_days: usize, cfg: &ForecastConfig) -> Result<Forecast> {
    if !(cfg.reference_frequency > 0.0 && cfg.reference_frequency.is_finite()) {
        return Err(Error::Config(format!("reference frequency must be positive, got {}", cfg.reference_frequency)));
    }
    if !cfg.alert_threshold.is_finite() {
        return Err(Error::Config("alert threshold must be finite".into()));
    }
    if horizon_days == 0 {
        return Err(Error::invalid("forecast horizon must be at least 1 day"));
    }
    if !env_total_pct.is_finite() || env_total_pct < 0.0 {
        return Err(Error::invalid(format!("environmental risk {env_total_pct}% must be finite and non-negative")));
    }
    let predicted_frequency: Vec<f64> =
        (1..=horizon_days).map(|d| trend.at(trend.last_day + d as f64).max(0.0)).collect();
    let combined: Vec<f64> =
        predicted_frequency.iter().map(|f| combined_score(f / cfg.reference_frequency, env_total_pct)).collect();
    let alert_day = combined.iter().position(|&s| s >= cfg.alert_threshold).map(|i| i + 1);
    Ok(Forecast {
        horizon_days,
        trend: *trend,
        reference_frequency: cfg.reference_frequency,
        env_risk_pct: env_total_pct,
        predicted_frequency,
        combined_score: combined,
        threshold: cfg.alert_threshold,
        alert: alert_day.is_some(),
        alert_day,
    })
}

impl Forecast {
    pub fn max_score(&self) -> f64 {
        self.combined_score.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl fmt::Display for Forecast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.alert_day {
            Some(d) => write!(f, "ALERT in {d} days: score {:.4} ≥ {}", self.combined_score[d - 1], self.threshold),
            None => write!(f, "no alert within horizon"),
        }
    }
}
