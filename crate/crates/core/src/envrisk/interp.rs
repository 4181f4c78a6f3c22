use super::{EnvFactor, SensorSample};

/// Mean Earth radius.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// A query this close to a sensor takes that sensor's value.
const SNAP_DISTANCE_KM: f64 = 0.001;

/// Great-circle distance between two points given in degrees.
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

/// Inverse-distance-weighted estimate of `factor` at (`lat`, `lon`) from the
/// samples within `max_radius_km`. `None` when no sensor is in range.
pub fn interpolate(
    samples: &[SensorSample],
    factor: EnvFactor,
    lat: f64,
    lon: f64,
    power: f64,
    max_radius_km: f64,
) -> Option<f64> {
    let mut nearest: Option<(f64, f64)> = None;
    let (mut num, mut den) = (0.0, 0.0);
    for s in samples.iter().filter(|s| s.factor == factor) {
        let d = haversine_km(lat, lon, s.latitude, s.longitude);
        if d > max_radius_km {
            continue;
        }
        if nearest.is_none_or(|(nd, _)| d < nd) {
            nearest = Some((d, s.value));
        }
        let w = d.powf(-power);
        num += w * s.value;
        den += w;
    }
    let (nd, nv) = nearest?;
    if nd <= SNAP_DISTANCE_KM {
        return Some(nv);
    }
    Some(num / den)
}

/// Samples taken no more than `window_s` before `now`.
pub fn fresh(samples: &[SensorSample], now: i64, window_s: f64) -> Vec<SensorSample> {
    samples.iter().filter(|s| ((now - s.timestamp) as f64) <= window_s).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(lat: f64, lon: f64, value: f64) -> SensorSample {
        SensorSample { sensor_id: "s".into(), latitude: lat, longitude: lon, factor: EnvFactor::NO2, value, timestamp: 0 }
    }

    #[test]
    fn one_degree_of_latitude() {
        let d = haversine_km(0.0, 0.0, 1.0, 0.0);
        assert!((d - EARTH_RADIUS_KM * std::f64::consts::PI / 180.0).abs() < 1e-9);
    }

    #[test]
    fn out_of_range_is_missing() {
        let s = [sample(0.0, 0.0, 5.0)];
        assert_eq!(interpolate(&s, EnvFactor::NO2, 1.0, 0.0, 2.0, 50.0), None);
        assert_eq!(interpolate(&s, EnvFactor::PM10, 0.0, 0.0, 2.0, 50.0), None);
        assert_eq!(interpolate(&s, EnvFactor::NO2, 0.0, 0.0, 2.0, 50.0), Some(5.0));
    }

    #[test]
    fn stale_samples_are_filtered() {
        let mut s = vec![sample(0.0, 0.0, 1.0), sample(0.0, 0.0, 2.0)];
        s[0].timestamp = 1000 - 90_000;
        s[1].timestamp = 1000 - 3_600;
        let f = fresh(&s, 1000, 86_400.0);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].value, 2.0);
    }
}
