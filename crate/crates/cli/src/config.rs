//! Optional TOML file passed with `--config`. Every section and key is optional.
//!
//! ```toml
//! [train]
//! lr = 0.01
//! momentum = 0.9
//! epochs = 10
//! batch_size = 16
//! encoder = "pool"
//!
//! [dataset]
//! duration_range_s = [2.0, 5.0]
//! overlay_count_range = [1, 4]
//! gain_range_db = [-18.0, 0.0]
//!
//! [detect]
//! threshold = 0.5
//! window_s = 4.0
//! hop_s = 1.0
//! refractory_s = 1.0
//!
//! [forecast]
//! reference_frequency = 10.0
//! alert_threshold = 1.5
//! bucket_s = 3600.0
//! horizon_days = 7
//!
//! [risk]
//! stepwise = false
//! [risk.no2]
//! safety_standard = 40.0
//! rate = 10.0
//! coefficient = 2.0
//! ```

use std::path::Path;

use serde::Deserialize;
use stain_core::dataset::AugmentationSpec;
use stain_core::detect::DetectionConfig;
use stain_core::envrisk::RiskConfig;
use stain_core::forecast::ForecastConfig;
use stain_core::models::EncoderKind;
use stain_core::{Error, Result};

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub lr: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub encoder: EncoderKind,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = stain_core::trainkit::TrainConfig::default();
        TrainSection { lr: d.lr, momentum: d.momentum, epochs: d.epochs, batch_size: d.batch_size, encoder: d.encoder }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub duration_range_s: (f64, f64),
    pub overlay_count_range: (usize, usize),
    pub gain_range_db: (f64, f64),
}

impl Default for DatasetSection {
    fn default() -> Self {
        let d = AugmentationSpec::default();
        DatasetSection {
            duration_range_s: d.duration_range_s,
            overlay_count_range: d.overlay_count_range,
            gain_range_db: d.gain_range_db,
        }
    }
}

impl DatasetSection {
    pub fn spec(&self, seed: u64) -> AugmentationSpec {
        AugmentationSpec {
            duration_range_s: self.duration_range_s,
            overlay_count_range: self.overlay_count_range,
            gain_range_db: self.gain_range_db,
            seed,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub train: TrainSection,
    pub dataset: DatasetSection,
    pub detect: DetectionConfig,
    pub forecast: ForecastConfig,
    pub risk: RiskConfig,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: FileConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.risk.validate()?;
        Ok(cfg)
    }
}
