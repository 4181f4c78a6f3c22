//! `RSPN1` checkpoint files.
//!
//! Layout: the magic line `RSPN1`, `key=value` header lines (architecture,
//! front end, training metadata), `params=N`, one `name dims` line per
//! parameter (dims joined by `x`), the line `end`, then every parameter's
//! values as little-endian `f64` in table order.

use std::path::Path;

use super::{EncoderKind, Model, ModelConfig, ModelKind};
use crate::dsp::{FeatureConfig, StftConfig};
use crate::error::{Error, Result};
use crate::Tensor;

pub const CHECKPOINT_MAGIC: &str = "RSPN1";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs: usize,
    pub final_loss: f64,
    pub lr: f64,
    pub momentum: f64,
    pub batch_size: usize,
}

fn ckpt_err(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

impl Model {
    pub fn to_checkpoint_bytes(&self, meta: &TrainingMeta) -> Vec<u8> {
        let c = &self.config;
        let s = &c.features.stft;
        let mut header = format!(
            "{CHECKPOINT_MAGIC}\nkind={}\nencoder={}\nsample_rate={}\nwindow_len={}\nhop={}\nfft_len={}\n\
             kept_bins={}\ninput_offset={}\ninput_scale={}\nrnn_hidden={}\nseed={}\nepochs={}\n\
             final_loss={}\nlr={}\nmomentum={}\nbatch_size={}\nparams={}\n",
            c.kind.name(),
            c.encoder.name(),
            c.features.sample_rate,
            s.window_len,
            s.hop,
            s.fft_len,
            s.kept_bins,
            c.input_offset,
            c.input_scale,
            c.rnn_hidden,
            meta.seed,
            meta.epochs,
            meta.final_loss,
            meta.lr,
            meta.momentum,
            meta.batch_size,
            self.params.len(),
        );
        for p in self.params.iter() {
            let dims: Vec<String> = p.value.shape().iter().map(|d| d.to_string()).collect();
            header.push_str(&format!("{} {}\n", p.name, dims.join("x")));
        }
        header.push_str("end\n");
        let mut out = header.into_bytes();
        for p in self.params.iter() {
            for v in p.value.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<(Model, TrainingMeta)> {
        let mut lines = Vec::new();
        let mut pos = 0;
        loop {
            let nl = bytes[pos..]
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| ckpt_err("header is not terminated by an 'end' line"))?;
            let line = std::str::from_utf8(&bytes[pos..pos + nl]).map_err(|_| ckpt_err("header is not UTF-8"))?;
            pos += nl + 1;
            if line == "end" {
                break;
            }
            lines.push(line);
        }
        if lines.first() != Some(&CHECKPOINT_MAGIC) {
            return Err(ckpt_err(format!("missing magic '{CHECKPOINT_MAGIC}'")));
        }
        let mut idx = 1;
        let mut field = |key: &str| -> Result<&str> {
            let line = lines.get(idx).ok_or_else(|| ckpt_err(format!("header ends before '{key}'")))?;
            idx += 1;
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| ckpt_err(format!("expected '{key}=' on header line {idx}, found '{line}'")))
        };
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Checkpoint(format!("header field '{key}' has invalid value '{v}'")))
        }
        let kind: ModelKind = field("kind")?.parse().map_err(|e: Error| ckpt_err(e.to_string()))?;
        let encoder: EncoderKind = field("encoder")?.parse().map_err(|e: Error| ckpt_err(e.to_string()))?;
        let sample_rate = num("sample_rate", field("sample_rate")?)?;
        let stft = StftConfig {
            window_len: num("window_len", field("window_len")?)?,
            hop: num("hop", field("hop")?)?,
            fft_len: num("fft_len", field("fft_len")?)?,
            kept_bins: num("kept_bins", field("kept_bins")?)?,
        };
        let config = ModelConfig {
            kind,
            encoder,
            features: FeatureConfig { sample_rate, stft },
            input_offset: num("input_offset", field("input_offset")?)?,
            input_scale: num("input_scale", field("input_scale")?)?,
            rnn_hidden: num("rnn_hidden", field("rnn_hidden")?)?,
        };
        let meta = TrainingMeta {
            seed: num("seed", field("seed")?)?,
            epochs: num("epochs", field("epochs")?)?,
            final_loss: num("final_loss", field("final_loss")?)?,
            lr: num("lr", field("lr")?)?,
            momentum: num("momentum", field("momentum")?)?,
            batch_size: num("batch_size", field("batch_size")?)?,
        };
        let count: usize = num("params", field("params")?)?;
        let table = &lines[idx..];
        if table.len() != count {
            return Err(ckpt_err(format!("parameter table lists {} entries, header says {count}", table.len())));
        }

        let mut model = Model::new(config, 0).map_err(|e| ckpt_err(format!("invalid architecture: {e}")))?;
        if model.params.len() != count {
            return Err(ckpt_err(format!(
                "architecture mismatch: {} model has {} parameters, checkpoint has {count}",
                kind,
                model.params.len()
            )));
        }
        let mut blob = &bytes[pos..];
        for (id, entry) in model.params.ids().collect::<Vec<_>>().into_iter().zip(table) {
            let (name, dims) = entry.split_once(' ').ok_or_else(|| ckpt_err(format!("bad table line '{entry}'")))?;
            let shape: Vec<usize> = dims.split('x').map(|d| num("shape", d)).collect::<Result<_>>()?;
            let param = model.params.get_mut(id);
            if param.name != name || param.value.shape() != shape.as_slice() {
                return Err(ckpt_err(format!(
                    "architecture mismatch: expected {} {:?}, checkpoint has {name} {shape:?}",
                    param.name,
                    param.value.shape()
                )));
            }
            let n = param.value.len() * 8;
            if blob.len() < n {
                return Err(ckpt_err(format!("parameter blob for {name} is truncated")));
            }
            let data = blob[..n].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
            param.value = Tensor::new(&shape, data)?;
            blob = &blob[n..];
        }
        if !blob.is_empty() {
            return Err(ckpt_err(format!("{} trailing bytes after the last parameter", blob.len())));
        }
        Ok((model, meta))
    }

    pub fn save(&self, meta: &TrainingMeta, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_checkpoint_bytes(meta)).map_err(|e| Error::file(path, e))
    }

    pub fn load(path: &Path) -> Result<(Model, TrainingMeta)> {
        let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
        Self::from_checkpoint_bytes(&bytes)
    }
}
