use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ParamId, SeededRng, Var};
use crate::{ParamStore, Tape, Tensor};

/// How the recurrent hidden state is produced from the current step's input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    /// channel mean -> 2x2 max pool -> nearest 2x upsample -> crop/pad.
    Pool,
    /// Two 2x2 transposed convolutions then two 2x2 convolutions
    /// (channels 2 -> 4 -> 4 -> 2 -> 1), tanh at the end.
    Vae,
}

impl EncoderKind {
    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::Pool => "pool",
            EncoderKind::Vae => "vae",
        }
    }
}

impl std::str::FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pool" => Ok(EncoderKind::Pool),
            "vae" => Ok(EncoderKind::Vae),
            other => Err(Error::invalid(format!("unknown encoder kind '{other}' (expected pool or vae)"))),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Encoder {
    Pool,
    Vae { layers: [(ParamId, ParamId); 4] },
    /// Always emits zeros; turns STAIN into the plain per-slice CNN.
    Zero,
}

const VAE_CHANNELS: [usize; 5] = [2, 4, 4, 2, 1];

impl Encoder {
    pub fn register(kind: EncoderKind, store: &mut ParamStore, in_channels: usize, rng: &mut SeededRng) -> Result<Self> {
        match kind {
            EncoderKind::Pool => Ok(Encoder::Pool),
            EncoderKind::Vae => {
                if in_channels != VAE_CHANNELS[0] {
                    return Err(Error::shape(format!("vae encoder expects {} input channels", VAE_CHANNELS[0])));
                }
                let names = ["deconv1", "deconv2", "conv1", "conv2"];
                let mut layers = Vec::with_capacity(4);
                for (i, name) in names.iter().enumerate() {
                    let (cin, cout) = (VAE_CHANNELS[i], VAE_CHANNELS[i + 1]);
                    // transposed kernels are [C_in, C_out, 2, 2]; regular ones [C_out, C_in, 2, 2]
                    let shape = if i < 2 { [cin, cout, 2, 2] } else { [cout, cin, 2, 2] };
                    let w = store.add_uniform(format!("encoder.{name}.weight"), &shape, cin * 4, rng)?;
                    let b = store.add_uniform(format!("encoder.{name}.bias"), &[cout], cin * 4, rng)?;
                    layers.push((w, b));
                }
                Ok(Encoder::Vae { layers: layers.try_into().expect("four layers") })
            }
        }
    }

    /// Maps the `[2, H, W]` step input to a `[1, H, W]` hidden state.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, input: Var) -> Result<Var> {
        let shape = tape.value(input).shape().to_vec();
        if shape.len() != 3 {
            return Err(Error::shape(format!("encoder expects [C, H, W] input, got {shape:?}")));
        }
        let (h, w) = (shape[1], shape[2]);
        match self {
            Encoder::Zero => Ok(tape.input(Tensor::zeros(&[1, h, w]))),
            Encoder::Pool => {
                let m = tape.channel_mean(input)?;
                let p = tape.maxpool2d(m)?;
                let u = tape.upsample2x(p)?;
                tape.crop_pad(u, h, w)
            }
            Encoder::Vae { layers } => {
                let mut x = input;
                for (i, &(k, b)) in layers.iter().enumerate() {
                    let (kv, bv) = (tape.param(store, k), tape.param(store, b));
                    let y = if i < 2 { tape.conv_transpose2d(x, kv, bv)? } else { tape.conv2d(x, kv, bv)? };
                    x = tape.crop_pad(y, h, w)?;
                }
                Ok(tape.tanh(x))
            }
        }
    }
}
