use crate::error::Result;
use crate::numerics::{ParamId, SeededRng, Var};
use crate::{ParamStore, Tape};

/// LeNet-style slice classifier: two conv(2x2) -> maxpool(2x2) -> relu
/// groups, flatten, dense -> relu -> dense(1) -> sigmoid.
///
/// With `head == None` the network stops at the first dense layer and yields
/// an embedding instead of a probability.
#[derive(Clone, Debug)]
pub struct SliceCnn {
    pub in_channels: usize,
    pub conv1: (ParamId, ParamId),
    pub conv2: (ParamId, ParamId),
    pub dense1: (ParamId, ParamId),
    pub head: Option<(ParamId, ParamId)>,
    pub flat_len: usize,
}

pub const CONV1_CHANNELS: usize = 8;
pub const CONV2_CHANNELS: usize = 16;
pub const DENSE_HIDDEN: usize = 64;

/// Spatial extent after conv(2x2, valid) followed by 2x2 pooling.
fn conv_pool(extent: usize) -> usize {
    (extent - 1) / 2
}

/// Flattened feature length for an `h x w` input.
pub fn flat_len(h: usize, w: usize) -> usize {
    CONV2_CHANNELS * conv_pool(conv_pool(h)) * conv_pool(conv_pool(w))
}

impl SliceCnn {
    pub fn register(
        store: &mut ParamStore,
        prefix: &str,
        in_channels: usize,
        (h, w): (usize, usize),
        with_head: bool,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let flat = flat_len(h, w);
        let mut pair = |name: &str, shape: &[usize], bias: usize, fan_in: usize| -> Result<(ParamId, ParamId)> {
            Ok((
                store.add_uniform(format!("{prefix}.{name}.weight"), shape, fan_in, rng)?,
                store.add_uniform(format!("{prefix}.{name}.bias"), &[bias], fan_in, rng)?,
            ))
        };
        let conv1 = pair("conv1", &[CONV1_CHANNELS, in_channels, 2, 2], CONV1_CHANNELS, in_channels * 4)?;
        let conv2 = pair("conv2", &[CONV2_CHANNELS, CONV1_CHANNELS, 2, 2], CONV2_CHANNELS, CONV1_CHANNELS * 4)?;
        let dense1 = pair("dense1", &[DENSE_HIDDEN, flat], DENSE_HIDDEN, flat)?;
        let head = if with_head { Some(pair("dense2", &[1, DENSE_HIDDEN], 1, DENSE_HIDDEN)?) } else { None };
        Ok(SliceCnn { in_channels, conv1, conv2, dense1, head, flat_len: flat })
    }

    /// Runs the network on a `[in_channels, H, W]` input. Returns the
    /// probability when a head is present, otherwise the embedding.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, input: Var) -> Result<Var> {
        let x = self.features(tape, store, input)?;
        let (w1, b1) = (tape.param(store, self.dense1.0), tape.param(store, self.dense1.1));
        let hidden = tape.dense(x, w1, Some(b1))?;
        match self.head {
            None => Ok(hidden),
            Some((w, b)) => {
                let hidden = tape.relu(hidden);
                let (w2, b2) = (tape.param(store, w), tape.param(store, b));
                let logit = tape.dense(hidden, w2, Some(b2))?;
                Ok(tape.sigmoid(logit))
            }
        }
    }

    fn features(&self, tape: &mut Tape, store: &ParamStore, input: Var) -> Result<Var> {
        let shape = tape.value(input).shape().to_vec();
        if shape.len() != 3 || shape[0] != self.in_channels {
            return Err(crate::Error::Shape(format!(
                "slice cnn expects [{}, H, W] input, got {shape:?}",
                self.in_channels
            )));
        }
        let mut x = input;
        for (k, b) in [self.conv1, self.conv2] {
            let (kv, bv) = (tape.param(store, k), tape.param(store, b));
            let c = tape.conv2d(x, kv, bv)?;
            let p = tape.maxpool2d(c)?;
            x = tape.relu(p);
        }
        let flat = tape.flatten(x)?;
        if tape.value(flat).len() != self.flat_len {
            return Err(crate::Error::Shape(format!(
                "slice cnn flattened {} features, dense layer expects {}",
                tape.value(flat).len(),
                self.flat_len
            )));
        }
        Ok(flat)
    }
}
