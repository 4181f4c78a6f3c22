use crate::error::Result;
use crate::numerics::{ParamId, SeededRng, Var};
use crate::{ParamStore, Tape, Tensor};

/// Elman cell `h_t = tanh(W_x x_t + W_h h_{t-1} + b)` followed, after the
/// last step, by a dense(1) + sigmoid read-out.
#[derive(Clone, Debug)]
pub struct RecurrentHead {
    pub input_dim: usize,
    pub hidden: usize,
    pub wx: ParamId,
    pub wh: ParamId,
    pub bias: ParamId,
    pub out: (ParamId, ParamId),
}

impl RecurrentHead {
    pub fn register(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden: usize,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let wx = store.add_uniform(format!("{prefix}.wx"), &[hidden, input_dim], input_dim, rng)?;
        let wh = store.add_uniform(format!("{prefix}.wh"), &[hidden, hidden], hidden, rng)?;
        let bias = store.add_uniform(format!("{prefix}.bias"), &[hidden], input_dim, rng)?;
        let out = (
            store.add_uniform("head.weight", &[1, hidden], hidden, rng)?,
            store.add_uniform("head.bias", &[1], hidden, rng)?,
        );
        Ok(RecurrentHead { input_dim, hidden, wx, wh, bias, out })
    }

    /// Runs the recurrence over `steps` (each `[input_dim]`) and returns the
    /// final hidden state.
    pub fn run(&self, tape: &mut Tape, store: &ParamStore, steps: &[Var]) -> Result<Var> {
        let wx = tape.param(store, self.wx);
        let wh = tape.param(store, self.wh);
        let b = tape.param(store, self.bias);
        let mut h = tape.input(Tensor::zeros(&[self.hidden]));
        for &x in steps {
            let a = tape.dense(x, wx, Some(b))?;
            let r = tape.dense(h, wh, None)?;
            let s = tape.add(a, r)?;
            h = tape.tanh(s);
        }
        Ok(h)
    }

    pub fn read_out(&self, tape: &mut Tape, store: &ParamStore, h: Var) -> Result<Var> {
        let (w, b) = (tape.param(store, self.out.0), tape.param(store, self.out.1));
        let logit = tape.dense(h, w, Some(b))?;
        Ok(tape.sigmoid(logit))
    }
}
