//! Reverse-mode differentiation over a linear record of executed operations.
//!
//! Every operation appends one node holding its output value. `backward`
//! walks the nodes in reverse order exactly once, accumulating gradients
//! additively, so a value used by several later operations receives the sum
//! of their contributions.

use super::kernels;
use super::{ParamId, ParamStore, Scalar, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    pub fn apply<S: Scalar>(self, x: S) -> S {
        match self {
            Activation::Relu => x.max(S::zero()),
            Activation::Sigmoid => kernels::sigmoid(x),
            Activation::Tanh => x.tanh(),
        }
    }
}

#[derive(Debug)]
enum Op<S> {
    Input,
    Param(ParamId),
    Conv2d { input: Var, kernels: Var, bias: Var },
    ConvTranspose2d { input: Var, kernels: Var, bias: Var },
    MaxPool2d { input: Var, argmax: Vec<usize> },
    Dense { input: Var, weight: Var, bias: Option<Var> },
    Activation { input: Var, kind: Activation },
    Add(Var, Var),
    Concat { a: Var, b: Var },
    ChannelMean(Var),
    Upsample2x(Var),
    CropPad(Var),
    Reshape(Var),
    Max { inputs: Vec<Var>, argmax: usize },
    Mean(Vec<Var>),
    Bce { prediction: Var, label: S },
}

#[derive(Debug)]
struct Node<S> {
    value: Tensor<S>,
    op: Op<S>,
}

#[derive(Debug, Default)]
pub struct Tape<S> {
    nodes: Vec<Node<S>>,
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<S>, op: Op<S>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor<S> {
        &self.nodes[v.0].value
    }

    /// Records a constant input.
    pub fn input(&mut self, value: Tensor<S>) -> Var {
        self.push(value, Op::Input)
    }

    /// Records the current value of a trainable parameter.
    pub fn param(&mut self, store: &ParamStore<S>, id: ParamId) -> Var {
        self.push(store.get(id).value.clone(), Op::Param(id))
    }

    pub fn conv2d(&mut self, input: Var, kernels: Var, bias: Var) -> Result<Var> {
        let out = kernels::conv2d(self.value(input), self.value(kernels), self.value(bias))?;
        Ok(self.push(out, Op::Conv2d { input, kernels, bias }))
    }

    pub fn conv_transpose2d(&mut self, input: Var, kernels: Var, bias: Var) -> Result<Var> {
        let out = kernels::conv_transpose2d(self.value(input), self.value(kernels), self.value(bias))?;
        Ok(self.push(out, Op::ConvTranspose2d { input, kernels, bias }))
    }

    pub fn maxpool2d(&mut self, input: Var) -> Result<Var> {
        let (out, argmax) = kernels::maxpool2d(self.value(input))?;
        Ok(self.push(out, Op::MaxPool2d { input, argmax }))
    }

    pub fn dense(&mut self, input: Var, weight: Var, bias: Option<Var>) -> Result<Var> {
        let out = kernels::dense(self.value(input), self.value(weight), bias.map(|b| self.value(b)))?;
        Ok(self.push(out, Op::Dense { input, weight, bias }))
    }

    pub fn activation(&mut self, input: Var, kind: Activation) -> Var {
        let out = self.value(input).map(|x| kind.apply(x));
        self.push(out, Op::Activation { input, kind })
    }

    pub fn relu(&mut self, input: Var) -> Var {
        self.activation(input, Activation::Relu)
    }

    pub fn sigmoid(&mut self, input: Var) -> Var {
        self.activation(input, Activation::Sigmoid)
    }

    pub fn tanh(&mut self, input: Var) -> Var {
        self.activation(input, Activation::Tanh)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(Error::shape(format!("add: {:?} vs {:?}", ta.shape(), tb.shape())));
        }
        let mut out = ta.clone();
        out.add_assign(tb);
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn concat_channels(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = kernels::concat_channels(self.value(a), self.value(b))?;
        Ok(self.push(out, Op::Concat { a, b }))
    }

    pub fn channel_mean(&mut self, input: Var) -> Result<Var> {
        let out = kernels::channel_mean(self.value(input))?;
        Ok(self.push(out, Op::ChannelMean(input)))
    }

    pub fn upsample2x(&mut self, input: Var) -> Result<Var> {
        let out = kernels::upsample2x(self.value(input))?;
        Ok(self.push(out, Op::Upsample2x(input)))
    }

    pub fn crop_pad(&mut self, input: Var, h: usize, w: usize) -> Result<Var> {
        let out = kernels::crop_pad(self.value(input), h, w)?;
        Ok(self.push(out, Op::CropPad(input)))
    }

    pub fn reshape(&mut self, input: Var, shape: &[usize]) -> Result<Var> {
        let out = self.value(input).clone().reshape(shape)?;
        Ok(self.push(out, Op::Reshape(input)))
    }

    pub fn flatten(&mut self, input: Var) -> Result<Var> {
        let n = self.value(input).len();
        self.reshape(input, &[n])
    }

    /// Maximum over one-element values; the gradient flows to the first maximiser only.
    pub fn max(&mut self, inputs: &[Var]) -> Result<Var> {
        let (argmax, best) = self.scalar_inputs(inputs, "max")?.into_iter().enumerate().fold(
            (0, S::neg_infinity()),
            |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) },
        );
        Ok(self.push(Tensor::scalar(best), Op::Max { inputs: inputs.to_vec(), argmax }))
    }

    /// Arithmetic mean over one-element values.
    pub fn mean(&mut self, inputs: &[Var]) -> Result<Var> {
        let vals = self.scalar_inputs(inputs, "mean")?;
        let n = S::from_usize(vals.len()).expect("count");
        let m = vals.into_iter().sum::<S>() / n;
        Ok(self.push(Tensor::scalar(m), Op::Mean(inputs.to_vec())))
    }

    /// Binary cross-entropy of a one-element probability against a 0/1 label.
    ///
    /// The prediction is clamped to `[1e-7, 1 - 1e-7]`. The gradient is taken at
    /// the clamped point rather than zeroed, so saturated wrong answers still
    /// receive a push.
    pub fn bce(&mut self, prediction: Var, label: S) -> Result<Var> {
        let p = self.scalar_inputs(&[prediction], "bce")?[0];
        let loss = kernels::bce(p, label);
        Ok(self.push(Tensor::scalar(loss), Op::Bce { prediction, label }))
    }

    fn scalar_inputs(&self, inputs: &[Var], what: &str) -> Result<Vec<S>> {
        if inputs.is_empty() {
            return Err(Error::invalid(format!("{what} of an empty list")));
        }
        inputs
            .iter()
            .map(|&v| {
                let t = self.value(v);
                if t.len() == 1 {
                    Ok(t.item())
                } else {
                    Err(Error::shape(format!("{what} expects one-element values, got {:?}", t.shape())))
                }
            })
            .collect()
    }

    /// Reverse pass from a one-element `loss`, seeded with `seed`.
    pub fn backward(&self, loss: Var, seed: S) -> Result<Gradients<S>> {
        if self.value(loss).len() != 1 {
            return Err(Error::shape(format!(
                "backward needs a one-element loss, got {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor<S>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::full(self.value(loss).shape(), seed));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Input | Op::Param(_) => {
                    grads[idx] = Some(g);
                }
                Op::Conv2d { input, kernels, bias } => {
                    let (gi, gk, gb) = kernels::conv2d_backward(self.value(*input), self.value(*kernels), &g);
                    accumulate(&mut grads, *input, gi);
                    accumulate(&mut grads, *kernels, gk);
                    accumulate(&mut grads, *bias, gb);
                }
                Op::ConvTranspose2d { input, kernels, bias } => {
                    let (gi, gk, gb) =
                        kernels::conv_transpose2d_backward(self.value(*input), self.value(*kernels), &g);
                    accumulate(&mut grads, *input, gi);
                    accumulate(&mut grads, *kernels, gk);
                    accumulate(&mut grads, *bias, gb);
                }
                Op::MaxPool2d { input, argmax } => {
                    let gi = kernels::maxpool2d_backward(self.value(*input).shape(), argmax, &g);
                    accumulate(&mut grads, *input, gi);
                }
                Op::Dense { input, weight, bias } => {
                    let (gi, gw, gb) = kernels::dense_backward(self.value(*input), self.value(*weight), &g);
                    accumulate(&mut grads, *input, gi);
                    accumulate(&mut grads, *weight, gw);
                    if let Some(b) = bias {
                        accumulate(&mut grads, *b, gb);
                    }
                }
                Op::Activation { input, kind } => {
                    let x = self.value(*input).data();
                    let y = node.value.data();
                    let gi = Tensor::from_fn(node.value.shape(), |i| {
                        let d = match kind {
                            Activation::Relu => {
                                if x[i] > S::zero() {
                                    S::one()
                                } else {
                                    S::zero()
                                }
                            }
                            Activation::Sigmoid => y[i] * (S::one() - y[i]),
                            Activation::Tanh => S::one() - y[i] * y[i],
                        };
                        d * g.data()[i]
                    });
                    let gi = gi.reshape(self.value(*input).shape())?;
                    accumulate(&mut grads, *input, gi);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, g);
                }
                Op::Concat { a, b } => {
                    let ca = self.value(*a).shape()[0];
                    let cb = self.value(*b).shape()[0];
                    accumulate(&mut grads, *a, g.channels(0, ca)?);
                    accumulate(&mut grads, *b, g.channels(ca, cb)?);
                }
                Op::ChannelMean(input) => {
                    let gi = kernels::channel_mean_backward(self.value(*input).shape(), &g);
                    accumulate(&mut grads, *input, gi);
                }
                Op::Upsample2x(input) => {
                    let gi = kernels::upsample2x_backward(self.value(*input).shape(), &g);
                    accumulate(&mut grads, *input, gi);
                }
                Op::CropPad(input) => {
                    let gi = kernels::crop_pad_backward(self.value(*input).shape(), &g);
                    accumulate(&mut grads, *input, gi);
                }
                Op::Reshape(input) => {
                    let gi = g.reshape(self.value(*input).shape())?;
                    accumulate(&mut grads, *input, gi);
                }
                Op::Max { inputs, argmax } => {
                    let winner = inputs[*argmax];
                    let gi = g.reshape(self.value(winner).shape())?;
                    accumulate(&mut grads, winner, gi);
                }
                Op::Mean(inputs) => {
                    let n = S::from_usize(inputs.len()).expect("count");
                    let share = g.item() / n;
                    for &v in inputs {
                        accumulate(&mut grads, v, Tensor::full(self.value(v).shape(), share));
                    }
                }
                Op::Bce { prediction, label } => {
                    let p = self.value(*prediction);
                    let d = kernels::bce_grad(p.item(), *label) * g.item();
                    accumulate(&mut grads, *prediction, Tensor::full(p.shape(), d));
                }
            }
        }

        let params = self
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| match n.op {
                Op::Param(id) => Some((id, Var(i))),
                _ => None,
            })
            .collect();
        Ok(Gradients { grads, params })
    }
}

fn accumulate<S: Scalar>(grads: &mut [Option<Tensor<S>>], v: Var, g: Tensor<S>) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

/// Result of a reverse pass.
#[derive(Debug)]
pub struct Gradients<S> {
    grads: Vec<Option<Tensor<S>>>,
    params: Vec<(ParamId, Var)>,
}

impl<S: Scalar> Gradients<S> {
    /// Gradient with respect to a recorded input or parameter; `None` when the
    /// loss does not depend on it. Intermediate values are not retained.
    pub fn wrt(&self, v: Var) -> Option<&Tensor<S>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Adds the gradients of every recorded parameter into the store.
    pub fn accumulate_into(&self, store: &mut ParamStore<S>) {
        for &(id, var) in &self.params {
            if let Some(g) = self.wrt(var) {
                store.get_mut(id).grad.add_assign(g);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_of_zero_weight_has_quarter_gradient() {
        let mut store = ParamStore::<f64>::new();
        let w = store.add("w", Tensor::new(&[1, 1], vec![0.0]).unwrap()).unwrap();
        let mut tape = Tape::new();
        let x = tape.input(Tensor::scalar(1.0));
        let wv = tape.param(&store, w);
        let z = tape.dense(x, wv, None).unwrap();
        let y = tape.sigmoid(z);
        assert_eq!(tape.value(y).item(), 0.5);
        tape.backward(y, 1.0).unwrap().accumulate_into(&mut store);
        assert!((store.get(w).grad.item() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn unused_parameter_keeps_zero_gradient() {
        let mut store = ParamStore::new();
        let used = store.add("used", Tensor::new(&[1, 1], vec![2.0]).unwrap()).unwrap();
        let unused = store.add("unused", Tensor::new(&[1, 1], vec![3.0]).unwrap()).unwrap();
        let mut tape = Tape::new();
        let x = tape.input(Tensor::scalar(1.5));
        let w = tape.param(&store, used);
        let _ = tape.param(&store, unused);
        let y = tape.dense(x, w, None).unwrap();
        tape.backward(y, 1.0).unwrap().accumulate_into(&mut store);
        assert_eq!(store.get(used).grad.item(), 1.5);
        assert_eq!(store.get(unused).grad.item(), 0.0);
    }

    #[test]
    fn shared_value_gradients_add_up() {
        let mut tape = Tape::<f64>::new();
        let a = tape.input(Tensor::from_vec(vec![1.0, -2.0]));
        let s = tape.add(a, a).unwrap();
        let s = tape.add(s, a).unwrap();
        let parts: Vec<Var> = (0..2)
            .map(|i| {
                let mut t = Tensor::zeros(&[1, 2]);
                t.data_mut()[i] = 1.0;
                let w = tape.input(t);
                tape.dense(s, w, None).unwrap()
            })
            .collect();
        let m = tape.mean(&parts).unwrap();
        let g = tape.backward(m, 1.0).unwrap();
        assert_eq!(g.wrt(a).unwrap().data(), &[1.5, 1.5]);
    }

    #[test]
    fn max_routes_to_first_maximiser() {
        let mut tape = Tape::<f64>::new();
        let vals: Vec<Var> = [0.1, 0.9, 0.3, 0.9].iter().map(|&v| tape.input(Tensor::scalar(v))).collect();
        let m = tape.max(&vals).unwrap();
        assert_eq!(tape.value(m).item(), 0.9);
        let g = tape.backward(m, 1.0).unwrap();
        assert_eq!(g.wrt(vals[1]).unwrap().item(), 1.0);
        assert!(g.wrt(vals[3]).is_none());
        assert!(tape.max(&[]).is_err());
    }

    #[test]
    fn concat_gradient_of_sum_is_ones() {
        let mut tape = Tape::<f64>::new();
        let a = tape.input(Tensor::from_fn(&[1, 2, 3], |i| i as f64));
        let b = tape.input(Tensor::from_fn(&[2, 2, 3], |i| -(i as f64)));
        let c = tape.concat_channels(a, b).unwrap();
        let flat = tape.flatten(c).unwrap();
        let ones = tape.input(Tensor::full(&[1, 18], 1.0));
        let s = tape.dense(flat, ones, None).unwrap();
        let g = tape.backward(s, 1.0).unwrap();
        assert_eq!(g.wrt(a).unwrap(), &Tensor::full(&[1, 2, 3], 1.0));
        assert_eq!(g.wrt(b).unwrap(), &Tensor::full(&[2, 2, 3], 1.0));
    }

    #[test]
    fn backward_rejects_non_scalar_loss() {
        let mut tape = Tape::<f64>::new();
        let a = tape.input(Tensor::from_vec(vec![1.0, 2.0]));
        assert!(tape.backward(a, 1.0).is_err());
    }
}
