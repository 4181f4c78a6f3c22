//! Forward and backward kernels for the layer primitives.
//!
//! These work on plain tensors and know nothing about the tape; `tape.rs`
//! wires them into reverse-mode differentiation.

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

fn expect_rank<S: Scalar>(t: &Tensor<S>, rank: usize, what: &str) -> Result<()> {
    if t.rank() != rank {
        return Err(Error::shape(format!(
            "{what} must have rank {rank}, got shape {:?}",
            t.shape()
        )));
    }
    Ok(())
}

/// Valid (unpadded) stride-1 cross-correlation.
///
/// `input` is `[C_in, H, W]`, `kernels` is `[C_out, C_in, KH, KW]`, `bias` is `[C_out]`.
pub fn conv2d<S: Scalar>(input: &Tensor<S>, kernels: &Tensor<S>, bias: &Tensor<S>) -> Result<Tensor<S>> {
    expect_rank(input, 3, "conv2d input")?;
    expect_rank(kernels, 4, "conv2d kernels")?;
    let (c_in, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (c_out, k_in, kh, kw) = (kernels.shape()[0], kernels.shape()[1], kernels.shape()[2], kernels.shape()[3]);
    if k_in != c_in {
        return Err(Error::shape(format!(
            "conv2d channel axis: input has {c_in} channels, kernels expect {k_in}"
        )));
    }
    if h < kh {
        return Err(Error::shape(format!("conv2d height axis: {h} rows < kernel height {kh}")));
    }
    if w < kw {
        return Err(Error::shape(format!("conv2d width axis: {w} columns < kernel width {kw}")));
    }
    if bias.shape() != [c_out] {
        return Err(Error::shape(format!(
            "conv2d bias axis: expected [{c_out}], got {:?}",
            bias.shape()
        )));
    }
    let (oh, ow) = (h - kh + 1, w - kw + 1);
    let x = input.data();
    let k = kernels.data();
    // Accumulate each output plane with the input's row stride so every tap
    // is one long contiguous loop; columns past `ow` are scratch.
    let mut wide = vec![S::zero(); oh * w];
    let mut out = Vec::with_capacity(c_out * oh * ow);
    for o in 0..c_out {
        wide.iter_mut().for_each(|v| *v = bias.data()[o]);
        for c in 0..c_in {
            let src = &x[c * h * w..(c + 1) * h * w];
            for dy in 0..kh {
                for dx in 0..kw {
                    let wt = k[((o * c_in + c) * kh + dy) * kw + dx];
                    let len = oh * w - dx;
                    let from = &src[dy * w + dx..dy * w + dx + len];
                    for (r, &v) in wide[..len].iter_mut().zip(from) {
                        *r += wt * v;
                    }
                }
            }
        }
        for y in 0..oh {
            out.extend_from_slice(&wide[y * w..y * w + ow]);
        }
    }
    Tensor::new(&[c_out, oh, ow], out)
}

/// Gradients of [`conv2d`] with respect to input, kernels and bias.
pub fn conv2d_backward<S: Scalar>(
    input: &Tensor<S>,
    kernels: &Tensor<S>,
    grad_out: &Tensor<S>,
) -> (Tensor<S>, Tensor<S>, Tensor<S>) {
    let (c_in, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (c_out, kh, kw) = (kernels.shape()[0], kernels.shape()[2], kernels.shape()[3]);
    let (oh, ow) = (grad_out.shape()[1], grad_out.shape()[2]);
    let x = input.data();
    let k = kernels.data();
    let g = grad_out.data();
    let mut gi = vec![S::zero(); x.len()];
    let mut gk = vec![S::zero(); k.len()];
    let mut gb = vec![S::zero(); c_out];
    // Output gradient laid out with the input's row stride (zero past `ow`),
    // as in the forward pass.
    let mut gwide = vec![S::zero(); oh * w];
    for o in 0..c_out {
        let gplane = &g[o * oh * ow..(o + 1) * oh * ow];
        gb[o] = gplane.iter().copied().sum();
        for y in 0..oh {
            gwide[y * w..y * w + ow].copy_from_slice(&gplane[y * ow..(y + 1) * ow]);
        }
        for c in 0..c_in {
            let src = &x[c * h * w..(c + 1) * h * w];
            let dst = &mut gi[c * h * w..(c + 1) * h * w];
            for dy in 0..kh {
                for dx in 0..kw {
                    let kidx = ((o * c_in + c) * kh + dy) * kw + dx;
                    let wt = k[kidx];
                    let len = oh * w - dx;
                    let off = dy * w + dx;
                    let gw = &gwide[..len];
                    gk[kidx] += gw.iter().zip(&src[off..off + len]).fold(S::zero(), |s, (&a, &b)| s + a * b);
                    for (d, &gv) in dst[off..off + len].iter_mut().zip(gw) {
                        *d += wt * gv;
                    }
                }
            }
        }
    }
    (
        Tensor::new(input.shape(), gi).expect("shape"),
        Tensor::new(kernels.shape(), gk).expect("shape"),
        Tensor::new(&[c_out], gb).expect("shape"),
    )
}

/// Stride-1 transposed convolution ("deconvolution"), growing each spatial
/// axis by `K - 1`.
///
/// `input` is `[C_in, H, W]`, `kernels` is `[C_in, C_out, KH, KW]`, `bias` is `[C_out]`.
pub fn conv_transpose2d<S: Scalar>(
    input: &Tensor<S>,
    kernels: &Tensor<S>,
    bias: &Tensor<S>,
) -> Result<Tensor<S>> {
    expect_rank(input, 3, "conv_transpose2d input")?;
    expect_rank(kernels, 4, "conv_transpose2d kernels")?;
    let (c_in, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (k_in, c_out, kh, kw) = (kernels.shape()[0], kernels.shape()[1], kernels.shape()[2], kernels.shape()[3]);
    if k_in != c_in {
        return Err(Error::shape(format!(
            "conv_transpose2d channel axis: input has {c_in} channels, kernels expect {k_in}"
        )));
    }
    if bias.shape() != [c_out] {
        return Err(Error::shape(format!(
            "conv_transpose2d bias axis: expected [{c_out}], got {:?}",
            bias.shape()
        )));
    }
    let (oh, ow) = (h + kh - 1, w + kw - 1);
    let x = input.data();
    let k = kernels.data();
    let mut out = vec![S::zero(); c_out * oh * ow];
    for o in 0..c_out {
        let plane = &mut out[o * oh * ow..(o + 1) * oh * ow];
        plane.iter_mut().for_each(|v| *v = bias.data()[o]);
        for c in 0..c_in {
            let src = &x[c * h * w..(c + 1) * h * w];
            for dy in 0..kh {
                for dx in 0..kw {
                    let wt = k[((c * c_out + o) * kh + dy) * kw + dx];
                    for y in 0..h {
                        let off = (y + dy) * ow + dx;
                        for (d, &v) in plane[off..off + w].iter_mut().zip(&src[y * w..(y + 1) * w]) {
                            *d += wt * v;
                        }
                    }
                }
            }
        }
    }
    Tensor::new(&[c_out, oh, ow], out)
}

/// Gradients of [`conv_transpose2d`] with respect to input, kernels and bias.
pub fn conv_transpose2d_backward<S: Scalar>(
    input: &Tensor<S>,
    kernels: &Tensor<S>,
    grad_out: &Tensor<S>,
) -> (Tensor<S>, Tensor<S>, Tensor<S>) {
    let (c_in, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (c_out, kh, kw) = (kernels.shape()[1], kernels.shape()[2], kernels.shape()[3]);
    let (oh, ow) = (grad_out.shape()[1], grad_out.shape()[2]);
    let x = input.data();
    let k = kernels.data();
    let g = grad_out.data();
    let mut gi = vec![S::zero(); x.len()];
    let mut gk = vec![S::zero(); k.len()];
    let mut gb = vec![S::zero(); c_out];
    for o in 0..c_out {
        let gplane = &g[o * oh * ow..(o + 1) * oh * ow];
        gb[o] = gplane.iter().copied().sum();
        for c in 0..c_in {
            let src = &x[c * h * w..(c + 1) * h * w];
            let dst = &mut gi[c * h * w..(c + 1) * h * w];
            for dy in 0..kh {
                for dx in 0..kw {
                    let kidx = ((c * c_out + o) * kh + dy) * kw + dx;
                    let wt = k[kidx];
                    let mut acc = S::zero();
                    for y in 0..h {
                        let off = (y + dy) * ow + dx;
                        let grow = &gplane[off..off + w];
                        let row_in = &src[y * w..(y + 1) * w];
                        acc += grow.iter().zip(row_in).fold(S::zero(), |s, (&a, &b)| s + a * b);
                        for (d, &gv) in dst[y * w..(y + 1) * w].iter_mut().zip(grow) {
                            *d += wt * gv;
                        }
                    }
                    gk[kidx] += acc;
                }
            }
        }
    }
    (
        Tensor::new(input.shape(), gi).expect("shape"),
        Tensor::new(kernels.shape(), gk).expect("shape"),
        Tensor::new(&[c_out], gb).expect("shape"),
    )
}

/// 2x2 max pooling with stride 2. Returns the pooled tensor and, for every
/// output element, the flat input index that won. Ties go to the first
/// element in row-major window order; a trailing odd row or column is dropped.
pub fn maxpool2d<S: Scalar>(input: &Tensor<S>) -> Result<(Tensor<S>, Vec<usize>)> {
    expect_rank(input, 3, "maxpool2d input")?;
    let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    if h < 2 || w < 2 {
        return Err(Error::shape(format!("maxpool2d needs at least 2x2 planes, got {h}x{w}")));
    }
    let (oh, ow) = (h / 2, w / 2);
    let x = input.data();
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut argmax = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        let base = ch * h * w;
        for y in 0..oh {
            for xo in 0..ow {
                let mut best = base + 2 * y * w + 2 * xo;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = base + (2 * y + dy) * w + 2 * xo + dx;
                    if x[idx] > x[best] {
                        best = idx;
                    }
                }
                out.push(x[best]);
                argmax.push(best);
            }
        }
    }
    Ok((Tensor::new(&[c, oh, ow], out)?, argmax))
}

/// Routes `grad_out` back to the winning positions recorded by [`maxpool2d`].
pub fn maxpool2d_backward<S: Scalar>(input_shape: &[usize], argmax: &[usize], grad_out: &Tensor<S>) -> Tensor<S> {
    let mut gi = Tensor::zeros(input_shape);
    let d = gi.data_mut();
    for (&idx, &g) in argmax.iter().zip(grad_out.data()) {
        d[idx] += g;
    }
    gi
}

/// `weight · input (+ bias)` with `weight` shaped `[M, N]`.
pub fn dense<S: Scalar>(input: &Tensor<S>, weight: &Tensor<S>, bias: Option<&Tensor<S>>) -> Result<Tensor<S>> {
    expect_rank(weight, 2, "dense weight")?;
    let (m, n) = (weight.shape()[0], weight.shape()[1]);
    if input.len() != n {
        return Err(Error::shape(format!(
            "dense input axis: weight expects {n} inputs, got {} (shape {:?})",
            input.len(),
            input.shape()
        )));
    }
    if let Some(b) = bias {
        if b.shape() != [m] {
            return Err(Error::shape(format!(
                "dense bias axis: expected [{m}], got {:?}",
                b.shape()
            )));
        }
    }
    let x = input.data();
    let out = weight
        .data()
        .chunks_exact(n)
        .enumerate()
        .map(|(i, row)| {
            let dot = row.iter().zip(x).fold(S::zero(), |s, (&a, &b)| s + a * b);
            dot + bias.map_or(S::zero(), |b| b.data()[i])
        })
        .collect();
    Tensor::new(&[m], out)
}

/// Gradients of [`dense`]: `(d input, d weight, d bias)`.
pub fn dense_backward<S: Scalar>(
    input: &Tensor<S>,
    weight: &Tensor<S>,
    grad_out: &Tensor<S>,
) -> (Tensor<S>, Tensor<S>, Tensor<S>) {
    let n = weight.shape()[1];
    let x = input.data();
    let g = grad_out.data();
    let mut gi = vec![S::zero(); n];
    let mut gw = vec![S::zero(); weight.len()];
    for (i, (row, grow)) in weight.data().chunks_exact(n).zip(gw.chunks_exact_mut(n)).enumerate() {
        let gv = g[i];
        for j in 0..n {
            gi[j] += row[j] * gv;
            grow[j] = gv * x[j];
        }
    }
    (
        Tensor::new(input.shape(), gi).expect("shape"),
        Tensor::new(weight.shape(), gw).expect("shape"),
        grad_out.clone(),
    )
}

/// Numerically stable logistic function, held strictly inside (0, 1).
pub fn sigmoid<S: Scalar>(x: S) -> S {
    let y = if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    };
    let upper = S::one() - S::epsilon() / S::lit(2.0);
    y.max(S::min_positive_value()).min(upper)
}

/// Zero-pads or crops the spatial axes of a rank-3 tensor to `h x w`,
/// anchored at the top-left corner.
pub fn crop_pad<S: Scalar>(input: &Tensor<S>, h: usize, w: usize) -> Result<Tensor<S>> {
    expect_rank(input, 3, "crop_pad input")?;
    let (c, ih, iw) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let mut out = Tensor::zeros(&[c, h, w]);
    let (ch, cw) = (ih.min(h), iw.min(w));
    let x = input.data();
    let d = out.data_mut();
    for ch_i in 0..c {
        for y in 0..ch {
            let src = &x[(ch_i * ih + y) * iw..(ch_i * ih + y) * iw + cw];
            d[(ch_i * h + y) * w..(ch_i * h + y) * w + cw].copy_from_slice(src);
        }
    }
    Ok(out)
}

/// Adjoint of [`crop_pad`]: places `grad_out` back into an `input_shape` tensor.
pub fn crop_pad_backward<S: Scalar>(input_shape: &[usize], grad_out: &Tensor<S>) -> Tensor<S> {
    let (ih, iw) = (input_shape[1], input_shape[2]);
    crop_pad(grad_out, ih, iw).expect("rank 3")
}

/// Nearest-neighbour 2x upsampling of the spatial axes.
pub fn upsample2x<S: Scalar>(input: &Tensor<S>) -> Result<Tensor<S>> {
    expect_rank(input, 3, "upsample input")?;
    let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (oh, ow) = (2 * h, 2 * w);
    let out = Tensor::from_fn(&[c, oh, ow], |i| {
        let ch = i / (oh * ow);
        let y = (i / ow) % oh;
        let x = i % ow;
        input.at3(ch, y / 2, x / 2)
    });
    Ok(out)
}

pub fn upsample2x_backward<S: Scalar>(input_shape: &[usize], grad_out: &Tensor<S>) -> Tensor<S> {
    let (h, w) = (input_shape[1], input_shape[2]);
    let (oh, ow) = (2 * h, 2 * w);
    let mut gi = Tensor::zeros(input_shape);
    let d = gi.data_mut();
    for (i, &g) in grad_out.data().iter().enumerate() {
        let ch = i / (oh * ow);
        let y = (i / ow) % oh;
        let x = i % ow;
        d[(ch * h + y / 2) * w + x / 2] += g;
    }
    gi
}

/// Mean over the channel axis: `[C, H, W] -> [1, H, W]`.
pub fn channel_mean<S: Scalar>(input: &Tensor<S>) -> Result<Tensor<S>> {
    expect_rank(input, 3, "channel_mean input")?;
    let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let plane = h * w;
    let scale = S::one() / S::from_usize(c).expect("channel count");
    let mut out = vec![S::zero(); plane];
    for chunk in input.data().chunks_exact(plane) {
        for (o, &v) in out.iter_mut().zip(chunk) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|v| *v *= scale);
    Tensor::new(&[1, h, w], out)
}

pub fn channel_mean_backward<S: Scalar>(input_shape: &[usize], grad_out: &Tensor<S>) -> Tensor<S> {
    let c = input_shape[0];
    let scale = S::one() / S::from_usize(c).expect("channel count");
    let g = grad_out.data();
    let plane = g.len();
    Tensor::from_fn(input_shape, |i| g[i % plane] * scale)
}

/// Stacks the channels of `a` before those of `b`.
pub fn concat_channels<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Result<Tensor<S>> {
    expect_rank(a, 3, "concat_channels first operand")?;
    expect_rank(b, 3, "concat_channels second operand")?;
    if a.shape()[1] != b.shape()[1] {
        return Err(Error::shape(format!(
            "concat_channels height axis: {} vs {}",
            a.shape()[1],
            b.shape()[1]
        )));
    }
    if a.shape()[2] != b.shape()[2] {
        return Err(Error::shape(format!(
            "concat_channels width axis: {} vs {}",
            a.shape()[2],
            b.shape()[2]
        )));
    }
    let mut data = Vec::with_capacity(a.len() + b.len());
    data.extend_from_slice(a.data());
    data.extend_from_slice(b.data());
    Tensor::new(&[a.shape()[0] + b.shape()[0], a.shape()[1], a.shape()[2]], data)
}

/// Binary cross-entropy with the prediction clamped to `[1e-7, 1 - 1e-7]`.
pub fn bce<S: Scalar>(prediction: S, label: S) -> S {
    let p = clamp_probability(prediction);
    -(label * p.ln() + (S::one() - label) * (S::one() - p).ln())
}

/// d bce / d prediction, evaluated at the clamped prediction.
pub fn bce_grad<S: Scalar>(prediction: S, label: S) -> S {
    let p = clamp_probability(prediction);
    -label / p + (S::one() - label) / (S::one() - p)
}

pub const BCE_EPSILON: f64 = 1e-7;

fn clamp_probability<S: Scalar>(p: S) -> S {
    let eps = S::lit(BCE_EPSILON);
    p.max(eps).min(S::one() - eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor<f64> {
        Tensor::new(shape, data.to_vec()).unwrap()
    }

    #[test]
    fn conv2d_zero_input_yields_bias() {
        let input = Tensor::zeros(&[2, 4, 5]);
        let k = Tensor::from_fn(&[3, 2, 2, 2], |i| i as f64 * 0.1);
        let b = t(&[3], &[0.5, -1.0, 2.0]);
        let out = conv2d(&input, &k, &b).unwrap();
        assert_eq!(out.shape(), &[3, 3, 4]);
        for o in 0..3 {
            for y in 0..3 {
                for x in 0..4 {
                    assert_eq!(out.at3(o, y, x), b.data()[o]);
                }
            }
        }
    }

    #[test]
    fn conv2d_hand_case() {
        let input = t(&[1, 2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let k = t(&[1, 1, 2, 2], &[1.0, 0.0, 0.0, 1.0]);
        let out = conv2d(&input, &k, &t(&[1], &[0.0])).unwrap();
        assert_eq!(out.shape(), &[1, 1, 1]);
        assert_eq!(out.data(), &[5.0]);
    }

    #[test]
    fn conv2d_errors_name_the_axis() {
        let k = Tensor::<f64>::zeros(&[1, 2, 2, 2]);
        let b = Tensor::zeros(&[1]);
        let err = conv2d(&Tensor::zeros(&[3, 4, 4]), &k, &b).unwrap_err().to_string();
        assert!(err.contains("channel axis"), "{err}");
        let err = conv2d(&Tensor::zeros(&[2, 1, 4]), &k, &b).unwrap_err().to_string();
        assert!(err.contains("height axis"), "{err}");
        let err = conv2d(&Tensor::zeros(&[2, 4, 1]), &k, &b).unwrap_err().to_string();
        assert!(err.contains("width axis"), "{err}");
        let err = conv2d(&Tensor::zeros(&[2, 4, 4]), &k, &Tensor::zeros(&[2])).unwrap_err().to_string();
        assert!(err.contains("bias axis"), "{err}");
    }

    #[test]
    fn maxpool_hand_case_and_ties() {
        let (out, _) = maxpool2d(&t(&[1, 2, 2], &[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(out.data(), &[4.0]);

        let input = Tensor::full(&[1, 4, 4], 3.0);
        let (out, argmax) = maxpool2d(&input).unwrap();
        assert!(out.data().iter().all(|&v| v == 3.0));
        let g = maxpool2d_backward(input.shape(), &argmax, &Tensor::full(&[1, 2, 2], 1.0));
        // every window routes to its top-left element
        let expected = [1., 0., 1., 0., 0., 0., 0., 0., 1., 0., 1., 0., 0., 0., 0., 0.];
        assert_eq!(g.data(), &expected);
    }

    #[test]
    fn maxpool_drops_trailing_odd_row_and_column() {
        let input = Tensor::from_fn(&[1, 5, 5], |i| i as f64);
        let (out, _) = maxpool2d(&input).unwrap();
        assert_eq!(out.shape(), &[1, 2, 2]);
        assert_eq!(out.data(), &[6.0, 8.0, 16.0, 18.0]);
        assert!(maxpool2d(&Tensor::<f64>::zeros(&[1, 1, 4])).is_err());
        assert!(maxpool2d(&Tensor::<f64>::zeros(&[1, 4, 1])).is_err());
    }

    #[test]
    fn dense_cases() {
        let w = t(&[2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let out = dense(&t(&[2], &[1.0, 1.0]), &w, Some(&t(&[2], &[0.0, 1.0]))).unwrap();
        assert_eq!(out.data(), &[3.0, 8.0]);

        let eye = t(&[3, 3], &[1., 0., 0., 0., 1., 0., 0., 0., 1.]);
        let x = t(&[3], &[0.3, -2.0, 7.5]);
        assert_eq!(dense(&x, &eye, Some(&Tensor::zeros(&[3]))).unwrap().data(), x.data());

        let b = t(&[2], &[0.25, -0.5]);
        assert_eq!(dense(&Tensor::zeros(&[2]), &w, Some(&b)).unwrap().data(), b.data());

        assert!(dense(&Tensor::zeros(&[3]), &w, None).is_err());
        assert!(dense(&Tensor::zeros(&[2]), &w, Some(&Tensor::zeros(&[3]))).is_err());
    }

    #[test]
    fn sigmoid_stays_inside_open_interval() {
        assert_eq!(sigmoid(0.0_f64), 0.5);
        for x in [-1e6, -800.0, -40.0, 40.0, 800.0, 1e6] {
            let y = sigmoid(x);
            assert!(y > 0.0 && y < 1.0, "sigmoid({x}) = {y}");
        }
        let y = sigmoid(100.0_f32);
        assert!(y > 0.0 && y < 1.0);
    }

    #[test]
    fn bce_closed_forms() {
        assert!((bce(0.5_f64, 1.0) - 2f64.ln()).abs() < 1e-15);
        assert!((bce(0.9_f64, 0.0) - 10f64.ln()).abs() < 1e-12);
        assert!(bce(1.0_f64 - 1e-12, 1.0) < 1.1e-7);
        assert!(bce(1.0_f64, 0.0).is_finite());
    }

    #[test]
    fn concat_then_split_is_identity() {
        let a = Tensor::from_fn(&[1, 2, 2], |i| i as f64 + 1.0);
        let b = Tensor::zeros(&[1, 2, 2]);
        let c = concat_channels(&a, &b).unwrap();
        assert_eq!(c.shape(), &[2, 2, 2]);
        assert_eq!(c.channels(0, 1).unwrap(), a);
        assert!(concat_channels(&a, &Tensor::zeros(&[1, 3, 2])).is_err());
    }

    #[test]
    fn crop_pad_round_trip() {
        let a = Tensor::from_fn(&[2, 3, 4], |i| i as f64);
        let padded = crop_pad(&a, 5, 6).unwrap();
        assert_eq!(crop_pad(&padded, 3, 4).unwrap(), a);
        assert_eq!(padded.at3(1, 4, 5), 0.0);
    }
}
