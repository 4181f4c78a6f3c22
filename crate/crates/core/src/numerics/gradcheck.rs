//! Central finite differences, used to validate analytic gradients.

use super::{Scalar, Tensor};

/// Central-difference gradient of `f` at `x` with step `h`.
pub fn central_difference<S: Scalar>(mut f: impl FnMut(&Tensor<S>) -> S, x: &Tensor<S>, h: S) -> Tensor<S> {
    let mut probe = x.clone();
    let two_h = h + h;
    let mut out = Tensor::zeros(x.shape());
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let up = f(&probe);
        probe.data_mut()[i] = orig - h;
        let down = f(&probe);
        probe.data_mut()[i] = orig;
        out.data_mut()[i] = (up - down) / two_h;
    }
    out
}

/// Largest `|a - b| / max(|a|, |b|, floor)` over all elements.
pub fn max_relative_error<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>, floor: S) -> S {
    assert_eq!(a.shape(), b.shape(), "compared tensors differ in shape");
    a.data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(S::zero(), S::max)
}
