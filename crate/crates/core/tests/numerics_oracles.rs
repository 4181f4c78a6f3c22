//! Brute-force references and finite-difference checks for the layer kernels.

use proptest::prelude::*;
use rand::Rng;
use stain_core::numerics::gradcheck::{central_difference, max_relative_error};
use stain_core::numerics::{kernels, seeded_rng, Activation, SeededRng, Tape, Tensor, Var};

fn random(shape: &[usize], rng: &mut SeededRng) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.random_range(-1.0..1.0))
}

fn conv_oracle(input: &Tensor<f64>, k: &Tensor<f64>, b: &Tensor<f64>) -> Vec<f64> {
    let (c_in, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let c_out = k.shape()[0];
    let mut out = Vec::new();
    for o in 0..c_out {
        for y in 0..h - 1 {
            for x in 0..w - 1 {
                let mut acc = b.data()[o];
                for c in 0..c_in {
                    for dy in 0..2 {
                        for dx in 0..2 {
                            acc += input.at3(c, y + dy, x + dx) * k.data()[((o * c_in + c) * 2 + dy) * 2 + dx];
                        }
                    }
                }
                out.push(acc);
            }
        }
    }
    out
}

fn pool_oracle(input: &Tensor<f64>) -> Vec<f64> {
    let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let mut out = Vec::new();
    for ch in 0..c {
        for y in 0..h / 2 {
            for x in 0..w / 2 {
                let mut m = f64::NEG_INFINITY;
                for dy in 0..2 {
                    for dx in 0..2 {
                        m = m.max(input.at3(ch, 2 * y + dy, 2 * x + dx));
                    }
                }
                out.push(m);
            }
        }
    }
    out
}

fn dense_oracle(x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>) -> Vec<f64> {
    let (m, n) = (w.shape()[0], w.shape()[1]);
    (0..m)
        .map(|i| b.data()[i] + (0..n).map(|j| w.data()[i * n + j] * x.data()[j]).sum::<f64>())
        .collect()
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        assert!((x - y).abs() <= tol, "element {i}: {x} vs {y}");
    }
}

#[test]
fn conv2d_matches_loop_oracle_on_5x5() {
    let mut rng = seeded_rng(11);
    let input = random(&[1, 5, 5], &mut rng);
    let k = random(&[1, 1, 2, 2], &mut rng);
    let b = random(&[1], &mut rng);
    let out = kernels::conv2d(&input, &k, &b).unwrap();
    assert_close(out.data(), &conv_oracle(&input, &k, &b), 1e-12);
}

#[test]
fn maxpool_matches_loop_oracle_on_5x5() {
    let mut rng = seeded_rng(12);
    let input = random(&[1, 5, 5], &mut rng);
    let (out, _) = kernels::maxpool2d(&input).unwrap();
    assert_eq!(out.shape(), &[1, 2, 2]);
    assert_close(out.data(), &pool_oracle(&input), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernels_match_oracles(c_in in 1usize..4, c_out in 1usize..4, h in 2usize..9, w in 2usize..9, seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let input = random(&[c_in, h, w], &mut rng);
        let k = random(&[c_out, c_in, 2, 2], &mut rng);
        let b = random(&[c_out], &mut rng);
        let out = kernels::conv2d(&input, &k, &b).unwrap();
        prop_assert_eq!(out.shape(), &[c_out, h - 1, w - 1]);
        assert_close(out.data(), &conv_oracle(&input, &k, &b), 1e-12);

        let (pooled, _) = kernels::maxpool2d(&input).unwrap();
        assert_close(pooled.data(), &pool_oracle(&input), 0.0);

        let x = random(&[h * w], &mut rng);
        let wt = random(&[c_out * 3, h * w], &mut rng);
        let bias = random(&[c_out * 3], &mut rng);
        let d = kernels::dense(&x, &wt, Some(&bias)).unwrap();
        assert_close(d.data(), &dense_oracle(&x, &wt, &bias), 1e-12);
    }

    #[test]
    fn sigmoid_strictly_inside_unit_interval(x in proptest::num::f64::NORMAL | proptest::num::f64::ZERO) {
        let y = kernels::sigmoid(x);
        prop_assert!(y > 0.0 && y < 1.0);
    }
}

/// Builds a scalar loss `sum(weights ⊙ f(inputs))` and checks the analytic
/// gradient with respect to every input against central differences.
fn check_gradients(shapes: &[&[usize]], seed: u64, f: impl Fn(&mut Tape<f64>, &[Var]) -> Var) {
    let mut rng = seeded_rng(seed);
    let inputs: Vec<Tensor<f64>> = shapes.iter().map(|s| random(s, &mut rng)).collect();
    let probe = {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.input(t.clone())).collect();
        let out = f(&mut tape, &vars);
        tape.value(out).clone()
    };
    let projection = random(&[1, probe.len()], &mut rng);

    let loss_of = |vals: &[Tensor<f64>]| -> (f64, Vec<Option<Tensor<f64>>>) {
        let mut tape = Tape::new();
        let vars: Vec<Var> = vals.iter().map(|t| tape.input(t.clone())).collect();
        let out = f(&mut tape, &vars);
        let flat = tape.flatten(out).unwrap();
        let w = tape.input(projection.clone());
        let loss = tape.dense(flat, w, None).unwrap();
        let grads = tape.backward(loss, 1.0).unwrap();
        (tape.value(loss).item(), vars.iter().map(|&v| grads.wrt(v).cloned()).collect())
    };

    let (_, analytic) = loss_of(&inputs);
    for (i, x) in inputs.iter().enumerate() {
        let numeric = central_difference(
            |probe| {
                let mut vals = inputs.clone();
                vals[i] = probe.clone();
                loss_of(&vals).0
            },
            x,
            1e-5,
        );
        let analytic = analytic[i].clone().unwrap_or_else(|| Tensor::zeros(x.shape()));
        let err = max_relative_error(&analytic, &numeric, 1e-6);
        assert!(err < 1e-4, "input {i}: relative error {err:e}");
    }
}

#[test]
fn conv2d_gradients() {
    check_gradients(&[&[2, 5, 4], &[3, 2, 2, 2], &[3]], 1, |t, v| t.conv2d(v[0], v[1], v[2]).unwrap());
}

#[test]
fn conv_transpose2d_gradients() {
    check_gradients(&[&[2, 4, 3], &[2, 3, 2, 2], &[3]], 2, |t, v| t.conv_transpose2d(v[0], v[1], v[2]).unwrap());
}

#[test]
fn maxpool_gradients() {
    check_gradients(&[&[2, 5, 6]], 3, |t, v| t.maxpool2d(v[0]).unwrap());
}

#[test]
fn dense_gradients() {
    check_gradients(&[&[7], &[4, 7], &[4]], 4, |t, v| t.dense(v[0], v[1], Some(v[2])).unwrap());
}

#[test]
fn activation_gradients() {
    for (seed, kind) in [(5, Activation::Relu), (6, Activation::Sigmoid), (7, Activation::Tanh)] {
        check_gradients(&[&[3, 4]], seed, move |t, v| t.activation(v[0], kind));
    }
}

#[test]
fn tanh_derivative_at_point_three() {
    let f = |x: &Tensor<f64>| x.data()[0].tanh();
    let numeric = central_difference(f, &Tensor::scalar(0.3), 1e-5).item();
    let mut tape = Tape::new();
    let x = tape.input(Tensor::scalar(0.3));
    let y = tape.tanh(x);
    let analytic = tape.backward(y, 1.0).unwrap().wrt(x).unwrap().item();
    assert!(((analytic - numeric) / analytic).abs() < 1e-6);
}

#[test]
fn structural_op_gradients() {
    check_gradients(&[&[1, 3, 4], &[2, 3, 4]], 8, |t, v| t.concat_channels(v[0], v[1]).unwrap());
    check_gradients(&[&[3, 4, 5]], 9, |t, v| t.channel_mean(v[0]).unwrap());
    check_gradients(&[&[2, 3, 2]], 10, |t, v| t.upsample2x(v[0]).unwrap());
    check_gradients(&[&[2, 3, 5]], 11, |t, v| t.crop_pad(v[0], 4, 3).unwrap());
    check_gradients(&[&[3], &[3]], 12, |t, v| t.add(v[0], v[1]).unwrap());
}

#[test]
fn bce_and_max_gradients() {
    // probabilities kept away from the clamp so the loss is smooth
    check_gradients(&[&[1]], 13, |t, v| {
        let p = t.sigmoid(v[0]);
        t.bce(p, 1.0).unwrap()
    });
    check_gradients(&[&[1], &[1], &[1]], 14, |t, v| {
        let m = t.max(v).unwrap();
        let p = t.sigmoid(m);
        t.bce(p, 0.0).unwrap()
    });
}

#[test]
fn bce_closed_forms() {
    let loss = |p: f64, y: f64| {
        let mut tape = Tape::new();
        let v = tape.input(Tensor::scalar(p));
        let l = tape.bce(v, y).unwrap();
        tape.value(l).item()
    };
    assert!((loss(0.5, 1.0) - std::f64::consts::LN_2).abs() < 1e-12);
    assert!((loss(0.9, 0.0) - std::f64::consts::LN_10).abs() < 1e-12);
    assert!(loss(1.0, 1.0) >= 0.0 && loss(1.0, 1.0) < 1e-6);
}

#[test]
fn kernels_run_in_single_precision() {
    let mut rng = seeded_rng(21);
    let input64 = random(&[2, 6, 5], &mut rng);
    let k64 = random(&[3, 2, 2, 2], &mut rng);
    let b64 = random(&[3], &mut rng);
    let to32 = |t: &Tensor<f64>| Tensor::<f32>::new(t.shape(), t.data().iter().map(|&v| v as f32).collect()).unwrap();
    let out64 = kernels::conv2d(&input64, &k64, &b64).unwrap();
    let out32 = kernels::conv2d(&to32(&input64), &to32(&k64), &to32(&b64)).unwrap();
    for (a, b) in out64.data().iter().zip(out32.data()) {
        assert!((a - *b as f64).abs() < 1e-5);
    }
}

#[test]
fn deterministic_outputs_and_gradients() {
    let run = || {
        let mut rng = seeded_rng(99);
        let x = random(&[2, 6, 6], &mut rng);
        let k = random(&[2, 2, 2, 2], &mut rng);
        let b = random(&[2], &mut rng);
        let mut tape = Tape::new();
        let (xv, kv, bv) = (tape.input(x), tape.input(k), tape.input(b));
        let c = tape.conv2d(xv, kv, bv).unwrap();
        let p = tape.maxpool2d(c).unwrap();
        let f = tape.flatten(p).unwrap();
        let w = tape.input(Tensor::full(&[1, 8], 0.5));
        let d = tape.dense(f, w, None).unwrap();
        let s = tape.sigmoid(d);
        let g = tape.backward(s, 1.0).unwrap();
        (tape.value(s).item().to_bits(), g.wrt(kv).unwrap().clone())
    };
    assert_eq!(run(), run());
}
