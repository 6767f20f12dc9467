use bvol::nn::{
    checkpoint_json, Activation, AnyNetwork, LayerSpec, Network, Padding, Shape, DropoutConfig, Optimizer,
    TrainConfig,
};
use bvol::rng;
use proptest::prelude::*;
use rand::Rng;

/// A random small network with random biases. Even seeds give FC nets, odd
/// seeds conv nets.
fn random_net(seed: u64) -> Network<f64> {
    let mut r = rng::stream(seed, 0xabc, 0);
    let act = if r.random_bool(0.5) { Activation::Relu } else { Activation::Tanh };
    let classes = r.random_range(2..5);
    let (specs, input) = if seed % 2 == 0 {
        let n = r.random_range(1..7);
        let h = r.random_range(2..9);
        (
            vec![LayerSpec::dense(n, h, act), LayerSpec::dense(h, classes, Activation::Softmax)],
            Shape::Flat(n),
        )
    } else {
        let c = r.random_range(1..3);
        let side = 2 * r.random_range(2..4);
        let oc = r.random_range(1..4);
        let k = r.random_range(1..4);
        let stride = r.random_range(1..3);
        let padding = if r.random_bool(0.5) { Padding::Same } else { Padding::Valid };
        let conv = LayerSpec::Conv2d {
            in_channels: c,
            out_channels: oc,
            kernel_size: k,
            stride,
            padding,
            activation: act,
        };
        let input = Shape::Image {
            channels: c,
            height: side,
            width: side,
        };
        let o = conv_out(side, k, stride, padding);
        let mut specs = vec![conv];
        let mut flat = o * o * oc;
        if o >= 2 && r.random_bool(0.5) {
            specs.push(LayerSpec::pool(2, 2));
            let p = (o - 2) / 2 + 1;
            flat = p * p * oc;
        }
        specs.push(LayerSpec::Flatten);
        specs.push(LayerSpec::dense(flat, classes, Activation::Softmax));
        (specs, input)
    };
    let mut net = Network::<f64>::build(&specs, input).unwrap();
    net.init_he_normal(seed);
    for p in net.params_mut() {
        for b in &mut p.biases {
            *b = r.random_range(-0.3..0.3);
        }
    }
    net
}

fn conv_out(side: usize, k: usize, stride: usize, padding: Padding) -> usize {
    match padding {
        Padding::Same => side.div_ceil(stride),
        Padding::Valid => (side - k) / stride + 1,
    }
}

fn random_input(net: &Network<f64>, seed: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, 0xdef, 1);
    (0..net.num_inputs()).map(|_| r.random::<f64>()).collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = a.iter().chain(b).map(|v| v.abs()).fold(1e-12, f64::max);
    diff / scale
}

const FD_STEP: f64 = 1e-6;

#[test]
fn input_gradients_match_finite_differences() {
    let mut worst = 0.0f64;
    for seed in 0..120u64 {
        let net = random_net(seed);
        let x = random_input(&net, seed);
        let label = seed as usize % net.num_outputs();
        let analytic = net.loss_and_input_grad(&x, label).unwrap().grad;
        let numeric: Vec<f64> = (0..x.len())
            .map(|i| {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += FD_STEP;
                xm[i] -= FD_STEP;
                let lp = net.loss_and_input_grad(&xp, label).unwrap().loss;
                let lm = net.loss_and_input_grad(&xm, label).unwrap().loss;
                (lp - lm) / (2.0 * FD_STEP)
            })
            .collect();
        let e = rel_err(&analytic, &numeric);
        assert!(e <= 1e-5, "seed {seed}: relative error {e}");
        worst = worst.max(e);
    }
    eprintln!("worst input-gradient relative error {worst:.2e}");
}

#[test]
fn parameter_gradients_match_finite_differences() {
    for seed in 0..120u64 {
        let net = random_net(seed);
        let x = random_input(&net, seed);
        let label = (seed as usize + 1) % net.num_outputs();
        let (_, grads) = net.loss_and_param_grads(&x, label).unwrap();
        let mut analytic = Vec::new();
        let mut numeric = Vec::new();
        for layer in 0..net.params().len() {
            let (nw, nb) = (net.params()[layer].weights.len(), net.params()[layer].biases.len());
            for k in 0..nw + nb {
                let perturbed = |delta: f64| {
                    let mut n = net.clone();
                    let p = &mut n.params_mut()[layer];
                    if k < nw {
                        p.weights[k] += delta;
                    } else {
                        p.biases[k - nw] += delta;
                    }
                    n.loss_and_input_grad(&x, label).unwrap().loss
                };
                numeric.push((perturbed(FD_STEP) - perturbed(-FD_STEP)) / (2.0 * FD_STEP));
                let g = &grads.0[layer];
                analytic.push(if k < nw { g.weights[k] } else { g.biases[k - nw] });
            }
        }
        let e = rel_err(&analytic, &numeric);
        assert!(e <= 1e-5, "seed {seed}: relative error {e}");
    }
}

#[test]
fn relu_networks_are_piecewise_linear() {
    for seed in 0..50u64 {
        let specs = [
            LayerSpec::dense(4, 16, Activation::Relu),
            LayerSpec::dense(16, 8, Activation::Relu),
            LayerSpec::dense(8, 3, Activation::Softmax),
        ];
        let mut net = Network::<f64>::build(&specs, Shape::Flat(4)).unwrap();
        net.init_he_normal(seed);
        let mut r = rng::stream(seed, 0x77, 0);
        let x: Vec<f64> = (0..4).map(|_| r.random()).collect();
        let d: Vec<f64> = (0..4).map(|_| r.random_range(-1.0..1.0)).collect();
        let logits = |t: f64| {
            let p: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            net.forward(&p).unwrap().logits
        };
        let (a, b, c) = (logits(0.0), logits(1e-7), logits(2e-7));
        for k in 0..3 {
            assert!((b[k] - (a[k] + c[k]) / 2.0).abs() < 1e-9, "seed {seed}");
        }
    }
}

#[test]
fn evaluation_ignores_dropout() {
    let net = random_net(4);
    let x = random_input(&net, 4);
    assert_eq!(net.forward(&x).unwrap(), net.forward_train(&x, None).unwrap());
}

#[test]
fn mnist_fc_has_expected_parameter_count() {
    let specs = [
        LayerSpec::dense(784, 100, Activation::Relu),
        LayerSpec::dense(100, 10, Activation::Softmax),
    ];
    let net = Network::<f32>::build(&specs, Shape::Flat(784)).unwrap();
    assert_eq!(net.num_params(), 784 * 100 + 100 + 100 * 10 + 10);
}

#[test]
fn training_with_same_seed_is_identical() {
    let data = bvol::data::make_synthetic(bvol::data::SyntheticKind::Annulus { dim: 2 }, 64, 3).unwrap();
    let specs = [
        LayerSpec::dense(2, 16, Activation::Relu),
        LayerSpec::dense(16, 2, Activation::Softmax),
    ];
    let cfg = TrainConfig {
        optimizer: Optimizer::adam(0.01),
        batch_size: 32,
        epochs: 3,
        seed: 8,
    };
    let run = || {
        let mut net = Network::<f32>::build(&specs, Shape::Flat(2)).unwrap();
        net.init_he_normal(8);
        bvol::nn::train(net, &data, &cfg, &DropoutConfig::rate(0.2)).unwrap()
    };
    assert_eq!(run(), run());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn softmax_sums_to_one(seed in 0u64..10_000, scale in 0.1f64..50.0) {
        let net = random_net(seed);
        let x: Vec<f64> = random_input(&net, seed).iter().map(|v| v * scale).collect();
        let p = net.forward(&x).unwrap().probs;
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&v| v >= 0.0));

        let single = net.cast::<f32>();
        let xs: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        let p = single.forward(&xs).unwrap().probs;
        prop_assert!((p.iter().map(|&v| v as f64).sum::<f64>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn single_precision_checkpoints_are_value_exact(bits in prop::collection::vec(any::<u32>(), 6)) {
        let specs = [LayerSpec::dense(2, 2, Activation::Softmax)];
        let mut net = Network::<f32>::build(&specs, Shape::Flat(2)).unwrap();
        let vals: Vec<f32> = bits
            .iter()
            .map(|&b| f32::from_bits(b))
            .map(|v| if v.is_finite() { v } else { 1.5 })
            .collect();
        net.params_mut()[0].weights.copy_from_slice(&vals[..4]);
        net.params_mut()[0].biases.copy_from_slice(&vals[4..]);
        let back = match AnyNetwork::from_json(&checkpoint_json(&net)).unwrap() {
            AnyNetwork::Single(n) => n,
            AnyNetwork::Double(_) => panic!("precision changed"),
        };
        for (a, b) in net.params()[0].weights.iter().chain(&net.params()[0].biases)
            .zip(back.params()[0].weights.iter().chain(&back.params()[0].biases))
        {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn double_precision_checkpoints_are_bit_exact(vals in prop::collection::vec(-1e300f64..1e300, 6)) {
        let specs = [LayerSpec::dense(2, 2, Activation::Softmax)];
        let mut net = Network::<f64>::build(&specs, Shape::Flat(2)).unwrap();
        net.params_mut()[0].weights.copy_from_slice(&vals[..4]);
        net.params_mut()[0].biases.copy_from_slice(&vals[4..]);
        let back = AnyNetwork::from_json(&checkpoint_json(&net)).unwrap();
        prop_assert_eq!(back, AnyNetwork::Double(net));
    }
}
