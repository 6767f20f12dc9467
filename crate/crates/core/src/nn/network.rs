use rand_distr::{Distribution, Normal};

use super::layer::{self, LayerPlan};
use super::{DropoutMask, LayerSpec, NnError, Precision, Real, Shape};
use crate::classifier::{Classifier, GradientClassifier, LabelSet};
use crate::rng;

/// Cross-entropy clamps `log p` at this floor.
pub const LOG_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<T> {
    pub weights: Vec<T>,
    pub biases: Vec<T>,
}

impl<T: Real> LayerParams<T> {
    fn zeros(spec: &LayerSpec) -> Self {
        let (w, b) = spec.param_shape();
        LayerParams {
            weights: vec![T::zero(); w],
            biases: vec![T::zero(); b],
        }
    }

    fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.biases).all(|v| v.is_finite())
    }
}

/// Parameter gradients, laid out exactly like the network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T>(pub Vec<LayerParams<T>>);

impl<T: Real> Gradients<T> {
    pub fn zeros_like(net: &Network<T>) -> Self {
        Gradients(net.specs.iter().map(LayerParams::zeros).collect())
    }

    pub fn fill_zero(&mut self) {
        for p in &mut self.0 {
            p.weights.fill(T::zero());
            p.biases.fill(T::zero());
        }
    }

    pub fn add_assign(&mut self, other: &Gradients<T>) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (x, &y) in a.weights.iter_mut().zip(&b.weights) {
                *x += y;
            }
            for (x, &y) in a.biases.iter_mut().zip(&b.biases) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: T) {
        for p in &mut self.0 {
            p.weights.iter_mut().chain(p.biases.iter_mut()).for_each(|v| *v *= factor);
        }
    }

    /// All entries in one flat vector, layer by layer, weights before biases.
    pub fn flatten(&self) -> Vec<T> {
        self.0
            .iter()
            .flat_map(|p| p.weights.iter().chain(&p.biases).copied())
            .collect()
    }
}

/// Network output for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct Output<T> {
    pub logits: Vec<T>,
    pub probs: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad<T> {
    pub loss: f64,
    pub grad: Vec<T>,
    /// `p[label]` fell below [`LOG_FLOOR`] and the logarithm was clamped.
    pub clamped: bool,
}

/// Activations recorded by a forward pass for use by the backward pass.
pub(crate) struct Trace<T> {
    /// `acts[0]` is the input, `acts[i + 1]` the output of layer `i`.
    acts: Vec<Vec<T>>,
    pre: Vec<Vec<T>>,
    argmax: Vec<Vec<usize>>,
}

impl<T: Real> Trace<T> {
    pub(crate) fn probs(&self) -> &[T] {
        self.acts.last().expect("trace has an output")
    }

    pub(crate) fn logits(&self) -> &[T] {
        self.pre.last().expect("trace has logits")
    }
}

/// Per-layer masked weights used in place of the stored ones.
pub(crate) type Override<'a, T> = Option<(usize, &'a [T])>;

/// An ordered stack of layers with trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    input: Shape,
    specs: Vec<LayerSpec>,
    plans: Vec<LayerPlan>,
    params: Vec<LayerParams<T>>,
}

impl<T: Real> Network<T> {
    /// Validates the stack and allocates zero parameters.
    pub fn build(specs: &[LayerSpec], input: Shape) -> Result<Self, NnError> {
        let plans = layer::plan_stack(specs, input)?;
        Ok(Network {
            input,
            specs: specs.to_vec(),
            plans,
            params: specs.iter().map(LayerParams::zeros).collect(),
        })
    }

    /// Builds a network and fills it with the given parameters.
    pub fn from_params(specs: &[LayerSpec], input: Shape, params: Vec<LayerParams<T>>) -> Result<Self, NnError> {
        let mut net = Self::build(specs, input)?;
        if params.len() != specs.len() {
            return Err(NnError::CheckpointShape {
                layer: params.len().min(specs.len()),
                reason: format!("{} parameter blocks for {} layers", params.len(), specs.len()),
            });
        }
        for (i, (p, spec)) in params.iter().zip(specs).enumerate() {
            let (w, b) = spec.param_shape();
            if p.weights.len() != w || p.biases.len() != b {
                return Err(NnError::CheckpointShape {
                    layer: i,
                    reason: format!(
                        "expected {w} weights and {b} biases, found {} and {}",
                        p.weights.len(),
                        p.biases.len()
                    ),
                });
            }
            if !p.is_finite() {
                return Err(NnError::Malformed(format!("layer {i} has non-finite parameters")));
            }
        }
        net.params = params;
        Ok(net)
    }

    /// He-normal initialisation: weights ~ Normal(0, 2 / fan_in), zero biases.
    pub fn init_he_normal(&mut self, seed: u64) {
        for (i, (spec, p)) in self.specs.iter().zip(&mut self.params).enumerate() {
            let fan_in = spec.fan_in();
            if fan_in == 0 {
                continue;
            }
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
            let mut rng = rng::stream(seed, rng::domain::INIT, i as u64);
            for w in &mut p.weights {
                *w = T::of(normal.sample(&mut rng));
            }
            p.biases.fill(T::zero());
        }
    }

    pub fn input_shape(&self) -> Shape {
        self.input
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn params(&self) -> &[LayerParams<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [LayerParams<T>] {
        &mut self.params
    }

    pub fn precision(&self) -> Precision {
        T::PRECISION
    }

    pub fn num_inputs(&self) -> usize {
        self.input.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.plans.last().map_or(0, |p| p.output.len())
    }

    pub fn num_params(&self) -> usize {
        self.params.iter().map(|p| p.weights.len() + p.biases.len()).sum()
    }

    /// Converts every parameter to another precision.
    pub fn cast<U: Real>(&self) -> Network<U> {
        Network {
            input: self.input,
            specs: self.specs.clone(),
            plans: self.plans.clone(),
            params: self
                .params
                .iter()
                .map(|p| LayerParams {
                    weights: p.weights.iter().map(|v| U::of(v.f64())).collect(),
                    biases: p.biases.iter().map(|v| U::of(v.f64())).collect(),
                })
                .collect(),
        }
    }

    fn check_input(&self, x: &[T]) -> Result<(), NnError> {
        if x.len() != self.num_inputs() {
            return Err(NnError::InputLength {
                expected: self.num_inputs(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn check_label(&self, label: usize) -> Result<(), NnError> {
        let classes = self.num_outputs();
        if label >= classes {
            return Err(NnError::LabelOutOfRange { label, classes });
        }
        Ok(())
    }

    fn weights<'a>(&'a self, i: usize, masked: Override<'a, T>) -> &'a [T] {
        match masked {
            Some((layer, w)) if layer == i => w,
            _ => &self.params[i].weights,
        }
    }

    pub(crate) fn trace(&self, x: &[T], masked: Override<'_, T>) -> Result<Trace<T>, NnError> {
        self.check_input(x)?;
        let n = self.specs.len();
        let mut acts = Vec::with_capacity(n + 1);
        let mut pre = Vec::with_capacity(n);
        let mut argmax = Vec::with_capacity(n);
        acts.push(x.to_vec());
        for (i, (spec, plan)) in self.specs.iter().zip(&self.plans).enumerate() {
            let input = &acts[i];
            let out_len = plan.output.len();
            let mut z = Vec::new();
            let mut idx = Vec::new();
            let out = match *spec {
                LayerSpec::Dense { activation, .. } => {
                    z = vec![T::zero(); out_len];
                    layer::dense_forward(input, self.weights(i, masked), &self.params[i].biases, &mut z);
                    finite(&z, i)?;
                    let mut a = vec![T::zero(); out_len];
                    layer::activate(activation, &z, &mut a);
                    a
                }
                LayerSpec::Conv2d { activation, .. } => {
                    let win = plan.window.expect("conv plan has a window");
                    z = vec![T::zero(); out_len];
                    layer::conv_forward(&win, input, self.weights(i, masked), &self.params[i].biases, &mut z);
                    finite(&z, i)?;
                    let mut a = vec![T::zero(); out_len];
                    layer::activate(activation, &z, &mut a);
                    a
                }
                LayerSpec::MaxPool2d { .. } => {
                    let win = plan.window.expect("pool plan has a window");
                    let mut a = vec![T::zero(); out_len];
                    idx = vec![0; out_len];
                    layer::pool_forward(&win, input, &mut a, &mut idx);
                    a
                }
                LayerSpec::Flatten => input.clone(),
            };
            pre.push(z);
            argmax.push(idx);
            acts.push(out);
        }
        finite(acts.last().expect("output"), n - 1)?;
        Ok(Trace { acts, pre, argmax })
    }

    /// Backpropagates `dL/dlogits`. Accumulates into `grads` when given and
    /// returns `dL/dx` when `want_input` is set.
    pub(crate) fn backward(
        &self,
        trace: &Trace<T>,
        dlogits: Vec<T>,
        masked: Override<'_, T>,
        mut grads: Option<&mut Gradients<T>>,
        want_input: bool,
    ) -> Option<Vec<T>> {
        let last = self.specs.len() - 1;
        let mut delta = dlogits;
        for i in (0..=last).rev() {
            let spec = &self.specs[i];
            let input = &trace.acts[i];
            if i != last {
                layer::activation_backward(spec.activation(), &trace.pre[i], &trace.acts[i + 1], &mut delta);
            }
            let need_dx = i > 0 || want_input;
            let layer_grads = grads.as_deref_mut().map(|g| {
                let p = &mut g.0[i];
                (p.weights.as_mut_slice(), p.biases.as_mut_slice())
            });
            delta = match *spec {
                LayerSpec::Dense { .. } => {
                    let mut dx = if need_dx { vec![T::zero(); input.len()] } else { Vec::new() };
                    layer::dense_backward(
                        input,
                        self.weights(i, masked),
                        &delta,
                        layer_grads,
                        need_dx.then_some(dx.as_mut_slice()),
                    );
                    dx
                }
                LayerSpec::Conv2d { .. } => {
                    let win = self.plans[i].window.expect("conv plan has a window");
                    let mut dx = if need_dx { vec![T::zero(); input.len()] } else { Vec::new() };
                    layer::conv_backward(
                        &win,
                        input,
                        self.weights(i, masked),
                        &delta,
                        layer_grads,
                        need_dx.then_some(dx.as_mut_slice()),
                    );
                    dx
                }
                LayerSpec::MaxPool2d { .. } => {
                    let mut dx = vec![T::zero(); input.len()];
                    layer::pool_backward(&trace.argmax[i], &delta, &mut dx);
                    dx
                }
                LayerSpec::Flatten => delta,
            };
        }
        want_input.then_some(delta)
    }

    /// Evaluation-mode forward pass (dropout never applies here).
    pub fn forward(&self, x: &[T]) -> Result<Output<T>, NnError> {
        self.forward_masked(x, None)
    }

    /// Training-mode forward pass with an optional dropout mask.
    pub fn forward_train(&self, x: &[T], mask: Option<&DropoutMask<T>>) -> Result<Output<T>, NnError> {
        let masked = mask.map(|m| m.apply(&self.params[m.layer].weights));
        self.forward_masked(x, mask.zip(masked.as_deref()).map(|(m, w)| (m.layer, w)))
    }

    fn forward_masked(&self, x: &[T], masked: Override<'_, T>) -> Result<Output<T>, NnError> {
        let trace = self.trace(x, masked)?;
        Ok(Output {
            logits: trace.logits().to_vec(),
            probs: trace.probs().to_vec(),
        })
    }

    /// All labels whose output is maximal.
    pub fn predict(&self, x: &[T]) -> Result<LabelSet, NnError> {
        let out = self.forward(x)?;
        Ok(LabelSet::argmax(&out.probs))
    }

    /// Cross-entropy of the true class and its gradient with respect to the
    /// input, dropout off.
    pub fn loss_and_input_grad(&self, x: &[T], label: usize) -> Result<LossGrad<T>, NnError> {
        self.check_label(label)?;
        let trace = self.trace(x, None)?;
        let (loss, clamped) = cross_entropy(trace.probs(), label);
        let dlogits = softmax_xent_grad(trace.probs(), label);
        let grad = self.backward(&trace, dlogits, None, None, true).expect("input grad requested");
        Ok(LossGrad { loss, grad, clamped })
    }

    /// Cross-entropy and its gradient with respect to every parameter.
    pub fn loss_and_param_grads(&self, x: &[T], label: usize) -> Result<(f64, Gradients<T>), NnError> {
        let mut grads = Gradients::zeros_like(self);
        let stats = self.accumulate(x, label, None, &mut grads)?;
        Ok((stats.loss, grads))
    }

    /// Adds this sample's parameter gradient (with respect to the effective,
    /// possibly masked, weights) to `grads`.
    pub(crate) fn accumulate(
        &self,
        x: &[T],
        label: usize,
        masked: Override<'_, T>,
        grads: &mut Gradients<T>,
    ) -> Result<SampleStats, NnError> {
        self.check_label(label)?;
        let trace = self.trace(x, masked)?;
        let (loss, _) = cross_entropy(trace.probs(), label);
        let correct = LabelSet::argmax(trace.probs()).resolved() == label;
        let dlogits = softmax_xent_grad(trace.probs(), label);
        self.backward(&trace, dlogits, masked, Some(grads), false);
        Ok(SampleStats { loss, correct })
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SampleStats {
    pub loss: f64,
    pub correct: bool,
}

fn finite<T: Real>(v: &[T], layer: usize) -> Result<(), NnError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(NnError::NumericOverflow { layer })
    }
}

fn cross_entropy<T: Real>(probs: &[T], label: usize) -> (f64, bool) {
    let p = probs[label].f64();
    if p < LOG_FLOOR {
        (-LOG_FLOOR.ln(), true)
    } else {
        (-p.ln(), false)
    }
}

fn softmax_xent_grad<T: Real>(probs: &[T], label: usize) -> Vec<T> {
    let mut d = probs.to_vec();
    d[label] = d[label] - T::one();
    d
}

impl<T: Real> Classifier for Network<T> {
    fn input_dim(&self) -> usize {
        self.num_inputs()
    }

    fn num_classes(&self) -> usize {
        self.num_outputs()
    }

    fn predict(&self, x: &[f64]) -> Result<LabelSet, NnError> {
        let x: Vec<T> = x.iter().map(|&v| T::of(v)).collect();
        Network::predict(self, &x)
    }
}

impl<T: Real> GradientClassifier for Network<T> {
    fn loss_input_grad(&self, x: &[f64], label: usize) -> Result<(f64, Vec<f64>), NnError> {
        let x: Vec<T> = x.iter().map(|&v| T::of(v)).collect();
        let lg = self.loss_and_input_grad(&x, label)?;
        Ok((lg.loss, lg.grad.iter().map(|v| v.f64()).collect()))
    }
}
