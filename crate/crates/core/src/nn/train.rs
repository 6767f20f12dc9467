use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dropout::final_hidden_layer;
use super::network::Override;
use super::{DropoutConfig, DropoutMask, Gradients, Network, NnError, Optimizer, Real, LOG_FLOOR};
use crate::classifier::LabelSet;
use crate::data::Dataset;
use crate::rng;

/// Samples per gradient-accumulation chunk. Chunks are fixed by position in
/// the batch and summed in order, so the result is independent of threads.
const CHUNK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl TrainConfig {
    fn validate(&self, data_len: usize) -> Result<(), NnError> {
        if !(self.optimizer.learning_rate > 0.0) {
            return Err(NnError::InvalidConfig("learning rate must be positive".into()));
        }
        if self.batch_size == 0 || self.batch_size > data_len {
            return Err(NnError::InvalidConfig(format!(
                "batch size {} must lie in 1..={data_len}",
                self.batch_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean training loss over the epoch's steps.
    pub loss: f64,
    /// Fraction of samples classified correctly during the epoch's steps.
    pub accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
}

fn to_real<T: Real>(x: &[f32]) -> Vec<T> {
    x.iter().map(|&v| T::of(v as f64)).collect()
}

fn check_compat<T: Real>(net: &Network<T>, data: &Dataset) -> Result<(), NnError> {
    if data.is_empty() {
        return Err(NnError::InvalidConfig("dataset is empty".into()));
    }
    if data.dim() != net.num_inputs() {
        return Err(NnError::InputLength {
            expected: net.num_inputs(),
            got: data.dim(),
        });
    }
    if data.num_classes() > net.num_outputs() {
        return Err(NnError::InvalidConfig(format!(
            "dataset has {} classes, network outputs {}",
            data.num_classes(),
            net.num_outputs()
        )));
    }
    Ok(())
}

/// Mean cross-entropy and accuracy in evaluation mode.
pub fn evaluate<T: Real>(net: &Network<T>, data: &Dataset) -> Result<Evaluation, NnError> {
    check_compat(net, data)?;
    let (loss, correct) = (0..data.len())
        .into_par_iter()
        .map(|i| -> Result<(f64, usize), NnError> {
            let x = to_real::<T>(data.point(i));
            let label = data.label(i);
            let out = net.forward(&x)?;
            let predicted = LabelSet::argmax(&out.probs).resolved();
            let p = out.probs[label].f64().max(LOG_FLOOR);
            Ok((-p.ln(), usize::from(predicted == label)))
        })
        .try_reduce(|| (0.0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    let n = data.len() as f64;
    Ok(Evaluation {
        loss: loss / n,
        accuracy: correct as f64 / n,
    })
}

/// Minibatch training with cross-entropy loss.
///
/// The sample order of epoch `e` is a Fisher-Yates shuffle seeded from
/// `(seed, e)`; the dropout mask of global step `s` is drawn from `(seed, s)`
/// and reused for every sample of that step.
pub fn train<T: Real>(
    mut net: Network<T>,
    data: &Dataset,
    config: &TrainConfig,
    dropout: &DropoutConfig,
) -> Result<(Network<T>, History), NnError> {
    check_compat(&net, data)?;
    config.validate(data.len())?;
    dropout.validate()?;
    let target = if dropout.is_active() {
        Some(final_hidden_layer(net.specs()).ok_or_else(|| {
            NnError::InvalidConfig("dropout needs a hidden dense layer before the output".into())
        })?)
    } else {
        None
    };

    let mut state = config.optimizer.state(net.params());
    let n_chunks = config.batch_size.div_ceil(CHUNK);
    let mut chunk_grads: Vec<Gradients<T>> = (0..n_chunks).map(|_| Gradients::zeros_like(&net)).collect();
    let mut total = Gradients::zeros_like(&net);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = History::default();
    let mut step = 0usize;

    for epoch in 0..config.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng::stream(config.seed, rng::domain::SHUFFLE, epoch as u64));
        let mut loss_sum = 0.0;
        let mut correct = 0usize;

        for batch in order.chunks(config.batch_size) {
            let mask = target.map(|layer| {
                let mut r = rng::stream(config.seed, rng::domain::DROPOUT, step as u64);
                DropoutMask::<T>::sample(layer, &net.specs()[layer], dropout, &mut r)
            });
            let masked_weights = mask.as_ref().map(|m| m.apply(&net.params()[m.layer].weights));
            let masked: Override<'_, T> = mask.as_ref().zip(masked_weights.as_deref()).map(|(m, w)| (m.layer, w));

            let used = batch.len().div_ceil(CHUNK);
            let net_ref = &net;
            let stats: Vec<Result<(f64, usize), NnError>> = chunk_grads[..used]
                .par_iter_mut()
                .zip(batch.par_chunks(CHUNK))
                .map(|(g, idx)| {
                    g.fill_zero();
                    let mut loss = 0.0;
                    let mut hits = 0;
                    for &i in idx {
                        let x = to_real::<T>(data.point(i));
                        let s = net_ref.accumulate(&x, data.label(i), masked, g)?;
                        loss += s.loss;
                        hits += usize::from(s.correct);
                    }
                    Ok((loss, hits))
                })
                .collect();

            let mut batch_loss = 0.0;
            for s in stats {
                let (l, h) = s.map_err(|e| match e {
                    NnError::NumericOverflow { .. } => NnError::Diverged { epoch, step },
                    other => other,
                })?;
                batch_loss += l;
                correct += h;
            }
            if !batch_loss.is_finite() {
                return Err(NnError::Diverged { epoch, step });
            }
            loss_sum += batch_loss;

            total.fill_zero();
            for g in &chunk_grads[..used] {
                total.add_assign(g);
            }
            total.scale(T::of(1.0 / batch.len() as f64));
            if let Some(m) = &mask {
                for (g, &k) in total.0[m.layer].weights.iter_mut().zip(&m.values) {
                    *g *= k;
                }
            }
            config.optimizer.step(net.params_mut(), &total, &mut state);
            if net
                .params()
                .iter()
                .any(|p| p.weights.iter().chain(&p.biases).any(|v| !v.is_finite()))
            {
                return Err(NnError::Diverged { epoch, step });
            }
            step += 1;
        }

        let n = data.len() as f64;
        history.epochs.push(EpochStats {
            epoch: epoch + 1,
            loss: loss_sum / n,
            accuracy: correct as f64 / n,
        });
    }
    Ok((net, history))
}
