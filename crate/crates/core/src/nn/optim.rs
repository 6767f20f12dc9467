use serde::{Deserialize, Serialize};

use super::{Gradients, LayerParams, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam(AdamParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
}

impl Optimizer {
    pub fn sgd(learning_rate: f64) -> Self {
        Optimizer {
            kind: OptimizerKind::Sgd,
            learning_rate,
        }
    }

    pub fn adam(learning_rate: f64) -> Self {
        Optimizer {
            kind: OptimizerKind::Adam(AdamParams::default()),
            learning_rate,
        }
    }

    pub fn state<T: Real>(&self, shapes: &[LayerParams<T>]) -> OptimizerState<T> {
        let zeros = |p: &LayerParams<T>| LayerParams {
            weights: vec![T::zero(); p.weights.len()],
            biases: vec![T::zero(); p.biases.len()],
        };
        match self.kind {
            OptimizerKind::Sgd => OptimizerState::Sgd,
            OptimizerKind::Adam(_) => OptimizerState::Adam {
                t: 0,
                m: shapes.iter().map(zeros).collect(),
                v: shapes.iter().map(zeros).collect(),
            },
        }
    }

    /// One update of `params` along `grads` (already averaged over the batch).
    pub fn step<T: Real>(&self, params: &mut [LayerParams<T>], grads: &Gradients<T>, state: &mut OptimizerState<T>) {
        let lr = self.learning_rate;
        match (self.kind, state) {
            (OptimizerKind::Sgd, OptimizerState::Sgd) => {
                let lr = T::of(lr);
                for (p, g) in params.iter_mut().zip(&grads.0) {
                    for (w, &d) in p.weights.iter_mut().zip(&g.weights) {
                        *w = *w - lr * d;
                    }
                    for (b, &d) in p.biases.iter_mut().zip(&g.biases) {
                        *b = *b - lr * d;
                    }
                }
            }
            (OptimizerKind::Adam(hp), OptimizerState::Adam { t, m, v }) => {
                *t += 1;
                let bc1 = 1.0 - hp.beta1.powi(*t as i32);
                let bc2 = 1.0 - hp.beta2.powi(*t as i32);
                let step = T::of(lr * bc2.sqrt() / bc1);
                let (b1, b2, eps) = (T::of(hp.beta1), T::of(hp.beta2), T::of(hp.eps * bc2.sqrt()));
                let one = T::one();
                let update = |w: &mut [T], g: &[T], m: &mut [T], v: &mut [T]| {
                    for (((w, &g), m), v) in w.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                        *m = b1 * *m + (one - b1) * g;
                        *v = b2 * *v + (one - b2) * g * g;
                        *w = *w - step * *m / (v.sqrt() + eps);
                    }
                };
                for (((p, g), m), v) in params.iter_mut().zip(&grads.0).zip(m.iter_mut()).zip(v.iter_mut()) {
                    update(&mut p.weights, &g.weights, &mut m.weights, &mut v.weights);
                    update(&mut p.biases, &g.biases, &mut m.biases, &mut v.biases);
                }
            }
            _ => panic!("optimizer state does not match optimizer kind"),
        }
    }
}

/// Moment buffers carried between steps.
#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerState<T> {
    Sgd,
    Adam {
        t: u64,
        m: Vec<LayerParams<T>>,
        v: Vec<LayerParams<T>>,
    },
}
