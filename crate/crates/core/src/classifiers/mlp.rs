//! Fully connected sigmoid network with one sigmoid output unit, trained by
//! backpropagation on binary cross-entropy.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClassifierError, Prediction, Result};
use crate::table::ClassLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub epochs: usize,
    /// Mini-batch size; 0 means full batch.
    pub batch: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: vec![16],
            lr: 0.01,
            epochs: 500,
            batch: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `n_out` rows of `n_in` weights.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(n_in: usize, n_out: usize) -> Self {
        Layer {
            weights: vec![vec![0.0; n_in]; n_out],
            bias: vec![0.0; n_out],
        }
    }

    fn n_in(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    fn pre_activation(&self, input: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| w.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl MlpModel {
    /// All-zero network with the given layer widths.
    pub fn zeros(n_in: usize, hidden: &[usize]) -> Self {
        let mut widths = vec![n_in];
        widths.extend_from_slice(hidden);
        widths.push(1);
        MlpModel {
            layers: widths.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(n_in: usize, hidden: &[usize], rng: &mut impl Rng) -> Self {
        let mut model = Self::zeros(n_in, hidden);
        for layer in &mut model.layers {
            let fan_in = layer.n_in();
            let fan_out = layer.bias.len();
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for row in &mut layer.weights {
                for w in row.iter_mut() {
                    *w = rng.gen_range(-limit..limit);
                }
            }
        }
        model
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_in()
    }

    /// Parameters flattened layer by layer: weights row-major, then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(l.weights.iter().flatten());
            out.extend(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().flatten() {
                *w = it.next().expect("parameter vector too short");
            }
            for b in &mut l.bias {
                *b = it.next().expect("parameter vector too short");
            }
        }
        assert!(it.next().is_none(), "parameter vector too long");
    }

    /// Output pre-activation and all layer activations (input first).
    fn forward_all(&self, x: &[f64]) -> (Vec<Vec<f64>>, f64) {
        let mut acts = vec![x.to_vec()];
        let mut z_out = 0.0;
        for (k, layer) in self.layers.iter().enumerate() {
            let z = layer.pre_activation(acts.last().expect("input present"));
            if k + 1 == self.layers.len() {
                z_out = z[0];
            }
            acts.push(z.into_iter().map(sigmoid).collect());
        }
        (acts, z_out)
    }

    pub fn output(&self, x: &[f64]) -> f64 {
        sigmoid(self.forward_all(x).1)
    }

    pub fn predict(&self, x: &[f64]) -> Prediction {
        Prediction::from_probability(self.output(x))
    }

    /// Mean binary cross-entropy over a batch.
    pub fn loss(&self, xs: &[Vec<f64>], ys: &[f64]) -> f64 {
        xs.iter()
            .zip(ys)
            .map(|(x, &y)| {
                let z = self.forward_all(x).1;
                softplus(z) - y * z
            })
            .sum::<f64>()
            / xs.len() as f64
    }

    /// Mean loss and its gradient, flattened like [`MlpModel::params`].
    pub fn loss_and_gradient(&self, xs: &[Vec<f64>], ys: &[f64]) -> (f64, Vec<f64>) {
        let mut grads: Vec<Layer> = self
            .layers
            .iter()
            .map(|l| Layer::zeros(l.n_in(), l.bias.len()))
            .collect();
        let mut loss = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let (acts, z) = self.forward_all(x);
            loss += softplus(z) - y * z;
            // dL/dz at the output unit
            let mut delta = vec![sigmoid(z) - y];
            for k in (0..self.layers.len()).rev() {
                let input = &acts[k];
                for (o, &dz) in delta.iter().enumerate() {
                    grads[k].bias[o] += dz;
                    for (g, &a) in grads[k].weights[o].iter_mut().zip(input) {
                        *g += dz * a;
                    }
                }
                if k > 0 {
                    delta = (0..input.len())
                        .map(|i| {
                            let back: f64 = delta
                                .iter()
                                .enumerate()
                                .map(|(o, &dz)| dz * self.layers[k].weights[o][i])
                                .sum();
                            back * input[i] * (1.0 - input[i])
                        })
                        .collect();
                }
            }
        }
        let n = xs.len() as f64;
        let flat = MlpModel { layers: grads }.params();
        (loss / n, flat.into_iter().map(|g| g / n).collect())
    }
}

/// Layer activations (input excluded) and the sigmoid output.
pub fn mlp_forward(model: &MlpModel, x: &[f64]) -> Result<(Vec<Vec<f64>>, f64)> {
    if x.len() != model.n_inputs() {
        return Err(ClassifierError::DimensionMismatch {
            expected: model.n_inputs(),
            got: x.len(),
        });
    }
    let (mut acts, z) = model.forward_all(x);
    acts.remove(0);
    Ok((acts, sigmoid(z)))
}

/// One gradient-descent step on the batch; returns the mean loss before the step.
pub fn mlp_train_epoch(model: &mut MlpModel, xs: &[Vec<f64>], ys: &[f64], lr: f64) -> f64 {
    assert!(!xs.is_empty(), "empty batch");
    let (loss, grad) = model.loss_and_gradient(xs, ys);
    if lr != 0.0 {
        let params: Vec<f64> = model
            .params()
            .iter()
            .zip(&grad)
            .map(|(p, g)| p - lr * g)
            .collect();
        model.set_params(&params);
    }
    loss
}

/// Fits on already-standardised rows.
pub(super) fn fit(x: &[Vec<f64>], y: &[ClassLabel], config: &MlpConfig) -> MlpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let d = x.first().map_or(0, Vec::len);
    let mut model = MlpModel::init(d, &config.hidden, &mut rng);
    let targets: Vec<f64> = y.iter().map(|l| l.index() as f64).collect();
    let n = x.len();
    if config.batch == 0 || config.batch >= n {
        for _ in 0..config.epochs {
            mlp_train_epoch(&mut model, x, &targets, config.lr);
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(config.batch) {
                let bx: Vec<Vec<f64>> = chunk.iter().map(|&i| x[i].clone()).collect();
                let by: Vec<f64> = chunk.iter().map(|&i| targets[i]).collect();
                mlp_train_epoch(&mut model, &bx, &by, config.lr);
            }
        }
    }
    model
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central_difference(model: &MlpModel, xs: &[Vec<f64>], ys: &[f64], h: f64) -> Vec<f64> {
        let base = model.params();
        let mut probe = model.clone();
        (0..base.len())
            .map(|i| {
                let mut p = base.clone();
                p[i] = base[i] + h;
                probe.set_params(&p);
                let up = probe.loss(xs, ys);
                p[i] = base[i] - h;
                probe.set_params(&p);
                let down = probe.loss(xs, ys);
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn zero_network_outputs_half() {
        let m = MlpModel::zeros(3, &[4, 2]);
        let (acts, out) = mlp_forward(&m, &[1.0, -7.0, 2.5]).unwrap();
        assert_eq!(out, 0.5);
        assert_eq!(acts.len(), 3);
        assert_eq!(acts[0], vec![0.5; 4]);
    }

    #[test]
    fn hand_computed_single_layer() {
        let m = MlpModel {
            layers: vec![Layer {
                weights: vec![vec![0.5, -1.0]],
                bias: vec![0.25],
            }],
        };
        // z = 0.5*2 - 1*0.5 + 0.25 = 0.75
        let (_, out) = mlp_forward(&m, &[2.0, 0.5]).unwrap();
        assert!((out - 1.0 / (1.0 + (-0.75f64).exp())).abs() < 1e-15);
        assert!((out - 0.679_178_699_175_393_1).abs() < 1e-15);
        assert!(matches!(
            mlp_forward(&m, &[1.0]),
            Err(ClassifierError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn output_stays_in_open_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = MlpModel::init(4, &[8], &mut rng);
        for _ in 0..200 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-30.0..30.0)).collect();
            let out = m.output(&x);
            assert!(out > 0.0 && out < 1.0);
        }
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = MlpModel::init(2, &[4], &mut rng);
        let before = m.clone();
        mlp_train_epoch(&mut m, &[vec![1.0, 2.0]], &[1.0], 0.0);
        assert_eq!(m, before);
    }

    #[test]
    fn repeated_steps_reduce_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut m = MlpModel::init(1, &[3], &mut rng);
        let xs = vec![vec![1.5]];
        let ys = vec![1.0];
        let mut prev = f64::INFINITY;
        for _ in 0..100 {
            let loss = mlp_train_epoch(&mut m, &xs, &ys, 0.05);
            assert!(loss < prev);
            prev = loss;
        }
        assert!(m.loss(&xs, &ys) < prev);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = MlpModel::init(2, &[4], &mut rng);
            let xs: Vec<Vec<f64>> = (0..6).map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]).collect();
            let ys: Vec<f64> = (0..6).map(|i| (i % 2) as f64).collect();
            let (_, analytic) = m.loss_and_gradient(&xs, &ys);
            let numeric = central_difference(&m, &xs, &ys, 1e-5);
            let diff: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let scale: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt()
                + numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(diff / scale < 1e-4, "seed {seed}: {}", diff / scale);
        }
    }

    #[test]
    fn params_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = MlpModel::init(3, &[5, 2], &mut rng);
        let mut other = MlpModel::zeros(3, &[5, 2]);
        other.set_params(&m.params());
        assert_eq!(other, m);
        assert_eq!(m.params().len(), 3 * 5 + 5 + 5 * 2 + 2 + 2 + 1);
    }
}
