//! Small fully connected regressor: tanh hidden layers, linear scalar output,
//! trained full-batch with Adam on mean-squared error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: vec![32, 32, 32],
            epochs: 4000,
            learning_rate: 0.01,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
}

/// Dense layer; `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn init(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        // Glorot uniform
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        Layer {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| rng.random_range(-limit..limit)).collect(),
            bias: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.bias.iter().enumerate().map(|(o, b)| {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            b + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>()
        }));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub activation: Activation,
    pub layers: Vec<Layer>,
}

impl Mlp {
    pub fn new(inputs: usize, hidden: &[usize], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sizes = vec![inputs];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let layers = sizes.windows(2).map(|w| Layer::init(w[0], w[1], &mut rng)).collect();
        Mlp {
            activation: Activation::Tanh,
            layers,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    /// Activations of every layer, input first.
    fn forward_all(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.forward(acts.last().unwrap(), &mut out);
            if i != last {
                out.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(out);
        }
        acts
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.forward_all(x).last().unwrap()[0]
    }

    /// Adds the MSE gradient for one sample into `grads` (same layout as
    /// the parameters) and returns the squared error.
    fn accumulate(&self, x: &[f64], y: f64, grads: &mut [Layer]) -> f64 {
        let acts = self.forward_all(x);
        let err = acts.last().unwrap()[0] - y;
        let mut delta = vec![2.0 * err];
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &acts[i];
            let g = &mut grads[i];
            for (o, d) in delta.iter().enumerate() {
                g.bias[o] += d;
                for (j, xi) in input.iter().enumerate() {
                    g.weights[o * layer.inputs + j] += d * xi;
                }
            }
            if i == 0 {
                break;
            }
            // back through the tanh of the previous layer's output
            delta = (0..layer.inputs)
                .map(|j| {
                    let s: f64 = delta
                        .iter()
                        .enumerate()
                        .map(|(o, d)| d * layer.weights[o * layer.inputs + j])
                        .sum();
                    s * (1.0 - input[j] * input[j])
                })
                .collect();
        }
        err * err
    }

    /// Fits to `(xs, ys)`; returns the final training MSE.
    pub fn train(&mut self, xs: &[Vec<f64>], ys: &[f64], config: &MlpConfig) -> f64 {
        let n = xs.len() as f64;
        let zeroed = |layers: &[Layer]| -> Vec<Layer> {
            layers
                .iter()
                .map(|l| Layer {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                    ..*l
                })
                .collect()
        };
        let (beta1, beta2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
        let mut m = zeroed(&self.layers);
        let mut v = zeroed(&self.layers);
        for epoch in 1..=config.epochs {
            let mut grads = zeroed(&self.layers);
            for (x, &y) in xs.iter().zip(ys) {
                self.accumulate(x, y, &mut grads);
            }
            let c1 = 1.0 - beta1.powi(epoch as i32);
            let c2 = 1.0 - beta2.powi(epoch as i32);
            for (((layer, g), m), v) in self.layers.iter_mut().zip(&grads).zip(&mut m).zip(&mut v) {
                let params = layer.weights.iter_mut().chain(layer.bias.iter_mut());
                let gs = g.weights.iter().chain(&g.bias);
                let ms = m.weights.iter_mut().chain(m.bias.iter_mut());
                let vs = v.weights.iter_mut().chain(v.bias.iter_mut());
                for (((p, &g), m), v) in params.zip(gs).zip(ms).zip(vs) {
                    let g = g / n;
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    *p -= config.learning_rate * (*m / c1) / ((*v / c2).sqrt() + eps);
                }
            }
        }
        xs.iter()
            .zip(ys)
            .map(|(x, y)| (self.predict(x) - y).powi(2))
            .sum::<f64>()
            / n
    }
}
