//! Dense layers with a hand-written backward pass.

use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::beta::PARAM_MIN;

/// Largest shape parameter the positivity map emits. Equal to `1 / PARAM_MIN`
/// so that negation maps the range onto itself.
pub const PARAM_CAP: f64 = 1.0 / PARAM_MIN;

pub(crate) fn softplus(u: f64) -> f64 {
    if u > 30.0 {
        u
    } else {
        u.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `π(u) = min(softplus(u) + PARAM_MIN, PARAM_CAP)` and its derivative.
pub(crate) fn positive(u: f64) -> (f64, f64) {
    let y = softplus(u) + PARAM_MIN;
    if y >= PARAM_CAP {
        (PARAM_CAP, 0.0)
    } else {
        (y, sigmoid(u))
    }
}

/// Raw value whose positive image is `y`; inverse of [`positive`] below the cap.
pub(crate) fn positive_inverse(y: f64) -> f64 {
    let s = y - PARAM_MIN;
    // ln(e^s - 1)
    s + (-(-s).exp()).ln_1p()
}

/// Fully connected layer `y = W x + b`, `W` stored row-major `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub(crate) inputs: usize,
    pub(crate) outputs: usize,
    pub(crate) weight: Vec<f64>,
    pub(crate) bias: Vec<f64>,
}

impl Linear {
    /// Glorot-uniform weights, bias uniform in `±1/√inputs`.
    pub fn new<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = (6.0 / (inputs + outputs) as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
        let weight = (0..inputs * outputs).map(|_| dist.sample(rng)).collect();
        let b = 1.0 / (inputs as f64).sqrt();
        let bias_dist = Uniform::new_inclusive(-b, b).expect("finite bound");
        Self { inputs, outputs, weight, bias: (0..outputs).map(|_| bias_dist.sample(rng)).collect() }
    }

    pub(crate) fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weight: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.inputs);
        self.weight
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }
}

/// Linear layers with ReLU between them (none after the last).
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub(crate) layers: Vec<Linear>,
}

/// Per-layer inputs recorded by [`Mlp::forward`].
#[derive(Debug, Clone)]
pub(crate) struct MlpCache {
    inputs: Vec<Vec<f64>>,
}

impl Mlp {
    /// `sizes = [in, h1, .., out]`.
    pub fn new<R: Rng>(sizes: &[usize], rng: &mut R) -> Self {
        Self { layers: sizes.windows(2).map(|w| Linear::new(w[0], w[1], rng)).collect() }
    }

    pub(crate) fn zeros_like(&self) -> Self {
        Self { layers: self.layers.iter().map(|l| Linear::zeros(l.inputs, l.outputs)).collect() }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("at least one layer").outputs
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub(crate) fn forward(&self, x: Vec<f64>) -> (Vec<f64>, MlpCache) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut next = layer.forward(&h);
            if i + 1 < self.layers.len() {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            inputs.push(h);
            h = next;
        }
        (h, MlpCache { inputs })
    }

    /// Accumulates weight gradients into `grad` and returns `∂/∂input`.
    pub(crate) fn backward(&self, cache: &MlpCache, d_out: Vec<f64>, grad: &mut Mlp) -> Vec<f64> {
        let mut d = d_out;
        for (i, (layer, g)) in self.layers.iter().zip(&mut grad.layers).enumerate().rev() {
            let x = &cache.inputs[i];
            let mut d_in = vec![0.0; layer.inputs];
            for (o, &d_o) in d.iter().enumerate() {
                if d_o == 0.0 {
                    continue;
                }
                g.bias[o] += d_o;
                let row = &layer.weight[o * layer.inputs..(o + 1) * layer.inputs];
                let g_row = &mut g.weight[o * layer.inputs..(o + 1) * layer.inputs];
                for j in 0..layer.inputs {
                    g_row[j] += d_o * x[j];
                    d_in[j] += d_o * row[j];
                }
            }
            if i > 0 {
                // x is the ReLU output of the previous layer
                for (dv, &xv) in d_in.iter_mut().zip(x) {
                    if xv <= 0.0 {
                        *dv = 0.0;
                    }
                }
            }
            d = d_in;
        }
        d
    }

    pub(crate) fn tensors(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias])
    }

    pub(crate) fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.layers.iter_mut().flat_map(|l| [&mut l.weight, &mut l.bias])
    }

    pub(crate) fn add_assign(&mut self, other: &Mlp) {
        for (a, b) in self.tensors_mut().zip(other.tensors()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn positivity_map_range_and_inverse() {
        for u in [-50.0, -3.0, 0.0, 0.5, 2.0, 19.0, 40.0, 800.0] {
            let (y, _) = positive(u);
            assert!((PARAM_MIN..=PARAM_CAP).contains(&y), "{u} -> {y}");
        }
        for y in [0.06, 1.0, 5.0, 19.9] {
            assert!((positive(positive_inverse(y)).0 - y).abs() < 1e-12);
        }
        assert_eq!(positive(100.0), (PARAM_CAP, 0.0));
    }

    #[test]
    fn mlp_backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mlp = Mlp::new(&[4, 6, 5, 3], &mut rng);
        let x = vec![0.3, -1.2, 2.0, 0.7];
        let coef = [1.0, -2.0, 0.5];
        let f = |m: &Mlp, x: &[f64]| m.forward(x.to_vec()).0.iter().zip(coef).map(|(y, c)| y * c).sum::<f64>();
        let (_, cache) = mlp.forward(x.clone());
        let mut grad = mlp.zeros_like();
        let d_x = mlp.backward(&cache, coef.to_vec(), &mut grad);
        let h = 1e-6;
        for j in 0..x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[j] += h;
            xm[j] -= h;
            let fd = (f(&mlp, &xp) - f(&mlp, &xm)) / (2.0 * h);
            assert!((fd - d_x[j]).abs() < 1e-6, "input {j}");
        }
        let mut probe = mlp.clone();
        for (t, g) in grad.tensors().enumerate().collect::<Vec<_>>() {
            for k in 0..g.len() {
                let orig = probe.tensors().nth(t).unwrap()[k];
                probe.tensors_mut().nth(t).unwrap()[k] = orig + h;
                let fp = f(&probe, &x);
                probe.tensors_mut().nth(t).unwrap()[k] = orig - h;
                let fm = f(&probe, &x);
                probe.tensors_mut().nth(t).unwrap()[k] = orig;
                assert!(((fp - fm) / (2.0 * h) - g[k]).abs() < 1e-6, "tensor {t} entry {k}");
            }
        }
    }
}
