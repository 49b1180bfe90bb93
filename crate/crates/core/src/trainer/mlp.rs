//! Batched fully connected network with reverse-mode gradients.
//!
//! Rows of every batch matrix are samples. The output is the raw last affine
//! map; callers apply their own output transform.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::coupling::{Activation, MlpSpec, OutputTransform};
use crate::matcore::DenseMatrix;
use crate::rng::{normal, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub activation: Activation,
    /// `weights[l]` is `fan_out x fan_in`.
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Inputs to every affine map, saved by the forward pass.
pub struct MlpCache {
    inputs: Vec<Array2<f64>>,
}

impl Mlp {
    /// He/Glorot-style init with standard deviation `gain/√fan_in`; the last
    /// layer is scaled by `last_gain` (zero gives an exactly constant output).
    pub fn new(widths: &[usize], activation: Activation, gain: f64, last_gain: f64, rng: &mut Rng) -> Self {
        let n = widths.len() - 1;
        let mut weights = Vec::with_capacity(n);
        let mut biases = Vec::with_capacity(n);
        for l in 0..n {
            let g = if l + 1 == n { last_gain } else { gain };
            let std = g / (widths[l] as f64).sqrt();
            weights.push(Array2::from_shape_fn((widths[l + 1], widths[l]), |_| std * normal(rng)));
            biases.push(Array1::zeros(widths[l + 1]));
        }
        Self { activation, weights, biases }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            activation: self.activation,
            weights: self.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            biases: self.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.last().unwrap().nrows()
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            out.push(w.as_slice_mut().expect("standard layout"));
            out.push(b.as_slice_mut().expect("standard layout"));
        }
        out
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.push(w.as_slice().expect("standard layout"));
            out.push(b.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.forward_cached(x).0
    }

    pub fn forward_cached(&self, x: ArrayView2<f64>) -> (Array2<f64>, MlpCache) {
        let n = self.weights.len();
        let mut inputs = Vec::with_capacity(n);
        let mut h = x.to_owned();
        for l in 0..n {
            let mut z = h.dot(&self.weights[l].t()) + &self.biases[l];
            inputs.push(h);
            if l + 1 < n {
                let act = self.activation;
                z.mapv_inplace(|v| act.eval(v));
            }
            h = z;
        }
        (h, MlpCache { inputs })
    }

    /// Given the gradient with respect to the raw output, accumulates the
    /// parameter gradient into `grad` and returns the input gradient.
    pub fn backward(&self, cache: &MlpCache, dout: Array2<f64>, grad: &mut Mlp) -> Array2<f64> {
        let n = self.weights.len();
        let mut dz = dout;
        for l in (0..n).rev() {
            grad.weights[l] += &dz.t().dot(&cache.inputs[l]);
            grad.biases[l] += &dz.sum_axis(Axis(0));
            let dh = dz.dot(&self.weights[l]);
            if l == 0 {
                return dh;
            }
            let act = self.activation;
            dz = dh;
            dz.zip_mut_with(&cache.inputs[l], |g, &a| *g *= act.deriv_from_output(a));
        }
        unreachable!("network has at least one layer")
    }

    pub fn add_scaled(&mut self, other: &Mlp, c: f64) {
        for (w, o) in self.weights.iter_mut().zip(&other.weights) {
            w.scaled_add(c, o);
        }
        for (b, o) in self.biases.iter_mut().zip(&other.biases) {
            b.scaled_add(c, o);
        }
    }

    pub fn to_spec(&self, output: OutputTransform) -> MlpSpec {
        let mut widths = vec![self.input_dim()];
        widths.extend(self.weights.iter().map(|w| w.nrows()));
        let weights = self
            .weights
            .iter()
            .map(|w| DenseMatrix::new(w.nrows(), w.ncols(), w.iter().copied().collect()).expect("finite weights"))
            .collect();
        let biases = self.biases.iter().map(|b| b.to_vec()).collect();
        MlpSpec { widths, activation: self.activation, output, weights, biases }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn loss(m: &Mlp, x: &Array2<f64>, y: &Array2<f64>) -> f64 {
        let out = m.forward(x.view());
        (&out - y).mapv(|v| v * v).sum() / x.nrows() as f64
    }

    #[test]
    fn reverse_mode_matches_finite_differences() {
        let mut rng = seeded(100);
        for act in [Activation::Tanh, Activation::Relu] {
            let m = Mlp::new(&[3, 5, 4, 2], act, 1.0, 1.0, &mut rng);
            let x = Array2::from_shape_fn((8, 3), |_| normal(&mut rng));
            let y = Array2::from_shape_fn((8, 2), |_| normal(&mut rng));
            let (out, cache) = m.forward_cached(x.view());
            let mut g = m.zeros_like();
            m.backward(&cache, (&out - &y) * (2.0 / 8.0), &mut g);
            let h = 1e-6;
            let grads: Vec<Vec<f64>> = g.tensors().iter().map(|t| t.to_vec()).collect();
            for (ti, gt) in grads.iter().enumerate() {
                for i in 0..gt.len() {
                    let mut p = m.clone();
                    p.tensors_mut()[ti][i] += h;
                    let up = loss(&p, &x, &y);
                    p.tensors_mut()[ti][i] -= 2.0 * h;
                    let down = loss(&p, &x, &y);
                    let fd = (up - down) / (2.0 * h);
                    let scale = fd.abs().max(gt[i].abs()).max(1e-3);
                    assert!((fd - gt[i]).abs() / scale < 1e-4, "{act:?} tensor {ti} entry {i}: {fd} vs {}", gt[i]);
                }
            }
        }
    }

    #[test]
    fn matches_spec_evaluation() {
        let mut rng = seeded(101);
        let m = Mlp::new(&[2, 6, 3], Activation::Tanh, 1.0, 1.0, &mut rng);
        let spec = m.to_spec(OutputTransform::Identity);
        let x = Array2::from_shape_fn((4, 2), |_| normal(&mut rng));
        let out = m.forward(x.view());
        for r in 0..4 {
            let want = spec.forward(&x.row(r).to_vec());
            for c in 0..3 {
                assert!((out[(r, c)] - want[c]).abs() < 1e-14);
            }
        }
    }
}
