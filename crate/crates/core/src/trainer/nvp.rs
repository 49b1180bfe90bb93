//! Trainable stacks of nonlinear affine couplings (`s = exp(tanh(·))`) and
//! actnorm scalings, evaluated on batches.

use ndarray::{s, Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{Mlp, TrainError};
use crate::coupling::{ActNormLayer, Activation, LayerSequence, NonlinearCouplingLayer, OutputTransform, Side};
use crate::matcore::DenseMatrix;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NvpLayer {
    ActNorm { log_scale: Array1<f64> },
    Coupling { side: Side, s: Mlp, t: Mlp },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NvpModel {
    pub dim: usize,
    pub layers: Vec<NvpLayer>,
}

enum LayerCache {
    ActNorm { output: Array2<f64> },
    Coupling { input: Array2<f64>, s_cache: super::mlp::MlpCache, t_cache: super::mlp::MlpCache, ln_s: Array2<f64> },
}

pub struct NvpCache(Vec<LayerCache>);

impl NvpModel {
    /// `n_couplings` couplings alternating lower/upper, each preceded by an
    /// actnorm when `actnorm` is set. Subnetworks have two hidden layers of
    /// width `hidden`; their last layer starts at zero so the model starts
    /// at the identity.
    pub fn new(dim: usize, n_couplings: usize, hidden: usize, activation: Activation, actnorm: bool, rng: &mut Rng) -> Result<Self, TrainError> {
        if dim == 0 || dim % 2 != 0 {
            return Err(TrainError::InvalidConfig(format!("dimension {dim} must be even and positive")));
        }
        let h = dim / 2;
        let widths = [h, hidden, hidden, h];
        let mut layers = Vec::new();
        for k in 0..n_couplings {
            if actnorm {
                layers.push(NvpLayer::ActNorm { log_scale: Array1::zeros(dim) });
            }
            let side = if k % 2 == 0 { Side::Lower } else { Side::Upper };
            let s = Mlp::new(&widths, activation, 1.0, 0.0, rng);
            let t = Mlp::new(&widths, activation, 1.0, 0.0, rng);
            layers.push(NvpLayer::Coupling { side, s, t });
        }
        Ok(Self { dim, layers })
    }

    pub fn zeros_like(&self) -> Self {
        let layers = self
            .layers
            .iter()
            .map(|l| match l {
                NvpLayer::ActNorm { log_scale } => NvpLayer::ActNorm { log_scale: Array1::zeros(log_scale.len()) },
                NvpLayer::Coupling { side, s, t } => NvpLayer::Coupling { side: *side, s: s.zeros_like(), t: t.zeros_like() },
            })
            .collect();
        Self { dim: self.dim, layers }
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            match l {
                NvpLayer::ActNorm { log_scale } => out.push(log_scale.as_slice_mut().unwrap()),
                NvpLayer::Coupling { s, t, .. } => {
                    out.extend(s.tensors_mut());
                    out.extend(t.tensors_mut());
                }
            }
        }
        out
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for l in &self.layers {
            match l {
                NvpLayer::ActNorm { log_scale } => out.push(log_scale.as_slice().unwrap()),
                NvpLayer::Coupling { s, t, .. } => {
                    out.extend(s.tensors());
                    out.extend(t.tensors());
                }
            }
        }
        out
    }

    fn halves(&self, side: Side) -> (usize, usize) {
        let h = self.dim / 2;
        match side {
            Side::Lower => (0, h),
            Side::Upper => (h, 0),
        }
    }

    /// Output rows and per-sample `ln |det J|`.
    pub fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, Array1<f64>) {
        let (y, ld, _) = self.forward_cached(x);
        (y, ld)
    }

    pub fn forward_cached(&self, x: &Array2<f64>) -> (Array2<f64>, Array1<f64>, NvpCache) {
        let h = self.dim / 2;
        let mut cur = x.clone();
        let mut ld = Array1::zeros(x.nrows());
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            match layer {
                NvpLayer::ActNorm { log_scale } => {
                    let e = log_scale.mapv(f64::exp);
                    cur *= &e;
                    ld += log_scale.sum();
                    caches.push(LayerCache::ActNorm { output: cur.clone() });
                }
                NvpLayer::Coupling { side, s, t } => {
                    let (c, m) = self.halves(*side);
                    let cond = cur.slice(s![.., c..c + h]).to_owned();
                    let (raw_s, s_cache) = s.forward_cached(cond.view());
                    let (shift, t_cache) = t.forward_cached(cond.view());
                    let ln_s = raw_s.mapv(f64::tanh);
                    let input = cur.clone();
                    let mut moved = cur.slice_mut(s![.., m..m + h]);
                    moved *= &ln_s.mapv(f64::exp);
                    moved += &shift;
                    ld += &ln_s.sum_axis(Axis(1));
                    caches.push(LayerCache::Coupling { input, s_cache, t_cache, ln_s });
                }
            }
        }
        (cur, ld, NvpCache(caches))
    }

    /// Backpropagates `dy` (output gradient) and `dld` (gradient with respect
    /// to each sample's log-determinant); returns the parameter gradient.
    pub fn backward(&self, cache: &NvpCache, dy: Array2<f64>, dld: &Array1<f64>) -> NvpModel {
        let h = self.dim / 2;
        let mut grad = self.zeros_like();
        let mut g = dy;
        let total_dld = dld.sum();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            match (layer, &cache.0[k], &mut grad.layers[k]) {
                (NvpLayer::ActNorm { log_scale }, LayerCache::ActNorm { output }, NvpLayer::ActNorm { log_scale: gl }) => {
                    *gl = (&g * output).sum_axis(Axis(0)) + total_dld;
                    g *= &log_scale.mapv(f64::exp);
                }
                (NvpLayer::Coupling { side, s, t }, LayerCache::Coupling { input, s_cache, t_cache, ln_s }, NvpLayer::Coupling { s: gs, t: gt, .. }) => {
                    let (c, m) = self.halves(*side);
                    let scale = ln_s.mapv(f64::exp);
                    let dy_m = g.slice(s![.., m..m + h]).to_owned();
                    let x_m = input.slice(s![.., m..m + h]);
                    let mut dln = &dy_m * &x_m * &scale;
                    dln += &dld.view().insert_axis(Axis(1));
                    let draw = dln * &ln_s.mapv(|v| 1.0 - v * v);
                    let dcond_s = s.backward(s_cache, draw, gs);
                    let dcond_t = t.backward(t_cache, dy_m.clone(), gt);
                    let mut dc = g.slice_mut(s![.., c..c + h]);
                    dc += &dcond_s;
                    dc += &dcond_t;
                    let mut dm = g.slice_mut(s![.., m..m + h]);
                    dm.assign(&(&dy_m * &scale));
                }
                _ => unreachable!("gradient model mirrors the model"),
            }
        }
        grad
    }

    pub fn to_layer_sequence(&self) -> Result<LayerSequence, TrainError> {
        let mut seq = LayerSequence::empty(self.dim);
        for l in &self.layers {
            match l {
                NvpLayer::ActNorm { log_scale } => seq.push(ActNormLayer::new(log_scale.iter().map(|v| v.exp()).collect())?)?,
                NvpLayer::Coupling { side, s, t } => {
                    seq.push(NonlinearCouplingLayer::new(*side, s.to_spec(OutputTransform::ExpTanh), t.to_spec(OutputTransform::Identity))?)?
                }
            }
        }
        Ok(seq)
    }

    /// Jacobian of the map at one point.
    pub fn jacobian(&self, x: &[f64]) -> Result<DenseMatrix, TrainError> {
        Ok(self.to_layer_sequence()?.jacobian(x)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{normal, seeded};

    fn perturbed(rng: &mut Rng, dim: usize, actnorm: bool) -> NvpModel {
        let mut m = NvpModel::new(dim, 3, 6, Activation::Tanh, actnorm, rng).unwrap();
        for t in m.tensors_mut() {
            for v in t.iter_mut() {
                *v += 0.3 * normal(rng);
            }
        }
        m
    }

    fn objective(m: &NvpModel, x: &Array2<f64>, w: &Array2<f64>) -> f64 {
        let (y, ld) = m.forward(x);
        (&y * w).sum() - 0.7 * ld.sum()
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = seeded(110);
        for actnorm in [false, true] {
            let m = perturbed(&mut rng, 4, actnorm);
            let x = Array2::from_shape_fn((5, 4), |_| normal(&mut rng));
            let w = Array2::from_shape_fn((5, 4), |_| normal(&mut rng));
            let (_, _, cache) = m.forward_cached(&x);
            let g = m.backward(&cache, w.clone(), &Array1::from_elem(5, -0.7));
            let grads: Vec<Vec<f64>> = g.tensors().iter().map(|t| t.to_vec()).collect();
            let h = 1e-6;
            for (ti, gt) in grads.iter().enumerate() {
                for i in (0..gt.len()).step_by(3) {
                    let mut p = m.clone();
                    p.tensors_mut()[ti][i] += h;
                    let up = objective(&p, &x, &w);
                    p.tensors_mut()[ti][i] -= 2.0 * h;
                    let down = objective(&p, &x, &w);
                    let fd = (up - down) / (2.0 * h);
                    let scale = fd.abs().max(gt[i].abs()).max(1e-3);
                    assert!((fd - gt[i]).abs() / scale < 1e-4, "tensor {ti} entry {i}: {fd} vs {}", gt[i]);
                }
            }
        }
    }

    #[test]
    fn agrees_with_layer_sequence() {
        let mut rng = seeded(111);
        let m = perturbed(&mut rng, 4, true);
        let seq = m.to_layer_sequence().unwrap();
        let x = Array2::from_shape_fn((3, 4), |_| normal(&mut rng));
        let (y, ld) = m.forward(&x);
        for r in 0..3 {
            let (want, want_ld) = seq.apply_with_log_det(&x.row(r).to_vec()).unwrap();
            for c in 0..4 {
                assert!((y[(r, c)] - want[c]).abs() < 1e-12);
            }
            assert!((ld[r] - want_ld).abs() < 1e-12);
        }
    }

    #[test]
    fn starts_at_identity() {
        let m = NvpModel::new(4, 4, 8, Activation::Relu, true, &mut seeded(112)).unwrap();
        let x = Array2::from_shape_fn((2, 4), |(i, j)| (i * 4 + j) as f64);
        let (y, ld) = m.forward(&x);
        assert_eq!(y, x);
        assert!(ld.iter().all(|v| *v == 0.0));
    }
}
