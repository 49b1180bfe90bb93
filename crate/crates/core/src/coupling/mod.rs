//! Affine coupling layers on `R^{2d}` split as `(x1, x2)` = (first half, second half).
//!
//! * `Lower`: `y1 = x1`, `y2 = x2 ⊙ s(x1) + t(x1)`; the linear form is `[I 0; A diag(B)]`.
//! * `Upper`: `y1 = x1 ⊙ s(x2) + t(x2)`, `y2 = x2`; the linear form is `[diag(C) D; 0 I]`.
//!
//! A [`LayerSequence`] applies its layers in order, so its matrix is
//! `M_k ⋯ M_2 M_1`.

mod mlp;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mlp::{Activation, MlpSpec, OutputTransform};

use crate::matcore::{matmul, DenseMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("sequence contains a nonlinear layer; no matrix form exists")]
    NonlinearLayerPresent,
    #[error("invalid layer: {0}")]
    InvalidLayer(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Lower,
    Upper,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Lower => Side::Upper,
            Side::Upper => Side::Lower,
        }
    }
}

/// Linear coupling: `Lower` holds `(A, B)`, `Upper` holds `(D, C)` as
/// `(dense_block, diag_block)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearCouplingLayer {
    side: Side,
    dense_block: DenseMatrix,
    diag_block: Vec<f64>,
}

impl LinearCouplingLayer {
    pub fn new(side: Side, dense_block: DenseMatrix, diag_block: Vec<f64>) -> Result<Self, CouplingError> {
        let d = diag_block.len();
        if dense_block.rows() != d || dense_block.cols() != d {
            return Err(CouplingError::DimensionMismatch(format!(
                "dense block {}x{} with {d} diagonal entries",
                dense_block.rows(),
                dense_block.cols()
            )));
        }
        if diag_block.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
            return Err(CouplingError::InvalidLayer("diagonal block entries must be positive and finite".into()));
        }
        Ok(Self { side, dense_block, diag_block })
    }

    /// `[I 0; A diag(B)]`.
    pub fn lower(a: DenseMatrix, b: Vec<f64>) -> Result<Self, CouplingError> {
        Self::new(Side::Lower, a, b)
    }

    /// `[diag(C) D; 0 I]`.
    pub fn upper(c: Vec<f64>, d: DenseMatrix) -> Result<Self, CouplingError> {
        Self::new(Side::Upper, d, c)
    }

    pub fn identity(side: Side, d: usize) -> Self {
        Self { side, dense_block: DenseMatrix::zeros(d, d), diag_block: vec![1.0; d] }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn dense_block(&self) -> &DenseMatrix {
        &self.dense_block
    }

    pub fn diag_block(&self) -> &[f64] {
        &self.diag_block
    }

    pub fn dim_half(&self) -> usize {
        self.diag_block.len()
    }

    pub fn is_identity(&self) -> bool {
        self.dense_block.max_abs() == 0.0 && self.diag_block.iter().all(|&b| b == 1.0)
    }

    pub fn as_matrix(&self) -> DenseMatrix {
        let d = self.dim_half();
        let mut m = DenseMatrix::identity(2 * d);
        match self.side {
            Side::Lower => {
                m.set_block(d, 0, &self.dense_block);
                for i in 0..d {
                    m[(d + i, d + i)] = self.diag_block[i];
                }
            }
            Side::Upper => {
                m.set_block(0, d, &self.dense_block);
                for i in 0..d {
                    m[(i, i)] = self.diag_block[i];
                }
            }
        }
        m
    }

    fn apply(&self, x: &mut [f64]) {
        let d = self.dim_half();
        let (x1, x2) = x.split_at_mut(d);
        match self.side {
            Side::Lower => {
                let ax = self.dense_block.mul_vec(x1).expect("shape checked");
                for i in 0..d {
                    x2[i] = self.diag_block[i] * x2[i] + ax[i];
                }
            }
            Side::Upper => {
                let dx = self.dense_block.mul_vec(x2).expect("shape checked");
                for i in 0..d {
                    x1[i] = self.diag_block[i] * x1[i] + dx[i];
                }
            }
        }
    }

    fn invert(&self, y: &mut [f64]) {
        let d = self.dim_half();
        let (y1, y2) = y.split_at_mut(d);
        match self.side {
            Side::Lower => {
                let ay = self.dense_block.mul_vec(y1).expect("shape checked");
                for i in 0..d {
                    y2[i] = (y2[i] - ay[i]) / self.diag_block[i];
                }
            }
            Side::Upper => {
                let dy = self.dense_block.mul_vec(y2).expect("shape checked");
                for i in 0..d {
                    y1[i] = (y1[i] - dy[i]) / self.diag_block[i];
                }
            }
        }
    }

    fn log_det(&self) -> f64 {
        self.diag_block.iter().map(|b| b.ln()).sum()
    }
}

/// Diagonal rescaling of all `2d` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActNormLayer {
    scale: Vec<f64>,
}

impl ActNormLayer {
    pub fn new(scale: Vec<f64>) -> Result<Self, CouplingError> {
        if scale.iter().any(|&s| s == 0.0 || !s.is_finite()) {
            return Err(CouplingError::InvalidLayer("actnorm scales must be nonzero and finite".into()));
        }
        Ok(Self { scale })
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }
}

/// `s` and `t` are MLPs from `R^d` to `R^d`; `s` must have a positive output transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearCouplingLayer {
    side: Side,
    s_net: MlpSpec,
    t_net: MlpSpec,
}

impl NonlinearCouplingLayer {
    pub fn new(side: Side, s_net: MlpSpec, t_net: MlpSpec) -> Result<Self, CouplingError> {
        s_net.validate()?;
        t_net.validate()?;
        if !s_net.output.is_positive() {
            return Err(CouplingError::InvalidLayer("scale network needs a positive output transform".into()));
        }
        let d = s_net.input_dim();
        if s_net.output_dim() != d || t_net.input_dim() != d || t_net.output_dim() != d {
            return Err(CouplingError::DimensionMismatch("s and t networks must map R^d to R^d".into()));
        }
        Ok(Self { side, s_net, t_net })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn s_net(&self) -> &MlpSpec {
        &self.s_net
    }

    pub fn t_net(&self) -> &MlpSpec {
        &self.t_net
    }

    pub fn dim_half(&self) -> usize {
        self.s_net.input_dim()
    }

    /// Returns (conditioner half, transformed half) index offsets.
    fn halves(&self) -> (usize, usize) {
        let d = self.dim_half();
        match self.side {
            Side::Lower => (0, d),
            Side::Upper => (d, 0),
        }
    }

    fn apply(&self, x: &mut [f64]) -> f64 {
        let d = self.dim_half();
        let (c, m) = self.halves();
        let cond = x[c..c + d].to_vec();
        let ln_s = self.s_net.forward_ln(&cond);
        let t = self.t_net.forward(&cond);
        for i in 0..d {
            x[m + i] = x[m + i] * ln_s[i].exp() + t[i];
        }
        ln_s.iter().sum()
    }

    fn invert(&self, y: &mut [f64]) {
        let d = self.dim_half();
        let (c, m) = self.halves();
        let cond = y[c..c + d].to_vec();
        let s = self.s_net.forward(&cond);
        let t = self.t_net.forward(&cond);
        for i in 0..d {
            y[m + i] = (y[m + i] - t[i]) / s[i];
        }
    }

    fn jacobian(&self, x: &[f64]) -> DenseMatrix {
        let d = self.dim_half();
        let (c, m) = self.halves();
        let cond = &x[c..c + d];
        let (s, js) = self.s_net.forward_with_jacobian(cond);
        let (_, jt) = self.t_net.forward_with_jacobian(cond);
        let mut j = DenseMatrix::identity(2 * d);
        for i in 0..d {
            j[(m + i, m + i)] = s[i];
            for k in 0..d {
                j[(m + i, c + k)] = x[m + i] * js[(i, k)] + jt[(i, k)];
            }
        }
        j
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layer {
    Linear(LinearCouplingLayer),
    ActNorm(ActNormLayer),
    Nonlinear(NonlinearCouplingLayer),
}

impl Layer {
    /// Ambient dimension implied by the layer.
    pub fn dim(&self) -> usize {
        match self {
            Layer::Linear(l) => 2 * l.dim_half(),
            Layer::ActNorm(a) => a.scale.len(),
            Layer::Nonlinear(n) => 2 * n.dim_half(),
        }
    }

    pub fn as_matrix(&self) -> Result<DenseMatrix, CouplingError> {
        match self {
            Layer::Linear(l) => Ok(l.as_matrix()),
            Layer::ActNorm(a) => Ok(DenseMatrix::from_diag(&a.scale)),
            Layer::Nonlinear(_) => Err(CouplingError::NonlinearLayerPresent),
        }
    }

    /// Applies the layer in place and returns its log |det Jacobian| at the input.
    pub fn apply_in_place(&self, x: &mut [f64]) -> f64 {
        match self {
            Layer::Linear(l) => {
                l.apply(x);
                l.log_det()
            }
            Layer::ActNorm(a) => {
                x.iter_mut().zip(&a.scale).for_each(|(v, s)| *v *= s);
                a.scale.iter().map(|s| s.abs().ln()).sum()
            }
            Layer::Nonlinear(n) => n.apply(x),
        }
    }

    pub fn invert_in_place(&self, y: &mut [f64]) {
        match self {
            Layer::Linear(l) => l.invert(y),
            Layer::ActNorm(a) => y.iter_mut().zip(&a.scale).for_each(|(v, s)| *v /= s),
            Layer::Nonlinear(n) => n.invert(y),
        }
    }

    pub fn jacobian(&self, x: &[f64]) -> DenseMatrix {
        match self {
            Layer::Linear(l) => l.as_matrix(),
            Layer::ActNorm(a) => DenseMatrix::from_diag(&a.scale),
            Layer::Nonlinear(n) => n.jacobian(x),
        }
    }
}

impl From<LinearCouplingLayer> for Layer {
    fn from(l: LinearCouplingLayer) -> Self {
        Layer::Linear(l)
    }
}

impl From<ActNormLayer> for Layer {
    fn from(l: ActNormLayer) -> Self {
        Layer::ActNorm(l)
    }
}

impl From<NonlinearCouplingLayer> for Layer {
    fn from(l: NonlinearCouplingLayer) -> Self {
        Layer::Nonlinear(l)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSequence {
    dim: usize,
    layers: Vec<Layer>,
}

impl LayerSequence {
    pub fn new(dim: usize, layers: Vec<Layer>) -> Result<Self, CouplingError> {
        for (k, l) in layers.iter().enumerate() {
            if l.dim() != dim {
                return Err(CouplingError::DimensionMismatch(format!(
                    "layer {k} acts on dimension {}, sequence on {dim}",
                    l.dim()
                )));
            }
        }
        Ok(Self { dim, layers })
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, layers: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn push(&mut self, layer: impl Into<Layer>) -> Result<(), CouplingError> {
        let layer = layer.into();
        if layer.dim() != self.dim {
            return Err(CouplingError::DimensionMismatch(format!(
                "layer acts on dimension {}, sequence on {}",
                layer.dim(),
                self.dim
            )));
        }
        self.layers.push(layer);
        Ok(())
    }

    /// Appends all layers of `other` (applied after `self`).
    pub fn extend(&mut self, other: LayerSequence) -> Result<(), CouplingError> {
        if other.dim != self.dim {
            return Err(CouplingError::DimensionMismatch(format!("{} vs {}", other.dim, self.dim)));
        }
        self.layers.extend(other.layers);
        Ok(())
    }

    pub fn linear_layers(&self) -> impl Iterator<Item = &LinearCouplingLayer> {
        self.layers.iter().filter_map(|l| match l {
            Layer::Linear(l) => Some(l),
            _ => None,
        })
    }

    fn check_len(&self, x: &[f64]) -> Result<(), CouplingError> {
        if x.len() != self.dim {
            return Err(CouplingError::DimensionMismatch(format!(
                "vector of length {} for a sequence on dimension {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, CouplingError> {
        Ok(self.apply_with_log_det(x)?.0)
    }

    pub fn apply_with_log_det(&self, x: &[f64]) -> Result<(Vec<f64>, f64), CouplingError> {
        self.check_len(x)?;
        let mut y = x.to_vec();
        let mut ld = 0.0;
        for l in &self.layers {
            ld += l.apply_in_place(&mut y);
        }
        Ok((y, ld))
    }

    pub fn invert(&self, y: &[f64]) -> Result<Vec<f64>, CouplingError> {
        self.check_len(y)?;
        let mut x = y.to_vec();
        for l in self.layers.iter().rev() {
            l.invert_in_place(&mut x);
        }
        Ok(x)
    }

    /// `M_k ⋯ M_1` for a sequence without nonlinear layers.
    pub fn as_matrix(&self) -> Result<DenseMatrix, CouplingError> {
        let mut acc = DenseMatrix::identity(self.dim);
        for l in &self.layers {
            acc = matmul(&l.as_matrix()?, &acc).expect("square of equal size");
        }
        Ok(acc)
    }

    pub fn jacobian(&self, x: &[f64]) -> Result<DenseMatrix, CouplingError> {
        self.check_len(x)?;
        let mut acc = DenseMatrix::identity(self.dim);
        let mut cur = x.to_vec();
        for l in &self.layers {
            acc = matmul(&l.jacobian(&cur), &acc).expect("square of equal size");
            l.apply_in_place(&mut cur);
        }
        Ok(acc)
    }

    pub fn log_det_jacobian(&self, x: &[f64]) -> Result<f64, CouplingError> {
        Ok(self.apply_with_log_det(x)?.1)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("layer sequences always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, CouplingError> {
        let seq: LayerSequence =
            serde_json::from_str(text).map_err(|e| CouplingError::InvalidLayer(format!("bad layer JSON: {e}")))?;
        LayerSequence::new(seq.dim, seq.layers)
    }
}
