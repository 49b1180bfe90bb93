//! Trainable stacks of linear couplings and actnorm scalings.
//!
//! Gradients take the matrix route: the stack is applied to the identity to
//! get the realized matrix, the loss gradient with respect to that matrix is
//! formed in closed form, and it is pulled back through the structured
//! factors. Diagonal entries are stored as logs.

use serde::{Deserialize, Serialize};

use super::{should_log, Adam, LogEntry, RunRecord, TargetKind, TrainConfig, TrainError};
use crate::coupling::{ActNormLayer, Layer, LayerSequence, LinearCouplingLayer};
use crate::matcore::DenseMatrix;
use crate::metrics::relative_frobenius;
use crate::rng::{normal, normal_matrix, stream, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    /// `diag(e)`, params `[ln e]`.
    ActNorm,
    /// `[I 0; A diag(b)]`, params `[A row-major, ln b]`.
    Lower,
    /// `[diag(c) D; 0 I]`, params `[ln c, D row-major]`.
    Upper,
}

/// Factors in application order: the first factor acts on the input first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearStack {
    dim: usize,
    factors: Vec<FactorKind>,
    offsets: Vec<usize>,
    params: Vec<f64>,
}

/// `Π_i E_i [C_i D_i; 0 I][I 0; A_i B_i]`.
pub type PlnModel = LinearStack;

impl LinearStack {
    /// All factors at the identity.
    pub fn new(dim: usize, factors: Vec<FactorKind>) -> Result<Self, TrainError> {
        if dim == 0 || dim % 2 != 0 {
            return Err(TrainError::InvalidConfig(format!("dimension {dim} must be even and positive")));
        }
        let h = dim / 2;
        let mut offsets = Vec::with_capacity(factors.len());
        let mut n = 0;
        for f in &factors {
            offsets.push(n);
            n += match f {
                FactorKind::ActNorm => dim,
                FactorKind::Lower | FactorKind::Upper => h * h + h,
            };
        }
        Ok(Self { dim, factors, offsets, params: vec![0.0; n] })
    }

    /// `n_layers` blocks of (lower, upper, actnorm) in application order.
    pub fn pln(dim: usize, n_layers: usize) -> Result<Self, TrainError> {
        let pattern = [FactorKind::Lower, FactorKind::Upper, FactorKind::ActNorm];
        Self::new(dim, pattern.iter().copied().cycle().take(3 * n_layers).collect())
    }

    /// `n` couplings alternating lower, upper, lower, ...
    pub fn alternating(dim: usize, n: usize) -> Result<Self, TrainError> {
        let pattern = [FactorKind::Lower, FactorKind::Upper];
        Self::new(dim, pattern.iter().copied().cycle().take(n).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factors(&self) -> &[FactorKind] {
        &self.factors
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn half(&self) -> usize {
        self.dim / 2
    }

    fn dense_range(&self, k: usize) -> std::ops::Range<usize> {
        let (h, o) = (self.half(), self.offsets[k]);
        match self.factors[k] {
            FactorKind::ActNorm => o..o,
            FactorKind::Lower => o..o + h * h,
            FactorKind::Upper => o + h..o + h + h * h,
        }
    }

    fn log_range(&self, k: usize) -> std::ops::Range<usize> {
        let (h, o) = (self.half(), self.offsets[k]);
        match self.factors[k] {
            FactorKind::ActNorm => o..o + self.dim,
            FactorKind::Lower => o + h * h..o + h * h + h,
            FactorKind::Upper => o..o + h,
        }
    }

    /// Gaussian dense blocks with standard deviation `std`; diagonals untouched.
    pub fn randomize_dense(&mut self, std: f64, rng: &mut Rng) {
        for k in 0..self.factors.len() {
            for i in self.dense_range(k) {
                self.params[i] = std * normal(rng);
            }
        }
    }

    /// Applies the stack to each column of `x` (`dim x m`).
    pub fn forward(&self, x: &DenseMatrix) -> DenseMatrix {
        let mut cur = x.clone();
        for k in 0..self.factors.len() {
            cur = self.apply_factor(k, &cur);
        }
        cur
    }

    /// Inputs to every factor followed by the final output.
    fn forward_cached(&self, x: &DenseMatrix) -> Vec<DenseMatrix> {
        let mut out = Vec::with_capacity(self.factors.len() + 1);
        out.push(x.clone());
        for k in 0..self.factors.len() {
            let next = self.apply_factor(k, out.last().unwrap());
            out.push(next);
        }
        out
    }

    fn apply_factor(&self, k: usize, x: &DenseMatrix) -> DenseMatrix {
        let h = self.half();
        let m = x.cols();
        let mut y = x.clone();
        let dense = &self.params[self.dense_range(k)];
        let logs = &self.params[self.log_range(k)];
        match self.factors[k] {
            FactorKind::ActNorm => {
                for i in 0..self.dim {
                    let e = logs[i].exp();
                    for j in 0..m {
                        y[(i, j)] *= e;
                    }
                }
            }
            FactorKind::Lower => {
                for i in 0..h {
                    let b = logs[i].exp();
                    for j in 0..m {
                        let mut s = b * x[(h + i, j)];
                        for q in 0..h {
                            s += dense[i * h + q] * x[(q, j)];
                        }
                        y[(h + i, j)] = s;
                    }
                }
            }
            FactorKind::Upper => {
                for i in 0..h {
                    let c = logs[i].exp();
                    for j in 0..m {
                        let mut s = c * x[(i, j)];
                        for q in 0..h {
                            s += dense[i * h + q] * x[(h + q, j)];
                        }
                        y[(i, j)] = s;
                    }
                }
            }
        }
        y
    }

    /// Pulls `dy` (gradient with respect to the output) back through the
    /// stack; returns the parameter gradient.
    fn backward(&self, cache: &[DenseMatrix], dy: &DenseMatrix) -> Vec<f64> {
        let h = self.half();
        let mut grad = vec![0.0; self.params.len()];
        let mut g = dy.clone();
        for k in (0..self.factors.len()).rev() {
            let x = &cache[k];
            let m = x.cols();
            let dr = self.dense_range(k);
            let lr = self.log_range(k);
            let dense = &self.params[dr.clone()];
            let logs = &self.params[lr.clone()];
            let mut gx = g.clone();
            match self.factors[k] {
                FactorKind::ActNorm => {
                    for i in 0..self.dim {
                        let e = logs[i].exp();
                        let mut acc = 0.0;
                        for j in 0..m {
                            acc += g[(i, j)] * x[(i, j)];
                            gx[(i, j)] = e * g[(i, j)];
                        }
                        grad[lr.start + i] = e * acc;
                    }
                }
                FactorKind::Lower => {
                    for i in 0..h {
                        let b = logs[i].exp();
                        let mut acc = 0.0;
                        for j in 0..m {
                            acc += g[(h + i, j)] * x[(h + i, j)];
                            gx[(h + i, j)] = b * g[(h + i, j)];
                        }
                        grad[lr.start + i] = b * acc;
                        for q in 0..h {
                            let mut s = 0.0;
                            for j in 0..m {
                                s += g[(h + i, j)] * x[(q, j)];
                            }
                            grad[dr.start + i * h + q] = s;
                        }
                    }
                    for q in 0..h {
                        for j in 0..m {
                            let mut s = 0.0;
                            for i in 0..h {
                                s += dense[i * h + q] * g[(h + i, j)];
                            }
                            gx[(q, j)] += s;
                        }
                    }
                }
                FactorKind::Upper => {
                    for i in 0..h {
                        let c = logs[i].exp();
                        let mut acc = 0.0;
                        for j in 0..m {
                            acc += g[(i, j)] * x[(i, j)];
                            gx[(i, j)] = c * g[(i, j)];
                        }
                        grad[lr.start + i] = c * acc;
                        for q in 0..h {
                            let mut s = 0.0;
                            for j in 0..m {
                                s += g[(i, j)] * x[(h + q, j)];
                            }
                            grad[dr.start + i * h + q] = s;
                        }
                    }
                    for q in 0..h {
                        for j in 0..m {
                            let mut s = 0.0;
                            for i in 0..h {
                                s += dense[i * h + q] * g[(i, j)];
                            }
                            gx[(h + q, j)] += s;
                        }
                    }
                }
            }
            g = gx;
        }
        grad
    }

    /// The realized matrix.
    pub fn as_matrix(&self) -> DenseMatrix {
        self.forward(&DenseMatrix::identity(self.dim))
    }

    /// `ln det` of the realized matrix: the sum of the diagonal log-parameters.
    pub fn log_det(&self) -> f64 {
        (0..self.factors.len()).flat_map(|k| self.log_range(k)).map(|i| self.params[i]).sum()
    }

    pub fn log_det_grad(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.params.len()];
        for k in 0..self.factors.len() {
            for i in self.log_range(k) {
                g[i] = 1.0;
            }
        }
        g
    }

    /// Gradient of a scalar function of the realized matrix, given its
    /// matrix gradient.
    pub fn matrix_route_gradient(&self, dmat: &DenseMatrix) -> Vec<f64> {
        let cache = self.forward_cached(&DenseMatrix::identity(self.dim));
        self.backward(&cache, dmat)
    }

    pub fn to_layer_sequence(&self) -> Result<LayerSequence, TrainError> {
        let h = self.half();
        let mut seq = LayerSequence::empty(self.dim);
        for k in 0..self.factors.len() {
            let dense = &self.params[self.dense_range(k)];
            let diag: Vec<f64> = self.params[self.log_range(k)].iter().map(|v| v.exp()).collect();
            let layer: Layer = match self.factors[k] {
                FactorKind::ActNorm => ActNormLayer::new(diag)?.into(),
                FactorKind::Lower => LinearCouplingLayer::lower(DenseMatrix::new(h, h, dense.to_vec())?, diag)?.into(),
                FactorKind::Upper => LinearCouplingLayer::upper(diag, DenseMatrix::new(h, h, dense.to_vec())?)?.into(),
            };
            seq.push(layer)?;
        }
        Ok(seq)
    }
}

/// Diagonals at one, dense blocks `N(0, init_std²)`.
pub fn init_pln(d: usize, n_layers: usize, init_std: f64, seed: u64) -> Result<PlnModel, TrainError> {
    if n_layers == 0 {
        return Err(TrainError::InvalidConfig("n_layers must be at least 1".into()));
    }
    let mut m = LinearStack::pln(d, n_layers)?;
    m.randomize_dense(init_std, &mut crate::rng::seeded(seed));
    Ok(m)
}

/// Batch regression loss `Σ_b ‖(Â − A) z_b‖² / (B d)` and its gradient.
/// Columns of `batch_z` are the samples.
pub fn pln_gradients(model: &LinearStack, batch_z: &DenseMatrix, target: &DenseMatrix) -> (f64, Vec<f64>) {
    let d = model.dim();
    let b = batch_z.cols();
    let cache = model.forward_cached(&DenseMatrix::identity(d));
    let diff = cache.last().unwrap() - target;
    let resid = &diff * batch_z;
    let norm = 1.0 / (b as f64 * d as f64);
    let loss = resid.as_slice().iter().map(|v| v * v).sum::<f64>() * norm;
    let dmat = (&resid * &batch_z.transpose()).scale(2.0 * norm);
    (loss, model.backward(&cache, &dmat))
}

/// Regression target for one seed. Matrices are conditioned on positive
/// determinant, since every stack realizes an orientation-preserving map.
pub fn sample_target(kind: TargetKind, d: usize, rng: &mut Rng) -> Result<DenseMatrix, TrainError> {
    loop {
        let t = match kind {
            TargetKind::GaussianMatrix => normal_matrix(rng, d, d),
            TargetKind::ToeplitzMatrix => {
                let diag: Vec<f64> = (0..2 * d - 1).map(|_| normal(rng)).collect();
                DenseMatrix::from_fn(d, d, |i, j| diag[i + d - 1 - j])
            }
            other => return Err(TrainError::InvalidConfig(format!("{other:?} is not a matrix target"))),
        };
        if t.det()? > 0.0 {
            return Ok(t);
        }
    }
}

fn regress(
    mut model: LinearStack,
    target: &DenseMatrix,
    cfg: &TrainConfig,
    mut record: RunRecord,
    batch_rng: &mut Rng,
) -> Result<(LinearStack, RunRecord), TrainError> {
    let d = model.dim();
    let mut opt = Adam::new(cfg.lr);
    let frob = |m: &LinearStack| {
        let diff = &m.as_matrix() - target;
        diff.as_slice().iter().map(|v| v * v).sum::<f64>() / (d * d) as f64
    };
    for step in 1..=cfg.steps {
        let z = normal_matrix(batch_rng, d, cfg.batch_size);
        let (loss, grad) = pln_gradients(&model, &z, target);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(record.diverged(step));
        }
        opt.step(vec![model.params_mut()], vec![&grad]);
        if should_log(step, cfg) {
            record.entries.push(LogEntry { step, loss, frobenius_error: Some(frob(&model)), ..Default::default() });
        }
    }
    record.final_entry = record.entries.last().cloned();
    Ok((model, record))
}

/// One seed of the partitioned-linear-network regression on a `d x d`
/// target (`d` is the full dimension). Loss is normalized by `1/d`, squared
/// Frobenius error by `1/d²`.
pub fn train_pln(cfg: &TrainConfig, d: usize, n_layers: usize, seed: u64) -> Result<RunRecord, TrainError> {
    cfg.validate()?;
    let target = sample_target(cfg.target, d, &mut stream(cfg.master_seed, seed, "pln-target"))?;
    let mut model = LinearStack::pln(d, n_layers)?;
    model.randomize_dense(cfg.init_std, &mut stream(cfg.master_seed, seed, "pln-init"));
    let record = RunRecord::new("pln", seed, cfg).label("d", d).label("n_layers", n_layers).label("target", format!("{:?}", cfg.target));
    let (_, record) = regress(model, &target, cfg, record, &mut stream(cfg.master_seed, seed, "pln-batch"))?;
    Ok(record)
}

/// Fits `n_matrices` alternating couplings to `target` by the same
/// regression; returns the relative Frobenius residual of the fit.
pub fn fit_linear_product(target: &DenseMatrix, n_matrices: usize, cfg: &TrainConfig, seed: u64) -> Result<(f64, RunRecord), TrainError> {
    cfg.validate()?;
    let d = target.rows();
    if !target.is_square() {
        return Err(TrainError::InvalidConfig("target must be square".into()));
    }
    let mut model = LinearStack::alternating(d, n_matrices)?;
    model.randomize_dense(cfg.init_std, &mut stream(cfg.master_seed, seed, "fit-init"));
    let record = RunRecord::new("fit", seed, cfg).label("n_matrices", n_matrices);
    let (model, record) = regress(model, target, cfg, record, &mut stream(cfg.master_seed, seed, "fit-batch"))?;
    Ok((relative_frobenius(&model.as_matrix(), target).expect("same shape"), record))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MleCheck {
    pub fitted_covariance: DenseMatrix,
    pub sample_covariance: DenseMatrix,
    pub frobenius_gap: f64,
    pub record: RunRecord,
}

/// Maximum-likelihood fit of a linear stack to `N(0, Σ)` samples.
///
/// The stack `M` maps data to latents, so the per-sample negative
/// log-likelihood is `½‖Mx‖² − ln det M + const`. Its average over the
/// sample depends on the data only through the sample covariance `S`, so
/// each step uses the exact full-sample gradient `M S` (plus the log-det
/// term). The fitted covariance is `(MᵀM)⁻¹`.
pub fn mle_linear_gaussian_check(
    sigma: &DenseMatrix,
    n_samples: usize,
    n_layers: usize,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<MleCheck, TrainError> {
    cfg.validate()?;
    let d = sigma.rows();
    let chol = cholesky(sigma).ok_or_else(|| TrainError::InvalidConfig("sigma must be symmetric positive definite".into()))?;
    let mut rng = stream(cfg.master_seed, seed, "mle-data");
    let mut s = DenseMatrix::zeros(d, d);
    for _ in 0..n_samples {
        let z: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
        let x = chol.mul_vec(&z)?;
        for i in 0..d {
            for j in 0..d {
                s[(i, j)] += x[i] * x[j];
            }
        }
    }
    let s = s.scale(1.0 / n_samples as f64);

    let mut model = LinearStack::pln(d, n_layers)?;
    model.randomize_dense(cfg.init_std, &mut stream(cfg.master_seed, seed, "mle-init"));
    let ld_grad = model.log_det_grad();
    let mut opt = Adam::new(cfg.lr);
    let mut record = RunRecord::new("mle-linear", seed, cfg).label("d", d).label("n_samples", n_samples);
    let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    for step in 1..=cfg.steps {
        let (nll, grad) = linear_nll_gradient(&model, &s, &ld_grad);
        if !nll.is_finite() {
            return Err(record.diverged(step));
        }
        opt.step(vec![model.params_mut()], vec![&grad]);
        if should_log(step, cfg) {
            let nll = nll + d as f64 * half_ln_2pi;
            record.entries.push(LogEntry { step, loss: nll, nll: Some(nll), ..Default::default() });
        }
    }
    record.final_entry = record.entries.last().cloned();
    let m = model.as_matrix();
    let fitted = (&m.transpose() * &m).inverse()?;
    let gap = relative_frobenius(&fitted, &s).expect("same shape");
    Ok(MleCheck { fitted_covariance: fitted, sample_covariance: s, frobenius_gap: gap, record })
}

/// `½ tr(M S Mᵀ) − ln det M` and its parameter gradient.
fn linear_nll_gradient(model: &LinearStack, s: &DenseMatrix, ld_grad: &[f64]) -> (f64, Vec<f64>) {
    let m = model.as_matrix();
    let ms = &m * s;
    let quad: f64 = (0..m.rows()).map(|i| (0..m.cols()).map(|j| ms[(i, j)] * m[(i, j)]).sum::<f64>()).sum();
    let nll = 0.5 * quad - model.log_det();
    let mut grad = model.matrix_route_gradient(&ms);
    for (g, l) in grad.iter_mut().zip(ld_grad) {
        *g -= l;
    }
    (nll, grad)
}

pub(crate) fn cholesky(a: &DenseMatrix) -> Option<DenseMatrix> {
    let n = a.rows();
    if !a.is_square() {
        return None;
    }
    let mut l = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-10 * a.max_abs() {
                return None;
            }
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Some(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn fd_check(model: &LinearStack, f: impl Fn(&LinearStack) -> f64, grad: &[f64]) {
        let h = 1e-6;
        for i in 0..model.params().len() {
            let mut p = model.clone();
            p.params_mut()[i] += h;
            let up = f(&p);
            p.params_mut()[i] -= 2.0 * h;
            let down = f(&p);
            let fd = (up - down) / (2.0 * h);
            let scale = fd.abs().max(grad[i].abs()).max(1e-3);
            assert!((fd - grad[i]).abs() / scale < 1e-4, "param {i}: fd {fd} analytic {}", grad[i]);
        }
    }

    #[test]
    fn zero_init_is_identity_and_matches_sequence() {
        let m = init_pln(4, 2, 0.0, 1).unwrap();
        assert_eq!(m.as_matrix(), DenseMatrix::identity(4));
        let mut m = init_pln(6, 3, 0.3, 2).unwrap();
        for v in m.params_mut().iter_mut().skip(1).step_by(7) {
            *v += 0.2;
        }
        let seq = m.to_layer_sequence().unwrap();
        let diff = relative_frobenius(&seq.as_matrix().unwrap(), &m.as_matrix()).unwrap();
        assert!(diff < 1e-14);
        assert!((m.log_det() - m.as_matrix().det().unwrap().ln()).abs() < 1e-10);
    }

    #[test]
    fn init_close_to_identity_and_deterministic() {
        let std = 1e-5;
        let a = init_pln(8, 4, std, 3).unwrap();
        let b = init_pln(8, 4, std, 3).unwrap();
        assert_eq!(a, b);
        let gap = (&a.as_matrix() - &DenseMatrix::identity(8)).frobenius_norm();
        assert!(gap > 0.0 && gap <= 40.0 * std, "{gap}");
    }

    #[test]
    fn pln_gradient_matches_finite_differences() {
        let mut rng = seeded(90);
        for d in [2, 4] {
            let mut m = init_pln(d, 2, 0.5, 4).unwrap();
            for v in m.params_mut() {
                *v += 0.1 * normal(&mut rng);
            }
            let z = normal_matrix(&mut rng, d, 8);
            let t = normal_matrix(&mut rng, d, d);
            let (_, g) = pln_gradients(&m, &z, &t);
            fd_check(&m, |p| pln_gradients(p, &z, &t).0, &g);
        }
    }

    #[test]
    fn scalar_case_closed_form() {
        // d = 2, one lower coupling: [1 0; a b], target T, batch z.
        let mut m = LinearStack::new(2, vec![FactorKind::Lower]).unwrap();
        m.params_mut().copy_from_slice(&[0.7, 0.2]);
        let z = DenseMatrix::from_rows(&[[1.0, -0.5], [2.0, 0.25]]);
        let t = DenseMatrix::from_rows(&[[1.0, 0.0], [0.3, 1.4]]);
        let (_, g) = pln_gradients(&m, &z, &t);
        let b = 0.2f64.exp();
        // residual only in row 2: r_j = (a − 0.3) z1_j + (b − 1.4) z2_j
        let (mut ga, mut gb) = (0.0, 0.0);
        for j in 0..2 {
            let r = (0.7 - 0.3) * z[(0, j)] + (b - 1.4) * z[(1, j)];
            ga += 2.0 * r * z[(0, j)] / 4.0;
            gb += 2.0 * r * z[(1, j)] * b / 4.0;
        }
        assert!((g[0] - ga).abs() < 1e-14 && (g[1] - gb).abs() < 1e-14);
    }

    #[test]
    fn exact_fit_has_zero_gradient() {
        let m = init_pln(4, 2, 0.4, 5).unwrap();
        let t = m.as_matrix();
        let z = normal_matrix(&mut seeded(6), 4, 16);
        let (loss, g) = pln_gradients(&m, &z, &t);
        assert_eq!(loss, 0.0);
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_nll_gradient_matches_finite_differences() {
        let mut rng = seeded(91);
        let mut m = init_pln(4, 2, 0.3, 7).unwrap();
        for v in m.params_mut() {
            *v += 0.1 * normal(&mut rng);
        }
        let a = normal_matrix(&mut rng, 4, 4);
        let s = &(&a * &a.transpose()) + &DenseMatrix::identity(4);
        let ld = m.log_det_grad();
        let (_, g) = linear_nll_gradient(&m, &s, &ld);
        fd_check(&m, |p| linear_nll_gradient(p, &s, &ld).0, &g);
    }

    #[test]
    fn toeplitz_target_has_constant_diagonals() {
        let t = sample_target(TargetKind::ToeplitzMatrix, 5, &mut seeded(8)).unwrap();
        for i in 1..5 {
            for j in 1..5 {
                assert_eq!(t[(i, j)], t[(i - 1, j - 1)]);
            }
        }
        assert!(t.det().unwrap() > 0.0);
        assert!(sample_target(TargetKind::Dataset, 4, &mut seeded(8)).is_err());
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = DenseMatrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]);
        let l = cholesky(&a).unwrap();
        assert!(relative_frobenius(&(&l * &l.transpose()), &a).unwrap() < 1e-15);
        assert!(cholesky(&DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]])).is_none());
    }
}
