//! Regressing simple maps with a coupling stack versus a plain MLP.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{should_log, Adam, LogEntry, Mlp, NvpModel, RunRecord, TargetKind, TrainConfig, TrainError};
use crate::coupling::Activation;
use crate::matcore::DenseMatrix;
use crate::rng::{normal, stream, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionTarget {
    Tanh,
    Relu,
    Identity,
    /// A random positive-determinant Gaussian matrix scaled by `1/√d`.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    /// `pairs` lower/upper coupling pairs, tanh subnetworks.
    CouplingStack { pairs: usize },
    /// One subnetwork-sized MLP: two tanh hidden layers.
    SmallMlp,
}

enum Model {
    Stack(NvpModel),
    Mlp(Mlp),
}

impl Model {
    /// Loss `Σ‖f(x) − y‖² / (B d)`, optionally with the gradient step.
    fn loss_and_step(&mut self, x: &Array2<f64>, y: &Array2<f64>, opt: Option<&mut Adam>) -> f64 {
        let (b, d) = x.dim();
        let norm = 1.0 / (b * d) as f64;
        match self {
            Model::Stack(m) => {
                let (out, _, cache) = m.forward_cached(x);
                let diff = out - y;
                let loss = diff.mapv(|v| v * v).sum() * norm;
                if let Some(opt) = opt {
                    let g = m.backward(&cache, diff * (2.0 * norm), &Array1::zeros(b));
                    opt.step(m.tensors_mut(), g.tensors());
                }
                loss
            }
            Model::Mlp(m) => {
                let (out, cache) = m.forward_cached(x.view());
                let diff = out - y;
                let loss = diff.mapv(|v| v * v).sum() * norm;
                if let Some(opt) = opt {
                    let mut g = m.zeros_like();
                    m.backward(&cache, diff * (2.0 * norm), &mut g);
                    opt.step(m.tensors_mut(), g.tensors());
                }
                loss
            }
        }
    }
}

fn apply_target(target: RegressionTarget, lin: Option<&DenseMatrix>, x: &Array2<f64>) -> Array2<f64> {
    match target {
        RegressionTarget::Tanh => x.mapv(f64::tanh),
        RegressionTarget::Relu => x.mapv(|v| v.max(0.0)),
        RegressionTarget::Identity => x.clone(),
        RegressionTarget::Linear => {
            let a = lin.expect("linear target sampled");
            let at = Array2::from_shape_fn((a.cols(), a.rows()), |(i, j)| a[(j, i)]);
            x.dot(&at)
        }
    }
}

fn gaussian_batch(rng: &mut Rng, b: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_fn((b, d), |_| normal(rng))
}

/// Trains one architecture on `x ~ N(0, I_d)` regressed onto `target(x)`.
///
/// Data batches and the held-out evaluation set depend only on the seed, so
/// both architectures see identical data. Logged `loss` is the held-out loss.
pub fn train_coupling_regression(
    cfg: &TrainConfig,
    target: RegressionTarget,
    arch: Architecture,
    d: usize,
    seed: u64,
) -> Result<RunRecord, TrainError> {
    cfg.validate()?;
    if d < 2 || d % 2 != 0 {
        return Err(TrainError::InvalidConfig(format!("dimension {d} must be even and at least 2")));
    }
    let lin = match target {
        RegressionTarget::Linear => {
            Some(super::sample_target(TargetKind::GaussianMatrix, d, &mut stream(cfg.master_seed, seed, "reg-target"))?.scale(1.0 / (d as f64).sqrt()))
        }
        _ => None,
    };
    let mut init = stream(cfg.master_seed, seed, "reg-init");
    let (mut model, arch_name) = match arch {
        Architecture::CouplingStack { pairs } => {
            (Model::Stack(NvpModel::new(d, 2 * pairs, cfg.hidden, Activation::Tanh, false, &mut init)?), "coupling")
        }
        Architecture::SmallMlp => (Model::Mlp(Mlp::new(&[d, cfg.hidden, cfg.hidden, d], Activation::Tanh, 1.0, 1.0, &mut init)), "mlp"),
    };
    let mut eval_rng = stream(cfg.master_seed, seed, "reg-eval");
    let eval_x = gaussian_batch(&mut eval_rng, 2048, d);
    let eval_y = apply_target(target, lin.as_ref(), &eval_x);
    let mut batch_rng = stream(cfg.master_seed, seed, "reg-batch");
    let mut opt = Adam::new(cfg.lr);
    let mut record = RunRecord::new("regression", seed, cfg)
        .label("target", format!("{target:?}").to_lowercase())
        .label("arch", arch_name)
        .label("d", d);
    for step in 1..=cfg.steps {
        let x = gaussian_batch(&mut batch_rng, cfg.batch_size, d);
        let y = apply_target(target, lin.as_ref(), &x);
        let loss = model.loss_and_step(&x, &y, Some(&mut opt));
        if !loss.is_finite() {
            return Err(record.diverged(step));
        }
        if should_log(step, cfg) {
            let eval = model.loss_and_step(&eval_x, &eval_y, None);
            if !eval.is_finite() {
                return Err(record.diverged(step));
            }
            record.entries.push(LogEntry { step, loss: eval, ..Default::default() });
        }
    }
    record.final_entry = record.entries.last().cloned();
    Ok(record)
}
