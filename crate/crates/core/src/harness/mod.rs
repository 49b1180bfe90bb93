//! Experiment configuration, dispatch and result persistence.
//!
//! A run takes an [`ExperimentConfig`], writes its outputs into
//! `output_dir` (each file via a temporary file and a rename) and returns a
//! [`ResultManifest`] listing every file with its hash. Wall-clock timings go
//! to `timings.json`, outside the manifest, so that repeating a config
//! reproduces `manifest.json` byte for byte.

mod errors;
mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use errors::HarnessError;
pub use plot::{emit_plot_data, parse_plot_data, PlotRow, PLOT_HEADER};

use crate::certificates::{certify_not_a4, falsify_by_fit};
use crate::decomposer::{decompose, verify};
use crate::matcore::{read_mat1, DenseMatrix};
use crate::metrics::{median, MAX_ASSIGNMENT_SIZE};
use crate::separation::{
    build_selector_net, epsnet_log_size, exact_mixture_sample, kl_lower_bound, selector_w1, separated_indices, w1_witness_with_stderr,
    well_separated_vectors, MixtureSpec, SelectorNet, SeparationBounds,
};
use crate::trainer::{
    train_coupling_regression, train_nvp_mle, train_pln, Architecture, Padding, RegressionTarget, RunRecord, SyntheticDataset, TrainConfig,
};
use crate::universal::{
    apply_transport, build_lattice_net, build_padded_net, default_schedule, parse_cdf_tables, project, push_samples_with_inputs,
    quantile_transport, w2_with_stderr, TransportMap, DEFAULT_TRUNCATION,
};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default)]
    pub master_seed: u64,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UniversalMode {
    Padded,
    Lattice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchKind {
    Coupling,
    Mlp,
}

fn default_restarts() -> usize {
    4
}

fn default_samples() -> usize {
    2048
}

fn default_pairs() -> usize {
    5
}

fn default_couplings() -> usize {
    6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Command {
    Decompose {
        input: PathBuf,
    },
    Certify {
        input: PathBuf,
        d: usize,
        #[serde(default)]
        fit_matrices: Option<usize>,
        #[serde(default = "default_restarts")]
        restarts: usize,
        #[serde(default)]
        fit: Option<TrainConfig>,
    },
    Universal {
        mode: UniversalMode,
        /// `affine` for the built-in 2-D affine map, or `quantile:<file>`
        /// with `coordinate,value,cdf` rows.
        target: String,
        eps: f64,
        #[serde(default)]
        eps1: Option<f64>,
        #[serde(default)]
        eps2: Option<f64>,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    Separation {
        d: usize,
        k: usize,
        gamma: f64,
        eps: f64,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        bounds: Option<SeparationBounds>,
    },
    TrainPln {
        d: usize,
        layers: Vec<usize>,
        #[serde(default)]
        train: TrainConfig,
    },
    TrainReg {
        target: RegressionTarget,
        arch: ArchKind,
        d: usize,
        #[serde(default = "default_pairs")]
        pairs: usize,
        #[serde(default)]
        train: TrainConfig,
    },
    TrainMle {
        dataset: SyntheticDataset,
        padding: Padding,
        #[serde(default = "default_couplings")]
        couplings: usize,
        #[serde(default)]
        train: TrainConfig,
    },
    PlotData {
        inputs: Vec<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Decompose { .. } => "decompose",
            Command::Certify { .. } => "certify",
            Command::Universal { .. } => "universal",
            Command::Separation { .. } => "separation",
            Command::TrainPln { .. } => "train-pln",
            Command::TrainReg { .. } => "train-reg",
            Command::TrainMle { .. } => "train-mle",
            Command::PlotData { .. } => "plot-data",
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates a JSON config.
    pub fn from_json(value: Value) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_value(value).map_err(|e| HarnessError::Schema(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Schema(m));
        let train_ok = |t: &TrainConfig| t.validate().map_err(|e| HarnessError::Schema(e.to_string()));
        match &self.command {
            Command::Certify { d, restarts, fit_matrices, fit, .. } => {
                if *d == 0 || *restarts == 0 {
                    return bad("d and restarts must be positive".into());
                }
                if let Some(n) = fit_matrices {
                    if *n == 0 || n % 2 != 0 {
                        return bad(format!("fit_matrices must be even and positive, got {n}"));
                    }
                }
                if let Some(t) = fit {
                    train_ok(t)?;
                }
            }
            Command::Universal { eps, samples, .. } => {
                if !(*eps > 0.0) || *samples == 0 || *samples > MAX_ASSIGNMENT_SIZE {
                    return bad(format!("need eps > 0 and 1 <= samples <= {MAX_ASSIGNMENT_SIZE}"));
                }
            }
            Command::Separation { d, k, gamma, eps, samples, .. } => {
                if *d == 0 || *k == 0 || !(*gamma > 0.0) || !(*eps > 0.0) || *samples == 0 {
                    return bad("d, k, gamma, eps and samples must be positive".into());
                }
            }
            Command::TrainPln { d, layers, train } => {
                if *d < 2 || d % 2 != 0 || layers.is_empty() || layers.contains(&0) {
                    return bad("d must be even and at least 2; layers must be a nonempty list of positive counts".into());
                }
                train_ok(train)?;
            }
            Command::TrainReg { d, pairs, train, .. } => {
                if *d < 2 || d % 2 != 0 || *pairs == 0 {
                    return bad("d must be even and at least 2; pairs must be positive".into());
                }
                train_ok(train)?;
            }
            Command::TrainMle { couplings, train, .. } => {
                if *couplings == 0 {
                    return bad("couplings must be positive".into());
                }
                train_ok(train)?;
            }
            Command::Decompose { .. } | Command::PlotData { .. } => {}
        }
        Ok(())
    }

    /// Hex sha256 of the config without `output_dir`, so the same experiment
    /// hashes equally wherever it is written.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(m) = &mut v {
            m.remove("output_dir");
        }
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultManifest {
    pub command: String,
    pub config_hash: String,
    pub artifact_version: String,
    pub files: Vec<ManifestEntry>,
    /// `(stage, seconds)`; persisted to `timings.json`, not `manifest.json`.
    #[serde(skip)]
    pub durations: Vec<(String, f64)>,
}

/// Collects output files for one run directory.
struct Outputs {
    dir: PathBuf,
    files: Vec<ManifestEntry>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, HarnessError> {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), files: vec![] })
    }

    fn write(&mut self, rel: &str, contents: &[u8]) -> Result<(), HarnessError> {
        let path = self.dir.join(rel);
        write_atomic(&path, contents)?;
        self.files.push(ManifestEntry { path: rel.into(), bytes: contents.len() as u64, sha256: hex::encode(Sha256::digest(contents)) });
        Ok(())
    }

    fn write_json(&mut self, rel: &str, value: &impl Serialize) -> Result<(), HarnessError> {
        let mut text = serde_json::to_string_pretty(value).expect("outputs serialize");
        text.push('\n');
        self.write(rel, text.as_bytes())
    }
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(|e| HarnessError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

/// Validates `config`, runs it and writes `manifest.json` and `timings.json`.
pub fn run(config: &ExperimentConfig) -> Result<ResultManifest, HarnessError> {
    config.validate()?;
    let mut out = Outputs::new(&config.output_dir)?;
    let start = Instant::now();
    let seed = config.master_seed;
    match &config.command {
        Command::Decompose { input } => run_decompose(input, &mut out)?,
        Command::Certify { input, d, fit_matrices, restarts, fit } => run_certify(input, *d, *fit_matrices, *restarts, fit.as_ref(), seed, &mut out)?,
        Command::Universal { mode, target, eps, eps1, eps2, samples } => run_universal(*mode, target, *eps, *eps1, *eps2, *samples, seed, &mut out)?,
        Command::Separation { d, k, gamma, eps, samples, bounds } => run_separation(*d, *k, *gamma, *eps, *samples, *bounds, seed, &mut out)?,
        Command::TrainPln { d, layers, train } => {
            let cfg = TrainConfig { master_seed: seed, ..train.clone() };
            let jobs: Vec<(usize, u64)> = layers.iter().flat_map(|&n| (0..cfg.seeds as u64).map(move |s| (n, s))).collect();
            let records = jobs
                .par_iter()
                .map(|&(n, s)| train_pln(&cfg, *d, n, s))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| HarnessError::module("train-pln", e))?;
            write_records(&records, "n_layers", &mut out)?;
        }
        Command::TrainReg { target, arch, d, pairs, train } => {
            let cfg = TrainConfig { master_seed: seed, ..train.clone() };
            let arch = match arch {
                ArchKind::Coupling => Architecture::CouplingStack { pairs: *pairs },
                ArchKind::Mlp => Architecture::SmallMlp,
            };
            let records = (0..cfg.seeds as u64)
                .into_par_iter()
                .map(|s| train_coupling_regression(&cfg, *target, arch, *d, s))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| HarnessError::module("train-reg", e))?;
            write_records(&records, "arch", &mut out)?;
        }
        Command::TrainMle { dataset, padding, couplings, train } => {
            let cfg = TrainConfig { master_seed: seed, ..train.clone() };
            let records = (0..cfg.seeds as u64)
                .into_par_iter()
                .map(|s| train_nvp_mle(*dataset, *padding, &cfg, *couplings, s))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| HarnessError::module("train-mle", e))?;
            write_records(&records, "padding", &mut out)?;
        }
        Command::PlotData { inputs } => {
            let mut records = Vec::new();
            for p in inputs {
                records.extend(load_records(p)?);
            }
            out.write("plot.csv", emit_plot_data(&records)?.as_bytes())?;
        }
    }
    let manifest = ResultManifest {
        command: config.command.name().into(),
        config_hash: config.hash(),
        artifact_version: ARTIFACT_VERSION.into(),
        files: out.files.clone(),
        durations: vec![(config.command.name().into(), start.elapsed().as_secs_f64())],
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write_atomic(&config.output_dir.join("manifest.json"), text.as_bytes())?;
    let timings: Vec<Value> = manifest.durations.iter().map(|(s, t)| json!({ "stage": s, "seconds": t })).collect();
    write_atomic(&config.output_dir.join("timings.json"), serde_json::to_string_pretty(&timings).expect("timings serialize").as_bytes())?;
    Ok(manifest)
}

/// Reads a `records.json` written by a training run.
pub fn load_records(path: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Schema(format!("{}: {e}", path.display())))
}

fn run_decompose(input: &Path, out: &mut Outputs) -> Result<(), HarnessError> {
    let t = read_mat1(input).map_err(|e| HarnessError::module("reading input matrix", e))?;
    let result = decompose(&t).map_err(|e| HarnessError::module("decompose", e))?;
    let check = verify(&result, &t).map_err(|e| HarnessError::module("verify", e))?;
    out.write_json("layers.json", &result.layers)?;
    out.write_json(
        "report.json",
        &json!({
            "dimension": t.rows(),
            "matrix_count": result.matrix_count,
            "layer_pairs": result.layer_pairs,
            "residual": result.residual,
            "verified_residual": check,
            "stage_log": result.stage_log,
            "warnings": result.warnings,
        }),
    )
}

fn run_certify(
    input: &Path,
    d: usize,
    fit_matrices: Option<usize>,
    restarts: usize,
    fit: Option<&TrainConfig>,
    seed: u64,
    out: &mut Outputs,
) -> Result<(), HarnessError> {
    let t = read_mat1(input).map_err(|e| HarnessError::module("reading input matrix", e))?;
    if t.rows() != 2 * d || !t.is_square() {
        return Err(HarnessError::Schema(format!("matrix is {}x{}, expected {}x{}", t.rows(), t.cols(), 2 * d, 2 * d)));
    }
    let cert = certify_not_a4(&t, d).map_err(|e| HarnessError::module("certify", e))?;
    let fit_residual = match fit_matrices {
        Some(n) => {
            let cfg = TrainConfig { master_seed: seed, ..fit.cloned().unwrap_or_default() };
            Some(falsify_by_fit(&t, n, restarts, &cfg).map_err(|e| HarnessError::module("falsify_by_fit", e))?)
        }
        None => None,
    };
    out.write_json("certificate.json", &json!({ "certificate": cert, "fit_matrices": fit_matrices, "fit_residual": fit_residual }))
}

/// The built-in affine target: shift `(1, −0.5)`, lower-triangular linear part.
pub fn default_affine_target() -> TransportMap {
    TransportMap::affine(vec![1.0, -0.5], DenseMatrix::from_rows(&[[1.5, 0.0], [0.5, 0.8]])).expect("positive determinant")
}

fn parse_target(target: &str) -> Result<TransportMap, HarnessError> {
    if target == "affine" {
        return Ok(default_affine_target());
    }
    if let Some(file) = target.strip_prefix("quantile:") {
        let text = fs::read_to_string(file).map_err(|e| HarnessError::io(Path::new(file), e))?;
        let tables = parse_cdf_tables(&text).map_err(|e| HarnessError::module("parsing CDF tables", e))?;
        return quantile_transport(tables).map_err(|e| HarnessError::module("quantile transport", e));
    }
    Err(HarnessError::Schema(format!("target must be `affine` or `quantile:<file>`, got `{target}`")))
}

fn cloud_csv(cloud: &crate::metrics::SampleCloud) -> String {
    let mut s: String = (0..cloud.dim()).map(|j| format!("x{j}")).collect::<Vec<_>>().join(",");
    s.push('\n');
    for i in 0..cloud.len() {
        s.push_str(&cloud.point(i).iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}

#[allow(clippy::too_many_arguments)]
fn run_universal(
    mode: UniversalMode,
    target: &str,
    eps: f64,
    eps1: Option<f64>,
    eps2: Option<f64>,
    samples: usize,
    seed: u64,
    out: &mut Outputs,
) -> Result<(), HarnessError> {
    let phi = parse_target(target)?;
    let n = phi.dim();
    let ctx = |e| HarnessError::module("universal", e);
    let (outputs, metrics) = match mode {
        UniversalMode::Padded => {
            let net = build_padded_net(phi.clone(), DEFAULT_TRUNCATION).map_err(ctx)?;
            let (inputs, outputs) = push_samples_with_inputs(&net, samples, seed).map_err(ctx)?;
            let data = project(&outputs, 0..n).map_err(ctx)?;
            let (w2, stderr) = w2_with_stderr(&data, &apply_transport(&phi, &inputs).map_err(ctx)?).map_err(ctx)?;
            let pad_max = (0..outputs.len()).flat_map(|i| outputs.point(i)[n..].to_vec()).fold(0.0f64, |m, v| m.max(v.abs()));
            (outputs, json!({ "mode": "padded", "target": target, "truncation": DEFAULT_TRUNCATION, "w2": w2, "stderr": stderr, "max_abs_padding": pad_max, "samples": samples }))
        }
        UniversalMode::Lattice => {
            let (_, d1, d2) = default_schedule(eps);
            let (e1, e2) = (eps1.unwrap_or(d1), eps2.unwrap_or(d2));
            let net = build_lattice_net(phi.clone(), eps, e1, e2).map_err(ctx)?;
            let (inputs, outputs) = push_samples_with_inputs(&net, samples, seed).map_err(ctx)?;
            let (w2, stderr) = w2_with_stderr(&outputs, &apply_transport(&phi, &inputs).map_err(ctx)?).map_err(ctx)?;
            (
                outputs,
                json!({ "mode": "lattice", "target": target, "eps": eps, "eps1": e1, "eps2": e2, "log_det": net.log_det(), "w2": w2, "stderr": stderr, "samples": samples }),
            )
        }
    };
    out.write("samples.csv", cloud_csv(&outputs).as_bytes())?;
    out.write_json("metrics.json", &metrics)
}

#[allow(clippy::too_many_arguments)]
fn run_separation(
    d: usize,
    k: usize,
    gamma: f64,
    eps: f64,
    samples: usize,
    bounds: Option<SeparationBounds>,
    seed: u64,
    out: &mut Outputs,
) -> Result<(), HarnessError> {
    let ctx = |e| HarnessError::module("separation", e);
    // smallest separation level whose guaranteed capacity covers 2k codewords
    let eps_sep = ((4.0 * ((2 * k) as f64).ln() / d as f64).sqrt() * (1.0 + 1e-9)).min(1.0);
    let codebook = well_separated_vectors(d, eps_sep, 2 * k, seed).map_err(ctx)?;
    let first: Vec<usize> = (0..k).collect();
    let second: Vec<usize> = (k..2 * k).collect();
    let mu = MixtureSpec::from_codebook(&codebook, &first, gamma).map_err(ctx)?;
    let nu = MixtureSpec::from_codebook(&codebook, &second, gamma).map_err(ctx)?;

    let delta = SelectorNet::delta_for(&mu, eps);
    let net = build_selector_net(&mu, delta).map_err(ctx)?;
    let (w1, w1_se) = selector_w1(&net, samples.min(MAX_ASSIGNMENT_SIZE), seed).map_err(ctx)?;

    let s = separated_indices(&mu.means, &nu.means, gamma);
    let separated: Vec<Vec<f64>> = s.iter().map(|&i| mu.means[i].clone()).collect();
    let witness = if separated.is_empty() {
        None
    } else {
        let a = exact_mixture_sample(&mu, samples, seed.wrapping_add(1)).map_err(ctx)?;
        let b = exact_mixture_sample(&nu, samples, seed.wrapping_add(2)).map_err(ctx)?;
        Some(w1_witness_with_stderr(&a, &b, &separated, gamma).map_err(ctx)?)
    };

    let big_m = (20.0 * gamma * gamma * d as f64).sqrt();
    let b = bounds.unwrap_or(SeparationBounds {
        lipschitz: 1.0,
        radius: 1.0,
        d_params: (k * (d + 2)) as f64,
        params_per_layer: (k * (d + 2)) as f64,
        k: k as f64,
        c2: gamma * gamma + big_m * big_m,
    });
    let epsnet = epsnet_log_size(&b, eps).map_err(ctx)?;
    let kl = match witness {
        Some((w, _)) => Some(kl_lower_bound(w.max(0.0), b.c2).map_err(ctx)?),
        None => None,
    };
    out.write_json(
        "report.json",
        &json!({
            "codebook": {
                "size": codebook.vectors.len(),
                "eps_sep": eps_sep,
                "min_sq_distance": codebook.min_sq_distance(),
                "max_abs_inner": codebook.max_abs_inner(),
            },
            "selector": {
                "k": k, "d": d, "gamma": gamma, "delta": delta, "big_m": big_m,
                "w1_bound": net.w1_bound(), "w1": w1, "w1_stderr": w1_se,
            },
            "witness": {
                "separated_count": s.len(),
                "value": witness.map(|w| w.0),
                "stderr": witness.map(|w| w.1),
                "reference": 0.1 * gamma * (d as f64).sqrt(),
            },
            "bounds": b,
            "epsnet_log_size": epsnet,
            "kl_lower_bound": kl,
        }),
    )
}

fn write_records(records: &[RunRecord], variant_key: &str, out: &mut Outputs) -> Result<(), HarnessError> {
    for r in records {
        let variant = r.get_label(variant_key).unwrap_or("run");
        out.write(&format!("runs/{}_{}_seed{}.jsonl", r.experiment, variant, r.seed), r.to_jsonl().as_bytes())?;
    }
    out.write_json("records.json", &records)?;
    let mut variants: Vec<String> = records.iter().map(|r| r.get_label(variant_key).unwrap_or("run").to_string()).collect();
    variants.dedup();
    let medians: Vec<Value> = variants
        .iter()
        .map(|v| {
            let finals: Vec<_> = records.iter().filter(|r| r.get_label(variant_key).unwrap_or("run") == v).filter_map(|r| r.final_entry.clone()).collect();
            let med = |f: &dyn Fn(&crate::trainer::LogEntry) -> Option<f64>| {
                let vals: Vec<f64> = finals.iter().filter_map(f).collect();
                (!vals.is_empty()).then(|| median(&vals))
            };
            json!({
                variant_key: v,
                "loss": med(&|e| Some(e.loss)),
                "frobenius_error": med(&|e| e.frobenius_error),
                "nll": med(&|e| e.nll),
                "cond_median": med(&|e| e.cond_median),
            })
        })
        .collect();
    let runs: Vec<Value> = records.iter().map(|r| json!({ "labels": r.labels, "seed": r.seed, "final": r.final_entry, "notes": r.notes })).collect();
    out.write_json("summary.json", &json!({ "experiment": records.first().map(|r| r.experiment.clone()), "medians": medians, "runs": runs }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parses_and_rejects_unknown() {
        let v = json!({ "command": { "name": "separation", "d": 16, "k": 4, "gamma": 1.0, "eps": 0.5 }, "output_dir": "x" });
        let cfg = ExperimentConfig::from_json(v).unwrap();
        assert_eq!(cfg.command.name(), "separation");
        assert!(matches!(
            ExperimentConfig::from_json(json!({ "command": { "name": "bogus" }, "output_dir": "x" })),
            Err(HarnessError::Schema(_))
        ));
        assert!(ExperimentConfig::from_json(json!({ "command": { "name": "decompose", "input": "a", "extra": 1 }, "output_dir": "x" })).is_err());
        assert!(ExperimentConfig::from_json(json!({ "command": { "name": "universal", "mode": "lattice", "target": "affine", "eps": 0.0 }, "output_dir": "x" })).is_err());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = ExperimentConfig { command: Command::Decompose { input: "t.mat".into() }, master_seed: 3, output_dir: "a".into() };
        let b = ExperimentConfig { output_dir: "b".into(), ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), ExperimentConfig { master_seed: 4, ..a }.hash());
    }

    #[test]
    fn atomic_write_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/f.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        let names: Vec<_> = fs::read_dir(dir.path().join("sub")).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
    }
}
