use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flowdepth::harness::{run, ExperimentConfig, HarnessError};
use flowdepth::trainer::SyntheticDataset;
use serde_json::{json, Map, Value};

#[derive(Parser, Debug)]
#[command(name = "flowdepth", version, about = "Affine-coupling flow constructions and experiments")]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON config; its values override the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Args, Debug, Default)]
struct TrainFlags {
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    log_every: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    init_std: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Factor a MAT1 matrix into linear affine couplings.
    Decompose {
        #[arg(long)]
        input: PathBuf,
    },
    /// Test whether a MAT1 matrix can be a product of four couplings.
    Certify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        fit_matrices: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Push Gaussian samples through a padded or lattice construction.
    Universal {
        #[arg(long)]
        mode: String,
        #[arg(long, default_value = "affine")]
        target: String,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        eps1: Option<f64>,
        #[arg(long)]
        eps2: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Selector generator, W1 witness and counting bounds.
    Separation {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Linear coupling regression onto random matrices.
    TrainPln {
        #[arg(long)]
        d: usize,
        /// Comma-separated layer counts.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        layers: Vec<usize>,
        /// gaussian or toeplitz.
        #[arg(long, default_value = "gaussian")]
        target: String,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Coupling stack versus small MLP regression.
    TrainReg {
        /// tanh, relu, linear or identity.
        #[arg(long)]
        target: String,
        /// coupling or mlp.
        #[arg(long)]
        arch: String,
        #[arg(long, default_value_t = 10)]
        d: usize,
        #[arg(long)]
        pairs: Option<usize>,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Maximum-likelihood training on a 2-D dataset.
    TrainMle {
        #[arg(long)]
        dataset: String,
        /// none, zero or gaussian.
        #[arg(long, default_value = "none")]
        padding: String,
        #[arg(long)]
        couplings: Option<usize>,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Long-format CSV from training records.
    PlotData {
        /// records.json files from training runs.
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
    },
}

fn insert<T: serde::Serialize>(m: &mut Map<String, Value>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        m.insert(key.into(), json!(v));
    }
}

fn train_value(t: TrainFlags, target: Option<&str>) -> Value {
    let mut m = Map::new();
    insert(&mut m, "seeds", t.seeds);
    insert(&mut m, "steps", t.steps);
    insert(&mut m, "lr", t.lr);
    insert(&mut m, "batch_size", t.batch_size);
    insert(&mut m, "log_every", t.log_every);
    insert(&mut m, "hidden", t.hidden);
    insert(&mut m, "init_std", t.init_std);
    insert(&mut m, "target", target);
    Value::Object(m)
}

fn command_value(cmd: Cmd) -> Result<Value, HarnessError> {
    let mut m = Map::new();
    let name = match cmd {
        Cmd::Decompose { input } => {
            insert(&mut m, "input", Some(input));
            "decompose"
        }
        Cmd::Certify { input, d, fit_matrices, restarts } => {
            insert(&mut m, "input", Some(input));
            insert(&mut m, "d", Some(d));
            insert(&mut m, "fit_matrices", fit_matrices);
            insert(&mut m, "restarts", restarts);
            "certify"
        }
        Cmd::Universal { mode, target, eps, eps1, eps2, samples } => {
            insert(&mut m, "mode", Some(mode));
            insert(&mut m, "target", Some(target));
            insert(&mut m, "eps", Some(eps.unwrap_or(0.125)));
            insert(&mut m, "eps1", eps1);
            insert(&mut m, "eps2", eps2);
            insert(&mut m, "samples", samples);
            "universal"
        }
        Cmd::Separation { d, k, gamma, eps, samples } => {
            insert(&mut m, "d", Some(d));
            insert(&mut m, "k", Some(k));
            insert(&mut m, "gamma", Some(gamma));
            insert(&mut m, "eps", Some(eps));
            insert(&mut m, "samples", samples);
            "separation"
        }
        Cmd::TrainPln { d, layers, target, train } => {
            let kind = match target.as_str() {
                "gaussian" => "gaussian_matrix",
                "toeplitz" => "toeplitz_matrix",
                other => return Err(HarnessError::Schema(format!("unknown PLN target `{other}`"))),
            };
            insert(&mut m, "d", Some(d));
            insert(&mut m, "layers", Some(layers));
            m.insert("train".into(), train_value(train, Some(kind)));
            "train-pln"
        }
        Cmd::TrainReg { target, arch, d, pairs, train } => {
            insert(&mut m, "target", Some(target));
            insert(&mut m, "arch", Some(arch));
            insert(&mut m, "d", Some(d));
            insert(&mut m, "pairs", pairs);
            m.insert("train".into(), train_value(train, None));
            "train-reg"
        }
        Cmd::TrainMle { dataset, padding, couplings, train } => {
            let ds = SyntheticDataset::parse(&dataset).ok_or_else(|| HarnessError::Schema(format!("unknown dataset `{dataset}`")))?;
            m.insert("dataset".into(), json!(ds));
            insert(&mut m, "padding", Some(padding));
            insert(&mut m, "couplings", couplings);
            m.insert("train".into(), train_value(train, None));
            "train-mle"
        }
        Cmd::PlotData { inputs } => {
            insert(&mut m, "inputs", Some(inputs));
            "plot-data"
        }
    };
    m.insert("name".into(), json!(name));
    Ok(Value::Object(m))
}

/// Recursively overlays `top` onto `base`.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn build_config(cli: Cli) -> Result<ExperimentConfig, HarnessError> {
    let mut v = json!({});
    if let Some(cmd) = cli.command {
        v["command"] = command_value(cmd)?;
    }
    v["output_dir"] = json!(cli.out.unwrap_or_else(|| PathBuf::from("out")));
    if let Some(s) = cli.seed {
        v["master_seed"] = json!(s);
    }
    if let Some(path) = cli.config {
        let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::Io { path: path.display().to_string(), message: e.to_string() })?;
        let file: Value = serde_json::from_str(&text).map_err(|e| HarnessError::Schema(format!("{}: {e}", path.display())))?;
        merge(&mut v, file);
    }
    if v.get("command").is_none() {
        return Err(HarnessError::Schema("no subcommand given and none in the config".into()));
    }
    ExperimentConfig::from_json(v)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = build_config(cli).and_then(|cfg| run(&cfg).map(|m| (cfg, m)));
    match result {
        Ok((cfg, manifest)) => {
            println!("{} finished; {} files in {}", manifest.command, manifest.files.len(), cfg.output_dir.display());
            for f in &manifest.files {
                println!("  {}", f.path);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
