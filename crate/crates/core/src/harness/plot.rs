use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::trainer::{LogEntry, RunRecord};

pub const PLOT_HEADER: &str = "experiment,d,variant,seed,step,metric,value";

/// Labels that distinguish runs within one experiment, in lookup order.
const VARIANT_KEYS: [&str; 4] = ["n_layers", "padding", "arch", "n_matrices"];

/// One row of the long-format plot table. `variant` holds the layer count,
/// padding mode or architecture, whichever the experiment varies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub experiment: String,
    pub d: String,
    pub variant: String,
    pub seed: u64,
    pub step: usize,
    pub metric: String,
    pub value: f64,
}

fn metrics(e: &LogEntry) -> Vec<(&'static str, f64)> {
    let mut m = vec![("loss", e.loss)];
    let opt = [("frobenius_error", e.frobenius_error), ("nll", e.nll), ("cond_median", e.cond_median), ("cond_max", e.cond_max)];
    m.extend(opt.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))));
    m
}

/// Long-format CSV of every logged metric. All records must come from the
/// same experiment.
pub fn emit_plot_data(records: &[RunRecord]) -> Result<String, HarnessError> {
    let mut out = String::from(PLOT_HEADER);
    out.push('\n');
    if let Some(first) = records.first() {
        if let Some(r) = records.iter().find(|r| r.experiment != first.experiment) {
            return Err(HarnessError::Schema(format!("mixed experiments `{}` and `{}`", first.experiment, r.experiment)));
        }
    }
    for r in records {
        let d = r.get_label("d").unwrap_or("");
        let variant = VARIANT_KEYS.iter().find_map(|k| r.get_label(k)).unwrap_or("");
        for e in &r.entries {
            for (name, value) in metrics(e) {
                // `{}` prints the shortest representation that parses back exactly
                out.push_str(&format!("{},{},{},{},{},{},{}\n", r.experiment, d, variant, r.seed, e.step, name, value));
            }
        }
    }
    Ok(out)
}

pub fn parse_plot_data(text: &str) -> Result<Vec<PlotRow>, HarnessError> {
    let mut lines = text.lines();
    if lines.next() != Some(PLOT_HEADER) {
        return Err(HarnessError::Schema("missing plot-data header".into()));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || HarnessError::Schema(format!("plot-data row {}: `{line}`", i + 1));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(bad());
            }
            Ok(PlotRow {
                experiment: f[0].into(),
                d: f[1].into(),
                variant: f[2].into(),
                seed: f[3].parse().map_err(|_| bad())?,
                step: f[4].parse().map_err(|_| bad())?,
                metric: f[5].into(),
                value: f[6].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::TrainConfig;

    fn record(exp: &str, seed: u64, n: usize, values: &[f64]) -> RunRecord {
        let mut r = RunRecord::new(exp, seed, &TrainConfig::default()).label("d", 16).label("n_layers", n);
        r.entries = values.iter().enumerate().map(|(i, &v)| LogEntry { step: 100 * (i + 1), loss: v, ..Default::default() }).collect();
        r
    }

    #[test]
    fn empty_is_header_only() {
        assert_eq!(emit_plot_data(&[]).unwrap(), format!("{PLOT_HEADER}\n"));
    }

    #[test]
    fn row_count_and_round_trip() {
        let vals = [0.1, 1.0 / 3.0, 2.5e-17, 123456.789, std::f64::consts::PI];
        let records: Vec<_> = (0..5).map(|s| record("pln", s, 4, &vals.map(|v| v * (s + 1) as f64))).collect();
        let csv = emit_plot_data(&records).unwrap();
        let rows = parse_plot_data(&csv).unwrap();
        assert_eq!(rows.len(), 5 * vals.len());
        for (row, (r, e)) in rows.iter().zip(records.iter().flat_map(|r| r.entries.iter().map(move |e| (r, e)))) {
            assert_eq!(row.variant, "4");
            assert_eq!(row.seed, r.seed);
            assert!((row.value - e.loss).abs() <= 1e-15 * e.loss.abs());
        }
    }

    #[test]
    fn mixed_experiments_rejected() {
        assert!(emit_plot_data(&[record("pln", 0, 1, &[1.0]), record("mle", 0, 1, &[1.0])]).is_err());
    }
}
