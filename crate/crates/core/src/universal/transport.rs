use serde::{Deserialize, Serialize};

use super::UnivError;
use crate::matcore::DenseMatrix;
use crate::stats::{normal_cdf, normal_quantile};

/// Piecewise-linear CDF of a 1-D target, as sorted `(value, cdf)` knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfTable {
    values: Vec<f64>,
    cdf: Vec<f64>,
}

impl CdfTable {
    pub fn new(values: Vec<f64>, cdf: Vec<f64>) -> Result<Self, UnivError> {
        if values.len() != cdf.len() || values.len() < 2 {
            return Err(UnivError::BadTable("need at least two (value, cdf) pairs".into()));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if !increasing(&values) || !increasing(&cdf) {
            return Err(UnivError::BadTable("values and cdf must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) || cdf[0] < 0.0 || cdf[cdf.len() - 1] > 1.0 {
            return Err(UnivError::BadTable("cdf must lie in [0, 1] and values must be finite".into()));
        }
        Ok(Self { values, cdf })
    }

    /// Tabulates `cdf` at `knots`.
    pub fn from_fn(knots: &[f64], cdf: impl Fn(f64) -> f64) -> Result<Self, UnivError> {
        Self::new(knots.to_vec(), knots.iter().map(|&v| cdf(v)).collect())
    }

    pub fn uniform01() -> Self {
        Self { values: vec![0.0, 1.0], cdf: vec![0.0, 1.0] }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        interp(&self.values, &self.cdf, y)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        interp(&self.cdf, &self.values, p)
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.cdf.iter().copied())
    }
}

/// Linear interpolation of the graph `(xs, ys)` at `x`, clamped at the ends.
fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = xs.partition_point(|&v| v <= x) - 1;
    let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + t * (ys[k + 1] - ys[k])
}

/// An orientation-preserving map pushing `N(0, I)` to a target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TransportMap {
    /// `x ↦ shift + linear · x`.
    Affine { shift: Vec<f64>, linear: DenseMatrix, linear_inv: DenseMatrix },
    /// `x_i ↦ F_i⁻¹(Φ(x_i))` coordinatewise.
    CoordinatewiseQuantile { tables: Vec<CdfTable> },
}

impl TransportMap {
    pub fn affine(shift: Vec<f64>, linear: DenseMatrix) -> Result<Self, UnivError> {
        if !linear.is_square() || linear.rows() != shift.len() {
            return Err(UnivError::Dimension(format!("shift of length {} with a {}x{} matrix", shift.len(), linear.rows(), linear.cols())));
        }
        if linear.det()? <= 0.0 {
            return Err(UnivError::NotOrientationPreserving);
        }
        let linear_inv = linear.inverse()?;
        Ok(Self::Affine { shift, linear, linear_inv })
    }

    pub fn identity(n: usize) -> Self {
        Self::Affine { shift: vec![0.0; n], linear: DenseMatrix::identity(n), linear_inv: DenseMatrix::identity(n) }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Affine { shift, .. } => shift.len(),
            Self::CoordinatewiseQuantile { tables } => tables.len(),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim(), "transport input has the wrong dimension");
        match self {
            Self::Affine { shift, linear, .. } => {
                let mut y = linear.mul_vec(x).expect("checked dimension");
                y.iter_mut().zip(shift).for_each(|(v, s)| *v += s);
                y
            }
            Self::CoordinatewiseQuantile { tables } => x.iter().zip(tables).map(|(&v, t)| t.quantile(normal_cdf(v))).collect(),
        }
    }

    pub fn inverse(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.dim(), "transport input has the wrong dimension");
        match self {
            Self::Affine { shift, linear_inv, .. } => {
                let centered: Vec<f64> = y.iter().zip(shift).map(|(v, s)| v - s).collect();
                linear_inv.mul_vec(&centered).expect("checked dimension")
            }
            Self::CoordinatewiseQuantile { tables } => y.iter().zip(tables).map(|(&v, t)| normal_quantile(t.cdf(v))).collect(),
        }
    }
}

/// Coordinatewise quantile transport onto product targets given by tables.
pub fn quantile_transport(tables: Vec<CdfTable>) -> Result<TransportMap, UnivError> {
    if tables.is_empty() {
        return Err(UnivError::Dimension("no coordinates".into()));
    }
    Ok(TransportMap::CoordinatewiseQuantile { tables })
}

/// Parses `coordinate,value,cdf` lines (header and `#` comments allowed)
/// into one table per coordinate.
pub fn parse_cdf_tables(text: &str) -> Result<Vec<CdfTable>, UnivError> {
    let mut rows: Vec<(usize, f64, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("coordinate") {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || UnivError::BadTable(format!("line {}: expected coordinate,value,cdf", lineno + 1));
        if parts.len() != 3 {
            return Err(bad());
        }
        let c = parts[0].parse().map_err(|_| bad())?;
        let v = parts[1].parse().map_err(|_| bad())?;
        let p = parts[2].parse().map_err(|_| bad())?;
        rows.push((c, v, p));
    }
    let n = rows.iter().map(|r| r.0 + 1).max().ok_or_else(|| UnivError::BadTable("empty table".into()))?;
    (0..n)
        .map(|c| {
            let (values, cdf) = rows.iter().filter(|r| r.0 == c).map(|r| (r.1, r.2)).unzip();
            CdfTable::new(values, cdf)
        })
        .collect()
}
