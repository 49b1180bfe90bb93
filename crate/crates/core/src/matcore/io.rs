//! The `MAT1` text format: a header line `MAT1 <rows> <cols>` followed by
//! `rows*cols` whitespace-separated values in row-major order.

use std::fmt::Write as _;
use std::path::Path;

use super::{DenseMatrix, MatError};

pub const MAT1_MAGIC: &str = "MAT1";

pub fn parse_mat1(text: &str) -> Result<DenseMatrix, MatError> {
    let mut tokens = text.split_whitespace();
    match tokens.next() {
        Some(MAT1_MAGIC) => {}
        Some(other) => return Err(MatError::Parse(format!("expected {MAT1_MAGIC} header, found {other:?}"))),
        None => return Err(MatError::Parse("empty input".into())),
    }
    let mut dim = |what: &str| -> Result<usize, MatError> {
        tokens
            .next()
            .ok_or_else(|| MatError::Parse(format!("missing {what}")))?
            .parse::<usize>()
            .map_err(|e| MatError::Parse(format!("bad {what}: {e}")))
    };
    let rows = dim("row count")?;
    let cols = dim("column count")?;
    let mut data = Vec::with_capacity(rows * cols);
    for tok in tokens.by_ref() {
        let v: f64 = tok.parse().map_err(|e| MatError::Parse(format!("bad value {tok:?}: {e}")))?;
        data.push(v);
    }
    if data.len() != rows * cols {
        return Err(MatError::Parse(format!("expected {} values, found {}", rows * cols, data.len())));
    }
    DenseMatrix::new(rows, cols, data)
}

pub fn format_mat1(m: &DenseMatrix) -> String {
    let mut out = format!("{MAT1_MAGIC} {} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

pub fn read_mat1(path: impl AsRef<Path>) -> Result<DenseMatrix, MatError> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| MatError::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_mat1(&text)
}

pub fn write_mat1(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<(), MatError> {
    std::fs::write(path.as_ref(), format_mat1(m)).map_err(|e| MatError::Io(format!("{}: {e}", path.as_ref().display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{normal_matrix, seeded};

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = seeded(1);
        let m = normal_matrix(&mut rng, 3, 5).scale(1e-7);
        let back = parse_mat1(&format_mat1(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn parses_loose_whitespace() {
        let m = parse_mat1("MAT1 2 2\n1 0\n\n  0   1e0 \n").unwrap();
        assert_eq!(m, DenseMatrix::identity(2));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_mat1("MAT2 1 1 0").is_err());
        assert!(parse_mat1("MAT1 2 2 1 2 3").is_err());
        assert!(parse_mat1("MAT1 1 1 nan").is_err());
        assert!(parse_mat1("").is_err());
    }
}
