//! Parameter vectors on disk: `d=<int>`, then one value per line.

use std::path::Path;

use copyreg::DenseVector;

use crate::error::{HarnessError, Result};
use crate::sweep::write_atomic;

pub fn format_solution(x: &DenseVector) -> String {
    let mut out = format!("d={}\n", x.len());
    for v in x.iter() {
        out.push_str(&format!("{v:.16e}\n"));
    }
    out
}

pub fn parse_solution(text: &str) -> Result<DenseVector> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let d: usize = lines
        .next()
        .and_then(|l| l.strip_prefix("d="))
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| HarnessError::Parse("solution must start with d=<int>".into()))?;
    let values = lines
        .map(|l| {
            l.parse::<f64>()
                .map_err(|_| HarnessError::Parse(format!("bad value {l:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != d {
        return Err(HarnessError::Parse(format!(
            "expected {d} values, found {}",
            values.len()
        )));
    }
    Ok(DenseVector::from_vec(values))
}

pub fn write_solution(path: &Path, x: &DenseVector) -> Result<()> {
    write_atomic(path, format_solution(x).as_bytes())
}

pub fn read_solution(path: &Path) -> Result<DenseVector> {
    parse_solution(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let x = DenseVector::from_row_slice(&[0.1, -2.5e-12, 1.0 / 3.0]);
        let text = format_solution(&x);
        assert!(text.starts_with("d=3\n"));
        assert_eq!(parse_solution(&text).unwrap(), x);
    }

    #[test]
    fn rejects_mismatch() {
        assert!(parse_solution("d=2\n1.0\n").is_err());
        assert!(parse_solution("1.0\n").is_err());
        assert!(parse_solution("d=1\nabc\n").is_err());
    }
}
