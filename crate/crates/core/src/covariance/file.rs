//! Plain-text coefficient files: one `n<TAB>log_a_sq` record per line,
//! strictly increasing `n`, `#` comments. Missing indices mean `aₙ = 0`.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::CoefficientModel;
use crate::error::{Error, Result};

pub fn read_coefficient_file(path: &Path) -> Result<CoefficientModel> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = |line: usize, message: String| Error::CoefficientFile {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut values: Vec<f64> = Vec::new();
    let mut last: Option<u64> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (n_str, v_str) = line
            .split_once('\t')
            .ok_or_else(|| bad(line_no, "expected `n<TAB>log_a_sq`".into()))?;
        let n: u64 = n_str
            .trim()
            .parse()
            .map_err(|e| bad(line_no, format!("bad index `{n_str}`: {e}")))?;
        let v: f64 = v_str
            .trim()
            .parse()
            .map_err(|e| bad(line_no, format!("bad value `{v_str}`: {e}")))?;
        if v.is_nan() || v == f64::INFINITY {
            return Err(bad(line_no, format!("value `{v_str}` is not allowed")));
        }
        if last.is_some_and(|l| n <= l) {
            return Err(bad(line_no, format!("index {n} is not strictly increasing")));
        }
        if n > 50_000_000 {
            return Err(bad(line_no, format!("index {n} exceeds the supported range")));
        }
        last = Some(n);
        values.resize(n as usize, f64::NEG_INFINITY);
        values.push(v);
    }
    let stem = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    CoefficientModel::from_log_coeffs(&format!("file:{stem}"), values)
}

/// Writes the finite log-coefficients with index `≤ max_index` in the
/// coefficient file format. Values use the shortest representation that
/// parses back to the same `f64`.
pub fn write_coefficients(
    model: &CoefficientModel,
    max_index: u64,
    mut out: impl Write,
) -> std::io::Result<()> {
    writeln!(out, "# model: {}", model.tag())?;
    writeln!(out, "# n\tlog_a_sq")?;
    let mut lo = 0u64;
    while lo <= max_index {
        let hi = (lo + 4096).min(max_index + 1);
        for (i, v) in model.log_coeffs(lo, hi).into_iter().enumerate() {
            if v.is_finite() {
                writeln!(out, "{}\t{}", lo + i as u64, v)?;
            }
        }
        lo = hi;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.tsv");
        fs::write(&path, "# header\n0\t0.0\n2\t-1.5\n1\t0.0\n").unwrap();
        match read_coefficient_file(&path) {
            Err(Error::CoefficientFile { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        fs::write(&path, "0 0.0\n").unwrap();
        assert!(matches!(
            read_coefficient_file(&path),
            Err(Error::CoefficientFile { line: 1, .. })
        ));
        fs::write(&path, "# nothing\n").unwrap();
        assert!(matches!(read_coefficient_file(&path), Err(Error::EmptyModel)));
    }

    #[test]
    fn gaps_are_zero_coefficients() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gaps.tsv");
        fs::write(&path, "1\t0.5\n4\t-2\n").unwrap();
        let model = read_coefficient_file(&path).unwrap();
        assert_eq!(
            model.log_coeffs(0, 6),
            vec![f64::NEG_INFINITY, 0.5, f64::NEG_INFINITY, f64::NEG_INFINITY, -2.0, f64::NEG_INFINITY]
        );
        assert_eq!(model.max_index(), Some(4));
    }
}
