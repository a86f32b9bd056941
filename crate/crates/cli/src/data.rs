//! CSV datasets: header `f0..f{d-1},l0..l{L-1}`, one sample per row.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use snefy_ldl::{floor_normalize, FeatureVector, LdlDataset, EPS_FLOOR};

use crate::error::{CliError, CliResult};

/// Largest tolerated |Σ labels − 1| before a row is rejected.
pub const SUM_TOLERANCE: f64 = 1e-6;

/// Summary of an ingested file.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub rows: usize,
    pub feature_dim: usize,
    pub label_dim: usize,
    /// Largest |Σ labels − 1| over the raw rows.
    pub max_sum_deviation: f64,
    /// Rows whose labels were rescaled to sum to 1.
    pub renormalized: usize,
}

pub fn expected_header(d: usize, l: usize) -> Vec<String> {
    (0..d).map(|i| format!("f{i}")).chain((0..l).map(|i| format!("l{i}"))).collect()
}

fn infer_dims(header: &[String]) -> (usize, usize) {
    let d = header.iter().take_while(|h| h.starts_with('f')).count();
    (d, header.len() - d)
}

/// Parses and validates a dataset. Label rows are floored away from the
/// simplex boundary; rows that do not sum to 1 are rejected unless
/// `renormalize` is set.
pub fn ingest(
    path: &Path,
    d: Option<usize>,
    l: Option<usize>,
    renormalize: bool,
) -> CliResult<(LdlDataset, IngestReport)> {
    let shown = path.display().to_string();
    let file = File::open(path).map_err(|e| CliError::io(format!("cannot open {shown}"), e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let (d_inf, l_inf) = infer_dims(&header);
    let (d, l) = (d.unwrap_or(d_inf), l.unwrap_or(l_inf));
    let expected = expected_header(d, l);
    if header != expected || l < 2 {
        return Err(CliError::Parse {
            path: shown,
            line: 1,
            column: 1,
            message: format!("expected header {:?}, found {:?}", expected.join(","), header.join(",")),
        });
    }
    let parse_err = |line: usize, column: usize, message: String| CliError::Parse {
        path: shown.clone(),
        line,
        column,
        message,
    };
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut max_dev: f64 = 0.0;
    let mut renormalized = 0;
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record?;
        if record.len() != d + l {
            return Err(parse_err(line, record.len().min(d + l) + 1, format!("expected {} columns, found {}", d + l, record.len())));
        }
        let mut values = Vec::with_capacity(d + l);
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| parse_err(line, c + 1, format!("{:?} is not a number", cell)))?;
            if !v.is_finite() {
                return Err(parse_err(line, c + 1, format!("{v} is not finite")));
            }
            if c >= d && v < 0.0 {
                return Err(parse_err(line, c + 1, format!("label {v} is negative")));
            }
            values.push(v);
        }
        let raw = &values[d..];
        let sum: f64 = raw.iter().sum();
        let dev = (sum - 1.0).abs();
        max_dev = max_dev.max(dev);
        if dev > SUM_TOLERANCE {
            if !renormalize {
                return Err(parse_err(
                    line,
                    d + 1,
                    format!("labels sum to {sum}, not 1 (pass --renormalize to rescale)"),
                ));
            }
            renormalized += 1;
        }
        labels.push(floor_normalize(raw, EPS_FLOOR).map_err(|e| parse_err(line, d + 1, e.to_string()))?);
        features.push(FeatureVector::new(values[..d].to_vec())?);
    }
    if features.is_empty() {
        return Err(parse_err(2, 1, "no data rows".into()));
    }
    let data = LdlDataset::new(features, labels, (0..l).map(|i| format!("l{i}")).collect())?;
    let report = IngestReport { rows: data.len(), feature_dim: d, label_dim: l, max_sum_deviation: max_dev, renormalized };
    Ok((data, report))
}

/// Writes `data` with shortest round-trip float formatting, so ingesting the
/// file reproduces every value exactly.
pub fn write_dataset(path: &Path, data: &LdlDataset) -> CliResult<()> {
    let mut out = String::new();
    out.push_str(&expected_header(data.feature_dim(), data.label_dim()).join(","));
    out.push('\n');
    for (x, ell) in data.iter() {
        let cells: Vec<String> = x.iter().chain(ell.iter()).map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    let mut f = File::create(path).map_err(|e| CliError::io(format!("cannot create {}", path.display()), e))?;
    f.write_all(out.as_bytes()).map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, body: &str) -> std::path::PathBuf {
        let p = dir.join("d.csv");
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn two_row_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "f0,f1,l0,l1,l2\n0.1,0.2,0.2,0.3,0.5\n-1,3,0.6,0.4,0\n");
        let (data, rep) = ingest(&p, None, None, false).unwrap();
        assert_eq!((rep.rows, rep.feature_dim, rep.label_dim), (2, 2, 3));
        for ell in data.labels() {
            assert!((ell.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(ell.is_interior());
        }
    }

    #[test]
    fn unnormalized_rows_need_the_flag() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "f0,f1,l0,l1,l2\n0,0,0.5,0.5,0.1\n");
        match ingest(&p, None, None, false) {
            Err(CliError::Parse { line: 2, column: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        let (data, rep) = ingest(&p, None, None, true).unwrap();
        assert_eq!(rep.renormalized, 1);
        assert!((data.label(0)[2] - 0.1 / 1.1).abs() < 1e-5);
    }

    #[test]
    fn header_and_cell_errors_are_located() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "x0,l0,l1\n0,0.5,0.5\n");
        let err = ingest(&p, Some(1), Some(2), false).unwrap_err().to_string();
        assert!(err.contains("f0,l0,l1"), "{err}");
        let p = write(dir.path(), "f0,l0,l1\n0,0.5,0.5\n1,abc,0.5\n");
        assert!(matches!(ingest(&p, None, None, false), Err(CliError::Parse { line: 3, column: 2, .. })));
        let p = write(dir.path(), "f0,l0,l1\n0,-0.5,1.5\n");
        assert!(matches!(ingest(&p, None, None, false), Err(CliError::Parse { line: 2, column: 2, .. })));
        let p = write(dir.path(), "f0,l0,l1\n0,0.5\n");
        assert!(matches!(ingest(&p, None, None, false), Err(CliError::Parse { line: 2, .. })));
        let p = write(dir.path(), "f0,l0,l1\n");
        assert!(ingest(&p, None, None, false).is_err());
    }

    #[test]
    fn write_then_ingest_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "f0,l0,l1,l2\n0.123456789,0.2,0.3,0.5\n-7.5,0.1,0,0.9\n");
        let (data, _) = ingest(&p, None, None, false).unwrap();
        let q = dir.path().join("out.csv");
        write_dataset(&q, &data).unwrap();
        let (again, _) = ingest(&q, None, None, false).unwrap();
        assert_eq!(data, again);
    }
}
