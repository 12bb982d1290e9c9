//! Response vector plus covariate matrix, CSV ingestion and hold-out splits.

use std::fs::File;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from;
use crate::scalar::Scalar;

/// Covariates are stored column-major: base-learners scan one column at a time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Dataset<T: Scalar> {
    y: Vec<T>,
    columns: Vec<Vec<T>>,
    names: Vec<String>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(y: Vec<T>, columns: Vec<Vec<T>>, names: Vec<String>) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::InvalidData("empty response".into()));
        }
        if columns.len() != names.len() {
            return Err(Error::InvalidData(format!(
                "{} columns but {} names",
                columns.len(),
                names.len()
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "response", index: i });
        }
        for (c, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::InvalidData(format!(
                    "column {:?} has {} rows, response has {n}",
                    names[c],
                    col.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!(
                    "non-finite covariate {:?} at row {i}",
                    names[c]
                )));
            }
        }
        Ok(Self { y, columns, names })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn column(&self, j: usize) -> &[T] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<T>] {
        &self.columns
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Rows in the given order.
    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            y: rows.iter().map(|&i| self.y[i]).collect(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&i| c[i]).collect())
                .collect(),
            names: self.names.clone(),
        }
    }

    /// Same rows and response, covariates dropped.
    pub fn intercept_only(&self) -> Self {
        Self {
            y: self.y.clone(),
            columns: Vec::new(),
            names: Vec::new(),
        }
    }

    /// Z-scores every non-constant column; returns the (mean, sd) used per column.
    pub fn standardized(&self) -> (Self, Vec<(T, T)>) {
        let n = T::from_usize_lossy(self.n());
        let mut scaling = Vec::with_capacity(self.p());
        let columns = self
            .columns
            .iter()
            .map(|c| {
                let m = c.iter().copied().sum::<T>() / n;
                let var = c.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / n;
                let sd = if var > T::zero() { var.sqrt() } else { T::one() };
                scaling.push((m, sd));
                c.iter().map(|&v| (v - m) / sd).collect()
            })
            .collect();
        (
            Self {
                y: self.y.clone(),
                columns,
                names: self.names.clone(),
            },
            scaling,
        )
    }

    pub fn convert<U: Scalar>(&self) -> Dataset<U> {
        let cv = |v: &T| U::lit(v.as_f64());
        Dataset {
            y: self.y.iter().map(cv).collect(),
            columns: self.columns.iter().map(|c| c.iter().map(cv).collect()).collect(),
            names: self.names.clone(),
        }
    }
}

/// Header and numeric columns of a headered CSV, with 1-based diagnostics.
/// `check_header` runs before any cell is parsed.
fn read_table<T: Scalar>(
    path: &Path,
    check_header: impl FnOnce(&[String]) -> Result<()>,
) -> Result<(Vec<String>, Vec<Vec<T>>)> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    check_header(&header)?;
    let mut columns: Vec<Vec<T>> = vec![Vec::new(); header.len()];
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let row = r + 1;
        for (c, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                return Err(Error::MissingValue { row, column: c + 1 });
            }
            let value: T = cell.parse().map_err(|_| Error::NonNumeric {
                row,
                column: c + 1,
                value: cell.to_string(),
            })?;
            columns[c].push(value);
        }
    }
    Ok((header, columns))
}

/// Reads a headered CSV; every column except `response_column` becomes a
/// covariate, in file order.
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, response_column: &str) -> Result<Dataset<T>> {
    let find = |header: &[String]| {
        header
            .iter()
            .position(|h| h == response_column)
            .ok_or_else(|| Error::MissingResponse(response_column.to_string()))
    };
    let (header, mut columns) = read_table::<T>(path.as_ref(), |h| find(h).map(drop))?;
    let response = find(&header)?;
    let y = columns.remove(response);
    let names = header
        .into_iter()
        .enumerate()
        .filter(|&(c, _)| c != response)
        .map(|(_, h)| h)
        .collect();
    Dataset::new(y, columns, names)
}

/// Covariate columns picked by name, in the order of `names`; other columns
/// (including any response) are ignored.
pub fn load_covariates_csv<T: Scalar>(path: impl AsRef<Path>, names: &[String]) -> Result<Vec<Vec<T>>> {
    let (header, columns) = read_table::<T>(path.as_ref(), |_| Ok(()))?;
    let mut out = Vec::with_capacity(names.len());
    for name in names {
        let c = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidData(format!("covariate column {name:?} not found in header")))?;
        let col = columns[c].clone();
        if let Some(i) = col.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite covariate {name:?} at row {}", i + 1)));
        }
        out.push(col);
    }
    Ok(out)
}

pub fn write_csv<T: Scalar>(d: &Dataset<T>, path: impl AsRef<Path>, response_name: &str) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Csv(e.to_string()))?;
    let mut header = vec![response_name.to_string()];
    header.extend(d.names.iter().cloned());
    w.write_record(&header).map_err(|e| Error::Csv(e.to_string()))?;
    for i in 0..d.n() {
        let mut row = vec![d.y[i].to_string()];
        row.extend(d.columns.iter().map(|c| c[i].to_string()));
        w.write_record(&row).map_err(|e| Error::Csv(e.to_string()))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Seeded random partition into (train, validation) row indices, each sorted.
pub fn holdout_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "hold-out fraction {fraction} outside (0, 1)"
        )));
    }
    if n < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 rows to split, got {n}")));
    }
    let n_val = (fraction * n as f64).round() as usize;
    if n_val == 0 || n_val == n {
        return Err(Error::InvalidArgument(format!(
            "fraction {fraction} of {n} rows leaves an empty part"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_from(seed));
    let mut validation = perm[..n_val].to_vec();
    let mut train = perm[n_val..].to_vec();
    validation.sort_unstable();
    train.sort_unstable();
    Ok((train, validation))
}

pub fn split_holdout<T: Scalar>(d: &Dataset<T>, fraction: f64, seed: u64) -> Result<(Dataset<T>, Dataset<T>)> {
    let (train, validation) = holdout_indices(d.n(), fraction, seed)?;
    Ok((d.subset(&train), d.subset(&validation)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_three_rows() {
        let f = write_tmp("y,x1,x2\n1,2,3\n4,5,6\n7,8.5,-9\n");
        let d: Dataset<f64> = load_csv(f.path(), "y").unwrap();
        assert_eq!(d.n(), 3);
        assert_eq!(d.p(), 2);
        assert_eq!(d.names(), &["x1".to_string(), "x2".to_string()]);
        assert_eq!(d.y(), &[1.0, 4.0, 7.0]);
        assert_eq!(d.column(1), &[3.0, 6.0, -9.0]);
    }

    #[test]
    fn response_may_sit_anywhere() {
        let f = write_tmp("a,time,b\n1,2,3\n4,5,6\n");
        let d: Dataset<f64> = load_csv(f.path(), "time").unwrap();
        assert_eq!(d.y(), &[2.0, 5.0]);
        assert_eq!(d.names(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn blank_cell_is_reported_with_position() {
        let f = write_tmp("y,x1,x2\n1,2,3\n4,,6\n");
        let err = load_csv::<f64>(f.path(), "y").unwrap_err();
        assert_eq!(err.to_string(), "missing value at row 2, column 2");
    }

    #[test]
    fn distinct_errors() {
        let f = write_tmp("y,x1\n1,abc\n");
        assert!(matches!(
            load_csv::<f64>(f.path(), "y"),
            Err(Error::NonNumeric { row: 1, column: 2, .. })
        ));
        assert!(matches!(load_csv::<f64>(f.path(), "z"), Err(Error::MissingResponse(_))));
        assert!(matches!(
            load_csv::<f64>("/nonexistent/file.csv", "y"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn rejects_non_finite() {
        let f = write_tmp("y,x1\n1,NaN\n2,3\n");
        assert!(load_csv::<f64>(f.path(), "y").is_err());
        assert!(Dataset::new(vec![f64::INFINITY], vec![], vec![]).is_err());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let (train, val) = holdout_indices(9, 1.0 / 3.0, 4).unwrap();
        assert_eq!(train.len(), 6);
        assert_eq!(val.len(), 3);
        assert_eq!(holdout_indices(9, 1.0 / 3.0, 4).unwrap(), (train, val));
        assert!(holdout_indices(9, 0.0, 1).is_err());
        assert!(holdout_indices(9, 1.0, 1).is_err());
        assert!(holdout_indices(2, 0.5, 1).is_err());
    }

    #[test]
    fn split_is_a_partition() {
        for seed in 0..50 {
            let n = 3 + (seed as usize * 7) % 40;
            let (train, val) = holdout_indices(n, 0.333, seed).unwrap();
            let mut all: Vec<usize> = train.iter().chain(val.iter()).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn standardized_columns() {
        let d = Dataset::new(
            vec![0.0, 1.0, 2.0],
            vec![vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0]],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let (s, scaling) = d.standardized();
        assert_eq!(scaling[0].0, 2.0);
        assert!((s.column(0).iter().map(|v| v * v).sum::<f64>() - 3.0).abs() < 1e-12);
        assert_eq!(s.column(1), &[0.0, 0.0, 0.0]);
    }
}
