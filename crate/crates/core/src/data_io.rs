//! Dataset ingestion, the retention analysis pipeline, and report output.
//!
//! CSV files are read with one observation per row and one variable per
//! column, which is the usual export layout. Internally the data is
//! transposed into the `p x n` (variables x observations) convention used by
//! [`crate::linalg`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::enp_sim::rho_hat_from_spectrum;
use crate::error::{Error, Result};
use crate::linalg::{self, DataMatrix, Provenance};
use crate::mp_dist::LimitParams;

/// Default CPV threshold of the analysis tables.
pub const DEFAULT_T: f64 = 0.7;

/// A numeric table: `n` observations (rows) of `p` labelled variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub labels: Vec<String>,
    observations: DMatrix<f64>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        labels: Vec<String>,
        observations: DMatrix<f64>,
    ) -> Result<Self> {
        let (n, p) = observations.shape();
        if n < 2 || p < 1 {
            return Err(Error::Shape(format!(
                "dataset needs n >= 2 rows and p >= 1 columns, got {n}x{p}"
            )));
        }
        if labels.len() != p {
            return Err(Error::Shape(format!(
                "{} labels for {p} columns",
                labels.len()
            )));
        }
        if observations.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "dataset has non-finite values".into(),
            ));
        }
        Ok(Dataset {
            name: name.into(),
            labels,
            observations,
        })
    }

    /// Wraps a `p x n` data matrix as a dataset with columns `x1..xp`.
    pub fn from_data_matrix(name: impl Into<String>, x: &DataMatrix) -> Result<Self> {
        let labels = (1..=x.p()).map(|i| format!("x{i}")).collect();
        Self::new(name, labels, x.entries().transpose())
    }

    pub fn n(&self) -> usize {
        self.observations.nrows()
    }

    pub fn p(&self) -> usize {
        self.observations.ncols()
    }

    /// `n x p` observations.
    pub fn observations(&self) -> &DMatrix<f64> {
        &self.observations
    }

    pub fn to_data_matrix(&self) -> Result<DataMatrix> {
        DataMatrix::new(
            self.observations.transpose(),
            Provenance::Ingested {
                name: self.name.clone(),
            },
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadOptions {
    pub delimiter: u8,
    pub has_header: bool,
}

impl Default for ReadOptions {
    fn default() -> Self {
        ReadOptions {
            delimiter: b',',
            has_header: true,
        }
    }
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("na") || c.eq_ignore_ascii_case("nan")
}

/// Reads a numeric CSV. Row and column numbers in errors are 1-based and
/// count the header line.
pub fn read_csv(path: impl AsRef<Path>, options: ReadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut labels: Option<Vec<String>> = None;
    let mut values: Vec<f64> = Vec::new();
    let mut width: Option<usize> = None;
    let mut rows = 0;
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = idx + 1;
        if idx == 0 && options.has_header {
            labels = Some(record.iter().map(|s| s.trim().to_string()).collect());
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Ragged {
                path: path.to_path_buf(),
                row: line,
                found: record.len(),
                expected,
            });
        }
        for (col, cell) in record.iter().enumerate() {
            if is_missing(cell) {
                return Err(Error::MissingValue {
                    path: path.to_path_buf(),
                    row: line,
                    col: col + 1,
                });
            }
            let v = f64::from_str(cell.trim()).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                row: line,
                col: col + 1,
                msg: format!("{cell:?}: {e}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row: line,
                    col: col + 1,
                    msg: format!("{cell:?} is not finite"),
                });
            }
            values.push(v);
        }
        rows += 1;
    }
    let p = width.unwrap_or(0);
    let labels = labels.unwrap_or_else(|| (1..=p).map(|i| format!("x{i}")).collect());
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let observations = DMatrix::from_row_slice(rows, p, &values);
    Dataset::new(name, labels, observations).map_err(|e| e.context(path.display().to_string()))
}

/// Writes a dataset as CSV with a header. Values use the shortest decimal
/// form that parses back to the same `f64`.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&ds.labels)?;
    for row in ds.observations.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Retention summary of one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetentionReport {
    pub name: String,
    pub p: usize,
    pub n: usize,
    pub p_over_n: f64,
    pub rho_hat: f64,
    pub gk_empirical: f64,
    pub gk_plugin_limit: f64,
    pub cpv_empirical: f64,
    pub t: f64,
}

pub const REPORT_COLUMNS: [&str; 9] = [
    "name",
    "p",
    "n",
    "p_over_n",
    "rho_hat",
    "gk_empirical",
    "gk_plugin_limit",
    "cpv_empirical",
    "t",
];

/// Correlation-matrix retention analysis: `GK^R`, `CP^R(t)`, `lambda_1(R)/p`,
/// and the plug-in limit `GK_{p/n, lambda_1(R)/p}`.
pub fn analyze(ds: &Dataset, t: f64) -> Result<RetentionReport> {
    let ctx = |e: Error| e.context(format!("dataset {}", ds.name));
    let x = ds.to_data_matrix().map_err(ctx)?;
    let r = linalg::sample_correlation(&x).map_err(|e| match e {
        Error::ConstantRow { row } => ctx(Error::ConstantRow { row }.context(format!(
            "column {:?} (#{}) is constant",
            ds.labels[row],
            row + 1
        ))),
        other => ctx(other),
    })?;
    let spectrum = linalg::symmetric_eigenvalues(&r).map_err(ctx)?;
    let (p, n) = (ds.p(), ds.n());
    let p_over_n = p as f64 / n as f64;
    let rho_hat = rho_hat_from_spectrum(&spectrum);
    let gk_plugin_limit = LimitParams::new(p_over_n, rho_hat)
        .map(|l| l.gk())
        .map_err(|e| ctx(e.context("plug-in limit")))?;
    Ok(RetentionReport {
        name: ds.name.clone(),
        p,
        n,
        p_over_n,
        rho_hat,
        gk_empirical: spectrum.gk_fraction(),
        gk_plugin_limit,
        cpv_empirical: spectrum.cpv_fraction(t).map_err(ctx)?,
        t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidParameter(format!(
                "unknown report format {other:?}"
            ))),
        }
    }
}

/// Rounds to six significant digits.
pub fn round_sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

fn rounded(r: &RetentionReport) -> RetentionReport {
    RetentionReport {
        p_over_n: round_sig6(r.p_over_n),
        rho_hat: round_sig6(r.rho_hat),
        gk_empirical: round_sig6(r.gk_empirical),
        gk_plugin_limit: round_sig6(r.gk_plugin_limit),
        cpv_empirical: round_sig6(r.cpv_empirical),
        t: round_sig6(r.t),
        ..r.clone()
    }
}

/// Writes reports as CSV (header always present) or as a JSON array of
/// objects. Real-valued fields carry six significant digits.
pub fn write_report_to<W: Write>(
    reports: &[RetentionReport],
    format: ReportFormat,
    out: W,
) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(out);
            w.write_record(REPORT_COLUMNS)?;
            for r in reports {
                w.serialize(rounded(r))?;
            }
            w.flush()?;
        }
        ReportFormat::Json => {
            let rows: Vec<RetentionReport> = reports.iter().map(rounded).collect();
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, &rows)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn write_report(
    reports: &[RetentionReport],
    format: ReportFormat,
    path: impl AsRef<Path>,
) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    write_report_to(reports, format, file)
}

/// Reads back a CSV report written by [`write_report`].
pub fn read_report_csv(path: impl AsRef<Path>) -> Result<Vec<RetentionReport>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        std::fs::File::create(&path)
            .unwrap()
            .write_all(body.as_bytes())
            .unwrap();
        path
    }

    #[test]
    fn reads_small_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_tmp(&dir, "small.csv", "a,b\n1,2\n3.5,-4e-3\n5,6\n");
        let ds = read_csv(&path, ReadOptions::default()).unwrap();
        assert_eq!((ds.n(), ds.p()), (3, 2));
        assert_eq!(ds.labels, vec!["a", "b"]);
        assert_eq!(ds.observations()[(1, 1)], -4e-3);
        assert_eq!(ds.name, "small");
    }

    #[test]
    fn headerless_with_semicolons() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_tmp(&dir, "x.csv", "1;2\n3;4\n");
        let opts = ReadOptions {
            delimiter: b';',
            has_header: false,
        };
        let ds = read_csv(&path, opts).unwrap();
        assert_eq!(ds.labels, vec!["x1", "x2"]);
        assert_eq!(ds.n(), 2);
    }

    #[test]
    fn reports_missing_and_bad_cells() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_tmp(&dir, "m.csv", "a,b\n1,2\n3,\n");
        match read_csv(&path, ReadOptions::default()) {
            Err(Error::MissingValue { row, col, .. }) => assert_eq!((row, col), (3, 2)),
            other => panic!("{other:?}"),
        }
        let path = write_tmp(&dir, "p.csv", "a,b\n1,2\n3,4,5\n");
        assert!(matches!(
            read_csv(&path, ReadOptions::default()),
            Err(Error::Ragged { row: 3, .. })
        ));
        let path = write_tmp(&dir, "r.csv", "a,b\n1,2\n3,4;5\n");
        assert!(matches!(
            read_csv(&path, ReadOptions::default()),
            Err(Error::Parse { row: 3, col: 2, .. })
        ));
        // decimal commas are not accepted
        let path = write_tmp(&dir, "s.csv", "a;b\n1,5;2\n3;4\n");
        let opts = ReadOptions {
            delimiter: b';',
            has_header: true,
        };
        assert!(matches!(read_csv(&path, opts), Err(Error::Parse { .. })));
    }

    #[test]
    fn constant_column_names_label() {
        let obs = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        let ds = Dataset::new("d", vec!["x".into(), "flat".into()], obs).unwrap();
        let err = analyze(&ds, DEFAULT_T).unwrap_err();
        assert!(matches!(err.root(), Error::ConstantRow { row: 1 }));
        assert!(err.to_string().contains("flat"), "{err}");
    }

    #[test]
    fn sig6_rounding() {
        assert_eq!(round_sig6(0.18639328984156567), 0.186393);
        assert_eq!(round_sig6(5.365), 5.365);
        assert_eq!(round_sig6(123456789.0), 123457000.0);
        assert_eq!(round_sig6(0.0), 0.0);
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut buf = Vec::new();
        write_report_to(&[], ReportFormat::Csv, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("{}\n", REPORT_COLUMNS.join(","))
        );
        let mut buf = Vec::new();
        write_report_to(&[], ReportFormat::Json, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim(), "[]");
    }

    #[test]
    fn format_parsing() {
        assert_eq!("JSON".parse::<ReportFormat>().unwrap(), ReportFormat::Json);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
