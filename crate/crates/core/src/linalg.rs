//! Matrix statistics of a `p x n` data matrix and the symmetric eigenvalue
//! contract.
//!
//! Rows are variables and columns are observations throughout.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spectral::Spectrum;

/// Relative asymmetry tolerated by [`symmetric_eigenvalues`].
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Negative eigenvalues above `-PSD_CLAMP * lambda_1` are round-off and are
/// clamped to zero.
pub const PSD_CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Simulated { seed: u64 },
    Ingested { name: String },
    Constructed,
}

/// A `p x n` real data matrix: `p` variables observed `n` times.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    entries: DMatrix<f64>,
    provenance: Provenance,
}

impl DataMatrix {
    pub fn new(entries: DMatrix<f64>, provenance: Provenance) -> Result<Self> {
        let (p, n) = entries.shape();
        if p < 1 || n < 2 {
            return Err(Error::Shape(format!("need p >= 1 and n >= 2, got {p}x{n}")));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "data matrix has non-finite entries".into(),
            ));
        }
        Ok(DataMatrix {
            entries,
            provenance,
        })
    }

    /// From row-major nested rows, one per variable.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::Shape(format!(
                "row {bad} has {} entries, expected {n}",
                rows[bad].len()
            )));
        }
        let m = DMatrix::from_fn(p, n, |i, j| rows[i][j]);
        Self::new(m, Provenance::Constructed)
    }

    pub fn p(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.entries.row(i).iter().copied().collect()
    }

    fn row_centered(&self) -> DMatrix<f64> {
        let mut m = self.entries.clone();
        for mut row in m.row_iter_mut() {
            let mean = row.mean();
            row.add_scalar_mut(-mean);
        }
        m
    }

    /// `E = n^{-1/2} (X - Xbar)`.
    pub fn centered_factor(&self) -> DMatrix<f64> {
        self.row_centered() / (self.n() as f64).sqrt()
    }

    /// `n^{-1/2} X`.
    pub fn raw_factor(&self) -> DMatrix<f64> {
        &self.entries / (self.n() as f64).sqrt()
    }

    /// `Y`, whose rows are the centered rows scaled to unit length.
    pub fn correlation_factor(&self) -> Result<DMatrix<f64>> {
        for (i, row) in self.entries.row_iter().enumerate() {
            let first = row[0];
            if row.iter().all(|v| *v == first) {
                return Err(Error::ConstantRow { row: i });
            }
        }
        let mut y = self.row_centered();
        for (i, mut row) in y.row_iter_mut().enumerate() {
            let norm = row.norm();
            if norm == 0.0 {
                return Err(Error::ConstantRow { row: i });
            }
            row /= norm;
        }
        Ok(y)
    }

    /// `Y~`, whose rows are the raw rows scaled to unit length.
    pub fn noncentered_correlation_factor(&self) -> Result<DMatrix<f64>> {
        let mut y = self.entries.clone();
        for (i, mut row) in y.row_iter_mut().enumerate() {
            let norm = row.norm();
            if norm == 0.0 {
                return Err(Error::ZeroRow { row: i });
            }
            row /= norm;
        }
        Ok(y)
    }
}

fn gram(factor: &DMatrix<f64>) -> DMatrix<f64> {
    factor * factor.transpose()
}

fn set_unit_diagonal(mut m: DMatrix<f64>) -> DMatrix<f64> {
    m.fill_diagonal(1.0);
    m
}

/// `S = X X^T / n`.
pub fn sample_covariance(x: &DataMatrix) -> DMatrix<f64> {
    gram(&x.entries) / x.n() as f64
}

/// `S~ = E E^T` with `E = n^{-1/2} (X - Xbar)`.
pub fn centered_covariance(x: &DataMatrix) -> DMatrix<f64> {
    gram(&x.centered_factor())
}

/// `R = Y Y^T`; the diagonal is exactly 1.
pub fn sample_correlation(x: &DataMatrix) -> Result<DMatrix<f64>> {
    Ok(set_unit_diagonal(gram(&x.correlation_factor()?)))
}

/// `R~ = Y~ Y~^T`; the diagonal is exactly 1.
pub fn noncentered_correlation(x: &DataMatrix) -> Result<DMatrix<f64>> {
    Ok(set_unit_diagonal(gram(
        &x.noncentered_correlation_factor()?,
    )))
}

/// Descending eigenvalues of a symmetric positive semi-definite matrix.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Spectrum> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::Shape(format!(
            "expected a nonempty square matrix, got {:?}",
            m.shape()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "matrix has non-finite entries".into(),
        ));
    }
    let scale = m.amax();
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric {
            asymmetry: if scale > 0.0 { asym / scale } else { asym },
        });
    }
    let raw = m.clone().symmetric_eigenvalues();
    clamp_spectrum(raw.iter().copied().collect())
}

fn clamp_spectrum(mut values: Vec<f64>) -> Result<Spectrum> {
    values.sort_by(|a, b| b.total_cmp(a));
    let top = values[0].max(0.0);
    for v in values.iter_mut() {
        if *v < 0.0 {
            if *v < -PSD_CLAMP * top {
                return Err(Error::NotPositiveSemiDefinite { value: *v });
            }
            *v = 0.0;
        }
    }
    Spectrum::new(values)
}

/// Spectrum of `F F^T` for a `p x n` factor `F`. When `p > n` the nonzero
/// eigenvalues are taken from the smaller `F^T F` and padded with `p - n`
/// zeros.
pub fn gram_spectrum(factor: &DMatrix<f64>) -> Result<Spectrum> {
    let (p, n) = factor.shape();
    if p <= n {
        return symmetric_eigenvalues(&gram(factor));
    }
    let dual = factor.transpose() * factor;
    let small = symmetric_eigenvalues(&dual)?;
    let mut values = small.eigenvalues().to_vec();
    values.resize(p, 0.0);
    Spectrum::new(values)
}

/// Spectrum of `R`, via the smaller Gram matrix when `p > n`.
pub fn correlation_spectrum(x: &DataMatrix) -> Result<Spectrum> {
    gram_spectrum(&x.correlation_factor()?)
}

/// Spectrum of `S`, via the smaller Gram matrix when `p > n`.
pub fn covariance_spectrum(x: &DataMatrix) -> Result<Spectrum> {
    gram_spectrum(&x.raw_factor())
}

/// Spectrum of `S~`, via the smaller Gram matrix when `p > n`.
pub fn centered_covariance_spectrum(x: &DataMatrix) -> Result<Spectrum> {
    gram_spectrum(&x.centered_factor())
}

/// The equi-correlation matrix `C(rho)`: unit diagonal, `rho` elsewhere.
pub fn equicorrelation_matrix(p: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { rho })
}
