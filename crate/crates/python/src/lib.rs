//! Python bindings. Matrices cross the boundary as lists of rows, with
//! variables as rows and observations as columns.

use equicorr::data_io::{self, ReadOptions};
use equicorr::enp_sim::{self, EnpParams};
use equicorr::spectral::{self, StepDistribution};
use equicorr::{linalg, mp_dist, DataMatrix, Error, ExtReal};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e.root() {
        Error::InvalidParameter(_)
        | Error::Shape(_)
        | Error::ConstantRow { .. }
        | Error::ZeroRow { .. } => PyValueError::new_err(e.to_string()),
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn ext_to_f64(x: ExtReal) -> f64 {
    match x {
        ExtReal::NegInf => f64::NEG_INFINITY,
        ExtReal::Finite(v) => v,
        ExtReal::PosInf => f64::INFINITY,
    }
}

fn data_matrix(rows: Vec<Vec<f64>>) -> PyResult<DataMatrix> {
    DataMatrix::from_rows(&rows).map_err(to_py)
}

/// Marchenko-Pastur law with ratio `c` and scale `sigma2`.
#[pyclass(name = "MpLaw", frozen)]
struct PyMpLaw(mp_dist::MpLaw);

#[pymethods]
impl PyMpLaw {
    #[new]
    #[pyo3(signature = (c, sigma2 = 1.0))]
    fn new(c: f64, sigma2: f64) -> PyResult<Self> {
        mp_dist::MpLaw::new(c, sigma2).map(PyMpLaw).map_err(to_py)
    }

    #[getter]
    fn c(&self) -> f64 {
        self.0.c()
    }

    #[getter]
    fn sigma2(&self) -> f64 {
        self.0.sigma2()
    }

    #[getter]
    fn lower_edge(&self) -> f64 {
        self.0.lower_edge()
    }

    #[getter]
    fn upper_edge(&self) -> f64 {
        self.0.upper_edge()
    }

    #[getter]
    fn point_mass(&self) -> f64 {
        self.0.point_mass()
    }

    fn pdf(&self, x: f64) -> f64 {
        self.0.pdf(x)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.0.cdf(x)
    }

    fn quantile(&self, u: f64) -> PyResult<f64> {
        self.0.quantile(u).map_err(to_py)
    }

    fn tail_mass(&self, x: f64) -> f64 {
        self.0.tail_mass(x)
    }

    fn tail_mass_inverse(&self, u: f64) -> f64 {
        ext_to_f64(self.0.tail_mass_inverse(u))
    }

    fn __repr__(&self) -> String {
        format!("MpLaw(c={}, sigma2={})", self.0.c(), self.0.sigma2())
    }
}

/// Eigenvalues of a positive semi-definite matrix, sorted descending.
#[pyclass(name = "Spectrum", frozen)]
struct PySpectrum(equicorr::Spectrum);

#[pymethods]
impl PySpectrum {
    #[new]
    fn new(eigenvalues: Vec<f64>) -> PyResult<Self> {
        equicorr::Spectrum::new(eigenvalues)
            .map(PySpectrum)
            .map_err(to_py)
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigenvalues().to_vec()
    }

    #[getter]
    fn p(&self) -> usize {
        self.0.p()
    }

    #[getter]
    fn largest(&self) -> f64 {
        self.0.largest()
    }

    #[getter]
    fn trace(&self) -> f64 {
        self.0.trace()
    }

    fn scaled(&self, k: f64) -> PyResult<Self> {
        self.0.scaled(k).map(PySpectrum).map_err(to_py)
    }

    fn esd(&self, x: f64) -> f64 {
        self.0.esd_eval(x)
    }

    fn gk_fraction(&self) -> f64 {
        self.0.gk_fraction()
    }

    fn cpv_fraction(&self, t: f64) -> PyResult<f64> {
        self.0.cpv_fraction(t).map_err(to_py)
    }

    fn cpv_fraction_via_threshold(&self, t: f64) -> PyResult<f64> {
        self.0.cpv_fraction_via_threshold(t).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.0.p()
    }

    fn __repr__(&self) -> String {
        format!("Spectrum(p={}, largest={})", self.0.p(), self.0.largest())
    }
}

#[pyfunction]
fn gk_limit(c: f64, rho: f64) -> PyResult<f64> {
    mp_dist::gk_limit(c, rho).map_err(to_py)
}

#[pyfunction]
fn cpv_limit(c: f64, rho: f64, t: f64) -> PyResult<f64> {
    mp_dist::cpv_limit(c, rho, t).map_err(to_py)
}

#[pyfunction]
fn gk_saturation_index(rho: f64) -> f64 {
    mp_dist::gk_saturation_index(rho)
}

/// Kolmogorov distance between the empirical distributions of two samples.
#[pyfunction]
fn kolmogorov_distance(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    let fa = StepDistribution::empirical(&a).map_err(to_py)?;
    let fb = StepDistribution::empirical(&b).map_err(to_py)?;
    Ok(spectral::kolmogorov_distance(&fa, &fb))
}

/// Levy distance between the empirical distributions of two samples.
#[pyfunction]
fn levy_distance(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    let fa = StepDistribution::empirical(&a).map_err(to_py)?;
    let fb = StepDistribution::empirical(&b).map_err(to_py)?;
    Ok(spectral::levy_distance(&fa, &fb))
}

/// Kolmogorov distance from the empirical distribution of `sample` to a
/// Marchenko-Pastur law.
#[pyfunction]
fn kolmogorov_to_mp(sample: Vec<f64>, law: &PyMpLaw) -> PyResult<f64> {
    let f = StepDistribution::empirical(&sample).map_err(to_py)?;
    Ok(spectral::kolmogorov_distance(&f, &law.0))
}

/// Draws a `p x n` equi-correlated normal sample.
#[pyfunction]
#[pyo3(signature = (p, n, rho, sigma = 1.0, seed = 0, mu = None, d = None))]
fn sample_enp(
    p: usize,
    n: usize,
    rho: f64,
    sigma: f64,
    seed: u64,
    mu: Option<Vec<f64>>,
    d: Option<Vec<f64>>,
) -> PyResult<Vec<Vec<f64>>> {
    let mut params = EnpParams::new(p, n, rho, sigma, seed).map_err(to_py)?;
    if let Some(mu) = mu {
        params = params.with_mu(mu).map_err(to_py)?;
    }
    if let Some(d) = d {
        params = params.with_d(d).map_err(to_py)?;
    }
    let x = enp_sim::sample_enp(&params).map_err(to_py)?;
    Ok((0..x.p()).map(|i| x.row(i)).collect())
}

#[pyfunction]
fn correlation_spectrum(rows: Vec<Vec<f64>>) -> PyResult<PySpectrum> {
    let x = data_matrix(rows)?;
    linalg::correlation_spectrum(&x)
        .map(PySpectrum)
        .map_err(to_py)
}

#[pyfunction]
fn covariance_spectrum(rows: Vec<Vec<f64>>) -> PyResult<PySpectrum> {
    let x = data_matrix(rows)?;
    linalg::covariance_spectrum(&x)
        .map(PySpectrum)
        .map_err(to_py)
}

#[pyfunction]
fn centered_covariance_spectrum(rows: Vec<Vec<f64>>) -> PyResult<PySpectrum> {
    let x = data_matrix(rows)?;
    linalg::centered_covariance_spectrum(&x)
        .map(PySpectrum)
        .map_err(to_py)
}

/// `lambda_1(R) / p` of the sample correlation matrix.
#[pyfunction]
fn rho_hat(rows: Vec<Vec<f64>>) -> PyResult<f64> {
    let x = data_matrix(rows)?;
    let r = linalg::sample_correlation(&x).map_err(to_py)?;
    enp_sim::rho_hat(&r).map_err(to_py)
}

/// Retention report of a CSV file with one observation per row.
#[pyfunction]
#[pyo3(signature = (path, t = data_io::DEFAULT_T, delimiter = ',', has_header = true))]
fn analyze_csv<'py>(
    py: Python<'py>,
    path: std::path::PathBuf,
    t: f64,
    delimiter: char,
    has_header: bool,
) -> PyResult<Bound<'py, PyDict>> {
    if !delimiter.is_ascii() {
        return Err(PyValueError::new_err("delimiter must be ASCII"));
    }
    let options = ReadOptions {
        delimiter: delimiter as u8,
        has_header,
    };
    let ds = data_io::read_csv(&path, options).map_err(to_py)?;
    let r = data_io::analyze(&ds, t).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("name", r.name)?;
    d.set_item("p", r.p)?;
    d.set_item("n", r.n)?;
    d.set_item("p_over_n", r.p_over_n)?;
    d.set_item("rho_hat", r.rho_hat)?;
    d.set_item("gk_empirical", r.gk_empirical)?;
    d.set_item("gk_plugin_limit", r.gk_plugin_limit)?;
    d.set_item("cpv_empirical", r.cpv_empirical)?;
    d.set_item("t", r.t)?;
    Ok(d)
}

#[pymodule]
fn pyequicorr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMpLaw>()?;
    m.add_class::<PySpectrum>()?;
    m.add_function(wrap_pyfunction!(gk_limit, m)?)?;
    m.add_function(wrap_pyfunction!(cpv_limit, m)?)?;
    m.add_function(wrap_pyfunction!(gk_saturation_index, m)?)?;
    m.add_function(wrap_pyfunction!(kolmogorov_distance, m)?)?;
    m.add_function(wrap_pyfunction!(levy_distance, m)?)?;
    m.add_function(wrap_pyfunction!(kolmogorov_to_mp, m)?)?;
    m.add_function(wrap_pyfunction!(sample_enp, m)?)?;
    m.add_function(wrap_pyfunction!(correlation_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(covariance_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(centered_covariance_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(rho_hat, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_csv, m)?)?;
    Ok(())
}
