//! Sampling from an equi-correlated normal population and the Monte Carlo
//! sweeps behind the retention figures.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`. Each
//! independent unit of work (one matrix draw) gets its own ChaCha stream,
//! so results do not depend on how work is scheduled across threads.
//! Standard normals use the Marsaglia polar method; within a column the
//! shared factor `eta_j` is drawn first, then `xi_{1j}, ..., xi_{pj}`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, DataMatrix, Provenance};
use crate::mp_dist::LimitParams;
use crate::spectral::Spectrum;

/// Source of standard normal variates (Marsaglia polar method over
/// ChaCha8 uniforms).
pub struct NormalStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        NormalStream { rng, spare: None }
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.rng.random::<f64>() - 1.0;
            let v = 2.0 * self.rng.random::<f64>() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * f);
                return u * f;
            }
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream id for one replication of one sweep cell, derived from the cell's
/// coordinates rather than its position in the sweep.
pub fn stream_id(p: usize, rho: f64, replication: usize) -> u64 {
    splitmix64(splitmix64(p as u64) ^ rho.to_bits()).wrapping_add(replication as u64)
}

/// An equi-correlated normal population `N_p(mu, D C(rho) D)` with an
/// overall scale `sigma`, and a sample size `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnpParams {
    pub p: usize,
    pub n: usize,
    pub rho: f64,
    pub sigma: f64,
    /// Row offsets; empty means zero.
    pub mu: Vec<f64>,
    /// Positive per-row scales; empty means one.
    pub d: Vec<f64>,
    pub seed: u64,
}

impl EnpParams {
    pub fn new(p: usize, n: usize, rho: f64, sigma: f64, seed: u64) -> Result<Self> {
        let params = EnpParams {
            p,
            n,
            rho,
            sigma,
            mu: Vec::new(),
            d: Vec::new(),
            seed,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_mu(mut self, mu: Vec<f64>) -> Result<Self> {
        self.mu = mu;
        self.validate()?;
        Ok(self)
    }

    pub fn with_d(mut self, d: Vec<f64>) -> Result<Self> {
        self.d = d;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.p < 1 {
            return bad("p must be at least 1".into());
        }
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [0, 1), got {}", self.rho));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !self.mu.is_empty()
            && (self.mu.len() != self.p || self.mu.iter().any(|v| !v.is_finite()))
        {
            return bad(format!("mu must have {} finite entries", self.p));
        }
        if !self.d.is_empty()
            && (self.d.len() != self.p || self.d.iter().any(|v| !(*v > 0.0 && v.is_finite())))
        {
            return bad(format!("d must have {} positive entries", self.p));
        }
        Ok(())
    }
}

/// Draws the `p x n` data matrix for `params` on ChaCha stream 0.
pub fn sample_enp(params: &EnpParams) -> Result<DataMatrix> {
    sample_enp_stream(params, 0)
}

/// Draws the data matrix on an explicit ChaCha stream. Column `j` is
/// `sigma sqrt(rho) eta_j 1 + sigma sqrt(1 - rho) xi_j`, then row `i` is
/// scaled by `d_i` and shifted by `mu_i`.
pub fn sample_enp_stream(params: &EnpParams, stream: u64) -> Result<DataMatrix> {
    params.validate()?;
    let (p, n) = (params.p, params.n);
    let shared = params.sigma * params.rho.sqrt();
    let own = params.sigma * (1.0 - params.rho).sqrt();
    let mut normals = NormalStream::new(params.seed, stream);
    let mut m = DMatrix::zeros(p, n);
    for j in 0..n {
        let eta = normals.next_normal();
        for i in 0..p {
            let xi = normals.next_normal();
            let mut v = shared * eta + own * xi;
            if !params.d.is_empty() {
                v *= params.d[i];
            }
            if !params.mu.is_empty() {
                v += params.mu[i];
            }
            m[(i, j)] = v;
        }
    }
    DataMatrix::new(m, Provenance::Simulated { seed: params.seed })
}

/// `lambda_1(R) / p`, the plug-in estimate of the equi-correlation.
pub fn rho_hat(r: &DMatrix<f64>) -> Result<f64> {
    let spectrum = linalg::symmetric_eigenvalues(r)?;
    Ok(rho_hat_from_spectrum(&spectrum))
}

pub fn rho_hat_from_spectrum(spectrum: &Spectrum) -> f64 {
    spectrum.largest() / spectrum.p() as f64
}

/// A grid of Monte Carlo cells at a fixed sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub n: usize,
    pub p_values: Vec<usize>,
    pub rhos: Vec<f64>,
    pub t: Option<f64>,
    pub replications: usize,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p_values.is_empty() || self.rhos.is_empty() {
            return Err(Error::InvalidParameter(
                "sweep needs at least one p and one rho".into(),
            ));
        }
        if self.replications < 1 {
            return Err(Error::InvalidParameter(
                "sweep needs at least one replication".into(),
            ));
        }
        if self.n < 2 || self.p_values.contains(&0) {
            return Err(Error::InvalidParameter(
                "sweep needs n >= 2 and every p >= 1".into(),
            ));
        }
        if let Some(bad) = self.rhos.iter().find(|r| !(0.0..1.0).contains(*r)) {
            return Err(Error::InvalidParameter(format!(
                "rho must lie in [0, 1), got {bad}"
            )));
        }
        if let Some(t) = self.t {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "threshold t must lie in (0, 1), got {t}"
                )));
            }
        }
        Ok(())
    }

    /// Cells in canonical order: ascending `p` (hence `c`), then `rho`.
    fn cells(&self) -> Vec<(usize, f64)> {
        let mut ps = self.p_values.clone();
        ps.sort_unstable();
        ps.dedup();
        let mut rhos = self.rhos.clone();
        rhos.sort_by(f64::total_cmp);
        rhos.dedup();
        ps.iter()
            .flat_map(|&p| rhos.iter().map(move |&r| (p, r)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GkRow {
    pub c: f64,
    pub p: usize,
    pub n: usize,
    pub rho: f64,
    pub gk_mean: f64,
    pub gk_stderr: f64,
    pub gk_limit: f64,
    /// Mean of `p GK^R / min(n, p)`.
    pub normalized_retention: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpvRow {
    pub c: f64,
    pub p: usize,
    pub n: usize,
    pub rho: f64,
    pub t: f64,
    pub cpv_mean: f64,
    pub cpv_stderr: f64,
    pub cpv_limit: f64,
    pub error: Option<String>,
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Replication values of one `(p, rho)` cell, or the first error hit.
type CellResult = ((usize, f64), Result<Vec<f64>>);

/// Runs one statistic over every (cell, replication) pair in parallel and
/// returns, per cell in canonical order, either the replication values or
/// the first error hit.
fn run_cells<F>(spec: &SweepSpec, stat: F) -> Vec<CellResult>
where
    F: Fn(&DataMatrix) -> Result<f64> + Sync,
{
    let cells = spec.cells();
    let units: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|ci| (0..spec.replications).map(move |r| (ci, r)))
        .collect();
    let results: Vec<Result<f64>> = units
        .par_iter()
        .map(|&(ci, rep)| {
            let (p, rho) = cells[ci];
            let params = EnpParams::new(p, spec.n, rho, 1.0, spec.seed)?;
            let x = sample_enp_stream(&params, stream_id(p, rho, rep))?;
            stat(&x)
        })
        .collect();
    let mut per_cell = results.into_iter();
    cells
        .into_iter()
        .map(|cell| {
            let reps: Result<Vec<f64>> = per_cell.by_ref().take(spec.replications).collect();
            let reps = reps.map_err(|e| e.context(format!("cell p={} rho={}", cell.0, cell.1)));
            (cell, reps)
        })
        .collect()
}

/// Guttman-Kaiser retention of the sample correlation matrix over a grid,
/// next to its limit `GK_{c, rho}`.
pub fn run_gk_sweep(spec: &SweepSpec) -> Result<Vec<GkRow>> {
    spec.validate()?;
    let n = spec.n;
    let cells = run_cells(spec, |x| Ok(linalg::correlation_spectrum(x)?.gk_fraction()));
    Ok(cells
        .into_iter()
        .map(|((p, rho), reps)| {
            let c = p as f64 / n as f64;
            let limit = LimitParams::new(c, rho).map(|l| l.gk()).unwrap_or(f64::NAN);
            match reps {
                Ok(vals) => {
                    let (gk_mean, gk_stderr) = mean_and_stderr(&vals);
                    let scale = p as f64 / p.min(n) as f64;
                    let norm: Vec<f64> = vals.iter().map(|v| v * scale).collect();
                    GkRow {
                        c,
                        p,
                        n,
                        rho,
                        gk_mean,
                        gk_stderr,
                        gk_limit: limit,
                        normalized_retention: mean_and_stderr(&norm).0,
                        error: None,
                    }
                }
                Err(e) => GkRow {
                    c,
                    p,
                    n,
                    rho,
                    gk_mean: f64::NAN,
                    gk_stderr: f64::NAN,
                    gk_limit: limit,
                    normalized_retention: f64::NAN,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}

/// CPV retention of the centered sample covariance matrix over a grid, next
/// to its limit `CP_{c, rho}(t)` (zero whenever `t < rho`).
pub fn run_cpv_sweep(spec: &SweepSpec) -> Result<Vec<CpvRow>> {
    spec.validate()?;
    let t = spec
        .t
        .ok_or_else(|| Error::InvalidParameter("CPV sweep needs a threshold t".into()))?;
    let n = spec.n;
    let cells = run_cells(spec, |x| {
        linalg::centered_covariance_spectrum(x)?.cpv_fraction(t)
    });
    let mut rows = Vec::new();
    for ((p, rho), reps) in cells {
        let c = p as f64 / n as f64;
        let limit = LimitParams::new(c, rho)?.with_t(t)?.cpv()?;
        let row = match reps {
            Ok(vals) => {
                let (cpv_mean, cpv_stderr) = mean_and_stderr(&vals);
                CpvRow {
                    c,
                    p,
                    n,
                    rho,
                    t,
                    cpv_mean,
                    cpv_stderr,
                    cpv_limit: limit,
                    error: None,
                }
            }
            Err(e) => CpvRow {
                c,
                p,
                n,
                rho,
                t,
                cpv_mean: f64::NAN,
                cpv_stderr: f64::NAN,
                cpv_limit: limit,
                error: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    Ok(rows)
}
