//! Random-matrix limits for principal component stopping rules.
//!
//! The crate evaluates the Marchenko-Pastur family exactly, computes
//! empirical spectral quantities (Guttman-Kaiser and cumulative percentage
//! of variation retention, Levy and Kolmogorov distances), samples
//! equi-correlated normal populations, and runs Monte Carlo sweeps and a
//! dataset analysis pipeline on top of those pieces.

pub mod cli;
pub mod data_io;
pub mod enp_sim;
pub mod error;
pub mod extended;
pub mod linalg;
pub mod mp_dist;
pub mod spectral;

pub use error::{Error, Result};
pub use extended::ExtReal;
pub use linalg::DataMatrix;
pub use mp_dist::{cpv_limit, gk_limit, LimitParams, MpLaw};
pub use spectral::{Spectrum, StepDistribution};
