use nalgebra::{Cholesky, DMatrix, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::NormalizedPoint;

/// Isotropic squared-exponential kernel settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelConfig {
    /// Prior variance s² of the latent utility.
    pub signal_variance: f64,
    /// Lengthscale ℓ in normalized units.
    pub lengthscale: f64,
    /// Diagonal jitter ε added to every gram matrix.
    pub gram_jitter: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { signal_variance: 1.0, lengthscale: 0.25, gram_jitter: 1e-6 }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.signal_variance.is_finite() && self.signal_variance > 0.0) {
            return Err(Error::InvalidConfig("kernel.signal_variance must be > 0".into()));
        }
        if !(self.lengthscale.is_finite() && self.lengthscale > 0.0) {
            return Err(Error::InvalidConfig("kernel.lengthscale must be > 0".into()));
        }
        if !(self.gram_jitter.is_finite() && self.gram_jitter >= 0.0) {
            return Err(Error::InvalidConfig("kernel.gram_jitter must be >= 0".into()));
        }
        Ok(())
    }
}

/// k(x, x') = s² exp(−‖x − x'‖² / 2ℓ²)
pub fn kernel(x: &NormalizedPoint, y: &NormalizedPoint, cfg: &KernelConfig) -> f64 {
    let d2 = x.squared_distance(y);
    cfg.signal_variance * (-d2 / (2.0 * cfg.lengthscale * cfg.lengthscale)).exp()
}

/// Cross-covariance matrix between two point lists, without jitter.
pub fn cross_covariance(rows: &[NormalizedPoint], cols: &[NormalizedPoint], cfg: &KernelConfig) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| kernel(&rows[i], &cols[j], cfg))
}

/// Gram matrix with ε on the diagonal.
pub fn gram(points: &[NormalizedPoint], cfg: &KernelConfig) -> DMatrix<f64> {
    let mut k = cross_covariance(points, points, cfg);
    for i in 0..points.len() {
        k[(i, i)] += cfg.gram_jitter;
    }
    k
}

/// Gram matrix together with its Cholesky factor.
pub fn factor_gram(points: &[NormalizedPoint], cfg: &KernelConfig) -> Result<(DMatrix<f64>, Cholesky<f64, Dyn>)> {
    let k = gram(points, cfg);
    let chol = Cholesky::new(k.clone()).ok_or(Error::IllConditioned { jitter: cfg.gram_jitter })?;
    Ok((k, chol))
}
