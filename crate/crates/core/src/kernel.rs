//! Gaussian kernel estimators of the density and distribution function, the
//! comparison baseline.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::sample::Sample;
use crate::specfun::{std_normal_cdf, std_normal_pdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Pdf,
    Cdf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEstimate {
    pub bandwidth: f64,
    pub kind: KernelKind,
}

/// Rule-of-thumb bandwidth 0.9 · min(sd, IQR/1.34) · n^(−1/5).
pub fn bandwidth_nrd0(sample: &Sample) -> Result<f64> {
    let (_, sd) = sample.mean_sd();
    let iqr = sample.quantile(0.75) - sample.quantile(0.25);
    nrd0_from_stats(sd, iqr, sample.len())
}

/// [`bandwidth_nrd0`] from precomputed summary statistics. A zero IQR falls
/// back to the standard deviation alone.
pub fn nrd0_from_stats(sd: f64, iqr: f64, n: usize) -> Result<f64> {
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if !(spread > 0.0) {
        return Err(Error::ZeroSpread);
    }
    Ok(0.9 * spread * (n as f64).powf(-0.2))
}

fn check_bandwidth(h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(domain("kernel estimate", format!("bandwidth {h} must be positive")));
    }
    Ok(())
}

/// (1/nh) Σ φ((x − x_i)/h)
pub fn kde_pdf(sample: &Sample, h: f64, x: f64) -> Result<f64> {
    check_bandwidth(h)?;
    let n = sample.len() as f64;
    Ok(sample.values().iter().map(|&xi| std_normal_pdf((x - xi) / h)).sum::<f64>() / (n * h))
}

/// (1/n) Σ Φ((x − x_i)/h)
pub fn kde_cdf(sample: &Sample, h: f64, x: f64) -> Result<f64> {
    check_bandwidth(h)?;
    let n = sample.len() as f64;
    Ok(sample.values().iter().map(|&xi| std_normal_cdf((x - xi) / h)).sum::<f64>() / n)
}
