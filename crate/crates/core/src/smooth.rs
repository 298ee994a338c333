//! Evaluation of a selected model: smooth CDF and density, bounded isotonic
//! correction, pointwise beta-quantile bands and mode detection.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::sample::Sample;
use crate::select::SelectedModel;
use crate::specfun::beta_quantile;

pub const MIN_GRID_SIZE: usize = 512;
/// Fraction of the sample range added on each side of a padded grid.
pub const GRID_PAD: f64 = 0.05;
const GOLDEN_REL_TOL: f64 = 1e-8;

/// Strictly increasing evaluation points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationGrid {
    points: Vec<f64>,
}

impl EvaluationGrid {
    /// `size` equally spaced points over `[min - pad, max + pad]`, pad = 5% of the range.
    pub fn padded(sample: &Sample, size: usize) -> Result<Self> {
        if size < MIN_GRID_SIZE {
            return Err(domain("EvaluationGrid", format!("grid size {size} below {MIN_GRID_SIZE}")));
        }
        let range = sample.range();
        if !(range > 0.0) {
            return Err(Error::ZeroSpread);
        }
        let lo = sample.min() - GRID_PAD * range;
        let hi = sample.max() + GRID_PAD * range;
        Ok(Self::linspace(lo, hi, size))
    }

    pub fn linspace(lo: f64, hi: f64, size: usize) -> Self {
        let step = (hi - lo) / (size - 1) as f64;
        let mut points: Vec<f64> = (0..size).map(|i| lo + step * i as f64).collect();
        points[size - 1] = hi;
        Self { points }
    }

    /// Arbitrary strictly increasing points, e.g. the distinct sample values.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(domain("EvaluationGrid", "points must be strictly increasing"));
        }
        Ok(Self { points })
    }

    /// The distinct values of a sample.
    pub fn sample_points(sample: &Sample) -> Self {
        let mut points = sample.values().to_vec();
        points.dedup();
        Self { points }
    }

    /// Same span with `factor` times as many intervals.
    pub fn refined(&self, factor: usize) -> Self {
        let n = self.points.len();
        let mut points = Vec::with_capacity((n - 1) * factor + 1);
        for w in self.points.windows(2) {
            for j in 0..factor {
                points.push(w[0] + (w[1] - w[0]) * j as f64 / factor as f64);
            }
        }
        points.push(self.points[n - 1]);
        Self { points }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Smooth distribution function g⁻¹(η̂(x)).
pub fn cdf_eval(model: &SelectedModel, x: f64) -> f64 {
    model.link.inverse(model.eta(x))
}

/// Smooth density η̂'(x) · (g⁻¹)'(η̂(x)).
///
/// Clamped at zero, which only bites where η̂' lies inside the −1e−9
/// feasibility tolerance.
pub fn pdf_eval(model: &SelectedModel, x: f64) -> f64 {
    let (eta, deta) = model.eta_and_derivative(x);
    (deta * model.link.inverse_derivative(eta)).max(0.0)
}

/// Weighted least-squares projection of `values` onto nondecreasing vectors
/// with entries in `[lower, upper]`.
///
/// Pool-adjacent-violators followed by clipping; for constant bounds the
/// clipped isotonic fit is the bounded solution.
pub fn isotonize(values: &[f64], weights: &[f64], lower: f64, upper: f64) -> Result<Vec<f64>> {
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            left: values.len(),
            right: weights.len(),
        });
    }
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(domain("isotonize", "weights must be positive"));
    }
    if !(lower <= upper) {
        return Err(domain("isotonize", format!("bounds [{lower}, {upper}] out of order")));
    }
    // Blocks as (mean, weight, length).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let (m2, w2, l2) = blocks[blocks.len() - 1];
            let (m1, w1, l1) = blocks[blocks.len() - 2];
            if m1 > m2 {
                blocks.pop();
                let w = w1 + w2;
                *blocks.last_mut().expect("two blocks") = ((m1 * w1 + m2 * w2) / w, w, l1 + l2);
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (m, _, len) in blocks {
        let v = m.clamp(lower, upper);
        out.extend(std::iter::repeat_n(v, len));
    }
    Ok(out)
}

/// Pointwise confidence band around the smooth CDF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandResult {
    pub grid: EvaluationGrid,
    /// Isotonized smooth CDF.
    pub cdf: Vec<f64>,
    pub pdf: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub alpha_family: f64,
    pub alpha_per_test: f64,
}

/// Bonferroni per-test level α/n.
pub fn alpha_per_test(alpha_family: f64, n: usize) -> f64 {
    alpha_family / n as f64
}

/// Evaluates the CDF and density on `grid`, isotonizes the CDF, and brackets
/// each point with beta quantiles at α/n and 1 − α/n (n = sample size) using
/// shapes (μφ, (1 − μ)φ).
pub fn pointwise_band(model: &SelectedModel, grid: &EvaluationGrid, alpha_family: f64) -> Result<BandResult> {
    if !(alpha_family > 0.0 && alpha_family < 1.0) {
        return Err(domain("pointwise_band", format!("alpha = {alpha_family} outside (0, 1)")));
    }
    let raw: Vec<f64> = grid.points().iter().map(|&x| cdf_eval(model, x)).collect();
    let pdf: Vec<f64> = grid.points().iter().map(|&x| pdf_eval(model, x)).collect();
    let w = vec![1.0 / grid.len() as f64; grid.len()];
    let cdf = isotonize(&raw, &w, 0.0, 1.0)?;
    let a = alpha_per_test(alpha_family, model.n);
    let phi = model.fit.phi;
    let mut lower = Vec::with_capacity(cdf.len());
    let mut upper = Vec::with_capacity(cdf.len());
    for &mu in &cdf {
        let (lo, hi) = beta_limits(mu, phi, a)?;
        lower.push(lo.min(mu));
        upper.push(hi.max(mu));
    }
    Ok(BandResult {
        grid: grid.clone(),
        cdf,
        pdf,
        lower,
        upper,
        alpha_family,
        alpha_per_test: a,
    })
}

/// (α-quantile, (1−α)-quantile) of Beta(μφ, (1−μ)φ). A mean on the boundary
/// gives a degenerate interval.
pub fn beta_limits(mu: f64, phi: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(mu > 0.0 && mu < 1.0) {
        return Ok((mu, mu));
    }
    let p = mu * phi;
    let q = (1.0 - mu) * phi;
    Ok((beta_quantile(alpha, p, q)?, beta_quantile(1.0 - alpha, p, q)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    #[serde(rename = "global")]
    pub global_mode: f64,
    #[serde(rename = "locals")]
    pub local_modes: Vec<f64>,
    /// Density at the global mode, then at each local mode in order.
    #[serde(rename = "densities")]
    pub density_at_modes: Vec<f64>,
    /// No interior peak: the density is monotone over the grid and
    /// `global_mode` is the endpoint with the larger density.
    pub no_modes: bool,
}

impl ModeReport {
    /// Global mode followed by the local ones.
    pub fn all_modes(&self) -> Vec<f64> {
        let mut v = vec![self.global_mode];
        v.extend(&self.local_modes);
        v
    }

    pub fn count(&self) -> usize {
        if self.no_modes {
            0
        } else {
            1 + self.local_modes.len()
        }
    }
}

/// Locates density peaks: grid points where the forward difference of the
/// density turns from positive to negative, each refined by golden-section
/// search over its bracketing interval.
pub fn find_modes(model: &SelectedModel, grid: &EvaluationGrid) -> ModeReport {
    let pdf = |x: f64| pdf_eval(model, x);
    find_modes_of(pdf, grid.points())
}

/// [`find_modes`] for an arbitrary density function.
pub fn find_modes_of<F: Fn(f64) -> f64>(pdf: F, grid: &[f64]) -> ModeReport {
    let values: Vec<f64> = grid.iter().map(|&x| pdf(x)).collect();
    let mut peaks = Vec::new();
    // Start of the most recent rising step, while no falling step has followed it.
    let mut rise_start: Option<usize> = None;
    for j in 0..values.len() - 1 {
        let d = values[j + 1] - values[j];
        if d > 0.0 {
            rise_start = Some(j);
        } else if d < 0.0 {
            if let Some(start) = rise_start.take() {
                peaks.push(golden_max(&pdf, grid[start], grid[j + 1]));
            }
        }
    }
    if peaks.is_empty() {
        let (first, last) = (values[0], values[values.len() - 1]);
        let (x, f) = if last >= first {
            (grid[grid.len() - 1], last)
        } else {
            (grid[0], first)
        };
        return ModeReport {
            global_mode: x,
            local_modes: Vec::new(),
            density_at_modes: vec![f],
            no_modes: true,
        };
    }
    let densities: Vec<f64> = peaks.iter().map(|&x| pdf(x)).collect();
    let g = densities
        .iter()
        .enumerate()
        .fold(0, |best, (i, &d)| if d > densities[best] { i } else { best });
    let mut local_modes = Vec::new();
    let mut density_at_modes = vec![densities[g]];
    for (i, (&x, &d)) in peaks.iter().zip(&densities).enumerate() {
        if i != g {
            local_modes.push(x);
            density_at_modes.push(d);
        }
    }
    ModeReport {
        global_mode: peaks[g],
        local_modes,
        density_at_modes,
        no_modes: false,
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let tol = GOLDEN_REL_TOL * (b - a);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
