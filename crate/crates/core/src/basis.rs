//! Design matrices for the linear predictor: standardized polynomials and
//! cubic B-splines, each with exact derivative columns.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::Sample;

pub const POLY_DEGREE_RANGE: (usize, usize) = (2, 7);
pub const SPLINE_DIM_RANGE: (usize, usize) = (2, 12);
const SPLINE_MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisKind {
    #[serde(rename = "poly", alias = "polynomial")]
    Polynomial,
    #[serde(rename = "spline", alias = "bspline")]
    BSpline,
}

impl BasisKind {
    /// Inclusive dimension search range for this basis.
    pub fn default_range(self) -> (usize, usize) {
        match self {
            BasisKind::Polynomial => POLY_DEGREE_RANGE,
            BasisKind::BSpline => SPLINE_DIM_RANGE,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BasisKind::Polynomial => "poly",
            BasisKind::BSpline => "spline",
        }
    }
}

impl std::fmt::Display for BasisKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BasisKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "poly" | "polynomial" => Ok(BasisKind::Polynomial),
            "spline" | "bspline" => Ok(BasisKind::BSpline),
            other => Err(format!("unknown basis {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub center: f64,
    pub scale: f64,
}

impl Standardization {
    pub const IDENTITY: Standardization = Standardization {
        center: 0.0,
        scale: 1.0,
    };

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        (x - self.center) / self.scale
    }
}

/// Mean and sample standard deviation of the data.
pub fn standardize(sample: &Sample) -> Result<Standardization> {
    let (center, scale) = sample.mean_sd();
    if !(scale > 0.0) {
        return Err(Error::ZeroSpread);
    }
    Ok(Standardization { center, scale })
}

/// Everything needed to rebuild a design row at an arbitrary `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub kind: BasisKind,
    /// Polynomial degree m, or number of spline columns k (intercept excluded).
    pub dimension: usize,
    /// Polynomial columns are powers of `(x - center) / scale`; splines are
    /// built on the raw scale and only record it.
    pub standardization: Standardization,
    /// Full clamped knot vector (spline only).
    pub knots: Vec<f64>,
    /// B-spline order (degree + 1); zero for polynomials.
    pub order: usize,
}

impl BasisSpec {
    pub fn polynomial(degree: usize, standardization: Standardization) -> Result<Self> {
        if !(POLY_DEGREE_RANGE.0..=POLY_DEGREE_RANGE.1).contains(&degree) {
            return Err(Error::DegreeOutOfRange(degree));
        }
        Ok(Self {
            kind: BasisKind::Polynomial,
            dimension: degree,
            standardization,
            knots: Vec::new(),
            order: 0,
        })
    }

    /// Spline basis of `k + 1` B-splines on equally spaced knots over
    /// `[lower, upper]`. The first B-spline is dropped so that the intercept
    /// column keeps the design full rank.
    pub fn bspline(k: usize, lower: f64, upper: f64, standardization: Standardization) -> Result<Self> {
        if !(SPLINE_DIM_RANGE.0..=SPLINE_DIM_RANGE.1).contains(&k) {
            return Err(Error::DimensionOutOfRange(k));
        }
        if !(upper > lower) {
            return Err(Error::ZeroSpread);
        }
        let n_basis = k + 1;
        let order = SPLINE_MAX_ORDER.min(n_basis);
        let degree = order - 1;
        let interior = n_basis - order;
        let mut knots = Vec::with_capacity(n_basis + order);
        knots.extend(std::iter::repeat_n(lower, degree + 1));
        for j in 1..=interior {
            knots.push(lower + (upper - lower) * j as f64 / (interior + 1) as f64);
        }
        knots.extend(std::iter::repeat_n(upper, degree + 1));
        Ok(Self {
            kind: BasisKind::BSpline,
            dimension: k,
            standardization,
            knots,
            order,
        })
    }

    /// Number of design columns including the intercept.
    pub fn ncols(&self) -> usize {
        self.dimension + 1
    }

    /// Fills `values` and `derivs` (length [`Self::ncols`]) with the design
    /// row at `x` and its derivative with respect to `x`.
    pub fn fill_row(&self, x: f64, values: &mut [f64], derivs: &mut [f64]) {
        debug_assert_eq!(values.len(), self.ncols());
        debug_assert_eq!(derivs.len(), self.ncols());
        values[0] = 1.0;
        derivs[0] = 0.0;
        match self.kind {
            BasisKind::Polynomial => {
                let s = self.standardization;
                let z = s.apply(x);
                let mut power = 1.0; // z^(j-1)
                for j in 1..=self.dimension {
                    derivs[j] = j as f64 * power / s.scale;
                    power *= z;
                    values[j] = power;
                }
            }
            BasisKind::BSpline => {
                let (full, full_d) = self.full_spline_row(x);
                values[1..].copy_from_slice(&full[1..]);
                derivs[1..].copy_from_slice(&full_d[1..]);
            }
        }
    }

    pub fn row(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        let mut v = vec![0.0; self.ncols()];
        let mut d = vec![0.0; self.ncols()];
        self.fill_row(x, &mut v, &mut d);
        (v, d)
    }

    /// All `k + 1` B-spline values and first derivatives at `x`. Outside the
    /// knot range the end polynomial pieces are continued.
    pub fn full_spline_row(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        assert_eq!(self.kind, BasisKind::BSpline);
        let n_basis = self.dimension + 1;
        let degree = self.order - 1;
        let span = find_span(&self.knots, degree, n_basis, x);
        let mut values = vec![0.0; n_basis];
        let mut derivs = vec![0.0; n_basis];
        let top = basis_funs(&self.knots, span, degree, x);
        for (r, v) in top.iter().enumerate() {
            values[span - degree + r] = *v;
        }
        if degree > 0 {
            // lower[r] is N_{span-degree+1+r, degree-1}
            let lower = basis_funs(&self.knots, span, degree - 1, x);
            let d = degree as f64;
            for r in 0..=degree {
                let j = span - degree + r;
                let left = if r >= 1 {
                    let den = self.knots[j + degree] - self.knots[j];
                    if den > 0.0 { lower[r - 1] / den } else { 0.0 }
                } else {
                    0.0
                };
                let right = if r < degree {
                    let den = self.knots[j + degree + 1] - self.knots[j + 1];
                    if den > 0.0 { lower[r] / den } else { 0.0 }
                } else {
                    0.0
                };
                derivs[j] = d * (left - right);
            }
        }
        (values, derivs)
    }

    /// Linear predictor η(x) = row(x)ᵀβ.
    pub fn eta(&self, beta: &[f64], x: f64) -> f64 {
        self.eta_and_derivative(beta, x).0
    }

    /// (η(x), dη/dx).
    pub fn eta_and_derivative(&self, beta: &[f64], x: f64) -> (f64, f64) {
        let (v, d) = self.row(x);
        let eta = v.iter().zip(beta).map(|(a, b)| a * b).sum();
        let deta = d.iter().zip(beta).map(|(a, b)| a * b).sum();
        (eta, deta)
    }

    pub fn design(&self, xs: &[f64]) -> DesignMatrix {
        let cols = self.ncols();
        let mut entries = DMatrix::zeros(xs.len(), cols);
        let mut derivative_entries = DMatrix::zeros(xs.len(), cols);
        let mut v = vec![0.0; cols];
        let mut d = vec![0.0; cols];
        for (i, &x) in xs.iter().enumerate() {
            self.fill_row(x, &mut v, &mut d);
            for j in 0..cols {
                entries[(i, j)] = v[j];
                derivative_entries[(i, j)] = d[j];
            }
        }
        DesignMatrix {
            entries,
            derivative_entries,
        }
    }
}

// Span index s with knots[s] <= x < knots[s+1], clamped to the valid range
// so that points outside the knot range use the end pieces.
fn find_span(knots: &[f64], degree: usize, n_basis: usize, x: f64) -> usize {
    let last = n_basis - 1;
    if x >= knots[last + 1] {
        return last;
    }
    if x <= knots[degree] {
        return degree;
    }
    let (mut lo, mut hi) = (degree, last + 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if x < knots[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

// Nonzero basis functions N_{span-p..span, p}(x) by the triangular recurrence.
fn basis_funs(knots: &[f64], span: usize, p: usize, x: f64) -> Vec<f64> {
    let mut n = vec![0.0; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    n[0] = 1.0;
    for j in 1..=p {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let den = right[r + 1] + left[j - r];
            let temp = if den != 0.0 { n[r] / den } else { 0.0 };
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    n
}

/// Design values and their x-derivatives, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub entries: DMatrix<f64>,
    pub derivative_entries: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }
}

/// Polynomial design of degree `m` on standardized data.
pub fn polynomial_design(sample: &Sample, m: usize) -> Result<(DesignMatrix, BasisSpec)> {
    let spec = BasisSpec::polynomial(m, standardize(sample)?)?;
    Ok((spec.design(sample.values()), spec))
}

/// Cubic B-spline design with `k` spline columns plus an intercept.
pub fn bspline_design(sample: &Sample, k: usize) -> Result<(DesignMatrix, BasisSpec)> {
    if !(SPLINE_DIM_RANGE.0..=SPLINE_DIM_RANGE.1).contains(&k) {
        return Err(Error::DimensionOutOfRange(k));
    }
    if sample.len() < k + 2 {
        return Err(Error::InsufficientData {
            n: sample.len(),
            required: k + 2,
        });
    }
    let spec = BasisSpec::bspline(k, sample.min(), sample.max(), standardize(sample)?)?;
    Ok((spec.design(sample.values()), spec))
}

/// Builds the design for either basis kind.
pub fn build_design(sample: &Sample, kind: BasisKind, dimension: usize) -> Result<(DesignMatrix, BasisSpec)> {
    match kind {
        BasisKind::Polynomial => polynomial_design(sample, dimension),
        BasisKind::BSpline => bspline_design(sample, dimension),
    }
}
