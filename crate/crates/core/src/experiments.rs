//! Seeded mixture generators and the comparison harness.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisKind;
use crate::error::{Error, Result};
use crate::kernel::{bandwidth_nrd0, kde_cdf, kde_pdf};
use crate::links::LinkFunction;
use crate::sample::Sample;
use crate::select::{build_response, select_with, SelectOptions, SelectedModel};
use crate::smooth::{cdf_eval, isotonize, pdf_eval, pointwise_band, EvaluationGrid};
use crate::specfun::{std_normal_cdf, std_normal_pdf};

const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Points in the grid used for the error metrics.
pub const METRICS_GRID_SIZE: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Normal,
    Laplace,
}

/// One mixture component. For the normal family `scale` is the standard
/// deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub family: Family,
    pub location: f64,
    pub scale: f64,
}

impl Component {
    pub fn normal(weight: f64, mean: f64, sd: f64) -> Self {
        Self { weight, family: Family::Normal, location: mean, scale: sd }
    }

    pub fn laplace(weight: f64, location: f64, scale: f64) -> Self {
        Self { weight, family: Family::Laplace, location, scale }
    }

    fn cdf(&self, x: f64) -> f64 {
        let z = (x - self.location) / self.scale;
        match self.family {
            Family::Normal => std_normal_cdf(z),
            Family::Laplace if z < 0.0 => 0.5 * z.exp(),
            Family::Laplace => 1.0 - 0.5 * (-z).exp(),
        }
    }

    fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.location) / self.scale;
        match self.family {
            Family::Normal => std_normal_pdf(z) / self.scale,
            Family::Laplace => 0.5 * (-z.abs()).exp() / self.scale,
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self.family {
            Family::Normal => {
                // Box–Muller, cosine branch. 1 - u lies in (0, 1].
                let u1 = 1.0 - rng.random::<f64>();
                let u2 = rng.random::<f64>();
                let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                self.location + self.scale * z
            }
            Family::Laplace => {
                let u = rng.random::<f64>() - 0.5;
                // 1 - 2|u| lies in (0, 1].
                self.location - self.scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub components: Vec<Component>,
}

impl MixtureSpec {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        let spec = Self { components };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::BadSpec("mixture has no components".into()));
        }
        for (i, c) in self.components.iter().enumerate() {
            if !(c.weight > 0.0) || !c.weight.is_finite() {
                return Err(Error::BadSpec(format!("component {i}: weight {} must be positive", c.weight)));
            }
            if !(c.scale > 0.0) || !c.scale.is_finite() {
                return Err(Error::BadSpec(format!("component {i}: scale {} must be positive", c.scale)));
            }
            if !c.location.is_finite() {
                return Err(Error::BadSpec(format!("component {i}: location must be finite")));
            }
        }
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::BadSpec(format!("weights sum to {total}, not 1")));
        }
        Ok(())
    }

    fn choose(&self, u: f64) -> &Component {
        let mut acc = 0.0;
        for c in &self.components {
            acc += c.weight;
            if u < acc {
                return c;
            }
        }
        self.components.last().expect("validated spec is nonempty")
    }
}

/// `n` draws; the component is picked by inverse CDF on the weights.
pub fn sample_mixture(spec: &MixtureSpec, n: usize, seed: u64) -> Result<Sample> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n)
        .map(|_| {
            let u = rng.random::<f64>();
            spec.choose(u).draw(&mut rng)
        })
        .collect();
    Sample::new(values)
}

pub fn true_cdf(spec: &MixtureSpec, x: f64) -> f64 {
    spec.components.iter().map(|c| c.weight * c.cdf(x)).sum()
}

pub fn true_pdf(spec: &MixtureSpec, x: f64) -> f64 {
    spec.components.iter().map(|c| c.weight * c.pdf(x)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    /// Laplace(0, 1).
    Fig1,
    /// 1/3 N(−1, 1) + 2/3 N(1, 0.3).
    Study1,
    /// 1/3 N(−1, 0.25) + 1/3 N(0, 0.25) + 1/3 N(2, 0.3).
    Study2,
}

impl Study {
    pub const ALL: [Study; 3] = [Study::Fig1, Study::Study1, Study::Study2];

    pub fn name(self) -> &'static str {
        match self {
            Study::Fig1 => "fig1",
            Study::Study1 => "study1",
            Study::Study2 => "study2",
        }
    }

    pub fn spec(self) -> MixtureSpec {
        let third = 1.0 / 3.0;
        let components = match self {
            Study::Fig1 => vec![Component::laplace(1.0, 0.0, 1.0)],
            Study::Study1 => vec![Component::normal(third, -1.0, 1.0), Component::normal(1.0 - third, 1.0, 0.3)],
            Study::Study2 => vec![
                Component::normal(third, -1.0, 0.25),
                Component::normal(third, 0.0, 0.25),
                Component::normal(1.0 - 2.0 * third, 2.0, 0.3),
            ],
        };
        MixtureSpec { components }
    }

    pub fn default_n(self) -> usize {
        match self {
            Study::Fig1 => 20,
            Study::Study1 | Study::Study2 => 100,
        }
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Study {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Study::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::BadSpec(format!("unknown study '{s}' (expected fig1, study1 or study2)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Betareg,
    Kernel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: Method,
    pub link: Option<LinkFunction>,
    pub basis: Option<BasisKind>,
    pub dimension: Option<usize>,
    pub err_r: Option<f64>,
    pub err_r_link: Option<f64>,
    /// Kernel bandwidth; `None` for regression rows.
    pub bandwidth: Option<f64>,
    pub sup_cdf_error: Option<f64>,
    pub integrated_abs_pdf_error: Option<f64>,
    pub band_coverage: Option<f64>,
    /// "ok", or the reason the cell produced no model.
    pub status: String,
}

impl ReportRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub study: Option<Study>,
    pub n: usize,
    pub seed: Option<u64>,
    pub alpha_family: f64,
    pub rows: Vec<ReportRow>,
}

const CSV_HEADER: &str =
    "method,link,basis,dimension,err_r,err_r_link,bandwidth,sup_cdf_error,integrated_abs_pdf_error,band_coverage,status";

/// Seventeen significant digits, enough to round-trip any f64.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

impl StudyReport {
    /// Successful regression row with the smallest errR.
    pub fn best_row(&self) -> Option<&ReportRow> {
        self.rows
            .iter()
            .filter(|r| r.method == Method::Betareg && r.is_ok())
            .filter_map(|r| r.err_r.map(|e| (e, r)))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, r)| r)
    }

    pub fn kernel_row(&self) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.method == Method::Kernel)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let fields = [
                match r.method {
                    Method::Betareg => "betareg".to_string(),
                    Method::Kernel => "kernel".to_string(),
                },
                r.link.map(|l| l.name().to_string()).unwrap_or_default(),
                r.basis.map(|b| b.name().to_string()).unwrap_or_default(),
                r.dimension.map(|d| d.to_string()).unwrap_or_default(),
                opt_num(r.err_r),
                opt_num(r.err_r_link),
                opt_num(r.bandwidth),
                opt_num(r.sup_cdf_error),
                opt_num(r.integrated_abs_pdf_error),
                opt_num(r.band_coverage),
                csv_quote(&r.status),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone)]
pub struct CompareOptions {
    pub links: Vec<LinkFunction>,
    pub bases: Vec<BasisKind>,
    /// Dimension range per basis; `None` uses the basis default.
    pub dims: Option<(usize, usize)>,
    pub alpha_family: f64,
    pub select: SelectOptions,
    pub kernel: bool,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            links: LinkFunction::ALL.to_vec(),
            bases: vec![BasisKind::Polynomial],
            dims: None,
            alpha_family: 0.05,
            select: SelectOptions::default(),
            kernel: true,
        }
    }
}

/// Draws the study sample and compares every (link, basis) cell and the
/// kernel baseline against the true distribution.
pub fn run_study(study: Study, n: usize, seed: u64, links: &[LinkFunction], bases: &[BasisKind]) -> Result<StudyReport> {
    let options = CompareOptions {
        links: links.to_vec(),
        bases: bases.to_vec(),
        ..CompareOptions::default()
    };
    run_study_with(study, n, seed, &options)
}

pub fn run_study_with(study: Study, n: usize, seed: u64, options: &CompareOptions) -> Result<StudyReport> {
    let spec = study.spec();
    let sample = sample_mixture(&spec, n, seed)?;
    let mut report = compare_sample(&sample, Some(&spec), options)?;
    report.study = Some(study);
    report.seed = Some(seed);
    Ok(report)
}

/// Paired comparison on one sample. Without a reference distribution only the
/// fit statistics are reported.
pub fn compare_sample(sample: &Sample, truth: Option<&MixtureSpec>, options: &CompareOptions) -> Result<StudyReport> {
    let grid = EvaluationGrid::padded(sample, METRICS_GRID_SIZE)?;
    let cells: Vec<(LinkFunction, BasisKind)> = options
        .bases
        .iter()
        .flat_map(|&b| options.links.iter().map(move |&l| (l, b)))
        .collect();
    let mut rows = cells
        .par_iter()
        .map(|&(link, kind)| regression_row(sample, truth, &grid, link, kind, options))
        .collect::<Result<Vec<_>>>()?;
    if options.kernel {
        rows.push(kernel_row(sample, truth, &grid, options)?);
    }
    Ok(StudyReport {
        study: None,
        n: sample.len(),
        seed: None,
        alpha_family: options.alpha_family,
        rows,
    })
}

fn regression_row(
    sample: &Sample,
    truth: Option<&MixtureSpec>,
    grid: &EvaluationGrid,
    link: LinkFunction,
    kind: BasisKind,
    options: &CompareOptions,
) -> Result<ReportRow> {
    let dims = options.dims.unwrap_or_else(|| kind.default_range());
    let mut row = ReportRow {
        method: Method::Betareg,
        link: Some(link),
        basis: Some(kind),
        dimension: None,
        err_r: None,
        err_r_link: None,
        bandwidth: None,
        sup_cdf_error: None,
        integrated_abs_pdf_error: None,
        band_coverage: None,
        status: "ok".into(),
    };
    let model = match select_with(sample, link, kind, dims, &options.select) {
        Ok(m) => m,
        Err(Error::NoFeasibleModel) => {
            row.status = "no_feasible_model".into();
            return Ok(row);
        }
        Err(e @ (Error::InsufficientData { .. } | Error::SingularDesign)) => {
            row.status = e.to_string();
            return Ok(row);
        }
        Err(e) => return Err(e),
    };
    row.dimension = Some(model.basis.dimension);
    row.err_r = Some(model.err_r);
    row.err_r_link = Some(model.err_r_link);
    if let Some(spec) = truth {
        let (cdf, pdf) = model_curves(&model, grid)?;
        row.sup_cdf_error = Some(sup_error(grid, &cdf, spec));
        row.integrated_abs_pdf_error = Some(integrated_pdf_error(grid, &pdf, spec));
        row.band_coverage = Some(band_coverage(&model, sample, spec, options.alpha_family)?);
    }
    Ok(row)
}

/// Isotonized CDF and density of a selected model on `grid`.
pub fn model_curves(model: &SelectedModel, grid: &EvaluationGrid) -> Result<(Vec<f64>, Vec<f64>)> {
    let raw: Vec<f64> = grid.points().iter().map(|&x| cdf_eval(model, x)).collect();
    let w = vec![1.0 / grid.len() as f64; grid.len()];
    let cdf = isotonize(&raw, &w, 0.0, 1.0)?;
    let pdf = grid.points().iter().map(|&x| pdf_eval(model, x)).collect();
    Ok((cdf, pdf))
}

fn kernel_row(sample: &Sample, truth: Option<&MixtureSpec>, grid: &EvaluationGrid, options: &CompareOptions) -> Result<ReportRow> {
    let h = bandwidth_nrd0(sample)?;
    // errR against the same response values the regressions were fitted to.
    let response = build_response(sample, &options.select)?;
    let mut abs_sum = 0.0;
    for (&x, &y) in response.x.iter().zip(&response.y) {
        abs_sum += (kde_cdf(sample, h, x)? - y).abs();
    }
    let mut row = ReportRow {
        method: Method::Kernel,
        link: None,
        basis: None,
        dimension: None,
        err_r: Some(abs_sum / response.x.len() as f64),
        err_r_link: None,
        bandwidth: Some(h),
        sup_cdf_error: None,
        integrated_abs_pdf_error: None,
        band_coverage: None,
        status: "ok".into(),
    };
    if let Some(spec) = truth {
        let cdf = grid.points().iter().map(|&x| kde_cdf(sample, h, x)).collect::<Result<Vec<_>>>()?;
        let pdf = grid.points().iter().map(|&x| kde_pdf(sample, h, x)).collect::<Result<Vec<_>>>()?;
        row.sup_cdf_error = Some(sup_error(grid, &cdf, spec));
        row.integrated_abs_pdf_error = Some(integrated_pdf_error(grid, &pdf, spec));
    }
    Ok(row)
}

pub fn sup_error(grid: &EvaluationGrid, cdf: &[f64], spec: &MixtureSpec) -> f64 {
    grid.points()
        .iter()
        .zip(cdf)
        .map(|(&x, &f)| (f - true_cdf(spec, x)).abs())
        .fold(0.0, f64::max)
}

/// Trapezoid rule for ∫|f̂ − f| over the grid.
pub fn integrated_pdf_error(grid: &EvaluationGrid, pdf: &[f64], spec: &MixtureSpec) -> f64 {
    let diffs: Vec<f64> = grid.points().iter().zip(pdf).map(|(&x, &f)| (f - true_pdf(spec, x)).abs()).collect();
    trapezoid(grid.points(), &diffs)
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1])).sum()
}

/// Fraction of the distinct sample points at which the true CDF lies inside
/// the pointwise band.
pub fn band_coverage(model: &SelectedModel, sample: &Sample, spec: &MixtureSpec, alpha_family: f64) -> Result<f64> {
    let points = EvaluationGrid::sample_points(sample);
    let band = pointwise_band(model, &points, alpha_family)?;
    let inside = points
        .points()
        .iter()
        .enumerate()
        .filter(|&(i, &x)| {
            let f = true_cdf(spec, x);
            band.lower[i] <= f && f <= band.upper[i]
        })
        .count();
    Ok(inside as f64 / points.len() as f64)
}
