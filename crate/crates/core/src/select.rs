//! Basis-dimension selection under the nonnegative-derivative constraint.
//!
//! Every dimension in the requested range is fitted. A candidate is feasible
//! when its fit converged and the derivative of its linear predictor is
//! nonnegative across the constraint grid and a 4× refined check grid. The
//! feasible candidate with the smallest mean absolute residual (errR) wins,
//! with near-ties going to the smaller dimension.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{build_design, BasisKind, BasisSpec, POLY_DEGREE_RANGE, SPLINE_DIM_RANGE};
use crate::betareg::{fit, BetaFit};
use crate::error::{Error, Result};
use crate::links::LinkFunction;
use crate::sample::{fbc_cdf, response_cdf, ties_cdf, EmpiricalCdf, EstimatorKind, Sample};
use crate::smooth::{isotonize, EvaluationGrid, MIN_GRID_SIZE};

/// η'(x) below this counts as a constraint violation.
pub const DERIVATIVE_TOL: f64 = -1e-9;
/// Tolerance used on the refined verification grid.
pub const VERIFY_TOL: f64 = -1e-7;
pub const VERIFY_REFINEMENT: usize = 4;
/// errR values closer than this are treated as equal.
pub const ERR_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateStatus {
    Feasible,
    Infeasible,
    Unconverged,
}

impl std::fmt::Display for CandidateStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CandidateStatus::Feasible => "feasible",
            CandidateStatus::Infeasible => "infeasible",
            CandidateStatus::Unconverged => "unconverged",
        })
    }
}

/// One row of the selection audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub dimension: usize,
    /// Response-scale mean absolute residual; `None` when no fit was produced.
    pub err_r: Option<f64>,
    /// Link-scale mean absolute residual.
    pub err_r_link: Option<f64>,
    pub converged: bool,
    pub feasible: bool,
    pub status: CandidateStatus,
    /// Minimum of η' over the constraint grid.
    pub min_derivative: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectOptions {
    /// Response estimator; `None` picks FBC for tie-free samples, ties otherwise.
    pub estimator: Option<EstimatorKind>,
    /// Isotonize the response before fitting.
    pub pre_isotonize: bool,
    /// Constraint grid size (at least 512).
    pub grid_size: usize,
}

impl Default for SelectOptions {
    fn default() -> Self {
        Self {
            estimator: None,
            pre_isotonize: false,
            grid_size: 1001,
        }
    }
}

/// The winning fit plus everything needed to evaluate and audit it.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedModel {
    pub basis: BasisSpec,
    pub fit: BetaFit,
    pub link: LinkFunction,
    pub err_r: f64,
    pub err_r_link: f64,
    pub candidates: Vec<Candidate>,
    pub constraint_grid: EvaluationGrid,
    pub response: EmpiricalCdf,
    pub n: usize,
}

impl SelectedModel {
    pub fn eta(&self, x: f64) -> f64 {
        self.basis.eta(&self.fit.beta, x)
    }

    pub fn eta_and_derivative(&self, x: f64) -> (f64, f64) {
        self.basis.eta_and_derivative(&self.fit.beta, x)
    }
}

/// True iff η'(x) ≥ −1e−9 at every grid point.
pub fn derivative_nonneg(fit: &BetaFit, basis: &BasisSpec, grid: &[f64]) -> bool {
    min_derivative(&fit.beta, basis, grid) >= DERIVATIVE_TOL
}

pub fn min_derivative(beta: &[f64], basis: &BasisSpec, grid: &[f64]) -> f64 {
    grid.iter()
        .map(|&x| basis.eta_and_derivative(beta, x).1)
        .fold(f64::INFINITY, f64::min)
}

fn check_range(kind: BasisKind, (lo, hi): (usize, usize)) -> Result<()> {
    let (min, max) = match kind {
        BasisKind::Polynomial => POLY_DEGREE_RANGE,
        BasisKind::BSpline => SPLINE_DIM_RANGE,
    };
    let bad = if lo < min || lo > max {
        Some(lo)
    } else if hi < lo || hi > max {
        Some(hi)
    } else {
        None
    };
    match (bad, kind) {
        (None, _) => Ok(()),
        (Some(d), BasisKind::Polynomial) => Err(Error::DegreeOutOfRange(d)),
        (Some(d), BasisKind::BSpline) => Err(Error::DimensionOutOfRange(d)),
    }
}

/// The response vector fed to the beta regression.
pub fn build_response(sample: &Sample, options: &SelectOptions) -> Result<EmpiricalCdf> {
    let mut response = match options.estimator {
        None => response_cdf(sample),
        Some(EstimatorKind::Fbc) => fbc_cdf(sample)?,
        Some(EstimatorKind::Ties) => ties_cdf(sample),
        Some(EstimatorKind::Empirical) => {
            return Err(crate::error::domain(
                "select",
                "the empirical CDF reaches 1 and cannot be a beta response",
            ))
        }
    };
    if options.pre_isotonize {
        let w = vec![1.0 / sample.len() as f64; sample.len()];
        response.y = isotonize(&response.y, &w, 0.0, 1.0)?;
    }
    Ok(response)
}

/// [`select_with`] using default options.
pub fn select(sample: &Sample, link: LinkFunction, kind: BasisKind, dims: (usize, usize)) -> Result<SelectedModel> {
    select_with(sample, link, kind, dims, &SelectOptions::default())
}

pub fn select_with(
    sample: &Sample,
    link: LinkFunction,
    kind: BasisKind,
    dims: (usize, usize),
    options: &SelectOptions,
) -> Result<SelectedModel> {
    evaluate_candidates(sample, link, kind, dims, options)?
        .model
        .ok_or(Error::NoFeasibleModel)
}

/// Full outcome of a dimension search: the audit trail, and the selected model
/// when some candidate is feasible.
#[derive(Debug, Clone)]
pub struct Selection {
    pub candidates: Vec<Candidate>,
    pub model: Option<SelectedModel>,
}

/// Like [`select_with`], but keeps the audit trail when nothing is feasible.
pub fn evaluate_candidates(
    sample: &Sample,
    link: LinkFunction,
    kind: BasisKind,
    dims: (usize, usize),
    options: &SelectOptions,
) -> Result<Selection> {
    check_range(kind, dims)?;
    crate::basis::standardize(sample)?;
    let response = build_response(sample, options)?;
    let grid = EvaluationGrid::padded(sample, options.grid_size.max(MIN_GRID_SIZE))?;
    let fine = grid.refined(VERIFY_REFINEMENT);

    let results: Vec<(Candidate, Option<(BasisSpec, BetaFit)>)> = (dims.0..=dims.1)
        .into_par_iter()
        .map(|dim| evaluate_candidate(sample, &response.y, link, kind, dim, &grid, &fine))
        .collect();

    let candidates: Vec<Candidate> = results.iter().map(|(c, _)| c.clone()).collect();
    let Some(best) = pick_best(&candidates) else {
        return Ok(Selection { candidates, model: None });
    };
    let (basis, fit) = results.into_iter().nth(best).and_then(|(_, m)| m).expect("feasible candidate has a fit");
    let model = SelectedModel {
        err_r: fit.mean_abs_residual(),
        err_r_link: fit.mean_abs_link_residual(),
        basis,
        fit,
        link,
        candidates: candidates.clone(),
        constraint_grid: grid,
        response,
        n: sample.len(),
    };
    Ok(Selection {
        candidates,
        model: Some(model),
    })
}

/// Index of the feasible candidate with the smallest errR. Candidates whose
/// errR differ by at most [`ERR_TIE_TOL`] tie, and the smaller dimension wins.
pub fn pick_best(candidates: &[Candidate]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, cand) in candidates.iter().enumerate() {
        let Some(err) = cand.err_r.filter(|_| cand.feasible) else {
            continue;
        };
        best = match best {
            None => Some(i),
            Some(b) => {
                let current = candidates[b].err_r.expect("feasible");
                let better = err < current - ERR_TIE_TOL
                    || ((err - current).abs() <= ERR_TIE_TOL && cand.dimension < candidates[b].dimension);
                Some(if better { i } else { b })
            }
        };
    }
    best
}

fn evaluate_candidate(
    sample: &Sample,
    y: &[f64],
    link: LinkFunction,
    kind: BasisKind,
    dim: usize,
    grid: &EvaluationGrid,
    fine: &EvaluationGrid,
) -> (Candidate, Option<(BasisSpec, BetaFit)>) {
    let failed = |note: String| Candidate {
        dimension: dim,
        err_r: None,
        err_r_link: None,
        converged: false,
        feasible: false,
        status: CandidateStatus::Unconverged,
        min_derivative: None,
        note: Some(note),
    };
    let (design, basis) = match build_design(sample, kind, dim) {
        Ok(d) => d,
        Err(e) => return (failed(e.to_string()), None),
    };
    let fitted = match fit(&design, y, link) {
        Ok(f) => f,
        Err(e) => return (failed(e.to_string()), None),
    };
    let min_d = min_derivative(&fitted.beta, &basis, grid.points());
    let mut note = None;
    let status = if !fitted.converged {
        note = Some(format!("no convergence after {} iterations", fitted.iterations));
        CandidateStatus::Unconverged
    } else if min_d < DERIVATIVE_TOL {
        CandidateStatus::Infeasible
    } else if min_derivative(&fitted.beta, &basis, fine.points()) < VERIFY_TOL {
        note = Some("derivative negative on the refined verification grid".to_string());
        CandidateStatus::Infeasible
    } else {
        CandidateStatus::Feasible
    };
    let cand = Candidate {
        dimension: dim,
        err_r: Some(fitted.mean_abs_residual()),
        err_r_link: Some(fitted.mean_abs_link_residual()),
        converged: fitted.converged,
        feasible: status == CandidateStatus::Feasible,
        status,
        min_derivative: Some(min_d),
        note,
    };
    (cand, Some((basis, fitted)))
}
