//! Maximum-likelihood beta regression with constant precision.
//!
//! The mean of each response is `μ_i = g⁻¹(x_iᵀβ)` and the precision `φ` is
//! shared. The optimizer runs Fisher scoring on `(β, ln φ)` with step halving,
//! so every accepted iteration increases the log-likelihood.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::DesignMatrix;
use crate::error::{domain, Error, Result};
use crate::links::LinkFunction;
use crate::specfun::{digamma_unchecked, log_gamma_unchecked, trigamma_unchecked};

pub const RESPONSE_CLAMP: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 500;
pub const MAX_HALVINGS: usize = 12;
pub const LOGLIK_REL_TOL: f64 = 1e-10;
pub const GRADIENT_TOL: f64 = 1e-6;
const PHI_FLOOR: f64 = 1e-2;
const RANK_TOL: f64 = 1e-12;

/// A fitted beta regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaFit {
    pub beta: Vec<f64>,
    pub phi: f64,
    pub loglik: f64,
    pub mu_hat: Vec<f64>,
    pub eta_hat: Vec<f64>,
    /// y - μ̂
    pub residuals_response: Vec<f64>,
    /// g(y) - η̂
    pub residuals_link: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Sup-norm of the score in `(β, ln φ)` at the returned estimate.
    pub gradient_norm: f64,
    /// Log-likelihood after each accepted iteration, starting value first.
    #[serde(skip)]
    pub loglik_trace: Vec<f64>,
    /// Rounding-noise level of `loglik`; the trace is nondecreasing up to it.
    #[serde(skip)]
    pub loglik_noise: f64,
}

impl BetaFit {
    /// Mean absolute response-scale residual.
    pub fn mean_abs_residual(&self) -> f64 {
        mean_abs(&self.residuals_response)
    }

    /// Mean absolute link-scale residual.
    pub fn mean_abs_link_residual(&self) -> f64 {
        mean_abs(&self.residuals_link)
    }
}

fn mean_abs(v: &[f64]) -> f64 {
    v.iter().map(|r| r.abs()).sum::<f64>() / v.len() as f64
}

/// Beta log-likelihood in the mean/precision parametrization.
pub fn beta_loglik(y: &[f64], mu: &[f64], phi: f64) -> Result<f64> {
    if y.len() != mu.len() {
        return Err(Error::DimensionMismatch {
            left: y.len(),
            right: mu.len(),
        });
    }
    if !(phi > 0.0) || !phi.is_finite() {
        return Err(domain("beta_loglik", format!("phi = {phi} must be positive")));
    }
    if let Some(v) = y.iter().chain(mu).find(|v| !(**v > 0.0 && **v < 1.0)) {
        return Err(domain("beta_loglik", format!("value {v} outside (0, 1)")));
    }
    Ok(y.iter().zip(mu).map(|(&y, &m)| loglik_term(y, m, 1.0 - m, phi)).sum())
}

#[inline]
fn loglik_term(y: f64, mu: f64, nu: f64, phi: f64) -> f64 {
    let p = mu * phi;
    let q = nu * phi;
    log_gamma_unchecked(phi) - log_gamma_unchecked(p) - log_gamma_unchecked(q)
        + (p - 1.0) * y.ln()
        + (q - 1.0) * (-y).ln_1p()
}

// Response-side quantities reused across iterations.
struct Response {
    y: Vec<f64>,
    ystar: Vec<f64>,
    ln_1my: Vec<f64>,
}

impl Response {
    fn new(y: &[f64]) -> Self {
        let y: Vec<f64> = y.iter().map(|v| v.clamp(RESPONSE_CLAMP, 1.0 - RESPONSE_CLAMP)).collect();
        let ystar = y.iter().map(|v| (v / (1.0 - v)).ln()).collect();
        let ln_1my = y.iter().map(|v| (-v).ln_1p()).collect();
        Self { y, ystar, ln_1my }
    }
}

struct State {
    eta: Vec<f64>,
    mu: Vec<f64>,
    /// 1 - mu, computed from eta without cancellation.
    nu: Vec<f64>,
    loglik: f64,
    // Rounding-noise level of `loglik`, from the magnitude of its terms.
    noise: f64,
}

fn evaluate(x: &DMatrix<f64>, resp: &Response, beta: &DVector<f64>, phi: f64, link: LinkFunction) -> State {
    let eta: Vec<f64> = (x * beta).iter().copied().collect();
    let mu: Vec<f64> = eta.iter().map(|&e| link.inverse(e)).collect();
    let nu: Vec<f64> = eta.iter().map(|&e| link.inverse_complement(e)).collect();
    let mut loglik = f64::NEG_INFINITY;
    let mut magnitude = 0.0;
    if phi.is_finite() && phi > 0.0 && mu.iter().chain(&nu).all(|&m| m > 0.0 && m < 1.0) {
        let lg_phi = log_gamma_unchecked(phi).abs();
        let ll: f64 = (0..mu.len()).map(|i| loglik_term(resp.y[i], mu[i], nu[i], phi)).sum();
        if ll.is_finite() {
            loglik = ll;
            magnitude = mu
                .iter()
                .zip(&nu)
                .map(|(&m, &v)| lg_phi + log_gamma_unchecked(m * phi).abs() + log_gamma_unchecked(v * phi).abs())
                .sum();
        }
    }
    State {
        eta,
        mu,
        nu,
        loglik,
        noise: 8.0 * f64::EPSILON * magnitude,
    }
}

// Score and expected information in (β, ln φ).
fn score_info(
    x: &DMatrix<f64>,
    resp: &Response,
    state: &State,
    phi: f64,
    link: LinkFunction,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = x.nrows();
    let k = x.ncols();
    let mut grad = DVector::zeros(k + 1);
    let mut info = DMatrix::zeros(k + 1, k + 1);
    let psi_phi = digamma_unchecked(phi);
    let tri_phi = trigamma_unchecked(phi);
    let mut u_phi = 0.0;
    let mut k_phiphi = 0.0;
    for i in 0..n {
        let mu = state.mu[i];
        let nu = state.nu[i];
        let p = mu * phi;
        let q = nu * phi;
        let psi_p = digamma_unchecked(p);
        let psi_q = digamma_unchecked(q);
        let tri_p = trigamma_unchecked(p);
        let tri_q = trigamma_unchecked(q);
        let t = link.inverse_derivative(state.eta[i]);
        let diff = resp.ystar[i] - (psi_p - psi_q);

        let w = phi * (tri_p + tri_q) * t * t;
        let c = phi * (tri_p * mu - tri_q * nu);
        let g_beta = phi * t * diff;
        let row = x.row(i);
        for a in 0..k {
            let xa = row[a];
            grad[a] += g_beta * xa;
            info[(a, k)] += xa * t * c;
            for b in a..k {
                info[(a, b)] += phi * w * xa * row[b];
            }
        }
        u_phi += mu * diff + resp.ln_1my[i] - psi_q + psi_phi;
        k_phiphi += tri_p * mu * mu + tri_q * nu * nu - tri_phi;
    }
    // Chain rule to θ = ln φ.
    grad[k] = phi * u_phi;
    for a in 0..k {
        info[(a, k)] *= phi;
    }
    info[(k, k)] = phi * phi * k_phiphi;
    for a in 0..=k {
        for b in 0..a {
            info[(a, b)] = info[(b, a)];
        }
    }
    (grad, info)
}

fn check_inputs(design: &DesignMatrix, y: &[f64]) -> Result<()> {
    if design.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            left: design.nrows(),
            right: y.len(),
        });
    }
    if design.nrows() <= design.ncols() {
        return Err(Error::InsufficientData {
            n: design.nrows(),
            required: design.ncols() + 1,
        });
    }
    if let Some(v) = y.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        return Err(domain("beta regression", format!("response {v} outside (0, 1)")));
    }
    Ok(())
}

/// Score vector and expected information matrix, both with respect to
/// `(β, ln φ)` (the last coordinate is the log-precision).
pub fn score_and_information(
    design: &DesignMatrix,
    y: &[f64],
    beta: &[f64],
    phi: f64,
    link: LinkFunction,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_inputs(design, y)?;
    if beta.len() != design.ncols() {
        return Err(Error::DimensionMismatch {
            left: beta.len(),
            right: design.ncols(),
        });
    }
    if !(phi > 0.0) {
        return Err(domain("score_and_information", format!("phi = {phi} must be positive")));
    }
    let resp = Response::new(y);
    let beta = DVector::from_column_slice(beta);
    let state = evaluate(&design.entries, &resp, &beta, phi, link);
    if state.mu.iter().chain(&state.nu).any(|&m| !(m > 0.0 && m < 1.0)) {
        return Err(domain("score_and_information", "fitted mean saturated at 0 or 1"));
    }
    Ok(score_info(&design.entries, &resp, &state, phi, link))
}

fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Some(ch.solve(b));
    }
    // Fall back to a lightly ridged system when the information is numerically
    // indefinite far from the optimum.
    let scale = a.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut ridged = a.clone();
    for i in 0..a.nrows() {
        ridged[(i, i)] += 1e-8 * scale;
    }
    ridged.cholesky().map(|ch| ch.solve(b))
}

/// Fits the beta regression of `y` on `design` through `link`.
///
/// Returns [`Error::SingularDesign`] for rank-deficient designs. Hitting the
/// iteration cap is not an error: the fit comes back with `converged = false`.
pub fn fit(design: &DesignMatrix, y: &[f64], link: LinkFunction) -> Result<BetaFit> {
    check_inputs(design, y)?;
    let x = &design.entries;
    let n = x.nrows();
    let k = x.ncols();

    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > RANK_TOL * smax) {
        return Err(Error::SingularDesign);
    }

    let resp = Response::new(y);
    let z = DVector::from_iterator(n, resp.y.iter().map(|&v| link.forward_clamped(v)));
    let mut beta = svd.solve(&z, 0.0).map_err(|_| Error::SingularDesign)?;

    // Starting precision from the least-squares residual variance on the link
    // scale, mapped back through the delta method.
    let eta0 = x * &beta;
    let sse: f64 = (&z - &eta0).iter().map(|r| r * r).sum();
    let sigma2 = sse / (n - k) as f64;
    let mut phi_sum = 0.0;
    for &e in eta0.iter() {
        let mu = link.inverse(e).clamp(RESPONSE_CLAMP, 1.0 - RESPONSE_CLAMP);
        let dmu = link.inverse_derivative(e);
        let var_y = sigma2 * dmu * dmu;
        phi_sum += mu * (1.0 - mu) / var_y.max(f64::MIN_POSITIVE) - 1.0;
    }
    let mut phi = (phi_sum / n as f64).max(PHI_FLOOR);
    if !phi.is_finite() {
        phi = 1e8;
    }

    let mut state = evaluate(x, &resp, &beta, phi, link);
    if !state.loglik.is_finite() {
        // Least squares overshot the unit interval; restart from the mean.
        let mean = resp.y.iter().sum::<f64>() / n as f64;
        beta = DVector::zeros(k);
        beta[0] = link.forward_clamped(mean);
        state = evaluate(x, &resp, &beta, phi, link);
    }
    let mut trace = vec![state.loglik];
    let (mut grad, mut info) = score_info(x, &resp, &state, phi, link);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let Some(step) = solve_spd(&info, &grad) else {
            break;
        };
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let beta_new = &beta + step.rows(0, k) * lambda;
            let phi_new = phi * (step[k] * lambda).exp();
            let candidate = evaluate(x, &resp, &beta_new, phi_new, link);
            if candidate.loglik >= state.loglik {
                accepted = Some((beta_new, phi_new, candidate));
                break;
            }
            lambda *= 0.5;
        }
        // Near the optimum the predicted gain drops below the rounding noise of
        // the log-likelihood, which can no longer rank the iterates. A full
        // scoring step is then kept only if it shrinks the score.
        let predicted_gain = 0.5 * grad.dot(&step);
        if accepted.is_none() && predicted_gain <= state.noise {
            let beta_new = &beta + step.rows(0, k);
            let phi_new = phi * step[k].exp();
            let candidate = evaluate(x, &resp, &beta_new, phi_new, link);
            if candidate.loglik >= state.loglik - state.noise.max(candidate.noise) {
                let (g_new, _) = score_info(x, &resp, &candidate, phi_new, link);
                if sup_norm(&g_new) < sup_norm(&grad) {
                    accepted = Some((beta_new, phi_new, candidate));
                }
            }
        }
        let Some((beta_new, phi_new, candidate)) = accepted else {
            converged = sup_norm(&grad) < GRADIENT_TOL;
            break;
        };
        let change = (candidate.loglik - state.loglik).abs() / (state.loglik.abs() + LOGLIK_REL_TOL);
        beta = beta_new;
        phi = phi_new;
        state = candidate;
        trace.push(state.loglik);
        (grad, info) = score_info(x, &resp, &state, phi, link);
        if change < LOGLIK_REL_TOL && sup_norm(&grad) < GRADIENT_TOL {
            converged = true;
            break;
        }
    }

    let residuals_response = resp.y.iter().zip(&state.mu).map(|(y, m)| y - m).collect();
    let residuals_link = resp
        .y
        .iter()
        .zip(&state.eta)
        .map(|(&y, e)| link.forward_clamped(y) - e)
        .collect();
    Ok(BetaFit {
        beta: beta.iter().copied().collect(),
        phi,
        loglik: state.loglik,
        loglik_noise: state.noise,
        gradient_norm: sup_norm(&grad),
        mu_hat: state.mu,
        eta_hat: state.eta,
        residuals_response,
        residuals_link,
        converged,
        iterations,
        loglik_trace: trace,
    })
}

fn sup_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
