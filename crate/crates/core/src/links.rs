//! Link functions connecting the beta-regression mean to the linear predictor.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::specfun::{std_normal_cdf, std_normal_pdf, std_normal_quantile};

/// Inputs to [`LinkFunction::forward`] are clamped into `[MU_CLAMP, 1 - MU_CLAMP]`.
pub const MU_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkFunction {
    Logit,
    Probit,
    Cloglog,
    Cauchit,
}

impl LinkFunction {
    pub const ALL: [LinkFunction; 4] = [
        LinkFunction::Logit,
        LinkFunction::Probit,
        LinkFunction::Cloglog,
        LinkFunction::Cauchit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LinkFunction::Logit => "logit",
            LinkFunction::Probit => "probit",
            LinkFunction::Cloglog => "cloglog",
            LinkFunction::Cauchit => "cauchit",
        }
    }

    /// g(μ). Rejects μ outside the open unit interval, then clamps it away
    /// from the endpoints by [`MU_CLAMP`].
    pub fn forward(self, mu: f64) -> Result<f64> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(domain("link_forward", format!("mu = {mu} outside (0, 1)")));
        }
        Ok(self.forward_clamped(mu))
    }

    pub(crate) fn forward_clamped(self, mu: f64) -> f64 {
        let mu = mu.clamp(MU_CLAMP, 1.0 - MU_CLAMP);
        match self {
            LinkFunction::Logit => (mu / (1.0 - mu)).ln(),
            LinkFunction::Probit => std_normal_quantile(mu).expect("clamped into (0, 1)"),
            LinkFunction::Cloglog => (-(-mu).ln_1p()).ln(),
            LinkFunction::Cauchit => (PI * mu - PI / 2.0).tan(),
        }
    }

    /// g⁻¹(η), the fitted distribution function value.
    pub fn inverse(self, eta: f64) -> f64 {
        match self {
            LinkFunction::Logit => {
                if eta >= 0.0 {
                    1.0 / (1.0 + (-eta).exp())
                } else {
                    let e = eta.exp();
                    e / (1.0 + e)
                }
            }
            LinkFunction::Probit => std_normal_cdf(eta),
            LinkFunction::Cloglog => -(-eta.exp()).exp_m1(),
            LinkFunction::Cauchit => cauchy_upper_tail(-eta),
        }
    }

    /// 1 − g⁻¹(η), accurate when g⁻¹(η) is close to 1.
    pub fn inverse_complement(self, eta: f64) -> f64 {
        match self {
            LinkFunction::Logit | LinkFunction::Cauchit => self.inverse(-eta),
            LinkFunction::Probit => std_normal_cdf(-eta),
            LinkFunction::Cloglog => (-eta.exp()).exp(),
        }
    }

    /// d g⁻¹(η) / dη, the density factor.
    pub fn inverse_derivative(self, eta: f64) -> f64 {
        match self {
            LinkFunction::Logit => {
                let e = (-eta.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            LinkFunction::Probit => std_normal_pdf(eta),
            LinkFunction::Cloglog => (eta - eta.exp()).exp(),
            LinkFunction::Cauchit => 1.0 / (PI * (1.0 + eta * eta)),
        }
    }
}

// P(C > t) for a standard Cauchy variable, without cancellation for large t.
fn cauchy_upper_tail(t: f64) -> f64 {
    if t > 0.0 {
        (1.0 / t).atan() / PI
    } else {
        0.5 - t.atan() / PI
    }
}

impl fmt::Display for LinkFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LinkFunction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "logit" => Ok(LinkFunction::Logit),
            "probit" => Ok(LinkFunction::Probit),
            "cloglog" => Ok(LinkFunction::Cloglog),
            "cauchit" => Ok(LinkFunction::Cauchit),
            other => Err(format!("unknown link {other:?}")),
        }
    }
}
