//! Smooth, monotone estimates of a distribution function and its density.
//!
//! The pipeline takes a univariate [`Sample`], turns its order statistics into
//! distribution-function estimates strictly inside (0, 1) (the derivative of
//! the empirical left MAD function), and fits a beta regression of those
//! values on a polynomial or B-spline basis through one of four
//! [`LinkFunction`]s. The basis dimension is chosen by the smallest mean
//! absolute residual among fits whose linear predictor is nondecreasing, which
//! makes the fitted CDF monotone and the implied density nonnegative.
//!
//! ```no_run
//! use madsmooth::{select, BasisKind, EvaluationGrid, LinkFunction, Sample};
//!
//! let sample = Sample::new(vec![0.3, -1.2, 0.8, 2.1, -0.4, 0.0, 1.1, -0.7, 0.5, 1.6, -2.0, 0.2])?;
//! let model = select(&sample, LinkFunction::Logit, BasisKind::Polynomial, (2, 7))?;
//! let grid = EvaluationGrid::padded(&sample, 512)?;
//! let band = madsmooth::pointwise_band(&model, &grid, 0.05)?;
//! println!("chosen degree {}, errR {}", model.basis.dimension, model.err_r);
//! # Ok::<(), madsmooth::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose so NaN is rejected along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod betareg;
pub mod error;
pub mod experiments;
pub mod kernel;
pub mod links;
pub mod sample;
pub mod select;
pub mod smooth;
pub mod specfun;

pub use basis::{BasisKind, BasisSpec, DesignMatrix, Standardization};
pub use betareg::BetaFit;
pub use error::{Error, Result};
pub use experiments::{run_study, sample_mixture, MixtureSpec, Study, StudyReport};
pub use kernel::{bandwidth_nrd0, kde_cdf, kde_pdf};
pub use links::LinkFunction;
pub use sample::{load_sample, Column, EmpiricalCdf, EstimatorKind, Sample};
pub use select::{evaluate_candidates, select, select_with, Candidate, SelectOptions, SelectedModel, Selection};
pub use smooth::{find_modes, isotonize, pointwise_band, BandResult, EvaluationGrid, ModeReport};


