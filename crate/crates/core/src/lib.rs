//! Balanced non-cyclical component-wise gradient boosting for two-parameter
//! GAMLSS (Gaussian location-scale, negative binomial, Weibull), with fixed,
//! line-search, analytic and base-learner-ratio step lengths.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the `*F64`
//! and `*F32` aliases below name the common instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod base_learner;
pub mod boost;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod family;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod simulation;
pub mod special;
pub mod step;
pub mod tuning;

pub use boost::boost_fit;
pub use dataset::{load_csv, split_holdout, Dataset};
pub use error::{Error, Result};
pub use family::{Family, K};
pub use model::{FitConfig, FitTrace, FittedModel};
pub use scalar::Scalar;
pub use simulation::{run_study, SimTruth, StudyConfig, StudyResult};
pub use step::{Preset, SchemeSpec, StepRule};
pub use tuning::{kfold_cv, repeated_cv};

pub type DatasetF64 = Dataset<f64>;
pub type FitConfigF64 = FitConfig<f64>;
pub type FittedModelF64 = FittedModel<f64>;
pub type FitTraceF64 = FitTrace<f64>;
pub type SchemeSpecF64 = SchemeSpec<f64>;
pub type SimTruthF64 = SimTruth<f64>;

pub type DatasetF32 = Dataset<f32>;
pub type FitConfigF32 = FitConfig<f32>;
pub type FittedModelF32 = FittedModel<f32>;
pub type FitTraceF32 = FitTrace<f32>;
