//! Experiment drivers and numerical bound checks.
//!
//! Every driver is a pure function of its [`ExperimentConfig`] (seeds
//! included) and returns an [`ExperimentReport`] for the runner to serialize.

mod bounds;
mod config;
mod experiments;
mod report;

pub use bounds::{bound_checks, bound_checks_with, BoundsSetup, MultiplierError};
pub use config::ExperimentConfig;
pub use experiments::{
    cnn_gauge_deviation, e1_accuracy, e1_report, e2_gauge, e3_metric_sweep, e4_cross_resolution,
    e5_hodge, e6a_lambda_sweep, e6b_smoothness, gino_equivariance_error, train_base_cnn,
    train_base_gino, truncation_bias, E3_SALT, E4_SALT, INIT_SALT, MODEL_CNN, MODEL_GINO,
    MODEL_GINO_LINEAR,
};
pub use report::{ExperimentReport, SweepSpec};
