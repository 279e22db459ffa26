//! Random-forest prediction intervals, MTRY tuning through validation
//! techniques, benefit tagging and meta-validation.
//!
//! The usual entry points are [`load_csv`], [`train_forest`],
//! [`prediction_intervals`], [`run_tuning`] and [`run_meta`].

pub mod audit;
pub mod data;
pub mod error;
pub mod forest;
pub mod meta;
pub mod metrics;
pub mod rng;
pub mod split;
pub mod stats;
pub mod tuning;
mod util;
pub mod validation;

pub use audit::{AccessLog, AccessRecord, Probe, Stage};
pub use data::{load_csv, read_csv, Column, ColumnRole, ColumnSchema, Dataset, IngestConfig};
pub use error::{Error, Result};
pub use forest::{
    empirical_quantile, interval_quantiles, prediction_intervals, train_forest, train_forest_on,
    ForestConfig, ForestModel, ImpureLeafPolicy, PredictionInterval, DEFAULT_MTRY, DEFAULT_TREES,
};
pub use meta::{run_meta, run_meta_all, MetaChoice, MetaOutcome, MetaTechnique};
pub use metrics::{evaluate, evaluate_many, ConfigPerformance};
pub use split::SplitIndices;
pub use stats::{chi_square_sf, cochran_q, friedman, TestResult, ALPHA};
pub use tuning::{
    classify_rq2, mtry_grid, run_tuning, select_configuration, BenefitTag, PotentialTag, Rq2Facts,
    SelectionFacts, TuningReport, TuningSettings, WidthComparison, DEFAULT_NCS,
};
pub use util::ceil_product;
pub use validation::{
    predict_performance, technique_splits, PredictedCell, PredictedPerformance, TechniqueId,
    TechniqueParams,
};
