//! Day-ahead electric load forecasting under extreme events.
//!
//! The load series is split into a long-term trend, a short-term trend and
//! a period component by two cascaded moving averages. Each component gets
//! its own model: ordinary least squares for the long-term trend, an
//! additive model of depth-1 boosted trees trained with a weather-triggered
//! reweighted loss for the short-term trend, and depth-limited boosted trees
//! for the period. The forecast is the sum of the three.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod config;
pub mod data;
pub mod decomposition;
pub mod error;
pub mod extremes;
pub mod features;
pub mod gam;
pub mod gbdt;
pub mod losses;
pub mod matrix;
pub mod metrics;
pub mod persist;
pub mod pipeline;
pub mod synthetic;
pub mod trend;

pub use data::{chrono_split, ingest_csv, split_days, Column, CsvSchema, Dataset, DaySlice, DaySplit};
pub use decomposition::{decompose, moving_average, recompose, DecomposedSeries};
pub use error::{Error, Result};
pub use features::{build_features, Aggregation, FeatureGroup, FeatureMatrix, FeatureSpec};
pub use gbdt::{fit_gbdt, fit_tree, BoostParams, GbdtModel, RegressionTree};
pub use losses::{etl_weights, score_function, EtlParams, EvlParams, LossSpec};
pub use matrix::ColumnMatrix;
pub use extremes::{bin_labels, detect_extremes, ExtremeEventConfig, ExtremeEventSet};
pub use gam::{fit_gam, GamModel, ShapeFunction};
pub use metrics::{evaluate, mape_day, nrmse_day, sr_curve, success_rate, EvalReport, MetricSettings};
pub use trend::{fit_linear, TrendMode, TrendModel};
pub use benchmark::{run_benchmark, BenchmarkReport};
pub use config::SaDIConfig;
pub use persist::{load_model, save_model};
pub use pipeline::{train, train_sadi, train_single, ForecastModel, Mode, SaDIModel, SingleModel};
pub use synthetic::{generate, SyntheticConfig};
