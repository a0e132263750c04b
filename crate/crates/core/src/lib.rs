//! Causal effect estimation for single-subject (n-of-1) time series.
//!
//! Two estimators of the average period treatment effect (APTE) are provided:
//! model-twin randomization ([`motr`]), a g-formula style rollout of a fitted
//! outcome model under permuted exposures, and the propensity-score twin
//! ([`pstn`]), an inverse-probability-weighted contrast. Both can use linear /
//! logistic models or random forests ([`models`]). The [`arco`] module
//! simulates the autoregressive data-generating process, [`oracle`] computes
//! exact APTEs by enumeration, and [`harness`] runs replicated bias studies.

pub mod arco;
pub mod config;
pub mod dataset;
pub mod error;
pub mod features;
pub mod harness;
mod linalg;
pub mod models;
pub mod motr;
pub mod oracle;
pub mod pstn;
pub mod seed;
pub mod stats;
pub mod transform;

pub use arco::{long_run_apte, long_run_mean, simulate_dataset, ArcoParams, PropensityParams, SimConfig};
pub use config::RunConfig;
pub use dataset::{read_csv, CsvOptions, PeriodRecord, TimeSeriesDataset};
pub use error::{Error, ErrorClass, Result};
pub use features::{assemble_features, FeatureMatrix, FeatureSpec, OutcomeLag};
pub use harness::{analyze, replicate, Analysis, MethodConfigs, MethodId, ReplicationReport, Study};
pub use models::{FittedOutcomeModel, FittedPropensityModel, ForestConfig};
pub use motr::{run_motr, ApteEstimate, MotrConfig};
pub use oracle::{enumerate_apte, EnumMode, EnumSpec};
pub use pstn::{run_pstn, PstnConfig, PstnResult};
pub use seed::SeedSpec;
