//! Offline search for a good agent function: graph reduction interleaved
//! with Bayesian optimization over a Gaussian-process surrogate, drift
//! monitoring, and search over feature selectors.

mod acq;
mod bo;
mod drift;
mod gp;
mod lbfgs;
mod param;
mod pipeline;
mod selector;

pub use acq::{propose_next, ucb, Proposal, LOCAL_STARTS, RANDOM_CANDIDATES, UCB_LAMBDA};
pub use bo::{bo_maximize, bo_stage, BoConfig, BoOutcome, EvaluationRecord, StopRule, GP_WINDOW};
pub use drift::{
    run_drift_demo, DriftConfig, DriftDemoConfig, DriftDemoReport, DriftDetector, DriftEvent, Reoptimization,
};
pub use gp::{log_marginal_likelihood, Gp, Hyper};
pub use lbfgs::{minimize_box, LbfgsConfig};
pub use param::{
    decode_backoff, decode_timeout, encode_backoff, encode_timeout, ParamKind, ParamSpace, BACKOFF_MAX_US, T_MAX_US,
};
pub use pipeline::{run_pipeline, LogRow, OptLog, PipelineConfig, PipelineResult, Tracker};
pub use selector::{
    decode_selector, describe_selector, encode_selector, optimize_feature_selector, SelectorResult,
    SelectorSearchConfig, SelectorSpace, SELECTOR_DIM,
};
