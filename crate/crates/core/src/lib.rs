//! Histogram-based QoE model for HTTP adaptive streaming sessions.
//!
//! A session is a sequence of per-segment quality values (MOS) plus the
//! stalls that interrupted playback. The model summarizes it with three
//! histograms (quality levels, down-switches binned by starting quality and
//! amplitude, and interruption durations) and predicts the session MOS as a
//! weighted combination of the normalized bin frequencies:
//!
//! ```text
//! Q_PQ  = sum_n alpha_n F_n^Q - sum_(i,j) beta_ij F_ij^V - beta_um F^um
//! D_IR  = sum_l gamma_l F_l^I
//! QoE   = max(Q_PQ - D_IR, 1)
//! ```
//!
//! Around the model the crate provides least-squares weight fitting,
//! statistic-based comparison models, evaluation metrics with the repeated
//! random train/test split protocol, and a seedable synthetic session
//! generator.

pub mod baselines;
pub mod binning;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod fitting;
pub mod lstsq;
pub mod model;
pub mod session;
pub mod synth;
pub mod weights;

pub use binning::{
    bin_interruption, bin_quality, classify_switch, BinningConfig, DownSwitchBin, SwitchEvent,
};
pub use error::{Error, Result};
pub use evaluation::{
    linear_compensate, pcc, rmse, run_split_protocol, Compensation, EvaluationReport, SessionModel,
    SplitProtocol, TestPool,
};
pub use features::{extract_features, FeatureVector, N_FEATURES};
pub use fitting::{
    fit, fit_with, FitOptions, FitReport, FittedHistogram, FixedWeights, LabeledDataset,
};
pub use model::{interruption_degradation, perceptual_quality, predict, predict_features};
pub use session::{parse_sessions, FactorTag, InterruptionEvent, SessionTrace};
pub use synth::{
    generate_labeled_dataset, generate_session, generate_sessions, GeneratorConfig, LabelOptions,
};
pub use weights::ModelWeights;
