//! Least-squares estimation of the model weights from labeled sessions.
//!
//! The regression target is the unclamped linear score; the floor at 1 MOS
//! is only applied when reporting training metrics.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binning::BinningConfig;
use crate::error::{Error, Result};
use crate::evaluation::{pcc, rmse, Predictor, SessionModel};
use crate::features::{extract_features, FeatureVector, N_FEATURES};
use crate::lstsq;
use crate::model::predict_features;
use crate::session::SessionTrace;
use crate::weights::{ModelWeights, WeightsFile};

/// Sessions that all carry a ground-truth MOS.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    sessions: Vec<SessionTrace>,
}

impl LabeledDataset {
    pub fn new(sessions: Vec<SessionTrace>) -> Result<Self> {
        if sessions.is_empty() {
            return Err(Error::Usage("labeled dataset is empty".into()));
        }
        if let Some(k) = sessions.iter().position(|s| s.ground_truth_mos().is_none()) {
            return Err(Error::Usage(format!("session {k} has no ground-truth MOS")));
        }
        Ok(Self { sessions })
    }

    pub fn sessions(&self) -> &[SessionTrace] {
        &self.sessions
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.sessions
            .iter()
            .map(|s| s.ground_truth_mos().unwrap())
            .collect()
    }

    pub fn into_sessions(self) -> Vec<SessionTrace> {
        self.sessions
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FitOptions {
    /// Constrain every weight to be non-negative (Lawson-Hanson).
    pub nonnegative: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub weights: ModelWeights,
    pub n_sessions: usize,
    pub training_rmse: f64,
    /// `None` when the training labels or predictions are constant.
    pub training_pcc: Option<f64>,
    /// Set when the design matrix is rank deficient and the minimum-norm
    /// solution was returned.
    pub condition_warning: bool,
    pub rank: usize,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct FitReportJson<'a> {
    n_sessions: usize,
    training_rmse: f64,
    training_pcc: Option<f64>,
    condition_warning: bool,
    rank: usize,
    warnings: &'a [String],
    weights: WeightsFile,
}

impl FitReport {
    pub fn weights(&self) -> &ModelWeights {
        &self.weights
    }

    /// Report JSON; the weights are embedded in the weights-file layout.
    pub fn to_json(&self) -> String {
        let json = FitReportJson {
            n_sessions: self.n_sessions,
            training_rmse: self.training_rmse,
            training_pcc: self.training_pcc,
            condition_warning: self.condition_warning,
            rank: self.rank,
            warnings: &self.warnings,
            weights: WeightsFile::from(&self.weights),
        };
        serde_json::to_string_pretty(&json).expect("fit reports always serialize")
    }
}

/// Sessions with fewer rows than this cannot pin down every weight.
pub const RECOMMENDED_MIN_SESSIONS: usize = N_FEATURES;

pub fn extract_all(
    sessions: &[SessionTrace],
    config: &BinningConfig,
) -> Result<Vec<FeatureVector>> {
    sessions
        .par_iter()
        .enumerate()
        .map(|(k, s)| extract_features(s, config).map_err(|e| e.at_record(k)))
        .collect()
}

pub fn fit(dataset: &LabeledDataset, config: &BinningConfig) -> Result<FitReport> {
    fit_with(dataset, config, FitOptions::default())
}

pub fn fit_with(
    dataset: &LabeledDataset,
    config: &BinningConfig,
    options: FitOptions,
) -> Result<FitReport> {
    let features = extract_all(dataset.sessions(), config)?;
    let labels = dataset.labels();
    fit_features(&features, &labels, options)
}

/// Fit directly on precomputed features.
pub fn fit_features(
    features: &[FeatureVector],
    labels: &[f64],
    options: FitOptions,
) -> Result<FitReport> {
    if features.is_empty() {
        return Err(Error::Usage("cannot fit on an empty dataset".into()));
    }
    if features.len() != labels.len() {
        return Err(Error::Usage(format!(
            "{} feature rows but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let rows: Vec<[f64; N_FEATURES]> = features.iter().map(FeatureVector::design_row).collect();
    let design = DMatrix::from_fn(rows.len(), N_FEATURES, |r, c| rows[r][c]);
    let target = DVector::from_column_slice(labels);

    let solution = if options.nonnegative {
        lstsq::solve_nonnegative(&design, &target)?
    } else {
        lstsq::solve(&design, &target)?
    };
    let mut vector = [0.0; N_FEATURES];
    vector.copy_from_slice(solution.x.as_slice());
    let weights = ModelWeights::from_vector(&vector);

    let mut warnings = Vec::new();
    if features.len() < RECOMMENDED_MIN_SESSIONS {
        warnings.push(format!(
            "only {} sessions; at least {RECOMMENDED_MIN_SESSIONS} recommended",
            features.len()
        ));
    }
    let condition_warning = solution.is_rank_deficient(N_FEATURES);
    if condition_warning {
        warnings.push(format!(
            "design matrix has rank {} < {N_FEATURES}; returning the minimum-norm solution",
            solution.rank
        ));
    }

    let predictions: Vec<f64> = features
        .iter()
        .map(|f| predict_features(f, &weights))
        .collect();
    Ok(FitReport {
        weights,
        n_sessions: features.len(),
        training_rmse: rmse(&predictions, labels)?,
        training_pcc: pcc(&predictions, labels).ok(),
        condition_warning,
        rank: solution.rank,
        warnings,
    })
}

/// The histogram model with weights held fixed (no training).
#[derive(Debug, Clone)]
pub struct FixedWeights {
    pub weights: ModelWeights,
    pub config: BinningConfig,
}

impl FixedWeights {
    pub fn new(weights: ModelWeights) -> Self {
        Self {
            weights,
            config: BinningConfig::default(),
        }
    }
}

impl Predictor for FixedWeights {
    fn predict(&self, sessions: &[SessionTrace]) -> Result<Vec<f64>> {
        Ok(extract_all(sessions, &self.config)?
            .iter()
            .map(|f| predict_features(f, &self.weights))
            .collect())
    }
}

impl SessionModel for FixedWeights {
    fn name(&self) -> String {
        "histogram (fixed weights)".into()
    }

    fn train(&self, _sessions: &[SessionTrace]) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(self.clone()))
    }
}

/// The histogram model refitted on every training set.
#[derive(Debug, Clone, Default)]
pub struct FittedHistogram {
    pub config: BinningConfig,
    pub options: FitOptions,
}

impl SessionModel for FittedHistogram {
    fn name(&self) -> String {
        "histogram (fitted)".into()
    }

    fn train(&self, sessions: &[SessionTrace]) -> Result<Box<dyn Predictor>> {
        let dataset = LabeledDataset::new(sessions.to_vec())?;
        let report = fit_with(&dataset, &self.config, self.options)?;
        Ok(Box::new(FixedWeights {
            weights: *report.weights(),
            config: self.config,
        }))
    }
}
