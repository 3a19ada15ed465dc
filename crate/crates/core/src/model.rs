//! Session QoE prediction from histogram features.

use crate::binning::{BinningConfig, MIN_MOS};
use crate::error::Result;
use crate::features::{extract_features, FeatureVector};
use crate::session::SessionTrace;
use crate::weights::ModelWeights;

/// Perceptual quality term: quality-level contributions minus the
/// down-switch and non-negative-switch penalties. Not clamped, and may be
/// negative.
pub fn perceptual_quality(fv: &FeatureVector, w: &ModelWeights) -> f64 {
    let levels: f64 = fv.f_quality.iter().zip(&w.alpha).map(|(f, a)| f * a).sum();
    let downs: f64 = fv
        .f_downswitch
        .iter()
        .zip(&w.beta_down)
        .map(|(f, b)| f * b)
        .sum();
    levels - downs - w.beta_um * fv.f_um
}

/// Degradation caused by interruptions.
pub fn interruption_degradation(fv: &FeatureVector, w: &ModelWeights) -> f64 {
    fv.f_interruption
        .iter()
        .zip(&w.gamma)
        .map(|(f, g)| f * g)
        .sum()
}

/// `perceptual_quality - interruption_degradation`, before the floor at 1.
pub fn unclamped_score(fv: &FeatureVector, w: &ModelWeights) -> f64 {
    perceptual_quality(fv, w) - interruption_degradation(fv, w)
}

/// Predicted MOS for precomputed features; never below 1.
pub fn predict_features(fv: &FeatureVector, w: &ModelWeights) -> f64 {
    unclamped_score(fv, w).max(MIN_MOS)
}

pub fn predict(trace: &SessionTrace, w: &ModelWeights, config: &BinningConfig) -> Result<f64> {
    Ok(predict_features(&extract_features(trace, config)?, w))
}
