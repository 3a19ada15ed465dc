//! Seedable synthetic sessions and labeled datasets.
//!
//! Session `k` of a batch draws from ChaCha stream `k` under the configured
//! seed, so batches can be generated in parallel and still come out
//! identical to a serial run.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binning::{BinningConfig, MAX_MOS, MIN_MOS, N_INTERRUPTION_BINS, N_QUALITY_BINS};
use crate::error::{Error, Result};
use crate::features::extract_features;
use crate::fitting::LabeledDataset;
use crate::model::{predict_features, unclamped_score};
use crate::session::{FactorTag, InterruptionEvent, SessionTrace};
use crate::weights::ModelWeights;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SegmentCount {
    Fixed(usize),
    Range { min: usize, max: usize },
}

impl SegmentCount {
    fn bounds(&self) -> (usize, usize) {
        match *self {
            SegmentCount::Fixed(n) => (n, n),
            SegmentCount::Range { min, max } => (min, max),
        }
    }
}

/// Per-boundary move of the underlying integer quality level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub up: f64,
    pub down: f64,
    pub stay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StallDuration {
    /// Pick one of the interruption bins by weight, then a duration
    /// uniformly inside it; the open-ended last bin adds an exponential
    /// tail above its lower edge.
    BinMixture {
        weights: [f64; N_INTERRUPTION_BINS],
        tail_mean_s: f64,
    },
    Exponential {
        mean_s: f64,
    },
    Uniform {
        min_s: f64,
        max_s: f64,
    },
}

impl Default for StallDuration {
    fn default() -> Self {
        StallDuration::BinMixture {
            weights: [0.13, 0.17, 0.2, 0.2, 0.2, 0.1],
            tail_mean_s: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n_segments: SegmentCount,
    /// Distribution of the first segment's level over 1..=5.
    pub initial_level: [f64; N_QUALITY_BINS],
    pub transition: Transition,
    /// Probabilities of step magnitudes 1..=4 for up and down moves.
    pub step_sizes: [f64; 4],
    /// Maximum offset of a segment's value from its integer level.
    pub jitter: f64,
    pub stall_prob_per_boundary: f64,
    pub stall_duration: StallDuration,
    pub rng_seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_segments: SegmentCount::Range { min: 1, max: 60 },
            initial_level: [0.05, 0.1, 0.2, 0.3, 0.35],
            transition: Transition {
                up: 0.12,
                down: 0.12,
                stay: 0.76,
            },
            step_sizes: [0.55, 0.2, 0.15, 0.1],
            jitter: 0.3,
            stall_prob_per_boundary: 0.04,
            stall_duration: StallDuration::default(),
            rng_seed: 0,
        }
    }
}

fn is_prob(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

fn check_distribution(name: &str, probs: &[f64]) -> Result<()> {
    if !probs.iter().all(|p| is_prob(*p)) {
        return Err(Error::Usage(format!(
            "{name} entries must lie in [0, 1]: {probs:?}"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Usage(format!("{name} must sum to 1, sums to {sum}")));
    }
    Ok(())
}

impl GeneratorConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|source| Error::Parse {
            record: None,
            source,
        })?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let (min, max) = self.n_segments.bounds();
        if min == 0 || min > max {
            return Err(Error::Usage(format!(
                "segment count range [{min}, {max}] must be non-empty and positive"
            )));
        }
        check_distribution("initial_level", &self.initial_level)?;
        let t = self.transition;
        check_distribution("transition", &[t.up, t.down, t.stay])?;
        check_distribution("step_sizes", &self.step_sizes)?;
        if !(0.0..0.5).contains(&self.jitter) {
            return Err(Error::Usage(format!(
                "jitter {} must lie in [0, 0.5)",
                self.jitter
            )));
        }
        if !is_prob(self.stall_prob_per_boundary) {
            return Err(Error::Usage(format!(
                "stall probability {} must lie in [0, 1]",
                self.stall_prob_per_boundary
            )));
        }
        match &self.stall_duration {
            StallDuration::BinMixture {
                weights,
                tail_mean_s,
            } => {
                check_distribution("stall bin weights", weights)?;
                if !(*tail_mean_s > 0.0) {
                    return Err(Error::Usage("tail mean must be positive".into()));
                }
            }
            StallDuration::Exponential { mean_s } => {
                if !(*mean_s > 0.0) {
                    return Err(Error::Usage("exponential mean must be positive".into()));
                }
            }
            StallDuration::Uniform { min_s, max_s } => {
                if !(*min_s >= 0.0 && min_s < max_s && max_s.is_finite()) {
                    return Err(Error::Usage(format!(
                        "uniform stall range ({min_s}, {max_s}] is invalid"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Generator for session `index` of a batch.
    pub fn session_rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(index as u64);
        rng
    }
}

/// A value in `(lo, hi]`.
fn left_open(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.random();
    hi - (hi - lo) * u
}

fn sample_stall(rng: &mut impl Rng, dist: &StallDuration) -> f64 {
    match dist {
        StallDuration::BinMixture {
            weights,
            tail_mean_s,
        } => {
            let bin = WeightedIndex::new(weights)
                .expect("validated weights")
                .sample(rng);
            let edges = BinningConfig::default().interruption_edges;
            if bin + 1 == N_INTERRUPTION_BINS {
                let tail = Exp::new(1.0 / tail_mean_s)
                    .expect("validated mean")
                    .sample(rng);
                edges[bin - 1] + tail.max(1e-9)
            } else {
                let lo = if bin == 0 { 0.0 } else { edges[bin - 1] };
                left_open(rng, lo, edges[bin])
            }
        }
        StallDuration::Exponential { mean_s } => {
            let d = Exp::new(1.0 / mean_s).expect("validated mean").sample(rng);
            d.max(1e-6)
        }
        StallDuration::Uniform { min_s, max_s } => left_open(rng, *min_s, *max_s),
    }
}

fn generate_with(config: &GeneratorConfig, rng: &mut ChaCha8Rng) -> Result<SessionTrace> {
    let (min, max) = config.n_segments.bounds();
    let n = rng.random_range(min..=max);
    let level_dist = WeightedIndex::new(config.initial_level)
        .map_err(|e| Error::Usage(format!("initial_level: {e}")))?;
    let t = config.transition;
    let move_dist = WeightedIndex::new([t.up, t.down, t.stay])
        .map_err(|e| Error::Usage(format!("transition: {e}")))?;
    let step_dist = WeightedIndex::new(config.step_sizes)
        .map_err(|e| Error::Usage(format!("step_sizes: {e}")))?;

    let mut level = level_dist.sample(rng) as i32 + 1;
    let mut segments = Vec::with_capacity(n);
    let mut stalls = Vec::new();
    for k in 0..n {
        if k > 0 {
            let step = step_dist.sample(rng) as i32 + 1;
            level = match move_dist.sample(rng) {
                0 => (level + step).min(N_QUALITY_BINS as i32),
                1 => (level - step).max(1),
                _ => level,
            };
        }
        let offset = if config.jitter > 0.0 {
            rng.random_range(-config.jitter..=config.jitter)
        } else {
            0.0
        };
        segments.push((level as f64 + offset).clamp(MIN_MOS, MAX_MOS));
        if k + 1 < n && rng.random_bool(config.stall_prob_per_boundary) {
            stalls.push(InterruptionEvent::new(
                k + 1,
                sample_stall(rng, &config.stall_duration),
            ));
        }
    }
    let trace = SessionTrace::new(segments, stalls)?;
    let tag = trace.factor_tag();
    Ok(trace.with_tag(tag))
}

/// One session from stream 0 of the configured seed.
pub fn generate_session(config: &GeneratorConfig) -> Result<SessionTrace> {
    config.validate()?;
    generate_with(config, &mut config.session_rng(0))
}

/// `count` sessions; session `k` comes from stream `k`.
pub fn generate_sessions(config: &GeneratorConfig, count: usize) -> Result<Vec<SessionTrace>> {
    config.validate()?;
    (0..count)
        .into_par_iter()
        .map(|k| {
            generate_with(config, &mut config.session_rng(k)).map(|s| s.with_id(format!("s{k}")))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelOptions {
    /// Standard deviation of zero-mean Gaussian label noise.
    pub noise_sd: f64,
    /// Redraw sessions whose unclamped score is below 1 MOS.
    pub reject_clamped: bool,
    /// Redraws allowed per session before giving up.
    pub max_attempts: usize,
}

impl Default for LabelOptions {
    fn default() -> Self {
        Self {
            noise_sd: 0.0,
            reject_clamped: false,
            max_attempts: 1000,
        }
    }
}

fn labeled_session(
    config: &GeneratorConfig,
    labeler: &ModelWeights,
    options: &LabelOptions,
    binning: &BinningConfig,
    noise: Option<&Normal<f64>>,
    index: usize,
) -> Result<SessionTrace> {
    let mut rng = config.session_rng(index);
    for _ in 0..options.max_attempts.max(1) {
        let trace = generate_with(config, &mut rng)?;
        let fv = extract_features(&trace, binning)?;
        if options.reject_clamped && unclamped_score(&fv, labeler) < MIN_MOS {
            continue;
        }
        let mut label = predict_features(&fv, labeler);
        if let Some(n) = noise {
            label += n.sample(&mut rng);
        }
        return trace
            .with_mos(label.clamp(MIN_MOS, MAX_MOS))
            .map(|t| t.with_id(format!("s{index}")));
    }
    Err(Error::Usage(format!(
        "session {index}: no unclamped session after {} attempts",
        options.max_attempts
    )))
}

/// Sessions labeled by the model with `labeler` weights, optionally with
/// Gaussian noise; labels are clamped to `[1, 5]`.
pub fn generate_labeled_dataset(
    config: &GeneratorConfig,
    n_sessions: usize,
    labeler: &ModelWeights,
    options: &LabelOptions,
) -> Result<LabeledDataset> {
    if n_sessions == 0 {
        return Err(Error::Usage("requested zero sessions".into()));
    }
    config.validate()?;
    if !(options.noise_sd >= 0.0 && options.noise_sd.is_finite()) {
        return Err(Error::Usage(format!(
            "noise sd {} must be non-negative",
            options.noise_sd
        )));
    }
    let noise =
        (options.noise_sd > 0.0).then(|| Normal::new(0.0, options.noise_sd).expect("validated sd"));
    let binning = BinningConfig::default();
    let sessions = (0..n_sessions)
        .into_par_iter()
        .map(|k| labeled_session(config, labeler, options, &binning, noise.as_ref(), k))
        .collect::<Result<Vec<_>>>()?;
    LabeledDataset::new(sessions)
}

/// Count of sessions per factor tag, as `(single, multi)`.
pub fn tag_counts(sessions: &[SessionTrace]) -> (usize, usize) {
    let multi = sessions
        .iter()
        .filter(|s| s.factor_tag() == FactorTag::MultiFactor)
        .count();
    (sessions.len() - multi, multi)
}
