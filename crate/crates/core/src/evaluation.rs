//! Prediction metrics, linear compensation and the repeated random
//! train/test split protocol.

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::LabeledDataset;
use crate::session::{FactorTag, SessionTrace};

fn check_lengths(predictions: &[f64], truths: &[f64], min_len: usize) -> Result<()> {
    if predictions.len() != truths.len() {
        return Err(Error::Usage(format!(
            "{} predictions but {} ground-truth values",
            predictions.len(),
            truths.len()
        )));
    }
    if predictions.len() < min_len {
        return Err(Error::Usage(format!(
            "need at least {min_len} values, got {}",
            predictions.len()
        )));
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Pearson correlation coefficient.
pub fn pcc(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    check_lengths(predictions, truths, 2)?;
    let mp = mean(predictions);
    let mt = mean(truths);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (p, t) in predictions.iter().zip(truths) {
        let dp = p - mp;
        let dt = t - mt;
        sxy += dp * dt;
        sxx += dp * dp;
        syy += dt * dt;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Numerical(
            "correlation undefined for a constant sequence".into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Root mean squared error.
pub fn rmse(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    check_lengths(predictions, truths, 1)?;
    let mse = predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        / predictions.len() as f64;
    Ok(mse.sqrt())
}

/// First-order linear mapping of predictions onto the ground-truth scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearMap {
    pub slope: f64,
    pub intercept: f64,
}

impl LinearMap {
    pub fn identity() -> Self {
        Self {
            slope: 1.0,
            intercept: 0.0,
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    pub fn apply_all(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.apply(x)).collect()
    }
}

/// Least-squares fit of `truths ~ slope * predictions + intercept`.
pub fn fit_compensation(predictions: &[f64], truths: &[f64]) -> Result<LinearMap> {
    check_lengths(predictions, truths, 2)?;
    let mp = mean(predictions);
    let mt = mean(truths);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (p, t) in predictions.iter().zip(truths) {
        sxy += (p - mp) * (t - mt);
        sxx += (p - mp) * (p - mp);
    }
    if sxx == 0.0 {
        return Err(Error::Numerical(
            "cannot fit compensation to constant predictions".into(),
        ));
    }
    let slope = sxy / sxx;
    Ok(LinearMap {
        slope,
        intercept: mt - slope * mp,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Compensated {
    pub map: LinearMap,
    pub adjusted: Vec<f64>,
}

/// Fit the compensation map and apply it to the same predictions.
pub fn linear_compensate(predictions: &[f64], truths: &[f64]) -> Result<Compensated> {
    let map = fit_compensation(predictions, truths)?;
    Ok(Compensated {
        map,
        adjusted: map.apply_all(predictions),
    })
}

/// A model that can be trained on labeled sessions and then used to
/// predict.
pub trait SessionModel: Sync {
    fn name(&self) -> String;

    fn train(&self, sessions: &[SessionTrace]) -> Result<Box<dyn Predictor>>;
}

pub trait Predictor: Send + Sync {
    fn predict(&self, sessions: &[SessionTrace]) -> Result<Vec<f64>>;
}

/// Where the compensation map is fitted during the split protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Compensation {
    /// Report raw predictions.
    None,
    /// Fit on the training portion, apply to the test portion.
    #[default]
    Training,
    /// Fit directly on the test portion.
    Test,
}

/// Which sessions may be drawn into a test set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestPool {
    All,
    MultiFactor,
    SingleFactor,
}

impl TestPool {
    fn admits(&self, session: &SessionTrace) -> bool {
        match self {
            TestPool::All => true,
            TestPool::MultiFactor => session.factor_tag() == FactorTag::MultiFactor,
            TestPool::SingleFactor => session.factor_tag() == FactorTag::SingleFactor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitProtocol {
    pub n_repetitions: usize,
    pub test_pool: TestPool,
    pub test_size: usize,
    pub rng_seed: u64,
}

impl SplitProtocol {
    /// 50 repetitions of 90 test sessions drawn from the multi-factor pool.
    pub fn standard(rng_seed: u64) -> Self {
        Self {
            n_repetitions: 50,
            test_pool: TestPool::MultiFactor,
            test_size: 90,
            rng_seed,
        }
    }

    /// Random generator for repetition `k`: the seed selects the key and
    /// the repetition index selects the ChaCha stream.
    pub fn split_rng(&self, k: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(k as u64);
        rng
    }

    /// Training and test indices of repetition `k`, both in dataset order.
    pub fn split_indices(
        &self,
        sessions: &[SessionTrace],
        k: usize,
    ) -> Result<(Vec<usize>, Vec<usize>)> {
        let pool: Vec<usize> = (0..sessions.len())
            .filter(|&i| self.test_pool.admits(&sessions[i]))
            .collect();
        if self.n_repetitions == 0 {
            return Err(Error::Usage(
                "split protocol needs at least one repetition".into(),
            ));
        }
        if self.test_size == 0 || self.test_size > pool.len() {
            return Err(Error::Usage(format!(
                "test size {} does not fit a test pool of {} sessions",
                self.test_size,
                pool.len()
            )));
        }
        let mut rng = self.split_rng(k);
        let mut in_test = vec![false; sessions.len()];
        for &i in pool.choose_multiple(&mut rng, self.test_size) {
            in_test[i] = true;
        }
        let (test, train): (Vec<usize>, Vec<usize>) =
            (0..sessions.len()).partition(|&i| in_test[i]);
        Ok((train, test))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub split: usize,
    pub pcc: f64,
    pub rmse: f64,
    pub train_pcc: Option<f64>,
    pub train_rmse: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intercept: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub pcc: f64,
    pub rmse: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intercept: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_pcc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_rmse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_split: Option<Vec<SplitResult>>,
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// Per-split metrics as CSV, six decimals. Empty body when the report
    /// did not come from the split protocol.
    pub fn per_split_csv(&self) -> String {
        let mut out = String::from("split,pcc,rmse,train_pcc,train_rmse,slope,intercept\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for r in self.per_split.iter().flatten() {
            out.push_str(&format!(
                "{},{:.6},{:.6},{},{:.6},{},{}\n",
                r.split,
                r.pcc,
                r.rmse,
                opt(r.train_pcc),
                r.train_rmse,
                opt(r.slope),
                opt(r.intercept)
            ));
        }
        out
    }
}

/// Score one set of predictions, optionally compensating on the same data.
pub fn evaluate_predictions(
    predictions: &[f64],
    truths: &[f64],
    compensate: bool,
) -> Result<EvaluationReport> {
    let (scored, map) = if compensate {
        let c = linear_compensate(predictions, truths)?;
        (c.adjusted, Some(c.map))
    } else {
        (predictions.to_vec(), None)
    };
    Ok(EvaluationReport {
        model: None,
        pcc: pcc(&scored, truths)?,
        rmse: rmse(&scored, truths)?,
        slope: map.map(|m| m.slope),
        intercept: map.map(|m| m.intercept),
        train_pcc: None,
        train_rmse: None,
        per_split: None,
    })
}

/// Train on the whole dataset and score on the whole dataset.
pub fn evaluate_model(
    dataset: &LabeledDataset,
    model: &dyn SessionModel,
    compensate: bool,
) -> Result<EvaluationReport> {
    let predictor = model.train(dataset.sessions())?;
    let predictions = predictor.predict(dataset.sessions())?;
    let mut report = evaluate_predictions(&predictions, &dataset.labels(), compensate)?;
    report.model = Some(model.name());
    Ok(report)
}

fn run_split(
    sessions: &[SessionTrace],
    protocol: &SplitProtocol,
    model: &dyn SessionModel,
    compensation: Compensation,
    k: usize,
) -> Result<SplitResult> {
    let (train_idx, test_idx) = protocol.split_indices(sessions, k)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| sessions[i].clone()).collect::<Vec<_>>();
    let labels = |s: &[SessionTrace]| {
        s.iter()
            .map(|t| t.ground_truth_mos().expect("labeled dataset"))
            .collect::<Vec<_>>()
    };
    let train = pick(&train_idx);
    let test = pick(&test_idx);
    let train_truth = labels(&train);
    let test_truth = labels(&test);

    let predictor = model.train(&train)?;
    let mut train_pred = predictor.predict(&train)?;
    let mut test_pred = predictor.predict(&test)?;

    let map = match compensation {
        Compensation::None => None,
        Compensation::Training => Some(fit_compensation(&train_pred, &train_truth)?),
        Compensation::Test => Some(fit_compensation(&test_pred, &test_truth)?),
    };
    if let Some(m) = map {
        train_pred = m.apply_all(&train_pred);
        test_pred = m.apply_all(&test_pred);
    }

    Ok(SplitResult {
        split: k,
        pcc: pcc(&test_pred, &test_truth)?,
        rmse: rmse(&test_pred, &test_truth)?,
        train_pcc: pcc(&train_pred, &train_truth).ok(),
        train_rmse: rmse(&train_pred, &train_truth)?,
        slope: map.map(|m| m.slope),
        intercept: map.map(|m| m.intercept),
    })
}

fn assemble(model: &dyn SessionModel, per_split: Vec<SplitResult>) -> EvaluationReport {
    let avg = |f: &dyn Fn(&SplitResult) -> f64| {
        per_split.iter().map(f).sum::<f64>() / per_split.len() as f64
    };
    let avg_opt = |f: &dyn Fn(&SplitResult) -> Option<f64>| {
        let vals: Option<Vec<f64>> = per_split.iter().map(f).collect();
        vals.map(|v| mean(&v))
    };
    EvaluationReport {
        model: Some(model.name()),
        pcc: avg(&|r| r.pcc),
        rmse: avg(&|r| r.rmse),
        slope: avg_opt(&|r| r.slope),
        intercept: avg_opt(&|r| r.intercept),
        train_pcc: avg_opt(&|r| r.train_pcc),
        train_rmse: Some(avg(&|r| r.train_rmse)),
        per_split: Some(per_split),
    }
}

/// Repeated random subsampling: each repetition draws a test set from the
/// test pool, trains on the remaining sessions and scores the test set.
/// Reported metrics are the means over repetitions. Repetitions run in
/// parallel; the result does not depend on scheduling.
pub fn run_split_protocol(
    dataset: &LabeledDataset,
    protocol: &SplitProtocol,
    model: &dyn SessionModel,
    compensation: Compensation,
) -> Result<EvaluationReport> {
    let sessions = dataset.sessions();
    protocol.split_indices(sessions, 0)?;
    let per_split = (0..protocol.n_repetitions)
        .into_par_iter()
        .map(|k| run_split(sessions, protocol, model, compensation, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(model, per_split))
}

/// Single-threaded variant of [`run_split_protocol`].
pub fn run_split_protocol_serial(
    dataset: &LabeledDataset,
    protocol: &SplitProtocol,
    model: &dyn SessionModel,
    compensation: Compensation,
) -> Result<EvaluationReport> {
    let sessions = dataset.sessions();
    protocol.split_indices(sessions, 0)?;
    let per_split = (0..protocol.n_repetitions)
        .map(|k| run_split(sessions, protocol, model, compensation, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(model, per_split))
}
