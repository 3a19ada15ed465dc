//! Session statistics used by the comparison models, with injectable or
//! fitted linear coefficients.
//!
//! Only the statistics are provided here. Coefficients either come from
//! the original studies (supplied by the caller as JSON) or are fitted by
//! least squares on a training set.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::binning::{bin_amplitude, MAX_MOS, MIN_MOS};
use crate::error::{Error, Result};
use crate::evaluation::{Predictor, SessionModel};
use crate::lstsq;
use crate::session::SessionTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StdConvention {
    /// Divide by `n`.
    #[default]
    Population,
    /// Divide by `n - 1` (zero for a single segment).
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuoStats {
    pub median: f64,
    pub minimum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VriendtStats {
    pub switch_count: usize,
    pub mean: f64,
    pub std_dev: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiuStats {
    /// Quality levels weighted by their share of presence time.
    pub weighted_sum: f64,
    /// Mean of squared down-switch amplitudes, zero without down-switches.
    pub mean_sq_down: f64,
    pub stall_sum: f64,
    pub stall_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineFeatures {
    pub guo: GuoStats,
    pub vriendt: VriendtStats,
    pub liu: LiuStats,
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

pub fn extract_baseline_features(trace: &SessionTrace) -> BaselineFeatures {
    extract_baseline_features_with(trace, StdConvention::default())
}

pub fn extract_baseline_features_with(
    trace: &SessionTrace,
    std: StdConvention,
) -> BaselineFeatures {
    let q = trace.segments();
    let n = q.len() as f64;
    // shifted by the first value so constant sessions give an exact mean
    let mean = q[0] + q.iter().map(|x| x - q[0]).sum::<f64>() / n;
    let ss: f64 = q.iter().map(|x| (x - mean).powi(2)).sum();
    let std_dev = match std {
        StdConvention::Population => (ss / n).sqrt(),
        StdConvention::Sample if q.len() > 1 => (ss / (n - 1.0)).sqrt(),
        StdConvention::Sample => 0.0,
    };
    let minimum = q.iter().copied().fold(f64::INFINITY, f64::min);

    let switch_count = q
        .windows(2)
        .filter(|w| bin_amplitude(w[1] - w[0]) != 0)
        .count();

    let downs: Vec<f64> = q
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d < 0.0)
        .collect();
    let mean_sq_down = if downs.is_empty() {
        0.0
    } else {
        downs.iter().map(|d| d * d).sum::<f64>() / downs.len() as f64
    };

    // every segment has the same duration, so its presence share is 1/n
    let weighted_sum = q.iter().map(|x| x / n).sum();

    let stalls = trace.interruptions();
    BaselineFeatures {
        guo: GuoStats {
            median: median(q),
            minimum,
        },
        vriendt: VriendtStats {
            switch_count,
            mean,
            std_dev,
        },
        liu: LiuStats {
            weighted_sum,
            mean_sq_down,
            stall_sum: stalls.iter().map(|s| s.duration_s).sum(),
            stall_count: stalls.len(),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Guo,
    Vriendt,
    Liu,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] =
        [BaselineKind::Guo, BaselineKind::Vriendt, BaselineKind::Liu];

    pub fn statistic_names(&self) -> &'static [&'static str] {
        match self {
            BaselineKind::Guo => &["median", "minimum"],
            BaselineKind::Vriendt => &["switch_count", "mean", "std_dev"],
            BaselineKind::Liu => &["weighted_sum", "mean_sq_down", "stall_sum", "stall_count"],
        }
    }

    /// Statistic values in the order of [`BaselineKind::statistic_names`].
    pub fn statistics(&self, f: &BaselineFeatures) -> Vec<f64> {
        match self {
            BaselineKind::Guo => vec![f.guo.median, f.guo.minimum],
            BaselineKind::Vriendt => vec![
                f.vriendt.switch_count as f64,
                f.vriendt.mean,
                f.vriendt.std_dev,
            ],
            BaselineKind::Liu => vec![
                f.liu.weighted_sum,
                f.liu.mean_sq_down,
                f.liu.stall_sum,
                f.liu.stall_count as f64,
            ],
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::Guo => "guo",
            BaselineKind::Vriendt => "vriendt",
            BaselineKind::Liu => "liu",
        })
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "guo" => Ok(BaselineKind::Guo),
            "vriendt" => Ok(BaselineKind::Vriendt),
            "liu" => Ok(BaselineKind::Liu),
            other => Err(Error::Usage(format!("unknown baseline model {other:?}"))),
        }
    }
}

/// Linear coefficients of a baseline model, in its JSON layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineCoefficients {
    pub model: BaselineKind,
    pub coefficients: BTreeMap<String, f64>,
    pub intercept: f64,
}

impl BaselineCoefficients {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|source| Error::Parse {
            record: None,
            source,
        })?;
        c.ordered()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("coefficients always serialize")
    }

    /// Coefficients in statistic order; every statistic must be present
    /// and no unknown names are allowed.
    pub fn ordered(&self) -> Result<Vec<f64>> {
        let names = self.model.statistic_names();
        if let Some(unknown) = self
            .coefficients
            .keys()
            .find(|k| !names.contains(&k.as_str()))
        {
            return Err(Error::Usage(format!(
                "{} has no statistic named {unknown:?}",
                self.model
            )));
        }
        names
            .iter()
            .map(|name| {
                self.coefficients.get(*name).copied().ok_or_else(|| {
                    Error::Usage(format!("missing {} coefficient {name:?}", self.model))
                })
            })
            .collect()
    }
}

/// Linear combination of the model's statistics, clamped to `[1, 5]`.
pub fn baseline_predict(
    features: &BaselineFeatures,
    coefficients: &BaselineCoefficients,
) -> Result<f64> {
    let c = coefficients.ordered()?;
    let stats = coefficients.model.statistics(features);
    let raw = coefficients.intercept + c.iter().zip(&stats).map(|(a, s)| a * s).sum::<f64>();
    Ok(raw.clamp(MIN_MOS, MAX_MOS))
}

/// Least-squares coefficients (with intercept) for `kind` on labeled sessions.
pub fn fit_baseline(
    kind: BaselineKind,
    sessions: &[SessionTrace],
    std: StdConvention,
) -> Result<BaselineCoefficients> {
    if sessions.is_empty() {
        return Err(Error::Usage(
            "cannot fit a baseline on an empty dataset".into(),
        ));
    }
    let names = kind.statistic_names();
    let rows: Vec<Vec<f64>> = sessions
        .iter()
        .map(|s| kind.statistics(&extract_baseline_features_with(s, std)))
        .collect();
    let labels = sessions
        .iter()
        .enumerate()
        .map(|(k, s)| {
            s.ground_truth_mos()
                .ok_or_else(|| Error::Usage(format!("session {k} has no ground-truth MOS")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let cols = names.len() + 1;
    let design = DMatrix::from_fn(rows.len(), cols, |r, c| {
        if c < names.len() {
            rows[r][c]
        } else {
            1.0
        }
    });
    let sol = lstsq::solve(&design, &DVector::from_vec(labels))?;
    Ok(BaselineCoefficients {
        model: kind,
        coefficients: names
            .iter()
            .enumerate()
            .map(|(k, n)| (n.to_string(), sol.x[k]))
            .collect(),
        intercept: sol.x[names.len()],
    })
}

/// A comparison model: fixed coefficients, or refitted on each training set.
#[derive(Debug, Clone)]
pub struct BaselineModel {
    pub kind: BaselineKind,
    pub coefficients: Option<BaselineCoefficients>,
    pub std: StdConvention,
}

impl BaselineModel {
    pub fn fitted(kind: BaselineKind) -> Self {
        Self {
            kind,
            coefficients: None,
            std: StdConvention::default(),
        }
    }

    pub fn with_coefficients(coefficients: BaselineCoefficients) -> Self {
        Self {
            kind: coefficients.model,
            coefficients: Some(coefficients),
            std: StdConvention::default(),
        }
    }
}

struct BaselinePredictor {
    coefficients: BaselineCoefficients,
    std: StdConvention,
}

impl Predictor for BaselinePredictor {
    fn predict(&self, sessions: &[SessionTrace]) -> Result<Vec<f64>> {
        sessions
            .iter()
            .map(|s| {
                baseline_predict(
                    &extract_baseline_features_with(s, self.std),
                    &self.coefficients,
                )
            })
            .collect()
    }
}

impl SessionModel for BaselineModel {
    fn name(&self) -> String {
        match self.coefficients {
            Some(_) => format!("{} (given coefficients)", self.kind),
            None => format!("{} (fitted)", self.kind),
        }
    }

    fn train(&self, sessions: &[SessionTrace]) -> Result<Box<dyn Predictor>> {
        let coefficients = match &self.coefficients {
            Some(c) => {
                if c.model != self.kind {
                    return Err(Error::Usage(format!(
                        "coefficients are for {} but model is {}",
                        c.model, self.kind
                    )));
                }
                c.clone()
            }
            None => fit_baseline(self.kind, sessions, self.std)?,
        };
        Ok(Box::new(BaselinePredictor {
            coefficients,
            std: self.std,
        }))
    }
}

/// Predictions computed elsewhere (for example by a reference
/// implementation of a standardized model), keyed by session id.
#[derive(Debug, Clone, Default)]
pub struct ExternalPredictions {
    pub name: String,
    pub by_id: HashMap<String, f64>,
}

impl ExternalPredictions {
    /// Read `session-id,predicted-mos` rows. A header row is skipped when
    /// its second column is not a number.
    pub fn from_csv(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut by_id = HashMap::new();
        for (k, row) in reader.records().enumerate() {
            let row = row?;
            if row.len() < 2 {
                return Err(Error::Validation {
                    record: Some(k),
                    reason: "expected session-id,predicted-mos".into(),
                });
            }
            match row[1].parse::<f64>() {
                Ok(v) => {
                    if by_id.insert(row[0].to_string(), v).is_some() {
                        return Err(Error::Validation {
                            record: Some(k),
                            reason: format!("duplicate session id {:?}", &row[0]),
                        });
                    }
                }
                Err(_) if k == 0 => continue,
                Err(_) => {
                    return Err(Error::Validation {
                        record: Some(k),
                        reason: format!("prediction {:?} is not a number", &row[1]),
                    })
                }
            }
        }
        Ok(Self {
            name: name.into(),
            by_id,
        })
    }
}

impl Predictor for ExternalPredictions {
    fn predict(&self, sessions: &[SessionTrace]) -> Result<Vec<f64>> {
        sessions
            .iter()
            .map(|s| {
                let id = s
                    .id()
                    .ok_or_else(|| Error::Usage("external predictions need session ids".into()))?;
                self.by_id.get(id).copied().ok_or_else(|| {
                    Error::Usage(format!("no external prediction for session {id:?}"))
                })
            })
            .collect()
    }
}

impl SessionModel for ExternalPredictions {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn train(&self, _sessions: &[SessionTrace]) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(self.clone()))
    }
}
