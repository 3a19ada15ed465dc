//! The 22 model weights and their JSON file format.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::binning::{DownSwitchBin, N_DOWN_SWITCH_BINS, N_INTERRUPTION_BINS, N_QUALITY_BINS};
use crate::error::{Error, Result};
use crate::features::N_FEATURES;

/// Bundled reference weights, as shipped in `resources/reference_weights.json`.
pub const REFERENCE_WEIGHTS_JSON: &str = include_str!("../resources/reference_weights.json");

/// Name under which the bundled weights are addressable from the command line.
pub const REFERENCE_WEIGHTS_NAME: &str = "reference";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelWeights {
    /// Quality level weights, bins 1 to 5.
    pub alpha: [f64; N_QUALITY_BINS],
    /// Down-switch weights, indexed by [`DownSwitchBin::index`].
    pub beta_down: [f64; N_DOWN_SWITCH_BINS],
    /// Weight of the grouped up-switch / maintaining bin.
    pub beta_um: f64,
    /// Interruption duration weights, bins 1 to 6.
    pub gamma: [f64; N_INTERRUPTION_BINS],
}

impl ModelWeights {
    /// Reference weights fitted on a 288-session subjective database
    /// (the split with the best test correlation).
    pub fn reference() -> Self {
        let mut beta_down = [0.0; N_DOWN_SWITCH_BINS];
        for (i, j, w) in [
            (5, -1, 0.01),
            (4, -1, 0.01),
            (3, -1, 3.93),
            (2, -1, 7.89),
            (5, -2, 3.93),
            (4, -2, 4.13),
            (3, -2, 14.36),
            (5, -3, 18.69),
            (4, -3, 18.99),
            (5, -4, 24.76),
        ] {
            beta_down[DownSwitchBin::new(i, j).unwrap().index()] = w;
        }
        Self {
            alpha: [1.11, 2.20, 3.20, 4.00, 4.50],
            beta_down,
            beta_um: 0.0,
            gamma: [0.00, 8.42, 16.15, 24.16, 45.58, 50.65],
        }
    }

    pub fn zeros() -> Self {
        Self::from_vector(&[0.0; N_FEATURES])
    }

    pub fn beta(&self, bin: DownSwitchBin) -> f64 {
        self.beta_down[bin.index()]
    }

    /// Weight of down-switch bin `(i, j)`, or `None` for unreachable bins.
    pub fn beta_at(&self, start: u8, amplitude: i8) -> Option<f64> {
        DownSwitchBin::new(start, amplitude).map(|b| self.beta(b))
    }

    /// Flatten in the order alpha, beta_down, beta_um, gamma, matching
    /// [`crate::FeatureVector::design_row`].
    pub fn to_vector(&self) -> [f64; N_FEATURES] {
        let mut v = [0.0; N_FEATURES];
        v[..5].copy_from_slice(&self.alpha);
        v[5..15].copy_from_slice(&self.beta_down);
        v[15] = self.beta_um;
        v[16..].copy_from_slice(&self.gamma);
        v
    }

    pub fn from_vector(v: &[f64; N_FEATURES]) -> Self {
        let mut w = Self {
            alpha: [0.0; N_QUALITY_BINS],
            beta_down: [0.0; N_DOWN_SWITCH_BINS],
            beta_um: v[15],
            gamma: [0.0; N_INTERRUPTION_BINS],
        };
        w.alpha.copy_from_slice(&v[..5]);
        w.beta_down.copy_from_slice(&v[5..15]);
        w.gamma.copy_from_slice(&v[16..]);
        w
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_vector(&self.to_vector().map(|x| x * c))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&WeightsFile::from(self)).expect("weights always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: WeightsFile = serde_json::from_str(text).map_err(|source| Error::Parse {
            record: None,
            source,
        })?;
        Self::try_from(file)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaEntry {
    pub i: u8,
    pub j: i8,
    pub w: f64,
}

/// JSON layout of a weights file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsFile {
    pub alpha: Vec<f64>,
    pub beta_down: Vec<BetaEntry>,
    pub beta_um: f64,
    pub gamma: Vec<f64>,
}

impl From<&ModelWeights> for WeightsFile {
    fn from(w: &ModelWeights) -> Self {
        WeightsFile {
            alpha: w.alpha.to_vec(),
            beta_down: DownSwitchBin::ALL
                .iter()
                .map(|b| BetaEntry {
                    i: b.start(),
                    j: b.amplitude(),
                    w: w.beta(*b),
                })
                .collect(),
            beta_um: w.beta_um,
            gamma: w.gamma.to_vec(),
        }
    }
}

impl TryFrom<WeightsFile> for ModelWeights {
    type Error = Error;

    fn try_from(file: WeightsFile) -> Result<Self> {
        let alpha: [f64; N_QUALITY_BINS] = file.alpha.as_slice().try_into().map_err(|_| {
            Error::invalid(format!(
                "alpha needs {N_QUALITY_BINS} values, got {}",
                file.alpha.len()
            ))
        })?;
        let gamma: [f64; N_INTERRUPTION_BINS] = file.gamma.as_slice().try_into().map_err(|_| {
            Error::invalid(format!(
                "gamma needs {N_INTERRUPTION_BINS} values, got {}",
                file.gamma.len()
            ))
        })?;
        let mut beta_down = [0.0; N_DOWN_SWITCH_BINS];
        let mut seen = BTreeSet::new();
        for entry in &file.beta_down {
            let bin = DownSwitchBin::new(entry.i, entry.j).ok_or_else(|| {
                Error::invalid(format!(
                    "beta_down bin ({}, {}) is not reachable",
                    entry.i, entry.j
                ))
            })?;
            if !seen.insert(bin) {
                return Err(Error::invalid(format!(
                    "beta_down bin ({}, {}) given twice",
                    entry.i, entry.j
                )));
            }
            beta_down[bin.index()] = entry.w;
        }
        if seen.len() != N_DOWN_SWITCH_BINS {
            return Err(Error::invalid(format!(
                "beta_down must list all {N_DOWN_SWITCH_BINS} reachable bins, got {}",
                seen.len()
            )));
        }
        let weights = ModelWeights {
            alpha,
            beta_down,
            beta_um: file.beta_um,
            gamma,
        };
        if weights.to_vector().iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("weights must be finite"));
        }
        Ok(weights)
    }
}
