//! Session traces and their JSON representation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::binning::{bin_amplitude, MAX_MOS, MIN_MOS};
use crate::error::{Error, Result};

/// A playback stall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterruptionEvent {
    /// Number of segments fully played before the stall.
    pub after_segment: usize,
    pub duration_s: f64,
}

impl InterruptionEvent {
    pub fn new(after_segment: usize, duration_s: f64) -> Self {
        Self {
            after_segment,
            duration_s,
        }
    }
}

/// Whether a session exercises one impairment factor or both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FactorTag {
    #[serde(rename = "single-factor")]
    SingleFactor,
    #[serde(rename = "multi-factor")]
    MultiFactor,
}

impl fmt::Display for FactorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FactorTag::SingleFactor => "single-factor",
            FactorTag::MultiFactor => "multi-factor",
        })
    }
}

impl FromStr for FactorTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single-factor" | "single" => Ok(FactorTag::SingleFactor),
            "multi-factor" | "multi" => Ok(FactorTag::MultiFactor),
            other => Err(Error::Usage(format!("unknown factor tag {other:?}"))),
        }
    }
}

/// On-disk form of a session. Converted into a [`SessionTrace`] through
/// validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub segments: Vec<f64>,
    #[serde(default)]
    pub interruptions: Vec<InterruptionEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mos: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<FactorTag>,
}

/// A validated streaming session: per-segment quality values in MOS plus
/// the stalls that occurred during playback.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionTrace {
    id: Option<String>,
    segments: Vec<f64>,
    interruptions: Vec<InterruptionEvent>,
    ground_truth_mos: Option<f64>,
    tag: Option<FactorTag>,
}

fn in_mos_range(v: f64) -> bool {
    (MIN_MOS..=MAX_MOS).contains(&v)
}

impl SessionTrace {
    pub fn new(segments: Vec<f64>, interruptions: Vec<InterruptionEvent>) -> Result<Self> {
        let trace = Self {
            id: None,
            segments,
            interruptions,
            ground_truth_mos: None,
            tag: None,
        };
        trace.validate()?;
        Ok(trace)
    }

    /// Session with constant quality and no stalls.
    pub fn constant(level: f64, n_segments: usize) -> Result<Self> {
        Self::new(vec![level; n_segments], Vec::new())
    }

    fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::invalid("session has no segments"));
        }
        if let Some((k, q)) = self
            .segments
            .iter()
            .enumerate()
            .find(|(_, q)| !in_mos_range(**q))
        {
            return Err(Error::invalid(format!(
                "segment {k} quality {q} outside [{MIN_MOS}, {MAX_MOS}]"
            )));
        }
        let n = self.segments.len();
        for (k, stall) in self.interruptions.iter().enumerate() {
            if !(stall.duration_s > 0.0 && stall.duration_s.is_finite()) {
                return Err(Error::invalid(format!(
                    "interruption {k} duration {} must be positive",
                    stall.duration_s
                )));
            }
            if stall.after_segment == 0 {
                return Err(Error::invalid(format!(
                    "interruption {k} occurs before playback starts (initial delay is not modeled)"
                )));
            }
            if stall.after_segment > n {
                return Err(Error::invalid(format!(
                    "interruption {k} after segment {} but session has {n} segments",
                    stall.after_segment
                )));
            }
        }
        if let Some(mos) = self.ground_truth_mos {
            if !in_mos_range(mos) {
                return Err(Error::invalid(format!(
                    "ground-truth MOS {mos} outside [{MIN_MOS}, {MAX_MOS}]"
                )));
            }
        }
        Ok(())
    }

    pub fn with_mos(mut self, mos: f64) -> Result<Self> {
        self.ground_truth_mos = Some(mos);
        self.validate()?;
        Ok(self)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn with_tag(mut self, tag: FactorTag) -> Self {
        self.tag = Some(tag);
        self
    }

    pub fn segments(&self) -> &[f64] {
        &self.segments
    }

    pub fn interruptions(&self) -> &[InterruptionEvent] {
        &self.interruptions
    }

    pub fn ground_truth_mos(&self) -> Option<f64> {
        self.ground_truth_mos
    }

    pub fn id(&self) -> Option<&str> {
        self.id.as_deref()
    }

    /// Number of segment boundaries (one switch event each).
    pub fn n_boundaries(&self) -> usize {
        self.segments.len() - 1
    }

    /// Explicit tag if present, otherwise inferred: a session is
    /// multi-factor when it both switches quality and stalls. Drift within
    /// half a quality step is not a switch.
    pub fn factor_tag(&self) -> FactorTag {
        self.tag.unwrap_or_else(|| {
            let varies = self
                .segments
                .windows(2)
                .any(|w| bin_amplitude(w[1] - w[0]) != 0);
            if varies && !self.interruptions.is_empty() {
                FactorTag::MultiFactor
            } else {
                FactorTag::SingleFactor
            }
        })
    }

    pub fn explicit_tag(&self) -> Option<FactorTag> {
        self.tag
    }

    pub fn to_record(&self) -> TraceRecord {
        TraceRecord {
            id: self.id.clone(),
            segments: self.segments.clone(),
            interruptions: self.interruptions.clone(),
            mos: self.ground_truth_mos,
            tag: self.tag,
        }
    }
}

impl TryFrom<TraceRecord> for SessionTrace {
    type Error = Error;

    fn try_from(record: TraceRecord) -> Result<Self> {
        let trace = SessionTrace {
            id: record.id,
            segments: record.segments,
            interruptions: record.interruptions,
            ground_truth_mos: record.mos,
            tag: record.tag,
        };
        trace.validate()?;
        Ok(trace)
    }
}

/// Parse a single session, a JSON array of sessions, or newline-delimited
/// JSON sessions. Errors carry the index of the offending record.
pub fn parse_sessions(text: &str) -> Result<Vec<SessionTrace>> {
    let trimmed = text.trim_start();
    let records: Vec<TraceRecord> = if trimmed.starts_with('[') {
        let values: Vec<serde_json::Value> =
            serde_json::from_str(trimmed).map_err(|source| Error::Parse {
                record: None,
                source,
            })?;
        values
            .into_iter()
            .enumerate()
            .map(|(k, v)| {
                serde_json::from_value(v).map_err(|source| Error::Parse {
                    record: Some(k),
                    source,
                })
            })
            .collect::<Result<_>>()?
    } else {
        serde_json::Deserializer::from_str(trimmed)
            .into_iter::<TraceRecord>()
            .enumerate()
            .map(|(k, r)| {
                r.map_err(|source| Error::Parse {
                    record: Some(k),
                    source,
                })
            })
            .collect::<Result<_>>()?
    };
    records
        .into_iter()
        .enumerate()
        .map(|(k, r)| SessionTrace::try_from(r).map_err(|e| e.at_record(k)))
        .collect()
}

/// Serialize sessions as a pretty-printed JSON array.
pub fn sessions_to_json(sessions: &[SessionTrace]) -> String {
    let records: Vec<TraceRecord> = sessions.iter().map(SessionTrace::to_record).collect();
    serde_json::to_string_pretty(&records).expect("trace records always serialize")
}
