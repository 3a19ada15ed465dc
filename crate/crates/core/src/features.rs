//! Histogram features of a session.
//!
//! Quality-level frequencies are normalized by the number of segments. The
//! switch and interruption frequencies share one denominator: the number of
//! segment boundaries plus the number of interruptions. Every boundary is an
//! event, including boundaries where quality is maintained; those land in the
//! grouped non-negative bin together with up-switches.

use serde::{Deserialize, Serialize};

use crate::binning::{
    bin_quality, classify_switch, BinningConfig, DownSwitchBin, N_DOWN_SWITCH_BINS,
    N_INTERRUPTION_BINS, N_QUALITY_BINS,
};
use crate::error::Result;
use crate::session::SessionTrace;

/// Total number of model features (and weights).
pub const N_FEATURES: usize = N_QUALITY_BINS + N_DOWN_SWITCH_BINS + 1 + N_INTERRUPTION_BINS;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    pub f_quality: [f64; N_QUALITY_BINS],
    /// Indexed by [`DownSwitchBin::index`].
    pub f_downswitch: [f64; N_DOWN_SWITCH_BINS],
    pub f_um: f64,
    pub f_interruption: [f64; N_INTERRUPTION_BINS],
}

impl FeatureVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn downswitch(&self, bin: DownSwitchBin) -> f64 {
        self.f_downswitch[bin.index()]
    }

    pub fn quality_sum(&self) -> f64 {
        self.f_quality.iter().sum()
    }

    /// Sum of the switch and interruption frequencies.
    pub fn event_sum(&self) -> f64 {
        self.f_downswitch.iter().sum::<f64>() + self.f_um + self.f_interruption.iter().sum::<f64>()
    }

    /// Regression row: quality frequencies followed by the negated switch
    /// and interruption frequencies, so that `row . weights` is the
    /// unclamped prediction.
    pub fn design_row(&self) -> [f64; N_FEATURES] {
        let mut row = [0.0; N_FEATURES];
        let (q, rest) = row.split_at_mut(N_QUALITY_BINS);
        q.copy_from_slice(&self.f_quality);
        let (d, rest) = rest.split_at_mut(N_DOWN_SWITCH_BINS);
        for (dst, src) in d.iter_mut().zip(&self.f_downswitch) {
            *dst = -src;
        }
        rest[0] = -self.f_um;
        for (dst, src) in rest[1..].iter_mut().zip(&self.f_interruption) {
            *dst = -src;
        }
        row
    }
}

/// Build the histogram features of a session.
pub fn extract_features(trace: &SessionTrace, config: &BinningConfig) -> Result<FeatureVector> {
    let mut fv = FeatureVector::zero();
    let segments = trace.segments();

    let mut quality_counts = [0usize; N_QUALITY_BINS];
    for &q in segments {
        quality_counts[bin_quality(q)? as usize - 1] += 1;
    }

    let mut down_counts = [0usize; N_DOWN_SWITCH_BINS];
    let mut um_count = 0usize;
    for pair in segments.windows(2) {
        let event = classify_switch(pair[0], pair[1])?;
        match event.down_bin() {
            Some(bin) => down_counts[bin.index()] += 1,
            None => um_count += 1,
        }
    }

    let mut stall_counts = [0usize; N_INTERRUPTION_BINS];
    for stall in trace.interruptions() {
        stall_counts[config.bin_interruption(stall.duration_s)? - 1] += 1;
    }

    let n_segments = segments.len() as f64;
    for (f, &c) in fv.f_quality.iter_mut().zip(&quality_counts) {
        *f = c as f64 / n_segments;
    }

    let events = trace.n_boundaries() + trace.interruptions().len();
    if events > 0 {
        let total = events as f64;
        for (f, &c) in fv.f_downswitch.iter_mut().zip(&down_counts) {
            *f = c as f64 / total;
        }
        fv.f_um = um_count as f64 / total;
        for (f, &c) in fv.f_interruption.iter_mut().zip(&stall_counts) {
            *f = c as f64 / total;
        }
    }
    Ok(fv)
}
