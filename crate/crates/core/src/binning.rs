//! Binning rules for segment quality values, switching amplitudes and
//! interruption durations.
//!
//! Quality and amplitude intervals are closed on the left and open on the
//! right (`[n - 0.5, n + 0.5)`). Interruption intervals are open on the left
//! and closed on the right (`(0, 0.25]`, `(0.25, 0.5]`, ...).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of segment quality bins.
pub const N_QUALITY_BINS: usize = 5;
/// Largest switching amplitude bin magnitude.
pub const MAX_AMPLITUDE: i8 = 4;
/// Half width of every quality and amplitude interval, in MOS.
pub const HALF_WIDTH: f64 = 0.5;
/// Number of interruption duration bins.
pub const N_INTERRUPTION_BINS: usize = 6;
/// Number of down-switch bins that can actually be reached.
pub const N_DOWN_SWITCH_BINS: usize = 10;

pub const MIN_MOS: f64 = 1.0;
pub const MAX_MOS: f64 = 5.0;

/// Upper edges (inclusive) of the first five interruption bins, in seconds.
pub const DEFAULT_INTERRUPTION_EDGES: [f64; N_INTERRUPTION_BINS - 1] = [0.25, 0.5, 1.0, 2.0, 3.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinningConfig {
    /// Right-closed boundaries between consecutive interruption bins.
    pub interruption_edges: [f64; N_INTERRUPTION_BINS - 1],
}

impl Default for BinningConfig {
    fn default() -> Self {
        Self {
            interruption_edges: DEFAULT_INTERRUPTION_EDGES,
        }
    }
}

impl BinningConfig {
    pub fn n_quality_bins(&self) -> usize {
        N_QUALITY_BINS
    }

    pub fn max_amplitude(&self) -> i8 {
        MAX_AMPLITUDE
    }

    pub fn half_width(&self) -> f64 {
        HALF_WIDTH
    }

    pub fn validate(&self) -> Result<()> {
        let edges = &self.interruption_edges;
        if !edges.iter().all(|e| e.is_finite() && *e > 0.0) {
            return Err(Error::Usage(format!(
                "interruption edges must be finite and positive: {edges:?}"
            )));
        }
        if !edges.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Usage(format!(
                "interruption edges must be strictly increasing: {edges:?}"
            )));
        }
        Ok(())
    }

    /// Interruption bin (1-based) for a stall of `duration_s` seconds.
    pub fn bin_interruption(&self, duration_s: f64) -> Result<usize> {
        if !(duration_s > 0.0) || duration_s.is_infinite() {
            return Err(Error::Domain {
                what: "interruption duration",
                value: duration_s,
            });
        }
        let below = self
            .interruption_edges
            .iter()
            .take_while(|&&edge| duration_s > edge)
            .count();
        Ok(below + 1)
    }
}

/// Index `k` such that `x` lies in `[k - 0.5, k + 0.5)`.
fn nearest_half_up(x: f64) -> i64 {
    let floor = x.floor();
    // exact for the magnitudes seen here
    let frac = x - floor;
    let k = floor as i64;
    if frac >= HALF_WIDTH {
        k + 1
    } else {
        k
    }
}

fn check_mos(q: f64) -> Result<f64> {
    if (MIN_MOS..=MAX_MOS).contains(&q) {
        Ok(q)
    } else {
        Err(Error::Domain {
            what: "segment quality",
            value: q,
        })
    }
}

/// Quality bin (1-based) of a segment quality value in `[1, 5]`.
pub fn bin_quality(q: f64) -> Result<u8> {
    let q = check_mos(q)?;
    Ok(nearest_half_up(q).clamp(1, N_QUALITY_BINS as i64) as u8)
}

/// Interruption bin under the default interval edges.
pub fn bin_interruption(duration_s: f64) -> Result<usize> {
    BinningConfig::default().bin_interruption(duration_s)
}

/// Amplitude bin of a raw quality difference, clamped to `[-4, 4]`.
pub fn bin_amplitude(delta: f64) -> i8 {
    let m = MAX_AMPLITUDE as i64;
    nearest_half_up(delta).clamp(-m, m) as i8
}

/// A quality switch between two consecutive segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SwitchEvent {
    pub starting_quality_bin: u8,
    pub amplitude_bin: i8,
}

impl SwitchEvent {
    pub fn is_down_switch(&self) -> bool {
        self.amplitude_bin < 0
    }

    /// The down-switch bin this event falls in, if it is a down-switch.
    pub fn down_bin(&self) -> Option<DownSwitchBin> {
        DownSwitchBin::new(self.starting_quality_bin, self.amplitude_bin)
    }
}

/// Bin the switch from `q_before` to `q_after`.
///
/// A down-switch whose amplitude bin would land below the first quality bin
/// is raised to the largest reachable amplitude for its starting bin.
pub fn classify_switch(q_before: f64, q_after: f64) -> Result<SwitchEvent> {
    let start = bin_quality(q_before)?;
    check_mos(q_after)?;
    Ok(SwitchEvent {
        starting_quality_bin: start,
        amplitude_bin: reachable_amplitude(start, bin_amplitude(q_after - q_before)),
    })
}

// For in-range MOS values a down-switch never lands below bin 1; this only
// guards against rounding in the difference.
fn reachable_amplitude(start: u8, amplitude: i8) -> i8 {
    if amplitude < 0 && (start as i8) + amplitude < 1 {
        -(start as i8 - 1)
    } else {
        amplitude
    }
}

/// One of the ten reachable down-switch bins `(i, j)` with
/// `2 <= i <= 5` and `-(i - 1) <= j <= -1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DownSwitchBin {
    start: u8,
    amplitude: i8,
}

impl DownSwitchBin {
    /// Canonical ordering used by feature and weight vectors.
    pub const ALL: [DownSwitchBin; N_DOWN_SWITCH_BINS] = [
        DownSwitchBin::raw(2, -1),
        DownSwitchBin::raw(3, -1),
        DownSwitchBin::raw(3, -2),
        DownSwitchBin::raw(4, -1),
        DownSwitchBin::raw(4, -2),
        DownSwitchBin::raw(4, -3),
        DownSwitchBin::raw(5, -1),
        DownSwitchBin::raw(5, -2),
        DownSwitchBin::raw(5, -3),
        DownSwitchBin::raw(5, -4),
    ];

    const fn raw(start: u8, amplitude: i8) -> Self {
        Self { start, amplitude }
    }

    pub fn new(start: u8, amplitude: i8) -> Option<Self> {
        let valid = (2..=N_QUALITY_BINS as u8).contains(&start)
            && amplitude <= -1
            && start as i8 + amplitude >= 1;
        valid.then_some(Self { start, amplitude })
    }

    pub fn start(&self) -> u8 {
        self.start
    }

    pub fn amplitude(&self) -> i8 {
        self.amplitude
    }

    /// Position in [`DownSwitchBin::ALL`].
    pub fn index(&self) -> usize {
        let i = self.start as usize;
        let offset = (2..i).map(|s| s - 1).sum::<usize>();
        offset + (-self.amplitude) as usize - 1
    }
}
