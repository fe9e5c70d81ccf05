//! Mel-scaled max pooling.
//!
//! Each 100-neuron feature map is reduced to 28 channels. The window
//! widths follow the Mel scale: stride 2 up to 1040 Hz (13 windows),
//! then 15 windows whose widths grow with frequency, the last one 10
//! bins wide. Within a window the neuron with the most spikes wins and
//! its whole spike train is passed through.

use std::fmt::Write as _;

use crate::conv::FeatureMaps;
use crate::error::{Error, Result};
use crate::raster::SpikeRaster;

/// Pooling windows per feature map.
pub const POOL_WINDOWS: usize = 28;
/// Total pooled channels (7 maps x 28 windows).
pub const POOLED_CHANNELS: usize = 7 * POOL_WINDOWS;
/// Input bins covered by the fixed stride-2 region.
const STRIDE2_BINS: usize = 26;
const STRIDE2_WINDOWS: usize = 13;
/// Windows constructed over the 1040-4000 Hz region.
const UPPER_WINDOWS: usize = 15;
const UPPER_BINS: usize = 74;
const FINAL_STRIDE: usize = 10;
const MIN_STRIDE: usize = 2;

/// Frequency (Hz) to Mel scale.
pub fn mel(frequency_hz: f64) -> Result<f64> {
    if frequency_hz.is_nan() || frequency_hz < 0.0 {
        return Err(Error::Config(format!(
            "mel() requires a non-negative frequency, got {frequency_hz}"
        )));
    }
    Ok(1125.0 * (1.0 + frequency_hz / 700.0).ln())
}

fn mel_inverse(m: f64) -> f64 {
    700.0 * ((m / 1125.0).exp() - 1.0)
}

/// One pooling window over input bins `[start, start + stride)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolWindow {
    pub start: usize,
    pub stride: usize,
}

/// The 28-window partition of the 100 input bins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolSchedule {
    windows: Vec<PoolWindow>,
}

impl PoolSchedule {
    pub fn windows(&self) -> &[PoolWindow] {
        &self.windows
    }

    pub fn strides(&self) -> Vec<usize> {
        self.windows.iter().map(|w| w.stride).collect()
    }

    /// Re-check every construction invariant.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(format!("pool schedule: {msg}")));
        if self.windows.len() != POOL_WINDOWS {
            return fail(format!("expected {POOL_WINDOWS} windows, got {}", self.windows.len()));
        }
        let mut next_start = 0;
        for (i, w) in self.windows.iter().enumerate() {
            if w.start != next_start {
                return fail(format!("window {i} starts at {} instead of {next_start}", w.start));
            }
            if w.stride < MIN_STRIDE {
                return fail(format!("window {i} stride {} below minimum", w.stride));
            }
            if i > 0 && w.stride < self.windows[i - 1].stride {
                return fail(format!("stride decreases at window {i}"));
            }
            if i < STRIDE2_WINDOWS && w.stride != 2 {
                return fail(format!("window {i} must have stride 2, got {}", w.stride));
            }
            next_start += w.stride;
        }
        if next_start != crate::conv::MAP_LEN {
            return fail(format!("windows cover {next_start} bins, expected 100"));
        }
        if self.windows.last().unwrap().stride != FINAL_STRIDE {
            return fail(format!(
                "final stride must be {FINAL_STRIDE}, got {}",
                self.windows.last().unwrap().stride
            ));
        }
        Ok(())
    }

    /// Text export: one line per window, `index start stride`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, w) in self.windows.iter().enumerate() {
            let _ = writeln!(out, "{} {} {}", i, w.start, w.stride);
        }
        out
    }
}

/// Ideal (real-valued) widths, in bins, of the 15 upper windows under
/// an equal-Mel split of [mel(1040), mel(4000)].
fn ideal_upper_widths() -> Vec<f64> {
    let lo = mel(STRIDE2_BINS as f64 * crate::frontend::BIN_HZ).expect("non-negative");
    let hi = mel(4000.0).expect("non-negative");
    let mut widths = Vec::with_capacity(UPPER_WINDOWS);
    let mut prev_f = STRIDE2_BINS as f64 * crate::frontend::BIN_HZ;
    for j in 1..=UPPER_WINDOWS {
        let f = mel_inverse(lo + (hi - lo) * j as f64 / UPPER_WINDOWS as f64);
        widths.push((f - prev_f) / crate::frontend::BIN_HZ);
        prev_f = f;
    }
    widths
}

/// Pick the nondecreasing integer strides closest to the ideal widths.
///
/// Exact search over stride sequences with minimum 2, final value
/// exactly 10 and total 74, minimizing squared deviation from the
/// equal-Mel widths; ties resolve to the lexicographically smallest
/// sequence. This is the deterministic "repair" step after rounding.
fn fit_upper_strides(ideal: &[f64]) -> Vec<usize> {
    let n = ideal.len();
    // cost[i][prev][rem] = best cost placing windows i.. with previous
    // stride `prev` and `rem` bins left
    let mut best = vec![vec![vec![f64::INFINITY; UPPER_BINS + 1]; FINAL_STRIDE + 1]; n + 1];
    let mut choice = vec![vec![vec![0usize; UPPER_BINS + 1]; FINAL_STRIDE + 1]; n + 1];
    for prev in 0..=FINAL_STRIDE {
        best[n][prev][0] = 0.0;
    }
    for i in (0..n).rev() {
        for prev in MIN_STRIDE.min(2)..=FINAL_STRIDE {
            for rem in 0..=UPPER_BINS {
                let mut best_cost = f64::INFINITY;
                let mut best_stride = 0;
                let lo = prev.max(MIN_STRIDE);
                for s in lo..=FINAL_STRIDE {
                    if s > rem {
                        break;
                    }
                    if i == n - 1 && s != FINAL_STRIDE {
                        continue;
                    }
                    let tail = best[i + 1][s][rem - s];
                    if tail.is_finite() {
                        let d = s as f64 - ideal[i];
                        let cost = d * d + tail;
                        if cost < best_cost {
                            best_cost = cost;
                            best_stride = s;
                        }
                    }
                }
                best[i][prev][rem] = best_cost;
                choice[i][prev][rem] = best_stride;
            }
        }
    }
    let mut strides = Vec::with_capacity(n);
    let (mut prev, mut rem) = (MIN_STRIDE, UPPER_BINS);
    for i in 0..n {
        let s = choice[i][prev][rem];
        assert!(s > 0, "stride fit infeasible");
        strides.push(s);
        prev = s;
        rem -= s;
    }
    strides
}

/// Construct the 28-window schedule.
pub fn build_schedule() -> PoolSchedule {
    let mut windows = Vec::with_capacity(POOL_WINDOWS);
    for i in 0..STRIDE2_WINDOWS {
        windows.push(PoolWindow {
            start: i * 2,
            stride: 2,
        });
    }
    let mut start = STRIDE2_BINS;
    for stride in fit_upper_strides(&ideal_upper_widths()) {
        windows.push(PoolWindow { start, stride });
        start += stride;
    }
    let schedule = PoolSchedule { windows };
    schedule
        .validate()
        .expect("constructed schedule violates its invariants");
    schedule
}

/// Max-pool every feature map through the schedule.
///
/// Per map and window the winner is the neuron with the highest spike
/// count over the frame (ties go to the lowest bin); the pooled
/// channel carries the winner's unmodified spike train. Output channel
/// layout is map-major: channel = map * 28 + window.
pub fn pool(maps: &FeatureMaps, schedule: &PoolSchedule) -> Result<SpikeRaster> {
    if maps.len() != crate::conv::NUM_FILTERS {
        return Err(crate::error::dim_mismatch(
            "pooling input maps",
            crate::conv::NUM_FILTERS,
            maps.len(),
        ));
    }
    let steps = maps.map(0).steps();
    for map in maps.maps() {
        map.expect_shape("pooling input map", crate::conv::MAP_LEN, steps)?;
    }
    let mut pooled = SpikeRaster::new(maps.len() * POOL_WINDOWS, steps);
    for (k, map) in maps.maps().iter().enumerate() {
        for (w, window) in schedule.windows().iter().enumerate() {
            let mut winner = window.start;
            let mut winner_count = map.count(window.start);
            for bin in window.start + 1..window.start + window.stride {
                let count = map.count(bin);
                if count > winner_count {
                    winner = bin;
                    winner_count = count;
                }
            }
            pooled.set_channel_word(k * POOL_WINDOWS + w, map.channel_word(winner));
        }
    }
    Ok(pooled)
}
