//! Temporal regression (delta) features.

use crate::error::{Error, Result};

use super::FeatureSequence;

/// Which delta blocks get appended to the static features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeltaMode {
    #[default]
    None,
    /// Append first-order deltas (2H dims).
    D,
    /// Append first- and second-order deltas (3H dims).
    Da,
}

impl DeltaMode {
    pub fn name(&self) -> &'static str {
        match self {
            DeltaMode::None => "none",
            DeltaMode::D => "D",
            DeltaMode::Da => "DA",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(DeltaMode::None),
            "D" => Ok(DeltaMode::D),
            "DA" => Ok(DeltaMode::Da),
            other => Err(Error::Config(format!(
                "unknown delta mode `{other}` (expected `none`, `D` or `DA`)"
            ))),
        }
    }

    /// Output dimensionality multiplier.
    pub fn blocks(&self) -> usize {
        match self {
            DeltaMode::None => 1,
            DeltaMode::D => 2,
            DeltaMode::Da => 3,
        }
    }
}

/// The standard +-2 regression: d_t = sum_n n*(c_{t+n} - c_{t-n}) / 10,
/// with boundary frames replicated at the edges.
fn delta_block(frames: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let t_len = frames.len();
    let dim = frames.first().map_or(0, Vec::len);
    let clamp = |t: i64| frames[t.clamp(0, t_len as i64 - 1) as usize].as_slice();
    (0..t_len as i64)
        .map(|t| {
            let mut d = vec![0.0; dim];
            for n in 1..=2i64 {
                let ahead = clamp(t + n);
                let behind = clamp(t - n);
                for k in 0..dim {
                    d[k] += n as f64 * (ahead[k] - behind[k]);
                }
            }
            for v in &mut d {
                *v /= 10.0;
            }
            d
        })
        .collect()
}

/// Append delta blocks of the given order (1 for D, 2 for D + DD).
pub fn deltas(seq: &FeatureSequence, order: usize) -> Result<FeatureSequence> {
    if seq.frames.is_empty() {
        return Err(Error::Hmm(format!("sequence `{}` is empty", seq.id)));
    }
    if !(1..=2).contains(&order) {
        return Err(Error::Hmm(format!("delta order must be 1 or 2, got {order}")));
    }
    let d = delta_block(&seq.frames);
    let dd = if order == 2 { Some(delta_block(&d)) } else { None };
    let frames = seq
        .frames
        .iter()
        .enumerate()
        .map(|(t, f)| {
            let mut out = f.clone();
            out.extend_from_slice(&d[t]);
            if let Some(dd) = &dd {
                out.extend_from_slice(&dd[t]);
            }
            out
        })
        .collect();
    Ok(FeatureSequence {
        id: seq.id.clone(),
        label: seq.label,
        frames,
    })
}

/// Apply a [`DeltaMode`] to a sequence.
pub fn apply_mode(seq: &FeatureSequence, mode: DeltaMode) -> Result<FeatureSequence> {
    match mode {
        DeltaMode::None => Ok(seq.clone()),
        DeltaMode::D => deltas(seq, 1),
        DeltaMode::Da => deltas(seq, 2),
    }
}
