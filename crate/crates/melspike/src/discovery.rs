//! Feature discovery layer: H stochastic LIF neurons, fully connected
//! to the 196 pooled channels, trained by a probabilistic STDP rule.
//!
//! A neuron fires only when its membrane potential reaches the
//! threshold AND its softmax posterior over the layer exceeds 0.5, so
//! at most one neuron can fire per step. The per-frame feature vector
//! is each neuron's membrane potential accumulated over the 40 steps.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{dim_mismatch, Error, Result};
use crate::pool::POOLED_CHANNELS;
use crate::raster::SpikeRaster;
use crate::rng::{shuffle_stream_id, RngStream, WEIGHT_INIT_STREAM};

/// Learning-rule constants. LTP rate, LTD rate, the presynaptic
/// coincidence window in ms, and the firing threshold of the layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StdpParams {
    pub a_plus: f64,
    pub a_minus: f64,
    pub epsilon_ms: usize,
    pub theta_h: f64,
}

impl Default for StdpParams {
    fn default() -> Self {
        StdpParams {
            a_plus: 1e-3,
            a_minus: 0.75e-3,
            epsilon_ms: 5,
            theta_h: 3.0,
        }
    }
}

/// The learned H x 196 synaptic weight matrix, every entry in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryWeights {
    rows: Vec<Vec<f64>>,
    inputs: usize,
}

impl DiscoveryWeights {
    /// Initialize uniformly in (0, 1) from the weight-init stream of
    /// the given run seed.
    pub fn init_random(neurons: usize, inputs: usize, run_seed: u64) -> Self {
        let mut rng = RngStream::new(run_seed, WEIGHT_INIT_STREAM).rng();
        let rows = (0..neurons)
            .map(|_| (0..inputs).map(|_| rng.random::<f64>()).collect())
            .collect();
        DiscoveryWeights { rows, inputs }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Config("weight matrix needs at least one neuron".into()));
        }
        let inputs = rows[0].len();
        for (h, row) in rows.iter().enumerate() {
            if row.len() != inputs {
                return Err(dim_mismatch("weight row", inputs, row.len()));
            }
            if row.iter().any(|w| !(0.0..=1.0).contains(w)) {
                return Err(Error::Config(format!("weight row {h} leaves [0, 1]")));
            }
        }
        Ok(DiscoveryWeights { rows, inputs })
    }

    pub fn neurons(&self) -> usize {
        self.rows.len()
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Dot products of every weight row with a sparse binary input,
    /// summed in ascending input index.
    fn activations(&self, active: &[usize]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| active.iter().map(|&i| row[i]).sum())
            .collect()
    }

    /// Text persistence: `snnw v1 H=<H> inputs=<n>` then one line of
    /// full-precision decimals per neuron.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        write!(f, "{}", self.to_text())?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("snnw v1 H={} inputs={}\n", self.neurons(), self.inputs);
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|w| format!("{w}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = fs::File::open(path)?;
        Self::read(BufReader::new(f))
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let bad = |detail: String| Error::Parse {
            what: "weight file",
            detail,
        };
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| bad("empty file".into()))??;
        let mut h = None;
        let mut inputs = None;
        let mut tokens = header.split_whitespace();
        if tokens.next() != Some("snnw") || tokens.next() != Some("v1") {
            return Err(bad(format!("bad header `{header}`")));
        }
        for tok in tokens {
            match tok.split_once('=') {
                Some(("H", v)) => h = v.parse::<usize>().ok(),
                Some(("inputs", v)) => inputs = v.parse::<usize>().ok(),
                _ => return Err(bad(format!("unexpected header token `{tok}`"))),
            }
        }
        let (h, inputs) = match (h, inputs) {
            (Some(h), Some(i)) if h > 0 && i > 0 => (h, i),
            _ => return Err(bad(format!("incomplete header `{header}`"))),
        };
        let mut rows = Vec::with_capacity(h);
        for n in 0..h {
            let line = lines
                .next()
                .ok_or_else(|| bad(format!("missing weight row {n}")))??;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|e| bad(format!("row {n}: {e}"))))
                .collect::<Result<_>>()?;
            if row.len() != inputs {
                return Err(bad(format!(
                    "row {n}: expected {inputs} values, got {}",
                    row.len()
                )));
            }
            rows.push(row);
        }
        Self::from_rows(rows)
    }
}

/// Softmax firing posteriors of every neuron for a binary input
/// vector, computed with max-subtraction for overflow safety.
pub fn posterior(weights: &DiscoveryWeights, input: &[bool]) -> Result<Vec<f64>> {
    if input.len() != weights.inputs() {
        return Err(dim_mismatch("posterior input", weights.inputs(), input.len()));
    }
    let active: Vec<usize> = (0..input.len()).filter(|&i| input[i]).collect();
    Ok(softmax(&weights.activations(&active)))
}

fn softmax(activations: &[f64]) -> Vec<f64> {
    let max = activations.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = activations.iter().map(|a| (a - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Outcome of presenting one pooled frame to the layer.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameResponse {
    /// Accumulated post-update membrane potential per neuron.
    pub features: Vec<f64>,
    /// (neuron, step) pairs, in firing order.
    pub spikes: Vec<(usize, usize)>,
}

/// Run the layer over one pooled frame without learning.
pub fn forward_frame(
    pooled: &SpikeRaster,
    weights: &DiscoveryWeights,
    params: &StdpParams,
) -> Result<FrameResponse> {
    let mut copy = weights.clone();
    run_frame(pooled, &mut copy, params, false)
}

/// The shared forward pass. Membrane potentials start at rest and the
/// presynaptic spike history is local to the frame. With `learn` set,
/// the STDP update runs at every emitted spike, so later steps of the
/// same frame already see the adjusted row.
fn run_frame(
    pooled: &SpikeRaster,
    weights: &mut DiscoveryWeights,
    params: &StdpParams,
    learn: bool,
) -> Result<FrameResponse> {
    if pooled.channels() != weights.inputs() {
        return Err(dim_mismatch(
            "discovery input",
            weights.inputs(),
            pooled.channels(),
        ));
    }
    let alpha = (-1.0f64).exp(); // tau = 1 ms, dt = 1 ms
    let neurons = weights.neurons();
    let mut response = FrameResponse {
        features: vec![0.0; neurons],
        spikes: Vec::new(),
    };
    let active_by_step = pooled.active_by_step();
    let mut membrane = vec![0.0f64; neurons];
    let mut last_spike: Vec<Option<usize>> = vec![None; weights.inputs()];

    for (t, active) in active_by_step.iter().enumerate() {
        for &i in active {
            last_spike[i] = Some(t);
        }
        let current = weights.activations(active);
        let posteriors = softmax(&current);
        for h in 0..neurons {
            let next = membrane[h] * alpha + current[h] * (1.0 - alpha);
            if next >= params.theta_h && posteriors[h] > 0.5 {
                membrane[h] = 0.0;
                response.spikes.push((h, t));
                if learn {
                    stdp_update(weights, h, &last_spike, t, params);
                }
            } else {
                membrane[h] = next;
            }
            response.features[h] += membrane[h];
        }
    }
    Ok(response)
}

/// Apply the probabilistic STDP rule to row `h` after it fired at
/// step `t`: inputs that spiked within the coincidence window are
/// potentiated by `a_plus * exp(-w)`, the rest depressed by `a_minus`,
/// and the row is clamped back into [0, 1].
pub fn stdp_update(
    weights: &mut DiscoveryWeights,
    h: usize,
    last_spike: &[Option<usize>],
    t: usize,
    params: &StdpParams,
) {
    let row = &mut weights.rows[h];
    for (w, spike) in row.iter_mut().zip(last_spike) {
        let in_window = matches!(spike, Some(s) if t - s <= params.epsilon_ms);
        if in_window {
            *w += params.a_plus * (-*w).exp();
        } else {
            *w -= params.a_minus;
        }
        *w = w.clamp(0.0, 1.0);
    }
}

/// Train on pooled frame sequences, one per utterance.
///
/// Weights start uniform in (0, 1) from the run seed; each epoch
/// presents the utterances in a freshly shuffled order (shuffle stream
/// keyed by epoch) and frames run in temporal order with the STDP rule
/// applied at every spike. Labels never enter.
pub fn train(
    utterance_frames: &[Vec<SpikeRaster>],
    neurons: usize,
    epochs: usize,
    params: &StdpParams,
    run_seed: u64,
) -> Result<DiscoveryWeights> {
    if utterance_frames.is_empty() {
        return Err(Error::Config("training requires at least one utterance".into()));
    }
    let mut weights = DiscoveryWeights::init_random(neurons, POOLED_CHANNELS, run_seed);
    for epoch in 0..epochs {
        let mut order: Vec<usize> = (0..utterance_frames.len()).collect();
        order.shuffle(&mut RngStream::new(run_seed, shuffle_stream_id(epoch)).rng());
        for &u in &order {
            for frame in &utterance_frames[u] {
                run_frame(frame, &mut weights, params, true)?;
            }
        }
    }
    Ok(weights)
}

/// Inference: per-frame feature vectors for one utterance, in temporal
/// order, with learning disabled.
pub fn extract(
    frames: &[SpikeRaster],
    weights: &DiscoveryWeights,
    params: &StdpParams,
) -> Result<Vec<Vec<f64>>> {
    let mut copy = weights.clone();
    frames
        .iter()
        .map(|f| run_frame(f, &mut copy, params, false).map(|r| r.features))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raster_from(channels: usize, f: impl Fn(usize, usize) -> bool) -> SpikeRaster {
        let mut r = SpikeRaster::new(channels, 40);
        for c in 0..channels {
            for t in 0..40 {
                if f(c, t) {
                    r.set_spike(c, t);
                }
            }
        }
        r
    }

    fn weights_from(rows: Vec<Vec<f64>>) -> DiscoveryWeights {
        DiscoveryWeights::from_rows(rows).unwrap()
    }

    #[test]
    fn identical_rows_give_uniform_posterior() {
        let w = weights_from(vec![vec![0.37; 8]; 5]);
        let input = [true, false, true, true, false, false, true, false];
        let p = posterior(&w, &input).unwrap();
        for v in &p {
            assert!((v - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn two_neuron_closed_form() {
        // activations (1, 0) -> (e/(e+1), 1/(e+1))
        let w = weights_from(vec![vec![1.0], vec![0.0]]);
        let p = posterior(&w, &[true]).unwrap();
        let e = std::f64::consts::E;
        assert!((p[0] - e / (e + 1.0)).abs() < 1e-12);
        assert!((p[1] - 1.0 / (e + 1.0)).abs() < 1e-12);
        assert!((p[0] - 0.7311).abs() < 1e-4);
        assert!((p[1] - 0.2689).abs() < 1e-4);
    }

    #[test]
    fn zero_raster_zero_features_no_spikes() {
        let w = DiscoveryWeights::init_random(30, POOLED_CHANNELS, 5);
        let r = SpikeRaster::new(POOLED_CHANNELS, 40);
        let resp = forward_frame(&r, &w, &StdpParams::default()).unwrap();
        assert!(resp.spikes.is_empty());
        assert!(resp.features.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn at_most_one_spike_per_step() {
        // give neuron 2 a dominant row so the posterior gate opens
        let mut rows = vec![vec![0.1; POOLED_CHANNELS]; 30];
        rows[2] = vec![0.95; POOLED_CHANNELS];
        let w = weights_from(rows);
        let r = raster_from(POOLED_CHANNELS, |c, t| (c + t) % 3 == 0);
        let resp = forward_frame(&r, &w, &StdpParams::default()).unwrap();
        assert!(!resp.spikes.is_empty(), "dominant neuron should fire");
        assert!(resp.spikes.iter().all(|&(h, _)| h == 2));
        let mut steps_seen = std::collections::HashSet::new();
        for &(_, t) in &resp.spikes {
            assert!(steps_seen.insert(t), "two spikes at step {t}");
        }
    }

    #[test]
    fn single_neuron_matches_scalar_simulation() {
        // H = 1: posterior is identically 1, firing is pure threshold
        let inputs = 8;
        let row: Vec<f64> = (0..inputs).map(|i| 0.1 + 0.1 * i as f64).collect();
        let w = weights_from(vec![row.clone()]);
        let r = raster_from(inputs, |c, t| (c * 7 + t * 3) % 5 < 2);
        let params = StdpParams::default();
        let resp = forward_frame(&r, &w, &params).unwrap();

        // independent scalar loop
        let alpha = (-1.0f64).exp();
        let mut u = 0.0f64;
        let mut feature = 0.0;
        let mut spikes = Vec::new();
        for t in 0..40 {
            let mut i_in = 0.0;
            for (c, wv) in row.iter().enumerate() {
                if r.spike(c, t) {
                    i_in += wv;
                }
            }
            let next = u * alpha + i_in * (1.0 - alpha);
            if next >= params.theta_h {
                u = 0.0;
                spikes.push((0usize, t));
            } else {
                u = next;
            }
            feature += u;
        }
        assert_eq!(resp.spikes, spikes);
        assert!((resp.features[0] - feature).abs() < 1e-15);
    }

    #[test]
    fn stdp_rule_spot_values() {
        let params = StdpParams::default();
        let mut w = weights_from(vec![vec![0.0, 0.5, 0.3]]);
        // inputs 0 and 1 spiked recently, input 2 never did
        let last = vec![Some(10), Some(6), None];
        stdp_update(&mut w, 0, &last, 10, &params);
        assert!((w.rows()[0][0] - 1e-3).abs() < 1e-12);
        assert!((w.rows()[0][1] - (0.5 + 1e-3 * (-0.5f64).exp())).abs() < 1e-12);
        assert!((w.rows()[0][1] - 0.50060653).abs() < 1e-8);
        assert!((w.rows()[0][2] - (0.3 - 0.75e-3)).abs() < 1e-12);
    }

    #[test]
    fn stdp_window_boundary_inclusive() {
        let params = StdpParams::default();
        let mut w = weights_from(vec![vec![0.2, 0.2]]);
        // t - s == 5 is inside the window, 6 is not
        let last = vec![Some(5), Some(4)];
        stdp_update(&mut w, 0, &last, 10, &params);
        assert!(w.rows()[0][0] > 0.2);
        assert!(w.rows()[0][1] < 0.2);
    }

    #[test]
    fn ltp_shrinks_with_weight() {
        let params = StdpParams::default();
        let gain = |w0: f64| {
            let mut w = weights_from(vec![vec![w0]]);
            stdp_update(&mut w, 0, &[Some(0)], 0, &params);
            w.rows()[0][0] - w0
        };
        let (d_low, d_high) = (gain(0.1), gain(0.9));
        assert!(d_low > d_high && d_high > 0.0);
    }

    #[test]
    fn weights_stay_clamped_under_hammering() {
        let params = StdpParams::default();
        let mut w = weights_from(vec![vec![0.999, 0.001]]);
        for t in 0..5_000 {
            let last = if t % 2 == 0 {
                vec![Some(t), None]
            } else {
                vec![None, Some(t)]
            };
            stdp_update(&mut w, 0, &last, t, &params);
            for v in &w.rows()[0] {
                assert!((0.0..=1.0).contains(v));
            }
        }
    }

    #[test]
    fn training_on_silence_leaves_weights_at_init() {
        let frames = vec![vec![SpikeRaster::new(POOLED_CHANNELS, 40); 3]; 2];
        let trained = train(&frames, 10, 4, &StdpParams::default(), 42).unwrap();
        let init = DiscoveryWeights::init_random(10, POOLED_CHANNELS, 42);
        assert_eq!(trained, init);
    }

    #[test]
    fn training_replay_is_bit_identical() {
        let mut rng = RngStream::new(8, 0).rng();
        let frames: Vec<Vec<SpikeRaster>> = (0..4)
            .map(|_| {
                (0..3)
                    .map(|_| {
                        let mut r = SpikeRaster::new(POOLED_CHANNELS, 40);
                        for c in 0..POOLED_CHANNELS {
                            for t in 0..40 {
                                if rng.random::<f64>() < 0.25 {
                                    r.set_spike(c, t);
                                }
                            }
                        }
                        r
                    })
                    .collect()
            })
            .collect();
        let a = train(&frames, 12, 3, &StdpParams::default(), 99).unwrap();
        let b = train(&frames, 12, 3, &StdpParams::default(), 99).unwrap();
        assert_eq!(a, b);
        // and training moved the weights
        assert_ne!(a, DiscoveryWeights::init_random(12, POOLED_CHANNELS, 99));
    }

    #[test]
    fn extraction_is_deterministic_and_sized() {
        let w = DiscoveryWeights::init_random(20, POOLED_CHANNELS, 3);
        let frames = vec![raster_from(POOLED_CHANNELS, |c, t| (c * t) % 7 == 1)];
        let a = extract(&frames, &w, &StdpParams::default()).unwrap();
        let b = extract(&frames, &w, &StdpParams::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].len(), 20);
    }

    #[test]
    fn weight_text_round_trip() {
        let w = DiscoveryWeights::init_random(7, POOLED_CHANNELS, 17);
        let text = w.to_text();
        let back = DiscoveryWeights::read(text.as_bytes()).unwrap();
        assert_eq!(back, w);
        assert!(text.starts_with("snnw v1 H=7 inputs=196\n"));
    }

    #[test]
    fn read_rejects_bad_header() {
        assert!(DiscoveryWeights::read(&b"wrong v1 H=2 inputs=3\n"[..]).is_err());
        assert!(DiscoveryWeights::read(&b"snnw v2 H=2 inputs=3\n"[..]).is_err());
    }

    proptest! {
        #[test]
        fn posteriors_sum_to_one(seed in 0u64..300) {
            let mut rng = RngStream::new(seed, 0).rng();
            let h = 2 + (seed % 29) as usize;
            let rows: Vec<Vec<f64>> = (0..h)
                .map(|_| (0..POOLED_CHANNELS).map(|_| rng.random()).collect())
                .collect();
            let w = weights_from(rows);
            let input: Vec<bool> =
                (0..POOLED_CHANNELS).map(|_| rng.random::<f64>() < 0.3).collect();
            let p = posterior(&w, &input).unwrap();
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().filter(|&&v| v > 0.5).count() <= 1);
        }

        #[test]
        fn stdp_preserves_bounds(seed in 0u64..100) {
            let mut rng = RngStream::new(seed, 1).rng();
            let mut w = weights_from(vec![
                (0..8).map(|_| rng.random()).collect::<Vec<f64>>()
            ]);
            for t in 0..200usize {
                let last: Vec<Option<usize>> = (0..8)
                    .map(|_| if rng.random::<f64>() < 0.5 {
                        Some(t.saturating_sub((rng.random::<f64>() * 8.0) as usize))
                    } else {
                        None
                    })
                    .collect();
                stdp_update(&mut w, 0, &last, t, &StdpParams::default());
                for v in &w.rows()[0] {
                    prop_assert!((0.0..=1.0).contains(v));
                }
            }
        }
    }
}
