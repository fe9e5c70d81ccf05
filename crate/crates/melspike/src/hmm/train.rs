//! Baum-Welch training of the per-digit model set.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{hmm_class_stream_id, RngStream};

use super::gmm::{init_mixture, VAR_FLOOR};
use super::{FeatureSequence, HmmModel, HmmModelSet, NUM_CLASSES};

/// Per-dimension affine transform fitted on training features.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit<'a>(frames: impl Iterator<Item = &'a Vec<f64>> + Clone) -> Result<Self> {
        let mut count = 0usize;
        let mut mean: Vec<f64> = Vec::new();
        for f in frames.clone() {
            if mean.is_empty() {
                mean = vec![0.0; f.len()];
            }
            for (m, v) in mean.iter_mut().zip(f) {
                *m += v;
            }
            count += 1;
        }
        if count == 0 {
            return Err(Error::Hmm("standardizer needs at least one frame".into()));
        }
        for m in &mut mean {
            *m /= count as f64;
        }
        let mut var = vec![0.0; mean.len()];
        for f in frames {
            for ((v, m), x) in var.iter_mut().zip(&mean).zip(f) {
                let d = x - m;
                *v += d * d;
            }
        }
        let scale = var
            .iter()
            .map(|v| {
                let v = v / count as f64;
                if v < 1e-12 {
                    1.0 // constant dimension: center only
                } else {
                    v.sqrt()
                }
            })
            .collect();
        Ok(Standardizer { mean, scale })
    }

    pub fn transform(&self, frames: &[Vec<f64>]) -> Vec<Vec<f64>> {
        frames
            .iter()
            .map(|f| {
                f.iter()
                    .zip(&self.mean)
                    .zip(&self.scale)
                    .map(|((x, m), s)| (x - m) / s)
                    .collect()
            })
            .collect()
    }
}

/// Knobs for Baum-Welch; the defaults are what the pipeline uses.
#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    pub max_iterations: usize,
    pub rel_tolerance: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            max_iterations: 20,
            rel_tolerance: 1e-4,
        }
    }
}

/// Accumulated E-step statistics for one model.
struct Accumulator {
    trans_self: Vec<f64>,
    trans_next: Vec<f64>,
    occupancy: Vec<Vec<f64>>,      // S x G
    mean_acc: Vec<Vec<Vec<f64>>>,  // S x G x d
    square_acc: Vec<Vec<Vec<f64>>>, // S x G x d
    log_likelihood: f64,
}

impl Accumulator {
    fn new(s: usize, g: usize, d: usize) -> Self {
        Accumulator {
            trans_self: vec![0.0; s],
            trans_next: vec![0.0; s],
            occupancy: vec![vec![0.0; g]; s],
            mean_acc: vec![vec![vec![0.0; d]; g]; s],
            square_acc: vec![vec![vec![0.0; d]; g]; s],
            log_likelihood: 0.0,
        }
    }
}

fn accumulate(model: &HmmModel, frames: &[Vec<f64>], acc: &mut Accumulator) {
    let s_count = model.num_states();
    let t_len = frames.len();
    // per-state log densities and component posteriors
    let mut log_b = vec![vec![0.0; s_count]; t_len];
    let mut comp_post = vec![vec![Vec::new(); s_count]; t_len];
    for t in 0..t_len {
        for j in 0..s_count {
            let (lb, post) = model.states[j].log_density_and_posteriors(&frames[t]);
            log_b[t][j] = lb;
            comp_post[t][j] = post;
        }
    }
    let fwd = model.forward(&log_b);
    let beta = model.backward(&fwd);
    acc.log_likelihood += fwd.log_likelihood;

    for t in 0..t_len {
        for j in 0..s_count {
            let gamma = fwd.alpha[t][j] * beta[t][j];
            if gamma == 0.0 {
                continue;
            }
            let g_count = model.states[j].components();
            for g in 0..g_count {
                let r = gamma * comp_post[t][j][g];
                acc.occupancy[j][g] += r;
                for d in 0..frames[t].len() {
                    acc.mean_acc[j][g][d] += r * frames[t][d];
                    acc.square_acc[j][g][d] += r * frames[t][d] * frames[t][d];
                }
            }
        }
        if t + 1 < t_len {
            for i in 0..s_count {
                if fwd.alpha[t][i] == 0.0 {
                    continue;
                }
                if model.transitions[i][i] > 0.0 {
                    acc.trans_self[i] += fwd.alpha[t][i]
                        * model.transitions[i][i]
                        * fwd.emissions[t + 1][i]
                        * beta[t + 1][i]
                        / fwd.scales[t + 1];
                }
                if i + 1 < s_count && model.transitions[i][i + 1] > 0.0 {
                    acc.trans_next[i] += fwd.alpha[t][i]
                        * model.transitions[i][i + 1]
                        * fwd.emissions[t + 1][i + 1]
                        * beta[t + 1][i + 1]
                        / fwd.scales[t + 1];
                }
            }
        }
    }
}

fn reestimate(model: &mut HmmModel, acc: &Accumulator) {
    let s_count = model.num_states();
    for i in 0..s_count - 1 {
        let total = acc.trans_self[i] + acc.trans_next[i];
        if total > 0.0 {
            model.transitions[i][i] = acc.trans_self[i] / total;
            model.transitions[i][i + 1] = acc.trans_next[i] / total;
        }
    }
    // final state self-loops by construction
    model.transitions[s_count - 1][s_count - 1] = 1.0;

    for j in 0..s_count {
        let gmm = &mut model.states[j];
        let g_count = gmm.components();
        let dim = gmm.dim();
        let state_mass: f64 = acc.occupancy[j].iter().sum();
        if state_mass <= 0.0 {
            continue; // state unvisited this round; keep parameters
        }
        // pooled state statistics for reseeding starved components
        let mut pooled_mean = vec![0.0; dim];
        let mut pooled_sq = vec![0.0; dim];
        for g in 0..g_count {
            for d in 0..dim {
                pooled_mean[d] += acc.mean_acc[j][g][d];
                pooled_sq[d] += acc.square_acc[j][g][d];
            }
        }
        for d in 0..dim {
            pooled_mean[d] /= state_mass;
            pooled_sq[d] = (pooled_sq[d] / state_mass - pooled_mean[d] * pooled_mean[d])
                .max(VAR_FLOOR);
        }
        for g in 0..g_count {
            let mass = acc.occupancy[j][g];
            if mass < 1e-8 {
                // starved component: reseed off the state mean along
                // its widest dimension
                let widest = (0..dim)
                    .max_by(|&a, &b| pooled_sq[a].total_cmp(&pooled_sq[b]))
                    .unwrap_or(0);
                let mut mean = pooled_mean.clone();
                mean[widest] += pooled_sq[widest].sqrt() * (1.0 + g as f64 * 0.25);
                gmm.means[g] = mean;
                gmm.variances[g] = pooled_sq.clone();
                gmm.weights[g] = 1e-3;
                continue;
            }
            gmm.weights[g] = mass / state_mass;
            for d in 0..dim {
                let mean = acc.mean_acc[j][g][d] / mass;
                gmm.means[g][d] = mean;
                gmm.variances[g][d] =
                    (acc.square_acc[j][g][d] / mass - mean * mean).max(VAR_FLOOR);
            }
        }
        let wsum: f64 = gmm.weights.iter().sum();
        for w in &mut gmm.weights {
            *w /= wsum;
        }
    }
}

fn initial_model(
    sequences: &[&FeatureSequence],
    num_states: usize,
    num_components: usize,
    stream: RngStream,
) -> HmmModel {
    let _dim = sequences[0].dim();
    let mut rng = stream.rng();
    // uniform temporal segmentation assigns frames to states
    let mut per_state: Vec<Vec<&[f64]>> = vec![Vec::new(); num_states];
    let mut total_frames = 0usize;
    for seq in sequences {
        let t_len = seq.frames.len();
        total_frames += t_len;
        for (t, frame) in seq.frames.iter().enumerate() {
            let state = (t * num_states / t_len).min(num_states - 1);
            per_state[state].push(frame.as_slice());
        }
    }
    let avg_duration = total_frames as f64 / (sequences.len() * num_states) as f64;
    let stay = ((avg_duration - 1.0) / avg_duration).clamp(0.1, 0.95);
    let mut transitions = vec![vec![0.0; num_states]; num_states];
    for i in 0..num_states {
        if i + 1 < num_states {
            transitions[i][i] = stay;
            transitions[i][i + 1] = 1.0 - stay;
        } else {
            transitions[i][i] = 1.0;
        }
    }
    let states = per_state
        .iter()
        .map(|frames| {
            debug_assert!(!frames.is_empty(), "uniform segmentation left a state empty");
            let mut gmm = init_mixture(frames, num_components, &mut rng);
            for var in &mut gmm.variances {
                for v in var {
                    *v = v.max(VAR_FLOOR);
                }
            }
            gmm
        })
        .collect();
    HmmModel {
        transitions,
        states,
    }
}

/// Train one left-to-right model on (already standardized) sequences.
///
/// Returns the model and the per-iteration total log-likelihoods,
/// which EM guarantees to be non-decreasing.
pub fn train_single(
    sequences: &[&FeatureSequence],
    num_states: usize,
    num_components: usize,
    stream: RngStream,
    options: &TrainOptions,
) -> Result<(HmmModel, Vec<f64>)> {
    if sequences.is_empty() {
        return Err(Error::Hmm("no training sequences".into()));
    }
    let dim = sequences[0].dim();
    for seq in sequences {
        if seq.dim() != dim {
            return Err(Error::Hmm(format!(
                "sequence `{}` has dim {}, expected {dim}",
                seq.id,
                seq.dim()
            )));
        }
        if seq.frames.len() < num_states {
            return Err(Error::Hmm(format!(
                "sequence `{}` shorter than the state count",
                seq.id
            )));
        }
    }
    let mut model = initial_model(sequences, num_states, num_components, stream);
    let mut history = Vec::new();
    for _ in 0..options.max_iterations {
        let mut acc = Accumulator::new(num_states, num_components, dim);
        for seq in sequences {
            accumulate(&model, &seq.frames, &mut acc);
        }
        reestimate(&mut model, &acc);
        let ll = acc.log_likelihood;
        if let Some(&prev) = history.last() {
            history.push(ll);
            if (ll - prev).abs() / prev.abs().max(1.0) < options.rel_tolerance {
                break;
            }
        } else {
            history.push(ll);
        }
    }
    Ok((model, history))
}

/// Train the ten-digit model set.
///
/// Sequences shorter than the state count are skipped with a warning;
/// a digit with nothing left to train on is an error. Standardization
/// is fitted here, on exactly the frames being trained on.
pub fn train_models(
    sequences: &[FeatureSequence],
    num_states: usize,
    num_components: usize,
    seed: u64,
) -> Result<HmmModelSet> {
    train_models_with(sequences, num_states, num_components, seed, &TrainOptions::default())
}

pub fn train_models_with(
    sequences: &[FeatureSequence],
    num_states: usize,
    num_components: usize,
    seed: u64,
    options: &TrainOptions,
) -> Result<HmmModelSet> {
    if sequences.is_empty() {
        return Err(Error::Hmm("no training sequences".into()));
    }
    let standardizer = Standardizer::fit(sequences.iter().flat_map(|s| s.frames.iter()))?;
    let standardized: Vec<FeatureSequence> = sequences
        .iter()
        .map(|s| FeatureSequence {
            id: s.id.clone(),
            label: s.label,
            frames: standardizer.transform(&s.frames),
        })
        .collect();

    let mut by_class: Vec<Vec<&FeatureSequence>> = vec![Vec::new(); NUM_CLASSES];
    let mut skipped = 0usize;
    for seq in &standardized {
        if seq.label >= NUM_CLASSES {
            return Err(Error::Hmm(format!(
                "sequence `{}` has label {} outside 0..{NUM_CLASSES}",
                seq.id, seq.label
            )));
        }
        if seq.frames.len() < num_states {
            skipped += 1;
            continue;
        }
        by_class[seq.label].push(seq);
    }
    if skipped > 0 {
        eprintln!("warning: skipped {skipped} training sequences shorter than {num_states} frames");
    }
    for (digit, class) in by_class.iter().enumerate() {
        if class.is_empty() {
            return Err(Error::Hmm(format!("digit {digit} has no training sequences")));
        }
    }

    let models: Vec<HmmModel> = by_class
        .par_iter()
        .enumerate()
        .map(|(digit, class)| {
            let stream = RngStream::new(seed, hmm_class_stream_id(digit));
            train_single(class, num_states, num_components, stream, options)
                .map(|(model, _)| model)
        })
        .collect::<Result<_>>()?;

    Ok(HmmModelSet {
        models,
        standardizer,
    })
}
