//! Left-to-right GMM-HMMs for isolated-digit classification, trained
//! with Baum-Welch on extracted feature sequences.

pub mod deltas;
pub mod gmm;
mod io;
mod train;

pub use deltas::{deltas, DeltaMode};
pub use gmm::DiagGmm;
pub use train::{train_models, train_single, Standardizer, TrainOptions};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{dim_mismatch, Error, Result};

pub const NUM_CLASSES: usize = 10;

/// Per-utterance feature frames with identity and label.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub id: String,
    pub label: usize,
    pub frames: Vec<Vec<f64>>,
}

impl FeatureSequence {
    pub fn dim(&self) -> usize {
        self.frames.first().map_or(0, Vec::len)
    }
}

/// A left-to-right HMM with one diagonal GMM per state. The chain
/// always starts in state 0; each state allows a self-loop and a step
/// to its successor, and the final state self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    pub transitions: Vec<Vec<f64>>,
    pub states: Vec<DiagGmm>,
}

/// Scaled forward pass products, reused by the backward pass.
pub(crate) struct ForwardPass {
    pub log_likelihood: f64,
    /// Normalized alpha, T x S.
    pub alpha: Vec<Vec<f64>>,
    /// Per-step normalizers s_t.
    pub scales: Vec<f64>,
    /// Shifted linear emissions exp(log b - shift), T x S.
    pub emissions: Vec<Vec<f64>>,
}

impl HmmModel {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, DiagGmm::dim)
    }

    fn check_frames(&self, frames: &[Vec<f64>]) -> Result<()> {
        if frames.is_empty() {
            return Err(Error::Hmm("cannot score an empty sequence".into()));
        }
        for f in frames {
            if f.len() != self.dim() {
                return Err(dim_mismatch("hmm observation", self.dim(), f.len()));
            }
        }
        Ok(())
    }

    /// Log emission densities, T x S.
    pub(crate) fn log_emissions(&self, frames: &[Vec<f64>]) -> Vec<Vec<f64>> {
        frames
            .iter()
            .map(|x| self.states.iter().map(|s| s.log_density(x)).collect())
            .collect()
    }

    /// Scaled forward recursion. The per-step shift is taken over
    /// states with nonzero predicted mass, which keeps every scale
    /// strictly positive and the log-likelihood finite.
    pub(crate) fn forward(&self, log_b: &[Vec<f64>]) -> ForwardPass {
        let s_count = self.num_states();
        let t_len = log_b.len();
        let mut alpha = vec![vec![0.0; s_count]; t_len];
        let mut scales = vec![0.0; t_len];
        let mut emissions = vec![vec![0.0; s_count]; t_len];
        let mut log_likelihood = 0.0;
        let mut pred = vec![0.0; s_count];
        for t in 0..t_len {
            if t == 0 {
                pred.fill(0.0);
                pred[0] = 1.0; // the chain starts in state 0
            } else {
                let prev = &alpha[t - 1];
                for (j, p) in pred.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    // left-to-right: only j and j-1 feed state j
                    acc += prev[j] * self.transitions[j][j];
                    if j > 0 {
                        acc += prev[j - 1] * self.transitions[j - 1][j];
                    }
                    *p = acc;
                }
            }
            let shift = pred
                .iter()
                .zip(&log_b[t])
                .filter(|(p, _)| **p > 0.0)
                .map(|(_, lb)| *lb)
                .fold(f64::NEG_INFINITY, f64::max);
            let mut scale = 0.0;
            for j in 0..s_count {
                let e = (log_b[t][j] - shift).exp();
                emissions[t][j] = e;
                // an unreachable state may carry an emission above the
                // shift (e = inf); its zero mass must win over it
                let v = if pred[j] > 0.0 { pred[j] * e } else { 0.0 };
                alpha[t][j] = v;
                scale += v;
            }
            scales[t] = scale;
            for a in &mut alpha[t] {
                *a /= scale;
            }
            log_likelihood += scale.ln() + shift;
        }
        ForwardPass {
            log_likelihood,
            alpha,
            scales,
            emissions,
        }
    }

    /// Scaled backward pass matching [`HmmModel::forward`]'s scales.
    ///
    /// States with zero forward mass get beta = 0 (their posteriors
    /// are zero regardless), which keeps the recursion away from the
    /// unbounded shifted emissions of unreachable states.
    pub(crate) fn backward(&self, fwd: &ForwardPass) -> Vec<Vec<f64>> {
        let s_count = self.num_states();
        let t_len = fwd.alpha.len();
        let mut beta = vec![vec![0.0; s_count]; t_len];
        for (i, b) in beta[t_len - 1].iter_mut().enumerate() {
            if fwd.alpha[t_len - 1][i] > 0.0 {
                *b = 1.0;
            }
        }
        for t in (0..t_len - 1).rev() {
            for i in 0..s_count {
                if fwd.alpha[t][i] == 0.0 {
                    continue;
                }
                let mut acc = 0.0;
                let stay = self.transitions[i][i];
                if stay > 0.0 {
                    acc += beta[t + 1][i] * stay * fwd.emissions[t + 1][i];
                }
                if i + 1 < s_count {
                    let step = self.transitions[i][i + 1];
                    if step > 0.0 {
                        acc += beta[t + 1][i + 1] * step * fwd.emissions[t + 1][i + 1];
                    }
                }
                beta[t][i] = acc / fwd.scales[t + 1];
            }
        }
        beta
    }

    /// Exact log P(frames | model) via the scaled forward recursion.
    pub fn log_likelihood(&self, frames: &[Vec<f64>]) -> Result<f64> {
        self.check_frames(frames)?;
        Ok(self.forward(&self.log_emissions(frames)).log_likelihood)
    }

    /// Per-step state occupancy posteriors (forward-backward), T x S;
    /// every row sums to one.
    pub fn state_posteriors(&self, frames: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        self.check_frames(frames)?;
        let fwd = self.forward(&self.log_emissions(frames));
        let beta = self.backward(&fwd);
        Ok(fwd
            .alpha
            .iter()
            .zip(&beta)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).collect())
            .collect())
    }

    /// Most likely state path and its joint log-probability.
    pub fn viterbi(&self, frames: &[Vec<f64>]) -> Result<(Vec<usize>, f64)> {
        self.check_frames(frames)?;
        let log_b = self.log_emissions(frames);
        let s_count = self.num_states();
        let t_len = frames.len();
        let log_a: Vec<Vec<f64>> = self
            .transitions
            .iter()
            .map(|row| row.iter().map(|&a| if a > 0.0 { a.ln() } else { f64::NEG_INFINITY }).collect())
            .collect();
        let mut delta = vec![vec![f64::NEG_INFINITY; s_count]; t_len];
        let mut back = vec![vec![0usize; s_count]; t_len];
        delta[0][0] = log_b[0][0];
        for t in 1..t_len {
            for j in 0..s_count {
                let stay = delta[t - 1][j] + log_a[j][j];
                let (best, from) = if j > 0 {
                    let step = delta[t - 1][j - 1] + log_a[j - 1][j];
                    if step > stay {
                        (step, j - 1)
                    } else {
                        (stay, j)
                    }
                } else {
                    (stay, j)
                };
                delta[t][j] = best + log_b[t][j];
                back[t][j] = from;
            }
        }
        let (mut state, mut best) = (0, f64::NEG_INFINITY);
        for (j, &v) in delta[t_len - 1].iter().enumerate() {
            if v > best {
                best = v;
                state = j;
            }
        }
        let mut path = vec![0usize; t_len];
        path[t_len - 1] = state;
        for t in (1..t_len).rev() {
            state = back[t][state];
            path[t - 1] = state;
        }
        Ok((path, best))
    }

    /// Draw `len` frames from the generative process.
    pub fn sample(&self, len: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let mut frames = Vec::with_capacity(len);
        let mut state = 0usize;
        for t in 0..len {
            if t > 0 {
                let u: f64 = rng.random();
                if u > self.transitions[state][state] && state + 1 < self.num_states() {
                    state += 1;
                }
            }
            let gmm = &self.states[state];
            let mut pick: f64 = rng.random();
            let mut comp = 0;
            for (g, w) in gmm.weights.iter().enumerate() {
                comp = g;
                if pick < *w {
                    break;
                }
                pick -= w;
            }
            let frame: Vec<f64> = (0..self.dim())
                .map(|d| {
                    let u1: f64 = rng.random::<f64>().max(1e-12);
                    let u2: f64 = rng.random();
                    let z = (-2.0 * u1.ln()).sqrt()
                        * (2.0 * std::f64::consts::PI * u2).cos();
                    gmm.means[comp][d] + z * gmm.variances[comp][d].sqrt()
                })
                .collect();
            frames.push(frame);
        }
        frames
    }
}

/// One trained model per digit plus the feature standardization fitted
/// on the training split.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModelSet {
    pub models: Vec<HmmModel>,
    pub standardizer: Standardizer,
}

impl HmmModelSet {
    /// Per-class log-likelihoods of a raw (unstandardized) sequence.
    /// A model that cannot score the sequence contributes -inf.
    pub fn class_log_likelihoods(&self, frames: &[Vec<f64>]) -> Vec<f64> {
        let standardized = self.standardizer.transform(frames);
        self.models
            .iter()
            .map(|m| m.log_likelihood(&standardized).unwrap_or(f64::NEG_INFINITY))
            .collect()
    }

    /// Argmax over the per-class log-likelihoods; ties break to the
    /// lowest digit.
    pub fn classify(&self, frames: &[Vec<f64>]) -> usize {
        let lls = self.class_log_likelihoods(frames);
        let mut best = 0;
        for (digit, &ll) in lls.iter().enumerate() {
            if ll > lls[best] {
                best = digit;
            }
        }
        best
    }
}

#[cfg(test)]
pub(crate) mod tests_support {
    use super::*;

    /// A small but fully populated two-class-worth model set for
    /// format tests.
    pub(crate) fn tiny_model_set() -> HmmModelSet {
        let model = |shift: f64| HmmModel {
            transitions: vec![vec![0.7, 0.3], vec![0.0, 1.0]],
            states: (0..2)
                .map(|j| DiagGmm {
                    weights: vec![0.25, 0.75],
                    means: vec![
                        vec![shift + j as f64, 0.1],
                        vec![shift - j as f64, -0.2],
                    ],
                    variances: vec![vec![1.0, 0.5], vec![0.125, 2.0]],
                })
                .collect(),
        };
        HmmModelSet {
            models: (0..NUM_CLASSES).map(|d| model(d as f64)).collect(),
            standardizer: Standardizer {
                mean: vec![0.5, -0.125],
                scale: vec![2.0, 0.25],
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn toy_model() -> HmmModel {
        HmmModel {
            transitions: vec![vec![0.6, 0.4], vec![0.0, 1.0]],
            states: vec![
                DiagGmm {
                    weights: vec![1.0],
                    means: vec![vec![0.0]],
                    variances: vec![vec![1.0]],
                },
                DiagGmm {
                    weights: vec![1.0],
                    means: vec![vec![3.0]],
                    variances: vec![vec![0.5]],
                },
            ],
        }
    }

    /// Brute-force unscaled forward over all state paths.
    fn unscaled_forward(model: &HmmModel, frames: &[Vec<f64>]) -> f64 {
        let s = model.num_states();
        let t_len = frames.len();
        let log_b = model.log_emissions(frames);
        let mut total = 0.0f64;
        let paths = s.pow(t_len as u32);
        for code in 0..paths {
            let mut states = Vec::with_capacity(t_len);
            let mut c = code;
            for _ in 0..t_len {
                states.push(c % s);
                c /= s;
            }
            if states[0] != 0 {
                continue;
            }
            let mut p = log_b[0][states[0]].exp();
            let mut ok = true;
            for t in 1..t_len {
                let a = model.transitions[states[t - 1]][states[t]];
                if a == 0.0 {
                    ok = false;
                    break;
                }
                p *= a * log_b[t][states[t]].exp();
            }
            if ok {
                total += p;
            }
        }
        total.ln()
    }

    #[test]
    fn scaled_forward_matches_brute_force_on_toys() {
        let model = toy_model();
        let frames: Vec<Vec<f64>> = vec![vec![0.1], vec![0.5], vec![2.4], vec![3.1], vec![2.9]];
        let scaled = model.log_likelihood(&frames).unwrap();
        let direct = unscaled_forward(&model, &frames);
        assert!(
            (scaled - direct).abs() < 1e-9,
            "scaled {scaled} vs direct {direct}"
        );
    }

    #[test]
    fn degenerate_single_state_is_gaussian_sum() {
        let model = HmmModel {
            transitions: vec![vec![1.0]],
            states: vec![DiagGmm {
                weights: vec![1.0],
                means: vec![vec![1.0]],
                variances: vec![vec![2.0]],
            }],
        };
        let frames = vec![vec![0.0], vec![1.0], vec![4.0]];
        let expected: f64 = frames
            .iter()
            .map(|f| model.states[0].log_density(f))
            .sum();
        let got = model.log_likelihood(&frames).unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn state_posteriors_sum_to_one() {
        let model = toy_model();
        let frames: Vec<Vec<f64>> = (0..12).map(|i| vec![0.3 * i as f64]).collect();
        let fwd = model.forward(&model.log_emissions(&frames));
        let beta = model.backward(&fwd);
        for t in 0..frames.len() {
            let total: f64 = (0..model.num_states())
                .map(|i| fwd.alpha[t][i] * beta[t][i])
                .sum();
            assert!((total - 1.0).abs() < 1e-9, "t={t}: {total}");
        }
    }

    #[test]
    fn viterbi_bounded_by_total_likelihood() {
        let model = toy_model();
        let frames: Vec<Vec<f64>> = vec![vec![0.0], vec![0.4], vec![2.8], vec![3.2]];
        let (path, vit) = model.viterbi(&frames).unwrap();
        let total = model.log_likelihood(&frames).unwrap();
        assert!(vit <= total + 1e-12, "viterbi {vit} > total {total}");
        assert_eq!(path[0], 0);
        assert!(path.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1));
    }

    #[test]
    fn likelihood_finite_for_outlandish_input() {
        let model = toy_model();
        let frames = vec![vec![1e6], vec![-1e6]];
        let ll = model.log_likelihood(&frames).unwrap();
        assert!(ll.is_finite());
    }

    #[test]
    fn rejects_dimension_mismatch_and_empty() {
        let model = toy_model();
        assert!(model.log_likelihood(&[vec![0.0, 1.0]]).is_err());
        assert!(model.log_likelihood(&[]).is_err());
    }

    #[test]
    fn sampling_is_deterministic_per_stream() {
        let model = toy_model();
        let a = model.sample(20, &mut RngStream::new(3, 8).rng());
        let b = model.sample(20, &mut RngStream::new(3, 8).rng());
        assert_eq!(a, b);
    }
}
