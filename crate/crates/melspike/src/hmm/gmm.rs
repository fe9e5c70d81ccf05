//! Diagonal-covariance Gaussian mixtures and the seeded k-means used
//! to initialize them.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Variances never drop below this after standardization.
pub const VAR_FLOOR: f64 = 1e-4;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// A mixture of diagonal Gaussians over `dim`-dimensional frames.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagGmm {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

impl DiagGmm {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn log_component_density(&self, g: usize, x: &[f64]) -> f64 {
        let mean = &self.means[g];
        let var = &self.variances[g];
        let mut acc = 0.0;
        for d in 0..x.len() {
            let diff = x[d] - mean[d];
            acc += LN_2PI + var[d].ln() + diff * diff / var[d];
        }
        -0.5 * acc
    }

    /// Log mixture density at `x`.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let logs: Vec<f64> = (0..self.components())
            .map(|g| self.weights[g].ln() + self.log_component_density(g, x))
            .collect();
        log_sum_exp(&logs)
    }

    /// Log density plus per-component posteriors, for the E step.
    pub fn log_density_and_posteriors(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let logs: Vec<f64> = (0..self.components())
            .map(|g| self.weights[g].ln() + self.log_component_density(g, x))
            .collect();
        let total = log_sum_exp(&logs);
        let post = logs.iter().map(|l| (l - total).exp()).collect();
        (total, post)
    }
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Seeded Lloyd iterations. Returns `k` centers; empty clusters are
/// reseeded to the point farthest from its assigned center.
pub fn kmeans(points: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    assert!(!points.is_empty() && k > 0);
    let dim = points[0].len();
    let mut centers: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            if points.len() >= k {
                // distinct starting points
                points[i * points.len() / k].to_vec()
            } else {
                // fewer points than centers: cycle with jitter
                let mut c = points[i % points.len()].to_vec();
                for v in &mut c {
                    *v += rng.random::<f64>() * 1e-3;
                }
                c
            }
        })
        .collect();
    let mut assignment = vec![0usize; points.len()];
    for _ in 0..10 {
        let mut changed = false;
        for (p, a) in points.iter().zip(assignment.iter_mut()) {
            let best = (0..k)
                .min_by(|&i, &j| {
                    squared_distance(p, &centers[i]).total_cmp(&squared_distance(p, &centers[j]))
                })
                .unwrap();
            if best != *a {
                *a = best;
                changed = true;
            }
        }
        let mut counts = vec![0usize; k];
        let mut sums = vec![vec![0.0; dim]; k];
        for (p, &a) in points.iter().zip(&assignment) {
            counts[a] += 1;
            for d in 0..dim {
                sums[a][d] += p[d];
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // farthest point from its own center takes over
                let far = (0..points.len())
                    .max_by(|&i, &j| {
                        squared_distance(points[i], &centers[assignment[i]])
                            .total_cmp(&squared_distance(points[j], &centers[assignment[j]]))
                    })
                    .unwrap();
                centers[c] = points[far].to_vec();
            } else {
                for d in 0..dim {
                    centers[c][d] = sums[c][d] / counts[c] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }
    centers
}

/// Fit a mixture from hard k-means assignments (the EM starting point).
pub fn init_mixture(points: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> DiagGmm {
    let dim = points[0].len();
    let centers = kmeans(points, k, rng);
    let mut counts = vec![0usize; k];
    let mut sums = vec![vec![0.0; dim]; k];
    let mut squares = vec![vec![0.0; dim]; k];
    for p in points {
        let a = (0..k)
            .min_by(|&i, &j| {
                squared_distance(p, &centers[i]).total_cmp(&squared_distance(p, &centers[j]))
            })
            .unwrap();
        counts[a] += 1;
        for d in 0..dim {
            sums[a][d] += p[d];
            squares[a][d] += p[d] * p[d];
        }
    }
    let total: usize = counts.iter().sum();
    let mut weights = Vec::with_capacity(k);
    let mut means = Vec::with_capacity(k);
    let mut variances = Vec::with_capacity(k);
    for g in 0..k {
        if counts[g] == 0 {
            weights.push(1e-3);
            means.push(centers[g].clone());
            variances.push(vec![1.0; dim]);
            continue;
        }
        let n = counts[g] as f64;
        weights.push(n / total as f64);
        let mean: Vec<f64> = sums[g].iter().map(|s| s / n).collect();
        let var: Vec<f64> = squares[g]
            .iter()
            .zip(&mean)
            .map(|(sq, m)| (sq / n - m * m).max(VAR_FLOOR))
            .collect();
        means.push(mean);
        variances.push(var);
    }
    let wsum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= wsum;
    }
    DiagGmm {
        weights,
        means,
        variances,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn single_gaussian_log_density_closed_form() {
        let gmm = DiagGmm {
            weights: vec![1.0],
            means: vec![vec![0.0, 1.0]],
            variances: vec![vec![1.0, 4.0]],
        };
        // N((0,1); x=(1,3)) with diag (1,4)
        let x = [1.0, 3.0];
        let expected = -0.5 * (2.0 * LN_2PI + 4.0f64.ln() + 1.0 + 4.0 / 4.0);
        assert!((gmm.log_density(&x) - expected).abs() < 1e-12);
    }

    #[test]
    fn posteriors_sum_to_one() {
        let gmm = DiagGmm {
            weights: vec![0.3, 0.7],
            means: vec![vec![0.0], vec![5.0]],
            variances: vec![vec![1.0], vec![2.0]],
        };
        let (_, post) = gmm.log_density_and_posteriors(&[1.2]);
        assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        let v = log_sum_exp(&[-1000.0, -1000.0]);
        assert!((v - (-1000.0 + 2.0f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn kmeans_separates_obvious_clusters() {
        let mut pts: Vec<Vec<f64>> = Vec::new();
        for i in 0..20 {
            pts.push(vec![0.0 + (i as f64) * 1e-3]);
            pts.push(vec![10.0 + (i as f64) * 1e-3]);
        }
        let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        let mut rng = RngStream::new(1, 0).rng();
        let mut centers = kmeans(&refs, 2, &mut rng);
        centers.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert!((centers[0][0] - 0.0095).abs() < 0.02);
        assert!((centers[1][0] - 10.0095).abs() < 0.02);
    }

    #[test]
    fn init_mixture_is_deterministic() {
        let pts: Vec<Vec<f64>> = (0..30).map(|i| vec![(i % 7) as f64, (i % 3) as f64]).collect();
        let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        let a = init_mixture(&refs, 4, &mut RngStream::new(2, 5).rng());
        let b = init_mixture(&refs, 4, &mut RngStream::new(2, 5).rng());
        assert_eq!(a, b);
        assert!((a.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(a.variances.iter().flatten().all(|&v| v >= VAR_FLOOR));
    }
}
