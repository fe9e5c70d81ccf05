//! Baum-Welch on synthetic data: fit left-to-right GMM-HMMs, watch
//! the log-likelihood climb, and classify held-out samples drawn from
//! the generative models themselves.
//!
//! ```bash
//! cargo run -p melspike --example hmm_synthetic
//! ```

use melspike::hmm::{train_models, train_single, FeatureSequence, TrainOptions};
use melspike::rng::RngStream;
use rand::Rng;

fn toy_class(digit: usize, n: usize, seed: u64) -> Vec<FeatureSequence> {
    let mut rng = RngStream::new(seed, digit as u64).rng();
    let lo = digit as f64 * 3.0;
    let hi = lo + 1.5;
    (0..n)
        .map(|i| {
            let len = 12 + (i % 5);
            let frames = (0..len)
                .map(|t| {
                    let base = if t * 2 < len { lo } else { hi };
                    vec![
                        base + rng.random::<f64>() - 0.5,
                        -0.5 * base + rng.random::<f64>() - 0.5,
                    ]
                })
                .collect();
            FeatureSequence {
                id: format!("{digit}_x_{i}"),
                label: digit,
                frames,
            }
        })
        .collect()
}

fn main() -> melspike::Result<()> {
    // per-iteration likelihood on one class
    let class = toy_class(4, 20, 5);
    let refs: Vec<&FeatureSequence> = class.iter().collect();
    let (_, history) = train_single(
        &refs,
        3,
        2,
        RngStream::new(1, 0),
        &TrainOptions {
            max_iterations: 12,
            rel_tolerance: 0.0,
        },
    )?;
    println!("EM log-likelihood per iteration:");
    for (i, ll) in history.iter().enumerate() {
        println!("  iter {i:2}: {ll:12.3}");
    }

    // a ten-class problem end to end
    let mut train: Vec<FeatureSequence> = Vec::new();
    for digit in 0..10 {
        train.extend(toy_class(digit, 15, 100 + digit as u64));
    }
    let set = train_models(&train, 3, 2, 7)?;

    let mut rng = RngStream::new(99, 0).rng();
    let mut correct = 0;
    let trials = 200;
    for t in 0..trials {
        let digit = t % 10;
        let standardized = set.models[digit].sample(14, &mut rng);
        // classify() expects raw-space features
        let raw: Vec<Vec<f64>> = standardized
            .iter()
            .map(|f| {
                f.iter()
                    .zip(&set.standardizer.mean)
                    .zip(&set.standardizer.scale)
                    .map(|((x, m), s)| x * s + m)
                    .collect()
            })
            .collect();
        correct += usize::from(set.classify(&raw) == digit);
    }
    println!("\nresampled classification: {correct}/{trials}");
    Ok(())
}
