//! Train the feature discovery layer on a small in-memory corpus and
//! watch the probabilistic STDP rule differentiate the weight rows.
//!
//! ```bash
//! cargo run --release -p melspike --example stdp_training
//! ```

use melspike::discovery::{extract, train, DiscoveryWeights, StdpParams};
use melspike::frontend::{Utterance, WindowFunction};
use melspike::pipeline::{RunConfig, SnnStack};
use melspike::synth::synth_utterance;

fn weight_stats(w: &DiscoveryWeights) -> (f64, usize, usize) {
    let mut sum = 0.0;
    let mut low = 0;
    let mut high = 0;
    let mut n = 0;
    for row in w.rows() {
        for &v in row {
            sum += v;
            low += usize::from(v < 0.05);
            high += usize::from(v > 0.95);
            n += 1;
        }
    }
    (sum / n as f64, low, high)
}

fn main() -> melspike::Result<()> {
    let mut config = RunConfig::default();
    config.window = WindowFunction::Rectangular;
    let stack = SnnStack::from_config(&config);
    let params = StdpParams::default();

    // 5 speakers x 10 digits x 4 repeats, pooled once up front
    let mut pooled = Vec::new();
    for digit in 0..10 {
        for speaker in 0..5 {
            for idx in 0..4 {
                let samples = synth_utterance(digit, speaker, idx, 11);
                let utt = Utterance::new("u", digit, samples, 8000)?;
                pooled.push(stack.pooled_frames(&utt, pooled.len())?);
            }
        }
    }

    let init = DiscoveryWeights::init_random(config.h, 196, config.seed);
    let (mean, low, high) = weight_stats(&init);
    println!("init:    mean {mean:.3}, {low} near 0, {high} near 1");

    for epochs in [1usize, 3, 6] {
        let weights = train(&pooled, config.h, epochs, &params, config.seed)?;
        let (mean, low, high) = weight_stats(&weights);
        println!("{epochs} epoch(s): mean {mean:.3}, {low} near 0, {high} near 1");
    }

    let weights = train(&pooled, config.h, 6, &params, config.seed)?;
    let features = extract(&pooled[0], &weights, &params)?;
    println!(
        "\nfirst utterance -> {} frames of H={} accumulated potentials",
        features.len(),
        features[0].len()
    );
    let head: Vec<String> = features[features.len() / 2]
        .iter()
        .take(8)
        .map(|v| format!("{v:7.2}"))
        .collect();
    println!("mid-frame feature head: [{} ...]", head.join(", "));
    Ok(())
}
