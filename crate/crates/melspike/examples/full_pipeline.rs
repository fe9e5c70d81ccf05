//! End-to-end run on a small synthetic corpus: generate WAVs, train
//! the spiking layers, extract features, train the per-digit HMMs and
//! print the evaluation report.
//!
//! ```bash
//! cargo run --release -p melspike --example full_pipeline
//! ```

use std::time::Instant;

use melspike::frontend::WindowFunction;
use melspike::pipeline::{run_pipeline, RunConfig};
use melspike::synth::{generate_corpus, SynthOptions};

fn main() -> melspike::Result<()> {
    let dir = std::env::temp_dir().join("melspike-example-pipeline");
    std::fs::remove_dir_all(&dir).ok();

    let t = Instant::now();
    let n = generate_corpus(
        &dir.join("data"),
        &SynthOptions {
            speakers: 10,
            repeats: 10,
            seed: 7,
        },
    )?;
    println!("generated {n} wav files in {:?}", t.elapsed());

    // a reduced run for demo turnaround; accuracy keeps climbing with
    // corpus size and the default 10 epochs
    let mut config = RunConfig::default();
    config.dataset_dir = dir.join("data");
    config.out_dir = dir.join("out");
    config.epochs = 6;
    // the synthetic corpus is built from bin-exact tones; rectangular
    // analysis is the matched window for it
    config.window = WindowFunction::Rectangular;

    let t = Instant::now();
    let outcome = run_pipeline(&config)?;
    println!("pipeline finished in {:?}\n", t.elapsed());
    print!("{}", outcome.report.to_text());
    println!("artifacts under {}", outcome.out_dir.display());
    Ok(())
}
