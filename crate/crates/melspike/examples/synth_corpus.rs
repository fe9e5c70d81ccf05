//! Generate a miniature synthetic digit corpus on disk and ingest it
//! back into a labeled manifest.
//!
//! ```bash
//! cargo run -p melspike --example synth_corpus
//! ```

use melspike::pipeline::{ingest_dataset, test_ids, SplitSpec};
use melspike::synth::{generate_corpus, SynthOptions};

fn main() -> melspike::Result<()> {
    let dir = std::env::temp_dir().join("melspike-example-corpus");
    std::fs::remove_dir_all(&dir).ok();
    let n = generate_corpus(
        &dir,
        &SynthOptions {
            speakers: 5,
            repeats: 2,
            seed: 3,
        },
    )?;
    println!("wrote {n} files under {}", dir.display());

    let (entries, warnings) = ingest_dataset(&dir)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    println!("manifest: {} utterances", entries.len());
    for e in entries.iter().take(5) {
        println!("  {} -> digit {}, speaker {}", e.id, e.label, e.speaker);
    }

    let test = test_ids(&entries, &SplitSpec::AutoSpeaker)?;
    println!(
        "auto split: {} train / {} test (speaker-held-out)",
        entries.len() - test.len(),
        test.len()
    );
    Ok(())
}
