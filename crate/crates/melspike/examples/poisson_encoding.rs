//! Turn one synthetic utterance into frame spectra and Poisson spike
//! rasters, and dump a raster in the text exchange format.
//!
//! ```bash
//! cargo run -p melspike --example poisson_encoding
//! ```

use melspike::encoder::encode;
use melspike::frontend::{SpectrumAnalyzer, Utterance, WindowFunction};
use melspike::rng::{frame_stream_id, RngStream};
use melspike::synth::synth_utterance;

fn main() -> melspike::Result<()> {
    let samples = synth_utterance(3, 0, 0, 42);
    let utterance = Utterance::new("3_s00_0", 3, samples, 8000)?;
    let analyzer = SpectrumAnalyzer::new(WindowFunction::Rectangular);
    let spectra = analyzer.spectrogram(&utterance)?;
    println!(
        "{} samples -> {} frames of 100 magnitude bins",
        utterance.samples.len(),
        spectra.len()
    );

    let mid = &spectra[spectra.len() / 2];
    let raster = encode(mid, RngStream::new(42, frame_stream_id(0, mid.frame_index)));
    println!(
        "frame {}: {} spikes over {} channels x {} steps",
        mid.frame_index,
        raster.total_spikes(),
        raster.channels(),
        raster.steps()
    );

    // channels with the highest firing rates are the spectral peaks
    let mut by_count: Vec<(usize, u32)> = (0..raster.channels())
        .map(|c| (c, raster.count(c)))
        .collect();
    by_count.sort_by_key(|(_, n)| std::cmp::Reverse(*n));
    println!("hottest channels (bin -> spikes/40):");
    for (c, n) in by_count.iter().take(8) {
        println!("  bin {:3} ({:4.0} Hz): {n}", c + 1, (c + 1) as f64 * 40.0);
    }

    let mut dump = Vec::new();
    raster.write_text(&mut dump)?;
    let text = String::from_utf8(dump).unwrap();
    println!("\nraster dump (first 12 lines):");
    for line in text.lines().take(12) {
        println!("  {line}");
    }
    Ok(())
}
