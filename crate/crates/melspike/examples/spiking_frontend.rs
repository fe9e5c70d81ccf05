//! Walk one utterance through the full spiking front half and show
//! how activity moves through the layers: encoder raster, the seven
//! convolutional feature maps, and the Mel-pooled raster.
//!
//! ```bash
//! cargo run -p melspike --example spiking_frontend
//! ```

use melspike::conv::{convolve_integrate, DogFilterBank, LifParams};
use melspike::encoder::encode;
use melspike::frontend::{SpectrumAnalyzer, Utterance, WindowFunction};
use melspike::pool::{build_schedule, pool};
use melspike::rng::{frame_stream_id, RngStream};
use melspike::synth::synth_utterance;

fn main() -> melspike::Result<()> {
    let samples = synth_utterance(6, 1, 0, 9);
    let utterance = Utterance::new("6_s01_0", 6, samples, 8000)?;
    let analyzer = SpectrumAnalyzer::new(WindowFunction::Rectangular);
    let bank = DogFilterBank::build();
    let lif = LifParams::conv_layer();
    let schedule = build_schedule();

    let spectra = analyzer.spectrogram(&utterance)?;
    println!("frames: {}", spectra.len());
    println!("frame |  encoder | conv maps (spikes per map)          | pooled");
    for spectrum in spectra.iter().step_by(5) {
        let raster = encode(
            spectrum,
            RngStream::new(9, frame_stream_id(0, spectrum.frame_index)),
        );
        let maps = convolve_integrate(&raster, &bank, &lif)?;
        let pooled = pool(&maps, &schedule)?;
        let per_map: Vec<String> = maps
            .maps()
            .iter()
            .map(|m| format!("{:4}", m.total_spikes()))
            .collect();
        println!(
            "{:5} | {:8} | {} | {:5}",
            spectrum.frame_index,
            raster.total_spikes(),
            per_map.join(" "),
            pooled.total_spikes()
        );
    }
    println!("\nouter maps stay quiet: their truncated filters carry less");
    println!("positive mass than the firing threshold admits.");
    Ok(())
}
