//! Poisson spike encoding of frame spectra.
//!
//! Each of the 100 magnitude bins becomes a spike channel. The frame
//! maximum maps to firing probability 1 per 1 ms step and the rest
//! scale linearly, realized as independent Bernoulli trials over the
//! 40-step window (the discrete-time Poisson approximation).

use rand::Rng;

use crate::frontend::FrameSpectrum;
use crate::raster::SpikeRaster;
use crate::rng::RngStream;

/// Steps per frame: 40 ms at 1 ms resolution.
pub const T_STEPS: usize = 40;

/// Encode one spectrum as a `channels x steps` raster.
///
/// Draws are consumed channel-major then step-major, and each spike is
/// the inverse-CDF comparison `u < p`, so for fixed draws a larger
/// normalized magnitude can only add spikes, never remove them.
pub fn encode(spectrum: &FrameSpectrum, stream: RngStream) -> SpikeRaster {
    encode_steps(spectrum, stream, T_STEPS)
}

pub fn encode_steps(spectrum: &FrameSpectrum, stream: RngStream, steps: usize) -> SpikeRaster {
    let mags = spectrum.magnitudes();
    let max = mags.iter().cloned().fold(0.0f64, f64::max);
    let mut raster = SpikeRaster::new(mags.len(), steps);
    let mut rng = stream.rng();
    for (channel, &m) in mags.iter().enumerate() {
        let p = if max > 0.0 { m / max } else { 0.0 };
        for step in 0..steps {
            let u: f64 = rng.random();
            if u < p {
                raster.set_spike(channel, step);
            }
        }
    }
    raster
}
