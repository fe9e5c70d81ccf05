//! Audio frontend: 8 kHz PCM in, per-frame magnitude spectra out.
//!
//! Utterances are cut into 25 ms frames (200 samples) with 50%
//! overlap, windowed, and transformed with a 200-point DFT. Bins
//! 1..=100 (40 Hz spacing, DC dropped) form the 100-value frame
//! spectrum the spike encoder consumes.

use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::wav;

pub const SAMPLE_RATE: u32 = 8000;
/// 25 ms at 8 kHz.
pub const FRAME_LEN: usize = 200;
/// 50% overlap.
pub const FRAME_HOP: usize = 100;
/// Magnitude bins kept per frame (bins 1..=100; 40 Hz each).
pub const SPECTRUM_BINS: usize = 100;
/// Frequency width of one DFT bin.
pub const BIN_HZ: f64 = SAMPLE_RATE as f64 / FRAME_LEN as f64;

/// One labeled recording.
#[derive(Debug, Clone)]
pub struct Utterance {
    pub id: String,
    pub label: usize,
    pub samples: Vec<i16>,
    pub sample_rate: u32,
}

impl Utterance {
    pub fn new(id: impl Into<String>, label: usize, samples: Vec<i16>, sample_rate: u32) -> Result<Self> {
        let id = id.into();
        if sample_rate != SAMPLE_RATE {
            return Err(Error::InvalidUtterance(format!(
                "`{id}`: sample_rate must be {SAMPLE_RATE} Hz, got {sample_rate}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::InvalidUtterance(format!("`{id}`: no samples")));
        }
        if label > 9 {
            return Err(Error::InvalidUtterance(format!(
                "`{id}`: label must be a digit 0-9, got {label}"
            )));
        }
        Ok(Utterance {
            id,
            label,
            samples,
            sample_rate,
        })
    }

    pub fn from_wav(path: &Path, id: impl Into<String>, label: usize) -> Result<Self> {
        let data = wav::read_wav(path)?;
        Utterance::new(id, label, data.samples, data.sample_rate)
    }
}

/// The 100 magnitude values of one analysis frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSpectrum {
    pub frame_index: usize,
    magnitudes: Vec<f64>,
}

impl FrameSpectrum {
    pub fn new(frame_index: usize, magnitudes: Vec<f64>) -> Result<Self> {
        if magnitudes.len() != SPECTRUM_BINS {
            return Err(crate::error::dim_mismatch(
                "frame spectrum",
                SPECTRUM_BINS,
                magnitudes.len(),
            ));
        }
        if magnitudes.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidUtterance(format!(
                "frame {frame_index}: magnitudes must be finite and non-negative"
            )));
        }
        Ok(FrameSpectrum {
            frame_index,
            magnitudes,
        })
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }
}

/// Analysis window applied before the DFT.
///
/// The rectangular mode exists for oracle tests against closed-form
/// transforms; Hamming is the default everywhere else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowFunction {
    #[default]
    Hamming,
    Rectangular,
}

impl WindowFunction {
    pub fn name(&self) -> &'static str {
        match self {
            WindowFunction::Hamming => "hamming",
            WindowFunction::Rectangular => "rectangular",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "hamming" => Ok(WindowFunction::Hamming),
            "rectangular" => Ok(WindowFunction::Rectangular),
            other => Err(Error::Config(format!(
                "unknown window function `{other}` (expected `hamming` or `rectangular`)"
            ))),
        }
    }

    fn coefficients(&self, len: usize) -> Vec<f64> {
        match self {
            WindowFunction::Rectangular => vec![1.0; len],
            WindowFunction::Hamming => (0..len)
                .map(|n| {
                    0.54 - 0.46 * (2.0 * std::f64::consts::PI * n as f64 / (len - 1) as f64).cos()
                })
                .collect(),
        }
    }
}

/// Cut an utterance into 200-sample windows with 100-sample hop.
///
/// Window k covers samples `[k*100, k*100 + 200)`; the final partial
/// window is zero-padded. Utterances shorter than one frame are
/// rejected.
pub fn frame(utterance: &Utterance) -> Result<Vec<Vec<f64>>> {
    let len = utterance.samples.len();
    if len < FRAME_LEN {
        return Err(Error::TooShort {
            id: utterance.id.clone(),
            samples: len,
            min: FRAME_LEN,
        });
    }
    // starts k*hop with k*hop + hop < len
    let count = (len - FRAME_HOP - 1) / FRAME_HOP + 1;
    let mut frames = Vec::with_capacity(count);
    for k in 0..count {
        let start = k * FRAME_HOP;
        let mut window = vec![0.0; FRAME_LEN];
        let end = (start + FRAME_LEN).min(len);
        for (w, s) in window.iter_mut().zip(&utterance.samples[start..end]) {
            *w = f64::from(*s);
        }
        frames.push(window);
    }
    Ok(frames)
}

/// Reusable 200-point DFT plan plus window coefficients.
pub struct SpectrumAnalyzer {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    window_fn: WindowFunction,
}

impl SpectrumAnalyzer {
    pub fn new(window_fn: WindowFunction) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(FRAME_LEN);
        SpectrumAnalyzer {
            fft,
            window: window_fn.coefficients(FRAME_LEN),
            window_fn,
        }
    }

    pub fn window_function(&self) -> WindowFunction {
        self.window_fn
    }

    /// Magnitudes of all 200 DFT bins of a windowed frame.
    pub fn full_magnitudes(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if samples.len() != FRAME_LEN {
            return Err(crate::error::dim_mismatch(
                "analysis window",
                FRAME_LEN,
                samples.len(),
            ));
        }
        let mut buf: Vec<Complex64> = samples
            .iter()
            .zip(&self.window)
            .map(|(s, w)| Complex64::new(s * w, 0.0))
            .collect();
        self.fft.process(&mut buf);
        Ok(buf.iter().map(|c| c.norm()).collect())
    }

    /// The 100-value frame spectrum: bins 1..=100, DC dropped.
    pub fn analyze(&self, frame_index: usize, samples: &[f64]) -> Result<FrameSpectrum> {
        let full = self.full_magnitudes(samples)?;
        FrameSpectrum::new(frame_index, full[1..=SPECTRUM_BINS].to_vec())
    }

    /// Frame an utterance and analyze every window.
    pub fn spectrogram(&self, utterance: &Utterance) -> Result<Vec<FrameSpectrum>> {
        frame(utterance)?
            .iter()
            .enumerate()
            .map(|(k, w)| self.analyze(k, w))
            .collect()
    }
}

/// One-shot convenience around [`SpectrumAnalyzer::analyze`].
pub fn magnitude_spectrum(
    frame_index: usize,
    samples: &[f64],
    window_fn: WindowFunction,
) -> Result<FrameSpectrum> {
    SpectrumAnalyzer::new(window_fn).analyze(frame_index, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn utt(samples: Vec<i16>) -> Utterance {
        Utterance::new("t", 0, samples, SAMPLE_RATE).unwrap()
    }

    /// Direct-summation DFT, independent of the rustfft path.
    fn dft_oracle(samples: &[f64]) -> Vec<f64> {
        let n = samples.len();
        (0..n)
            .map(|k| {
                let mut re = 0.0;
                let mut im = 0.0;
                for (t, x) in samples.iter().enumerate() {
                    let angle = -2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64;
                    re += x * angle.cos();
                    im += x * angle.sin();
                }
                (re * re + im * im).sqrt()
            })
            .collect()
    }

    #[test]
    fn frame_counts_match_enumeration() {
        // enumerate starts k*100 with k*100 + 100 < len
        let count = |len: usize| (0..).take_while(|k| k * 100 + 100 < len).count().max(1);
        for len in [200usize, 250, 300, 800, 6000, 201, 999] {
            let frames = frame(&utt(vec![1; len])).unwrap();
            assert_eq!(frames.len(), count(len), "len={len}");
        }
        assert_eq!(frame(&utt(vec![1; 800])).unwrap().len(), 7);
        assert_eq!(frame(&utt(vec![1; 200])).unwrap().len(), 1);
        assert_eq!(frame(&utt(vec![1; 6000])).unwrap().len(), 59);
    }

    #[test]
    fn exact_fit_has_no_padding() {
        let frames = frame(&utt(vec![7; 200])).unwrap();
        assert_eq!(frames.len(), 1);
        assert!(frames[0].iter().all(|&s| s == 7.0));
    }

    #[test]
    fn final_partial_frame_zero_padded() {
        let frames = frame(&utt(vec![3; 250])).unwrap();
        assert_eq!(frames.len(), 2);
        let last = &frames[1];
        assert!(last[..150].iter().all(|&s| s == 3.0));
        assert!(last[150..].iter().all(|&s| s == 0.0));
    }

    #[test]
    fn too_short_rejected() {
        let err = frame(&utt(vec![0; 199])).unwrap_err();
        assert!(matches!(err, Error::TooShort { .. }), "{err}");
    }

    #[test]
    fn every_sample_covered_once_or_twice() {
        for len in [200usize, 450, 1234, 6000] {
            let frames = frame(&utt(vec![1; len])).unwrap();
            let mut coverage = vec![0usize; len];
            for (k, _) in frames.iter().enumerate() {
                let start = k * FRAME_HOP;
                for cov in coverage.iter_mut().skip(start).take(FRAME_LEN) {
                    *cov += 1;
                }
            }
            assert!(
                coverage.iter().all(|&c| c == 1 || c == 2),
                "len={len}: coverage out of range"
            );
        }
    }

    #[test]
    fn all_zero_window_gives_zero_spectrum() {
        let spec = magnitude_spectrum(0, &[0.0; FRAME_LEN], WindowFunction::Hamming).unwrap();
        assert!(spec.magnitudes().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn unit_cosine_at_400hz_lands_in_bin_10() {
        // closed-form DFT of a bin-centered cosine: |X_k| = N/2 at k=10
        let samples: Vec<f64> = (0..FRAME_LEN)
            .map(|n| (2.0 * std::f64::consts::PI * 400.0 * n as f64 / SAMPLE_RATE as f64).cos())
            .collect();
        let spec = magnitude_spectrum(0, &samples, WindowFunction::Rectangular).unwrap();
        let mags = spec.magnitudes();
        // magnitudes()[9] is bin 10 (DC dropped)
        assert!((mags[9] - 100.0).abs() < 1e-9, "bin 10 = {}", mags[9]);
        let peak = mags
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(peak, 9);
        // off-peak bins carry essentially nothing for a bin-centered tone
        assert!(mags[20] < 1e-9);
    }

    #[test]
    fn matches_direct_summation_oracle_on_noise() {
        let mut rng = crate::rng::RngStream::new(11, 0).rng();
        use rand::Rng;
        let samples: Vec<f64> = (0..FRAME_LEN).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let analyzer = SpectrumAnalyzer::new(WindowFunction::Rectangular);
        let ours = analyzer.full_magnitudes(&samples).unwrap();
        let oracle = dft_oracle(&samples);
        for (k, (a, b)) in ours.iter().zip(&oracle).enumerate() {
            let denom = b.abs().max(1.0);
            assert!((a - b).abs() / denom < 1e-9, "bin {k}: {a} vs {b}");
        }
    }

    #[test]
    fn deterministic_spectra() {
        let u = utt((0..500).map(|i| (i % 251) as i16 - 125).collect());
        let analyzer = SpectrumAnalyzer::new(WindowFunction::Hamming);
        let a = analyzer.spectrogram(&u).unwrap();
        let b = analyzer.spectrogram(&u).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn parseval_on_full_transform(seed in 0u64..500) {
            use rand::Rng;
            let mut rng = crate::rng::RngStream::new(seed, 3).rng();
            let samples: Vec<f64> =
                (0..FRAME_LEN).map(|_| rng.random::<f64>() * 200.0 - 100.0).collect();
            let analyzer = SpectrumAnalyzer::new(WindowFunction::Rectangular);
            let mags = analyzer.full_magnitudes(&samples).unwrap();
            let freq_energy: f64 = mags.iter().map(|m| m * m).sum();
            let time_energy: f64 = samples.iter().map(|s| s * s).sum();
            let expected = FRAME_LEN as f64 * time_energy;
            prop_assert!(((freq_energy - expected) / expected).abs() < 1e-9);
        }
    }
}
