//! Minimal RIFF/WAVE reader and writer for 16-bit PCM mono files.
//!
//! The reader accepts exactly the encoding the pipeline consumes and
//! rejects everything else with a diagnostic naming the offending
//! header field.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct WavData {
    pub sample_rate: u32,
    pub samples: Vec<i16>,
}

fn bad(field: &'static str, detail: impl ToString) -> Error {
    Error::InvalidWav {
        field,
        detail: detail.to_string(),
    }
}

fn le_u16(bytes: &[u8], at: usize, field: &'static str) -> Result<u16> {
    bytes
        .get(at..at + 2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .ok_or_else(|| bad(field, "truncated"))
}

fn le_u32(bytes: &[u8], at: usize, field: &'static str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| bad(field, "truncated"))
}

/// Parse a mono 16-bit PCM WAV from raw bytes.
pub fn parse_wav(bytes: &[u8]) -> Result<WavData> {
    if bytes.get(0..4) != Some(b"RIFF") {
        return Err(bad("riff_id", "missing RIFF magic"));
    }
    if bytes.get(8..12) != Some(b"WAVE") {
        return Err(bad("wave_id", "missing WAVE form type"));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // format, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = le_u32(bytes, pos + 4, "chunk_size")? as usize;
        let body_start = pos + 8;
        let body_end = body_start + size;
        if body_end > bytes.len() {
            return Err(bad("chunk_size", format!("chunk `{}` overruns file", String::from_utf8_lossy(id))));
        }
        match id {
            b"fmt " => {
                let format = le_u16(bytes, body_start, "audio_format")?;
                let channels = le_u16(bytes, body_start + 2, "num_channels")?;
                let rate = le_u32(bytes, body_start + 4, "sample_rate")?;
                let bits = le_u16(bytes, body_start + 14, "bits_per_sample")?;
                fmt = Some((format, channels, rate, bits));
            }
            b"data" => data = Some(&bytes[body_start..body_end]),
            _ => {} // skip unknown chunks (LIST, fact, ...)
        }
        // chunks are word-aligned
        pos = body_end + (size & 1);
    }

    let (format, channels, rate, bits) = fmt.ok_or_else(|| bad("fmt", "missing fmt chunk"))?;
    if format != 1 {
        return Err(bad("audio_format", format!("expected PCM (1), got {format}")));
    }
    if channels != 1 {
        return Err(bad("num_channels", format!("expected mono (1), got {channels}")));
    }
    if bits != 16 {
        return Err(bad("bits_per_sample", format!("expected 16, got {bits}")));
    }
    let data = data.ok_or_else(|| bad("data", "missing data chunk"))?;
    if data.len() % 2 != 0 {
        return Err(bad("data", "odd byte count for 16-bit samples"));
    }
    let samples = data
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]))
        .collect();
    Ok(WavData {
        sample_rate: rate,
        samples,
    })
}

pub fn read_wav(path: &Path) -> Result<WavData> {
    let bytes = fs::read(path)?;
    parse_wav(&bytes)
}

/// Write a mono 16-bit PCM WAV.
pub fn write_wav(path: &Path, sample_rate: u32, samples: &[i16]) -> Result<()> {
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + samples.len() * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_bytes(samples: &[i16]) -> Vec<u8> {
        let dir = std::env::temp_dir().join(format!("melspike-wav-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.wav");
        write_wav(&path, 8000, samples).unwrap();
        std::fs::read(&path).unwrap()
    }

    #[test]
    fn round_trip() {
        let samples = vec![0i16, 100, -100, i16::MAX, i16::MIN];
        let bytes = sample_bytes(&samples);
        let parsed = parse_wav(&bytes).unwrap();
        assert_eq!(parsed.sample_rate, 8000);
        assert_eq!(parsed.samples, samples);
    }

    #[test]
    fn rejects_stereo_naming_field() {
        let mut bytes = sample_bytes(&[0, 1, 2, 3]);
        bytes[22] = 2; // num_channels
        let err = parse_wav(&bytes).unwrap_err();
        assert!(err.to_string().contains("num_channels"), "{err}");
    }

    #[test]
    fn rejects_float_format_naming_field() {
        let mut bytes = sample_bytes(&[0, 1]);
        bytes[20] = 3; // audio_format = IEEE float
        let err = parse_wav(&bytes).unwrap_err();
        assert!(err.to_string().contains("audio_format"), "{err}");
    }

    #[test]
    fn rejects_8bit_naming_field() {
        let mut bytes = sample_bytes(&[0, 1]);
        bytes[34] = 8; // bits_per_sample
        let err = parse_wav(&bytes).unwrap_err();
        assert!(err.to_string().contains("bits_per_sample"), "{err}");
    }

    #[test]
    fn skips_unknown_chunks() {
        let samples = vec![5i16, -5, 7];
        let bytes = sample_bytes(&samples);
        // splice a LIST chunk between fmt and data
        let mut spliced = bytes[..36].to_vec();
        spliced.extend_from_slice(b"LIST");
        spliced.extend_from_slice(&4u32.to_le_bytes());
        spliced.extend_from_slice(b"INFO");
        spliced.extend_from_slice(&bytes[36..]);
        let total = (spliced.len() - 8) as u32;
        spliced[4..8].copy_from_slice(&total.to_le_bytes());
        let parsed = parse_wav(&spliced).unwrap();
        assert_eq!(parsed.samples, samples);
    }
}
