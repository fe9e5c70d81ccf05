//! Binary spike rasters: the currency passed between network layers.

use std::io::{BufRead, Write};

use crate::error::{dim_mismatch, Error, Result};

/// A binary spike matrix, `channels x steps`, at 1 ms resolution.
///
/// Steps are packed into one `u64` word per channel, which caps a
/// raster at 64 steps; the pipeline runs at T=40 throughout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeRaster {
    channels: usize,
    steps: usize,
    words: Vec<u64>,
}

impl SpikeRaster {
    pub fn new(channels: usize, steps: usize) -> Self {
        assert!(steps <= 64, "raster supports at most 64 steps, got {steps}");
        SpikeRaster {
            channels,
            steps,
            words: vec![0; channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    #[inline]
    pub fn spike(&self, channel: usize, step: usize) -> bool {
        debug_assert!(step < self.steps);
        self.words[channel] >> step & 1 == 1
    }

    #[inline]
    pub fn set_spike(&mut self, channel: usize, step: usize) {
        debug_assert!(step < self.steps);
        self.words[channel] |= 1 << step;
    }

    /// Spike count of one channel over the whole raster.
    #[inline]
    pub fn count(&self, channel: usize) -> u32 {
        self.words[channel].count_ones()
    }

    pub fn total_spikes(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    /// The packed spike train of one channel.
    #[inline]
    pub fn channel_word(&self, channel: usize) -> u64 {
        self.words[channel]
    }

    /// Overwrite one channel's train with a packed word.
    pub fn set_channel_word(&mut self, channel: usize, word: u64) {
        debug_assert!(self.steps == 64 || word >> self.steps == 0);
        self.words[channel] = word;
    }

    /// Channels that fire at `step`, ascending.
    pub fn active_at(&self, step: usize) -> Vec<usize> {
        (0..self.channels).filter(|&c| self.spike(c, step)).collect()
    }

    /// Active-channel lists for every step, computed in one pass.
    pub fn active_by_step(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.steps];
        for c in 0..self.channels {
            let mut w = self.words[c];
            while w != 0 {
                let t = w.trailing_zeros() as usize;
                out[t].push(c);
                w &= w - 1;
            }
        }
        out
    }

    /// Text dump: a `channels=<C> steps=<T>` header, then one line of
    /// '0'/'1' per channel.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "channels={} steps={}", self.channels, self.steps)?;
        let mut line = String::with_capacity(self.steps);
        for c in 0..self.channels {
            line.clear();
            for t in 0..self.steps {
                line.push(if self.spike(c, t) { '1' } else { '0' });
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let bad = |detail: String| Error::Parse {
            what: "spike raster",
            detail,
        };
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| bad("empty input".into()))??;
        let mut channels = None;
        let mut steps = None;
        for part in header.split_whitespace() {
            match part.split_once('=') {
                Some(("channels", v)) => channels = v.parse::<usize>().ok(),
                Some(("steps", v)) => steps = v.parse::<usize>().ok(),
                _ => return Err(bad(format!("unexpected header token `{part}`"))),
            }
        }
        let (channels, steps) = match (channels, steps) {
            (Some(c), Some(t)) if t <= 64 => (c, t),
            _ => return Err(bad(format!("bad header `{header}`"))),
        };
        let mut raster = SpikeRaster::new(channels, steps);
        for c in 0..channels {
            let line = lines
                .next()
                .ok_or_else(|| bad(format!("missing channel line {c}")))??;
            if line.len() != steps {
                return Err(bad(format!(
                    "channel {c}: expected {steps} symbols, got {}",
                    line.len()
                )));
            }
            for (t, ch) in line.chars().enumerate() {
                match ch {
                    '1' => raster.set_spike(c, t),
                    '0' => {}
                    other => return Err(bad(format!("channel {c}: bad symbol `{other}`"))),
                }
            }
        }
        Ok(raster)
    }

    pub(crate) fn expect_shape(
        &self,
        context: &'static str,
        channels: usize,
        steps: usize,
    ) -> Result<()> {
        if self.channels != channels || self.steps != steps {
            return Err(dim_mismatch(
                context,
                format!("{channels}x{steps}"),
                format!("{}x{}", self.channels, self.steps),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_and_query() {
        let mut r = SpikeRaster::new(3, 40);
        r.set_spike(1, 0);
        r.set_spike(1, 39);
        assert!(r.spike(1, 0));
        assert!(r.spike(1, 39));
        assert!(!r.spike(1, 20));
        assert_eq!(r.count(1), 2);
        assert_eq!(r.count(0), 0);
        assert_eq!(r.total_spikes(), 2);
    }

    #[test]
    fn active_by_step_matches_scan() {
        let mut r = SpikeRaster::new(5, 40);
        for (c, t) in [(0, 3), (2, 3), (4, 3), (1, 0), (4, 39)] {
            r.set_spike(c, t);
        }
        let by_step = r.active_by_step();
        for t in 0..40 {
            assert_eq!(by_step[t], r.active_at(t), "step {t}");
        }
    }

    #[test]
    fn text_round_trip() {
        let mut r = SpikeRaster::new(4, 40);
        r.set_spike(0, 0);
        r.set_spike(3, 12);
        r.set_spike(3, 13);
        let mut buf = Vec::new();
        r.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("channels=4 steps=40\n"));
        let back = SpikeRaster::read_text(&buf[..]).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn read_rejects_bad_symbol() {
        let input = b"channels=1 steps=4\n01x0\n";
        assert!(SpikeRaster::read_text(&input[..]).is_err());
    }
}
