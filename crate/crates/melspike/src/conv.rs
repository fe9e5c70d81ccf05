//! Spiking convolutional layer: 7 shifted difference-of-Gaussian
//! filters drive leaky integrate-and-fire neurons over the input
//! raster, one 100-neuron feature map per filter.
//!
//! Accumulation contract (tests compare against an independent
//! straight-loop simulation bit for bit, so the expression order is
//! part of the interface): the input current at each step sums active
//! taps in ascending tap index, and the membrane update is
//! `u * alpha + i_in * r * (1 - alpha)` with `alpha = exp(-dt/tau)`.

use crate::error::Result;
use crate::raster::SpikeRaster;

/// Taps per filter.
pub const FILTER_TAPS: usize = 7;
/// Filters / feature maps.
pub const NUM_FILTERS: usize = 7;
/// Neurons per feature map (equals the input channel count).
pub const MAP_LEN: usize = 100;

/// Gaussian density with mean zero.
fn gaussian(x: f64, variance: f64) -> f64 {
    (-(x * x) / (2.0 * variance)).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
}

/// The base band-pass kernel: N(x;0,1) - N(x;0,6) on x in {-3..3}.
pub fn dog(x: f64) -> f64 {
    gaussian(x, 1.0) - gaussian(x, 6.0)
}

/// Seven translated copies of the 7-tap DoG kernel.
///
/// Filter k (0-based) is the base kernel re-centered at offset k-3;
/// taps that fall outside the base support {-3..3} are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DogFilterBank {
    filters: Vec<[f64; FILTER_TAPS]>,
}

impl DogFilterBank {
    pub fn build() -> Self {
        let mut filters = Vec::with_capacity(NUM_FILTERS);
        for k in 0..NUM_FILTERS {
            let offset = k as i64 - 3;
            let mut taps = [0.0; FILTER_TAPS];
            for (j, tap) in taps.iter_mut().enumerate() {
                let x = j as i64 - 3 - offset;
                if (-3..=3).contains(&x) {
                    *tap = dog(x as f64);
                }
            }
            filters.push(taps);
        }
        DogFilterBank { filters }
    }

    pub fn filter(&self, k: usize) -> &[f64; FILTER_TAPS] {
        &self.filters[k]
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }
}

impl Default for DogFilterBank {
    fn default() -> Self {
        Self::build()
    }
}

/// Leaky integrate-and-fire constants. The RC circuit gives
/// tau = R*C = 1 ms; reset potential is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifParams {
    pub tau_ms: f64,
    pub resistance: f64,
    pub threshold: f64,
}

impl LifParams {
    /// Convolutional-layer constants (threshold 0.4).
    pub fn conv_layer() -> Self {
        LifParams {
            tau_ms: 1.0,
            resistance: 1.0,
            threshold: 0.4,
        }
    }

    pub fn with_threshold(threshold: f64) -> Self {
        LifParams {
            threshold,
            ..LifParams::conv_layer()
        }
    }

    /// Per-step decay factor exp(-dt/tau) at dt = 1 ms.
    #[inline]
    pub fn alpha(&self) -> f64 {
        (-1.0 / self.tau_ms).exp()
    }
}

/// One exact-exponential membrane update.
///
/// Returns the post-step potential and whether the neuron fired (in
/// which case the potential has been reset to zero).
#[inline]
pub fn lif_step(u: f64, i_in: f64, params: &LifParams) -> (f64, bool) {
    let alpha = params.alpha();
    let next = u * alpha + i_in * params.resistance * (1.0 - alpha);
    if next >= params.threshold {
        (0.0, true)
    } else {
        (next, false)
    }
}

/// The 7 spike maps produced by the convolutional layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureMaps {
    maps: Vec<SpikeRaster>,
}

impl FeatureMaps {
    /// Build from pre-existing rasters; every map must be 100 channels
    /// and share one step count.
    pub fn new(maps: Vec<SpikeRaster>) -> Result<Self> {
        if maps.is_empty() {
            return Err(crate::error::dim_mismatch("feature maps", NUM_FILTERS, 0));
        }
        let steps = maps[0].steps();
        for map in &maps {
            map.expect_shape("feature map", MAP_LEN, steps)?;
        }
        Ok(FeatureMaps { maps })
    }

    pub fn maps(&self) -> &[SpikeRaster] {
        &self.maps
    }

    pub fn map(&self, k: usize) -> &SpikeRaster {
        &self.maps[k]
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }
}

/// Convolve the input raster with every filter and integrate each
/// (map, position) neuron over the frame.
///
/// The current into neuron m of map k at step t is the filter dotted
/// with the spike bits of input channels m-3..=m+3 (zero outside the
/// input range), and each neuron runs [`lif_step`] across the steps.
pub fn convolve_integrate(
    input: &SpikeRaster,
    bank: &DogFilterBank,
    params: &LifParams,
) -> Result<FeatureMaps> {
    input.expect_shape("convolutional input", MAP_LEN, input.steps())?;
    let steps = input.steps();
    let mut maps = Vec::with_capacity(bank.len());
    for k in 0..bank.len() {
        let taps = bank.filter(k);
        let mut map = SpikeRaster::new(MAP_LEN, steps);
        for m in 0..MAP_LEN {
            let mut u = 0.0;
            for t in 0..steps {
                let mut current = 0.0;
                for (j, tap) in taps.iter().enumerate() {
                    let c = m as i64 + j as i64 - 3;
                    if (0..MAP_LEN as i64).contains(&c) && input.spike(c as usize, t) {
                        current += tap;
                    }
                }
                let (next, spiked) = lif_step(u, current, params);
                u = next;
                if spiked {
                    map.set_spike(m, t);
                }
            }
        }
        maps.push(map);
    }
    Ok(FeatureMaps { maps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::Rng;

    /// Independent reference: simulate one neuron at a time with
    /// nothing shared, using the documented accumulation contract.
    fn reference_convolve(
        input: &SpikeRaster,
        bank: &DogFilterBank,
        params: &LifParams,
    ) -> Vec<Vec<Vec<bool>>> {
        let alpha = (-1.0f64 / params.tau_ms).exp();
        let mut out = vec![vec![vec![false; input.steps()]; MAP_LEN]; bank.len()];
        for k in 0..bank.len() {
            for m in 0..MAP_LEN {
                let mut u = 0.0f64;
                for t in 0..input.steps() {
                    let mut i_in = 0.0f64;
                    for j in 0..FILTER_TAPS {
                        let c = m as i64 + j as i64 - 3;
                        if c >= 0 && c < MAP_LEN as i64 && input.spike(c as usize, t) {
                            i_in += bank.filter(k)[j];
                        }
                    }
                    let next = u * alpha + i_in * params.resistance * (1.0 - alpha);
                    if next >= params.threshold {
                        out[k][m][t] = true;
                        u = 0.0;
                    } else {
                        u = next;
                    }
                }
            }
        }
        out
    }

    fn random_raster(channels: usize, steps: usize, stream: RngStream, density: f64) -> SpikeRaster {
        let mut rng = stream.rng();
        let mut raster = SpikeRaster::new(channels, steps);
        for c in 0..channels {
            for t in 0..steps {
                if rng.random::<f64>() < density {
                    raster.set_spike(c, t);
                }
            }
        }
        raster
    }

    #[test]
    fn base_filter_center_tap() {
        // 1/sqrt(2*pi) - 1/sqrt(12*pi)
        let expected = 1.0 / (2.0 * std::f64::consts::PI).sqrt()
            - 1.0 / (12.0 * std::f64::consts::PI).sqrt();
        assert!((dog(0.0) - expected).abs() < 1e-15);
        assert!((dog(0.0) - 0.236_074_8).abs() < 1e-7);
        let bank = DogFilterBank::build();
        assert_eq!(bank.filter(3)[3], dog(0.0));
    }

    #[test]
    fn base_filter_even_symmetric() {
        let bank = DogFilterBank::build();
        let base = bank.filter(3);
        for i in 0..FILTER_TAPS {
            assert_eq!(base[i], base[FILTER_TAPS - 1 - i]);
        }
        assert_eq!(dog(-2.0), dog(2.0));
    }

    #[test]
    fn middle_filter_is_unshifted_base() {
        let bank = DogFilterBank::build();
        let expected: Vec<f64> = (-3..=3).map(|x| dog(x as f64)).collect();
        assert_eq!(bank.filter(3).as_slice(), expected.as_slice());
    }

    #[test]
    fn shifted_filters_are_truncated_translations() {
        let bank = DogFilterBank::build();
        // filter 6 shifts the center to +3: taps at x < 0 fall outside
        // the base support and must be zero
        let f6 = bank.filter(6);
        for j in 0..3 {
            assert_eq!(f6[j], 0.0);
        }
        assert_eq!(f6[6], dog(0.0));
        // filter 0 mirrors that
        let f0 = bank.filter(0);
        assert_eq!(f0[0], dog(0.0));
        for j in 4..7 {
            assert_eq!(f0[j], 0.0);
        }
    }

    #[test]
    fn lif_step_rest_stays_at_rest() {
        let params = LifParams::conv_layer();
        assert_eq!(lif_step(0.0, 0.0, &params), (0.0, false));
    }

    #[test]
    fn lif_step_strong_current_spikes_and_resets() {
        // u' would be 1 - e^{-1} ~ 0.632 >= 0.4
        let params = LifParams::conv_layer();
        let expected_pre = 1.0 - (-1.0f64).exp();
        assert!(expected_pre >= params.threshold);
        let (u, spiked) = lif_step(0.0, 1.0, &params);
        assert!(spiked);
        assert_eq!(u, 0.0);
    }

    #[test]
    fn subthreshold_current_converges_without_spiking() {
        // fixed point of the update is R*I = 0.3 < 0.4
        let params = LifParams::conv_layer();
        let mut u = 0.0;
        for _ in 0..200 {
            let (next, spiked) = lif_step(u, 0.3, &params);
            assert!(!spiked);
            u = next;
            assert!(u < params.threshold);
        }
        assert!((u - 0.3).abs() < 1e-12);
    }

    #[test]
    fn membrane_never_ends_a_step_at_or_above_threshold() {
        let params = LifParams::conv_layer();
        let mut u = 0.0f64;
        let mut rng = RngStream::new(3, 0).rng();
        for _ in 0..10_000 {
            let i_in = rng.random::<f64>() * 2.0 - 0.5;
            let (next, _) = lif_step(u, i_in, &params);
            u = next;
            assert!(u < params.threshold);
        }
    }

    #[test]
    fn zero_input_zero_output() {
        let input = SpikeRaster::new(MAP_LEN, 40);
        let maps = convolve_integrate(&input, &DogFilterBank::build(), &LifParams::conv_layer())
            .unwrap();
        for map in maps.maps() {
            assert_eq!(map.total_spikes(), 0);
        }
    }

    #[test]
    fn zero_weights_zero_output() {
        let bank = DogFilterBank {
            filters: vec![[0.0; FILTER_TAPS]; NUM_FILTERS],
        };
        let input = random_raster(MAP_LEN, 40, RngStream::new(4, 0), 0.9);
        let maps = convolve_integrate(&input, &bank, &LifParams::conv_layer()).unwrap();
        for map in maps.maps() {
            assert_eq!(map.total_spikes(), 0);
        }
    }

    #[test]
    fn single_hot_channel_matches_reference() {
        let mut input = SpikeRaster::new(MAP_LEN, 40);
        for t in 0..40 {
            input.set_spike(50, t);
        }
        let bank = DogFilterBank::build();
        let params = LifParams::conv_layer();
        let ours = convolve_integrate(&input, &bank, &params).unwrap();
        let reference = reference_convolve(&input, &bank, &params);
        for k in 0..NUM_FILTERS {
            for m in 0..MAP_LEN {
                for t in 0..40 {
                    assert_eq!(ours.map(k).spike(m, t), reference[k][m][t]);
                }
                // activity is confined to the 7-tap neighborhood of channel 50
                if !(43..=57).contains(&m) {
                    assert_eq!(ours.map(k).count(m), 0);
                }
            }
        }
    }

    #[test]
    fn adjacent_hot_channels_drive_periodic_spiking() {
        // three neighbors inject dog(-1)+dog(0)+dog(1) ~ 0.42 into the
        // centered neuron of the unshifted map: above threshold, so it
        // charges and fires cyclically
        let mut input = SpikeRaster::new(MAP_LEN, 40);
        for c in 49..=51 {
            for t in 0..40 {
                input.set_spike(c, t);
            }
        }
        let steady = dog(-1.0) + dog(0.0) + dog(1.0);
        assert!(steady > LifParams::conv_layer().threshold);
        let maps =
            convolve_integrate(&input, &DogFilterBank::build(), &LifParams::conv_layer()).unwrap();
        let count = maps.map(3).count(50);
        assert!(count > 0, "centered neuron never fired");
        let reference = reference_convolve(&input, &DogFilterBank::build(), &LifParams::conv_layer());
        let ref_count = reference[3][50].iter().filter(|&&s| s).count();
        assert_eq!(count as usize, ref_count);
    }

    #[test]
    fn random_rasters_bit_exact_against_reference() {
        let bank = DogFilterBank::build();
        let params = LifParams::conv_layer();
        for seed in 0..25 {
            let density = 0.02 + 0.96 * (seed as f64 / 24.0);
            let input = random_raster(MAP_LEN, 40, RngStream::new(seed, 1), density);
            let ours = convolve_integrate(&input, &bank, &params).unwrap();
            let reference = reference_convolve(&input, &bank, &params);
            for k in 0..NUM_FILTERS {
                for m in 0..MAP_LEN {
                    for t in 0..40 {
                        assert_eq!(
                            ours.map(k).spike(m, t),
                            reference[k][m][t],
                            "seed {seed} map {k} pos {m} step {t}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn wrong_input_shape_rejected() {
        let input = SpikeRaster::new(64, 40);
        let err = convolve_integrate(&input, &DogFilterBank::build(), &LifParams::conv_layer());
        assert!(err.is_err());
    }
}
