//! Unsupervised acoustic feature discovery with a multi-layer spiking
//! network, evaluated by GMM-HMM spoken-digit recognition.
//!
//! The processing chain is: 8 kHz PCM -> framed magnitude spectra
//! ([`frontend`]) -> Poisson spike rasters ([`encoder`]) -> spiking
//! DoG convolution ([`conv`]) -> Mel-scaled max pooling ([`pool`]) ->
//! probabilistic-STDP feature discovery ([`discovery`]) -> per-digit
//! GMM-HMM classification ([`hmm`]). [`pipeline`] wires the stages
//! together behind a flat config file, and [`synth`] renders a
//! deterministic stand-in corpus so everything runs out of the box.
//!
//! Start with the runnable examples:
//!
//! ```bash
//! cargo run -p melspike --example dog_filters       # filter bank + LIF dynamics
//! cargo run -p melspike --example mel_schedule      # Mel pooling schedule
//! cargo run -p melspike --example poisson_encoding  # spectra -> spike rasters
//! cargo run -p melspike --example spiking_frontend  # activity through the layers
//! cargo run -p melspike --example synth_corpus      # corpus generation + ingest
//! cargo run --release -p melspike --example stdp_training
//! cargo run -p melspike --example hmm_synthetic     # Baum-Welch on toy data
//! cargo run --release -p melspike --example full_pipeline
//! ```
//!
//! The same workflow is scriptable through the `melspike` binary
//! (`ingest`, `train-snn`, `extract`, `train-hmm`, `evaluate`,
//! `pipeline`, `dump-schedule`, `synth-data`).

pub mod conv;
pub mod discovery;
pub mod encoder;
pub mod error;
pub mod frontend;
pub mod hmm;
pub mod pipeline;
pub mod pool;
pub mod raster;
pub mod rng;
pub mod synth;
pub mod wav;

pub use error::{Error, Result};
