//! End-to-end orchestration: ingest -> frontend -> encode -> convolve
//! -> pool -> discovery training -> feature extraction -> GMM-HMM
//! training -> evaluation, with every artifact written to disk and
//! every random draw keyed off the run seed.

pub mod config;
pub mod ingest;
pub mod metadata;

pub use config::{RunConfig, SplitSpec};
pub use ingest::{ingest as ingest_dataset, test_ids, test_ids_for_ids, ManifestEntry};
pub use metadata::RunMetadata;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::conv::{convolve_integrate, DogFilterBank, LifParams};
use crate::discovery::{self, DiscoveryWeights};
use crate::encoder;
use crate::error::{Error, Result};
use crate::frontend::{SpectrumAnalyzer, Utterance};
use crate::hmm::{self, deltas::apply_mode, FeatureSequence, HmmModelSet, NUM_CLASSES};
use crate::pool::{build_schedule, pool, PoolSchedule};
use crate::raster::SpikeRaster;
use crate::rng::{frame_stream_id, RngStream};

/// The stateless front half of the network, reusable across
/// utterances and threads.
pub struct SnnStack {
    pub analyzer: SpectrumAnalyzer,
    pub bank: DogFilterBank,
    pub lif: LifParams,
    pub schedule: PoolSchedule,
    pub seed: u64,
    pub t_steps: usize,
}

impl SnnStack {
    pub fn from_config(config: &RunConfig) -> Self {
        SnnStack {
            analyzer: SpectrumAnalyzer::new(config.window),
            bank: DogFilterBank::build(),
            lif: config.lif_params(),
            schedule: build_schedule(),
            seed: config.seed,
            t_steps: config.t_steps,
        }
    }

    /// Frame an utterance and run it through encoding, convolution and
    /// pooling. `ordinal` is the utterance's manifest position; it
    /// keys the per-frame encoder streams, so the rasters do not
    /// depend on which subset of the manifest is being processed.
    pub fn pooled_frames(&self, utterance: &Utterance, ordinal: usize) -> Result<Vec<SpikeRaster>> {
        let spectra = self.analyzer.spectrogram(utterance)?;
        spectra
            .iter()
            .map(|spectrum| {
                let stream = RngStream::new(
                    self.seed,
                    frame_stream_id(ordinal, spectrum.frame_index),
                );
                let raster = encoder::encode_steps(spectrum, stream, self.t_steps);
                let maps = convolve_integrate(&raster, &self.bank, &self.lif)?;
                pool(&maps, &self.schedule)
            })
            .collect()
    }
}

/// Load every manifest entry as an utterance, in manifest order.
pub fn load_utterances(entries: &[ManifestEntry]) -> Result<Vec<Utterance>> {
    entries
        .par_iter()
        .map(|e| Utterance::from_wav(&e.path, e.id.clone(), e.label))
        .collect()
}

/// Pooled rasters for every utterance, in manifest order.
pub fn pooled_for_all(stack: &SnnStack, utterances: &[Utterance]) -> Result<Vec<Vec<SpikeRaster>>> {
    utterances
        .par_iter()
        .enumerate()
        .map(|(ordinal, utt)| stack.pooled_frames(utt, ordinal))
        .collect()
}

/// Train the discovery layer on the given utterances' pooled frames.
pub fn train_discovery(
    config: &RunConfig,
    pooled_train: &[Vec<SpikeRaster>],
) -> Result<DiscoveryWeights> {
    discovery::train(
        pooled_train,
        config.h,
        config.epochs,
        &config.stdp_params(),
        config.seed,
    )
}

/// Per-utterance feature sequences (delta mode already applied).
pub fn extract_sequences(
    config: &RunConfig,
    entries: &[ManifestEntry],
    pooled: &[Vec<SpikeRaster>],
    weights: &DiscoveryWeights,
) -> Result<Vec<FeatureSequence>> {
    let params = config.stdp_params();
    entries
        .par_iter()
        .zip(pooled)
        .map(|(entry, frames)| {
            let features = discovery::extract(frames, weights, &params)?;
            let seq = FeatureSequence {
                id: entry.id.clone(),
                label: entry.label,
                frames: features,
            };
            apply_mode(&seq, config.delta_mode)
        })
        .collect()
}

/// CSV export: `utt_id,label,frame,f1..fd`, one row per frame.
pub fn features_to_csv(sequences: &[FeatureSequence]) -> String {
    let dim = sequences.first().map_or(0, FeatureSequence::dim);
    let mut out = String::from("utt_id,label,frame");
    for d in 1..=dim {
        let _ = write!(out, ",f{d}");
    }
    out.push('\n');
    for seq in sequences {
        for (frame_index, frame) in seq.frames.iter().enumerate() {
            let _ = write!(out, "{},{},{}", seq.id, seq.label, frame_index);
            for v in frame {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
    }
    out
}

pub fn export_features(sequences: &[FeatureSequence], path: &Path) -> Result<()> {
    std::fs::write(path, features_to_csv(sequences))?;
    Ok(())
}

pub fn parse_features_csv(text: &str) -> Result<Vec<FeatureSequence>> {
    let bad = |detail: String| Error::Parse {
        what: "features csv",
        detail,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    if !header.starts_with("utt_id,label,frame") {
        return Err(bad(format!("unexpected header `{header}`")));
    }
    let mut sequences: Vec<FeatureSequence> = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let id = fields.next().ok_or_else(|| bad(format!("row {n}: missing id")))?;
        let label: usize = fields
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(format!("row {n}: bad label")))?;
        let _frame: usize = fields
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(format!("row {n}: bad frame index")))?;
        let values: Vec<f64> = fields
            .map(|v| v.parse::<f64>().map_err(|e| bad(format!("row {n}: {e}"))))
            .collect::<Result<_>>()?;
        match sequences.last_mut() {
            Some(seq) if seq.id == id => {
                if values.len() != seq.dim() {
                    return Err(bad(format!("row {n}: inconsistent dimension")));
                }
                seq.frames.push(values);
            }
            _ => sequences.push(FeatureSequence {
                id: id.to_string(),
                label,
                frames: vec![values],
            }),
        }
    }
    if sequences.is_empty() {
        return Err(bad("no feature rows".into()));
    }
    Ok(sequences)
}

pub fn load_features(path: &Path) -> Result<Vec<FeatureSequence>> {
    parse_features_csv(&std::fs::read_to_string(path)?)
}

/// Split sequences by membership of the test-id set.
pub fn split_sequences(
    sequences: Vec<FeatureSequence>,
    test: &BTreeSet<String>,
) -> (Vec<FeatureSequence>, Vec<FeatureSequence>) {
    sequences.into_iter().partition(|s| !test.contains(&s.id))
}

/// One (S, G) evaluation cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub states: usize,
    pub components: usize,
    pub correct: usize,
    pub total: usize,
    pub confusion: Vec<Vec<usize>>,
    pub model_set: HmmModelSet,
}

impl CellResult {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

/// Score an already trained model set on a test split.
pub fn score_model_set(model_set: HmmModelSet, test: &[FeatureSequence]) -> Result<CellResult> {
    if test.is_empty() {
        return Err(Error::Hmm("no test sequences".into()));
    }
    let predictions: Vec<usize> = test
        .par_iter()
        .map(|seq| model_set.classify(&seq.frames))
        .collect();
    let mut confusion = vec![vec![0usize; NUM_CLASSES]; NUM_CLASSES];
    let mut correct = 0;
    for (seq, &pred) in test.iter().zip(&predictions) {
        confusion[seq.label][pred] += 1;
        if pred == seq.label {
            correct += 1;
        }
    }
    Ok(CellResult {
        states: model_set.models[0].num_states(),
        components: model_set.models[0].states[0].components(),
        correct,
        total: test.len(),
        confusion,
        model_set,
    })
}

/// Train one model grid cell and score the test split.
pub fn evaluate_cell(
    train: &[FeatureSequence],
    test: &[FeatureSequence],
    states: usize,
    components: usize,
    seed: u64,
) -> Result<CellResult> {
    let model_set = hmm::train_models(train, states, components, seed)?;
    score_model_set(model_set, test)
}

/// The full evaluation report.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub dataset: PathBuf,
    pub split: String,
    pub train_count: usize,
    pub test_count: usize,
    pub feature_dim: usize,
    pub cells: Vec<CellResult>,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "melspike evaluation report");
        let _ = writeln!(out, "dataset = {}", self.dataset.display());
        let _ = writeln!(out, "split = {}", self.split);
        let _ = writeln!(out, "train_utterances = {}", self.train_count);
        let _ = writeln!(out, "test_utterances = {}", self.test_count);
        let _ = writeln!(out, "feature_dim = {}", self.feature_dim);
        for cell in &self.cells {
            let _ = writeln!(out);
            let _ = writeln!(
                out,
                "[cell S={} G={}] accuracy = {:.4} ({}/{})",
                cell.states,
                cell.components,
                cell.accuracy(),
                cell.correct,
                cell.total
            );
            let _ = writeln!(out, "confusion (rows = truth, cols = prediction):");
            for row in &cell.confusion {
                let cells: Vec<String> = row.iter().map(|c| format!("{c:4}")).collect();
                let _ = writeln!(out, "  {}", cells.join(" "));
            }
        }
        if self.cells.len() > 1 {
            let _ = writeln!(out);
            let _ = writeln!(out, "accuracy grid (rows = S, cols = G):");
            let mut states: Vec<usize> = self.cells.iter().map(|c| c.states).collect();
            states.dedup();
            let mut comps: Vec<usize> = self.cells.iter().map(|c| c.components).collect();
            comps.sort_unstable();
            comps.dedup();
            let header: Vec<String> = comps.iter().map(|g| format!("G={g:<6}")).collect();
            let _ = writeln!(out, "  {:6} {}", "", header.join(" "));
            for s in states {
                let mut row = format!("  S={s:<4}");
                for g in &comps {
                    if let Some(cell) = self
                        .cells
                        .iter()
                        .find(|c| c.states == s && c.components == *g)
                    {
                        let _ = write!(row, " {:.4}  ", cell.accuracy());
                    } else {
                        let _ = write!(row, " {:7} ", "-");
                    }
                }
                let _ = writeln!(out, "{row}");
            }
        }
        out
    }
}

/// Everything `run_pipeline` leaves behind.
pub struct PipelineOutcome {
    pub report: EvalReport,
    pub weights: DiscoveryWeights,
    pub out_dir: PathBuf,
}

/// Execute the whole workflow described by the config and write all
/// artifacts under `config.out_dir`.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineOutcome> {
    config.validate().map_err(|e| e.in_stage("config"))?;
    let (entries, warnings) = ingest_dataset(&config.dataset_dir).map_err(|e| e.in_stage("ingest"))?;
    for w in &warnings {
        eprintln!("[ingest] {w}");
    }
    let test = test_ids(&entries, &config.split).map_err(|e| e.in_stage("ingest"))?;

    let stack = SnnStack::from_config(config);
    let utterances = load_utterances(&entries).map_err(|e| e.in_stage("frontend"))?;
    let pooled = pooled_for_all(&stack, &utterances).map_err(|e| e.in_stage("frontend"))?;

    let pooled_train: Vec<Vec<SpikeRaster>> = entries
        .iter()
        .zip(&pooled)
        .filter(|(e, _)| !test.contains(&e.id))
        .map(|(_, p)| p.clone())
        .collect();
    let weights = train_discovery(config, &pooled_train).map_err(|e| e.in_stage("train-snn"))?;

    let sequences =
        extract_sequences(config, &entries, &pooled, &weights).map_err(|e| e.in_stage("extract"))?;
    let (train_seqs, test_seqs) = split_sequences(sequences, &test);

    let mut cells = Vec::new();
    for &s in &config.hmm_states {
        for &g in &config.hmm_components {
            let cell = evaluate_cell(&train_seqs, &test_seqs, s, g, config.seed)
                .map_err(|e| e.in_stage("train-hmm"))?;
            cells.push(cell);
        }
    }

    let report = EvalReport {
        dataset: config.dataset_dir.clone(),
        split: config.split.to_value(),
        train_count: train_seqs.len(),
        test_count: test_seqs.len(),
        feature_dim: train_seqs.first().map_or(0, FeatureSequence::dim),
        cells,
    };

    let out = &config.out_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::from(e).in_stage("write"))?;
    let write_stage = |e: Error| e.in_stage("write");
    weights.save(&out.join("weights.snnw")).map_err(write_stage)?;
    std::fs::write(out.join("schedule.txt"), stack.schedule.to_text())
        .map_err(|e| Error::from(e).in_stage("write"))?;
    export_features(&train_seqs, &out.join("features_train.csv")).map_err(write_stage)?;
    export_features(&test_seqs, &out.join("features_test.csv")).map_err(write_stage)?;
    for cell in &report.cells {
        let name = format!("models_S{}_G{}.ghmm", cell.states, cell.components);
        cell.model_set.save(&out.join(name)).map_err(write_stage)?;
    }
    std::fs::write(out.join("report.txt"), report.to_text())
        .map_err(|e| Error::from(e).in_stage("write"))?;
    RunMetadata::new(config, &entries, stack.schedule.to_text())
        .save(&out.join("run_metadata.txt"))
        .map_err(write_stage)?;

    Ok(PipelineOutcome {
        report,
        weights,
        out_dir: out.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(id: &str, label: usize, frames: Vec<Vec<f64>>) -> FeatureSequence {
        FeatureSequence {
            id: id.into(),
            label,
            frames,
        }
    }

    #[test]
    fn csv_round_trip() {
        let seqs = vec![
            seq("1_a_0", 1, vec![vec![0.5, -1.25], vec![1.0, 2.0]]),
            seq("2_b_0", 2, vec![vec![0.125, 3.5]]),
        ];
        let text = features_to_csv(&seqs);
        assert!(text.starts_with("utt_id,label,frame,f1,f2\n"));
        let back = parse_features_csv(&text).unwrap();
        assert_eq!(back, seqs);
    }

    #[test]
    fn csv_header_column_count_tracks_dim() {
        let seqs = vec![seq("1_a_0", 1, vec![vec![0.0; 30]])];
        let header = features_to_csv(&seqs);
        let cols = header.lines().next().unwrap().split(',').count();
        assert_eq!(cols, 33);
        let seqs = vec![seq("1_a_0", 1, vec![vec![0.0; 90]])];
        let cols = features_to_csv(&seqs).lines().next().unwrap().split(',').count();
        assert_eq!(cols, 93);
    }

    #[test]
    fn empty_sequences_export_header_only() {
        let text = features_to_csv(&[]);
        assert_eq!(text, "utt_id,label,frame\n");
    }

    #[test]
    fn accuracy_equals_confusion_tally() {
        // hand-built cell: accuracy derived two ways must agree
        let confusion = vec![
            vec![3, 1, 0, 0, 0, 0, 0, 0, 0, 0],
            vec![0, 4, 0, 0, 0, 0, 0, 0, 0, 0],
            vec![1, 0, 2, 0, 0, 0, 0, 0, 0, 1],
            vec![0; 10],
            vec![0; 10],
            vec![0; 10],
            vec![0; 10],
            vec![0; 10],
            vec![0; 10],
            vec![0; 10],
        ];
        let diag: usize = (0..10).map(|i| confusion[i][i]).sum();
        let total: usize = confusion.iter().flatten().sum();
        assert_eq!(diag, 9);
        assert_eq!(total, 12);
    }

    #[test]
    fn cell_accuracy_equals_confusion_diagonal() {
        let mut rng = crate::rng::RngStream::new(6, 0).rng();
        use rand::Rng;
        let mut sequences = Vec::new();
        for digit in 0..NUM_CLASSES {
            for i in 0..6 {
                let frames = (0..8)
                    .map(|_| vec![digit as f64 * 4.0 + rng.random::<f64>(), rng.random::<f64>()])
                    .collect();
                sequences.push(seq(&format!("{digit}_spk{}_{i}", i % 3), digit, frames));
            }
        }
        let test: BTreeSet<String> = sequences
            .iter()
            .enumerate()
            .filter(|(i, _)| i % 3 == 0)
            .map(|(_, s)| s.id.clone())
            .collect();
        let (train, held) = split_sequences(sequences, &test);
        let cell = evaluate_cell(&train, &held, 2, 1, 3).unwrap();
        let diagonal: usize = (0..NUM_CLASSES).map(|d| cell.confusion[d][d]).sum();
        let total: usize = cell.confusion.iter().flatten().sum();
        assert_eq!(diagonal, cell.correct);
        assert_eq!(total, cell.total);
        assert!((cell.accuracy() - diagonal as f64 / total as f64).abs() < 1e-15);
    }

    #[test]
    fn discovery_training_ignores_labels() {
        // the training path takes pooled rasters only; relabeling the
        // manifest cannot change the learned weights
        let mut config = RunConfig::default();
        config.h = 8;
        config.epochs = 2;
        let mut rng = crate::rng::RngStream::new(9, 0).rng();
        use rand::Rng;
        let pooled: Vec<Vec<SpikeRaster>> = (0..6)
            .map(|_| {
                (0..3)
                    .map(|_| {
                        let mut r = SpikeRaster::new(crate::pool::POOLED_CHANNELS, 40);
                        for c in 0..crate::pool::POOLED_CHANNELS {
                            for t in 0..40 {
                                if rng.random::<f64>() < 0.2 {
                                    r.set_spike(c, t);
                                }
                            }
                        }
                        r
                    })
                    .collect()
            })
            .collect();
        let a = train_discovery(&config, &pooled).unwrap();
        let b = train_discovery(&config, &pooled).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn split_partitions_by_id() {
        let seqs = vec![
            seq("1_a_0", 1, vec![vec![0.0]]),
            seq("1_b_0", 1, vec![vec![0.0]]),
        ];
        let test: BTreeSet<String> = ["1_b_0".to_string()].into();
        let (train, held) = split_sequences(seqs, &test);
        assert_eq!(train.len(), 1);
        assert_eq!(held.len(), 1);
        assert_eq!(held[0].id, "1_b_0");
    }
}
