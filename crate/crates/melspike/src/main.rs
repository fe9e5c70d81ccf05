use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use melspike::discovery::DiscoveryWeights;
use melspike::hmm::HmmModelSet;
use melspike::pipeline::{
    self, ingest_dataset, test_ids, test_ids_for_ids, RunConfig, RunMetadata, SnnStack,
};
use melspike::pool::build_schedule;
use melspike::synth::{generate_corpus, SynthOptions};

#[derive(Parser)]
#[command(name = "melspike", version, about = "Spiking-network acoustic features with a GMM-HMM evaluator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Run configuration file (key = value lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the dataset directory.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the run seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> melspike::Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(dir) = &self.dataset {
            config.dataset_dir = dir.clone();
        }
        if let Some(out) = &self.out {
            config.out_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Scan a dataset directory and print the labeled manifest summary.
    Ingest(ConfigArgs),
    /// Train the discovery layer and write weights + run metadata.
    TrainSnn {
        #[command(flatten)]
        common: ConfigArgs,
        /// Discovery neuron count override.
        #[arg(long)]
        h: Option<usize>,
        /// Training epoch override.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Extract per-frame features for every utterance into a CSV.
    Extract {
        #[command(flatten)]
        common: ConfigArgs,
        /// Trained weight file (defaults to <out>/weights.snnw).
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Output CSV path (defaults to <out>/features.csv).
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Train the per-digit model set from a feature CSV.
    TrainHmm {
        #[command(flatten)]
        common: ConfigArgs,
        /// Feature CSV (defaults to <out>/features.csv).
        #[arg(long)]
        features: Option<PathBuf>,
        /// HMM state count override (first configured value otherwise).
        #[arg(long)]
        states: Option<usize>,
        /// Mixture component override (first configured value otherwise).
        #[arg(long)]
        components: Option<usize>,
        /// Output model file (defaults to <out>/models.ghmm).
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Classify the test split with a trained model set and report.
    Evaluate {
        #[command(flatten)]
        common: ConfigArgs,
        /// Feature CSV (defaults to <out>/features.csv).
        #[arg(long)]
        features: Option<PathBuf>,
        /// Model set file (defaults to <out>/models.ghmm).
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Run the whole train/extract/train-hmm/evaluate workflow.
    Pipeline(ConfigArgs),
    /// Print the Mel pooling schedule (`index start stride` lines).
    DumpSchedule {
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the synthetic spoken-digit corpus.
    SynthData {
        /// Target directory for the WAV files.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 12)]
        speakers: usize,
        /// Utterances per (speaker, digit) pair.
        #[arg(long, default_value_t = 25)]
        repeats: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> melspike::Result<()> {
    match cli.command {
        Command::Ingest(common) => {
            let config = common.load()?;
            let (entries, warnings) = ingest_dataset(&config.dataset_dir)?;
            for w in &warnings {
                eprintln!("[ingest] {w}");
            }
            let mut per_digit = [0usize; 10];
            let mut per_speaker: BTreeMap<&str, usize> = BTreeMap::new();
            for e in &entries {
                per_digit[e.label] += 1;
                *per_speaker.entry(e.speaker.as_str()).or_default() += 1;
            }
            println!("utterances = {}", entries.len());
            for (digit, n) in per_digit.iter().enumerate() {
                println!("digit {digit} = {n}");
            }
            for (speaker, n) in &per_speaker {
                println!("speaker {speaker} = {n}");
            }
            let test = test_ids(&entries, &config.split)?;
            println!("split {} -> {} train / {} test", config.split.to_value(), entries.len() - test.len(), test.len());
            Ok(())
        }
        Command::TrainSnn { common, h, epochs } => {
            let mut config = common.load()?;
            if let Some(h) = h {
                config.h = h;
            }
            if let Some(e) = epochs {
                config.epochs = e;
            }
            config.validate()?;
            let (entries, warnings) = ingest_dataset(&config.dataset_dir)?;
            for w in &warnings {
                eprintln!("[ingest] {w}");
            }
            let test = test_ids(&entries, &config.split)?;
            let stack = SnnStack::from_config(&config);
            let utterances = pipeline::load_utterances(&entries)?;
            let pooled = pipeline::pooled_for_all(&stack, &utterances)?;
            let pooled_train: Vec<_> = entries
                .iter()
                .zip(&pooled)
                .filter(|(e, _)| !test.contains(&e.id))
                .map(|(_, p)| p.clone())
                .collect();
            let weights = pipeline::train_discovery(&config, &pooled_train)?;
            std::fs::create_dir_all(&config.out_dir)?;
            weights.save(&config.out_dir.join("weights.snnw"))?;
            std::fs::write(config.out_dir.join("schedule.txt"), stack.schedule.to_text())?;
            RunMetadata::new(&config, &entries, stack.schedule.to_text())
                .save(&config.out_dir.join("run_metadata.txt"))?;
            println!(
                "trained H={} on {} utterances; weights -> {}",
                config.h,
                pooled_train.len(),
                config.out_dir.join("weights.snnw").display()
            );
            Ok(())
        }
        Command::Extract {
            common,
            weights,
            features,
        } => {
            let config = common.load()?;
            let weights_path = weights.unwrap_or_else(|| config.out_dir.join("weights.snnw"));
            let features_path = features.unwrap_or_else(|| config.out_dir.join("features.csv"));
            let weights = DiscoveryWeights::load(&weights_path)?;
            let (entries, warnings) = ingest_dataset(&config.dataset_dir)?;
            for w in &warnings {
                eprintln!("[ingest] {w}");
            }
            let stack = SnnStack::from_config(&config);
            let utterances = pipeline::load_utterances(&entries)?;
            let pooled = pipeline::pooled_for_all(&stack, &utterances)?;
            let sequences = pipeline::extract_sequences(&config, &entries, &pooled, &weights)?;
            if let Some(parent) = features_path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            pipeline::export_features(&sequences, &features_path)?;
            println!(
                "extracted {} sequences ({} dims) -> {}",
                sequences.len(),
                sequences.first().map_or(0, |s| s.dim()),
                features_path.display()
            );
            Ok(())
        }
        Command::TrainHmm {
            common,
            features,
            states,
            components,
            models,
        } => {
            let config = common.load()?;
            let features_path = features.unwrap_or_else(|| config.out_dir.join("features.csv"));
            let models_path = models.unwrap_or_else(|| config.out_dir.join("models.ghmm"));
            let states = states.unwrap_or(config.hmm_states[0]);
            let components = components.unwrap_or(config.hmm_components[0]);
            let sequences = pipeline::load_features(&features_path)?;
            let ids: Vec<String> = sequences.iter().map(|s| s.id.clone()).collect();
            let test = test_ids_for_ids(&ids, &config.split)?;
            let (train_seqs, _) = pipeline::split_sequences(sequences, &test);
            let set = melspike::hmm::train_models(&train_seqs, states, components, config.seed)?;
            if let Some(parent) = models_path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            set.save(&models_path)?;
            println!(
                "trained S={states} G={components} on {} sequences -> {}",
                train_seqs.len(),
                models_path.display()
            );
            Ok(())
        }
        Command::Evaluate {
            common,
            features,
            models,
        } => {
            let config = common.load()?;
            let features_path = features.unwrap_or_else(|| config.out_dir.join("features.csv"));
            let models_path = models.unwrap_or_else(|| config.out_dir.join("models.ghmm"));
            let sequences = pipeline::load_features(&features_path)?;
            let ids: Vec<String> = sequences.iter().map(|s| s.id.clone()).collect();
            let test = test_ids_for_ids(&ids, &config.split)?;
            let (train_seqs, test_seqs) = pipeline::split_sequences(sequences, &test);
            let set = HmmModelSet::load(&models_path)?;
            let cell = pipeline::score_model_set(set, &test_seqs)?;
            let report = pipeline::EvalReport {
                dataset: config.dataset_dir.clone(),
                split: config.split.to_value(),
                train_count: train_seqs.len(),
                test_count: test_seqs.len(),
                feature_dim: test_seqs.first().map_or(0, |s| s.dim()),
                cells: vec![cell],
            };
            print!("{}", report.to_text());
            Ok(())
        }
        Command::Pipeline(common) => {
            let config = common.load()?;
            let outcome = pipeline::run_pipeline(&config)?;
            print!("{}", outcome.report.to_text());
            println!("artifacts -> {}", outcome.out_dir.display());
            Ok(())
        }
        Command::DumpSchedule { out } => {
            let text = build_schedule().to_text();
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::SynthData {
            out,
            speakers,
            repeats,
            seed,
        } => {
            let n = generate_corpus(
                &out,
                &SynthOptions {
                    speakers,
                    repeats,
                    seed,
                },
            )?;
            println!("wrote {n} wav files under {}", out.display());
            Ok(())
        }
    }
}
