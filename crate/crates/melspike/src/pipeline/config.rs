//! Run configuration: a flat `key = value` text format with `#`
//! comments. Defaults are the constants the pipeline is built around;
//! anything overridden is echoed into run metadata.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::frontend::WindowFunction;
use crate::hmm::DeltaMode;

/// How the test split is chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SplitSpec {
    /// Hold out every fifth speaker (sorted order); falls back to the
    /// last speaker when there are fewer than five.
    AutoSpeaker,
    /// Hold out the named speakers.
    Speakers(Vec<String>),
    /// Hold out utterance ids listed in a file, one per line.
    FileList(PathBuf),
}

impl SplitSpec {
    pub fn to_value(&self) -> String {
        match self {
            SplitSpec::AutoSpeaker => "auto".into(),
            SplitSpec::Speakers(s) => format!("speakers:{}", s.join(",")),
            SplitSpec::FileList(p) => format!("files:{}", p.display()),
        }
    }

    pub fn parse(value: &str) -> Result<Self> {
        if value == "auto" {
            return Ok(SplitSpec::AutoSpeaker);
        }
        if let Some(rest) = value.strip_prefix("speakers:") {
            let speakers: Vec<String> = rest
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect();
            if speakers.is_empty() {
                return Err(Error::Config("split = speakers: needs at least one name".into()));
            }
            return Ok(SplitSpec::Speakers(speakers));
        }
        if let Some(rest) = value.strip_prefix("files:") {
            return Ok(SplitSpec::FileList(PathBuf::from(rest)));
        }
        Err(Error::Config(format!(
            "unknown split spec `{value}` (expected `auto`, `speakers:...` or `files:...`)"
        )))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Discovery-layer neuron count (the feature dimension).
    pub h: usize,
    pub theta_conv: f64,
    pub theta_h: f64,
    pub a_plus: f64,
    pub a_minus: f64,
    pub epsilon_ms: usize,
    pub epochs: usize,
    pub t_steps: usize,
    pub window: WindowFunction,
    pub delta_mode: DeltaMode,
    /// HMM state counts; more than one value requests a grid.
    pub hmm_states: Vec<usize>,
    /// GMM components per state; more than one value requests a grid.
    pub hmm_components: Vec<usize>,
    pub dataset_dir: PathBuf,
    pub out_dir: PathBuf,
    pub split: SplitSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            h: 30,
            theta_conv: 0.4,
            theta_h: 3.0,
            a_plus: 1e-3,
            a_minus: 0.75e-3,
            epsilon_ms: 5,
            epochs: 10,
            t_steps: 40,
            window: WindowFunction::Hamming,
            delta_mode: DeltaMode::None,
            hmm_states: vec![10],
            hmm_components: vec![4],
            dataset_dir: PathBuf::new(),
            out_dir: PathBuf::from("melspike-out"),
            split: SplitSpec::AutoSpeaker,
        }
    }
}

fn parse_list(value: &str, key: &str) -> Result<Vec<usize>> {
    let out: Vec<usize> = value
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|e| Error::Config(format!("{key}: `{v}`: {e}")))
        })
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::Config(format!("{key}: empty list")));
    }
    Ok(out)
}

fn join_list(values: &[usize]) -> String {
    values
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let number = |what: &str| -> Result<f64> {
                value
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("{what}: `{value}`: {e}")))
            };
            match key {
                "seed" => {
                    config.seed = value
                        .parse()
                        .map_err(|e| Error::Config(format!("seed: `{value}`: {e}")))?;
                }
                "h" => {
                    config.h = value
                        .parse()
                        .map_err(|e| Error::Config(format!("h: `{value}`: {e}")))?;
                }
                "theta_conv" => config.theta_conv = number("theta_conv")?,
                "theta_h" => config.theta_h = number("theta_h")?,
                "a_plus" => config.a_plus = number("a_plus")?,
                "a_minus" => config.a_minus = number("a_minus")?,
                "epsilon_ms" => {
                    config.epsilon_ms = value
                        .parse()
                        .map_err(|e| Error::Config(format!("epsilon_ms: `{value}`: {e}")))?;
                }
                "epochs" => {
                    config.epochs = value
                        .parse()
                        .map_err(|e| Error::Config(format!("epochs: `{value}`: {e}")))?;
                }
                "t_steps" => {
                    config.t_steps = value
                        .parse()
                        .map_err(|e| Error::Config(format!("t_steps: `{value}`: {e}")))?;
                }
                "window" => config.window = WindowFunction::parse(value)?,
                "delta_mode" => config.delta_mode = DeltaMode::parse(value)?,
                "hmm_states" => config.hmm_states = parse_list(value, "hmm_states")?,
                "hmm_components" => config.hmm_components = parse_list(value, "hmm_components")?,
                "dataset_dir" => config.dataset_dir = PathBuf::from(value),
                "out_dir" => config.out_dir = PathBuf::from(value),
                "split" => config.split = SplitSpec::parse(value)?,
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.into()));
        if self.h == 0 {
            return fail("h must be at least 1");
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1");
        }
        if self.t_steps == 0 || self.t_steps > 64 {
            return fail("t_steps must be in 1..=64");
        }
        if self.theta_conv <= 0.0 || self.theta_h <= 0.0 {
            return fail("thresholds must be positive");
        }
        if self.a_plus <= 0.0 || self.a_minus <= 0.0 {
            return fail("learning rates must be positive");
        }
        if self.hmm_states.iter().any(|&s| s == 0) {
            return fail("hmm_states must be positive");
        }
        if self.hmm_components.iter().any(|&g| g == 0) {
            return fail("hmm_components must be positive");
        }
        Ok(())
    }

    /// Serialize in a fixed key order; `parse` inverts this exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "h = {}", self.h);
        let _ = writeln!(out, "theta_conv = {}", self.theta_conv);
        let _ = writeln!(out, "theta_h = {}", self.theta_h);
        let _ = writeln!(out, "a_plus = {}", self.a_plus);
        let _ = writeln!(out, "a_minus = {}", self.a_minus);
        let _ = writeln!(out, "epsilon_ms = {}", self.epsilon_ms);
        let _ = writeln!(out, "epochs = {}", self.epochs);
        let _ = writeln!(out, "t_steps = {}", self.t_steps);
        let _ = writeln!(out, "window = {}", self.window.name());
        let _ = writeln!(out, "delta_mode = {}", self.delta_mode.name());
        let _ = writeln!(out, "hmm_states = {}", join_list(&self.hmm_states));
        let _ = writeln!(out, "hmm_components = {}", join_list(&self.hmm_components));
        let _ = writeln!(out, "dataset_dir = {}", self.dataset_dir.display());
        let _ = writeln!(out, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(out, "split = {}", self.split.to_value());
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn stdp_params(&self) -> crate::discovery::StdpParams {
        crate::discovery::StdpParams {
            a_plus: self.a_plus,
            a_minus: self.a_minus,
            epsilon_ms: self.epsilon_ms,
            theta_h: self.theta_h,
        }
    }

    pub fn lif_params(&self) -> crate::conv::LifParams {
        crate::conv::LifParams::with_threshold(self.theta_conv)
    }
}
