//! Text persistence for models and model sets. All floats use the
//! shortest round-trip representation, so save/load is exact.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::gmm::DiagGmm;
use super::{HmmModel, HmmModelSet, Standardizer};

fn bad(detail: impl ToString) -> Error {
    Error::Parse {
        what: "hmm model file",
        detail: detail.to_string(),
    }
}

fn join(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
    parts.join(" ")
}

fn parse_values(line: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = line
        .split_whitespace()
        .map(|v| v.parse::<f64>().map_err(|e| bad(format!("{what}: {e}"))))
        .collect::<Result<_>>()?;
    if values.len() != expected {
        return Err(bad(format!(
            "{what}: expected {expected} values, got {}",
            values.len()
        )));
    }
    Ok(values)
}

impl HmmModel {
    /// `ghmm v1 S=<S> G=<G> dim=<d>`, the transition rows, then each
    /// state's mixture (weights line, then mean/var per component).
    pub fn to_text(&self) -> String {
        let s = self.num_states();
        let g = self.states[0].components();
        let mut out = format!("ghmm v1 S={s} G={g} dim={}\n", self.dim());
        for row in &self.transitions {
            out.push_str(&join(row));
            out.push('\n');
        }
        for (j, state) in self.states.iter().enumerate() {
            out.push_str(&format!("state {j} weights {}\n", join(&state.weights)));
            for c in 0..state.components() {
                out.push_str(&format!("mean {}\n", join(&state.means[c])));
                out.push_str(&format!("var {}\n", join(&state.variances[c])));
            }
        }
        out
    }

    pub fn read_block<R: BufRead>(lines: &mut std::io::Lines<R>) -> Result<Self> {
        let header = lines
            .next()
            .ok_or_else(|| bad("missing model header"))??;
        let mut tokens = header.split_whitespace();
        if tokens.next() != Some("ghmm") || tokens.next() != Some("v1") {
            return Err(bad(format!("bad model header `{header}`")));
        }
        let (mut s, mut g, mut dim) = (None, None, None);
        for tok in tokens {
            match tok.split_once('=') {
                Some(("S", v)) => s = v.parse::<usize>().ok(),
                Some(("G", v)) => g = v.parse::<usize>().ok(),
                Some(("dim", v)) => dim = v.parse::<usize>().ok(),
                _ => return Err(bad(format!("unexpected header token `{tok}`"))),
            }
        }
        let (s, g, dim) = match (s, g, dim) {
            (Some(s), Some(g), Some(d)) if s > 0 && g > 0 && d > 0 => (s, g, d),
            _ => return Err(bad(format!("incomplete model header `{header}`"))),
        };
        let mut transitions = Vec::with_capacity(s);
        for i in 0..s {
            let line = lines
                .next()
                .ok_or_else(|| bad(format!("missing transition row {i}")))??;
            transitions.push(parse_values(&line, s, &format!("transition row {i}"))?);
        }
        let mut states = Vec::with_capacity(s);
        for j in 0..s {
            let line = lines
                .next()
                .ok_or_else(|| bad(format!("missing state {j} header")))??;
            let rest = line
                .strip_prefix(&format!("state {j} weights "))
                .ok_or_else(|| bad(format!("bad state header `{line}`")))?;
            let weights = parse_values(rest, g, &format!("state {j} weights"))?;
            let mut means = Vec::with_capacity(g);
            let mut variances = Vec::with_capacity(g);
            for c in 0..g {
                let mean_line = lines
                    .next()
                    .ok_or_else(|| bad(format!("missing mean {j}/{c}")))??;
                let mean_body = mean_line
                    .strip_prefix("mean ")
                    .ok_or_else(|| bad(format!("expected mean line, got `{mean_line}`")))?;
                means.push(parse_values(mean_body, dim, "mean")?);
                let var_line = lines
                    .next()
                    .ok_or_else(|| bad(format!("missing var {j}/{c}")))??;
                let var_body = var_line
                    .strip_prefix("var ")
                    .ok_or_else(|| bad(format!("expected var line, got `{var_line}`")))?;
                variances.push(parse_values(var_body, dim, "var")?);
            }
            states.push(DiagGmm {
                weights,
                means,
                variances,
            });
        }
        Ok(HmmModel {
            transitions,
            states,
        })
    }
}

impl HmmModelSet {
    pub fn to_text(&self) -> String {
        let dim = self.models[0].dim();
        let mut out = format!("ghmmset v1 classes={}\n", self.models.len());
        out.push_str(&format!("standardizer-mean {}\n", join(&self.standardizer.mean)));
        out.push_str(&format!("standardizer-scale {}\n", join(&self.standardizer.scale)));
        debug_assert_eq!(self.standardizer.mean.len(), dim);
        for (digit, model) in self.models.iter().enumerate() {
            out.push_str(&format!("class {digit}\n"));
            out.push_str(&model.to_text());
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        write!(f, "{}", self.to_text())?;
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| bad("empty file"))??;
        let classes = header
            .strip_prefix("ghmmset v1 classes=")
            .and_then(|v| v.parse::<usize>().ok())
            .ok_or_else(|| bad(format!("bad set header `{header}`")))?;
        let mean_line = lines.next().ok_or_else(|| bad("missing standardizer mean"))??;
        let mean_body = mean_line
            .strip_prefix("standardizer-mean ")
            .ok_or_else(|| bad("expected standardizer-mean line"))?;
        let mean: Vec<f64> = mean_body
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|e| bad(e)))
            .collect::<Result<_>>()?;
        let scale_line = lines.next().ok_or_else(|| bad("missing standardizer scale"))??;
        let scale_body = scale_line
            .strip_prefix("standardizer-scale ")
            .ok_or_else(|| bad("expected standardizer-scale line"))?;
        let scale = parse_values(scale_body, mean.len(), "standardizer scale")?;
        let mut models = Vec::with_capacity(classes);
        for digit in 0..classes {
            let tag = lines.next().ok_or_else(|| bad(format!("missing class {digit}")))??;
            if tag != format!("class {digit}") {
                return Err(bad(format!("expected `class {digit}`, got `{tag}`")));
            }
            models.push(HmmModel::read_block(&mut lines)?);
        }
        Ok(HmmModelSet {
            models,
            standardizer: Standardizer { mean, scale },
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = fs::File::open(path)?;
        Self::read(BufReader::new(f))
    }
}
