//! Run metadata: everything needed to reproduce a run byte for byte.

use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::GENERATOR_ID;

use super::config::RunConfig;
use super::ingest::ManifestEntry;

/// FNV-1a over the manifest (id, label, file size); enough to notice a
/// dataset change between runs.
pub fn manifest_hash(entries: &[ManifestEntry]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for b in bytes {
            hash ^= u64::from(*b);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    for e in entries {
        eat(e.id.as_bytes());
        eat(&[e.label as u8]);
        let size = std::fs::metadata(&e.path).map(|m| m.len()).unwrap_or(0);
        eat(&size.to_le_bytes());
    }
    hash
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub version: String,
    pub generator: String,
    pub manifest_fnv1a: u64,
    pub config: RunConfig,
    pub schedule_text: String,
}

impl RunMetadata {
    pub fn new(config: &RunConfig, entries: &[ManifestEntry], schedule_text: String) -> Self {
        RunMetadata {
            version: env!("CARGO_PKG_VERSION").to_string(),
            generator: GENERATOR_ID.to_string(),
            manifest_fnv1a: manifest_hash(entries),
            config: config.clone(),
            schedule_text,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("melspike-run v1\n");
        out.push_str(&format!("version = {}\n", self.version));
        out.push_str(&format!("generator = {}\n", self.generator));
        out.push_str(&format!("manifest_fnv1a = {:016x}\n", self.manifest_fnv1a));
        out.push_str("[config]\n");
        out.push_str(&self.config.to_text());
        out.push_str("[schedule]\n");
        out.push_str(&self.schedule_text);
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |detail: &str| Error::Parse {
            what: "run metadata",
            detail: detail.to_string(),
        };
        let mut lines = text.lines();
        if lines.next() != Some("melspike-run v1") {
            return Err(bad("missing `melspike-run v1` header"));
        }
        let mut version = None;
        let mut generator = None;
        let mut hash = None;
        for line in lines.by_ref() {
            if line == "[config]" {
                break;
            }
            match line.split_once(" = ") {
                Some(("version", v)) => version = Some(v.to_string()),
                Some(("generator", v)) => generator = Some(v.to_string()),
                Some(("manifest_fnv1a", v)) => {
                    hash = u64::from_str_radix(v, 16).ok();
                }
                _ => return Err(bad(&format!("unexpected line `{line}`"))),
            }
        }
        let mut config_text = String::new();
        for line in lines.by_ref() {
            if line == "[schedule]" {
                break;
            }
            config_text.push_str(line);
            config_text.push('\n');
        }
        let schedule_text: String = lines.map(|l| format!("{l}\n")).collect();
        Ok(RunMetadata {
            version: version.ok_or_else(|| bad("missing version"))?,
            generator: generator.ok_or_else(|| bad("missing generator"))?,
            manifest_fnv1a: hash.ok_or_else(|| bad("missing manifest hash"))?,
            config: RunConfig::parse(&config_text)?,
            schedule_text,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
