//! Dataset ingestion: scan a directory of `<digit>_<speaker>_<index>.wav`
//! files into a sorted, labeled manifest.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::config::SplitSpec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    /// The file stem, used as the utterance id everywhere downstream.
    pub id: String,
    pub label: usize,
    pub speaker: String,
}

/// Parse `<digit>_<speaker>_<index>` out of a file stem.
pub fn parse_stem(stem: &str) -> Option<(usize, String)> {
    let mut parts = stem.split('_');
    let digit = parts.next()?.parse::<usize>().ok().filter(|d| *d <= 9)?;
    let speaker = parts.next()?;
    let _index = parts.next()?;
    if speaker.is_empty() {
        return None;
    }
    Some((digit, speaker.to_string()))
}

fn walk(dir: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    entries.sort();
    for path in entries {
        if path.is_dir() {
            walk(&path, files)?;
        } else if path.extension().is_some_and(|e| e == "wav") {
            files.push(path);
        }
    }
    Ok(())
}

/// Build the manifest. Non-conforming file names are skipped with a
/// warning; duplicate file names across subdirectories are an error;
/// an empty result is an error.
pub fn ingest(dataset_dir: &Path) -> Result<(Vec<ManifestEntry>, Vec<String>)> {
    if !dataset_dir.is_dir() {
        return Err(Error::Ingest(format!(
            "`{}` is not a directory",
            dataset_dir.display()
        )));
    }
    let mut files = Vec::new();
    walk(dataset_dir, &mut files)?;
    let mut warnings = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut entries = Vec::new();
    for path in files {
        let stem = match path.file_stem().and_then(|s| s.to_str()) {
            Some(s) => s.to_string(),
            None => {
                warnings.push(format!("skipping `{}`: unreadable file name", path.display()));
                continue;
            }
        };
        let Some((label, speaker)) = parse_stem(&stem) else {
            warnings.push(format!(
                "skipping `{}`: name does not match <digit>_<speaker>_<index>.wav",
                path.display()
            ));
            continue;
        };
        if !seen.insert(stem.clone()) {
            return Err(Error::Ingest(format!(
                "duplicate utterance id `{stem}` (same file name in more than one directory)"
            )));
        }
        entries.push(ManifestEntry {
            path,
            id: stem,
            label,
            speaker,
        });
    }
    if entries.is_empty() {
        return Err(Error::Ingest(format!(
            "no usable wav files under `{}`",
            dataset_dir.display()
        )));
    }
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    Ok((entries, warnings))
}

/// Which utterance ids form the test split.
pub fn test_ids(entries: &[ManifestEntry], split: &SplitSpec) -> Result<BTreeSet<String>> {
    let pairs: Vec<(&str, &str)> = entries
        .iter()
        .map(|e| (e.id.as_str(), e.speaker.as_str()))
        .collect();
    choose_test_ids(&pairs, split)
}

/// Split selection for data that already left the manifest stage
/// (e.g. feature CSVs); speakers are recovered from the utterance ids.
pub fn test_ids_for_ids(ids: &[String], split: &SplitSpec) -> Result<BTreeSet<String>> {
    let pairs: Vec<(&str, &str)> = ids
        .iter()
        .map(|id| {
            let speaker = id.split('_').nth(1).ok_or_else(|| {
                Error::Ingest(format!("id `{id}` has no speaker component"))
            })?;
            Ok((id.as_str(), speaker))
        })
        .collect::<Result<_>>()?;
    choose_test_ids(&pairs, split)
}

fn choose_test_ids(entries: &[(&str, &str)], split: &SplitSpec) -> Result<BTreeSet<String>> {
    let ids_by_speaker: BTreeMap<&str, Vec<&str>> = {
        let mut m: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (id, speaker) in entries {
            m.entry(speaker).or_default().push(id);
        }

        m
    };
    let chosen: BTreeSet<String> = match split {
        SplitSpec::AutoSpeaker => {
            let speakers: Vec<&str> = ids_by_speaker.keys().copied().collect();
            let held_out: Vec<&str> = if speakers.len() >= 5 {
                speakers
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i % 5 == 4)
                    .map(|(_, s)| *s)
                    .collect()
            } else {
                vec![*speakers.last().expect("non-empty manifest")]
            };
            entries
                .iter()
                .filter(|(_, speaker)| held_out.contains(speaker))
                .map(|(id, _)| (*id).to_string())
                .collect()
        }
        SplitSpec::Speakers(names) => {
            for name in names {
                if !ids_by_speaker.contains_key(name.as_str()) {
                    return Err(Error::Ingest(format!("unknown test speaker `{name}`")));
                }
            }
            entries
                .iter()
                .filter(|(_, speaker)| names.iter().any(|n| n == speaker))
                .map(|(id, _)| (*id).to_string())
                .collect()
        }
        SplitSpec::FileList(path) => {
            let text = std::fs::read_to_string(path)?;
            let wanted: BTreeSet<String> = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect();
            let known: HashSet<&str> = entries.iter().map(|(id, _)| *id).collect();
            for id in &wanted {
                if !known.contains(id.as_str()) {
                    return Err(Error::Ingest(format!("test id `{id}` not in the manifest")));
                }
            }
            wanted
        }
    };
    if chosen.is_empty() {
        return Err(Error::Ingest("test split is empty".into()));
    }
    if chosen.len() == entries.len() {
        return Err(Error::Ingest("test split holds out every utterance".into()));
    }
    Ok(chosen)
}
