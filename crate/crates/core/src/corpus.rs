//! Corpus ingestion: scans a directory of `.mid`/`.midi` files, derives each
//! anthem's country from its file name, and runs parse -> performance ->
//! features per file. Files are processed in parallel; results are reported
//! in sorted order so downstream output is deterministic.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{extract_feature_vector, FeatureStore, FeatureVector};
use crate::indices::normalize_country_name;
use crate::score::{build_performance, Performance};
use crate::smf::parse_smf_logged;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus directory {path}: {source}")]
    UnreadableDir {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// One anthem that survived every stage.
#[derive(Debug, Clone)]
pub struct AdmittedAnthem {
    pub file_name: String,
    pub country: String,
    pub performance: Performance,
    pub features: FeatureVector,
    /// Parse warnings and pairing repairs, as display strings for the log.
    pub log: Vec<String>,
}

/// A file excluded from the corpus, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropRecord {
    pub file_name: String,
    pub reason: String,
}

/// The loaded corpus: every input file lands in exactly one of `admitted`
/// or `dropped`.
#[derive(Debug, Clone, Default)]
pub struct CorpusLoad {
    pub files_found: usize,
    /// Sorted by canonical country name.
    pub admitted: Vec<AdmittedAnthem>,
    /// Sorted by file name.
    pub dropped: Vec<DropRecord>,
}

impl CorpusLoad {
    pub fn feature_store(&self) -> FeatureStore {
        FeatureStore::new(self.admitted.iter().map(|a| a.features.clone()).collect())
    }
}

/// Derives the canonical country from a file name: the stem with `_` and `-`
/// read as spaces, then normalized like any other country string.
pub fn country_from_file_name(path: &Path) -> Result<String, String> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| "file name is not valid UTF-8".to_string())?;
    let spaced: String = stem
        .chars()
        .map(|c| if c == '_' || c == '-' { ' ' } else { c })
        .collect();
    normalize_country_name(&spaced).map_err(|e| e.to_string())
}

fn is_midi_file(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("mid") || e.eq_ignore_ascii_case("midi"))
}

/// Loads every MIDI file under `dir` (non-recursive). A file that fails any
/// stage is dropped with a reason; duplicate countries keep the
/// lexicographically first file name.
pub fn load_corpus(dir: &Path) -> Result<CorpusLoad, CorpusError> {
    let entries = fs::read_dir(dir).map_err(|source| CorpusError::UnreadableDir {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_midi_file(p))
        .collect();
    paths.sort();

    let results: Vec<Result<AdmittedAnthem, DropRecord>> =
        paths.par_iter().map(|path| load_one(path)).collect();

    let mut load = CorpusLoad {
        files_found: paths.len(),
        ..CorpusLoad::default()
    };
    let mut seen_countries: std::collections::BTreeMap<String, String> =
        std::collections::BTreeMap::new();
    for result in results {
        match result {
            Ok(anthem) => match seen_countries.get(&anthem.country) {
                Some(kept) => load.dropped.push(DropRecord {
                    file_name: anthem.file_name,
                    reason: format!("duplicate country '{}' (kept {kept})", anthem.country),
                }),
                None => {
                    seen_countries.insert(anthem.country.clone(), anthem.file_name.clone());
                    load.admitted.push(anthem);
                }
            },
            Err(drop) => load.dropped.push(drop),
        }
    }
    load.admitted.sort_by(|a, b| a.country.cmp(&b.country));
    load.dropped.sort_by(|a, b| a.file_name.cmp(&b.file_name));
    Ok(load)
}

fn load_one(path: &Path) -> Result<AdmittedAnthem, DropRecord> {
    let file_name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let drop = |reason: String| DropRecord {
        file_name: file_name.clone(),
        reason,
    };

    let country = country_from_file_name(path).map_err(|e| drop(format!("bad file name: {e}")))?;
    let bytes = fs::read(path).map_err(|e| drop(format!("unreadable: {e}")))?;
    let (smf, warnings) =
        parse_smf_logged(&bytes).map_err(|e| drop(format!("parse error: {e}")))?;
    let (performance, repairs) = build_performance(&smf).map_err(|e| drop(format!("{e}")))?;
    let features = extract_feature_vector(&performance, &country)
        .map_err(|e| drop(format!("feature error: {e}")))?;

    let mut log: Vec<String> = warnings.iter().map(|w| w.to_string()).collect();
    log.extend(repairs.entries());

    Ok(AdmittedAnthem {
        file_name,
        country,
        performance,
        features,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smf::{write_smf, EventBody, SmfFile, SmfFormat, TimedEvent, TrackChunk};

    fn tiny_smf() -> Vec<u8> {
        write_smf(&SmfFile {
            format: SmfFormat::Single,
            division: 480,
            tracks: vec![TrackChunk {
                events: vec![
                    TimedEvent {
                        delta_ticks: 0,
                        body: EventBody::NoteOn {
                            channel: 0,
                            pitch: 60,
                            velocity: 90,
                        },
                    },
                    TimedEvent {
                        delta_ticks: 480,
                        body: EventBody::NoteOff {
                            channel: 0,
                            pitch: 60,
                            velocity: 0,
                        },
                    },
                    TimedEvent {
                        delta_ticks: 0,
                        body: EventBody::EndOfTrack,
                    },
                ],
                end_of_track_repaired: false,
            }],
        })
    }

    #[test]
    fn country_from_underscored_name() {
        assert_eq!(
            country_from_file_name(Path::new("New_Zealand.mid")).unwrap(),
            "new zealand"
        );
    }

    #[test]
    fn loads_and_drops_deterministically() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("aurelia.mid"), tiny_smf()).unwrap();
        fs::write(dir.path().join("borduria.mid"), tiny_smf()).unwrap();
        fs::write(dir.path().join("corrupt.mid"), b"RIFF not midi").unwrap();
        fs::write(dir.path().join("notes.txt"), b"ignored").unwrap();

        let load = load_corpus(dir.path()).unwrap();
        assert_eq!(load.files_found, 3);
        assert_eq!(load.admitted.len(), 2);
        assert_eq!(load.dropped.len(), 1);
        assert_eq!(load.dropped[0].file_name, "corrupt.mid");
        assert!(load.dropped[0].reason.contains("not an SMF file"));
    }

    #[test]
    fn duplicate_country_keeps_first_file() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("Aurelia.mid"), tiny_smf()).unwrap();
        fs::write(dir.path().join("aurelia_anthem.mid"), tiny_smf()).unwrap();
        // Different normalization target but same country.
        let load = load_corpus(dir.path()).unwrap();
        // "aurelia" vs "aurelia anthem" are different countries; check the
        // exact-duplicate path instead.
        assert_eq!(load.admitted.len(), 2);

        let dir2 = tempfile::tempdir().unwrap();
        fs::write(dir2.path().join("USA.mid"), tiny_smf()).unwrap();
        fs::write(dir2.path().join("united_states.mid"), tiny_smf()).unwrap();
        let load2 = load_corpus(dir2.path()).unwrap();
        assert_eq!(load2.admitted.len(), 1);
        assert_eq!(load2.admitted[0].file_name, "USA.mid");
        assert_eq!(load2.dropped.len(), 1);
        assert!(load2.dropped[0].reason.contains("duplicate country"));
    }

    #[test]
    fn empty_file_dropped_with_reason() {
        let dir = tempfile::tempdir().unwrap();
        let empty = SmfFile {
            format: SmfFormat::Single,
            division: 480,
            tracks: vec![TrackChunk {
                events: vec![TimedEvent {
                    delta_ticks: 0,
                    body: EventBody::EndOfTrack,
                }],
                end_of_track_repaired: false,
            }],
        };
        fs::write(dir.path().join("silentia.mid"), write_smf(&empty)).unwrap();
        let load = load_corpus(dir.path()).unwrap();
        assert!(load.admitted.is_empty());
        assert!(load.dropped[0].reason.contains("no playable notes"));
    }
}
