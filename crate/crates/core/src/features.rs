//! Per-anthem musical features.
//!
//! Eight scalars per performance: mean melodic-contour step, pitch mode,
//! note-onset density per beat, duration-weighted tempo, median note
//! velocity, mean note duration, median rest duration, and the count of
//! effective time-signature changes. Duration-like features are measured in
//! quarter-note beats so they stay invariant under tempo rescaling.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::score::{merged_sounding_intervals, Performance};

/// Column order shared by the CSV store, feature matrices, and reports.
pub const FEATURE_NAMES: [&str; 8] = [
    "melodic_contour_mean",
    "pitch_mode",
    "beat_onset_density",
    "tempo_bpm",
    "velocity_median",
    "note_duration_mean",
    "rest_duration_median",
    "time_signature_changes",
];

/// The eight features for one anthem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Canonical country name.
    pub country: String,
    /// Mean signed semitone step of the top-voice melody.
    pub melodic_contour_mean: f64,
    /// Most frequent MIDI pitch; ties break toward the lowest pitch.
    pub pitch_mode: u8,
    /// Distinct note-onset count per quarter-note beat of span.
    pub beat_onset_density: f64,
    /// Duration-weighted mean BPM over the note span.
    pub tempo_bpm: f64,
    /// Median note-on velocity (half-integer for even counts).
    pub velocity_median: f64,
    /// Mean note duration in beats.
    pub note_duration_mean: f64,
    /// Median rest between sounding intervals, in beats; 0 when legato.
    pub rest_duration_median: f64,
    /// Number of effective time-signature transitions.
    pub time_signature_changes: u32,
}

impl FeatureVector {
    /// The numeric features in [`FEATURE_NAMES`] order.
    pub fn values(&self) -> [f64; 8] {
        [
            self.melodic_contour_mean,
            f64::from(self.pitch_mode),
            self.beat_onset_density,
            self.tempo_bpm,
            self.velocity_median,
            self.note_duration_mean,
            self.rest_duration_median,
            f64::from(self.time_signature_changes),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error("degenerate performance: span is not positive")]
    DegeneratePerformance,
    #[error("tempo {0} BPM outside the supported (0, 1000) range")]
    TempoOutOfRange(f64),
    #[error("feature {0} is not finite")]
    NonFinite(&'static str),
}

/// Mean signed semitone step of the melody line, where the melody is the
/// highest-pitch note at each distinct onset tick. Fewer than two melody
/// notes yield 0.
pub fn melodic_contour_mean(perf: &Performance) -> f64 {
    let mut top_by_onset: BTreeMap<u64, u8> = BTreeMap::new();
    for note in &perf.notes {
        let entry = top_by_onset.entry(note.onset_tick).or_insert(note.pitch);
        if note.pitch > *entry {
            *entry = note.pitch;
        }
    }
    let melody: Vec<u8> = top_by_onset.into_values().collect();
    if melody.len() < 2 {
        return 0.0;
    }
    let step_sum: f64 = melody
        .windows(2)
        .map(|w| f64::from(w[1]) - f64::from(w[0]))
        .sum();
    step_sum / (melody.len() - 1) as f64
}

/// Most frequent pitch over all notes; ties break toward the lowest pitch.
pub fn pitch_mode(perf: &Performance) -> u8 {
    let mut counts = [0usize; 128];
    for note in &perf.notes {
        counts[note.pitch as usize] += 1;
    }
    let mut best = 0u8;
    let mut best_count = 0usize;
    for (pitch, &count) in counts.iter().enumerate() {
        if count > best_count {
            best = pitch as u8;
            best_count = count;
        }
    }
    best
}

/// Distinct note-onset ticks divided by the span in beats; spans below one
/// beat are floored to one beat so single-onset files are well-defined.
pub fn beat_onset_density(perf: &Performance) -> Result<f64, FeatureError> {
    let span = perf.span_length_beats();
    if !span.is_finite() || span < 0.0 {
        return Err(FeatureError::DegeneratePerformance);
    }
    let mut onsets: Vec<u64> = perf.notes.iter().map(|n| n.onset_tick).collect();
    onsets.dedup();
    if onsets.is_empty() {
        return Err(FeatureError::DegeneratePerformance);
    }
    Ok(onsets.len() as f64 / span.max(1.0))
}

/// Duration-weighted mean BPM, weighting each tempo segment by the seconds it
/// is active within the note span. Single-segment maps return that segment's
/// BPM exactly.
pub fn estimate_tempo(perf: &Performance) -> f64 {
    let map = &perf.tempo_map;
    if map.segments.len() == 1 {
        return map.segments[0].bpm();
    }
    let span_start = (perf.span_beats.0 * f64::from(map.division)).round() as u64;
    let span_end = (perf.span_beats.1 * f64::from(map.division)).round() as u64;

    let mut weighted = 0.0;
    let mut total = 0.0;
    for (i, seg) in map.segments.iter().enumerate() {
        let seg_end = map
            .segments
            .get(i + 1)
            .map_or(u64::MAX, |next| next.start_tick);
        let lo = seg.start_tick.max(span_start);
        let hi = seg_end.min(span_end);
        if hi > lo {
            let seconds = (hi - lo) as f64 / f64::from(map.division)
                * f64::from(seg.micros_per_quarter)
                / 1e6;
            weighted += seg.bpm() * seconds;
            total += seconds;
        }
    }
    if total > 0.0 {
        weighted / total
    } else {
        map.segment_at(span_start).bpm()
    }
}

/// Median of note velocities; even counts take the midpoint of the two
/// middle values.
pub fn velocity_median(perf: &Performance) -> f64 {
    let values: Vec<f64> = perf.notes.iter().map(|n| f64::from(n.velocity)).collect();
    median(values)
}

/// Arithmetic mean of note durations, in beats.
pub fn note_duration_mean(perf: &Performance) -> f64 {
    let sum: f64 = perf.notes.iter().map(|n| n.duration_beats).sum();
    sum / perf.notes.len() as f64
}

/// Median length of the gaps between consecutive merged sounding intervals,
/// in beats. Leading and trailing silence is outside the span by
/// construction; a fully legato piece yields 0.
pub fn rest_duration_median(perf: &Performance) -> f64 {
    let intervals = merged_sounding_intervals(&perf.notes);
    let gaps: Vec<f64> = intervals
        .windows(2)
        .map(|w| w[1].0 - w[0].1)
        .filter(|g| *g > 0.0)
        .collect();
    if gaps.is_empty() {
        return 0.0;
    }
    median(gaps)
}

/// Counts time-signature events whose (numerator, denominator) differs from
/// the signature in effect immediately before them. The first event sets the
/// baseline; a file with no events counts 0 (implicit 4/4).
pub fn time_signature_change_count(perf: &Performance) -> u32 {
    let mut changes = 0u32;
    let mut current: Option<(u8, u32)> = None;
    for ts in &perf.time_signatures {
        let sig = (ts.numerator, ts.denominator);
        if let Some(prev) = current {
            if prev != sig {
                changes += 1;
            }
        }
        current = Some(sig);
    }
    changes
}

/// Assembles the full [`FeatureVector`] for an admitted performance.
pub fn extract_feature_vector(
    perf: &Performance,
    country: &str,
) -> Result<FeatureVector, FeatureError> {
    let tempo_bpm = estimate_tempo(perf);
    if !(tempo_bpm > 0.0 && tempo_bpm < 1000.0) {
        return Err(FeatureError::TempoOutOfRange(tempo_bpm));
    }
    let vector = FeatureVector {
        country: country.to_string(),
        melodic_contour_mean: melodic_contour_mean(perf),
        pitch_mode: pitch_mode(perf),
        beat_onset_density: beat_onset_density(perf)?,
        tempo_bpm,
        velocity_median: velocity_median(perf),
        note_duration_mean: note_duration_mean(perf),
        rest_duration_median: rest_duration_median(perf),
        time_signature_changes: time_signature_change_count(perf),
    };
    for (name, value) in FEATURE_NAMES.iter().zip(vector.values()) {
        if !value.is_finite() {
            return Err(FeatureError::NonFinite(name));
        }
    }
    Ok(vector)
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// The per-anthem feature table, ordered by canonical country name.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureStore {
    pub vectors: Vec<FeatureVector>,
}

#[derive(Debug, Error)]
pub enum FeatureStoreError {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
}

impl FeatureStore {
    pub fn new(mut vectors: Vec<FeatureVector>) -> Self {
        vectors.sort_by(|a, b| a.country.cmp(&b.country));
        FeatureStore { vectors }
    }

    pub fn countries(&self) -> Vec<String> {
        self.vectors.iter().map(|v| v.country.clone()).collect()
    }

    pub fn get(&self, country: &str) -> Option<&FeatureVector> {
        self.vectors
            .binary_search_by(|v| v.country.as_str().cmp(country))
            .ok()
            .map(|i| &self.vectors[i])
    }

    /// Serializes to CSV with the fixed header
    /// `country,melodic_contour_mean,...,time_signature_changes`.
    pub fn to_csv(&self) -> Result<String, FeatureStoreError> {
        let mut out = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            let mut header = vec!["country"];
            header.extend_from_slice(&FEATURE_NAMES);
            w.write_record(&header)?;
            for v in &self.vectors {
                let mut record = vec![v.country.clone()];
                record.push(fmt_f64(v.melodic_contour_mean));
                record.push(v.pitch_mode.to_string());
                record.push(fmt_f64(v.beat_onset_density));
                record.push(fmt_f64(v.tempo_bpm));
                record.push(fmt_f64(v.velocity_median));
                record.push(fmt_f64(v.note_duration_mean));
                record.push(fmt_f64(v.rest_duration_median));
                record.push(v.time_signature_changes.to_string());
                w.write_record(&record)?;
            }
            w.flush()?;
        }
        Ok(String::from_utf8(out).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self, FeatureStoreError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let mut vectors = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row = i + 2; // 1-based, after the header
            let record = record?;
            let field = |idx: usize| -> Result<&str, FeatureStoreError> {
                record.get(idx).ok_or(FeatureStoreError::Row {
                    row,
                    message: format!("missing column {idx}"),
                })
            };
            let parse_f = |idx: usize| -> Result<f64, FeatureStoreError> {
                field(idx)?.parse().map_err(|_| FeatureStoreError::Row {
                    row,
                    message: format!("unparseable number in column {idx}"),
                })
            };
            vectors.push(FeatureVector {
                country: field(0)?.to_string(),
                melodic_contour_mean: parse_f(1)?,
                pitch_mode: parse_f(2)? as u8,
                beat_onset_density: parse_f(3)?,
                tempo_bpm: parse_f(4)?,
                velocity_median: parse_f(5)?,
                note_duration_mean: parse_f(6)?,
                rest_duration_median: parse_f(7)?,
                time_signature_changes: parse_f(8)? as u32,
            });
        }
        Ok(FeatureStore::new(vectors))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.vectors).expect("feature store serializes")
    }

    pub fn write_csv_file(&self, path: &std::path::Path) -> Result<(), FeatureStoreError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv()?.as_bytes())?;
        Ok(())
    }
}

fn fmt_f64(v: f64) -> String {
    // Shortest representation that round-trips; keeps CSV output stable.
    format!("{v}")
}
