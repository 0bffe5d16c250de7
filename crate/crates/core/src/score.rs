//! Timed performance model: converts a parsed [`SmfFile`] into paired notes
//! with beat and second timestamps, a tempo map, a time-signature list, and a
//! quarter-note beat grid.
//!
//! All tracks are merged into one timeline. Percussion (channel 10, 1-indexed)
//! is excluded from the performance's note list because drum "pitches" encode
//! instrument identity, not musical pitch; the exclusion is counted in the
//! repair log.

use std::collections::BTreeMap;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::smf::{EventBody, SmfFile};

/// Default tempo when a file carries no tempo meta: 500 000 µs per quarter
/// note (120 BPM), per the SMF specification.
pub const DEFAULT_MICROS_PER_QUARTER: u32 = 500_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TempoSegment {
    pub start_tick: u64,
    pub micros_per_quarter: u32,
}

impl TempoSegment {
    pub fn bpm(&self) -> f64 {
        60_000_000.0 / f64::from(self.micros_per_quarter)
    }
}

/// Piecewise-constant tempo over ticks. Segment starts are strictly
/// increasing and the first segment always starts at tick 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TempoMap {
    pub segments: Vec<TempoSegment>,
    pub division: u16,
}

impl TempoMap {
    /// Converts an absolute tick to seconds by accumulating
    /// `ticks_in_segment / division * micros_per_quarter / 1e6` over segments.
    /// Monotone non-decreasing in `tick`.
    pub fn seconds_at(&self, tick: u64) -> f64 {
        let division = f64::from(self.division);
        let mut seconds = 0.0;
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.start_tick >= tick {
                break;
            }
            let seg_end = self
                .segments
                .get(i + 1)
                .map_or(tick, |next| next.start_tick.min(tick));
            let ticks_in = (seg_end - seg.start_tick) as f64;
            seconds += ticks_in / division * f64::from(seg.micros_per_quarter) / 1e6;
        }
        seconds
    }

    /// The segment in effect at `tick`.
    pub fn segment_at(&self, tick: u64) -> &TempoSegment {
        let idx = self
            .segments
            .iter()
            .rposition(|s| s.start_tick <= tick)
            .unwrap_or(0);
        &self.segments[idx]
    }
}

/// A paired note with tick, beat (quarter-note), and second timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Note {
    pub channel: u8,
    pub pitch: u8,
    /// The note-on velocity; always >= 1 because velocity-0 note-ons close
    /// notes instead of opening them.
    pub velocity: u8,
    pub onset_tick: u64,
    pub offset_tick: u64,
    pub onset_beats: f64,
    pub duration_beats: f64,
    pub onset_seconds: f64,
    pub duration_seconds: f64,
}

impl Note {
    pub fn is_percussion(&self) -> bool {
        self.channel == 9
    }

    pub fn offset_beats(&self) -> f64 {
        self.onset_beats + self.duration_beats
    }
}

/// A time-signature event on the merged timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSignature {
    pub tick: u64,
    pub numerator: u8,
    pub denominator: u32,
}

impl TimeSignature {
    /// Measure length in quarter-note beats.
    pub fn beats_per_measure(&self) -> f64 {
        f64::from(self.numerator) * 4.0 / f64::from(self.denominator)
    }
}

/// Counts of repairs applied while assembling a performance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairLog {
    /// Notes dropped because offset == onset.
    pub zero_length_notes: usize,
    /// Notes force-closed at end of track.
    pub unclosed_notes: usize,
    /// Note-offs with no matching open note.
    pub orphan_note_offs: usize,
    /// Channel-10 notes excluded from the performance.
    pub percussion_notes_excluded: usize,
}

impl RepairLog {
    pub fn entries(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.zero_length_notes > 0 {
            out.push(format!(
                "dropped {} zero-length notes",
                self.zero_length_notes
            ));
        }
        if self.unclosed_notes > 0 {
            out.push(format!(
                "closed {} unterminated notes at end of track",
                self.unclosed_notes
            ));
        }
        if self.orphan_note_offs > 0 {
            out.push(format!(
                "ignored {} note-offs with no open note",
                self.orphan_note_offs
            ));
        }
        if self.percussion_notes_excluded > 0 {
            out.push(format!(
                "excluded {} percussion notes",
                self.percussion_notes_excluded
            ));
        }
        out
    }
}

/// One anthem as a timed performance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Performance {
    /// Non-percussion notes sorted by (onset tick, pitch). Never empty.
    pub notes: Vec<Note>,
    pub tempo_map: TempoMap,
    pub time_signatures: Vec<TimeSignature>,
    /// Quarter-note grid times in seconds, from beat 0 to the end of sounding
    /// material. Strictly increasing.
    pub beat_grid: Vec<f64>,
    /// (first onset, last offset) in beats.
    pub span_beats: (f64, f64),
    /// (first onset, last offset) in seconds.
    pub span_seconds: (f64, f64),
}

impl Performance {
    pub fn span_length_beats(&self) -> f64 {
        self.span_beats.1 - self.span_beats.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("no playable notes after repairs; file excluded from analysis")]
    EmptyPerformance,
}

/// Merges tempo metas from all tracks in tick order. Duplicate ticks resolve
/// last-wins (later track wins at equal ticks); a default 120 BPM segment is
/// inserted at tick 0 when the file has none there.
pub fn build_tempo_map(file: &SmfFile) -> TempoMap {
    let mut raw: Vec<TempoSegment> = Vec::new();
    for track in &file.tracks {
        let mut tick = 0u64;
        for event in &track.events {
            tick += u64::from(event.delta_ticks);
            if let EventBody::Tempo { micros_per_quarter } = event.body {
                raw.push(TempoSegment {
                    start_tick: tick,
                    micros_per_quarter,
                });
            }
        }
    }
    raw.sort_by_key(|s| s.start_tick);

    let mut segments: Vec<TempoSegment> = Vec::new();
    for seg in raw {
        match segments.last_mut() {
            Some(last) if last.start_tick == seg.start_tick => *last = seg,
            _ => segments.push(seg),
        }
    }
    if segments.first().is_none_or(|s| s.start_tick > 0) {
        segments.insert(
            0,
            TempoSegment {
                start_tick: 0,
                micros_per_quarter: DEFAULT_MICROS_PER_QUARTER,
            },
        );
    }
    TempoMap {
        segments,
        division: file.division,
    }
}

/// Pairs note-ons with note-offs across all tracks and channels.
///
/// Within each (track, channel, pitch), a note-on with velocity > 0 opens a
/// note and a note-off (or velocity-0 note-on) closes the oldest open one
/// (FIFO). Unclosed notes are closed at the track's final tick and counted in
/// the repair log. Includes percussion; callers filter as needed.
pub fn extract_notes(file: &SmfFile) -> (Vec<Note>, RepairLog) {
    let tempo_map = build_tempo_map(file);
    extract_notes_with(file, &tempo_map)
}

fn extract_notes_with(file: &SmfFile, tempo_map: &TempoMap) -> (Vec<Note>, RepairLog) {
    let mut log = RepairLog::default();
    let mut raw: Vec<(u64, u64, u8, u8, u8)> = Vec::new(); // onset, offset, channel, pitch, velocity

    for track in &file.tracks {
        // FIFO of open (onset, velocity) per (channel, pitch), scoped to this
        // track; BTreeMap keeps end-of-track closing deterministic.
        let mut open: BTreeMap<(u8, u8), VecDeque<(u64, u8)>> = BTreeMap::new();
        let mut tick = 0u64;
        for event in &track.events {
            tick += u64::from(event.delta_ticks);
            match event.body {
                EventBody::NoteOn {
                    channel,
                    pitch,
                    velocity,
                } if velocity > 0 => {
                    open.entry((channel, pitch))
                        .or_default()
                        .push_back((tick, velocity));
                }
                EventBody::NoteOn { channel, pitch, .. }
                | EventBody::NoteOff { channel, pitch, .. } => {
                    match open
                        .get_mut(&(channel, pitch))
                        .and_then(VecDeque::pop_front)
                    {
                        Some((onset, velocity)) => {
                            raw.push((onset, tick, channel, pitch, velocity));
                        }
                        None => log.orphan_note_offs += 1,
                    }
                }
                _ => {}
            }
        }
        let track_end = tick;
        for ((channel, pitch), queue) in open {
            for (onset, velocity) in queue {
                log.unclosed_notes += 1;
                raw.push((onset, track_end, channel, pitch, velocity));
            }
        }
    }

    let division = f64::from(file.division);
    let mut notes: Vec<Note> = Vec::with_capacity(raw.len());
    for (onset, offset, channel, pitch, velocity) in raw {
        if offset <= onset {
            log.zero_length_notes += 1;
            continue;
        }
        let onset_seconds = tempo_map.seconds_at(onset);
        notes.push(Note {
            channel,
            pitch,
            velocity,
            onset_tick: onset,
            offset_tick: offset,
            onset_beats: onset as f64 / division,
            duration_beats: (offset - onset) as f64 / division,
            onset_seconds,
            duration_seconds: tempo_map.seconds_at(offset) - onset_seconds,
        });
    }
    notes.sort_by_key(|n| (n.onset_tick, n.pitch));
    (notes, log)
}

/// Quarter-note grid: one point per beat from beat 0 up to (exclusive)
/// `ceil(span_beats)`, converted to seconds; a zero-length span yields the
/// single point at beat 0.
pub fn build_beat_grid(span_beats: f64, map: &TempoMap) -> Vec<f64> {
    let beats = span_beats.max(0.0).ceil() as u64;
    let count = beats.max(1);
    (0..count)
        .map(|b| map.seconds_at(b * u64::from(map.division)))
        .collect()
}

/// Unions the sounding intervals `[onset, offset)` of all non-percussion
/// notes, in beats, merging overlapping or touching intervals. Output is
/// disjoint and sorted.
pub fn merged_sounding_intervals(notes: &[Note]) -> Vec<(f64, f64)> {
    let mut spans: Vec<(f64, f64)> = notes
        .iter()
        .filter(|n| !n.is_percussion())
        .map(|n| (n.onset_beats, n.offset_beats()))
        .collect();
    spans.sort_by(|a, b| a.partial_cmp(b).expect("finite beat values"));

    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (start, end) in spans {
        match merged.last_mut() {
            Some((_, last_end)) if start <= *last_end => {
                *last_end = last_end.max(end);
            }
            _ => merged.push((start, end)),
        }
    }
    merged
}

/// Assembles the full performance for one anthem.
///
/// Returns `ScoreError::EmptyPerformance` when no non-percussion notes
/// survive repairs; such files are excluded from feature extraction.
pub fn build_performance(file: &SmfFile) -> Result<(Performance, RepairLog), ScoreError> {
    let tempo_map = build_tempo_map(file);
    let (all_notes, mut log) = extract_notes_with(file, &tempo_map);

    let mut notes: Vec<Note> = Vec::with_capacity(all_notes.len());
    for note in all_notes {
        if note.is_percussion() {
            log.percussion_notes_excluded += 1;
        } else {
            notes.push(note);
        }
    }
    if notes.is_empty() {
        return Err(ScoreError::EmptyPerformance);
    }

    let mut time_signatures: Vec<TimeSignature> = Vec::new();
    for track in &file.tracks {
        let mut tick = 0u64;
        for event in &track.events {
            tick += u64::from(event.delta_ticks);
            if let EventBody::TimeSignature { numerator, .. } = event.body {
                let denominator = event.body.denominator().expect("time signature");
                time_signatures.push(TimeSignature {
                    tick,
                    numerator,
                    denominator,
                });
            }
        }
    }
    time_signatures.sort_by_key(|t| t.tick);
    let mut deduped: Vec<TimeSignature> = Vec::new();
    for ts in time_signatures {
        match deduped.last_mut() {
            Some(last) if last.tick == ts.tick => *last = ts,
            _ => deduped.push(ts),
        }
    }

    let first_onset_tick = notes.first().map(|n| n.onset_tick).expect("non-empty");
    let last_offset_tick = notes
        .iter()
        .map(|n| n.offset_tick)
        .max()
        .expect("non-empty");
    let division = f64::from(file.division);
    let span_beats = (
        first_onset_tick as f64 / division,
        last_offset_tick as f64 / division,
    );
    let span_seconds = (
        tempo_map.seconds_at(first_onset_tick),
        tempo_map.seconds_at(last_offset_tick),
    );
    let beat_grid = build_beat_grid(span_beats.1, &tempo_map);

    Ok((
        Performance {
            notes,
            tempo_map,
            time_signatures: deduped,
            beat_grid,
            span_beats,
            span_seconds,
        },
        log,
    ))
}
