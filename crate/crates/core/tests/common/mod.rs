//! Shared fixtures for the integration and acceptance suites: a synthetic
//! six-anthem corpus with hand-computed expected feature values, two index
//! tables (one planted as a strictly monotone function of tempo), and
//! builders for turning note lists into SMF bytes.

#![allow(dead_code)]

use std::fs;
use std::path::Path;

use anthemetrics::features::FeatureVector;
use anthemetrics::smf::{write_smf, EventBody, SmfFile, SmfFormat, TimedEvent, TrackChunk};

pub const DIVISION: u16 = 480;

/// A note in beat units: (pitch, onset, duration, velocity).
pub type BeatNote = (u8, f64, f64, u8);

/// One synthetic anthem definition.
pub struct AnthemSpec {
    pub country: &'static str,
    /// (tick, microseconds per quarter note)
    pub tempos: &'static [(u64, u32)],
    /// (tick, numerator, denominator power of two)
    pub signatures: &'static [(u64, u8, u8)],
    pub notes: &'static [BeatNote],
    /// Split meta and notes across two tracks (format 1) instead of one.
    pub two_tracks: bool,
    /// Close notes with velocity-0 note-ons instead of note-offs.
    pub close_with_velocity_zero: bool,
}

pub fn corpus_specs() -> Vec<AnthemSpec> {
    vec![
        AnthemSpec {
            country: "aurelia",
            tempos: &[(0, 500_000)], // 120 BPM
            signatures: &[(0, 4, 2)],
            notes: &[
                (60, 0.0, 1.0, 80),
                (64, 1.0, 1.0, 90),
                (62, 2.0, 1.0, 70),
                (65, 3.0, 1.0, 100),
                (64, 4.0, 1.0, 90),
                (67, 5.0, 1.0, 60),
            ],
            two_tracks: false,
            close_with_velocity_zero: false,
        },
        AnthemSpec {
            country: "borduria",
            tempos: &[(0, 750_000)], // 80 BPM
            signatures: &[(0, 4, 2), (1920, 3, 2)],
            notes: &[
                (55, 0.0, 0.5, 70),
                (57, 0.5, 0.5, 70),
                (59, 1.0, 1.0, 75),
                (55, 2.5, 0.5, 70),
                (57, 3.0, 1.0, 80),
                (55, 4.0, 2.0, 65),
                (52, 6.5, 0.5, 60),
            ],
            two_tracks: true,
            close_with_velocity_zero: false,
        },
        AnthemSpec {
            country: "celestia",
            tempos: &[(0, 625_000)], // 96 BPM
            signatures: &[(0, 4, 2)],
            notes: &[
                (60, 0.0, 1.0, 85),
                (64, 0.0, 1.0, 85),
                (67, 0.0, 1.0, 85),
                (65, 1.0, 1.0, 90),
                (59, 2.0, 1.0, 75),
                (62, 2.0, 1.0, 75),
                (64, 3.0, 2.0, 95),
                (60, 5.0, 1.0, 70),
            ],
            two_tracks: false,
            close_with_velocity_zero: false,
        },
        AnthemSpec {
            country: "dorne",
            tempos: &[(0, 400_000)], // 150 BPM
            signatures: &[],
            notes: &[
                (72, 0.0, 0.5, 100),
                (74, 0.5, 0.5, 100),
                (76, 1.0, 0.5, 100),
                (77, 1.5, 0.5, 105),
                (79, 2.0, 0.5, 110),
                (77, 2.5, 0.5, 105),
                (76, 3.0, 0.5, 100),
                (74, 3.5, 0.5, 95),
            ],
            two_tracks: false,
            close_with_velocity_zero: false,
        },
        AnthemSpec {
            country: "elbonia",
            tempos: &[(0, 375_000), (1920, 500_000)], // 160 then 120 BPM
            signatures: &[(0, 4, 2)],
            notes: &[
                (67, 0.0, 1.0, 88),
                (69, 1.0, 1.0, 88),
                (71, 2.0, 1.0, 92),
                (72, 3.0, 1.0, 92),
                (71, 4.0, 2.0, 84),
                (69, 6.0, 1.0, 84),
                (67, 7.0, 1.0, 80),
            ],
            two_tracks: true,
            close_with_velocity_zero: false,
        },
        AnthemSpec {
            country: "freedonia",
            tempos: &[(0, 600_000)],                // 100 BPM
            signatures: &[(0, 4, 2), (3840, 4, 2)], // restated, not a change
            notes: &[
                (62, 0.0, 1.0, 77),
                (65, 1.0, 0.5, 81),
                (64, 2.0, 1.0, 77),
                (62, 3.5, 0.5, 70),
                (60, 4.0, 3.0, 85),
                (64, 8.0, 1.0, 90),
                (65, 9.0, 1.0, 95),
            ],
            two_tracks: false,
            close_with_velocity_zero: true,
        },
    ]
}

/// Hand-computed feature vectors for the corpus above, in corpus order.
/// Every value is derived arithmetic, independent of the extraction code:
/// contour = mean signed step of the top voice, density = distinct onsets
/// over span beats, tempo = (seconds-weighted) BPM, medians by sorting.
pub fn expected_features() -> Vec<FeatureVector> {
    vec![
        FeatureVector {
            country: "aurelia".into(),
            melodic_contour_mean: 7.0 / 5.0,
            pitch_mode: 64,
            beat_onset_density: 1.0,
            tempo_bpm: 120.0,
            velocity_median: 85.0,
            note_duration_mean: 1.0,
            rest_duration_median: 0.0,
            time_signature_changes: 0,
        },
        FeatureVector {
            country: "borduria".into(),
            melodic_contour_mean: -3.0 / 6.0,
            pitch_mode: 55,
            beat_onset_density: 1.0,
            tempo_bpm: 80.0,
            velocity_median: 70.0,
            note_duration_mean: 6.0 / 7.0,
            rest_duration_median: 0.5,
            time_signature_changes: 1,
        },
        FeatureVector {
            country: "celestia".into(),
            melodic_contour_mean: -7.0 / 4.0,
            pitch_mode: 60,
            beat_onset_density: 5.0 / 6.0,
            tempo_bpm: 96.0,
            velocity_median: 85.0,
            note_duration_mean: 9.0 / 8.0,
            rest_duration_median: 0.0,
            time_signature_changes: 0,
        },
        FeatureVector {
            country: "dorne".into(),
            melodic_contour_mean: 2.0 / 7.0,
            pitch_mode: 74,
            beat_onset_density: 2.0,
            tempo_bpm: 150.0,
            velocity_median: 100.0,
            note_duration_mean: 0.5,
            rest_duration_median: 0.0,
            time_signature_changes: 0,
        },
        FeatureVector {
            country: "elbonia".into(),
            // 160 BPM for 1.5 s then 120 BPM for 2.0 s over the 8-beat span.
            melodic_contour_mean: 0.0,
            pitch_mode: 67,
            beat_onset_density: 7.0 / 8.0,
            tempo_bpm: (160.0 * 1.5 + 120.0 * 2.0) / 3.5,
            velocity_median: 88.0,
            note_duration_mean: 8.0 / 7.0,
            rest_duration_median: 0.0,
            time_signature_changes: 0,
        },
        FeatureVector {
            country: "freedonia".into(),
            melodic_contour_mean: 3.0 / 6.0,
            pitch_mode: 62,
            beat_onset_density: 7.0 / 10.0,
            tempo_bpm: 100.0,
            velocity_median: 81.0,
            note_duration_mean: 8.0 / 7.0,
            rest_duration_median: 0.5,
            time_signature_changes: 0,
        },
    ]
}

/// Builds the SMF value for a spec; `build_bytes` serializes it.
pub fn build_smf(spec: &AnthemSpec) -> SmfFile {
    smf_from_parts(
        spec.notes,
        spec.tempos,
        spec.signatures,
        spec.two_tracks,
        spec.close_with_velocity_zero,
    )
}

/// Generic builder: note list in beat units plus tempo/signature events to
/// a one- or two-track SMF at [`DIVISION`] ticks per quarter.
pub fn smf_from_parts(
    note_list: &[BeatNote],
    tempos: &[(u64, u32)],
    signatures: &[(u64, u8, u8)],
    two_tracks: bool,
    close_with_velocity_zero: bool,
) -> SmfFile {
    let to_tick = |beats: f64| (beats * f64::from(DIVISION)).round() as u64;

    let mut meta: Vec<(u64, u8, EventBody)> = Vec::new();
    for &(tick, micros) in tempos {
        meta.push((
            tick,
            0,
            EventBody::Tempo {
                micros_per_quarter: micros,
            },
        ));
    }
    for &(tick, nn, dd) in signatures {
        meta.push((
            tick,
            0,
            EventBody::TimeSignature {
                numerator: nn,
                denominator_pow2: dd,
                clocks_per_click: 24,
                notated_32nds_per_quarter: 8,
            },
        ));
    }

    let mut notes: Vec<(u64, u8, EventBody)> = Vec::new();
    for &(pitch, onset, duration, velocity) in note_list {
        notes.push((
            to_tick(onset),
            2,
            EventBody::NoteOn {
                channel: 0,
                pitch,
                velocity,
            },
        ));
        let close = if close_with_velocity_zero {
            EventBody::NoteOn {
                channel: 0,
                pitch,
                velocity: 0,
            }
        } else {
            EventBody::NoteOff {
                channel: 0,
                pitch,
                velocity: 0,
            }
        };
        notes.push((to_tick(onset + duration), 1, close));
    }

    let track_of = |mut timeline: Vec<(u64, u8, EventBody)>| -> TrackChunk {
        // Closers sort before openers at equal ticks so repeated pitches
        // pair without zero-length artifacts.
        timeline.sort_by_key(|e| (e.0, e.1));
        let mut events = Vec::with_capacity(timeline.len() + 1);
        let mut last = 0u64;
        for (tick, _, body) in timeline {
            events.push(TimedEvent {
                delta_ticks: (tick - last) as u32,
                body,
            });
            last = tick;
        }
        events.push(TimedEvent {
            delta_ticks: 0,
            body: EventBody::EndOfTrack,
        });
        TrackChunk {
            events,
            end_of_track_repaired: false,
        }
    };

    if two_tracks {
        SmfFile {
            format: SmfFormat::Parallel,
            division: DIVISION,
            tracks: vec![track_of(meta), track_of(notes)],
        }
    } else {
        let mut all = meta;
        all.extend(notes);
        SmfFile {
            format: SmfFormat::Single,
            division: DIVISION,
            tracks: vec![track_of(all)],
        }
    }
}

pub fn build_bytes(spec: &AnthemSpec) -> Vec<u8> {
    write_smf(&build_smf(spec))
}

/// Index CSVs: prosperity is strictly monotone in each anthem's tempo
/// (Spearman against tempo_bpm is exactly 1); serenity omits freedonia and
/// adds a country absent from the corpus.
pub const PROSPERITY_CSV: &str = "\
country,score,rank,region
Aurelia,5.5,3,north
BORDURIA,2.1,6,east
C\u{e9}lestia,3.0,5,west
dorne,8.0,1,south
Elbonia,6.9,2,north
freedonia,4.2,4,west
";

pub const SERENITY_CSV: &str = "\
position,name,unrest
1,elbonia,1.9
2,dorne,2.4
3,aurelia,3.2
4,celestia,5.1
5,borduria,7.7
6,atlantis,9.9
";

pub const CONFIG_TOML: &str = "\
# Demo configuration for the bundled synthetic corpus. Pass --out to choose
# where artifacts are written.
corpus_dir = \"corpus\"
seed = 42
k_max = 4
join_mode = \"global_intersection\"
formats = [\"csv\", \"json\", \"svg\"]

[[indices]]
csv = \"indices/prosperity.csv\"
name = \"prosperity\"
direction = \"higher_is_better\"

[indices.columns]
country = 0
score = 1
rank = 2

[[indices]]
csv = \"indices/serenity.csv\"
name = \"serenity\"
direction = \"higher_is_worse\"

[indices.columns]
country = 1
score = 2
rank = 0
";

/// Writes the whole fixture tree (corpus, indices, config) under `root`.
pub fn write_corpus_tree(root: &Path) {
    let corpus = root.join("corpus");
    let indices = root.join("indices");
    fs::create_dir_all(&corpus).expect("create corpus dir");
    fs::create_dir_all(&indices).expect("create indices dir");
    for spec in corpus_specs() {
        fs::write(
            corpus.join(format!("{}.mid", spec.country)),
            build_bytes(&spec),
        )
        .expect("write anthem");
    }
    fs::write(indices.join("prosperity.csv"), PROSPERITY_CSV).expect("write index");
    fs::write(indices.join("serenity.csv"), SERENITY_CSV).expect("write index");
    fs::write(root.join("config.toml"), CONFIG_TOML).expect("write config");
}

/// Path to the committed fixture tree.
pub fn testdata_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("..")
        .join("..")
        .join("testdata")
}

/// MThd (format 0, 1 track, division 480) + one track: NoteOn(ch0, 60, 90)
/// at delta 0, explicit NoteOff(ch0, 60, 0) at delta 480, end of track.
/// Assembled by hand, byte by byte.
pub const MINIMAL_FIXTURE: &[u8] = &[
    0x4D, 0x54, 0x68, 0x64, 0x00, 0x00, 0x00, 0x06, // MThd, length 6
    0x00, 0x00, 0x00, 0x01, 0x01, 0xE0, // format 0, 1 track, division 480
    0x4D, 0x54, 0x72, 0x6B, 0x00, 0x00, 0x00, 0x0D, // MTrk, length 13
    0x00, 0x90, 0x3C, 0x5A, // delta 0, NoteOn ch0 pitch 60 vel 90
    0x83, 0x60, 0x80, 0x3C, 0x00, // delta 480, NoteOff ch0 pitch 60 vel 0
    0x00, 0xFF, 0x2F, 0x00, // delta 0, end of track
];

/// The same fixture with the second event's status byte omitted: running
/// status reuses 0x90, so the closing event arrives as NoteOn(60, 0).
pub const RUNNING_STATUS_FIXTURE: &[u8] = &[
    0x4D, 0x54, 0x68, 0x64, 0x00, 0x00, 0x00, 0x06, //
    0x00, 0x00, 0x00, 0x01, 0x01, 0xE0, //
    0x4D, 0x54, 0x72, 0x6B, 0x00, 0x00, 0x00, 0x0C, // MTrk, length 12
    0x00, 0x90, 0x3C, 0x5A, //
    0x83, 0x60, 0x3C, 0x00, // delta 480, running status: pitch 60 vel 0
    0x00, 0xFF, 0x2F, 0x00, //
];

/// A meta-heavy track: tempo, time signature, an unknown text meta, a
/// sysex, and a program change, all preserved with correct lengths.
pub const META_FIXTURE: &[u8] = &[
    0x4D, 0x54, 0x68, 0x64, 0x00, 0x00, 0x00, 0x06, //
    0x00, 0x00, 0x00, 0x01, 0x01, 0xE0, //
    0x4D, 0x54, 0x72, 0x6B, 0x00, 0x00, 0x00, 0x2A, // MTrk, length 42
    0x00, 0xFF, 0x51, 0x03, 0x07, 0xA1, 0x20, // tempo 500000
    0x00, 0xFF, 0x58, 0x04, 0x04, 0x02, 0x18, 0x08, // time signature 4/4
    0x00, 0xFF, 0x01, 0x03, 0x68, 0x69, 0x21, // text meta "hi!"
    0x00, 0xF0, 0x02, 0x01, 0xF7, // sysex, length 2
    0x00, 0xC0, 0x05, // program change ch0 -> 5
    0x00, 0x90, 0x45, 0x64, // NoteOn ch0 pitch 69 vel 100
    0x81, 0x70, 0x45, 0x00, // delta 240, running status NoteOn vel 0
    0x00, 0xFF, 0x2F, 0x00, //
];

pub const HAND_FIXTURES: [&[u8]; 3] = [MINIMAL_FIXTURE, RUNNING_STATUS_FIXTURE, META_FIXTURE];
