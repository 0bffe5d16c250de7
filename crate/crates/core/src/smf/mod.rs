//! Standard MIDI File (SMF 1.0) parsing.
//!
//! Parses the `MThd`/`MTrk` chunk structure, variable-length quantities,
//! running status, and the meta events the analysis pipeline needs (tempo,
//! time signature, end-of-track). Everything else is preserved byte-exact as
//! [`EventBody::Other`] so the parser stays aligned and lossless.
//!
//! The parser is written to be total over arbitrary byte input: it returns
//! either an [`SmfFile`] or a structured [`SmfError`], never panics.

mod parser;
mod writer;

pub use parser::{parse_smf, parse_smf_logged, read_vlq};
pub use writer::{write_smf, write_vlq};

use std::fmt;

use thiserror::Error;

/// SMF header format word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmfFormat {
    /// Format 0: a single multi-channel track.
    Single,
    /// Format 1: simultaneous tracks sharing one timebase.
    Parallel,
    /// Format 2: independent sequential tracks.
    Sequential,
}

impl SmfFormat {
    pub fn as_u16(self) -> u16 {
        match self {
            SmfFormat::Single => 0,
            SmfFormat::Parallel => 1,
            SmfFormat::Sequential => 2,
        }
    }
}

/// A parsed Standard MIDI File.
///
/// Invariants upheld by [`parse_smf`]: `division > 0` (SMPTE division is
/// rejected), the track count equals the header's declared count, and a
/// `Single`-format file has exactly one track.
#[derive(Debug, Clone, PartialEq)]
pub struct SmfFile {
    pub format: SmfFormat,
    /// Ticks per quarter note (PPQ). Always positive.
    pub division: u16,
    pub tracks: Vec<TrackChunk>,
}

impl SmfFile {
    /// Structural equality: compares format, division, and every event, but
    /// ignores repair bookkeeping. Round-tripping a repaired file produces a
    /// clean reparse, so `==` would be too strict there.
    pub fn structurally_eq(&self, other: &SmfFile) -> bool {
        self.format == other.format
            && self.division == other.division
            && self.tracks.len() == other.tracks.len()
            && self
                .tracks
                .iter()
                .zip(&other.tracks)
                .all(|(a, b)| a.events == b.events)
    }
}

/// One `MTrk` chunk: a sequence of delta-timed events ending in end-of-track.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackChunk {
    pub events: Vec<TimedEvent>,
    /// True when the end-of-track meta was missing and appended synthetically.
    pub end_of_track_repaired: bool,
}

/// A delta-timed event.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedEvent {
    pub delta_ticks: u32,
    pub body: EventBody,
}

/// Event payloads the pipeline distinguishes; everything else is `Other`.
#[derive(Debug, Clone, PartialEq)]
pub enum EventBody {
    NoteOn {
        channel: u8,
        pitch: u8,
        velocity: u8,
    },
    NoteOff {
        channel: u8,
        pitch: u8,
        velocity: u8,
    },
    /// Set-tempo meta (0x51); value is microseconds per quarter note, 24-bit, >= 1.
    Tempo {
        micros_per_quarter: u32,
    },
    /// Time-signature meta (0x58). The on-wire denominator is a power-of-two
    /// exponent; `denominator()` yields the musical value.
    TimeSignature {
        numerator: u8,
        denominator_pow2: u8,
        clocks_per_click: u8,
        notated_32nds_per_quarter: u8,
    },
    EndOfTrack,
    /// Any event the pipeline does not interpret, stored with an explicit
    /// status byte and canonical length encoding so it re-serializes cleanly.
    Other {
        raw: Vec<u8>,
    },
}

impl EventBody {
    pub fn denominator(&self) -> Option<u32> {
        match self {
            EventBody::TimeSignature {
                denominator_pow2, ..
            } => Some(1u32 << denominator_pow2),
            _ => None,
        }
    }
}

/// Non-fatal oddities encountered while parsing; the file was still usable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseWarning {
    /// Header declared more than the standard 6 bytes; extras skipped.
    HeaderLengthSkipped { declared: u32 },
    /// A chunk id other than `MTrk` before the declared tracks were found.
    UnknownChunkSkipped { id: [u8; 4], offset: usize },
    /// Bytes after the final declared track.
    TrailingBytes { offset: usize, len: usize },
    /// Format 0 declared more than one track; reinterpreted as format 1.
    Format0MultiTrack { declared_tracks: u16 },
    /// Track ended without an end-of-track meta; one was appended.
    EndOfTrackRepaired { track: usize },
    /// Bytes inside a track chunk after its end-of-track meta.
    BytesAfterEndOfTrack { track: usize, len: usize },
    /// A tempo/time-signature meta carried an out-of-domain value and was
    /// preserved as an opaque event instead.
    MalformedMetaPreserved { track: usize, offset: usize },
    /// A system common/realtime status byte appeared inside a track.
    SystemByteInTrack { status: u8, offset: usize },
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseWarning::HeaderLengthSkipped { declared } => {
                write!(f, "header declared {declared} bytes; skipped extras past 6")
            }
            ParseWarning::UnknownChunkSkipped { id, offset } => write!(
                f,
                "skipped unknown chunk {:?} at byte {offset}",
                String::from_utf8_lossy(id)
            ),
            ParseWarning::TrailingBytes { offset, len } => {
                write!(f, "ignored {len} trailing bytes at byte {offset}")
            }
            ParseWarning::Format0MultiTrack { declared_tracks } => write!(
                f,
                "format 0 file declares {declared_tracks} tracks; treating as format 1"
            ),
            ParseWarning::EndOfTrackRepaired { track } => {
                write!(f, "track {track}: appended missing end-of-track")
            }
            ParseWarning::BytesAfterEndOfTrack { track, len } => {
                write!(f, "track {track}: ignored {len} bytes after end-of-track")
            }
            ParseWarning::MalformedMetaPreserved { track, offset } => write!(
                f,
                "track {track}: out-of-domain meta value at byte {offset} kept as opaque event"
            ),
            ParseWarning::SystemByteInTrack { status, offset } => write!(
                f,
                "unexpected system status 0x{status:02X} at byte {offset}; kept as opaque event"
            ),
        }
    }
}

/// Fatal parse failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmfError {
    #[error("not an SMF file (missing MThd magic)")]
    NotSmf,
    #[error("truncated input at byte {offset} while reading {what}")]
    Truncated { offset: usize, what: &'static str },
    #[error("overlong variable-length quantity at byte {offset} (5th continuation byte)")]
    OverlongVlq { offset: usize },
    #[error("SMPTE time division is unsupported; only ticks-per-quarter-note files are accepted")]
    SmpteDivision,
    #[error("division (ticks per quarter note) is zero")]
    ZeroDivision,
    #[error("header declares length {declared}, below the required 6 bytes")]
    HeaderTooShort { declared: u32 },
    #[error("unsupported SMF format {0}")]
    UnsupportedFormat(u16),
    #[error("data byte in status position at byte {offset} with no running status")]
    OrphanDataByte { offset: usize },
    #[error("expected data byte at byte {offset}, found byte with high bit set")]
    InvalidDataByte { offset: usize },
}
