//! Minimal SMF serialization: enough to round-trip parsed files and to build
//! synthetic fixtures. Statuses are always written explicitly (no running
//! status) and variable-length quantities canonically.

use super::parser::write_canonical_vlq;
use super::{EventBody, SmfFile, TimedEvent};

/// Appends the canonical VLQ encoding of `value` (must be <= 0x0FFF_FFFF).
pub fn write_vlq(value: u32, out: &mut Vec<u8>) {
    assert!(value <= 0x0FFF_FFFF, "VLQ value out of range: {value}");
    write_canonical_vlq(value, out);
}

/// Serializes an [`SmfFile`] to bytes. Tracks whose last event is not an
/// end-of-track meta get one appended.
pub fn write_smf(file: &SmfFile) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(b"MThd");
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&file.format.as_u16().to_be_bytes());
    out.extend_from_slice(&(file.tracks.len() as u16).to_be_bytes());
    out.extend_from_slice(&file.division.to_be_bytes());

    for track in &file.tracks {
        let mut payload = Vec::new();
        for event in &track.events {
            write_event(event, &mut payload);
        }
        let ends_properly = track
            .events
            .last()
            .is_some_and(|e| e.body == EventBody::EndOfTrack);
        if !ends_properly {
            payload.extend_from_slice(&[0x00, 0xFF, 0x2F, 0x00]);
        }
        out.extend_from_slice(b"MTrk");
        out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&payload);
    }
    out
}

fn write_event(event: &TimedEvent, out: &mut Vec<u8>) {
    write_vlq(event.delta_ticks, out);
    match &event.body {
        EventBody::NoteOn {
            channel,
            pitch,
            velocity,
        } => out.extend_from_slice(&[0x90 | (channel & 0x0F), pitch & 0x7F, velocity & 0x7F]),
        EventBody::NoteOff {
            channel,
            pitch,
            velocity,
        } => out.extend_from_slice(&[0x80 | (channel & 0x0F), pitch & 0x7F, velocity & 0x7F]),
        EventBody::Tempo { micros_per_quarter } => {
            let v = micros_per_quarter & 0x00FF_FFFF;
            out.extend_from_slice(&[0xFF, 0x51, 0x03]);
            out.extend_from_slice(&[(v >> 16) as u8, (v >> 8) as u8, v as u8]);
        }
        EventBody::TimeSignature {
            numerator,
            denominator_pow2,
            clocks_per_click,
            notated_32nds_per_quarter,
        } => out.extend_from_slice(&[
            0xFF,
            0x58,
            0x04,
            *numerator,
            *denominator_pow2,
            *clocks_per_click,
            *notated_32nds_per_quarter,
        ]),
        EventBody::EndOfTrack => out.extend_from_slice(&[0xFF, 0x2F, 0x00]),
        EventBody::Other { raw } => out.extend_from_slice(raw),
    }
}
