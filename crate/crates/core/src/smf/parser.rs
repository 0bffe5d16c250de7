//! Byte-level SMF parsing: chunk walking, VLQ decoding, running status.

use super::{EventBody, ParseWarning, SmfError, SmfFile, SmfFormat, TimedEvent, TrackChunk};

/// Decodes a variable-length quantity at `offset`.
///
/// Returns the decoded value and the number of bytes consumed (1..=4). The
/// encoding packs 7 bits per byte, big-endian, continuation flagged by the
/// high bit; the maximum representable value is 0x0FFF_FFFF.
pub fn read_vlq(bytes: &[u8], offset: usize) -> Result<(u32, usize), SmfError> {
    let mut value: u32 = 0;
    for i in 0..4 {
        let byte = *bytes.get(offset + i).ok_or(SmfError::Truncated {
            offset: offset + i,
            what: "variable-length quantity",
        })?;
        value = (value << 7) | u32::from(byte & 0x7F);
        if byte & 0x80 == 0 {
            return Ok((value, i + 1));
        }
    }
    Err(SmfError::OverlongVlq { offset })
}

/// Parses SMF bytes, discarding the warning log. See [`parse_smf_logged`].
pub fn parse_smf(bytes: &[u8]) -> Result<SmfFile, SmfError> {
    parse_smf_logged(bytes).map(|(file, _)| file)
}

/// Parses SMF bytes into an [`SmfFile`] plus the list of repairs and oddities
/// tolerated along the way.
///
/// Running status is resolved to explicit statuses, unknown meta/sysex events
/// are preserved opaquely with correct lengths, unknown chunks are skipped,
/// and trailing garbage after the final track is ignored — each with a
/// [`ParseWarning`]. Anything that would desynchronize the byte stream is a
/// hard [`SmfError`] naming the offending offset.
pub fn parse_smf_logged(bytes: &[u8]) -> Result<(SmfFile, Vec<ParseWarning>), SmfError> {
    let mut warnings = Vec::new();
    let mut cur = Cursor { bytes, pos: 0 };

    if cur.take(4, "chunk id").map_err(|_| SmfError::NotSmf)? != b"MThd" {
        return Err(SmfError::NotSmf);
    }
    let header_len = cur.u32("header length")?;
    if header_len < 6 {
        return Err(SmfError::HeaderTooShort {
            declared: header_len,
        });
    }
    let format_raw = cur.u16("format")?;
    let declared_tracks = cur.u16("track count")?;
    let division_raw = cur.u16("division")?;
    if header_len > 6 {
        cur.skip(header_len as usize - 6, "extended header")?;
        warnings.push(ParseWarning::HeaderLengthSkipped {
            declared: header_len,
        });
    }

    if division_raw & 0x8000 != 0 {
        return Err(SmfError::SmpteDivision);
    }
    if division_raw == 0 {
        return Err(SmfError::ZeroDivision);
    }

    let mut format = match format_raw {
        0 => SmfFormat::Single,
        1 => SmfFormat::Parallel,
        2 => SmfFormat::Sequential,
        other => return Err(SmfError::UnsupportedFormat(other)),
    };
    if format == SmfFormat::Single && declared_tracks != 1 {
        warnings.push(ParseWarning::Format0MultiTrack { declared_tracks });
        format = SmfFormat::Parallel;
    }

    let mut tracks = Vec::with_capacity(declared_tracks as usize);
    while tracks.len() < declared_tracks as usize {
        let chunk_offset = cur.pos;
        let id: [u8; 4] = cur.take(4, "chunk id")?.try_into().expect("4-byte slice");
        let chunk_len = cur.u32("chunk length")? as usize;
        let payload_start = cur.pos;
        let payload = cur.take(chunk_len, "chunk payload")?;
        if &id == b"MTrk" {
            let track = parse_track(payload, payload_start, tracks.len(), &mut warnings)?;
            tracks.push(track);
        } else {
            warnings.push(ParseWarning::UnknownChunkSkipped {
                id,
                offset: chunk_offset,
            });
        }
    }

    if cur.pos < bytes.len() {
        warnings.push(ParseWarning::TrailingBytes {
            offset: cur.pos,
            len: bytes.len() - cur.pos,
        });
    }

    Ok((
        SmfFile {
            format,
            division: division_raw,
            tracks,
        },
        warnings,
    ))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], SmfError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let slice = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(slice)
            }
            None => Err(SmfError::Truncated {
                offset: self.bytes.len(),
                what,
            }),
        }
    }

    fn skip(&mut self, n: usize, what: &'static str) -> Result<(), SmfError> {
        self.take(n, what).map(|_| ())
    }

    fn u16(&mut self, what: &'static str) -> Result<u16, SmfError> {
        let b = self.take(2, what)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, SmfError> {
        let b = self.take(4, what)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Parses one track payload. `base` is the payload's absolute byte offset,
/// used so errors and warnings name positions in the original input.
fn parse_track(
    data: &[u8],
    base: usize,
    track_index: usize,
    warnings: &mut Vec<ParseWarning>,
) -> Result<TrackChunk, SmfError> {
    let mut events = Vec::new();
    let mut pos = 0usize;
    let mut running_status: Option<u8> = None;
    let mut saw_end_of_track = false;

    while pos < data.len() {
        let (delta_ticks, vlq_len) = read_vlq_in(data, pos, base)?;
        pos += vlq_len;

        let first = *data.get(pos).ok_or(SmfError::Truncated {
            offset: base + pos,
            what: "event status",
        })?;

        let status = if first < 0x80 {
            running_status.ok_or(SmfError::OrphanDataByte { offset: base + pos })?
        } else {
            pos += 1;
            first
        };

        let body = match status {
            0x80..=0xEF => {
                running_status = Some(status);
                let channel = status & 0x0F;
                let n_data = match status >> 4 {
                    0xC | 0xD => 1,
                    _ => 2,
                };
                let mut data_bytes = [0u8; 2];
                for slot in data_bytes.iter_mut().take(n_data) {
                    let b = *data.get(pos).ok_or(SmfError::Truncated {
                        offset: base + pos,
                        what: "channel event data",
                    })?;
                    if b & 0x80 != 0 {
                        return Err(SmfError::InvalidDataByte { offset: base + pos });
                    }
                    *slot = b;
                    pos += 1;
                }
                match status >> 4 {
                    0x9 => EventBody::NoteOn {
                        channel,
                        pitch: data_bytes[0],
                        velocity: data_bytes[1],
                    },
                    0x8 => EventBody::NoteOff {
                        channel,
                        pitch: data_bytes[0],
                        velocity: data_bytes[1],
                    },
                    _ => {
                        let mut raw = vec![status];
                        raw.extend_from_slice(&data_bytes[..n_data]);
                        EventBody::Other { raw }
                    }
                }
            }
            0xFF => {
                let meta_offset = base + pos - 1;
                let meta_type = *data.get(pos).ok_or(SmfError::Truncated {
                    offset: base + pos,
                    what: "meta type",
                })?;
                pos += 1;
                let (len, vlq_len) = read_vlq_in(data, pos, base)?;
                pos += vlq_len;
                let len = len as usize;
                let end = pos.checked_add(len).filter(|&e| e <= data.len()).ok_or(
                    SmfError::Truncated {
                        offset: base + data.len(),
                        what: "meta payload",
                    },
                )?;
                let payload = &data[pos..end];
                pos = end;
                decode_meta(meta_type, payload, track_index, meta_offset, warnings)
            }
            0xF0 | 0xF7 => {
                let (len, vlq_len) = read_vlq_in(data, pos, base)?;
                pos += vlq_len;
                let len = len as usize;
                let end = pos.checked_add(len).filter(|&e| e <= data.len()).ok_or(
                    SmfError::Truncated {
                        offset: base + data.len(),
                        what: "sysex payload",
                    },
                )?;
                let mut raw = vec![status];
                write_canonical_vlq(len as u32, &mut raw);
                raw.extend_from_slice(&data[pos..end]);
                pos = end;
                EventBody::Other { raw }
            }
            _ => {
                // System common/realtime bytes are illegal in SMF tracks but
                // appear in sloppy files; consume their standard data lengths
                // to stay aligned.
                warnings.push(ParseWarning::SystemByteInTrack {
                    status,
                    offset: base + pos - 1,
                });
                let n_data = match status {
                    0xF1 | 0xF3 => 1,
                    0xF2 => 2,
                    _ => 0,
                };
                let mut raw = vec![status];
                for _ in 0..n_data {
                    let b = *data.get(pos).ok_or(SmfError::Truncated {
                        offset: base + pos,
                        what: "system event data",
                    })?;
                    if b & 0x80 != 0 {
                        return Err(SmfError::InvalidDataByte { offset: base + pos });
                    }
                    raw.push(b);
                    pos += 1;
                }
                EventBody::Other { raw }
            }
        };

        let is_end = body == EventBody::EndOfTrack;
        events.push(TimedEvent { delta_ticks, body });
        if is_end {
            saw_end_of_track = true;
            if pos < data.len() {
                warnings.push(ParseWarning::BytesAfterEndOfTrack {
                    track: track_index,
                    len: data.len() - pos,
                });
            }
            break;
        }
    }

    let end_of_track_repaired = !saw_end_of_track;
    if end_of_track_repaired {
        events.push(TimedEvent {
            delta_ticks: 0,
            body: EventBody::EndOfTrack,
        });
        warnings.push(ParseWarning::EndOfTrackRepaired { track: track_index });
    }

    Ok(TrackChunk {
        events,
        end_of_track_repaired,
    })
}

fn decode_meta(
    meta_type: u8,
    payload: &[u8],
    track_index: usize,
    offset: usize,
    warnings: &mut Vec<ParseWarning>,
) -> EventBody {
    match (meta_type, payload.len()) {
        (0x51, 3) => {
            let value = (u32::from(payload[0]) << 16)
                | (u32::from(payload[1]) << 8)
                | u32::from(payload[2]);
            if value == 0 {
                warnings.push(ParseWarning::MalformedMetaPreserved {
                    track: track_index,
                    offset,
                });
                opaque_meta(meta_type, payload)
            } else {
                EventBody::Tempo {
                    micros_per_quarter: value,
                }
            }
        }
        (0x58, 4) => {
            let (nn, dd, cc, bb) = (payload[0], payload[1], payload[2], payload[3]);
            if nn == 0 || dd > 30 {
                warnings.push(ParseWarning::MalformedMetaPreserved {
                    track: track_index,
                    offset,
                });
                opaque_meta(meta_type, payload)
            } else {
                EventBody::TimeSignature {
                    numerator: nn,
                    denominator_pow2: dd,
                    clocks_per_click: cc,
                    notated_32nds_per_quarter: bb,
                }
            }
        }
        (0x2F, 0) => EventBody::EndOfTrack,
        _ => opaque_meta(meta_type, payload),
    }
}

fn opaque_meta(meta_type: u8, payload: &[u8]) -> EventBody {
    let mut raw = vec![0xFF, meta_type];
    write_canonical_vlq(payload.len() as u32, &mut raw);
    raw.extend_from_slice(payload);
    EventBody::Other { raw }
}

fn read_vlq_in(data: &[u8], pos: usize, base: usize) -> Result<(u32, usize), SmfError> {
    read_vlq(data, pos).map_err(|e| match e {
        SmfError::Truncated { offset, what } => SmfError::Truncated {
            offset: base + offset,
            what,
        },
        SmfError::OverlongVlq { offset } => SmfError::OverlongVlq {
            offset: base + offset,
        },
        other => other,
    })
}

pub(super) fn write_canonical_vlq(value: u32, out: &mut Vec<u8>) {
    let mut groups = [0u8; 4];
    let mut n = 0;
    let mut v = value & 0x0FFF_FFFF;
    loop {
        groups[n] = (v & 0x7F) as u8;
        n += 1;
        v >>= 7;
        if v == 0 {
            break;
        }
    }
    for i in (0..n).rev() {
        let cont = if i == 0 { 0x00 } else { 0x80 };
        out.push(groups[i] | cont);
    }
}
