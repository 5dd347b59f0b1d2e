//! Time-tag stream files.
//!
//! Binary layout (little endian): a 16-byte header made of the 8-byte magic
//! [`STREAM_MAGIC`], a `u32` version and a reserved `u32` (zero), followed by
//! 9-byte records `(channel: u8, timestamp_ps: u64)`. Channel codes are
//! 0 = trigger, 1 = Alice, 2 = Bob.
//!
//! The text form is CSV with the header `channel,timestamp_ps` and the same
//! numeric channel codes.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Channel, TimeTagEvent};
use crate::{Error, Result};

pub const STREAM_MAGIC: [u8; 8] = *b"TBTAGS\0\0";
pub const STREAM_VERSION: u32 = 1;

pub fn write_stream_binary<W: Write>(w: W, events: &[TimeTagEvent]) -> Result<()> {
    let mut w = BufWriter::new(w);
    w.write_all(&STREAM_MAGIC)?;
    w.write_all(&STREAM_VERSION.to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    for e in events {
        w.write_all(&[e.channel.code()])?;
        w.write_all(&e.timestamp.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_stream_binary<R: Read>(r: R) -> Result<Vec<TimeTagEvent>> {
    let mut r = BufReader::new(r);
    let mut header = [0u8; 16];
    r.read_exact(&mut header)
        .map_err(|_| Error::Parse("time-tag file shorter than its header".into()))?;
    if header[..8] != STREAM_MAGIC {
        return Err(Error::Parse("not a time-tag stream (bad magic)".into()));
    }
    let version = u32::from_le_bytes(header[8..12].try_into().unwrap());
    if version != STREAM_VERSION {
        return Err(Error::Parse(format!("unsupported time-tag stream version {version}")));
    }
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() % 9 != 0 {
        return Err(Error::Parse("truncated time-tag record".into()));
    }
    body.chunks_exact(9)
        .enumerate()
        .map(|(i, rec)| {
            let channel = Channel::from_code(rec[0])
                .ok_or_else(|| Error::Parse(format!("record {i}: unknown channel code {}", rec[0])))?;
            let timestamp = u64::from_le_bytes(rec[1..9].try_into().unwrap());
            Ok(TimeTagEvent { timestamp, channel })
        })
        .collect()
}

pub fn write_stream_csv<W: Write>(w: W, events: &[TimeTagEvent]) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "channel,timestamp_ps")?;
    for e in events {
        writeln!(w, "{},{}", e.channel.code(), e.timestamp)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_stream_csv<R: Read>(r: R) -> Result<Vec<TimeTagEvent>> {
    let mut events = Vec::new();
    for (n, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (n == 0 && line.starts_with("channel")) {
            continue;
        }
        let (ch, ts) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `channel,timestamp_ps`", n + 1)))?;
        let code: u8 = ch.trim().parse().map_err(|_| Error::Parse(format!("line {}: bad channel", n + 1)))?;
        let channel = Channel::from_code(code)
            .ok_or_else(|| Error::Parse(format!("line {}: unknown channel code {code}", n + 1)))?;
        let timestamp = ts.trim().parse().map_err(|_| Error::Parse(format!("line {}: bad timestamp", n + 1)))?;
        events.push(TimeTagEvent { timestamp, channel });
    }
    Ok(events)
}

/// Reads either format, recognising the binary magic.
pub fn read_stream(path: &Path) -> Result<Vec<TimeTagEvent>> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(&STREAM_MAGIC) {
        read_stream_binary(&bytes[..])
    } else {
        read_stream_csv(&bytes[..])
    }
}
