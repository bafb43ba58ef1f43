//! Newline-framed ASCII protocol on the UART between the main controller
//! and the motor controller.
//!
//! One message per line, terminated by a single LF (0x0A):
//!
//! | Message             | Line                    | Direction      |
//! |---------------------|-------------------------|----------------|
//! | `Command::HandClose`| `HAND_CLOSE`            | main → motor   |
//! | `Command::HandOpen` | `HAND_OPEN`             | main → motor   |
//! | `Status::Closed`    | `CLOSED`                | motor → main   |
//! | `Status::Opened`    | `OPENED`                | motor → main   |
//! | `Telemetry`         | `P c0 c1 c2 c3 c4`      | motor → main   |
//!
//! Telemetry counts are unsigned decimal ADC values in `[0, 1023]`, finger
//! order thumb..pinky, separated by single spaces. Lines (excluding the LF)
//! are at most [`MAX_LINE_LEN`] bytes. There is no checksum; malformed lines
//! are reported as [`FrameError`]s and the decoder resynchronizes at the
//! next LF.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hand::FINGER_COUNT;
use crate::sensors::{AdcReading, ADC_MAX};

pub const MAX_LINE_LEN: usize = 64;
const TERMINATOR: u8 = b'\n';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Command {
    HandClose,
    HandOpen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Closed,
    Opened,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WireMessage {
    Command(Command),
    Status(Status),
    Telemetry([AdcReading; FINGER_COUNT]),
}

impl fmt::Display for WireMessage {
    /// The line body, without terminator.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WireMessage::Command(Command::HandClose) => f.write_str("HAND_CLOSE"),
            WireMessage::Command(Command::HandOpen) => f.write_str("HAND_OPEN"),
            WireMessage::Status(Status::Closed) => f.write_str("CLOSED"),
            WireMessage::Status(Status::Opened) => f.write_str("OPENED"),
            WireMessage::Telemetry(counts) => {
                f.write_str("P")?;
                for c in counts {
                    write!(f, " {}", c.counts())?;
                }
                Ok(())
            }
        }
    }
}

impl From<Command> for WireMessage {
    fn from(c: Command) -> Self {
        WireMessage::Command(c)
    }
}

impl From<Status> for WireMessage {
    fn from(s: Status) -> Self {
        WireMessage::Status(s)
    }
}

pub fn encode(msg: &WireMessage) -> Vec<u8> {
    let mut out = Vec::with_capacity(32);
    encode_into(msg, &mut out);
    out
}

pub fn encode_into(msg: &WireMessage, out: &mut Vec<u8>) {
    out.extend_from_slice(msg.to_string().as_bytes());
    out.push(TERMINATOR);
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameErrorKind {
    #[error("line is {0} bytes, limit is {MAX_LINE_LEN}")]
    TooLong(usize),
    #[error("unknown keyword")]
    UnknownKeyword,
    #[error("telemetry has {0} fields, expected {FINGER_COUNT}")]
    Arity(usize),
    #[error("telemetry field {index} is not a decimal count")]
    BadNumber { index: usize },
    #[error("telemetry field {index} is out of [0, {ADC_MAX}]")]
    OutOfRange { index: usize },
}

/// A line that could not be parsed, kept verbatim (without the LF).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("frame error ({kind}): {:?}", String::from_utf8_lossy(line))]
pub struct FrameError {
    pub line: Vec<u8>,
    pub kind: FrameErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Decoded<'a> {
    pub messages: Vec<WireMessage>,
    /// Bytes after the last LF; the start of an incomplete frame.
    pub suffix: &'a [u8],
    pub errors: Vec<FrameError>,
}

/// Splits `stream` into LF-terminated lines and parses each one.
/// Never fails: bad lines become [`FrameError`]s.
pub fn decode(stream: &[u8]) -> Decoded<'_> {
    let mut out = Decoded::default();
    let mut rest = stream;
    while let Some(pos) = rest.iter().position(|b| *b == TERMINATOR) {
        let line = &rest[..pos];
        match parse_line(line) {
            Ok(msg) => out.messages.push(msg),
            Err(kind) => out.errors.push(FrameError {
                line: line.to_vec(),
                kind,
            }),
        }
        rest = &rest[pos + 1..];
    }
    out.suffix = rest;
    out
}

fn parse_line(line: &[u8]) -> Result<WireMessage, FrameErrorKind> {
    if line.len() > MAX_LINE_LEN {
        return Err(FrameErrorKind::TooLong(line.len()));
    }
    match line {
        b"HAND_CLOSE" => Ok(Command::HandClose.into()),
        b"HAND_OPEN" => Ok(Command::HandOpen.into()),
        b"CLOSED" => Ok(Status::Closed.into()),
        b"OPENED" => Ok(Status::Opened.into()),
        [b'P', b' ', fields @ ..] => parse_telemetry(fields),
        b"P" => Err(FrameErrorKind::Arity(0)),
        _ => Err(FrameErrorKind::UnknownKeyword),
    }
}

fn parse_telemetry(fields: &[u8]) -> Result<WireMessage, FrameErrorKind> {
    let parts: Vec<&[u8]> = fields.split(|b| *b == b' ').collect();
    if parts.len() != FINGER_COUNT {
        return Err(FrameErrorKind::Arity(parts.len()));
    }
    let mut counts = [AdcReading::ZERO; FINGER_COUNT];
    for (index, (part, slot)) in parts.iter().zip(counts.iter_mut()).enumerate() {
        if part.is_empty() || !part.iter().all(u8::is_ascii_digit) {
            return Err(FrameErrorKind::BadNumber { index });
        }
        // digits only, so the sole parse failure is overflow
        let value: u32 = std::str::from_utf8(part)
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(u32::MAX);
        *slot = u16::try_from(value)
            .ok()
            .and_then(AdcReading::new)
            .ok_or(FrameErrorKind::OutOfRange { index })?;
    }
    Ok(WireMessage::Telemetry(counts))
}

/// Incremental decoder for one receiving end of the link. Owns only the
/// unconsumed tail of the byte stream.
#[derive(Debug, Clone, Default)]
pub struct StreamDecoder {
    pending: Vec<u8>,
}

impl StreamDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) -> (Vec<WireMessage>, Vec<FrameError>) {
        self.pending.extend_from_slice(bytes);
        let decoded = decode(&self.pending);
        let consumed = self.pending.len() - decoded.suffix.len();
        let result = (decoded.messages, decoded.errors);
        self.pending.drain(..consumed);
        result
    }

    pub fn pending(&self) -> &[u8] {
        &self.pending
    }
}
