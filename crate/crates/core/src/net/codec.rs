//! Length-prefixed JSON frames.
//!
//! ```text
//! +----------------------+------------------------------+
//! | length (u32, BE)     | payload (UTF-8 JSON object)  |
//! +----------------------+------------------------------+
//! ```
//!
//! The payload's first key is `"type"`, naming the message variant in
//! snake case; the variant's fields follow in declaration order. Values use
//! serde's external tagging (`{"int":5}`, `"unit"`, `{"tuple":[..]}`,
//! `{"matrix":{"rows":2,"cols":2,"cells":[..]}}`,
//! `{"summary":{"count":1,"digest":2}}`) and expressions likewise
//! (`{"lit":3}`, `{"call":{"callee":"f","args":[..]}}`, `{"const":<value>}`).
//! Encoding is byte-deterministic.

use serde::{Deserialize, Serialize};

use super::NetError;
use crate::depgraph::TaskId;
use crate::lang::Expr;
use crate::sched::WorkerId;
use crate::value::Value;

pub const PROTOCOL_VERSION: u32 = 1;

/// Largest accepted payload, in bytes.
pub const MAX_FRAME: usize = 0x7FFF_FFFF;

const PREFIX: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Hello { protocol_version: u32 },
    HelloAck { worker_id: WorkerId },
    LoadProgram { program_source: String },
    Assign { task_id: TaskId, expr: Expr, program_digest: u64 },
    Result { task_id: TaskId, value: Value, printed: String },
    Shutdown {},
    ProtoError { message: String },
}

impl Message {
    pub fn variant(&self) -> &'static str {
        match self {
            Message::Hello { .. } => "hello",
            Message::HelloAck { .. } => "hello_ack",
            Message::LoadProgram { .. } => "load_program",
            Message::Assign { .. } => "assign",
            Message::Result { .. } => "result",
            Message::Shutdown {} => "shutdown",
            Message::ProtoError { .. } => "proto_error",
        }
    }
}

/// 64-bit FNV-1a over the program source bytes.
pub fn program_digest(source: &str) -> u64 {
    source
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325, |hash, byte| (hash ^ u64::from(byte)).wrapping_mul(0x0000_0100_0000_01b3))
}

pub fn encode_frame(msg: &Message) -> Result<Vec<u8>, NetError> {
    let payload = serde_json::to_vec(msg).map_err(|e| NetError::Malformed(e.to_string()))?;
    if payload.len() > MAX_FRAME {
        return Err(NetError::FrameTooLarge(payload.len() as u64));
    }
    let mut frame = Vec::with_capacity(PREFIX + payload.len());
    frame.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    frame.extend_from_slice(&payload);
    Ok(frame)
}

/// Decodes every complete frame at the front of `buffer`. Returns the
/// messages and the number of bytes consumed; the rest is an incomplete
/// frame to be retried once more bytes arrive.
pub fn decode_frames(buffer: &[u8]) -> Result<(Vec<Message>, usize), NetError> {
    let mut messages = Vec::new();
    let mut at = 0;
    while let Some((msg, used)) = decode_one(&buffer[at..])? {
        messages.push(msg);
        at += used;
    }
    Ok((messages, at))
}

fn decode_one(buffer: &[u8]) -> Result<Option<(Message, usize)>, NetError> {
    let Some(prefix) = buffer.get(..PREFIX) else {
        return Ok(None);
    };
    let len = u32::from_be_bytes(prefix.try_into().expect("4 bytes")) as usize;
    if len > MAX_FRAME {
        return Err(NetError::FrameTooLarge(len as u64));
    }
    let Some(payload) = buffer.get(PREFIX..PREFIX + len) else {
        return Ok(None);
    };
    let msg = serde_json::from_slice(payload).map_err(|e| NetError::Malformed(e.to_string()))?;
    Ok(Some((msg, PREFIX + len)))
}

/// Incremental decoder for a byte stream that arrives in arbitrary chunks.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
}

impl FrameDecoder {
    pub fn new() -> FrameDecoder {
        FrameDecoder::default()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// Next complete message, if one is buffered.
    pub fn next_message(&mut self) -> Result<Option<Message>, NetError> {
        match decode_one(&self.buf)? {
            Some((msg, used)) => {
                self.buf.drain(..used);
                Ok(Some(msg))
            }
            None => Ok(None),
        }
    }

    pub fn buffered(&self) -> usize {
        self.buf.len()
    }
}
