//! Wire protocol and transports.
//!
//! [`codec`] defines the framed message format. [`local`] runs workers as
//! in-process threads with a deterministic event order, for tests and
//! single-machine runs. [`tcp`] runs a real coordinator and workers over
//! TCP sockets.
//!
//! Session protocol, per worker connection:
//!
//! ```text
//! worker                         coordinator
//!   | Hello{protocol_version}  ->  |
//!   | <-  HelloAck{worker_id}      |
//!   | <-  LoadProgram{source}      |
//!   | <-  Assign{task, expr, digest}
//!   | Result{task, value, printed} ->
//!   |            ...               |
//!   | <-  Shutdown{}               |
//! ```

pub mod codec;
pub mod local;
pub mod tcp;

use std::io;

use thiserror::Error;

use crate::depgraph::TaskId;
use crate::sched::{SchedError, SchedEvent, WorkerId};
use crate::value::Value;

pub use codec::{decode_frames, encode_frame, program_digest, FrameDecoder, Message, MAX_FRAME, PROTOCOL_VERSION};
pub use local::LocalTransport;
pub use tcp::{run_worker, serve_coordinator, ServeConfig, WorkerSummary, DEFAULT_PORT};

#[derive(Debug, Error)]
pub enum NetError {
    #[error("frame of {0} bytes exceeds the limit")]
    FrameTooLarge(u64),
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("protocol version mismatch: expected {expected}, got {got}")]
    VersionMismatch { expected: u32, got: u32 },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("peer reported an error: {0}")]
    Remote(String),
    #[error("connection closed")]
    Closed,
    #[error("timed out waiting for workers: {joined} of {needed} joined")]
    Timeout { joined: usize, needed: usize },
    #[error("lost connection to worker {0}")]
    WorkerLost(WorkerId),
    #[error("task {task} failed: {message}")]
    Task { task: TaskId, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Sched(#[from] SchedError),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
}

impl NetError {
    pub(crate) fn io(context: impl Into<String>) -> impl FnOnce(io::Error) -> NetError {
        let context = context.into();
        move |source| NetError::Io { context, source }
    }
}

/// Outcome of a completed distributed run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    pub value: Value,
    pub output: String,
    pub trace: Vec<SchedEvent>,
    pub workers: usize,
}
