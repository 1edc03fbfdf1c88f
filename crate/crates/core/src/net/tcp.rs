//! TCP coordinator and worker.
//!
//! One reader thread per connection turns frames into events on a single
//! queue; the coordinator loop is the only owner of the scheduler. Worker
//! ids follow connection order. A lost worker aborts the run.

use std::collections::BTreeMap;
use std::io::{ErrorKind, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::{Duration, Instant};

use super::codec::{encode_frame, program_digest, FrameDecoder, Message, PROTOCOL_VERSION};
use super::{NetError, RunReport};
use crate::interp::eval_task;
use crate::lang::{self, check_task_expr};
use crate::sched::{Assignment, Scheduler, WorkerId};

pub const DEFAULT_PORT: u16 = 7401;

#[derive(Debug, Clone)]
pub struct ServeConfig {
    /// Workers that must join before the first dispatch.
    pub min_workers: usize,
    /// How long to wait for a worker's `Hello` and for the join barrier.
    pub handshake_timeout: Duration,
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig { min_workers: 1, handshake_timeout: Duration::from_secs(30) }
    }
}

pub(crate) fn write_message(stream: &mut TcpStream, msg: &Message) -> Result<(), NetError> {
    let frame = encode_frame(msg)?;
    stream.write_all(&frame).map_err(NetError::io(format!("sending {}", msg.variant())))
}

/// Reads the next message. `Ok(None)` means the peer closed the stream
/// cleanly between frames.
pub(crate) fn read_message(stream: &mut TcpStream, decoder: &mut FrameDecoder) -> Result<Option<Message>, NetError> {
    let mut chunk = [0u8; 64 * 1024];
    loop {
        if let Some(msg) = decoder.next_message()? {
            return Ok(Some(msg));
        }
        let n = match stream.read(&mut chunk) {
            Ok(n) => n,
            Err(e) if e.kind() == ErrorKind::Interrupted => continue,
            Err(e) => return Err(NetError::Io { context: "reading frame".into(), source: e }),
        };
        if n == 0 {
            return if decoder.buffered() == 0 { Ok(None) } else { Err(NetError::Closed) };
        }
        decoder.push(&chunk[..n]);
    }
}

enum Event {
    Joined(WorkerId, TcpStream),
    Message(WorkerId, Message),
    Lost(WorkerId, String),
    Rejected(WorkerId, String),
}

fn handle_connection(
    id: WorkerId,
    mut stream: TcpStream,
    source: Arc<str>,
    timeout: Duration,
    events: mpsc::Sender<Event>,
) {
    let mut decoder = FrameDecoder::new();
    let handshake = (|| {
        stream.set_read_timeout(Some(timeout)).map_err(NetError::io("configuring socket"))?;
        match read_message(&mut stream, &mut decoder)? {
            Some(Message::Hello { protocol_version }) if protocol_version == PROTOCOL_VERSION => {}
            Some(Message::Hello { protocol_version }) => {
                let err = NetError::VersionMismatch { expected: PROTOCOL_VERSION, got: protocol_version };
                let _ = write_message(&mut stream, &Message::ProtoError { message: err.to_string() });
                return Err(err);
            }
            Some(other) => return Err(NetError::Protocol(format!("expected hello, got {}", other.variant()))),
            None => return Err(NetError::Closed),
        }
        write_message(&mut stream, &Message::HelloAck { worker_id: id })?;
        write_message(&mut stream, &Message::LoadProgram { program_source: source.to_string() })?;
        stream.set_read_timeout(None).map_err(NetError::io("configuring socket"))?;
        stream.try_clone().map_err(NetError::io("cloning socket"))
    })();
    let writer = match handshake {
        Ok(w) => w,
        Err(e) => {
            let _ = events.send(Event::Rejected(id, e.to_string()));
            return;
        }
    };
    if events.send(Event::Joined(id, writer)).is_err() {
        return;
    }
    loop {
        let event = match read_message(&mut stream, &mut decoder) {
            Ok(Some(msg)) => Event::Message(id, msg),
            Ok(None) => Event::Lost(id, "connection closed".into()),
            Err(e) => Event::Lost(id, e.to_string()),
        };
        let last = matches!(event, Event::Lost(..));
        if events.send(event).is_err() || last {
            return;
        }
    }
}

fn accept_loop(
    listener: TcpListener,
    source: Arc<str>,
    timeout: Duration,
    events: mpsc::Sender<Event>,
    stop: Arc<AtomicBool>,
) {
    let mut next_id = 0u64;
    while !stop.load(Ordering::Relaxed) {
        match listener.accept() {
            Ok((stream, peer)) => {
                let id = WorkerId(next_id);
                next_id += 1;
                log::info!("connection from {peer} assigned {id}");
                if stream.set_nonblocking(false).is_err() {
                    continue;
                }
                let _ = stream.set_nodelay(true);
                let (source, events) = (source.clone(), events.clone());
                thread::spawn(move || handle_connection(id, stream, source, timeout, events));
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(2)),
            Err(e) => {
                log::warn!("accept failed: {e}");
                thread::sleep(Duration::from_millis(20));
            }
        }
    }
}

struct StopOnDrop(Arc<AtomicBool>);

impl Drop for StopOnDrop {
    fn drop(&mut self) {
        self.0.store(true, Ordering::Relaxed);
    }
}

/// Runs the coordinator on an already bound listener until the scheduler
/// completes, then shuts every worker down.
pub fn serve_coordinator(
    listener: TcpListener,
    config: &ServeConfig,
    program_source: &str,
    mut sched: Scheduler,
) -> Result<RunReport, NetError> {
    if config.min_workers == 0 {
        return Err(NetError::Config("min_workers must be at least 1".into()));
    }
    listener.set_nonblocking(true).map_err(NetError::io("configuring listener"))?;
    let digest = program_digest(program_source);
    let (tx, rx) = mpsc::channel();
    let stop = Arc::new(AtomicBool::new(false));
    let _stop_guard = StopOnDrop(stop.clone());
    {
        let source: Arc<str> = Arc::from(program_source);
        let timeout = config.handshake_timeout;
        let stop = stop.clone();
        thread::spawn(move || accept_loop(listener, source, timeout, tx, stop));
    }

    let mut writers: BTreeMap<WorkerId, TcpStream> = BTreeMap::new();
    let mut waiting: Vec<WorkerId> = Vec::new();
    let mut started = false;
    let deadline = Instant::now() + config.handshake_timeout;

    let result = (|| {
        // The barrier applies even when there is nothing to run, so every
        // joined worker is released with a shutdown.
        while !started || !sched.is_complete() {
            let event = if started {
                rx.recv().map_err(|_| NetError::Protocol("event queue closed".into()))?
            } else {
                let left = deadline.saturating_duration_since(Instant::now());
                rx.recv_timeout(left)
                    .map_err(|_| NetError::Timeout { joined: waiting.len(), needed: config.min_workers })?
            };
            match event {
                Event::Joined(id, stream) => {
                    log::info!("{id} joined");
                    writers.insert(id, stream);
                    if started {
                        let batch = sched.worker_joined(id)?;
                        send_assignments(&mut writers, batch, digest)?;
                    } else {
                        waiting.push(id);
                        if waiting.len() >= config.min_workers {
                            started = true;
                            waiting.sort();
                            for id in waiting.drain(..) {
                                let batch = sched.worker_joined(id)?;
                                send_assignments(&mut writers, batch, digest)?;
                            }
                        }
                    }
                }
                Event::Message(id, Message::Result { task_id, value, printed }) => {
                    let batch = sched.task_completed(id, task_id, value, &printed)?;
                    send_assignments(&mut writers, batch, digest)?;
                }
                Event::Message(id, Message::ProtoError { message }) => {
                    return Err(NetError::Remote(format!("{id}: {message}")));
                }
                Event::Message(id, other) => {
                    return Err(NetError::Protocol(format!("unexpected {} from {id}", other.variant())));
                }
                Event::Lost(id, reason) => {
                    log::error!("{id} lost: {reason}");
                    return Err(NetError::WorkerLost(id));
                }
                Event::Rejected(id, reason) => log::warn!("rejected {id}: {reason}"),
            }
        }
        Ok(())
    })();

    for stream in writers.values_mut() {
        let _ = write_message(stream, &Message::Shutdown {});
    }
    result?;
    let (value, output) = sched.final_result()?;
    Ok(RunReport { value, output, trace: sched.trace().to_vec(), workers: writers.len() })
}

fn send_assignments(
    writers: &mut BTreeMap<WorkerId, TcpStream>,
    batch: Vec<Assignment>,
    digest: u64,
) -> Result<(), NetError> {
    for a in batch {
        let stream = writers.get_mut(&a.worker).ok_or(NetError::WorkerLost(a.worker))?;
        let msg = Message::Assign { task_id: a.task, expr: a.expr, program_digest: digest };
        write_message(stream, &msg).map_err(|_| NetError::WorkerLost(a.worker))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkerSummary {
    pub worker_id: WorkerId,
    pub tasks_run: usize,
}

/// Connects to a coordinator and serves tasks until told to shut down.
pub fn run_worker(addr: impl ToSocketAddrs) -> Result<WorkerSummary, NetError> {
    let mut stream = TcpStream::connect(addr).map_err(NetError::io("connecting to coordinator"))?;
    let _ = stream.set_nodelay(true);
    let mut decoder = FrameDecoder::new();
    write_message(&mut stream, &Message::Hello { protocol_version: PROTOCOL_VERSION })?;

    let mut next = |stream: &mut TcpStream| -> Result<Message, NetError> {
        match read_message(stream, &mut decoder)? {
            Some(Message::ProtoError { message }) => Err(NetError::Remote(message)),
            Some(msg) => Ok(msg),
            None => Err(NetError::Closed),
        }
    };

    let worker_id = match next(&mut stream)? {
        Message::HelloAck { worker_id } => worker_id,
        other => return Err(NetError::Protocol(format!("expected hello_ack, got {}", other.variant()))),
    };
    let source = match next(&mut stream)? {
        Message::LoadProgram { program_source } => program_source,
        other => return Err(NetError::Protocol(format!("expected load_program, got {}", other.variant()))),
    };
    let digest = program_digest(&source);
    let (program, symbols) = match lang::load(&source) {
        Ok(loaded) => loaded,
        Err(e) => {
            let message = format!("cannot load program: {e}");
            let _ = write_message(&mut stream, &Message::ProtoError { message: message.clone() });
            return Err(NetError::Protocol(message));
        }
    };
    log::info!("worker {worker_id} ready");

    let mut tasks_run = 0;
    loop {
        match next(&mut stream)? {
            Message::Shutdown {} => return Ok(WorkerSummary { worker_id, tasks_run }),
            Message::Assign { task_id, expr, program_digest } => {
                let outcome = if program_digest != digest {
                    Err(format!("program digest {program_digest:#x} does not match loaded {digest:#x}"))
                } else {
                    check_task_expr(&symbols, &expr)
                        .map_err(|e| e.to_string())
                        .and_then(|()| eval_task(&program, &expr).map_err(|e| e.to_string()))
                };
                match outcome {
                    Ok((value, printed)) => {
                        write_message(&mut stream, &Message::Result { task_id, value, printed })?;
                        tasks_run += 1;
                    }
                    Err(message) => {
                        let report = Message::ProtoError { message: format!("task {task_id}: {message}") };
                        let _ = write_message(&mut stream, &report);
                        return Err(NetError::Task { task: task_id, message });
                    }
                }
            }
            other => return Err(NetError::Protocol(format!("unexpected {} from coordinator", other.variant()))),
        }
    }
}
