//! In-process transport.
//!
//! Workers are OS threads that evaluate tasks in parallel. The coordinator
//! consumes their results strictly in dispatch order, so for a fixed
//! program and worker count the event trace is identical on every run, no
//! matter which thread happens to finish first.

use std::collections::VecDeque;
use std::sync::mpsc;
use std::thread;

use super::{NetError, RunReport};
use crate::depgraph::TaskId;
use crate::interp::{eval_task, EvalError};
use crate::lang::{Expr, Program};
use crate::sched::{Assignment, Scheduler, WorkerId};
use crate::value::Value;

struct Job {
    task: TaskId,
    expr: Expr,
}

type JobResult = Result<(Value, String), EvalError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalTransport {
    workers: usize,
}

impl LocalTransport {
    pub fn new(workers: usize) -> Result<LocalTransport, NetError> {
        if workers == 0 {
            return Err(NetError::Config("local transport needs at least one worker".into()));
        }
        Ok(LocalTransport { workers })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn run(&self, program: &Program, mut sched: Scheduler) -> Result<RunReport, NetError> {
        thread::scope(|scope| {
            let mut jobs = Vec::with_capacity(self.workers);
            let mut results = Vec::with_capacity(self.workers);
            for w in 0..self.workers {
                let (job_tx, job_rx) = mpsc::channel::<Job>();
                let (res_tx, res_rx) = mpsc::channel::<JobResult>();
                thread::Builder::new()
                    .name(format!("apar-local-w{w}"))
                    .spawn_scoped(scope, move || {
                        for job in job_rx {
                            log::trace!("w{w} evaluating {}", job.task);
                            if res_tx.send(eval_task(program, &job.expr)).is_err() {
                                break;
                            }
                        }
                    })
                    .map_err(NetError::io("spawning local worker"))?;
                jobs.push(job_tx);
                results.push(res_rx);
            }

            let mut in_flight: VecDeque<(WorkerId, TaskId)> = VecDeque::new();
            let send = |batch: Vec<Assignment>, in_flight: &mut VecDeque<(WorkerId, TaskId)>| {
                for a in batch {
                    jobs[a.worker.0 as usize]
                        .send(Job { task: a.task, expr: a.expr })
                        .map_err(|_| NetError::WorkerLost(a.worker))?;
                    in_flight.push_back((a.worker, a.task));
                }
                Ok::<(), NetError>(())
            };

            for w in 0..self.workers {
                let batch = sched.worker_joined(WorkerId(w as u64))?;
                send(batch, &mut in_flight)?;
            }
            while !sched.is_complete() {
                let Some((worker, task)) = in_flight.pop_front() else {
                    return Err(NetError::Protocol("no task running but the run is incomplete".into()));
                };
                let result = results[worker.0 as usize].recv().map_err(|_| NetError::WorkerLost(worker))?;
                let (value, printed) = result.map_err(|e| NetError::Task { task, message: e.to_string() })?;
                let batch = sched.task_completed(worker, task, value, &printed)?;
                send(batch, &mut in_flight)?;
            }

            let (value, output) = sched.final_result()?;
            Ok(RunReport { value, output, trace: sched.trace().to_vec(), workers: self.workers })
        })
    }
}
