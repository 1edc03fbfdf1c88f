//! Greedy input-ready scheduler.
//!
//! The coordinator owns one [`Scheduler`] and feeds it events: worker
//! joins and task results. After each event the scheduler pairs ready tasks
//! with idle workers (lowest task id to lowest worker id) and hands back the
//! assignments to send. Assignments are self-contained: every variable in
//! the task's expression is replaced by its already computed value, so
//! workers keep no state between tasks.
//!
//! Statements whose right-hand side contains no call at all are folded by
//! the coordinator itself at dispatch time. They show up in the trace as
//! dispatched to and completed by [`Executor::Coordinator`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depgraph::{DepGraph, TaskId};
use crate::interp::{Env, EvalError, Interpreter};
use crate::lang::{Expr, Program, Purity};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WorkerId(pub u64);

impl fmt::Display for WorkerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w{}", self.0)
    }
}

/// Who runs a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Executor {
    Worker(WorkerId),
    Coordinator,
}

impl fmt::Display for Executor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Executor::Worker(w) => write!(f, "{w}"),
            Executor::Coordinator => f.write_str("coordinator"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskState {
    Blocked,
    Ready,
    Running(Executor),
    Done(Value),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkerSlot {
    Idle,
    Busy(TaskId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Dispatched { task: TaskId, executor: Executor },
    Completed { task: TaskId, executor: Executor },
    WorkerJoined(WorkerId),
    Finished,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::Dispatched { task, executor } => write!(f, "Dispatched({task}, {executor})"),
            EventKind::Completed { task, executor } => write!(f, "Completed({task}, {executor})"),
            EventKind::WorkerJoined(w) => write!(f, "WorkerJoined({w})"),
            EventKind::Finished => f.write_str("Finished"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SchedEvent {
    pub seq: u64,
    pub kind: EventKind,
}

/// Work to send to one worker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub task: TaskId,
    pub worker: WorkerId,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchedError {
    #[error("worker {0} is already registered")]
    DuplicateWorker(WorkerId),
    #[error("unknown worker {0}")]
    UnknownWorker(WorkerId),
    #[error("protocol error: result for {task} from {worker}, but {task} is {state}")]
    NotRunning { task: TaskId, worker: WorkerId, state: String },
    #[error("protocol error: no task {0}")]
    UnknownTask(TaskId),
    #[error("statement {task}: {source}")]
    Inline { task: TaskId, source: EvalError },
    #[error("scheduler invariant violated: {0}")]
    Invariant(String),
    #[error("run is not complete")]
    Incomplete,
}

pub struct Scheduler {
    graph: DepGraph,
    states: Vec<TaskState>,
    unmet: Vec<usize>,
    dependents: Vec<Vec<TaskId>>,
    ready: BTreeSet<TaskId>,
    values: BTreeMap<String, Value>,
    world_done: Option<usize>,
    workers: BTreeMap<WorkerId, WorkerSlot>,
    trace: Vec<SchedEvent>,
    output: String,
    done: usize,
    empty_program: Program,
}

impl Scheduler {
    pub fn new(graph: DepGraph) -> Scheduler {
        let n = graph.len();
        let unmet: Vec<usize> = graph.nodes.iter().map(|node| node.sources().len()).collect();
        let dependents = graph.dependents();
        let mut sched = Scheduler {
            graph,
            states: vec![TaskState::Blocked; n],
            unmet,
            dependents,
            ready: BTreeSet::new(),
            values: BTreeMap::new(),
            world_done: None,
            workers: BTreeMap::new(),
            trace: Vec::new(),
            output: String::new(),
            done: 0,
            empty_program: Program::new(Vec::new(), BTreeSet::new()),
        };
        for i in 0..n {
            if sched.unmet[i] == 0 {
                sched.promote(TaskId(i));
            }
        }
        if n == 0 {
            sched.push(EventKind::Finished);
        }
        sched
    }

    pub fn graph(&self) -> &DepGraph {
        &self.graph
    }

    pub fn state(&self, task: TaskId) -> &TaskState {
        &self.states[task.0]
    }

    pub fn trace(&self) -> &[SchedEvent] {
        &self.trace
    }

    pub fn output(&self) -> &str {
        &self.output
    }

    pub fn ready_tasks(&self) -> impl Iterator<Item = TaskId> + '_ {
        self.ready.iter().copied()
    }

    pub fn workers(&self) -> impl Iterator<Item = (WorkerId, WorkerSlot)> + '_ {
        self.workers.iter().map(|(w, s)| (*w, *s))
    }

    pub fn worker_count(&self) -> usize {
        self.workers.len()
    }

    /// Index into the world chain of the last completed effectful task.
    pub fn world_done(&self) -> Option<usize> {
        self.world_done
    }

    /// Value bound to `name` by a completed statement.
    pub fn binding(&self, name: &str) -> Option<&Value> {
        self.values.get(name)
    }

    pub fn running_on_workers(&self) -> usize {
        self.workers.values().filter(|s| matches!(s, WorkerSlot::Busy(_))).count()
    }

    pub fn is_complete(&self) -> bool {
        self.done == self.graph.len()
    }

    /// Value of the last statement and all printed text.
    pub fn final_result(&self) -> Result<(Value, String), SchedError> {
        if !self.is_complete() {
            return Err(SchedError::Incomplete);
        }
        let value = match self.states.last() {
            Some(TaskState::Done(v)) => v.clone(),
            Some(_) => return Err(SchedError::Invariant("last task not done".into())),
            None => Value::Unit,
        };
        Ok((value, self.output.clone()))
    }

    pub fn worker_joined(&mut self, worker: WorkerId) -> Result<Vec<Assignment>, SchedError> {
        if self.workers.contains_key(&worker) {
            return Err(SchedError::DuplicateWorker(worker));
        }
        self.workers.insert(worker, WorkerSlot::Idle);
        self.push(EventKind::WorkerJoined(worker));
        self.dispatch()
    }

    pub fn task_completed(
        &mut self,
        worker: WorkerId,
        task: TaskId,
        value: Value,
        printed: &str,
    ) -> Result<Vec<Assignment>, SchedError> {
        let state = self.states.get(task.0).ok_or(SchedError::UnknownTask(task))?;
        if *state != TaskState::Running(Executor::Worker(worker))
            || self.workers.get(&worker) != Some(&WorkerSlot::Busy(task))
        {
            return Err(SchedError::NotRunning { task, worker, state: describe(state) });
        }
        self.workers.insert(worker, WorkerSlot::Idle);
        self.complete(task, Executor::Worker(worker), value, printed)?;
        self.dispatch()
    }

    /// Pairs ready tasks with idle workers until one side runs out, and
    /// folds ready call-free tasks in place.
    pub fn dispatch(&mut self) -> Result<Vec<Assignment>, SchedError> {
        let mut out = Vec::new();
        loop {
            let shippable: Vec<TaskId> = self.ready.iter().copied().filter(|t| !self.is_inline(*t)).collect();
            let idle: Vec<WorkerId> =
                self.workers.iter().filter(|(_, s)| **s == WorkerSlot::Idle).map(|(w, _)| *w).collect();
            for (task, worker) in shippable.into_iter().zip(idle) {
                out.push(self.assign(task, worker)?);
            }
            let Some(task) = self.ready.iter().copied().find(|t| self.is_inline(*t)) else {
                return Ok(out);
            };
            self.fold_inline(task)?;
        }
    }

    fn is_inline(&self, task: TaskId) -> bool {
        !self.graph.node(task).rhs.has_call()
    }

    fn substituted(&self, task: TaskId) -> Result<Expr, SchedError> {
        let node = self.graph.node(task);
        for (_, name) in node.data_deps() {
            if !self.values.contains_key(name) {
                return Err(SchedError::Invariant(format!("{task} is ready but `{name}` has no value")));
            }
        }
        Ok(node.rhs.substitute(&|name| self.values.get(name).cloned()))
    }

    fn assign(&mut self, task: TaskId, worker: WorkerId) -> Result<Assignment, SchedError> {
        let expr = self.substituted(task)?;
        self.ready.remove(&task);
        self.states[task.0] = TaskState::Running(Executor::Worker(worker));
        self.workers.insert(worker, WorkerSlot::Busy(task));
        self.push(EventKind::Dispatched { task, executor: Executor::Worker(worker) });
        Ok(Assignment { task, worker, expr })
    }

    fn fold_inline(&mut self, task: TaskId) -> Result<(), SchedError> {
        let expr = self.substituted(task)?;
        self.ready.remove(&task);
        self.states[task.0] = TaskState::Running(Executor::Coordinator);
        self.push(EventKind::Dispatched { task, executor: Executor::Coordinator });
        let mut printed = String::new();
        let value = Interpreter::new(&self.empty_program)
            .eval(&Env::new(), &expr, &mut printed)
            .map_err(|source| SchedError::Inline { task, source })?;
        self.complete(task, Executor::Coordinator, value, &printed)
    }

    fn complete(&mut self, task: TaskId, executor: Executor, value: Value, printed: &str) -> Result<(), SchedError> {
        let node = self.graph.node(task);
        if node.purity == Purity::Effectful {
            let next = self.world_done.map_or(0, |i| i + 1);
            if self.graph.world_chain.get(next) != Some(&task) {
                return Err(SchedError::Invariant(format!("{task} completed out of world order")));
            }
            self.world_done = Some(next);
        }
        if let Some(name) = &node.binds {
            self.values.insert(name.clone(), value.clone());
        }
        self.output.push_str(printed);
        self.states[task.0] = TaskState::Done(value);
        self.done += 1;
        self.push(EventKind::Completed { task, executor });

        for i in 0..self.dependents[task.0].len() {
            let next = self.dependents[task.0][i];
            self.unmet[next.0] -= 1;
            if self.unmet[next.0] == 0 {
                self.promote(next);
            }
        }
        if self.is_complete() {
            self.push(EventKind::Finished);
        }
        Ok(())
    }

    fn promote(&mut self, task: TaskId) {
        self.states[task.0] = TaskState::Ready;
        self.ready.insert(task);
    }

    fn push(&mut self, kind: EventKind) {
        let seq = self.trace.len() as u64;
        log::trace!("event {seq}: {kind}");
        self.trace.push(SchedEvent { seq, kind });
    }
}

fn describe(state: &TaskState) -> String {
    match state {
        TaskState::Blocked => "blocked".into(),
        TaskState::Ready => "ready".into(),
        TaskState::Running(e) => format!("running on {e}"),
        TaskState::Done(_) => "done".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depgraph::build_graph;
    use crate::lang::load;

    const EXAMPLE: &str = "\
main :: IO ()
main = do
    x <- clean_files
    let y = complex_evaluation x
    z <- semantic_analysis
    print (y, z)
";

    fn sched(src: &str) -> Scheduler {
        let (program, symbols) = load(src).unwrap();
        Scheduler::new(build_graph(&program, "main", &symbols).unwrap())
    }

    fn kinds(s: &Scheduler) -> Vec<EventKind> {
        s.trace().iter().map(|e| e.kind).collect()
    }

    fn dispatched(task: usize, worker: u64) -> EventKind {
        EventKind::Dispatched { task: TaskId(task), executor: Executor::Worker(WorkerId(worker)) }
    }

    fn completed(task: usize, worker: u64) -> EventKind {
        EventKind::Completed { task: TaskId(task), executor: Executor::Worker(WorkerId(worker)) }
    }

    #[test]
    fn init_marks_example_source_ready() {
        let s = sched(EXAMPLE);
        assert_eq!(s.ready_tasks().collect::<Vec<_>>(), vec![TaskId(0)]);
        assert!(!s.is_complete());
        assert_eq!(s.final_result(), Err(SchedError::Incomplete));
    }

    #[test]
    fn empty_graph_is_complete() {
        let s = sched("main :: IO ()\nmain = do\n");
        assert!(s.is_complete());
        assert_eq!(s.final_result().unwrap(), (Value::Unit, String::new()));
        assert_eq!(kinds(&s), vec![EventKind::Finished]);
    }

    #[test]
    fn independent_lets_start_ready() {
        let s = sched("main :: IO ()\nmain = do\n    let a = checksum (genMatrix 1 2 2)\n    let b = checksum (genMatrix 2 2 2)\n    let c = checksum (genMatrix 3 2 2)\n    print (a, b, c)\n");
        assert_eq!(s.ready_tasks().collect::<Vec<_>>(), vec![TaskId(0), TaskId(1), TaskId(2)]);
    }

    #[test]
    fn join_dispatches_first_task() {
        let mut s = sched(EXAMPLE);
        let a = s.worker_joined(WorkerId(0)).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].task, TaskId(0));
        assert_eq!(kinds(&s), vec![EventKind::WorkerJoined(WorkerId(0)), dispatched(0, 0)]);
        assert_eq!(s.worker_joined(WorkerId(0)), Err(SchedError::DuplicateWorker(WorkerId(0))));
    }

    #[test]
    fn join_with_nothing_ready_stays_idle() {
        let mut s = sched(EXAMPLE);
        s.worker_joined(WorkerId(0)).unwrap();
        assert!(s.worker_joined(WorkerId(1)).unwrap().is_empty());
        assert_eq!(s.workers().collect::<Vec<_>>()[1], (WorkerId(1), WorkerSlot::Idle));
    }

    #[test]
    fn completion_fans_out_to_both_workers() {
        let mut s = sched(EXAMPLE);
        s.worker_joined(WorkerId(0)).unwrap();
        s.worker_joined(WorkerId(1)).unwrap();
        let summary = crate::kernels::clean_files();
        let a = s.task_completed(WorkerId(0), TaskId(0), Value::Summary(summary), "").unwrap();
        let pairs: Vec<_> = a.iter().map(|a| (a.task, a.worker)).collect();
        assert_eq!(pairs, vec![(TaskId(1), WorkerId(0)), (TaskId(2), WorkerId(1))]);
        assert_eq!(a[0].expr, Expr::call("complex_evaluation", vec![Expr::Const(Value::Summary(summary))]));
        let tail = &kinds(&s)[3..];
        assert_eq!(tail, &[completed(0, 0), dispatched(1, 0), dispatched(2, 1)]);
    }

    #[test]
    fn full_run_and_final_result() {
        let mut s = sched(EXAMPLE);
        s.worker_joined(WorkerId(0)).unwrap();
        s.task_completed(WorkerId(0), TaskId(0), Value::Summary(crate::kernels::clean_files()), "").unwrap();
        s.task_completed(WorkerId(0), TaskId(1), Value::Int(5), "").unwrap();
        s.task_completed(WorkerId(0), TaskId(2), Value::Int(7), "").unwrap();
        assert_eq!(s.world_done(), Some(1));
        let a = s.task_completed(WorkerId(0), TaskId(3), Value::Unit, "(5, 7)\n").unwrap();
        assert!(a.is_empty());
        assert!(s.is_complete());
        assert_eq!(kinds(&s).last(), Some(&EventKind::Finished));
        assert_eq!(s.final_result().unwrap(), (Value::Unit, "(5, 7)\n".into()));
    }

    #[test]
    fn protocol_errors() {
        let mut s = sched(EXAMPLE);
        s.worker_joined(WorkerId(0)).unwrap();
        s.worker_joined(WorkerId(1)).unwrap();
        let wrong_worker = s.task_completed(WorkerId(1), TaskId(0), Value::Unit, "");
        assert!(matches!(wrong_worker, Err(SchedError::NotRunning { .. })));
        s.task_completed(WorkerId(0), TaskId(0), Value::Summary(crate::kernels::clean_files()), "").unwrap();
        let again = s.task_completed(WorkerId(0), TaskId(0), Value::Unit, "");
        assert!(matches!(again, Err(SchedError::NotRunning { ref state, .. }) if state == "done"));
        assert!(matches!(s.task_completed(WorkerId(0), TaskId(9), Value::Unit, ""), Err(SchedError::UnknownTask(_))));
    }

    #[test]
    fn chain_never_runs_two_at_once() {
        let mut s = sched("main :: IO ()\nmain = do\n    let a = checksum (genMatrix 1 2 2)\n    let b = checksum (genMatrix a 2 2)\n    print b\n");
        for w in 0..3 {
            s.worker_joined(WorkerId(w)).unwrap();
        }
        assert_eq!(s.running_on_workers(), 1);
        s.task_completed(WorkerId(0), TaskId(0), Value::Int(3), "").unwrap();
        assert_eq!(s.running_on_workers(), 1);
    }

    #[test]
    fn dispatch_bounded_by_workers() {
        let body: String = (0..4).map(|i| format!("    let a{i} = checksum (genMatrix {i} 2 2)\n")).collect();
        let mut s = sched(&format!("main :: IO ()\nmain = do\n{body}    print (a0 + a1 + a2 + a3)\n"));
        s.worker_joined(WorkerId(0)).unwrap();
        s.worker_joined(WorkerId(1)).unwrap();
        let n = kinds(&s).iter().filter(|k| matches!(k, EventKind::Dispatched { .. })).count();
        assert_eq!(n, 2);
    }

    #[test]
    fn call_free_statements_fold_on_coordinator() {
        let mut s = sched("main :: IO ()\nmain = do\n    let a = 2 + 3\n    let b = (a, a * 2)\n    print b\n");
        let a = s.worker_joined(WorkerId(0)).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].task, TaskId(2));
        let b = Value::Tuple(vec![Value::Int(5), Value::Int(10)]);
        assert_eq!(a[0].expr, Expr::call("print", vec![Expr::Const(b)]));
        let coordinator = |t| EventKind::Dispatched { task: TaskId(t), executor: Executor::Coordinator };
        assert_eq!(kinds(&s)[1], coordinator(0));
        assert_eq!(kinds(&s)[3], coordinator(1));
    }

    #[test]
    fn inline_evaluation_errors_surface() {
        let mut s = sched("main :: IO ()\nmain = do\n    let a = (1, 2)\n    let b = a + 1\n    print b\n");
        assert!(matches!(s.worker_joined(WorkerId(0)), Err(SchedError::Inline { task: TaskId(1), .. })));
    }
}
