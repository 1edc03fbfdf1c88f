//! Negative controls: the shared trace checker must reject broken traces.

mod common;

use apar_core::sched::{EventKind, Executor, SchedEvent};
use apar_core::{compile, TaskId, WorkerId};
use rand::rngs::StdRng;
use rand::SeedableRng;

fn renumber(kinds: Vec<EventKind>) -> Vec<SchedEvent> {
    kinds.into_iter().enumerate().map(|(i, kind)| SchedEvent { seq: i as u64, kind }).collect()
}

fn example() -> (common::Generated, Vec<EventKind>) {
    let g = common::Generated {
        source: common::EXAMPLE.to_string(),
        effectful: vec![true, false, true, true],
        data_deps: vec![[].into(), [0].into(), [].into(), [1, 2].into()],
        inline: vec![false; 4],
    };
    let report = compile(common::EXAMPLE, "main").unwrap().run_local(2).unwrap();
    (g, report.trace.iter().map(|e| e.kind).collect())
}

#[test]
fn accepts_real_trace() {
    let (g, kinds) = example();
    common::check_trace(&g, &renumber(kinds), 2).unwrap();
}

#[test]
fn rejects_dispatch_before_dependency() {
    let (g, mut kinds) = example();
    let done0 = kinds.iter().position(|k| matches!(k, EventKind::Completed { task: TaskId(0), .. })).unwrap();
    let disp1 = kinds.iter().position(|k| matches!(k, EventKind::Dispatched { task: TaskId(1), .. })).unwrap();
    kinds.swap(done0, disp1);
    assert!(common::check_trace(&g, &renumber(kinds), 2).is_err());
}

#[test]
fn rejects_idle_worker_with_ready_task() {
    let (g, kinds) = example();
    // Same trace claimed for three workers: w2 never joins, so pretend it did.
    let mut with_extra = vec![EventKind::WorkerJoined(WorkerId(7))];
    with_extra.extend(kinds);
    assert!(common::check_trace(&g, &renumber(with_extra), 3).unwrap_err().contains("idle"));
}

#[test]
fn rejects_too_many_running() {
    let (g, kinds) = example();
    assert!(common::check_trace(&g, &renumber(kinds), 1).is_err());
}

#[test]
fn rejects_duplicate_completion_and_missing_finish() {
    let (g, mut kinds) = example();
    let last = kinds.pop().unwrap();
    assert_eq!(last, EventKind::Finished);
    assert!(common::check_trace(&g, &renumber(kinds.clone()), 2).is_err());
    let dup = kinds.iter().copied().find(|k| matches!(k, EventKind::Completed { .. })).unwrap();
    kinds.push(dup);
    kinds.push(EventKind::Finished);
    assert!(common::check_trace(&g, &renumber(kinds), 2).is_err());
}

#[test]
fn rejects_shipping_call_free_task() {
    let mut rng = StdRng::seed_from_u64(3);
    let g = loop {
        let g = common::random_program(&mut rng, 1);
        if g.inline.iter().any(|&b| b) {
            break g;
        }
    };
    let trace = compile(&g.source, "main").unwrap().run_local(2).unwrap().trace;
    common::check_trace(&g, &trace, 2).unwrap();
    let t = g.inline.iter().position(|&b| b).unwrap();
    let kinds = trace
        .iter()
        .map(|e| match e.kind {
            EventKind::Dispatched { task, .. } if task.0 == t => {
                EventKind::Dispatched { task, executor: Executor::Worker(WorkerId(0)) }
            }
            other => other,
        })
        .collect();
    assert!(common::check_trace(&g, &renumber(kinds), 2).is_err());
}
