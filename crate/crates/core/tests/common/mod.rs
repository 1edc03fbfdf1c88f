//! Shared fixtures: a program suite, a random-DAG program generator and an
//! independent checker for scheduler traces.

#![allow(dead_code)]

use std::collections::BTreeSet;

use apar_core::sched::{EventKind, Executor, SchedEvent};
use rand::Rng;

pub const EXAMPLE: &str = "\
main :: IO ()
main = do
    x <- clean_files
    let y = complex_evaluation x
    z <- semantic_analysis
    print (y, z)
";

const HELPERS: &str = "\
fib :: Int -> Int
fib n = if n then (if n - 1 then fib (n - 1) + fib (n - 2) else 1) else 0
sq :: Int -> Int
sq x = x * x + 1
count :: Int -> Int
count n = if n then 1 + count (n - 1) else 0
prodSum :: Matrix -> Matrix -> Int
prodSum a b = checksum (matMul a b)
echo :: Int -> IO Int
echo n = do
    print n
    semantic_analysis
tick :: Int -> IO ()
tick n = print (n * 10)
";

fn with_helpers(main_body: &str) -> String {
    format!("{HELPERS}main :: IO ()\nmain = do\n{main_body}")
}

/// Named programs covering chains, diamonds, fans, mixed effects and
/// recursion inside user-defined callees.
pub fn suite() -> Vec<(&'static str, String)> {
    let fan: String = (1..=6)
        .map(|i| format!("    let c{i} = checksum (matMul (genMatrix {i} 12 12) (genMatrix {} 12 12))\n", 1000 + i))
        .collect();
    vec![
        ("example", EXAMPLE.to_string()),
        ("empty", "main :: IO ()\nmain = do\n".to_string()),
        (
            "chain",
            with_helpers(
                "    let a = genMatrix 3 10 10\n    let b = matMul a a\n    let c = matMul b a\n    let d = checksum c\n    print d\n",
            ),
        ),
        (
            "diamond",
            with_helpers(
                "    let a = genMatrix 5 9 9\n    let l = checksum (matMul a a)\n    let r = prodSum a (genMatrix 6 9 9)\n    let j = l - r\n    print (l, r, j)\n",
            ),
        ),
        ("fan", with_helpers(&format!("{fan}    let total = c1 + c2 + c3 + c4 + c5 + c6\n    print total\n"))),
        (
            "mixed",
            with_helpers(
                "    print 1\n    let a = sq 4\n    b <- echo a\n    let c = fib 12\n    tick c\n    d <- semantic_analysis\n    print (a + b + c + d)\n",
            ),
        ),
        (
            "recursion",
            with_helpers("    let a = fib 18\n    let b = count 3000\n    let c = fib 15\n    print (a, b, c)\n"),
        ),
        (
            "effects-only",
            with_helpers("    print 3\n    tick 4\n    u <- echo 5\n    x <- clean_files\n    print x\n    print u\n"),
        ),
        ("pure-only", with_helpers("    let a = 2\n    let b = a * 21\n    let c = sq b\n    let d = (a, b, c)\n")),
        (
            "matrix-values",
            with_helpers(
                "    let m = genMatrix 7 4 6\n    let n = genMatrix 8 6 3\n    let p = matMul m n\n    print p\n    let s = checksum p\n    print (s, ())\n",
            ),
        ),
        (
            "interleaved",
            with_helpers(
                "    a <- semantic_analysis\n    let b = fib a\n    print b\n    let c = sq (a + b)\n    let d = count c\n    e <- echo d\n    let f = if e - 7 then 0 else fib 10\n    print (b, c, d, e, f)\n",
            ),
        ),
        (
            "wide-diamond",
            with_helpers(
                "    x <- clean_files\n    let s = complex_evaluation x\n    let p1 = sq s\n    let p2 = fib 14\n    let p3 = checksum (genMatrix s 5 5)\n    let p4 = prodSum (genMatrix 1 5 5) (genMatrix 2 5 5)\n    let t = p1 + p2 + p3 + p4\n    print t\n",
            ),
        ),
    ]
}

/// A generated entry block together with its intended structure, tracked
/// independently of the library's own graph builder.
#[derive(Debug, Clone)]
pub struct Generated {
    pub source: String,
    pub effectful: Vec<bool>,
    /// Statement indices whose binders each statement reads.
    pub data_deps: Vec<BTreeSet<usize>>,
    /// Statements with no function call, which the scheduler folds in place.
    pub inline: Vec<bool>,
}

impl Generated {
    pub fn len(&self) -> usize {
        self.effectful.len()
    }

    /// Effectful statements in source order.
    pub fn effect_order(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.effectful[i]).collect()
    }

    /// Dependencies including the effect chain.
    pub fn all_deps(&self, i: usize) -> BTreeSet<usize> {
        let mut deps = self.data_deps[i].clone();
        if self.effectful[i] {
            if let Some(prev) = (0..i).rev().find(|&j| self.effectful[j]) {
                deps.insert(prev);
            }
        }
        deps
    }
}

fn int_expr(rng: &mut impl Rng, ints: &[(usize, String)], deps: &mut BTreeSet<usize>) -> String {
    let mut terms = vec![rng.gen_range(0..20).to_string()];
    for _ in 0..rng.gen_range(0..=2usize) {
        if ints.is_empty() {
            break;
        }
        let (stmt, name) = &ints[rng.gen_range(0..ints.len())];
        deps.insert(*stmt);
        terms.push(name.clone());
    }
    terms.join(" + ")
}

/// Random entry block with `min_effects` or more effectful statements.
pub fn random_program(rng: &mut impl Rng, min_effects: usize) -> Generated {
    let n = rng.gen_range(min_effects.max(4)..=14);
    let mut forced: BTreeSet<usize> = BTreeSet::new();
    while forced.len() < min_effects {
        forced.insert(rng.gen_range(0..n - 1));
    }
    let mut body = String::new();
    let mut ints: Vec<(usize, String)> = Vec::new();
    let mut g = Generated { source: String::new(), effectful: Vec::new(), data_deps: Vec::new(), inline: Vec::new() };
    for i in 0..n - 1 {
        let mut deps = BTreeSet::new();
        let name = format!("v{i}");
        let effectful = forced.contains(&i) || rng.gen_bool(0.3);
        let (line, binds_int, inline) = if effectful {
            match rng.gen_range(0..4) {
                0 => (format!("{name} <- semantic_analysis"), true, false),
                1 => (format!("print ({})", int_expr(rng, &ints, &mut deps)), false, false),
                2 => (format!("{name} <- echo ({})", int_expr(rng, &ints, &mut deps)), true, false),
                _ => (format!("tick ({})", int_expr(rng, &ints, &mut deps)), false, false),
            }
        } else {
            match rng.gen_range(0..4) {
                0 => (format!("let {name} = {}", int_expr(rng, &ints, &mut deps)), true, true),
                1 => (format!("let {name} = sq ({})", int_expr(rng, &ints, &mut deps)), true, false),
                2 => (
                    format!("let {name} = checksum (genMatrix ({}) 3 3)", int_expr(rng, &ints, &mut deps)),
                    true,
                    false,
                ),
                _ => (format!("let {name} = fib {}", rng.gen_range(0..12)), true, false),
            }
        };
        body.push_str("    ");
        body.push_str(&line);
        body.push('\n');
        if binds_int {
            ints.push((i, name));
        }
        g.effectful.push(effectful);
        g.data_deps.push(deps);
        g.inline.push(inline);
    }
    let mut deps = BTreeSet::new();
    let names: Vec<String> = ints
        .iter()
        .map(|(stmt, name)| {
            deps.insert(*stmt);
            name.clone()
        })
        .collect();
    let last = if names.is_empty() { "0".to_string() } else { names.join(" + ") };
    body.push_str(&format!("    print ({last})\n"));
    g.effectful.push(true);
    g.data_deps.push(deps);
    g.inline.push(false);
    g.source = with_helpers(&body);
    g
}

/// Replays `trace` against the intended structure and checks dependency
/// order, effect order, single dispatch and completion, the worker bound
/// and greedy non-idling. Non-idling is checked at every point where the
/// scheduler hands control back, which is just before each worker join or
/// worker completion and at the end of the trace.
pub fn check_trace(g: &Generated, trace: &[SchedEvent], workers: usize) -> Result<(), String> {
    let n = g.len();
    let mut dispatched: Vec<Option<Executor>> = vec![None; n];
    let mut completed = vec![false; n];
    let mut joined: BTreeSet<u64> = BTreeSet::new();
    let mut busy: BTreeSet<u64> = BTreeSet::new();
    let mut finished = false;

    let ready_undispatched = |dispatched: &[Option<Executor>], completed: &[bool]| -> Vec<usize> {
        (0..n).filter(|&i| dispatched[i].is_none() && g.all_deps(i).iter().all(|&d| completed[d])).collect()
    };
    let quiescent =
        |dispatched: &[Option<Executor>], completed: &[bool], joined: &BTreeSet<u64>, busy: &BTreeSet<u64>| {
            for t in ready_undispatched(dispatched, completed) {
                if g.inline[t] {
                    return Err(format!("call-free task {t} left ready"));
                }
                if busy.len() < joined.len() {
                    return Err(format!(
                        "task {t} ready while {} of {} workers idle",
                        joined.len() - busy.len(),
                        joined.len()
                    ));
                }
            }
            Ok(())
        };

    for (index, event) in trace.iter().enumerate() {
        if event.seq != index as u64 {
            return Err(format!("event {index} has seq {}", event.seq));
        }
        if finished {
            return Err("event after Finished".into());
        }
        match event.kind {
            EventKind::WorkerJoined(w) => {
                if index > 0 {
                    quiescent(&dispatched, &completed, &joined, &busy)?;
                }
                if !joined.insert(w.0) {
                    return Err(format!("worker {w} joined twice"));
                }
            }
            EventKind::Dispatched { task, executor } => {
                let t = task.0;
                if t >= n {
                    return Err(format!("unknown task {t}"));
                }
                if dispatched[t].is_some() {
                    return Err(format!("task {t} dispatched twice"));
                }
                if let Some(d) = g.all_deps(t).into_iter().find(|&d| !completed[d]) {
                    return Err(format!("task {t} dispatched before its dependency {d} completed"));
                }
                match executor {
                    Executor::Coordinator if !g.inline[t] => return Err(format!("task {t} with calls run inline")),
                    Executor::Worker(_) if g.inline[t] => return Err(format!("call-free task {t} shipped")),
                    Executor::Worker(w) => {
                        if !joined.contains(&w.0) {
                            return Err(format!("task {t} sent to unknown worker {w}"));
                        }
                        if !busy.insert(w.0) {
                            return Err(format!("task {t} sent to busy worker {w}"));
                        }
                        if busy.len() > workers {
                            return Err(format!("{} tasks running on {workers} workers", busy.len()));
                        }
                    }
                    Executor::Coordinator => {}
                }
                dispatched[t] = Some(executor);
            }
            EventKind::Completed { task, executor } => {
                let t = task.0;
                if t >= n || dispatched[t] != Some(executor) {
                    return Err(format!("task {t} completed by {executor} without matching dispatch"));
                }
                if completed[t] {
                    return Err(format!("task {t} completed twice"));
                }
                if let Executor::Worker(w) = executor {
                    quiescent(&dispatched, &completed, &joined, &busy)?;
                    busy.remove(&w.0);
                }
                completed[t] = true;
            }
            EventKind::Finished => finished = true,
        }
    }
    if !finished {
        quiescent(&dispatched, &completed, &joined, &busy)?;
        return Err("trace did not finish".into());
    }
    if let Some(t) = (0..n).find(|&t| !completed[t]) {
        return Err(format!("task {t} never completed"));
    }
    Ok(())
}

/// Effectful tasks in the order the trace completed them.
pub fn effect_completions(g: &Generated, trace: &[SchedEvent]) -> Vec<usize> {
    trace
        .iter()
        .filter_map(|e| match e.kind {
            EventKind::Completed { task, .. } if g.effectful[task.0] => Some(task.0),
            _ => None,
        })
        .collect()
}
