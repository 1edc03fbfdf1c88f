//! Auto-parallelizing runtime for a small pure-by-default functional language.
//!
//! The pipeline reads a program, classifies each function as pure or
//! effectful from its signature, turns the entry function's do-block into a
//! dependency graph (effectful statements are chained through a RealWorld
//! token), and runs that graph on a pool of workers with a greedy
//! input-ready scheduler.

pub mod depgraph;
pub mod harness;
pub mod interp;
pub mod kernels;
pub mod lang;
pub mod net;
pub mod sched;
pub mod session;
pub mod value;

pub use depgraph::{build_graph, DepGraph, TaskId};
pub use net::{LocalTransport, RunReport};
pub use sched::{Scheduler, WorkerId};
pub use session::{compile, Compiled, Error};
pub use value::{Matrix, Summary, Value};
