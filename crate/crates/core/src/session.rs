//! End-to-end pipeline: source text to a runnable dependency graph.

use std::net::TcpListener;

use thiserror::Error;

use crate::depgraph::{build_graph, DepGraph, GraphError};
use crate::interp::{EvalError, Interpreter, SeqRun};
use crate::lang::{self, LangError, Program, SymbolTable};
use crate::net::{serve_coordinator, LocalTransport, NetError, RunReport, ServeConfig};
use crate::sched::Scheduler;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// A parsed, resolved program together with its entry graph.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub source: String,
    pub program: Program,
    pub symbols: SymbolTable,
    pub graph: DepGraph,
}

pub fn compile(source: &str, entry: &str) -> Result<Compiled, Error> {
    let (program, symbols) = lang::load(source)?;
    let graph = build_graph(&program, entry, &symbols)?;
    Ok(Compiled { source: source.to_string(), program, symbols, graph })
}

impl Compiled {
    pub fn entry(&self) -> &str {
        &self.graph.entry
    }

    pub fn scheduler(&self) -> Scheduler {
        Scheduler::new(self.graph.clone())
    }

    pub fn run_sequential(&self) -> Result<SeqRun, Error> {
        Ok(Interpreter::new(&self.program).run_sequential(self.entry())?)
    }

    pub fn run_local(&self, workers: usize) -> Result<RunReport, Error> {
        Ok(LocalTransport::new(workers)?.run(&self.program, self.scheduler())?)
    }

    pub fn serve(&self, listener: TcpListener, config: &ServeConfig) -> Result<RunReport, Error> {
        Ok(serve_coordinator(listener, config, &self.source, self.scheduler())?)
    }
}
