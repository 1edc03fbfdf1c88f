//! Data dependency graph of an entry function's do-block.
//!
//! Each statement becomes one task. A task depends on the earlier statement
//! that binds each variable it reads (a data edge), and every effectful
//! statement additionally consumes the RealWorld token produced by the
//! previous effectful statement (a world edge). Threading the token this
//! way serializes effects while leaving pure statements free to run as soon
//! as their inputs exist.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{Body, Expr, Pos, Program, Purity, StmtKind, SymbolTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaskId(pub usize);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Where a task's RealWorld token comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WorldSource {
    Initial,
    Task(TaskId),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dep {
    Data { from: TaskId, name: String },
    World(WorldSource),
}

impl Dep {
    /// The task this dependency waits on, if any.
    pub fn source(&self) -> Option<TaskId> {
        match self {
            Dep::Data { from, .. } | Dep::World(WorldSource::Task(from)) => Some(*from),
            Dep::World(WorldSource::Initial) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskNode {
    pub id: TaskId,
    pub kind: StmtKind,
    pub binds: Option<String>,
    pub rhs: Expr,
    pub purity: Purity,
    /// Sorted: data edges by (source, name), then the world edge.
    pub deps: Vec<Dep>,
    pub pos: Pos,
}

impl TaskNode {
    pub fn world_dep(&self) -> Option<WorldSource> {
        self.deps.iter().find_map(|d| match d {
            Dep::World(w) => Some(*w),
            Dep::Data { .. } => None,
        })
    }

    pub fn data_deps(&self) -> impl Iterator<Item = (TaskId, &str)> {
        self.deps.iter().filter_map(|d| match d {
            Dep::Data { from, name } => Some((*from, name.as_str())),
            Dep::World(_) => None,
        })
    }

    /// Distinct tasks this one waits on, ascending.
    pub fn sources(&self) -> Vec<TaskId> {
        let mut out: Vec<TaskId> = self.deps.iter().filter_map(Dep::source).collect();
        out.sort();
        out.dedup();
        out
    }

    /// Vertex label: the outermost callee, or the statement kind.
    pub fn label(&self) -> String {
        match self.rhs.head_callee() {
            Some(callee) => callee.to_string(),
            None => self.kind.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepGraph {
    pub entry: String,
    pub nodes: Vec<TaskNode>,
    pub world_chain: Vec<TaskId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("entry not found: `{0}`")]
    EntryNotFound(String),
    #[error("entry `{name}` cannot be parallelized: {reason}")]
    NotParallelizable { name: String, reason: &'static str },
    #[error("{pos}: statement {task} reads `{name}`, which no earlier statement binds")]
    Unbound { name: String, task: TaskId, pos: Pos },
    #[error("dependency cycle through {0}")]
    Cycle(TaskId),
}

pub fn build_graph(program: &Program, entry: &str, symbols: &SymbolTable) -> Result<DepGraph, GraphError> {
    let def = program.def(entry).ok_or_else(|| GraphError::EntryNotFound(entry.to_string()))?;
    let not_parallel = |reason| GraphError::NotParallelizable { name: entry.to_string(), reason };
    if def.purity() != Purity::Effectful {
        return Err(not_parallel("it is not an IO function"));
    }
    if !def.params.is_empty() {
        return Err(not_parallel("it takes parameters"));
    }
    let Body::Do(stmts) = &def.body else {
        return Err(not_parallel("its body is not a do-block"));
    };

    let mut binders: BTreeMap<&str, TaskId> = BTreeMap::new();
    let mut world = WorldSource::Initial;
    let mut nodes = Vec::with_capacity(stmts.len());
    let mut world_chain = Vec::new();

    for (idx, stmt) in stmts.iter().enumerate() {
        let id = TaskId(idx);
        let purity = match stmt.kind {
            StmtKind::Bind => Purity::Effectful,
            StmtKind::Let => Purity::Pure,
            StmtKind::Bare => stmt.rhs.head_callee().and_then(|c| symbols.purity(c)).unwrap_or(Purity::Pure),
        };

        let mut deps = Vec::new();
        for name in stmt.rhs.free_vars() {
            let from = *binders.get(name.as_str()).ok_or_else(|| GraphError::Unbound {
                name: name.clone(),
                task: id,
                pos: stmt.pos,
            })?;
            deps.push(Dep::Data { from, name });
        }
        deps.sort();
        if purity == Purity::Effectful {
            deps.push(Dep::World(world));
            world = WorldSource::Task(id);
            world_chain.push(id);
        }
        if let Some(name) = &stmt.binds {
            binders.insert(name, id);
        }
        nodes.push(TaskNode {
            id,
            kind: stmt.kind,
            binds: stmt.binds.clone(),
            rhs: stmt.rhs.clone(),
            purity,
            deps,
            pos: stmt.pos,
        });
    }

    Ok(DepGraph { entry: entry.to_string(), nodes, world_chain })
}

impl DepGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: TaskId) -> &TaskNode {
        &self.nodes[id.0]
    }

    /// For each task, the tasks that wait on it.
    pub fn dependents(&self) -> Vec<Vec<TaskId>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for node in &self.nodes {
            for src in node.sources() {
                out[src.0].push(node.id);
            }
        }
        out
    }

    pub fn data_edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.data_deps().count()).sum()
    }

    /// Kahn's algorithm taking the lowest ready id first, so any graph whose
    /// edges point forward comes back in statement order.
    pub fn toposort(&self) -> Result<Vec<TaskId>, GraphError> {
        let n = self.nodes.len();
        let mut indegree: Vec<usize> = self.nodes.iter().map(|node| node.sources().len()).collect();
        let dependents = self.dependents();
        let mut ready: BinaryHeap<Reverse<TaskId>> =
            (0..n).filter(|&i| indegree[i] == 0).map(|i| Reverse(TaskId(i))).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse(id)) = ready.pop() {
            order.push(id);
            for &next in &dependents[id.0] {
                indegree[next.0] -= 1;
                if indegree[next.0] == 0 {
                    ready.push(Reverse(next));
                }
            }
        }
        if order.len() < n {
            let stuck = (0..n).find(|&i| indegree[i] > 0).expect("some task is stuck");
            return Err(GraphError::Cycle(TaskId(stuck)));
        }
        Ok(order)
    }

    /// Graphviz rendering. Data edges are solid and labelled with the
    /// variable, world edges are dashed. Byte-for-byte deterministic.
    pub fn to_dot(&self) -> String {
        #[derive(PartialEq, Eq, PartialOrd, Ord)]
        enum End {
            World,
            Task(usize),
        }
        let vertex = |e: &End| match e {
            End::World => "world".to_string(),
            End::Task(i) => format!("n{i}"),
        };

        let mut edges: Vec<(End, usize, String, bool)> = Vec::new();
        for node in &self.nodes {
            for dep in &node.deps {
                match dep {
                    Dep::Data { from, name } => edges.push((End::Task(from.0), node.id.0, name.clone(), false)),
                    Dep::World(WorldSource::Initial) => edges.push((End::World, node.id.0, "RealWorld".into(), true)),
                    Dep::World(WorldSource::Task(from)) => {
                        edges.push((End::Task(from.0), node.id.0, "RealWorld".into(), true))
                    }
                }
            }
        }
        edges.sort();

        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{}\" {{", self.entry);
        out.push_str("    world [label=\"InitialWorld\", shape=box];\n");
        for node in &self.nodes {
            let _ = writeln!(out, "    n{} [label=\"{}: {}\"];", node.id.0, node.id.0, node.label());
        }
        for (from, to, label, dashed) in &edges {
            let style = if *dashed { ", style=dashed" } else { "" };
            let _ = writeln!(out, "    {} -> n{to} [label=\"{label}\"{style}];", vertex(from));
        }
        out.push_str("}\n");
        out
    }

    /// Human-readable listing of tasks and edges.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "entry {}: {} tasks, {} data edges, world chain of length {}",
            self.entry,
            self.len(),
            self.data_edge_count(),
            self.world_chain.len()
        );
        for node in &self.nodes {
            let purity = match node.purity {
                Purity::Pure => "pure",
                Purity::Effectful => "io",
            };
            let _ = write!(out, "  {} [{} {}] {}", node.id, node.kind, purity, node.label());
            if let Some(name) = &node.binds {
                let _ = write!(out, " -> {name}");
            }
            let deps: Vec<String> = node
                .deps
                .iter()
                .map(|d| match d {
                    Dep::Data { from, name } => format!("{from}({name})"),
                    Dep::World(WorldSource::Initial) => "world(initial)".into(),
                    Dep::World(WorldSource::Task(t)) => format!("world({t})"),
                })
                .collect();
            if !deps.is_empty() {
                let _ = write!(out, " <= {}", deps.join(", "));
            }
            out.push('\n');
        }
        let chain: Vec<String> = self.world_chain.iter().map(|t| t.to_string()).collect();
        let _ = writeln!(out, "world chain: [{}]", chain.join(", "));
        out
    }
}
