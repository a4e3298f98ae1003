//! Per-function control-flow graphs: basic blocks, branch edges, and
//! def/c-use/p-use annotations.
//!
//! Nodes are numbered from 1 in source order of their first statement.
//! A predicate always ends its block; a `while` predicate additionally
//! heads its own block because the back edge re-enters it. Parameters
//! are definitions at the entry node attributed to the signature line.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::lang::{stmt_accesses, Function, Stmt, StmtKind, VarAccess};

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AccessKind {
    Def,
    CUse,
}

/// One def or c-use inside a block, in intra-block evaluation order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Access {
    pub kind: AccessKind,
    pub var: String,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub id: NodeId,
    /// Lines of the statements in this block, ascending.
    pub lines: Vec<u32>,
    /// Defs and c-uses in intra-block evaluation order.
    pub accesses: Vec<Access>,
    /// Variables read by the terminating predicate, if the block ends in
    /// one; the line is the predicate line. Present iff out-degree is 2.
    pub pred_puse: Option<Vec<(String, u32)>>,
}

impl Block {
    pub fn defs(&self) -> Vec<(String, u32)> {
        self.accesses
            .iter()
            .filter(|a| a.kind == AccessKind::Def)
            .map(|a| (a.var.clone(), a.line))
            .collect()
    }

    pub fn cuses(&self) -> Vec<(String, u32)> {
        self.accesses
            .iter()
            .filter(|a| a.kind == AccessKind::CUse)
            .map(|a| (a.var.clone(), a.line))
            .collect()
    }

    pub fn first_line(&self) -> Option<u32> {
        self.lines.first().copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cfg {
    pub function: String,
    pub nodes: Vec<Block>,
    /// Ordered pairs (from, to), sorted.
    pub edges: Vec<(NodeId, NodeId)>,
    pub entry: NodeId,
    pub exits: Vec<NodeId>,
    line_node: BTreeMap<u32, NodeId>,
}

impl Cfg {
    pub fn block(&self, id: NodeId) -> &Block {
        &self.nodes[(id - 1) as usize]
    }

    pub fn node_of_line(&self, line: u32) -> Option<NodeId> {
        self.line_node.get(&line).copied()
    }

    pub fn successors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.edges
            .iter()
            .filter(move |(from, _)| *from == id)
            .map(|&(_, to)| to)
    }

    /// Node ids unreachable from the entry; empty on well-formed programs.
    pub fn unreachable_nodes(&self) -> Vec<NodeId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![self.entry];
        while let Some(node) = stack.pop() {
            if seen.insert(node) {
                stack.extend(self.successors(node));
            }
        }
        self.nodes
            .iter()
            .map(|b| b.id)
            .filter(|id| !seen.contains(id))
            .collect()
    }

    /// Textual dump: one line per node, one per edge.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for block in &self.nodes {
            let lines = join(block.lines.iter());
            let defs = join_pairs(&block.defs());
            let cuses = join_pairs(&block.cuses());
            writeln!(
                out,
                "node {}: lines={lines} def={defs} cuse={cuses}",
                block.id
            )
            .unwrap();
        }
        for &(from, to) in &self.edges {
            let puse = match &self.block(from).pred_puse {
                Some(vars) => join_pairs(vars),
                None => String::new(),
            };
            writeln!(out, "edge {from} -> {to}: puse={puse}").unwrap();
        }
        out
    }
}

fn join<T: std::fmt::Display>(items: impl Iterator<Item = T>) -> String {
    items.map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn join_pairs(pairs: &[(String, u32)]) -> String {
    pairs
        .iter()
        .map(|(v, l)| format!("{v}:{l}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Builds the block/edge structure of `function`. Annotation is a
/// separate pass; see [`annotate_def_use`].
pub fn build_cfg(function: &Function) -> Cfg {
    let mut builder = Builder {
        blocks: vec![Draft::default()],
        edges: BTreeSet::new(),
        exits: BTreeSet::new(),
        current: Some(0),
        pending: Vec::new(),
    };
    builder.seq(&function.body);
    // A dangling tail means control can fall off the function end; the
    // open block is still an exit.
    if let Some(open) = builder.current.take() {
        builder.exits.insert(open as NodeId + 1);
    }
    for source in std::mem::take(&mut builder.pending) {
        builder.exits.insert(source + 1);
    }

    let mut line_node = BTreeMap::new();
    let nodes: Vec<Block> = builder
        .blocks
        .iter()
        .enumerate()
        .map(|(idx, draft)| {
            let id = idx as NodeId + 1;
            for line in &draft.lines {
                line_node.insert(*line, id);
            }
            Block {
                id,
                lines: draft.lines.clone(),
                accesses: Vec::new(),
                pred_puse: None,
            }
        })
        .collect();

    let mut exits: Vec<NodeId> = builder.exits.into_iter().collect();
    exits.sort_unstable();
    Cfg {
        function: function.name.clone(),
        nodes,
        edges: builder.edges.into_iter().collect(),
        entry: 1,
        exits,
        line_node,
    }
}

#[derive(Default)]
struct Draft {
    lines: Vec<u32>,
}

struct Builder {
    blocks: Vec<Draft>,
    edges: BTreeSet<(NodeId, NodeId)>,
    exits: BTreeSet<NodeId>,
    /// Open block receiving straight-line statements (index into blocks).
    current: Option<usize>,
    /// Sources whose out-edge targets the next block to open.
    pending: Vec<NodeId>,
}

impl Builder {
    fn open(&mut self) -> usize {
        let idx = self.blocks.len();
        self.blocks.push(Draft::default());
        let id = idx as NodeId + 1;
        for source in self.pending.drain(..) {
            self.edges.insert((source + 1, id));
        }
        idx
    }

    /// The block the next statement lands in, opening one if necessary.
    fn ensure_open(&mut self) -> usize {
        match self.current {
            Some(idx) => idx,
            None => {
                let idx = self.open();
                self.current = Some(idx);
                idx
            }
        }
    }

    /// Closes the current block, leaving its id as the sole pending source.
    fn close_into_pending(&mut self) {
        if let Some(idx) = self.current.take() {
            self.pending.push(idx as NodeId);
        }
    }

    fn seq(&mut self, stmts: &[Stmt]) {
        for stmt in stmts {
            match &stmt.kind {
                StmtKind::If {
                    then_body,
                    else_body,
                    ..
                } => {
                    let pred_idx = self.ensure_open();
                    self.blocks[pred_idx].lines.push(stmt.line);
                    self.current = None;
                    let pred = pred_idx as NodeId;

                    self.pending = vec![pred];
                    self.seq(then_body);
                    self.close_into_pending();
                    let mut after_then = std::mem::take(&mut self.pending);

                    match else_body {
                        Some(eb) => {
                            self.pending = vec![pred];
                            self.seq(eb);
                            self.close_into_pending();
                            after_then.append(&mut self.pending);
                        }
                        None => after_then.push(pred),
                    }
                    self.pending = after_then;
                }
                StmtKind::While { body, .. } => {
                    // The predicate heads its own block: it is the back
                    // edge's target.
                    self.close_into_pending();
                    let pred_idx = self.open();
                    self.blocks[pred_idx].lines.push(stmt.line);
                    let pred = pred_idx as NodeId;

                    self.pending = vec![pred];
                    self.seq(body);
                    self.close_into_pending();
                    // Loop back from wherever the body fell out.
                    for source in self.pending.drain(..) {
                        self.edges.insert((source + 1, pred + 1));
                    }
                    self.pending = vec![pred];
                }
                StmtKind::Return { .. } => {
                    let idx = self.ensure_open();
                    self.blocks[idx].lines.push(stmt.line);
                    self.exits.insert(idx as NodeId + 1);
                    self.current = None;
                    // No pending sources: nothing follows a return.
                }
                _ => {
                    let idx = self.ensure_open();
                    self.blocks[idx].lines.push(stmt.line);
                }
            }
        }
    }
}

/// Fills in defs, c-uses, and predicate p-uses. Parameters become defs at
/// the entry node with the signature line.
pub fn annotate_def_use(mut cfg: Cfg, function: &Function) -> Cfg {
    let mut stmt_by_line: HashMap<u32, &Stmt> = HashMap::new();
    for stmt in function.all_statements() {
        stmt_by_line.insert(stmt.line, stmt);
    }

    for block in &mut cfg.nodes {
        if block.id == cfg.entry {
            for param in &function.params {
                block.accesses.push(Access {
                    kind: AccessKind::Def,
                    var: param.name.clone(),
                    line: function.signature_line,
                });
            }
        }
        for &line in &block.lines {
            let stmt = stmt_by_line[&line];
            match &stmt.kind {
                StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => {
                    let mut reads = Vec::new();
                    crate::lang::expr_reads(cond, &mut reads);
                    let mut seen = BTreeSet::new();
                    let vars: Vec<(String, u32)> = reads
                        .into_iter()
                        .filter(|v| seen.insert(v.clone()))
                        .map(|v| (v, line))
                        .collect();
                    block.pred_puse = Some(vars);
                }
                _ => {
                    for access in stmt_accesses(stmt) {
                        let (kind, var) = match access {
                            VarAccess::Read(v) => (AccessKind::CUse, v),
                            VarAccess::Write(v) => (AccessKind::Def, v),
                        };
                        block.accesses.push(Access { kind, var, line });
                    }
                }
            }
        }
    }
    cfg
}
