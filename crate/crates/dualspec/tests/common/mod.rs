//! Shared test support: corpus paths, a random loop-free program
//! generator, the acyclic-path-enumeration oracle for all-uses, and the
//! definition-clear trace oracle for dynamic DUA coverage.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::rngs::StdRng;
use rand::Rng;

use dualspec::cfg::{AccessKind, Cfg, NodeId};
use dualspec::dataflow::{Dua, DuaKey, DuaKind};
use dualspec::runner::TraceEvent;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn bin_path() -> &'static str {
    env!("CARGO_BIN_EXE_dualspec")
}

/// Generates a random loop-free IMPX function over at most 4 variables,
/// with at most two branch constructs (so at most 7 blocks).
pub struct GeneratedProgram {
    pub source: String,
    pub function: String,
    pub scalar_params: usize,
    pub has_array: bool,
}

pub fn gen_loop_free_program(rng: &mut StdRng) -> GeneratedProgram {
    let has_array = rng.random_bool(0.4);
    let scalar_params = if has_array {
        1
    } else {
        rng.random_range(1..=2)
    };
    let mut vars: Vec<String> = Vec::new();
    for name in ["a", "b"].iter().take(scalar_params) {
        vars.push(name.to_string());
    }

    let mut lines: Vec<String> = Vec::new();
    let mut params: Vec<String> = vars.iter().map(|v| format!("int {v}")).collect();
    if has_array {
        params.push("int[] xs".to_string());
    }
    lines.push(format!("int f({})", params.join(", ")));
    lines.push("{".to_string());

    // Declare locals up to the 4-variable budget (the array counts as one).
    let budget = 4 - vars.len() - usize::from(has_array);
    let locals = rng.random_range(1..=budget.clamp(1, 2));
    for name in ["c", "d"].iter().take(locals) {
        let init = gen_expr(rng, &vars, has_array, 1);
        lines.push(format!("    int {name} = {init};"));
        vars.push(name.to_string());
    }

    for _ in 0..rng.random_range(0..=2) {
        gen_simple_stmt(rng, &mut lines, &vars, has_array, 1);
    }
    let branches = rng.random_range(0..=2);
    for _ in 0..branches {
        gen_branch(rng, &mut lines, &vars, has_array);
        if rng.random_bool(0.5) {
            gen_simple_stmt(rng, &mut lines, &vars, has_array, 1);
        }
    }
    lines.push(format!(
        "    return {};",
        gen_expr(rng, &vars, has_array, 2)
    ));
    lines.push("}".to_string());

    GeneratedProgram {
        source: lines.join("\n") + "\n",
        function: "f".to_string(),
        scalar_params,
        has_array,
    }
}

fn gen_simple_stmt(
    rng: &mut StdRng,
    lines: &mut Vec<String>,
    vars: &[String],
    has_array: bool,
    depth: usize,
) {
    let pad = "    ".repeat(depth);
    if has_array && rng.random_bool(0.2) {
        let index = gen_index(rng, vars);
        let value = gen_expr(rng, vars, has_array, 1);
        lines.push(format!("{pad}xs[{index}] = {value};"));
    } else {
        let target = &vars[rng.random_range(0..vars.len())];
        let value = gen_expr(rng, vars, has_array, 2);
        lines.push(format!("{pad}{target} = {value};"));
    }
}

fn gen_branch(rng: &mut StdRng, lines: &mut Vec<String>, vars: &[String], has_array: bool) {
    let cond = format!(
        "{} {} {}",
        gen_expr(rng, vars, has_array, 1),
        ["<", "<=", ">", ">=", "==", "!="][rng.random_range(0..6)],
        gen_expr(rng, vars, has_array, 1)
    );
    lines.push(format!("    if ({cond})"));
    lines.push("    {".to_string());
    for _ in 0..rng.random_range(1..=2) {
        gen_simple_stmt(rng, lines, vars, has_array, 2);
    }
    lines.push("    }".to_string());
    if rng.random_bool(0.5) {
        lines.push("    else".to_string());
        lines.push("    {".to_string());
        for _ in 0..rng.random_range(1..=2) {
            gen_simple_stmt(rng, lines, vars, has_array, 2);
        }
        lines.push("    }".to_string());
    }
}

fn gen_index(rng: &mut StdRng, vars: &[String]) -> String {
    if rng.random_bool(0.6) {
        rng.random_range(0..3).to_string()
    } else {
        // Wrapped into range; faults from negative remainders are fine.
        let var = &vars[rng.random_range(0..vars.len())];
        format!("(({var} % 3) + 3) % 3")
    }
}

fn gen_expr(rng: &mut StdRng, vars: &[String], has_array: bool, depth: usize) -> String {
    if depth == 0 || rng.random_bool(0.4) {
        return gen_atom(rng, vars, has_array);
    }
    let op = match rng.random_range(0..10) {
        0 => "*",
        1..=5 => "+",
        _ => "-",
    };
    format!(
        "({} {op} {})",
        gen_expr(rng, vars, has_array, depth - 1),
        gen_expr(rng, vars, has_array, depth - 1)
    )
}

fn gen_atom(rng: &mut StdRng, vars: &[String], has_array: bool) -> String {
    if has_array && rng.random_bool(0.25) {
        return format!("xs[{}]", gen_index(rng, vars));
    }
    if rng.random_bool(0.5) {
        vars[rng.random_range(0..vars.len())].clone()
    } else {
        rng.random_range(-3..=5).to_string()
    }
}

/// All-uses oracle for loop-free CFGs: enumerate every acyclic path from
/// the entry and collect DUAs along each, tracking the most recent
/// definition per variable. One association per node-level identity, like
/// the analysis; the line attribution per key is path-independent.
pub fn oracle_all_uses(cfg: &Cfg) -> BTreeSet<Dua> {
    let mut duas = std::collections::BTreeMap::new();
    let mut path = vec![cfg.entry];
    walk(cfg, &mut path, &mut duas);
    duas.into_values().collect()
}

type DuaMap = std::collections::BTreeMap<DuaKey, Dua>;

fn walk(cfg: &Cfg, path: &mut Vec<NodeId>, duas: &mut DuaMap) {
    let node = *path.last().unwrap();
    let successors: Vec<NodeId> = cfg.successors(node).collect();
    if successors.is_empty() {
        collect_path_duas(cfg, path, duas);
        return;
    }
    for succ in successors {
        assert!(!path.contains(&succ), "oracle requires a loop-free graph");
        path.push(succ);
        walk(cfg, path, duas);
        path.pop();
    }
}

fn collect_path_duas(cfg: &Cfg, path: &[NodeId], duas: &mut DuaMap) {
    // var -> (node, line of its most recent definition)
    let mut last_def: std::collections::HashMap<&str, (NodeId, u32)> =
        std::collections::HashMap::new();
    for (pos, &node_id) in path.iter().enumerate() {
        let block = cfg.block(node_id);
        for access in &block.accesses {
            match access.kind {
                AccessKind::CUse => {
                    if let Some(&(def_node, def_line)) = last_def.get(access.var.as_str()) {
                        let dua = Dua {
                            kind: DuaKind::CUse,
                            var: access.var.clone(),
                            def_node,
                            def_line,
                            use_node: node_id,
                            use_line: access.line,
                            target_node: None,
                            target_line: None,
                        };
                        duas.entry(dua.key()).or_insert(dua);
                    }
                }
                AccessKind::Def => {
                    last_def.insert(&access.var, (node_id, access.line));
                }
            }
        }
        if let Some(puses) = &block.pred_puse {
            if let Some(&next) = path.get(pos + 1) {
                for (var, use_line) in puses {
                    if let Some(&(def_node, def_line)) = last_def.get(var.as_str()) {
                        let dua = Dua {
                            kind: DuaKind::PUse,
                            var: var.clone(),
                            def_node,
                            def_line,
                            use_node: node_id,
                            use_line: *use_line,
                            target_node: Some(next),
                            target_line: cfg.block(next).first_line(),
                        };
                        duas.entry(dua.key()).or_insert(dua);
                    }
                }
            }
        }
    }
}

/// Dynamic DUA oracle: scan the raw event trace for definition-clear
/// def/use pairs, independently of the interpreter's last-def marking.
pub fn duas_from_trace(events: &[TraceEvent]) -> BTreeSet<DuaKey> {
    let mut covered = BTreeSet::new();
    for (i, event) in events.iter().enumerate() {
        let (def_var, def_node) = match event {
            TraceEvent::Def { var, node, .. } => (var, *node),
            _ => continue,
        };
        for (j, later) in events.iter().enumerate().skip(i + 1) {
            // A later redefinition closes this definition's window.
            if matches!(later, TraceEvent::Def { var, .. } if var == def_var) {
                break;
            }
            match later {
                TraceEvent::CUse { var, node, .. } if var == def_var => {
                    covered.insert(DuaKey {
                        kind: DuaKind::CUse,
                        var: var.clone(),
                        def_node,
                        use_node: *node,
                        target_node: None,
                    });
                }
                TraceEvent::Predicate { node, vars } if vars.contains(def_var) => {
                    // The branch actually taken is the next Branch event
                    // out of this predicate.
                    if let Some(TraceEvent::Branch { from, to }) = events
                        .iter()
                        .skip(j + 1)
                        .find(|e| matches!(e, TraceEvent::Branch { .. }))
                    {
                        if from == node {
                            covered.insert(DuaKey {
                                kind: DuaKind::PUse,
                                var: def_var.clone(),
                                def_node,
                                use_node: *node,
                                target_node: Some(*to),
                            });
                        }
                    }
                }
                _ => {}
            }
        }
    }
    covered
}
