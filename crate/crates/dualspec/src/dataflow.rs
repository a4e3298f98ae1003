//! Static testing requirements: all-nodes, all-edges, and all-uses.
//!
//! The all-uses set is derived from a forward may reaching-definitions
//! fixpoint over the annotated CFG. Intra-block associations (a use whose
//! closest definition precedes it in the same block) are generated and
//! trackable; `ba_dua_compat` drops every association whose definition
//! and use share a block, reproducing the limitation of bitwise
//! block-level collectors.

use std::collections::{BTreeMap, BTreeSet};

use crate::cfg::{AccessKind, Cfg, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DuaKind {
    CUse,
    PUse,
}

/// A definition-use association. C-use: (def_node, use_node, var).
/// P-use: (def_node, (use_node, target_node), var) where use_node holds
/// the predicate and target_node is the branch taken.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Dua {
    pub kind: DuaKind,
    pub var: String,
    pub def_node: NodeId,
    pub def_line: u32,
    pub use_node: NodeId,
    pub use_line: u32,
    pub target_node: Option<NodeId>,
    pub target_line: Option<u32>,
}

/// Identity of a DUA as tracked at runtime: node-level, without lines.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DuaKey {
    pub kind: DuaKind,
    pub var: String,
    pub def_node: NodeId,
    pub use_node: NodeId,
    pub target_node: Option<NodeId>,
}

impl Dua {
    pub fn key(&self) -> DuaKey {
        DuaKey {
            kind: self.kind,
            var: self.var.clone(),
            def_node: self.def_node,
            use_node: self.use_node,
            target_node: self.target_node,
        }
    }

    /// Triple notation: `(d, u, X)` for c-uses, `(d, (u', u), X)` for p-uses.
    pub fn triple(&self) -> String {
        match self.target_node {
            None => format!("({}, {}, {})", self.def_node, self.use_node, self.var),
            Some(target) => {
                format!(
                    "({}, ({},{}), {})",
                    self.def_node, self.use_node, target, self.var
                )
            }
        }
    }
}

impl std::fmt::Display for Dua {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.triple())
    }
}

/// The three requirement families for one function, plus the executable
/// lines they project onto.
#[derive(Debug, Clone, PartialEq)]
pub struct RequirementSet {
    pub function: String,
    pub lines: Vec<u32>,
    pub nodes: Vec<NodeId>,
    pub edges: Vec<(NodeId, NodeId)>,
    pub duas: Vec<Dua>,
}

impl RequirementSet {
    pub fn dua_triples(&self) -> BTreeSet<String> {
        self.duas.iter().map(|d| d.triple()).collect()
    }

    pub fn find_dua(&self, key: &DuaKey) -> Option<&Dua> {
        self.duas.iter().find(|d| &d.key() == key)
    }
}

/// One definition site as seen across block boundaries: the last def of
/// `var` in `node`.
pub type DefSite = (String, NodeId, u32);

/// Forward may-analysis fixpoint. Returns the in-set of each node,
/// indexed by node id - 1.
pub fn reaching_definitions(cfg: &Cfg) -> Vec<BTreeSet<DefSite>> {
    let n = cfg.nodes.len();
    // gen: last definition of each variable per block.
    let mut gen: Vec<BTreeSet<DefSite>> = Vec::with_capacity(n);
    let mut defined_vars: Vec<BTreeSet<String>> = Vec::with_capacity(n);
    for block in &cfg.nodes {
        let mut last: BTreeMap<String, u32> = BTreeMap::new();
        for access in &block.accesses {
            if access.kind == AccessKind::Def {
                last.insert(access.var.clone(), access.line);
            }
        }
        defined_vars.push(last.keys().cloned().collect());
        gen.push(
            last.into_iter()
                .map(|(var, line)| (var, block.id, line))
                .collect(),
        );
    }

    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(from, to) in &cfg.edges {
        preds[(to - 1) as usize].push((from - 1) as usize);
    }

    let mut in_sets: Vec<BTreeSet<DefSite>> = vec![BTreeSet::new(); n];
    let mut out_sets: Vec<BTreeSet<DefSite>> = vec![BTreeSet::new(); n];
    let mut changed = true;
    while changed {
        changed = false;
        for idx in 0..n {
            let mut input = BTreeSet::new();
            for &p in &preds[idx] {
                input.extend(out_sets[p].iter().cloned());
            }
            let mut output: BTreeSet<DefSite> = input
                .iter()
                .filter(|(var, ..)| !defined_vars[idx].contains(var))
                .cloned()
                .collect();
            output.extend(gen[idx].iter().cloned());
            if input != in_sets[idx] || output != out_sets[idx] {
                in_sets[idx] = input;
                out_sets[idx] = output;
                changed = true;
            }
        }
    }
    in_sets
}

/// Computes the full requirement set of an annotated CFG.
pub fn all_uses(cfg: &Cfg) -> RequirementSet {
    all_uses_with(cfg, false)
}

pub fn all_uses_with(cfg: &Cfg, ba_dua_compat: bool) -> RequirementSet {
    let in_sets = reaching_definitions(cfg);
    // Keyed map keeps the first line attribution per node-level identity.
    let mut duas: BTreeMap<DuaKey, Dua> = BTreeMap::new();

    for block in &cfg.nodes {
        let in_set = &in_sets[(block.id - 1) as usize];
        let reaching_of = |var: &str| -> Vec<(NodeId, u32)> {
            in_set
                .iter()
                .filter(|(v, ..)| v == var)
                .map(|&(_, node, line)| (node, line))
                .collect()
        };

        // Closest preceding intra-block definition per variable, updated
        // as the access list is scanned.
        let mut intra_def: BTreeMap<&str, u32> = BTreeMap::new();
        for access in &block.accesses {
            match access.kind {
                AccessKind::CUse => {
                    let sources: Vec<(NodeId, u32)> = match intra_def.get(access.var.as_str()) {
                        Some(&line) => vec![(block.id, line)],
                        None => reaching_of(&access.var),
                    };
                    for (def_node, def_line) in sources {
                        let dua = Dua {
                            kind: DuaKind::CUse,
                            var: access.var.clone(),
                            def_node,
                            def_line,
                            use_node: block.id,
                            use_line: access.line,
                            target_node: None,
                            target_line: None,
                        };
                        duas.entry(dua.key()).or_insert(dua);
                    }
                }
                AccessKind::Def => {
                    intra_def.insert(&access.var, access.line);
                }
            }
        }

        if let Some(puses) = &block.pred_puse {
            let successors: Vec<NodeId> = cfg.successors(block.id).collect();
            for (var, use_line) in puses {
                let sources: Vec<(NodeId, u32)> = match intra_def.get(var.as_str()) {
                    Some(&line) => vec![(block.id, line)],
                    None => reaching_of(var),
                };
                for &succ in &successors {
                    let target_line = cfg.block(succ).first_line();
                    for &(def_node, def_line) in &sources {
                        let dua = Dua {
                            kind: DuaKind::PUse,
                            var: var.clone(),
                            def_node,
                            def_line,
                            use_node: block.id,
                            use_line: *use_line,
                            target_node: Some(succ),
                            target_line,
                        };
                        duas.entry(dua.key()).or_insert(dua);
                    }
                }
            }
        }
    }

    let duas: Vec<Dua> = duas
        .into_values()
        .filter(|d| !(ba_dua_compat && d.def_node == d.use_node))
        .collect();

    let mut lines: Vec<u32> = cfg
        .nodes
        .iter()
        .flat_map(|b| b.lines.iter().copied())
        .collect();
    lines.sort_unstable();

    RequirementSet {
        function: cfg.function.clone(),
        lines,
        nodes: cfg.nodes.iter().map(|b| b.id).collect(),
        edges: cfg.edges.clone(),
        duas,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::{annotate_def_use, build_cfg};
    use crate::lang::parse;

    const MAX_SOURCE: &str = "\
int max(int[] array, int length)
{
    int i = 0;
    int max = array[++i];
    while (i < length)
    {
        if (array[i] > max)
            max = array[i];
        i++;
    }
    return max;
}
";

    fn max_cfg() -> Cfg {
        let program = parse(MAX_SOURCE, "max.impx").unwrap();
        let func = program.function("max").unwrap();
        annotate_def_use(build_cfg(func), func)
    }

    /// The complete all-uses set of the max program.
    pub(crate) const MAX_DUAS: &[&str] = &[
        "(1, 6, max)",
        "(4, 6, max)",
        "(1, (3,4), max)",
        "(1, (3,5), max)",
        "(4, (3,4), max)",
        "(4, (3,5), max)",
        "(1, 1, i)",
        "(1, 4, i)",
        "(1, 5, i)",
        "(1, (2,3), i)",
        "(1, (2,6), i)",
        "(1, (3,4), i)",
        "(1, (3,5), i)",
        "(5, 4, i)",
        "(5, 5, i)",
        "(5, (2,3), i)",
        "(5, (2,6), i)",
        "(5, (3,4), i)",
        "(5, (3,5), i)",
        "(1, 1, array)",
        "(1, 4, array)",
        "(1, (3,4), array)",
        "(1, (3,5), array)",
        "(1, (2,3), length)",
        "(1, (2,6), length)",
    ];

    #[test]
    fn def_of_max_in_node_4_reaches_node_6() {
        let cfg = max_cfg();
        let in_sets = reaching_definitions(&cfg);
        assert!(in_sets[5].contains(&("max".to_string(), 4, 8)));
        assert!(in_sets[5].contains(&("max".to_string(), 1, 4)));
    }

    #[test]
    fn straight_line_entry_sees_only_parameter_defs() {
        let src = "int f(int x)\n{\nint y = x;\nreturn y;\n}";
        let program = parse(src, "f.impx").unwrap();
        let func = program.function("f").unwrap();
        let cfg = annotate_def_use(build_cfg(func), func);
        let in_sets = reaching_definitions(&cfg);
        assert!(in_sets[0].is_empty());
    }

    #[test]
    fn diamond_joins_both_arm_definitions() {
        let src = "\
int f(int c)
{
    int x = 0;
    if (c > 0)
    {
        x = 1;
    }
    else
    {
        x = 2;
    }
    return x;
}
";
        let program = parse(src, "f.impx").unwrap();
        let func = program.function("f").unwrap();
        let cfg = annotate_def_use(build_cfg(func), func);
        let in_sets = reaching_definitions(&cfg);
        let join = &in_sets[3];
        assert!(join.contains(&("x".to_string(), 2, 6)));
        assert!(join.contains(&("x".to_string(), 3, 10)));
        assert!(!join.contains(&("x".to_string(), 1, 3)));
    }

    #[test]
    fn max_all_uses_matches_the_known_requirement_set() {
        let reqs = all_uses(&max_cfg());
        assert_eq!(reqs.nodes, vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(reqs.edges.len(), 7);
        let expected: BTreeSet<String> = MAX_DUAS.iter().map(|s| s.to_string()).collect();
        assert_eq!(reqs.dua_triples(), expected);
        assert_eq!(reqs.duas.len(), 25);
    }

    #[test]
    fn intra_block_def_lines_use_the_closest_preceding_definition() {
        let reqs = all_uses(&max_cfg());
        let intra_i = reqs
            .duas
            .iter()
            .find(|d| d.triple() == "(1, 1, i)")
            .unwrap();
        assert_eq!((intra_i.def_line, intra_i.use_line), (3, 4));
        let inter_i = reqs
            .duas
            .iter()
            .find(|d| d.triple() == "(1, 4, i)")
            .unwrap();
        assert_eq!((inter_i.def_line, inter_i.use_line), (4, 8));
        let intra_array = reqs
            .duas
            .iter()
            .find(|d| d.triple() == "(1, 1, array)")
            .unwrap();
        assert_eq!((intra_array.def_line, intra_array.use_line), (1, 4));
    }

    #[test]
    fn puse_target_lines_are_branch_first_lines() {
        let reqs = all_uses(&max_cfg());
        let dua = reqs
            .duas
            .iter()
            .find(|d| d.triple() == "(1, (2,3), length)")
            .unwrap();
        assert_eq!(dua.def_line, 1);
        assert_eq!(dua.use_line, 5);
        assert_eq!(dua.target_line, Some(7));
    }

    #[test]
    fn define_only_function_has_no_duas() {
        let src = "int f(int x)\n{\nint a = 1;\nint b = 2;\nreturn 0;\n}";
        let program = parse(src, "f.impx").unwrap();
        let func = program.function("f").unwrap();
        let cfg = annotate_def_use(build_cfg(func), func);
        assert!(all_uses(&cfg).duas.is_empty());
    }

    #[test]
    fn intra_block_dua_exists_iff_use_has_preceding_same_block_def() {
        let src = "\
int f(int x)
{
    int y = x;
    int z = y + x;
    return z;
}
";
        let program = parse(src, "f.impx").unwrap();
        let func = program.function("f").unwrap();
        let reqs = all_uses(&annotate_def_use(build_cfg(func), func));
        let triples = reqs.dua_triples();
        assert!(triples.contains("(1, 1, y)"));
        assert!(triples.contains("(1, 1, z)"));
        assert!(triples.contains("(1, 1, x)"));
    }

    #[test]
    fn ba_dua_compat_drops_same_block_associations() {
        let reqs = all_uses_with(&max_cfg(), true);
        let triples = reqs.dua_triples();
        assert!(!triples.contains("(1, 1, i)"));
        assert!(!triples.contains("(1, 1, array)"));
        // (5, 5, i) is loop-carried but still same-block, so it goes too.
        assert!(!triples.contains("(5, 5, i)"));
        assert_eq!(reqs.duas.len(), 22);
    }

    #[test]
    fn all_uses_is_deterministic() {
        let cfg = max_cfg();
        assert_eq!(all_uses(&cfg), all_uses(&cfg));
    }

    #[test]
    fn loop_carried_same_block_dua_is_generated() {
        let src = "\
int f(int n)
{
    while (n > 0)
    {
        n = n - 1;
    }
    return n;
}
";
        let program = parse(src, "f.impx").unwrap();
        let func = program.function("f").unwrap();
        let reqs = all_uses(&annotate_def_use(build_cfg(func), func));
        // The body redefines n and loops back into itself: (3, 3, n).
        assert!(reqs.dua_triples().contains("(3, 3, n)"));
    }
}
