//! Spectrum matrices: per-test boolean coverage over program elements,
//! verdicts, tallies, and a CSV interchange format so externally
//! collected matrices can be ranked without the interpreter.
//!
//! Element id grammar (bit-exact in every CSV):
//! `line:<n>`, `node:<n>`, `edge:<a>-<b>`, `dua:c:<d>:<u>:<var>`,
//! `dua:p:<d>:<u'>:<u>:<var>`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::cfg::NodeId;
use crate::dataflow::{Dua, DuaKey, DuaKind, RequirementSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElementId {
    Line(u32),
    Node(NodeId),
    Edge(NodeId, NodeId),
    CUseDua {
        def_node: NodeId,
        use_node: NodeId,
        var: String,
    },
    PUseDua {
        def_node: NodeId,
        use_node: NodeId,
        target_node: NodeId,
        var: String,
    },
}

impl ElementId {
    pub fn from_dua_key(key: &DuaKey) -> ElementId {
        match key.target_node {
            None => ElementId::CUseDua {
                def_node: key.def_node,
                use_node: key.use_node,
                var: key.var.clone(),
            },
            Some(target) => ElementId::PUseDua {
                def_node: key.def_node,
                use_node: key.use_node,
                target_node: target,
                var: key.var.clone(),
            },
        }
    }

    pub fn from_dua(dua: &Dua) -> ElementId {
        ElementId::from_dua_key(&dua.key())
    }

    pub fn to_dua_key(&self) -> Option<DuaKey> {
        match self {
            ElementId::CUseDua {
                def_node,
                use_node,
                var,
            } => Some(DuaKey {
                kind: DuaKind::CUse,
                var: var.clone(),
                def_node: *def_node,
                use_node: *use_node,
                target_node: None,
            }),
            ElementId::PUseDua {
                def_node,
                use_node,
                target_node,
                var,
            } => Some(DuaKey {
                kind: DuaKind::PUse,
                var: var.clone(),
                def_node: *def_node,
                use_node: *use_node,
                target_node: Some(*target_node),
            }),
            _ => None,
        }
    }

    pub fn is_line(&self) -> bool {
        matches!(self, ElementId::Line(_))
    }

    pub fn is_dua(&self) -> bool {
        matches!(self, ElementId::CUseDua { .. } | ElementId::PUseDua { .. })
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementId::Line(n) => write!(f, "line:{n}"),
            ElementId::Node(n) => write!(f, "node:{n}"),
            ElementId::Edge(a, b) => write!(f, "edge:{a}-{b}"),
            ElementId::CUseDua {
                def_node,
                use_node,
                var,
            } => {
                write!(f, "dua:c:{def_node}:{use_node}:{var}")
            }
            ElementId::PUseDua {
                def_node,
                use_node,
                target_node,
                var,
            } => {
                write!(f, "dua:p:{def_node}:{use_node}:{target_node}:{var}")
            }
        }
    }
}

impl FromStr for ElementId {
    type Err = SpectraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SpectraError::BadElementId(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["line", n] => Ok(ElementId::Line(n.parse().map_err(|_| bad())?)),
            ["node", n] => Ok(ElementId::Node(n.parse().map_err(|_| bad())?)),
            ["edge", pair] => {
                let (a, b) = pair.split_once('-').ok_or_else(bad)?;
                Ok(ElementId::Edge(
                    a.parse().map_err(|_| bad())?,
                    b.parse().map_err(|_| bad())?,
                ))
            }
            ["dua", "c", d, u, var] if !var.is_empty() => Ok(ElementId::CUseDua {
                def_node: d.parse().map_err(|_| bad())?,
                use_node: u.parse().map_err(|_| bad())?,
                var: var.to_string(),
            }),
            ["dua", "p", d, u, t, var] if !var.is_empty() => Ok(ElementId::PUseDua {
                def_node: d.parse().map_err(|_| bad())?,
                use_node: u.parse().map_err(|_| bad())?,
                target_node: t.parse().map_err(|_| bad())?,
                var: var.to_string(),
            }),
            _ => Err(bad()),
        }
    }
}

/// The four counters behind every ranking metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub c_ef: u32,
    pub c_nf: u32,
    pub c_ep: u32,
    pub c_np: u32,
}

impl Counts {
    pub fn total(&self) -> u32 {
        self.c_ef + self.c_nf + self.c_ep + self.c_np
    }
}

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error("malformed element id `{0}`")]
    BadElementId(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("malformed CSV header: {0}")]
    BadHeader(String),
    #[error("row {row}: expected {expected} cells, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column {column}: invalid cell `{cell}` (expected 0 or 1)")]
    BadCell {
        row: usize,
        column: usize,
        cell: String,
    },
    #[error("row {row}: invalid verdict `{verdict}` (expected pass or fail)")]
    BadVerdict { row: usize, verdict: String },
}

/// Elements x tests boolean coverage with per-test verdicts.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumMatrix {
    pub elements: Vec<ElementId>,
    pub test_names: Vec<String>,
    pub rows: Vec<Vec<bool>>,
    pub verdicts: Vec<Verdict>,
    index: HashMap<ElementId, usize>,
}

impl SpectrumMatrix {
    pub fn new(
        elements: Vec<ElementId>,
        test_names: Vec<String>,
        rows: Vec<Vec<bool>>,
        verdicts: Vec<Verdict>,
    ) -> SpectrumMatrix {
        assert_eq!(test_names.len(), rows.len());
        assert_eq!(test_names.len(), verdicts.len());
        for row in &rows {
            assert_eq!(row.len(), elements.len());
        }
        let index = elements
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, e)| (e, i))
            .collect();
        SpectrumMatrix {
            elements,
            test_names,
            rows,
            verdicts,
            index,
        }
    }

    /// The canonical element universe of a requirement set: lines, nodes,
    /// edges, then DUAs in requirement order.
    pub fn element_universe(reqs: &RequirementSet) -> Vec<ElementId> {
        let mut elements = Vec::new();
        elements.extend(reqs.lines.iter().map(|&l| ElementId::Line(l)));
        elements.extend(reqs.nodes.iter().map(|&n| ElementId::Node(n)));
        elements.extend(reqs.edges.iter().map(|&(a, b)| ElementId::Edge(a, b)));
        elements.extend(reqs.duas.iter().map(ElementId::from_dua));
        elements
    }

    pub fn total_tests(&self) -> usize {
        self.rows.len()
    }

    pub fn failing_tests(&self) -> usize {
        self.verdicts
            .iter()
            .filter(|v| **v == Verdict::Fail)
            .count()
    }

    pub fn tally(&self, element: &ElementId) -> Result<Counts, SpectraError> {
        let idx = self
            .index
            .get(element)
            .copied()
            .ok_or_else(|| SpectraError::UnknownElement(element.to_string()))?;
        Ok(self.tally_at(idx))
    }

    pub fn tally_at(&self, idx: usize) -> Counts {
        let mut counts = Counts::default();
        for (row, verdict) in self.rows.iter().zip(&self.verdicts) {
            match (row[idx], verdict) {
                (true, Verdict::Fail) => counts.c_ef += 1,
                (false, Verdict::Fail) => counts.c_nf += 1,
                (true, Verdict::Pass) => counts.c_ep += 1,
                (false, Verdict::Pass) => counts.c_np += 1,
            }
        }
        counts
    }

    /// CSV layout: `test,verdict,<element ids...>`, cells 0/1, LF endings.
    pub fn export_csv(&self) -> String {
        let mut out = String::from("test,verdict");
        for element in &self.elements {
            out.push(',');
            out.push_str(&element.to_string());
        }
        out.push('\n');
        for ((name, verdict), row) in self.test_names.iter().zip(&self.verdicts).zip(&self.rows) {
            out.push_str(name);
            out.push(',');
            out.push_str(match verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "fail",
            });
            for &covered in row {
                out.push(',');
                out.push(if covered { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn import_csv(text: &str) -> Result<SpectrumMatrix, SpectraError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| SpectraError::BadHeader("empty file".into()))?;
        let mut cols = header.split(',');
        if cols.next() != Some("test") || cols.next() != Some("verdict") {
            return Err(SpectraError::BadHeader(
                "first two columns must be `test,verdict`".into(),
            ));
        }
        let elements: Vec<ElementId> = cols.map(ElementId::from_str).collect::<Result<_, _>>()?;

        let mut test_names = Vec::new();
        let mut rows = Vec::new();
        let mut verdicts = Vec::new();
        for (idx, line) in lines.enumerate() {
            let row_no = idx + 1;
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != elements.len() + 2 {
                return Err(SpectraError::RaggedRow {
                    row: row_no,
                    expected: elements.len() + 2,
                    found: cells.len(),
                });
            }
            test_names.push(cells[0].to_string());
            verdicts.push(match cells[1] {
                "pass" => Verdict::Pass,
                "fail" => Verdict::Fail,
                other => {
                    return Err(SpectraError::BadVerdict {
                        row: row_no,
                        verdict: other.into(),
                    })
                }
            });
            let row = cells[2..]
                .iter()
                .enumerate()
                .map(|(col, cell)| match *cell {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(SpectraError::BadCell {
                        row: row_no,
                        column: col + 3,
                        cell: other.into(),
                    }),
                })
                .collect::<Result<Vec<bool>, _>>()?;
            rows.push(row);
        }
        Ok(SpectrumMatrix::new(elements, test_names, rows, verdicts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_matrix() -> SpectrumMatrix {
        // Three tests over three elements; t3 fails.
        SpectrumMatrix::new(
            vec![ElementId::Line(3), ElementId::Line(4), ElementId::Node(1)],
            vec!["t1".into(), "t2".into(), "t3".into()],
            vec![
                vec![true, true, true],
                vec![true, false, true],
                vec![false, true, true],
            ],
            vec![Verdict::Pass, Verdict::Pass, Verdict::Fail],
        )
    }

    #[test]
    fn tally_counts_cross_coverage_and_verdicts() {
        let m = small_matrix();
        let c = m.tally(&ElementId::Line(3)).unwrap();
        assert_eq!(
            c,
            Counts {
                c_ef: 0,
                c_nf: 1,
                c_ep: 2,
                c_np: 0
            }
        );
        let c = m.tally(&ElementId::Line(4)).unwrap();
        assert_eq!(
            c,
            Counts {
                c_ef: 1,
                c_nf: 0,
                c_ep: 1,
                c_np: 1
            }
        );
    }

    #[test]
    fn element_never_covered_gets_all_noncovering_counts() {
        let m = SpectrumMatrix::new(
            vec![ElementId::Line(3)],
            vec!["t1".into(), "t2".into(), "t3".into()],
            vec![vec![false], vec![false], vec![false]],
            vec![Verdict::Pass, Verdict::Pass, Verdict::Fail],
        );
        let c = m.tally(&ElementId::Line(3)).unwrap();
        assert_eq!(
            c,
            Counts {
                c_ef: 0,
                c_nf: 1,
                c_ep: 0,
                c_np: 2
            }
        );
    }

    #[test]
    fn unknown_element_is_an_error() {
        let m = small_matrix();
        assert!(m.tally(&ElementId::Line(99)).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let m = small_matrix();
        let csv = m.export_csv();
        let back = SpectrumMatrix::import_csv(&csv).unwrap();
        assert_eq!(m, back);
        assert_eq!(csv, back.export_csv());
    }

    #[test]
    fn zero_test_matrix_exports_header_only() {
        let m = SpectrumMatrix::new(vec![ElementId::Line(1)], vec![], vec![], vec![]);
        assert_eq!(m.export_csv(), "test,verdict,line:1\n");
        let back = SpectrumMatrix::import_csv(&m.export_csv()).unwrap();
        assert_eq!(back.total_tests(), 0);
    }

    #[test]
    fn bad_cell_names_row_and_column() {
        let err = SpectrumMatrix::import_csv("test,verdict,line:1\nt1,pass,2\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 1"), "{msg}");
        assert!(msg.contains("column 3"), "{msg}");
    }

    #[test]
    fn bad_verdict_is_rejected() {
        let err = SpectrumMatrix::import_csv("test,verdict,line:1\nt1,maybe,1\n").unwrap_err();
        assert!(err.to_string().contains("invalid verdict"));
    }

    #[test]
    fn ragged_row_is_rejected() {
        let err = SpectrumMatrix::import_csv("test,verdict,line:1\nt1,pass\n").unwrap_err();
        assert!(err.to_string().contains("expected 3 cells"));
    }

    #[test]
    fn element_ids_round_trip_through_the_grammar() {
        let ids = vec![
            ElementId::Line(42),
            ElementId::Node(3),
            ElementId::Edge(2, 6),
            ElementId::CUseDua {
                def_node: 1,
                use_node: 4,
                var: "i".into(),
            },
            ElementId::PUseDua {
                def_node: 1,
                use_node: 2,
                target_node: 6,
                var: "length".into(),
            },
        ];
        for id in ids {
            let text = id.to_string();
            assert_eq!(text.parse::<ElementId>().unwrap(), id);
        }
        assert!("dua:x:1:2:i".parse::<ElementId>().is_err());
        assert!("line:abc".parse::<ElementId>().is_err());
    }
}
