//! Fault catalogs: one block per seeded fault, in a small key = value
//! format.
//!
//! ```text
//! [fault.max_preinc]
//! program = max.impx
//! function = max
//! suite = max.tests
//! faulty_lines = [4]
//! note = pre-increment where post-increment was intended
//! ```
//!
//! Paths are resolved relative to the catalog file's directory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use super::EvalError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultSpec {
    pub id: String,
    pub program: PathBuf,
    pub function: String,
    pub suite: PathBuf,
    pub faulty_lines: BTreeSet<u32>,
    pub note: String,
}

pub fn parse_catalog(text: &str, base_dir: &Path) -> Result<Vec<FaultSpec>, EvalError> {
    let mut faults: Vec<FaultSpec> = Vec::new();
    let mut current: Option<Draft> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let header = header.strip_suffix(']').ok_or_else(|| {
                EvalError::Catalog(format!("line {line_no}: unterminated section header"))
            })?;
            let id = header.strip_prefix("fault.").ok_or_else(|| {
                EvalError::Catalog(format!(
                    "line {line_no}: section must be [fault.<id>], found [{header}]"
                ))
            })?;
            if id.is_empty() {
                return Err(EvalError::Catalog(format!(
                    "line {line_no}: empty fault id"
                )));
            }
            if let Some(draft) = current.take() {
                faults.push(draft.finish(base_dir)?);
            }
            if faults.iter().any(|f| f.id == id) {
                return Err(EvalError::Catalog(format!("duplicate fault id `{id}`")));
            }
            current = Some(Draft {
                id: id.to_string(),
                ..Draft::default()
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| EvalError::Catalog(format!("line {line_no}: expected `key = value`")))?;
        let draft = current.as_mut().ok_or_else(|| {
            EvalError::Catalog(format!(
                "line {line_no}: key outside a [fault.<id>] section"
            ))
        })?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "program" => draft.program = Some(value.to_string()),
            "function" => draft.function = Some(value.to_string()),
            "suite" => draft.suite = Some(value.to_string()),
            "note" => draft.note = value.to_string(),
            "faulty_lines" => {
                let inner = value
                    .strip_prefix('[')
                    .and_then(|v| v.strip_suffix(']'))
                    .ok_or_else(|| {
                        EvalError::Catalog(format!(
                            "line {line_no}: faulty_lines must look like [4, 7]"
                        ))
                    })?;
                let mut lines = BTreeSet::new();
                for item in inner.split(',') {
                    let item = item.trim();
                    if item.is_empty() {
                        continue;
                    }
                    lines.insert(item.parse::<u32>().map_err(|_| {
                        EvalError::Catalog(format!("line {line_no}: bad line number `{item}`"))
                    })?);
                }
                draft.faulty_lines = Some(lines);
            }
            other => {
                return Err(EvalError::Catalog(format!(
                    "line {line_no}: unknown key `{other}`"
                )))
            }
        }
    }
    if let Some(draft) = current.take() {
        faults.push(draft.finish(base_dir)?);
    }
    if faults.is_empty() {
        return Err(EvalError::Catalog("catalog contains no faults".into()));
    }
    Ok(faults)
}

#[derive(Default)]
struct Draft {
    id: String,
    program: Option<String>,
    function: Option<String>,
    suite: Option<String>,
    faulty_lines: Option<BTreeSet<u32>>,
    note: String,
}

impl Draft {
    fn finish(self, base_dir: &Path) -> Result<FaultSpec, EvalError> {
        let missing =
            |field: &str| EvalError::Catalog(format!("fault `{}` is missing `{field}`", self.id));
        let faulty_lines = self.faulty_lines.ok_or_else(|| missing("faulty_lines"))?;
        if faulty_lines.is_empty() {
            return Err(EvalError::Catalog(format!(
                "fault `{}` has an empty faulty_lines list",
                self.id
            )));
        }
        Ok(FaultSpec {
            program: base_dir.join(self.program.ok_or_else(|| missing("program"))?),
            function: self.function.ok_or_else(|| missing("function"))?,
            suite: base_dir.join(self.suite.ok_or_else(|| missing("suite"))?),
            faulty_lines,
            note: self.note,
            id: self.id,
        })
    }
}
