//! Evaluation methodology: map rankings to inspected-line costs per
//! fault, cap at 99 lines, build effectiveness curves, and compare the
//! two spectra with B-T-W tallies, quartiles, Wilcoxon signed-rank, and
//! Cliff's delta.

mod catalog;
pub mod stats;

pub use catalog::{parse_catalog, FaultSpec};
pub use stats::{
    cliffs_delta, magnitude, quartiles, wilcoxon_signed_rank, Alternative, Magnitude, Quartiles,
    StatsError, WilcoxonResult,
};

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataflow::{all_uses_with, Dua, RequirementSet};
use crate::lang::LangError;
use crate::metrics::{rank, MetricError, MetricId, RankedList, SpectrumKind};
use crate::runner::{parse_suite, RunnerError, TestRunner, DEFAULT_STEP_BUDGET};
use crate::spectra::{ElementId, SpectrumMatrix};

/// Cost recorded when the fault is not reached within the cap.
pub const NOT_FOUND_COST: u32 = 100;
pub const DEFAULT_CAP: u32 = 99;
/// Curves always span x = 1..=99 suspicious lines.
pub const CURVE_MAX_X: u32 = 99;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("catalog error: {0}")]
    Catalog(String),
    #[error("fault `{fault}`: {msg}")]
    Fault { fault: String, msg: String },
    #[error("empty ranking")]
    EmptyRanking,
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Runner(#[from] RunnerError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Lines a DUA projects onto: definition line, use line, and for p-uses
/// the first line of the branch target. Duplicates within one DUA
/// collapse, order preserved.
pub fn dua_lines(dua: &Dua) -> Vec<u32> {
    let mut lines = Vec::with_capacity(3);
    for line in [Some(dua.def_line), Some(dua.use_line), dua.target_line]
        .into_iter()
        .flatten()
    {
        if !lines.contains(&line) {
            lines.push(line);
        }
    }
    lines
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub fault: String,
    pub metric: String,
    pub spectrum: String,
    /// Inspected lines until the fault, in [1, 100]; 100 is the
    /// not-found sentinel.
    pub cost: u32,
    pub found: bool,
}

/// Inspected-line cost of one ranking against one fault.
///
/// Line spectrum: the worst-case position of the best-ranked faulty line.
/// DUA spectrum: tie groups are walked in descending score and every
/// DUA's projected lines are added; the group containing the first faulty
/// DUA is counted whole. With `dedup` on, previously counted lines are
/// not recounted.
pub fn cost_to_fault(
    ranking: &RankedList,
    faulty_lines: &BTreeSet<u32>,
    dua_lines_of: &HashMap<ElementId, Vec<u32>>,
    dedup: bool,
    cap: u32,
) -> Result<(u32, bool), EvalError> {
    if ranking.entries.is_empty() {
        return Err(EvalError::EmptyRanking);
    }
    match ranking.spectrum {
        SpectrumKind::Line => {
            let best = ranking
                .entries
                .iter()
                .filter(|e| match &e.element {
                    ElementId::Line(l) => faulty_lines.contains(l),
                    _ => false,
                })
                .map(|e| e.worst_case_position as u32)
                .min();
            Ok(match best {
                Some(cost) if cost <= cap => (cost, true),
                _ => (NOT_FOUND_COST, false),
            })
        }
        SpectrumKind::Dua => {
            let mut total = 0u32;
            let mut seen: BTreeSet<u32> = BTreeSet::new();
            for group in ranking.tie_groups() {
                let mut group_has_fault = false;
                for entry in group {
                    let lines = dua_lines_of
                        .get(&entry.element)
                        .expect("ranked DUA element has a line projection");
                    if lines.iter().any(|l| faulty_lines.contains(l)) {
                        group_has_fault = true;
                    }
                    if dedup {
                        for &line in lines {
                            if seen.insert(line) {
                                total += 1;
                            }
                        }
                    } else {
                        total += lines.len() as u32;
                    }
                }
                if group_has_fault {
                    return Ok(if total <= cap {
                        (total, true)
                    } else {
                        (NOT_FOUND_COST, false)
                    });
                }
                if total > cap {
                    return Ok((NOT_FOUND_COST, false));
                }
            }
            Ok((NOT_FOUND_COST, false))
        }
    }
}

/// faults_found(x) = |{records with cost <= x}| for x in 1..=max_x.
pub fn effectiveness_curve(costs: &[u32], max_x: u32) -> Vec<(u32, usize)> {
    (1..=max_x)
        .map(|x| (x, costs.iter().filter(|c| **c <= x).count()))
        .collect()
}

/// B-T-W tally: how often the first side costs less, the same, or more.
pub fn compare(df: &[u32], cf: &[u32]) -> Result<(usize, usize, usize), StatsError> {
    if df.len() != cf.len() {
        return Err(StatsError::LengthMismatch(df.len(), cf.len()));
    }
    let better = df.iter().zip(cf).filter(|(d, c)| d < c).count();
    let tied = df.iter().zip(cf).filter(|(d, c)| d == c).count();
    let worse = df.len() - better - tied;
    Ok((better, tied, worse))
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub dedup_lines: bool,
    pub cap: u32,
    pub alternative: Alternative,
    pub ba_dua_compat: bool,
    pub step_budget: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            dedup_lines: false,
            cap: DEFAULT_CAP,
            alternative: Alternative::OneSidedLess,
            ba_dua_compat: false,
            step_budget: DEFAULT_STEP_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumStats {
    pub min: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    /// faults found at x = 1..=99.
    pub curve: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairedComparison {
    pub p_value: f64,
    pub degenerate: bool,
    pub exact: bool,
    pub cliffs_delta: f64,
    pub magnitude: Magnitude,
    pub better: usize,
    pub tied: usize,
    pub worse: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<SpectrumStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dua: Option<SpectrumStats>,
    /// Present when both spectra were evaluated: DUA vs line.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<PairedComparison>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub fault_count: usize,
    pub cap: u32,
    pub dedup_lines: bool,
    pub ba_dua_compat: bool,
    pub alternative: Alternative,
    pub metrics: BTreeMap<String, MetricReport>,
    pub records: Vec<EvalRecord>,
}

/// Everything computed for one catalog fault, kept around so the CLI can
/// export matrices and rankings.
pub struct FaultOutcome {
    pub spec: FaultSpec,
    pub reqs: RequirementSet,
    pub matrix: SpectrumMatrix,
    pub rankings: Vec<RankedList>,
    pub failing_tests: usize,
}

pub struct Evaluation {
    pub report: ComparisonReport,
    pub faults: Vec<FaultOutcome>,
}

fn read_file(path: &std::path::Path) -> Result<String, EvalError> {
    std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Runs the full methodology over a fault catalog.
pub fn evaluate_catalog(
    faults: &[FaultSpec],
    metrics: &[MetricId],
    spectra: &[SpectrumKind],
    options: &EvalOptions,
) -> Result<Evaluation, EvalError> {
    let mut outcomes = Vec::new();
    let mut records = Vec::new();
    // (metric, spectrum) -> per-fault costs in catalog order.
    let mut costs: BTreeMap<(MetricId, SpectrumKind), Vec<u32>> = BTreeMap::new();

    for fault in faults {
        let outcome = evaluate_fault(fault, metrics, spectra, options)?;
        let dua_line_map = dua_line_map(&outcome.reqs);
        for ranking in &outcome.rankings {
            let (cost, found) = cost_to_fault(
                ranking,
                &fault.faulty_lines,
                &dua_line_map,
                options.dedup_lines,
                options.cap,
            )?;
            records.push(EvalRecord {
                fault: fault.id.clone(),
                metric: ranking.metric.name().to_string(),
                spectrum: ranking.spectrum.name().to_string(),
                cost,
                found,
            });
            costs
                .entry((ranking.metric, ranking.spectrum))
                .or_default()
                .push(cost);
        }
        outcomes.push(outcome);
    }

    let mut metric_reports = BTreeMap::new();
    for &metric in metrics {
        let line_costs = costs.get(&(metric, SpectrumKind::Line));
        let dua_costs = costs.get(&(metric, SpectrumKind::Dua));
        let side = |costs: Option<&Vec<u32>>| -> Result<Option<SpectrumStats>, EvalError> {
            match costs {
                None => Ok(None),
                Some(costs) => {
                    let values: Vec<f64> = costs.iter().map(|&c| f64::from(c)).collect();
                    let q = quartiles(&values)?;
                    let curve = effectiveness_curve(costs, CURVE_MAX_X)
                        .into_iter()
                        .map(|(_, found)| found)
                        .collect();
                    Ok(Some(SpectrumStats {
                        min: q.min,
                        q1: q.q1,
                        q2: q.q2,
                        q3: q.q3,
                        curve,
                    }))
                }
            }
        };
        let comparison = match (dua_costs, line_costs) {
            (Some(df), Some(cf)) => {
                let df_f: Vec<f64> = df.iter().map(|&c| f64::from(c)).collect();
                let cf_f: Vec<f64> = cf.iter().map(|&c| f64::from(c)).collect();
                let wilcoxon = wilcoxon_signed_rank(&df_f, &cf_f, options.alternative)?;
                let (delta, mag) = cliffs_delta(&df_f, &cf_f)?;
                let (better, tied, worse) = compare(df, cf)?;
                Some(PairedComparison {
                    p_value: wilcoxon.p_value,
                    degenerate: wilcoxon.degenerate,
                    exact: wilcoxon.exact,
                    cliffs_delta: delta,
                    magnitude: mag,
                    better,
                    tied,
                    worse,
                })
            }
            _ => None,
        };
        metric_reports.insert(
            metric.name().to_string(),
            MetricReport {
                line: side(line_costs)?,
                dua: side(dua_costs)?,
                comparison,
            },
        );
    }

    let report = ComparisonReport {
        fault_count: faults.len(),
        cap: options.cap,
        dedup_lines: options.dedup_lines,
        ba_dua_compat: options.ba_dua_compat,
        alternative: options.alternative,
        metrics: metric_reports,
        records,
    };
    Ok(Evaluation {
        report,
        faults: outcomes,
    })
}

pub fn dua_line_map(reqs: &RequirementSet) -> HashMap<ElementId, Vec<u32>> {
    reqs.duas
        .iter()
        .map(|d| (ElementId::from_dua(d), dua_lines(d)))
        .collect()
}

fn evaluate_fault(
    fault: &FaultSpec,
    metrics: &[MetricId],
    spectra: &[SpectrumKind],
    options: &EvalOptions,
) -> Result<FaultOutcome, EvalError> {
    let err = |msg: String| EvalError::Fault {
        fault: fault.id.clone(),
        msg,
    };

    let source = read_file(&fault.program)?;
    let program = crate::load_program(&source, &fault.program.display().to_string())?;
    let func = program
        .function(&fault.function)
        .ok_or_else(|| err(format!("program has no function `{}`", fault.function)))?;

    let executable = func.executable_lines();
    if let Some(bad) = fault.faulty_lines.iter().find(|l| !executable.contains(l)) {
        return Err(err(format!(
            "faulty line {bad} is not an executable line of `{}`",
            fault.function
        )));
    }

    let cfg = crate::cfg::annotate_def_use(crate::cfg::build_cfg(func), func);
    let reqs = all_uses_with(&cfg, options.ba_dua_compat);

    let suite_text = read_file(&fault.suite)?;
    let suite = parse_suite(&suite_text)?;
    if suite.is_empty() {
        return Err(err("suite has no tests".into()));
    }
    if let Some(t) = suite.iter().find(|t| t.function != fault.function) {
        return Err(err(format!(
            "test `{}` targets `{}`, catalog says `{}`",
            t.name, t.function, fault.function
        )));
    }

    let runner = TestRunner::new(&program, &reqs)?.with_step_budget(options.step_budget);
    let matrix = runner.run_suite(&suite)?;
    let failing_tests = matrix.failing_tests();
    if failing_tests == 0 {
        return Err(err("no failing test; ranking is undefined".into()));
    }

    let mut rankings = Vec::new();
    for &metric in metrics {
        for &spectrum in spectra {
            rankings.push(rank(&matrix, spectrum, metric)?);
        }
    }

    Ok(FaultOutcome {
        spec: fault.clone(),
        reqs,
        matrix,
        rankings,
        failing_tests,
    })
}
