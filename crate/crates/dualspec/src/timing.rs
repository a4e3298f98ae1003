//! Wall-clock phase timing for the efficiency comparison: plain
//! execution baseline, then the control-flow and data-flow pipelines,
//! each split into test execution, spectra collection, suspiciousness
//! computation, and list generation.

use std::time::Instant;

use serde::Serialize;

use crate::dataflow::RequirementSet;
use crate::lang::Program;
use crate::metrics::{rank, ranking_csv, MetricId, SpectrumKind};
use crate::runner::{CollectMode, RunnerError, TestCase, TestRunner};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhaseTimings {
    pub test_execution_s: f64,
    pub spectra_collection_s: f64,
    pub suspiciousness_s: f64,
    pub list_generation_s: f64,
    pub total_s: f64,
}

/// Overhead percentages:
/// (a - b) / b * 100. `None` when the denominator is zero.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OverheadRatios {
    pub df_over_baseline_pct: Option<f64>,
    pub cf_over_baseline_pct: Option<f64>,
    pub df_over_cf_pct: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TimingReport {
    pub baseline_s: f64,
    pub df: PhaseTimings,
    pub cf: PhaseTimings,
    pub ratios: OverheadRatios,
}

fn overhead(a: f64, b: f64) -> Option<f64> {
    if b > 0.0 {
        Some((a - b) / b * 100.0)
    } else {
        None
    }
}

fn seconds(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

/// Measures one program + suite. The suspiciousness and list phases run
/// every selected metric over the mode's spectrum kind.
pub fn time_phases(
    program: &Program,
    reqs: &RequirementSet,
    suite: &[TestCase],
    metrics: &[MetricId],
    step_budget: u64,
) -> Result<TimingReport, RunnerError> {
    // Baseline: uninstrumented interpretation.
    let baseline_runner = TestRunner::new(program, reqs)?
        .with_mode(CollectMode::Plain)
        .with_step_budget(step_budget);
    let start = Instant::now();
    baseline_runner.run_suite_executions(suite)?;
    let baseline_s = seconds(start);

    let cf = time_pipeline(
        program,
        reqs,
        suite,
        metrics,
        step_budget,
        CollectMode::ControlFlow,
    )?;
    let df = time_pipeline(
        program,
        reqs,
        suite,
        metrics,
        step_budget,
        CollectMode::DataFlow,
    )?;

    Ok(TimingReport {
        baseline_s,
        df,
        cf,
        ratios: OverheadRatios {
            df_over_baseline_pct: overhead(df.total_s, baseline_s),
            cf_over_baseline_pct: overhead(cf.total_s, baseline_s),
            df_over_cf_pct: overhead(df.total_s, cf.total_s),
        },
    })
}

fn time_pipeline(
    program: &Program,
    reqs: &RequirementSet,
    suite: &[TestCase],
    metrics: &[MetricId],
    step_budget: u64,
    mode: CollectMode,
) -> Result<PhaseTimings, RunnerError> {
    let spectrum = match mode {
        CollectMode::DataFlow => SpectrumKind::Dua,
        _ => SpectrumKind::Line,
    };
    let runner = TestRunner::new(program, reqs)?
        .with_mode(mode)
        .with_step_budget(step_budget);

    let start = Instant::now();
    let executions = runner.run_suite_executions(suite)?;
    let test_execution_s = seconds(start);

    let start = Instant::now();
    let matrix = runner.matrix_from_executions(&executions);
    let spectra_collection_s = seconds(start);

    let rankable = matrix.failing_tests() > 0;
    let start = Instant::now();
    let mut scores = 0usize;
    if rankable {
        let total = matrix.total_tests() as u32;
        for &metric in metrics {
            for idx in 0..matrix.elements.len() {
                let counts = matrix.tally_at(idx);
                let s = crate::metrics::score(metric, &counts, total);
                if s.is_finite() {
                    scores += 1;
                }
            }
        }
    }
    let suspiciousness_s = seconds(start);

    let start = Instant::now();
    let mut rendered = 0usize;
    if rankable {
        for &metric in metrics {
            if let Ok(list) = rank(&matrix, spectrum, metric) {
                rendered += ranking_csv(&list).len();
            }
        }
    }
    let list_generation_s = seconds(start);

    // Keep the measured work observable so it cannot be optimized away.
    std::hint::black_box((scores, rendered));

    Ok(PhaseTimings {
        test_execution_s,
        spectra_collection_s,
        suspiciousness_s,
        list_generation_s,
        total_s: test_execution_s + spectra_collection_s + suspiciousness_s + list_generation_s,
    })
}

/// Sums phase timings across catalog entries.
pub fn accumulate(reports: &[TimingReport]) -> Option<TimingReport> {
    if reports.is_empty() {
        return None;
    }
    let sum_phases = |pick: fn(&TimingReport) -> PhaseTimings| -> PhaseTimings {
        let mut acc = PhaseTimings {
            test_execution_s: 0.0,
            spectra_collection_s: 0.0,
            suspiciousness_s: 0.0,
            list_generation_s: 0.0,
            total_s: 0.0,
        };
        for report in reports {
            let p = pick(report);
            acc.test_execution_s += p.test_execution_s;
            acc.spectra_collection_s += p.spectra_collection_s;
            acc.suspiciousness_s += p.suspiciousness_s;
            acc.list_generation_s += p.list_generation_s;
            acc.total_s += p.total_s;
        }
        acc
    };
    let baseline_s: f64 = reports.iter().map(|r| r.baseline_s).sum();
    let df = sum_phases(|r| r.df);
    let cf = sum_phases(|r| r.cf);
    Some(TimingReport {
        baseline_s,
        df,
        cf,
        ratios: OverheadRatios {
            df_over_baseline_pct: overhead(df.total_s, baseline_s),
            cf_over_baseline_pct: overhead(cf.total_s, baseline_s),
            df_over_cf_pct: overhead(df.total_s, cf.total_s),
        },
    })
}
