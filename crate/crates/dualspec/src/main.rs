//! `dualspec`: collect control- and data-flow spectra from IMPX test
//! runs, rank suspicious elements, and evaluate the two spectra against
//! each other on a fault catalog.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dualspec::eval::{
    self, parse_catalog, Alternative, ComparisonReport, EvalError, EvalOptions, Evaluation,
};
use dualspec::metrics::{
    parse_metric_selection, rank, ranking_csv, MetricError, MetricId, SpectrumKind,
};
use dualspec::runner::{parse_suite, Outcome, RunnerError, TestRunner, DEFAULT_STEP_BUDGET};
use dualspec::spectra::{SpectraError, SpectrumMatrix, Verdict};
use dualspec::timing::{accumulate, time_phases};
use dualspec::{requirements_for, LangError};

#[derive(Parser)]
#[command(
    name = "dualspec",
    version,
    about = "Data- vs control-flow spectrum fault localization toolkit",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the static testing requirements of a function.
    Reqs(ReqsArgs),
    /// Run a test suite and collect spectra.
    Run(RunArgs),
    /// Rank the elements of a spectrum matrix by suspiciousness.
    Rank(RankArgs),
    /// Evaluate data- vs control-flow spectra over a fault catalog.
    Evaluate(EvaluateArgs),
    /// Validate a spectrum matrix CSV and print a summary.
    ImportMatrix(ImportMatrixArgs),
    /// Pretty-print an evaluation report.
    Report(ReportArgs),
}

#[derive(Args)]
struct ReqsArgs {
    /// IMPX program file.
    program: PathBuf,
    /// Function to analyze.
    #[arg(long)]
    function: String,
    #[arg(long, value_enum, default_value_t = ReqsFormat::Text)]
    format: ReqsFormat,
    /// Also print the annotated control-flow graph.
    #[arg(long)]
    dump_cfg: bool,
    /// Drop associations whose definition and use share a block.
    #[arg(long)]
    ba_dua_compat: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReqsFormat {
    Text,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    program: PathBuf,
    suite: PathBuf,
    /// Target function; defaults to the suite's function.
    #[arg(long)]
    function: Option<String>,
    /// Write the collected spectrum matrix to this CSV file.
    #[arg(long)]
    export_matrix: Option<PathBuf>,
    /// Measure phase timings and overhead ratios.
    #[arg(long)]
    time: bool,
    #[arg(long, default_value_t = DEFAULT_STEP_BUDGET)]
    step_budget: u64,
    /// Worker threads for test execution; defaults to the core count.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    ba_dua_compat: bool,
}

#[derive(Args)]
struct RankArgs {
    /// Spectrum matrix CSV.
    matrix: PathBuf,
    #[arg(long)]
    metric: String,
    #[arg(long, value_enum)]
    spectrum: SpectrumArg,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpectrumArg {
    Line,
    Dua,
}

impl From<SpectrumArg> for SpectrumKind {
    fn from(value: SpectrumArg) -> Self {
        match value {
            SpectrumArg::Line => SpectrumKind::Line,
            SpectrumArg::Dua => SpectrumKind::Dua,
        }
    }
}

#[derive(Args)]
struct EvaluateArgs {
    /// Fault catalog file.
    catalog: PathBuf,
    /// Metric ids, or `all`.
    #[arg(long = "metric", default_values_t = [String::from("all")])]
    metrics: Vec<String>,
    #[arg(long, value_enum, default_value_t = SpectrumBothArg::Both)]
    spectrum: SpectrumBothArg,
    /// Output directory (report.json, curves/, rankings/, matrices/).
    #[arg(long)]
    out: PathBuf,
    /// Do not recount a line already inspected via an earlier DUA.
    #[arg(long)]
    dedup_lines: bool,
    /// Inspection cap in lines, 1..=99.
    #[arg(long, default_value_t = eval::DEFAULT_CAP)]
    cap: u32,
    /// Two-sided Wilcoxon test instead of the one-sided default.
    #[arg(long)]
    two_sided: bool,
    #[arg(long)]
    time: bool,
    #[arg(long, default_value_t = DEFAULT_STEP_BUDGET)]
    step_budget: u64,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    ba_dua_compat: bool,
    /// Also write per-fault ranking CSVs under rankings/.
    #[arg(long)]
    export_rankings: bool,
    /// Also write per-fault matrices under matrices/.
    #[arg(long)]
    export_matrices: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpectrumBothArg {
    Line,
    Dua,
    Both,
}

#[derive(Args)]
struct ImportMatrixArgs {
    matrix: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    report: PathBuf,
}

enum CliError {
    /// Bad invocation or malformed configuration input: exit 1.
    Usage(String),
    /// The analysis itself cannot proceed: exit 2.
    Analysis(String),
}

impl From<LangError> for CliError {
    fn from(e: LangError) -> Self {
        CliError::Analysis(e.to_string())
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        match e {
            MetricError::UnknownMetric(_) => CliError::Usage(e.to_string()),
            _ => CliError::Analysis(e.to_string()),
        }
    }
}

impl From<SpectraError> for CliError {
    fn from(e: SpectraError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<RunnerError> for CliError {
    fn from(e: RunnerError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Catalog(_) | EvalError::Io { .. } | EvalError::Runner(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Analysis(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    // A closed stdout (e.g. piping into `head`) is an early exit, not a
    // crash worth a backtrace.
    let default_hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(move |info| {
        let broken_pipe = info
            .payload()
            .downcast_ref::<String>()
            .is_some_and(|msg| msg.contains("Broken pipe"));
        if broken_pipe {
            std::process::exit(0);
        }
        default_hook(info);
    }));

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not usage errors.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let result = match cli.command {
        Command::Reqs(args) => cmd_reqs(args),
        Command::Run(args) => cmd_run(args),
        Command::Rank(args) => cmd_rank(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::ImportMatrix(args) => cmd_import_matrix(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Analysis(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

/// All writes go through a temp file and rename, so a crash never leaves
/// a half-written artifact.
fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let write = || -> io::Result<()> {
        let file_name = path
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| io::Error::other("path has no file name"))?;
        let tmp = path.with_file_name(format!(".{file_name}.tmp"));
        fs::write(&tmp, contents)?;
        fs::rename(&tmp, path)?;
        Ok(())
    };
    write().map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn cmd_reqs(args: ReqsArgs) -> Result<(), CliError> {
    let source = read_file(&args.program)?;
    let program = dualspec::load_program(&source, &args.program.display().to_string())?;
    let (graph, reqs) = requirements_for(&program, &args.function, args.ba_dua_compat)?;

    if args.dump_cfg {
        print!("{}", graph.dump());
    }
    match args.format {
        ReqsFormat::Text => {
            println!(
                "function {}: {} nodes, {} edges, {} duas",
                reqs.function,
                reqs.nodes.len(),
                reqs.edges.len(),
                reqs.duas.len()
            );
            let nodes: Vec<String> = reqs.nodes.iter().map(|n| n.to_string()).collect();
            println!("nodes: {}", nodes.join(" "));
            let edges: Vec<String> = reqs
                .edges
                .iter()
                .map(|(a, b)| format!("({a},{b})"))
                .collect();
            println!("edges: {}", edges.join(" "));
            println!("duas:");
            for dua in &reqs.duas {
                println!("  {}", dua.triple());
            }
        }
        ReqsFormat::Csv => {
            println!("element");
            for element in SpectrumMatrix::element_universe(&reqs) {
                println!("{element}");
            }
        }
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let source = read_file(&args.program)?;
    let program = dualspec::load_program(&source, &args.program.display().to_string())?;
    let suite_text = read_file(&args.suite)?;
    let suite = parse_suite(&suite_text)?;
    let function = match &args.function {
        Some(name) => name.clone(),
        None => suite
            .first()
            .map(|t| t.function.clone())
            .ok_or_else(|| CliError::Usage("empty suite and no --function given".into()))?,
    };
    let (_, reqs) = requirements_for(&program, &function, args.ba_dua_compat)?;

    let runner = TestRunner::new(&program, &reqs)
        .map_err(CliError::from)?
        .with_step_budget(args.step_budget);
    let executions =
        in_pool(args.jobs, || runner.run_suite_executions(&suite))?.map_err(CliError::from)?;

    let mut failing = 0usize;
    for exec in &executions {
        let verdict = match exec.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => {
                failing += 1;
                "fail"
            }
        };
        let outcome = match exec.outcome {
            Outcome::Value(v) => format!("value={v}"),
            Outcome::RuntimeError(fault) => {
                format!("error={}@line{}", fault.kind, fault.line)
            }
        };
        println!(
            "{} {verdict} {outcome} lines={} duas={}",
            exec.test,
            exec.covered_lines.len(),
            exec.covered_duas.len()
        );
    }
    println!(
        "{} tests, {} passed, {failing} failed",
        executions.len(),
        executions.len() - failing
    );

    if let Some(path) = &args.export_matrix {
        let matrix = runner.matrix_from_executions(&executions);
        write_atomic(path, &matrix.export_csv())?;
        println!("matrix written to {}", path.display());
    }

    if args.time {
        let metrics = dualspec::metrics::ALL_METRICS.to_vec();
        let report = in_pool(args.jobs, || {
            time_phases(&program, &reqs, &suite, &metrics, args.step_budget)
        })?
        .map_err(CliError::from)?;
        let json =
            serde_json::to_string_pretty(&report).map_err(|e| CliError::Analysis(e.to_string()))?;
        println!("{json}");
    }
    Ok(())
}

fn cmd_rank(args: RankArgs) -> Result<(), CliError> {
    let metric: MetricId = args.metric.parse().map_err(CliError::from)?;
    let text = read_file(&args.matrix)?;
    let matrix = SpectrumMatrix::import_csv(&text)?;
    let list = rank(&matrix, args.spectrum.into(), metric)?;
    let csv = ranking_csv(&list);
    match &args.out {
        Some(path) => write_atomic(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    if !(1..=99).contains(&args.cap) {
        return Err(CliError::Usage(format!(
            "--cap must be in 1..=99, got {}",
            args.cap
        )));
    }
    let metrics = parse_metric_selection(&args.metrics)?;
    let spectra: Vec<SpectrumKind> = match args.spectrum {
        SpectrumBothArg::Line => vec![SpectrumKind::Line],
        SpectrumBothArg::Dua => vec![SpectrumKind::Dua],
        SpectrumBothArg::Both => vec![SpectrumKind::Dua, SpectrumKind::Line],
    };
    let catalog_text = read_file(&args.catalog)?;
    let base_dir = args
        .catalog
        .parent()
        .unwrap_or(Path::new("."))
        .to_path_buf();
    let faults = parse_catalog(&catalog_text, &base_dir)?;

    let options = EvalOptions {
        dedup_lines: args.dedup_lines,
        cap: args.cap,
        alternative: if args.two_sided {
            Alternative::TwoSided
        } else {
            Alternative::OneSidedLess
        },
        ba_dua_compat: args.ba_dua_compat,
        step_budget: args.step_budget,
    };

    let evaluation = in_pool(args.jobs, || {
        eval::evaluate_catalog(&faults, &metrics, &spectra, &options)
    })??;

    write_outputs(&args, &evaluation)?;

    for outcome in &evaluation.faults {
        println!(
            "fault {}: {} tests, {} failing, {} duas",
            outcome.spec.id,
            outcome.matrix.total_tests(),
            outcome.failing_tests,
            outcome.reqs.duas.len()
        );
    }
    println!(
        "report written to {} ({} metrics, {} fault(s))",
        args.out.join("report.json").display(),
        evaluation.report.metrics.len(),
        evaluation.report.fault_count
    );

    if args.time {
        let mut reports = Vec::new();
        for fault in &faults {
            let source = read_file(&fault.program)?;
            let program = dualspec::load_program(&source, &fault.program.display().to_string())?;
            let (_, reqs) = requirements_for(&program, &fault.function, args.ba_dua_compat)?;
            let suite = parse_suite(&read_file(&fault.suite)?)?;
            let report = in_pool(args.jobs, || {
                time_phases(&program, &reqs, &suite, &metrics, args.step_budget)
            })?
            .map_err(CliError::from)?;
            reports.push(report);
        }
        let total =
            accumulate(&reports).ok_or_else(|| CliError::Analysis("no timing data".into()))?;
        let json =
            serde_json::to_string_pretty(&total).map_err(|e| CliError::Analysis(e.to_string()))?;
        println!("{json}");
    }
    Ok(())
}

fn write_outputs(args: &EvaluateArgs, evaluation: &Evaluation) -> Result<(), CliError> {
    let out = &args.out;
    let mkdir = |p: &Path| {
        fs::create_dir_all(p)
            .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", p.display())))
    };
    mkdir(out)?;
    let report_json = serde_json::to_string_pretty(&evaluation.report)
        .map_err(|e| CliError::Analysis(e.to_string()))?;
    write_atomic(&out.join("report.json"), &format!("{report_json}\n"))?;

    let curves_dir = out.join("curves");
    mkdir(&curves_dir)?;
    for (name, metric_report) in &evaluation.report.metrics {
        for (kind, stats) in [("line", &metric_report.line), ("dua", &metric_report.dua)] {
            if let Some(stats) = stats {
                let mut csv = String::from("x,faults_found\n");
                for (i, found) in stats.curve.iter().enumerate() {
                    csv.push_str(&format!("{},{found}\n", i + 1));
                }
                write_atomic(&curves_dir.join(format!("{name}_{kind}.csv")), &csv)?;
            }
        }
    }

    if args.export_rankings {
        let dir = out.join("rankings");
        mkdir(&dir)?;
        for outcome in &evaluation.faults {
            for ranking in &outcome.rankings {
                let path = dir.join(format!(
                    "{}_{}_{}.csv",
                    outcome.spec.id,
                    ranking.metric.name(),
                    ranking.spectrum.name()
                ));
                write_atomic(&path, &ranking_csv(ranking))?;
            }
        }
    }
    if args.export_matrices {
        let dir = out.join("matrices");
        mkdir(&dir)?;
        for outcome in &evaluation.faults {
            write_atomic(
                &dir.join(format!("{}.csv", outcome.spec.id)),
                &outcome.matrix.export_csv(),
            )?;
        }
    }
    Ok(())
}

fn cmd_import_matrix(args: ImportMatrixArgs) -> Result<(), CliError> {
    let text = read_file(&args.matrix)?;
    let matrix = SpectrumMatrix::import_csv(&text)?;
    let lines = matrix.elements.iter().filter(|e| e.is_line()).count();
    let duas = matrix.elements.iter().filter(|e| e.is_dua()).count();
    println!(
        "{}: {} tests ({} failing), {} elements ({lines} lines, {duas} duas)",
        args.matrix.display(),
        matrix.total_tests(),
        matrix.failing_tests(),
        matrix.elements.len()
    );
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), CliError> {
    let text = read_file(&args.report)?;
    let report: ComparisonReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("malformed report: {e}")))?;
    println!(
        "{} fault(s), cap {}, dedup {}, alternative {}",
        report.fault_count,
        report.cap,
        if report.dedup_lines { "on" } else { "off" },
        report.alternative.name(),
    );
    println!(
        "{:<12} {:>8} {:>14} {:>11} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "metric",
        "p-value",
        "effect size",
        "B-T-W",
        "MinDF",
        "MinCF",
        "Q1DF",
        "Q1CF",
        "Q2DF",
        "Q2CF",
        "Q3DF",
        "Q3CF"
    );
    for (name, metric) in &report.metrics {
        let (p, effect, btw) = match &metric.comparison {
            Some(c) => (
                format!("{:.4}", c.p_value),
                format!(
                    "{:.3} ({})",
                    c.cliffs_delta,
                    magnitude_letter(c.magnitude.name())
                ),
                format!("{}-{}-{}", c.better, c.tied, c.worse),
            ),
            None => ("-".into(), "-".into(), "-".into()),
        };
        let quartile = |s: &Option<eval::SpectrumStats>, pick: fn(&eval::SpectrumStats) -> f64| {
            s.as_ref()
                .map(|s| format!("{:.1}", pick(s)))
                .unwrap_or_else(|| "-".into())
        };
        println!(
            "{name:<12} {p:>8} {effect:>14} {btw:>11} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
            quartile(&metric.dua, |s| s.min),
            quartile(&metric.line, |s| s.min),
            quartile(&metric.dua, |s| s.q1),
            quartile(&metric.line, |s| s.q1),
            quartile(&metric.dua, |s| s.q2),
            quartile(&metric.line, |s| s.q2),
            quartile(&metric.dua, |s| s.q3),
            quartile(&metric.line, |s| s.q3),
        );
    }
    Ok(())
}

fn magnitude_letter(name: &str) -> &'static str {
    match name {
        "insignificant" => "I",
        "small" => "S",
        "medium" => "M",
        _ => "L",
    }
}
