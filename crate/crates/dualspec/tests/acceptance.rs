//! Acceptance suite: one test per criterion, each printing a pass line.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the
//! per-criterion lines.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::process::Command;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use dualspec::cfg::{annotate_def_use, build_cfg};
use dualspec::dataflow::{all_uses, DuaKey};
use dualspec::eval::{
    cost_to_fault, dua_line_map, parse_catalog, wilcoxon_signed_rank, Alternative,
};
use dualspec::metrics::{rank, score, MetricId, SpectrumKind, ALL_METRICS};
use dualspec::runner::{parse_suite, ArgValue, Expected, TestCase, TestRunner};
use dualspec::spectra::{Counts, ElementId, Verdict};

use common::{bin_path, corpus_dir, duas_from_trace, gen_loop_free_program, oracle_all_uses};

fn read_corpus(name: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(name)).unwrap()
}

fn pass(criterion: &str) {
    println!("acceptance {criterion}: pass");
}

/// Criterion 1: the bundled max program yields exactly the expected
/// requirement sets: 6 nodes, 7 edges, and the 25 all-uses DUAs.
#[test]
fn criterion_01_table_i_reproduction() {
    let start = Instant::now();
    let program = dualspec::load_program(&read_corpus("max.impx"), "max.impx").unwrap();
    let (_, reqs) = dualspec::requirements_for(&program, "max", false).unwrap();

    assert_eq!(reqs.nodes, vec![1, 2, 3, 4, 5, 6]);
    assert_eq!(
        reqs.edges,
        vec![(1, 2), (2, 3), (2, 6), (3, 4), (3, 5), (4, 5), (5, 2)]
    );
    let expected: BTreeSet<String> = [
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
    ]
    .into_iter()
    .map(String::from)
    .collect();
    assert_eq!(reqs.dua_triples(), expected);
    assert!(expected.contains("(1, 1, i)") && expected.contains("(1, 1, array)"));

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    pass("criterion 1 (requirement-set reproduction)");
}

/// Criterion 2: the five-test suite reproduces the expected verdicts,
/// per-line coverage, tallies, and Ochiai scores.
#[test]
fn criterion_02_spectra_and_ochiai_reproduction() {
    let program = dualspec::load_program(&read_corpus("max.impx"), "max.impx").unwrap();
    let (_, reqs) = dualspec::requirements_for(&program, "max", false).unwrap();
    let suite = parse_suite(&read_corpus("max.tests")).unwrap();
    let matrix = dualspec::runner::run_suite(&program, &reqs, &suite).unwrap();

    assert_eq!(
        matrix.verdicts,
        vec![
            Verdict::Pass,
            Verdict::Pass,
            Verdict::Pass,
            Verdict::Fail,
            Verdict::Fail
        ]
    );

    // Coverage bullets per executable line, in t1..t5 order.
    let coverage: BTreeMap<u32, [bool; 5]> = BTreeMap::from([
        (3, [true, true, true, true, true]),
        (4, [true, true, true, true, true]),
        (5, [true, true, true, true, false]),
        (7, [true, true, true, true, false]),
        (8, [true, true, true, false, false]),
        (9, [true, true, true, true, false]),
        (11, [true, true, true, true, false]),
    ]);
    for (line, expected) in &coverage {
        let idx = matrix
            .elements
            .iter()
            .position(|e| e == &ElementId::Line(*line))
            .unwrap();
        let got: Vec<bool> = matrix.rows.iter().map(|row| row[idx]).collect();
        assert_eq!(&got[..], expected, "coverage of line {line}");
    }

    // (c_np, c_ep, c_nf, c_ef) columns and the Ochiai scores.
    let tallies: BTreeMap<u32, (u32, u32, u32, u32, f64)> = BTreeMap::from([
        (3, (0, 3, 0, 2, 0.63)),
        (4, (0, 3, 0, 2, 0.63)),
        (5, (0, 3, 1, 1, 0.35)),
        (7, (0, 3, 1, 1, 0.35)),
        (8, (0, 3, 2, 0, 0.00)),
        (9, (0, 3, 1, 1, 0.35)),
        (11, (0, 3, 1, 1, 0.35)),
    ]);
    for (line, (c_np, c_ep, c_nf, c_ef, m_o)) in &tallies {
        let counts = matrix.tally(&ElementId::Line(*line)).unwrap();
        assert_eq!(
            (counts.c_np, counts.c_ep, counts.c_nf, counts.c_ef),
            (*c_np, *c_ep, *c_nf, *c_ef),
            "tally of line {line}"
        );
        let got = score(MetricId::Ochiai, &counts, matrix.total_tests() as u32);
        assert!(
            (got - m_o).abs() <= 0.005,
            "ochiai of line {line}: {got} vs {m_o}"
        );
    }
    pass("criterion 2 (spectra, tallies, and Ochiai scores)");
}

/// Criterion 3: Ochiai puts faulty line 4 at worst-case position 2 in the
/// line ranking, and the DUA-spectrum inspected-line cost is exactly 4.
#[test]
fn criterion_03_worked_ranking() {
    let program = dualspec::load_program(&read_corpus("max.impx"), "max.impx").unwrap();
    let (_, reqs) = dualspec::requirements_for(&program, "max", false).unwrap();
    let suite = parse_suite(&read_corpus("max.tests")).unwrap();
    let matrix = dualspec::runner::run_suite(&program, &reqs, &suite).unwrap();

    let line_ranking = rank(&matrix, SpectrumKind::Line, MetricId::Ochiai).unwrap();
    assert_eq!(line_ranking.position_of(&ElementId::Line(4)), Some(2));

    let dua_ranking = rank(&matrix, SpectrumKind::Dua, MetricId::Ochiai).unwrap();
    let faulty_lines = BTreeSet::from([4]);
    let (cost, found) =
        cost_to_fault(&dua_ranking, &faulty_lines, &dua_line_map(&reqs), false, 99).unwrap();
    assert!(found);
    assert_eq!(cost, 4);
    pass("criterion 3 (worked ranking and DUA cost)");
}

/// Criterion 4: on randomly generated loop-free programs, the all-uses
/// set matches an acyclic-path-enumeration oracle exactly, and every
/// dynamically covered DUA is in the static set.
#[test]
fn criterion_04_static_and_dynamic_dua_oracle() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0xd0a5);
    let mut dynamic_checks = 0usize;
    for round in 0..220 {
        let generated = gen_loop_free_program(&mut rng);
        let program = match dualspec::load_program(&generated.source, "gen.impx") {
            Ok(p) => p,
            Err(e) => panic!("generated program must be valid: {e}\n{}", generated.source),
        };
        let func = program.function(&generated.function).unwrap();
        let cfg = annotate_def_use(build_cfg(func), func);
        assert!(
            cfg.nodes.len() <= 8,
            "round {round}: {} blocks",
            cfg.nodes.len()
        );

        // (a) static set equality, including line attribution.
        let reqs = all_uses(&cfg);
        let implementation: BTreeSet<_> = reqs.duas.iter().cloned().collect();
        let oracle = oracle_all_uses(&cfg);
        assert_eq!(
            implementation, oracle,
            "round {round}: all_uses disagrees with the path oracle\n{}",
            generated.source
        );

        // (b) dynamic coverage is contained in the static set and agrees
        // with the definition-clear trace oracle.
        let static_keys: BTreeSet<DuaKey> = reqs.duas.iter().map(|d| d.key()).collect();
        let runner = TestRunner::new(&program, &reqs).unwrap();
        for _ in 0..3 {
            let mut args = Vec::new();
            for _ in 0..generated.scalar_params {
                args.push(ArgValue::Int(rng.random_range(-4..=6)));
            }
            if generated.has_array {
                args.push(ArgValue::Array(vec![
                    rng.random_range(-4..=6),
                    rng.random_range(-4..=6),
                    rng.random_range(-4..=6),
                ]));
            }
            let test = TestCase {
                name: "t".into(),
                function: generated.function.clone(),
                args,
                expected: Expected::Value(0),
            };
            let (execution, trace) = runner.execute_test_traced(&test).unwrap();
            assert!(
                execution.covered_duas.is_subset(&static_keys),
                "round {round}: dynamic DUA outside the static set\n{}",
                generated.source
            );
            assert_eq!(
                duas_from_trace(&trace),
                execution.covered_duas,
                "round {round}: trace oracle disagrees with runner marking\n{}",
                generated.source
            );
            dynamic_checks += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    assert!(dynamic_checks >= 600);
    pass("criterion 4 (static/dynamic DUA oracles)");
}

/// Independent direct-formula evaluator for criterion 5, coded straight
/// from the formula definitions.
fn reference_score(metric: MetricId, c: &Counts, total: u32) -> f64 {
    let (ef, nf, ep, np) = (c.c_ef as f64, c.c_nf as f64, c.c_ep as f64, c.c_np as f64);
    let frac = |num: f64, den: f64| if den == 0.0 { 0.0 } else { num / den };
    match metric {
        MetricId::Ochiai => frac(ef, ((ef + nf) * (ef + ep)).sqrt()),
        MetricId::Jaccard => frac(ef, ef + nf + ep),
        MetricId::Kulczynski2 => (frac(ef, ef + nf) + frac(ef, ef + ep)) / 2.0,
        MetricId::Zoltar => {
            if ef == 0.0 {
                0.0
            } else {
                ef / (ef + nf + ep + 10000.0 * nf * ep / ef)
            }
        }
        MetricId::McCon => frac(ef.mul_add(ef, -(nf * ep)), (ef + nf) * (ef + ep)),
        MetricId::Minus => {
            let fr = frac(ef, ef + nf);
            let pr = frac(ep, ep + np);
            frac(fr, fr + pr) - frac(1.0 - fr, 2.0 - fr - pr)
        }
        MetricId::Op => ef - ep / (ep + np + 1.0),
        MetricId::Drt => frac(ef, 1.0 + frac(ep, total as f64)),
        MetricId::Tarantula => {
            let fr = frac(ef, ef + nf);
            let pr = frac(ep, ep + np);
            frac(fr, fr + pr)
        }
        MetricId::Wong3 => {
            let p = match ep {
                e if e <= 2.0 => e,
                e if e <= 10.0 => 0.1f64.mul_add(e - 2.0, 2.0),
                e => 0.001f64.mul_add(e - 10.0, 2.8),
            };
            ef - p
        }
    }
}

/// Criterion 5: every metric matches an independently coded evaluator on
/// 1,000 random counter quadruples, with guarded cases compared exactly.
#[test]
fn criterion_05_metric_formula_oracle() {
    let mut rng = StdRng::seed_from_u64(0x5c0_7e5);
    for _ in 0..1000 {
        let c = Counts {
            c_ef: rng.random_range(0..30),
            c_nf: rng.random_range(0..30),
            c_ep: rng.random_range(0..30),
            c_np: rng.random_range(0..30),
        };
        let total = c.total();
        for metric in ALL_METRICS {
            let got = score(metric, &c, total);
            let want = reference_score(metric, &c, total);
            let guarded =
                c.c_ef == 0 || (c.c_ep + c.c_np == 0) || (c.c_ef + c.c_nf == 0) || total == 0;
            if guarded {
                assert_eq!(got, want, "{metric} on {c:?} (guarded)");
            } else {
                assert!(
                    (got - want).abs() <= 1e-12,
                    "{metric} on {c:?}: {got} vs {want}"
                );
            }
        }
    }

    // Wong3 piecewise boundaries, explicitly.
    for (c_ep, penalty) in [(2u32, 2.0f64), (10, 2.8)] {
        let c = Counts {
            c_ef: 5,
            c_nf: 0,
            c_ep,
            c_np: 0,
        };
        let got = score(MetricId::Wong3, &c, c.total());
        assert_eq!(got, 5.0 - penalty, "wong3 boundary at c_ep = {c_ep}");
    }
    let above = Counts {
        c_ef: 5,
        c_nf: 0,
        c_ep: 11,
        c_np: 0,
    };
    assert!((score(MetricId::Wong3, &above, above.total()) - (5.0 - 2.801)).abs() < 1e-12);
    pass("criterion 5 (metric formula oracle)");
}

/// Criterion 6: exact Wilcoxon p-values match a full sign-assignment
/// enumeration oracle; the worked example gives exactly 1/8.
#[test]
fn criterion_06_wilcoxon_exactness() {
    // Worked example first.
    let r = wilcoxon_signed_rank(
        &[1.0, 2.0, 3.0],
        &[2.0, 3.0, 4.0],
        Alternative::OneSidedLess,
    )
    .unwrap();
    assert_eq!(r.p_value, 0.125);

    let mut rng = StdRng::seed_from_u64(0x317c_0f0e);
    let mut cases = 0usize;
    while cases < 500 {
        let n = rng.random_range(1..=8);
        // Distinct nonzero differences by construction.
        let mut magnitudes: BTreeSet<u32> = BTreeSet::new();
        while magnitudes.len() < n {
            magnitudes.insert(rng.random_range(1..=50));
        }
        let diffs: Vec<f64> = magnitudes
            .into_iter()
            .map(|m| {
                if rng.random_bool(0.5) {
                    f64::from(m)
                } else {
                    -f64::from(m)
                }
            })
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-20..=20) as f64).collect();
        let x: Vec<f64> = y.iter().zip(&diffs).map(|(b, d)| b + d).collect();

        for alternative in [Alternative::OneSidedLess, Alternative::TwoSided] {
            let result = wilcoxon_signed_rank(&x, &y, alternative).unwrap();
            assert!(result.exact);
            let oracle = enumeration_oracle(&diffs, alternative);
            assert!(
                (result.p_value - oracle).abs() <= 1e-9,
                "n={n} diffs={diffs:?} {alternative:?}: {} vs {oracle}",
                result.p_value
            );
        }
        cases += 1;
    }
    pass("criterion 6 (Wilcoxon exactness)");
}

/// Full 2^n enumeration over sign assignments of the |difference| ranks.
fn enumeration_oracle(diffs: &[f64], alternative: Alternative) -> f64 {
    let n = diffs.len();
    let mut sorted: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    sorted.sort_by(f64::total_cmp);
    let rank_of = |d: f64| -> f64 {
        // Distinct magnitudes: the position in the sorted order, 1-based.
        sorted.iter().position(|&v| v == d.abs()).unwrap() as f64 + 1.0
    };
    let observed: f64 = diffs
        .iter()
        .filter(|d| **d > 0.0)
        .map(|d| rank_of(*d))
        .sum();
    let total = 1u64 << n;
    let mut le = 0u64;
    let mut ge = 0u64;
    for mask in 0..total {
        let mut w = 0.0;
        for (bit, d) in diffs.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                w += rank_of(*d);
            }
        }
        if w <= observed {
            le += 1;
        }
        if w >= observed {
            ge += 1;
        }
    }
    match alternative {
        Alternative::OneSidedLess => le as f64 / total as f64,
        Alternative::TwoSided => {
            (2.0 * (le as f64 / total as f64).min(ge as f64 / total as f64)).min(1.0)
        }
    }
}

/// Criterion 7: Cliff's delta matches the O(n*m) brute-force comparator
/// exactly, and the magnitude labels map the known control points.
#[test]
fn criterion_07_cliffs_delta() {
    let mut rng = StdRng::seed_from_u64(0xc11ff);
    for _ in 0..300 {
        let n = rng.random_range(1..=30);
        let m = rng.random_range(1..=30);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..15) as f64).collect();
        let y: Vec<f64> = (0..m).map(|_| rng.random_range(0..15) as f64).collect();
        let (delta, _) = dualspec::eval::cliffs_delta(&x, &y).unwrap();

        let mut greater = 0i64;
        let mut less = 0i64;
        for &xi in &x {
            for &yj in &y {
                if xi > yj {
                    greater += 1;
                }
                if xi < yj {
                    less += 1;
                }
            }
        }
        let brute = (greater - less) as f64 / (n as f64 * m as f64);
        assert_eq!(delta, brute, "x={x:?} y={y:?}");
    }
    assert_eq!(dualspec::eval::magnitude(0.032).name(), "insignificant");
    assert_eq!(dualspec::eval::magnitude(0.331).name(), "small");
    pass("criterion 7 (Cliff's delta)");
}

/// Criterion 8: the full methodology over the bundled corpus produces a
/// well-shaped comparison report and 20 monotone curves.
#[test]
fn criterion_08_methodology_pipeline() {
    let catalog_path = corpus_dir().join("catalog.txt");
    let text = std::fs::read_to_string(&catalog_path).unwrap();
    let faults = parse_catalog(&text, &corpus_dir()).unwrap();
    assert!(faults.len() >= 10, "corpus must hold at least 10 faults");

    // Corpus health: every fault has >= 8 tests and >= 1 failing one.
    for fault in &faults {
        let suite = parse_suite(&std::fs::read_to_string(&fault.suite).unwrap()).unwrap();
        assert!(
            suite.len() >= 8,
            "fault {} has only {} tests",
            fault.id,
            suite.len()
        );
    }

    let metrics = ALL_METRICS.to_vec();
    let spectra = vec![SpectrumKind::Dua, SpectrumKind::Line];
    let evaluation = dualspec::eval::evaluate_catalog(
        &faults,
        &metrics,
        &spectra,
        &dualspec::eval::EvalOptions::default(),
    )
    .unwrap();
    let report = &evaluation.report;

    for outcome in &evaluation.faults {
        assert!(
            outcome.failing_tests >= 1,
            "fault {} has no failing test",
            outcome.spec.id
        );
    }

    assert_eq!(report.fault_count, faults.len());
    assert_eq!(report.metrics.len(), 10);
    let mut curves = 0usize;
    for (name, metric) in &report.metrics {
        let comparison = metric.comparison.as_ref().expect("both spectra compared");
        assert!(
            (0.0..=1.0).contains(&comparison.p_value),
            "{name} p-value {}",
            comparison.p_value
        );
        assert!((-1.0..=1.0).contains(&comparison.cliffs_delta));
        assert_eq!(
            comparison.better + comparison.tied + comparison.worse,
            faults.len(),
            "{name} B-T-W must sum to the fault count"
        );
        for stats in [metric.line.as_ref().unwrap(), metric.dua.as_ref().unwrap()] {
            for q in [stats.min, stats.q1, stats.q2, stats.q3] {
                assert!((1.0..=100.0).contains(&q), "{name} quartile {q}");
            }
            assert!(stats.q1 <= stats.q2 && stats.q2 <= stats.q3);
            assert_eq!(stats.curve.len(), 99);
            assert!(
                stats.curve.windows(2).all(|w| w[0] <= w[1]),
                "{name} curve not monotone"
            );
            assert!(*stats.curve.last().unwrap() <= faults.len());
            curves += 1;
        }
    }
    assert_eq!(curves, 20);

    // The 100 sentinel is exercised: at least one fault is not found.
    assert!(
        report.records.iter().any(|r| r.cost == 100 && !r.found),
        "corpus should produce at least one not-found record"
    );
    assert!(report.records.iter().all(|r| (1..=100).contains(&r.cost)));
    assert!(report.records.iter().all(|r| r.found == (r.cost <= 99)));
    pass("criterion 8 (methodology pipeline)");
}

/// Criterion 9: `--time` produces the four phases and three finite
/// overhead ratios on the corpus.
#[test]
fn criterion_09_efficiency_analog() {
    let out_dir = std::env::temp_dir().join(format!("dualspec-timing-{}", std::process::id()));
    let output = Command::new(bin_path())
        .args([
            "evaluate",
            corpus_dir().join("catalog.txt").to_str().unwrap(),
            "--out",
        ])
        .arg(&out_dir)
        .arg("--time")
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8(output.stdout).unwrap();
    let json_start = stdout.find("{\n").expect("timing JSON on stdout");
    let report: serde_json::Value = serde_json::from_str(&stdout[json_start..]).unwrap();

    for side in ["df", "cf"] {
        for phase in [
            "test_execution_s",
            "spectra_collection_s",
            "suspiciousness_s",
            "list_generation_s",
        ] {
            let v = report[side][phase].as_f64().unwrap();
            assert!(v >= 0.0, "{side}.{phase} = {v}");
        }
    }
    assert!(report["baseline_s"].as_f64().unwrap() >= 0.0);
    for ratio in [
        "df_over_baseline_pct",
        "cf_over_baseline_pct",
        "df_over_cf_pct",
    ] {
        let v = report["ratios"][ratio]
            .as_f64()
            .unwrap_or_else(|| panic!("ratio {ratio} missing or n/a"));
        assert!(v.is_finite(), "{ratio} = {v}");
    }
    std::fs::remove_dir_all(&out_dir).ok();
    pass("criterion 9 (efficiency analog)");
}

/// Criterion 10: two consecutive evaluations write byte-identical
/// report.json and curve CSVs.
#[test]
fn criterion_10_determinism() {
    let base = std::env::temp_dir().join(format!("dualspec-det-{}", std::process::id()));
    let dirs = [base.join("run1"), base.join("run2")];
    for dir in &dirs {
        let output = Command::new(bin_path())
            .args([
                "evaluate",
                corpus_dir().join("catalog.txt").to_str().unwrap(),
                "--metric",
                "all",
                "--spectrum",
                "both",
                "--out",
            ])
            .arg(dir)
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "{}",
            String::from_utf8_lossy(&output.stderr)
        );
    }

    let report1 = std::fs::read(dirs[0].join("report.json")).unwrap();
    let report2 = std::fs::read(dirs[1].join("report.json")).unwrap();
    assert_eq!(report1, report2, "report.json differs between runs");

    let mut curve_files: Vec<String> = std::fs::read_dir(dirs[0].join("curves"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    curve_files.sort();
    assert_eq!(curve_files.len(), 20);
    for name in &curve_files {
        let a = std::fs::read(dirs[0].join("curves").join(name)).unwrap();
        let b = std::fs::read(dirs[1].join("curves").join(name)).unwrap();
        assert_eq!(a, b, "curve {name} differs between runs");
    }
    std::fs::remove_dir_all(&base).ok();
    pass("criterion 10 (determinism)");
}
