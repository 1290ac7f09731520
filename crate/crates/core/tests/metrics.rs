mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use partexec_core::backend::UnavailableBackend;
use partexec_core::eval::{branch_coverage, combine_runs, fully_executed, line_coverage};
use partexec_core::instrument::{ArmKind, BranchArm, BranchTable};
use partexec_core::{instrument, run, Budget, ExecutionReport, Pipeline, PipelineMode, SourceSnippet, Terminal};
use proptest::prelude::*;
use rayon::prelude::*;

/// Runs every snippet of `suite` with an unavailable predictor and compares
/// covered lines, branch arms, coverage ratios and crash site to the oracle.
fn agree_with_oracle(suite: &str) -> usize {
    let entries = common::corpus(suite);
    let failures: Vec<String> = entries
        .par_iter()
        .filter_map(|e| {
            let snippet = SourceSnippet::new(format!("{}.py", e.id), e.code.clone());
            let program = instrument(&snippet).unwrap();
            let pipeline = Pipeline::new(PipelineMode::ValueOnly, Arc::new(UnavailableBackend));
            let report = run(&program, &pipeline, &Budget::default());
            let want = common::oracle(&common::entry_path(suite, &e.id));

            let mut diffs = Vec::new();
            let lines: Vec<usize> = report.covered_lines.iter().copied().collect();
            if lines != want.covered {
                diffs.push(format!("lines {lines:?} vs {:?}", want.covered));
            }
            if snippet.countable_lines() != want.countable {
                diffs.push("countable lines differ".into());
            }
            let mut all: Vec<_> = program.branches.arms.iter().map(|a| (a.line, common::arm_kind(a.kind).to_string())).collect();
            all.sort();
            if all != want.arms_all {
                diffs.push(format!("arms {all:?} vs {:?}", want.arms_all));
            }
            let mut hit: Vec<_> = program
                .branches
                .arms
                .iter()
                .filter(|a| report.covered_branches.contains(&a.id))
                .map(|a| (a.line, common::arm_kind(a.kind).to_string()))
                .collect();
            hit.sort();
            if hit != want.arms_hit {
                diffs.push(format!("arms hit {hit:?} vs {:?}", want.arms_hit));
            }
            if line_coverage(&report, &snippet) != want.line_coverage() {
                diffs.push("line coverage".into());
            }
            if branch_coverage(&report, &program.branches) != want.branch_coverage() {
                diffs.push("branch coverage".into());
            }
            let crash = match &report.terminal {
                Terminal::Crashed { exception_class, line_no, .. } => Some((exception_class.clone(), *line_no)),
                _ => None,
            };
            if crash != want.crash {
                diffs.push(format!("terminal {crash:?} vs {:?}", want.crash));
            }
            (!diffs.is_empty()).then(|| format!("{}: {}", e.id, diffs.join("; ")))
        })
        .collect();
    assert!(failures.is_empty(), "{}", failures.join("\n"));
    entries.len()
}

#[test]
fn hand_built_snippets_match_the_line_marker() {
    assert!(agree_with_oracle("metrics") >= 20);
}

#[test]
fn closed_snippets_match_the_line_marker() {
    agree_with_oracle("closed");
}

#[test]
fn crashing_snippets_match_the_line_marker() {
    agree_with_oracle("semantics");
}

#[test]
fn empty_snippet_is_fully_covered_with_no_branches() {
    let s = SourceSnippet::new("e.py", "# only a comment\n\n");
    let p = instrument(&s).unwrap();
    let r = run(&p, &Pipeline::new(PipelineMode::Full, Arc::new(UnavailableBackend)), &Budget::default());
    assert_eq!(line_coverage(&r, &s), 1.0);
    assert_eq!(branch_coverage(&r, &p.branches), None);
    assert!(fully_executed(&r, &s));
}

fn terminal() -> impl Strategy<Value = Terminal> {
    prop_oneof![
        Just(Terminal::Completed),
        Just(Terminal::Timeout),
        (1usize..30, any::<bool>()).prop_map(|(line_no, type_mismatch)| Terminal::Crashed {
            exception_class: "NameError".into(),
            message: "m".into(),
            line_no,
            type_mismatch,
        }),
    ]
}

fn report() -> impl Strategy<Value = ExecutionReport> {
    (terminal(), prop::collection::btree_set(1usize..30, 0..30), prop::collection::btree_set(0u32..12, 0..12)).prop_map(
        |(terminal, covered_lines, covered_branches)| ExecutionReport {
            terminal,
            covered_lines,
            covered_branches,
            injections: Vec::new(),
            stdout_capture: Vec::new(),
        },
    )
}

fn snippet_of(n: usize) -> SourceSnippet {
    SourceSnippet::new("p.py", "x = 1\n".repeat(n))
}

fn table_of(n: u32) -> BranchTable {
    BranchTable { arms: (0..n).map(|id| BranchArm { id, line: 1, kind: ArmKind::Then }).collect() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn combining_two_runs_is_a_monotone_union(a in report(), b in report(), n in 1usize..30, arms in 1u32..12) {
        let c = combine_runs(&[a.clone(), b.clone()]).unwrap();
        let lines: BTreeSet<usize> = a.covered_lines.union(&b.covered_lines).copied().collect();
        let branches: BTreeSet<u32> = a.covered_branches.union(&b.covered_branches).copied().collect();
        prop_assert_eq!(&c.covered_lines, &lines);
        prop_assert_eq!(&c.covered_branches, &branches);
        prop_assert_eq!(c.terminal.rank(), a.terminal.rank().max(b.terminal.rank()));
        let expected_terminal = if b.terminal.rank() > a.terminal.rank() { &b.terminal } else { &a.terminal };
        prop_assert_eq!(&c.terminal, expected_terminal);

        let s = snippet_of(n);
        let t = table_of(arms);
        for r in [&a, &b] {
            prop_assert!(line_coverage(&c, &s) >= line_coverage(r, &s));
            prop_assert!(branch_coverage(&c, &t).unwrap() >= branch_coverage(r, &t).unwrap());
        }
        // order of runs does not change coverage
        let d = combine_runs(&[b, a]).unwrap();
        prop_assert_eq!(d.covered_lines, c.covered_lines);
        prop_assert_eq!(d.covered_branches, c.covered_branches);
    }

    #[test]
    fn metrics_stay_in_unit_interval(r in report(), n in 0usize..30, arms in 0u32..12) {
        let s = snippet_of(n);
        let lc = line_coverage(&r, &s);
        prop_assert!((0.0..=1.0).contains(&lc));
        match branch_coverage(&r, &table_of(arms)) {
            None => prop_assert_eq!(arms, 0),
            Some(bc) => prop_assert!((0.0..=1.0).contains(&bc)),
        }
        prop_assert_eq!(fully_executed(&r, &s), lc == 1.0);
    }
}
