// Acceptance run: one PASS/FAIL line per criterion. Exits nonzero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use partexec_core::backend::{CountingBackend, LiveConfig, ReplayBackend, UnavailableBackend};
use partexec_core::eval::{branch_coverage, combine_runs, line_coverage, CorpusEntry, Evaluator, Outcome};
use partexec_core::predict::{predict_value, PromptBundle, ValueParams};
use partexec_core::runtime::{default_python, HookQuery, InjectionSource, StandaloneChecker};
use partexec_core::{
    instrument, run, AbstractClass, BackendSource, Budget, ExecutionReport, HookKind, Pipeline, PipelineFactory,
    PipelineMode, SourceSnippet, Terminal,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rayon::prelude::*;

type Verdict = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn criterion1() -> Verdict {
    let t0 = Instant::now();
    let mut total = 0;
    for suite in ["closed", "semantics"] {
        let entries = common::corpus(suite);
        total += entries.len();
        let bad: Vec<String> = entries
            .par_iter()
            .filter_map(|e| {
                let backend = Arc::new(CountingBackend::new(UnavailableBackend));
                let p = instrument(&SourceSnippet::new(format!("{}.py", e.id), e.code.clone())).unwrap();
                let r = run(&p, &Pipeline::new(PipelineMode::Full, backend.clone()), &Budget::default());
                let same = common::observed(&r) == common::vanilla(&common::entry_path(suite, &e.id));
                (!same || backend.calls() != 0).then(|| e.id.clone())
            })
            .collect();
        ensure(bad.is_empty(), format!("{suite}: mismatched {bad:?}"))?;
    }
    let elapsed = t0.elapsed();
    ensure(total >= 50, format!("only {total} snippets"))?;
    ensure(elapsed < Duration::from_secs(120), format!("took {elapsed:?}"))?;
    Ok(format!("{total} snippets identical to vanilla, 0 predictor calls, {:.1}s", elapsed.as_secs_f64()))
}

fn criterion2() -> Verdict {
    for (original, column) in common::HOOK_ROWS {
        let p = instrument(&SourceSnippet::new("t.py", original)).map_err(|e| e.to_string())?;
        ensure(
            common::hook_shape(&p.instrumented_text) == common::hook_shape(column),
            format!("{original:?} -> {:?}", p.instrumented_text),
        )?;
    }
    Ok("3 rows structurally equal".into())
}

fn criterion3() -> Verdict {
    use AbstractClass::*;
    let mut probe = StandaloneChecker::new(&default_python(), Budget::default()).map_err(|e| e.to_string())?;
    let cases: [(AbstractClass, &str, &str); 16] = [
        (None_, "", "v is None"),
        (Boolean, "", "v is True"),
        (Integer, "", "v == 1 and type(v) is int"),
        (Float, "", "v == 1.0 and type(v) is float"),
        (String, "", "v == 'a'"),
        (List, "", "type(v) is list and len(v) == 1 and type(v[0]) is DummyObject"),
        // flagged ambiguity: a one-element tuple, not a parenthesised Dummy
        (Tuple, "", "type(v) is tuple and len(v) == 1 and type(v[0]) is DummyObject"),
        // flagged ambiguity: a one-element set, not set() over a Dummy
        (Set, "", "type(v) is set and len(v) == 1 and type(next(iter(v))) is DummyObject"),
        (Dictionary, "", "type(v) is dict and 'a' in v"),
        (Tensor, "", "tuple(v.shape) == (1, 1) and float(v[0][0]) == 1.0"),
        (Array, "", "v.shape == (1,) and int(v[0]) == 1"),
        (DataFrame, "", "list(v.columns) == ['a'] and int(v['a'][0]) == 1"),
        (Callable, "", "type(v()) is DummyObject"),
        (Object, "", "type(v) is DummyObject and type(v.x.y()) is DummyObject"),
        (Resource, "with v as r:\n    r.read()\nok = True", "ok and hasattr(v, '__enter__') and hasattr(v, '__exit__')"),
        (Others, "", "type(v) is DummyObject"),
    ];
    let mut downgraded = Vec::new();
    for (c, setup, pred) in cases {
        let r = probe.probe_dummy(c, setup, pred).map_err(|e| e.to_string())?;
        ensure(r.ok, format!("{c}: {:?}", r.error))?;
        if r.downgraded {
            downgraded.push(c.label());
        }
    }
    ensure(downgraded.is_empty(), format!("library values downgraded to Dummy: {downgraded:?}"))?;
    Ok("16 tags satisfy their predicates".into())
}

const INVALID: &str = "```python\nvalue = missing_helper()\n```";

fn criterion4() -> Verdict {
    let q = HookQuery {
        iid: 1,
        kind: HookKind::VariableRead,
        name: "count".into(),
        context_line: "print(count)".into(),
        error_message: "NameError: name 'count' is not defined".into(),
    };
    let mut checker = StandaloneChecker::new(&default_python(), Budget::default()).map_err(|e| e.to_string())?;
    let bundle = PromptBundle::builtin();
    let params = ValueParams { t_max: 5, ..ValueParams::default() };

    let bad = CountingBackend::new(ReplayBackend::sequence([INVALID; 9]));
    let err = predict_value(&q, &bad, &bundle, params, &mut checker);
    ensure(err.is_err() && bad.calls() == 5, format!("invalid: {} calls, {err:?}", bad.calls()))?;

    let mut replies = vec![INVALID; 5];
    replies.push("Integer");
    let backend = Arc::new(CountingBackend::new(ReplayBackend::sequence(replies)));
    let p = instrument(&SourceSnippet::new("a.py", "print(count)\n")).unwrap();
    let r = run(&p, &Pipeline::new(PipelineMode::Full, backend.clone()), &Budget::default());
    let inj = r.injections.first();
    ensure(
        backend.calls() == 6
            && inj.is_some_and(|i| i.source == InjectionSource::ComplementaryType && i.abstract_class == Some(AbstractClass::Integer))
            && r.stdout_capture == b"1\n",
        format!("fallthrough: {} calls, {:?}", backend.calls(), r.injections),
    )?;

    let good = CountingBackend::new(ReplayBackend::sequence(["```python\ncount = 3\n```", INVALID]));
    let ok = predict_value(&q, &good, &bundle, params, &mut checker);
    ensure(ok.is_ok() && good.calls() == 1, format!("valid: {} calls", good.calls()))?;
    Ok("5 calls then type predictor; 1 call when first reply is valid".into())
}

fn unpacking(mode: PipelineMode, replies: &[&str]) -> partexec_core::eval::SnippetResult {
    let backend = Arc::new(ReplayBackend::sequence(replies.iter().copied()));
    let factory = PipelineFactory::new(mode, BackendSource::Fixed(backend));
    let entry = CorpusEntry { id: "unpacking".into(), code: "sources, cached = filter_cached(cache, sources)\n".into() };
    match (Evaluator { runs: 1, ..Evaluator::default() }).evaluate_snippet(&entry, &factory).unwrap() {
        Outcome::Evaluated(r, _) => r,
        Outcome::Skipped(s) => panic!("{s:?}"),
    }
}

fn criterion5() -> Verdict {
    let t = unpacking(PipelineMode::TypeOnly, &["Callable", "Object", "Object"]);
    let msg = match &t.terminal {
        Terminal::Crashed { message, type_mismatch: true, .. } => message.clone(),
        other => return Err(format!("type_only: {other:?}")),
    };
    ensure(msg.contains("cannot unpack non-iterable"), format!("type_only message {msg:?}"))?;
    let f = unpacking(PipelineMode::Full, &["```python\ndef filter_cached(*args): return (1, 2)\n```"]);
    ensure(f.terminal == Terminal::Completed && f.coverage == 1.0, format!("full: {:?} {}", f.terminal, f.coverage))?;
    Ok(format!("type_only: {msg:?}; full: completed, line coverage 1.0"))
}

fn oracle_mismatches(suite: &str) -> (usize, Vec<String>) {
    let entries = common::corpus(suite);
    let bad = entries
        .par_iter()
        .filter_map(|e| {
            let s = SourceSnippet::new(format!("{}.py", e.id), e.code.clone());
            let p = instrument(&s).unwrap();
            let r = run(&p, &Pipeline::new(PipelineMode::ValueOnly, Arc::new(UnavailableBackend)), &Budget::default());
            let o = common::oracle(&common::entry_path(suite, &e.id));
            let same = line_coverage(&r, &s) == o.line_coverage()
                && branch_coverage(&r, &p.branches) == o.branch_coverage()
                && r.covered_lines.iter().copied().collect::<Vec<_>>() == o.covered;
            (!same).then(|| e.id.clone())
        })
        .collect();
    (entries.len(), bad)
}

fn report_strategy() -> impl Strategy<Value = ExecutionReport> {
    let terminal = prop_oneof![
        Just(Terminal::Completed),
        Just(Terminal::Timeout),
        (1usize..40).prop_map(|l| Terminal::Crashed { exception_class: "E".into(), message: String::new(), line_no: l, type_mismatch: false }),
    ];
    (terminal, prop::collection::btree_set(1usize..40, 0..40), prop::collection::btree_set(0u32..20, 0..20)).prop_map(
        |(terminal, covered_lines, covered_branches)| ExecutionReport {
            terminal,
            covered_lines,
            covered_branches,
            injections: Vec::new(),
            stdout_capture: Vec::new(),
        },
    )
}

fn criterion6() -> Verdict {
    let (n, bad) = oracle_mismatches("metrics");
    ensure(n >= 20, format!("only {n} hand-built snippets"))?;
    ensure(bad.is_empty(), format!("oracle disagrees on {bad:?}"))?;
    let mut runner = TestRunner::new(Config { cases: 1000, failure_persistence: None, ..Config::default() });
    runner
        .run(&(report_strategy(), report_strategy()), |(a, b)| {
            let c = combine_runs(&[a.clone(), b.clone()]).unwrap();
            let lines: BTreeSet<_> = a.covered_lines.union(&b.covered_lines).copied().collect();
            let arms: BTreeSet<_> = a.covered_branches.union(&b.covered_branches).copied().collect();
            prop_assert_eq!(&c.covered_lines, &lines);
            prop_assert_eq!(&c.covered_branches, &arms);
            prop_assert!(c.covered_lines.is_superset(&a.covered_lines) && c.covered_lines.is_superset(&b.covered_lines));
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!("{n} snippets equal to the line-marker oracle; 1000 random pairs union-monotone"))
}

fn replay_factory(suite: &str) -> PipelineFactory {
    PipelineFactory::new(PipelineMode::Full, BackendSource::Replay(common::fixture(suite).join("transcripts")))
}

fn criterion7() -> Verdict {
    let expected = common::expected_findings();
    ensure(expected.len() >= 10 && expected.contains_key("bytes_replace_str_arg") && expected.contains_key("datetime_minus_none"), "suite incomplete")?;
    let ev = Evaluator::default();
    let report = ev.evaluate_corpus(&common::corpus("type_errors"), &replay_factory("type_errors")).map_err(|e| e.to_string())?;
    for (id, want) in &expected {
        let got = report.snippets.iter().find(|s| &s.id == id).ok_or(format!("{id} not evaluated"))?;
        let hit = got.findings.len() == 1
            && got.findings[0].exception_class == want.exception_class
            && got.findings[0].message.contains(&want.message)
            && got.findings[0].line_no == want.line_no;
        ensure(hit, format!("{id}: {:?}", got.findings))?;
    }
    let clean = ev.evaluate_corpus(&common::corpus("clean"), &replay_factory("clean")).map_err(|e| e.to_string())?;
    ensure(clean.snippets.len() == 10, "clean suite size")?;
    ensure(clean.findings().is_empty(), format!("clean findings {:?}", clean.findings()))?;
    Ok(format!("{}/{} defects at the right line; clean suite: 0 findings", expected.len(), expected.len()))
}

fn criterion8() -> Verdict {
    let ev = Evaluator::default();
    for suite in ["replay", "type_errors", "clean"] {
        let entries = common::corpus(suite);
        let a = ev.evaluate_corpus(&entries, &replay_factory(suite)).map_err(|e| e.to_string())?;
        let b = ev.evaluate_corpus(&entries, &replay_factory(suite)).map_err(|e| e.to_string())?;
        ensure(a.to_json() == b.to_json() && a.to_csv() == b.to_csv(), format!("{suite} reports differ"))?;
    }
    Ok("replay, type_errors and clean reports byte-identical across two evaluations".into())
}

fn criterion9() -> Verdict {
    let live = LiveConfig {
        endpoint: "http://127.0.0.1:1/v1".into(),
        retries: 1,
        backoff: Duration::from_millis(5),
        request_timeout: Duration::from_secs(2),
        ..LiveConfig::default()
    };
    let ev = Evaluator::default();
    let entries = common::corpus("replay");
    let full = ev
        .evaluate_corpus(&entries, &PipelineFactory::new(PipelineMode::Full, BackendSource::Live(live)))
        .map_err(|e| e.to_string())?;
    let scripted = Arc::new(ReplayBackend::sequence(std::iter::repeat_n("Others", 10_000)));
    let others = ev
        .evaluate_corpus(&entries, &PipelineFactory::new(PipelineMode::TypeOnly, BackendSource::Fixed(scripted)))
        .map_err(|e| e.to_string())?;
    let diff: Vec<_> = full
        .snippets
        .iter()
        .zip(&others.snippets)
        .filter(|(a, b)| serde_json::to_string(a).unwrap() != serde_json::to_string(b).unwrap())
        .map(|(a, _)| a.id.clone())
        .collect();
    ensure(diff.is_empty(), format!("differs on {diff:?}"))?;
    ensure(full.to_json() == others.to_json(), "corpus aggregates differ")?;
    Ok(format!("{} snippets identical to type_only with Others", entries.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("semantics preservation", criterion1),
        ("execution hook shape", criterion2),
        ("dummy values", criterion3),
        ("value prediction loop", criterion4),
        ("unpacking example", criterion5),
        ("metrics oracle", criterion6),
        ("type-error detection", criterion7),
        ("determinism", criterion8),
        ("degradation", criterion9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t0.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {}. {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
