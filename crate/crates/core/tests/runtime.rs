use std::sync::Arc;
use std::time::{Duration, Instant};

use partexec_core::backend::{CountingBackend, ReplayBackend};
use partexec_core::runtime::{FailingResolver, InjectionSource};
use partexec_core::{instrument, run, AbstractClass, Budget, Pipeline, PipelineMode, SourceSnippet, Terminal};

fn program(text: &str) -> partexec_core::InstrumentedProgram {
    instrument(&SourceSnippet::new("t.py", text)).unwrap()
}

fn replay(replies: &[&str]) -> Arc<CountingBackend<ReplayBackend>> {
    Arc::new(CountingBackend::new(ReplayBackend::sequence(replies.iter().copied())))
}

#[test]
fn closed_snippet_completes() {
    let r = run(&program("a = 1\nprint(a)\n"), &FailingResolver, &Budget::default());
    assert_eq!(r.terminal, Terminal::Completed);
    assert_eq!(r.covered_lines.iter().copied().collect::<Vec<_>>(), vec![1, 2]);
    assert!(r.injections.is_empty());
    assert_eq!(r.stdout_capture, b"1\n");
}

#[test]
fn failing_resolver_crashes_at_first_query() {
    let r = run(&program("a = 1\nb = missing + a\nprint(b)\n"), &FailingResolver, &Budget::default());
    match r.terminal {
        Terminal::Crashed { exception_class, line_no, type_mismatch, .. } => {
            assert_eq!(exception_class, "NameError");
            assert_eq!(line_no, 2);
            assert!(!type_mismatch);
        }
        t => panic!("{t:?}"),
    }
    assert_eq!(r.covered_lines.iter().copied().collect::<Vec<_>>(), vec![1]);
}

#[test]
fn value_injection_binds_globally() {
    let backend = replay(&["```python\nfilter_cached = lambda *a: (1, 2)\n```"]);
    let p = Pipeline::new(PipelineMode::ValueOnly, backend.clone());
    let r = run(&program("x, y = filter_cached(3)\nprint(x + y)\nprint(filter_cached)\n"), &p, &Budget::default());
    assert_eq!(r.terminal, Terminal::Completed, "{r:?}");
    assert_eq!(backend.calls(), 1);
    assert_eq!(r.injections.len(), 1);
    assert_eq!(r.injections[0].source, InjectionSource::InteractiveValue);
    assert!(String::from_utf8_lossy(&r.stdout_capture).starts_with("3\n"));
}

#[test]
fn same_name_twice_hits_the_cache() {
    let backend = replay(&["```\ncount = 4\n```"]);
    let p = Pipeline::new(PipelineMode::ValueOnly, backend.clone());
    let text = "def f():\n    return count\ndef g():\n    return count * 2\nprint(f(), g())\n";
    let r = run(&program(text), &p, &Budget::default());
    assert_eq!(r.terminal, Terminal::Completed, "{r:?}");
    assert_eq!(backend.calls(), 1);
    assert_eq!(String::from_utf8_lossy(&r.stdout_capture), "4 8\n");
}

#[test]
fn attribute_injection_sets_on_base() {
    let backend = replay(&["```\nimport os\nclass C:\n    pass\nself = C()\nself.path = os.path.abspath(__file__)\n```"]);
    let p = Pipeline::new(PipelineMode::ValueOnly, backend);
    let text = "class C:\n    pass\nself = C()\nfilepath = self.path\nprint(filepath.endswith('.py'), self.path == filepath)\n";
    let r = run(&program(text), &p, &Budget::default());
    assert_eq!(r.terminal, Terminal::Completed, "{r:?}");
    assert_eq!(String::from_utf8_lossy(&r.stdout_capture), "True True\n");
}

#[test]
fn dummy_attributes_need_no_query() {
    let backend = replay(&["Object"]);
    let p = Pipeline::new(PipelineMode::TypeOnly, backend.clone());
    let r = run(&program("v = thing.anything.more\nw = thing.other()\n"), &p, &Budget::default());
    assert_eq!(r.terminal, Terminal::Completed, "{r:?}");
    assert_eq!(backend.calls(), 1);
    assert_eq!(r.injections[0].abstract_class, Some(AbstractClass::Object));
}

#[test]
fn not_callable_triggers_call_query() {
    let backend = replay(&["```\ndef handler(x):\n    return x + 1\n```"]);
    let p = Pipeline::new(PipelineMode::ValueOnly, backend.clone());
    let r = run(&program("handler = 3\nprint(handler(1))\n"), &p, &Budget::default());
    assert_eq!(r.terminal, Terminal::Completed, "{r:?}");
    assert_eq!(r.injections[0].query.kind, partexec_core::HookKind::Call);
    assert_eq!(String::from_utf8_lossy(&r.stdout_capture), "2\n");
}

#[test]
fn genuine_type_error_surfaces() {
    let r = run(&program("a = 'x'\nb = a - 1\n"), &FailingResolver, &Budget::default());
    match r.terminal {
        Terminal::Crashed { exception_class, line_no, type_mismatch, message } => {
            assert_eq!(exception_class, "TypeError");
            assert_eq!(line_no, 2);
            assert!(type_mismatch);
            assert!(message.contains("unsupported operand"));
        }
        t => panic!("{t:?}"),
    }
}

#[test]
fn infinite_loop_times_out_within_budget() {
    let budget = Budget { timeout: Duration::from_secs(1), ..Budget::default() };
    let t0 = Instant::now();
    let r = run(&program("i = 0\nwhile True:\n    i += 1\n"), &FailingResolver, &budget);
    assert_eq!(r.terminal, Terminal::Timeout);
    assert!(t0.elapsed() < Duration::from_secs(5), "{:?}", t0.elapsed());
}

#[test]
fn max_injections_bounds_queries() {
    let backend = replay(&["None", "None", "None"]);
    let p = Pipeline::new(PipelineMode::TypeOnly, backend.clone());
    let budget = Budget { max_injections: 2, ..Budget::default() };
    let r = run(&program("a = p\nb = q\nc = r\n"), &p, &budget);
    assert_eq!(r.injections.len(), 2);
    assert!(matches!(r.terminal, Terminal::Crashed { line_no: 3, .. }), "{r:?}");
}
