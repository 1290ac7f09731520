use std::sync::Arc;

use partexec_core::backend::{CountingBackend, ReplayBackend, UnavailableBackend};
use partexec_core::predict::{parse_reply, predict_value, PromptBundle, ValueParams};
use partexec_core::runtime::{default_python, Checker, HookQuery, InjectionSource, StandaloneChecker};
use partexec_core::{instrument, run, AbstractClass, Budget, HookKind, Pipeline, PipelineMode, SourceSnippet, Terminal};

const INVALID: &str = "```python\nvalue = missing_helper()\n```";

fn checker() -> StandaloneChecker {
    StandaloneChecker::new(&default_python(), Budget::default()).unwrap()
}

fn query(name: &str) -> HookQuery {
    HookQuery {
        iid: 1,
        kind: HookKind::VariableRead,
        name: name.into(),
        context_line: format!("print({name} + 1)"),
        error_message: format!("NameError: name '{name}' is not defined"),
    }
}

fn replies(list: &[&str]) -> CountingBackend<ReplayBackend> {
    CountingBackend::new(ReplayBackend::sequence(list.iter().copied()))
}

#[test]
fn always_invalid_spends_exactly_t_calls() {
    let backend = replies(&[INVALID; 8]);
    let err = predict_value(&query("count"), &backend, &PromptBundle::builtin(), ValueParams::default(), &mut checker())
        .unwrap_err();
    assert_eq!(backend.calls(), 5);
    assert_eq!(err.iterations, 5);
    assert!(err.last_failure.contains("missing_helper"), "{}", err.last_failure);
}

#[test]
fn t_max_bounds_the_call_count() {
    for t in [1, 2, 3, 7] {
        let backend = replies(&[INVALID; 10]);
        let params = ValueParams { t_max: t, ..ValueParams::default() };
        assert!(predict_value(&query("n"), &backend, &PromptBundle::builtin(), params, &mut checker()).is_err());
        assert_eq!(backend.calls(), t as usize);
    }
}

#[test]
fn first_valid_reply_needs_one_call() {
    let backend = replies(&["```python\ncount = 3\n```", INVALID]);
    let p = predict_value(&query("count"), &backend, &PromptBundle::builtin(), ValueParams::default(), &mut checker())
        .unwrap();
    assert_eq!(backend.calls(), 1);
    assert_eq!(p.iterations_used, 1);
    assert_eq!(p.value.type_name, "int");
    assert_eq!(p.result_code, "count = 3");
}

#[test]
fn fix_prompt_carries_the_last_failure() {
    let backend = replies(&[INVALID, "```\ncount = int('x')\n```", "```\ncount = 3\n```"]);
    let p = predict_value(&query("count"), &backend, &PromptBundle::builtin(), ValueParams::default(), &mut checker())
        .unwrap();
    assert_eq!(backend.calls(), 3);
    assert_eq!(p.iterations_used, 3);
    let prompts = backend.prompts();
    assert!(prompts[0].contains("Define and assign <count> <variable>"));
    assert!(prompts[1].contains("Fix the <value = missing_helper()>"), "{}", &prompts[1][prompts[1].len() - 300..]);
    assert!(prompts[1].contains("NameError: name 'missing_helper' is not defined"));
    // only the most recent attempt is fed back
    assert!(prompts[2].contains("Fix the <count = int('x')>"));
    assert!(prompts[2].contains("ValueError"));
    assert!(!prompts[2].contains("missing_helper"));
}

#[test]
fn empty_replies_and_backend_errors_spend_iterations() {
    let backend = replies(&["I am not sure.", "```\n\n```"]);
    let err = predict_value(&query("x"), &backend, &PromptBundle::builtin(), ValueParams::default(), &mut checker())
        .unwrap_err();
    // two replies, then the transcript runs dry for the remaining three
    assert_eq!(backend.calls(), 5);
    assert_eq!(err.iterations, 5);

    let down = CountingBackend::new(UnavailableBackend);
    assert!(predict_value(&query("x"), &down, &PromptBundle::builtin(), ValueParams::default(), &mut checker()).is_err());
    assert_eq!(down.calls(), 5);
}

#[test]
fn prompt_shape() {
    let b = PromptBundle::builtin();
    let p = partexec_core::predict::build_assign_prompt(&b, &query("count"));
    assert!(p.starts_with(&b.role));
    assert!(p.contains("Step 1: Import needed module."));
    assert!(p.contains("Step 2: Define all the needed classes, methods, or variables here in detail."));
    assert!(p.contains("<print(count + 1)>"));
    assert!(p.trim_end().ends_with("to repair the error <NameError: name 'count' is not defined>"));
    for e in &b.examples {
        assert!(p.contains(&e.input) && p.contains(&e.output));
    }
}

#[test]
fn bundled_examples_pass_the_checker() {
    let cases = [
        (HookKind::AttributeRead, "path", "self"),
        (HookKind::VariableRead, "options", "options"),
        (HookKind::VariableRead, "url", "url"),
        (HookKind::AttributeRead, "quantity", "order"),
        (HookKind::Call, "tokenize", "tokenize"),
        (HookKind::Call, "fetch_all", "db.fetch_all"),
    ];
    let b = PromptBundle::builtin();
    assert_eq!(b.examples.len(), cases.len());
    let mut c = checker();
    for (i, (e, (kind, name, target))) in b.examples.iter().zip(cases).enumerate() {
        let code = parse_reply(&e.output).unwrap();
        let q = HookQuery { iid: i as u32, kind, name: name.into(), context_line: String::new(), error_message: String::new() };
        c.set_target(q.iid, target);
        let v = c.check(&code, &q);
        assert!(v.is_ok(), "example {i}: {v:?}");
    }
}

#[test]
fn full_pipeline_falls_through_to_the_type_predictor() {
    let mut list = vec![INVALID; 5];
    list.push("Callable");
    let backend = Arc::new(replies(&list));
    let pipeline = Pipeline::new(PipelineMode::Full, backend.clone());
    let program = instrument(&SourceSnippet::new("l.py", "result = transform(3)\nprint(result)\n")).unwrap();
    let r = run(&program, &pipeline, &Budget::default());
    assert_eq!(r.terminal, Terminal::Completed, "{r:?}");
    assert_eq!(backend.calls(), 6);
    assert_eq!(r.injections.len(), 1);
    assert_eq!(r.injections[0].source, InjectionSource::ComplementaryType);
    assert_eq!(r.injections[0].abstract_class, Some(AbstractClass::Callable));
    // the sixth prompt is the classifier's
    assert!(backend.prompts()[5].trim_end().ends_with("Category:"));
}

#[test]
fn value_only_gives_up_without_a_dummy() {
    let backend = Arc::new(replies(&[INVALID; 6]));
    let pipeline = Pipeline::new(PipelineMode::ValueOnly, backend.clone());
    let program = instrument(&SourceSnippet::new("l.py", "result = transform(3)\n")).unwrap();
    let r = run(&program, &pipeline, &Budget::default());
    assert!(matches!(r.terminal, Terminal::Crashed { ref exception_class, .. } if exception_class == "NameError"), "{r:?}");
    assert_eq!(backend.calls(), 5);
}
