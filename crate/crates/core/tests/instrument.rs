mod common;

use partexec_core::{instrument, locate, HookKind, SourceSnippet};
use proptest::prelude::*;

fn snippet(text: &str) -> SourceSnippet {
    SourceSnippet::new("t.py", text)
}

#[test]
fn documented_rows_have_the_expected_hook_shape() {
    for (original, expected) in common::HOOK_ROWS {
        let p = instrument(&snippet(original)).unwrap();
        assert_eq!(common::hook_shape(&p.instrumented_text), common::hook_shape(expected), "{original}");
    }
}

#[test]
fn variable_read_site_is_located() {
    let p = instrument(&snippet("Var1 = Var2 + 1\n")).unwrap();
    assert_eq!(p.sites.len(), 1);
    let (iid, _) = p.sites.iter().next().unwrap();
    let site = locate(&p, *iid).unwrap();
    assert_eq!((site.kind, site.name.as_str(), site.line_no), (HookKind::VariableRead, "Var2", 1));
    assert_eq!(site.original_line_text, "Var1 = Var2 + 1");
    assert!(locate(&p, 999).is_err());
}

#[test]
fn write_targets_and_definitions_are_not_hooked() {
    let text = "import os\nfrom json import dumps\ndef f(a, b=1):\n    x = a\n    return x\nclass C:\n    y = 2\n";
    let p = instrument(&snippet(text)).unwrap();
    let names: Vec<_> = p.sites.values().map(|s| (s.kind, s.name.clone())).collect();
    assert_eq!(names, vec![(HookKind::VariableRead, "a".to_string()), (HookKind::VariableRead, "x".to_string())]);
}

#[test]
fn chained_attributes_nest_innermost_out() {
    let p = instrument(&snippet("v = a.b.c\n")).unwrap();
    assert_eq!(
        common::hook_shape(&p.instrumented_text),
        common::hook_shape(r#"v = _a_(iid, _a_(iid, _n_(iid, "a", lambda: a), "b"), "c")"#)
    );
}

#[test]
fn method_call_is_call_over_attribute_over_name() {
    let p = instrument(&snippet("o.m(x)\n")).unwrap();
    let got = common::hook_shape(&p.instrumented_text);
    assert!(got.contains("_c_") && got.contains("_a_"), "{}", p.instrumented_text);
    let kinds: Vec<_> = p.sites.values().map(|s| s.kind).collect();
    assert!(kinds.contains(&HookKind::Call) && kinds.contains(&HookKind::AttributeRead));
    assert_eq!(kinds.iter().filter(|k| **k == HookKind::VariableRead).count(), 2);
}

#[test]
fn empty_snippet_instruments_to_nothing() {
    let p = instrument(&snippet("")).unwrap();
    assert!(p.sites.is_empty());
    assert!(p.instrumented_text.trim().is_empty());
}

#[test]
fn unparsable_snippet_is_a_parse_error() {
    assert!(instrument(&snippet("def f(:\n    pass\n")).is_err());
}

#[test]
fn instrumented_closed_corpus_keeps_line_numbers() {
    for e in common::corpus("closed") {
        let s = SourceSnippet::new(e.id.clone(), e.code.clone());
        let p = instrument(&s).unwrap();
        assert_eq!(p.instrumented_text.lines().count(), e.code.lines().count(), "{}", e.id);
        for site in p.sites.values() {
            assert_eq!(s.line(site.line_no), Some(site.original_line_text.as_str()), "{} iid {}", e.id, site.iid);
        }
    }
}

fn ident() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "b", "foo", "bar", "x1", "data"]).prop_map(str::to_string)
}

fn expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![ident(), (0..100i32).prop_map(|n| n.to_string())];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), ident()).prop_map(|(e, a)| format!("({e}).{a}")),
            (inner.clone(), inner.clone()).prop_map(|(f, x)| format!("({f})({x})")),
            (inner.clone(), inner).prop_map(|(l, r)| format!("{l} + {r}")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sites_point_at_their_lines(lines in prop::collection::vec((ident(), expr()), 1..6)) {
        let text: String = lines.iter().map(|(t, e)| format!("{t} = {e}\n")).collect();
        let s = snippet(&text);
        let p = instrument(&s).unwrap();
        prop_assert_eq!(p.instrumented_text.lines().count(), lines.len());
        for site in p.sites.values() {
            prop_assert_eq!(s.line(site.line_no), Some(site.original_line_text.as_str()));
        }
        // every leaf identifier read gets a name hook
        let reads = p.sites.values().filter(|s| s.kind == HookKind::VariableRead).count();
        let leaves: usize = lines.iter().map(|(_, e)| {
            e.split(|c: char| !c.is_alphanumeric() && c != '_' && c != '.')
                .filter(|w| w.chars().next().is_some_and(|c| c.is_alphabetic()))
                .count()
        }).sum();
        prop_assert_eq!(reads, leaves);
    }
}
