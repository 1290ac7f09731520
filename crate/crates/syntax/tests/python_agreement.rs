//! Differential test against CPython's own parser: the same files must be
//! accepted or rejected, and the counts of load-position names, attribute
//! reads and calls must agree.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

use partexec_syntax::ast::{Ctx, Expr, ExprKind};
use partexec_syntax::parse_module;
use partexec_syntax::visit::{walk_expr, Visitor};

#[derive(Default)]
struct Counts {
    names: usize,
    attrs: usize,
    calls: usize,
}

impl Visitor for Counts {
    fn visit_expr(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Name { ctx: Ctx::Load, .. } => self.names += 1,
            ExprKind::Attribute { ctx: Ctx::Load, .. } => self.attrs += 1,
            ExprKind::Call { .. } => self.calls += 1,
            _ => {}
        }
        walk_expr(self, e);
    }
}

fn python_counts(files: &[PathBuf]) -> Option<BTreeMap<String, Option<[usize; 3]>>> {
    let script = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/node_counts.py");
    let mut child = Command::new("python3")
        .arg(script)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .ok()?;
    let list: String = files.iter().map(|p| format!("{}\n", p.display())).collect();
    child.stdin.take()?.write_all(list.as_bytes()).ok()?;
    let out = child.wait_with_output().ok()?;
    serde_json_lite(&String::from_utf8_lossy(&out.stdout))
}

/// Minimal reader for the `{path: null | [a, b, c]}` object printed by the
/// helper script; avoids a JSON dependency in this crate.
fn serde_json_lite(s: &str) -> Option<BTreeMap<String, Option<[usize; 3]>>> {
    let mut map = BTreeMap::new();
    let body = s.trim().strip_prefix('{')?.strip_suffix('}')?;
    let mut rest = body;
    while let Some(q) = rest.find('"') {
        let after = &rest[q + 1..];
        let end = after.find('"')?;
        let key = after[..end].to_string();
        let tail = after[end + 1..].trim_start().strip_prefix(':')?.trim_start();
        if let Some(t) = tail.strip_prefix("null") {
            map.insert(key, None);
            rest = t;
        } else {
            let close = tail.find(']')?;
            let nums: Vec<usize> =
                tail[1..close].split(',').map(|n| n.trim().parse().ok()).collect::<Option<_>>()?;
            map.insert(key, Some([nums[0], nums[1], nums[2]]));
            rest = &tail[close + 1..];
        }
    }
    Some(map)
}

fn corpus() -> Vec<PathBuf> {
    let dirs = std::env::var("PARTEXEC_AGREEMENT_DIRS").unwrap_or_else(|_| "/usr/lib/python3.10".into());
    let mut files = Vec::new();
    for dir in dirs.split(':') {
        let Ok(rd) = std::fs::read_dir(dir) else { continue };
        let mut v: Vec<PathBuf> =
            rd.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "py")).collect();
        v.sort();
        files.extend(v);
    }
    files
}

#[test]
fn agrees_with_cpython_on_library_sources() {
    let files = corpus();
    if files.is_empty() {
        eprintln!("no Python sources found; skipping");
        return;
    }
    let Some(expected) = python_counts(&files) else {
        eprintln!("python3 unavailable; skipping");
        return;
    };
    let mut mismatches = Vec::new();
    for (path, want) in &expected {
        let src = std::fs::read_to_string(path).unwrap();
        let got = parse_module(&src).map(|m| {
            let mut c = Counts::default();
            for s in &m.body {
                c.visit_stmt(s);
            }
            [c.names, c.attrs, c.calls]
        });
        match (want, &got) {
            (Some(w), Ok(g)) if w == g => {}
            (None, Err(_)) => {}
            _ => mismatches.push(format!("{path}: python={want:?} ours={got:?}")),
        }
    }
    assert!(expected.len() > 10, "too few files compared");
    assert!(mismatches.is_empty(), "{} mismatches:\n{}", mismatches.len(), mismatches.join("\n"));
}
