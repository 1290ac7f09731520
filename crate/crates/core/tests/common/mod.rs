// Shared by the core integration tests and the acceptance harness.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use base64::Engine;
use partexec_core::eval::{load_corpus, CorpusEntry};
use partexec_core::instrument::ArmKind;
use partexec_core::runtime::default_python;
use partexec_core::{ExecutionReport, Terminal};
use serde_json::Value;

pub fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

pub fn fixture(name: &str) -> PathBuf {
    root().join("fixtures").join(name)
}

pub fn corpus(name: &str) -> Vec<CorpusEntry> {
    load_corpus(&fixture(name)).unwrap()
}

pub fn entry_path(suite: &str, id: &str) -> PathBuf {
    fixture(suite).join(format!("{id}.py"))
}

fn python_json(script: &str, file: &Path) -> Value {
    let out = Command::new(default_python())
        .arg(root().join("oracles").join(script))
        .arg(file)
        .env("PYTHONHASHSEED", "0")
        .current_dir(std::env::temp_dir())
        .output()
        .expect("python3 is required");
    assert!(out.status.success(), "{script} failed on {}: {}", file.display(), String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[derive(Debug, PartialEq, Eq)]
pub struct Observed {
    pub stdout: Vec<u8>,
    /// `None` when the run completed, else (class, message).
    pub crash: Option<(String, String)>,
}

/// The snippet run by plain python, no hooks.
pub fn vanilla(file: &Path) -> Observed {
    let v = python_json("vanilla.py", file);
    let stdout = base64::engine::general_purpose::STANDARD.decode(v["stdout_b64"].as_str().unwrap()).unwrap();
    let t = &v["terminal"];
    let crash = (t["kind"] == "crashed")
        .then(|| (t["class"].as_str().unwrap().to_string(), t["message"].as_str().unwrap().to_string()));
    Observed { stdout, crash }
}

pub fn observed(report: &ExecutionReport) -> Observed {
    let crash = match &report.terminal {
        Terminal::Completed => None,
        Terminal::Crashed { exception_class, message, .. } => Some((exception_class.clone(), message.clone())),
        Terminal::Timeout => Some(("<timeout>".into(), String::new())),
    };
    Observed { stdout: report.stdout_capture.clone(), crash }
}

pub struct Oracle {
    pub countable: Vec<usize>,
    pub covered: Vec<usize>,
    pub arms_hit: Vec<(usize, String)>,
    pub arms_all: Vec<(usize, String)>,
    /// (class, line) of an uncaught exception.
    pub crash: Option<(String, usize)>,
}

impl Oracle {
    pub fn line_coverage(&self) -> f64 {
        if self.countable.is_empty() {
            1.0
        } else {
            self.covered.len() as f64 / self.countable.len() as f64
        }
    }

    pub fn branch_coverage(&self) -> Option<f64> {
        (!self.arms_all.is_empty()).then(|| self.arms_hit.len() as f64 / self.arms_all.len() as f64)
    }
}

fn pairs(v: &Value) -> Vec<(usize, String)> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|p| (p[0].as_u64().unwrap() as usize, p[1].as_str().unwrap().to_string()))
        .collect()
}

/// Brute-force line marker over the original snippet.
pub fn oracle(file: &Path) -> Oracle {
    let v = python_json("line_marker.py", file);
    let nums = |k: &str| v[k].as_array().unwrap().iter().map(|n| n.as_u64().unwrap() as usize).collect();
    let t = &v["terminal"];
    Oracle {
        countable: nums("countable"),
        covered: nums("covered"),
        arms_hit: pairs(&v["arms_hit"]),
        arms_all: pairs(&v["arms_all"]),
        crash: (t["kind"] == "crashed").then(|| (t["class"].as_str().unwrap().to_string(), t["line"].as_u64().unwrap() as usize)),
    }
}

pub fn arm_kind(k: ArmKind) -> &'static str {
    match k {
        ArmKind::Then => "then",
        ArmKind::Else => "else",
        ArmKind::LoopEnter => "loop_enter",
        ArmKind::LoopExit => "loop_exit",
        ArmKind::Handler => "handler",
        ArmKind::ExprTrue => "expr_true",
        ArmKind::ExprFalse => "expr_false",
    }
}

/// `ast.dump` of a module with the first argument of every `_n_`/`_a_`/`_c_`
/// call replaced by the name `iid`, so two rewrites compare by shape only.
pub fn hook_shape(source: &str) -> String {
    const SCRIPT: &str = r#"
import ast, sys
class V(ast.NodeTransformer):
    def visit_Call(self, node):
        self.generic_visit(node)
        if isinstance(node.func, ast.Name) and node.func.id in ("_n_", "_a_", "_c_") and node.args:
            node.args[0] = ast.Name(id="iid", ctx=ast.Load())
        return node
print(ast.dump(V().visit(ast.parse(sys.stdin.read()))))
"#;
    use std::io::Write;
    let mut child = Command::new(default_python())
        .args(["-c", SCRIPT])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(source.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    String::from_utf8(out.stdout).unwrap()
}

#[derive(Debug)]
pub struct ExpectedFinding {
    pub exception_class: String,
    pub message: String,
    pub line_no: usize,
}

pub fn expected_findings() -> BTreeMap<String, ExpectedFinding> {
    let text = std::fs::read_to_string(fixture("type_errors").join("expected.json")).unwrap();
    let v: BTreeMap<String, Value> = serde_json::from_str(&text).unwrap();
    v.into_iter()
        .map(|(k, e)| {
            let f = ExpectedFinding {
                exception_class: e["exception_class"].as_str().unwrap().into(),
                message: e["message"].as_str().unwrap().into(),
                line_no: e["line_no"].as_u64().unwrap() as usize,
            };
            (k, f)
        })
        .collect()
}

/// Original statement and its expected rewrite.
pub const HOOK_ROWS: [(&str, &str); 3] = [
    ("Var1 = Var2 + 1", r#"Var1 = _n_(iid, "Var2", lambda: Var2) + 1"#),
    ("Opt1.Attr1 = Opt2.Attr2", r#"Opt1.Attr1 = _a_(iid, _n_(iid, "Opt2", lambda: Opt2), "Attr2")"#),
    ("Var = Foo()", r#"Var = _c_(iid, _n_(535, "Foo", lambda: Foo))"#),
];
