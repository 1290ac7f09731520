//! Execution of instrumented programs.
//!
//! The program runs in a python3 worker. Hooks evaluate the real expression
//! first; only an undefined-element failure reaches the host as a query, which
//! is answered by a [`Resolver`] that may validate candidate definitions in
//! the same worker through a [`Checker`] before one is injected.

mod worker;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::instrument::{HookKind, InstrumentedProgram};
use crate::types::{dummy_for, AbstractClass};

pub use worker::{Worker, WorkerError, PRELUDE};

/// Host-side slack on top of the run timeout before the worker is killed.
const GRACE: Duration = Duration::from_secs(2);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HookQuery {
    pub iid: u32,
    pub kind: HookKind,
    pub name: String,
    pub context_line: String,
    pub error_message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionSource {
    InteractiveValue,
    ComplementaryType,
    Cache,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionRecord {
    pub query: HookQuery,
    pub source: InjectionSource,
    pub code: String,
    pub abstract_class: Option<AbstractClass>,
    /// A third-party dummy fell back to `DummyObject()`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub downgraded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Terminal {
    Completed,
    Crashed {
        exception_class: String,
        message: String,
        line_no: usize,
        /// The exception is a `TypeError` or a subclass of it.
        type_mismatch: bool,
    },
    Timeout,
}

impl Terminal {
    /// completed > crashed > timeout
    pub fn rank(&self) -> u8 {
        match self {
            Terminal::Completed => 2,
            Terminal::Crashed { .. } => 1,
            Terminal::Timeout => 0,
        }
    }
}

mod stdout_text {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&String::from_utf8_lossy(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        Ok(String::deserialize(d)?.into_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub terminal: Terminal,
    pub covered_lines: BTreeSet<usize>,
    pub covered_branches: BTreeSet<u32>,
    pub injections: Vec<InjectionRecord>,
    #[serde(rename = "stdout", with = "stdout_text")]
    pub stdout_capture: Vec<u8>,
}

impl ExecutionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepsPolicy {
    pub allow_install: bool,
    pub allowlist: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Budget {
    pub timeout: Duration,
    pub check_timeout: Duration,
    pub max_injections: usize,
    pub deps: DepsPolicy,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            timeout: Duration::from_secs(10),
            check_timeout: Duration::from_secs(5),
            max_injections: 50,
            deps: DepsPolicy::default(),
        }
    }
}

/// A value the worker loaded from candidate code and holds ready to inject.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedValue {
    pub type_name: String,
    pub repr: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message}")]
pub struct CheckFailure {
    /// Exception class and message, e.g. `NameError: name 'path' is not defined`.
    pub message: String,
}

pub trait Checker {
    /// Executes `code` in a fresh namespace and loads the queried element.
    fn check(&mut self, code: &str, query: &HookQuery) -> Result<LoadedValue, CheckFailure>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    /// Inject the value loaded by the last successful check of `code`.
    Value { code: String },
    Dummy(AbstractClass),
    /// Let the original exception propagate.
    Unresolved,
}

pub trait Resolver {
    fn resolve(&self, query: &HookQuery, checker: &mut dyn Checker) -> Resolution;
}

/// Answers nothing; every undefined element crashes the run.
#[derive(Debug, Clone, Copy, Default)]
pub struct FailingResolver;

impl Resolver for FailingResolver {
    fn resolve(&self, _query: &HookQuery, _checker: &mut dyn Checker) -> Resolution {
        Resolution::Unresolved
    }
}

pub fn default_python() -> PathBuf {
    std::env::var_os("PARTEXEC_PYTHON").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("python3"))
}

#[derive(Debug, Clone)]
pub struct Runtime {
    pub python: PathBuf,
}

impl Default for Runtime {
    fn default() -> Self {
        Runtime { python: default_python() }
    }
}

pub fn run(program: &InstrumentedProgram, pipeline: &dyn Resolver, limits: &Budget) -> ExecutionReport {
    Runtime::default().run(program, pipeline, limits)
}

fn check_message(code: &str, kind: HookKind, name: &str, target: &str, limits: &Budget) -> Value {
    json!({
        "type": "check",
        "code": code,
        "kind": kind.as_str(),
        "name": name,
        "target": target,
        "timeout": limits.check_timeout.as_secs_f64(),
        "deps": limits.deps,
    })
}

fn checked(reply: Value) -> Result<LoadedValue, CheckFailure> {
    if reply["type"] != "checked" {
        return Err(CheckFailure { message: format!("RuntimeError: unexpected worker reply {reply}") });
    }
    if reply["ok"].as_bool() == Some(true) {
        Ok(LoadedValue {
            type_name: reply["value_type"].as_str().unwrap_or_default().to_string(),
            repr: reply["value_repr"].as_str().unwrap_or_default().to_string(),
        })
    } else {
        Err(CheckFailure { message: reply["error"].as_str().unwrap_or("RuntimeError: check failed").to_string() })
    }
}

struct SessionChecker<'a> {
    worker: &'a mut Worker,
    program: &'a InstrumentedProgram,
    limits: &'a Budget,
    dead: bool,
}

impl Checker for SessionChecker<'_> {
    fn check(&mut self, code: &str, query: &HookQuery) -> Result<LoadedValue, CheckFailure> {
        if self.dead {
            return Err(CheckFailure { message: "RuntimeError: worker is gone".to_string() });
        }
        let target = self.program.sites.get(&query.iid).map(|s| s.target.as_str()).unwrap_or(&query.name);
        let msg = check_message(code, query.kind, &query.name, target, self.limits);
        let deadline = Instant::now() + self.limits.check_timeout + GRACE;
        match self.worker.send(&msg).and_then(|_| self.worker.recv(Some(deadline))) {
            Ok(reply) => checked(reply),
            Err(e) => {
                self.dead = true;
                self.worker.kill();
                Err(CheckFailure { message: format!("RuntimeError: {e}") })
            }
        }
    }
}

/// Runs candidate code against queries outside of any program run.
pub struct StandaloneChecker {
    worker: Worker,
    limits: Budget,
    targets: BTreeMap<u32, String>,
}

impl StandaloneChecker {
    pub fn new(python: &Path, limits: Budget) -> Result<Self, WorkerError> {
        Ok(StandaloneChecker { worker: Worker::spawn(python)?, limits, targets: BTreeMap::new() })
    }

    /// Expression the element is read from when `iid` is checked: the base for
    /// attributes, the callee for calls.
    pub fn set_target(&mut self, iid: u32, target: impl Into<String>) {
        self.targets.insert(iid, target.into());
    }

    /// Evaluates a predicate over a freshly built dummy bound to `v`.
    pub fn probe_dummy(&mut self, class: AbstractClass, setup: &str, predicate: &str) -> Result<ProbeResult, WorkerError> {
        let d = dummy_for(class);
        self.worker.send(&json!({
            "type": "probe", "expr": d.expr, "module": d.module, "setup": setup, "predicate": predicate,
        }))?;
        let r = self.worker.recv(Some(Instant::now() + Duration::from_secs(120)))?;
        Ok(ProbeResult {
            ok: r["ok"].as_bool().unwrap_or(false),
            downgraded: r["downgraded"].as_bool().unwrap_or(false),
            error: r["error"].as_str().map(str::to_string),
            repr: r["repr"].as_str().unwrap_or_default().to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeResult {
    pub ok: bool,
    pub downgraded: bool,
    pub error: Option<String>,
    pub repr: String,
}

impl Checker for StandaloneChecker {
    fn check(&mut self, code: &str, query: &HookQuery) -> Result<LoadedValue, CheckFailure> {
        let target = self.targets.get(&query.iid).cloned().unwrap_or_else(|| query.name.clone());
        let msg = check_message(code, query.kind, &query.name, &target, &self.limits);
        let deadline = Instant::now() + self.limits.check_timeout + GRACE;
        match self.worker.send(&msg).and_then(|_| self.worker.recv(Some(deadline))) {
            Ok(reply) => checked(reply),
            Err(e) => Err(CheckFailure { message: format!("RuntimeError: {e}") }),
        }
    }
}

struct Origin {
    code: String,
    class: Option<AbstractClass>,
    source: InjectionSource,
}

impl Runtime {
    pub fn run(&self, program: &InstrumentedProgram, pipeline: &dyn Resolver, limits: &Budget) -> ExecutionReport {
        let mut report = ExecutionReport {
            terminal: Terminal::Timeout,
            covered_lines: BTreeSet::new(),
            covered_branches: BTreeSet::new(),
            injections: Vec::new(),
            stdout_capture: Vec::new(),
        };
        let mut worker = match Worker::spawn(&self.python) {
            Ok(w) => w,
            Err(e) => {
                report.terminal = Terminal::Crashed {
                    exception_class: "WorkerError".to_string(),
                    message: e.to_string(),
                    line_no: 0,
                    type_mismatch: false,
                };
                return report;
            }
        };
        let call_names: BTreeMap<String, &str> = program
            .sites
            .values()
            .filter(|s| s.kind == HookKind::Call)
            .map(|s| (s.iid.to_string(), s.name.as_str()))
            .collect();
        let credits: BTreeMap<String, &Vec<u32>> =
            program.owners.entry_credits.iter().map(|(k, v)| (k.to_string(), v)).collect();
        let start = json!({
            "type": "start",
            "source": program.instrumented_text,
            "file": file_name(&program.original.origin),
            "owners": program.owners.owners,
            "entry_credits": credits,
            "call_names": call_names,
            "timeout": limits.timeout.as_secs_f64(),
        });
        let deadline = Instant::now() + limits.timeout;
        let mut hard = deadline + GRACE;
        let mut origins: BTreeMap<u32, Origin> = BTreeMap::new();
        let mut dispatched = 0usize;
        if worker.send(&start).is_err() {
            report.terminal = worker_exit(&mut worker);
            return report;
        }
        loop {
            let msg = match worker.recv(Some(hard)) {
                Ok(m) => m,
                Err(WorkerError::Timeout) => {
                    worker.kill();
                    report.terminal = Terminal::Timeout;
                    return report;
                }
                Err(_) => {
                    report.terminal = worker_exit(&mut worker);
                    return report;
                }
            };
            match msg["type"].as_str().unwrap_or_default() {
                "query" => {
                    if Instant::now() >= deadline {
                        let _ = worker.send(&json!({"type": "abort"}));
                        continue;
                    }
                    if dispatched >= limits.max_injections {
                        let _ = worker.send(&json!({"type": "fail"}));
                        continue;
                    }
                    let query = self.query_from(program, &msg);
                    let mut checker = SessionChecker { worker: &mut worker, program, limits, dead: false };
                    let resolution = pipeline.resolve(&query, &mut checker);
                    if checker.dead {
                        report.terminal = Terminal::Timeout;
                        return report;
                    }
                    let (inject, origin) = match resolution {
                        Resolution::Value { code } => (
                            json!({"type": "inject", "source": "interactive_value"}),
                            Origin { code, class: None, source: InjectionSource::InteractiveValue },
                        ),
                        Resolution::Dummy(class) => {
                            let d = dummy_for(class);
                            (
                                json!({"type": "inject", "source": "complementary_type", "expr": d.expr, "module": d.module}),
                                Origin { code: d.expr.to_string(), class: Some(class), source: InjectionSource::ComplementaryType },
                            )
                        }
                        Resolution::Unresolved => {
                            let _ = worker.send(&json!({"type": "fail"}));
                            hard = hard.max(Instant::now() + GRACE);
                            continue;
                        }
                    };
                    dispatched += 1;
                    if worker.send(&inject).is_err() {
                        report.terminal = worker_exit(&mut worker);
                        return report;
                    }
                    let ack = match worker.recv(Some(Instant::now() + Duration::from_secs(120))) {
                        Ok(a) => a,
                        Err(_) => {
                            worker.kill();
                            report.terminal = Terminal::Timeout;
                            return report;
                        }
                    };
                    if ack["ok"].as_bool() == Some(true) {
                        report.injections.push(InjectionRecord {
                            query: query.clone(),
                            source: origin.source,
                            code: origin.code.clone(),
                            abstract_class: origin.class,
                            downgraded: ack["downgraded"].as_bool().unwrap_or(false),
                        });
                        origins.insert(query.iid, origin);
                    }
                    hard = hard.max(Instant::now() + GRACE);
                }
                "cache_hit" => {
                    let query = self.query_from(program, &msg);
                    let first = msg["info"]["iid"].as_u64().unwrap_or_default() as u32;
                    if let Some(o) = origins.get(&first) {
                        report.injections.push(InjectionRecord {
                            query,
                            source: InjectionSource::Cache,
                            code: o.code.clone(),
                            abstract_class: o.class,
                            downgraded: false,
                        });
                    }
                }
                "done" => {
                    report.terminal = terminal_from(&msg["terminal"]);
                    let owners: BTreeSet<u32> =
                        msg["lines"].as_array().into_iter().flatten().filter_map(|v| v.as_u64()).map(|v| v as u32).collect();
                    report.covered_lines = program
                        .original
                        .countable_lines()
                        .into_iter()
                        .filter(|l| {
                            let o = program.owners.owners.get(*l).copied().unwrap_or(0);
                            o != 0 && owners.contains(&o)
                        })
                        .collect();
                    report.covered_branches =
                        msg["arms"].as_array().into_iter().flatten().filter_map(|v| v.as_u64()).map(|v| v as u32).collect();
                    report.stdout_capture = base64::engine::general_purpose::STANDARD
                        .decode(msg["stdout_b64"].as_str().unwrap_or_default())
                        .unwrap_or_default();
                    return report;
                }
                other => {
                    log::warn!("unexpected worker message {other}");
                }
            }
        }
    }

    fn query_from(&self, program: &InstrumentedProgram, msg: &Value) -> HookQuery {
        let iid = msg["iid"].as_u64().unwrap_or_default() as u32;
        let site = program.sites.get(&iid);
        let kind = msg["kind"].as_str().and_then(HookKind::parse).or(site.map(|s| s.kind)).unwrap_or(HookKind::VariableRead);
        HookQuery {
            iid,
            kind,
            name: msg["name"].as_str().map(str::to_string).or_else(|| site.map(|s| s.name.clone())).unwrap_or_default(),
            context_line: site.map(|s| s.original_line_text.trim().to_string()).unwrap_or_default(),
            error_message: msg["error"].as_str().unwrap_or("Error").to_string(),
        }
    }
}

fn file_name(origin: &str) -> String {
    Path::new(origin)
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .filter(|f| f.ends_with(".py"))
        .unwrap_or_else(|| "snippet.py".to_string())
}

fn worker_exit(worker: &mut Worker) -> Terminal {
    let status = worker.exit_status();
    worker.kill();
    Terminal::Crashed {
        exception_class: "WorkerExit".to_string(),
        message: match status {
            Some(c) => format!("interpreter exited with status {c}"),
            None => "interpreter terminated".to_string(),
        },
        line_no: 0,
        type_mismatch: false,
    }
}

fn terminal_from(v: &Value) -> Terminal {
    match v["kind"].as_str() {
        Some("completed") => Terminal::Completed,
        Some("crashed") => Terminal::Crashed {
            exception_class: v["class"].as_str().unwrap_or_default().to_string(),
            message: v["message"].as_str().unwrap_or_default().to_string(),
            line_no: v["line"].as_u64().unwrap_or(0) as usize,
            type_mismatch: v["type_error"].as_bool().unwrap_or(false),
        },
        _ => Terminal::Timeout,
    }
}
