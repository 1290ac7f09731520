//! Coverage metrics, multi-run combination, corpus evaluation and type-error
//! detection.

use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::instrument::{instrument, BranchTable};
use crate::pipeline::{PipelineFactory, SourceError};
use crate::runtime::{Budget, ExecutionReport, Runtime, Terminal};
use crate::snippet::SourceSnippet;

/// Share of countable lines covered. An empty snippet counts as fully covered.
pub fn line_coverage(report: &ExecutionReport, snippet: &SourceSnippet) -> f64 {
    let lines = snippet.countable_lines();
    if lines.is_empty() {
        return 1.0;
    }
    let hit = lines.iter().filter(|l| report.covered_lines.contains(l)).count();
    hit as f64 / lines.len() as f64
}

/// `None` when the snippet has no branch arms.
pub fn branch_coverage(report: &ExecutionReport, table: &BranchTable) -> Option<f64> {
    if table.is_empty() {
        return None;
    }
    let hit = table.arms.iter().filter(|a| report.covered_branches.contains(&a.id)).count();
    Some(hit as f64 / table.len() as f64)
}

pub fn fully_executed(combined: &ExecutionReport, snippet: &SourceSnippet) -> bool {
    line_coverage(combined, snippet) == 1.0
}

/// Unions coverage; the terminal, injections and output come from the first
/// run with the best terminal (completed, then crashed, then timeout).
pub fn combine_runs(reports: &[ExecutionReport]) -> Option<ExecutionReport> {
    let best = reports.iter().rev().max_by_key(|r| r.terminal.rank())?;
    let mut out = best.clone();
    for r in reports {
        out.covered_lines.extend(r.covered_lines.iter().copied());
        out.covered_branches.extend(r.covered_branches.iter().copied());
    }
    Some(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageMetrics {
    pub code_coverage: f64,
    /// Mean over snippets that have at least one branch arm; 1.0 when none has.
    pub branch_coverage: f64,
    pub fully_executed_rate: f64,
    pub snippet_count: usize,
    pub runs_combined: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeErrorFinding {
    pub origin: String,
    pub exception_class: String,
    pub message: String,
    pub line_no: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrashInfo {
    pub exception_class: String,
    pub message: String,
    pub line_no: usize,
}

/// Findings exist only when the combined outcome is a type-mismatch crash;
/// they then cover every such crash over all runs, one per (line, class).
pub fn findings_from(origin: &str, runs: &[ExecutionReport]) -> Vec<TypeErrorFinding> {
    let Some(combined) = combine_runs(runs) else { return Vec::new() };
    if !matches!(combined.terminal, Terminal::Crashed { type_mismatch: true, .. }) {
        return Vec::new();
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for r in runs {
        if let Terminal::Crashed { exception_class, message, line_no, type_mismatch: true } = &r.terminal {
            if seen.insert((*line_no, exception_class.clone())) {
                out.push(TypeErrorFinding {
                    origin: origin.to_string(),
                    exception_class: exception_class.clone(),
                    message: message.clone(),
                    line_no: *line_no,
                });
            }
        }
    }
    out
}

fn other_crashes(runs: &[ExecutionReport]) -> Vec<CrashInfo> {
    let mut seen = BTreeSet::new();
    runs.iter()
        .filter_map(|r| match &r.terminal {
            Terminal::Crashed { exception_class, message, line_no, type_mismatch: false } => {
                seen.insert((*line_no, exception_class.clone())).then(|| CrashInfo {
                    exception_class: exception_class.clone(),
                    message: message.clone(),
                    line_no: *line_no,
                })
            }
            _ => None,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    pub code: String,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("corpus {path} line {line}: {source}")]
    Json { path: String, line: usize, source: serde_json::Error },
}

/// A directory of `*.py` files (id = file stem, sorted), a JSON Lines file of
/// `{"id", "code"}` objects, or a single source file.
pub fn load_corpus(path: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let p = path.display().to_string();
    let io = |source| CorpusError::Io { path: p.clone(), source };
    if path.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(path)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|f| f.is_file() && f.extension().is_some_and(|x| x == "py"))
            .collect();
        files.sort();
        return files
            .into_iter()
            .map(|f| {
                let code = std::fs::read_to_string(&f)
                    .map_err(|source| CorpusError::Io { path: f.display().to_string(), source })?;
                let id = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                Ok(CorpusEntry { id, code })
            })
            .collect();
    }
    let text = std::fs::read_to_string(path).map_err(io)?;
    if path.extension().is_some_and(|x| x == "jsonl") {
        return text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|source| CorpusError::Json { path: p.clone(), line: i + 1, source }))
            .collect();
    }
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(vec![CorpusEntry { id, code: text }])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnippetResult {
    pub id: String,
    pub coverage: f64,
    pub branch_coverage: Option<f64>,
    pub fully_executed: bool,
    pub findings: Vec<TypeErrorFinding>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub other_crashes: Vec<CrashInfo>,
    pub terminal: Terminal,
    pub injections: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub corpus: CoverageMetrics,
    pub snippets: Vec<SnippetResult>,
    pub skipped: Vec<Skipped>,
}

impl CorpusReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["id", "coverage", "branch_coverage", "fully_executed", "findings", "terminal"]).expect("in-memory csv");
        for s in &self.snippets {
            let kind = match s.terminal {
                Terminal::Completed => "completed",
                Terminal::Crashed { .. } => "crashed",
                Terminal::Timeout => "timeout",
            };
            w.write_record([
                s.id.clone(),
                format!("{:.6}", s.coverage),
                s.branch_coverage.map(|b| format!("{b:.6}")).unwrap_or_default(),
                s.fully_executed.to_string(),
                s.findings.len().to_string(),
                kind.to_string(),
            ])
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 fields")
    }

    pub fn fully_executed_ids(&self) -> BTreeSet<String> {
        self.snippets.iter().filter(|s| s.fully_executed).map(|s| s.id.clone()).collect()
    }

    pub fn findings(&self) -> Vec<&TypeErrorFinding> {
        self.snippets.iter().flat_map(|s| s.findings.iter()).collect()
    }
}

/// Macro-averages over snippets.
pub fn aggregate(results: &[SnippetResult], runs: usize) -> CoverageMetrics {
    let n = results.len();
    let mean = |xs: Vec<f64>| if xs.is_empty() { 1.0 } else { xs.iter().sum::<f64>() / xs.len() as f64 };
    CoverageMetrics {
        code_coverage: mean(results.iter().map(|r| r.coverage).collect()),
        branch_coverage: mean(results.iter().filter_map(|r| r.branch_coverage).collect()),
        fully_executed_rate: mean(results.iter().map(|r| if r.fully_executed { 1.0 } else { 0.0 }).collect()),
        snippet_count: n,
        runs_combined: runs,
    }
}

#[derive(Debug, Clone)]
pub struct Evaluator {
    pub runtime: Runtime,
    pub budget: Budget,
    pub runs: usize,
}

impl Default for Evaluator {
    fn default() -> Self {
        Evaluator { runtime: Runtime::default(), budget: Budget::default(), runs: 5 }
    }
}

pub enum Outcome {
    Evaluated(SnippetResult, Vec<ExecutionReport>),
    Skipped(Skipped),
}

impl Evaluator {
    /// Instruments once, runs `runs` times with a fresh pipeline each time.
    pub fn evaluate_snippet(&self, entry: &CorpusEntry, factory: &PipelineFactory) -> Result<Outcome, SourceError> {
        let snippet = SourceSnippet::new(entry.id.clone(), entry.code.clone());
        let program = match instrument(&snippet) {
            Ok(p) => p,
            Err(e) => return Ok(Outcome::Skipped(Skipped { id: entry.id.clone(), reason: e.to_string() })),
        };
        let mut reports = Vec::with_capacity(self.runs);
        for k in 1..=self.runs.max(1) {
            let pipeline = factory.make(&entry.id, k)?;
            reports.push(self.runtime.run(&program, &pipeline, &self.budget));
        }
        let combined = combine_runs(&reports).expect("at least one run");
        let result = SnippetResult {
            id: entry.id.clone(),
            coverage: line_coverage(&combined, &snippet),
            branch_coverage: branch_coverage(&combined, &program.branches),
            fully_executed: fully_executed(&combined, &snippet),
            findings: findings_from(&entry.id, &reports),
            other_crashes: other_crashes(&reports),
            terminal: combined.terminal.clone(),
            injections: combined.injections.len(),
        };
        Ok(Outcome::Evaluated(result, reports))
    }

    /// Snippets run in parallel, each in its own interpreter processes.
    pub fn evaluate_corpus(&self, entries: &[CorpusEntry], factory: &PipelineFactory) -> Result<CorpusReport, SourceError> {
        let outcomes: Vec<Outcome> =
            entries.par_iter().map(|e| self.evaluate_snippet(e, factory)).collect::<Result<_, _>>()?;
        let mut snippets = Vec::new();
        let mut skipped = Vec::new();
        for o in outcomes {
            match o {
                Outcome::Evaluated(r, _) => snippets.push(r),
                Outcome::Skipped(s) => skipped.push(s),
            }
        }
        Ok(CorpusReport { corpus: aggregate(&snippets, self.runs.max(1)), snippets, skipped })
    }

    pub fn detect_type_errors(&self, entry: &CorpusEntry, factory: &PipelineFactory) -> Result<Vec<TypeErrorFinding>, SourceError> {
        Ok(match self.evaluate_snippet(entry, factory)? {
            Outcome::Evaluated(r, _) => r.findings,
            Outcome::Skipped(_) => Vec::new(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Venn {
    pub only_a: Vec<String>,
    pub only_b: Vec<String>,
    pub both: Vec<String>,
    pub neither: Vec<String>,
}

/// Overlap of the fully executed snippets of two result sets over the same ids.
pub fn venn(a: &CorpusReport, b: &CorpusReport) -> Venn {
    let fa = a.fully_executed_ids();
    let fb = b.fully_executed_ids();
    let all: BTreeSet<String> =
        a.snippets.iter().chain(b.snippets.iter()).map(|s| s.id.clone()).collect();
    let mut v = Venn { only_a: vec![], only_b: vec![], both: vec![], neither: vec![] };
    for id in all {
        match (fa.contains(&id), fb.contains(&id)) {
            (true, true) => v.both.push(id),
            (true, false) => v.only_a.push(id),
            (false, true) => v.only_b.push(id),
            (false, false) => v.neither.push(id),
        }
    }
    v
}
