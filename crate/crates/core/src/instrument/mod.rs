//! Source rewriting that wraps name reads, attribute reads and calls in
//! execution hooks.
//!
//! Rewriting splices text into the original source instead of regenerating
//! it, so every hook lands on the line of the node it wraps and no line
//! numbers shift. Branch probes (`_t_`, `_l_`, `_h_`) are spliced the same way.

mod owners;

use std::collections::BTreeMap;

use partexec_syntax::ast::*;
use partexec_syntax::{parse_module, LineIndex, ParseError, Span};
use serde::{Deserialize, Serialize};

use crate::snippet::SourceSnippet;

pub use owners::{owner_map, OwnerMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum HookKind {
    VariableRead,
    AttributeRead,
    Call,
}

impl HookKind {
    pub fn as_str(self) -> &'static str {
        match self {
            HookKind::VariableRead => "variable_read",
            HookKind::AttributeRead => "attribute_read",
            HookKind::Call => "call",
        }
    }

    pub fn parse(s: &str) -> Option<HookKind> {
        match s {
            "variable_read" => Some(HookKind::VariableRead),
            "attribute_read" => Some(HookKind::AttributeRead),
            "call" => Some(HookKind::Call),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HookSite {
    pub iid: u32,
    pub kind: HookKind,
    pub name: String,
    pub line_no: usize,
    pub original_line_text: String,
    /// Base expression for attribute reads, callee expression for calls.
    pub target: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmKind {
    Then,
    Else,
    LoopEnter,
    LoopExit,
    Handler,
    ExprTrue,
    ExprFalse,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchArm {
    pub id: u32,
    pub line: usize,
    pub kind: ArmKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchTable {
    pub arms: Vec<BranchArm>,
}

impl BranchTable {
    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct InstrumentedProgram {
    pub instrumented_text: String,
    pub sites: BTreeMap<u32, HookSite>,
    pub original: SourceSnippet,
    pub branches: BranchTable,
    pub owners: OwnerMap,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum InstrumentError {
    #[error("unknown instrument id {0}")]
    UnknownIid(u32),
}

#[derive(Serialize)]
struct SiteEntry<'a> {
    iid: u32,
    kind: &'static str,
    name: &'a str,
    line: usize,
    text: &'a str,
}

impl InstrumentedProgram {
    /// Sidecar map `{"sites": [{"iid", "kind", "name", "line", "text"}]}`.
    pub fn site_map_json(&self) -> serde_json::Value {
        let sites: Vec<SiteEntry> = self
            .sites
            .values()
            .map(|s| SiteEntry {
                iid: s.iid,
                kind: s.kind.as_str(),
                name: &s.name,
                line: s.line_no,
                text: &s.original_line_text,
            })
            .collect();
        serde_json::json!({ "sites": sites })
    }
}

pub fn locate(program: &InstrumentedProgram, iid: u32) -> Result<&HookSite, InstrumentError> {
    program.sites.get(&iid).ok_or(InstrumentError::UnknownIid(iid))
}

pub fn count_branches(snippet: &SourceSnippet) -> Result<BranchTable, ParseError> {
    Ok(instrument(snippet)?.branches)
}

/// Callees that inspect the calling frame; wrapping them in `_c_` would make
/// them see the hook's frame instead of the snippet's.
const FRAME_SENSITIVE: &[&str] = &["super", "locals", "globals", "vars", "dir", "eval", "exec", "breakpoint"];
const FRAME_SENSITIVE_ATTRS: &[&str] = &["_getframe", "currentframe"];

pub fn instrument(snippet: &SourceSnippet) -> Result<InstrumentedProgram, ParseError> {
    let src = snippet.text.as_str();
    let module = parse_module(src)?;
    let idx = LineIndex::new(src);
    let mut rw = Rewriter {
        src,
        idx: &idx,
        edits: Vec::new(),
        seq: 0,
        sites: BTreeMap::new(),
        arms: Vec::new(),
        lazy_annotations: has_future_annotations(&module),
    };
    rw.body(&module.body);
    let text = rw.apply();
    let owners = owner_map(&module.body, &idx);
    Ok(InstrumentedProgram {
        instrumented_text: text,
        sites: rw.sites,
        original: snippet.clone(),
        branches: BranchTable { arms: rw.arms },
        owners,
    })
}

fn has_future_annotations(m: &Module) -> bool {
    m.body.iter().any(|s| match &s.kind {
        StmtKind::ImportFrom { module: Some(m), level: 0, names } => {
            m == "__future__" && names.iter().any(|a| a.name == "annotations")
        }
        _ => false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EditClass {
    Suffix,
    Replace,
    Prefix,
}

#[derive(Debug)]
struct Edit {
    pos: usize,
    end: usize,
    class: EditClass,
    order: u64,
    text: String,
}

struct Rewriter<'a> {
    src: &'a str,
    idx: &'a LineIndex,
    edits: Vec<Edit>,
    seq: u64,
    sites: BTreeMap<u32, HookSite>,
    arms: Vec<BranchArm>,
    lazy_annotations: bool,
}

/// String literal for `s` quoted so it can sit inside an f-string field
/// delimited by `fq`.
fn lit(s: &str, fq: Option<char>) -> String {
    let q = if fq == Some('"') { '\'' } else { '"' };
    format!("{q}{s}{q}")
}

impl<'a> Rewriter<'a> {
    fn push(&mut self, pos: usize, end: usize, class: EditClass, text: String) {
        self.seq += 1;
        let order = match class {
            EditClass::Suffix => u64::MAX - self.seq,
            _ => self.seq,
        };
        self.edits.push(Edit { pos, end, class, order, text });
    }

    fn prefix(&mut self, pos: usize, text: String) {
        self.push(pos, pos, EditClass::Prefix, text);
    }

    fn suffix(&mut self, pos: usize, text: &str) {
        self.push(pos, pos, EditClass::Suffix, text.to_string());
    }

    fn replace(&mut self, span: Span, text: String) {
        self.push(span.start, span.end, EditClass::Replace, text);
    }

    fn apply(&mut self) -> String {
        self.edits.sort_by(|a, b| (a.pos, a.class, a.order).cmp(&(b.pos, b.class, b.order)));
        let mut out = String::with_capacity(self.src.len() * 3);
        let mut at = 0;
        for e in &self.edits {
            debug_assert!(e.pos >= at, "overlapping edits");
            out.push_str(&self.src[at..e.pos]);
            out.push_str(&e.text);
            at = e.end.max(e.pos);
        }
        out.push_str(&self.src[at..]);
        out
    }

    fn iid(&self) -> u32 {
        self.sites.len() as u32 + 1
    }

    fn line_text(&self, line: usize) -> String {
        let start = self.idx.line_start(line);
        let rest = &self.src[start..];
        let end = rest.find(['\n', '\r']).unwrap_or(rest.len());
        rest[..end].to_string()
    }

    fn site(&mut self, kind: HookKind, name: &str, at: usize, target: String) -> u32 {
        let iid = self.iid();
        let line_no = self.idx.line(at);
        let original_line_text = self.line_text(line_no);
        self.sites.insert(
            iid,
            HookSite { iid, kind, name: name.to_string(), line_no, original_line_text, target },
        );
        iid
    }

    fn arm(&mut self, at: usize, kind: ArmKind) -> u32 {
        let id = self.arms.len() as u32 + 1;
        self.arms.push(BranchArm { id, line: self.idx.line(at), kind });
        id
    }

    /// Offset of the first token of a node whose span may start with grouping parens.
    fn skip_open(&self, mut pos: usize, end: usize) -> usize {
        let b = self.src.as_bytes();
        while pos < end {
            match b[pos] {
                b'(' | b' ' | b'\t' | b'\x0c' | b'\n' | b'\r' | b'\\' => pos += 1,
                b'#' => {
                    while pos < end && b[pos] != b'\n' && b[pos] != b'\r' {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        pos
    }

    fn text(&self, span: Span) -> &'a str {
        &self.src[span.start..span.end]
    }

    fn body(&mut self, stmts: &[Stmt]) {
        for s in stmts {
            self.stmt(s);
        }
    }

    fn annotation(&mut self, e: &Expr) {
        if !self.lazy_annotations {
            self.expr(e, None);
        }
    }

    fn params(&mut self, p: &Params) {
        for param in p.all() {
            if let Some(a) = &param.annotation {
                self.annotation(a);
            }
            if let Some(d) = &param.default {
                self.expr(d, None);
            }
        }
    }

    fn probe_test(&mut self, test: &Expr, yes: ArmKind, no: ArmKind, at: usize, fq: Option<char>) {
        let a = self.arm(at, yes);
        let b = self.arm(at, no);
        self.prefix(test.span.start, format!("_t_({a}, {b}, "));
        self.suffix(test.span.end, ")");
        self.expr(test, fq);
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Expr(e) => self.expr(e, None),
            StmtKind::Assign { targets, value } => {
                for t in targets {
                    self.target(t);
                }
                self.expr(value, None);
            }
            // augmented assignment targets are left alone, reads included
            StmtKind::AugAssign { value, .. } => self.expr(value, None),
            StmtKind::AnnAssign { target, annotation, value } => {
                self.target(target);
                self.annotation(annotation);
                if let Some(v) = value {
                    self.expr(v, None);
                }
            }
            StmtKind::Pass | StmtKind::Break | StmtKind::Continue => {}
            StmtKind::Global(_) | StmtKind::Nonlocal(_) => {}
            StmtKind::Import(_) | StmtKind::ImportFrom { .. } => {}
            StmtKind::Return(x) => {
                if let Some(x) = x {
                    self.expr(x, None);
                }
            }
            StmtKind::Delete(ts) => {
                for t in ts {
                    self.target(t);
                }
            }
            StmtKind::Raise { exc, cause } => {
                for x in [exc, cause].into_iter().flatten() {
                    self.expr(x, None);
                }
            }
            StmtKind::Assert { test, msg } => {
                self.expr(test, None);
                if let Some(m) = msg {
                    self.expr(m, None);
                }
            }
            StmtKind::If { test, body, orelse, .. } => {
                self.probe_test(test, ArmKind::Then, ArmKind::Else, s.header.start, None);
                self.body(body);
                self.body(orelse);
            }
            StmtKind::While { test, body, orelse, .. } => {
                self.probe_test(test, ArmKind::LoopEnter, ArmKind::LoopExit, s.header.start, None);
                self.body(body);
                self.body(orelse);
            }
            StmtKind::For { is_async, target, iter, body, orelse, .. } => {
                self.target(target);
                if *is_async {
                    self.expr(iter, None);
                } else {
                    let a = self.arm(s.header.start, ArmKind::LoopEnter);
                    let b = self.arm(s.header.start, ArmKind::LoopExit);
                    let bare_tuple = matches!(iter.kind, ExprKind::Tuple { parenthesized: false, .. });
                    let (open, close) = if bare_tuple { ("(", "))") } else { ("", ")") };
                    self.prefix(iter.span.start, format!("_l_({a}, {b}, {open}"));
                    self.suffix(iter.span.end, close);
                    self.expr(iter, None);
                }
                self.body(body);
                self.body(orelse);
            }
            StmtKind::With { items, body, .. } => {
                for it in items {
                    self.expr(&it.context, None);
                    if let Some(v) = &it.vars {
                        self.target(v);
                    }
                }
                self.body(body);
            }
            StmtKind::Try { body, handlers, orelse, finalbody, .. } => {
                self.body(body);
                for h in handlers {
                    let arm = self.arm(h.header.start, ArmKind::Handler);
                    match &h.typ {
                        Some(t) => {
                            self.prefix(t.span.start, format!("_h_({arm}, "));
                            self.suffix(t.span.end, ")");
                            self.expr(t, None);
                        }
                        None => {
                            let at = h.header.start + "except".len();
                            self.prefix(at, format!(" _h_({arm}, BaseException)"));
                        }
                    }
                    self.body(&h.body);
                }
                self.body(orelse);
                self.body(finalbody);
            }
            StmtKind::FunctionDef { decorators, params, returns, body, .. } => {
                for d in decorators {
                    self.expr(d, None);
                }
                self.params(params);
                if let Some(r) = returns {
                    self.annotation(r);
                }
                self.body(body);
            }
            StmtKind::ClassDef { decorators, bases, body, .. } => {
                for d in decorators {
                    self.expr(d, None);
                }
                for b in bases {
                    self.expr(b.value(), None);
                }
                self.body(body);
            }
            StmtKind::Match { subject, cases } => {
                self.expr(subject, None);
                for c in cases {
                    if let Some(g) = &c.guard {
                        self.expr(g, None);
                    }
                    self.body(&c.body);
                }
            }
        }
    }

    /// Store/Del position: bare names stay untouched, and so does the chain of
    /// bases leading to the written attribute or item.
    fn target(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Name { .. } => {}
            ExprKind::Attribute { value, .. } => self.spine(value),
            ExprKind::Subscript { value, slice, .. } => {
                self.spine(value);
                self.expr(slice, None);
            }
            ExprKind::Tuple { elts, .. } | ExprKind::List { elts, .. } => {
                for x in elts {
                    self.target(x);
                }
            }
            ExprKind::Starred { value, .. } => self.target(value),
            _ => self.expr(e, None),
        }
    }

    fn spine(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Name { .. } => {}
            ExprKind::Attribute { value, .. } => self.spine(value),
            ExprKind::Subscript { value, slice, .. } => {
                self.spine(value);
                self.expr(slice, None);
            }
            _ => self.expr(e, None),
        }
    }

    fn comprehensions(&mut self, gens: &[Comprehension], fq: Option<char>) {
        for g in gens {
            self.target(&g.target);
            self.expr(&g.iter, fq);
            for c in &g.ifs {
                self.expr(c, fq);
            }
        }
    }

    fn call_name(&self, func: &Expr) -> String {
        let raw = self.text(func.span);
        let mut name: String = raw.split_whitespace().collect::<Vec<_>>().join(" ");
        if let Some(cut) = name.char_indices().nth(80).map(|(i, _)| i) {
            name.truncate(cut);
        }
        name
    }

    fn frame_sensitive(func: &Expr) -> bool {
        match &func.kind {
            ExprKind::Name { id, .. } => FRAME_SENSITIVE.contains(&id.as_str()),
            ExprKind::Attribute { attr, .. } => FRAME_SENSITIVE_ATTRS.contains(&attr.name.as_str()),
            _ => false,
        }
    }

    /// `fq` is the quote of the enclosing f-string when inside a replacement field.
    fn expr(&mut self, e: &Expr, fq: Option<char>) {
        match &e.kind {
            ExprKind::Name { id, ctx } => {
                if *ctx != Ctx::Load {
                    return;
                }
                let at = self.skip_open(e.span.start, e.span.end);
                let end = at + id.len();
                let iid = self.site(HookKind::VariableRead, id, at, id.clone());
                self.prefix(at, format!("_n_({iid}, {}, lambda: ", lit(id, fq)));
                self.suffix(end, ")");
            }
            ExprKind::Constant => {}
            ExprKind::Str { pieces } => {
                for p in pieces {
                    for f in &p.fields {
                        if f.rewritable {
                            self.expr(&f.expr, Some(f.quote));
                        }
                    }
                }
            }
            ExprKind::Attribute { value, dot, attr, ctx } => {
                if *ctx != Ctx::Load {
                    self.spine(value);
                    return;
                }
                let target = self.text(value.span).to_string();
                let iid = self.site(HookKind::AttributeRead, &attr.name, attr.span.start, target);
                self.prefix(value.span.start, format!("_a_({iid}, "));
                self.replace(*dot, ",".to_string());
                self.replace(attr.span, format!(" {})", lit(&attr.name, fq)));
                self.expr(value, fq);
            }
            ExprKind::Subscript { value, slice, .. } => {
                self.expr(value, fq);
                self.expr(slice, fq);
            }
            ExprKind::Slice { lower, upper, step } => {
                for x in [lower, upper, step].into_iter().flatten() {
                    self.expr(x, fq);
                }
            }
            ExprKind::Call { func, args, lparen, .. } => {
                if !Self::frame_sensitive(func) {
                    let name = self.call_name(func);
                    let target = self.text(func.span).to_string();
                    let iid = self.site(HookKind::Call, &name, lparen.start, target);
                    self.prefix(func.span.start, format!("_c_({iid}, "));
                    let sep = if args.is_empty() { "" } else { ", " };
                    self.replace(*lparen, sep.to_string());
                }
                self.expr(func, fq);
                for a in args {
                    let v = a.value();
                    if let ExprKind::GeneratorExp { parenthesized: false, .. } = v.kind {
                        self.prefix(v.span.start, "(".to_string());
                        self.suffix(v.span.end, ")");
                    }
                    self.expr(v, fq);
                }
            }
            ExprKind::BinOp { left, right, .. } => {
                self.expr(left, fq);
                self.expr(right, fq);
            }
            ExprKind::UnaryOp { operand, .. } => self.expr(operand, fq),
            ExprKind::BoolOp { values, .. } => {
                for x in values {
                    self.expr(x, fq);
                }
            }
            ExprKind::Compare { left, comparators, .. } => {
                self.expr(left, fq);
                for x in comparators {
                    self.expr(x, fq);
                }
            }
            ExprKind::IfExp { test, body, orelse } => {
                self.expr(body, fq);
                self.probe_test(test, ArmKind::ExprTrue, ArmKind::ExprFalse, test.span.start, fq);
                self.expr(orelse, fq);
            }
            ExprKind::Lambda { params, body } => {
                for param in params.all() {
                    if let Some(d) = &param.default {
                        self.expr(d, fq);
                    }
                }
                self.expr(body, fq);
            }
            ExprKind::NamedExpr { value, .. } => self.expr(value, fq),
            ExprKind::Tuple { elts, ctx, .. } | ExprKind::List { elts, ctx } => {
                if *ctx != Ctx::Load {
                    self.target(e);
                    return;
                }
                for x in elts {
                    self.expr(x, fq);
                }
            }
            ExprKind::Set { elts } => {
                for x in elts {
                    self.expr(x, fq);
                }
            }
            ExprKind::Dict { items } => {
                for it in items {
                    if let Some(k) = &it.key {
                        self.expr(k, fq);
                    }
                    self.expr(&it.value, fq);
                }
            }
            ExprKind::ListComp { elt, generators }
            | ExprKind::SetComp { elt, generators }
            | ExprKind::GeneratorExp { elt, generators, .. } => {
                self.expr(elt, fq);
                self.comprehensions(generators, fq);
            }
            ExprKind::DictComp { key, value, generators } => {
                self.expr(key, fq);
                self.expr(value, fq);
                self.comprehensions(generators, fq);
            }
            ExprKind::Await(x) | ExprKind::YieldFrom(x) => self.expr(x, fq),
            ExprKind::Yield(x) => {
                if let Some(x) = x {
                    self.expr(x, fq);
                }
            }
            ExprKind::Starred { value, ctx } => {
                if *ctx != Ctx::Load {
                    self.target(value);
                } else {
                    self.expr(value, fq);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(src: &str) -> InstrumentedProgram {
        instrument(&SourceSnippet::new("t", src)).unwrap()
    }

    #[test]
    fn table_one_rows() {
        assert_eq!(inst("Var1 = Var2 + 1").instrumented_text, r#"Var1 = _n_(1, "Var2", lambda: Var2) + 1"#);
        assert_eq!(
            inst("Opt1.Attr1 = Opt2.Attr2").instrumented_text,
            r#"Opt1.Attr1 = _a_(1, _n_(2, "Opt2", lambda: Opt2), "Attr2")"#
        );
        assert_eq!(inst("Var = Foo()").instrumented_text, r#"Var = _c_(1, _n_(2, "Foo", lambda: Foo))"#);
    }

    #[test]
    fn method_call_nests_three_hooks() {
        let p = inst("o.m(x)");
        assert_eq!(
            p.instrumented_text,
            r#"_c_(1, _a_(2, _n_(3, "o", lambda: o), "m"), _n_(4, "x", lambda: x))"#
        );
        assert_eq!(p.sites[&1].kind, HookKind::Call);
        assert_eq!(p.sites[&1].name, "o.m");
        assert_eq!(p.sites[&2].target, "o");
    }

    #[test]
    fn parenthesized_attribute_stays_a_single_argument() {
        assert_eq!(inst("y = (a.b)").instrumented_text, r#"y = (_a_(1, _n_(2, "a", lambda: a), "b"))"#);
        assert_eq!(inst("y = (a).b").instrumented_text, r#"y = _a_(1, (_n_(2, "a", lambda: a)), "b")"#);
    }

    #[test]
    fn branches_are_probed() {
        let p = inst("if a:\n    pass\nfor i in x, y:\n    pass\ntry:\n    pass\nexcept:\n    pass\n");
        assert_eq!(p.branches.len(), 5);
        assert!(p.instrumented_text.contains("if _t_(1, 2, _n_("));
        assert!(p.instrumented_text.contains("in _l_(3, 4, (_n_("));
        assert!(p.instrumented_text.contains("except _h_(5, BaseException):"));
    }

    #[test]
    fn fstring_fields_use_the_other_quote() {
        assert_eq!(inst(r#"s = f"{x}""#).instrumented_text, r#"s = f"{_n_(1, 'x', lambda: x)}""#);
        assert_eq!(inst(r#"s = f"{x=}""#).instrumented_text, r#"s = f"{x=}""#);
    }

    #[test]
    fn frame_sensitive_callees_are_not_wrapped() {
        let p = inst("class A(B):\n    def f(self):\n        return super().f()\n");
        assert!(p.instrumented_text.contains(r#"_n_(4, "super", lambda: super)()"#), "{}", p.instrumented_text);
    }

    #[test]
    fn bare_generator_argument_gets_parens() {
        assert_eq!(
            inst("f(i for i in r)").instrumented_text,
            r#"_c_(1, _n_(2, "f", lambda: f), (_n_(3, "i", lambda: i) for i in _n_(4, "r", lambda: r)))"#
        );
    }

    #[test]
    fn targets_and_augassign_are_untouched() {
        assert_eq!(inst("a.b[i] = 1").instrumented_text, r#"a.b[_n_(1, "i", lambda: i)] = 1"#);
        assert_eq!(inst("x += y").instrumented_text, r#"x += _n_(1, "y", lambda: y)"#);
    }

    #[test]
    fn locate_reports_original_lines() {
        let p = inst("a = 1\nb = Var2\n");
        let s = locate(&p, 1).unwrap();
        assert_eq!((s.kind, s.name.as_str(), s.line_no), (HookKind::VariableRead, "Var2", 2));
        assert_eq!(s.original_line_text, "b = Var2");
        assert_eq!(locate(&p, 9), Err(InstrumentError::UnknownIid(9)));
    }

    #[test]
    fn empty_program_has_no_sites() {
        let p = inst("");
        assert_eq!(p.instrumented_text, "");
        assert!(p.sites.is_empty());
    }
}
