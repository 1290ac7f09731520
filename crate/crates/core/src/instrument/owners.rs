//! Line ownership for coverage accounting.
//!
//! Every physical line of a statement is owned by the line the statement
//! starts on, so a multi-line statement is credited as a unit. The tracer
//! completes an owner when control leaves it without an exception escaping.

use std::collections::BTreeMap;

use partexec_syntax::ast::{ExprKind, Stmt, StmtKind};
use partexec_syntax::LineIndex;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OwnerMap {
    /// `owners[line]` is the owning line, 0 when the line holds no statement.
    pub owners: Vec<u32>,
    /// Lines credited when a function whose header is owned by the key is entered.
    pub entry_credits: BTreeMap<u32, Vec<u32>>,
}

pub fn owner_map(body: &[Stmt], idx: &LineIndex) -> OwnerMap {
    let mut b = Builder {
        idx,
        map: OwnerMap { owners: vec![0; idx.line_count() + 2], entry_credits: BTreeMap::new() },
    };
    b.block(body, None);
    b.map
}

struct Builder<'a> {
    idx: &'a LineIndex,
    map: OwnerMap,
}

fn is_docstring(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::Expr(e) => match &e.kind {
            ExprKind::Str { pieces } => {
                pieces.iter().all(|p| !p.prefix.chars().any(|c| matches!(c, 'f' | 'F' | 'b' | 'B')))
            }
            _ => false,
        },
        _ => false,
    }
}

fn is_declaration(s: &Stmt) -> bool {
    matches!(s.kind, StmtKind::Global(_) | StmtKind::Nonlocal(_))
}

impl Builder<'_> {
    fn line(&self, off: usize) -> u32 {
        self.idx.line(off) as u32
    }

    fn set_range(&mut self, start: usize, end: usize, owner: u32) {
        let a = self.idx.line(start);
        let b = self.idx.line(end.max(start + 1) - 1);
        for l in a..=b {
            if l < self.map.owners.len() {
                self.map.owners[l] = owner;
            }
        }
    }

    fn first_owner(&self, block: &[Stmt]) -> Option<u32> {
        block.first().map(|s| self.map.owners[self.idx.line(s.header.start)])
    }

    fn keyword(&mut self, kw: Option<partexec_syntax::Span>, block: &[Stmt]) {
        if let (Some(kw), Some(o)) = (kw, self.first_owner(block)) {
            let l = self.idx.line(kw.start);
            if self.map.owners[l] == 0 {
                self.map.owners[l] = o;
            }
        }
    }

    fn block(&mut self, stmts: &[Stmt], func: Option<u32>) {
        let silent: Vec<bool> = stmts
            .iter()
            .enumerate()
            .map(|(i, s)| is_declaration(s) || (func.is_some() && i == 0 && is_docstring(s)))
            .collect();
        let leading = silent.iter().take_while(|x| **x).count();
        for (i, s) in stmts.iter().enumerate() {
            let own = self.line(s.header.start);
            if silent[i] {
                let target = match func {
                    Some(h) if i < leading => {
                        self.map.entry_credits.entry(h).or_default().push(own);
                        own
                    }
                    _ => stmts[i + 1..]
                        .iter()
                        .zip(&silent[i + 1..])
                        .find(|(_, q)| !**q)
                        .or_else(|| stmts[..i].iter().zip(&silent[..i]).rev().find(|(_, q)| !**q))
                        .map(|(n, _)| self.line(n.header.start))
                        .unwrap_or(own),
                };
                self.set_range(s.span.start, s.span.end, target);
                continue;
            }
            if !s.is_compound() {
                self.set_range(s.span.start, s.span.end, own);
                continue;
            }
            match &s.kind {
                StmtKind::If { body, orelse, else_kw, .. }
                | StmtKind::While { body, orelse, else_kw, .. }
                | StmtKind::For { body, orelse, else_kw, .. } => {
                    self.block(body, None);
                    self.block(orelse, None);
                    self.keyword(*else_kw, orelse);
                }
                StmtKind::With { body, .. } | StmtKind::ClassDef { body, .. } => self.block(body, None),
                StmtKind::FunctionDef { body, .. } => self.block(body, Some(own)),
                StmtKind::Try { body, handlers, orelse, else_kw, finalbody, finally_kw } => {
                    self.block(body, None);
                    let first = self.first_owner(body).unwrap_or(own);
                    self.set_range(s.header.start, s.header.end, first);
                    for h in handlers {
                        let hl = self.line(h.header.start);
                        self.set_range(h.header.start, h.header.end, hl);
                        self.block(&h.body, None);
                    }
                    self.block(orelse, None);
                    self.keyword(*else_kw, orelse);
                    self.block(finalbody, None);
                    self.keyword(*finally_kw, finalbody);
                }
                StmtKind::Match { cases, .. } => {
                    for c in cases {
                        let cl = self.line(c.header.start);
                        self.set_range(c.header.start, c.header.end, cl);
                        self.block(&c.body, None);
                    }
                }
                _ => {}
            }
            // a header shares its last line with a same-line body; the header wins
            if !matches!(s.kind, StmtKind::Try { .. }) {
                self.set_range(s.header.start, s.header.end, own);
            }
        }
    }
}
