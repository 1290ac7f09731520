//! Source-order traversal of the syntax tree.
//!
//! `walk_*` functions visit the children of a node in the order they appear
//! in the source text. Implementors override `visit_*` and call back into
//! the matching `walk_*` to descend.

use crate::ast::*;

pub trait Visitor {
    fn visit_stmt(&mut self, s: &Stmt) {
        walk_stmt(self, s);
    }

    fn visit_expr(&mut self, e: &Expr) {
        walk_expr(self, e);
    }

    fn visit_handler(&mut self, h: &Handler) {
        walk_handler(self, h);
    }
}

pub fn walk_body<V: Visitor + ?Sized>(v: &mut V, body: &[Stmt]) {
    for s in body {
        v.visit_stmt(s);
    }
}

pub fn walk_params<V: Visitor + ?Sized>(v: &mut V, p: &Params) {
    for param in p.all() {
        if let Some(a) = &param.annotation {
            v.visit_expr(a);
        }
        if let Some(d) = &param.default {
            v.visit_expr(d);
        }
    }
}

pub fn walk_args<V: Visitor + ?Sized>(v: &mut V, args: &[Arg]) {
    for a in args {
        v.visit_expr(a.value());
    }
}

pub fn walk_handler<V: Visitor + ?Sized>(v: &mut V, h: &Handler) {
    if let Some(t) = &h.typ {
        v.visit_expr(t);
    }
    walk_body(v, &h.body);
}

pub fn walk_stmt<V: Visitor + ?Sized>(v: &mut V, s: &Stmt) {
    match &s.kind {
        StmtKind::Expr(e) => v.visit_expr(e),
        StmtKind::Assign { targets, value } => {
            for t in targets {
                v.visit_expr(t);
            }
            v.visit_expr(value);
        }
        StmtKind::AugAssign { target, value, .. } => {
            v.visit_expr(target);
            v.visit_expr(value);
        }
        StmtKind::AnnAssign { target, annotation, value } => {
            v.visit_expr(target);
            v.visit_expr(annotation);
            if let Some(x) = value {
                v.visit_expr(x);
            }
        }
        StmtKind::Pass | StmtKind::Break | StmtKind::Continue => {}
        StmtKind::Global(_) | StmtKind::Nonlocal(_) => {}
        StmtKind::Import(_) | StmtKind::ImportFrom { .. } => {}
        StmtKind::Return(x) => {
            if let Some(x) = x {
                v.visit_expr(x);
            }
        }
        StmtKind::Delete(ts) => {
            for t in ts {
                v.visit_expr(t);
            }
        }
        StmtKind::Raise { exc, cause } => {
            if let Some(x) = exc {
                v.visit_expr(x);
            }
            if let Some(x) = cause {
                v.visit_expr(x);
            }
        }
        StmtKind::Assert { test, msg } => {
            v.visit_expr(test);
            if let Some(x) = msg {
                v.visit_expr(x);
            }
        }
        StmtKind::If { test, body, orelse, .. } | StmtKind::While { test, body, orelse, .. } => {
            v.visit_expr(test);
            walk_body(v, body);
            walk_body(v, orelse);
        }
        StmtKind::For { target, iter, body, orelse, .. } => {
            v.visit_expr(target);
            v.visit_expr(iter);
            walk_body(v, body);
            walk_body(v, orelse);
        }
        StmtKind::With { items, body, .. } => {
            for it in items {
                v.visit_expr(&it.context);
                if let Some(t) = &it.vars {
                    v.visit_expr(t);
                }
            }
            walk_body(v, body);
        }
        StmtKind::Try { body, handlers, orelse, finalbody, .. } => {
            walk_body(v, body);
            for h in handlers {
                v.visit_handler(h);
            }
            walk_body(v, orelse);
            walk_body(v, finalbody);
        }
        StmtKind::FunctionDef { decorators, params, returns, body, .. } => {
            for d in decorators {
                v.visit_expr(d);
            }
            walk_params(v, params);
            if let Some(r) = returns {
                v.visit_expr(r);
            }
            walk_body(v, body);
        }
        StmtKind::ClassDef { decorators, bases, body, .. } => {
            for d in decorators {
                v.visit_expr(d);
            }
            walk_args(v, bases);
            walk_body(v, body);
        }
        StmtKind::Match { subject, cases } => {
            v.visit_expr(subject);
            for c in cases {
                if let Some(g) = &c.guard {
                    v.visit_expr(g);
                }
                walk_body(v, &c.body);
            }
        }
    }
}

pub fn walk_comprehensions<V: Visitor + ?Sized>(v: &mut V, gens: &[Comprehension]) {
    for g in gens {
        v.visit_expr(&g.target);
        v.visit_expr(&g.iter);
        for c in &g.ifs {
            v.visit_expr(c);
        }
    }
}

pub fn walk_expr<V: Visitor + ?Sized>(v: &mut V, e: &Expr) {
    match &e.kind {
        ExprKind::Name { .. } | ExprKind::Constant => {}
        ExprKind::Str { pieces } => {
            for p in pieces {
                for f in &p.fields {
                    v.visit_expr(&f.expr);
                }
            }
        }
        ExprKind::Attribute { value, .. } => v.visit_expr(value),
        ExprKind::Subscript { value, slice, .. } => {
            v.visit_expr(value);
            v.visit_expr(slice);
        }
        ExprKind::Slice { lower, upper, step } => {
            for x in [lower, upper, step].into_iter().flatten() {
                v.visit_expr(x);
            }
        }
        ExprKind::Call { func, args, .. } => {
            v.visit_expr(func);
            walk_args(v, args);
        }
        ExprKind::BinOp { left, right, .. } => {
            v.visit_expr(left);
            v.visit_expr(right);
        }
        ExprKind::UnaryOp { operand, .. } => v.visit_expr(operand),
        ExprKind::BoolOp { values, .. } => {
            for x in values {
                v.visit_expr(x);
            }
        }
        ExprKind::Compare { left, comparators, .. } => {
            v.visit_expr(left);
            for x in comparators {
                v.visit_expr(x);
            }
        }
        ExprKind::IfExp { test, body, orelse } => {
            v.visit_expr(body);
            v.visit_expr(test);
            v.visit_expr(orelse);
        }
        ExprKind::Lambda { params, body } => {
            walk_params(v, params);
            v.visit_expr(body);
        }
        ExprKind::NamedExpr { target, value } => {
            v.visit_expr(target);
            v.visit_expr(value);
        }
        ExprKind::Tuple { elts, .. } | ExprKind::List { elts, .. } | ExprKind::Set { elts } => {
            for x in elts {
                v.visit_expr(x);
            }
        }
        ExprKind::Dict { items } => {
            for it in items {
                if let Some(k) = &it.key {
                    v.visit_expr(k);
                }
                v.visit_expr(&it.value);
            }
        }
        ExprKind::ListComp { elt, generators }
        | ExprKind::SetComp { elt, generators }
        | ExprKind::GeneratorExp { elt, generators, .. } => {
            v.visit_expr(elt);
            walk_comprehensions(v, generators);
        }
        ExprKind::DictComp { key, value, generators } => {
            v.visit_expr(key);
            v.visit_expr(value);
            walk_comprehensions(v, generators);
        }
        ExprKind::Await(x) | ExprKind::YieldFrom(x) => v.visit_expr(x),
        ExprKind::Yield(x) => {
            if let Some(x) = x {
                v.visit_expr(x);
            }
        }
        ExprKind::Starred { value, .. } => v.visit_expr(value),
    }
}
