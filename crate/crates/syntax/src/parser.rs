//! Recursive-descent parser for Python 3.10.
//!
//! Follows the structure of the PEG grammar closely enough that every
//! program accepted by CPython 3.10's `ast.parse` is accepted here. Some
//! rejections are more lenient than CPython's; the instrumented program is
//! compiled by the real interpreter anyway.

use crate::ast::*;
use crate::error::ParseError;
use crate::span::Span;
use crate::token::{Token, TokenKind, Tokenizer};

type R<T> = Result<T, ParseError>;

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import",
    "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while",
    "with", "yield",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

/// Deepest nesting of parenthesized or unary sub-expressions accepted.
const MAX_DEPTH: usize = 200;

/// Stack reserved for the parsing thread; deep but legal nesting recurses
/// through every precedence level.
const PARSE_STACK: usize = 256 << 20;

fn with_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(PARSE_STACK)
            .spawn_scoped(s, f)
            .expect("spawn parser thread")
            .join()
            .unwrap_or_else(|e| std::panic::resume_unwind(e))
    })
}

pub struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
    prev_end: usize,
    depth: usize,
    /// Nesting level of f-strings; fields are only collected at level 0.
    fdepth: usize,
}

pub fn parse_module(src: &str) -> R<Module> {
    let toks = Tokenizer::new(src).tokenize()?;
    with_stack(|| Parser::new(src, toks, 0).module())
}

/// Parses a standalone expression (used by tests and tooling).
pub fn parse_expression(src: &str) -> R<Expr> {
    let toks = Tokenizer::fragment(src, 0, src.len()).tokenize()?;
    with_stack(|| {
        let mut p = Parser::new(src, toks, 0);
        let e = p.star_expressions()?;
        if p.kind() != TokenKind::EndMarker {
            return p.fail("invalid syntax");
        }
        Ok(e)
    })
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, toks: Vec<Token>, fdepth: usize) -> Self {
        let start = toks.first().map_or(0, |t| t.span.start);
        Parser { src, toks, pos: 0, prev_end: start, depth: 0, fdepth }
    }

    // ---- token helpers ----

    fn kind(&self) -> TokenKind {
        self.toks[self.pos].kind
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn text(&self) -> &'a str {
        self.text_at(self.pos)
    }

    fn text_at(&self, i: usize) -> &'a str {
        let t = &self.toks[i.min(self.toks.len() - 1)];
        &self.src[t.span.start..t.span.end]
    }

    fn kind_at(&self, i: usize) -> TokenKind {
        self.toks[i.min(self.toks.len() - 1)].kind
    }

    fn at_op(&self, op: &str) -> bool {
        self.kind() == TokenKind::Op && self.text() == op
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.kind() == TokenKind::Name && self.text() == kw
    }

    fn op_at(&self, i: usize, op: &str) -> bool {
        self.kind_at(i) == TokenKind::Op && self.text_at(i) == op
    }

    fn kw_at(&self, i: usize, kw: &str) -> bool {
        self.kind_at(i) == TokenKind::Name && self.text_at(i) == kw
    }

    fn bump(&mut self) -> Span {
        let t = &self.toks[self.pos];
        let span = t.span;
        if matches!(t.kind, TokenKind::Name | TokenKind::Number | TokenKind::String | TokenKind::Op) {
            self.prev_end = span.end;
        }
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        span
    }

    fn eat_op(&mut self, op: &str) -> Option<Span> {
        if self.at_op(op) { Some(self.bump()) } else { None }
    }

    fn eat_kw(&mut self, kw: &str) -> Option<Span> {
        if self.at_kw(kw) { Some(self.bump()) } else { None }
    }

    fn expect_op(&mut self, op: &str) -> R<Span> {
        match self.eat_op(op) {
            Some(s) => Ok(s),
            None => self.fail(&format!("expected '{op}'")),
        }
    }

    fn expect_kw(&mut self, kw: &str) -> R<Span> {
        match self.eat_kw(kw) {
            Some(s) => Ok(s),
            None => self.fail(&format!("expected '{kw}'")),
        }
    }

    fn fail<T>(&self, msg: &str) -> R<T> {
        let t = &self.toks[self.pos];
        let msg = match t.kind {
            TokenKind::Indent => "unexpected indent",
            TokenKind::EndMarker if msg == "invalid syntax" => "unexpected EOF while parsing",
            _ => msg,
        };
        Err(ParseError::at(self.src, t.span.start, msg))
    }

    fn fail_at<T>(&self, offset: usize, msg: &str) -> R<T> {
        Err(ParseError::at(self.src, offset, msg))
    }

    fn at_name(&self) -> bool {
        self.kind() == TokenKind::Name && !is_keyword(self.text())
    }

    fn ident(&mut self) -> R<Ident> {
        if self.at_name() {
            let name = self.text().to_string();
            let span = self.bump();
            Ok(Ident { name, span })
        } else {
            self.fail("invalid syntax")
        }
    }

    fn enter(&mut self) -> R<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return self.fail("too many nested parentheses");
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    /// True when the current token can begin an expression.
    fn can_start_expr(&self) -> bool {
        match self.kind() {
            TokenKind::Number | TokenKind::String => true,
            TokenKind::Name => {
                let t = self.text();
                !is_keyword(t) || matches!(t, "None" | "True" | "False" | "not" | "lambda" | "await" | "yield")
            }
            TokenKind::Op => matches!(self.text(), "(" | "[" | "{" | "-" | "+" | "~" | "*" | "..."),
            _ => false,
        }
    }

    // ---- statements ----

    fn module(&mut self) -> R<Module> {
        let mut body = Vec::new();
        while self.kind() != TokenKind::EndMarker {
            if self.kind() == TokenKind::Newline {
                self.bump();
                continue;
            }
            body.extend(self.statement()?);
        }
        Ok(Module { body })
    }

    fn statement(&mut self) -> R<Vec<Stmt>> {
        if let Some(s) = self.compound()? {
            return Ok(vec![s]);
        }
        self.simple_stmts()
    }

    fn block(&mut self) -> R<Vec<Stmt>> {
        if self.kind() == TokenKind::Newline {
            self.bump();
            if self.kind() != TokenKind::Indent {
                return self.fail("expected an indented block");
            }
            self.bump();
            let mut body = Vec::new();
            while !matches!(self.kind(), TokenKind::Dedent | TokenKind::EndMarker) {
                body.extend(self.statement()?);
            }
            if self.kind() == TokenKind::Dedent {
                self.bump();
            }
            Ok(body)
        } else {
            self.simple_stmts()
        }
    }

    fn compound(&mut self) -> R<Option<Stmt>> {
        let start = self.span().start;
        if self.at_op("@") {
            return self.decorated(start).map(Some);
        }
        if self.kind() != TokenKind::Name {
            return Ok(None);
        }
        let stmt = match self.text() {
            "if" => self.if_stmt(start, false)?,
            "while" => self.while_stmt(start)?,
            "for" => self.for_stmt(start, false)?,
            "try" => self.try_stmt(start)?,
            "with" => self.with_stmt(start, false)?,
            "def" => self.funcdef(start, Vec::new(), false)?,
            "class" => self.classdef(start, Vec::new())?,
            "async" => {
                self.bump();
                match self.text() {
                    "def" => self.funcdef(start, Vec::new(), true)?,
                    "for" => self.for_stmt(start, true)?,
                    "with" => self.with_stmt(start, true)?,
                    _ => return self.fail("invalid syntax"),
                }
            }
            "match" => match self.try_match(start)? {
                Some(s) => s,
                None => return Ok(None),
            },
            _ => return Ok(None),
        };
        Ok(Some(stmt))
    }

    fn decorated(&mut self, start: usize) -> R<Stmt> {
        let mut decorators = Vec::new();
        while self.eat_op("@").is_some() {
            decorators.push(self.named_expression()?);
            if self.kind() != TokenKind::Newline {
                return self.fail("invalid syntax");
            }
            self.bump();
        }
        if self.at_kw("def") {
            self.funcdef(start, decorators, false)
        } else if self.at_kw("async") && self.kw_at(self.pos + 1, "def") {
            self.bump();
            self.funcdef(start, decorators, true)
        } else if self.at_kw("class") {
            self.classdef(start, decorators)
        } else {
            self.fail("invalid syntax")
        }
    }

    fn if_stmt(&mut self, start: usize, is_elif: bool) -> R<Stmt> {
        self.bump();
        let test = self.named_expression()?;
        self.expect_op(":")?;
        let header = Span::new(start, self.prev_end);
        let body = self.block()?;
        let (orelse, else_kw) = if self.at_kw("elif") {
            let s = self.span().start;
            (vec![self.if_stmt(s, true)?], None)
        } else if self.at_kw("else") {
            let kw = self.bump();
            self.expect_op(":")?;
            (self.block()?, Some(kw))
        } else {
            (Vec::new(), None)
        };
        Ok(Stmt {
            span: Span::new(start, self.prev_end),
            header,
            kind: StmtKind::If { test, body, orelse, else_kw, is_elif },
        })
    }

    fn else_block(&mut self) -> R<(Vec<Stmt>, Option<Span>)> {
        if self.at_kw("else") {
            let kw = self.bump();
            self.expect_op(":")?;
            Ok((self.block()?, Some(kw)))
        } else {
            Ok((Vec::new(), None))
        }
    }

    fn while_stmt(&mut self, start: usize) -> R<Stmt> {
        self.bump();
        let test = self.named_expression()?;
        self.expect_op(":")?;
        let header = Span::new(start, self.prev_end);
        let body = self.block()?;
        let (orelse, else_kw) = self.else_block()?;
        Ok(Stmt {
            span: Span::new(start, self.prev_end),
            header,
            kind: StmtKind::While { test, body, orelse, else_kw },
        })
    }

    fn for_stmt(&mut self, start: usize, is_async: bool) -> R<Stmt> {
        self.expect_kw("for")?;
        let target = self.star_targets()?;
        self.expect_kw("in")?;
        let iter = self.star_expressions()?;
        self.expect_op(":")?;
        let header = Span::new(start, self.prev_end);
        let body = self.block()?;
        let (orelse, else_kw) = self.else_block()?;
        Ok(Stmt {
            span: Span::new(start, self.prev_end),
            header,
            kind: StmtKind::For { is_async, target, iter, body, orelse, else_kw },
        })
    }

    fn try_stmt(&mut self, start: usize) -> R<Stmt> {
        self.bump();
        self.expect_op(":")?;
        let header = Span::new(start, self.prev_end);
        let body = self.block()?;
        let mut handlers = Vec::new();
        while self.at_kw("except") {
            let hstart = self.bump().start;
            let mut typ = None;
            let mut name = None;
            if !self.at_op(":") {
                let t = self.expression()?;
                if self.at_op(",") {
                    return self.fail("multiple exception types must be parenthesized");
                }
                typ = Some(t);
                if self.eat_kw("as").is_some() {
                    name = Some(self.ident()?);
                }
            }
            self.expect_op(":")?;
            let hheader = Span::new(hstart, self.prev_end);
            let hbody = self.block()?;
            handlers.push(Handler {
                span: Span::new(hstart, self.prev_end),
                header: hheader,
                typ,
                name,
                body: hbody,
            });
        }
        let (orelse, else_kw) = if !handlers.is_empty() { self.else_block()? } else { (Vec::new(), None) };
        let (finalbody, finally_kw) = if self.at_kw("finally") {
            let kw = self.bump();
            self.expect_op(":")?;
            (self.block()?, Some(kw))
        } else {
            (Vec::new(), None)
        };
        if handlers.is_empty() && finally_kw.is_none() {
            return self.fail("expected 'except' or 'finally' block");
        }
        Ok(Stmt {
            span: Span::new(start, self.prev_end),
            header,
            kind: StmtKind::Try { body, handlers, orelse, else_kw, finalbody, finally_kw },
        })
    }

    fn with_stmt(&mut self, start: usize, is_async: bool) -> R<Stmt> {
        self.expect_kw("with")?;
        let mut items = None;
        if self.at_op("(") {
            let save = (self.pos, self.prev_end);
            match self.paren_with_items() {
                Ok(it) if self.at_op(":") => items = Some(it),
                _ => {
                    self.pos = save.0;
                    self.prev_end = save.1;
                }
            }
        }
        let items = match items {
            Some(it) => it,
            None => {
                let mut it = vec![self.with_item()?];
                while self.eat_op(",").is_some() {
                    it.push(self.with_item()?);
                }
                it
            }
        };
        self.expect_op(":")?;
        let header = Span::new(start, self.prev_end);
        let body = self.block()?;
        Ok(Stmt {
            span: Span::new(start, self.prev_end),
            header,
            kind: StmtKind::With { is_async, items, body },
        })
    }

    fn paren_with_items(&mut self) -> R<Vec<WithItem>> {
        self.expect_op("(")?;
        let mut items = vec![self.with_item()?];
        while self.eat_op(",").is_some() {
            if self.at_op(")") {
                break;
            }
            items.push(self.with_item()?);
        }
        self.expect_op(")")?;
        Ok(items)
    }

    fn with_item(&mut self) -> R<WithItem> {
        let context = self.expression()?;
        let vars = if self.eat_kw("as").is_some() {
            let t = self.target_atom()?;
            Some(to_target(self.src, t, Ctx::Store)?)
        } else {
            None
        };
        Ok(WithItem { context, vars })
    }

    fn funcdef(&mut self, start: usize, decorators: Vec<Expr>, is_async: bool) -> R<Stmt> {
        self.expect_kw("def")?;
        let name = self.ident()?;
        self.expect_op("(")?;
        let params = self.params(")", true)?;
        self.expect_op(")")?;
        let returns = if self.eat_op("->").is_some() { Some(self.expression()?) } else { None };
        self.expect_op(":")?;
        let header = Span::new(start, self.prev_end);
        let body = self.block()?;
        Ok(Stmt {
            span: Span::new(start, self.prev_end),
            header,
            kind: StmtKind::FunctionDef { is_async, name, decorators, params, returns, body },
        })
    }

    fn classdef(&mut self, start: usize, decorators: Vec<Expr>) -> R<Stmt> {
        self.expect_kw("class")?;
        let name = self.ident()?;
        let bases = if self.at_op("(") {
            let (args, _, _) = self.call_args()?;
            args
        } else {
            Vec::new()
        };
        self.expect_op(":")?;
        let header = Span::new(start, self.prev_end);
        let body = self.block()?;
        Ok(Stmt {
            span: Span::new(start, self.prev_end),
            header,
            kind: StmtKind::ClassDef { name, decorators, bases, body },
        })
    }

    fn params(&mut self, closing: &str, annotations: bool) -> R<Params> {
        let mut p = Params::default();
        let mut seen_star = false;
        let mut seen_default = false;
        while !self.at_op(closing) {
            if let Some(s) = self.eat_op("/") {
                if seen_star || !p.posonly.is_empty() || p.args.is_empty() {
                    return self.fail_at(s.start, "invalid syntax");
                }
                p.posonly = std::mem::take(&mut p.args);
            } else if self.eat_op("**").is_some() {
                p.kwarg = Some(self.param(annotations, false)?);
                self.eat_op(",");
                if !self.at_op(closing) {
                    return self.fail("arguments cannot follow var-keyword argument");
                }
                break;
            } else if let Some(s) = self.eat_op("*") {
                if seen_star {
                    return self.fail_at(s.start, "* argument may appear only once");
                }
                seen_star = true;
                if !(self.at_op(",") || self.at_op(closing)) {
                    p.vararg = Some(self.param(annotations, false)?);
                } else if self.at_op(closing) || self.op_at(self.pos + 1, closing) {
                    return self.fail_at(s.start, "named arguments must follow bare *");
                }
            } else {
                let param = self.param(annotations, true)?;
                if seen_star {
                    p.kwonly.push(param);
                } else {
                    if param.default.is_some() {
                        seen_default = true;
                    } else if seen_default {
                        return self.fail_at(param.name.span.start, "non-default argument follows default argument");
                    }
                    p.args.push(param);
                }
            }
            if self.eat_op(",").is_none() {
                break;
            }
        }
        let mut names = std::collections::HashSet::new();
        for param in p.all() {
            if !names.insert(param.name.name.clone()) {
                return self.fail_at(param.name.span.start, "duplicate argument in function definition");
            }
        }
        Ok(p)
    }

    fn param(&mut self, annotations: bool, defaults: bool) -> R<Param> {
        let name = self.ident()?;
        let annotation = if annotations && self.eat_op(":").is_some() { Some(self.expression()?) } else { None };
        let default = if defaults && self.eat_op("=").is_some() { Some(self.expression()?) } else { None };
        Ok(Param { name, annotation, default })
    }

    /// `match` is a soft keyword: try the statement form and backtrack to an
    /// expression statement when it does not fit.
    fn try_match(&mut self, start: usize) -> R<Option<Stmt>> {
        let save = (self.pos, self.prev_end);
        let restore = |p: &mut Self| {
            p.pos = save.0;
            p.prev_end = save.1;
        };
        self.bump();
        if !self.can_start_expr() {
            restore(self);
            return Ok(None);
        }
        let subject = match self.match_subject() {
            Ok(s) => s,
            Err(_) => {
                restore(self);
                return Ok(None);
            }
        };
        if !(self.at_op(":") && self.kind_at(self.pos + 1) == TokenKind::Newline) {
            restore(self);
            return Ok(None);
        }
        self.bump();
        let header = Span::new(start, self.prev_end);
        self.bump();
        if self.kind() != TokenKind::Indent {
            return self.fail("expected an indented block");
        }
        self.bump();
        let mut cases = Vec::new();
        while self.at_kw("case") {
            cases.push(self.match_case()?);
        }
        if cases.is_empty() {
            return self.fail("invalid syntax");
        }
        if self.kind() == TokenKind::Dedent {
            self.bump();
        } else if self.kind() != TokenKind::EndMarker {
            return self.fail("invalid syntax");
        }
        Ok(Some(Stmt {
            span: Span::new(start, self.prev_end),
            header,
            kind: StmtKind::Match { subject, cases },
        }))
    }

    fn match_subject(&mut self) -> R<Expr> {
        let first = self.star_named_expression()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let start = first.span.start;
        let mut elts = vec![first];
        while self.eat_op(",").is_some() {
            if self.at_op(":") {
                break;
            }
            elts.push(self.star_named_expression()?);
        }
        Ok(Expr::new(
            Span::new(start, self.prev_end),
            ExprKind::Tuple { elts, ctx: Ctx::Load, parenthesized: false },
        ))
    }

    fn match_case(&mut self) -> R<MatchCase> {
        let start = self.bump().start;
        let pstart = self.span().start;
        let mut depth = 0usize;
        loop {
            match self.kind() {
                TokenKind::Newline | TokenKind::EndMarker => return self.fail("invalid syntax"),
                TokenKind::Op => match self.text() {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => depth = depth.saturating_sub(1),
                    ":" if depth == 0 => break,
                    _ => {}
                },
                TokenKind::Name if depth == 0 && self.text() == "if" => break,
                _ => {}
            }
            self.bump();
        }
        if self.span().start == pstart {
            return self.fail("invalid syntax");
        }
        let pattern = Span::new(pstart, self.prev_end);
        let guard = if self.eat_kw("if").is_some() { Some(self.named_expression()?) } else { None };
        self.expect_op(":")?;
        let header = Span::new(start, self.prev_end);
        let body = self.block()?;
        Ok(MatchCase { header, pattern, guard, body })
    }

    fn simple_stmts(&mut self) -> R<Vec<Stmt>> {
        let mut out = Vec::new();
        loop {
            out.push(self.simple_stmt()?);
            if self.eat_op(";").is_some() {
                if self.kind() == TokenKind::Newline {
                    break;
                }
                continue;
            }
            break;
        }
        match self.kind() {
            TokenKind::Newline => {
                self.bump();
                Ok(out)
            }
            _ => self.fail("invalid syntax"),
        }
    }

    fn simple_stmt(&mut self) -> R<Stmt> {
        let start = self.span().start;
        let kind = if self.kind() == TokenKind::Name {
            match self.text() {
                "pass" => {
                    self.bump();
                    StmtKind::Pass
                }
                "break" => {
                    self.bump();
                    StmtKind::Break
                }
                "continue" => {
                    self.bump();
                    StmtKind::Continue
                }
                "return" => {
                    self.bump();
                    let v = if self.can_start_expr() { Some(self.star_expressions()?) } else { None };
                    StmtKind::Return(v)
                }
                "raise" => {
                    self.bump();
                    let mut exc = None;
                    let mut cause = None;
                    if self.can_start_expr() {
                        exc = Some(self.expression()?);
                        if self.eat_kw("from").is_some() {
                            cause = Some(self.expression()?);
                        }
                    }
                    StmtKind::Raise { exc, cause }
                }
                "global" | "nonlocal" => {
                    let is_global = self.text() == "global";
                    self.bump();
                    let mut names = vec![self.ident()?];
                    while self.eat_op(",").is_some() {
                        names.push(self.ident()?);
                    }
                    if is_global { StmtKind::Global(names) } else { StmtKind::Nonlocal(names) }
                }
                "del" => {
                    self.bump();
                    let mut targets = Vec::new();
                    loop {
                        let t = self.target_atom()?;
                        targets.push(to_target(self.src, t, Ctx::Del)?);
                        if self.eat_op(",").is_none() || !self.can_start_expr() {
                            break;
                        }
                    }
                    StmtKind::Delete(targets)
                }
                "assert" => {
                    self.bump();
                    let test = self.expression()?;
                    let msg = if self.eat_op(",").is_some() { Some(self.expression()?) } else { None };
                    StmtKind::Assert { test, msg }
                }
                "import" => {
                    self.bump();
                    let mut names = vec![self.dotted_alias()?];
                    while self.eat_op(",").is_some() {
                        names.push(self.dotted_alias()?);
                    }
                    StmtKind::Import(names)
                }
                "from" => self.import_from()?,
                _ => return self.expr_stmt(start),
            }
        } else {
            return self.expr_stmt(start);
        };
        let span = Span::new(start, self.prev_end);
        Ok(Stmt { span, header: span, kind })
    }

    fn dotted_name(&mut self) -> R<String> {
        let mut name = self.ident()?.name;
        while self.eat_op(".").is_some() {
            name.push('.');
            name.push_str(&self.ident()?.name);
        }
        Ok(name)
    }

    fn dotted_alias(&mut self) -> R<Alias> {
        let start = self.span().start;
        let name = self.dotted_name()?;
        let asname = if self.eat_kw("as").is_some() { Some(self.ident()?) } else { None };
        Ok(Alias { name, asname, span: Span::new(start, self.prev_end) })
    }

    fn import_from(&mut self) -> R<StmtKind> {
        self.bump();
        let mut level = 0;
        loop {
            if self.eat_op(".").is_some() {
                level += 1;
            } else if self.eat_op("...").is_some() {
                level += 3;
            } else {
                break;
            }
        }
        let module = if self.at_kw("import") {
            if level == 0 {
                return self.fail("invalid syntax");
            }
            None
        } else {
            Some(self.dotted_name()?)
        };
        self.expect_kw("import")?;
        let mut names = Vec::new();
        if let Some(s) = self.eat_op("*") {
            names.push(Alias { name: "*".into(), asname: None, span: s });
        } else {
            let paren = self.eat_op("(").is_some();
            loop {
                let start = self.span().start;
                let name = self.ident()?.name;
                let asname = if self.eat_kw("as").is_some() { Some(self.ident()?) } else { None };
                names.push(Alias { name, asname, span: Span::new(start, self.prev_end) });
                if self.eat_op(",").is_none() {
                    break;
                }
                if paren && self.at_op(")") {
                    break;
                }
                if !paren && !self.at_name() {
                    return self.fail("trailing comma not allowed without surrounding parentheses");
                }
            }
            if paren {
                self.expect_op(")")?;
            }
        }
        Ok(StmtKind::ImportFrom { module, level, names })
    }

    fn yield_or_star_expressions(&mut self) -> R<Expr> {
        if self.at_kw("yield") { self.yield_expr() } else { self.star_expressions() }
    }

    fn expr_stmt(&mut self, start: usize) -> R<Stmt> {
        let first = self.yield_or_star_expressions()?;
        let kind = if self.at_op("=") {
            let mut chain = vec![first];
            while self.eat_op("=").is_some() {
                chain.push(self.yield_or_star_expressions()?);
            }
            let value = chain.pop().unwrap();
            let targets =
                chain.into_iter().map(|t| to_target(self.src, t, Ctx::Store)).collect::<R<Vec<_>>>()?;
            StmtKind::Assign { targets, value }
        } else if self.kind() == TokenKind::Op && is_augassign(self.text()) {
            if !matches!(first.kind, ExprKind::Name { .. } | ExprKind::Attribute { .. } | ExprKind::Subscript { .. }) {
                return self.fail_at(first.span.start, "illegal expression for augmented assignment");
            }
            let op = self.text().to_string();
            self.bump();
            let target = to_target(self.src, first, Ctx::Store)?;
            let value = self.yield_or_star_expressions()?;
            StmtKind::AugAssign { target, op, value }
        } else if self.at_op(":") {
            if !matches!(first.kind, ExprKind::Name { .. } | ExprKind::Attribute { .. } | ExprKind::Subscript { .. }) {
                return self.fail_at(first.span.start, "illegal target for annotation");
            }
            self.bump();
            let target = to_target(self.src, first, Ctx::Store)?;
            let annotation = self.expression()?;
            let value = if self.eat_op("=").is_some() { Some(self.yield_or_star_expressions()?) } else { None };
            StmtKind::AnnAssign { target, annotation, value }
        } else {
            StmtKind::Expr(first)
        };
        let span = Span::new(start, self.prev_end);
        Ok(Stmt { span, header: span, kind })
    }

    // ---- expressions ----

    pub fn star_expressions(&mut self) -> R<Expr> {
        let first = self.star_expression()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let start = first.span.start;
        let mut elts = vec![first];
        while self.eat_op(",").is_some() {
            if !self.can_start_expr() {
                break;
            }
            elts.push(self.star_expression()?);
        }
        Ok(Expr::new(
            Span::new(start, self.prev_end),
            ExprKind::Tuple { elts, ctx: Ctx::Load, parenthesized: false },
        ))
    }

    fn star_expression(&mut self) -> R<Expr> {
        if let Some(s) = self.eat_op("*") {
            let value = self.bitwise_or()?;
            return Ok(Expr::new(
                Span::new(s.start, value.span.end),
                ExprKind::Starred { value: Box::new(value), ctx: Ctx::Load },
            ));
        }
        self.expression()
    }

    fn star_named_expression(&mut self) -> R<Expr> {
        if let Some(s) = self.eat_op("*") {
            let value = self.bitwise_or()?;
            return Ok(Expr::new(
                Span::new(s.start, value.span.end),
                ExprKind::Starred { value: Box::new(value), ctx: Ctx::Load },
            ));
        }
        self.named_expression()
    }

    fn named_expression(&mut self) -> R<Expr> {
        if self.at_name() && self.op_at(self.pos + 1, ":=") {
            let target = self.ident()?;
            self.bump();
            let value = self.expression()?;
            let span = Span::new(target.span.start, value.span.end);
            let target = Expr::new(target.span, ExprKind::Name { id: target.name, ctx: Ctx::Store });
            return Ok(Expr::new(span, ExprKind::NamedExpr { target: Box::new(target), value: Box::new(value) }));
        }
        let e = self.expression()?;
        if self.at_op(":=") {
            return self.fail("cannot use assignment expressions with this target");
        }
        Ok(e)
    }

    pub fn expression(&mut self) -> R<Expr> {
        if self.at_kw("lambda") {
            return self.lambdef();
        }
        let body = self.disjunction()?;
        if self.eat_kw("if").is_some() {
            let test = self.disjunction()?;
            self.expect_kw("else")?;
            let orelse = self.expression()?;
            return Ok(Expr::new(
                Span::new(body.span.start, orelse.span.end),
                ExprKind::IfExp { test: Box::new(test), body: Box::new(body), orelse: Box::new(orelse) },
            ));
        }
        Ok(body)
    }

    fn lambdef(&mut self) -> R<Expr> {
        let start = self.bump().start;
        let params = self.params(":", false)?;
        self.expect_op(":")?;
        let body = self.expression()?;
        Ok(Expr::new(
            Span::new(start, body.span.end),
            ExprKind::Lambda { params: Box::new(params), body: Box::new(body) },
        ))
    }

    fn yield_expr(&mut self) -> R<Expr> {
        let start = self.bump().start;
        if self.eat_kw("from").is_some() {
            let v = self.expression()?;
            return Ok(Expr::new(Span::new(start, v.span.end), ExprKind::YieldFrom(Box::new(v))));
        }
        if self.can_start_expr() {
            let v = self.star_expressions()?;
            return Ok(Expr::new(Span::new(start, v.span.end), ExprKind::Yield(Some(Box::new(v)))));
        }
        Ok(Expr::new(Span::new(start, self.prev_end), ExprKind::Yield(None)))
    }

    fn bool_chain(&mut self, op: &str, next: fn(&mut Self) -> R<Expr>) -> R<Expr> {
        let first = next(self)?;
        if !self.at_kw(op) {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw(op).is_some() {
            values.push(next(self)?);
        }
        let span = Span::new(values[0].span.start, values.last().unwrap().span.end);
        Ok(Expr::new(span, ExprKind::BoolOp { op: op.to_string(), values }))
    }

    fn disjunction(&mut self) -> R<Expr> {
        self.bool_chain("or", Self::conjunction)
    }

    fn conjunction(&mut self) -> R<Expr> {
        self.bool_chain("and", Self::inversion)
    }

    fn inversion(&mut self) -> R<Expr> {
        if let Some(s) = self.eat_kw("not") {
            self.enter()?;
            let operand = self.inversion()?;
            self.leave();
            return Ok(Expr::new(
                Span::new(s.start, operand.span.end),
                ExprKind::UnaryOp { op: "not".into(), operand: Box::new(operand) },
            ));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> R<Expr> {
        let left = self.bitwise_or()?;
        let mut ops = Vec::new();
        let mut comparators = Vec::new();
        loop {
            let op = match self.kind() {
                TokenKind::Op if matches!(self.text(), "==" | "!=" | "<" | "<=" | ">" | ">=") => {
                    let t = self.text().to_string();
                    self.bump();
                    t
                }
                TokenKind::Name if self.text() == "in" => {
                    self.bump();
                    "in".to_string()
                }
                TokenKind::Name if self.text() == "not" && self.kw_at(self.pos + 1, "in") => {
                    self.bump();
                    self.bump();
                    "not in".to_string()
                }
                TokenKind::Name if self.text() == "is" => {
                    self.bump();
                    if self.eat_kw("not").is_some() { "is not".to_string() } else { "is".to_string() }
                }
                _ => break,
            };
            ops.push(op);
            comparators.push(self.bitwise_or()?);
        }
        if ops.is_empty() {
            return Ok(left);
        }
        let span = Span::new(left.span.start, comparators.last().unwrap().span.end);
        Ok(Expr::new(span, ExprKind::Compare { left: Box::new(left), ops, comparators }))
    }

    fn binary(&mut self, ops: &[&str], next: fn(&mut Self) -> R<Expr>) -> R<Expr> {
        let mut left = next(self)?;
        while self.kind() == TokenKind::Op && ops.contains(&self.text()) {
            let op = self.text().to_string();
            self.bump();
            let right = next(self)?;
            left = Expr::new(
                Span::new(left.span.start, right.span.end),
                ExprKind::BinOp { left: Box::new(left), op, right: Box::new(right) },
            );
        }
        Ok(left)
    }

    fn bitwise_or(&mut self) -> R<Expr> {
        self.binary(&["|"], Self::bitwise_xor)
    }

    fn bitwise_xor(&mut self) -> R<Expr> {
        self.binary(&["^"], Self::bitwise_and)
    }

    fn bitwise_and(&mut self) -> R<Expr> {
        self.binary(&["&"], Self::shift_expr)
    }

    fn shift_expr(&mut self) -> R<Expr> {
        self.binary(&["<<", ">>"], Self::sum)
    }

    fn sum(&mut self) -> R<Expr> {
        self.binary(&["+", "-"], Self::term)
    }

    fn term(&mut self) -> R<Expr> {
        self.binary(&["*", "/", "//", "%", "@"], Self::factor)
    }

    fn factor(&mut self) -> R<Expr> {
        if self.kind() == TokenKind::Op && matches!(self.text(), "+" | "-" | "~") {
            let op = self.text().to_string();
            let s = self.bump();
            self.enter()?;
            let operand = self.factor()?;
            self.leave();
            return Ok(Expr::new(
                Span::new(s.start, operand.span.end),
                ExprKind::UnaryOp { op, operand: Box::new(operand) },
            ));
        }
        self.power()
    }

    fn power(&mut self) -> R<Expr> {
        let base = self.await_primary()?;
        if self.eat_op("**").is_some() {
            self.enter()?;
            let exp = self.factor()?;
            self.leave();
            return Ok(Expr::new(
                Span::new(base.span.start, exp.span.end),
                ExprKind::BinOp { left: Box::new(base), op: "**".into(), right: Box::new(exp) },
            ));
        }
        Ok(base)
    }

    fn await_primary(&mut self) -> R<Expr> {
        if let Some(s) = self.eat_kw("await") {
            let v = self.primary()?;
            return Ok(Expr::new(Span::new(s.start, v.span.end), ExprKind::Await(Box::new(v))));
        }
        self.primary()
    }

    fn primary(&mut self) -> R<Expr> {
        let atom = self.atom()?;
        self.trailers(atom)
    }

    fn trailers(&mut self, mut e: Expr) -> R<Expr> {
        loop {
            if self.at_op(".") {
                let dot = self.bump();
                let attr = self.ident()?;
                e = Expr::new(
                    Span::new(e.span.start, attr.span.end),
                    ExprKind::Attribute { value: Box::new(e), dot, attr, ctx: Ctx::Load },
                );
            } else if self.at_op("(") {
                let (args, lparen, rparen) = self.call_args()?;
                e = Expr::new(
                    Span::new(e.span.start, rparen.end),
                    ExprKind::Call { func: Box::new(e), args, lparen, rparen },
                );
            } else if self.at_op("[") {
                self.bump();
                let slice = self.slices()?;
                self.expect_op("]")?;
                e = Expr::new(
                    Span::new(e.span.start, self.prev_end),
                    ExprKind::Subscript { value: Box::new(e), slice: Box::new(slice), ctx: Ctx::Load },
                );
            } else {
                return Ok(e);
            }
        }
    }

    fn call_args(&mut self) -> R<(Vec<Arg>, Span, Span)> {
        let lparen = self.expect_op("(")?;
        self.enter()?;
        let mut args = Vec::new();
        let mut seen_kw = false;
        let mut seen_dstar = false;
        let mut bare_genexp = false;
        while !self.at_op(")") {
            let here = self.span().start;
            if self.eat_op("*").is_some() {
                if seen_dstar {
                    return self.fail_at(here, "iterable argument unpacking follows keyword argument unpacking");
                }
                let v = self.expression()?;
                args.push(Arg::Starred(Expr::new(
                    Span::new(here, v.span.end),
                    ExprKind::Starred { value: Box::new(v), ctx: Ctx::Load },
                )));
            } else if self.eat_op("**").is_some() {
                seen_dstar = true;
                args.push(Arg::DoubleStarred(self.expression()?));
            } else if self.at_name() && self.op_at(self.pos + 1, "=") {
                let name = self.ident()?;
                self.bump();
                let value = self.expression()?;
                seen_kw = true;
                args.push(Arg::Keyword { name, value });
            } else {
                let e = self.named_expression()?;
                if self.at_op("=") {
                    return self.fail("expression cannot contain assignment, perhaps you meant \"==\"?");
                }
                if self.at_kw("for") || (self.at_kw("async") && self.kw_at(self.pos + 1, "for")) {
                    let generators = self.comp_for()?;
                    bare_genexp = true;
                    args.push(Arg::Positional(Expr::new(
                        Span::new(e.span.start, self.prev_end),
                        ExprKind::GeneratorExp { elt: Box::new(e), generators, parenthesized: false },
                    )));
                    if !self.at_op(")") || args.len() > 1 {
                        return self.fail_at(here, "Generator expression must be parenthesized");
                    }
                    continue;
                }
                if seen_dstar {
                    return self.fail_at(here, "positional argument follows keyword argument unpacking");
                }
                if seen_kw {
                    return self.fail_at(here, "positional argument follows keyword argument");
                }
                args.push(Arg::Positional(e));
            }
            if self.eat_op(",").is_none() {
                break;
            }
        }
        if bare_genexp && args.len() > 1 {
            return self.fail("Generator expression must be parenthesized");
        }
        let rparen = self.expect_op(")")?;
        self.leave();
        Ok((args, lparen, rparen))
    }

    fn slices(&mut self) -> R<Expr> {
        let first = self.slice_item()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let start = first.span.start;
        let mut elts = vec![first];
        while self.eat_op(",").is_some() {
            if self.at_op("]") {
                break;
            }
            elts.push(self.slice_item()?);
        }
        Ok(Expr::new(
            Span::new(start, self.prev_end),
            ExprKind::Tuple { elts, ctx: Ctx::Load, parenthesized: false },
        ))
    }

    fn slice_item(&mut self) -> R<Expr> {
        let start = self.span().start;
        let lower = if self.at_op(":") {
            None
        } else {
            let e = self.named_expression()?;
            if !self.at_op(":") {
                return Ok(e);
            }
            Some(Box::new(e))
        };
        self.expect_op(":")?;
        let upper = if !(self.at_op(":") || self.at_op(",") || self.at_op("]")) {
            Some(Box::new(self.expression()?))
        } else {
            None
        };
        let step = if self.eat_op(":").is_some() && !(self.at_op(",") || self.at_op("]")) {
            Some(Box::new(self.expression()?))
        } else {
            None
        };
        Ok(Expr::new(Span::new(start, self.prev_end), ExprKind::Slice { lower, upper, step }))
    }

    fn comp_for(&mut self) -> R<Vec<Comprehension>> {
        let mut gens = Vec::new();
        loop {
            let is_async = self.eat_kw("async").is_some();
            self.expect_kw("for")?;
            let target = self.star_targets()?;
            self.expect_kw("in")?;
            let iter = self.disjunction()?;
            let mut ifs = Vec::new();
            while self.eat_kw("if").is_some() {
                ifs.push(self.disjunction()?);
            }
            gens.push(Comprehension { is_async, target, iter, ifs });
            if !(self.at_kw("for") || (self.at_kw("async") && self.kw_at(self.pos + 1, "for"))) {
                return Ok(gens);
            }
        }
    }

    /// Assignment targets of `for` loops and comprehensions.
    fn star_targets(&mut self) -> R<Expr> {
        let first = self.star_target()?;
        if !self.at_op(",") {
            return to_target(self.src, first, Ctx::Store);
        }
        let start = first.span.start;
        let mut elts = vec![first];
        while self.eat_op(",").is_some() {
            if self.at_kw("in") || self.at_op("=") {
                break;
            }
            elts.push(self.star_target()?);
        }
        let t = Expr::new(
            Span::new(start, self.prev_end),
            ExprKind::Tuple { elts, ctx: Ctx::Load, parenthesized: false },
        );
        to_target(self.src, t, Ctx::Store)
    }

    fn star_target(&mut self) -> R<Expr> {
        if let Some(s) = self.eat_op("*") {
            let value = self.target_atom()?;
            return Ok(Expr::new(
                Span::new(s.start, value.span.end),
                ExprKind::Starred { value: Box::new(value), ctx: Ctx::Load },
            ));
        }
        self.target_atom()
    }

    /// A single target, parsed at the level that stops before `in` and `=`.
    fn target_atom(&mut self) -> R<Expr> {
        self.bitwise_or()
    }

    fn atom(&mut self) -> R<Expr> {
        let span = self.span();
        match self.kind() {
            TokenKind::Name => {
                let t = self.text();
                match t {
                    "None" | "True" | "False" => {
                        self.bump();
                        Ok(Expr::new(span, ExprKind::Constant))
                    }
                    _ if is_keyword(t) => self.fail("invalid syntax"),
                    _ => {
                        let id = t.to_string();
                        self.bump();
                        Ok(Expr::new(span, ExprKind::Name { id, ctx: Ctx::Load }))
                    }
                }
            }
            TokenKind::Number => {
                self.bump();
                Ok(Expr::new(span, ExprKind::Constant))
            }
            TokenKind::String => self.strings(),
            TokenKind::Op => match self.text() {
                "(" => {
                    self.enter()?;
                    let e = self.paren_atom();
                    self.leave();
                    e
                }
                "[" => {
                    self.enter()?;
                    let e = self.list_atom();
                    self.leave();
                    e
                }
                "{" => {
                    self.enter()?;
                    let e = self.brace_atom();
                    self.leave();
                    e
                }
                "..." => {
                    self.bump();
                    Ok(Expr::new(span, ExprKind::Constant))
                }
                _ => self.fail("invalid syntax"),
            },
            _ => self.fail("invalid syntax"),
        }
    }

    fn at_comp_for(&self) -> bool {
        self.at_kw("for") || (self.at_kw("async") && self.kw_at(self.pos + 1, "for"))
    }

    fn paren_atom(&mut self) -> R<Expr> {
        let open = self.bump().start;
        if self.eat_op(")").is_some() {
            return Ok(Expr::new(
                Span::new(open, self.prev_end),
                ExprKind::Tuple { elts: Vec::new(), ctx: Ctx::Load, parenthesized: true },
            ));
        }
        if self.at_kw("yield") {
            let mut e = self.yield_expr()?;
            self.expect_op(")")?;
            e.span = Span::new(open, self.prev_end);
            return Ok(e);
        }
        let first = self.star_named_expression()?;
        if self.at_comp_for() {
            let generators = self.comp_for()?;
            self.expect_op(")")?;
            return Ok(Expr::new(
                Span::new(open, self.prev_end),
                ExprKind::GeneratorExp { elt: Box::new(first), generators, parenthesized: true },
            ));
        }
        if self.at_op(",") {
            let mut elts = vec![first];
            while self.eat_op(",").is_some() {
                if self.at_op(")") {
                    break;
                }
                elts.push(self.star_named_expression()?);
            }
            self.expect_op(")")?;
            return Ok(Expr::new(
                Span::new(open, self.prev_end),
                ExprKind::Tuple { elts, ctx: Ctx::Load, parenthesized: true },
            ));
        }
        self.expect_op(")")?;
        let mut e = first;
        e.span = Span::new(open, self.prev_end);
        if let ExprKind::Tuple { parenthesized, .. } = &mut e.kind {
            *parenthesized = true;
        }
        Ok(e)
    }

    fn list_atom(&mut self) -> R<Expr> {
        let open = self.bump().start;
        let mut elts = Vec::new();
        if !self.at_op("]") {
            let first = self.star_named_expression()?;
            if self.at_comp_for() {
                let generators = self.comp_for()?;
                self.expect_op("]")?;
                return Ok(Expr::new(
                    Span::new(open, self.prev_end),
                    ExprKind::ListComp { elt: Box::new(first), generators },
                ));
            }
            elts.push(first);
            while self.eat_op(",").is_some() {
                if self.at_op("]") {
                    break;
                }
                elts.push(self.star_named_expression()?);
            }
        }
        self.expect_op("]")?;
        Ok(Expr::new(Span::new(open, self.prev_end), ExprKind::List { elts, ctx: Ctx::Load }))
    }

    fn brace_atom(&mut self) -> R<Expr> {
        let open = self.bump().start;
        if self.eat_op("}").is_some() {
            return Ok(Expr::new(Span::new(open, self.prev_end), ExprKind::Dict { items: Vec::new() }));
        }
        let first_item = if self.eat_op("**").is_some() {
            let value = self.bitwise_or()?;
            Err(DictItem { key: None, value })
        } else {
            let e = self.star_named_expression()?;
            if self.eat_op(":").is_some() {
                let value = self.expression()?;
                Err(DictItem { key: Some(e), value })
            } else {
                Ok(e)
            }
        };
        match first_item {
            Err(item) => {
                if item.key.is_some() && self.at_comp_for() {
                    let generators = self.comp_for()?;
                    self.expect_op("}")?;
                    let key = item.key.unwrap();
                    return Ok(Expr::new(
                        Span::new(open, self.prev_end),
                        ExprKind::DictComp { key: Box::new(key), value: Box::new(item.value), generators },
                    ));
                }
                let mut items = vec![item];
                while self.eat_op(",").is_some() {
                    if self.at_op("}") {
                        break;
                    }
                    if self.eat_op("**").is_some() {
                        let value = self.bitwise_or()?;
                        items.push(DictItem { key: None, value });
                    } else {
                        let key = self.expression()?;
                        self.expect_op(":")?;
                        let value = self.expression()?;
                        items.push(DictItem { key: Some(key), value });
                    }
                }
                self.expect_op("}")?;
                Ok(Expr::new(Span::new(open, self.prev_end), ExprKind::Dict { items }))
            }
            Ok(first) => {
                if self.at_comp_for() {
                    let generators = self.comp_for()?;
                    self.expect_op("}")?;
                    return Ok(Expr::new(
                        Span::new(open, self.prev_end),
                        ExprKind::SetComp { elt: Box::new(first), generators },
                    ));
                }
                let mut elts = vec![first];
                while self.eat_op(",").is_some() {
                    if self.at_op("}") {
                        break;
                    }
                    elts.push(self.star_named_expression()?);
                }
                self.expect_op("}")?;
                Ok(Expr::new(Span::new(open, self.prev_end), ExprKind::Set { elts }))
            }
        }
    }

    fn strings(&mut self) -> R<Expr> {
        let start = self.span().start;
        let mut pieces = Vec::new();
        let mut saw_bytes = None;
        while self.kind() == TokenKind::String {
            let span = self.span();
            let text = &self.src[span.start..span.end];
            let plen = text.find(['\'', '"']).unwrap_or(0);
            let prefix = text[..plen].to_string();
            let lower = prefix.to_ascii_lowercase();
            let is_bytes = lower.contains('b');
            if saw_bytes.is_some_and(|b| b != is_bytes) {
                return self.fail("cannot mix bytes and nonbytes literals");
            }
            saw_bytes = Some(is_bytes);
            let fields = if lower.contains('f') && self.fdepth == 0 {
                self.fstring_fields(span, plen, lower.contains('r'))?
            } else {
                Vec::new()
            };
            pieces.push(StrPiece { span, prefix, fields });
            self.bump();
        }
        Ok(Expr::new(Span::new(start, self.prev_end), ExprKind::Str { pieces }))
    }

    fn fstring_fields(&self, span: Span, plen: usize, raw: bool) -> R<Vec<FField>> {
        let b = self.src.as_bytes();
        let q = b[span.start + plen];
        let triple = span.end - span.start >= plen + 6
            && b[span.start + plen + 1] == q
            && b[span.start + plen + 2] == q;
        let qlen = if triple { 3 } else { 1 };
        let end = span.end - qlen;
        let mut i = span.start + plen + qlen;
        let mut fields = Vec::new();
        while i < end {
            match b[i] {
                b'\\' if !raw => {
                    if i + 2 < end && b[i + 1] == b'N' && b[i + 2] == b'{' {
                        while i < end && b[i] != b'}' {
                            i += 1;
                        }
                    }
                    i += 2;
                }
                b'{' => {
                    if i + 1 < end && b[i + 1] == b'{' {
                        i += 2;
                    } else {
                        let (field, next) = self.fstring_field(i + 1, end, q as char)?;
                        fields.push(field);
                        i = next;
                    }
                }
                b'}' => {
                    if i + 1 < end && b[i + 1] == b'}' {
                        i += 2;
                    } else {
                        return self.fail_at(i, "f-string: single '}' is not allowed");
                    }
                }
                _ => i += 1,
            }
        }
        Ok(fields)
    }

    /// Scans one replacement field whose expression starts at `s`. Returns
    /// the parsed field and the offset just past its closing brace.
    fn fstring_field(&self, s: usize, end: usize, quote: char) -> R<(FField, usize)> {
        let b = self.src.as_bytes();
        let mut i = s;
        let mut depth = 0usize;
        let mut debug = false;
        while i < end {
            match b[i] {
                b'(' | b'[' | b'{' => depth += 1,
                b')' | b']' | b'}' => {
                    if depth == 0 {
                        if b[i] == b'}' {
                            break;
                        }
                        return self.fail_at(i, &format!("f-string: unmatched '{}'", b[i] as char));
                    }
                    depth -= 1;
                }
                b'\'' | b'"' => {
                    let q = b[i];
                    let triple = i + 2 < end && b[i + 1] == q && b[i + 2] == q;
                    let qlen = if triple { 3 } else { 1 };
                    i += qlen;
                    loop {
                        if i >= end {
                            return self.fail_at(s, "f-string: unterminated string");
                        }
                        if b[i] == q && (!triple || (i + 2 < end + 1 && b.get(i + 1) == Some(&q) && b.get(i + 2) == Some(&q))) {
                            i += qlen;
                            break;
                        }
                        i += 1;
                    }
                    continue;
                }
                b'\\' => return self.fail_at(i, "f-string expression part cannot include a backslash"),
                b'#' => return self.fail_at(i, "f-string expression part cannot include '#'"),
                b'!' | b'<' | b'>' | b'=' if i + 1 < end && b[i + 1] == b'=' => {
                    i += 2;
                    continue;
                }
                b'!' if depth == 0 => break,
                b'=' if depth == 0 => {
                    debug = true;
                    break;
                }
                b':' if depth == 0 => break,
                _ => {}
            }
            i += 1;
        }
        if i >= end {
            return self.fail_at(s, "f-string: expecting '}'");
        }
        let expr_end = i;
        if self.src[s..expr_end].trim().is_empty() {
            return self.fail_at(s, "f-string: empty expression not allowed");
        }
        if debug {
            i += 1;
        }
        if i < end && b[i] == b'!' {
            if i + 1 < end && matches!(b[i + 1], b's' | b'r' | b'a') {
                i += 2;
            } else {
                return self.fail_at(i, "f-string: invalid conversion character: expected 's', 'r', or 'a'");
            }
        }
        if i < end && b[i] == b':' {
            i += 1;
            while i < end && b[i] != b'}' {
                if b[i] == b'{' {
                    let (_, next) = self.fstring_field(i + 1, end, quote)?;
                    i = next;
                } else {
                    i += 1;
                }
            }
        }
        if i >= end || b[i] != b'}' {
            return self.fail_at(s, "f-string: expecting '}'");
        }
        let toks = Tokenizer::fragment(self.src, s, expr_end).tokenize()?;
        let mut sub = Parser::new(self.src, toks, self.fdepth + 1);
        let expr = sub.yield_or_star_expressions()?;
        if sub.kind() != TokenKind::EndMarker {
            return sub.fail("f-string: invalid syntax");
        }
        Ok((FField { expr, quote, rewritable: !debug }, i + 1))
    }
}

fn is_augassign(op: &str) -> bool {
    matches!(op, "+=" | "-=" | "*=" | "/=" | "//=" | "%=" | "@=" | "&=" | "|=" | "^=" | ">>=" | "<<=" | "**=")
}

fn describe(kind: &ExprKind) -> &'static str {
    match kind {
        ExprKind::Call { .. } => "function call",
        ExprKind::Constant | ExprKind::Str { .. } => "literal",
        ExprKind::BinOp { .. } | ExprKind::UnaryOp { .. } => "expression",
        ExprKind::BoolOp { .. } => "expression",
        ExprKind::Compare { .. } => "comparison",
        ExprKind::Lambda { .. } => "lambda",
        ExprKind::IfExp { .. } => "conditional expression",
        ExprKind::NamedExpr { .. } => "named expression",
        ExprKind::Dict { .. } => "dict literal",
        ExprKind::Set { .. } => "set display",
        ExprKind::ListComp { .. } => "list comprehension",
        ExprKind::SetComp { .. } => "set comprehension",
        ExprKind::DictComp { .. } => "dict comprehension",
        ExprKind::GeneratorExp { .. } => "generator expression",
        ExprKind::Await(_) => "await expression",
        ExprKind::Yield(_) | ExprKind::YieldFrom(_) => "yield expression",
        _ => "expression",
    }
}

/// Converts a parsed expression into an assignment or deletion target.
fn to_target(src: &str, mut e: Expr, ctx: Ctx) -> R<Expr> {
    let start = e.span.start;
    match &mut e.kind {
        ExprKind::Name { ctx: c, id } => {
            if id == "__debug__" {
                return Err(ParseError::at(src, start, "cannot assign to __debug__"));
            }
            *c = ctx;
        }
        ExprKind::Attribute { ctx: c, .. } | ExprKind::Subscript { ctx: c, .. } => *c = ctx,
        ExprKind::Tuple { elts, ctx: c, .. } | ExprKind::List { elts, ctx: c } => {
            *c = ctx;
            let taken = std::mem::take(elts);
            *elts = taken.into_iter().map(|x| to_target(src, x, ctx)).collect::<R<Vec<_>>>()?;
        }
        ExprKind::Starred { value, ctx: c } if ctx == Ctx::Store => {
            *c = ctx;
            let inner = std::mem::replace(value.as_mut(), Expr::new(Span::default(), ExprKind::Constant));
            **value = to_target(src, inner, ctx)?;
        }
        other => {
            let verb = if ctx == Ctx::Del { "delete" } else { "assign to" };
            return Err(ParseError::at(src, start, &format!("cannot {verb} {}", describe(other))));
        }
    }
    Ok(e)
}
