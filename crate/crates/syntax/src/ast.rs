//! Syntax tree for Python 3.10 with byte spans on every node.
//!
//! The tree keeps only what source rewriting and coverage accounting need:
//! operators are recorded as text, literals are kept as spans, and match
//! patterns are opaque.

use crate::span::Span;

#[derive(Debug, Clone, PartialEq)]
pub struct Module {
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    /// Whole statement, including decorators and nested blocks.
    pub span: Span,
    /// For compound statements, from the first decorator or keyword to the
    /// header colon; equal to `span` for simple statements.
    pub header: Span,
    pub kind: StmtKind,
}

impl Stmt {
    pub fn is_compound(&self) -> bool {
        matches!(
            self.kind,
            StmtKind::If { .. }
                | StmtKind::While { .. }
                | StmtKind::For { .. }
                | StmtKind::With { .. }
                | StmtKind::Try { .. }
                | StmtKind::FunctionDef { .. }
                | StmtKind::ClassDef { .. }
                | StmtKind::Match { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alias {
    pub name: String,
    pub asname: Option<Ident>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WithItem {
    pub context: Expr,
    pub vars: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Handler {
    /// From `except` through the end of the handler body.
    pub span: Span,
    /// From `except` to the colon.
    pub header: Span,
    pub typ: Option<Expr>,
    pub name: Option<Ident>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchCase {
    pub header: Span,
    pub pattern: Span,
    pub guard: Option<Expr>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Expr(Expr),
    Assign {
        targets: Vec<Expr>,
        value: Expr,
    },
    AugAssign {
        target: Expr,
        op: String,
        value: Expr,
    },
    AnnAssign {
        target: Expr,
        annotation: Expr,
        value: Option<Expr>,
    },
    Pass,
    Break,
    Continue,
    Return(Option<Expr>),
    Delete(Vec<Expr>),
    Raise {
        exc: Option<Expr>,
        cause: Option<Expr>,
    },
    Global(Vec<Ident>),
    Nonlocal(Vec<Ident>),
    Assert {
        test: Expr,
        msg: Option<Expr>,
    },
    Import(Vec<Alias>),
    ImportFrom {
        module: Option<String>,
        level: usize,
        names: Vec<Alias>,
    },
    If {
        test: Expr,
        body: Vec<Stmt>,
        orelse: Vec<Stmt>,
        /// Span of the `else` keyword when the statement has a plain else.
        else_kw: Option<Span>,
        /// True for an `elif` clause stored as the sole orelse statement.
        is_elif: bool,
    },
    While {
        test: Expr,
        body: Vec<Stmt>,
        orelse: Vec<Stmt>,
        else_kw: Option<Span>,
    },
    For {
        is_async: bool,
        target: Expr,
        iter: Expr,
        body: Vec<Stmt>,
        orelse: Vec<Stmt>,
        else_kw: Option<Span>,
    },
    With {
        is_async: bool,
        items: Vec<WithItem>,
        body: Vec<Stmt>,
    },
    Try {
        body: Vec<Stmt>,
        handlers: Vec<Handler>,
        orelse: Vec<Stmt>,
        else_kw: Option<Span>,
        finalbody: Vec<Stmt>,
        finally_kw: Option<Span>,
    },
    FunctionDef {
        is_async: bool,
        name: Ident,
        decorators: Vec<Expr>,
        params: Params,
        returns: Option<Expr>,
        body: Vec<Stmt>,
    },
    ClassDef {
        name: Ident,
        decorators: Vec<Expr>,
        bases: Vec<Arg>,
        body: Vec<Stmt>,
    },
    Match {
        subject: Expr,
        cases: Vec<MatchCase>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ctx {
    Load,
    Store,
    Del,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: Ident,
    pub annotation: Option<Expr>,
    pub default: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Params {
    pub posonly: Vec<Param>,
    pub args: Vec<Param>,
    pub vararg: Option<Param>,
    pub kwonly: Vec<Param>,
    pub kwarg: Option<Param>,
}

impl Params {
    pub fn all(&self) -> impl Iterator<Item = &Param> {
        self.posonly
            .iter()
            .chain(self.args.iter())
            .chain(self.vararg.iter())
            .chain(self.kwonly.iter())
            .chain(self.kwarg.iter())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    Positional(Expr),
    Starred(Expr),
    Keyword { name: Ident, value: Expr },
    DoubleStarred(Expr),
}

impl Arg {
    pub fn value(&self) -> &Expr {
        match self {
            Arg::Positional(e) | Arg::Starred(e) | Arg::DoubleStarred(e) => e,
            Arg::Keyword { value, .. } => value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comprehension {
    pub is_async: bool,
    pub target: Expr,
    pub iter: Expr,
    pub ifs: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DictItem {
    /// None for `**mapping` entries.
    pub key: Option<Expr>,
    pub value: Expr,
}

/// A replacement field of an f-string, parsed from the string body.
#[derive(Debug, Clone, PartialEq)]
pub struct FField {
    pub expr: Expr,
    /// Quote character of the enclosing string token.
    pub quote: char,
    /// False for self-documenting `{x=}` fields, whose text is echoed.
    pub rewritable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrPiece {
    pub span: Span,
    pub prefix: String,
    pub fields: Vec<FField>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub span: Span,
    pub kind: ExprKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Name {
        id: String,
        ctx: Ctx,
    },
    /// Numbers, `None`, `True`, `False`, `...`.
    Constant,
    Str {
        pieces: Vec<StrPiece>,
    },
    Attribute {
        value: Box<Expr>,
        dot: Span,
        attr: Ident,
        ctx: Ctx,
    },
    Subscript {
        value: Box<Expr>,
        slice: Box<Expr>,
        ctx: Ctx,
    },
    Slice {
        lower: Option<Box<Expr>>,
        upper: Option<Box<Expr>>,
        step: Option<Box<Expr>>,
    },
    Call {
        func: Box<Expr>,
        args: Vec<Arg>,
        lparen: Span,
        rparen: Span,
    },
    BinOp {
        left: Box<Expr>,
        op: String,
        right: Box<Expr>,
    },
    UnaryOp {
        op: String,
        operand: Box<Expr>,
    },
    BoolOp {
        op: String,
        values: Vec<Expr>,
    },
    Compare {
        left: Box<Expr>,
        ops: Vec<String>,
        comparators: Vec<Expr>,
    },
    IfExp {
        test: Box<Expr>,
        body: Box<Expr>,
        orelse: Box<Expr>,
    },
    Lambda {
        params: Box<Params>,
        body: Box<Expr>,
    },
    NamedExpr {
        target: Box<Expr>,
        value: Box<Expr>,
    },
    Tuple {
        elts: Vec<Expr>,
        ctx: Ctx,
        parenthesized: bool,
    },
    List {
        elts: Vec<Expr>,
        ctx: Ctx,
    },
    Set {
        elts: Vec<Expr>,
    },
    Dict {
        items: Vec<DictItem>,
    },
    ListComp {
        elt: Box<Expr>,
        generators: Vec<Comprehension>,
    },
    SetComp {
        elt: Box<Expr>,
        generators: Vec<Comprehension>,
    },
    DictComp {
        key: Box<Expr>,
        value: Box<Expr>,
        generators: Vec<Comprehension>,
    },
    GeneratorExp {
        elt: Box<Expr>,
        generators: Vec<Comprehension>,
        /// False when the generator is the bare sole argument of a call.
        parenthesized: bool,
    },
    Await(Box<Expr>),
    Yield(Option<Box<Expr>>),
    YieldFrom(Box<Expr>),
    Starred {
        value: Box<Expr>,
        ctx: Ctx,
    },
}

impl Expr {
    pub fn new(span: Span, kind: ExprKind) -> Self {
        Expr { span, kind }
    }

    pub fn ctx(&self) -> Option<Ctx> {
        match &self.kind {
            ExprKind::Name { ctx, .. }
            | ExprKind::Attribute { ctx, .. }
            | ExprKind::Subscript { ctx, .. }
            | ExprKind::Tuple { ctx, .. }
            | ExprKind::List { ctx, .. }
            | ExprKind::Starred { ctx, .. } => Some(*ctx),
            _ => None,
        }
    }
}
