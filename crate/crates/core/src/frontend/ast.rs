//! Abstract syntax tree for the restricted C subset.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Source position of a token or AST node. Lines and columns are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceSpan {
    pub file: Arc<str>,
    pub line: u32,
    pub column: u32,
}

impl SourceSpan {
    pub fn new(file: Arc<str>, line: u32, column: u32) -> Self {
        debug_assert!(line >= 1 && column >= 1);
        Self { file, line, column }
    }

    /// Placeholder used when spans are erased for structural comparison.
    pub fn dummy() -> Self {
        Self {
            file: Arc::from(""),
            line: 1,
            column: 1,
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Shl,
    Shr,
    BitAnd,
    BitOr,
    BitXor,
    And,
    Or,
    Le,
    Lt,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 18] = [
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::Mul,
        BinaryOp::Div,
        BinaryOp::Rem,
        BinaryOp::Shl,
        BinaryOp::Shr,
        BinaryOp::BitAnd,
        BinaryOp::BitOr,
        BinaryOp::BitXor,
        BinaryOp::And,
        BinaryOp::Or,
        BinaryOp::Le,
        BinaryOp::Lt,
        BinaryOp::Gt,
        BinaryOp::Ge,
        BinaryOp::Eq,
        BinaryOp::Ne,
    ];

    pub fn token(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
            BinaryOp::BitAnd => "&",
            BinaryOp::BitOr => "|",
            BinaryOp::BitXor => "^",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
            BinaryOp::Le => "<=",
            BinaryOp::Lt => "<",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.token() == token)
    }

    /// Comparison operators. These become conditional nodes in the graph.
    pub fn is_test(self) -> bool {
        matches!(
            self,
            BinaryOp::Le | BinaryOp::Lt | BinaryOp::Gt | BinaryOp::Ge | BinaryOp::Eq | BinaryOp::Ne
        )
    }

    /// Binding strength, higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::BitOr => 3,
            BinaryOp::BitXor => 4,
            BinaryOp::BitAnd => 5,
            BinaryOp::Eq | BinaryOp::Ne => 6,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 7,
            BinaryOp::Shl | BinaryOp::Shr => 8,
            BinaryOp::Add | BinaryOp::Sub => 9,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem => 10,
        }
    }
}

impl fmt::Display for BinaryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnaryOp {
    Neg,
    Not,
    BitNot,
    PreInc,
    PreDec,
    PostInc,
    PostDec,
}

impl UnaryOp {
    pub fn token(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Not => "!",
            UnaryOp::BitNot => "~",
            UnaryOp::PreInc | UnaryOp::PostInc => "++",
            UnaryOp::PreDec | UnaryOp::PostDec => "--",
        }
    }

    pub fn is_increment(self) -> bool {
        matches!(
            self,
            UnaryOp::PreInc | UnaryOp::PreDec | UnaryOp::PostInc | UnaryOp::PostDec
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Literal {
    Int(i64),
    Fixed(f64),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(v) => write!(f, "{v}"),
            Literal::Fixed(v) => {
                let s = format!("{v:?}");
                f.write_str(&s)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AstExpr {
    pub kind: ExprKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Literal(Literal),
    Var(String),
    /// Array element access; `indices` is never empty.
    Index {
        name: String,
        indices: Vec<AstExpr>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<AstExpr>,
        rhs: Box<AstExpr>,
    },
    Unary {
        op: UnaryOp,
        operand: Box<AstExpr>,
    },
    /// `target = value`, or `target op= value` before normalization.
    Assign {
        op: Option<BinaryOp>,
        target: Box<AstExpr>,
        value: Box<AstExpr>,
    },
    Call {
        callee: String,
        args: Vec<AstExpr>,
    },
}

impl AstExpr {
    pub fn new(kind: ExprKind, span: SourceSpan) -> Self {
        Self { kind, span }
    }

    pub fn is_lvalue(&self) -> bool {
        matches!(self.kind, ExprKind::Var(_) | ExprKind::Index { .. })
    }

    /// Name of the datum an lvalue designates.
    pub fn lvalue_name(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Var(n) | ExprKind::Index { name: n, .. } => Some(n),
            _ => None,
        }
    }

    /// Pre-order visit of this expression and all subexpressions.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a AstExpr)) {
        f(self);
        match &self.kind {
            ExprKind::Literal(_) | ExprKind::Var(_) => {}
            ExprKind::Index { indices, .. } => indices.iter().for_each(|e| e.walk(f)),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            ExprKind::Unary { operand, .. } => operand.walk(f),
            ExprKind::Assign { target, value, .. } => {
                target.walk(f);
                value.walk(f);
            }
            ExprKind::Call { args, .. } => args.iter().for_each(|e| e.walk(f)),
        }
    }

    fn walk_mut(&mut self, f: &mut dyn FnMut(&mut AstExpr)) {
        f(self);
        match &mut self.kind {
            ExprKind::Literal(_) | ExprKind::Var(_) => {}
            ExprKind::Index { indices, .. } => indices.iter_mut().for_each(|e| e.walk_mut(f)),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.walk_mut(f);
                rhs.walk_mut(f);
            }
            ExprKind::Unary { operand, .. } => operand.walk_mut(f),
            ExprKind::Assign { target, value, .. } => {
                target.walk_mut(f);
                value.walk_mut(f);
            }
            ExprKind::Call { args, .. } => args.iter_mut().for_each(|e| e.walk_mut(f)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaseType {
    Char,
    Short,
    Int,
    Long,
    /// Fixed-point value; stored as an integer word.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ElemType {
    pub base: BaseType,
    pub unsigned: bool,
}

impl ElemType {
    pub const INT: ElemType = ElemType {
        base: BaseType::Int,
        unsigned: false,
    };

    pub fn bit_width(self) -> u8 {
        match self.base {
            BaseType::Char => 8,
            BaseType::Short => 16,
            BaseType::Int | BaseType::Fixed => 32,
            BaseType::Long => 64,
        }
    }
}

impl fmt::Display for ElemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.unsigned {
            f.write_str("unsigned ")?;
        }
        f.write_str(match self.base {
            BaseType::Char => "char",
            BaseType::Short => "short",
            BaseType::Int => "int",
            BaseType::Long => "long",
            BaseType::Fixed => "fixed",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Initializer {
    Expr(AstExpr),
    /// Brace initializer, flattened in row-major order.
    List(Vec<Literal>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decl {
    pub name: String,
    pub ty: ElemType,
    pub is_const: bool,
    /// Array dimensions; `None` is an unsized leading dimension (`a[]`).
    pub dims: Vec<Option<u64>>,
    pub init: Option<Initializer>,
    pub span: SourceSpan,
}

impl Decl {
    pub fn is_array(&self) -> bool {
        !self.dims.is_empty()
    }

    /// Scalar constant value, if this is a `const` scalar with a literal initializer.
    pub fn constant_value(&self) -> Option<i64> {
        match (&self.init, self.is_const, self.is_array()) {
            (Some(Initializer::Expr(e)), true, false) => match e.kind {
                ExprKind::Literal(Literal::Int(v)) => Some(v),
                _ => None,
            },
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchCase {
    pub labels: Vec<i64>,
    pub body: Vec<AstStmt>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AstStmt {
    pub kind: StmtKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Expr(AstExpr),
    Block(Vec<AstStmt>),
    If {
        cond: AstExpr,
        then_branch: Box<AstStmt>,
        else_branch: Option<Box<AstStmt>>,
    },
    For {
        init: Option<Box<AstStmt>>,
        cond: Option<AstExpr>,
        step: Option<AstExpr>,
        body: Box<AstStmt>,
    },
    While {
        cond: AstExpr,
        body: Box<AstStmt>,
    },
    DoWhile {
        body: Box<AstStmt>,
        cond: AstExpr,
    },
    Switch {
        scrutinee: AstExpr,
        cases: Vec<SwitchCase>,
        default: Option<Vec<AstStmt>>,
    },
    Return(Option<AstExpr>),
    Decl(Decl),
}

impl AstStmt {
    pub fn new(kind: StmtKind, span: SourceSpan) -> Self {
        Self { kind, span }
    }

    /// Statements that hold no nested statement.
    pub fn is_simple(&self) -> bool {
        matches!(
            self.kind,
            StmtKind::Expr(_) | StmtKind::Return(_) | StmtKind::Decl(_)
        )
    }

    /// Pre-order visit of every expression directly or transitively in this statement.
    pub fn walk_exprs<'a>(&'a self, f: &mut dyn FnMut(&'a AstExpr)) {
        match &self.kind {
            StmtKind::Expr(e) => e.walk(f),
            StmtKind::Block(stmts) => stmts.iter().for_each(|s| s.walk_exprs(f)),
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                cond.walk(f);
                then_branch.walk_exprs(f);
                if let Some(e) = else_branch {
                    e.walk_exprs(f);
                }
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                if let Some(i) = init {
                    i.walk_exprs(f);
                }
                if let Some(c) = cond {
                    c.walk(f);
                }
                if let Some(s) = step {
                    s.walk(f);
                }
                body.walk_exprs(f);
            }
            StmtKind::While { cond, body } | StmtKind::DoWhile { body, cond } => {
                cond.walk(f);
                body.walk_exprs(f);
            }
            StmtKind::Switch {
                scrutinee,
                cases,
                default,
            } => {
                scrutinee.walk(f);
                for c in cases {
                    c.body.iter().for_each(|s| s.walk_exprs(f));
                }
                if let Some(d) = default {
                    d.iter().for_each(|s| s.walk_exprs(f));
                }
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    e.walk(f);
                }
            }
            StmtKind::Decl(d) => {
                if let Some(Initializer::Expr(e)) = &d.init {
                    e.walk(f);
                }
            }
        }
    }

    /// Pre-order visit of this statement and every nested statement.
    pub fn walk_stmts<'a>(&'a self, f: &mut dyn FnMut(&'a AstStmt)) {
        f(self);
        match &self.kind {
            StmtKind::Block(stmts) => stmts.iter().for_each(|s| s.walk_stmts(f)),
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                then_branch.walk_stmts(f);
                if let Some(e) = else_branch {
                    e.walk_stmts(f);
                }
            }
            StmtKind::For { init, body, .. } => {
                if let Some(i) = init {
                    i.walk_stmts(f);
                }
                body.walk_stmts(f);
            }
            StmtKind::While { body, .. } | StmtKind::DoWhile { body, .. } => body.walk_stmts(f),
            StmtKind::Switch { cases, default, .. } => {
                for c in cases {
                    c.body.iter().for_each(|s| s.walk_stmts(f));
                }
                if let Some(d) = default {
                    d.iter().for_each(|s| s.walk_stmts(f));
                }
            }
            StmtKind::Expr(_) | StmtKind::Return(_) | StmtKind::Decl(_) => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: ElemType,
    pub is_array: bool,
    pub dims: Vec<Option<u64>>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AstFunction {
    pub name: String,
    /// `None` for `void`.
    pub return_type: Option<ElemType>,
    pub params: Vec<Param>,
    /// Every local declaration in the body, in source order.
    pub locals: Vec<Decl>,
    /// Always a `Block`.
    pub body: AstStmt,
    pub span: SourceSpan,
}

impl AstFunction {
    pub fn body_stmts(&self) -> &[AstStmt] {
        match &self.body.kind {
            StmtKind::Block(stmts) => stmts,
            _ => std::slice::from_ref(&self.body),
        }
    }

    /// Names of corpus functions called from this body, in first-call order.
    pub fn callees(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        self.body.walk_exprs(&mut |e| {
            if let ExprKind::Call { callee, .. } = &e.kind {
                if !out.contains(callee) {
                    out.push(callee.clone());
                }
            }
        });
        out
    }
}

/// One parsed translation unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub file: Arc<str>,
    pub globals: Vec<Decl>,
    pub functions: Vec<AstFunction>,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&AstFunction> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn global(&self, name: &str) -> Option<&Decl> {
        self.globals.iter().find(|g| g.name == name)
    }

    /// Replace every span with a dummy so that two parses of equivalent
    /// text compare equal.
    pub fn erase_spans(&mut self) {
        self.file = Arc::from("");
        for g in &mut self.globals {
            erase_decl(g);
        }
        for f in &mut self.functions {
            erase_function(f);
        }
    }
}

pub(crate) fn erase_function(f: &mut AstFunction) {
    f.span = SourceSpan::dummy();
    for p in &mut f.params {
        p.span = SourceSpan::dummy();
    }
    for d in &mut f.locals {
        erase_decl(d);
    }
    erase_stmt(&mut f.body);
}

fn erase_decl(d: &mut Decl) {
    d.span = SourceSpan::dummy();
    if let Some(Initializer::Expr(e)) = &mut d.init {
        erase_expr(e);
    }
}

fn erase_expr(e: &mut AstExpr) {
    e.walk_mut(&mut |x| x.span = SourceSpan::dummy());
}

fn erase_stmt(s: &mut AstStmt) {
    s.span = SourceSpan::dummy();
    match &mut s.kind {
        StmtKind::Expr(e) => erase_expr(e),
        StmtKind::Block(stmts) => stmts.iter_mut().for_each(erase_stmt),
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            erase_expr(cond);
            erase_stmt(then_branch);
            if let Some(e) = else_branch {
                erase_stmt(e);
            }
        }
        StmtKind::For {
            init,
            cond,
            step,
            body,
        } => {
            if let Some(i) = init {
                erase_stmt(i);
            }
            if let Some(c) = cond {
                erase_expr(c);
            }
            if let Some(st) = step {
                erase_expr(st);
            }
            erase_stmt(body);
        }
        StmtKind::While { cond, body } | StmtKind::DoWhile { body, cond } => {
            erase_expr(cond);
            erase_stmt(body);
        }
        StmtKind::Switch {
            scrutinee,
            cases,
            default,
        } => {
            erase_expr(scrutinee);
            for c in cases {
                c.span = SourceSpan::dummy();
                c.body.iter_mut().for_each(erase_stmt);
            }
            if let Some(d) = default {
                d.iter_mut().for_each(erase_stmt);
            }
        }
        StmtKind::Return(e) => {
            if let Some(e) = e {
                erase_expr(e);
            }
        }
        StmtKind::Decl(d) => erase_decl(d),
    }
}
