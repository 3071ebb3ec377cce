//! Recursive-descent parser for the restricted C subset.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use super::ast::*;
use super::lexer::{Keyword, Token, TokenKind};
use super::FrontendError;

type PResult<T> = Result<T, FrontendError>;

const ALLOCATORS: &[&str] = &["malloc", "calloc", "realloc", "free", "alloca"];

/// Parse a token stream into a program. Function order follows declaration order.
pub fn parse(file: &Arc<str>, tokens: &[Token]) -> PResult<Program> {
    let mut p = Parser {
        tokens,
        pos: 0,
        file: file.clone(),
        consts: vec![HashMap::new()],
        scopes: Vec::new(),
        globals: HashSet::new(),
        locals: Vec::new(),
        signatures: BTreeMap::new(),
    };
    let program = p.parse_program()?;
    check_calls(&program, &p.signatures)?;
    Ok(program)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    file: Arc<str>,
    /// Scoped integer constants (`const int N = 8;`), usable as dimensions and case labels.
    consts: Vec<HashMap<String, i64>>,
    scopes: Vec<HashSet<String>>,
    globals: HashSet<String>,
    locals: Vec<Decl>,
    /// Declared or defined function names with their arity.
    signatures: BTreeMap<String, usize>,
}

enum TypePrefix {
    Void,
    Elem(ElemType),
}

impl<'a> Parser<'a> {
    // ---- token helpers ----

    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<&'a TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn peek_kind_at(&self, n: usize) -> Option<&'a TokenKind> {
        self.tokens.get(self.pos + n).map(|t| &t.kind)
    }

    fn span(&self) -> SourceSpan {
        match self.peek() {
            Some(t) => t.span.clone(),
            None => match self.tokens.last() {
                Some(t) => t.span.clone(),
                None => SourceSpan::new(self.file.clone(), 1, 1),
            },
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek_kind(), Some(TokenKind::Punct(q)) if *q == p)
    }

    fn is_keyword(&self, k: Keyword) -> bool {
        matches!(self.peek_kind(), Some(TokenKind::Keyword(q)) if *q == k)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, k: Keyword) -> bool {
        if self.is_keyword(k) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn syntax<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(FrontendError::Syntax {
            span: self.span(),
            message: message.into(),
        })
    }

    fn unexpected<T>(&self, expected: &str) -> PResult<T> {
        match self.peek() {
            Some(t) => self.syntax(format!("expected {expected}, found {}", t.kind)),
            None => self.syntax(format!("expected {expected}, found end of input")),
        }
    }

    fn unsupported<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(FrontendError::Unsupported {
            span: self.span(),
            message: message.into(),
        })
    }

    fn expect_punct(&mut self, p: &str) -> PResult<SourceSpan> {
        let span = self.span();
        if self.eat_punct(p) {
            Ok(span)
        } else {
            self.unexpected(&format!("`{p}`"))
        }
    }

    fn expect_ident(&mut self) -> PResult<(String, SourceSpan)> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Ident(name),
                span,
            }) => {
                self.pos += 1;
                Ok((name.clone(), span.clone()))
            }
            _ => self.unexpected("identifier"),
        }
    }

    // ---- scopes ----

    fn lookup_const(&self, name: &str) -> Option<i64> {
        self.consts.iter().rev().find_map(|m| m.get(name).copied())
    }

    fn is_declared(&self, name: &str) -> bool {
        self.scopes.iter().any(|s| s.contains(name)) || self.globals.contains(name)
    }

    fn declare_local(&mut self, decl: &Decl) {
        if let Some(scope) = self.scopes.last_mut() {
            scope.insert(decl.name.clone());
        }
        if let Some(v) = decl.constant_value() {
            if let Some(m) = self.consts.last_mut() {
                m.insert(decl.name.clone(), v);
            }
        }
        self.locals.push(decl.clone());
    }

    fn push_scope(&mut self) {
        self.scopes.push(HashSet::new());
        self.consts.push(HashMap::new());
    }

    fn pop_scope(&mut self) {
        self.scopes.pop();
        self.consts.pop();
    }

    // ---- top level ----

    fn parse_program(&mut self) -> PResult<Program> {
        let mut globals: Vec<Decl> = Vec::new();
        let mut functions: Vec<AstFunction> = Vec::new();
        while self.peek().is_some() {
            let start = self.span();
            let (is_const, prefix) = self.parse_type_prefix()?;
            self.reject_pointer()?;
            let (name, name_span) = self.expect_ident()?;
            if self.is_punct("(") {
                if let Some(f) = self.parse_function(prefix, name, start)? {
                    if functions.iter().any(|g| g.name == f.name) {
                        return Err(FrontendError::Semantic {
                            span: f.span.clone(),
                            message: format!("function `{}` defined twice", f.name),
                        });
                    }
                    functions.push(f);
                }
                continue;
            }
            let ty = match prefix {
                TypePrefix::Elem(ty) => ty,
                TypePrefix::Void => {
                    return Err(FrontendError::Syntax {
                        span: name_span,
                        message: "variables cannot have type `void`".into(),
                    })
                }
            };
            let mut name = name;
            let mut span = name_span;
            loop {
                let decl = self.parse_declarator_rest(name, span, ty, is_const, true)?;
                if self.globals.contains(&decl.name) {
                    return Err(FrontendError::Semantic {
                        span: decl.span.clone(),
                        message: format!("global `{}` declared twice", decl.name),
                    });
                }
                self.globals.insert(decl.name.clone());
                if let Some(v) = decl.constant_value() {
                    self.consts[0].insert(decl.name.clone(), v);
                }
                globals.push(decl);
                if !self.eat_punct(",") {
                    break;
                }
                self.reject_pointer()?;
                (name, span) = self.expect_ident()?;
            }
            self.expect_punct(";")?;
        }
        Ok(Program {
            file: self.file.clone(),
            globals,
            functions,
        })
    }

    fn parse_type_prefix(&mut self) -> PResult<(bool, TypePrefix)> {
        let mut is_const = false;
        let mut unsigned = false;
        let mut signedness_seen = false;
        let mut base: Option<BaseType> = None;
        let mut void = false;
        let start = self.span();
        while let Some(TokenKind::Keyword(k)) = self.peek_kind() {
            match k {
                Keyword::Const => is_const = true,
                Keyword::Static => {}
                Keyword::Unsigned => {
                    unsigned = true;
                    signedness_seen = true;
                }
                Keyword::Signed => signedness_seen = true,
                Keyword::Char => base = Some(BaseType::Char),
                Keyword::Short => base = Some(BaseType::Short),
                Keyword::Int => {
                    if base.is_none() {
                        base = Some(BaseType::Int)
                    }
                }
                Keyword::Long => base = Some(BaseType::Long),
                Keyword::Fixed => base = Some(BaseType::Fixed),
                Keyword::Void => void = true,
                Keyword::Float | Keyword::Double => {
                    return self.unsupported("floating-point types are not supported")
                }
                Keyword::Struct | Keyword::Union | Keyword::Enum => {
                    return self.unsupported("aggregate and enum types are not supported")
                }
                Keyword::Typedef => return self.unsupported("typedef is not supported"),
                _ => break,
            }
            self.pos += 1;
        }
        if void {
            if base.is_some() || signedness_seen {
                return Err(FrontendError::Syntax {
                    span: start,
                    message: "conflicting type specifiers".into(),
                });
            }
            return Ok((is_const, TypePrefix::Void));
        }
        match base {
            Some(base) => Ok((is_const, TypePrefix::Elem(ElemType { base, unsigned }))),
            None if signedness_seen => Ok((
                is_const,
                TypePrefix::Elem(ElemType {
                    base: BaseType::Int,
                    unsigned,
                }),
            )),
            None => self.unexpected("type"),
        }
    }

    fn starts_type(&self) -> bool {
        matches!(
            self.peek_kind(),
            Some(TokenKind::Keyword(
                Keyword::Const
                    | Keyword::Static
                    | Keyword::Unsigned
                    | Keyword::Signed
                    | Keyword::Char
                    | Keyword::Short
                    | Keyword::Int
                    | Keyword::Long
                    | Keyword::Fixed
                    | Keyword::Void
                    | Keyword::Float
                    | Keyword::Double
                    | Keyword::Struct
                    | Keyword::Union
                    | Keyword::Enum
                    | Keyword::Typedef
            ))
        )
    }

    fn reject_pointer(&self) -> PResult<()> {
        if self.is_punct("*") {
            return self.unsupported("pointers are not supported");
        }
        Ok(())
    }

    fn parse_dims(&mut self) -> PResult<Vec<Option<u64>>> {
        let mut dims = Vec::new();
        while self.eat_punct("[") {
            if self.eat_punct("]") {
                if !dims.is_empty() {
                    return self.syntax("only the leading array dimension may be unsized");
                }
                dims.push(None);
                continue;
            }
            let v = self.parse_const_int()?;
            if v <= 0 {
                return self.syntax("array dimensions must be positive");
            }
            dims.push(Some(v as u64));
            self.expect_punct("]")?;
        }
        Ok(dims)
    }

    /// Integer literal, negated literal, or named constant.
    fn parse_const_int(&mut self) -> PResult<i64> {
        let neg = self.eat_punct("-");
        let v = match self.peek_kind() {
            Some(TokenKind::Int(v)) => {
                let v = *v;
                self.pos += 1;
                v
            }
            Some(TokenKind::Ident(name)) => match self.lookup_const(name) {
                Some(v) => {
                    self.pos += 1;
                    v
                }
                None => return self.syntax(format!("`{name}` is not an integer constant")),
            },
            _ => return self.unexpected("integer constant"),
        };
        Ok(if neg { -v } else { v })
    }

    fn parse_declarator_rest(
        &mut self,
        name: String,
        span: SourceSpan,
        ty: ElemType,
        is_const: bool,
        global: bool,
    ) -> PResult<Decl> {
        let dims = self.parse_dims()?;
        let init = if self.eat_punct("=") {
            if self.is_punct("{") {
                let mut values = Vec::new();
                self.parse_init_list(&mut values)?;
                Some(Initializer::List(values))
            } else if global {
                let lit_span = self.span();
                let lit = self.parse_literal_value()?;
                Some(Initializer::Expr(AstExpr::new(
                    ExprKind::Literal(lit),
                    lit_span,
                )))
            } else {
                Some(Initializer::Expr(self.parse_pure_expr()?))
            }
        } else {
            None
        };
        if matches!(init, Some(Initializer::List(_))) && dims.is_empty() {
            return Err(FrontendError::Syntax {
                span,
                message: "brace initializer on a scalar".into(),
            });
        }
        Ok(Decl {
            name,
            ty,
            is_const,
            dims,
            init,
            span,
        })
    }

    fn parse_literal_value(&mut self) -> PResult<Literal> {
        let neg = self.eat_punct("-");
        let lit = match self.peek_kind() {
            Some(TokenKind::Int(v)) => Literal::Int(*v),
            Some(TokenKind::Fixed(v)) => Literal::Fixed(*v),
            Some(TokenKind::Ident(name)) if self.lookup_const(name).is_some() => {
                Literal::Int(self.lookup_const(name).unwrap_or_default())
            }
            Some(_) => return self.unsupported("initializers must be constant literals"),
            None => return self.unexpected("literal"),
        };
        self.pos += 1;
        Ok(match (neg, lit) {
            (true, Literal::Int(v)) => Literal::Int(-v),
            (true, Literal::Fixed(v)) => Literal::Fixed(-v),
            (false, l) => l,
        })
    }

    fn parse_init_list(&mut self, out: &mut Vec<Literal>) -> PResult<()> {
        self.expect_punct("{")?;
        loop {
            if self.eat_punct("}") {
                return Ok(());
            }
            if self.is_punct("{") {
                self.parse_init_list(out)?;
            } else {
                out.push(self.parse_literal_value()?);
            }
            if !self.eat_punct(",") {
                self.expect_punct("}")?;
                return Ok(());
            }
        }
    }

    fn parse_function(
        &mut self,
        prefix: TypePrefix,
        name: String,
        span: SourceSpan,
    ) -> PResult<Option<AstFunction>> {
        self.expect_punct("(")?;
        let mut params: Vec<Param> = Vec::new();
        if self.is_keyword(Keyword::Void)
            && matches!(self.peek_kind_at(1), Some(TokenKind::Punct(")")))
        {
            self.pos += 1;
        }
        if !self.is_punct(")") {
            loop {
                let (_, pp) = self.parse_type_prefix()?;
                let ty = match pp {
                    TypePrefix::Elem(t) => t,
                    TypePrefix::Void => return self.syntax("parameters cannot have type `void`"),
                };
                self.reject_pointer()?;
                let (pname, pspan) = self.expect_ident()?;
                let dims = self.parse_dims()?;
                if params.iter().any(|q| q.name == pname) {
                    return Err(FrontendError::Semantic {
                        span: pspan,
                        message: format!("duplicate parameter `{pname}`"),
                    });
                }
                params.push(Param {
                    name: pname,
                    ty,
                    is_array: !dims.is_empty(),
                    dims,
                    span: pspan,
                });
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        if let Some(&arity) = self.signatures.get(&name) {
            if arity != params.len() {
                return Err(FrontendError::Semantic {
                    span,
                    message: format!("conflicting declarations of `{name}`"),
                });
            }
        }
        self.signatures.insert(name.clone(), params.len());
        if self.eat_punct(";") {
            return Ok(None);
        }

        self.locals.clear();
        self.push_scope();
        for p in &params {
            self.scopes
                .last_mut()
                .expect("scope")
                .insert(p.name.clone());
        }
        let body_span = self.span();
        let stmts = self.parse_block_body()?;
        self.pop_scope();
        Ok(Some(AstFunction {
            name,
            return_type: match prefix {
                TypePrefix::Void => None,
                TypePrefix::Elem(t) => Some(t),
            },
            params,
            locals: std::mem::take(&mut self.locals),
            body: AstStmt::new(StmtKind::Block(stmts), body_span),
            span,
        }))
    }

    // ---- statements ----

    /// `{ items }` with its own scope.
    fn parse_block_body(&mut self) -> PResult<Vec<AstStmt>> {
        self.expect_punct("{")?;
        let mut out = Vec::new();
        while !self.is_punct("}") {
            if self.peek().is_none() {
                return self.unexpected("`}`");
            }
            self.parse_block_item(&mut out)?;
        }
        self.pos += 1;
        Ok(out)
    }

    fn parse_block_item(&mut self, out: &mut Vec<AstStmt>) -> PResult<()> {
        if self.starts_type() {
            self.parse_local_decls(out)?;
            self.expect_punct(";")?;
            return Ok(());
        }
        out.push(self.parse_stmt()?);
        Ok(())
    }

    fn parse_local_decls(&mut self, out: &mut Vec<AstStmt>) -> PResult<()> {
        let (is_const, prefix) = self.parse_type_prefix()?;
        let ty = match prefix {
            TypePrefix::Elem(t) => t,
            TypePrefix::Void => return self.syntax("variables cannot have type `void`"),
        };
        loop {
            self.reject_pointer()?;
            let (name, span) = self.expect_ident()?;
            if self.scopes.last().is_some_and(|s| s.contains(&name)) {
                return Err(FrontendError::Semantic {
                    span,
                    message: format!("`{name}` redeclared in the same scope"),
                });
            }
            let decl = self.parse_declarator_rest(name, span.clone(), ty, is_const, false)?;
            self.declare_local(&decl);
            out.push(AstStmt::new(StmtKind::Decl(decl), span));
            if !self.eat_punct(",") {
                return Ok(());
            }
        }
    }

    fn parse_stmt(&mut self) -> PResult<AstStmt> {
        let span = self.span();
        let Some(tok) = self.peek() else {
            return self.unexpected("statement");
        };
        match &tok.kind {
            TokenKind::Punct("{") => {
                self.push_scope();
                let stmts = self.parse_block_body()?;
                self.pop_scope();
                Ok(AstStmt::new(StmtKind::Block(stmts), span))
            }
            TokenKind::Punct(";") => {
                self.pos += 1;
                Ok(AstStmt::new(StmtKind::Block(Vec::new()), span))
            }
            TokenKind::Keyword(Keyword::If) => {
                self.pos += 1;
                self.expect_punct("(")?;
                let cond = self.parse_pure_expr()?;
                self.expect_punct(")")?;
                let then_branch = Box::new(self.parse_scoped_stmt()?);
                let else_branch = if self.eat_keyword(Keyword::Else) {
                    Some(Box::new(self.parse_scoped_stmt()?))
                } else {
                    None
                };
                Ok(AstStmt::new(
                    StmtKind::If {
                        cond,
                        then_branch,
                        else_branch,
                    },
                    span,
                ))
            }
            TokenKind::Keyword(Keyword::For) => {
                self.pos += 1;
                self.push_scope();
                let result = self.parse_for(span);
                self.pop_scope();
                result
            }
            TokenKind::Keyword(Keyword::While) => {
                self.pos += 1;
                self.expect_punct("(")?;
                let cond = self.parse_pure_expr()?;
                self.expect_punct(")")?;
                let body = Box::new(self.parse_scoped_stmt()?);
                Ok(AstStmt::new(StmtKind::While { cond, body }, span))
            }
            TokenKind::Keyword(Keyword::Do) => {
                self.pos += 1;
                let body = Box::new(self.parse_scoped_stmt()?);
                if !self.eat_keyword(Keyword::While) {
                    return self.unexpected("`while`");
                }
                self.expect_punct("(")?;
                let cond = self.parse_pure_expr()?;
                self.expect_punct(")")?;
                self.expect_punct(";")?;
                Ok(AstStmt::new(StmtKind::DoWhile { body, cond }, span))
            }
            TokenKind::Keyword(Keyword::Switch) => {
                self.pos += 1;
                self.parse_switch(span)
            }
            TokenKind::Keyword(Keyword::Return) => {
                self.pos += 1;
                let value = if self.is_punct(";") {
                    None
                } else {
                    let e = self.parse_pure_expr()?;
                    Some(e)
                };
                self.expect_punct(";")?;
                Ok(AstStmt::new(StmtKind::Return(value), span))
            }
            TokenKind::Keyword(Keyword::Goto) => self.unsupported("goto is not supported"),
            TokenKind::Keyword(Keyword::Break) => {
                self.unsupported("break is only supported as the last statement of a switch case")
            }
            TokenKind::Keyword(Keyword::Continue) => self.unsupported("continue is not supported"),
            TokenKind::Keyword(Keyword::Case | Keyword::Default) => {
                self.syntax("case label outside of a switch")
            }
            _ if self.starts_type() => self.syntax("declaration is not allowed here"),
            _ => {
                let e = self.parse_expr()?;
                check_side_effects(&e, true)?;
                self.expect_punct(";")?;
                Ok(AstStmt::new(StmtKind::Expr(e), span))
            }
        }
    }

    /// Statement used as a branch or loop body; gets a scope of its own.
    fn parse_scoped_stmt(&mut self) -> PResult<AstStmt> {
        self.push_scope();
        let r = self.parse_stmt();
        self.pop_scope();
        r
    }

    fn parse_for(&mut self, span: SourceSpan) -> PResult<AstStmt> {
        self.expect_punct("(")?;
        let init = if self.is_punct(";") {
            None
        } else if self.starts_type() {
            let mut decls = Vec::new();
            self.parse_local_decls(&mut decls)?;
            if decls.len() != 1 {
                return self.syntax("a for initializer may declare only one variable");
            }
            decls.pop().map(Box::new)
        } else {
            let e_span = self.span();
            let e = self.parse_expr()?;
            check_side_effects(&e, true)?;
            Some(Box::new(AstStmt::new(StmtKind::Expr(e), e_span)))
        };
        self.expect_punct(";")?;
        let cond = if self.is_punct(";") {
            None
        } else {
            Some(self.parse_pure_expr()?)
        };
        self.expect_punct(";")?;
        let step = if self.is_punct(")") {
            None
        } else {
            let e = self.parse_expr()?;
            check_side_effects(&e, true)?;
            Some(e)
        };
        self.expect_punct(")")?;
        let body = Box::new(self.parse_scoped_stmt()?);
        Ok(AstStmt::new(
            StmtKind::For {
                init,
                cond,
                step,
                body,
            },
            span,
        ))
    }

    fn parse_switch(&mut self, span: SourceSpan) -> PResult<AstStmt> {
        self.expect_punct("(")?;
        let scrutinee = self.parse_pure_expr()?;
        self.expect_punct(")")?;
        self.expect_punct("{")?;
        self.push_scope();

        let mut cases: Vec<SwitchCase> = Vec::new();
        let mut default: Option<Vec<AstStmt>> = None;
        let mut seen_labels: HashSet<i64> = HashSet::new();
        let mut pending_fallthrough: Option<SourceSpan> = None;

        while !self.eat_punct("}") {
            let case_span = self.span();
            let mut labels = Vec::new();
            let mut is_default = false;
            loop {
                if self.eat_keyword(Keyword::Case) {
                    let label_span = self.span();
                    let v = self.parse_const_int()?;
                    if !seen_labels.insert(v) {
                        return Err(FrontendError::Semantic {
                            span: label_span,
                            message: format!("duplicate case label {v}"),
                        });
                    }
                    labels.push(v);
                    self.expect_punct(":")?;
                } else if self.eat_keyword(Keyword::Default) {
                    if default.is_some() || is_default {
                        return self.syntax("multiple default labels");
                    }
                    is_default = true;
                    self.expect_punct(":")?;
                } else {
                    break;
                }
            }
            if labels.is_empty() && !is_default {
                return self.unexpected("`case` or `default`");
            }
            if is_default && !labels.is_empty() {
                return Err(FrontendError::Unsupported {
                    span: case_span,
                    message: "case labels sharing a body with default".into(),
                });
            }
            if let Some(s) = pending_fallthrough.take() {
                return Err(FrontendError::Unsupported {
                    span: s,
                    message: "fall-through between non-empty switch cases".into(),
                });
            }

            let mut body = Vec::new();
            let mut ended_with_break = false;
            while !self.is_keyword(Keyword::Case)
                && !self.is_keyword(Keyword::Default)
                && !self.is_punct("}")
            {
                if self.peek().is_none() {
                    return self.unexpected("`}`");
                }
                if self.is_keyword(Keyword::Break) {
                    self.pos += 1;
                    self.expect_punct(";")?;
                    ended_with_break = true;
                    if !(self.is_keyword(Keyword::Case)
                        || self.is_keyword(Keyword::Default)
                        || self.is_punct("}"))
                    {
                        return self.unsupported(
                            "break is only supported as the last statement of a switch case",
                        );
                    }
                    break;
                }
                self.parse_block_item(&mut body)?;
            }
            if !ended_with_break && !body.is_empty() && !self.is_punct("}") {
                pending_fallthrough = Some(case_span.clone());
            }
            if is_default {
                default = Some(body);
            } else {
                cases.push(SwitchCase {
                    labels,
                    body,
                    span: case_span,
                });
            }
        }
        self.pop_scope();
        Ok(AstStmt::new(
            StmtKind::Switch {
                scrutinee,
                cases,
                default,
            },
            span,
        ))
    }

    // ---- expressions ----

    fn parse_pure_expr(&mut self) -> PResult<AstExpr> {
        let e = self.parse_expr()?;
        check_side_effects(&e, false)?;
        Ok(e)
    }

    fn parse_expr(&mut self) -> PResult<AstExpr> {
        let lhs = self.parse_binary(1)?;
        if self.is_punct("?") {
            return self.unsupported("the conditional operator is not supported");
        }
        let Some(TokenKind::Punct(p)) = self.peek_kind() else {
            return Ok(lhs);
        };
        let op = match *p {
            "=" => None,
            "+=" | "-=" | "*=" | "/=" | "%=" | "<<=" | ">>=" | "&=" | "|=" | "^=" => {
                BinaryOp::from_token(&p[..p.len() - 1])
            }
            _ => return Ok(lhs),
        };
        if !lhs.is_lvalue() {
            return self.syntax("invalid assignment target");
        }
        self.pos += 1;
        let value = self.parse_expr()?;
        let span = lhs.span.clone();
        Ok(AstExpr::new(
            ExprKind::Assign {
                op,
                target: Box::new(lhs),
                value: Box::new(value),
            },
            span,
        ))
    }

    fn parse_binary(&mut self, min_prec: u8) -> PResult<AstExpr> {
        let mut lhs = self.parse_unary()?;
        while let Some(op) = self.peek_binary(min_prec) {
            self.pos += 1;
            let rhs = self.parse_binary(op.precedence() + 1)?;
            let span = lhs.span.clone();
            lhs = AstExpr::new(
                ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            );
        }
        Ok(lhs)
    }

    /// The binary operator at the cursor, if it binds at least `min_prec`.
    fn peek_binary(&self, min_prec: u8) -> Option<BinaryOp> {
        match self.peek_kind() {
            Some(TokenKind::Punct(p)) => {
                BinaryOp::from_token(p).filter(|op| op.precedence() >= min_prec)
            }
            _ => None,
        }
    }

    fn parse_unary(&mut self) -> PResult<AstExpr> {
        let span = self.span();
        let op = match self.peek_kind() {
            Some(TokenKind::Punct("-")) => UnaryOp::Neg,
            Some(TokenKind::Punct("!")) => UnaryOp::Not,
            Some(TokenKind::Punct("~")) => UnaryOp::BitNot,
            Some(TokenKind::Punct("++")) => UnaryOp::PreInc,
            Some(TokenKind::Punct("--")) => UnaryOp::PreDec,
            Some(TokenKind::Punct("+")) => {
                self.pos += 1;
                return self.parse_unary();
            }
            Some(TokenKind::Punct("*")) => {
                return self.unsupported("pointer dereference is not supported")
            }
            Some(TokenKind::Punct("&")) => {
                return self.unsupported("taking addresses is not supported")
            }
            Some(TokenKind::Keyword(Keyword::Sizeof)) => {
                return self.unsupported("sizeof is not supported")
            }
            _ => return self.parse_postfix(),
        };
        self.pos += 1;
        let operand = self.parse_unary()?;
        if op == UnaryOp::Neg {
            if let ExprKind::Literal(lit) = operand.kind {
                let lit = match lit {
                    Literal::Int(v) => Literal::Int(-v),
                    Literal::Fixed(v) => Literal::Fixed(-v),
                };
                return Ok(AstExpr::new(ExprKind::Literal(lit), span));
            }
        }
        if op.is_increment() && !operand.is_lvalue() {
            return self.syntax("increment of a non-lvalue");
        }
        Ok(AstExpr::new(
            ExprKind::Unary {
                op,
                operand: Box::new(operand),
            },
            span,
        ))
    }

    fn parse_postfix(&mut self) -> PResult<AstExpr> {
        let mut e = self.parse_primary()?;
        loop {
            if self.is_punct("[") {
                let ExprKind::Var(name) = &e.kind else {
                    return self.syntax("only named arrays can be indexed");
                };
                let name = name.clone();
                let mut indices = Vec::new();
                while self.eat_punct("[") {
                    indices.push(self.parse_expr()?);
                    self.expect_punct("]")?;
                }
                e = AstExpr::new(ExprKind::Index { name, indices }, e.span);
            } else if self.is_punct("++") || self.is_punct("--") {
                if !e.is_lvalue() {
                    return self.syntax("increment of a non-lvalue");
                }
                let op = if self.is_punct("++") {
                    UnaryOp::PostInc
                } else {
                    UnaryOp::PostDec
                };
                self.pos += 1;
                let span = e.span.clone();
                e = AstExpr::new(
                    ExprKind::Unary {
                        op,
                        operand: Box::new(e),
                    },
                    span,
                );
            } else if self.is_punct(".") || self.is_punct("->") {
                return self.unsupported("member access is not supported");
            } else {
                return Ok(e);
            }
        }
    }

    fn parse_primary(&mut self) -> PResult<AstExpr> {
        let span = self.span();
        match self.peek_kind() {
            Some(TokenKind::Int(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(AstExpr::new(ExprKind::Literal(Literal::Int(v)), span))
            }
            Some(TokenKind::Fixed(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(AstExpr::new(ExprKind::Literal(Literal::Fixed(v)), span))
            }
            Some(TokenKind::Punct("(")) => {
                self.pos += 1;
                let e = self.parse_expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Some(TokenKind::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                if self.is_punct("(") {
                    return self.parse_call(name, span);
                }
                if !self.is_declared(&name) {
                    return Err(FrontendError::Semantic {
                        span,
                        message: format!("use of undeclared variable `{name}`"),
                    });
                }
                Ok(AstExpr::new(ExprKind::Var(name), span))
            }
            _ => self.unexpected("expression"),
        }
    }

    fn parse_call(&mut self, callee: String, span: SourceSpan) -> PResult<AstExpr> {
        if ALLOCATORS.contains(&callee.as_str()) {
            return Err(FrontendError::Unsupported {
                span,
                message: format!("dynamic memory allocation (`{callee}`) is not supported"),
            });
        }
        if self.is_declared(&callee) {
            return Err(FrontendError::Syntax {
                span,
                message: format!("`{callee}` is a variable, not a function"),
            });
        }
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.is_punct(")") {
            loop {
                args.push(self.parse_expr()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(AstExpr::new(ExprKind::Call { callee, args }, span))
    }
}

/// Assignments and `++`/`--` are accepted only as a whole statement or for-step;
/// conditions and operands must be free of side effects.
fn check_side_effects(e: &AstExpr, top: bool) -> PResult<()> {
    let nested = |what: &str| {
        Err(FrontendError::Unsupported {
            span: e.span.clone(),
            message: format!("{what} inside a larger expression is not supported"),
        })
    };
    match &e.kind {
        ExprKind::Literal(_) | ExprKind::Var(_) => Ok(()),
        ExprKind::Index { indices, .. } => indices
            .iter()
            .try_for_each(|i| check_side_effects(i, false)),
        ExprKind::Binary { lhs, rhs, .. } => {
            check_side_effects(lhs, false)?;
            check_side_effects(rhs, false)
        }
        ExprKind::Unary { op, operand } => {
            if op.is_increment() && !top {
                return nested("increment");
            }
            check_side_effects(operand, false)
        }
        ExprKind::Assign { target, value, .. } => {
            if !top {
                return nested("assignment");
            }
            check_side_effects(target, false)?;
            check_side_effects(value, false)
        }
        ExprKind::Call { args, .. } => args.iter().try_for_each(|a| check_side_effects(a, false)),
    }
}

/// Calls must target defined functions with matching arity, without recursion,
/// and may appear only as `f(..);`, `x = f(..);` or `return f(..);`.
fn check_calls(program: &Program, signatures: &BTreeMap<String, usize>) -> PResult<()> {
    let defined: HashMap<&str, &AstFunction> = program
        .functions
        .iter()
        .map(|f| (f.name.as_str(), f))
        .collect();
    for f in &program.functions {
        let mut err: Option<FrontendError> = None;
        f.body.walk_stmts(&mut |s| {
            if err.is_some() {
                return;
            }
            let allowed_root: Option<&AstExpr> = match &s.kind {
                StmtKind::Expr(e) => match &e.kind {
                    ExprKind::Call { .. } => Some(e),
                    ExprKind::Assign {
                        op: None,
                        target,
                        value,
                    } if matches!(value.kind, ExprKind::Call { .. })
                        && matches!(target.kind, ExprKind::Var(_)) =>
                    {
                        Some(value)
                    }
                    _ => None,
                },
                StmtKind::Return(Some(e)) if matches!(e.kind, ExprKind::Call { .. }) => Some(e),
                _ => None,
            };
            let mut visit = |e: &AstExpr| {
                if err.is_some() {
                    return;
                }
                if let ExprKind::Call { callee, args } = &e.kind {
                    let Some(target) = defined.get(callee.as_str()) else {
                        let what = if signatures.contains_key(callee) {
                            "declared but never defined"
                        } else {
                            "unknown"
                        };
                        err = Some(FrontendError::Unsupported {
                            span: e.span.clone(),
                            message: format!("call to {what} function `{callee}`"),
                        });
                        return;
                    };
                    if target.params.len() != args.len() {
                        err = Some(FrontendError::Semantic {
                            span: e.span.clone(),
                            message: format!(
                                "`{callee}` takes {} arguments, {} given",
                                target.params.len(),
                                args.len()
                            ),
                        });
                        return;
                    }
                    if !allowed_root.is_some_and(|r| std::ptr::eq(r, e)) {
                        err = Some(FrontendError::Unsupported {
                            span: e.span.clone(),
                            message: "calls must be a whole statement, a plain assignment, or a return value".into(),
                        });
                        return;
                    }
                    for (a, p) in args.iter().zip(&target.params) {
                        if p.is_array && !matches!(a.kind, ExprKind::Var(_)) {
                            err = Some(FrontendError::Semantic {
                                span: a.span.clone(),
                                message: format!("array parameter `{}` needs an array name", p.name),
                            });
                            return;
                        }
                        if a.walk_any(&|x| matches!(x.kind, ExprKind::Call { .. })) {
                            err = Some(FrontendError::Unsupported {
                                span: a.span.clone(),
                                message: "nested calls in arguments are not supported".into(),
                            });
                            return;
                        }
                    }
                }
            };
            match &s.kind {
                StmtKind::Expr(e) | StmtKind::Return(Some(e)) => e.walk(&mut visit),
                StmtKind::Decl(Decl {
                    init: Some(Initializer::Expr(e)),
                    ..
                }) => e.walk(&mut visit),
                StmtKind::If { cond, .. }
                | StmtKind::While { cond, .. }
                | StmtKind::DoWhile { cond, .. } => cond.walk(&mut visit),
                StmtKind::Switch { scrutinee, .. } => scrutinee.walk(&mut visit),
                StmtKind::For { cond, step, .. } => {
                    if let Some(c) = cond {
                        c.walk(&mut visit);
                    }
                    if let Some(st) = step {
                        st.walk(&mut visit);
                    }
                }
                _ => {}
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
    }

    // Recursion: DFS over the call graph.
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit(
        name: &str,
        defined: &HashMap<&str, &AstFunction>,
        marks: &mut HashMap<String, Mark>,
    ) -> PResult<()> {
        marks.insert(name.to_string(), Mark::Active);
        let f = defined[name];
        for callee in f.callees() {
            match marks.get(&callee) {
                Some(Mark::Active) => {
                    let mut span = f.span.clone();
                    f.body.walk_exprs(&mut |e| {
                        if matches!(&e.kind, ExprKind::Call { callee: c, .. } if *c == callee) {
                            span = e.span.clone();
                        }
                    });
                    return Err(FrontendError::Unsupported {
                        span,
                        message: format!("recursive call to `{callee}`"),
                    });
                }
                Some(Mark::Done) => {}
                None => visit(&callee, defined, marks)?,
            }
        }
        marks.insert(name.to_string(), Mark::Done);
        Ok(())
    }
    let mut marks = HashMap::new();
    for f in &program.functions {
        if !marks.contains_key(&f.name) {
            visit(&f.name, &defined, &mut marks)?;
        }
    }
    Ok(())
}

impl AstExpr {
    pub(crate) fn walk_any(&self, pred: &dyn Fn(&AstExpr) -> bool) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= pred(e));
        found
    }
}
