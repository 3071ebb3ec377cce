//! Pretty-printer whose output re-parses to a structurally equal AST.
//!
//! Binary expressions are fully parenthesized so that grouping survives the
//! round trip regardless of precedence.

use std::fmt::Write;

use super::ast::*;

pub fn print_program(program: &Program) -> String {
    let mut out = String::new();
    for g in &program.globals {
        decl(&mut out, g);
        out.push_str(";\n");
    }
    if !program.globals.is_empty() {
        out.push('\n');
    }
    for (i, f) in program.functions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&print_function(f));
    }
    out
}

pub fn print_function(f: &AstFunction) -> String {
    let mut out = String::new();
    match f.return_type {
        Some(t) => write!(out, "{t}").unwrap(),
        None => out.push_str("void"),
    }
    write!(out, " {}(", f.name).unwrap();
    for (i, p) in f.params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write!(out, "{} {}", p.ty, p.name).unwrap();
        dims(&mut out, &p.dims);
    }
    out.push_str(") ");
    stmt(&mut out, &f.body, 0);
    out.push('\n');
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn dims(out: &mut String, dims: &[Option<u64>]) {
    for d in dims {
        match d {
            Some(n) => write!(out, "[{n}]").unwrap(),
            None => out.push_str("[]"),
        }
    }
}

fn decl(out: &mut String, d: &Decl) {
    if d.is_const {
        out.push_str("const ");
    }
    write!(out, "{} {}", d.ty, d.name).unwrap();
    dims(out, &d.dims);
    match &d.init {
        None => {}
        Some(Initializer::Expr(e)) => {
            out.push_str(" = ");
            expr(out, e);
        }
        Some(Initializer::List(values)) => {
            out.push_str(" = {");
            for (i, v) in values.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write!(out, "{v}").unwrap();
            }
            out.push('}');
        }
    }
}

fn stmt_list(out: &mut String, stmts: &[AstStmt], level: usize) {
    for s in stmts {
        indent(out, level);
        stmt(out, s, level);
        out.push('\n');
    }
}

/// Prints a statement starting at the current column, without a trailing newline.
fn stmt(out: &mut String, s: &AstStmt, level: usize) {
    match &s.kind {
        StmtKind::Expr(e) => {
            expr(out, e);
            out.push(';');
        }
        StmtKind::Decl(d) => {
            decl(out, d);
            out.push(';');
        }
        StmtKind::Block(stmts) => {
            if stmts.is_empty() {
                out.push_str("{ }");
                return;
            }
            out.push_str("{\n");
            stmt_list(out, stmts, level + 1);
            indent(out, level);
            out.push('}');
        }
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            out.push_str("if (");
            expr(out, cond);
            out.push_str(") ");
            stmt(out, then_branch, level);
            if let Some(e) = else_branch {
                out.push_str(" else ");
                stmt(out, e, level);
            }
        }
        StmtKind::For {
            init,
            cond,
            step,
            body,
        } => {
            out.push_str("for (");
            match init.as_deref() {
                Some(AstStmt {
                    kind: StmtKind::Decl(d),
                    ..
                }) => decl(out, d),
                Some(AstStmt {
                    kind: StmtKind::Expr(e),
                    ..
                }) => expr(out, e),
                _ => {}
            }
            out.push_str("; ");
            if let Some(c) = cond {
                expr(out, c);
            }
            out.push_str("; ");
            if let Some(st) = step {
                expr(out, st);
            }
            out.push_str(") ");
            stmt(out, body, level);
        }
        StmtKind::While { cond, body } => {
            out.push_str("while (");
            expr(out, cond);
            out.push_str(") ");
            stmt(out, body, level);
        }
        StmtKind::DoWhile { body, cond } => {
            out.push_str("do ");
            stmt(out, body, level);
            out.push_str(" while (");
            expr(out, cond);
            out.push_str(");");
        }
        StmtKind::Switch {
            scrutinee,
            cases,
            default,
        } => {
            out.push_str("switch (");
            expr(out, scrutinee);
            out.push_str(") {\n");
            for c in cases {
                for l in &c.labels {
                    indent(out, level);
                    writeln!(out, "case {l}:").unwrap();
                }
                stmt_list(out, &c.body, level + 1);
                indent(out, level + 1);
                out.push_str("break;\n");
            }
            if let Some(d) = default {
                indent(out, level);
                out.push_str("default:\n");
                stmt_list(out, d, level + 1);
                indent(out, level + 1);
                out.push_str("break;\n");
            }
            indent(out, level);
            out.push('}');
        }
        StmtKind::Return(e) => match e {
            Some(e) => {
                out.push_str("return ");
                expr(out, e);
                out.push(';');
            }
            None => out.push_str("return;"),
        },
    }
}

fn expr(out: &mut String, e: &AstExpr) {
    match &e.kind {
        ExprKind::Literal(l) => write!(out, "{l}").unwrap(),
        ExprKind::Var(n) => out.push_str(n),
        ExprKind::Index { name, indices } => {
            out.push_str(name);
            for i in indices {
                out.push('[');
                expr(out, i);
                out.push(']');
            }
        }
        ExprKind::Binary { op, lhs, rhs } => {
            out.push('(');
            expr(out, lhs);
            write!(out, " {op} ").unwrap();
            expr(out, rhs);
            out.push(')');
        }
        ExprKind::Unary { op, operand } => match op {
            UnaryOp::PostInc | UnaryOp::PostDec => {
                expr(out, operand);
                out.push_str(op.token());
            }
            _ => {
                out.push_str(op.token());
                out.push('(');
                expr(out, operand);
                out.push(')');
            }
        },
        ExprKind::Assign { op, target, value } => {
            expr(out, target);
            match op {
                Some(op) => write!(out, " {op}= ").unwrap(),
                None => out.push_str(" = "),
            }
            expr(out, value);
        }
        ExprKind::Call { callee, args } => {
            out.push_str(callee);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expr(out, a);
            }
            out.push(')');
        }
    }
}
