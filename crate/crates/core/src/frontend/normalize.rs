//! Desugaring into the core statement forms the graph builder expects.

use super::ast::*;

/// Normalize every function of a program.
pub fn normalize_program(program: &Program) -> Program {
    Program {
        file: program.file.clone(),
        globals: program.globals.clone(),
        functions: program.functions.iter().map(normalize).collect(),
    }
}

/// Rewrite compound assignments and increments into plain assignments, and
/// make every branch or loop condition an explicit comparison (`x` becomes
/// `x != 0`, `!x` becomes `x == 0`). Idempotent.
pub fn normalize(f: &AstFunction) -> AstFunction {
    let mut out = f.clone();
    out.body = stmt(&f.body);
    out.locals = out
        .locals
        .iter()
        .map(|d| Decl {
            init: d.init.as_ref().map(initializer),
            ..d.clone()
        })
        .collect();
    out
}

fn initializer(init: &Initializer) -> Initializer {
    match init {
        Initializer::Expr(e) => Initializer::Expr(expr(e)),
        Initializer::List(l) => Initializer::List(l.clone()),
    }
}

fn stmt(s: &AstStmt) -> AstStmt {
    let kind = match &s.kind {
        StmtKind::Expr(e) => StmtKind::Expr(expr(e)),
        StmtKind::Block(stmts) => StmtKind::Block(stmts.iter().map(stmt).collect()),
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => StmtKind::If {
            cond: condition(cond),
            then_branch: Box::new(stmt(then_branch)),
            else_branch: else_branch.as_ref().map(|e| Box::new(stmt(e))),
        },
        StmtKind::For {
            init,
            cond,
            step,
            body,
        } => StmtKind::For {
            init: init.as_ref().map(|i| Box::new(stmt(i))),
            cond: cond.as_ref().map(condition),
            step: step.as_ref().map(expr),
            body: Box::new(stmt(body)),
        },
        StmtKind::While { cond, body } => StmtKind::While {
            cond: condition(cond),
            body: Box::new(stmt(body)),
        },
        StmtKind::DoWhile { body, cond } => StmtKind::DoWhile {
            body: Box::new(stmt(body)),
            cond: condition(cond),
        },
        StmtKind::Switch {
            scrutinee,
            cases,
            default,
        } => StmtKind::Switch {
            scrutinee: expr(scrutinee),
            cases: cases
                .iter()
                .map(|c| SwitchCase {
                    labels: c.labels.clone(),
                    body: c.body.iter().map(stmt).collect(),
                    span: c.span.clone(),
                })
                .collect(),
            default: default.as_ref().map(|d| d.iter().map(stmt).collect()),
        },
        StmtKind::Return(e) => StmtKind::Return(e.as_ref().map(expr)),
        StmtKind::Decl(d) => StmtKind::Decl(Decl {
            init: d.init.as_ref().map(initializer),
            ..d.clone()
        }),
    };
    AstStmt::new(kind, s.span.clone())
}

fn binary(op: BinaryOp, lhs: AstExpr, rhs: AstExpr, span: &SourceSpan) -> AstExpr {
    AstExpr::new(
        ExprKind::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        },
        span.clone(),
    )
}

fn int(v: i64, span: &SourceSpan) -> AstExpr {
    AstExpr::new(ExprKind::Literal(Literal::Int(v)), span.clone())
}

fn expr(e: &AstExpr) -> AstExpr {
    let kind = match &e.kind {
        ExprKind::Literal(_) | ExprKind::Var(_) => e.kind.clone(),
        ExprKind::Index { name, indices } => ExprKind::Index {
            name: name.clone(),
            indices: indices.iter().map(expr).collect(),
        },
        ExprKind::Binary { op, lhs, rhs } => ExprKind::Binary {
            op: *op,
            lhs: Box::new(expr(lhs)),
            rhs: Box::new(expr(rhs)),
        },
        ExprKind::Unary { op, operand } if op.is_increment() => {
            let target = expr(operand);
            let op = match op {
                UnaryOp::PreInc | UnaryOp::PostInc => BinaryOp::Add,
                _ => BinaryOp::Sub,
            };
            let value = binary(op, target.clone(), int(1, &e.span), &e.span);
            ExprKind::Assign {
                op: None,
                target: Box::new(target),
                value: Box::new(value),
            }
        }
        ExprKind::Unary { op, operand } => ExprKind::Unary {
            op: *op,
            operand: Box::new(expr(operand)),
        },
        ExprKind::Assign { op, target, value } => {
            let target = expr(target);
            let value = expr(value);
            let value = match op {
                Some(op) => binary(*op, target.clone(), value, &e.span),
                None => value,
            };
            ExprKind::Assign {
                op: None,
                target: Box::new(target),
                value: Box::new(value),
            }
        }
        ExprKind::Call { callee, args } => ExprKind::Call {
            callee: callee.clone(),
            args: args.iter().map(expr).collect(),
        },
    };
    AstExpr::new(kind, e.span.clone())
}

/// Make a branch condition an explicit test.
fn condition(e: &AstExpr) -> AstExpr {
    let e = expr(e);
    let span = e.span.clone();
    match e.kind {
        ExprKind::Binary { op, .. } if op.is_test() => e,
        ExprKind::Binary {
            op: op @ (BinaryOp::And | BinaryOp::Or),
            lhs,
            rhs,
        } => binary(op, condition(&lhs), condition(&rhs), &span),
        ExprKind::Unary {
            op: UnaryOp::Not,
            operand,
        } => {
            if is_test_like(&operand) {
                AstExpr::new(
                    ExprKind::Unary {
                        op: UnaryOp::Not,
                        operand: Box::new(condition(&operand)),
                    },
                    span,
                )
            } else {
                binary(BinaryOp::Eq, *operand, int(0, &span), &span)
            }
        }
        _ => binary(BinaryOp::Ne, e, int(0, &span), &span),
    }
}

fn is_test_like(e: &AstExpr) -> bool {
    match &e.kind {
        ExprKind::Binary { op, .. } => op.is_test() || matches!(op, BinaryOp::And | BinaryOp::Or),
        ExprKind::Unary {
            op: UnaryOp::Not, ..
        } => true,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_source, print_function};

    fn norm(body: &str) -> String {
        let src = format!("void f(int s, int a[16], int i, int x) {{ {body} }}");
        let p = parse_source("t.c", &src).unwrap();
        print_function(&normalize(&p.functions[0]))
    }

    #[test]
    fn compound_assignment() {
        assert!(norm("s += a[i];").contains("s = (s + a[i]);"));
    }

    #[test]
    fn increment() {
        assert!(norm("i++;").contains("i = (i + 1);"));
        assert!(norm("--i;").contains("i = (i - 1);"));
    }

    #[test]
    fn conditions_become_tests() {
        assert!(norm("if (x) s = 1;").contains("if ((x != 0))"));
        assert!(norm("if (!x) s = 1;").contains("if ((x == 0))"));
        assert!(norm("while (x && i < 3) i = i + 1;").contains("((x != 0) && (i < 3))"));
    }

    #[test]
    fn idempotent_on_sample() {
        let src = "void f(int s, int a[16]) { int i; for (i = 0; i < 16; i++) { s += a[i]; if (s) s -= 1; } }";
        let p = parse_source("t.c", src).unwrap();
        let once = normalize(&p.functions[0]);
        assert_eq!(normalize(&once), once);
    }
}
