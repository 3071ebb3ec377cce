mod common;

use common::{random_program, ProgramShape};
use hcdfg::frontend::{
    normalize_program, parse_source, print_program, AstStmt, FrontendError, Program,
};
use proptest::prelude::*;

fn erased(mut p: Program) -> Program {
    p.erase_spans();
    p
}

fn each_stmt(p: &Program, f: &mut dyn FnMut(&AstStmt)) {
    for func in &p.functions {
        func.body.walk_stmts(&mut |s| f(s));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn print_then_parse_is_identity(seed in any::<u64>()) {
        let src = random_program(seed, ProgramShape::default());
        let p = parse_source("r.c", &src).unwrap();
        let again = parse_source("r.c", &print_program(&p)).unwrap();
        prop_assert_eq!(erased(p), erased(again));
    }

    #[test]
    fn normalization_is_idempotent_and_printable(seed in any::<u64>()) {
        let src = random_program(seed, ProgramShape::default());
        let once = normalize_program(&parse_source("r.c", &src).unwrap());
        let twice = normalize_program(&once);
        prop_assert_eq!(erased(once.clone()), erased(twice));
        let reparsed = parse_source("r.c", &print_program(&once)).unwrap();
        prop_assert_eq!(erased(normalize_program(&reparsed)), erased(once));
    }

    #[test]
    fn spans_point_inside_the_source(seed in any::<u64>()) {
        let src = random_program(seed, ProgramShape::default());
        let lines: Vec<&str> = src.lines().collect();
        let p = parse_source("r.c", &src).unwrap();
        let mut ok = true;
        let mut check = |line: u32, col: u32| {
            let l = line as usize;
            ok &= l >= 1 && l <= lines.len() && (col as usize) <= lines[l - 1].len() + 1 && col >= 1;
        };
        each_stmt(&p, &mut |s| {
            check(s.span.line, s.span.column);
            s.walk_exprs(&mut |e| check(e.span.line, e.span.column));
        });
        prop_assert!(ok);
    }

    #[test]
    fn garbage_never_panics(src in "[a-z0-9(){};=+*<> \n\\[\\]]{0,80}") {
        let _ = parse_source("g.c", &src);
    }
}

#[test]
fn statement_span_is_its_first_token() {
    let src =
        "void f(int a[4])\n{\n    int i;\n    for (i = 0; i < 4; i++)\n        a[i] = 0;\n}\n";
    let p = parse_source("s.c", src).unwrap();
    let mut found = false;
    each_stmt(&p, &mut |s| {
        if matches!(s.kind, hcdfg::frontend::StmtKind::For { .. }) {
            assert_eq!((s.span.line, s.span.column), (4, 5));
            found = true;
        }
    });
    assert!(found);
}

#[test]
fn pointers_are_unsupported_not_syntax_errors() {
    let err = parse_source("p.c", "int g(int *p)\n{\n    return 0;\n}\n").unwrap_err();
    assert!(matches!(err, FrontendError::Unsupported { .. }), "{err:?}");
    assert_eq!(err.span().line, 1);
    let err = parse_source("p.c", "int g(int a)\n{\n    return a +;\n}\n").unwrap_err();
    assert!(matches!(err, FrontendError::Syntax { .. }), "{err:?}");
    assert_eq!(err.span().line, 3);
}

#[test]
fn corpus_round_trips() {
    for f in common::corpus_files() {
        let p = parse_source(&f.path, &f.text).unwrap();
        let again = parse_source(&f.path, &print_program(&p)).unwrap();
        assert_eq!(erased(p), erased(again), "{}", f.path);
    }
}
