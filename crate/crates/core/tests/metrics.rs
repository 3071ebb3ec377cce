mod common;

use common::{
    brute_force_nop_cp, random_affine_loop, random_hierarchy, random_program, AffineLoop,
    ProgramShape,
};
use hcdfg::frontend::parse_source;
use hcdfg::hcdfg::{add_multidim_edges, build_hcdfg, Hcdfg, Level, Pattern};
use hcdfg::metrics::{
    characterize, combine_do_while, combine_for, combine_if, combine_seq, combine_switch,
    combine_while, CharacterizationTree, CostTable, MetricRecord, Profile,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn build(src: &str) -> Hcdfg {
    add_multidim_edges(build_hcdfg(&parse_source("r.c", src).unwrap(), "f").unwrap())
}

fn tree(src: &str, costs: &CostTable) -> CharacterizationTree {
    characterize(&build(src), costs, &Profile::default()).unwrap()
}

fn loop_factor(src: &str) -> u64 {
    tree(src, &CostTable::default())
        .records
        .iter()
        .find(|r| r.pattern == Some(Pattern::For))
        .and_then(|r| r.max_unroll)
        .expect("one loop")
}

fn rec(nop: f64, cp: f64) -> MetricRecord {
    MetricRecord::with_nop(nop, cp)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bottom_up_matches_flattened_oracle(seed in any::<u64>()) {
        let h = random_hierarchy(seed, 50);
        let root = characterize(&h, &CostTable::default(), &Profile::default()).unwrap().root().clone();
        let (nop, cp) = brute_force_nop_cp(&h);
        prop_assert_eq!(root.nop(), nop);
        prop_assert_eq!(root.cp, cp);
    }

    #[test]
    fn unroll_matches_iteration_pair_oracle(seed in any::<u64>()) {
        let lp: AffineLoop = random_affine_loop(&mut ChaCha8Rng::seed_from_u64(seed));
        let src = lp.source();
        prop_assert_eq!(loop_factor(&src), lp.oracle_factor(), "{}", src);
    }

    #[test]
    fn scaling_costs_divides_gamma(seed in any::<u64>(), k in 2u32..6) {
        let src = random_program(seed, ProgramShape::default());
        let base = tree(&src, &CostTable::default());
        let scaled = tree(&src, &CostTable::default().scaled(k));
        for (a, b) in base.records.iter().zip(&scaled.records) {
            prop_assert!((a.gamma / f64::from(k) - b.gamma).abs() <= 1e-9, "{} {} {}", a.path, a.gamma, b.gamma);
            prop_assert!((a.mom - b.mom).abs() <= 1e-9);
            prop_assert!((a.com - b.com).abs() <= 1e-9);
        }
    }

    #[test]
    fn metric_ranges(seed in any::<u64>()) {
        let t = tree(&random_program(seed, ProgramShape::default()), &CostTable::default());
        for r in &t.records {
            prop_assert!((0.0..=1.0).contains(&r.mom), "{} mom {}", r.path, r.mom);
            prop_assert!(r.com >= 0.0 && r.gamma >= 0.0);
            if r.level == Level::Dfg && r.nop() > 0.0 {
                prop_assert!(r.gamma >= 1.0 - 1e-12, "{} gamma {}", r.path, r.gamma);
            }
        }
    }

    #[test]
    fn if_with_certain_branch_is_that_branch(n1 in 1.0f64..50.0, c1 in 1.0f64..20.0, n2 in 0.0f64..50.0, c2 in 1.0f64..20.0) {
        let cond = rec(1.0, 1.0);
        let t = rec(n1, c1);
        let f = rec(n2, c2);
        let g = combine_if(&cond, &t, &f, 1.0).unwrap();
        prop_assert!((g.gamma - (n1 / c1 + 1.0)).abs() <= 1e-12);
        let half = combine_if(&cond, &t, &f, 0.5).unwrap();
        let sw = combine_switch(&cond, &[(0.5, t.clone()), (0.5, f.clone())]).unwrap();
        prop_assert!((half.gamma - sw.gamma).abs() <= 1e-12);
        prop_assert!((half.cp - sw.cp).abs() <= 1e-12);
    }

    #[test]
    fn while_is_for_without_init_and_step(n in 0u64..20, bn in 0.0f64..30.0, bc in 1.0f64..10.0) {
        let cond = rec(1.0, 1.0);
        let body = rec(bn, bc);
        let empty = MetricRecord::empty();
        let w = combine_while(&cond, &body, n);
        let f = combine_for(&empty, &cond, &body, &empty, n);
        prop_assert!((w.nop() - f.nop()).abs() <= 1e-9 && (w.cp - f.cp).abs() <= 1e-9);
        let d = combine_do_while(&body, &cond, n.max(1));
        let unrolled = combine_seq(&vec![combine_seq(&[body.clone(), cond.clone()]); n.max(1) as usize]);
        prop_assert!((d.nop() - unrolled.nop()).abs() <= 1e-9 && (d.cp - unrolled.cp).abs() <= 1e-9);
    }
}

#[test]
fn worked_combination_examples() {
    let g = combine_if(&rec(1.0, 1.0), &rec(4.0, 2.0), &rec(2.0, 2.0), 0.5).unwrap();
    assert!((g.gamma - 2.5).abs() <= 1e-12);
    let s = combine_seq(&[rec(6.0, 3.0), rec(4.0, 4.0)]);
    assert!((s.gamma - 10.0 / 7.0).abs() <= 1e-12);
    let p = hcdfg::metrics::combine_par(&[rec(3.0, 3.0), rec(6.0, 6.0)]);
    assert!((p.gamma - 1.5).abs() <= 1e-12);
}

#[test]
fn probabilities_must_sum_to_one() {
    let c = rec(1.0, 1.0);
    assert!(combine_switch(&c, &[(0.5, rec(1.0, 1.0)), (0.4, rec(1.0, 1.0))]).is_err());
    assert!(combine_if(&c, &rec(1.0, 1.0), &rec(1.0, 1.0), 1.5).is_err());
}

#[test]
fn reductions_keep_full_unroll() {
    let src = "int f(int x[16])\n{\n    int i;\n    int s;\n\n    s = 0;\n    for (i = 0; i < 16; i++)\n        s = s + x[i];\n    return s;\n}\n";
    assert_eq!(loop_factor(src), 16);
    let src = "int f(int x[16])\n{\n    int i;\n    int s;\n\n    s = 0;\n    for (i = 0; i < 16; i++)\n        s = (s >> 1) + x[i];\n    return s;\n}\n";
    assert_eq!(loop_factor(src), 1);
}

#[test]
fn corpus_metric_ranges_and_dct_invariants() {
    let profile = common::corpus_profile();
    for f in common::corpus_files() {
        let p = parse_source(&f.path, &f.text).unwrap();
        for func in &p.functions {
            let h = add_multidim_edges(build_hcdfg(&p, &func.name).unwrap());
            let t = characterize(&h, &CostTable::default(), &profile).unwrap();
            for r in &t.records {
                assert!((0.0..=1.0).contains(&r.mom), "{} {}", r.path, r.mom);
            }
        }
    }
}
