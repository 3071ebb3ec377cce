mod common;

use common::{random_program, ProgramShape};
use hcdfg::frontend::parse_source;
use hcdfg::hcdfg::{add_multidim_edges, build_hcdfg, Hcdfg};
use hcdfg::metrics::{CostTable, Profile};
use hcdfg::projection::{
    flatten_for_scheduling, schedule_min_resources, tradeoff_curve, FlatDag, ResourceKind,
    TradeoffCurve, DEFAULT_NODE_CAP,
};
use proptest::prelude::*;

fn build(src: &str) -> Hcdfg {
    add_multidim_edges(build_hcdfg(&parse_source("r.c", src).unwrap(), "f").unwrap())
}

/// Checks precedence, the budget and the claimed peak usage of a schedule
/// by replaying it cycle by cycle.
fn replay(dag: &FlatDag, start: &[u64], usage: [u32; 3], budget: u64) -> Result<(), String> {
    let mut busy = vec![[0u32; 3]; budget as usize + 1];
    for (i, op) in dag.ops.iter().enumerate() {
        let end = start[i] + u64::from(op.cost);
        if end > budget {
            return Err(format!("op {i} ends at {end} past {budget}"));
        }
        for &p in &dag.preds[i] {
            let pe = start[p as usize] + u64::from(dag.ops[p as usize].cost);
            if pe > start[i] {
                return Err(format!("op {i} starts before pred {p} ends"));
            }
        }
        if let Some(k) = op.kind {
            for t in start[i]..end {
                busy[t as usize][k.index()] += 1;
            }
        }
    }
    for k in ResourceKind::ALL {
        let peak = busy.iter().map(|b| b[k.index()]).max().unwrap_or(0);
        if peak > usage[k.index()] {
            return Err(format!(
                "{k:?} peak {peak} above reported {}",
                usage[k.index()]
            ));
        }
    }
    Ok(())
}

fn check_curve(c: &TradeoffCurve, dag: &FlatDag) -> Result<(), String> {
    let first = c.points.first().ok_or("no points")?;
    if first.budget != dag.critical_path() || !first.feasible {
        return Err(format!(
            "tightest point {first:?}, critical path {}",
            dag.critical_path()
        ));
    }
    let last = c.points.last().unwrap();
    if last.budget != dag.sequential_cost() || last.resources().iter().any(|&r| r > 1) {
        return Err(format!("endpoint {last:?}"));
    }
    for w in c.points.windows(2) {
        let (a, b) = (w[0].resources(), w[1].resources());
        if w[0].budget > w[1].budget || (0..3).any(|k| b[k] > a[k]) {
            return Err(format!("not monotone: {:?} then {:?}", w[0], w[1]));
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schedules_replay_cleanly(seed in any::<u64>(), frac in 0.0f64..1.0) {
        let h = build(&random_program(seed, ProgramShape::default()));
        let dag = flatten_for_scheduling(&h, &CostTable::default(), &Profile::default(), DEFAULT_NODE_CAP).unwrap();
        let cp = dag.critical_path();
        let budget = cp + ((dag.sequential_cost() - cp) as f64 * frac) as u64;
        let s = schedule_min_resources(&dag, budget).unwrap();
        prop_assert_eq!(replay(&dag, &s.start, s.usage, budget), Ok(()));
        if cp > 0 {
            prop_assert!(schedule_min_resources(&dag, cp - 1).is_none());
        }
    }

    #[test]
    fn curves_are_monotone(seed in any::<u64>(), n in 2usize..9) {
        let h = build(&random_program(seed, ProgramShape::default()));
        let dag = flatten_for_scheduling(&h, &CostTable::default(), &Profile::default(), DEFAULT_NODE_CAP).unwrap();
        let c = tradeoff_curve(&h, &CostTable::default(), &Profile::default(), n, DEFAULT_NODE_CAP).unwrap();
        prop_assert_eq!(c.points.len(), n);
        prop_assert_eq!(check_curve(&c, &dag), Ok(()));
    }
}

#[test]
fn corpus_curves() {
    let profile = common::corpus_profile();
    let costs = CostTable::default();
    for f in common::corpus_files() {
        let p = parse_source(&f.path, &f.text).unwrap();
        for func in &p.functions {
            let h = add_multidim_edges(build_hcdfg(&p, &func.name).unwrap());
            let dag = flatten_for_scheduling(&h, &costs, &profile, DEFAULT_NODE_CAP).unwrap();
            let c = tradeoff_curve(&h, &costs, &profile, 6, DEFAULT_NODE_CAP).unwrap();
            check_curve(&c, &dag).unwrap_or_else(|e| panic!("{}: {e}", func.name));
            let again = tradeoff_curve(&h, &costs, &profile, 6, DEFAULT_NODE_CAP).unwrap();
            assert_eq!(c.to_csv(), again.to_csv());
        }
    }
}

#[test]
fn unrollable_loop_beats_chained_loop() {
    let par = build("void f(int a[16], int b[16])\n{\n    int i;\n    for (i = 0; i < 16; i++)\n        b[i] = a[i] * 3 + 1;\n}\n");
    let seq = build("void f(int a[17])\n{\n    int i;\n    for (i = 1; i < 17; i++)\n        a[i] = a[i - 1] * 3 + 1;\n}\n");
    let speedup = |h: &Hcdfg| {
        let c = tradeoff_curve(
            h,
            &CostTable::default(),
            &Profile::default(),
            4,
            DEFAULT_NODE_CAP,
        )
        .unwrap();
        c.points[0].speedup
    };
    assert!(speedup(&par) > 4.0 * speedup(&seq));
}

#[test]
fn gnuplot_and_json_outputs() {
    let h = build("void f(int a[4], int b[4])\n{\n    int i;\n    for (i = 0; i < 4; i++)\n        b[i] = a[i] + 1;\n}\n");
    let c = tradeoff_curve(
        &h,
        &CostTable::default(),
        &Profile::default(),
        3,
        DEFAULT_NODE_CAP,
    )
    .unwrap();
    let plot = c.to_gnuplot();
    assert_eq!(
        plot.lines()
            .filter(|l| !l.starts_with('#') && !l.is_empty())
            .count(),
        3
    );
    let back: TradeoffCurve = serde_json::from_str(&c.to_json()).unwrap();
    assert_eq!(back, c);
}
