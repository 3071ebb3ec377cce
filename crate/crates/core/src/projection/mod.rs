//! Delay versus resource trade-off curves.
//!
//! A function is flattened into one operation DAG, then scheduled under a
//! sweep of cycle budgets from its critical path up to fully sequential
//! execution. Each point reports how many ALUs, multipliers and memory ports
//! the schedule needs.

mod flatten;
mod schedule;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hcdfg::Hcdfg;
use crate::metrics::{CostTable, MetricsError, Profile};

pub use flatten::{flatten_for_scheduling, FlatDag, FlatOp, ResourceKind, DEFAULT_NODE_CAP};
pub use schedule::{alap_starts, list_schedule, schedule_min_resources, Resources, Schedule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectionError {
    #[error("flattened graph exceeds {cap} operations")]
    TooLarge { cap: usize },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("at least two curve points are needed, got {0}")]
    TooFewPoints(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub budget: u64,
    pub alu: u32,
    pub mul: u32,
    pub memport: u32,
    pub speedup: f64,
    pub feasible: bool,
}

impl TradeoffPoint {
    pub fn resources(&self) -> Resources {
        [self.alu, self.mul, self.memport]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub function: String,
    pub critical_path: u64,
    pub sequential: u64,
    /// A branch was left out of the flattened graph.
    pub dropped_branches: bool,
    /// Sorted by budget, ascending.
    pub points: Vec<TradeoffPoint>,
}

/// `n` budgets spaced geometrically from `lo` to `hi`, both included.
pub fn geometric_budgets(lo: u64, hi: u64, n: usize) -> Vec<u64> {
    let lo = lo.max(1);
    let hi = hi.max(lo);
    let ratio = hi as f64 / lo as f64;
    (0..n)
        .map(|k| {
            if k == 0 {
                lo
            } else if k + 1 == n {
                hi
            } else {
                let b = (lo as f64 * ratio.powf(k as f64 / (n - 1) as f64)).round() as u64;
                b.clamp(lo, hi)
            }
        })
        .collect()
}

/// Trade-off curve of `h` with `n_points` budgets.
///
/// Every point is scheduled on its own. Afterwards each point's resource
/// vector is lowered to the componentwise minimum of itself and the
/// previous (tighter) point when a reschedule under those limits still
/// meets the budget, otherwise it takes the previous vector, which always
/// fits a looser budget. Resource counts thus never increase with budget.
pub fn tradeoff_curve(
    h: &Hcdfg,
    costs: &CostTable,
    profile: &Profile,
    n_points: usize,
    node_cap: usize,
) -> Result<TradeoffCurve, ProjectionError> {
    if n_points < 2 {
        return Err(ProjectionError::TooFewPoints(n_points));
    }
    let dag = flatten_for_scheduling(h, costs, profile, node_cap)?;
    Ok(curve_for_dag(&h.function, &dag, n_points))
}

pub fn curve_for_dag(function: &str, dag: &FlatDag, n_points: usize) -> TradeoffCurve {
    let cp = dag.critical_path();
    let seq = dag.sequential_cost();
    let budgets = geometric_budgets(cp, seq, n_points);
    let mut points: Vec<TradeoffPoint> = Vec::with_capacity(budgets.len());
    let mut prev: Option<Resources> = None;
    for &b in &budgets {
        let Some(s) = schedule_min_resources(dag, b) else {
            points.push(point(b, [0; 3], seq, false));
            continue;
        };
        let mut r = s.usage;
        if let Some(p) = prev {
            let lowered = [r[0].min(p[0]), r[1].min(p[1]), r[2].min(p[2])];
            r = if lowered == r {
                r
            } else {
                match list_schedule(dag, &alap_starts(dag, b), lowered) {
                    Ok(s2) => s2.usage,
                    Err(_) => p,
                }
            };
        }
        prev = Some(r);
        points.push(point(b, r, seq, true));
    }
    TradeoffCurve {
        function: function.to_string(),
        critical_path: cp,
        sequential: seq,
        dropped_branches: dag.dropped_branches,
        points,
    }
}

fn point(budget: u64, r: Resources, seq: u64, feasible: bool) -> TradeoffPoint {
    TradeoffPoint {
        budget,
        alu: r[0],
        mul: r[1],
        memport: r[2],
        speedup: if budget > 0 {
            seq as f64 / budget as f64
        } else {
            0.0
        },
        feasible,
    }
}

impl TradeoffCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("budget,alu,mul,memport,speedup,feasible\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.4},{}",
                p.budget, p.alu, p.mul, p.memport, p.speedup, p.feasible
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("curve serializes");
        s.push('\n');
        s
    }

    /// Whitespace-separated data block for gnuplot, with `#` comment header.
    pub fn to_gnuplot(&self) -> String {
        let mut out = format!(
            "# trade-off curve of {}\n# critical path {} cycles, sequential {} cycles{}\n# budget alu mul memport speedup\n",
            self.function,
            self.critical_path,
            self.sequential,
            if self.dropped_branches {
                ", branches dropped"
            } else {
                ""
            }
        );
        for p in self.points.iter().filter(|p| p.feasible) {
            let _ = writeln!(
                out,
                "{} {} {} {} {:.4}",
                p.budget, p.alu, p.mul, p.memport, p.speedup
            );
        }
        out.push_str("\n\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;
    use crate::hcdfg::{add_multidim_edges, build_hcdfg};

    fn graph(src: &str) -> Hcdfg {
        add_multidim_edges(build_hcdfg(&parse_source("t.c", src).unwrap(), "f").unwrap())
    }

    fn flat(src: &str) -> FlatDag {
        flatten_for_scheduling(
            &graph(src),
            &CostTable::default(),
            &Profile::default(),
            DEFAULT_NODE_CAP,
        )
        .unwrap()
    }

    #[test]
    fn straight_line_is_unchanged() {
        let d = flat("int f(int a, int b) { return a * b + a; }");
        // read a, read b, *, read a, +, write return
        assert_eq!(d.len(), 6);
        assert_eq!(d.critical_path(), 4);
    }

    #[test]
    fn independent_loop_copies() {
        let d =
            flat("void f(int a[4], int b[4]) { int i; for (i = 0; i < 4; i++) b[i] = a[i] + 1; }");
        // Per iteration: read a, +, write b; counter reads/writes are free.
        assert_eq!(d.work()[ResourceKind::MemPort.index()], 8);
        let body_cp = 3;
        // init (free) + copies in parallel + step add + final test
        assert_eq!(d.critical_path(), body_cp + 1);
    }

    #[test]
    fn dependent_loop_copies_chain() {
        let d = flat("void f(int a[5]) { int i; for (i = 1; i < 5; i++) a[i] = a[i - 1] + 1; }");
        // Per iteration: i - 1, read a, +, write a, step +.
        assert_eq!(d.critical_path(), 4 * 5);
    }

    #[test]
    fn schedule_respects_budget_and_precedence() {
        let d = flat(
            "void f(int a[8], int b[8]) { int i; for (i = 0; i < 8; i++) b[i] = a[i] * 3 + a[i]; }",
        );
        let cp = d.critical_path();
        assert!(schedule_min_resources(&d, cp - 1).is_none());
        for b in [cp, cp + 3, d.sequential_cost()] {
            let s = schedule_min_resources(&d, b).unwrap();
            for i in 0..d.len() {
                let fin = s.start[i] + u64::from(d.ops[i].cost);
                assert!(fin <= b);
                for &p in &d.preds[i] {
                    assert!(s.start[p as usize] + u64::from(d.ops[p as usize].cost) <= s.start[i]);
                }
            }
        }
        let serial = schedule_min_resources(&d, d.sequential_cost()).unwrap();
        assert!(serial.usage.iter().all(|&u| u <= 1));
    }

    #[test]
    fn curve_endpoints_and_monotonicity() {
        let h = graph(
            "void f(int a[8], int b[8]) { int i; for (i = 0; i < 8; i++) b[i] = a[i] * 3 + a[i]; }",
        );
        let c = tradeoff_curve(
            &h,
            &CostTable::default(),
            &Profile::default(),
            6,
            DEFAULT_NODE_CAP,
        )
        .unwrap();
        assert_eq!(c.points.len(), 6);
        assert_eq!(c.points[0].budget, c.critical_path);
        assert_eq!(c.points[5].budget, c.sequential);
        for w in c.points.windows(2) {
            assert!(w[0].budget <= w[1].budget);
            assert!(w[1].alu <= w[0].alu && w[1].mul <= w[0].mul && w[1].memport <= w[0].memport);
        }
        assert!(c
            .to_csv()
            .starts_with("budget,alu,mul,memport,speedup,feasible\n"));
        assert!(matches!(
            tradeoff_curve(
                &h,
                &CostTable::default(),
                &Profile::default(),
                1,
                DEFAULT_NODE_CAP
            ),
            Err(ProjectionError::TooFewPoints(1))
        ));
    }

    #[test]
    fn branch_drop_is_flagged() {
        let d = flat("void f(int a, int b) { if (a > 0) { b = a * 2 + a * 3; } else { b = a; } }");
        assert!(d.dropped_branches);
    }

    #[test]
    fn node_cap() {
        let h = graph(
            "void f(int a[64], int b[64]) { int i; for (i = 0; i < 64; i++) b[i] = a[i] + 1; }",
        );
        assert!(matches!(
            flatten_for_scheduling(&h, &CostTable::default(), &Profile::default(), 50),
            Err(ProjectionError::TooLarge { cap: 50 })
        ));
    }
}
