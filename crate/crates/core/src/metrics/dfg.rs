use std::collections::BTreeMap;

use crate::hcdfg::{ElementaryKind, GraphNode, NodeId};

use super::{CostTable, MetricsError, OpCounts};

/// Longest cost-weighted path through the elementary nodes of a DFG.
pub fn critical_path(g: &GraphNode, costs: &CostTable) -> Result<f64, MetricsError> {
    let nodes: BTreeMap<NodeId, u32> = g.elements().map(|e| (e.id, costs.node_cost(e))).collect();
    let mut indeg: BTreeMap<NodeId, usize> = nodes.keys().map(|&k| (k, 0)).collect();
    let mut succ: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for e in &g.edges {
        if nodes.contains_key(&e.from) && nodes.contains_key(&e.to) {
            *indeg.get_mut(&e.to).unwrap() += 1;
            succ.entry(e.from).or_default().push(e.to);
        }
    }
    let mut ready: Vec<NodeId> = indeg
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&k, _)| k)
        .collect();
    let mut start: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut best = 0.0f64;
    let mut seen = 0;
    while let Some(n) = ready.pop() {
        seen += 1;
        let finish = start.get(&n).copied().unwrap_or(0.0) + f64::from(nodes[&n]);
        best = best.max(finish);
        for &s in succ.get(&n).map(Vec::as_slice).unwrap_or(&[]) {
            let st = start.entry(s).or_insert(0.0);
            *st = st.max(finish);
            let d = indeg.get_mut(&s).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.push(s);
            }
        }
    }
    if seen != nodes.len() {
        return Err(MetricsError::Cycle { path: g.path_key() });
    }
    Ok(best)
}

/// Processing operations, input/output accesses and tests of a DFG.
/// Tests of statically bounded loops are resolved at compile time and not counted.
pub fn count_ops(g: &GraphNode) -> OpCounts {
    let mut c = OpCounts::default();
    for e in g.elements() {
        match &e.kind {
            ElementaryKind::Processing { .. } => c.n_proc += 1.0,
            ElementaryKind::Memory { class, .. } if class.is_global() => c.n_gmem += 1.0,
            ElementaryKind::Memory { .. } => {}
            ElementaryKind::Conditional { deterministic, .. } => {
                if !deterministic {
                    c.n_test += 1.0;
                }
            }
        }
    }
    c
}

/// Nop / CP of a single DFG, 0 when the critical path is empty.
pub fn gamma_dfg(g: &GraphNode, costs: &CostTable) -> Result<f64, MetricsError> {
    let cp = critical_path(g, costs)?;
    Ok(super::ratio(count_ops(g).nop(), cp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;
    use crate::hcdfg::{build_hcdfg, Level};

    fn first_dfg(src: &str) -> GraphNode {
        let h = build_hcdfg(&parse_source("t.c", src).unwrap(), "f").unwrap();
        let mut out = None;
        h.root.walk(&mut |g| {
            if g.level == Level::Dfg && out.is_none() {
                out = Some(g.clone());
            }
        });
        out.unwrap()
    }

    #[test]
    fn add_of_two_params() {
        let g = first_dfg("int f(int a, int b) { return a + b; }");
        let c = count_ops(&g);
        assert_eq!((c.n_proc, c.n_gmem, c.n_test), (1.0, 3.0, 0.0));
        assert_eq!(critical_path(&g, &CostTable::default()).unwrap(), 3.0);
        assert!((gamma_dfg(&g, &CostTable::default()).unwrap() - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn independent_statements_share_a_level() {
        let g = first_dfg("void f(int a, int b, int x, int y) { x = a + 1; y = b + 1; }");
        assert_eq!(critical_path(&g, &CostTable::default()).unwrap(), 3.0);
        assert_eq!(count_ops(&g).nop(), 6.0);
    }

    #[test]
    fn cycle_is_reported() {
        let mut g = first_dfg("int f(int a, int b) { return a + b; }");
        let ids: Vec<_> = g.elements().map(|e| e.id).collect();
        g.edges.push(crate::hcdfg::Edge {
            from: *ids.last().unwrap(),
            to: ids[0],
            kind: crate::hcdfg::EdgeKind::ScalarData,
        });
        assert!(matches!(
            critical_path(&g, &CostTable::default()),
            Err(MetricsError::Cycle { .. })
        ));
    }
}
