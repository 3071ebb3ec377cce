//! Dependence edges between sibling graphs.

use std::collections::BTreeSet;

use super::{Child, Edge, EdgeKind, GraphNode, Hcdfg, Level};

/// Add dependence edges between the sibling graphs of every HCDFG node.
///
/// A sibling that writes data a later sibling reads gets a data edge to it:
/// multidimensional when both are loops and they share an array, scalar
/// otherwise. Consecutive siblings without a data edge get a control edge so
/// that source order stays visible. Re-running replaces the previous edges.
pub fn add_multidim_edges(mut h: Hcdfg) -> Hcdfg {
    h.root.walk_mut(&mut |g| {
        if g.level == Level::Hcdfg {
            g.edges = sibling_edges(g);
        }
    });
    h
}

fn sibling_edges(g: &GraphNode) -> Vec<Edge> {
    let kids: Vec<&GraphNode> = g.child_graphs().collect();
    let mut edges = Vec::new();
    for (i, p) in kids.iter().enumerate() {
        for q in &kids[i + 1..] {
            let shared: BTreeSet<&str> = p
                .effects
                .writes
                .iter()
                .filter(|w| q.effects.reads.contains(*w))
                .map(String::as_str)
                .collect();
            if shared.is_empty() {
                continue;
            }
            let kind = if p.is_loop() && q.is_loop() && shares_array(p, &shared) {
                EdgeKind::Multidim
            } else {
                EdgeKind::ScalarData
            };
            edges.push(Edge {
                from: p.id,
                to: q.id,
                kind,
            });
        }
    }
    for w in kids.windows(2) {
        let (a, b) = (w[0].id, w[1].id);
        if !edges.iter().any(|e| e.from == a && e.to == b) {
            edges.push(Edge {
                from: a,
                to: b,
                kind: EdgeKind::Control,
            });
        }
    }
    edges.sort_by_key(|e| (e.from, e.to));
    edges
}

fn shares_array(p: &GraphNode, shared: &BTreeSet<&str>) -> bool {
    let mut found = false;
    p.walk(&mut |g| {
        for c in &g.children {
            if let Child::Elem(e) = c {
                if let super::ElementaryKind::Memory {
                    datum, subscript, ..
                } = &e.kind
                {
                    if !subscript.is_empty() && shared.contains(datum.as_str()) {
                        found = true;
                    }
                }
            }
        }
    });
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;
    use crate::hcdfg::build_hcdfg;

    fn linked(src: &str) -> Hcdfg {
        add_multidim_edges(build_hcdfg(&parse_source("t.c", src).unwrap(), "f").unwrap())
    }

    #[test]
    fn producer_consumer_loops() {
        let h = linked(
            "void f(int x[8], int y[8]) { int row[8]; int i; int j;
               for (i = 0; i < 8; i++) row[i] = x[i];
               for (j = 0; j < 8; j++) y[j] = row[j] + 1; }",
        );
        let multi: Vec<_> = h
            .root
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Multidim)
            .collect();
        assert_eq!(multi.len(), 1);
    }

    #[test]
    fn disjoint_loops_keep_order_only() {
        let h = linked(
            "void f(int x[8], int y[8]) { int i; int j;
               for (i = 0; i < 8; i++) x[i] = 0;
               for (j = 0; j < 8; j++) y[j] = 1; }",
        );
        let loops: Vec<_> = h
            .root
            .child_graphs()
            .filter(|g| g.is_loop())
            .map(|g| g.id)
            .collect();
        let between: Vec<_> = h
            .root
            .edges
            .iter()
            .filter(|e| e.from == loops[0] && e.to == loops[1])
            .collect();
        assert_eq!(between.len(), 1);
        assert_eq!(between[0].kind, EdgeKind::Control);
    }

    #[test]
    fn self_dependent_loop_has_no_self_edge() {
        let h = linked("void f(int a[8]) { int i; for (i = 1; i < 8; i++) a[i] = a[i - 1] + 1; }");
        assert!(h.root.edges.iter().all(|e| e.from != e.to));
        assert!(h.root.edges.iter().all(|e| e.kind != EdgeKind::Multidim));
    }
}
