use std::collections::BTreeSet;

use crate::frontend::BinaryOp;
use crate::hcdfg::{
    AccessMode, ElementaryKind, ElementaryNode, GraphNode, Hcdfg, Level, NodeId, Operator, Pattern,
    Role,
};
use crate::metrics::{count_ops, unroll_analysis, CostTable, MetricsError, Profile};

use super::ProjectionError;

pub const DEFAULT_NODE_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ResourceKind {
    Alu,
    Mul,
    MemPort,
}

impl ResourceKind {
    pub const ALL: [ResourceKind; 3] =
        [ResourceKind::Alu, ResourceKind::Mul, ResourceKind::MemPort];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Multiplications, divisions and remainders use a multiplier; every
    /// other operator and every comparison an ALU; input/output accesses a
    /// memory port. Local data needs no shared resource.
    pub fn of(node: &ElementaryNode) -> Option<ResourceKind> {
        match &node.kind {
            ElementaryKind::Processing {
                op: Operator::Binary(BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem),
            } => Some(ResourceKind::Mul),
            ElementaryKind::Processing { .. } | ElementaryKind::Conditional { .. } => {
                Some(ResourceKind::Alu)
            }
            ElementaryKind::Memory { class, .. } if class.is_global() => {
                Some(ResourceKind::MemPort)
            }
            ElementaryKind::Memory { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatOp {
    /// `None` for operations that occupy no shared resource.
    pub kind: Option<ResourceKind>,
    pub cost: u32,
}

/// Loop- and branch-free operation graph. Predecessors always have smaller indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlatDag {
    pub ops: Vec<FlatOp>,
    pub preds: Vec<Vec<u32>>,
    /// Set when a branch was discarded in favour of a heavier one.
    pub dropped_branches: bool,
}

impl FlatDag {
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Sum of all operation costs: the single-unit sequential time.
    pub fn sequential_cost(&self) -> u64 {
        self.ops.iter().map(|o| u64::from(o.cost)).sum()
    }

    /// Longest cost-weighted path.
    pub fn critical_path(&self) -> u64 {
        let mut finish = vec![0u64; self.len()];
        for i in 0..self.len() {
            let start = self.preds[i]
                .iter()
                .map(|&p| finish[p as usize])
                .max()
                .unwrap_or(0);
            finish[i] = start + u64::from(self.ops[i].cost);
        }
        finish.into_iter().max().unwrap_or(0)
    }

    /// Per-kind total cost.
    pub fn work(&self) -> [u64; 3] {
        let mut w = [0u64; 3];
        for o in &self.ops {
            if let Some(k) = o.kind {
                w[k.index()] += u64::from(o.cost);
            }
        }
        w
    }
}

/// Entry and exit points of a flattened subgraph.
#[derive(Debug, Clone, Default)]
struct Fragment {
    sources: Vec<u32>,
    sinks: Vec<u32>,
    /// Scalar writes and reads by datum, used to chain reductions.
    writes: Vec<(String, u32)>,
    reads: Vec<(String, u32)>,
}

impl Fragment {
    fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }
}

struct Flattener<'a> {
    costs: &'a CostTable,
    profile: &'a Profile,
    cap: usize,
    dag: FlatDag,
}

/// Expand `h` into a single operation DAG.
///
/// Loops are replicated once per iteration. When iterations are independent
/// the copies only depend on each other through reduction accumulators;
/// otherwise each copy follows the previous one. Branches keep only the
/// outcome with the largest probability-weighted operation count.
pub fn flatten_for_scheduling(
    h: &Hcdfg,
    costs: &CostTable,
    profile: &Profile,
    cap: usize,
) -> Result<FlatDag, ProjectionError> {
    let mut f = Flattener {
        costs,
        profile,
        cap,
        dag: FlatDag::default(),
    };
    f.graph(&h.root)?;
    Ok(topological(f.dag))
}

/// Renumber so that every predecessor has a smaller index. Ties keep creation order.
fn topological(dag: FlatDag) -> FlatDag {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let n = dag.len();
    let mut succ: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    let mut preds = dag.preds;
    for (i, p) in preds.iter_mut().enumerate() {
        p.sort_unstable();
        p.dedup();
        indeg[i] = p.len();
        for &q in p.iter() {
            succ[q as usize].push(i as u32);
        }
    }
    let mut heap: BinaryHeap<Reverse<u32>> = (0..n as u32)
        .filter(|&i| indeg[i as usize] == 0)
        .map(Reverse)
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = heap.pop() {
        order.push(v);
        for &s in &succ[v as usize] {
            indeg[s as usize] -= 1;
            if indeg[s as usize] == 0 {
                heap.push(Reverse(s));
            }
        }
    }
    debug_assert_eq!(order.len(), n, "flattened graph is acyclic");
    let mut new_index = vec![0u32; n];
    for (k, &v) in order.iter().enumerate() {
        new_index[v as usize] = k as u32;
    }
    let ops = order.iter().map(|&v| dag.ops[v as usize].clone()).collect();
    let preds = order
        .iter()
        .map(|&v| {
            let mut p: Vec<u32> = preds[v as usize]
                .iter()
                .map(|&q| new_index[q as usize])
                .collect();
            p.sort_unstable();
            p
        })
        .collect();
    FlatDag {
        ops,
        preds,
        dropped_branches: dag.dropped_branches,
    }
}

impl Flattener<'_> {
    fn push(&mut self, op: FlatOp, preds: Vec<u32>) -> Result<u32, ProjectionError> {
        if self.dag.ops.len() >= self.cap {
            return Err(ProjectionError::TooLarge { cap: self.cap });
        }
        self.dag.ops.push(op);
        self.dag.preds.push(preds);
        Ok((self.dag.ops.len() - 1) as u32)
    }

    /// Make every source of `b` wait for every sink of `a`.
    fn link(&mut self, a: &Fragment, b: &Fragment) -> Result<(), ProjectionError> {
        if a.sinks.is_empty() || b.sources.is_empty() {
            return Ok(());
        }
        let from = if a.sinks.len() == 1 {
            a.sinks[0]
        } else {
            self.push(
                FlatOp {
                    kind: None,
                    cost: 0,
                },
                a.sinks.clone(),
            )?
        };
        for &s in &b.sources {
            self.dag.preds[s as usize].push(from);
        }
        Ok(())
    }

    fn seq(&mut self, parts: Vec<Fragment>) -> Result<Fragment, ProjectionError> {
        let parts: Vec<Fragment> = parts.into_iter().filter(|p| !p.is_empty()).collect();
        for w in parts.windows(2) {
            self.link(&w[0], &w[1])?;
        }
        Ok(merge(parts, true))
    }

    fn graph(&mut self, g: &GraphNode) -> Result<Fragment, ProjectionError> {
        match (g.level, g.pattern) {
            (Level::Dfg, _) => self.dfg(g),
            (_, Some(Pattern::If)) | (_, Some(Pattern::Switch)) => self.branch(g),
            (_, Some(p)) if p.is_loop() => self.looped(g, p),
            _ => {
                let kids: Vec<&GraphNode> = g.child_graphs().collect();
                let mut frags = Vec::with_capacity(kids.len());
                for k in &kids {
                    frags.push(self.graph(k)?);
                }
                for e in g.edges.iter().filter(|e| e.kind.is_data()) {
                    let a = kids.iter().position(|k| k.id == e.from);
                    let b = kids.iter().position(|k| k.id == e.to);
                    if let (Some(a), Some(b)) = (a, b) {
                        let (fa, fb) = (frags[a].clone(), frags[b].clone());
                        self.link(&fa, &fb)?;
                    }
                }
                let has_pred: BTreeSet<usize> = g
                    .edges
                    .iter()
                    .filter(|e| e.kind.is_data())
                    .filter_map(|e| kids.iter().position(|k| k.id == e.to))
                    .collect();
                let has_succ: BTreeSet<usize> = g
                    .edges
                    .iter()
                    .filter(|e| e.kind.is_data())
                    .filter_map(|e| kids.iter().position(|k| k.id == e.from))
                    .collect();
                let mut out = Fragment::default();
                for (i, f) in frags.into_iter().enumerate() {
                    if !has_pred.contains(&i) {
                        out.sources.extend(&f.sources);
                    }
                    if !has_succ.contains(&i) {
                        out.sinks.extend(&f.sinks);
                    }
                    out.writes.extend(f.writes);
                    out.reads.extend(f.reads);
                }
                Ok(out)
            }
        }
    }

    fn dfg(&mut self, g: &GraphNode) -> Result<Fragment, ProjectionError> {
        let base = self.dag.ops.len() as u32;
        let mut elems: Vec<&ElementaryNode> = g.elements().collect();
        elems.sort_by_key(|e| e.id);
        let pos = |id: NodeId| elems.iter().position(|e| e.id == id);
        let mut preds: Vec<Vec<u32>> = vec![Vec::new(); elems.len()];
        let mut has_succ = vec![false; elems.len()];
        for e in &g.edges {
            if let (Some(a), Some(b)) = (pos(e.from), pos(e.to)) {
                preds[b].push(base + a as u32);
                has_succ[a] = true;
            }
        }
        let mut out = Fragment::default();
        for (i, e) in elems.iter().enumerate() {
            let idx = self.push(
                FlatOp {
                    kind: ResourceKind::of(e),
                    cost: self.costs.node_cost(e),
                },
                std::mem::take(&mut preds[i]),
            )?;
            if self.dag.preds[idx as usize].is_empty() {
                out.sources.push(idx);
            }
            if !has_succ[i] {
                out.sinks.push(idx);
            }
            if let ElementaryKind::Memory {
                mode,
                datum,
                subscript,
                ..
            } = &e.kind
            {
                if subscript.is_empty() {
                    match mode {
                        AccessMode::Read => out.reads.push((datum.clone(), idx)),
                        AccessMode::Write => out.writes.push((datum.clone(), idx)),
                    }
                }
            }
        }
        Ok(out)
    }

    fn branch(&mut self, g: &GraphNode) -> Result<Fragment, ProjectionError> {
        let entry = self.profile.lookup(g);
        let outcomes: Vec<(f64, Option<&GraphNode>)> = match g.pattern {
            Some(Pattern::If) => {
                let p = entry.and_then(|e| e.p_true).unwrap_or(0.5);
                vec![(p, g.role(Role::True)), (1.0 - p, g.role(Role::False))]
            }
            _ => {
                let info = g.switch_info.as_ref();
                let n = info.map_or(0, |s| s.labels.len());
                let has_default = info.is_some_and(|s| s.has_default);
                let m = n + usize::from(has_default);
                let probs = entry
                    .and_then(|e| e.cases.clone())
                    .filter(|p| p.len() == m)
                    .unwrap_or_else(|| vec![1.0 / m.max(1) as f64; m]);
                let mut v: Vec<_> = (0..n).map(|k| (probs[k], g.role(Role::Case(k)))).collect();
                if has_default {
                    v.push((probs[n], g.role(Role::Default)));
                }
                v
            }
        };
        let weight = |o: &(f64, Option<&GraphNode>)| o.1.map_or(0.0, |b| o.0 * subtree_nop(b));
        let mut best = 0;
        for i in 1..outcomes.len() {
            if weight(&outcomes[i]) > weight(&outcomes[best]) {
                best = i;
            }
        }
        if outcomes
            .iter()
            .enumerate()
            .any(|(i, o)| i != best && o.1.is_some_and(|b| subtree_nop(b) > 0.0))
        {
            self.dag.dropped_branches = true;
        }
        let cond = match g.role(Role::Condition) {
            Some(c) => self.graph(c)?,
            None => Fragment::default(),
        };
        let taken = match outcomes.get(best).and_then(|o| o.1) {
            Some(b) => self.graph(b)?,
            None => Fragment::default(),
        };
        self.seq(vec![cond, taken])
    }

    fn looped(&mut self, g: &GraphNode, p: Pattern) -> Result<Fragment, ProjectionError> {
        let trips = self
            .profile
            .lookup(g)
            .and_then(|e| e.trips)
            .or_else(|| g.loop_info.as_ref().and_then(|l| l.trips.known()))
            .ok_or_else(|| {
                ProjectionError::Metrics(MetricsError::MissingTrips {
                    path: g.path_key(),
                    span: g.span.clone(),
                })
            })?;
        let trips = if p == Pattern::DoWhile {
            trips.max(1)
        } else {
            trips
        };
        let analysis = unroll_analysis(g, trips);
        let independent = analysis.factor == trips.max(1) && trips > 1;

        let part = |this: &mut Self, r: Role| -> Result<Fragment, ProjectionError> {
            match g.role(r) {
                Some(c) => this.graph(c),
                None => Ok(Fragment::default()),
            }
        };
        let init = part(self, Role::Init)?;
        let mut copies = Vec::with_capacity(trips as usize);
        for _ in 0..trips {
            let it = match p {
                Pattern::DoWhile => {
                    let b = part(self, Role::Body)?;
                    let c = part(self, Role::Condition)?;
                    self.seq(vec![b, c])?
                }
                _ => {
                    let c = part(self, Role::Condition)?;
                    let b = part(self, Role::Body)?;
                    let s = part(self, Role::Step)?;
                    self.seq(vec![c, b, s])?
                }
            };
            copies.push(it);
        }
        let iterations = if independent {
            for w in 0..copies.len().saturating_sub(1) {
                for datum in &analysis.reductions {
                    let writes: Vec<u32> = copies[w]
                        .writes
                        .iter()
                        .filter(|(d, _)| d == datum)
                        .map(|(_, i)| *i)
                        .collect();
                    let reads: Vec<u32> = copies[w + 1]
                        .reads
                        .iter()
                        .filter(|(d, _)| d == datum)
                        .map(|(_, i)| *i)
                        .collect();
                    for &r in &reads {
                        self.dag.preds[r as usize].extend(&writes);
                    }
                }
            }
            merge(copies, false)
        } else {
            self.seq(copies)?
        };
        let last = if p == Pattern::DoWhile {
            Fragment::default()
        } else {
            part(self, Role::Condition)?
        };
        self.seq(vec![init, iterations, last])
    }
}

/// Combine fragments; `chained` fragments keep only the first sources and last sinks.
fn merge(parts: Vec<Fragment>, chained: bool) -> Fragment {
    let mut out = Fragment::default();
    let n = parts.len();
    for (i, f) in parts.into_iter().enumerate() {
        if !chained || i == 0 {
            out.sources.extend(&f.sources);
        }
        if !chained || i + 1 == n {
            out.sinks.extend(&f.sinks);
        }
        out.writes.extend(f.writes);
        out.reads.extend(f.reads);
    }
    out
}

fn subtree_nop(g: &GraphNode) -> f64 {
    let mut n = 0.0;
    g.walk(&mut |x| {
        if x.level == Level::Dfg {
            n += count_ops(x).nop();
        }
    });
    n
}
