//! Loop-carried dependence test behind the maximum unroll factor.

use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::BinaryOp;
use crate::hcdfg::{
    AccessMode, ElementaryKind, GraphNode, Level, MemoryClass, NodeId, Operator, Pattern, Role,
    Subscript,
};

/// One array subscript as a function of the iteration number `t` of the
/// analysed loop: `per_iter·t + offset + Σ symbols`, or unknown.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AccessIndex {
    Affine {
        per_iter: i64,
        offset: i64,
        /// Loop-invariant variables with their coefficients.
        symbols: BTreeMap<String, i64>,
    },
    /// Depends on data written inside the loop body or is not affine.
    Any,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Access {
    pub mode: AccessMode,
    pub datum: String,
    pub class: MemoryClass,
    /// Empty for scalars.
    pub index: Vec<AccessIndex>,
}

/// Result of the dependence test on one loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnrollAnalysis {
    pub factor: u64,
    /// Accumulators that are carried between iterations but do not block unrolling.
    pub reductions: BTreeSet<String>,
}

/// Iterations beyond this many are not enumerated; larger loops with array
/// accesses that might collide are reported as dependent.
const MAX_ENUMERATED_TRIPS: u64 = 1 << 22;

/// Largest replication of the loop body that keeps every loop-carried
/// dependence intact: `trips` when iterations are independent, 1 otherwise.
pub fn max_unroll_factor(lp: &GraphNode, trips: u64) -> u64 {
    analyze_loop(lp, trips).factor
}

/// Dependence test of one loop: the unroll factor and the accumulators
/// that are carried but do not block unrolling.
pub fn analyze_loop(lp: &GraphNode, trips: u64) -> UnrollAnalysis {
    let trips = trips.max(1);
    let blocked = UnrollAnalysis {
        factor: 1,
        reductions: BTreeSet::new(),
    };
    let Some(body) = lp.role(Role::Body) else {
        return UnrollAnalysis {
            factor: trips,
            reductions: BTreeSet::new(),
        };
    };
    let induction = lp.loop_info.as_ref().and_then(|l| l.induction.as_ref());
    if induction.is_none() && trips > 1 {
        // Without an induction variable array subscripts cannot be related
        // across iterations.
        let has_arrays = body.all_elements().iter().any(|e| {
            matches!(&e.kind, ElementaryKind::Memory { subscript, .. } if !subscript.is_empty())
        });
        if has_arrays {
            return blocked;
        }
    }

    let mut flow = FlowState::default();
    flow.visit(body, true);
    let ind_var = induction.map(|i| i.var.as_str());
    let carried: BTreeSet<String> = flow
        .exposed
        .iter()
        .filter(|s| flow.scalar_writes.contains(*s) && Some(s.as_str()) != ind_var)
        .cloned()
        .collect();

    let accesses = loop_accesses(lp);
    let arrays_dependent = accesses.iter().any(|w| {
        w.mode == AccessMode::Write
            && !w.index.is_empty()
            && accesses.iter().any(|r| {
                r.mode == AccessMode::Read && r.datum == w.datum && flow_dependent(w, r, trips)
            })
    });
    if arrays_dependent {
        return blocked;
    }
    if carried.iter().all(|s| is_reduction(body, s)) {
        UnrollAnalysis {
            factor: trips,
            reductions: carried,
        }
    } else {
        blocked
    }
}

/// Memory accesses of the loop body, with subscripts mapped onto the
/// iteration number of `lp`.
pub fn loop_accesses(lp: &GraphNode) -> Vec<Access> {
    let Some(body) = lp.role(Role::Body) else {
        return Vec::new();
    };
    let induction = lp.loop_info.as_ref().and_then(|l| l.induction.clone());
    let mut written = BTreeSet::new();
    for e in body.all_elements() {
        if let Some((AccessMode::Write, datum, _)) = e.memory() {
            written.insert(datum.to_string());
        }
    }
    body.all_elements()
        .into_iter()
        .filter_map(|e| match &e.kind {
            ElementaryKind::Memory {
                mode,
                datum,
                class,
                subscript,
                ..
            } => Some(Access {
                mode: *mode,
                datum: datum.clone(),
                class: *class,
                index: subscript
                    .iter()
                    .map(|s| map_subscript(s, induction.as_ref(), &written))
                    .collect(),
            }),
            _ => None,
        })
        .collect()
}

fn map_subscript(
    s: &Subscript,
    induction: Option<&crate::hcdfg::Induction>,
    written: &BTreeSet<String>,
) -> AccessIndex {
    let Subscript::Affine { constant, terms } = s else {
        return AccessIndex::Any;
    };
    let mut per_iter = 0i64;
    let mut offset = *constant;
    let mut symbols = BTreeMap::new();
    for (var, &coeff) in terms {
        match induction {
            Some(ind) if ind.var == *var => {
                let (Some(p), Some(o)) = (
                    coeff.checked_mul(ind.step),
                    coeff
                        .checked_mul(ind.init)
                        .and_then(|v| v.checked_add(offset)),
                ) else {
                    return AccessIndex::Any;
                };
                per_iter = p;
                offset = o;
            }
            _ if written.contains(var) => return AccessIndex::Any,
            _ => {
                symbols.insert(var.clone(), coeff);
            }
        }
    }
    AccessIndex::Affine {
        per_iter,
        offset,
        symbols,
    }
}

/// Whether an element written by `w` in some iteration is read by `r` in a later one.
fn flow_dependent(w: &Access, r: &Access, trips: u64) -> bool {
    if trips < 2 {
        return false;
    }
    if w.index.len() != r.index.len() {
        return true;
    }
    // (per_iter_w, offset_w, per_iter_r, offset_r) for every comparable dimension.
    let mut eqs = Vec::new();
    for (a, b) in w.index.iter().zip(&r.index) {
        match (a, b) {
            (
                AccessIndex::Affine {
                    per_iter: pw,
                    offset: ow,
                    symbols: sw,
                },
                AccessIndex::Affine {
                    per_iter: pr,
                    offset: or,
                    symbols: sr,
                },
            ) if sw == sr => eqs.push((*pw as i128, *ow as i128, *pr as i128, *or as i128)),
            _ => {}
        }
    }
    if eqs.is_empty() {
        return true;
    }
    if trips > MAX_ENUMERATED_TRIPS {
        return true;
    }
    let n = trips as i128;
    let holds = |tw: i128, tr: i128| {
        eqs.iter()
            .all(|&(pw, ow, pr, or)| pw * tw + ow == pr * tr + or)
    };
    let pivot = eqs.iter().find(|e| e.2 != 0).copied();
    for tw in 0..n - 1 {
        match pivot {
            Some((pw, ow, pr, or)) => {
                let num = pw * tw + ow - or;
                if num % pr == 0 {
                    let tr = num / pr;
                    if tr > tw && tr < n && holds(tw, tr) {
                        return true;
                    }
                }
            }
            None => {
                if holds(tw, tw + 1) {
                    return true;
                }
            }
        }
    }
    false
}

/// Tracks scalars read before being written in one iteration.
#[derive(Default)]
struct FlowState {
    killed: BTreeSet<String>,
    exposed: BTreeSet<String>,
    scalar_writes: BTreeSet<String>,
}

impl FlowState {
    /// `certain`: the graph runs whenever the iteration runs.
    fn visit(&mut self, g: &GraphNode, certain: bool) {
        match (g.level, g.pattern) {
            (Level::Dfg, _) => {
                let mut elems: Vec<_> = g.elements().collect();
                elems.sort_by_key(|e| e.id);
                for e in elems {
                    if let ElementaryKind::Memory {
                        mode,
                        datum,
                        subscript,
                        ..
                    } = &e.kind
                    {
                        if !subscript.is_empty() {
                            continue;
                        }
                        match mode {
                            AccessMode::Read => {
                                if !self.killed.contains(datum) {
                                    self.exposed.insert(datum.clone());
                                }
                            }
                            AccessMode::Write => {
                                self.scalar_writes.insert(datum.clone());
                                if certain {
                                    self.killed.insert(datum.clone());
                                }
                            }
                        }
                    }
                }
            }
            (_, Some(p)) => {
                for role in role_order(g, p) {
                    if let Some(child) = g.role(role) {
                        let always = matches!(role, Role::Init | Role::Condition)
                            || (p == Pattern::DoWhile && role == Role::Body);
                        self.visit(child, certain && always);
                    }
                }
            }
            _ => {
                for c in g.child_graphs() {
                    self.visit(c, certain);
                }
            }
        }
    }
}

fn role_order(g: &GraphNode, p: Pattern) -> Vec<Role> {
    let cases = g.switch_info.as_ref().map_or(0, |s| s.labels.len());
    p.roles(cases)
}

/// True when every access to `s` in the body is part of an update
/// `s = s ⊕ …` through a single associative operator (+ or *).
fn is_reduction(body: &GraphNode, s: &str) -> bool {
    let mut ok = true;
    let mut op_seen: Option<BinaryOp> = None;
    let mut any = false;
    body.walk(&mut |g| {
        if !ok || g.level != Level::Dfg {
            return;
        }
        let elems: BTreeMap<NodeId, &crate::hcdfg::ElementaryNode> =
            g.elements().map(|e| (e.id, e)).collect();
        let succ = |id: NodeId| -> Vec<NodeId> {
            g.edges
                .iter()
                .filter(|e| e.from == id)
                .map(|e| e.to)
                .collect()
        };
        let mut reached_writes = BTreeSet::new();
        for e in elems.values() {
            let Some((mode, datum, class)) = e.memory() else {
                continue;
            };
            if datum != s {
                continue;
            }
            if class != MemoryClass::N4 {
                ok = false;
                return;
            }
            if mode == AccessMode::Write {
                continue;
            }
            any = true;
            let mut cur = e.id;
            let mut chain_op: Option<BinaryOp> = None;
            loop {
                let next = succ(cur);
                if next.len() != 1 {
                    ok = false;
                    return;
                }
                let n = elems[&next[0]];
                match &n.kind {
                    ElementaryKind::Processing {
                        op: Operator::Binary(op @ (BinaryOp::Add | BinaryOp::Mul)),
                    } if chain_op.is_none_or(|c| c == *op) => {
                        chain_op = Some(*op);
                        cur = n.id;
                    }
                    ElementaryKind::Memory {
                        mode: AccessMode::Write,
                        datum,
                        subscript,
                        ..
                    } if datum == s && subscript.is_empty() && chain_op.is_some() => {
                        if !reached_writes.insert(n.id) {
                            ok = false;
                            return;
                        }
                        break;
                    }
                    _ => {
                        ok = false;
                        return;
                    }
                }
            }
            if op_seen.is_some_and(|o| Some(o) != chain_op) {
                ok = false;
                return;
            }
            op_seen = chain_op;
        }
        let writes = elems
            .values()
            .filter(|e| matches!(e.memory(), Some((AccessMode::Write, d, _)) if d == s))
            .count();
        if writes != reached_writes.len() {
            ok = false;
        }
    });
    ok && any
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;
    use crate::hcdfg::build_hcdfg;

    fn first_loop_factor(src: &str, trips: u64) -> u64 {
        let h = build_hcdfg(&parse_source("t.c", src).unwrap(), "f").unwrap();
        let mut lp = None;
        h.root.walk(&mut |g| {
            if g.is_loop() && lp.is_none() {
                lp = Some(g.clone());
            }
        });
        max_unroll_factor(&lp.unwrap(), trips)
    }

    #[test]
    fn shifted_self_read_blocks() {
        assert_eq!(
            first_loop_factor(
                "void f(int a[16]) { int i; for (i = 1; i < 16; i++) a[i] = a[i - 1] + 1; }",
                15
            ),
            1
        );
    }

    #[test]
    fn independent_iterations() {
        assert_eq!(
            first_loop_factor(
                "void f(int a[16], int b[16]) { int i; for (i = 0; i < 16; i++) a[i] = b[i] * 3; }",
                16
            ),
            16
        );
    }

    #[test]
    fn reduction_does_not_block() {
        assert_eq!(
            first_loop_factor(
                "int f(int a[16]) { int i; int s; s = 0; for (i = 0; i < 16; i++) s = s + a[i]; return s; }",
                16
            ),
            16
        );
    }

    #[test]
    fn carried_scalar_blocks() {
        assert_eq!(
            first_loop_factor(
                "void f(int a[16], int b[16]) { int i; int p; p = 0;
                   for (i = 0; i < 16; i++) { b[i] = p; p = a[i]; } }",
                16
            ),
            1
        );
    }

    #[test]
    fn write_ahead_read_later() {
        // a[i + 2] written now, read two iterations later as a[i].
        assert_eq!(
            first_loop_factor(
                "void f(int a[20], int b[16]) { int i; for (i = 0; i < 16; i++) { b[i] = a[i]; a[i + 2] = 1; } }",
                16
            ),
            1
        );
        // Reading ahead of the writes is only an anti-dependence.
        assert_eq!(
            first_loop_factor(
                "void f(int a[20], int b[16]) { int i; for (i = 0; i < 16; i++) { b[i] = a[i + 2]; a[i] = 1; } }",
                16
            ),
            16
        );
    }

    #[test]
    fn inner_loop_indices_are_wildcards() {
        assert_eq!(
            first_loop_factor(
                "void f(int m[8][8], int o[8][8]) { int r; int k;
                   for (r = 0; r < 8; r++) for (k = 0; k < 8; k++) o[r][k] = m[r][k] + 1; }",
                8
            ),
            8
        );
    }
}
