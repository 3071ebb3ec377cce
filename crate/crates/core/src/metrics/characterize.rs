use serde::{Deserialize, Serialize};

use crate::hcdfg::{GraphNode, Hcdfg, Level, NodeId, Pattern, Role};

use super::combine::positional_edges;
use super::unroll::analyze_loop;
use super::{
    combine_dag, combine_do_while, combine_for, combine_if, combine_switch, combine_while,
    count_ops, critical_path, CostTable, MetricRecord, MetricsError, Profile,
};

/// One record per graph of a function, in pre-order (root first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationTree {
    pub function: String,
    pub records: Vec<MetricRecord>,
}

impl CharacterizationTree {
    pub fn root(&self) -> &MetricRecord {
        &self.records[0]
    }

    pub fn get(&self, id: NodeId) -> Option<&MetricRecord> {
        self.records.iter().find(|r| r.graph_id == id)
    }

    /// Records at a given nesting depth below the root (the root is depth 0).
    pub fn at_depth(&self, depth: usize) -> impl Iterator<Item = &MetricRecord> {
        self.records
            .iter()
            .filter(move |r| r.path.matches('/').count() == depth)
    }
}

/// Bottom-up metrics for every graph of `h`.
pub fn characterize(
    h: &Hcdfg,
    costs: &CostTable,
    profile: &Profile,
) -> Result<CharacterizationTree, MetricsError> {
    let mut records = Vec::new();
    visit(&h.root, &h.root.label, costs, profile, &mut records)?;
    // Post-order collection, presented root first with children in source order.
    let mut ordered = Vec::with_capacity(records.len());
    let mut index: std::collections::BTreeMap<NodeId, MetricRecord> =
        records.into_iter().map(|r| (r.graph_id, r)).collect();
    h.root.walk(&mut |g| {
        if let Some(r) = index.remove(&g.id) {
            ordered.push(r);
        }
    });
    Ok(CharacterizationTree {
        function: h.function.clone(),
        records: ordered,
    })
}

fn visit(
    g: &GraphNode,
    path: &str,
    costs: &CostTable,
    profile: &Profile,
    out: &mut Vec<MetricRecord>,
) -> Result<MetricRecord, MetricsError> {
    let mut kids = Vec::new();
    for c in g.child_graphs() {
        let segment = match g.roles.iter().find(|(_, id)| *id == c.id) {
            Some((r, _)) => format!("{}[{r}]", c.label),
            None => c.label.clone(),
        };
        let child_path = format!("{path}/{segment}");
        kids.push((c.id, visit(c, &child_path, costs, profile, out)?));
    }
    let role = |r: Role| -> MetricRecord {
        g.roles
            .iter()
            .find(|(x, _)| *x == r)
            .and_then(|(_, id)| kids.iter().find(|(k, _)| k == id))
            .map(|(_, rec)| rec.clone())
            .unwrap_or_else(MetricRecord::empty)
    };
    let entry = profile.lookup(g);
    let prob_err = |e: MetricsError| match e {
        MetricsError::Probability { message, .. } => MetricsError::Probability {
            path: g.path_key(),
            message,
        },
        other => other,
    };

    let mut trips = None;
    let mut rec = match (g.level, g.pattern) {
        (Level::Dfg, _) => MetricRecord::from_counts(count_ops(g), critical_path(g, costs)?),
        (_, Some(Pattern::If)) => {
            let p = entry.and_then(|e| e.p_true).unwrap_or(0.5);
            combine_if(
                &role(Role::Condition),
                &role(Role::True),
                &role(Role::False),
                p,
            )
            .map_err(prob_err)?
        }
        (_, Some(Pattern::Switch)) => {
            let info = g.switch_info.as_ref();
            let n_cases = info.map_or(0, |s| s.labels.len());
            let has_default = info.is_some_and(|s| s.has_default);
            let outcomes = n_cases + usize::from(has_default);
            let probs: Vec<f64> = match entry.and_then(|e| e.cases.clone()) {
                Some(p) if p.len() == outcomes => p,
                Some(p) => {
                    return Err(MetricsError::Probability {
                        path: g.path_key(),
                        message: format!("expected {outcomes} case probabilities, got {}", p.len()),
                    })
                }
                None if outcomes == 0 => Vec::new(),
                None => vec![1.0 / outcomes as f64; outcomes],
            };
            let mut cases: Vec<(f64, MetricRecord)> = (0..n_cases)
                .map(|k| (probs[k], role(Role::Case(k))))
                .collect();
            cases.push((
                if has_default { probs[n_cases] } else { 0.0 },
                role(Role::Default),
            ));
            if outcomes == 0 {
                cases[0].0 = 1.0;
            }
            combine_switch(&role(Role::Condition), &cases).map_err(prob_err)?
        }
        (_, Some(p)) => {
            let n = entry
                .and_then(|e| e.trips)
                .or_else(|| g.loop_info.as_ref().and_then(|l| l.trips.known()))
                .ok_or_else(|| MetricsError::MissingTrips {
                    path: g.path_key(),
                    span: g.span.clone(),
                })?;
            trips = Some(n);
            match p {
                Pattern::For => combine_for(
                    &role(Role::Init),
                    &role(Role::Condition),
                    &role(Role::Body),
                    &role(Role::Step),
                    n,
                ),
                Pattern::While => combine_while(&role(Role::Condition), &role(Role::Body), n),
                _ => combine_do_while(&role(Role::Body), &role(Role::Condition), n),
            }
        }
        (_, None) => {
            let ids: Vec<NodeId> = kids.iter().map(|(id, _)| *id).collect();
            let recs: Vec<MetricRecord> = kids.iter().map(|(_, r)| r.clone()).collect();
            combine_dag(&recs, &positional_edges(&ids, &g.edges))
        }
    };
    rec.graph_id = g.id;
    rec.path = path.to_string();
    rec.level = g.level;
    rec.pattern = g.pattern;
    if let Some(n) = trips {
        rec.trips = Some(n);
        rec.max_unroll = Some(analyze_loop(g, n).factor);
    }
    out.push(rec.clone());
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;
    use crate::hcdfg::{add_multidim_edges, build_hcdfg};

    fn tree(src: &str, f: &str, profile: &Profile) -> Result<CharacterizationTree, MetricsError> {
        let h = add_multidim_edges(build_hcdfg(&parse_source("t.c", src).unwrap(), f).unwrap());
        characterize(&h, &CostTable::default(), profile)
    }

    #[test]
    fn single_dfg_function() {
        let t = tree(
            "int f(int a, int b) { return a * b + a; }",
            "f",
            &Profile::default(),
        )
        .unwrap();
        assert_eq!(t.records.len(), 2);
        let (root, dfg) = (&t.records[0], &t.records[1]);
        assert_eq!(root.gamma, dfg.gamma);
        assert_eq!(root.mom, dfg.mom);
        assert_eq!(root.cp, dfg.cp);
    }

    #[test]
    fn five_independent_blocks() {
        let src = "void f(int x1, int x2, int x3, int x4, int x5,
                          int y1, int y2, int y3, int y4, int y5) {
            { y1 = x1 + 1; } { y2 = x2 + 1; } { y3 = x3 + 1; } { y4 = x4 + 1; } { y5 = x5 + 1; } }";
        let t = tree(src, "f", &Profile::default()).unwrap();
        assert!((t.root().gamma - 5.0).abs() < 1e-9);
        assert!(t.at_depth(1).all(|r| (r.gamma - 1.0).abs() < 1e-9));
    }

    #[test]
    fn unknown_trips_need_profile() {
        let src =
            "void f(int a[8], int n) { int i; i = 0; while (i < n) { a[i] = 0; i = i + 1; } }";
        let err = tree(src, "f", &Profile::default()).unwrap_err();
        let MetricsError::MissingTrips { path, .. } = &err else {
            panic!("{err:?}");
        };
        let mut p = Profile::default();
        p.insert(
            path.clone(),
            crate::metrics::ProfileEntry {
                trips: Some(8),
                ..Default::default()
            },
        );
        let t = tree(src, "f", &p).unwrap();
        let lp = t.records.iter().find(|r| r.trips.is_some()).unwrap();
        assert_eq!(lp.trips, Some(8));
        assert_eq!(lp.max_unroll, Some(1));
    }

    #[test]
    fn static_loop_record() {
        let src = "int f(int a[16]) { int i; int s; s = 0; for (i = 0; i < 16; i++) s = s + a[i]; return s; }";
        let t = tree(src, "f", &Profile::default()).unwrap();
        let lp = t
            .records
            .iter()
            .find(|r| r.pattern == Some(Pattern::For))
            .unwrap();
        assert_eq!((lp.trips, lp.max_unroll), (Some(16), Some(16)));
        assert_eq!(lp.com, 0.0);
    }

    #[test]
    fn if_profile_changes_weights() {
        let src = "void f(int a, int b) { if (a > 0) { b = a * 2 + a * 3; } else { b = 0; } }";
        let base = tree(src, "f", &Profile::default()).unwrap();
        let key = format!(
            "f/{}",
            base.records
                .iter()
                .find(|r| r.pattern == Some(Pattern::If))
                .unwrap()
                .path
                .rsplit('/')
                .next()
                .unwrap()
        );
        let mut p = Profile::default();
        p.insert(
            key,
            crate::metrics::ProfileEntry {
                p_true: Some(0.5),
                ..Default::default()
            },
        );
        assert_eq!(tree(src, "f", &p).unwrap(), base);
        p.entries.values_mut().for_each(|e| e.p_true = Some(1.0));
        assert_ne!(tree(src, "f", &p).unwrap(), base);
    }
}
