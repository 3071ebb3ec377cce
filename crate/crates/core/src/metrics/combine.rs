//! Combination rules for composite graphs.

use crate::hcdfg::Edge;

use super::{MetricRecord, MetricsError, OpCounts};

const PROB_TOLERANCE: f64 = 1e-9;

/// Sequential execution: counts and critical paths add up.
pub fn combine_seq(records: &[MetricRecord]) -> MetricRecord {
    let counts = records
        .iter()
        .fold(OpCounts::default(), |acc, r| acc.add(&r.counts));
    let cp = records.iter().map(|r| r.cp).sum();
    MetricRecord::from_counts(counts, cp)
}

/// Independent siblings: counts add up, the critical path is the longest one.
pub fn combine_par(records: &[MetricRecord]) -> MetricRecord {
    let counts = records
        .iter()
        .fold(OpCounts::default(), |acc, r| acc.add(&r.counts));
    let cp = records.iter().map(|r| r.cp).fold(0.0, f64::max);
    MetricRecord::from_counts(counts, cp)
}

/// Siblings ordered by dependence edges. `edges` refer to positions in
/// `records` and must point forward. The critical path is the heaviest chain;
/// for a pure chain this is [`combine_seq`], for no edges [`combine_par`].
pub fn combine_dag(records: &[MetricRecord], edges: &[(usize, usize)]) -> MetricRecord {
    let counts = records
        .iter()
        .fold(OpCounts::default(), |acc, r| acc.add(&r.counts));
    let mut finish = vec![0.0f64; records.len()];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); records.len()];
    for &(a, b) in edges {
        debug_assert!(a < b, "sibling edges follow source order");
        preds[b].push(a);
    }
    for i in 0..records.len() {
        let start = preds[i].iter().map(|&p| finish[p]).fold(0.0, f64::max);
        finish[i] = start + records[i].cp;
    }
    let cp = finish.iter().copied().fold(0.0, f64::max);
    MetricRecord::from_counts(counts, cp)
}

/// Map graph-id edges onto positions for [`combine_dag`], keeping data edges only.
pub(crate) fn positional_edges(ids: &[u32], edges: &[Edge]) -> Vec<(usize, usize)> {
    edges
        .iter()
        .filter(|e| e.kind.is_data())
        .filter_map(|e| {
            let a = ids.iter().position(|&i| i == e.from)?;
            let b = ids.iter().position(|&i| i == e.to)?;
            Some((a.min(b), a.max(b)))
        })
        .collect()
}

fn check_probability(p: f64, what: &str) -> Result<(), MetricsError> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(MetricsError::Probability {
            path: String::new(),
            message: format!("{what} = {p} is outside [0, 1]"),
        });
    }
    Ok(())
}

/// Two-way branch. γ is the probability-weighted sum of the branch ratios
/// plus the condition's ratio; counts and critical path are expectations.
pub fn combine_if(
    cond: &MetricRecord,
    t: &MetricRecord,
    f: &MetricRecord,
    p_true: f64,
) -> Result<MetricRecord, MetricsError> {
    check_probability(p_true, "p_true")?;
    combine_branches(cond, &[(p_true, t.clone()), (1.0 - p_true, f.clone())])
}

/// Multi-way branch; `cases` pairs each outcome with its probability.
pub fn combine_switch(
    scrutinee: &MetricRecord,
    cases: &[(f64, MetricRecord)],
) -> Result<MetricRecord, MetricsError> {
    for (p, _) in cases {
        check_probability(*p, "case probability")?;
    }
    let total: f64 = cases.iter().map(|(p, _)| p).sum();
    if (total - 1.0).abs() > PROB_TOLERANCE {
        return Err(MetricsError::Probability {
            path: String::new(),
            message: format!("case probabilities sum to {total}, expected 1"),
        });
    }
    combine_branches(scrutinee, cases)
}

fn combine_branches(
    cond: &MetricRecord,
    branches: &[(f64, MetricRecord)],
) -> Result<MetricRecord, MetricsError> {
    let mut counts = cond.counts;
    let mut cp = cond.cp;
    let mut gamma = cond.ratio();
    for (p, r) in branches {
        counts = counts.add(&r.counts.scale(*p));
        cp += p * r.cp;
        gamma += p * r.ratio();
    }
    let mut rec = MetricRecord::from_counts(counts, cp);
    rec.gamma = gamma;
    Ok(rec)
}

/// Counted loop: `init`, then `trips` rounds of (cond, body, step), then the
/// final failing condition.
pub fn combine_for(
    init: &MetricRecord,
    cond: &MetricRecord,
    body: &MetricRecord,
    step: &MetricRecord,
    trips: u64,
) -> MetricRecord {
    let n = trips as f64;
    let iteration = combine_seq(&[cond.clone(), body.clone(), step.clone()]);
    let counts = init
        .counts
        .add(&iteration.counts.scale(n))
        .add(&cond.counts);
    let cp = init.cp + n * iteration.cp + cond.cp;
    MetricRecord::from_counts(counts, cp)
}

/// `while` loop: a counted loop with empty init and step.
pub fn combine_while(cond: &MetricRecord, body: &MetricRecord, trips: u64) -> MetricRecord {
    let empty = MetricRecord::empty();
    combine_for(&empty, cond, body, &empty, trips)
}

/// `do … while` loop: `trips` rounds of (body, cond). The body always runs
/// at least once, so a trip count of 0 is treated as 1.
pub fn combine_do_while(body: &MetricRecord, cond: &MetricRecord, trips: u64) -> MetricRecord {
    let n = trips.max(1) as f64;
    let iteration = combine_seq(&[body.clone(), cond.clone()]);
    MetricRecord::from_counts(iteration.counts.scale(n), iteration.cp * n)
}
