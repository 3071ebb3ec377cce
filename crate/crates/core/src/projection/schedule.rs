use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use super::flatten::{FlatDag, ResourceKind};

/// Units of each resource kind, indexed by [`ResourceKind::index`].
pub type Resources = [u32; 3];

/// Start cycle of every operation plus peak per-kind usage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub start: Vec<u64>,
    pub usage: Resources,
}

/// Latest start of every operation that still meets `budget`.
pub fn alap_starts(dag: &FlatDag, budget: u64) -> Vec<i64> {
    // Longest path from each operation to the end, the operation included.
    let mut tail = vec![0u64; dag.len()];
    for i in (0..dag.len()).rev() {
        tail[i] += u64::from(dag.ops[i].cost);
        let t = tail[i];
        for &p in &dag.preds[i] {
            tail[p as usize] = tail[p as usize].max(t);
        }
    }
    tail.iter().map(|&t| budget as i64 - t as i64).collect()
}

/// List scheduling under fixed resource limits. Ready operations of each
/// kind start in order of latest start, then index. Operations without cost
/// or without a shared resource start as soon as they are ready. Returns
/// `Err(kind)` for the resource of the first operation that misses its
/// latest start.
pub fn list_schedule(
    dag: &FlatDag,
    alap: &[i64],
    limits: Resources,
) -> Result<Schedule, ResourceKind> {
    let n = dag.len();
    let mut succ: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut remaining: Vec<usize> = vec![0; n];
    for (i, ps) in dag.preds.iter().enumerate() {
        remaining[i] = ps.len();
        for &p in ps {
            succ[p as usize].push(i as u32);
        }
    }
    let constrained = |v: u32| {
        let op = &dag.ops[v as usize];
        op.kind.filter(|_| op.cost > 0)
    };
    let mut earliest = vec![0u64; n];
    let mut start = vec![0u64; n];
    // (earliest start, id) of operations whose predecessors have all started.
    let mut waiting: BinaryHeap<Reverse<(u64, u32)>> = (0..n as u32)
        .filter(|&i| remaining[i as usize] == 0)
        .map(|i| Reverse((0, i)))
        .collect();
    let mut ready: [BTreeSet<(i64, u32)>; 3] = Default::default();
    let mut running: BinaryHeap<Reverse<(u64, u32)>> = BinaryHeap::new();
    let mut busy: Resources = [0; 3];
    let mut usage: Resources = [0; 3];
    let mut done = 0usize;
    let mut t = 0u64;

    let release = |v: u32,
                   finish: u64,
                   remaining: &mut Vec<usize>,
                   earliest: &mut Vec<u64>,
                   waiting: &mut BinaryHeap<Reverse<(u64, u32)>>| {
        for &s in &succ[v as usize] {
            let s = s as usize;
            earliest[s] = earliest[s].max(finish);
            remaining[s] -= 1;
            if remaining[s] == 0 {
                waiting.push(Reverse((earliest[s], s as u32)));
            }
        }
    };

    while done < n {
        while let Some(&Reverse((f, v))) = running.peek() {
            if f > t {
                break;
            }
            running.pop();
            if let Some(k) = constrained(v) {
                busy[k.index()] -= 1;
            }
            release(v, f, &mut remaining, &mut earliest, &mut waiting);
        }
        while let Some(&Reverse((e, v))) = waiting.peek() {
            if e > t {
                break;
            }
            waiting.pop();
            match constrained(v) {
                Some(k) => {
                    ready[k.index()].insert((alap[v as usize], v));
                }
                None => {
                    start[v as usize] = t;
                    done += 1;
                    let finish = t + u64::from(dag.ops[v as usize].cost);
                    if finish == t {
                        release(v, t, &mut remaining, &mut earliest, &mut waiting);
                    } else {
                        running.push(Reverse((finish, v)));
                    }
                }
            }
        }
        for k in ResourceKind::ALL {
            let q = &mut ready[k.index()];
            while busy[k.index()] < limits[k.index()] {
                let Some((late, v)) = q.pop_first() else {
                    break;
                };
                if late < t as i64 {
                    return Err(k);
                }
                busy[k.index()] += 1;
                usage[k.index()] = usage[k.index()].max(busy[k.index()]);
                start[v as usize] = t;
                running.push(Reverse((t + u64::from(dag.ops[v as usize].cost), v)));
                done += 1;
            }
            if q.first().is_some_and(|&(late, _)| late <= t as i64) {
                return Err(k);
            }
        }
        if done == n {
            break;
        }
        let next_finish = running.peek().map(|r| r.0 .0);
        let next_wait = waiting.peek().map(|r| r.0 .0);
        t = match (next_finish, next_wait) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => unreachable!("operations left but nothing running or waiting"),
        };
    }
    Ok(Schedule { start, usage })
}

/// Schedule within `budget` with as few units as the list scheduler
/// manages. Limits start at the per-kind work lower bound and grow
/// geometrically on the kind that missed a deadline until a schedule fits;
/// each kind is then shrunk back by bisection with the others held.
/// `None` when the budget is below the critical path.
pub fn schedule_min_resources(dag: &FlatDag, budget: u64) -> Option<Schedule> {
    if budget < dag.critical_path() {
        return None;
    }
    let alap = alap_starts(dag, budget);
    let work = dag.work();
    let mut floor: Resources = [0; 3];
    for k in ResourceKind::ALL {
        let w = work[k.index()];
        if w > 0 {
            floor[k.index()] = w.div_ceil(budget.max(1)).max(1) as u32;
        }
    }
    let mut limits = floor;
    let mut best = loop {
        match list_schedule(dag, &alap, limits) {
            Ok(s) => break s,
            Err(k) => limits[k.index()] += (limits[k.index()] / 4).max(1),
        }
    };
    for k in ResourceKind::ALL {
        let i = k.index();
        let mut hi = best.usage[i];
        let mut lo = floor[i].saturating_sub(1);
        while hi > lo + 1 {
            let mid = lo + (hi - lo) / 2;
            let mut trial = best.usage;
            trial[i] = mid;
            match list_schedule(dag, &alap, trial) {
                Ok(s) => {
                    hi = s.usage[i];
                    best = s;
                }
                Err(_) => lo = mid,
            }
        }
    }
    Some(best)
}
