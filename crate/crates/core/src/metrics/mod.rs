//! Parallelism, memory-orientation and control-orientation metrics.
//!
//! Leaf DFGs are measured directly; composite graphs combine their
//! children's records according to the pattern they implement.

mod characterize;
mod combine;
mod cost;
mod dfg;
mod profile;
mod unroll;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::SourceSpan;
use crate::hcdfg::{Level, NodeId, Pattern};

pub use characterize::{characterize, CharacterizationTree};
pub use combine::{
    combine_dag, combine_do_while, combine_for, combine_if, combine_par, combine_seq,
    combine_switch, combine_while,
};
pub use cost::CostTable;
pub use dfg::{count_ops, critical_path, gamma_dfg};
pub use profile::{Profile, ProfileEntry};
pub use unroll::{
    analyze_loop as unroll_analysis, loop_accesses, max_unroll_factor, Access, AccessIndex,
    UnrollAnalysis,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("{span}: trip count of `{path}` is unknown; add a `trips` entry to the profile")]
    MissingTrips { path: String, span: SourceSpan },
    #[error("invalid probability for `{path}`: {message}")]
    Probability { path: String, message: String },
    #[error("dependence cycle inside `{path}`")]
    Cycle { path: String },
    #[error("{0}")]
    Config(String),
}

/// Operation counts. Real-valued because branch probabilities weight them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OpCounts {
    pub n_proc: f64,
    /// Accesses to input/output (N1) data only.
    pub n_gmem: f64,
    pub n_test: f64,
}

impl OpCounts {
    pub fn nop(&self) -> f64 {
        self.n_proc + self.n_gmem
    }

    pub fn add(&self, o: &OpCounts) -> OpCounts {
        OpCounts {
            n_proc: self.n_proc + o.n_proc,
            n_gmem: self.n_gmem + o.n_gmem,
            n_test: self.n_test + o.n_test,
        }
    }

    pub fn scale(&self, k: f64) -> OpCounts {
        OpCounts {
            n_proc: self.n_proc * k,
            n_gmem: self.n_gmem * k,
            n_test: self.n_test * k,
        }
    }
}

pub(crate) fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub graph_id: NodeId,
    /// Labels from the function root down to this graph, joined by `/`.
    pub path: String,
    pub level: Level,
    pub pattern: Option<Pattern>,
    pub counts: OpCounts,
    pub cp: f64,
    pub gamma: f64,
    pub mom: f64,
    pub com: f64,
    /// Loops only.
    pub max_unroll: Option<u64>,
    /// Loops only: the trip count used.
    pub trips: Option<u64>,
}

impl MetricRecord {
    /// Record whose γ is Nop / CP.
    pub fn from_counts(counts: OpCounts, cp: f64) -> Self {
        let nop = counts.nop();
        MetricRecord {
            graph_id: 0,
            path: String::new(),
            level: Level::Dfg,
            pattern: None,
            counts,
            cp,
            gamma: ratio(nop, cp),
            mom: ratio(counts.n_gmem, nop),
            com: ratio(counts.n_test, nop),
            max_unroll: None,
            trips: None,
        }
    }

    /// Shorthand for tests and table-driven inputs: `nop` processing operations, no memory or tests.
    pub fn with_nop(nop: f64, cp: f64) -> Self {
        Self::from_counts(
            OpCounts {
                n_proc: nop,
                ..OpCounts::default()
            },
            cp,
        )
    }

    pub fn empty() -> Self {
        Self::from_counts(OpCounts::default(), 0.0)
    }

    pub fn nop(&self) -> f64 {
        self.counts.nop()
    }

    /// Nop / CP, independent of how `gamma` was combined.
    pub fn ratio(&self) -> f64 {
        ratio(self.nop(), self.cp)
    }
}
