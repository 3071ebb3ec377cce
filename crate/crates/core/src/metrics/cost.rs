use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::frontend::{BinaryOp, UnaryOp};
use crate::hcdfg::{AccessMode, ElementaryKind, ElementaryNode, Operator};

use super::MetricsError;

/// Cycle cost of every elementary node kind.
///
/// Processing nodes are priced by operator token (`neg` for unary minus).
/// Memory accesses to input/output data cost `read`/`write`; accesses to
/// function-local data cost `local`. Conditional nodes cost `test`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostTable {
    pub ops: BTreeMap<String, u32>,
    pub read: u32,
    pub write: u32,
    pub test: u32,
    pub local: u32,
}

const SPECIAL_KEYS: [&str; 4] = ["read", "write", "test", "local"];

fn operator_keys() -> Vec<&'static str> {
    let mut keys: Vec<&'static str> = BinaryOp::ALL
        .iter()
        .filter(|op| !op.is_test())
        .map(|op| op.token())
        .collect();
    keys.extend([
        Operator::Unary(UnaryOp::Neg).token(),
        UnaryOp::Not.token(),
        UnaryOp::BitNot.token(),
    ]);
    keys
}

impl Default for CostTable {
    /// One cycle per operator and per input/output access. Local data is
    /// assumed to live in registers and tests resolve alongside the
    /// operation that consumes them, so both are free.
    fn default() -> Self {
        CostTable {
            ops: operator_keys()
                .into_iter()
                .map(|k| (k.to_string(), 1))
                .collect(),
            read: 1,
            write: 1,
            test: 0,
            local: 0,
        }
    }
}

impl CostTable {
    /// Every entry set to `c` cycles, local accesses and tests included.
    pub fn uniform(c: u32) -> Self {
        let mut t = CostTable::default();
        t.ops.values_mut().for_each(|v| *v = c);
        t.read = c;
        t.write = c;
        t.test = c;
        t.local = c;
        t
    }

    /// Multiply every entry by `k`.
    pub fn scaled(&self, k: u32) -> Self {
        CostTable {
            ops: self.ops.iter().map(|(o, c)| (o.clone(), c * k)).collect(),
            read: self.read * k,
            write: self.write * k,
            test: self.test * k,
            local: self.local * k,
        }
    }

    /// Parse a TOML table of `key = cycles`. Keys not mentioned keep their default.
    pub fn from_toml(text: &str) -> Result<Self, MetricsError> {
        let table: toml::Table =
            toml::from_str(text).map_err(|e| MetricsError::Config(format!("cost table: {e}")))?;
        let mut costs = CostTable::default();
        for (key, value) in table {
            let cycles = value
                .as_integer()
                .filter(|v| (0..=i64::from(u32::MAX)).contains(v))
                .ok_or_else(|| {
                    MetricsError::Config(format!(
                        "cost table: `{key}` must be a non-negative integer, got {value}"
                    ))
                })? as u32;
            match key.as_str() {
                "read" => costs.read = cycles,
                "write" => costs.write = cycles,
                "test" => costs.test = cycles,
                "local" => costs.local = cycles,
                op => match costs.ops.get_mut(op) {
                    Some(slot) => *slot = cycles,
                    None => {
                        return Err(MetricsError::Config(format!(
                            "cost table: unknown key `{op}` (expected an operator or one of {})",
                            SPECIAL_KEYS.join(", ")
                        )))
                    }
                },
            }
        }
        Ok(costs)
    }

    pub fn op_cost(&self, op: Operator) -> u32 {
        self.ops.get(op.token()).copied().unwrap_or(1)
    }

    pub fn node_cost(&self, node: &ElementaryNode) -> u32 {
        match &node.kind {
            ElementaryKind::Processing { op } => self.op_cost(*op),
            ElementaryKind::Memory { mode, class, .. } if class.is_global() => match mode {
                AccessMode::Read => self.read,
                AccessMode::Write => self.write,
            },
            ElementaryKind::Memory { .. } => self.local,
            ElementaryKind::Conditional { .. } => self.test,
        }
    }
}
