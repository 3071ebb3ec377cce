//! Memory class assignment.
//!
//! Classes are decided per datum over the whole function graph (including
//! embedded callees), then stamped onto every memory node.

use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::ElemType;

use super::{Child, ElementaryKind, GraphNode, MemoryClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatumKind {
    Param,
    Global,
    /// Pseudo-datum receiving a function's return value.
    Return,
    Local,
    /// Compiler-introduced temporary (call arguments, discarded results).
    Temp,
}

#[derive(Debug, Clone)]
pub struct DatumInfo {
    pub kind: DatumKind,
    pub ty: ElemType,
    pub is_array: bool,
    pub const_value: Option<i64>,
    /// Written from its own previous value inside a loop body.
    pub accumulator: bool,
    /// Data this datum is copied from; `None` once any write computes a value.
    pub copy_sources: Option<BTreeSet<String>>,
    pub reads: usize,
}

impl DatumInfo {
    pub fn new(kind: DatumKind, ty: ElemType, is_array: bool) -> Self {
        Self {
            kind,
            ty,
            is_array,
            const_value: None,
            accumulator: false,
            copy_sources: Some(BTreeSet::new()),
            reads: 0,
        }
    }
}

/// Every datum of one function graph, keyed by its graph-wide name.
#[derive(Debug, Clone, Default)]
pub struct DataScope {
    pub data: BTreeMap<String, DatumInfo>,
}

/// Class of `datum`. Precedence is N1 > N4 > N3 > N2.
pub fn classify_memory(datum: &str, scope: &DataScope) -> MemoryClass {
    let Some(info) = scope.data.get(datum) else {
        return MemoryClass::N2;
    };
    match info.kind {
        DatumKind::Param | DatumKind::Global | DatumKind::Return => return MemoryClass::N1,
        DatumKind::Local | DatumKind::Temp => {}
    }
    if info.accumulator {
        return MemoryClass::N4;
    }
    let copies_inputs = info.copy_sources.as_ref().is_some_and(|srcs| {
        srcs.iter().all(|s| {
            scope.data.get(s).is_some_and(|i| {
                matches!(
                    i.kind,
                    DatumKind::Param | DatumKind::Global | DatumKind::Return
                )
            })
        })
    });
    if copies_inputs && info.reads > 1 {
        MemoryClass::N3
    } else {
        MemoryClass::N2
    }
}

pub(crate) fn apply_classes(root: &mut GraphNode, scope: &DataScope) {
    let classes: BTreeMap<&str, MemoryClass> = scope
        .data
        .keys()
        .map(|k| (k.as_str(), classify_memory(k, scope)))
        .collect();
    root.walk_mut(&mut |g| {
        for c in &mut g.children {
            if let Child::Elem(e) = c {
                if let ElementaryKind::Memory { datum, class, .. } = &mut e.kind {
                    *class = classes
                        .get(datum.as_str())
                        .copied()
                        .unwrap_or(MemoryClass::N2);
                }
            }
        }
    });
}
