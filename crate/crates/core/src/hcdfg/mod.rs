//! Hierarchical control and data flow graph.
//!
//! A function is an HCDFG node whose children are HCDFGs, CDFGs and DFGs. A
//! CDFG is one of the fixed control patterns (if, loops, switch) and binds
//! each pattern role to a child graph. DFGs hold only elementary nodes.

mod builder;
mod classify;
mod export;
mod link;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{BinaryOp, ElemType, SourceSpan, UnaryOp};

pub use builder::{build_hcdfg, build_program};
pub use classify::classify_memory;
pub use export::{export_graph, import_graph, GraphFormat};
pub use link::add_multidim_edges;

pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("function `{0}` not found")]
    UnknownFunction(String),
    #[error("{span}: {message}")]
    Build { span: SourceSpan, message: String },
    #[error("unsupported graph format `{0}`")]
    UnsupportedFormat(String),
    #[error("malformed graph document: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MemoryClass {
    /// Function input or output: parameters, globals, returned values.
    N1,
    /// Temporary produced by a computation.
    N2,
    /// Local copy of an input that is read several times.
    N3,
    /// Accumulator updated from its own previous value inside a loop.
    N4,
}

impl MemoryClass {
    pub fn is_global(self) -> bool {
        self == MemoryClass::N1
    }
}

impl fmt::Display for MemoryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MemoryClass::N1 => "N1",
            MemoryClass::N2 => "N2",
            MemoryClass::N3 => "N3",
            MemoryClass::N4 => "N4",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AccessMode {
    Read,
    Write,
}

/// Non-test operator carried by a processing node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Operator {
    Binary(BinaryOp),
    Unary(UnaryOp),
}

impl Operator {
    /// Key used in cost tables. Unary minus is `neg` to keep it apart from subtraction.
    pub fn token(self) -> &'static str {
        match self {
            Operator::Binary(op) => op.token(),
            Operator::Unary(UnaryOp::Neg) => "neg",
            Operator::Unary(op) => op.token(),
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// One array subscript, in terms of scalar variable names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subscript {
    /// `constant + Σ coeff·var`.
    Affine {
        constant: i64,
        terms: BTreeMap<String, i64>,
    },
    /// Anything else; lists the variables it depends on.
    Opaque { vars: BTreeSet<String> },
}

impl Subscript {
    pub fn vars(&self) -> BTreeSet<&str> {
        match self {
            Subscript::Affine { terms, .. } => terms.keys().map(String::as_str).collect(),
            Subscript::Opaque { vars } => vars.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ElementaryKind {
    Processing {
        op: Operator,
    },
    Memory {
        mode: AccessMode,
        datum: String,
        class: MemoryClass,
        format: ElemType,
        /// Empty for scalars.
        subscript: Vec<Subscript>,
    },
    Conditional {
        op: BinaryOp,
        /// Test of a statically bounded loop, resolvable at compile time.
        deterministic: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementaryNode {
    pub id: NodeId,
    pub kind: ElementaryKind,
    pub span: SourceSpan,
}

impl ElementaryNode {
    pub fn memory(&self) -> Option<(AccessMode, &str, MemoryClass)> {
        match &self.kind {
            ElementaryKind::Memory {
                mode, datum, class, ..
            } => Some((*mode, datum.as_str(), *class)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    Control,
    ScalarData,
    Multidim,
}

impl EdgeKind {
    pub fn is_data(self) -> bool {
        !matches!(self, EdgeKind::Control)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    Dfg,
    Cdfg,
    Hcdfg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pattern {
    If,
    For,
    While,
    DoWhile,
    Switch,
}

impl Pattern {
    pub fn is_loop(self) -> bool {
        matches!(self, Pattern::For | Pattern::While | Pattern::DoWhile)
    }

    /// The complete role set of the pattern; switch roles depend on the case count.
    pub fn roles(self, cases: usize) -> Vec<Role> {
        match self {
            Pattern::If => vec![Role::Condition, Role::True, Role::False],
            Pattern::For => vec![Role::Init, Role::Condition, Role::Body, Role::Step],
            Pattern::While => vec![Role::Condition, Role::Body],
            Pattern::DoWhile => vec![Role::Body, Role::Condition],
            Pattern::Switch => {
                let mut r = vec![Role::Condition];
                r.extend((0..cases).map(Role::Case));
                r.push(Role::Default);
                r
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Condition,
    True,
    False,
    Body,
    Init,
    Step,
    Case(usize),
    Default,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Condition => f.write_str("condition"),
            Role::True => f.write_str("true"),
            Role::False => f.write_str("false"),
            Role::Body => f.write_str("body"),
            Role::Init => f.write_str("init"),
            Role::Step => f.write_str("step"),
            Role::Case(k) => write!(f, "case{k}"),
            Role::Default => f.write_str("default"),
        }
    }
}

/// Data names a graph reads and writes, in the enclosing function's namespace.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Effects {
    pub reads: BTreeSet<String>,
    pub writes: BTreeSet<String>,
}

impl Effects {
    pub fn merge(&mut self, other: &Effects) {
        self.reads.extend(other.reads.iter().cloned());
        self.writes.extend(other.writes.iter().cloned());
    }

    /// True when `self` produces something `later` consumes.
    pub fn feeds(&self, later: &Effects) -> bool {
        self.writes.iter().any(|w| later.reads.contains(w))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Induction {
    pub var: String,
    pub init: i64,
    pub step: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TripCount {
    Static(u64),
    Unknown,
}

impl TripCount {
    pub fn known(self) -> Option<u64> {
        match self {
            TripCount::Static(n) => Some(n),
            TripCount::Unknown => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopInfo {
    pub induction: Option<Induction>,
    pub trips: TripCount,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchInfo {
    pub labels: Vec<Vec<i64>>,
    pub has_default: bool,
}

/// An embedded call: parameter names of the callee bound to data of the caller.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallInfo {
    pub callee: String,
    pub bindings: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
// Element slots are oversized, which is fine at function scale and keeps matching simple.
#[allow(clippy::large_enum_variant)]
pub enum Child {
    Graph(GraphNode),
    Elem(ElementaryNode),
}

impl Child {
    pub fn id(&self) -> NodeId {
        match self {
            Child::Graph(g) => g.id,
            Child::Elem(e) => e.id,
        }
    }

    pub fn as_graph(&self) -> Option<&GraphNode> {
        match self {
            Child::Graph(g) => Some(g),
            Child::Elem(_) => None,
        }
    }

    pub fn as_elem(&self) -> Option<&ElementaryNode> {
        match self {
            Child::Elem(e) => Some(e),
            Child::Graph(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: NodeId,
    pub level: Level,
    pub pattern: Option<Pattern>,
    /// `dfg@L`, `block@L`, `if@L`, `loop@L`, `switch@L`, `call:g@L`, or the function name for roots.
    pub label: String,
    /// Function whose source this graph came from (differs from the root for embedded calls).
    pub function: String,
    pub span: SourceSpan,
    pub children: Vec<Child>,
    pub edges: Vec<Edge>,
    pub roles: Vec<(Role, NodeId)>,
    pub effects: Effects,
    pub loop_info: Option<LoopInfo>,
    pub switch_info: Option<SwitchInfo>,
    pub call: Option<CallInfo>,
}

impl GraphNode {
    pub fn is_loop(&self) -> bool {
        self.pattern.is_some_and(Pattern::is_loop)
    }

    pub fn child_graphs(&self) -> impl Iterator<Item = &GraphNode> {
        self.children.iter().filter_map(Child::as_graph)
    }

    pub fn elements(&self) -> impl Iterator<Item = &ElementaryNode> {
        self.children.iter().filter_map(Child::as_elem)
    }

    pub fn role(&self, role: Role) -> Option<&GraphNode> {
        let id = self.roles.iter().find(|(r, _)| *r == role)?.1;
        self.child_graphs().find(|g| g.id == id)
    }

    /// Profile key of this graph: `function/label`.
    pub fn path_key(&self) -> String {
        format!("{}/{}", self.function, self.label)
    }

    /// Pre-order visit of this graph and every descendant graph.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a GraphNode)) {
        f(self);
        for c in self.child_graphs() {
            c.walk(f);
        }
    }

    pub fn walk_mut(&mut self, f: &mut dyn FnMut(&mut GraphNode)) {
        f(self);
        for c in &mut self.children {
            if let Child::Graph(g) = c {
                g.walk_mut(f);
            }
        }
    }

    /// Every elementary node in this subtree, in pre-order.
    pub fn all_elements(&self) -> Vec<&ElementaryNode> {
        let mut out = Vec::new();
        self.walk(&mut |g| out.extend(g.elements()));
        out
    }

    pub fn find(&self, id: NodeId) -> Option<&GraphNode> {
        let mut found = None;
        self.walk(&mut |g| {
            if g.id == id {
                found = Some(g);
            }
        });
        found
    }

    pub fn is_empty_dfg(&self) -> bool {
        self.level == Level::Dfg && self.children.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hcdfg {
    pub function: String,
    pub root: GraphNode,
    /// Trip status of every loop CDFG, keyed by graph id.
    pub loop_bounds: BTreeMap<NodeId, TripCount>,
}

impl Hcdfg {
    pub fn graph_count(&self) -> usize {
        let mut n = 0;
        self.root.walk(&mut |_| n += 1);
        n
    }
}
