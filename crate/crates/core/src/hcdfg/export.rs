//! DOT rendering and a flat JSON document that round-trips.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::frontend::{BinaryOp, ElemType, SourceSpan, UnaryOp};

use super::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    Json,
}

impl FromStr for GraphFormat {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dot" => Ok(GraphFormat::Dot),
            "json" => Ok(GraphFormat::Json),
            other => Err(GraphError::UnsupportedFormat(other.to_string())),
        }
    }
}

pub fn export_graph(h: &Hcdfg, format: GraphFormat) -> Vec<u8> {
    match format {
        GraphFormat::Dot => to_dot(h).into_bytes(),
        GraphFormat::Json => {
            let doc = flatten(h);
            let mut out = serde_json::to_vec_pretty(&doc).expect("graph documents serialize");
            out.push(b'\n');
            out
        }
    }
}

/// Read back a JSON document produced by [`export_graph`].
pub fn import_graph(bytes: &[u8]) -> Result<Hcdfg, GraphError> {
    let doc: GraphDocument =
        serde_json::from_slice(bytes).map_err(|e| GraphError::Malformed(e.to_string()))?;
    unflatten(doc)
}

// ---- DOT ----

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn elem_label(e: &ElementaryNode) -> (String, &'static str) {
    match &e.kind {
        ElementaryKind::Processing { op } => (op.token().to_string(), "ellipse"),
        ElementaryKind::Conditional { op, .. } => (op.token().to_string(), "diamond"),
        ElementaryKind::Memory {
            mode, datum, class, ..
        } => {
            let m = match mode {
                AccessMode::Read => "rd",
                AccessMode::Write => "wr",
            };
            (format!("{m} {datum} ({class})"), "box")
        }
    }
}

fn edge_style(kind: EdgeKind) -> &'static str {
    match kind {
        EdgeKind::Control => "dashed",
        EdgeKind::ScalarData => "solid",
        EdgeKind::Multidim => "bold",
    }
}

fn to_dot(h: &Hcdfg) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(&h.function)).unwrap();
    out.push_str("  compound=true;\n  node [fontsize=10];\n");
    dot_body(&mut out, &h.root, 1);
    out.push_str("}\n");
    out
}

fn dot_body(out: &mut String, g: &GraphNode, depth: usize) {
    let pad = "  ".repeat(depth);
    for c in &g.children {
        match c {
            Child::Elem(e) => {
                let (label, shape) = elem_label(e);
                writeln!(
                    out,
                    "{pad}n{} [label={}, shape={shape}];",
                    e.id,
                    quote(&label)
                )
                .unwrap();
            }
            Child::Graph(child) => {
                let level = match child.level {
                    Level::Dfg => "DFG",
                    Level::Cdfg => "CDFG",
                    Level::Hcdfg => "HCDFG",
                };
                let role = g
                    .roles
                    .iter()
                    .find(|(_, id)| *id == child.id)
                    .map(|(r, _)| format!("{r}: "))
                    .unwrap_or_default();
                writeln!(out, "{pad}subgraph cluster_{} {{", child.id).unwrap();
                writeln!(
                    out,
                    "{pad}  label={};",
                    quote(&format!("{role}{} [{level}]", child.label))
                )
                .unwrap();
                writeln!(out, "{pad}  g{} [shape=point, style=invis];", child.id).unwrap();
                dot_body(out, child, depth + 1);
                writeln!(out, "{pad}}}").unwrap();
            }
        }
    }
    for e in &g.edges {
        let style = edge_style(e.kind);
        let is_graph = |id: NodeId| g.child_graphs().any(|c| c.id == id);
        if is_graph(e.from) {
            writeln!(
                out,
                "{pad}g{} -> g{} [ltail=cluster_{}, lhead=cluster_{}, style={style}];",
                e.from, e.to, e.from, e.to
            )
            .unwrap();
        } else {
            writeln!(out, "{pad}n{} -> n{} [style={style}];", e.from, e.to).unwrap();
        }
    }
}

// ---- JSON ----

#[derive(Debug, Serialize, Deserialize)]
struct GraphDocument {
    function: String,
    loop_bounds: BTreeMap<NodeId, TripCount>,
    nodes: Vec<FlatNode>,
    edges: Vec<FlatEdge>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FlatEdge {
    /// Graph whose edge list holds this edge.
    owner: NodeId,
    from: NodeId,
    to: NodeId,
    kind: EdgeKind,
}

#[derive(Debug, Serialize, Deserialize)]
struct FlatNode {
    id: NodeId,
    #[serde(skip_serializing_if = "Option::is_none")]
    parent: Option<NodeId>,
    /// `dfg`, `cdfg`, `hcdfg`, `processing`, `memory` or `conditional`.
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pattern: Option<Pattern>,
    #[serde(skip_serializing_if = "Option::is_none")]
    role: Option<Role>,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    function: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    operator: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    deterministic: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<AccessMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    datum: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mem_class: Option<MemoryClass>,
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<ElemType>,
    #[serde(skip_serializing_if = "Option::is_none")]
    subscript: Option<Vec<Subscript>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    effects: Option<Effects>,
    #[serde(skip_serializing_if = "Option::is_none")]
    loop_info: Option<LoopInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    switch_info: Option<SwitchInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    call: Option<CallInfo>,
    span: SourceSpan,
}

impl FlatNode {
    fn bare(id: NodeId, parent: Option<NodeId>, kind: &str, span: &SourceSpan) -> Self {
        FlatNode {
            id,
            parent,
            kind: kind.to_string(),
            pattern: None,
            role: None,
            label: None,
            function: None,
            operator: None,
            deterministic: None,
            mode: None,
            datum: None,
            mem_class: None,
            format: None,
            subscript: None,
            effects: None,
            loop_info: None,
            switch_info: None,
            call: None,
            span: span.clone(),
        }
    }
}

fn flatten(h: &Hcdfg) -> GraphDocument {
    let mut doc = GraphDocument {
        function: h.function.clone(),
        loop_bounds: h.loop_bounds.clone(),
        nodes: Vec::new(),
        edges: Vec::new(),
    };
    flatten_graph(&h.root, None, None, &mut doc);
    doc
}

fn flatten_graph(
    g: &GraphNode,
    parent: Option<NodeId>,
    role: Option<Role>,
    doc: &mut GraphDocument,
) {
    let kind = match g.level {
        Level::Dfg => "dfg",
        Level::Cdfg => "cdfg",
        Level::Hcdfg => "hcdfg",
    };
    let mut n = FlatNode::bare(g.id, parent, kind, &g.span);
    n.pattern = g.pattern;
    n.role = role;
    n.label = Some(g.label.clone());
    n.function = Some(g.function.clone());
    n.effects = Some(g.effects.clone());
    n.loop_info = g.loop_info.clone();
    n.switch_info = g.switch_info.clone();
    n.call = g.call.clone();
    doc.nodes.push(n);
    for e in &g.edges {
        doc.edges.push(FlatEdge {
            owner: g.id,
            from: e.from,
            to: e.to,
            kind: e.kind,
        });
    }
    for c in &g.children {
        match c {
            Child::Graph(child) => {
                let role = g
                    .roles
                    .iter()
                    .find(|(_, id)| *id == child.id)
                    .map(|(r, _)| *r);
                flatten_graph(child, Some(g.id), role, doc);
            }
            Child::Elem(e) => {
                let mut n = FlatNode::bare(e.id, Some(g.id), "", &e.span);
                match &e.kind {
                    ElementaryKind::Processing { op } => {
                        n.kind = "processing".into();
                        n.operator = Some(op.token().to_string());
                    }
                    ElementaryKind::Conditional { op, deterministic } => {
                        n.kind = "conditional".into();
                        n.operator = Some(op.token().to_string());
                        n.deterministic = Some(*deterministic);
                    }
                    ElementaryKind::Memory {
                        mode,
                        datum,
                        class,
                        format,
                        subscript,
                    } => {
                        n.kind = "memory".into();
                        n.mode = Some(*mode);
                        n.datum = Some(datum.clone());
                        n.mem_class = Some(*class);
                        n.format = Some(*format);
                        n.subscript = Some(subscript.clone());
                    }
                }
                doc.nodes.push(n);
            }
        }
    }
}

fn operator_from_token(token: &str) -> Option<Operator> {
    Some(match token {
        "neg" => Operator::Unary(UnaryOp::Neg),
        "!" => Operator::Unary(UnaryOp::Not),
        "~" => Operator::Unary(UnaryOp::BitNot),
        t => Operator::Binary(BinaryOp::from_token(t)?),
    })
}

fn unflatten(doc: GraphDocument) -> Result<Hcdfg, GraphError> {
    let bad = |m: String| GraphError::Malformed(m);
    let mut children: HashMap<NodeId, Vec<usize>> = HashMap::new();
    let mut root = None;
    for (i, n) in doc.nodes.iter().enumerate() {
        match n.parent {
            Some(p) => children.entry(p).or_default().push(i),
            None if root.is_none() => root = Some(i),
            None => return Err(bad("more than one root".into())),
        }
    }
    let root = root.ok_or_else(|| bad("no root node".into()))?;
    let mut edges: HashMap<NodeId, Vec<Edge>> = HashMap::new();
    for e in &doc.edges {
        edges.entry(e.owner).or_default().push(Edge {
            from: e.from,
            to: e.to,
            kind: e.kind,
        });
    }

    fn build(
        i: usize,
        doc: &GraphDocument,
        children: &HashMap<NodeId, Vec<usize>>,
        edges: &mut HashMap<NodeId, Vec<Edge>>,
        depth: usize,
    ) -> Result<Child, GraphError> {
        let n = &doc.nodes[i];
        let missing = |what: &str| GraphError::Malformed(format!("node {} lacks {what}", n.id));
        if depth > 10_000 {
            return Err(GraphError::Malformed("hierarchy too deep".into()));
        }
        let elem = |kind| {
            Ok(Child::Elem(ElementaryNode {
                id: n.id,
                kind,
                span: n.span.clone(),
            }))
        };
        let level = match n.kind.as_str() {
            "dfg" => Level::Dfg,
            "cdfg" => Level::Cdfg,
            "hcdfg" => Level::Hcdfg,
            "processing" => {
                let op = n.operator.as_deref().and_then(operator_from_token);
                return elem(ElementaryKind::Processing {
                    op: op.ok_or_else(|| missing("operator"))?,
                });
            }
            "conditional" => {
                let op = n.operator.as_deref().and_then(BinaryOp::from_token);
                return elem(ElementaryKind::Conditional {
                    op: op.ok_or_else(|| missing("operator"))?,
                    deterministic: n.deterministic.unwrap_or(false),
                });
            }
            "memory" => {
                return elem(ElementaryKind::Memory {
                    mode: n.mode.ok_or_else(|| missing("mode"))?,
                    datum: n.datum.clone().ok_or_else(|| missing("datum"))?,
                    class: n.mem_class.ok_or_else(|| missing("mem_class"))?,
                    format: n.format.unwrap_or(ElemType::INT),
                    subscript: n.subscript.clone().unwrap_or_default(),
                })
            }
            other => {
                return Err(GraphError::Malformed(format!(
                    "unknown node kind `{other}`"
                )))
            }
        };
        let mut kids = Vec::new();
        let mut roles = Vec::new();
        for &c in children.get(&n.id).map(Vec::as_slice).unwrap_or(&[]) {
            if let Some(r) = doc.nodes[c].role {
                roles.push((r, doc.nodes[c].id));
            }
            kids.push(build(c, doc, children, edges, depth + 1)?);
        }
        Ok(Child::Graph(GraphNode {
            id: n.id,
            level,
            pattern: n.pattern,
            label: n.label.clone().ok_or_else(|| missing("label"))?,
            function: n.function.clone().ok_or_else(|| missing("function"))?,
            span: n.span.clone(),
            children: kids,
            edges: edges.remove(&n.id).unwrap_or_default(),
            roles,
            effects: n.effects.clone().unwrap_or_default(),
            loop_info: n.loop_info.clone(),
            switch_info: n.switch_info.clone(),
            call: n.call.clone(),
        }))
    }

    match build(root, &doc, &children, &mut edges, 0)? {
        Child::Graph(root) => Ok(Hcdfg {
            function: doc.function,
            root,
            loop_bounds: doc.loop_bounds,
        }),
        Child::Elem(_) => Err(bad("root is not a graph".into())),
    }
}
