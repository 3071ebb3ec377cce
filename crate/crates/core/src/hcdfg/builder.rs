//! Depth-first construction of the graph hierarchy from a normalized function.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::frontend::{
    normalize_program, AstExpr, AstFunction, AstStmt, BinaryOp, ElemType, ExprKind, Initializer,
    Literal, Program, SourceSpan, StmtKind, SwitchCase,
};

use super::classify::{apply_classes, DataScope, DatumInfo, DatumKind};
use super::*;

/// Build the graph of every function in the program, in declaration order.
pub fn build_program(program: &Program) -> Vec<Result<Hcdfg, GraphError>> {
    let program = normalize_program(program);
    program
        .functions
        .iter()
        .map(|f| build_normalized(&program, &f.name))
        .collect()
}

/// Build the graph of one function. Calls to other functions of the program
/// embed the callee's graph as a child. Sibling dependence edges are added
/// separately by [`add_multidim_edges`].
pub fn build_hcdfg(program: &Program, function: &str) -> Result<Hcdfg, GraphError> {
    build_normalized(&normalize_program(program), function)
}

fn build_normalized(program: &Program, function: &str) -> Result<Hcdfg, GraphError> {
    let f = program
        .function(function)
        .ok_or_else(|| GraphError::UnknownFunction(function.to_string()))?;
    let mut b = Builder::new(program);
    let root = b.build_root(f);
    Ok(b.finish(f, root))
}

struct Frame {
    function: String,
    /// Prepended to local data names; empty for the analyzed function itself.
    prefix: String,
    scopes: Vec<HashMap<String, String>>,
    return_target: Option<String>,
    /// Data steering enclosing loops; never treated as accumulators.
    loop_vars: Vec<HashSet<String>>,
    loop_depth: usize,
}

struct Builder<'p> {
    program: &'p Program,
    next_id: NodeId,
    scope: DataScope,
    frames: Vec<Frame>,
}

struct ArrayWrite {
    node: NodeId,
    subscript: Vec<Subscript>,
    epochs: Vec<(String, u32)>,
}

/// Per-DFG bookkeeping for read-after-write edges.
#[derive(Default)]
struct DfgState {
    nodes: Vec<ElementaryNode>,
    edges: Vec<Edge>,
    scalar_writes: HashMap<String, NodeId>,
    array_writes: HashMap<String, Vec<ArrayWrite>>,
    epochs: HashMap<String, u32>,
}

impl DfgState {
    fn edge(&mut self, from: NodeId, to: NodeId, kind: EdgeKind) {
        let e = Edge { from, to, kind };
        if !self.edges.contains(&e) {
            self.edges.push(e);
        }
    }
}

fn is_call_stmt(s: &AstStmt) -> Option<&AstExpr> {
    match &s.kind {
        StmtKind::Expr(e) => match &e.kind {
            ExprKind::Call { .. } => Some(e),
            ExprKind::Assign { value, .. } if matches!(value.kind, ExprKind::Call { .. }) => {
                Some(value)
            }
            _ => None,
        },
        StmtKind::Return(Some(e)) if matches!(e.kind, ExprKind::Call { .. }) => Some(e),
        _ => None,
    }
}

fn is_plain(s: &AstStmt) -> bool {
    s.is_simple() && is_call_stmt(s).is_none()
}

fn reads_name(e: &AstExpr, name: &str) -> bool {
    let mut found = false;
    e.walk(&mut |x| match &x.kind {
        ExprKind::Var(n) | ExprKind::Index { name: n, .. } if n == name => found = true,
        _ => {}
    });
    found
}

fn writes_name(s: &AstStmt, name: &str) -> bool {
    let mut found = false;
    s.walk_exprs(&mut |e| {
        if let ExprKind::Assign { target, .. } = &e.kind {
            if target.lvalue_name() == Some(name) {
                found = true;
            }
        }
    });
    found
}

impl<'p> Builder<'p> {
    fn new(program: &'p Program) -> Self {
        let mut scope = DataScope::default();
        for g in &program.globals {
            let mut info = DatumInfo::new(DatumKind::Global, g.ty, g.is_array());
            info.const_value = g.constant_value();
            scope.data.insert(g.name.clone(), info);
        }
        Self {
            program,
            next_id: 0,
            scope,
            frames: Vec::new(),
        }
    }

    fn alloc(&mut self) -> NodeId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn frame(&self) -> &Frame {
        self.frames.last().expect("active frame")
    }

    fn frame_mut(&mut self) -> &mut Frame {
        self.frames.last_mut().expect("active frame")
    }

    fn resolve(&self, name: &str) -> String {
        let f = self.frame();
        for s in f.scopes.iter().rev() {
            if let Some(d) = s.get(name) {
                return d.clone();
            }
        }
        name.to_string()
    }

    fn const_of(&self, name: &str) -> Option<i64> {
        let d = self.resolve(name);
        self.scope.data.get(&d).and_then(|i| i.const_value)
    }

    fn fresh_datum(&self, base: &str) -> String {
        if !self.scope.data.contains_key(base) {
            return base.to_string();
        }
        (2..)
            .map(|k| format!("{base}#{k}"))
            .find(|n| !self.scope.data.contains_key(n))
            .expect("unbounded suffixes")
    }

    fn declare(&mut self, name: &str, info: DatumInfo) -> String {
        let base = format!("{}{}", self.frame().prefix, name);
        let datum = self.fresh_datum(&base);
        self.scope.data.insert(datum.clone(), info);
        self.frame_mut()
            .scopes
            .last_mut()
            .expect("scope")
            .insert(name.to_string(), datum.clone());
        datum
    }

    fn push_scope(&mut self) {
        self.frame_mut().scopes.push(HashMap::new());
    }

    fn pop_scope(&mut self) {
        self.frame_mut().scopes.pop();
    }

    fn graph(
        &self,
        id: NodeId,
        level: Level,
        label: String,
        span: &SourceSpan,
        children: Vec<Child>,
    ) -> GraphNode {
        GraphNode {
            id,
            level,
            pattern: None,
            label,
            function: self.frame().function.clone(),
            span: span.clone(),
            children,
            edges: Vec::new(),
            roles: Vec::new(),
            effects: Effects::default(),
            loop_info: None,
            switch_info: None,
            call: None,
        }
    }

    // ---- functions ----

    fn build_root(&mut self, f: &AstFunction) -> GraphNode {
        let mut params = HashMap::new();
        for p in &f.params {
            self.scope.data.insert(
                p.name.clone(),
                DatumInfo::new(DatumKind::Param, p.ty, p.is_array),
            );
            params.insert(p.name.clone(), p.name.clone());
        }
        let return_target = f.return_type.map(|ty| {
            let name = self.fresh_datum("return");
            self.scope
                .data
                .insert(name.clone(), DatumInfo::new(DatumKind::Return, ty, false));
            name
        });
        self.frames.push(Frame {
            function: f.name.clone(),
            prefix: String::new(),
            scopes: vec![params],
            return_target,
            loop_vars: Vec::new(),
            loop_depth: 0,
        });
        let id = self.alloc();
        let children = self.build_seq(f.body_stmts());
        let mut root = self.graph(id, Level::Hcdfg, f.name.clone(), &f.span, children);
        self.frames.pop();
        compute_effects(&mut root);
        root
    }

    fn finish(mut self, _f: &AstFunction, mut root: GraphNode) -> Hcdfg {
        // Read counts feed the N3 rule.
        let mut reads: HashMap<String, usize> = HashMap::new();
        root.walk(&mut |g| {
            for e in g.elements() {
                if let Some((AccessMode::Read, d, _)) = e.memory() {
                    *reads.entry(d.to_string()).or_default() += 1;
                }
            }
        });
        for (d, n) in reads {
            if let Some(info) = self.scope.data.get_mut(&d) {
                info.reads = n;
            }
        }
        apply_classes(&mut root, &self.scope);
        let mut loop_bounds = BTreeMap::new();
        root.walk(&mut |g| {
            if let Some(li) = &g.loop_info {
                loop_bounds.insert(g.id, li.trips);
            }
        });
        Hcdfg {
            function: root.label.clone(),
            root,
            loop_bounds,
        }
    }

    // ---- statement sequences ----

    fn build_seq(&mut self, stmts: &[AstStmt]) -> Vec<Child> {
        let mut out = Vec::new();
        let mut group: Vec<&AstStmt> = Vec::new();
        for s in stmts {
            if is_plain(s) {
                group.push(s);
                continue;
            }
            self.push_group(&mut out, &std::mem::take(&mut group));
            if let Some(call) = is_call_stmt(s) {
                for g in self.build_call(s, call) {
                    out.push(Child::Graph(g));
                }
                continue;
            }
            match &s.kind {
                StmtKind::Block(inner) => {
                    if inner.is_empty() {
                        continue;
                    }
                    self.push_scope();
                    let g = if inner.iter().all(is_plain) {
                        let refs: Vec<&AstStmt> = inner.iter().collect();
                        self.build_dfg(&refs)
                    } else {
                        let children = self.build_seq(inner);
                        let id = self.alloc();
                        let label = format!("block@{}", s.span.line);
                        self.graph(id, Level::Hcdfg, label, &s.span, children)
                    };
                    self.pop_scope();
                    out.push(Child::Graph(g));
                }
                _ => out.push(Child::Graph(self.build_control(s))),
            }
        }
        self.push_group(&mut out, &group);
        out
    }

    /// Appends the DFG of a run of plain statements, unless it lowered to
    /// nothing (declarations only).
    fn push_group(&mut self, out: &mut Vec<Child>, group: &[&AstStmt]) {
        if group.is_empty() {
            return;
        }
        let g = self.build_dfg(group);
        if g.children.is_empty() {
            // Nothing else was allocated after the graph id.
            self.next_id = g.id;
        } else {
            out.push(Child::Graph(g));
        }
    }

    /// Graph bound to a pattern role.
    fn build_role(&mut self, stmt: Option<&AstStmt>, span: &SourceSpan) -> GraphNode {
        let Some(stmt) = stmt else {
            return self.empty_dfg(span);
        };
        self.push_scope();
        let g = match &stmt.kind {
            StmtKind::Block(inner) => self.build_body(inner, &stmt.span),
            _ => self.build_body(std::slice::from_ref(stmt), &stmt.span),
        };
        self.pop_scope();
        g
    }

    fn build_body(&mut self, stmts: &[AstStmt], span: &SourceSpan) -> GraphNode {
        let mut children = self.build_seq(stmts);
        match children.len() {
            0 => self.empty_dfg(span),
            1 => match children.pop() {
                Some(Child::Graph(g)) => g,
                _ => unreachable!("sequences hold graphs only"),
            },
            _ => {
                let id = self.alloc();
                self.graph(
                    id,
                    Level::Hcdfg,
                    format!("block@{}", span.line),
                    span,
                    children,
                )
            }
        }
    }

    fn empty_dfg(&mut self, span: &SourceSpan) -> GraphNode {
        let id = self.alloc();
        self.graph(
            id,
            Level::Dfg,
            format!("dfg@{}", span.line),
            span,
            Vec::new(),
        )
    }

    // ---- DFGs ----

    fn build_dfg(&mut self, stmts: &[&AstStmt]) -> GraphNode {
        let span = stmts[0].span.clone();
        let id = self.alloc();
        let mut st = DfgState::default();
        for s in stmts {
            self.lower_stmt(&mut st, s);
        }
        let children = st.nodes.into_iter().map(Child::Elem).collect();
        let mut g = self.graph(
            id,
            Level::Dfg,
            format!("dfg@{}", span.line),
            &span,
            children,
        );
        g.edges = st.edges;
        g
    }

    fn expr_dfg(&mut self, e: &AstExpr) -> GraphNode {
        let id = self.alloc();
        let mut st = DfgState::default();
        self.lower_expr(&mut st, e);
        let children = st.nodes.into_iter().map(Child::Elem).collect();
        let mut g = self.graph(
            id,
            Level::Dfg,
            format!("dfg@{}", e.span.line),
            &e.span,
            children,
        );
        g.edges = st.edges;
        g
    }

    fn lower_stmt(&mut self, st: &mut DfgState, s: &AstStmt) {
        match &s.kind {
            StmtKind::Expr(e) => match &e.kind {
                ExprKind::Assign { target, value, .. } => {
                    let datum = self.resolve(target.lvalue_name().expect("lvalue"));
                    self.note_write(&datum, target, value);
                    self.lower_assign(st, &datum, target, value);
                }
                _ => {
                    self.lower_expr(st, e);
                }
            },
            StmtKind::Decl(d) => {
                let mut info = DatumInfo::new(DatumKind::Local, d.ty, d.is_array());
                info.const_value = d.constant_value();
                let datum = self.declare(&d.name, info);
                if let (Some(Initializer::Expr(e)), None) = (&d.init, d.constant_value()) {
                    let target = AstExpr::new(ExprKind::Var(d.name.clone()), d.span.clone());
                    self.note_write(&datum, &target, e);
                    self.lower_assign(st, &datum, &target, e);
                }
            }
            StmtKind::Return(Some(e)) => {
                let value = self.lower_expr(st, e);
                if let Some(target) = self.frame().return_target.clone() {
                    let ty = self.scope.data[&target].ty;
                    let w = self.memory(st, AccessMode::Write, &target, ty, Vec::new(), &s.span);
                    if let Some(v) = value {
                        st.edge(v, w, EdgeKind::ScalarData);
                    }
                    st.scalar_writes.insert(target.clone(), w);
                    *st.epochs.entry(target).or_default() += 1;
                }
            }
            StmtKind::Return(None) => {}
            _ => unreachable!("compound statement in a DFG"),
        }
    }

    /// Accumulator and copy tracking for memory classification.
    fn note_write(&mut self, datum: &str, target: &AstExpr, value: &AstExpr) {
        let name = target.lvalue_name().expect("lvalue");
        let frame = self.frame();
        let in_loop_body = frame.loop_depth > 0;
        let steers_loop = frame.loop_vars.iter().any(|s| s.contains(datum));
        let self_update = reads_name(value, name);
        let source = match &value.kind {
            ExprKind::Var(n) if self.const_of(n).is_none() => Some(self.resolve(n)),
            ExprKind::Index { name: n, .. } => Some(self.resolve(n)),
            _ => None,
        };
        let Some(info) = self.scope.data.get_mut(datum) else {
            return;
        };
        if in_loop_body && self_update && !steers_loop {
            info.accumulator = true;
        }
        match source {
            Some(src) if src != datum => {
                if let Some(s) = &mut info.copy_sources {
                    s.insert(src);
                }
            }
            _ => info.copy_sources = None,
        }
    }

    fn lower_assign(&mut self, st: &mut DfgState, datum: &str, target: &AstExpr, value: &AstExpr) {
        let v = self.lower_expr(st, value);
        let ty = self.scope.data.get(datum).map_or(ElemType::INT, |i| i.ty);
        match &target.kind {
            ExprKind::Var(_) => {
                let w = self.memory(st, AccessMode::Write, datum, ty, Vec::new(), &target.span);
                if let Some(v) = v {
                    st.edge(v, w, EdgeKind::ScalarData);
                }
                st.scalar_writes.insert(datum.to_string(), w);
                *st.epochs.entry(datum.to_string()).or_default() += 1;
            }
            ExprKind::Index { indices, .. } => {
                let idx: Vec<NodeId> = indices
                    .iter()
                    .filter_map(|i| self.lower_expr(st, i))
                    .collect();
                let subscript: Vec<Subscript> = indices.iter().map(|i| self.subscript(i)).collect();
                let w = self.memory(
                    st,
                    AccessMode::Write,
                    datum,
                    ty,
                    subscript.clone(),
                    &target.span,
                );
                for i in idx {
                    st.edge(i, w, EdgeKind::Control);
                }
                if let Some(v) = v {
                    st.edge(v, w, EdgeKind::ScalarData);
                }
                let epochs = subscript
                    .iter()
                    .flat_map(|s| s.vars())
                    .map(|var| (var.to_string(), st.epochs.get(var).copied().unwrap_or(0)))
                    .collect();
                st.array_writes
                    .entry(datum.to_string())
                    .or_default()
                    .push(ArrayWrite {
                        node: w,
                        subscript,
                        epochs,
                    });
            }
            _ => unreachable!("assignment target is an lvalue"),
        }
    }

    fn memory(
        &mut self,
        st: &mut DfgState,
        mode: AccessMode,
        datum: &str,
        format: ElemType,
        subscript: Vec<Subscript>,
        span: &SourceSpan,
    ) -> NodeId {
        let id = self.alloc();
        st.nodes.push(ElementaryNode {
            id,
            kind: ElementaryKind::Memory {
                mode,
                datum: datum.to_string(),
                class: MemoryClass::N2,
                format,
                subscript,
            },
            span: span.clone(),
        });
        id
    }

    fn op_node(&mut self, st: &mut DfgState, kind: ElementaryKind, span: &SourceSpan) -> NodeId {
        let id = self.alloc();
        st.nodes.push(ElementaryNode {
            id,
            kind,
            span: span.clone(),
        });
        id
    }

    /// Lower a value expression; returns the node producing its value, or
    /// `None` for compile-time constants.
    fn lower_expr(&mut self, st: &mut DfgState, e: &AstExpr) -> Option<NodeId> {
        match &e.kind {
            ExprKind::Literal(_) => None,
            ExprKind::Var(name) => {
                if self.const_of(name).is_some() {
                    return None;
                }
                let datum = self.resolve(name);
                let ty = self.scope.data.get(&datum).map_or(ElemType::INT, |i| i.ty);
                let r = self.memory(st, AccessMode::Read, &datum, ty, Vec::new(), &e.span);
                if let Some(&w) = st.scalar_writes.get(&datum) {
                    st.edge(w, r, EdgeKind::ScalarData);
                }
                Some(r)
            }
            ExprKind::Index { name, indices } => {
                let datum = self.resolve(name);
                let ty = self.scope.data.get(&datum).map_or(ElemType::INT, |i| i.ty);
                let idx: Vec<NodeId> = indices
                    .iter()
                    .filter_map(|i| self.lower_expr(st, i))
                    .collect();
                let subscript: Vec<Subscript> = indices.iter().map(|i| self.subscript(i)).collect();
                let r = self.memory(st, AccessMode::Read, &datum, ty, subscript.clone(), &e.span);
                for i in idx {
                    st.edge(i, r, EdgeKind::Control);
                }
                let sources: Vec<NodeId> = st
                    .array_writes
                    .get(&datum)
                    .map(|ws| {
                        ws.iter()
                            .filter(|w| may_alias(w, &subscript, &st.epochs))
                            .map(|w| w.node)
                            .collect()
                    })
                    .unwrap_or_default();
                for w in sources {
                    st.edge(w, r, EdgeKind::ScalarData);
                }
                Some(r)
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.lower_expr(st, lhs);
                let r = self.lower_expr(st, rhs);
                let kind = if op.is_test() {
                    ElementaryKind::Conditional {
                        op: *op,
                        deterministic: false,
                    }
                } else {
                    ElementaryKind::Processing {
                        op: Operator::Binary(*op),
                    }
                };
                let n = self.op_node(st, kind, &e.span);
                for x in [l, r].into_iter().flatten() {
                    st.edge(x, n, EdgeKind::ScalarData);
                }
                Some(n)
            }
            ExprKind::Unary { op, operand } => {
                let o = self.lower_expr(st, operand);
                let n = self.op_node(
                    st,
                    ElementaryKind::Processing {
                        op: Operator::Unary(*op),
                    },
                    &e.span,
                );
                if let Some(o) = o {
                    st.edge(o, n, EdgeKind::ScalarData);
                }
                Some(n)
            }
            ExprKind::Assign { .. } | ExprKind::Call { .. } => {
                unreachable!("side effects are statement-level after parsing")
            }
        }
    }

    fn subscript(&self, e: &AstExpr) -> Subscript {
        fn affine(b: &Builder<'_>, e: &AstExpr) -> Option<(i64, BTreeMap<String, i64>)> {
            match &e.kind {
                ExprKind::Literal(Literal::Int(v)) => Some((*v, BTreeMap::new())),
                ExprKind::Var(n) => match b.const_of(n) {
                    Some(v) => Some((v, BTreeMap::new())),
                    None => Some((0, BTreeMap::from([(b.resolve(n), 1)]))),
                },
                ExprKind::Unary {
                    op: crate::frontend::UnaryOp::Neg,
                    operand,
                } => {
                    let (c, t) = affine(b, operand)?;
                    Some((-c, t.into_iter().map(|(k, v)| (k, -v)).collect()))
                }
                ExprKind::Binary { op, lhs, rhs } => {
                    let (lc, lt) = affine(b, lhs)?;
                    let (rc, rt) = affine(b, rhs)?;
                    match op {
                        BinaryOp::Add | BinaryOp::Sub => {
                            let sign = if *op == BinaryOp::Add { 1 } else { -1 };
                            let mut terms = lt;
                            for (k, v) in rt {
                                *terms.entry(k).or_default() += sign * v;
                            }
                            terms.retain(|_, v| *v != 0);
                            Some((lc.checked_add(sign * rc)?, terms))
                        }
                        BinaryOp::Mul if lt.is_empty() || rt.is_empty() => {
                            let (k, c, t) = if lt.is_empty() {
                                (lc, rc, rt)
                            } else {
                                (rc, lc, lt)
                            };
                            let mut terms: BTreeMap<String, i64> =
                                t.into_iter().map(|(n, v)| (n, v * k)).collect();
                            terms.retain(|_, v| *v != 0);
                            Some((c.checked_mul(k)?, terms))
                        }
                        _ => None,
                    }
                }
                _ => None,
            }
        }
        match affine(self, e) {
            Some((constant, terms)) => Subscript::Affine { constant, terms },
            None => {
                let mut vars = BTreeSet::new();
                e.walk(&mut |x| match &x.kind {
                    ExprKind::Var(n) | ExprKind::Index { name: n, .. }
                        if self.const_of(n).is_none() =>
                    {
                        vars.insert(self.resolve(n));
                    }
                    _ => {}
                });
                Subscript::Opaque { vars }
            }
        }
    }

    // ---- control patterns ----

    fn build_control(&mut self, s: &AstStmt) -> GraphNode {
        match &s.kind {
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let id = self.alloc();
                let c = self.expr_dfg(cond);
                let t = self.build_role(Some(then_branch), &s.span);
                let f = self.build_role(else_branch.as_deref(), &s.span);
                self.pattern(
                    id,
                    Pattern::If,
                    format!("if@{}", s.span.line),
                    &s.span,
                    vec![(Role::Condition, c), (Role::True, t), (Role::False, f)],
                )
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                self.push_scope();
                let id = self.alloc();
                let init_g = match init.as_deref() {
                    Some(i) => self.build_dfg(&[i]),
                    None => self.empty_dfg(&s.span),
                };
                let vars = self.loop_control_vars(cond.as_ref());
                self.frame_mut().loop_vars.push(vars);
                let mut cond_g = match cond {
                    Some(c) => self.expr_dfg(c),
                    None => self.empty_dfg(&s.span),
                };
                self.frame_mut().loop_depth += 1;
                let body_g = self.build_role(Some(body), &body.span);
                self.frame_mut().loop_depth -= 1;
                let step_g = match step {
                    Some(e) => {
                        let st = AstStmt::new(StmtKind::Expr(e.clone()), e.span.clone());
                        self.build_dfg(&[&st])
                    }
                    None => self.empty_dfg(&s.span),
                };
                self.frame_mut().loop_vars.pop();

                let induction = self.induction(init.as_deref(), cond.as_ref(), step.as_ref(), body);
                let trips = match &induction {
                    Some((ind, op, bound)) => static_trips(ind.init, *op, *bound, ind.step),
                    None => TripCount::Unknown,
                };
                if trips != TripCount::Unknown {
                    mark_deterministic(&mut cond_g);
                }
                self.pop_scope();
                let mut g = self.pattern(
                    id,
                    Pattern::For,
                    format!("loop@{}", s.span.line),
                    &s.span,
                    vec![
                        (Role::Init, init_g),
                        (Role::Condition, cond_g),
                        (Role::Body, body_g),
                        (Role::Step, step_g),
                    ],
                );
                g.loop_info = Some(LoopInfo {
                    induction: induction.map(|(i, _, _)| i),
                    trips,
                });
                g
            }
            StmtKind::While { cond, body } => {
                let id = self.alloc();
                let vars = self.loop_control_vars(Some(cond));
                self.frame_mut().loop_vars.push(vars);
                let c = self.expr_dfg(cond);
                self.frame_mut().loop_depth += 1;
                let b = self.build_role(Some(body), &body.span);
                self.frame_mut().loop_depth -= 1;
                self.frame_mut().loop_vars.pop();
                let mut g = self.pattern(
                    id,
                    Pattern::While,
                    format!("loop@{}", s.span.line),
                    &s.span,
                    vec![(Role::Condition, c), (Role::Body, b)],
                );
                g.loop_info = Some(LoopInfo {
                    induction: None,
                    trips: TripCount::Unknown,
                });
                g
            }
            StmtKind::DoWhile { body, cond } => {
                let id = self.alloc();
                let vars = self.loop_control_vars(Some(cond));
                self.frame_mut().loop_vars.push(vars);
                self.frame_mut().loop_depth += 1;
                let b = self.build_role(Some(body), &body.span);
                self.frame_mut().loop_depth -= 1;
                let c = self.expr_dfg(cond);
                self.frame_mut().loop_vars.pop();
                let mut g = self.pattern(
                    id,
                    Pattern::DoWhile,
                    format!("loop@{}", s.span.line),
                    &s.span,
                    vec![(Role::Body, b), (Role::Condition, c)],
                );
                g.loop_info = Some(LoopInfo {
                    induction: None,
                    trips: TripCount::Unknown,
                });
                g
            }
            StmtKind::Switch {
                scrutinee,
                cases,
                default,
            } => self.build_switch(s, scrutinee, cases, default.as_deref()),
            _ => unreachable!("not a control statement"),
        }
    }

    fn build_switch(
        &mut self,
        s: &AstStmt,
        scrutinee: &AstExpr,
        cases: &[SwitchCase],
        default: Option<&[AstStmt]>,
    ) -> GraphNode {
        let id = self.alloc();
        let cond_id = self.alloc();
        let mut st = DfgState::default();
        let v = self.lower_expr(&mut st, scrutinee);
        for c in cases {
            for _ in &c.labels {
                let t = self.op_node(
                    &mut st,
                    ElementaryKind::Conditional {
                        op: BinaryOp::Eq,
                        deterministic: false,
                    },
                    &c.span,
                );
                if let Some(v) = v {
                    st.edge(v, t, EdgeKind::ScalarData);
                }
            }
        }
        let mut cond = self.graph(
            cond_id,
            Level::Dfg,
            format!("dfg@{}", scrutinee.span.line),
            &scrutinee.span,
            st.nodes.into_iter().map(Child::Elem).collect(),
        );
        cond.edges = st.edges;

        let mut roles = vec![(Role::Condition, cond)];
        for (k, c) in cases.iter().enumerate() {
            self.push_scope();
            let g = self.build_body(&c.body, &c.span);
            self.pop_scope();
            roles.push((Role::Case(k), g));
        }
        let d = match default {
            Some(body) => {
                self.push_scope();
                let g = self.build_body(body, &s.span);
                self.pop_scope();
                g
            }
            None => self.empty_dfg(&s.span),
        };
        roles.push((Role::Default, d));
        let mut g = self.pattern(
            id,
            Pattern::Switch,
            format!("switch@{}", s.span.line),
            &s.span,
            roles,
        );
        g.switch_info = Some(SwitchInfo {
            labels: cases.iter().map(|c| c.labels.clone()).collect(),
            has_default: default.is_some(),
        });
        g
    }

    fn pattern(
        &self,
        id: NodeId,
        pattern: Pattern,
        label: String,
        span: &SourceSpan,
        parts: Vec<(Role, GraphNode)>,
    ) -> GraphNode {
        let mut g = self.graph(id, Level::Cdfg, label, span, Vec::new());
        g.pattern = Some(pattern);
        let cond_id = parts
            .iter()
            .find(|(r, _)| *r == Role::Condition)
            .map(|(_, g)| g.id);
        let ids: Vec<(Role, NodeId)> = parts.iter().map(|(r, g)| (*r, g.id)).collect();
        // Ordering hints: the condition guards every branch; loop parts run in order.
        match pattern {
            Pattern::If | Pattern::Switch => {
                let c = cond_id.expect("condition role");
                for (r, to) in &ids {
                    if *r != Role::Condition {
                        g.edges.push(Edge {
                            from: c,
                            to: *to,
                            kind: EdgeKind::Control,
                        });
                    }
                }
            }
            _ => {
                for w in ids.windows(2) {
                    g.edges.push(Edge {
                        from: w[0].1,
                        to: w[1].1,
                        kind: EdgeKind::Control,
                    });
                }
            }
        }
        g.roles = ids;
        g.children = parts.into_iter().map(|(_, c)| Child::Graph(c)).collect();
        g
    }

    fn loop_control_vars(&self, cond: Option<&AstExpr>) -> HashSet<String> {
        let mut vars = HashSet::new();
        if let Some(c) = cond {
            c.walk(&mut |e| {
                if let ExprKind::Var(n) = &e.kind {
                    vars.insert(self.resolve(n));
                }
            });
        }
        vars
    }

    /// Matches `i = c0; i op C; i = i ± s` with `i` untouched by the body.
    fn induction(
        &self,
        init: Option<&AstStmt>,
        cond: Option<&AstExpr>,
        step: Option<&AstExpr>,
        body: &AstStmt,
    ) -> Option<(Induction, BinaryOp, i64)> {
        let const_value = |e: &AstExpr| match &e.kind {
            ExprKind::Literal(Literal::Int(v)) => Some(*v),
            ExprKind::Var(n) => self.const_of(n),
            _ => None,
        };
        let (var, init_value) = match &init?.kind {
            StmtKind::Expr(AstExpr {
                kind: ExprKind::Assign { target, value, .. },
                ..
            }) => match &target.kind {
                ExprKind::Var(n) => (n.clone(), const_value(value)?),
                _ => return None,
            },
            StmtKind::Decl(d) if !d.is_array() => match &d.init {
                Some(Initializer::Expr(e)) => (d.name.clone(), const_value(e)?),
                _ => return None,
            },
            _ => return None,
        };
        let ExprKind::Binary { op, lhs, rhs } = &cond?.kind else {
            return None;
        };
        let is_var = |e: &AstExpr| matches!(&e.kind, ExprKind::Var(n) if *n == var);
        let (op, bound) = if is_var(lhs) {
            (*op, const_value(rhs)?)
        } else if is_var(rhs) {
            (flip(*op)?, const_value(lhs)?)
        } else {
            return None;
        };
        if !op.is_test() {
            return None;
        }
        let ExprKind::Assign { target, value, .. } = &step?.kind else {
            return None;
        };
        if !is_var(target) {
            return None;
        }
        let ExprKind::Binary {
            op: step_op,
            lhs: sl,
            rhs: sr,
        } = &value.kind
        else {
            return None;
        };
        let step_value = match step_op {
            BinaryOp::Add if is_var(sl) => const_value(sr)?,
            BinaryOp::Add if is_var(sr) => const_value(sl)?,
            BinaryOp::Sub if is_var(sl) => const_value(sr)?.checked_neg()?,
            _ => return None,
        };
        if writes_name(body, &var) {
            return None;
        }
        Some((
            Induction {
                var: self.resolve(&var),
                init: init_value,
                step: step_value,
            },
            op,
            bound,
        ))
    }

    // ---- calls ----

    fn build_call(&mut self, s: &AstStmt, call: &AstExpr) -> Vec<GraphNode> {
        let ExprKind::Call { callee, args } = &call.kind else {
            unreachable!("call statement")
        };
        let program = self.program;
        let f = program
            .function(callee)
            .expect("frontend rejects unknown callees");
        let prefix = format!(
            "{}{}@{}:{}.",
            self.frame().prefix,
            callee,
            call.span.line,
            call.span.column
        );

        let mut out = Vec::new();
        let mut bindings = Vec::new();
        let mut temps: Vec<(String, &AstExpr)> = Vec::new();
        for (p, a) in f.params.iter().zip(args) {
            let direct = match &a.kind {
                ExprKind::Var(n) if p.is_array => Some(self.resolve(n)),
                ExprKind::Var(n)
                    if self.const_of(n).is_none() && !writes_name(&f.body, &p.name) =>
                {
                    Some(self.resolve(n))
                }
                _ => None,
            };
            match direct {
                Some(d) => bindings.push((p.name.clone(), d)),
                None => {
                    let temp = format!("{prefix}{}", p.name);
                    self.scope
                        .data
                        .insert(temp.clone(), DatumInfo::new(DatumKind::Temp, p.ty, false));
                    bindings.push((p.name.clone(), temp.clone()));
                    temps.push((temp, a));
                }
            }
        }
        if !temps.is_empty() {
            let id = self.alloc();
            let mut st = DfgState::default();
            for (temp, a) in &temps {
                let target = AstExpr::new(ExprKind::Var(temp.clone()), a.span.clone());
                self.note_write(temp, &target, a);
                self.lower_assign(&mut st, temp, &target, a);
            }
            let mut g = self.graph(
                id,
                Level::Dfg,
                format!("dfg@{}", call.span.line),
                &call.span,
                st.nodes.into_iter().map(Child::Elem).collect(),
            );
            g.edges = st.edges;
            out.push(g);
        }

        let return_target = f.return_type.and_then(|ty| match &s.kind {
            StmtKind::Expr(AstExpr {
                kind: ExprKind::Assign { target, .. },
                ..
            }) => Some(self.resolve(target.lvalue_name().expect("lvalue"))),
            StmtKind::Return(_) => self.frame().return_target.clone(),
            _ => {
                let temp = format!("{prefix}return");
                self.scope
                    .data
                    .insert(temp.clone(), DatumInfo::new(DatumKind::Temp, ty, false));
                Some(temp)
            }
        });
        if let (Some(t), StmtKind::Expr(_)) = (&return_target, &s.kind) {
            // The result is computed, never a plain copy.
            if let Some(info) = self.scope.data.get_mut(t) {
                info.copy_sources = None;
            }
        }

        let id = self.alloc();
        let caller_function = self.frame().function.clone();
        let params: HashMap<String, String> = bindings.iter().cloned().collect();
        let loop_depth = self.frame().loop_depth;
        self.frames.push(Frame {
            function: callee.clone(),
            prefix,
            scopes: vec![params],
            return_target,
            loop_vars: Vec::new(),
            loop_depth,
        });
        let children = self.build_seq(f.body_stmts());
        self.frames.pop();
        let mut g = self.graph(
            id,
            Level::Hcdfg,
            format!("call:{}@{}", callee, call.span.line),
            &call.span,
            children,
        );
        g.function = caller_function;
        g.call = Some(CallInfo {
            callee: callee.clone(),
            bindings,
        });
        out.push(g);
        out
    }
}

fn flip(op: BinaryOp) -> Option<BinaryOp> {
    Some(match op {
        BinaryOp::Lt => BinaryOp::Gt,
        BinaryOp::Le => BinaryOp::Ge,
        BinaryOp::Gt => BinaryOp::Lt,
        BinaryOp::Ge => BinaryOp::Le,
        BinaryOp::Eq => BinaryOp::Eq,
        BinaryOp::Ne => BinaryOp::Ne,
        _ => return None,
    })
}

/// Closed-form trip count of `for (i = init; i op bound; i += step)`.
pub(crate) fn static_trips(init: i64, op: BinaryOp, bound: i64, step: i64) -> TripCount {
    let (init, bound, step) = (init as i128, bound as i128, step as i128);
    let holds = match op {
        BinaryOp::Lt => init < bound,
        BinaryOp::Le => init <= bound,
        BinaryOp::Gt => init > bound,
        BinaryOp::Ge => init >= bound,
        BinaryOp::Eq => init == bound,
        BinaryOp::Ne => init != bound,
        _ => return TripCount::Unknown,
    };
    if !holds {
        return TripCount::Static(0);
    }
    if step == 0 {
        return TripCount::Unknown;
    }
    let n = match op {
        BinaryOp::Lt if step > 0 => (bound - init + step - 1) / step,
        BinaryOp::Le if step > 0 => (bound - init) / step + 1,
        BinaryOp::Gt if step < 0 => (init - bound + (-step) - 1) / (-step),
        BinaryOp::Ge if step < 0 => (init - bound) / (-step) + 1,
        BinaryOp::Eq => 1,
        BinaryOp::Ne => {
            let d = bound - init;
            if d % step == 0 && d / step > 0 {
                d / step
            } else {
                return TripCount::Unknown;
            }
        }
        _ => return TripCount::Unknown,
    };
    u64::try_from(n).map_or(TripCount::Unknown, TripCount::Static)
}

fn mark_deterministic(g: &mut GraphNode) {
    for c in &mut g.children {
        if let Child::Elem(ElementaryNode {
            kind: ElementaryKind::Conditional { deterministic, .. },
            ..
        }) = c
        {
            *deterministic = true;
        }
    }
}

fn may_alias(w: &ArrayWrite, read: &[Subscript], epochs: &HashMap<String, u32>) -> bool {
    let moved = w
        .epochs
        .iter()
        .any(|(v, e)| epochs.get(v).copied().unwrap_or(0) != *e);
    if moved || w.subscript.len() != read.len() {
        return true;
    }
    !w.subscript.iter().zip(read).any(|(a, b)| match (a, b) {
        (
            Subscript::Affine {
                constant: ca,
                terms: ta,
            },
            Subscript::Affine {
                constant: cb,
                terms: tb,
            },
        ) => ta == tb && ca != cb,
        _ => false,
    })
}

/// Recompute read/write sets bottom-up.
pub(crate) fn compute_effects(g: &mut GraphNode) {
    let mut eff = Effects::default();
    for c in &mut g.children {
        match c {
            Child::Graph(child) => {
                compute_effects(child);
                eff.merge(&child.effects);
            }
            Child::Elem(e) => {
                if let Some((mode, datum, _)) = e.memory() {
                    match mode {
                        AccessMode::Read => eff.reads.insert(datum.to_string()),
                        AccessMode::Write => eff.writes.insert(datum.to_string()),
                    };
                }
            }
        }
    }
    g.effects = eff;
}
