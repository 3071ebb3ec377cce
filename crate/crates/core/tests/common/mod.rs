//! Helpers shared by the integration tests: corpus loading, a random
//! program generator and a random hierarchy generator.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use hcdfg::driver::SourceFile;
use hcdfg::frontend::{BinaryOp, ElemType, SourceSpan};
use hcdfg::hcdfg::{
    AccessMode, Child, Edge, EdgeKind, Effects, ElementaryKind, ElementaryNode, GraphNode, Hcdfg,
    Level, MemoryClass, Operator,
};
use hcdfg::metrics::Profile;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Every `.c` file of the shipped corpus, sorted by name.
pub fn corpus_files() -> Vec<SourceFile> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "c"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| SourceFile {
            path: format!("corpus/{}", p.file_name().unwrap().to_string_lossy()),
            text: std::fs::read_to_string(&p).unwrap(),
        })
        .collect()
}

pub fn corpus_file(name: &str) -> SourceFile {
    SourceFile {
        path: format!("corpus/{name}"),
        text: std::fs::read_to_string(corpus_dir().join(name)).unwrap(),
    }
}

/// Profiles of every corpus file, merged.
pub fn corpus_profile() -> Profile {
    let text = std::fs::read_to_string(corpus_dir().join("smartcam.profile.toml")).unwrap();
    Profile::from_toml(&text).unwrap()
}

// ---- random programs ----

const BIN_OPS: [&str; 8] = ["+", "-", "*", "&", "|", "^", ">>", "<<"];
const CMP_OPS: [&str; 6] = ["<", "<=", ">", ">=", "==", "!="];

/// Shape limits of a random program.
#[derive(Debug, Clone, Copy)]
pub struct ProgramShape {
    pub statements: usize,
    pub depth: usize,
    pub loops: bool,
    pub tests: bool,
}

impl Default for ProgramShape {
    fn default() -> Self {
        ProgramShape {
            statements: 6,
            depth: 3,
            loops: true,
            tests: true,
        }
    }
}

struct ProgramGen {
    rng: ChaCha8Rng,
    shape: ProgramShape,
    out: String,
    /// Induction variables of the enclosing loops.
    loop_vars: Vec<String>,
}

/// A random, well-formed program of one or two functions. Every loop has a
/// constant bound, so no profile is needed.
pub fn random_program(seed: u64, shape: ProgramShape) -> String {
    let mut g = ProgramGen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        shape,
        out: String::new(),
        loop_vars: Vec::new(),
    };
    let helper = g.rng.gen_bool(0.3);
    if helper {
        g.out.push_str("int helper(int p[16], int q)\n{\n    int t0;\n    t0 = p[q & 15] + q;\n    return t0 * 3;\n}\n\n");
    }
    g.out
        .push_str("void f(int g0[16], int g1[16], int a, int b)\n{\n");
    g.out
        .push_str("    int t0;\n    int t1;\n    int i0;\n    int i1;\n    int i2;\n    int i3;\n");
    g.out.push_str("    t0 = a;\n    t1 = b;\n");
    let n = g.rng.gen_range(1..=shape.statements);
    for _ in 0..n {
        g.stmt(1, shape.depth);
    }
    if helper {
        g.out
            .push_str("    t0 = helper(g1, t1);\n    g0[0] = t0;\n");
    }
    g.out.push_str("}\n");
    g.out
}

impl ProgramGen {
    fn line(&mut self, indent: usize, text: &str) {
        for _ in 0..indent {
            self.out.push_str("    ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn stmt(&mut self, indent: usize, depth: usize) {
        let pick = if depth == 0 {
            0
        } else {
            self.rng.gen_range(0..10)
        };
        match pick {
            6 | 7 if self.shape.loops && self.loop_vars.len() < 4 => self.for_loop(indent, depth),
            8 if self.shape.tests => self.if_stmt(indent, depth),
            9 if self.shape.tests => self.switch_stmt(indent, depth),
            5 => {
                self.line(indent, "{");
                let n = self.rng.gen_range(1..=3);
                for _ in 0..n {
                    self.stmt(indent + 1, depth - 1);
                }
                self.line(indent, "}");
            }
            _ => {
                let s = self.assign();
                self.line(indent, &s);
            }
        }
    }

    fn assign(&mut self) -> String {
        let target = self.lvalue();
        match self.rng.gen_range(0..8) {
            0 => format!("{target} += {};", self.expr(2)),
            1 if !target.contains('[') => format!("{target}++;"),
            _ => format!("{target} = {};", self.expr(3)),
        }
    }

    fn lvalue(&mut self) -> String {
        match self.rng.gen_range(0..4) {
            0 => "t0".to_string(),
            1 => "t1".to_string(),
            2 => format!("g0[{}]", self.index()),
            _ => format!("g1[{}]", self.index()),
        }
    }

    fn index(&mut self) -> String {
        if let Some(v) = self.loop_vars.choose(&mut self.rng).cloned() {
            if self.rng.gen_bool(0.7) {
                return match self.rng.gen_range(0..3) {
                    0 => v,
                    1 => format!("{v} + {}", self.rng.gen_range(1..4)),
                    _ => format!("2 * {v}"),
                };
            }
        }
        self.rng.gen_range(0..16).to_string()
    }

    fn expr(&mut self, depth: usize) -> String {
        if depth == 0 || self.rng.gen_bool(0.3) {
            return match self.rng.gen_range(0..7) {
                0 => self.rng.gen_range(0..100).to_string(),
                1 => "a".to_string(),
                2 => "b".to_string(),
                3 => "t0".to_string(),
                4 => "t1".to_string(),
                5 => format!("g0[{}]", self.index()),
                _ => format!("g1[{}]", self.index()),
            };
        }
        if self.rng.gen_bool(0.1) {
            return format!("-({})", self.expr(depth - 1));
        }
        let op = *BIN_OPS.choose(&mut self.rng).unwrap();
        let rhs = if op == ">>" || op == "<<" {
            self.rng.gen_range(1..5).to_string()
        } else {
            self.expr(depth - 1)
        };
        format!("({} {op} {rhs})", self.expr(depth - 1))
    }

    fn cond(&mut self) -> String {
        let op = *CMP_OPS.choose(&mut self.rng).unwrap();
        format!("{} {op} {}", self.expr(1), self.expr(1))
    }

    fn body(&mut self, indent: usize, depth: usize) {
        self.line(indent, "{");
        let n = self.rng.gen_range(1..=3);
        for _ in 0..n {
            self.stmt(indent + 1, depth - 1);
        }
        self.line(indent, "}");
    }

    fn for_loop(&mut self, indent: usize, depth: usize) {
        let v = format!("i{}", self.loop_vars.len());
        let lo = self.rng.gen_range(0..3);
        let hi = lo + self.rng.gen_range(1..5);
        self.line(indent, &format!("for ({v} = {lo}; {v} < {hi}; {v}++)"));
        self.loop_vars.push(v);
        self.body(indent, depth);
        self.loop_vars.pop();
    }

    fn if_stmt(&mut self, indent: usize, depth: usize) {
        let c = self.cond();
        self.line(indent, &format!("if ({c})"));
        self.body(indent, depth);
        if self.rng.gen_bool(0.5) {
            self.line(indent, "else");
            self.body(indent, depth);
        }
    }

    fn switch_stmt(&mut self, indent: usize, depth: usize) {
        self.line(indent, "switch (a & 3) {");
        let cases = self.rng.gen_range(1..4);
        for k in 0..cases {
            self.line(indent, &format!("case {k}:"));
            let s = self.assign();
            self.line(indent + 1, &s);
            if depth > 1 && self.rng.gen_bool(0.3) {
                self.stmt(indent + 1, depth - 1);
            }
            self.line(indent + 1, "break;");
        }
        if self.rng.gen_bool(0.5) {
            self.line(indent, "default:");
            let s = self.assign();
            self.line(indent + 1, &s);
        }
        self.line(indent, "}");
    }
}

// ---- random affine loops ----

/// One array access `name[coeff * i + offset]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AffineRef {
    pub array: usize,
    pub coeff: i64,
    pub offset: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Array(AffineRef),
    Temp,
    Lit(i64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoopStmt {
    /// `array[..] = lhs + rhs;`
    Store(AffineRef, Operand, Operand),
    /// `t = operand;` where the operand is never `t`.
    SetTemp(Operand),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineLoop {
    pub start: i64,
    pub trips: u64,
    pub body: Vec<LoopStmt>,
}

const ARRAYS: [&str; 3] = ["x", "y", "z"];

fn affine_text(r: &AffineRef) -> String {
    let name = ARRAYS[r.array];
    let scaled = match r.coeff {
        0 => String::new(),
        1 => "i".to_string(),
        -1 => "-i".to_string(),
        c => format!("{c} * i"),
    };
    match (scaled.is_empty(), r.offset) {
        (true, o) => format!("{name}[{o}]"),
        (false, 0) => format!("{name}[{scaled}]"),
        (false, o) if o > 0 => format!("{name}[{scaled} + {o}]"),
        (false, o) => format!("{name}[{scaled} - {}]", -o),
    }
}

fn operand_text(o: &Operand) -> String {
    match o {
        Operand::Array(r) => affine_text(r),
        Operand::Temp => "t".to_string(),
        Operand::Lit(v) => v.to_string(),
    }
}

impl AffineLoop {
    pub fn source(&self) -> String {
        let mut s = String::from(
            "void f(int x[64], int y[64], int z[64])\n{\n    int i;\n    int t;\n\n    t = 0;\n",
        );
        let _ = writeln!(
            s,
            "    for (i = {}; i < {}; i++) {{",
            self.start,
            self.start + self.trips as i64
        );
        for st in &self.body {
            let line = match st {
                LoopStmt::Store(r, a, b) => {
                    format!(
                        "{} = {} + {};",
                        affine_text(r),
                        operand_text(a),
                        operand_text(b)
                    )
                }
                LoopStmt::SetTemp(o) => format!("t = {};", operand_text(o)),
            };
            let _ = writeln!(s, "        {line}");
        }
        s.push_str("    }\n}\n");
        s
    }

    /// Brute-force oracle: the loop may run all its iterations at once unless
    /// some iteration reads a location an earlier iteration wrote, or the
    /// temporary is read before it is set and is set somewhere in the body.
    pub fn oracle_factor(&self) -> u64 {
        let mut set_yet = false;
        let mut exposed = false;
        let mut set_any = false;
        let mut reads: Vec<AffineRef> = Vec::new();
        let mut writes: Vec<AffineRef> = Vec::new();
        for st in &self.body {
            let mut use_op = |o: &Operand, set_yet: bool| match o {
                Operand::Array(r) => reads.push(*r),
                Operand::Temp if !set_yet => exposed = true,
                _ => {}
            };
            match st {
                LoopStmt::Store(w, a, b) => {
                    use_op(a, set_yet);
                    use_op(b, set_yet);
                    writes.push(*w);
                }
                LoopStmt::SetTemp(o) => {
                    use_op(o, set_yet);
                    set_yet = true;
                    set_any = true;
                }
            }
        }
        if exposed && set_any {
            return 1;
        }
        let at = |r: &AffineRef, k: u64| r.coeff * (self.start + k as i64) + r.offset;
        for k1 in 0..self.trips {
            for k2 in k1 + 1..self.trips {
                for w in &writes {
                    for r in reads.iter().filter(|r| r.array == w.array) {
                        if at(w, k1) == at(r, k2) {
                            return 1;
                        }
                    }
                }
            }
        }
        self.trips
    }
}

fn random_ref(rng: &mut impl Rng) -> AffineRef {
    AffineRef {
        array: rng.gen_range(0..3),
        coeff: rng.gen_range(-2..=2),
        offset: rng.gen_range(-3..=3),
    }
}

fn random_operand(rng: &mut impl Rng) -> Operand {
    match rng.gen_range(0..6) {
        0 => Operand::Temp,
        1 => Operand::Lit(rng.gen_range(1..10)),
        _ => Operand::Array(random_ref(rng)),
    }
}

pub fn random_affine_loop(rng: &mut impl Rng) -> AffineLoop {
    let n = rng.gen_range(1..=4);
    let body = (0..n)
        .map(|_| {
            if rng.gen_bool(0.25) {
                match random_operand(rng) {
                    Operand::Temp => LoopStmt::SetTemp(Operand::Lit(1)),
                    o => LoopStmt::SetTemp(o),
                }
            } else {
                LoopStmt::Store(random_ref(rng), random_operand(rng), random_operand(rng))
            }
        })
        .collect();
    AffineLoop {
        start: rng.gen_range(0..4),
        trips: rng.gen_range(1..=16),
        body,
    }
}

// ---- random loop-free, test-free hierarchies ----

struct HierGen {
    rng: ChaCha8Rng,
    next_id: u32,
    budget: usize,
}

/// A random hierarchy of plain DFGs and HCDFGs holding at most `max_nodes`
/// elementary nodes, with random data edges inside every DFG and between
/// siblings. Control edges between siblings are added as noise.
pub fn random_hierarchy(seed: u64, max_nodes: usize) -> Hcdfg {
    let mut g = HierGen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        next_id: 0,
        budget: max_nodes,
    };
    let root = g.hcdfg(3, "f".to_string());
    Hcdfg {
        function: "f".to_string(),
        root,
        loop_bounds: BTreeMap::new(),
    }
}

impl HierGen {
    fn id(&mut self) -> u32 {
        self.next_id += 1;
        self.next_id
    }

    fn graph(
        &mut self,
        id: u32,
        level: Level,
        label: String,
        children: Vec<Child>,
        edges: Vec<Edge>,
    ) -> GraphNode {
        GraphNode {
            id,
            level,
            pattern: None,
            label,
            function: "f".to_string(),
            span: SourceSpan::dummy(),
            children,
            edges,
            roles: Vec::new(),
            effects: Effects::default(),
            loop_info: None,
            switch_info: None,
            call: None,
        }
    }

    fn random_dag(&mut self, ids: &[u32], p: f64, kinds: &[EdgeKind]) -> Vec<Edge> {
        let mut edges = Vec::new();
        for i in 0..ids.len() {
            for j in i + 1..ids.len() {
                if self.rng.gen_bool(p) {
                    edges.push(Edge {
                        from: ids[i],
                        to: ids[j],
                        kind: *kinds.choose(&mut self.rng).unwrap(),
                    });
                }
            }
        }
        edges
    }

    fn hcdfg(&mut self, depth: usize, label: String) -> GraphNode {
        let id = self.id();
        let n = self.rng.gen_range(1..=4);
        let mut children = Vec::new();
        for k in 0..n {
            if self.budget == 0 {
                break;
            }
            let child = if depth > 0 && self.rng.gen_bool(0.35) {
                self.hcdfg(depth - 1, format!("block@{k}"))
            } else {
                self.dfg(format!("dfg@{k}"))
            };
            children.push(Child::Graph(child));
        }
        let ids: Vec<u32> = children.iter().map(Child::id).collect();
        let edges = self.random_dag(
            &ids,
            0.4,
            &[EdgeKind::ScalarData, EdgeKind::Multidim, EdgeKind::Control],
        );
        self.graph(id, Level::Hcdfg, label, children, edges)
    }

    fn dfg(&mut self, label: String) -> GraphNode {
        let id = self.id();
        let n = self.rng.gen_range(1..=8).min(self.budget.max(1));
        self.budget = self.budget.saturating_sub(n);
        let mut children = Vec::new();
        for _ in 0..n {
            let kind = match self.rng.gen_range(0..5) {
                0 | 1 => ElementaryKind::Processing {
                    op: Operator::Binary(
                        *[BinaryOp::Add, BinaryOp::Mul, BinaryOp::Sub, BinaryOp::Shr]
                            .choose(&mut self.rng)
                            .unwrap(),
                    ),
                },
                k => ElementaryKind::Memory {
                    mode: if self.rng.gen_bool(0.5) {
                        AccessMode::Read
                    } else {
                        AccessMode::Write
                    },
                    datum: format!("d{}", self.rng.gen_range(0..4)),
                    class: if k == 4 {
                        MemoryClass::N4
                    } else {
                        MemoryClass::N1
                    },
                    format: ElemType::INT,
                    subscript: Vec::new(),
                },
            };
            let eid = self.id();
            children.push(Child::Elem(ElementaryNode {
                id: eid,
                kind,
                span: SourceSpan::dummy(),
            }));
        }
        let ids: Vec<u32> = children.iter().map(Child::id).collect();
        let edges = self.random_dag(&ids, 0.3, &[EdgeKind::ScalarData]);
        self.graph(id, Level::Dfg, label, children, edges)
    }
}

/// Oracle for a loop-free, test-free hierarchy: expand it into one DAG of
/// elementary nodes, where a data edge between two sibling graphs orders
/// every node of the first before every node of the second. Returns the
/// operation count and the longest path under unit processing and global
/// memory costs, free local memory.
pub fn brute_force_nop_cp(h: &Hcdfg) -> (f64, f64) {
    let mut weight: BTreeMap<u32, u64> = BTreeMap::new();
    let mut succ: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    let mut nop = 0u64;

    fn nodes_of(g: &GraphNode) -> Vec<u32> {
        g.all_elements().iter().map(|e| e.id).collect()
    }

    h.root.walk(&mut |g| {
        for e in g.elements() {
            let (w, counted) = match &e.kind {
                ElementaryKind::Processing { .. } => (1, true),
                ElementaryKind::Memory { class, .. } if *class == MemoryClass::N1 => (1, true),
                _ => (0, false),
            };
            if counted {
                nop += 1;
            }
            weight.insert(e.id, w);
            succ.entry(e.id).or_default();
        }
        for edge in g.edges.iter().filter(|e| e.kind != EdgeKind::Control) {
            let from = g.children.iter().find(|c| c.id() == edge.from).unwrap();
            let to = g.children.iter().find(|c| c.id() == edge.to).unwrap();
            let srcs = match from {
                Child::Graph(x) => nodes_of(x),
                Child::Elem(e) => vec![e.id],
            };
            let dsts = match to {
                Child::Graph(x) => nodes_of(x),
                Child::Elem(e) => vec![e.id],
            };
            for &s in &srcs {
                succ.entry(s).or_default().extend(dsts.iter().copied());
            }
        }
    });

    // Memoized longest path starting at each node.
    fn longest(
        v: u32,
        w: &BTreeMap<u32, u64>,
        succ: &BTreeMap<u32, Vec<u32>>,
        memo: &mut BTreeMap<u32, u64>,
    ) -> u64 {
        if let Some(&m) = memo.get(&v) {
            return m;
        }
        let tail = succ[&v]
            .iter()
            .map(|&s| longest(s, w, succ, memo))
            .max()
            .unwrap_or(0);
        let r = w[&v] + tail;
        memo.insert(v, r);
        r
    }
    let mut memo = BTreeMap::new();
    let cp = weight
        .keys()
        .map(|&v| longest(v, &weight, &succ, &mut memo))
        .max()
        .unwrap_or(0);
    (nop as f64, cp as f64)
}
