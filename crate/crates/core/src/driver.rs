//! End-to-end analysis of source files and report emission.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::frontend::{parse_source, Program, SourceSpan};
use crate::guidance::{classify, memory_pressure, ClassValue, Thresholds};
use crate::hcdfg::{add_multidim_edges, build_hcdfg, GraphError, Hcdfg};
use crate::metrics::{characterize, CostTable, MetricRecord, MetricsError, Profile};
use crate::projection::TradeoffCurve;

/// Analysis settings shared by every function.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub costs: CostTable,
    pub profile: Profile,
    pub thresholds: Thresholds,
    /// Include sub-graph records down to this depth below each function root.
    pub levels: Option<usize>,
}

/// One input file with its contents.
#[derive(Debug, Clone)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub file: String,
    pub function: Option<String>,
    pub line: Option<u32>,
    pub column: Option<u32>,
    pub category: String,
    pub message: String,
}

impl Diagnostic {
    fn at(
        span: Option<&SourceSpan>,
        file: &str,
        function: Option<&str>,
        category: &str,
        message: String,
    ) -> Self {
        Diagnostic {
            file: span.map_or_else(|| file.to_string(), |s| s.file.to_string()),
            function: function.map(str::to_string),
            line: span.map(|s| s.line),
            column: span.map(|s| s.column),
            category: category.to_string(),
            message,
        }
    }

    /// Compiler-style rendering with the offending source line and a caret.
    pub fn render(&self, source: Option<&str>) -> String {
        let mut out = format!("error[{}]: {}\n", self.category, self.message);
        match (self.line, self.column) {
            (Some(line), Some(col)) => {
                let _ = writeln!(out, " --> {}:{}:{}", self.file, line, col);
                if let Some(text) = source.and_then(|s| s.lines().nth(line as usize - 1)) {
                    let gutter = line.to_string().len();
                    let pad = " ".repeat(gutter);
                    let caret_pad: String = text
                        .chars()
                        .take(col as usize - 1)
                        .map(|c| if c == '\t' { '\t' } else { ' ' })
                        .collect();
                    let _ = writeln!(out, "{pad} |");
                    let _ = writeln!(out, "{line} | {text}");
                    let _ = writeln!(out, "{pad} | {caret_pad}^");
                }
            }
            _ => {
                let _ = writeln!(out, " --> {}", self.file);
            }
        }
        if let Some(f) = &self.function {
            let _ = writeln!(out, " = in function `{f}`");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionReport {
    pub name: String,
    pub file: String,
    pub headline: MetricRecord,
    pub class: ClassValue,
    pub rationale: String,
    pub memory_pressure: bool,
    /// Sub-graph records, present when a depth limit was requested.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<MetricRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub inputs: Vec<String>,
    pub profile: Option<String>,
    pub costs_file: Option<String>,
    pub thresholds_file: Option<String>,
    pub options: AnalysisOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool_version: String,
    pub config: ConfigEcho,
    /// Ordered by γ, highest first, then by name and file.
    pub functions: Vec<FunctionReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<Diagnostic>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<TradeoffCurve>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputFormat {
    Table,
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(OutputFormat::Table),
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(format!(
                "unsupported output format `{other}` (expected table, json or csv)"
            )),
        }
    }
}

/// Result of analysing one function.
pub struct FunctionOutcome {
    pub file: String,
    pub name: String,
    pub graph: Option<Hcdfg>,
    pub result: Result<FunctionReport, Diagnostic>,
}

/// Parse every file. Files that fail to parse become diagnostics.
pub fn parse_all(files: &[SourceFile]) -> (Vec<(String, Program)>, Vec<Diagnostic>) {
    let mut programs = Vec::new();
    let mut failures = Vec::new();
    for f in files {
        match parse_source(&f.path, &f.text) {
            Ok(p) => programs.push((f.path.clone(), p)),
            Err(e) => failures.push(Diagnostic::at(
                Some(e.span()),
                &f.path,
                None,
                e.category(),
                e.message().to_string(),
            )),
        }
    }
    (programs, failures)
}

fn graph_diag(file: &str, function: &str, e: &GraphError) -> Diagnostic {
    match e {
        GraphError::Build { span, message } => {
            Diagnostic::at(Some(span), file, Some(function), "graph", message.clone())
        }
        other => Diagnostic::at(None, file, Some(function), "graph", other.to_string()),
    }
}

fn metrics_diag(file: &str, function: &str, e: &MetricsError) -> Diagnostic {
    match e {
        MetricsError::MissingTrips { span, path } => Diagnostic::at(
            Some(span),
            file,
            Some(function),
            "metrics",
            format!("trip count of `{path}` is unknown; add a `trips` entry to the profile"),
        ),
        other => Diagnostic::at(None, file, Some(function), "metrics", other.to_string()),
    }
}

/// Build and characterize one function.
pub fn analyze_function(
    file: &str,
    program: &Program,
    name: &str,
    opts: &AnalysisOptions,
) -> FunctionOutcome {
    let graph = match build_hcdfg(program, name) {
        Ok(h) => add_multidim_edges(h),
        Err(e) => {
            return FunctionOutcome {
                file: file.to_string(),
                name: name.to_string(),
                graph: None,
                result: Err(graph_diag(file, name, &e)),
            }
        }
    };
    let result = characterize(&graph, &opts.costs, &opts.profile)
        .map_err(|e| metrics_diag(file, name, &e))
        .map(|tree| {
            let headline = tree.root().clone();
            let class = classify(&headline, &opts.thresholds);
            let levels = match opts.levels {
                Some(depth) => tree
                    .records
                    .iter()
                    .skip(1)
                    .filter(|r| r.path.matches('/').count() <= depth)
                    .cloned()
                    .collect(),
                None => Vec::new(),
            };
            FunctionReport {
                name: name.to_string(),
                file: file.to_string(),
                memory_pressure: memory_pressure(&headline, &opts.thresholds),
                headline,
                class: class.value,
                rationale: class.rationale,
                levels,
            }
        });
    FunctionOutcome {
        file: file.to_string(),
        name: name.to_string(),
        graph: Some(graph),
        result,
    }
}

/// Analyse every function of every program on `jobs` worker threads.
/// Results come back in a fixed order regardless of the worker count.
pub fn analyze_programs(
    programs: &[(String, Program)],
    opts: &AnalysisOptions,
    jobs: usize,
) -> Vec<FunctionOutcome> {
    let items: Vec<(&str, &Program, &str)> = programs
        .iter()
        .flat_map(|(file, p)| {
            p.functions
                .iter()
                .map(move |f| (file.as_str(), p, f.name.as_str()))
        })
        .collect();
    let run = || {
        items
            .par_iter()
            .map(|(file, p, name)| analyze_function(file, p, name, opts))
            .collect::<Vec<_>>()
    };
    let mut out = match rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
    {
        Ok(pool) => pool.install(run),
        Err(_) => items
            .iter()
            .map(|(file, p, name)| analyze_function(file, p, name, opts))
            .collect(),
    };
    out.sort_by(|a, b| (&a.name, &a.file).cmp(&(&b.name, &b.file)));
    out
}

/// Assemble a report from function outcomes and earlier failures.
pub fn assemble_report(
    config: ConfigEcho,
    outcomes: &[FunctionOutcome],
    mut failures: Vec<Diagnostic>,
) -> Report {
    let mut functions: Vec<FunctionReport> = Vec::new();
    for o in outcomes {
        match &o.result {
            Ok(r) => functions.push(r.clone()),
            Err(d) => failures.push(d.clone()),
        }
    }
    functions.sort_by(|a, b| {
        b.headline
            .gamma
            .total_cmp(&a.headline.gamma)
            .then_with(|| a.name.cmp(&b.name))
            .then_with(|| a.file.cmp(&b.file))
    });
    failures.sort_by(|a, b| {
        (&a.file, a.line, a.column, &a.function, &a.message).cmp(&(
            &b.file,
            b.line,
            b.column,
            &b.function,
            &b.message,
        ))
    });
    Report {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config,
        functions,
        failures,
        projection: None,
    }
}

impl Report {
    pub fn emit(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Table => self.to_table(),
            OutputFormat::Json => self.to_json(),
            OutputFormat::Csv => self.to_csv(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Report, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Fixed-width table: name, γ, MOM, COM, class, memory pressure.
    pub fn to_table(&self) -> String {
        let width = self
            .functions
            .iter()
            .map(|f| f.name.len())
            .chain(
                self.functions
                    .iter()
                    .flat_map(|f| f.levels.iter().map(|r| level_name(r).len())),
            )
            .max()
            .unwrap_or(0)
            .max("Function".len());
        let mut out = format!(
            "{:<width$}  {:>8}  {:>5}  {:>5}  {:<12}  {}\n",
            "Function", "gamma", "MOM", "COM", "class", "memory"
        );
        for f in &self.functions {
            let h = &f.headline;
            let _ = writeln!(
                out,
                "{:<width$}  {:>8.2}  {:>5.2}  {:>5.2}  {:<12}  {}",
                f.name,
                h.gamma,
                h.mom,
                h.com,
                f.class.to_string(),
                if f.memory_pressure { "pressure" } else { "-" }
            );
            for r in &f.levels {
                let _ = writeln!(
                    out,
                    "{:<width$}  {:>8.2}  {:>5.2}  {:>5.2}",
                    level_name(r),
                    r.gamma,
                    r.mom,
                    r.com
                );
            }
        }
        if let Some(c) = &self.projection {
            out.push('\n');
            out.push_str(&c.to_csv());
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("function,file,path,gamma,mom,com,nop,cp,class,memory_pressure\n");
        for f in &self.functions {
            let h = &f.headline;
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}",
                f.name,
                f.file,
                h.path,
                h.gamma,
                h.mom,
                h.com,
                h.nop(),
                h.cp,
                f.class,
                f.memory_pressure
            );
            for r in &f.levels {
                let _ = writeln!(
                    out,
                    "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},,",
                    f.name,
                    f.file,
                    r.path,
                    r.gamma,
                    r.mom,
                    r.com,
                    r.nop(),
                    r.cp
                );
            }
        }
        if let Some(c) = &self.projection {
            out.push('\n');
            out.push_str(&c.to_csv());
        }
        out
    }
}

fn level_name(r: &MetricRecord) -> String {
    let depth = r.path.matches('/').count();
    let leaf = r.path.rsplit('/').next().unwrap_or("");
    format!("{}{}", "  ".repeat(depth), leaf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn echo() -> ConfigEcho {
        ConfigEcho {
            inputs: vec!["t.c".into()],
            profile: None,
            costs_file: None,
            thresholds_file: None,
            options: AnalysisOptions::default(),
        }
    }

    fn run(src: &str, jobs: usize) -> Report {
        let files = [SourceFile {
            path: "t.c".into(),
            text: src.into(),
        }];
        let (programs, failures) = parse_all(&files);
        let outcomes = analyze_programs(&programs, &AnalysisOptions::default(), jobs);
        assemble_report(echo(), &outcomes, failures)
    }

    const TWO: &str =
        "int g(int a) { return a + 1; }\nint h(int a, int b) { return a * b + a * 2; }\n";

    #[test]
    fn table_rows_and_rounding() {
        let r = run(TWO, 1);
        let t = r.to_table();
        assert_eq!(t.lines().count(), 3);
        assert!(t.lines().next().unwrap().starts_with("Function"));
        assert_eq!(r.functions[0].name, "h");
    }

    #[test]
    fn json_round_trip() {
        let r = run(TWO, 2);
        assert_eq!(Report::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn jobs_do_not_change_output() {
        assert_eq!(run(TWO, 1).to_json(), run(TWO, 4).to_json());
    }

    #[test]
    fn empty_input_gives_header_only() {
        let r = run("", 1);
        assert_eq!(r.to_table().lines().count(), 1);
    }

    #[test]
    fn parse_failure_is_reported_with_position() {
        let r = run("int f(int a) {\n  int *p;\n  return a;\n}\n", 1);
        assert_eq!(r.failures.len(), 1);
        let d = &r.failures[0];
        assert_eq!((d.line, d.category.as_str()), (Some(2), "unsupported"));
        let text = d.render(Some("int f(int a) {\n  int *p;\n  return a;\n}\n"));
        assert!(text.contains("2 |   int *p;"), "{text}");
        assert!(text.contains("^"));
    }

    #[test]
    fn gamma_rounds_to_two_decimals() {
        let mut r = run(TWO, 1);
        r.functions[0].headline.gamma = 43.879;
        assert!(r.to_table().contains("43.88"));
    }
}
