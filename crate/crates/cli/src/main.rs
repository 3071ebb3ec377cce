use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hcdfg::driver::{
    analyze_function, analyze_programs, assemble_report, parse_all, AnalysisOptions, ConfigEcho,
    Diagnostic, OutputFormat, SourceFile,
};
use hcdfg::frontend::Program;
use hcdfg::guidance::Thresholds;
use hcdfg::hcdfg::{export_graph, GraphFormat, Hcdfg};
use hcdfg::metrics::{CostTable, Profile};
use hcdfg::projection::{tradeoff_curve, TradeoffCurve, DEFAULT_NODE_CAP};

#[derive(Parser)]
#[command(
    name = "hcdfg",
    version,
    about = "Characterize C functions for hardware/software design-space exploration"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute γ, MOM and COM for every function and classify them (default).
    Analyze(AnalyzeArgs),
    /// Export the graph of one or all functions.
    Graph(GraphArgs),
    /// Compute the delay/resource trade-off curve of one function.
    Project(ProjectArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Loop trip counts and branch probabilities (TOML).
    #[arg(long, value_name = "FILE")]
    profile: Option<PathBuf>,
    /// Cycle cost per operator and memory access (TOML).
    #[arg(long, value_name = "FILE")]
    costs: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(required = true, value_name = "INPUT")]
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
    /// Classification cutoffs (TOML).
    #[arg(long, value_name = "FILE")]
    thresholds: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    format: ReportFormat,
    /// Also write one DOT file per function into this directory.
    #[arg(long, value_name = "DIR")]
    dot_dir: Option<PathBuf>,
    /// Report sub-graphs down to this depth below each function.
    #[arg(long, value_name = "N")]
    levels: Option<usize>,
    /// Worker threads.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: u16,
    /// Append the trade-off curve of this function.
    #[arg(long, value_name = "FUNCTION")]
    projection: Option<String>,
    /// Points on the trade-off curve.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(2..))]
    points: u32,
    /// Maximum operations in a flattened graph.
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    node_cap: usize,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(required = true, value_name = "INPUT")]
    inputs: Vec<PathBuf>,
    /// Only this function; all functions otherwise.
    #[arg(long)]
    function: Option<String>,
    #[arg(long, value_enum, default_value_t = GraphFormatArg::Dot)]
    format: GraphFormatArg,
    /// Write one file per function here instead of standard output.
    #[arg(long, value_name = "DIR")]
    dot_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ProjectArgs {
    #[arg(required = true, value_name = "INPUT")]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    function: String,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(2..))]
    points: u32,
    #[arg(long, value_enum, default_value_t = CurveFormat::Csv)]
    format: CurveFormat,
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    node_cap: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Table,
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFormatArg {
    Dot,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum CurveFormat {
    Csv,
    Gnuplot,
    Json,
}

/// Exit status: 0 success, 1 analysis errors, 2 usage or configuration errors.
enum Failure {
    Analysis,
    Usage(String),
}

const SUBCOMMANDS: [&str; 4] = ["analyze", "graph", "project", "help"];

fn main() -> ExitCode {
    let mut args: Vec<String> = std::env::args().collect();
    // `analyze` is the default subcommand.
    if let Some(first) = args.get(1) {
        if !SUBCOMMANDS.contains(&first.as_str())
            && !matches!(first.as_str(), "-h" | "--help" | "-V" | "--version")
        {
            args.insert(1, "analyze".to_string());
        }
    }
    let cli = Cli::parse_from(args);
    let outcome = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Graph(g) => graph(g),
        Command::Project(p) => project(p),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Analysis) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read_text(path: &Path, what: &str) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {what} `{}`: {e}", path.display())))
}

fn load_config(c: &ConfigArgs) -> Result<(CostTable, Profile), Failure> {
    let costs = match &c.costs {
        Some(p) => CostTable::from_toml(&read_text(p, "cost table")?)
            .map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        None => CostTable::default(),
    };
    let profile = match &c.profile {
        Some(p) => Profile::from_toml(&read_text(p, "profile")?)
            .map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        None => Profile::default(),
    };
    Ok((costs, profile))
}

fn read_inputs(paths: &[PathBuf]) -> Result<Vec<SourceFile>, Failure> {
    paths
        .iter()
        .map(|p| {
            Ok(SourceFile {
                path: p.display().to_string(),
                text: read_text(p, "input")?,
            })
        })
        .collect()
}

fn print_diagnostics(diags: &[Diagnostic], files: &[SourceFile]) {
    let sources: BTreeMap<&str, &str> = files
        .iter()
        .map(|f| (f.path.as_str(), f.text.as_str()))
        .collect();
    for d in diags {
        eprint!("{}", d.render(sources.get(d.file.as_str()).copied()));
    }
    if !diags.is_empty() {
        eprintln!("{} error(s)", diags.len());
    }
}

fn graph_file_name(outcome_file: &str, function: &str, multi: bool, ext: &str) -> String {
    if multi {
        let stem = Path::new(outcome_file)
            .file_stem()
            .map_or_else(|| "input".to_string(), |s| s.to_string_lossy().into_owned());
        format!("{stem}_{function}.{ext}")
    } else {
        format!("{function}.{ext}")
    }
}

fn write_graphs(
    dir: &Path,
    graphs: &[(&str, &Hcdfg)],
    multi: bool,
    format: GraphFormat,
) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::Usage(format!("cannot create `{}`: {e}", dir.display())))?;
    let ext = match format {
        GraphFormat::Dot => "dot",
        GraphFormat::Json => "json",
    };
    for (file, h) in graphs {
        let path = dir.join(graph_file_name(file, &h.function, multi, ext));
        fs::write(&path, export_graph(h, format))
            .map_err(|e| Failure::Usage(format!("cannot write `{}`: {e}", path.display())))?;
    }
    Ok(())
}

fn find_function<'a>(
    programs: &'a [(String, Program)],
    name: &str,
) -> Option<(&'a str, &'a Program)> {
    programs
        .iter()
        .find(|(_, p)| p.function(name).is_some())
        .map(|(f, p)| (f.as_str(), p))
}

fn curve_for(
    programs: &[(String, Program)],
    name: &str,
    costs: &CostTable,
    profile: &Profile,
    points: u32,
    node_cap: usize,
) -> Result<Result<TradeoffCurve, Diagnostic>, Failure> {
    let (file, program) = find_function(programs, name)
        .ok_or_else(|| Failure::Usage(format!("function `{name}` not found in the inputs")))?;
    let opts = AnalysisOptions {
        costs: costs.clone(),
        profile: profile.clone(),
        ..AnalysisOptions::default()
    };
    let outcome = analyze_function(file, program, name, &opts);
    let Some(h) = outcome.graph else {
        return Ok(Err(outcome
            .result
            .expect_err("failed build has a diagnostic")));
    };
    Ok(
        tradeoff_curve(&h, costs, profile, points as usize, node_cap).map_err(|e| Diagnostic {
            file: file.to_string(),
            function: Some(name.to_string()),
            line: None,
            column: None,
            category: "projection".into(),
            message: e.to_string(),
        }),
    )
}

fn analyze(a: AnalyzeArgs) -> Result<(), Failure> {
    let (costs, profile) = load_config(&a.config)?;
    let thresholds = match &a.thresholds {
        Some(p) => Thresholds::from_toml(&read_text(p, "thresholds")?)
            .map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        None => Thresholds::default(),
    };
    let files = read_inputs(&a.inputs)?;
    let (programs, parse_failures) = parse_all(&files);
    let opts = AnalysisOptions {
        costs,
        profile,
        thresholds,
        levels: a.levels,
    };
    let outcomes = analyze_programs(&programs, &opts, usize::from(a.jobs));
    let echo = ConfigEcho {
        inputs: files.iter().map(|f| f.path.clone()).collect(),
        profile: a.config.profile.as_ref().map(|p| p.display().to_string()),
        costs_file: a.config.costs.as_ref().map(|p| p.display().to_string()),
        thresholds_file: a.thresholds.as_ref().map(|p| p.display().to_string()),
        options: opts.clone(),
    };
    let mut report = assemble_report(echo, &outcomes, parse_failures);
    if let Some(name) = &a.projection {
        match curve_for(
            &programs,
            name,
            &opts.costs,
            &opts.profile,
            a.points,
            a.node_cap,
        )? {
            Ok(c) => report.projection = Some(c),
            Err(d) => report.failures.push(d),
        }
    }
    if let Some(dir) = &a.dot_dir {
        let graphs: Vec<(&str, &Hcdfg)> = outcomes
            .iter()
            .filter_map(|o| o.graph.as_ref().map(|g| (o.file.as_str(), g)))
            .collect();
        write_graphs(dir, &graphs, files.len() > 1, GraphFormat::Dot)?;
    }
    let format = match a.format {
        ReportFormat::Table => OutputFormat::Table,
        ReportFormat::Json => OutputFormat::Json,
        ReportFormat::Csv => OutputFormat::Csv,
    };
    print!("{}", report.emit(format));
    print_diagnostics(&report.failures, &files);
    if report.failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Analysis)
    }
}

fn graph(g: GraphArgs) -> Result<(), Failure> {
    let files = read_inputs(&g.inputs)?;
    let (programs, mut failures) = parse_all(&files);
    let format = match g.format {
        GraphFormatArg::Dot => GraphFormat::Dot,
        GraphFormatArg::Json => GraphFormat::Json,
    };
    if let Some(name) = &g.function {
        if find_function(&programs, name).is_none() {
            return Err(Failure::Usage(format!(
                "function `{name}` not found in the inputs"
            )));
        }
    }
    let opts = AnalysisOptions::default();
    let mut graphs = Vec::new();
    for (file, program) in &programs {
        for f in &program.functions {
            if g.function.as_ref().is_some_and(|n| *n != f.name) {
                continue;
            }
            let o = analyze_function(file, program, &f.name, &opts);
            match o.graph {
                Some(h) => graphs.push((file.clone(), h)),
                None => failures.extend(o.result.err()),
            }
        }
    }
    graphs.sort_by(|a, b| (&a.1.function, &a.0).cmp(&(&b.1.function, &b.0)));
    match &g.dot_dir {
        Some(dir) => {
            let refs: Vec<(&str, &Hcdfg)> = graphs.iter().map(|(f, h)| (f.as_str(), h)).collect();
            write_graphs(dir, &refs, files.len() > 1, format)?;
        }
        None => {
            for (_, h) in &graphs {
                print!("{}", String::from_utf8_lossy(&export_graph(h, format)));
            }
        }
    }
    print_diagnostics(&failures, &files);
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Analysis)
    }
}

fn project(p: ProjectArgs) -> Result<(), Failure> {
    let (costs, profile) = load_config(&p.config)?;
    let files = read_inputs(&p.inputs)?;
    let (programs, failures) = parse_all(&files);
    if !failures.is_empty() {
        print_diagnostics(&failures, &files);
        return Err(Failure::Analysis);
    }
    match curve_for(
        &programs,
        &p.function,
        &costs,
        &profile,
        p.points,
        p.node_cap,
    )? {
        Ok(c) => {
            let out = match p.format {
                CurveFormat::Csv => c.to_csv(),
                CurveFormat::Gnuplot => c.to_gnuplot(),
                CurveFormat::Json => c.to_json(),
            };
            print!("{out}");
            Ok(())
        }
        Err(d) => {
            print_diagnostics(&[d], &files);
            Err(Failure::Analysis)
        }
    }
}
