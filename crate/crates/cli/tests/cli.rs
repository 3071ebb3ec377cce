use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const TWO_FUNCTIONS: &str = "int scale(int a[4], int k)\n{\n    int i;\n    int s;\n\n    s = 0;\n    for (i = 0; i < 4; i++)\n        s = s + a[i] * k;\n    return s;\n}\n\nvoid copy(int a[4], int b[4])\n{\n    int i;\n\n    for (i = 0; i < 4; i++)\n        b[i] = a[i];\n}\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hcdfg"))
}

fn corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn corpus_args() -> Vec<String> {
    let mut files: Vec<String> = std::fs::read_dir(corpus())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "c"))
        .map(|p| p.display().to_string())
        .collect();
    files.sort();
    files.push("--profile".into());
    files.push(corpus().join("smartcam.profile.toml").display().to_string());
    files
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn clean_file_reports_every_function() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "two.c", TWO_FUNCTIONS);
    let o = run(&[f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("Function"));
    assert!(lines[0].contains("gamma") && lines[0].contains("MOM") && lines[0].contains("COM"));
    assert_eq!(lines.len(), 3, "{out}");
    assert!(out.contains("scale") && out.contains("copy"));
}

#[test]
fn pointer_is_an_analysis_error_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "ptr.c",
        "int ok(int a)\n{\n    return a;\n}\n\nint bad(int *p)\n{\n    return 0;\n}\n",
    );
    let o = run(&[f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("error[unsupported]"), "{err}");
    assert!(err.contains("ptr.c:6:"), "{err}");
    assert!(err.contains('^'), "{err}");
}

#[test]
fn failing_function_does_not_hide_clean_ones() {
    let dir = tempfile::tempdir().unwrap();
    let src = "void spin(int a[4])\n{\n    int i;\n\n    i = 0;\n    while (a[i] != 0)\n        i++;\n}\n\nint twice(int a)\n{\n    return a + a;\n}\n";
    let f = write(dir.path(), "mixed.c", src);
    let o = run(&[f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("twice"));
    let err = stderr(&o);
    assert!(
        err.contains("mixed.c:6:5") && err.contains("trips"),
        "{err}"
    );
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "two.c", TWO_FUNCTIONS);
    let path = f.to_str().unwrap();
    assert_eq!(run(&[path, "--format", "xml"]).status.code(), Some(2));
    assert_eq!(run(&[path, "--jobs", "0"]).status.code(), Some(2));
    assert_eq!(
        run(&[dir.path().join("missing.c").to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    let bad = write(dir.path(), "bad.toml", "[\"scale/loop@7\"]\ntrips = -1\n");
    assert_eq!(
        run(&[path, "--profile", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    let th = write(dir.path(), "th.toml", "gamma_hi = 3\n");
    assert_eq!(
        run(&[path, "--thresholds", th.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    let o = run(&[path, "--projection", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope"));
    assert_eq!(
        run(&["project", path, "--function", "nope"]).status.code(),
        Some(2)
    );
}

#[test]
fn projection_appends_curve_rows() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "two.c", TWO_FUNCTIONS);
    let o = run(&[f.to_str().unwrap(), "--projection", "copy", "--points", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let csv: Vec<&str> = out
        .lines()
        .skip_while(|l| !l.starts_with("budget,"))
        .collect();
    assert_eq!(csv.len(), 6, "{out}");
    assert!(out.contains("copy"));

    let o = run(&[
        "project",
        f.to_str().unwrap(),
        "--function",
        "copy",
        "--points",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 6);
    let last = out.lines().last().unwrap();
    let fields: Vec<&str> = last.split(',').collect();
    assert!(
        fields[1..4].iter().all(|v| v.parse::<u32>().unwrap() <= 1),
        "{last}"
    );
}

#[test]
fn json_report_has_config_echo_and_levels() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "two.c", TWO_FUNCTIONS);
    let o = run(&[f.to_str().unwrap(), "--format", "json", "--levels", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("\"tool_version\"") && out.contains("\"config\""));
    assert!(
        out.contains("\"levels\"") && out.contains("scale/loop@7"),
        "{out}"
    );
    let report = hcdfg::driver::Report::from_json(&out).unwrap();
    assert_eq!(report.functions.len(), 2);
    assert_eq!(report.to_json(), out);
}

#[test]
fn graph_subcommand_writes_dot_files() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "two.c", TWO_FUNCTIONS);
    let out_dir = dir.path().join("dots");
    let o = bin()
        .args(["graph", f.to_str().unwrap(), "--dot-dir"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in ["scale.dot", "copy.dot"] {
        let text = std::fs::read_to_string(out_dir.join(name)).unwrap();
        assert!(text.starts_with("digraph"));
    }
    let o = run(&[
        "graph",
        f.to_str().unwrap(),
        "--function",
        "copy",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let h = hcdfg::hcdfg::import_graph(&o.stdout).unwrap();
    assert_eq!(h.function, "copy");
}

#[test]
fn corpus_output_is_byte_identical_across_runs_and_jobs() {
    let args = corpus_args();
    let base: Vec<&str> = args.iter().map(String::as_str).collect();
    let mut outputs = Vec::new();
    for jobs in ["1", "1", "3", "8"] {
        for format in ["table", "json", "csv"] {
            let mut a = base.clone();
            a.extend(["--jobs", jobs, "--format", format, "--levels", "2"]);
            let o = run(&a);
            assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
            outputs.push((format, o.stdout));
        }
    }
    for chunk in outputs.chunks(3).skip(1) {
        for (i, (format, bytes)) in chunk.iter().enumerate() {
            assert_eq!(bytes, &outputs[i].1, "{format} output changed");
        }
    }
}

#[test]
fn analyze_is_the_default_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "two.c", TWO_FUNCTIONS);
    let a = run(&[f.to_str().unwrap()]);
    let b = run(&["analyze", f.to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
