use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn splitrank() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_splitrank"));
    cmd.env_remove("PAGERANK_THREADS");
    cmd
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().expect("binary runs");
    (
        status.code().expect("exit code"),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

/// Two disjoint 2-cycles: PageRank is uniform for every alpha.
fn two_cycles(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("cycles.mtx");
    fs::write(
        &path,
        "%%MatrixMarket matrix coordinate pattern general\n4 4 4\n1 2\n2 1\n3 4\n4 3\n",
    )
    .unwrap();
    path
}

#[test]
fn fixture_table_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let input = two_cycles(dir.path());
    let (code, out, err) = run(splitrank()
        .arg("--input")
        .arg(&input)
        .args(["--methods", "power,oracle", "--alpha", "0.85,0.99", "--format", "csv"]));
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("n=4 nnz=4"), "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "matrix,alpha,method,mv,cpu,it,speedup,converged,residual");
    assert_eq!(lines.len(), 5);
    assert!(lines[1..].iter().all(|l| l.starts_with("cycles,") && l.contains(",true,")));
}

#[test]
fn out_dir_files_and_overwrite_guard() {
    let dir = tempfile::tempdir().unwrap();
    let input = two_cycles(dir.path());
    let out = dir.path().join("results");
    let args = |cmd: &mut Command| {
        cmd.arg("--input")
            .arg(&input)
            .args(["--methods", "power,miio", "--format", "csv,md,json", "--out"])
            .arg(&out);
    };
    let mut first = splitrank();
    args(&mut first);
    let (code, _, err) = run(&mut first);
    assert_eq!(code, 0, "{err}");
    for name in ["results.csv", "results.md", "results.json"] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("results.json")).unwrap()).unwrap();
    assert!(json.is_array() || json.is_object());
    let histories: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| {
            let name = e.unwrap().file_name().to_string_lossy().into_owned();
            name.starts_with("history_").then_some(name)
        })
        .collect();
    assert_eq!(histories.len(), 2, "{histories:?}");
    let text = fs::read_to_string(out.join(&histories[0])).unwrap();
    assert_eq!(text.lines().next(), Some("mv,residual"));

    let mut again = splitrank();
    args(&mut again);
    let (code, _, err) = run(&mut again);
    assert_eq!(code, 1, "{err}");

    let mut forced = splitrank();
    args(&mut forced);
    forced.arg("--force");
    let (code, _, err) = run(&mut forced);
    assert_eq!(code, 0, "{err}");
}

#[test]
fn bad_arguments_exit_one() {
    for args in [
        vec!["--synthetic", "n=100", "--methods", "nope"],
        vec!["--synthetic", "deg=3"],
        vec!["--synthetic", "n=100", "--alpha", "1.5"],
        vec!["--synthetic", "n=100", "--format", "xml"],
        vec!["--input", "/nonexistent/graph.mtx"],
        vec!["--no-such-flag"],
        vec![],
    ] {
        let (code, _, err) = run(splitrank().args(&args));
        assert_eq!(code, 1, "{args:?}: {err}");
        assert!(!err.is_empty());
    }
}

#[test]
fn help_exits_zero() {
    let (code, out, _) = run(splitrank().arg("--help"));
    assert_eq!(code, 0);
    assert!(out.contains("--synthetic"));
}

#[test]
fn iteration_cap_exits_two() {
    let (code, out, err) = run(splitrank().args([
        "--synthetic",
        "n=500,deg=5,dangling=0.1,seed=3",
        "--methods",
        "power,iio",
        "--max-outer",
        "1",
    ]));
    assert_eq!(code, 2, "{err}");
    assert!(out.contains(",false,"));
}

#[test]
fn trace_files_for_hybrids() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(splitrank()
        .args([
            "--synthetic",
            "n=2000,deg=6,dangling=0.15,seed=5,model=hosts",
            "--methods",
            "arnoldi-miio,garnoldi-miio",
            "--trace",
            "--out",
        ])
        .arg(dir.path()));
    assert_eq!(code, 0, "{err}");
    let traces: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("trace_"))
        .collect();
    assert_eq!(traces.len(), 2, "{traces:?}");
    for name in traces {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.lines().count() >= 2);
    }
}

#[test]
fn single_thread_matches_default() {
    let args = [
        "--synthetic",
        "n=3000,deg=6,dangling=0.1,seed=9",
        "--methods",
        "iio,arnoldi-miio",
        "--format",
        "csv",
    ];
    let strip = |out: &str| -> Vec<String> {
        out.lines()
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                format!("{},{},{},{},{},{}", f[0], f[1], f[2], f[3], f[5], f[8])
            })
            .collect()
    };
    let (c1, o1, e1) = run(splitrank().args(args));
    let (c2, o2, e2) = run(splitrank().args(args).env("PAGERANK_THREADS", "1"));
    assert_eq!(c1, 0, "{e1}");
    assert_eq!(c2, 0, "{e2}");
    assert_eq!(strip(&o1), strip(&o2));

    let (code, _, _) = run(splitrank().args(args).env("PAGERANK_THREADS", "0"));
    assert_eq!(code, 1);
}
