use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pk-check"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().unwrap();
    (status.code().unwrap(), String::from_utf8(stdout).unwrap(), String::from_utf8(stderr).unwrap())
}

#[test]
fn inc_inv_proves_ctr3_ne5() {
    let (code, out, _) = run(bin().args(["--mode", "inc-inv", "--timeout", "100"]).arg(fixture("ctr3_ne5.lus")));
    assert_eq!(code, 0);
    assert!(out.starts_with("VALID k="), "{out}");
}

#[test]
fn counterexample_output_and_exit_code() {
    let (code, out, _) = run(bin().args(["--mode", "k-induct"]).arg(fixture("inc_lt2.lus")));
    assert_eq!(code, 10);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines, ["INVALID k=2", "step 0: ok=true x=0", "step 1: ok=true x=1", "step 2: ok=false x=2"]);
}

#[test]
fn missing_file() {
    let (code, _, err) = run(bin().arg("definitely_missing.lus"));
    assert_eq!(code, 2);
    assert!(err.contains("definitely_missing.lus"), "{err}");
}

#[test]
fn frontend_error() {
    let (code, _, err) = run(bin().arg(fixture("bad_type.lus")));
    assert_eq!(code, 2);
    assert!(err.contains("type error"), "{err}");
}

#[test]
fn usage_errors() {
    assert_eq!(run(bin().args(["--mode", "fast"]).arg(fixture("inc_lt2.lus"))).0, 1);
    assert_eq!(run(bin().args(["--bogus-flag"]).arg(fixture("inc_lt2.lus"))).0, 1);
    assert_eq!(run(&mut bin()).0, 1);
}

#[test]
fn unknown_at_max_k() {
    let (code, out, _) = run(bin().args(["--mode", "k-induct", "--max-k", "5"]).arg(corpus_dir().join("ctr3_neg.lus")));
    assert_eq!(code, 20);
    assert_eq!(out.trim(), "UNKNOWN reason=max-k");
}

#[test]
fn broken_solver_command() {
    let (code, out, _) = run(bin().args(["--solver-cmd", "/nonexistent/z3"]).arg(fixture("inc_lt2.lus")));
    assert_eq!(code, 3);
    assert!(out.contains("solver-error"), "{out}");
}

#[test]
fn per_property_lines() {
    let (code, out, _) = run(bin().args(["--max-k", "10"]).arg(fixture("two_props.lus")));
    assert_eq!(code, 10);
    assert!(out.contains("property ok1: VALID"), "{out}");
    assert!(out.contains("property ok2: INVALID k=3"), "{out}");
}

#[test]
fn worst_exit_code_over_files() {
    let (code, out, _) = run(bin().arg(fixture("ctr3_ne5.lus")).arg(fixture("inc_lt2.lus")));
    assert_eq!(code, 10);
    assert!(out.contains("VALID") && out.contains("INVALID"));
}

#[test]
fn tsv_format_and_stats_file() {
    let dir = tempfile::tempdir().unwrap();
    let stats = dir.path().join("stats.tsv");
    for _ in 0..2 {
        let (code, out, _) = run(bin().args(["--format", "tsv", "--stats"]).arg(&stats).arg(fixture("inc_lt2.lus")));
        assert_eq!(code, 10);
        let fields: Vec<&str> = out.trim_end().split('\t').collect();
        assert_eq!(fields.len(), 9);
        assert_eq!(&fields[1..4], ["inc-inv", "invalid", "2"]);
    }
    let text = fs::read_to_string(&stats).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "file\tmode\tverdict\tk\ttime_s\tinv_emitted\tinv_used\tchecks_base\tchecks_step");
    assert_eq!(lines.len(), 3, "header once, then appended rows:\n{text}");
    let (code, summary, _) = run(bin().arg("summary").arg(&stats));
    assert_eq!(code, 0);
    assert!(summary.lines().any(|l| l.starts_with("inc-inv\t2\t2\t100.0%")), "{summary}");
}

#[test]
fn dump_invariants_logs_messages() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("inv.txt");
    let (code, _, _) = run(bin().args(["--mode", "inc-inv", "--dump-invariants"]).arg(&log).arg(corpus_dir().join("ctr3_neg.lus")));
    assert_eq!(code, 0);
    let text = fs::read_to_string(&log).unwrap();
    assert!(text.contains("proved_at_k"), "{text}");
}

fn precision(summary: &str, mode: &str) -> f64 {
    let line = summary.lines().find(|l| l.starts_with(&format!("{mode}\t"))).unwrap();
    line.split('\t').nth(3).unwrap().trim_end_matches('%').parse().unwrap()
}

#[test]
fn bench_over_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.tsv");
    let (code, stdout, _) = run(bin().arg("bench").arg(corpus_dir()).arg("--out").arg(&out).args(["--max-k", "30", "--timeout", "60"]));
    assert_eq!(code, 0);
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 36);
    assert!(precision(&stdout, "inc-inv") > precision(&stdout, "k-induct"), "{stdout}");

    let (code, summary, _) = run(bin().arg("summary").arg(&out));
    assert_eq!(code, 0);
    assert_eq!(precision(&summary, "inc-inv"), 100.0);
    assert_eq!(precision(&summary, "no-inc-inv"), 100.0);
    assert!(precision(&summary, "k-induct") < 100.0);
}

#[test]
fn bench_on_empty_dir() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let out = dir.path().join("bench.tsv");
    let (code, _, err) = run(bin().arg("bench").arg(&empty).arg("--out").arg(&out));
    assert_eq!(code, 0);
    assert!(err.contains("no .lus files"), "{err}");
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 1);
}

#[test]
fn bench_records_broken_files_as_unknown() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(fixture("bad_type.lus"), dir.path().join("bad.lus")).unwrap();
    fs::copy(fixture("inc_lt2.lus"), dir.path().join("inc.lus")).unwrap();
    let out = dir.path().join("bench.tsv");
    let (code, _, _) = run(bin().arg("bench").arg(dir.path()).arg("--out").arg(&out).args(["--modes", "k-induct"]));
    assert_eq!(code, 0);
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][2], "unknown");
    assert_eq!(rows[1][2], "invalid");
}

#[test]
fn same_verdicts_across_runs() {
    let verdict = || run(bin().args(["--mode", "no-inc-inv", "--format", "tsv"]).arg(corpus_dir().join("sync.lus"))).1.split('\t').nth(2).unwrap().to_string();
    assert_eq!(verdict(), "valid");
    assert_eq!(verdict(), "valid");
}
