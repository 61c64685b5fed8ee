use std::path::Path;
use std::process::{Command, Output};

fn sublinspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sublinspec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_writes_loadable_matrix() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.txt", "a.bin"] {
        let path = dir.path().join(name);
        let o = sublinspec(&[
            "gen",
            "--kind",
            "planted_rank_k",
            "--n",
            "40",
            "--k",
            "1",
            "--out",
            path_str(&path),
        ]);
        assert!(o.status.success(), "{o:?}");
        let csv = sublinspec(&[
            "estimate",
            "--matrix",
            path_str(&path),
            "--s",
            "40",
            "--trials",
            "2",
        ]);
        assert!(csv.status.success());
        // s >= n samples everything: the estimate is exact.
        for line in stdout(&csv).lines().skip(1) {
            let err: f64 = line.split(',').nth(10).unwrap().parse().unwrap();
            assert!(err < 1e-8, "{line}");
        }
    }
}

#[test]
fn estimate_emits_rows_and_summary() {
    let o = sublinspec(&[
        "estimate", "--method", "rownorm", "--kind", "zero", "--n", "30", "--trials", "3",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("experiment_id,method,kind,n,epsilon,s_effective,trial,seed"));
    assert_eq!(lines.len(), 5);
    assert!(lines[4].contains(",summary,"));
    assert!(!out.contains('\r') && !out.contains('"'));
}

#[test]
fn output_file_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let o = sublinspec(&[
            "estimate",
            "--method",
            "sketch",
            "--kind",
            "planted_rank_k",
            "--n",
            "64",
            "--eps",
            "0.3",
            "--seed",
            "9",
            "--trials",
            "3",
            "--norm-mode",
            "jl",
            "--out",
            path_str(p),
        ]);
        assert!(o.status.success());
        assert!(o.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(
        &cfg,
        "# eigvec run\nkind=all_ones\nn=50\nepsilon=0.2\ntrials=2\n",
    )
    .unwrap();
    let o = sublinspec(&["eigvec", "--config", path_str(&cfg), "--trials", "3"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 5);
    assert!(out
        .lines()
        .nth(1)
        .unwrap()
        .contains(",eigvec,all_ones,50,0.2,"));
}

#[test]
fn check_and_sweep() {
    let o = sublinspec(&[
        "check",
        "--level",
        "16",
        "--kind",
        "planted_rank_k",
        "--n",
        "64",
        "--s",
        "32",
        "--trials",
        "2",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 4);
    let o = sublinspec(&[
        "sweep",
        "--eps-list",
        "0.2,0.4",
        "--s-list",
        "8,16",
        "--kind",
        "identity",
        "--n",
        "32",
        "--trials",
        "2",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.matches("experiment_id").count(), 1);
    assert_eq!(out.lines().count(), 1 + 4 * 3);
}

#[test]
fn exit_codes() {
    assert_eq!(
        sublinspec(&["estimate", "--eps", "1.5"]).status.code(),
        Some(2)
    );
    assert_eq!(
        sublinspec(&["estimate", "--kind", "bogus"]).status.code(),
        Some(2)
    );
    assert_eq!(
        sublinspec(&["estimate", "--method", "nope"]).status.code(),
        Some(2)
    );
    let o = sublinspec(&["check", "--kind", "zero", "--n", "5000", "--trials", "1"]);
    assert_eq!(o.status.code(), Some(3));
    let o = sublinspec(&["estimate", "--matrix", "/nonexistent/matrix.txt"]);
    assert_eq!(o.status.code(), Some(1));
}
