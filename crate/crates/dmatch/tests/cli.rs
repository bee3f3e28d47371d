use std::path::Path;
use std::process::{Command, Output};

fn dmatch(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dmatch")).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn gen(dir: &Path) {
    let o = dmatch(dir, &["gen", "--n", "12", "--r", "8", "--rho0", "0.8", "--rhoe", "0.05", "--seed", "7", "--out", "inst"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn gen_writes_instance_files() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path());
    for f in ["graph.txt", "gt.txt", "cover_sparse.txt", "cover_dense.txt"] {
        assert!(dir.path().join("inst").join(f).is_file(), "{f}");
    }
    let first = std::fs::read_to_string(dir.path().join("inst/graph.txt")).unwrap();
    let again = tempfile::tempdir().unwrap();
    gen(again.path());
    assert_eq!(std::fs::read_to_string(again.path().join("inst/graph.txt")).unwrap(), first);
}

#[test]
fn solve_then_score() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path());
    let o = dmatch(
        dir.path(),
        &["solve", "--input", "inst/graph.txt", "--cover", "inst/cover_dense.txt", "--m", "16", "--trace", "trace.csv", "--threads", "2"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("converged true"));
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "iter,node,factor_residual,max_consensus_residual");
    let o = dmatch(dir.path(), &["score", "--solution", "solution.txt", "--gt", "inst/gt.txt"]);
    assert!(o.status.success());
    let err: f64 = stdout(&o).trim().strip_prefix("iou_error ").unwrap().parse().unwrap();
    assert!((0.0..=0.05).contains(&err), "{err}");
}

#[test]
fn solve_global_variants() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path());
    let o = dmatch(dir.path(), &["solve-global", "--input", "inst/graph.txt", "--m", "16", "--out", "g.txt"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = dmatch(
        dir.path(),
        &["solve-global", "--input", "inst/graph.txt", "--cover", "inst/cover_sparse.txt", "--sparse", "--m", "16", "--out", "gs.txt"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = dmatch(dir.path(), &["solve-global", "--input", "inst/graph.txt", "--sparse"]);
    assert!(!o.status.success());
}

#[test]
fn cover_verdicts_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path());
    let o = dmatch(dir.path(), &["cover", "--input", "inst/graph.txt", "--cover", "inst/cover_sparse.txt", "--nerve", "nerve.txt"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("h1_rank 0") && out.contains("joint_normal") && out.contains("verdict accept"), "{out}");
    assert!(std::fs::read_to_string(dir.path().join("nerve.txt")).unwrap().contains("triangles 1"));

    let o = dmatch(dir.path(), &["cover", "--input", "inst/graph.txt", "--k", "3", "--out", "built.txt"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("built.txt").is_file());

    std::fs::write(dir.path().join("tri.txt"), "objects 3\n0 1\n1 1\n2 1\nedges 0\n").unwrap();
    std::fs::write(dir.path().join("hollow.txt"), "cover 3\n0 2 0 1\n1 2 1 2\n2 2 0 2\n").unwrap();
    let o = dmatch(dir.path(), &["cover", "--input", "tri.txt", "--cover", "hollow.txt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("h1_rank 1"));
    let o = dmatch(dir.path(), &["solve", "--input", "tri.txt", "--cover", "hollow.txt", "--m", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = dmatch(dir.path(), &["solve", "--input", "tri.txt", "--cover", "hollow.txt", "--m", "1", "--force", "--max-iters", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn help_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let o = dmatch(dir.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("cover-study"));
}

#[test]
fn errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = dmatch(dir.path(), &["solve", "--input", "missing.txt", "--cover", "missing.txt"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.txt"));
    std::fs::write(dir.path().join("bad.txt"), "objects 2\n0 1\n").unwrap();
    let o = dmatch(dir.path(), &["cover", "--input", "bad.txt"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.txt:"));
}

#[test]
fn grid_and_cover_study_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = dmatch(
        dir.path(),
        &["grid", "--rows", "n=6,8", "--cols", "rho_e=0", "--r", "6", "--repetitions", "1", "--method", "dmatch-sparse", "--threads", "2", "--out-dir", "g"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("g/results.csv").is_file());
    assert!(dir.path().join("g/heatmap_dmatch-sparse.csv").is_file());

    let o = dmatch(
        dir.path(),
        &["cover-study", "--n", "9", "--r", "6", "--rho-in", "0", "--rho-out", "0,0.1", "--mode", "random", "--repetitions", "1", "--out-dir", "c"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("c/heatmap_cover-random.csv").is_file());

    let o = dmatch(dir.path(), &["grid", "--rows", "n=8,6", "--r", "6"]);
    assert_eq!(o.status.code(), Some(1));
    let o = dmatch(dir.path(), &["grid", "--rows", "n=8", "--cols", "rho_e=0", "--repetitions", "0"]);
    assert_eq!(o.status.code(), Some(1));
}
