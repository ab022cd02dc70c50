use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str], config: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pairindex"));
    cmd.args(args).arg("--out").arg(dir.join("out"));
    if let Some(text) = config {
        let path = dir.join("run.toml");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn atomic_limit_chern_is_zero_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["chern", "--size", "10"], Some("model = \"haldane\"\nt = 0.0\nt_prime = 0.0\nlambda_v = 1.0\n"));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&dir.path().join("out/chern.json"));
    assert_eq!(r["report"]["index"]["chern"], 0);
    assert_eq!(r["report"]["k_space"]["chern"], 0);
    assert!(r["report"]["local_chern_marker"].as_f64().unwrap().abs() < 1e-9);
    assert!(r["report"]["kubo_hall"].as_f64().unwrap().abs() < 1e-9);
    assert!(dir.path().join("out/a_spectrum.csv").exists());
}

#[test]
fn provenance_block_is_complete() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["spectrum", "--size", "6", "--seed", "42"], None);
    assert_eq!(code(&o), 0);
    let p = read_json(&dir.path().join("out/provenance.json"));
    assert_eq!(p["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(p["seed"], 42);
    assert_eq!(p["config"]["size"], 6);
    assert_eq!(p["config"]["model"], "haldane");
    let r = read_json(&dir.path().join("out/spectrum.json"));
    assert_eq!(r["provenance"], p);
    let csv = std::fs::read_to_string(dir.path().join("out/spectrum_open.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("index,energy"));
    assert_eq!(csv.lines().count(), 1 + 72);
}

#[test]
fn gapless_haldane_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["chern", "--size", "8"], Some("model = \"haldane\"\nt_prime = 0.0\n"));
    assert_eq!(code(&o), 3);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["chern"], Some("model = \"haldane\"\nbogus = 1\n"))), 2);
    assert_eq!(code(&run(dir.path(), &["chern", "--delta", "1.5"], None)), 2);
    assert_eq!(code(&run(dir.path(), &["z2"], Some("model = \"haldane\"\n"))), 2);
    assert_eq!(code(&run(dir.path(), &["sweep"], None)), 2);
    assert_eq!(code(&run(dir.path(), &["no-such-command"], None)), 2);
}

#[test]
fn kane_mele_z2_and_ebz() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["z2", "--size", "12"], Some("model = \"kane_mele\"\nlambda_r = 0.05\n"));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r = read_json(&dir.path().join("out/z2.json"));
    assert_eq!(r["report"]["index"]["z2"], 1);
    assert_eq!(r["report"]["ebz"]["z2"], 1);
    let o = run(dir.path(), &["ebz-z2"], None);
    assert_eq!(code(&o), 0);
    assert_eq!(read_json(&dir.path().join("out/ebz_z2.json"))["report"]["z2"], 1);
}

#[test]
fn kspace_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["kspace"], Some("model = \"haldane\"\ngrid_n = 12\n"));
    assert_eq!(code(&o), 0);
    let r = read_json(&dir.path().join("out/kspace.json"));
    assert_eq!(r["report"]["chern"]["chern"], 1);
    assert_eq!(r["report"]["gauge_patch_passed"], true);
    let curv = std::fs::read_to_string(dir.path().join("out/berry_curvature.csv")).unwrap();
    assert_eq!(curv.lines().count(), 1 + 144);
}

// The literal index and the literal area formula carry opposite orientations
// to the other estimators, so these subcommands report disagreement.
#[test]
fn orientation_mismatch_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["chern", "--size", "12"], None);
    assert_eq!(code(&o), 4);
    let r = read_json(&dir.path().join("out/chern.json"));
    assert_eq!(r["report"]["index"]["chern"], -1);
    assert_eq!(r["report"]["agreement"]["local_chern_marker"], true);
    assert_eq!(r["report"]["agreement"]["index"], false);
    let o = run(dir.path(), &["connes-check"], Some("model = \"haldane\"\nconnes_radius = 64\n"));
    assert_eq!(code(&o), 4);
}

#[test]
fn sweep_resumes_and_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "model = \"kane_mele\"\nlambda_r = 0.05\nsize = 6\nseed = 5\n[sweep]\nparameter = \"disorder_w\"\nvalues = [0.0, 0.2]\nrealizations = 2\naudit_fraction = 0.5\n";
    let o = run(dir.path(), &["sweep", "--threads", "2"], Some(cfg));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv_path = dir.path().join("out/sweep.csv");
    let first = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(first.lines().count(), 5);
    let summary = read_json(&dir.path().join("out/sweep_summary.json"));
    assert_eq!(summary["constant_on_unflagged_runs"], true);

    // rerunning finds every record present and leaves the file alone
    assert_eq!(code(&run(dir.path(), &["sweep"], Some(cfg))), 0);
    assert_eq!(std::fs::read_to_string(&csv_path).unwrap(), first);

    let strip = |s: &str| -> Vec<String> {
        s.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect()
    };
    let other = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(other.path(), &["sweep", "--threads", "1"], Some(cfg))), 0);
    let again = std::fs::read_to_string(other.path().join("out/sweep.csv")).unwrap();
    assert_eq!(strip(&again), strip(&first));
}
