use std::fs;
use std::path::Path;
use std::process::Command;

fn kvn(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_kvn"))
        .args(args)
        .env_remove("KVN_OUT_DIR")
        .output()
        .expect("spawn kvn");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL_BURGERS: &str = r#"
experiment = "burgers1d"
seed = 5
[burgers1d]
n = 32
[burgers1d.time]
dt = 0.002
save_times = [0.0, 0.02, 0.04]
[burgers1d.readout]
shots = 500
"#;

#[test]
fn solve_writes_artifacts_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "b.toml", SMALL_BURGERS);
    let out = dir.path().join("out");
    let (code, stdout, stderr) = kvn(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("steps"));
    for f in ["field_t0.000000.csv", "field_t0.040000.csv", "summary.csv", "stats.csv", "manifest.toml"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 5"));
    assert!(manifest.contains("config_sha256"));
    assert!(manifest.contains("status = \"ok\""));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "b.toml", SMALL_BURGERS);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for o in [&a, &b] {
        let (code, _, e) = kvn(&["solve", "--config", &cfg, "--out", o.to_str().unwrap(), "--threads", "2"]);
        assert_eq!(code, 0, "{e}");
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for n in names.iter().filter(|n| n.to_string_lossy().ends_with(".csv")) {
        assert_eq!(fs::read(a.join(n)).unwrap(), fs::read(b.join(n)).unwrap(), "{n:?}");
    }
}

#[test]
fn seed_flag_changes_sampled_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "b.toml", SMALL_BURGERS);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    kvn(&["solve", "--config", &cfg, "--out", a.to_str().unwrap()]);
    kvn(&["solve", "--config", &cfg, "--out", b.to_str().unwrap(), "--seed", "99"]);
    assert_ne!(fs::read(a.join("stats.csv")).unwrap(), fs::read(b.join("stats.csv")).unwrap());
    assert_eq!(fs::read(a.join("field_t0.040000.csv")).unwrap(), fs::read(b.join("field_t0.040000.csv")).unwrap());
}

#[test]
fn env_var_sets_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.toml", "experiment = \"stencil\"\n");
    let target = dir.path().join("from_env");
    let status = Command::new(env!("CARGO_BIN_EXE_kvn"))
        .args(["report", "--config", &cfg])
        .env("KVN_OUT_DIR", &target)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let table = fs::read_to_string(target.join("stencil.csv")).unwrap();
    assert!(table.starts_with("K,R,offset,coefficient\n"));
    assert!(table.contains("4,2,-2,1.0000000000000000e0"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = out.to_str().unwrap();
    let unknown = write_config(dir.path(), "u.toml", "experiment = \"burgers1d\"\n[burgers1d]\nbogus = 1\n");
    assert_eq!(kvn(&["solve", "--config", &unknown, "--out", o]).0, 2);
    let wrong_verb = write_config(dir.path(), "w.toml", "experiment = \"stencil\"\n");
    assert_eq!(kvn(&["solve", "--config", &wrong_verb, "--out", o]).0, 2);
    let bad_value = write_config(dir.path(), "v.toml", "experiment = \"burgers1d\"\n[burgers1d]\nre = -3.0\n");
    assert_eq!(kvn(&["solve", "--config", &bad_value, "--out", o]).0, 2);
    assert_eq!(kvn(&["solve"]).0, 2);
}

#[test]
fn missing_config_file_exits_4() {
    assert_eq!(kvn(&["solve", "--config", "/nonexistent/kvn.toml"]).0, 4);
}

#[test]
fn divergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "d.toml",
        "experiment = \"burgers1d\"\n[burgers1d]\nn = 64\nre = 1.0\namplitude = 1e3\n[burgers1d.time]\ndt = 0.1\nsave_times = [50.0]\n",
    );
    let out = dir.path().join("o");
    let (code, _, stderr) = kvn(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 3, "{stderr}");
    assert!(fs::read_to_string(out.join("manifest.toml")).unwrap().contains("failed (exit 3)"));
}

#[test]
fn compile_zero_generator_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "z.toml",
        "experiment = \"kraus-compile\"\n[kraus-compile]\nmodes = 3\nlevels = 2\nrank = 2\nsource = \"zero\"\n",
    );
    let out = dir.path().join("o");
    let (code, _, stderr) = kvn(&["compile", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    assert!(out.join("tree/node_root.bin").exists());
    assert!(fs::read_to_string(out.join("verification.txt")).unwrap().ends_with("PASS\n"));
}

#[test]
fn broken_completeness_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "f.toml",
        "experiment = \"kraus-compile\"\n[kraus-compile]\nmodes = 3\nlevels = 2\nrank = 4\nfault = \"break-completeness\"\n",
    );
    let out = dir.path().join("o");
    let (code, _, stderr) = kvn(&["compile", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 5, "{stderr}");
    assert!(fs::read_to_string(out.join("verification.txt")).unwrap().contains("FAIL"));
}

#[test]
fn rank_report_lists_4l() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "r.toml", "experiment = \"rank-report\"\n");
    let out = dir.path().join("o");
    assert_eq!(kvn(&["report", "--config", &cfg, "--out", out.to_str().unwrap()]).0, 0);
    let csv = fs::read_to_string(out.join("rank_report.csv")).unwrap();
    let row = csv.lines().find(|l| l.starts_with("64,")).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!((cols[10], cols[11]), ("256", "8"));
}

#[test]
fn example_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in fs::read_dir(root).unwrap() {
        let text = fs::read_to_string(e.unwrap().path()).unwrap();
        kvn_core::harness::ExperimentConfig::parse(&text).unwrap();
        n += 1;
    }
    assert_eq!(n, 7);
}
