//! The `hlab` binary and its configuration files.

use std::path::{Path, PathBuf};
use std::process::Command;

use heisenberg_lab::cli::ExperimentConfig;

fn hlab(out: &Path, args: &[&str]) -> (i32, String, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_hlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs");
    (
        o.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&o.stdout).into_owned(),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

const SMALL_CASCADE: &[&str] = &[
    "--override",
    "cascade.grid.bounds=[[-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]]",
    "--override",
    "cascade.grid.cells=[12, 12, 12]",
    "--override",
    "cascade.u0.radius=0.6",
    "--override",
    "cascade.t_final=0.1",
    "--override",
    "cascade.samples=4",
    "--override",
    "cascade.probes=[{x=[0.25], y=[0.0], l=0.0}]",
];

#[test]
fn bundled_configs_load() {
    for (name, c) in [("subcritical", 0.5), ("supercritical", 4.0), ("critical", 1.0)] {
        let path = configs_dir().join(format!("{name}.cfg"));
        let cfg = ExperimentConfig::load(Some(&path), &[]).unwrap();
        assert_eq!(cfg.cascade.c, c);
        cfg.cascade.validate().unwrap();
        assert_eq!(cfg.cascade.grid, heisenberg_lab::grid::GridSpec::reference());
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }
}

#[test]
fn verify_sabotage_and_empty_plan() {
    let dir = tempfile::tempdir().unwrap();
    let small = ["--override", "verify.points=5", "--override", "verify.sobolev_profiles=2"];
    let (code, out, _) = hlab(dir.path(), &[&["verify"], &small[..]].concat());
    assert_eq!(code, 0, "{out}");
    let lines = std::fs::read_to_string(dir.path().join("verify.jsonl")).unwrap();
    assert!(lines.lines().next().unwrap().contains("config_hash"));
    assert!(dir.path().join("resolved_config.toml").exists());

    let (code, out, _) = hlab(
        dir.path(),
        &[&["verify", "--override", "verify.dalpha_constant_offset=0.1"], &small[..]].concat(),
    );
    assert_ne!(code, 0, "{out}");
    assert!(out.contains("FAILED"));

    let empty = [
        "verify",
        "--override",
        "verify.points=0",
        "--override",
        "verify.alphas=[]",
        "--override",
        "verify.lambdas=[]",
        "--override",
        "verify.radial_alphas=[]",
        "--override",
        "verify.sobolev_profiles=0",
        "--override",
        "verify.moser_betas=[]",
        "--override",
        "verify.divergence_eps=[]",
    ];
    let (code, out, _) = hlab(dir.path(), &empty);
    assert_eq!(code, 0);
    assert!(out.contains("warning") && out.contains("0 records"));
}

#[test]
fn hardy_needs_two_levels() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = hlab(dir.path(), &["hardy", "--override", "hardy.levels=[12]"]);
    assert_ne!(code, 0);
    assert!(err.contains("at least 2"));
}

#[test]
fn hardy_table_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = hlab(dir.path(), &["hardy", "--override", "hardy.levels=[12, 16, 20]"]);
    assert_eq!(code, 0, "{out}");
    let csv = std::fs::read_to_string(dir.path().join("hardy.csv")).unwrap();
    let est: Vec<f64> = csv
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(est.len(), 3);
    assert!(est.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{est:?}");
    assert!(est.iter().all(|&e| e >= 1.0 - 1e-3));
}

#[test]
fn kernel_rejects_too_small_times() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = hlab(
        dir.path(),
        &[
            "kernel",
            "--override",
            "kernel.grid.cells=[16, 16, 16]",
            "--override",
            "kernel.times=[0.001]",
        ],
    );
    assert_ne!(code, 0);
    assert!(err.contains("precondition"), "{err}");
}

#[test]
fn cascade_outputs_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [&["cascade", "--override", "cascade.c=2"], SMALL_CASCADE].concat();
    let (ca, out, _) = hlab(a.path(), &[&args[..], &["--threads", "1"]].concat());
    assert_eq!(ca, 0, "{out}");
    let (cb, _, _) = hlab(b.path(), &[&args[..], &["--threads", "4"]].concat());
    assert_eq!(cb, 0);
    for f in ["cascade.json", "cascade_probes.csv", "cascade_levels.csv", "u_n1000.bin", "u_n1000.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
    let hash = ExperimentConfig::load(None, &["cascade.c=2".into()]).unwrap();
    let csv = std::fs::read_to_string(a.path().join("cascade_probes.csv")).unwrap();
    assert!(csv.starts_with("# schema_version=1 config_hash="));
    assert_ne!(hash.hash().unwrap(), "");

    let (code, out, _) = hlab(a.path(), &["report"]);
    assert!(code == 0 || code == 2, "{out}");
    assert!(out.contains("verdict"));
}

#[test]
fn bad_override_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = hlab(dir.path(), &["verify", "--override", "novalue"]);
    assert_ne!(code, 0);
    assert!(err.contains("KEY=VALUE"));
}
