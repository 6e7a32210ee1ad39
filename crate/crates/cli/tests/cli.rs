use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fkpp_cli::config::Config;
use proptest::prelude::*;

fn fkpp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fkpp"))
        .args(args)
        .env("FKPP_MODE", "reference")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn out_dir(root: &Path, name: &str) -> String {
    format!("--output.dir={}", root.join(name).display())
}

#[test]
fn unknown_key_exits_2_and_names_it() {
    let o = fkpp(&["exact", "--model.gama", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("model.gama"), "{}", stderr(&o));
}

#[test]
fn invalid_value_exits_2_and_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fkpp(&["simulate", "model.gamma=-1", &out_dir(tmp.path(), "x")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("model.gamma"), "{}", stderr(&o));

    let o = fkpp(&["simulate", "numerics.N=abc", &out_dir(tmp.path(), "y")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("numerics.N"), "{}", stderr(&o));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let o = fkpp(&["exact", "-c", "/nonexistent/scenario.cfg"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn override_forms_are_equivalent() {
    let tmp = tempfile::tempdir().unwrap();
    let forms: [&[&str]; 3] = [
        &["--model.a", "0.5"],
        &["--model.a=0.5"],
        &["model.a=0.5"],
    ];
    let mut manifests = Vec::new();
    for (i, form) in forms.iter().enumerate() {
        let dir = tmp.path().join(i.to_string());
        let mut args = vec!["exact"];
        args.extend_from_slice(form);
        let od = format!("output.dir={}", dir.display());
        args.push(&od);
        let o = fkpp(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        let m = Config::load(&dir.join("manifest.txt")).unwrap();
        assert_eq!(m.get("model.a"), "0.5");
        manifests.push(fs::read(dir.join("curve.csv")).unwrap());
    }
    assert!(manifests.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn manifest_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let o = fkpp(&[
        "simulate",
        "--numerics.N=64",
        "--numerics.t_end=2",
        "--numerics.snapshots=0, 1",
        &format!("--output.dir={}", first.display()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["snapshot_t0.csv", "snapshot_t1.csv", "snapshot_t2.csv", "diagnostics.csv", "manifest.txt"] {
        assert!(first.join(f).exists(), "missing {f}");
    }
    let second = tmp.path().join("second");
    let o = fkpp(&[
        "simulate",
        "-c",
        first.join("manifest.txt").to_str().unwrap(),
        &format!("output.dir={}", second.display()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["snapshot_t0.csv", "snapshot_t1.csv", "snapshot_t2.csv", "diagnostics.csv"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn compare_identical_and_different_bundles() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str, extra: &str| {
        let o = fkpp(&[
            "simulate",
            "--numerics.N=64",
            "--numerics.t_end=5",
            extra,
            &out_dir(tmp.path(), name),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        tmp.path().join(name)
    };
    let a = run("a", "model.a=1");
    let b = run("b", "model.a=1");
    let c = run("c", "model.a=0.5");
    let report = tmp.path().join("report.csv");
    let o = fkpp(&[
        "compare",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("t,abs_linf,rel_linf,rel_l2,pass"));
    let rep = fkpp_cli::compare(&a, &b, 0.0, 0.0).unwrap();
    assert!(rep.rows.iter().all(|r| r.abs_linf == 0.0 && r.rel_l2 == 0.0));

    let o = fkpp(&["compare", a.to_str().unwrap(), c.to_str().unwrap(), "--linf", "1e-6"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_writes_one_bundle_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("sw");
    let o = fkpp(&[
        "sweep",
        "--axis",
        "model.D",
        "--values",
        "0, 0.1",
        "solver=grid",
        "numerics.N=64",
        "numerics.t_end=1",
        &format!("output.dir={}", root.display()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(root.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(root.join("model.D_0").join("manifest.txt").exists());
    assert!(root.join("model.D_0.1").join("snapshot_t1.csv").exists());
}

#[test]
fn presets_list_and_show() {
    let o = fkpp(&["preset", "--list"]);
    assert!(o.status.success());
    let list = String::from_utf8(o.stdout).unwrap();
    for n in ["fig1", "fig5", "fig8"] {
        assert!(list.lines().any(|l| l == n), "{list}");
    }
    let o = fkpp(&["preset", "fig3", "--show", "exact.alpha=1.1"]);
    assert!(o.status.success());
    let shown = Config::parse(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(shown.get("exact.alpha"), "1.1");
    assert_eq!(fkpp(&["preset", "fig99"]).status.code(), Some(2));
}

#[test]
fn exact_preset_writes_markers_and_plot() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("fig1");
    let o = fkpp(&["preset", "fig1", &format!("output.dir={}", dir.display())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let markers = fs::read_to_string(dir.join("markers.csv")).unwrap();
    let row: Vec<f64> = markers.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((row[1] - 4.1331).abs() < 1e-3, "{markers}");
    let plot = fs::read_to_string(dir.join("plot.gp")).unwrap();
    assert!(plot.contains("curve.csv"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rendered_config_parses_back(a in 0.01f64..10.0, n in 8usize..2048, g in 0.05f64..50.0) {
        let mut cfg = Config::default();
        cfg.set("model.a", &a.to_string()).unwrap();
        cfg.set("numerics.N", &n.to_string()).unwrap();
        cfg.set("model.gamma", &g.to_string()).unwrap();
        let back = Config::parse(&cfg.render()).unwrap();
        prop_assert_eq!(back.render(), cfg.render());
        prop_assert_eq!(back.get("model.a").parse::<f64>().unwrap(), a);
    }
}
