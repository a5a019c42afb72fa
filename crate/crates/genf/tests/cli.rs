use genf::report;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn smoke_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke.toml")
}

fn genf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_genf"))
        .args(args)
        .env("GENF_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = genf(args);
    assert!(
        out.status.success(),
        "genf {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn err_line(args: &[&str]) -> String {
    let out = genf(args);
    assert!(!out.status.success(), "genf {args:?} should fail");
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "one-line error expected, got {stderr:?}");
    stderr.trim_end().to_string()
}

fn smoke(cmd: &str, out: &Path, extra: &[&str]) -> String {
    let cfg = smoke_config();
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    ok(&args)
}

#[test]
fn forecast_rerun_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [a.path(), b.path()] {
        smoke("forecast", dir, &["--strategy", "genf", "--L", "2"]);
    }
    let read = |d: &Path| std::fs::read(d.join("seed-0/report-genf-2.json")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    let pred = |d: &Path| std::fs::read(d.join("seed-0/predictions-genf-2.csv")).unwrap();
    assert_eq!(pred(a.path()), pred(b.path()));
    report::load(&a.path().join("seed-0/report-genf-2.json")).unwrap();
}

#[test]
fn sweep_independent_of_thread_count() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = smoke_config();
    let run = |dir: &Path, threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_genf"))
            .args(["sweep", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()])
            .env("GENF_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    let table = run(a.path(), "1");
    assert_eq!(run(b.path(), "2"), table);
    for label in ["DF", "IF", "GenF-1", "GenF-2"] {
        assert!(table.contains(label), "{table}");
    }
    assert_eq!(
        std::fs::read(a.path().join("sweep.csv")).unwrap(),
        std::fs::read(b.path().join("sweep.csv")).unwrap()
    );
    for seed in ["seed-0", "seed-1"] {
        for tag in ["df", "if", "genf-1", "genf-2"] {
            let name = format!("{seed}/report-{tag}.json");
            let ra = std::fs::read(a.path().join(&name)).unwrap();
            assert_eq!(ra, std::fs::read(b.path().join(&name)).unwrap(), "{name}");
            report::validate(std::str::from_utf8(&ra).unwrap()).unwrap();
        }
    }
}

#[test]
fn genf_with_l0_is_df() {
    let dir = tempfile::tempdir().unwrap();
    smoke("forecast", dir.path(), &["--strategy", "df"]);
    let df = std::fs::read(dir.path().join("seed-0/report-df.json")).unwrap();
    std::fs::remove_file(dir.path().join("seed-0/report-df.json")).unwrap();
    smoke("forecast", dir.path(), &["--strategy", "genf", "--L", "0"]);
    assert_eq!(std::fs::read(dir.path().join("seed-0/report-df.json")).unwrap(), df);
}

#[test]
fn checkpoints_reproduce_forecast() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    smoke("split", d, &[]);
    smoke("train-gan", d, &[]);
    smoke("train-predictor", d, &["--strategy", "genf", "--L", "1"]);
    smoke("evaluate", d, &["--strategy", "genf", "--L", "1"]);
    let from_ckpt = std::fs::read(d.join("seed-0/report-genf-1.json")).unwrap();
    smoke("forecast", d, &["--strategy", "genf", "--L", "1"]);
    assert_eq!(std::fs::read(d.join("seed-0/report-genf-1.json")).unwrap(), from_ckpt);

    let split = std::fs::read_to_string(d.join("seed-0/split.toml")).unwrap();
    let manifest = genf::manifest::SplitManifest::parse(&split).unwrap();
    assert_eq!(manifest.train.units.len() + manifest.test.units.len() + manifest.validation.units.len(), 12);
    let tsv = std::fs::read_to_string(d.join("seed-0/partition.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 1 + manifest.train.units.len());
    let gan_log = std::fs::read_to_string(d.join("seed-0/gan_log.csv")).unwrap();
    assert_eq!(gan_log.lines().count(), 1 + 3);

    smoke("generate", d, &["--L", "3"]);
    let generated = genf::csv_io::load_csv(&d.join("seed-0/generated-L3.csv")).unwrap();
    assert!(generated.iter().all(|s| s.len() == 6 + 3 && s.k() == 3));
}

#[test]
fn errors_are_distinct_one_liners() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config();
    let (c, o) = (cfg.to_str().unwrap(), dir.path().to_str().unwrap());

    let l_too_big = err_line(&["forecast", "--config", c, "--out", o, "--strategy", "genf", "--L", "4"]);
    assert!(l_too_big.starts_with("error: synthetic-window: "), "{l_too_big}");

    let missing = err_line(&["evaluate", "--config", c, "--out", o, "--strategy", "df"]);
    assert!(missing.starts_with("error: missing-checkpoint: "), "{missing}");

    let bad_cfg = dir.path().join("bad.toml");
    std::fs::write(&bad_cfg, "[pred]\nlearning_rate = 0.1\n").unwrap();
    let bad_key = err_line(&["sweep", "--config", bad_cfg.to_str().unwrap()]);
    assert!(bad_key.starts_with("error: config: ") && bad_key.contains("learning_rate"), "{bad_key}");

    let no_file = err_line(&["sweep", "--config", "/nonexistent/genf.toml"]);
    assert!(no_file.starts_with("error: io: "), "{no_file}");

    let bad_csv = dir.path().join("bad.csv");
    std::fs::write(&bad_csv, "unit,a\nu,1\nu,oops\n").unwrap();
    let csv_cfg = dir.path().join("csv.toml");
    std::fs::write(&csv_cfg, "[data]\ncsv = \"bad.csv\"\n").unwrap();
    let csv = err_line(&["ingest", "--config", csv_cfg.to_str().unwrap(), "--out", o]);
    assert_eq!(csv, "error: csv: line 3: non-numeric value `oops` in column `a`");
}

#[test]
fn synthbench_emit_then_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("var.csv");
    ok(&["synthbench", "emit", "--units", "4", "--t", "30", "--seed", "3", "--out", data.to_str().unwrap()]);
    let stdout = ok(&["synthbench", "emit", "--units", "4", "--t", "30", "--seed", "3"]);
    assert_eq!(stdout, std::fs::read_to_string(&data).unwrap());
    assert!(stdout.starts_with("unit,x0,x1,x2\n"));

    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[data]\ncsv = \"var.csv\"\n").unwrap();
    let msg = ok(&["ingest", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(msg.starts_with("4 units, K=3, T in [30, 30], 0 missing cells"), "{msg}");
    let back = std::fs::read_to_string(dir.path().join("o/seed-0/data.csv")).unwrap();
    assert_eq!(back, stdout);

    let ar = ok(&["synthbench", "emit", "--units", "1", "--t", "5", "--ar1", "0.9", "--sigma", "0"]);
    assert_eq!(ar, "unit,x0\nu0000,0\nu0000,0\nu0000,0\nu0000,0\nu0000,0\n");
}

#[test]
fn theory_table_and_json() {
    let table = ok(&["theory", "--n", "8", "--grid"]);
    for l in 1..8 {
        assert!(table.lines().any(|line| line.split_whitespace().next() == Some(&l.to_string())), "{table}");
    }
    assert!(table.contains("corollary:"));

    let json: serde_json::Value = serde_json::from_str(&ok(&["theory", "--n", "8", "--grid", "--json"])).unwrap();
    assert_eq!(json["grid"].as_array().unwrap().len(), 7);
    assert!(json["corollary"]["holds_some_l"].is_boolean());
    assert!(json["bounds"]["u_dir"].as_f64().unwrap() > 0.0);

    let bad = err_line(&["theory", "--n", "1"]);
    assert!(bad.starts_with("error: synthetic-window: "), "{bad}");
}
