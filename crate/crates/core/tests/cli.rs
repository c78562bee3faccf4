use std::collections::HashMap;
use std::process::{Command, Output};

fn overlatt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_overlatt"))
        .args(args)
        .env_remove("OVERLATT_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn table(o: &Output) -> Vec<HashMap<String, String>> {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# overlatt v"));
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect())
        .collect()
}

fn num(row: &HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap()
}

fn radius(rows: &[HashMap<String, String>], name: &str) -> f64 {
    num(rows.iter().find(|r| r["name"] == name).unwrap(), "value")
}

#[test]
fn radii_examples() {
    let t = table(&overlatt(&["radii", "--dim", "3", "--delta", "2"]));
    assert!((radius(&t, "packing") - 2f64.sqrt() / 2.0).abs() < 1e-12);
    assert!((radius(&t, "covering") - 1.0).abs() < 1e-12);
    let t = table(&overlatt(&["radii", "--dim", "3", "--delta", "1"]));
    assert!((radius(&t, "packing") - 0.5).abs() < 1e-12);
    assert!((radius(&t, "covering") - 3f64.sqrt() / 2.0).abs() < 1e-12);
    let t = table(&overlatt(&["radii", "--dim", "2", "--delta", "0.5773502692"]));
    assert!((radius(&t, "r1") - radius(&t, "r2")).abs() < 1e-9);
}

#[test]
fn measure_examples() {
    let t = table(&overlatt(&["measure", "--dim", "3", "--delta", "0.5", "--r", "0.5590169944"]));
    assert_eq!(num(&t[0], "union"), 1.0);
    let bcc = 5.0 * 5f64.sqrt() * std::f64::consts::PI / 24.0;
    assert!((num(&t[0], "vol_overlap") - (bcc - 1.0)).abs() < 1e-9);

    let t = table(&overlatt(&["measure", "--dim", "3", "--delta", "2", "--r", "0.7071067812"]));
    assert!(num(&t[0], "dist_overlap").abs() < 1e-9);
    assert!(num(&t[0], "vol_overlap").abs() < 1e-9);
}

#[test]
fn oracle_rows_replay() {
    let args = ["measure", "--dim", "4", "--delta", "1", "--r", "0.8", "--oracle", "--samples", "200000", "--seed", "7"];
    let a = overlatt(&args);
    let t = table(&a);
    assert_eq!(t[0]["exact"], "false");
    assert_eq!(t[0]["seed"], "7");
    assert!(num(&t[0], "vol_overlap") > 0.0);
    let b = overlatt(&args);
    assert_eq!(a.stdout, b.stdout);
    let mut with_par = args.to_vec();
    with_par.extend(["--par", "2"]);
    assert_eq!(a.stdout, overlatt(&with_par).stdout);
    let env = Command::new(env!("CARGO_BIN_EXE_overlatt"))
        .args(args)
        .env("OVERLATT_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(a.stdout, env.stdout);

    let no_oracle = overlatt(&["measure", "--dim", "4", "--delta", "1", "--r", "0.8"]);
    assert_eq!(no_oracle.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&no_oracle.stderr).contains("dimension 4"));
}

#[test]
fn quality_examples() {
    let t = table(&overlatt(&[
        "quality", "--mode", "packing", "--measure", "dist", "--dim", "3", "--delta", "2", "--omega", "0.5",
    ]));
    assert!((num(&t[0], "density") - 5.9238).abs() < 1e-4);
    let t = table(&overlatt(&["quality", "--mode", "covering", "--dim", "3", "--delta", "0.5", "--omega", "0"]));
    assert!((num(&t[0], "density") - 5.0 * 5f64.sqrt() * std::f64::consts::PI / 24.0).abs() < 1e-12);
    assert_eq!(t[0]["measure"], "free_space");
    let t = table(&overlatt(&[
        "quality", "--mode", "packing", "--measure", "vol", "--dim", "2", "--delta", "0.57735", "--omega", "0",
    ]));
    assert!((num(&t[0], "density") - 0.90690).abs() < 1e-5);
}

#[test]
fn json_carries_version() {
    let o = overlatt(&["quality", "--dim", "3", "--delta", "2", "--omega", "0", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["rows"][0]["mode"], "packing");
}

#[test]
fn sweep_presets() {
    let left = table(&overlatt(&["sweep", "--preset", "fig1-left"]));
    let best = left.iter().max_by(|a, b| num(a, "density").total_cmp(&num(b, "density"))).unwrap();
    assert!((num(best, "delta") - 2.0).abs() < 1e-9);

    let right = table(&overlatt(&["sweep", "--preset", "fig1-right"]));
    let best = right.iter().min_by(|a, b| num(a, "density").total_cmp(&num(b, "density"))).unwrap();
    assert!((num(best, "delta") - 0.5).abs() < 1e-9);

    let rows = table(&overlatt(&["sweep", "--preset", "fig3-right"]));
    let curve = |d: f64| -> Vec<(f64, f64)> {
        rows.iter()
            .filter(|r| num(r, "delta") == d)
            .map(|r| (num(r, "omega"), num(r, "density")))
            .collect()
    };
    let (bcc, fcc) = (curve(0.5), curve(2.0));
    assert_eq!(bcc.len(), fcc.len());
    let sign: Vec<bool> = bcc.iter().zip(&fcc).map(|(b, f)| f.1 > b.1).collect();
    let switches: Vec<f64> = (1..sign.len()).filter(|&i| sign[i] != sign[i - 1]).map(|i| bcc[i].0).collect();
    assert_eq!(switches.len(), 1);
    assert!((switches[0] - 0.1).abs() < 0.02);
}

#[test]
fn custom_sweeps() {
    let t = table(&overlatt(&[
        "sweep", "--variable", "r", "--lo", "0.3", "--hi", "0.9", "--steps", "7", "--dim", "3", "--delta", "0.7",
    ]));
    assert_eq!(t.len(), 7);
    assert!(t.windows(2).all(|w| num(&w[1], "union") >= num(&w[0], "union")));
    let t = table(&overlatt(&[
        "sweep", "--variable", "delta", "--lo", "0.5", "--hi", "4", "--steps", "5", "--log", "--omega", "0.2",
    ]));
    assert_eq!(t.len(), 5);
    let out_of_range = overlatt(&["sweep", "--variable", "delta", "--lo", "0.01", "--hi", "4", "--omega", "0.2"]);
    assert_eq!(out_of_range.status.code(), Some(2));
    let reversed = overlatt(&["sweep", "--variable", "omega", "--lo", "0.4", "--hi", "0.1", "--delta", "1"]);
    assert_eq!(reversed.status.code(), Some(2));
}

#[test]
fn output_is_byte_identical_and_written_to_path() {
    let dir = std::env::temp_dir().join(format!("overlatt-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("fig.csv");
    let p = path.to_str().unwrap();
    let a = overlatt(&["sweep", "--preset", "fig1-right", "--out", p]);
    assert!(a.status.success());
    assert!(a.stdout.is_empty());
    let first = std::fs::read(&path).unwrap();
    overlatt(&["sweep", "--preset", "fig1-right", "--out", p, "--par", "1"]);
    assert_eq!(first, std::fs::read(&path).unwrap());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn optimize_and_crossover() {
    let t = table(&overlatt(&["optimize", "--dim", "2", "--measure", "dist", "--omega", "0.3"]));
    assert_eq!(t.len(), 2);
    let t = table(&overlatt(&["optimize", "--dim", "3", "--mode", "covering", "--omega", "0.5"]));
    assert!((num(&t[0], "delta") - 0.5).abs() < 1e-6);
    let t = table(&overlatt(&["crossover"]));
    assert!((0.08..=0.12).contains(&num(&t[0], "omega")));
    let none = overlatt(&["crossover", "--lo", "0.2", "--hi", "0.5"]);
    assert_eq!(none.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(overlatt(&["radii", "--dim", "3"]).status.code(), Some(2));
    assert_eq!(overlatt(&["quality", "--dim", "3", "--delta", "2", "--omega", "1", "--measure", "dist"]).status.code(), Some(2));
    assert_eq!(overlatt(&["radii", "--dim", "3", "--delta", "-1"]).status.code(), Some(2));
    assert_eq!(overlatt(&["verify", "--suite", "nothing"]).status.code(), Some(2));
}

#[test]
fn verify_theorems_pass() {
    let o = overlatt(&["verify", "--suite", "theorems"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn verify_oracle_passes_at_default_budget() {
    let o = overlatt(&["verify", "--suite", "oracle", "--samples", "1000000", "--seed", "42"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_names_corrupted_cell() {
    let o = overlatt(&["verify", "--suite", "all", "--samples", "200000", "--inject-fault", "planar-all-segments"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("FAIL criterion 6"));
    assert!(err.contains("all-segments"));
}
