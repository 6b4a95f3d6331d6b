use std::path::Path;
use std::process::{Command, Output};

fn cli(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_center-outward")).args(args).current_dir(dir).output().unwrap()
}

fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines().map(|l| l.split(',').map(|c| c.trim().parse().unwrap()).collect()).collect()
}

#[test]
fn fit_then_eval_recovers_grid_points() {
    let dir = tempfile::tempdir().unwrap();
    let sample = "0.9,0.1\n-0.3,0.05\n0.4,-0.4\n-0.1,-0.6\n0.7,0.1\n-0.5,0.5\n0.05,0.8\n0.2,-0.1\n";
    std::fs::write(dir.path().join("s.csv"), sample).unwrap();
    let out = cli(dir.path(), &["fit", "--input", "s.csv", "--nr", "2", "--ns", "4", "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = cli(dir.path(), &["eval", "--map", "m.json", "--input", "s.csv", "--mode", "F"]);
    assert_eq!(out.status.code(), Some(0));
    let images = rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(images.len(), 8);
    for u in &images {
        let r = u.iter().map(|c| c * c).sum::<f64>().sqrt();
        // rings at 1/3 and 2/3
        assert!((r - 1.0 / 3.0).abs() < 1e-9 || (r - 2.0 / 3.0).abs() < 1e-9, "{u:?}");
    }

    let out = cli(dir.path(), &["eval", "--map", "m.json", "--input", "s.csv", "--mode", "ranks"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "0.1,0.2\n0.3,oops\n").unwrap();
    let out = cli(dir.path(), &["oracle", "--dist", "ud", "--dim", "2", "--mode", "F", "--input", "bad.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(dir.path(), &["no-such-command"]).status.code(), Some(2));
    assert_eq!(cli(dir.path(), &["grid", "--dim", "2"]).status.code(), Some(2));
    assert_eq!(cli(dir.path(), &["experiment", "--config", "missing.json"]).status.code(), Some(3));
    std::fs::write(dir.path().join("c.json"), r#"{"version":1,"experiment":"nope","params":{}}"#).unwrap();
    assert_eq!(cli(dir.path(), &["experiment", "--config", "c.json"]).status.code(), Some(2));
    assert_eq!(cli(dir.path(), &["doubling", "--dim", "3", "--r", "0.6"]).status.code(), Some(3));

    std::fs::write(dir.path().join("u.csv"), "0.2,0.1\n1.5,0.0\n").unwrap();
    let out = cli(dir.path(), &["oracle", "--dist", "ud", "--dim", "2", "--mode", "Q", "--input", "u.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn grid_output_lists_points_and_weights() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), &["grid", "--dim", "2", "--nr", "3", "--ns", "5", "--n0", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // 15 ring points plus one origin atom carrying weight 2/17
    assert_eq!(v["points"].as_array().unwrap().len(), 16);
    let w: Vec<f64> = v["weights"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((w[15] - 2.0 / 17.0).abs() < 1e-15);
}
