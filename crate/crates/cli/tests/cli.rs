use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cfde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfde"))
        .args(args)
        .env_remove("CFDE_RTOL")
        .output()
        .expect("cfde runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let data = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, data)
}

const DECAY: &str =
    r#"{"alpha":0.5,"order":1,"p":["1"],"q":"0","domain":[0.1,10],"t0":1,"init":[1],"span":[1,4]}"#;
const OSCILLATOR: &str = r#"{"alpha":0.5,"order":2,"p":["1","0"],"q":"0","domain":[0.1,20],"t0":1,"init":[1,0],"span":[1,9]}"#;
const FORCED: &str = r#"{"alpha":0.5,"order":2,"p":["1","0"],"q":"1","domain":[0.1,20],"t0":2,"init":[0.5,-0.25],"span":[1,9]}"#;

fn problem(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn deriv_power_rule() {
    let o = cfde(&["deriv", "--expr", "t^2", "--alpha", "0.5", "--at", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let row: Vec<f64> = out
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(row[0], 4.0);
    assert!((row[1] - 16.0).abs() < 1e-8);
}

#[test]
fn deriv_constant_is_exactly_zero() {
    let o = cfde(&[
        "deriv",
        "--expr",
        "5",
        "--alpha",
        "0.7",
        "--at",
        "2",
        "--method",
        "reduction",
    ]);
    assert_eq!(stdout(&o), "t,T_alpha_f\n2,0\n");
}

#[test]
fn deriv_grid_and_domain_error() {
    let o = cfde(&[
        "deriv", "--expr", "sin(t)", "--alpha", "1", "--grid", "1,2,5",
    ]);
    assert_eq!(stdout(&o).lines().count(), 6);
    let o = cfde(&["deriv", "--expr", "ln(t)", "--alpha", "0.5", "--at", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!stderr(&o).is_empty());
    let o = cfde(&["deriv", "--expr", "2*", "--alpha", "0.5", "--at", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("offset 2"));
}

#[test]
fn integ_examples() {
    let o = cfde(&[
        "integ", "--expr", "1", "--alpha", "0.5", "--from", "0", "--to", "4",
    ]);
    assert!((stdout(&o).trim().parse::<f64>().unwrap() - 4.0).abs() < 1e-10);
    let o = cfde(&[
        "integ", "--expr", "t", "--alpha", "0.5", "--from", "3", "--to", "3",
    ]);
    assert_eq!(stdout(&o).trim(), "0");
    let o = cfde(&[
        "integ", "--expr", "1", "--alpha", "1.5", "--from", "0", "--to", "4",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solve_decay_and_oscillator() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("decay.csv");
    let o = cfde(&[
        "solve",
        &problem(dir.path(), "decay.json", DECAY),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, data) = rows(&out);
    assert_eq!(header, ["t", "y"]);
    assert_eq!(data.len(), 200);
    let last = data.last().unwrap();
    assert_eq!(last[0], 4.0);
    assert!((last[1] - (-2.0f64).exp()).abs() < 1e-7);

    let out = dir.path().join("osc.csv");
    let file = problem(dir.path(), "osc.json", OSCILLATOR);
    cfde(&[
        "solve",
        &file,
        "--out",
        out.to_str().unwrap(),
        "--nodes",
        "9",
    ]);
    let (header, data) = rows(&out);
    assert_eq!(header, ["t", "y", "Ty"]);
    let at4 = data.iter().find(|r| r[0] == 4.0).unwrap();
    assert!((at4[1] - (-0.4161468365471424)).abs() < 1e-7);

    let raw = dir.path().join("raw.csv");
    cfde(&["solve", &file, "--out", raw.to_str().unwrap(), "--raw"]);
    let (_, data) = rows(&raw);
    assert!(data.len() > 2 && data.windows(2).all(|w| w[0][0] < w[1][0]));
}

#[test]
fn solve_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let file = problem(dir.path(), "f.json", FORCED);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    cfde(&["solve", &file, "--out", a.to_str().unwrap(), "--parts"]);
    cfde(&["solve", &file, "--out", b.to_str().unwrap(), "--parts"]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(
        fs::read(dir.path().join("a.coefficients.json")).unwrap(),
        fs::read(dir.path().join("b.coefficients.json")).unwrap()
    );
}

#[test]
fn solve_parts_reassemble() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("forced.csv");
    let o = cfde(&[
        "solve",
        &problem(dir.path(), "f.json", FORCED),
        "--out",
        out.to_str().unwrap(),
        "--parts",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, data) = rows(&out);
    assert_eq!(header, ["t", "y", "Ty", "yp", "y1", "y2"]);
    let sidecar: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("forced.coefficients.json")).unwrap(),
    )
    .unwrap();
    let c: Vec<f64> = sidecar["coefficients"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    for row in &data {
        let assembled = row[3] + c[0] * row[4] + c[1] * row[5];
        assert!((assembled - row[1]).abs() < 1e-6 * (1.0 + row[1].abs()));
    }
}

#[test]
fn solve_rejects_bad_input_without_leaving_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bad.csv");
    let bad = OSCILLATOR.replace("\"init\":[1,0]", "\"init\":[1]");
    let o = cfde(&[
        "solve",
        &problem(dir.path(), "bad.json", &bad),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("init"));
    assert!(!out.exists());

    let o = cfde(&[
        "solve",
        &problem(dir.path(), "junk.json", "{not json"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn solver_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("stiff.csv");
    let body = r#"{"alpha":1,"order":1,"p":["1"],"q":"0","domain":[0.1,10],"t0":1,"init":[1],"span":[1,4],"tolerances":{"rel":1e-30,"abs":1e-300}}"#;
    let o = cfde(&[
        "solve",
        &problem(dir.path(), "p.json", body),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn tolerance_env_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let file = problem(dir.path(), "d.json", DECAY);
    let out = dir.path().join("d.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_cfde"))
        .args(["solve", &file, "--out", out.to_str().unwrap()])
        .env("CFDE_RTOL", "-1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("CFDE_RTOL"));
    let o = Command::new(env!("CARGO_BIN_EXE_cfde"))
        .args(["solve", &file, "--out", out.to_str().unwrap()])
        .env("CFDE_RTOL", "1e-6")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let (_, data) = rows(&out);
    assert!((data.last().unwrap()[1] - (-2.0f64).exp()).abs() < 1e-4);
}

#[test]
fn fundset_writes_wronskian() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("set");
    let o = cfde(&[
        "fundset",
        &problem(dir.path(), "osc.json", OSCILLATOR),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(out.join("y1.csv").exists() && out.join("y2.csv").exists());
    let (header, data) = rows(&out.join("wronskian.csv"));
    assert_eq!(header, ["t", "W_alpha", "abel_prediction", "rel_error"]);
    assert!(data.iter().all(|r| r[3] <= 1e-6));

    let o = cfde(&[
        "fundset",
        &problem(dir.path(), "decay.json", DECAY),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let (_, y1) = rows(&out.join("y1.csv"));
    let (_, w) = rows(&out.join("wronskian.csv"));
    for (a, b) in y1.iter().zip(&w) {
        assert_eq!(a[1], b[1]);
    }

    let o = cfde(&[
        "fundset",
        &problem(dir.path(), "f.json", FORCED),
        "--out",
        dir.path().join("no").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("no").exists());
}

#[test]
fn verify_reports_each_property() {
    let o = cfde(&["verify", "--suite", "calculus", "--seed", "42"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.lines().filter(|l| l.starts_with("PASS ")).count() >= 9);
    assert!(out.contains("identity-chain"));

    let o = cfde(&[
        "verify",
        "--suite",
        "structure",
        "--seed",
        "42",
        "--inject-fault",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL oscillator-oracle"));
    assert!(stderr(&o).contains("abel-identity"));

    let o = cfde(&["verify", "--suite", "everything"]);
    assert_eq!(o.status.code(), Some(2));
}
