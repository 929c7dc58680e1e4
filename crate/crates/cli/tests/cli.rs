use std::path::PathBuf;
use std::process::{Command, Output};

fn fockso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fockso")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fockso-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON")
}

#[test]
fn kernel_at_one() {
    let o = fockso(&["kernel", "--m", "0", "--z", "1+0i", "--v", "1+0i"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("z_re,z_im,v_re,v_im,value_re,value_im,logmag,phase"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let v: f64 = row[4].parse().unwrap();
    assert!((v - std::f64::consts::E).abs() < 1e-14);
}

#[test]
fn bmo_of_conjugate() {
    let o = fockso(&["bmo", "--symbol", "zb^1", "--p", "2", "--r", "1", "--R", "6", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc = json(&o);
    let obj = doc.as_object().unwrap();
    assert_eq!(obj.keys().collect::<Vec<_>>(), ["data", "meta"]);
    let sup = doc["meta"]["sup_value"].as_f64().unwrap();
    assert!((sup - 0.5f64.sqrt()).abs() < 1e-3);
}

#[test]
fn series_identity_exits_zero() {
    let o = fockso(&["verify", "lemma23", "--t", "0", "--ymax", "50", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json(&o);
    let lo = doc["meta"]["min_ratio"].as_f64().unwrap();
    let hi = doc["meta"]["max_ratio"].as_f64().unwrap();
    assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    assert_eq!(doc["meta"]["verdict"], "bounded");
}

#[test]
fn verify_text_table() {
    let o = fockso(&["verify", "kernel-bound", "--m", "1", "--format", "text"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("grid        10000 points"));
    assert!(out.trim_end().ends_with("verdict     bounded"));
}

#[test]
fn violated_verdict_exits_three() {
    // |z|^{1/2} oscillates like |z|^{-1/2}: far above the vanishing
    // tolerance on any desk-scale lattice, so the tag disagrees
    let o = fockso(&["verify", "thm32", "--symbol", "sqrt_abs", "--delta", "2", "--R", "10"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = fockso(&["verify", "thm28", "--symbol", "conj_z", "--delta", "2", "--R", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_two() {
    let o = fockso(&["norm", "--symbol", "z^1", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let o = fockso(&["norm", "--symbol", "z^1 + (2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("position"), "{}", stderr(&o));
    let o = fockso(&["kernel", "--z", "1 + 2i", "--v", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = fockso(&["bmo", "--symbol", "zb^1", "--p", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = fockso(&["verify", "thm28", "--symbol", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = scratch("bad.toml");
    std::fs::write(&cfg, "[general]\nunknown_key = 1\n").unwrap();
    let o = fockso(&["--config", cfg.to_str().unwrap(), "norm", "--symbol", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown"), "{}", stderr(&o));
}

#[test]
fn computation_errors_exit_one() {
    // |z|^1200 overflows at the outer quadrature nodes
    let o = fockso(&["norm", "--symbol", "|z|^300", "--p", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!stderr(&o).is_empty());
}

#[test]
fn config_and_flags_combine() {
    let cfg = scratch("run.toml");
    std::fs::write(&cfg, "[general]\nm = 1\nformat = \"json\"\n[hankel]\nN = 4\n").unwrap();
    let o = fockso(&["--config", cfg.to_str().unwrap(), "hankel-norm", "--symbol", "zb^1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc = json(&o);
    assert_eq!(doc["meta"]["settings"]["m"], 1);
    assert_eq!(doc["meta"]["settings"]["n"], 4);
    assert_eq!(doc["meta"]["settings"]["l"], 16);
    let o = fockso(&["--config", cfg.to_str().unwrap(), "hankel-norm", "--symbol", "zb^1", "--m", "0", "--format", "csv"]);
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[..2], ["4", "16"]);
    assert!((row[2].parse::<f64>().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn out_flag_writes_file() {
    let path = scratch("probe.csv");
    let o = fockso(&["hankel-probe", "--symbol", "zb^1", "--directions", "2", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("radius,direction_re,direction_im,value\n"));
    assert_eq!(text.lines().count(), 1 + 5 * 2);
}

#[test]
fn identical_runs_give_identical_bytes() {
    let runs: [&[&str]; 4] = [
        &["berezin", "--symbol", "sin|z|", "--m", "1", "--R", "4", "--format", "json"],
        &["vanish", "--symbol", "ind(0,0,1)", "--estimator", "ba", "--R", "6"],
        &["verify", "lemma21", "--m", "1", "--d", "2"],
        &["hankel-norm", "--symbol", "|z|^0.5", "--N", "8", "--format", "json"],
    ];
    for args in runs {
        let a = fockso(args);
        let b = fockso(args);
        assert_eq!(a.status.code(), Some(0), "{args:?}: {}", stderr(&a));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn help_lists_defaults() {
    for (cmd, want) in [
        ("bmo", vec!["[default: 2]", "[default: 1]", "[default: r/2]", "[default: 12]"]),
        ("berezin", vec!["[default: 8]", "[default: 0]", "[default: transform]"]),
        ("hankel-norm", vec!["[default: 16]", "[default: 4N]"]),
        ("hankel-probe", vec!["[default: 0,2,4,6,8]", "[default: 1e-3]"]),
        ("vanish", vec!["[default: bmo]", "[default: 1e-3]"]),
    ] {
        let o = fockso(&[cmd, "--help"]);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        for w in want {
            assert!(text.contains(w), "{cmd}: missing {w}");
        }
    }
    let o = fockso(&["verify", "lemma23", "--help"]);
    assert!(stdout(&o).contains("[default: 50]"));
}

#[test]
fn carleson_and_project() {
    let o = fockso(&["carleson", "--symbol", "1", "--r", "1", "--R", "3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json(&o);
    assert!((doc["meta"]["max_mass"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-10);
    let o = fockso(&["project", "--symbol", "z^2", "--L", "4"]);
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows.len(), 6);
    let c2: f64 = rows[3].split(',').nth(1).unwrap().parse().unwrap();
    assert!((c2 - 2f64.sqrt()).abs() < 1e-12);
}
