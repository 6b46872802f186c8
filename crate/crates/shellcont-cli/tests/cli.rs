use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shellcont")).args(args).output().expect("spawn binary")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn no_arguments_prints_help_and_exits_2() {
    let o = run(&[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage:"));
}

#[test]
fn jost_grid_has_header_and_200_rows() {
    let o = run(&["jost", "--grid", "0.1:20:0.1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 201);
    assert_eq!(lines[0], "k_re,k_im,j_plus_re,j_plus_im,j_minus_re,j_minus_im,s_re,s_im");
    for line in &lines[1..] {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(v.len(), 8);
        assert!(((v[6] * v[6] + v[7] * v[7]) - 1.0).abs() < 1e-12, "S not unimodular in {line}");
        assert!((v[2] - v[4]).abs() < 1e-12 && (v[3] + v[5]).abs() < 1e-12);
    }
}

#[test]
fn inverted_shell_is_a_usage_error() {
    let o = run(&["jost", "--a", "2", "--b", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("a < b"));
    let o = run(&["--mass", "-1", "poles"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(run(&["jost", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["evolve", "--t", "1", "--mode", "sideways"]).status.code(), Some(2));
}

#[test]
fn retarded_evolution_refuses_negative_time() {
    let o = run(&["evolve", "--mode", "retarded", "--t", "-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not defined for t<0"));
    assert!(stdout(&o).is_empty());
}

#[test]
fn poles_json_lists_the_lowest_resonance() {
    let o = run(&["poles", "--rect", "0.1,10,-3,-0.01"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["sign"], "+");
    assert_eq!(doc["rectangle"].as_array().unwrap().len(), 4);
    let zeros = doc["zeros"].as_array().unwrap();
    assert_eq!(zeros.len(), 5);
    let (re, im) = (zeros[0]["re"].as_f64().unwrap(), zeros[0]["im"].as_f64().unwrap());
    assert!((re - 3.9925).abs() < 1e-4 && (im + 0.2591).abs() < 1e-4);
    for key in ["deriv_re", "deriv_im"] {
        assert!(zeros[0][key].is_f64());
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("shell.cfg");
    std::fs::write(&path, "# free particle\nv0 = 0\nb = 3\n").unwrap();
    let p = path.to_str().unwrap();
    let free = run(&["--config", p, "jost", "--grid", "1:2:1"]);
    for line in stdout(&free).lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!((v[2], v[3]), (1.0, 0.0));
    }
    let shell = run(&["--config", p, "--v0", "10", "jost", "--grid", "1:2:1"]);
    assert_ne!(stdout(&free), stdout(&shell));
    let o = run(&["--config", dir.path().join("missing").to_str().unwrap(), "jost"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn outputs_are_byte_stable_and_written_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let o = run(&["transform", "--phi", "bump:1.2,1.8,deg=1", "--grid", "0.5:5:0.5", "--out", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().next(), Some("k,f_re,f_im"));
    assert_eq!(text.lines().count(), 11);
}

#[test]
fn eigfn_and_continue_emit_split_complex_columns() {
    let o = run(&["eigfn", "--q", "3,-0.2", "--sign", "-", "--grid", "0:2:0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("r,chi_re,chi_im"));
    assert_eq!(text.lines().count(), 6);

    let o = run(&["continue", "--re", "1:3:1", "--im", "-1:1:1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("q_re,q_im,braval_re,braval_im,quad_err"));
    assert_eq!(text.lines().count(), 10);
}

#[test]
fn group_and_retarded_evolution_agree() {
    let args = |mode: &'static str| ["evolve", "--mode", mode, "--t", "0.5", "--rmax", "6"];
    let parse = |o: &Output| -> Vec<Vec<f64>> {
        stdout(o).lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
    };
    let g = run(&args("group"));
    let c = run(&args("retarded"));
    assert_eq!(g.status.code(), Some(0));
    assert_eq!(c.status.code(), Some(0));
    let (g, c) = (parse(&g), parse(&c));
    assert_eq!(g.len(), c.len());
    let scale = g.iter().map(|v| v[1].hypot(v[2])).fold(0.0, f64::max);
    for (x, y) in g.iter().zip(&c) {
        assert_eq!((x[0], x[3]), (y[0], y[3]));
        assert!((x[1] - y[1]).hypot(x[2] - y[2]) < 1e-6 * scale);
    }
}

#[test]
fn verify_subset_writes_json_and_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let o = run(&["verify", "--suite", "symmetry,unitarity,quadrants,young", "--seed", "7", "--json", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let entries = doc.as_array().unwrap();
    assert!(!entries.is_empty());
    for e in entries {
        assert_eq!(e["status"], "pass");
        for key in ["check_id", "anchor", "metric", "tolerance", "runtime_s", "detail"] {
            assert!(e.get(key).is_some(), "missing {key}");
        }
    }
    assert_eq!(run(&["verify", "--suite", "nope"]).status.code(), Some(2));
}

#[test]
fn every_command_has_a_worked_example() {
    for cmd in ["jost", "eigfn", "poles", "transform", "continue", "evolve", "verify"] {
        let o = run(&[cmd, "--help"]);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        assert!(text.contains("Example:") && text.contains(&format!("shellcont {cmd}")), "{cmd}");
    }
}
