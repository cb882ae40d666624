use std::path::Path;
use std::process::{Command, Output};

fn magbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magbench"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("magbench runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn mathieu_writes_one_row_per_cell() {
    let out = magbench(&["mathieu", "--method", "psi11,upsilon4q8", "--steps", "10,20"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("# problem=mathieu"));
    let data = data_lines(&text);
    assert_eq!(data[0], "method,h,steps,cost_C,cost_V,error_L1,defect,wall_ms");
    assert_eq!(data.len(), 5);
    for line in &data[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 8);
        let err: f64 = fields[5].parse().unwrap();
        assert!(err.is_finite() && err < 1e-2, "{line}");
        assert_eq!(fields[7], "0.0000000000000000e0");
    }
}

#[test]
fn upsilon_takes_order_from_flags() {
    let out = magbench(&["hill", "--r", "3", "--method", "upsilon", "--p", "6", "--q", "exact", "--steps", "20"]);
    assert!(out.status.success());
    assert!(data_lines(&stdout(&out))[1].starts_with("upsilon6qexact,"));
}

#[test]
fn wave_defaults_to_vector_mode() {
    let out = magbench(&["wave", "--delta", "1", "--eps", "0", "--method", "psi11", "--steps", "500", "--t1", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("# mode=vector"));
    let row: Vec<&str> = data_lines(&text)[1].split(',').collect();
    assert_eq!(row[3], "0");
    assert_eq!(row[4], (500 * 11).to_string());
}

#[test]
fn invalid_arguments_exit_with_two() {
    for args in [
        &["mathieu", "--method", "upsilon4q7", "--steps", "10"][..],
        &["mathieu", "--method", "psi11", "--steps", "0"],
        &["wave", "--method", "upsilon4q6", "--steps", "10"],
        &["mathieu", "--method", "psi11", "--h", "0.3"],
    ] {
        let out = magbench(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn numerical_failure_exits_with_three_and_keeps_other_rows() {
    let out = magbench(&["mathieu", "--omega", "50", "--method", "rkgl6rho6,psi11", "--steps", "2"]);
    assert_eq!(out.status.code(), Some(3));
    let text = stdout(&out);
    assert!(text.contains("# failed method=rkgl6rho6"));
    assert!(data_lines(&text).iter().any(|l| l.starts_with("psi11,")));
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# Mathieu run\nomega=3\nmethods=rk4\nsteps=8,16\n").unwrap();
    let out = magbench(&["mathieu", "--omega", "1", "--method", "psi11", "--steps", "4", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("# omega=3.0"));
    let data = data_lines(&text);
    assert_eq!(data.len(), 3);
    assert!(data[1].starts_with("rk4,") && data[2].starts_with("rk4,"));
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let args = ["hill", "--r", "2", "--method", "psi11,rk4", "--steps", "10,20"];
    let piped = stdout(&magbench(&args));
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    assert!(magbench(&with_out).status.success());
    assert_eq!(std::fs::read_to_string(Path::new(&path)).unwrap(), piped);
}

#[test]
fn sequential_flag_does_not_change_output() {
    let args = ["omega-sweep", "--method", "upsilon4q6,psi11"];
    let par = stdout(&magbench(&args));
    let mut seq_args = args.to_vec();
    seq_args.push("--sequential");
    let seq = stdout(&magbench(&seq_args));
    assert_eq!(par, seq);
    let data = data_lines(&par);
    assert!(data[0].starts_with("omega,method,"));
    assert_eq!(data.len(), 1 + 21 * 2);
}

#[test]
fn best_q_ranks_requested_truncations() {
    let out = magbench(&["best-q", "--p", "4", "--eps", "1", "--omega", "1,10", "--q", "6,12"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let data = data_lines(&text);
    assert_eq!(data[0], "p,eps,omega,budget_C,first_q,second_q,error_q6,error_q12");
    assert_eq!(data.len(), 3);
}

#[test]
fn stability_reports_unit_modulus_pairs() {
    let out = magbench(&["stability", "--problem", "mathieu", "--omega", "3", "--method", "upsilon6q12", "--h", "pi/20"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("# reciprocal_pairs=true"));
    assert!(text.contains("# stable=true"));
    assert_eq!(data_lines(&text).len(), 3);
}

#[test]
fn order_check_recovers_order_four() {
    let out = magbench(&["order-check", "--problem", "mathieu", "--method", "upsilon4q6"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let row: Vec<&str> = data_lines(&text)[1].split(',').collect();
    let slope: f64 = row[1].parse().unwrap();
    assert!((slope - 4.0).abs() < 0.3, "slope {slope}");
}
