use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_matern-rf"));
    c.env_remove("MATERN_RF_OUT_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn eec_curve_on_unit_interval() {
    let o = run(&["eec", "--nu", "3", "--ell", "1", "--sigma2", "1", "--box", "1", "--levels", "-3:5:101", "--format", "csv"]);
    assert!(o.status.success());
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["u", "eec"]);
    assert_eq!(rows.len(), 101);
    let at = |u: f64| -> f64 {
        let row = rows.iter().find(|r| (r[0].parse::<f64>().unwrap() - u).abs() < 1e-9).unwrap();
        row[1].parse().unwrap()
    };
    assert!((at(-3.0) - 1.0).abs() < 0.01);
    assert!((at(1.0) - 0.27688).abs() < 1e-5);
}

#[test]
fn crit_on_the_line() {
    let o = run(&["crit", "--nu", "3", "--dim", "1", "--domain", "euclidean"]);
    assert!(o.status.success());
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["index", "u", "density", "stderr", "method"]);
    assert_eq!(rows.len(), 2);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0], i.to_string());
        assert!((r[2].parse::<f64>().unwrap() - 0.47747).abs() < 1e-5);
    }
}

#[test]
fn rough_fields_are_rejected() {
    let o = run(&["eec", "--nu", "1.5", "--box", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("smoothness parameter must exceed 2"));
}

#[test]
fn input_errors_name_the_flag() {
    let cases: [(&[&str], &str); 5] = [
        (&["eec", "--box", "1"], "--nu"),
        (&["eec", "--nu", "3", "--box", "1", "--levels", "0:1"], "--levels"),
        (&["height", "--nu", "3", "--dim", "1"], "--index"),
        (&["validate", "--nu", "3", "--scenarios", "nope"], "--scenarios"),
        (&["eec", "--nu", "3", "--box", "1", "--ell", "-1"], "--ell"),
    ];
    for (args, flag) in cases {
        let o = run(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains(flag), "{args:?}");
    }
    assert_eq!(run(&["--no-such-flag"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn dumped_config_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 4] = [
        &["crit", "--nu", "3.5", "--ell", "0.7", "--dim", "2", "--u", "-0.5"],
        &["height", "--nu", "4", "--sphere", "2", "--index", "2", "--levels", "-1:2:4", "--format", "json"],
        &["goi", "--dim", "3", "--c", "0.2", "--index", "1", "--shift", "-0.4", "--samples", "20000", "--seed", "7"],
        &["eec", "--nu", "3", "--sphere", "2", "--sigma2", "2"],
    ];
    for (k, args) in runs.iter().enumerate() {
        let direct = run(args);
        assert!(direct.status.success(), "{args:?}");
        let mut dump_args = args.to_vec();
        dump_args.push("--dump-config");
        let dumped = stdout(&run(&dump_args));
        let path = dir.path().join(format!("run{k}.cfg"));
        std::fs::write(&path, &dumped).unwrap();
        let again = run(&["--config", path.to_str().unwrap()]);
        assert!(again.status.success(), "{dumped}");
        assert_eq!(direct.stdout, again.stdout, "{dumped}");
    }
}

#[test]
fn command_line_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("base.cfg");
    std::fs::write(&path, "# unit interval\ncommand = eec\nnu = 3\nbox = 1\nlevels = -3:5:5\n").unwrap();
    let o = run(&["--config", path.to_str().unwrap(), "--levels", "1:1:1"]);
    assert!(o.status.success());
    let (_, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert!((rows[0][1].parse::<f64>().unwrap() - 0.27688).abs() < 1e-5);
}

#[test]
fn validate_is_independent_of_thread_cap() {
    let base = ["validate", "--nu", "3", "--scenarios", "eec_box,critical_1d", "--replications", "40", "--seed", "5"];
    let mut outputs = Vec::new();
    for threads in ["1", "3", "8"] {
        for format in ["csv", "json"] {
            let mut args = base.to_vec();
            args.extend(["--threads", threads, "--format", format]);
            let o = run(&args);
            assert!(matches!(o.status.code(), Some(0) | Some(2)));
            outputs.push((format, o.stdout));
        }
    }
    for pair in outputs.chunks(2).skip(1) {
        assert_eq!(pair[0].1, outputs[0].1);
        assert_eq!(pair[1].1, outputs[1].1);
    }
    let (header, rows) = csv_rows(&String::from_utf8(outputs[0].1.clone()).unwrap());
    assert_eq!(header, matern_rf::simulate::CSV_HEADER);
    assert!(rows.len() > 5);
}

#[test]
fn failing_scenarios_exit_with_two() {
    let o = run(&["validate", "--nu", "3", "--scenarios", "eec_sphere", "--vertices", "100"]);
    assert_eq!(o.status.code(), Some(2));
    let (_, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows[0][1], "error");
    assert_eq!(rows[0][7], "false");
}

#[test]
fn simulate_writes_under_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["simulate", "--nu", "3", "--box", "1", "--resolution", "8", "--replications", "2"])
        .env("MATERN_RF_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("field_draws.csv")).unwrap();
    let (header, rows) = csv_rows(&text);
    assert_eq!(header, ["replication", "point", "x", "y", "z", "value"]);
    assert_eq!(rows.len(), 18);
    assert_ne!(rows[0][5], rows[9][5]);
}
