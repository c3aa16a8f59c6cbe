use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use vmplace::experiment::{OutputFormat, RunRecord, read_report};

const FLEET: &str = r#"{"entries": [
    {"model": "ibm-x3250", "count": 4, "pe_count": 4, "mips_per_pe": 2933},
    {"model": "dell-r620", "count": 1, "pe_count": 16, "mips_per_pe": 2200}
]}"#;

fn vmplace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vmplace")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Sixteen one-PE VMs sharing one session, with a fleet of four IBM hosts and one Dell host.
fn lab(dir: &TempDir) -> (PathBuf, PathBuf) {
    let mut workload = String::from("id,pe_count,mips_per_pe,start_time,duration\n");
    for i in 0..16 {
        workload.push_str(&format!("v{i:02},1,2200,0,8100\n"));
    }
    let workload_path = dir.path().join("vms.csv");
    let fleet_path = dir.path().join("fleet.json");
    fs::write(&workload_path, workload).unwrap();
    fs::write(&fleet_path, FLEET).unwrap();
    (workload_path, fleet_path)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path
}

fn records(out: &Output, format: OutputFormat) -> Vec<RunRecord> {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    read_report(&stdout(out), format).unwrap()
}

#[test]
fn solve_bfd_reports_closed_form_energy() {
    let dir = TempDir::new().unwrap();
    let (w, f) = lab(&dir);
    let out = vmplace(&["solve", "--solver", "bfd", "--workload", s(&w), "--fleet", s(&f)]);
    let recs = records(&out, OutputFormat::Csv);
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].run_id, "bfd");
    assert!((recs[0].total_kwh.unwrap() - 0.851027).abs() < 1e-6);
    assert_eq!(recs[0].hosts_used, Some(4));
}

#[test]
fn config_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    lab(&dir);
    let config = write_config(
        &dir,
        "exp.json",
        r#"{"workload_path": "vms.csv", "fleet_path": "fleet.json", "solvers": ["bfd", "gapa"],
            "ga_grid": [{"generations": 40, "crossover_prob": 0.5}], "seeds": [0, 1, 2],
            "output_path": "report.csv"}"#,
    );
    let report = dir.path().join("report.csv");
    assert!(vmplace(&["experiment", "--config", s(&config)]).status.success());
    let first = fs::read(&report).unwrap();
    assert!(vmplace(&["experiment", "--config", s(&config)]).status.success());
    assert_eq!(first, fs::read(&report).unwrap());
    let recs = read_report(&String::from_utf8(first).unwrap(), OutputFormat::Csv).unwrap();
    let ids: Vec<&str> = recs.iter().map(|r| r.run_id.as_str()).collect();
    assert_eq!(ids, ["bfd", "gapa-0-s0", "gapa-0-s1", "gapa-0-s2", "gapa-0-mean", "gapa-0-min"]);
}

#[test]
fn bfd_record_does_not_depend_on_ga_grid() {
    let dir = TempDir::new().unwrap();
    let (w, f) = lab(&dir);
    let run = |grid: &[&str]| {
        let mut args = vec!["experiment", "--workload", s(&w), "--fleet", s(&f), "--seed", "3"];
        args.extend_from_slice(grid);
        records(&vmplace(&args), OutputFormat::Csv).remove(0)
    };
    let a = run(&["--generations", "10"]);
    let b = run(&["--generations", "30", "--crossover", "0.25", "--crossover", "0.75"]);
    assert_eq!(a.run_id, "bfd");
    assert_eq!(a, b);
}

#[test]
fn dumped_placements_validate_to_reported_energy() {
    let dir = TempDir::new().unwrap();
    let (w, f) = lab(&dir);
    let report = dir.path().join("r.json");
    let out = vmplace(&[
        "experiment", "--workload", s(&w), "--fleet", s(&f), "--generations", "60", "--seed", "7",
        "--out", s(&report), "--format", "json", "--dump-placements",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let recs = read_report(&fs::read_to_string(&report).unwrap(), OutputFormat::Json).unwrap();
    let dumped = dir.path().join("r.json.placements");
    for rec in recs.iter().filter(|r| r.run_id == "bfd" || r.run_id == "gapa-0-s7") {
        let placement = dumped.join(format!("{}.csv", rec.run_id));
        let out = vmplace(&["validate", "--placement", s(&placement), "--workload", s(&w), "--fleet", s(&f)]);
        assert!(out.status.success());
        let text = stdout(&out);
        let line = text.lines().find(|l| l.starts_with("total_kwh:")).unwrap();
        let kwh: f64 = line["total_kwh:".len()..].trim().parse().unwrap();
        assert!((kwh - rec.total_kwh.unwrap()).abs() < 1e-6, "{}: {kwh} vs {:?}", rec.run_id, rec.total_kwh);
    }
}

#[test]
fn expanded_workload_reproduces_builtin_bfd() {
    let dir = TempDir::new().unwrap();
    let expanded = dir.path().join("day.csv");
    assert!(vmplace(&["gen-workload", "--expand", "--out", s(&expanded)]).status.success());
    let builtin = records(&vmplace(&["solve", "--solver", "bfd"]), OutputFormat::Csv);
    let from_file = records(&vmplace(&["solve", "--solver", "bfd", "--workload", s(&expanded)]), OutputFormat::Csv);
    assert_eq!(builtin, from_file);
    assert!((builtin[0].total_kwh.unwrap() - 11.238446).abs() < 1e-6);

    let timetable = vmplace(&["gen-workload"]);
    assert!(stdout(&timetable).starts_with("day,subject,class_id"));
}

#[test]
fn json_report_parses() {
    let dir = TempDir::new().unwrap();
    let (w, f) = lab(&dir);
    let out = vmplace(&[
        "solve", "--solver", "gapa", "--workload", s(&w), "--fleet", s(&f), "--generations", "20", "--format", "json",
    ]);
    let recs = records(&out, OutputFormat::Json);
    let ids: Vec<&str> = recs.iter().map(|r| r.run_id.as_str()).collect();
    assert_eq!(ids, ["gapa-0-s0", "gapa-0-mean", "gapa-0-min"]);
    assert_eq!(recs[0].trajectory.len(), 21);
    assert_eq!(recs[0].total_kwh, recs[2].total_kwh);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let (w, f) = lab(&dir);

    let bad = write_config(&dir, "bad.json", r#"{"no_such_field": 1}"#);
    assert_eq!(vmplace(&["experiment", "--config", s(&bad)]).status.code(), Some(2));
    let bad_grid = vmplace(&["solve", "--solver", "gapa", "--workload", s(&w), "--fleet", s(&f), "--crossover", "1.5"]);
    assert_eq!(bad_grid.status.code(), Some(2));

    let missing = dir.path().join("absent.csv");
    assert_eq!(vmplace(&["solve", "--solver", "bfd", "--workload", s(&missing)]).status.code(), Some(4));

    // Forty full-core VMs do not fit four IBM hosts plus one Dell host.
    let mut crowd = String::from("id,pe_count,mips_per_pe,start_time,duration\n");
    for i in 0..40 {
        crowd.push_str(&format!("v{i},1,2933,0,100\n"));
    }
    let crowded = dir.path().join("crowd.csv");
    fs::write(&crowded, crowd).unwrap();
    assert_eq!(vmplace(&["solve", "--solver", "bfd", "--workload", s(&crowded), "--fleet", s(&f)]).status.code(), Some(3));

    let overloaded = dir.path().join("p.csv");
    fs::write(&overloaded, (0..16).map(|i| format!("v{i:02},0\n")).collect::<String>()).unwrap();
    let out = vmplace(&["validate", "--placement", s(&overloaded), "--workload", s(&w), "--fleet", s(&f)]);
    assert_eq!(out.status.code(), Some(3));
}
