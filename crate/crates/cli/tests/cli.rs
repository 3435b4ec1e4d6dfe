use std::path::Path;
use std::process::{Command, Output};

use gdc_core::model::normalized_values;
use gdc_core::traces::{ClusterConfig, PricingSchedule};

fn gdcsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gdcsim"))
        .args(args)
        .output()
        .expect("spawn gdcsim")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn resolved_line(o: &Output) -> String {
    stderr(o)
        .lines()
        .find_map(|l| l.strip_prefix("resolved: gdcsim "))
        .expect("resolved line on stderr")
        .to_string()
}

fn run_ok(args: &[&str]) -> Output {
    let o = gdcsim(args);
    assert!(o.status.success(), "{args:?} failed: {}", stderr(&o));
    o
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn missing_instance_exits_with_input_error() {
    let o = gdcsim(&["simulate", "--instance", "/definitely/not/here.txt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cannot read"));
}

#[test]
fn malformed_instance_exits_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "[cluster]\nmachines = many\n").unwrap();
    let o = gdcsim(&["exact", "--instance", p(&path)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(gdcsim(&["bogus"]).status.code(), Some(1));
    assert_eq!(
        gdcsim(&["simulate", "--instance", "x", "--no-such-flag"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        gdcsim(&["adversary", "--family", "thm9"]).status.code(),
        Some(1)
    );
    assert_eq!(
        gdcsim(&["mc-ratio", "--trials", "10"]).status.code(),
        Some(1)
    );
    assert_eq!(gdcsim(&["--help"]).status.code(), Some(0));
}

#[test]
fn worst_case_chain_prints_green_to_on_peak_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.txt");
    let opt = dir.path().join("opt.csv");
    let ff = dir.path().join("ff.csv");
    run_ok(&[
        "adversary",
        "--family",
        "thm1-on-green",
        "--machines",
        "4",
        "--out",
        p(&inst),
    ]);
    std::fs::write(&opt, stdout(&run_ok(&["exact", "--instance", p(&inst)]))).unwrap();
    std::fs::write(
        &ff,
        stdout(&run_ok(&[
            "simulate",
            "--instance",
            p(&inst),
            "--policy",
            "first-fit",
        ])),
    )
    .unwrap();
    let out = stdout(&run_ok(&[
        "ratio",
        "--reference",
        p(&opt),
        "--algorithm",
        p(&ff),
    ]));

    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    let cluster = ClusterConfig::default();
    let tariff = PricingSchedule::default().tariff(cluster.energy_per_machine_slot());
    let v = normalized_values(cluster.charge_rate(), tariff).unwrap();
    let expected = v.green_exact() / v.on_exact();
    assert_eq!(row[3], format!("{}/{}", expected.numer(), expected.denom()));
    let approx: f64 = row[2].parse().unwrap();
    assert!((approx - 5.7895).abs() < 1e-4);
}

#[test]
fn sweep_has_one_row_per_cell_and_policy() {
    let o = run_ok(&[
        "sweep",
        "--utilizations",
        "0.1,1.0",
        "--L",
        "0.2",
        "--reps",
        "3",
        "--policies",
        "ff,bf,rf,gs",
        "--machines",
        "16",
        "--window-slots",
        "24",
        "--workload",
        "uniform",
        "--job-length-slots",
        "2",
        "--job-nodes",
        "4",
    ]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("utilization,least_quality,algorithm"));
    assert_eq!(lines.count(), 8);
}

#[test]
fn resolved_line_reproduces_the_run() {
    let args = [
        "sweep",
        "--utilizations",
        "0.5",
        "--reps",
        "2",
        "--policies",
        "rf",
        "--machines",
        "8",
        "--window-slots",
        "24",
        "--seed",
        "11",
    ];
    let first = run_ok(&args);
    let line = resolved_line(&first);
    let second = Command::new("sh")
        .arg("-c")
        .arg(format!("\"$GDCSIM\" {line}"))
        .env("GDCSIM", env!("CARGO_BIN_EXE_gdcsim"))
        .output()
        .unwrap();
    assert!(second.status.success(), "{}", stderr(&second));
    assert_eq!(stdout(&first), stdout(&second));
    assert_eq!(resolved_line(&second), line);
}

#[test]
fn sweep_reads_toml_plans_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.toml");
    std::fs::write(
        &plan,
        r#"
utilizations = [0.2, 0.4, 0.6]
least_qualities = [0.5]
repetitions = 2
window_slots = 24

[[policies]]
policy = "first-fit"

[[policies]]
policy = "random-fit"
randomfit_p_override = 1.0

[cluster]
machines = 8

[workload]
kind = "uniform"
length = 1
nodes = 2
"#,
    )
    .unwrap();
    let o = run_ok(&["sweep", "--plan", p(&plan), "--utilizations", "0.3"]);
    let table = gdc_core::harness::RatioTable::from_csv(&stdout(&o)).unwrap();
    assert_eq!(table.rows.len(), 2);
    // Random-fit that always takes the earliest start is first-fit.
    assert_eq!(table.rows[0].mean_profit, table.rows[1].mean_profit);
}

#[test]
fn exhausted_budget_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.txt");
    run_ok(&[
        "adversary",
        "--family",
        "thm2-on-off",
        "--machines",
        "2",
        "--out",
        p(&inst),
    ]);
    let o = gdcsim(&["exact", "--instance", p(&inst), "--max-nodes", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).starts_with("source,"));
}

#[test]
fn mc_ratio_reports_every_scenario() {
    let o = run_ok(&[
        "mc-ratio",
        "--trials",
        "10000",
        "--machines",
        "2",
        "--seed",
        "3",
    ]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 5);
    for line in text.lines().skip(1) {
        let cols: Vec<f64> = line
            .split(',')
            .skip(6)
            .map(|c| c.parse().unwrap())
            .collect();
        let (ratio, se, closed) = (cols[0], cols[1], cols[2]);
        assert!((ratio - closed).abs() <= 4.0 * se + 1e-12, "{line}");
    }
}

#[test]
fn simulate_writes_decision_log() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.txt");
    let log = dir.path().join("decisions.csv");
    run_ok(&[
        "adversary",
        "--family",
        "thm2-off-green",
        "--machines",
        "3",
        "--out",
        p(&inst),
    ]);
    run_ok(&[
        "simulate",
        "--instance",
        p(&inst),
        "--policy",
        "bf",
        "--decisions-out",
        p(&log),
    ]);
    assert_eq!(
        std::fs::read_to_string(&log).unwrap(),
        "job,start\n0,1\n1,rejected\n"
    );
}
