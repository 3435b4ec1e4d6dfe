//! `gdcsim`: run schedulers, the exact solver and experiment sweeps from the
//! command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 input or parse error, 3 solver
//! budget exhausted. Every run echoes its fully resolved invocation on stderr
//! as a single `resolved:` line that reproduces the run when pasted back.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context as _};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gdc_core::exact::{solve_exact_with, SolverBudget};
use gdc_core::harness::{
    balanced_probabilities, closed_form_ratio, monte_carlo_ratio, ratio_lower_bound,
    run_experiment, ExperimentPlan, HarnessError, RatioTable, SolarSource, WorkloadSource,
};
use gdc_core::model::{ModelError, Money, ProfitReport};
use gdc_core::schedulers::{run_online, Decision, Outcome, Policy, SchedulerConfig};
use gdc_core::traces::{
    adversarial_instance, read_instance, write_instance, ClusterConfig, Family, PricingSchedule,
    Scenario, TraceError,
};

#[derive(Debug, Parser)]
#[command(
    name = "gdcsim",
    version,
    about = "Energy-aware batch scheduling simulator"
)]
struct Cli {
    /// Increase log verbosity (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one online policy on an instance file and print its profit report.
    Simulate(SimulateArgs),
    /// Execute an experiment plan and print the ratio table.
    Sweep(Box<SweepArgs>),
    /// Solve an instance file exactly and print the optimal profit report.
    Exact(ExactArgs),
    /// Emit one of the two-slot worst-case instances.
    Adversary(AdversaryArgs),
    /// Compare profit reports, or recompute ratios in a sweep table.
    Ratio(RatioArgs),
    /// Estimate random-fit's expected ratio on the two-slot scenarios.
    McRatio(McRatioArgs),
}

/// Cluster and tariff overrides shared by the commands that build instances.
#[derive(Debug, Args, Default)]
struct ClusterArgs {
    #[arg(long)]
    machines: Option<u32>,
    #[arg(long)]
    watts_per_machine: Option<f64>,
    #[arg(long)]
    slot_minutes: Option<u32>,
    #[arg(long)]
    charge_rate_usd_per_machine_hour: Option<f64>,
    #[arg(long)]
    on_peak_usd_per_kwh: Option<f64>,
    #[arg(long)]
    off_peak_usd_per_kwh: Option<f64>,
    #[arg(long)]
    on_peak_start_hour: Option<u32>,
    #[arg(long)]
    on_peak_end_hour: Option<u32>,
}

impl ClusterArgs {
    fn apply(&self, cluster: &mut ClusterConfig, pricing: &mut PricingSchedule) {
        fn set<T: Copy>(dst: &mut T, src: Option<T>) {
            if let Some(v) = src {
                *dst = v;
            }
        }
        set(&mut cluster.machines, self.machines);
        set(&mut cluster.watts_per_machine, self.watts_per_machine);
        set(&mut cluster.slot_minutes, self.slot_minutes);
        set(
            &mut cluster.charge_rate_per_hour,
            self.charge_rate_usd_per_machine_hour,
        );
        set(&mut pricing.on_peak_price, self.on_peak_usd_per_kwh);
        set(&mut pricing.off_peak_price, self.off_peak_usd_per_kwh);
        set(&mut pricing.on_peak_start_hour, self.on_peak_start_hour);
        set(&mut pricing.on_peak_end_hour, self.on_peak_end_hour);
    }

    fn resolve(&self) -> Result<(ClusterConfig, PricingSchedule), Failure> {
        let (mut cluster, mut pricing) = (ClusterConfig::default(), PricingSchedule::default());
        self.apply(&mut cluster, &mut pricing);
        pricing.validate().map_err(|e| Failure::Usage(e.into()))?;
        if cluster.machines == 0 || cluster.slot_minutes == 0 {
            return Err(Failure::Usage(anyhow!(
                "machines and slot minutes must be positive"
            )));
        }
        Ok((cluster, pricing))
    }
}

fn cluster_flags(cluster: &ClusterConfig, pricing: &PricingSchedule) -> Vec<String> {
    vec![
        format!("--machines={}", cluster.machines),
        format!("--watts-per-machine={}", cluster.watts_per_machine),
        format!("--slot-minutes={}", cluster.slot_minutes),
        format!(
            "--charge-rate-usd-per-machine-hour={}",
            cluster.charge_rate_per_hour
        ),
        format!("--on-peak-usd-per-kwh={}", pricing.on_peak_price),
        format!("--off-peak-usd-per-kwh={}", pricing.off_peak_price),
        format!("--on-peak-start-hour={}", pricing.on_peak_start_hour),
        format!("--on-peak-end-hour={}", pricing.on_peak_end_hour),
    ]
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "first-fit")]
    policy: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random-fit probability of taking the earliest start; derived from the
    /// tariff when omitted.
    #[arg(long)]
    probability: Option<f64>,
    /// Green-slot late-start penalty; twice the on-peak price when omitted.
    #[arg(long)]
    greenslot_penalty_usd_per_machine_slot: Option<Money>,
    #[arg(long, default_value_t = 0.2)]
    greenslot_slack_fraction: f64,
    /// Also write the decision log as CSV to this path.
    #[arg(long)]
    decisions_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExactArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = SolverBudget::default().max_nodes)]
    max_nodes: u64,
    #[arg(long, default_value_t = SolverBudget::default().time_limit.as_secs_f64())]
    time_limit_s: f64,
    /// Also write the optimal assignment as CSV to this path.
    #[arg(long)]
    schedule_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AdversaryArgs {
    /// One of thm1-on-green, thm1-on-off, thm2-on-off, thm2-off-green,
    /// thm3-1.1, thm3-1.2, thm3-2.1, thm3-2.2.
    #[arg(long)]
    family: String,
    #[command(flatten)]
    cluster: ClusterArgs,
    /// Write the instance here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RatioArgs {
    /// Profit report CSV of the reference (usually `exact` output).
    #[arg(long, requires = "algorithm", conflicts_with = "table")]
    reference: Option<PathBuf>,
    /// Profit report CSV of the algorithm under test.
    #[arg(long, requires = "reference")]
    algorithm: Option<PathBuf>,
    /// Sweep table CSV whose ratios are recomputed.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct McRatioArgs {
    /// 1.1, 1.2, 2.1, 2.2 or all.
    #[arg(long, default_value = "all")]
    scenario: String,
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fixed probability of taking the earliest start in every scenario.
    #[arg(long)]
    probability: Option<f64>,
    #[command(flatten)]
    cluster: ClusterArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Format {
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WorkloadKind {
    Uniform,
    Synthetic,
    Trace,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Plan file (TOML, or JSON when the extension is `.json`).
    #[arg(long, conflicts_with = "plan_json")]
    plan: Option<PathBuf>,
    /// Plan given inline as JSON.
    #[arg(long)]
    plan_json: Option<String>,
    #[arg(long, value_delimiter = ',')]
    utilizations: Option<Vec<f64>>,
    /// Least service qualities.
    #[arg(long = "least-quality", alias = "L", value_delimiter = ',')]
    least_quality: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    policies: Option<Vec<String>>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Reuse one workload for every repetition of a cell.
    #[arg(long)]
    fixed_workload: bool,
    #[arg(long)]
    window_slots: Option<usize>,
    #[arg(long, value_enum)]
    workload: Option<WorkloadKind>,
    #[arg(long)]
    job_length_slots: Option<usize>,
    #[arg(long)]
    job_nodes: Option<u32>,
    #[arg(long)]
    synthetic_records: Option<usize>,
    /// `arrival_s,runtime_s,nodes` CSV; implies `--workload trace`.
    #[arg(long)]
    workload_trace: Option<PathBuf>,
    /// `timestamp,watts` CSV (seconds, watts) of one panel array's output.
    #[arg(long)]
    solar_trace: Option<PathBuf>,
    /// Also solve every instance exactly.
    #[arg(long)]
    offline: bool,
    #[arg(long)]
    max_nodes: Option<u64>,
    #[arg(long)]
    time_limit_s: Option<f64>,
    #[command(flatten)]
    cluster: ClusterArgs,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Input(anyhow::Error),
    Budget(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Input(_) => 2,
            Failure::Budget(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(e) => write!(f, "usage error: {e:#}"),
            Failure::Input(e) => write!(f, "input error: {e:#}"),
            Failure::Budget(m) => write!(f, "solver budget exhausted: {m}"),
        }
    }
}

impl From<TraceError> for Failure {
    fn from(e: TraceError) -> Self {
        Failure::Input(e.into())
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Configuration(_) => Failure::Usage(e.into()),
            _ => Failure::Input(e.into()),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Plan(_) => Failure::Usage(e.into()),
            HarnessError::Model(m) => m.into(),
            other => Failure::Input(other.into()),
        }
    }
}

impl From<gdc_core::exact::SolverError> for Failure {
    fn from(e: gdc_core::exact::SolverError) -> Self {
        match e {
            gdc_core::exact::SolverError::Model(m) => m.into(),
            other => Failure::Usage(other.into()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(*a),
        Command::Exact(a) => exact(a),
        Command::Adversary(a) => adversary(a),
        Command::Ratio(a) => ratio(a),
        Command::McRatio(a) => mc_ratio(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("gdcsim: {f}");
            ExitCode::from(f.code())
        }
    }
}

/// Quotes `s` for a POSIX shell when it contains anything beyond a safe set.
fn sh_quote(s: &str) -> String {
    let safe = |c: char| c.is_ascii_alphanumeric() || "_-./,:=+@%".contains(c);
    if !s.is_empty() && s.chars().all(safe) {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\'', r"'\''"))
    }
}

fn echo_resolved(subcommand: &str, flags: &[String]) {
    let mut line = format!("resolved: gdcsim {subcommand}");
    for f in flags {
        line.push(' ');
        line.push_str(&sh_quote(f));
    }
    eprintln!("{line}");
}

fn path_flag(name: &str, path: &Path) -> String {
    format!("--{name}={}", path.display())
}

fn emit(text: &str) -> CmdResult {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Failure::Input(anyhow!("cannot write to stdout: {e}")))
}

fn write_file(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Failure::Input)
}

#[derive(Serialize)]
struct ReportRow<'a> {
    source: &'a str,
    revenue: Money,
    brown_cost: Money,
    net_profit: Money,
    green_used: u64,
    green_available: u64,
    jobs_completed: usize,
    workload_completed: u64,
}

fn report_csv(source: &str, r: &ProfitReport) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.serialize(ReportRow {
        source,
        revenue: r.revenue,
        brown_cost: r.brown_cost,
        net_profit: r.net_profit,
        green_used: r.green_used,
        green_available: r.green_available,
        jobs_completed: r.jobs_completed,
        workload_completed: r.workload_completed,
    })
    .map_err(|e| Failure::Input(e.into()))?;
    let bytes = w.into_inner().map_err(|e| Failure::Input(anyhow!("{e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn simulate(a: SimulateArgs) -> CmdResult {
    let policy: Policy = a.policy.parse()?;
    let mut config = SchedulerConfig::new(policy).with_seed(a.seed);
    config.randomfit_p_override = a.probability;
    config.greenslot_penalty = a.greenslot_penalty_usd_per_machine_slot;
    config.greenslot_slack_fraction = a.greenslot_slack_fraction;
    config.validate()?;

    let mut flags = vec![
        path_flag("instance", &a.instance),
        format!("--policy={}", policy.name()),
        format!("--seed={}", a.seed),
        format!("--greenslot-slack-fraction={}", a.greenslot_slack_fraction),
    ];
    if let Some(p) = a.probability {
        flags.push(format!("--probability={p}"));
    }
    if let Some(m) = a.greenslot_penalty_usd_per_machine_slot {
        flags.push(format!("--greenslot-penalty-usd-per-machine-slot={m}"));
    }
    if let Some(p) = &a.decisions_out {
        flags.push(path_flag("decisions-out", p));
    }
    echo_resolved("simulate", &flags);

    let instance = read_instance(&a.instance)?;
    let run = run_online(&instance, &config)?;
    log::info!(
        "{} scheduled {} of {} jobs",
        config.label(),
        run.report.jobs_completed,
        instance.jobs().len()
    );
    if let Some(path) = &a.decisions_out {
        write_file(path, &decisions_csv(&run.decisions))?;
    }
    emit(&report_csv(&config.label(), &run.report)?)
}

fn decisions_csv(decisions: &[Decision]) -> String {
    let mut out = String::from("job,start\n");
    for d in decisions {
        let start = match d.outcome {
            Outcome::Scheduled(s) => s.to_string(),
            Outcome::Rejected(_) => "rejected".into(),
        };
        out.push_str(&format!("{},{start}\n", d.job));
    }
    out
}

fn exact(a: ExactArgs) -> CmdResult {
    if !(a.time_limit_s.is_finite() && a.time_limit_s >= 0.0) {
        return Err(Failure::Usage(anyhow!(
            "time limit must be a nonnegative number of seconds"
        )));
    }
    let mut flags = vec![
        path_flag("instance", &a.instance),
        format!("--max-nodes={}", a.max_nodes),
        format!("--time-limit-s={}", a.time_limit_s),
    ];
    if let Some(p) = &a.schedule_out {
        flags.push(path_flag("schedule-out", p));
    }
    echo_resolved("exact", &flags);

    let instance = read_instance(&a.instance)?;
    let budget = SolverBudget {
        max_nodes: a.max_nodes,
        time_limit: Duration::from_secs_f64(a.time_limit_s),
    };
    let sol = solve_exact_with(&instance, budget)?;
    log::info!(
        "explored {} nodes in {:?}",
        sol.nodes_explored,
        sol.wall_time
    );
    if let Some(path) = &a.schedule_out {
        let mut text = String::from("job,start\n");
        for (job, start) in sol.state.assignments() {
            text.push_str(&format!("{job},{start}\n"));
        }
        write_file(path, &text)?;
    }
    let source = if sol.optimal { "opt" } else { "incumbent" };
    emit(&report_csv(source, &sol.report)?)?;
    if sol.optimal {
        Ok(())
    } else {
        Err(Failure::Budget(format!(
            "stopped after {} nodes and {:.1} s; the printed report is the best schedule found",
            sol.nodes_explored,
            sol.wall_time.as_secs_f64()
        )))
    }
}

fn adversary(a: AdversaryArgs) -> CmdResult {
    let family: Family = a.family.parse()?;
    let (cluster, pricing) = a.cluster.resolve()?;
    let mut flags = vec![format!("--family={}", family.name())];
    flags.extend(cluster_flags(&cluster, &pricing));
    if let Some(p) = &a.out {
        flags.push(path_flag("out", p));
    }
    echo_resolved("adversary", &flags);

    let tariff = pricing.tariff(cluster.energy_per_machine_slot());
    let instance = adversarial_instance(family, cluster.machines, tariff, cluster.charge_rate())?;
    let text = write_instance(&instance);
    match &a.out {
        Some(path) => write_file(path, &text),
        None => emit(&text),
    }
}

/// Net profit from the first row of a report CSV written by `simulate` or
/// `exact`.
fn read_net_profit(path: &Path) -> Result<Money, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Input)?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let bad = |m: String| Failure::Input(anyhow!("{}: {m}", path.display()));
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let column = headers
        .iter()
        .position(|h| h == "net_profit")
        .ok_or_else(|| bad("no net_profit column".into()))?;
    let record = reader
        .records()
        .next()
        .ok_or_else(|| bad("no data row".into()))?
        .map_err(|e| bad(e.to_string()))?;
    record[column]
        .parse()
        .map_err(|e: ModelError| bad(e.to_string()))
}

fn ratio(a: RatioArgs) -> CmdResult {
    match (&a.reference, &a.algorithm, &a.table) {
        (Some(reference), Some(algorithm), None) => {
            echo_resolved(
                "ratio",
                &[
                    path_flag("reference", reference),
                    path_flag("algorithm", algorithm),
                ],
            );
            let opt = read_net_profit(reference)?;
            let alg = read_net_profit(algorithm)?;
            let (exact, approx) = match opt.ratio(alg) {
                Some(r) => (
                    format!("{}/{}", r.numer(), r.denom()),
                    format!("{}", *r.numer() as f64 / *r.denom() as f64),
                ),
                None => ("undefined".into(), "undefined".into()),
            };
            emit(&format!(
                "reference_net_profit,algorithm_net_profit,ratio,ratio_exact\n{opt},{alg},{approx},{exact}\n"
            ))
        }
        (None, None, Some(table)) => {
            echo_resolved("ratio", &[path_flag("table", table)]);
            let text = fs::read_to_string(table)
                .with_context(|| format!("cannot read {}", table.display()))
                .map_err(Failure::Input)?;
            let parsed = RatioTable::from_csv(&text)?;
            emit(&ratio_lower_bound(&parsed).to_csv()?)
        }
        _ => Err(Failure::Usage(anyhow!(
            "give either --reference and --algorithm, or --table"
        ))),
    }
}

fn parse_scenarios(s: &str) -> Result<Vec<Scenario>, Failure> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(Scenario::ALL.to_vec());
    }
    s.split(',')
        .map(|part| {
            Scenario::ALL
                .into_iter()
                .find(|sc| sc.label() == part.trim())
                .ok_or_else(|| {
                    Failure::Usage(anyhow!(
                        "unknown scenario {part:?}; expected 1.1, 1.2, 2.1, 2.2 or all"
                    ))
                })
        })
        .collect()
}

fn mc_ratio(a: McRatioArgs) -> CmdResult {
    let scenarios = parse_scenarios(&a.scenario)?;
    let (cluster, pricing) = a.cluster.resolve()?;
    let mut flags = vec![
        format!(
            "--scenario={}",
            scenarios
                .iter()
                .map(|s| s.label())
                .collect::<Vec<_>>()
                .join(",")
        ),
        format!("--trials={}", a.trials),
        format!("--seed={}", a.seed),
    ];
    if let Some(p) = a.probability {
        flags.push(format!("--probability={p}"));
    }
    flags.extend(cluster_flags(&cluster, &pricing));
    echo_resolved("mc-ratio", &flags);

    let tariff = pricing.tariff(cluster.energy_per_machine_slot());
    let beta = cluster.charge_rate();
    let (values, p_on, p_off) = balanced_probabilities(beta, tariff)?;
    let (p_on, p_off) = a.probability.map_or((p_on, p_off), |p| (p, p));
    let mut out = String::from(
        "scenario,trials,probability,optimum,mean_profit,profit_se,ratio,ratio_se,closed_form\n",
    );
    for sc in scenarios {
        let r = monte_carlo_ratio(
            sc,
            cluster.machines,
            tariff,
            beta,
            a.trials,
            a.seed,
            a.probability,
        )?;
        let p = match sc {
            Scenario::OnOffSingle | Scenario::OnOffPair => p_on,
            Scenario::OffGreenSingle | Scenario::OffGreenPair => p_off,
        };
        out.push_str(&format!(
            "{},{},{p},{},{},{},{},{},{}\n",
            sc.label(),
            r.trials,
            r.optimum,
            r.mean_profit,
            r.profit_se,
            r.ratio,
            r.ratio_se,
            closed_form_ratio(sc, &values, p_on, p_off)
        ));
    }
    emit(&out)
}

fn load_plan(a: &SweepArgs) -> Result<ExperimentPlan, Failure> {
    if let Some(json) = &a.plan_json {
        return serde_json::from_str(json).map_err(|e| Failure::Input(anyhow!("inline plan: {e}")));
    }
    let Some(path) = &a.plan else {
        return Ok(ExperimentPlan::default());
    };
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read plan {}", path.display()))
        .map_err(Failure::Input)?;
    let parsed = if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        serde_json::from_str(&text).map_err(anyhow::Error::from)
    } else {
        toml::from_str(&text).map_err(anyhow::Error::from)
    };
    parsed
        .with_context(|| format!("cannot parse plan {}", path.display()))
        .map_err(Failure::Input)
}

fn sweep(a: SweepArgs) -> CmdResult {
    let mut plan = load_plan(&a)?;
    if let Some(u) = &a.utilizations {
        plan.utilizations = u.clone();
    }
    if let Some(l) = &a.least_quality {
        plan.least_qualities = l.clone();
    }
    if let Some(p) = &a.policies {
        plan.policies = p
            .iter()
            .map(|name| name.parse().map(SchedulerConfig::new))
            .collect::<Result<_, ModelError>>()?;
    }
    if let Some(r) = a.reps {
        plan.repetitions = r;
    }
    if let Some(s) = a.seed {
        plan.base_seed = s;
    }
    if a.fixed_workload {
        plan.resample_workload = false;
    }
    if let Some(w) = a.window_slots {
        plan.window_slots = w;
    }
    let (length, nodes) = match plan.workload {
        WorkloadSource::Uniform { length, nodes } => (length, nodes),
        _ => (1, 1),
    };
    let kind = if a.workload_trace.is_some() {
        Some(WorkloadKind::Trace)
    } else {
        a.workload
    };
    match kind {
        Some(WorkloadKind::Uniform) => {
            plan.workload = WorkloadSource::Uniform { length, nodes };
        }
        Some(WorkloadKind::Synthetic) => {
            plan.workload = WorkloadSource::Synthetic {
                records: a.synthetic_records.unwrap_or(20_000),
            };
        }
        Some(WorkloadKind::Trace) => {
            let path = a.workload_trace.clone().ok_or_else(|| {
                Failure::Usage(anyhow!("--workload trace needs --workload-trace"))
            })?;
            plan.workload = WorkloadSource::Trace { path };
        }
        None => {}
    }
    match &mut plan.workload {
        WorkloadSource::Uniform { length, nodes } => {
            *length = a.job_length_slots.unwrap_or(*length);
            *nodes = a.job_nodes.unwrap_or(*nodes);
        }
        WorkloadSource::Synthetic { records } => *records = a.synthetic_records.unwrap_or(*records),
        WorkloadSource::Trace { .. } => {}
    }
    if let Some(path) = &a.solar_trace {
        plan.solar = SolarSource::Trace { path: path.clone() };
    }
    if a.offline {
        plan.offline = true;
    }
    if let Some(n) = a.max_nodes {
        plan.solver_max_nodes = n;
    }
    if let Some(t) = a.time_limit_s {
        plan.solver_time_limit_s = t;
    }
    a.cluster.apply(&mut plan.cluster, &mut plan.pricing);
    plan.validate()?;

    let json = serde_json::to_string(&plan).map_err(|e| Failure::Usage(e.into()))?;
    let format = serde_json::to_value(a.format)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default();
    echo_resolved(
        "sweep",
        &[format!("--plan-json={json}"), format!("--format={format}")],
    );

    let table = run_experiment(&plan)?;
    let downgraded = table
        .rows
        .iter()
        .filter(|r| r.reference == gdc_core::harness::ReferenceKind::BestOnlineDowngraded)
        .count();
    if downgraded > 0 {
        log::warn!("{downgraded} rows fell back to the best online reference after the solver budget ran out");
    }
    match a.format {
        Format::Csv => emit(&table.to_csv()?),
        Format::Text => emit(&table.to_text()),
    }
}
