//! Experiment driver: utilization sweeps with repetitions, empirical
//! competitive-ratio lower bounds, green-energy augmentation, and Monte Carlo
//! estimates of the randomized policy's expected ratio.
//!
//! Ratios are `reference / algorithm` with no additive constant. The
//! reference is the exact optimum when every repetition of a cell was solved
//! to optimality, and otherwise the best online mean in that cell.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Duration;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{solve_exact, solve_exact_with, SolverBudget, SolverError};
use crate::model::{
    normalized_values, Instance, ModelError, Money, NormalizedValues, ProfitReport, Quality, Tariff,
};
use crate::schedulers::{optimal_probability, run_online, Policy, SchedulerConfig, Transition};
use crate::traces::{
    adversarial_instance, assemble_instance, parse_solar, parse_workload, scale_solar,
    scale_workload, synthetic_solar, synthetic_workload_trace, uniform_workload, ClusterConfig,
    Family, PricingSchedule, Scenario, SolarTrace, TraceError, WorkloadScaling, WorkloadTrace,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("cannot read ratio table: {0}")]
    Csv(#[from] csv::Error),
}

/// SplitMix64 finalizer folded over `parts`; stable across platforms and
/// releases.
pub fn mix_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x9E37_79B9_7F4A_7C15u64, |acc, &p| {
        let mut z = acc ^ p.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(acc << 6);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    })
}

fn label_hash(label: &str) -> u64 {
    mix_seed(&label.bytes().map(u64::from).collect::<Vec<_>>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WorkloadSource {
    /// Identical jobs with uniformly random releases.
    Uniform { length: usize, nodes: u32 },
    /// A synthetic batch trace of the given size.
    Synthetic { records: usize },
    /// An `arrival_s,runtime_s,nodes` CSV.
    Trace { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SolarSource {
    Synthetic,
    Trace { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentPlan {
    pub utilizations: Vec<f64>,
    pub least_qualities: Vec<f64>,
    pub policies: Vec<SchedulerConfig>,
    pub repetitions: usize,
    pub base_seed: u64,
    /// Draw a fresh workload for every repetition; when false every
    /// repetition of a cell sees the same instance.
    pub resample_workload: bool,
    pub cluster: ClusterConfig,
    pub pricing: PricingSchedule,
    /// Release window in slots (five days of hourly slots by default).
    pub window_slots: usize,
    pub workload: WorkloadSource,
    pub solar: SolarSource,
    pub offline: bool,
    pub solver_max_nodes: u64,
    pub solver_time_limit_s: f64,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            utilizations: (1..=15).map(|i| i as f64 / 10.0).collect(),
            least_qualities: vec![0.2, 0.05],
            policies: Policy::ALL
                .iter()
                .map(|&p| SchedulerConfig::new(p))
                .collect(),
            repetitions: 30,
            base_seed: 2015,
            resample_workload: true,
            cluster: ClusterConfig::default(),
            pricing: PricingSchedule::default(),
            window_slots: 120,
            workload: WorkloadSource::Synthetic { records: 20_000 },
            solar: SolarSource::Synthetic,
            offline: false,
            solver_max_nodes: 2_000_000,
            solver_time_limit_s: 30.0,
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Plan(m.to_string()));
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        if self.utilizations.is_empty()
            || self.least_qualities.is_empty()
            || self.policies.is_empty()
        {
            return bad("utilizations, least qualities and policies must be nonempty");
        }
        if self
            .utilizations
            .iter()
            .any(|u| !(u.is_finite() && *u >= 0.0))
        {
            return bad("utilizations must be finite and nonnegative");
        }
        if self.window_slots == 0 {
            return bad("window must be at least one slot");
        }
        for q in &self.least_qualities {
            Quality::from_f64(*q)?;
        }
        for p in &self.policies {
            p.validate()?;
        }
        let mut labels: Vec<_> = self.policies.iter().map(SchedulerConfig::label).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) || labels.iter().any(|l| l == OPT_LABEL) {
            return bad("policy labels must be distinct");
        }
        self.pricing.validate()?;
        Ok(())
    }

    fn budget(&self) -> SolverBudget {
        SolverBudget {
            max_nodes: self.solver_max_nodes,
            time_limit: Duration::from_secs_f64(self.solver_time_limit_s.max(0.0)),
        }
    }
}

pub const OPT_LABEL: &str = "opt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    /// Exact optimum, every repetition proven optimal.
    Exact,
    /// Best online mean.
    BestOnline,
    /// Best online mean because the solver ran out of budget.
    BestOnlineDowngraded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub utilization: f64,
    pub least_quality: f64,
    pub algorithm: String,
    pub repetitions: usize,
    /// Dollars.
    pub mean_profit: f64,
    pub std_dev: f64,
    pub ratio: Option<f64>,
    pub reference: ReferenceKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RatioTable {
    pub rows: Vec<RatioRow>,
}

impl RatioTable {
    pub fn row(&self, utilization: f64, least_quality: f64, algorithm: &str) -> Option<&RatioRow> {
        self.rows.iter().find(|r| {
            r.utilization == utilization
                && r.least_quality == least_quality
                && r.algorithm == algorithm
        })
    }

    pub fn to_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| HarnessError::Plan(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self, HarnessError> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let rows = r.deserialize().collect::<Result<Vec<RatioRow>, _>>()?;
        Ok(RatioTable { rows })
    }

    /// Column-aligned rendering for terminals.
    pub fn to_text(&self) -> String {
        let header = [
            "util",
            "L",
            "alg",
            "reps",
            "mean_profit",
            "std_dev",
            "ratio",
            "reference",
        ];
        let body: Vec<[String; 8]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    format!("{:.2}", r.utilization),
                    format!("{}", r.least_quality),
                    r.algorithm.clone(),
                    r.repetitions.to_string(),
                    format!("{:.4}", r.mean_profit),
                    format!("{:.4}", r.std_dev),
                    r.ratio.map_or("undefined".into(), |x| format!("{x:.4}")),
                    match r.reference {
                        ReferenceKind::Exact => "OPT".into(),
                        ReferenceKind::BestOnline => "OPT'".into(),
                        ReferenceKind::BestOnlineDowngraded => "OPT' (budget)".into(),
                    },
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &body {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: &[&str]| {
            let parts: Vec<_> = cells
                .iter()
                .zip(widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut out, &header);
        for row in &body {
            line(
                &mut out,
                &row.iter().map(String::as_str).collect::<Vec<_>>(),
            );
        }
        out
    }
}

/// Recomputes every ratio: per `(utilization, L)` cell the reference is the
/// `opt` row when present, else the largest mean. Cells whose reference is
/// not positive, and rows whose own mean is not positive, get no ratio.
pub fn ratio_lower_bound(table: &RatioTable) -> RatioTable {
    let mut out = table.clone();
    for i in 0..out.rows.len() {
        let (u, l) = (out.rows[i].utilization, out.rows[i].least_quality);
        let cell: Vec<&RatioRow> = table
            .rows
            .iter()
            .filter(|r| r.utilization == u && r.least_quality == l)
            .collect();
        let exact = cell.iter().find(|r| r.algorithm == OPT_LABEL);
        let (reference, kind) = match exact {
            Some(opt) => (opt.mean_profit, ReferenceKind::Exact),
            None => {
                let best = cell
                    .iter()
                    .map(|r| r.mean_profit)
                    .fold(f64::NEG_INFINITY, f64::max);
                let kind = if cell
                    .iter()
                    .any(|r| r.reference == ReferenceKind::BestOnlineDowngraded)
                {
                    ReferenceKind::BestOnlineDowngraded
                } else {
                    ReferenceKind::BestOnline
                };
                (best, kind)
            }
        };
        let row = &mut out.rows[i];
        row.reference = kind;
        row.ratio = (reference > 0.0 && row.mean_profit > 0.0).then(|| reference / row.mean_profit);
    }
    out
}

enum LoadedWorkload {
    Uniform { length: usize, nodes: u32 },
    Trace(WorkloadTrace),
}

struct Unit {
    cell: usize,
    profits: Vec<Money>,
    exact: Option<(Money, bool)>,
}

/// Runs every `(utilization, L)` cell for every repetition and policy.
///
/// Cells and repetitions run in parallel; results are reduced in plan order so
/// the table is independent of thread scheduling.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<RatioTable, HarnessError> {
    plan.validate()?;
    let workload = match &plan.workload {
        WorkloadSource::Uniform { length, nodes } => LoadedWorkload::Uniform {
            length: *length,
            nodes: *nodes,
        },
        WorkloadSource::Synthetic { records } => LoadedWorkload::Trace(synthetic_workload_trace(
            *records,
            plan.window_slots as f64 * plan.cluster.slot_seconds(),
            plan.base_seed,
        )),
        WorkloadSource::Trace { path } => LoadedWorkload::Trace(parse_workload(path)?),
    };
    let solar: SolarTrace = match &plan.solar {
        SolarSource::Synthetic => {
            let days = (plan.window_slots as f64 * plan.cluster.slot_minutes as f64 / 1440.0).ceil()
                as usize;
            synthetic_solar(days.max(1), 300, 1000.0)
        }
        SolarSource::Trace { path } => parse_solar(path)?,
    };
    let green = scale_solar(
        &solar,
        plan.cluster.machines,
        plan.cluster.watts_per_machine,
        plan.cluster.slot_minutes,
    )?;

    let cells: Vec<(f64, f64)> = plan
        .least_qualities
        .iter()
        .flat_map(|&l| plan.utilizations.iter().map(move |&u| (u, l)))
        .collect();
    let units: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..plan.repetitions).map(move |r| (c, r)))
        .collect();
    let budget = plan.budget();

    let results: Vec<Unit> = units
        .par_iter()
        .map(|&(c, rep)| -> Result<Unit, HarnessError> {
            let (u, l) = cells[c];
            let cell_key = [plan.base_seed, u.to_bits(), l.to_bits()];
            let instance_rep = if plan.resample_workload {
                rep as u64
            } else {
                0
            };
            let instance_seed = mix_seed(&[cell_key[0], cell_key[1], cell_key[2], instance_rep]);
            let quality = Quality::from_f64(l)?;
            let jobs = match &workload {
                LoadedWorkload::Uniform { length, nodes } => uniform_workload(
                    plan.cluster.machines,
                    plan.window_slots,
                    u,
                    *length,
                    *nodes,
                    quality,
                    instance_seed,
                )?,
                LoadedWorkload::Trace(trace) => scale_workload(
                    trace,
                    &WorkloadScaling {
                        machines: plan.cluster.machines,
                        slot_minutes: plan.cluster.slot_minutes,
                        window_slots: plan.window_slots,
                        utilization: u,
                        quality,
                        seed: instance_seed,
                    },
                )?,
            };
            let instance = assemble_instance(
                jobs,
                &plan.cluster,
                &plan.pricing,
                &green,
                plan.window_slots,
            )?;
            let profits = plan
                .policies
                .iter()
                .map(|cfg| {
                    let seed = mix_seed(&[
                        cell_key[0],
                        cell_key[1],
                        cell_key[2],
                        rep as u64,
                        label_hash(&cfg.label()),
                    ]);
                    let cfg = cfg.clone().with_seed(seed);
                    run_online(&instance, &cfg).map(|run| run.report.net_profit)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let exact = if plan.offline {
                let sol = solve_exact_with(&instance, budget)?;
                debug_assert!(!sol.optimal || profits.iter().all(|&p| p <= sol.net_profit()));
                Some((sol.net_profit(), sol.optimal))
            } else {
                None
            };
            Ok(Unit {
                cell: c,
                profits,
                exact,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut table = RatioTable::default();
    for (c, &(u, l)) in cells.iter().enumerate() {
        let units: Vec<&Unit> = results.iter().filter(|r| r.cell == c).collect();
        let downgraded = plan.offline && units.iter().any(|r| !r.exact.is_some_and(|e| e.1));
        let base_kind = if downgraded {
            ReferenceKind::BestOnlineDowngraded
        } else {
            ReferenceKind::BestOnline
        };
        for (k, cfg) in plan.policies.iter().enumerate() {
            let samples: Vec<Money> = units.iter().map(|r| r.profits[k]).collect();
            table
                .rows
                .push(summary_row(u, l, cfg.label(), &samples, base_kind));
        }
        if plan.offline && !downgraded {
            let samples: Vec<Money> = units.iter().map(|r| r.exact.expect("offline").0).collect();
            table.rows.push(summary_row(
                u,
                l,
                OPT_LABEL.into(),
                &samples,
                ReferenceKind::Exact,
            ));
        }
    }
    Ok(ratio_lower_bound(&table))
}

fn summary_row(
    utilization: f64,
    least_quality: f64,
    algorithm: String,
    samples: &[Money],
    reference: ReferenceKind,
) -> RatioRow {
    let (mean, sd) = mean_std(samples);
    RatioRow {
        utilization,
        least_quality,
        algorithm,
        repetitions: samples.len(),
        mean_profit: mean,
        std_dev: sd,
        ratio: None,
        reference,
    }
}

/// Mean and sample standard deviation in dollars, accumulated in exact
/// nano-dollar integers so identical samples give exactly zero spread.
fn mean_std(samples: &[Money]) -> (f64, f64) {
    let n = samples.len() as i128;
    if n == 0 {
        return (0.0, 0.0);
    }
    let sum: i128 = samples.iter().map(|m| m.nanos() as i128).sum();
    let mean = sum as f64 / n as f64 * 1e-9;
    if n < 2 {
        return (mean, 0.0);
    }
    // n^2 * sum of squared deviations = n * sum(n x_i - sum)^2 / n.
    let scaled: i128 = samples
        .iter()
        .map(|m| {
            let d = n * m.nanos() as i128 - sum;
            d * d
        })
        .sum();
    let var = scaled as f64 / (n * n) as f64 / (n - 1) as f64 * 1e-18;
    (mean, var.sqrt())
}

#[derive(Debug, Clone)]
pub struct AugmentationResult {
    /// The policy on the instance with green scaled by `alpha`.
    pub online: ProfitReport,
    /// The exact optimum on the original instance.
    pub offline: ProfitReport,
}

impl AugmentationResult {
    pub fn ratio(&self) -> Option<Ratio<i128>> {
        self.offline.net_profit.ratio(self.online.net_profit)
    }
}

/// Gives the online policy `alpha` times the green energy (rounded down per
/// slot) and compares it with the unaugmented optimum.
pub fn augmentation_experiment(
    instance: &Instance,
    alpha: f64,
    config: &SchedulerConfig,
) -> Result<AugmentationResult, HarnessError> {
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return Err(HarnessError::Plan(format!(
            "augmentation factor {alpha} must be at least 1"
        )));
    }
    let green = instance
        .green()
        .iter()
        .map(|&g| (g as f64 * alpha).floor() as u32)
        .collect();
    let boosted = instance.with_green(green)?;
    let online = run_online(&boosted, config)?.report;
    let offline = solve_exact(instance)?.report;
    Ok(AugmentationResult { online, offline })
}

/// Exact `OPT / ALG` on a proof instance for a deterministic policy.
pub fn adversarial_ratio(
    family: Family,
    config: &SchedulerConfig,
    machines: u32,
    tariff: Tariff,
    charge_rate: Money,
) -> Result<Option<Ratio<i128>>, HarnessError> {
    let instance = adversarial_instance(family, machines, tariff, charge_rate)?;
    let opt = solve_exact(&instance)?.net_profit();
    let alg = run_online(&instance, config)?.report.net_profit;
    Ok(opt.ratio(alg))
}

pub const MIN_MONTE_CARLO_TRIALS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloResult {
    pub trials: usize,
    /// Dollars.
    pub optimum: f64,
    pub mean_profit: f64,
    /// Standard error of `mean_profit`.
    pub profit_se: f64,
    /// `optimum / mean_profit`.
    pub ratio: f64,
    /// Delta-method standard error of `ratio`.
    pub ratio_se: f64,
}

/// Runs the randomized policy `trials` times on a proof scenario, each trial
/// with its own seed, and estimates `OPT / E[RF]`.
pub fn monte_carlo_ratio(
    scenario: Scenario,
    machines: u32,
    tariff: Tariff,
    charge_rate: Money,
    trials: usize,
    seed: u64,
    p_override: Option<f64>,
) -> Result<MonteCarloResult, HarnessError> {
    if trials < MIN_MONTE_CARLO_TRIALS {
        return Err(HarnessError::Plan(format!(
            "at least {MIN_MONTE_CARLO_TRIALS} trials are required (got {trials})"
        )));
    }
    let instance =
        adversarial_instance(Family::RandomFit(scenario), machines, tariff, charge_rate)?;
    let optimum = solve_exact(&instance)?.net_profit();
    let mut base = SchedulerConfig::new(Policy::RandomFit);
    base.randomfit_p_override = p_override;
    let (sum, sum_sq) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let cfg = base.clone().with_seed(mix_seed(&[seed, t as u64]));
            run_online(&instance, &cfg).map(|r| {
                let x = r.report.net_profit.nanos() as i128;
                (x, x * x)
            })
        })
        .try_reduce(|| (0i128, 0i128), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    let n = trials as f64;
    let mean = sum as f64 / n;
    let var = ((sum_sq as f64 - sum as f64 * mean) / (n - 1.0)).max(0.0);
    let se = (var / n).sqrt();
    let opt = optimum.nanos() as f64;
    let nano = 1e-9;
    Ok(MonteCarloResult {
        trials,
        optimum: opt * nano,
        mean_profit: mean * nano,
        profit_se: se * nano,
        ratio: opt / mean,
        ratio_se: opt * se / (mean * mean),
    })
}

/// Expected `OPT / RF` on a scenario when the earliest start is taken with
/// probability `p_on` (on-peak earliest) or `p_off` (off-peak earliest).
pub fn closed_form_ratio(
    scenario: Scenario,
    values: &NormalizedValues,
    p_on: f64,
    p_off: f64,
) -> f64 {
    let (on, off, g) = (values.on(), values.off(), values.green());
    match scenario {
        Scenario::OnOffSingle => off / (p_on * on + (1.0 - p_on) * off),
        Scenario::OnOffPair => (on + off) / (p_on * on + off),
        Scenario::OffGreenSingle => g / (p_off * off + (1.0 - p_off) * g),
        Scenario::OffGreenPair => (g + off) / (p_off * off + g),
    }
}

/// Optimal probabilities `(p, p')` for the given pricing.
pub fn balanced_probabilities(
    charge_rate: Money,
    tariff: Tariff,
) -> Result<(NormalizedValues, f64, f64), ModelError> {
    let values = normalized_values(charge_rate, tariff)?;
    Ok((
        values,
        optimal_probability(&values, Transition::OnToOff),
        optimal_probability(&values, Transition::OffToOn),
    ))
}
