//! Inputs: workload and solar traces, time-of-use pricing, the proof
//! instances, and the canonical instance file.
//!
//! # Instance file
//!
//! UTF-8, line oriented. `#` starts a comment; blank lines are ignored.
//! Sections appear in this order:
//!
//! ```text
//! [cluster]
//! machines = 4
//! horizon_slots = 2
//! charge_rate_usd_per_machine_slot = 0.022
//! [tariff]                                  # optional
//! on_peak_usd_per_machine_slot = 0.0182
//! off_peak_usd_per_machine_slot = 0.0112
//! [pricing]                                 # usd per machine-slot, one line per slot
//! 0.0182
//! 0.0112
//! [green]                                   # machine-slots, one line per slot
//! 0
//! 4
//! [jobs]                                    # id release_slot length_slots nodes least_quality
//! 0 0 1 4 1/2
//! ```
//!
//! Amounts are exact decimals with at most nine fractional digits; least
//! quality is a reduced fraction.

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Instance, Job, JobId, ModelError, Money, Quality, Tariff};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: u64,
        message: String,
    },
    #[error("{0}")]
    Scaling(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn parse_err(source_name: &str, line: u64, message: impl Into<String>) -> TraceError {
    TraceError::Parse {
        source_name: source_name.to_string(),
        line,
        message: message.into(),
    }
}

fn read_file(path: &Path) -> Result<String, TraceError> {
    let mut text = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| TraceError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    Ok(text)
}

/// Cluster and billing constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    pub machines: u32,
    pub watts_per_machine: f64,
    pub slot_minutes: u32,
    /// Dollars per machine-hour.
    pub charge_rate_per_hour: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            machines: 100,
            watts_per_machine: 140.0,
            slot_minutes: 60,
            charge_rate_per_hour: 0.022,
        }
    }
}

impl ClusterConfig {
    /// kWh drawn by one busy machine over one slot.
    pub fn energy_per_machine_slot(&self) -> f64 {
        self.watts_per_machine * self.slot_minutes as f64 / 60.0 / 1000.0
    }

    pub fn charge_rate(&self) -> Money {
        Money::from_dollars(self.charge_rate_per_hour * self.slot_minutes as f64 / 60.0)
    }

    pub fn slot_seconds(&self) -> f64 {
        self.slot_minutes as f64 * 60.0
    }
}

/// Daily two-tier time-of-use electricity price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PricingSchedule {
    /// Dollars per kWh.
    pub on_peak_price: f64,
    pub off_peak_price: f64,
    /// On-peak hours are `[on_peak_start_hour, on_peak_end_hour)` each day.
    pub on_peak_start_hour: u32,
    pub on_peak_end_hour: u32,
}

impl Default for PricingSchedule {
    fn default() -> Self {
        PricingSchedule {
            on_peak_price: 0.13,
            off_peak_price: 0.08,
            on_peak_start_hour: 9,
            on_peak_end_hour: 23,
        }
    }
}

impl PricingSchedule {
    pub fn validate(&self) -> Result<(), TraceError> {
        if !(self.off_peak_price > 0.0 && self.on_peak_price >= self.off_peak_price) {
            return Err(TraceError::Scaling(format!(
                "prices must satisfy on-peak >= off-peak > 0 (got {} and {})",
                self.on_peak_price, self.off_peak_price
            )));
        }
        if self.on_peak_start_hour > 24 || self.on_peak_end_hour > 24 {
            return Err(TraceError::Scaling(
                "on-peak hours must lie in [0, 24]".into(),
            ));
        }
        Ok(())
    }

    pub fn is_on_peak_hour(&self, hour_of_day: f64) -> bool {
        let (start, end) = (self.on_peak_start_hour as f64, self.on_peak_end_hour as f64);
        if start <= end {
            hour_of_day >= start && hour_of_day < end
        } else {
            hour_of_day >= start || hour_of_day < end
        }
    }

    pub fn tariff(&self, energy_per_machine_slot: f64) -> Tariff {
        Tariff {
            on_peak: Money::from_dollars(self.on_peak_price * energy_per_machine_slot),
            off_peak: Money::from_dollars(self.off_peak_price * energy_per_machine_slot),
        }
    }
}

/// Brown price per machine-slot for each slot; slot 0 starts at midnight and
/// a slot takes the tier of its start time.
pub fn pricing_series(
    schedule: &PricingSchedule,
    horizon: usize,
    slot_minutes: u32,
    energy_per_machine_slot: f64,
) -> Vec<Money> {
    let tariff = schedule.tariff(energy_per_machine_slot);
    (0..horizon)
        .map(|t| {
            let hour = ((t as u64 * slot_minutes as u64) % (24 * 60)) as f64 / 60.0;
            if schedule.is_on_peak_hour(hour) {
                tariff.on_peak
            } else {
                tariff.off_peak
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkloadRecord {
    pub arrival_s: f64,
    pub runtime_s: f64,
    pub nodes: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadTrace {
    pub records: Vec<WorkloadRecord>,
    pub source: String,
}

const WORKLOAD_HEADER: [&str; 3] = ["arrival_s", "runtime_s", "nodes"];

pub fn parse_workload(path: &Path) -> Result<WorkloadTrace, TraceError> {
    let text = read_file(path)?;
    parse_workload_str(&text, &path.display().to_string())
}

/// Parses `arrival_s,runtime_s,nodes` CSV. Records are sorted by arrival.
pub fn parse_workload_str(text: &str, source_name: &str) -> Result<WorkloadTrace, TraceError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    let mut rows = reader.records();
    match rows.next() {
        None => {
            warn!("{source_name}: empty workload trace");
            return Ok(WorkloadTrace {
                records,
                source: source_name.to_string(),
            });
        }
        Some(header) => {
            let header = header.map_err(|e| parse_err(source_name, 1, e.to_string()))?;
            if header.iter().collect::<Vec<_>>() != WORKLOAD_HEADER {
                return Err(parse_err(
                    source_name,
                    1,
                    format!("expected header {:?}", WORKLOAD_HEADER.join(",")),
                ));
            }
        }
    }
    for row in rows {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(source_name, line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 3 {
            return Err(parse_err(
                source_name,
                line,
                format!("expected 3 fields, found {}", row.len()),
            ));
        }
        let num = |i: usize, name: &str| -> Result<f64, TraceError> {
            row[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    parse_err(
                        source_name,
                        line,
                        format!("{name} {:?} is not a number", &row[i]),
                    )
                })
        };
        let arrival_s = num(0, "arrival_s")?;
        let runtime_s = num(1, "runtime_s")?;
        let nodes: u32 = row[2].parse().map_err(|_| {
            parse_err(
                source_name,
                line,
                format!("nodes {:?} is not a count", &row[2]),
            )
        })?;
        if arrival_s < 0.0 {
            return Err(parse_err(source_name, line, "arrival_s is negative"));
        }
        if runtime_s <= 0.0 {
            return Err(parse_err(source_name, line, "runtime_s must be positive"));
        }
        if nodes == 0 {
            return Err(parse_err(source_name, line, "nodes must be at least 1"));
        }
        records.push(WorkloadRecord {
            arrival_s,
            runtime_s,
            nodes,
        });
    }
    if records.is_empty() {
        warn!("{source_name}: workload trace has no records");
    }
    records.sort_by(|a, b| a.arrival_s.total_cmp(&b.arrival_s));
    Ok(WorkloadTrace {
        records,
        source: source_name.to_string(),
    })
}

pub fn write_workload_csv(trace: &WorkloadTrace) -> String {
    let mut out = String::from("arrival_s,runtime_s,nodes\n");
    for r in &trace.records {
        let _ = writeln!(out, "{},{},{}", r.arrival_s, r.runtime_s, r.nodes);
    }
    out
}

/// Parameters for turning a trace into a job list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkloadScaling {
    pub machines: u32,
    pub slot_minutes: u32,
    /// Release window length in slots; utilization is measured against
    /// `machines * window_slots`.
    pub window_slots: usize,
    pub utilization: f64,
    pub quality: Quality,
    pub seed: u64,
}

/// Relative tolerance on the sampled demand.
pub const UTILIZATION_TOLERANCE: f64 = 0.02;

/// Samples trace records without replacement until the total demand
/// `sum(length * nodes)` lands within 2% of `utilization * machines * window`.
///
/// Arrivals are folded into the window modulo its duration, runtimes are
/// rounded up to whole slots, and node counts are clamped to `[1, machines]`.
/// Records longer than the window are skipped.
pub fn scale_workload(
    trace: &WorkloadTrace,
    scaling: &WorkloadScaling,
) -> Result<Vec<Job>, TraceError> {
    if scaling.utilization < 0.0 || !scaling.utilization.is_finite() {
        return Err(TraceError::Scaling(format!(
            "utilization {} is invalid",
            scaling.utilization
        )));
    }
    if scaling.window_slots == 0 || scaling.machines == 0 || scaling.slot_minutes == 0 {
        return Err(TraceError::Scaling(
            "window, machines and slot length must be positive".into(),
        ));
    }
    let target = scaling.utilization * scaling.machines as f64 * scaling.window_slots as f64;
    if target == 0.0 {
        return Ok(Vec::new());
    }
    let (low, high) = (
        target * (1.0 - UTILIZATION_TOLERANCE),
        target * (1.0 + UTILIZATION_TOLERANCE),
    );
    let slot_s = scaling.slot_minutes as f64 * 60.0;
    let window_s = slot_s * scaling.window_slots as f64;
    let origin = trace.records.first().map_or(0.0, |r| r.arrival_s);

    let mut order: Vec<usize> = (0..trace.records.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(scaling.seed));

    let mut picked = Vec::new();
    let mut demand = 0.0;
    for i in order {
        let rec = &trace.records[i];
        let length = (rec.runtime_s / slot_s).ceil().max(1.0) as usize;
        if length > scaling.window_slots {
            continue;
        }
        let nodes = rec.nodes.clamp(1, scaling.machines);
        let work = (length as u64 * nodes as u64) as f64;
        if demand + work > high {
            continue;
        }
        let release = (((rec.arrival_s - origin) % window_s) / slot_s).floor() as usize;
        picked.push((release.min(scaling.window_slots - 1), length, nodes));
        demand += work;
        if demand >= low {
            break;
        }
    }
    if demand < low {
        return Err(TraceError::Scaling(format!(
            "trace {} supplies {demand:.0} of the {target:.0} machine-slots needed (short by {:.0})",
            trace.source,
            low - demand
        )));
    }
    picked.sort();
    picked
        .into_iter()
        .enumerate()
        .map(|(i, (r, p, q))| {
            Job::new(JobId(i as u32), r, p, q, scaling.quality).map_err(Into::into)
        })
        .collect()
}

/// Uniform jobs (fixed length and node count) with uniformly random releases,
/// sized to `utilization * machines * window_slots` machine-slots.
pub fn uniform_workload(
    machines: u32,
    window_slots: usize,
    utilization: f64,
    length: usize,
    nodes: u32,
    quality: Quality,
    seed: u64,
) -> Result<Vec<Job>, TraceError> {
    if nodes == 0 || nodes > machines || length == 0 {
        return Err(TraceError::Scaling(format!(
            "uniform job {length}x{nodes} does not fit {machines} machines"
        )));
    }
    let target = utilization * machines as f64 * window_slots as f64;
    let count = (target / (length as f64 * nodes as f64)).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut releases: Vec<usize> = (0..count).map(|_| rng.gen_range(0..window_slots)).collect();
    releases.sort_unstable();
    releases
        .into_iter()
        .enumerate()
        .map(|(i, r)| Job::new(JobId(i as u32), r, length, nodes, quality).map_err(Into::into))
        .collect()
}

/// A synthetic batch trace: Poisson arrivals, log-uniform runtimes between
/// five minutes and twelve hours, log-uniform node counts up to 64.
pub fn synthetic_workload_trace(records: usize, span_s: f64, seed: u64) -> WorkloadTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rate = records as f64 / span_s;
    let mut t = 0.0;
    let records = (0..records)
        .map(|_| {
            let u: f64 = rng.gen_range(f64::EPSILON..1.0);
            t += -u.ln() / rate;
            let runtime_s = (300.0f64.ln() + rng.gen::<f64>() * (43_200.0f64 / 300.0).ln()).exp();
            let nodes = (rng.gen::<f64>() * 64.0f64.ln()).exp().floor() as u32;
            WorkloadRecord {
                arrival_s: t.round(),
                runtime_s: runtime_s.round().max(1.0),
                nodes: nodes.max(1),
            }
        })
        .collect();
    WorkloadTrace {
        records,
        source: format!("synthetic(seed={seed})"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolarTrace {
    pub interval_s: u32,
    /// `(unix seconds, watts)` at a fixed interval.
    pub samples: Vec<(i64, f64)>,
}

pub fn parse_solar(path: &Path) -> Result<SolarTrace, TraceError> {
    let text = read_file(path)?;
    parse_solar_str(&text, &path.display().to_string())
}

/// Parses `timestamp,watts` CSV sampled at a fixed interval.
pub fn parse_solar_str(text: &str, source_name: &str) -> Result<SolarTrace, TraceError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| parse_err(source_name, 1, e.to_string()))?
        .clone();
    if header.iter().collect::<Vec<_>>() != ["timestamp", "watts"] {
        return Err(parse_err(
            source_name,
            1,
            "expected header \"timestamp,watts\"",
        ));
    }
    let mut samples = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            parse_err(
                source_name,
                e.position().map_or(0, |p| p.line()),
                e.to_string(),
            )
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 2 {
            return Err(parse_err(
                source_name,
                line,
                format!("expected 2 fields, found {}", row.len()),
            ));
        }
        let ts: i64 = row[0].parse().map_err(|_| {
            parse_err(
                source_name,
                line,
                format!("timestamp {:?} is not an integer", &row[0]),
            )
        })?;
        let watts: f64 = row[1]
            .parse()
            .ok()
            .filter(|w: &f64| w.is_finite())
            .ok_or_else(|| {
                parse_err(
                    source_name,
                    line,
                    format!("watts {:?} is not a number", &row[1]),
                )
            })?;
        if watts < 0.0 {
            return Err(parse_err(source_name, line, "watts is negative"));
        }
        if let Some(&(prev, _)) = samples.last() {
            if ts <= prev {
                return Err(parse_err(source_name, line, "timestamps must increase"));
            }
        }
        samples.push((ts, watts));
    }
    let interval_s = match samples.as_slice() {
        [] | [_] => 300,
        [(a, _), (b, _), ..] => (b - a) as u32,
    };
    if samples
        .windows(2)
        .any(|w| (w[1].0 - w[0].0) as u32 != interval_s)
    {
        return Err(parse_err(
            source_name,
            0,
            "samples are not at a fixed interval",
        ));
    }
    Ok(SolarTrace {
        interval_s,
        samples,
    })
}

/// Clear-sky daylight curve (half sine between 06:00 and 18:00) with a fixed
/// per-day cloud attenuation cycle.
pub fn synthetic_solar(days: usize, interval_s: u32, peak_watts: f64) -> SolarTrace {
    const CLOUD: [f64; 5] = [1.0, 0.65, 0.85, 0.45, 0.75];
    let per_day = 86_400 / interval_s as usize;
    let samples = (0..days * per_day)
        .map(|i| {
            let ts = i as i64 * interval_s as i64;
            let hour = (ts % 86_400) as f64 / 3600.0;
            let sun = if (6.0..18.0).contains(&hour) {
                (std::f64::consts::PI * (hour - 6.0) / 12.0).sin()
            } else {
                0.0
            };
            (ts, peak_watts * sun * CLOUD[i / per_day % CLOUD.len()])
        })
        .collect();
    SolarTrace {
        interval_s,
        samples,
    }
}

/// Scales the trace so its peak equals the cluster's full power draw, then
/// sums energy per slot in units of one busy machine-slot (rounded down,
/// capped at `machines`).
pub fn scale_solar(
    trace: &SolarTrace,
    machines: u32,
    watts_per_machine: f64,
    slot_minutes: u32,
) -> Result<Vec<u32>, TraceError> {
    let peak = trace.samples.iter().map(|&(_, w)| w).fold(0.0, f64::max);
    if trace.samples.is_empty() || peak <= 0.0 {
        return Err(TraceError::Scaling(
            "solar trace has no positive samples".into(),
        ));
    }
    let slot_s = slot_minutes as i64 * 60;
    if slot_s % trace.interval_s as i64 != 0 {
        return Err(TraceError::Scaling(format!(
            "sampling interval {} s does not divide the {slot_s} s slot",
            trace.interval_s
        )));
    }
    let factor = machines as f64 * watts_per_machine / peak;
    let origin = trace.samples[0].0;
    let span = trace.samples.last().unwrap().0 - origin + trace.interval_s as i64;
    let slots = ((span + slot_s - 1) / slot_s) as usize;
    let mut joules = vec![0.0; slots];
    for &(ts, w) in &trace.samples {
        joules[((ts - origin) / slot_s) as usize] += w * factor * trace.interval_s as f64;
    }
    let machine_slot = watts_per_machine * slot_s as f64;
    Ok(joules
        .into_iter()
        .map(|j| ((j / machine_slot + 1e-9).floor() as u32).min(machines))
        .collect())
}

/// Builds an instance whose series cover every deadline: green repeats
/// cyclically past its end and prices follow the daily schedule.
pub fn assemble_instance(
    jobs: Vec<Job>,
    cluster: &ClusterConfig,
    pricing: &PricingSchedule,
    green: &[u32],
    min_horizon: usize,
) -> Result<Instance, TraceError> {
    pricing.validate()?;
    let horizon = jobs
        .iter()
        .map(Job::deadline)
        .max()
        .unwrap_or(0)
        .max(min_horizon);
    let green_series = if green.is_empty() {
        vec![0; horizon]
    } else {
        green.iter().copied().cycle().take(horizon).collect()
    };
    let energy = cluster.energy_per_machine_slot();
    let price = pricing_series(pricing, horizon, cluster.slot_minutes, energy);
    Ok(Instance::new(
        jobs,
        cluster.machines,
        green_series,
        price,
        cluster.charge_rate(),
    )?
    .with_tariff(pricing.tariff(energy)))
}

/// The two-slot constructions behind the deterministic lower bounds and the
/// randomized upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// On-peak then off-peak, no green, one job spanning both.
    OnOffSingle,
    /// On-peak then off-peak, no green, a second job pinned to the off-peak slot.
    OnOffPair,
    /// Off-peak then green on-peak, one job spanning both.
    OffGreenSingle,
    /// Off-peak then green on-peak, a second job pinned to the green slot.
    OffGreenPair,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::OnOffSingle,
        Scenario::OnOffPair,
        Scenario::OffGreenSingle,
        Scenario::OffGreenPair,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Scenario::OnOffSingle => "1.1",
            Scenario::OnOffPair => "1.2",
            Scenario::OffGreenSingle => "2.1",
            Scenario::OffGreenPair => "2.2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// Two on-peak slots with `0` and `M` green; one job spanning both.
    FirstFitOnGreen,
    /// On-peak then off-peak, no green; one job spanning both.
    FirstFitOnOff,
    /// On-peak then off-peak, no green; jobs `(t1, t2)` and `(t2, t2)`.
    BestFitOnOff,
    /// Off-peak then on-peak with `0` and `M` green; jobs `(t1, t2)` and `(t2, t2)`.
    BestFitOffGreen,
    RandomFit(Scenario),
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::FirstFitOnGreen,
        Family::FirstFitOnOff,
        Family::BestFitOnOff,
        Family::BestFitOffGreen,
        Family::RandomFit(Scenario::OnOffSingle),
        Family::RandomFit(Scenario::OnOffPair),
        Family::RandomFit(Scenario::OffGreenSingle),
        Family::RandomFit(Scenario::OffGreenPair),
    ];

    pub fn name(self) -> String {
        match self {
            Family::FirstFitOnGreen => "thm1-on-green".into(),
            Family::FirstFitOnOff => "thm1-on-off".into(),
            Family::BestFitOnOff => "thm2-on-off".into(),
            Family::BestFitOffGreen => "thm2-off-green".into(),
            Family::RandomFit(s) => format!("thm3-{}", s.label()),
        }
    }

    /// Whether the family's green series is identically zero.
    pub fn is_dark(self) -> bool {
        matches!(
            self,
            Family::FirstFitOnOff
                | Family::BestFitOnOff
                | Family::RandomFit(Scenario::OnOffSingle)
                | Family::RandomFit(Scenario::OnOffPair)
        )
    }
}

impl FromStr for Family {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                let names: Vec<_> = Family::ALL.iter().map(|f| f.name()).collect();
                ModelError::Configuration(format!(
                    "unknown family {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// Emits the proof instance for `family`: two slots, unit-length jobs that
/// each need all `machines` nodes.
pub fn adversarial_instance(
    family: Family,
    machines: u32,
    tariff: Tariff,
    charge_rate: Money,
) -> Result<Instance, ModelError> {
    use Scenario::*;
    let m = machines;
    let (on, off) = (tariff.on_peak, tariff.off_peak);
    let (price, green, pair) = match family {
        Family::FirstFitOnGreen => ([on, on], [0, m], false),
        Family::FirstFitOnOff | Family::RandomFit(OnOffSingle) => ([on, off], [0, 0], false),
        Family::BestFitOnOff | Family::RandomFit(OnOffPair) => ([on, off], [0, 0], true),
        Family::RandomFit(OffGreenSingle) => ([off, on], [0, m], false),
        Family::BestFitOffGreen | Family::RandomFit(OffGreenPair) => ([off, on], [0, m], true),
    };
    // (t1, t2) spans both slots; (t2, t2) must run in the second.
    let mut jobs = vec![Job::new(JobId(0), 0, 1, m, Quality::new(1, 2)?)?];
    if pair {
        jobs.push(Job::new(JobId(1), 1, 1, m, Quality::ONE)?);
    }
    Ok(Instance::new(jobs, m, green.to_vec(), price.to_vec(), charge_rate)?.with_tariff(tariff))
}

pub fn write_instance(instance: &Instance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# green data center instance");
    let _ = writeln!(out, "[cluster]");
    let _ = writeln!(out, "machines = {}", instance.machines());
    let _ = writeln!(out, "horizon_slots = {}", instance.horizon());
    let _ = writeln!(
        out,
        "charge_rate_usd_per_machine_slot = {}",
        instance.charge_rate()
    );
    if let Some(t) = instance.tariff() {
        let _ = writeln!(out, "[tariff]");
        let _ = writeln!(out, "on_peak_usd_per_machine_slot = {}", t.on_peak);
        let _ = writeln!(out, "off_peak_usd_per_machine_slot = {}", t.off_peak);
    }
    let _ = writeln!(out, "[pricing]");
    for b in instance.price() {
        let _ = writeln!(out, "{b}");
    }
    let _ = writeln!(out, "[green]");
    for g in instance.green() {
        let _ = writeln!(out, "{g}");
    }
    let _ = writeln!(out, "[jobs]");
    let _ = writeln!(out, "# id release_slot length_slots nodes least_quality");
    for j in instance.jobs() {
        let _ = writeln!(
            out,
            "{} {} {} {} {}",
            j.id(),
            j.release(),
            j.length(),
            j.nodes(),
            j.quality()
        );
    }
    out
}

pub fn read_instance(path: &Path) -> Result<Instance, TraceError> {
    let text = read_file(path)?;
    parse_instance(&text, &path.display().to_string())
}

pub fn parse_instance(text: &str, source_name: &str) -> Result<Instance, TraceError> {
    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        None,
        Cluster,
        Tariff,
        Pricing,
        Green,
        Jobs,
    }
    let mut section = Section::None;
    let mut machines = None;
    let mut horizon = None;
    let mut charge = None;
    let (mut on_peak, mut off_peak) = (None, None);
    let mut price = Vec::new();
    let mut green = Vec::new();
    let mut jobs = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i as u64 + 1;
        let err = |m: String| parse_err(source_name, line_no, m);
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = match name.trim() {
                "cluster" => Section::Cluster,
                "tariff" => Section::Tariff,
                "pricing" => Section::Pricing,
                "green" => Section::Green,
                "jobs" => Section::Jobs,
                other => return Err(err(format!("unknown section [{other}]"))),
            };
            continue;
        }
        let money = |v: &str| v.parse::<Money>().map_err(|e| err(e.to_string()));
        match section {
            Section::None => return Err(err("content before the first section".into())),
            Section::Cluster | Section::Tariff => {
                let (key, value) = line
                    .split_once('=')
                    .map(|(k, v)| (k.trim(), v.trim()))
                    .ok_or_else(|| err("expected key = value".into()))?;
                match (section, key) {
                    (Section::Cluster, "machines") => {
                        machines = Some(value.parse::<u32>().map_err(|e| err(e.to_string()))?)
                    }
                    (Section::Cluster, "horizon_slots") => {
                        horizon = Some(value.parse::<usize>().map_err(|e| err(e.to_string()))?)
                    }
                    (Section::Cluster, "charge_rate_usd_per_machine_slot") => {
                        charge = Some(money(value)?)
                    }
                    (Section::Tariff, "on_peak_usd_per_machine_slot") => {
                        on_peak = Some(money(value)?)
                    }
                    (Section::Tariff, "off_peak_usd_per_machine_slot") => {
                        off_peak = Some(money(value)?)
                    }
                    _ => return Err(err(format!("unknown key {key:?}"))),
                }
            }
            Section::Pricing => price.push(money(line)?),
            Section::Green => green.push(line.parse::<u32>().map_err(|e| err(e.to_string()))?),
            Section::Jobs => {
                let f: Vec<&str> = line.split_whitespace().collect();
                if f.len() != 5 {
                    return Err(err(format!("expected 5 job fields, found {}", f.len())));
                }
                let int = |s: &str| s.parse::<usize>().map_err(|e| err(format!("{s:?}: {e}")));
                let quality: Quality = f[4].parse().map_err(|e: ModelError| err(e.to_string()))?;
                let job = Job::new(
                    JobId(int(f[0])? as u32),
                    int(f[1])?,
                    int(f[2])?,
                    int(f[3])? as u32,
                    quality,
                )
                .map_err(|e| err(e.to_string()))?;
                jobs.push(job);
            }
        }
    }
    let missing = |what: &str| parse_err(source_name, 0, format!("missing {what}"));
    let machines = machines.ok_or_else(|| missing("machines"))?;
    let horizon = horizon.ok_or_else(|| missing("horizon_slots"))?;
    let charge = charge.ok_or_else(|| missing("charge_rate_usd_per_machine_slot"))?;
    if price.len() != horizon || green.len() != horizon {
        return Err(parse_err(
            source_name,
            0,
            format!(
                "horizon is {horizon} slots but [pricing] has {} and [green] has {}",
                price.len(),
                green.len()
            ),
        ));
    }
    let mut instance = Instance::new(jobs, machines, green, price, charge)?;
    match (on_peak, off_peak) {
        (Some(on_peak), Some(off_peak)) => {
            instance = instance.with_tariff(Tariff { on_peak, off_peak })
        }
        (None, None) => {}
        _ => return Err(missing("tariff entry")),
    }
    Ok(instance)
}
