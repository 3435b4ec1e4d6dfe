//! Domain types and the profit/feasibility arithmetic shared by every scheduler.
//!
//! Time is discrete. A slot index `t` covers `[t, t + 1)`; a job started at `s`
//! occupies slots `s..s + length` and completes at `s + length`. Energy is
//! counted in machine-slots (one busy machine for one slot) and money in
//! integer nano-dollars, so every profit identity is exact.

use std::collections::BTreeMap;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

const NANOS_PER_DOLLAR: i64 = 1_000_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid job {id}: {reason}")]
    InvalidJob { id: JobId, reason: String },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("job {id} cannot start at slot {start}: {reason}")]
    Infeasible {
        id: JobId,
        start: usize,
        reason: &'static str,
    },
    #[error("unknown job {0}")]
    UnknownJob(JobId),
    #[error("job {0} is already assigned")]
    AlreadyAssigned(JobId),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("schedule state is inconsistent: {0}")]
    Inconsistent(String),
    #[error("cannot parse amount {0:?}")]
    BadAmount(String),
}

/// An amount of money in nano-dollars.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Money(i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn from_nanos(nanos: i64) -> Self {
        Money(nanos)
    }

    pub const fn nanos(self) -> i64 {
        self.0
    }

    /// Rounds to the nearest nano-dollar.
    pub fn from_dollars(dollars: f64) -> Self {
        Money((dollars * NANOS_PER_DOLLAR as f64).round() as i64)
    }

    pub fn dollars(self) -> f64 {
        self.0 as f64 / NANOS_PER_DOLLAR as f64
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    /// Exact quotient `self / other`, `None` when `other` is zero.
    pub fn ratio(self, other: Money) -> Option<Ratio<i128>> {
        (other.0 != 0).then(|| Ratio::new(self.0 as i128, other.0 as i128))
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl Neg for Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(-self.0)
    }
}

impl Mul<i64> for Money {
    type Output = Money;
    fn mul(self, rhs: i64) -> Money {
        Money(self.0 * rhs)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Money {
    fn sub_assign(&mut self, rhs: Money) {
        self.0 -= rhs.0;
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        Money(iter.map(|m| m.0).sum())
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let whole = abs / NANOS_PER_DOLLAR as u64;
        let frac = abs % NANOS_PER_DOLLAR as u64;
        if frac == 0 {
            return write!(f, "{sign}{whole}");
        }
        let digits = format!("{frac:09}");
        write!(f, "{sign}{whole}.{}", digits.trim_end_matches('0'))
    }
}

/// Parses a plain decimal dollar amount exactly (at most nine fractional digits).
impl FromStr for Money {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::BadAmount(s.to_string());
        let t = s.trim();
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
        if whole.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if frac.len() > 9
            || !whole
                .chars()
                .chain(frac.chars())
                .all(|c| c.is_ascii_digit())
        {
            return Err(bad());
        }
        let whole: i64 = if whole.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| bad())?
        };
        let frac_nanos: i64 = if frac.is_empty() {
            0
        } else {
            format!("{frac:0<9}").parse().map_err(|_| bad())?
        };
        let nanos = whole
            .checked_mul(NANOS_PER_DOLLAR)
            .and_then(|w| w.checked_add(frac_nanos))
            .ok_or_else(bad)?;
        Ok(Money(if neg { -nanos } else { nanos }))
    }
}

impl Serialize for Money {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Least acceptable service quality `L`, an exact fraction in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Quality {
    num: u32,
    den: u32,
}

impl Quality {
    pub const ONE: Quality = Quality { num: 1, den: 1 };

    pub fn new(num: u32, den: u32) -> Result<Self, ModelError> {
        if num == 0 || den == 0 || num > den {
            return Err(ModelError::Configuration(format!(
                "least quality {num}/{den} is not in (0, 1]"
            )));
        }
        let g = gcd(num, den);
        Ok(Quality {
            num: num / g,
            den: den / g,
        })
    }

    /// Approximates a decimal quality to a denominator of at most 10^6.
    pub fn from_f64(value: f64) -> Result<Self, ModelError> {
        if !(value > 0.0 && value <= 1.0) {
            return Err(ModelError::Configuration(format!(
                "least quality {value} is not in (0, 1]"
            )));
        }
        let den = 1_000_000u32;
        let num = ((value * den as f64).round() as u32).max(1);
        Quality::new(num, den)
    }

    pub fn numerator(self) -> u32 {
        self.num
    }

    pub fn denominator(self) -> u32 {
        self.den
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `length / elapsed >= self`, evaluated exactly.
    pub fn is_met(self, length: usize, elapsed: usize) -> bool {
        length as u128 * self.den as u128 >= self.num as u128 * elapsed as u128
    }
}

impl fmt::Display for Quality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Quality {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => {
                let n = n
                    .trim()
                    .parse()
                    .map_err(|_| ModelError::BadAmount(s.to_string()))?;
                let d = d
                    .trim()
                    .parse()
                    .map_err(|_| ModelError::BadAmount(s.to_string()))?;
                Quality::new(n, d)
            }
            None => Quality::from_f64(
                s.parse()
                    .map_err(|_| ModelError::BadAmount(s.to_string()))?,
            ),
        }
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct JobId(pub u32);

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Last slot boundary by which a job must complete to keep its quality bound.
///
/// `floor(release + length / quality)`; rounding down guarantees
/// `length / (completion - release) >= quality` for every completion up to it.
pub fn deadline(release: usize, length: usize, quality: Quality) -> usize {
    let span = (length as u128 * quality.den as u128) / quality.num as u128;
    release + span as usize
}

/// A batch request: released at `release`, runs `length` consecutive slots on
/// `nodes` machines, and pays only if it meets its least quality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Job {
    id: JobId,
    release: usize,
    length: usize,
    nodes: u32,
    quality: Quality,
    deadline: usize,
}

impl Job {
    pub fn new(
        id: JobId,
        release: usize,
        length: usize,
        nodes: u32,
        quality: Quality,
    ) -> Result<Self, ModelError> {
        if length == 0 {
            return Err(ModelError::InvalidJob {
                id,
                reason: "length must be at least one slot".into(),
            });
        }
        if nodes == 0 {
            return Err(ModelError::InvalidJob {
                id,
                reason: "node count must be at least one".into(),
            });
        }
        Ok(Job {
            id,
            release,
            length,
            nodes,
            quality,
            deadline: deadline(release, length, quality),
        })
    }

    pub fn id(&self) -> JobId {
        self.id
    }

    pub fn release(&self) -> usize {
        self.release
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn nodes(&self) -> u32 {
        self.nodes
    }

    pub fn quality(&self) -> Quality {
        self.quality
    }

    pub fn deadline(&self) -> usize {
        self.deadline
    }

    /// Latest start slot that still completes by the deadline.
    pub fn latest_start(&self) -> usize {
        self.deadline - self.length
    }

    /// Machine-slots consumed: `length * nodes`.
    pub fn work(&self) -> u64 {
        self.length as u64 * self.nodes as u64
    }

    /// Revenue if paid: `charge_rate * length * nodes`.
    pub fn full_revenue(&self, charge_rate: Money) -> Money {
        charge_rate * self.work() as i64
    }
}

/// Revenue earned by completing `job` at slot boundary `completion`.
pub fn revenue_of(job: &Job, completion: usize, charge_rate: Money) -> Money {
    let elapsed = completion.saturating_sub(job.release);
    if job.quality.is_met(job.length, elapsed) {
        job.full_revenue(charge_rate)
    } else {
        Money::ZERO
    }
}

/// Per-machine-slot brown energy cost in the two time-of-use tiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tariff {
    pub on_peak: Money,
    pub off_peak: Money,
}

impl Tariff {
    pub fn is_on_peak(&self, price: Money) -> bool {
        price > self.off_peak
    }
}

/// Immutable problem input.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    jobs: Vec<Job>,
    index: BTreeMap<JobId, usize>,
    machines: u32,
    green: Vec<u32>,
    price: Vec<Money>,
    charge_rate: Money,
    tariff: Option<Tariff>,
}

impl Instance {
    /// Validates and builds an instance. Jobs are stored in release order,
    /// ties broken by id.
    pub fn new(
        mut jobs: Vec<Job>,
        machines: u32,
        green: Vec<u32>,
        price: Vec<Money>,
        charge_rate: Money,
    ) -> Result<Self, ModelError> {
        if machines == 0 {
            return Err(ModelError::InvalidInstance(
                "cluster has no machines".into(),
            ));
        }
        if green.len() != price.len() {
            return Err(ModelError::InvalidInstance(format!(
                "green series has {} slots but price series has {}",
                green.len(),
                price.len()
            )));
        }
        if let Some(t) = price.iter().position(|b| !b.is_positive()) {
            return Err(ModelError::InvalidInstance(format!(
                "brown price at slot {t} is not positive"
            )));
        }
        if charge_rate < Money::ZERO {
            return Err(ModelError::InvalidInstance(
                "charge rate is negative".into(),
            ));
        }
        let horizon = green.len();
        jobs.sort_by_key(|j| (j.release, j.id));
        let mut index = BTreeMap::new();
        for (i, job) in jobs.iter().enumerate() {
            if index.insert(job.id, i).is_some() {
                return Err(ModelError::InvalidInstance(format!(
                    "duplicate job id {}",
                    job.id
                )));
            }
            if job.nodes > machines {
                return Err(ModelError::InvalidJob {
                    id: job.id,
                    reason: format!("needs {} nodes but the cluster has {machines}", job.nodes),
                });
            }
            if job.deadline > horizon {
                return Err(ModelError::InvalidJob {
                    id: job.id,
                    reason: format!("deadline {} exceeds horizon {horizon}", job.deadline),
                });
            }
        }
        Ok(Instance {
            jobs,
            index,
            machines,
            green,
            price,
            charge_rate,
            tariff: None,
        })
    }

    pub fn with_tariff(mut self, tariff: Tariff) -> Self {
        self.tariff = Some(tariff);
        self
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn job(&self, id: JobId) -> Option<&Job> {
        self.index.get(&id).map(|&i| &self.jobs[i])
    }

    pub fn machines(&self) -> u32 {
        self.machines
    }

    pub fn horizon(&self) -> usize {
        self.green.len()
    }

    pub fn green(&self) -> &[u32] {
        &self.green
    }

    pub fn price(&self) -> &[Money] {
        &self.price
    }

    pub fn charge_rate(&self) -> Money {
        self.charge_rate
    }

    pub fn tariff(&self) -> Option<Tariff> {
        self.tariff
    }

    /// The declared tariff, or the extreme prices of the series when none was
    /// declared.
    pub fn effective_tariff(&self) -> Tariff {
        self.tariff.unwrap_or_else(|| Tariff {
            on_peak: self.price.iter().copied().max().unwrap_or(Money::ZERO),
            off_peak: self.price.iter().copied().min().unwrap_or(Money::ZERO),
        })
    }

    /// Same instance with the green series replaced.
    pub fn with_green(&self, green: Vec<u32>) -> Result<Self, ModelError> {
        let mut out = Instance::new(
            self.jobs.clone(),
            self.machines,
            green,
            self.price.clone(),
            self.charge_rate,
        )?;
        out.tariff = self.tariff;
        Ok(out)
    }
}

/// Mutable occupancy and assignment record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleState {
    assignments: BTreeMap<JobId, usize>,
    occupancy: Vec<u32>,
    starts: Vec<u32>,
}

impl ScheduleState {
    pub fn new(horizon: usize) -> Self {
        ScheduleState {
            assignments: BTreeMap::new(),
            occupancy: vec![0; horizon],
            starts: vec![0; horizon],
        }
    }

    pub fn for_instance(instance: &Instance) -> Self {
        Self::new(instance.horizon())
    }

    pub fn assignments(&self) -> &BTreeMap<JobId, usize> {
        &self.assignments
    }

    pub fn start_of(&self, id: JobId) -> Option<usize> {
        self.assignments.get(&id).copied()
    }

    /// Busy machines per slot, `e(t)`.
    pub fn occupancy(&self) -> &[u32] {
        &self.occupancy
    }

    /// Jobs started per slot, `n(t)`.
    pub fn starts(&self) -> &[u32] {
        &self.starts
    }

    /// Whether `job` fits the window and the free capacity at `start`.
    pub fn fits(&self, instance: &Instance, job: &Job, start: usize) -> bool {
        self.check_fit(instance, job, start).is_ok()
    }

    fn check_fit(&self, instance: &Instance, job: &Job, start: usize) -> Result<(), ModelError> {
        let infeasible = |reason| ModelError::Infeasible {
            id: job.id,
            start,
            reason,
        };
        if start < job.release {
            return Err(infeasible("starts before release"));
        }
        if start + job.length > job.deadline {
            return Err(infeasible("completes after deadline"));
        }
        if start + job.length > self.occupancy.len() {
            return Err(infeasible("runs past the horizon"));
        }
        let cap = instance.machines - job.nodes;
        if self.occupancy[start..start + job.length]
            .iter()
            .any(|&e| e > cap)
        {
            return Err(infeasible("exceeds cluster capacity"));
        }
        Ok(())
    }

    /// Commits `job` at `start`.
    pub fn assign(
        &mut self,
        instance: &Instance,
        job: &Job,
        start: usize,
    ) -> Result<(), ModelError> {
        if self.assignments.contains_key(&job.id) {
            return Err(ModelError::AlreadyAssigned(job.id));
        }
        self.check_fit(instance, job, start)?;
        self.assign_unchecked(job, start);
        Ok(())
    }

    pub(crate) fn assign_unchecked(&mut self, job: &Job, start: usize) {
        self.assignments.insert(job.id, start);
        self.starts[start] += 1;
        for e in &mut self.occupancy[start..start + job.length] {
            *e += job.nodes;
        }
    }

    /// Removes an assignment, returning its start slot.
    pub fn unassign(&mut self, job: &Job) -> Option<usize> {
        let start = self.assignments.remove(&job.id)?;
        self.starts[start] -= 1;
        for e in &mut self.occupancy[start..start + job.length] {
            *e -= job.nodes;
        }
        Some(start)
    }

    /// Recomputes occupancy and start counts from the assignments and checks
    /// every capacity and window constraint.
    pub fn verify(&self, instance: &Instance) -> Result<(), ModelError> {
        let horizon = instance.horizon();
        if self.occupancy.len() != horizon || self.starts.len() != horizon {
            return Err(ModelError::Inconsistent(format!(
                "state covers {} slots, instance has {horizon}",
                self.occupancy.len()
            )));
        }
        let mut occupancy = vec![0u32; horizon];
        let mut starts = vec![0u32; horizon];
        for (&id, &start) in &self.assignments {
            let job = instance.job(id).ok_or(ModelError::UnknownJob(id))?;
            if start < job.release || start + job.length > job.deadline {
                return Err(ModelError::Inconsistent(format!(
                    "job {id} at {start} violates its window [{}, {})",
                    job.release, job.deadline
                )));
            }
            starts[start] += 1;
            for e in &mut occupancy[start..start + job.length] {
                *e += job.nodes;
            }
        }
        if let Some(t) = occupancy.iter().position(|&e| e > instance.machines) {
            return Err(ModelError::Inconsistent(format!(
                "slot {t} uses {} machines of {}",
                occupancy[t], instance.machines
            )));
        }
        if occupancy != self.occupancy || starts != self.starts {
            return Err(ModelError::Inconsistent(
                "stored occupancy disagrees with assignments".into(),
            ));
        }
        Ok(())
    }
}

/// Brown cost of one slot carrying `busy` machines; green is consumed first.
#[inline]
pub(crate) fn slot_cost(busy: u32, green: u32, price: Money) -> Money {
    price * busy.saturating_sub(green) as i64
}

/// Incremental brown cost of placing `job` at `start`, without feasibility checks.
#[inline]
pub(crate) fn marginal_cost(
    instance: &Instance,
    occupancy: &[u32],
    job: &Job,
    start: usize,
) -> Money {
    let mut cost = Money::ZERO;
    let window = start..start + job.length;
    for ((&e, &g), &b) in occupancy[window.clone()]
        .iter()
        .zip(&instance.green[window.clone()])
        .zip(&instance.price[window])
    {
        let extra = (e + job.nodes).saturating_sub(g) - e.saturating_sub(g);
        cost += b * extra as i64;
    }
    cost
}

/// Incremental brown cost of adding `job` at `start` to `state`.
pub fn placement_cost(
    instance: &Instance,
    state: &ScheduleState,
    job: &Job,
    start: usize,
) -> Result<Money, ModelError> {
    state.check_fit(instance, job, start)?;
    Ok(marginal_cost(instance, &state.occupancy, job, start))
}

/// Every feasible start for `job` at time `now`, ascending.
pub fn feasible_starts(
    instance: &Instance,
    state: &ScheduleState,
    job: &Job,
    now: usize,
) -> Vec<usize> {
    feasible_iter(instance, &state.occupancy, job, now).collect()
}

pub(crate) fn feasible_iter<'a>(
    instance: &'a Instance,
    occupancy: &'a [u32],
    job: &'a Job,
    now: usize,
) -> impl Iterator<Item = usize> + 'a {
    let first = now.max(job.release);
    let last = job.deadline.min(occupancy.len()).checked_sub(job.length);
    let cap = instance.machines - job.nodes;
    let range = match last {
        Some(last) if first <= last => first..last + 1,
        _ => 0..0,
    };
    range.filter(move |&s| occupancy[s..s + job.length].iter().all(|&e| e <= cap))
}

/// Energy-normalized profit per unit of revenue for a uniform job class.
///
/// For a job run entirely on one energy type, profit divided by revenue is
/// `1 - cost / charge_rate`, independent of the job's length and node count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormalizedValues {
    on: Ratio<i64>,
    off: Ratio<i64>,
    green: Ratio<i64>,
}

impl NormalizedValues {
    pub fn on(&self) -> f64 {
        ratio_f64(self.on)
    }

    pub fn off(&self) -> f64 {
        ratio_f64(self.off)
    }

    pub fn green(&self) -> f64 {
        ratio_f64(self.green)
    }

    pub fn on_exact(&self) -> Ratio<i64> {
        self.on
    }

    pub fn off_exact(&self) -> Ratio<i64> {
        self.off
    }

    pub fn green_exact(&self) -> Ratio<i64> {
        self.green
    }
}

pub(crate) fn ratio_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Computes `(v_on, v_off, v_g)` from per-machine-slot costs.
///
/// Fails unless `0 < v_on < v_off < v_g = 1`.
pub fn normalized_values(
    charge_rate: Money,
    tariff: Tariff,
) -> Result<NormalizedValues, ModelError> {
    if !charge_rate.is_positive() {
        return Err(ModelError::Configuration(
            "charge rate must be positive".into(),
        ));
    }
    let beta = charge_rate.nanos();
    let value = |cost: Money| Ratio::new(beta - cost.nanos(), beta);
    let values = NormalizedValues {
        on: value(tariff.on_peak),
        off: value(tariff.off_peak),
        green: Ratio::from_integer(1),
    };
    let zero = Ratio::from_integer(0);
    if values.on <= zero {
        return Err(ModelError::Configuration(format!(
            "on-peak cost {} per machine-slot is not below the charge rate {charge_rate}",
            tariff.on_peak
        )));
    }
    if !(values.on < values.off && values.off < values.green) {
        return Err(ModelError::Configuration(format!(
            "normalized values must satisfy 0 < v_on < v_off < v_g (got {}, {}, 1)",
            values.on(),
            values.off()
        )));
    }
    Ok(values)
}

/// Totals for a finished schedule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfitReport {
    pub revenue: Money,
    pub brown_cost: Money,
    pub net_profit: Money,
    pub green_used: u64,
    pub green_available: u64,
    pub jobs_completed: usize,
    pub workload_completed: u64,
}

/// Accounts revenue and brown cost for `state`. Fails if the state does not
/// match its own assignments.
pub fn profit_report(
    instance: &Instance,
    state: &ScheduleState,
) -> Result<ProfitReport, ModelError> {
    state.verify(instance)?;
    let mut revenue = Money::ZERO;
    let mut workload = 0;
    for (&id, &start) in &state.assignments {
        let job = instance.job(id).ok_or(ModelError::UnknownJob(id))?;
        revenue += revenue_of(job, start + job.length, instance.charge_rate);
        workload += job.work();
    }
    let brown_cost = state
        .occupancy
        .iter()
        .zip(&instance.green)
        .zip(&instance.price)
        .map(|((&e, &g), &b)| slot_cost(e, g, b))
        .sum();
    let green_used = state
        .occupancy
        .iter()
        .zip(&instance.green)
        .map(|(&e, &g)| e.min(g) as u64)
        .sum();
    Ok(ProfitReport {
        revenue,
        brown_cost,
        net_profit: revenue - brown_cost,
        green_used,
        green_available: instance.green.iter().map(|&g| g as u64).sum(),
        jobs_completed: state.assignments.len(),
        workload_completed: workload,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(x: f64) -> Quality {
        Quality::from_f64(x).unwrap()
    }

    fn job(id: u32, r: usize, p: usize, nodes: u32, l: f64) -> Job {
        Job::new(JobId(id), r, p, nodes, q(l)).unwrap()
    }

    fn flat(machines: u32, green: Vec<u32>, price: &str, jobs: Vec<Job>) -> Instance {
        let n = green.len();
        Instance::new(
            jobs,
            machines,
            green,
            vec![price.parse().unwrap(); n],
            "0.022".parse().unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn deadline_examples() {
        assert_eq!(job(0, 0, 2, 1, 0.2).deadline(), 10);
        assert_eq!(job(0, 5, 3, 1, 1.0).deadline(), 8);
        let j = job(0, 0, 3, 1, 0.4);
        assert_eq!(j.deadline(), 7);
        assert!(j.quality().is_met(3, 7));
        assert!(!j.quality().is_met(3, 8));
    }

    #[test]
    fn money_parsing_is_exact() {
        assert_eq!("0.022".parse::<Money>().unwrap().nanos(), 22_000_000);
        assert_eq!("0.0182".parse::<Money>().unwrap().nanos(), 18_200_000);
        assert_eq!("-1.5".parse::<Money>().unwrap().nanos(), -1_500_000_000);
        assert_eq!(Money::from_nanos(18_200_000).to_string(), "0.0182");
        assert_eq!(Money::from_nanos(-3_000_000_000).to_string(), "-3");
        assert!("0.0000000001".parse::<Money>().is_err());
        assert!("abc".parse::<Money>().is_err());
        assert!(".".parse::<Money>().is_err());
        assert_eq!(Money::from_dollars(0.13 * 0.14).nanos(), 18_200_000);
    }

    #[test]
    fn revenue_examples() {
        let beta: Money = "0.022".parse().unwrap();
        let j = job(0, 0, 2, 4, 0.2);
        assert_eq!(revenue_of(&j, 5, beta), "0.176".parse().unwrap());
        assert_eq!(revenue_of(&j, j.deadline(), beta), beta * 8);
        assert_eq!(revenue_of(&j, j.deadline() + 1, beta), Money::ZERO);
    }

    #[test]
    fn placement_cost_examples() {
        let on: &str = "0.0182";
        let j = job(0, 0, 1, 1, 1.0);
        let inst = flat(5, vec![5], on, vec![j.clone()]);
        let st = ScheduleState::for_instance(&inst);
        assert_eq!(placement_cost(&inst, &st, &j, 0).unwrap(), Money::ZERO);

        let inst = flat(5, vec![0], on, vec![j.clone()]);
        assert_eq!(
            placement_cost(&inst, &st, &j, 0).unwrap(),
            on.parse().unwrap()
        );

        let j2 = job(0, 0, 1, 2, 1.0);
        let inst = flat(5, vec![1], "0.0112", vec![j2.clone()]);
        assert_eq!(
            placement_cost(&inst, &st, &j2, 0).unwrap(),
            "0.0112".parse().unwrap()
        );
    }

    #[test]
    fn placement_cost_rejects_infeasible() {
        let j = job(0, 1, 1, 1, 1.0);
        let inst = flat(1, vec![0; 3], "0.01", vec![j.clone()]);
        let st = ScheduleState::for_instance(&inst);
        assert!(matches!(
            placement_cost(&inst, &st, &j, 0),
            Err(ModelError::Infeasible { .. })
        ));
        assert!(placement_cost(&inst, &st, &j, 2).is_err());
    }

    #[test]
    fn feasible_starts_examples() {
        let j = Job::new(JobId(0), 0, 1, 1, Quality::new(1, 3).unwrap()).unwrap();
        assert_eq!(j.deadline(), 3);
        let other = job(1, 0, 1, 1, 1.0);
        let inst = flat(1, vec![0; 3], "0.01", vec![j.clone(), other.clone()]);
        let mut st = ScheduleState::for_instance(&inst);
        assert_eq!(feasible_starts(&inst, &st, &j, 0), vec![0, 1, 2]);
        st.assign(&inst, &other, 0).unwrap();
        assert_eq!(feasible_starts(&inst, &st, &j, 0), vec![1, 2]);
        assert!(feasible_starts(&inst, &st, &j, 3).is_empty());
    }

    #[test]
    fn normalized_values_examples() {
        let beta: Money = "0.022".parse().unwrap();
        let tariff = Tariff {
            on_peak: "0.0182".parse().unwrap(),
            off_peak: "0.0112".parse().unwrap(),
        };
        let v = normalized_values(beta, tariff).unwrap();
        assert!((v.on() - 0.172_727).abs() < 1e-5);
        assert!((v.off() - 0.490_909).abs() < 1e-5);
        assert_eq!(v.green(), 1.0);
        assert_eq!(v.on_exact(), Ratio::new(38, 220));

        let free = Tariff {
            on_peak: Money::ZERO,
            off_peak: Money::ZERO,
        };
        assert!(matches!(
            normalized_values(beta, free),
            Err(ModelError::Configuration(_))
        ));

        let pricey = Tariff {
            on_peak: "0.03".parse().unwrap(),
            off_peak: "0.01".parse().unwrap(),
        };
        assert!(normalized_values(beta, pricey).is_err());

        let rich = normalized_values(Money::from_nanos(i64::MAX / 4), tariff).unwrap();
        assert!(rich.on() > 0.999_999 && rich.off() > 0.999_999);
    }

    #[test]
    fn profit_report_examples() {
        let j = job(0, 0, 1, 4, 1.0);
        let inst = flat(4, vec![4], "0.0182", vec![j.clone()]);
        let mut st = ScheduleState::for_instance(&inst);
        let empty = profit_report(&inst, &st).unwrap();
        assert_eq!(empty.net_profit, Money::ZERO);
        assert_eq!(empty.brown_cost, Money::ZERO);
        st.assign(&inst, &j, 0).unwrap();
        let r = profit_report(&inst, &st).unwrap();
        assert_eq!(r.revenue, inst.charge_rate() * 4);
        assert_eq!(r.brown_cost, Money::ZERO);
        assert_eq!(r.green_used, 4);
        assert_eq!(r.jobs_completed, 1);
    }

    #[test]
    fn verify_catches_tampering() {
        let j = job(0, 0, 1, 2, 1.0);
        let inst = flat(4, vec![0; 2], "0.01", vec![j.clone()]);
        let mut st = ScheduleState::for_instance(&inst);
        st.assign(&inst, &j, 0).unwrap();
        st.occupancy[1] = 1;
        assert!(matches!(
            profit_report(&inst, &st),
            Err(ModelError::Inconsistent(_))
        ));
    }

    #[test]
    fn instance_validation() {
        let j = job(0, 0, 2, 1, 0.5);
        assert!(Instance::new(
            vec![j.clone()],
            1,
            vec![0; 3],
            vec![Money::from_nanos(1); 3],
            Money::ZERO
        )
        .is_err());
        assert!(Instance::new(
            vec![j.clone()],
            1,
            vec![0; 4],
            vec![Money::ZERO; 4],
            Money::ZERO
        )
        .is_err());
        assert!(Instance::new(
            vec![j.clone(), j.clone()],
            1,
            vec![0; 4],
            vec![Money::from_nanos(1); 4],
            Money::ZERO
        )
        .is_err());
        let big = job(1, 0, 1, 3, 1.0);
        assert!(Instance::new(
            vec![big],
            2,
            vec![0; 4],
            vec![Money::from_nanos(1); 4],
            Money::ZERO
        )
        .is_err());
        assert!(Job::new(JobId(0), 0, 0, 1, Quality::ONE).is_err());
        assert!(Job::new(JobId(0), 0, 1, 0, Quality::ONE).is_err());
        assert!(Quality::from_f64(0.0).is_err());
        assert!(Quality::from_f64(1.5).is_err());
    }

    #[test]
    fn quality_parses_fraction_and_decimal() {
        assert_eq!(
            "2/10".parse::<Quality>().unwrap(),
            Quality::new(1, 5).unwrap()
        );
        assert_eq!(
            "0.2".parse::<Quality>().unwrap(),
            Quality::new(1, 5).unwrap()
        );
        assert_eq!(Quality::new(1, 5).unwrap().to_string(), "1/5");
    }
}
