//! Online scheduling policies.
//!
//! Every policy sees jobs one at a time in release order and returns an
//! irrevocable [`Decision`]: a committed start slot or a rejection. Policies
//! are pure choosers; [`run_online`] applies their decisions to the shared
//! [`ScheduleState`].

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{
    feasible_iter, marginal_cost, normalized_values, profit_report, Instance, Job, JobId,
    ModelError, Money, NormalizedValues, ProfitReport, ScheduleState, Tariff,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    FirstFit,
    BestFit,
    GreenSlot,
    RandomFit,
}

impl Policy {
    pub const ALL: [Policy; 4] = [
        Policy::FirstFit,
        Policy::BestFit,
        Policy::GreenSlot,
        Policy::RandomFit,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            Policy::FirstFit => "ff",
            Policy::BestFit => "bf",
            Policy::GreenSlot => "gs",
            Policy::RandomFit => "rf",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Policy::FirstFit => "first-fit",
            Policy::BestFit => "best-fit",
            Policy::GreenSlot => "green-slot",
            Policy::RandomFit => "random-fit",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ff" | "first-fit" | "firstfit" => Ok(Policy::FirstFit),
            "bf" | "best-fit" | "bestfit" => Ok(Policy::BestFit),
            "gs" | "green-slot" | "greenslot" => Ok(Policy::GreenSlot),
            "rf" | "random-fit" | "randomfit" => Ok(Policy::RandomFit),
            other => Err(ModelError::Configuration(format!(
                "unknown policy {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchedulerConfig {
    pub policy: Policy,
    /// Money per machine-slot charged for late starts. `None` means twice the
    /// on-peak cost per machine-slot.
    pub greenslot_penalty: Option<Money>,
    pub greenslot_slack_fraction: f64,
    /// Fixed probability of taking the earliest start. `None` derives the
    /// optimal probability from the instance's normalized values.
    pub randomfit_p_override: Option<f64>,
    pub rng_seed: u64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig::new(Policy::FirstFit)
    }
}

impl SchedulerConfig {
    pub fn new(policy: Policy) -> Self {
        SchedulerConfig {
            policy,
            greenslot_penalty: None,
            greenslot_slack_fraction: 0.2,
            randomfit_p_override: None,
            rng_seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_probability(mut self, p: f64) -> Self {
        self.randomfit_p_override = Some(p);
        self
    }

    pub fn with_penalty(mut self, penalty: Money) -> Self {
        self.greenslot_penalty = Some(penalty);
        self
    }

    /// Short row label: the policy's abbreviation plus any non-default parameter.
    pub fn label(&self) -> String {
        let mut label = self.policy.short_name().to_string();
        match self.policy {
            Policy::RandomFit => {
                if let Some(p) = self.randomfit_p_override {
                    label += &format!("(p={p})");
                }
            }
            Policy::GreenSlot => {
                if let Some(m) = self.greenslot_penalty {
                    label += &format!("(penalty={m})");
                }
                if self.greenslot_slack_fraction != 0.2 {
                    label += &format!("(slack={})", self.greenslot_slack_fraction);
                }
            }
            _ => {}
        }
        label
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if let Some(p) = self.randomfit_p_override {
            if !(0.0..=1.0).contains(&p) {
                return Err(ModelError::Configuration(format!(
                    "probability {p} is not in [0, 1]"
                )));
            }
        }
        if matches!(self.greenslot_penalty, Some(m) if m < Money::ZERO) {
            return Err(ModelError::Configuration(
                "green-slot penalty is negative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.greenslot_slack_fraction) {
            return Err(ModelError::Configuration(format!(
                "slack fraction {} is not in [0, 1]",
                self.greenslot_slack_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RejectReason {
    NoFeasibleStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Scheduled(usize),
    Rejected(RejectReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Decision {
    pub job: JobId,
    pub outcome: Outcome,
}

impl Decision {
    fn from_start(job: &Job, start: Option<usize>) -> Self {
        Decision {
            job: job.id(),
            outcome: match start {
                Some(s) => Outcome::Scheduled(s),
                None => Outcome::Rejected(RejectReason::NoFeasibleStart),
            },
        }
    }

    pub fn start(&self) -> Option<usize> {
        match self.outcome {
            Outcome::Scheduled(s) => Some(s),
            Outcome::Rejected(_) => None,
        }
    }
}

/// Feasible start minimizing `cost(start)`, earliest on ties.
fn cheapest_start(
    instance: &Instance,
    state: &ScheduleState,
    job: &Job,
    now: usize,
    mut extra: impl FnMut(usize) -> Money,
) -> Option<usize> {
    let mut best: Option<(Money, usize)> = None;
    for s in feasible_iter(instance, state.occupancy(), job, now) {
        let cost = marginal_cost(instance, state.occupancy(), job, s) + extra(s);
        if !matches!(best, Some((c, _)) if c <= cost) {
            best = Some((cost, s));
        }
    }
    best.map(|(_, s)| s)
}

/// Earliest feasible start, regardless of energy cost.
pub fn first_fit(instance: &Instance, state: &ScheduleState, job: &Job, now: usize) -> Decision {
    Decision::from_start(
        job,
        feasible_iter(instance, state.occupancy(), job, now).next(),
    )
}

/// Feasible start with the lowest brown energy cost.
pub fn best_fit(instance: &Instance, state: &ScheduleState, job: &Job, now: usize) -> Decision {
    Decision::from_start(
        job,
        cheapest_start(instance, state, job, now, |_| Money::ZERO),
    )
}

/// Best-fit with a surcharge on starts close to the latest feasible one.
///
/// A start `s` is charged `penalty * length * nodes` when
/// `s > deadline - length - ceil(slack_fraction * length)`.
pub fn green_slot(
    instance: &Instance,
    state: &ScheduleState,
    job: &Job,
    now: usize,
    penalty: Money,
    slack_fraction: f64,
) -> Decision {
    let margin = (slack_fraction * job.length() as f64).ceil() as usize;
    let threshold = job.latest_start().checked_sub(margin);
    let surcharge = penalty * job.work() as i64;
    let start = cheapest_start(instance, state, job, now, |s| match threshold {
        Some(th) if s <= th => Money::ZERO,
        _ => surcharge,
    });
    Decision::from_start(job, start)
}

/// Whether the job can start at its earliest feasible slot entirely on free
/// green energy. Returns that start when it can.
pub fn sufficient_green(
    instance: &Instance,
    state: &ScheduleState,
    job: &Job,
    now: usize,
) -> Option<usize> {
    let earliest = feasible_iter(instance, state.occupancy(), job, now).next()?;
    (marginal_cost(instance, state.occupancy(), job, earliest) == Money::ZERO).then_some(earliest)
}

/// Which way the randomized choice trades: an on-peak earliest start against
/// later off-peak slots, or an off-peak earliest start against later green.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Transition {
    OnToOff,
    OffToOn,
}

/// Probability of taking the earliest start that equalizes the two
/// adversarial outcomes: `k / (1 + k - k^2)` with `k = v_on / v_off` for
/// [`Transition::OnToOff`] and `k = v_off / v_g` for [`Transition::OffToOn`].
pub fn optimal_probability_exact(values: &NormalizedValues, class: Transition) -> Ratio<i128> {
    let widen = |r: Ratio<i64>| Ratio::new(*r.numer() as i128, *r.denom() as i128);
    let k = match class {
        Transition::OnToOff => widen(values.on_exact()) / widen(values.off_exact()),
        Transition::OffToOn => widen(values.off_exact()) / widen(values.green_exact()),
    };
    let one = Ratio::from_integer(1);
    k / (one + k - k * k)
}

pub fn optimal_probability(values: &NormalizedValues, class: Transition) -> f64 {
    let p = optimal_probability_exact(values, class);
    *p.numer() as f64 / *p.denom() as f64
}

/// Resolved parameters for the randomized policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomFitParams {
    pub tariff: Tariff,
    pub p_on_to_off: f64,
    pub p_off_to_on: f64,
}

impl RandomFitParams {
    /// Derives probabilities from the instance's charge rate and tariff unless
    /// `p_override` fixes both.
    pub fn resolve(instance: &Instance, p_override: Option<f64>) -> Result<Self, ModelError> {
        let tariff = instance.effective_tariff();
        if let Some(p) = p_override {
            return Ok(RandomFitParams {
                tariff,
                p_on_to_off: p,
                p_off_to_on: p,
            });
        }
        let values = normalized_values(instance.charge_rate(), tariff)?;
        Ok(RandomFitParams {
            tariff,
            p_on_to_off: optimal_probability(&values, Transition::OnToOff),
            p_off_to_on: optimal_probability(&values, Transition::OffToOn),
        })
    }

    fn probability_at(&self, price: Money) -> f64 {
        if self.tariff.is_on_peak(price) {
            self.p_on_to_off
        } else {
            self.p_off_to_on
        }
    }
}

/// Per-job random stream: ChaCha8 keyed by `seed` (expanded with
/// `seed_from_u64`), stream number = the job's position in release order.
pub fn job_rng(seed: u64, sequence: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sequence);
    rng
}

/// Randomized choice between the earliest and the cheapest start.
///
/// If the earliest feasible start is fully green the job goes there.
/// Otherwise it takes the earliest start with probability `p` (chosen by the
/// price tier of that start) and the cheapest start otherwise.
pub fn random_fit<R: Rng + ?Sized>(
    instance: &Instance,
    state: &ScheduleState,
    job: &Job,
    now: usize,
    params: &RandomFitParams,
    rng: &mut R,
) -> Decision {
    let Some(earliest) = feasible_iter(instance, state.occupancy(), job, now).next() else {
        return Decision::from_start(job, None);
    };
    if let Some(s) = sufficient_green(instance, state, job, now) {
        return Decision::from_start(job, Some(s));
    }
    let p = params.probability_at(instance.price()[earliest]);
    let u: f64 = rng.gen();
    if u < p {
        Decision::from_start(job, Some(earliest))
    } else {
        best_fit(instance, state, job, now)
    }
}

#[derive(Debug, Clone)]
pub struct OnlineRun {
    pub state: ScheduleState,
    pub report: ProfitReport,
    pub decisions: Vec<Decision>,
}

/// Feeds the jobs to the configured policy in release order (ties by id),
/// committing each decision at the job's release slot.
pub fn run_online(instance: &Instance, config: &SchedulerConfig) -> Result<OnlineRun, ModelError> {
    config.validate()?;
    let random = match config.policy {
        Policy::RandomFit => Some(RandomFitParams::resolve(
            instance,
            config.randomfit_p_override,
        )?),
        _ => None,
    };
    let penalty = config
        .greenslot_penalty
        .unwrap_or_else(|| instance.effective_tariff().on_peak * 2);

    let mut state = ScheduleState::for_instance(instance);
    let mut decisions = Vec::with_capacity(instance.jobs().len());
    for (seq, job) in instance.jobs().iter().enumerate() {
        let now = job.release();
        let decision = match config.policy {
            Policy::FirstFit => first_fit(instance, &state, job, now),
            Policy::BestFit => best_fit(instance, &state, job, now),
            Policy::GreenSlot => green_slot(
                instance,
                &state,
                job,
                now,
                penalty,
                config.greenslot_slack_fraction,
            ),
            Policy::RandomFit => {
                let params = random.as_ref().expect("resolved above");
                let mut rng = job_rng(config.rng_seed, seq as u64);
                random_fit(instance, &state, job, now, params, &mut rng)
            }
        };
        if let Some(start) = decision.start() {
            state.assign(instance, job, start)?;
        }
        decisions.push(decision);
    }
    let report = profit_report(instance, &state)?;
    Ok(OnlineRun {
        state,
        report,
        decisions,
    })
}

/// Rebuilds the schedule a decision log describes.
pub fn replay(instance: &Instance, decisions: &[Decision]) -> Result<ScheduleState, ModelError> {
    let mut state = ScheduleState::for_instance(instance);
    for d in decisions {
        if let Some(start) = d.start() {
            let job = instance.job(d.job).ok_or(ModelError::UnknownJob(d.job))?;
            state.assign(instance, job, start)?;
        }
    }
    Ok(state)
}
