//! Offline optimum: maximize revenue minus brown cost over every choice of
//! start slot (or rejection) per job, subject to windows and capacity.
//!
//! [`solve_exact`] is a depth-first branch-and-bound; [`brute_force`] is the
//! exhaustive oracle used to validate it on tiny instances.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::model::{
    marginal_cost, profit_report, slot_cost, Instance, Job, ModelError, Money, ProfitReport,
    ScheduleState,
};
use crate::schedulers::{run_online, Policy, SchedulerConfig};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverBudget {
    pub max_nodes: u64,
    pub time_limit: Duration,
}

impl Default for SolverBudget {
    fn default() -> Self {
        SolverBudget {
            max_nodes: 100_000_000,
            time_limit: Duration::from_secs(300),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub state: ScheduleState,
    pub report: ProfitReport,
    /// False when the budget ran out before the search finished.
    pub optimal: bool,
    pub nodes_explored: u64,
    pub wall_time: Duration,
}

impl ExactSolution {
    pub fn net_profit(&self) -> Money {
        self.report.net_profit
    }
}

/// Largest instance [`brute_force`] accepts.
pub const BRUTE_FORCE_LIMITS: (usize, usize, u32) = (6, 12, 4);

pub fn solve_exact(instance: &Instance) -> Result<ExactSolution, SolverError> {
    solve_exact_with(instance, SolverBudget::default())
}

/// Branch-and-bound over per-job start choices.
///
/// Jobs are branched in descending revenue order, starts in ascending marginal
/// cost with rejection last. A node is pruned when its profit plus, for each
/// undecided job, the best revenue-minus-marginal-cost it could still add
/// cannot beat the incumbent. Brown cost per slot is convex in load, so
/// marginal costs only grow as jobs are added and the bound is admissible.
/// Identical jobs are forced into nondecreasing start order.
pub fn solve_exact_with(
    instance: &Instance,
    budget: SolverBudget,
) -> Result<ExactSolution, SolverError> {
    let started = Instant::now();
    let beta = instance.charge_rate();
    let mut order: Vec<usize> = (0..instance.jobs().len()).collect();
    order.sort_by_key(|&i| {
        let j = &instance.jobs()[i];
        (
            std::cmp::Reverse(j.full_revenue(beta)),
            j.release(),
            j.deadline(),
            j.length(),
            j.nodes(),
            i,
        )
    });
    let same_as_prev: Vec<bool> = order
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            k > 0 && {
                let (a, b) = (&instance.jobs()[order[k - 1]], &instance.jobs()[i]);
                a.release() == b.release()
                    && a.length() == b.length()
                    && a.nodes() == b.nodes()
                    && a.deadline() == b.deadline()
            }
        })
        .collect();
    let revenue: Vec<Money> = order
        .iter()
        .map(|&i| instance.jobs()[i].full_revenue(beta))
        .collect();
    let mut suffix_revenue = vec![Money::ZERO; order.len() + 1];
    for k in (0..order.len()).rev() {
        suffix_revenue[k] = suffix_revenue[k + 1] + revenue[k];
    }

    let mut search = Search {
        instance,
        order,
        same_as_prev,
        revenue,
        suffix_revenue,
        occupancy: vec![0; instance.horizon()],
        choice: vec![None; instance.jobs().len()],
        best_profit: Money::ZERO,
        best_choice: vec![None; instance.jobs().len()],
        nodes: 0,
        budget,
        started,
        exhausted: false,
    };
    search.seed_incumbent()?;
    search.descend(0, Money::ZERO);

    let exhausted = search.exhausted;
    let nodes = search.nodes;
    let state = build_state(instance, &search.best_choice)?;
    let report = profit_report(instance, &state)?;
    Ok(ExactSolution {
        state,
        report,
        optimal: !exhausted,
        nodes_explored: nodes,
        wall_time: started.elapsed(),
    })
}

struct Search<'a> {
    instance: &'a Instance,
    order: Vec<usize>,
    same_as_prev: Vec<bool>,
    revenue: Vec<Money>,
    suffix_revenue: Vec<Money>,
    occupancy: Vec<u32>,
    /// Start per job, indexed like `instance.jobs()`.
    choice: Vec<Option<usize>>,
    best_profit: Money,
    best_choice: Vec<Option<usize>>,
    nodes: u64,
    budget: SolverBudget,
    started: Instant,
    exhausted: bool,
}

impl Search<'_> {
    /// Starts from the better of the two greedy schedules.
    fn seed_incumbent(&mut self) -> Result<(), ModelError> {
        for policy in [Policy::FirstFit, Policy::BestFit] {
            let run = run_online(self.instance, &SchedulerConfig::new(policy))?;
            let choice: Vec<_> = self
                .instance
                .jobs()
                .iter()
                .map(|j| run.state.start_of(j.id()))
                .collect();
            self.offer(run.report.net_profit, &choice);
        }
        Ok(())
    }

    fn offer(&mut self, profit: Money, choice: &[Option<usize>]) {
        let better = profit > self.best_profit
            || (profit == self.best_profit && lex_less(choice, &self.best_choice));
        if better {
            self.best_profit = profit;
            self.best_choice.copy_from_slice(choice);
        }
    }

    fn out_of_budget(&mut self) -> bool {
        if self.exhausted {
            return true;
        }
        if self.nodes >= self.budget.max_nodes
            || (self.nodes & 1023 == 0 && self.started.elapsed() >= self.budget.time_limit)
        {
            self.exhausted = true;
        }
        self.exhausted
    }

    fn fits(&self, job: &Job, start: usize) -> bool {
        let cap = self.instance.machines() - job.nodes();
        self.occupancy[start..start + job.length()]
            .iter()
            .all(|&e| e <= cap)
    }

    fn window(job: &Job, horizon: usize) -> std::ops::Range<usize> {
        let last = job.deadline().min(horizon);
        if last < job.release() + job.length() {
            0..0
        } else {
            job.release()..last - job.length() + 1
        }
    }

    /// Most profit the undecided jobs `k..` can still add.
    fn optimistic_gain(&self, k: usize) -> Money {
        let horizon = self.instance.horizon();
        let mut gain = Money::ZERO;
        for pos in k..self.order.len() {
            let job = &self.instance.jobs()[self.order[pos]];
            let best = Self::window(job, horizon)
                .filter(|&s| self.fits(job, s))
                .map(|s| marginal_cost(self.instance, &self.occupancy, job, s))
                .min();
            if let Some(cost) = best {
                if cost < self.revenue[pos] {
                    gain += self.revenue[pos] - cost;
                }
            }
        }
        gain
    }

    fn descend(&mut self, k: usize, profit: Money) {
        self.nodes += 1;
        if self.out_of_budget() {
            return;
        }
        if k == self.order.len() {
            let choice = self.choice.clone();
            self.offer(profit, &choice);
            return;
        }
        if profit + self.suffix_revenue[k] <= self.best_profit {
            return;
        }
        if profit + self.optimistic_gain(k) <= self.best_profit {
            return;
        }

        let idx = self.order[k];
        let job = &self.instance.jobs()[idx];
        // Symmetry: an identical predecessor fixes a lower bound on this start
        // (rejection counts as +infinity).
        let floor = if self.same_as_prev[k] {
            match self.choice[self.order[k - 1]] {
                Some(s) => Some(s),
                None => {
                    self.descend(k + 1, profit);
                    return;
                }
            }
        } else {
            None
        };

        let mut starts: Vec<(Money, usize)> = Self::window(job, self.instance.horizon())
            .filter(|&s| !matches!(floor, Some(f) if s < f) && self.fits(job, s))
            .map(|s| (marginal_cost(self.instance, &self.occupancy, job, s), s))
            .collect();
        starts.sort_unstable();

        let nodes = job.nodes();
        let length = job.length();
        for (cost, s) in starts {
            for e in &mut self.occupancy[s..s + length] {
                *e += nodes;
            }
            self.choice[idx] = Some(s);
            self.descend(k + 1, profit + self.revenue[k] - cost);
            self.choice[idx] = None;
            for e in &mut self.occupancy[s..s + length] {
                *e -= nodes;
            }
            if self.exhausted {
                return;
            }
        }
        self.descend(k + 1, profit);
    }
}

/// Orders assignment vectors with rejection after every start.
fn lex_less(a: &[Option<usize>], b: &[Option<usize>]) -> bool {
    let key = |c: &Option<usize>| c.unwrap_or(usize::MAX);
    a.iter().map(key).lt(b.iter().map(key))
}

fn build_state(instance: &Instance, choice: &[Option<usize>]) -> Result<ScheduleState, ModelError> {
    let mut state = ScheduleState::for_instance(instance);
    for (job, start) in instance.jobs().iter().zip(choice) {
        if let Some(s) = *start {
            state.assign(instance, job, s)?;
        }
    }
    Ok(state)
}

/// Exhaustive enumeration of every reject-or-start combination.
pub fn brute_force(instance: &Instance) -> Result<ExactSolution, SolverError> {
    let (max_jobs, max_slots, max_machines) = BRUTE_FORCE_LIMITS;
    if instance.jobs().len() > max_jobs
        || instance.horizon() > max_slots
        || instance.machines() > max_machines
    {
        return Err(SolverError::TooLarge(format!(
            "{} jobs, {} slots, {} machines (limits {max_jobs}, {max_slots}, {max_machines})",
            instance.jobs().len(),
            instance.horizon(),
            instance.machines()
        )));
    }
    let started = Instant::now();
    let mut e = Enumeration {
        instance,
        occupancy: vec![0; instance.horizon()],
        choice: vec![None; instance.jobs().len()],
        best: None,
        leaves: 0,
    };
    e.walk(0);
    let (_, choice) = e.best.expect("the empty schedule is always enumerated");
    let state = build_state(instance, &choice)?;
    let report = profit_report(instance, &state)?;
    Ok(ExactSolution {
        state,
        report,
        optimal: true,
        nodes_explored: e.leaves,
        wall_time: started.elapsed(),
    })
}

struct Enumeration<'a> {
    instance: &'a Instance,
    occupancy: Vec<u32>,
    choice: Vec<Option<usize>>,
    best: Option<(Money, Vec<Option<usize>>)>,
    leaves: u64,
}

impl Enumeration<'_> {
    fn walk(&mut self, i: usize) {
        if i == self.instance.jobs().len() {
            self.leaves += 1;
            self.score();
            return;
        }
        let job = &self.instance.jobs()[i];
        let (nodes, length, machines) = (job.nodes(), job.length(), self.instance.machines());
        for s in job.release()..=job.deadline().saturating_sub(length) {
            if s + length > self.occupancy.len() || s + length > job.deadline() {
                break;
            }
            if self.occupancy[s..s + length]
                .iter()
                .any(|&e| e + nodes > machines)
            {
                continue;
            }
            for e in &mut self.occupancy[s..s + length] {
                *e += nodes;
            }
            self.choice[i] = Some(s);
            self.walk(i + 1);
            self.choice[i] = None;
            for e in &mut self.occupancy[s..s + length] {
                *e -= nodes;
            }
        }
        self.walk(i + 1);
    }

    fn score(&mut self) {
        let inst = self.instance;
        let revenue: Money = inst
            .jobs()
            .iter()
            .zip(&self.choice)
            .filter(|(_, c)| c.is_some())
            .map(|(j, _)| j.full_revenue(inst.charge_rate()))
            .sum();
        let cost: Money = (0..inst.horizon())
            .map(|t| slot_cost(self.occupancy[t], inst.green()[t], inst.price()[t]))
            .sum();
        let profit = revenue - cost;
        let better = match &self.best {
            None => true,
            Some((p, c)) => profit > *p || (profit == *p && lex_less(&self.choice, c)),
        };
        if better {
            self.best = Some((profit, self.choice.clone()));
        }
    }
}
