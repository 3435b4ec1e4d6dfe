//! Profit-maximizing scheduling of deadline-flexible batch jobs on a cluster
//! powered by on-site solar energy plus time-of-use grid electricity.
//!
//! Jobs arrive online, may finish late at reduced quality down to a per-job
//! floor, and earn revenue only if that floor is met. Four online policies
//! (first-fit, best-fit, green-slot, random-fit) are compared against an exact
//! branch-and-bound optimum.

pub mod exact;
pub mod harness;
pub mod model;
pub mod schedulers;
pub mod traces;

pub use exact::{
    brute_force, solve_exact, solve_exact_with, ExactSolution, SolverBudget, SolverError,
};
pub use harness::{
    run_experiment, ExperimentPlan, HarnessError, MonteCarloResult, RatioRow, RatioTable,
    ReferenceKind,
};
pub use model::{
    deadline, normalized_values, placement_cost, profit_report, Instance, Job, JobId, ModelError,
    Money, NormalizedValues, ProfitReport, Quality, ScheduleState, Tariff,
};
pub use schedulers::{
    optimal_probability, run_online, Decision, OnlineRun, Outcome, Policy, SchedulerConfig,
    Transition,
};
pub use traces::{ClusterConfig, Family, PricingSchedule, Scenario, TraceError};
