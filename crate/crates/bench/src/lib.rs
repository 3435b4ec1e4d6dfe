//! Fixed instances for the benchmarks, built from the synthetic solar trace
//! and uniform or synthetic batch workloads.

use gdc_core::model::{Instance, Quality};
use gdc_core::traces::{
    assemble_instance, scale_solar, scale_workload, synthetic_solar, synthetic_workload_trace,
    uniform_workload, ClusterConfig, PricingSchedule, WorkloadScaling,
};

fn cluster(machines: u32) -> ClusterConfig {
    ClusterConfig {
        machines,
        ..ClusterConfig::default()
    }
}

fn green(cluster: &ClusterConfig, window_slots: usize) -> Vec<u32> {
    let days = window_slots.div_ceil(24).max(1);
    let solar = synthetic_solar(days, 300, 1000.0);
    scale_solar(
        &solar,
        cluster.machines,
        cluster.watts_per_machine,
        cluster.slot_minutes,
    )
    .expect("synthetic solar scales")
}

/// Identical 2-slot, 4-node jobs at the given utilization.
pub fn uniform(machines: u32, window_slots: usize, utilization: f64, seed: u64) -> Instance {
    let c = cluster(machines);
    let q = Quality::from_f64(0.2).expect("valid quality");
    let jobs = uniform_workload(machines, window_slots, utilization, 2, 4, q, seed)
        .expect("uniform jobs fit");
    assemble_instance(
        jobs,
        &c,
        &PricingSchedule::default(),
        &green(&c, window_slots),
        window_slots,
    )
    .expect("uniform instance")
}

/// A heterogeneous workload resampled from a synthetic batch trace.
pub fn trace_driven(machines: u32, window_slots: usize, utilization: f64, seed: u64) -> Instance {
    let c = cluster(machines);
    let trace = synthetic_workload_trace(5_000, window_slots as f64 * c.slot_seconds(), seed);
    let scaling = WorkloadScaling {
        machines,
        slot_minutes: c.slot_minutes,
        window_slots,
        utilization,
        quality: Quality::from_f64(0.2).expect("valid quality"),
        seed,
    };
    let jobs = scale_workload(&trace, &scaling).expect("trace scales");
    assemble_instance(
        jobs,
        &c,
        &PricingSchedule::default(),
        &green(&c, window_slots),
        window_slots,
    )
    .expect("trace instance")
}
