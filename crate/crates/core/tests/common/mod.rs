//! Instance generators and hand-computed constants shared by the integration
//! tests.

#![allow(dead_code)]

use gdc_core::model::{Instance, Job, JobId, Money, Quality, Tariff};
use num_rational::Ratio;
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

/// $0.022 per machine-hour.
pub fn beta() -> Money {
    Money::from_nanos(22_000_000)
}

/// 140 W for one hour at $0.13 and $0.08 per kWh.
pub fn tariff() -> Tariff {
    Tariff {
        on_peak: Money::from_nanos(18_200_000),
        off_peak: Money::from_nanos(11_200_000),
    }
}

/// `(beta - cost) / beta` for each energy type, computed directly from the
/// nano-dollar constants.
pub fn values() -> (Ratio<i128>, Ratio<i128>, Ratio<i128>) {
    let b = beta().nanos() as i128;
    let t = tariff();
    (
        Ratio::new(b - t.on_peak.nanos() as i128, b),
        Ratio::new(b - t.off_peak.nanos() as i128, b),
        Ratio::from_integer(1),
    )
}

pub fn to_f64(r: Ratio<i128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

const QUALITIES: [(u32, u32); 5] = [(1, 1), (1, 2), (1, 3), (2, 3), (1, 5)];

#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub jobs: usize,
    pub slots: usize,
    pub machines: u32,
    pub green: bool,
}

pub const TINY: Limits = Limits {
    jobs: 6,
    slots: 12,
    machines: 4,
    green: true,
};

/// Random instances within `limits` on the two-tier tariff. Jobs that would
/// overrun the horizon are shortened and made strict.
pub fn instances(limits: Limits) -> impl Strategy<Value = Instance> {
    (1..=limits.machines, 2..=limits.slots)
        .prop_flat_map(move |(m, h)| {
            let green_max = if limits.green { m } else { 0 };
            (
                Just(m),
                proptest::collection::vec(any::<bool>(), h),
                proptest::collection::vec(0..=green_max, h),
                proptest::collection::vec(
                    (0..h, 1..=3usize, 1..=m, 0..QUALITIES.len()),
                    1..=limits.jobs,
                ),
            )
        })
        .prop_map(|(m, on_peak, green, specs)| {
            let h = on_peak.len();
            let t = tariff();
            let price = on_peak
                .iter()
                .map(|&on| if on { t.on_peak } else { t.off_peak })
                .collect();
            let jobs = specs
                .into_iter()
                .enumerate()
                .map(|(i, (r, len, n, qi))| {
                    let len = len.min(h - r);
                    let (num, den) = QUALITIES[qi];
                    let mut q = Quality::new(num, den).unwrap();
                    if r + len * den as usize / num as usize > h {
                        q = Quality::ONE;
                    }
                    Job::new(JobId(i as u32), r, len, n, q).unwrap()
                })
                .collect();
            Instance::new(jobs, m, green, price, beta())
                .unwrap()
                .with_tariff(t)
        })
}

/// `count` instances drawn deterministically from `strategy`.
pub fn corpus<S: Strategy>(strategy: S, count: usize, seed: u8) -> Vec<S::Value> {
    let rng = TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]);
    let mut runner = TestRunner::new_with_rng(Config::default(), rng);
    (0..count)
        .map(|_| strategy.new_tree(&mut runner).expect("generate").current())
        .collect()
}
