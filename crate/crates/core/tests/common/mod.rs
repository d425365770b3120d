#![allow(dead_code)]

use edgecast_core::{zipf_popularity, DeviceSpec, Instance, TaskSpec};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEADLINE: f64 = 0.02;
pub const MU: f64 = 1e-27;

/// Small heterogeneous instance: Zipf(1) popularity shuffled per device,
/// budgets drawn between nothing and enough for every task.
pub fn random_instance(seed: u64, max_tasks: usize, max_devices: usize) -> Instance {
    random_instance_scaled(seed, max_tasks, max_devices, 1.0)
}

/// As `random_instance` with bit sizes and CPU rates multiplied by `scale`,
/// which leaves every delay unchanged and scales bandwidths by `scale`.
pub fn random_instance_scaled(seed: u64, max_tasks: usize, max_devices: usize, scale: f64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = rng.random_range(2..=max_tasks);
    let k = rng.random_range(1..=max_devices);
    let tasks: Vec<TaskSpec> = (0..f)
        .map(|_| {
            let input = scale * rng.random_range(1e6..15e6);
            TaskSpec::new(input, 10.0, input * rng.random_range(0.5..3.0)).unwrap()
        })
        .collect();
    let zipf = zipf_popularity(f, 1.0).unwrap();
    let cache_all: f64 = tasks.iter().map(|t| t.output_bits.max(t.input_bits)).sum();
    let mut popularity = Vec::with_capacity(k);
    let mut devices = Vec::with_capacity(k);
    for _ in 0..k {
        let mut row = zipf.clone();
        row.shuffle(&mut rng);
        let cpu: f64 = scale * rng.random_range(5e10..1.5e11);
        let energy_all: f64 = row.iter().zip(&tasks).map(|(p, t)| p * MU * cpu * cpu * t.cycles()).sum();
        let energy = rng.random_range(0.0..1.0) * energy_all;
        let cache = rng.random_range(0.0..1.0) * cache_all;
        devices.push(DeviceSpec::new(cpu, energy, cache, rng.random_range(0.05..0.5)).unwrap());
        popularity.push(row);
    }
    Instance::new(tasks, devices, popularity, DEADLINE, MU).unwrap()
}

pub fn fig2_tasks(tasks: usize) -> Vec<TaskSpec> {
    (0..tasks)
        .map(|i| {
            let input = 1e6 + 14e6 * i as f64 / (tasks - 1) as f64;
            TaskSpec::new(input, 10.0, 2.0 * input).unwrap()
        })
        .collect()
}

/// Two identical devices with Zipf(1) demand over ten tasks of growing size.
pub fn fig2_instance(cache_bits: f64) -> Instance {
    let tasks = fig2_tasks(10);
    let popularity = zipf_popularity(10, 1.0).unwrap();
    let device = DeviceSpec::new(1.1e11, 1.7e3, cache_bits, 0.1).unwrap();
    Instance::new(tasks, vec![device; 2], vec![popularity; 2], DEADLINE, MU).unwrap()
}
