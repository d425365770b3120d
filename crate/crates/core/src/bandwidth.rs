//! Multicast and unicast bandwidth of a service policy.
//!
//! In a given request state every task is multicast at most once per data
//! kind (input for route 3, output for route 4). The stream must reach the
//! worst-channel requester at the highest required rate, so its bandwidth is
//! the product of the two maxima taken over the requesters using that route.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, RequestState, Route, ServicePolicy};

/// Default bound on the number of enumerated request states.
pub const DEFAULT_STATE_CAP: f64 = 1e6;

/// Largest device count for which requester sets (`2^K` per task) are enumerated.
pub const MAX_REQUESTER_SET_DEVICES: usize = 20;

const MC_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthBreakdown {
    /// Input multicast bandwidth per task (route 3 requesters), Hz.
    pub per_task_input: Vec<f64>,
    /// Output multicast bandwidth per task (route 4 requesters), Hz.
    pub per_task_output: Vec<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Running maxima of spectral-efficiency inverse and rate for one stream.
#[derive(Debug, Clone, Copy, Default)]
struct StreamMax {
    inv_se: f64,
    rate: f64,
}

impl StreamMax {
    fn add(&mut self, inv_se: f64, rate: f64) {
        self.inv_se = self.inv_se.max(inv_se);
        self.rate = self.rate.max(rate);
    }

    fn bandwidth(&self) -> f64 {
        self.inv_se * self.rate
    }
}

/// Reusable scratch space for evaluating many request states.
struct StateEvaluator<'a> {
    instance: &'a Instance,
    policy: &'a ServicePolicy,
    input: Vec<StreamMax>,
    output: Vec<StreamMax>,
}

impl<'a> StateEvaluator<'a> {
    fn new(instance: &'a Instance, policy: &'a ServicePolicy) -> Self {
        assert!(policy.matches(instance), "policy shape does not match instance");
        let f = instance.task_count();
        StateEvaluator {
            instance,
            policy,
            input: vec![StreamMax::default(); f],
            output: vec![StreamMax::default(); f],
        }
    }

    fn fill(&mut self, requests: &[usize]) {
        self.input.fill(StreamMax::default());
        self.output.fill(StreamMax::default());
        for (k, &f) in requests.iter().enumerate() {
            let route = self.policy.route(k, f);
            let inv_se = self.instance.devices()[k].inv_spectral_efficiency;
            let rate = self.instance.rate(k, f, route);
            match route {
                Route::LocalCompute => self.input[f].add(inv_se, rate),
                Route::MecCompute => self.output[f].add(inv_se, rate),
                _ => {}
            }
        }
    }

    fn total(&mut self, requests: &[usize]) -> f64 {
        self.fill(requests);
        self.input
            .iter()
            .zip(&self.output)
            .map(|(i, o)| i.bandwidth() + o.bandwidth())
            .sum()
    }
}

/// Bandwidth needed in one request state.
pub fn per_state_bandwidth(
    instance: &Instance,
    policy: &ServicePolicy,
    state: &RequestState,
) -> BandwidthBreakdown {
    let mut eval = StateEvaluator::new(instance, policy);
    eval.fill(state.requests());
    let per_task_input: Vec<f64> = eval.input.iter().map(StreamMax::bandwidth).collect();
    let per_task_output: Vec<f64> = eval.output.iter().map(StreamMax::bandwidth).collect();
    let total = per_task_input.iter().zip(&per_task_output).map(|(i, o)| i + o).sum();
    BandwidthBreakdown {
        per_task_input,
        per_task_output,
        total,
    }
}

fn check_state_cap(instance: &Instance, state_cap: f64) -> Result<()> {
    let states = instance.state_count();
    if states > state_cap {
        return Err(Error::StateSpaceTooLarge {
            states,
            cap: state_cap,
        });
    }
    Ok(())
}

/// Iterates all `F^K` request states in mixed-radix order (device 0 varies
/// fastest) together with their probabilities.
pub struct RequestStates<'a> {
    instance: &'a Instance,
    current: Option<Vec<usize>>,
}

impl<'a> RequestStates<'a> {
    pub fn new(instance: &'a Instance, state_cap: f64) -> Result<Self> {
        check_state_cap(instance, state_cap)?;
        Ok(RequestStates {
            instance,
            current: Some(vec![0; instance.device_count()]),
        })
    }
}

impl Iterator for RequestStates<'_> {
    type Item = (RequestState, f64);

    fn next(&mut self) -> Option<Self::Item> {
        let state = self.current.take()?;
        let pop = self.instance.popularity();
        let prob = state.iter().enumerate().map(|(k, &f)| pop[k][f]).product();

        let mut next = state.clone();
        let radix = self.instance.task_count();
        let mut carry = true;
        for digit in next.iter_mut() {
            *digit += 1;
            if *digit < radix {
                carry = false;
                break;
            }
            *digit = 0;
        }
        if !carry {
            self.current = Some(next);
        }
        Some((RequestState::from_raw(state), prob))
    }
}

/// Average bandwidth by enumerating every request state.
pub fn average_bandwidth_exact(instance: &Instance, policy: &ServicePolicy, state_cap: f64) -> Result<f64> {
    let states = RequestStates::new(instance, state_cap)?;
    let mut eval = StateEvaluator::new(instance, policy);
    Ok(states
        .filter(|(_, p)| *p > 0.0)
        .map(|(s, p)| p * eval.total(s.requests()))
        .sum())
}

/// Probability that exactly the devices in `mask` request task `f`.
pub(crate) fn requester_set_probability(instance: &Instance, f: usize, mask: u64) -> f64 {
    instance
        .popularity()
        .iter()
        .enumerate()
        .map(|(k, row)| if mask >> k & 1 == 1 { row[f] } else { 1.0 - row[f] })
        .product()
}

/// Expected bandwidth of task `f` given the routes the devices use for it.
/// Marginalizes over which devices request `f`, so it costs `2^K` instead
/// of `F^K` terms.
pub(crate) fn task_expected_bandwidth(instance: &Instance, f: usize, routes: &[Route]) -> f64 {
    let k_count = instance.device_count();
    let mut total = 0.0;
    for mask in 1u64..(1u64 << k_count) {
        let prob = requester_set_probability(instance, f, mask);
        if prob == 0.0 {
            continue;
        }
        let mut input = StreamMax::default();
        let mut output = StreamMax::default();
        for (k, &route) in routes.iter().enumerate() {
            if mask >> k & 1 == 0 {
                continue;
            }
            let inv_se = instance.devices()[k].inv_spectral_efficiency;
            match route {
                Route::LocalCompute => input.add(inv_se, instance.rate(k, f, route)),
                Route::MecCompute => output.add(inv_se, instance.rate(k, f, route)),
                _ => {}
            }
        }
        total += prob * (input.bandwidth() + output.bandwidth());
    }
    total
}

/// Average bandwidth computed task by task over requester sets. Exact, and
/// usable when `F^K` is too large to enumerate but `K` is small.
pub fn average_bandwidth_by_requesters(instance: &Instance, policy: &ServicePolicy) -> Result<f64> {
    assert!(policy.matches(instance), "policy shape does not match instance");
    let k_count = instance.device_count();
    if k_count > MAX_REQUESTER_SET_DEVICES {
        return Err(Error::StateSpaceTooLarge {
            states: 2f64.powi(k_count as i32),
            cap: 2f64.powi(MAX_REQUESTER_SET_DEVICES as i32),
        });
    }
    let mut column = vec![Route::MecCompute; k_count];
    let mut total = 0.0;
    for f in 0..instance.task_count() {
        for (k, slot) in column.iter_mut().enumerate() {
            *slot = policy.route(k, f);
        }
        total += task_expected_bandwidth(instance, f, &column);
    }
    Ok(total)
}

/// Exact average bandwidth by the cheaper exact method: requester sets
/// (`F 2^K` terms) or state enumeration (`F^K` states, at most `state_cap`).
/// Fewer terms also means less rounding error.
pub fn average_bandwidth(instance: &Instance, policy: &ServicePolicy, state_cap: f64) -> Result<f64> {
    let k = instance.device_count();
    let f = instance.task_count() as f64;
    if k <= MAX_REQUESTER_SET_DEVICES && f * 2f64.powi(k as i32) <= instance.state_count() {
        return average_bandwidth_by_requesters(instance, policy);
    }
    match average_bandwidth_exact(instance, policy, state_cap) {
        Err(Error::StateSpaceTooLarge { .. }) => average_bandwidth_by_requesters(instance, policy),
        other => other,
    }
}

/// Monte Carlo estimate of the average bandwidth. Samples are drawn in fixed
/// chunks, each from its own ChaCha stream, so the result depends only on
/// `seed` and `samples`.
pub fn average_bandwidth_mc(
    instance: &Instance,
    policy: &ServicePolicy,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::invalid("samples", "at least one sample is required"));
    }
    assert!(policy.matches(instance), "policy shape does not match instance");
    let samplers: Vec<WeightedIndex<f64>> = instance
        .popularity()
        .iter()
        .map(|row| WeightedIndex::new(row).expect("popularity rows are validated"))
        .collect();

    let chunks = samples.div_ceil(MC_CHUNK);
    // (count, mean, sum of squared deviations) per chunk.
    let partial: Vec<(f64, f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut eval = StateEvaluator::new(instance, policy);
            let mut requests = vec![0usize; instance.device_count()];
            let (mut mean, mut m2) = (0.0, 0.0);
            for i in 0..n {
                for (slot, s) in requests.iter_mut().zip(&samplers) {
                    *slot = s.sample(&mut rng);
                }
                let x = eval.total(&requests);
                let delta = x - mean;
                mean += delta / (i + 1) as f64;
                m2 += delta * (x - mean);
            }
            (n as f64, mean, m2)
        })
        .collect();

    let (n, mean, m2) = partial.into_iter().fold((0.0, 0.0, 0.0), |(na, ma, sa), (nb, mb, sb)| {
        let n = na + nb;
        let delta = mb - ma;
        (n, ma + delta * nb / n, sa + sb + delta * delta * na * nb / n)
    });
    let std_error = if samples > 1 {
        (m2 / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_error,
        samples,
        seed,
    })
}

/// Average bandwidth when every request is served by its own unicast stream.
pub fn unicast_bandwidth(instance: &Instance, policy: &ServicePolicy) -> f64 {
    assert!(policy.matches(instance), "policy shape does not match instance");
    let mut total = 0.0;
    for (k, row) in policy.rows().enumerate() {
        let inv_se = instance.devices()[k].inv_spectral_efficiency;
        for (f, &route) in row.iter().enumerate() {
            if route.transmits() {
                total += instance.popularity()[k][f] * instance.rate(k, f, route) * inv_se;
            }
        }
    }
    total
}
