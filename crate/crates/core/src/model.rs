//! Problem instances, service routes and policies.
//!
//! A request for task `f` at device `k` is served by exactly one of four
//! routes. Routes 1 and 2 need no transmission; route 3 downloads the input
//! and computes locally; route 4 downloads the output computed at the edge
//! server. Indices are zero-based throughout the crate.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack tolerated by feasibility checks before a constraint counts
/// as violated.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Tolerance on popularity row sums.
pub const POPULARITY_SUM_TOL: f64 = 1e-9;

/// Deadline used when a configuration does not give one.
pub const DEFAULT_DEADLINE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    /// Input size in bits.
    pub input_bits: f64,
    /// Computation load in cycles per input bit.
    pub load: f64,
    /// Output size in bits.
    pub output_bits: f64,
}

impl TaskSpec {
    pub fn new(input_bits: f64, load: f64, output_bits: f64) -> Result<Self> {
        let task = TaskSpec {
            input_bits,
            load,
            output_bits,
        };
        task.validate()?;
        Ok(task)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("input_bits", self.input_bits),
            ("load", self.load),
            ("output_bits", self.output_bits),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid("task", format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Output-to-input size ratio.
    pub fn alpha(&self) -> f64 {
        self.output_bits / self.input_bits
    }

    /// CPU cycles needed to compute the task once.
    pub fn cycles(&self) -> f64 {
        self.input_bits * self.load
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    /// CPU frequency in cycles per second.
    pub cpu_rate: f64,
    /// Average energy budget per slot in joules.
    pub avg_energy: f64,
    /// Cache size in bits.
    pub cache_bits: f64,
    /// Bandwidth needed per bit/s of rate, `1 / log(1 + P h^2 / sigma^2)`.
    pub inv_spectral_efficiency: f64,
}

impl DeviceSpec {
    pub fn new(
        cpu_rate: f64,
        avg_energy: f64,
        cache_bits: f64,
        inv_spectral_efficiency: f64,
    ) -> Result<Self> {
        let device = DeviceSpec {
            cpu_rate,
            avg_energy,
            cache_bits,
            inv_spectral_efficiency,
        };
        device.validate()?;
        Ok(device)
    }

    /// Builds a device from transmit power, channel gain and noise variance.
    /// Spectral efficiency uses a base-2 logarithm (bits/s/Hz).
    pub fn from_channel(
        cpu_rate: f64,
        avg_energy: f64,
        cache_bits: f64,
        power: f64,
        channel_gain: f64,
        noise_var: f64,
    ) -> Result<Self> {
        if !(power > 0.0 && noise_var > 0.0 && channel_gain.is_finite() && channel_gain != 0.0) {
            return Err(Error::invalid(
                "device",
                "power and noise variance must be > 0 and channel gain nonzero",
            ));
        }
        let snr = power * channel_gain * channel_gain / noise_var;
        Self::new(cpu_rate, avg_energy, cache_bits, 1.0 / snr.ln_1p() * std::f64::consts::LN_2)
    }

    fn validate(&self) -> Result<()> {
        if !(self.cpu_rate.is_finite() && self.cpu_rate > 0.0) {
            return Err(Error::invalid("device", format!("cpu_rate must be > 0, got {}", self.cpu_rate)));
        }
        if !(self.avg_energy.is_finite() && self.avg_energy >= 0.0) {
            return Err(Error::invalid("device", format!("avg_energy must be >= 0, got {}", self.avg_energy)));
        }
        if !(self.cache_bits.is_finite() && self.cache_bits >= 0.0) {
            return Err(Error::invalid("device", format!("cache_bits must be >= 0, got {}", self.cache_bits)));
        }
        if !(self.inv_spectral_efficiency.is_finite() && self.inv_spectral_efficiency > 0.0) {
            return Err(Error::invalid(
                "device",
                format!("inv_spectral_efficiency must be finite and > 0, got {}", self.inv_spectral_efficiency),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Route {
    LocalOutputCache,
    LocalInputCacheCompute,
    LocalCompute,
    MecCompute,
}

impl Route {
    pub const ALL: [Route; 4] = [
        Route::LocalOutputCache,
        Route::LocalInputCacheCompute,
        Route::LocalCompute,
        Route::MecCompute,
    ];

    /// Zero-based position, used to index per-route arrays.
    pub fn index(self) -> usize {
        self as usize
    }

    /// One-based route number.
    pub fn number(self) -> usize {
        self.index() + 1
    }

    pub fn from_index(i: usize) -> Option<Route> {
        Route::ALL.get(i).copied()
    }

    /// Routes 3 and 4 need data from the edge server.
    pub fn transmits(self) -> bool {
        matches!(self, Route::LocalCompute | Route::MecCompute)
    }

    pub fn uses_cache(self) -> bool {
        matches!(self, Route::LocalOutputCache | Route::LocalInputCacheCompute)
    }

    pub fn computes_locally(self) -> bool {
        matches!(self, Route::LocalInputCacheCompute | Route::LocalCompute)
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// A validated problem instance. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    tasks: Vec<TaskSpec>,
    devices: Vec<DeviceSpec>,
    popularity: Vec<Vec<f64>>,
    deadline: f64,
    energy_coeff: f64,
    // Per (k, f): rates for the four routes, infinite when route 3 cannot
    // meet the deadline.
    rates: Vec<[f64; 4]>,
    // Per (k, f): expected energy spent when the task is computed locally.
    energy: Vec<f64>,
}

impl Instance {
    pub fn new(
        tasks: Vec<TaskSpec>,
        devices: Vec<DeviceSpec>,
        popularity: Vec<Vec<f64>>,
        deadline: f64,
        energy_coeff: f64,
    ) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::invalid("instance", "at least one task is required"));
        }
        if devices.is_empty() {
            return Err(Error::invalid("instance", "at least one device is required"));
        }
        for t in &tasks {
            t.validate()?;
        }
        for d in &devices {
            d.validate()?;
        }
        if !(deadline.is_finite() && deadline > 0.0) {
            return Err(Error::invalid("instance", format!("deadline must be > 0, got {deadline}")));
        }
        if !(energy_coeff.is_finite() && energy_coeff > 0.0) {
            return Err(Error::invalid("instance", format!("energy_coeff must be > 0, got {energy_coeff}")));
        }
        if popularity.len() != devices.len() {
            return Err(Error::invalid(
                "popularity",
                format!("expected {} rows, got {}", devices.len(), popularity.len()),
            ));
        }
        for (k, row) in popularity.iter().enumerate() {
            if row.len() != tasks.len() {
                return Err(Error::invalid(
                    "popularity",
                    format!("row {k} has {} entries, expected {}", row.len(), tasks.len()),
                ));
            }
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::invalid("popularity", format!("row {k} has a negative or non-finite entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > POPULARITY_SUM_TOL {
                return Err(Error::invalid("popularity", format!("row {k} sums to {sum}, not 1")));
            }
        }
        for (k, d) in devices.iter().enumerate() {
            for (f, t) in tasks.iter().enumerate() {
                let latency = t.cycles() / d.cpu_rate;
                if latency > deadline {
                    return Err(Error::invalid(
                        "instance",
                        format!("task {f} takes {latency} s on device {k}, over the {deadline} s deadline"),
                    ));
                }
            }
        }

        let mut rates = Vec::with_capacity(devices.len() * tasks.len());
        let mut energy = Vec::with_capacity(devices.len() * tasks.len());
        for (k, d) in devices.iter().enumerate() {
            for (f, t) in tasks.iter().enumerate() {
                let spare = deadline - t.cycles() / d.cpu_rate;
                let r3 = if spare > 0.0 { t.input_bits / spare } else { f64::INFINITY };
                rates.push([0.0, 0.0, r3, t.output_bits / deadline]);
                energy.push(popularity[k][f] * energy_coeff * d.cpu_rate * d.cpu_rate * t.cycles());
            }
        }

        Ok(Instance {
            tasks,
            devices,
            popularity,
            deadline,
            energy_coeff,
            rates,
            energy,
        })
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn device_count(&self) -> usize {
        self.devices.len()
    }

    pub fn tasks(&self) -> &[TaskSpec] {
        &self.tasks
    }

    pub fn devices(&self) -> &[DeviceSpec] {
        &self.devices
    }

    pub fn popularity(&self) -> &[Vec<f64>] {
        &self.popularity
    }

    pub fn deadline(&self) -> f64 {
        self.deadline
    }

    pub fn energy_coeff(&self) -> f64 {
        self.energy_coeff
    }

    /// Number of request states, `F^K`, as a float so it cannot overflow.
    pub fn state_count(&self) -> f64 {
        (self.task_count() as f64).powi(self.device_count() as i32)
    }

    /// Required rate in bits/s; infinite for an unavailable route 3.
    pub fn rate(&self, k: usize, f: usize, route: Route) -> f64 {
        self.rates[k * self.tasks.len() + f][route.index()]
    }

    pub fn route_available(&self, k: usize, f: usize, route: Route) -> bool {
        self.rate(k, f, route).is_finite()
    }

    /// Expected energy `P_{k,f} mu f_k^2 I_f w_f` of computing task `f` on device `k`.
    pub fn compute_energy(&self, k: usize, f: usize) -> f64 {
        self.energy[k * self.tasks.len() + f]
    }

    /// Cache bits consumed by serving task `f` through `route`.
    pub fn cache_cost(&self, f: usize, route: Route) -> f64 {
        match route {
            Route::LocalOutputCache => self.tasks[f].output_bits,
            Route::LocalInputCacheCompute => self.tasks[f].input_bits,
            _ => 0.0,
        }
    }

    /// Energy consumed on device `k` by serving task `f` through `route`.
    pub fn energy_cost(&self, k: usize, f: usize, route: Route) -> f64 {
        if route.computes_locally() {
            self.compute_energy(k, f)
        } else {
            0.0
        }
    }

    /// Rebuilds the instance with every device transformed by `map`.
    pub fn map_devices(&self, mut map: impl FnMut(usize, &DeviceSpec) -> DeviceSpec) -> Result<Instance> {
        let devices = self.devices.iter().enumerate().map(|(k, d)| map(k, d)).collect();
        Instance::new(
            self.tasks.clone(),
            devices,
            self.popularity.clone(),
            self.deadline,
            self.energy_coeff,
        )
    }

    fn check_index(&self, k: usize, f: usize) -> Result<()> {
        if k >= self.device_count() || f >= self.task_count() {
            return Err(Error::invalid(
                "index",
                format!("(device {k}, task {f}) out of range for {}x{}", self.device_count(), self.task_count()),
            ));
        }
        Ok(())
    }
}

/// Minimum rate in bits/s for serving task `f` at device `k` via `route`.
pub fn route_rate(instance: &Instance, k: usize, f: usize, route: Route) -> Result<f64> {
    instance.check_index(k, f)?;
    let rate = instance.rate(k, f, route);
    if rate.is_finite() {
        Ok(rate)
    } else {
        Err(Error::InfeasibleRoute {
            device: k,
            task: f,
            route,
            reason: "local computing leaves no time to download the input",
        })
    }
}

/// Route choice for every (device, task) pair; one route per pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ServicePolicy {
    devices: usize,
    tasks: usize,
    routes: Vec<Route>,
}

impl ServicePolicy {
    pub fn uniform(devices: usize, tasks: usize, route: Route) -> Self {
        ServicePolicy {
            devices,
            tasks,
            routes: vec![route; devices * tasks],
        }
    }

    /// All-MEC-computing policy for `instance`.
    pub fn mec(instance: &Instance) -> Self {
        Self::uniform(instance.device_count(), instance.task_count(), Route::MecCompute)
    }

    pub fn from_rows(rows: Vec<Vec<Route>>) -> Result<Self> {
        let devices = rows.len();
        let tasks = rows.first().map_or(0, Vec::len);
        if devices == 0 || tasks == 0 {
            return Err(Error::invalid("policy", "policy must be non-empty"));
        }
        if rows.iter().any(|r| r.len() != tasks) {
            return Err(Error::invalid("policy", "rows have different lengths"));
        }
        Ok(ServicePolicy {
            devices,
            tasks,
            routes: rows.into_iter().flatten().collect(),
        })
    }

    pub fn device_count(&self) -> usize {
        self.devices
    }

    pub fn task_count(&self) -> usize {
        self.tasks
    }

    pub fn route(&self, k: usize, f: usize) -> Route {
        self.routes[k * self.tasks + f]
    }

    pub fn set(&mut self, k: usize, f: usize, route: Route) {
        self.routes[k * self.tasks + f] = route;
    }

    pub fn row(&self, k: usize) -> &[Route] {
        &self.routes[k * self.tasks..(k + 1) * self.tasks]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Route]> {
        self.routes.chunks(self.tasks)
    }

    /// Binary indicator `x_{f,j}^k`.
    pub fn indicator(&self, k: usize, f: usize, route: Route) -> f64 {
        if self.route(k, f) == route {
            1.0
        } else {
            0.0
        }
    }

    pub fn matches(&self, instance: &Instance) -> bool {
        self.devices == instance.device_count() && self.tasks == instance.task_count()
    }
}

/// Per-device cache, input-cache and local-compute decisions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheComputeDecision {
    pub cache_input: Vec<Vec<bool>>,
    pub cache_output: Vec<Vec<bool>>,
    pub compute_local: Vec<Vec<bool>>,
}

pub fn policy_to_decision(policy: &ServicePolicy) -> CacheComputeDecision {
    let grid = |pred: fn(Route) -> bool| -> Vec<Vec<bool>> {
        policy.rows().map(|row| row.iter().map(|r| pred(*r)).collect()).collect()
    };
    CacheComputeDecision {
        cache_input: grid(|r| r == Route::LocalInputCacheCompute),
        cache_output: grid(|r| r == Route::LocalOutputCache),
        compute_local: grid(Route::computes_locally),
    }
}

/// Inverse of [`policy_to_decision`]; rejects combinations that are not a
/// row of the route table.
pub fn decision_to_policy(decision: &CacheComputeDecision) -> Result<ServicePolicy> {
    let rows = decision
        .cache_output
        .iter()
        .zip(&decision.cache_input)
        .zip(&decision.compute_local)
        .enumerate()
        .map(|(k, ((co, ci), d))| {
            if co.len() != ci.len() || co.len() != d.len() {
                return Err(Error::invalid("decision", format!("row {k} has mismatched lengths")));
            }
            co.iter()
                .zip(ci)
                .zip(d)
                .enumerate()
                .map(|(f, ((&co, &ci), &d))| match (co, ci, d) {
                    (true, false, false) => Ok(Route::LocalOutputCache),
                    (false, true, true) => Ok(Route::LocalInputCacheCompute),
                    (false, false, true) => Ok(Route::LocalCompute),
                    (false, false, false) => Ok(Route::MecCompute),
                    _ => Err(Error::invalid(
                        "decision",
                        format!("device {k}, task {f}: (c_out={co}, c_in={ci}, d={d}) is not a valid route"),
                    )),
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    if rows.len() != decision.cache_input.len() || rows.len() != decision.compute_local.len() {
        return Err(Error::invalid("decision", "matrices have different device counts"));
    }
    ServicePolicy::from_rows(rows)
}

/// One realization of the simultaneous requests: `requests[k]` is the task
/// requested by device `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RequestState {
    requests: Vec<usize>,
}

impl RequestState {
    pub fn new(instance: &Instance, requests: Vec<usize>) -> Result<Self> {
        if requests.len() != instance.device_count() {
            return Err(Error::invalid(
                "request state",
                format!("expected {} requests, got {}", instance.device_count(), requests.len()),
            ));
        }
        if let Some(bad) = requests.iter().find(|&&f| f >= instance.task_count()) {
            return Err(Error::invalid("request state", format!("task {bad} out of range")));
        }
        Ok(RequestState { requests })
    }

    pub(crate) fn from_raw(requests: Vec<usize>) -> Self {
        RequestState { requests }
    }

    pub fn requests(&self) -> &[usize] {
        &self.requests
    }

    pub fn task_of(&self, k: usize) -> usize {
        self.requests[k]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    Cache,
    Energy,
    /// Route 3 selected where the deadline leaves no download time.
    RouteUnavailable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub device: usize,
    pub kind: ConstraintKind,
    /// Capacity minus usage; negative for a violation.
    pub slack: f64,
}

/// Resource usage of one device under a policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceUsage {
    pub device: usize,
    pub cache_used: f64,
    pub cache_slack: f64,
    pub energy_used: f64,
    pub energy_slack: f64,
}

pub fn device_usage(instance: &Instance, policy: &ServicePolicy, k: usize) -> DeviceUsage {
    let (cache_used, energy_used) = policy
        .row(k)
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(c, e), (f, &r)| {
            (c + instance.cache_cost(f, r), e + instance.energy_cost(k, f, r))
        });
    let d = &instance.devices()[k];
    DeviceUsage {
        device: k,
        cache_used,
        cache_slack: d.cache_bits - cache_used,
        energy_used,
        energy_slack: d.avg_energy - energy_used,
    }
}

fn exceeds(used: f64, cap: f64) -> bool {
    used - cap > FEASIBILITY_TOL * cap.max(used).max(f64::MIN_POSITIVE)
}

/// Cache and energy constraint violations of `policy`; empty when feasible.
pub fn check_feasible(instance: &Instance, policy: &ServicePolicy) -> Vec<Violation> {
    assert!(policy.matches(instance), "policy shape does not match instance");
    let mut out = Vec::new();
    for k in 0..instance.device_count() {
        let u = device_usage(instance, policy, k);
        let d = &instance.devices()[k];
        if exceeds(u.cache_used, d.cache_bits) {
            out.push(Violation {
                device: k,
                kind: ConstraintKind::Cache,
                slack: u.cache_slack,
            });
        }
        if exceeds(u.energy_used, d.avg_energy) {
            out.push(Violation {
                device: k,
                kind: ConstraintKind::Energy,
                slack: u.energy_slack,
            });
        }
        for (f, &r) in policy.row(k).iter().enumerate() {
            if !instance.route_available(k, f, r) {
                out.push(Violation {
                    device: k,
                    kind: ConstraintKind::RouteUnavailable,
                    slack: f64::NEG_INFINITY,
                });
            }
        }
    }
    out
}

pub fn is_feasible(instance: &Instance, policy: &ServicePolicy) -> bool {
    check_feasible(instance, policy).is_empty()
}

/// True when one device row satisfies its cache and energy budgets.
pub(crate) fn row_feasible(instance: &Instance, k: usize, row: &[Route]) -> bool {
    let d = &instance.devices()[k];
    let mut cache = 0.0;
    let mut energy = 0.0;
    for (f, &r) in row.iter().enumerate() {
        if !instance.route_available(k, f, r) {
            return false;
        }
        cache += instance.cache_cost(f, r);
        energy += instance.energy_cost(k, f, r);
    }
    !exceeds(cache, d.cache_bits) && !exceeds(energy, d.avg_energy)
}

/// Zipf popularity over `task_count` tasks: entry `f` is proportional to
/// `1 / (f + 1)^gamma`.
pub fn zipf_popularity(task_count: usize, gamma: f64) -> Result<Vec<f64>> {
    if task_count == 0 {
        return Err(Error::invalid("zipf", "task count must be >= 1"));
    }
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::invalid("zipf", format!("gamma must be >= 0, got {gamma}")));
    }
    let weights: Vec<f64> = (1..=task_count).map(|f| (f as f64).powf(-gamma)).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig2_task() -> TaskSpec {
        TaskSpec::new(1.5e7, 10.0, 3.0e7).unwrap()
    }

    fn one_by_one(avg_energy: f64, cache_bits: f64) -> Instance {
        Instance::new(
            vec![fig2_task()],
            vec![DeviceSpec::new(1.1e11, avg_energy, cache_bits, 0.1).unwrap()],
            vec![vec![1.0]],
            0.02,
            1e-27,
        )
        .unwrap()
    }

    #[test]
    fn route_rates() {
        let inst = one_by_one(1.7e3, 0.0);
        assert_eq!(route_rate(&inst, 0, 0, Route::LocalOutputCache).unwrap(), 0.0);
        assert_eq!(route_rate(&inst, 0, 0, Route::LocalInputCacheCompute).unwrap(), 0.0);
        assert_relative_eq!(route_rate(&inst, 0, 0, Route::MecCompute).unwrap(), 1.5e9, max_relative = 1e-12);
        let expected = 1.5e7 / (0.02 - 1.5e8 / 1.1e11);
        assert_relative_eq!(route_rate(&inst, 0, 0, Route::LocalCompute).unwrap(), expected, max_relative = 1e-12);
        assert_relative_eq!(expected, 8.0489e8, max_relative = 1e-4);
        assert!(route_rate(&inst, 1, 0, Route::MecCompute).is_err());
    }

    #[test]
    fn route_three_unavailable_at_exact_deadline() {
        // I w / f == tau: local computing alone uses the whole slot.
        let inst = Instance::new(
            vec![TaskSpec::new(2.0, 1.0, 1.0).unwrap()],
            vec![DeviceSpec::new(100.0, 1.0, 0.0, 1.0).unwrap()],
            vec![vec![1.0]],
            0.02,
            1e-27,
        )
        .unwrap();
        assert!(matches!(
            route_rate(&inst, 0, 0, Route::LocalCompute),
            Err(Error::InfeasibleRoute { .. })
        ));
        let mut p = ServicePolicy::mec(&inst);
        p.set(0, 0, Route::LocalCompute);
        let v = check_feasible(&inst, &p);
        assert!(v.iter().any(|v| v.kind == ConstraintKind::RouteUnavailable));
    }

    #[test]
    fn instance_validation() {
        let dev = DeviceSpec::new(1.1e11, 0.0, 0.0, 0.1).unwrap();
        let bad_row = Instance::new(vec![fig2_task()], vec![dev], vec![vec![0.9]], 0.02, 1e-27);
        assert!(bad_row.is_err());
        let slow = DeviceSpec::new(1e3, 0.0, 0.0, 0.1).unwrap();
        assert!(Instance::new(vec![fig2_task()], vec![slow], vec![vec![1.0]], 0.02, 1e-27).is_err());
        assert!(DeviceSpec::new(1.0, -1.0, 0.0, 0.1).is_err());
        assert!(DeviceSpec::new(1.0, 0.0, -5.0, 0.1).is_err());
        assert!(TaskSpec::new(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn channel_constructor_uses_log2() {
        // SNR 3 -> log2(4) = 2 bits/s/Hz.
        let d = DeviceSpec::from_channel(1.0, 0.0, 0.0, 3.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(d.inv_spectral_efficiency, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn table_rows() {
        let p = ServicePolicy::from_rows(vec![vec![
            Route::LocalOutputCache,
            Route::LocalInputCacheCompute,
            Route::LocalCompute,
            Route::MecCompute,
        ]])
        .unwrap();
        let d = policy_to_decision(&p);
        assert_eq!(d.cache_output[0], vec![true, false, false, false]);
        assert_eq!(d.cache_input[0], vec![false, true, false, false]);
        assert_eq!(d.compute_local[0], vec![false, true, true, false]);
        assert_eq!(decision_to_policy(&d).unwrap(), p);

        let all4 = policy_to_decision(&ServicePolicy::uniform(2, 3, Route::MecCompute));
        assert!(all4.cache_input.iter().chain(&all4.cache_output).chain(&all4.compute_local).flatten().all(|b| !b));
    }

    #[test]
    fn invalid_decision_rejected() {
        let d = CacheComputeDecision {
            cache_input: vec![vec![true]],
            cache_output: vec![vec![true]],
            compute_local: vec![vec![false]],
        };
        assert!(decision_to_policy(&d).is_err());
        // Input cached but not computed is not a route either.
        let d = CacheComputeDecision {
            cache_input: vec![vec![true]],
            cache_output: vec![vec![false]],
            compute_local: vec![vec![false]],
        };
        assert!(decision_to_policy(&d).is_err());
    }

    #[test]
    fn feasibility_examples() {
        let inst = one_by_one(1.7e3, 0.0);
        assert!(check_feasible(&inst, &ServicePolicy::mec(&inst)).is_empty());

        let mut cached = ServicePolicy::mec(&inst);
        cached.set(0, 0, Route::LocalOutputCache);
        let v = check_feasible(&inst, &cached);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ConstraintKind::Cache);
        assert_eq!(v[0].slack, -3.0e7);

        // mu f^2 I w = 1e-27 * 1.21e22 * 1.5e8 = 1815 J > 1700 J.
        let inst = one_by_one(1.7e3, 1.5e7);
        assert_relative_eq!(inst.compute_energy(0, 0), 1.815e3, max_relative = 1e-12);
        let mut p = ServicePolicy::mec(&inst);
        p.set(0, 0, Route::LocalInputCacheCompute);
        let v = check_feasible(&inst, &p);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ConstraintKind::Energy);
        assert_relative_eq!(v[0].slack, -115.0, max_relative = 1e-9);
        let inst = one_by_one(1.9e3, 1.5e7);
        assert!(check_feasible(&inst, &p).is_empty());
    }

    #[test]
    fn zipf_examples() {
        assert_eq!(zipf_popularity(2, 0.0).unwrap(), vec![0.5, 0.5]);
        let z = zipf_popularity(2, 1.0).unwrap();
        assert_relative_eq!(z[0], 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(z[1], 1.0 / 3.0, max_relative = 1e-15);
        assert_eq!(zipf_popularity(1, 3.7).unwrap(), vec![1.0]);
        assert!(zipf_popularity(0, 1.0).is_err());
        assert!(zipf_popularity(3, -0.5).is_err());
    }
}
