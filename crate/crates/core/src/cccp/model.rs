//! Penalized difference-of-convex model over relaxed routing variables.
//!
//! The multicast bandwidth of task `f` in a request state depends only on
//! the set `S` of devices that ask for `f`. Auxiliary variables are
//! therefore kept per demand pattern `(f, S)`, weighted by the probability
//! that exactly `S` requests `f`; this is the per-state formulation with
//! identical states merged. Every product `a b` is written as
//! `(a + b)^2 / 4 - (a - b)^2 / 4`, the binary constraint becomes the
//! penalty `rho * sum x (1 - x)`, and the concave parts are linearized.
//!
//! Internally auxiliaries are scaled to `u = a / max(1/SE)` and
//! `v = b / max(rate)`, and the subproblem objective is divided by the
//! product of the two scales.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::qp::{ConvexQp, QpSolution};
use crate::bandwidth::{requester_set_probability, MAX_REQUESTER_SET_DEVICES};
use crate::error::{Error, Result};
use crate::model::{Instance, Route, ServicePolicy, FEASIBILITY_TOL};

/// Task `f` requested by exactly `devices`, with probability `weight`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandPattern {
    pub task: usize,
    pub devices: Vec<usize>,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Scenarios {
    /// All request states, merged into exact pattern probabilities.
    /// Fails when `F^K` exceeds `state_cap`.
    Exact { state_cap: f64 },
    /// Empirical pattern frequencies from `samples` seeded request states.
    Sampled { samples: usize, seed: u64 },
}

/// Relaxed point. `x[(k * F + f) * 4 + j]` is the weight of route `j + 1`
/// for device `k` and task `f`; the auxiliaries are indexed by pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousPoint {
    pub x: Vec<f64>,
    pub aux_a_in: Vec<f64>,
    pub aux_b_in: Vec<f64>,
    pub aux_a_out: Vec<f64>,
    pub aux_b_out: Vec<f64>,
}

impl ContinuousPoint {
    /// `sum x (1 - x)` over all routing variables.
    pub fn fractionality(&self) -> f64 {
        self.x.iter().map(|x| x * (1.0 - x)).sum()
    }

    /// Mean of `|x (1 - x)|` over all routing variables.
    pub fn mean_fractionality(&self) -> f64 {
        self.x.iter().map(|x| (x * (1.0 - x)).abs()).sum::<f64>() / self.x.len() as f64
    }
}

#[derive(Debug, Clone, Copy)]
struct AuxVars {
    input: Option<(usize, usize)>,
    output: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct PenalizedModel<'a> {
    instance: &'a Instance,
    rho: f64,
    patterns: Vec<DemandPattern>,
    active: Vec<bool>,
    x_var: Vec<Option<usize>>,
    aux: Vec<AuxVars>,
    scale_a: f64,
    scale_b: f64,
    constraints: ConvexQp,
}

/// Builds the model over every request state.
pub fn build_penalized_model(instance: &Instance, rho: f64, state_cap: f64) -> Result<PenalizedModel<'_>> {
    PenalizedModel::new(instance, rho, [true; 4], Scenarios::Exact { state_cap })
}

fn exact_patterns(instance: &Instance, state_cap: f64) -> Result<Vec<DemandPattern>> {
    let states = instance.state_count();
    if states > state_cap {
        return Err(Error::StateSpaceTooLarge { states, cap: state_cap });
    }
    let k_count = instance.device_count();
    if k_count > MAX_REQUESTER_SET_DEVICES {
        return Err(Error::StateSpaceTooLarge {
            states,
            cap: state_cap,
        });
    }
    let mut out = Vec::new();
    for f in 0..instance.task_count() {
        for mask in 1u64..(1u64 << k_count) {
            let weight = requester_set_probability(instance, f, mask);
            if weight > 0.0 {
                out.push(DemandPattern {
                    task: f,
                    devices: (0..k_count).filter(|k| mask >> k & 1 == 1).collect(),
                    weight,
                });
            }
        }
    }
    Ok(out)
}

fn sampled_patterns(instance: &Instance, samples: usize, seed: u64) -> Result<Vec<DemandPattern>> {
    if samples == 0 {
        return Err(Error::invalid("scenario samples", "must be >= 1"));
    }
    let samplers = instance
        .popularity()
        .iter()
        .map(|row| WeightedIndex::new(row).map_err(|e| Error::invalid("popularity", e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
    let mut by_task: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for _ in 0..samples {
        by_task.clear();
        for (k, sampler) in samplers.iter().enumerate() {
            by_task.entry(sampler.sample(&mut rng)).or_default().push(k);
        }
        for (f, devices) in std::mem::take(&mut by_task) {
            *counts.entry((f, devices)).or_default() += 1;
        }
    }
    Ok(counts
        .into_iter()
        .map(|((task, devices), c)| DemandPattern {
            task,
            devices,
            weight: c as f64 / samples as f64,
        })
        .collect())
}

fn fits(used: f64, cap: f64) -> bool {
    used - cap <= FEASIBILITY_TOL * cap.max(used).max(f64::MIN_POSITIVE)
}

impl<'a> PenalizedModel<'a> {
    /// Builds the model with routing restricted to `allowed_routes`. A route
    /// is kept for `(k, f)` only if it is allowed, available and fits the
    /// device budgets on its own. Route 4 must be allowed.
    pub fn new(instance: &'a Instance, rho: f64, allowed_routes: [bool; 4], scenarios: Scenarios) -> Result<Self> {
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::invalid("penalty", format!("rho must be finite and >= 0, got {rho}")));
        }
        if !allowed_routes[Route::MecCompute.index()] {
            return Err(Error::invalid("allowed routes", "route 4 must be allowed"));
        }
        let patterns = match scenarios {
            Scenarios::Exact { state_cap } => exact_patterns(instance, state_cap)?,
            Scenarios::Sampled { samples, seed } => sampled_patterns(instance, samples, seed)?,
        };

        let (kc, fc) = (instance.device_count(), instance.task_count());
        let mut active = vec![false; kc * fc * 4];
        for k in 0..kc {
            let d = &instance.devices()[k];
            for f in 0..fc {
                for route in Route::ALL {
                    active[(k * fc + f) * 4 + route.index()] = allowed_routes[route.index()]
                        && instance.route_available(k, f, route)
                        && fits(instance.cache_cost(f, route), d.cache_bits)
                        && fits(instance.energy_cost(k, f, route), d.avg_energy);
                }
            }
        }

        let scale_a = instance
            .devices()
            .iter()
            .map(|d| d.inv_spectral_efficiency)
            .fold(0.0, f64::max);
        let mut scale_b = 0.0f64;
        for k in 0..kc {
            for f in 0..fc {
                for route in [Route::LocalCompute, Route::MecCompute] {
                    if active[(k * fc + f) * 4 + route.index()] {
                        scale_b = scale_b.max(instance.rate(k, f, route));
                    }
                }
            }
        }

        let mut n = 0;
        let mut x_var = vec![None; active.len()];
        for (slot, &a) in x_var.iter_mut().zip(&active) {
            if a {
                *slot = Some(n);
                n += 1;
            }
        }
        let mut aux = Vec::with_capacity(patterns.len());
        for p in &patterns {
            let has_input = p
                .devices
                .iter()
                .any(|&k| active[(k * fc + p.task) * 4 + Route::LocalCompute.index()]);
            let input = has_input.then(|| {
                n += 2;
                (n - 2, n - 1)
            });
            n += 2;
            aux.push(AuxVars {
                input,
                output: (n - 2, n - 1),
            });
        }

        let mut qp = ConvexQp::new(n);
        for k in 0..kc {
            let d = &instance.devices()[k];
            let mut cache = Vec::new();
            let mut energy = Vec::new();
            for f in 0..fc {
                let mut simplex = Vec::new();
                for route in Route::ALL {
                    let Some(v) = x_var[(k * fc + f) * 4 + route.index()] else {
                        continue;
                    };
                    simplex.push((v, 1.0));
                    qp.add_bounds(v, 0.0, f64::INFINITY);
                    let c = instance.cache_cost(f, route);
                    if c > 0.0 {
                        cache.push((v, c));
                    }
                    let e = instance.energy_cost(k, f, route);
                    if e > 0.0 {
                        energy.push((v, e));
                    }
                }
                qp.add_equality(simplex, 1.0);
            }
            if !cache.is_empty() {
                qp.add_inequality(cache, d.cache_bits);
            }
            if !energy.is_empty() {
                qp.add_inequality(energy, d.avg_energy);
            }
        }
        for (p, a) in patterns.iter().zip(&aux) {
            let h = DMatrix::from_element(2, 2, 0.5 * p.weight);
            let sides = [(Route::LocalCompute, a.input), (Route::MecCompute, Some(a.output))];
            for (route, pair) in sides {
                let Some((u, v)) = pair else { continue };
                qp.add_hessian_block(&[u, v], h.clone())?;
                for &k in &p.devices {
                    if let Some(x) = x_var[(k * fc + p.task) * 4 + route.index()] {
                        let inv_se = instance.devices()[k].inv_spectral_efficiency;
                        qp.add_inequality(vec![(x, inv_se / scale_a), (u, -1.0)], 0.0);
                        qp.add_inequality(vec![(x, instance.rate(k, p.task, route) / scale_b), (v, -1.0)], 0.0);
                    }
                }
            }
        }

        Ok(PenalizedModel {
            instance,
            rho,
            patterns,
            active,
            x_var,
            aux,
            scale_a,
            scale_b,
            constraints: qp,
        })
    }

    /// The same model with another penalty weight.
    pub fn with_rho(&self, rho: f64) -> Self {
        PenalizedModel { rho, ..self.clone() }
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn patterns(&self) -> &[DemandPattern] {
        &self.patterns
    }

    /// Number of routing variables, `4 K F`.
    pub fn x_len(&self) -> usize {
        self.active.len()
    }

    /// Number of auxiliary variables, four per pattern.
    pub fn aux_len(&self) -> usize {
        4 * self.patterns.len()
    }

    /// Bandwidth unit of the scaled subproblems, in Hz.
    pub fn objective_scale(&self) -> f64 {
        self.scale_a * self.scale_b
    }

    pub fn is_active(&self, k: usize, f: usize, route: Route) -> bool {
        self.active[self.index(k, f, route)]
    }

    fn index(&self, k: usize, f: usize, route: Route) -> usize {
        (k * self.instance.task_count() + f) * 4 + route.index()
    }

    /// Point with the given routing weights and every auxiliary at its
    /// tightest value, the maximum over the pattern's devices.
    pub fn point_from_x(&self, x: Vec<f64>) -> ContinuousPoint {
        assert_eq!(x.len(), self.x_len());
        let n = self.patterns.len();
        let mut point = ContinuousPoint {
            x,
            aux_a_in: vec![0.0; n],
            aux_b_in: vec![0.0; n],
            aux_a_out: vec![0.0; n],
            aux_b_out: vec![0.0; n],
        };
        for (i, p) in self.patterns.iter().enumerate() {
            for &k in &p.devices {
                let inv_se = self.instance.devices()[k].inv_spectral_efficiency;
                for (route, a, b) in [
                    (Route::LocalCompute, &mut point.aux_a_in, &mut point.aux_b_in),
                    (Route::MecCompute, &mut point.aux_a_out, &mut point.aux_b_out),
                ] {
                    let idx = (k * self.instance.task_count() + p.task) * 4 + route.index();
                    if !self.active[idx] {
                        continue;
                    }
                    let xv = point.x[idx];
                    a[i] = a[i].max(inv_se * xv);
                    b[i] = b[i].max(self.instance.rate(k, p.task, route) * xv);
                }
            }
        }
        point
    }

    pub fn point_from_policy(&self, policy: &ServicePolicy) -> ContinuousPoint {
        assert!(policy.matches(self.instance), "policy shape does not match instance");
        let mut x = vec![0.0; self.x_len()];
        for k in 0..self.instance.device_count() {
            for f in 0..self.instance.task_count() {
                x[self.index(k, f, policy.route(k, f))] = 1.0;
            }
        }
        self.point_from_x(x)
    }

    /// All requests served by MEC computing.
    pub fn mec_point(&self) -> ContinuousPoint {
        self.point_from_policy(&ServicePolicy::mec(self.instance))
    }

    /// Uniform random weights on each `(k, f)` simplex of active routes,
    /// with route 1-3 mass scaled down per device until the budgets hold.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> ContinuousPoint {
        let mut x = vec![0.0; self.x_len()];
        for cell in 0..x.len() / 4 {
            let mut total = 0.0;
            for j in 0..4 {
                if self.active[cell * 4 + j] {
                    let e: f64 = Exp1.sample(rng);
                    x[cell * 4 + j] = e;
                    total += e;
                }
            }
            for j in 0..4 {
                x[cell * 4 + j] /= total;
            }
        }
        self.make_feasible(&mut x);
        self.point_from_x(x)
    }

    /// Clips, renormalizes each simplex over active routes and moves route
    /// 1-3 mass to route 4 on devices that exceed a budget.
    pub(crate) fn make_feasible(&self, x: &mut [f64]) {
        let fc = self.instance.task_count();
        for cell in 0..x.len() / 4 {
            let mut total = 0.0;
            for j in 0..4 {
                let v = &mut x[cell * 4 + j];
                *v = if self.active[cell * 4 + j] { v.max(0.0) } else { 0.0 };
                total += *v;
            }
            if total > 0.0 {
                for j in 0..4 {
                    x[cell * 4 + j] /= total;
                }
            } else {
                x[cell * 4 + Route::MecCompute.index()] = 1.0;
            }
        }
        for k in 0..self.instance.device_count() {
            let d = &self.instance.devices()[k];
            let (mut cache, mut energy) = (0.0, 0.0);
            for f in 0..fc {
                for route in Route::ALL {
                    let v = x[self.index(k, f, route)];
                    cache += v * self.instance.cache_cost(f, route);
                    energy += v * self.instance.energy_cost(k, f, route);
                }
            }
            let mut s = 1.0f64;
            if cache > d.cache_bits {
                s = s.min(d.cache_bits / cache);
            }
            if energy > d.avg_energy {
                s = s.min(d.avg_energy / energy);
            }
            if s < 1.0 {
                for f in 0..fc {
                    let base = self.index(k, f, Route::LocalOutputCache);
                    let moved: f64 = x[base..base + 3].iter().map(|v| v * (1.0 - s)).sum();
                    for v in &mut x[base..base + 3] {
                        *v *= s;
                    }
                    x[base + 3] += moved;
                }
            }
        }
    }

    /// True when the point meets the simplex, budget, box and epigraph
    /// constraints within `tol` (relative for the budgets).
    pub fn is_feasible(&self, point: &ContinuousPoint, tol: f64) -> bool {
        let fc = self.instance.task_count();
        if point.x.iter().any(|&v| !(-tol..=1.0 + tol).contains(&v)) {
            return false;
        }
        for (i, &a) in self.active.iter().enumerate() {
            if !a && point.x[i].abs() > tol {
                return false;
            }
        }
        for cell in point.x.chunks(4) {
            if (cell.iter().sum::<f64>() - 1.0).abs() > tol {
                return false;
            }
        }
        for k in 0..self.instance.device_count() {
            let d = &self.instance.devices()[k];
            let (mut cache, mut energy) = (0.0, 0.0);
            for f in 0..fc {
                for route in Route::ALL {
                    let v = point.x[self.index(k, f, route)];
                    cache += v * self.instance.cache_cost(f, route);
                    energy += v * self.instance.energy_cost(k, f, route);
                }
            }
            if cache - d.cache_bits > tol * d.cache_bits.max(1.0) || energy - d.avg_energy > tol * d.avg_energy.max(1.0) {
                return false;
            }
        }
        let tight = self.point_from_x(point.x.clone());
        let below = |have: &[f64], need: &[f64]| have.iter().zip(need).any(|(h, n)| *h < n * (1.0 - tol) - tol);
        !(below(&point.aux_a_in, &tight.aux_a_in)
            || below(&point.aux_b_in, &tight.aux_b_in)
            || below(&point.aux_a_out, &tight.aux_a_out)
            || below(&point.aux_b_out, &tight.aux_b_out))
    }

    /// Expected bandwidth term `sum_p w_p (a_in b_in + a_out b_out)` in Hz.
    pub fn bandwidth_term(&self, point: &ContinuousPoint) -> f64 {
        self.patterns
            .iter()
            .enumerate()
            .map(|(i, p)| p.weight * (point.aux_a_in[i] * point.aux_b_in[i] + point.aux_a_out[i] * point.aux_b_out[i]))
            .sum()
    }

    /// Penalized objective in Hz: the bandwidth term written in the
    /// difference-of-squares form plus `rho * sum x (1 - x)`.
    /// The squares are formed in the scaled units.
    pub fn objective(&self, point: &ContinuousPoint) -> f64 {
        let dc = |a: f64, b: f64| {
            let (u, v) = (a / self.scale_a, b / self.scale_b);
            ((u + v) * (u + v) - (u - v) * (u - v)) / 4.0
        };
        let bandwidth: f64 = self
            .patterns
            .iter()
            .enumerate()
            .map(|(i, p)| {
                p.weight * (dc(point.aux_a_in[i], point.aux_b_in[i]) + dc(point.aux_a_out[i], point.aux_b_out[i]))
            })
            .sum();
        bandwidth * self.objective_scale() + self.rho * point.fractionality()
    }

    fn to_scaled(&self, point: &ContinuousPoint) -> Vec<f64> {
        let mut z = vec![0.0; self.constraints.dim()];
        for (i, v) in self.x_var.iter().enumerate() {
            if let Some(v) = v {
                z[*v] = point.x[i];
            }
        }
        for (i, a) in self.aux.iter().enumerate() {
            if let Some((u, v)) = a.input {
                z[u] = point.aux_a_in[i] / self.scale_a;
                z[v] = point.aux_b_in[i] / self.scale_b;
            }
            z[a.output.0] = point.aux_a_out[i] / self.scale_a;
            z[a.output.1] = point.aux_b_out[i] / self.scale_b;
        }
        z
    }

    fn unscale(&self, z: &[f64]) -> ContinuousPoint {
        let mut x = vec![0.0; self.x_len()];
        for (i, v) in self.x_var.iter().enumerate() {
            if let Some(v) = v {
                x[i] = z[*v];
            }
        }
        let n = self.patterns.len();
        let mut point = ContinuousPoint {
            x,
            aux_a_in: vec![0.0; n],
            aux_b_in: vec![0.0; n],
            aux_a_out: vec![0.0; n],
            aux_b_out: vec![0.0; n],
        };
        for (i, a) in self.aux.iter().enumerate() {
            if let Some((u, v)) = a.input {
                point.aux_a_in[i] = z[u] * self.scale_a;
                point.aux_b_in[i] = z[v] * self.scale_b;
            }
            point.aux_a_out[i] = z[a.output.0] * self.scale_a;
            point.aux_b_out[i] = z[a.output.1] * self.scale_b;
        }
        point
    }

    /// Convex majorant of the objective that touches it at `point`.
    pub fn linearize_at(&self, point: &ContinuousPoint) -> Surrogate<'_, 'a> {
        let mut qp = self.constraints.clone();
        let z = self.to_scaled(point);
        let mut constant = 0.0;
        for (p, a) in self.patterns.iter().zip(&self.aux) {
            for (u, v) in a.input.into_iter().chain([a.output]) {
                let d = z[u] - z[v];
                qp.add_linear(u, -0.5 * p.weight * d);
                qp.add_linear(v, 0.5 * p.weight * d);
                constant += 0.25 * p.weight * d * d;
            }
        }
        let rho = self.rho / self.objective_scale();
        for (i, v) in self.x_var.iter().enumerate() {
            if let Some(v) = *v {
                let xt = point.x[i];
                qp.add_linear(v, rho * (1.0 - 2.0 * xt));
                constant += rho * xt * xt;
            }
        }
        Surrogate {
            model: self,
            qp,
            constant,
        }
    }

    /// Gradient of the linearized penalty `-rho x_t (x_t - 1) - rho (2 x_t - 1)(x - x_t)`
    /// with respect to each routing variable.
    pub fn penalty_gradient(&self, point: &ContinuousPoint) -> Vec<f64> {
        point.x.iter().map(|&xt| -self.rho * (2.0 * xt - 1.0)).collect()
    }
}

/// Convex subproblem produced by [`PenalizedModel::linearize_at`].
#[derive(Debug, Clone)]
pub struct Surrogate<'m, 'a> {
    model: &'m PenalizedModel<'a>,
    qp: ConvexQp,
    constant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub point: ContinuousPoint,
    /// Surrogate value at the raw solver output, in Hz.
    pub surrogate_value: f64,
    pub converged: bool,
    pub residual: f64,
    pub iterations: usize,
}

impl Surrogate<'_, '_> {
    /// Surrogate value in Hz.
    pub fn value(&self, point: &ContinuousPoint) -> f64 {
        (self.qp.objective(&self.model.to_scaled(point)) + self.constant) * self.model.objective_scale()
    }

    pub fn qp(&self) -> &ConvexQp {
        &self.qp
    }
}

/// Minimizes the surrogate, then snaps the routing weights back onto the
/// feasible set and tightens every auxiliary to its lower bound. Both steps
/// only lower the penalized objective's bandwidth term.
pub fn solve_convex_subproblem(subproblem: &Surrogate, inner_tol: f64, inner_max_iters: usize) -> SubproblemSolution {
    let QpSolution {
        z,
        converged,
        iterations,
        residual,
    } = subproblem.qp.solve(inner_tol, inner_max_iters);
    let model = subproblem.model;
    let raw = model.unscale(&z);
    let surrogate_value = subproblem.value(&raw);
    let mut x = raw.x;
    model.make_feasible(&mut x);
    SubproblemSolution {
        point: model.point_from_x(x),
        surrogate_value,
        converged,
        residual,
        iterations,
    }
}
