//! Concave-convex procedure on the penalized model, with rounding and
//! multi-start.

mod model;
pub mod qp;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use model::{
    build_penalized_model, solve_convex_subproblem, ContinuousPoint, DemandPattern, PenalizedModel, Scenarios,
    SubproblemSolution, Surrogate,
};

use crate::bandwidth::{average_bandwidth, average_bandwidth_mc, DEFAULT_STATE_CAP};
use crate::error::{Error, Result};
use crate::exact::BASELINE_MC_SAMPLES;
use crate::model::{check_feasible, ConstraintKind, Instance, Route, ServicePolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CccpConfig {
    /// Penalty weight on `x (1 - x)`, in Hz.
    pub penalty_rho: f64,
    /// Further penalty weights tried from every start. Lower weights let
    /// the relaxation move, higher ones force binary iterates sooner.
    pub extra_penalty_rhos: Vec<f64>,
    /// Stop when the objective drops by at most `outer_tol` times the
    /// model's bandwidth unit.
    pub outer_tol: f64,
    pub max_outer_iters: usize,
    /// Random starts in addition to the all-MEC start.
    pub restarts: usize,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    /// Kept for threshold rounding; the argmax rule ignores it.
    pub rounding_threshold: f64,
    pub seed: u64,
    /// Routes 1-4 the solver may use. Route 4 is required.
    pub allowed_routes: [bool; 4],
    /// Request states above which the model is built from samples.
    pub state_cap: f64,
    pub scenario_samples: usize,
}

impl Default for CccpConfig {
    fn default() -> Self {
        CccpConfig {
            penalty_rho: 1e4,
            extra_penalty_rhos: vec![1e5, 1e6, 1e7, 1e8],
            outer_tol: 1e-5,
            max_outer_iters: 100,
            restarts: 10,
            inner_tol: 1e-6,
            inner_max_iters: 5000,
            rounding_threshold: 0.5,
            seed: 0,
            allowed_routes: [true; 4],
            state_cap: DEFAULT_STATE_CAP,
            scenario_samples: 10_000,
        }
    }
}

impl CccpConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("outer_tol", self.outer_tol),
            ("inner_tol", self.inner_tol),
            ("state_cap", self.state_cap),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid("cccp config", format!("{name} must be > 0, got {v}")));
            }
        }
        if self.penalties().any(|rho| !(rho.is_finite() && rho > 0.0)) {
            return Err(Error::invalid("cccp config", "penalty weights must be finite and > 0"));
        }
        if !(self.rounding_threshold > 0.0 && self.rounding_threshold < 1.0) {
            return Err(Error::invalid("cccp config", "rounding_threshold must be in (0, 1)"));
        }
        if self.max_outer_iters == 0 || self.inner_max_iters == 0 || self.scenario_samples == 0 {
            return Err(Error::invalid("cccp config", "iteration and sample counts must be >= 1"));
        }
        if !self.allowed_routes[Route::MecCompute.index()] {
            return Err(Error::invalid("cccp config", "route 4 must be allowed"));
        }
        Ok(())
    }

    /// `penalty_rho` followed by `extra_penalty_rhos`.
    pub fn penalties(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.penalty_rho).chain(self.extra_penalty_rhos.iter().copied())
    }

    /// Builds the model this configuration solves with weight `penalty_rho`:
    /// exact when the request state space fits `state_cap`, sampled otherwise.
    pub fn build_model<'a>(&self, instance: &'a Instance) -> Result<PenalizedModel<'a>> {
        let scenarios = if instance.state_count() <= self.state_cap {
            Scenarios::Exact {
                state_cap: self.state_cap,
            }
        } else {
            Scenarios::Sampled {
                samples: self.scenario_samples,
                seed: self.seed,
            }
        };
        PenalizedModel::new(instance, self.penalty_rho, self.allowed_routes, scenarios)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CccpTrace {
    /// Penalized objective in Hz, starting at the initial point.
    pub objectives: Vec<f64>,
    pub point: ContinuousPoint,
    pub converged: bool,
    /// Subproblems whose solver stopped before reaching `inner_tol`.
    pub inner_failures: usize,
}

/// Runs CCCP from `init`. A step is accepted only if it does not raise the
/// penalized objective, so the trace is nonincreasing.
pub fn cccp_run(model: &PenalizedModel, config: &CccpConfig, init: ContinuousPoint) -> CccpTrace {
    let tol = config.outer_tol * model.objective_scale();
    let mut point = init;
    let mut value = model.objective(&point);
    let mut objectives = vec![value];
    let mut converged = false;
    let mut inner_failures = 0;
    for _ in 0..config.max_outer_iters {
        let surrogate = model.linearize_at(&point);
        let step = solve_convex_subproblem(&surrogate, config.inner_tol, config.inner_max_iters);
        if !step.converged {
            inner_failures += 1;
        }
        let next = model.objective(&step.point);
        if next > value {
            converged = next - value <= tol;
            break;
        }
        objectives.push(next);
        point = step.point;
        let drop = value - next;
        value = next;
        if drop <= tol {
            converged = true;
            break;
        }
    }
    CccpTrace {
        objectives,
        point,
        converged,
        inner_failures,
    }
}

/// Argmax rounding per `(k, f)` with ties to the lowest route, then repair:
/// while a device breaks its cache budget, its route 1/2 task with the
/// smallest popularity moves to route 4; likewise for energy with routes
/// 2/3. Popularity ties go to the lowest task index.
pub fn round_and_repair(instance: &Instance, point: &ContinuousPoint) -> ServicePolicy {
    let (kc, fc) = (instance.device_count(), instance.task_count());
    assert_eq!(point.x.len(), 4 * kc * fc, "point shape does not match instance");
    let rows = (0..kc)
        .map(|k| {
            (0..fc)
                .map(|f| {
                    let cell = &point.x[(k * fc + f) * 4..(k * fc + f) * 4 + 4];
                    let mut best = 0;
                    for j in 1..4 {
                        if cell[j] > cell[best] {
                            best = j;
                        }
                    }
                    let route = Route::from_index(best).unwrap();
                    if instance.route_available(k, f, route) {
                        route
                    } else {
                        Route::MecCompute
                    }
                })
                .collect()
        })
        .collect();
    let mut policy = ServicePolicy::from_rows(rows).expect("non-empty");

    loop {
        let Some(v) = check_feasible(instance, &policy)
            .into_iter()
            .find(|v| v.kind != ConstraintKind::RouteUnavailable)
        else {
            break;
        };
        let k = v.device;
        let uses = |r: Route| match v.kind {
            ConstraintKind::Cache => r.uses_cache(),
            _ => r.computes_locally(),
        };
        let victim = (0..fc)
            .filter(|&f| uses(policy.route(k, f)))
            .min_by(|&a, &b| instance.popularity()[k][a].total_cmp(&instance.popularity()[k][b]))
            .expect("a violated budget has a task using it");
        policy.set(k, victim, Route::MecCompute);
    }
    policy
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiStartResult {
    pub policy: ServicePolicy,
    /// Average bandwidth of `policy`, in Hz.
    pub bandwidth: f64,
    /// Whether `bandwidth` is a Monte Carlo estimate.
    pub estimated: bool,
    /// Index of the winning run. Runs are grouped by penalty weight, and
    /// within a group run 0 starts from the all-MEC point.
    pub best_run: usize,
    pub best_penalty: f64,
    pub traces: Vec<CccpTrace>,
    pub run_bandwidths: Vec<f64>,
}

fn evaluate(instance: &Instance, policy: &ServicePolicy, config: &CccpConfig) -> Result<(f64, bool)> {
    match average_bandwidth(instance, policy, config.state_cap) {
        Ok(b) => Ok((b, false)),
        Err(e) if e.is_capacity() => {
            let est = average_bandwidth_mc(instance, policy, BASELINE_MC_SAMPLES, config.seed)?;
            Ok((est.mean, true))
        }
        Err(e) => Err(e),
    }
}

/// Runs CCCP from the all-MEC start and `config.restarts` seeded random
/// starts, once per penalty weight, in parallel. Every final point is
/// rounded and the policy with the lowest true average bandwidth is kept;
/// ties go to the lowest run index.
pub fn multi_start_solve(instance: &Instance, config: &CccpConfig) -> Result<MultiStartResult> {
    config.validate()?;
    let base = config.build_model(instance)?;
    let models: Vec<PenalizedModel> = config.penalties().map(|rho| base.with_rho(rho)).collect();
    let starts = config.restarts + 1;
    let runs = (0..models.len() * starts)
        .into_par_iter()
        .map(|run| {
            let model = &models[run / starts];
            let start = run % starts;
            let init = if start == 0 {
                model.mec_point()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(start as u64);
                model.random_point(&mut rng)
            };
            let trace = cccp_run(model, config, init);
            let policy = round_and_repair(instance, &trace.point);
            let (bandwidth, estimated) = evaluate(instance, &policy, config)?;
            Ok((trace, policy, bandwidth, estimated))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.2 < runs[best].2 {
            best = i;
        }
    }
    let run_bandwidths = runs.iter().map(|r| r.2).collect();
    let mut traces = Vec::with_capacity(runs.len());
    let mut winner = None;
    for (i, (trace, policy, bandwidth, estimated)) in runs.into_iter().enumerate() {
        if i == best {
            winner = Some((policy, bandwidth, estimated));
        }
        traces.push(trace);
    }
    let (policy, bandwidth, estimated) = winner.expect("at least one run");
    Ok(MultiStartResult {
        policy,
        bandwidth,
        estimated,
        best_run: best,
        best_penalty: models[best / starts].rho(),
        traces,
        run_bandwidths,
    })
}
