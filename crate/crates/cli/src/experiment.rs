//! Single solves, sweeps, closed-form gain tables and the exact oracle.

use std::time::Instant;

use edgecast_core::{
    average_bandwidth, average_bandwidth_mc, check_feasible, device_usage, integer_policy, mec_gain, multi_start_solve,
    multicast_gain, optimal_counts, policy_to_decision, solve_exact_multicast, solve_exact_unicast, symmetric_bandwidth,
    symmetric_mec_bandwidth, symmetric_policy, CccpConfig, Error, Instance, ServicePolicy, SymmetricInstance,
    DEFAULT_ENUM_CAP,
};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Method};
use crate::error::CliError;
use crate::table::{comment_block, num, Table};

/// Average bandwidth of a policy, exact when the instance allows it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub bandwidth: f64,
    /// Zero for exact values.
    pub std_error: f64,
    pub estimated: bool,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub method: Method,
    pub instance: Instance,
    pub policy: ServicePolicy,
    pub evaluation: Evaluation,
    /// Random starts per penalty weight, for the multi-start methods.
    pub restarts: Option<usize>,
    pub note: Option<String>,
}

pub fn evaluate(
    instance: &Instance,
    policy: &ServicePolicy,
    config: &ExperimentConfig,
) -> Result<Evaluation, CliError> {
    match average_bandwidth(instance, policy, config.cccp.state_cap) {
        Ok(bandwidth) => Ok(Evaluation {
            bandwidth,
            std_error: 0.0,
            estimated: false,
        }),
        Err(e) if e.is_capacity() => {
            let est = average_bandwidth_mc(instance, policy, config.samples, config.seed)?;
            Ok(Evaluation {
                bandwidth: est.mean,
                std_error: est.std_error,
                estimated: true,
            })
        }
        Err(e) => Err(e.into()),
    }
}

fn caching_only(cccp: &CccpConfig) -> CccpConfig {
    CccpConfig {
        allowed_routes: [true, false, false, true],
        ..cccp.clone()
    }
}

/// Solves one instance with one method.
pub fn solve_instance(instance: Instance, method: Method, config: &ExperimentConfig) -> Result<SolveReport, CliError> {
    let mut restarts = None;
    let mut note = None;
    let policy = match method {
        Method::Exact => solve_exact_multicast(&instance, DEFAULT_ENUM_CAP, config.cccp.state_cap)?.policy,
        Method::Cccp => {
            restarts = Some(config.cccp.restarts);
            multi_start_solve(&instance, &config.cccp)?.policy
        }
        Method::CachingOnly => {
            restarts = Some(config.cccp.restarts);
            multi_start_solve(&instance, &caching_only(&config.cccp))?.policy
        }
        Method::Mec => ServicePolicy::mec(&instance),
        Method::Symmetric => {
            let sym = SymmetricInstance::from_instance(&instance).map_err(|e| match e {
                Error::Invalid { reason, .. } => CliError::Validation(vec![format!(
                    "the symmetric method needs identical tasks, identical devices and uniform popularity: {reason}"
                )]),
                other => other.into(),
            })?;
            match symmetric_policy(&sym) {
                Ok(p) => p,
                Err(Error::NonIntegerCounts { .. }) => {
                    note = Some("optimal counts are fractional; best integer counts used".to_string());
                    integer_policy(&sym)?.0
                }
                Err(e) => return Err(e.into()),
            }
        }
    };
    let evaluation = evaluate(&instance, &policy, config)?;
    Ok(SolveReport {
        method,
        instance,
        policy,
        evaluation,
        restarts,
        note,
    })
}

pub fn solve_once(config: &ExperimentConfig) -> Result<SolveReport, CliError> {
    if config.sweep.is_some() {
        return Err(CliError::Validation(vec!["solve takes a config without [sweep]; use sweep".into()]));
    }
    let instance = config.instance.build(config.seed)?;
    solve_instance(instance, config.method, config)
}

fn summary_table(rows: &[(&str, Evaluation)]) -> Table {
    let mut t = Table::new(vec!["method", "bandwidth_hz", "std_error_hz", "estimated"]);
    for (name, e) in rows {
        t.push(vec![
            name.to_string(),
            num(e.bandwidth),
            num(e.std_error),
            e.estimated.to_string(),
        ]);
    }
    t
}

fn policy_table(instance: &Instance, policy: &ServicePolicy) -> Table {
    let decision = policy_to_decision(policy);
    let mut t = Table::new(vec![
        "device",
        "task",
        "route",
        "cache_output",
        "cache_input",
        "compute_local",
    ]);
    for k in 0..instance.device_count() {
        for f in 0..instance.task_count() {
            let bit = |b: bool| u8::from(b).to_string();
            t.push(vec![
                k.to_string(),
                f.to_string(),
                policy.route(k, f).number().to_string(),
                bit(decision.cache_output[k][f]),
                bit(decision.cache_input[k][f]),
                bit(decision.compute_local[k][f]),
            ]);
        }
    }
    t
}

fn slack_table(instance: &Instance, policy: &ServicePolicy) -> Table {
    let mut t = Table::new(vec![
        "device",
        "cache_used_bits",
        "cache_slack_bits",
        "energy_used",
        "energy_slack",
    ]);
    for k in 0..instance.device_count() {
        let u = device_usage(instance, policy, k);
        t.push(vec![
            k.to_string(),
            num(u.cache_used),
            num(u.cache_slack),
            num(u.energy_used),
            num(u.energy_slack),
        ]);
    }
    t
}

/// Summary, policy and constraint-slack tables separated by blank lines.
pub fn render_solve(report: &SolveReport, config: &ExperimentConfig) -> String {
    debug_assert!(check_feasible(&report.instance, &report.policy).is_empty());
    let mut out = comment_block("solve", config);
    if let Some(note) = &report.note {
        out.push_str(&format!("# note: {note}\n"));
    }
    out.push_str(&summary_table(&[(report.method.name(), report.evaluation)]).to_csv());
    out.push('\n');
    out.push_str(&policy_table(&report.instance, &report.policy).to_csv());
    out.push('\n');
    out.push_str(&slack_table(&report.instance, &report.policy).to_csv());
    out
}

/// Exact multicast optimum, exact unicast optimum and MEC baseline.
pub fn run_oracle(config: &ExperimentConfig) -> Result<String, CliError> {
    let instance = config.instance.build(config.seed)?;
    let exact = solve_instance(instance.clone(), Method::Exact, config)?;
    let unicast = solve_exact_unicast(&instance, DEFAULT_ENUM_CAP)?;
    let mec = solve_instance(instance.clone(), Method::Mec, config)?;
    let unicast_eval = Evaluation {
        bandwidth: unicast.bandwidth,
        std_error: 0.0,
        estimated: false,
    };
    let mut out = comment_block("oracle", config);
    out.push_str(
        &summary_table(&[
            ("exact", exact.evaluation),
            ("exact-unicast", unicast_eval),
            ("mec", mec.evaluation),
        ])
        .to_csv(),
    );
    out.push('\n');
    out.push_str(&policy_table(&instance, &exact.policy).to_csv());
    out.push('\n');
    out.push_str(&slack_table(&instance, &exact.policy).to_csv());
    Ok(out)
}

fn sweep_points(config: &ExperimentConfig) -> Result<(&'static str, Vec<f64>), CliError> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Validation(vec!["this command needs a [sweep] table".into()]))?;
    Ok((sweep.parameter.name(), sweep.points()))
}

/// One row per grid point and method, in grid order. Rows run in parallel;
/// a failing row is reported in the `status` column and the sweep goes on.
pub fn run_sweep(config: &ExperimentConfig, timings: bool) -> Result<Table, CliError> {
    let (name, points) = sweep_points(config)?;
    let sweep = config.sweep.as_ref().expect("checked");
    let methods = sweep.methods.clone().unwrap_or_else(|| vec![config.method]);
    let jobs: Vec<(f64, Method)> = points.iter().flat_map(|&v| methods.iter().map(move |&m| (v, m))).collect();
    let results: Vec<(Result<SolveReport, CliError>, f64)> = jobs
        .par_iter()
        .map(|&(value, method)| {
            let start = Instant::now();
            let report = config
                .instance
                .with_parameter(sweep.parameter, value)
                .and_then(|i| i.build(config.seed))
                .and_then(|inst| solve_instance(inst, method, config));
            (report, start.elapsed().as_secs_f64())
        })
        .collect();

    let mut columns = vec![
        "parameter",
        "value",
        "method",
        "bandwidth_hz",
        "std_error_hz",
        "estimated",
        "restarts",
        "seed",
        "status",
    ];
    if timings {
        columns.push("wall_s");
    }
    let mut table = Table::new(columns);
    for ((value, method), (result, wall)) in jobs.iter().zip(results) {
        let mut row = vec![name.to_string(), num(*value), method.name().to_string()];
        match result {
            Ok(r) => row.extend([
                num(r.evaluation.bandwidth),
                num(r.evaluation.std_error),
                r.evaluation.estimated.to_string(),
                r.restarts.map(|n| n.to_string()).unwrap_or_default(),
                config.seed.to_string(),
                match r.note {
                    Some(n) => format!("ok: {n}"),
                    None => "ok".to_string(),
                },
            ]),
            Err(e) => row.extend([
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                config.seed.to_string(),
                format!("failed: {}", e.to_string().replace('\n', " ")),
            ]),
        }
        if timings {
            row.push(format!("{wall:.3}"));
        }
        table.push(row);
    }
    Ok(table)
}

pub fn render_sweep(table: &Table, config: &ExperimentConfig) -> String {
    let mut out = comment_block("sweep", config);
    out.push_str(&table.to_csv());
    out
}

const GAIN_COLUMNS: [&str; 15] = [
    "parameter",
    "value",
    "task_count",
    "device_count",
    "alpha",
    "regime",
    "n1",
    "n2",
    "n3",
    "n4",
    "symmetric_bandwidth_hz",
    "mec_bandwidth_hz",
    "mec_gain",
    "multicast_gain",
    "status",
];

fn gain_row(sym: &SymmetricInstance) -> Result<Vec<String>, CliError> {
    let counts = optimal_counts(sym)?;
    let (gain, regime) = mec_gain(sym)?;
    Ok(vec![
        sym.task_count.to_string(),
        sym.device_count.to_string(),
        num(sym.alpha()),
        format!("{regime:?}"),
        num(counts.n1),
        num(counts.n2),
        num(counts.n3),
        num(counts.n4),
        num(symmetric_bandwidth(sym)?),
        num(symmetric_mec_bandwidth(sym)?),
        num(gain),
        num(multicast_gain(sym.task_count, sym.device_count)?),
    ])
}

/// Closed-form quantities of a symmetric instance, one row per grid point
/// (a single row without `[sweep]`).
pub fn run_gain(config: &ExperimentConfig) -> Result<Table, CliError> {
    let points: Vec<(Option<(&'static str, f64)>, crate::config::InstanceConfig)> = match &config.sweep {
        Some(sweep) => sweep
            .points()
            .into_iter()
            .map(|v| Ok((Some((sweep.parameter.name(), v)), config.instance.with_parameter(sweep.parameter, v)?)))
            .collect::<Result<_, CliError>>()?,
        None => vec![(None, config.instance.clone())],
    };
    let mut table = Table::new(GAIN_COLUMNS.to_vec());
    for (label, instance) in points {
        let mut row = match label {
            Some((name, v)) => vec![name.to_string(), num(v)],
            None => vec![String::new(), String::new()],
        };
        let result = instance
            .build(config.seed)
            .and_then(|inst| SymmetricInstance::from_instance(&inst).map_err(CliError::from))
            .and_then(|sym| gain_row(&sym));
        match result {
            Ok(cells) => {
                row.extend(cells);
                row.push("ok".into());
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), 12));
                row.push(format!("failed: {}", e.to_string().replace('\n', " ")));
            }
        }
        table.push(row);
    }
    Ok(table)
}

pub fn render_gain(table: &Table, config: &ExperimentConfig) -> String {
    let mut out = comment_block("gain", config);
    out.push_str(&table.to_csv());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn trivial_cache() -> ExperimentConfig {
        parse_config(
            r#"
method = "exact"
[instance]
task_count = 2
device_count = 2
input_bits = 1e6
alpha = 2.0
load = 10.0
cache_bits = 4e6
cpu_rate = 1e10
avg_energy = 0.0
inv_spectral_efficiency = 0.1
"#,
        )
        .unwrap()
    }

    #[test]
    fn exact_on_trivial_cache_is_all_route_one() {
        let r = solve_once(&trivial_cache()).unwrap();
        assert_eq!(r.evaluation.bandwidth, 0.0);
        assert!(r.policy.rows().flatten().all(|&x| x.number() == 1));
    }

    #[test]
    fn cccp_is_never_below_exact() {
        let mut c = trivial_cache();
        let exact = solve_once(&c).unwrap().evaluation.bandwidth;
        c.method = Method::Cccp;
        assert!(solve_once(&c).unwrap().evaluation.bandwidth >= exact - 1e-9);
    }

    #[test]
    fn symmetric_rejects_asymmetric_instances() {
        let mut c = trivial_cache();
        c.method = Method::Symmetric;
        c.instance.popularity = crate::config::Popularity::Zipf(1.0);
        let err = solve_once(&c).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("uniform popularity"), "{err}");
    }

    #[test]
    fn symmetric_matches_exact_on_symmetric_instance() {
        let mut c = trivial_cache();
        c.instance.cache_bits = Some(2e6);
        let exact = solve_once(&c).unwrap().evaluation.bandwidth;
        c.method = Method::Symmetric;
        let sym = solve_once(&c).unwrap().evaluation.bandwidth;
        assert!((sym - exact).abs() <= 1e-9 * exact);
    }
}
