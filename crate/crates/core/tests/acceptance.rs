//! Acceptance criteria. Runs as a plain binary so every criterion prints one
//! PASS/FAIL line regardless of output capture; exits non-zero on any FAIL.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{fig2_instance, fig2_tasks, random_instance, DEADLINE, MU};
use edgecast_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Unicast and multicast stream counts over every request state with uniform
/// demand and one stream per distinct requested task.
fn enumerate_streams(tasks: usize, devices: usize) -> (f64, f64) {
    let states = tasks.pow(devices as u32);
    let p = 1.0 / states as f64;
    let mut multicast = 0.0;
    for s in 0..states {
        let mut seen = vec![false; tasks];
        let mut rest = s;
        for _ in 0..devices {
            seen[rest % tasks] = true;
            rest /= tasks;
        }
        multicast += p * seen.iter().filter(|&&b| b).count() as f64;
    }
    (devices as f64, multicast)
}

fn mec_only_instance(tasks: usize, devices: usize) -> Instance {
    let task = TaskSpec::new(2e6, 10.0, 4e6).unwrap();
    let device = DeviceSpec::new(1e10, 0.0, 0.0, 0.1).unwrap();
    let p = vec![1.0 / tasks as f64; tasks];
    Instance::new(vec![task; tasks], vec![device; devices], vec![p; devices], DEADLINE, MU).unwrap()
}

fn criterion_1() -> Outcome {
    let mut ok = true;
    let gain = multicast_gain(2, 2).unwrap();
    let (uni, multi) = enumerate_streams(2, 2);
    let enumerated = uni / multi;
    ok &= rel_close(gain, 4.0 / 3.0, 1e-12) && rel_close(gain, enumerated, 1e-12);

    let inst = mec_only_instance(2, 2);
    let mec = ServicePolicy::mec(&inst);
    let lib_ratio = unicast_bandwidth(&inst, &mec) / average_bandwidth_exact(&inst, &mec, DEFAULT_STATE_CAP).unwrap();
    ok &= rel_close(lib_ratio, gain, 1e-12);

    for (f, k) in [(3, 2), (2, 3), (4, 3), (5, 4)] {
        let (u, m) = enumerate_streams(f, k);
        ok &= rel_close(multicast_gain(f, k).unwrap(), u / m, 1e-12);
    }

    let big = multicast_gain(50, 10).unwrap();
    ok &= (big - 1.0933).abs() < 5e-5;
    let inst = mec_only_instance(50, 10);
    let mec = ServicePolicy::mec(&inst);
    let est = average_bandwidth_mc(&inst, &mec, 100_000, 7).unwrap();
    let uni = unicast_bandwidth(&inst, &mec);
    let mc_ratio = uni / est.mean;
    let se = mc_ratio * est.std_error / est.mean;
    let z = (mc_ratio - big) / se;
    ok &= z.abs() <= 3.0;
    Outcome {
        pass: ok,
        detail: format!(
            "gain(2,2) = {gain:.15}, enumerated {enumerated:.15}; gain(50,10) = {big:.6}, MC ratio {mc_ratio:.6} (z = {z:.2})"
        ),
    }
}

fn random_symmetric(rng: &mut ChaCha8Rng) -> SymmetricInstance {
    let task_count = rng.random_range(5..=30);
    let input = rng.random_range(1e6..15e6);
    let load = 10.0;
    let alpha = rng.random_range(0.3..3.0);
    let cpu = input * load / DEADLINE * rng.random_range(1.05f64.ln()..10f64.ln()).exp();
    let energy_tasks = rng.random_range(0.0..task_count as f64);
    SymmetricInstance {
        input_bits: input,
        load,
        output_bits: alpha * input,
        cache_bits: rng.random_range(0.0..1.0) * alpha * input * task_count as f64,
        cpu_rate: cpu,
        avg_energy: energy_tasks * MU * input * load * cpu * cpu / task_count as f64,
        deadline: DEADLINE,
        energy_coeff: MU,
        inv_spectral_efficiency: rng.random_range(0.05..0.5),
        task_count,
        device_count: rng.random_range(2..=8),
    }
}

const REGIMES: [GainRegime; 4] = [
    GainRegime::AlphaLeOne,
    GainRegime::HighCpu,
    GainRegime::MidCpu,
    GainRegime::LowCpu,
];

fn valid_grid(sym: &SymmetricInstance, parameter: &GainParameter, values: impl Iterator<Item = f64>) -> Vec<f64> {
    values
        .filter(|&v| {
            let mut p = *sym;
            match parameter {
                GainParameter::CacheBits => p.cache_bits = v,
                GainParameter::CpuRate => p.cpu_rate = v,
            }
            p.validate().is_ok() && optimal_counts(&p).unwrap().n4 >= 0.5
        })
        .collect()
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut per_regime: Vec<Vec<SymmetricInstance>> = vec![Vec::new(); 4];
    let mut tries = 0;
    while per_regime.iter().any(|v| v.len() < 13) && tries < 200_000 {
        tries += 1;
        let sym = random_symmetric(&mut rng);
        if sym.validate().is_err() || optimal_counts(&sym).unwrap().n4 < 0.5 {
            continue;
        }
        let slot = REGIMES.iter().position(|&r| r == sym.regime()).unwrap();
        if per_regime[slot].len() < 13 {
            per_regime[slot].push(sym);
        }
    }
    let mut ok = per_regime.iter().all(|v| v.len() >= 13);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for sym in per_regime.iter().flatten() {
        let inst = sym.to_instance().unwrap();
        let baseline = solve_mec_baseline(&inst, DEFAULT_STATE_CAP).unwrap().bandwidth;
        let (gain, regime) = mec_gain(sym).unwrap();
        let ratio = baseline / symmetric_bandwidth(sym).unwrap();
        let err = (ratio - gain).abs() / gain;
        worst = worst.max(err);
        ok &= err <= 1e-12 && regime == sym.regime();
        checked += 1;
    }

    // Gain against cache size: increasing within every regime.
    let mut verdicts = Vec::new();
    for (slot, regime) in REGIMES.iter().enumerate() {
        let sym = per_regime[slot][0];
        let top = sym.output_bits * sym.task_count as f64;
        let grid = valid_grid(&sym, &GainParameter::CacheBits, (1..=40).map(|i| top * i as f64 / 40.0));
        let table = mec_gain_monotonicity_table(&sym, GainParameter::CacheBits, &grid).unwrap();
        let good = table
            .trends
            .iter()
            .all(|t| t.trend == Trend::Increasing || (t.trend == Trend::Constant && t.from == t.to));
        ok &= good && grid.len() >= 5;
        verdicts.push(format!("C/{regime:?}:{}", if good { "increasing" } else { "WRONG" }));
    }

    // Gain against CPU rate: decreasing in HighCpu, flat for alpha <= 1 and in LowCpu.
    for (regime, expected, grid_of) in [
        (GainRegime::HighCpu, Trend::Decreasing, Box::new(|s: &SymmetricInstance| {
            (0..30).map(|i| s.cpu_rate * (1.0 + 0.05 * i as f64)).collect::<Vec<_>>()
        }) as Box<dyn Fn(&SymmetricInstance) -> Vec<f64>>),
        (GainRegime::AlphaLeOne, Trend::Constant, Box::new(|s: &SymmetricInstance| {
            (0..30).map(|i| s.cpu_rate * (1.0 + 0.05 * i as f64)).collect()
        })),
        (GainRegime::LowCpu, Trend::Constant, Box::new(|s: &SymmetricInstance| {
            let lo = s.input_bits * s.load / s.deadline;
            let hi = s.thresholds().local_compute;
            (0..30).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / 30.0).collect()
        })),
    ] {
        let slot = REGIMES.iter().position(|&r| r == regime).unwrap();
        let mut longest = 0;
        let mut good = true;
        for sym in &per_regime[slot] {
            let grid = valid_grid(sym, &GainParameter::CpuRate, grid_of(sym).into_iter());
            if grid.len() < 2 {
                continue;
            }
            let table = mec_gain_monotonicity_table(sym, GainParameter::CpuRate, &grid).unwrap();
            for t in table.trends.iter().filter(|t| t.regime == regime) {
                let points = table.rows.iter().filter(|r| r.value >= t.from && r.value <= t.to).count();
                longest = longest.max(points);
                good &= t.trend == expected || points == 1;
            }
        }
        ok &= good && longest >= 5;
        verdicts.push(format!("f1/{regime:?}:{}", if good { format!("{expected:?}") } else { "WRONG".into() }));
    }
    Outcome {
        pass: ok,
        detail: format!(
            "{checked} instances, max |baseline/B* - gain|/gain = {worst:.2e}; {}",
            verdicts.join(" ")
        ),
    }
}

fn criterion_3() -> Outcome {
    let input = 1e6;
    let load = 10.0;
    let mut ok = true;
    let (mut integral, mut fractional) = (0, 0);
    let mut worst: f64 = 0.0;
    for task_count in [2usize, 3, 4] {
        for alpha in [0.5, 1.0, 2.0, 3.0] {
            for cpu in [6e8, 1e10] {
                for energy_tasks in [0.0, 1.0, 1.5, 2.0] {
                    for cache_inputs in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0] {
                        let sym = SymmetricInstance {
                            input_bits: input,
                            load,
                            output_bits: alpha * input,
                            cache_bits: cache_inputs * input,
                            cpu_rate: cpu,
                            avg_energy: energy_tasks * MU * input * load * cpu * cpu / task_count as f64,
                            deadline: DEADLINE,
                            energy_coeff: MU,
                            inv_spectral_efficiency: 0.1,
                            task_count,
                            device_count: 2,
                        };
                        if sym.validate().is_err() {
                            continue;
                        }
                        let inst = sym.to_instance().unwrap();
                        let exact = solve_exact_multicast(&inst, DEFAULT_ENUM_CAP, DEFAULT_STATE_CAP)
                            .unwrap()
                            .bandwidth;
                        let scale = sym.inv_spectral_efficiency * sym.r4().max(sym.r3());
                        let value = if optimal_counts(&sym).unwrap().is_integral() {
                            integral += 1;
                            symmetric_bandwidth(&sym).unwrap()
                        } else {
                            fractional += 1;
                            integer_policy(&sym).unwrap().1
                        };
                        let err = (value - exact).abs() / exact.max(scale * 1e-6);
                        worst = worst.max(err);
                        if err > 1e-9 {
                            ok = false;
                            eprintln!(
                                "  criterion 3 mismatch: F={task_count} alpha={alpha} f1={cpu:e} E'={energy_tasks} C={cache_inputs}I: {value} vs exact {exact}"
                            );
                        }
                    }
                }
            }
        }
    }
    ok &= integral >= 20 && fractional >= 20;
    Outcome {
        pass: ok,
        detail: format!(
            "{integral} integral-count and {fractional} fractional-count instances, max relative error {worst:.2e}"
        ),
    }
}

fn criterion_4() -> Outcome {
    let config = CccpConfig {
        restarts: 20,
        ..CccpConfig::default()
    };
    let mut ok = true;
    let mut within = 0;
    let mut worst_ratio: f64 = 1.0;
    let mut worst_rise: f64 = 0.0;
    let n = 30;
    for seed in 0..n {
        let inst = random_instance(seed, 3, 2);
        let exact = solve_exact_multicast(&inst, DEFAULT_ENUM_CAP, DEFAULT_STATE_CAP).unwrap().bandwidth;
        let result = multi_start_solve(&inst, &config).unwrap();
        let scale = config.build_model(&inst).unwrap().objective_scale();
        ok &= result.bandwidth >= exact - 1e-9 * exact.max(1.0);
        let ratio = if exact > 0.0 {
            result.bandwidth / exact
        } else if result.bandwidth == 0.0 {
            1.0
        } else {
            f64::INFINITY
        };
        worst_ratio = worst_ratio.max(ratio);
        if ratio <= 1.05 {
            within += 1;
        }
        for trace in &result.traces {
            for w in trace.objectives.windows(2) {
                worst_rise = worst_rise.max((w[1] - w[0]) / scale);
            }
        }
    }
    ok &= worst_rise <= 10.0 * config.inner_tol;
    ok &= within * 100 >= 80 * n as usize;
    Outcome {
        pass: ok,
        detail: format!(
            "{within}/{n} within 5% of exact, worst ratio {worst_ratio:.4}, largest trace rise {worst_rise:.1e} (scaled units)"
        ),
    }
}

fn criterion_5() -> Outcome {
    let config = CccpConfig::default();
    let caching_only = CccpConfig {
        allowed_routes: [true, false, false, true],
        ..CccpConfig::default()
    };
    let total_output: f64 = fig2_tasks(10).iter().map(|t| t.output_bits).sum();
    let mut rows = Vec::new();
    for step in 0..=10 {
        let cache = total_output * step as f64 / 10.0;
        let inst = fig2_instance(cache);
        let full = multi_start_solve(&inst, &config).unwrap().bandwidth;
        let cache_only = multi_start_solve(&inst, &caching_only).unwrap().bandwidth;
        let mec = solve_mec_baseline(&inst, DEFAULT_STATE_CAP).unwrap().bandwidth;
        rows.push((cache, full, cache_only, mec));
    }
    let slack = |x: f64| x * (1.0 + 1e-9) + 1e-9;
    let mut ok = rows.windows(2).all(|w| w[1].1 <= w[0].1 * 1.02 + 1e-9);
    ok &= rows[0].1 < rows[0].3;
    ok &= rows.iter().all(|&(_, full, co, mec)| full <= slack(co) && co <= slack(mec));
    let column: Vec<String> = rows
        .iter()
        .map(|&(_, full, co, mec)| format!("{:.2}/{:.2}/{:.2}", full / 1e6, co / 1e6, mec / 1e6))
        .collect();
    Outcome {
        pass: ok,
        detail: format!("full/caching-only/MEC MHz over C = 0..sum(O): {}", column.join(" ")),
    }
}

fn random_feasible_policy(inst: &Instance, rng: &mut ChaCha8Rng) -> ServicePolicy {
    let mut policy = ServicePolicy::mec(inst);
    for k in 0..inst.device_count() {
        for f in 0..inst.task_count() {
            let route = Route::from_index(rng.random_range(0..4)).unwrap();
            if inst.route_available(k, f, route) {
                policy.set(k, f, route);
            }
        }
    }
    loop {
        let violations = check_feasible(inst, &policy);
        let Some(v) = violations.first() else { break };
        let k = v.device;
        let local: Vec<usize> = (0..inst.task_count()).filter(|&f| policy.route(k, f) != Route::MecCompute).collect();
        policy.set(k, local[rng.random_range(0..local.len())], Route::MecCompute);
    }
    policy
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_dc: f64 = 0.0;
    for _ in 0..100_000 {
        let a: f64 = rng.random_range(0.0..2.0);
        let b: f64 = rng.random_range(0.0..2.0);
        let dc = ((a + b).powi(2) - (a - b).powi(2)) / 4.0;
        worst_dc = worst_dc.max((dc - a * b).abs() / ((a + b).powi(2) / 4.0).max(f64::MIN_POSITIVE));
    }
    let mut ok = worst_dc <= 4.0 * f64::EPSILON;

    let mut worst_obj: f64 = 0.0;
    let mut multicast_over = 0;
    for seed in 0..100 {
        let inst = random_instance(1000 + seed, 4, 3);
        let policy = random_feasible_policy(&inst, &mut rng);
        let exact = average_bandwidth_exact(&inst, &policy, DEFAULT_STATE_CAP).unwrap();
        for rho in [0.0, 1e4, 1e8] {
            let model = build_penalized_model(&inst, rho, DEFAULT_STATE_CAP).unwrap();
            let value = model.objective(&model.point_from_policy(&policy));
            worst_obj = worst_obj.max((value - exact).abs() / exact.max(model.objective_scale()));
        }
        if exact > unicast_bandwidth(&inst, &policy) * (1.0 + 1e-12) {
            multicast_over += 1;
        }
    }
    ok &= worst_obj <= 1e-9 && multicast_over == 0;
    Outcome {
        pass: ok,
        detail: format!(
            "DC identity max error {worst_dc:.1e} (relative to ((a+b)/2)^2); penalized objective vs bandwidth at binary points max {worst_obj:.1e}; multicast > unicast on {multicast_over}/100"
        ),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 6] = [
        ("multicast gain formula", criterion_1),
        ("MEC gain against baseline", criterion_2),
        ("symmetric optimum against exact search", criterion_3),
        ("CCCP near exact optimum", criterion_4),
        ("bandwidth against cache size", criterion_5),
        ("structural identities", criterion_6),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {} {verdict}: {name} ({:.1}s): {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
        failed += usize::from(!outcome.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
