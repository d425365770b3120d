//! Exhaustive solvers used as ground truth on small instances.
//!
//! Cache and energy budgets are per device, so infeasible device rows are
//! discarded before joint policies are formed. Ties between equal-bandwidth
//! policies go to the lowest policy encoding: route numbers read as base-4
//! digits, device 0 and task 0 most significant.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::{
    average_bandwidth, average_bandwidth_by_requesters, average_bandwidth_mc, task_expected_bandwidth,
    unicast_bandwidth, MAX_REQUESTER_SET_DEVICES,
};
use crate::error::{Error, Result};
use crate::model::{row_feasible, Instance, Route, ServicePolicy};

/// Default bound on the number of enumerated policies.
pub const DEFAULT_ENUM_CAP: f64 = 1e7;

/// Samples used by the MEC baseline when no exact evaluation fits.
pub const BASELINE_MC_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub policy: ServicePolicy,
    /// Average bandwidth in Hz.
    pub bandwidth: f64,
}

fn decode_row(code: u64, tasks: usize) -> Vec<Route> {
    (0..tasks)
        .map(|f| {
            let digit = (code >> (2 * (tasks - 1 - f))) & 3;
            Route::from_index(digit as usize).unwrap()
        })
        .collect()
}

fn check_row_space(instance: &Instance, cap: f64) -> Result<()> {
    let per_device = 4f64.powi(instance.task_count() as i32);
    if per_device > cap || instance.task_count() > 31 {
        return Err(Error::InstanceTooLarge {
            count: per_device,
            cap,
        });
    }
    Ok(())
}

/// Feasible rows of device `k` restricted to `allowed` routes, ascending by code.
pub(crate) fn feasible_rows(instance: &Instance, k: usize, allowed: [bool; 4]) -> Vec<Vec<Route>> {
    let tasks = instance.task_count();
    (0..1u64 << (2 * tasks))
        .map(|code| decode_row(code, tasks))
        .filter(|row| row.iter().all(|r| allowed[r.index()]))
        .filter(|row| row_feasible(instance, k, row))
        .collect()
}

/// Expected bandwidth per (task, column of routes) where the column code has
/// device 0 as its most significant base-4 digit.
struct ColumnTable {
    devices: usize,
    values: Vec<Vec<f64>>,
}

impl ColumnTable {
    const MAX_WORK: f64 = 1e8;

    fn build(instance: &Instance) -> Option<Self> {
        let k = instance.device_count();
        let work = instance.task_count() as f64 * 8f64.powi(k as i32);
        if k > MAX_REQUESTER_SET_DEVICES || work > Self::MAX_WORK {
            return None;
        }
        let columns = 1usize << (2 * k);
        let values = (0..instance.task_count())
            .map(|f| {
                (0..columns)
                    .map(|code| {
                        let routes = decode_row(code as u64, k);
                        task_expected_bandwidth(instance, f, &routes)
                    })
                    .collect()
            })
            .collect();
        Some(ColumnTable { devices: k, values })
    }

    fn evaluate(&self, rows: &[&[Route]]) -> f64 {
        let tasks = self.values.len();
        (0..tasks)
            .map(|f| {
                let code = rows
                    .iter()
                    .fold(0usize, |acc, row| (acc << 2) | row[f].index());
                debug_assert!(rows.len() == self.devices);
                self.values[f][code]
            })
            .sum()
    }
}

/// Globally optimal multicast policy by exhaustive search.
pub fn solve_exact_multicast(instance: &Instance, enum_cap: f64, state_cap: f64) -> Result<Solution> {
    solve_exact_multicast_with_routes(instance, [true; 4], enum_cap, state_cap)
}

/// Exhaustive search over policies that only use the `allowed` routes.
pub fn solve_exact_multicast_with_routes(
    instance: &Instance,
    allowed: [bool; 4],
    enum_cap: f64,
    state_cap: f64,
) -> Result<Solution> {
    if !allowed[Route::MecCompute.index()] {
        return Err(Error::invalid("routes", "route 4 must be allowed"));
    }
    check_row_space(instance, enum_cap)?;
    let rows: Vec<Vec<Vec<Route>>> = (0..instance.device_count())
        .map(|k| feasible_rows(instance, k, allowed))
        .collect();
    let joint: f64 = rows.iter().map(|r| r.len() as f64).product();
    if joint > enum_cap {
        return Err(Error::InstanceTooLarge { count: joint, cap: enum_cap });
    }

    let table = ColumnTable::build(instance);
    let evaluate = |choice: &[usize]| -> f64 {
        let selected: Vec<&[Route]> = choice.iter().zip(&rows).map(|(&i, r)| r[i].as_slice()).collect();
        match &table {
            Some(t) => t.evaluate(&selected),
            None => {
                let policy = ServicePolicy::from_rows(selected.iter().map(|r| r.to_vec()).collect()).unwrap();
                average_bandwidth_by_requesters(instance, &policy).unwrap_or(f64::INFINITY)
            }
        }
    };

    // Split on device 0's row; each block walks the remaining devices as an
    // odometer with the last device varying fastest.
    let best = (0..rows[0].len())
        .into_par_iter()
        .map(|first| {
            let mut choice = vec![0usize; rows.len()];
            choice[0] = first;
            let mut best: Option<(f64, Vec<usize>)> = None;
            loop {
                let value = evaluate(&choice);
                if best.as_ref().is_none_or(|(b, _)| value < *b) {
                    best = Some((value, choice.clone()));
                }
                let mut k = rows.len() - 1;
                loop {
                    if k == 0 {
                        return best;
                    }
                    choice[k] += 1;
                    if choice[k] < rows[k].len() {
                        break;
                    }
                    choice[k] = 0;
                    k -= 1;
                }
            }
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .expect("the all-route-4 row is always feasible");

    let policy = ServicePolicy::from_rows(
        best.1
            .iter()
            .zip(&rows)
            .map(|(&i, r)| r[i].clone())
            .collect(),
    )?;
    let bandwidth = average_bandwidth(instance, &policy, state_cap)?;
    Ok(Solution { policy, bandwidth })
}

/// Every request served by MEC computing.
pub fn solve_mec_baseline(instance: &Instance, state_cap: f64) -> Result<Solution> {
    let policy = ServicePolicy::mec(instance);
    let bandwidth = match average_bandwidth(instance, &policy, state_cap) {
        Ok(b) => b,
        Err(e) if e.is_capacity() => average_bandwidth_mc(instance, &policy, BASELINE_MC_SAMPLES, 0)?.mean,
        Err(e) => return Err(e),
    };
    Ok(Solution { policy, bandwidth })
}

/// Optimal unicast policy. Unicast bandwidth separates across devices, so
/// each device row is optimized on its own.
pub fn solve_exact_unicast(instance: &Instance, per_device_cap: f64) -> Result<Solution> {
    check_row_space(instance, per_device_cap)?;
    let rows = (0..instance.device_count())
        .map(|k| {
            let inv_se = instance.devices()[k].inv_spectral_efficiency;
            let cost = |row: &[Route]| -> f64 {
                row.iter()
                    .enumerate()
                    .filter(|(_, r)| r.transmits())
                    .map(|(f, &r)| instance.popularity()[k][f] * instance.rate(k, f, r) * inv_se)
                    .sum()
            };
            feasible_rows(instance, k, [true; 4])
                .into_iter()
                .map(|row| (cost(&row), row))
                .reduce(|a, b| if b.0 < a.0 { b } else { a })
                .expect("the all-route-4 row is always feasible")
                .1
        })
        .collect();
    let policy = ServicePolicy::from_rows(rows)?;
    let bandwidth = unicast_bandwidth(instance, &policy);
    Ok(Solution { policy, bandwidth })
}
