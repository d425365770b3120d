//! Closed forms for the symmetric scenario: identical tasks, identical
//! devices and uniform popularity.
//!
//! Write `E = F Ebar / (mu I w f1^2)` for the number of tasks whose local
//! computation the energy budget can pay for, `R3 = I / (tau - I w / f1)`
//! and `R4 = O / tau`. Every device serves `n1` tasks from its output cache,
//! `n2` from its input cache with local computing, `n3` by local computing
//! and the rest by MEC computing. A task served over the air is multicast
//! whenever at least one of the `K` devices asks for it, which happens with
//! probability `1 - (1 - 1/F)^K`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{row_feasible, DeviceSpec, Instance, Route, ServicePolicy, TaskSpec};

/// Relative tolerance for treating a real count as an integer.
pub const INTEGER_TOL: f64 = 1e-9;

/// Relative distance to a regime threshold inside which both adjacent gain
/// formulas are evaluated and required to agree.
pub const BOUNDARY_TOL: f64 = 1e-12;

const BOUNDARY_AGREEMENT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricInstance {
    pub input_bits: f64,
    pub load: f64,
    pub output_bits: f64,
    pub cache_bits: f64,
    pub cpu_rate: f64,
    pub avg_energy: f64,
    pub deadline: f64,
    pub energy_coeff: f64,
    pub inv_spectral_efficiency: f64,
    pub task_count: usize,
    pub device_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalCounts {
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub n4: f64,
}

impl OptimalCounts {
    pub fn is_integral(&self) -> bool {
        [self.n1, self.n2, self.n3]
            .iter()
            .all(|n| (n - n.round()).abs() <= INTEGER_TOL * n.abs().max(1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GainRegime {
    /// Output no larger than input: only output caching helps.
    AlphaLeOne,
    /// `f1 >= sqrt(F Ebar / (mu w C))`: energy, not cache, limits input caching.
    HighCpu,
    /// Between the two thresholds: cache fills with inputs, leftover energy
    /// goes to local computing.
    MidCpu,
    /// `f1 <= I w / ((1 - 1/alpha) tau)`: local computing needs more rate than
    /// MEC computing, so it is never used.
    LowCpu,
}

/// Thresholds on `f1` that separate the regimes when `alpha > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    /// `sqrt(F Ebar / (mu w C))`; infinite when `C = 0` and `Ebar > 0`.
    pub energy_cache: f64,
    /// `I w / ((1 - 1/alpha) tau)`; infinite when `alpha <= 1`.
    pub local_compute: f64,
}

impl SymmetricInstance {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("input_bits", self.input_bits),
            ("load", self.load),
            ("output_bits", self.output_bits),
            ("cpu_rate", self.cpu_rate),
            ("deadline", self.deadline),
            ("energy_coeff", self.energy_coeff),
            ("inv_spectral_efficiency", self.inv_spectral_efficiency),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid("symmetric instance", format!("{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [("cache_bits", self.cache_bits), ("avg_energy", self.avg_energy)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid("symmetric instance", format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.task_count == 0 || self.device_count == 0 {
            return Err(Error::invalid("symmetric instance", "task and device counts must be >= 1"));
        }
        let f = self.task_count as f64;
        if self.cache_bits > self.output_bits * f {
            return Err(Error::invalid("symmetric instance", "cache exceeds O * F"));
        }
        if self.energy_tasks() > f {
            return Err(Error::invalid(
                "symmetric instance",
                format!("energy covers {} tasks, more than F = {f}", self.energy_tasks()),
            ));
        }
        if self.input_bits * self.load / self.cpu_rate > self.deadline {
            return Err(Error::invalid("symmetric instance", "I w / f1 exceeds the deadline"));
        }
        let c = self.optimal_counts_unchecked();
        if c.n1 + c.n2 + c.n3 > f * (1.0 + INTEGER_TOL) {
            return Err(Error::invalid(
                "symmetric instance",
                format!(
                    "local resources cover {} tasks, more than F = {f}; the closed forms need n1 + n2 + n3 <= F",
                    c.n1 + c.n2 + c.n3
                ),
            ));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.output_bits / self.input_bits
    }

    pub fn r3(&self) -> f64 {
        self.input_bits / (self.deadline - self.input_bits * self.load / self.cpu_rate)
    }

    pub fn r4(&self) -> f64 {
        self.output_bits / self.deadline
    }

    /// `F Ebar / (mu I w f1^2)`.
    pub fn energy_tasks(&self) -> f64 {
        self.task_count as f64 * self.avg_energy
            / (self.energy_coeff * self.input_bits * self.load * self.cpu_rate * self.cpu_rate)
    }

    /// Probability that a given task is requested by at least one device.
    pub fn request_probability(&self) -> f64 {
        let f = self.task_count as f64;
        -((self.device_count as f64) * (-1.0 / f).ln_1p()).exp_m1()
    }

    pub fn thresholds(&self) -> RegimeThresholds {
        let energy_cache = (self.task_count as f64 * self.avg_energy
            / (self.energy_coeff * self.load * self.cache_bits))
            .sqrt();
        let alpha = self.alpha();
        let local_compute = if alpha > 1.0 {
            self.input_bits * self.load / ((1.0 - 1.0 / alpha) * self.deadline)
        } else {
            f64::INFINITY
        };
        RegimeThresholds {
            energy_cache: if energy_cache.is_nan() { 0.0 } else { energy_cache },
            local_compute,
        }
    }

    /// Regime the instance falls in. When `alpha > 1` and the energy budget
    /// is the binding resource (`E <= C / I`) the instance is `HighCpu`,
    /// even if `f1` is also below the local-computing threshold.
    pub fn regime(&self) -> GainRegime {
        if self.alpha() <= 1.0 {
            GainRegime::AlphaLeOne
        } else if self.energy_tasks() <= self.cache_bits / self.input_bits {
            GainRegime::HighCpu
        } else if self.cpu_rate > self.thresholds().local_compute {
            GainRegime::MidCpu
        } else {
            GainRegime::LowCpu
        }
    }

    /// The equivalent general instance.
    pub fn to_instance(&self) -> Result<Instance> {
        let task = TaskSpec::new(self.input_bits, self.load, self.output_bits)?;
        let device = DeviceSpec::new(
            self.cpu_rate,
            self.avg_energy,
            self.cache_bits,
            self.inv_spectral_efficiency,
        )?;
        let p = 1.0 / self.task_count as f64;
        Instance::new(
            vec![task; self.task_count],
            vec![device; self.device_count],
            vec![vec![p; self.task_count]; self.device_count],
            self.deadline,
            self.energy_coeff,
        )
    }

    /// Symmetric form of a general instance. Requires identical tasks,
    /// identical devices and uniform popularity.
    pub fn from_instance(instance: &Instance) -> Result<Self> {
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        let t = &instance.tasks()[0];
        let d = &instance.devices()[0];
        if !instance.tasks().iter().all(|x| {
            same(x.input_bits, t.input_bits) && same(x.load, t.load) && same(x.output_bits, t.output_bits)
        }) {
            return Err(Error::invalid("symmetric instance", "tasks are not identical"));
        }
        if !instance.devices().iter().all(|x| {
            same(x.cpu_rate, d.cpu_rate)
                && same(x.avg_energy, d.avg_energy)
                && same(x.cache_bits, d.cache_bits)
                && same(x.inv_spectral_efficiency, d.inv_spectral_efficiency)
        }) {
            return Err(Error::invalid("symmetric instance", "devices are not identical"));
        }
        let p = 1.0 / instance.task_count() as f64;
        if !instance.popularity().iter().flatten().all(|&x| same(x, p)) {
            return Err(Error::invalid("symmetric instance", "popularity is not uniform"));
        }
        let sym = SymmetricInstance {
            input_bits: t.input_bits,
            load: t.load,
            output_bits: t.output_bits,
            cache_bits: d.cache_bits,
            cpu_rate: d.cpu_rate,
            avg_energy: d.avg_energy,
            deadline: instance.deadline(),
            energy_coeff: instance.energy_coeff(),
            inv_spectral_efficiency: d.inv_spectral_efficiency,
            task_count: instance.task_count(),
            device_count: instance.device_count(),
        };
        sym.validate()?;
        Ok(sym)
    }

    fn optimal_counts_unchecked(&self) -> OptimalCounts {
        let alpha_gt_one = self.alpha() > 1.0;
        let e = self.energy_tasks();
        let (c, i, o) = (self.cache_bits, self.input_bits, self.output_bits);
        let (n1, n2, n3) = if alpha_gt_one {
            let n1 = ((c - c.min(i * e)) / o).max(0.0);
            let n2 = (c / i).min(e);
            let n3 = if self.cpu_rate > self.thresholds().local_compute {
                e - (c / i).min(e)
            } else {
                0.0
            };
            (n1, n2, n3)
        } else {
            ((c / o).max(0.0), 0.0, 0.0)
        };
        OptimalCounts {
            n1,
            n2,
            n3,
            n4: self.task_count as f64 - n1 - n2 - n3,
        }
    }
}

/// Real-valued optimal route counts.
pub fn optimal_counts(sym: &SymmetricInstance) -> Result<OptimalCounts> {
    sym.validate()?;
    Ok(sym.optimal_counts_unchecked())
}

fn counts_policy(sym: &SymmetricInstance, n1: usize, n2: usize, n3: usize) -> ServicePolicy {
    let row: Vec<Route> = (0..sym.task_count)
        .map(|f| {
            if f < n1 {
                Route::LocalOutputCache
            } else if f < n1 + n2 {
                Route::LocalInputCacheCompute
            } else if f < n1 + n2 + n3 {
                Route::LocalCompute
            } else {
                Route::MecCompute
            }
        })
        .collect();
    ServicePolicy::from_rows(vec![row; sym.device_count]).expect("non-empty")
}

/// The same policy on every device: the first `n1` tasks on route 1, the
/// next `n2` on route 2, the next `n3` on route 3, the rest on route 4.
pub fn symmetric_policy(sym: &SymmetricInstance) -> Result<ServicePolicy> {
    let c = optimal_counts(sym)?;
    if !c.is_integral() {
        return Err(Error::NonIntegerCounts {
            n1: c.n1,
            n2: c.n2,
            n3: c.n3,
        });
    }
    Ok(counts_policy(sym, c.n1.round() as usize, c.n2.round() as usize, c.n3.round() as usize))
}

fn counts_bandwidth(sym: &SymmetricInstance, n3: f64, n4: f64) -> f64 {
    let local = if n3 > 0.0 { n3 * sym.r3() } else { 0.0 };
    sym.inv_spectral_efficiency * sym.request_probability() * (local + n4 * sym.r4())
}

/// Best deployable symmetric policy with integer counts, by exhaustive search
/// over all feasible `(n1, n2, n3)` with `n1 + n2 + n3 <= F`. Returns the
/// policy and its exact average bandwidth.
pub fn integer_policy(sym: &SymmetricInstance) -> Result<(ServicePolicy, f64)> {
    sym.validate()?;
    let instance = sym.to_instance()?;
    let f = sym.task_count;
    let mut best: Option<(f64, (usize, usize, usize))> = None;
    for n1 in 0..=f {
        for n2 in 0..=f - n1 {
            for n3 in 0..=f - n1 - n2 {
                let policy = counts_policy(sym, n1, n2, n3);
                if !row_feasible(&instance, 0, policy.row(0)) {
                    continue;
                }
                let value = counts_bandwidth(sym, n3 as f64, (f - n1 - n2 - n3) as f64);
                if best.is_none_or(|(b, _)| value < b) {
                    best = Some((value, (n1, n2, n3)));
                }
            }
        }
    }
    let (value, (n1, n2, n3)) = best.expect("all-route-4 is feasible");
    Ok((counts_policy(sym, n1, n2, n3), value))
}

/// Minimum average multicast bandwidth from the real-valued optimal counts.
pub fn symmetric_bandwidth(sym: &SymmetricInstance) -> Result<f64> {
    let c = optimal_counts(sym)?;
    Ok(counts_bandwidth(sym, c.n3, c.n4))
}

/// Bandwidth when every request is served by MEC computing.
pub fn symmetric_mec_bandwidth(sym: &SymmetricInstance) -> Result<f64> {
    sym.validate()?;
    Ok(counts_bandwidth(sym, 0.0, sym.task_count as f64))
}

fn gain_formula(sym: &SymmetricInstance, regime: GainRegime) -> f64 {
    let f = sym.task_count as f64;
    let (c, i, o) = (sym.cache_bits, sym.input_bits, sym.output_bits);
    let e = sym.energy_tasks();
    let alpha = sym.alpha();
    let denominator = match regime {
        GainRegime::AlphaLeOne => f - c / o,
        GainRegime::HighCpu => {
            let e_over_o = f * sym.avg_energy / (sym.energy_coeff * o * sym.load * sym.cpu_rate * sym.cpu_rate);
            f - c / o - (alpha - 1.0) * e_over_o
        }
        GainRegime::MidCpu => {
            let spare = sym.deadline - i * sym.load / sym.cpu_rate;
            f - e + sym.deadline / (alpha * spare) * (e - c / i)
        }
        GainRegime::LowCpu => f - c / i,
    };
    f / denominator
}

/// MEC-only bandwidth divided by the jointly optimized bandwidth, with the
/// regime that selected the formula.
pub fn mec_gain(sym: &SymmetricInstance) -> Result<(f64, GainRegime)> {
    sym.validate()?;
    let regime = sym.regime();
    let gain = gain_formula(sym, regime);
    if !(gain.is_finite() && gain > 0.0) {
        return Err(Error::Inconsistent(format!(
            "gain formula for {regime:?} has a non-positive denominator"
        )));
    }

    // At a threshold the neighbouring formula must give the same value.
    if regime != GainRegime::AlphaLeOne {
        let t = sym.thresholds();
        let near = |thr: f64| thr.is_finite() && (sym.cpu_rate - thr).abs() <= BOUNDARY_TOL * thr;
        let mut neighbours = Vec::new();
        if near(t.energy_cache) {
            neighbours.extend([GainRegime::HighCpu, GainRegime::MidCpu]);
        }
        if near(t.local_compute) && regime != GainRegime::HighCpu {
            neighbours.extend([GainRegime::MidCpu, GainRegime::LowCpu]);
        }
        for other in neighbours {
            let g = gain_formula(sym, other);
            if (g - gain).abs() > BOUNDARY_AGREEMENT * gain {
                return Err(Error::Inconsistent(format!(
                    "at a regime boundary {regime:?} gives {gain} but {other:?} gives {g}"
                )));
            }
        }
    }
    Ok((gain, regime))
}

/// Unicast-over-multicast bandwidth ratio in the symmetric scenario,
/// `K / (F (1 - (1 - 1/F)^K))`.
pub fn multicast_gain(task_count: usize, device_count: usize) -> Result<f64> {
    if task_count == 0 || device_count == 0 {
        return Err(Error::invalid("multicast gain", "F and K must be >= 1"));
    }
    let f = task_count as f64;
    let k = device_count as f64;
    let requested = if task_count == 1 {
        1.0
    } else {
        -(k * (-1.0 / f).ln_1p()).exp_m1()
    };
    Ok(k / (f * requested))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GainParameter {
    CacheBits,
    CpuRate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trend {
    Increasing,
    Decreasing,
    Constant,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainRow {
    pub value: f64,
    pub gain: f64,
    pub regime: GainRegime,
}

/// Observed trend of the gain over one contiguous run of grid points that
/// share a regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeTrend {
    pub regime: GainRegime,
    pub from: f64,
    pub to: f64,
    pub trend: Trend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityTable {
    pub parameter: GainParameter,
    pub rows: Vec<GainRow>,
    pub trends: Vec<RegimeTrend>,
}

fn classify(gains: &[f64]) -> Trend {
    let tol = |a: f64, b: f64| 1e-12 * a.abs().max(b.abs());
    let mut up = false;
    let mut down = false;
    for w in gains.windows(2) {
        let d = w[1] - w[0];
        if d > tol(w[0], w[1]) {
            up = true;
        } else if d < -tol(w[0], w[1]) {
            down = true;
        }
    }
    match (up, down) {
        (false, false) => Trend::Constant,
        (true, false) => Trend::Increasing,
        (false, true) => Trend::Decreasing,
        (true, true) => Trend::Mixed,
    }
}

/// Evaluates the gain over a sorted grid of cache sizes or CPU rates and
/// reports the trend within each regime run. Runs of a single point report
/// `Constant`.
pub fn mec_gain_monotonicity_table(
    sym: &SymmetricInstance,
    parameter: GainParameter,
    grid: &[f64],
) -> Result<MonotonicityTable> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "grid is empty"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("grid", "grid must be strictly increasing"));
    }
    let rows = grid
        .iter()
        .map(|&value| {
            let mut point = *sym;
            match parameter {
                GainParameter::CacheBits => point.cache_bits = value,
                GainParameter::CpuRate => point.cpu_rate = value,
            }
            let (gain, regime) = mec_gain(&point)?;
            Ok(GainRow { value, gain, regime })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut trends = Vec::new();
    let mut start = 0;
    for end in 1..=rows.len() {
        if end == rows.len() || rows[end].regime != rows[start].regime {
            let gains: Vec<f64> = rows[start..end].iter().map(|r| r.gain).collect();
            trends.push(RegimeTrend {
                regime: rows[start].regime,
                from: rows[start].value,
                to: rows[end - 1].value,
                trend: classify(&gains),
            });
            start = end;
        }
    }
    Ok(MonotonicityTable {
        parameter,
        rows,
        trends,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// I = 1, w = 1, f1 chosen so that mu I w f1^2 = 1: E = F Ebar.
    pub(crate) fn unit_sym(tasks: usize, output: f64, cache: f64, energy_tasks: f64, cpu: f64) -> SymmetricInstance {
        let mu = 1.0 / (cpu * cpu);
        SymmetricInstance {
            input_bits: 1.0,
            load: 1.0,
            output_bits: output,
            cache_bits: cache,
            cpu_rate: cpu,
            avg_energy: energy_tasks / tasks as f64,
            deadline: 1.0,
            energy_coeff: mu,
            inv_spectral_efficiency: 0.1,
            task_count: tasks,
            device_count: 2,
        }
    }

    #[test]
    fn round_trip_through_general_instance() {
        let s = unit_sym(4, 2.0, 1.0, 1.0, 10.0);
        assert_eq!(SymmetricInstance::from_instance(&s.to_instance().unwrap()).unwrap(), s);
        let skewed = s
            .to_instance()
            .unwrap()
            .map_devices(|k, d| DeviceSpec {
                cache_bits: d.cache_bits + k as f64,
                ..*d
            })
            .unwrap();
        assert!(SymmetricInstance::from_instance(&skewed).is_err());
    }

    #[test]
    fn alpha_le_one_counts() {
        let s = unit_sym(4, 0.5, 1.0, 1.0, 10.0);
        let c = optimal_counts(&s).unwrap();
        assert_eq!((c.n2, c.n3), (0.0, 0.0));
        assert_relative_eq!(c.n1, 2.0);
        assert_eq!(s.regime(), GainRegime::AlphaLeOne);
    }

    #[test]
    fn input_cache_counts() {
        // alpha = 2, C = 2I, E = 2, f1 above both thresholds.
        let s = unit_sym(4, 2.0, 2.0, 2.0, 10.0);
        assert_relative_eq!(s.energy_tasks(), 2.0, max_relative = 1e-12);
        let c = optimal_counts(&s).unwrap();
        assert_relative_eq!(c.n1, 0.0);
        assert_relative_eq!(c.n2, 2.0, max_relative = 1e-12);
        assert_relative_eq!(c.n3, 0.0);
        let p = symmetric_policy(&s).unwrap();
        assert_eq!(
            p.row(1),
            &[Route::LocalInputCacheCompute, Route::LocalInputCacheCompute, Route::MecCompute, Route::MecCompute]
        );
    }

    #[test]
    fn no_resources() {
        let s = unit_sym(4, 2.0, 0.0, 0.0, 10.0);
        let c = optimal_counts(&s).unwrap();
        assert_eq!((c.n1, c.n2, c.n3, c.n4), (0.0, 0.0, 0.0, 4.0));
        assert_eq!(symmetric_policy(&s).unwrap(), ServicePolicy::uniform(2, 4, Route::MecCompute));
        assert_eq!(integer_policy(&s).unwrap().0, ServicePolicy::uniform(2, 4, Route::MecCompute));
        assert_relative_eq!(symmetric_bandwidth(&s).unwrap(), symmetric_mec_bandwidth(&s).unwrap());
    }

    #[test]
    fn output_cache_policy_order() {
        let s = unit_sym(4, 1.0, 2.0, 0.0, 10.0);
        let p = symmetric_policy(&s).unwrap();
        assert_eq!(
            p.row(0),
            &[Route::LocalOutputCache, Route::LocalOutputCache, Route::MecCompute, Route::MecCompute]
        );
    }

    #[test]
    fn non_integer_counts_rejected() {
        let s = unit_sym(4, 1.0, 1.5, 0.0, 10.0);
        assert!(matches!(symmetric_policy(&s), Err(Error::NonIntegerCounts { .. })));
        let (p, b) = integer_policy(&s).unwrap();
        assert_eq!(p.row(0)[0], Route::LocalOutputCache);
        assert_eq!(p.row(0)[1], Route::MecCompute);
        assert_relative_eq!(b, counts_bandwidth(&s, 0.0, 3.0));
    }

    #[test]
    fn bandwidth_matches_small_enumeration() {
        // F = K = 2, O = 2e6, tau = 0.02, invSE = 0.1, no resources.
        let s = SymmetricInstance {
            input_bits: 1e6,
            load: 10.0,
            output_bits: 2e6,
            cache_bits: 0.0,
            cpu_rate: 1e9,
            avg_energy: 0.0,
            deadline: 0.02,
            energy_coeff: 1e-27,
            inv_spectral_efficiency: 0.1,
            task_count: 2,
            device_count: 2,
        };
        assert_relative_eq!(symmetric_bandwidth(&s).unwrap(), 1.5e7, max_relative = 1e-12);
    }

    #[test]
    fn gain_examples() {
        // alpha <= 1, F = 4, C = 2 O.
        let s = unit_sym(4, 1.0, 2.0, 0.0, 10.0);
        let (g, r) = mec_gain(&s).unwrap();
        assert_relative_eq!(g, 2.0, max_relative = 1e-12);
        assert_eq!(r, GainRegime::AlphaLeOne);

        // alpha = 2, F = 4, C/O = 1, F Ebar / (mu O w f1^2) = 0.5 -> E = 1.
        let s = unit_sym(4, 2.0, 2.0, 1.0, 10.0);
        let (g, r) = mec_gain(&s).unwrap();
        assert_relative_eq!(g, 1.6, max_relative = 1e-12);
        assert_eq!(r, GainRegime::HighCpu);

        let tiny = unit_sym(4, 0.5, 1e-9, 0.0, 10.0);
        assert_relative_eq!(mec_gain(&tiny).unwrap().0, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn regime_boundary_formulas_agree() {
        // E = C / I exactly: HighCpu and MidCpu formulas coincide.
        let s = unit_sym(4, 2.0, 1.0, 1.0, 10.0);
        assert_relative_eq!(s.thresholds().energy_cache, s.cpu_rate, max_relative = 1e-12);
        let (g, _) = mec_gain(&s).unwrap();
        assert_relative_eq!(g, gain_formula(&s, GainRegime::MidCpu), max_relative = 1e-12);
    }

    #[test]
    fn resources_exceeding_task_count_rejected() {
        // Output caching alone already covers every task.
        let mut s = unit_sym(4, 2.0, 8.0, 2.0, 10.0);
        assert!(s.validate().is_err());
        s.cache_bits = 9.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn multicast_gain_examples() {
        assert_eq!(multicast_gain(7, 1).unwrap(), 1.0);
        assert_relative_eq!(multicast_gain(2, 2).unwrap(), 4.0 / 3.0, max_relative = 1e-15);
        let g = multicast_gain(50, 10).unwrap();
        assert_relative_eq!(g, 10.0 / (50.0 * (1.0 - 0.98f64.powi(10))), max_relative = 1e-13);
        assert_relative_eq!(g, 1.0933, max_relative = 1e-4);
        assert_eq!(multicast_gain(1, 5).unwrap(), 5.0);
        assert!(multicast_gain(0, 1).is_err());
    }

    #[test]
    fn trend_classification() {
        assert_eq!(classify(&[1.0, 2.0, 3.0]), Trend::Increasing);
        assert_eq!(classify(&[3.0, 2.0]), Trend::Decreasing);
        assert_eq!(classify(&[2.0, 2.0]), Trend::Constant);
        assert_eq!(classify(&[1.0, 2.0, 1.0]), Trend::Mixed);
    }

    #[test]
    fn monotonicity_grid_validation() {
        let s = unit_sym(4, 0.5, 1.0, 1.0, 10.0);
        assert!(mec_gain_monotonicity_table(&s, GainParameter::CacheBits, &[]).is_err());
        assert!(mec_gain_monotonicity_table(&s, GainParameter::CacheBits, &[1.0, 0.5]).is_err());
    }
}
