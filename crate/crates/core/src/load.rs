//! Load coupling: SINR, the cell load function and the power fixed point at a
//! target load.
//!
//! Under an association, cell `i` carries load
//!
//! ```text
//! f_i = sum_{j served by i} r_j / ln(1 + SINR_ij),
//! SINR_ij = p_i g_ij / (sum_{k != i} p_k g_kj nu_k + sigma^2)
//! ```
//!
//! where `r_j` is the UE demand in nats/s normalized by `M * B`. For a fixed
//! target load the powers that make `f_i = target_i` for every serving cell
//! are unique; [`solve_power`] finds them by Gauss-Seidel sweeps. Within a
//! sweep each cell's power is the root of its own load equation with the
//! other powers held fixed, found inside a bracket obtained by doubling from
//! 1 mW. Cells serving nobody get power 0 and load 0 and do not interfere.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::association::Association;
use crate::error::{Error, Result};
use crate::model::Scenario;

/// Relative slack applied to power limits when judging feasibility.
pub const FEASIBILITY_SLACK: f64 = 1e-9;

/// Per-cell load targets, each in `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadVector(Vec<f64>);

impl LoadVector {
    pub fn new(loads: Vec<f64>) -> Result<Self> {
        if let Some(i) = loads.iter().position(|v| !(*v > 0.0 && *v <= 1.0)) {
            return Err(Error::InvalidLoad(format!("load of cell {i} is {} (must be in (0, 1])", loads[i])));
        }
        Ok(Self(loads))
    }

    /// Every cell at load 1.
    pub fn full(num_cells: usize) -> Self {
        Self(vec![1.0; num_cells])
    }

    pub fn uniform(num_cells: usize, load: f64) -> Result<Self> {
        Self::new(vec![load; num_cells])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for LoadVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Transmit power per resource unit for every cell, mW.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PowerVector(Vec<f64>);

impl PowerVector {
    pub fn new(powers: Vec<f64>) -> Self {
        Self(powers)
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for PowerVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Converged,
    Diverged,
}

/// How the per-cell load equation is solved inside a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellRootMethod {
    /// Plain bisection of the bracket.
    Bisection,
    /// Newton steps from the lower bracket end, falling back to bisection
    /// whenever a step leaves the bracket. The cell load is convex and
    /// decreasing in the cell's power, so steps from below never overshoot.
    #[default]
    NewtonBisection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Converged once the largest relative power change in a sweep drops
    /// below this.
    pub tolerance: f64,
    /// Diverged as soon as any power exceeds this, mW.
    pub max_power: f64,
    pub max_sweeps: usize,
    pub root_method: CellRootMethod,
    /// Cell visiting order within a sweep; defaults to ascending ids.
    pub sweep_order: Option<Vec<usize>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_power: 1e9,
            max_sweeps: 10_000,
            root_method: CellRootMethod::default(),
            sweep_order: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub power: PowerVector,
    pub status: SolveStatus,
    /// Converged and every serving cell within its power limit.
    pub feasible: bool,
    pub outer_iterations: usize,
    /// Largest relative power change in the last sweep.
    pub residual: f64,
}

impl SolveResult {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    /// Sum of powers when converged, `+inf` otherwise. At full load this is
    /// the sum transmission energy.
    pub fn objective(&self) -> f64 {
        if self.converged() {
            self.power.total()
        } else {
            f64::INFINITY
        }
    }
}

/// SINR of UE `ue` when served by `cell`.
pub fn sinr(scenario: &Scenario, cell: usize, ue: usize, powers: &[f64], loads: &[f64]) -> f64 {
    let interference: f64 = (0..scenario.num_cells())
        .filter(|&k| k != cell)
        .map(|k| powers[k] * scenario.gain(k, ue) * loads[k])
        .sum();
    powers[cell] * scenario.gain(cell, ue) / (interference + scenario.noise_power())
}

/// Load the served set of `cell` requires at the given powers and loads.
pub fn load_of_cell(scenario: &Scenario, assoc: &Association, cell: usize, powers: &[f64], loads: &[f64]) -> f64 {
    let demands = scenario.normalized_demands();
    assoc
        .served_by(cell)
        .iter()
        .map(|&ue| demands[ue] / sinr(scenario, cell, ue, powers, loads).ln_1p())
        .sum()
}

/// Load function evaluated for every cell; cells serving nobody get 0.
pub fn cell_loads(scenario: &Scenario, assoc: &Association, powers: &[f64], loads: &[f64]) -> Vec<f64> {
    (0..scenario.num_cells())
        .map(|i| {
            if assoc.is_serving(i) {
                load_of_cell(scenario, assoc, i, powers, loads)
            } else {
                0.0
            }
        })
        .collect()
}

/// `sum_i nu_i p_i`.
pub fn energy(loads: &[f64], powers: &[f64]) -> f64 {
    per_cell_energy(loads, powers).iter().sum()
}

pub fn per_cell_energy(loads: &[f64], powers: &[f64]) -> Vec<f64> {
    loads.iter().zip(powers).map(|(l, p)| l * p).collect()
}

/// Converged with every serving cell within its power limit.
pub fn check_feasible(result: &SolveResult, scenario: &Scenario) -> bool {
    result.converged() && within_limits(&result.power, scenario)
}

fn within_limits(power: &[f64], scenario: &Scenario) -> bool {
    power
        .iter()
        .zip(scenario.cells())
        .all(|(p, c)| *p <= c.power_limit * (1.0 + FEASIBILITY_SLACK))
}

/// Largest `|f_i - target_i|` over serving cells.
pub fn load_residual(scenario: &Scenario, assoc: &Association, power: &[f64], target: &LoadVector) -> f64 {
    let loads = effective_loads(assoc, target);
    assoc
        .serving_cells()
        .map(|i| (load_of_cell(scenario, assoc, i, power, &loads) - target[i]).abs())
        .fold(0.0, f64::max)
}

/// Target loads with non-serving cells zeroed.
pub fn effective_loads(assoc: &Association, target: &LoadVector) -> Vec<f64> {
    target
        .iter()
        .enumerate()
        .map(|(i, &v)| if assoc.is_serving(i) { v } else { 0.0 })
        .collect()
}

/// Power fixed point at `target` with default options.
pub fn solve_power(scenario: &Scenario, assoc: &Association, target: &LoadVector) -> SolveResult {
    solve_power_with(scenario, assoc, target, &SolverOptions::default(), None)
}

/// Power fixed point at `target`, optionally starting from `warm_start`.
///
/// A cold start begins from zero power, from which the sweeps increase
/// monotonically toward the fixed point.
pub fn solve_power_with(
    scenario: &Scenario,
    assoc: &Association,
    target: &LoadVector,
    options: &SolverOptions,
    warm_start: Option<&[f64]>,
) -> SolveResult {
    let n = scenario.num_cells();
    assert_eq!(target.len(), n, "target load must have one entry per cell");
    assert_eq!(assoc.num_cells(), n, "association built for a different scenario");

    let demands = scenario.normalized_demands();
    let loads = effective_loads(assoc, target);
    let noise = scenario.noise_power();

    let mut power: Vec<f64> = (0..n)
        .map(|i| match warm_start {
            Some(w) if assoc.is_serving(i) && w[i].is_finite() && w[i] > 0.0 => w[i],
            _ => 0.0,
        })
        .collect();
    let order: Vec<usize> = match &options.sweep_order {
        Some(order) => order.iter().copied().filter(|&i| assoc.is_serving(i)).collect(),
        None => assoc.serving_cells().collect(),
    };

    let mut rates = Vec::new();
    let mut coefs = Vec::new();
    let mut residual = f64::INFINITY;
    let mut status = SolveStatus::Diverged;
    let mut sweeps = 0;

    'sweeps: while sweeps < options.max_sweeps {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for &i in &order {
            rates.clear();
            coefs.clear();
            for &ue in assoc.served_by(i) {
                let mut interference = noise;
                for k in 0..n {
                    if k != i {
                        interference += power[k] * scenario.gain(k, ue) * loads[k];
                    }
                }
                rates.push(demands[ue]);
                coefs.push(scenario.gain(i, ue) / interference);
            }
            let cell = CellEquation {
                rates: &rates,
                coefs: &coefs,
                target: loads[i],
            };
            let hint = if power[i] > 0.0 { power[i] } else { 1.0 };
            let next = match cell.solve(hint, options.max_power, options.root_method) {
                Some(p) => p,
                None => break 'sweeps,
            };
            max_change = max_change.max((next - power[i]).abs() / next);
            power[i] = next;
        }
        residual = max_change;
        if max_change < options.tolerance {
            status = SolveStatus::Converged;
            break;
        }
    }

    let feasible = status == SolveStatus::Converged && within_limits(&power, scenario);
    SolveResult {
        power: PowerVector(power),
        status,
        feasible,
        outer_iterations: sweeps,
        residual,
    }
}

/// `sum_j rates_j / ln(1 + p coefs_j) = target` in the unknown `p`.
struct CellEquation<'a> {
    rates: &'a [f64],
    coefs: &'a [f64],
    target: f64,
}

const ROOT_REL_TOL: f64 = 1e-14;
const ROOT_MAX_STEPS: usize = 400;

impl CellEquation<'_> {
    /// Load minus target; positive below the root.
    fn excess(&self, p: f64) -> f64 {
        self.rates
            .iter()
            .zip(self.coefs)
            .map(|(r, a)| r / (p * a).ln_1p())
            .sum::<f64>()
            - self.target
    }

    fn excess_and_slope(&self, p: f64) -> (f64, f64) {
        let mut value = -self.target;
        let mut slope = 0.0;
        for (r, a) in self.rates.iter().zip(self.coefs) {
            let x = p * a;
            let log = x.ln_1p();
            value += r / log;
            slope -= r * a / ((1.0 + x) * log * log);
        }
        (value, slope)
    }

    /// Root in mW, or `None` if it lies above `max_power`.
    fn solve(&self, hint: f64, max_power: f64, method: CellRootMethod) -> Option<f64> {
        let (mut lo, mut hi);
        if self.excess(hint) > 0.0 {
            lo = hint;
            hi = 2.0 * hint;
            while self.excess(hi) > 0.0 {
                if hi > max_power {
                    return None;
                }
                lo = hi;
                hi *= 2.0;
            }
        } else {
            hi = hint;
            lo = 0.5 * hint;
            while self.excess(lo) <= 0.0 {
                hi = lo;
                lo *= 0.5;
                if lo < f64::MIN_POSITIVE {
                    return Some(hi);
                }
            }
        }

        let root = match method {
            CellRootMethod::Bisection => {
                for _ in 0..ROOT_MAX_STEPS {
                    if hi - lo <= ROOT_REL_TOL * hi {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    if self.excess(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
            CellRootMethod::NewtonBisection => {
                let mut x = lo;
                for _ in 0..ROOT_MAX_STEPS {
                    let (value, slope) = self.excess_and_slope(x);
                    if value == 0.0 {
                        break;
                    }
                    if value > 0.0 {
                        lo = x;
                    } else {
                        hi = x;
                    }
                    let mut next = x - value / slope;
                    if !(next > lo && next < hi) {
                        next = 0.5 * (lo + hi);
                    }
                    let done = (next - x).abs() <= ROOT_REL_TOL * next || hi - lo <= ROOT_REL_TOL * hi;
                    x = next;
                    if done {
                        break;
                    }
                }
                x
            }
        };
        (root <= max_power).then_some(root)
    }
}
