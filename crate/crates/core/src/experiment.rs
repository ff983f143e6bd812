//! Seeded demand sweeps comparing offset policies.
//!
//! Every (seed, demand, policy) triple is an independent job; jobs run on the
//! rayon pool and results are sorted by key, so output does not depend on the
//! worker count. Infeasible or divergent evaluations are recorded in their
//! row, never dropped.
//!
//! Export layout (all files under the output directory):
//!
//! - `results.csv`: `seed,demand_bps,policy,feasible,converged,total_energy_mw,tso_iterations,error`
//! - `per_cell.csv`: `seed,demand_bps,policy,cell_0,...,cell_{n-1}` (full-load energy per cell, mW)
//! - `results.json`: the [`ResultTable`] without timings
//! - `summary.json`: the [`Summary`]
//! - `timings.csv`: `seed,demand_bps,policy,wall_time_ms`
//!
//! Everything except `timings.csv` is byte-reproducible for a given spec.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::association::{associate, OffsetSet, OffsetVector};
use crate::error::{Error, Result};
use crate::layout::ScenarioConfig;
use crate::load::SolverOptions;
use crate::model::Scenario;
use crate::tso::{optimize_from, EvalRecord, InitStrategy, TsoConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Policy {
    /// Tabu-search optimized offsets.
    OO,
    /// All LPN offsets at the lowest level.
    ZO,
    /// All LPN offsets at the highest level.
    MO,
    /// Macros only.
    NL,
}

impl Policy {
    pub const ALL: [Policy; 4] = [Policy::OO, Policy::ZO, Policy::MO, Policy::NL];

    pub fn as_str(&self) -> &'static str {
        match self {
            Policy::OO => "OO",
            Policy::ZO => "ZO",
            Policy::MO => "MO",
            Policy::NL => "NL",
        }
    }
}

impl std::str::FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "OO" => Ok(Policy::OO),
            "ZO" => Ok(Policy::ZO),
            "MO" => Ok(Policy::MO),
            "NL" => Ok(Policy::NL),
            _ => Err(Error::InvalidExperiment(format!("unknown policy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    ZeroOffset,
    MaxOffset,
    /// Random start seeded per row.
    Random,
    /// Two searches, from zero and from maximal offsets; the better one wins.
    #[default]
    ZeroAndMax,
}

/// Tabu search settings for the OO policy; `None` picks `10 m` / `ceil(sqrt m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsoSettings {
    pub alpha: Option<usize>,
    pub beta: Option<usize>,
    pub offsets_db: Vec<f64>,
    pub init: InitKind,
    pub warm_start: bool,
}

impl Default for TsoSettings {
    fn default() -> Self {
        Self {
            alpha: None,
            beta: None,
            offsets_db: (0..=10).map(f64::from).collect(),
            init: InitKind::ZeroAndMax,
            warm_start: false,
        }
    }
}

impl TsoSettings {
    pub fn offset_set(&self) -> Result<OffsetSet> {
        OffsetSet::new(self.offsets_db.clone())
    }

    pub fn config(&self, num_lpns: usize, solver: &SolverOptions, row_seed: u64) -> Result<TsoConfig> {
        let defaults = TsoConfig::for_lpns(num_lpns);
        Ok(TsoConfig {
            offset_set: self.offset_set()?,
            alpha: self.alpha.unwrap_or(defaults.alpha),
            beta: self.beta.unwrap_or(defaults.beta),
            init: self.starts(row_seed)[0].clone(),
            solver: solver.clone(),
            warm_start: self.warm_start,
        })
    }
}

impl TsoSettings {
    pub fn starts(&self, row_seed: u64) -> Vec<InitStrategy> {
        match self.init {
            InitKind::ZeroOffset => vec![InitStrategy::ZeroOffset],
            InitKind::MaxOffset => vec![InitStrategy::MaxOffset],
            InitKind::Random => vec![InitStrategy::Random { seed: row_seed }],
            InitKind::ZeroAndMax => vec![InitStrategy::ZeroOffset, InitStrategy::MaxOffset],
        }
    }
}

/// Default sweep: 100 to 550 kbps in 50 kbps steps.
pub fn default_demands() -> Vec<f64> {
    (2..=11).map(|k| 50e3 * k as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Generator settings; seed `s` of the run uses `rng_seed + s`.
    pub scenario: ScenarioConfig,
    /// Fixed scenario used for every seed instead of generating one.
    pub scenario_file: Option<PathBuf>,
    /// Per-UE demand, bps, ascending.
    pub demands: Vec<f64>,
    pub policies: Vec<Policy>,
    pub num_seeds: usize,
    pub tso: TsoSettings,
    pub solver: SolverOptions,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            scenario_file: None,
            demands: default_demands(),
            policies: Policy::ALL.to_vec(),
            num_seeds: 10,
            tso: TsoSettings::default(),
            solver: SolverOptions::default(),
            output_dir: None,
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text),
            _ => Self::from_toml(&text),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidExperiment(msg.into()));
        if self.demands.is_empty() {
            return fail("demand sweep is empty");
        }
        if self.demands.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return fail("demands must be positive");
        }
        if self.demands.windows(2).any(|w| !(w[0] < w[1])) {
            return fail("demands must be strictly ascending");
        }
        if self.policies.is_empty() {
            return fail("no policies selected");
        }
        if self.num_seeds == 0 {
            return fail("num_seeds must be at least 1");
        }
        self.tso.offset_set()?;
        if self.scenario_file.is_none() {
            self.scenario.validate()?;
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.num_seeds as u64).map(|s| self.scenario.rng_seed.wrapping_add(s)).collect()
    }

    fn scenario_for_seed(&self, seed: u64) -> Result<Scenario> {
        match &self.scenario_file {
            Some(path) => Scenario::load(path),
            None => ScenarioConfig {
                rng_seed: seed,
                ..self.scenario.clone()
            }
            .generate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub seed: u64,
    /// Per-UE demand, bps.
    pub demand: f64,
    pub policy: Policy,
    /// `sum_i nu_i p_i` at full load, mW per resource unit; `None` if the
    /// power solve diverged or the row failed.
    pub total_energy: Option<f64>,
    /// Per-cell share of `total_energy`; empty when it is `None`.
    pub per_cell_energy: Vec<f64>,
    pub feasible: bool,
    pub converged: bool,
    /// Tabu search iterations (OO only).
    pub tso_iterations: Option<usize>,
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl ResultRow {
    fn from_record(seed: u64, demand: f64, policy: Policy, record: &EvalRecord, tso_iterations: Option<usize>) -> Self {
        let converged = record.solve.converged();
        Self {
            seed,
            demand,
            policy,
            total_energy: converged.then_some(record.objective),
            per_cell_energy: if converged { record.per_cell_energy() } else { Vec::new() },
            feasible: record.feasible,
            converged,
            tso_iterations,
            error: None,
            wall_time_ms: None,
        }
    }

    fn failed(seed: u64, demand: f64, policy: Policy, error: &Error) -> Self {
        Self {
            seed,
            demand,
            policy,
            total_energy: None,
            per_cell_energy: Vec::new(),
            feasible: false,
            converged: false,
            tso_iterations: None,
            error: Some(error.to_string()),
            wall_time_ms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    /// Copy with wall times removed.
    pub fn without_timing(&self) -> Self {
        Self {
            rows: self
                .rows
                .iter()
                .map(|r| ResultRow {
                    wall_time_ms: None,
                    ..r.clone()
                })
                .collect(),
        }
    }

    pub fn get(&self, seed: u64, demand: f64, policy: Policy) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.seed == seed && r.demand == demand && r.policy == policy)
    }

    /// Rows of one (seed, policy) series in demand order.
    pub fn series(&self, seed: u64, policy: Policy) -> Vec<&ResultRow> {
        self.rows.iter().filter(|r| r.seed == seed && r.policy == policy).collect()
    }
}

fn run_policy(scenario: &Scenario, seed: u64, demand: f64, policy: Policy, spec: &ExperimentSpec, row_seed: u64) -> Result<ResultRow> {
    let set = spec.tso.offset_set()?;
    match policy {
        Policy::OO => {
            let config = spec.tso.config(scenario.num_lpns(), &spec.solver, row_seed)?;
            let result = optimize_from(scenario, &config, &spec.tso.starts(row_seed))?;
            let mut row = ResultRow::from_record(seed, demand, policy, &result.record, Some(result.iterations()));
            row.feasible = result.is_solved() && result.record.feasible;
            Ok(row)
        }
        Policy::ZO | Policy::MO | Policy::NL => {
            let m = scenario.num_lpns();
            let (offsets, lpn_enabled) = match policy {
                Policy::ZO => (OffsetVector::all_zero(m), true),
                Policy::MO => (OffsetVector::all_max(m, &set), true),
                _ => (OffsetVector::all_zero(m), false),
            };
            let association = associate(scenario, &offsets, &set, lpn_enabled)?;
            let record = EvalRecord::from_association(
                scenario,
                association,
                lpn_enabled.then_some(offsets),
                &spec.solver,
                None,
            );
            Ok(ResultRow::from_record(seed, demand, policy, &record, None))
        }
    }
}

/// Runs every (seed, demand, policy) combination of `spec`.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    let seeds = spec.seeds();
    let scenarios: Vec<std::result::Result<Scenario, String>> = seeds
        .iter()
        .map(|&seed| spec.scenario_for_seed(seed).map_err(|e| e.to_string()))
        .collect();

    let mut jobs = Vec::new();
    for (s, &seed) in seeds.iter().enumerate() {
        for (d, &demand) in spec.demands.iter().enumerate() {
            for &policy in &spec.policies {
                jobs.push((s, seed, d, demand, policy));
            }
        }
    }

    let mut rows: Vec<((usize, usize, Policy), ResultRow)> = jobs
        .par_iter()
        .map(|&(s, seed, d, demand, policy)| {
            let started = Instant::now();
            let row_seed = seed.wrapping_mul(1_000_003).wrapping_add(d as u64);
            let outcome = match &scenarios[s] {
                Ok(base) => base
                    .with_uniform_demand(demand)
                    .and_then(|scenario| run_policy(&scenario, seed, demand, policy, spec, row_seed)),
                Err(msg) => Err(Error::InvalidScenario(msg.clone())),
            };
            let mut row = outcome.unwrap_or_else(|e| ResultRow::failed(seed, demand, policy, &e));
            row.wall_time_ms = Some(started.elapsed().as_secs_f64() * 1e3);
            ((s, d, policy), row)
        })
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(ResultTable {
        rows: rows.into_iter().map(|(_, row)| row).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyStat {
    pub policy: Policy,
    /// Mean total energy over feasible runs.
    pub mean_energy: Option<f64>,
    pub feasible_runs: usize,
    pub runs: usize,
}

/// Relative saving of `policy` against `baseline`, `(E_b - E_a) / E_b`, over
/// seeds where both are feasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub policy: Policy,
    pub baseline: Policy,
    pub mean_percent: Option<f64>,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandSummary {
    pub demand: f64,
    pub policies: Vec<PolicyStat>,
    pub improvements: Vec<Improvement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub num_seeds: usize,
    pub per_demand: Vec<DemandSummary>,
    /// Pooled over every demand.
    pub overall: Vec<Improvement>,
}

impl Summary {
    pub fn improvement(&self, policy: Policy, baseline: Policy) -> Option<&Improvement> {
        self.overall.iter().find(|i| i.policy == policy && i.baseline == baseline)
    }
}

fn feasible_energy(row: &ResultRow) -> Option<f64> {
    if row.feasible {
        row.total_energy
    } else {
        None
    }
}

fn improvements<'a>(rows: &[&'a ResultRow], policies: &[Policy]) -> Vec<Improvement> {
    let mut by_key: BTreeMap<(u64, u64, Policy), f64> = BTreeMap::new();
    for row in rows {
        if let Some(e) = feasible_energy(row) {
            by_key.insert((row.seed, row.demand.to_bits(), row.policy), e);
        }
    }
    let mut keys: Vec<(u64, u64)> = by_key.keys().map(|&(s, d, _)| (s, d)).collect();
    keys.dedup();

    let mut out = Vec::new();
    for &policy in policies {
        for &baseline in policies {
            if policy == baseline {
                continue;
            }
            let ratios: Vec<f64> = keys
                .iter()
                .filter_map(|&(s, d)| {
                    let a = by_key.get(&(s, d, policy))?;
                    let b = by_key.get(&(s, d, baseline))?;
                    Some((b - a) / b)
                })
                .collect();
            out.push(Improvement {
                policy,
                baseline,
                mean_percent: (!ratios.is_empty()).then(|| 100.0 * ratios.iter().sum::<f64>() / ratios.len() as f64),
                pairs: ratios.len(),
            });
        }
    }
    out
}

/// Per-demand policy means and pairwise improvements.
pub fn summarize(table: &ResultTable) -> Summary {
    let mut policies: Vec<Policy> = table.rows.iter().map(|r| r.policy).collect();
    policies.sort();
    policies.dedup();
    let mut demands: Vec<f64> = table.rows.iter().map(|r| r.demand).collect();
    demands.sort_by(f64::total_cmp);
    demands.dedup();
    let mut seeds: Vec<u64> = table.rows.iter().map(|r| r.seed).collect();
    seeds.sort();
    seeds.dedup();

    let per_demand = demands
        .iter()
        .map(|&demand| {
            let rows: Vec<&ResultRow> = table.rows.iter().filter(|r| r.demand == demand).collect();
            let stats = policies
                .iter()
                .map(|&policy| {
                    let runs: Vec<&&ResultRow> = rows.iter().filter(|r| r.policy == policy).collect();
                    let energies: Vec<f64> = runs.iter().filter_map(|r| feasible_energy(r)).collect();
                    PolicyStat {
                        policy,
                        mean_energy: (!energies.is_empty()).then(|| energies.iter().sum::<f64>() / energies.len() as f64),
                        feasible_runs: energies.len(),
                        runs: runs.len(),
                    }
                })
                .collect();
            DemandSummary {
                demand,
                policies: stats,
                improvements: improvements(&rows, &policies),
            }
        })
        .collect();

    let all: Vec<&ResultRow> = table.rows.iter().collect();
    Summary {
        num_seeds: seeds.len(),
        per_demand,
        overall: improvements(&all, &policies),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
    #[default]
    Both,
}

pub const RESULTS_CSV_HEADER: [&str; 8] = [
    "seed",
    "demand_bps",
    "policy",
    "feasible",
    "converged",
    "total_energy_mw",
    "tso_iterations",
    "error",
];

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

pub fn results_csv(table: &ResultTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RESULTS_CSV_HEADER)?;
    for r in &table.rows {
        w.write_record([
            r.seed.to_string(),
            r.demand.to_string(),
            r.policy.as_str().to_string(),
            r.feasible.to_string(),
            r.converged.to_string(),
            opt(&r.total_energy),
            opt(&r.tso_iterations),
            opt(&r.error),
        ])?;
    }
    csv_string(w)
}

pub fn per_cell_csv(table: &ResultTable) -> Result<String> {
    let num_cells = table.rows.iter().map(|r| r.per_cell_energy.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["seed".to_string(), "demand_bps".into(), "policy".into()];
    header.extend((0..num_cells).map(|i| format!("cell_{i}")));
    w.write_record(&header)?;
    for r in &table.rows {
        let mut record = vec![r.seed.to_string(), r.demand.to_string(), r.policy.as_str().to_string()];
        record.extend((0..num_cells).map(|i| r.per_cell_energy.get(i).map(f64::to_string).unwrap_or_default()));
        w.write_record(&record)?;
    }
    csv_string(w)
}

pub fn timings_csv(table: &ResultTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["seed", "demand_bps", "policy", "wall_time_ms"])?;
    for r in &table.rows {
        w.write_record([
            r.seed.to_string(),
            r.demand.to_string(),
            r.policy.as_str().to_string(),
            opt(&r.wall_time_ms),
        ])?;
    }
    csv_string(w)
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes the table and its summary into `dir`; returns the files written.
pub fn export(table: &ResultTable, dir: impl AsRef<Path>, format: ExportFormat) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let clean = table.without_timing();
    let mut written = Vec::new();
    let mut write = |name: &str, contents: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, contents)?;
        written.push(path);
        Ok(())
    };
    if matches!(format, ExportFormat::Csv | ExportFormat::Both) {
        write("results.csv", results_csv(&clean)?)?;
        write("per_cell.csv", per_cell_csv(&clean)?)?;
    }
    if matches!(format, ExportFormat::Json | ExportFormat::Both) {
        write("results.json", serde_json::to_string_pretty(&clean)?)?;
    }
    write("summary.json", serde_json::to_string_pretty(&summarize(&clean))?)?;
    write("timings.csv", timings_csv(table)?)?;
    Ok(written)
}

pub fn read_results_json(path: impl AsRef<Path>) -> Result<ResultTable> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
