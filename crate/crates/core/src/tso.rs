//! Tabu search over LPN offset vectors.
//!
//! The objective of an offset vector is the sum of full-load powers under the
//! association it induces (`+inf` when the power fixed point does not exist).
//! Each iteration moves the current vector to its best admissible neighbor:
//! a neighbor is admissible when the position it modifies is not tabu, or
//! when its objective beats the best feasible objective so far (aspiration).
//! The modified position then becomes tabu for `beta` iterations counting
//! the current one. The best vector is only replaced by feasible strict
//! improvements, and the search stops after `alpha` consecutive iterations
//! without one.
//!
//! Evaluations are memoized per offset vector within a run. Uncached
//! neighbors of one iteration are evaluated in parallel.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::association::{associate, Association, OffsetSet, OffsetVector};
use crate::error::{Error, Result};
use crate::load::{solve_power_with, LoadVector, SolveResult, SolverOptions};
use crate::model::Scenario;

/// Largest search space [`exhaustive_search`] will enumerate.
pub const MAX_EXHAUSTIVE: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitStrategy {
    ZeroOffset,
    /// Every LPN at the largest offset level.
    MaxOffset,
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsoConfig {
    pub offset_set: OffsetSet,
    /// Stop after this many consecutive non-improving iterations.
    pub alpha: usize,
    /// Tabu tenure.
    pub beta: usize,
    pub init: InitStrategy,
    #[serde(default)]
    pub solver: SolverOptions,
    /// Start each neighbor's power solve from the current vector's powers.
    #[serde(default)]
    pub warm_start: bool,
}

impl TsoConfig {
    /// `alpha = 10 m`, `beta = ceil(sqrt(m))`, offsets 0..=10 dB, zero-offset start.
    pub fn for_lpns(num_lpns: usize) -> Self {
        Self {
            offset_set: OffsetSet::uniform_db(0, 10),
            alpha: (10 * num_lpns).max(1),
            beta: (num_lpns as f64).sqrt().ceil() as usize,
            init: InitStrategy::ZeroOffset,
            solver: SolverOptions::default(),
            warm_start: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha < 1 {
            return Err(Error::InvalidTsoConfig("alpha must be at least 1".into()));
        }
        if self.offset_set.is_empty() {
            return Err(Error::InvalidTsoConfig("offset set is empty".into()));
        }
        Ok(())
    }
}

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_some(v)
    } else {
        s.serialize_none()
    }
}

/// Outcome of evaluating one association at full load.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRecord {
    /// `None` for the macro-only baseline.
    pub offsets: Option<OffsetVector>,
    pub association: Association,
    pub solve: SolveResult,
    /// Sum of full-load powers; `+inf` (`null` in JSON) unless converged.
    #[serde(serialize_with = "finite_or_null")]
    pub objective: f64,
    pub feasible: bool,
}

impl EvalRecord {
    pub fn from_association(
        scenario: &Scenario,
        association: Association,
        offsets: Option<OffsetVector>,
        solver: &SolverOptions,
        warm_start: Option<&[f64]>,
    ) -> Self {
        let solve = solve_power_with(
            scenario,
            &association,
            &LoadVector::full(scenario.num_cells()),
            solver,
            warm_start,
        );
        Self {
            offsets,
            association,
            objective: solve.objective(),
            feasible: solve.feasible,
            solve,
        }
    }

    /// Per-cell energy at full load (`p_i`, zero for cells serving nobody).
    pub fn per_cell_energy(&self) -> Vec<f64> {
        self.solve.power.to_vec()
    }
}

/// Associates under `offsets` and solves at full load. Not memoized.
pub fn evaluate(scenario: &Scenario, offsets: &OffsetVector, set: &OffsetSet, solver: &SolverOptions) -> Result<EvalRecord> {
    let association = associate(scenario, offsets, set, true)?;
    Ok(EvalRecord::from_association(scenario, association, Some(offsets.clone()), solver, None))
}

/// Memoizing evaluator bound to one scenario and offset set. Results are
/// cached per offset vector, and power solves per association, since many
/// offset vectors induce the same association.
pub struct Evaluator<'a> {
    scenario: &'a Scenario,
    offset_set: &'a OffsetSet,
    solver: &'a SolverOptions,
    cache: HashMap<OffsetVector, Arc<EvalRecord>>,
    solves: HashMap<Vec<usize>, SolveResult>,
}

impl<'a> Evaluator<'a> {
    pub fn new(scenario: &'a Scenario, offset_set: &'a OffsetSet, solver: &'a SolverOptions) -> Self {
        Self {
            scenario,
            offset_set,
            solver,
            cache: HashMap::new(),
            solves: HashMap::new(),
        }
    }

    pub fn evaluate(&mut self, offsets: &OffsetVector) -> Result<Arc<EvalRecord>> {
        Ok(self.evaluate_all(std::slice::from_ref(offsets), None)?.remove(0))
    }

    /// Evaluates every vector, solving unseen associations in parallel.
    pub fn evaluate_all(&mut self, vectors: &[OffsetVector], warm_start: Option<&[f64]>) -> Result<Vec<Arc<EvalRecord>>> {
        let mut missing: Vec<&OffsetVector> = vectors.iter().filter(|x| !self.cache.contains_key(*x)).collect();
        missing.sort();
        missing.dedup();
        let (scenario, set, solver) = (self.scenario, self.offset_set, self.solver);
        let associations: Vec<Association> = missing
            .iter()
            .map(|x| associate(scenario, x, set, true))
            .collect::<Result<_>>()?;

        let mut unsolved: Vec<&Association> = associations
            .iter()
            .filter(|a| !self.solves.contains_key(a.serving()))
            .collect();
        unsolved.sort_by(|a, b| a.serving().cmp(b.serving()));
        unsolved.dedup_by(|a, b| a.serving() == b.serving());
        let fresh: Vec<SolveResult> = unsolved
            .par_iter()
            .map(|a| solve_power_with(scenario, a, &LoadVector::full(scenario.num_cells()), solver, warm_start))
            .collect();
        for (a, solve) in unsolved.iter().zip(fresh) {
            self.solves.insert(a.serving().to_vec(), solve);
        }

        for (x, association) in missing.into_iter().zip(associations) {
            let solve = self.solves[association.serving()].clone();
            let record = EvalRecord {
                offsets: Some(x.clone()),
                association,
                objective: solve.objective(),
                feasible: solve.feasible,
                solve,
            };
            self.cache.insert(x.clone(), Arc::new(record));
        }
        Ok(vectors.iter().map(|x| Arc::clone(&self.cache[x])).collect())
    }

    /// Number of distinct vectors evaluated so far.
    pub fn evaluations(&self) -> usize {
        self.cache.len()
    }

    /// Number of distinct associations solved so far.
    pub fn solves(&self) -> usize {
        self.solves.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighbor {
    pub offsets: OffsetVector,
    /// LPN position that differs from the origin vector.
    pub position: usize,
}

/// Vectors one level away from `x` in exactly one position, ordered by
/// position and then by the downward move before the upward one.
pub fn neighborhood(x: &OffsetVector, num_levels: usize) -> Vec<Neighbor> {
    let mut out = Vec::with_capacity(2 * x.len());
    for (position, &level) in x.levels().iter().enumerate() {
        let mut push = |new_level: usize| {
            let mut levels = x.levels().to_vec();
            levels[position] = new_level;
            out.push(Neighbor {
                offsets: OffsetVector::new(levels),
                position,
            });
        };
        if level > 0 {
            push(level - 1);
        }
        if level + 1 < num_levels {
            push(level + 1);
        }
    }
    out
}

/// One row of the search trace; serialized as a JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub moved_position: usize,
    /// Objective of the vector moved to; `None` if its solve diverged.
    pub candidate_energy: Option<f64>,
    /// Best feasible objective after this iteration, if any.
    pub best_energy: Option<f64>,
    /// Consecutive non-improving iterations.
    pub k: usize,
    /// Remaining tenure per position at the end of the iteration.
    pub tabu_snapshot: Vec<usize>,
}

pub fn trace_to_jsonl(trace: &[TraceEntry]) -> Result<String> {
    let mut out = String::new();
    for entry in trace {
        out.push_str(&serde_json::to_string(entry)?);
        out.push('\n');
    }
    Ok(out)
}

/// Mutable search state.
#[derive(Debug, Clone)]
pub struct TsoState {
    pub current: OffsetVector,
    pub best: OffsetVector,
    pub best_record: Arc<EvalRecord>,
    /// Whether `best` satisfies every power limit.
    pub best_feasible: bool,
    pub tabu: Vec<usize>,
    pub stall: usize,
}

impl TsoState {
    /// Objective the aspiration and best-update rules compare against.
    pub fn best_energy(&self) -> f64 {
        if self.best_feasible {
            self.best_record.objective
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TsoStatus {
    Solved,
    /// No evaluated vector met the power limits; the record is the best
    /// infeasible one seen.
    NoFeasibleSolution,
}

#[derive(Debug, Clone)]
pub struct TsoResult {
    pub status: TsoStatus,
    /// `None` when the scenario has no LPNs and the macro-only evaluation
    /// was returned.
    pub best: Option<OffsetVector>,
    pub record: Arc<EvalRecord>,
    pub trace: Vec<TraceEntry>,
    /// Distinct offset vectors solved.
    pub evaluations: usize,
}

impl TsoResult {
    pub fn best_energy(&self) -> f64 {
        self.record.objective
    }

    pub fn best_power(&self) -> &[f64] {
        &self.record.solve.power
    }

    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn is_solved(&self) -> bool {
        self.status == TsoStatus::Solved
    }
}

pub fn initial_vector(init: &InitStrategy, num_lpns: usize, num_levels: usize) -> OffsetVector {
    match init {
        InitStrategy::ZeroOffset => OffsetVector::all_zero(num_lpns),
        InitStrategy::MaxOffset => OffsetVector::new(vec![num_levels.saturating_sub(1); num_lpns]),
        InitStrategy::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            OffsetVector::new((0..num_lpns).map(|_| rng.random_range(0..num_levels)).collect())
        }
    }
}

/// Runs the tabu search on `scenario` from `config.init`.
pub fn optimize(scenario: &Scenario, config: &TsoConfig) -> Result<TsoResult> {
    optimize_from(scenario, config, std::slice::from_ref(&config.init))
}

/// Runs one tabu search per start (ignoring `config.init`) and keeps the
/// best outcome; earlier starts win ties. Evaluations are shared and the
/// traces are concatenated in start order.
pub fn optimize_from(scenario: &Scenario, config: &TsoConfig, starts: &[InitStrategy]) -> Result<TsoResult> {
    config.validate()?;
    if starts.is_empty() {
        return Err(Error::InvalidTsoConfig("no start strategies given".into()));
    }
    let m = scenario.num_lpns();
    let set = &config.offset_set;

    if m == 0 {
        let nl = macro_only(scenario, &config.solver)?;
        return Ok(TsoResult {
            status: if nl.feasible { TsoStatus::Solved } else { TsoStatus::NoFeasibleSolution },
            best: None,
            record: Arc::new(nl),
            trace: Vec::new(),
            evaluations: 1,
        });
    }

    let mut evaluator = Evaluator::new(scenario, set, &config.solver);
    let mut trace = Vec::new();
    let mut outcome: Option<(bool, OffsetVector, Arc<EvalRecord>)> = None;
    for init in starts {
        let (feasible, best, record) = search(&mut evaluator, config, initial_vector(init, m, set.len()), &mut trace)?;
        let better = match &outcome {
            None => true,
            Some((f, _, r)) => (feasible && !f) || (feasible == *f && record.objective < r.objective),
        };
        if better {
            outcome = Some((feasible, best, record));
        }
    }
    let (feasible, best, record) = outcome.expect("at least one start");
    let evaluations = evaluator.evaluations();
    Ok(TsoResult {
        status: if feasible { TsoStatus::Solved } else { TsoStatus::NoFeasibleSolution },
        best: Some(best),
        record,
        trace,
        evaluations,
    })
}

fn distance(a: &OffsetVector, b: &OffsetVector) -> usize {
    a.levels().iter().zip(b.levels()).map(|(x, y)| x.abs_diff(*y)).sum()
}

/// One tabu search from `start`, appending to `trace`. Returns the best
/// feasible vector, or the least-bad infeasible one with `false`.
fn search(
    evaluator: &mut Evaluator,
    config: &TsoConfig,
    start: OffsetVector,
    trace: &mut Vec<TraceEntry>,
) -> Result<(bool, OffsetVector, Arc<EvalRecord>)> {
    let set = &config.offset_set;
    let m = start.len();
    let start_record = evaluator.evaluate(&start)?;
    let origin = start.clone();
    let mut least_bad = Arc::clone(&start_record);
    let mut state = TsoState {
        current: start.clone(),
        best: start,
        best_feasible: start_record.feasible,
        best_record: start_record,
        tabu: vec![0; m],
        stall: 0,
    };
    let mut current_power = state.best_record.solve.power.to_vec();
    let mut visits: HashMap<OffsetVector, usize> = HashMap::from([(state.current.clone(), 1)]);

    while state.stall <= config.alpha {
        let neighbors = neighborhood(&state.current, set.len());
        if neighbors.is_empty() {
            break;
        }
        let vectors: Vec<OffsetVector> = neighbors.iter().map(|n| n.offsets.clone()).collect();
        let warm = config.warm_start.then_some(current_power.as_slice());
        let records = evaluator.evaluate_all(&vectors, warm)?;

        let best_energy = state.best_energy();
        let admissible = |i: usize| state.tabu[neighbors[i].position] == 0 || records[i].objective < best_energy;
        // Feasible candidates rank first. Exact objective ties (same
        // association) go to the least-visited vector, then to the one
        // farthest from the start, so plateaus are crossed rather than filled.
        let visits_of = |i: usize| visits.get(&vectors[i]).copied().unwrap_or(0);
        let spread = |i: usize| distance(&vectors[i], &origin);
        let chosen = (0..neighbors.len())
            .filter(|&i| admissible(i))
            .min_by(|&a, &b| {
                records[b]
                    .feasible
                    .cmp(&records[a].feasible)
                    .then(records[a].objective.total_cmp(&records[b].objective))
                    .then(visits_of(a).cmp(&visits_of(b)))
                    .then(spread(b).cmp(&spread(a)))
            })
            .unwrap_or_else(|| {
                (0..neighbors.len())
                    .min_by(|&a, &b| {
                        state.tabu[neighbors[a].position]
                            .cmp(&state.tabu[neighbors[b].position])
                            .then(records[a].objective.total_cmp(&records[b].objective))
                    })
                    .expect("neighborhood is nonempty")
            });

        let position = neighbors[chosen].position;
        let record = &records[chosen];
        state.tabu[position] = config.beta;

        if record.feasible && record.objective < best_energy {
            state.best = vectors[chosen].clone();
            state.best_record = Arc::clone(record);
            state.best_feasible = true;
            state.stall = 0;
        } else {
            state.stall += 1;
        }
        if !record.feasible && record.objective < least_bad.objective {
            least_bad = Arc::clone(record);
        }

        for t in state.tabu.iter_mut().filter(|t| **t > 0) {
            *t -= 1;
        }
        state.current = vectors[chosen].clone();
        *visits.entry(state.current.clone()).or_insert(0) += 1;
        if record.solve.converged() {
            current_power = record.solve.power.to_vec();
        }

        trace.push(TraceEntry {
            iteration: trace.len() + 1,
            moved_position: position,
            candidate_energy: record.objective.is_finite().then_some(record.objective),
            best_energy: state.best_feasible.then_some(state.best_record.objective),
            k: state.stall,
            tabu_snapshot: state.tabu.clone(),
        });
    }

    Ok(if state.best_feasible {
        (true, state.best, state.best_record)
    } else {
        let offsets = least_bad.offsets.clone().unwrap_or(state.best);
        (false, offsets, least_bad)
    })
}

fn macro_only(scenario: &Scenario, solver: &SolverOptions) -> Result<EvalRecord> {
    let set = OffsetSet::on_off();
    let association = associate(scenario, &OffsetVector::all_zero(scenario.num_lpns()), &set, false)?;
    Ok(EvalRecord::from_association(scenario, association, None, solver, None))
}

/// Zero-offset, maximal-offset and macro-only evaluations.
#[derive(Debug, Clone, Serialize)]
pub struct Baselines {
    pub zo: EvalRecord,
    pub mo: EvalRecord,
    pub nl: EvalRecord,
}

pub fn evaluate_baselines(scenario: &Scenario, offset_set: &OffsetSet, solver: &SolverOptions) -> Result<Baselines> {
    let m = scenario.num_lpns();
    Ok(Baselines {
        zo: evaluate(scenario, &OffsetVector::all_zero(m), offset_set, solver)?,
        mo: evaluate(scenario, &OffsetVector::all_max(m, offset_set), offset_set, solver)?,
        nl: macro_only(scenario, solver)?,
    })
}

/// Result of enumerating every offset vector.
#[derive(Debug, Clone)]
pub struct ExhaustiveResult {
    /// Minimum-objective feasible record, first in lexicographic order on ties.
    pub best: Option<EvalRecord>,
    pub evaluated: usize,
}

/// All `|S|^m` offset vectors in lexicographic order.
pub fn all_offset_vectors(num_lpns: usize, num_levels: usize) -> Result<Vec<OffsetVector>> {
    let total = (0..num_lpns).try_fold(1usize, |acc, _| acc.checked_mul(num_levels).filter(|t| *t <= MAX_EXHAUSTIVE));
    let total = total.ok_or_else(|| {
        Error::TooLarge(format!("{num_levels}^{num_lpns} offset vectors exceeds {MAX_EXHAUSTIVE}"))
    })?;
    Ok((0..total)
        .map(|mut code| {
            let mut levels = vec![0; num_lpns];
            for slot in levels.iter_mut().rev() {
                *slot = code % num_levels;
                code /= num_levels;
            }
            OffsetVector::new(levels)
        })
        .collect())
}

/// Evaluates every offset vector and returns the best feasible one.
pub fn exhaustive_search(scenario: &Scenario, offset_set: &OffsetSet, solver: &SolverOptions) -> Result<ExhaustiveResult> {
    let vectors = all_offset_vectors(scenario.num_lpns(), offset_set.len())?;
    let records: Vec<EvalRecord> = vectors
        .par_iter()
        .map(|x| evaluate(scenario, x, offset_set, solver))
        .collect::<Result<_>>()?;
    let evaluated = records.len();
    let best = records
        .into_iter()
        .filter(|r| r.feasible)
        .reduce(|best, r| if r.objective < best.objective { r } else { best });
    Ok(ExhaustiveResult { best, evaluated })
}
