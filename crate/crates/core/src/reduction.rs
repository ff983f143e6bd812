//! Maximum independent set as offset optimization.
//!
//! For a graph on `n` nodes the gadget has `n` macros, `n` LPNs and `n` UEs.
//! UE `i` hears macro `i` with gain `1/n^2`, LPN `i` with gain 1 and every
//! LPN adjacent to node `i` with gain `epsilon`; all other gains are 0. Noise
//! is 1, every demand is 1 bit/s over one 1 Hz resource unit (a load equation
//! of `log2(1 + SINR) = 1` at full load), LPN power limits are 1 and macro
//! limits are [`UNBOUNDED_POWER`]. LPN offsets are drawn from `{-inf, 0}`.
//!
//! An active LPN alone needs power exactly 1, two adjacent active LPNs push
//! each other over the limit, and each macro-served UE costs about `n^2`, so
//! the cheapest feasible activation pattern is a maximum independent set.

use std::fmt::Write as _;

use serde::Serialize;

use crate::association::{OffsetSet, OffsetVector};
use crate::error::{Error, Result};
use crate::load::SolverOptions;
use crate::model::{Cell, CellKind, Point, Scenario, UserEquipment};
use crate::tso::{exhaustive_search, EvalRecord};

/// Stand-in for an unlimited macro power budget, mW.
pub const UNBOUNDED_POWER: f64 = 1e12;

pub const DEFAULT_EPSILON: f64 = 1e-4;

/// Largest graph [`mis_bruteforce`] accepts.
pub const MAX_BRUTEFORCE_NODES: usize = 20;

/// Largest graph [`exhaustive_offset_search`] accepts.
pub const MAX_GADGET_SEARCH_NODES: usize = 16;

/// Simple undirected graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<u64>,
}

impl Graph {
    /// Builds a graph; duplicate edges are merged and endpoints normalized to
    /// `(low, high)`.
    pub fn new(num_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if num_nodes < 2 {
            return Err(Error::InvalidGraph(format!("need at least 2 nodes, got {num_nodes}")));
        }
        if num_nodes > 64 {
            return Err(Error::InvalidGraph(format!("at most 64 nodes are supported, got {num_nodes}")));
        }
        let mut list = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop on node {u}")));
            }
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) out of range for {num_nodes} nodes")));
            }
            list.push((u.min(v), u.max(v)));
        }
        list.sort_unstable();
        list.dedup();
        let mut adjacency = vec![0u64; num_nodes];
        for &(u, v) in &list {
            adjacency[u] |= 1 << v;
            adjacency[v] |= 1 << u;
        }
        Ok(Self {
            num_nodes,
            edges: list,
            adjacency,
        })
    }

    /// Parses one `u v` pair per line (0-indexed). Blank lines and lines
    /// starting with `#` are skipped. The node count is the larger of
    /// `num_nodes` and one past the largest index seen.
    pub fn parse_edge_list(text: &str, num_nodes: Option<usize>) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::InvalidGraph(format!("line {}: {s:?} is not a node index", lineno + 1)))
            };
            match fields.as_slice() {
                [u, v] => edges.push((parse(u)?, parse(v)?)),
                _ => {
                    return Err(Error::InvalidGraph(format!(
                        "line {}: expected `u v`, got {line:?}",
                        lineno + 1
                    )))
                }
            }
        }
        let seen = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        Self::new(num_nodes.unwrap_or(0).max(seen), edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u] & (1 << v) != 0
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].count_ones() as usize
    }

    pub fn is_independent(&self, nodes: &[usize]) -> bool {
        nodes
            .iter()
            .enumerate()
            .all(|(a, &u)| nodes[a + 1..].iter().all(|&v| !self.has_edge(u, v)))
    }
}

/// HetNet instance encoding a graph.
#[derive(Debug, Clone)]
pub struct GadgetInstance {
    pub graph: Graph,
    pub scenario: Scenario,
    pub epsilon: f64,
    /// `{-inf, 0}`.
    pub offset_set: OffsetSet,
}

impl GadgetInstance {
    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    /// Offset vector activating exactly the LPNs in `active`.
    pub fn activation(&self, active: &[usize]) -> OffsetVector {
        let mut levels = vec![0; self.num_nodes()];
        for &i in active {
            levels[i] = 1;
        }
        OffsetVector::new(levels)
    }

    /// LPNs at offset 0 in `offsets`.
    pub fn active_lpns(offsets: &OffsetVector) -> Vec<usize> {
        offsets
            .levels()
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == 1)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Builds the gadget for `graph`. `epsilon` must lie in `(0, 1/n^2)` so that
/// a disabled LPN's UE falls back to its own macro rather than a neighbor LPN.
pub fn build_gadget(graph: &Graph, epsilon: f64) -> Result<GadgetInstance> {
    let n = graph.num_nodes();
    let macro_gain = 1.0 / (n * n) as f64;
    if !(epsilon > 0.0 && epsilon < macro_gain) {
        return Err(Error::InvalidGraph(format!(
            "epsilon must be in (0, 1/n^2 = {macro_gain}), got {epsilon}"
        )));
    }

    let cell = |id: usize, kind: CellKind, power_limit: f64| Cell {
        id,
        kind,
        position: Point::new(id as f64, 0.0),
        antenna_height: 1.0,
        power_limit,
        pilot_power: 1.0,
    };
    let mut cells: Vec<Cell> = (0..n).map(|i| cell(i, CellKind::Macro, UNBOUNDED_POWER)).collect();
    cells.extend((0..n).map(|i| cell(n + i, CellKind::Lpn, 1.0)));
    let ues = (0..n)
        .map(|j| UserEquipment {
            id: j,
            position: Point::new(j as f64, 0.0),
            demand: 1.0,
        })
        .collect();

    let mut gains = vec![0.0; 2 * n * n];
    for i in 0..n {
        gains[i * n + i] = macro_gain;
        gains[(n + i) * n + i] = 1.0;
        for j in 0..n {
            if graph.has_edge(i, j) {
                gains[(n + i) * n + j] = epsilon;
            }
        }
    }

    Ok(GadgetInstance {
        graph: graph.clone(),
        scenario: Scenario::new(cells, ues, gains, 1.0, 1, 1.0)?,
        epsilon,
        offset_set: OffsetSet::on_off(),
    })
}

/// Size and lexicographically-first member of the maximum independent sets.
pub fn mis_bruteforce(graph: &Graph) -> Result<(usize, Vec<usize>)> {
    let n = graph.num_nodes();
    if n > MAX_BRUTEFORCE_NODES {
        return Err(Error::TooLarge(format!("{n} nodes (max {MAX_BRUTEFORCE_NODES})")));
    }
    let mut best: (usize, u64) = (0, 0);
    for mask in 0u64..(1 << n) {
        let size = mask.count_ones() as usize;
        if size <= best.0 && mask != 0 {
            continue;
        }
        let independent = (0..n).all(|u| mask & (1 << u) == 0 || graph.adjacency[u] & mask == 0);
        if independent && size > best.0 {
            best = (size, mask);
        }
    }
    let members = (0..n).filter(|&u| best.1 & (1 << u) != 0).collect();
    Ok((best.0, members))
}

#[derive(Debug, Clone)]
pub struct GadgetOptimum {
    pub offsets: OffsetVector,
    pub active: Vec<usize>,
    pub energy: f64,
    pub record: EvalRecord,
}

/// Solves every activation pattern and returns the cheapest feasible one.
pub fn exhaustive_offset_search(gadget: &GadgetInstance, solver: &SolverOptions) -> Result<GadgetOptimum> {
    let n = gadget.num_nodes();
    if n > MAX_GADGET_SEARCH_NODES {
        return Err(Error::TooLarge(format!("{n} nodes (max {MAX_GADGET_SEARCH_NODES})")));
    }
    let best = exhaustive_search(&gadget.scenario, &gadget.offset_set, solver)?
        .best
        .expect("the all-macro pattern is always feasible");
    let offsets = best.offsets.clone().expect("offset-driven record");
    Ok(GadgetOptimum {
        active: GadgetInstance::active_lpns(&offsets),
        energy: best.objective,
        offsets,
        record: best,
    })
}

/// Lower bound on the total power with `k` active LPNs and the upper bound
/// with `k + 1`, both in the gadget's units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerBounds {
    pub k: usize,
    /// `k + (n - k) n^2`.
    pub lower_k: f64,
    /// `k + (n - k) n^2 + 1 - n^2 + epsilon (n - k - 1) n^2 (k + 1)`.
    pub upper_k_plus_1: f64,
    /// `upper_k_plus_1 < lower_k`: one more active LPN always saves power.
    pub holds: bool,
}

pub fn power_bounds(n: usize, k: usize, epsilon: f64) -> PowerBounds {
    let (nf, kf) = (n as f64, k as f64);
    let n2 = nf * nf;
    let lower_k = kf + (nf - kf) * n2;
    let upper_k_plus_1 = lower_k + (1.0 - n2 + epsilon * (nf - kf - 1.0) * n2 * (kf + 1.0));
    PowerBounds {
        k,
        lower_k,
        upper_k_plus_1,
        holds: upper_k_plus_1 < lower_k,
    }
}

pub fn verify_bounds(gadget: &GadgetInstance, k: usize) -> PowerBounds {
    power_bounds(gadget.num_nodes(), k, gadget.epsilon)
}

/// Interval containing the total power of any feasible pattern with exactly
/// `k` active LPNs: no interference at best, `k` interferers per macro UE at worst.
pub fn total_power_range(n: usize, k: usize, epsilon: f64) -> (f64, f64) {
    let (nf, kf) = (n as f64, k as f64);
    let n2 = nf * nf;
    (kf + (nf - kf) * n2, kf + (nf - kf) * n2 * (1.0 + kf * epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::association::associate;
    use crate::load::{solve_power, LoadVector};

    fn path3() -> Graph {
        Graph::new(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn graph_validation() {
        assert!(Graph::new(1, []).is_err());
        assert!(Graph::new(3, [(1, 1)]).is_err());
        assert!(Graph::new(3, [(0, 3)]).is_err());
        let g = Graph::new(3, [(1, 0), (0, 1)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
    }

    #[test]
    fn edge_list_parsing() {
        let g = Graph::parse_edge_list("# path\n0 1\n\n1 2\n", None).unwrap();
        assert_eq!(g, path3());
        assert_eq!(Graph::parse_edge_list(&g.to_edge_list(), None).unwrap(), g);
        assert_eq!(Graph::parse_edge_list("", Some(4)).unwrap().num_nodes(), 4);
        assert!(Graph::parse_edge_list("0 1 2\n", None).is_err());
        assert!(Graph::parse_edge_list("0 x\n", None).is_err());
    }

    #[test]
    fn mis_examples() {
        assert_eq!(mis_bruteforce(&path3()).unwrap(), (2, vec![0, 2]));
        let triangle = Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(mis_bruteforce(&triangle).unwrap().0, 1);
        assert_eq!(mis_bruteforce(&Graph::new(5, []).unwrap()).unwrap(), (5, vec![0, 1, 2, 3, 4]));
    }

    #[test]
    fn single_edge_gadget_shape() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let gadget = build_gadget(&g, DEFAULT_EPSILON).unwrap();
        let s = &gadget.scenario;
        assert_eq!((s.num_macros(), s.num_lpns(), s.num_ues()), (2, 2, 2));
        assert_eq!(s.gain(0, 0), 0.25);
        assert_eq!(s.gain(1, 1), 0.25);
        assert_eq!(s.gain(2, 0), 1.0);
        assert_eq!(s.gain(2, 1), DEFAULT_EPSILON);
        assert_eq!(s.gain(3, 0), DEFAULT_EPSILON);
        assert_eq!(s.gain(0, 1), 0.0);
        assert_eq!(s.gains().iter().filter(|&&g| g == DEFAULT_EPSILON).count(), 2);
    }

    #[test]
    fn epsilon_must_stay_below_macro_gain() {
        assert!(build_gadget(&path3(), 0.0).is_err());
        assert!(build_gadget(&path3(), 0.2).is_err());
    }

    #[test]
    fn lone_macro_needs_n_squared() {
        let gadget = build_gadget(&path3(), DEFAULT_EPSILON).unwrap();
        let all_off = gadget.activation(&[]);
        let assoc = associate(&gadget.scenario, &all_off, &gadget.offset_set, true).unwrap();
        let res = solve_power(&gadget.scenario, &assoc, &LoadVector::full(6));
        for i in 0..3 {
            assert!((res.power[i] - 9.0).abs() < 1e-9, "{}", res.power[i]);
        }
    }

    #[test]
    fn zero_offsets_activate_every_lpn() {
        let gadget = build_gadget(&path3(), DEFAULT_EPSILON).unwrap();
        let assoc = associate(&gadget.scenario, &gadget.activation(&[0, 1, 2]), &gadget.offset_set, true).unwrap();
        assert_eq!(assoc.serving(), &[3, 4, 5]);
    }

    #[test]
    fn path_gadget_optimum_is_the_mis() {
        let gadget = build_gadget(&path3(), DEFAULT_EPSILON).unwrap();
        let opt = exhaustive_offset_search(&gadget, &SolverOptions::default()).unwrap();
        assert_eq!(opt.active, vec![0, 2]);
        let (lo, hi) = total_power_range(3, 2, DEFAULT_EPSILON);
        assert!(opt.energy >= lo - 1e-9 && opt.energy <= hi + 1e-9);
    }

    #[test]
    fn triangle_and_edgeless_gadgets() {
        let triangle = Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let opt = exhaustive_offset_search(&build_gadget(&triangle, DEFAULT_EPSILON).unwrap(), &SolverOptions::default()).unwrap();
        assert_eq!(opt.active.len(), 1);

        let edgeless = Graph::new(3, []).unwrap();
        let opt = exhaustive_offset_search(&build_gadget(&edgeless, DEFAULT_EPSILON).unwrap(), &SolverOptions::default()).unwrap();
        assert_eq!(opt.active, vec![0, 1, 2]);
        assert!((opt.energy - 3.0).abs() < 1e-9);
    }

    #[test]
    fn bound_examples() {
        let b = power_bounds(3, 1, 1e-4);
        assert_eq!(b.lower_k, 19.0);
        assert!((b.upper_k_plus_1 - 11.0018).abs() < 1e-12);
        assert!(b.holds);

        for n in 2..10 {
            for k in 0..n {
                let b = power_bounds(n, k, 0.0);
                assert_eq!(b.upper_k_plus_1 - b.lower_k, 1.0 - (n * n) as f64);
            }
            let last = power_bounds(n, n - 1, 1e-4);
            assert!((last.upper_k_plus_1 - n as f64).abs() < 1e-9);
        }
    }
}
