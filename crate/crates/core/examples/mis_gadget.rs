//! Encodes a graph as a HetNet whose minimum-power offset assignment
//! activates exactly a maximum independent set of LPNs.
//!
//! ```text
//! cargo run --example mis_gadget -- [edge_list_file]
//! ```
//! Without a file the 5-cycle is used.

use hetnet_range::reduction::{build_gadget, exhaustive_offset_search, mis_bruteforce, total_power_range, verify_bounds, Graph, DEFAULT_EPSILON};
use hetnet_range::SolverOptions;

fn main() -> hetnet_range::Result<()> {
    let graph = match std::env::args().nth(1) {
        Some(path) => Graph::parse_edge_list(&std::fs::read_to_string(path)?, None)?,
        None => Graph::new(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)])?,
    };
    let n = graph.num_nodes();
    let gadget = build_gadget(&graph, DEFAULT_EPSILON)?;
    println!(
        "graph: {n} nodes, {} edges -> {} cells, {} UEs",
        graph.edges().len(),
        gadget.scenario.num_cells(),
        gadget.scenario.num_ues()
    );

    let optimum = exhaustive_offset_search(&gadget, &SolverOptions::default())?;
    let (size, mis) = mis_bruteforce(&graph)?;
    println!("cheapest pattern activates LPNs {:?}, total power {:.6}", optimum.active, optimum.energy);
    println!("brute-force maximum independent set {mis:?} (size {size})");
    println!(
        "active set independent: {}, same size: {}",
        graph.is_independent(&optimum.active),
        optimum.active.len() == size
    );

    println!("{:>3} {:>14} {:>14} {:>6}   {:>24}", "k", "P_k", "upper P_(k+1)", "holds", "range with k active");
    for k in 0..n {
        let b = verify_bounds(&gadget, k);
        let (lo, hi) = total_power_range(n, k, DEFAULT_EPSILON);
        println!(
            "{k:>3} {:>14.6} {:>14.6} {:>6}   [{lo:.4}, {hi:.4}]",
            b.lower_k, b.upper_k_plus_1, b.holds
        );
    }
    Ok(())
}
