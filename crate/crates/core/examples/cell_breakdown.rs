//! Per-cell full-load power under zero offset and optimized offsets for one
//! scenario, split into macro and LPN totals.
//!
//! ```text
//! cargo run --release --example cell_breakdown -- [demand_bps] [seed]
//! ```

use hetnet_range::experiment::TsoSettings;
use hetnet_range::tso::{evaluate, optimize_from};
use hetnet_range::{CellKind, OffsetVector, ScenarioConfig};

fn main() -> hetnet_range::Result<()> {
    let mut args = std::env::args().skip(1);
    let demand: f64 = args.next().map_or(450e3, |s| s.parse().expect("demand in bps"));
    let seed: u64 = args.next().map_or(3, |s| s.parse().expect("seed"));

    let scenario = ScenarioConfig {
        demand,
        rng_seed: seed,
        ..ScenarioConfig::default()
    }
    .generate()?;
    let settings = TsoSettings::default();
    let set = settings.offset_set()?;
    let config = settings.config(scenario.num_lpns(), &Default::default(), seed)?;

    let zo = evaluate(&scenario, &OffsetVector::all_zero(scenario.num_lpns()), &set, &config.solver)?;
    let oo = optimize_from(&scenario, &config, &settings.starts(seed))?;
    let (zo_cells, oo_cells) = (zo.per_cell_energy(), oo.record.per_cell_energy());

    println!("demand {} kbps, seed {seed}; ZO feasible: {}, OO feasible: {}", demand / 1e3, zo.feasible, oo.record.feasible);
    println!("{:>4} {:<5} {:>5} {:>12} {:>5} {:>12}", "cell", "kind", "ZO UEs", "ZO mW", "OO UEs", "OO mW");
    let mut totals = [[0.0; 2]; 2];
    for cell in scenario.cells() {
        let kind = usize::from(cell.kind == CellKind::Lpn);
        totals[kind][0] += zo_cells[cell.id];
        totals[kind][1] += oo_cells[cell.id];
        println!(
            "{:>4} {:<5} {:>5} {:>12.4} {:>5} {:>12.4}",
            cell.id,
            if kind == 0 { "macro" } else { "lpn" },
            zo.association.served_by(cell.id).len(),
            zo_cells[cell.id],
            oo.record.association.served_by(cell.id).len(),
            oo_cells[cell.id]
        );
    }
    println!("macro total: ZO {:.4} mW, OO {:.4} mW", totals[0][0], totals[0][1]);
    println!("LPN total:   ZO {:.4} mW, OO {:.4} mW", totals[1][0], totals[1][1]);
    Ok(())
}
