//! Generates the default 7-site layout and writes it as JSON.
//!
//! ```text
//! cargo run --example generate_scenario -- [seed] [output.json]
//! ```

use hetnet_range::{CellKind, ScenarioConfig};

fn main() -> hetnet_range::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map_or(1, |s| s.parse().expect("seed must be an integer"));
    let output = args.next();

    let config = ScenarioConfig {
        rng_seed: seed,
        ..ScenarioConfig::default()
    };
    let scenario = config.generate()?;

    println!(
        "{} cells ({} macro, {} LPN), {} UEs, M = {}, noise {:.3e} mW per resource unit",
        scenario.num_cells(),
        scenario.num_macros(),
        scenario.num_lpns(),
        scenario.num_ues(),
        scenario.num_resource_units(),
        scenario.noise_power()
    );
    for cell in scenario.cells() {
        let strongest = (0..scenario.num_ues())
            .filter(|&j| {
                (0..scenario.num_cells()).all(|i| scenario.gain(i, j) <= scenario.gain(cell.id, j))
            })
            .count();
        let kind = match cell.kind {
            CellKind::Macro => "macro",
            CellKind::Lpn => "lpn",
        };
        println!(
            "  cell {:>2} {kind:<5} at ({:>7.1}, {:>7.1}) m, strongest link for {strongest} UEs",
            cell.id, cell.position.x, cell.position.y
        );
    }

    if let Some(path) = output {
        scenario.save(&path)?;
        println!("wrote {path}");
    }
    Ok(())
}
