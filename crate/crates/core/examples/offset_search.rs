//! Runs the tabu search over LPN range offsets on one generated scenario and
//! compares it with the zero-offset, maximal-offset and macro-only baselines.
//!
//! ```text
//! cargo run --release --example offset_search -- [demand_bps] [seed]
//! ```

use std::time::Instant;

use hetnet_range::tso::{evaluate_baselines, optimize_from, EvalRecord, InitStrategy, TsoConfig};
use hetnet_range::ScenarioConfig;

fn show(name: &str, record: &EvalRecord) {
    if record.feasible {
        println!("  {name:<3} {:>10.4} mW", record.objective);
    } else if record.solve.converged() {
        println!("  {name:<3} {:>10.4} mW (power limit exceeded)", record.objective);
    } else {
        println!("  {name:<3}   diverged");
    }
}

fn main() -> hetnet_range::Result<()> {
    let mut args = std::env::args().skip(1);
    let demand: f64 = args.next().map_or(300e3, |s| s.parse().expect("demand in bps"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));

    let scenario = ScenarioConfig {
        demand,
        rng_seed: seed,
        ..ScenarioConfig::default()
    }
    .generate()?;
    let config = TsoConfig::for_lpns(scenario.num_lpns());
    println!(
        "{} LPNs, |S| = {}, alpha = {}, beta = {}, demand {} kbps",
        scenario.num_lpns(),
        config.offset_set.len(),
        config.alpha,
        config.beta,
        demand / 1e3
    );

    let baselines = evaluate_baselines(&scenario, &config.offset_set, &config.solver)?;
    let start = Instant::now();
    let result = optimize_from(&scenario, &config, &[InitStrategy::ZeroOffset, InitStrategy::MaxOffset])?;
    let elapsed = start.elapsed();

    println!("total full-load power:");
    show("OO", &result.record);
    show("ZO", &baselines.zo);
    show("MO", &baselines.mo);
    show("NL", &baselines.nl);
    if let Some(best) = &result.best {
        println!("offsets (dB): {:?}", best.to_db(&config.offset_set));
    }
    println!(
        "{} iterations, {} offset vectors evaluated, {:.2?}",
        result.iterations(),
        result.evaluations,
        elapsed
    );
    if baselines.zo.feasible && result.record.feasible {
        let saving = 100.0 * (baselines.zo.objective - result.best_energy()) / baselines.zo.objective;
        println!("saving over zero offset: {saving:.1}%");
    }
    Ok(())
}
