//! Solves the power-load fixed point on a small instance and shows that the
//! total energy `sum nu_i p_i` is smallest when every cell is fully loaded.
//!
//! ```text
//! cargo run --example full_load_power
//! ```

use std::f64::consts::LN_2;

use hetnet_range::load::{energy, load_residual};
use hetnet_range::{solve_power, Association, Cell, CellKind, LoadVector, Point, Scenario, UserEquipment};

fn main() -> hetnet_range::Result<()> {
    let cell = |id: usize| Cell {
        id,
        kind: CellKind::Macro,
        position: Point::new(id as f64 * 500.0, 0.0),
        antenna_height: 30.0,
        power_limit: 100.0,
        pilot_power: 1.0,
    };
    let ue = |id: usize, x: f64| UserEquipment {
        id,
        position: Point::new(x, 0.0),
        demand: 1.0,
    };
    // Two cells, two UEs each. Demands of 1 bps with M = B = 1 normalize to ln 2.
    let scenario = Scenario::new(
        vec![cell(0), cell(1)],
        vec![ue(0, 100.0), ue(1, 200.0), ue(2, 300.0), ue(3, 400.0)],
        vec![
            1.0, 0.6, 0.2, 0.1, //
            0.1, 0.2, 0.6, 1.0,
        ],
        0.1,
        1,
        1.0,
    )?;
    let assoc = Association::from_serving(&scenario, vec![0, 0, 1, 1])?;
    println!("normalized demand per UE: {:.4} nats (ln 2 = {LN_2:.4})", scenario.normalized_demands()[0]);

    println!("{:>6} {:>12} {:>12} {:>12} {:>10}", "load", "p_0", "p_1", "energy", "residual");
    for load in [0.5, 0.6, 0.7, 0.8, 0.9, 1.0] {
        let target = LoadVector::uniform(2, load)?;
        let result = solve_power(&scenario, &assoc, &target);
        if !result.converged() {
            println!("{load:>6.2} diverged");
            continue;
        }
        println!(
            "{load:>6.2} {:>12.6} {:>12.6} {:>12.6} {:>10.1e}",
            result.power[0],
            result.power[1],
            energy(&target, &result.power),
            load_residual(&scenario, &assoc, &result.power, &target)
        );
    }
    Ok(())
}
