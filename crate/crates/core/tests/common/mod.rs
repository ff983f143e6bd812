#![allow(dead_code)]

use std::f64::consts::LN_2;

use hetnet_range::association::associate_db;
use hetnet_range::{solve_power, Association, Cell, CellKind, LoadVector, Point, Scenario, SolveStatus, UserEquipment};
use rand::Rng;

pub const LOOSE_LIMIT: f64 = 1e12;

pub fn cell(id: usize, kind: CellKind, power_limit: f64) -> Cell {
    Cell {
        id,
        kind,
        position: Point::new(id as f64 * 100.0, 0.0),
        antenna_height: 10.0,
        power_limit,
        pilot_power: 1.0,
    }
}

/// UE whose normalized demand (M = 1, B = 1) is `r` nats.
pub fn ue(id: usize, r: f64) -> UserEquipment {
    UserEquipment {
        id,
        position: Point::new(id as f64, 1.0),
        demand: r / LN_2,
    }
}

pub fn single_cell(r: f64, gain: f64, noise: f64) -> Scenario {
    Scenario::new(vec![cell(0, CellKind::Macro, LOOSE_LIMIT)], vec![ue(0, r)], vec![gain], noise, 1, 1.0).unwrap()
}

/// Two cells with one UE each, unit own gain, `cross` to the other UE.
pub fn symmetric_pair(cross: f64) -> Scenario {
    Scenario::new(
        vec![cell(0, CellKind::Macro, LOOSE_LIMIT), cell(1, CellKind::Macro, LOOSE_LIMIT)],
        vec![ue(0, LN_2), ue(1, LN_2)],
        vec![1.0, cross, cross, 1.0],
        1.0,
        1,
        1.0,
    )
    .unwrap()
}

/// A random instance with `1..=max_cells` cells, at most `max_ues` UEs, every
/// cell serving at least one UE and a converging full-load solve.
pub fn random_feasible(rng: &mut impl Rng, max_cells: usize, max_ues: usize) -> (Scenario, Association) {
    loop {
        let n = rng.random_range(1..=max_cells);
        let u = rng.random_range(n..=max_ues.max(n));
        let serving: Vec<usize> = (0..u).map(|j| if j < n { j } else { rng.random_range(0..n) }).collect();
        let mut gains = vec![0.0; n * u];
        for i in 0..n {
            for j in 0..u {
                gains[i * u + j] = if serving[j] == i {
                    rng.random_range(0.2..1.0)
                } else {
                    rng.random_range(0.0..0.2)
                };
            }
        }
        let cells = (0..n)
            .map(|i| cell(i, if i == 0 { CellKind::Macro } else { CellKind::Lpn }, LOOSE_LIMIT))
            .collect();
        let ues = (0..u).map(|j| ue(j, rng.random_range(0.05..0.6))).collect();
        let noise = rng.random_range(0.01..1.0);
        let scenario = Scenario::new(cells, ues, gains, noise, 1, 1.0).unwrap();
        let assoc = Association::from_serving(&scenario, serving).unwrap();
        if solve_power(&scenario, &assoc, &LoadVector::full(n)).status == SolveStatus::Converged {
            return (scenario, assoc);
        }
    }
}

/// Random `1 macro + lpns` scenario with positions on a line and gains
/// decaying with distance; association follows pilots with zero offsets.
pub fn random_small_hetnet(rng: &mut impl Rng, lpns: usize, ues: usize) -> Scenario {
    let n = 1 + lpns;
    let mut cells = vec![Cell {
        pilot_power: 4.0,
        ..cell(0, CellKind::Macro, 4.0)
    }];
    for i in 1..n {
        cells.push(Cell {
            position: Point::new(rng.random_range(-300.0..300.0), rng.random_range(-300.0..300.0)),
            ..cell(i, CellKind::Lpn, 1.0)
        });
    }
    cells[0].position = Point::new(0.0, 0.0);
    let users: Vec<UserEquipment> = (0..ues)
        .map(|j| UserEquipment {
            id: j,
            position: Point::new(rng.random_range(-400.0..400.0), rng.random_range(-400.0..400.0)),
            demand: rng.random_range(0.1..0.4) / LN_2,
        })
        .collect();
    let mut gains = Vec::with_capacity(n * ues);
    for c in &cells {
        for u in &users {
            let d = c.position.distance(&u.position).max(10.0) / 100.0;
            let scale = if c.kind == CellKind::Macro { 1.0 } else { 0.5 };
            gains.push(scale * d.powf(-3.5));
        }
    }
    Scenario::new(cells, users, gains, 1e-3, 1, 1.0).unwrap()
}

pub fn zero_offset_association(scenario: &Scenario) -> Association {
    associate_db(scenario, &vec![0.0; scenario.num_lpns()]).unwrap()
}
