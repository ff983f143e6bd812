//! Seeded generation of the hexagonal multi-site scenario.
//!
//! Sites are laid out on a hexagonal lattice in spiral order (center, then
//! ring 1, ring 2, ...), so 7 sites give the usual center-plus-six flower.
//! Each site has one macro at its center and `lpns_per_site` LPNs and
//! `ues_per_site` UEs dropped uniformly in its hexagon.
//!
//! Randomness comes from a single `ChaCha8Rng` seeded with
//! `SeedableRng::seed_from_u64(rng_seed)`. Draw order is fixed: for each site
//! in spiral order, LPN positions then UE positions (rejection sampling in the
//! bounding box), then one `Normal(0, shadowing_stddev)` dB sample per
//! (cell, UE) link in row-major cell-by-UE order.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Cell, CellKind, Point, Scenario, UserEquipment};
use crate::propagation::{linear_gain, noise_per_resource_unit, path_loss_db, COST231_FREQ_RANGE_MHZ};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub num_macro_sites: usize,
    pub lpns_per_site: usize,
    pub ues_per_site: usize,
    /// Meters.
    pub inter_site_distance: f64,
    /// MHz.
    pub carrier_frequency: f64,
    /// dB.
    pub shadowing_stddev: f64,
    /// mW per resource unit.
    pub macro_power_limit: f64,
    /// mW per resource unit.
    pub lpn_power_limit: f64,
    /// Defaults to the macro power limit.
    pub macro_pilot_power: Option<f64>,
    /// Defaults to the LPN power limit.
    pub lpn_pilot_power: Option<f64>,
    pub macro_height: f64,
    pub lpn_height: f64,
    pub ue_height: f64,
    /// Bits per second per UE.
    pub demand: f64,
    /// Hz.
    pub cell_bandwidth: f64,
    /// Hz.
    pub resource_bandwidth: f64,
    /// dBm/Hz.
    pub noise_psd: f64,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_macro_sites: 7,
            lpns_per_site: 2,
            ues_per_site: 30,
            inter_site_distance: 500.0,
            carrier_frequency: 2000.0,
            shadowing_stddev: 8.0,
            macro_power_limit: 200.0,
            lpn_power_limit: 50.0,
            macro_pilot_power: None,
            lpn_pilot_power: None,
            macro_height: 30.0,
            lpn_height: 10.0,
            ue_height: 1.5,
            demand: 300e3,
            cell_bandwidth: 4.5e6,
            resource_bandwidth: 180e3,
            noise_psd: -174.0,
            rng_seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
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

    /// Number of resource units per cell, `cell_bandwidth / resource_bandwidth`.
    pub fn num_resource_units(&self) -> Result<u32> {
        let ratio = self.cell_bandwidth / self.resource_bandwidth;
        let rounded = ratio.round();
        if rounded < 1.0 || (ratio - rounded).abs() > 1e-6 * ratio {
            return Err(Error::InvalidConfig(format!(
                "cell bandwidth {} Hz is not a whole number of {} Hz resource units",
                self.cell_bandwidth, self.resource_bandwidth
            )));
        }
        Ok(rounded as u32)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_macro_sites == 0 {
            return fail("at least one macro site is required".into());
        }
        if self.ues_per_site == 0 {
            return fail("at least one UE per site is required".into());
        }
        let positive = [
            ("inter_site_distance", self.inter_site_distance),
            ("macro_power_limit", self.macro_power_limit),
            ("lpn_power_limit", self.lpn_power_limit),
            ("macro_height", self.macro_height),
            ("lpn_height", self.lpn_height),
            ("ue_height", self.ue_height),
            ("demand", self.demand),
            ("cell_bandwidth", self.cell_bandwidth),
            ("resource_bandwidth", self.resource_bandwidth),
            ("macro_pilot_power", self.macro_pilot_power.unwrap_or(1.0)),
            ("lpn_pilot_power", self.lpn_pilot_power.unwrap_or(1.0)),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return fail(format!("{name} must be positive and finite, got {value}"));
            }
        }
        if !(self.shadowing_stddev >= 0.0 && self.shadowing_stddev.is_finite()) {
            return fail("shadowing_stddev must be non-negative".into());
        }
        if !self.noise_psd.is_finite() {
            return fail("noise_psd must be finite".into());
        }
        let (lo, hi) = COST231_FREQ_RANGE_MHZ;
        if !(lo..=hi).contains(&self.carrier_frequency) {
            return fail(format!(
                "carrier frequency {} MHz is outside the COST-231-HATA range {lo}-{hi} MHz",
                self.carrier_frequency
            ));
        }
        self.num_resource_units()?;
        Ok(())
    }

    pub fn generate(&self) -> Result<Scenario> {
        generate_scenario(self)
    }
}

/// Axial hex coordinates of the first `count` sites in spiral order.
fn spiral_axial(count: usize) -> Vec<(i64, i64)> {
    const DIRECTIONS: [(i64, i64); 6] = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)];
    let mut out = vec![(0, 0)];
    let mut radius = 1;
    while out.len() < count {
        let (mut q, mut r) = (DIRECTIONS[4].0 * radius, DIRECTIONS[4].1 * radius);
        for (dq, dr) in DIRECTIONS {
            for _ in 0..radius {
                out.push((q, r));
                q += dq;
                r += dr;
            }
        }
        radius += 1;
    }
    out.truncate(count);
    out
}

/// Site centers on a lattice with spacing `inter_site_distance`.
pub fn site_centers(count: usize, inter_site_distance: f64) -> Vec<Point> {
    spiral_axial(count)
        .into_iter()
        .map(|(q, r)| {
            let (q, r) = (q as f64, r as f64);
            Point::new(
                inter_site_distance * (q + r / 2.0),
                inter_site_distance * (3f64.sqrt() / 2.0) * r,
            )
        })
        .collect()
}

/// Whether `p` lies in the site hexagon (the lattice Voronoi cell) around `center`.
pub fn in_hexagon(p: Point, center: Point, inter_site_distance: f64) -> bool {
    let (dx, dy) = (p.x - center.x, p.y - center.y);
    let half = inter_site_distance / 2.0;
    let s = 3f64.sqrt() / 2.0;
    dx.abs() <= half && (0.5 * dx + s * dy).abs() <= half && (-0.5 * dx + s * dy).abs() <= half
}

fn sample_in_hexagon(rng: &mut impl Rng, center: Point, inter_site_distance: f64) -> Point {
    let half_width = inter_site_distance / 2.0;
    let half_height = inter_site_distance / 3f64.sqrt();
    loop {
        let p = Point::new(
            center.x + rng.random_range(-half_width..=half_width),
            center.y + rng.random_range(-half_height..=half_height),
        );
        if in_hexagon(p, center, inter_site_distance) {
            return p;
        }
    }
}

/// Generates the scenario described by `config`. Pure in `config`.
pub fn generate_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let centers = site_centers(config.num_macro_sites, config.inter_site_distance);

    let mut cells: Vec<Cell> = centers
        .iter()
        .enumerate()
        .map(|(id, &position)| Cell {
            id,
            kind: CellKind::Macro,
            position,
            antenna_height: config.macro_height,
            power_limit: config.macro_power_limit,
            pilot_power: config.macro_pilot_power.unwrap_or(config.macro_power_limit),
        })
        .collect();

    let mut lpn_positions = Vec::with_capacity(centers.len() * config.lpns_per_site);
    let mut ues = Vec::with_capacity(centers.len() * config.ues_per_site);
    for &center in &centers {
        for _ in 0..config.lpns_per_site {
            lpn_positions.push(sample_in_hexagon(&mut rng, center, config.inter_site_distance));
        }
        for _ in 0..config.ues_per_site {
            ues.push(UserEquipment {
                id: ues.len(),
                position: sample_in_hexagon(&mut rng, center, config.inter_site_distance),
                demand: config.demand,
            });
        }
    }
    for position in lpn_positions {
        cells.push(Cell {
            id: cells.len(),
            kind: CellKind::Lpn,
            position,
            antenna_height: config.lpn_height,
            power_limit: config.lpn_power_limit,
            pilot_power: config.lpn_pilot_power.unwrap_or(config.lpn_power_limit),
        });
    }

    let shadowing = Normal::new(0.0, config.shadowing_stddev)
        .map_err(|e| Error::InvalidConfig(format!("shadowing distribution: {e}")))?;
    let mut gains = Vec::with_capacity(cells.len() * ues.len());
    for cell in &cells {
        for ue in &ues {
            let loss = path_loss_db(
                cell.position.distance(&ue.position),
                config.carrier_frequency,
                cell.antenna_height,
                config.ue_height,
            );
            gains.push(linear_gain(loss, shadowing.sample(&mut rng)));
        }
    }

    Scenario::new(
        cells,
        ues,
        gains,
        noise_per_resource_unit(config.noise_psd, config.resource_bandwidth),
        config.num_resource_units()?,
        config.resource_bandwidth,
    )
}
