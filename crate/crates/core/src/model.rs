//! Domain types for a heterogeneous network instance.
//!
//! A [`Scenario`] is immutable once built; every constructor validates the
//! instance invariants. Cells are indexed `0..n` with all macro cells first
//! and LPNs after them, so LPN position `p` in an offset vector is cell id
//! `num_macros + p`.
//!
//! # JSON schema
//!
//! ```text
//! {
//!   "cells": [{"id": 0, "kind": "macro" | "lpn", "position": {"x": m, "y": m},
//!              "antenna_height": m, "power_limit": mW, "pilot_power": mW}, ...],
//!   "ues":   [{"id": 0, "position": {"x": m, "y": m}, "demand": bps}, ...],
//!   "gains": [g_00, g_01, ..., g_0|J|-1, g_10, ...],   // row-major, cell x UE
//!   "noise_power": mW,
//!   "num_resource_units": M,
//!   "resource_bandwidth": Hz
//! }
//! ```

use std::f64::consts::LN_2;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Macro,
    Lpn,
}

/// Planar coordinates in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: usize,
    pub kind: CellKind,
    pub position: Point,
    /// Meters.
    pub antenna_height: f64,
    /// Maximum transmit power per resource unit, mW.
    pub power_limit: f64,
    /// Reference signal power used only for association, mW.
    pub pilot_power: f64,
}

impl Cell {
    pub fn is_lpn(&self) -> bool {
        self.kind == CellKind::Lpn
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserEquipment {
    pub id: usize,
    pub position: Point,
    /// Minimum served rate, bits per second.
    pub demand: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ScenarioRepr {
    cells: Vec<Cell>,
    ues: Vec<UserEquipment>,
    gains: Vec<f64>,
    noise_power: f64,
    num_resource_units: u32,
    resource_bandwidth: f64,
}

/// An immutable problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioRepr", into = "ScenarioRepr")]
pub struct Scenario {
    cells: Vec<Cell>,
    ues: Vec<UserEquipment>,
    /// Row-major `cells x ues`.
    gains: Vec<f64>,
    noise_power: f64,
    num_resource_units: u32,
    resource_bandwidth: f64,
    num_macros: usize,
}

impl Scenario {
    /// Builds a scenario from its parts. `gains` is row-major with one row per
    /// cell and one column per UE.
    pub fn new(
        cells: Vec<Cell>,
        ues: Vec<UserEquipment>,
        gains: Vec<f64>,
        noise_power: f64,
        num_resource_units: u32,
        resource_bandwidth: f64,
    ) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidScenario(msg));

        if cells.is_empty() {
            return invalid("no cells".into());
        }
        let mut num_macros = 0;
        let mut seen_lpn = false;
        for (i, cell) in cells.iter().enumerate() {
            if cell.id != i {
                return invalid(format!("cell at index {i} has id {}", cell.id));
            }
            match cell.kind {
                CellKind::Macro if seen_lpn => {
                    return invalid(format!("macro cell {i} listed after an LPN"));
                }
                CellKind::Macro => num_macros += 1,
                CellKind::Lpn => seen_lpn = true,
            }
            if !(cell.power_limit > 0.0) {
                return invalid(format!("cell {i} power limit must be positive"));
            }
            if !(cell.pilot_power > 0.0 && cell.pilot_power.is_finite()) {
                return invalid(format!("cell {i} pilot power must be positive"));
            }
            if !(cell.antenna_height > 0.0) {
                return invalid(format!("cell {i} antenna height must be positive"));
            }
        }
        for (j, ue) in ues.iter().enumerate() {
            if ue.id != j {
                return invalid(format!("UE at index {j} has id {}", ue.id));
            }
            if !(ue.demand > 0.0 && ue.demand.is_finite()) {
                return invalid(format!("UE {j} demand must be strictly positive"));
            }
        }
        if gains.len() != cells.len() * ues.len() {
            return invalid(format!(
                "gain matrix has {} entries, expected {} x {}",
                gains.len(),
                cells.len(),
                ues.len()
            ));
        }
        if let Some(bad) = gains.iter().position(|g| !(*g >= 0.0 && g.is_finite())) {
            return invalid(format!("gain entry {bad} is negative or not finite"));
        }
        for j in 0..ues.len() {
            if (0..cells.len()).all(|i| gains[i * ues.len() + j] == 0.0) {
                return invalid(format!("UE {j} has zero gain to every cell"));
            }
        }
        if !(noise_power > 0.0 && noise_power.is_finite()) {
            return invalid("noise power must be positive".into());
        }
        if num_resource_units == 0 {
            return invalid("at least one resource unit is required".into());
        }
        if !(resource_bandwidth > 0.0 && resource_bandwidth.is_finite()) {
            return invalid("resource bandwidth must be positive".into());
        }

        Ok(Self {
            cells,
            ues,
            gains,
            noise_power,
            num_resource_units,
            resource_bandwidth,
            num_macros,
        })
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn ues(&self) -> &[UserEquipment] {
        &self.ues
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_ues(&self) -> usize {
        self.ues.len()
    }

    pub fn num_macros(&self) -> usize {
        self.num_macros
    }

    pub fn num_lpns(&self) -> usize {
        self.cells.len() - self.num_macros
    }

    /// Cell id of the LPN at `position` in an offset vector.
    pub fn lpn_cell(&self, position: usize) -> usize {
        self.num_macros + position
    }

    /// Linear power gain from cell `cell` to UE `ue`.
    #[inline]
    pub fn gain(&self, cell: usize, ue: usize) -> f64 {
        self.gains[cell * self.ues.len() + ue]
    }

    /// Gain row of one cell, indexed by UE.
    pub fn gain_row(&self, cell: usize) -> &[f64] {
        let n = self.ues.len();
        &self.gains[cell * n..(cell + 1) * n]
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn num_resource_units(&self) -> u32 {
        self.num_resource_units
    }

    pub fn resource_bandwidth(&self) -> f64 {
        self.resource_bandwidth
    }

    pub fn power_limits(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.power_limit).collect()
    }

    /// Demands in nats per second divided by `M * B`, the quantity the load
    /// function consumes.
    pub fn normalized_demands(&self) -> Vec<f64> {
        let scale = LN_2 / (self.num_resource_units as f64 * self.resource_bandwidth);
        self.ues.iter().map(|u| u.demand * scale).collect()
    }

    /// Copy of this scenario with every UE demand set to `demand` bps.
    pub fn with_uniform_demand(&self, demand: f64) -> Result<Self> {
        self.with_demands(|_| demand)
    }

    /// Copy of this scenario with demands mapped per UE.
    pub fn with_demands(&self, mut demand: impl FnMut(&UserEquipment) -> f64) -> Result<Self> {
        let ues = self
            .ues
            .iter()
            .map(|u| UserEquipment {
                demand: demand(u),
                ..u.clone()
            })
            .collect();
        Self::new(
            self.cells.clone(),
            ues,
            self.gains.clone(),
            self.noise_power,
            self.num_resource_units,
            self.resource_bandwidth,
        )
    }

    /// Copy of this scenario with pilot powers mapped per cell.
    pub fn with_pilots(&self, mut pilot: impl FnMut(&Cell) -> f64) -> Result<Self> {
        let cells = self
            .cells
            .iter()
            .map(|c| Cell {
                pilot_power: pilot(c),
                ..c.clone()
            })
            .collect();
        Self::new(
            cells,
            self.ues.clone(),
            self.gains.clone(),
            self.noise_power,
            self.num_resource_units,
            self.resource_bandwidth,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

impl TryFrom<ScenarioRepr> for Scenario {
    type Error = Error;

    fn try_from(r: ScenarioRepr) -> Result<Self> {
        Scenario::new(
            r.cells,
            r.ues,
            r.gains,
            r.noise_power,
            r.num_resource_units,
            r.resource_bandwidth,
        )
    }
}

impl From<Scenario> for ScenarioRepr {
    fn from(s: Scenario) -> Self {
        ScenarioRepr {
            cells: s.cells,
            ues: s.ues,
            gains: s.gains,
            noise_power: s.noise_power,
            num_resource_units: s.num_resource_units,
            resource_bandwidth: s.resource_bandwidth,
        }
    }
}
