//! Energy-minimizing range assignment for load-coupled heterogeneous
//! cellular networks.
//!
//! A network instance ([`Scenario`]) holds macro cells and low-power nodes
//! (LPNs) sharing one band, a set of user equipments (UEs) with rate demands,
//! and the linear channel gains between them. Cell selection follows the
//! best-received-pilot-plus-offset rule, where only LPNs carry a
//! configurable offset. Given an association, the power each cell needs so
//! that every cell runs at a target load is the fixed point of the load
//! coupling equation; at full load this power vector minimizes the
//! load-weighted sum transmission energy.
//!
//! The crate is organized as:
//!
//! - [`model`], [`propagation`], [`layout`]: domain types, the COST-231-HATA
//!   channel model, and seeded generation of the 7-site hexagonal scenario.
//! - [`association`]: offset vectors and the UE to cell serving map.
//! - [`load`]: SINR, the load function, the full-load power solver and the
//!   energy/feasibility checks.
//! - [`tso`]: tabu search over LPN offsets plus the zero/maximal/no-LPN
//!   baselines and exhaustive enumeration for small instances.
//! - [`reduction`]: the maximum-independent-set gadget, its power bounds and
//!   a brute-force MIS oracle.
//! - [`experiment`]: seeded demand sweeps, summaries and CSV/JSON export.
//!
//! ```
//! use hetnet_range::{layout::ScenarioConfig, tso::{evaluate_baselines}, association::OffsetSet};
//! use hetnet_range::load::SolverOptions;
//!
//! let config = ScenarioConfig { num_macro_sites: 1, lpns_per_site: 2, ues_per_site: 10, ..Default::default() };
//! let scenario = config.generate().unwrap();
//! let baselines = evaluate_baselines(&scenario, &OffsetSet::uniform_db(0, 10), &SolverOptions::default()).unwrap();
//! assert!(baselines.nl.objective.is_finite());
//! ```

pub mod association;
pub mod error;
pub mod experiment;
pub mod layout;
pub mod load;
pub mod model;
pub mod propagation;
pub mod reduction;
pub mod tso;

pub use association::{associate, Association, OffsetSet, OffsetVector};
pub use error::{Error, Result};
pub use layout::ScenarioConfig;
pub use load::{solve_power, LoadVector, PowerVector, SolveResult, SolveStatus, SolverOptions};
pub use model::{Cell, CellKind, Point, Scenario, UserEquipment};
