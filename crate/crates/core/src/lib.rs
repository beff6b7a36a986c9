//! Data placement for racetrack memories organized in domain block clusters
//! (DBCs).
//!
//! The crate covers the whole pipeline: parsing access traces ([`trace`]),
//! exact shift accounting for a placement ([`layout`]), constructive
//! heuristics ([`heuristics`]), search baselines and an exhaustive oracle
//! ([`search`]), an analytical latency/energy model ([`rtmodel`]) and a
//! corpus harness ([`bench`], [`synth`]).

pub mod bench;
pub mod heuristics;
pub mod layout;
pub mod rtmodel;
pub mod search;
pub mod strategy;
pub mod synth;
pub mod trace;

pub use heuristics::{IntraDbcOptimizer, PlacementContext};
pub use layout::{evaluate_shifts, Placement, RtmGeometry, ShiftReport};
pub use rtmodel::{builtin_configs, compute_cost, CostReport, RtmConfig};
pub use strategy::{run_strategy, Strategy, StrategyOptions};
pub use trace::{parse_trace, AccessSequence, VariableId};
