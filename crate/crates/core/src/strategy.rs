//! Named end-to-end placement strategies.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::heuristics::{afd_place, dma_partition, dma_place, HeuristicError, IntraDbcOptimizer, PlacementContext};
use crate::layout::{evaluate_shifts, LayoutError, Placement, RtmGeometry, ShiftReport};
use crate::search::{ga_search, random_walk, GaParams, GenerationRecord, SearchError};
use crate::trace::{AccessSequence, TraceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    AfdOfu,
    DmaOfu,
    DmaGg,
    DmaLs,
    Ga,
    Rw,
}

impl Strategy {
    pub const ALL: [Strategy; 6] =
        [Strategy::AfdOfu, Strategy::DmaOfu, Strategy::DmaGg, Strategy::DmaLs, Strategy::Ga, Strategy::Rw];

    pub const HEURISTICS: [Strategy; 4] = [Strategy::AfdOfu, Strategy::DmaOfu, Strategy::DmaGg, Strategy::DmaLs];

    pub fn id(&self) -> &'static str {
        match self {
            Strategy::AfdOfu => "afd-ofu",
            Strategy::DmaOfu => "dma-ofu",
            Strategy::DmaGg => "dma-gg",
            Strategy::DmaLs => "dma-ls",
            Strategy::Ga => "ga",
            Strategy::Rw => "rw",
        }
    }

    pub fn is_dma(&self) -> bool {
        matches!(self, Strategy::DmaOfu | Strategy::DmaGg | Strategy::DmaLs)
    }

    fn intra(&self) -> IntraDbcOptimizer {
        match self {
            Strategy::DmaGg => IntraDbcOptimizer::GreedyGraph,
            Strategy::DmaLs => IntraDbcOptimizer::local_search(),
            _ => IntraDbcOptimizer::Ofu,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Strategy {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.id() == s)
            .ok_or_else(|| StrategyError::Unknown(s.to_owned()))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum StrategyError {
    #[error("unknown strategy `{0}` (expected one of afd-ofu, dma-ofu, dma-gg, dma-ls, ga, rw)")]
    Unknown(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Heuristic(#[from] HeuristicError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

impl StrategyError {
    /// True when the instance cannot be placed (capacity or DMA split).
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            StrategyError::Heuristic(HeuristicError::InfeasibleSplit { .. })
                | StrategyError::Heuristic(HeuristicError::Layout(LayoutError::Infeasible { .. }))
                | StrategyError::Search(SearchError::Layout(LayoutError::Infeasible { .. }))
                | StrategyError::Layout(LayoutError::Infeasible { .. })
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyOptions {
    /// GA parameters; `seed` is overridden by [`StrategyOptions::seed`].
    pub ga: GaParams,
    pub rw_iterations: usize,
    pub seed: u64,
    /// Use AFD-OFU when a DMA split is infeasible.
    pub fallback_afd: bool,
}

impl Default for StrategyOptions {
    fn default() -> Self {
        Self { ga: GaParams::default(), rw_iterations: 60_000, seed: 0, fallback_afd: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyOutcome {
    pub placement: Placement,
    pub report: ShiftReport,
    pub fell_back: bool,
    /// Per-generation log, present for the GA only.
    pub ga_history: Option<Vec<GenerationRecord>>,
}

fn heuristic(
    strategy: Strategy,
    ctx: &PlacementContext<'_>,
    geometry: RtmGeometry,
) -> Result<Placement, HeuristicError> {
    if strategy == Strategy::AfdOfu {
        return afd_place(ctx, geometry, IntraDbcOptimizer::Ofu);
    }
    let partition = dma_partition(&ctx.stats, geometry);
    dma_place(&partition, ctx, geometry, strategy.intra())
}

/// Placements of the four constructive heuristics that are feasible here.
pub fn heuristic_seeds(ctx: &PlacementContext<'_>, geometry: RtmGeometry) -> Vec<Placement> {
    Strategy::HEURISTICS
        .iter()
        .filter_map(|&s| heuristic(s, ctx, geometry).ok())
        .collect()
}

pub fn run_strategy(
    seq: &AccessSequence,
    geometry: RtmGeometry,
    strategy: Strategy,
    opts: &StrategyOptions,
) -> Result<StrategyOutcome, StrategyError> {
    geometry.check_feasible(seq.var_count())?;
    let ctx = PlacementContext::new(seq)?;
    let mut fell_back = false;
    let mut ga_history = None;
    let placement = match strategy {
        Strategy::Ga => {
            let params = GaParams { seed: opts.seed, ..opts.ga.clone() };
            let out = ga_search(seq, geometry, &params, &heuristic_seeds(&ctx, geometry))?;
            ga_history = Some(out.history);
            out.best.placement
        }
        Strategy::Rw => random_walk(seq, geometry, opts.rw_iterations, opts.seed)?.placement,
        s => match heuristic(s, &ctx, geometry) {
            Err(HeuristicError::InfeasibleSplit { .. }) if opts.fallback_afd => {
                fell_back = true;
                afd_place(&ctx, geometry, IntraDbcOptimizer::Ofu)?
            }
            other => other?,
        },
    };
    let report = evaluate_shifts(&placement, seq)?;
    Ok(StrategyOutcome { placement, report, fell_back, ga_history })
}
