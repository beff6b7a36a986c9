//! Corpus benchmarking, normalization and configuration sweeps.
//!
//! Rows are per `(benchmark, sequence, strategy, dbc_count)`. Summaries sum
//! raw values over a benchmark's sequences, normalize by the baseline
//! strategy and take the geometric mean over benchmarks.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::{LayoutError, RtmGeometry, ShiftReport};
use crate::rtmodel::{compute_cost, CostReport, ModelError, RtmConfig, MODEL_NOTE};
use crate::strategy::{run_strategy, Strategy, StrategyError, StrategyOptions};
use crate::trace::{parse_trace, AccessSequence, TraceError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: TraceError },
    #[error("corpus {0} contains no trace files")]
    EmptyCorpus(PathBuf),
    #[error("{benchmark}/{sequence} with {strategy} on {dbc_count} DBCs: {source}")]
    Strategy { benchmark: String, sequence: String, strategy: Strategy, dbc_count: usize, source: StrategyError },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl BenchError {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, BenchError::Strategy { source, .. } if source.is_infeasible())
    }
}

/// One trace file: a named group of independent sequences.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub name: String,
    pub sequences: Vec<AccessSequence>,
}

/// Loads every `*.trace` file in `dir`, sorted by file name.
pub fn load_corpus(dir: &Path) -> Result<Vec<Benchmark>, BenchError> {
    let io_err = |source| BenchError::Io { path: dir.to_owned(), source };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err)?
        .collect::<Result<Vec<_>, _>>()
        .map_err(io_err)?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "trace"))
        .collect();
    paths.sort();
    let mut out = Vec::with_capacity(paths.len());
    for path in paths {
        let text = fs::read_to_string(&path).map_err(|source| BenchError::Io { path: path.clone(), source })?;
        let sequences = parse_trace(&text).map_err(|source| BenchError::Parse { path: path.clone(), source })?;
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        out.push(Benchmark { name, sequences });
    }
    let usable = out.iter().any(|b| b.sequences.iter().any(|s| !s.is_empty()));
    if !usable {
        return Err(BenchError::EmptyCorpus(dir.to_owned()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSettings {
    pub strategies: Vec<Strategy>,
    pub baseline: Strategy,
    pub configs: Vec<RtmConfig>,
    pub options: StrategyOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub benchmark: String,
    pub sequence: String,
    pub strategy: String,
    pub dbc_count: usize,
    pub shifts: u64,
    pub latency: f64,
    pub energy: f64,
    pub normalized_shifts: f64,
    pub normalized_latency: f64,
    pub normalized_energy: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub strategy: String,
    pub dbc_count: usize,
    /// `None` when every benchmark was trivial at this DBC count.
    pub geomean_shifts: Option<f64>,
    pub geomean_latency: f64,
    pub geomean_energy: f64,
    /// Benchmarks contributing to `geomean_shifts`.
    pub benchmarks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrivialTally {
    pub dbc_count: usize,
    pub trivial_sequences: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub model: String,
    pub baseline: String,
    pub entries: Vec<SummaryEntry>,
    pub trivial_sequences: Vec<TrivialTally>,
}

impl CorpusSummary {
    pub fn entry(&self, strategy: Strategy, dbc_count: usize) -> Option<&SummaryEntry> {
        self.entries.iter().find(|e| e.strategy == strategy.id() && e.dbc_count == dbc_count)
    }
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub rows: Vec<BenchmarkRow>,
    pub summary: CorpusSummary,
}

#[derive(Debug, Clone)]
struct Cell {
    bench: usize,
    seq: usize,
    strategy: Strategy,
    config: usize,
    report: ShiftReport,
    cost: CostReport,
}

fn ratio(value: f64, base: f64) -> f64 {
    if base == 0.0 {
        if value == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        value / base
    }
}

/// Geometric mean of strictly positive values; `None` if there are none.
pub fn geometric_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() || values.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return None;
    }
    let log_sum: f64 = values.iter().map(|v| v.ln()).sum();
    Some((log_sum / values.len() as f64).exp())
}

pub fn run_bench(benchmarks: &[Benchmark], settings: &BenchSettings) -> Result<BenchResult, BenchError> {
    let mut strategies = settings.strategies.clone();
    if !strategies.contains(&settings.baseline) {
        strategies.push(settings.baseline);
    }
    strategies.sort();
    strategies.dedup();
    for c in &settings.configs {
        c.validate()?;
    }

    let mut tasks = Vec::new();
    for (b, bench) in benchmarks.iter().enumerate() {
        for (s, seq) in bench.sequences.iter().enumerate() {
            if seq.is_empty() {
                continue;
            }
            for &strategy in &strategies {
                for c in 0..settings.configs.len() {
                    tasks.push((b, s, strategy, c));
                }
            }
        }
    }

    let cells: Vec<Cell> = tasks
        .into_par_iter()
        .map(|(b, s, strategy, c)| {
            let seq = &benchmarks[b].sequences[s];
            let config = &settings.configs[c];
            let geometry = RtmGeometry::new(config.dbc_count, config.domains_per_dbc)?;
            let out = run_strategy(seq, geometry, strategy, &settings.options).map_err(|source| {
                BenchError::Strategy {
                    benchmark: benchmarks[b].name.clone(),
                    sequence: seq.name().to_owned(),
                    strategy,
                    dbc_count: config.dbc_count,
                    source,
                }
            })?;
            let cost = compute_cost(&out.report, config)?;
            Ok(Cell { bench: b, seq: s, strategy, config: c, report: out.report, cost })
        })
        .collect::<Result<_, BenchError>>()?;

    let mut index: BTreeMap<(usize, usize, Strategy, usize), &Cell> = BTreeMap::new();
    for cell in &cells {
        index.insert((cell.bench, cell.seq, cell.strategy, cell.config), cell);
    }

    let mut keyed = Vec::with_capacity(cells.len());
    for (&(b, s, strategy, c), cell) in &index {
        let base = index[&(b, s, settings.baseline, c)];
        let row = BenchmarkRow {
            benchmark: benchmarks[b].name.clone(),
            sequence: benchmarks[b].sequences[s].name().to_owned(),
            strategy: strategy.id().to_owned(),
            dbc_count: settings.configs[c].dbc_count,
            shifts: cell.report.total_shifts,
            latency: cell.cost.total_latency,
            energy: cell.cost.total_energy,
            normalized_shifts: ratio(cell.report.total_shifts as f64, base.report.total_shifts as f64),
            normalized_latency: ratio(cell.cost.total_latency, base.cost.total_latency),
            normalized_energy: ratio(cell.cost.total_energy, base.cost.total_energy),
            seed: settings.options.seed,
        };
        keyed.push(((benchmarks[b].name.clone(), s, strategy, row.dbc_count, c), row));
    }
    keyed.sort_by(|x, y| x.0.cmp(&y.0));
    let rows = keyed.into_iter().map(|(_, row)| row).collect();

    let summary = summarize(benchmarks, &strategies, settings, &index);
    Ok(BenchResult { rows, summary })
}

fn summarize(
    benchmarks: &[Benchmark],
    strategies: &[Strategy],
    settings: &BenchSettings,
    index: &BTreeMap<(usize, usize, Strategy, usize), &Cell>,
) -> CorpusSummary {
    let mut entries = Vec::new();
    let mut trivial = Vec::new();
    for (c, config) in settings.configs.iter().enumerate() {
        // (shifts, latency, energy) sums per benchmark per strategy
        let mut sums: BTreeMap<(usize, Strategy), (u64, f64, f64)> = BTreeMap::new();
        let mut has_shift_data = vec![false; benchmarks.len()];
        let mut trivial_count = 0;
        for (b, bench) in benchmarks.iter().enumerate() {
            for s in 0..bench.sequences.len() {
                if bench.sequences[s].is_empty() {
                    continue;
                }
                let is_trivial = strategies.iter().any(|&st| index[&(b, s, st, c)].report.total_shifts == 0);
                trivial_count += usize::from(is_trivial);
                has_shift_data[b] |= !is_trivial;
                for &st in strategies {
                    let cell = index[&(b, s, st, c)];
                    let e = sums.entry((b, st)).or_insert((0, 0.0, 0.0));
                    if !is_trivial {
                        e.0 += cell.report.total_shifts;
                    }
                    e.1 += cell.cost.total_latency;
                    e.2 += cell.cost.total_energy;
                }
            }
        }
        trivial.push(TrivialTally { dbc_count: config.dbc_count, trivial_sequences: trivial_count });

        for &st in strategies {
            let (mut sh, mut lat, mut en) = (Vec::new(), Vec::new(), Vec::new());
            for b in 0..benchmarks.len() {
                let (Some(v), Some(base)) = (sums.get(&(b, st)), sums.get(&(b, settings.baseline))) else {
                    continue;
                };
                if has_shift_data[b] {
                    sh.push(v.0 as f64 / base.0 as f64);
                }
                lat.push(ratio(v.1, base.1));
                en.push(ratio(v.2, base.2));
            }
            entries.push(SummaryEntry {
                strategy: st.id().to_owned(),
                dbc_count: config.dbc_count,
                geomean_shifts: geometric_mean(&sh),
                geomean_latency: geometric_mean(&lat).unwrap_or(f64::NAN),
                geomean_energy: geometric_mean(&en).unwrap_or(f64::NAN),
                benchmarks: sh.len(),
            });
        }
    }
    CorpusSummary {
        model: MODEL_NOTE.to_owned(),
        baseline: settings.baseline.id().to_owned(),
        entries,
        trivial_sequences: trivial,
    }
}

pub fn rows_to_csv(rows: &[BenchmarkRow]) -> Result<String, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub dbc_count: usize,
    pub domains_per_dbc: usize,
    pub shifts: u64,
    pub reads: u64,
    pub writes: u64,
    pub latency_ns: f64,
    pub dynamic_energy_pj: f64,
    pub leakage_energy_pj: f64,
    pub total_energy_pj: f64,
    pub area_mm2: f64,
}

/// Runs `strategy` on every sequence under each configuration and totals the
/// counts per configuration.
pub fn run_sweep(
    sequences: &[AccessSequence],
    strategy: Strategy,
    configs: &[RtmConfig],
    options: &StrategyOptions,
) -> Result<Vec<SweepRow>, BenchError> {
    configs
        .par_iter()
        .map(|config| {
            config.validate()?;
            let geometry = RtmGeometry::new(config.dbc_count, config.domains_per_dbc)?;
            let mut total = ShiftReport::default();
            for seq in sequences.iter().filter(|s| !s.is_empty()) {
                let out = run_strategy(seq, geometry, strategy, options).map_err(|source| BenchError::Strategy {
                    benchmark: String::new(),
                    sequence: seq.name().to_owned(),
                    strategy,
                    dbc_count: config.dbc_count,
                    source,
                })?;
                total = &total + &out.report;
            }
            let cost = compute_cost(&total, config)?;
            Ok(SweepRow {
                dbc_count: config.dbc_count,
                domains_per_dbc: config.domains_per_dbc,
                shifts: total.total_shifts,
                reads: total.reads,
                writes: total.writes,
                latency_ns: cost.total_latency,
                dynamic_energy_pj: cost.dynamic_energy,
                leakage_energy_pj: cost.leakage_energy,
                total_energy_pj: cost.total_energy,
                area_mm2: cost.area,
            })
        })
        .collect()
}

/// Sweep table as CSV, preceded by a `#` line naming the cost model.
pub fn sweep_to_csv(rows: &[SweepRow]) -> Result<String, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Csv(e.into_error().into()))?;
    Ok(format!("# {MODEL_NOTE}\n{}", String::from_utf8(bytes).expect("utf-8")))
}
