//! Search baselines over full placements (inter- and intra-DBC at once).
//!
//! All randomness comes from ChaCha8 streams derived from a single 64-bit
//! seed. Each offspring pair of each generation draws from its own stream, so
//! results do not depend on how work is spread across threads.

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::{
    single_dbc_shifts, total_shifts_with, validate_count, LayoutError, Placement, RtmGeometry, Violation,
};
use crate::trace::{Access, AccessSequence, VariableId};

#[derive(Debug, Error, PartialEq)]
pub enum SearchError {
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("invalid search parameters: {0}")]
    InvalidParams(String),
    #[error("seed placement {index} is invalid: {violations:?}")]
    InvalidSeed { index: usize, violations: Vec<Violation> },
    #[error("instance too large for oracle: {vars} variables exceeds limit {limit}")]
    TooLarge { vars: usize, limit: usize },
}

/// A placement with its total shift cost (lower is better).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Individual {
    pub placement: Placement,
    pub fitness: u64,
}

/// Scores placements of one sequence.
#[derive(Debug, Clone, Copy)]
pub struct ShiftEvaluator<'a> {
    accesses: &'a [Access],
    var_count: usize,
    dbc_count: usize,
}

impl<'a> ShiftEvaluator<'a> {
    pub fn new(seq: &'a AccessSequence, geometry: RtmGeometry) -> Self {
        Self { accesses: seq.accesses(), var_count: seq.var_count(), dbc_count: geometry.dbc_count() }
    }

    pub fn fitness(&self, p: &Placement) -> u64 {
        let table = p.position_table(self.var_count);
        total_shifts_with(&table, self.dbc_count, self.accesses)
    }

    pub fn individual(&self, placement: Placement) -> Individual {
        let fitness = self.fitness(&placement);
        Individual { placement, fitness }
    }
}

/// Relative odds of the three mutation kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationWeights {
    pub move_var: f64,
    pub transpose: f64,
    pub permute: f64,
}

impl Default for MutationWeights {
    fn default() -> Self {
        Self { move_var: 10.0, transpose: 10.0, permute: 3.0 }
    }
}

impl MutationWeights {
    fn distribution(&self) -> Result<WeightedIndex<f64>, SearchError> {
        let w = [self.move_var, self.transpose, self.permute];
        if w.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(SearchError::InvalidParams(format!("mutation weights must be positive: {w:?}")));
        }
        WeightedIndex::new(w).map_err(|e| SearchError::InvalidParams(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutationKind {
    Move,
    Transpose,
    Permute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    pub mu: usize,
    pub lambda: usize,
    pub tournament_size: usize,
    pub generations: usize,
    pub mutation_weights: MutationWeights,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub seed: u64,
    pub elitism: usize,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            mu: 100,
            lambda: 100,
            tournament_size: 4,
            generations: 200,
            mutation_weights: MutationWeights::default(),
            crossover_rate: 0.9,
            mutation_rate: 0.3,
            seed: 0,
            elitism: 1,
        }
    }
}

impl GaParams {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    fn check(&self) -> Result<WeightedIndex<f64>, SearchError> {
        let bad = |m: &str| Err(SearchError::InvalidParams(m.to_owned()));
        if self.mu == 0 || self.lambda == 0 {
            return bad("mu and lambda must be at least 1");
        }
        if self.tournament_size == 0 {
            return bad("tournament size must be at least 1");
        }
        if self.elitism == 0 || self.elitism > self.mu {
            return bad("elitism must be in 1..=mu");
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) || !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("rates must lie in [0, 1]");
        }
        self.mutation_weights.distribution()
    }
}

/// One line of the GA run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best: u64,
    pub mean: f64,
    pub evals: u64,
}

#[derive(Debug, Clone)]
pub struct GaOutcome {
    pub best: Individual,
    pub history: Vec<GenerationRecord>,
}

impl GaOutcome {
    /// The run log as JSON lines.
    pub fn log_lines(&self) -> String {
        self.history
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }
}

/// Independent generator for `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform DBC choice among non-full DBCs, then a uniform order inside each.
pub fn random_placement<R: Rng + ?Sized>(var_count: usize, geometry: RtmGeometry, rng: &mut R) -> Placement {
    debug_assert!(geometry.is_feasible(var_count));
    let n = geometry.locations_per_dbc();
    let mut dbcs: Vec<Vec<VariableId>> = vec![Vec::new(); geometry.dbc_count()];
    let mut open: Vec<usize> = (0..geometry.dbc_count()).collect();
    for v in 0..var_count as u32 {
        let slot = rng.gen_range(0..open.len());
        let d = open[slot];
        dbcs[d].push(VariableId(v));
        if dbcs[d].len() == n {
            open.swap_remove(slot);
        }
    }
    for d in &mut dbcs {
        d.shuffle(rng);
    }
    Placement::new(dbcs)
}

fn dbc_table(p: &Placement, var_count: usize) -> Vec<usize> {
    let mut table = vec![usize::MAX; var_count];
    for (d, vars) in p.dbcs().iter().enumerate() {
        for v in vars {
            table[v.index()] = d;
        }
    }
    table
}

/// Exchanges the DBC assignment of a window of variables between two parents.
///
/// `order` lists the variables by first appearance; the window is
/// `order[f..=l]` for random `f <= l`. A variable that sits in different DBCs
/// in the two parents is removed from its DBC in each child and appended to
/// the DBC it had in the other parent, unless that DBC is already full.
/// Everything else keeps its relative order.
pub fn crossover_2fold<R: Rng + ?Sized>(
    i: &Placement,
    j: &Placement,
    order: &[VariableId],
    geometry: RtmGeometry,
    rng: &mut R,
) -> (Placement, Placement) {
    let mut a = i.clone();
    let mut b = j.clone();
    if order.is_empty() {
        return (a, b);
    }
    let (x, y) = (rng.gen_range(0..order.len()), rng.gen_range(0..order.len()));
    let (f, l) = (x.min(y), x.max(y));
    let var_count = i.dbcs().iter().flatten().chain(order).map(|v| v.index() + 1).max().unwrap_or(0);
    let (in_i, in_j) = (dbc_table(i, var_count), dbc_table(j, var_count));
    let cap = geometry.locations_per_dbc();
    for &v in &order[f..=l] {
        let (r, s) = (in_i[v.index()], in_j[v.index()]);
        if r == s {
            continue;
        }
        move_to_tail(&mut a, v, r, s, cap);
        move_to_tail(&mut b, v, s, r, cap);
    }
    (a, b)
}

fn move_to_tail(p: &mut Placement, v: VariableId, from: usize, to: usize, cap: usize) -> bool {
    let dbcs = p.dbcs_mut();
    if dbcs[to].len() >= cap {
        return false;
    }
    let pos = dbcs[from].iter().position(|&x| x == v).expect("variable in source DBC");
    dbcs[from].remove(pos);
    dbcs[to].push(v);
    true
}

/// Applies one mutation chosen by `weights`.
pub fn mutate<R: Rng + ?Sized>(
    p: &Placement,
    weights: &MutationWeights,
    geometry: RtmGeometry,
    rng: &mut R,
) -> Result<(Placement, MutationKind), SearchError> {
    let dist = weights.distribution()?;
    Ok(mutate_with(p, &dist, geometry, rng))
}

fn mutate_with<R: Rng + ?Sized>(
    p: &Placement,
    dist: &WeightedIndex<f64>,
    geometry: RtmGeometry,
    rng: &mut R,
) -> (Placement, MutationKind) {
    let mut out = p.clone();
    let total = out.var_count();
    let kind = match dist.sample(rng) {
        0 => MutationKind::Move,
        1 => MutationKind::Transpose,
        _ => MutationKind::Permute,
    };
    if total == 0 {
        return (out, kind);
    }
    match kind {
        MutationKind::Move => {
            let (d, pos) = nth_slot(&out, rng.gen_range(0..total));
            let targets: Vec<usize> = (0..out.dbc_count())
                .filter(|&t| t != d && out.dbcs()[t].len() < geometry.locations_per_dbc())
                .collect();
            if let Some(&t) = targets.choose(rng) {
                let dbcs = out.dbcs_mut();
                let v = dbcs[d].remove(pos);
                dbcs[t].push(v);
            }
        }
        MutationKind::Transpose => {
            let (d, pos) = nth_slot(&out, rng.gen_range(0..total));
            let len = out.dbcs()[d].len();
            if len >= 2 {
                let mut other = rng.gen_range(0..len - 1);
                if other >= pos {
                    other += 1;
                }
                out.dbcs_mut()[d].swap(pos, other);
            }
        }
        MutationKind::Permute => {
            for d in out.dbcs_mut() {
                d.shuffle(rng);
            }
        }
    }
    (out, kind)
}

fn nth_slot(p: &Placement, mut k: usize) -> (usize, usize) {
    for (d, vars) in p.dbcs().iter().enumerate() {
        if k < vars.len() {
            return (d, k);
        }
        k -= vars.len();
    }
    unreachable!("slot index within variable count")
}

fn tournament<'p, R: Rng + ?Sized>(pool: &'p [Individual], size: usize, rng: &mut R) -> &'p Individual {
    let mut best = &pool[rng.gen_range(0..pool.len())];
    for _ in 1..size {
        let c = &pool[rng.gen_range(0..pool.len())];
        if c.fitness < best.fitness {
            best = c;
        }
    }
    best
}

fn record(generation: usize, pop: &[Individual], evals: u64) -> GenerationRecord {
    let best = pop.iter().map(|x| x.fitness).min().unwrap_or(0);
    let mean = pop.iter().map(|x| x.fitness as f64).sum::<f64>() / pop.len() as f64;
    GenerationRecord { generation, best, mean, evals }
}

fn best_of(pop: &[Individual]) -> &Individual {
    pop.iter().min_by_key(|x| x.fitness).expect("non-empty population")
}

/// (μ + λ) genetic search with tournament selection and elitism.
///
/// The population starts from `seeds` (truncated to μ) padded with random
/// placements. Generation 0 in the history is the initial population.
pub fn ga_search(
    seq: &AccessSequence,
    geometry: RtmGeometry,
    params: &GaParams,
    seeds: &[Placement],
) -> Result<GaOutcome, SearchError> {
    let dist = params.check()?;
    let var_count = seq.var_count();
    geometry.check_feasible(var_count)?;
    for (index, s) in seeds.iter().enumerate() {
        validate_count(s, geometry, var_count).map_err(|violations| SearchError::InvalidSeed { index, violations })?;
    }
    let eval = ShiftEvaluator::new(seq, geometry);
    let order: Vec<VariableId> = first_use_order(seq);

    let mut init_rng = stream_rng(params.seed, 0);
    let mut placements: Vec<Placement> = seeds.iter().take(params.mu).cloned().collect();
    while placements.len() < params.mu {
        placements.push(random_placement(var_count, geometry, &mut init_rng));
    }
    let mut pop: Vec<Individual> = placements.into_par_iter().map(|p| eval.individual(p)).collect();
    let mut evals = pop.len() as u64;
    let mut history = vec![record(0, &pop, evals)];

    let pairs = params.lambda.div_ceil(2);
    for generation in 1..=params.generations {
        let base = (generation as u64) << 32;
        let offspring: Vec<Individual> = (0..pairs)
            .into_par_iter()
            .flat_map_iter(|k| {
                let mut rng = stream_rng(params.seed, base | (k as u64 + 1));
                let p1 = tournament(&pop, params.tournament_size, &mut rng);
                let p2 = tournament(&pop, params.tournament_size, &mut rng);
                let (mut c1, mut c2) = if rng.gen_bool(params.crossover_rate) {
                    crossover_2fold(&p1.placement, &p2.placement, &order, geometry, &mut rng)
                } else {
                    (p1.placement.clone(), p2.placement.clone())
                };
                for c in [&mut c1, &mut c2] {
                    if rng.gen_bool(params.mutation_rate) {
                        *c = mutate_with(c, &dist, geometry, &mut rng).0;
                    }
                }
                [c1, c2].into_iter().map(|c| eval.individual(c))
            })
            .collect::<Vec<_>>()
            .into_iter()
            .take(params.lambda)
            .collect();
        evals += offspring.len() as u64;

        let mut union = std::mem::take(&mut pop);
        union.extend(offspring);
        let mut ranked: Vec<usize> = (0..union.len()).collect();
        ranked.sort_by_key(|&i| (union[i].fitness, i));
        let mut rng = stream_rng(params.seed, base);
        let mut next: Vec<Individual> = ranked[..params.elitism].iter().map(|&i| union[i].clone()).collect();
        while next.len() < params.mu {
            next.push(tournament(&union, params.tournament_size, &mut rng).clone());
        }
        pop = next;
        history.push(record(generation, &pop, evals));
    }

    Ok(GaOutcome { best: best_of(&pop).clone(), history })
}

/// Variables ordered by first appearance in `seq`.
pub fn first_use_order(seq: &AccessSequence) -> Vec<VariableId> {
    let mut seen = vec![false; seq.var_count()];
    let mut order = Vec::with_capacity(seq.var_count());
    for a in seq.accesses() {
        if !std::mem::replace(&mut seen[a.var.index()], true) {
            order.push(a.var);
        }
    }
    order.extend(seq.variables().ids().filter(|v| !seen[v.index()]));
    order
}

/// Best of `iterations` independent random placements (first minimum wins).
pub fn random_walk(
    seq: &AccessSequence,
    geometry: RtmGeometry,
    iterations: usize,
    seed: u64,
) -> Result<Individual, SearchError> {
    geometry.check_feasible(seq.var_count())?;
    if iterations == 0 {
        return Err(SearchError::InvalidParams("random walk needs at least one iteration".into()));
    }
    let eval = ShiftEvaluator::new(seq, geometry);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<Individual> = None;
    for _ in 0..iterations {
        let cand = eval.individual(random_placement(seq.var_count(), geometry, &mut rng));
        if best.as_ref().is_none_or(|b| cand.fitness < b.fitness) {
            let done = cand.fitness == 0;
            best = Some(cand);
            if done {
                break;
            }
        }
    }
    Ok(best.expect("at least one iteration"))
}

pub const DEFAULT_ORACLE_LIMIT: usize = 8;

/// Exact optimum by exhaustive enumeration.
///
/// Variables are split into at most `q` groups (restricted-growth strings, so
/// each unlabeled split is visited once) of at most `n` each. Because ports
/// are independent, each group's best order is found separately by trying
/// every permutation; those results are memoized per variable subset.
pub fn brute_force_optimal(
    seq: &AccessSequence,
    geometry: RtmGeometry,
    limit: usize,
) -> Result<Individual, SearchError> {
    let vars = seq.var_count();
    if vars > limit {
        return Err(SearchError::TooLarge { vars, limit });
    }
    geometry.check_feasible(vars)?;
    let accesses: Vec<VariableId> = seq.accesses().iter().map(|a| a.var).collect();
    let mut oracle = Oracle {
        accesses,
        memo: vec![None; 1 << vars],
        geometry,
        vars,
        groups: vec![Vec::new(); geometry.dbc_count()],
        best: None,
    };
    oracle.assign(0, 0);
    let (fitness, groups) = oracle.best.expect("feasible instance has a placement");
    let placement = Placement::new(groups);
    Ok(Individual { placement, fitness })
}

struct Oracle {
    accesses: Vec<VariableId>,
    memo: Vec<Option<(u64, Vec<VariableId>)>>,
    geometry: RtmGeometry,
    vars: usize,
    groups: Vec<Vec<VariableId>>,
    best: Option<(u64, Vec<Vec<VariableId>>)>,
}

impl Oracle {
    fn assign(&mut self, next: usize, used: usize) {
        if next == self.vars {
            self.score(used);
            return;
        }
        let limit = (used + 1).min(self.geometry.dbc_count());
        for d in 0..limit {
            if self.groups[d].len() >= self.geometry.locations_per_dbc() {
                continue;
            }
            self.groups[d].push(VariableId(next as u32));
            self.assign(next + 1, used.max(d + 1));
            self.groups[d].pop();
        }
    }

    fn score(&mut self, used: usize) {
        let mut total = 0;
        let mut layouts = vec![Vec::new(); self.geometry.dbc_count()];
        for d in 0..used {
            let mask = self.groups[d].iter().fold(0usize, |m, v| m | (1 << v.index()));
            let (cost, layout) = self.block(mask, d);
            total += cost;
            layouts[d] = layout;
        }
        if self.best.as_ref().is_none_or(|(b, _)| total < *b) {
            self.best = Some((total, layouts));
        }
    }

    fn block(&mut self, mask: usize, d: usize) -> (u64, Vec<VariableId>) {
        if let Some(hit) = &self.memo[mask] {
            return hit.clone();
        }
        let sub: Vec<VariableId> =
            self.accesses.iter().copied().filter(|v| mask & (1 << v.index()) != 0).collect();
        let mut perm = self.groups[d].clone();
        let mut best = (single_dbc_shifts(&perm, &sub), perm.clone());
        // Heap's algorithm, iterative form
        let k = perm.len();
        let mut c = vec![0usize; k];
        let mut i = 0;
        while i < k {
            if c[i] < i {
                if i % 2 == 0 {
                    perm.swap(0, i);
                } else {
                    perm.swap(c[i], i);
                }
                let cost = single_dbc_shifts(&perm, &sub);
                if cost < best.0 {
                    best = (cost, perm.clone());
                }
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        self.memo[mask] = Some(best.clone());
        best
    }
}
