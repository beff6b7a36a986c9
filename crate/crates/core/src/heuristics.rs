//! Constructive placement strategies.
//!
//! * AFD: frequency-sorted round-robin over all DBCs.
//! * DMA: extracts a chain of lifespan-disjoint variables, stores it in access
//!   order in the first `K` DBCs and distributes the rest over the remaining
//!   DBCs by frequency.
//!
//! Both take an [`IntraDbcOptimizer`] that orders variables inside a DBC.

use std::cmp::Reverse;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::layout::{single_dbc_shifts, LayoutError, Placement, RtmGeometry};
use crate::trace::{
    build_access_graph, compute_stats, AccessGraph, AccessSequence, AccessStats, TraceError, VariableId,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HeuristicError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("infeasible split: {disjoint} disjoint variables need {k} of {q} DBCs, leaving no room for {leftover} others")]
    InfeasibleSplit { disjoint: usize, k: usize, q: usize, leftover: usize },
}

/// Per-sequence data shared by every strategy.
#[derive(Debug, Clone)]
pub struct PlacementContext<'a> {
    pub seq: &'a AccessSequence,
    pub stats: AccessStats,
    pub graph: AccessGraph,
}

impl<'a> PlacementContext<'a> {
    pub fn new(seq: &'a AccessSequence) -> Result<Self, TraceError> {
        Ok(Self { seq, stats: compute_stats(seq)?, graph: build_access_graph(seq)? })
    }

    pub fn var_count(&self) -> usize {
        self.seq.var_count()
    }

    /// Accesses of `seq` that hit a member of `vars`, in trace order.
    pub fn restrict(&self, vars: &[VariableId]) -> Vec<VariableId> {
        let mut member = vec![false; self.var_count()];
        for v in vars {
            member[v.index()] = true;
        }
        self.seq.accesses().iter().map(|a| a.var).filter(|v| member[v.index()]).collect()
    }
}

/// Orders the variables of one DBC.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntraDbcOptimizer {
    /// Order of first use.
    Ofu,
    /// Offset-assignment style greedy path cover over the DBC's access graph.
    GreedyGraph,
    /// Greedy path cover refined by exact-cost local search.
    LocalSearch { max_passes: usize },
}

impl IntraDbcOptimizer {
    pub const DEFAULT_LOCAL_SEARCH_PASSES: usize = 50;

    pub fn local_search() -> Self {
        IntraDbcOptimizer::LocalSearch { max_passes: Self::DEFAULT_LOCAL_SEARCH_PASSES }
    }

    pub fn name(&self) -> &'static str {
        match self {
            IntraDbcOptimizer::Ofu => "ofu",
            IntraDbcOptimizer::GreedyGraph => "gg",
            IntraDbcOptimizer::LocalSearch { .. } => "ls",
        }
    }

    /// Reorders `vars`; the output is always a permutation of the input.
    pub fn order(&self, vars: &[VariableId], ctx: &PlacementContext<'_>) -> Vec<VariableId> {
        if vars.len() <= 1 {
            return vars.to_vec();
        }
        match *self {
            IntraDbcOptimizer::Ofu => intra_ofu(vars, &ctx.stats),
            IntraDbcOptimizer::GreedyGraph => {
                let sub = ctx.restrict(vars);
                intra_greedy_graph(vars, &subsequence_graph(&sub), &ctx.stats)
            }
            IntraDbcOptimizer::LocalSearch { max_passes } => {
                let sub = ctx.restrict(vars);
                let start = intra_greedy_graph(vars, &subsequence_graph(&sub), &ctx.stats);
                intra_local_search(&start, &sub, max_passes)
            }
        }
    }
}

impl fmt::Display for IntraDbcOptimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IntraDbcOptimizer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ofu" => Ok(IntraDbcOptimizer::Ofu),
            "gg" => Ok(IntraDbcOptimizer::GreedyGraph),
            "ls" => Ok(IntraDbcOptimizer::local_search()),
            other => Err(format!("unknown intra-DBC optimizer `{other}`")),
        }
    }
}

fn subsequence_graph(sub: &[VariableId]) -> AccessGraph {
    let mut g = AccessGraph::default();
    for w in sub.windows(2) {
        g.add_weight(w[0], w[1], 1);
    }
    g
}

/// Descending frequency; ties by ascending first use, then ascending id.
fn frequency_rank(stats: &AccessStats) -> impl Fn(&VariableId) -> (Reverse<u64>, usize, VariableId) + '_ {
    move |&v| {
        let s = stats.of(v);
        (Reverse(s.freq), s.first, v)
    }
}

pub fn intra_ofu(vars: &[VariableId], stats: &AccessStats) -> Vec<VariableId> {
    let mut out = vars.to_vec();
    out.sort_by_key(|&v| (stats.of(v).first, v));
    out
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Greedy maximum-weight path cover.
///
/// Edges among `vars` are taken by descending weight (ties: lexicographic
/// endpoint ids) unless they close a cycle or give a vertex degree 3. Paths are
/// emitted heaviest first, each starting from its endpoint used first;
/// variables without a selected edge follow in order of first use.
pub fn intra_greedy_graph(vars: &[VariableId], graph: &AccessGraph, stats: &AccessStats) -> Vec<VariableId> {
    let n = vars.len();
    let local: std::collections::HashMap<VariableId, usize> =
        vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();

    let mut edges: Vec<(u64, VariableId, VariableId)> = graph
        .edges()
        .filter(|(u, v, _)| local.contains_key(u) && local.contains_key(v))
        .map(|(u, v, w)| (w, u, v))
        .collect();
    edges.sort_by_key(|&(w, u, v)| (Reverse(w), u, v));

    let mut sets = DisjointSets::new(n);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut weight_of = vec![0u64; n];
    for (w, u, v) in edges {
        let (a, b) = (local[&u], local[&v]);
        if adj[a].len() >= 2 || adj[b].len() >= 2 {
            continue;
        }
        if !sets.union(a, b) {
            continue;
        }
        adj[a].push(b);
        adj[b].push(a);
        weight_of[a] += w;
    }

    let first = |i: usize| stats.of(vars[i]).first;
    let mut visited = vec![false; n];
    let mut paths: Vec<(u64, usize, Vec<usize>)> = Vec::new();
    for start in 0..n {
        if visited[start] || adj[start].len() != 1 {
            continue;
        }
        let mut path = vec![start];
        visited[start] = true;
        let (mut prev, mut cur) = (start, adj[start][0]);
        loop {
            path.push(cur);
            visited[cur] = true;
            match adj[cur].iter().find(|&&x| x != prev) {
                Some(&next) => {
                    prev = cur;
                    cur = next;
                }
                None => break,
            }
        }
        if first(*path.last().unwrap()) < first(path[0]) {
            path.reverse();
        }
        let total: u64 = path.iter().map(|&i| weight_of[i]).sum();
        let head = first(path[0]);
        paths.push((total, head, path));
    }
    paths.sort_by_key(|&(w, head, _)| (Reverse(w), head));

    let mut out: Vec<VariableId> = paths.into_iter().flat_map(|(_, _, p)| p).map(|i| vars[i]).collect();
    let isolated: Vec<VariableId> = (0..n).filter(|&i| adj[i].is_empty()).map(|i| vars[i]).collect();
    out.extend(intra_ofu(&isolated, stats));
    debug_assert_eq!(out.len(), n);
    out
}

/// First-improvement local search over adjacent transpositions and single
/// variable reinsertions, scored by exact single-DBC shift cost.
pub fn intra_local_search(layout: &[VariableId], subsequence: &[VariableId], max_passes: usize) -> Vec<VariableId> {
    let mut cur = layout.to_vec();
    let n = cur.len();
    if n < 2 {
        return cur;
    }
    let mut best = single_dbc_shifts(&cur, subsequence);
    for _ in 0..max_passes {
        let mut improved = false;
        for i in 0..n - 1 {
            cur.swap(i, i + 1);
            let c = single_dbc_shifts(&cur, subsequence);
            if c < best {
                best = c;
                improved = true;
            } else {
                cur.swap(i, i + 1);
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i == j || i.abs_diff(j) == 1 {
                    continue;
                }
                let v = cur.remove(i);
                cur.insert(j, v);
                let c = single_dbc_shifts(&cur, subsequence);
                if c < best {
                    best = c;
                    improved = true;
                } else {
                    let v = cur.remove(j);
                    cur.insert(i, v);
                }
            }
        }
        if !improved {
            break;
        }
    }
    cur
}

/// Frequency-sorted round-robin distribution.
pub fn afd_place(
    ctx: &PlacementContext<'_>,
    geometry: RtmGeometry,
    intra: IntraDbcOptimizer,
) -> Result<Placement, HeuristicError> {
    geometry.check_feasible(ctx.var_count())?;
    let mut order: Vec<VariableId> = ctx.seq.variables().ids().collect();
    order.sort_by_key(frequency_rank(&ctx.stats));
    let q = geometry.dbc_count();
    let mut dbcs = vec![Vec::new(); q];
    for (i, v) in order.into_iter().enumerate() {
        dbcs[i % q].push(v);
    }
    let dbcs = dbcs.iter().map(|d| intra.order(d, ctx)).collect();
    Ok(Placement::new(dbcs))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DmaPartition {
    /// Lifespan-disjoint variables, ascending first use.
    pub disjoint: Vec<VariableId>,
    /// Everything else, ascending first use.
    pub non_disjoint: Vec<VariableId>,
    /// DBCs reserved for `disjoint`.
    pub disjoint_dbcs: usize,
}

/// Selects the disjoint chain.
///
/// Scanning variables by first use, `v` is taken when it starts after the
/// last taken variable ends and its frequency exceeds the summed frequency of
/// the remaining variables whose lifespans lie strictly inside its own.
pub fn dma_partition(stats: &AccessStats, geometry: RtmGeometry) -> DmaPartition {
    let order = stats.by_first_use();
    let mut taken = vec![false; stats.var_count()];
    let mut disjoint = Vec::new();
    let mut t_min = 0usize;
    for &v in &order {
        let sv = stats.of(v);
        if sv.freq == 0 || sv.first <= t_min {
            continue;
        }
        let nested: u64 = order
            .iter()
            .filter(|&&u| !taken[u.index()])
            .map(|&u| stats.of(u))
            .filter(|su| su.freq > 0 && su.first > sv.first && su.last < sv.last)
            .map(|su| su.freq)
            .sum();
        if sv.freq > nested {
            taken[v.index()] = true;
            disjoint.push(v);
            t_min = sv.last;
        }
    }
    let non_disjoint = order.into_iter().filter(|v| !taken[v.index()]).collect();
    let disjoint_dbcs = disjoint.len().div_ceil(geometry.locations_per_dbc());
    DmaPartition { disjoint, non_disjoint, disjoint_dbcs }
}

/// Lays out a [`DmaPartition`].
///
/// Disjoint variables are dealt round-robin to DBCs `0..K` by ascending first
/// use and keep that order. The rest are dealt round-robin to DBCs `K..q` by
/// descending frequency and then reordered by `intra`.
pub fn dma_place(
    partition: &DmaPartition,
    ctx: &PlacementContext<'_>,
    geometry: RtmGeometry,
    intra: IntraDbcOptimizer,
) -> Result<Placement, HeuristicError> {
    let q = geometry.dbc_count();
    let n = geometry.locations_per_dbc();
    let k = partition.disjoint_dbcs;
    geometry.check_feasible(ctx.var_count())?;
    let leftover = partition.non_disjoint.len();
    let split_fails = k > q
        || (k == q && leftover > 0)
        || (k < q && leftover > (q - k) * n);
    if split_fails {
        return Err(HeuristicError::InfeasibleSplit {
            disjoint: partition.disjoint.len(),
            k,
            q,
            leftover,
        });
    }

    let mut dbcs: Vec<Vec<VariableId>> = vec![Vec::new(); q];
    for (i, &v) in partition.disjoint.iter().enumerate() {
        dbcs[i % k].push(v);
    }
    let mut rest = partition.non_disjoint.clone();
    rest.sort_by_key(frequency_rank(&ctx.stats));
    for (i, v) in rest.into_iter().enumerate() {
        dbcs[k + i % (q - k)].push(v);
    }
    for d in dbcs.iter_mut().skip(k) {
        *d = intra.order(d, ctx);
    }
    Ok(Placement::new(dbcs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{evaluate_shifts, split_subsequences, validate};
    use crate::trace::are_disjoint;
    use proptest::prelude::*;

    fn seq(tokens: &str) -> AccessSequence {
        AccessSequence::from_symbols("t", tokens.split_whitespace())
    }

    fn names(s: &AccessSequence, vars: &[VariableId]) -> Vec<String> {
        vars.iter().map(|&v| s.symbol(v).to_owned()).collect()
    }

    fn layout_names(s: &AccessSequence, p: &Placement) -> Vec<Vec<String>> {
        p.dbcs().iter().map(|d| names(s, d)).collect()
    }

    #[test]
    fn afd_round_robin() {
        // frequencies: a5 b4 c3 d2 e1
        let s = seq("a a a a a b b b b c c c d d e");
        let ctx = PlacementContext::new(&s).unwrap();
        let p = afd_place(&ctx, RtmGeometry::new(2, 3).unwrap(), IntraDbcOptimizer::Ofu).unwrap();
        assert_eq!(layout_names(&s, &p), [vec!["a", "c", "e"], vec!["b", "d"]]);

        let p = afd_place(&ctx, RtmGeometry::new(1, 5).unwrap(), IntraDbcOptimizer::Ofu).unwrap();
        assert_eq!(layout_names(&s, &p), [vec!["a", "b", "c", "d", "e"]]);

        assert!(matches!(
            afd_place(&ctx, RtmGeometry::new(2, 2).unwrap(), IntraDbcOptimizer::Ofu),
            Err(HeuristicError::Layout(LayoutError::Infeasible { .. }))
        ));
    }

    #[test]
    fn afd_tie_breaks_by_first_use() {
        // Frequencies a:5 g:4 b:3 d:3 h:3 e:3 i:2 c:2 f:1, first uses in the
        // order a g b d h e i c f. Sorted: a g b d h e i c f; round-robin over
        // two DBCs gives {a,b,h,i,f} and {g,d,e,c}.
        let s = seq("a g b d h e i c f a a a a g g g b b d d h h e e i c");
        let ctx = PlacementContext::new(&s).unwrap();
        let p = afd_place(&ctx, RtmGeometry::new(2, 5).unwrap(), IntraDbcOptimizer::Ofu).unwrap();
        assert_eq!(
            layout_names(&s, &p),
            [vec!["a", "b", "h", "i", "f"], vec!["g", "d", "e", "c"]]
        );
    }

    #[test]
    fn dma_nesting_rule_rejects_dominated_variable() {
        // a (freq 5) spans b, c, d (freq 2 each, sum 6): a is not taken.
        let s = seq("a b b a c c a d d a a");
        let ctx = PlacementContext::new(&s).unwrap();
        let part = dma_partition(&ctx.stats, RtmGeometry::new(2, 8).unwrap());
        assert_eq!(names(&s, &part.disjoint), ["b", "c", "d"]);
        assert_eq!(names(&s, &part.non_disjoint), ["a"]);
        assert_eq!(part.disjoint_dbcs, 1);
    }

    #[test]
    fn dma_nesting_tie_is_not_enough() {
        // a and the nested b both have 2 accesses; b wins the tie.
        let s = seq("a b b a");
        let ctx = PlacementContext::new(&s).unwrap();
        let part = dma_partition(&ctx.stats, RtmGeometry::new(2, 2).unwrap());
        assert_eq!(names(&s, &part.disjoint), ["b"]);
        assert_eq!(names(&s, &part.non_disjoint), ["a"]);
    }

    #[test]
    fn dma_all_disjoint() {
        let s = seq("a a b b c c");
        let ctx = PlacementContext::new(&s).unwrap();
        for n in 1..=4 {
            let part = dma_partition(&ctx.stats, RtmGeometry::new(3, n).unwrap());
            assert_eq!(names(&s, &part.disjoint), ["a", "b", "c"]);
            assert!(part.non_disjoint.is_empty());
            assert_eq!(part.disjoint_dbcs, 3usize.div_ceil(n));
        }
    }

    #[test]
    fn dma_place_separates_disjoint_chain() {
        let s = seq("a b b a c c a d d a a");
        let ctx = PlacementContext::new(&s).unwrap();
        let g = RtmGeometry::new(2, 8).unwrap();
        let part = dma_partition(&ctx.stats, g);
        let p = dma_place(&part, &ctx, g, IntraDbcOptimizer::Ofu).unwrap();
        assert_eq!(layout_names(&s, &p), [vec!["b", "c", "d"], vec!["a"]]);
        // b c d cost 2, a alone costs 0
        assert_eq!(evaluate_shifts(&p, &s).unwrap().total_shifts, 2);
    }

    #[test]
    fn dma_place_round_robins_over_k_dbcs() {
        // five disjoint variables followed by a long-lived pair
        let s = seq("p p q q r r s s t t x y x y x y");
        let ctx = PlacementContext::new(&s).unwrap();
        let g = RtmGeometry::new(4, 2).unwrap();
        let part = dma_partition(&ctx.stats, g);
        assert_eq!(names(&s, &part.disjoint), ["p", "q", "r", "s", "t", "x"]);
        assert_eq!(part.disjoint_dbcs, 3);
        let p = dma_place(&part, &ctx, g, IntraDbcOptimizer::Ofu).unwrap();
        assert_eq!(
            layout_names(&s, &p),
            [vec!["p", "s"], vec!["q", "t"], vec!["r", "x"], vec!["y"]]
        );

        let s = seq("p p q q r r s s t t");
        let ctx = PlacementContext::new(&s).unwrap();
        let g = RtmGeometry::new(4, 2).unwrap();
        let mut part = dma_partition(&ctx.stats, g);
        assert_eq!(part.disjoint_dbcs, 3);
        // demote t to the non-disjoint side by hand
        part.non_disjoint.push(part.disjoint.pop().unwrap());
        let p = dma_place(&part, &ctx, g, IntraDbcOptimizer::Ofu).unwrap();
        assert_eq!(
            layout_names(&s, &p),
            [vec!["p", "s"], vec!["q"], vec!["r"], vec!["t"]]
        );
    }

    #[test]
    fn dma_without_disjoint_set_matches_afd() {
        let s = seq("a b a b c a c b");
        let ctx = PlacementContext::new(&s).unwrap();
        let g = RtmGeometry::new(2, 2).unwrap();
        let part = DmaPartition {
            disjoint: vec![],
            non_disjoint: ctx.stats.by_first_use(),
            disjoint_dbcs: 0,
        };
        let dma = dma_place(&part, &ctx, g, IntraDbcOptimizer::Ofu).unwrap();
        let afd = afd_place(&ctx, g, IntraDbcOptimizer::Ofu).unwrap();
        assert_eq!(dma, afd);
    }

    #[test]
    fn dma_infeasible_split() {
        // all three disjoint variables fill DBC 0, but the nested d has nowhere to go
        let s = seq("a a c d c b b");
        let ctx = PlacementContext::new(&s).unwrap();
        let g = RtmGeometry::new(1, 4).unwrap();
        let part = dma_partition(&ctx.stats, g);
        assert_eq!(part.disjoint_dbcs, 1);
        assert!(matches!(
            dma_place(&part, &ctx, g, IntraDbcOptimizer::Ofu),
            Err(HeuristicError::InfeasibleSplit { k: 1, q: 1, .. })
        ));
    }

    #[test]
    fn ofu_examples() {
        let s = seq("x y z");
        let st = compute_stats(&s).unwrap();
        let [x, y, z] = [VariableId(0), VariableId(1), VariableId(2)];
        assert_eq!(intra_ofu(&[y, x], &st), [x, y]);
        assert_eq!(intra_ofu(&[z], &st), [z]);
        // first uses: x=3, y=1, z=2
        let s = seq("y z x");
        let st = compute_stats(&s).unwrap();
        let (x, y, z) = (VariableId(2), VariableId(0), VariableId(1));
        assert_eq!(intra_ofu(&[x, y, z], &st), [y, z, x]);
    }

    #[test]
    fn greedy_graph_examples() {
        let s = seq("a b c");
        let st = compute_stats(&s).unwrap();
        let [a, b, c] = [VariableId(0), VariableId(1), VariableId(2)];
        let mut g = AccessGraph::default();
        g.add_weight(a, b, 5);
        g.add_weight(b, c, 4);
        g.add_weight(a, c, 1);
        assert_eq!(intra_greedy_graph(&[c, b, a], &g, &st), [a, b, c]);

        assert_eq!(intra_greedy_graph(&[c, a, b], &AccessGraph::default(), &st), [a, b, c]);

        let mut g = AccessGraph::default();
        g.add_weight(a, c, 2);
        let out = intra_greedy_graph(&[a, b, c], &g, &st);
        assert_eq!(out, [a, c, b]);
    }

    #[test]
    fn greedy_rejects_degree_three() {
        // star centred on h: only two spokes survive
        let s = seq("h a b c");
        let st = compute_stats(&s).unwrap();
        let [h, a, b, c] = [0, 1, 2, 3].map(VariableId);
        let mut g = AccessGraph::default();
        g.add_weight(h, a, 3);
        g.add_weight(h, b, 2);
        g.add_weight(h, c, 1);
        let out = intra_greedy_graph(&[h, a, b, c], &g, &st);
        // path a-h-b (weight 5) starts at the endpoint used first, then c
        assert_eq!(out, [a, h, b, c]);
    }

    fn all_permutations(items: &[VariableId]) -> Vec<Vec<VariableId>> {
        if items.len() <= 1 {
            return vec![items.to_vec()];
        }
        let mut out = Vec::new();
        for i in 0..items.len() {
            let mut rest = items.to_vec();
            let head = rest.remove(i);
            for mut tail in all_permutations(&rest) {
                tail.insert(0, head);
                out.push(tail);
            }
        }
        out
    }

    #[test]
    fn local_search_examples() {
        let [a, b, c] = [VariableId(0), VariableId(1), VariableId(2)];
        let sub = [a, c, a, c, b];
        // enumerate all six layouts as the oracle
        let costs: Vec<(u64, Vec<VariableId>)> = all_permutations(&[a, b, c])
            .into_iter()
            .map(|p| (single_dbc_shifts(&p, &sub), p))
            .collect();
        let start_cost = single_dbc_shifts(&[a, b, c], &sub);
        assert_eq!(start_cost, 7);
        let optimum = costs.iter().map(|x| x.0).min().unwrap();
        assert_eq!(optimum, 4);

        let out = intra_local_search(&[a, b, c], &sub, 10);
        let cost = single_dbc_shifts(&out, &sub);
        assert!(cost < start_cost);
        let (pa, pc) = (out.iter().position(|&x| x == a).unwrap(), out.iter().position(|&x| x == c).unwrap());
        assert_eq!(pa.abs_diff(pc), 1);

        let best = costs.iter().min().unwrap().1.clone();
        assert_eq!(intra_local_search(&best, &sub, 10), best);
        assert_eq!(intra_local_search(&[a, b, c], &sub, 0), [a, b, c]);
    }

    #[test]
    fn intra_optimizer_names_parse() {
        for s in ["ofu", "gg", "ls"] {
            assert_eq!(s.parse::<IntraDbcOptimizer>().unwrap().name(), s);
        }
        assert!("chen".parse::<IntraDbcOptimizer>().is_err());
    }

    fn arb_seq() -> impl Strategy<Value = AccessSequence> {
        (1usize..10, 1usize..50).prop_flat_map(|(vars, len)| {
            proptest::collection::vec(0..vars, len)
                .prop_map(|raw| AccessSequence::from_symbols("p", raw.iter().map(|v| SYMS[*v])))
        })
    }

    const SYMS: [&str; 10] = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"];

    const INTRAS: [IntraDbcOptimizer; 3] = [
        IntraDbcOptimizer::Ofu,
        IntraDbcOptimizer::GreedyGraph,
        IntraDbcOptimizer::LocalSearch { max_passes: 20 },
    ];

    proptest! {
        #[test]
        fn strategies_are_valid_and_deterministic(s in arb_seq(), q in 1usize..5, slack in 0usize..3) {
            let ctx = PlacementContext::new(&s).unwrap();
            let n = s.var_count().div_ceil(q) + slack;
            let g = RtmGeometry::new(q, n).unwrap();
            for intra in INTRAS {
                let p = afd_place(&ctx, g, intra).unwrap();
                prop_assert_eq!(validate(&p, g, s.variables()), Ok(()));
                prop_assert_eq!(&p, &afd_place(&ctx, g, intra).unwrap());
                let part = dma_partition(&ctx.stats, g);
                match dma_place(&part, &ctx, g, intra) {
                    Ok(p) => {
                        prop_assert_eq!(validate(&p, g, s.variables()), Ok(()));
                        prop_assert_eq!(&p, &dma_place(&part, &ctx, g, intra).unwrap());
                    }
                    Err(HeuristicError::InfeasibleSplit { .. }) => {}
                    Err(e) => prop_assert!(false, "unexpected {e}"),
                }
            }
        }

        #[test]
        fn partition_invariants(s in arb_seq(), n in 1usize..6) {
            let ctx = PlacementContext::new(&s).unwrap();
            let g = RtmGeometry::new(4, n).unwrap();
            let part = dma_partition(&ctx.stats, g);
            for (i, &u) in part.disjoint.iter().enumerate() {
                for &v in &part.disjoint[i + 1..] {
                    prop_assert!(are_disjoint(u, v, &ctx.stats).unwrap());
                }
            }
            let lasts: Vec<_> = part.disjoint.iter().map(|&v| ctx.stats.of(v).last).collect();
            prop_assert!(lasts.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(part.disjoint_dbcs, part.disjoint.len().div_ceil(n));
            let mut all: Vec<_> = part.disjoint.iter().chain(&part.non_disjoint).copied().collect();
            all.sort();
            prop_assert_eq!(all, s.variables().ids().collect::<Vec<_>>());
        }

        #[test]
        fn disjoint_dbcs_cost_at_most_len_minus_one(s in arb_seq(), q in 2usize..5, n in 1usize..6) {
            let ctx = PlacementContext::new(&s).unwrap();
            let n = n.max(s.var_count().div_ceil(q));
            let g = RtmGeometry::new(q, n).unwrap();
            let part = dma_partition(&ctx.stats, g);
            if let Ok(p) = dma_place(&part, &ctx, g, IntraDbcOptimizer::Ofu) {
                let r = evaluate_shifts(&p, &s).unwrap();
                for d in 0..part.disjoint_dbcs {
                    prop_assert_eq!(r.per_dbc_shifts[d], p.dbcs()[d].len() as u64 - 1);
                }
            }
        }

        #[test]
        fn local_search_never_worsens(s in arb_seq(), passes in 0usize..5) {
            let ctx = PlacementContext::new(&s).unwrap();
            let vars: Vec<_> = s.variables().ids().rev().collect();
            let sub = ctx.restrict(&vars);
            let out = intra_local_search(&vars, &sub, passes);
            prop_assert!(single_dbc_shifts(&out, &sub) <= single_dbc_shifts(&vars, &sub));
            let mut sorted = out.clone();
            sorted.sort();
            prop_assert_eq!(sorted, s.variables().ids().collect::<Vec<_>>());
        }

        #[test]
        fn greedy_is_permutation(s in arb_seq()) {
            let ctx = PlacementContext::new(&s).unwrap();
            let vars: Vec<_> = s.variables().ids().collect();
            let mut out = intra_greedy_graph(&vars, &ctx.graph, &ctx.stats);
            out.sort();
            prop_assert_eq!(out, vars);
        }
    }

    #[test]
    fn split_matches_restrict() {
        let s = seq("a b c b a d");
        let ctx = PlacementContext::new(&s).unwrap();
        let p = afd_place(&ctx, RtmGeometry::new(2, 2).unwrap(), IntraDbcOptimizer::Ofu).unwrap();
        let subs = split_subsequences(&p, &s).unwrap();
        for (d, sub) in subs.iter().enumerate() {
            let vars: Vec<_> = sub.iter().map(|a| a.var).collect();
            assert_eq!(vars, ctx.restrict(&p.dbcs()[d]));
        }
    }
}
