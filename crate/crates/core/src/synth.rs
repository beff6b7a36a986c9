//! Synthetic traces with a planted chain of lifespan-disjoint variables.
//!
//! Layout of a generated sequence:
//!
//! ```text
//! prologue | phase 0 | phase 1 | ... | phase c-1 | epilogue
//! ```
//!
//! The prologue and epilogue touch every background variable `v<i>` once, in
//! the same order, so each background lifespan strictly contains every phase.
//! Phase `i` belongs to planted variable `p<i>`: it opens with `p<i>` and at
//! least 60% of its slots are `p<i>`, the rest uniform background accesses.
//!
//! With planted accesses outweighing any single background variable, the
//! disjoint-set extraction selects exactly `p0 .. p<c-1>`, and storing them
//! in one DBC in that order costs `c - 1` shifts.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::{write_trace, AccessSequence};

/// Minimum share of each phase occupied by its planted variable.
pub const PLANTED_SHARE: f64 = 0.6;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub variables: usize,
    pub length: usize,
    pub clusters: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticTrace {
    pub sequence: AccessSequence,
    /// Planted disjoint variables in first-use order.
    pub planted: Vec<String>,
}

impl SyntheticTrace {
    /// Trace file text, with the planted structure recorded in comments.
    pub fn to_trace_file(&self, params: &SyntheticParams) -> String {
        format!(
            "# synthetic trace: variables={} length={} clusters={} seed={}\n\
             # planted disjoint variables (first-use order): {}\n\
             # storing them in one DBC in this order costs {} shifts\n{}",
            params.variables,
            params.length,
            params.clusters,
            params.seed,
            if self.planted.is_empty() { "(none)".to_owned() } else { self.planted.join(" ") },
            self.planted.len().saturating_sub(1),
            write_trace(std::slice::from_ref(&self.sequence)),
        )
    }
}

pub fn generate(params: &SyntheticParams) -> Result<SyntheticTrace, SynthError> {
    let SyntheticParams { variables, length, clusters, seed } = *params;
    let bad = |m: String| Err(SynthError::InvalidParams(m));
    if variables == 0 || length == 0 {
        return bad("variables and length must be positive".into());
    }
    if clusters > variables {
        return bad(format!("{clusters} clusters need at least as many variables, got {variables}"));
    }
    let background = variables - clusters;
    let body = length.saturating_sub(2 * background);
    if clusters > 0 && body < clusters.max(10) {
        return bad(format!(
            "length {length} leaves {body} body slots for {clusters} phases; need at least max(clusters, 10)"
        ));
    }
    if clusters == 0 && length < 2 * background + 1 {
        return bad(format!("length {length} too short for {background} background variables"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bg: Vec<String> = (0..background).map(|i| format!("v{i}")).collect();
    let planted: Vec<String> = (0..clusters).map(|i| format!("p{i}")).collect();
    let mut tokens: Vec<&str> = Vec::with_capacity(length);
    tokens.extend(bg.iter().map(String::as_str));

    if clusters == 0 {
        for _ in 0..body {
            tokens.push(bg.choose(&mut rng).expect("background exists").as_str());
        }
    } else {
        for (i, p) in planted.iter().enumerate() {
            let len = body / clusters + usize::from(i < body % clusters);
            let hot = if background == 0 { len } else { ((len as f64) * PLANTED_SHARE).ceil() as usize };
            let mut slots: Vec<bool> = (0..len - 1).map(|k| k < hot - 1).collect();
            slots.shuffle(&mut rng);
            tokens.push(p);
            for is_hot in slots {
                if is_hot {
                    tokens.push(p);
                } else {
                    tokens.push(bg.choose(&mut rng).expect("background exists").as_str());
                }
            }
        }
    }
    tokens.extend(bg.iter().map(String::as_str));
    debug_assert_eq!(tokens.len(), length);

    let name = format!("synth_s{seed}");
    Ok(SyntheticTrace { sequence: AccessSequence::from_symbols(name, tokens), planted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heuristics::{dma_partition, PlacementContext};
    use crate::layout::RtmGeometry;
    use crate::trace::parse_trace;

    fn params(variables: usize, length: usize, clusters: usize, seed: u64) -> SyntheticParams {
        SyntheticParams { variables, length, clusters, seed }
    }

    #[test]
    fn planted_set_is_recovered() {
        for seed in 0..25 {
            let p = params(12, 120, 3, seed);
            let t = generate(&p).unwrap();
            assert_eq!(t.sequence.len(), 120);
            let ctx = PlacementContext::new(&t.sequence).unwrap();
            let part = dma_partition(&ctx.stats, RtmGeometry::new(2, 512).unwrap());
            let names: Vec<_> = part.disjoint.iter().map(|&v| t.sequence.symbol(v)).collect();
            assert_eq!(names, ["p0", "p1", "p2"]);
        }
    }

    #[test]
    fn deterministic_and_parseable() {
        let p = params(20, 300, 5, 42);
        let a = generate(&p).unwrap().to_trace_file(&p);
        let b = generate(&p).unwrap().to_trace_file(&p);
        assert_eq!(a, b);
        let seqs = parse_trace(&a).unwrap();
        assert_eq!(seqs.len(), 1);
        assert_eq!(seqs[0], generate(&p).unwrap().sequence);
        assert_ne!(a, generate(&params(20, 300, 5, 43)).unwrap().to_trace_file(&p));
    }

    #[test]
    fn rejects_degenerate_parameters() {
        assert!(generate(&params(5, 0, 1, 0)).is_err());
        assert!(generate(&params(0, 10, 0, 0)).is_err());
        assert!(generate(&params(3, 50, 4, 0)).is_err());
        assert!(generate(&params(10, 20, 3, 0)).is_err());
    }

    #[test]
    fn edge_shapes() {
        let only_planted = generate(&params(4, 40, 4, 1)).unwrap();
        assert_eq!(only_planted.sequence.var_count(), 4);
        let only_bg = generate(&params(4, 9, 0, 1)).unwrap();
        assert!(only_bg.planted.is_empty());
        assert_eq!(only_bg.sequence.len(), 9);
    }
}
