//! Access-sequence corpora and the statistics derived from them.
//!
//! A trace file holds one access sequence per line. Each sequence carries its
//! own variable table; symbols are interned in order of first appearance, so
//! dense index order coincides with first-use order.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

/// Dense 0-based index of a variable within one sequence's table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableId(pub u32);

impl VariableId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("line {line}: malformed token `{token}`")]
    MalformedToken { line: usize, token: String },
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("line {line}: duplicate sequence name `{name}`")]
    DuplicateName { line: usize, name: String },
    #[error("line {line}: header `@name {name}` is not followed by a sequence")]
    DanglingHeader { line: usize, name: String },
    #[error("unknown variable {0}")]
    UnknownVariable(VariableId),
    #[error("empty access sequence")]
    EmptySequence,
}

/// Interning table mapping symbols to dense ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VariableTable {
    symbols: Vec<String>,
    lookup: HashMap<String, VariableId>,
}

impl VariableTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id for `symbol`, allocating the next dense index if unseen.
    pub fn intern(&mut self, symbol: &str) -> VariableId {
        if let Some(&id) = self.lookup.get(symbol) {
            return id;
        }
        let id = VariableId(self.symbols.len() as u32);
        self.symbols.push(symbol.to_owned());
        self.lookup.insert(symbol.to_owned(), id);
        id
    }

    pub fn get(&self, symbol: &str) -> Option<VariableId> {
        self.lookup.get(symbol).copied()
    }

    pub fn symbol(&self, id: VariableId) -> Option<&str> {
        self.symbols.get(id.index()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn contains(&self, id: VariableId) -> bool {
        id.index() < self.symbols.len()
    }

    pub fn ids(&self) -> impl DoubleEndedIterator<Item = VariableId> + ExactSizeIterator + '_ {
        (0..self.symbols.len() as u32).map(VariableId)
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AccessKind {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Access {
    pub var: VariableId,
    pub kind: AccessKind,
}

impl Access {
    pub fn read(var: VariableId) -> Self {
        Self { var, kind: AccessKind::Read }
    }

    pub fn write(var: VariableId) -> Self {
        Self { var, kind: AccessKind::Write }
    }
}

/// An ordered trace of accesses together with the table it refers to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessSequence {
    name: String,
    variables: VariableTable,
    accesses: Vec<Access>,
}

impl AccessSequence {
    /// Builds a sequence, checking that every access refers to the table.
    pub fn new(
        name: impl Into<String>,
        variables: VariableTable,
        accesses: Vec<Access>,
    ) -> Result<Self, TraceError> {
        if let Some(a) = accesses.iter().find(|a| !variables.contains(a.var)) {
            return Err(TraceError::UnknownVariable(a.var));
        }
        Ok(Self { name: name.into(), variables, accesses })
    }

    /// Convenience constructor from read-only symbol tokens.
    pub fn from_symbols<'a>(
        name: impl Into<String>,
        symbols: impl IntoIterator<Item = &'a str>,
    ) -> Self {
        let mut variables = VariableTable::new();
        let accesses = symbols
            .into_iter()
            .map(|s| Access::read(variables.intern(s)))
            .collect();
        Self { name: name.into(), variables, accesses }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn variables(&self) -> &VariableTable {
        &self.variables
    }

    pub fn accesses(&self) -> &[Access] {
        &self.accesses
    }

    pub fn len(&self) -> usize {
        self.accesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accesses.is_empty()
    }

    pub fn var_count(&self) -> usize {
        self.variables.len()
    }

    pub fn symbol(&self, id: VariableId) -> &str {
        self.variables.symbol(id).expect("id from this sequence's table")
    }

    /// Renders the sequence back into the line-oriented trace format.
    pub fn to_trace_string(&self) -> String {
        let mut out = format!("@name {}\n", self.name);
        let tokens: Vec<String> = self
            .accesses
            .iter()
            .map(|a| {
                let sym = self.symbol(a.var);
                match a.kind {
                    AccessKind::Read => sym.to_owned(),
                    AccessKind::Write => format!("{sym}!"),
                }
            })
            .collect();
        out.push_str(&tokens.join(" "));
        out.push('\n');
        out
    }
}

fn parse_token(token: &str, line: usize) -> Result<(&str, AccessKind), TraceError> {
    let (symbol, kind) = match token.strip_suffix('!') {
        Some(s) => (s, AccessKind::Write),
        None => (token, AccessKind::Read),
    };
    if symbol.is_empty() || symbol.contains('!') || symbol.starts_with('@') {
        return Err(TraceError::MalformedToken { line, token: token.to_owned() });
    }
    Ok((symbol, kind))
}

/// Parses a trace file into independent sequences.
///
/// Unnamed sequences are labelled `seq<k>` with `k` the 0-based ordinal of the
/// sequence in the file.
pub fn parse_trace(text: &str) -> Result<Vec<AccessSequence>, TraceError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut pending: Option<(usize, String)> = None;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let mut tokens = line.split_whitespace().peekable();
        let Some(&first) = tokens.peek() else { continue };

        if first.starts_with('@') {
            if first != "@name" {
                return Err(TraceError::MalformedHeader {
                    line: lineno,
                    reason: format!("unknown directive `{first}`"),
                });
            }
            tokens.next();
            let label = tokens.next().ok_or_else(|| TraceError::MalformedHeader {
                line: lineno,
                reason: "missing label".into(),
            })?;
            if tokens.next().is_some() {
                return Err(TraceError::MalformedHeader {
                    line: lineno,
                    reason: "label must be a single token".into(),
                });
            }
            if let Some((l, name)) = pending.take() {
                return Err(TraceError::DanglingHeader { line: l, name });
            }
            pending = Some((lineno, label.to_owned()));
            continue;
        }

        let name = match pending.take() {
            Some((_, name)) => name,
            None => format!("seq{}", out.len()),
        };
        if !seen.insert(name.clone()) {
            return Err(TraceError::DuplicateName { line: lineno, name });
        }
        let mut variables = VariableTable::new();
        let mut accesses = Vec::new();
        for token in tokens {
            let (symbol, kind) = parse_token(token, lineno)?;
            accesses.push(Access { var: variables.intern(symbol), kind });
        }
        out.push(AccessSequence { name, variables, accesses });
    }

    if let Some((line, name)) = pending {
        return Err(TraceError::DanglingHeader { line, name });
    }
    Ok(out)
}

/// Renders several sequences as one trace file.
pub fn write_trace(seqs: &[AccessSequence]) -> String {
    seqs.iter().map(AccessSequence::to_trace_string).collect()
}

/// Frequency and occurrence window of one variable. Positions are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarStats {
    pub freq: u64,
    pub first: usize,
    pub last: usize,
}

impl VarStats {
    pub fn lifespan(&self) -> usize {
        self.last - self.first
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessStats {
    vars: Vec<VarStats>,
    len: usize,
}

impl AccessStats {
    pub fn get(&self, v: VariableId) -> Result<&VarStats, TraceError> {
        self.vars.get(v.index()).ok_or(TraceError::UnknownVariable(v))
    }

    /// Panicking accessor for ids already known to belong to the sequence.
    pub fn of(&self, v: VariableId) -> &VarStats {
        &self.vars[v.index()]
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn sequence_len(&self) -> usize {
        self.len
    }

    pub fn iter(&self) -> impl Iterator<Item = (VariableId, &VarStats)> {
        self.vars.iter().enumerate().map(|(i, s)| (VariableId(i as u32), s))
    }

    /// Ids ordered by ascending first occurrence.
    pub fn by_first_use(&self) -> Vec<VariableId> {
        let mut ids: Vec<_> = (0..self.vars.len() as u32).map(VariableId).collect();
        ids.sort_by_key(|&v| self.of(v).first);
        ids
    }
}

/// Computes per-variable access frequency, first and last occurrence.
///
/// Variables present in the table but never accessed cannot occur in a parsed
/// sequence; for hand-built sequences they are reported with `freq == 0` and a
/// window pinned past the end of the trace.
pub fn compute_stats(seq: &AccessSequence) -> Result<AccessStats, TraceError> {
    if seq.is_empty() {
        return Err(TraceError::EmptySequence);
    }
    let n = seq.len();
    let mut vars = vec![VarStats { freq: 0, first: usize::MAX, last: 0 }; seq.var_count()];
    for (i, access) in seq.accesses().iter().enumerate() {
        let pos = i + 1;
        let s = &mut vars[access.var.index()];
        s.freq += 1;
        s.first = s.first.min(pos);
        s.last = s.last.max(pos);
    }
    for s in vars.iter_mut().filter(|s| s.freq == 0) {
        s.first = n + 1;
        s.last = n + 1;
    }
    Ok(AccessStats { vars, len: n })
}

/// True iff the lifespans of `u` and `v` do not overlap.
pub fn are_disjoint(u: VariableId, v: VariableId, stats: &AccessStats) -> Result<bool, TraceError> {
    let su = stats.get(u)?;
    let sv = stats.get(v)?;
    Ok(su.last < sv.first || sv.last < su.first)
}

/// Undirected weighted graph of consecutive accesses.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccessGraph {
    vertices: usize,
    // keyed by (min, max)
    edges: BTreeMap<(VariableId, VariableId), u64>,
}

impl AccessGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn weight(&self, u: VariableId, v: VariableId) -> u64 {
        let key = if u <= v { (u, v) } else { (v, u) };
        self.edges.get(&key).copied().unwrap_or(0)
    }

    /// Edges as `(u, v, w)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (VariableId, VariableId, u64)> + '_ {
        self.edges.iter().map(|(&(u, v), &w)| (u, v, w))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    /// Adds `w` to the edge `{u, v}`. Self-edges are ignored.
    pub fn add_weight(&mut self, u: VariableId, v: VariableId, w: u64) {
        if u == v || w == 0 {
            return;
        }
        self.vertices = self.vertices.max(u.index().max(v.index()) + 1);
        let key = if u < v { (u, v) } else { (v, u) };
        *self.edges.entry(key).or_insert(0) += w;
    }
}

pub fn build_access_graph(seq: &AccessSequence) -> Result<AccessGraph, TraceError> {
    if seq.is_empty() {
        return Err(TraceError::EmptySequence);
    }
    let mut graph = AccessGraph { vertices: seq.var_count(), edges: BTreeMap::new() };
    for pair in seq.accesses().windows(2) {
        graph.add_weight(pair[0].var, pair[1].var, 1);
    }
    Ok(graph)
}
