//! Placements of variables onto DBCs and exact shift accounting.
//!
//! Every DBC has a single access port whose alignment starts at offset 0.
//! Accessing a variable at offset `p` costs `|p - port|` shifts and leaves the
//! port aligned at `p`. Ports of different DBCs move independently.

use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::{Access, AccessKind, AccessSequence, VariableId, VariableTable};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LayoutError {
    #[error("geometry needs at least one DBC and one location per DBC (got q={q}, n={n})")]
    InvalidGeometry { q: usize, n: usize },
    #[error("{vars} variables do not fit into {q} DBCs of {n} locations")]
    Infeasible { vars: usize, q: usize, n: usize },
    #[error("access to unplaced variable {0}")]
    Unplaced(VariableId),
    #[error("unknown variable `{0}` in placement")]
    UnknownSymbol(String),
    #[error("invalid placement: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RtmGeometry {
    #[serde(rename = "q")]
    dbc_count: usize,
    #[serde(rename = "n")]
    locations_per_dbc: usize,
}

impl RtmGeometry {
    pub fn new(dbc_count: usize, locations_per_dbc: usize) -> Result<Self, LayoutError> {
        if dbc_count == 0 || locations_per_dbc == 0 {
            return Err(LayoutError::InvalidGeometry { q: dbc_count, n: locations_per_dbc });
        }
        Ok(Self { dbc_count, locations_per_dbc })
    }

    pub fn dbc_count(&self) -> usize {
        self.dbc_count
    }

    pub fn locations_per_dbc(&self) -> usize {
        self.locations_per_dbc
    }

    pub fn capacity(&self) -> usize {
        self.dbc_count * self.locations_per_dbc
    }

    pub fn is_feasible(&self, vars: usize) -> bool {
        vars <= self.capacity()
    }

    pub fn check_feasible(&self, vars: usize) -> Result<(), LayoutError> {
        if self.is_feasible(vars) {
            Ok(())
        } else {
            Err(LayoutError::Infeasible {
                vars,
                q: self.dbc_count,
                n: self.locations_per_dbc,
            })
        }
    }
}

/// Ordered variable lists, one per DBC. Offsets are list positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Placement {
    dbcs: Vec<Vec<VariableId>>,
}

impl Placement {
    pub fn new(dbcs: Vec<Vec<VariableId>>) -> Self {
        Self { dbcs }
    }

    pub fn empty(dbc_count: usize) -> Self {
        Self { dbcs: vec![Vec::new(); dbc_count] }
    }

    pub fn dbcs(&self) -> &[Vec<VariableId>] {
        &self.dbcs
    }

    pub fn dbcs_mut(&mut self) -> &mut [Vec<VariableId>] {
        &mut self.dbcs
    }

    pub fn into_dbcs(self) -> Vec<Vec<VariableId>> {
        self.dbcs
    }

    pub fn dbc_count(&self) -> usize {
        self.dbcs.len()
    }

    pub fn var_count(&self) -> usize {
        self.dbcs.iter().map(Vec::len).sum()
    }

    /// `(dbc, offset)` of `v`, by linear search.
    pub fn position(&self, v: VariableId) -> Option<(usize, usize)> {
        self.dbcs.iter().enumerate().find_map(|(d, vars)| {
            vars.iter().position(|&x| x == v).map(|p| (d, p))
        })
    }

    /// Dense position table indexed by variable id; `None` for unplaced ids.
    pub fn position_table(&self, var_count: usize) -> Vec<Option<(usize, usize)>> {
        let mut table = vec![None; var_count];
        for (d, vars) in self.dbcs.iter().enumerate() {
            for (p, v) in vars.iter().enumerate() {
                if let Some(slot) = table.get_mut(v.index()) {
                    *slot = Some((d, p));
                }
            }
        }
        table
    }

    /// Serializable form with symbols resolved through `table`.
    pub fn to_file(&self, geometry: RtmGeometry, table: &VariableTable) -> PlacementFile {
        PlacementFile {
            geometry,
            dbcs: self
                .dbcs
                .iter()
                .map(|vars| {
                    vars.iter()
                        .map(|&v| table.symbol(v).map(str::to_owned).unwrap_or_else(|| v.to_string()))
                        .collect()
                })
                .collect(),
        }
    }
}

/// JSON form: `{"geometry":{"q":..,"n":..},"dbcs":[["a","b"],["c"]]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementFile {
    pub geometry: RtmGeometry,
    pub dbcs: Vec<Vec<String>>,
}

impl PlacementFile {
    pub fn resolve(&self, table: &VariableTable) -> Result<Placement, LayoutError> {
        let dbcs = self
            .dbcs
            .iter()
            .map(|vars| {
                vars.iter()
                    .map(|s| table.get(s).ok_or_else(|| LayoutError::UnknownSymbol(s.clone())))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Placement::new(dbcs))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Missing(VariableId),
    Duplicate(VariableId),
    Unknown(VariableId),
    Capacity { dbc: usize, len: usize, limit: usize },
    DbcCount { expected: usize, found: usize },
}

impl Violation {
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::Missing(_) => "missing",
            Violation::Duplicate(_) => "duplicate",
            Violation::Unknown(_) => "unknown",
            Violation::Capacity { .. } => "capacity",
            Violation::DbcCount { .. } => "dbc-count",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Missing(v) => write!(f, "missing variable {v}"),
            Violation::Duplicate(v) => write!(f, "duplicate variable {v}"),
            Violation::Unknown(v) => write!(f, "unknown variable {v}"),
            Violation::Capacity { dbc, len, limit } => {
                write!(f, "capacity: DBC {dbc} holds {len} > {limit}")
            }
            Violation::DbcCount { expected, found } => {
                write!(f, "expected {expected} DBCs, found {found}")
            }
        }
    }
}

/// Collects every way `placement` fails to be a layout of `variables` on `geometry`.
pub fn validate(
    placement: &Placement,
    geometry: RtmGeometry,
    variables: &VariableTable,
) -> Result<(), Vec<Violation>> {
    validate_count(placement, geometry, variables.len())
}

/// As [`validate`], for the variable set `0..var_count`.
pub fn validate_count(
    placement: &Placement,
    geometry: RtmGeometry,
    var_count: usize,
) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    if placement.dbc_count() != geometry.dbc_count() {
        violations.push(Violation::DbcCount {
            expected: geometry.dbc_count(),
            found: placement.dbc_count(),
        });
    }
    let mut seen = vec![false; var_count];
    for (d, vars) in placement.dbcs().iter().enumerate() {
        if vars.len() > geometry.locations_per_dbc() {
            violations.push(Violation::Capacity {
                dbc: d,
                len: vars.len(),
                limit: geometry.locations_per_dbc(),
            });
        }
        for &v in vars {
            match seen.get_mut(v.index()) {
                None => violations.push(Violation::Unknown(v)),
                Some(true) => violations.push(Violation::Duplicate(v)),
                Some(slot) => *slot = true,
            }
        }
    }
    violations.extend(
        seen.iter()
            .enumerate()
            .filter(|(_, &s)| !s)
            .map(|(i, _)| Violation::Missing(VariableId(i as u32))),
    );
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ShiftReport {
    pub per_dbc_shifts: Vec<u64>,
    pub total_shifts: u64,
    pub reads: u64,
    pub writes: u64,
    pub accesses: u64,
}

impl Add for &ShiftReport {
    type Output = ShiftReport;

    fn add(self, rhs: &ShiftReport) -> ShiftReport {
        let len = self.per_dbc_shifts.len().max(rhs.per_dbc_shifts.len());
        let per_dbc_shifts = (0..len)
            .map(|i| {
                self.per_dbc_shifts.get(i).copied().unwrap_or(0)
                    + rhs.per_dbc_shifts.get(i).copied().unwrap_or(0)
            })
            .collect();
        ShiftReport {
            per_dbc_shifts,
            total_shifts: self.total_shifts + rhs.total_shifts,
            reads: self.reads + rhs.reads,
            writes: self.writes + rhs.writes,
            accesses: self.accesses + rhs.accesses,
        }
    }
}

/// Replays `seq` against `placement` and counts shifts per DBC.
pub fn evaluate_shifts(placement: &Placement, seq: &AccessSequence) -> Result<ShiftReport, LayoutError> {
    let table = placement.position_table(seq.var_count());
    let mut ports = vec![0usize; placement.dbc_count()];
    let mut report = ShiftReport {
        per_dbc_shifts: vec![0; placement.dbc_count()],
        ..ShiftReport::default()
    };
    for access in seq.accesses() {
        let (d, p) = table
            .get(access.var.index())
            .copied()
            .flatten()
            .ok_or(LayoutError::Unplaced(access.var))?;
        report.per_dbc_shifts[d] += ports[d].abs_diff(p) as u64;
        ports[d] = p;
        match access.kind {
            AccessKind::Read => report.reads += 1,
            AccessKind::Write => report.writes += 1,
        }
    }
    report.accesses = seq.len() as u64;
    report.total_shifts = report.per_dbc_shifts.iter().sum();
    Ok(report)
}

/// Total shifts only; the hot path for search.
///
/// `positions` is a table from [`Placement::position_table`]; every accessed
/// variable must be placed.
pub fn total_shifts_with(positions: &[Option<(usize, usize)>], dbc_count: usize, seq: &[Access]) -> u64 {
    let mut ports = vec![0usize; dbc_count];
    let mut total = 0u64;
    for access in seq {
        let (d, p) = positions[access.var.index()].expect("placed variable");
        total += ports[d].abs_diff(p) as u64;
        ports[d] = p;
    }
    total
}

/// Shift cost of a single DBC holding `layout`, replaying `subsequence`.
pub fn single_dbc_shifts(layout: &[VariableId], subsequence: &[VariableId]) -> u64 {
    let width = layout.iter().map(|v| v.index() + 1).max().unwrap_or(0);
    let mut offset = vec![usize::MAX; width];
    for (p, v) in layout.iter().enumerate() {
        offset[v.index()] = p;
    }
    let mut port = 0usize;
    let mut total = 0u64;
    for v in subsequence {
        let p = offset[v.index()];
        debug_assert!(p != usize::MAX, "variable outside layout");
        total += port.abs_diff(p) as u64;
        port = p;
    }
    total
}

/// Order-preserving projection of `seq` onto each DBC's variables.
pub fn split_subsequences(placement: &Placement, seq: &AccessSequence) -> Result<Vec<Vec<Access>>, LayoutError> {
    let table = placement.position_table(seq.var_count());
    let mut out = vec![Vec::new(); placement.dbc_count()];
    for &access in seq.accesses() {
        let (d, _) = table
            .get(access.var.index())
            .copied()
            .flatten()
            .ok_or(LayoutError::Unplaced(access.var))?;
        out[d].push(access);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(seq: &AccessSequence, names: &[&str]) -> Vec<VariableId> {
        names.iter().map(|s| seq.variables().get(s).unwrap()).collect()
    }

    fn place(seq: &AccessSequence, dbcs: &[&[&str]]) -> Placement {
        Placement::new(dbcs.iter().map(|d| ids(seq, d)).collect())
    }

    #[test]
    fn geometry_bounds() {
        assert!(RtmGeometry::new(0, 4).is_err());
        assert!(RtmGeometry::new(2, 0).is_err());
        let g = RtmGeometry::new(2, 3).unwrap();
        assert!(g.is_feasible(6));
        assert!(!g.is_feasible(7));
    }

    #[test]
    fn validate_examples() {
        let seq = AccessSequence::from_symbols("t", ["a", "b", "c"]);
        let g = RtmGeometry::new(2, 2).unwrap();
        assert_eq!(validate(&place(&seq, &[&["a", "b"], &["c"]]), g, seq.variables()), Ok(()));

        let dup = validate(&place(&seq, &[&["a", "b"], &["c", "a"]]), g, seq.variables()).unwrap_err();
        assert!(dup.iter().any(|v| v.kind() == "duplicate"));

        let cap = validate(&place(&seq, &[&["a", "b", "c"], &[]]), g, seq.variables()).unwrap_err();
        assert_eq!(cap, vec![Violation::Capacity { dbc: 0, len: 3, limit: 2 }]);

        let bad = Placement::new(vec![vec![VariableId(0), VariableId(7)], vec![VariableId(1)]]);
        let errs = validate(&bad, g, seq.variables()).unwrap_err();
        let kinds: Vec<_> = errs.iter().map(Violation::kind).collect();
        assert_eq!(kinds, ["unknown", "missing"]);

        let wrong_q = validate(&place(&seq, &[&["a", "b", "c"]]), RtmGeometry::new(2, 3).unwrap(), seq.variables());
        assert_eq!(wrong_q.unwrap_err(), vec![Violation::DbcCount { expected: 2, found: 1 }]);
    }

    #[test]
    fn shift_examples() {
        let seq = AccessSequence::from_symbols("t", ["a", "a", "a"]);
        assert_eq!(evaluate_shifts(&place(&seq, &[&["a"]]), &seq).unwrap().total_shifts, 0);

        // port 0 -> a(0): 0, b(1): 1, a(0): 1, c(2): 2
        let seq = AccessSequence::from_symbols("t", ["a", "b", "a", "c"]);
        let r = evaluate_shifts(&place(&seq, &[&["a", "b", "c"]]), &seq).unwrap();
        assert_eq!(r.total_shifts, 4);
        assert_eq!((r.reads, r.writes, r.accesses), (4, 0, 4));

        // disjoint variables laid out in first-use order cost l - 1
        let seq = AccessSequence::from_symbols("t", ["a", "a", "b", "c", "c", "c", "d"]);
        let r = evaluate_shifts(&place(&seq, &[&["a", "b", "c", "d"]]), &seq).unwrap();
        assert_eq!(r.total_shifts, 3);
    }

    #[test]
    fn unplaced_access_is_an_error() {
        let seq = AccessSequence::from_symbols("t", ["a", "b"]);
        let p = place(&seq, &[&["a"]]);
        assert_eq!(evaluate_shifts(&p, &seq), Err(LayoutError::Unplaced(VariableId(1))));
        assert_eq!(split_subsequences(&p, &seq), Err(LayoutError::Unplaced(VariableId(1))));
    }

    #[test]
    fn split_examples() {
        let seq = AccessSequence::from_symbols("t", ["a", "b", "a"]);
        let subs = split_subsequences(&place(&seq, &[&["a"], &["b"]]), &seq).unwrap();
        let a = Access::read(VariableId(0));
        let b = Access::read(VariableId(1));
        assert_eq!(subs, vec![vec![a, a], vec![b]]);

        let subs = split_subsequences(&place(&seq, &[&["b", "a"]]), &seq).unwrap();
        assert_eq!(subs[0], seq.accesses());

        let seq = AccessSequence::from_symbols("t", ["a", "b", "c", "b"]);
        let subs = split_subsequences(&place(&seq, &[&["a", "c"], &["b"]]), &seq).unwrap();
        let names = |v: &Vec<Access>| v.iter().map(|x| seq.symbol(x.var).to_owned()).collect::<Vec<_>>();
        assert_eq!(names(&subs[0]), ["a", "c"]);
        assert_eq!(names(&subs[1]), ["b", "b"]);
    }

    #[test]
    fn placement_json_shape() {
        let seq = AccessSequence::from_symbols("t", ["a", "b", "c"]);
        let g = RtmGeometry::new(2, 2).unwrap();
        let file = place(&seq, &[&["a", "b"], &["c"]]).to_file(g, seq.variables());
        let json = serde_json::to_string(&file).unwrap();
        assert_eq!(json, r#"{"geometry":{"q":2,"n":2},"dbcs":[["a","b"],["c"]]}"#);
        let back: PlacementFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.resolve(seq.variables()).unwrap(), place(&seq, &[&["a", "b"], &["c"]]));
        let stranger = PlacementFile { geometry: g, dbcs: vec![vec!["zz".into()]] };
        assert_eq!(stranger.resolve(seq.variables()), Err(LayoutError::UnknownSymbol("zz".into())));
    }

    fn arb_instance() -> impl Strategy<Value = (AccessSequence, Placement, usize)> {
        (1usize..7, 1usize..4, 1usize..40).prop_flat_map(|(vars, q, len)| {
            (
                proptest::collection::vec(0..vars, len),
                proptest::collection::vec(0..q, vars),
                Just(q),
                any::<u64>(),
            )
                .prop_map(|(raw, assign, q, salt)| {
                    let seq = AccessSequence::from_symbols(
                        "p",
                        raw.iter().map(|v| ["v0", "v1", "v2", "v3", "v4", "v5"][*v]),
                    );
                    let mut dbcs = vec![Vec::new(); q];
                    for var in seq.variables().ids() {
                        let old = seq.variables().symbol(var).unwrap()[1..].parse::<usize>().unwrap();
                        dbcs[assign[old]].push(var);
                    }
                    for (i, d) in dbcs.iter_mut().enumerate() {
                        if d.len() > 1 {
                            let k = (salt as usize).wrapping_add(i) % d.len();
                            d.rotate_left(k);
                        }
                    }
                    let n = dbcs.iter().map(Vec::len).max().unwrap_or(1).max(1);
                    (seq, Placement::new(dbcs), n)
                })
        })
    }

    proptest! {
        #[test]
        fn per_dbc_decomposition((seq, p, _n) in arb_instance()) {
            let full = evaluate_shifts(&p, &seq).unwrap();
            let subs = split_subsequences(&p, &seq).unwrap();
            prop_assert_eq!(subs.iter().map(Vec::len).sum::<usize>(), seq.len());
            for (d, sub) in subs.iter().enumerate() {
                let vars: Vec<_> = sub.iter().map(|a| a.var).collect();
                prop_assert_eq!(single_dbc_shifts(&p.dbcs()[d], &vars), full.per_dbc_shifts[d]);
            }
            prop_assert_eq!(full.total_shifts, full.per_dbc_shifts.iter().sum::<u64>());
            prop_assert_eq!(full.reads + full.writes, seq.len() as u64);
        }

        #[test]
        fn dbc_labels_do_not_matter((seq, p, _n) in arb_instance()) {
            let mut relabeled = p.clone().into_dbcs();
            relabeled.reverse();
            let a = evaluate_shifts(&p, &seq).unwrap().total_shifts;
            let b = evaluate_shifts(&Placement::new(relabeled), &seq).unwrap().total_shifts;
            prop_assert_eq!(a, b);
        }

        #[test]
        fn shift_bounds((seq, p, n) in arb_instance()) {
            let r = evaluate_shifts(&p, &seq).unwrap();
            prop_assert!(r.total_shifts <= ((n - 1) * seq.len()) as u64);
            let g = RtmGeometry::new(p.dbc_count(), n).unwrap();
            prop_assert_eq!(validate(&p, g, seq.variables()), Ok(()));
        }
    }
}
