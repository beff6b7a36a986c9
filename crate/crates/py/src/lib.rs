//! Python bindings for `rtmplace`.
//!
//! Placements cross the boundary as lists of DBCs, each a list of variable
//! names in layout order. Reports come back as plain dicts.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

use rtmplace::heuristics::{dma_partition as core_dma_partition, PlacementContext};
use rtmplace::layout::{evaluate_shifts as core_evaluate_shifts, validate, Placement, PlacementFile, RtmGeometry};
use rtmplace::rtmodel::{builtin_config, builtin_configs as core_builtin_configs, compute_cost_from_counts, RtmConfig};
use rtmplace::search::{brute_force_optimal as core_brute_force, ga_search as core_ga_search, random_walk as core_random_walk, GaParams, DEFAULT_ORACLE_LIMIT};
use rtmplace::strategy::{heuristic_seeds, run_strategy, Strategy, StrategyOptions};
use rtmplace::synth::{generate as core_generate, SyntheticParams};
use rtmplace::trace::{build_access_graph, compute_stats, parse_trace as core_parse_trace, write_trace, AccessKind, AccessSequence};

create_exception!(rtmplace, InfeasibleError, PyValueError, "The instance cannot be placed on the given geometry.");

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.into_pyobject(py)?.into_any(),
            (None, Some(i)) => i.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for x in items {
                list.append(to_py(py, x)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, x) in map {
                dict.set_item(k, to_py(py, x)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let json = serde_json::to_value(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &json)
}

fn geometry(dbcs: usize, locations: Option<usize>) -> PyResult<RtmGeometry> {
    let n = match locations {
        Some(n) => n,
        None => builtin_config(dbcs)
            .map(|c| c.domains_per_dbc)
            .ok_or_else(|| value_err(format!("no builtin configuration with {dbcs} DBCs; pass locations")))?,
    };
    RtmGeometry::new(dbcs, n).map_err(value_err)
}

fn names(p: &Placement, seq: &AccessSequence) -> Vec<Vec<String>> {
    p.dbcs().iter().map(|d| d.iter().map(|&v| seq.symbol(v).to_owned()).collect()).collect()
}

/// One access sequence with its own variable table.
#[pyclass(name = "Sequence", module = "rtmplace", frozen, from_py_object)]
#[derive(Clone)]
struct PySequence {
    inner: AccessSequence,
}

#[pymethods]
impl PySequence {
    /// Builds a read-only sequence from variable names.
    #[new]
    #[pyo3(signature = (symbols, name = "seq0"))]
    fn new(symbols: Vec<String>, name: &str) -> Self {
        Self { inner: AccessSequence::from_symbols(name, symbols.iter().map(String::as_str)) }
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    /// Variable names in first-use order.
    #[getter]
    fn variables(&self) -> Vec<String> {
        self.inner.variables().symbols().to_vec()
    }

    /// `(name, is_write)` per access.
    fn accesses(&self) -> Vec<(String, bool)> {
        self.inner
            .accesses()
            .iter()
            .map(|a| (self.inner.symbol(a.var).to_owned(), a.kind == AccessKind::Write))
            .collect()
    }

    /// `{name: (frequency, first, last)}` with 1-based positions.
    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let stats = compute_stats(&self.inner).map_err(value_err)?;
        let out = PyDict::new(py);
        for (v, s) in stats.iter() {
            out.set_item(self.inner.symbol(v), (s.freq, s.first, s.last))?;
        }
        Ok(out)
    }

    /// Undirected access-graph edges as `(a, b, weight)`.
    fn access_graph(&self) -> PyResult<Vec<(String, String, u64)>> {
        let g = build_access_graph(&self.inner).map_err(value_err)?;
        Ok(g.edges()
            .map(|(u, v, w)| (self.inner.symbol(u).to_owned(), self.inner.symbol(v).to_owned(), w))
            .collect())
    }

    fn to_trace(&self) -> String {
        self.inner.to_trace_string()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Sequence(name={:?}, accesses={}, variables={})", self.inner.name(), self.inner.len(), self.inner.var_count())
    }
}

impl PySequence {
    fn placement(&self, dbcs: Vec<Vec<String>>, g: RtmGeometry) -> PyResult<Placement> {
        let file = PlacementFile { geometry: g, dbcs };
        let p = file.resolve(self.inner.variables()).map_err(value_err)?;
        validate(&p, g, self.inner.variables()).map_err(|v| {
            let kinds: Vec<&str> = v.iter().map(|x| x.kind()).collect();
            value_err(format!("invalid placement: {}", kinds.join(", ")))
        })?;
        Ok(p)
    }
}

#[pyfunction]
fn parse_trace(text: &str) -> PyResult<Vec<PySequence>> {
    let seqs = core_parse_trace(text).map_err(value_err)?;
    Ok(seqs.into_iter().map(|inner| PySequence { inner }).collect())
}

#[pyfunction]
fn format_trace(sequences: Vec<PySequence>) -> String {
    let seqs: Vec<AccessSequence> = sequences.into_iter().map(|s| s.inner).collect();
    write_trace(&seqs)
}

/// Shift report of an explicit placement.
#[pyfunction]
#[pyo3(signature = (sequence, placement, locations = None))]
fn evaluate_shifts<'py>(
    py: Python<'py>,
    sequence: &PySequence,
    placement: Vec<Vec<String>>,
    locations: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let n = locations.unwrap_or_else(|| placement.iter().map(Vec::len).max().unwrap_or(1).max(1));
    let g = RtmGeometry::new(placement.len(), n).map_err(value_err)?;
    let p = sequence.placement(placement, g)?;
    serialize(py, &core_evaluate_shifts(&p, &sequence.inner).map_err(value_err)?)
}

/// Runs a named strategy; returns `{"placement", "report", "fell_back"}`.
#[pyfunction]
#[pyo3(signature = (sequence, strategy, dbcs = 2, locations = None, seed = 0, ga_generations = 200, rw_iterations = 60000, fallback_afd = false))]
#[allow(clippy::too_many_arguments)]
fn place<'py>(
    py: Python<'py>,
    sequence: &PySequence,
    strategy: &str,
    dbcs: usize,
    locations: Option<usize>,
    seed: u64,
    ga_generations: usize,
    rw_iterations: usize,
    fallback_afd: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let strategy: Strategy = strategy.parse().map_err(value_err)?;
    let g = geometry(dbcs, locations)?;
    let opts = StrategyOptions {
        ga: GaParams { generations: ga_generations, ..GaParams::default() },
        rw_iterations,
        seed,
        fallback_afd,
    };
    let out = py.detach(|| run_strategy(&sequence.inner, g, strategy, &opts)).map_err(|e| {
        if e.is_infeasible() {
            InfeasibleError::new_err(e.to_string())
        } else {
            value_err(e)
        }
    })?;
    let dict = PyDict::new(py);
    dict.set_item("placement", names(&out.placement, &sequence.inner))?;
    dict.set_item("report", serialize(py, &out.report)?)?;
    dict.set_item("fell_back", out.fell_back)?;
    Ok(dict.into_any())
}

/// Disjoint-lifespan split: `{"disjoint", "non_disjoint", "disjoint_dbcs"}`.
#[pyfunction]
#[pyo3(signature = (sequence, dbcs = 2, locations = None))]
fn dma_partition<'py>(py: Python<'py>, sequence: &PySequence, dbcs: usize, locations: Option<usize>) -> PyResult<Bound<'py, PyDict>> {
    let g = geometry(dbcs, locations)?;
    let ctx = PlacementContext::new(&sequence.inner).map_err(value_err)?;
    let part = core_dma_partition(&ctx.stats, g);
    let sym = |vs: &[rtmplace::VariableId]| -> Vec<String> { vs.iter().map(|&v| sequence.inner.symbol(v).to_owned()).collect() };
    let dict = PyDict::new(py);
    dict.set_item("disjoint", sym(&part.disjoint))?;
    dict.set_item("non_disjoint", sym(&part.non_disjoint))?;
    dict.set_item("disjoint_dbcs", part.disjoint_dbcs)?;
    Ok(dict)
}

/// GA search seeded with the heuristic placements; returns `(placement, shifts, history)`.
#[pyfunction]
#[pyo3(signature = (sequence, dbcs = 2, locations = None, seed = 0, generations = 200, mu = 100, lambda_ = 100))]
#[allow(clippy::too_many_arguments)]
fn ga_search<'py>(
    py: Python<'py>,
    sequence: &PySequence,
    dbcs: usize,
    locations: Option<usize>,
    seed: u64,
    generations: usize,
    mu: usize,
    lambda_: usize,
) -> PyResult<(Vec<Vec<String>>, u64, Bound<'py, PyAny>)> {
    let g = geometry(dbcs, locations)?;
    let params = GaParams { seed, generations, mu, lambda: lambda_, ..GaParams::default() };
    let seq = &sequence.inner;
    let out = py
        .detach(|| {
            let seeds = PlacementContext::new(seq).map(|ctx| heuristic_seeds(&ctx, g)).unwrap_or_default();
            core_ga_search(seq, g, &params, &seeds)
        })
        .map_err(value_err)?;
    Ok((names(&out.best.placement, seq), out.best.fitness, serialize(py, &out.history)?))
}

#[pyfunction]
#[pyo3(signature = (sequence, dbcs = 2, locations = None, iterations = 60000, seed = 0))]
fn random_walk(sequence: &PySequence, dbcs: usize, locations: Option<usize>, iterations: usize, seed: u64) -> PyResult<(Vec<Vec<String>>, u64)> {
    let g = geometry(dbcs, locations)?;
    let best = core_random_walk(&sequence.inner, g, iterations, seed).map_err(value_err)?;
    Ok((names(&best.placement, &sequence.inner), best.fitness))
}

/// Exact optimum for small instances; returns `(placement, shifts)`.
#[pyfunction]
#[pyo3(signature = (sequence, dbcs = 2, locations = None, limit = DEFAULT_ORACLE_LIMIT))]
fn brute_force_optimal(sequence: &PySequence, dbcs: usize, locations: Option<usize>, limit: usize) -> PyResult<(Vec<Vec<String>>, u64)> {
    let g = geometry(dbcs, locations)?;
    let best = core_brute_force(&sequence.inner, g, limit).map_err(value_err)?;
    Ok((names(&best.placement, &sequence.inner), best.fitness))
}

#[pyfunction]
fn builtin_configs(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    serialize(py, &core_builtin_configs())
}

/// Latency/energy/area for raw counts under the builtin configuration with `dbcs` DBCs.
#[pyfunction]
#[pyo3(signature = (reads, writes, shifts, dbcs = 2))]
fn compute_cost(py: Python<'_>, reads: i64, writes: i64, shifts: i64, dbcs: usize) -> PyResult<Bound<'_, PyAny>> {
    let cfg: RtmConfig = builtin_config(dbcs).ok_or_else(|| value_err(format!("no builtin configuration with {dbcs} DBCs")))?;
    serialize(py, &compute_cost_from_counts(reads, writes, shifts, &cfg).map_err(value_err)?)
}

/// Synthetic trace with planted disjoint variables; returns `(sequence, planted)`.
#[pyfunction]
#[pyo3(signature = (variables, length, clusters, seed = 0))]
fn generate(variables: usize, length: usize, clusters: usize, seed: u64) -> PyResult<(PySequence, Vec<String>)> {
    let t = core_generate(&SyntheticParams { variables, length, clusters, seed }).map_err(value_err)?;
    Ok((PySequence { inner: t.sequence }, t.planted))
}

#[pymodule]
#[pyo3(name = "rtmplace")]
fn rtmplace_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySequence>()?;
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    m.add("STRATEGIES", Strategy::ALL.iter().map(|s| s.id()).collect::<Vec<_>>())?;
    m.add_function(wrap_pyfunction!(parse_trace, m)?)?;
    m.add_function(wrap_pyfunction!(format_trace, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_shifts, m)?)?;
    m.add_function(wrap_pyfunction!(place, m)?)?;
    m.add_function(wrap_pyfunction!(dma_partition, m)?)?;
    m.add_function(wrap_pyfunction!(ga_search, m)?)?;
    m.add_function(wrap_pyfunction!(random_walk, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_optimal, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_configs, m)?)?;
    m.add_function(wrap_pyfunction!(compute_cost, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    Ok(())
}
