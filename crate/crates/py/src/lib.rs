//! Python bindings: thin wrappers around the core graph and schema types
//! plus module-level validation entry points. Reports cross the boundary as
//! JSON strings.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use shexi_core::analysis;
use shexi_core::engine::{self, ConformanceMode};
use shexi_core::rdf;
use shexi_core::text;

fn parse_mode(mode: Option<&str>) -> PyResult<ConformanceMode> {
    match mode {
        None => Ok(ConformanceMode::DescendantClosure),
        Some(text) => text.parse().map_err(PyValueError::new_err),
    }
}

/// An RDF graph in the N-Triples-subset format.
#[pyclass(frozen)]
struct Graph {
    inner: rdf::Graph,
}

#[pymethods]
impl Graph {
    /// Parses graph text; raises ValueError with the offending line.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        rdf::parse_graph(text)
            .map(|inner| Graph { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// All subject and object nodes, in display token form.
    fn nodes(&self) -> Vec<String> {
        self.inner.nodes().iter().map(|n| n.to_string()).collect()
    }

    /// Canonical serialization, one statement per line.
    fn to_text(&self) -> String {
        rdf::serialize_graph(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Graph({} triples)", self.inner.len())
    }
}

/// A shape expression schema with inheritance.
#[pyclass(frozen)]
struct Schema {
    inner: shexi_core::schema::Schema,
}

#[pymethods]
impl Schema {
    /// Parses schema text; raises ValueError on syntax or well-formedness
    /// errors.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        text::parse_schema(text)
            .map(|inner| Schema { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Declared label names in declaration order.
    fn labels(&self) -> Vec<String> {
        self.inner.labels().map(|id| self.inner.name(id).to_string()).collect()
    }

    fn extendable_labels(&self) -> Vec<String> {
        self.inner
            .extendable_labels()
            .map(|id| self.inner.name(id).to_string())
            .collect()
    }

    fn abstract_labels(&self) -> Vec<String> {
        self.inner
            .abstract_labels()
            .map(|id| self.inner.name(id).to_string())
            .collect()
    }

    fn is_well_defined(&self) -> bool {
        analysis::check_well_defined(&self.inner).is_ok()
    }

    /// Human-readable well-definedness verdict, with witness cycles.
    fn well_definedness(&self) -> String {
        analysis::check_well_defined(&self.inner).describe(&self.inner)
    }

    /// Label name to stratum number; raises on ill-defined schemas.
    fn strata(&self) -> PyResult<std::collections::HashMap<String, u32>> {
        let stratification =
            analysis::stratify(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(stratification
            .assignment()
            .iter()
            .map(|(&id, &s)| (self.inner.name(id).to_string(), s))
            .collect())
    }

    /// GraphViz rendering of the extension hierarchy.
    fn hierarchy_dot(&self) -> String {
        analysis::build_hierarchy(&self.inner).to_dot()
    }

    /// GraphViz rendering of the dependency graph.
    fn dependency_dot(&self) -> String {
        analysis::build_dependency_graph(&self.inner).to_dot()
    }

    fn to_text(&self) -> String {
        text::serialize_schema(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Schema({} labels)", self.inner.labels().count())
    }
}

/// Validates shape-map requests and returns the report as a JSON string.
#[pyfunction]
#[pyo3(signature = (schema, graph, shape_map, mode=None, dump_typing=false))]
fn validate(
    schema: &Schema,
    graph: &Graph,
    shape_map: &str,
    mode: Option<&str>,
    dump_typing: bool,
) -> PyResult<String> {
    let mode = parse_mode(mode)?;
    let requests = text::parse_shape_map(shape_map, &schema.inner)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let report = engine::validate(&graph.inner, &schema.inner, &requests, mode, dump_typing)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(report.to_json())
}

/// The maximal typing as (node, label) pairs in display form.
#[pyfunction]
#[pyo3(signature = (schema, graph, mode=None))]
fn maximal_typing(
    schema: &Schema,
    graph: &Graph,
    mode: Option<&str>,
) -> PyResult<Vec<(String, String)>> {
    let mode = parse_mode(mode)?;
    let typing = engine::maximal_typing(&graph.inner, &schema.inner, mode)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(typing
        .pairs()
        .map(|(n, z)| (n.to_string(), schema.inner.name(z).to_string()))
        .collect())
}

/// Exponential reference computation of the maximal typing; raises when the
/// instance exceeds the pair bound.
#[pyfunction]
#[pyo3(signature = (schema, graph, mode=None, bound=engine::DEFAULT_ORACLE_BOUND))]
fn brute_force_maximal_typing(
    schema: &Schema,
    graph: &Graph,
    mode: Option<&str>,
    bound: usize,
) -> PyResult<Vec<(String, String)>> {
    let mode = parse_mode(mode)?;
    let typing =
        engine::brute_force_maximal_typing_bounded(&graph.inner, &schema.inner, mode, bound)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(typing
        .pairs()
        .map(|(n, z)| (n.to_string(), schema.inner.name(z).to_string()))
        .collect())
}

#[pymodule]
fn shexi_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_class::<Schema>()?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(maximal_typing, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_maximal_typing, m)?)?;
    Ok(())
}
