//! Correct-typing checks, maximal-typing computation by refinement, a
//! brute-force reference oracle, and validation queries.
//!
//! The refinement seeds each stratum with every (node, label) pair and
//! repeatedly deletes the pairs whose conformance condition fails, with all
//! deletions of a round evaluated against the round's starting typing.
//! Lower strata are frozen once computed. The oracle instead enumerates
//! every candidate typing per stratum and unions the correct ones; it is
//! exponential and guarded by a pair-count bound.

use std::collections::HashMap;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{
    check_well_defined, restrict_schema, stratify, AnalysisError, Stratification, WellDefinedness,
};
use crate::rdf::{Graph, RdfNode};
use crate::schema::{check_schema_form, LabelId, LabelKind, Schema};
use crate::semantics::{EvalError, Evaluator, Typing};
use crate::text::{RequestLabel, ShapeMapRequest};

/// Default cap on `|nodes(G)| * |labels|` for the brute-force oracle.
pub const DEFAULT_ORACLE_BOUND: usize = 20;

/// How conformance of extendable labels is decided.
///
/// `LiteralDef4` requires non-abstract labels to be satisfied directly and
/// only abstract labels to delegate to their non-abstract descendants.
/// `DescendantClosure` (the default) lets every extendable label be
/// satisfied through any non-abstract descendant, so that a node
/// conforming to a child also conforms to its parents.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConformanceMode {
    #[default]
    DescendantClosure,
    LiteralDef4,
}

impl std::fmt::Display for ConformanceMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ConformanceMode::DescendantClosure => "descendant-closure",
            ConformanceMode::LiteralDef4 => "literal-def4",
        })
    }
}

impl std::str::FromStr for ConformanceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "descendant-closure" => Ok(ConformanceMode::DescendantClosure),
            "literal-def4" => Ok(ConformanceMode::LiteralDef4),
            other => Err(format!(
                "unknown mode '{other}' (expected 'descendant-closure' or 'literal-def4')"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("schema is not well-defined: {0}")]
    IllDefined(WellDefinedness),
    #[error("typing pair references unknown label '{0}'")]
    UnknownLabel(String),
    #[error("oracle bound exceeded: {pairs} node-label pairs, bound {bound}")]
    OracleBound { pairs: usize, bound: usize },
}

/// Per-round conformance checking against one typing snapshot. Descendant
/// checks share direct-satisfaction results through a (node, label) memo.
struct ConformanceChecker<'a, 'b> {
    evaluator: &'a Evaluator<'b>,
    mode: ConformanceMode,
    memo: HashMap<(RdfNode, LabelId), bool>,
}

impl<'a, 'b> ConformanceChecker<'a, 'b> {
    fn new(evaluator: &'a Evaluator<'b>, mode: ConformanceMode) -> Self {
        ConformanceChecker {
            evaluator,
            mode,
            memo: HashMap::new(),
        }
    }

    /// Direct satisfaction of `def(z)` by `n`, memoized for the snapshot.
    fn direct(&mut self, n: &RdfNode, z: LabelId, typing: &Typing) -> Result<bool, EngineError> {
        if let Some(&v) = self.memo.get(&(n.clone(), z)) {
            return Ok(v);
        }
        let schema = self.evaluator.schema();
        let def = schema
            .definition(z)
            .ok_or_else(|| EngineError::UnknownLabel(schema.name(z).to_string()))?;
        let v = self.evaluator.sat_node(n, typing, def)?;
        self.memo.insert((n.clone(), z), v);
        Ok(v)
    }

    /// The mode's conformance condition for one (node, label) pair.
    fn check_pair(
        &mut self,
        n: &RdfNode,
        z: LabelId,
        typing: &Typing,
    ) -> Result<bool, EngineError> {
        let schema = self.evaluator.schema();
        let kind = schema
            .kind(z)
            .ok_or_else(|| EngineError::UnknownLabel(schema.name(z).to_string()))?;
        let via_descendants = match (self.mode, kind) {
            (_, LabelKind::Simple) => false,
            (ConformanceMode::LiteralDef4, LabelKind::Extendable) => schema.is_abstract(z),
            (ConformanceMode::DescendantClosure, LabelKind::Extendable) => true,
        };
        if !via_descendants {
            return self.direct(n, z, typing);
        }
        for x in self.evaluator.hierarchy().descendants_lenient(z) {
            if schema.is_abstract(x) {
                continue;
            }
            if self.direct(n, x, typing)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Whether every assertion of `typing` is derivable from the typing itself
/// under the given mode. The schema must be well-defined.
pub fn is_correct_typing(
    graph: &Graph,
    schema: &Schema,
    typing: &Typing,
    mode: ConformanceMode,
) -> Result<bool, EngineError> {
    let evaluator = Evaluator::new(graph, schema);
    is_correct_with(&evaluator, typing, mode)
}

fn is_correct_with(
    evaluator: &Evaluator<'_>,
    typing: &Typing,
    mode: ConformanceMode,
) -> Result<bool, EngineError> {
    let mut checker = ConformanceChecker::new(evaluator, mode);
    for (n, z) in typing.pairs() {
        if !checker.check_pair(n, z, typing)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Rounds the refinement took per stratum; useful for convergence checks.
#[derive(Debug, Clone, Default)]
pub struct RefinementTrace {
    pub rounds_per_stratum: Vec<usize>,
}

/// The maximal typing, computed with a freshly derived stratification.
pub fn maximal_typing(
    graph: &Graph,
    schema: &Schema,
    mode: ConformanceMode,
) -> Result<Typing, EngineError> {
    let stratification = stratify(schema).map_err(ill_defined)?;
    maximal_typing_with(graph, schema, mode, &stratification)
}

/// The maximal typing under an explicitly chosen stratification. The result
/// does not depend on the choice.
pub fn maximal_typing_with(
    graph: &Graph,
    schema: &Schema,
    mode: ConformanceMode,
    stratification: &Stratification,
) -> Result<Typing, EngineError> {
    maximal_typing_traced(graph, schema, mode, stratification).map(|(t, _)| t)
}

/// Refinement with round counting.
pub fn maximal_typing_traced(
    graph: &Graph,
    schema: &Schema,
    mode: ConformanceMode,
    stratification: &Stratification,
) -> Result<(Typing, RefinementTrace), EngineError> {
    let nodes: Vec<RdfNode> = graph.nodes().into_iter().collect();
    let evaluator = Evaluator::new(graph, schema);
    let mut typing = Typing::new();
    let mut trace = RefinementTrace::default();
    for i in 1..=stratification.stratum_count() {
        let stratum_labels = stratification.labels_on(i);
        // complete typing for the stratum
        for n in &nodes {
            for &z in &stratum_labels {
                typing.insert(n.clone(), z);
            }
        }
        let mut rounds = 0;
        loop {
            rounds += 1;
            // all pairs of a round are judged against the round's snapshot
            let mut checker = ConformanceChecker::new(&evaluator, mode);
            let mut removals: Vec<(RdfNode, LabelId)> = Vec::new();
            for &z in &stratum_labels {
                for n in typing.nodes_with(z) {
                    if !checker.check_pair(&n, z, &typing)? {
                        removals.push((n, z));
                    }
                }
            }
            if removals.is_empty() {
                break;
            }
            for (n, z) in removals {
                typing.remove(&n, z);
            }
        }
        trace.rounds_per_stratum.push(rounds);
    }
    Ok((typing, trace))
}

/// Reference implementation of the maximal typing: enumerates all candidate
/// typings stratum by stratum, keeps those that are correct and consistent
/// with the previous stratum, and unions them.
pub fn brute_force_maximal_typing(
    graph: &Graph,
    schema: &Schema,
    mode: ConformanceMode,
) -> Result<Typing, EngineError> {
    brute_force_maximal_typing_bounded(graph, schema, mode, DEFAULT_ORACLE_BOUND)
}

pub fn brute_force_maximal_typing_bounded(
    graph: &Graph,
    schema: &Schema,
    mode: ConformanceMode,
    bound: usize,
) -> Result<Typing, EngineError> {
    let nodes: Vec<RdfNode> = graph.nodes().into_iter().collect();
    let label_count = schema.labels().count();
    let pairs = nodes.len() * label_count;
    if pairs > bound {
        return Err(EngineError::OracleBound { pairs, bound });
    }
    let stratification = stratify(schema).map_err(ill_defined)?;
    let mut previous = Typing::new();
    for i in 1..=stratification.stratum_count() {
        let restricted = restrict_schema(schema, &stratification, i)?;
        let evaluator = Evaluator::new(graph, &restricted);
        let stratum_pairs: Vec<(RdfNode, LabelId)> = stratification
            .labels_on(i)
            .into_iter()
            .flat_map(|z| nodes.iter().map(move |n| (n.clone(), z)))
            .collect();
        assert!(stratum_pairs.len() < usize::BITS as usize);
        let full: usize = (1 << stratum_pairs.len()) - 1;
        let mut union_mask: usize = 0;
        // descending enumeration finds the common all-pairs case first and
        // skips candidates that can no longer grow the union
        for mask in (0..=full).rev() {
            if mask & !union_mask == 0 {
                continue;
            }
            let mut candidate = previous.clone();
            for (bit, (n, z)) in stratum_pairs.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    candidate.insert(n.clone(), *z);
                }
            }
            if is_correct_with(&evaluator, &candidate, mode)? {
                union_mask |= mask;
            }
        }
        for (bit, (n, z)) in stratum_pairs.iter().enumerate() {
            if union_mask & (1 << bit) != 0 {
                previous.insert(n.clone(), *z);
            }
        }
    }
    Ok(previous)
}

fn ill_defined(err: AnalysisError) -> EngineError {
    match err {
        AnalysisError::IllDefined(v) => EngineError::IllDefined(v),
        other => EngineError::Analysis(other),
    }
}

/// One conformance answer of a validation run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub node: String,
    pub label: String,
    pub conformant: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TypingPair {
    pub node: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StrataSummary {
    pub count: u32,
    pub assignment: std::collections::BTreeMap<String, u32>,
}

/// Outcome of a validation run, serializable to JSON.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub mode: ConformanceMode,
    pub strata: StrataSummary,
    pub verdicts: Vec<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub typing: Option<Vec<TypingPair>>,
    pub diagnostics: Vec<String>,
    pub elapsed_ms: u128,
}

impl ValidationReport {
    pub fn all_conformant(&self) -> bool {
        self.verdicts.iter().all(|v| v.conformant)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Computes the maximal typing once and answers each request by membership.
/// `ALL` requests expand over every declared label.
pub fn validate(
    graph: &Graph,
    schema: &Schema,
    requests: &[ShapeMapRequest],
    mode: ConformanceMode,
    dump_typing: bool,
) -> Result<ValidationReport, EngineError> {
    let started = Instant::now();
    let diagnostics: Vec<String> = check_schema_form(schema)
        .into_iter()
        .map(|d| d.to_string())
        .collect();
    let verdict = check_well_defined(schema);
    if !verdict.is_ok() {
        return Err(EngineError::IllDefined(verdict));
    }
    let stratification = stratify(schema).map_err(ill_defined)?;
    let typing = maximal_typing_with(graph, schema, mode, &stratification)?;

    let mut verdicts = Vec::new();
    for request in requests {
        match request.label {
            RequestLabel::Label(z) => {
                verdicts.push(Verdict {
                    node: request.node.to_string(),
                    label: schema.name(z).to_string(),
                    conformant: typing.contains(&request.node, z),
                });
            }
            RequestLabel::All => {
                for z in schema.labels() {
                    verdicts.push(Verdict {
                        node: request.node.to_string(),
                        label: schema.name(z).to_string(),
                        conformant: typing.contains(&request.node, z),
                    });
                }
            }
        }
    }

    let strata = StrataSummary {
        count: stratification.stratum_count(),
        assignment: stratification
            .assignment()
            .iter()
            .map(|(&id, &s)| (schema.name(id).to_string(), s))
            .collect(),
    };
    let typing_dump = dump_typing.then(|| {
        typing
            .pairs()
            .map(|(n, z)| TypingPair {
                node: n.to_string(),
                label: schema.name(z).to_string(),
            })
            .collect()
    });
    Ok(ValidationReport {
        mode,
        strata,
        verdicts,
        typing: typing_dump,
        diagnostics,
        elapsed_ms: started.elapsed().as_millis(),
    })
}
