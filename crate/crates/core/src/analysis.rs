//! Static analysis: extension hierarchy, dependency graph, well-definedness,
//! and stratification.
//!
//! Well-definedness is decided on the strongly connected components of the
//! dependency graph: a schema is rejected when its extension hierarchy is
//! cyclic or when a negative dependency edge lies inside an SCC. Strata are
//! assigned per SCC in reverse topological order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::schema::{LabelId, Schema, Shape, ShapeExpr};

/// The extension hierarchy: extendable labels with an edge from each label
/// to every label its leading extends-shape names.
#[derive(Debug, Clone)]
pub struct ExtensionHierarchy {
    names: Vec<String>,
    nodes: Vec<LabelId>,
    edges: Vec<(LabelId, LabelId)>,
    parents: HashMap<LabelId, Vec<LabelId>>,
    children: HashMap<LabelId, Vec<LabelId>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("extension hierarchy contains a cycle: {}", .0.join(" -> "))]
    CyclicHierarchy(Vec<String>),
    #[error("stratum {0} is out of range 1..={1}")]
    StratumOutOfRange(u32, u32),
    #[error("schema is not well-defined")]
    IllDefined(WellDefinedness),
}

/// Builds the extension hierarchy of a schema. Only the leading
/// extends-shape of each extendable definition contributes edges.
pub fn build_hierarchy(schema: &Schema) -> ExtensionHierarchy {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut parents: HashMap<LabelId, Vec<LabelId>> = HashMap::new();
    let mut children: HashMap<LabelId, Vec<LabelId>> = HashMap::new();
    for x in schema.extendable_labels() {
        nodes.push(x);
        parents.entry(x).or_default();
        children.entry(x).or_default();
    }
    for x in schema.extendable_labels() {
        let Ok(targets) = schema.extends_targets(x) else {
            continue; // malformed definition, reported by check_schema_form
        };
        for &parent in targets {
            edges.push((x, parent));
            parents.entry(x).or_default().push(parent);
            children.entry(parent).or_default().push(x);
        }
    }
    let names = (0..schema.label_table_len() as u32)
        .map(|i| schema.name(LabelId::from_index(i)).to_string())
        .collect();
    ExtensionHierarchy {
        names,
        nodes,
        edges,
        parents,
        children,
    }
}

impl ExtensionHierarchy {
    pub fn nodes(&self) -> &[LabelId] {
        &self.nodes
    }

    /// (child, parent) pairs.
    pub fn edges(&self) -> &[(LabelId, LabelId)] {
        &self.edges
    }

    pub fn name(&self, id: LabelId) -> &str {
        &self.names[id.as_usize()]
    }

    /// A cycle through the hierarchy, if any, as a label sequence whose
    /// first and last elements coincide.
    pub fn find_cycle(&self) -> Option<Vec<LabelId>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            White,
            Grey,
            Black,
        }
        let mut marks: HashMap<LabelId, Mark> =
            self.nodes.iter().map(|&n| (n, Mark::White)).collect();
        let mut stack = Vec::new();

        fn visit(
            h: &ExtensionHierarchy,
            n: LabelId,
            marks: &mut HashMap<LabelId, Mark>,
            stack: &mut Vec<LabelId>,
        ) -> Option<Vec<LabelId>> {
            marks.insert(n, Mark::Grey);
            stack.push(n);
            for &p in h.parents.get(&n).map_or(&[][..], |v| v) {
                match marks.get(&p).copied().unwrap_or(Mark::White) {
                    Mark::Grey => {
                        let start = stack.iter().position(|&s| s == p).unwrap();
                        let mut cycle: Vec<LabelId> = stack[start..].to_vec();
                        cycle.push(p);
                        return Some(cycle);
                    }
                    Mark::White => {
                        if let Some(c) = visit(h, p, marks, stack) {
                            return Some(c);
                        }
                    }
                    Mark::Black => {}
                }
            }
            stack.pop();
            marks.insert(n, Mark::Black);
            None
        }

        for &n in &self.nodes {
            if marks[&n] == Mark::White {
                if let Some(c) = visit(self, n, &mut marks, &mut stack) {
                    return Some(c);
                }
                stack.clear();
            }
        }
        None
    }

    fn require_acyclic(&self) -> Result<(), AnalysisError> {
        match self.find_cycle() {
            None => Ok(()),
            Some(cycle) => Err(AnalysisError::CyclicHierarchy(
                cycle.iter().map(|&id| self.name(id).to_string()).collect(),
            )),
        }
    }

    /// Reflexive-transitive closure along extends edges.
    pub fn ancestors(&self, x: LabelId) -> Result<BTreeSet<LabelId>, AnalysisError> {
        self.require_acyclic()?;
        Ok(self.closure(x, &self.parents))
    }

    /// Reflexive-transitive closure along reversed extends edges.
    pub fn descendants(&self, x: LabelId) -> Result<BTreeSet<LabelId>, AnalysisError> {
        self.require_acyclic()?;
        Ok(self.closure(x, &self.children))
    }

    /// Union of the ancestor sets of the given labels.
    pub fn ancestors_of_set(
        &self,
        xs: &[LabelId],
    ) -> Result<BTreeSet<LabelId>, AnalysisError> {
        self.require_acyclic()?;
        let mut out = BTreeSet::new();
        for &x in xs {
            out.extend(self.closure(x, &self.parents));
        }
        Ok(out)
    }

    /// Closure that tolerates cycles; evaluation uses this together with the
    /// recursion-path guard.
    pub(crate) fn ancestors_lenient(&self, x: LabelId) -> BTreeSet<LabelId> {
        self.closure(x, &self.parents)
    }

    pub(crate) fn descendants_lenient(&self, x: LabelId) -> BTreeSet<LabelId> {
        self.closure(x, &self.children)
    }

    fn closure(
        &self,
        start: LabelId,
        adjacency: &HashMap<LabelId, Vec<LabelId>>,
    ) -> BTreeSet<LabelId> {
        let mut seen = BTreeSet::new();
        let mut work = vec![start];
        while let Some(n) = work.pop() {
            if seen.insert(n) {
                if let Some(next) = adjacency.get(&n) {
                    work.extend(next.iter().copied());
                }
            }
        }
        seen
    }

    /// GraphViz rendering of the hierarchy.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph hierarchy {\n");
        for &n in &self.nodes {
            out.push_str(&format!("  \"{}\";\n", self.name(n)));
        }
        for &(child, parent) in &self.edges {
            out.push_str(&format!(
                "  \"{}\" -> \"{}\";\n",
                self.name(child),
                self.name(parent)
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// Kinds of dependency edges between labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DepKind {
    /// Hierarchy adjacency, recorded symmetrically.
    Extends,
    /// A reference occurs in the source label's definition.
    Reference,
    /// A reference occurs in a shape under an odd number of negations.
    ShapeNeg,
    /// A reference occurs in a triple constraint whose property is listed
    /// in the enclosing shape's extra set.
    ExtraNeg,
}

impl DepKind {
    pub fn is_negative(self) -> bool {
        matches!(self, DepKind::ShapeNeg | DepKind::ExtraNeg)
    }
}

impl fmt::Display for DepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DepKind::Extends => "dep-extends",
            DepKind::Reference => "dep",
            DepKind::ShapeNeg => "dep-shape-neg",
            DepKind::ExtraNeg => "dep-extra-neg",
        })
    }
}

/// Labelled dependency graph over all declared labels.
#[derive(Debug, Clone)]
pub struct DependencyGraph {
    names: Vec<String>,
    nodes: Vec<LabelId>,
    edges: BTreeSet<(LabelId, LabelId, DepKind)>,
}

impl DependencyGraph {
    pub fn nodes(&self) -> &[LabelId] {
        &self.nodes
    }

    pub fn edges(&self) -> impl Iterator<Item = (LabelId, LabelId, DepKind)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, from: LabelId, to: LabelId, kind: DepKind) -> bool {
        self.edges.contains(&(from, to, kind))
    }

    pub fn name(&self, id: LabelId) -> &str {
        &self.names[id.as_usize()]
    }

    /// Distinct successor labels of `z`, any kind.
    fn successors(&self, z: LabelId) -> BTreeSet<LabelId> {
        self.edges
            .range((z, LabelId::MIN, DepKind::Extends)..=(z, LabelId::MAX, DepKind::ExtraNeg))
            .map(|&(_, to, _)| to)
            .collect()
    }

    /// GraphViz rendering with one edge per (pair, kind), negative kinds
    /// dashed.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph dependencies {\n");
        for &n in &self.nodes {
            out.push_str(&format!("  \"{}\";\n", self.name(n)));
        }
        for (from, to, kind) in self.edges() {
            let style = if kind.is_negative() { ", style=dashed" } else { "" };
            out.push_str(&format!(
                "  \"{}\" -> \"{}\" [label=\"{}\"{}];\n",
                self.name(from),
                self.name(to),
                kind,
                style
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// Sub-expressions of `s` occurring under an odd number of negations.
pub fn neg_sub_expr(s: &ShapeExpr) -> Vec<&ShapeExpr> {
    fn walk<'a>(s: &'a ShapeExpr, negated: bool, out: &mut Vec<&'a ShapeExpr>) {
        if negated {
            out.push(s);
        }
        match s {
            ShapeExpr::NodeConstraint(_) | ShapeExpr::Ref(_) => {}
            ShapeExpr::And(a, b) | ShapeExpr::Or(a, b) => {
                walk(a, negated, out);
                walk(b, negated, out);
            }
            ShapeExpr::Not(inner) => walk(inner, !negated, out),
            ShapeExpr::Shape(_) => {}
            ShapeExpr::ShapeWithExtends(_) => {}
        }
    }
    let mut out = Vec::new();
    walk(s, false, &mut out);
    out
}

/// Builds the dependency graph of a schema: symmetric extends edges (for
/// leading and nested extends-shapes), reference edges, and the two negative
/// kinds.
pub fn build_dependency_graph(schema: &Schema) -> DependencyGraph {
    let mut edges = BTreeSet::new();
    for z in schema.labels() {
        let def = schema.definition(z).expect("declared label");
        collect_edges(z, def, false, &mut edges);
    }
    let names = (0..schema.label_table_len() as u32)
        .map(|i| schema.name(LabelId::from_index(i)).to_string())
        .collect();
    DependencyGraph {
        names,
        nodes: schema.labels().collect(),
        edges,
    }
}

fn collect_edges(
    z: LabelId,
    s: &ShapeExpr,
    negated: bool,
    edges: &mut BTreeSet<(LabelId, LabelId, DepKind)>,
) {
    match s {
        ShapeExpr::NodeConstraint(_) => {}
        ShapeExpr::Ref(w) => {
            edges.insert((z, *w, DepKind::Reference));
            // a reference under negation is itself a negative dependency
            if negated {
                edges.insert((z, *w, DepKind::ShapeNeg));
            }
        }
        ShapeExpr::And(a, b) | ShapeExpr::Or(a, b) => {
            collect_edges(z, a, negated, edges);
            collect_edges(z, b, negated, edges);
        }
        ShapeExpr::Not(inner) => collect_edges(z, inner, !negated, edges),
        ShapeExpr::Shape(shape) => collect_shape_edges(z, shape, negated, edges),
        ShapeExpr::ShapeWithExtends(ext) => {
            for &target in &ext.extends {
                edges.insert((z, target, DepKind::Extends));
                edges.insert((target, z, DepKind::Extends));
            }
            collect_shape_edges(z, &ext.shape, negated, edges);
        }
    }
}

fn collect_shape_edges(
    z: LabelId,
    shape: &Shape,
    negated: bool,
    edges: &mut BTreeSet<(LabelId, LabelId, DepKind)>,
) {
    for (p, w) in crate::schema::tcs(&shape.expr) {
        edges.insert((z, w, DepKind::Reference));
        if negated {
            edges.insert((z, w, DepKind::ShapeNeg));
        }
        if shape.extra.contains(p) {
            edges.insert((z, w, DepKind::ExtraNeg));
        }
    }
}

/// One offending cycle: consecutive steps `from --kind--> to`, with the last
/// step returning to the first label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessCycle {
    pub steps: Vec<(LabelId, DepKind, LabelId)>,
}

impl WitnessCycle {
    pub fn contains_edge(&self, from: LabelId, to: LabelId, kind: DepKind) -> bool {
        self.steps.iter().any(|&(f, k, t)| f == from && t == to && k == kind)
    }

    pub fn format(&self, schema: &Schema) -> String {
        let mut out = String::new();
        for (i, &(from, kind, to)) in self.steps.iter().enumerate() {
            if i == 0 {
                out.push_str(schema.name(from));
            }
            out.push_str(&format!(" --{kind}--> {}", schema.name(to)));
        }
        out
    }
}

/// Verdict of the well-definedness check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WellDefinedness {
    Ok,
    CyclicHierarchy { cycle: Vec<LabelId> },
    /// One witness cycle per negative edge found inside an SCC.
    NegativeCycle { witnesses: Vec<WitnessCycle> },
}

impl WellDefinedness {
    pub fn is_ok(&self) -> bool {
        matches!(self, WellDefinedness::Ok)
    }

    /// Multi-line description with witness cycles spelled out by name.
    pub fn describe(&self, schema: &Schema) -> String {
        match self {
            WellDefinedness::Ok => "well-defined".to_string(),
            WellDefinedness::CyclicHierarchy { cycle } => {
                let names: Vec<&str> = cycle.iter().map(|&id| schema.name(id)).collect();
                format!("extension hierarchy is cyclic: {}", names.join(" -> "))
            }
            WellDefinedness::NegativeCycle { witnesses } => {
                let mut out =
                    String::from("dependency cycles through negative dependencies:\n");
                for w in witnesses {
                    out.push_str("  ");
                    out.push_str(&w.format(schema));
                    out.push('\n');
                }
                out
            }
        }
    }
}

impl fmt::Display for WellDefinedness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WellDefinedness::Ok => write!(f, "well-defined"),
            WellDefinedness::CyclicHierarchy { .. } => {
                write!(f, "extension hierarchy is cyclic")
            }
            WellDefinedness::NegativeCycle { witnesses } => {
                write!(f, "{} dependency cycle(s) through negation", witnesses.len())
            }
        }
    }
}

/// Checks Def. 6-style well-definedness: acyclic hierarchy and no negative
/// dependency edge inside a strongly connected component.
pub fn check_well_defined(schema: &Schema) -> WellDefinedness {
    let hierarchy = build_hierarchy(schema);
    if let Some(cycle) = hierarchy.find_cycle() {
        return WellDefinedness::CyclicHierarchy { cycle };
    }
    let deps = build_dependency_graph(schema);
    let scc = SccIndex::new(&deps);
    let mut witnesses = Vec::new();
    for (from, to, kind) in deps.edges() {
        if kind.is_negative() && scc.component(from) == scc.component(to) {
            witnesses.push(witness_cycle(&deps, &scc, from, to, kind));
        }
    }
    if witnesses.is_empty() {
        WellDefinedness::Ok
    } else {
        WellDefinedness::NegativeCycle { witnesses }
    }
}

/// Closes the negative edge `from -> to` into a cycle with a path from `to`
/// back to `from` inside their common SCC.
fn witness_cycle(
    deps: &DependencyGraph,
    scc: &SccIndex,
    from: LabelId,
    to: LabelId,
    kind: DepKind,
) -> WitnessCycle {
    let mut steps = vec![(from, kind, to)];
    if to != from {
        let comp = scc.component(from);
        // BFS within the component
        let mut prev: BTreeMap<LabelId, LabelId> = BTreeMap::new();
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(to);
        'search: while let Some(n) = queue.pop_front() {
            for succ in deps.successors(n) {
                if scc.component(succ) != comp || prev.contains_key(&succ) || succ == to {
                    continue;
                }
                prev.insert(succ, n);
                if succ == from {
                    break 'search;
                }
                queue.push_back(succ);
            }
        }
        let mut path = vec![from];
        let mut cur = from;
        while cur != to {
            cur = prev[&cur];
            path.push(cur);
        }
        path.reverse();
        for pair in path.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let step_kind = [
                DepKind::Reference,
                DepKind::Extends,
                DepKind::ShapeNeg,
                DepKind::ExtraNeg,
            ]
            .into_iter()
            .find(|&k| deps.has_edge(a, b, k))
            .expect("BFS followed an existing edge");
            steps.push((a, step_kind, b));
        }
    }
    WitnessCycle { steps }
}

/// Tarjan SCC decomposition of the dependency graph. Components are emitted
/// in reverse topological order: every successor component of `c` has a
/// smaller component index.
struct SccIndex {
    component_of: HashMap<LabelId, usize>,
    components: Vec<Vec<LabelId>>,
}

impl SccIndex {
    fn new(deps: &DependencyGraph) -> Self {
        struct State<'a> {
            deps: &'a DependencyGraph,
            index: usize,
            indices: HashMap<LabelId, usize>,
            low: HashMap<LabelId, usize>,
            stack: Vec<LabelId>,
            on_stack: BTreeSet<LabelId>,
            component_of: HashMap<LabelId, usize>,
            components: Vec<Vec<LabelId>>,
        }

        fn connect(v: LabelId, st: &mut State<'_>) {
            st.indices.insert(v, st.index);
            st.low.insert(v, st.index);
            st.index += 1;
            st.stack.push(v);
            st.on_stack.insert(v);
            for w in st.deps.successors(v) {
                if !st.indices.contains_key(&w) {
                    connect(w, st);
                    let lw = st.low[&w];
                    let lv = st.low[&v];
                    st.low.insert(v, lv.min(lw));
                } else if st.on_stack.contains(&w) {
                    let iw = st.indices[&w];
                    let lv = st.low[&v];
                    st.low.insert(v, lv.min(iw));
                }
            }
            if st.low[&v] == st.indices[&v] {
                let mut comp = Vec::new();
                loop {
                    let w = st.stack.pop().unwrap();
                    st.on_stack.remove(&w);
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                let id = st.components.len();
                for &m in &comp {
                    st.component_of.insert(m, id);
                }
                st.components.push(comp);
            }
        }

        let mut st = State {
            deps,
            index: 0,
            indices: HashMap::new(),
            low: HashMap::new(),
            stack: Vec::new(),
            on_stack: BTreeSet::new(),
            component_of: HashMap::new(),
            components: Vec::new(),
        };
        for &n in deps.nodes() {
            if !st.indices.contains_key(&n) {
                connect(n, &mut st);
            }
        }
        SccIndex {
            component_of: st.component_of,
            components: st.components,
        }
    }

    fn component(&self, id: LabelId) -> usize {
        self.component_of[&id]
    }
}

/// A stratum assignment with contiguous active range `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stratification {
    assignment: BTreeMap<LabelId, u32>,
    stratum_count: u32,
}

impl Stratification {
    pub fn stratum(&self, id: LabelId) -> Option<u32> {
        self.assignment.get(&id).copied()
    }

    pub fn stratum_count(&self) -> u32 {
        self.stratum_count
    }

    pub fn assignment(&self) -> &BTreeMap<LabelId, u32> {
        &self.assignment
    }

    /// Labels assigned exactly stratum `i`.
    pub fn labels_on(&self, i: u32) -> BTreeSet<LabelId> {
        self.assignment
            .iter()
            .filter(|&(_, &s)| s == i)
            .map(|(&id, _)| id)
            .collect()
    }

    /// Labels assigned stratum at most `i`.
    pub fn labels_up_to(&self, i: u32) -> BTreeSet<LabelId> {
        self.assignment
            .iter()
            .filter(|&(_, &s)| s <= i)
            .map(|(&id, _)| id)
            .collect()
    }

    /// Checks both stratification conditions against every dependency edge.
    pub fn validate_against(&self, deps: &DependencyGraph) -> bool {
        deps.edges().all(|(from, to, kind)| {
            let (Some(sf), Some(st)) = (self.stratum(from), self.stratum(to)) else {
                return false;
            };
            if kind.is_negative() {
                sf > st
            } else {
                sf >= st
            }
        })
    }
}

/// Computes a minimal stratification by condensing the dependency graph.
pub fn stratify(schema: &Schema) -> Result<Stratification, AnalysisError> {
    stratify_impl(schema, false)
}

/// Computes the most refined stratification: every SCC gets its own stratum.
/// Useful for checking that results do not depend on the stratification.
pub fn stratify_refined(schema: &Schema) -> Result<Stratification, AnalysisError> {
    stratify_impl(schema, true)
}

fn stratify_impl(schema: &Schema, refined: bool) -> Result<Stratification, AnalysisError> {
    let verdict = check_well_defined(schema);
    if !verdict.is_ok() {
        return Err(AnalysisError::IllDefined(verdict));
    }
    let deps = build_dependency_graph(schema);
    let scc = SccIndex::new(&deps);
    // Tarjan order has successors first, so strata are ready when needed.
    let mut stratum_of_component = vec![1u32; scc.components.len()];
    for (cid, members) in scc.components.iter().enumerate() {
        let mut stratum = if refined { cid as u32 + 1 } else { 1 };
        for &m in members {
            for (_, to, kind) in deps.edges().filter(|&(from, _, _)| from == m) {
                let target_comp = scc.component(to);
                if target_comp == cid {
                    continue;
                }
                let base = stratum_of_component[target_comp];
                let needed = if kind.is_negative() { base + 1 } else { base };
                stratum = stratum.max(needed);
            }
        }
        stratum_of_component[cid] = stratum;
    }
    let mut assignment = BTreeMap::new();
    for l in schema.labels() {
        assignment.insert(l, stratum_of_component[scc.component(l)]);
    }
    let stratum_count = assignment.values().copied().max().unwrap_or(1);
    Ok(Stratification {
        assignment,
        stratum_count,
    })
}

/// The schema restricted to labels on stratum at most `i`.
pub fn restrict_schema(
    schema: &Schema,
    stratification: &Stratification,
    i: u32,
) -> Result<Schema, AnalysisError> {
    if i < 1 || i > stratification.stratum_count() {
        return Err(AnalysisError::StratumOutOfRange(
            i,
            stratification.stratum_count(),
        ));
    }
    Ok(schema.restrict_to(&stratification.labels_up_to(i)))
}
