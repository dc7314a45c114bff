//! The satisfiability relations: triple expressions over neighbourhood
//! sets, shape expressions over nodes, and shape expressions over sets.
//!
//! All three relations are pure functions of the graph, schema, typing and
//! input. References are resolved against the typing only, so one
//! evaluation never leaves the neighbourhood of its node; triple-expression
//! matching runs as memoized backtracking over triple-subset bitmasks of
//! that neighbourhood. Matching is exponential in the worst case, which is
//! inherent to the problem; practical neighbourhoods are small.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::analysis::{build_hierarchy, ExtensionHierarchy};
use crate::rdf::{Graph, NeighbourhoodSet, RdfNode, Triple};
use crate::schema::{LabelId, Schema, Shape, ShapeExpr, ShapeExtends, TripleExpr};

/// Largest neighbourhood the bitmask matcher handles. Exhaustive matching
/// beyond this size would not terminate in useful time anyway.
pub const MAX_MATCH_TRIPLES: usize = 64;

type Mask = u64;

/// A set of (node, label) assertions, indexed by node and by label.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Typing {
    by_node: BTreeMap<RdfNode, BTreeSet<LabelId>>,
    by_label: BTreeMap<LabelId, BTreeSet<RdfNode>>,
    len: usize,
}

impl Typing {
    pub fn new() -> Self {
        Typing::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (RdfNode, LabelId)>) -> Self {
        let mut t = Typing::new();
        for (n, l) in pairs {
            t.insert(n, l);
        }
        t
    }

    pub fn insert(&mut self, node: RdfNode, label: LabelId) -> bool {
        let added = self.by_node.entry(node.clone()).or_default().insert(label);
        if added {
            self.by_label.entry(label).or_default().insert(node);
            self.len += 1;
        }
        added
    }

    pub fn remove(&mut self, node: &RdfNode, label: LabelId) -> bool {
        let removed = self
            .by_node
            .get_mut(node)
            .is_some_and(|set| set.remove(&label));
        if removed {
            if self.by_node[node].is_empty() {
                self.by_node.remove(node);
            }
            let nodes = self.by_label.get_mut(&label).unwrap();
            nodes.remove(node);
            if nodes.is_empty() {
                self.by_label.remove(&label);
            }
            self.len -= 1;
        }
        removed
    }

    pub fn contains(&self, node: &RdfNode, label: LabelId) -> bool {
        self.by_node
            .get(node)
            .is_some_and(|set| set.contains(&label))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Pairs in node-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (&RdfNode, LabelId)> + '_ {
        self.by_node
            .iter()
            .flat_map(|(n, labels)| labels.iter().map(move |&l| (n, l)))
    }

    pub fn labels_of(&self, node: &RdfNode) -> BTreeSet<LabelId> {
        self.by_node.get(node).cloned().unwrap_or_default()
    }

    pub fn nodes_with(&self, label: LabelId) -> BTreeSet<RdfNode> {
        self.by_label.get(&label).cloned().unwrap_or_default()
    }

    pub fn restrict_to_labels(&self, labels: &BTreeSet<LabelId>) -> Typing {
        Typing::from_pairs(
            self.pairs()
                .filter(|(_, l)| labels.contains(l))
                .map(|(n, l)| (n.clone(), l)),
        )
    }

    pub fn union(&self, other: &Typing) -> Typing {
        let mut out = self.clone();
        for (n, l) in other.pairs() {
            out.insert(n.clone(), l);
        }
        out
    }

    pub fn is_subset_of(&self, other: &Typing) -> bool {
        self.pairs().all(|(n, l)| other.contains(n, l))
    }
}

impl FromIterator<(RdfNode, LabelId)> for Typing {
    fn from_iter<I: IntoIterator<Item = (RdfNode, LabelId)>>(iter: I) -> Self {
        Typing::from_pairs(iter)
    }
}

/// Defensive failures of the evaluator. Neither occurs on well-defined
/// schemas within the matcher's size limit.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    /// The same shape-with-extends re-entered its own evaluation, which can
    /// only happen when the extension hierarchy is cyclic.
    #[error("recursive extends evaluation on node {node}; the extension hierarchy is cyclic")]
    RecursionGuard { node: String },
    #[error("neighbourhood of {len} triples exceeds the matcher limit of {MAX_MATCH_TRIPLES}")]
    TooManyTriples { len: usize },
}

/// Evaluation context for one graph and schema. Immutable and cheap to
/// share; every call evaluates under a caller-provided typing.
pub struct Evaluator<'a> {
    graph: &'a Graph,
    schema: &'a Schema,
    hierarchy: ExtensionHierarchy,
}

impl<'a> Evaluator<'a> {
    pub fn new(graph: &'a Graph, schema: &'a Schema) -> Self {
        Evaluator {
            graph,
            schema,
            hierarchy: build_hierarchy(schema),
        }
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }

    pub fn schema(&self) -> &Schema {
        self.schema
    }

    pub fn hierarchy(&self) -> &ExtensionHierarchy {
        &self.hierarchy
    }

    /// Table-2 satisfaction: node `n` against shape expression `s`.
    pub fn sat_node(
        &self,
        n: &RdfNode,
        typing: &Typing,
        s: &ShapeExpr,
    ) -> Result<bool, EvalError> {
        let mut eval = Eval::new(self, typing, self.graph.neighbourhood_refs(n), Some(n))?;
        eval.node_sat(s)
    }

    /// Table-3 satisfaction: neighbourhood set `m` against shape
    /// expression `s`.
    pub fn sat_set(
        &self,
        m: &NeighbourhoodSet,
        typing: &Typing,
        s: &ShapeExpr,
    ) -> Result<bool, EvalError> {
        let mut eval = Eval::new(self, typing, m.triples().iter().collect(), m.subject())?;
        let mask = eval.full_mask();
        eval.set_sat(mask, s)
    }

    /// Table-1 satisfaction: neighbourhood set `m` against triple
    /// expression `e`.
    pub fn sat_te(
        &self,
        m: &NeighbourhoodSet,
        typing: &Typing,
        e: &TripleExpr,
    ) -> Result<bool, EvalError> {
        let mut eval = Eval::new(self, typing, m.triples().iter().collect(), m.subject())?;
        let mask = eval.full_mask();
        Ok(eval.te_sat(mask, e))
    }

    /// Splits `m` into the triples satisfying some triple constraint of `e`
    /// under the typing, and the triples whose property occurs in `e` but
    /// that satisfy none of its constraints.
    pub fn split_matching(
        &self,
        m: &NeighbourhoodSet,
        typing: &Typing,
        e: &TripleExpr,
    ) -> (NeighbourhoodSet, NeighbourhoodSet) {
        let tcs = crate::schema::tcs(e);
        let props = crate::schema::props_of_expr(e);
        let mut matched = Vec::new();
        let mut unmatched = Vec::new();
        for t in m.triples() {
            let hits = tcs
                .iter()
                .any(|(p, z)| *p == t.predicate && typing.contains(&t.object, *z));
            if hits {
                matched.push(t.clone());
            } else if props.contains(t.predicate.as_str()) {
                unmatched.push(t.clone());
            }
        }
        (
            NeighbourhoodSet::from_triples(matched),
            NeighbourhoodSet::from_triples(unmatched),
        )
    }
}

/// One evaluation: a fixed typing and one neighbourhood indexed for bitmask
/// matching. All recursion stays inside this index space.
struct Eval<'e> {
    schema: &'e Schema,
    hierarchy: &'e ExtensionHierarchy,
    typing: &'e Typing,
    node: Option<&'e RdfNode>,
    triples: Vec<&'e Triple>,
    te_memo: HashMap<(Mask, usize), bool>,
    match_cache: HashMap<usize, Mask>,
    props_cache: HashMap<usize, Mask>,
    /// Shape-with-extends nodes on the current call path (pointer identity);
    /// re-entering one means the hierarchy is cyclic.
    path: Vec<usize>,
}

impl<'e> Eval<'e> {
    fn new(
        ev: &'e Evaluator<'_>,
        typing: &'e Typing,
        triples: Vec<&'e Triple>,
        node: Option<&'e RdfNode>,
    ) -> Result<Self, EvalError> {
        if triples.len() > MAX_MATCH_TRIPLES {
            return Err(EvalError::TooManyTriples { len: triples.len() });
        }
        Ok(Eval {
            schema: ev.schema,
            hierarchy: &ev.hierarchy,
            typing,
            node,
            triples,
            te_memo: HashMap::new(),
            match_cache: HashMap::new(),
            props_cache: HashMap::new(),
            path: Vec::new(),
        })
    }

    fn full_mask(&self) -> Mask {
        if self.triples.len() == MAX_MATCH_TRIPLES {
            Mask::MAX
        } else {
            (1u64 << self.triples.len()) - 1
        }
    }

    fn guard_node(&self) -> String {
        self.node
            .map_or_else(|| "<set>".to_string(), |n| n.to_string())
    }

    // -- Table 2 -----------------------------------------------------------

    fn node_sat(&mut self, s: &ShapeExpr) -> Result<bool, EvalError> {
        let node = self.node.expect("node-level evaluation has a node");
        match s {
            ShapeExpr::NodeConstraint(c) => Ok(c.eval(node)),
            ShapeExpr::Ref(z) => Ok(self.typing.contains(node, *z)),
            ShapeExpr::Or(a, b) => Ok(self.node_sat(a)? || self.node_sat(b)?),
            ShapeExpr::And(a, b) => Ok(self.node_sat(a)? && self.node_sat(b)?),
            ShapeExpr::Not(inner) => Ok(!self.node_sat(inner)?),
            ShapeExpr::Shape(shape) => {
                let mask = self.full_mask();
                Ok(self.shape_sat(mask, shape))
            }
            ShapeExpr::ShapeWithExtends(ext) => {
                let mask = self.full_mask();
                self.extends_sat(mask, ext)
            }
        }
    }

    // -- Table 3 -----------------------------------------------------------

    fn set_sat(&mut self, mask: Mask, s: &ShapeExpr) -> Result<bool, EvalError> {
        match s {
            // the subject of M is the evaluation's ambient node; an empty
            // set without one satisfies no constraint
            ShapeExpr::NodeConstraint(c) => Ok(self.node.is_some_and(|n| c.eval(n))),
            // set-level references are not in the core grammar; they arise
            // only through references in restriction position and resolve
            // against the subject
            ShapeExpr::Ref(z) => {
                Ok(self.node.is_some_and(|n| self.typing.contains(n, *z)))
            }
            ShapeExpr::Or(a, b) => Ok(self.set_sat(mask, a)? || self.set_sat(mask, b)?),
            ShapeExpr::And(a, b) => Ok(self.set_sat(mask, a)? && self.set_sat(mask, b)?),
            ShapeExpr::Not(inner) => Ok(!self.set_sat(mask, inner)?),
            ShapeExpr::Shape(shape) => Ok(self.shape_sat(mask, shape)),
            ShapeExpr::ShapeWithExtends(ext) => self.extends_sat(mask, ext),
        }
    }

    /// Rule 17. `M^e` must satisfy the triple expression, triples whose
    /// property occurs in the expression but match no constraint must use
    /// extra properties, and `closed` restricts all properties.
    fn shape_sat(&mut self, mask: Mask, shape: &Shape) -> bool {
        let matched = mask & self.match_mask(&shape.expr);
        let in_props = mask & self.props_mask(&shape.expr);
        let unmatched = in_props & !matched;
        let extra = self.predicate_mask_in(&shape.extra);
        if unmatched & !extra != 0 {
            return false;
        }
        if shape.closed && mask & !(self.props_mask(&shape.expr) | extra) != 0 {
            return false;
        }
        self.te_sat(matched, &shape.expr)
    }

    /// Rule 18: search for a partition of `mask` into the local shape's
    /// part and one part per strict ancestor, then check restrictions on
    /// the ancestor unions.
    fn extends_sat(&mut self, mask: Mask, ext: &ShapeExtends) -> Result<bool, EvalError> {
        let key = ext as *const ShapeExtends as usize;
        if self.path.contains(&key) {
            return Err(EvalError::RecursionGuard {
                node: self.guard_node(),
            });
        }
        self.path.push(key);
        let out = self.extends_sat_inner(mask, ext);
        self.path.pop();
        out
    }

    fn extends_sat_inner(&mut self, mask: Mask, ext: &ShapeExtends) -> Result<bool, EvalError> {
        // anc(X): reflexive-transitive ancestors of the extended labels
        let mut anc: BTreeSet<LabelId> = BTreeSet::new();
        for &target in &ext.extends {
            anc.extend(self.hierarchy.ancestors_lenient(target));
        }
        let ancestors: Vec<LabelId> = anc.iter().copied().collect();

        // resolve each ancestor's triple expression and restriction;
        // unresolvable ancestors (malformed schema) admit nothing
        let mut slot_exprs: Vec<&TripleExpr> = Vec::with_capacity(ancestors.len());
        let mut restrictions: Vec<Option<&ShapeExpr>> = Vec::with_capacity(ancestors.len());
        for &x in &ancestors {
            match (self.schema.ext_te(x), self.schema.restr(x)) {
                (Ok(te), Ok(restr)) => {
                    slot_exprs.push(te);
                    restrictions.push(restr);
                }
                _ => return Ok(false),
            }
        }

        let slot_masks: Vec<Mask> = slot_exprs
            .iter()
            .map(|te| mask & self.match_mask(te))
            .collect();
        let local_mask = mask & self.local_admissible_mask(&ext.shape);

        // every triple needs at least one admissible slot
        let coverage = slot_masks.iter().fold(local_mask, |acc, m| acc | m);
        if mask & !coverage != 0 {
            return Ok(false);
        }

        // slot indices contributing to each restricted ancestor's union
        let restricted: Vec<(usize, Vec<usize>)> = ancestors
            .iter()
            .enumerate()
            .filter(|&(i, _)| restrictions[i].is_some())
            .map(|(i, &x)| {
                let anc_of_x = self.hierarchy.ancestors_lenient(x);
                let slots = ancestors
                    .iter()
                    .enumerate()
                    .filter(|(_, z)| anc_of_x.contains(z))
                    .map(|(j, _)| j)
                    .collect();
                (i, slots)
            })
            .collect();

        if restricted.is_empty() {
            let mut memo = HashMap::new();
            self.assign_memoized(mask, 0, &slot_exprs, &slot_masks, &ext.shape, &mut memo)
        } else {
            let mut chosen = vec![0u64; ancestors.len()];
            self.assign_tracked(
                mask,
                0,
                &slot_exprs,
                &slot_masks,
                &ext.shape,
                &restrictions,
                &restricted,
                &mut chosen,
            )
        }
    }

    /// Partition search without restrictions: memoized on (remaining mask,
    /// next slot).
    fn assign_memoized(
        &mut self,
        mask: Mask,
        slot: usize,
        slot_exprs: &[&TripleExpr],
        slot_masks: &[Mask],
        local: &Shape,
        memo: &mut HashMap<(Mask, usize), bool>,
    ) -> Result<bool, EvalError> {
        if slot == slot_exprs.len() {
            return Ok(self.shape_sat(mask, local));
        }
        if let Some(&v) = memo.get(&(mask, slot)) {
            return Ok(v);
        }
        let avail = mask & slot_masks[slot];
        let mut sub = avail;
        let mut found = false;
        loop {
            if self.te_sat(sub, slot_exprs[slot])
                && self.assign_memoized(mask ^ sub, slot + 1, slot_exprs, slot_masks, local, memo)?
            {
                found = true;
                break;
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & avail;
        }
        memo.insert((mask, slot), found);
        Ok(found)
    }

    /// Partition search tracking per-slot choices so that restrictions can
    /// be evaluated on ancestor unions once a full partition is found.
    #[allow(clippy::too_many_arguments)]
    fn assign_tracked(
        &mut self,
        mask: Mask,
        slot: usize,
        slot_exprs: &[&TripleExpr],
        slot_masks: &[Mask],
        local: &Shape,
        restrictions: &[Option<&ShapeExpr>],
        restricted: &[(usize, Vec<usize>)],
        chosen: &mut Vec<Mask>,
    ) -> Result<bool, EvalError> {
        if slot == slot_exprs.len() {
            if !self.shape_sat(mask, local) {
                return Ok(false);
            }
            for (i, union_slots) in restricted {
                let union: Mask = union_slots.iter().map(|&j| chosen[j]).fold(0, |a, b| a | b);
                let restr = restrictions[*i].expect("restricted ancestor has a restriction");
                if !self.set_sat(union, restr)? {
                    return Ok(false);
                }
            }
            return Ok(true);
        }
        let avail = mask & slot_masks[slot];
        let mut sub = avail;
        loop {
            if self.te_sat(sub, slot_exprs[slot]) {
                chosen[slot] = sub;
                if self.assign_tracked(
                    mask ^ sub,
                    slot + 1,
                    slot_exprs,
                    slot_masks,
                    local,
                    restrictions,
                    restricted,
                    chosen,
                )? {
                    return Ok(true);
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & avail;
        }
        Ok(false)
    }

    // -- Table 1 -----------------------------------------------------------

    fn te_sat(&mut self, mask: Mask, e: &TripleExpr) -> bool {
        let key = (mask, e as *const TripleExpr as usize);
        if let Some(&v) = self.te_memo.get(&key) {
            return v;
        }
        let out = match e {
            TripleExpr::Epsilon => mask == 0,
            TripleExpr::TripleConstraint { .. } => {
                mask.count_ones() == 1 && mask & self.match_mask(e) == mask
            }
            TripleExpr::OneOf(a, b) => self.te_sat(mask, a) || self.te_sat(mask, b),
            TripleExpr::EachOf(a, b) => {
                let m1 = mask & self.match_mask(a);
                let m2 = mask & self.match_mask(b);
                if mask & !(m1 | m2) != 0 {
                    false
                } else {
                    // triples only matchable on one side are forced there;
                    // enumerate the genuinely ambiguous remainder
                    let base = mask & !m2;
                    let free = mask & m1 & m2;
                    let mut sub = free;
                    loop {
                        let s = base | sub;
                        if self.te_sat(s, a) && self.te_sat(mask ^ s, b) {
                            break true;
                        }
                        if sub == 0 {
                            break false;
                        }
                        sub = (sub - 1) & free;
                    }
                }
            }
            TripleExpr::Star(inner) => {
                if mask == 0 {
                    true
                } else if mask & !self.match_mask(inner) != 0 {
                    false
                } else {
                    // anchor every block on the lowest remaining triple so
                    // each partition is enumerated once
                    let low = mask & mask.wrapping_neg();
                    let rest = mask ^ low;
                    let mut sub = rest;
                    loop {
                        let block = low | sub;
                        if self.te_sat(block, inner) && self.te_sat(mask ^ block, e) {
                            break true;
                        }
                        if sub == 0 {
                            break false;
                        }
                        sub = (sub - 1) & rest;
                    }
                }
            }
        };
        self.te_memo.insert(key, out);
        out
    }

    // -- masks --------------------------------------------------------------

    /// Triples satisfying some triple constraint of `e` under the typing.
    fn match_mask(&mut self, e: &TripleExpr) -> Mask {
        let key = e as *const TripleExpr as usize;
        if let Some(&m) = self.match_cache.get(&key) {
            return m;
        }
        let m = match e {
            TripleExpr::Epsilon => 0,
            TripleExpr::TripleConstraint { predicate, reference } => {
                let mut m = 0;
                for (i, t) in self.triples.iter().enumerate() {
                    if t.predicate == *predicate && self.typing.contains(&t.object, *reference) {
                        m |= 1 << i;
                    }
                }
                m
            }
            TripleExpr::OneOf(a, b) | TripleExpr::EachOf(a, b) => {
                self.match_mask(a) | self.match_mask(b)
            }
            TripleExpr::Star(inner) => self.match_mask(inner),
        };
        self.match_cache.insert(key, m);
        m
    }

    /// Triples whose property occurs in some triple constraint of `e`.
    fn props_mask(&mut self, e: &TripleExpr) -> Mask {
        let key = e as *const TripleExpr as usize;
        if let Some(&m) = self.props_cache.get(&key) {
            return m;
        }
        let props: BTreeSet<&str> = crate::schema::props_of_expr(e);
        let mut m = 0;
        for (i, t) in self.triples.iter().enumerate() {
            if props.contains(t.predicate.as_str()) {
                m |= 1 << i;
            }
        }
        self.props_cache.insert(key, m);
        m
    }

    /// Triples whose property is in the given set.
    fn predicate_mask_in(&self, props: &BTreeSet<String>) -> Mask {
        let mut m = 0;
        for (i, t) in self.triples.iter().enumerate() {
            if props.contains(&t.predicate) {
                m |= 1 << i;
            }
        }
        m
    }

    /// Triples an open/extra/closed shape can accommodate in rule 17:
    /// matching a constraint, using an extra property, or (unless closed)
    /// lying outside the expression's properties entirely.
    fn local_admissible_mask(&mut self, shape: &Shape) -> Mask {
        let matched = self.match_mask(&shape.expr);
        let in_props = self.props_mask(&shape.expr);
        let extra = self.predicate_mask_in(&shape.extra);
        let outside = if shape.closed { 0 } else { !in_props };
        matched | extra | outside
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::parse_graph;
    use crate::text::parse_schema;

    fn ex3_schema() -> Schema {
        parse_schema(include_str!("../fixtures/ex3.shexi")).unwrap()
    }

    fn ex41_schema() -> Schema {
        parse_schema(include_str!("../fixtures/ex41_extends.shexi")).unwrap()
    }

    /// The typing over 2, 4, 6 and "a" used throughout the matching
    /// examples.
    fn example_typing(s: &Schema) -> Typing {
        let even = s.label_id("T_even").unwrap();
        let lt5 = s.label_id("T_lt5").unwrap();
        let gt5 = s.label_id("T_gt5").unwrap();
        let str_ = s.label_id("T_str").unwrap();
        Typing::from_pairs([
            (RdfNode::integer(2), even),
            (RdfNode::integer(2), lt5),
            (RdfNode::integer(4), even),
            (RdfNode::integer(4), lt5),
            (RdfNode::integer(6), even),
            (RdfNode::integer(6), gt5),
            (RdfNode::string("a"), str_),
        ])
    }

    fn p_triple(value: RdfNode) -> Triple {
        Triple::new(RdfNode::iri("n"), "p", value)
    }

    fn m_24() -> NeighbourhoodSet {
        NeighbourhoodSet::from_triples([p_triple(RdfNode::integer(2)), p_triple(RdfNode::integer(4))])
    }

    fn m_246() -> NeighbourhoodSet {
        NeighbourhoodSet::from_triples([
            p_triple(RdfNode::integer(2)),
            p_triple(RdfNode::integer(4)),
            p_triple(RdfNode::integer(6)),
        ])
    }

    fn m_2a() -> NeighbourhoodSet {
        NeighbourhoodSet::from_triples([p_triple(RdfNode::integer(2)), p_triple(RdfNode::string("a"))])
    }

    fn m_24a() -> NeighbourhoodSet {
        NeighbourhoodSet::from_triples([
            p_triple(RdfNode::integer(2)),
            p_triple(RdfNode::integer(4)),
            p_triple(RdfNode::string("a")),
        ])
    }

    fn expr_of(s: &Schema, label: &str) -> TripleExpr {
        match s.definition(s.label_id(label).unwrap()).unwrap() {
            ShapeExpr::Shape(shape) => shape.expr.clone(),
            other => panic!("expected a shape definition, got {other:?}"),
        }
    }

    #[test]
    fn triple_expression_golden_verdicts() {
        let s = ex3_schema();
        let typing = example_typing(&s);
        let g = Graph::default();
        let ev = Evaluator::new(&g, &s);
        let e = expr_of(&s, "E");

        assert!(ev.sat_te(&m_24(), &typing, &e).unwrap());
        assert!(ev.sat_te(&m_246(), &typing, &e).unwrap());
        assert!(ev.sat_te(&m_2a(), &typing, &e).unwrap());
        assert!(!ev.sat_te(&m_24a(), &typing, &e).unwrap());
    }

    #[test]
    fn empty_set_satisfies_any_star() {
        let s = ex3_schema();
        let typing = example_typing(&s);
        let g = Graph::default();
        let ev = Evaluator::new(&g, &s);
        let e = expr_of(&s, "E");
        let star = TripleExpr::star(e);
        assert!(ev
            .sat_te(&NeighbourhoodSet::default(), &typing, &star)
            .unwrap());
        assert!(ev
            .sat_te(&NeighbourhoodSet::default(), &typing, &TripleExpr::Epsilon)
            .unwrap());
    }

    /// `p @T_even ; p @T_lt5` without sugar, built against the ex3 labels.
    fn even_then_lt5(s: &Schema) -> TripleExpr {
        TripleExpr::each_of(
            TripleExpr::tc("p", s.label_id("T_even").unwrap()),
            TripleExpr::tc("p", s.label_id("T_lt5").unwrap()),
        )
    }

    #[test]
    fn split_matching_examples() {
        let s = ex3_schema();
        let typing = example_typing(&s);
        let g = Graph::default();
        let ev = Evaluator::new(&g, &s);
        let e = even_then_lt5(&s);

        let (me, mne) = ev.split_matching(&m_24a(), &typing, &e);
        assert_eq!(me, m_24());
        assert_eq!(
            mne,
            NeighbourhoodSet::from_triples([p_triple(RdfNode::string("a"))])
        );

        let (me, mne) = ev.split_matching(&m_246(), &typing, &e);
        assert_eq!(me, m_246());
        assert!(mne.is_empty());

        let (me, mne) = ev.split_matching(&NeighbourhoodSet::default(), &typing, &e);
        assert!(me.is_empty() && mne.is_empty());
    }

    #[test]
    fn shape_golden_verdicts() {
        let s = ex3_schema();
        let typing = example_typing(&s);
        let g = Graph::default();
        let ev = Evaluator::new(&g, &s);
        let e = even_then_lt5(&s);

        let plain = ShapeExpr::Shape(Shape::open(e.clone()));
        let extra_p = ShapeExpr::Shape(Shape {
            closed: false,
            extra: ["p".to_string()].into_iter().collect(),
            expr: e.clone(),
        });
        let closed_extra_p = ShapeExpr::Shape(Shape {
            closed: true,
            extra: ["p".to_string()].into_iter().collect(),
            expr: e,
        });
        let with_q = NeighbourhoodSet::from_triples(
            m_24a()
                .triples()
                .iter()
                .cloned()
                .chain([Triple::new(RdfNode::iri("n"), "q", RdfNode::integer(2))]),
        );

        assert!(ev.sat_set(&m_24(), &typing, &plain).unwrap());
        assert!(!ev.sat_set(&m_2a(), &typing, &plain).unwrap());
        assert!(!ev.sat_set(&m_246(), &typing, &plain).unwrap());
        assert!(ev.sat_set(&m_24a(), &typing, &extra_p).unwrap());
        assert!(!ev.sat_set(&m_246(), &typing, &extra_p).unwrap());
        assert!(ev.sat_set(&with_q, &typing, &extra_p).unwrap());
        assert!(!ev.sat_set(&with_q, &typing, &closed_extra_p).unwrap());
    }

    #[test]
    fn extends_golden_verdicts() {
        let s = ex41_schema();
        let typing = example_typing(&s);
        let g = Graph::default();
        let ev = Evaluator::new(&g, &s);
        let def = |name: &str| s.definition(s.label_id(name).unwrap()).unwrap();
        let sets = [m_24(), m_246(), m_2a(), m_24a()];

        assert!(ev.sat_set(&m_24(), &typing, def("x1")).unwrap());
        assert!(ev.sat_set(&m_246(), &typing, def("x2")).unwrap());
        assert!(!ev.sat_set(&m_24(), &typing, def("x2")).unwrap());
        assert!(!ev.sat_set(&m_24a(), &typing, def("x1")).unwrap());

        for m in &sets {
            assert!(!ev.sat_set(m, &typing, def("x3")).unwrap());
            assert!(!ev.sat_set(m, &typing, def("x4")).unwrap());
        }

        assert!(ev.sat_set(&m_2a(), &typing, def("x5")).unwrap());
        assert!(!ev.sat_set(&m_24a(), &typing, def("x6")).unwrap());
    }

    #[test]
    fn node_level_satisfaction() {
        let s = parse_schema(include_str!("../fixtures/fig1.shexi")).unwrap();
        let g = parse_graph(include_str!("../fixtures/fig2.nt")).unwrap();
        let ev = Evaluator::new(&g, &s);
        let colour = s.label_id("Colour").unwrap();
        let t_float = s.label_id("T_float").unwrap();

        // rule 10 consults the typing only
        let a2 = RdfNode::iri("a2");
        let typing = Typing::from_pairs([(a2.clone(), colour)]);
        assert!(ev
            .sat_node(&a2, &typing, &ShapeExpr::Ref(colour))
            .unwrap());
        assert!(!ev
            .sat_node(&a2, &Typing::new(), &ShapeExpr::Ref(colour))
            .unwrap());

        // c1 satisfies Coord's definition under a typing for the floats
        let typing = Typing::from_pairs([
            (RdfNode::decimal("2.0"), t_float),
            (RdfNode::decimal("4.0"), t_float),
        ]);
        let coord_def = s.definition(s.label_id("Coord").unwrap()).unwrap();
        assert!(ev.sat_node(&RdfNode::iri("c1"), &typing, coord_def).unwrap());
        assert!(!ev.sat_node(&RdfNode::iri("a1"), &typing, coord_def).unwrap());
    }

    #[test]
    fn recursion_guard_trips_on_cyclic_hierarchy() {
        let s = parse_schema(include_str!("../fixtures/cyclic_hierarchy.shexi")).unwrap();
        let g = parse_graph("<n> <p> <m> .").unwrap();
        let ev = Evaluator::new(&g, &s);
        let def = s.definition(s.label_id("x1").unwrap()).unwrap();
        let err = ev
            .sat_node(&RdfNode::iri("n"), &Typing::new(), def)
            .unwrap_err();
        assert!(matches!(err, EvalError::RecursionGuard { .. }));
    }

    #[test]
    fn typing_indexes_stay_consistent() {
        let s = ex3_schema();
        let even = s.label_id("T_even").unwrap();
        let lt5 = s.label_id("T_lt5").unwrap();
        let mut t = Typing::new();
        assert!(t.insert(RdfNode::integer(2), even));
        assert!(!t.insert(RdfNode::integer(2), even));
        assert!(t.insert(RdfNode::integer(2), lt5));
        assert!(t.insert(RdfNode::integer(4), even));
        assert_eq!(t.len(), 3);
        assert_eq!(t.labels_of(&RdfNode::integer(2)).len(), 2);
        assert_eq!(t.nodes_with(even).len(), 2);
        assert!(t.remove(&RdfNode::integer(2), even));
        assert!(!t.remove(&RdfNode::integer(2), even));
        assert_eq!(t.len(), 2);
        assert_eq!(t.nodes_with(even).len(), 1);
        let restricted = t.restrict_to_labels(&[lt5].into_iter().collect());
        assert_eq!(restricted.len(), 1);
    }

    #[test]
    fn oversized_neighbourhood_is_an_error() {
        let s = ex3_schema();
        let triples: Vec<Triple> = (0..65)
            .map(|i| Triple::new(RdfNode::iri("n"), format!("p{i}"), RdfNode::integer(i)))
            .collect();
        let g = Graph::from_triples(triples);
        let ev = Evaluator::new(&g, &s);
        let err = ev
            .sat_node(&RdfNode::iri("n"), &Typing::new(), &ShapeExpr::shape(TripleExpr::Epsilon))
            .unwrap_err();
        assert_eq!(err, EvalError::TooManyTriples { len: 65 });
    }
}
