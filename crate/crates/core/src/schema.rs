//! Abstract syntax of schemas: labels, node constraints, triple expressions,
//! shape expressions, and well-formedness checking.
//!
//! A schema declares *simple* labels (plain shape expressions) and
//! *extendable* labels (an `extends` shape optionally conjoined with a
//! restriction). Labels are interned: the AST refers to them by [`LabelId`],
//! and names referenced but never declared keep an id so that
//! [`check_schema_form`] can report them.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::rdf::RdfNode;

/// Interned label index, valid for the schema that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabelId(u32);

impl LabelId {
    pub(crate) const MIN: LabelId = LabelId(0);
    pub(crate) const MAX: LabelId = LabelId(u32::MAX);

    pub fn as_usize(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn from_index(i: u32) -> Self {
        LabelId(i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LabelKind {
    Simple,
    Extendable,
}

/// Descriptor of a declared label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Label {
    pub name: String,
    pub kind: LabelKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Iri,
    Blank,
    Literal,
}

/// A literal value used in `VALUE` and `IN` facets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LiteralValue {
    pub lexical: String,
    pub datatype: String,
}

impl LiteralValue {
    pub fn new(lexical: impl Into<String>, datatype: impl Into<String>) -> Self {
        LiteralValue {
            lexical: lexical.into(),
            datatype: datatype.into(),
        }
    }

    fn matches(&self, n: &RdfNode) -> bool {
        matches!(n, RdfNode::Literal { lexical, datatype }
            if *lexical == self.lexical && *datatype == self.datatype)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Lt => "MAXEXC",
            CmpOp::Le => "MAXINC",
            CmpOp::Gt => "MINEXC",
            CmpOp::Ge => "MININC",
        })
    }
}

/// One conjunct of a node constraint. Every facet is total on nodes;
/// numeric facets are false on non-numeric nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Facet {
    AnyNode,
    KindIs(NodeKind),
    DatatypeIs(String),
    ValueEq(LiteralValue),
    ValueIn(BTreeSet<LiteralValue>),
    /// Numeric comparison against a decimal bound kept in lexical form.
    NumRange(CmpOp, String),
}

impl Facet {
    fn eval(&self, n: &RdfNode) -> bool {
        match self {
            Facet::AnyNode => true,
            Facet::KindIs(kind) => match kind {
                NodeKind::Iri => n.is_iri(),
                NodeKind::Blank => n.is_blank(),
                NodeKind::Literal => n.is_literal(),
            },
            Facet::DatatypeIs(d) => {
                matches!(n, RdfNode::Literal { datatype, .. } if datatype == d)
            }
            Facet::ValueEq(v) => v.matches(n),
            Facet::ValueIn(set) => set.iter().any(|v| v.matches(n)),
            Facet::NumRange(op, bound) => {
                let (Some(value), Ok(bound)) = (n.numeric_value(), bound.parse::<f64>()) else {
                    return false;
                };
                match op {
                    CmpOp::Lt => value < bound,
                    CmpOp::Le => value <= bound,
                    CmpOp::Gt => value > bound,
                    CmpOp::Ge => value >= bound,
                }
            }
        }
    }
}

/// A non-empty conjunction of facets; total on all RDF nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeConstraint {
    facets: Vec<Facet>,
}

impl NodeConstraint {
    pub fn new(facets: Vec<Facet>) -> Self {
        assert!(!facets.is_empty(), "node constraint needs at least one facet");
        NodeConstraint { facets }
    }

    pub fn any() -> Self {
        Self::new(vec![Facet::AnyNode])
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// True iff every facet holds on `n`.
    pub fn eval(&self, n: &RdfNode) -> bool {
        self.facets.iter().all(|f| f.eval(n))
    }
}

/// Triple expressions: bag patterns over neighbourhood triples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TripleExpr {
    Epsilon,
    TripleConstraint { predicate: String, reference: LabelId },
    OneOf(Box<TripleExpr>, Box<TripleExpr>),
    EachOf(Box<TripleExpr>, Box<TripleExpr>),
    Star(Box<TripleExpr>),
}

impl TripleExpr {
    pub fn tc(predicate: impl Into<String>, reference: LabelId) -> Self {
        TripleExpr::TripleConstraint {
            predicate: predicate.into(),
            reference,
        }
    }

    pub fn one_of(a: TripleExpr, b: TripleExpr) -> Self {
        TripleExpr::OneOf(Box::new(a), Box::new(b))
    }

    pub fn each_of(a: TripleExpr, b: TripleExpr) -> Self {
        TripleExpr::EachOf(Box::new(a), Box::new(b))
    }

    pub fn star(e: TripleExpr) -> Self {
        TripleExpr::Star(Box::new(e))
    }
}

/// A shape: triple expression with optional `closed` and `extra` modifiers.
/// An absent `extra` modifier is represented by the empty property set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape {
    pub closed: bool,
    pub extra: BTreeSet<String>,
    pub expr: TripleExpr,
}

impl Shape {
    pub fn open(expr: TripleExpr) -> Self {
        Shape {
            closed: false,
            extra: BTreeSet::new(),
            expr,
        }
    }
}

/// A shape prefixed with the set of labels it extends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapeExtends {
    pub extends: Vec<LabelId>,
    pub shape: Shape,
}

/// Shape expressions.
///
/// References are allowed both inside triple constraints and wherever a
/// plain shape expression may occur, which covers conjunctions of
/// references such as `@Figure AND { <radius> @T_float }`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShapeExpr {
    NodeConstraint(NodeConstraint),
    Ref(LabelId),
    And(Box<ShapeExpr>, Box<ShapeExpr>),
    Or(Box<ShapeExpr>, Box<ShapeExpr>),
    Not(Box<ShapeExpr>),
    Shape(Shape),
    ShapeWithExtends(ShapeExtends),
}

impl ShapeExpr {
    pub fn and(a: ShapeExpr, b: ShapeExpr) -> Self {
        ShapeExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: ShapeExpr, b: ShapeExpr) -> Self {
        ShapeExpr::Or(Box::new(a), Box::new(b))
    }

    pub fn not(s: ShapeExpr) -> Self {
        ShapeExpr::Not(Box::new(s))
    }

    pub fn shape(expr: TripleExpr) -> Self {
        ShapeExpr::Shape(Shape::open(expr))
    }

    pub fn extends(targets: Vec<LabelId>, expr: TripleExpr) -> Self {
        ShapeExpr::ShapeWithExtends(ShapeExtends {
            extends: targets,
            shape: Shape::open(expr),
        })
    }

    /// Splits an extendable shape expression `extends X h [and u]` into its
    /// leading extends-shape and optional restriction.
    pub fn extendable_form(&self) -> Option<(&ShapeExtends, Option<&ShapeExpr>)> {
        match self {
            ShapeExpr::ShapeWithExtends(se) => Some((se, None)),
            ShapeExpr::And(lhs, rhs) => match lhs.as_ref() {
                ShapeExpr::ShapeWithExtends(se) => Some((se, Some(rhs))),
                _ => None,
            },
            _ => None,
        }
    }
}

/// All triple-constraint sub-expressions of `e`, as (predicate, reference)
/// pairs in syntactic order.
pub fn tcs(e: &TripleExpr) -> Vec<(&str, LabelId)> {
    fn walk<'a>(e: &'a TripleExpr, out: &mut Vec<(&'a str, LabelId)>) {
        match e {
            TripleExpr::Epsilon => {}
            TripleExpr::TripleConstraint { predicate, reference } => {
                out.push((predicate.as_str(), *reference));
            }
            TripleExpr::OneOf(a, b) | TripleExpr::EachOf(a, b) => {
                walk(a, out);
                walk(b, out);
            }
            TripleExpr::Star(a) => walk(a, out),
        }
    }
    let mut out = Vec::new();
    walk(e, &mut out);
    out
}

/// The property set of the triple constraints of `e`.
pub fn props_of_expr(e: &TripleExpr) -> BTreeSet<&str> {
    tcs(e).into_iter().map(|(p, _)| p).collect()
}

#[derive(Debug, Clone, PartialEq)]
struct LabelDecl {
    kind: LabelKind,
    is_abstract: bool,
    def: ShapeExpr,
}

/// A ShEx schema with inheritance: simple and extendable labels, their
/// definitions, and the abstract subset. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schema {
    names: Vec<String>,
    by_name: HashMap<String, LabelId>,
    decls: Vec<Option<LabelDecl>>,
    decl_order: Vec<LabelId>,
}

impl Schema {
    pub fn builder() -> SchemaBuilder {
        SchemaBuilder {
            schema: Schema::default(),
        }
    }

    /// Number of interned names (declared or merely referenced).
    pub fn label_table_len(&self) -> usize {
        self.names.len()
    }

    pub fn label_id(&self, name: &str) -> Option<LabelId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, id: LabelId) -> &str {
        &self.names[id.as_usize()]
    }

    pub fn is_declared(&self, id: LabelId) -> bool {
        self.decls[id.as_usize()].is_some()
    }

    pub fn kind(&self, id: LabelId) -> Option<LabelKind> {
        self.decls[id.as_usize()].as_ref().map(|d| d.kind)
    }

    pub fn is_abstract(&self, id: LabelId) -> bool {
        self.decls[id.as_usize()]
            .as_ref()
            .is_some_and(|d| d.is_abstract)
    }

    pub fn definition(&self, id: LabelId) -> Option<&ShapeExpr> {
        self.decls[id.as_usize()].as_ref().map(|d| &d.def)
    }

    pub fn label(&self, id: LabelId) -> Option<Label> {
        self.kind(id).map(|kind| Label {
            name: self.name(id).to_string(),
            kind,
        })
    }

    /// Declared labels in declaration order.
    pub fn labels(&self) -> impl Iterator<Item = LabelId> + '_ {
        self.decl_order
            .iter()
            .copied()
            .filter(|id| self.is_declared(*id))
    }

    pub fn simple_labels(&self) -> impl Iterator<Item = LabelId> + '_ {
        self.labels()
            .filter(|id| self.kind(*id) == Some(LabelKind::Simple))
    }

    pub fn extendable_labels(&self) -> impl Iterator<Item = LabelId> + '_ {
        self.labels()
            .filter(|id| self.kind(*id) == Some(LabelKind::Extendable))
    }

    pub fn abstract_labels(&self) -> impl Iterator<Item = LabelId> + '_ {
        self.labels().filter(|id| self.is_abstract(*id))
    }

    /// The triple expression of the leading extends-shape of `def(x)`.
    pub fn ext_te(&self, x: LabelId) -> Result<&TripleExpr, SchemaError> {
        let (se, _) = self.extendable_parts(x)?;
        Ok(&se.shape.expr)
    }

    /// The restriction conjunct of `def(x)`, absent when the definition has
    /// no `and` part.
    pub fn restr(&self, x: LabelId) -> Result<Option<&ShapeExpr>, SchemaError> {
        let (_, restr) = self.extendable_parts(x)?;
        Ok(restr)
    }

    /// The direct extension targets of `def(x)` (the set X of its leading
    /// extends-shape).
    pub fn extends_targets(&self, x: LabelId) -> Result<&[LabelId], SchemaError> {
        let (se, _) = self.extendable_parts(x)?;
        Ok(&se.extends)
    }

    fn extendable_parts(
        &self,
        x: LabelId,
    ) -> Result<(&ShapeExtends, Option<&ShapeExpr>), SchemaError> {
        match self.kind(x) {
            None => Err(SchemaError::Undeclared(self.name(x).to_string())),
            Some(LabelKind::Simple) => {
                Err(SchemaError::NotExtendable(self.name(x).to_string()))
            }
            Some(LabelKind::Extendable) => self
                .definition(x)
                .and_then(|def| def.extendable_form())
                .ok_or_else(|| SchemaError::MalformedExtendable(self.name(x).to_string())),
        }
    }

    /// Copy of this schema with only the given labels declared. Label ids
    /// remain valid across the restriction.
    pub fn restrict_to(&self, keep: &BTreeSet<LabelId>) -> Schema {
        let mut out = self.clone();
        for i in 0..out.decls.len() {
            if !keep.contains(&LabelId(i as u32)) {
                out.decls[i] = None;
            }
        }
        out.decl_order.retain(|id| keep.contains(id));
        out
    }
}

/// Incremental schema construction; the text parser and tests go through
/// this.
#[derive(Debug, Default)]
pub struct SchemaBuilder {
    schema: Schema,
}

impl SchemaBuilder {
    /// Interns a name, declared or not.
    pub fn label(&mut self, name: &str) -> LabelId {
        if let Some(id) = self.schema.by_name.get(name) {
            return *id;
        }
        let id = LabelId(self.schema.names.len() as u32);
        self.schema.names.push(name.to_string());
        self.schema.by_name.insert(name.to_string(), id);
        self.schema.decls.push(None);
        id
    }

    /// Declares a label with its definition.
    pub fn define(
        &mut self,
        name: &str,
        kind: LabelKind,
        is_abstract: bool,
        def: ShapeExpr,
    ) -> Result<LabelId, SchemaError> {
        let id = self.label(name);
        let slot = &mut self.schema.decls[id.as_usize()];
        if slot.is_some() {
            return Err(SchemaError::DuplicateLabel(name.to_string()));
        }
        *slot = Some(LabelDecl {
            kind,
            is_abstract,
            def,
        });
        self.schema.decl_order.push(id);
        Ok(id)
    }

    /// Declares a label, inferring its kind from the definition form: a
    /// leading extends-shape makes it extendable.
    pub fn define_inferred(
        &mut self,
        name: &str,
        is_abstract: bool,
        def: ShapeExpr,
    ) -> Result<LabelId, SchemaError> {
        let kind = if def.extendable_form().is_some() {
            LabelKind::Extendable
        } else {
            LabelKind::Simple
        };
        self.define(name, kind, is_abstract, def)
    }

    pub fn finish(self) -> Schema {
        self.schema
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("label '{0}' is already defined")]
    DuplicateLabel(String),
    #[error("label '{0}' is not declared")]
    Undeclared(String),
    #[error("label '{0}' is not extendable")]
    NotExtendable(String),
    #[error("extendable label '{0}' has a malformed definition")]
    MalformedExtendable(String),
}

/// One well-formedness violation found by [`check_schema_form`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    /// A label is referenced (or extended) but never declared.
    UndeclaredLabel { context: String, name: String },
    /// An extendable label's definition is not `extends X h [and u]`.
    MalformedExtendable { name: String },
    /// A simple label's definition has the form of an extendable one.
    SimpleLabelExtends { name: String },
    /// An extends set names a declared label that is not extendable.
    ExtendsTargetNotExtendable { name: String, target: String },
    /// `abstract` on a label that is not extendable.
    AbstractNotExtendable { name: String },
    /// A shape-with-extends occurs under negation, which the dependency
    /// analysis cannot track.
    NegatedExtends { name: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::UndeclaredLabel { context, name } => {
                write!(f, "label '{name}' referenced in '{context}' is not declared")
            }
            Diagnostic::MalformedExtendable { name } => write!(
                f,
                "extendable label '{name}' must be defined as EXTENDS [...] {{...}} optionally AND a shape expression"
            ),
            Diagnostic::SimpleLabelExtends { name } => write!(
                f,
                "simple label '{name}' has an extendable definition form"
            ),
            Diagnostic::ExtendsTargetNotExtendable { name, target } => {
                write!(f, "'{name}' extends '{target}', which is not an extendable label")
            }
            Diagnostic::AbstractNotExtendable { name } => {
                write!(f, "abstract label '{name}' is not extendable")
            }
            Diagnostic::NegatedExtends { name } => {
                write!(f, "definition of '{name}' uses EXTENDS under NOT, which is not supported")
            }
        }
    }
}

/// Checks the structural schema invariants, returning one diagnostic per
/// violation. An empty result means the schema is well-formed (it may still
/// fail well-definedness, which is a separate analysis).
pub fn check_schema_form(schema: &Schema) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for id in schema.labels() {
        let name = schema.name(id).to_string();
        let def = schema.definition(id).expect("declared label has definition");
        match schema.kind(id).unwrap() {
            LabelKind::Extendable => {
                if def.extendable_form().is_none() {
                    out.push(Diagnostic::MalformedExtendable { name: name.clone() });
                }
            }
            LabelKind::Simple => {
                if def.extendable_form().is_some() {
                    out.push(Diagnostic::SimpleLabelExtends { name: name.clone() });
                }
                if schema.is_abstract(id) {
                    out.push(Diagnostic::AbstractNotExtendable { name: name.clone() });
                }
            }
        }
        walk_def(schema, &name, def, false, &mut out);
    }
    out
}

/// Walks a definition collecting reference diagnostics; `negated` tracks
/// negation parity for the nested-extends check.
fn walk_def(
    schema: &Schema,
    context: &str,
    def: &ShapeExpr,
    negated: bool,
    out: &mut Vec<Diagnostic>,
) {
    match def {
        ShapeExpr::NodeConstraint(_) => {}
        ShapeExpr::Ref(id) => {
            if !schema.is_declared(*id) {
                out.push(Diagnostic::UndeclaredLabel {
                    context: context.to_string(),
                    name: schema.name(*id).to_string(),
                });
            }
        }
        ShapeExpr::And(a, b) | ShapeExpr::Or(a, b) => {
            walk_def(schema, context, a, negated, out);
            walk_def(schema, context, b, negated, out);
        }
        ShapeExpr::Not(inner) => walk_def(schema, context, inner, !negated, out),
        ShapeExpr::Shape(shape) => walk_shape(schema, context, shape, out),
        ShapeExpr::ShapeWithExtends(se) => {
            if negated {
                out.push(Diagnostic::NegatedExtends {
                    name: context.to_string(),
                });
            }
            for &target in &se.extends {
                match schema.kind(target) {
                    None => out.push(Diagnostic::UndeclaredLabel {
                        context: context.to_string(),
                        name: schema.name(target).to_string(),
                    }),
                    Some(LabelKind::Simple) => out.push(Diagnostic::ExtendsTargetNotExtendable {
                        name: context.to_string(),
                        target: schema.name(target).to_string(),
                    }),
                    Some(LabelKind::Extendable) => {}
                }
            }
            walk_shape(schema, context, &se.shape, out);
        }
    }
}

fn walk_shape(schema: &Schema, context: &str, shape: &Shape, out: &mut Vec<Diagnostic>) {
    for (_, reference) in tcs(&shape.expr) {
        if !schema.is_declared(reference) {
            out.push(Diagnostic::UndeclaredLabel {
                context: context.to_string(),
                name: schema.name(reference).to_string(),
            });
        }
    }
}
