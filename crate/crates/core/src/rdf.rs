//! RDF data model: nodes, triples, graphs, and neighbourhood extraction.
//!
//! Graphs are immutable once built. The text format is a line-oriented
//! N-Triples subset with a numeric shorthand: a bare `4` is an integer-typed
//! literal and a bare `10.1` a decimal-typed literal.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

/// Datatype IRI of plain string literals.
pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
/// Datatype IRI of integer literals.
pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
/// Datatype IRI of decimal literals.
pub const XSD_DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";
/// Datatype IRI of boolean literals.
pub const XSD_BOOLEAN: &str = "http://www.w3.org/2001/XMLSchema#boolean";

/// A node of an RDF graph: an IRI, a blank node, or a literal.
///
/// Equality is structural: literals compare by lexical form and datatype,
/// so `"2.0"` and `"2.00"` are distinct nodes even as decimals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RdfNode {
    Iri(String),
    Blank(String),
    Literal { lexical: String, datatype: String },
}

impl RdfNode {
    pub fn iri(value: impl Into<String>) -> Self {
        let value = value.into();
        assert!(!value.is_empty(), "IRI must be non-empty");
        RdfNode::Iri(value)
    }

    pub fn blank(label: impl Into<String>) -> Self {
        let label = label.into();
        assert!(!label.is_empty(), "blank node label must be non-empty");
        RdfNode::Blank(label)
    }

    pub fn literal(lexical: impl Into<String>, datatype: impl Into<String>) -> Self {
        RdfNode::Literal {
            lexical: lexical.into(),
            datatype: datatype.into(),
        }
    }

    /// A string-typed literal.
    pub fn string(lexical: impl Into<String>) -> Self {
        Self::literal(lexical, XSD_STRING)
    }

    /// An integer-typed literal with the canonical lexical form of `value`.
    pub fn integer(value: i64) -> Self {
        Self::literal(value.to_string(), XSD_INTEGER)
    }

    /// A decimal-typed literal with the given lexical form.
    pub fn decimal(lexical: impl Into<String>) -> Self {
        Self::literal(lexical, XSD_DECIMAL)
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, RdfNode::Literal { .. })
    }

    pub fn is_iri(&self) -> bool {
        matches!(self, RdfNode::Iri(_))
    }

    pub fn is_blank(&self) -> bool {
        matches!(self, RdfNode::Blank(_))
    }

    /// Numeric view of integer- and decimal-typed literals.
    /// Non-numeric nodes have no value.
    pub fn numeric_value(&self) -> Option<f64> {
        match self {
            RdfNode::Literal { lexical, datatype }
                if datatype == XSD_INTEGER || datatype == XSD_DECIMAL =>
            {
                lexical.parse::<f64>().ok()
            }
            _ => None,
        }
    }
}

impl fmt::Display for RdfNode {
    /// N-Triples token form, usable verbatim in graph files.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RdfNode::Iri(value) => write!(f, "<{value}>"),
            RdfNode::Blank(label) => write!(f, "_:{label}"),
            RdfNode::Literal { lexical, datatype } => {
                write!(f, "\"{}\"^^<{}>", escape_literal(lexical), datatype)
            }
        }
    }
}

fn escape_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out
}

/// A single RDF statement. Subjects are IRIs or blank nodes, never literals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: RdfNode,
    pub predicate: String,
    pub object: RdfNode,
}

impl Triple {
    pub fn new(subject: RdfNode, predicate: impl Into<String>, object: RdfNode) -> Self {
        assert!(!subject.is_literal(), "triple subject must not be a literal");
        Triple {
            subject,
            predicate: predicate.into(),
            object,
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <{}> {} .", self.subject, self.predicate, self.object)
    }
}

/// A finite set of triples with a subject index. Immutable after construction.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    triples: Vec<Triple>,
    by_subject: HashMap<RdfNode, Vec<usize>>,
}

impl Graph {
    /// Builds a graph from triples, collapsing structural duplicates.
    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Self {
        let set: BTreeSet<Triple> = triples.into_iter().collect();
        let triples: Vec<Triple> = set.into_iter().collect();
        let mut by_subject: HashMap<RdfNode, Vec<usize>> = HashMap::new();
        for (i, t) in triples.iter().enumerate() {
            by_subject.entry(t.subject.clone()).or_default().push(i);
        }
        Graph { triples, by_subject }
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// All subjects and objects of the graph (predicates are not nodes).
    pub fn nodes(&self) -> BTreeSet<RdfNode> {
        let mut nodes = BTreeSet::new();
        for t in &self.triples {
            nodes.insert(t.subject.clone());
            nodes.insert(t.object.clone());
        }
        nodes
    }

    /// The triples having `n` as subject; empty if `n` is not a subject.
    pub fn neighbourhood(&self, n: &RdfNode) -> NeighbourhoodSet {
        let triples = match self.by_subject.get(n) {
            Some(ids) => ids.iter().map(|&i| self.triples[i].clone()).collect(),
            None => Vec::new(),
        };
        NeighbourhoodSet { triples }
    }

    /// Borrowed view of a neighbourhood, for evaluation-internal use.
    pub(crate) fn neighbourhood_refs(&self, n: &RdfNode) -> Vec<&Triple> {
        match self.by_subject.get(n) {
            Some(ids) => ids.iter().map(|&i| &self.triples[i]).collect(),
            None => Vec::new(),
        }
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.triples == other.triples
    }
}

impl Eq for Graph {}

/// A set of triples sharing one subject. The empty set has no subject.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NeighbourhoodSet {
    triples: Vec<Triple>,
}

impl NeighbourhoodSet {
    /// Builds a neighbourhood set, checking that all triples share a subject.
    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Self {
        let set: BTreeSet<Triple> = triples.into_iter().collect();
        let triples: Vec<Triple> = set.into_iter().collect();
        if let Some(first) = triples.first() {
            assert!(
                triples.iter().all(|t| t.subject == first.subject),
                "neighbourhood set triples must share one subject"
            );
        }
        NeighbourhoodSet { triples }
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Common subject of the member triples, absent when empty.
    pub fn subject(&self) -> Option<&RdfNode> {
        self.triples.first().map(|t| &t.subject)
    }

    /// Property set of the member triples.
    pub fn props(&self) -> BTreeSet<&str> {
        self.triples.iter().map(|t| t.predicate.as_str()).collect()
    }
}

/// Graph parse failure, reported with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct GraphParseError {
    pub line: usize,
    pub kind: GraphErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("literal subject: {0}")]
    LiteralSubject(String),
    #[error("malformed IRI: <{0}>")]
    MalformedIri(String),
}

/// Parses the N-Triples-subset format: one `<s> <p> <o> .` statement per
/// line, `#` comment lines, bare numbers as integer/decimal literals.
pub fn parse_graph(text: &str) -> Result<Graph, GraphParseError> {
    let mut triples = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        triples.push(parse_statement(line, line_no)?);
    }
    Ok(Graph::from_triples(triples))
}

/// Serializes a graph back to the text format, one statement per line in
/// canonical (fully typed) form.
pub fn serialize_graph(g: &Graph) -> String {
    let mut out = String::new();
    for t in g.triples() {
        out.push_str(&t.to_string());
        out.push('\n');
    }
    out
}

fn parse_statement(line: &str, line_no: usize) -> Result<Triple, GraphParseError> {
    let mut scanner = Scanner::new(line, line_no);
    let subject = match scanner.term()? {
        Term::Node(n) if n.is_literal() => {
            return Err(scanner.err(GraphErrorKind::LiteralSubject(n.to_string())));
        }
        Term::Node(n) => n,
        Term::Dot => return Err(scanner.syntax("expected subject")),
    };
    let predicate = match scanner.term()? {
        Term::Node(RdfNode::Iri(p)) => p,
        _ => return Err(scanner.syntax("predicate must be an IRI")),
    };
    let object = match scanner.term()? {
        Term::Node(n) => n,
        Term::Dot => return Err(scanner.syntax("expected object")),
    };
    match scanner.term()? {
        Term::Dot => {}
        _ => return Err(scanner.syntax("expected terminating '.'")),
    }
    scanner.expect_end()?;
    Ok(Triple::new(subject, predicate, object))
}

enum Term {
    Node(RdfNode),
    Dot,
}

struct Scanner<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
}

impl<'a> Scanner<'a> {
    fn new(line: &'a str, line_no: usize) -> Self {
        Scanner {
            chars: line.chars().peekable(),
            line: line_no,
        }
    }

    fn err(&self, kind: GraphErrorKind) -> GraphParseError {
        GraphParseError { line: self.line, kind }
    }

    fn syntax(&self, msg: impl Into<String>) -> GraphParseError {
        self.err(GraphErrorKind::Syntax(msg.into()))
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some(c) if c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn expect_end(&mut self) -> Result<(), GraphParseError> {
        self.skip_ws();
        match self.chars.peek().copied() {
            None => Ok(()),
            Some(c) => Err(self.syntax(format!("unexpected trailing '{c}'"))),
        }
    }

    fn term(&mut self) -> Result<Term, GraphParseError> {
        self.skip_ws();
        match self.chars.peek().copied() {
            None => Err(self.syntax("unexpected end of statement")),
            Some('.') => {
                self.chars.next();
                Ok(Term::Dot)
            }
            Some('<') => {
                let iri = self.iri()?;
                Ok(Term::Node(RdfNode::Iri(iri)))
            }
            Some('_') => {
                self.chars.next();
                if self.chars.next() != Some(':') {
                    return Err(self.syntax("blank node must start with '_:'"));
                }
                let mut label = String::new();
                while matches!(self.chars.peek(), Some(c) if c.is_alphanumeric() || *c == '_' || *c == '-')
                {
                    label.push(self.chars.next().unwrap());
                }
                if label.is_empty() {
                    return Err(self.syntax("empty blank node label"));
                }
                Ok(Term::Node(RdfNode::Blank(label)))
            }
            Some('"') => {
                let lexical = self.quoted()?;
                // optional ^^<datatype>
                if self.chars.peek() == Some(&'^') {
                    self.chars.next();
                    if self.chars.next() != Some('^') {
                        return Err(self.syntax("expected '^^' before datatype"));
                    }
                    if self.chars.peek() != Some(&'<') {
                        return Err(self.syntax("expected '<' after '^^'"));
                    }
                    let datatype = self.iri()?;
                    Ok(Term::Node(RdfNode::literal(lexical, datatype)))
                } else {
                    Ok(Term::Node(RdfNode::string(lexical)))
                }
            }
            Some(c) if c.is_ascii_digit() || c == '-' || c == '+' => self.number(),
            Some(c) => Err(self.syntax(format!("unexpected character '{c}'"))),
        }
    }

    fn iri(&mut self) -> Result<String, GraphParseError> {
        // caller saw '<'
        self.chars.next();
        let mut value = String::new();
        loop {
            match self.chars.next() {
                Some('>') => break,
                Some(c) => value.push(c),
                None => return Err(self.syntax("unterminated IRI")),
            }
        }
        if value.is_empty() || value.chars().any(|c| c.is_whitespace() || c == '<' || c == '"') {
            return Err(self.err(GraphErrorKind::MalformedIri(value)));
        }
        Ok(value)
    }

    fn quoted(&mut self) -> Result<String, GraphParseError> {
        // caller saw '"'
        self.chars.next();
        let mut value = String::new();
        loop {
            match self.chars.next() {
                Some('"') => break,
                Some('\\') => match self.chars.next() {
                    Some('"') => value.push('"'),
                    Some('\\') => value.push('\\'),
                    Some('n') => value.push('\n'),
                    Some('t') => value.push('\t'),
                    Some(c) => return Err(self.syntax(format!("unknown escape '\\{c}'"))),
                    None => return Err(self.syntax("unterminated string")),
                },
                Some(c) => value.push(c),
                None => return Err(self.syntax("unterminated string")),
            }
        }
        Ok(value)
    }

    fn number(&mut self) -> Result<Term, GraphParseError> {
        let mut lexical = String::new();
        if matches!(self.chars.peek(), Some('-') | Some('+')) {
            lexical.push(self.chars.next().unwrap());
        }
        let mut decimal = false;
        while let Some(&c) = self.chars.peek() {
            if c.is_ascii_digit() {
                lexical.push(self.chars.next().unwrap());
            } else if c == '.' && !decimal {
                // a '.' is part of the number only when a digit follows;
                // otherwise it terminates the statement
                let mut probe = self.chars.clone();
                probe.next();
                if matches!(probe.peek(), Some(d) if d.is_ascii_digit()) {
                    decimal = true;
                    lexical.push(self.chars.next().unwrap());
                } else {
                    break;
                }
            } else {
                break;
            }
        }
        if !lexical.chars().any(|c| c.is_ascii_digit()) {
            return Err(self.syntax(format!("malformed number '{lexical}'")));
        }
        let datatype = if decimal { XSD_DECIMAL } else { XSD_INTEGER };
        Ok(Term::Node(RdfNode::literal(lexical, datatype)))
    }
}
