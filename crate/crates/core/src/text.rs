//! Concrete textual syntax: schema files (`.shexi`) and shape maps (`.smap`).
//!
//! Schemas are line-oriented: one `[abstract] Name -> SE` definition per
//! line, `#` comments. Operator precedence is `NOT` > `AND` > `OR` for shape
//! expressions and `;` > `|` for triple expressions, with postfix `*`
//! tightest; parentheses override. `e?` and `e+` are parsed as sugar for
//! `e | EPSILON` and `e ; e*`. A bare identifier in predicate position is
//! sugar for `<urn:p:ident>`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::rdf::{RdfNode, XSD_BOOLEAN, XSD_DECIMAL, XSD_INTEGER, XSD_STRING};
use crate::schema::{
    check_schema_form, CmpOp, Diagnostic, Facet, LabelId, LiteralValue, NodeConstraint, NodeKind,
    Schema, SchemaBuilder, SchemaError, Shape, ShapeExpr, ShapeExtends, TripleExpr,
};

/// Prefix substituted for bare identifier predicates.
pub const PREDICATE_SUGAR_PREFIX: &str = "urn:p:";

/// One line of a shape map: a node to check against a label, or against
/// every declared label (`ALL`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapeMapRequest {
    pub node: RdfNode,
    pub label: RequestLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RequestLabel {
    All,
    Label(LabelId),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("line {line}, col {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("line {line}: duplicate definition of '{name}'")]
    DuplicateLabel { line: usize, name: String },
    #[error("empty schema (no definitions)")]
    EmptySchema,
    #[error("schema is not well-formed:\n{}", format_diagnostics(.0))]
    IllFormed(Vec<Diagnostic>),
    #[error("line {line}: unknown label '{name}'")]
    UnknownLabel { line: usize, name: String },
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("  - {d}"))
        .collect::<Vec<_>>()
        .join("\n")
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Iri(String),
    Str(String),
    Num { lexical: String },
    Blank(String),
    Arrow,
    At,
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Pipe,
    Star,
    Question,
    Plus,
    Comma,
    Dot,
    CaretCaret,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Iri(s) => format!("IRI <{s}>"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::Num { lexical } => format!("number '{lexical}'"),
            Tok::Blank(l) => format!("blank node '_:{l}'"),
            Tok::Arrow => "'->'".to_string(),
            Tok::At => "'@'".to_string(),
            Tok::LBrace => "'{'".to_string(),
            Tok::RBrace => "'}'".to_string(),
            Tok::LParen => "'('".to_string(),
            Tok::RParen => "')'".to_string(),
            Tok::LBracket => "'['".to_string(),
            Tok::RBracket => "']'".to_string(),
            Tok::Semi => "';'".to_string(),
            Tok::Pipe => "'|'".to_string(),
            Tok::Star => "'*'".to_string(),
            Tok::Question => "'?'".to_string(),
            Tok::Plus => "'+'".to_string(),
            Tok::Comma => "','".to_string(),
            Tok::Dot => "'.'".to_string(),
            Tok::CaretCaret => "'^^'".to_string(),
        }
    }
}

fn lex_line(line: &str, line_no: usize) -> Result<Vec<(Tok, usize)>, TextError> {
    let mut out = Vec::new();
    let mut chars = line.char_indices().peekable();
    let err = |col: usize, message: String| TextError::Syntax {
        line: line_no,
        col: col + 1,
        message,
    };
    while let Some(&(col, c)) = chars.peek() {
        match c {
            _ if c.is_whitespace() => {
                chars.next();
            }
            '#' => break,
            '@' => push_simple(&mut out, &mut chars, Tok::At, col),
            '{' => push_simple(&mut out, &mut chars, Tok::LBrace, col),
            '}' => push_simple(&mut out, &mut chars, Tok::RBrace, col),
            '(' => push_simple(&mut out, &mut chars, Tok::LParen, col),
            ')' => push_simple(&mut out, &mut chars, Tok::RParen, col),
            '[' => push_simple(&mut out, &mut chars, Tok::LBracket, col),
            ']' => push_simple(&mut out, &mut chars, Tok::RBracket, col),
            ';' => push_simple(&mut out, &mut chars, Tok::Semi, col),
            '|' => push_simple(&mut out, &mut chars, Tok::Pipe, col),
            '*' => push_simple(&mut out, &mut chars, Tok::Star, col),
            '?' => push_simple(&mut out, &mut chars, Tok::Question, col),
            ',' => push_simple(&mut out, &mut chars, Tok::Comma, col),
            '.' => push_simple(&mut out, &mut chars, Tok::Dot, col),
            '^' => {
                chars.next();
                match chars.next() {
                    Some((_, '^')) => out.push((Tok::CaretCaret, col)),
                    _ => return Err(err(col, "expected '^^'".to_string())),
                }
            }
            '+' => {
                chars.next();
                // '+digit' is a signed number, bare '+' is the repetition op
                if matches!(chars.peek(), Some((_, d)) if d.is_ascii_digit()) {
                    let lexical = lex_number(&mut chars, "+".to_string());
                    out.push((Tok::Num { lexical }, col));
                } else {
                    out.push((Tok::Plus, col));
                }
            }
            '-' => {
                chars.next();
                match chars.peek() {
                    Some((_, '>')) => {
                        chars.next();
                        out.push((Tok::Arrow, col));
                    }
                    Some((_, d)) if d.is_ascii_digit() => {
                        let lexical = lex_number(&mut chars, "-".to_string());
                        out.push((Tok::Num { lexical }, col));
                    }
                    _ => return Err(err(col, "expected '->' or a number".to_string())),
                }
            }
            '<' => {
                chars.next();
                let mut iri = String::new();
                loop {
                    match chars.next() {
                        Some((_, '>')) => break,
                        Some((_, ch)) => iri.push(ch),
                        None => return Err(err(col, "unterminated IRI".to_string())),
                    }
                }
                if iri.is_empty() || iri.chars().any(|ch| ch.is_whitespace() || ch == '<') {
                    return Err(err(col, format!("malformed IRI <{iri}>")));
                }
                out.push((Tok::Iri(iri), col));
            }
            '"' => {
                chars.next();
                let mut value = String::new();
                loop {
                    match chars.next() {
                        Some((_, '"')) => break,
                        Some((_, '\\')) => match chars.next() {
                            Some((_, '"')) => value.push('"'),
                            Some((_, '\\')) => value.push('\\'),
                            Some((_, 'n')) => value.push('\n'),
                            Some((_, 't')) => value.push('\t'),
                            Some((_, other)) => {
                                return Err(err(col, format!("unknown escape '\\{other}'")))
                            }
                            None => return Err(err(col, "unterminated string".to_string())),
                        },
                        Some((_, ch)) => value.push(ch),
                        None => return Err(err(col, "unterminated string".to_string())),
                    }
                }
                out.push((Tok::Str(value), col));
            }
            '_' => {
                chars.next();
                if matches!(chars.peek(), Some((_, ':'))) {
                    chars.next();
                    let label = lex_ident(&mut chars, String::new());
                    if label.is_empty() {
                        return Err(err(col, "empty blank node label".to_string()));
                    }
                    out.push((Tok::Blank(label), col));
                } else {
                    let name = lex_ident(&mut chars, "_".to_string());
                    out.push((Tok::Ident(name), col));
                }
            }
            _ if c.is_ascii_digit() => {
                let lexical = lex_number(&mut chars, String::new());
                out.push((Tok::Num { lexical }, col));
            }
            _ if c.is_alphabetic() => {
                let name = lex_ident(&mut chars, String::new());
                out.push((Tok::Ident(name), col));
            }
            other => return Err(err(col, format!("unexpected character '{other}'"))),
        }
    }
    Ok(out)
}

fn push_simple(
    out: &mut Vec<(Tok, usize)>,
    chars: &mut std::iter::Peekable<std::str::CharIndices<'_>>,
    tok: Tok,
    col: usize,
) {
    chars.next();
    out.push((tok, col));
}

fn lex_ident(
    chars: &mut std::iter::Peekable<std::str::CharIndices<'_>>,
    mut start: String,
) -> String {
    while matches!(chars.peek(), Some((_, c)) if c.is_alphanumeric() || *c == '_') {
        start.push(chars.next().unwrap().1);
    }
    start
}

fn lex_number(
    chars: &mut std::iter::Peekable<std::str::CharIndices<'_>>,
    mut lexical: String,
) -> String {
    let mut seen_dot = false;
    while let Some(&(_, c)) = chars.peek() {
        if c.is_ascii_digit() {
            lexical.push(c);
            chars.next();
        } else if c == '.' && !seen_dot {
            let mut probe = chars.clone();
            probe.next();
            if matches!(probe.peek(), Some((_, d)) if d.is_ascii_digit()) {
                seen_dot = true;
                lexical.push('.');
                chars.next();
            } else {
                break;
            }
        } else {
            break;
        }
    }
    lexical
}

// ---------------------------------------------------------------------------
// Schema parser
// ---------------------------------------------------------------------------

const KEYWORDS: &[&str] = &[
    "abstract", "AND", "OR", "NOT", "CLOSED", "EXTRA", "EXTENDS", "EPSILON", "LITERAL", "VALUE",
    "IN", "IRI", "BNODE", "MININC", "MINEXC", "MAXINC", "MAXEXC", "ALL",
];

fn is_keyword(name: &str) -> bool {
    KEYWORDS.contains(&name)
}

struct Parser<'a, 'b> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    line: usize,
    builder: &'b mut SchemaBuilder,
}

impl<'a, 'b> Parser<'a, 'b> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map_or(0, |(_, c)| *c)
            + 1
    }

    fn next(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> TextError {
        TextError::Syntax {
            line: self.line,
            col: self.col(),
            message: message.into(),
        }
    }

    fn expect(&mut self, tok: &Tok) -> Result<(), TextError> {
        match self.peek() {
            Some(t) if t == tok => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => {
                let msg = format!("expected {}, found {}", tok.describe(), t.describe());
                Err(self.error(msg))
            }
            None => Err(self.error(format!("expected {}", tok.describe()))),
        }
    }

    fn at_ident(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn eat_ident(&mut self, kw: &str) -> bool {
        if self.at_ident(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn label_name(&mut self) -> Result<String, TextError> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) if !is_keyword(&name) => {
                self.pos += 1;
                Ok(name)
            }
            Some(Tok::Ident(name)) => Err(self.error(format!("'{name}' is a reserved keyword"))),
            Some(t) => Err(self.error(format!("expected a label name, found {}", t.describe()))),
            None => Err(self.error("expected a label name")),
        }
    }

    // SE with precedence NOT > AND > OR, binary operators right-associative.
    fn shape_expr(&mut self) -> Result<ShapeExpr, TextError> {
        let lhs = self.and_expr()?;
        if self.eat_ident("OR") {
            let rhs = self.shape_expr()?;
            Ok(ShapeExpr::or(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn and_expr(&mut self) -> Result<ShapeExpr, TextError> {
        let lhs = self.not_expr()?;
        if self.eat_ident("AND") {
            let rhs = self.and_expr()?;
            Ok(ShapeExpr::and(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn not_expr(&mut self) -> Result<ShapeExpr, TextError> {
        if self.eat_ident("NOT") {
            let inner = self.not_expr()?;
            Ok(ShapeExpr::not(inner))
        } else {
            self.shape_atom()
        }
    }

    fn shape_atom(&mut self) -> Result<ShapeExpr, TextError> {
        match self.peek() {
            Some(Tok::At) => {
                self.pos += 1;
                let name = self.label_name()?;
                Ok(ShapeExpr::Ref(self.builder.label(&name)))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.shape_expr()?;
                self.expect(&Tok::RParen)?;
                Ok(inner)
            }
            Some(Tok::Ident(kw)) if kw == "EXTENDS" => {
                self.pos += 1;
                self.expect(&Tok::LBracket)?;
                let mut targets = Vec::new();
                if self.peek() != Some(&Tok::RBracket) {
                    loop {
                        let name = self.label_name()?;
                        targets.push(self.builder.label(&name));
                        if self.peek() == Some(&Tok::Comma) {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                }
                self.expect(&Tok::RBracket)?;
                let shape = self.shape_body()?;
                Ok(ShapeExpr::ShapeWithExtends(ShapeExtends {
                    extends: targets,
                    shape,
                }))
            }
            Some(Tok::LBrace) => Ok(ShapeExpr::Shape(self.shape_body()?)),
            Some(Tok::Ident(kw)) if kw == "CLOSED" || kw == "EXTRA" => {
                Ok(ShapeExpr::Shape(self.shape_body()?))
            }
            Some(Tok::Dot) => Ok(ShapeExpr::NodeConstraint(self.node_constraint()?)),
            Some(Tok::Ident(kw))
                if kw == "IRI" || kw == "BNODE" || kw == "LITERAL" || kw == "VALUE" || kw == "IN" =>
            {
                Ok(ShapeExpr::NodeConstraint(self.node_constraint()?))
            }
            Some(t) => {
                let msg = format!("expected a shape expression, found {}", t.describe());
                Err(self.error(msg))
            }
            None => Err(self.error("expected a shape expression")),
        }
    }

    /// `[CLOSED] [EXTRA p ...] { TE }`
    fn shape_body(&mut self) -> Result<Shape, TextError> {
        let closed = self.eat_ident("CLOSED");
        let mut extra = BTreeSet::new();
        if self.eat_ident("EXTRA") {
            while self.peek() != Some(&Tok::LBrace) {
                match self.predicate()? {
                    Some(p) => {
                        extra.insert(p);
                    }
                    None => break,
                }
            }
            if extra.is_empty() {
                return Err(self.error("EXTRA requires at least one property"));
            }
        }
        self.expect(&Tok::LBrace)?;
        let expr = if self.peek() == Some(&Tok::RBrace) {
            TripleExpr::Epsilon
        } else {
            self.triple_expr()?
        };
        self.expect(&Tok::RBrace)?;
        Ok(Shape { closed, extra, expr })
    }

    /// A predicate token, or `None` when the lookahead cannot start one.
    fn predicate(&mut self) -> Result<Option<String>, TextError> {
        match self.peek().cloned() {
            Some(Tok::Iri(iri)) => {
                self.pos += 1;
                Ok(Some(iri))
            }
            Some(Tok::Ident(name)) if !is_keyword(&name) => {
                self.pos += 1;
                Ok(Some(format!("{PREDICATE_SUGAR_PREFIX}{name}")))
            }
            _ => Ok(None),
        }
    }

    // TE with precedence ';' > '|', both right-associative, postfix tightest.
    fn triple_expr(&mut self) -> Result<TripleExpr, TextError> {
        let lhs = self.te_seq()?;
        if self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            let rhs = self.triple_expr()?;
            Ok(TripleExpr::one_of(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn te_seq(&mut self) -> Result<TripleExpr, TextError> {
        let lhs = self.te_postfix()?;
        if self.peek() == Some(&Tok::Semi) {
            self.pos += 1;
            let rhs = self.te_seq()?;
            Ok(TripleExpr::each_of(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn te_postfix(&mut self) -> Result<TripleExpr, TextError> {
        let mut expr = self.te_atom()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    expr = TripleExpr::star(expr);
                }
                Some(Tok::Question) => {
                    self.pos += 1;
                    expr = TripleExpr::one_of(expr, TripleExpr::Epsilon);
                }
                Some(Tok::Plus) => {
                    self.pos += 1;
                    expr = TripleExpr::each_of(expr.clone(), TripleExpr::star(expr));
                }
                _ => break,
            }
        }
        Ok(expr)
    }

    fn te_atom(&mut self) -> Result<TripleExpr, TextError> {
        if self.eat_ident("EPSILON") {
            return Ok(TripleExpr::Epsilon);
        }
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            let inner = self.triple_expr()?;
            self.expect(&Tok::RParen)?;
            return Ok(inner);
        }
        match self.predicate()? {
            Some(p) => {
                self.expect(&Tok::At)?;
                let name = self.label_name()?;
                Ok(TripleExpr::tc(p, self.builder.label(&name)))
            }
            None => match self.peek() {
                Some(t) => {
                    let msg = format!(
                        "expected EPSILON, a triple constraint or '(', found {}",
                        t.describe()
                    );
                    Err(self.error(msg))
                }
                None => Err(self.error("unexpected end of triple expression")),
            },
        }
    }

    // NC := base facet* with base '.' | IRI | BNODE | LITERAL [dt] | VALUE lit | IN ( lit* )
    fn node_constraint(&mut self) -> Result<NodeConstraint, TextError> {
        let mut facets = Vec::new();
        match self.peek().cloned() {
            Some(Tok::Dot) => {
                self.pos += 1;
                facets.push(Facet::AnyNode);
            }
            Some(Tok::Ident(kw)) if kw == "IRI" => {
                self.pos += 1;
                facets.push(Facet::KindIs(NodeKind::Iri));
            }
            Some(Tok::Ident(kw)) if kw == "BNODE" => {
                self.pos += 1;
                facets.push(Facet::KindIs(NodeKind::Blank));
            }
            Some(Tok::Ident(kw)) if kw == "LITERAL" => {
                self.pos += 1;
                facets.push(Facet::KindIs(NodeKind::Literal));
                match self.peek().cloned() {
                    Some(Tok::Ident(dt)) if datatype_keyword(&dt).is_some() => {
                        self.pos += 1;
                        facets.push(Facet::DatatypeIs(datatype_keyword(&dt).unwrap().to_string()));
                    }
                    Some(Tok::Iri(iri)) => {
                        self.pos += 1;
                        facets.push(Facet::DatatypeIs(iri));
                    }
                    _ => {}
                }
            }
            Some(Tok::Ident(kw)) if kw == "VALUE" => {
                self.pos += 1;
                let v = self.literal_value()?;
                facets.push(Facet::ValueEq(v));
            }
            Some(Tok::Ident(kw)) if kw == "IN" => {
                self.pos += 1;
                self.expect(&Tok::LParen)?;
                let mut set = BTreeSet::new();
                while self.peek() != Some(&Tok::RParen) {
                    set.insert(self.literal_value()?);
                }
                self.expect(&Tok::RParen)?;
                facets.push(Facet::ValueIn(set));
            }
            Some(t) => {
                let msg = format!("expected a node constraint, found {}", t.describe());
                return Err(self.error(msg));
            }
            None => return Err(self.error("expected a node constraint")),
        }
        loop {
            let op = match self.peek() {
                Some(Tok::Ident(kw)) if kw == "MININC" => CmpOp::Ge,
                Some(Tok::Ident(kw)) if kw == "MINEXC" => CmpOp::Gt,
                Some(Tok::Ident(kw)) if kw == "MAXINC" => CmpOp::Le,
                Some(Tok::Ident(kw)) if kw == "MAXEXC" => CmpOp::Lt,
                _ => break,
            };
            self.pos += 1;
            match self.peek().cloned() {
                Some(Tok::Num { lexical }) => {
                    self.pos += 1;
                    facets.push(Facet::NumRange(op, lexical));
                }
                Some(t) => {
                    let msg = format!("expected a numeric bound, found {}", t.describe());
                    return Err(self.error(msg));
                }
                None => return Err(self.error("expected a numeric bound")),
            }
        }
        Ok(NodeConstraint::new(facets))
    }

    fn literal_value(&mut self) -> Result<LiteralValue, TextError> {
        match self.peek().cloned() {
            Some(Tok::Str(lexical)) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::CaretCaret) {
                    self.pos += 1;
                    match self.peek().cloned() {
                        Some(Tok::Iri(dt)) => {
                            self.pos += 1;
                            Ok(LiteralValue::new(lexical, dt))
                        }
                        _ => Err(self.error("expected a datatype IRI after '^^'")),
                    }
                } else {
                    Ok(LiteralValue::new(lexical, XSD_STRING))
                }
            }
            Some(Tok::Num { lexical }) => {
                self.pos += 1;
                let dt = if lexical.contains('.') { XSD_DECIMAL } else { XSD_INTEGER };
                Ok(LiteralValue::new(lexical, dt))
            }
            Some(t) => Err(self.error(format!("expected a literal, found {}", t.describe()))),
            None => Err(self.error("expected a literal")),
        }
    }
}

fn datatype_keyword(kw: &str) -> Option<&'static str> {
    match kw {
        "string" => Some(XSD_STRING),
        "integer" => Some(XSD_INTEGER),
        "decimal" => Some(XSD_DECIMAL),
        "boolean" => Some(XSD_BOOLEAN),
        _ => None,
    }
}

/// Parses a schema file. The returned schema passes [`check_schema_form`];
/// its extendable labels are those defined with `EXTENDS` and its abstract
/// labels those marked `abstract`.
pub fn parse_schema(text: &str) -> Result<Schema, TextError> {
    let mut builder = Schema::builder();
    let mut defined_any = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks = lex_line(line, line_no)?;
        if toks.is_empty() {
            continue;
        }
        let mut p = Parser {
            toks: &toks,
            pos: 0,
            line: line_no,
            builder: &mut builder,
        };
        let is_abstract = p.eat_ident("abstract");
        let name = p.label_name()?;
        p.builder.label(&name);
        p.expect(&Tok::Arrow)?;
        let def = p.shape_expr()?;
        if let Some(t) = p.peek() {
            let msg = format!("unexpected {} after definition", t.describe());
            return Err(p.error(msg));
        }
        match builder.define_inferred(&name, is_abstract, def) {
            Ok(_) => defined_any = true,
            Err(SchemaError::DuplicateLabel(name)) => {
                return Err(TextError::DuplicateLabel { line: line_no, name })
            }
            Err(e) => unreachable!("unexpected builder error: {e}"),
        }
    }
    if !defined_any {
        return Err(TextError::EmptySchema);
    }
    let schema = builder.finish();
    let diags = check_schema_form(&schema);
    if !diags.is_empty() {
        return Err(TextError::IllFormed(diags));
    }
    Ok(schema)
}

// ---------------------------------------------------------------------------
// Serializer
// ---------------------------------------------------------------------------

/// Renders a schema back to the textual syntax, one definition per line in
/// declaration order.
pub fn serialize_schema(schema: &Schema) -> String {
    let mut out = String::new();
    for id in schema.labels() {
        if schema.is_abstract(id) {
            out.push_str("abstract ");
        }
        out.push_str(schema.name(id));
        out.push_str(" -> ");
        let def = schema.definition(id).expect("declared label");
        render_se(schema, def, 0, &mut out);
        out.push('\n');
    }
    out
}

fn se_prec(se: &ShapeExpr) -> u8 {
    match se {
        ShapeExpr::Or(..) => 1,
        ShapeExpr::And(..) => 2,
        ShapeExpr::Not(..) => 3,
        _ => 4,
    }
}

fn render_se(schema: &Schema, se: &ShapeExpr, min_prec: u8, out: &mut String) {
    let prec = se_prec(se);
    let parens = prec < min_prec;
    if parens {
        out.push('(');
    }
    match se {
        ShapeExpr::NodeConstraint(nc) => render_nc(nc, out),
        ShapeExpr::Ref(id) => {
            let _ = write!(out, "@{}", schema.name(*id));
        }
        ShapeExpr::And(a, b) => {
            render_se(schema, a, 3, out);
            out.push_str(" AND ");
            render_se(schema, b, 2, out);
        }
        ShapeExpr::Or(a, b) => {
            render_se(schema, a, 2, out);
            out.push_str(" OR ");
            render_se(schema, b, 1, out);
        }
        ShapeExpr::Not(inner) => {
            out.push_str("NOT ");
            render_se(schema, inner, 3, out);
        }
        ShapeExpr::Shape(shape) => render_shape(schema, shape, out),
        ShapeExpr::ShapeWithExtends(ext) => {
            out.push_str("EXTENDS [");
            for (i, target) in ext.extends.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(schema.name(*target));
            }
            out.push_str("] ");
            render_shape(schema, &ext.shape, out);
        }
    }
    if parens {
        out.push(')');
    }
}

fn render_shape(schema: &Schema, shape: &Shape, out: &mut String) {
    if shape.closed {
        out.push_str("CLOSED ");
    }
    if !shape.extra.is_empty() {
        out.push_str("EXTRA");
        for p in &shape.extra {
            out.push(' ');
            render_predicate(p, out);
        }
        out.push(' ');
    }
    out.push_str("{ ");
    if shape.expr == TripleExpr::Epsilon {
        out.push_str("EPSILON ");
    } else {
        render_te(schema, &shape.expr, 0, out);
        out.push(' ');
    }
    out.push('}');
}

fn te_prec(te: &TripleExpr) -> u8 {
    match te {
        TripleExpr::OneOf(..) => 1,
        TripleExpr::EachOf(..) => 2,
        TripleExpr::Star(..) => 3,
        _ => 4,
    }
}

fn render_te(schema: &Schema, te: &TripleExpr, min_prec: u8, out: &mut String) {
    let prec = te_prec(te);
    let parens = prec < min_prec;
    if parens {
        out.push('(');
    }
    match te {
        TripleExpr::Epsilon => out.push_str("EPSILON"),
        TripleExpr::TripleConstraint { predicate, reference } => {
            render_predicate(predicate, out);
            let _ = write!(out, " @{}", schema.name(*reference));
        }
        TripleExpr::OneOf(a, b) => {
            render_te(schema, a, 2, out);
            out.push_str(" | ");
            render_te(schema, b, 1, out);
        }
        TripleExpr::EachOf(a, b) => {
            render_te(schema, a, 3, out);
            out.push_str(" ; ");
            render_te(schema, b, 2, out);
        }
        TripleExpr::Star(inner) => {
            render_te(schema, inner, 4, out);
            out.push_str(" *");
        }
    }
    if parens {
        out.push(')');
    }
}

fn render_predicate(p: &str, out: &mut String) {
    match p.strip_prefix(PREDICATE_SUGAR_PREFIX) {
        Some(rest)
            if !rest.is_empty()
                && !is_keyword(rest)
                && rest.chars().all(|c| c.is_alphanumeric() || c == '_')
                && rest.chars().next().is_some_and(char::is_alphabetic) =>
        {
            out.push_str(rest);
        }
        _ => {
            let _ = write!(out, "<{p}>");
        }
    }
}

fn render_literal(v: &LiteralValue, out: &mut String) {
    if v.datatype == XSD_INTEGER || v.datatype == XSD_DECIMAL {
        let bare = v.lexical.parse::<f64>().is_ok()
            && v.lexical.chars().all(|c| c.is_ascii_digit() || c == '.' || c == '-' || c == '+')
            && v.lexical.contains('.') == (v.datatype == XSD_DECIMAL);
        if bare {
            out.push_str(&v.lexical);
            return;
        }
    }
    let _ = write!(out, "\"{}\"", escape(&v.lexical));
    if v.datatype != XSD_STRING {
        let _ = write!(out, "^^<{}>", v.datatype);
    }
}

fn escape(s: &str) -> String {
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

fn render_nc(nc: &NodeConstraint, out: &mut String) {
    let mut facets = nc.facets().iter().peekable();
    let mut first = true;
    while let Some(f) = facets.next() {
        if !first {
            out.push(' ');
        }
        first = false;
        match f {
            Facet::AnyNode => out.push('.'),
            Facet::KindIs(NodeKind::Iri) => out.push_str("IRI"),
            Facet::KindIs(NodeKind::Blank) => out.push_str("BNODE"),
            Facet::KindIs(NodeKind::Literal) => {
                out.push_str("LITERAL");
                // merge a following datatype facet into the LITERAL form
                if let Some(Facet::DatatypeIs(dt)) = facets.peek() {
                    match keyword_for_datatype(dt) {
                        Some(kw) => {
                            let _ = write!(out, " {kw}");
                        }
                        None => {
                            let _ = write!(out, " <{dt}>");
                        }
                    }
                    facets.next();
                }
            }
            Facet::DatatypeIs(dt) => {
                // datatype facet without a leading LITERAL keyword
                match keyword_for_datatype(dt) {
                    Some(kw) => {
                        let _ = write!(out, "LITERAL {kw}");
                    }
                    None => {
                        let _ = write!(out, "LITERAL <{dt}>");
                    }
                }
            }
            Facet::ValueEq(v) => {
                out.push_str("VALUE ");
                render_literal(v, out);
            }
            Facet::ValueIn(set) => {
                out.push_str("IN (");
                for v in set {
                    out.push(' ');
                    render_literal(v, out);
                }
                out.push_str(" )");
            }
            Facet::NumRange(op, bound) => {
                let _ = write!(out, "{op} {bound}");
            }
        }
    }
}

fn keyword_for_datatype(dt: &str) -> Option<&'static str> {
    match dt {
        XSD_STRING => Some("string"),
        XSD_INTEGER => Some("integer"),
        XSD_DECIMAL => Some("decimal"),
        XSD_BOOLEAN => Some("boolean"),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Shape maps
// ---------------------------------------------------------------------------

/// Parses a shape map: one `node @ Label` or `node @ ALL` entry per line.
/// Nodes use the graph token syntax, plus bare identifiers as IRI shorthand.
pub fn parse_shape_map(text: &str, schema: &Schema) -> Result<Vec<ShapeMapRequest>, TextError> {
    let mut out = Vec::new();
    let mut scratch = Schema::builder();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks = lex_line(line, line_no)?;
        if toks.is_empty() {
            continue;
        }
        let mut p = Parser {
            toks: &toks,
            pos: 0,
            line: line_no,
            builder: &mut scratch,
        };
        let node = match p.next().cloned() {
            Some(Tok::Iri(iri)) => RdfNode::iri(iri),
            Some(Tok::Blank(label)) => RdfNode::blank(label),
            Some(Tok::Ident(name)) if !is_keyword(&name) => RdfNode::iri(name),
            Some(Tok::Num { lexical }) => {
                let dt = if lexical.contains('.') { XSD_DECIMAL } else { XSD_INTEGER };
                RdfNode::literal(lexical, dt)
            }
            Some(Tok::Str(lexical)) => {
                if p.peek() == Some(&Tok::CaretCaret) {
                    p.pos += 1;
                    match p.next().cloned() {
                        Some(Tok::Iri(dt)) => RdfNode::literal(lexical, dt),
                        _ => return Err(p.error("expected a datatype IRI after '^^'")),
                    }
                } else {
                    RdfNode::string(lexical)
                }
            }
            Some(t) => return Err(p.error(format!("expected a node, found {}", t.describe()))),
            None => return Err(p.error("expected a node")),
        };
        p.expect(&Tok::At)?;
        let label = match p.next().cloned() {
            Some(Tok::Ident(name)) if name == "ALL" => RequestLabel::All,
            Some(Tok::Ident(name)) if !is_keyword(&name) => match schema.label_id(&name) {
                Some(id) if schema.is_declared(id) => RequestLabel::Label(id),
                _ => return Err(TextError::UnknownLabel { line: line_no, name }),
            },
            Some(t) => {
                let msg = format!("expected a label or ALL, found {}", t.describe());
                return Err(p.error(msg));
            }
            None => return Err(p.error("expected a label or ALL")),
        };
        if let Some(t) = p.peek() {
            let msg = format!("unexpected {} after request", t.describe());
            return Err(p.error(msg));
        }
        out.push(ShapeMapRequest { node, label });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::LabelKind;

    fn fig1_text() -> &'static str {
        include_str!("../fixtures/fig1.shexi")
    }

    #[test]
    fn parses_example_schema() {
        let s = parse_schema(fig1_text()).unwrap();
        assert_eq!(s.simple_labels().count(), 6);
        assert_eq!(s.extendable_labels().count(), 7);
        let abstracts: Vec<&str> = s.abstract_labels().map(|id| s.name(id)).collect();
        assert_eq!(abstracts, vec!["Figure"]);
        assert_eq!(s.labels().count(), 13);

        let coord = s.label_id("Coord").unwrap();
        assert_eq!(s.kind(coord), Some(LabelKind::Simple));
        match s.definition(coord).unwrap() {
            ShapeExpr::Shape(shape) => {
                assert_eq!(
                    crate::schema::props_of_expr(&shape.expr),
                    ["x", "y"].into_iter().collect()
                );
            }
            other => panic!("unexpected Coord definition: {other:?}"),
        }

        let circle = s.label_id("Circle").unwrap();
        assert_eq!(s.restr(circle).unwrap(), None, "Circle has no restriction");
        let radius = s.label_id("Radius").unwrap();
        assert_eq!(s.ext_te(radius).unwrap(), &TripleExpr::Epsilon);
        assert!(s.restr(radius).unwrap().is_some());

        let attribute = s.label_id("Attribute").unwrap();
        assert_eq!(
            crate::schema::props_of_expr(s.ext_te(attribute).unwrap()),
            ["name", "value"].into_iter().collect()
        );
    }

    #[test]
    fn empty_schema_is_an_error() {
        assert_eq!(parse_schema(""), Err(TextError::EmptySchema));
        assert_eq!(parse_schema("# just a comment\n"), Err(TextError::EmptySchema));
    }

    #[test]
    fn nested_extends_parses_with_leading_hierarchy_only() {
        let s = parse_schema(include_str!("../fixtures/ex2_nested_extends.shexi")).unwrap();
        let x = s.label_id("x").unwrap();
        let targets: Vec<&str> = s
            .extends_targets(x)
            .unwrap()
            .iter()
            .map(|id| s.name(*id))
            .collect();
        assert_eq!(targets, vec!["x1", "x2"]);
        let restr = s.restr(x).unwrap().expect("nested extends kept as restriction");
        assert!(matches!(restr, ShapeExpr::ShapeWithExtends(_)));
    }

    #[test]
    fn precedence_not_and_or() {
        let s = parse_schema("a -> NOT . AND . OR .\n").unwrap();
        let def = s.definition(s.label_id("a").unwrap()).unwrap();
        // parses as ((NOT .) AND .) OR .
        match def {
            ShapeExpr::Or(lhs, _) => match lhs.as_ref() {
                ShapeExpr::And(l, _) => assert!(matches!(l.as_ref(), ShapeExpr::Not(_))),
                other => panic!("expected AND under OR, got {other:?}"),
            },
            other => panic!("expected OR at top, got {other:?}"),
        }
    }

    #[test]
    fn semicolon_binds_tighter_than_pipe() {
        let s = parse_schema("a -> { p @a ; q @a | r @a }\n").unwrap();
        let def = s.definition(s.label_id("a").unwrap()).unwrap();
        match def {
            ShapeExpr::Shape(shape) => {
                assert!(matches!(shape.expr, TripleExpr::OneOf(..)));
            }
            other => panic!("expected shape, got {other:?}"),
        }
    }

    #[test]
    fn question_and_plus_desugar() {
        let s = parse_schema("a -> { p @a ? ; q @a + }\n").unwrap();
        let def = s.definition(s.label_id("a").unwrap()).unwrap();
        let ShapeExpr::Shape(shape) = def else { panic!() };
        let TripleExpr::EachOf(opt, plus) = &shape.expr else { panic!() };
        assert!(
            matches!(opt.as_ref(), TripleExpr::OneOf(_, e) if **e == TripleExpr::Epsilon),
            "e? becomes e | EPSILON"
        );
        assert!(
            matches!(plus.as_ref(), TripleExpr::EachOf(_, s) if matches!(**s, TripleExpr::Star(_))),
            "e+ becomes e ; e*"
        );
    }

    #[test]
    fn duplicate_definition_reports_line() {
        assert_eq!(
            parse_schema("a -> .\na -> .\n"),
            Err(TextError::DuplicateLabel {
                line: 2,
                name: "a".to_string()
            })
        );
    }

    #[test]
    fn dangling_reference_is_ill_formed() {
        let err = parse_schema("a -> { p @ghost }\n").unwrap_err();
        assert!(matches!(err, TextError::IllFormed(diags) if diags.len() == 1));
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_schema("a -> { p @ }\n").unwrap_err();
        match err {
            TextError::Syntax { line, col, .. } => {
                assert_eq!(line, 1);
                assert!(col > 1);
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_is_stable() {
        for text in [
            fig1_text(),
            include_str!("../fixtures/ex3.shexi"),
            include_str!("../fixtures/ex41_extends.shexi"),
            include_str!("../fixtures/ex4_s1.shexi"),
            include_str!("../fixtures/ex4_s2.shexi"),
            include_str!("../fixtures/ex4_s3.shexi"),
            include_str!("../fixtures/ex2_nested_extends.shexi"),
            include_str!("../fixtures/sec6_figure.shexi"),
            include_str!("../fixtures/sec6_product.shexi"),
            include_str!("../fixtures/sec6_client.shexi"),
            include_str!("../fixtures/two_strata.shexi"),
            include_str!("../fixtures/cyclic_hierarchy.shexi"),
        ] {
            let once = parse_schema(text).unwrap();
            let rendered = serialize_schema(&once);
            let twice = parse_schema(&rendered).unwrap_or_else(|e| {
                panic!("serialized schema failed to reparse: {e}\n{rendered}")
            });
            assert_eq!(once, twice, "unstable round trip for:\n{rendered}");
        }
    }

    #[test]
    fn predicate_sugar_expands() {
        let s = parse_schema("a -> { p @a }\n").unwrap();
        let def = s.definition(s.label_id("a").unwrap()).unwrap();
        let ShapeExpr::Shape(shape) = def else { panic!() };
        assert_eq!(
            crate::schema::props_of_expr(&shape.expr),
            ["urn:p:p"].into_iter().collect()
        );
        // and the serializer folds it back
        assert!(serialize_schema(&s).contains("{ p @a }"));
    }

    #[test]
    fn shape_map_basics() {
        let s = parse_schema(fig1_text()).unwrap();
        let reqs = parse_shape_map("<f1> @ ColouredCircle\n", &s).unwrap();
        assert_eq!(reqs.len(), 1);
        assert_eq!(reqs[0].node, RdfNode::iri("f1"));
        assert_eq!(
            reqs[0].label,
            RequestLabel::Label(s.label_id("ColouredCircle").unwrap())
        );

        assert!(parse_shape_map("", &s).unwrap().is_empty());

        let all = parse_shape_map("<a2> @ ALL\n", &s).unwrap();
        assert_eq!(all[0].label, RequestLabel::All);

        // bare identifiers are IRI shorthand; numbers are literals
        let bare = parse_shape_map("f1 @ Figure\n10.1 @ T_float\n", &s).unwrap();
        assert_eq!(bare[0].node, RdfNode::iri("f1"));
        assert_eq!(bare[1].node, RdfNode::decimal("10.1"));
    }

    #[test]
    fn shape_map_unknown_label() {
        let s = parse_schema(fig1_text()).unwrap();
        let err = parse_shape_map("<f1> @ Nope\n", &s).unwrap_err();
        assert_eq!(
            err,
            TextError::UnknownLabel {
                line: 1,
                name: "Nope".to_string()
            }
        );
    }

    #[test]
    fn shape_map_bad_node() {
        let s = parse_schema(fig1_text()).unwrap();
        assert!(parse_shape_map("@ Figure\n", &s).is_err());
    }
}
