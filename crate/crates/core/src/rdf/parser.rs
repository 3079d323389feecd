//! Recursive-descent parser for the Turtle subset used by intent documents.
//!
//! Supported: `@prefix`/`PREFIX` directives, prefixed names, absolute IRIs,
//! `a`, single-line string literals with language tags or `^^` datatypes,
//! integer/decimal/boolean shorthand, `;` and `,` lists, anonymous blank
//! nodes `[ ... ]`, labelled blank nodes `_:x`, and collections `( ... )`.
//! Everything else is rejected with [`RdfError::UnsupportedFeature`].

use std::collections::HashMap;

use super::graph::Graph;
use super::term::{
    BlankNode, Iri, Literal, Term, Triple, RDF_FIRST, RDF_NIL, RDF_REST, RDF_TYPE, XSD_DECIMAL,
    XSD_INTEGER,
};
use super::RdfError;

/// Parses a UTF-8 Turtle document.
pub fn parse_turtle(input: &[u8]) -> Result<Graph, RdfError> {
    let text = std::str::from_utf8(input).map_err(|e| RdfError::Utf8(e.valid_up_to()))?;
    Parser::new(text).parse_document()
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    graph: Graph,
    namespaces: HashMap<String, String>,
    labels: HashMap<String, BlankNode>,
    next_blank: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src,
            pos: 0,
            graph: Graph::new(),
            namespaces: HashMap::new(),
            labels: HashMap::new(),
            next_blank: 0,
        }
    }

    fn line_col(&self, at: usize) -> (usize, usize) {
        let before = &self.src[..at.min(self.src.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rfind('\n').map_or(before.chars().count(), |i| before[i + 1..].chars().count()) + 1;
        (line, column)
    }

    fn syntax_at(&self, at: usize, message: impl Into<String>) -> RdfError {
        let (line, column) = self.line_col(at);
        RdfError::Syntax { line, column, message: message.into() }
    }

    fn syntax(&self, message: impl Into<String>) -> RdfError {
        self.syntax_at(self.pos, message)
    }

    fn unsupported_at(&self, at: usize, feature: impl Into<String>) -> RdfError {
        let (line, column) = self.line_col(at);
        RdfError::UnsupportedFeature { line, column, feature: feature.into() }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
    }

    fn expect(&mut self, c: char) -> Result<(), RdfError> {
        self.skip_ws();
        match self.peek() {
            Some(found) if found == c => {
                self.bump();
                Ok(())
            }
            Some(found) => Err(self.syntax(format!("expected '{c}', found '{found}'"))),
            None => Err(self.syntax(format!("expected '{c}', found end of input"))),
        }
    }

    fn fresh_blank(&mut self) -> BlankNode {
        let b = BlankNode::new(format!("b{}", self.next_blank));
        self.next_blank += 1;
        b
    }

    fn emit(&mut self, s: Term, p: Iri, o: Term) -> Result<(), RdfError> {
        let t = Triple::new(s, p, o).map_err(|e| self.syntax(e.to_string()))?;
        self.graph.insert(t);
        Ok(())
    }

    fn parse_document(mut self) -> Result<Graph, RdfError> {
        loop {
            self.skip_ws();
            if self.peek().is_none() {
                return Ok(self.graph);
            }
            self.statement()?;
        }
    }

    fn keyword_ahead(&self, kw: &str) -> bool {
        let rest = self.rest();
        rest.len() >= kw.len()
            && rest[..kw.len()].eq_ignore_ascii_case(kw)
            && rest[kw.len()..].chars().next().is_none_or(|c| c.is_whitespace() || c == '<')
    }

    fn statement(&mut self) -> Result<(), RdfError> {
        let start = self.pos;
        if self.rest().starts_with("@prefix") {
            self.pos += "@prefix".len();
            self.prefix_body()?;
            return self.expect('.');
        }
        if self.rest().starts_with("@base") || self.keyword_ahead("BASE") {
            return Err(self.unsupported_at(start, "base IRI directives"));
        }
        if self.rest().starts_with('@') {
            return Err(self.syntax("unknown directive"));
        }
        if self.keyword_ahead("PREFIX") {
            self.pos += "PREFIX".len();
            return self.prefix_body();
        }
        self.triples()?;
        self.expect('.')
    }

    fn prefix_body(&mut self) -> Result<(), RdfError> {
        self.skip_ws();
        let at = self.pos;
        let prefix = self.pn_prefix();
        if self.peek() != Some(':') {
            return Err(self.syntax_at(at, "expected prefix name ending in ':'"));
        }
        self.bump();
        self.skip_ws();
        if self.peek() != Some('<') {
            return Err(self.syntax("expected namespace IRI"));
        }
        let iri = self.iri_ref()?;
        self.namespaces.insert(prefix.clone(), iri.as_str().to_string());
        self.graph.add_prefix(prefix, iri);
        Ok(())
    }

    fn pn_prefix(&mut self) -> String {
        let start = self.pos;
        if self.peek().is_some_and(|c| c.is_alphabetic()) {
            while let Some(c) = self.peek() {
                if c.is_alphanumeric() || c == '_' || c == '-' || (c == '.' && self.peek_at(1).is_some_and(is_name_char)) {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.src[start..self.pos].to_string()
    }

    fn triples(&mut self) -> Result<(), RdfError> {
        self.skip_ws();
        let subject = match self.peek() {
            Some('[') => {
                let node = self.blank_property_list()?;
                self.skip_ws();
                if self.peek() == Some('.') {
                    return Ok(());
                }
                node
            }
            Some('(') => self.collection()?,
            Some('"') | Some('\'') => return Err(self.syntax("literal in subject position")),
            _ => self.iri_or_blank()?,
        };
        self.predicate_object_list(&subject)
    }

    fn predicate_object_list(&mut self, subject: &Term) -> Result<(), RdfError> {
        loop {
            let predicate = self.verb()?;
            self.object_list(subject, &predicate)?;
            self.skip_ws();
            if self.peek() != Some(';') {
                return Ok(());
            }
            while self.peek() == Some(';') {
                self.bump();
                self.skip_ws();
            }
            if matches!(self.peek(), Some('.') | Some(']') | None) {
                return Ok(());
            }
        }
    }

    fn object_list(&mut self, subject: &Term, predicate: &Iri) -> Result<(), RdfError> {
        loop {
            let object = self.object()?;
            self.emit(subject.clone(), predicate.clone(), object)?;
            self.skip_ws();
            if self.peek() == Some(',') {
                self.bump();
            } else {
                return Ok(());
            }
        }
    }

    fn verb(&mut self) -> Result<Iri, RdfError> {
        self.skip_ws();
        if self.peek() == Some('a') && !self.peek_at(1).is_some_and(|c| is_name_char(c) || c == ':') {
            self.bump();
            return Ok(Iri::new(RDF_TYPE).expect("static IRI"));
        }
        match self.peek() {
            Some('<') => self.iri_ref(),
            Some(c) if c.is_alphabetic() || c == ':' => self.prefixed_name(),
            Some(c) => Err(self.syntax(format!("expected predicate, found '{c}'"))),
            None => Err(self.syntax("expected predicate, found end of input")),
        }
    }

    fn object(&mut self) -> Result<Term, RdfError> {
        self.skip_ws();
        match self.peek() {
            Some('[') => self.blank_property_list(),
            Some('(') => self.collection(),
            Some('"') | Some('\'') => self.literal(),
            Some('.') if !self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) => {
                Err(self.syntax("expected object, found '.'"))
            }
            Some(c) if c.is_ascii_digit() || c == '+' || c == '-' || c == '.' => self.number(),
            Some(_) if self.bare_word_is("true") => {
                self.pos += 4;
                Ok(Literal::boolean(true).into())
            }
            Some(_) if self.bare_word_is("false") => {
                self.pos += 5;
                Ok(Literal::boolean(false).into())
            }
            Some(_) => self.iri_or_blank(),
            None => Err(self.syntax("expected object, found end of input")),
        }
    }

    fn bare_word_is(&self, word: &str) -> bool {
        self.rest().starts_with(word)
            && !self.rest()[word.len()..].chars().next().is_some_and(|c| is_name_char(c) || c == ':')
    }

    fn iri_or_blank(&mut self) -> Result<Term, RdfError> {
        self.skip_ws();
        match self.peek() {
            Some('<') => Ok(Term::Iri(self.iri_ref()?)),
            Some('_') if self.peek_at(1) == Some(':') => {
                self.pos += 2;
                let start = self.pos;
                while self.peek().is_some_and(|c| is_name_char(c) || (c == '.' && self.peek_at(1).is_some_and(is_name_char))) {
                    self.bump();
                }
                let label = &self.src[start..self.pos];
                if label.is_empty() {
                    return Err(self.syntax("empty blank node label"));
                }
                if let Some(b) = self.labels.get(label) {
                    return Ok(Term::Blank(b.clone()));
                }
                let b = self.fresh_blank();
                self.labels.insert(label.to_string(), b.clone());
                Ok(Term::Blank(b))
            }
            Some(c) if c.is_alphabetic() || c == ':' => Ok(Term::Iri(self.prefixed_name()?)),
            Some(c) => Err(self.syntax(format!("unexpected character '{c}'"))),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    fn blank_property_list(&mut self) -> Result<Term, RdfError> {
        self.expect('[')?;
        let node = Term::Blank(self.fresh_blank());
        self.skip_ws();
        if self.peek() == Some(']') {
            self.bump();
            return Ok(node);
        }
        self.predicate_object_list(&node)?;
        self.expect(']')?;
        Ok(node)
    }

    fn collection(&mut self) -> Result<Term, RdfError> {
        self.expect('(')?;
        let first = Iri::new(RDF_FIRST).expect("static IRI");
        let rest = Iri::new(RDF_REST).expect("static IRI");
        let nil = Term::Iri(Iri::new(RDF_NIL).expect("static IRI"));
        let mut head: Option<Term> = None;
        let mut tail: Option<Term> = None;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(')') => {
                    self.bump();
                    break;
                }
                None => return Err(self.syntax("unterminated collection")),
                _ => {}
            }
            let node = Term::Blank(self.fresh_blank());
            let item = self.object()?;
            if let Some(prev) = tail.take() {
                self.emit(prev, rest.clone(), node.clone())?;
            }
            self.emit(node.clone(), first.clone(), item)?;
            if head.is_none() {
                head = Some(node.clone());
            }
            tail = Some(node);
        }
        match (head, tail) {
            (Some(h), Some(t)) => {
                self.emit(t, rest, nil)?;
                Ok(h)
            }
            _ => Ok(nil),
        }
    }

    fn iri_ref(&mut self) -> Result<Iri, RdfError> {
        let start = self.pos;
        self.expect('<')?;
        let mut value = String::new();
        loop {
            match self.bump() {
                Some('>') => break,
                Some('\\') => value.push(self.unicode_escape()?),
                Some(c) if c.is_whitespace() || c == '<' || c == '"' => {
                    return Err(self.syntax(format!("invalid character {c:?} in IRI")));
                }
                Some(c) => value.push(c),
                None => return Err(self.syntax_at(start, "unterminated IRI")),
            }
        }
        if !Iri::is_absolute(&value) {
            return Err(self.unsupported_at(start, format!("relative IRI <{value}>")));
        }
        Iri::new(value).map_err(|e| self.syntax_at(start, e.to_string()))
    }

    fn unicode_escape(&mut self) -> Result<char, RdfError> {
        let width = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err(self.syntax("invalid escape in IRI")),
        };
        self.hex_char(width)
    }

    fn hex_char(&mut self, width: usize) -> Result<char, RdfError> {
        let start = self.pos;
        for _ in 0..width {
            if !self.bump().is_some_and(|c| c.is_ascii_hexdigit()) {
                return Err(self.syntax_at(start, "invalid unicode escape"));
            }
        }
        u32::from_str_radix(&self.src[start..self.pos], 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| self.syntax_at(start, "invalid unicode code point"))
    }

    fn prefixed_name(&mut self) -> Result<Iri, RdfError> {
        let start = self.pos;
        let prefix = self.pn_prefix();
        if self.peek() != Some(':') {
            return Err(self.syntax_at(start, format!("expected prefixed name, found '{prefix}'")));
        }
        self.bump();
        let mut local = String::new();
        loop {
            match self.peek() {
                Some(c) if is_name_char(c) || c == ':' => {
                    local.push(c);
                    self.bump();
                }
                Some('.') if self.peek_at(1).is_some_and(|c| is_name_char(c) || c == ':') => {
                    local.push('.');
                    self.bump();
                }
                Some('%') => {
                    let at = self.pos;
                    self.bump();
                    let ok = self.peek().is_some_and(|c| c.is_ascii_hexdigit())
                        && self.peek_at(1).is_some_and(|c| c.is_ascii_hexdigit());
                    if !ok {
                        return Err(self.syntax_at(at, "invalid percent escape"));
                    }
                    local.push('%');
                    local.push(self.bump().unwrap_or('0'));
                    local.push(self.bump().unwrap_or('0'));
                }
                Some('\\') => return Err(self.unsupported_at(self.pos, "escaped characters in local names")),
                _ => break,
            }
        }
        let ns = self.namespaces.get(&prefix).ok_or_else(|| {
            let (line, column) = self.line_col(start);
            RdfError::UnknownPrefix { prefix: prefix.clone(), line, column }
        })?;
        Iri::new(format!("{ns}{local}")).map_err(|e| self.syntax_at(start, e.to_string()))
    }

    fn literal(&mut self) -> Result<Term, RdfError> {
        let start = self.pos;
        let quote = self.bump().unwrap_or('"');
        if self.peek() == Some(quote) && self.peek_at(1) == Some(quote) {
            return Err(self.unsupported_at(start, "multi-line string literals"));
        }
        let mut lexical = String::new();
        loop {
            match self.bump() {
                Some(c) if c == quote => break,
                Some('\\') => {
                    let c = match self.bump() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u') => self.hex_char(4)?,
                        Some('U') => self.hex_char(8)?,
                        _ => return Err(self.syntax("invalid string escape")),
                    };
                    lexical.push(c);
                }
                Some(c @ ('\n' | '\r')) => {
                    return Err(self.syntax_at(self.pos - c.len_utf8(), "line break inside string literal"))
                }
                Some(c) => lexical.push(c),
                None => return Err(self.syntax_at(start, "unterminated string literal")),
            }
        }
        match self.peek() {
            Some('@') => {
                self.bump();
                let lang_start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '-') {
                    self.bump();
                }
                let lang = &self.src[lang_start..self.pos];
                Literal::lang_string(lexical, lang)
                    .map(Term::Literal)
                    .map_err(|e| self.syntax_at(lang_start, e.to_string()))
            }
            Some('^') if self.peek_at(1) == Some('^') => {
                self.pos += 2;
                let dt_at = self.pos;
                let datatype = match self.peek() {
                    Some('<') => self.iri_ref()?,
                    _ => self.prefixed_name()?,
                };
                Literal::typed(lexical, datatype)
                    .map(Term::Literal)
                    .map_err(|e| self.syntax_at(dt_at, e.to_string()))
            }
            _ => Ok(Term::Literal(Literal::string(lexical))),
        }
    }

    fn number(&mut self) -> Result<Term, RdfError> {
        let start = self.pos;
        if matches!(self.peek(), Some('+') | Some('-')) {
            self.bump();
        }
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        let mut decimal = false;
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            decimal = true;
            self.bump();
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some('e') | Some('E')) {
            return Err(self.unsupported_at(start, "double literals with exponents"));
        }
        let lexical = &self.src[start..self.pos];
        let datatype = if decimal { XSD_DECIMAL } else { XSD_INTEGER };
        Literal::typed(lexical, Iri::new(datatype).expect("static IRI"))
            .map(Term::Literal)
            .map_err(|_| self.syntax_at(start, format!("malformed number '{lexical}'")))
    }
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}
