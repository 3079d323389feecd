//! Minimal RDF model with a Turtle-subset codec.

mod graph;
mod iso;
mod parser;
mod serializer;
mod term;

pub use graph::Graph;
pub use iso::isomorphic;
pub use parser::parse_turtle;
pub use serializer::serialize_turtle;
pub use term::{
    BlankNode, Iri, Literal, Term, Triple, RDF_FIRST, RDF_NIL, RDF_NS, RDF_REST, RDF_TYPE,
    XSD_BOOLEAN, XSD_DECIMAL, XSD_INTEGER, XSD_NS, XSD_STRING,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RdfError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unknown prefix '{prefix}:' at line {line}, column {column}")]
    UnknownPrefix { prefix: String, line: usize, column: usize },
    #[error("unsupported Turtle feature at line {line}, column {column}: {feature}")]
    UnsupportedFeature { line: usize, column: usize, feature: String },
    #[error("invalid IRI '{0}'")]
    InvalidIri(String),
    #[error("invalid literal: {0}")]
    InvalidLiteral(String),
    #[error("literal used as triple subject")]
    LiteralSubject,
    #[error("input is not valid UTF-8 (valid up to byte {0})")]
    Utf8(usize),
}

impl RdfError {
    /// Source position for parse errors, if the error carries one.
    pub fn position(&self) -> Option<(usize, usize)> {
        match self {
            RdfError::Syntax { line, column, .. }
            | RdfError::UnknownPrefix { line, column, .. }
            | RdfError::UnsupportedFeature { line, column, .. } => Some((*line, *column)),
            _ => None,
        }
    }
}
