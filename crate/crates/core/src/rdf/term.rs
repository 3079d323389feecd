use std::fmt;

use super::RdfError;

pub const RDF_NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const XSD_NS: &str = "http://www.w3.org/2001/XMLSchema#";

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDF_FIRST: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#first";
pub const RDF_REST: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#rest";
pub const RDF_NIL: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#nil";

pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
pub const XSD_DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";
pub const XSD_BOOLEAN: &str = "http://www.w3.org/2001/XMLSchema#boolean";

/// Absolute IRI. Equality is exact string equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Iri(String);

impl Iri {
    pub fn new(value: impl Into<String>) -> Result<Self, RdfError> {
        let value = value.into();
        if Self::is_absolute(&value) {
            Ok(Iri(value))
        } else {
            Err(RdfError::InvalidIri(value))
        }
    }

    /// `scheme:rest` with a syntactically valid scheme and a non-empty rest.
    pub fn is_absolute(value: &str) -> bool {
        if value.chars().any(|c| c.is_whitespace() || c == '<' || c == '>' || c == '"') {
            return false;
        }
        let Some((scheme, rest)) = value.split_once(':') else {
            return false;
        };
        scheme.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
            && scheme.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
            && !rest.is_empty()
            && rest != "//"
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl serde::Serialize for Iri {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> serde::Deserialize<'de> for Iri {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Iri::new(s).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlankNode(String);

impl BlankNode {
    pub fn new(label: impl Into<String>) -> Self {
        BlankNode(label.into())
    }

    pub fn label(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BlankNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "_:{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    lexical: String,
    datatype: Iri,
    language: Option<String>,
}

impl Literal {
    pub fn string(lexical: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: Iri(XSD_STRING.to_string()),
            language: None,
        }
    }

    pub fn lang_string(lexical: impl Into<String>, language: impl Into<String>) -> Result<Self, RdfError> {
        let language = language.into();
        let valid = !language.is_empty()
            && language.split('-').all(|part| {
                !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric())
            })
            && language.chars().next().is_some_and(|c| c.is_ascii_alphabetic());
        if !valid {
            return Err(RdfError::InvalidLiteral(format!("bad language tag '{language}'")));
        }
        Ok(Literal {
            lexical: lexical.into(),
            datatype: Iri(XSD_STRING.to_string()),
            language: Some(language),
        })
    }

    /// Typed literal; integer/decimal/boolean lexical forms are checked.
    pub fn typed(lexical: impl Into<String>, datatype: Iri) -> Result<Self, RdfError> {
        let lexical = lexical.into();
        let ok = match datatype.as_str() {
            XSD_INTEGER => is_integer_lexical(&lexical),
            XSD_DECIMAL => is_decimal_lexical(&lexical),
            XSD_BOOLEAN => matches!(lexical.as_str(), "true" | "false" | "1" | "0"),
            _ => true,
        };
        if !ok {
            return Err(RdfError::InvalidLiteral(format!(
                "'{lexical}' is not a valid {}",
                datatype.as_str()
            )));
        }
        Ok(Literal { lexical, datatype, language: None })
    }

    pub fn integer(value: i64) -> Self {
        Literal {
            lexical: value.to_string(),
            datatype: Iri(XSD_INTEGER.to_string()),
            language: None,
        }
    }

    /// Decimal literal in canonical-ish form (always contains a '.').
    pub fn decimal(value: f64) -> Self {
        let mut lexical = format!("{}", value);
        if !lexical.contains('.') {
            lexical.push_str(".0");
        }
        Literal {
            lexical,
            datatype: Iri(XSD_DECIMAL.to_string()),
            language: None,
        }
    }

    pub fn boolean(value: bool) -> Self {
        Literal {
            lexical: value.to_string(),
            datatype: Iri(XSD_BOOLEAN.to_string()),
            language: None,
        }
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> &Iri {
        &self.datatype
    }

    pub fn language(&self) -> Option<&str> {
        self.language.as_deref()
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self.datatype.as_str() {
            XSD_INTEGER => self.lexical.trim_start_matches('+').parse().ok(),
            _ => None,
        }
    }

    /// Numeric value for integer and decimal literals.
    pub fn as_f64(&self) -> Option<f64> {
        match self.datatype.as_str() {
            XSD_INTEGER | XSD_DECIMAL => {
                let s = self.lexical.trim_start_matches('+');
                let s = if s.ends_with('.') { &s[..s.len() - 1] } else { s };
                s.parse().ok()
            }
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match (self.datatype.as_str(), self.lexical.as_str()) {
            (XSD_BOOLEAN, "true" | "1") => Some(true),
            (XSD_BOOLEAN, "false" | "0") => Some(false),
            _ => None,
        }
    }
}

pub(crate) fn is_integer_lexical(s: &str) -> bool {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

pub(crate) fn is_decimal_lexical(s: &str) -> bool {
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let int_ok = int.bytes().all(|b| b.is_ascii_digit());
    let frac_ok = frac.is_none_or(|f| f.bytes().all(|b| b.is_ascii_digit()));
    int_ok && frac_ok && (!int.is_empty() || frac.is_some_and(|f| !f.is_empty()))
}

/// Any RDF term. Only `Iri` and `Blank` are valid in subject position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(Iri),
    Blank(BlankNode),
    Literal(Literal),
}

impl Term {
    pub fn iri(value: &str) -> Result<Self, RdfError> {
        Ok(Term::Iri(Iri::new(value)?))
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_blank(&self) -> Option<&BlankNode> {
        match self {
            Term::Blank(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(l) => Some(l),
            _ => None,
        }
    }

    pub fn is_blank(&self) -> bool {
        matches!(self, Term::Blank(_))
    }

    /// Ordering rank used by the serializer: IRIs, then blank nodes, then literals.
    pub(crate) fn kind_rank(&self) -> u8 {
        match self {
            Term::Iri(_) => 0,
            Term::Blank(_) => 1,
            Term::Literal(_) => 2,
        }
    }
}

impl From<Iri> for Term {
    fn from(value: Iri) -> Self {
        Term::Iri(value)
    }
}

impl From<BlankNode> for Term {
    fn from(value: BlankNode) -> Self {
        Term::Blank(value)
    }
}

impl From<Literal> for Term {
    fn from(value: Literal) -> Self {
        Term::Literal(value)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(i) => write!(f, "{i}"),
            Term::Blank(b) => write!(f, "{b}"),
            Term::Literal(l) => {
                write!(f, "\"{}\"", escape_string(&l.lexical))?;
                if let Some(lang) = &l.language {
                    write!(f, "@{lang}")
                } else if l.datatype.as_str() != XSD_STRING {
                    write!(f, "^^{}", l.datatype)
                } else {
                    Ok(())
                }
            }
        }
    }
}

pub(crate) fn escape_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04X}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

/// An RDF statement. The subject is never a literal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    subject: Term,
    predicate: Iri,
    object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Iri, object: Term) -> Result<Self, RdfError> {
        if matches!(subject, Term::Literal(_)) {
            return Err(RdfError::LiteralSubject);
        }
        Ok(Triple { subject, predicate, object })
    }

    pub fn subject(&self) -> &Term {
        &self.subject
    }

    pub fn predicate(&self) -> &Iri {
        &self.predicate
    }

    pub fn object(&self) -> &Term {
        &self.object
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iri_forms() {
        assert!(Iri::new("http://e/").is_ok());
        assert!(Iri::new("https://w3id.example/secintent#Intent").is_ok());
        assert!(Iri::new("urn:uuid:1234").is_ok());
        assert!(Iri::new("").is_err());
        assert!(Iri::new("relative/path").is_err());
        assert!(Iri::new("urn:").is_err());
        assert!(Iri::new("http://").is_err());
        assert!(Iri::new("mailto:soc@operator.example").is_ok());
        assert!(Iri::new("1x:a").is_err());
    }

    #[test]
    fn literal_lexical_checks() {
        let int = Iri::new(XSD_INTEGER).unwrap();
        let dec = Iri::new(XSD_DECIMAL).unwrap();
        let boolean = Iri::new(XSD_BOOLEAN).unwrap();
        assert!(Literal::typed("42", int.clone()).is_ok());
        assert!(Literal::typed("-7", int.clone()).is_ok());
        assert!(Literal::typed("4.2", int).is_err());
        assert!(Literal::typed("0.85", dec.clone()).is_ok());
        assert!(Literal::typed(".5", dec.clone()).is_ok());
        assert!(Literal::typed("1e3", dec).is_err());
        assert!(Literal::typed("yes", boolean).is_err());
        assert!(Literal::lang_string("hi", "en-GB").is_ok());
        assert!(Literal::lang_string("hi", "").is_err());
    }

    #[test]
    fn literal_subject_rejected() {
        let p = Iri::new("http://e/p").unwrap();
        assert!(Triple::new(Literal::string("x").into(), p.clone(), Literal::string("y").into()).is_err());
    }

    #[test]
    fn decimal_literal_always_has_point() {
        assert_eq!(Literal::decimal(30.0).lexical(), "30.0");
        assert_eq!(Literal::decimal(0.85).lexical(), "0.85");
        assert_eq!(Literal::decimal(0.85).as_f64(), Some(0.85));
    }
}
