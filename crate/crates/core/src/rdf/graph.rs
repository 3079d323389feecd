use std::collections::{BTreeMap, HashSet};

use super::term::{Iri, Term, Triple};

/// Ordered set of triples plus the prefix map they were written with.
///
/// Insertion order is kept so pattern matching and diagnostics are stable.
/// Exact duplicate triples are collapsed on insert.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    triples: Vec<Triple>,
    seen: HashSet<Triple>,
    prefixes: BTreeMap<String, Iri>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false when the triple was already present.
    pub fn insert(&mut self, triple: Triple) -> bool {
        if self.seen.contains(&triple) {
            return false;
        }
        self.seen.insert(triple.clone());
        self.triples.push(triple);
        true
    }

    pub fn add_prefix(&mut self, prefix: impl Into<String>, namespace: Iri) {
        self.prefixes.insert(prefix.into(), namespace);
    }

    pub fn prefixes(&self) -> &BTreeMap<String, Iri> {
        &self.prefixes
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

    pub fn contains(&self, triple: &Triple) -> bool {
        self.seen.contains(triple)
    }

    /// All triples matching the bound positions, in insertion order.
    pub fn matching(
        &self,
        subject: Option<&Term>,
        predicate: Option<&Iri>,
        object: Option<&Term>,
    ) -> Vec<&Triple> {
        self.triples
            .iter()
            .filter(|t| subject.is_none_or(|s| t.subject() == s))
            .filter(|t| predicate.is_none_or(|p| t.predicate() == p))
            .filter(|t| object.is_none_or(|o| t.object() == o))
            .collect()
    }

    /// Objects of `(subject, predicate, ?)` in insertion order.
    pub fn objects<'a>(&'a self, subject: &'a Term, predicate: &'a Iri) -> impl Iterator<Item = &'a Term> + 'a {
        self.triples
            .iter()
            .filter(move |t| t.subject() == subject && t.predicate() == predicate)
            .map(Triple::object)
    }

    /// Subjects of `(?, predicate, object)` in insertion order.
    pub fn subjects<'a>(&'a self, predicate: &'a Iri, object: &'a Term) -> impl Iterator<Item = &'a Term> + 'a {
        self.triples
            .iter()
            .filter(move |t| t.predicate() == predicate && t.object() == object)
            .map(Triple::subject)
    }
}

impl PartialEq for Graph {
    /// Label-exact equality, including insertion order. Use
    /// [`super::isomorphic`] for semantic comparison.
    fn eq(&self, other: &Self) -> bool {
        self.triples == other.triples && self.prefixes == other.prefixes
    }
}

impl Eq for Graph {}
