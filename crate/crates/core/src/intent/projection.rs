//! Extraction of intents from RDF graphs and projection back.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::lifecycle::LifecycleState;
use super::model::{
    validate, Comparator, Expectation, ExpectationKind, Intent, ResourceConstraint, Target, TargetScope, Unit,
};
use super::vocab::{self, iri};
use super::IntentError;
use crate::rdf::{BlankNode, Graph, Iri, Literal, Term, Triple, RDF_TYPE, XSD_NS};

/// Intents found in a graph, before validation, plus warnings for triples
/// nothing consumed.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub intents: Vec<Result<Intent, IntentError>>,
    pub warnings: Vec<String>,
}

/// Validated intents plus warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct Extracted {
    pub intents: Vec<Intent>,
    pub warnings: Vec<String>,
}

/// Extracts every `icm:Intent` node and validates it. The first failing
/// intent aborts extraction.
pub fn from_graph(graph: &Graph) -> Result<Extracted, IntentError> {
    let extraction = extract(graph);
    let mut intents = Vec::new();
    for item in extraction.intents {
        let intent = item?;
        let violations = validate(&intent);
        if !violations.is_empty() {
            return Err(IntentError::Validation { intent: intent.id.as_str().to_string(), violations });
        }
        intents.push(intent);
    }
    Ok(Extracted { intents, warnings: extraction.warnings })
}

/// Structural extraction without validation; vocabulary errors are
/// reported per intent so one bad node does not hide the others.
pub fn extract(graph: &Graph) -> Extraction {
    let reader = Reader::new(graph);
    let rdf_type = Iri::new(RDF_TYPE).expect("static IRI");
    let intent_class = Term::Iri(iri(vocab::INTENT));
    let mut seen = HashSet::new();
    let mut intents = Vec::new();
    for subject in graph.subjects(&rdf_type, &intent_class) {
        if !seen.insert(subject.clone()) {
            continue;
        }
        intents.push(reader.intent(subject));
    }
    let warnings = reader.warnings();
    Extraction { intents, warnings }
}

struct Reader<'g> {
    graph: &'g Graph,
    by_subject: HashMap<&'g Term, Vec<usize>>,
    consumed: std::cell::RefCell<HashSet<usize>>,
}

fn vocab_err(intent: &str, message: impl Into<String>) -> IntentError {
    IntentError::Vocabulary { intent: intent.to_string(), message: message.into() }
}

impl<'g> Reader<'g> {
    fn new(graph: &'g Graph) -> Self {
        let mut by_subject: HashMap<&Term, Vec<usize>> = HashMap::new();
        for (i, t) in graph.triples().iter().enumerate() {
            by_subject.entry(t.subject()).or_default().push(i);
        }
        Reader { graph, by_subject, consumed: Default::default() }
    }

    /// Objects of `(node, icm:local, ?)`, marking those triples consumed.
    fn take(&self, node: &Term, local: &str) -> Vec<&'g Term> {
        self.take_iri(node, &iri(local))
    }

    fn take_iri(&self, node: &Term, pred: &Iri) -> Vec<&'g Term> {
        let mut out = Vec::new();
        if let Some(idx) = self.by_subject.get(node) {
            for &i in idx {
                let t: &Triple = &self.graph.triples()[i];
                if t.predicate() == pred {
                    self.consumed.borrow_mut().insert(i);
                    out.push(t.object());
                }
            }
        }
        out
    }

    fn take_types(&self, node: &Term) -> Vec<&'g Term> {
        self.take_iri(node, &Iri::new(RDF_TYPE).expect("static IRI"))
    }

    fn take_one(&self, id: &str, node: &Term, local: &str) -> Result<Option<&'g Term>, IntentError> {
        let v = self.take(node, local);
        match v.len() {
            0 => Ok(None),
            1 => Ok(Some(v[0])),
            n => Err(vocab_err(id, format!("icm:{local} must have one value, found {n}"))),
        }
    }

    fn warnings(&self) -> Vec<String> {
        let consumed = self.consumed.borrow();
        self.graph
            .triples()
            .iter()
            .enumerate()
            .filter(|(i, _)| !consumed.contains(i))
            .map(|(_, t)| format!("unrecognised triple ignored: {t}"))
            .collect()
    }

    fn intent(&self, subject: &Term) -> Result<Intent, IntentError> {
        let id = match subject {
            Term::Iri(i) => i.clone(),
            other => return Err(vocab_err(&other.to_string(), "intents must be named by an IRI")),
        };
        let name = id.as_str();
        // Only the icm:Intent type assertion is part of the vocabulary.
        let _ = self.take_types(subject);

        let kind_local = self
            .take_one(name, subject, vocab::INTENT_KIND)?
            .ok_or_else(|| vocab_err(name, "missing icm:intentKind"))?;
        let kind = vocab_local(name, kind_local)
            .and_then(|l| vocab::parse_kind(l).ok_or_else(|| vocab_err(name, format!("unknown intent kind '{l}'"))))?;

        let scope = match self.take_one(name, subject, vocab::HAS_TARGET)? {
            Some(node) => self.scope(name, node)?,
            None => TargetScope { nf_types: BTreeSet::new(), location_area: String::new(), attack_surface_filter: None },
        };

        let mut expectations = Vec::new();
        for node in self.take(subject, vocab::HAS_EXPECTATION) {
            expectations.push(self.expectation(name, node)?);
        }
        expectations.sort_by(|a, b| a.id.cmp(&b.id));

        let mut constraints = Vec::new();
        for node in self.take(subject, vocab::HAS_CONTEXT) {
            constraints.push(self.constraint(name, node)?);
        }
        constraints.sort_by(|a, b| a.resource().cmp(&b.resource()).then(a.limit().total_cmp(&b.limit())));

        let parent = match self.take_one(name, subject, vocab::DERIVED_FROM)? {
            Some(Term::Iri(p)) => Some(p.clone()),
            Some(other) => return Err(vocab_err(name, format!("icm:derivedFrom must be an IRI, found {other}"))),
            None => None,
        };
        let state = match self.take_one(name, subject, vocab::LIFECYCLE_STATE)? {
            Some(t) => {
                let l = vocab_local(name, t)?;
                vocab::parse_state(l).ok_or_else(|| vocab_err(name, format!("unknown lifecycle state '{l}'")))?
            }
            None => LifecycleState::Received,
        };

        Ok(Intent { id, kind, scope, expectations, constraints, state, parent, audit: Vec::new() })
    }

    fn scope(&self, name: &str, node: &Term) -> Result<TargetScope, IntentError> {
        let _ = self.take_types(node);
        let nf_types = self
            .take(node, vocab::NF_TYPE)
            .into_iter()
            .map(|t| string_value(name, t, vocab::NF_TYPE))
            .collect::<Result<BTreeSet<_>, _>>()?;
        let location_area = match self.take_one(name, node, vocab::LOCATION_AREA)? {
            Some(t) => string_value(name, t, vocab::LOCATION_AREA)?,
            None => String::new(),
        };
        let filter_terms = self.take(node, vocab::SURFACE_FILTER);
        let attack_surface_filter = if filter_terms.is_empty() {
            None
        } else {
            let mut set = BTreeSet::new();
            for t in filter_terms {
                let l = vocab_local(name, t)?;
                let sel = vocab::parse_surface(l).ok_or_else(|| vocab_err(name, format!("unknown attack surface '{l}'")))?;
                set.extend(sel.members());
            }
            Some(set)
        };
        Ok(TargetScope { nf_types, location_area, attack_surface_filter })
    }

    fn expectation(&self, name: &str, node: &Term) -> Result<Expectation, IntentError> {
        let mut kinds = Vec::new();
        for t in self.take_types(node) {
            if let Some(k) = t.as_iri().and_then(vocab::local).and_then(vocab::parse_expectation_class) {
                kinds.push(k);
            }
        }
        let kind = match kinds.as_slice() {
            [k] => *k,
            [] => return Err(vocab_err(name, "expectation node has no expectation class")),
            _ => return Err(vocab_err(name, "expectation node has several expectation classes")),
        };
        let id = match self.take_one(name, node, vocab::EXPECTATION_ID)? {
            Some(t) => string_value(name, t, vocab::EXPECTATION_ID)?,
            None => String::new(),
        };
        let level = match self.take_one(name, node, vocab::PROTECTION_LEVEL)? {
            Some(t) => {
                let l = vocab_local(name, t)?;
                Some(vocab::parse_level(l).ok_or_else(|| vocab_err(name, format!("unknown protection level '{l}'")))?)
            }
            None => None,
        };
        let surface = match self.take_one(name, node, vocab::ATTACK_SURFACE)? {
            Some(t) => {
                let l = vocab_local(name, t)?;
                Some(vocab::parse_surface(l).ok_or_else(|| vocab_err(name, format!("unknown attack surface '{l}'")))?)
            }
            None => None,
        };
        let mut required_properties = BTreeSet::new();
        for t in self.take(node, vocab::REQUIRES_PROPERTY) {
            let l = vocab_local(name, t)?;
            required_properties
                .insert(vocab::parse_property(l).ok_or_else(|| vocab_err(name, format!("unknown security property '{l}'")))?);
        }
        let reporting_interval = match self.take_one(name, node, vocab::REPORTING_INTERVAL)? {
            Some(t) => {
                let v = t
                    .as_literal()
                    .and_then(Literal::as_i64)
                    .and_then(|v| u32::try_from(v).ok())
                    .ok_or_else(|| vocab_err(name, "icm:reportingInterval must be a non-negative integer"))?;
                Some(v)
            }
            None => None,
        };
        let (metric, target) = match self.take_one(name, node, vocab::HAS_CONDITION)? {
            Some(cond) => self.condition(name, cond)?,
            None => (None, None),
        };
        Ok(Expectation { id, kind, level, metric, target, surface, required_properties, reporting_interval })
    }

    fn condition(
        &self,
        name: &str,
        node: &Term,
    ) -> Result<(Option<super::MetricId>, Option<Target>), IntentError> {
        let _ = self.take_types(node);
        let metric = match self.take_one(name, node, vocab::METRIC)? {
            Some(t) => {
                let l = vocab_local(name, t)?;
                Some(vocab::parse_metric(l).ok_or_else(|| vocab_err(name, format!("unknown metric '{l}'")))?)
            }
            None => None,
        };
        let unit = match self.take_one(name, node, vocab::UNIT)? {
            Some(t) => {
                let l = vocab_local(name, t)?;
                vocab::parse_unit(l).ok_or_else(|| vocab_err(name, format!("unknown unit '{l}'")))?
            }
            None => return Err(vocab_err(name, "condition lacks icm:unit")),
        };
        let at_least = self.take_one(name, node, vocab::AT_LEAST)?.map(|t| number(name, t)).transpose()?;
        let at_most = self.take_one(name, node, vocab::AT_MOST)?.map(|t| number(name, t)).transpose()?;
        let comparator = match (at_least, at_most) {
            (Some(l), Some(u)) => Comparator::InRange { lower: unit.normalize(l), upper: unit.normalize(u) },
            (Some(v), None) => Comparator::GreaterOrEqual { value: unit.normalize(v) },
            (None, Some(v)) => Comparator::LessOrEqual { value: unit.normalize(v) },
            (None, None) => return Err(vocab_err(name, "condition needs icm:atLeast and/or icm:atMost")),
        };
        Ok((metric, Some(Target { comparator, unit })))
    }

    fn constraint(&self, name: &str, node: &Term) -> Result<ResourceConstraint, IntentError> {
        let _ = self.take_types(node);
        let resource = match self.take_one(name, node, vocab::RESOURCE)? {
            Some(t) => {
                let l = vocab_local(name, t)?;
                vocab::parse_resource(l).ok_or_else(|| vocab_err(name, format!("unknown resource '{l}'")))?
            }
            None => return Err(vocab_err(name, "context lacks icm:resource")),
        };
        let limit = match self.take_one(name, node, vocab::AT_MOST)? {
            Some(t) => number(name, t)?,
            None => return Err(vocab_err(name, "context lacks icm:atMost")),
        };
        Ok(ResourceConstraint::new(resource, limit))
    }
}

fn vocab_local<'t>(name: &str, term: &'t Term) -> Result<&'t str, IntentError> {
    term.as_iri()
        .and_then(vocab::local)
        .ok_or_else(|| vocab_err(name, format!("expected a vocabulary term, found {term}")))
}

fn string_value(name: &str, term: &Term, pred: &str) -> Result<String, IntentError> {
    term.as_literal()
        .map(|l| l.lexical().to_string())
        .ok_or_else(|| vocab_err(name, format!("icm:{pred} must be a literal")))
}

fn number(name: &str, term: &Term) -> Result<f64, IntentError> {
    term.as_literal()
        .and_then(Literal::as_f64)
        .ok_or_else(|| vocab_err(name, format!("expected a numeric literal, found {term}")))
}

/// Projects intents into a graph using the `icm:` vocabulary.
pub fn to_graph(intents: &[Intent]) -> Graph {
    let mut g = Graph::new();
    g.add_prefix(vocab::PREFIX, Iri::new(vocab::NS).expect("static IRI"));
    g.add_prefix("xsd", Iri::new(XSD_NS).expect("static IRI"));
    let mut w = Emitter { g, next: 0 };
    for intent in intents {
        w.intent(intent);
    }
    w.g
}

struct Emitter {
    g: Graph,
    next: usize,
}

impl Emitter {
    fn blank(&mut self) -> Term {
        let b = Term::Blank(BlankNode::new(format!("n{}", self.next)));
        self.next += 1;
        b
    }

    fn add(&mut self, s: &Term, local: &str, o: Term) {
        self.add_iri(s, iri(local), o);
    }

    fn add_iri(&mut self, s: &Term, p: Iri, o: Term) {
        let t = Triple::new(s.clone(), p, o).expect("subjects are IRIs or blank nodes");
        self.g.insert(t);
    }

    fn typed(&mut self, s: &Term, class: &str) {
        self.add_iri(s, Iri::new(RDF_TYPE).expect("static IRI"), Term::Iri(iri(class)));
    }

    fn term(local: &str) -> Term {
        Term::Iri(iri(local))
    }

    fn intent(&mut self, intent: &Intent) {
        let s = Term::Iri(intent.id.clone());
        self.typed(&s, vocab::INTENT);
        self.add(&s, vocab::INTENT_KIND, Self::term(vocab::kind_term(intent.kind)));

        let t = self.blank();
        self.add(&s, vocab::HAS_TARGET, t.clone());
        self.typed(&t, vocab::TARGET);
        for nf in &intent.scope.nf_types {
            self.add(&t, vocab::NF_TYPE, Term::Literal(Literal::string(nf.clone())));
        }
        self.add(&t, vocab::LOCATION_AREA, Term::Literal(Literal::string(intent.scope.location_area.clone())));
        if let Some(filter) = &intent.scope.attack_surface_filter {
            for surface in filter {
                self.add(&t, vocab::SURFACE_FILTER, Self::term(surface.as_str()));
            }
        }

        for e in &intent.expectations {
            let node = self.blank();
            self.add(&s, vocab::HAS_EXPECTATION, node.clone());
            self.expectation(&node, e);
        }
        for c in &intent.constraints {
            let node = self.blank();
            self.add(&s, vocab::HAS_CONTEXT, node.clone());
            self.typed(&node, vocab::CONTEXT);
            self.add(&node, vocab::RESOURCE, Self::term(c.resource().as_str()));
            self.add(&node, vocab::AT_MOST, Term::Literal(Literal::decimal(c.limit())));
        }
        if let Some(p) = &intent.parent {
            self.add(&s, vocab::DERIVED_FROM, Term::Iri(p.clone()));
        }
        if intent.state != LifecycleState::Received {
            self.add(&s, vocab::LIFECYCLE_STATE, Self::term(vocab::state_term(intent.state)));
        }
    }

    fn expectation(&mut self, node: &Term, e: &Expectation) {
        self.typed(node, vocab::expectation_class(e.kind));
        self.add(node, vocab::EXPECTATION_ID, Term::Literal(Literal::string(e.id.clone())));
        if let Some(level) = e.level {
            self.add(node, vocab::PROTECTION_LEVEL, Self::term(vocab::level_term(level)));
        }
        if let Some(surface) = e.surface {
            self.add(node, vocab::ATTACK_SURFACE, Self::term(surface.as_str()));
        }
        for p in &e.required_properties {
            self.add(node, vocab::REQUIRES_PROPERTY, Self::term(p.as_str()));
        }
        if let Some(interval) = e.reporting_interval {
            self.add(node, vocab::REPORTING_INTERVAL, Term::Literal(Literal::integer(i64::from(interval))));
        }
        if e.kind != ExpectationKind::Reporting && (e.metric.is_some() || e.target.is_some()) {
            let cond = self.blank();
            self.add(node, vocab::HAS_CONDITION, cond.clone());
            self.typed(&cond, vocab::CONDITION);
            if let Some(m) = e.metric {
                self.add(&cond, vocab::METRIC, Self::term(m.as_str()));
            }
            if let Some(target) = e.target {
                self.add(&cond, vocab::UNIT, Self::term(target.unit.as_str()));
                let lit = |v: f64| Term::Literal(number_literal(target.unit, v));
                match target.comparator {
                    Comparator::GreaterOrEqual { value } => self.add(&cond, vocab::AT_LEAST, lit(value)),
                    Comparator::LessOrEqual { value } => self.add(&cond, vocab::AT_MOST, lit(value)),
                    Comparator::InRange { lower, upper } => {
                        self.add(&cond, vocab::AT_LEAST, lit(lower));
                        self.add(&cond, vocab::AT_MOST, lit(upper));
                    }
                }
            }
        }
    }
}

/// Milliseconds stay integers when they are whole numbers.
/// Whole values are written as integers, everything else as decimals.
fn number_literal(unit: Unit, normalized: f64) -> Literal {
    let v = unit.denormalize(normalized);
    if v.fract() == 0.0 && v.abs() < 1e15 {
        Literal::integer(v as i64)
    } else {
        Literal::decimal(v)
    }
}
