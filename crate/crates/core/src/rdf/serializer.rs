//! Canonical Turtle writer.
//!
//! Output is a pure function of the graph up to blank-node renaming:
//! blank nodes referenced exactly once are written inline (`[ ... ]` or
//! `( ... )`), the rest receive labels from a canonical labelling computed
//! by colour refinement plus individualisation over remaining ties.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use super::graph::Graph;
use super::term::{
    escape_string, is_decimal_lexical, is_integer_lexical, BlankNode, Iri, Literal, Term, Triple,
    RDF_FIRST, RDF_NIL, RDF_REST, RDF_TYPE, XSD_BOOLEAN, XSD_DECIMAL, XSD_INTEGER, XSD_STRING,
};

const INDENT: &str = "    ";

/// Serializes `graph` deterministically; the result re-parses to an
/// isomorphic graph.
pub fn serialize_turtle(graph: &Graph) -> Vec<u8> {
    let labels = canonical_labels(graph);
    Writer::new(graph, labels).write().into_bytes()
}

/// Rank of each blank node in the canonical order. Exposed for tests.
pub(crate) fn canonical_labels(graph: &Graph) -> HashMap<BlankNode, usize> {
    let blanks: Vec<BlankNode> = {
        let mut set = BTreeSet::new();
        for t in graph.triples() {
            if let Term::Blank(b) = t.subject() {
                set.insert(b.clone());
            }
            if let Term::Blank(b) = t.object() {
                set.insert(b.clone());
            }
        }
        set.into_iter().collect()
    };
    if blanks.is_empty() {
        return HashMap::new();
    }
    let index: HashMap<&BlankNode, usize> = blanks.iter().enumerate().map(|(i, b)| (b, i)).collect();
    let edges = Edges::new(graph, &index);
    let colours = refine(&edges, vec![0; blanks.len()]);
    let (_, order) = search(&edges, colours);
    blanks.into_iter().enumerate().map(|(i, b)| (b, order[i])).collect()
}

/// Triples with blank endpoints replaced by indices into the blank list.
struct Edges {
    triples: Vec<(Endpoint, String, Endpoint)>,
}

#[derive(Clone)]
enum Endpoint {
    Ground(String),
    Blank(usize),
}

impl Edges {
    fn new(graph: &Graph, index: &HashMap<&BlankNode, usize>) -> Self {
        let endpoint = |t: &Term| match t {
            Term::Blank(b) => Endpoint::Blank(index[b]),
            other => Endpoint::Ground(other.to_string()),
        };
        let triples = graph
            .triples()
            .iter()
            .map(|t| (endpoint(t.subject()), t.predicate().to_string(), endpoint(t.object())))
            .collect();
        Edges { triples }
    }

    fn key(e: &Endpoint, colours: &[usize]) -> String {
        match e {
            Endpoint::Ground(s) => s.clone(),
            Endpoint::Blank(i) => format!("_:{}", colours[*i]),
        }
    }

    /// Sorted N-Triples lines with blank nodes written by their rank.
    fn render(&self, ranks: &[usize]) -> String {
        let mut lines: Vec<String> = self
            .triples
            .iter()
            .map(|(s, p, o)| format!("{} {} {}", Self::key(s, ranks), p, Self::key(o, ranks)))
            .collect();
        lines.sort();
        lines.join("\n")
    }
}

/// Colour refinement until the partition is stable. Colours are re-numbered
/// by sorted signature so they never depend on input labels.
fn refine(edges: &Edges, mut colours: Vec<usize>) -> Vec<usize> {
    loop {
        let mut sigs: Vec<Vec<String>> = colours.iter().map(|c| vec![format!("#{c:08}")]).collect();
        for (s, p, o) in &edges.triples {
            if let Endpoint::Blank(i) = s {
                sigs[*i].push(format!("+{} {}", p, Edges::key(o, &colours)));
            }
            if let Endpoint::Blank(i) = o {
                sigs[*i].push(format!("-{} {}", p, Edges::key(s, &colours)));
            }
        }
        let sigs: Vec<String> = sigs
            .into_iter()
            .map(|mut v| {
                let head = v.remove(0);
                v.sort();
                format!("{head}|{}", v.join("|"))
            })
            .collect();
        let distinct: BTreeSet<&String> = sigs.iter().collect();
        let numbering: HashMap<&String, usize> = distinct.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let next: Vec<usize> = sigs.iter().map(|s| numbering[s]).collect();
        let before = colours.iter().collect::<BTreeSet<_>>().len();
        if distinct.len() == before {
            return next;
        }
        colours = next;
    }
}

/// Individualisation search: returns the lexicographically least rendering
/// and the rank assignment producing it.
fn search(edges: &Edges, colours: Vec<usize>) -> (String, Vec<usize>) {
    let mut cells: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, c) in colours.iter().enumerate() {
        cells.entry(*c).or_default().push(i);
    }
    let Some((&tie_colour, members)) = cells.iter().find(|(_, m)| m.len() > 1) else {
        return (edges.render(&colours), colours);
    };
    let mut best: Option<(String, Vec<usize>)> = None;
    for &member in members {
        // Individualise `member`: it keeps the tied colour, the rest move up.
        let split: Vec<usize> = colours
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let doubled = 2 * c;
                if c > tie_colour || (c == tie_colour && i != member) {
                    doubled + 1
                } else {
                    doubled
                }
            })
            .collect();
        let refined = refine(edges, split);
        let candidate = search(edges, refined);
        if best.as_ref().is_none_or(|b| candidate.0 < b.0) {
            best = Some(candidate);
        }
    }
    best.expect("non-empty tie cell")
}

struct Writer<'g> {
    graph: &'g Graph,
    out_edges: HashMap<Term, Vec<&'g Triple>>,
    inline: BTreeSet<BlankNode>,
    labelled: BTreeMap<BlankNode, usize>,
    used_prefixes: BTreeSet<String>,
}

impl<'g> Writer<'g> {
    fn new(graph: &'g Graph, ranks: HashMap<BlankNode, usize>) -> Self {
        let mut out_edges: HashMap<Term, Vec<&Triple>> = HashMap::new();
        let mut in_count: HashMap<&BlankNode, usize> = HashMap::new();
        let mut parent: HashMap<&BlankNode, &Term> = HashMap::new();
        for t in graph.triples() {
            out_edges.entry(t.subject().clone()).or_default().push(t);
            if let Term::Blank(b) = t.object() {
                *in_count.entry(b).or_default() += 1;
                parent.insert(b, t.subject());
            }
        }
        let all_blanks: BTreeSet<&BlankNode> = ranks.keys().collect();
        let single: BTreeSet<&BlankNode> =
            all_blanks.iter().copied().filter(|b| in_count.get(b) == Some(&1)).collect();
        // Singly-referenced blanks lying on a parent cycle need labels.
        let mut on_cycle: BTreeSet<&BlankNode> = BTreeSet::new();
        for &start in &single {
            let mut seen = vec![start];
            let mut cur = start;
            loop {
                match parent.get(cur) {
                    Some(Term::Blank(p)) if single.contains(p) => {
                        if let Some(pos) = seen.iter().position(|x| *x == p) {
                            on_cycle.extend(seen[pos..].iter().copied());
                            break;
                        }
                        seen.push(p);
                        cur = p;
                    }
                    _ => break,
                }
            }
        }
        let inline: BTreeSet<BlankNode> =
            single.iter().filter(|b| !on_cycle.contains(*b)).map(|b| (*b).clone()).collect();
        let mut needs_label: Vec<&BlankNode> = all_blanks
            .iter()
            .copied()
            .filter(|b| in_count.get(b).copied().unwrap_or(0) >= 2 || on_cycle.contains(b))
            .collect();
        needs_label.sort_by_key(|b| ranks[*b]);
        let labelled = needs_label.into_iter().enumerate().map(|(i, b)| (b.clone(), i)).collect();
        Writer { graph, out_edges, inline, labelled, used_prefixes: BTreeSet::new() }
    }

    fn write(mut self) -> String {
        let mut subjects: Vec<Term> = Vec::new();
        let mut seen = BTreeSet::new();
        for t in self.graph.triples() {
            let s = t.subject();
            if let Term::Blank(b) = s {
                if self.inline.contains(b) {
                    continue;
                }
            }
            if seen.insert(s.clone()) {
                subjects.push(s.clone());
            }
        }
        let mut blocks: Vec<((u8, String), String)> = subjects
            .iter()
            .map(|s| {
                let block = self.subject_block(s);
                let key = match s {
                    Term::Iri(i) => i.as_str().to_string(),
                    Term::Blank(b) if self.labelled.contains_key(b) => format!("_:b{}", self.labelled[b]),
                    _ => block.clone(),
                };
                ((sort_rank(s, &self.labelled), key), block)
            })
            .collect();
        blocks.sort();

        let mut out = String::new();
        let emit_all = self.graph.is_empty();
        for (prefix, ns) in self.graph.prefixes() {
            if emit_all || self.used_prefixes.contains(prefix) {
                let _ = writeln!(out, "@prefix {prefix}: <{}> .", ns.as_str());
            }
        }
        for (_, block) in blocks {
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(&block);
            out.push('\n');
        }
        out
    }

    fn subject_block(&mut self, subject: &Term) -> String {
        let body = self.predicate_objects(subject, 1);
        match subject {
            Term::Blank(b) if !self.labelled.contains_key(b) => {
                format!("[\n{INDENT}{body}\n] .")
            }
            _ => {
                let head = self.term(subject, 0);
                format!("{head} {body} .")
            }
        }
    }

    fn predicate_objects(&mut self, subject: &Term, depth: usize) -> String {
        let triples = self.out_edges.get(subject).cloned().unwrap_or_default();
        let mut by_pred: BTreeMap<(u8, String), Vec<&Triple>> = BTreeMap::new();
        for t in triples {
            let p = t.predicate().as_str();
            let key = (if p == RDF_TYPE { 0 } else { 1 }, p.to_string());
            by_pred.entry(key).or_default().push(t);
        }
        let pad = INDENT.repeat(depth);
        let mut parts = Vec::new();
        for ((_, p), group) in by_pred {
            let pred = if p == RDF_TYPE { "a".to_string() } else { self.iri(&Iri::new(p).expect("graph IRI")) };
            let mut objects: Vec<((u8, String), String)> = group
                .iter()
                .map(|t| {
                    let key = (t.object().kind_rank(), self.compact(t.object()));
                    (key, self.term(t.object(), depth))
                })
                .collect();
            objects.sort();
            let rendered: Vec<String> = objects.into_iter().map(|(_, s)| s).collect();
            parts.push(format!("{pred} {}", rendered.join(" , ")));
        }
        parts.join(&format!(" ;\n{pad}"))
    }

    /// Depth-independent rendering used as a sort key.
    fn compact(&mut self, term: &Term) -> String {
        self.term(term, 0).split_whitespace().collect::<Vec<_>>().join(" ")
    }

    fn term(&mut self, term: &Term, depth: usize) -> String {
        match term {
            Term::Iri(i) => self.iri(i),
            Term::Literal(l) => self.literal(l),
            Term::Blank(b) => {
                if let Some(n) = self.labelled.get(b) {
                    return format!("_:b{n}");
                }
                if let Some(items) = self.collection_items(term) {
                    let rendered: Vec<String> = items.iter().map(|t| self.term(t, depth + 1)).collect();
                    return format!("( {} )", rendered.join(" "));
                }
                if !self.out_edges.contains_key(term) {
                    return "[]".to_string();
                }
                let body = self.predicate_objects(term, depth + 1);
                let pad = INDENT.repeat(depth + 1);
                let close = INDENT.repeat(depth);
                format!("[\n{pad}{body}\n{close}]")
            }
        }
    }

    /// Items of a well-formed, inline-only RDF collection headed at `term`.
    fn collection_items(&self, term: &Term) -> Option<Vec<Term>> {
        let mut items = Vec::new();
        let mut cur = term.clone();
        loop {
            match &cur {
                Term::Iri(i) if i.as_str() == RDF_NIL => return Some(items),
                Term::Blank(b) if self.inline.contains(b) => {
                    let edges = self.out_edges.get(&cur)?;
                    if edges.len() != 2 {
                        return None;
                    }
                    let first = edges.iter().find(|t| t.predicate().as_str() == RDF_FIRST)?;
                    let rest = edges.iter().find(|t| t.predicate().as_str() == RDF_REST)?;
                    items.push(first.object().clone());
                    cur = rest.object().clone();
                }
                _ => return None,
            }
        }
    }

    fn iri(&mut self, iri: &Iri) -> String {
        let value = iri.as_str();
        let mut best: Option<(&String, &str)> = None;
        for (prefix, ns) in self.graph.prefixes() {
            if let Some(local) = value.strip_prefix(ns.as_str()) {
                if is_local_name(local) && best.is_none_or(|(_, l)| local.len() < l.len()) {
                    best = Some((prefix, local));
                }
            }
        }
        match best {
            Some((prefix, local)) => {
                self.used_prefixes.insert(prefix.clone());
                format!("{prefix}:{local}")
            }
            None => format!("<{value}>"),
        }
    }

    fn literal(&mut self, lit: &Literal) -> String {
        let lex = lit.lexical();
        if let Some(lang) = lit.language() {
            return format!("\"{}\"@{lang}", escape_string(lex));
        }
        let bare = match lit.datatype().as_str() {
            XSD_STRING => return format!("\"{}\"", escape_string(lex)),
            XSD_INTEGER => is_integer_lexical(lex),
            XSD_DECIMAL => is_decimal_lexical(lex) && lex.contains('.') && !lex.ends_with('.'),
            XSD_BOOLEAN => lex == "true" || lex == "false",
            _ => false,
        };
        if bare {
            lex.to_string()
        } else {
            let dt = self.iri(lit.datatype());
            format!("\"{}\"^^{dt}", escape_string(lex))
        }
    }
}

fn sort_rank(subject: &Term, labelled: &BTreeMap<BlankNode, usize>) -> u8 {
    match subject {
        Term::Iri(_) => 0,
        Term::Blank(b) if labelled.contains_key(b) => 1,
        _ => 2,
    }
}

fn is_local_name(local: &str) -> bool {
    if local.is_empty() {
        return true;
    }
    let first = local.chars().next().unwrap_or('.');
    (first.is_alphanumeric() || first == '_' || first == ':')
        && !local.ends_with('.')
        && local.chars().all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':'))
}
