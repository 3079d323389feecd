//! Graph isomorphism by backtracking over blank-node bijections.
//!
//! Deliberately independent of the serializer's canonical labelling so the
//! two can check each other.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::graph::Graph;
use super::term::{BlankNode, Term, Triple};

/// True iff some bijection between blank nodes maps `a`'s triples onto `b`'s.
pub fn isomorphic(a: &Graph, b: &Graph) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let ground = |g: &Graph| -> HashSet<Triple> {
        g.triples()
            .iter()
            .filter(|t| !t.subject().is_blank() && !t.object().is_blank())
            .cloned()
            .collect()
    };
    if ground(a) != ground(b) {
        return false;
    }
    let sa = Side::new(a);
    let sb = Side::new(b);
    if sa.blanks.len() != sb.blanks.len() {
        return false;
    }
    let mut by_sig: BTreeMap<&String, Vec<usize>> = BTreeMap::new();
    for (i, sig) in sb.signatures.iter().enumerate() {
        by_sig.entry(sig).or_default().push(i);
    }
    let mut candidates: Vec<Vec<usize>> = Vec::with_capacity(sa.blanks.len());
    for sig in &sa.signatures {
        match by_sig.get(sig) {
            Some(c) => candidates.push(c.clone()),
            None => return false,
        }
    }
    let mut order: Vec<usize> = (0..sa.blanks.len()).collect();
    order.sort_by_key(|&i| candidates[i].len());
    let mut mapping = vec![usize::MAX; sa.blanks.len()];
    let mut used = vec![false; sb.blanks.len()];
    extend(&sa, &sb, &order, 0, &candidates, &mut mapping, &mut used)
}

struct Side<'g> {
    blanks: Vec<&'g BlankNode>,
    index: HashMap<&'g BlankNode, usize>,
    /// Triples touching each blank node.
    incident: Vec<Vec<&'g Triple>>,
    signatures: Vec<String>,
    triples: HashSet<&'g Triple>,
}

impl<'g> Side<'g> {
    fn new(g: &'g Graph) -> Self {
        let mut blanks = Vec::new();
        let mut index = HashMap::new();
        let mut incident: Vec<Vec<&Triple>> = Vec::new();
        for t in g.triples() {
            for term in [t.subject(), t.object()] {
                if let Term::Blank(bn) = term {
                    let i = *index.entry(bn).or_insert_with(|| {
                        blanks.push(bn);
                        incident.push(Vec::new());
                        blanks.len() - 1
                    });
                    if incident[i].last().is_none_or(|last| !std::ptr::eq(*last, t)) {
                        incident[i].push(t);
                    }
                }
            }
        }
        // Local signature: predicates and ground neighbours, both directions.
        let signatures = blanks
            .iter()
            .enumerate()
            .map(|(i, bn)| {
                let mut parts: Vec<String> = incident[i]
                    .iter()
                    .flat_map(|t| {
                        let mut v = Vec::new();
                        if t.subject() == &Term::Blank((*bn).clone()) {
                            v.push(format!("+{} {}", t.predicate(), local_key(t.object(), bn)));
                        }
                        if t.object() == &Term::Blank((*bn).clone()) {
                            v.push(format!("-{} {}", t.predicate(), local_key(t.subject(), bn)));
                        }
                        v
                    })
                    .collect();
                parts.sort();
                parts.join("|")
            })
            .collect();
        Side { blanks, index, incident, signatures, triples: g.triples().iter().collect() }
    }
}

fn local_key(term: &Term, me: &BlankNode) -> String {
    match term {
        Term::Blank(b) if b == me => "SELF".to_string(),
        Term::Blank(_) => "_".to_string(),
        other => other.to_string(),
    }
}

fn extend(
    a: &Side<'_>,
    b: &Side<'_>,
    order: &[usize],
    depth: usize,
    candidates: &[Vec<usize>],
    mapping: &mut Vec<usize>,
    used: &mut Vec<bool>,
) -> bool {
    if depth == order.len() {
        return true;
    }
    let ai = order[depth];
    for &bi in &candidates[ai] {
        if used[bi] {
            continue;
        }
        mapping[ai] = bi;
        used[bi] = true;
        if consistent(a, b, ai, mapping) && extend(a, b, order, depth + 1, candidates, mapping, used) {
            return true;
        }
        used[bi] = false;
        mapping[ai] = usize::MAX;
    }
    false
}

/// Every triple incident to `ai` whose blank endpoints are all mapped must
/// exist in `b` after translation.
fn consistent(a: &Side<'_>, b: &Side<'_>, ai: usize, mapping: &[usize]) -> bool {
    let translate = |term: &Term| -> Option<Term> {
        match term {
            Term::Blank(bn) => {
                let m = mapping[a.index[bn]];
                (m != usize::MAX).then(|| Term::Blank(b.blanks[m].clone()))
            }
            other => Some(other.clone()),
        }
    };
    a.incident[ai].iter().all(|t| match (translate(t.subject()), translate(t.object())) {
        (Some(s), Some(o)) => match Triple::new(s, t.predicate().clone(), o) {
            Ok(mapped) => b.triples.contains(&mapped),
            Err(_) => false,
        },
        _ => true,
    })
}
