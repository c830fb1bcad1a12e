//! Conjunctive triple-pattern matching.

use std::collections::{BTreeMap, BTreeSet};

use super::{KnowledgeGraph, Literal, NodeId, Object, RelationId, Triple};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternTerm {
    Var(String),
    Node(NodeId),
    Literal(Literal),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RelationTerm {
    Var(String),
    Rel(RelationId),
}

impl PatternTerm {
    pub fn var(name: &str) -> Self {
        PatternTerm::Var(name.to_string())
    }
}

impl RelationTerm {
    pub fn var(name: &str) -> Self {
        RelationTerm::Var(name.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub relation: RelationTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    pub fn new(subject: PatternTerm, relation: RelationTerm, object: PatternTerm) -> Self {
        TriplePattern {
            subject,
            relation,
            object,
        }
    }
}

/// Value bound to a variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Binding {
    Node(NodeId),
    Literal(Literal),
    Relation(RelationId),
}

pub type Bindings = BTreeMap<String, Binding>;

/// All variable assignments under which every pattern in `conj` is a triple of
/// `g`. Evaluated as a left-deep join in the given order; each step uses the
/// most selective index its bound positions allow.
pub fn match_pattern(g: &KnowledgeGraph, conj: &[TriplePattern]) -> BTreeSet<Bindings> {
    let mut partial: Vec<Bindings> = vec![Bindings::new()];
    for pat in conj {
        let mut next = Vec::new();
        for b in &partial {
            for t in candidates(g, pat, b) {
                if let Some(ext) = unify(pat, t, b) {
                    next.push(ext);
                }
            }
        }
        if next.is_empty() {
            return BTreeSet::new();
        }
        partial = next;
    }
    partial.into_iter().collect()
}

enum Resolved<'a> {
    Free,
    Node(NodeId),
    Literal(&'a Literal),
    /// Bound to something that can never occupy this position.
    Impossible,
}

fn resolve_term<'a>(term: &'a PatternTerm, b: &'a Bindings) -> Resolved<'a> {
    match term {
        PatternTerm::Node(n) => Resolved::Node(*n),
        PatternTerm::Literal(l) => Resolved::Literal(l),
        PatternTerm::Var(v) => match b.get(v) {
            None => Resolved::Free,
            Some(Binding::Node(n)) => Resolved::Node(*n),
            Some(Binding::Literal(l)) => Resolved::Literal(l),
            Some(Binding::Relation(_)) => Resolved::Impossible,
        },
    }
}

fn resolve_relation(term: &RelationTerm, b: &Bindings) -> Result<Option<RelationId>, ()> {
    match term {
        RelationTerm::Rel(r) => Ok(Some(*r)),
        RelationTerm::Var(v) => match b.get(v) {
            None => Ok(None),
            Some(Binding::Relation(r)) => Ok(Some(*r)),
            Some(_) => Err(()),
        },
    }
}

fn candidates<'a>(
    g: &'a KnowledgeGraph,
    pat: &'a TriplePattern,
    b: &'a Bindings,
) -> Box<dyn Iterator<Item = &'a Triple> + 'a> {
    let subject = resolve_term(&pat.subject, b);
    let object = resolve_term(&pat.object, b);
    let Ok(relation) = resolve_relation(&pat.relation, b) else {
        return Box::new(std::iter::empty());
    };
    match (subject, object, relation) {
        (Resolved::Impossible, _, _) | (_, Resolved::Impossible, _) => Box::new(std::iter::empty()),
        (Resolved::Literal(_), _, _) => Box::new(std::iter::empty()),
        (Resolved::Node(s), _, _) => Box::new(g.outgoing(s)),
        (_, Resolved::Node(o), _) => Box::new(g.incoming(o)),
        (_, Resolved::Literal(l), Some(r)) => Box::new(g.with_relation_literal(r, l)),
        _ => Box::new(g.triples()),
    }
}

fn bind(b: &mut Bindings, var: &str, value: Binding) -> bool {
    match b.get(var) {
        Some(existing) => *existing == value,
        None => {
            b.insert(var.to_string(), value);
            true
        }
    }
}

fn unify(pat: &TriplePattern, t: &Triple, b: &Bindings) -> Option<Bindings> {
    let mut out = b.clone();
    match &pat.subject {
        PatternTerm::Node(n) if *n != t.subject => return None,
        PatternTerm::Literal(_) => return None,
        PatternTerm::Var(v) if !bind(&mut out, v, Binding::Node(t.subject)) => return None,
        _ => {}
    }
    match &pat.relation {
        RelationTerm::Rel(r) if *r != t.relation => return None,
        RelationTerm::Var(v) if !bind(&mut out, v, Binding::Relation(t.relation)) => return None,
        _ => {}
    }
    let object_value = match &t.object {
        Object::Node(n) => Binding::Node(*n),
        Object::Literal(l) => Binding::Literal(l.clone()),
    };
    match &pat.object {
        PatternTerm::Node(n) => {
            if t.object != Object::Node(*n) {
                return None;
            }
        }
        PatternTerm::Literal(l) => {
            if t.object.as_literal() != Some(l) {
                return None;
            }
        }
        PatternTerm::Var(v) => {
            if !bind(&mut out, v, object_value) {
                return None;
            }
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> KnowledgeGraph {
        let mut g = KnowledgeGraph::new();
        g.add("r1", "hasCellValue", "x1");
        g.add_literal("x1", "exactValue", Literal::string("42"));
        g
    }

    fn cell_query(g: &KnowledgeGraph) -> Vec<TriplePattern> {
        let hcv = g.relation_id("hasCellValue").unwrap();
        let ev = g.relation_id("exactValue").unwrap();
        vec![
            TriplePattern::new(
                PatternTerm::var("r"),
                RelationTerm::Rel(hcv),
                PatternTerm::var("x"),
            ),
            TriplePattern::new(
                PatternTerm::var("x"),
                RelationTerm::Rel(ev),
                PatternTerm::Literal(Literal::string("42")),
            ),
        ]
    }

    #[test]
    fn single_assignment() {
        let g = toy();
        let got = match_pattern(&g, &cell_query(&g));
        let mut expect = Bindings::new();
        expect.insert("r".into(), Binding::Node(g.node_id("r1").unwrap()));
        expect.insert("x".into(), Binding::Node(g.node_id("x1").unwrap()));
        assert_eq!(got, BTreeSet::from([expect]));
    }

    #[test]
    fn empty_graph_has_no_matches() {
        let g = toy();
        let conj = cell_query(&g);
        let mut empty = g.clone();
        empty.retain(|_| false);
        assert!(match_pattern(&empty, &conj).is_empty());
    }

    #[test]
    fn ground_pattern_matches_zero_or_one() {
        let g = toy();
        let hcv = g.relation_id("hasCellValue").unwrap();
        let r1 = g.node_id("r1").unwrap();
        let x1 = g.node_id("x1").unwrap();
        let hit = TriplePattern::new(
            PatternTerm::Node(r1),
            RelationTerm::Rel(hcv),
            PatternTerm::Node(x1),
        );
        assert_eq!(match_pattern(&g, &[hit]).len(), 1);
        let miss = TriplePattern::new(
            PatternTerm::Node(x1),
            RelationTerm::Rel(hcv),
            PatternTerm::Node(r1),
        );
        assert!(match_pattern(&g, &[miss]).is_empty());
    }

    #[test]
    fn order_independent() {
        let g = toy();
        let mut conj = cell_query(&g);
        let a = match_pattern(&g, &conj);
        conj.reverse();
        assert_eq!(a, match_pattern(&g, &conj));
    }
}
