//! In-memory triple store.
//!
//! Nodes and relations are interned into dense ids in insertion order. Triples
//! have set semantics and are indexed by subject, by object node and by
//! `(relation, literal object)`, which covers every access path used by the
//! lineage resolver and the path sampler.

mod literal;
mod ntriples;
mod pattern;

use std::collections::HashMap;

use indexmap::IndexSet;
use thiserror::Error;

pub use literal::{render_decimal, Literal, LiteralKind, SIGNIFICANT_DIGITS};
pub use ntriples::{
    parse_ntriples, parse_ntriples_with_relations, relation_iri, relation_name, serialize_ntriples,
    VOCAB_NS,
};
pub use pattern::{match_pattern, Binding, Bindings, PatternTerm, RelationTerm, TriplePattern};

pub const RDF_TYPE: &str = "rdf:type";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KgError {
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("bad literal: {0}")]
    BadLiteral(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Object {
    Node(NodeId),
    Literal(Literal),
}

impl Object {
    pub fn as_node(&self) -> Option<NodeId> {
        match self {
            Object::Node(n) => Some(*n),
            Object::Literal(_) => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Object::Node(_) => None,
            Object::Literal(l) => Some(l),
        }
    }
}

impl From<NodeId> for Object {
    fn from(n: NodeId) -> Self {
        Object::Node(n)
    }
}

impl From<Literal> for Object {
    fn from(l: Literal) -> Self {
        Object::Literal(l)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: NodeId,
    pub relation: RelationId,
    pub object: Object,
}

/// A typed triple store. Build once with a single writer, then share immutably.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    node_iris: Vec<String>,
    node_ids: HashMap<String, NodeId>,
    relation_names: Vec<String>,
    relation_ids: HashMap<String, RelationId>,
    triples: IndexSet<Triple>,
    by_subject: HashMap<NodeId, Vec<usize>>,
    by_object: HashMap<NodeId, Vec<usize>>,
    by_relation_literal: HashMap<(RelationId, Literal), Vec<usize>>,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Graph whose relation registry is pre-seeded with `names`, in order.
    pub fn with_relations<S: AsRef<str>>(names: &[S]) -> Self {
        let mut g = Self::new();
        for n in names {
            g.intern_relation(n.as_ref());
        }
        g
    }

    pub fn intern_node(&mut self, iri: &str) -> NodeId {
        if let Some(id) = self.node_ids.get(iri) {
            return *id;
        }
        let id = NodeId(self.node_iris.len() as u32);
        self.node_iris.push(iri.to_string());
        self.node_ids.insert(iri.to_string(), id);
        id
    }

    pub fn intern_relation(&mut self, name: &str) -> RelationId {
        if let Some(id) = self.relation_ids.get(name) {
            return *id;
        }
        let id = RelationId(self.relation_names.len() as u32);
        self.relation_names.push(name.to_string());
        self.relation_ids.insert(name.to_string(), id);
        id
    }

    pub fn node_id(&self, iri: &str) -> Option<NodeId> {
        self.node_ids.get(iri).copied()
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relation_ids.get(name).copied()
    }

    pub fn require_relation(&self, name: &str) -> Result<RelationId, KgError> {
        self.relation_id(name)
            .ok_or_else(|| KgError::UnknownRelation(name.to_string()))
    }

    pub fn node_iri(&self, id: NodeId) -> &str {
        &self.node_iris[id.index()]
    }

    pub fn relation_name(&self, id: RelationId) -> &str {
        &self.relation_names[id.index()]
    }

    pub fn node_count(&self) -> usize {
        self.node_iris.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relation_names.len()
    }

    pub fn relation_names(&self) -> &[String] {
        &self.relation_names
    }

    pub fn node_iris(&self) -> &[String] {
        &self.node_iris
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> impl Iterator<Item = &Triple> + '_ {
        self.triples.iter()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.triples.contains(t)
    }

    /// Inserts a triple, returning `true` if it was not already present.
    pub fn add_triple(
        &mut self,
        subject: NodeId,
        relation: RelationId,
        object: impl Into<Object>,
    ) -> Result<bool, KgError> {
        let object = object.into();
        self.check_node(subject)?;
        if let Object::Node(o) = &object {
            self.check_node(*o)?;
        }
        if relation.index() >= self.relation_names.len() {
            return Err(KgError::UnknownRelation(format!("#{}", relation.0)));
        }
        let triple = Triple {
            subject,
            relation,
            object,
        };
        let (idx, inserted) = self.triples.insert_full(triple);
        if inserted {
            self.index_triple(idx);
        }
        Ok(inserted)
    }

    /// Convenience wrapper: interns IRIs and the relation name, then inserts.
    pub fn add(&mut self, subject: &str, relation: &str, object: &str) -> bool {
        let s = self.intern_node(subject);
        let r = self.intern_relation(relation);
        let o = self.intern_node(object);
        self.add_triple(s, r, o)
            .expect("interned ids are registered")
    }

    pub fn add_literal(&mut self, subject: &str, relation: &str, literal: Literal) -> bool {
        let s = self.intern_node(subject);
        let r = self.intern_relation(relation);
        self.add_triple(s, r, literal)
            .expect("interned ids are registered")
    }

    fn check_node(&self, n: NodeId) -> Result<(), KgError> {
        if n.index() < self.node_iris.len() {
            Ok(())
        } else {
            Err(KgError::UnknownNode(format!("#{}", n.0)))
        }
    }

    fn index_triple(&mut self, idx: usize) {
        let t = &self.triples[idx];
        self.by_subject.entry(t.subject).or_default().push(idx);
        match &t.object {
            Object::Node(o) => self.by_object.entry(*o).or_default().push(idx),
            Object::Literal(l) => self
                .by_relation_literal
                .entry((t.relation, l.clone()))
                .or_default()
                .push(idx),
        }
    }

    fn rebuild_indexes(&mut self) {
        self.by_subject.clear();
        self.by_object.clear();
        self.by_relation_literal.clear();
        for i in 0..self.triples.len() {
            self.index_triple(i);
        }
    }

    /// Keeps only triples satisfying `keep`. Registries are left untouched.
    pub fn retain(&mut self, mut keep: impl FnMut(&Triple) -> bool) {
        self.triples.retain(|t| keep(t));
        self.rebuild_indexes();
    }

    pub fn triple_at(&self, idx: usize) -> &Triple {
        &self.triples[idx]
    }

    pub fn outgoing(&self, s: NodeId) -> impl Iterator<Item = &Triple> + '_ {
        self.by_subject
            .get(&s)
            .into_iter()
            .flatten()
            .map(|&i| &self.triples[i])
    }

    pub fn incoming(&self, o: NodeId) -> impl Iterator<Item = &Triple> + '_ {
        self.by_object
            .get(&o)
            .into_iter()
            .flatten()
            .map(|&i| &self.triples[i])
    }

    pub fn with_relation_literal<'a>(
        &'a self,
        r: RelationId,
        lit: &Literal,
    ) -> impl Iterator<Item = &'a Triple> + 'a {
        self.by_relation_literal
            .get(&(r, lit.clone()))
            .into_iter()
            .flatten()
            .map(|&i| &self.triples[i])
    }

    /// Objects `o` with `(s, r, o)` in the graph.
    pub fn objects(&self, s: NodeId, r: RelationId) -> impl Iterator<Item = &Object> + '_ {
        self.outgoing(s)
            .filter(move |t| t.relation == r)
            .map(|t| &t.object)
    }

    pub fn count_relation(&self, r: RelationId) -> usize {
        self.triples.iter().filter(|t| t.relation == r).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_triple_is_idempotent() {
        let mut g = KnowledgeGraph::with_relations(&["hasColumn"]);
        let n0 = g.intern_node("n0");
        let n1 = g.intern_node("n1");
        let r = g.relation_id("hasColumn").unwrap();
        assert!(g.add_triple(n0, r, n1).unwrap());
        assert_eq!(g.len(), 1);
        assert!(!g.add_triple(n0, r, n1).unwrap());
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn unknown_subject_rejected() {
        let mut g = KnowledgeGraph::with_relations(&["hasColumn"]);
        let n0 = g.intern_node("n0");
        let r = g.relation_id("hasColumn").unwrap();
        let err = g.add_triple(NodeId(7), r, n0).unwrap_err();
        assert!(matches!(err, KgError::UnknownNode(_)));
        assert!(err.to_string().contains("unknown node"));
        let err = g.add_triple(n0, r, NodeId(9)).unwrap_err();
        assert!(matches!(err, KgError::UnknownNode(_)));
    }

    #[test]
    fn ids_are_dense_in_insertion_order() {
        let mut g = KnowledgeGraph::new();
        assert_eq!(g.intern_node("a"), NodeId(0));
        assert_eq!(g.intern_node("b"), NodeId(1));
        assert_eq!(g.intern_node("a"), NodeId(0));
        assert_eq!(g.node_iri(NodeId(1)), "b");
    }

    #[test]
    fn indexes_agree_with_scan_after_retain() {
        let mut g = KnowledgeGraph::new();
        for i in 0..20 {
            g.add(&format!("s{}", i % 4), "p", &format!("o{}", i % 7));
            g.add_literal(&format!("s{}", i % 3), "v", Literal::integer(i % 5));
        }
        let p = g.relation_id("p").unwrap();
        g.retain(|t| !(t.relation == p && t.subject == NodeId(0)));
        for t in g.triples() {
            assert!(g.outgoing(t.subject).any(|u| u == t));
            match &t.object {
                Object::Node(o) => assert!(g.incoming(*o).any(|u| u == t)),
                Object::Literal(l) => {
                    assert!(g.with_relation_literal(t.relation, l).any(|u| u == t))
                }
            }
        }
        let via_index: usize = (0..g.node_count())
            .map(|n| g.outgoing(NodeId(n as u32)).count())
            .sum();
        assert_eq!(via_index, g.len());
    }
}
