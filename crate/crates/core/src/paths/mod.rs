//! Edge-type path sampling between node pairs, and the training and
//! evaluation sample sets built from it.
//!
//! A path is a sequence of edge tokens only. Token ids are fixed by the
//! relation registry: `PAD = 0`, `NOPATH = 1`, and relation `r` traversed
//! forward or backward is `2 + 2r` or `3 + 2r`.

mod dataset;
mod io;
mod walk;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kgstore::{KgError, KnowledgeGraph, Literal, NodeId, Object, RDF_TYPE};
use crate::ontology::LINEAGE_PROPERTIES;

pub use dataset::{build_eval_set, build_training_set, row_nodes, EvalSet};
pub use io::{read_samples, read_vocabulary, write_samples, write_vocabulary};
pub use walk::{edge_token, Scratch, WalkGraph};

pub const PAD: u32 = 0;
pub const NOPATH: u32 = 1;

#[derive(Debug, Error)]
pub enum PathError {
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("relation {0:?} is not registered")]
    UnknownRelation(String),
    #[error("only {available} unlinked row pairs exist, {requested} negatives requested")]
    NotEnoughNegatives { available: usize, requested: usize },
    #[error("ground truth has no rowDerivedFrom edges")]
    NoPositives,
    #[error("sample file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Kg(#[from] KgError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WalkBias {
    Uniform,
    /// Weight each step by the inverse degree of the neighbour, so walks
    /// avoid hub vertices.
    InverseDegree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub num_paths: usize,
    /// Maximum edges per path.
    pub max_length: usize,
    /// Walk attempts per node pair.
    pub walk_budget: usize,
    /// Not serialized: run manifests carry one seed for every stage.
    #[serde(skip)]
    pub seed: u64,
    /// Extra edges a walk may take beyond the shortest distance.
    pub detour: usize,
    pub bias: WalkBias,
    /// Relations walks never traverse.
    pub masked_relations: Vec<String>,
    /// Relation-corrupted negatives per training triple.
    pub negatives_per_triple: usize,
    /// Unlinked row pairs added as rowDerivedFrom negatives per
    /// rowDerivedFrom training triple.
    pub row_pair_negatives: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        let mut masked: Vec<String> = LINEAGE_PROPERTIES.iter().map(|s| s.to_string()).collect();
        masked.push(RDF_TYPE.to_string());
        SamplerConfig {
            num_paths: 3,
            max_length: 6,
            walk_budget: 64,
            seed: 0,
            detour: 1,
            bias: WalkBias::InverseDegree,
            masked_relations: masked,
            negatives_per_triple: 1,
            row_pair_negatives: 1,
        }
    }
}

/// Token names for a relation registry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    pub relations: Vec<String>,
}

impl Vocabulary {
    pub fn new(relations: &[String]) -> Self {
        Vocabulary {
            relations: relations.to_vec(),
        }
    }

    pub fn of(g: &KnowledgeGraph) -> Self {
        Self::new(g.relation_names())
    }

    pub fn size(&self) -> usize {
        2 + 2 * self.relations.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    /// `(relation, inverse)` for an edge token, `None` for PAD and NOPATH.
    pub fn decode(&self, token: u32) -> Option<(&str, bool)> {
        let t = token.checked_sub(2)? as usize;
        self.relations.get(t / 2).map(|r| (r.as_str(), t % 2 == 1))
    }
}

/// Model input: `num_paths` token sequences, a target relation and a label.
/// Holds no node identities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathSample {
    pub paths: Vec<Vec<u32>>,
    pub relation: u32,
    pub label: u8,
}

/// Walk-graph vertex: a node, or a literal shared by all its occurrences.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Vertex<'a> {
    Node(NodeId),
    Literal(&'a Literal),
}

/// True when following `tokens` (up to the first PAD) from `src` can end at
/// `dst` in `g`. NOPATH sequences never replay.
pub fn replays(g: &KnowledgeGraph, src: NodeId, dst: NodeId, tokens: &[u32]) -> bool {
    use std::collections::BTreeSet;
    let vocab = Vocabulary::of(g);
    let mut frontier: BTreeSet<Vertex> = BTreeSet::from([Vertex::Node(src)]);
    let steps: Vec<u32> = tokens.iter().copied().take_while(|&t| t != PAD).collect();
    if steps.is_empty() || steps.contains(&NOPATH) {
        return false;
    }
    for t in steps {
        let Some((rel, inverse)) = vocab.decode(t) else {
            return false;
        };
        let Some(r) = g.relation_id(rel) else {
            return false;
        };
        let mut next = BTreeSet::new();
        for v in &frontier {
            match (v, inverse) {
                (Vertex::Node(n), false) => {
                    for o in g.objects(*n, r) {
                        next.insert(match o {
                            Object::Node(o) => Vertex::Node(*o),
                            Object::Literal(l) => Vertex::Literal(l),
                        });
                    }
                }
                (Vertex::Node(n), true) => {
                    for tr in g.incoming(*n).filter(|tr| tr.relation == r) {
                        next.insert(Vertex::Node(tr.subject));
                    }
                }
                (Vertex::Literal(l), true) => {
                    for tr in g.with_relation_literal(r, l) {
                        next.insert(Vertex::Node(tr.subject));
                    }
                }
                (Vertex::Literal(_), false) => {}
            }
        }
        frontier = next;
    }
    frontier.contains(&Vertex::Node(dst))
}

/// Paths between two nodes of `g` by IRI.
pub fn sample_paths(
    g: &KnowledgeGraph,
    src: &str,
    dst: &str,
    cfg: &SamplerConfig,
) -> Result<Vec<Vec<u32>>, PathError> {
    use rand::SeedableRng;
    let id = |iri: &str| {
        g.node_id(iri)
            .ok_or_else(|| PathError::UnknownNode(iri.to_string()))
    };
    let (s, d) = (id(src)?, id(dst)?);
    let wg = WalkGraph::new(g, &cfg.masked_relations);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(wg.sample(s, d, None, cfg, &mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> KnowledgeGraph {
        let mut g = KnowledgeGraph::new();
        g.add("r", "hasCellValue", "x");
        g.add("x", "belongsToColumn", "c");
        g.add("y", "belongsToColumn", "c");
        g.add_literal("x", "exactValue", Literal::integer(3));
        g.add_literal("z", "exactValue", Literal::integer(3));
        g.add("lonely", "hasRow", "other");
        g
    }

    fn cfg() -> SamplerConfig {
        SamplerConfig {
            masked_relations: vec![],
            ..Default::default()
        }
    }

    #[test]
    fn unique_path_repeats() {
        let g = chain();
        let p = sample_paths(&g, "r", "c", &cfg()).unwrap();
        let hc = g.relation_id("hasCellValue").unwrap().index();
        let bc = g.relation_id("belongsToColumn").unwrap().index();
        let want = vec![
            edge_token(hc, false),
            edge_token(bc, false),
            PAD,
            PAD,
            PAD,
            PAD,
        ];
        assert_eq!(p, vec![want.clone(), want.clone(), want]);
    }

    #[test]
    fn inverse_and_literal_hops() {
        let g = chain();
        let p = sample_paths(&g, "y", "z", &cfg()).unwrap();
        let x = g.node_id("y").unwrap();
        let z = g.node_id("z").unwrap();
        assert!(replays(&g, x, z, &p[0]));
        assert_eq!(p[0].iter().filter(|&&t| t != PAD).count(), 4);
    }

    #[test]
    fn disconnected_is_nopath() {
        let g = chain();
        let p = sample_paths(&g, "r", "lonely", &cfg()).unwrap();
        assert_eq!(p, vec![vec![NOPATH, PAD, PAD, PAD, PAD, PAD]; 3]);
        assert!(matches!(
            sample_paths(&g, "r", "nope", &cfg()),
            Err(PathError::UnknownNode(_))
        ));
    }

    #[test]
    fn masked_relations_are_not_walked() {
        let g = chain();
        let c = SamplerConfig {
            masked_relations: vec!["belongsToColumn".into()],
            ..Default::default()
        };
        let p = sample_paths(&g, "r", "c", &c).unwrap();
        assert_eq!(p[0][0], NOPATH);
    }

    #[test]
    fn vocabulary_decoding() {
        let v = Vocabulary::new(&["a".to_string(), "b".to_string()]);
        assert_eq!(v.size(), 6);
        assert_eq!(v.decode(PAD), None);
        assert_eq!(v.decode(NOPATH), None);
        assert_eq!(v.decode(2), Some(("a", false)));
        assert_eq!(v.decode(5), Some(("b", true)));
        assert_eq!(v.decode(6), None);
    }
}
