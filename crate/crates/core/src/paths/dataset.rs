use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{PathError, PathSample, SamplerConfig, Scratch, WalkGraph};
use crate::convert::GroundTruthEdge;
use crate::kgstore::{KnowledgeGraph, NodeId, RDF_TYPE};
use crate::ontology::Namespace;

const ROW_DERIVED_FROM: &str = "rowDerivedFrom";

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Nodes typed with a `Row` class, sorted by IRI.
pub fn row_nodes(g: &KnowledgeGraph) -> Vec<NodeId> {
    let Some(ty) = g.relation_id(RDF_TYPE) else {
        return Vec::new();
    };
    let mut rows: Vec<NodeId> = g
        .triples()
        .filter(|t| t.relation == ty)
        .filter(|t| {
            t.object
                .as_node()
                .and_then(|c| Namespace::class_of(g.node_iri(c)))
                == Some("Row")
        })
        .map(|t| t.subject)
        .collect();
    rows.sort_by(|a, b| g.node_iri(*a).cmp(g.node_iri(*b)));
    rows.dedup();
    rows
}

/// Positive and relation-corrupted samples for every node-to-node triple of
/// `g`. Triples are visited in `(subject, relation, object)` IRI order and
/// each draws from its own generator stream, so the output depends only on
/// graph content and seed.
///
/// With `row_pair_negatives > 0`, every rowDerivedFrom triple also yields
/// that many unlinked row pairs labelled 0 for rowDerivedFrom.
pub fn build_training_set(
    g: &KnowledgeGraph,
    cfg: &SamplerConfig,
) -> Result<Vec<PathSample>, PathError> {
    let wg = WalkGraph::new(g, &cfg.masked_relations);
    let n_rel = g.relation_count() as u32;
    let mut triples: Vec<(usize, NodeId, u32, NodeId)> = g
        .triples()
        .enumerate()
        .filter_map(|(i, t)| Some((i, t.subject, t.relation.0, t.object.as_node()?)))
        .collect();
    triples.sort_by(|a, b| {
        g.node_iri(a.1)
            .cmp(g.node_iri(b.1))
            .then_with(|| g.relation_names()[a.2 as usize].cmp(&g.relation_names()[b.2 as usize]))
            .then_with(|| g.node_iri(a.3).cmp(g.node_iri(b.3)))
    });

    let row_rel = g.relation_id(ROW_DERIVED_FROM).map(|r| r.0);
    let rows = if cfg.row_pair_negatives > 0 {
        row_nodes(g)
    } else {
        Vec::new()
    };
    let linked: HashSet<(NodeId, NodeId)> = triples
        .iter()
        .filter(|t| Some(t.2) == row_rel)
        .map(|t| (t.1, t.3))
        .collect();
    let unlinked_exists = rows.len() > 1 && linked.len() < rows.len() * (rows.len() - 1);

    let per_triple: Vec<Vec<PathSample>> = triples
        .par_iter()
        .enumerate()
        .map_init(Scratch::default, |scratch, (k, &(idx, s, r, o))| {
            let mut rng = rng_for(cfg.seed, k as u64);
            let paths = wg.sample_scratch(s, o, Some(idx), cfg, &mut rng, scratch);
            let mut out = Vec::with_capacity(1 + cfg.negatives_per_triple);
            if n_rel > 1 {
                for _ in 0..cfg.negatives_per_triple {
                    let mut neg = rng.random_range(0..n_rel - 1);
                    if neg >= r {
                        neg += 1;
                    }
                    out.push(PathSample {
                        paths: paths.clone(),
                        relation: neg,
                        label: 0,
                    });
                }
            }
            if Some(r) == row_rel && unlinked_exists {
                for _ in 0..cfg.row_pair_negatives {
                    let (a, b) = loop {
                        let a = rows[rng.random_range(0..rows.len())];
                        let b = rows[rng.random_range(0..rows.len())];
                        if a != b && !linked.contains(&(a, b)) {
                            break (a, b);
                        }
                    };
                    out.push(PathSample {
                        paths: wg.sample_scratch(a, b, None, cfg, &mut rng, scratch),
                        relation: r,
                        label: 0,
                    });
                }
            }
            out.insert(
                0,
                PathSample {
                    paths,
                    relation: r,
                    label: 1,
                },
            );
            out
        })
        .collect();
    Ok(per_triple.into_iter().flatten().collect())
}

/// Evaluation samples with the node pairs they came from. The pairs are for
/// reporting only and never reach the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalSet {
    pub positives: Vec<PathSample>,
    pub negatives: Vec<PathSample>,
    /// `(derived row, source row)` IRIs per positive.
    pub positive_pairs: Vec<(String, String)>,
    pub negative_pairs: Vec<(String, String)>,
}

/// One positive per withheld rowDerivedFrom edge and `negatives` distinct
/// uniformly drawn ordered row pairs not linked in the ground truth.
pub fn build_eval_set(
    g: &KnowledgeGraph,
    ground_truth: &[GroundTruthEdge],
    negatives: usize,
    cfg: &SamplerConfig,
) -> Result<EvalSet, PathError> {
    let rel = g
        .relation_id(ROW_DERIVED_FROM)
        .ok_or_else(|| PathError::UnknownRelation(ROW_DERIVED_FROM.into()))?;
    let node = |iri: &str| {
        g.node_id(iri)
            .ok_or_else(|| PathError::UnknownNode(iri.to_string()))
    };
    let mut pos_pairs = Vec::new();
    for e in ground_truth
        .iter()
        .filter(|e| e.relation == ROW_DERIVED_FROM)
    {
        pos_pairs.push((node(&e.subject)?, node(&e.object)?));
    }
    pos_pairs.sort_by(|a, b| {
        (g.node_iri(a.0), g.node_iri(a.1)).cmp(&(g.node_iri(b.0), g.node_iri(b.1)))
    });
    pos_pairs.dedup();
    if pos_pairs.is_empty() {
        return Err(PathError::NoPositives);
    }
    let linked: HashSet<(NodeId, NodeId)> = pos_pairs.iter().copied().collect();

    let rows = row_nodes(g);
    let n = rows.len();
    let available = (n * n.saturating_sub(1)).saturating_sub(
        linked
            .iter()
            .filter(|(a, b)| rows.contains(a) && rows.contains(b))
            .count(),
    );
    if available < negatives {
        return Err(PathError::NotEnoughNegatives {
            available,
            requested: negatives,
        });
    }
    let mut rng = rng_for(cfg.seed, u64::MAX);
    let neg_pairs: Vec<(NodeId, NodeId)> = if negatives * 4 >= available {
        let mut all: Vec<(NodeId, NodeId)> = rows
            .iter()
            .flat_map(|&a| rows.iter().map(move |&b| (a, b)))
            .filter(|&(a, b)| a != b && !linked.contains(&(a, b)))
            .collect();
        all.shuffle(&mut rng);
        all.truncate(negatives);
        all
    } else {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(negatives);
        while out.len() < negatives {
            let a = rows[rng.random_range(0..n)];
            let b = rows[rng.random_range(0..n)];
            if a != b && !linked.contains(&(a, b)) && seen.insert((a, b)) {
                out.push((a, b));
            }
        }
        out
    };

    let wg = WalkGraph::new(g, &cfg.masked_relations);
    let sample = |pairs: &[(NodeId, NodeId)], label: u8, offset: u64| -> Vec<PathSample> {
        pairs
            .par_iter()
            .enumerate()
            .map_init(Scratch::default, |scratch, (k, &(s, o))| {
                let mut rng = rng_for(cfg.seed, offset + k as u64);
                PathSample {
                    paths: wg.sample_scratch(s, o, None, cfg, &mut rng, scratch),
                    relation: rel.0,
                    label,
                }
            })
            .collect()
    };
    let iri_pairs = |pairs: &[(NodeId, NodeId)]| {
        pairs
            .iter()
            .map(|&(a, b)| (g.node_iri(a).to_string(), g.node_iri(b).to_string()))
            .collect()
    };
    Ok(EvalSet {
        positives: sample(&pos_pairs, 1, 1 << 40),
        negatives: sample(&neg_pairs, 0, 1 << 41),
        positive_pairs: iri_pairs(&pos_pairs),
        negative_pairs: iri_pairs(&neg_pairs),
    })
}
