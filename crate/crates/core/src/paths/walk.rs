use std::collections::{HashMap, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{SamplerConfig, WalkBias, NOPATH, PAD};
use crate::kgstore::{KnowledgeGraph, Literal, NodeId, Object};

const UNREACHED: u8 = u8::MAX;

/// Token for traversing relation `rel` forward or against its direction.
pub fn edge_token(rel: usize, inverse: bool) -> u32 {
    2 + 2 * rel as u32 + inverse as u32
}

#[derive(Debug, Clone, Copy)]
struct Arc {
    to: u32,
    token: u32,
    triple: u32,
}

/// Undirected view of a graph for path sampling. Graph nodes keep their
/// `NodeId` index as vertex id; literals become extra vertices, one per
/// `(relation, literal)`, so a value links the triples of one property but
/// a boolean cell never meets an `isNullable` flag. Arcs are ordered by
/// `(token, neighbour label)`, so walks depend on graph content only, not on
/// insertion order.
#[derive(Debug, Clone)]
pub struct WalkGraph {
    offsets: Vec<usize>,
    arcs: Vec<Arc>,
    vertices: usize,
}

impl WalkGraph {
    /// Builds the walk graph, leaving out triples whose relation name is in
    /// `masked`.
    pub fn new(g: &KnowledgeGraph, masked: &[String]) -> Self {
        let n = g.node_count();
        let masked_ids: Vec<usize> = masked
            .iter()
            .filter_map(|m| g.relation_id(m))
            .map(|r| r.index())
            .collect();
        let mut literal_ids: HashMap<(usize, &Literal), u32> = HashMap::new();
        let mut labels: Vec<&str> = g.node_iris().iter().map(String::as_str).collect();
        let mut lists: Vec<Vec<Arc>> = vec![Vec::new(); n];
        for (idx, t) in g.triples().enumerate() {
            let rel = t.relation.index();
            if masked_ids.contains(&rel) {
                continue;
            }
            let o = match &t.object {
                Object::Node(o) => o.index() as u32,
                Object::Literal(l) => *literal_ids.entry((rel, l)).or_insert_with(|| {
                    lists.push(Vec::new());
                    labels.push(l.lexical());
                    (lists.len() - 1) as u32
                }),
            };
            let s = t.subject.index() as u32;
            lists[s as usize].push(Arc {
                to: o,
                token: edge_token(rel, false),
                triple: idx as u32,
            });
            lists[o as usize].push(Arc {
                to: s,
                token: edge_token(rel, true),
                triple: idx as u32,
            });
        }
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut arcs = Vec::new();
        offsets.push(0);
        for mut l in lists {
            l.sort_by(|a, b| {
                a.token
                    .cmp(&b.token)
                    .then_with(|| labels[a.to as usize].cmp(labels[b.to as usize]))
                    .then_with(|| a.triple.cmp(&b.triple))
            });
            arcs.extend(l);
            offsets.push(arcs.len());
        }
        WalkGraph {
            vertices: offsets.len() - 1,
            offsets,
            arcs,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    fn arcs(&self, v: u32) -> &[Arc] {
        &self.arcs[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    fn degree(&self, v: u32) -> usize {
        self.offsets[v as usize + 1] - self.offsets[v as usize]
    }

    /// Hop distances to `dst`, capped at `limit`, ignoring triple `skip`.
    fn distances(&self, dst: u32, limit: usize, skip: Option<u32>, dist: &mut Vec<u8>) {
        dist.clear();
        dist.resize(self.vertices, UNREACHED);
        dist[dst as usize] = 0;
        let mut queue = VecDeque::from([dst]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v as usize];
            if d as usize >= limit {
                continue;
            }
            for a in self.arcs(v) {
                if Some(a.triple) != skip && dist[a.to as usize] == UNREACHED {
                    dist[a.to as usize] = d + 1;
                    queue.push_back(a.to);
                }
            }
        }
    }

    /// Up to `cfg.num_paths` distinct token sequences of walks from `src` to
    /// `dst`, each padded to `cfg.max_length`. `skip` names a triple (by its
    /// index in the source graph) the walks may not use.
    ///
    /// A walk steps only to unvisited neighbours from which `dst` is still
    /// reachable within the remaining length budget, where the budget is the
    /// shortest distance plus `cfg.detour`, capped at `cfg.max_length`.
    /// Dead ends restart the walk. All `cfg.walk_budget` walks are run; the
    /// shortest distinct token sequences are kept, ordered by length and
    /// then token ids.
    pub fn sample(
        &self,
        src: NodeId,
        dst: NodeId,
        skip: Option<usize>,
        cfg: &SamplerConfig,
        rng: &mut ChaCha8Rng,
    ) -> Vec<Vec<u32>> {
        let mut dist = Vec::new();
        self.sample_with(
            src.index() as u32,
            dst.index() as u32,
            skip,
            cfg,
            rng,
            &mut dist,
        )
    }

    fn sample_with(
        &self,
        src: u32,
        dst: u32,
        skip: Option<usize>,
        cfg: &SamplerConfig,
        rng: &mut ChaCha8Rng,
        dist: &mut Vec<u8>,
    ) -> Vec<Vec<u32>> {
        let skip = skip.map(|s| s as u32);
        let mut found: Vec<Vec<u32>> = Vec::new();
        if src != dst && (src as usize) < self.vertices && (dst as usize) < self.vertices {
            self.distances(dst, cfg.max_length, skip, dist);
            let shortest = dist[src as usize];
            if shortest != UNREACHED {
                let budget = (shortest as usize + cfg.detour).min(cfg.max_length);
                for _ in 0..cfg.walk_budget {
                    if let Some(p) = self.walk(src, dst, skip, budget, cfg.bias, dist, rng) {
                        if !found.contains(&p) {
                            found.push(p);
                        }
                    }
                }
                found.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
                found.truncate(cfg.num_paths);
            }
        }
        finish(found, cfg)
    }

    #[allow(clippy::too_many_arguments)]
    fn walk(
        &self,
        src: u32,
        dst: u32,
        skip: Option<u32>,
        budget: usize,
        bias: WalkBias,
        dist: &[u8],
        rng: &mut ChaCha8Rng,
    ) -> Option<Vec<u32>> {
        let mut visited = vec![src];
        let mut tokens = Vec::with_capacity(budget);
        let mut cur = src;
        while cur != dst {
            let remaining = budget - tokens.len();
            if remaining == 0 {
                return None;
            }
            let admissible = |a: &Arc| {
                Some(a.triple) != skip
                    && (dist[a.to as usize] as usize) < remaining
                    && !visited.contains(&a.to)
            };
            let arcs = self.arcs(cur);
            // Weighted reservoir choice over admissible arcs.
            let mut total = 0.0;
            let mut chosen = None;
            for a in arcs.iter().filter(|a| admissible(a)) {
                let w = match bias {
                    WalkBias::Uniform => 1.0,
                    WalkBias::InverseDegree => 1.0 / self.degree(a.to) as f64,
                };
                total += w;
                if rng.random::<f64>() * total < w {
                    chosen = Some(*a);
                }
            }
            let a = chosen?;
            tokens.push(a.token);
            visited.push(a.to);
            cur = a.to;
        }
        Some(tokens)
    }
}

fn finish(found: Vec<Vec<u32>>, cfg: &SamplerConfig) -> Vec<Vec<u32>> {
    let pad = |mut p: Vec<u32>| {
        p.truncate(cfg.max_length);
        p.resize(cfg.max_length, PAD);
        p
    };
    if found.is_empty() {
        return vec![pad(vec![NOPATH]); cfg.num_paths];
    }
    (0..cfg.num_paths)
        .map(|i| pad(found[i % found.len()].clone()))
        .collect()
}

/// Reusable per-thread scratch space for repeated sampling.
#[derive(Debug, Default)]
pub struct Scratch {
    dist: Vec<u8>,
}

impl WalkGraph {
    pub fn sample_scratch(
        &self,
        src: NodeId,
        dst: NodeId,
        skip: Option<usize>,
        cfg: &SamplerConfig,
        rng: &mut ChaCha8Rng,
        scratch: &mut Scratch,
    ) -> Vec<Vec<u32>> {
        self.sample_with(
            src.index() as u32,
            dst.index() as u32,
            skip,
            cfg,
            rng,
            &mut scratch.dist,
        )
    }
}
