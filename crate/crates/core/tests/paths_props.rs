mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rddl_lineage::kgstore::RelationId;
use rddl_lineage::paths::{
    edge_token, replays, sample_paths, SamplerConfig, WalkGraph, NOPATH, PAD,
};

use common::{random_graph, rng};

fn cfg(seed: u64) -> SamplerConfig {
    SamplerConfig {
        masked_relations: vec![],
        walk_budget: 16,
        max_length: 4,
        seed,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_paths_replay_and_repeat(seed in any::<u64>(), a in 0..8u32, b in 0..8u32) {
        let g = random_graph(&mut rng(seed), 8, 30);
        prop_assume!(g.node_id(&format!("urn:n{a}")).is_some() && g.node_id(&format!("urn:n{b}")).is_some());
        let (src, dst) = (format!("urn:n{a}"), format!("urn:n{b}"));
        let c = cfg(seed);
        let paths = sample_paths(&g, &src, &dst, &c).unwrap();
        prop_assert_eq!(paths.len(), c.num_paths);
        let (s, d) = (g.node_id(&src).unwrap(), g.node_id(&dst).unwrap());
        for p in &paths {
            prop_assert_eq!(p.len(), c.max_length);
            if p[0] != NOPATH {
                prop_assert!(replays(&g, s, d, p), "{:?}", p);
            }
            let len = p.iter().take_while(|&&t| t != PAD).count();
            prop_assert!(p[len..].iter().all(|&t| t == PAD));
        }
        prop_assert_eq!(sample_paths(&g, &src, &dst, &c).unwrap(), paths);
    }

    #[test]
    fn skipped_triple_and_masked_relations_are_never_walked(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let g = random_graph(&mut rng(seed), 6, 30);
        let node_triples: Vec<usize> = (0..g.len()).filter(|&i| g.triple_at(i).object.as_node().is_some()).collect();
        prop_assume!(!node_triples.is_empty());
        let idx = node_triples[pick.index(node_triples.len())];
        let t = g.triple_at(idx).clone();
        let dst = t.object.as_node().unwrap();
        prop_assume!(t.subject != dst);

        let masked = g.relation_name(RelationId(3)).to_string();
        let mut c = cfg(seed);
        c.masked_relations = vec![masked];
        let wg = WalkGraph::new(&g, &c.masked_relations);
        let paths = wg.sample(t.subject, dst, Some(idx), &c, &mut ChaCha8Rng::seed_from_u64(seed));
        let direct = edge_token(t.relation.index(), false);
        let banned = [edge_token(3, false), edge_token(3, true)];
        for p in &paths {
            let steps: Vec<u32> = p.iter().copied().take_while(|&s| s != PAD).collect();
            prop_assert_ne!(&steps, &vec![direct]);
            prop_assert!(steps.iter().all(|s| !banned.contains(s)), "{:?}", steps);
        }
    }
}
