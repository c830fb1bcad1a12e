mod common;

use proptest::prelude::*;

use rddl_lineage::kgstore::{
    match_pattern, parse_ntriples, serialize_ntriples, KnowledgeGraph, Literal,
};

use common::{match_oracle, random_conjunction, random_graph, rng};

fn literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        any::<String>().prop_map(Literal::string),
        "[a-z\"\\\\\n\r\t ]{0,8}".prop_map(Literal::string),
        any::<i64>().prop_map(Literal::integer),
        any::<bool>().prop_map(Literal::boolean),
        (-1e9f64..1e9).prop_map(|v| Literal::decimal(v).unwrap()),
    ]
}

fn graph() -> impl Strategy<Value = KnowledgeGraph> {
    let edge = (0..8u8, 0..4u8, 0..8u8, proptest::option::of(literal()));
    proptest::collection::vec(edge, 0..40).prop_map(|edges| {
        let mut g = KnowledgeGraph::new();
        for (s, r, o, lit) in edges {
            let (s, r) = (format!("urn:x:n{s}"), format!("rel{r}"));
            match lit {
                Some(l) => g.add_literal(&s, &r, l),
                None => g.add(&s, &r, &format!("urn:x:n{o}")),
            };
        }
        g
    })
}

proptest! {
    #[test]
    fn ntriples_round_trip(g in graph()) {
        let text = serialize_ntriples(&g);
        let back = parse_ntriples(&text).unwrap();
        prop_assert_eq!(back.len(), g.len());
        prop_assert_eq!(serialize_ntriples(&back), text);
    }

    #[test]
    fn matcher_agrees_with_enumeration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, 6, 40);
        let conj = random_conjunction(&mut r, &g);
        prop_assert_eq!(match_pattern(&g, &conj), match_oracle(&g, &conj));
    }
}
