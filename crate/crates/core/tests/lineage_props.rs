mod common;

use proptest::prelude::*;

use rddl_lineage::convert::{populate_kg, resolve_lineage, ConvertConfig, ConvertError};
use rddl_lineage::kgstore::KnowledgeGraph;
use rddl_lineage::ontology::ProfileName;

use common::{resolved_row_edges, row_lineage_oracle, synthetic_lineage_case};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn row_edges_are_the_value_join(seed in any::<u64>(), rddl in any::<bool>()) {
        let profile = if rddl { ProfileName::Rddl } else { ProfileName::Baseline };
        let cfg = ConvertConfig::new(profile, "p");
        let (db, tuples) = synthetic_lineage_case(seed);
        prop_assert_eq!(resolved_row_edges(&db, &tuples, &cfg), row_lineage_oracle(&db, &tuples, &cfg));
    }

    #[test]
    fn strict_mode_rejects_exactly_the_ambiguous_cases(seed in any::<u64>()) {
        let cfg = ConvertConfig { strict: true, ..ConvertConfig::new(ProfileName::Rddl, "p") };
        let (db, tuples) = synthetic_lineage_case(seed);
        let single = tuples.iter().all(|t| row_lineage_oracle(&db, std::slice::from_ref(t), &cfg).len() == 1);
        let mut g = KnowledgeGraph::new();
        populate_kg(&mut g, &db, &cfg).unwrap();
        match resolve_lineage(&mut g, &tuples, &cfg) {
            Ok(_) => prop_assert!(single),
            Err(ConvertError::Ambiguous { .. }) => prop_assert!(!single),
            Err(e) => prop_assert!(false, "{}", e),
        }
    }
}
