mod common;

use proptest::prelude::*;

use rddl_lineage::eval::{hits_at_k, pr_auc};

use common::{hits_oracle, pr_auc_oracle};

/// Scores on a coarse grid so ties are frequent; both labels present.
fn scored() -> impl Strategy<Value = Vec<(f64, bool)>> {
    proptest::collection::vec((0..6u8, any::<bool>()), 2..40).prop_map(|mut v| {
        v[0].1 = true;
        v[1].1 = false;
        v.into_iter().map(|(s, l)| (s as f64 / 5.0, l)).collect()
    })
}

fn split(s: &[(f64, bool)]) -> (Vec<f64>, Vec<f64>) {
    let pos = s.iter().filter(|x| x.1).map(|x| x.0).collect();
    let neg = s.iter().filter(|x| !x.1).map(|x| x.0).collect();
    (pos, neg)
}

proptest! {
    #[test]
    fn pr_auc_matches_definition(s in scored()) {
        let got = pr_auc(&s).unwrap();
        prop_assert!((got - pr_auc_oracle(&s)).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&got));
    }

    #[test]
    fn hits_match_ranking_and_grow_with_k(s in scored()) {
        let (pos, neg) = split(&s);
        let mut prev = 0.0;
        for k in 1..=12 {
            let h = hits_at_k(&pos, &neg, k);
            prop_assert_eq!(h, hits_oracle(&pos, &neg, k));
            prop_assert!(h >= prev);
            prev = h;
        }
    }

    #[test]
    fn metrics_ignore_monotone_rescaling(s in scored()) {
        let t: Vec<(f64, bool)> = s.iter().map(|&(x, l)| ((3.0 * x).exp() - 7.0, l)).collect();
        prop_assert!((pr_auc(&s).unwrap() - pr_auc(&t).unwrap()).abs() <= 1e-12);
        let ((p1, n1), (p2, n2)) = (split(&s), split(&t));
        prop_assert_eq!(hits_at_k(&p1, &n1, 10), hits_at_k(&p2, &n2, 10));
    }
}
