use std::collections::BTreeMap;

use proptest::prelude::*;

use actpc_chem::beliefs::{entropy, kl, softmax, surprise, OutcomeDistribution, OutcomePattern};
use actpc_chem::metagraph::{apply_rule, rule_distance, tree_edit_distance, Origin, RewriteRule, Term, WorldState};
use actpc_chem::transport::{graph_from_distances, laplacian};

fn atom() -> impl Strategy<Value = String> {
    prop_oneof![Just("A"), Just("B"), Just("C"), Just("0"), Just("1")].prop_map(String::from)
}

fn term() -> impl Strategy<Value = Term> {
    let leaf = atom().prop_map(|a| Term::atom(&a));
    leaf.prop_recursive(3, 12, 3, |inner| {
        (prop_oneof![Just("F"), Just("G")], prop::collection::vec(inner, 1..3))
            .prop_map(|(l, kids)| Term::node(l, kids))
    })
}

fn state() -> impl Strategy<Value = WorldState> {
    prop::collection::btree_map(prop_oneof![Just("P"), Just("Q"), Just("R")], atom(), 1..3).prop_map(|m| {
        WorldState::from_facts(m.into_iter().map(|(l, v)| Term::fact(l, &[&v]))).unwrap()
    })
}

fn rule() -> impl Strategy<Value = RewriteRule> {
    (prop_oneof![Just("P"), Just("Q")], atom(), prop_oneof![Just("Go"), Just("Stop")]).prop_map(|(l, v, a)| {
        RewriteRule::parse(0, &format!("({l} {v}) => ({l} {v}) (Action {a})"), Origin::Seed).unwrap()
    })
}

fn dist(n: usize) -> impl Strategy<Value = OutcomeDistribution> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|w| {
        let masses: BTreeMap<_, _> = w
            .iter()
            .enumerate()
            .map(|(i, &x)| (OutcomePattern::new(&WorldState::parse(&format!("(O {i})")).unwrap()), x))
            .collect();
        OutcomeDistribution::from_masses(masses).unwrap()
    })
}

proptest! {
    #[test]
    fn term_display_parses_back(t in term()) {
        prop_assert_eq!(Term::parse(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn state_display_parses_back(s in state()) {
        prop_assert_eq!(WorldState::parse(&s.to_string()).unwrap(), s);
    }

    #[test]
    fn tree_distance_is_a_metric_on_samples(a in term(), b in term(), c in term()) {
        prop_assert_eq!(tree_edit_distance(&a, &a), 0);
        prop_assert_eq!(tree_edit_distance(&a, &b), tree_edit_distance(&b, &a));
        prop_assert!(tree_edit_distance(&a, &c) <= tree_edit_distance(&a, &b) + tree_edit_distance(&b, &c));
    }

    #[test]
    fn rule_distance_is_symmetric(a in rule(), b in rule()) {
        prop_assert!((rule_distance(&a, &b) - rule_distance(&b, &a)).abs() < 1e-12);
        prop_assert!(rule_distance(&a, &a).abs() < 1e-12);
    }

    #[test]
    fn applied_rule_adds_its_action(r in rule(), s in state()) {
        if let Some(next) = apply_rule(&r, &s) {
            let action = Term::fact("Action", &[r.action().unwrap()]);
            prop_assert!(next.contains(&action));
        }
    }

    #[test]
    fn softmax_is_a_distribution(x in prop::collection::vec(-30.0f64..30.0, 1..12)) {
        let p = softmax(&x);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn kl_is_nonnegative_and_splits_surprise(q in dist(4), p in dist(4)) {
        let d = kl(&q, &p).unwrap();
        prop_assert!(d >= -1e-12);
        prop_assert!((surprise(&q, &p).unwrap() - d - entropy(&q)).abs() < 1e-9);
        prop_assert!(kl(&q, &q).unwrap().abs() < 1e-12);
    }

    #[test]
    fn laplacian_rows_sum_to_zero(
        pts in prop::collection::vec(0.0f64..10.0, 3..8),
        w in prop::collection::vec(0.01f64..1.0, 8),
    ) {
        let n = pts.len();
        let d: Vec<Vec<f64>> = pts.iter().map(|a| pts.iter().map(|b| (a - b).abs()).collect()).collect();
        let g = graph_from_distances(&d, 2, None);
        let total: f64 = w[..n].iter().sum();
        let p: Vec<f64> = w[..n].iter().map(|x| x / total).collect();
        let l = laplacian(&g, &p).unwrap();
        for i in 0..n {
            prop_assert!(l.row(i).sum().abs() < 1e-10);
            prop_assert!((l[(i, (i + 1) % n)] - l[((i + 1) % n, i)]).abs() < 1e-12);
        }
    }
}
