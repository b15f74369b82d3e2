use betae::beta::{BetaParams, BetaVector};
use betae::kg::EntityId;
use betae::model::{negate, AttentionMode, BetaModel, ModelConfig, QueryEmbedding, UnionMode};
use betae::query::QueryGraph;
use proptest::prelude::*;

const DIM: usize = 4;

fn param() -> impl Strategy<Value = f64> {
    (0.05f64.ln()..20f64.ln()).prop_map(f64::exp)
}

fn embedding() -> impl Strategy<Value = BetaVector> {
    (prop::collection::vec(param(), DIM), prop::collection::vec(param(), DIM))
        .prop_map(|(a, b)| BetaVector::new(a, b).unwrap())
}

fn model(seed: u64, attention: AttentionMode) -> BetaModel {
    let config = ModelConfig { dim: DIM, hidden_dim: 16, attention_hidden: 8, attention, ..ModelConfig::desk() };
    BetaModel::new(config, 10, 3, seed).unwrap()
}

fn attention() -> impl Strategy<Value = AttentionMode> {
    prop_oneof![Just(AttentionMode::Global), Just(AttentionMode::PerDim)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn double_negation_is_identity(e in embedding()) {
        let back = negate(&negate(&e));
        for (x, y) in e.to_flat().iter().zip(back.to_flat()) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs());
        }
    }

    #[test]
    fn intersecting_copies_returns_the_input(e in embedding(), seed in any::<u64>(), att in attention(), m in prop::sample::select(vec![2usize, 3, 5])) {
        let out = model(seed, att).intersect(&vec![e.clone(); m]).unwrap();
        for (x, y) in e.to_flat().iter().zip(out.to_flat()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn intersection_ignores_input_order(
        es in prop::collection::vec(embedding(), 2..6),
        seed in any::<u64>(),
        att in attention(),
        perm_seed in any::<u64>(),
    ) {
        let m = model(seed, att);
        let mut shuffled = es.clone();
        // Fisher-Yates driven by the seed
        let mut s = perm_seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(m.intersect(&es).unwrap(), m.intersect(&shuffled).unwrap());
    }

    #[test]
    fn attention_weights_form_a_distribution(es in prop::collection::vec(embedding(), 2..6), seed in any::<u64>(), att in attention()) {
        let w = model(seed, att).attention_weights(&es).unwrap();
        for c in 0..w[0].len() {
            let total: f64 = w.iter().map(|wi| wi[c]).sum();
            prop_assert!((total - 1.0).abs() <= 1e-9);
            prop_assert!(w.iter().all(|wi| wi[c] >= 0.0));
        }
    }

    #[test]
    fn operators_stay_in_working_range(es in prop::collection::vec(embedding(), 2..4), seed in any::<u64>(), r in 0u32..3) {
        let m = model(seed, AttentionMode::Global);
        prop_assert!(m.intersect(&es).unwrap().in_working_range());
        prop_assert!(m.project(&es[0], r).unwrap().in_working_range());
        prop_assert!(negate(&es[0]).in_working_range());
        prop_assert!(m.project(&negate(&es[1]), r).unwrap().in_working_range());
    }

    #[test]
    fn kl_is_non_negative(a in param(), b in param(), c in param(), d in param()) {
        let p = BetaParams::new(a, b).unwrap();
        prop_assert!(p.kl(&BetaParams::new(c, d).unwrap()) >= -1e-12);
    }

    #[test]
    fn duplicated_union_matches_its_branch(seed in any::<u64>(), v in 0u32..10, r in 0u32..3, s in 0u32..3) {
        let m = model(seed, AttentionMode::Global);
        let a = QueryGraph::anchor(v).project(r).project(s);
        let doubled = QueryGraph::or(vec![a.clone(), a.clone()]);
        let (QueryEmbedding::Single(x), QueryEmbedding::Single(y)) =
            (m.embed_query(&a, UnionMode::Dm).unwrap(), m.embed_query(&doubled, UnionMode::Dm).unwrap())
        else {
            panic!("De Morgan mode yields one embedding");
        };
        for (p, q) in x.to_flat().iter().zip(y.to_flat()) {
            prop_assert!((p - q).abs() <= 1e-12 * p.abs());
        }
        let e = EntityId(v);
        prop_assert_eq!(m.score_union_dnf(e, std::slice::from_ref(&x)).unwrap(), m.distance(e, &x).unwrap());
    }
}
