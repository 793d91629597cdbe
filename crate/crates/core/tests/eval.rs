use std::sync::Arc;

use kgenrich::embed::{ModelKind, ModelParams, TrainingConfig};
use kgenrich::eval::{embed_rank, evaluate_embeddings, EvalReport, RankingMode};
use kgenrich::kg::{Dataset, KnowledgeGraph, Triple};
use kgenrich::synthetic::random_graph;
use proptest::prelude::*;

fn dataset(seed: u64) -> Dataset {
    let all = random_graph(15, 3, 80, seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, t) in all.triples().iter().enumerate() {
        if i % 5 == 0 {
            test.push(*t);
        } else {
            train.push(*t);
        }
    }
    Dataset::from_parts(KnowledgeGraph::from_triples(Arc::clone(all.vocab()), train), Vec::new(), test)
}

fn model(data: &Dataset, kind: ModelKind, seed: u64) -> ModelParams {
    let cfg = TrainingConfig {
        dim: 4,
        seed,
        ..TrainingConfig::default()
    };
    ModelParams::init(kind, data.train.entity_count(), data.train.relation_count(), &cfg).unwrap()
}

fn ordered(r: &EvalReport) -> bool {
    0.0 <= r.hits1 && r.hits1 <= r.hits3 && r.hits3 <= r.hits10 && r.hits10 <= 1.0 && r.hits1 <= r.mrr && r.mrr <= 1.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn report_ordering(ranks in prop::collection::vec(prop::option::weighted(0.9, 1usize..100), 1..60)) {
        let r = EvalReport::from_ranks(&ranks, RankingMode::Raw);
        prop_assert!(ordered(&r));
        prop_assert_eq!(r.query_count, ranks.len());
    }

    #[test]
    fn filtered_never_ranks_worse(seed in any::<u64>()) {
        let data = dataset(seed);
        if data.test.is_empty() {
            return Ok(());
        }
        let params = model(&data, ModelKind::TransE, seed);
        let known = data.all_known();
        let n = data.train.entity_count();
        for t in &data.test {
            let (rh, rt) = embed_rank(&params, &known, t, RankingMode::Raw);
            let (fh, ft) = embed_rank(&params, &known, t, RankingMode::Filtered);
            prop_assert!(1 <= fh && fh <= rh && rh <= n);
            prop_assert!(1 <= ft && ft <= rt && rt <= n);
        }
        let raw = evaluate_embeddings(&params, &data, RankingMode::Raw).unwrap();
        let filtered = evaluate_embeddings(&params, &data, RankingMode::Filtered).unwrap();
        prop_assert!(ordered(&raw) && ordered(&filtered));
        prop_assert!(filtered.mrr >= raw.mrr && filtered.hits10 >= raw.hits10);
    }

    #[test]
    fn test_order_does_not_matter(seed in any::<u64>()) {
        let data = dataset(seed);
        if data.test.len() < 2 {
            return Ok(());
        }
        let params = model(&data, ModelKind::DistMult, seed);
        let mut reversed = data.clone();
        reversed.test.reverse();
        let a = evaluate_embeddings(&params, &data, RankingMode::Filtered).unwrap();
        let b = evaluate_embeddings(&params, &reversed, RankingMode::Filtered).unwrap();
        prop_assert_eq!(a.hits1, b.hits1);
        prop_assert_eq!(a.hits10, b.hits10);
        prop_assert!((a.mrr - b.mrr).abs() < 1e-12);
    }
}

#[test]
fn brute_force_rank() {
    let data = dataset(3);
    let params = model(&data, ModelKind::RotatE, 3);
    let known = data.all_known();
    let n = data.train.entity_count() as u32;
    for t in &data.test {
        // strictly better entities, plus equal scores with smaller ids
        let rank = |cand: &dyn Fn(u32) -> Triple, truth: u32, filtered: bool| {
            let s = params.score(&cand(truth));
            1 + (0..n)
                .filter(|&e| e != truth)
                .filter(|&e| !(filtered && known.contains(&cand(e))))
                .filter(|&e| {
                    let x = params.score(&cand(e));
                    x > s || (x == s && e < truth)
                })
                .count()
        };
        let head = |e: u32| Triple::new(kgenrich::kg::EntityId(e), t.relation, t.tail);
        let tail = |e: u32| Triple::new(t.head, t.relation, kgenrich::kg::EntityId(e));
        for (mode, filtered) in [(RankingMode::Raw, false), (RankingMode::Filtered, true)] {
            let got = embed_rank(&params, &known, t, mode);
            assert_eq!(got, (rank(&head, t.head.0, filtered), rank(&tail, t.tail.0, filtered)));
        }
    }
}

#[test]
fn empty_test_set_is_an_error() {
    let data = Dataset::from_parts(random_graph(5, 1, 10, 1), Vec::new(), Vec::new());
    let params = model(&data, ModelKind::TransE, 0);
    assert!(evaluate_embeddings(&params, &data, RankingMode::Raw).is_err());
}
