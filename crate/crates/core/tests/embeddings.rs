use kgenrich::embed::{
    corrupt, gradient, load_model, loss_batch, save_model, train, ModelKind, ModelParams, TrainingConfig,
};
use kgenrich::kg::Triple;
use kgenrich::synthetic::random_graph;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn kind() -> impl Strategy<Value = ModelKind> {
    prop_oneof![Just(ModelKind::TransE), Just(ModelKind::DistMult), Just(ModelKind::RotatE)]
}

fn config(dim: usize, seed: u64) -> TrainingConfig {
    TrainingConfig {
        dim,
        epochs: 3,
        batch_size: 16,
        seed,
        ..TrainingConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn checkpoint_round_trip(kind in kind(), dim in 1usize..8, seed in any::<u64>(), hash in any::<u64>()) {
        let kg = random_graph(9, 3, 20, seed);
        let mut params = ModelParams::init(kind, kg.entity_count(), kg.relation_count(), &config(dim, seed)).unwrap();
        train(&mut params, &kg, &config(dim, seed)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        save_model(&path, &params, hash).unwrap();
        let back = load_model(&path, kind, kg.entity_count(), kg.relation_count()).unwrap();
        prop_assert_eq!(back, params);
    }

    #[test]
    fn training_is_seeded(kind in kind(), seed in any::<u64>()) {
        let kg = random_graph(10, 2, 30, seed);
        let run = || {
            let cfg = config(4, seed);
            let mut p = ModelParams::init(kind, kg.entity_count(), kg.relation_count(), &cfg).unwrap();
            let trace = train(&mut p, &kg, &cfg).unwrap();
            (p, trace)
        };
        let (a, ta) = run();
        let (b, tb) = run();
        prop_assert_eq!(a, b);
        prop_assert_eq!(ta, tb);
    }

    #[test]
    fn loss_is_non_negative_and_matches_gradient_loss(kind in kind(), seed in any::<u64>(), margin in 0.1f64..3.0) {
        let kg = random_graph(10, 3, 25, seed);
        let params = ModelParams::init(kind, kg.entity_count(), kg.relation_count(), &config(5, seed)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pos: Vec<Triple> = kg.triples().to_vec();
        let neg: Vec<Triple> = pos.iter().map(|p| corrupt(&kg, p, &mut rng).triple).collect();
        let l = loss_batch(&params, &pos, &neg, margin).unwrap();
        let (lg, _) = gradient(&params, &pos, &neg, margin).unwrap();
        prop_assert!(l >= 0.0);
        prop_assert!((l - lg).abs() <= 1e-9 * l.abs().max(1.0));
    }

    #[test]
    fn corruption_changes_one_side(seed in any::<u64>()) {
        let kg = random_graph(15, 2, 40, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in kg.triples() {
            let c = corrupt(&kg, p, &mut rng);
            prop_assert_eq!(c.triple.relation, p.relation);
            prop_assert!((c.triple.head == p.head) != (c.triple.tail == p.tail));
            prop_assert!(c.fallback || !kg.contains(&c.triple));
        }
    }
}

#[test]
fn loss_drops_with_training() {
    let kg = random_graph(40, 3, 150, 3);
    for kind in [ModelKind::TransE, ModelKind::DistMult, ModelKind::RotatE] {
        let cfg = TrainingConfig {
            dim: 16,
            epochs: 40,
            batch_size: 32,
            seed: 1,
            ..TrainingConfig::default()
        };
        let mut p = ModelParams::init(kind, kg.entity_count(), kg.relation_count(), &cfg).unwrap();
        let trace = train(&mut p, &kg, &cfg).unwrap();
        let first = trace.epochs.first().unwrap().loss;
        let last = trace.epochs.last().unwrap().loss;
        assert!(last < first, "{kind}: {first} -> {last}");
    }
}

#[test]
fn loading_checks_shape() {
    let cfg = config(4, 0);
    let p = ModelParams::init(ModelKind::TransE, 5, 2, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bin");
    save_model(&path, &p, 0).unwrap();
    assert!(load_model(&path, ModelKind::RotatE, 5, 2).is_err());
    assert!(load_model(&path, ModelKind::TransE, 6, 2).is_err());
    assert!(load_model(&path, ModelKind::TransE, 5, 2).is_ok());
    std::fs::write(&path, b"garbage").unwrap();
    assert!(load_model(&path, ModelKind::TransE, 5, 2).is_err());
}
