//! Hits@k and MRR for an embedding model and for mined rules on the same
//! held-out triples, raw and filtered.

use std::sync::Arc;

use kgenrich::embed::{train, ModelKind, ModelParams, TrainingConfig};
use kgenrich::eval::{evaluate_embeddings, evaluate_rules, RankingMode};
use kgenrich::kg::{Dataset, KnowledgeGraph};
use kgenrich::rules::{mine_rules, MinerConfig};
use kgenrich::synthetic::toy_world;

fn main() -> kgenrich::Result<()> {
    let all = toy_world(200, 0.0, 21);
    let (test, train_part): (Vec<_>, Vec<_>) = all
        .triples()
        .iter()
        .enumerate()
        .partition(|(i, t)| i % 10 == 0 && all.vocab().relation_label(t.relation) == "nationality");
    let train_kg = KnowledgeGraph::from_triples(Arc::clone(all.vocab()), train_part.into_iter().map(|(_, t)| *t));
    let data = Dataset::from_parts(train_kg, Vec::new(), test.into_iter().map(|(_, t)| *t).collect());
    println!("train {} / test {}", data.train.len(), data.test.len());

    let training = TrainingConfig {
        dim: 24,
        epochs: 100,
        batch_size: 128,
        seed: 1,
        ..TrainingConfig::default()
    };
    let mut params = ModelParams::init(ModelKind::RotatE, data.train.entity_count(), data.train.relation_count(), &training)?;
    train(&mut params, &data.train, &training)?;

    let miner = MinerConfig::default();
    let rules = mine_rules(&data.train, &miner)?;

    for mode in [RankingMode::Raw, RankingMode::Filtered] {
        println!("-- RotatE, {mode}\n{}", evaluate_embeddings(&params, &data, mode)?);
        println!(
            "-- {} rules, {mode}\n{}",
            rules.len(),
            evaluate_rules(&rules, &data.train, &data, mode, miner.match_options())?
        );
    }
    Ok(())
}
