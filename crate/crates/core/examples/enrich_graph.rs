//! Train TransE on a graph with missing `r3` facts, then add the best
//! scoring candidate triples for `r3`.

use kgenrich::embed::{train, ModelKind, ModelParams, TrainingConfig};
use kgenrich::linkpred::{enrich, EnrichmentConfig};
use kgenrich::synthetic::composition_graph;

fn main() -> kgenrich::Result<()> {
    let kg = composition_graph(100, 40, 1);
    let vocab = kg.vocab().clone();
    let training = TrainingConfig {
        dim: 32,
        epochs: 150,
        batch_size: 64,
        seed: 2,
        ..TrainingConfig::default()
    };
    let mut params = ModelParams::init(ModelKind::TransE, kg.entity_count(), kg.relation_count(), &training)?;
    train(&mut params, &kg, &training)?;

    let config = EnrichmentConfig {
        target_relations: vec![vocab.relation_id("r3").unwrap()],
        sample_entities: 140,
        top_k: 20,
        seed: 4,
        ..EnrichmentConfig::default()
    };
    let result = enrich(&kg, &params, &config)?;
    println!("{} -> {} triples", kg.len(), result.enriched.len());
    for s in &result.added {
        let t = s.triple;
        println!(
            "{:>8.4}  {} {} {}",
            s.score,
            vocab.entity_label(t.head),
            vocab.relation_label(t.relation),
            vocab.entity_label(t.tail)
        );
    }
    Ok(())
}
