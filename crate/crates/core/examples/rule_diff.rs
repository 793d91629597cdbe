//! Mine before and after enrichment and compare the two rule sets.

use kgenrich::analysis::{diff_rules, summarize_confidence};
use kgenrich::embed::{train, ModelKind, ModelParams, TrainingConfig};
use kgenrich::linkpred::{enrich, EnrichmentConfig};
use kgenrich::pipeline::rule_rows;
use kgenrich::rules::{format_rule, mine_rules, MinerConfig};
use kgenrich::synthetic::toy_world;

fn main() -> kgenrich::Result<()> {
    let kg = toy_world(250, 0.4, 5);
    let vocab = kg.vocab().clone();
    let training = TrainingConfig {
        dim: 24,
        epochs: 80,
        batch_size: 128,
        seed: 8,
        ..TrainingConfig::default()
    };
    let mut params = ModelParams::init(ModelKind::TransE, kg.entity_count(), kg.relation_count(), &training)?;
    train(&mut params, &kg, &training)?;
    let enriched = enrich(
        &kg,
        &params,
        &EnrichmentConfig {
            sample_entities: 120,
            top_k: 150,
            seed: 3,
            ..EnrichmentConfig::default()
        },
    )?
    .enriched;

    let miner = MinerConfig {
        min_support: 5,
        ..MinerConfig::default()
    };
    let before = rule_rows(&mine_rules(&kg, &miner)?);
    let after = rule_rows(&mine_rules(&enriched, &miner)?);
    let diff = diff_rules(&before, &after, &vocab);
    assert!(diff.identities_hold());

    for (name, rows) in [("new", &diff.new_rules), ("dropped", &diff.dropped)] {
        println!("{name}:");
        for row in rows {
            println!("  {}", format_rule(&row.rule, &vocab));
        }
    }
    print!("{}", summarize_confidence(&diff, &kg, &enriched, miner.match_options())?);
    Ok(())
}
