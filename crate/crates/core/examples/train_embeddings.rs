//! Train all three embedding models on the same small graph and compare
//! how well they separate true triples from corrupted ones.

use kgenrich::embed::{negative_sample, train, ModelKind, ModelParams, TrainingConfig};
use kgenrich::synthetic::toy_world;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kgenrich::Result<()> {
    let kg = toy_world(150, 0.1, 3);
    let config = TrainingConfig {
        dim: 16,
        epochs: 60,
        batch_size: 128,
        seed: 11,
        ..TrainingConfig::default()
    };

    for kind in [ModelKind::TransE, ModelKind::DistMult, ModelKind::RotatE] {
        let mut params = ModelParams::init(kind, kg.entity_count(), kg.relation_count(), &config)?;
        let trace = train(&mut params, &kg, &config)?;
        let first = trace.epochs.first().map_or(f64::NAN, |e| e.loss);
        let last = trace.epochs.last().map_or(f64::NAN, |e| e.loss);

        // fraction of positives scored above a random corruption
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let wins = kg
            .triples()
            .iter()
            .filter(|t| params.score(t) > params.score(&negative_sample(&kg, t, &mut rng)))
            .count();
        println!(
            "{kind:<8} loss {first:>9.3} -> {last:>9.3}   positive > negative on {:.1}% of triples",
            100.0 * wins as f64 / kg.len() as f64
        );
    }
    Ok(())
}
