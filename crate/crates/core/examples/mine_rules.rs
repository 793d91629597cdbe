//! Mine closed Horn rules and print them with their quality measures.

use kgenrich::rules::{format_rule, mine_rules, MinerConfig};
use kgenrich::synthetic::toy_world;

fn main() -> kgenrich::Result<()> {
    let kg = toy_world(300, 0.2, 9);
    let config = MinerConfig {
        max_body_atoms: 2,
        min_support: 10,
        ..MinerConfig::default()
    };
    let rules = mine_rules(&kg, &config)?;
    println!("{} rules", rules.len());
    println!("support  hc     std    pca    rule");
    for r in &rules {
        let m = &r.metrics;
        let f = |x: kgenrich::Result<num_rational::Ratio<u64>>| {
            x.map(|q| *q.numer() as f64 / *q.denom() as f64).unwrap_or(0.0)
        };
        println!(
            "{:>7}  {:.3}  {:.3}  {:.3}  {}",
            m.support,
            f(m.head_coverage()),
            f(m.std_confidence()),
            f(m.pca_confidence()),
            format_rule(&r.rule, kg.vocab())
        );
    }
    Ok(())
}
