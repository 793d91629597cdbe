mod common;

use kgenrich::kg::KnowledgeGraph;
use kgenrich::rules::{mine_rules, MatchOptions, MinerConfig, RuleEvaluator};
use kgenrich::synthetic::{random_graph, toy_world};
use num_rational::Ratio;
use proptest::prelude::*;

fn graph() -> impl Strategy<Value = KnowledgeGraph> {
    (2usize..=7, 1usize..=4, 1usize..=40, any::<u64>()).prop_map(|(e, r, t, s)| random_graph(e, r, t, s))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn metrics_match_nested_loops(kg in graph(), distinct in any::<bool>()) {
        let opts = MatchOptions { distinct_bindings: distinct };
        let evaluator = RuleEvaluator::new(&kg, opts);
        for rule in common::closed_rules(kg.relation_count()) {
            let m = evaluator.evaluate(&rule).unwrap();
            let o = common::oracle(&kg, &rule, distinct);
            prop_assert_eq!(m.support, o.support, "{:?}", rule);
            prop_assert_eq!(m.body_size, o.body_size, "{:?}", rule);
            prop_assert_eq!(m.std_confidence().ok(), o.std_confidence, "{:?}", rule);
            prop_assert_eq!(m.pca_confidence().ok(), o.pca_confidence, "{:?}", rule);
        }
    }

    #[test]
    fn confidence_bounds(kg in graph()) {
        let evaluator = RuleEvaluator::new(&kg, MatchOptions::default());
        for rule in common::closed_rules(kg.relation_count()) {
            let m = evaluator.evaluate(&rule).unwrap();
            prop_assert!(m.support <= m.body_size);
            prop_assert!(m.support <= m.head_size);
            prop_assert!(m.pca_body_size <= m.body_size);
            if let (Ok(std), Ok(pca)) = (m.std_confidence(), m.pca_confidence()) {
                prop_assert!(std <= pca && pca <= Ratio::from_integer(1));
            }
        }
    }

    #[test]
    fn mined_rules_are_closed_and_pass_thresholds(kg in graph()) {
        let cfg = MinerConfig { min_support: 1, min_head_coverage: 0.0, min_pca_confidence: 0.0, ..MinerConfig::default() };
        let rules = mine_rules(&kg, &cfg).unwrap();
        let evaluator = RuleEvaluator::new(&kg, cfg.match_options());
        for s in &rules {
            prop_assert!(s.rule.is_closed() && s.rule.is_horn());
            prop_assert!(s.rule.body.len() <= cfg.max_body_atoms);
            prop_assert!(s.metrics.support >= 1);
            prop_assert_eq!(evaluator.evaluate(&s.rule).unwrap(), s.metrics);
        }
    }
}

#[test]
fn miner_finds_every_oracle_rule_above_thresholds() {
    for seed in 0..20 {
        let kg = random_graph(6, 3, 30, seed);
        let cfg = MinerConfig {
            min_support: 2,
            min_head_coverage: 0.1,
            min_pca_confidence: 0.2,
            ..MinerConfig::default()
        };
        let mined: std::collections::HashSet<String> = mine_rules(&kg, &cfg)
            .unwrap()
            .iter()
            .map(|s| kgenrich::rules::canonical_form(&s.rule, kg.vocab()).1)
            .collect();
        for rule in common::closed_rules(kg.relation_count()) {
            // reflexive atoms and repeated body atoms are outside the search space
            if rule.atoms().any(|a| a.arg1 == a.arg2) || (rule.body.len() == 2 && rule.body[0] == rule.body[1]) {
                continue;
            }
            if rule.body.contains(&rule.head) {
                continue;
            }
            let o = common::oracle(&kg, &rule, false);
            let head_size = kg.pairs(rule.head.relation).len() as u64;
            let passes = o.support >= 2
                && head_size > 0
                && o.support as f64 / head_size as f64 >= 0.1
                && o.pca_confidence.is_some_and(|p| *p.numer() as f64 / *p.denom() as f64 >= 0.2);
            let text = kgenrich::rules::canonical_form(&rule, kg.vocab()).1;
            assert_eq!(passes, mined.contains(&text), "seed {seed}: {text}");
        }
    }
}

#[test]
fn toy_world_rules_make_sense() {
    let kg = toy_world(300, 0.2, 9);
    let rules = mine_rules(&kg, &MinerConfig::default()).unwrap();
    let texts: Vec<String> = rules.iter().map(|s| kgenrich::rules::format_rule(&s.rule, kg.vocab())).collect();
    assert!(texts.contains(&"?a born_in ?b ?b city_of ?c => ?a nationality ?c".to_owned()), "{texts:?}");
    let nationality = kg.vocab().relation_id("nationality").unwrap();
    assert!(rules.iter().any(|s| s.rule.head.relation == nationality));
}
