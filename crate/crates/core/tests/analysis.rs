use kgenrich::analysis::{diff_rules, summarize_confidence, Category};
use kgenrich::eval::infer_with_rules;
use kgenrich::kg::{EntityId, RelationId, Triple, Vocab};
use kgenrich::pipeline::rule_rows;
use kgenrich::rules::{
    mine_rules, read_rules, Atom, MatchOptions, MinerConfig, Rule, RuleEvaluator, RuleMetrics, RuleRow,
};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use kgenrich::synthetic::toy_world;
use proptest::prelude::*;

fn vocab() -> Vocab {
    let mut v = Vocab::new();
    for r in 0..4 {
        v.intern_relation(&format!("r{r}"));
    }
    v
}

fn row(rule: Rule) -> RuleRow {
    RuleRow {
        rule,
        support: 1,
        head_coverage: 1.0,
        std_confidence: 1.0,
        pca_confidence: 1.0,
    }
}

/// Rules drawn from a pool of 4 x 4 x 2 single-atom rules.
fn rules() -> impl Strategy<Value = Vec<RuleRow>> {
    prop::collection::vec((0u32..4, 0u32..4, any::<bool>()), 0..20).prop_map(|picks| {
        picks
            .into_iter()
            .map(|(b, h, flip)| {
                let body = if flip { Atom::vars(RelationId(b), 1, 0) } else { Atom::vars(RelationId(b), 0, 1) };
                row(Rule::new(vec![body], Atom::vars(RelationId(h), 0, 1)))
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn diff_identities_and_symmetry(before in rules(), after in rules()) {
        let v = vocab();
        let d = diff_rules(&before, &after, &v);
        prop_assert!(d.identities_hold());
        let back = diff_rules(&after, &before, &v);
        let rules = |rows: &[RuleRow]| rows.iter().map(|r| r.rule.clone()).collect::<Vec<_>>();
        prop_assert_eq!(rules(&d.new_rules), rules(&back.dropped));
        prop_assert_eq!(rules(&d.dropped), rules(&back.new_rules));
        prop_assert_eq!(d.same.len(), back.same.len());
    }

    #[test]
    fn diff_with_itself_is_all_same(before in rules()) {
        let v = vocab();
        let d = diff_rules(&before, &before, &v);
        prop_assert!(d.new_rules.is_empty() && d.dropped.is_empty());
        prop_assert_eq!(d.same.len(), d.before.len());
    }
}

#[test]
fn summary_means_match_the_written_files() {
    let original = toy_world(200, 0.4, 2);
    let vocab = original.vocab();
    let miner = MinerConfig {
        min_support: 5,
        ..MinerConfig::default()
    };
    let mined = mine_rules(&original, &miner).unwrap();
    // rule-implied facts plus noise
    let mut added: Vec<_> = infer_with_rules(&mined, &original, MatchOptions::default())
        .unwrap()
        .into_iter()
        .map(|i| i.triple)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (n, m) = (original.entity_count() as u32, original.relation_count() as u32);
    added.extend((0..400).map(|_| Triple::new(EntityId(rng.gen_range(0..n)), RelationId(rng.gen_range(0..m)), EntityId(rng.gen_range(0..n)))));
    let enriched = original.merge(&added);
    let before = rule_rows(&mined);
    let after = rule_rows(&mine_rules(&enriched, &miner).unwrap());
    let d = diff_rules(&before, &after, vocab);
    assert!(!d.new_rules.is_empty() && !d.same.is_empty());
    let summary = summarize_confidence(&d, &original, &enriched, MatchOptions::default()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    d.write(dir.path(), vocab, Some("test")).unwrap();
    for (category, file) in [
        (Category::New, "diff_new.tsv"),
        (Category::Dropped, "diff_dropped.tsv"),
        (Category::Same, "diff_same.tsv"),
    ] {
        let rows = read_rules(&dir.path().join(file), vocab).unwrap();
        let graph = if category == Category::New { &enriched } else { &original };
        let eval = RuleEvaluator::new(graph, MatchOptions::default());
        let s = summary.get(category);
        assert_eq!(s.count, rows.len());
        if rows.is_empty() {
            assert!(s.mean_std_confidence.is_none() && s.mean_pca_confidence.is_none());
            continue;
        }
        let ratio = |q: kgenrich::Result<Ratio<u64>>| q.map(|q| *q.numer() as f64 / *q.denom() as f64).unwrap_or(0.0);
        let mean = |f: &dyn Fn(&RuleMetrics) -> f64| {
            rows.iter().map(|r| f(&eval.evaluate(&r.rule).unwrap())).sum::<f64>() / rows.len() as f64
        };
        let std = mean(&|m| ratio(m.std_confidence()));
        let pca = mean(&|m| ratio(m.pca_confidence()));
        assert!((s.mean_std_confidence.unwrap() - std).abs() < 1e-12, "{category:?}");
        assert!((s.mean_pca_confidence.unwrap() - pca).abs() < 1e-12, "{category:?}");
    }
}
