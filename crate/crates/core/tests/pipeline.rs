use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::process::Command;

use kgenrich::pipeline::{split_triples, PipelineConfig};
use kgenrich::synthetic::toy_world;
use proptest::prelude::*;

fn rows(n: usize, entities: usize, seed: u64) -> Vec<[String; 3]> {
    let kg = kgenrich::synthetic::random_graph(entities, 3, n, seed);
    let v = kg.vocab();
    kg.triples()
        .iter()
        .map(|t| [v.entity_label(t.head).into(), v.relation_label(t.relation).into(), v.entity_label(t.tail).into()])
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_partitions_and_covers(n in 1usize..200, entities in 2usize..40, seed in any::<u64>()) {
        let input = rows(n, entities, seed);
        let Ok([train, valid, test]) = split_triples(&input, [0.8, 0.1, 0.1], seed) else {
            // only tiny inputs may leave a held-out part empty
            prop_assert!(input.len() < 50);
            return Ok(());
        };
        let mut all: Vec<_> = train.iter().chain(&valid).chain(&test).cloned().collect();
        all.sort();
        let mut want = input.clone();
        want.sort();
        want.dedup();
        prop_assert_eq!(all, want);
        let ents: HashSet<&String> = train.iter().flat_map(|[h, _, t]| [h, t]).collect();
        let rels: HashSet<&String> = train.iter().map(|[_, r, _]| r).collect();
        for [h, r, t] in valid.iter().chain(&test) {
            prop_assert!(ents.contains(h) && ents.contains(t) && rels.contains(r));
        }
    }

    #[test]
    fn split_is_seeded(n in 20usize..100, seed in any::<u64>()) {
        let input = rows(n, 8, seed);
        prop_assert_eq!(
            split_triples(&input, [0.7, 0.15, 0.15], seed).ok(),
            split_triples(&input, [0.7, 0.15, 0.15], seed).ok()
        );
    }
}

#[test]
fn bad_ratios_are_rejected() {
    let input = rows(30, 6, 0);
    assert!(split_triples(&input, [0.8, 0.1, 0.2], 0).is_err());
    assert!(split_triples(&input, [1.2, -0.1, -0.1], 0).is_err());
}

#[test]
fn config_text_round_trips() {
    let mut cfg = PipelineConfig::default();
    cfg.set("top_k", "5,10").unwrap();
    cfg.set("model", "rotate").unwrap();
    cfg.set("target_relations", "a, b").unwrap();
    let back = PipelineConfig::parse_text(&cfg.to_text(), PipelineConfig::default()).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.hash(), cfg.hash());
    assert!(PipelineConfig::parse_text("nonsense=1\n", PipelineConfig::default()).is_err());
}

// --- command line ----------------------------------------------------------

fn kgenrich(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_kgenrich"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("run kgenrich")
}

fn code(out: &std::process::Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    toy_world(250, 0.3, 4).save(&dir.path().join("all.tsv")).unwrap();
    let out = kgenrich(dir.path(), &["split", "--input", "all.tsv", "--out-dir", "data"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    fs::write(
        dir.path().join("run.conf"),
        "train=data/train.tsv\nvalid=data/valid.tsv\ntest=data/test.tsv\ndim=8\nepochs=10\n\
         batch_size=64\nsample_entities=60\ntop_k=10,40\nmin_support=5\n",
    )
    .unwrap();
    dir
}

#[test]
fn cli_pipeline_resume_and_stages() {
    let dir = setup();
    let d = dir.path();
    let run = |args: &[&str]| {
        let out = kgenrich(d, args);
        assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        out
    };
    run(&["--workers", "1", "pipeline", "--config", "run.conf", "--output", "out"]);
    for f in ["model.bin", "rules_before.tsv", "eval_embeddings.txt", "manifest.txt", "topk-40/diff_summary.txt"] {
        assert!(d.join("out").join(f).is_file(), "{f} missing");
    }
    let rules = fs::read(d.join("out/rules_before.tsv")).unwrap();
    let out = run(&["-v", "--workers", "1", "pipeline", "--config", "run.conf", "--output", "out", "--resume"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("reusing"));
    assert_eq!(fs::read(d.join("out/rules_before.tsv")).unwrap(), rules);

    run(&["mine", "--config", "run.conf", "--out", "mined.tsv"]);
    assert_eq!(fs::read(d.join("mined.tsv")).unwrap(), rules);
    run(&["eval", "--config", "run.conf", "--model-file", "out/model.bin", "--out", "eval.txt"]);
    assert!(fs::read_to_string(d.join("eval.txt")).unwrap().contains("mrr="));
    run(&["eval", "--config", "run.conf", "--rules", "mined.tsv", "--out", "eval_rules.txt"]);
    run(&[
        "diff", "--config", "run.conf", "--before", "out/rules_before.tsv", "--after", "out/topk-40/rules_after.tsv",
        "--enriched", "out/topk-40/enriched.tsv", "--out-dir", "d",
    ]);
    assert!(d.join("d/diff_new.tsv").is_file());
    run(&["apply", "--config", "run.conf", "--rules", "mined.tsv", "--out", "applied.tsv"]);
    let printed = run(&["pipeline", "--config", "run.conf", "--print-config"]);
    assert!(String::from_utf8_lossy(&printed.stdout).contains("top_k=10,40"));
}

#[test]
fn cli_exit_codes() {
    let dir = setup();
    let d = dir.path();
    assert_eq!(code(&kgenrich(d, &["mine", "--train", "missing.tsv", "--out", "x.tsv"])), 2);
    assert_eq!(code(&kgenrich(d, &["train", "--config", "run.conf", "--dim", "0"])), 1);
    assert_eq!(code(&kgenrich(d, &["train", "--config", "run.conf", "--set", "bogus=1"])), 1);
    assert_eq!(code(&kgenrich(d, &["frobnicate"])), 1);
    let diverge = kgenrich(d, &["train", "--config", "run.conf", "--model", "distmult", "--learning-rate", "1e200"]);
    assert_eq!(code(&diverge), 3, "{}", String::from_utf8_lossy(&diverge.stderr));
}
