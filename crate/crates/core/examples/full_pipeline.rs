//! The whole run behind `kgenrich pipeline`: split a generated graph, then
//! train, enrich at several top-k values, mine, diff and evaluate.

use kgenrich::kg::read_labeled_triples;
use kgenrich::pipeline::{run_pipeline, split_file, PipelineConfig};
use kgenrich::synthetic::toy_world;

fn main() -> kgenrich::Result<()> {
    let dir = std::env::temp_dir().join("kgenrich-pipeline");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let all = dir.join("all.tsv");
    toy_world(400, 0.3, 12).save(&all)?;
    let [train, valid, test] = split_file(&all, [0.8, 0.1, 0.1], 0, &dir)?;
    println!("split {} triples into {train}/{valid}/{test}", read_labeled_triples(&all)?.len());

    let text = format!(
        "train={d}/train.tsv\nvalid={d}/valid.tsv\ntest={d}/test.tsv\noutput={d}/out\n\
         dim=16\nepochs=40\nbatch_size=128\nsample_entities=150\ntop_k=20,100,400\n\
         min_support=5\nranking=filtered\n",
        d = dir.display()
    );
    let cfg = PipelineConfig::parse_text(&text, PipelineConfig::default())?;
    let outcome = run_pipeline(&cfg, true)?;

    println!("config {}  rules before: {}", outcome.config_hash, outcome.rules_before);
    for k in &outcome.per_top_k {
        println!(
            "top-{:<4} added {:>4}  after {:>3}  new {:>3}  dropped {:>3}  same {:>3}",
            k.top_k,
            k.added,
            k.rules_after,
            k.diff.new_rules.len(),
            k.diff.dropped.len(),
            k.diff.same.len()
        );
    }
    if let Some(r) = &outcome.eval_embeddings {
        println!("embeddings: hits@10={:.3} mrr={:.3}", r.hits10, r.mrr);
    }
    println!("artifacts in {}", cfg.output.display());
    Ok(())
}
