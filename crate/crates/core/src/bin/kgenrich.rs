use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kgenrich::analysis::{diff_rules, summarize_confidence};
use kgenrich::embed::save_model;
use kgenrich::eval::{evaluate_embeddings, evaluate_rules, infer_with_rules};
use kgenrich::linkpred::{enrich, save_manifest};
use kgenrich::pipeline::{
    enriched_prefix, load_graph, load_trained, rescore, rule_rows, run_pipeline, split_file, train_model,
    with_workers, PipelineConfig,
};
use kgenrich::rules::{mine_rules, read_rules, write_rules};
use kgenrich::{Error, Result};

#[derive(Parser)]
#[command(name = "kgenrich", version, about = "Knowledge-graph enrichment and rule mining")]
struct Cli {
    /// Worker threads; 1 makes every stage bit-deterministic.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split one triple file into train/valid/test.
    Split {
        #[arg(long)]
        input: PathBuf,
        /// train,valid,test fractions summing to 1.
        #[arg(long, default_value = "0.8,0.1,0.1")]
        ratios: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train, enrich, mine before and after, diff and evaluate.
    Pipeline {
        #[command(flatten)]
        common: Common,
        /// Reuse output/model.bin when its header matches.
        #[arg(long)]
        resume: bool,
    },
    /// Train an embedding model into output/model.bin.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Add the top-k predicted triples; writes output/topk-{k}/.
    Enrich {
        #[command(flatten)]
        common: Common,
        /// Defaults to output/model.bin.
        #[arg(long)]
        model_file: Option<PathBuf>,
    },
    /// Mine closed Horn rules from a triple file.
    Mine {
        #[command(flatten)]
        common: Common,
        /// Defaults to the train file.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hits@k and MRR of a model or of a rule file.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "rules")]
        model_file: Option<PathBuf>,
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Graph the rules are applied to; defaults to the train file.
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Report file; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// New, dropped and same rules between two rule files.
    Diff {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        before: PathBuf,
        #[arg(long)]
        after: PathBuf,
        /// Enriched graph; enables the confidence summary.
        #[arg(long)]
        enriched: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Triples predicted by a rule file that are not in the graph.
    Apply {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rules: PathBuf,
        /// Defaults to the train file.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Configuration shared by every stage: a `key=value` file overridden by flags.
#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
    /// Extra `key=value` overrides.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    train: Option<String>,
    #[arg(long)]
    valid: Option<String>,
    #[arg(long)]
    test: Option<String>,
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    learning_rate: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    margin: Option<String>,
    #[arg(long)]
    negatives: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    sample_entities: Option<String>,
    #[arg(long)]
    sample_relations: Option<String>,
    #[arg(long)]
    target_relations: Option<String>,
    #[arg(long)]
    top_k: Option<String>,
    #[arg(long)]
    max_body_atoms: Option<String>,
    #[arg(long)]
    min_support: Option<String>,
    #[arg(long)]
    min_head_coverage: Option<String>,
    #[arg(long)]
    min_pca_confidence: Option<String>,
    #[arg(long)]
    allow_constants: Option<String>,
    #[arg(long)]
    distinct_bindings: Option<String>,
    #[arg(long)]
    ranking: Option<String>,
}

impl Common {
    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => PipelineConfig::default(),
        };
        let flags = [
            ("train", &self.train),
            ("valid", &self.valid),
            ("test", &self.test),
            ("output", &self.output),
            ("model", &self.model),
            ("seed", &self.seed),
            ("dim", &self.dim),
            ("learning_rate", &self.learning_rate),
            ("epochs", &self.epochs),
            ("margin", &self.margin),
            ("negatives", &self.negatives),
            ("batch_size", &self.batch_size),
            ("sample_entities", &self.sample_entities),
            ("sample_relations", &self.sample_relations),
            ("target_relations", &self.target_relations),
            ("top_k", &self.top_k),
            ("max_body_atoms", &self.max_body_atoms),
            ("min_support", &self.min_support),
            ("min_head_coverage", &self.min_head_coverage),
            ("min_pca_confidence", &self.min_pca_confidence),
            ("allow_constants", &self.allow_constants),
            ("distinct_bindings", &self.distinct_bindings),
            ("ranking", &self.ranking),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k.trim(), v)?;
        }
        Ok(cfg)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_owned(),
        source: e,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })
}

fn run(command: Command) -> Result<()> {
    let common = match &command {
        Command::Split { .. } => None,
        Command::Pipeline { common, .. }
        | Command::Train { common }
        | Command::Enrich { common, .. }
        | Command::Mine { common, .. }
        | Command::Eval { common, .. }
        | Command::Diff { common, .. }
        | Command::Apply { common, .. } => Some(common),
    };
    let cfg = match common {
        Some(c) => {
            let cfg = c.config()?;
            if c.print_config {
                print!("{}", cfg.to_text());
                return Ok(());
            }
            cfg.validate()?;
            Some(cfg)
        }
        None => None,
    };

    match command {
        Command::Split {
            input,
            ratios,
            seed,
            out_dir,
        } => {
            let parts: Vec<f64> = ratios
                .split(',')
                .map(|r| r.trim().parse().map_err(|_| Error::Config(format!("bad ratio `{r}`"))))
                .collect::<Result<_>>()?;
            let ratios: [f64; 3] = parts
                .try_into()
                .map_err(|_| Error::Config("--ratios needs three values".into()))?;
            let [a, b, c] = split_file(&input, ratios, seed, &out_dir)?;
            println!("train={a} valid={b} test={c}");
        }
        Command::Pipeline { resume, .. } => {
            let cfg = cfg.unwrap();
            let outcome = run_pipeline(&cfg, resume)?;
            println!("config_hash={}", outcome.config_hash);
            println!("rules_before={}", outcome.rules_before);
            for o in &outcome.per_top_k {
                println!(
                    "topk-{}: added={} rules_after={} new={} dropped={} same={}",
                    o.top_k,
                    o.added,
                    o.rules_after,
                    o.diff.new_rules.len(),
                    o.diff.dropped.len(),
                    o.diff.same.len()
                );
            }
        }
        Command::Train { .. } => {
            let cfg = cfg.unwrap();
            let data = cfg.load_dataset()?;
            create_dir(&cfg.output)?;
            data.vocab()
                .save(&cfg.output.join("entities.tsv"), &cfg.output.join("relations.tsv"))?;
            let (params, trace) = train_model(&cfg, &data)?;
            save_model(&cfg.output.join("model.bin"), &params, cfg.training_hash())?;
            trace.save_csv(&cfg.output.join("loss.csv"))?;
            if let Some(last) = trace.epochs.last() {
                println!("epochs={} final_loss={}", last.epoch, last.loss);
            }
        }
        Command::Enrich { model_file, .. } => {
            let cfg = cfg.unwrap();
            let data = cfg.load_dataset()?;
            let path = model_file.unwrap_or_else(|| cfg.output.join("model.bin"));
            let params = load_trained(&path, &cfg, data.vocab())?;
            let max_k = *cfg.top_k.iter().max().unwrap();
            let result = enrich(&data.train, &params, &cfg.enrichment_config(data.vocab(), max_k)?)?;
            for &k in &cfg.top_k {
                let dir = cfg.output.join(format!("topk-{k}"));
                create_dir(&dir)?;
                let (enriched, added) = enriched_prefix(&data.train, &result, k);
                save_manifest(&dir.join("enrichment.tsv"), data.vocab(), &result.added[..added])?;
                enriched.save(&dir.join("enriched.tsv"))?;
                println!("topk-{k}: added={added}");
            }
        }
        Command::Mine { graph, out, .. } => {
            let cfg = cfg.unwrap();
            let data = cfg.load_dataset()?;
            let kg = match graph {
                Some(p) => load_graph(&p, data.vocab())?,
                None => data.train.clone(),
            };
            let rules = mine_rules(&kg, &cfg.miner)?;
            write_rules(&out, data.vocab(), &rule_rows(&rules), Some(&cfg.header()))?;
            println!("rules={}", rules.len());
        }
        Command::Eval {
            model_file,
            rules,
            graph,
            out,
            ..
        } => {
            let cfg = cfg.unwrap();
            let data = cfg.load_dataset()?;
            let report = match rules {
                Some(path) => {
                    let kg = match graph {
                        Some(p) => load_graph(&p, data.vocab())?,
                        None => data.train.clone(),
                    };
                    let scored = rescore(&read_rules(&path, data.vocab())?, &kg, &cfg.miner)?;
                    evaluate_rules(&scored, &kg, &data, cfg.ranking, cfg.miner.match_options())?
                }
                None => {
                    let path = model_file.unwrap_or_else(|| cfg.output.join("model.bin"));
                    let params = load_trained(&path, &cfg, data.vocab())?;
                    evaluate_embeddings(&params, &data, cfg.ranking)?
                }
            };
            match out {
                Some(path) => report.write(&path, Some(&cfg.header()))?,
                None => print!("{report}"),
            }
        }
        Command::Diff {
            before,
            after,
            enriched,
            out_dir,
            ..
        } => {
            let cfg = cfg.unwrap();
            let data = cfg.load_dataset()?;
            let vocab = data.vocab();
            let diff = diff_rules(&read_rules(&before, vocab)?, &read_rules(&after, vocab)?, vocab);
            create_dir(&out_dir)?;
            let header = cfg.header();
            diff.write(&out_dir, vocab, Some(&header))?;
            match enriched {
                Some(p) => {
                    let enriched = load_graph(&p, vocab)?;
                    let summary = summarize_confidence(&diff, &data.train, &enriched, cfg.miner.match_options())?;
                    summary.write(&out_dir.join("diff_summary.txt"), Some(&header))?;
                    print!("{summary}");
                }
                None => println!(
                    "before={} after={} new={} dropped={} same={}",
                    diff.before.len(),
                    diff.after.len(),
                    diff.new_rules.len(),
                    diff.dropped.len(),
                    diff.same.len()
                ),
            }
        }
        Command::Apply { rules, graph, out, .. } => {
            let cfg = cfg.unwrap();
            let data = cfg.load_dataset()?;
            let vocab = data.vocab();
            let kg = match graph {
                Some(p) => load_graph(&p, vocab)?,
                None => data.train.clone(),
            };
            let scored = rescore(&read_rules(&rules, vocab)?, &kg, &cfg.miner)?;
            let inferred = infer_with_rules(&scored, &kg, cfg.miner.match_options())?;
            let mut text = String::new();
            for i in &inferred {
                let t = i.triple;
                text.push_str(&format!(
                    "{}\t{}\t{}\t{}\n",
                    vocab.entity_label(t.head),
                    vocab.relation_label(t.relation),
                    vocab.entity_label(t.tail),
                    *i.pca_confidence.numer() as f64 / *i.pca_confidence.denom() as f64
                ));
            }
            write_text(&out, &text)?;
            println!("inferred={}", inferred.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match with_workers(cli.workers, || run(cli.command)).and_then(|r| r) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
