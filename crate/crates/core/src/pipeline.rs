//! End-to-end runs: configuration, seeds, dataset splitting and the staged
//! pipeline behind the `kgenrich` binary.
//!
//! A pipeline run writes into one output directory:
//!
//! ```text
//! entities.tsv relations.tsv model.bin loss.csv rules_before.tsv
//! eval_embeddings.txt eval_rules_before.txt manifest.txt
//! topk-{k}/enrichment.tsv enriched.tsv rules_after.tsv
//!          diff_new.tsv diff_dropped.tsv diff_same.tsv diff_summary.txt
//!          eval_rules_after.txt
//! ```

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::analysis::{diff_rules, summarize_confidence, ConfidenceSummary, RuleDiff};
use crate::embed::{load_model, save_model, train, Checkpoint, ModelKind, ModelParams, TrainingConfig};
use crate::error::{Error, Result};
use crate::eval::{evaluate_embeddings, evaluate_rules, EvalReport, RankingMode};
use crate::kg::{read_labeled_triples, Dataset, KnowledgeGraph, RelationId, Vocab};
use crate::linkpred::{enrich, load_enriched, save_manifest, EnrichmentConfig, EnrichmentResult};
use crate::rules::{mine_rules, write_rules, MinerConfig, RuleEvaluator, RuleRow, ScoredRule};

/// Every knob of a run. Relative paths are taken relative to the working
/// directory.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub train: PathBuf,
    pub valid: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub output: PathBuf,
    pub model: ModelKind,
    /// Global seed; stage seeds are derived from it.
    pub seed: u64,
    /// `seed` inside is ignored in favour of the derived training seed.
    pub training: TrainingConfig,
    pub sample_entities: usize,
    pub sample_relations: usize,
    /// Relation labels to predict; sampled when empty.
    pub target_relations: Vec<String>,
    /// One enrichment per entry; all share the trained model.
    pub top_k: Vec<usize>,
    pub miner: MinerConfig,
    pub ranking: RankingMode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let enrichment = EnrichmentConfig::default();
        PipelineConfig {
            train: PathBuf::new(),
            valid: None,
            test: None,
            output: PathBuf::from("out"),
            model: ModelKind::TransE,
            seed: 0,
            training: TrainingConfig::default(),
            sample_entities: enrichment.sample_entities,
            sample_relations: enrichment.sample_relations,
            target_relations: Vec::new(),
            top_k: vec![enrichment.top_k],
            miner: MinerConfig::default(),
            ranking: RankingMode::default(),
        }
    }
}

/// Keys of the `key=value` format, in canonical order.
pub const CONFIG_KEYS: &[&str] = &[
    "train",
    "valid",
    "test",
    "output",
    "model",
    "seed",
    "dim",
    "learning_rate",
    "epochs",
    "margin",
    "negatives",
    "batch_size",
    "sample_entities",
    "sample_relations",
    "target_relations",
    "top_k",
    "max_body_atoms",
    "min_support",
    "min_head_coverage",
    "min_pca_confidence",
    "allow_constants",
    "distinct_bindings",
    "ranking",
];

/// Keys that determine the trained model.
const TRAINING_KEYS: &[&str] = &[
    "train",
    "valid",
    "test",
    "model",
    "seed",
    "dim",
    "learning_rate",
    "epochs",
    "margin",
    "negatives",
    "batch_size",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Config(format!("`{key}` must be true or false, got `{value}`"))),
    }
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

impl PipelineConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "train" => self.train = PathBuf::from(value),
            "valid" => self.valid = optional_path(value),
            "test" => self.test = optional_path(value),
            "output" => self.output = PathBuf::from(value),
            "model" => self.model = value.parse()?,
            "seed" => self.seed = parse(key, value)?,
            "dim" => self.training.dim = parse(key, value)?,
            "learning_rate" => self.training.learning_rate = parse(key, value)?,
            "epochs" => self.training.epochs = parse(key, value)?,
            "margin" => self.training.margin = parse(key, value)?,
            "negatives" => self.training.negatives_per_positive = parse(key, value)?,
            "batch_size" => self.training.batch_size = parse(key, value)?,
            "sample_entities" => self.sample_entities = parse(key, value)?,
            "sample_relations" => self.sample_relations = parse(key, value)?,
            "target_relations" => self.target_relations = list(value).map(str::to_owned).collect(),
            "top_k" => {
                self.top_k = list(value).map(|v| parse(key, v)).collect::<Result<_>>()?;
            }
            "max_body_atoms" => self.miner.max_body_atoms = parse(key, value)?,
            "min_support" => self.miner.min_support = parse(key, value)?,
            "min_head_coverage" => self.miner.min_head_coverage = parse(key, value)?,
            "min_pca_confidence" => self.miner.min_pca_confidence = parse(key, value)?,
            "allow_constants" => self.miner.allow_constants = parse_bool(key, value)?,
            "distinct_bindings" => self.miner.distinct_bindings = parse_bool(key, value)?,
            "ranking" => self.ranking = value.parse()?,
            other => return Err(Error::Config(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let t = &self.training;
        let m = &self.miner;
        match key {
            "train" => self.train.display().to_string(),
            "valid" => path(&self.valid),
            "test" => path(&self.test),
            "output" => self.output.display().to_string(),
            "model" => self.model.to_string(),
            "seed" => self.seed.to_string(),
            "dim" => t.dim.to_string(),
            "learning_rate" => t.learning_rate.to_string(),
            "epochs" => t.epochs.to_string(),
            "margin" => t.margin.to_string(),
            "negatives" => t.negatives_per_positive.to_string(),
            "batch_size" => t.batch_size.to_string(),
            "sample_entities" => self.sample_entities.to_string(),
            "sample_relations" => self.sample_relations.to_string(),
            "target_relations" => self.target_relations.join(","),
            "top_k" => self.top_k.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","),
            "max_body_atoms" => m.max_body_atoms.to_string(),
            "min_support" => m.min_support.to_string(),
            "min_head_coverage" => m.min_head_coverage.to_string(),
            "min_pca_confidence" => m.min_pca_confidence.to_string(),
            "allow_constants" => m.allow_constants.to_string(),
            "distinct_bindings" => m.distinct_bindings.to_string(),
            "ranking" => self.ranking.to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Parse `key=value` lines; blank lines and `#` comments are ignored.
    pub fn parse_text(text: &str, mut base: PipelineConfig) -> Result<PipelineConfig> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            base.set(k.trim(), v)?;
        }
        Ok(base)
    }

    pub fn from_file(path: &Path) -> Result<PipelineConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PipelineConfig::parse_text(&text, PipelineConfig::default())
    }

    /// Canonical `key=value` text; parsing it gives back the same config.
    pub fn to_text(&self) -> String {
        self.render(CONFIG_KEYS)
    }

    fn render(&self, keys: &[&str]) -> String {
        let mut out = String::new();
        for key in keys {
            let _ = writeln!(out, "{key}={}", self.get(key));
        }
        out
    }

    /// First 16 hex digits of the SHA-256 of the canonical text, leaving
    /// out `output` so that reruns elsewhere carry the same hash.
    pub fn hash(&self) -> String {
        let keys: Vec<&str> = CONFIG_KEYS.iter().copied().filter(|k| *k != "output").collect();
        hex(&Sha256::digest(self.render(&keys).as_bytes())[..8])
    }

    /// Tag stored in model checkpoints; covers only what shapes the model.
    pub fn training_hash(&self) -> u64 {
        let digest = Sha256::digest(self.render(TRAINING_KEYS).as_bytes());
        u64::from_le_bytes(digest[..8].try_into().unwrap())
    }

    pub fn header(&self) -> String {
        format!("config_hash={}", self.hash())
    }

    pub fn training_config(&self) -> TrainingConfig {
        TrainingConfig {
            seed: derive_seed(self.seed, "train"),
            ..self.training.clone()
        }
    }

    pub fn enrichment_config(&self, vocab: &Vocab, top_k: usize) -> Result<EnrichmentConfig> {
        let target_relations = self
            .target_relations
            .iter()
            .map(|label| {
                vocab.relation_id(label).ok_or_else(|| Error::Vocabulary {
                    kind: "relation",
                    label: label.clone(),
                })
            })
            .collect::<Result<Vec<RelationId>>>()?;
        Ok(EnrichmentConfig {
            target_relations,
            sample_entities: self.sample_entities,
            sample_relations: self.sample_relations,
            top_k,
            seed: derive_seed(self.seed, "enrich"),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.train.as_os_str().is_empty() {
            return Err(Error::Config("`train` is required".into()));
        }
        if self.top_k.is_empty() || self.top_k.contains(&0) {
            return Err(Error::Config("`top_k` needs at least one positive value".into()));
        }
        self.training_config().validate()?;
        self.miner.validate()?;
        EnrichmentConfig {
            sample_entities: self.sample_entities,
            sample_relations: self.sample_relations,
            ..EnrichmentConfig::default()
        }
        .validate()
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        let data = Dataset::load(&self.train, self.valid.as_deref(), self.test.as_deref())?;
        if data.discarded > 0 {
            log::warn!(
                "discarded {} held-out triples that overlap train or mention unseen entities or relations",
                data.discarded
            );
        }
        Ok(data)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Stage seed: the first 8 bytes of `SHA-256("{seed}:{tag}")`.
pub fn derive_seed(seed: u64, tag: &str) -> u64 {
    let digest = Sha256::digest(format!("{seed}:{tag}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Run `f` on a pool of `workers` threads, or on the global pool for `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::Config("--workers must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Shuffle `rows` and cut them into train/valid/test by `ratios`. Held-out
/// triples whose entities or relation are missing from train are moved to
/// train until none are left.
pub fn split_triples(rows: &[[String; 3]], ratios: [f64; 3], seed: u64) -> Result<[Vec<[String; 3]>; 3]> {
    if ratios.iter().any(|r| !(0.0..=1.0).contains(r)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split ratios {ratios:?} must be in [0, 1] and sum to 1")));
    }
    let mut seen = HashSet::new();
    let mut rows: Vec<[String; 3]> = rows.iter().filter(|r| seen.insert(*r)).cloned().collect();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = rows.len();
    let n_valid = (n as f64 * ratios[1]).round() as usize;
    let n_test = ((n as f64 * ratios[2]).round() as usize).min(n - n_valid);
    let mut test = rows.split_off(n - n_test);
    let mut valid = rows.split_off(n - n_test - n_valid);
    let mut train = rows;

    loop {
        let mut entities: HashSet<&str> = HashSet::new();
        let mut relations: HashSet<&str> = HashSet::new();
        for [h, r, t] in &train {
            entities.insert(h);
            entities.insert(t);
            relations.insert(r);
        }
        let covered = |[h, r, t]: &[String; 3]| {
            entities.contains(h.as_str()) && entities.contains(t.as_str()) && relations.contains(r.as_str())
        };
        let (keep_valid, move_valid): (Vec<_>, Vec<_>) = valid.into_iter().partition(|t| covered(t));
        let (keep_test, move_test): (Vec<_>, Vec<_>) = test.into_iter().partition(|t| covered(t));
        valid = keep_valid;
        test = keep_test;
        if move_valid.is_empty() && move_test.is_empty() {
            break;
        }
        train.extend(move_valid);
        train.extend(move_test);
    }
    for (name, part, ratio) in [("valid", &valid, ratios[1]), ("test", &test, ratios[2])] {
        if ratio > 0.0 && part.is_empty() && n > 0 {
            return Err(Error::Config(format!(
                "no {name} triple keeps every entity and relation covered by train"
            )));
        }
    }
    Ok([train, valid, test])
}

/// Write `train.tsv`, `valid.tsv` and `test.tsv` into `dir`.
pub fn split_file(input: &Path, ratios: [f64; 3], seed: u64, dir: &Path) -> Result<[usize; 3]> {
    let rows = read_labeled_triples(input)?;
    let parts = split_triples(&rows, ratios, seed)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut sizes = [0; 3];
    for (i, (name, part)) in ["train.tsv", "valid.tsv", "test.tsv"].iter().zip(&parts).enumerate() {
        let mut text = String::new();
        for [h, r, t] in part {
            let _ = writeln!(text, "{h}\t{r}\t{t}");
        }
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        sizes[i] = part.len();
    }
    Ok(sizes)
}

/// Recompute exact metrics for rules read from a file.
pub fn rescore(rows: &[RuleRow], kg: &KnowledgeGraph, miner: &MinerConfig) -> Result<Vec<ScoredRule>> {
    let evaluator = RuleEvaluator::new(kg, miner.match_options());
    rows.iter()
        .map(|row| {
            Ok(ScoredRule {
                rule: row.rule.clone(),
                metrics: evaluator.evaluate(&row.rule)?,
            })
        })
        .collect()
}

pub fn rule_rows(rules: &[ScoredRule]) -> Vec<RuleRow> {
    rules.iter().map(RuleRow::from).collect()
}

/// Train a fresh model on `data.train`.
pub fn train_model(cfg: &PipelineConfig, data: &Dataset) -> Result<(ModelParams, crate::embed::LossTrace)> {
    let tc = cfg.training_config();
    let mut params = ModelParams::init(cfg.model, data.train.entity_count(), data.train.relation_count(), &tc)?;
    let trace = train(&mut params, &data.train, &tc)?;
    Ok((params, trace))
}

/// Reuse `path` when its header matches this config and vocabulary.
fn resumable(path: &Path, cfg: &PipelineConfig, data: &Dataset) -> Option<ModelParams> {
    let ckpt = Checkpoint::read(path).ok()?;
    let h = &ckpt.header;
    let ok = ckpt
        .validate(cfg.model, data.train.entity_count(), data.train.relation_count())
        .is_ok()
        && h.dim == cfg.training.dim
        && h.config_hash == cfg.training_hash();
    ok.then_some(ckpt.params)
}

/// Enriched graph made of the best `k` triples of `result`.
pub fn enriched_prefix(kg: &KnowledgeGraph, result: &EnrichmentResult, k: usize) -> (KnowledgeGraph, usize) {
    let take = k.min(result.added.len());
    let triples: Vec<_> = result.added[..take].iter().map(|s| s.triple).collect();
    (kg.merge(&triples), take)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopKOutcome {
    pub top_k: usize,
    pub added: usize,
    pub rules_after: usize,
    pub diff: RuleDiff,
    pub summary: ConfidenceSummary,
    pub eval_rules_after: Option<EvalReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub config_hash: String,
    pub resumed_model: bool,
    pub rules_before: usize,
    pub per_top_k: Vec<TopKOutcome>,
    pub eval_embeddings: Option<EvalReport>,
    pub eval_rules_before: Option<EvalReport>,
    /// Wall time per stage, in run order.
    pub stage_seconds: Vec<(String, f64)>,
}

struct Stages {
    times: Vec<(String, f64)>,
}

impl Stages {
    fn run<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        log::info!("stage {name}");
        let start = Instant::now();
        let out = f().map_err(|e| Error::Stage {
            stage: name.to_owned(),
            source: Box::new(e),
        });
        self.times.push((name.to_owned(), start.elapsed().as_secs_f64()));
        out
    }
}

/// Run every stage and write all artifacts under `cfg.output`. With
/// `resume`, a matching `model.bin` is reused instead of retraining.
pub fn run_pipeline(cfg: &PipelineConfig, resume: bool) -> Result<PipelineOutcome> {
    cfg.validate()?;
    let out = &cfg.output;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let header = cfg.header();
    let header = Some(header.as_str());
    let opts = cfg.miner.match_options();
    let mut stages = Stages { times: Vec::new() };

    let data = stages.run("load", || {
        let data = cfg.load_dataset()?;
        data.vocab().save(&out.join("entities.tsv"), &out.join("relations.tsv"))?;
        Ok(data)
    })?;

    let model_path = out.join("model.bin");
    let mut resumed_model = false;
    let params = stages.run("train", || {
        if resume {
            if let Some(p) = resumable(&model_path, cfg, &data) {
                log::info!("reusing {}", model_path.display());
                resumed_model = true;
                return Ok(p);
            }
        }
        let (params, trace) = train_model(cfg, &data)?;
        save_model(&model_path, &params, cfg.training_hash())?;
        trace.save_csv(&out.join("loss.csv"))?;
        Ok(params)
    })?;

    let max_k = *cfg.top_k.iter().max().expect("validated");
    let enrichment = stages.run("enrich", || {
        enrich(&data.train, &params, &cfg.enrichment_config(data.vocab(), max_k)?)
    })?;

    let before = stages.run("mine_before", || {
        let rules = mine_rules(&data.train, &cfg.miner)?;
        write_rules(&out.join("rules_before.tsv"), data.vocab(), &rule_rows(&rules), header)?;
        Ok(rules)
    })?;

    let mut per_top_k = Vec::new();
    let mut enriched_graphs = Vec::new();
    let mut after_sets = Vec::new();
    for &k in &cfg.top_k {
        let dir = out.join(format!("topk-{k}"));
        let (enriched, added) = stages.run(&format!("enrich_write[{k}]"), || {
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let (enriched, added) = enriched_prefix(&data.train, &enrichment, k);
            save_manifest(&dir.join("enrichment.tsv"), data.vocab(), &enrichment.added[..added])?;
            enriched.save(&dir.join("enriched.tsv"))?;
            Ok((enriched, added))
        })?;
        let after = stages.run(&format!("mine_after[{k}]"), || {
            let rules = mine_rules(&enriched, &cfg.miner)?;
            write_rules(&dir.join("rules_after.tsv"), data.vocab(), &rule_rows(&rules), header)?;
            Ok(rules)
        })?;
        let (diff, summary) = stages.run(&format!("diff[{k}]"), || {
            let diff = diff_rules(&rule_rows(&before), &rule_rows(&after), data.vocab());
            diff.write(&dir, data.vocab(), header)?;
            let summary = summarize_confidence(&diff, &data.train, &enriched, opts)?;
            summary.write(&dir.join("diff_summary.txt"), header)?;
            Ok((diff, summary))
        })?;
        per_top_k.push(TopKOutcome {
            top_k: k,
            added,
            rules_after: after.len(),
            diff,
            summary,
            eval_rules_after: None,
        });
        enriched_graphs.push(enriched);
        after_sets.push(after);
    }

    let has_test = !data.test.is_empty();
    if !has_test {
        log::warn!("no test triples; skipping evaluation");
    }
    let eval_embeddings = if has_test {
        Some(stages.run("eval_embeddings", || {
            let report = evaluate_embeddings(&params, &data, cfg.ranking)?;
            report.write(&out.join("eval_embeddings.txt"), header)?;
            Ok(report)
        })?)
    } else {
        None
    };
    let eval_rules_before = if has_test {
        Some(stages.run("eval_rules", || {
            let report = evaluate_rules(&before, &data.train, &data, cfg.ranking, opts)?;
            report.write(&out.join("eval_rules_before.txt"), header)?;
            for ((outcome, after), enriched) in per_top_k.iter_mut().zip(&after_sets).zip(&enriched_graphs) {
                let r = evaluate_rules(after, enriched, &data, cfg.ranking, opts)?;
                r.write(&out.join(format!("topk-{}", outcome.top_k)).join("eval_rules_after.txt"), header)?;
                outcome.eval_rules_after = Some(r);
            }
            Ok(report)
        })?)
    } else {
        None
    };

    let outcome = PipelineOutcome {
        config_hash: cfg.hash(),
        resumed_model,
        rules_before: before.len(),
        per_top_k,
        eval_embeddings,
        eval_rules_before,
        stage_seconds: stages.times,
    };
    write_manifest(&out.join("manifest.txt"), cfg, &outcome)?;
    Ok(outcome)
}

fn write_manifest(path: &Path, cfg: &PipelineConfig, outcome: &PipelineOutcome) -> Result<()> {
    let mut text = String::new();
    let _ = writeln!(text, "config_hash={}", outcome.config_hash);
    let _ = writeln!(text, "seed={}", cfg.seed);
    let _ = writeln!(text, "training_seed={}", cfg.training_config().seed);
    let _ = writeln!(text, "enrichment_seed={}", derive_seed(cfg.seed, "enrich"));
    let _ = writeln!(text, "resumed_model={}", outcome.resumed_model);
    let _ = writeln!(text, "rules_before={}", outcome.rules_before);
    for o in &outcome.per_top_k {
        let _ = writeln!(
            text,
            "topk-{}: added={} rules_after={} new={} dropped={} same={}",
            o.top_k,
            o.added,
            o.rules_after,
            o.diff.new_rules.len(),
            o.diff.dropped.len(),
            o.diff.same.len()
        );
    }
    for (stage, secs) in &outcome.stage_seconds {
        let _ = writeln!(text, "stage_seconds.{stage}={secs:.3}");
    }
    text.push_str("\n# configuration\n");
    text.push_str(&cfg.to_text());
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Load a model written by the `train` stage for this config's vocabulary.
pub fn load_trained(path: &Path, cfg: &PipelineConfig, vocab: &Arc<Vocab>) -> Result<ModelParams> {
    load_model(path, cfg.model, vocab.entity_count(), vocab.relation_count())
}

/// Read a labeled triple file against a fixed vocabulary.
pub fn load_graph(path: &Path, vocab: &Arc<Vocab>) -> Result<KnowledgeGraph> {
    load_enriched(path, vocab)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(n: usize) -> Vec<[String; 3]> {
        (0..n)
            .map(|i| [format!("e{}", i % 7), format!("r{}", i % 3), format!("e{}", (i * 3 + 1) % 7)])
            .collect()
    }

    #[test]
    fn config_text_round_trip() {
        let mut cfg = PipelineConfig::default();
        cfg.set("train", "data/train.tsv").unwrap();
        cfg.set("top_k", "50, 500,5000").unwrap();
        cfg.set("model", "rotate").unwrap();
        cfg.set("learning_rate", "0.005").unwrap();
        cfg.set("target_relations", "a b,c").unwrap();
        let text = cfg.to_text();
        let back = PipelineConfig::parse_text(&text, PipelineConfig::default()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 16);
        assert!(text.contains("top_k=50,500,5000\n"));
        let mut moved = cfg.clone();
        moved.set("output", "elsewhere").unwrap();
        assert_eq!(moved.hash(), cfg.hash());
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        let mut cfg = PipelineConfig::default();
        assert!(matches!(cfg.set("colour", "red"), Err(Error::Config(_))));
        assert!(matches!(cfg.set("dim", "many"), Err(Error::Config(_))));
        assert!(matches!(cfg.set("allow_constants", "yes"), Err(Error::Config(_))));
        assert!(PipelineConfig::parse_text("dim 5", PipelineConfig::default()).is_err());
        assert!(PipelineConfig::default().validate().is_err());
    }

    #[test]
    fn training_hash_ignores_mining_keys() {
        let mut a = PipelineConfig::default();
        a.set("train", "t.tsv").unwrap();
        let mut b = a.clone();
        b.set("min_support", "3").unwrap();
        assert_eq!(a.training_hash(), b.training_hash());
        assert_ne!(a.hash(), b.hash());
        b.set("epochs", "7").unwrap();
        assert_ne!(a.training_hash(), b.training_hash());
    }

    #[test]
    fn seeds_differ_by_stage() {
        assert_ne!(derive_seed(1, "train"), derive_seed(1, "enrich"));
        assert_eq!(derive_seed(1, "train"), derive_seed(1, "train"));
        assert_ne!(derive_seed(1, "train"), derive_seed(2, "train"));
    }

    #[test]
    fn split_all_train() {
        let r = rows(30);
        let [train, valid, test] = split_triples(&r, [1.0, 0.0, 0.0], 3).unwrap();
        assert_eq!(train.len(), 21);
        assert!(valid.is_empty() && test.is_empty());
    }

    #[test]
    fn split_is_seeded_and_covered() {
        let r = rows(200);
        let a = split_triples(&r, [0.8, 0.1, 0.1], 9).unwrap();
        assert_eq!(a, split_triples(&r, [0.8, 0.1, 0.1], 9).unwrap());
        let [train, valid, test] = &a;
        assert_eq!(train.len() + valid.len() + test.len(), 21);
        assert!(split_triples(&r, [0.5, 0.2, 0.2], 9).is_err());
    }
}
