//! Link prediction quality: Hits@k and MRR over head and tail queries.
//!
//! Every test triple `(h, r, t)` yields two rank observations, one for
//! `(?, r, t)` and one for `(h, r, ?)`, and each metric averages over all
//! `2·|test|` observations.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use num_rational::Ratio;
use rayon::prelude::*;

use crate::embed::ModelParams;
use crate::error::{Error, Result};
use crate::kg::{Dataset, EntityId, KnowledgeGraph, RelationId, Triple};
use crate::rules::{exists, project, Binding, MatchOptions, Rule, RuleEvaluator, ScoredRule, Term};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum RankingMode {
    #[default]
    Raw,
    /// Other known-true entities (train, valid or test) are skipped.
    Filtered,
}

impl fmt::Display for RankingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankingMode::Raw => "raw",
            RankingMode::Filtered => "filtered",
        })
    }
}

impl FromStr for RankingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(RankingMode::Raw),
            "filtered" => Ok(RankingMode::Filtered),
            other => Err(Error::Config(format!("unknown ranking mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
    pub mrr: f64,
    /// Rank observations, two per test triple.
    pub query_count: usize,
    pub mode: RankingMode,
}

impl EvalReport {
    /// Aggregate rank observations; `None` is an unranked query and
    /// contributes nothing to any metric.
    pub fn from_ranks(ranks: &[Option<usize>], mode: RankingMode) -> EvalReport {
        let n = ranks.len();
        let mut hits = [0usize; 3];
        let mut rr = 0.0;
        for r in ranks.iter().flatten() {
            for (slot, k) in hits.iter_mut().zip([1, 3, 10]) {
                if *r <= k {
                    *slot += 1;
                }
            }
            rr += 1.0 / *r as f64;
        }
        let frac = |c: usize| if n == 0 { 0.0 } else { c as f64 / n as f64 };
        EvalReport {
            hits1: frac(hits[0]),
            hits3: frac(hits[1]),
            hits10: frac(hits[2]),
            mrr: if n == 0 { 0.0 } else { rr / n as f64 },
            query_count: n,
            mode,
        }
    }

    pub fn write(&self, path: &Path, header: Option<&str>) -> Result<()> {
        let mut text = String::new();
        if let Some(h) = header {
            text.push_str(&format!("# {h}\n"));
        }
        text.push_str(&self.to_string());
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "hits@1={}", self.hits1)?;
        writeln!(f, "hits@3={}", self.hits3)?;
        writeln!(f, "hits@10={}", self.hits10)?;
        writeln!(f, "mrr={}", self.mrr)?;
        writeln!(f, "mode={}", self.mode)?;
        writeln!(f, "n_queries={}", self.query_count)
    }
}

/// Rank of `truth` among all entities scored by `score`, ties broken by
/// entity id. With `skip`, other entities for which it returns true are left out.
fn rank_by(
    n_entities: usize,
    truth: EntityId,
    score: impl Fn(EntityId) -> f64,
    skip: impl Fn(EntityId) -> bool,
) -> usize {
    let target = score(truth);
    let mut rank = 1;
    for i in 0..n_entities as u32 {
        let e = EntityId(i);
        if e == truth || skip(e) {
            continue;
        }
        let s = score(e);
        if s > target || (s == target && e < truth) {
            rank += 1;
        }
    }
    rank
}

/// `(head rank, tail rank)` of a test triple. `known` is the union of all
/// splits and is only consulted in filtered mode.
pub fn embed_rank(params: &ModelParams, known: &KnowledgeGraph, test: &Triple, mode: RankingMode) -> (usize, usize) {
    let n = params.entity_count();
    let filtered = mode == RankingMode::Filtered;
    let (h, r, t) = (test.head, test.relation, test.tail);
    let head = rank_by(
        n,
        h,
        |e| params.score(&Triple::new(e, r, t)),
        |e| filtered && known.contains_parts(e, r, t),
    );
    let tail = rank_by(
        n,
        t,
        |e| params.score(&Triple::new(h, r, e)),
        |e| filtered && known.contains_parts(h, r, e),
    );
    (head, tail)
}

pub fn evaluate_embeddings(params: &ModelParams, data: &Dataset, mode: RankingMode) -> Result<EvalReport> {
    if data.test.is_empty() {
        return Err(Error::Evaluation("test set is empty".into()));
    }
    if let Some(bad) = data.test.iter().find(|t| !params.check_ids(t)) {
        return Err(Error::Evaluation(format!("test triple {bad:?} is outside the model vocabulary")));
    }
    let known = if mode == RankingMode::Filtered {
        data.all_known()
    } else {
        KnowledgeGraph::empty(data.vocab().clone())
    };
    let ranks: Vec<(usize, usize)> = data
        .test
        .par_iter()
        .map(|t| embed_rank(params, &known, t, mode))
        .collect();
    let flat: Vec<Option<usize>> = ranks.iter().flat_map(|&(h, t)| [Some(h), Some(t)]).collect();
    Ok(EvalReport::from_ranks(&flat, mode))
}

/// A link prediction query with one side left open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Query {
    /// `(?, r, t)`
    Head { relation: RelationId, tail: EntityId },
    /// `(h, r, ?)`
    Tail { head: EntityId, relation: RelationId },
}

impl Query {
    pub fn relation(&self) -> RelationId {
        match *self {
            Query::Head { relation, .. } | Query::Tail { relation, .. } => relation,
        }
    }
}

/// A rule-proposed entity with the best `(pca confidence, support)` among
/// the rules proposing it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleCandidate {
    pub entity: EntityId,
    pub pca_confidence: Ratio<u64>,
    pub support: u64,
}

/// Entities proposed for `query` by the rules whose head relation matches,
/// best first: pca confidence, then support, both descending, then entity id.
/// Rules without a defined pca confidence propose nothing.
pub fn rule_predict(rules: &[ScoredRule], kg: &KnowledgeGraph, query: Query, opts: MatchOptions) -> Vec<RuleCandidate> {
    let mut best: HashMap<EntityId, (Ratio<u64>, u64)> = HashMap::new();
    for scored in rules.iter().filter(|s| s.rule.head.relation == query.relation()) {
        let Ok(pca) = scored.metrics.pca_confidence() else {
            continue;
        };
        let key = (pca, scored.metrics.support);
        for e in propose(&scored.rule, kg, query, opts) {
            let slot = best.entry(e).or_insert(key);
            if key > *slot {
                *slot = key;
            }
        }
    }
    let mut out: Vec<RuleCandidate> = best
        .into_iter()
        .map(|(entity, (pca_confidence, support))| RuleCandidate {
            entity,
            pca_confidence,
            support,
        })
        .collect();
    out.sort_by(|a, b| {
        (b.pca_confidence, b.support)
            .cmp(&(a.pca_confidence, a.support))
            .then(a.entity.cmp(&b.entity))
    });
    out
}

/// Values of the open head argument implied by one rule.
fn propose(rule: &Rule, kg: &KnowledgeGraph, query: Query, opts: MatchOptions) -> HashSet<EntityId> {
    let head = rule.head;
    let (known_term, known, open_term) = match query {
        Query::Head { tail, .. } => (head.arg2, tail, head.arg1),
        Query::Tail { head: h, .. } => (head.arg1, h, head.arg2),
    };
    let mut out = HashSet::new();
    let mut binding = Binding::new(rule.var_count());
    match known_term {
        Term::Const(c) if c != known => return out,
        Term::Const(_) => {}
        Term::Var(v) => binding.set(v, known),
    }
    match open_term {
        Term::Var(v) if binding.get(v).is_none() => {
            project(kg, &rule.body, &mut binding, &[v], opts, &mut |b| {
                out.insert(b.get(v).unwrap());
            });
        }
        other => {
            let e = match other {
                Term::Const(c) => c,
                Term::Var(v) => binding.get(v).unwrap(),
            };
            if exists(kg, &rule.body, &mut binding, opts) {
                out.insert(e);
            }
        }
    }
    out
}

/// A triple derived by applying rules, with the best `(pca confidence,
/// support)` among the rules deriving it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleInference {
    pub triple: Triple,
    pub pca_confidence: Ratio<u64>,
    pub support: u64,
}

/// Every triple predicted by `rules` on `kg` that is not already in `kg`,
/// best first with ties broken by `(relation, head, tail)`.
pub fn infer_with_rules(rules: &[ScoredRule], kg: &KnowledgeGraph, opts: MatchOptions) -> Result<Vec<RuleInference>> {
    let evaluator = RuleEvaluator::new(kg, opts);
    let mut best: HashMap<Triple, (Ratio<u64>, u64)> = HashMap::new();
    for scored in rules {
        let Ok(pca) = scored.metrics.pca_confidence() else {
            continue;
        };
        let key = (pca, scored.metrics.support);
        let r = scored.rule.head.relation;
        for (s, o) in evaluator.predictions(&scored.rule)? {
            let t = Triple::new(s, r, o);
            if kg.contains(&t) {
                continue;
            }
            let slot = best.entry(t).or_insert(key);
            if key > *slot {
                *slot = key;
            }
        }
    }
    let mut out: Vec<RuleInference> = best
        .into_iter()
        .map(|(triple, (pca_confidence, support))| RuleInference {
            triple,
            pca_confidence,
            support,
        })
        .collect();
    out.sort_by(|a, b| {
        (b.pca_confidence, b.support)
            .cmp(&(a.pca_confidence, a.support))
            .then(a.triple.cmp(&b.triple))
    });
    Ok(out)
}

/// Rank of `truth` in a rule candidate list, or `None` when no rule proposes it.
fn rule_rank(candidates: &[RuleCandidate], truth: EntityId, skip: impl Fn(EntityId) -> bool) -> Option<usize> {
    let mut rank = 1;
    for c in candidates {
        if c.entity == truth {
            return Some(rank);
        }
        if !skip(c.entity) {
            rank += 1;
        }
    }
    None
}

/// Hits@k and MRR with rule predictions as the scorer. Rules are applied
/// to `kg`; an empty rule set yields an all-zero report.
pub fn evaluate_rules(
    rules: &[ScoredRule],
    kg: &KnowledgeGraph,
    data: &Dataset,
    mode: RankingMode,
    opts: MatchOptions,
) -> Result<EvalReport> {
    if data.test.is_empty() {
        return Err(Error::Evaluation("test set is empty".into()));
    }
    if rules.is_empty() {
        log::warn!("no rules to evaluate; reporting zeros");
    }
    let filtered = mode == RankingMode::Filtered;
    let known = if filtered {
        data.all_known()
    } else {
        KnowledgeGraph::empty(data.vocab().clone())
    };
    let ranks: Vec<[Option<usize>; 2]> = data
        .test
        .par_iter()
        .map(|t| {
            let (h, r, tl) = (t.head, t.relation, t.tail);
            let heads = rule_predict(rules, kg, Query::Head { relation: r, tail: tl }, opts);
            let tails = rule_predict(rules, kg, Query::Tail { head: h, relation: r }, opts);
            [
                rule_rank(&heads, h, |e| filtered && known.contains_parts(e, r, tl)),
                rule_rank(&tails, tl, |e| filtered && known.contains_parts(h, r, e)),
            ]
        })
        .collect();
    let flat: Vec<Option<usize>> = ranks.into_iter().flatten().collect();
    Ok(EvalReport::from_ranks(&flat, mode))
}
