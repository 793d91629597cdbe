//! Graph enrichment by embedding-based link prediction.
//!
//! Candidate triples are the product `E₁ × T × E₂` of two disjoint entity
//! samples and a relation set, minus the triples already in the graph. The
//! product is never materialized: it is streamed row by row `(relation, head)`
//! and scored in parallel, each worker keeping a bounded top-k. Ranking is a
//! strict total order (score descending, then `(relation, head, tail)`
//! ascending), so the selection does not depend on how the work is split.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::cmp::Reverse;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::embed::ModelParams;
use crate::error::{Error, Result};
use crate::kg::{read_labeled_triples, EntityId, KnowledgeGraph, RelationId, Triple, Vocab};

#[derive(Debug, Clone, PartialEq)]
pub struct EnrichmentConfig {
    /// Relations to predict; sampled when empty.
    pub target_relations: Vec<RelationId>,
    pub sample_entities: usize,
    pub sample_relations: usize,
    pub top_k: usize,
    pub seed: u64,
}

impl Default for EnrichmentConfig {
    fn default() -> Self {
        EnrichmentConfig {
            target_relations: Vec::new(),
            sample_entities: 1000,
            sample_relations: 10,
            top_k: 50,
            seed: 0,
        }
    }
}

impl EnrichmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_entities == 0 || self.sample_relations == 0 || self.top_k == 0 {
            return Err(Error::Config(
                "sample sizes and top-k must all be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredTriple {
    pub triple: Triple,
    pub score: f64,
}

impl ScoredTriple {
    /// Better-first: higher score, then smaller `(relation, head, tail)`.
    fn rank_cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.triple.cmp(&self.triple))
    }
}

#[derive(Debug, Clone, Copy)]
struct Ranked(ScoredTriple);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.rank_cmp(&other.0)
    }
}

/// Keeps the `k` best items seen so far; the worst retained item sits on top.
#[derive(Debug, Clone)]
pub(crate) struct TopK {
    k: usize,
    heap: BinaryHeap<Reverse<Ranked>>,
}

impl TopK {
    pub(crate) fn new(k: usize) -> Self {
        TopK {
            k,
            heap: BinaryHeap::with_capacity(k.min(1 << 16) + 1),
        }
    }

    pub(crate) fn push(&mut self, item: ScoredTriple) {
        if self.k == 0 {
            return;
        }
        if self.heap.len() < self.k {
            self.heap.push(Reverse(Ranked(item)));
        } else if let Some(Reverse(worst)) = self.heap.peek() {
            if Ranked(item) > *worst {
                self.heap.pop();
                self.heap.push(Reverse(Ranked(item)));
            }
        }
    }

    pub(crate) fn merge(mut self, other: TopK) -> TopK {
        for Reverse(Ranked(item)) in other.heap {
            self.push(item);
        }
        self
    }

    /// Best first.
    pub(crate) fn into_sorted(self) -> Vec<ScoredTriple> {
        let mut items: Vec<ScoredTriple> = self.heap.into_iter().map(|r| r.0 .0).collect();
        items.sort_by(|a, b| b.rank_cmp(a));
        items
    }
}

/// The lazily enumerated candidate set `E₁ × T × E₂ \ G`.
#[derive(Debug, Clone)]
pub struct CandidateSet<'a> {
    kg: &'a KnowledgeGraph,
    relations: Vec<RelationId>,
    heads: Vec<EntityId>,
    tails: Vec<EntityId>,
}

impl<'a> CandidateSet<'a> {
    /// Build from explicit samples; each list is sorted and deduplicated.
    pub fn new(
        kg: &'a KnowledgeGraph,
        mut relations: Vec<RelationId>,
        mut heads: Vec<EntityId>,
        mut tails: Vec<EntityId>,
    ) -> Self {
        relations.sort_unstable();
        relations.dedup();
        heads.sort_unstable();
        heads.dedup();
        tails.sort_unstable();
        tails.dedup();
        CandidateSet {
            kg,
            relations,
            heads,
            tails,
        }
    }

    pub fn relations(&self) -> &[RelationId] {
        &self.relations
    }

    pub fn heads(&self) -> &[EntityId] {
        &self.heads
    }

    pub fn tails(&self) -> &[EntityId] {
        &self.tails
    }

    /// `|E₁| · |T| · |E₂|`, an upper bound on the candidate count.
    pub fn product_size(&self) -> usize {
        self.relations.len() * self.heads.len() * self.tails.len()
    }

    fn row(&self, r: RelationId, h: EntityId) -> impl Iterator<Item = Triple> + '_ {
        self.tails
            .iter()
            .map(move |&t| Triple::new(h, r, t))
            .filter(move |c| !self.kg.contains(c))
    }

    /// Candidates in `(relation, head, tail)` order.
    pub fn iter(&self) -> impl Iterator<Item = Triple> + '_ {
        self.relations
            .iter()
            .flat_map(move |&r| self.heads.iter().flat_map(move |&h| self.row(r, h)))
    }

    pub fn len(&self) -> usize {
        self.iter().count()
    }

    pub fn is_empty(&self) -> bool {
        self.iter().next().is_none()
    }

    pub fn to_vec(&self) -> Vec<Triple> {
        self.iter().collect()
    }
}

#[derive(Debug, Clone)]
pub struct EnrichmentResult {
    pub enriched: KnowledgeGraph,
    /// Selected triples, best first.
    pub added: Vec<ScoredTriple>,
}

impl EnrichmentResult {
    pub fn added_triples(&self) -> Vec<Triple> {
        self.added.iter().map(|s| s.triple).collect()
    }
}

/// Sample the relation set and two disjoint entity sets of size `n`.
pub fn find_candidate_triples<'a, R: Rng + ?Sized>(
    kg: &'a KnowledgeGraph,
    config: &EnrichmentConfig,
    rng: &mut R,
) -> Result<CandidateSet<'a>> {
    config.validate()?;
    let entities: Vec<EntityId> = {
        let mut seen = vec![false; kg.entity_count()];
        for t in kg.triples() {
            seen[t.head.index()] = true;
            seen[t.tail.index()] = true;
        }
        (0..kg.entity_count() as u32)
            .map(EntityId)
            .filter(|e| seen[e.index()])
            .collect()
    };
    let n = config.sample_entities;
    if 2 * n > entities.len() {
        return Err(Error::Config(format!(
            "disjoint entity samples need 2n <= |E|, got n = {n} with |E| = {}",
            entities.len()
        )));
    }

    let relations: Vec<RelationId> = if config.target_relations.is_empty() {
        let all: Vec<RelationId> = kg.active_relations().collect();
        let m = config.sample_relations.min(all.len());
        index::sample(rng, all.len(), m).into_iter().map(|i| all[i]).collect()
    } else {
        if let Some(r) = config
            .target_relations
            .iter()
            .find(|r| r.index() >= kg.relation_count())
        {
            return Err(Error::Config(format!("unknown target relation id {}", r.0)));
        }
        config.target_relations.clone()
    };

    let picked = index::sample(rng, entities.len(), 2 * n).into_vec();
    let heads = picked[..n].iter().map(|&i| entities[i]).collect();
    let tails = picked[n..].iter().map(|&i| entities[i]).collect();
    Ok(CandidateSet::new(kg, relations, heads, tails))
}

/// Score candidates and keep the `k` best, ties broken by `(relation, head, tail)`.
pub fn select_top_k(params: &ModelParams, candidates: &[Triple], k: usize) -> Vec<ScoredTriple> {
    candidates
        .par_chunks(4096)
        .fold(
            || TopK::new(k),
            |mut top, chunk| {
                for &triple in chunk {
                    top.push(ScoredTriple {
                        triple,
                        score: params.score(&triple),
                    });
                }
                top
            },
        )
        .reduce(|| TopK::new(k), TopK::merge)
        .into_sorted()
}

/// Score every candidate, add the `k` best to a copy of the graph.
pub fn infer_new_triples(
    kg: &KnowledgeGraph,
    candidates: &CandidateSet<'_>,
    params: &ModelParams,
    k: usize,
) -> EnrichmentResult {
    let rows: Vec<(RelationId, EntityId)> = candidates
        .relations
        .iter()
        .flat_map(|&r| candidates.heads.iter().map(move |&h| (r, h)))
        .collect();
    let added = rows
        .par_iter()
        .fold(
            || TopK::new(k),
            |mut top, &(r, h)| {
                for triple in candidates.row(r, h) {
                    top.push(ScoredTriple {
                        triple,
                        score: params.score(&triple),
                    });
                }
                top
            },
        )
        .reduce(|| TopK::new(k), TopK::merge)
        .into_sorted();
    let triples: Vec<Triple> = added.iter().map(|s| s.triple).collect();
    EnrichmentResult {
        enriched: kg.merge(&triples),
        added,
    }
}

/// Candidate generation followed by top-k inference, seeded from `config.seed`.
pub fn enrich(
    kg: &KnowledgeGraph,
    params: &ModelParams,
    config: &EnrichmentConfig,
) -> Result<EnrichmentResult> {
    if params.entity_count() != kg.entity_count() || params.relation_count() != kg.relation_count() {
        return Err(Error::Contract("model and graph vocabularies differ in size".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let candidates = find_candidate_triples(kg, config, &mut rng)?;
    log::info!(
        "scoring up to {} candidates over {} relations",
        candidates.product_size(),
        candidates.relations().len()
    );
    Ok(infer_new_triples(kg, &candidates, params, config.top_k))
}

/// Write `head<TAB>relation<TAB>tail<TAB>score` lines, best first.
pub fn save_manifest(path: &Path, vocab: &Vocab, added: &[ScoredTriple]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for s in added {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            vocab.entity_label(s.triple.head),
            vocab.relation_label(s.triple.relation),
            vocab.entity_label(s.triple.tail),
            s.score
        )
        .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn load_manifest(path: &Path, vocab: &Vocab) -> Result<Vec<ScoredTriple>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_owned(),
            line: n + 1,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(parse_err(format!("expected 4 fields, found {}", fields.len())));
        }
        let triple = vocab
            .lookup_triple(fields[0], fields[1], fields[2])
            .map_err(|e| parse_err(e.to_string()))?;
        let score = fields[3]
            .parse()
            .map_err(|_| parse_err(format!("bad score {:?}", fields[3])))?;
        out.push(ScoredTriple { triple, score });
    }
    Ok(out)
}

/// Read a plain triple TSV against an existing vocabulary (e.g. an enriched graph).
pub fn load_enriched(path: &Path, vocab: &std::sync::Arc<Vocab>) -> Result<KnowledgeGraph> {
    let rows = read_labeled_triples(path)?;
    let triples = rows
        .iter()
        .map(|[h, r, t]| vocab.lookup_triple(h, r, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(KnowledgeGraph::from_triples(vocab.clone(), triples))
}
