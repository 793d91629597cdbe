//! Dictionary-encoded knowledge graphs.
//!
//! Labels are interned into dense ids in first-seen order. A [`KnowledgeGraph`]
//! holds a deduplicated triple set together with the adjacency indices the
//! matcher, the candidate generator and the rankers need:
//!
//! * relation -> `(head, tail)` pairs
//! * `(head, relation)` -> tails
//! * `(relation, tail)` -> heads
//! * entity -> outgoing `(relation, tail)` and incoming `(relation, head)` edges
//!
//! Graphs are immutable once built; [`KnowledgeGraph::merge`] returns a new value.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use num_rational::Ratio;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationId(pub u32);

impl EntityId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A `(head, relation, tail)` fact.
///
/// The derived ordering is `(relation, head, tail)`, which is the order used
/// everywhere a deterministic tie-break over triples is needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: EntityId, relation: RelationId, tail: EntityId) -> Self {
        Triple {
            head,
            relation,
            tail,
        }
    }

    #[inline]
    pub fn sort_key(&self) -> (u32, u32, u32) {
        (self.relation.0, self.head.0, self.tail.0)
    }
}

impl PartialOrd for Triple {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Triple {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

#[derive(Debug, Clone, Default)]
struct LabelMap {
    labels: Vec<String>,
    ids: HashMap<String, u32>,
}

impl LabelMap {
    fn intern(&mut self, label: &str) -> u32 {
        if let Some(&id) = self.ids.get(label) {
            return id;
        }
        let id = self.labels.len() as u32;
        self.labels.push(label.to_owned());
        self.ids.insert(label.to_owned(), id);
        id
    }
}

/// Entity and relation label dictionaries.
#[derive(Debug, Clone, Default)]
pub struct Vocab {
    entities: LabelMap,
    relations: LabelMap,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern_entity(&mut self, label: &str) -> EntityId {
        EntityId(self.entities.intern(label))
    }

    pub fn intern_relation(&mut self, label: &str) -> RelationId {
        RelationId(self.relations.intern(label))
    }

    pub fn entity_id(&self, label: &str) -> Option<EntityId> {
        self.entities.ids.get(label).copied().map(EntityId)
    }

    pub fn relation_id(&self, label: &str) -> Option<RelationId> {
        self.relations.ids.get(label).copied().map(RelationId)
    }

    pub fn entity_label(&self, id: EntityId) -> &str {
        &self.entities.labels[id.index()]
    }

    pub fn relation_label(&self, id: RelationId) -> &str {
        &self.relations.labels[id.index()]
    }

    pub fn entity_count(&self) -> usize {
        self.entities.labels.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.labels.len()
    }

    pub fn entities(&self) -> impl Iterator<Item = EntityId> {
        (0..self.entity_count() as u32).map(EntityId)
    }

    pub fn relations(&self) -> impl Iterator<Item = RelationId> {
        (0..self.relation_count() as u32).map(RelationId)
    }

    /// Resolve a labeled triple, failing on any unseen label.
    pub fn lookup_triple(&self, head: &str, relation: &str, tail: &str) -> Result<Triple> {
        let h = self.entity_id(head).ok_or_else(|| Error::Vocabulary {
            kind: "entity",
            label: head.to_owned(),
        })?;
        let r = self.relation_id(relation).ok_or_else(|| Error::Vocabulary {
            kind: "relation",
            label: relation.to_owned(),
        })?;
        let t = self.entity_id(tail).ok_or_else(|| Error::Vocabulary {
            kind: "entity",
            label: tail.to_owned(),
        })?;
        Ok(Triple::new(h, r, t))
    }

    pub fn intern_triple(&mut self, head: &str, relation: &str, tail: &str) -> Triple {
        let h = self.intern_entity(head);
        let r = self.intern_relation(relation);
        let t = self.intern_entity(tail);
        Triple::new(h, r, t)
    }

    /// Write `id<TAB>label` lines for entities and relations.
    pub fn save(&self, entities: &Path, relations: &Path) -> Result<()> {
        write_id_labels(entities, &self.entities.labels)?;
        write_id_labels(relations, &self.relations.labels)
    }

    /// Read vocabulary dumps written by [`Vocab::save`].
    pub fn load(entities: &Path, relations: &Path) -> Result<Vocab> {
        Ok(Vocab {
            entities: read_id_labels(entities)?,
            relations: read_id_labels(relations)?,
        })
    }
}

fn write_id_labels(path: &Path, labels: &[String]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for (id, label) in labels.iter().enumerate() {
        writeln!(out, "{id}\t{label}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn read_id_labels(path: &Path) -> Result<LabelMap> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut map = LabelMap::default();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let parse_err = |message: String| Error::Parse {
            path: path.to_owned(),
            line: n + 1,
            message,
        };
        let (id, label) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected id<TAB>label".into()))?;
        let id: usize = id
            .parse()
            .map_err(|_| parse_err(format!("bad id {id:?}")))?;
        if id != map.labels.len() {
            return Err(parse_err(format!("ids must be contiguous, got {id}")));
        }
        if map.intern(label) as usize != id {
            return Err(parse_err(format!("duplicate label {label:?}")));
        }
    }
    Ok(map)
}

/// Read a tab-separated triple file into labeled triples, keeping line numbers
/// for error reporting. Blank lines are skipped.
pub fn read_labeled_triples(path: &Path) -> Result<Vec<[String; 3]>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: n + 1,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        out.push([
            fields[0].to_owned(),
            fields[1].to_owned(),
            fields[2].to_owned(),
        ]);
    }
    Ok(out)
}

/// Load a triple TSV.
///
/// Without a vocabulary, a fresh one is built in first-seen order. With one,
/// every label must already be known.
pub fn load_triples(path: &Path, vocab: Option<Arc<Vocab>>) -> Result<KnowledgeGraph> {
    let rows = read_labeled_triples(path)?;
    match vocab {
        Some(vocab) => {
            let mut triples = Vec::with_capacity(rows.len());
            for (n, [h, r, t]) in rows.iter().enumerate() {
                let triple = vocab.lookup_triple(h, r, t).map_err(|e| Error::Parse {
                    path: path.to_owned(),
                    line: n + 1,
                    message: e.to_string(),
                })?;
                triples.push(triple);
            }
            Ok(KnowledgeGraph::from_triples(vocab, triples))
        }
        None => {
            let mut vocab = Vocab::new();
            let triples: Vec<Triple> = rows
                .iter()
                .map(|[h, r, t]| vocab.intern_triple(h, r, t))
                .collect();
            Ok(KnowledgeGraph::from_triples(Arc::new(vocab), triples))
        }
    }
}

/// Write triples as `head<TAB>relation<TAB>tail` lines.
pub fn save_triples<'a>(
    path: &Path,
    vocab: &Vocab,
    triples: impl IntoIterator<Item = &'a Triple>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for t in triples {
        writeln!(
            out,
            "{}\t{}\t{}",
            vocab.entity_label(t.head),
            vocab.relation_label(t.relation),
            vocab.entity_label(t.tail)
        )
        .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Immutable, indexed triple set over a shared vocabulary.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    vocab: Arc<Vocab>,
    triples: Vec<Triple>,
    set: HashSet<Triple>,
    by_relation: Vec<Vec<(EntityId, EntityId)>>,
    tails: HashMap<(EntityId, RelationId), Vec<EntityId>>,
    heads: HashMap<(RelationId, EntityId), Vec<EntityId>>,
    outgoing: Vec<Vec<(RelationId, EntityId)>>,
    incoming: Vec<Vec<(RelationId, EntityId)>>,
}

impl KnowledgeGraph {
    pub fn empty(vocab: Arc<Vocab>) -> Self {
        let n_rel = vocab.relation_count();
        let n_ent = vocab.entity_count();
        KnowledgeGraph {
            vocab,
            triples: Vec::new(),
            set: HashSet::new(),
            by_relation: vec![Vec::new(); n_rel],
            tails: HashMap::new(),
            heads: HashMap::new(),
            outgoing: vec![Vec::new(); n_ent],
            incoming: vec![Vec::new(); n_ent],
        }
    }

    /// Build a graph; duplicates collapse and insertion order is kept.
    ///
    /// Panics if a triple references an id outside the vocabulary.
    pub fn from_triples(vocab: Arc<Vocab>, triples: impl IntoIterator<Item = Triple>) -> Self {
        let mut kg = Self::empty(vocab);
        for t in triples {
            kg.insert(t);
        }
        kg
    }

    fn insert(&mut self, t: Triple) -> bool {
        assert!(
            t.head.index() < self.vocab.entity_count()
                && t.tail.index() < self.vocab.entity_count()
                && t.relation.index() < self.vocab.relation_count(),
            "triple {t:?} outside vocabulary"
        );
        if !self.set.insert(t) {
            return false;
        }
        self.triples.push(t);
        self.by_relation[t.relation.index()].push((t.head, t.tail));
        self.tails.entry((t.head, t.relation)).or_default().push(t.tail);
        self.heads.entry((t.relation, t.tail)).or_default().push(t.head);
        self.outgoing[t.head.index()].push((t.relation, t.tail));
        self.incoming[t.tail.index()].push((t.relation, t.head));
        true
    }

    /// Union with `added`; the receiver is left untouched.
    pub fn merge(&self, added: &[Triple]) -> KnowledgeGraph {
        let mut out = self.clone();
        for &t in added {
            out.insert(t);
        }
        out
    }

    pub fn vocab(&self) -> &Arc<Vocab> {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn entity_count(&self) -> usize {
        self.vocab.entity_count()
    }

    pub fn relation_count(&self) -> usize {
        self.vocab.relation_count()
    }

    /// Triples in insertion order.
    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    #[inline]
    pub fn contains(&self, t: &Triple) -> bool {
        self.set.contains(t)
    }

    #[inline]
    pub fn contains_parts(&self, head: EntityId, relation: RelationId, tail: EntityId) -> bool {
        self.set.contains(&Triple::new(head, relation, tail))
    }

    /// All `(head, tail)` pairs of a relation.
    pub fn pairs(&self, relation: RelationId) -> &[(EntityId, EntityId)] {
        self.by_relation
            .get(relation.index())
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn tails_of(&self, head: EntityId, relation: RelationId) -> &[EntityId] {
        self.tails
            .get(&(head, relation))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn heads_of(&self, relation: RelationId, tail: EntityId) -> &[EntityId] {
        self.heads
            .get(&(relation, tail))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn outgoing(&self, entity: EntityId) -> &[(RelationId, EntityId)] {
        self.outgoing
            .get(entity.index())
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn incoming(&self, entity: EntityId) -> &[(RelationId, EntityId)] {
        self.incoming
            .get(entity.index())
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Relations with at least one triple, ascending by id.
    pub fn active_relations(&self) -> impl Iterator<Item = RelationId> + '_ {
        self.by_relation
            .iter()
            .enumerate()
            .filter(|(_, pairs)| !pairs.is_empty())
            .map(|(r, _)| RelationId(r as u32))
    }

    pub fn functionality(&self) -> FunctionalityTable {
        FunctionalityTable::compute(self)
    }

    pub fn stats(&self) -> GraphStats {
        let active_entities = self
            .outgoing
            .iter()
            .zip(&self.incoming)
            .filter(|(o, i)| !o.is_empty() || !i.is_empty())
            .count();
        GraphStats {
            triples: self.len(),
            entities: self.entity_count(),
            relations: self.relation_count(),
            active_entities,
            active_relations: self.active_relations().count(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_triples(path, &self.vocab, &self.triples)
    }
}

/// Summary counts, printed as `key=value` lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphStats {
    pub triples: usize,
    pub entities: usize,
    pub relations: usize,
    pub active_entities: usize,
    pub active_relations: usize,
}

impl fmt::Display for GraphStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "triples={}", self.triples)?;
        writeln!(f, "entities={}", self.entities)?;
        writeln!(f, "relations={}", self.relations)?;
        writeln!(f, "active_entities={}", self.active_entities)?;
        writeln!(f, "active_relations={}", self.active_relations)
    }
}

/// Functionality of a relation and of its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Functionality {
    pub fun: Ratio<u64>,
    pub fun_inv: Ratio<u64>,
}

impl Functionality {
    /// `fun >= fun_inv`; ties count as subject-functional.
    pub fn subject_functional(&self) -> bool {
        self.fun >= self.fun_inv
    }
}

#[derive(Debug, Clone)]
pub struct FunctionalityTable {
    entries: Vec<Option<Functionality>>,
}

impl FunctionalityTable {
    pub fn compute(kg: &KnowledgeGraph) -> Self {
        let entries = (0..kg.relation_count() as u32)
            .map(|r| {
                let pairs = kg.pairs(RelationId(r));
                if pairs.is_empty() {
                    return None;
                }
                let subjects: HashSet<EntityId> = pairs.iter().map(|p| p.0).collect();
                let objects: HashSet<EntityId> = pairs.iter().map(|p| p.1).collect();
                let n = pairs.len() as u64;
                Some(Functionality {
                    fun: Ratio::new(subjects.len() as u64, n),
                    fun_inv: Ratio::new(objects.len() as u64, n),
                })
            })
            .collect();
        FunctionalityTable { entries }
    }

    /// Errors for relations without triples.
    pub fn get(&self, relation: RelationId) -> Result<Functionality> {
        self.entries
            .get(relation.index())
            .copied()
            .flatten()
            .ok_or_else(|| Error::Contract(format!("relation {} has no triples", relation.0)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (RelationId, Functionality)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(r, f)| f.map(|f| (RelationId(r as u32), f)))
    }
}

/// Train graph plus held-out valid/test triples over one vocabulary.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: KnowledgeGraph,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
    /// Held-out triples discarded because they repeat an earlier part or
    /// mention an entity or relation absent from train.
    pub discarded: usize,
}

impl Dataset {
    /// Load train/valid/test files. Ids are assigned in first-seen order over
    /// train, then valid, then test.
    pub fn load(train: &Path, valid: Option<&Path>, test: Option<&Path>) -> Result<Dataset> {
        let train_rows = read_labeled_triples(train)?;
        let valid_rows = valid.map(read_labeled_triples).transpose()?.unwrap_or_default();
        let test_rows = test.map(read_labeled_triples).transpose()?.unwrap_or_default();

        let mut vocab = Vocab::new();
        let mut intern = |rows: &[[String; 3]]| -> Vec<Triple> {
            rows.iter()
                .map(|[h, r, t]| vocab.intern_triple(h, r, t))
                .collect()
        };
        let train_triples = intern(&train_rows);
        let valid_triples = intern(&valid_rows);
        let test_triples = intern(&test_rows);

        let train = KnowledgeGraph::from_triples(Arc::new(vocab), train_triples);
        Ok(Dataset::from_parts(train, valid_triples, test_triples))
    }

    /// Enforce the split invariants: parts are disjoint and held-out triples
    /// only mention entities and relations seen in train.
    pub fn from_parts(train: KnowledgeGraph, valid: Vec<Triple>, test: Vec<Triple>) -> Dataset {
        let covered_entities: HashSet<EntityId> = train
            .triples()
            .iter()
            .flat_map(|t| [t.head, t.tail])
            .collect();
        let covered_relations: HashSet<RelationId> = train.active_relations().collect();
        let mut seen: HashSet<Triple> = HashSet::new();
        let mut discarded = 0;
        let mut keep = |triples: Vec<Triple>| -> Vec<Triple> {
            let mut out = Vec::with_capacity(triples.len());
            for t in triples {
                let ok = !train.contains(&t)
                    && covered_entities.contains(&t.head)
                    && covered_entities.contains(&t.tail)
                    && covered_relations.contains(&t.relation)
                    && seen.insert(t);
                if ok {
                    out.push(t);
                } else {
                    discarded += 1;
                }
            }
            out
        };
        let valid = keep(valid);
        let test = keep(test);
        Dataset {
            train,
            valid,
            test,
            discarded,
        }
    }

    pub fn vocab(&self) -> &Arc<Vocab> {
        self.train.vocab()
    }

    /// Every known-true triple: train, valid and test.
    pub fn all_known(&self) -> KnowledgeGraph {
        let mut extra = self.valid.clone();
        extra.extend_from_slice(&self.test);
        self.train.merge(&extra)
    }
}
