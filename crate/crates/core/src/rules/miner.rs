//! Breadth-first closed Horn rule mining.
//!
//! Rules grow from `r(?a, ?b)` one body atom at a time. An atom is either
//! dangling (one new variable), closing (two existing variables) or, when
//! constants are allowed, instantiated (an existing variable and a constant).
//! The support of every refinement of a rule is counted in a single pass over
//! the head facts, and refinements below the support or head coverage
//! thresholds are pruned; both measures only shrink as atoms are added.

use std::collections::{HashMap, HashSet};
use std::ops::ControlFlow;

use rayon::prelude::*;

use super::matcher::{for_each_binding, Binding, MatchOptions};
use super::metrics::RuleEvaluator;
use super::text::canonical_form;
use super::{ratio_f64, Atom, Rule, ScoredRule, Term, Var};
use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, RelationId};

#[derive(Debug, Clone, PartialEq)]
pub struct MinerConfig {
    pub max_body_atoms: usize,
    pub min_support: u64,
    pub min_head_coverage: f64,
    pub min_pca_confidence: f64,
    /// Also try body atoms that bind a variable to a constant.
    pub allow_constants: bool,
    pub distinct_bindings: bool,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig {
            max_body_atoms: 2,
            min_support: 10,
            min_head_coverage: 0.01,
            min_pca_confidence: 0.1,
            allow_constants: false,
            distinct_bindings: false,
        }
    }
}

impl MinerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_body_atoms == 0 || self.max_body_atoms > 6 {
            return Err(Error::Config(format!(
                "max_body_atoms must be in 1..=6, got {}",
                self.max_body_atoms
            )));
        }
        for (name, v) in [
            ("min_head_coverage", self.min_head_coverage),
            ("min_pca_confidence", self.min_pca_confidence),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    pub fn match_options(&self) -> MatchOptions {
        MatchOptions {
            distinct_bindings: self.distinct_bindings,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Refinement {
    /// `p(v, fresh)` when `outward`, else `p(fresh, v)`.
    Dangling { var: Var, relation: RelationId, outward: bool },
    /// `p(from, to)`.
    Closing { from: Var, to: Var, relation: RelationId },
    /// `p(v, c)` when `outward`, else `p(c, v)`.
    Instantiated { var: Var, relation: RelationId, outward: bool, constant: EntityId },
}

impl Refinement {
    fn atom(self, fresh: Var) -> Atom {
        match self {
            Refinement::Dangling { var, relation, outward: true } => Atom::vars(relation, var, fresh),
            Refinement::Dangling { var, relation, outward: false } => Atom::vars(relation, fresh, var),
            Refinement::Closing { from, to, relation } => Atom::vars(relation, from, to),
            Refinement::Instantiated { var, relation, outward, constant } => {
                let (v, c) = (Term::Var(var), Term::Const(constant));
                if outward {
                    Atom::new(relation, v, c)
                } else {
                    Atom::new(relation, c, v)
                }
            }
        }
    }
}

struct Miner<'a> {
    kg: &'a KnowledgeGraph,
    cfg: &'a MinerConfig,
    opts: MatchOptions,
}

impl Miner<'_> {
    fn passes_coverage(&self, support: u64, head_size: u64) -> bool {
        support >= self.cfg.min_support
            && head_size > 0
            && support as f64 / head_size as f64 >= self.cfg.min_head_coverage
    }

    /// Support of every admissible one-atom extension of `rule`.
    fn count_refinements(&self, rule: &Rule) -> HashMap<Refinement, u64> {
        let kg = self.kg;
        let n_vars = rule.var_count();
        let occ = rule.occurrences();
        let open = rule.open_vars();
        let slots = self.cfg.max_body_atoms - rule.body.len() - 1;
        // after the extension every open variable must still be closable
        let once = |v: usize| usize::from(occ[v] == 1);
        let dangling_ok: Vec<bool> = (0..n_vars).map(|v| open - once(v) < 2 * slots).collect();
        let inst_ok: Vec<bool> = (0..n_vars).map(|v| open - once(v) <= 2 * slots).collect();
        let closing_ok = |v: usize, w: usize| open - once(v) - once(w) <= 2 * slots;
        let fresh = n_vars as Var;

        let mut counts: HashMap<Refinement, u64> = HashMap::new();
        let mut seen: HashSet<Refinement> = HashSet::new();
        let head = rule.head;
        let mut binding = Binding::new(n_vars);
        for &(s, o) in kg.pairs(head.relation) {
            if !bind_head(&head, s, o, &mut binding, self.opts) {
                continue;
            }
            seen.clear();
            let _ = for_each_binding(kg, &rule.body, &mut binding, self.opts, |b| {
                for v in 0..n_vars {
                    let e = b.get(v as Var).expect("complete binding");
                    for &(p, o) in kg.outgoing(e) {
                        if dangling_ok[v] && !(self.opts.distinct_bindings && b.clashes(fresh, o)) {
                            seen.insert(Refinement::Dangling { var: v as Var, relation: p, outward: true });
                        }
                        for w in 0..n_vars {
                            if w != v && b.get(w as Var) == Some(o) && closing_ok(v, w) {
                                seen.insert(Refinement::Closing { from: v as Var, to: w as Var, relation: p });
                            }
                        }
                        if self.cfg.allow_constants && inst_ok[v] {
                            seen.insert(Refinement::Instantiated {
                                var: v as Var,
                                relation: p,
                                outward: true,
                                constant: o,
                            });
                        }
                    }
                    for &(p, s) in kg.incoming(e) {
                        if dangling_ok[v] && !(self.opts.distinct_bindings && b.clashes(fresh, s)) {
                            seen.insert(Refinement::Dangling { var: v as Var, relation: p, outward: false });
                        }
                        if self.cfg.allow_constants && inst_ok[v] {
                            seen.insert(Refinement::Instantiated {
                                var: v as Var,
                                relation: p,
                                outward: false,
                                constant: s,
                            });
                        }
                    }
                }
                ControlFlow::Continue(())
            });
            for &r in &seen {
                *counts.entry(r).or_insert(0) += 1;
            }
            for v in head.terms().iter().filter_map(|t| t.var()) {
                binding.clear(v);
            }
        }
        counts
    }

    /// Canonical refinements of `rule` that pass the pruning thresholds.
    fn refine(&self, rule: &Rule) -> Vec<(Rule, String)> {
        let head_size = self.kg.pairs(rule.head.relation).len() as u64;
        let fresh = rule.var_count() as Var;
        let mut out = Vec::new();
        for (r, support) in self.count_refinements(rule) {
            if !self.passes_coverage(support, head_size) {
                continue;
            }
            let atom = r.atom(fresh);
            if atom == rule.head || rule.body.contains(&atom) {
                continue;
            }
            let mut body = rule.body.clone();
            body.push(atom);
            out.push(canonical_form(&Rule::new(body, rule.head), self.kg.vocab()));
        }
        out
    }

    fn score(&self, evaluator: &RuleEvaluator<'_>, rule: &Rule) -> Result<Option<ScoredRule>> {
        let metrics = evaluator.evaluate(rule)?;
        let keep = self.passes_coverage(metrics.support, metrics.head_size)
            && metrics
                .pca_confidence()
                .is_ok_and(|c| ratio_f64(c) >= self.cfg.min_pca_confidence);
        Ok(keep.then(|| ScoredRule {
            rule: rule.clone(),
            metrics,
        }))
    }
}

fn bind_head(head: &Atom, s: EntityId, o: EntityId, b: &mut Binding, opts: MatchOptions) -> bool {
    match (head.arg1, head.arg2) {
        (Term::Var(x), Term::Var(y)) if x == y => {
            if s != o {
                return false;
            }
            b.set(x, s);
        }
        (Term::Var(x), Term::Var(y)) => {
            if opts.distinct_bindings && s == o {
                return false;
            }
            b.set(x, s);
            b.set(y, o);
        }
        (Term::Var(x), Term::Const(c)) => {
            if c != o {
                return false;
            }
            b.set(x, s);
        }
        (Term::Const(c), Term::Var(y)) => {
            if c != s {
                return false;
            }
            b.set(y, o);
        }
        (Term::Const(c), Term::Const(d)) => return c == s && d == o,
    }
    true
}

/// Every closed Horn rule with at most `max_body_atoms` body atoms that meets
/// the support, head coverage and PCA confidence thresholds, in canonical form
/// and sorted by canonical text.
pub fn mine_rules(kg: &KnowledgeGraph, cfg: &MinerConfig) -> Result<Vec<ScoredRule>> {
    cfg.validate()?;
    let miner = Miner {
        kg,
        cfg,
        opts: cfg.match_options(),
    };
    let evaluator = RuleEvaluator::new(kg, miner.opts);

    let mut frontier: Vec<Rule> = kg
        .active_relations()
        .filter(|&r| miner.passes_coverage(kg.pairs(r).len() as u64, kg.pairs(r).len() as u64))
        .map(|r| Rule::new(Vec::new(), Atom::vars(r, 0, 1)))
        .collect();
    let mut visited: HashSet<String> = HashSet::new();
    let mut mined: Vec<(String, ScoredRule)> = Vec::new();

    while !frontier.is_empty() {
        let mut level: Vec<(Rule, String)> = frontier.par_iter().flat_map_iter(|r| miner.refine(r)).collect();
        level.sort_by(|a, b| a.1.cmp(&b.1));
        level.dedup_by(|a, b| a.1 == b.1);
        level.retain(|(_, text)| visited.insert(text.clone()));
        log::debug!("mining level: {} candidate rules", level.len());

        let scored: Vec<Option<(String, ScoredRule)>> = level
            .par_iter()
            .filter(|(rule, _)| rule.is_closed())
            .map(|(rule, text)| Ok(miner.score(&evaluator, rule)?.map(|s| (text.clone(), s))))
            .collect::<Result<_>>()?;
        mined.extend(scored.into_iter().flatten());

        frontier = level
            .into_iter()
            .filter(|(rule, _)| rule.body.len() < cfg.max_body_atoms)
            .map(|(rule, _)| rule)
            .collect();
    }
    mined.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(mined.into_iter().map(|(_, s)| s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{Triple, Vocab};
    use crate::rules::format_rule;
    use std::sync::Arc;

    fn family() -> KnowledgeGraph {
        let mut v = Vocab::new();
        let mut triples = Vec::new();
        for i in 0..12 {
            let (p, c, g) = (format!("p{i}"), format!("c{i}"), format!("g{i}"));
            triples.push(v.intern_triple(&p, "parent", &c));
            triples.push(v.intern_triple(&c, "child", &p));
            triples.push(v.intern_triple(&c, "parent", &g));
            triples.push(v.intern_triple(&p, "grandparent", &g));
        }
        KnowledgeGraph::from_triples(Arc::new(v), triples)
    }

    fn texts(kg: &KnowledgeGraph, rules: &[ScoredRule]) -> Vec<String> {
        rules.iter().map(|s| format_rule(&s.rule, kg.vocab())).collect()
    }

    #[test]
    fn finds_inverse_and_composition() {
        let kg = family();
        let cfg = MinerConfig {
            min_support: 5,
            ..MinerConfig::default()
        };
        let rules = mine_rules(&kg, &cfg).unwrap();
        let t = texts(&kg, &rules);
        assert!(t.contains(&"?a child ?b => ?b parent ?a".to_owned()), "{t:?}");
        assert!(t.contains(&"?a parent ?b => ?b child ?a".to_owned()), "{t:?}");
        assert!(
            t.contains(&"?a parent ?b ?b parent ?c => ?a grandparent ?c".to_owned()),
            "{t:?}"
        );
        let mut sorted = t.clone();
        sorted.sort();
        assert_eq!(t, sorted);
        for s in &rules {
            s.rule.validate(2).unwrap();
            let m = RuleEvaluator::new(&kg, MatchOptions::default()).evaluate(&s.rule).unwrap();
            assert_eq!(m, s.metrics);
            assert!(m.support >= 5);
        }
    }

    #[test]
    fn thresholds_prune() {
        let kg = family();
        let strict = MinerConfig {
            min_support: 13,
            ..MinerConfig::default()
        };
        assert!(mine_rules(&kg, &strict).unwrap().is_empty());
        let one = MinerConfig {
            min_support: 5,
            max_body_atoms: 1,
            ..MinerConfig::default()
        };
        assert!(mine_rules(&kg, &one).unwrap().iter().all(|s| s.rule.body.len() == 1));
    }

    #[test]
    fn constants_only_when_enabled() {
        let mut v = Vocab::new();
        let mut triples = Vec::new();
        for i in 0..10 {
            let x = format!("x{i}");
            triples.push(v.intern_triple(&x, "type", "city"));
            triples.push(v.intern_triple(&x, "in", &format!("c{}", i % 2)));
            triples.push(v.intern_triple(&x, "located", &format!("c{}", i % 2)));
        }
        let kg = KnowledgeGraph::from_triples(Arc::new(v), triples);
        let base = MinerConfig {
            min_support: 5,
            ..MinerConfig::default()
        };
        let without = mine_rules(&kg, &base).unwrap();
        let with = mine_rules(&kg, &MinerConfig { allow_constants: true, ..base }).unwrap();
        let has_const = |rules: &[ScoredRule]| {
            rules
                .iter()
                .any(|s| s.rule.body.iter().any(|a| matches!(a.arg2, Term::Const(_))))
        };
        assert!(!has_const(&without));
        assert!(has_const(&with));
        assert!(texts(&kg, &with).contains(&"?a in ?b ?a type \"city\" => ?a located ?b".to_owned()));
    }

    #[test]
    fn invalid_config() {
        let kg = KnowledgeGraph::from_triples(Arc::new(Vocab::new()), Vec::<Triple>::new());
        let bad = MinerConfig {
            max_body_atoms: 0,
            ..MinerConfig::default()
        };
        assert!(matches!(mine_rules(&kg, &bad), Err(Error::Config(_))));
        assert!(mine_rules(&kg, &MinerConfig::default()).unwrap().is_empty());
    }
}
