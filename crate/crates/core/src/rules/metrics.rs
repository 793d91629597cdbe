//! Support, head coverage, standard (CWA) and PCA confidence.
//!
//! A prediction is a distinct instantiation of the head atom whose body
//! matches; several body derivations of the same head fact count once.
//! Under the PCA, a false prediction `r(s, o')` is only a counter-example when
//! the graph knows some `r(s, ·)` (subject-functional relations, `fun ≥ fun⁻`),
//! or symmetrically some `r(·, o)` otherwise.

use std::collections::HashSet;

use num_rational::Ratio;

use super::matcher::{project, Binding, MatchOptions};
use super::{Rule, RuleMetrics, Term, Var};
use crate::error::{Error, Result};
use crate::kg::{EntityId, FunctionalityTable, KnowledgeGraph};

/// Evaluates rules against one graph, caching its functionality table.
#[derive(Debug, Clone)]
pub struct RuleEvaluator<'a> {
    kg: &'a KnowledgeGraph,
    functionality: FunctionalityTable,
    opts: MatchOptions,
}

impl<'a> RuleEvaluator<'a> {
    pub fn new(kg: &'a KnowledgeGraph, opts: MatchOptions) -> Self {
        RuleEvaluator {
            kg,
            functionality: kg.functionality(),
            opts,
        }
    }

    pub fn with_functionality(
        kg: &'a KnowledgeGraph,
        functionality: FunctionalityTable,
        opts: MatchOptions,
    ) -> Self {
        RuleEvaluator {
            kg,
            functionality,
            opts,
        }
    }

    pub fn graph(&self) -> &'a KnowledgeGraph {
        self.kg
    }

    /// Distinct head instantiations `(subject, object)` predicted by the body.
    pub fn predictions(&self, rule: &Rule) -> Result<Vec<(EntityId, EntityId)>> {
        if rule.body.is_empty() {
            return Err(Error::Contract("rule body is empty".into()));
        }
        if !rule.is_horn() {
            return Err(Error::Contract("head variable missing from body".into()));
        }
        let head = rule.head;
        let mut head_vars: Vec<Var> = Vec::with_capacity(2);
        for v in head.terms().iter().filter_map(|t| t.var()) {
            if !head_vars.contains(&v) {
                head_vars.push(v);
            }
        }
        let resolve = |t: Term, b: &Binding| match t {
            Term::Const(e) => e,
            Term::Var(v) => b.get(v).expect("head variable bound by projection"),
        };
        let mut seen: HashSet<(EntityId, EntityId)> = HashSet::new();
        let mut out = Vec::new();
        let mut binding = Binding::new(rule.var_count());
        project(self.kg, &rule.body, &mut binding, &head_vars, self.opts, &mut |b| {
            let key = (resolve(head.arg1, b), resolve(head.arg2, b));
            if seen.insert(key) {
                out.push(key);
            }
        });
        Ok(out)
    }

    pub fn evaluate(&self, rule: &Rule) -> Result<RuleMetrics> {
        let predictions = self.predictions(rule)?;
        let r = rule.head.relation;
        let subject_functional = self.functionality.get(r).ok().map(|f| f.subject_functional());
        let mut m = RuleMetrics {
            head_size: self.kg.pairs(r).len() as u64,
            body_size: predictions.len() as u64,
            ..RuleMetrics::default()
        };
        for &(s, o) in &predictions {
            if self.kg.contains_parts(s, r, o) {
                m.support += 1;
            }
            let known = match subject_functional {
                Some(true) => !self.kg.tails_of(s, r).is_empty(),
                Some(false) => !self.kg.heads_of(r, o).is_empty(),
                None => false,
            };
            if known {
                m.pca_body_size += 1;
            }
        }
        Ok(m)
    }

    pub fn support(&self, rule: &Rule) -> Result<u64> {
        Ok(self.evaluate(rule)?.support)
    }

    pub fn std_confidence(&self, rule: &Rule) -> Result<Ratio<u64>> {
        self.evaluate(rule)?.std_confidence()
    }

    pub fn pca_confidence(&self, rule: &Rule) -> Result<Ratio<u64>> {
        self.functionality.get(rule.head.relation)?;
        self.evaluate(rule)?.pca_confidence()
    }

    pub fn head_coverage(&self, rule: &Rule) -> Result<Ratio<u64>> {
        self.evaluate(rule)?.head_coverage()
    }
}

pub fn support(kg: &KnowledgeGraph, rule: &Rule) -> Result<u64> {
    RuleEvaluator::new(kg, MatchOptions::default()).support(rule)
}

pub fn std_confidence(kg: &KnowledgeGraph, rule: &Rule) -> Result<Ratio<u64>> {
    RuleEvaluator::new(kg, MatchOptions::default()).std_confidence(rule)
}

pub fn pca_confidence(
    kg: &KnowledgeGraph,
    functionality: &FunctionalityTable,
    rule: &Rule,
) -> Result<Ratio<u64>> {
    RuleEvaluator::with_functionality(kg, functionality.clone(), MatchOptions::default())
        .pca_confidence(rule)
}

pub fn head_coverage(kg: &KnowledgeGraph, rule: &Rule) -> Result<Ratio<u64>> {
    RuleEvaluator::new(kg, MatchOptions::default()).head_coverage(rule)
}
