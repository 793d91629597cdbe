//! Closed Horn rules: representation, conjunctive-query matching, quality
//! metrics and a breadth-first miner.

mod matcher;
mod metrics;
mod miner;
mod text;

use std::fmt;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::kg::{EntityId, RelationId};

pub use matcher::{exists, for_each_binding, match_query, Binding, MatchOptions};
pub(crate) use matcher::project;
pub use metrics::{
    head_coverage, pca_confidence, std_confidence, support, RuleEvaluator,
};
pub use miner::{mine_rules, MinerConfig};
pub use text::{canonical_form, canonicalize, format_rule, parse_rule, read_rules, write_rules, RuleRow};

/// Variable index; canonical rules number variables by first appearance.
pub type Var = u8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    Const(EntityId),
}

impl Term {
    pub fn var(self) -> Option<Var> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub relation: RelationId,
    pub arg1: Term,
    pub arg2: Term,
}

impl Atom {
    pub fn new(relation: RelationId, arg1: Term, arg2: Term) -> Self {
        Atom {
            relation,
            arg1,
            arg2,
        }
    }

    /// `relation(?x, ?y)`
    pub fn vars(relation: RelationId, x: Var, y: Var) -> Self {
        Atom::new(relation, Term::Var(x), Term::Var(y))
    }

    pub fn terms(&self) -> [Term; 2] {
        [self.arg1, self.arg2]
    }
}

/// `body ⇒ head`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub body: Vec<Atom>,
    pub head: Atom,
}

impl Rule {
    pub fn new(body: Vec<Atom>, head: Atom) -> Self {
        Rule { body, head }
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.body.iter().chain(std::iter::once(&self.head))
    }

    /// One past the largest variable index.
    pub fn var_count(&self) -> usize {
        self.atoms()
            .flat_map(|a| a.terms())
            .filter_map(Term::var)
            .map(|v| v as usize + 1)
            .max()
            .unwrap_or(0)
    }

    /// Occurrence count per variable index.
    pub fn occurrences(&self) -> Vec<usize> {
        let mut occ = vec![0; self.var_count()];
        for v in self.atoms().flat_map(|a| a.terms()).filter_map(Term::var) {
            occ[v as usize] += 1;
        }
        occ
    }

    /// Every head variable also appears in the body.
    pub fn is_horn(&self) -> bool {
        self.head.terms().iter().filter_map(|t| t.var()).all(|v| {
            self.body
                .iter()
                .any(|a| a.terms().contains(&Term::Var(v)))
        })
    }

    /// Every variable occurs at least twice.
    pub fn is_closed(&self) -> bool {
        self.occurrences().iter().all(|&n| n == 0 || n >= 2)
    }

    /// Variables occurring exactly once.
    pub(crate) fn open_vars(&self) -> usize {
        self.occurrences().iter().filter(|&&n| n == 1).count()
    }

    pub fn validate(&self, max_body_atoms: usize) -> Result<()> {
        if self.body.is_empty() {
            return Err(Error::Contract("rule body is empty".into()));
        }
        if self.body.len() > max_body_atoms {
            return Err(Error::Contract(format!(
                "rule body has {} atoms, limit is {max_body_atoms}",
                self.body.len()
            )));
        }
        if !self.is_horn() {
            return Err(Error::Contract("head variable missing from body".into()));
        }
        if !self.is_closed() {
            return Err(Error::Contract("rule is not closed".into()));
        }
        Ok(())
    }
}

/// Counts behind every rule quality measure. Ratios are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RuleMetrics {
    /// True predictions: distinct head instantiations with body and head in the graph.
    pub support: u64,
    /// Distinct head instantiations whose body matches.
    pub body_size: u64,
    /// Predictions that are true or PCA counter-examples.
    pub pca_body_size: u64,
    /// Triples of the head relation.
    pub head_size: u64,
}

impl RuleMetrics {
    pub fn head_coverage(&self) -> Result<Ratio<u64>> {
        if self.head_size == 0 {
            return Err(Error::UndefinedMetric("head relation has no triples".into()));
        }
        Ok(Ratio::new(self.support, self.head_size))
    }

    pub fn std_confidence(&self) -> Result<Ratio<u64>> {
        if self.body_size == 0 {
            return Err(Error::UndefinedMetric("rule makes no predictions".into()));
        }
        Ok(Ratio::new(self.support, self.body_size))
    }

    pub fn pca_confidence(&self) -> Result<Ratio<u64>> {
        if self.pca_body_size == 0 {
            return Err(Error::UndefinedMetric("rule makes no PCA-relevant predictions".into()));
        }
        Ok(Ratio::new(self.support, self.pca_body_size))
    }

    /// Counter-examples under the closed-world assumption.
    pub fn cwa_counter_examples(&self) -> u64 {
        self.body_size - self.support
    }

    pub fn pca_counter_examples(&self) -> u64 {
        self.pca_body_size - self.support
    }
}

/// A rule with the metrics it was measured with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoredRule {
    pub rule: Rule,
    pub metrics: RuleMetrics,
}

pub(crate) fn ratio_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{}", text::var_name(*v)),
            Term::Const(e) => write!(f, "#{}", e.0),
        }
    }
}
