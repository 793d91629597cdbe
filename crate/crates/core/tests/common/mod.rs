//! Brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::HashSet;

use kgenrich::kg::{EntityId, KnowledgeGraph, RelationId};
use kgenrich::rules::{Atom, Rule, Term};
use num_rational::Ratio;

/// Closed Horn rules with head `r(?a, ?b)` and one or two body atoms over
/// the variables `?a ?b ?c`, reflexive atoms included.
pub fn closed_rules(relations: usize) -> Vec<Rule> {
    let mut atoms = Vec::new();
    for r in 0..relations as u32 {
        for x in 0..3 {
            for y in 0..3 {
                atoms.push(Atom::vars(RelationId(r), x, y));
            }
        }
    }
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for h in 0..relations as u32 {
        let head = Atom::vars(RelationId(h), 0, 1);
        for (i, a) in atoms.iter().enumerate() {
            let mut bodies = vec![vec![*a]];
            bodies.extend(atoms[i..].iter().map(|b| vec![*a, *b]));
            for body in bodies {
                let rule = Rule::new(body, head);
                if rule.is_horn() && rule.is_closed() && seen.insert(rule.clone()) {
                    out.push(rule);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleMetrics {
    pub support: u64,
    pub body_size: u64,
    pub std_confidence: Option<Ratio<u64>>,
    pub pca_confidence: Option<Ratio<u64>>,
}

/// Nested loops over every assignment of `?a ?b ?c`.
pub fn oracle(kg: &KnowledgeGraph, rule: &Rule, distinct: bool) -> OracleMetrics {
    let n = kg.entity_count();
    let m = kg.relation_count();
    let mut adj = vec![false; m * n * n];
    for t in kg.triples() {
        adj[(t.relation.index() * n + t.head.index()) * n + t.tail.index()] = true;
    }
    let has = |r: RelationId, h: usize, t: usize| adj[(r.index() * n + h) * n + t];
    let val = |term: Term, env: &[usize; 3]| match term {
        Term::Var(v) => env[v as usize],
        Term::Const(e) => e.index(),
    };
    let uses_c = rule.atoms().flat_map(|a| a.terms()).any(|t| t == Term::Var(2));
    let r = rule.head.relation;

    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|s| (0..n).map(move |o| (s, o))).collect();
    let (mut support, mut body_size, mut pca_body) = (0u64, 0u64, 0u64);

    let facts: Vec<(usize, usize)> = (0..n)
        .flat_map(|s| (0..n).map(move |o| (s, o)))
        .filter(|&(s, o)| has(r, s, o))
        .collect();
    let subjects: HashSet<usize> = facts.iter().map(|f| f.0).collect();
    let objects: HashSet<usize> = facts.iter().map(|f| f.1).collect();
    // fun >= fun_inv  <=>  |subjects| >= |objects|
    let subject_functional = subjects.len() >= objects.len();

    for &(a, b) in &pairs {
        if distinct && a == b {
            continue;
        }
        let matches = |c: usize| {
            if distinct && uses_c && (c == a || c == b) {
                return false;
            }
            let env = [a, b, c];
            rule.body.iter().all(|atom| has(atom.relation, val(atom.arg1, &env), val(atom.arg2, &env)))
        };
        let fires = if uses_c { (0..n).any(matches) } else { matches(0) };
        if !fires {
            continue;
        }
        body_size += 1;
        if has(r, a, b) {
            support += 1;
        }
        let known = if subject_functional {
            (0..n).any(|o| has(r, a, o))
        } else {
            (0..n).any(|s| has(r, s, b))
        };
        if known {
            pca_body += 1;
        }
    }
    OracleMetrics {
        support,
        body_size,
        std_confidence: (body_size > 0).then(|| Ratio::new(support, body_size)),
        pca_confidence: (pca_body > 0).then(|| Ratio::new(support, pca_body)),
    }
}

pub fn entity(i: u32) -> EntityId {
    EntityId(i)
}
