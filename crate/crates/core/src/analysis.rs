//! Rules mined before vs after enrichment: new, dropped and same rules, and
//! their average confidences.
//!
//! Rule identity is the canonical text, so renamed variables and reordered
//! body atoms do not count as differences. Before, dropped and same rules are
//! measured on the original graph; after and new rules on the enriched one.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, Vocab};
use crate::rules::{canonical_form, ratio_f64, write_rules, MatchOptions, RuleEvaluator, RuleRow};

/// Partition of two rule sets by canonical text. Every list is sorted by
/// canonical text; `same` keeps the rows from `before`.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleDiff {
    pub before: Vec<RuleRow>,
    pub after: Vec<RuleRow>,
    pub new_rules: Vec<RuleRow>,
    pub dropped: Vec<RuleRow>,
    pub same: Vec<RuleRow>,
}

fn by_canonical_text(rows: &[RuleRow], vocab: &Vocab) -> BTreeMap<String, RuleRow> {
    rows.iter()
        .map(|row| {
            let (rule, text) = canonical_form(&row.rule, vocab);
            (text, RuleRow { rule, ..row.clone() })
        })
        .collect()
}

pub fn diff_rules(before: &[RuleRow], after: &[RuleRow], vocab: &Vocab) -> RuleDiff {
    let b = by_canonical_text(before, vocab);
    let a = by_canonical_text(after, vocab);
    let pick = |from: &BTreeMap<String, RuleRow>, keep: &dyn Fn(&String) -> bool| -> Vec<RuleRow> {
        from.iter().filter(|(k, _)| keep(k)).map(|(_, r)| r.clone()).collect()
    };
    RuleDiff {
        new_rules: pick(&a, &|k| !b.contains_key(k)),
        dropped: pick(&b, &|k| !a.contains_key(k)),
        same: pick(&b, &|k| a.contains_key(k)),
        before: b.into_values().collect(),
        after: a.into_values().collect(),
    }
}

impl RuleDiff {
    /// `|after| = |same| + |new|` and `|before| = |same| + |dropped|`.
    pub fn identities_hold(&self) -> bool {
        self.after.len() == self.same.len() + self.new_rules.len()
            && self.before.len() == self.same.len() + self.dropped.len()
    }

    /// `diff_new.tsv`, `diff_dropped.tsv` and `diff_same.tsv` in rules TSV format.
    pub fn write(&self, dir: &Path, vocab: &Vocab, header: Option<&str>) -> Result<()> {
        for (name, rows) in [
            ("diff_new.tsv", &self.new_rules),
            ("diff_dropped.tsv", &self.dropped),
            ("diff_same.tsv", &self.same),
        ] {
            write_rules(&dir.join(name), vocab, rows, header)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Before,
    After,
    New,
    Dropped,
    Same,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Before,
        Category::After,
        Category::New,
        Category::Dropped,
        Category::Same,
    ];

    /// Graph the category is measured on.
    pub fn graph(self) -> EvaluationGraph {
        match self {
            Category::After | Category::New => EvaluationGraph::Enriched,
            Category::Before | Category::Dropped | Category::Same => EvaluationGraph::Original,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Category::Before => "before",
            Category::After => "after",
            Category::New => "new",
            Category::Dropped => "dropped",
            Category::Same => "same",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvaluationGraph {
    Original,
    Enriched,
}

impl fmt::Display for EvaluationGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvaluationGraph::Original => "original",
            EvaluationGraph::Enriched => "enriched",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategorySummary {
    pub category: Category,
    pub graph: EvaluationGraph,
    pub count: usize,
    /// `None` for an empty category.
    pub mean_std_confidence: Option<f64>,
    pub mean_pca_confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceSummary {
    pub categories: Vec<CategorySummary>,
}

impl ConfidenceSummary {
    pub fn get(&self, category: Category) -> &CategorySummary {
        self.categories
            .iter()
            .find(|c| c.category == category)
            .expect("every category is summarized")
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

impl fmt::Display for ConfidenceSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let count = |c| self.get(c).count;
        let (before, after, new, dropped, same) = (
            count(Category::Before),
            count(Category::After),
            count(Category::New),
            count(Category::Dropped),
            count(Category::Same),
        );
        writeln!(f, "before={before} after={after} new={new} dropped={dropped} same={same}")?;
        writeln!(f, "after = same + new: {after} = {same} + {new}")?;
        writeln!(f, "before = same + dropped: {before} = {same} + {dropped}")?;
        writeln!(f, "category\tgraph\tcount\tmean_std_confidence\tmean_pca_confidence")?;
        let show = |m: Option<f64>| m.map_or("-".to_owned(), |v| format!("{v:.2}"));
        for c in &self.categories {
            writeln!(
                f,
                "{}\t{}\t{}\t{}\t{}",
                c.category.name(),
                c.graph,
                c.count,
                show(c.mean_std_confidence),
                show(c.mean_pca_confidence)
            )?;
        }
        Ok(())
    }
}

/// Mean confidences per category, each rule re-measured on the graph its
/// category belongs to. An undefined confidence counts as 0.
pub fn summarize_confidence(
    diff: &RuleDiff,
    original: &KnowledgeGraph,
    enriched: &KnowledgeGraph,
    opts: MatchOptions,
) -> Result<ConfidenceSummary> {
    let on_original = RuleEvaluator::new(original, opts);
    let on_enriched = RuleEvaluator::new(enriched, opts);
    let mut categories = Vec::with_capacity(5);
    for category in Category::ALL {
        let rows = match category {
            Category::Before => &diff.before,
            Category::After => &diff.after,
            Category::New => &diff.new_rules,
            Category::Dropped => &diff.dropped,
            Category::Same => &diff.same,
        };
        let evaluator = match category.graph() {
            EvaluationGraph::Original => &on_original,
            EvaluationGraph::Enriched => &on_enriched,
        };
        let (mut std_sum, mut pca_sum) = (0.0, 0.0);
        for row in rows {
            let m = evaluator.evaluate(&row.rule)?;
            std_sum += m.std_confidence().map(ratio_f64).unwrap_or(0.0);
            pca_sum += m.pca_confidence().map(ratio_f64).unwrap_or(0.0);
        }
        let n = rows.len();
        let mean = |sum: f64| (n > 0).then(|| sum / n as f64);
        categories.push(CategorySummary {
            category,
            graph: category.graph(),
            count: n,
            mean_std_confidence: mean(std_sum),
            mean_pca_confidence: mean(pca_sum),
        });
    }
    Ok(ConfidenceSummary { categories })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{RelationId, Vocab};
    use crate::rules::{Atom, Rule};

    fn row(rule: Rule) -> RuleRow {
        RuleRow {
            rule,
            support: 1,
            head_coverage: 1.0,
            std_confidence: 1.0,
            pca_confidence: 1.0,
        }
    }

    fn vocab() -> Vocab {
        let mut v = Vocab::new();
        for r in ["p", "q", "s"] {
            v.intern_relation(r);
        }
        v
    }

    fn rel(i: u32) -> RelationId {
        RelationId(i)
    }

    #[test]
    fn identical_sets_have_no_changes() {
        let v = vocab();
        let rules = vec![row(Rule::new(vec![Atom::vars(rel(0), 0, 1)], Atom::vars(rel(1), 0, 1)))];
        let d = diff_rules(&rules, &rules, &v);
        assert!(d.new_rules.is_empty() && d.dropped.is_empty());
        assert_eq!(d.same.len(), 1);
        assert!(d.identities_hold());
    }

    #[test]
    fn renaming_and_reordering_are_the_same_rule() {
        let v = vocab();
        let a = Rule::new(
            vec![Atom::vars(rel(0), 0, 2), Atom::vars(rel(1), 2, 1)],
            Atom::vars(rel(2), 0, 1),
        );
        let b = Rule::new(
            vec![Atom::vars(rel(1), 5, 3), Atom::vars(rel(0), 4, 5)],
            Atom::vars(rel(2), 4, 3),
        );
        let d = diff_rules(&[row(a)], &[row(b)], &v);
        assert_eq!((d.same.len(), d.new_rules.len(), d.dropped.len()), (1, 0, 0));
    }

    #[test]
    fn disjoint_sets_share_nothing() {
        let v = vocab();
        let a = row(Rule::new(vec![Atom::vars(rel(0), 0, 1)], Atom::vars(rel(1), 0, 1)));
        let b = row(Rule::new(vec![Atom::vars(rel(0), 1, 0)], Atom::vars(rel(1), 0, 1)));
        let d = diff_rules(&[a], &[b], &v);
        assert_eq!((d.same.len(), d.new_rules.len(), d.dropped.len()), (0, 1, 1));
        assert!(d.identities_hold());
    }

    #[test]
    fn empty_category_prints_dash() {
        let summary = ConfidenceSummary {
            categories: Category::ALL
                .iter()
                .map(|&category| CategorySummary {
                    category,
                    graph: category.graph(),
                    count: 0,
                    mean_std_confidence: None,
                    mean_pca_confidence: None,
                })
                .collect(),
        };
        let text = summary.to_string();
        assert!(text.contains("new\tenriched\t0\t-\t-\n"), "{text}");
        assert!(text.contains("dropped\toriginal\t0\t-\t-\n"), "{text}");
    }
}
