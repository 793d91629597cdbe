//! Rule text format and rule TSV files.
//!
//! ```text
//! ?a hypernym ?c ?c hypernym ?b => ?a hypernym ?b
//! ?a born_in "Paris" => ?a nationality "France"
//! ```
//!
//! Atoms are `term relation term`, body atoms are separated by single spaces,
//! and constants are double-quoted entity labels (`\"` and `\\` escaped).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Atom, Rule, RuleMetrics, ScoredRule, Term, Var};
use crate::error::{Error, Result};
use crate::kg::Vocab;

const ARROW: &str = " => ";

pub(crate) fn var_name(v: Var) -> char {
    assert!(v < 26, "variable index {v} has no name");
    (b'a' + v) as char
}

fn write_term(out: &mut String, term: Term, vocab: &Vocab) {
    match term {
        Term::Var(v) => {
            out.push('?');
            out.push(var_name(v));
        }
        Term::Const(e) => {
            out.push('"');
            for c in vocab.entity_label(e).chars() {
                if c == '"' || c == '\\' {
                    out.push('\\');
                }
                out.push(c);
            }
            out.push('"');
        }
    }
}

fn write_atom(out: &mut String, atom: &Atom, vocab: &Vocab) {
    write_term(out, atom.arg1, vocab);
    let _ = write!(out, " {} ", vocab.relation_label(atom.relation));
    write_term(out, atom.arg2, vocab);
}

pub fn format_rule(rule: &Rule, vocab: &Vocab) -> String {
    let mut out = String::new();
    for (i, atom) in rule.body.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write_atom(&mut out, atom, vocab);
    }
    out.push_str(ARROW);
    write_atom(&mut out, &rule.head, vocab);
    out
}

fn renumber(body: &[Atom], head: &Atom) -> Rule {
    let mut map: HashMap<Var, Var> = HashMap::new();
    let mut rename = |t: Term| match t {
        Term::Var(v) => {
            let next = map.len() as Var;
            Term::Var(*map.entry(v).or_insert(next))
        }
        c => c,
    };
    let mut atom = |a: &Atom| {
        let x = rename(a.arg1);
        let y = rename(a.arg2);
        Atom::new(a.relation, x, y)
    };
    let body: Vec<Atom> = body.iter().map(&mut atom).collect();
    let head = atom(head);
    Rule::new(body, head)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Canonical form and its text: over all body orderings with variables
/// renumbered by first appearance, the one with the smallest text.
pub fn canonical_form(rule: &Rule, vocab: &Vocab) -> (Rule, String) {
    let mut best: Option<(Rule, String)> = None;
    for perm in permutations(rule.body.len()) {
        let body: Vec<Atom> = perm.iter().map(|&i| rule.body[i]).collect();
        let candidate = renumber(&body, &rule.head);
        let text = format_rule(&candidate, vocab);
        if best.as_ref().is_none_or(|(_, t)| text < *t) {
            best = Some((candidate, text));
        }
    }
    best.expect("at least one ordering")
}

pub fn canonicalize(rule: &Rule, vocab: &Vocab) -> Rule {
    canonical_form(rule, vocab).0
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    vocab: &'a Vocab,
}

impl<'a> Parser<'a> {
    fn error(&self, position: usize, message: impl Into<String>) -> Error {
        Error::RuleSyntax {
            position,
            message: message.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    /// Length in bytes of a term starting at `at`, without consuming it.
    fn term_len(&self, at: usize) -> Option<usize> {
        let s = &self.src[at..];
        let mut chars = s.char_indices();
        match chars.next()? {
            (_, '?') => match chars.next() {
                Some((_, c)) if c.is_ascii_lowercase() => Some(2),
                _ => None,
            },
            (_, '"') => {
                let mut escaped = false;
                for (i, c) in chars {
                    match (escaped, c) {
                        (true, _) => escaped = false,
                        (false, '\\') => escaped = true,
                        (false, '"') => return Some(i + 1),
                        _ => {}
                    }
                }
                None
            }
            _ => None,
        }
    }

    fn term(&mut self, vars: &mut HashMap<char, Var>) -> Result<Term> {
        let start = self.pos;
        let len = self
            .term_len(start)
            .ok_or_else(|| self.error(start, "expected a variable `?x` or a quoted constant"))?;
        let raw = &self.src[start..start + len];
        self.pos += len;
        if let Some(name) = raw.strip_prefix('?') {
            let c = name.chars().next().unwrap();
            let next = vars.len() as Var;
            return Ok(Term::Var(*vars.entry(c).or_insert(next)));
        }
        let mut label = String::with_capacity(len);
        let mut escaped = false;
        for c in raw[1..len - 1].chars() {
            if !escaped && c == '\\' {
                escaped = true;
                continue;
            }
            escaped = false;
            label.push(c);
        }
        self.vocab
            .entity_id(&label)
            .map(Term::Const)
            .ok_or_else(|| self.error(start, format!("unknown entity \"{label}\"")))
    }

    fn space(&mut self) -> Result<()> {
        if self.rest().starts_with(' ') {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(self.pos, "expected a space"))
        }
    }

    fn atom(&mut self, end: usize, vars: &mut HashMap<char, Var>) -> Result<Atom> {
        let arg1 = self.term(vars)?;
        self.space()?;
        let start = self.pos;
        // the relation label runs up to the first space that is followed by a term
        let stop = (start..end)
            .filter(|&i| self.src.as_bytes()[i] == b' ')
            .find(|&i| self.term_len(i + 1).is_some_and(|n| i + 1 + n <= end))
            .ok_or_else(|| self.error(start, "expected `relation term` after the first term"))?;
        if stop == start {
            return Err(self.error(start, "empty relation label"));
        }
        let label = &self.src[start..stop];
        let relation = self
            .vocab
            .relation_id(label)
            .ok_or_else(|| self.error(start, format!("unknown relation `{label}`")))?;
        self.pos = stop + 1;
        let arg2 = self.term(vars)?;
        Ok(Atom::new(relation, arg1, arg2))
    }

    fn atoms(&mut self, end: usize, vars: &mut HashMap<char, Var>) -> Result<Vec<Atom>> {
        let mut atoms = vec![self.atom(end, vars)?];
        while self.pos < end {
            self.space()?;
            atoms.push(self.atom(end, vars)?);
        }
        Ok(atoms)
    }
}

/// Parse `body => head`. Variables are numbered by first appearance; the
/// result is not canonicalized.
pub fn parse_rule(text: &str, vocab: &Vocab) -> Result<Rule> {
    let text = text.trim_end_matches(['\n', '\r']);
    let arrow = text.find(ARROW).ok_or(Error::RuleSyntax {
        position: 0,
        message: "missing ` => `".into(),
    })?;
    let mut p = Parser {
        src: text,
        pos: 0,
        vocab,
    };
    if arrow == 0 {
        return Err(p.error(0, "empty body"));
    }
    let mut vars = HashMap::new();
    let body = p.atoms(arrow, &mut vars)?;
    if p.pos != arrow {
        return Err(p.error(p.pos, "unexpected text before ` => `"));
    }
    p.pos = arrow + ARROW.len();
    let head_start = p.pos;
    let head = p.atoms(text.len(), &mut vars)?;
    if head.len() != 1 {
        return Err(p.error(head_start, "head must be a single atom"));
    }
    if vars.len() > 26 {
        return Err(p.error(0, "too many variables"));
    }
    Ok(Rule::new(body, head[0]))
}

/// One row of a rules TSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleRow {
    pub rule: Rule,
    pub support: u64,
    pub head_coverage: f64,
    pub std_confidence: f64,
    pub pca_confidence: f64,
}

impl RuleRow {
    pub fn from_metrics(rule: Rule, m: &RuleMetrics) -> Self {
        let f = |r: Result<num_rational::Ratio<u64>>| r.map(super::ratio_f64).unwrap_or(0.0);
        RuleRow {
            rule,
            support: m.support,
            head_coverage: f(m.head_coverage()),
            std_confidence: f(m.std_confidence()),
            pca_confidence: f(m.pca_confidence()),
        }
    }
}

impl From<&ScoredRule> for RuleRow {
    fn from(s: &ScoredRule) -> Self {
        RuleRow::from_metrics(s.rule.clone(), &s.metrics)
    }
}

/// `rule \t support \t head_coverage \t std_confidence \t pca_confidence`,
/// preceded by `# header` when given.
pub fn write_rules(path: &Path, vocab: &Vocab, rows: &[RuleRow], header: Option<&str>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        if let Some(h) = header {
            writeln!(w, "# {h}")?;
        }
        for row in rows {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                format_rule(&row.rule, vocab),
                row.support,
                row.head_coverage,
                row.std_confidence,
                row.pca_confidence
            )?;
        }
        w.flush()
    };
    emit().map_err(|e| Error::io(path, e))
}

pub fn read_rules(path: &Path, vocab: &Vocab) -> Result<Vec<RuleRow>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(parse_err(format!("expected 5 tab-separated fields, found {}", fields.len())));
        }
        let rule = parse_rule(fields[0], vocab).map_err(|e| parse_err(e.to_string()))?;
        let support = fields[1]
            .parse()
            .map_err(|_| parse_err(format!("bad support `{}`", fields[1])))?;
        let ratio = |k: usize| -> Result<f64> {
            fields[k]
                .parse()
                .map_err(|_| parse_err(format!("bad number `{}`", fields[k])))
        };
        rows.push(RuleRow {
            rule,
            support,
            head_coverage: ratio(2)?,
            std_confidence: ratio(3)?,
            pca_confidence: ratio(4)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{EntityId, RelationId};

    fn vocab() -> Vocab {
        let mut v = Vocab::new();
        v.intern_triple("Paris", "born in", "France");
        v.intern_triple("say \"hi\"", "nationality", "a\\b");
        v.intern_relation("hypernym");
        v
    }

    #[test]
    fn round_trip() {
        let v = vocab();
        for text in [
            "?a hypernym ?b ?b hypernym ?c => ?a hypernym ?c",
            "?a born in \"Paris\" => ?a nationality \"France\"",
            "?a born in ?a => ?a nationality \"say \\\"hi\\\"\"",
            "?a nationality \"a\\\\b\" => ?a hypernym ?a",
        ] {
            let rule = parse_rule(text, &v).unwrap();
            assert_eq!(format_rule(&rule, &v), text);
        }
    }

    #[test]
    fn variables_numbered_by_first_appearance() {
        let v = vocab();
        let rule = parse_rule("?q hypernym ?p => ?q hypernym ?p", &v).unwrap();
        assert_eq!(format_rule(&rule, &v), "?a hypernym ?b => ?a hypernym ?b");
    }

    #[test]
    fn relation_labels_with_spaces() {
        let v = vocab();
        let rule = parse_rule("?x born in ?y => ?y hypernym ?x", &v).unwrap();
        assert_eq!(rule.body, vec![Atom::vars(RelationId(0), 0, 1)]);
        assert_eq!(rule.head, Atom::vars(RelationId(2), 1, 0));
        let c = parse_rule("?x born in \"France\" => ?x hypernym ?x", &v).unwrap();
        assert_eq!(c.body[0].arg2, Term::Const(EntityId(1)));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let v = vocab();
        let cases = [
            ("?a hypernym ?b", 0),
            ("=> ?a hypernym ?b", 0),
            ("?a hypernym ?b => ?a nope ?b", 21),
            ("?a hypernym \"Nowhere\" => ?a hypernym ?a", 12),
            ("?a hypernym ?b => ?a hypernym ?b ?b hypernym ?a", 18),
            ("a hypernym ?b => ?a hypernym ?b", 0),
        ];
        for (text, pos) in cases {
            match parse_rule(text, &v) {
                Err(Error::RuleSyntax { position, .. }) => assert_eq!(position, pos, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn canonical_form_ignores_body_order_and_names() {
        let v = vocab();
        let a = parse_rule("?a hypernym ?c ?c born in ?b => ?a nationality ?b", &v).unwrap();
        let b = parse_rule("?z born in ?y ?x hypernym ?z => ?x nationality ?y", &v).unwrap();
        let (ca, ta) = canonical_form(&a, &v);
        let (cb, tb) = canonical_form(&b, &v);
        assert_eq!(ca, cb);
        assert_eq!(ta, tb);
        assert_eq!(ta, "?a born in ?b ?c hypernym ?a => ?c nationality ?b");
    }

    #[test]
    fn tsv_round_trip() {
        let v = vocab();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rules.tsv");
        let rule = parse_rule("?a hypernym ?b => ?a nationality ?b", &v).unwrap();
        let m = RuleMetrics {
            support: 3,
            body_size: 4,
            pca_body_size: 3,
            head_size: 9,
        };
        let rows = vec![RuleRow::from_metrics(rule, &m)];
        write_rules(&path, &v, &rows, Some("config_hash=ab")).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# config_hash=ab\n"));
        assert!(text.contains("\t3\t0.3333333333333333\t0.75\t1\n"));
        assert_eq!(read_rules(&path, &v).unwrap(), rows);
    }
}
