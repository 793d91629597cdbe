//! Backtracking evaluation of conjunctive queries over the graph indices.
//!
//! At every step the unresolved atom with the fewest candidate facts under the
//! current partial binding is expanded next.

use std::collections::HashSet;
use std::ops::ControlFlow;

use super::{Atom, Term, Var};
use crate::kg::{EntityId, KnowledgeGraph};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatchOptions {
    /// Different variables must bind different entities.
    pub distinct_bindings: bool,
}

/// Partial assignment of variables to entities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    values: Vec<Option<EntityId>>,
}

impl Binding {
    pub fn new(var_count: usize) -> Self {
        Binding {
            values: vec![None; var_count],
        }
    }

    pub fn get(&self, v: Var) -> Option<EntityId> {
        self.values.get(v as usize).copied().flatten()
    }

    pub fn set(&mut self, v: Var, e: EntityId) {
        let i = v as usize;
        if i >= self.values.len() {
            self.values.resize(i + 1, None);
        }
        self.values[i] = Some(e);
    }

    pub fn clear(&mut self, v: Var) {
        if let Some(slot) = self.values.get_mut(v as usize) {
            *slot = None;
        }
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    pub fn values(&self) -> &[Option<EntityId>] {
        &self.values
    }

    fn resolve(&self, t: Term) -> Option<EntityId> {
        match t {
            Term::Const(e) => Some(e),
            Term::Var(v) => self.get(v),
        }
    }

    pub(crate) fn clashes(&self, v: Var, e: EntityId) -> bool {
        self.values
            .iter()
            .enumerate()
            .any(|(u, val)| u != v as usize && *val == Some(e))
    }
}

fn var_count(atoms: &[Atom]) -> usize {
    atoms
        .iter()
        .flat_map(|a| a.terms())
        .filter_map(Term::var)
        .map(|v| v as usize + 1)
        .max()
        .unwrap_or(0)
}

struct Search<'a> {
    kg: &'a KnowledgeGraph,
    atoms: &'a [Atom],
    opts: MatchOptions,
}

impl<'a> Search<'a> {
    fn candidate_count(&self, atom: &Atom, b: &Binding) -> usize {
        match (b.resolve(atom.arg1), b.resolve(atom.arg2)) {
            (Some(_), Some(_)) => 0,
            (Some(s), None) => self.kg.tails_of(s, atom.relation).len(),
            (None, Some(o)) => self.kg.heads_of(atom.relation, o).len(),
            (None, None) => self.kg.pairs(atom.relation).len(),
        }
    }

    fn pick(&self, remaining: u64, b: &Binding) -> usize {
        let mut best = usize::MAX;
        let mut best_cost = usize::MAX;
        for i in 0..self.atoms.len() {
            if remaining & (1 << i) == 0 {
                continue;
            }
            let cost = self.candidate_count(&self.atoms[i], b);
            if cost < best_cost {
                best = i;
                best_cost = cost;
                if cost == 0 {
                    break;
                }
            }
        }
        best
    }

    /// Try to bind `t` to `e`. Returns `Some(newly_bound_var)` on success,
    /// `Some(None)` when nothing needed binding, `None` on conflict.
    fn bind(&self, t: Term, e: EntityId, b: &mut Binding) -> Option<Option<Var>> {
        match t {
            Term::Const(c) => (c == e).then_some(None),
            Term::Var(v) => match b.get(v) {
                Some(cur) => (cur == e).then_some(None),
                None => {
                    if self.opts.distinct_bindings && b.clashes(v, e) {
                        return None;
                    }
                    b.set(v, e);
                    Some(Some(v))
                }
            },
        }
    }

    /// Bind both arguments of `atom` to `(s, o)` and recurse.
    fn step(
        &self,
        atom: &Atom,
        s: EntityId,
        o: EntityId,
        remaining: u64,
        b: &mut Binding,
        visit: &mut dyn FnMut(&Binding) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let Some(first) = self.bind(atom.arg1, s, b) else {
            return ControlFlow::Continue(());
        };
        let flow = match self.bind(atom.arg2, o, b) {
            Some(second) => {
                let flow = self.run(remaining, b, visit);
                if let Some(v) = second {
                    b.clear(v);
                }
                flow
            }
            None => ControlFlow::Continue(()),
        };
        if let Some(v) = first {
            b.clear(v);
        }
        flow
    }

    fn run(
        &self,
        remaining: u64,
        b: &mut Binding,
        visit: &mut dyn FnMut(&Binding) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if remaining == 0 {
            return visit(b);
        }
        let i = self.pick(remaining, b);
        let atom = self.atoms[i];
        let rest = remaining & !(1 << i);
        let r = atom.relation;
        match (b.resolve(atom.arg1), b.resolve(atom.arg2)) {
            (Some(s), Some(o)) => {
                if self.kg.contains_parts(s, r, o) {
                    self.run(rest, b, visit)?;
                }
            }
            (Some(s), None) => {
                for &o in self.kg.tails_of(s, r) {
                    self.step(&atom, s, o, rest, b, visit)?;
                }
            }
            (None, Some(o)) => {
                for &s in self.kg.heads_of(r, o) {
                    self.step(&atom, s, o, rest, b, visit)?;
                }
            }
            (None, None) => {
                for &(s, o) in self.kg.pairs(r) {
                    self.step(&atom, s, o, rest, b, visit)?;
                }
            }
        }
        ControlFlow::Continue(())
    }
}

fn all_mask(atoms: &[Atom]) -> u64 {
    assert!(atoms.len() <= 64, "queries are limited to 64 atoms");
    if atoms.len() == 64 {
        u64::MAX
    } else {
        (1u64 << atoms.len()) - 1
    }
}

/// Visit every complete extension of `binding` that satisfies all atoms.
/// The binding is restored before returning.
pub fn for_each_binding(
    kg: &KnowledgeGraph,
    atoms: &[Atom],
    binding: &mut Binding,
    opts: MatchOptions,
    mut visit: impl FnMut(&Binding) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let n = var_count(atoms);
    if binding.values.len() < n {
        binding.values.resize(n, None);
    }
    let search = Search { kg, atoms, opts };
    search.run(all_mask(atoms), binding, &mut visit)
}

/// Whether `binding` extends to a full match.
pub fn exists(kg: &KnowledgeGraph, atoms: &[Atom], binding: &mut Binding, opts: MatchOptions) -> bool {
    for_each_binding(kg, atoms, binding, opts, |_| ControlFlow::Break(())).is_break()
}

/// Emit bindings in which every projection variable is bound, stopping the
/// descent as soon as that happens and only an existence check remains.
/// The same projection may be emitted more than once.
pub(crate) fn project(
    kg: &KnowledgeGraph,
    atoms: &[Atom],
    binding: &mut Binding,
    projection: &[Var],
    opts: MatchOptions,
    emit: &mut dyn FnMut(&Binding),
) {
    let n = var_count(atoms);
    if binding.values.len() < n {
        binding.values.resize(n, None);
    }
    let search = Search { kg, atoms, opts };
    project_rec(&search, all_mask(atoms), binding, projection, emit);
}

fn project_rec(
    search: &Search<'_>,
    remaining: u64,
    b: &mut Binding,
    projection: &[Var],
    emit: &mut dyn FnMut(&Binding),
) {
    if projection.iter().all(|&v| b.get(v).is_some()) {
        if search.run(remaining, b, &mut |_| ControlFlow::Break(())).is_break() {
            emit(b);
        }
        return;
    }
    assert!(remaining != 0, "projection variable does not occur in the query");
    let i = search.pick(remaining, b);
    let atom = search.atoms[i];
    let rest = remaining & !(1 << i);
    let r = atom.relation;
    let mut go = |s: EntityId, o: EntityId, b: &mut Binding| {
        let Some(first) = search.bind(atom.arg1, s, b) else {
            return;
        };
        if let Some(second) = search.bind(atom.arg2, o, b) {
            project_rec(search, rest, b, projection, emit);
            if let Some(v) = second {
                b.clear(v);
            }
        }
        if let Some(v) = first {
            b.clear(v);
        }
    };
    match (b.resolve(atom.arg1), b.resolve(atom.arg2)) {
        (Some(s), Some(o)) => {
            if search.kg.contains_parts(s, r, o) {
                go(s, o, b);
            }
        }
        (Some(s), None) => {
            for &o in search.kg.tails_of(s, r) {
                go(s, o, b);
            }
        }
        (None, Some(o)) => {
            for &s in search.kg.heads_of(r, o) {
                go(s, o, b);
            }
        }
        (None, None) => {
            for &(s, o) in search.kg.pairs(r) {
                go(s, o, b);
            }
        }
    }
}

/// Distinct projections onto `projection` of all satisfying assignments.
///
/// Panics if a projection variable does not occur in `query`.
pub fn match_query(
    kg: &KnowledgeGraph,
    query: &[Atom],
    projection: &[Var],
    opts: MatchOptions,
) -> HashSet<Vec<EntityId>> {
    let mut out = HashSet::new();
    if query.is_empty() {
        return out;
    }
    let mut b = Binding::new(var_count(query));
    project(kg, query, &mut b, projection, opts, &mut |b| {
        out.insert(projection.iter().map(|&v| b.get(v).unwrap()).collect());
    });
    out
}
