//! Deductive equivalence and apartness for name terms and index terms,
//! relational contexts, extraction from typing contexts, and a
//! brute-force semantic oracle.
//!
//! The rules form a proof system, not an algorithm, so search runs
//! under a depth budget and verdicts are three-valued.  `Refuted` is
//! only ever issued on a concrete oracle witness; everything else that
//! fails to prove is `Unknown`.

use std::collections::BTreeSet;
use std::fmt;
use std::rc::Rc;

use crate::index::{
    self, normalize_index, set_leaves, subst_index, Index, IndexArg, IndexSort, Side,
};
use crate::name::{
    self, alpha_eq, beta_normalize, eval_name_term, subst, Ident, Name, NameSort, NameTerm,
};
use crate::types::Prop;

/// Search and enumeration budgets shared by the decision procedures.
#[derive(Clone, Debug)]
pub struct Budget {
    /// Maximum number of deductive rule applications per obligation.
    pub search_depth: u32,
    /// Maximum Kleene unfoldings taken by membership and the oracle.
    pub star_depth: u32,
    /// Maximum name tree depth enumerated by the oracle.
    pub oracle_depth: u32,
    /// Cap on oracle substitution pairs per depth level.
    pub oracle_cap: usize,
}

impl Default for Budget {
    fn default() -> Budget {
        Budget {
            search_depth: 64,
            star_depth: 3,
            oracle_depth: 3,
            oracle_cap: 60_000,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RelKind {
    Equiv,
    Apart,
}

impl fmt::Display for RelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelKind::Equiv => write!(f, "=="),
            RelKind::Apart => write!(f, "##"),
        }
    }
}

/// One hypothetical variable relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RelEntry {
    EquivVars(Ident, Ident, IndexSort),
    ApartVars(Ident, Ident, IndexSort),
}

/// A relational context: an ordered list of hypothetical variable
/// equivalences and apartnesses.  `proj1`/`proj2` give the ordinary
/// sorting contexts of the two sides; `flip` exchanges sides.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RelCtx {
    pub entries: Vec<RelEntry>,
}

impl RelCtx {
    pub fn push_refl(&mut self, a: Ident, sort: IndexSort) {
        self.entries.push(RelEntry::EquivVars(a.clone(), a, sort));
    }

    pub fn push_equiv(&mut self, a: Ident, b: Ident, sort: IndexSort) {
        self.entries.push(RelEntry::EquivVars(a, b, sort));
    }

    pub fn push_apart(&mut self, a: Ident, b: Ident, sort: IndexSort) {
        self.entries.push(RelEntry::ApartVars(a, b, sort));
    }

    pub fn proj1(&self) -> Vec<(Ident, IndexSort)> {
        self.entries
            .iter()
            .map(|e| match e {
                RelEntry::EquivVars(a, _, s) | RelEntry::ApartVars(a, _, s) => (a.clone(), s.clone()),
            })
            .collect()
    }

    pub fn proj2(&self) -> Vec<(Ident, IndexSort)> {
        self.entries
            .iter()
            .map(|e| match e {
                RelEntry::EquivVars(_, b, s) | RelEntry::ApartVars(_, b, s) => (b.clone(), s.clone()),
            })
            .collect()
    }

    pub fn flip(&self) -> RelCtx {
        RelCtx {
            entries: self
                .entries
                .iter()
                .map(|e| match e {
                    RelEntry::EquivVars(a, b, s) => {
                        RelEntry::EquivVars(b.clone(), a.clone(), s.clone())
                    }
                    RelEntry::ApartVars(a, b, s) => {
                        RelEntry::ApartVars(b.clone(), a.clone(), s.clone())
                    }
                })
                .collect(),
        }
    }

    /// Eq-Var / symmetric lookup.
    fn equiv_vars(&self, a: &str, b: &str) -> bool {
        self.entries.iter().any(|e| match e {
            RelEntry::EquivVars(x, y, _) => {
                (&**x == a && &**y == b) || (&**x == b && &**y == a)
            }
            _ => false,
        })
    }

    fn apart_vars(&self, a: &str, b: &str) -> bool {
        self.entries.iter().any(|e| match e {
            RelEntry::ApartVars(x, y, _) => {
                (&**x == a && &**y == b) || (&**x == b && &**y == a)
            }
            _ => false,
        })
    }
}

/// A proposition atom over indices, used as a hypothesis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropAtom {
    pub kind: RelKind,
    pub lhs: Index,
    pub rhs: Index,
    pub sort: IndexSort,
}

impl fmt::Display for PropAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} : {}", self.lhs, self.kind, self.rhs, self.sort)
    }
}

/// Extraction output: the propositions in scope plus a relational
/// context of (mostly reflexive) variable entries.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assumptions {
    pub props: Vec<PropAtom>,
    pub rel: RelCtx,
}

impl Assumptions {
    pub fn with_index_var(mut self, a: Ident, sort: IndexSort) -> Assumptions {
        self.rel.push_refl(a, sort);
        self
    }

    pub fn with_prop(mut self, p: &Prop) -> Assumptions {
        push_prop_atoms(p, &mut self.props);
        self
    }
}

fn push_prop_atoms(p: &Prop, out: &mut Vec<PropAtom>) {
    match p {
        Prop::Tt => {}
        Prop::Conj(a, b) => {
            push_prop_atoms(a, out);
            push_prop_atoms(b, out);
        }
        Prop::Apart(i, j, s) => out.push(PropAtom {
            kind: RelKind::Apart,
            lhs: i.clone(),
            rhs: j.clone(),
            sort: s.clone(),
        }),
        Prop::Equiv(i, j, s) => out.push(PropAtom {
            kind: RelKind::Equiv,
            lhs: i.clone(),
            rhs: j.clone(),
            sort: s.clone(),
        }),
    }
}

/// A context entry as seen by extraction; typing contexts translate
/// their entries into this shape.
pub enum ExtractEntry<'a> {
    IndexVar(&'a Ident, &'a IndexSort),
    Prop(&'a Prop),
    Other,
}

/// Extraction: index-variable bindings become reflexive equivalence
/// entries, propositions are split at conjunctions, and all other
/// bindings are dropped.
pub fn extract<'a>(entries: impl Iterator<Item = ExtractEntry<'a>>) -> Assumptions {
    let mut out = Assumptions::default();
    for e in entries {
        match e {
            ExtractEntry::IndexVar(a, s) => out.rel.push_refl(a.clone(), s.clone()),
            ExtractEntry::Prop(p) => push_prop_atoms(p, &mut out.props),
            ExtractEntry::Other => {}
        }
    }
    out
}

/// One side of an obligation: a name term or an index term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RelTerm {
    Nm(NameTerm),
    Ix(Index),
}

impl fmt::Display for RelTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelTerm::Nm(m) => write!(f, "{}", m),
            RelTerm::Ix(i) => write!(f, "{}", i),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Obligation {
    pub assumptions: Assumptions,
    pub kind: RelKind,
    pub lhs: RelTerm,
    pub rhs: RelTerm,
    pub sort: IndexSort,
}

/// A counterexample: closing substitutions for the two sides, plus a
/// human-readable account of the failure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub subst1: Vec<(String, String)>,
    pub subst2: Vec<(String, String)>,
    pub detail: String,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fmt_side = |side: &[(String, String)]| -> String {
            side.iter()
                .map(|(a, v)| format!("{} := {}", a, v))
                .collect::<Vec<_>>()
                .join(", ")
        };
        if self.subst1.is_empty() && self.subst2.is_empty() {
            write!(f, "{}", self.detail)
        } else {
            write!(
                f,
                "[{} | {}] {}",
                fmt_side(&self.subst1),
                fmt_side(&self.subst2),
                self.detail
            )
        }
    }
}

#[derive(Clone, Debug)]
pub enum Verdict {
    Proven(Vec<String>),
    Refuted(Witness),
    Unknown,
}

impl Verdict {
    pub fn is_proven(&self) -> bool {
        matches!(self, Verdict::Proven(_))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Proven(trace) => write!(f, "proven {}", trace.join(",")),
            Verdict::Refuted(w) => write!(f, "refuted {}", w),
            Verdict::Unknown => write!(f, "unknown"),
        }
    }
}

struct Search<'a> {
    asm: Assumptions,
    budget: &'a Budget,
    steps: u32,
    trace: Vec<String>,
}

impl<'a> Search<'a> {
    fn new(asm: &Assumptions, budget: &'a Budget) -> Search<'a> {
        Search {
            asm: asm.clone(),
            budget,
            steps: 0,
            trace: Vec::new(),
        }
    }

    fn spend(&mut self) -> bool {
        if self.steps >= self.budget.search_depth * 16 {
            return false;
        }
        self.steps += 1;
        true
    }

    fn rule(&mut self, name: &str) {
        if self.trace.last().map(|s| s.as_str()) != Some(name) {
            self.trace.push(name.to_string());
        }
    }
}

// ---------------------------------------------------------------------------
// Name-term equivalence and apartness
// ---------------------------------------------------------------------------

fn prove_name_equiv(s: &mut Search, rel: &RelCtx, m: &NameTerm, n: &NameTerm) -> bool {
    if !s.spend() {
        return false;
    }
    // Normalize-then-compare is the primary tactic (directed Eq-beta).
    let (mn, nn) = match (beta_normalize(m), beta_normalize(n)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return false,
    };
    eq_normal(s, rel, &mn, &nn)
}

fn eq_normal(s: &mut Search, rel: &RelCtx, m: &NameTerm, n: &NameTerm) -> bool {
    if !s.spend() {
        return false;
    }
    match (m, n) {
        (NameTerm::Lit(a), NameTerm::Lit(b)) => {
            if a == b {
                s.rule("E-Refl");
                true
            } else {
                false
            }
        }
        (NameTerm::Var(a), NameTerm::Var(b)) => {
            if rel.equiv_vars(a, b) {
                s.rule("Eq-Var");
                true
            } else {
                false
            }
        }
        (NameTerm::Bin(m1, m2), NameTerm::Bin(n1, n2)) => {
            let ok = eq_normal(s, rel, m1, n1) && eq_normal(s, rel, m2, n2);
            if ok {
                s.rule("Eq-Bin");
            }
            ok
        }
        (NameTerm::Lam(a, mb), NameTerm::Lam(b, nb)) => {
            let fa = name::fresh_ident("q");
            let fb = name::fresh_ident("q");
            let mut inner = rel.clone();
            inner.push_equiv(fa.clone(), fb.clone(), IndexSort::nm());
            let mb = subst(mb, a, &NameTerm::Var(fa));
            let nb = subst(nb, b, &NameTerm::Var(fb));
            let ok = eq_normal(s, &inner, &mb, &nb);
            if ok {
                s.rule("Eq-Lam");
            }
            ok
        }
        (NameTerm::App(g1, x1), NameTerm::App(g2, x2)) => {
            let ok = eq_normal(s, rel, g1, g2) && eq_normal(s, rel, x1, x2);
            if ok {
                s.rule("Eq-App");
            }
            ok
        }
        _ => false,
    }
}

fn prove_name_apart(s: &mut Search, rel: &RelCtx, m: &NameTerm, n: &NameTerm) -> bool {
    if !s.spend() {
        return false;
    }
    // Directed D-beta / D-trans: work on beta-normal forms.
    let (mn, nn) = match (beta_normalize(m), beta_normalize(n)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return false,
    };
    apart_normal(s, rel, &mn, &nn)
}

fn apart_normal(s: &mut Search, rel: &RelCtx, m: &NameTerm, n: &NameTerm) -> bool {
    if !s.spend() {
        return false;
    }
    match (m, n) {
        // Distinct ground names are apart (the semantic base case).
        (NameTerm::Lit(a), NameTerm::Lit(b)) => {
            if a != b {
                s.rule("D-Lit");
                true
            } else {
                false
            }
        }
        (NameTerm::Var(a), NameTerm::Var(b)) => {
            if rel.apart_vars(a, b) {
                s.rule("Var");
                true
            } else {
                false
            }
        }
        (NameTerm::Lam(a, mb), NameTerm::Lam(b, nb)) => {
            // D-Lam: the bodies must be apart with the binders treated
            // as unrelated, fresh and distinct.
            let fa = name::fresh_ident("q");
            let fb = name::fresh_ident("q");
            let mb = subst(mb, a, &NameTerm::Var(fa));
            let nb = subst(nb, b, &NameTerm::Var(fb));
            let ok = apart_normal(s, rel, &mb, &nb);
            if ok {
                s.rule("D-Lam");
            }
            ok
        }
        (NameTerm::App(g1, _), NameTerm::App(g2, _)) => {
            let ok = apart_normal(s, rel, g1, g2);
            if ok {
                s.rule("D-App");
            }
            ok
        }
        _ => {
            // Bin-headed cases, including Lit-embedded bins.
            let mb = as_bin(m);
            let nb = as_bin(n);
            if let (Some((m1, m2)), Some((n1, n2))) = (&mb, &nb) {
                let save = s.trace.len();
                if apart_normal(s, rel, m1, n1) {
                    s.rule("D-Bin1");
                    return true;
                }
                s.trace.truncate(save);
                if apart_normal(s, rel, m2, n2) {
                    s.rule("D-Bin2");
                    return true;
                }
                s.trace.truncate(save);
            }
            // D-EqTag: a bin is apart from anything equivalent to one
            // of its own children.
            if let Some((m1, m2)) = &mb {
                let save = s.trace.len();
                if eq_normal(s, rel, m1, n) {
                    s.rule("D-EqTag1");
                    return true;
                }
                s.trace.truncate(save);
                if eq_normal(s, rel, m2, n) {
                    s.rule("D-EqTag2");
                    return true;
                }
                s.trace.truncate(save);
            }
            if let Some((n1, n2)) = &nb {
                let save = s.trace.len();
                if eq_normal(s, rel, m, n1) {
                    s.rule("D-EqTag1");
                    return true;
                }
                s.trace.truncate(save);
                if eq_normal(s, rel, m, n2) {
                    s.rule("D-EqTag2");
                    return true;
                }
                s.trace.truncate(save);
            }
            false
        }
    }
}

/// View a normal name term as a binary composition, looking through
/// literal bins.
fn as_bin(m: &NameTerm) -> Option<(NameTerm, NameTerm)> {
    match m {
        NameTerm::Bin(l, r) => Some(((**l).clone(), (**r).clone())),
        NameTerm::Lit(Name::Bin(l, r)) => Some((
            NameTerm::Lit((**l).clone()),
            NameTerm::Lit((**r).clone()),
        )),
        _ => None,
    }
}

/// Proof-only entry point used by membership.
pub fn name_equiv_holds(asm: &Assumptions, m: &NameTerm, n: &NameTerm, budget: &Budget) -> bool {
    let mut s = Search::new(asm, budget);
    prove_name_equiv(&mut s, &asm.rel, m, n)
}

pub fn name_apart_holds(asm: &Assumptions, m: &NameTerm, n: &NameTerm, budget: &Budget) -> bool {
    let mut s = Search::new(asm, budget);
    prove_name_apart(&mut s, &asm.rel, m, n)
}

pub fn decide_name_equiv(
    asm: &Assumptions,
    m: &NameTerm,
    n: &NameTerm,
    sort: &NameSort,
    budget: &Budget,
) -> Verdict {
    let mut s = Search::new(asm, budget);
    if prove_name_equiv(&mut s, &asm.rel, m, n) {
        return Verdict::Proven(s.trace);
    }
    let ob = Obligation {
        assumptions: asm.clone(),
        kind: RelKind::Equiv,
        lhs: RelTerm::Nm(m.clone()),
        rhs: RelTerm::Nm(n.clone()),
        sort: IndexSort::Nm(sort.clone()),
    };
    match oracle_check(&ob, budget.oracle_depth, budget.star_depth, budget) {
        OracleOutcome::Fails(w) => Verdict::Refuted(w),
        _ => Verdict::Unknown,
    }
}

pub fn decide_name_apart(
    asm: &Assumptions,
    m: &NameTerm,
    n: &NameTerm,
    sort: &NameSort,
    budget: &Budget,
) -> Verdict {
    let mut s = Search::new(asm, budget);
    if prove_name_apart(&mut s, &asm.rel, m, n) {
        return Verdict::Proven(s.trace);
    }
    let ob = Obligation {
        assumptions: asm.clone(),
        kind: RelKind::Apart,
        lhs: RelTerm::Nm(m.clone()),
        rhs: RelTerm::Nm(n.clone()),
        sort: IndexSort::Nm(sort.clone()),
    };
    match oracle_check(&ob, budget.oracle_depth, budget.star_depth, budget) {
        OracleOutcome::Fails(w) => Verdict::Refuted(w),
        _ => Verdict::Unknown,
    }
}

// ---------------------------------------------------------------------------
// Index-term equivalence
// ---------------------------------------------------------------------------

fn alpha_eq_index(i: &Index, j: &Index) -> bool {
    fn go(i: &Index, j: &Index, pairs: &mut Vec<(Ident, Ident)>) -> bool {
        let var_eq = |a: &Ident, b: &Ident, pairs: &mut Vec<(Ident, Ident)>| {
            for (x, y) in pairs.iter().rev() {
                let hl = x == a;
                let hr = y == b;
                if hl || hr {
                    return hl && hr;
                }
            }
            a == b
        };
        match (i, j) {
            (Index::Var(a), Index::Var(b)) => var_eq(a, b, pairs),
            (Index::NmTm(a), Index::NmTm(b)) | (Index::Sing(a), Index::Sing(b)) => {
                // Embedded name terms share the binder environment.
                nt_go(a, b, pairs)
            }
            (Index::Empty, Index::Empty) | (Index::Unit, Index::Unit) => true,
            (Index::Apart(a1, a2), Index::Apart(b1, b2))
            | (Index::Union(a1, a2), Index::Union(b1, b2))
            | (Index::Pair(a1, a2), Index::Pair(b1, b2))
            | (Index::App(a1, a2), Index::App(b1, b2))
            | (Index::FlatMap(a1, a2), Index::FlatMap(b1, b2))
            | (Index::Star(a1, a2), Index::Star(b1, b2)) => {
                go(a1, b1, pairs) && go(a2, b2, pairs)
            }
            (Index::Proj(sa, a), Index::Proj(sb, b)) => sa == sb && go(a, b, pairs),
            (Index::Lam(a, ba), Index::Lam(b, bb)) => {
                pairs.push((a.clone(), b.clone()));
                let r = go(ba, bb, pairs);
                pairs.pop();
                r
            }
            (Index::Map(ma, xa), Index::Map(mb, xb)) => {
                nt_go(ma, mb, pairs) && go(xa, xb, pairs)
            }
            _ => false,
        }
    }
    fn nt_go(m: &NameTerm, n: &NameTerm, pairs: &mut Vec<(Ident, Ident)>) -> bool {
        match (m, n) {
            (NameTerm::Lit(a), NameTerm::Lit(b)) => a == b,
            (NameTerm::Var(a), NameTerm::Var(b)) => {
                for (x, y) in pairs.iter().rev() {
                    let hl = x == a;
                    let hr = y == b;
                    if hl || hr {
                        return hl && hr;
                    }
                }
                a == b
            }
            (NameTerm::Bin(a1, a2), NameTerm::Bin(b1, b2))
            | (NameTerm::App(a1, a2), NameTerm::App(b1, b2)) => {
                nt_go(a1, b1, pairs) && nt_go(a2, b2, pairs)
            }
            (NameTerm::Lam(a, ba), NameTerm::Lam(b, bb)) => {
                pairs.push((a.clone(), b.clone()));
                let r = nt_go(ba, bb, pairs);
                pairs.pop();
                r
            }
            _ => false,
        }
    }
    go(i, j, &mut Vec::new())
}

/// Canonical forms of `i` reachable with at most `k` rounds of Kleene
/// unfolding applied to every `Star` leaf (`Star(f, X)` rewrites to
/// `X + Star(f, f[[X]])`, which preserves the extension).
fn star_expansions(i: &Index, k: u32) -> Vec<Index> {
    let mut out = vec![i.clone()];
    let mut cur = i.clone();
    for _ in 0..k {
        let (_, leaves) = set_leaves(&cur);
        if !leaves.iter().any(|l| matches!(l, Index::Star(_, _))) {
            break;
        }
        let mut next_leaves = Vec::new();
        for leaf in leaves {
            match leaf {
                Index::Star(f, x) => {
                    let (_, seed_leaves) = set_leaves(&x);
                    next_leaves.extend(seed_leaves);
                    let deeper = Index::flat_map((*f).clone(), (*x).clone());
                    if let Ok(d) = normalize_index(&deeper) {
                        next_leaves.push(Index::star((*f).clone(), d));
                    } else {
                        next_leaves.push(Index::Star(f, x));
                    }
                }
                other => next_leaves.push(other),
            }
        }
        next_leaves.sort();
        next_leaves.dedup();
        cur = index::build_set(index::SetCons::Union, next_leaves);
        if let Ok(n) = normalize_index(&cur) {
            cur = n;
        }
        out.push(cur.clone());
    }
    out
}

fn prove_index_equiv(s: &mut Search, i: &Index, j: &Index) -> bool {
    if !s.spend() {
        return false;
    }
    let (ni, nj) = match (normalize_index(i), normalize_index(j)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return false,
    };
    equiv_normal(s, &ni, &nj)
}

fn equiv_normal(s: &mut Search, i: &Index, j: &Index) -> bool {
    if !s.spend() {
        return false;
    }
    if alpha_eq_index(i, j) {
        s.rule("E-Refl");
        return true;
    }
    // Hypothesis propositions, in both orientations.
    let props = s.asm.props.clone();
    for p in &props {
        if p.kind == RelKind::Equiv {
            let (pl, pr) = match (normalize_index(&p.lhs), normalize_index(&p.rhs)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => continue,
            };
            if (alpha_eq_index(i, &pl) && alpha_eq_index(j, &pr))
                || (alpha_eq_index(i, &pr) && alpha_eq_index(j, &pl))
            {
                s.rule("Eq-Hyp");
                return true;
            }
        }
    }
    match (i, j) {
        (Index::Var(a), Index::Var(b)) => {
            if s.asm.rel.equiv_vars(a, b) {
                s.rule("Eq-Var");
                return true;
            }
            false
        }
        (Index::NmTm(m), Index::NmTm(n)) => {
            let rel = s.asm.rel.clone();
            eq_normal(s, &rel, m, n)
        }
        (Index::Pair(a1, a2), Index::Pair(b1, b2)) => {
            let ok = equiv_normal(s, a1, b1) && equiv_normal(s, a2, b2);
            if ok {
                s.rule("Eq-Pair");
            }
            ok
        }
        (Index::Lam(a, ba), Index::Lam(b, bb)) => {
            let fa = name::fresh_ident("q");
            let fb = name::fresh_ident("q");
            let ba = subst_index(ba, a, &IndexArg::Idx(Index::Var(fa.clone())));
            let bb = subst_index(bb, b, &IndexArg::Idx(Index::Var(fb.clone())));
            s.asm.rel.push_equiv(fa, fb, IndexSort::nm());
            let ok = prove_index_equiv(s, &ba, &bb);
            s.asm.rel.entries.pop();
            if ok {
                s.rule("Eq-Lam");
            }
            ok
        }
        (Index::App(g1, x1), Index::App(g2, x2)) => {
            let ok = equiv_normal(s, g1, g2) && equiv_normal(s, x1, x2);
            if ok {
                s.rule("Eq-App");
            }
            ok
        }
        _ => {
            if is_set_shaped(i) && is_set_shaped(j) {
                return set_equiv(s, i, j);
            }
            false
        }
    }
}

fn is_set_shaped(i: &Index) -> bool {
    matches!(
        i,
        Index::Sing(_)
            | Index::Empty
            | Index::Apart(_, _)
            | Index::Union(_, _)
            | Index::Map(_, _)
            | Index::FlatMap(_, _)
            | Index::Star(_, _)
            | Index::Var(_)
    )
}

/// Leafwise matching on canonical set forms; permutation is handled by
/// the canonical ordering plus backtracking-free multiset matching.
fn set_equiv(s: &mut Search, i: &Index, j: &Index) -> bool {
    let stars = s.budget.star_depth;
    for ei in star_expansions(i, stars) {
        for ej in star_expansions(j, stars) {
            if set_equiv_once(s, &ei, &ej) {
                return true;
            }
        }
    }
    false
}

fn set_equiv_once(s: &mut Search, i: &Index, j: &Index) -> bool {
    let (_, li) = set_leaves(i);
    let (_, lj) = set_leaves(j);
    if li.len() != lj.len() {
        return false;
    }
    let mut used = vec![false; lj.len()];
    'outer: for a in &li {
        for (k, b) in lj.iter().enumerate() {
            if used[k] {
                continue;
            }
            let save = s.trace.len();
            if leaf_equiv(s, a, b) {
                used[k] = true;
                continue 'outer;
            }
            s.trace.truncate(save);
        }
        return false;
    }
    s.rule("Eq-Perm");
    true
}

fn leaf_equiv(s: &mut Search, a: &Index, b: &Index) -> bool {
    if !s.spend() {
        return false;
    }
    if alpha_eq_index(a, b) {
        return true;
    }
    match (a, b) {
        (Index::Var(x), Index::Var(y)) => {
            if s.asm.rel.equiv_vars(x, y) {
                s.rule("Eq-Var");
                true
            } else {
                false
            }
        }
        (Index::Sing(m), Index::Sing(n)) => {
            let rel = s.asm.rel.clone();
            let ok = eq_normal(s, &rel, m, n);
            if ok {
                s.rule("Eq-Single");
            }
            ok
        }
        (Index::Map(m, x), Index::Map(n, y)) => {
            let rel = s.asm.rel.clone();
            let save = s.trace.len();
            let fns = eq_normal(s, &rel, m, n);
            if !fns {
                s.trace.truncate(save);
                return false;
            }
            let ok = prove_index_equiv(s, x, y);
            if ok {
                s.rule("Eq-Map");
            }
            ok
        }
        (Index::FlatMap(f, x), Index::FlatMap(g, y)) => {
            let ok = prove_index_equiv(s, f, g) && prove_index_equiv(s, x, y);
            if ok {
                s.rule("Eq-FlatMap");
            }
            ok
        }
        (Index::Star(f, x), Index::Star(g, y)) => {
            let ok = prove_index_equiv(s, f, g) && prove_index_equiv(s, x, y);
            if ok {
                s.rule("Eq-Star");
            }
            ok
        }
        _ => {
            // Hypothesis equations may identify dissimilar leaves.
            let props = s.asm.props.clone();
            for p in &props {
                if p.kind == RelKind::Equiv {
                    let (pl, pr) = match (normalize_index(&p.lhs), normalize_index(&p.rhs)) {
                        (Ok(l), Ok(r)) => (l, r),
                        _ => continue,
                    };
                    if (alpha_eq_index(a, &pl) && alpha_eq_index(b, &pr))
                        || (alpha_eq_index(a, &pr) && alpha_eq_index(b, &pl))
                    {
                        s.rule("Eq-Hyp");
                        return true;
                    }
                }
            }
            false
        }
    }
}

pub fn decide_index_equiv(
    asm: &Assumptions,
    i: &Index,
    j: &Index,
    sort: &IndexSort,
    budget: &Budget,
) -> Verdict {
    let mut s = Search::new(asm, budget);
    if prove_index_equiv(&mut s, i, j) {
        return Verdict::Proven(s.trace);
    }
    let ob = Obligation {
        assumptions: asm.clone(),
        kind: RelKind::Equiv,
        lhs: RelTerm::Ix(i.clone()),
        rhs: RelTerm::Ix(j.clone()),
        sort: sort.clone(),
    };
    match oracle_check(&ob, budget.oracle_depth, budget.star_depth, budget) {
        OracleOutcome::Fails(w) => Verdict::Refuted(w),
        _ => Verdict::Unknown,
    }
}

/// Proof-only index equivalence.
pub fn index_equiv_holds(asm: &Assumptions, i: &Index, j: &Index, budget: &Budget) -> bool {
    let mut s = Search::new(asm, budget);
    prove_index_equiv(&mut s, i, j)
}

// ---------------------------------------------------------------------------
// Index-term apartness
// ---------------------------------------------------------------------------

/// Derived subset judgment on canonical forms: every leaf of `x` must
/// match a distinct leaf of `y`, allowing bounded Kleene unfolding of
/// `y` and seed-monotonicity between `Star` leaves.
pub fn subset_of(asm: &Assumptions, x: &Index, y: &Index, budget: &Budget) -> bool {
    let (nx, ny) = match (normalize_index(x), normalize_index(y)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return false,
    };
    let mut s = Search::new(asm, budget);
    for ey in star_expansions(&ny, budget.star_depth) {
        if subset_once(&mut s, &nx, &ey) {
            return true;
        }
    }
    false
}

/// Match every leaf of `small` to a distinct leaf of `big` (allowing
/// bounded Kleene unfolding of `big`) and return the unmatched
/// remainder of `big`.  `None` when no decomposition exists.
pub fn decompose_superset(
    asm: &Assumptions,
    small: &Index,
    big: &Index,
    budget: &Budget,
) -> Option<Index> {
    let (ns, nb) = match (normalize_index(small), normalize_index(big)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return None,
    };
    let mut s = Search::new(asm, budget);
    for eb in star_expansions(&nb, budget.star_depth) {
        let (_, ls) = set_leaves(&ns);
        let (_, lb) = set_leaves(&eb);
        let mut used = vec![false; lb.len()];
        let mut ok = true;
        'outer: for a in &ls {
            for (k, b) in lb.iter().enumerate() {
                if used[k] {
                    continue;
                }
                let save = s.trace.len();
                if leaf_subset(&mut s, a, b) {
                    used[k] = true;
                    continue 'outer;
                }
                s.trace.truncate(save);
            }
            ok = false;
            break;
        }
        if ok {
            let rest: Vec<Index> = lb
                .into_iter()
                .zip(used)
                .filter(|(_, u)| !u)
                .map(|(l, _)| l)
                .collect();
            return Some(index::build_set(index::SetCons::Union, rest));
        }
    }
    None
}

fn subset_once(s: &mut Search, x: &Index, y: &Index) -> bool {
    let (_, lx) = set_leaves(x);
    let (_, ly) = set_leaves(y);
    let mut used = vec![false; ly.len()];
    'outer: for a in &lx {
        for (k, b) in ly.iter().enumerate() {
            if used[k] {
                continue;
            }
            let save = s.trace.len();
            if leaf_subset(s, a, b) {
                used[k] = true;
                continue 'outer;
            }
            s.trace.truncate(save);
        }
        return false;
    }
    true
}

fn leaf_subset(s: &mut Search, a: &Index, b: &Index) -> bool {
    if leaf_equiv(s, a, b) {
        return true;
    }
    match (a, b) {
        // Star is monotone in its seed.
        (Index::Star(f, x), Index::Star(g, y)) => {
            prove_index_equiv(s, f, g)
                && subset_of(&s.asm, x, y, &shallower(s.budget))
        }
        (Index::Map(m, x), Index::Map(n, y)) => {
            let rel = s.asm.rel.clone();
            eq_normal(s, &rel, m, n) && subset_of(&s.asm, x, y, &shallower(s.budget))
        }
        (Index::FlatMap(f, x), Index::FlatMap(g, y)) => {
            prove_index_equiv(s, f, g) && subset_of(&s.asm, x, y, &shallower(s.budget))
        }
        _ => false,
    }
}

fn shallower(b: &Budget) -> Budget {
    Budget {
        star_depth: b.star_depth.saturating_sub(1),
        ..b.clone()
    }
}

fn prove_index_apart(s: &mut Search, i: &Index, j: &Index) -> bool {
    if !s.spend() {
        return false;
    }
    let (ni, nj) = match (normalize_index(i), normalize_index(j)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return false,
    };
    apart_normal_idx(s, &ni, &nj)
}

fn apart_normal_idx(s: &mut Search, i: &Index, j: &Index) -> bool {
    if !s.spend() {
        return false;
    }
    // Hypotheses first: direct match or subset-antitonicity.
    if apart_by_hypothesis(s, i, j) {
        return true;
    }
    match (i, j) {
        (Index::Var(a), Index::Var(b)) => {
            if s.asm.rel.apart_vars(a, b) {
                s.rule("Var");
                return true;
            }
            false
        }
        (Index::NmTm(m), Index::NmTm(n)) => {
            let rel = s.asm.rel.clone();
            apart_normal(s, &rel, m, n)
        }
        (Index::Pair(a1, a2), Index::Pair(b1, b2)) => {
            let save = s.trace.len();
            if apart_normal_idx(s, a1, b1) {
                s.rule("D-Proj1");
                return true;
            }
            s.trace.truncate(save);
            if apart_normal_idx(s, a2, b2) {
                s.rule("D-Proj2");
                return true;
            }
            s.trace.truncate(save);
            false
        }
        (Index::Lam(a, ba), Index::Lam(b, bb)) => {
            // D-Lam: unrelated fresh binders.
            let fa = name::fresh_ident("q");
            let fb = name::fresh_ident("q");
            let ba = subst_index(ba, a, &IndexArg::Idx(Index::Var(fa)));
            let bb = subst_index(bb, b, &IndexArg::Idx(Index::Var(fb)));
            let ok = prove_index_apart(s, &ba, &bb);
            if ok {
                s.rule("D-Lam");
            }
            ok
        }
        (Index::App(g1, _), Index::App(g2, _)) => {
            let ok = prove_index_apart(s, g1, g2);
            if ok {
                s.rule("D-App");
            }
            ok
        }
        _ => {
            if is_set_shaped(i) && is_set_shaped(j) {
                return set_apart(s, i, j);
            }
            false
        }
    }
}

fn apart_by_hypothesis(s: &mut Search, i: &Index, j: &Index) -> bool {
    let props = s.asm.props.clone();
    for p in &props {
        if p.kind != RelKind::Apart {
            continue;
        }
        let (pl, pr) = match (normalize_index(&p.lhs), normalize_index(&p.rhs)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        if (alpha_eq_index(i, &pl) && alpha_eq_index(j, &pr))
            || (alpha_eq_index(i, &pr) && alpha_eq_index(j, &pl))
        {
            s.rule("D-Hyp");
            return true;
        }
        // Apartness is antitone in set inclusion.
        let sub = shallower(s.budget);
        if is_set_shaped(i) && is_set_shaped(j) {
            if (subset_of(&s.asm, i, &pl, &sub) && subset_of(&s.asm, j, &pr, &sub))
                || (subset_of(&s.asm, i, &pr, &sub) && subset_of(&s.asm, j, &pl, &sub))
            {
                s.rule("D-Sub-Hyp");
                return true;
            }
        }
    }
    false
}

/// Set-level apartness: every pair of canonical leaves is apart.
fn set_apart(s: &mut Search, i: &Index, j: &Index) -> bool {
    let (_, li) = set_leaves(i);
    let (_, lj) = set_leaves(j);
    if li.is_empty() || lj.is_empty() {
        s.rule("D-Empty");
        return true;
    }
    for a in &li {
        for b in &lj {
            if !leaf_apart(s, a, b) {
                return false;
            }
        }
    }
    s.rule("D-Apart");
    true
}

fn leaf_apart(s: &mut Search, a: &Index, b: &Index) -> bool {
    if !s.spend() {
        return false;
    }
    if apart_by_hypothesis(s, a, b) {
        return true;
    }
    match (a, b) {
        (Index::Var(x), Index::Var(y)) => {
            if s.asm.rel.apart_vars(x, y) {
                s.rule("Var");
                return true;
            }
            false
        }
        (Index::Sing(m), Index::Sing(n)) => {
            let rel = s.asm.rel.clone();
            let ok = apart_normal(s, &rel, m, n);
            if ok {
                s.rule("D-Single");
            }
            ok
        }
        (Index::Map(m, x), Index::Map(n, y)) => {
            let rel = s.asm.rel.clone();
            let save = s.trace.len();
            if apart_normal(s, &rel, m, n) {
                s.rule("D-Map");
                return true;
            }
            s.trace.truncate(save);
            // Equivalent injective functions map apart sets apart.
            if index::injective_name_fn(m)
                && eq_normal(s, &rel, m, n)
                && prove_index_apart(s, x, y)
            {
                s.rule("D-Map-Inj");
                return true;
            }
            s.trace.truncate(save);
            split_bin_apart(s, a, b)
        }
        (Index::FlatMap(f, x), Index::FlatMap(g, y)) => {
            let save = s.trace.len();
            if prove_index_apart(s, f, g) {
                s.rule("D-FlatMap1");
                return true;
            }
            s.trace.truncate(save);
            // Guarded form of D-FlatMap2: the shared function must put
            // its argument at a fixed position for apart arguments to
            // yield apart images.
            if let (Some(p1), Some(p2)) = (builder_arg_path(f), builder_arg_path(g)) {
                if p1 == p2
                    && prove_index_equiv(s, f, g)
                    && prove_index_apart(s, x, y)
                {
                    s.rule("D-FlatMap2");
                    return true;
                }
            }
            s.trace.truncate(save);
            split_bin_apart(s, a, b)
        }
        (Index::Star(f, x), Index::Star(g, y)) => {
            let save = s.trace.len();
            let fns = prove_index_apart(s, f, g);
            if fns && prove_index_apart(s, x, y) {
                s.rule("D-Star");
                return true;
            }
            s.trace.truncate(save);
            split_bin_apart(s, a, b)
        }
        _ => {
            // Kleene closures of growing functions stay apart from any
            // name their seed strictly contains.
            let save = s.trace.len();
            if star_grow_apart(s, a, b) || star_grow_apart(s, b, a) {
                s.rule("D-Grow");
                return true;
            }
            s.trace.truncate(save);
            split_bin_apart(s, a, b)
        }
    }
}

/// `Star(f, X) ## {N}` when every application of `f` strictly grows its
/// argument and every seed member already strictly contains `N`; every
/// layer then properly contains the value of `N`, hence differs from it.
fn star_grow_apart(_s: &mut Search, star: &Index, sing: &Index) -> bool {
    let (f, x) = match star {
        Index::Star(f, x) => (f, x),
        _ => return false,
    };
    let n = match sing {
        Index::Sing(n) => n,
        _ => return false,
    };
    if !builder_grows(f) {
        return false;
    }
    let (_, seeds) = set_leaves(x);
    if seeds.is_empty() {
        return false;
    }

    seeds.iter().all(|leaf| match leaf {
        Index::Sing(m) => strictly_contains(m, n),
        _ => false,
    })
}

/// The set builder `#a.{...}` wraps its argument under at least one
/// `*` node, so its output value properly contains its input value.
fn builder_grows(f: &Index) -> bool {
    match f {
        Index::Lam(a, body) => match &**body {
            Index::Sing(m) => strictly_contains(m, &NameTerm::Var(a.clone())),
            _ => false,
        },
        _ => false,
    }
}

/// `m` properly contains `n`: `n` occurs in `m` strictly below at least
/// one binary composition node (descending only through compositions).
fn strictly_contains(m: &NameTerm, n: &NameTerm) -> bool {
    fn occurs(m: &NameTerm, n: &NameTerm) -> bool {
        if alpha_eq(m, n) {
            return true;
        }
        match as_bin(m) {
            Some((l, r)) => occurs(&l, n) || occurs(&r, n),
            None => false,
        }
    }
    match as_bin(m) {
        Some((l, r)) => occurs(&l, n) || occurs(&r, n),
        None => false,
    }
}

/// The fixed position (if any) at which a set builder `#a. ...` places
/// its argument in every member it produces.
fn builder_arg_path(f: &Index) -> Option<Vec<Side>> {
    fn path_in_term(m: &NameTerm, a: &str) -> Option<Vec<Side>> {
        match m {
            NameTerm::Var(b) if &**b == a => Some(vec![]),
            NameTerm::Bin(l, r) => {
                let pl = path_in_term(l, a);
                let pr = path_in_term(r, a);
                match (pl, pr) {
                    (Some(mut p), None) => {
                        p.insert(0, Side::Fst);
                        Some(p)
                    }
                    (None, Some(mut p)) => {
                        p.insert(0, Side::Snd);
                        Some(p)
                    }
                    _ => None,
                }
            }
            _ => None,
        }
    }
    fn path_in_body(body: &Index, a: &str) -> Option<Vec<Side>> {
        match body {
            Index::Sing(m) => path_in_term(m, a),
            Index::Map(m, x) => {
                if x.free_vars().iter().any(|v| &**v == a) {
                    return None;
                }
                match m {
                    NameTerm::Lam(_, inner) => path_in_term(inner, a),
                    _ => None,
                }
            }
            Index::FlatMap(g, x) => {
                if x.free_vars().iter().any(|v| &**v == a) {
                    return None;
                }
                match &**g {
                    Index::Lam(_, inner) => path_in_body(inner, a),
                    _ => None,
                }
            }
            Index::Union(_, _) | Index::Apart(_, _) => {
                let (_, leaves) = set_leaves(body);
                let mut acc: Option<Vec<Side>> = None;
                for leaf in leaves {
                    let p = path_in_body(&leaf, a)?;
                    match &acc {
                        None => acc = Some(p),
                        Some(q) if *q == p => {}
                        _ => return None,
                    }
                }
                acc
            }
            _ => None,
        }
    }
    match f {
        Index::Lam(a, body) => path_in_body(body, a),
        _ => None,
    }
}

/// Overapproximate both leaves as sets of binary compositions and
/// compare componentwise: if the left projections (or the right
/// projections) are apart, every member pair differs there.
fn split_bin_apart(s: &mut Search, a: &Index, b: &Index) -> bool {
    let (la, ra) = match split_bin(a) {
        Some(p) => p,
        None => return false,
    };
    let (lb, rb) = match split_bin(b) {
        Some(p) => p,
        None => return false,
    };
    let save = s.trace.len();
    if prove_index_apart(s, &la, &lb) {
        s.rule("D-Bin1*");
        return true;
    }
    s.trace.truncate(save);
    if prove_index_apart(s, &ra, &rb) {
        s.rule("D-Bin2*");
        return true;
    }
    s.trace.truncate(save);
    false
}

/// Decompose a set leaf whose members are all binary compositions into
/// overapproximations of the left and right component sets.
fn split_bin(leaf: &Index) -> Option<(Index, Index)> {
    match leaf {
        Index::Sing(m) => {
            let (l, r) = as_bin(m)?;
            Some((Index::Sing(l), Index::Sing(r)))
        }
        Index::Map(f, x) => {
            if let NameTerm::Lam(a, body) = f {
                let (l, r) = as_bin(body)?;
                let mk = |part: NameTerm| -> Index {
                    if part.free_vars().iter().any(|v| v == a) {
                        let lifted = NameTerm::Lam(a.clone(), Rc::new(part));
                        normalize_index(&Index::Map(lifted, x.clone())).ok().unwrap_or(Index::Empty)
                    } else {
                        Index::Sing(part)
                    }
                };
                return Some((mk(l), mk(r)));
            }
            None
        }
        Index::FlatMap(g, x) => {
            if let Index::Lam(a, body) = &**g {
                let (bl, br) = split_bin_body(body)?;
                let mk = |part: Index| -> Index {
                    if part.free_vars().iter().any(|v| v == a) {
                        let lifted = Index::Lam(a.clone(), Rc::new(part));
                        normalize_index(&Index::flat_map(lifted, (**x).clone()))
                            .ok()
                            .unwrap_or(Index::Empty)
                    } else {
                        part
                    }
                };
                return Some((mk(bl), mk(br)));
            }
            None
        }
        Index::Star(f, x) => {
            // All members are bins when both the seed members and the
            // builder's outputs are; rights of deeper layers live in
            // the star itself.
            let (fl, _fr) = match &**f {
                Index::Lam(a, body) => match &**body {
                    Index::Sing(m) => {
                        let (l, r) = as_bin(m)?;
                        if alpha_eq(&r, &NameTerm::Var(a.clone())) && l.is_closed() {
                            (Index::Sing(l), ())
                        } else {
                            return None;
                        }
                    }
                    _ => return None,
                },
                _ => return None,
            };
            let (xl, xr) = split_bin(&match normalize_index(x) {
                Ok(v) => v,
                Err(_) => return None,
            })?;
            let left = Index::union(fl, xl);
            let right = Index::union(xr, Index::Star(f.clone(), x.clone()));
            Some((left, right))
        }
        _ => None,
    }
}

fn split_bin_body(body: &Index) -> Option<(Index, Index)> {
    let (_, leaves) = set_leaves(body);
    let mut ls = Vec::new();
    let mut rs = Vec::new();
    for leaf in leaves {
        let (l, r) = split_bin(&leaf)?;
        ls.push(l);
        rs.push(r);
    }
    ls.sort();
    ls.dedup();
    rs.sort();
    rs.dedup();
    Some((
        index::build_set(index::SetCons::Union, ls),
        index::build_set(index::SetCons::Union, rs),
    ))
}

pub fn decide_index_apart(
    asm: &Assumptions,
    i: &Index,
    j: &Index,
    sort: &IndexSort,
    budget: &Budget,
) -> Verdict {
    let mut s = Search::new(asm, budget);
    if prove_index_apart(&mut s, i, j) {
        return Verdict::Proven(s.trace);
    }
    let ob = Obligation {
        assumptions: asm.clone(),
        kind: RelKind::Apart,
        lhs: RelTerm::Ix(i.clone()),
        rhs: RelTerm::Ix(j.clone()),
        sort: sort.clone(),
    };
    match oracle_check(&ob, budget.oracle_depth, budget.star_depth, budget) {
        OracleOutcome::Fails(w) => Verdict::Refuted(w),
        _ => Verdict::Unknown,
    }
}

/// Proof-only index apartness.
pub fn index_apart_holds(asm: &Assumptions, i: &Index, j: &Index, budget: &Budget) -> bool {
    let mut s = Search::new(asm, budget);
    prove_index_apart(&mut s, i, j)
}

/// Decide an obligation, dispatching on term kind and relation.
pub fn decide(ob: &Obligation, budget: &Budget) -> Verdict {
    match (&ob.lhs, &ob.rhs, ob.kind) {
        (RelTerm::Nm(m), RelTerm::Nm(n), RelKind::Equiv) => {
            let ns = match &ob.sort {
                IndexSort::Nm(ns) => ns.clone(),
                _ => NameSort::Nm,
            };
            decide_name_equiv(&ob.assumptions, m, n, &ns, budget)
        }
        (RelTerm::Nm(m), RelTerm::Nm(n), RelKind::Apart) => {
            let ns = match &ob.sort {
                IndexSort::Nm(ns) => ns.clone(),
                _ => NameSort::Nm,
            };
            decide_name_apart(&ob.assumptions, m, n, &ns, budget)
        }
        (RelTerm::Ix(i), RelTerm::Ix(j), RelKind::Equiv) => {
            decide_index_equiv(&ob.assumptions, i, j, &ob.sort, budget)
        }
        (RelTerm::Ix(i), RelTerm::Ix(j), RelKind::Apart) => {
            decide_index_apart(&ob.assumptions, i, j, &ob.sort, budget)
        }
        _ => Verdict::Unknown,
    }
}

// ---------------------------------------------------------------------------
// The semantic oracle
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleOutcome {
    Holds,
    Fails(Witness),
    Inconclusive,
}

/// A bounded ground extension of a closed set index.
#[derive(Clone, Debug)]
struct GroundSet {
    members: BTreeSet<Name>,
    complete: bool,
}

const EXT_CAP: usize = 4096;

fn ground_extension(i: &Index, star_depth: u32) -> Option<GroundSet> {
    fn go(i: &Index, star_depth: u32) -> Option<GroundSet> {
        match i {
            Index::Empty => Some(GroundSet {
                members: BTreeSet::new(),
                complete: true,
            }),
            Index::Sing(m) => {
                let n = name::eval_to_name(m).ok()?;
                let mut members = BTreeSet::new();
                members.insert(n);
                Some(GroundSet {
                    members,
                    complete: true,
                })
            }
            Index::Apart(a, b) | Index::Union(a, b) => {
                let ga = go(a, star_depth)?;
                let gb = go(b, star_depth)?;
                let mut members = ga.members;
                members.extend(gb.members);
                if members.len() > EXT_CAP {
                    return None;
                }
                Some(GroundSet {
                    members,
                    complete: ga.complete && gb.complete,
                })
            }
            Index::Map(f, x) => {
                let gx = go(x, star_depth)?;
                let mut members = BTreeSet::new();
                for n in &gx.members {
                    let v = name::apply_namespace(f, n).ok()?;
                    members.insert(v);
                }
                Some(GroundSet {
                    members,
                    complete: gx.complete,
                })
            }
            Index::FlatMap(g, x) => {
                let gx = go(x, star_depth)?;
                let mut members = BTreeSet::new();
                let mut complete = gx.complete;
                for n in &gx.members {
                    let img = apply_builder(g, n)?;
                    let gi = go(&img, star_depth)?;
                    complete &= gi.complete;
                    members.extend(gi.members);
                    if members.len() > EXT_CAP {
                        return None;
                    }
                }
                Some(GroundSet { members, complete })
            }
            Index::Star(g, x) => {
                let seed = go(x, star_depth)?;
                let mut members = seed.members.clone();
                let mut layer = seed.members;
                let mut complete = false;
                for _ in 0..star_depth {
                    let mut next = BTreeSet::new();
                    for n in &layer {
                        let img = apply_builder(g, n)?;
                        let gi = go(&img, star_depth)?;
                        if !gi.complete {
                            return None;
                        }
                        next.extend(gi.members);
                    }
                    if next.iter().all(|n| members.contains(n)) {
                        complete = true;
                        break;
                    }
                    members.extend(next.iter().cloned());
                    if members.len() > EXT_CAP {
                        return None;
                    }
                    layer = next;
                }
                Some(GroundSet {
                    members,
                    complete: complete && seed.complete,
                })
            }
            Index::App(_, _) | Index::Proj(_, _) => {
                let n = normalize_index(i).ok()?;
                if &n == i {
                    None
                } else {
                    go(&n, star_depth)
                }
            }
            _ => None,
        }
    }
    go(i, star_depth)
}

fn apply_builder(g: &Index, n: &Name) -> Option<Index> {
    match g {
        Index::Lam(a, body) => Some(subst_index(
            body,
            a,
            &IndexArg::Term(NameTerm::Lit(n.clone())),
        )),
        _ => None,
    }
}

/// The name universe: all trees of depth at most `depth` over leaf, two
/// reserved symbol atoms, and whatever atoms the obligation mentions.
fn name_universe(depth: u32, extra_atoms: &[Name], cap: usize) -> Vec<Name> {
    let mut atoms = vec![Name::Leaf, Name::sym("a"), Name::sym("b")];
    for n in extra_atoms {
        if !atoms.contains(n) {
            atoms.push(n.clone());
        }
    }
    let mut layers: Vec<Vec<Name>> = vec![atoms.clone()];
    let mut all = atoms;
    for _ in 0..depth {
        let prev: Vec<Name> = all.clone();
        let mut next = Vec::new();
        for l in &prev {
            for r in &prev {
                let n = Name::bin(l.clone(), r.clone());
                if !all.contains(&n) {
                    next.push(n);
                }
                if all.len() + next.len() >= cap {
                    break;
                }
            }
            if all.len() + next.len() >= cap {
                break;
            }
        }
        all.extend(next.clone());
        layers.push(next);
        if all.len() >= cap {
            break;
        }
    }
    all
}

/// Ground values assignable to a context variable of a given sort.
enum GroundVal {
    Nm(Name),
    Set(Vec<Name>),
    Fn(NameTerm),
}

impl GroundVal {
    fn to_index_arg(&self) -> IndexArg {
        match self {
            GroundVal::Nm(n) => IndexArg::Term(NameTerm::Lit(n.clone())),
            GroundVal::Set(ns) => IndexArg::Idx(Index::set_of(ns)),
            GroundVal::Fn(m) => IndexArg::Term(m.clone()),
        }
    }

    fn describe(&self) -> String {
        match self {
            GroundVal::Nm(n) => format!("{}", n),
            GroundVal::Set(ns) => format!(
                "{{{}}}",
                ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", ")
            ),
            GroundVal::Fn(m) => format!("{}", m),
        }
    }
}

fn fn_family(universe_atoms: &[Name]) -> Vec<NameTerm> {
    let mut fam = vec![NameTerm::id()];
    for atom in universe_atoms.iter().take(4) {
        fam.push(NameTerm::lam(
            "x",
            NameTerm::bin(NameTerm::Lit(atom.clone()), NameTerm::var("x")),
        ));
        fam.push(NameTerm::lam(
            "x",
            NameTerm::bin(NameTerm::var("x"), NameTerm::Lit(atom.clone())),
        ));
    }
    fam.push(NameTerm::lam("x", NameTerm::Lit(Name::Leaf)));
    fam
}

/// Check the semantic relation from the definitions, enumerating
/// closing substitution pairs that respect the relational context:
/// equivalent variable pairs take equal values, apart pairs disjoint
/// ones.  Hypothesis propositions must hold under the substitution for
/// a counterexample to count.
pub fn oracle_check(
    ob: &Obligation,
    name_depth: u32,
    star_depth: u32,
    budget: &Budget,
) -> OracleOutcome {
    let mut atoms = Vec::new();
    match &ob.lhs {
        RelTerm::Nm(m) => m.atoms(&mut atoms),
        RelTerm::Ix(i) => i.atoms(&mut atoms),
    }
    match &ob.rhs {
        RelTerm::Nm(m) => m.atoms(&mut atoms),
        RelTerm::Ix(i) => i.atoms(&mut atoms),
    }
    for p in &ob.assumptions.props {
        p.lhs.atoms(&mut atoms);
        p.rhs.atoms(&mut atoms);
    }

    let mut exhaustive = true;
    for depth in 0..=name_depth {
        let universe = name_universe(depth, &atoms, 2000);
        // Ground sets stay shallow; pairs of small sets already cover
        // the counterexample classes of interest.
        let set_universe = name_universe(depth.min(2), &atoms, 400);
        let mut sets: Vec<Vec<Name>> = vec![vec![]];
        for n in &set_universe {
            sets.push(vec![n.clone()]);
        }
        for (k, n) in set_universe.iter().enumerate() {
            for m in set_universe.iter().skip(k + 1) {
                sets.push(vec![n.clone(), m.clone()]);
            }
        }
        let fns = fn_family(&universe);

        match enumerate_and_check(ob, &universe, &sets, &fns, star_depth, budget) {
            EnumResult::Witness(w) => return OracleOutcome::Fails(w),
            EnumResult::ExhaustedOk => {}
            EnumResult::Capped => exhaustive = false,
        }
    }
    if exhaustive {
        OracleOutcome::Holds
    } else {
        OracleOutcome::Inconclusive
    }
}

enum EnumResult {
    Witness(Witness),
    ExhaustedOk,
    Capped,
}

fn enumerate_and_check(
    ob: &Obligation,
    universe: &[Name],
    sets: &[Vec<Name>],
    fns: &[NameTerm],
    star_depth: u32,
    budget: &Budget,
) -> EnumResult {
    // Choices per relational entry.
    struct EntryChoice {
        a: Ident,
        b: Ident,
        pairs: Vec<(GroundVal, GroundVal)>,
    }

    let mut entries: Vec<EntryChoice> = Vec::new();
    for e in &ob.assumptions.rel.entries {
        let (a, b, sort, equiv) = match e {
            RelEntry::EquivVars(a, b, s) => (a, b, s, true),
            RelEntry::ApartVars(a, b, s) => (a, b, s, false),
        };
        let mut pairs = Vec::new();
        match sort {
            IndexSort::Nm(NameSort::Nm) => {
                if equiv {
                    for n in universe {
                        pairs.push((GroundVal::Nm(n.clone()), GroundVal::Nm(n.clone())));
                    }
                } else {
                    for n in universe {
                        for m in universe {
                            if n != m {
                                pairs.push((GroundVal::Nm(n.clone()), GroundVal::Nm(m.clone())));
                            }
                        }
                    }
                }
            }
            IndexSort::NmSet => {
                if equiv {
                    for s in sets {
                        pairs.push((GroundVal::Set(s.clone()), GroundVal::Set(s.clone())));
                    }
                } else {
                    for s1 in sets {
                        for s2 in sets {
                            if s1.iter().all(|n| !s2.contains(n)) {
                                pairs.push((GroundVal::Set(s1.clone()), GroundVal::Set(s2.clone())));
                            }
                        }
                    }
                }
            }
            IndexSort::Nm(NameSort::Arrow(_, _)) => {
                if equiv {
                    for f in fns {
                        pairs.push((GroundVal::Fn(f.clone()), GroundVal::Fn(f.clone())));
                    }
                } else {
                    for f in fns {
                        for g in fns {
                            if fn_semantically_apart(f, g, universe) {
                                pairs.push((GroundVal::Fn(f.clone()), GroundVal::Fn(g.clone())));
                            }
                        }
                    }
                }
            }
            _ => return EnumResult::Capped,
        }
        if pairs.is_empty() {
            // No admissible substitution: the relation holds vacuously.
            return EnumResult::ExhaustedOk;
        }
        entries.push(EntryChoice {
            a: a.clone(),
            b: b.clone(),
            pairs,
        });
    }

    let mut checked: usize = 0;
    let mut idxs = vec![0usize; entries.len()];
    loop {
        if checked >= budget.oracle_cap {
            return EnumResult::Capped;
        }
        checked += 1;

        let mut s1: Vec<(Ident, GroundVal)> = Vec::new();
        let mut s2: Vec<(Ident, GroundVal)> = Vec::new();
        for (k, e) in entries.iter().enumerate() {
            let (va, vb) = &e.pairs[idxs[k]];
            s1.push((e.a.clone(), clone_ground(va)));
            s2.push((e.b.clone(), clone_ground(vb)));
        }

        if let Some(w) = check_instance(ob, &s1, &s2, star_depth) {
            return EnumResult::Witness(w);
        }
        if entries.is_empty() {
            // Single closed check.
            return EnumResult::ExhaustedOk;
        }

        // Advance the odometer.
        let mut k = entries.len();
        loop {
            k -= 1;
            idxs[k] += 1;
            if idxs[k] < entries[k].pairs.len() {
                break;
            }
            idxs[k] = 0;
            if k == 0 {
                return EnumResult::ExhaustedOk;
            }
        }
    }
}

fn clone_ground(v: &GroundVal) -> GroundVal {
    match v {
        GroundVal::Nm(n) => GroundVal::Nm(n.clone()),
        GroundVal::Set(s) => GroundVal::Set(s.clone()),
        GroundVal::Fn(f) => GroundVal::Fn(f.clone()),
    }
}

fn fn_semantically_apart(f: &NameTerm, g: &NameTerm, universe: &[Name]) -> bool {
    for n in universe.iter().take(24) {
        for m in universe.iter().take(24) {
            match (name::apply_namespace(f, n), name::apply_namespace(g, m)) {
                (Ok(a), Ok(b)) => {
                    if a == b {
                        return false;
                    }
                }
                _ => return false,
            }
        }
    }
    true
}

/// Evaluate the obligation under one concrete substitution pair; `None`
/// means no counterexample was established for this instance.
fn check_instance(
    ob: &Obligation,
    s1: &[(Ident, GroundVal)],
    s2: &[(Ident, GroundVal)],
    star_depth: u32,
) -> Option<Witness> {
    // Hypothesis propositions must hold under the substitution.
    for p in &ob.assumptions.props {
        let l = apply_subst_index(&p.lhs, s1);
        let r = apply_subst_index(&p.rhs, s2);
        match ground_relation(p.kind, &RelTerm::Ix(l), &RelTerm::Ix(r), &p.sort, star_depth) {
            Some(true) => {}
            _ => return None,
        }
    }
    let lhs = apply_subst_term(&ob.lhs, s1);
    let rhs = apply_subst_term(&ob.rhs, s2);
    match ground_relation(ob.kind, &lhs, &rhs, &ob.sort, star_depth) {
        Some(false) => Some(Witness {
            subst1: s1
                .iter()
                .map(|(a, v)| (a.to_string(), v.describe()))
                .collect(),
            subst2: s2
                .iter()
                .map(|(a, v)| (a.to_string(), v.describe()))
                .collect(),
            detail: describe_failure(ob.kind, &lhs, &rhs, &ob.sort, star_depth),
        }),
        _ => None,
    }
}

fn apply_subst_index(i: &Index, s: &[(Ident, GroundVal)]) -> Index {
    let mut out = i.clone();
    for (a, v) in s {
        out = subst_index(&out, a, &v.to_index_arg());
    }
    out
}

fn apply_subst_term(t: &RelTerm, s: &[(Ident, GroundVal)]) -> RelTerm {
    match t {
        RelTerm::Nm(m) => {
            let mut out = m.clone();
            for (a, v) in s {
                if let Some(nt) = match v {
                    GroundVal::Nm(n) => Some(NameTerm::Lit(n.clone())),
                    GroundVal::Fn(f) => Some(f.clone()),
                    GroundVal::Set(_) => None,
                } {
                    out = subst(&out, a, &nt);
                }
            }
            RelTerm::Nm(out)
        }
        RelTerm::Ix(i) => RelTerm::Ix(apply_subst_index(i, s)),
    }
}

/// Decide the sort-indexed semantic relation on closed instances.
/// `None` means the bounded check was inconclusive.
fn ground_relation(
    kind: RelKind,
    lhs: &RelTerm,
    rhs: &RelTerm,
    sort: &IndexSort,
    star_depth: u32,
) -> Option<bool> {
    match sort {
        IndexSort::Unit => Some(true),
        IndexSort::Nm(NameSort::Nm) => {
            let a = eval_rel_name(lhs)?;
            let b = eval_rel_name(rhs)?;
            Some(match kind {
                RelKind::Equiv => a == b,
                RelKind::Apart => a != b,
            })
        }
        IndexSort::Nm(NameSort::Arrow(dom, cod)) => {
            if **dom != NameSort::Nm {
                return None;
            }
            let f = eval_rel_value(lhs)?;
            let g = eval_rel_value(rhs)?;
            // Arguments range over small trees built from the atoms the
            // two functions themselves mention.
            let mut atoms = Vec::new();
            f.atoms(&mut atoms);
            g.atoms(&mut atoms);
            let universe = name_universe(2, &atoms, 120);
            match kind {
                RelKind::Equiv => {
                    for n in &universe {
                        let a = name::apply_namespace(&f, n).ok();
                        let b = name::apply_namespace(&g, n).ok();
                        match (&**cod, a, b) {
                            (NameSort::Nm, Some(a), Some(b)) => {
                                if a != b {
                                    return Some(false);
                                }
                            }
                            _ => return None,
                        }
                    }
                    Some(true)
                }
                RelKind::Apart => {
                    for n in &universe {
                        for m in &universe {
                            let a = name::apply_namespace(&f, n).ok();
                            let b = name::apply_namespace(&g, m).ok();
                            match (&**cod, a, b) {
                                (NameSort::Nm, Some(a), Some(b)) => {
                                    if a == b {
                                        return Some(false);
                                    }
                                }
                                _ => return None,
                            }
                        }
                    }
                    Some(true)
                }
            }
        }
        IndexSort::NmSet => {
            let gi = match lhs {
                RelTerm::Ix(i) => ground_extension(&normalize_index(i).ok()?, star_depth)?,
                RelTerm::Nm(_) => return None,
            };
            let gj = match rhs {
                RelTerm::Ix(i) => ground_extension(&normalize_index(i).ok()?, star_depth)?,
                RelTerm::Nm(_) => return None,
            };
            match kind {
                RelKind::Equiv => {
                    if gi.complete && gj.complete {
                        Some(gi.members == gj.members)
                    } else if gi.members.iter().any(|n| gj.complete && !gj.members.contains(n))
                        || gj.members.iter().any(|n| gi.complete && !gi.members.contains(n))
                    {
                        Some(false)
                    } else {
                        None
                    }
                }
                RelKind::Apart => {
                    if gi.members.iter().any(|n| gj.members.contains(n)) {
                        Some(false)
                    } else if gi.complete && gj.complete {
                        Some(true)
                    } else {
                        None
                    }
                }
            }
        }
        IndexSort::Prod(sa, sb) => {
            let (l1, l2) = split_rel_pair(lhs)?;
            let (r1, r2) = split_rel_pair(rhs)?;
            let first = ground_relation(kind, &l1, &r1, sa, star_depth)?;
            let second = ground_relation(kind, &l2, &r2, sb, star_depth)?;
            Some(first && second)
        }
        IndexSort::Arrow(_, _) => None,
    }
}

fn eval_rel_name(t: &RelTerm) -> Option<Name> {
    match t {
        RelTerm::Nm(m) => name::eval_to_name(m).ok(),
        RelTerm::Ix(Index::NmTm(m)) => name::eval_to_name(m).ok(),
        RelTerm::Ix(_) => None,
    }
}

fn eval_rel_value(t: &RelTerm) -> Option<NameTerm> {
    match t {
        RelTerm::Nm(m) => eval_name_term(m).ok(),
        RelTerm::Ix(Index::NmTm(m)) => eval_name_term(m).ok(),
        RelTerm::Ix(_) => None,
    }
}

fn split_rel_pair(t: &RelTerm) -> Option<(RelTerm, RelTerm)> {
    match t {
        RelTerm::Ix(i) => match normalize_index(i).ok()? {
            Index::Pair(a, b) => Some((RelTerm::Ix((*a).clone()), RelTerm::Ix((*b).clone()))),
            _ => None,
        },
        RelTerm::Nm(_) => None,
    }
}

fn describe_failure(kind: RelKind, lhs: &RelTerm, rhs: &RelTerm, star_depth: u32) -> String {
    match kind {
        RelKind::Apart => {
            // Try to surface the overlapping name.
            if let (RelTerm::Ix(i), RelTerm::Ix(j)) = (lhs, rhs) {
                if let (Some(gi), Some(gj)) = (
                    normalize_index(i).ok().and_then(|n| ground_extension(&n, star_depth)),
                    normalize_index(j).ok().and_then(|n| ground_extension(&n, star_depth)),
                ) {
                    if let Some(overlap) = gi.members.iter().find(|n| gj.members.contains(*n)) {
                        return format!("overlap at {}", overlap);
                    }
                }
            }
            if let (RelTerm::Nm(m), RelTerm::Nm(n)) = (lhs, rhs) {
                if let (Ok(a), Ok(b)) = (name::eval_to_name(m), name::eval_to_name(n)) {
                    if a == b {
                        return format!("both sides evaluate to {}", a);
                    }
                }
            }
            "apartness fails".to_string()
        }
        RelKind::Equiv => "equivalence fails".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf() -> NameTerm {
        NameTerm::Lit(Name::Leaf)
    }

    fn succ_builder() -> Index {
        Index::lam("s", Index::Sing(NameTerm::bin(leaf(), NameTerm::var("s"))))
    }

    fn prefix_fn(tag: &str) -> NameTerm {
        NameTerm::lam(
            "x",
            NameTerm::bin(NameTerm::Lit(Name::sym(tag)), NameTerm::var("x")),
        )
    }

    fn suffix_fn(n: Name) -> NameTerm {
        NameTerm::lam("x", NameTerm::bin(NameTerm::var("x"), NameTerm::Lit(n)))
    }

    fn b() -> Budget {
        Budget::default()
    }

    #[test]
    fn extract_splits_conjunctions_and_keeps_index_vars() {
        use crate::types::Prop;
        let x: Ident = Rc::from("X");
        let y: Ident = Rc::from("Y");
        let prop = Prop::conj(
            Prop::Apart(Index::var("X"), Index::var("Y"), IndexSort::NmSet),
            Prop::Tt,
        );
        let entries = vec![
            ExtractEntry::IndexVar(&x, &IndexSort::NmSet),
            ExtractEntry::IndexVar(&y, &IndexSort::NmSet),
            ExtractEntry::Prop(&prop),
            ExtractEntry::Other,
        ];
        let asm = extract(entries.into_iter());
        assert_eq!(asm.rel.entries.len(), 2);
        assert_eq!(asm.props.len(), 1);
        assert_eq!(asm.props[0].kind, RelKind::Apart);
    }

    #[test]
    fn extract_of_empty_is_empty() {
        let asm = extract(std::iter::empty());
        assert!(asm.props.is_empty());
        assert!(asm.rel.entries.is_empty());
    }

    #[test]
    fn beta_redex_equals_contractum() {
        // (#a. () * a)(()) == () * ()
        let m = NameTerm::app(
            NameTerm::lam("a", NameTerm::bin(leaf(), NameTerm::var("a"))),
            leaf(),
        );
        let n = NameTerm::Lit(Name::bin(Name::Leaf, Name::Leaf));
        let v = decide_name_equiv(&Assumptions::default(), &m, &n, &NameSort::Nm, &b());
        assert!(v.is_proven(), "{}", v);
    }

    #[test]
    fn hypothetical_vars_equal_under_bins() {
        let mut asm = Assumptions::default();
        asm.rel
            .push_equiv(Rc::from("a"), Rc::from("b"), IndexSort::nm());
        let m = NameTerm::bin(NameTerm::var("a"), leaf());
        let n = NameTerm::bin(NameTerm::var("b"), leaf());
        let v = decide_name_equiv(&asm, &m, &n, &NameSort::Nm, &b());
        assert!(v.is_proven(), "{}", v);
    }

    #[test]
    fn mirrored_lambdas_refuted_with_witness() {
        // #x. x * ()  vs  #x. () * x at Nm -> Nm
        let m = suffix_fn(Name::Leaf);
        let n = prefix_fn_leaf();
        let v = decide_name_equiv(
            &Assumptions::default(),
            &m,
            &n,
            &NameSort::nm_to_nm(),
            &b(),
        );
        match v {
            Verdict::Refuted(_) => {}
            other => panic!("expected refutation, got {}", other),
        }
    }

    fn prefix_fn_leaf() -> NameTerm {
        NameTerm::lam("x", NameTerm::bin(leaf(), NameTerm::var("x")))
    }

    #[test]
    fn distinct_prefix_functions_are_apart() {
        // #x.'t * x ## #x.'dd * x, via D-Lam + D-Bin1.
        let v = decide_name_apart(
            &Assumptions::default(),
            &prefix_fn("t"),
            &prefix_fn("dd"),
            &NameSort::nm_to_nm(),
            &b(),
        );
        match &v {
            Verdict::Proven(trace) => {
                assert!(trace.iter().any(|r| r == "D-Lam"), "trace {:?}", trace);
            }
            other => panic!("expected proof, got {}", other),
        }
    }

    #[test]
    fn missing_tag_is_refuted() {
        // #x.'dd * x ## id fails: witness x1 := (), x2 := 'dd * ().
        let v = decide_name_apart(
            &Assumptions::default(),
            &prefix_fn("dd"),
            &NameTerm::id(),
            &NameSort::nm_to_nm(),
            &b(),
        );
        match v {
            Verdict::Refuted(_) => {}
            other => panic!("expected refutation, got {}", other),
        }
    }

    #[test]
    fn ground_names_apart_by_structure() {
        let v = decide_name_apart(
            &Assumptions::default(),
            &leaf(),
            &NameTerm::Lit(Name::bin(Name::Leaf, Name::Leaf)),
            &NameSort::Nm,
            &b(),
        );
        assert!(v.is_proven(), "{}", v);
    }

    #[test]
    fn ground_mutual_exclusion() {
        let names = [
            Name::Leaf,
            Name::sym("a"),
            Name::bin(Name::Leaf, Name::sym("a")),
        ];
        for n in &names {
            for m in &names {
                let e = decide_name_equiv(
                    &Assumptions::default(),
                    &NameTerm::Lit(n.clone()),
                    &NameTerm::Lit(m.clone()),
                    &NameSort::Nm,
                    &b(),
                );
                let a = decide_name_apart(
                    &Assumptions::default(),
                    &NameTerm::Lit(n.clone()),
                    &NameTerm::Lit(m.clone()),
                    &NameSort::Nm,
                    &b(),
                );
                assert_ne!(
                    e.is_proven(),
                    a.is_proven(),
                    "exactly one of equiv/apart must hold for {} vs {}",
                    n,
                    m
                );
            }
        }
    }

    #[test]
    fn sep_union_commutes() {
        let mut asm = Assumptions::default();
        asm.rel.push_refl(Rc::from("X"), IndexSort::NmSet);
        asm.rel.push_refl(Rc::from("Y"), IndexSort::NmSet);
        asm.props.push(PropAtom {
            kind: RelKind::Apart,
            lhs: Index::var("X"),
            rhs: Index::var("Y"),
            sort: IndexSort::NmSet,
        });
        let i = Index::apart(Index::var("X"), Index::var("Y"));
        let j = Index::apart(Index::var("Y"), Index::var("X"));
        let v = decide_index_equiv(&asm, &i, &j, &IndexSort::NmSet, &b());
        assert!(v.is_proven(), "{}", v);
    }

    #[test]
    fn insrec_seed_apartness_proven() {
        // x == x : Nm |- Succ*[[{Succ x}]] ## {x}
        let mut asm = Assumptions::default();
        asm.rel.push_refl(Rc::from("x"), IndexSort::nm());
        let seed = Index::Sing(NameTerm::bin(leaf(), NameTerm::var("x")));
        let star = Index::star(succ_builder(), seed);
        let v = decide_index_apart(
            &asm,
            &star,
            &Index::Sing(NameTerm::var("x")),
            &IndexSort::NmSet,
            &b(),
        );
        match &v {
            Verdict::Proven(trace) => {
                assert!(trace.iter().any(|r| r == "D-Grow"), "trace {:?}", trace);
            }
            other => panic!("expected proof, got {}", other),
        }
    }

    #[test]
    fn overlapping_primes_refuted() {
        // X == X : NmSet |- Succ*[[Succ[[X]]]] ## X, witness X := {0, 2}.
        let mut asm = Assumptions::default();
        asm.rel.push_refl(Rc::from("X"), IndexSort::NmSet);
        let succ = prefix_fn_leaf();
        let lhs = Index::star(succ_builder(), Index::map(succ, Index::var("X")));
        let v = decide_index_apart(&asm, &lhs, &Index::var("X"), &IndexSort::NmSet, &b());
        match v {
            Verdict::Refuted(w) => {
                assert!(w.detail.contains("overlap"), "witness: {}", w);
            }
            other => panic!("expected refutation, got {}", other),
        }
    }

    #[test]
    fn oracle_reflexive_name_holds() {
        let ob = Obligation {
            assumptions: Assumptions::default(),
            kind: RelKind::Equiv,
            lhs: RelTerm::Nm(leaf()),
            rhs: RelTerm::Nm(leaf()),
            sort: IndexSort::nm(),
        };
        assert_eq!(oracle_check(&ob, 1, 1, &b()), OracleOutcome::Holds);
    }

    #[test]
    fn oracle_finds_suffix_overlap() {
        // id ## #x.(x * 1): images overlap, e.g. at (0 * 1, 0).
        let one = Name::bin(Name::Leaf, Name::Leaf);
        let ob = Obligation {
            assumptions: Assumptions::default(),
            kind: RelKind::Apart,
            lhs: RelTerm::Nm(NameTerm::id()),
            rhs: RelTerm::Nm(suffix_fn(one)),
            sort: IndexSort::Nm(NameSort::nm_to_nm()),
        };
        match oracle_check(&ob, 2, 1, &b()) {
            OracleOutcome::Fails(_) => {}
            other => panic!("expected failure, got {:?}", other),
        }
    }

    #[test]
    fn oracle_ground_set_apartness_holds() {
        // {() * 0'} ## {() * 1'} where 0' = leaf, 1' = (leaf leaf).
        let zero = Name::Leaf;
        let one = Name::bin(Name::Leaf, Name::Leaf);
        let ob = Obligation {
            assumptions: Assumptions::default(),
            kind: RelKind::Apart,
            lhs: RelTerm::Ix(Index::sing_name(Name::bin(Name::Leaf, zero))),
            rhs: RelTerm::Ix(Index::sing_name(Name::bin(Name::Leaf, one))),
            sort: IndexSort::NmSet,
        };
        assert_eq!(oracle_check(&ob, 2, 2, &b()), OracleOutcome::Holds);
    }

    #[test]
    fn symmetry_of_verdicts() {
        let m = prefix_fn("t");
        let n = prefix_fn("dd");
        let asm = Assumptions::default();
        let v1 = decide_name_apart(&asm, &m, &n, &NameSort::nm_to_nm(), &b());
        let v2 = decide_name_apart(&asm, &n, &m, &NameSort::nm_to_nm(), &b());
        assert_eq!(v1.is_proven(), v2.is_proven());
    }

    #[test]
    fn subset_on_canonical_forms() {
        let asm = Assumptions::default();
        let x = Index::sing_name(Name::sym("a"));
        let y = Index::union(
            Index::sing_name(Name::sym("a")),
            Index::sing_name(Name::sym("b")),
        );
        assert!(subset_of(&asm, &x, &y, &b()));
        assert!(!subset_of(&asm, &y, &x, &b()));
    }
}
