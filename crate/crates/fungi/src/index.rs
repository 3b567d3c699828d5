//! Index expressions over name sets: sorting, reduction, normal forms,
//! and set membership.
//!
//! Indices statically describe sets of names.  Reduction is beta
//! reduction for functions and pairs plus distribution of name-term
//! mapping over the set constructors.  The two Kleene rules never fire
//! during normalization (they would make it diverge); membership and
//! the oracle take an explicit unfold budget instead.

use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::name::{
    self, beta_normalize, check_name_sort, Ident, Name, NameSort, NameTerm, SortCtx,
};
use crate::relations::{self, Assumptions, Verdict};

/// Sorts classifying indices.  Name-term sorts embed via `NameSort`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum IndexSort {
    Nm(NameSort),
    NmSet,
    Unit,
    Prod(Rc<IndexSort>, Rc<IndexSort>),
    Arrow(Rc<IndexSort>, Rc<IndexSort>),
}

impl IndexSort {
    pub fn nm() -> IndexSort {
        IndexSort::Nm(NameSort::Nm)
    }

    pub fn nm_fn() -> IndexSort {
        IndexSort::Nm(NameSort::nm_to_nm())
    }

    pub fn arrow(d: IndexSort, c: IndexSort) -> IndexSort {
        IndexSort::Arrow(Rc::new(d), Rc::new(c))
    }

    pub fn prod(a: IndexSort, b: IndexSort) -> IndexSort {
        IndexSort::Prod(Rc::new(a), Rc::new(b))
    }

    /// The sort of set-building functions, `Nm => NmSet`.
    pub fn set_builder() -> IndexSort {
        IndexSort::arrow(IndexSort::nm(), IndexSort::NmSet)
    }
}

impl fmt::Debug for IndexSort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for IndexSort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexSort::Nm(ns) => write!(f, "{}", ns),
            IndexSort::NmSet => write!(f, "NmSet"),
            IndexSort::Unit => write!(f, "1"),
            IndexSort::Prod(a, b) => write!(f, "({} x {})", a, b),
            IndexSort::Arrow(d, c) => {
                if matches!(**d, IndexSort::Arrow(_, _)) {
                    write!(f, "({}) => {}", d, c)
                } else {
                    write!(f, "{} => {}", d, c)
                }
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Side {
    Fst,
    Snd,
}

/// Index expressions.  `NmTm` embeds a name term as an index of name
/// sort; it arises from beta reduction of set-building functions and
/// has no surface syntax of its own.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Index {
    Var(Ident),
    NmTm(NameTerm),
    Sing(NameTerm),
    Empty,
    Apart(Rc<Index>, Rc<Index>),
    Union(Rc<Index>, Rc<Index>),
    Unit,
    Pair(Rc<Index>, Rc<Index>),
    Proj(Side, Rc<Index>),
    Lam(Ident, Rc<Index>),
    App(Rc<Index>, Rc<Index>),
    /// `M[[X]]`: map a name function over a set.
    Map(NameTerm, Rc<Index>),
    /// `i[[X]]`: collect the output sets of `i` on the members of `X`.
    FlatMap(Rc<Index>, Rc<Index>),
    /// `i*[[X]]`: apply `i` zero or more times to each member of `X`.
    Star(Rc<Index>, Rc<Index>),
}

// NameTerm lacks a derived Ord; ordering is needed only to
// canonicalize leaf vectors, so any total order works.
impl PartialOrd for NameTerm {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for NameTerm {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        format!("{}", self).cmp(&format!("{}", other))
    }
}

impl Index {
    pub fn var(a: &str) -> Index {
        Index::Var(Rc::from(a))
    }

    pub fn sing(m: NameTerm) -> Index {
        Index::Sing(m)
    }

    pub fn sing_name(n: Name) -> Index {
        Index::Sing(NameTerm::Lit(n))
    }

    pub fn apart(x: Index, y: Index) -> Index {
        Index::Apart(Rc::new(x), Rc::new(y))
    }

    pub fn union(x: Index, y: Index) -> Index {
        Index::Union(Rc::new(x), Rc::new(y))
    }

    pub fn pair(a: Index, b: Index) -> Index {
        Index::Pair(Rc::new(a), Rc::new(b))
    }

    pub fn proj(side: Side, i: Index) -> Index {
        Index::Proj(side, Rc::new(i))
    }

    pub fn lam(a: &str, body: Index) -> Index {
        Index::Lam(Rc::from(a), Rc::new(body))
    }

    pub fn app(f: Index, arg: Index) -> Index {
        Index::App(Rc::new(f), Rc::new(arg))
    }

    pub fn map(m: NameTerm, x: Index) -> Index {
        Index::Map(m, Rc::new(x))
    }

    pub fn flat_map(f: Index, x: Index) -> Index {
        Index::FlatMap(Rc::new(f), Rc::new(x))
    }

    pub fn star(f: Index, x: Index) -> Index {
        Index::Star(Rc::new(f), Rc::new(x))
    }

    /// Ground sets built from a list of names.
    pub fn set_of(names: &[Name]) -> Index {
        let mut leaves: Vec<Index> = names
            .iter()
            .map(|n| Index::sing_name(n.clone()))
            .collect();
        leaves.sort();
        leaves.dedup();
        build_set(SetCons::Union, leaves)
    }

    pub fn free_vars(&self) -> Vec<Ident> {
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Ident>, out: &mut Vec<Ident>) {
        match self {
            Index::Var(a) => {
                if !bound.contains(a) && !out.contains(a) {
                    out.push(a.clone());
                }
            }
            Index::NmTm(m) | Index::Sing(m) => {
                for v in m.free_vars() {
                    if !bound.contains(&v) && !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
            Index::Empty | Index::Unit => {}
            Index::Apart(a, b) | Index::Union(a, b) | Index::Pair(a, b) | Index::App(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Index::Proj(_, i) => i.collect_free(bound, out),
            Index::Lam(a, body) => {
                bound.push(a.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            Index::Map(m, x) => {
                for v in m.free_vars() {
                    if !bound.contains(&v) && !out.contains(&v) {
                        out.push(v);
                    }
                }
                x.collect_free(bound, out);
            }
            Index::FlatMap(f, x) | Index::Star(f, x) => {
                f.collect_free(bound, out);
                x.collect_free(bound, out);
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Symbol/numeral atoms occurring anywhere in the index.
    pub fn atoms(&self, out: &mut Vec<Name>) {
        match self {
            Index::Var(_) | Index::Empty | Index::Unit => {}
            Index::NmTm(m) | Index::Sing(m) => m.atoms(out),
            Index::Apart(a, b) | Index::Union(a, b) | Index::Pair(a, b) | Index::App(a, b) => {
                a.atoms(out);
                b.atoms(out);
            }
            Index::Proj(_, i) => i.atoms(out),
            Index::Lam(_, body) => body.atoms(out),
            Index::Map(m, x) => {
                m.atoms(out);
                x.atoms(out);
            }
            Index::FlatMap(f, x) | Index::Star(f, x) => {
                f.atoms(out);
                x.atoms(out);
            }
        }
    }
}

impl fmt::Debug for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn fmt_atomic(i: &Index, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match i {
        Index::Var(_)
        | Index::Sing(_)
        | Index::Empty
        | Index::Unit
        | Index::Map(_, _)
        | Index::FlatMap(_, _)
        | Index::Star(_, _)
        | Index::Pair(_, _)
        | Index::Proj(_, _) => write!(f, "{}", i),
        _ => write!(f, "({})", i),
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Index::Var(a) => write!(f, "{}", a),
            Index::NmTm(m) => write!(f, "{}", m),
            Index::Sing(m) => write!(f, "{{{}}}", m),
            Index::Empty => write!(f, "0"),
            Index::Apart(a, b) => {
                fmt_atomic(a, f)?;
                write!(f, " % ")?;
                fmt_atomic(b, f)
            }
            Index::Union(a, b) => {
                fmt_atomic(a, f)?;
                write!(f, " + ")?;
                fmt_atomic(b, f)
            }
            Index::Unit => write!(f, "()"),
            Index::Pair(a, b) => write!(f, "({}, {})", a, b),
            Index::Proj(Side::Fst, i) => {
                fmt_atomic(i, f)?;
                write!(f, ".1")
            }
            Index::Proj(Side::Snd, i) => {
                fmt_atomic(i, f)?;
                write!(f, ".2")
            }
            Index::Lam(a, body) => write!(f, "#{}.{}", a, body),
            Index::App(g, arg) => {
                fmt_atomic(g, f)?;
                write!(f, " ")?;
                fmt_atomic(arg, f)
            }
            Index::Map(m, x) => {
                let simple = matches!(m, NameTerm::Lit(_) | NameTerm::Var(_));
                if simple {
                    write!(f, "{}[[{}]]", m, x)
                } else {
                    write!(f, "({})[[{}]]", m, x)
                }
            }
            Index::FlatMap(g, x) => {
                match &**g {
                    Index::Var(a) => write!(f, "{}[[{}]]", a, x),
                    _ => write!(f, "({})[[{}]]", g, x),
                }
            }
            Index::Star(g, x) => {
                match &**g {
                    Index::Var(a) => write!(f, "{}*[[{}]]", a, x),
                    _ => write!(f, "({})*[[{}]]", g, x),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum IndexSortError {
    #[error("unbound index variable `{0}`")]
    Unbound(String),
    #[error("name term in index is ill-sorted: {0}")]
    NameTerm(#[from] name::SortError),
    #[error("apartness obligation failed: {lhs} ## {rhs}")]
    ApartnessObligation { lhs: String, rhs: String },
    #[error("expected sort {expected}, found {got}")]
    Mismatch { expected: IndexSort, got: IndexSort },
    #[error("projection of a non-product of sort {0}")]
    ProjOfNonProduct(IndexSort),
    #[error("applied an index of sort {0}, which is not an index arrow")]
    NotAnArrow(IndexSort),
    #[error("cannot infer the binder sort of `#{0}.`")]
    CannotInferBinder(String),
}

/// A sorting environment: index variable sorts plus the propositions
/// in scope (used to discharge apartness obligations on `%`).
#[derive(Clone, Default)]
pub struct SortEnv {
    pub vars: Vec<(Ident, IndexSort)>,
    pub assumptions: Assumptions,
}

impl SortEnv {
    pub fn new() -> SortEnv {
        SortEnv::default()
    }

    pub fn lookup(&self, a: &str) -> Option<&IndexSort> {
        self.vars.iter().rev().find(|(b, _)| &**b == a).map(|(_, s)| s)
    }

    pub fn extended(&self, a: Ident, sort: IndexSort) -> SortEnv {
        let mut env = self.clone();
        env.assumptions.rel.push_refl(a.clone(), sort.clone());
        env.vars.push((a, sort));
        env
    }

    /// The name-sorting fragment: variables of embedded name sort.
    pub fn name_ctx(&self) -> SortCtx {
        let mut ctx = SortCtx::new();
        for (a, s) in &self.vars {
            if let IndexSort::Nm(ns) = s {
                ctx = ctx.extended(a.clone(), ns.clone());
            }
        }
        ctx
    }
}

/// Assign the sort of `i` under `env`; `sort-sep-union` invokes the
/// apartness decision procedure on the extracted assumptions.
pub fn sort_index(env: &SortEnv, i: &Index) -> Result<IndexSort, IndexSortError> {
    match i {
        Index::Var(a) => env
            .lookup(a)
            .cloned()
            .ok_or_else(|| IndexSortError::Unbound(a.to_string())),
        Index::NmTm(m) => {
            let ns = name::sort_name_term(&env.name_ctx(), m)?;
            Ok(IndexSort::Nm(ns))
        }
        Index::Sing(m) => {
            check_name_sort(&env.name_ctx(), m, &NameSort::Nm)?;
            Ok(IndexSort::NmSet)
        }
        Index::Empty => Ok(IndexSort::NmSet),
        Index::Union(x, y) => {
            expect_sort(env, x, &IndexSort::NmSet)?;
            expect_sort(env, y, &IndexSort::NmSet)?;
            Ok(IndexSort::NmSet)
        }
        Index::Apart(x, y) => {
            expect_sort(env, x, &IndexSort::NmSet)?;
            expect_sort(env, y, &IndexSort::NmSet)?;
            let verdict = relations::decide_index_apart(
                &env.assumptions,
                x,
                y,
                &IndexSort::NmSet,
                &relations::Budget::default(),
            );
            match verdict {
                Verdict::Proven(_) => Ok(IndexSort::NmSet),
                _ => Err(IndexSortError::ApartnessObligation {
                    lhs: x.to_string(),
                    rhs: y.to_string(),
                }),
            }
        }
        Index::Unit => Ok(IndexSort::Unit),
        Index::Pair(a, b) => {
            let sa = sort_index(env, a)?;
            let sb = sort_index(env, b)?;
            Ok(IndexSort::prod(sa, sb))
        }
        Index::Proj(side, p) => match sort_index(env, p)? {
            IndexSort::Prod(a, b) => Ok(match side {
                Side::Fst => (*a).clone(),
                Side::Snd => (*b).clone(),
            }),
            other => Err(IndexSortError::ProjOfNonProduct(other)),
        },
        Index::Lam(a, body) => {
            // Binders are unannotated; infer the domain from use.
            let candidates = [
                IndexSort::nm(),
                IndexSort::NmSet,
                IndexSort::nm_fn(),
                IndexSort::set_builder(),
            ];
            for dom in candidates {
                let inner = env.extended(a.clone(), dom.clone());
                if let Ok(cod) = sort_index(&inner, body) {
                    return Ok(IndexSort::arrow(dom, cod));
                }
            }
            Err(IndexSortError::CannotInferBinder(a.to_string()))
        }
        Index::App(g, arg) => match sort_index(env, g)? {
            IndexSort::Arrow(dom, cod) => {
                expect_sort(env, arg, &dom)?;
                Ok((*cod).clone())
            }
            other => Err(IndexSortError::NotAnArrow(other)),
        },
        Index::Map(m, x) => {
            check_name_sort(&env.name_ctx(), m, &NameSort::nm_to_nm())?;
            expect_sort(env, x, &IndexSort::NmSet)?;
            Ok(IndexSort::NmSet)
        }
        Index::FlatMap(g, x) | Index::Star(g, x) => {
            expect_sort(env, g, &IndexSort::set_builder())?;
            expect_sort(env, x, &IndexSort::NmSet)?;
            Ok(IndexSort::NmSet)
        }
    }
}

/// Check `i` against an expected sort, propagating through binders so
/// unannotated lambdas sort deterministically when the goal is known.
pub fn check_index_sort(
    env: &SortEnv,
    i: &Index,
    expected: &IndexSort,
) -> Result<(), IndexSortError> {
    match (i, expected) {
        (Index::Lam(a, body), IndexSort::Arrow(dom, cod)) => {
            let inner = env.extended(a.clone(), (**dom).clone());
            check_index_sort(&inner, body, cod)
        }
        (Index::Pair(x, y), IndexSort::Prod(sa, sb)) => {
            check_index_sort(env, x, sa)?;
            check_index_sort(env, y, sb)
        }
        _ => {
            let got = sort_index(env, i)?;
            if &got == expected {
                Ok(())
            } else {
                Err(IndexSortError::Mismatch {
                    expected: expected.clone(),
                    got,
                })
            }
        }
    }
}

fn expect_sort(env: &SortEnv, i: &Index, expected: &IndexSort) -> Result<(), IndexSortError> {
    check_index_sort(env, i, expected)
}

/// What gets substituted for an index variable.
#[derive(Clone, Debug)]
pub enum IndexArg {
    Term(NameTerm),
    Idx(Index),
}

impl IndexArg {
    fn as_index(&self) -> Index {
        match self {
            IndexArg::Term(m) => Index::NmTm(m.clone()),
            IndexArg::Idx(i) => i.clone(),
        }
    }

    fn as_name_term(&self) -> Option<NameTerm> {
        match self {
            IndexArg::Term(m) => Some(m.clone()),
            IndexArg::Idx(Index::NmTm(m)) => Some(m.clone()),
            IndexArg::Idx(Index::Var(a)) => Some(NameTerm::Var(a.clone())),
            IndexArg::Idx(_) => None,
        }
    }
}

/// Capture-avoiding substitution `[arg/a]i`.  Name-sorted variables may
/// occur inside embedded name terms, so those are substituted too when
/// the argument is (or embeds) a name term.
pub fn subst_index(i: &Index, a: &str, arg: &IndexArg) -> Index {
    let nt = arg.as_name_term();
    let subst_nt = |m: &NameTerm| -> NameTerm {
        match &nt {
            Some(v) if m.free_vars().iter().any(|b| &**b == a) => name::subst(m, a, v),
            _ => m.clone(),
        }
    };
    match i {
        Index::Var(b) => {
            if &**b == a {
                arg.as_index()
            } else {
                i.clone()
            }
        }
        Index::NmTm(m) => Index::NmTm(subst_nt(m)),
        Index::Sing(m) => Index::Sing(subst_nt(m)),
        Index::Empty | Index::Unit => i.clone(),
        Index::Apart(x, y) => Index::apart(subst_index(x, a, arg), subst_index(y, a, arg)),
        Index::Union(x, y) => Index::union(subst_index(x, a, arg), subst_index(y, a, arg)),
        Index::Pair(x, y) => Index::pair(subst_index(x, a, arg), subst_index(y, a, arg)),
        Index::Proj(side, p) => Index::proj(*side, subst_index(p, a, arg)),
        Index::Lam(b, body) => {
            if &**b == a {
                i.clone()
            } else if arg.as_index().free_vars().contains(b) {
                let fresh = name::fresh_ident(b);
                let renamed = subst_index(body, b, &IndexArg::Idx(Index::Var(fresh.clone())));
                Index::Lam(fresh, Rc::new(subst_index(&renamed, a, arg)))
            } else {
                Index::Lam(b.clone(), Rc::new(subst_index(body, a, arg)))
            }
        }
        Index::App(g, x) => Index::app(subst_index(g, a, arg), subst_index(x, a, arg)),
        Index::Map(m, x) => Index::Map(subst_nt(m), Rc::new(subst_index(x, a, arg))),
        Index::FlatMap(g, x) => {
            Index::flat_map(subst_index(g, a, arg), subst_index(x, a, arg))
        }
        Index::Star(g, x) => Index::star(subst_index(g, a, arg), subst_index(x, a, arg)),
    }
}

/// Conservative injectivity for a name function: the body is a
/// composition of `*` nodes in which the bound variable occurs exactly
/// once and every other position is a closed literal.  The identity
/// function counts.
pub fn injective_name_fn(m: &NameTerm) -> bool {
    fn shape(body: &NameTerm, a: &str) -> Option<usize> {
        match body {
            NameTerm::Var(b) if &**b == a => Some(1),
            NameTerm::Bin(l, r) => {
                let cl = shape(l, a)?;
                let cr = shape(r, a)?;
                Some(cl + cr)
            }
            NameTerm::Lit(_) => Some(0),
            _ => {
                if body.is_closed() {
                    Some(0)
                } else {
                    None
                }
            }
        }
    }
    match m {
        NameTerm::Lam(a, body) => shape(body, a) == Some(1),
        _ => false,
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum NormError {
    #[error("index normalization fuel exhausted")]
    Fuel,
    #[error("name-term evaluation failed during index reduction: {0}")]
    Name(#[from] name::EvalError),
}

const NORM_FUEL: u64 = 200_000;

/// The result of one head-reduction attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HeadStep {
    Stepped { rule: &'static str, result: Index },
    NoRedex,
}

/// Apply exactly one head reduction, if any applies.  The Kleene rules
/// are exposed as [`unfold_star_outer`]/[`unfold_star_inner`] and never
/// fired here.
pub fn reduce_index(i: &Index) -> Result<HeadStep, NormError> {
    let step = |rule: &'static str, result: Index| Ok(HeadStep::Stepped { rule, result });
    match i {
        Index::Proj(side, p) => {
            if let Index::Pair(a, b) = &**p {
                return step(
                    "reduce-proj",
                    match side {
                        Side::Fst => (**a).clone(),
                        Side::Snd => (**b).clone(),
                    },
                );
            }
            Ok(HeadStep::NoRedex)
        }
        Index::App(g, arg) => {
            if let Index::Lam(a, body) = &**g {
                return step("reduce-app", subst_index(body, a, &IndexArg::Idx((**arg).clone())));
            }
            Ok(HeadStep::NoRedex)
        }
        Index::Map(m, x) => match &**x {
            Index::Empty => step("reduce-map-empty", Index::Empty),
            Index::Sing(n) => {
                let body = beta_normalize(&NameTerm::app(m.clone(), n.clone()))?;
                step("reduce-map-single", Index::Sing(body))
            }
            Index::Apart(x1, x2) => {
                let mnf = beta_normalize(m)?;
                if injective_name_fn(&mnf) {
                    step(
                        "reduce-map-apart",
                        Index::apart(
                            Index::Map(m.clone(), x1.clone()),
                            Index::Map(m.clone(), x2.clone()),
                        ),
                    )
                } else {
                    // Fall back to plain union: sound for extension,
                    // forgets separation.
                    step(
                        "reduce-map-union",
                        Index::union(
                            Index::Map(m.clone(), x1.clone()),
                            Index::Map(m.clone(), x2.clone()),
                        ),
                    )
                }
            }
            Index::Union(x1, x2) => step(
                "reduce-map-union",
                Index::union(
                    Index::Map(m.clone(), x1.clone()),
                    Index::Map(m.clone(), x2.clone()),
                ),
            ),
            _ => Ok(HeadStep::NoRedex),
        },
        _ => Ok(HeadStep::NoRedex),
    }
}

/// One outer Kleene unfolding: `i*[[j]]` to `i[[i*[[j]]]]`.
pub fn unfold_star_outer(i: &Index) -> Option<Index> {
    match i {
        Index::Star(f, x) => Some(Index::flat_map(
            (**f).clone(),
            Index::Star(f.clone(), x.clone()),
        )),
        _ => None,
    }
}

/// One inner Kleene unfolding: `i*[[j]]` to `i*[[i[[j]]]]`.
pub fn unfold_star_inner(i: &Index) -> Option<Index> {
    match i {
        Index::Star(f, x) => Some(Index::star(
            (**f).clone(),
            Index::flat_map((**f).clone(), (**x).clone()),
        )),
        _ => None,
    }
}

/// Which constructor joins the leaves of a flattened set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetCons {
    Apart,
    Union,
}

/// Flatten a set-shaped normal form into sorted leaves.  The
/// constructor degrades to `Union` as soon as any joint is a union,
/// since mixed forms do not preserve pairwise separation.
pub fn set_leaves(i: &Index) -> (SetCons, Vec<Index>) {
    fn go(i: &Index, cons: &mut SetCons, out: &mut Vec<Index>) {
        match i {
            Index::Empty => {}
            Index::Apart(a, b) => {
                go(a, cons, out);
                go(b, cons, out);
            }
            Index::Union(a, b) => {
                *cons = SetCons::Union;
                go(a, cons, out);
                go(b, cons, out);
            }
            other => out.push(other.clone()),
        }
    }
    let mut cons = SetCons::Apart;
    let mut leaves = Vec::new();
    go(i, &mut cons, &mut leaves);
    leaves.sort();
    if cons == SetCons::Union {
        leaves.dedup();
    }
    (cons, leaves)
}

/// Rebuild a set from sorted leaves, right-nested.
pub fn build_set(cons: SetCons, leaves: Vec<Index>) -> Index {
    let mut it = leaves.into_iter().rev();
    let mut acc = match it.next() {
        None => return Index::Empty,
        Some(last) => last,
    };
    for leaf in it {
        acc = match cons {
            SetCons::Apart => Index::apart(leaf, acc),
            SetCons::Union => Index::union(leaf, acc),
        };
    }
    acc
}

/// Exhaustively apply the congruence closure of the non-Kleene
/// reductions, then canonicalize set shapes: unions are flattened,
/// leaves sorted, maps fused inward.  `Star` nodes stay symbolic.
pub fn normalize_index(i: &Index) -> Result<Index, NormError> {
    let mut fuel = NORM_FUEL;
    norm(i, &mut fuel)
}

fn spend(fuel: &mut u64) -> Result<(), NormError> {
    if *fuel == 0 {
        return Err(NormError::Fuel);
    }
    *fuel -= 1;
    Ok(())
}

fn norm(i: &Index, fuel: &mut u64) -> Result<Index, NormError> {
    spend(fuel)?;
    match i {
        Index::Var(_) | Index::Empty | Index::Unit => Ok(i.clone()),
        Index::NmTm(m) => Ok(Index::NmTm(beta_normalize(m)?)),
        Index::Sing(m) => Ok(Index::Sing(beta_normalize(m)?)),
        Index::Pair(a, b) => Ok(Index::pair(norm(a, fuel)?, norm(b, fuel)?)),
        Index::Proj(side, p) => {
            let pn = norm(p, fuel)?;
            if let Index::Pair(a, b) = &pn {
                return Ok(match side {
                    Side::Fst => (**a).clone(),
                    Side::Snd => (**b).clone(),
                });
            }
            Ok(Index::proj(*side, pn))
        }
        Index::Lam(a, body) => Ok(Index::Lam(a.clone(), Rc::new(norm(body, fuel)?))),
        Index::App(g, arg) => {
            let gn = norm(g, fuel)?;
            let an = norm(arg, fuel)?;
            if let Index::Lam(a, body) = &gn {
                return norm(&subst_index(body, a, &IndexArg::Idx(an)), fuel);
            }
            Ok(Index::app(gn, an))
        }
        Index::Apart(x, y) => {
            let xn = norm(x, fuel)?;
            let yn = norm(y, fuel)?;
            let joined = Index::apart(xn, yn);
            let (cons, leaves) = set_leaves(&joined);
            Ok(build_set(cons, leaves))
        }
        Index::Union(x, y) => {
            let xn = norm(x, fuel)?;
            let yn = norm(y, fuel)?;
            let joined = Index::union(xn, yn);
            let (cons, leaves) = set_leaves(&joined);
            Ok(build_set(cons, leaves))
        }
        Index::Map(m, x) => {
            let mn = beta_normalize(m)?;
            let xn = norm(x, fuel)?;
            norm_map(&mn, &xn, fuel)
        }
        Index::FlatMap(g, x) => {
            let gn = norm(g, fuel)?;
            let xn = norm(x, fuel)?;
            norm_flat_map(&gn, &xn, fuel)
        }
        Index::Star(g, x) => {
            let gn = norm(g, fuel)?;
            let xn = norm(x, fuel)?;
            if xn == Index::Empty {
                return Ok(Index::Empty);
            }
            Ok(Index::star(gn, xn))
        }
    }
}

fn norm_map(m: &NameTerm, x: &Index, fuel: &mut u64) -> Result<Index, NormError> {
    spend(fuel)?;
    match x {
        Index::Empty => Ok(Index::Empty),
        Index::Sing(n) => Ok(Index::Sing(beta_normalize(&NameTerm::app(
            m.clone(),
            n.clone(),
        ))?)),
        Index::Apart(_, _) | Index::Union(_, _) => {
            let (cons, leaves) = set_leaves(x);
            let out_cons = match cons {
                SetCons::Apart if injective_name_fn(m) => SetCons::Apart,
                _ => SetCons::Union,
            };
            let mut out = Vec::new();
            for leaf in leaves {
                out.push(norm_map(m, &leaf, fuel)?);
            }
            out.sort();
            if out_cons == SetCons::Union {
                out.dedup();
            }
            Ok(build_set(out_cons, out))
        }
        // Map fusion: M[[N[[X]]]] = (M after N)[[X]].
        Index::Map(n, y) => {
            let a = name::fresh_ident("a");
            let composed = beta_normalize(&NameTerm::Lam(
                a.clone(),
                Rc::new(NameTerm::app(
                    m.clone(),
                    NameTerm::app(n.clone(), NameTerm::Var(a)),
                )),
            ))?;
            norm_map(&composed, y, fuel)
        }
        // Push the map into the flat-map body.
        Index::FlatMap(g, y) => {
            if let Index::Lam(a, body) = &**g {
                let new_body = norm(&Index::Map(m.clone(), body.clone()), fuel)?;
                let gn = Index::Lam(a.clone(), Rc::new(new_body));
                return norm_flat_map(&gn, y, fuel);
            }
            Ok(Index::Map(m.clone(), Rc::new(x.clone())))
        }
        _ => Ok(Index::Map(m.clone(), Rc::new(x.clone()))),
    }
}

fn norm_flat_map(g: &Index, x: &Index, fuel: &mut u64) -> Result<Index, NormError> {
    spend(fuel)?;
    // A set-builder whose body is a singleton is an ordinary map.
    if let Index::Lam(a, body) = g {
        if let Index::Sing(m) = &**body {
            let lifted = NameTerm::Lam(a.clone(), Rc::new(m.clone()));
            return norm_map(&beta_normalize(&lifted)?, x, fuel);
        }
        if **body == Index::Empty {
            return Ok(Index::Empty);
        }
        // Distribute a union-shaped body over the argument set.
        let (_, body_leaves) = set_leaves(body);
        if body_leaves.len() > 1 {
            let mut out = Vec::new();
            for leaf in body_leaves {
                let gleaf = Index::Lam(a.clone(), Rc::new(leaf));
                out.push(norm_flat_map(&gleaf, x, fuel)?);
            }
            out.sort();
            out.dedup();
            return Ok(build_set(SetCons::Union, out));
        }
    }
    match x {
        Index::Empty => Ok(Index::Empty),
        Index::Sing(n) => {
            if let Index::Lam(a, body) = g {
                return norm(&subst_index(body, a, &IndexArg::Term(n.clone())), fuel);
            }
            Ok(Index::flat_map(g.clone(), x.clone()))
        }
        Index::Apart(_, _) | Index::Union(_, _) => {
            let (_, leaves) = set_leaves(x);
            let mut out = Vec::new();
            for leaf in leaves {
                out.push(norm_flat_map(g, &leaf, fuel)?);
            }
            out.sort();
            out.dedup();
            Ok(build_set(SetCons::Union, out))
        }
        // Fusion: i[[M[[X]]]] = (i after M)[[X]].
        Index::Map(n, y) => {
            if let Index::Lam(a, body) = g {
                let b = name::fresh_ident(a);
                let inner = subst_index(
                    body,
                    a,
                    &IndexArg::Term(NameTerm::app(n.clone(), NameTerm::Var(b.clone()))),
                );
                let fused = Index::Lam(b, Rc::new(norm(&inner, fuel)?));
                return norm_flat_map(&fused, y, fuel);
            }
            Ok(Index::flat_map(g.clone(), x.clone()))
        }
        // Associativity: i[[j[[X]]]] = (#b. i[[j b]])[[X]].
        Index::FlatMap(h, y) => {
            let b = name::fresh_ident("b");
            let inner = Index::flat_map(
                g.clone(),
                Index::app((**h).clone(), Index::Var(b.clone())),
            );
            let fused = Index::Lam(b, Rc::new(norm(&inner, fuel)?));
            norm_flat_map(&fused, y, fuel)
        }
        _ => Ok(Index::flat_map(g.clone(), x.clone())),
    }
}

/// Three-valued membership answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Proven,
    Refuted,
    Unknown,
}

/// Decide whether name term `m` is a member of set `x`, under the given
/// assumptions.  Kleene sets are probed by unfolding at most
/// `star_depth` layers; refutation delegates to the apartness decision
/// procedure, so the answer is three-valued.
pub fn member(
    assumptions: &Assumptions,
    m: &NameTerm,
    x: &Index,
    budget: &relations::Budget,
) -> Membership {
    let mn = match beta_normalize(m) {
        Ok(v) => v,
        Err(_) => return Membership::Unknown,
    };
    let xn = match normalize_index(x) {
        Ok(v) => v,
        Err(_) => return Membership::Unknown,
    };
    if member_proven(assumptions, &mn, &xn, budget, budget.star_depth) {
        return Membership::Proven;
    }
    // NonMembership: { m } apart from the whole set.
    let apart = relations::decide_index_apart(
        assumptions,
        &Index::Sing(mn),
        &xn,
        &IndexSort::NmSet,
        budget,
    );
    if matches!(apart, Verdict::Proven(_)) {
        return Membership::Refuted;
    }
    Membership::Unknown
}

fn member_proven(
    assumptions: &Assumptions,
    m: &NameTerm,
    x: &Index,
    budget: &relations::Budget,
    stars_left: u32,
) -> bool {
    let (_, leaves) = set_leaves(x);
    for leaf in leaves {
        match leaf {
            Index::Sing(n) => {
                if relations::name_equiv_holds(assumptions, m, &n, budget) {
                    return true;
                }
            }
            Index::Star(f, seed) => {
                // Layer 0 is the seed; each unfolding applies f once.
                let mut layer = (*seed).clone();
                for _ in 0..=stars_left {
                    if member_proven(assumptions, m, &layer, budget, 0) {
                        return true;
                    }
                    let next = Index::flat_map((*f).clone(), layer.clone());
                    layer = match normalize_index(&next) {
                        Ok(v) => v,
                        Err(_) => return false,
                    };
                }
            }
            _ => {}
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf() -> NameTerm {
        NameTerm::Lit(Name::Leaf)
    }

    fn succ_fn() -> NameTerm {
        NameTerm::lam("x", NameTerm::bin(leaf(), NameTerm::var("x")))
    }

    /// `#x.{() * x}` as a set builder.
    fn succ_builder() -> Index {
        Index::lam("x", Index::Sing(NameTerm::bin(leaf(), NameTerm::var("x"))))
    }

    fn num(k: u32) -> Name {
        let mut n = Name::Leaf;
        for _ in 0..k {
            n = Name::bin(Name::Leaf, n);
        }
        n
    }

    #[test]
    fn sort_empty_set() {
        assert_eq!(sort_index(&SortEnv::new(), &Index::Empty), Ok(IndexSort::NmSet));
    }

    #[test]
    fn sort_sep_union_of_distinct_prefixes() {
        // {'dd * ()} % {'r * ()}
        let x = Index::sing_name(Name::bin(Name::sym("dd"), Name::Leaf));
        let y = Index::sing_name(Name::bin(Name::sym("r"), Name::Leaf));
        let i = Index::apart(x, y);
        assert_eq!(sort_index(&SortEnv::new(), &i), Ok(IndexSort::NmSet));
    }

    #[test]
    fn sort_sep_union_self_overlap_fails() {
        let i = Index::apart(
            Index::sing_name(Name::Leaf),
            Index::sing_name(Name::Leaf),
        );
        match sort_index(&SortEnv::new(), &i) {
            Err(IndexSortError::ApartnessObligation { .. }) => {}
            other => panic!("expected an apartness obligation failure, got {:?}", other),
        }
    }

    #[test]
    fn reduce_map_empty() {
        let i = Index::map(succ_fn(), Index::Empty);
        match reduce_index(&i).unwrap() {
            HeadStep::Stepped { rule, result } => {
                assert_eq!(rule, "reduce-map-empty");
                assert_eq!(result, Index::Empty);
            }
            HeadStep::NoRedex => panic!("expected a step"),
        }
    }

    #[test]
    fn reduce_map_singleton() {
        let i = Index::map(succ_fn(), Index::sing_name(Name::Leaf));
        match reduce_index(&i).unwrap() {
            HeadStep::Stepped { rule, result } => {
                assert_eq!(rule, "reduce-map-single");
                assert_eq!(result, Index::sing_name(Name::bin(Name::Leaf, Name::Leaf)));
            }
            HeadStep::NoRedex => panic!("expected a step"),
        }
    }

    #[test]
    fn reduce_proj_of_pair() {
        let i = Index::proj(Side::Fst, Index::pair(Index::var("X"), Index::var("Y")));
        match reduce_index(&i).unwrap() {
            HeadStep::Stepped { rule, result } => {
                assert_eq!(rule, "reduce-proj");
                assert_eq!(result, Index::var("X"));
            }
            HeadStep::NoRedex => panic!("expected a step"),
        }
    }

    #[test]
    fn no_head_redex_is_a_normal_result() {
        assert_eq!(reduce_index(&Index::var("X")).unwrap(), HeadStep::NoRedex);
    }

    #[test]
    fn normalize_map_over_union_distributes() {
        // (#a.'t * a)[[{n1} + {n2}]] = {'t * n1} + {'t * n2}
        let tag = NameTerm::lam("a", NameTerm::bin(NameTerm::Lit(Name::sym("t")), NameTerm::var("a")));
        let i = Index::map(
            tag,
            Index::union(
                Index::sing_name(Name::sym("n1")),
                Index::sing_name(Name::sym("n2")),
            ),
        );
        let n = normalize_index(&i).unwrap();
        let (_, leaves) = set_leaves(&n);
        let mut expect = vec![
            Index::sing_name(Name::bin(Name::sym("t"), Name::sym("n1"))),
            Index::sing_name(Name::bin(Name::sym("t"), Name::sym("n2"))),
        ];
        expect.sort();
        assert_eq!(leaves, expect);
    }

    #[test]
    fn normalize_empty_set_is_fixed() {
        assert_eq!(normalize_index(&Index::Empty), Ok(Index::Empty));
    }

    #[test]
    fn normalize_flat_map_over_singleton() {
        // (#x. {x * 0-ish} % {x * 1-ish})[[{()}]]
        let body = Index::apart(
            Index::Sing(NameTerm::bin(NameTerm::var("x"), NameTerm::Lit(Name::Num(0)))),
            Index::Sing(NameTerm::bin(NameTerm::var("x"), NameTerm::Lit(Name::Num(1)))),
        );
        let i = Index::flat_map(Index::lam("x", body), Index::sing_name(Name::Leaf));
        let n = normalize_index(&i).unwrap();
        let (_, leaves) = set_leaves(&n);
        let mut expect = vec![
            Index::sing_name(Name::bin(Name::Leaf, Name::Num(0))),
            Index::sing_name(Name::bin(Name::Leaf, Name::Num(1))),
        ];
        expect.sort();
        assert_eq!(leaves, expect);

        // Enumeration oracle: the two members, and nothing else.
        let budget = relations::Budget::default();
        for k in [0u64, 1] {
            let m = NameTerm::Lit(Name::bin(Name::Leaf, Name::Num(k)));
            assert_eq!(
                member(&Assumptions::default(), &m, &i, &budget),
                Membership::Proven
            );
        }
        let outside = NameTerm::Lit(Name::bin(Name::Leaf, Name::Num(2)));
        assert_eq!(
            member(&Assumptions::default(), &outside, &i, &budget),
            Membership::Refuted
        );
    }

    #[test]
    fn member_of_empty_is_refuted() {
        let budget = relations::Budget::default();
        assert_eq!(
            member(&Assumptions::default(), &leaf(), &Index::Empty, &budget),
            Membership::Refuted
        );
    }

    #[test]
    fn member_in_star_by_unfolding() {
        // 2 is a member of Succ*[[{0}]] within three unfoldings.
        let star = Index::star(succ_builder(), Index::sing_name(num(0)));
        let budget = relations::Budget {
            star_depth: 3,
            ..relations::Budget::default()
        };
        assert_eq!(
            member(
                &Assumptions::default(),
                &NameTerm::Lit(num(2)),
                &star,
                &budget
            ),
            Membership::Proven
        );
    }

    #[test]
    fn injectivity_shapes() {
        assert!(injective_name_fn(&succ_fn()));
        assert!(injective_name_fn(&NameTerm::id()));
        // Constant function is not injective.
        assert!(!injective_name_fn(&NameTerm::lam("x", leaf())));
        // Duplicating the variable is not injective in our conservative sense.
        assert!(!injective_name_fn(&NameTerm::lam(
            "x",
            NameTerm::bin(NameTerm::var("x"), NameTerm::var("x"))
        )));
    }

    #[test]
    fn normalize_preserves_sort_on_samples() {
        let env = SortEnv::new().extended(Rc::from("X"), IndexSort::NmSet);
        let samples = [
            Index::map(succ_fn(), Index::var("X")),
            Index::union(Index::var("X"), Index::Empty),
            Index::flat_map(succ_builder(), Index::sing_name(Name::Leaf)),
            Index::star(succ_builder(), Index::var("X")),
        ];
        for i in &samples {
            let s1 = sort_index(&env, i).unwrap();
            let n = normalize_index(i).unwrap();
            let s2 = sort_index(&env, &n).unwrap();
            assert_eq!(s1, s2, "sort changed for {}", i);
        }
    }
}
