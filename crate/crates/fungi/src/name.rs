//! Literal names, the name-term lambda calculus, sorting and evaluation.
//!
//! Names are finite binary trees over terminal atoms (leaf, symbols,
//! numerals).  Name terms compute larger names from smaller ones; they
//! form a simply-typed lambda calculus whose base sort `Nm` is inhabited
//! by literal names only.  Evaluation of well-sorted closed name terms
//! always terminates, so the fuel guard here is defensive.

use std::fmt;
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

pub type Ident = Rc<str>;

/// Default step budget for name-term evaluation. Well-sorted terms
/// normalize, so exceeding this is an internal error, never a result.
pub const EVAL_FUEL: u64 = 1_000_000;

/// A literal name: a finite binary tree over terminal atoms.
///
/// `Bin` is tree-shaped data, not an associative operator:
/// `Bin(a, Bin(b, c))` and `Bin(Bin(a, b), c)` are distinct names.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Name {
    Leaf,
    Sym(Ident),
    Num(u64),
    Bin(Rc<Name>, Rc<Name>),
}

impl Name {
    pub fn sym(s: &str) -> Name {
        Name::Sym(Rc::from(s))
    }

    pub fn bin(l: Name, r: Name) -> Name {
        Name::Bin(Rc::new(l), Rc::new(r))
    }

    /// True if `sub` occurs as a (possibly improper) subtree of `self`.
    pub fn contains(&self, sub: &Name) -> bool {
        if self == sub {
            return true;
        }
        match self {
            Name::Bin(l, r) => l.contains(sub) || r.contains(sub),
            _ => false,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Name::Bin(l, r) => 1 + l.size() + r.size(),
            _ => 1,
        }
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Name::Leaf => write!(f, "()"),
            Name::Sym(s) => write!(f, "'{}", s),
            Name::Num(n) => write!(f, "{}", n),
            // `*` is right-associative in the textual syntax.
            Name::Bin(l, r) => {
                if matches!(**l, Name::Bin(_, _)) {
                    write!(f, "({}) * {}", l, r)
                } else {
                    write!(f, "{} * {}", l, r)
                }
            }
        }
    }
}

/// Terms of the name-term calculus.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum NameTerm {
    Lit(Name),
    Var(Ident),
    Bin(Rc<NameTerm>, Rc<NameTerm>),
    Lam(Ident, Rc<NameTerm>),
    App(Rc<NameTerm>, Rc<NameTerm>),
}

impl NameTerm {
    pub fn lit(n: Name) -> NameTerm {
        NameTerm::Lit(n)
    }

    pub fn var(a: &str) -> NameTerm {
        NameTerm::Var(Rc::from(a))
    }

    pub fn bin(l: NameTerm, r: NameTerm) -> NameTerm {
        NameTerm::Bin(Rc::new(l), Rc::new(r))
    }

    pub fn lam(a: &str, body: NameTerm) -> NameTerm {
        NameTerm::Lam(Rc::from(a), Rc::new(body))
    }

    pub fn app(f: NameTerm, arg: NameTerm) -> NameTerm {
        NameTerm::App(Rc::new(f), Rc::new(arg))
    }

    /// The identity name function.
    pub fn id() -> NameTerm {
        NameTerm::lam("a", NameTerm::var("a"))
    }

    /// A value is a literal name or a lambda.
    pub fn is_value(&self) -> bool {
        matches!(self, NameTerm::Lit(_) | NameTerm::Lam(_, _))
    }

    /// Extract the literal name from a `Lit` value.
    pub fn as_name(&self) -> Option<&Name> {
        match self {
            NameTerm::Lit(n) => Some(n),
            _ => None,
        }
    }

    pub fn free_vars(&self) -> Vec<Ident> {
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Ident>, out: &mut Vec<Ident>) {
        match self {
            NameTerm::Lit(_) => {}
            NameTerm::Var(a) => {
                if !bound.contains(a) && !out.contains(a) {
                    out.push(a.clone());
                }
            }
            NameTerm::Bin(l, r) | NameTerm::App(l, r) => {
                l.collect_free(bound, out);
                r.collect_free(bound, out);
            }
            NameTerm::Lam(a, body) => {
                bound.push(a.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// All symbol/numeral atoms occurring in literal names of this term.
    pub fn atoms(&self, out: &mut Vec<Name>) {
        match self {
            NameTerm::Lit(n) => collect_atoms(n, out),
            NameTerm::Var(_) => {}
            NameTerm::Bin(l, r) | NameTerm::App(l, r) => {
                l.atoms(out);
                r.atoms(out);
            }
            NameTerm::Lam(_, body) => body.atoms(out),
        }
    }
}

pub fn collect_atoms(n: &Name, out: &mut Vec<Name>) {
    match n {
        Name::Leaf => {}
        Name::Sym(_) | Name::Num(_) => {
            if !out.contains(n) {
                out.push(n.clone());
            }
        }
        Name::Bin(l, r) => {
            collect_atoms(l, out);
            collect_atoms(r, out);
        }
    }
}

impl fmt::Debug for NameTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for NameTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NameTerm::Lit(n) => write!(f, "{}", n),
            NameTerm::Var(a) => write!(f, "{}", a),
            NameTerm::Bin(l, r) => {
                let lp = matches!(**l, NameTerm::Bin(_, _) | NameTerm::Lam(_, _));
                let rp = matches!(**r, NameTerm::Lam(_, _));
                match (lp, rp) {
                    (true, true) => write!(f, "({}) * ({})", l, r),
                    (true, false) => write!(f, "({}) * {}", l, r),
                    (false, true) => write!(f, "{} * ({})", l, r),
                    (false, false) => write!(f, "{} * {}", l, r),
                }
            }
            NameTerm::Lam(a, body) => write!(f, "#{}.{}", a, body),
            NameTerm::App(g, arg) => {
                let gp = matches!(**g, NameTerm::Lam(_, _) | NameTerm::Bin(_, _));
                let ap = !matches!(**arg, NameTerm::Lit(_) | NameTerm::Var(_));
                match (gp, ap) {
                    (true, true) => write!(f, "({}) ({})", g, arg),
                    (true, false) => write!(f, "({}) {}", g, arg),
                    (false, true) => write!(f, "{} ({})", g, arg),
                    (false, false) => write!(f, "{} {}", g, arg),
                }
            }
        }
    }
}

/// Sorts classifying name terms: `Nm` for literal names, arrows for
/// name functions.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum NameSort {
    Nm,
    Arrow(Rc<NameSort>, Rc<NameSort>),
}

impl NameSort {
    pub fn arrow(dom: NameSort, cod: NameSort) -> NameSort {
        NameSort::Arrow(Rc::new(dom), Rc::new(cod))
    }

    /// `Nm -> Nm`, the sort of namespaces.
    pub fn nm_to_nm() -> NameSort {
        NameSort::arrow(NameSort::Nm, NameSort::Nm)
    }
}

impl fmt::Debug for NameSort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for NameSort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NameSort::Nm => write!(f, "Nm"),
            NameSort::Arrow(d, c) => {
                if matches!(**d, NameSort::Arrow(_, _)) {
                    write!(f, "({}) -> {}", d, c)
                } else {
                    write!(f, "{} -> {}", d, c)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SortError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("operand of `*` has sort {0}, expected Nm")]
    BinOperand(NameSort),
    #[error("applied a term of sort {0}, which is not an arrow")]
    NotAnArrow(NameSort),
    #[error("argument has sort {got}, function expects {expected}")]
    ArgMismatch { expected: NameSort, got: NameSort },
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EvalError {
    /// Only reachable on ill-sorted input.
    #[error("stuck term: {0}")]
    Stuck(String),
    /// The defensive fuel guard tripped; distinct from a stuck term.
    #[error("evaluation fuel exhausted (internal error: well-sorted terms normalize)")]
    FuelExhausted,
}

/// Sorting contexts map identifiers to sorts. Later bindings shadow
/// earlier ones.
#[derive(Clone, Default)]
pub struct SortCtx {
    entries: Vec<(Ident, NameSort)>,
}

impl SortCtx {
    pub fn new() -> SortCtx {
        SortCtx::default()
    }

    pub fn lookup(&self, a: &str) -> Option<&NameSort> {
        self.entries.iter().rev().find(|(b, _)| &**b == a).map(|(_, s)| s)
    }

    pub fn extended(&self, a: Ident, sort: NameSort) -> SortCtx {
        let mut entries = self.entries.clone();
        entries.push((a, sort));
        SortCtx { entries }
    }
}

/// Assign the unique sort of `m` under `ctx`; syntax-directed.
pub fn sort_name_term(ctx: &SortCtx, m: &NameTerm) -> Result<NameSort, SortError> {
    match m {
        NameTerm::Lit(_) => Ok(NameSort::Nm),
        NameTerm::Var(a) => ctx
            .lookup(a)
            .cloned()
            .ok_or_else(|| SortError::Unbound(a.to_string())),
        NameTerm::Bin(l, r) => {
            let sl = sort_name_term(ctx, l)?;
            if sl != NameSort::Nm {
                return Err(SortError::BinOperand(sl));
            }
            let sr = sort_name_term(ctx, r)?;
            if sr != NameSort::Nm {
                return Err(SortError::BinOperand(sr));
            }
            Ok(NameSort::Nm)
        }
        NameTerm::Lam(a, body) => {
            // The binder's domain sort is not annotated in the term
            // language; infer it from use, trying Nm first.
            for dom in [NameSort::Nm, NameSort::nm_to_nm()] {
                let inner = ctx.extended(a.clone(), dom.clone());
                if let Ok(cod) = sort_name_term(&inner, body) {
                    return Ok(NameSort::arrow(dom, cod));
                }
            }
            // Report the error from the Nm attempt.
            let inner = ctx.extended(a.clone(), NameSort::Nm);
            let cod = sort_name_term(&inner, body)?;
            Ok(NameSort::arrow(NameSort::Nm, cod))
        }
        NameTerm::App(g, arg) => {
            // Lambda heads take their domain from the argument, so
            // unannotated binders sort deterministically.
            if let NameTerm::Lam(a, body) = &**g {
                let sa = sort_name_term(ctx, arg)?;
                let inner = ctx.extended(a.clone(), sa);
                return sort_name_term(&inner, body);
            }
            let sg = sort_name_term(ctx, g)?;
            match sg {
                NameSort::Arrow(dom, cod) => {
                    let sa = sort_name_term(ctx, arg)?;
                    if sa != *dom {
                        return Err(SortError::ArgMismatch {
                            expected: (*dom).clone(),
                            got: sa,
                        });
                    }
                    Ok((*cod).clone())
                }
                other => Err(SortError::NotAnArrow(other)),
            }
        }
    }
}

/// Sort a name term whose lambda binders have known domain sorts.
/// Convenience wrapper used when the expected sort is known.
pub fn check_name_sort(ctx: &SortCtx, m: &NameTerm, expected: &NameSort) -> Result<(), SortError> {
    match (m, expected) {
        (NameTerm::Lam(a, body), NameSort::Arrow(dom, cod)) => {
            let inner = ctx.extended(a.clone(), (**dom).clone());
            check_name_sort(&inner, body, cod)
        }
        _ => {
            let got = sort_name_term(ctx, m)?;
            if &got == expected {
                Ok(())
            } else {
                Err(SortError::ArgMismatch {
                    expected: expected.clone(),
                    got,
                })
            }
        }
    }
}

static FRESH_COUNTER: AtomicU64 = AtomicU64::new(0);

/// A fresh identifier that cannot collide with parsed source names
/// (the lexer rejects `!`).
pub fn fresh_ident(hint: &str) -> Ident {
    let n = FRESH_COUNTER.fetch_add(1, Ordering::Relaxed);
    Rc::from(format!("{}!{}", hint, n).as_str())
}

/// Capture-avoiding substitution `[v/a]m`, renaming binders as needed.
pub fn subst(m: &NameTerm, a: &str, v: &NameTerm) -> NameTerm {
    match m {
        NameTerm::Lit(_) => m.clone(),
        NameTerm::Var(b) => {
            if &**b == a {
                v.clone()
            } else {
                m.clone()
            }
        }
        NameTerm::Bin(l, r) => NameTerm::bin(subst(l, a, v), subst(r, a, v)),
        NameTerm::App(g, arg) => NameTerm::app(subst(g, a, v), subst(arg, a, v)),
        NameTerm::Lam(b, body) => {
            if &**b == a {
                m.clone()
            } else if v.free_vars().contains(b) {
                let fresh = fresh_ident(b);
                let renamed = subst(body, b, &NameTerm::Var(fresh.clone()));
                NameTerm::Lam(fresh, Rc::new(subst(&renamed, a, v)))
            } else {
                NameTerm::Lam(b.clone(), Rc::new(subst(body, a, v)))
            }
        }
    }
}

/// Big-step evaluation of a closed name term to a value, with the
/// default fuel guard.
pub fn eval_name_term(m: &NameTerm) -> Result<NameTerm, EvalError> {
    let mut fuel = EVAL_FUEL;
    eval_fuel(m, &mut fuel)
}

fn eval_fuel(m: &NameTerm, fuel: &mut u64) -> Result<NameTerm, EvalError> {
    if *fuel == 0 {
        return Err(EvalError::FuelExhausted);
    }
    *fuel -= 1;
    match m {
        NameTerm::Lit(_) | NameTerm::Lam(_, _) => Ok(m.clone()),
        NameTerm::Var(a) => Err(EvalError::Stuck(format!("free variable `{}`", a))),
        NameTerm::Bin(l, r) => {
            let vl = eval_fuel(l, fuel)?;
            let vr = eval_fuel(r, fuel)?;
            match (vl.as_name(), vr.as_name()) {
                (Some(nl), Some(nr)) => Ok(NameTerm::Lit(Name::bin(nl.clone(), nr.clone()))),
                _ => Err(EvalError::Stuck(format!("`*` on non-name operands in {}", m))),
            }
        }
        NameTerm::App(g, arg) => {
            let vg = eval_fuel(g, fuel)?;
            let va = eval_fuel(arg, fuel)?;
            match vg {
                NameTerm::Lam(a, body) => {
                    let applied = subst(&body, &a, &va);
                    eval_fuel(&applied, fuel)
                }
                other => Err(EvalError::Stuck(format!("applied non-function {}", other))),
            }
        }
    }
}

/// Evaluate a closed name term expected to denote a literal name.
pub fn eval_to_name(m: &NameTerm) -> Result<Name, EvalError> {
    match eval_name_term(m)? {
        NameTerm::Lit(n) => Ok(n),
        other => Err(EvalError::Stuck(format!("expected a literal name, got {}", other))),
    }
}

/// Apply a namespace (a closed name function) to a literal name.
pub fn apply_namespace(ns: &NameTerm, n: &Name) -> Result<Name, EvalError> {
    eval_to_name(&NameTerm::app(ns.clone(), NameTerm::Lit(n.clone())))
}

/// Compose namespaces: `compose(m1, m2)` maps `a` to `m1 (m2 a)`.
pub fn compose_namespaces(m1: &NameTerm, m2: &NameTerm) -> NameTerm {
    let a = fresh_ident("a");
    NameTerm::Lam(
        a.clone(),
        Rc::new(NameTerm::app(
            m1.clone(),
            NameTerm::app(m2.clone(), NameTerm::Var(a)),
        )),
    )
}

/// Full beta-normalization, reducing under binders. Total on
/// well-sorted terms; the fuel guard is defensive.
pub fn beta_normalize(m: &NameTerm) -> Result<NameTerm, EvalError> {
    let mut fuel = EVAL_FUEL;
    normalize_fuel(m, &mut fuel)
}

fn normalize_fuel(m: &NameTerm, fuel: &mut u64) -> Result<NameTerm, EvalError> {
    if *fuel == 0 {
        return Err(EvalError::FuelExhausted);
    }
    *fuel -= 1;
    match m {
        NameTerm::Lit(_) | NameTerm::Var(_) => Ok(m.clone()),
        NameTerm::Bin(l, r) => {
            let nl = normalize_fuel(l, fuel)?;
            let nr = normalize_fuel(r, fuel)?;
            match (nl.as_name(), nr.as_name()) {
                (Some(a), Some(b)) => Ok(NameTerm::Lit(Name::bin(a.clone(), b.clone()))),
                _ => Ok(NameTerm::bin(nl, nr)),
            }
        }
        NameTerm::Lam(a, body) => Ok(NameTerm::Lam(a.clone(), Rc::new(normalize_fuel(body, fuel)?))),
        NameTerm::App(g, arg) => {
            let ng = normalize_fuel(g, fuel)?;
            let na = normalize_fuel(arg, fuel)?;
            match ng {
                NameTerm::Lam(a, body) => normalize_fuel(&subst(&body, &a, &na), fuel),
                _ => Ok(NameTerm::app(ng, na)),
            }
        }
    }
}

/// Alpha-equivalence of name terms.
pub fn alpha_eq(m1: &NameTerm, m2: &NameTerm) -> bool {
    fn go(m1: &NameTerm, m2: &NameTerm, pairs: &mut Vec<(Ident, Ident)>) -> bool {
        match (m1, m2) {
            (NameTerm::Lit(a), NameTerm::Lit(b)) => a == b,
            (NameTerm::Var(a), NameTerm::Var(b)) => {
                for (x, y) in pairs.iter().rev() {
                    let hit_l = x == a;
                    let hit_r = y == b;
                    if hit_l || hit_r {
                        return hit_l && hit_r;
                    }
                }
                a == b
            }
            (NameTerm::Bin(a1, a2), NameTerm::Bin(b1, b2))
            | (NameTerm::App(a1, a2), NameTerm::App(b1, b2)) => {
                go(a1, b1, pairs) && go(a2, b2, pairs)
            }
            (NameTerm::Lam(a, ba), NameTerm::Lam(b, bb)) => {
                pairs.push((a.clone(), b.clone()));
                let r = go(ba, bb, pairs);
                pairs.pop();
                r
            }
            _ => false,
        }
    }
    go(m1, m2, &mut Vec::new())
}

/// Convertibility: alpha-equivalence of beta-normal forms. Both terms
/// must be well-sorted at a common sort.
pub fn name_convertible(m1: &NameTerm, m2: &NameTerm) -> Result<bool, EvalError> {
    let n1 = beta_normalize(m1)?;
    let n2 = beta_normalize(m2)?;
    Ok(alpha_eq(&n1, &n2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf() -> NameTerm {
        NameTerm::Lit(Name::Leaf)
    }

    /// Independent oracle: normal-order reduction via one-step
    /// rewriting, unrelated to the evaluator's recursion scheme.
    fn oracle_step(m: &NameTerm) -> Option<NameTerm> {
        match m {
            NameTerm::Lit(_) | NameTerm::Var(_) => None,
            NameTerm::App(g, arg) => {
                if let NameTerm::Lam(a, body) = &**g {
                    return Some(subst(body, a, arg));
                }
                if let Some(g2) = oracle_step(g) {
                    return Some(NameTerm::app(g2, (**arg).clone()));
                }
                oracle_step(arg).map(|a2| NameTerm::app((**g).clone(), a2))
            }
            NameTerm::Bin(l, r) => {
                if let Some(l2) = oracle_step(l) {
                    return Some(NameTerm::bin(l2, (**r).clone()));
                }
                if let Some(r2) = oracle_step(r) {
                    return Some(NameTerm::bin((**l).clone(), r2));
                }
                match (l.as_name(), r.as_name()) {
                    (Some(a), Some(b)) => {
                        Some(NameTerm::Lit(Name::bin(a.clone(), b.clone())))
                    }
                    _ => None,
                }
            }
            NameTerm::Lam(a, body) => {
                oracle_step(body).map(|b2| NameTerm::Lam(a.clone(), Rc::new(b2)))
            }
        }
    }

    fn oracle_normalize(m: &NameTerm) -> NameTerm {
        let mut cur = m.clone();
        for _ in 0..10_000 {
            match oracle_step(&cur) {
                Some(next) => cur = next,
                None => return cur,
            }
        }
        panic!("oracle failed to normalize {}", m);
    }

    #[test]
    fn sort_literal_leaf_is_nm() {
        let ctx = SortCtx::new();
        assert_eq!(sort_name_term(&ctx, &leaf()), Ok(NameSort::Nm));
    }

    #[test]
    fn sort_succ_is_nm_arrow_nm() {
        // Succ = #x. () * x
        let succ = NameTerm::lam("x", NameTerm::bin(leaf(), NameTerm::var("x")));
        assert_eq!(
            sort_name_term(&SortCtx::new(), &succ),
            Ok(NameSort::nm_to_nm())
        );
    }

    #[test]
    fn sort_bin_of_lambda_fails() {
        let m = NameTerm::bin(NameTerm::lam("x", NameTerm::var("x")), leaf());
        assert!(sort_name_term(&SortCtx::new(), &m).is_err());
    }

    #[test]
    fn sort_unbound_var_fails() {
        assert_eq!(
            sort_name_term(&SortCtx::new(), &NameTerm::var("z")),
            Err(SortError::Unbound("z".to_string()))
        );
    }

    #[test]
    fn eval_single_beta_step() {
        let m = NameTerm::app(
            NameTerm::lam("x", NameTerm::bin(leaf(), NameTerm::var("x"))),
            leaf(),
        );
        assert_eq!(
            eval_name_term(&m),
            Ok(NameTerm::Lit(Name::bin(Name::Leaf, Name::Leaf)))
        );
    }

    #[test]
    fn eval_bin_of_literals() {
        let m = NameTerm::bin(
            NameTerm::Lit(Name::sym("t")),
            NameTerm::Lit(Name::Num(3)),
        );
        assert_eq!(
            eval_name_term(&m),
            Ok(NameTerm::Lit(Name::bin(Name::sym("t"), Name::Num(3))))
        );
    }

    #[test]
    fn eval_curried_application_matches_oracle() {
        // ((#f.#x. f x) (#y. y * ())) 'a
        let m = NameTerm::app(
            NameTerm::app(
                NameTerm::lam("f", NameTerm::lam("x", NameTerm::app(NameTerm::var("f"), NameTerm::var("x")))),
                NameTerm::lam("y", NameTerm::bin(NameTerm::var("y"), leaf())),
            ),
            NameTerm::Lit(Name::sym("a")),
        );
        let expected = NameTerm::Lit(Name::bin(Name::sym("a"), Name::Leaf));
        assert_eq!(oracle_normalize(&m), expected);
        assert_eq!(eval_name_term(&m), Ok(expected));
    }

    #[test]
    fn eval_reports_stuck_on_ill_sorted() {
        // Applying a literal name: ill-sorted, must be Stuck, not fuel.
        let m = NameTerm::app(leaf(), leaf());
        assert!(matches!(eval_name_term(&m), Err(EvalError::Stuck(_))));
    }

    #[test]
    fn convertible_alpha() {
        let m1 = NameTerm::lam("a", NameTerm::var("a"));
        let m2 = NameTerm::lam("b", NameTerm::var("b"));
        assert_eq!(name_convertible(&m1, &m2), Ok(true));
    }

    #[test]
    fn convertible_beta() {
        let m1 = NameTerm::app(NameTerm::lam("x", NameTerm::var("x")), leaf());
        assert_eq!(name_convertible(&m1, &leaf()), Ok(true));
    }

    #[test]
    fn not_convertible_mirrored_bodies() {
        let m1 = NameTerm::lam("x", NameTerm::bin(NameTerm::var("x"), leaf()));
        let m2 = NameTerm::lam("x", NameTerm::bin(leaf(), NameTerm::var("x")));
        assert_eq!(name_convertible(&m1, &m2), Ok(false));
    }

    #[test]
    fn subst_avoids_capture() {
        // [y/x](#y. x * y) must not capture the substituted y.
        let m = NameTerm::lam("y", NameTerm::bin(NameTerm::var("x"), NameTerm::var("y")));
        let r = subst(&m, "x", &NameTerm::var("y"));
        if let NameTerm::Lam(b, body) = &r {
            assert_ne!(&**b, "y");
            assert!(alpha_eq(
                &NameTerm::Lam(b.clone(), body.clone()),
                &r
            ));
            // The free y stays free.
            assert!(r.free_vars().iter().any(|v| &**v == "y"));
        } else {
            panic!("expected a lambda");
        }
    }

    #[test]
    fn values_are_eval_fixed_points() {
        let vals = [
            leaf(),
            NameTerm::Lit(Name::bin(Name::sym("a"), Name::Num(7))),
            NameTerm::lam("x", NameTerm::bin(NameTerm::var("x"), leaf())),
        ];
        for v in &vals {
            assert_eq!(eval_name_term(v), Ok(v.clone()));
        }
    }

    #[test]
    fn display_parse_shapes() {
        let n = Name::bin(Name::bin(Name::sym("a"), Name::Leaf), Name::Num(2));
        assert_eq!(n.to_string(), "('a * ()) * 2");
        let m = NameTerm::lam("x", NameTerm::bin(leaf(), NameTerm::var("x")));
        assert_eq!(m.to_string(), "#x.() * x");
    }
}
