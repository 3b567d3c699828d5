//! Extraction of precise read/write sets from evaluation derivations,
//! global-uniqueness certification, and the dynamic subject-reduction
//! harness.

use std::collections::BTreeSet;

use crate::ast::{Program, Val, ValKind};
use crate::dynamics::{Derivation, Store, StoreValue};
use crate::index::{self, Index, IndexArg, IndexSort, Membership};
use crate::name::{self, Name, NameTerm};
use crate::relations::{Assumptions, Budget};
use crate::types::{CompType, EffType, Effect, Prop, ValueType};

/// Why a derivation's effects are not precise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conflict {
    pub location: Name,
    pub path1: String,
    pub path2: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Precise,
    Imprecise(Conflict),
}

impl Status {
    pub fn is_precise(&self) -> bool {
        matches!(self, Status::Precise)
    }
}

/// The dynamic read and write sets of a derivation, plus whether all
/// sibling write sets were pairwise disjoint (and no write hit a
/// location that predates the run).
#[derive(Clone, Debug)]
pub struct EffectReport {
    pub reads: BTreeSet<Name>,
    pub writes: BTreeSet<Name>,
    pub status: Status,
}

impl EffectReport {
    fn empty() -> EffectReport {
        EffectReport {
            reads: BTreeSet::new(),
            writes: BTreeSet::new(),
            status: Status::Precise,
        }
    }
}

/// Structural recursion over the derivation: let/app union reads and
/// take separating union of writes; ref/thunk contribute their
/// location to writes; get its location to reads; force the forced
/// location plus the forced subderivation's effects.  Reads use the
/// plain-union form `R1 + R2`.
pub fn precise_effects(d: &Derivation) -> EffectReport {
    let mut report = go(d, &mut String::new());
    // A write onto a location that existed before the whole run is an
    // overwrite even though no sibling wrote it.
    if report.status.is_precise() {
        for (i, w) in written_locations(d).iter().enumerate() {
            if d.store_in.contains(w) {
                report.status = Status::Imprecise(Conflict {
                    location: w.clone(),
                    path1: "(initial store)".to_string(),
                    path2: format!("(write {})", i),
                });
                break;
            }
        }
    }
    report
}

fn written_locations(d: &Derivation) -> Vec<Name> {
    let mut out = Vec::new();
    collect_writes(d, &mut out);
    out
}

fn collect_writes(d: &Derivation, out: &mut Vec<Name>) {
    if matches!(d.rule, "dyn-ref" | "dyn-thunk") {
        if let Some(p) = result_pointer(d) {
            out.push(p);
        }
    }
    for c in &d.children {
        collect_writes(c, out);
    }
}

fn result_pointer(d: &Derivation) -> Option<Name> {
    match &d.result.kind {
        crate::ast::ExprKind::Ret(v) => match &v.kind {
            ValKind::RefPtr(p) | ValKind::ThunkPtr(p) => Some(p.clone()),
            _ => None,
        },
        _ => None,
    }
}

fn forced_pointer(d: &Derivation) -> Option<Name> {
    match &d.expr.kind {
        crate::ast::ExprKind::Force(v) => match &v.kind {
            ValKind::ThunkPtr(p) => Some(p.clone()),
            _ => None,
        },
        _ => None,
    }
}

fn read_pointer(d: &Derivation) -> Option<Name> {
    match &d.expr.kind {
        crate::ast::ExprKind::Get(v) => match &v.kind {
            ValKind::RefPtr(p) => Some(p.clone()),
            _ => None,
        },
        _ => None,
    }
}

fn go(d: &Derivation, path: &mut String) -> EffectReport {
    let mut children = Vec::with_capacity(d.children.len());
    for (i, c) in d.children.iter().enumerate() {
        let len = path.len();
        if !path.is_empty() {
            path.push('.');
        }
        path.push_str(&i.to_string());
        children.push((go(c, path), path.clone()));
        path.truncate(len);
    }
    // Propagate the first imprecision found in any child.
    for (c, _) in &children {
        if let Status::Imprecise(conf) = &c.status {
            let mut r = EffectReport::empty();
            r.status = Status::Imprecise(conf.clone());
            return r;
        }
    }
    match d.rule {
        "dyn-term" | "dyn-name-app" | "dyn-prim" => EffectReport::empty(),
        "dyn-ref" | "dyn-thunk" => {
            let mut r = EffectReport::empty();
            if let Some(p) = result_pointer(d) {
                r.writes.insert(p);
            }
            r
        }
        "dyn-get" => {
            let mut r = EffectReport::empty();
            if let Some(p) = read_pointer(d) {
                r.reads.insert(p);
            }
            r
        }
        "dyn-force" => {
            let (mut inner, _) = children
                .into_iter()
                .next()
                .unwrap_or_else(|| (EffectReport::empty(), String::new()));
            if let Some(q) = forced_pointer(d) {
                inner.reads.insert(q);
            }
            inner
        }
        "dyn-let" | "dyn-app" => {
            let mut it = children.into_iter();
            let (r1, p1) = it.next().unwrap_or((EffectReport::empty(), String::new()));
            let (r2, p2) = it.next().unwrap_or((EffectReport::empty(), String::new()));
            let mut out = EffectReport::empty();
            out.reads = r1.reads.union(&r2.reads).cloned().collect();
            if let Some(conflict) = r1.writes.intersection(&r2.writes).next() {
                out.status = Status::Imprecise(Conflict {
                    location: conflict.clone(),
                    path1: p1,
                    path2: p2,
                });
                return out;
            }
            out.writes = r1.writes.union(&r2.writes).cloned().collect();
            out
        }
        // Single-premise congruence rules are effect-transparent.
        _ => children
            .into_iter()
            .next()
            .map(|(r, _)| r)
            .unwrap_or_else(EffectReport::empty),
    }
}

/// Effect monotonicity: every node's report equals the union of its
/// children's plus its own local contribution.  Used as a structural
/// self-check over recorded trees.
pub fn check_monotone(d: &Derivation) -> bool {
    fn local(d: &Derivation) -> (BTreeSet<Name>, BTreeSet<Name>) {
        let mut reads = BTreeSet::new();
        let mut writes = BTreeSet::new();
        match d.rule {
            "dyn-ref" | "dyn-thunk" => {
                if let Some(p) = result_pointer(d) {
                    writes.insert(p);
                }
            }
            "dyn-get" => {
                if let Some(p) = read_pointer(d) {
                    reads.insert(p);
                }
            }
            "dyn-force" => {
                if let Some(q) = forced_pointer(d) {
                    reads.insert(q);
                }
            }
            _ => {}
        }
        (reads, writes)
    }
    fn walk(d: &Derivation) -> Option<(BTreeSet<Name>, BTreeSet<Name>)> {
        let (mut reads, mut writes) = local(d);
        for c in &d.children {
            let (r, w) = walk(c)?;
            reads.extend(r);
            writes.extend(w);
        }
        let report = precise_effects(d);
        if report.status.is_precise() && (report.reads != reads || report.writes != writes) {
            return None;
        }
        Some((reads, writes))
    }
    walk(d).is_some()
}

// ---------------------------------------------------------------------------
// Runtime value/type conformance
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditFailure {
    pub what: String,
    pub name: Option<Name>,
    pub static_set: Option<String>,
    pub path: Option<String>,
}

impl std::fmt::Display for AuditFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.what)?;
        if let Some(n) = &self.name {
            write!(f, " (name {})", n)?;
        }
        if let Some(s) = &self.static_set {
            write!(f, " (static set {})", s)?;
        }
        if let Some(p) = &self.path {
            write!(f, " (at {})", p)?;
        }
        Ok(())
    }
}

fn fail(what: impl Into<String>) -> AuditFailure {
    AuditFailure {
        what: what.into(),
        name: None,
        static_set: None,
        path: None,
    }
}

fn ground_member(n: &Name, x: &Index, budget: &Budget) -> Membership {
    index::member(
        &Assumptions::default(),
        &NameTerm::Lit(n.clone()),
        x,
        budget,
    )
}

/// Check a runtime (erased) value against a ground value type,
/// following store pointers structurally.
pub fn rt_check(
    prog: &Program,
    store: &Store,
    v: &Val,
    t: &ValueType,
    budget: &Budget,
    depth: u32,
) -> Result<(), AuditFailure> {
    if depth > 64 {
        return Err(fail("value/type check exceeded depth budget"));
    }
    match (&v.kind, t) {
        (ValKind::Unit, ValueType::Unit) => Ok(()),
        (ValKind::Nat(_), ValueType::TCon(d)) if &**d == "Nat" => Ok(()),
        (ValKind::Bool(_), ValueType::TCon(d)) if &**d == "Bool" => Ok(()),
        (ValKind::Pair(a, b), ValueType::Prod(ta, tb)) => {
            rt_check(prog, store, a, ta, budget, depth + 1)?;
            rt_check(prog, store, b, tb, budget, depth + 1)
        }
        (ValKind::Inj(1, a), ValueType::Sum(ta, _)) => {
            rt_check(prog, store, a, ta, budget, depth + 1)
        }
        (ValKind::Inj(2, a), ValueType::Sum(_, tb)) => {
            rt_check(prog, store, a, tb, budget, depth + 1)
        }
        (ValKind::Name(n), ValueType::Nm(x)) => match ground_member(n, x, budget) {
            Membership::Proven => Ok(()),
            _ => Err(AuditFailure {
                what: "name not a member of its static set".into(),
                name: Some(n.clone()),
                static_set: Some(x.to_string()),
                path: None,
            }),
        },
        (ValKind::NameFn(m), ValueType::NmFn(expected)) => {
            match name::name_convertible(m, expected) {
                Ok(true) => Ok(()),
                _ => Err(fail(format!(
                    "name function {} not convertible to {}",
                    m, expected
                ))),
            }
        }
        (ValKind::RefPtr(p), ValueType::RefT(x, inner)) => {
            match ground_member(p, x, budget) {
                Membership::Proven => {}
                _ => {
                    return Err(AuditFailure {
                        what: "reference pointer outside its static set".into(),
                        name: Some(p.clone()),
                        static_set: Some(x.to_string()),
                        path: None,
                    })
                }
            }
            match store.lookup(p) {
                Some(StoreValue::Data(w)) => {
                    let w = w.clone();
                    rt_check(prog, store, &w, inner, budget, depth + 1)
                }
                Some(StoreValue::Susp(_, _)) => {
                    Err(fail(format!("pointer {} holds a thunk, not data", p)))
                }
                None => Err(fail(format!("dangling reference pointer {}", p))),
            }
        }
        (ValKind::ThunkPtr(p), ValueType::ThkT(x, _)) => {
            match ground_member(p, x, budget) {
                Membership::Proven => {}
                _ => {
                    return Err(AuditFailure {
                        what: "thunk pointer outside its static set".into(),
                        name: Some(p.clone()),
                        static_set: Some(x.to_string()),
                        path: None,
                    })
                }
            }
            match store.lookup(p) {
                Some(StoreValue::Susp(_, _)) => Ok(()),
                Some(StoreValue::Data(_)) => {
                    Err(fail(format!("pointer {} holds data, not a thunk", p)))
                }
                None => Err(fail(format!("dangling thunk pointer {}", p))),
            }
        }
        (ValKind::Ctor(c, _, args), _) => {
            let (_, ctor) = prog
                .ctor(c)
                .ok_or_else(|| fail(format!("unknown constructor `{}`", c)))?;
            let expected = spine_indices(t);
            let pattern = spine_indices(&ctor.result);
            if expected.len() != pattern.len() {
                return Err(fail(format!(
                    "constructor `{}` used at the wrong index arity",
                    c
                )));
            }
            let assign = solve_ctor_indices(ctor, &pattern, &expected, args, budget)
                .ok_or_else(|| {
                    fail(format!("no ground instantiation of `{}` fits type {}", c, t))
                })?;
            for (_, _, prop) in &ctor.quant {
                let p = subst_all_prop(prop, &assign);
                if !ground_prop_holds(&p, budget) {
                    return Err(fail(format!(
                        "constructor `{}` constraint {} fails at ground instantiation",
                        c, p
                    )));
                }
            }
            for (arg, ty) in args.iter().zip(ctor.args.iter()) {
                let ty = subst_all_vt(ty, &assign);
                rt_check(prog, store, arg, &ty, budget, depth + 1)?;
            }
            Ok(())
        }
        _ => Err(fail(format!("value does not match type {}", t))),
    }
}

fn spine_indices(t: &ValueType) -> Vec<Index> {
    fn walk(t: &ValueType, out: &mut Vec<Index>) {
        if let ValueType::IdxApp(h, i) = t {
            walk(h, out);
            out.push(i.clone());
        }
    }
    let mut out = Vec::new();
    walk(t, &mut out);
    out
}

type Assign = Vec<(String, Index)>;

fn subst_all_vt(t: &ValueType, assign: &Assign) -> ValueType {
    let mut out = t.clone();
    for (a, i) in assign {
        out = crate::types::subst_vt(&out, a, &IndexArg::Idx(i.clone()));
    }
    out
}

fn subst_all_prop(p: &Prop, assign: &Assign) -> Prop {
    let mut out = p.clone();
    for (a, i) in assign {
        out = out.subst(a, &IndexArg::Idx(i.clone()));
    }
    out
}

fn subst_all_idx(x: &Index, assign: &Assign) -> Index {
    let mut out = x.clone();
    for (a, i) in assign {
        out = index::subst_index(&out, a, &IndexArg::Idx(i.clone()));
    }
    out
}

fn ground_prop_holds(p: &Prop, budget: &Budget) -> bool {
    match p {
        Prop::Tt => true,
        Prop::Conj(a, b) => ground_prop_holds(a, budget) && ground_prop_holds(b, budget),
        Prop::Apart(i, j, _) => {
            crate::relations::index_apart_holds(&Assumptions::default(), i, j, budget)
        }
        Prop::Equiv(i, j, _) => {
            crate::relations::index_equiv_holds(&Assumptions::default(), i, j, budget)
        }
    }
}

/// Find ground indices for a constructor's quantified variables so that
/// its result type matches the expected ground indices.  Name-typed
/// arguments drive singleton choices; set-shaped patterns with one
/// unknown are solved by set difference.
fn solve_ctor_indices(
    ctor: &crate::ast::CtorDecl,
    pattern: &[Index],
    expected: &[Index],
    args: &[Val],
    budget: &Budget,
) -> Option<Assign> {
    let mut assign: Assign = Vec::new();
    let quant_names: Vec<String> = ctor.quant.iter().map(|(a, _, _)| a.to_string()).collect();
    let is_quant = |a: &str| quant_names.iter().any(|q| q == a);
    let lookup = |assign: &Assign, a: &str| -> Option<Index> {
        assign.iter().find(|(b, _)| b == a).map(|(_, i)| i.clone())
    };

    // Pass 1: bare variables in the result pattern bind directly.
    for (pat, exp) in pattern.iter().zip(expected.iter()) {
        if let Index::Var(a) = pat {
            if is_quant(a) && lookup(&assign, a).is_none() {
                assign.push((a.to_string(), exp.clone()));
            }
        }
    }
    // Pass 2: singleton-typed name arguments fix their variables.
    for (arg, ty) in args.iter().zip(ctor.args.iter()) {
        if let (ValKind::Name(n), ValueType::Nm(ix)) = (&arg.kind, ty) {
            if let Index::Var(a) = ix {
                if is_quant(a) && lookup(&assign, a).is_none() {
                    assign.push((a.to_string(), Index::sing_name(n.clone())));
                }
            }
        }
    }
    // Pass 3: separating/union patterns with exactly one unknown leaf
    // solve by ground set difference.
    for (pat, exp) in pattern.iter().zip(expected.iter()) {
        let (_, leaves) = index::set_leaves(pat);
        if leaves.len() < 2 {
            continue;
        }
        let mut unknown: Option<String> = None;
        let mut known: Vec<Index> = Vec::new();
        let mut ok = true;
        for leaf in &leaves {
            match leaf {
                Index::Var(a) if is_quant(a) => match lookup(&assign, a) {
                    Some(i) => known.push(i),
                    None => {
                        if unknown.is_some() {
                            ok = false;
                            break;
                        }
                        unknown = Some(a.to_string());
                    }
                },
                other => known.push(other.clone()),
            }
        }
        if !ok {
            continue;
        }
        if let Some(u) = unknown {
            let rest = ground_difference(exp, &known)?;
            assign.push((u, rest));
        }
    }
    // Any still-unbound set variable defaults to the empty set.
    for (a, s, _) in &ctor.quant {
        if lookup(&assign, a).is_none() {
            match s {
                IndexSort::NmSet => assign.push((a.to_string(), Index::Empty)),
                _ => return None,
            }
        }
    }
    // Verify: the instantiated pattern stays within the expected set.
    for (pat, exp) in pattern.iter().zip(expected.iter()) {
        let inst = subst_all_idx(pat, &assign);
        if !(crate::relations::subset_of(&Assumptions::default(), &inst, exp, budget)
            || crate::relations::index_equiv_holds(&Assumptions::default(), &inst, exp, budget))
        {
            return None;
        }
    }
    Some(assign)
}

/// Ground set difference `exp minus union(known)` on canonical leaves.
fn ground_difference(exp: &Index, known: &[Index]) -> Option<Index> {
    let exp_n = index::normalize_index(exp).ok()?;
    let (_, exp_leaves) = index::set_leaves(&exp_n);
    let mut rest: Vec<Index> = Vec::new();
    'leaves: for leaf in exp_leaves {
        for k in known {
            let kn = index::normalize_index(k).ok()?;
            let (_, kl) = index::set_leaves(&kn);
            if kl.contains(&leaf) {
                continue 'leaves;
            }
        }
        rest.push(leaf);
    }
    rest.sort();
    rest.dedup();
    Some(index::build_set(index::SetCons::Union, rest))
}

// ---------------------------------------------------------------------------
// Subject reduction
// ---------------------------------------------------------------------------

/// The full dynamic check behind one run: the report is precise, the
/// dynamic reads/writes are members of the static annotation, the
/// output store still types the seeded cells, and the terminal checks
/// at its computation type with empty effects.
pub fn subject_reduction_check(
    prog: &Program,
    static_eff: &EffType,
    final_store: &Store,
    terminal: &crate::ast::Expr,
    deriv: &Derivation,
    budget: &Budget,
) -> Result<EffectReport, AuditFailure> {
    let report = precise_effects(deriv);
    if let Status::Imprecise(conf) = &report.status {
        return Err(AuditFailure {
            what: "effects are imprecise".into(),
            name: Some(conf.location.clone()),
            static_set: None,
            path: Some(format!("{} / {}", conf.path1, conf.path2)),
        });
    }
    let (comp, eff) = match strip_quantifiers(static_eff) {
        Some(pair) => pair,
        None => return Err(fail("static type has no ground effect component")),
    };
    check_contained(&report.writes, &eff.writes, "write", budget)?;
    check_contained(&report.reads, &eff.reads, "read", budget)?;

    // The output store extends the input store typing: everything the
    // seeds declared still checks.
    for cell in &prog.cells {
        match final_store.lookup(&cell.ptr) {
            Some(StoreValue::Data(v)) => {
                let v = v.clone();
                rt_check(prog, final_store, &v, &cell.ty, budget, 0).map_err(|mut e| {
                    e.what = format!("seeded cell {} no longer types: {}", cell.ptr, e.what);
                    e
                })?;
            }
            _ => return Err(fail(format!("seeded cell {} vanished", cell.ptr))),
        }
    }

    // The terminal checks at C |> <0;0>.
    match (&terminal.kind, &comp) {
        (crate::ast::ExprKind::Ret(v), CompType::Lift(a)) => {
            rt_check(prog, final_store, v, a, budget, 0)?;
        }
        (crate::ast::ExprKind::Lam(_, _), CompType::Arrow(_, _)) => {}
        _ => return Err(fail("terminal does not match its computation type")),
    }
    Ok(report)
}

fn strip_quantifiers(e: &EffType) -> Option<(CompType, Effect)> {
    match e {
        EffType::WithEff(c, eff) => Some(((**c).clone(), eff.clone())),
        EffType::AllType(_, _, inner) | EffType::AllIdx(_, _, _, inner) => strip_quantifiers(inner),
    }
}

fn check_contained(
    dynamic: &BTreeSet<Name>,
    static_set: &Index,
    what: &str,
    budget: &Budget,
) -> Result<(), AuditFailure> {
    for n in dynamic {
        match ground_member(n, static_set, budget) {
            Membership::Proven => {}
            // Ground membership should always decide; treat unknown as
            // failure.
            _ => {
                return Err(AuditFailure {
                    what: format!("dynamic {} outside the static {} set", what, what),
                    name: Some(n.clone()),
                    static_set: Some(static_set.to_string()),
                    path: None,
                })
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Expr;
    use crate::dynamics::{eval, EvalOpts};

    fn run(e: &Expr) -> (Store, Expr, Derivation) {
        eval(
            &Store::new(),
            &NameTerm::id(),
            &Name::sym("comp"),
            e,
            &EvalOpts::default(),
        )
        .unwrap()
    }

    #[test]
    fn ret_has_empty_precise_effects() {
        let (_, _, d) = run(&Expr::ret(Val::unit()));
        let r = precise_effects(&d);
        assert!(r.status.is_precise());
        assert!(r.reads.is_empty());
        assert!(r.writes.is_empty());
    }

    #[test]
    fn duplicate_singleton_writes_are_imprecise() {
        let e = Expr::let_(
            "_",
            Expr::refe(Val::name(Name::sym("n")), Val::unit()),
            Expr::refe(Val::name(Name::sym("n")), Val::unit()),
        );
        let (st, _, d) = run(&e);
        let r = precise_effects(&d);
        match &r.status {
            Status::Imprecise(conf) => assert_eq!(conf.location, Name::sym("n")),
            Status::Precise => panic!("expected imprecision"),
        }
        // Agreement with the event log.
        assert!(st.overwrite_count() > 0);
    }

    #[test]
    fn precise_agrees_with_event_log_on_disjoint_writes() {
        let e = Expr::let_(
            "_",
            Expr::refe(Val::name(Name::sym("n1")), Val::unit()),
            Expr::refe(Val::name(Name::sym("n2")), Val::unit()),
        );
        let (st, _, d) = run(&e);
        let r = precise_effects(&d);
        assert!(r.status.is_precise());
        assert_eq!(st.overwrite_count(), 0);
        assert_eq!(r.writes.len(), 2);
    }

    #[test]
    fn force_contributes_forced_location_and_inner_effects() {
        let body = Expr::refe(Val::name(Name::sym("m")), Val::unit());
        let e = Expr::let_(
            "t",
            Expr::thunk(Val::name(Name::sym("k")), body),
            Expr::force(Val::var("t")),
        );
        let (_, _, d) = run(&e);
        let r = precise_effects(&d);
        assert!(r.status.is_precise());
        assert!(r.reads.contains(&Name::sym("k")));
        assert!(r.writes.contains(&Name::sym("k")));
        assert!(r.writes.contains(&Name::sym("m")));
    }

    #[test]
    fn monotonicity_holds_structurally() {
        let body = Expr::refe(Val::name(Name::sym("m")), Val::unit());
        let e = Expr::let_(
            "t",
            Expr::thunk(Val::name(Name::sym("k")), body),
            Expr::let_(
                "_",
                Expr::force(Val::var("t")),
                Expr::get(Val::new(ValKind::RefPtr(Name::sym("m")))),
            ),
        );
        let (_, _, d) = run(&e);
        assert!(check_monotone(&d));
    }

    #[test]
    fn writes_onto_seeds_are_imprecise() {
        let mut st = Store::new();
        st.update(Name::sym("a1"), StoreValue::Data(Val::unit()));
        let e = Expr::refe(Val::name(Name::sym("a1")), Val::nat(3));
        let (st2, _, d) = eval(
            &st,
            &NameTerm::id(),
            &Name::sym("comp"),
            &e,
            &EvalOpts::default(),
        )
        .unwrap();
        let r = precise_effects(&d);
        assert!(!r.status.is_precise());
        assert!(st2.overwrite_count() > 0);
    }
}
