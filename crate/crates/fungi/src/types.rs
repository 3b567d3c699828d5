//! Kinds, propositions, effects, value/computation/effect types,
//! well-formedness, subtyping, and the effect algebra.

use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::index::{self, check_index_sort, normalize_index, Index, IndexSort, SortEnv};
use crate::name::{self, Ident, NameSort, NameTerm};
use crate::relations::{self, Assumptions, Budget};

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Kind {
    Type,
    TypeArrow(Rc<Kind>),
    IndexArrow(IndexSort, Rc<Kind>),
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Type => write!(f, "type"),
            Kind::TypeArrow(k) => write!(f, "type => {}", k),
            Kind::IndexArrow(s, k) => write!(f, "{} => {}", s, k),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Prop {
    Tt,
    Conj(Rc<Prop>, Rc<Prop>),
    Apart(Index, Index, IndexSort),
    Equiv(Index, Index, IndexSort),
}

impl Prop {
    pub fn conj(a: Prop, b: Prop) -> Prop {
        Prop::Conj(Rc::new(a), Rc::new(b))
    }

    pub fn apart(i: Index, j: Index) -> Prop {
        Prop::Apart(i, j, IndexSort::NmSet)
    }

    pub fn subst(&self, a: &str, arg: &index::IndexArg) -> Prop {
        match self {
            Prop::Tt => Prop::Tt,
            Prop::Conj(p, q) => Prop::conj(p.subst(a, arg), q.subst(a, arg)),
            Prop::Apart(i, j, s) => Prop::Apart(
                index::subst_index(i, a, arg),
                index::subst_index(j, a, arg),
                s.clone(),
            ),
            Prop::Equiv(i, j, s) => Prop::Equiv(
                index::subst_index(i, a, arg),
                index::subst_index(j, a, arg),
                s.clone(),
            ),
        }
    }
}

impl fmt::Display for Prop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prop::Tt => write!(f, "tt"),
            Prop::Conj(a, b) => write!(f, "{} and {}", a, b),
            Prop::Apart(i, j, s) => write!(f, "{} ## {} : {}", i, j, s),
            Prop::Equiv(i, j, s) => write!(f, "{} == {} : {}", i, j, s),
        }
    }
}

/// A static effect: the names written and read.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Effect {
    pub writes: Index,
    pub reads: Index,
}

impl Effect {
    pub fn empty() -> Effect {
        Effect {
            writes: Index::Empty,
            reads: Index::Empty,
        }
    }

    pub fn writes(w: Index) -> Effect {
        Effect {
            writes: w,
            reads: Index::Empty,
        }
    }

    pub fn reads(r: Index) -> Effect {
        Effect {
            writes: Index::Empty,
            reads: r,
        }
    }

    pub fn subst(&self, a: &str, arg: &index::IndexArg) -> Effect {
        Effect {
            writes: index::subst_index(&self.writes, a, arg),
            reads: index::subst_index(&self.reads, a, arg),
        }
    }
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}; {}>", self.writes, self.reads)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ValueType {
    TVar(Ident),
    TCon(Ident),
    Unit,
    Sum(Rc<ValueType>, Rc<ValueType>),
    Prod(Rc<ValueType>, Rc<ValueType>),
    RefT(Index, Rc<ValueType>),
    ThkT(Index, Rc<EffType>),
    IdxApp(Rc<ValueType>, Index),
    TypeApp(Rc<ValueType>, Rc<ValueType>),
    Nm(Index),
    NmFn(NameTerm),
    AllIdx(Ident, IndexSort, Rc<Prop>, Rc<ValueType>),
    ExistsIdx(Ident, IndexSort, Rc<Prop>, Rc<ValueType>),
}

impl ValueType {
    pub fn prod(a: ValueType, b: ValueType) -> ValueType {
        ValueType::Prod(Rc::new(a), Rc::new(b))
    }

    pub fn sum(a: ValueType, b: ValueType) -> ValueType {
        ValueType::Sum(Rc::new(a), Rc::new(b))
    }

    pub fn reft(i: Index, a: ValueType) -> ValueType {
        ValueType::RefT(i, Rc::new(a))
    }

    pub fn thk(i: Index, e: EffType) -> ValueType {
        ValueType::ThkT(i, Rc::new(e))
    }

    pub fn idx_app(a: ValueType, i: Index) -> ValueType {
        ValueType::IdxApp(Rc::new(a), i)
    }

    pub fn con(d: &str) -> ValueType {
        ValueType::TCon(Rc::from(d))
    }

    /// Built-in base types carried by the corpus.
    pub fn nat() -> ValueType {
        ValueType::con("Nat")
    }

    pub fn bool() -> ValueType {
        ValueType::con("Bool")
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CompType {
    Lift(Rc<ValueType>),
    Arrow(Rc<ValueType>, Rc<EffType>),
}

impl CompType {
    pub fn lift(a: ValueType) -> CompType {
        CompType::Lift(Rc::new(a))
    }

    pub fn arrow(a: ValueType, e: EffType) -> CompType {
        CompType::Arrow(Rc::new(a), Rc::new(e))
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum EffType {
    WithEff(Rc<CompType>, Effect),
    AllType(Ident, Kind, Rc<EffType>),
    AllIdx(Ident, IndexSort, Rc<Prop>, Rc<EffType>),
}

impl EffType {
    pub fn with_eff(c: CompType, e: Effect) -> EffType {
        EffType::WithEff(Rc::new(c), e)
    }

    pub fn ret(a: ValueType, e: Effect) -> EffType {
        EffType::with_eff(CompType::lift(a), e)
    }
}

fn fmt_vt_atomic(a: &ValueType, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match a {
        ValueType::Sum(_, _) | ValueType::Prod(_, _) | ValueType::AllIdx(..) | ValueType::ExistsIdx(..) => {
            write!(f, "({})", a)
        }
        _ => write!(f, "{}", a),
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueType::TVar(a) => write!(f, "{}", a),
            ValueType::TCon(d) => write!(f, "{}", d),
            ValueType::Unit => write!(f, "Unit"),
            ValueType::Sum(a, b) => {
                fmt_vt_atomic(a, f)?;
                write!(f, " + ")?;
                fmt_vt_atomic(b, f)
            }
            ValueType::Prod(a, b) => {
                fmt_vt_atomic(a, f)?;
                write!(f, " x ")?;
                fmt_vt_atomic(b, f)
            }
            ValueType::RefT(i, a) => {
                write!(f, "Ref[{}] ", i)?;
                fmt_vt_atomic(a, f)
            }
            ValueType::ThkT(i, e) => write!(f, "Thk[{}] ({})", i, e),
            ValueType::IdxApp(a, i) => {
                fmt_vt_atomic(a, f)?;
                write!(f, "[{}]", i)
            }
            ValueType::TypeApp(a, b) => {
                fmt_vt_atomic(a, f)?;
                write!(f, " ")?;
                fmt_vt_atomic(b, f)
            }
            ValueType::Nm(i) => write!(f, "Nm[{}]", i),
            ValueType::NmFn(m) => write!(f, "(Nm -> Nm)[{}]", m),
            ValueType::AllIdx(a, s, p, b) => write!(f, "forall {}:{} | {}. {}", a, s, p, b),
            ValueType::ExistsIdx(a, s, p, b) => write!(f, "exists {}:{} | {}. {}", a, s, p, b),
        }
    }
}

impl fmt::Display for CompType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompType::Lift(a) => {
                write!(f, "F ")?;
                fmt_vt_atomic(a, f)
            }
            CompType::Arrow(a, e) => {
                fmt_vt_atomic(a, f)?;
                write!(f, " -> {}", e)
            }
        }
    }
}

impl fmt::Display for EffType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EffType::WithEff(c, e) => write!(f, "{} |> {}", c, e),
            EffType::AllType(a, k, e) => write!(f, "forall {}:{}. {}", a, k, e),
            EffType::AllIdx(a, s, p, e) => write!(f, "forall {}:{} | {}. {}", a, s, p, e),
        }
    }
}

// ---------------------------------------------------------------------------
// Substitution of indices into types
// ---------------------------------------------------------------------------

pub fn subst_vt(t: &ValueType, a: &str, arg: &index::IndexArg) -> ValueType {
    let si = |i: &Index| index::subst_index(i, a, arg);
    match t {
        ValueType::TVar(_) | ValueType::TCon(_) | ValueType::Unit => t.clone(),
        ValueType::Sum(x, y) => ValueType::sum(subst_vt(x, a, arg), subst_vt(y, a, arg)),
        ValueType::Prod(x, y) => ValueType::prod(subst_vt(x, a, arg), subst_vt(y, a, arg)),
        ValueType::RefT(i, x) => ValueType::reft(si(i), subst_vt(x, a, arg)),
        ValueType::ThkT(i, e) => ValueType::thk(si(i), subst_et(e, a, arg)),
        ValueType::IdxApp(x, i) => ValueType::idx_app(subst_vt(x, a, arg), si(i)),
        ValueType::TypeApp(x, y) => {
            ValueType::TypeApp(Rc::new(subst_vt(x, a, arg)), Rc::new(subst_vt(y, a, arg)))
        }
        ValueType::Nm(i) => ValueType::Nm(si(i)),
        ValueType::NmFn(m) => {
            if let Some(nt) = arg_as_name_term(arg) {
                ValueType::NmFn(name::subst(m, a, &nt))
            } else {
                t.clone()
            }
        }
        ValueType::AllIdx(b, s, p, x) => {
            if &**b == a {
                t.clone()
            } else {
                ValueType::AllIdx(
                    b.clone(),
                    s.clone(),
                    Rc::new(p.subst(a, arg)),
                    Rc::new(subst_vt(x, a, arg)),
                )
            }
        }
        ValueType::ExistsIdx(b, s, p, x) => {
            if &**b == a {
                t.clone()
            } else {
                ValueType::ExistsIdx(
                    b.clone(),
                    s.clone(),
                    Rc::new(p.subst(a, arg)),
                    Rc::new(subst_vt(x, a, arg)),
                )
            }
        }
    }
}

fn arg_as_name_term(arg: &index::IndexArg) -> Option<NameTerm> {
    match arg {
        index::IndexArg::Term(m) => Some(m.clone()),
        index::IndexArg::Idx(Index::NmTm(m)) => Some(m.clone()),
        index::IndexArg::Idx(Index::Var(v)) => Some(NameTerm::Var(v.clone())),
        _ => None,
    }
}

pub fn subst_ct(t: &CompType, a: &str, arg: &index::IndexArg) -> CompType {
    match t {
        CompType::Lift(x) => CompType::lift(subst_vt(x, a, arg)),
        CompType::Arrow(x, e) => CompType::arrow(subst_vt(x, a, arg), subst_et(e, a, arg)),
    }
}

pub fn subst_et(t: &EffType, a: &str, arg: &index::IndexArg) -> EffType {
    match t {
        EffType::WithEff(c, e) => EffType::with_eff(subst_ct(c, a, arg), e.subst(a, arg)),
        EffType::AllType(al, k, e) => {
            EffType::AllType(al.clone(), k.clone(), Rc::new(subst_et(e, a, arg)))
        }
        EffType::AllIdx(b, s, p, e) => {
            if &**b == a {
                t.clone()
            } else {
                EffType::AllIdx(
                    b.clone(),
                    s.clone(),
                    Rc::new(p.subst(a, arg)),
                    Rc::new(subst_et(e, a, arg)),
                )
            }
        }
    }
}

/// Substitute a value type for a type variable.
pub fn subst_tyvar_vt(t: &ValueType, al: &str, rep: &ValueType) -> ValueType {
    match t {
        ValueType::TVar(b) if &**b == al => rep.clone(),
        ValueType::TVar(_) | ValueType::TCon(_) | ValueType::Unit | ValueType::Nm(_) | ValueType::NmFn(_) => t.clone(),
        ValueType::Sum(x, y) => {
            ValueType::sum(subst_tyvar_vt(x, al, rep), subst_tyvar_vt(y, al, rep))
        }
        ValueType::Prod(x, y) => {
            ValueType::prod(subst_tyvar_vt(x, al, rep), subst_tyvar_vt(y, al, rep))
        }
        ValueType::RefT(i, x) => ValueType::reft(i.clone(), subst_tyvar_vt(x, al, rep)),
        ValueType::ThkT(i, e) => ValueType::thk(i.clone(), subst_tyvar_et(e, al, rep)),
        ValueType::IdxApp(x, i) => ValueType::idx_app(subst_tyvar_vt(x, al, rep), i.clone()),
        ValueType::TypeApp(x, y) => ValueType::TypeApp(
            Rc::new(subst_tyvar_vt(x, al, rep)),
            Rc::new(subst_tyvar_vt(y, al, rep)),
        ),
        ValueType::AllIdx(a, s, p, x) => ValueType::AllIdx(
            a.clone(),
            s.clone(),
            p.clone(),
            Rc::new(subst_tyvar_vt(x, al, rep)),
        ),
        ValueType::ExistsIdx(a, s, p, x) => ValueType::ExistsIdx(
            a.clone(),
            s.clone(),
            p.clone(),
            Rc::new(subst_tyvar_vt(x, al, rep)),
        ),
    }
}

pub fn subst_tyvar_et(t: &EffType, al: &str, rep: &ValueType) -> EffType {
    match t {
        EffType::WithEff(c, e) => EffType::with_eff(
            match &**c {
                CompType::Lift(a) => CompType::lift(subst_tyvar_vt(a, al, rep)),
                CompType::Arrow(a, e2) => CompType::arrow(
                    subst_tyvar_vt(a, al, rep),
                    subst_tyvar_et(e2, al, rep),
                ),
            },
            e.clone(),
        ),
        EffType::AllType(b, k, e) => {
            if &**b == al {
                t.clone()
            } else {
                EffType::AllType(b.clone(), k.clone(), Rc::new(subst_tyvar_et(e, al, rep)))
            }
        }
        EffType::AllIdx(a, s, p, e) => EffType::AllIdx(
            a.clone(),
            s.clone(),
            p.clone(),
            Rc::new(subst_tyvar_et(e, al, rep)),
        ),
    }
}

// ---------------------------------------------------------------------------
// Kinding environment
// ---------------------------------------------------------------------------

/// The slice of a typing context needed for kinding and subtyping.
#[derive(Clone, Default)]
pub struct TyEnv {
    pub sorts: SortEnv,
    pub type_vars: Vec<(Ident, Kind)>,
}

impl TyEnv {
    pub fn new() -> TyEnv {
        let mut env = TyEnv::default();
        // Built-in base types.
        env.type_vars.push((Rc::from("Nat"), Kind::Type));
        env.type_vars.push((Rc::from("Bool"), Kind::Type));
        env
    }

    pub fn kind_of(&self, d: &str) -> Option<&Kind> {
        self.type_vars
            .iter()
            .rev()
            .find(|(b, _)| &**b == d)
            .map(|(_, k)| k)
    }

    pub fn with_index_var(&self, a: Ident, s: IndexSort) -> TyEnv {
        let mut env = self.clone();
        env.sorts = env.sorts.extended(a, s);
        env
    }

    pub fn with_type_var(&self, a: Ident, k: Kind) -> TyEnv {
        let mut env = self.clone();
        env.type_vars.push((a, k));
        env
    }

    pub fn with_prop(&self, p: &Prop) -> TyEnv {
        let mut env = self.clone();
        env.sorts.assumptions = env.sorts.assumptions.with_prop(p);
        env
    }

    pub fn assumptions(&self) -> &Assumptions {
        &self.sorts.assumptions
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum KindError {
    #[error("unbound type variable or constructor `{0}`")]
    Unbound(String),
    #[error("index error: {0}")]
    Index(#[from] index::IndexSortError),
    #[error("name sort error: {0}")]
    Name(#[from] name::SortError),
    #[error("expected kind {expected}, found {got} for `{ty}`")]
    Mismatch {
        expected: String,
        got: String,
        ty: String,
    },
    #[error("type `{0}` is not of arrow kind")]
    NotArrow(String),
}

/// Kind a value type; syntax-directed per the kinding rules.
pub fn kind_check(env: &TyEnv, a: &ValueType) -> Result<Kind, KindError> {
    match a {
        ValueType::TVar(v) | ValueType::TCon(v) => env
            .kind_of(v)
            .cloned()
            .ok_or_else(|| KindError::Unbound(v.to_string())),
        ValueType::Unit => Ok(Kind::Type),
        ValueType::Sum(x, y) | ValueType::Prod(x, y) => {
            expect_type_kind(env, x)?;
            expect_type_kind(env, y)?;
            Ok(Kind::Type)
        }
        ValueType::RefT(i, x) => {
            check_index_sort(&env.sorts, i, &IndexSort::NmSet)?;
            expect_type_kind(env, x)?;
            Ok(Kind::Type)
        }
        ValueType::ThkT(i, e) => {
            check_index_sort(&env.sorts, i, &IndexSort::NmSet)?;
            wf_eff_type(env, e)?;
            Ok(Kind::Type)
        }
        ValueType::IdxApp(x, i) => match kind_check(env, x)? {
            Kind::IndexArrow(s, k) => {
                check_index_sort(&env.sorts, i, &s)?;
                Ok((*k).clone())
            }
            other => Err(KindError::Mismatch {
                expected: "an index arrow".into(),
                got: other.to_string(),
                ty: x.to_string(),
            }),
        },
        ValueType::TypeApp(x, y) => match kind_check(env, x)? {
            Kind::TypeArrow(k) => {
                expect_type_kind(env, y)?;
                Ok((*k).clone())
            }
            other => Err(KindError::Mismatch {
                expected: "a type arrow".into(),
                got: other.to_string(),
                ty: x.to_string(),
            }),
        },
        ValueType::Nm(i) => {
            check_index_sort(&env.sorts, i, &IndexSort::NmSet)?;
            Ok(Kind::Type)
        }
        ValueType::NmFn(m) => {
            name::check_name_sort(&env.sorts.name_ctx(), m, &NameSort::nm_to_nm())?;
            Ok(Kind::Type)
        }
        ValueType::AllIdx(v, s, p, x) | ValueType::ExistsIdx(v, s, p, x) => {
            let inner = env.with_index_var(v.clone(), s.clone());
            wf_prop(&inner, p)?;
            let inner = inner.with_prop(p);
            expect_type_kind(&inner, x)?;
            Ok(Kind::Type)
        }
    }
}

fn expect_type_kind(env: &TyEnv, a: &ValueType) -> Result<(), KindError> {
    match kind_check(env, a)? {
        Kind::Type => Ok(()),
        other => Err(KindError::Mismatch {
            expected: "type".into(),
            got: other.to_string(),
            ty: a.to_string(),
        }),
    }
}

pub fn wf_comp(env: &TyEnv, c: &CompType) -> Result<(), KindError> {
    match c {
        CompType::Lift(a) => expect_type_kind(env, a),
        CompType::Arrow(a, e) => {
            expect_type_kind(env, a)?;
            wf_eff_type(env, e)
        }
    }
}

pub fn wf_eff_type(env: &TyEnv, e: &EffType) -> Result<(), KindError> {
    match e {
        EffType::WithEff(c, eff) => {
            wf_comp(env, c)?;
            wf_effect(env, eff)
        }
        EffType::AllType(a, k, e) => wf_eff_type(&env.with_type_var(a.clone(), k.clone()), e),
        EffType::AllIdx(a, s, p, e) => {
            let inner = env.with_index_var(a.clone(), s.clone());
            wf_prop(&inner, p)?;
            wf_eff_type(&inner.with_prop(p), e)
        }
    }
}

pub fn wf_effect(env: &TyEnv, eff: &Effect) -> Result<(), KindError> {
    check_index_sort(&env.sorts, &eff.writes, &IndexSort::NmSet)?;
    check_index_sort(&env.sorts, &eff.reads, &IndexSort::NmSet)?;
    Ok(())
}

pub fn wf_prop(env: &TyEnv, p: &Prop) -> Result<(), KindError> {
    match p {
        Prop::Tt => Ok(()),
        Prop::Conj(a, b) => {
            wf_prop(env, a)?;
            wf_prop(env, b)
        }
        Prop::Apart(i, j, s) | Prop::Equiv(i, j, s) => {
            check_index_sort(&env.sorts, i, s)?;
            check_index_sort(&env.sorts, j, s)?;
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// Effect algebra
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EffectError {
    #[error("write/write overlap: cannot show {w1} ## {w2}")]
    WritesOverlap { w1: String, w2: String },
    #[error("read-before-write violation: cannot show {r1} ## {w2}")]
    ReadThenWrite { r1: String, w2: String },
}

/// Effect sequencing, a partial function: defined when the writes of
/// the first effect are apart from the writes of the second, and the
/// reads of the first are apart from the writes of the second.
pub fn effect_seq(
    env: &TyEnv,
    e1: &Effect,
    e2: &Effect,
    budget: &Budget,
) -> Result<Effect, EffectError> {
    let asm = env.assumptions();
    if !relations::index_apart_holds(asm, &e1.writes, &e2.writes, budget) {
        return Err(EffectError::WritesOverlap {
            w1: e1.writes.to_string(),
            w2: e2.writes.to_string(),
        });
    }
    if !relations::index_apart_holds(asm, &e1.reads, &e2.writes, budget) {
        return Err(EffectError::ReadThenWrite {
            r1: e1.reads.to_string(),
            w2: e2.writes.to_string(),
        });
    }
    let writes = normalize_index(&Index::union(e1.writes.clone(), e2.writes.clone()))
        .unwrap_or_else(|_| Index::union(e1.writes.clone(), e2.writes.clone()));
    let reads = normalize_index(&Index::union(e1.reads.clone(), e2.reads.clone()))
        .unwrap_or_else(|_| Index::union(e1.reads.clone(), e2.reads.clone()));
    Ok(Effect { writes, reads })
}

/// Effect coalescing `(E |> eps2) (.) eps1`; descends under quantifiers.
pub fn effect_coalesce(
    env: &TyEnv,
    e: &EffType,
    eps: &Effect,
    budget: &Budget,
) -> Result<EffType, EffectError> {
    match e {
        EffType::WithEff(c, eps2) => {
            let combined = effect_seq(env, eps, eps2, budget)?;
            Ok(EffType::WithEff(c.clone(), combined))
        }
        EffType::AllType(a, k, inner) => Ok(EffType::AllType(
            a.clone(),
            k.clone(),
            Rc::new(effect_coalesce(env, inner, eps, budget)?),
        )),
        EffType::AllIdx(a, s, p, inner) => {
            let env2 = env.with_index_var(a.clone(), s.clone()).with_prop(p);
            Ok(EffType::AllIdx(
                a.clone(),
                s.clone(),
                p.clone(),
                Rc::new(effect_coalesce(&env2, inner, eps, budget)?),
            ))
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SubsumeError {
    #[error("cannot decompose {big} as {small} plus an apart remainder")]
    NoDecomposition { small: String, big: String },
    #[error("remainder not provably apart: {small} ## {rest}")]
    RemainderNotApart { small: String, rest: String },
}

/// Does `small` extend to `big` by an apart remainder?  The remainder
/// is synthesized syntactically from canonical set forms.
fn component_subsumes(
    env: &TyEnv,
    small: &Index,
    big: &Index,
    budget: &Budget,
) -> Result<(), SubsumeError> {
    let asm = env.assumptions();
    match relations::decompose_superset(asm, small, big, budget) {
        Some(rest) => {
            if rest == Index::Empty {
                return Ok(());
            }
            if relations::index_apart_holds(asm, small, &rest, budget) {
                Ok(())
            } else {
                Err(SubsumeError::RemainderNotApart {
                    small: small.to_string(),
                    rest: rest.to_string(),
                })
            }
        }
        None => Err(SubsumeError::NoDecomposition {
            small: small.to_string(),
            big: big.to_string(),
        }),
    }
}

/// Effect subsumption: both components extend by apart remainders.
pub fn effect_subsumes(
    env: &TyEnv,
    e1: &Effect,
    e2: &Effect,
    budget: &Budget,
) -> Result<(), SubsumeError> {
    component_subsumes(env, &e1.writes, &e2.writes, budget)?;
    component_subsumes(env, &e1.reads, &e2.reads, budget)
}

// ---------------------------------------------------------------------------
// Subtyping
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SubtypeError {
    #[error("{0} is not a subtype of {1}: {2}")]
    Blocked(String, String, String),
}

fn blocked(a: impl fmt::Display, b: impl fmt::Display, why: impl Into<String>) -> SubtypeError {
    SubtypeError::Blocked(a.to_string(), b.to_string(), why.into())
}

/// Prove a proposition from the assumptions in scope.
pub fn prop_holds(env: &TyEnv, p: &Prop, budget: &Budget) -> bool {
    let asm = env.assumptions();
    match p {
        Prop::Tt => true,
        Prop::Conj(a, b) => prop_holds(env, a, budget) && prop_holds(env, b, budget),
        Prop::Apart(i, j, _) => relations::index_apart_holds(asm, i, j, budget),
        Prop::Equiv(i, j, _) => relations::index_equiv_holds(asm, i, j, budget),
    }
}

fn index_equiv(env: &TyEnv, i: &Index, j: &Index, budget: &Budget) -> bool {
    relations::index_equiv_holds(env.assumptions(), i, j, budget)
}

fn set_included(env: &TyEnv, x: &Index, y: &Index, budget: &Budget) -> bool {
    relations::subset_of(env.assumptions(), x, y, budget)
}

/// Candidate instantiations for left-rule quantifiers: subterms of the
/// goal, never synthesized by unification.
fn instantiation_candidates(a: &ValueType, b: &ValueType) -> Vec<Index> {
    let mut out = Vec::new();
    collect_indices_vt(a, &mut out);
    collect_indices_vt(b, &mut out);
    out.sort();
    out.dedup();
    out
}

fn collect_indices_vt(t: &ValueType, out: &mut Vec<Index>) {
    match t {
        ValueType::TVar(_) | ValueType::TCon(_) | ValueType::Unit | ValueType::NmFn(_) => {}
        ValueType::Sum(a, b) | ValueType::Prod(a, b) | ValueType::TypeApp(a, b) => {
            collect_indices_vt(a, out);
            collect_indices_vt(b, out);
        }
        ValueType::RefT(i, a) => {
            out.push(i.clone());
            collect_indices_vt(a, out);
        }
        ValueType::ThkT(i, e) => {
            out.push(i.clone());
            collect_indices_et(e, out);
        }
        ValueType::IdxApp(a, i) => {
            out.push(i.clone());
            collect_indices_vt(a, out);
        }
        ValueType::Nm(i) => out.push(i.clone()),
        ValueType::AllIdx(_, _, _, a) | ValueType::ExistsIdx(_, _, _, a) => {
            collect_indices_vt(a, out)
        }
    }
}

fn collect_indices_et(t: &EffType, out: &mut Vec<Index>) {
    match t {
        EffType::WithEff(c, e) => {
            out.push(e.writes.clone());
            out.push(e.reads.clone());
            match &**c {
                CompType::Lift(a) => collect_indices_vt(a, out),
                CompType::Arrow(a, e2) => {
                    collect_indices_vt(a, out);
                    collect_indices_et(e2, out);
                }
            }
        }
        EffType::AllType(_, _, e) => collect_indices_et(e, out),
        EffType::AllIdx(_, _, _, e) => collect_indices_et(e, out),
    }
}

pub fn subtype_value(
    env: &TyEnv,
    a: &ValueType,
    b: &ValueType,
    budget: &Budget,
) -> Result<(), SubtypeError> {
    if a == b {
        return Ok(());
    }
    match (a, b) {
        (ValueType::TVar(x), ValueType::TVar(y)) | (ValueType::TCon(x), ValueType::TCon(y)) => {
            if x == y {
                Ok(())
            } else {
                Err(blocked(a, b, "distinct heads"))
            }
        }
        (ValueType::Unit, ValueType::Unit) => Ok(()),
        (ValueType::Nm(x), ValueType::Nm(y)) => {
            if set_included(env, x, y, budget) {
                Ok(())
            } else {
                Err(blocked(a, b, format!("cannot show {} included in {}", x, y)))
            }
        }
        (ValueType::NmFn(m), ValueType::NmFn(n)) => match name::name_convertible(m, n) {
            Ok(true) => Ok(()),
            _ => Err(blocked(a, b, "name functions not convertible")),
        },
        (ValueType::Sum(a1, a2), ValueType::Sum(b1, b2))
        | (ValueType::Prod(a1, a2), ValueType::Prod(b1, b2)) => {
            subtype_value(env, a1, b1, budget)?;
            subtype_value(env, a2, b2, budget)
        }
        (ValueType::RefT(x, a1), ValueType::RefT(y, b1)) => {
            if !set_included(env, x, y, budget) {
                return Err(blocked(a, b, format!("cannot show {} included in {}", x, y)));
            }
            subtype_value(env, a1, b1, budget)
        }
        (ValueType::ThkT(x, e1), ValueType::ThkT(y, e2)) => {
            if !set_included(env, x, y, budget) {
                return Err(blocked(a, b, format!("cannot show {} included in {}", x, y)));
            }
            subtype_eff(env, e1, e2, budget)
        }
        // Type-and-index applications: heads must agree; name-set
        // arguments are covariant (indices here overapproximate), other
        // index arguments are invariant up to provable equivalence.
        (ValueType::IdxApp(_, _), ValueType::IdxApp(_, _))
        | (ValueType::TypeApp(_, _), ValueType::TypeApp(_, _)) => {
            let (ha, args_a) = spine(a);
            let (hb, args_b) = spine(b);
            if ha != hb || args_a.len() != args_b.len() {
                return Err(blocked(a, b, "constructor spines differ"));
            }
            for (x, y) in args_a.iter().zip(args_b.iter()) {
                match (x, y) {
                    (SpineArg::Idx(i), SpineArg::Idx(j)) => {
                        if !(index_equiv(env, i, j, budget) || set_included(env, i, j, budget)) {
                            return Err(blocked(
                                a,
                                b,
                                format!("index argument {} not below {}", i, j),
                            ));
                        }
                    }
                    (SpineArg::Ty(x2), SpineArg::Ty(y2)) => {
                        subtype_value(env, x2, y2, budget)?;
                    }
                    _ => return Err(blocked(a, b, "argument kinds differ")),
                }
            }
            Ok(())
        }
        // Left universal: guess an instantiation from the goal.
        (ValueType::AllIdx(v, _s, p, body), _) => {
            for i in instantiation_candidates(a, b) {
                let arg = index::IndexArg::Idx(i.clone());
                if !prop_holds(env, &p.subst(v, &arg), budget) {
                    continue;
                }
                if subtype_value(env, &subst_vt(body, v, &arg), b, budget).is_ok() {
                    return Ok(());
                }
            }
            Err(blocked(a, b, "no usable instantiation for the left quantifier"))
        }
        // Right universal.
        (_, ValueType::AllIdx(v, s, p, body)) => {
            let inner = env.with_index_var(v.clone(), s.clone()).with_prop(p);
            subtype_value(&inner, a, body, budget)
        }
        (ValueType::ExistsIdx(v1, s1, p1, b1), ValueType::ExistsIdx(v2, _s2, p2, b2)) => {
            let inner = env.with_index_var(v1.clone(), s1.clone()).with_prop(p1);
            let arg = index::IndexArg::Idx(Index::Var(v1.clone()));
            if !prop_holds(&inner, &p2.subst(v2, &arg), budget) {
                return Err(blocked(a, b, "existential constraint not entailed"));
            }
            subtype_value(&inner, b1, &subst_vt(b2, v2, &arg), budget)
        }
        _ => Err(blocked(a, b, "no subtyping rule applies")),
    }
}

enum SpineArg {
    Idx(Index),
    Ty(ValueType),
}

fn spine(t: &ValueType) -> (ValueType, Vec<SpineArg>) {
    match t {
        ValueType::IdxApp(h, i) => {
            let (head, mut args) = spine(h);
            args.push(SpineArg::Idx(i.clone()));
            (head, args)
        }
        ValueType::TypeApp(h, x) => {
            let (head, mut args) = spine(h);
            args.push(SpineArg::Ty((**x).clone()));
            (head, args)
        }
        other => (other.clone(), Vec::new()),
    }
}

pub fn subtype_comp(
    env: &TyEnv,
    c: &CompType,
    d: &CompType,
    budget: &Budget,
) -> Result<(), SubtypeError> {
    match (c, d) {
        (CompType::Lift(a), CompType::Lift(b)) => subtype_value(env, a, b, budget),
        (CompType::Arrow(a1, e1), CompType::Arrow(a2, e2)) => {
            // Contravariant domain.
            subtype_value(env, a2, a1, budget)?;
            subtype_eff(env, e1, e2, budget)
        }
        _ => Err(blocked(c, d, "computation shapes differ")),
    }
}

pub fn subtype_eff(
    env: &TyEnv,
    e1: &EffType,
    e2: &EffType,
    budget: &Budget,
) -> Result<(), SubtypeError> {
    match (e1, e2) {
        (EffType::WithEff(c1, eps1), EffType::WithEff(c2, eps2)) => {
            subtype_comp(env, c1, c2, budget)?;
            effect_subsumes(env, eps1, eps2, budget)
                .map_err(|e| blocked(e1, e2, e.to_string()))
        }
        (EffType::AllType(a1, k1, b1), EffType::AllType(a2, k2, b2)) => {
            if k1 != k2 {
                return Err(blocked(e1, e2, "kinds differ"));
            }
            let inner = env.with_type_var(a2.clone(), k2.clone());
            let renamed = subst_tyvar_et(b1, a1, &ValueType::TVar(a2.clone()));
            subtype_eff(&inner, &renamed, b2, budget)
        }
        // Left index quantifier: instantiate from goal subterms.
        (EffType::AllIdx(v, _s, p, body), _) => {
            let mut cands = Vec::new();
            collect_indices_et(e1, &mut cands);
            collect_indices_et(e2, &mut cands);
            cands.sort();
            cands.dedup();
            for i in cands {
                let arg = index::IndexArg::Idx(i);
                if !prop_holds(env, &p.subst(v, &arg), budget) {
                    continue;
                }
                if subtype_eff(env, &subst_et(body, v, &arg), e2, budget).is_ok() {
                    return Ok(());
                }
            }
            Err(blocked(e1, e2, "no usable instantiation for the left quantifier"))
        }
        (_, EffType::AllIdx(v, s, p, body)) => {
            let inner = env.with_index_var(v.clone(), s.clone()).with_prop(p);
            subtype_eff(&inner, e1, body, budget)
        }
        _ => Err(blocked(e1, e2, "effect-type shapes differ")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::name::Name;

    fn b() -> Budget {
        Budget::default()
    }

    fn ground(n: &str) -> Index {
        Index::sing_name(Name::sym(n))
    }

    #[test]
    fn kind_unit_is_type() {
        assert_eq!(kind_check(&TyEnv::new(), &ValueType::Unit), Ok(Kind::Type));
    }

    #[test]
    fn kind_ref_of_set_var() {
        let env = TyEnv::new().with_index_var(Rc::from("X"), IndexSort::NmSet);
        let t = ValueType::reft(Index::var("X"), ValueType::Unit);
        assert_eq!(kind_check(&env, &t), Ok(Kind::Type));
    }

    #[test]
    fn kind_thunk_of_trivial_comp() {
        let t = ValueType::thk(
            Index::Empty,
            EffType::ret(ValueType::Unit, Effect::empty()),
        );
        assert_eq!(kind_check(&TyEnv::new(), &t), Ok(Kind::Type));
    }

    #[test]
    fn effect_seq_of_apart_singletons() {
        let env = TyEnv::new();
        let e1 = Effect::writes(ground("n1"));
        let e2 = Effect::writes(ground("n2"));
        let out = effect_seq(&env, &e1, &e2, &b()).unwrap();
        let (_, leaves) = index::set_leaves(&out.writes);
        assert_eq!(leaves.len(), 2);
        assert_eq!(out.reads, Index::Empty);
    }

    #[test]
    fn effect_seq_identity_on_empty() {
        let env = TyEnv::new();
        let e = Effect {
            writes: ground("n"),
            reads: ground("m"),
        };
        let out = effect_seq(&env, &Effect::empty(), &e, &b()).unwrap();
        assert_eq!(out, e);
    }

    #[test]
    fn effect_seq_self_overlap_undefined() {
        let env = TyEnv::new();
        let e = Effect::writes(ground("n"));
        match effect_seq(&env, &e, &e, &b()) {
            Err(EffectError::WritesOverlap { .. }) => {}
            other => panic!("expected writes-overlap, got {:?}", other),
        }
    }

    #[test]
    fn read_then_write_distinct_diagnostic() {
        let env = TyEnv::new();
        let e1 = Effect::reads(ground("n"));
        let e2 = Effect::writes(ground("n"));
        match effect_seq(&env, &e1, &e2, &b()) {
            Err(EffectError::ReadThenWrite { .. }) => {}
            other => panic!("expected read-then-write, got {:?}", other),
        }
    }

    #[test]
    fn coalesce_matches_sequencing() {
        let env = TyEnv::new();
        let inner = EffType::ret(ValueType::Unit, Effect::writes(ground("n2")));
        let out = effect_coalesce(&env, &inner, &Effect::writes(ground("n1")), &b()).unwrap();
        match out {
            EffType::WithEff(_, eff) => {
                let (_, leaves) = index::set_leaves(&eff.writes);
                assert_eq!(leaves.len(), 2);
            }
            other => panic!("unexpected shape {}", other),
        }
    }

    #[test]
    fn coalesce_with_empty_is_identity() {
        let env = TyEnv::new();
        let inner = EffType::ret(ValueType::Unit, Effect::writes(ground("n")));
        let out = effect_coalesce(&env, &inner, &Effect::empty(), &b()).unwrap();
        assert_eq!(out, inner);
    }

    #[test]
    fn coalesce_under_index_binder() {
        let env = TyEnv::new();
        let inner = EffType::AllIdx(
            Rc::from("X"),
            IndexSort::NmSet,
            Rc::new(Prop::Tt),
            Rc::new(EffType::ret(ValueType::Unit, Effect::empty())),
        );
        let out = effect_coalesce(&env, &inner, &Effect::writes(ground("n")), &b()).unwrap();
        match out {
            EffType::AllIdx(_, _, _, body) => match &*body {
                EffType::WithEff(_, eff) => assert_eq!(eff.writes, ground("n")),
                other => panic!("unexpected inner {}", other),
            },
            other => panic!("binder lost: {}", other),
        }
    }

    #[test]
    fn subsumption_into_superset() {
        let env = TyEnv::new();
        let small = Effect::writes(ground("n1"));
        let big = Effect::writes(Index::apart(ground("n1"), ground("n2")));
        assert!(effect_subsumes(&env, &small, &big, &b()).is_ok());
        assert!(effect_subsumes(&env, &big, &small, &b()).is_err());
    }

    #[test]
    fn subsumption_reflexive() {
        let env = TyEnv::new();
        let e = Effect {
            writes: ground("n"),
            reads: ground("m"),
        };
        assert!(effect_subsumes(&env, &e, &e, &b()).is_ok());
    }

    #[test]
    fn name_type_subtyping_by_inclusion() {
        let mut env = TyEnv::new();
        env = env.with_index_var(Rc::from("X"), IndexSort::NmSet);
        env = env.with_index_var(Rc::from("Y"), IndexSort::NmSet);
        env = env.with_prop(&Prop::apart(Index::var("X"), Index::var("Y")));
        let a = ValueType::Nm(Index::var("X"));
        let b_ = ValueType::Nm(Index::apart(Index::var("X"), Index::var("Y")));
        assert!(subtype_value(&env, &a, &b_, &b()).is_ok());
        assert!(subtype_value(&env, &b_, &a, &b()).is_err());
    }

    #[test]
    fn subtype_reflexive() {
        let env = TyEnv::new();
        let t = ValueType::prod(ValueType::Unit, ValueType::nat());
        assert!(subtype_value(&env, &t, &t, &b()).is_ok());
    }

    #[test]
    fn arrow_contravariance() {
        let mut env = TyEnv::new();
        env = env.with_index_var(Rc::from("X"), IndexSort::NmSet);
        env = env.with_index_var(Rc::from("Y"), IndexSort::NmSet);
        env = env.with_prop(&Prop::apart(Index::var("X"), Index::var("Y")));
        let e = EffType::ret(ValueType::Unit, Effect::empty());
        let wide = CompType::arrow(
            ValueType::Nm(Index::apart(Index::var("X"), Index::var("Y"))),
            e.clone(),
        );
        let narrow = CompType::arrow(ValueType::Nm(Index::var("X")), e);
        assert!(subtype_comp(&env, &wide, &narrow, &b()).is_ok());
        assert!(subtype_comp(&env, &narrow, &wide, &b()).is_err());
    }
}
