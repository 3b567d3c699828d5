//! Values, expressions, program declarations, erasure and substitution.
//!
//! One AST serves the checker and the evaluator: annotation and
//! instantiation nodes are erased before evaluation.  Name terms embedded
//! in values (name functions, name application) may mention program
//! variables of name type; value substitution reaches into them.

use std::fmt;
use std::rc::Rc;

use crate::index::{Index, IndexSort};
use crate::name::{self, Ident, Name, NameTerm};
use crate::types::{EffType, Kind, Prop, ValueType};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct Val {
    pub kind: ValKind,
    pub span: Span,
}

#[derive(Clone, PartialEq, Debug)]
pub enum ValKind {
    Var(Ident),
    Unit,
    Pair(Rc<Val>, Rc<Val>),
    Inj(u8, Rc<Val>),
    /// A literal name value.
    Name(Name),
    /// A name function value; the term may mention program variables
    /// of singleton name type, which substitution replaces.
    NameFn(NameTerm),
    /// A reference pointer.
    RefPtr(Name),
    /// A thunk pointer.
    ThunkPtr(Name),
    Pack(Index, Rc<Val>),
    Anno(Rc<Val>, ValueType),
    Nat(u64),
    Bool(bool),
    /// Constructor application with explicit index instantiations.
    Ctor(Ident, Vec<Index>, Vec<Val>),
}

impl Val {
    pub fn new(kind: ValKind) -> Val {
        Val {
            kind,
            span: Span::default(),
        }
    }

    pub fn at(kind: ValKind, span: Span) -> Val {
        Val { kind, span }
    }

    pub fn unit() -> Val {
        Val::new(ValKind::Unit)
    }

    pub fn var(x: &str) -> Val {
        Val::new(ValKind::Var(Rc::from(x)))
    }

    pub fn name(n: Name) -> Val {
        Val::new(ValKind::Name(n))
    }

    pub fn nat(k: u64) -> Val {
        Val::new(ValKind::Nat(k))
    }

    pub fn bool(b: bool) -> Val {
        Val::new(ValKind::Bool(b))
    }

    pub fn pair(a: Val, b: Val) -> Val {
        Val::new(ValKind::Pair(Rc::new(a), Rc::new(b)))
    }

    pub fn anno(v: Val, t: ValueType) -> Val {
        Val::new(ValKind::Anno(Rc::new(v), t))
    }

    /// Is this a closed runtime value (no free program variables)?
    pub fn is_closed(&self) -> bool {
        let mut fv = Vec::new();
        self.free_vars(&mut Vec::new(), &mut fv);
        fv.is_empty()
    }

    fn free_vars(&self, bound: &mut Vec<Ident>, out: &mut Vec<Ident>) {
        match &self.kind {
            ValKind::Var(x) => {
                if !bound.contains(x) && !out.contains(x) {
                    out.push(x.clone());
                }
            }
            ValKind::NameFn(m) => {
                for v in m.free_vars() {
                    if !bound.contains(&v) && !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
            ValKind::Pair(a, b) => {
                a.free_vars(bound, out);
                b.free_vars(bound, out);
            }
            ValKind::Inj(_, v) | ValKind::Pack(_, v) | ValKind::Anno(v, _) => {
                v.free_vars(bound, out)
            }
            ValKind::Ctor(_, _, args) => {
                for v in args {
                    v.free_vars(bound, out);
                }
            }
            _ => {}
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PrimOp {
    NatEq,
    NatPlus,
    /// `hashbit y i`: bit `i` of the element hash of `y`.
    HashBit,
}

impl fmt::Display for PrimOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrimOp::NatEq => write!(f, "eq"),
            PrimOp::NatPlus => write!(f, "plus"),
            PrimOp::HashBit => write!(f, "hashbit"),
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct MatchArm {
    pub ctor: Ident,
    pub idx_binders: Vec<Ident>,
    pub val_binders: Vec<Ident>,
    pub body: Rc<Expr>,
}

#[derive(Clone, PartialEq, Debug)]
pub enum ExprKind {
    Ret(Val),
    Lam(Ident, Rc<Expr>),
    Split(Val, Ident, Ident, Rc<Expr>),
    Case(Val, Ident, Rc<Expr>, Ident, Rc<Expr>),
    App(Rc<Expr>, Val),
    Let(Ident, Rc<Expr>, Rc<Expr>),
    /// `thunk[v] e`: allocate `e` under the pointer the ambient
    /// namespace assigns to the name `v`.
    Thunk(Val, Rc<Expr>),
    Force(Val),
    /// `ref[v1] v2`.
    Ref(Val, Val),
    Get(Val),
    Scope(Val, Rc<Expr>),
    /// Name function application `v_M v`.
    NameApp(Val, Val),
    Unpack(Val, Ident, Ident, Rc<Expr>),
    Anno(Rc<Expr>, EffType),
    InstIdx(Rc<Expr>, Index),
    InstTy(Rc<Expr>, ValueType),
    Match(Val, Vec<MatchArm>),
    If(Val, Rc<Expr>, Rc<Expr>),
    Prim(PrimOp, Vec<Val>),
}

impl Expr {
    pub fn new(kind: ExprKind) -> Expr {
        Expr {
            kind,
            span: Span::default(),
        }
    }

    pub fn at(kind: ExprKind, span: Span) -> Expr {
        Expr { kind, span }
    }

    pub fn ret(v: Val) -> Expr {
        Expr::new(ExprKind::Ret(v))
    }

    pub fn lam(x: &str, e: Expr) -> Expr {
        Expr::new(ExprKind::Lam(Rc::from(x), Rc::new(e)))
    }

    pub fn app(e: Expr, v: Val) -> Expr {
        Expr::new(ExprKind::App(Rc::new(e), v))
    }

    pub fn let_(x: &str, e1: Expr, e2: Expr) -> Expr {
        Expr::new(ExprKind::Let(Rc::from(x), Rc::new(e1), Rc::new(e2)))
    }

    pub fn force(v: Val) -> Expr {
        Expr::new(ExprKind::Force(v))
    }

    pub fn get(v: Val) -> Expr {
        Expr::new(ExprKind::Get(v))
    }

    pub fn refe(n: Val, v: Val) -> Expr {
        Expr::new(ExprKind::Ref(n, v))
    }

    pub fn thunk(n: Val, e: Expr) -> Expr {
        Expr::new(ExprKind::Thunk(n, Rc::new(e)))
    }

    /// A terminal expression is `ret v` or a lambda.
    pub fn is_terminal(&self) -> bool {
        matches!(self.kind, ExprKind::Ret(_) | ExprKind::Lam(_, _))
    }
}

// ---------------------------------------------------------------------------
// Erasure
// ---------------------------------------------------------------------------

/// Strip annotations and explicit instantiations from a value.
pub fn erase_val(v: &Val) -> Val {
    let kind = match &v.kind {
        ValKind::Anno(inner, _) => return erase_val(inner),
        ValKind::Pair(a, b) => ValKind::Pair(Rc::new(erase_val(a)), Rc::new(erase_val(b))),
        ValKind::Inj(i, a) => ValKind::Inj(*i, Rc::new(erase_val(a))),
        ValKind::Pack(_, a) => return erase_val(a),
        ValKind::Ctor(d, _, args) => {
            ValKind::Ctor(d.clone(), Vec::new(), args.iter().map(erase_val).collect())
        }
        other => other.clone(),
    };
    Val { kind, span: v.span }
}

/// Strip annotations and explicit instantiations from an expression;
/// total, structural, idempotent.
pub fn erase(e: &Expr) -> Expr {
    let kind = match &e.kind {
        ExprKind::Anno(inner, _) => return erase(inner),
        ExprKind::InstIdx(inner, _) | ExprKind::InstTy(inner, _) => return erase(inner),
        ExprKind::Ret(v) => ExprKind::Ret(erase_val(v)),
        ExprKind::Lam(x, b) => ExprKind::Lam(x.clone(), Rc::new(erase(b))),
        ExprKind::Split(v, x, y, b) => {
            ExprKind::Split(erase_val(v), x.clone(), y.clone(), Rc::new(erase(b)))
        }
        ExprKind::Case(v, x, e1, y, e2) => ExprKind::Case(
            erase_val(v),
            x.clone(),
            Rc::new(erase(e1)),
            y.clone(),
            Rc::new(erase(e2)),
        ),
        ExprKind::App(f, v) => ExprKind::App(Rc::new(erase(f)), erase_val(v)),
        ExprKind::Let(x, e1, e2) => {
            ExprKind::Let(x.clone(), Rc::new(erase(e1)), Rc::new(erase(e2)))
        }
        ExprKind::Thunk(v, b) => ExprKind::Thunk(erase_val(v), Rc::new(erase(b))),
        ExprKind::Force(v) => ExprKind::Force(erase_val(v)),
        ExprKind::Ref(n, v) => ExprKind::Ref(erase_val(n), erase_val(v)),
        ExprKind::Get(v) => ExprKind::Get(erase_val(v)),
        ExprKind::Scope(v, b) => ExprKind::Scope(erase_val(v), Rc::new(erase(b))),
        ExprKind::NameApp(f, v) => ExprKind::NameApp(erase_val(f), erase_val(v)),
        ExprKind::Unpack(v, a, x, b) => {
            ExprKind::Unpack(erase_val(v), a.clone(), x.clone(), Rc::new(erase(b)))
        }
        ExprKind::Match(v, arms) => ExprKind::Match(
            erase_val(v),
            arms.iter()
                .map(|arm| MatchArm {
                    ctor: arm.ctor.clone(),
                    idx_binders: arm.idx_binders.clone(),
                    val_binders: arm.val_binders.clone(),
                    body: Rc::new(erase(&arm.body)),
                })
                .collect(),
        ),
        ExprKind::If(v, e1, e2) => {
            ExprKind::If(erase_val(v), Rc::new(erase(e1)), Rc::new(erase(e2)))
        }
        ExprKind::Prim(op, args) => ExprKind::Prim(*op, args.iter().map(erase_val).collect()),
    };
    Expr { kind, span: e.span }
}

// ---------------------------------------------------------------------------
// Substitution of values for program variables
// ---------------------------------------------------------------------------

/// What a program variable contributes when substituted into an
/// embedded name term: literal names substitute as literals.
fn val_as_name_term(v: &Val) -> Option<NameTerm> {
    match &v.kind {
        ValKind::Name(n) => Some(NameTerm::Lit(n.clone())),
        ValKind::NameFn(m) => Some(m.clone()),
        _ => None,
    }
}

pub fn subst_val(target: &Val, x: &str, v: &Val) -> Val {
    let kind = match &target.kind {
        ValKind::Var(y) => {
            if &**y == x {
                return v.clone();
            }
            target.kind.clone()
        }
        ValKind::NameFn(m) => {
            if m.free_vars().iter().any(|a| &**a == x) {
                match val_as_name_term(v) {
                    Some(nt) => ValKind::NameFn(name::subst(m, x, &nt)),
                    None => target.kind.clone(),
                }
            } else {
                target.kind.clone()
            }
        }
        ValKind::Pair(a, b) => ValKind::Pair(
            Rc::new(subst_val(a, x, v)),
            Rc::new(subst_val(b, x, v)),
        ),
        ValKind::Inj(i, a) => ValKind::Inj(*i, Rc::new(subst_val(a, x, v))),
        ValKind::Pack(i, a) => ValKind::Pack(i.clone(), Rc::new(subst_val(a, x, v))),
        ValKind::Anno(a, t) => ValKind::Anno(Rc::new(subst_val(a, x, v)), t.clone()),
        ValKind::Ctor(d, insts, args) => ValKind::Ctor(
            d.clone(),
            insts.clone(),
            args.iter().map(|a| subst_val(a, x, v)).collect(),
        ),
        other => other.clone(),
    };
    Val {
        kind,
        span: target.span,
    }
}

pub fn subst_expr(e: &Expr, x: &str, v: &Val) -> Expr {
    let kind = match &e.kind {
        ExprKind::Ret(w) => ExprKind::Ret(subst_val(w, x, v)),
        ExprKind::Lam(y, b) => {
            if &**y == x {
                e.kind.clone()
            } else {
                ExprKind::Lam(y.clone(), Rc::new(subst_expr(b, x, v)))
            }
        }
        ExprKind::Split(w, y1, y2, b) => {
            let w = subst_val(w, x, v);
            if &**y1 == x || &**y2 == x {
                ExprKind::Split(w, y1.clone(), y2.clone(), b.clone())
            } else {
                ExprKind::Split(w, y1.clone(), y2.clone(), Rc::new(subst_expr(b, x, v)))
            }
        }
        ExprKind::Case(w, y1, e1, y2, e2) => {
            let w = subst_val(w, x, v);
            let e1n = if &**y1 == x {
                e1.clone()
            } else {
                Rc::new(subst_expr(e1, x, v))
            };
            let e2n = if &**y2 == x {
                e2.clone()
            } else {
                Rc::new(subst_expr(e2, x, v))
            };
            ExprKind::Case(w, y1.clone(), e1n, y2.clone(), e2n)
        }
        ExprKind::App(f, w) => ExprKind::App(Rc::new(subst_expr(f, x, v)), subst_val(w, x, v)),
        ExprKind::Let(y, e1, e2) => {
            let e1n = Rc::new(subst_expr(e1, x, v));
            if &**y == x {
                ExprKind::Let(y.clone(), e1n, e2.clone())
            } else {
                ExprKind::Let(y.clone(), e1n, Rc::new(subst_expr(e2, x, v)))
            }
        }
        ExprKind::Thunk(w, b) => {
            ExprKind::Thunk(subst_val(w, x, v), Rc::new(subst_expr(b, x, v)))
        }
        ExprKind::Force(w) => ExprKind::Force(subst_val(w, x, v)),
        ExprKind::Ref(n, w) => ExprKind::Ref(subst_val(n, x, v), subst_val(w, x, v)),
        ExprKind::Get(w) => ExprKind::Get(subst_val(w, x, v)),
        ExprKind::Scope(w, b) => {
            ExprKind::Scope(subst_val(w, x, v), Rc::new(subst_expr(b, x, v)))
        }
        ExprKind::NameApp(f, w) => ExprKind::NameApp(subst_val(f, x, v), subst_val(w, x, v)),
        ExprKind::Unpack(w, a, y, b) => {
            let w = subst_val(w, x, v);
            if &**y == x {
                ExprKind::Unpack(w, a.clone(), y.clone(), b.clone())
            } else {
                ExprKind::Unpack(w, a.clone(), y.clone(), Rc::new(subst_expr(b, x, v)))
            }
        }
        ExprKind::Anno(b, t) => ExprKind::Anno(Rc::new(subst_expr(b, x, v)), t.clone()),
        ExprKind::InstIdx(b, i) => ExprKind::InstIdx(Rc::new(subst_expr(b, x, v)), i.clone()),
        ExprKind::InstTy(b, t) => ExprKind::InstTy(Rc::new(subst_expr(b, x, v)), t.clone()),
        ExprKind::Match(w, arms) => ExprKind::Match(
            subst_val(w, x, v),
            arms.iter()
                .map(|arm| {
                    if arm.val_binders.iter().any(|b| &**b == x) {
                        arm.clone()
                    } else {
                        MatchArm {
                            ctor: arm.ctor.clone(),
                            idx_binders: arm.idx_binders.clone(),
                            val_binders: arm.val_binders.clone(),
                            body: Rc::new(subst_expr(&arm.body, x, v)),
                        }
                    }
                })
                .collect(),
        ),
        ExprKind::If(w, e1, e2) => ExprKind::If(
            subst_val(w, x, v),
            Rc::new(subst_expr(e1, x, v)),
            Rc::new(subst_expr(e2, x, v)),
        ),
        ExprKind::Prim(op, args) => {
            ExprKind::Prim(*op, args.iter().map(|a| subst_val(a, x, v)).collect())
        }
    };
    Expr { kind, span: e.span }
}

// ---------------------------------------------------------------------------
// Programs and declarations
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct CtorDecl {
    pub name: Ident,
    /// Quantifier prefix: index variable, sort, and constraint.
    pub quant: Vec<(Ident, IndexSort, Prop)>,
    pub args: Vec<ValueType>,
    /// The constructed type, an application of the datatype head.
    pub result: ValueType,
}

#[derive(Clone, Debug)]
pub struct DataDecl {
    pub name: Ident,
    pub kind: Kind,
    pub ctors: Vec<CtorDecl>,
}

#[derive(Clone, Debug)]
pub struct FnDecl {
    pub name: Ident,
    pub ty: EffType,
    /// The namespace the body is checked and run under; its thunk is
    /// seeded in the store with this scope.
    pub scope: NameTerm,
    pub body: Expr,
}

impl FnDecl {
    /// The store pointer that holds this function's thunk.
    pub fn pointer(&self) -> Name {
        Name::Sym(self.name.clone())
    }
}

#[derive(Clone, Debug)]
pub struct CellDecl {
    pub ptr: Name,
    pub ty: ValueType,
    pub val: Val,
}

#[derive(Clone, Debug, Default)]
pub struct Program {
    pub datatypes: Vec<DataDecl>,
    pub cells: Vec<CellDecl>,
    pub fns: Vec<FnDecl>,
    pub main: Option<(Expr, EffType)>,
}

impl Program {
    pub fn datatype(&self, d: &str) -> Option<&DataDecl> {
        self.datatypes.iter().find(|x| &*x.name == d)
    }

    pub fn ctor(&self, c: &str) -> Option<(&DataDecl, &CtorDecl)> {
        for d in &self.datatypes {
            for k in &d.ctors {
                if &*k.name == c {
                    return Some((d, k));
                }
            }
        }
        None
    }

    pub fn fn_decl(&self, f: &str) -> Option<&FnDecl> {
        self.fns.iter().find(|x| &*x.name == f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erase_strips_annotations() {
        let v = Val::anno(Val::unit(), ValueType::Unit);
        let e = Expr::new(ExprKind::Anno(
            Rc::new(Expr::ret(v)),
            EffType::ret(ValueType::Unit, crate::types::Effect::empty()),
        ));
        let erased = erase(&e);
        assert_eq!(erased.kind, ExprKind::Ret(Val::unit()));
        // Idempotent.
        assert_eq!(erase(&erased), erased);
    }

    #[test]
    fn erase_of_variable_is_identity() {
        let e = Expr::ret(Val::var("x"));
        assert_eq!(erase(&e), e);
    }

    #[test]
    fn erasure_commutes_with_substitution() {
        // |[v/x]e| = [|v|/x]|e| on a hand-picked term.
        let v = Val::anno(Val::name(Name::sym("n")), ValueType::Nm(Index::Empty));
        let e = Expr::new(ExprKind::Anno(
            Rc::new(Expr::let_(
                "y",
                Expr::ret(Val::var("x")),
                Expr::ret(Val::var("y")),
            )),
            EffType::ret(ValueType::Unit, crate::types::Effect::empty()),
        ));
        let lhs = erase(&subst_expr(&e, "x", &v));
        let rhs = subst_expr(&erase(&e), "x", &erase_val(&v));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn subst_reaches_name_functions() {
        // Substituting a name for x inside nmfn #a.(a * x).
        let f = Val::new(ValKind::NameFn(NameTerm::lam(
            "a",
            NameTerm::bin(NameTerm::var("a"), NameTerm::var("x")),
        )));
        let out = subst_val(&f, "x", &Val::name(Name::sym("k")));
        match &out.kind {
            ValKind::NameFn(m) => {
                assert!(m.is_closed(), "still open: {}", m);
            }
            other => panic!("unexpected {:?}", other),
        }
    }
}
