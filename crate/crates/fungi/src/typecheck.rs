//! Bidirectional type-and-effect checking for values and computations,
//! plus the datatype extension the example programs need.
//!
//! Introduction forms check, elimination forms synthesize; annotations
//! are required only on redexes.  Checking tracks the ambient namespace
//! (the write scope): allocations write the namespace image of their
//! name's set.  Effect sequencing threads through `let`; the residual
//! effect for the body is synthesized from the target by canonical set
//! decomposition.

use std::fmt;
use std::rc::Rc;

use crate::ast::{Expr, ExprKind, MatchArm, PrimOp, Program, Span, Val, ValKind};
use crate::index::{self, Index, IndexArg, IndexSort, SortEnv};
use crate::name::{self, Ident, Name, NameSort, NameTerm};
use crate::relations::{self, Assumptions, Budget, ExtractEntry};
use crate::types::{
    self, effect_coalesce, effect_subsumes, kind_check, subtype_eff, subtype_value, wf_eff_type,
    CompType, EffType, Effect, Kind, Prop, TyEnv, ValueType,
};

#[derive(Clone, Debug)]
pub enum CtxEntry {
    IndexVar(Ident, IndexSort),
    TypeVar(Ident, Kind),
    Con(Ident, Kind),
    RefPtr(Name, ValueType),
    ThkPtr(Name, EffType),
    ValVar(Ident, ValueType),
    Assume(Prop),
}

/// Ordered typing context; lookup is right-to-left.
#[derive(Clone, Debug, Default)]
pub struct TypingCtx {
    pub entries: Vec<CtxEntry>,
}

impl TypingCtx {
    pub fn new() -> TypingCtx {
        TypingCtx::default()
    }

    pub fn push(&self, e: CtxEntry) -> TypingCtx {
        let mut out = self.clone();
        out.entries.push(e);
        out
    }

    pub fn lookup_var(&self, x: &str) -> Option<&ValueType> {
        self.entries.iter().rev().find_map(|e| match e {
            CtxEntry::ValVar(y, t) if &**y == x => Some(t),
            _ => None,
        })
    }

    pub fn lookup_ref(&self, n: &Name) -> Option<&ValueType> {
        self.entries.iter().rev().find_map(|e| match e {
            CtxEntry::RefPtr(p, t) if p == n => Some(t),
            _ => None,
        })
    }

    pub fn lookup_thk(&self, n: &Name) -> Option<&EffType> {
        self.entries.iter().rev().find_map(|e| match e {
            CtxEntry::ThkPtr(p, t) if p == n => Some(t),
            _ => None,
        })
    }

    /// Extraction: index bindings become reflexive entries,
    /// propositions are split, everything else is dropped.
    pub fn extract(&self) -> Assumptions {
        relations::extract(self.entries.iter().map(|e| match e {
            CtxEntry::IndexVar(a, s) => ExtractEntry::IndexVar(a, s),
            CtxEntry::Assume(p) => ExtractEntry::Prop(p),
            _ => ExtractEntry::Other,
        }))
    }

    /// The kinding/sorting view of this context.
    pub fn ty_env(&self) -> TyEnv {
        let mut env = TyEnv::new();
        for e in &self.entries {
            match e {
                CtxEntry::IndexVar(a, s) => {
                    env.sorts.vars.push((a.clone(), s.clone()));
                }
                CtxEntry::TypeVar(a, k) | CtxEntry::Con(a, k) => {
                    env.type_vars.push((a.clone(), k.clone()));
                }
                _ => {}
            }
        }
        env.sorts.assumptions = self.extract();
        env
    }

    pub fn sort_env(&self) -> SortEnv {
        self.ty_env().sorts
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeError {
    pub span: Span,
    pub msg: String,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.msg)
    }
}

impl std::error::Error for TypeError {}

fn err<T>(span: Span, msg: impl Into<String>) -> Result<T, TypeError> {
    Err(TypeError {
        span,
        msg: msg.into(),
    })
}

/// A recorded typing derivation node.
#[derive(Clone, Debug)]
pub struct TyDeriv {
    pub rule: &'static str,
    pub conclusion: String,
    pub children: Vec<TyDeriv>,
}

impl TyDeriv {
    fn leaf(rule: &'static str, conclusion: String) -> TyDeriv {
        TyDeriv {
            rule,
            conclusion,
            children: Vec::new(),
        }
    }

    fn node(rule: &'static str, conclusion: String, children: Vec<TyDeriv>) -> TyDeriv {
        TyDeriv {
            rule,
            conclusion,
            children,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "rule": self.rule,
            "conclusion": self.conclusion,
            "children": self.children.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
        })
    }
}

pub struct Checker<'a> {
    pub prog: &'a Program,
    pub budget: Budget,
}

impl<'a> Checker<'a> {
    pub fn new(prog: &'a Program, budget: Budget) -> Checker<'a> {
        Checker { prog, budget }
    }

    /// The base context: datatype constructors, seeded cells, and the
    /// store-backed function thunks.
    pub fn base_ctx(&self) -> Result<TypingCtx, TypeError> {
        let mut ctx = TypingCtx::new();
        for d in &self.prog.datatypes {
            ctx = ctx.push(CtxEntry::Con(d.name.clone(), d.kind.clone()));
        }
        for cell in &self.prog.cells {
            ctx = ctx.push(CtxEntry::RefPtr(cell.ptr.clone(), cell.ty.clone()));
        }
        for f in &self.prog.fns {
            ctx = ctx.push(CtxEntry::ThkPtr(f.pointer(), f.ty.clone()));
        }
        Ok(ctx)
    }

    /// Check every declaration and the main expression.
    pub fn check_program(&self) -> Result<Vec<TyDeriv>, TypeError> {
        let ctx = self.base_ctx()?;
        let env = ctx.ty_env();
        let mut derivs = Vec::new();
        for d in &self.prog.datatypes {
            self.check_datatype_decl(&ctx, d)?;
        }
        for cell in &self.prog.cells {
            kind_check(&env, &cell.ty)
                .map_err(|e| TypeError {
                    span: cell.val.span,
                    msg: format!("cell {}: {}", cell.ptr, e),
                })?;
            let d = self.check_value(&ctx, &cell.val, &cell.ty)?;
            derivs.push(d);
        }
        for f in &self.prog.fns {
            wf_eff_type(&env, &f.ty).map_err(|e| TypeError {
                span: f.body.span,
                msg: format!("fn {}: {}", f.name, e),
            })?;
            name::check_name_sort(&env.sorts.name_ctx(), &f.scope, &NameSort::nm_to_nm())
                .map_err(|e| TypeError {
                    span: f.body.span,
                    msg: format!("fn {} scope: {}", f.name, e),
                })?;
            let d = self.check_comp(&ctx, &f.scope, &f.body, &f.ty)?;
            derivs.push(TyDeriv::node(
                "fn-decl",
                format!("{} : {}", f.name, f.ty),
                vec![d],
            ));
        }
        if let Some((main, ty)) = &self.prog.main {
            wf_eff_type(&env, ty).map_err(|e| TypeError {
                span: main.span,
                msg: format!("main: {}", e),
            })?;
            let d = self.check_comp(&ctx, &NameTerm::id(), main, ty)?;
            derivs.push(TyDeriv::node("main", format!("main : {}", ty), vec![d]));
        }
        Ok(derivs)
    }

    /// Each constructor's declared type must kind to `type` under its
    /// quantifier prefix, and construct its own datatype.
    pub fn check_datatype_decl(
        &self,
        ctx: &TypingCtx,
        d: &crate::ast::DataDecl,
    ) -> Result<(), TypeError> {
        for c in &d.ctors {
            let mut inner = ctx.clone();
            for (a, s, p) in &c.quant {
                inner = inner
                    .push(CtxEntry::IndexVar(a.clone(), s.clone()))
                    .push(CtxEntry::Assume(p.clone()));
            }
            let env = inner.ty_env();
            for arg in &c.args {
                kind_check(&env, arg).map_err(|e| TypeError {
                    span: Span::default(),
                    msg: format!("constructor {}: argument: {}", c.name, e),
                })?;
            }
            kind_check(&env, &c.result).map_err(|e| TypeError {
                span: Span::default(),
                msg: format!("constructor {}: result: {}", c.name, e),
            })?;
            let (head, _) = spine(&c.result);
            match head {
                ValueType::TCon(h) if h == d.name => {}
                _ => {
                    return err(
                        Span::default(),
                        format!("constructor {} does not construct {}", c.name, d.name),
                    )
                }
            }
        }
        Ok(())
    }

    // -----------------------------------------------------------------
    // Values
    // -----------------------------------------------------------------

    pub fn synth_value(&self, ctx: &TypingCtx, v: &Val) -> Result<(ValueType, TyDeriv), TypeError> {
        match &v.kind {
            ValKind::Var(x) => match ctx.lookup_var(x) {
                Some(t) => Ok((
                    t.clone(),
                    TyDeriv::leaf("vsyn-var", format!("{} => {}", x, t)),
                )),
                None => err(v.span, format!("unbound variable `{}`", x)),
            },
            ValKind::Anno(inner, t) => {
                kind_check(&ctx.ty_env(), t).map_err(|e| TypeError {
                    span: v.span,
                    msg: e.to_string(),
                })?;
                let d = self.check_value(ctx, inner, t)?;
                Ok((
                    t.clone(),
                    TyDeriv::node("vsyn-anno", format!("(v : {})", t), vec![d]),
                ))
            }
            // Pointer literals synthesize their singleton-set types.
            ValKind::RefPtr(n) => match ctx.lookup_ref(n) {
                Some(t) => {
                    let ty = ValueType::reft(Index::sing_name(n.clone()), t.clone());
                    Ok((ty.clone(), TyDeriv::leaf("vsyn-ref", format!("&{} => {}", n, ty))))
                }
                None => err(v.span, format!("pointer {} not in context", n)),
            },
            ValKind::ThunkPtr(n) => match ctx.lookup_thk(n) {
                Some(t) => {
                    let ty = ValueType::thk(Index::sing_name(n.clone()), t.clone());
                    Ok((ty.clone(), TyDeriv::leaf("vsyn-thunk", format!("^{} => {}", n, ty))))
                }
                None => err(v.span, format!("thunk pointer {} not in context", n)),
            },
            // Name functions synthesize their own term as the index,
            // as the scope premise requires.
            ValKind::NameFn(m) => {
                let resolved = self.resolve_name_term(ctx, m, v.span)?;
                name::check_name_sort(
                    &ctx.sort_env().name_ctx(),
                    &resolved,
                    &NameSort::nm_to_nm(),
                )
                .map_err(|e| TypeError {
                    span: v.span,
                    msg: e.to_string(),
                })?;
                let ty = ValueType::NmFn(resolved);
                Ok((
                    ty.clone(),
                    TyDeriv::leaf("vsyn-namefn", format!("nmfn => {}", ty)),
                ))
            }
            _ => err(
                v.span,
                "this value form needs a type annotation to synthesize",
            ),
        }
    }

    pub fn check_value(
        &self,
        ctx: &TypingCtx,
        v: &Val,
        t: &ValueType,
    ) -> Result<TyDeriv, TypeError> {
        match (&v.kind, t) {
            (_, ValueType::AllIdx(a, s, p, body)) => {
                let inner = ctx
                    .push(CtxEntry::IndexVar(a.clone(), s.clone()))
                    .push(CtxEntry::Assume((**p).clone()));
                let d = self.check_value(&inner, v, body)?;
                return Ok(TyDeriv::node(
                    "vchk-AllIndexIntro",
                    format!("v <= {}", t),
                    vec![d],
                ));
            }
            (ValKind::Unit, ValueType::Unit) => {
                return Ok(TyDeriv::leaf("vchk-unit", "() <= Unit".into()))
            }
            (ValKind::Nat(_), ValueType::TCon(d)) if &**d == "Nat" => {
                return Ok(TyDeriv::leaf("vchk-nat", "nat <= Nat".into()))
            }
            (ValKind::Bool(_), ValueType::TCon(d)) if &**d == "Bool" => {
                return Ok(TyDeriv::leaf("vchk-bool", "bool <= Bool".into()))
            }
            (ValKind::Pair(a, b), ValueType::Prod(ta, tb)) => {
                let d1 = self.check_value(ctx, a, ta)?;
                let d2 = self.check_value(ctx, b, tb)?;
                return Ok(TyDeriv::node(
                    "vchk-pair",
                    format!("(v1, v2) <= {}", t),
                    vec![d1, d2],
                ));
            }
            (ValKind::Inj(1, a), ValueType::Sum(ta, _)) => {
                let d = self.check_value(ctx, a, ta)?;
                return Ok(TyDeriv::node("vchk-inj1", format!("inj1 <= {}", t), vec![d]));
            }
            (ValKind::Inj(2, a), ValueType::Sum(_, tb)) => {
                let d = self.check_value(ctx, a, tb)?;
                return Ok(TyDeriv::node("vchk-inj2", format!("inj2 <= {}", t), vec![d]));
            }
            (ValKind::Name(n), ValueType::Nm(x)) => {
                let asm = ctx.extract();
                match index::member(&asm, &NameTerm::Lit(n.clone()), x, &self.budget) {
                    index::Membership::Proven => {
                        return Ok(TyDeriv::leaf(
                            "vchk-name",
                            format!("name {} <= Nm[{}]", n, x),
                        ))
                    }
                    _ => {
                        return err(
                            v.span,
                            format!("membership unprovable: {} in {}", n, x),
                        )
                    }
                }
            }
            (ValKind::NameFn(m), ValueType::NmFn(expected)) => {
                let resolved = self.resolve_name_term(ctx, m, v.span)?;
                name::check_name_sort(
                    &ctx.sort_env().name_ctx(),
                    &resolved,
                    &NameSort::nm_to_nm(),
                )
                .map_err(|e| TypeError {
                    span: v.span,
                    msg: e.to_string(),
                })?;
                match name::name_convertible(&resolved, expected) {
                    Ok(true) => {
                        return Ok(TyDeriv::leaf(
                            "vchk-namefn",
                            format!("nmfn {} <= {}", m, t),
                        ))
                    }
                    _ => {
                        return err(
                            v.span,
                            format!("name function {} not convertible to {}", resolved, expected),
                        )
                    }
                }
            }
            (ValKind::RefPtr(n), ValueType::RefT(x, inner)) => {
                let asm = ctx.extract();
                let stored = ctx
                    .lookup_ref(n)
                    .ok_or_else(|| TypeError {
                        span: v.span,
                        msg: format!("pointer {} not in context", n),
                    })?
                    .clone();
                if index::member(&asm, &NameTerm::Lit(n.clone()), x, &self.budget)
                    != index::Membership::Proven
                {
                    return err(v.span, format!("membership unprovable: {} in {}", n, x));
                }
                subtype_value(&ctx.ty_env(), &stored, inner, &self.budget).map_err(|e| {
                    TypeError {
                        span: v.span,
                        msg: e.to_string(),
                    }
                })?;
                return Ok(TyDeriv::leaf("vchk-ref", format!("&{} <= {}", n, t)));
            }
            (ValKind::ThunkPtr(n), ValueType::ThkT(x, inner)) => {
                let asm = ctx.extract();
                let stored = ctx
                    .lookup_thk(n)
                    .ok_or_else(|| TypeError {
                        span: v.span,
                        msg: format!("thunk pointer {} not in context", n),
                    })?
                    .clone();
                if index::member(&asm, &NameTerm::Lit(n.clone()), x, &self.budget)
                    != index::Membership::Proven
                {
                    return err(v.span, format!("membership unprovable: {} in {}", n, x));
                }
                subtype_eff(&ctx.ty_env(), &stored, inner, &self.budget).map_err(|e| {
                    TypeError {
                        span: v.span,
                        msg: e.to_string(),
                    }
                })?;
                return Ok(TyDeriv::leaf("vchk-thunk", format!("^{} <= {}", n, t)));
            }
            (ValKind::Pack(i, inner), ValueType::ExistsIdx(a, s, p, body)) => {
                index::check_index_sort(&ctx.sort_env(), i, s).map_err(|e| TypeError {
                    span: v.span,
                    msg: e.to_string(),
                })?;
                let arg = IndexArg::Idx(i.clone());
                let instp = p.subst(a, &arg);
                if !types::prop_holds(&ctx.ty_env(), &instp, &self.budget) {
                    return err(v.span, format!("pack constraint unprovable: {}", instp));
                }
                let d = self.check_value(ctx, inner, &types::subst_vt(body, a, &arg))?;
                return Ok(TyDeriv::node(
                    "vchk-ExistsIndexIntro",
                    format!("pack <= {}", t),
                    vec![d],
                ));
            }
            (ValKind::Ctor(c, insts, args), _) => {
                return self.check_ctor(ctx, v, c, insts, args, t);
            }
            _ => {}
        }
        // vchk-sub: synthesize and compare.
        let (got, d) = self.synth_value(ctx, v)?;
        subtype_value(&ctx.ty_env(), &got, t, &self.budget).map_err(|e| TypeError {
            span: v.span,
            msg: e.to_string(),
        })?;
        Ok(TyDeriv::node(
            "vchk-sub",
            format!("v <= {} via {}", t, got),
            vec![d],
        ))
    }

    /// Constructor application checks like a curried function at the
    /// declared type, with explicit index instantiations.
    fn check_ctor(
        &self,
        ctx: &TypingCtx,
        v: &Val,
        c: &Ident,
        insts: &[Index],
        args: &[Val],
        expected: &ValueType,
    ) -> Result<TyDeriv, TypeError> {
        let (_, ctor) = self
            .prog
            .ctor(c)
            .ok_or_else(|| TypeError {
                span: v.span,
                msg: format!("unknown constructor `{}`", c),
            })?;
        if insts.len() != ctor.quant.len() {
            return err(
                v.span,
                format!(
                    "constructor `{}` takes {} index instantiations, got {}",
                    c,
                    ctor.quant.len(),
                    insts.len()
                ),
            );
        }
        if args.len() != ctor.args.len() {
            return err(
                v.span,
                format!(
                    "constructor `{}` takes {} arguments, got {}",
                    c,
                    ctor.args.len(),
                    args.len()
                ),
            );
        }
        let senv = ctx.sort_env();
        let mut assign: Vec<(Ident, IndexArg)> = Vec::new();
        for ((a, s, _), i) in ctor.quant.iter().zip(insts.iter()) {
            index::check_index_sort(&senv, i, s).map_err(|e| TypeError {
                span: v.span,
                msg: format!("instantiation of {}: {}", a, e),
            })?;
            assign.push((a.clone(), IndexArg::Idx(i.clone())));
        }
        let subst_vt_all = |t: &ValueType| -> ValueType {
            let mut out = t.clone();
            for (a, arg) in &assign {
                out = types::subst_vt(&out, a, arg);
            }
            out
        };
        // The quantifier constraints must be entailed.
        for (a, _, p) in &ctor.quant {
            let mut instp = p.clone();
            for (b, arg) in &assign {
                instp = instp.subst(b, arg);
            }
            let _ = a;
            if !types::prop_holds(&ctx.ty_env(), &instp, &self.budget) {
                return err(
                    v.span,
                    format!("constructor `{}` constraint unprovable: {}", c, instp),
                );
            }
        }
        let mut children = Vec::new();
        for (arg, ty) in args.iter().zip(ctor.args.iter()) {
            children.push(self.check_value(ctx, arg, &subst_vt_all(ty))?);
        }
        let result = subst_vt_all(&ctor.result);
        subtype_value(&ctx.ty_env(), &result, expected, &self.budget).map_err(|e| TypeError {
            span: v.span,
            msg: format!("constructor `{}`: {}", c, e),
        })?;
        Ok(TyDeriv::node(
            "vchk-ctor",
            format!("{} <= {}", c, expected),
            children,
        ))
    }

    /// Replace program variables of singleton name type (or name
    /// function type) occurring in an embedded name term by their
    /// index-level representatives.
    fn resolve_name_term(
        &self,
        ctx: &TypingCtx,
        m: &NameTerm,
        span: Span,
    ) -> Result<NameTerm, TypeError> {
        let mut out = m.clone();
        for a in m.free_vars() {
            if let Some(t) = ctx.lookup_var(&a) {
                match t {
                    ValueType::Nm(ix) => {
                        let n = index::normalize_index(ix).map_err(|e| TypeError {
                            span,
                            msg: e.to_string(),
                        })?;
                        match n {
                            Index::Sing(rep) => out = name::subst(&out, &a, &rep),
                            _ => {
                                return err(
                                    span,
                                    format!(
                                        "variable `{}` used in a name term must have a singleton name type, found Nm[{}]",
                                        a, ix
                                    ),
                                )
                            }
                        }
                    }
                    ValueType::NmFn(f) => out = name::subst(&out, &a, f),
                    _ => {
                        return err(
                            span,
                            format!("variable `{}` of type {} cannot appear in a name term", a, t),
                        )
                    }
                }
            }
            // Otherwise it should be an index variable; sorting will
            // catch anything unbound.
        }
        Ok(out)
    }

    // -----------------------------------------------------------------
    // Computations
    // -----------------------------------------------------------------

    /// The name-set index of a value of name type, for allocation
    /// rules.
    fn name_set_of(&self, ctx: &TypingCtx, v: &Val) -> Result<Index, TypeError> {
        match &v.kind {
            ValKind::Name(n) => Ok(Index::sing_name(n.clone())),
            _ => {
                let (t, _) = self.synth_value(ctx, v)?;
                match t {
                    ValueType::Nm(x) => Ok(x),
                    other => err(v.span, format!("expected a name, found {}", other)),
                }
            }
        }
    }

    /// The namespace image of a set: `ns[[X]]`, normalized.
    fn scope_image(&self, ns: &NameTerm, x: &Index) -> Index {
        let mapped = Index::Map(ns.clone(), Rc::new(x.clone()));
        index::normalize_index(&mapped).unwrap_or(mapped)
    }

    pub fn synth_comp(
        &self,
        ctx: &TypingCtx,
        ns: &NameTerm,
        e: &Expr,
    ) -> Result<(EffType, TyDeriv), TypeError> {
        match &e.kind {
            ExprKind::Anno(inner, t) => {
                wf_eff_type(&ctx.ty_env(), t).map_err(|er| TypeError {
                    span: e.span,
                    msg: er.to_string(),
                })?;
                let d = self.check_comp(ctx, ns, inner, t)?;
                Ok((
                    t.clone(),
                    TyDeriv::node("esyn-anno", format!("(e : {})", t), vec![d]),
                ))
            }
            ExprKind::App(f, v) => {
                let (ft, d1) = self.synth_comp(ctx, ns, f)?;
                let (c, eps1) = match ft {
                    EffType::WithEff(c, eps) => (c, eps),
                    other => {
                        return err(
                            e.span,
                            format!("application head must synthesize an arrow, found {}; instantiate quantifiers first", other),
                        )
                    }
                };
                let (dom, cod) = match &*c {
                    CompType::Arrow(a, e2) => (a.clone(), e2.clone()),
                    other => {
                        return err(e.span, format!("applied a non-function of type {}", other))
                    }
                };
                let d2 = self.check_value(ctx, v, &dom)?;
                let out = effect_coalesce(&ctx.ty_env(), &cod, &eps1, &self.budget).map_err(
                    |er| TypeError {
                        span: e.span,
                        msg: er.to_string(),
                    },
                )?;
                Ok((
                    out.clone(),
                    TyDeriv::node("esyn-app", format!("e v => {}", out), vec![d1, d2]),
                ))
            }
            ExprKind::Force(v) => {
                let (t, d) = self.synth_value(ctx, v)?;
                let (x, inner) = match t {
                    ValueType::ThkT(x, inner) => (x, inner),
                    other => return err(e.span, format!("force of a non-thunk type {}", other)),
                };
                let out = effect_coalesce(
                    &ctx.ty_env(),
                    &inner,
                    &Effect::reads(x),
                    &self.budget,
                )
                .map_err(|er| TypeError {
                    span: e.span,
                    msg: er.to_string(),
                })?;
                Ok((
                    out.clone(),
                    TyDeriv::node("esyn-force", format!("force v => {}", out), vec![d]),
                ))
            }
            ExprKind::Get(v) => {
                let (t, d) = self.synth_value(ctx, v)?;
                let (x, inner) = match t {
                    ValueType::RefT(x, inner) => (x, inner),
                    other => return err(e.span, format!("get of a non-reference type {}", other)),
                };
                let out = EffType::ret((*inner).clone(), Effect::reads(x));
                Ok((
                    out.clone(),
                    TyDeriv::node("esyn-get", format!("get v => {}", out), vec![d]),
                ))
            }
            ExprKind::NameApp(f, v) => {
                let (ft, d1) = self.synth_value(ctx, f)?;
                let m = match ft {
                    ValueType::NmFn(m) => m,
                    other => {
                        return err(
                            e.span,
                            format!("name application head has type {}, expected a name function", other),
                        )
                    }
                };
                let (vt, d2) = self.synth_value(ctx, v)?;
                let i = match vt {
                    ValueType::Nm(i) => i,
                    other => {
                        return err(e.span, format!("name application argument has type {}", other))
                    }
                };
                let image = self.scope_image(&m, &i);
                let out = EffType::ret(ValueType::Nm(image), Effect::empty());
                Ok((
                    out.clone(),
                    TyDeriv::node("esyn-nameapp", format!("v_M v => {}", out), vec![d1, d2]),
                ))
            }
            ExprKind::InstIdx(inner, i) => {
                let (t, d) = self.synth_comp(ctx, ns, inner)?;
                match t {
                    EffType::AllIdx(a, s, p, body) => {
                        index::check_index_sort(&ctx.sort_env(), i, &s).map_err(|er| {
                            TypeError {
                                span: e.span,
                                msg: er.to_string(),
                            }
                        })?;
                        let arg = IndexArg::Idx(i.clone());
                        let instp = p.subst(&a, &arg);
                        if !types::prop_holds(&ctx.ty_env(), &instp, &self.budget) {
                            return err(
                                e.span,
                                format!("instantiation constraint unprovable: {}", instp),
                            );
                        }
                        let out = types::subst_et(&body, &a, &arg);
                        Ok((
                            out.clone(),
                            TyDeriv::node(
                                "esyn-AllIndexElim",
                                format!("e [{}] => {}", i, out),
                                vec![d],
                            ),
                        ))
                    }
                    other => err(
                        e.span,
                        format!("index instantiation of non-quantified type {}", other),
                    ),
                }
            }
            ExprKind::InstTy(inner, a) => {
                let (t, d) = self.synth_comp(ctx, ns, inner)?;
                match t {
                    EffType::AllType(al, k, body) => {
                        let got = kind_check(&ctx.ty_env(), a).map_err(|er| TypeError {
                            span: e.span,
                            msg: er.to_string(),
                        })?;
                        if got != k {
                            return err(
                                e.span,
                                format!("type instantiation kind mismatch: {} vs {}", got, k),
                            );
                        }
                        let out = types::subst_tyvar_et(&body, &al, a);
                        Ok((
                            out.clone(),
                            TyDeriv::node("esyn-AllElim", format!("e [{}] => {}", a, out), vec![d]),
                        ))
                    }
                    other => err(
                        e.span,
                        format!("type instantiation of non-polymorphic type {}", other),
                    ),
                }
            }
            ExprKind::Prim(op, args) => {
                let out = self.prim_type(ctx, *op, args, e.span)?;
                Ok((
                    out.clone(),
                    TyDeriv::leaf("esyn-prim", format!("{} => {}", op, out)),
                ))
            }
            _ => err(
                e.span,
                "this expression form needs a type annotation to synthesize",
            ),
        }
    }

    fn prim_type(
        &self,
        ctx: &TypingCtx,
        op: PrimOp,
        args: &[Val],
        span: Span,
    ) -> Result<EffType, TypeError> {
        for a in args {
            self.check_value(ctx, a, &ValueType::nat())?;
        }
        let out = match op {
            PrimOp::NatEq | PrimOp::HashBit => {
                if args.len() != 2 {
                    return err(span, "primitive takes two arguments");
                }
                ValueType::bool()
            }
            PrimOp::NatPlus => {
                if args.len() != 2 {
                    return err(span, "primitive takes two arguments");
                }
                ValueType::nat()
            }
        };
        Ok(EffType::ret(out, Effect::empty()))
    }

    pub fn check_comp(
        &self,
        ctx: &TypingCtx,
        ns: &NameTerm,
        e: &Expr,
        target: &EffType,
    ) -> Result<TyDeriv, TypeError> {
        // Quantified targets: only terminal expressions may introduce.
        match target {
            EffType::AllIdx(a, s, p, body) => {
                if !e.is_terminal() {
                    return err(
                        e.span,
                        "only terminal expressions check against an index quantifier",
                    );
                }
                let inner = ctx
                    .push(CtxEntry::IndexVar(a.clone(), s.clone()))
                    .push(CtxEntry::Assume((**p).clone()));
                let d = self.check_comp(&inner, ns, e, body)?;
                return Ok(TyDeriv::node(
                    "echk-AllIndexIntro",
                    format!("t <= {}", target),
                    vec![d],
                ));
            }
            EffType::AllType(a, k, body) => {
                if !e.is_terminal() {
                    return err(
                        e.span,
                        "only terminal expressions check against a type quantifier",
                    );
                }
                let inner = ctx.push(CtxEntry::TypeVar(a.clone(), k.clone()));
                let d = self.check_comp(&inner, ns, e, body)?;
                return Ok(TyDeriv::node(
                    "echk-AllIntro",
                    format!("t <= {}", target),
                    vec![d],
                ));
            }
            EffType::WithEff(_, _) => {}
        }
        let (comp, eps) = match target {
            EffType::WithEff(c, eps) => ((**c).clone(), eps.clone()),
            _ => unreachable!(),
        };
        match &e.kind {
            ExprKind::Ret(v) => {
                let a = match &comp {
                    CompType::Lift(a) => a,
                    other => {
                        return err(e.span, format!("ret checked against non-F type {}", other))
                    }
                };
                let d = self.check_value(ctx, v, a)?;
                self.require_subsumed(ctx, &Effect::empty(), &eps, e.span)?;
                Ok(TyDeriv::node(
                    "echk-ret",
                    format!("ret v <= {}", target),
                    vec![d],
                ))
            }
            ExprKind::Lam(x, body) => {
                let (dom, cod) = match &comp {
                    CompType::Arrow(a, e2) => (a.clone(), e2.clone()),
                    other => {
                        return err(e.span, format!("lambda checked against non-arrow {}", other))
                    }
                };
                kind_check(&ctx.ty_env(), &dom).map_err(|er| TypeError {
                    span: e.span,
                    msg: er.to_string(),
                })?;
                let inner = ctx.push(CtxEntry::ValVar(x.clone(), (*dom).clone()));
                let d = self.check_comp(&inner, ns, body, &cod)?;
                self.require_subsumed(ctx, &Effect::empty(), &eps, e.span)?;
                Ok(TyDeriv::node(
                    "echk-lam",
                    format!("\\{} <= {}", x, target),
                    vec![d],
                ))
            }
            ExprKind::Split(v, x1, x2, body) => {
                let (t, d0) = self.synth_value(ctx, v)?;
                let (ta, tb) = match t {
                    ValueType::Prod(a, b) => (a, b),
                    other => return err(v.span, format!("split of non-product type {}", other)),
                };
                let inner = ctx
                    .push(CtxEntry::ValVar(x1.clone(), (*ta).clone()))
                    .push(CtxEntry::ValVar(x2.clone(), (*tb).clone()));
                let d = self.check_comp(&inner, ns, body, target)?;
                Ok(TyDeriv::node(
                    "echk-split",
                    format!("split <= {}", target),
                    vec![d0, d],
                ))
            }
            ExprKind::Case(v, x1, e1, x2, e2) => {
                let (t, d0) = self.synth_value(ctx, v)?;
                let (ta, tb) = match t {
                    ValueType::Sum(a, b) => (a, b),
                    other => return err(v.span, format!("case of non-sum type {}", other)),
                };
                let d1 =
                    self.check_comp(&ctx.push(CtxEntry::ValVar(x1.clone(), (*ta).clone())), ns, e1, target)?;
                let d2 =
                    self.check_comp(&ctx.push(CtxEntry::ValVar(x2.clone(), (*tb).clone())), ns, e2, target)?;
                Ok(TyDeriv::node(
                    "echk-case",
                    format!("case <= {}", target),
                    vec![d0, d1, d2],
                ))
            }
            ExprKind::If(v, e1, e2) => {
                let d0 = self.check_value(ctx, v, &ValueType::bool())?;
                let d1 = self.check_comp(ctx, ns, e1, target)?;
                let d2 = self.check_comp(ctx, ns, e2, target)?;
                Ok(TyDeriv::node(
                    "echk-if",
                    format!("if <= {}", target),
                    vec![d0, d1, d2],
                ))
            }
            ExprKind::Match(v, arms) => self.check_match(ctx, ns, e, v, arms, target),
            ExprKind::Unpack(v, a, x, body) => {
                let (t, d0) = self.synth_value(ctx, v)?;
                let (b, s, p, inner_ty) = match t {
                    ValueType::ExistsIdx(b, s, p, inner) => (b, s, p, inner),
                    other => return err(v.span, format!("unpack of non-existential {}", other)),
                };
                // Rename the package variable to the binder.
                let arg = IndexArg::Idx(Index::Var(a.clone()));
                let inner_ctx = ctx
                    .push(CtxEntry::IndexVar(a.clone(), s.clone()))
                    .push(CtxEntry::Assume(p.subst(&b, &arg)))
                    .push(CtxEntry::ValVar(
                        x.clone(),
                        types::subst_vt(&inner_ty, &b, &arg),
                    ));
                let d = self.check_comp(&inner_ctx, ns, body, target)?;
                Ok(TyDeriv::node(
                    "echk-ExistsIndexElim",
                    format!("unpack <= {}", target),
                    vec![d0, d],
                ))
            }
            ExprKind::Let(x, e1, e2) => {
                let (t1, d1) = self.synth_comp(ctx, ns, e1)?;
                let (a, eps1) = match t1 {
                    EffType::WithEff(c, eps1) => match &*c {
                        CompType::Lift(a) => (a.clone(), eps1),
                        other => {
                            return err(
                                e1.span,
                                format!("let subject has non-F type {}", other),
                            )
                        }
                    },
                    other => {
                        return err(
                            e1.span,
                            format!("let subject synthesizes {}, instantiate quantifiers first", other),
                        )
                    }
                };
                let residual = self.residual_effect(ctx, &eps1, &eps, e.span)?;
                let inner = ctx.push(CtxEntry::ValVar(x.clone(), (*a).clone()));
                let d2 = self.check_comp(
                    &inner,
                    ns,
                    e2,
                    &EffType::with_eff(comp.clone(), residual),
                )?;
                Ok(TyDeriv::node(
                    "echk-let",
                    format!("let <= {}", target),
                    vec![d1, d2],
                ))
            }
            ExprKind::Thunk(v, body) => {
                let x = self.name_set_of(ctx, v)?;
                let image = self.scope_image(ns, &x);
                let (tk, et) = match &comp {
                    CompType::Lift(a) => match &**a {
                        ValueType::ThkT(tk, et) => (tk.clone(), et.clone()),
                        other => {
                            return err(
                                e.span,
                                format!("thunk checked against F {}, expected a thunk type", other),
                            )
                        }
                    },
                    other => {
                        return err(e.span, format!("thunk checked against non-F type {}", other))
                    }
                };
                let d1 = self.check_comp(ctx, ns, body, &et)?;
                // The allocated pointer set must fit the target.
                if !relations::subset_of(&ctx.extract(), &image, &tk, &self.budget) {
                    return err(
                        e.span,
                        format!("thunk pointer set {} not included in {}", image, tk),
                    );
                }
                self.require_subsumed(ctx, &Effect::writes(image), &eps, e.span)?;
                Ok(TyDeriv::node(
                    "echk-thunk",
                    format!("thunk <= {}", target),
                    vec![d1],
                ))
            }
            ExprKind::Ref(nv, v) => {
                let x = self.name_set_of(ctx, nv)?;
                let image = self.scope_image(ns, &x);
                let (rk, at) = match &comp {
                    CompType::Lift(a) => match &**a {
                        ValueType::RefT(rk, at) => (rk.clone(), at.clone()),
                        other => {
                            return err(
                                e.span,
                                format!("ref checked against F {}, expected a reference type", other),
                            )
                        }
                    },
                    other => {
                        return err(e.span, format!("ref checked against non-F type {}", other))
                    }
                };
                let d1 = self.check_value(ctx, v, &at)?;
                if !relations::subset_of(&ctx.extract(), &image, &rk, &self.budget) {
                    return err(
                        e.span,
                        format!("ref pointer set {} not included in {}", image, rk),
                    );
                }
                self.require_subsumed(ctx, &Effect::writes(image), &eps, e.span)?;
                Ok(TyDeriv::node(
                    "echk-ref",
                    format!("ref <= {}", target),
                    vec![d1],
                ))
            }
            ExprKind::Scope(v, body) => {
                let (t, d0) = self.synth_value(ctx, v)?;
                let m2 = match t {
                    ValueType::NmFn(m) => m,
                    other => {
                        return err(v.span, format!("scope of a value of type {}", other))
                    }
                };
                let composed = name::compose_namespaces(ns, &m2);
                let composed = name::beta_normalize(&composed).unwrap_or(composed);
                let d = self.check_comp(ctx, &composed, body, target)?;
                Ok(TyDeriv::node(
                    "echk-scope",
                    format!("scope <= {}", target),
                    vec![d0, d],
                ))
            }
            // Synthesizable forms fall back to echk-sub.
            _ => {
                let (got, d) = self.synth_comp(ctx, ns, e)?;
                subtype_eff(&ctx.ty_env(), &got, target, &self.budget).map_err(|er| {
                    TypeError {
                        span: e.span,
                        msg: er.to_string(),
                    }
                })?;
                Ok(TyDeriv::node(
                    "echk-sub",
                    format!("e <= {} via {}", target, got),
                    vec![d],
                ))
            }
        }
    }

    fn check_match(
        &self,
        ctx: &TypingCtx,
        ns: &NameTerm,
        e: &Expr,
        v: &Val,
        arms: &[MatchArm],
        target: &EffType,
    ) -> Result<TyDeriv, TypeError> {
        let (t, d0) = self.synth_value(ctx, v)?;
        let (head, scrut_idxs) = spine(&t);
        let dname = match head {
            ValueType::TCon(d) => d,
            other => return err(v.span, format!("match scrutinee has type {}", other)),
        };
        let data = self
            .prog
            .datatype(&dname)
            .ok_or_else(|| TypeError {
                span: v.span,
                msg: format!("`{}` is not a datatype", dname),
            })?;
        // Exhaustiveness.
        for c in &data.ctors {
            if !arms.iter().any(|a| a.ctor == c.name) {
                return err(e.span, format!("non-exhaustive match: missing `{}`", c.name));
            }
        }
        let mut children = vec![d0];
        for arm in arms {
            let ctor = data
                .ctors
                .iter()
                .find(|c| c.name == arm.ctor)
                .ok_or_else(|| TypeError {
                    span: e.span,
                    msg: format!("`{}` is not a constructor of {}", arm.ctor, dname),
                })?;
            if arm.idx_binders.len() != ctor.quant.len()
                || arm.val_binders.len() != ctor.args.len()
            {
                return err(
                    e.span,
                    format!("arm `{}` binder arity mismatch", arm.ctor),
                );
            }
            // Bind the arm's index variables with the constructor's
            // constraints, then equate the constructor's result indices
            // with the scrutinee's.
            let mut inner = ctx.clone();
            let mut assign: Vec<(Ident, IndexArg)> = Vec::new();
            for ((orig, s, _), b) in ctor.quant.iter().zip(arm.idx_binders.iter()) {
                inner = inner.push(CtxEntry::IndexVar(b.clone(), s.clone()));
                assign.push((orig.clone(), IndexArg::Idx(Index::Var(b.clone()))));
            }
            let subst_all = |t: &ValueType| -> ValueType {
                let mut out = t.clone();
                for (a, arg) in &assign {
                    out = types::subst_vt(&out, a, arg);
                }
                out
            };
            for (orig, _, p) in &ctor.quant {
                let _ = orig;
                let mut instp = p.clone();
                for (a, arg) in &assign {
                    instp = instp.subst(a, arg);
                }
                inner = inner.push(CtxEntry::Assume(instp));
            }
            let result_idxs = spine_indices_of(&subst_all(&ctor.result));
            if result_idxs.len() == scrut_idxs.len() {
                for (ri, si) in result_idxs.iter().zip(scrut_idxs.iter()) {
                    inner = inner.push(CtxEntry::Assume(Prop::Equiv(
                        ri.clone(),
                        si.clone(),
                        IndexSort::NmSet,
                    )));
                }
            }
            for (x, ty) in arm.val_binders.iter().zip(ctor.args.iter()) {
                inner = inner.push(CtxEntry::ValVar(x.clone(), subst_all(ty)));
            }
            children.push(self.check_comp(&inner, ns, &arm.body, target)?);
        }
        Ok(TyDeriv::node(
            "echk-match",
            format!("match <= {}", target),
            children,
        ))
    }

    /// `principal` must be subsumed by `target`.
    fn require_subsumed(
        &self,
        ctx: &TypingCtx,
        principal: &Effect,
        target: &Effect,
        span: Span,
    ) -> Result<(), TypeError> {
        effect_subsumes(&ctx.ty_env(), principal, target, &self.budget).map_err(|e| TypeError {
            span,
            msg: format!("write/write overlap or uncovered effect: {}", e),
        })
    }

    /// Solve for the residual effect of a let body: the target writes
    /// decompose as the subject's writes plus an apart remainder; reads
    /// of the subject must be covered by the target reads, and stay
    /// apart from the remaining writes.
    fn residual_effect(
        &self,
        ctx: &TypingCtx,
        eps1: &Effect,
        target: &Effect,
        span: Span,
    ) -> Result<Effect, TypeError> {
        let asm = ctx.extract();
        let rest_w = relations::decompose_superset(&asm, &eps1.writes, &target.writes, &self.budget)
            .ok_or_else(|| TypeError {
                span,
                msg: format!(
                    "write/write overlap: cannot decompose {} as {} plus an apart remainder",
                    target.writes, eps1.writes
                ),
            })?;
        if !relations::index_apart_holds(&asm, &eps1.writes, &rest_w, &self.budget) {
            return err(
                span,
                format!(
                    "write/write overlap: cannot show {} ## {}",
                    eps1.writes, rest_w
                ),
            );
        }
        if !relations::index_apart_holds(&asm, &eps1.reads, &rest_w, &self.budget) {
            return err(
                span,
                format!(
                    "read-before-write violation: cannot show {} ## {}",
                    eps1.reads, rest_w
                ),
            );
        }
        if !relations::subset_of(&asm, &eps1.reads, &target.reads, &self.budget) {
            return err(
                span,
                format!(
                    "read set {} not included in the target reads {}",
                    eps1.reads, target.reads
                ),
            );
        }
        Ok(Effect {
            writes: rest_w,
            reads: target.reads.clone(),
        })
    }
}

fn spine(t: &ValueType) -> (ValueType, Vec<Index>) {
    match t {
        ValueType::IdxApp(h, i) => {
            let (head, mut args) = spine(h);
            args.push(i.clone());
            (head, args)
        }
        other => (other.clone(), Vec::new()),
    }
}

fn spine_indices_of(t: &ValueType) -> Vec<Index> {
    spine(t).1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Effect;

    fn checker(prog: &Program) -> Checker<'_> {
        Checker::new(prog, Budget::default())
    }

    fn empty_prog() -> Program {
        Program::default()
    }

    #[test]
    fn unit_checks_at_unit() {
        let prog = empty_prog();
        let ck = checker(&prog);
        let ctx = TypingCtx::new();
        assert!(ck.check_value(&ctx, &Val::unit(), &ValueType::Unit).is_ok());
    }

    #[test]
    fn var_synthesizes_its_binding() {
        let prog = empty_prog();
        let ck = checker(&prog);
        let t = ValueType::prod(ValueType::Unit, ValueType::Unit);
        let ctx = TypingCtx::new().push(CtxEntry::ValVar(Rc::from("x"), t.clone()));
        let (got, d) = ck.synth_value(&ctx, &Val::var("x")).unwrap();
        assert_eq!(got, t);
        assert_eq!(d.rule, "vsyn-var");
    }

    #[test]
    fn name_checks_by_singleton_membership() {
        let prog = empty_prog();
        let ck = checker(&prog);
        let ctx = TypingCtx::new();
        let n = Name::sym("n");
        let t = ValueType::Nm(Index::sing_name(n.clone()));
        assert!(ck.check_value(&ctx, &Val::name(n), &t).is_ok());
    }

    #[test]
    fn membership_failure_is_reported() {
        let prog = empty_prog();
        let ck = checker(&prog);
        let ctx = TypingCtx::new();
        let t = ValueType::Nm(Index::sing_name(Name::sym("other")));
        let r = ck.check_value(&ctx, &Val::name(Name::sym("n")), &t);
        assert!(r.is_err());
        assert!(r.unwrap_err().msg.contains("membership"));
    }

    #[test]
    fn ret_checks_under_trivial_effects() {
        let prog = empty_prog();
        let ck = checker(&prog);
        let ctx = TypingCtx::new();
        let e = Expr::ret(Val::unit());
        let t = EffType::ret(ValueType::Unit, Effect::empty());
        let d = ck.check_comp(&ctx, &NameTerm::id(), &e, &t).unwrap();
        assert_eq!(d.rule, "echk-ret");
    }

    #[test]
    fn ref_writes_the_namespace_image() {
        // Under namespace #a.'t * a, ref[~'n] () checks against
        // F (Ref[{'t * 'n}] Unit) |> <{'t * 'n}; 0>.
        let prog = empty_prog();
        let ck = checker(&prog);
        let ctx = TypingCtx::new();
        let nsfn = NameTerm::lam(
            "a",
            NameTerm::bin(NameTerm::Lit(Name::sym("t")), NameTerm::var("a")),
        );
        let tn = Name::bin(Name::sym("t"), Name::sym("n"));
        let e = Expr::refe(Val::name(Name::sym("n")), Val::unit());
        let ty = EffType::with_eff(
            CompType::lift(ValueType::reft(Index::sing_name(tn.clone()), ValueType::Unit)),
            Effect::writes(Index::sing_name(tn)),
        );
        assert!(ck.check_comp(&ctx, &nsfn, &e, &ty).is_ok());
    }

    #[test]
    fn let_sequences_with_residual_solving() {
        // let _ = ref['n1] () in ref['n2] () at writes {'n1} % {'n2}.
        let prog = empty_prog();
        let ck = checker(&prog);
        let ctx = TypingCtx::new();
        let n1 = Name::sym("n1");
        let n2 = Name::sym("n2");
        let ref1 = Expr::new(ExprKind::Anno(
            Rc::new(Expr::refe(Val::name(n1.clone()), Val::unit())),
            EffType::with_eff(
                CompType::lift(ValueType::reft(Index::sing_name(n1.clone()), ValueType::Unit)),
                Effect::writes(Index::sing_name(n1.clone())),
            ),
        ));
        let e = Expr::let_("_", ref1, Expr::refe(Val::name(n2.clone()), Val::unit()));
        let ty = EffType::with_eff(
            CompType::lift(ValueType::reft(Index::sing_name(n2.clone()), ValueType::Unit)),
            Effect::writes(Index::apart(
                Index::sing_name(n1),
                Index::sing_name(n2),
            )),
        );
        assert!(ck.check_comp(&ctx, &NameTerm::id(), &e, &ty).is_ok());
    }

    #[test]
    fn let_rejects_write_overlap() {
        // Two refs at the same literal name cannot sequence.
        let prog = empty_prog();
        let ck = checker(&prog);
        let ctx = TypingCtx::new();
        let n = Name::sym("n");
        let ref1 = Expr::new(ExprKind::Anno(
            Rc::new(Expr::refe(Val::name(n.clone()), Val::unit())),
            EffType::with_eff(
                CompType::lift(ValueType::reft(Index::sing_name(n.clone()), ValueType::Unit)),
                Effect::writes(Index::sing_name(n.clone())),
            ),
        ));
        let e = Expr::let_("_", ref1, Expr::refe(Val::name(n.clone()), Val::unit()));
        let ty = EffType::with_eff(
            CompType::lift(ValueType::reft(Index::sing_name(n.clone()), ValueType::Unit)),
            Effect::writes(Index::sing_name(n)),
        );
        let r = ck.check_comp(&ctx, &NameTerm::id(), &e, &ty);
        assert!(r.is_err());
        let msg = r.unwrap_err().msg;
        assert!(msg.contains("overlap"), "got: {}", msg);
    }

    #[test]
    fn erase_annotate_round_trip() {
        use crate::ast::erase;
        let e = Expr::new(ExprKind::Anno(
            Rc::new(Expr::ret(Val::unit())),
            EffType::ret(ValueType::Unit, Effect::empty()),
        ));
        let bare = erase(&e);
        // Re-annotating the erased term gives back the same erasure.
        let re = Expr::new(ExprKind::Anno(
            Rc::new(bare.clone()),
            EffType::ret(ValueType::Unit, Effect::empty()),
        ));
        assert_eq!(erase(&re), bare);
    }
}
