//! Concrete syntax: lexer, parser, definition elaboration, printers.
//!
//! Name terms: `()` leaf, `'sym`, decimal numerals, `m1 * m2`
//! (right-associative), `#a.M`, juxtaposition application.
//! Indices: `{M}`, `0`, `X % Y`, `X + Y`, `M[[X]]`, `i[[X]]`, `i*[[X]]`,
//! `#a.i`, application by juxtaposition.
//! Types mirror the judgment forms: `F A`, `A -> E`, `C |> <W; R>`,
//! `Ref[i] A`, `Thk[i] E`, `Nm[i]`, `(Nm -> Nm)[M]`,
//! `forall a:Sort | P. A`, `exists a:Sort | P. A`.
//!
//! `nmtm` and `idxtm` definitions are transparent: the elaborator
//! substitutes them at parse time, so core terms contain only the
//! primitive constructors.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::rc::Rc;

use crate::ast::{
    CellDecl, CtorDecl, DataDecl, Expr, ExprKind, FnDecl, MatchArm, PrimOp, Program, Span, Val,
    ValKind,
};
use crate::index::{self, Index, IndexSort, Side};
use crate::name::{self, Ident, Name, NameSort, NameTerm};
use crate::relations::{Assumptions, Obligation, PropAtom, RelKind, RelTerm};
use crate::types::{CompType, EffType, Effect, Kind, Prop, ValueType};

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    SymLit(String),
    Num(u64),
    // punctuation, maximal munch
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBrack,
    RBrack,
    LLBrack,
    RRBrack,
    Lt,
    Gt,
    Comma,
    Dot,
    Colon,
    Semi,
    Eq,
    Hash,
    Percent,
    Plus,
    Star,
    Amp,
    Caret,
    Tilde,
    Bar,
    Backslash,
    FatArrow,   // =>
    Arrow,      // ->
    EffArrow,   // |>
    EqEq,       // ==
    HashHash,   // ##
    Turnstile,  // |-
    StarLLBrack, // *[[
}

#[derive(Clone, Debug)]
pub struct Lexed {
    pub tok: Tok,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub span: Span,
    pub msg: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.span, self.msg)
    }
}

impl std::error::Error for ParseError {}

pub fn lex(src: &str) -> Result<Vec<Lexed>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let n = chars.len();
    macro_rules! push {
        ($t:expr, $len:expr) => {{
            out.push(Lexed {
                tok: $t,
                span: Span { line, col },
            });
            col += $len;
            i += $len as usize;
        }};
    }
    while i < n {
        let c = chars[i];
        match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
            }
            ' ' | '\t' | '\r' => {
                col += 1;
                i += 1;
            }
            '/' if i + 1 < n && chars[i + 1] == '/' => {
                while i < n && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => push!(Tok::LParen, 1),
            ')' => push!(Tok::RParen, 1),
            '{' => push!(Tok::LBrace, 1),
            '}' => push!(Tok::RBrace, 1),
            '[' => {
                if i + 1 < n && chars[i + 1] == '[' {
                    push!(Tok::LLBrack, 2)
                } else {
                    push!(Tok::LBrack, 1)
                }
            }
            ']' => {
                if i + 1 < n && chars[i + 1] == ']' {
                    push!(Tok::RRBrack, 2)
                } else {
                    push!(Tok::RBrack, 1)
                }
            }
            '<' => push!(Tok::Lt, 1),
            '>' => push!(Tok::Gt, 1),
            ',' => push!(Tok::Comma, 1),
            '.' => push!(Tok::Dot, 1),
            ':' => push!(Tok::Colon, 1),
            ';' => push!(Tok::Semi, 1),
            '=' => {
                if i + 1 < n && chars[i + 1] == '>' {
                    push!(Tok::FatArrow, 2)
                } else if i + 1 < n && chars[i + 1] == '=' {
                    push!(Tok::EqEq, 2)
                } else {
                    push!(Tok::Eq, 1)
                }
            }
            '#' => {
                if i + 1 < n && chars[i + 1] == '#' {
                    push!(Tok::HashHash, 2)
                } else {
                    push!(Tok::Hash, 1)
                }
            }
            '%' => push!(Tok::Percent, 1),
            '+' => push!(Tok::Plus, 1),
            '*' => {
                if i + 2 < n && chars[i + 1] == '[' && chars[i + 2] == '[' {
                    push!(Tok::StarLLBrack, 3)
                } else {
                    push!(Tok::Star, 1)
                }
            }
            '&' => push!(Tok::Amp, 1),
            '^' => push!(Tok::Caret, 1),
            '~' => push!(Tok::Tilde, 1),
            '\\' => push!(Tok::Backslash, 1),
            '|' => {
                if i + 1 < n && chars[i + 1] == '>' {
                    push!(Tok::EffArrow, 2)
                } else if i + 1 < n && chars[i + 1] == '-' {
                    push!(Tok::Turnstile, 2)
                } else {
                    push!(Tok::Bar, 1)
                }
            }
            '-' => {
                if i + 1 < n && chars[i + 1] == '>' {
                    push!(Tok::Arrow, 2)
                } else {
                    return Err(ParseError {
                        span: Span { line, col },
                        msg: "stray `-`".into(),
                    });
                }
            }
            '\'' => {
                let mut j = i + 1;
                while j < n && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                if j == i + 1 {
                    return Err(ParseError {
                        span: Span { line, col },
                        msg: "expected a symbol name after `'`".into(),
                    });
                }
                let s: String = chars[i + 1..j].iter().collect();
                let len = (j - i) as u32;
                out.push(Lexed {
                    tok: Tok::SymLit(s),
                    span: Span { line, col },
                });
                col += len;
                i = j;
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < n && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let s: String = chars[i..j].iter().collect();
                let v: u64 = s.parse().map_err(|_| ParseError {
                    span: Span { line, col },
                    msg: "numeral out of range".into(),
                })?;
                let len = (j - i) as u32;
                out.push(Lexed {
                    tok: Tok::Num(v),
                    span: Span { line, col },
                });
                col += len;
                i = j;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < n && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let s: String = chars[i..j].iter().collect();
                let len = (j - i) as u32;
                out.push(Lexed {
                    tok: Tok::Ident(s),
                    span: Span { line, col },
                });
                col += len;
                i = j;
            }
            other => {
                return Err(ParseError {
                    span: Span { line, col },
                    msg: format!("unexpected character `{}`", other),
                })
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

pub struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
    nmtm_defs: HashMap<String, NameTerm>,
    idxtm_defs: HashMap<String, Index>,
    aliases: HashMap<String, (Vec<Ident>, ValueType)>,
    datatypes: Vec<DataDecl>,
    ctor_names: Vec<String>,
    fn_names: Vec<String>,
    cell_names: Vec<Name>,
}

impl Parser {
    pub fn new(src: &str) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
            nmtm_defs: HashMap::new(),
            idxtm_defs: HashMap::new(),
            aliases: HashMap::new(),
            datatypes: Vec::new(),
            ctor_names: Vec::new(),
            fn_names: Vec::new(),
            cell_names: Vec::new(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|l| &l.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|l| &l.tok)
    }

    fn span(&self) -> Span {
        self.toks
            .get(self.pos)
            .map(|l| l.span)
            .unwrap_or_else(|| {
                self.toks
                    .last()
                    .map(|l| l.span)
                    .unwrap_or_default()
            })
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            span: self.span(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {}", what))
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err(format!("expected {}", what)),
        }
    }

    fn kw(&mut self, word: &str) -> bool {
        if let Some(Tok::Ident(s)) = self.peek() {
            if s == word {
                self.pos += 1;
                return true;
            }
        }
        false
    }

    fn at_kw(&self, word: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == word)
    }

    // -------------------------------------------------------------
    // Names and name terms
    // -------------------------------------------------------------

    /// A literal name: `()`, `'sym`, decimal, `n * n`, parens.
    pub fn name_literal(&mut self) -> Result<Name, ParseError> {
        let lhs = self.name_literal_atom()?;
        if self.eat(&Tok::Star) {
            let rhs = self.name_literal()?;
            Ok(Name::bin(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn name_literal_atom(&mut self) -> Result<Name, ParseError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                if self.eat(&Tok::RParen) {
                    return Ok(Name::Leaf);
                }
                let n = self.name_literal()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(n)
            }
            Some(Tok::SymLit(s)) => {
                self.pos += 1;
                Ok(Name::sym(&s))
            }
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Name::Num(v))
            }
            _ => self.err("expected a name literal"),
        }
    }

    /// Name terms: `#a.M`, application by juxtaposition, `*`
    /// right-associative, atoms.
    pub fn name_term(&mut self) -> Result<NameTerm, ParseError> {
        if self.eat(&Tok::Hash) {
            let a = self.ident("a binder after `#`")?;
            self.expect(Tok::Dot, "`.`")?;
            let body = self.name_term()?;
            return Ok(NameTerm::Lam(Rc::from(a.as_str()), Rc::new(body)));
        }
        let lhs = self.name_term_app()?;
        if self.eat(&Tok::Star) {
            let rhs = self.name_term()?;
            return Ok(NameTerm::bin(lhs, rhs));
        }
        Ok(lhs)
    }

    fn name_term_app(&mut self) -> Result<NameTerm, ParseError> {
        let mut head = self.name_term_atom()?;
        loop {
            match self.peek() {
                Some(Tok::LParen) | Some(Tok::SymLit(_)) | Some(Tok::Num(_))
                | Some(Tok::Ident(_)) => {
                    let arg = self.name_term_atom()?;
                    head = NameTerm::app(head, arg);
                }
                _ => break,
            }
        }
        Ok(head)
    }

    fn name_term_atom(&mut self) -> Result<NameTerm, ParseError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                if self.eat(&Tok::RParen) {
                    return Ok(NameTerm::Lit(Name::Leaf));
                }
                let m = self.name_term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(m)
            }
            Some(Tok::SymLit(s)) => {
                self.pos += 1;
                Ok(NameTerm::Lit(Name::sym(&s)))
            }
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(NameTerm::Lit(Name::Num(v)))
            }
            Some(Tok::Ident(a)) => {
                self.pos += 1;
                if let Some(def) = self.nmtm_defs.get(&a) {
                    Ok(def.clone())
                } else {
                    Ok(NameTerm::Var(Rc::from(a.as_str())))
                }
            }
            _ => self.err("expected a name term"),
        }
    }

    // -------------------------------------------------------------
    // Sorts, kinds, propositions
    // -------------------------------------------------------------

    pub fn sort(&mut self) -> Result<IndexSort, ParseError> {
        let lhs = self.sort_atom()?;
        if self.eat(&Tok::Arrow) {
            // Name-term arrow: both sides must embed name sorts.
            let rhs = self.sort()?;
            let (l, r) = match (as_name_sort(&lhs), as_name_sort(&rhs)) {
                (Some(l), Some(r)) => (l, r),
                _ => return self.err("`->` joins name sorts; use `=>` for index arrows"),
            };
            return Ok(IndexSort::Nm(NameSort::arrow(l, r)));
        }
        if self.eat(&Tok::FatArrow) {
            let rhs = self.sort()?;
            return Ok(IndexSort::arrow(lhs, rhs));
        }
        if self.at_kw("x") {
            self.pos += 1;
            let rhs = self.sort()?;
            return Ok(IndexSort::prod(lhs, rhs));
        }
        Ok(lhs)
    }

    fn sort_atom(&mut self) -> Result<IndexSort, ParseError> {
        if self.eat(&Tok::LParen) {
            let s = self.sort()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(s);
        }
        if let Some(Tok::Num(1)) = self.peek() {
            self.pos += 1;
            return Ok(IndexSort::Unit);
        }
        let id = self.ident("a sort")?;
        match id.as_str() {
            "Nm" => Ok(IndexSort::nm()),
            "NmSet" => Ok(IndexSort::NmSet),
            _ => self.err(format!("unknown sort `{}`", id)),
        }
    }

    pub fn kind(&mut self) -> Result<Kind, ParseError> {
        if self.kw("type") {
            if self.eat(&Tok::FatArrow) {
                let k = self.kind()?;
                return Ok(Kind::TypeArrow(Rc::new(k)));
            }
            return Ok(Kind::Type);
        }
        let s = self.sort()?;
        self.expect(Tok::FatArrow, "`=>` in kind")?;
        let k = self.kind()?;
        Ok(Kind::IndexArrow(s, Rc::new(k)))
    }

    pub fn prop(&mut self) -> Result<Prop, ParseError> {
        let lhs = self.prop_atom()?;
        if self.kw("and") {
            let rhs = self.prop()?;
            return Ok(Prop::conj(lhs, rhs));
        }
        Ok(lhs)
    }

    fn prop_atom(&mut self) -> Result<Prop, ParseError> {
        if self.kw("tt") {
            return Ok(Prop::Tt);
        }
        let i = self.index()?;
        let apart = if self.eat(&Tok::HashHash) {
            true
        } else if self.eat(&Tok::EqEq) {
            false
        } else {
            return self.err("expected `##` or `==` in proposition");
        };
        let j = self.index()?;
        let sort = if self.eat(&Tok::Colon) {
            self.sort()?
        } else {
            IndexSort::NmSet
        };
        Ok(if apart {
            Prop::Apart(i, j, sort)
        } else {
            Prop::Equiv(i, j, sort)
        })
    }

    // -------------------------------------------------------------
    // Indices
    // -------------------------------------------------------------

    pub fn index(&mut self) -> Result<Index, ParseError> {
        if self.eat(&Tok::Hash) {
            let a = self.ident("a binder after `#`")?;
            self.expect(Tok::Dot, "`.`")?;
            let body = self.index()?;
            return Ok(Index::Lam(Rc::from(a.as_str()), Rc::new(body)));
        }
        let lhs = self.index_app()?;
        if self.eat(&Tok::Percent) {
            let rhs = self.index()?;
            return Ok(Index::apart(lhs, rhs));
        }
        if self.eat(&Tok::Plus) {
            let rhs = self.index()?;
            return Ok(Index::union(lhs, rhs));
        }
        Ok(lhs)
    }

    fn index_app(&mut self) -> Result<Index, ParseError> {
        let mut head = self.index_suffixed()?;
        loop {
            match self.peek() {
                Some(Tok::LParen) | Some(Tok::Ident(_)) | Some(Tok::LBrace) => {
                    // Application by juxtaposition; `0` would be
                    // ambiguous with numerals, so parenthesize it.
                    let arg = self.index_suffixed()?;
                    head = Index::app(head, arg);
                }
                _ => break,
            }
        }
        Ok(head)
    }

    fn index_suffixed(&mut self) -> Result<Index, ParseError> {
        let mut head = self.index_atom()?;
        loop {
            match self.peek() {
                Some(Tok::LLBrack) => {
                    self.pos += 1;
                    let arg = self.index()?;
                    self.expect(Tok::RRBrack, "`]]`")?;
                    head = match index_as_name_fn(&head) {
                        Some(m) => Index::Map(m, Rc::new(arg)),
                        None => Index::flat_map(head, arg),
                    };
                }
                Some(Tok::StarLLBrack) => {
                    self.pos += 1;
                    let arg = self.index()?;
                    self.expect(Tok::RRBrack, "`]]`")?;
                    head = match index_as_builder(&head) {
                        Some(f) => Index::star(f, arg),
                        None => Index::star(head, arg),
                    };
                }
                Some(Tok::Dot) => {
                    match self.peek2() {
                        Some(Tok::Num(1)) => {
                            self.pos += 2;
                            head = Index::proj(Side::Fst, head);
                        }
                        Some(Tok::Num(2)) => {
                            self.pos += 2;
                            head = Index::proj(Side::Snd, head);
                        }
                        _ => break,
                    }
                }
                _ => break,
            }
        }
        Ok(head)
    }

    fn index_atom(&mut self) -> Result<Index, ParseError> {
        match self.peek().cloned() {
            Some(Tok::LBrace) => {
                self.pos += 1;
                let m = self.name_term()?;
                self.expect(Tok::RBrace, "`}`")?;
                Ok(Index::Sing(m))
            }
            Some(Tok::Num(0)) => {
                self.pos += 1;
                Ok(Index::Empty)
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                if self.eat(&Tok::RParen) {
                    return Ok(Index::Unit);
                }
                // Try the index grammar; a parenthesized name term
                // (e.g. `(#a.'t * a)` before `[[ ]]`) is the fallback.
                let save = self.pos;
                match self.index() {
                    Ok(first) => {
                        if self.eat(&Tok::Comma) {
                            let second = self.index()?;
                            self.expect(Tok::RParen, "`)`")?;
                            return Ok(Index::pair(first, second));
                        }
                        if self.eat(&Tok::RParen) {
                            return Ok(first);
                        }
                        self.pos = save;
                    }
                    Err(_) => {
                        self.pos = save;
                    }
                }
                let m = self.name_term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Index::NmTm(m))
            }
            Some(Tok::Hash) => self.index(),
            Some(Tok::Ident(a)) => {
                self.pos += 1;
                if let Some(def) = self.idxtm_defs.get(&a) {
                    Ok(def.clone())
                } else if let Some(def) = self.nmtm_defs.get(&a) {
                    Ok(Index::NmTm(def.clone()))
                } else {
                    Ok(Index::Var(Rc::from(a.as_str())))
                }
            }
            Some(Tok::SymLit(_)) => {
                // A bare name literal used where a name-sorted index is
                // expected.
                let n = self.name_literal()?;
                Ok(Index::NmTm(NameTerm::Lit(n)))
            }
            _ => self.err("expected an index"),
        }
    }

    // -------------------------------------------------------------
    // Types
    // -------------------------------------------------------------

    pub fn eff_type(&mut self) -> Result<EffType, ParseError> {
        if self.kw("forall") {
            let a = self.ident("a quantifier variable")?;
            self.expect(Tok::Colon, "`:`")?;
            // Type quantifier or index quantifier.
            if self.at_kw("type") || matches!(self.peek(), Some(Tok::Ident(s)) if s == "type") {
                self.pos += 1;
                self.expect(Tok::Dot, "`.`")?;
                let e = self.eff_type()?;
                return Ok(EffType::AllType(Rc::from(a.as_str()), Kind::Type, Rc::new(e)));
            }
            let s = self.sort()?;
            let p = if self.eat(&Tok::Bar) {
                self.prop()?
            } else {
                Prop::Tt
            };
            self.expect(Tok::Dot, "`.`")?;
            let e = self.eff_type()?;
            return Ok(EffType::AllIdx(
                Rc::from(a.as_str()),
                s,
                Rc::new(p),
                Rc::new(e),
            ));
        }
        let c = self.comp_type()?;
        let eff = if self.eat(&Tok::EffArrow) {
            self.effect()?
        } else {
            Effect::empty()
        };
        Ok(EffType::with_eff(c, eff))
    }

    pub fn effect(&mut self) -> Result<Effect, ParseError> {
        self.expect(Tok::Lt, "`<` opening an effect")?;
        let w = self.index()?;
        self.expect(Tok::Semi, "`;`")?;
        let r = self.index()?;
        self.expect(Tok::Gt, "`>` closing an effect")?;
        Ok(Effect { writes: w, reads: r })
    }

    pub fn comp_type(&mut self) -> Result<CompType, ParseError> {
        if self.kw("F") {
            let a = self.value_type_atom_app()?;
            return Ok(CompType::lift(a));
        }
        let a = self.value_type_atom_app()?;
        self.expect(Tok::Arrow, "`->` (or `F` for a lift)")?;
        let e = self.eff_type()?;
        Ok(CompType::arrow(a, e))
    }

    pub fn value_type(&mut self) -> Result<ValueType, ParseError> {
        if self.at_kw("forall") || self.at_kw("exists") {
            let is_forall = self.kw("forall");
            if !is_forall {
                self.expect(Tok::Ident("exists".into()), "`exists`").ok();
            }
            let a = self.ident("a quantifier variable")?;
            self.expect(Tok::Colon, "`:`")?;
            let s = self.sort()?;
            let p = if self.eat(&Tok::Bar) {
                self.prop()?
            } else {
                Prop::Tt
            };
            self.expect(Tok::Dot, "`.`")?;
            let body = self.value_type()?;
            return Ok(if is_forall {
                ValueType::AllIdx(Rc::from(a.as_str()), s, Rc::new(p), Rc::new(body))
            } else {
                ValueType::ExistsIdx(Rc::from(a.as_str()), s, Rc::new(p), Rc::new(body))
            });
        }
        let lhs = self.value_type_atom_app()?;
        if self.eat(&Tok::Plus) {
            let rhs = self.value_type()?;
            return Ok(ValueType::sum(lhs, rhs));
        }
        if self.at_kw("x") {
            self.pos += 1;
            let rhs = self.value_type()?;
            return Ok(ValueType::prod(lhs, rhs));
        }
        Ok(lhs)
    }

    fn value_type_atom_app(&mut self) -> Result<ValueType, ParseError> {
        let mut head = self.value_type_atom()?;
        loop {
            match self.peek() {
                Some(Tok::LBrack) => {
                    self.pos += 1;
                    let i = self.index()?;
                    self.expect(Tok::RBrack, "`]`")?;
                    head = self.apply_type_index(head, i)?;
                }
                _ => break,
            }
        }
        Ok(head)
    }

    /// Apply a type head to an index, expanding aliases when saturated.
    fn apply_type_index(&mut self, head: ValueType, i: Index) -> Result<ValueType, ParseError> {
        let applied = ValueType::idx_app(head, i);
        // Expand a fully-applied alias.
        let (h, args) = type_spine(&applied);
        if let ValueType::TCon(d) = &h {
            if let Some((params, body)) = self.aliases.get(&**d).cloned() {
                if args.len() == params.len() {
                    let mut out = body;
                    for (p, a) in params.iter().zip(args.iter()) {
                        out = crate::types::subst_vt(&out, p, &index::IndexArg::Idx(a.clone()));
                    }
                    return Ok(out);
                }
            }
        }
        Ok(applied)
    }

    fn value_type_atom(&mut self) -> Result<ValueType, ParseError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                // `(Nm -> Nm)[M]` is the name-function singleton.
                if self.at_kw("Nm") && self.peek2() == Some(&Tok::Arrow) {
                    self.pos += 2;
                    let id = self.ident("`Nm`")?;
                    if id != "Nm" {
                        return self.err("expected `Nm -> Nm`");
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    self.expect(Tok::LBrack, "`[` for the name function index")?;
                    let m = self.name_term()?;
                    self.expect(Tok::RBrack, "`]`")?;
                    return Ok(ValueType::NmFn(m));
                }
                let t = self.value_type()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            Some(Tok::Ident(id)) => match id.as_str() {
                "Unit" => {
                    self.pos += 1;
                    Ok(ValueType::Unit)
                }
                "Ref" => {
                    self.pos += 1;
                    self.expect(Tok::LBrack, "`[`")?;
                    let i = self.index()?;
                    self.expect(Tok::RBrack, "`]`")?;
                    let a = self.value_type_atom_app()?;
                    Ok(ValueType::reft(i, a))
                }
                "Thk" => {
                    self.pos += 1;
                    self.expect(Tok::LBrack, "`[`")?;
                    let i = self.index()?;
                    self.expect(Tok::RBrack, "`]`")?;
                    self.expect(Tok::LParen, "`(` around the thunk's type")?;
                    let e = self.eff_type()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(ValueType::thk(i, e))
                }
                "Nm" => {
                    self.pos += 1;
                    self.expect(Tok::LBrack, "`[`")?;
                    let i = self.index()?;
                    self.expect(Tok::RBrack, "`]`")?;
                    Ok(ValueType::Nm(i))
                }
                "forall" | "exists" => self.value_type(),
                _ => {
                    self.pos += 1;
                    // Zero-argument alias?
                    if let Some((params, body)) = self.aliases.get(&id).cloned() {
                        if params.is_empty() {
                            return Ok(body);
                        }
                    }
                    Ok(ValueType::con(&id))
                }
            },
            _ => self.err("expected a type"),
        }
    }

    // -------------------------------------------------------------
    // Values
    // -------------------------------------------------------------

    pub fn value(&mut self) -> Result<Val, ParseError> {
        let span = self.span();
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                if self.eat(&Tok::RParen) {
                    return Ok(Val::at(ValKind::Unit, span));
                }
                let first = self.value()?;
                if self.eat(&Tok::Comma) {
                    let second = self.value()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Val::at(
                        ValKind::Pair(Rc::new(first), Rc::new(second)),
                        span,
                    ));
                }
                if self.eat(&Tok::Colon) {
                    let t = self.value_type()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Val::at(ValKind::Anno(Rc::new(first), t), span));
                }
                self.expect(Tok::RParen, "`)`")?;
                Ok(first)
            }
            Some(Tok::Tilde) => {
                self.pos += 1;
                let n = self.name_literal()?;
                Ok(Val::at(ValKind::Name(n), span))
            }
            Some(Tok::Amp) => {
                self.pos += 1;
                let n = self.name_literal()?;
                Ok(Val::at(ValKind::RefPtr(n), span))
            }
            Some(Tok::Caret) => {
                self.pos += 1;
                let n = self.name_literal()?;
                Ok(Val::at(ValKind::ThunkPtr(n), span))
            }
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Val::at(ValKind::Nat(v), span))
            }
            Some(Tok::Ident(id)) => match id.as_str() {
                "true" => {
                    self.pos += 1;
                    Ok(Val::at(ValKind::Bool(true), span))
                }
                "false" => {
                    self.pos += 1;
                    Ok(Val::at(ValKind::Bool(false), span))
                }
                "inj1" => {
                    self.pos += 1;
                    let v = self.value()?;
                    Ok(Val::at(ValKind::Inj(1, Rc::new(v)), span))
                }
                "inj2" => {
                    self.pos += 1;
                    let v = self.value()?;
                    Ok(Val::at(ValKind::Inj(2, Rc::new(v)), span))
                }
                "nmfn" => {
                    self.pos += 1;
                    let m = if self.eat(&Tok::LParen) {
                        let m = self.name_term()?;
                        self.expect(Tok::RParen, "`)`")?;
                        m
                    } else {
                        self.name_term()?
                    };
                    Ok(Val::at(ValKind::NameFn(m), span))
                }
                "pack" => {
                    self.pos += 1;
                    self.expect(Tok::LBrack, "`[`")?;
                    let i = self.index()?;
                    self.expect(Tok::RBrack, "`]`")?;
                    let v = self.value()?;
                    Ok(Val::at(ValKind::Pack(i, Rc::new(v)), span))
                }
                _ if self.ctor_names.contains(&id) => {
                    self.pos += 1;
                    let mut insts = Vec::new();
                    while self.peek() == Some(&Tok::LBrack) {
                        self.pos += 1;
                        insts.push(self.index()?);
                        self.expect(Tok::RBrack, "`]`")?;
                    }
                    let mut args = Vec::new();
                    if self.eat(&Tok::LParen) {
                        if !self.eat(&Tok::RParen) {
                            loop {
                                args.push(self.value()?);
                                if !self.eat(&Tok::Comma) {
                                    break;
                                }
                            }
                            self.expect(Tok::RParen, "`)`")?;
                        }
                    }
                    Ok(Val::at(
                        ValKind::Ctor(Rc::from(id.as_str()), insts, args),
                        span,
                    ))
                }
                _ => {
                    self.pos += 1;
                    if self.fn_names.contains(&id) {
                        Ok(Val::at(ValKind::ThunkPtr(Name::sym(&id)), span))
                    } else if self.cell_names.contains(&Name::sym(&id)) {
                        Ok(Val::at(ValKind::RefPtr(Name::sym(&id)), span))
                    } else {
                        Ok(Val::at(ValKind::Var(Rc::from(id.as_str())), span))
                    }
                }
            },
            _ => self.err("expected a value"),
        }
    }

    // -------------------------------------------------------------
    // Expressions
    // -------------------------------------------------------------

    pub fn expr(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        if self.kw("ret") {
            let v = self.value()?;
            return Ok(Expr::at(ExprKind::Ret(v), span));
        }
        if self.eat(&Tok::Backslash) {
            let x = self.ident("a binder after `\\`")?;
            self.expect(Tok::Dot, "`.`")?;
            let e = self.expr()?;
            return Ok(Expr::at(ExprKind::Lam(Rc::from(x.as_str()), Rc::new(e)), span));
        }
        if self.kw("let") {
            // `let (a, b) = e1 in e2` is split sugar.
            if self.peek() == Some(&Tok::LParen) {
                self.pos += 1;
                let x1 = self.ident("a binder")?;
                self.expect(Tok::Comma, "`,`")?;
                let x2 = self.ident("a binder")?;
                self.expect(Tok::RParen, "`)`")?;
                self.expect(Tok::Eq, "`=`")?;
                let e1 = self.expr()?;
                if !self.kw("in") {
                    return self.err("expected `in`");
                }
                let e2 = self.expr()?;
                let tmp: Ident = Rc::from("_split");
                let split = Expr::at(
                    ExprKind::Split(
                        Val::new(ValKind::Var(tmp.clone())),
                        Rc::from(x1.as_str()),
                        Rc::from(x2.as_str()),
                        Rc::new(e2),
                    ),
                    span,
                );
                return Ok(Expr::at(
                    ExprKind::Let(tmp, Rc::new(e1), Rc::new(split)),
                    span,
                ));
            }
            let x = self.ident("a binder")?;
            self.expect(Tok::Eq, "`=`")?;
            let e1 = self.expr()?;
            if !self.kw("in") {
                return self.err("expected `in`");
            }
            let e2 = self.expr()?;
            return Ok(Expr::at(
                ExprKind::Let(Rc::from(x.as_str()), Rc::new(e1), Rc::new(e2)),
                span,
            ));
        }
        if self.kw("split") {
            let v = self.value()?;
            if !self.kw("as") {
                return self.err("expected `as`");
            }
            let x1 = self.ident("a binder")?;
            self.expect(Tok::Comma, "`,`")?;
            let x2 = self.ident("a binder")?;
            if !self.kw("in") {
                return self.err("expected `in`");
            }
            let e = self.expr()?;
            return Ok(Expr::at(
                ExprKind::Split(v, Rc::from(x1.as_str()), Rc::from(x2.as_str()), Rc::new(e)),
                span,
            ));
        }
        if self.kw("case") {
            let v = self.value()?;
            self.expect(Tok::LBrace, "`{`")?;
            if !self.kw("inj1") {
                return self.err("expected `inj1`");
            }
            let x1 = self.ident("a binder")?;
            self.expect(Tok::FatArrow, "`=>`")?;
            let e1 = self.expr()?;
            self.expect(Tok::Bar, "`|`")?;
            if !self.kw("inj2") {
                return self.err("expected `inj2`");
            }
            let x2 = self.ident("a binder")?;
            self.expect(Tok::FatArrow, "`=>`")?;
            let e2 = self.expr()?;
            self.expect(Tok::RBrace, "`}`")?;
            return Ok(Expr::at(
                ExprKind::Case(
                    v,
                    Rc::from(x1.as_str()),
                    Rc::new(e1),
                    Rc::from(x2.as_str()),
                    Rc::new(e2),
                ),
                span,
            ));
        }
        if self.kw("match") {
            let v = self.value()?;
            self.expect(Tok::LBrace, "`{`")?;
            let mut arms = Vec::new();
            loop {
                let ctor = self.ident("a constructor name")?;
                let mut idx_binders = Vec::new();
                while self.peek() == Some(&Tok::LBrack) {
                    self.pos += 1;
                    idx_binders.push(Rc::from(self.ident("an index binder")?.as_str()));
                    self.expect(Tok::RBrack, "`]`")?;
                }
                let mut val_binders = Vec::new();
                if self.eat(&Tok::LParen) {
                    if !self.eat(&Tok::RParen) {
                        loop {
                            val_binders.push(Rc::from(self.ident("a binder")?.as_str()));
                            if !self.eat(&Tok::Comma) {
                                break;
                            }
                        }
                        self.expect(Tok::RParen, "`)`")?;
                    }
                }
                self.expect(Tok::FatArrow, "`=>`")?;
                let body = self.expr()?;
                arms.push(MatchArm {
                    ctor: Rc::from(ctor.as_str()),
                    idx_binders,
                    val_binders,
                    body: Rc::new(body),
                });
                if !self.eat(&Tok::Bar) {
                    break;
                }
            }
            self.expect(Tok::RBrace, "`}`")?;
            return Ok(Expr::at(ExprKind::Match(v, arms), span));
        }
        if self.kw("if") {
            let v = self.value()?;
            self.expect(Tok::LBrace, "`{`")?;
            let e1 = self.expr()?;
            self.expect(Tok::RBrace, "`}`")?;
            if !self.kw("else") {
                return self.err("expected `else`");
            }
            self.expect(Tok::LBrace, "`{`")?;
            let e2 = self.expr()?;
            self.expect(Tok::RBrace, "`}`")?;
            return Ok(Expr::at(ExprKind::If(v, Rc::new(e1), Rc::new(e2)), span));
        }
        if self.kw("unpack") {
            let v = self.value()?;
            if !self.kw("as") {
                return self.err("expected `as`");
            }
            let a = self.ident("an index binder")?;
            self.expect(Tok::Comma, "`,`")?;
            let x = self.ident("a binder")?;
            if !self.kw("in") {
                return self.err("expected `in`");
            }
            let e = self.expr()?;
            return Ok(Expr::at(
                ExprKind::Unpack(v, Rc::from(a.as_str()), Rc::from(x.as_str()), Rc::new(e)),
                span,
            ));
        }
        if self.kw("thunk") {
            self.expect(Tok::LBrack, "`[`")?;
            let v = self.value()?;
            self.expect(Tok::RBrack, "`]`")?;
            self.expect(Tok::LBrace, "`{`")?;
            let e = self.expr()?;
            self.expect(Tok::RBrace, "`}`")?;
            return Ok(Expr::at(ExprKind::Thunk(v, Rc::new(e)), span));
        }
        if self.kw("scope") {
            self.expect(Tok::LBrack, "`[`")?;
            let v = self.value()?;
            self.expect(Tok::RBrack, "`]`")?;
            self.expect(Tok::LBrace, "`{`")?;
            let e = self.expr()?;
            self.expect(Tok::RBrace, "`}`")?;
            return Ok(Expr::at(ExprKind::Scope(v, Rc::new(e)), span));
        }
        self.app_chain()
    }

    fn expr_atom(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        if self.kw("force") {
            let v = self.value()?;
            return Ok(Expr::at(ExprKind::Force(v), span));
        }
        if self.kw("get") {
            let v = self.value()?;
            return Ok(Expr::at(ExprKind::Get(v), span));
        }
        if self.kw("ref") {
            self.expect(Tok::LBrack, "`[`")?;
            let nv = self.value()?;
            self.expect(Tok::RBrack, "`]`")?;
            let v = self.value()?;
            return Ok(Expr::at(ExprKind::Ref(nv, v), span));
        }
        if self.kw("nmapp") {
            let f = self.value()?;
            let v = self.value()?;
            return Ok(Expr::at(ExprKind::NameApp(f, v), span));
        }
        if self.kw("eq") {
            let a = self.value()?;
            let b = self.value()?;
            return Ok(Expr::at(ExprKind::Prim(PrimOp::NatEq, vec![a, b]), span));
        }
        if self.kw("plus") {
            let a = self.value()?;
            let b = self.value()?;
            return Ok(Expr::at(ExprKind::Prim(PrimOp::NatPlus, vec![a, b]), span));
        }
        if self.kw("hashbit") {
            let a = self.value()?;
            let b = self.value()?;
            return Ok(Expr::at(ExprKind::Prim(PrimOp::HashBit, vec![a, b]), span));
        }
        if self.peek() == Some(&Tok::LParen) {
            // `(e)` or `(e : E)`.
            let save = self.pos;
            self.pos += 1;
            let e = self.expr();
            match e {
                Ok(e) => {
                    if self.eat(&Tok::Colon) {
                        let t = self.eff_type()?;
                        self.expect(Tok::RParen, "`)`")?;
                        return Ok(Expr::at(ExprKind::Anno(Rc::new(e), t), span));
                    }
                    if self.eat(&Tok::RParen) {
                        return Ok(e);
                    }
                    self.pos = save;
                }
                Err(_) => {
                    self.pos = save;
                }
            }
        }
        // A value head: elaborates to forcing a thunk.
        let v = self.value()?;
        Ok(Expr::at(ExprKind::Force(v), span))
    }

    /// Parses `head suffix*` where suffixes are value arguments and
    /// explicit instantiations.  A bare value head means `force`.
    fn app_chain(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        let mut head = self.expr_atom()?;
        loop {
            match self.peek() {
                Some(Tok::LBrack) => {
                    self.pos += 1;
                    if self.kw("type") {
                        let t = self.value_type()?;
                        self.expect(Tok::RBrack, "`]`")?;
                        head = Expr::at(ExprKind::InstTy(Rc::new(head), t), span);
                    } else {
                        let i = self.index()?;
                        self.expect(Tok::RBrack, "`]`")?;
                        head = Expr::at(ExprKind::InstIdx(Rc::new(head), i), span);
                    }
                }
                Some(Tok::Ident(id))
                    if !is_expr_keyword(id) =>
                {
                    let v = self.value()?;
                    head = Expr::at(ExprKind::App(Rc::new(head), v), span);
                }
                Some(Tok::LParen) | Some(Tok::Tilde) | Some(Tok::Amp) | Some(Tok::Caret)
                | Some(Tok::Num(_)) => {
                    let v = self.value()?;
                    head = Expr::at(ExprKind::App(Rc::new(head), v), span);
                }
                _ => break,
            }
        }
        Ok(head)
    }

    // -------------------------------------------------------------
    // Declarations and programs
    // -------------------------------------------------------------

    pub fn program(&mut self) -> Result<Program, ParseError> {
        let mut prog = Program::default();
        if self.peek().is_none() {
            return self.err("expected declaration");
        }
        while self.peek().is_some() {
            if self.kw("nmtm") {
                let name = self.ident("a name-term definition name")?;
                self.expect(Tok::Colon, "`:`")?;
                let sort = self.sort()?;
                self.expect(Tok::Eq, "`=`")?;
                let body = self.name_term()?;
                // Sort-check the definition right away.
                let ns = match as_name_sort(&sort) {
                    Some(ns) => ns,
                    None => return self.err("nmtm definitions need a name sort"),
                };
                name::check_name_sort(&name::SortCtx::new(), &body, &ns).map_err(|e| {
                    ParseError {
                        span: self.span(),
                        msg: format!("nmtm {}: {}", name, e),
                    }
                })?;
                self.expect(Tok::Semi, "`;`")?;
                self.nmtm_defs.insert(name, body);
            } else if self.kw("idxtm") {
                let name = self.ident("an index definition name")?;
                self.expect(Tok::Colon, "`:`")?;
                let sort = self.sort()?;
                self.expect(Tok::Eq, "`=`")?;
                let body = self.index()?;
                index::check_index_sort(&index::SortEnv::new(), &body, &sort).map_err(|e| {
                    ParseError {
                        span: self.span(),
                        msg: format!("idxtm {}: {}", name, e),
                    }
                })?;
                self.expect(Tok::Semi, "`;`")?;
                self.idxtm_defs.insert(name, body);
            } else if self.kw("type") {
                let name = self.ident("a type name")?;
                // Alias: `type Name P X = A;`
                // Datatype: `type Name : K { ... }`.
                let mut params: Vec<Ident> = Vec::new();
                while let Some(Tok::Ident(p)) = self.peek() {
                    let p = p.clone();
                    self.pos += 1;
                    params.push(Rc::from(p.as_str()));
                }
                if self.eat(&Tok::Eq) {
                    let body = self.value_type()?;
                    self.expect(Tok::Semi, "`;`")?;
                    self.aliases.insert(name, (params, body));
                } else {
                    self.expect(Tok::Colon, "`:` or `=` after the type name")?;
                    let kind = self.kind()?;
                    self.expect(Tok::LBrace, "`{`")?;
                    let mut ctors = Vec::new();
                    while !self.eat(&Tok::RBrace) {
                        let cname = self.ident("a constructor name")?;
                        self.expect(Tok::Colon, "`:`")?;
                        let ctor = self.ctor_type(&cname)?;
                        self.ctor_names.push(cname);
                        ctors.push(ctor);
                        self.eat(&Tok::Semi);
                    }
                    let d = DataDecl {
                        name: Rc::from(name.as_str()),
                        kind,
                        ctors,
                    };
                    self.datatypes.push(d.clone());
                    prog.datatypes.push(d);
                }
            } else if self.kw("val") {
                let ptr = self.name_literal()?;
                self.expect(Tok::Colon, "`:`")?;
                let ty = self.value_type()?;
                self.expect(Tok::Eq, "`=`")?;
                let v = self.value()?;
                self.expect(Tok::Semi, "`;`")?;
                self.cell_names.push(ptr.clone());
                prog.cells.push(CellDecl { ptr, ty, val: v });
            } else if self.kw("fn") {
                let fname = self.ident("a function name")?;
                self.expect(Tok::Colon, "`:`")?;
                let ty = self.eff_type()?;
                let scope = if self.kw("within") {
                    self.name_term()?
                } else {
                    NameTerm::id()
                };
                // Register before the body so recursion resolves.
                self.fn_names.push(fname.clone());
                self.expect(Tok::LBrace, "`{`")?;
                let body = self.expr()?;
                self.expect(Tok::RBrace, "`}`")?;
                prog.fns.push(FnDecl {
                    name: Rc::from(fname.as_str()),
                    ty,
                    scope,
                    body,
                });
            } else if self.kw("main") {
                self.expect(Tok::Colon, "`:`")?;
                let ty = self.eff_type()?;
                self.expect(Tok::LBrace, "`{`")?;
                let body = self.expr()?;
                self.expect(Tok::RBrace, "`}`")?;
                prog.main = Some((body, ty));
            } else {
                return self.err("expected declaration");
            }
        }
        Ok(prog)
    }

    /// A constructor signature: quantifier prefix, then
    /// `A1 -> ... -> An -> D[i]...`.
    fn ctor_type(&mut self, cname: &str) -> Result<CtorDecl, ParseError> {
        let mut quant = Vec::new();
        while self.kw("forall") {
            let a = self.ident("a quantifier variable")?;
            self.expect(Tok::Colon, "`:`")?;
            let s = self.sort()?;
            let p = if self.eat(&Tok::Bar) {
                self.prop()?
            } else {
                Prop::Tt
            };
            self.expect(Tok::Dot, "`.`")?;
            quant.push((Rc::from(a.as_str()), s, p));
        }
        let mut parts = vec![self.value_type_atom_app()?];
        while self.eat(&Tok::Arrow) {
            parts.push(self.value_type_atom_app()?);
        }
        let result = parts.pop().unwrap();
        Ok(CtorDecl {
            name: Rc::from(cname),
            quant,
            args: parts,
            result,
        })
    }

    // -------------------------------------------------------------
    // Obligations (the solve subcommand)
    // -------------------------------------------------------------

    /// One obligation per line:
    /// `CTX |- LHS == RHS : SORT` or `CTX |- LHS ## RHS : SORT`.
    pub fn obligation(&mut self) -> Result<Obligation, ParseError> {
        let mut asm = Assumptions::default();
        // Context entries up to `|-`.
        if self.peek() != Some(&Tok::Turnstile) {
            loop {
                let save = self.pos;
                let lhs = self.index()?;
                let apart = if self.eat(&Tok::HashHash) {
                    true
                } else if self.eat(&Tok::EqEq) {
                    false
                } else {
                    self.pos = save;
                    return self.err("expected `==` or `##` in a context entry");
                };
                let rhs = self.index()?;
                let sort = if self.eat(&Tok::Colon) {
                    self.sort()?
                } else {
                    IndexSort::NmSet
                };
                match (&lhs, &rhs) {
                    (Index::Var(a), Index::Var(b)) => {
                        if apart {
                            asm.rel.push_apart(a.clone(), b.clone(), sort.clone());
                            asm.props.push(PropAtom {
                                kind: RelKind::Apart,
                                lhs: lhs.clone(),
                                rhs: rhs.clone(),
                                sort,
                            });
                        } else {
                            asm.rel.push_equiv(a.clone(), b.clone(), sort);
                        }
                    }
                    _ => {
                        asm.props.push(PropAtom {
                            kind: if apart { RelKind::Apart } else { RelKind::Equiv },
                            lhs,
                            rhs,
                            sort,
                        });
                    }
                }
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::Turnstile, "`|-`")?;
        // Find the top-level relation token to know where LHS ends, and
        // the final `:` for the sort; then parse sides by sort.
        let rel_pos = self.find_top_level(&[Tok::EqEq, Tok::HashHash])?;
        let kind = match &self.toks[rel_pos].tok {
            Tok::EqEq => RelKind::Equiv,
            _ => RelKind::Apart,
        };
        let colon_pos = self.rfind_top_level(Tok::Colon)?;
        let lhs_toks = self.toks[self.pos..rel_pos].to_vec();
        let rhs_toks = self.toks[rel_pos + 1..colon_pos].to_vec();
        self.pos = colon_pos + 1;
        let sort = self.sort()?;
        let (lhs, rhs) = match &sort {
            IndexSort::Nm(_) => (
                RelTerm::Nm(self.subparse(lhs_toks, |p| p.name_term())?),
                RelTerm::Nm(self.subparse(rhs_toks, |p| p.name_term())?),
            ),
            _ => (
                RelTerm::Ix(self.subparse(lhs_toks, |p| p.index())?),
                RelTerm::Ix(self.subparse(rhs_toks, |p| p.index())?),
            ),
        };
        Ok(Obligation {
            assumptions: asm,
            kind,
            lhs,
            rhs,
            sort,
        })
    }

    fn subparse<T>(
        &self,
        toks: Vec<Lexed>,
        f: impl FnOnce(&mut Parser) -> Result<T, ParseError>,
    ) -> Result<T, ParseError> {
        let mut p = Parser {
            toks,
            pos: 0,
            nmtm_defs: self.nmtm_defs.clone(),
            idxtm_defs: self.idxtm_defs.clone(),
            aliases: self.aliases.clone(),
            datatypes: self.datatypes.clone(),
            ctor_names: self.ctor_names.clone(),
            fn_names: self.fn_names.clone(),
            cell_names: self.cell_names.clone(),
        };
        let out = f(&mut p)?;
        if p.peek().is_some() {
            return p.err("trailing tokens");
        }
        Ok(out)
    }

    fn find_top_level(&self, wanted: &[Tok]) -> Result<usize, ParseError> {
        let mut depth = 0i32;
        for (k, l) in self.toks.iter().enumerate().skip(self.pos) {
            match &l.tok {
                Tok::LParen | Tok::LBrace | Tok::LBrack | Tok::LLBrack | Tok::StarLLBrack => {
                    depth += 1
                }
                Tok::RParen | Tok::RBrace | Tok::RBrack | Tok::RRBrack => depth -= 1,
                t if depth == 0 && wanted.contains(t) => return Ok(k),
                _ => {}
            }
        }
        self.err("expected `==` or `##`")
    }

    fn rfind_top_level(&self, wanted: Tok) -> Result<usize, ParseError> {
        let mut depth = 0i32;
        for k in (self.pos..self.toks.len()).rev() {
            match &self.toks[k].tok {
                Tok::RParen | Tok::RBrace | Tok::RBrack | Tok::RRBrack => depth += 1,
                Tok::LParen | Tok::LBrace | Tok::LBrack | Tok::LLBrack | Tok::StarLLBrack => {
                    depth -= 1
                }
                t if depth == 0 && *t == wanted => return Ok(k),
                _ => {}
            }
        }
        self.err("expected `: SORT`")
    }
}

fn is_expr_keyword(id: &str) -> bool {
    matches!(
        id,
        "ret" | "let" | "in" | "split" | "case" | "match" | "if" | "else" | "unpack" | "as"
            | "thunk" | "force" | "ref" | "get" | "scope" | "nmapp" | "eq" | "plus" | "hashbit"
            | "main" | "fn" | "val" | "type" | "nmtm" | "idxtm" | "within"
    )
}

fn as_name_sort(s: &IndexSort) -> Option<NameSort> {
    match s {
        IndexSort::Nm(ns) => Some(ns.clone()),
        _ => None,
    }
}

/// View an index as a name function for the map form `M[[X]]`.
fn index_as_name_fn(i: &Index) -> Option<NameTerm> {
    match i {
        Index::NmTm(m) => Some(m.clone()),
        _ => None,
    }
}

/// View an index as a set builder for `i*[[X]]`; name functions lift
/// to singleton builders.
fn index_as_builder(i: &Index) -> Option<Index> {
    match i {
        Index::NmTm(m) => {
            let a = name::fresh_ident("k");
            Some(Index::Lam(
                a.clone(),
                Rc::new(Index::Sing(NameTerm::app(m.clone(), NameTerm::Var(a)))),
            ))
        }
        _ => None,
    }
}

fn type_spine(t: &ValueType) -> (ValueType, Vec<Index>) {
    match t {
        ValueType::IdxApp(h, i) => {
            let (head, mut args) = type_spine(h);
            args.push(i.clone());
            (head, args)
        }
        other => (other.clone(), Vec::new()),
    }
}

// ---------------------------------------------------------------------------
// Printers
// ---------------------------------------------------------------------------

pub fn print_val(v: &Val) -> String {
    match &v.kind {
        ValKind::Var(x) => x.to_string(),
        ValKind::Unit => "()".into(),
        ValKind::Pair(a, b) => format!("({}, {})", print_val(a), print_val(b)),
        ValKind::Inj(i, a) => format!("inj{} {}", i, print_val(a)),
        ValKind::Name(n) => format!("~{}", print_name_atomic(n)),
        ValKind::NameFn(m) => format!("nmfn({})", m),
        ValKind::RefPtr(p) => format!("&{}", print_name_atomic(p)),
        ValKind::ThunkPtr(p) => format!("^{}", print_name_atomic(p)),
        ValKind::Pack(i, a) => format!("pack[{}] {}", i, print_val(a)),
        ValKind::Anno(a, t) => format!("({} : {})", print_val(a), t),
        ValKind::Nat(k) => k.to_string(),
        ValKind::Bool(b) => b.to_string(),
        ValKind::Ctor(c, insts, args) => {
            let mut s = c.to_string();
            for i in insts {
                let _ = write!(s, "[{}]", i);
            }
            if !args.is_empty() {
                let _ = write!(
                    s,
                    "({})",
                    args.iter().map(print_val).collect::<Vec<_>>().join(", ")
                );
            } else {
                s.push_str("()");
            }
            s
        }
    }
}

fn print_name_atomic(n: &Name) -> String {
    match n {
        Name::Bin(_, _) => format!("({})", n),
        _ => format!("{}", n),
    }
}

pub fn print_expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Ret(v) => format!("ret {}", print_val(v)),
        ExprKind::Lam(x, b) => format!("\\{}. {}", x, print_expr(b)),
        ExprKind::Split(v, x1, x2, b) => format!(
            "split {} as {}, {} in {}",
            print_val(v),
            x1,
            x2,
            print_expr(b)
        ),
        ExprKind::Case(v, x1, e1, x2, e2) => format!(
            "case {} {{ inj1 {} => {} | inj2 {} => {} }}",
            print_val(v),
            x1,
            print_expr(e1),
            x2,
            print_expr(e2)
        ),
        ExprKind::App(f, v) => format!("{} {}", print_expr_app_head(f), print_val(v)),
        ExprKind::Let(x, e1, e2) => {
            format!("let {} = {} in {}", x, print_expr(e1), print_expr(e2))
        }
        ExprKind::Thunk(v, b) => format!("thunk[{}] {{ {} }}", print_val(v), print_expr(b)),
        ExprKind::Force(v) => format!("force {}", print_val(v)),
        ExprKind::Ref(n, v) => format!("ref[{}] {}", print_val(n), print_val(v)),
        ExprKind::Get(v) => format!("get {}", print_val(v)),
        ExprKind::Scope(v, b) => format!("scope[{}] {{ {} }}", print_val(v), print_expr(b)),
        ExprKind::NameApp(f, v) => format!("nmapp {} {}", print_val(f), print_val(v)),
        ExprKind::Unpack(v, a, x, b) => format!(
            "unpack {} as {}, {} in {}",
            print_val(v),
            a,
            x,
            print_expr(b)
        ),
        ExprKind::Anno(b, t) => format!("({} : {})", print_expr(b), t),
        ExprKind::InstIdx(b, i) => format!("{}[{}]", print_expr_app_head(b), i),
        ExprKind::InstTy(b, t) => format!("{}[type {}]", print_expr_app_head(b), t),
        ExprKind::Match(v, arms) => {
            let body = arms
                .iter()
                .map(|a| {
                    let mut s = a.ctor.to_string();
                    for b in &a.idx_binders {
                        let _ = write!(s, "[{}]", b);
                    }
                    if !a.val_binders.is_empty() {
                        let _ = write!(
                            s,
                            "({})",
                            a.val_binders
                                .iter()
                                .map(|x| x.to_string())
                                .collect::<Vec<_>>()
                                .join(", ")
                        );
                    }
                    format!("{} => {}", s, print_expr(&a.body))
                })
                .collect::<Vec<_>>()
                .join(" | ");
            format!("match {} {{ {} }}", print_val(v), body)
        }
        ExprKind::If(v, e1, e2) => format!(
            "if {} {{ {} }} else {{ {} }}",
            print_val(v),
            print_expr(e1),
            print_expr(e2)
        ),
        ExprKind::Prim(op, args) => {
            let mut s = op.to_string();
            for a in args {
                let _ = write!(s, " {}", print_val(a));
            }
            s
        }
    }
}

fn print_expr_app_head(e: &Expr) -> String {
    match &e.kind {
        ExprKind::App(_, _)
        | ExprKind::Force(_)
        | ExprKind::Get(_)
        | ExprKind::InstIdx(_, _)
        | ExprKind::InstTy(_, _)
        | ExprKind::Anno(_, _) => print_expr(e),
        _ => format!("({})", print_expr(e)),
    }
}

/// Parse a whole program from source text.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    Parser::new(src)?.program()
}

/// Parse one obligation line in the solver's syntax.
pub fn parse_obligation(line: &str) -> Result<Obligation, ParseError> {
    Parser::new(line)?.obligation()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_name_terms_round_trip() {
        let cases = [
            "()",
            "'dd",
            "3",
            "() * 'a",
            "#a.() * a",
            "#f.#x.f x",
            "('a * ()) * 2",
        ];
        for src in cases {
            let m = Parser::new(src).unwrap().name_term().unwrap();
            let printed = m.to_string();
            let again = Parser::new(&printed).unwrap().name_term().unwrap();
            assert_eq!(m, again, "round trip failed for {}", src);
        }
    }

    #[test]
    fn parse_indices() {
        let cases = [
            "0",
            "{()}",
            "{'n1} % {'n2}",
            "X + Y",
            "(#a.'t * a)[[X]]",
            "(#x.{x * 0})[[{()}]]",
            "(#x.{() * x})*[[{()}]]",
        ];
        for src in cases {
            let i = Parser::new(src).unwrap().index().unwrap();
            let printed = i.to_string();
            let again = Parser::new(&printed).unwrap().index().unwrap();
            assert_eq!(i, again, "round trip failed for {} -> {}", src, printed);
        }
    }

    #[test]
    fn map_vs_flatmap_disambiguation() {
        // A name-term lambda before [[ ]] is a map; an index lambda is
        // a flat-map.
        let m = Parser::new("(#a.'t * a)[[X]]").unwrap().index().unwrap();
        assert!(matches!(m, Index::Map(_, _)));
        let f = Parser::new("(#a.{'t * a})[[X]]").unwrap().index().unwrap();
        assert!(matches!(f, Index::FlatMap(_, _)));
    }

    #[test]
    fn parse_types() {
        let cases = [
            "Unit",
            "Nm[{'n}]",
            "Ref[X] Unit",
            "Thk[0] (F Unit |> <0; 0>)",
            "(Nm -> Nm)[#a.'t * a]",
            "forall X:NmSet | tt. Nm[X]",
            "Nat x Bool",
        ];
        for src in cases {
            let t = Parser::new(src).unwrap().value_type().unwrap();
            let printed = t.to_string();
            let again = Parser::new(&printed).unwrap().value_type().unwrap();
            assert_eq!(t, again, "round trip failed for {} -> {}", src, printed);
        }
    }

    #[test]
    fn parse_expressions_round_trip() {
        let cases = [
            "ret ()",
            "let x = ret () in ret x",
            "ref[~'n] 3",
            "thunk[~'k] { ret () }",
            "force x",
            "get x",
            "scope[nmfn(#a.'t * a)] { ref[~'n] () }",
            "if true { ret 1 } else { ret 2 }",
            "split p as a, b in ret a",
            "eq 3 4",
            "\\x. ret x",
        ];
        for src in cases {
            let e = Parser::new(src).unwrap().expr().unwrap();
            let printed = print_expr(&e);
            let again = Parser::new(&printed).unwrap().expr().unwrap();
            assert_eq!(
                crate::ast::erase(&e),
                crate::ast::erase(&again),
                "round trip failed for {} -> {}",
                src,
                printed
            );
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        let r = parse_program("");
        assert!(r.is_err());
        assert!(r.unwrap_err().msg.contains("declaration"));
    }

    #[test]
    fn unknown_keyword_is_an_error() {
        assert!(parse_program("module x;").is_err());
    }

    #[test]
    fn parse_small_program() {
        let src = r#"
            nmtm Succ : Nm -> Nm = #x.() * x;
            idxtm Nat : NmSet = Succ*[[{()}]];
            val 'a1 : Nat = 3;
            fn id : forall X:NmSet | tt. Nm[X] -> F Nm[X] |> <0; 0> { \x. ret x }
            main : F Nat |> <0; {'a1}> { get &'a1 }
        "#;
        let prog = parse_program(src).unwrap();
        assert_eq!(prog.cells.len(), 1);
        assert_eq!(prog.fns.len(), 1);
        assert!(prog.main.is_some());
    }

    #[test]
    fn parse_obligation_lines() {
        let ob = parse_obligation("|- () == () : Nm").unwrap();
        assert_eq!(ob.kind, RelKind::Equiv);
        let ob = parse_obligation("x == x : Nm |- {() * x} ## {x} : NmSet").unwrap();
        assert_eq!(ob.kind, RelKind::Apart);
        assert_eq!(ob.assumptions.rel.entries.len(), 1);
        let ob = parse_obligation("|- #x.'dd * x ## #x.x : Nm -> Nm").unwrap();
        match ob.lhs {
            RelTerm::Nm(_) => {}
            _ => panic!("expected a name-term obligation"),
        }
    }

    #[test]
    fn diagnostics_carry_positions() {
        let e = parse_program("fn : ;").unwrap_err();
        assert!(e.span.line >= 1 && e.span.col >= 1);
    }
}
