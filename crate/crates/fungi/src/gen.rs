//! Random generation of well-sorted name terms, indices, and
//! obligations, for the property suites and fuzz harnesses.

use rand::prelude::*;
use std::rc::Rc;

use crate::index::{Index, IndexSort};
use crate::name::{Ident, Name, NameSort, NameTerm};
use crate::relations::{Assumptions, Obligation, PropAtom, RelKind, RelTerm};

fn atom(rng: &mut impl Rng) -> Name {
    match rng.gen_range(0..3) {
        0 => Name::Leaf,
        1 => Name::sym("a"),
        _ => Name::sym("b"),
    }
}

pub fn gen_name(rng: &mut impl Rng, depth: u32) -> Name {
    if depth == 0 || rng.gen_bool(0.4) {
        atom(rng)
    } else {
        Name::bin(gen_name(rng, depth - 1), gen_name(rng, depth - 1))
    }
}

/// A closed, well-sorted name term of the given sort.  Arrow-sorted
/// terms are lambdas or applications returning lambdas, so evaluation
/// exercises beta steps.
pub fn gen_name_term(rng: &mut impl Rng, sort: &NameSort, depth: u32) -> NameTerm {
    gen_nt(rng, sort, depth, &mut Vec::new())
}

fn gen_nt(
    rng: &mut impl Rng,
    sort: &NameSort,
    depth: u32,
    env: &mut Vec<(Ident, NameSort)>,
) -> NameTerm {
    let vars: Vec<Ident> = env
        .iter()
        .filter(|(_, s)| s == sort)
        .map(|(a, _)| a.clone())
        .collect();
    if depth == 0 {
        if !vars.is_empty() && rng.gen_bool(0.5) {
            return NameTerm::Var(vars[rng.gen_range(0..vars.len())].clone());
        }
        return match sort {
            NameSort::Nm => NameTerm::Lit(atom(rng)),
            NameSort::Arrow(dom, cod) => {
                let a: Ident = Rc::from(format!("g{}", env.len()).as_str());
                env.push((a.clone(), (**dom).clone()));
                let body = gen_nt(rng, cod, 0, env);
                env.pop();
                NameTerm::Lam(a, Rc::new(body))
            }
        };
    }
    match sort {
        NameSort::Nm => match rng.gen_range(0..10) {
            0..=2 => NameTerm::Lit(gen_name(rng, depth.min(2))),
            3..=5 => NameTerm::bin(
                gen_nt(rng, &NameSort::Nm, depth - 1, env),
                gen_nt(rng, &NameSort::Nm, depth - 1, env),
            ),
            6 if !vars.is_empty() => {
                NameTerm::Var(vars[rng.gen_range(0..vars.len())].clone())
            }
            _ => {
                // Application at a random argument sort.
                let dom = if rng.gen_bool(0.8) {
                    NameSort::Nm
                } else {
                    NameSort::nm_to_nm()
                };
                let f = gen_nt(
                    rng,
                    &NameSort::arrow(dom.clone(), NameSort::Nm),
                    depth - 1,
                    env,
                );
                let x = gen_nt(rng, &dom, depth - 1, env);
                NameTerm::app(f, x)
            }
        },
        NameSort::Arrow(dom, cod) => {
            let a: Ident = Rc::from(format!("g{}", env.len()).as_str());
            env.push((a.clone(), (**dom).clone()));
            let body = gen_nt(rng, cod, depth - 1, env);
            env.pop();
            NameTerm::Lam(a, Rc::new(body))
        }
    }
}

/// A set-shaped index over the variables in scope.
pub fn gen_index_set(rng: &mut impl Rng, depth: u32, set_vars: &[Ident]) -> Index {
    if depth == 0 {
        return match rng.gen_range(0..3) {
            0 => Index::Empty,
            1 if !set_vars.is_empty() => {
                Index::Var(set_vars[rng.gen_range(0..set_vars.len())].clone())
            }
            _ => Index::sing_name(gen_name(rng, 1)),
        };
    }
    match rng.gen_range(0..8) {
        0 => Index::sing_name(gen_name(rng, 2)),
        1 if !set_vars.is_empty() => {
            Index::Var(set_vars[rng.gen_range(0..set_vars.len())].clone())
        }
        2 | 3 => Index::union(
            gen_index_set(rng, depth - 1, set_vars),
            gen_index_set(rng, depth - 1, set_vars),
        ),
        4 => {
            let f = gen_name_term(rng, &NameSort::nm_to_nm(), depth.min(2));
            Index::map(f, gen_index_set(rng, depth - 1, set_vars))
        }
        5 => {
            let a: Ident = Rc::from("fa");
            let body = Index::Sing(NameTerm::bin(
                NameTerm::Lit(atom(rng)),
                NameTerm::Var(a.clone()),
            ));
            Index::flat_map(
                Index::Lam(a, Rc::new(body)),
                gen_index_set(rng, depth - 1, set_vars),
            )
        }
        6 => {
            let a: Ident = Rc::from("sa");
            let body = Index::Sing(NameTerm::bin(
                NameTerm::Lit(Name::Leaf),
                NameTerm::Var(a.clone()),
            ));
            Index::star(
                Index::Lam(a, Rc::new(body)),
                gen_index_set(rng, depth - 1, set_vars),
            )
        }
        _ => gen_index_set(rng, depth - 1, set_vars),
    }
}

/// A random obligation over a small relational context, for the
/// soundness fuzz: name obligations at `Nm` or `Nm -> Nm`, index
/// obligations at `NmSet`.
pub fn gen_obligation(rng: &mut impl Rng, depth: u32) -> Obligation {
    let mut asm = Assumptions::default();
    let kind = if rng.gen_bool(0.5) {
        RelKind::Equiv
    } else {
        RelKind::Apart
    };
    match rng.gen_range(0..3) {
        0 => {
            // Ground or hypothetical name terms at Nm.
            let mut name_vars: Vec<Ident> = Vec::new();
            if rng.gen_bool(0.5) {
                let a: Ident = Rc::from("u");
                asm.rel.push_refl(a.clone(), IndexSort::nm());
                name_vars.push(a);
            }
            if rng.gen_bool(0.3) {
                let a: Ident = Rc::from("v1");
                let b: Ident = Rc::from("v2");
                asm.rel
                    .push_apart(a.clone(), b.clone(), IndexSort::nm());
                name_vars.push(a);
                name_vars.push(b);
            }
            let lhs0 = gen_name_term(rng, &NameSort::Nm, depth);
            let lhs = sprinkle_vars(rng, lhs0, &name_vars);
            let rhs0 = gen_name_term(rng, &NameSort::Nm, depth);
            let rhs = sprinkle_vars(rng, rhs0, &name_vars);
            Obligation {
                assumptions: asm,
                kind,
                lhs: RelTerm::Nm(lhs),
                rhs: RelTerm::Nm(rhs),
                sort: IndexSort::nm(),
            }
        }
        1 => {
            let lhs = gen_name_term(rng, &NameSort::nm_to_nm(), depth);
            let rhs = gen_name_term(rng, &NameSort::nm_to_nm(), depth);
            Obligation {
                assumptions: asm,
                kind,
                lhs: RelTerm::Nm(lhs),
                rhs: RelTerm::Nm(rhs),
                sort: IndexSort::nm_fn(),
            }
        }
        _ => {
            let mut set_vars: Vec<Ident> = Vec::new();
            if rng.gen_bool(0.6) {
                let x: Ident = Rc::from("X");
                asm.rel.push_refl(x.clone(), IndexSort::NmSet);
                set_vars.push(x);
            }
            if rng.gen_bool(0.4) {
                let x: Ident = Rc::from("Y1");
                let y: Ident = Rc::from("Y2");
                asm.rel.push_apart(x.clone(), y.clone(), IndexSort::NmSet);
                asm.props.push(PropAtom {
                    kind: RelKind::Apart,
                    lhs: Index::Var(x.clone()),
                    rhs: Index::Var(y.clone()),
                    sort: IndexSort::NmSet,
                });
                set_vars.push(x);
                set_vars.push(y);
            }
            let lhs = gen_index_set(rng, depth, &set_vars);
            let rhs = gen_index_set(rng, depth, &set_vars);
            Obligation {
                assumptions: asm,
                kind,
                lhs: RelTerm::Ix(lhs),
                rhs: RelTerm::Ix(rhs),
                sort: IndexSort::NmSet,
            }
        }
    }
}

fn sprinkle_vars(rng: &mut impl Rng, m: NameTerm, vars: &[Ident]) -> NameTerm {
    if vars.is_empty() {
        return m;
    }
    // Replace some literal leaves with context variables.
    fn walk(rng: &mut impl Rng, m: &NameTerm, vars: &[Ident]) -> NameTerm {
        match m {
            NameTerm::Lit(_) if rng.gen_bool(0.3) => {
                NameTerm::Var(vars[rng.gen_range(0..vars.len())].clone())
            }
            NameTerm::Bin(l, r) => NameTerm::bin(walk(rng, l, vars), walk(rng, r, vars)),
            other => other.clone(),
        }
    }
    walk(rng, &m, vars)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::name::{check_name_sort, SortCtx};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_name_terms_are_well_sorted() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let sort = if rng.gen_bool(0.5) {
                NameSort::Nm
            } else {
                NameSort::nm_to_nm()
            };
            let m = gen_name_term(&mut rng, &sort, 4);
            assert!(
                check_name_sort(&SortCtx::new(), &m, &sort).is_ok(),
                "ill-sorted: {} at {}",
                m,
                sort
            );
        }
    }
}
