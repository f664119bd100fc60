//! Shared generators for the integration suites: random singleton
//! self-loop problems and random dependency-pair problems over small
//! bit-vector widths.

#![allow(dead_code)]

use bvterm::bitvec::{BitVec, CmpOp};
use bvterm::dp::{DependencyPair, DpProblem};
use bvterm::lctrs::{ConstrainedRule, Lctrs};
use bvterm::term::{theory, Sort, Symbol, Term, Var};
use rand::rngs::StdRng;
use rand::Rng;
use std::sync::Arc;

pub const CMP_OPS: [CmpOp; 7] = [
    CmpOp::Eq,
    CmpOp::Ult,
    CmpOp::Slt,
    CmpOp::Uge,
    CmpOp::Sge,
    CmpOp::Ule,
    CmpOp::Sle,
];

pub fn loop_vars(n: usize, width: u32) -> Vec<Var> {
    (0..n)
        .map(|j| Var::new(format!("x{}", j + 1), Sort::Bv(width)))
        .collect()
}

/// A random comparison between a loop variable and either another loop
/// variable or a constant.
fn random_comparison(rng: &mut StdRng, vars: &[Var], width: u32) -> Term {
    let op = CMP_OPS[rng.random_range(0..CMP_OPS.len())];
    let lhs = Term::Var(vars[rng.random_range(0..vars.len())].clone());
    let rhs = if rng.random_bool(0.5) {
        Term::Var(vars[rng.random_range(0..vars.len())].clone())
    } else {
        Term::bv(BitVec::from_u128(width, rng.random_range(0..(1u128 << width))))
    };
    theory::cmp(op, lhs, rhs)
}

/// A random guard: comparisons combined by and/or/not up to the given
/// depth.
pub fn random_guard(rng: &mut StdRng, vars: &[Var], width: u32, depth: u32) -> Term {
    if depth == 0 || rng.random_bool(0.4) {
        return random_comparison(rng, vars, width);
    }
    match rng.random_range(0..3) {
        0 => theory::and(
            random_guard(rng, vars, width, depth - 1),
            random_guard(rng, vars, width, depth - 1),
        ),
        1 => theory::or(
            random_guard(rng, vars, width, depth - 1),
            random_guard(rng, vars, width, depth - 1),
        ),
        _ => theory::not(random_guard(rng, vars, width, depth - 1)),
    }
}

/// A random singleton self-loop shaped problem
/// `{ u#(x1..xn) -> u#(x1+c1, ..., xn+cn) [guard] }` with width 2..=4 and
/// up to three arguments. The problem may or may not be a valid view
/// (the guard can be unsatisfiable or the self-edge missing); callers
/// exercise the full processor entry point.
pub fn random_loop_problem(rng: &mut StdRng) -> DpProblem {
    let width = rng.random_range(2..=4u32);
    let n = rng.random_range(1..=3usize);
    let vars = loop_vars(n, width);

    let base = Symbol::plain("u", vec![Sort::Bv(width); n], Sort::Bv(width));
    let marked = base.marked();
    let lhs = Term::App(
        marked.clone(),
        vars.iter().map(|v| Term::Var(v.clone())).collect(),
    );
    let rhs_args: Vec<Term> = vars
        .iter()
        .map(|v| {
            let c = BitVec::from_u128(width, rng.random_range(0..(1u128 << width)));
            theory::bvadd(Term::Var(v.clone()), Term::bv(c))
        })
        .collect();
    let rhs = Term::App(marked, rhs_args);
    let guard = random_guard(rng, &vars, width, 2);

    let system = Lctrs::new(vec![base], vec![]).expect("empty rule list is valid");
    DpProblem {
        pairs: vec![DependencyPair {
            id: 1,
            rule: ConstrainedRule::new(lhs, rhs, guard),
        }],
        system: Arc::new(system),
    }
}

/// A random multi-pair DP problem over one or two marked symbols with
/// variable left-hand sides and theory right-hand arguments, suitable for
/// comparing the dependency graph approximation against ground chains.
pub fn random_dp_problem(rng: &mut StdRng) -> DpProblem {
    let width = rng.random_range(2..=3u32);
    let symbol_count = rng.random_range(1..=2usize);
    let arities: Vec<usize> = (0..symbol_count).map(|_| rng.random_range(1..=2)).collect();
    let symbols: Vec<Symbol> = arities
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            Symbol::plain(
                format!("f{}", k + 1),
                vec![Sort::Bv(width); n],
                Sort::Bv(width),
            )
        })
        .collect();

    let pair_count = rng.random_range(1..=3usize);
    let mut pairs = Vec::new();
    for id in 1..=pair_count {
        let from = rng.random_range(0..symbol_count);
        let to = rng.random_range(0..symbol_count);
        let vars = loop_vars(arities[from], width);
        let lhs = Term::App(
            symbols[from].marked(),
            vars.iter().map(|v| Term::Var(v.clone())).collect(),
        );
        let rhs_args: Vec<Term> = (0..arities[to])
            .map(|_| {
                let v = &vars[rng.random_range(0..vars.len())];
                if rng.random_bool(0.3) {
                    Term::bv(BitVec::from_u128(width, rng.random_range(0..(1u128 << width))))
                } else {
                    let c = BitVec::from_u128(width, rng.random_range(0..(1u128 << width)));
                    theory::bvadd(Term::Var(v.clone()), Term::bv(c))
                }
            })
            .collect();
        let rhs = Term::App(symbols[to].marked(), rhs_args);
        let guard = random_guard(rng, &vars, width, 1);
        pairs.push(DependencyPair {
            id,
            rule: ConstrainedRule::new(lhs, rhs, guard),
        });
    }

    let system = Lctrs::new(symbols, vec![]).expect("empty rule list is valid");
    DpProblem {
        pairs,
        system: Arc::new(system),
    }
}
