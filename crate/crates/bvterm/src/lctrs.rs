//! Constrained rewrite rules, implicit calculation rules, and the rewrite
//! relation.
//!
//! A step either applies an explicit rule under a respecting substitution or
//! evaluates a theory operator on values (a calculation step). Calculation
//! rules are built in rather than materialized, so rule lists only contain
//! the declared rules of the system.

use crate::solver::{self, Assignment, SolverError};
use crate::term::{Sort, Substitution, SymbolKind, Symbol, Term, Var};
use std::collections::BTreeSet;
use std::fmt;

/// Cap on instantiations enumerated for rule variables that occur only in
/// the guard (or guard and right-hand side).
const INSTANTIATION_CAP: u128 = 1 << 16;

/// A constrained rewrite rule `lhs -> rhs [guard]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstrainedRule {
    pub lhs: Term,
    pub rhs: Term,
    pub guard: Term,
}

impl ConstrainedRule {
    /// Builds a rule, checking the shape invariants: the left-hand side is
    /// an application of a plain or marked symbol, both sides have the same
    /// sort, and the guard is a boolean theory term.
    pub fn new(lhs: Term, rhs: Term, guard: Term) -> ConstrainedRule {
        match lhs.root() {
            Some(f) => assert!(
                matches!(f.kind, SymbolKind::Plain | SymbolKind::Marked),
                "rule left-hand side root must be a term symbol, got {}",
                f.name
            ),
            None => panic!("rule left-hand side must not be a variable or value"),
        }
        assert_eq!(lhs.sort(), rhs.sort(), "rule sides must have the same sort");
        assert_eq!(guard.sort(), Sort::Bool, "rule guard must have sort bool");
        assert!(guard.is_theory_term(), "rule guard must be a theory term");
        ConstrainedRule { lhs, rhs, guard }
    }

    /// Builds an unguarded rule (guard `true`).
    pub fn unconditional(lhs: Term, rhs: Term) -> ConstrainedRule {
        ConstrainedRule::new(lhs, rhs, Term::bool(true))
    }

    /// True iff the guard is the literal `true`.
    pub fn is_unguarded(&self) -> bool {
        self.guard == Term::bool(true)
    }

    /// Variables that respecting substitutions must map to values: the guard
    /// variables and the right-hand-side-only variables.
    pub fn value_bound_vars(&self) -> Vec<Var> {
        let mut out = self.guard.vars();
        for v in self.rhs.vars() {
            if !self.lhs.contains_var(&v) && !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }
}

impl fmt::Display for ConstrainedRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_unguarded() {
            write!(f, "(rule {} {})", self.lhs, self.rhs)
        } else {
            write!(f, "(rule {} {} :guard {})", self.lhs, self.rhs, self.guard)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LctrsError {
    #[error("rule {rule}: right-hand side variable {var} occurs in neither the left-hand side nor the guard")]
    UnboundRhsVariable { rule: usize, var: String },
    #[error("rule {rule}: symbol {symbol} is not declared in the signature")]
    UndeclaredSymbol { rule: usize, symbol: String },
    #[error("rule {rule} is not well-sorted")]
    IllSorted { rule: usize },
}

/// A logically constrained term rewrite system: a signature plus rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lctrs {
    pub symbols: Vec<Symbol>,
    pub rules: Vec<ConstrainedRule>,
}

impl Lctrs {
    /// Builds a system and validates every rule against the signature.
    ///
    /// Rules whose right-hand side has variables bound by neither the
    /// left-hand side nor the guard are rejected: they would make rewriting
    /// branch over every value of the variable's domain. (The implicit
    /// calculation rules, which have this shape, are handled natively by the
    /// engine instead.)
    pub fn new(symbols: Vec<Symbol>, rules: Vec<ConstrainedRule>) -> Result<Lctrs, LctrsError> {
        for (i, rule) in rules.iter().enumerate() {
            if !(rule.lhs.well_sorted() && rule.rhs.well_sorted() && rule.guard.well_sorted()) {
                return Err(LctrsError::IllSorted { rule: i + 1 });
            }
            for t in [&rule.lhs, &rule.rhs] {
                for (_, sub) in t.subterms() {
                    if let Some(f) = sub.root() {
                        if f.kind == SymbolKind::Plain && !symbols.contains(f) {
                            return Err(LctrsError::UndeclaredSymbol {
                                rule: i + 1,
                                symbol: f.name.clone(),
                            });
                        }
                    }
                }
            }
            for v in rule.rhs.vars() {
                if !rule.lhs.contains_var(&v) && !rule.guard.contains_var(&v) {
                    return Err(LctrsError::UnboundRhsVariable {
                        rule: i + 1,
                        var: v.name,
                    });
                }
            }
        }
        Ok(Lctrs { symbols, rules })
    }

    /// The defined symbols: roots of rule left-hand sides.
    pub fn defined_symbols(&self) -> BTreeSet<Symbol> {
        self.rules
            .iter()
            .filter_map(|r| r.lhs.root().cloned())
            .collect()
    }
}

/// True iff `gamma` respects `rule`: every guard variable and every
/// right-hand-side-only variable is mapped to a value, and the guard
/// instance evaluates to true.
pub fn respects(gamma: &Substitution, rule: &ConstrainedRule) -> bool {
    for v in rule.value_bound_vars() {
        match gamma.get(&v) {
            Some(t) if t.is_value() => {}
            _ => return false,
        }
    }
    let guard = gamma.apply(&rule.guard);
    matches!(
        solver::eval_term(&guard, &Assignment::new()),
        Ok(crate::term::Value::Bool(true))
    )
}

/// One calculation step: if the term is a theory operator applied to
/// values, returns the value it evaluates to.
pub fn calculation_step(t: &Term) -> Option<Term> {
    match t {
        Term::App(f, args) if f.is_theory() && args.iter().all(|a| a.is_value()) => {
            solver::eval_term(t, &Assignment::new())
                .ok()
                .map(Term::Val)
        }
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("instantiating rule variables would enumerate {required} combinations (cap {cap})")]
    InstantiationCap { required: u128, cap: u128 },
    #[error("step cap of {cap} exceeded")]
    StepCapExceeded { cap: usize, partial_trace: Vec<Term> },
}

/// Syntactic matching of a rule pattern against a term. Returns the
/// matching substitution if it exists.
fn match_term(pattern: &Term, t: &Term, sigma: &mut Substitution) -> bool {
    match (pattern, t) {
        (Term::Var(v), _) => match sigma.get(v) {
            Some(bound) => bound == t,
            None => {
                if v.sort == t.sort() {
                    sigma.insert(v.clone(), t.clone());
                    true
                } else {
                    false
                }
            }
        },
        (Term::Val(a), Term::Val(b)) => a == b,
        (Term::App(f, fargs), Term::App(g, gargs)) => {
            f == g && fargs.iter().zip(gargs).all(|(p, u)| match_term(p, u, sigma))
        }
        _ => false,
    }
}

pub fn match_lhs(rule: &ConstrainedRule, t: &Term) -> Option<Substitution> {
    let mut sigma = Substitution::new();
    if match_term(&rule.lhs, t, &mut sigma) {
        Some(sigma)
    } else {
        None
    }
}

/// All respecting extensions of a matching substitution: variables of the
/// guard not bound by the match range over the values of their sorts.
fn respecting_extensions(
    rule: &ConstrainedRule,
    base: &Substitution,
) -> Result<Vec<Substitution>, RewriteError> {
    let extras: Vec<Var> = rule
        .value_bound_vars()
        .into_iter()
        .filter(|v| !base.contains(v))
        .collect();

    let mut total: u128 = 1;
    let mut sizes = Vec::with_capacity(extras.len());
    for v in &extras {
        // guard variables always have bool or bit-vector sorts
        let size = solver::domain_size(&v.sort).expect("guard variable with finite sort");
        sizes.push(size);
        total = total
            .checked_mul(size)
            .ok_or(RewriteError::InstantiationCap {
                required: u128::MAX,
                cap: INSTANTIATION_CAP,
            })?;
    }
    if total > INSTANTIATION_CAP {
        return Err(RewriteError::InstantiationCap {
            required: total,
            cap: INSTANTIATION_CAP,
        });
    }

    let mut out = Vec::new();
    let mut indices = vec![0u128; extras.len()];
    loop {
        let mut sigma = base.clone();
        for (v, &i) in extras.iter().zip(&indices) {
            sigma.insert(v.clone(), Term::Val(solver::value_at(&v.sort, i)));
        }
        if respects(&sigma, rule) {
            out.push(sigma);
        }
        let mut k = 0;
        loop {
            if k == extras.len() {
                return Ok(out);
            }
            indices[k] += 1;
            if indices[k] < sizes[k] {
                break;
            }
            indices[k] = 0;
            k += 1;
        }
    }
}

/// All one-step successors of `t`: at every position, either a rule applied
/// with a respecting substitution or a calculation step.
pub fn rewrite_successors(r: &Lctrs, t: &Term) -> Result<BTreeSet<Term>, RewriteError> {
    let mut out = BTreeSet::new();
    for (pos, sub) in t.subterms() {
        if let Some(v) = calculation_step(sub) {
            out.insert(t.replace_at(&pos, v));
        }
        for rule in &r.rules {
            if let Some(base) = match_lhs(rule, sub) {
                for sigma in respecting_extensions(rule, &base)? {
                    out.insert(t.replace_at(&pos, sigma.apply(&rule.rhs)));
                }
            }
        }
    }
    Ok(out)
}

/// The first step under the fixed trace strategy: leftmost-innermost
/// position, calculation steps before rule steps, rules in source order.
fn first_step(r: &Lctrs, t: &Term) -> Result<Option<Term>, RewriteError> {
    if let Term::App(f, args) = t {
        for (j, a) in args.iter().enumerate() {
            if let Some(reduced) = first_step(r, a)? {
                let mut args = args.clone();
                args[j] = reduced;
                return Ok(Some(Term::App(f.clone(), args)));
            }
        }
        if let Some(v) = calculation_step(t) {
            return Ok(Some(v));
        }
        for rule in &r.rules {
            if let Some(base) = match_lhs(rule, t) {
                if let Some(sigma) = respecting_extensions(rule, &base)?.into_iter().next() {
                    return Ok(Some(sigma.apply(&rule.rhs)));
                }
            }
        }
    }
    Ok(None)
}

/// Rewrites to a normal form under the deterministic trace strategy.
/// Returns the normal form and the sequence of terms reached after each
/// step (empty if `t` is already normal).
pub fn rewrite_to_normal_form(
    r: &Lctrs,
    t: &Term,
    step_cap: usize,
) -> Result<(Term, Vec<Term>), RewriteError> {
    let mut current = t.clone();
    let mut trace = Vec::new();
    while let Some(next) = first_step(r, &current)? {
        if trace.len() >= step_cap {
            return Err(RewriteError::StepCapExceeded {
                cap: step_cap,
                partial_trace: trace,
            });
        }
        trace.push(next.clone());
        current = next;
    }
    Ok((current, trace))
}

/// Convenience: evaluates a ground theory term to a value via the solver.
pub fn normalize_ground_theory(t: &Term) -> Result<crate::term::Value, SolverError> {
    solver::eval_term(t, &Assignment::new())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::bitvec::{BitVec, CmpOp};
    use crate::term::{theory, Value};

    fn bv4(s: &str) -> Term {
        Term::bv(BitVec::from_binary_str(s).unwrap())
    }

    fn v(n: &str) -> Term {
        Term::var(n, Sort::Bv(4))
    }

    fn var4(n: &str) -> Var {
        Var::new(n, Sort::Bv(4))
    }

    fn cnt() -> Symbol {
        Symbol::plain("cnt", vec![Sort::Bv(4)], Sort::Bv(4))
    }

    fn u1() -> Symbol {
        Symbol::plain(
            "u1",
            vec![Sort::Bv(4), Sort::Bv(4), Sort::Bv(4)],
            Sort::Bv(4),
        )
    }

    /// The counting system: cnt(x) loops i from 0 while i <s x, adding one
    /// to an accumulator each round.
    pub(crate) fn counting_system() -> Lctrs {
        let rule1 = ConstrainedRule::unconditional(
            Term::app(cnt(), vec![v("x")]),
            Term::app(u1(), vec![v("x"), bv4("0000"), bv4("0000")]),
        );
        let rule2 = ConstrainedRule::new(
            Term::app(u1(), vec![v("x"), v("i"), v("z")]),
            Term::app(
                u1(),
                vec![
                    v("x"),
                    theory::bvadd(v("i"), bv4("0001")),
                    theory::bvadd(v("z"), bv4("0001")),
                ],
            ),
            theory::cmp(CmpOp::Slt, v("i"), v("x")),
        );
        let rule3 = ConstrainedRule::new(
            Term::app(u1(), vec![v("x"), v("i"), v("z")]),
            v("z"),
            theory::cmp(CmpOp::Sge, v("i"), v("x")),
        );
        Lctrs::new(vec![cnt(), u1()], vec![rule1, rule2, rule3]).unwrap()
    }

    fn loop_rule() -> ConstrainedRule {
        counting_system().rules[1].clone()
    }

    #[test]
    fn respecting_substitutions() {
        let rule = loop_rule();
        let gamma = Substitution::from_pairs([
            (var4("x"), bv4("0010")),
            (var4("i"), bv4("0000")),
            (var4("z"), bv4("0000")),
        ]);
        assert!(respects(&gamma, &rule));

        let gamma = Substitution::from_pairs([
            (var4("x"), bv4("0010")),
            (var4("i"), bv4("0010")),
            (var4("z"), bv4("0010")),
        ]);
        assert!(!respects(&gamma, &rule));

        // guard variable mapped to a non-value
        let gamma = Substitution::from_pairs([
            (var4("x"), Term::app(cnt(), vec![v("y")])),
            (var4("i"), bv4("0000")),
            (var4("z"), bv4("0000")),
        ]);
        assert!(!respects(&gamma, &rule));
    }

    #[test]
    fn calculation_steps() {
        assert_eq!(
            calculation_step(&theory::bvadd(bv4("0000"), bv4("0001"))),
            Some(bv4("0001"))
        );
        assert_eq!(calculation_step(&bv4("0001")), None);
        assert_eq!(
            calculation_step(&theory::cmp(CmpOp::Slt, bv4("0000"), bv4("0001"))),
            Some(Term::bool(true))
        );
        // not applicable below the root or on open terms
        assert_eq!(calculation_step(&theory::bvadd(v("i"), bv4("0001"))), None);
    }

    #[test]
    fn successor_sets() {
        let r = counting_system();
        let start = Term::app(cnt(), vec![bv4("0010")]);
        let succs = rewrite_successors(&r, &start).unwrap();
        let expected = Term::app(u1(), vec![bv4("0010"), bv4("0000"), bv4("0000")]);
        assert_eq!(succs, BTreeSet::from([expected]));

        assert!(rewrite_successors(&r, &bv4("0010")).unwrap().is_empty());

        let done = Term::app(u1(), vec![bv4("0010"), bv4("0010"), bv4("0010")]);
        assert_eq!(
            rewrite_successors(&r, &done).unwrap(),
            BTreeSet::from([bv4("0010")])
        );
    }

    #[test]
    fn trace_reaches_normal_form() {
        let r = counting_system();
        let start = Term::app(cnt(), vec![bv4("0010")]);
        let (nf, trace) = rewrite_to_normal_form(&r, &start, 100).unwrap();
        assert_eq!(nf, bv4("0010"));
        assert!(!trace.is_empty());

        // the interleaving evaluates the loop counter sum before the
        // accumulator sum
        let two_sums = Term::app(
            u1(),
            vec![
                bv4("0010"),
                theory::bvadd(bv4("0000"), bv4("0001")),
                theory::bvadd(bv4("0000"), bv4("0001")),
            ],
        );
        let one_sum = Term::app(
            u1(),
            vec![
                bv4("0010"),
                bv4("0001"),
                theory::bvadd(bv4("0000"), bv4("0001")),
            ],
        );
        let pos_two = trace.iter().position(|t| *t == two_sums).unwrap();
        assert_eq!(trace[pos_two + 1], one_sum);
    }

    #[test]
    fn trace_on_normal_form_is_empty() {
        let r = counting_system();
        let (nf, trace) = rewrite_to_normal_form(&r, &bv4("0111"), 10).unwrap();
        assert_eq!(nf, bv4("0111"));
        assert!(trace.is_empty());
    }

    #[test]
    fn zero_iterations() {
        let r = counting_system();
        let start = Term::app(cnt(), vec![bv4("0000")]);
        let (nf, _) = rewrite_to_normal_form(&r, &start, 100).unwrap();
        assert_eq!(nf, bv4("0000"));
    }

    #[test]
    fn counting_is_identity_on_non_negative_inputs() {
        let r = counting_system();
        for xv in 0..8u128 {
            let x = BitVec::from_u128(4, xv);
            let start = Term::app(cnt(), vec![Term::bv(x.clone())]);
            let (nf, _) = rewrite_to_normal_form(&r, &start, 200).unwrap();
            assert_eq!(nf, Term::bv(x));
        }
    }

    #[test]
    fn traces_are_well_sorted_chains() {
        let r = counting_system();
        let start = Term::app(cnt(), vec![bv4("0011")]);
        let (_, trace) = rewrite_to_normal_form(&r, &start, 200).unwrap();
        let mut prev = start;
        for t in trace {
            assert!(t.well_sorted());
            let succs = rewrite_successors(&r, &prev).unwrap();
            assert!(succs.contains(&t), "{t} is not a one-step successor of {prev}");
            prev = t;
        }
    }

    #[test]
    fn step_cap_reports_partial_trace() {
        let r = counting_system();
        let start = Term::app(cnt(), vec![bv4("0111")]);
        match rewrite_to_normal_form(&r, &start, 3) {
            Err(RewriteError::StepCapExceeded { cap, partial_trace }) => {
                assert_eq!(cap, 3);
                assert_eq!(partial_trace.len(), 3);
            }
            other => panic!("expected step cap error, got {other:?}"),
        }
    }

    #[test]
    fn values_are_exactly_the_ground_theory_normal_forms() {
        let r = counting_system();
        // ground theory terms over a few seeds: values stay normal,
        // operator applications reduce
        for a in 0..4u128 {
            for b in 0..4u128 {
                let x = Term::bv(BitVec::from_u128(4, a));
                let y = Term::bv(BitVec::from_u128(4, b));
                assert!(rewrite_successors(&r, &x).unwrap().is_empty());
                for t in [
                    theory::bvadd(x.clone(), y.clone()),
                    theory::bvsub(x.clone(), y.clone()),
                    theory::cmp(CmpOp::Ule, x.clone(), y.clone()),
                ] {
                    assert!(!rewrite_successors(&r, &t).unwrap().is_empty());
                }
            }
        }
    }

    #[test]
    fn unbound_rhs_variables_are_rejected() {
        let f = Symbol::plain("f", vec![Sort::Bv(4)], Sort::Bv(4));
        let bad = ConstrainedRule::unconditional(
            Term::app(f.clone(), vec![v("x")]),
            v("y"),
        );
        match Lctrs::new(vec![f], vec![bad]) {
            Err(LctrsError::UnboundRhsVariable { rule: 1, var }) => assert_eq!(var, "y"),
            other => panic!("expected unbound-variable error, got {other:?}"),
        }
    }

    #[test]
    fn guard_only_variables_enumerate() {
        // f(x) -> g(x) [y <u x] steps iff some value y is below x
        let f = Symbol::plain("f", vec![Sort::Bv(4)], Sort::Bv(4));
        let g = Symbol::plain("g", vec![Sort::Bv(4)], Sort::Bv(4));
        let rule = ConstrainedRule::new(
            Term::app(f.clone(), vec![v("x")]),
            Term::app(g.clone(), vec![v("x")]),
            theory::cmp(CmpOp::Ult, v("y"), v("x")),
        );
        let r = Lctrs::new(vec![f.clone(), g.clone()], vec![rule]).unwrap();
        let with_room = Term::app(f.clone(), vec![bv4("0001")]);
        assert_eq!(
            rewrite_successors(&r, &with_room).unwrap(),
            BTreeSet::from([Term::app(g.clone(), vec![bv4("0001")])])
        );
        let stuck = Term::app(f, vec![bv4("0000")]);
        assert!(rewrite_successors(&r, &stuck).unwrap().is_empty());
    }

    #[test]
    fn defined_symbols_of_counting_system() {
        let r = counting_system();
        let names: Vec<String> = r.defined_symbols().iter().map(|s| s.name.clone()).collect();
        assert_eq!(names, vec!["cnt", "u1"]);
    }

    #[test]
    fn normalize_ground_theory_evaluates() {
        let t = theory::bvadd(bv4("0101"), bv4("0001"));
        assert_eq!(
            normalize_ground_theory(&t).unwrap(),
            Value::Bv(BitVec::from_binary_str("0110").unwrap())
        );
    }
}
