//! The singleton self-loop removal processor.
//!
//! A singleton self-loop problem has the shape
//! `{ f#(x1,...,xn) -> f#(t1,...,tn) [phi] }` with pairwise distinct
//! variables on the left, a satisfiable guard, and a self-edge in the
//! dependency graph. The processor proves such a problem chain-free by
//! finding an argument position `i` that behaves like a loop variable:
//!
//! * the guard's evaluation depends on the other positions only through
//!   values they preserve ([`preserves_constraint`]),
//! * position `i` changes by a fixed nonzero increment `delta` per step
//!   ([`increment_analysis`]), and
//! * either `delta` is odd and no value of the loop variable satisfies the
//!   guard under every choice of the remaining variables
//!   ([`check_odd_increment`]), or an explicit interval witness `[u, v)` of
//!   unsigned length at least `2^a` exists whose bounds keep their values
//!   under the loop update and which the guard excludes
//!   ([`check_interval_witness`]).
//!
//! Odd increments visit every bit-vector value, and increments `c·2^a`
//! visit every value of their residue class modulo `2^a`, so a loop
//! argument stepped by the increment must eventually enter any preserved
//! interval of length `2^a` or more; inside the interval the guard fails
//! and the chain stops. Either criterion therefore certifies that the
//! problem is chain-free, and the processor returns the solved problem set.
//!
//! Every judgment is delegated to the enumeration solver. A solver
//! capacity failure anywhere collapses to "criterion not established",
//! never to a wrong verdict.

use crate::bitvec::{BitVec, CmpOp};
use crate::dp::{dg_approximation, DpProblem};
use crate::solver::{Formula, Solver, SolverError};
use crate::term::{theory, Sort, Substitution, SymbolKind, Symbol, Term, Var};
use std::collections::BTreeSet;
use std::fmt;

/// Default width cap for the interval-witness template search.
pub const DEFAULT_WITNESS_WIDTH_CAP: u32 = 8;

/// Why a problem is not a usable singleton self-loop.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SsrSkip {
    #[error("problem is not a singleton")]
    NotSingleton,
    #[error("left-hand side arguments are not pairwise distinct variables")]
    LhsNotDistinctVars,
    #[error("left- and right-hand side roots differ")]
    RootMismatch,
    #[error("guard is unsatisfiable")]
    GuardUnsat,
    #[error("pair has no self-edge in the dependency graph")]
    NoSelfEdge,
    #[error("solver capacity exceeded while building the view")]
    SolverCapacity,
}

/// A validated singleton self-loop view of a DP problem.
///
/// Argument positions are 1-based throughout this module, matching the
/// usual convention for term positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingletonSelfLoop {
    pub pair_id: usize,
    pub marked: Symbol,
    pub lhs_vars: Vec<Var>,
    pub rhs_args: Vec<Term>,
    pub guard: Term,
    /// 1-based positions whose argument sort is a bit-vector sort.
    pub bv_positions: Vec<usize>,
}

impl SingletonSelfLoop {
    pub fn arity(&self) -> usize {
        self.lhs_vars.len()
    }

    /// Bit-vector width of a 1-based position, if it has one.
    pub fn width_at(&self, pos: usize) -> Option<u32> {
        self.lhs_vars.get(pos - 1)?.sort.bv_width()
    }

    pub fn lhs_var(&self, pos: usize) -> &Var {
        &self.lhs_vars[pos - 1]
    }

    pub fn rhs_arg(&self, pos: usize) -> &Term {
        &self.rhs_args[pos - 1]
    }

    /// The update substitution restricted to the given 1-based positions:
    /// `{ x_j -> t_j | j in positions }`.
    pub fn update_subst(&self, positions: impl IntoIterator<Item = usize>) -> Substitution {
        Substitution::from_pairs(
            positions
                .into_iter()
                .map(|j| (self.lhs_vars[j - 1].clone(), self.rhs_args[j - 1].clone())),
        )
    }

    /// Every 1-based position except `i`.
    pub fn positions_except(&self, i: usize) -> BTreeSet<usize> {
        (1..=self.arity()).filter(|&j| j != i).collect()
    }

    /// Variables of the guard in deterministic order: left-hand-side
    /// variables first (by position), then remaining guard variables in
    /// order of occurrence.
    fn guard_vars_ordered(&self) -> Vec<Var> {
        let guard_vars = self.guard.vars();
        let mut out: Vec<Var> = self
            .lhs_vars
            .iter()
            .filter(|v| guard_vars.contains(v))
            .cloned()
            .collect();
        for v in guard_vars {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }
}

/// Recognizes a singleton self-loop problem, checking all view invariants.
pub fn as_singleton_self_loop(
    p: &DpProblem,
    solver: &Solver,
) -> Result<SingletonSelfLoop, SsrSkip> {
    if p.pairs.len() != 1 {
        return Err(SsrSkip::NotSingleton);
    }
    let pair = &p.pairs[0];
    let (lhs, rhs) = (&pair.rule.lhs, &pair.rule.rhs);
    let root = lhs.root().expect("dependency pair left-hand side is an application");
    debug_assert_eq!(root.kind, SymbolKind::Marked);
    if rhs.root() != Some(root) {
        return Err(SsrSkip::RootMismatch);
    }

    let mut lhs_vars = Vec::with_capacity(lhs.args().len());
    for arg in lhs.args() {
        match arg {
            Term::Var(v) if !lhs_vars.contains(v) => lhs_vars.push(v.clone()),
            _ => return Err(SsrSkip::LhsNotDistinctVars),
        }
    }

    match solver.is_satisfiable(&Formula::atom(pair.rule.guard.clone())) {
        Ok(true) => {}
        Ok(false) => return Err(SsrSkip::GuardUnsat),
        Err(_) => return Err(SsrSkip::SolverCapacity),
    }

    let graph = dg_approximation(p, solver);
    if !graph.has_edge(pair.id, pair.id) {
        return Err(SsrSkip::NoSelfEdge);
    }

    let bv_positions = lhs_vars
        .iter()
        .enumerate()
        .filter(|(_, v)| matches!(v.sort, Sort::Bv(_)))
        .map(|(j, _)| j + 1)
        .collect();

    Ok(SingletonSelfLoop {
        pair_id: pair.id,
        marked: root.clone(),
        lhs_vars,
        rhs_args: rhs.args().to_vec(),
        guard: pair.rule.guard.clone(),
        bv_positions,
    })
}

/// Whether the loop rule preserves its constraint with respect to the
/// 1-based position set `kept`: the guard mentions every position outside
/// `kept`, guard-relevant positions update through theory terms, and
/// updating the `kept` positions does not change the guard's truth (with
/// non-argument guard variables existentially closed on both sides).
pub fn preserves_constraint(
    view: &SingletonSelfLoop,
    kept: &BTreeSet<usize>,
    solver: &Solver,
) -> Result<bool, SolverError> {
    let n = view.arity();
    assert!(kept.iter().all(|&j| (1..=n).contains(&j)), "positions are 1-based");
    let guard_vars = view.guard.vars();

    for j in 1..=n {
        if !kept.contains(&j) && !guard_vars.contains(view.lhs_var(j)) {
            return Ok(false);
        }
    }
    for j in 1..=n {
        if guard_vars.contains(view.lhs_var(j)) && !view.rhs_arg(j).is_theory_term() {
            return Ok(false);
        }
    }

    let theta = view.update_subst(kept.iter().copied());
    let outer: Vec<Var> = guard_vars
        .into_iter()
        .filter(|v| !view.lhs_vars.contains(v))
        .collect();
    let closed = if outer.is_empty() {
        Formula::atom(view.guard.clone())
    } else {
        Formula::exists(outer, Formula::atom(view.guard.clone()))
    };
    let updated = closed.substitute(&theta);
    solver.is_valid(&Formula::iff(closed, updated))
}

/// The fixed per-step change of a loop argument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncrementInfo {
    /// 1-based argument position.
    pub position: usize,
    /// The constant value of `t_i - x_i`; never zero.
    pub delta: BitVec,
    /// Trailing zero digits of `delta`, in `[0, l-1]`.
    pub trailing_zeros: usize,
}

impl IncrementInfo {
    /// The digits of `delta` above the lowest one digit.
    pub fn leading_digits(&self) -> &[bool] {
        let l = self.delta.width() as usize;
        &self.delta.bits()[..l - 1 - self.trailing_zeros]
    }
}

impl fmt::Display for IncrementInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "increment {} (a={}) at position {}",
            self.delta, self.trailing_zeros, self.position
        )
    }
}

/// Determines whether position `i` is updated by a fixed nonzero constant:
/// whether `t_i - x_i` evaluates to the same nonzero value under every
/// assignment of its variables.
pub fn increment_analysis(
    view: &SingletonSelfLoop,
    i: usize,
    solver: &Solver,
) -> Result<Option<IncrementInfo>, SolverError> {
    if view.width_at(i).is_none() {
        return Ok(None);
    }
    let t_i = view.rhs_arg(i);
    if !t_i.is_theory_term() || t_i.sort() != view.lhs_var(i).sort {
        return Ok(None);
    }
    let diff = theory::bvsub(t_i.clone(), Term::Var(view.lhs_var(i).clone()));
    let vars = diff.vars();
    let delta = match solver.constant_value(&diff, &vars)? {
        Some(d) if !d.is_zero() => d,
        _ => return Ok(None),
    };
    let trailing_zeros = delta.trailing_zeros();
    Ok(Some(IncrementInfo {
        position: i,
        delta,
        trailing_zeros,
    }))
}

/// The odd-increment criterion for position `i`: the constraint is
/// preserved w.r.t. the other positions, the increment is odd, and
/// universally quantifying the loop variable makes the guard unsatisfiable
/// (some loop value falsifies the guard no matter what the other variables
/// are). Since an odd step visits every value, the loop must reach such a
/// value and stop.
pub fn check_odd_increment(
    view: &SingletonSelfLoop,
    i: usize,
    solver: &Solver,
) -> Result<bool, SolverError> {
    if !preserves_constraint(view, &view.positions_except(i), solver)? {
        return Ok(false);
    }
    match increment_analysis(view, i, solver)? {
        Some(info) if info.trailing_zeros == 0 => {}
        _ => return Ok(false),
    }
    let closed = Formula::forall(
        vec![view.lhs_var(i).clone()],
        Formula::atom(view.guard.clone()),
    );
    Ok(!solver.is_satisfiable(&closed)?)
}

/// An interval `[lower, upper)` of unsigned bit-vector values, given by
/// theory terms over the guard's variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalWitness {
    pub lower: Term,
    pub upper: Term,
}

impl fmt::Display for IntervalWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u = {}, v = {}", self.lower, self.upper)
    }
}

/// The interval-witness criterion for position `i` with increment `info`:
/// under the guard, both interval bounds keep their values across the loop
/// update and the interval is at least `2^a` long; and for every loop value
/// the guard forces the value outside the interval (either in the ordinary
/// orientation with `u <u v`, or in the wrapped orientation).
pub fn check_interval_witness(
    view: &SingletonSelfLoop,
    i: usize,
    info: &IncrementInfo,
    witness: &IntervalWitness,
    solver: &Solver,
) -> Result<bool, SolverError> {
    let l = view
        .width_at(i)
        .expect("interval positions carry bit-vector sorts");
    debug_assert_eq!(witness.lower.sort(), Sort::Bv(l));
    debug_assert_eq!(witness.upper.sort(), Sort::Bv(l));
    debug_assert!(witness.lower.is_theory_term() && witness.upper.is_theory_term());
    debug_assert!(
        {
            let scope = view.guard.vars();
            witness
                .lower
                .vars()
                .iter()
                .chain(witness.upper.vars().iter())
                .all(|v| scope.contains(v))
        },
        "interval bounds range over the guard's variables"
    );

    let theta = view.update_subst(1..=view.arity());
    let u = witness.lower.clone();
    let v = witness.upper.clone();
    let guard = Formula::atom(view.guard.clone());
    let min_length = Term::bv(BitVec::power_of_two(l, info.trailing_zeros));

    let bounds_invariant = Formula::implies(
        guard.clone(),
        Formula::And(vec![
            Formula::atom(theory::eq(u.clone(), theta.apply(&u))),
            Formula::atom(theory::eq(v.clone(), theta.apply(&v))),
            Formula::atom(theory::cmp(
                CmpOp::Uge,
                theory::bvsub(v.clone(), u.clone()),
                min_length,
            )),
        ]),
    );
    if !solver.is_valid(&bounds_invariant)? {
        return Ok(false);
    }

    let x_i = Term::Var(view.lhs_var(i).clone());
    let ordinary = Formula::forall(
        vec![view.lhs_var(i).clone()],
        Formula::implies(
            guard.clone(),
            Formula::And(vec![
                Formula::Or(vec![
                    Formula::atom(theory::cmp(CmpOp::Ult, x_i.clone(), u.clone())),
                    Formula::atom(theory::cmp(CmpOp::Ule, v.clone(), x_i.clone())),
                ]),
                Formula::atom(theory::cmp(CmpOp::Ult, u.clone(), v.clone())),
            ]),
        ),
    );
    let wrapped = Formula::forall(
        vec![view.lhs_var(i).clone()],
        Formula::implies(
            guard,
            Formula::And(vec![
                Formula::atom(theory::cmp(CmpOp::Ule, v.clone(), x_i.clone())),
                Formula::atom(theory::cmp(CmpOp::Ult, x_i, u)),
            ]),
        ),
    );
    solver.is_valid(&Formula::Or(vec![ordinary, wrapped]))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SsrError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("witness search width {width} exceeds the cap {cap}")]
    WidthCapExceeded { width: u32, cap: u32 },
}

/// Enumerates interval-witness templates for position `i` and returns the
/// first pair validated by [`check_interval_witness`].
///
/// The template space per side is `{ y, y + k, k }` for `y` over the
/// guard's bit-vector variables of the position's width and `k` over all
/// constants of that width, ordered variables first (declaration order),
/// then variable-plus-constant (constants ascending), then constants
/// ascending; `u` iterates in the outer loop. Bounds built from variables
/// the update does not preserve can never validate, so they are skipped.
pub fn search_interval_witness(
    view: &SingletonSelfLoop,
    i: usize,
    info: &IncrementInfo,
    solver: &Solver,
    width_cap: u32,
) -> Result<Option<IntervalWitness>, SsrError> {
    let l = view.width_at(i).expect("position must be a bit-vector position");
    if l > width_cap {
        return Err(SsrError::WidthCapExceeded { width: l, cap: width_cap });
    }

    // Only variables whose value the update provably preserves under the
    // guard can appear in a validated bound.
    let theta = view.update_subst(1..=view.arity());
    let guard = Formula::atom(view.guard.clone());
    let mut invariant_vars = Vec::new();
    for y in view.guard_vars_ordered() {
        if y.sort != Sort::Bv(l) {
            continue;
        }
        let stable = Formula::implies(
            guard.clone(),
            Formula::atom(theory::eq(
                Term::Var(y.clone()),
                theta.apply(&Term::Var(y.clone())),
            )),
        );
        match solver.is_valid(&stable) {
            Ok(true) => invariant_vars.push(y),
            Ok(false) => {}
            Err(e) => return Err(e.into()),
        }
    }

    let constants: Vec<Term> = (0..(1u128 << l))
        .map(|k| Term::bv(BitVec::from_u128(l, k)))
        .collect();
    let mut candidates: Vec<Term> =
        invariant_vars.iter().map(|y| Term::Var(y.clone())).collect();
    for y in &invariant_vars {
        for k in &constants {
            candidates.push(theory::bvadd(Term::Var(y.clone()), k.clone()));
        }
    }
    candidates.extend(constants);

    for u in &candidates {
        for v in &candidates {
            let witness = IntervalWitness {
                lower: u.clone(),
                upper: v.clone(),
            };
            match check_interval_witness(view, i, info, &witness, solver) {
                Ok(true) => return Ok(Some(witness)),
                Ok(false) => {}
                // capacity on one template skips it; soundness is unaffected
                Err(_) => {}
            }
        }
    }
    Ok(None)
}

/// How a singleton self-loop was discharged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SsrMethod {
    OddIncrement,
    IntervalWitness(IntervalWitness),
}

/// Certificate recorded in the proof tree. A certificate means the
/// processor returns the solved problem set (the empty problem).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SsrCertificate {
    pub position: usize,
    pub increment: IncrementInfo,
    pub method: SsrMethod,
}

impl fmt::Display for SsrCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.method {
            SsrMethod::OddIncrement => write!(
                f,
                "position {}: {} is odd and the guard rejects some loop value universally",
                self.position, self.delta_display()
            ),
            SsrMethod::IntervalWitness(w) => write!(
                f,
                "position {}: {}; preserved interval {}",
                self.position,
                self.delta_display(),
                w
            ),
        }
    }
}

impl SsrCertificate {
    fn delta_display(&self) -> String {
        format!(
            "increment {} (a={})",
            self.increment.delta, self.increment.trailing_zeros
        )
    }
}

/// The singleton self-loop removal processor. `Some(certificate)` means the
/// problem set `{ empty problem }` is returned, i.e. the input is proved
/// chain-free; `None` means the processor is inapplicable. Positions are
/// tried in ascending order, the odd-increment criterion before the
/// interval-witness search at each position.
pub fn proc_ssr(
    p: &DpProblem,
    solver: &Solver,
    witness_width_cap: u32,
) -> Option<SsrCertificate> {
    let view = as_singleton_self_loop(p, solver).ok()?;
    for &i in &view.bv_positions {
        if let Ok(true) = check_odd_increment(&view, i, solver) {
            let increment = increment_analysis(&view, i, solver)
                .ok()
                .flatten()
                .expect("odd-increment criterion implies a constant increment");
            return Some(SsrCertificate {
                position: i,
                increment,
                method: SsrMethod::OddIncrement,
            });
        }
        let preserved = preserves_constraint(&view, &view.positions_except(i), solver);
        if !matches!(preserved, Ok(true)) {
            continue;
        }
        let info = match increment_analysis(&view, i, solver) {
            Ok(Some(info)) => info,
            _ => continue,
        };
        if let Ok(Some(witness)) = search_interval_witness(&view, i, &info, solver, witness_width_cap)
        {
            return Some(SsrCertificate {
                position: i,
                increment: info,
                method: SsrMethod::IntervalWitness(witness),
            });
        }
    }
    None
}
