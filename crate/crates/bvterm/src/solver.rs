//! Satisfiability and validity of quantified formulas over bit-vector
//! theory terms, decided by exhaustive enumeration.
//!
//! Every domain in scope is finite (booleans and fixed-width bit-vectors),
//! so enumeration is a complete decision procedure. A configurable cap
//! bounds the total number of assignments a query may touch; exceeding it
//! yields a distinct [`SolverError::CapacityExceeded`] outcome that callers
//! must treat as "unknown", never as a verdict.

use crate::bitvec::BitVec;
use crate::term::{Sort, SymbolKind, Term, TheoryOp, Value, Var};
use std::collections::BTreeMap;
use std::fmt;

/// Default enumeration cap: total assignments per query.
pub const DEFAULT_ENUM_CAP: u128 = 1 << 24;

/// A quantified boolean formula over theory terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    /// A boolean theory term.
    Atom(Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Forall(Vec<Var>, Box<Formula>),
    Exists(Vec<Var>, Box<Formula>),
}

impl Formula {
    pub fn atom(t: Term) -> Formula {
        assert_eq!(t.sort(), Sort::Bool, "formula atoms must have sort bool");
        Formula::Atom(t)
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn forall(vars: Vec<Var>, body: Formula) -> Formula {
        Formula::Forall(vars, Box::new(body))
    }

    pub fn exists(vars: Vec<Var>, body: Formula) -> Formula {
        Formula::Exists(vars, Box::new(body))
    }

    /// Free variables in deterministic first-occurrence order.
    pub fn free_vars(&self) -> Vec<Var> {
        fn walk(f: &Formula, bound: &mut Vec<Var>, out: &mut Vec<Var>) {
            match f {
                Formula::Atom(t) => {
                    for v in t.vars() {
                        if !bound.contains(&v) && !out.contains(&v) {
                            out.push(v);
                        }
                    }
                }
                Formula::Not(a) => walk(a, bound, out),
                Formula::And(fs) | Formula::Or(fs) => {
                    for a in fs {
                        walk(a, bound, out);
                    }
                }
                Formula::Implies(a, b) | Formula::Iff(a, b) => {
                    walk(a, bound, out);
                    walk(b, bound, out);
                }
                Formula::Forall(vs, a) | Formula::Exists(vs, a) => {
                    let n = bound.len();
                    bound.extend(vs.iter().cloned());
                    walk(a, bound, out);
                    bound.truncate(n);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut Vec::new(), &mut out);
        out
    }

    /// All quantifier-bound variables, with repetition per binder.
    fn bound_vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            match f {
                Formula::Atom(_) => {}
                Formula::Not(a) => stack.push(a),
                Formula::And(fs) | Formula::Or(fs) => stack.extend(fs.iter()),
                Formula::Implies(a, b) | Formula::Iff(a, b) => {
                    stack.push(a);
                    stack.push(b);
                }
                Formula::Forall(vs, a) | Formula::Exists(vs, a) => {
                    out.extend(vs.iter().cloned());
                    stack.push(a);
                }
            }
        }
        out
    }

    /// Capture-avoiding substitution. Bound variables shadow the
    /// substitution; binders whose variables occur free in the substituted
    /// terms are renamed first.
    pub fn substitute(&self, sigma: &crate::term::Substitution) -> Formula {
        match self {
            Formula::Atom(t) => Formula::Atom(sigma.apply(t)),
            Formula::Not(a) => Formula::not(a.substitute(sigma)),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.substitute(sigma)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.substitute(sigma)).collect()),
            Formula::Implies(a, b) => Formula::implies(a.substitute(sigma), b.substitute(sigma)),
            Formula::Iff(a, b) => Formula::iff(a.substitute(sigma), b.substitute(sigma)),
            Formula::Forall(vs, a) => {
                let (vs, a) = rebind(vs, a, sigma);
                Formula::Forall(vs, Box::new(a))
            }
            Formula::Exists(vs, a) => {
                let (vs, a) = rebind(vs, a, sigma);
                Formula::Exists(vs, Box::new(a))
            }
        }
    }
}

/// Renames binder variables clashing with `sigma`'s range, drops shadowed
/// bindings, and substitutes into the body.
fn rebind(
    vs: &[Var],
    body: &Formula,
    sigma: &crate::term::Substitution,
) -> (Vec<Var>, Formula) {
    use crate::term::Substitution;

    let live: Vec<(&Var, &Term)> = sigma
        .iter()
        .filter(|(v, _)| !vs.contains(v))
        .collect();
    if live.is_empty() {
        return (vs.to_vec(), body.clone());
    }

    // Variables free in the terms being substituted in; binders among them
    // would capture and must be renamed.
    let mut range_vars: Vec<Var> = Vec::new();
    for (_, t) in &live {
        for v in t.vars() {
            if !range_vars.contains(&v) {
                range_vars.push(v);
            }
        }
    }

    let mut new_vs = Vec::with_capacity(vs.len());
    let mut renaming = Substitution::new();
    for v in vs {
        if range_vars.contains(v) {
            let mut name = format!("{}'", v.name);
            let taken = |n: &str| {
                range_vars.iter().any(|w| w.name == n)
                    || vs.iter().any(|w| w.name == n)
                    || body.free_vars().iter().any(|w| w.name == n)
            };
            while taken(&name) {
                name.push('\'');
            }
            let fresh = Var::new(name, v.sort.clone());
            renaming.insert(v.clone(), Term::Var(fresh.clone()));
            new_vs.push(fresh);
        } else {
            new_vs.push(v.clone());
        }
    }

    let reduced = Substitution::from_pairs(
        live.into_iter().map(|(v, t)| (v.clone(), t.clone())),
    );
    let body = if renaming.is_empty() {
        body.clone()
    } else {
        body.substitute(&renaming)
    };
    (new_vs, body.substitute(&reduced))
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(t) => write!(f, "{t}"),
            Formula::Not(a) => write!(f, "(not {a})"),
            Formula::And(fs) => {
                write!(f, "(and")?;
                for a in fs {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
            Formula::Or(fs) => {
                write!(f, "(or")?;
                for a in fs {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
            Formula::Implies(a, b) => write!(f, "(=> {a} {b})"),
            Formula::Iff(a, b) => write!(f, "(iff {a} {b})"),
            Formula::Forall(vs, a) | Formula::Exists(vs, a) => {
                let kw = if matches!(self, Formula::Forall(..)) {
                    "forall"
                } else {
                    "exists"
                };
                write!(f, "({kw} (")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "({} {})", v.name, v.sort)?;
                }
                write!(f, ") {a})")
            }
        }
    }
}

/// A finite map from variables to values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    map: BTreeMap<Var, Value>,
}

impl Assignment {
    pub fn new() -> Assignment {
        Assignment::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, Value)>) -> Assignment {
        Assignment {
            map: pairs.into_iter().collect(),
        }
    }

    pub fn set(&mut self, v: Var, val: Value) {
        self.map.insert(v, val);
    }

    pub fn get(&self, v: &Var) -> Option<&Value> {
        self.map.get(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Value)> {
        self.map.iter()
    }
}

impl fmt::Display for Assignment {
    /// Witness syntax for diagnostics: values in SMT-LIB literal form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, val)) in self.map.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{} := {}", v.name, val)?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolverError {
    #[error("enumeration capacity exceeded: {required} assignments required, cap is {cap}")]
    CapacityExceeded { required: u128, cap: u128 },
    #[error("sort {0} has no enumerable value domain")]
    UnsupportedSort(Sort),
    #[error("unbound variable {0} during evaluation")]
    UnboundVariable(String),
    #[error("non-theory symbol {0} during evaluation")]
    NonTheorySymbol(String),
}

/// Number of values of a sort, if the sort is enumerable and the count fits
/// in `u128`.
pub fn domain_size(sort: &Sort) -> Option<u128> {
    match sort {
        Sort::Bool => Some(2),
        Sort::Bv(w) if *w < 128 => Some(1u128 << w),
        _ => None,
    }
}

/// The `index`-th value of an enumerable sort, counting bit-vectors by
/// unsigned value ascending and booleans false-first.
pub fn value_at(sort: &Sort, index: u128) -> Value {
    match sort {
        Sort::Bool => Value::Bool(index == 1),
        Sort::Bv(w) => Value::Bv(BitVec::from_u128(*w, index)),
        _ => panic!("sort {sort} is not enumerable"),
    }
}

/// Evaluates a theory term bottom-up under a total assignment.
pub fn eval_term(t: &Term, alpha: &Assignment) -> Result<Value, SolverError> {
    match t {
        Term::Val(v) => Ok(v.clone()),
        Term::Var(v) => alpha
            .get(v)
            .cloned()
            .ok_or_else(|| SolverError::UnboundVariable(v.name.clone())),
        Term::App(f, args) => {
            let op = match &f.kind {
                SymbolKind::Theory(op) => *op,
                _ => return Err(SolverError::NonTheorySymbol(f.name.clone())),
            };
            let vals: Vec<Value> = args
                .iter()
                .map(|a| eval_term(a, alpha))
                .collect::<Result<_, _>>()?;
            Ok(apply_theory_op(op, &vals))
        }
    }
}

fn apply_theory_op(op: TheoryOp, vals: &[Value]) -> Value {
    let bv = |i: usize| vals[i].as_bv().expect("well-sorted bit-vector argument");
    let b = |i: usize| vals[i].as_bool().expect("well-sorted boolean argument");
    match op {
        TheoryOp::BvAdd => Value::Bv(bv(0).add(bv(1))),
        TheoryOp::BvSub => Value::Bv(bv(0).sub(bv(1))),
        TheoryOp::Cmp(c) => Value::Bool(BitVec::compare(c, bv(0), bv(1))),
        TheoryOp::And => Value::Bool(b(0) && b(1)),
        TheoryOp::Or => Value::Bool(b(0) || b(1)),
        TheoryOp::Not => Value::Bool(!b(0)),
    }
}

/// Evaluates a formula under an assignment covering its free variables.
/// Quantifiers range over every value of the bound variable's sort.
pub fn eval_formula(f: &Formula, alpha: &Assignment) -> Result<bool, SolverError> {
    match f {
        Formula::Atom(t) => match eval_term(t, alpha)? {
            Value::Bool(b) => Ok(b),
            Value::Bv(_) => panic!("atom of non-boolean sort"),
        },
        Formula::Not(a) => Ok(!eval_formula(a, alpha)?),
        Formula::And(fs) => {
            for a in fs {
                if !eval_formula(a, alpha)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Formula::Or(fs) => {
            for a in fs {
                if eval_formula(a, alpha)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Formula::Implies(a, b) => Ok(!eval_formula(a, alpha)? || eval_formula(b, alpha)?),
        Formula::Iff(a, b) => Ok(eval_formula(a, alpha)? == eval_formula(b, alpha)?),
        Formula::Forall(vs, a) => eval_quantified(vs, a, alpha, true),
        Formula::Exists(vs, a) => eval_quantified(vs, a, alpha, false),
    }
}

fn eval_quantified(
    vs: &[Var],
    body: &Formula,
    alpha: &Assignment,
    universal: bool,
) -> Result<bool, SolverError> {
    match vs.split_first() {
        None => eval_formula(body, alpha),
        Some((v, rest)) => {
            let size = domain_size(&v.sort)
                .ok_or_else(|| SolverError::UnsupportedSort(v.sort.clone()))?;
            let mut alpha = alpha.clone();
            for i in 0..size {
                alpha.set(v.clone(), value_at(&v.sort, i));
                let r = eval_quantified(rest, body, &alpha, universal)?;
                if r != universal {
                    return Ok(!universal);
                }
            }
            Ok(universal)
        }
    }
}

/// The enumeration solver. Stateless apart from its capacity configuration;
/// identical inputs always produce identical results.
#[derive(Debug, Clone)]
pub struct Solver {
    cap: u128,
}

impl Default for Solver {
    fn default() -> Self {
        Solver::new()
    }
}

impl Solver {
    pub fn new() -> Solver {
        Solver {
            cap: DEFAULT_ENUM_CAP,
        }
    }

    pub fn with_cap(cap: u128) -> Solver {
        Solver { cap }
    }

    pub fn cap(&self) -> u128 {
        self.cap
    }

    /// Upper bound on the assignments a query over `f` touches: the product
    /// of all free-variable domains and all quantified domains.
    fn enumeration_cost(&self, f: &Formula, free: &[Var]) -> Result<u128, SolverError> {
        let mut cost: u128 = 1;
        for v in free.iter().chain(f.bound_vars().iter()) {
            let size = domain_size(&v.sort)
                .ok_or_else(|| SolverError::UnsupportedSort(v.sort.clone()))?;
            cost = cost.checked_mul(size).ok_or(SolverError::CapacityExceeded {
                required: u128::MAX,
                cap: self.cap,
            })?;
        }
        if cost > self.cap {
            return Err(SolverError::CapacityExceeded {
                required: cost,
                cap: self.cap,
            });
        }
        Ok(cost)
    }

    /// The first satisfying assignment in enumeration order (each variable
    /// counted least-significant-first, variables in declaration order), or
    /// `None` if the formula is unsatisfiable.
    pub fn find_model(&self, f: &Formula) -> Result<Option<Assignment>, SolverError> {
        let free = f.free_vars();
        self.enumeration_cost(f, &free)?;
        let sizes: Vec<u128> = free
            .iter()
            .map(|v| domain_size(&v.sort).expect("checked above"))
            .collect();
        let mut indices = vec![0u128; free.len()];
        loop {
            let mut alpha = Assignment::new();
            for (v, &i) in free.iter().zip(&indices) {
                alpha.set(v.clone(), value_at(&v.sort, i));
            }
            if eval_formula(f, &alpha)? {
                return Ok(Some(alpha));
            }
            // odometer increment, first variable fastest
            let mut k = 0;
            loop {
                if k == free.len() {
                    return Ok(None);
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

    pub fn is_satisfiable(&self, f: &Formula) -> Result<bool, SolverError> {
        Ok(self.find_model(f)?.is_some())
    }

    /// Validity: true under every assignment of the free variables.
    pub fn is_valid(&self, f: &Formula) -> Result<bool, SolverError> {
        Ok(!self.is_satisfiable(&Formula::not(f.clone()))?)
    }

    /// The unique value a bit-vector theory term evaluates to under every
    /// assignment of `vars`, if one exists.
    pub fn constant_value(
        &self,
        t: &Term,
        vars: &[Var],
    ) -> Result<Option<BitVec>, SolverError> {
        debug_assert!(t.is_theory_term());
        debug_assert!(t.vars().iter().all(|v| vars.contains(v)));
        let mut cost: u128 = 1;
        for v in vars {
            let size = domain_size(&v.sort)
                .ok_or_else(|| SolverError::UnsupportedSort(v.sort.clone()))?;
            cost = cost.checked_mul(size).ok_or(SolverError::CapacityExceeded {
                required: u128::MAX,
                cap: self.cap,
            })?;
        }
        if cost > self.cap {
            return Err(SolverError::CapacityExceeded {
                required: cost,
                cap: self.cap,
            });
        }

        let sizes: Vec<u128> = vars
            .iter()
            .map(|v| domain_size(&v.sort).expect("checked above"))
            .collect();
        let mut indices = vec![0u128; vars.len()];
        let mut constant: Option<BitVec> = None;
        loop {
            let mut alpha = Assignment::new();
            for (v, &i) in vars.iter().zip(&indices) {
                alpha.set(v.clone(), value_at(&v.sort, i));
            }
            let val = match eval_term(t, &alpha)? {
                Value::Bv(b) => b,
                Value::Bool(_) => panic!("constant_value requires a bit-vector term"),
            };
            match &constant {
                None => constant = Some(val),
                Some(c) if *c != val => return Ok(None),
                Some(_) => {}
            }
            let mut k = 0;
            loop {
                if k == vars.len() {
                    return Ok(constant);
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
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitvec::CmpOp;
    use crate::term::{theory, Substitution};
    use proptest::prelude::*;

    fn bv4(s: &str) -> Term {
        Term::bv(BitVec::from_binary_str(s).unwrap())
    }

    fn var(n: &str) -> Var {
        Var::new(n, Sort::Bv(4))
    }

    fn guard_i_slt_x() -> Term {
        theory::cmp(CmpOp::Slt, Term::Var(var("i")), Term::Var(var("x")))
    }

    #[test]
    fn eval_term_examples() {
        let alpha = Assignment::new();
        assert_eq!(
            eval_term(&theory::bvadd(bv4("0000"), bv4("0001")), &alpha).unwrap(),
            Value::Bv(BitVec::from_binary_str("0001").unwrap())
        );

        let alpha = Assignment::from_pairs([
            (var("i"), Value::Bv(BitVec::from_binary_str("0010").unwrap())),
            (var("x"), Value::Bv(BitVec::from_binary_str("0010").unwrap())),
        ]);
        assert_eq!(
            eval_term(&guard_i_slt_x(), &alpha).unwrap(),
            Value::Bool(false)
        );

        let alpha = Assignment::from_pairs([(
            var("x"),
            Value::Bv(BitVec::from_binary_str("1111").unwrap()),
        )]);
        assert_eq!(
            eval_term(&Term::Var(var("x")), &alpha).unwrap(),
            Value::Bv(BitVec::from_binary_str("1111").unwrap())
        );
    }

    #[test]
    fn eval_term_errors() {
        assert!(matches!(
            eval_term(&Term::Var(var("q")), &Assignment::new()),
            Err(SolverError::UnboundVariable(_))
        ));
        let f = crate::term::Symbol::plain("cnt", vec![Sort::Bv(4)], Sort::Bv(4));
        assert!(matches!(
            eval_term(&Term::app(f, vec![bv4("0000")]), &Assignment::new()),
            Err(SolverError::NonTheorySymbol(_))
        ));
    }

    #[test]
    fn eval_formula_examples() {
        // forall i. i <s x is false under every x; check x = 0111
        let forall = Formula::forall(vec![var("i")], Formula::atom(guard_i_slt_x()));
        let alpha = Assignment::from_pairs([(
            var("x"),
            Value::Bv(BitVec::from_binary_str("0111").unwrap()),
        )]);
        assert!(!eval_formula(&forall, &alpha).unwrap());

        // exists i. i <s 0000 holds (i = 1000 is negative)
        let exists = Formula::exists(vec![var("i")], Formula::atom(guard_i_slt_x()));
        let alpha = Assignment::from_pairs([(
            var("x"),
            Value::Bv(BitVec::from_binary_str("0000").unwrap()),
        )]);
        assert!(eval_formula(&exists, &alpha).unwrap());

        assert!(eval_formula(&Formula::atom(Term::bool(true)), &Assignment::new()).unwrap());
    }

    #[test]
    fn exists_matches_explicit_enumeration() {
        // independent oracle: loop over all 16 values of i by hand
        for xv in 0..16i128 {
            let x = BitVec::from_u128(4, xv as u128);
            let mut expect = false;
            for iv in 0..16u128 {
                let i = BitVec::from_u128(4, iv);
                if i.to_signed() < x.to_signed() {
                    expect = true;
                }
            }
            let exists = Formula::exists(vec![var("i")], Formula::atom(guard_i_slt_x()));
            let alpha = Assignment::from_pairs([(var("x"), Value::Bv(x))]);
            assert_eq!(eval_formula(&exists, &alpha).unwrap(), expect);
        }
    }

    #[test]
    fn quantifier_semantics_against_explicit_loops_width_2() {
        let i2 = Var::new("i", Sort::Bv(2));
        let x2 = Var::new("x", Sort::Bv(2));
        let atom = theory::cmp(CmpOp::Ult, Term::Var(i2.clone()), Term::Var(x2.clone()));
        for xv in 0..4u128 {
            let alpha = Assignment::from_pairs([(x2.clone(), value_at(&Sort::Bv(2), xv))]);
            let mut conj = true;
            let mut disj = false;
            for iv in 0..4u128 {
                let mut a = alpha.clone();
                a.set(i2.clone(), value_at(&Sort::Bv(2), iv));
                let b = eval_formula(&Formula::atom(atom.clone()), &a).unwrap();
                conj &= b;
                disj |= b;
            }
            let forall = Formula::forall(vec![i2.clone()], Formula::atom(atom.clone()));
            let exists = Formula::exists(vec![i2.clone()], Formula::atom(atom.clone()));
            assert_eq!(eval_formula(&forall, &alpha).unwrap(), conj);
            assert_eq!(eval_formula(&exists, &alpha).unwrap(), disj);
        }
    }

    #[test]
    fn satisfiability_examples() {
        let solver = Solver::new();
        assert!(solver.is_satisfiable(&Formula::atom(guard_i_slt_x())).unwrap());

        let forall = Formula::forall(vec![var("i")], Formula::atom(guard_i_slt_x()));
        assert!(!solver.is_satisfiable(&forall).unwrap());

        // (i + 0001) - i = 0001 is valid
        let i = Term::Var(var("i"));
        let diff = theory::bvsub(theory::bvadd(i.clone(), bv4("0001")), i);
        let eq = theory::eq(diff, bv4("0001"));
        assert!(solver.is_valid(&Formula::atom(eq)).unwrap());
    }

    #[test]
    fn validity_duality() {
        let solver = Solver::new();
        let f = Formula::atom(guard_i_slt_x());
        assert_eq!(
            solver.is_valid(&f).unwrap(),
            !solver.is_satisfiable(&Formula::not(f.clone())).unwrap()
        );
    }

    #[test]
    fn constant_value_examples() {
        let solver = Solver::new();
        let i = Term::Var(var("i"));
        let x = Term::Var(var("x"));

        let diff = theory::bvsub(theory::bvadd(i.clone(), bv4("0001")), i.clone());
        assert_eq!(
            solver.constant_value(&diff, &[var("i")]).unwrap(),
            Some(BitVec::from_binary_str("0001").unwrap())
        );

        let zero = theory::bvsub(i.clone(), i.clone());
        assert_eq!(
            solver.constant_value(&zero, &[var("i")]).unwrap(),
            Some(BitVec::zero(4))
        );

        // i + x takes different values: witness two assignments explicitly
        let sum = theory::bvadd(i.clone(), x.clone());
        let a1 = Assignment::from_pairs([
            (var("i"), Value::Bv(BitVec::zero(4))),
            (var("x"), Value::Bv(BitVec::zero(4))),
        ]);
        let a2 = Assignment::from_pairs([
            (var("i"), Value::Bv(BitVec::from_u128(4, 1))),
            (var("x"), Value::Bv(BitVec::zero(4))),
        ]);
        assert_ne!(eval_term(&sum, &a1).unwrap(), eval_term(&sum, &a2).unwrap());
        assert_eq!(
            solver.constant_value(&sum, &[var("i"), var("x")]).unwrap(),
            None
        );
    }

    #[test]
    fn constant_value_agrees_with_random_assignments() {
        use rand::{Rng, SeedableRng};
        let solver = Solver::new();
        let i = Term::Var(var("i"));
        let diff = theory::bvsub(theory::bvadd(i.clone(), bv4("0011")), i);
        let c = solver.constant_value(&diff, &[var("i")]).unwrap().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let alpha = Assignment::from_pairs([(
                var("i"),
                Value::Bv(BitVec::from_u128(4, rng.random_range(0..16))),
            )]);
            assert_eq!(eval_term(&diff, &alpha).unwrap(), Value::Bv(c.clone()));
        }
    }

    #[test]
    fn capacity_errors_are_reported() {
        let solver = Solver::with_cap(8);
        let f = Formula::atom(guard_i_slt_x()); // 16 * 16 assignments
        match solver.is_satisfiable(&f) {
            Err(SolverError::CapacityExceeded { required, cap }) => {
                assert_eq!(required, 256);
                assert_eq!(cap, 8);
            }
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn unsupported_sorts_are_rejected() {
        let v = Var::new("s", Sort::Named("state".into()));
        let f = Formula::forall(vec![v], Formula::atom(Term::bool(true)));
        assert!(matches!(
            Solver::new().is_satisfiable(&f),
            Err(SolverError::UnsupportedSort(_))
        ));
    }

    #[test]
    fn determinism() {
        let solver = Solver::new();
        let f = Formula::atom(guard_i_slt_x());
        let m1 = solver.find_model(&f).unwrap();
        let m2 = solver.find_model(&f).unwrap();
        assert_eq!(m1, m2);
        // enumeration order: first variable counts fastest from zero
        let m = m1.unwrap();
        assert_eq!(
            m.get(&var("i")),
            Some(&Value::Bv(BitVec::from_binary_str("1000").unwrap()))
        );
        assert_eq!(
            m.get(&var("x")),
            Some(&Value::Bv(BitVec::from_binary_str("0000").unwrap()))
        );
    }

    #[test]
    fn capture_avoiding_substitution() {
        // (exists y. x = y){x -> y} must not capture the free y
        let x = var("x");
        let y = var("y");
        let body = Formula::atom(theory::eq(Term::Var(x.clone()), Term::Var(y.clone())));
        let f = Formula::exists(vec![y.clone()], body);
        let sigma = Substitution::from_pairs([(x.clone(), Term::Var(y.clone()))]);
        let g = f.substitute(&sigma);
        // original: exists y. x = y (valid); naive capture would give the
        // tautology exists y. y = y; correct result keeps y free
        assert_eq!(g.free_vars(), vec![y.clone()]);
        let solver = Solver::new();
        assert!(solver.is_valid(&g).unwrap()); // exists y'. y = y' still valid
        let h = Formula::iff(f.clone(), g.clone());
        assert!(solver.is_valid(&h).unwrap());
    }

    // Random formulas at width 2 for the duality property.
    fn arb_formula() -> impl Strategy<Value = Formula> {
        let v = |n: &'static str| Var::new(n, Sort::Bv(2));
        let atom = prop_oneof![
            Just(Formula::atom(theory::cmp(
                CmpOp::Ult,
                Term::Var(v("a")),
                Term::Var(v("b"))
            ))),
            Just(Formula::atom(theory::cmp(
                CmpOp::Slt,
                Term::Var(v("a")),
                Term::Var(v("b"))
            ))),
            Just(Formula::atom(theory::eq(
                Term::Var(v("a")),
                Term::bv(BitVec::from_u128(2, 1))
            ))),
        ];
        atom.prop_recursive(3, 12, 2, move |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Formula::And(vec![a, b])),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Formula::Or(vec![a, b])),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
                inner
                    .clone()
                    .prop_map(|a| Formula::forall(vec![Var::new("a", Sort::Bv(2))], a)),
                inner
                    .clone()
                    .prop_map(|a| Formula::exists(vec![Var::new("b", Sort::Bv(2))], a)),
            ]
        })
    }

    proptest! {
        #[test]
        fn duality_on_random_formulas(f in arb_formula()) {
            let solver = Solver::new();
            let valid = solver.is_valid(&f).unwrap();
            let sat_neg = solver.is_satisfiable(&Formula::not(f.clone())).unwrap();
            prop_assert_eq!(valid, !sat_neg);
            if valid {
                prop_assert!(solver.is_satisfiable(&f).unwrap());
            }
        }
    }
}
