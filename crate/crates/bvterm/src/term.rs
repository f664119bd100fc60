//! Sorted signatures, terms, substitutions, and marking of defined symbols.
//!
//! Terms are immutable values. Construction through [`Term::app`] checks
//! well-sortedness, and [`Substitution::apply`] preserves it, so downstream
//! code may rely on every term in circulation being well-sorted.

use crate::bitvec::{BitVec, CmpOp};
use std::collections::BTreeMap;
use std::fmt;

/// Sorts of the signature. `DpSort` is the fresh result sort of marked
/// symbols and never appears in argument position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Bool,
    Bv(u32),
    DpSort,
    Named(String),
}

impl Sort {
    /// Width if this is a bit-vector sort.
    pub fn bv_width(&self) -> Option<u32> {
        match self {
            Sort::Bv(w) => Some(*w),
            _ => None,
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => write!(f, "bool"),
            Sort::Bv(w) => write!(f, "(bv {w})"),
            Sort::DpSort => write!(f, "dpsort"),
            Sort::Named(n) => write!(f, "{n}"),
        }
    }
}

/// Interpreted operations of the bit-vector theory plus the core boolean
/// connectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TheoryOp {
    BvAdd,
    BvSub,
    Cmp(CmpOp),
    And,
    Or,
    Not,
}

impl TheoryOp {
    pub fn name(self) -> &'static str {
        match self {
            TheoryOp::BvAdd => "bvadd",
            TheoryOp::BvSub => "bvsub",
            TheoryOp::Cmp(op) => op.name(),
            TheoryOp::And => "and",
            TheoryOp::Or => "or",
            TheoryOp::Not => "not",
        }
    }
}

/// How a function symbol is interpreted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolKind {
    /// Interpreted by the theory evaluator.
    Theory(TheoryOp),
    /// Ordinary term symbol declared by the input system.
    Plain,
    /// Marked copy `f#` of a defined symbol, of result sort `dpsort`.
    Marked,
}

/// A sorted function symbol.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol {
    pub name: String,
    pub arg_sorts: Vec<Sort>,
    pub result_sort: Sort,
    pub kind: SymbolKind,
}

impl Symbol {
    pub fn plain(name: impl Into<String>, arg_sorts: Vec<Sort>, result_sort: Sort) -> Symbol {
        Symbol {
            name: name.into(),
            arg_sorts,
            result_sort,
            kind: SymbolKind::Plain,
        }
    }

    /// The theory symbol instance of `op` at bit-vector width `w`.
    pub fn theory(op: TheoryOp, w: u32) -> Symbol {
        let (arg_sorts, result_sort) = match op {
            TheoryOp::BvAdd | TheoryOp::BvSub => (vec![Sort::Bv(w), Sort::Bv(w)], Sort::Bv(w)),
            TheoryOp::Cmp(_) => (vec![Sort::Bv(w), Sort::Bv(w)], Sort::Bool),
            TheoryOp::And | TheoryOp::Or => (vec![Sort::Bool, Sort::Bool], Sort::Bool),
            TheoryOp::Not => (vec![Sort::Bool], Sort::Bool),
        };
        Symbol {
            name: op.name().to_string(),
            arg_sorts,
            result_sort,
            kind: SymbolKind::Theory(op),
        }
    }

    pub fn arity(&self) -> usize {
        self.arg_sorts.len()
    }

    pub fn is_theory(&self) -> bool {
        matches!(self.kind, SymbolKind::Theory(_))
    }

    /// The marked copy `f#` with result sort `dpsort`.
    pub fn marked(&self) -> Symbol {
        Symbol {
            name: format!("{}#", self.name),
            arg_sorts: self.arg_sorts.clone(),
            result_sort: Sort::DpSort,
            kind: SymbolKind::Marked,
        }
    }
}

/// A sorted variable. Sorts are intrinsic so that rules and constraints can
/// be checked without a separate typing environment.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub name: String,
    pub sort: Sort,
}

impl Var {
    pub fn new(name: impl Into<String>, sort: Sort) -> Var {
        Var {
            name: name.into(),
            sort,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// A value: a nullary theory constant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Bv(BitVec),
}

impl Value {
    pub fn sort(&self) -> Sort {
        match self {
            Value::Bool(_) => Sort::Bool,
            Value::Bv(b) => Sort::Bv(b.width()),
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            Value::Bv(_) => None,
        }
    }

    pub fn as_bv(&self) -> Option<&BitVec> {
        match self {
            Value::Bv(b) => Some(b),
            Value::Bool(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(true) => write!(f, "true"),
            Value::Bool(false) => write!(f, "false"),
            Value::Bv(b) => write!(f, "{b}"),
        }
    }
}

/// Position of a subterm: the sequence of argument indices from the root.
pub type Position = Vec<usize>;

/// A well-sorted applicative term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Var),
    Val(Value),
    App(Symbol, Vec<Term>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TermError {
    #[error("term is not markable: root is {0}")]
    NotMarkable(String),
}

impl Term {
    pub fn var(name: impl Into<String>, sort: Sort) -> Term {
        Term::Var(Var::new(name, sort))
    }

    pub fn bv(b: BitVec) -> Term {
        Term::Val(Value::Bv(b))
    }

    pub fn bool(b: bool) -> Term {
        Term::Val(Value::Bool(b))
    }

    /// Applies `symbol` to `args`, checking arity and argument sorts.
    pub fn app(symbol: Symbol, args: Vec<Term>) -> Term {
        assert_eq!(
            symbol.arity(),
            args.len(),
            "arity mismatch applying {}",
            symbol.name
        );
        for (i, (a, s)) in args.iter().zip(&symbol.arg_sorts).enumerate() {
            assert_eq!(
                &a.sort(),
                s,
                "sort mismatch in argument {i} of {}",
                symbol.name
            );
        }
        Term::App(symbol, args)
    }

    pub fn sort(&self) -> Sort {
        match self {
            Term::Var(v) => v.sort.clone(),
            Term::Val(v) => v.sort(),
            Term::App(f, _) => f.result_sort.clone(),
        }
    }

    pub fn is_value(&self) -> bool {
        matches!(self, Term::Val(_))
    }

    /// Root symbol, if the term is an application.
    pub fn root(&self) -> Option<&Symbol> {
        match self {
            Term::App(f, _) => Some(f),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::App(_, args) => args,
            _ => &[],
        }
    }

    /// All subterms in pre-order, each with its position; the term itself is
    /// first at the root (empty) position.
    pub fn subterms(&self) -> Vec<(Position, &Term)> {
        let mut out = Vec::new();
        let mut stack = vec![(Vec::new(), self)];
        while let Some((pos, t)) = stack.pop() {
            out.push((pos.clone(), t));
            if let Term::App(_, args) = t {
                for (i, a) in args.iter().enumerate().rev() {
                    let mut p = pos.clone();
                    p.push(i);
                    stack.push((p, a));
                }
            }
        }
        out
    }

    /// The subterm at `pos`, if the position exists.
    pub fn at(&self, pos: &[usize]) -> Option<&Term> {
        let mut t = self;
        for &i in pos {
            t = t.args().get(i)?;
        }
        Some(t)
    }

    /// A copy of this term with the subterm at `pos` replaced.
    pub fn replace_at(&self, pos: &[usize], new: Term) -> Term {
        match pos.split_first() {
            None => new,
            Some((&i, rest)) => match self {
                Term::App(f, args) => {
                    let mut args = args.clone();
                    args[i] = args[i].replace_at(rest, new);
                    Term::App(f.clone(), args)
                }
                _ => panic!("position does not exist in term"),
            },
        }
    }

    /// Free variables in order of first occurrence (pre-order, left to
    /// right), without duplicates.
    pub fn vars(&self) -> Vec<Var> {
        let mut out: Vec<Var> = Vec::new();
        for (_, t) in self.subterms() {
            if let Term::Var(v) = t {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    pub fn contains_var(&self, v: &Var) -> bool {
        self.subterms()
            .iter()
            .any(|(_, t)| matches!(t, Term::Var(w) if w == v))
    }

    /// True iff every symbol occurring in the term is a theory symbol.
    /// Variables and values are theory terms.
    pub fn is_theory_term(&self) -> bool {
        self.subterms().iter().all(|(_, t)| match t {
            Term::App(f, _) => f.is_theory(),
            _ => true,
        })
    }

    /// Marks the root: `f(t1,...,tn)` becomes `f#(t1,...,tn)` of sort
    /// `dpsort`. Only plain term symbols can be marked.
    pub fn mark(&self) -> Result<Term, TermError> {
        match self {
            Term::App(f, args) if f.kind == SymbolKind::Plain => {
                Ok(Term::App(f.marked(), args.clone()))
            }
            Term::App(f, _) => Err(TermError::NotMarkable(format!(
                "{} symbol {}",
                match f.kind {
                    SymbolKind::Theory(_) => "theory",
                    SymbolKind::Marked => "marked",
                    SymbolKind::Plain => unreachable!(),
                },
                f.name
            ))),
            Term::Var(v) => Err(TermError::NotMarkable(format!("variable {}", v.name))),
            Term::Val(v) => Err(TermError::NotMarkable(format!("value {v}"))),
        }
    }

    /// Checks the well-sortedness invariant structurally.
    pub fn well_sorted(&self) -> bool {
        match self {
            Term::Var(_) | Term::Val(_) => true,
            Term::App(f, args) => {
                args.len() == f.arity()
                    && args
                        .iter()
                        .zip(&f.arg_sorts)
                        .all(|(a, s)| &a.sort() == s && a.well_sorted())
            }
        }
    }
}

impl fmt::Display for Term {
    /// Canonical surface syntax: s-expressions with SMT-LIB operator names,
    /// `#b` literals, and bare names for variables and nullary applications.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Val(v) => write!(f, "{v}"),
            Term::App(sym, args) if args.is_empty() => write!(f, "{}", sym.name),
            Term::App(sym, args) => {
                write!(f, "({}", sym.name)?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Convenience constructors for theory terms. Widths are taken from the
/// first argument.
pub mod theory {
    use super::*;

    fn bv_width_of(t: &Term) -> u32 {
        t.sort()
            .bv_width()
            .unwrap_or_else(|| panic!("expected a bit-vector term, got {t}"))
    }

    pub fn bvadd(a: Term, b: Term) -> Term {
        let w = bv_width_of(&a);
        Term::app(Symbol::theory(TheoryOp::BvAdd, w), vec![a, b])
    }

    pub fn bvsub(a: Term, b: Term) -> Term {
        let w = bv_width_of(&a);
        Term::app(Symbol::theory(TheoryOp::BvSub, w), vec![a, b])
    }

    pub fn cmp(op: CmpOp, a: Term, b: Term) -> Term {
        let w = bv_width_of(&a);
        Term::app(Symbol::theory(TheoryOp::Cmp(op), w), vec![a, b])
    }

    pub fn eq(a: Term, b: Term) -> Term {
        cmp(CmpOp::Eq, a, b)
    }

    pub fn and(a: Term, b: Term) -> Term {
        Term::app(Symbol::theory(TheoryOp::And, 1), vec![a, b])
    }

    pub fn or(a: Term, b: Term) -> Term {
        Term::app(Symbol::theory(TheoryOp::Or, 1), vec![a, b])
    }

    pub fn not(a: Term) -> Term {
        Term::app(Symbol::theory(TheoryOp::Not, 1), vec![a])
    }
}

/// A sort-preserving finite map from variables to terms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    map: BTreeMap<Var, Term>,
}

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, Term)>) -> Substitution {
        let mut s = Substitution::new();
        for (v, t) in pairs {
            s.insert(v, t);
        }
        s
    }

    /// Binds `v` to `t`. Panics if the binding would not preserve sorts.
    pub fn insert(&mut self, v: Var, t: Term) {
        assert_eq!(v.sort, t.sort(), "substitution must preserve sorts");
        self.map.insert(v, t);
    }

    pub fn get(&self, v: &Var) -> Option<&Term> {
        self.map.get(v)
    }

    pub fn contains(&self, v: &Var) -> bool {
        self.map.contains_key(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.map.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Homomorphic application; variables outside the domain are unchanged.
    pub fn apply(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => self.map.get(v).cloned().unwrap_or_else(|| t.clone()),
            Term::Val(_) => t.clone(),
            Term::App(f, args) => {
                Term::App(f.clone(), args.iter().map(|a| self.apply(a)).collect())
            }
        }
    }

    /// The composition "first `self`, then `other`":
    /// `compose(self, other).apply(t) == other.apply(&self.apply(t))`.
    pub fn compose(&self, other: &Substitution) -> Substitution {
        let mut out = Substitution::new();
        for (v, t) in &self.map {
            out.insert(v.clone(), other.apply(t));
        }
        for (v, t) in &other.map {
            if !out.map.contains_key(v) {
                out.insert(v.clone(), t.clone());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bv4(s: &str) -> Term {
        Term::bv(BitVec::from_binary_str(s).unwrap())
    }

    fn u1_symbol() -> Symbol {
        Symbol::plain(
            "u1",
            vec![Sort::Bv(4), Sort::Bv(4), Sort::Bv(4)],
            Sort::Bv(4),
        )
    }

    fn cnt_symbol() -> Symbol {
        Symbol::plain("cnt", vec![Sort::Bv(4)], Sort::Bv(4))
    }

    #[test]
    fn subterm_enumeration() {
        let x = Term::var("x", Sort::Bv(4));
        let i = Term::var("i", Sort::Bv(4));
        let z = Term::var("z", Sort::Bv(4));
        let t = Term::app(
            u1_symbol(),
            vec![x.clone(), theory::bvadd(i.clone(), bv4("0001")), z.clone()],
        );
        let subs = t.subterms();
        assert_eq!(subs.len(), 6);
        assert_eq!(subs[0].0, Vec::<usize>::new());
        assert_eq!(subs[0].1, &t);
        let terms: Vec<&Term> = subs.iter().map(|(_, t)| *t).collect();
        assert!(terms.contains(&&x));
        assert!(terms.contains(&&i));
        assert!(terms.contains(&&z));
        assert!(terms.contains(&&bv4("0001")));

        assert_eq!(x.subterms().len(), 1);
        let c = Term::app(cnt_symbol(), vec![bv4("0010")]);
        let subs = c.subterms();
        assert_eq!(subs.len(), 2);
        assert_eq!(subs[1].0, vec![0]);
    }

    #[test]
    fn substitution_application() {
        let i = Var::new("i", Sort::Bv(4));
        let x = Var::new("x", Sort::Bv(4));
        let guard = theory::cmp(
            CmpOp::Slt,
            Term::Var(i.clone()),
            Term::Var(x.clone()),
        );
        let sigma = Substitution::from_pairs([
            (i, bv4("0000")),
            (x, bv4("0010")),
            (Var::new("z", Sort::Bv(4)), bv4("0000")),
        ]);
        assert_eq!(
            sigma.apply(&guard),
            theory::cmp(CmpOp::Slt, bv4("0000"), bv4("0010"))
        );

        let t = Term::app(cnt_symbol(), vec![Term::var("x", Sort::Bv(4))]);
        assert_eq!(Substitution::new().apply(&t), t);

        let rename = Substitution::from_pairs([(
            Var::new("x", Sort::Bv(4)),
            Term::var("y", Sort::Bv(4)),
        )]);
        assert_eq!(
            rename.apply(&t),
            Term::app(cnt_symbol(), vec![Term::var("y", Sort::Bv(4))])
        );
    }

    #[test]
    fn marking() {
        let c = Term::app(cnt_symbol(), vec![Term::var("x", Sort::Bv(4))]);
        let marked = c.mark().unwrap();
        assert_eq!(marked.sort(), Sort::DpSort);
        assert_eq!(marked.root().unwrap().name, "cnt#");
        assert_eq!(marked.args(), c.args());

        let u = Term::app(
            u1_symbol(),
            vec![
                Term::var("x", Sort::Bv(4)),
                Term::var("i", Sort::Bv(4)),
                Term::var("z", Sort::Bv(4)),
            ],
        );
        assert_eq!(u.mark().unwrap().root().unwrap().name, "u1#");

        assert!(Term::var("x", Sort::Bv(4)).mark().is_err());
        assert!(bv4("0001").mark().is_err());
        assert!(theory::bvadd(bv4("0001"), bv4("0001")).mark().is_err());
        assert!(marked.mark().is_err());
    }

    #[test]
    fn theory_term_recognition() {
        let i = Term::var("i", Sort::Bv(4));
        assert!(theory::bvadd(i.clone(), bv4("0001")).is_theory_term());
        assert!(!Term::app(cnt_symbol(), vec![i.clone()]).is_theory_term());
        assert!(i.is_theory_term());
    }

    #[test]
    fn replace_at_position() {
        let t = Term::app(cnt_symbol(), vec![theory::bvadd(bv4("0000"), bv4("0001"))]);
        let r = t.replace_at(&[0], bv4("0001"));
        assert_eq!(r, Term::app(cnt_symbol(), vec![bv4("0001")]));
        assert_eq!(r.at(&[0]), Some(&bv4("0001")));
    }

    // Small generator for well-sorted width-4 terms over variables a, b.
    fn arb_term() -> impl Strategy<Value = Term> {
        let leaf = prop_oneof![
            (0u128..16).prop_map(|v| Term::bv(BitVec::from_u128(4, v))),
            Just(Term::var("a", Sort::Bv(4))),
            Just(Term::var("b", Sort::Bv(4))),
        ];
        leaf.prop_recursive(3, 16, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(x, y)| theory::bvadd(x, y)),
                (inner.clone(), inner).prop_map(|(x, y)| theory::bvsub(x, y)),
            ]
        })
    }

    fn arb_subst() -> impl Strategy<Value = Substitution> {
        (arb_term(), arb_term()).prop_map(|(ta, tb)| {
            Substitution::from_pairs([
                (Var::new("a", Sort::Bv(4)), ta),
                (Var::new("b", Sort::Bv(4)), tb),
            ])
        })
    }

    proptest! {
        #[test]
        fn apply_preserves_well_sortedness(t in arb_term(), s in arb_subst()) {
            let u = s.apply(&t);
            prop_assert!(u.well_sorted());
            prop_assert_eq!(u.sort(), t.sort());
        }

        #[test]
        fn composition_law(t in arb_term(), s1 in arb_subst(), s2 in arb_subst()) {
            let lhs = s2.apply(&s1.apply(&t));
            let rhs = s1.compose(&s2).apply(&t);
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn mark_is_sort_correct(t in arb_term()) {
            let wrapped = Term::app(
                Symbol::plain("f", vec![Sort::Bv(4)], Sort::Bv(4)),
                vec![t],
            );
            let m = wrapped.mark().unwrap();
            prop_assert_eq!(m.sort(), Sort::DpSort);
            prop_assert!(m.well_sorted());
        }
    }
}
