//! Dependency-pair generation, dependency-graph approximation, SCC
//! decomposition, and the dependency-graph processor.
//!
//! An edge of the exact dependency graph connects two pairs that can occur
//! consecutively in a chain. That is undecidable in general, so this module
//! computes an over-approximation: an edge is kept whenever the marked root
//! symbols connect and the conjunction of the first pair's guard with the
//! second pair's guard (instantiated along theory-term argument flows) is
//! satisfiable. Solver capacity failures keep the edge, so imprecision only
//! ever adds edges.

use crate::lctrs::{ConstrainedRule, Lctrs};
use crate::solver::{Formula, Solver, SolverError};
use crate::term::{Substitution, Term, Var};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

/// A dependency pair: a rule between marked terms, labeled for display.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DependencyPair {
    pub id: usize,
    pub rule: ConstrainedRule,
}

impl fmt::Display for DependencyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) {}", self.id, self.rule)
    }
}

/// A set of dependency pairs together with the system they came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DpProblem {
    pub pairs: Vec<DependencyPair>,
    pub system: Arc<Lctrs>,
}

impl DpProblem {
    pub fn is_solved(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn ids(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.id).collect()
    }
}

impl fmt::Display for DpProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.pairs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({})", p.id)?;
        }
        write!(f, "}}")
    }
}

/// A directed graph over dependency pair ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepGraph {
    pub nodes: Vec<usize>,
    pub edges: BTreeSet<(usize, usize)>,
}

impl DepGraph {
    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }

    /// Graphviz DOT text with nodes labeled by pair ids.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph dependency_graph {\n");
        for n in &self.nodes {
            out.push_str(&format!("  n{n} [label=\"({n})\"];\n"));
        }
        for (a, b) in &self.edges {
            out.push_str(&format!("  n{a} -> n{b};\n"));
        }
        out.push_str("}\n");
        out
    }
}

/// Generates the dependency pairs of a system: for every rule `l -> r [phi]`
/// and every subterm `t` of `r` whose root is defined, the pair
/// `l# -> t# [phi]`. Labels count from 1 in source order.
pub fn dependency_pairs(r: &Lctrs) -> DpProblem {
    let defined = r.defined_symbols();
    let mut pairs = Vec::new();
    for rule in &r.rules {
        for (_, sub) in rule.rhs.subterms() {
            if let Some(root) = sub.root() {
                if defined.contains(root) {
                    let lhs = rule.lhs.mark().expect("rule left-hand sides have defined roots");
                    let rhs = sub.mark().expect("subterm root is defined");
                    pairs.push(DependencyPair {
                        id: pairs.len() + 1,
                        rule: ConstrainedRule::new(lhs, rhs, rule.guard.clone()),
                    });
                }
            }
        }
    }
    DpProblem {
        pairs,
        system: Arc::new(r.clone()),
    }
}

/// Renames every variable of a rule apart from `taken` by priming.
fn rename_apart(rule: &ConstrainedRule, taken: &BTreeSet<Var>) -> ConstrainedRule {
    let mut renaming = Substitution::new();
    let mut own: Vec<Var> = rule.lhs.vars();
    for v in rule.rhs.vars().into_iter().chain(rule.guard.vars()) {
        if !own.contains(&v) {
            own.push(v);
        }
    }
    for v in own {
        let mut name = v.name.clone();
        while taken.iter().any(|t| t.name == name) {
            name.push('\'');
        }
        if name != v.name {
            renaming.insert(v.clone(), Term::Var(Var::new(name, v.sort.clone())));
        }
    }
    if renaming.is_empty() {
        rule.clone()
    } else {
        ConstrainedRule {
            lhs: renaming.apply(&rule.lhs),
            rhs: renaming.apply(&rule.rhs),
            guard: renaming.apply(&rule.guard),
        }
    }
}

/// The connecting constraint of an ordered pair `(p, q)`: `p.guard` conjoined
/// with `q.guard` instantiated by the substitution that maps each variable
/// in `q`'s left-hand side to the corresponding right-hand argument of `p`
/// whenever that argument is a theory term.
fn connecting_constraint(p: &ConstrainedRule, q: &ConstrainedRule) -> Formula {
    let taken: BTreeSet<Var> = p
        .lhs
        .vars()
        .into_iter()
        .chain(p.rhs.vars())
        .chain(p.guard.vars())
        .collect();
    let q = rename_apart(q, &taken);

    let mut sigma = Substitution::new();
    for (lhs_arg, rhs_arg) in q.lhs.args().iter().zip(p.rhs.args()) {
        if let Term::Var(v) = lhs_arg {
            if rhs_arg.is_theory_term() && !sigma.contains(v) && v.sort == rhs_arg.sort() {
                sigma.insert(v.clone(), rhs_arg.clone());
            }
        }
    }
    Formula::And(vec![
        Formula::atom(p.guard.clone()),
        Formula::atom(sigma.apply(&q.guard)),
    ])
}

/// Computes a dependency graph approximation of `p`. An edge is dropped only
/// when the marked roots differ or the connecting constraint is provably
/// unsatisfiable; solver capacity failures keep the edge.
pub fn dg_approximation(p: &DpProblem, solver: &Solver) -> DepGraph {
    let mut edges = BTreeSet::new();
    for from in &p.pairs {
        for to in &p.pairs {
            if from.rule.rhs.root() != to.rule.lhs.root() {
                continue;
            }
            let constraint = connecting_constraint(&from.rule, &to.rule);
            let keep = match solver.is_satisfiable(&constraint) {
                Ok(sat) => sat,
                Err(SolverError::CapacityExceeded { .. })
                | Err(SolverError::UnsupportedSort(_)) => true,
                Err(_) => true,
            };
            if keep {
                edges.insert((from.id, to.id));
            }
        }
    }
    DepGraph {
        nodes: p.ids(),
        edges,
    }
}

/// Strongly connected components that contain at least one internal edge
/// (a single node only counts with a self-edge), in topological order.
pub fn sccs(g: &DepGraph) -> Vec<BTreeSet<usize>> {
    let index_of: BTreeMap<usize, usize> = g
        .nodes
        .iter()
        .enumerate()
        .map(|(i, &n)| (n, i))
        .collect();
    let n = g.nodes.len();
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in &g.edges {
        adj[index_of[&a]].push(index_of[&b]);
    }

    struct State {
        index: usize,
        indices: Vec<Option<usize>>,
        lowlinks: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        sccs: Vec<Vec<usize>>,
    }

    fn strongconnect(adj: &[Vec<usize>], st: &mut State, v: usize) {
        st.indices[v] = Some(st.index);
        st.lowlinks[v] = st.index;
        st.index += 1;
        st.stack.push(v);
        st.on_stack[v] = true;
        for &w in &adj[v] {
            if st.indices[w].is_none() {
                strongconnect(adj, st, w);
                st.lowlinks[v] = st.lowlinks[v].min(st.lowlinks[w]);
            } else if st.on_stack[w] {
                st.lowlinks[v] = st.lowlinks[v].min(st.indices[w].unwrap());
            }
        }
        if st.lowlinks[v] == st.indices[v].unwrap() {
            let mut scc = Vec::new();
            loop {
                let w = st.stack.pop().unwrap();
                st.on_stack[w] = false;
                scc.push(w);
                if w == v {
                    break;
                }
            }
            st.sccs.push(scc);
        }
    }

    let mut st = State {
        index: 0,
        indices: vec![None; n],
        lowlinks: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        sccs: Vec::new(),
    };
    for v in 0..n {
        if st.indices[v].is_none() {
            strongconnect(&adj, &mut st, v);
        }
    }

    let components: Vec<BTreeSet<usize>> = st
        .sccs
        .into_iter()
        .map(|c| c.into_iter().map(|i| g.nodes[i]).collect())
        .collect();

    // Deterministic topological order of the condensation: Kahn's algorithm,
    // ties broken by smallest pair id.
    let comp_of: BTreeMap<usize, usize> = components
        .iter()
        .enumerate()
        .flat_map(|(k, c)| c.iter().map(move |&n| (n, k)))
        .collect();
    let m = components.len();
    let mut indegree = vec![0usize; m];
    let mut succs = vec![BTreeSet::new(); m];
    for &(a, b) in &g.edges {
        let (ca, cb) = (comp_of[&a], comp_of[&b]);
        if ca != cb && succs[ca].insert(cb) {
            indegree[cb] += 1;
        }
    }
    let mut ready: BTreeSet<(usize, usize)> = (0..m)
        .filter(|&k| indegree[k] == 0)
        .map(|k| (*components[k].first().unwrap(), k))
        .collect();
    let mut ordered = Vec::with_capacity(m);
    while let Some(&(min_id, k)) = ready.iter().next() {
        ready.remove(&(min_id, k));
        ordered.push(k);
        for &s in &succs[k] {
            indegree[s] -= 1;
            if indegree[s] == 0 {
                ready.insert((*components[s].first().unwrap(), s));
            }
        }
    }

    ordered
        .into_iter()
        .map(|k| components[k].clone())
        .filter(|c| {
            g.edges
                .iter()
                .any(|(a, b)| c.contains(a) && c.contains(b))
        })
        .collect()
}

/// The dependency graph processor: one sub-problem per edge-bearing SCC of
/// the graph approximation.
pub fn proc_dg(p: &DpProblem, solver: &Solver) -> Vec<DpProblem> {
    let graph = dg_approximation(p, solver);
    sccs(&graph)
        .into_iter()
        .map(|component| DpProblem {
            pairs: p
                .pairs
                .iter()
                .filter(|pair| component.contains(&pair.id))
                .cloned()
                .collect(),
            system: Arc::clone(&p.system),
        })
        .collect()
}
