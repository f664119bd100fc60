//! Brute-force ground-chain analysis for singleton self-loop problems.
//!
//! For a loop whose arguments are all bit-vector sorted and whose guard and
//! updates mention only the loop's own variables, the ground behavior is a
//! finite functional graph: one node per value tuple, with an edge to the
//! updated tuple wherever the guard holds. On that graph acyclicity is
//! decidable exactly, so the oracle serves as ground truth for the symbolic
//! processor at small widths. It refuses inputs outside this fragment
//! rather than approximating.

use crate::bitvec::BitVec;
use crate::solver::{eval_term, Assignment};
use crate::ssr::SingletonSelfLoop;
use crate::term::Value;
use std::fmt::Write as _;

/// Default cap on the number of ground states.
pub const DEFAULT_STATE_CAP: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("argument position {position} is not bit-vector sorted")]
    NonBvArgument { position: usize },
    #[error("right-hand argument at position {position} is not a theory term")]
    NonTheoryArgument { position: usize },
    #[error("variable {name} does not occur among the loop arguments")]
    FreshVariable { name: String },
    #[error("{required} ground states exceed the oracle cap {cap}")]
    StateCapExceeded { required: u128, cap: u64 },
}

/// A graph over ground states. Full transition graphs have one node per
/// value tuple; projection graphs have one node per value of a single
/// argument position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundGraph {
    /// Bit-vector width of each tuple component.
    pub widths: Vec<u32>,
    pub node_count: u64,
    /// Edges over encoded node indices, sorted.
    pub edges: Vec<(u64, u64)>,
    /// 1-based argument position when this is a projection graph.
    pub projection: Option<usize>,
}

impl GroundGraph {
    fn strides(&self) -> Vec<u64> {
        let mut strides = vec![1u64; self.widths.len()];
        for j in (0..self.widths.len().saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] << self.widths[j + 1];
        }
        strides
    }

    /// The value tuple of a node index.
    pub fn decode(&self, node: u64) -> Vec<BitVec> {
        let strides = self.strides();
        self.widths
            .iter()
            .zip(&strides)
            .map(|(&w, &s)| BitVec::from_u128(w, ((node / s) & ((1 << w) - 1)) as u128))
            .collect()
    }

    pub fn out_degree(&self, node: u64) -> usize {
        self.edges.iter().filter(|(a, _)| *a == node).count()
    }

    /// Exact acyclicity by iterative depth-first search.
    pub fn is_acyclic(&self) -> bool {
        let n = self.node_count as usize;
        // compressed adjacency; edges are sorted by source
        let mut offsets = vec![0usize; n + 1];
        for &(a, _) in &self.edges {
            offsets[a as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }

        const WHITE: u8 = 0;
        const GRAY: u8 = 1;
        const BLACK: u8 = 2;
        let mut color = vec![WHITE; n];
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for start in 0..n {
            if color[start] != WHITE {
                continue;
            }
            color[start] = GRAY;
            stack.push((start, offsets[start]));
            while let Some(&mut (v, ref mut cursor)) = stack.last_mut() {
                if *cursor < offsets[v + 1] {
                    let w = self.edges[*cursor].1 as usize;
                    *cursor += 1;
                    match color[w] {
                        WHITE => {
                            color[w] = GRAY;
                            stack.push((w, offsets[w]));
                        }
                        GRAY => return false,
                        _ => {}
                    }
                } else {
                    color[v] = BLACK;
                    stack.pop();
                }
            }
        }
        true
    }

    fn node_label(&self, node: u64) -> String {
        let tuple = self.decode(node);
        if tuple.len() == 1 {
            tuple[0].to_string()
        } else {
            let parts: Vec<String> = tuple.iter().map(|b| b.to_string()).collect();
            format!("({})", parts.join(","))
        }
    }

    /// Graphviz DOT text. Isolated nodes are listed explicitly.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph ground_graph {\n");
        for v in 0..self.node_count {
            let _ = writeln!(out, "  n{v} [label=\"{}\"];", self.node_label(v));
        }
        for (a, b) in &self.edges {
            let _ = writeln!(out, "  n{a} -> n{b};");
        }
        out.push_str("}\n");
        out
    }
}

fn check_applicable(view: &SingletonSelfLoop) -> Result<Vec<u32>, OracleError> {
    let mut widths = Vec::with_capacity(view.arity());
    for (j, v) in view.lhs_vars.iter().enumerate() {
        match v.sort.bv_width() {
            Some(w) => widths.push(w),
            None => return Err(OracleError::NonBvArgument { position: j + 1 }),
        }
    }
    for (j, t) in view.rhs_args.iter().enumerate() {
        if !t.is_theory_term() {
            return Err(OracleError::NonTheoryArgument { position: j + 1 });
        }
    }
    for v in view
        .guard
        .vars()
        .into_iter()
        .chain(view.rhs_args.iter().flat_map(|t| t.vars()))
    {
        if !view.lhs_vars.contains(&v) {
            return Err(OracleError::FreshVariable { name: v.name });
        }
    }
    Ok(widths)
}

/// Builds the full ground transition graph: nodes are all argument value
/// tuples, and a tuple steps to its update wherever the guard holds.
pub fn ground_transition_graph(
    view: &SingletonSelfLoop,
    state_cap: u64,
) -> Result<GroundGraph, OracleError> {
    let widths = check_applicable(view)?;
    let mut required: u128 = 1;
    for &w in &widths {
        required = required
            .checked_shl(w)
            .filter(|_| w < 64)
            .ok_or(OracleError::StateCapExceeded {
                required: u128::MAX,
                cap: state_cap,
            })?;
    }
    if required > state_cap as u128 {
        return Err(OracleError::StateCapExceeded {
            required,
            cap: state_cap,
        });
    }
    let node_count = required as u64;

    let graph_shape = GroundGraph {
        widths: widths.clone(),
        node_count,
        edges: Vec::new(),
        projection: None,
    };
    let strides = graph_shape.strides();

    let mut edges = Vec::new();
    for node in 0..node_count {
        let mut alpha = Assignment::new();
        for ((v, &w), &s) in view.lhs_vars.iter().zip(&widths).zip(&strides) {
            let val = ((node / s) & ((1 << w) - 1)) as u128;
            alpha.set(v.clone(), Value::Bv(BitVec::from_u128(w, val)));
        }
        let fires = matches!(
            eval_term(&view.guard, &alpha),
            Ok(Value::Bool(true))
        );
        if !fires {
            continue;
        }
        let mut successor: u64 = 0;
        for (t, &s) in view.rhs_args.iter().zip(&strides) {
            let w = match eval_term(t, &alpha) {
                Ok(Value::Bv(b)) => b,
                _ => unreachable!("theory arguments over covered variables evaluate"),
            };
            successor += w.to_unsigned() as u64 * s;
        }
        edges.push((node, successor));
    }

    Ok(GroundGraph {
        widths,
        node_count,
        edges,
        projection: None,
    })
}

/// Projects the full ground graph to the 1-based argument position `i`:
/// nodes are the values of that position and an edge `(b, b')` exists iff
/// some ground edge maps position `i` from `b` to `b'`.
pub fn projection_graph(
    view: &SingletonSelfLoop,
    i: usize,
    state_cap: u64,
) -> Result<GroundGraph, OracleError> {
    let full = ground_transition_graph(view, state_cap)?;
    let strides = full.strides();
    let (w, s) = (full.widths[i - 1], strides[i - 1]);
    let component = |node: u64| (node / s) & ((1 << w) - 1);
    let mut edges: Vec<(u64, u64)> = full
        .edges
        .iter()
        .map(|&(a, b)| (component(a), component(b)))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    Ok(GroundGraph {
        widths: vec![w],
        node_count: 1 << w,
        edges,
        projection: Some(i),
    })
}

/// Exact chain-freeness at the ground level: true iff the full ground
/// transition graph has no cycle. Transitions are deterministic and the
/// state space finite, so an infinite chain exists iff some state lies on
/// a cycle.
pub fn is_chain_free_bruteforce(
    view: &SingletonSelfLoop,
    state_cap: u64,
) -> Result<bool, OracleError> {
    Ok(ground_transition_graph(view, state_cap)?.is_acyclic())
}
