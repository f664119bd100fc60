//! Orchestration of the proof pipeline and the command-line interface.
//!
//! The pipeline is fixed: generate the dependency pairs, decompose along
//! the dependency graph, then attempt singleton self-loop removal on every
//! resulting sub-problem. The outcome is a proof tree whose leaves are
//! either the solved (empty) problem or problems no processor could
//! handle; the verdict is `Terminating` exactly when no unsolved leaf
//! remains. The prover never reports non-termination: a failed proof is
//! `Unknown`.

use crate::dp::{dependency_pairs, dg_approximation, proc_dg, DpProblem};
use crate::lctrs::{rewrite_to_normal_form, Lctrs, RewriteError};
use crate::oracle::{self, is_chain_free_bruteforce};
use crate::parser;
use crate::solver::{Solver, DEFAULT_ENUM_CAP};
use crate::ssr::{as_singleton_self_loop, proc_ssr, SsrCertificate, DEFAULT_WITNESS_WIDTH_CAP};
use clap::{Parser as ClapParser, Subcommand};
use std::fmt;
use std::path::PathBuf;
use std::time::{Duration, Instant};

/// Steps allowed for `--trace` normalization.
const TRACE_STEP_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Terminating,
    Unknown,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Terminating => write!(f, "YES"),
            Verdict::Unknown => write!(f, "MAYBE"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Processor {
    DependencyGraph,
    SingletonSelfLoopRemoval(SsrCertificate),
}

/// A processor application: which processor ran on the node's problem, how
/// long it took, and the sub-problems it produced.
#[derive(Debug, Clone)]
pub struct ProofStep {
    pub processor: Processor,
    pub elapsed: Duration,
    pub children: Vec<ProofNode>,
}

/// A node of the proof tree. Nodes without a step are leaves: solved if
/// their problem is empty, unresolved otherwise.
#[derive(Debug, Clone)]
pub struct ProofNode {
    pub problem: DpProblem,
    pub step: Option<ProofStep>,
}

impl ProofNode {
    fn leaf(problem: DpProblem) -> ProofNode {
        ProofNode {
            problem,
            step: None,
        }
    }

    /// All leaves below (and including) this node.
    pub fn leaves(&self) -> Vec<&ProofNode> {
        match &self.step {
            None => vec![self],
            Some(step) => step.children.iter().flat_map(|c| c.leaves()).collect(),
        }
    }
}

/// Agreement record between the processor pipeline and the brute-force
/// oracle for one sub-problem.
#[derive(Debug, Clone)]
pub struct OracleCheck {
    pub problem_ids: Vec<usize>,
    pub ssr_solved: bool,
    /// `Ok(true)` means the ground transition graph is acyclic; `Err`
    /// carries the reason the oracle was inapplicable.
    pub ground_acyclic: Result<bool, String>,
}

impl OracleCheck {
    /// A soundness failure: the processor solved the problem but the
    /// ground graph has a cycle.
    pub fn is_discrepancy(&self) -> bool {
        self.ssr_solved && self.ground_acyclic == Ok(false)
    }
}

#[derive(Debug, Clone)]
pub struct ProofResult {
    pub verdict: Verdict,
    pub root: ProofNode,
    pub oracle_checks: Vec<OracleCheck>,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct ProveOptions {
    pub enum_cap: u128,
    pub witness_width_cap: u32,
    pub oracle: bool,
    pub oracle_state_cap: u64,
}

impl Default for ProveOptions {
    fn default() -> Self {
        ProveOptions {
            enum_cap: DEFAULT_ENUM_CAP,
            witness_width_cap: DEFAULT_WITNESS_WIDTH_CAP,
            oracle: false,
            oracle_state_cap: oracle::DEFAULT_STATE_CAP,
        }
    }
}

/// Proves termination of a system through the fixed processor pipeline.
/// Solver capacity problems inside processors degrade to unresolved leaves,
/// never to a wrong verdict.
pub fn prove_termination(r: &Lctrs, opts: &ProveOptions) -> ProofResult {
    let started = Instant::now();
    let solver = Solver::with_cap(opts.enum_cap);
    let initial = dependency_pairs(r);

    let root = if initial.is_solved() {
        ProofNode::leaf(initial)
    } else {
        let t = Instant::now();
        let subs = proc_dg(&initial, &solver);
        let dg_elapsed = t.elapsed();
        let children = subs
            .into_iter()
            .map(|sub| {
                let t = Instant::now();
                match proc_ssr(&sub, &solver, opts.witness_width_cap) {
                    Some(cert) => {
                        let solved = DpProblem {
                            pairs: Vec::new(),
                            system: sub.system.clone(),
                        };
                        ProofNode {
                            problem: sub,
                            step: Some(ProofStep {
                                processor: Processor::SingletonSelfLoopRemoval(cert),
                                elapsed: t.elapsed(),
                                children: vec![ProofNode::leaf(solved)],
                            }),
                        }
                    }
                    None => ProofNode::leaf(sub),
                }
            })
            .collect();
        ProofNode {
            problem: initial,
            step: Some(ProofStep {
                processor: Processor::DependencyGraph,
                elapsed: dg_elapsed,
                children,
            }),
        }
    };

    let verdict = if root.leaves().iter().all(|l| l.problem.is_solved()) {
        Verdict::Terminating
    } else {
        Verdict::Unknown
    };

    let mut oracle_checks = Vec::new();
    if opts.oracle {
        if let Some(step) = &root.step {
            for child in &step.children {
                let ssr_solved = child.step.is_some();
                let ground_acyclic = match as_singleton_self_loop(&child.problem, &solver) {
                    Ok(view) => is_chain_free_bruteforce(&view, opts.oracle_state_cap)
                        .map_err(|e| e.to_string()),
                    Err(skip) => Err(format!("not a singleton self-loop: {skip}")),
                };
                oracle_checks.push(OracleCheck {
                    problem_ids: child.problem.ids(),
                    ssr_solved,
                    ground_acyclic,
                });
            }
        }
    }

    ProofResult {
        verdict,
        root,
        oracle_checks,
        elapsed: started.elapsed(),
    }
}

fn render_node(node: &ProofNode, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    if node.problem.is_solved() {
        out.push_str(&format!("{pad}solved\n"));
        return;
    }
    out.push_str(&format!("{pad}problem {}\n", node.problem));
    match &node.step {
        None => out.push_str(&format!("{pad}  unresolved (no applicable processor)\n")),
        Some(step) => {
            match &step.processor {
                Processor::DependencyGraph => out.push_str(&format!(
                    "{pad}  [dependency graph] {} cycle component(s) ({:.1?})\n",
                    step.children.len(),
                    step.elapsed
                )),
                Processor::SingletonSelfLoopRemoval(cert) => out.push_str(&format!(
                    "{pad}  [singleton self-loop removal] {cert} ({:.1?})\n",
                    step.elapsed
                )),
            }
            for child in &step.children {
                render_node(child, indent + 1, out);
            }
        }
    }
}

impl fmt::Display for ProofResult {
    /// The proof tree in indented text; the verdict line is printed by the
    /// caller so that the first output line stays machine-parsable.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        for pair in &self.root.problem.pairs {
            out.push_str(&format!("  {pair}\n"));
        }
        render_node(&self.root, 1, &mut out);
        write!(f, "proof ({:.1?}):\n{out}", self.elapsed)
    }
}

#[derive(ClapParser)]
#[command(
    name = "bvterm",
    about = "Termination prover for bit-vector constrained rewrite systems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prove termination of the system in a .lctrs file.
    ///
    /// Prints YES (terminating) or MAYBE (unknown) on the first line,
    /// followed by the proof tree. Exit status: 0 for YES, 1 for MAYBE,
    /// 2 for input errors, 3 if --oracle detects an internal soundness
    /// failure.
    Prove {
        /// Input system (.lctrs)
        file: PathBuf,
        /// Cap on assignments enumerated per solver query
        /// (overridden by the BVTERM_ENUM_CAP environment variable)
        #[arg(long = "enum-cap", value_name = "N")]
        enum_cap: Option<u128>,
        /// Largest bit-vector width for the interval-witness search
        #[arg(long = "width-cap", value_name = "N", default_value_t = DEFAULT_WITNESS_WIDTH_CAP)]
        width_cap: u32,
        /// Run the brute-force ground oracle next to the processors and
        /// report agreement
        #[arg(long)]
        oracle: bool,
        /// Write Graphviz files for the dependency graph (and, with
        /// --oracle, the ground graphs) into this directory
        #[arg(long = "emit-dot", value_name = "DIR")]
        emit_dot: Option<PathBuf>,
        /// Rewrite this ground term to normal form and print the trace
        #[arg(long, value_name = "TERM")]
        trace: Option<String>,
    },
}

fn input_error(message: impl fmt::Display) -> i32 {
    eprintln!("error: {message}");
    2
}

fn emit_dot_files(
    dir: &PathBuf,
    r: &Lctrs,
    result: &ProofResult,
    opts: &ProveOptions,
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let solver = Solver::with_cap(opts.enum_cap);
    let initial = dependency_pairs(r);
    let graph = dg_approximation(&initial, &solver);
    std::fs::write(dir.join("dg.dot"), graph.to_dot())?;

    if opts.oracle {
        if let Some(step) = &result.root.step {
            for (k, child) in step.children.iter().enumerate() {
                let view = match as_singleton_self_loop(&child.problem, &solver) {
                    Ok(view) => view,
                    Err(_) => continue,
                };
                let full = match oracle::ground_transition_graph(&view, opts.oracle_state_cap) {
                    Ok(g) => g,
                    Err(_) => continue,
                };
                std::fs::write(dir.join(format!("oracle_sub{k}_full.dot")), full.to_dot())?;
                for &pos in &view.bv_positions {
                    if let Ok(proj) =
                        oracle::projection_graph(&view, pos, opts.oracle_state_cap)
                    {
                        std::fs::write(
                            dir.join(format!("oracle_sub{k}_proj{pos}.dot")),
                            proj.to_dot(),
                        )?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Runs the command line. Returns the process exit status.
pub fn run_cli(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };

    let Command::Prove {
        file,
        enum_cap,
        width_cap,
        oracle,
        emit_dot,
        trace,
    } = cli.command;

    let text = match std::fs::read_to_string(&file) {
        Ok(t) => t,
        Err(e) => return input_error(format!("{}: {e}", file.display())),
    };
    let system = match parser::parse(&text) {
        Ok(r) => r,
        Err(e) => return input_error(format!("{}:{e}", file.display())),
    };

    let mut opts = ProveOptions {
        enum_cap: enum_cap.unwrap_or(DEFAULT_ENUM_CAP),
        witness_width_cap: width_cap,
        oracle,
        ..ProveOptions::default()
    };
    if let Ok(env_cap) = std::env::var("BVTERM_ENUM_CAP") {
        match env_cap.parse::<u128>() {
            Ok(cap) => opts.enum_cap = cap,
            Err(_) => return input_error("BVTERM_ENUM_CAP must be an unsigned integer"),
        }
    }

    // validate the trace term before any output is produced
    let trace_start = match &trace {
        Some(text) => match parser::parse_ground_term(text, &system) {
            Ok(t) => Some(t),
            Err(e) => return input_error(format!("--trace: {e}")),
        },
        None => None,
    };

    let result = prove_termination(&system, &opts);

    println!("{}", result.verdict);
    print!("{result}");

    let mut discrepancy = false;
    for check in &result.oracle_checks {
        let ids: Vec<String> = check.problem_ids.iter().map(|i| format!("({i})")).collect();
        let ids = ids.join(", ");
        match (&check.ground_acyclic, check.ssr_solved) {
            (Ok(true), true) => {
                println!("oracle: problem {{{ids}}}: ground graph acyclic, agrees with the processor")
            }
            (Ok(true), false) => {
                println!("oracle: problem {{{ids}}}: ground graph acyclic, but no processor applied (proof missed)")
            }
            (Ok(false), false) => {
                println!("oracle: problem {{{ids}}}: ground graph has a cycle, consistent with MAYBE")
            }
            (Ok(false), true) => {
                discrepancy = true;
                eprintln!("internal soundness failure: problem {{{ids}}} was solved but its ground graph has a cycle");
            }
            (Err(reason), _) => println!("oracle: problem {{{ids}}}: not applicable ({reason})"),
        }
    }

    if let Some(dir) = &emit_dot {
        if let Err(e) = emit_dot_files(dir, &system, &result, &opts) {
            return input_error(format!("writing DOT files to {}: {e}", dir.display()));
        }
    }

    if let Some(start) = trace_start {
        println!("trace:");
        println!("  {start}");
        match rewrite_to_normal_form(&system, &start, TRACE_STEP_CAP) {
            Ok((_, steps)) => {
                for t in steps {
                    println!("  {t}");
                }
            }
            Err(RewriteError::StepCapExceeded { cap, partial_trace }) => {
                for t in partial_trace {
                    println!("  {t}");
                }
                println!("  ... stopped after {cap} steps");
            }
            Err(e) => {
                eprintln!("trace failed: {e}");
            }
        }
    }

    if discrepancy {
        3
    } else {
        match result.verdict {
            Verdict::Terminating => 0,
            Verdict::Unknown => 1,
        }
    }
}
