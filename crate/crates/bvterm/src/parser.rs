//! Reader and printer for the textual rewrite-system format.
//!
//! The surface syntax is s-expression based, one form per declaration:
//!
//! ```text
//! ; comment to end of line
//! (sort state)
//! (fun cnt ((bv 4)) (bv 4))
//! (rule (cnt x) (u1 x #b0000 #b0000))
//! (rule (u1 x i z) (u1 x (bvadd i #b0001) (bvadd z #b0001)) :guard (bvslt i x))
//! ```
//!
//! Theory symbols carry their SMT-LIB names (`bvadd`, `bvsub`, `bvslt`,
//! `bvult`, `bvsge`, `bvuge`, `bvsle`, `bvule`, `=`, `and`, `or`, `not`,
//! `true`, `false`) and bit-vector literals are written `#b` followed by
//! exactly as many digits as the width. Variables need no declaration:
//! an unknown name takes the sort required by its context, and a missing
//! `:guard` means the guard `true`.

use crate::bitvec::{BitVec, CmpOp};
use crate::lctrs::{ConstrainedRule, Lctrs, LctrsError};
use crate::term::{Sort, Symbol, SymbolKind, Term};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourcePos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for SourcePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Diagnostic categories. Every error carries a stable code and a source
/// location.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    UnknownSymbol,
    SortMismatch,
    DuplicateDeclaration,
    LiteralWidth,
    CannotInfer,
    Arity,
    InvalidRule,
    Reserved,
}

impl ParseErrorKind {
    pub fn code(self) -> &'static str {
        match self {
            ParseErrorKind::Syntax => "E-SYNTAX",
            ParseErrorKind::UnknownSymbol => "E-UNKNOWN",
            ParseErrorKind::SortMismatch => "E-SORT",
            ParseErrorKind::DuplicateDeclaration => "E-DUPFUN",
            ParseErrorKind::LiteralWidth => "E-LITWIDTH",
            ParseErrorKind::CannotInfer => "E-INFER",
            ParseErrorKind::Arity => "E-ARITY",
            ParseErrorKind::InvalidRule => "E-RULE",
            ParseErrorKind::Reserved => "E-RESERVED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {message} [{}]", kind.code())]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub pos: SourcePos,
    pub message: String,
}

impl ParseError {
    fn new(kind: ParseErrorKind, pos: SourcePos, message: impl Into<String>) -> ParseError {
        ParseError {
            kind,
            pos,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone)]
enum SExpr {
    Atom { text: String, pos: SourcePos },
    List { items: Vec<SExpr>, pos: SourcePos },
}

impl SExpr {
    fn pos(&self) -> SourcePos {
        match self {
            SExpr::Atom { pos, .. } | SExpr::List { pos, .. } => *pos,
        }
    }

    fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom { text, .. } => Some(text),
            SExpr::List { .. } => None,
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(String, SourcePos)>, ParseError> {
    let mut tokens = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let pos = SourcePos { line, col };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '(' | ')' => {
                chars.next();
                col += 1;
                tokens.push((c.to_string(), pos));
            }
            _ => {
                let mut atom = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    atom.push(c);
                    chars.next();
                    col += 1;
                }
                tokens.push((atom, pos));
            }
        }
    }
    Ok(tokens)
}

fn parse_sexprs(text: &str) -> Result<Vec<SExpr>, ParseError> {
    let tokens = tokenize(text)?;
    let mut out = Vec::new();
    let mut stack: Vec<(Vec<SExpr>, SourcePos)> = Vec::new();
    for (tok, pos) in tokens {
        match tok.as_str() {
            "(" => stack.push((Vec::new(), pos)),
            ")" => {
                let (items, open_pos) = stack.pop().ok_or_else(|| {
                    ParseError::new(ParseErrorKind::Syntax, pos, "unmatched closing parenthesis")
                })?;
                let list = SExpr::List {
                    items,
                    pos: open_pos,
                };
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => out.push(list),
                }
            }
            _ => {
                let atom = SExpr::Atom { text: tok, pos };
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(atom),
                    None => out.push(atom),
                }
            }
        }
    }
    if let Some((_, pos)) = stack.last() {
        return Err(ParseError::new(
            ParseErrorKind::Syntax,
            *pos,
            "unclosed parenthesis",
        ));
    }
    Ok(out)
}

const RESERVED: &[&str] = &[
    "sort", "fun", "rule", ":guard", "bool", "bv", "true", "false", "and", "or", "not", "=",
    "bvadd", "bvsub", "bvslt", "bvult", "bvsge", "bvuge", "bvsle", "bvule",
];

fn comparison_op(name: &str) -> Option<CmpOp> {
    match name {
        "=" => Some(CmpOp::Eq),
        "bvult" => Some(CmpOp::Ult),
        "bvslt" => Some(CmpOp::Slt),
        "bvuge" => Some(CmpOp::Uge),
        "bvsge" => Some(CmpOp::Sge),
        "bvule" => Some(CmpOp::Ule),
        "bvsle" => Some(CmpOp::Sle),
        _ => None,
    }
}

struct Parser {
    sorts: BTreeSet<String>,
    funs: BTreeMap<String, Symbol>,
    fun_order: Vec<String>,
}

type VarEnv = BTreeMap<String, Sort>;

impl Parser {
    fn new() -> Parser {
        Parser {
            sorts: BTreeSet::new(),
            funs: BTreeMap::new(),
            fun_order: Vec::new(),
        }
    }

    fn parse_sort(&self, e: &SExpr) -> Result<Sort, ParseError> {
        match e {
            SExpr::Atom { text, pos } => match text.as_str() {
                "bool" => Ok(Sort::Bool),
                name if self.sorts.contains(name) => Ok(Sort::Named(name.to_string())),
                name => Err(ParseError::new(
                    ParseErrorKind::UnknownSymbol,
                    *pos,
                    format!("unknown sort {name}"),
                )),
            },
            SExpr::List { items, pos } => {
                if items.len() == 2 && items[0].as_atom() == Some("bv") {
                    let w = items[1]
                        .as_atom()
                        .and_then(|d| d.parse::<u32>().ok())
                        .filter(|w| *w >= 1)
                        .ok_or_else(|| {
                            ParseError::new(
                                ParseErrorKind::Syntax,
                                items[1].pos(),
                                "bit-vector width must be a positive integer",
                            )
                        })?;
                    Ok(Sort::Bv(w))
                } else {
                    Err(ParseError::new(
                        ParseErrorKind::Syntax,
                        *pos,
                        "expected a sort: bool, (bv N), or a declared sort name",
                    ))
                }
            }
        }
    }

    /// Bottom-up sort of a term where it can be determined without context.
    fn peek_sort(&self, e: &SExpr, vars: &VarEnv) -> Option<Sort> {
        match e {
            SExpr::Atom { text, .. } => {
                if let Some(digits) = text.strip_prefix("#b") {
                    return BitVec::from_binary_str(digits).map(|b| Sort::Bv(b.width()));
                }
                match text.as_str() {
                    "true" | "false" => Some(Sort::Bool),
                    name => vars
                        .get(name)
                        .cloned()
                        .or_else(|| self.funs.get(name).map(|f| f.result_sort.clone())),
                }
            }
            SExpr::List { items, .. } => {
                let head = items.first()?.as_atom()?;
                if let Some(f) = self.funs.get(head) {
                    return Some(f.result_sort.clone());
                }
                match head {
                    "bvadd" | "bvsub" => items[1..]
                        .iter()
                        .find_map(|a| self.peek_sort(a, vars))
                        .filter(|s| matches!(s, Sort::Bv(_))),
                    "and" | "or" | "not" => Some(Sort::Bool),
                    op if comparison_op(op).is_some() => Some(Sort::Bool),
                    _ => None,
                }
            }
        }
    }

    fn check_expected(
        &self,
        actual: &Sort,
        expected: Option<&Sort>,
        pos: SourcePos,
        what: &str,
    ) -> Result<(), ParseError> {
        match expected {
            Some(s) if s != actual => Err(ParseError::new(
                ParseErrorKind::SortMismatch,
                pos,
                format!("{what} has sort {actual}, expected {s}"),
            )),
            _ => Ok(()),
        }
    }

    fn parse_term(
        &self,
        e: &SExpr,
        expected: Option<&Sort>,
        vars: &mut VarEnv,
        allow_vars: bool,
    ) -> Result<Term, ParseError> {
        match e {
            SExpr::Atom { text, pos } => {
                if let Some(digits) = text.strip_prefix("#b") {
                    let bv = BitVec::from_binary_str(digits).ok_or_else(|| {
                        ParseError::new(
                            ParseErrorKind::Syntax,
                            *pos,
                            format!("malformed bit-vector literal {text}"),
                        )
                    })?;
                    if let Some(Sort::Bv(w)) = expected {
                        if *w != bv.width() {
                            return Err(ParseError::new(
                                ParseErrorKind::LiteralWidth,
                                *pos,
                                format!(
                                    "literal {text} has width {}, expected width {w}",
                                    bv.width()
                                ),
                            ));
                        }
                    } else if let Some(s) = expected {
                        return Err(ParseError::new(
                            ParseErrorKind::SortMismatch,
                            *pos,
                            format!("literal {text} is a bit-vector, expected {s}"),
                        ));
                    }
                    return Ok(Term::bv(bv));
                }
                match text.as_str() {
                    "true" | "false" => {
                        self.check_expected(&Sort::Bool, expected, *pos, text)?;
                        Ok(Term::bool(text == "true"))
                    }
                    name => {
                        if let Some(f) = self.funs.get(name) {
                            if f.arity() != 0 {
                                return Err(ParseError::new(
                                    ParseErrorKind::Arity,
                                    *pos,
                                    format!("{name} takes {} arguments", f.arity()),
                                ));
                            }
                            self.check_expected(&f.result_sort.clone(), expected, *pos, name)?;
                            return Ok(Term::app(f.clone(), vec![]));
                        }
                        if RESERVED.contains(&name) {
                            return Err(ParseError::new(
                                ParseErrorKind::Reserved,
                                *pos,
                                format!("{name} cannot be used as a variable"),
                            ));
                        }
                        if !allow_vars {
                            return Err(ParseError::new(
                                ParseErrorKind::UnknownSymbol,
                                *pos,
                                format!("undeclared symbol {name}"),
                            ));
                        }
                        match (vars.get(name), expected) {
                            (Some(s), _) => {
                                let s = s.clone();
                                self.check_expected(&s, expected, *pos, name)?;
                                Ok(Term::var(name, s))
                            }
                            (None, Some(s)) => {
                                vars.insert(name.to_string(), s.clone());
                                Ok(Term::var(name, s.clone()))
                            }
                            (None, None) => Err(ParseError::new(
                                ParseErrorKind::CannotInfer,
                                *pos,
                                format!("cannot infer the sort of variable {name}"),
                            )),
                        }
                    }
                }
            }
            SExpr::List { items, pos } => {
                let head = items
                    .first()
                    .and_then(|h| h.as_atom())
                    .ok_or_else(|| {
                        ParseError::new(ParseErrorKind::Syntax, *pos, "expected an application")
                    })?;
                let head_pos = items[0].pos();
                let args = &items[1..];

                if let Some(f) = self.funs.get(head).cloned() {
                    if args.len() != f.arity() {
                        return Err(ParseError::new(
                            ParseErrorKind::Arity,
                            head_pos,
                            format!("{head} takes {} arguments, got {}", f.arity(), args.len()),
                        ));
                    }
                    self.check_expected(&f.result_sort.clone(), expected, *pos, head)?;
                    let mut parsed = Vec::with_capacity(args.len());
                    for (a, s) in args.iter().zip(f.arg_sorts.clone()) {
                        parsed.push(self.parse_term(a, Some(&s), vars, allow_vars)?);
                    }
                    return Ok(Term::app(f, parsed));
                }

                match head {
                    "bvadd" | "bvsub" => {
                        if args.len() != 2 {
                            return Err(ParseError::new(
                                ParseErrorKind::Arity,
                                head_pos,
                                format!("{head} takes 2 arguments, got {}", args.len()),
                            ));
                        }
                        let width_sort = match expected {
                            Some(Sort::Bv(w)) => Sort::Bv(*w),
                            Some(s) => {
                                return Err(ParseError::new(
                                    ParseErrorKind::SortMismatch,
                                    *pos,
                                    format!("{head} yields a bit-vector, expected {s}"),
                                ))
                            }
                            None => args
                                .iter()
                                .find_map(|a| self.peek_sort(a, vars))
                                .filter(|s| matches!(s, Sort::Bv(_)))
                                .ok_or_else(|| {
                                    ParseError::new(
                                        ParseErrorKind::CannotInfer,
                                        *pos,
                                        format!("cannot infer the width of {head}"),
                                    )
                                })?,
                        };
                        let a = self.parse_term(&args[0], Some(&width_sort), vars, allow_vars)?;
                        let b = self.parse_term(&args[1], Some(&width_sort), vars, allow_vars)?;
                        Ok(if head == "bvadd" {
                            crate::term::theory::bvadd(a, b)
                        } else {
                            crate::term::theory::bvsub(a, b)
                        })
                    }
                    op if comparison_op(op).is_some() => {
                        let op = comparison_op(op).unwrap();
                        if args.len() != 2 {
                            return Err(ParseError::new(
                                ParseErrorKind::Arity,
                                head_pos,
                                format!("{head} takes 2 arguments, got {}", args.len()),
                            ));
                        }
                        self.check_expected(&Sort::Bool, expected, *pos, head)?;
                        let width_sort = args
                            .iter()
                            .find_map(|a| self.peek_sort(a, vars))
                            .filter(|s| matches!(s, Sort::Bv(_)))
                            .ok_or_else(|| {
                                ParseError::new(
                                    ParseErrorKind::CannotInfer,
                                    *pos,
                                    format!("cannot infer the operand width of {head}"),
                                )
                            })?;
                        let a = self.parse_term(&args[0], Some(&width_sort), vars, allow_vars)?;
                        let b = self.parse_term(&args[1], Some(&width_sort), vars, allow_vars)?;
                        Ok(crate::term::theory::cmp(op, a, b))
                    }
                    "and" | "or" => {
                        if args.len() < 2 {
                            return Err(ParseError::new(
                                ParseErrorKind::Arity,
                                head_pos,
                                format!("{head} takes at least 2 arguments"),
                            ));
                        }
                        self.check_expected(&Sort::Bool, expected, *pos, head)?;
                        let mut parsed = args
                            .iter()
                            .map(|a| self.parse_term(a, Some(&Sort::Bool), vars, allow_vars))
                            .collect::<Result<Vec<_>, _>>()?;
                        let mut acc = parsed.remove(0);
                        for b in parsed {
                            acc = if head == "and" {
                                crate::term::theory::and(acc, b)
                            } else {
                                crate::term::theory::or(acc, b)
                            };
                        }
                        Ok(acc)
                    }
                    "not" => {
                        if args.len() != 1 {
                            return Err(ParseError::new(
                                ParseErrorKind::Arity,
                                head_pos,
                                "not takes 1 argument",
                            ));
                        }
                        self.check_expected(&Sort::Bool, expected, *pos, head)?;
                        let a = self.parse_term(&args[0], Some(&Sort::Bool), vars, allow_vars)?;
                        Ok(crate::term::theory::not(a))
                    }
                    name => Err(ParseError::new(
                        ParseErrorKind::UnknownSymbol,
                        head_pos,
                        format!("undeclared symbol {name}"),
                    )),
                }
            }
        }
    }

    fn declare_sort(&mut self, items: &[SExpr], pos: SourcePos) -> Result<(), ParseError> {
        if items.len() != 2 {
            return Err(ParseError::new(
                ParseErrorKind::Syntax,
                pos,
                "expected (sort <name>)",
            ));
        }
        let name = items[1].as_atom().ok_or_else(|| {
            ParseError::new(ParseErrorKind::Syntax, items[1].pos(), "expected a sort name")
        })?;
        if RESERVED.contains(&name) {
            return Err(ParseError::new(
                ParseErrorKind::Reserved,
                items[1].pos(),
                format!("{name} is reserved"),
            ));
        }
        if !self.sorts.insert(name.to_string()) {
            return Err(ParseError::new(
                ParseErrorKind::DuplicateDeclaration,
                items[1].pos(),
                format!("sort {name} is already declared"),
            ));
        }
        Ok(())
    }

    fn declare_fun(&mut self, items: &[SExpr], pos: SourcePos) -> Result<(), ParseError> {
        if items.len() != 4 {
            return Err(ParseError::new(
                ParseErrorKind::Syntax,
                pos,
                "expected (fun <name> (<sort>...) <sort>)",
            ));
        }
        let name = items[1].as_atom().ok_or_else(|| {
            ParseError::new(
                ParseErrorKind::Syntax,
                items[1].pos(),
                "expected a function name",
            )
        })?;
        if RESERVED.contains(&name) {
            return Err(ParseError::new(
                ParseErrorKind::Reserved,
                items[1].pos(),
                format!("{name} is reserved"),
            ));
        }
        if self.funs.contains_key(name) {
            return Err(ParseError::new(
                ParseErrorKind::DuplicateDeclaration,
                items[1].pos(),
                format!("function {name} is already declared"),
            ));
        }
        let arg_sorts = match &items[2] {
            SExpr::List { items, .. } => items
                .iter()
                .map(|s| self.parse_sort(s))
                .collect::<Result<Vec<_>, _>>()?,
            SExpr::Atom { pos, .. } => {
                return Err(ParseError::new(
                    ParseErrorKind::Syntax,
                    *pos,
                    "expected a parenthesized argument sort list",
                ))
            }
        };
        let result_sort = self.parse_sort(&items[3])?;
        if arg_sorts.contains(&Sort::DpSort) || result_sort == Sort::DpSort {
            return Err(ParseError::new(
                ParseErrorKind::Reserved,
                items[3].pos(),
                "dpsort is internal",
            ));
        }
        self.funs
            .insert(name.to_string(), Symbol::plain(name, arg_sorts, result_sort));
        self.fun_order.push(name.to_string());
        Ok(())
    }

    fn parse_rule(&self, items: &[SExpr], pos: SourcePos) -> Result<ConstrainedRule, ParseError> {
        let (lhs_e, rhs_e, guard_e) = match items.len() {
            3 => (&items[1], &items[2], None),
            5 if items[3].as_atom() == Some(":guard") => (&items[1], &items[2], Some(&items[4])),
            _ => {
                return Err(ParseError::new(
                    ParseErrorKind::Syntax,
                    pos,
                    "expected (rule <lhs> <rhs>) or (rule <lhs> <rhs> :guard <formula>)",
                ))
            }
        };

        let mut vars = VarEnv::new();
        let lhs = self.parse_term(lhs_e, None, &mut vars, true)?;
        match lhs.root() {
            Some(f) if f.kind == SymbolKind::Plain => {}
            _ => {
                return Err(ParseError::new(
                    ParseErrorKind::InvalidRule,
                    lhs_e.pos(),
                    "rule left-hand side must be an application of a declared function",
                ))
            }
        }
        let lhs_sort = lhs.sort();
        let rhs = self.parse_term(rhs_e, Some(&lhs_sort), &mut vars, true)?;
        let guard = match guard_e {
            Some(g) => {
                let guard = self.parse_term(g, Some(&Sort::Bool), &mut vars, true)?;
                if !guard.is_theory_term() {
                    return Err(ParseError::new(
                        ParseErrorKind::InvalidRule,
                        g.pos(),
                        "guards may only use theory symbols and variables",
                    ));
                }
                guard
            }
            None => Term::bool(true),
        };
        Ok(ConstrainedRule::new(lhs, rhs, guard))
    }
}

/// Parses a full system. Declarations must precede use.
pub fn parse(text: &str) -> Result<Lctrs, ParseError> {
    let forms = parse_sexprs(text)?;
    let mut parser = Parser::new();
    let mut rules = Vec::new();
    let mut rule_positions = Vec::new();
    for form in &forms {
        let (items, pos) = match form {
            SExpr::List { items, pos } => (items, *pos),
            SExpr::Atom { pos, .. } => {
                return Err(ParseError::new(
                    ParseErrorKind::Syntax,
                    *pos,
                    "expected a declaration form",
                ))
            }
        };
        match items.first().and_then(|h| h.as_atom()) {
            Some("sort") => parser.declare_sort(items, pos)?,
            Some("fun") => parser.declare_fun(items, pos)?,
            Some("rule") => {
                rules.push(parser.parse_rule(items, pos)?);
                rule_positions.push(pos);
            }
            _ => {
                return Err(ParseError::new(
                    ParseErrorKind::Syntax,
                    pos,
                    "expected (sort ...), (fun ...), or (rule ...)",
                ))
            }
        }
    }
    let symbols: Vec<Symbol> = parser
        .fun_order
        .iter()
        .map(|n| parser.funs[n].clone())
        .collect();
    Lctrs::new(symbols, rules).map_err(|e| {
        let pos = match &e {
            LctrsError::UnboundRhsVariable { rule, .. }
            | LctrsError::UndeclaredSymbol { rule, .. }
            | LctrsError::IllSorted { rule } => rule_positions
                .get(rule - 1)
                .copied()
                .unwrap_or(SourcePos { line: 1, col: 1 }),
        };
        ParseError::new(ParseErrorKind::InvalidRule, pos, e.to_string())
    })
}

/// Parses a single ground term against the signature of `r`, for trace
/// requests. Unknown names are errors rather than variables.
pub fn parse_ground_term(text: &str, r: &Lctrs) -> Result<Term, ParseError> {
    let forms = parse_sexprs(text)?;
    if forms.len() != 1 {
        return Err(ParseError::new(
            ParseErrorKind::Syntax,
            SourcePos { line: 1, col: 1 },
            "expected exactly one term",
        ));
    }
    let mut parser = Parser::new();
    for s in r.symbols.iter() {
        for sort in s.arg_sorts.iter().chain([&s.result_sort]) {
            if let Sort::Named(n) = sort {
                parser.sorts.insert(n.clone());
            }
        }
        parser.funs.insert(s.name.clone(), s.clone());
        parser.fun_order.push(s.name.clone());
    }
    let mut vars = VarEnv::new();
    parser.parse_term(&forms[0], None, &mut vars, false)
}

/// Prints a system in the canonical surface syntax; `parse` of the output
/// reproduces the system.
pub fn print(r: &Lctrs) -> String {
    let mut out = String::new();
    let mut named: BTreeSet<&str> = BTreeSet::new();
    for s in &r.symbols {
        for sort in s.arg_sorts.iter().chain([&s.result_sort]) {
            if let Sort::Named(n) = sort {
                named.insert(n);
            }
        }
    }
    for n in named {
        out.push_str(&format!("(sort {n})\n"));
    }
    for s in &r.symbols {
        out.push_str(&format!("(fun {} (", s.name));
        for (i, a) in s.arg_sorts.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&a.to_string());
        }
        out.push_str(&format!(") {})\n", s.result_sort));
    }
    for rule in &r.rules {
        out.push_str(&format!("{rule}\n"));
    }
    out
}
