//! First-order decision trees and their line-oriented text format.
//!
//! ```text
//! selected(-A, -B, -C)
//! helpful_calibrate(A, B, -D, -E, -F) ?
//! +--yes: [calibrate] 44.0 [[turn_to:0.0, calibrate:44.0]]
//! +--no:  [turn_to] 149.0 [[turn_to:149.0, calibrate:0.0]]
//! ```
//!
//! The first line names the target and its variables. A query line ends in
//! `?`; `-X` introduces variable `X`, a bare `X` refers to a variable of the
//! target or of a query on the yes-path above. Leaves give the majority class,
//! the number of covered examples and the class distribution; a leaf may wrap
//! over several lines. Indentation and `|` rails are cosmetic.

use std::fmt;

use super::{solve, CompiledLit, FactSet, Sym, Vocab};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QArg {
    /// Reference to an already bound variable.
    Var(u32),
    /// Introduction of a new variable.
    Fresh(u32),
}

impl QArg {
    pub fn var(self) -> u32 {
        match self {
            QArg::Var(v) | QArg::Fresh(v) => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Query {
    pub predicate: String,
    pub args: Vec<QArg>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leaf {
    pub majority: String,
    /// Class counts in declaration order.
    pub counts: Vec<(String, u64)>,
}

impl Leaf {
    /// Leaf over `classes` with `counts[i]` examples of class `i`. Ties for
    /// the majority go to the earlier class.
    pub fn from_counts(classes: &[String], counts: &[u64]) -> Self {
        let mut best = 0;
        for i in 1..counts.len() {
            if counts[i] > counts[best] {
                best = i;
            }
        }
        Leaf {
            majority: classes.get(best).cloned().unwrap_or_default(),
            counts: classes.iter().cloned().zip(counts.iter().copied()).collect(),
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|(_, n)| n).sum()
    }

    /// Count of `class`, 0 when the class is not listed.
    pub fn count(&self, class: &str) -> u64 {
        self.counts
            .iter()
            .find(|(c, _)| c == class)
            .map_or(0, |(_, n)| *n)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Leaf(Leaf),
    Test { query: Query, yes: Box<Node>, no: Box<Node> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationalTree {
    pub target: String,
    /// Number of target arguments, identifiers and class included. The
    /// target's variables are `0..target_arity`.
    pub target_arity: usize,
    pub root: Node,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("tree line {line}: {msg}")]
pub struct TreeError {
    pub line: usize,
    pub msg: String,
}

pub fn var_name(v: u32) -> String {
    let letter = (b'A' + (v % 26) as u8) as char;
    if v < 26 {
        letter.to_string()
    } else {
        format!("{letter}{}", v / 26)
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| match a {
                QArg::Var(v) => var_name(*v),
                QArg::Fresh(v) => format!("-{}", var_name(*v)),
            })
            .collect();
        write!(f, "{}({})", self.predicate, args.join(", "))
    }
}

fn count_text(n: u64) -> String {
    format!("{n}.0")
}

impl fmt::Display for Leaf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dist: Vec<String> = self
            .counts
            .iter()
            .map(|(c, n)| format!("{c}:{}", count_text(*n)))
            .collect();
        write!(f, "[{}] {} [[{}]]", self.majority, count_text(self.total()), dist.join(", "))
    }
}

impl Node {
    fn write(&self, out: &mut String, indent: &str) {
        match self {
            Node::Leaf(l) => {
                out.push_str(&l.to_string());
                out.push('\n');
            }
            Node::Test { query, yes, no } => {
                out.push_str(&format!("{query} ?\n"));
                let child = format!("{indent}|       ");
                out.push_str(&format!("{indent}+--yes: "));
                yes.write(out, &child);
                out.push_str(&format!("{indent}+--no:  "));
                no.write(out, &child);
            }
        }
    }

    pub fn leaves(&self) -> Vec<&Leaf> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            match n {
                Node::Leaf(l) => out.push(l),
                Node::Test { yes, no, .. } => {
                    stack.push(no);
                    stack.push(yes);
                }
            }
        }
        out
    }

    pub fn size(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Test { yes, no, .. } => 1 + yes.size() + no.size(),
        }
    }
}

impl fmt::Display for RelationalTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars: Vec<String> = (0..self.target_arity as u32).map(|v| format!("-{}", var_name(v))).collect();
        let mut out = format!("{}({})\n", self.target, vars.join(", "));
        self.root.write(&mut out, "");
        f.write_str(&out)
    }
}

enum Token {
    Query(usize, String),
    Leaf(usize, String),
}

fn tokenize(text: &str) -> Result<(usize, String, Vec<Token>), TreeError> {
    let mut tokens = Vec::new();
    let mut header = None;
    let mut open_leaf: Option<(usize, String)> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut s = raw.trim_start_matches(|c: char| c == '|' || c.is_whitespace());
        for prefix in ["+--yes:", "+--no:"] {
            if let Some(rest) = s.strip_prefix(prefix) {
                s = rest.trim_start();
            }
        }
        let s = s.trim_end();
        if let Some((l, mut acc)) = open_leaf.take() {
            acc.push(' ');
            acc.push_str(s);
            if s.contains("]]") {
                tokens.push(Token::Leaf(l, acc));
            } else {
                open_leaf = Some((l, acc));
            }
            continue;
        }
        if s.is_empty() {
            continue;
        }
        if header.is_none() {
            header = Some((line, s.to_string()));
        } else if s.starts_with('[') {
            if s.contains("]]") {
                tokens.push(Token::Leaf(line, s.to_string()));
            } else {
                open_leaf = Some((line, s.to_string()));
            }
        } else if let Some(q) = s.strip_suffix('?') {
            tokens.push(Token::Query(line, q.trim().to_string()));
        } else {
            return Err(TreeError {
                line,
                msg: format!("expected a query ending in '?' or a leaf, found '{s}'"),
            });
        }
    }
    if let Some((l, _)) = open_leaf {
        return Err(TreeError {
            line: l,
            msg: "unterminated leaf distribution".into(),
        });
    }
    let (l, h) = header.ok_or(TreeError {
        line: 0,
        msg: "empty tree".into(),
    })?;
    Ok((l, h, tokens))
}

fn split_atom(s: &str, line: usize) -> Result<(String, Vec<String>), TreeError> {
    let err = |m: &str| TreeError {
        line,
        msg: format!("{m}: '{s}'"),
    };
    let open = s.find('(').ok_or_else(|| err("expected an atom"))?;
    let inner = s[open + 1..].strip_suffix(')').ok_or_else(|| err("expected ')'"))?;
    let args = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(|a| a.trim().to_string()).collect()
    };
    Ok((s[..open].trim().to_string(), args))
}

fn parse_leaf(s: &str, line: usize) -> Result<Leaf, TreeError> {
    let err = |m: &str| TreeError {
        line,
        msg: format!("{m}: '{s}'"),
    };
    let close = s.find(']').ok_or_else(|| err("malformed leaf"))?;
    let majority = s[1..close].trim().to_string();
    let open = s.find("[[").ok_or_else(|| err("missing class distribution"))?;
    let end = s.rfind("]]").ok_or_else(|| err("missing class distribution"))?;
    let total = parse_count(s[close + 1..open].trim()).ok_or_else(|| err("bad example count"))?;
    let mut counts = Vec::new();
    for part in s[open + 2..end].split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (c, n) = part.rsplit_once(':').ok_or_else(|| err("expected class:count"))?;
        counts.push((c.trim().to_string(), parse_count(n.trim()).ok_or_else(|| err("bad count"))?));
    }
    let leaf = Leaf { majority, counts };
    if leaf.total() != total {
        return Err(err("leaf total differs from the sum of its distribution"));
    }
    Ok(leaf)
}

fn parse_count(s: &str) -> Option<u64> {
    let v: f64 = s.parse().ok()?;
    (v >= 0.0 && v.fract() == 0.0).then_some(v as u64)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    names: Vec<String>,
}

impl Parser {
    fn lookup(&self, name: &str) -> Option<u32> {
        self.names.iter().position(|n| n == name).map(|i| i as u32)
    }

    fn node(&mut self, scope: &mut Vec<u32>) -> Result<Node, TreeError> {
        let tok = self.tokens.get(self.pos).ok_or(TreeError {
            line: 0,
            msg: "tree ends before every query has yes and no branches".into(),
        })?;
        self.pos += 1;
        match tok {
            Token::Leaf(line, s) => Ok(Node::Leaf(parse_leaf(s, *line)?)),
            Token::Query(line, s) => {
                let line = *line;
                let (predicate, raw) = split_atom(s, line)?;
                let mut args = Vec::new();
                let mark = scope.len();
                for a in raw {
                    if let Some(name) = a.strip_prefix('-') {
                        if self.lookup(name).is_some() {
                            return Err(TreeError {
                                line,
                                msg: format!("variable {name} introduced twice"),
                            });
                        }
                        self.names.push(name.to_string());
                        let v = self.names.len() as u32 - 1;
                        scope.push(v);
                        args.push(QArg::Fresh(v));
                    } else {
                        let v = self.lookup(&a).filter(|v| scope.contains(v)).ok_or_else(|| TreeError {
                            line,
                            msg: format!("variable {a} is not bound on the path to this query"),
                        })?;
                        args.push(QArg::Var(v));
                    }
                }
                let yes = self.node(scope)?;
                scope.truncate(mark);
                let no = self.node(scope)?;
                Ok(Node::Test {
                    query: Query { predicate, args },
                    yes: Box::new(yes),
                    no: Box::new(no),
                })
            }
        }
    }
}

impl RelationalTree {
    pub fn parse(text: &str) -> Result<Self, TreeError> {
        let (hline, header, tokens) = tokenize(text)?;
        let (target, vars) = split_atom(&header, hline)?;
        let mut names = Vec::new();
        for v in &vars {
            let name = v.strip_prefix('-').ok_or_else(|| TreeError {
                line: hline,
                msg: format!("target arguments must be new variables, found '{v}'"),
            })?;
            names.push(name.to_string());
        }
        let mut p = Parser { tokens, pos: 0, names };
        let mut scope: Vec<u32> = (0..vars.len() as u32).collect();
        let root = p.node(&mut scope)?;
        if let Some(t) = p.tokens.get(p.pos) {
            let line = match t {
                Token::Leaf(l, _) | Token::Query(l, _) => *l,
            };
            return Err(TreeError {
                line,
                msg: "trailing content after the tree".into(),
            });
        }
        Ok(RelationalTree {
            target,
            target_arity: vars.len(),
            root,
        })
    }

    pub fn leaves(&self) -> Vec<&Leaf> {
        self.root.leaves()
    }

    /// Total number of variables used.
    pub fn num_vars(&self) -> u32 {
        fn walk(n: &Node, m: &mut u32) {
            if let Node::Test { query, yes, no } = n {
                for a in &query.args {
                    *m = (*m).max(a.var() + 1);
                }
                walk(yes, m);
                walk(no, m);
            }
        }
        let mut m = self.target_arity as u32;
        walk(&self.root, &mut m);
        m
    }

    /// True when every variable reference is bound by the target or by a
    /// query on the yes-path above it.
    pub fn is_well_scoped(&self) -> bool {
        fn walk(n: &Node, scope: &mut Vec<u32>) -> bool {
            match n {
                Node::Leaf(_) => true,
                Node::Test { query, yes, no } => {
                    let mark = scope.len();
                    for a in &query.args {
                        match *a {
                            QArg::Var(v) if !scope.contains(&v) => return false,
                            QArg::Fresh(v) if scope.contains(&v) => return false,
                            QArg::Fresh(v) => scope.push(v),
                            QArg::Var(_) => {}
                        }
                    }
                    let ok = walk(yes, scope);
                    scope.truncate(mark);
                    ok && walk(no, scope)
                }
            }
        }
        walk(&self.root, &mut (0..self.target_arity as u32).collect())
    }

    pub fn compile(&self, vocab: &mut Vocab) -> CompiledTree {
        let mut ct = CompiledTree {
            nodes: Vec::new(),
            leaves: Vec::new(),
            num_vars: self.num_vars() as usize,
        };
        fn walk(n: &Node, vocab: &mut Vocab, ct: &mut CompiledTree) -> usize {
            match n {
                Node::Leaf(l) => {
                    ct.leaves.push(l.clone());
                    ct.nodes.push(CNode::Leaf(ct.leaves.len() - 1));
                    ct.nodes.len() - 1
                }
                Node::Test { query, yes, no } => {
                    let at = ct.nodes.len();
                    ct.nodes.push(CNode::Leaf(0));
                    let lit = CompiledLit::new(vocab, query);
                    let y = walk(yes, vocab, ct);
                    let n = walk(no, vocab, ct);
                    ct.nodes[at] = CNode::Test { lit, yes: y, no: n };
                    at
                }
            }
        }
        walk(&self.root, vocab, &mut ct);
        ct
    }

    /// Leaf reached by a context. `bound` gives the values of the first
    /// target variables: example id, problem id, then object arguments.
    pub fn classify(&self, vocab: &mut Vocab, facts: &FactSet, bound: &[Sym]) -> Leaf {
        self.compile(vocab).classify(facts, bound).clone()
    }
}

#[derive(Clone, Debug)]
enum CNode {
    Leaf(usize),
    Test { lit: CompiledLit, yes: usize, no: usize },
}

/// A tree with predicates resolved against a vocabulary, for repeated
/// classification.
#[derive(Clone, Debug)]
pub struct CompiledTree {
    nodes: Vec<CNode>,
    leaves: Vec<Leaf>,
    num_vars: usize,
}

impl CompiledTree {
    pub fn classify(&self, facts: &FactSet, bound: &[Sym]) -> &Leaf {
        let mut base: Vec<Option<Sym>> = vec![None; self.num_vars.max(bound.len())];
        for (i, &s) in bound.iter().enumerate() {
            base[i] = Some(s);
        }
        let mut bindings = base.clone();
        let mut conj: Vec<&CompiledLit> = Vec::new();
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                CNode::Leaf(l) => return &self.leaves[*l],
                CNode::Test { lit, yes, no } => {
                    conj.push(lit);
                    // witnesses of earlier tests must stay open to backtracking
                    bindings.copy_from_slice(&base);
                    if solve(facts, &conj, &mut bindings) {
                        at = *yes;
                    } else {
                        conj.pop();
                        at = *no;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn parses_operator_tree_text() {
        let t = RelationalTree::parse(fixtures::SATELLITE_OPERATOR_TREE).unwrap();
        assert_eq!(t.target, "selected");
        assert_eq!(t.target_arity, 3);
        let totals: Vec<u64> = t.leaves().iter().map(|l| l.total()).collect();
        assert_eq!(totals, [44, 110, 59, 149]);
        assert_eq!(totals.iter().sum::<u64>(), 362);
        assert!(t.is_well_scoped());
        let Node::Test { query, .. } = &t.root else { panic!() };
        assert_eq!(query.to_string(), "helpful_calibrate(A, B, -D, -E, -F)");
        assert_eq!(t.num_vars(), 12);
    }

    #[test]
    fn parses_binding_tree_text() {
        let t = RelationalTree::parse(fixtures::SATELLITE_SWITCH_ON_TREE).unwrap();
        assert_eq!(t.target, "selected_switch_on");
        assert_eq!(t.target_arity, 5);
        let Node::Test { query, yes, .. } = &t.root else { panic!() };
        assert_eq!(query.args, [QArg::Var(0), QArg::Var(1), QArg::Var(2), QArg::Var(3)]);
        let Node::Leaf(l) = yes.as_ref() else { panic!() };
        assert_eq!(l.count("selected"), 213);
        assert_eq!(l.count("rejected"), 36);
        assert_eq!(l.majority, "selected");
    }

    #[test]
    fn print_parse_round_trip() {
        for src in [fixtures::SATELLITE_OPERATOR_TREE, fixtures::SATELLITE_SWITCH_ON_TREE] {
            let t = RelationalTree::parse(src).unwrap();
            let printed = t.to_string();
            let again = RelationalTree::parse(&printed).unwrap();
            assert_eq!(t, again);
            assert_eq!(printed, again.to_string());
        }
    }

    #[test]
    fn rejects_unscoped_variable() {
        let src = "selected(-A, -B, -C)
p(A, B, -D) ?
+--yes: [x] 1.0 [[x:1.0]]
+--no:  q(A, B, D) ?
        +--yes: [x] 1.0 [[x:1.0]]
        +--no:  [x] 1.0 [[x:1.0]]
";
        let err = RelationalTree::parse(src).unwrap_err();
        assert_eq!(err.line, 4);
        assert!(err.msg.contains("not bound"), "{err}");
    }

    #[test]
    fn rejects_bad_totals_and_truncation() {
        let err = RelationalTree::parse("s(-A)\n[x] 2.0 [[x:1.0]]\n").unwrap_err();
        assert!(err.msg.contains("total"), "{err}");
        let err = RelationalTree::parse("s(-A)\np(A) ?\n+--yes: [x] 1.0 [[x:1.0]]\n").unwrap_err();
        assert!(err.msg.contains("branches"), "{err}");
        let err = RelationalTree::parse("s(-A)\n[x] 1.0 [[x:1.0,\n").unwrap_err();
        assert!(err.msg.contains("unterminated"), "{err}");
    }

    #[test]
    fn majority_ties_go_to_first_class() {
        let classes = vec!["a".to_string(), "b".to_string()];
        assert_eq!(Leaf::from_counts(&classes, &[3, 3]).majority, "a");
        assert_eq!(Leaf::from_counts(&classes, &[2, 3]).majority, "b");
    }

    #[test]
    fn var_names() {
        assert_eq!(var_name(0), "A");
        assert_eq!(var_name(25), "Z");
        assert_eq!(var_name(26), "A1");
        assert_eq!(var_name(53), "B2");
    }
}
