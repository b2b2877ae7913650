//! Logic-fact knowledge bases: one period-terminated ground atom per line,
//! `%` comments.

use std::collections::BTreeMap;
use std::fmt;

/// A ground atom with its identifier arguments kept in place.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fact {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Fact {
    pub fn new(predicate: impl Into<String>, args: Vec<String>) -> Self {
        Self {
            predicate: predicate.into(),
            args,
        }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}) .", self.predicate, self.args.join(", "))
    }
}

/// One target atom of an example: object arguments (empty for the operator
/// target) and the class label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetAtom {
    pub args: Vec<String>,
    pub class: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Example {
    pub id: String,
    pub problem: String,
    pub targets: Vec<TargetAtom>,
    /// Context facts, each with `id` and `problem` as its first two arguments.
    pub facts: Vec<Fact>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KnowledgeBase {
    /// `selected` for operator trees, `selected_<op>` for binding trees.
    pub target: String,
    pub examples: Vec<Example>,
    /// Static facts per problem id; first argument is the problem id.
    pub statics: BTreeMap<String, Vec<Fact>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct KbError {
    pub line: usize,
    pub msg: String,
}

/// Predicate and operator names as they appear in knowledge bases.
pub fn sanitize(symbol: &str) -> String {
    symbol.replace('-', "_")
}

impl KnowledgeBase {
    pub fn new(target: impl Into<String>) -> Self {
        Self {
            target: target.into(),
            ..Self::default()
        }
    }

    /// Number of learning examples: one per target atom.
    pub fn num_learning_examples(&self) -> usize {
        self.examples.iter().map(|e| e.targets.len()).sum()
    }

    /// Merges `other` into `self`. Both must share the target predicate.
    pub fn extend(&mut self, other: KnowledgeBase) {
        debug_assert!(self.target.is_empty() || self.target == other.target);
        if self.target.is_empty() {
            self.target = other.target;
        }
        self.examples.extend(other.examples);
        for (p, facts) in other.statics {
            self.statics.entry(p).or_insert(facts);
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut problems: Vec<&str> = Vec::new();
        let mut by_problem: BTreeMap<&str, Vec<&Example>> = BTreeMap::new();
        for e in &self.examples {
            if !by_problem.contains_key(e.problem.as_str()) {
                problems.push(&e.problem);
            }
            by_problem.entry(&e.problem).or_default().push(e);
        }
        for p in self.statics.keys() {
            if !by_problem.contains_key(p.as_str()) {
                problems.push(p);
                by_problem.insert(p, Vec::new());
            }
        }
        for p in problems {
            for e in &by_problem[p] {
                out.push_str(&format!("% Example {} from problem {}\n", e.id, e.problem));
                for t in &e.targets {
                    let mut args = vec![e.id.clone(), e.problem.clone()];
                    args.extend(t.args.iter().cloned());
                    args.push(t.class.clone());
                    out.push_str(&Fact::new(self.target.clone(), args).to_string());
                    out.push('\n');
                }
                for f in &e.facts {
                    out.push_str(&f.to_string());
                    out.push('\n');
                }
                out.push('\n');
            }
            if let Some(st) = self.statics.get(p) {
                out.push_str("% Static Predicates of problem\n");
                for f in st {
                    out.push_str(&f.to_string());
                    out.push('\n');
                }
                out.push('\n');
            }
        }
        out
    }

    /// Parses a knowledge base whose target predicate is `target`. Facts whose
    /// predicate starts with `static_fact_` are problem statics; everything
    /// else belongs to the example named by its first argument.
    pub fn parse(text: &str, target: &str) -> Result<Self, KbError> {
        let mut kb = KnowledgeBase::new(target);
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        for (line, fact) in parse_facts(text)? {
            let err = |msg: String| KbError { line, msg };
            if fact.predicate.starts_with("static_fact_") {
                let p = fact
                    .args
                    .first()
                    .ok_or_else(|| err("static fact without problem id".into()))?;
                kb.statics.entry(p.clone()).or_default().push(fact);
                continue;
            }
            if fact.args.len() < 2 {
                return Err(err(format!("'{}' lacks example and problem ids", fact.predicate)));
            }
            let id = fact.args[0].clone();
            let problem = fact.args[1].clone();
            let k = *index.entry(id.clone()).or_insert_with(|| {
                kb.examples.push(Example {
                    id: id.clone(),
                    problem: problem.clone(),
                    targets: Vec::new(),
                    facts: Vec::new(),
                });
                kb.examples.len() - 1
            });
            let ex = &mut kb.examples[k];
            if ex.problem != problem {
                return Err(err(format!("example {id} appears with two problem ids")));
            }
            if fact.predicate == target {
                let mut args = fact.args;
                let class = args.pop().filter(|_| args.len() >= 2).ok_or_else(|| {
                    err("target atom needs ids and a class".into())
                })?;
                ex.targets.push(TargetAtom {
                    args: args.split_off(2),
                    class,
                });
            } else {
                ex.facts.push(fact);
            }
        }
        Ok(kb)
    }
}

impl fmt::Display for KnowledgeBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Splits logic-fact text into `(line, atom)` pairs. Statements end with `.`
/// outside parentheses; `%` starts a comment.
pub(crate) fn parse_facts(text: &str) -> Result<Vec<(usize, Fact)>, KbError> {
    let mut out = Vec::new();
    let mut stmt = String::new();
    let mut start_line = 1;
    let mut depth = 0i32;
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('%').next().unwrap_or("");
        for ch in line.chars() {
            if stmt.trim().is_empty() {
                start_line = ln + 1;
            }
            match ch {
                '(' => depth += 1,
                ')' => depth -= 1,
                '.' if depth == 0 => {
                    out.push((start_line, parse_atom(stmt.trim(), start_line)?));
                    stmt.clear();
                    continue;
                }
                _ => {}
            }
            stmt.push(ch);
        }
        stmt.push(' ');
    }
    if !stmt.trim().is_empty() {
        return Err(KbError {
            line: start_line,
            msg: "statement not terminated by '.'".into(),
        });
    }
    Ok(out)
}

pub(crate) fn parse_atom(s: &str, line: usize) -> Result<Fact, KbError> {
    let err = |msg: &str| KbError {
        line,
        msg: format!("{msg}: '{s}'"),
    };
    let open = s.find('(');
    let Some(open) = open else {
        if s.is_empty() || s.contains(|c: char| c.is_whitespace() || c == ')') {
            return Err(err("malformed atom"));
        }
        return Ok(Fact::new(s, Vec::new()));
    };
    if !s.ends_with(')') {
        return Err(err("malformed atom"));
    }
    let name = s[..open].trim();
    let inner = &s[open + 1..s.len() - 1];
    if name.is_empty() {
        return Err(err("missing predicate name"));
    }
    let args: Vec<String> = if inner.trim().is_empty() {
        Vec::new()
    } else {
        split_top_level(inner).into_iter().map(|a| a.trim().to_string()).collect()
    };
    if args.iter().any(|a| a.is_empty()) {
        return Err(err("empty argument"));
    }
    Ok(Fact::new(name, args))
}

/// Splits on commas not nested in parentheses or brackets.
pub(crate) fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

#[cfg(test)]
mod tests {
    use super::*;

    const TR07_SWITCH_ON_KB: &str = "% Example tr07_e63 from problem tr07
selected_switch_on(tr07_e63, tr07, instrument0, satellite0, rejected) .
selected_switch_on(tr07_e63, tr07, instrument1, satellite0, selected) .
helpful_switch_on(tr07_e63, tr07, instrument0, satellite0) .
helpful_switch_on(tr07_e63, tr07, instrument1, satellite0) .
target_goal_have_image(tr07_e63, tr07, star5, image1) .

% Static Predicates of problem
static_fact_calibration_target(tr07, instrument0, star1) .
static_fact_on_board(tr07, instrument1, satellite0) .
";

    #[test]
    fn parses_binding_example() {
        let kb = KnowledgeBase::parse(TR07_SWITCH_ON_KB, "selected_switch_on").unwrap();
        assert_eq!(kb.examples.len(), 1);
        let e = &kb.examples[0];
        assert_eq!(e.id, "tr07_e63");
        assert_eq!(
            e.targets,
            vec![
                TargetAtom {
                    args: vec!["instrument0".into(), "satellite0".into()],
                    class: "rejected".into()
                },
                TargetAtom {
                    args: vec!["instrument1".into(), "satellite0".into()],
                    class: "selected".into()
                },
            ]
        );
        assert_eq!(e.facts.len(), 3);
        assert_eq!(kb.statics["tr07"].len(), 2);
        assert_eq!(kb.num_learning_examples(), 2);
    }

    #[test]
    fn text_round_trip() {
        let kb = KnowledgeBase::parse(TR07_SWITCH_ON_KB, "selected_switch_on").unwrap();
        let again = KnowledgeBase::parse(&kb.to_text(), "selected_switch_on").unwrap();
        assert_eq!(kb, again);
        assert_eq!(kb.to_text(), again.to_text());
    }

    #[test]
    fn errors_carry_lines() {
        let err = KnowledgeBase::parse("foo(a, b) .\nbar(a, b\n", "selected").unwrap_err();
        assert_eq!(err.line, 2);
        let err = KnowledgeBase::parse("selected(e1, p1) .", "selected").unwrap_err();
        assert!(err.msg.contains("class"), "{err}");
    }

    #[test]
    fn zero_ary_atoms() {
        let facts = parse_facts("handempty.\np(a).").unwrap();
        assert_eq!(facts[0].1, Fact::new("handempty", vec![]));
        assert_eq!(facts[1].1.args, ["a"]);
    }
}
