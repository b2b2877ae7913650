//! Language bias: target declaration, classes and query modes with types.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::kb::{parse_atom, parse_facts, sanitize, Fact, KbError};
use crate::pddl::DomainModel;

pub const TYPE_EXAMPLE_ID: &str = "index";
pub const TYPE_PROBLEM_ID: &str = "idprob";
pub const TYPE_CLASS: &str = "class";

/// Example-identifier type names accepted when reading.
pub fn is_example_id_type(ty: &str) -> bool {
    ty == TYPE_EXAMPLE_ID || ty == "idex"
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArgMode {
    /// `+`: may reuse a bound variable of the same type or introduce a new one.
    Input,
    /// `-`: always introduces a new variable.
    Output,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeArg {
    pub mode: ArgMode,
    pub name: String,
    pub ty: String,
}

impl ModeArg {
    pub fn is_example_id(&self) -> bool {
        is_example_id_type(&self.ty)
    }

    pub fn is_problem_id(&self) -> bool {
        self.ty == TYPE_PROBLEM_ID
    }

    pub fn is_identifier(&self) -> bool {
        self.is_example_id() || self.is_problem_id()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeDecl {
    pub predicate: String,
    pub args: Vec<ModeArg>,
}

impl ModeDecl {
    fn mode_text(&self) -> String {
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| {
                let m = if a.mode == ArgMode::Input { '+' } else { '-' };
                format!("{m}{}", a.name)
            })
            .collect();
        format!("{}({})", self.predicate, args.join(","))
    }

    fn type_text(&self) -> String {
        let tys: Vec<&str> = self.args.iter().map(|a| a.ty.as_str()).collect();
        format!("type({}({})).", self.predicate, tys.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LanguageBias {
    pub target: ModeDecl,
    pub classes: Vec<String>,
    pub modes: Vec<ModeDecl>,
}

/// Which tree a bias is for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BiasTarget<'a> {
    Operators,
    Bindings(&'a str),
}

fn object_args(types: &[String], counters: &mut BTreeMap<char, u32>) -> Vec<ModeArg> {
    types
        .iter()
        .map(|ty| {
            let c = ty.chars().next().unwrap_or('x').to_ascii_uppercase();
            let n = counters.entry(c).or_insert(0);
            *n += 1;
            ModeArg {
                mode: ArgMode::Input,
                name: format!("{c}{n}"),
                ty: ty.clone(),
            }
        })
        .collect()
}

fn id_args(example: bool) -> Vec<ModeArg> {
    let mut v = Vec::new();
    if example {
        v.push(ModeArg {
            mode: ArgMode::Input,
            name: "IdExample".into(),
            ty: TYPE_EXAMPLE_ID.into(),
        });
    }
    v.push(ModeArg {
        mode: ArgMode::Input,
        name: "IdProblem".into(),
        ty: TYPE_PROBLEM_ID.into(),
    });
    v
}

fn mode(predicate: String, example_id: bool, types: &[String]) -> ModeDecl {
    let mut args = id_args(example_id);
    args.extend(object_args(types, &mut BTreeMap::new()));
    ModeDecl { predicate, args }
}

/// Bias generated from the domain. `goal_predicates`, when given, limits the
/// `target_goal_*` modes to predicates that occur in training goals.
pub fn emit_language_bias(
    domain: &DomainModel,
    target: BiasTarget<'_>,
    goal_predicates: Option<&BTreeSet<String>>,
) -> LanguageBias {
    let statics = domain.static_predicates();
    let op_types = |name: &str| -> Vec<String> {
        domain
            .operator(name)
            .map(|o| o.params.iter().map(|p| p.ty.clone()).collect())
            .unwrap_or_default()
    };
    let (target, classes) = match target {
        BiasTarget::Operators => {
            let mut args = id_args(true);
            args.push(ModeArg {
                mode: ArgMode::Output,
                name: "Operator".into(),
                ty: TYPE_CLASS.into(),
            });
            (
                ModeDecl {
                    predicate: "selected".into(),
                    args,
                },
                domain.operators.iter().map(|o| sanitize(&o.name)).collect(),
            )
        }
        BiasTarget::Bindings(op) => {
            let mut m = mode(format!("selected_{}", sanitize(op)), true, &op_types(op));
            m.args.push(ModeArg {
                mode: ArgMode::Output,
                name: "Class".into(),
                ty: TYPE_CLASS.into(),
            });
            (m, vec!["selected".to_string(), "rejected".to_string()])
        }
    };
    let mut modes = Vec::new();
    for o in &domain.operators {
        modes.push(mode(format!("helpful_{}", sanitize(&o.name)), true, &op_types(&o.name)));
    }
    for p in &domain.predicates {
        if statics.contains(&p.name) {
            continue;
        }
        if goal_predicates.is_some_and(|g| !g.contains(&p.name)) {
            continue;
        }
        modes.push(mode(format!("target_goal_{}", sanitize(&p.name)), true, &p.arg_types));
    }
    for p in &domain.predicates {
        if statics.contains(&p.name) {
            modes.push(mode(format!("static_fact_{}", sanitize(&p.name)), false, &p.arg_types));
        }
    }
    LanguageBias {
        target,
        classes,
        modes,
    }
}

impl LanguageBias {
    pub fn mode(&self, predicate: &str) -> Option<&ModeDecl> {
        self.modes.iter().find(|m| m.predicate == predicate)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("% ---- The target concept ----\n");
        let _ = writeln!(out, "predict({}).", self.target.mode_text());
        let _ = writeln!(out, "{}", self.target.type_text());
        let _ = writeln!(out, "classes([{}]).", self.classes.join(","));
        let sections = [
            ("helpful_", "% ---- The helpful context ----\n% predicates for the helpful actions\n"),
            ("target_goal_", "% predicates for the target goals\n"),
            ("static_fact_", "% predicates for the static facts\n"),
        ];
        for (prefix, header) in sections {
            let ms: Vec<&ModeDecl> = self.modes.iter().filter(|m| m.predicate.starts_with(prefix)).collect();
            if ms.is_empty() && prefix != "helpful_" {
                continue;
            }
            out.push('\n');
            out.push_str(header);
            for m in ms {
                let _ = writeln!(out, "rmode({}).", m.mode_text());
                let _ = writeln!(out, "{}", m.type_text());
                out.push('\n');
            }
            if out.ends_with("\n\n") {
                out.pop();
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, KbError> {
        let mut target: Option<(usize, Vec<(ArgMode, String)>, String)> = None;
        let mut classes = None;
        let mut rmodes: Vec<(usize, String, Vec<(ArgMode, String)>)> = Vec::new();
        let mut types: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (line, stmt) in parse_facts(text)? {
            let err = |msg: String| KbError { line, msg };
            let single = |s: &Fact| -> Result<Fact, KbError> {
                if s.args.len() != 1 {
                    return Err(err(format!("{} takes one argument", s.predicate)));
                }
                parse_atom(&s.args[0], line)
            };
            match stmt.predicate.as_str() {
                "predict" => {
                    let a = single(&stmt)?;
                    target = Some((line, mode_args(&a.args, line)?, a.predicate));
                }
                "rmode" => {
                    let a = single(&stmt)?;
                    rmodes.push((line, a.predicate.clone(), mode_args(&a.args, line)?));
                }
                "type" => {
                    let a = single(&stmt)?;
                    types.insert(a.predicate, a.args);
                }
                "classes" => {
                    let list = stmt.args.join(",");
                    let inner = list
                        .trim()
                        .strip_prefix('[')
                        .and_then(|s| s.strip_suffix(']'))
                        .ok_or_else(|| err("classes expects a [list]".into()))?;
                    classes = Some(
                        inner
                            .split(',')
                            .map(|c| c.trim().to_string())
                            .filter(|c| !c.is_empty())
                            .collect::<Vec<_>>(),
                    );
                }
                other => return Err(err(format!("unknown bias statement '{other}'"))),
            }
        }
        let join = |line: usize, pred: String, args: Vec<(ArgMode, String)>| -> Result<ModeDecl, KbError> {
            let tys = types.get(&pred).ok_or_else(|| KbError {
                line,
                msg: format!("no type declaration for '{pred}'"),
            })?;
            if tys.len() != args.len() {
                return Err(KbError {
                    line,
                    msg: format!("type declaration of '{pred}' has {} arguments, mode has {}", tys.len(), args.len()),
                });
            }
            Ok(ModeDecl {
                predicate: pred,
                args: args
                    .into_iter()
                    .zip(tys)
                    .map(|((mode, name), ty)| ModeArg {
                        mode,
                        name,
                        ty: ty.clone(),
                    })
                    .collect(),
            })
        };
        let (tl, targs, tpred) = target.ok_or(KbError {
            line: 0,
            msg: "missing predict(...) declaration".into(),
        })?;
        let target = join(tl, tpred, targs)?;
        let modes = rmodes
            .into_iter()
            .map(|(l, p, a)| join(l, p, a))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LanguageBias {
            target,
            classes: classes.ok_or(KbError {
                line: 0,
                msg: "missing classes([...]) declaration".into(),
            })?,
            modes,
        })
    }
}

fn mode_args(args: &[String], line: usize) -> Result<Vec<(ArgMode, String)>, KbError> {
    args.iter()
        .map(|a| {
            if let Some(n) = a.strip_prefix('+') {
                Ok((ArgMode::Input, n.to_string()))
            } else if let Some(n) = a.strip_prefix('-') {
                Ok((ArgMode::Output, n.to_string()))
            } else {
                Err(KbError {
                    line,
                    msg: format!("mode argument '{a}' must start with + or -"),
                })
            }
        })
        .collect()
}
