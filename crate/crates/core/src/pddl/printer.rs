use std::fmt::{self, Display, Write};

use super::model::*;

fn typed_list(out: &mut String, items: &[TypedName]) {
    for (i, it) in items.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{} - {}", it.name, it.ty);
    }
}

fn term(t: &Term) -> String {
    match t {
        Term::Var(v) => format!("?{v}"),
        Term::Const(c) => c.clone(),
    }
}

fn atom(a: &Atom) -> String {
    let mut s = format!("({}", a.predicate);
    for t in &a.args {
        s.push(' ');
        s.push_str(&term(t));
    }
    s.push(')');
    s
}

impl Display for DomainModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (domain {})", self.name)?;
        if !self.requirements.is_empty() {
            writeln!(f, "  (:requirements {})", self.requirements.join(" "))?;
        }
        let declared: Vec<TypedName> = self
            .types
            .names()
            .iter()
            .filter(|n| n.as_str() != OBJECT)
            .map(|n| TypedName::new(n.clone(), self.types.parent(n).unwrap_or(OBJECT)))
            .collect();
        if !declared.is_empty() {
            let mut s = String::new();
            typed_list(&mut s, &declared);
            writeln!(f, "  (:types {s})")?;
        }
        if !self.constants.is_empty() {
            let mut s = String::new();
            typed_list(&mut s, &self.constants);
            writeln!(f, "  (:constants {s})")?;
        }
        writeln!(f, "  (:predicates")?;
        for p in &self.predicates {
            write!(f, "    ({}", p.name)?;
            for (i, t) in p.arg_types.iter().enumerate() {
                write!(f, " ?x{i} - {t}")?;
            }
            writeln!(f, ")")?;
        }
        writeln!(f, "  )")?;
        for op in &self.operators {
            writeln!(f, "  (:action {}", op.name)?;
            let params: Vec<TypedName> = op
                .params
                .iter()
                .map(|p| TypedName::new(format!("?{}", p.name), p.ty.clone()))
                .collect();
            let mut s = String::new();
            typed_list(&mut s, &params);
            writeln!(f, "    :parameters ({s})")?;
            let pre: Vec<String> = op.pre.iter().map(atom).collect();
            writeln!(f, "    :precondition (and {})", pre.join(" "))?;
            let mut eff: Vec<String> = op.add.iter().map(atom).collect();
            eff.extend(op.del.iter().map(|a| format!("(not {})", atom(a))));
            writeln!(f, "    :effect (and {}))", eff.join(" "))?;
        }
        writeln!(f, ")")
    }
}

impl Display for ProblemModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (problem {})", self.name)?;
        writeln!(f, "  (:domain {})", self.domain_name)?;
        let mut s = String::new();
        typed_list(&mut s, &self.objects);
        writeln!(f, "  (:objects {s})")?;
        writeln!(f, "  (:init")?;
        for a in &self.init {
            writeln!(f, "    {a}")?;
        }
        writeln!(f, "  )")?;
        writeln!(f, "  (:goal (and")?;
        for a in &self.goals {
            writeln!(f, "    {a}")?;
        }
        writeln!(f, "  ))")?;
        writeln!(f, ")")
    }
}
