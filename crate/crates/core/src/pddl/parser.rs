use std::collections::HashMap;

use super::model::*;
use super::sexpr::{self, Pos, SExpr};
use super::PddlError;

const SUPPORTED_REQUIREMENTS: &[&str] = &[":strips", ":typing"];

fn unsupported_requirement(req: &str) -> Option<&'static str> {
    Some(match req {
        ":negative-preconditions" => "negative preconditions",
        ":disjunctive-preconditions" => "disjunctive preconditions",
        ":existential-preconditions" | ":universal-preconditions" | ":quantified-preconditions" => {
            "quantifiers"
        }
        ":conditional-effects" => "conditional effects",
        ":adl" => "ADL",
        ":equality" => "equality",
        ":fluents" | ":numeric-fluents" | ":object-fluents" | ":action-costs" => "numeric fluents",
        ":durative-actions" | ":duration-inequalities" | ":continuous-effects" | ":timed-initial-literals" => {
            "durative actions"
        }
        ":derived-predicates" => "derived predicates",
        ":preferences" | ":constraints" => "preferences and constraints",
        _ => return None,
    })
}

fn keyword_feature(head: &str) -> Option<&'static str> {
    Some(match head {
        "not" => "negative preconditions",
        "or" | "imply" => "disjunctive preconditions",
        "forall" | "exists" => "quantifiers",
        "when" => "conditional effects",
        "=" => "equality",
        "increase" | "decrease" | "assign" | "scale-up" | "scale-down" | "<" | ">" | "<=" | ">=" => {
            "numeric fluents"
        }
        _ => return None,
    })
}

fn expect_list<'a>(e: &'a SExpr, what: &str) -> Result<&'a [SExpr], PddlError> {
    e.as_list()
        .ok_or_else(|| PddlError::syntax(e.pos(), format!("expected a list for {what}")))
}

fn expect_atom<'a>(e: &'a SExpr, what: &str) -> Result<&'a str, PddlError> {
    e.as_atom()
        .ok_or_else(|| PddlError::syntax(e.pos(), format!("expected a symbol for {what}")))
}

/// Parses `(define (<kind> <name>) rest...)` and returns the name and the sections.
fn define_header<'a>(e: &'a SExpr, kind: &str) -> Result<(String, &'a [SExpr]), PddlError> {
    let items = expect_list(e, "define")?;
    if items.first().and_then(SExpr::as_atom) != Some("define") {
        return Err(PddlError::syntax(e.pos(), "expected (define ...)"));
    }
    let header = items
        .get(1)
        .ok_or_else(|| PddlError::syntax(e.pos(), format!("missing ({kind} <name>)")))?;
    let h = expect_list(header, kind)?;
    if h.len() != 2 || h[0].as_atom() != Some(kind) {
        return Err(PddlError::syntax(header.pos(), format!("expected ({kind} <name>)")));
    }
    Ok((expect_atom(&h[1], "name")?.to_string(), &items[2..]))
}

/// Typed list: `a b - t c` gives (a,t), (b,t), (c,object). Positions kept for diagnostics.
fn typed_list(items: &[SExpr]) -> Result<Vec<(String, String, Pos)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let it = &items[i];
        if let SExpr::List(_, p) = it {
            if it.head() == Some("either") {
                return Err(PddlError::unsupported(*p, "either types"));
            }
            return Err(PddlError::syntax(*p, "unexpected list in typed list"));
        }
        let s = it.as_atom().unwrap_or_default();
        if s == "-" {
            let ty = items
                .get(i + 1)
                .ok_or_else(|| PddlError::syntax(it.pos(), "missing type after '-'"))?;
            if ty.head() == Some("either") {
                return Err(PddlError::unsupported(ty.pos(), "either types"));
            }
            let ty = expect_atom(ty, "type")?;
            for (n, p) in pending.drain(..) {
                out.push((n, ty.to_string(), p));
            }
            i += 2;
        } else {
            pending.push((s.to_string(), it.pos()));
            i += 1;
        }
    }
    for (n, p) in pending {
        out.push((n, OBJECT.to_string(), p));
    }
    Ok(out)
}

fn requirements(items: &[SExpr]) -> Result<Vec<String>, PddlError> {
    let mut reqs = Vec::new();
    for r in items {
        let s = expect_atom(r, "requirement")?;
        if let Some(feature) = unsupported_requirement(s) {
            return Err(PddlError::unsupported(r.pos(), feature));
        }
        if !SUPPORTED_REQUIREMENTS.contains(&s) {
            return Err(PddlError::unsupported(r.pos(), &format!("requirement {s}")));
        }
        reqs.push(s.to_string());
    }
    Ok(reqs)
}

/// Flattens a conjunction of literals. Positive atoms go to `pos`; in effect
/// context `(not atom)` goes to `neg`.
fn conjunction<'a>(
    e: &'a SExpr,
    effect: bool,
    pos: &mut Vec<&'a SExpr>,
    neg: &mut Vec<&'a SExpr>,
) -> Result<(), PddlError> {
    let items = expect_list(e, "formula")?;
    match e.head() {
        None if items.is_empty() => Ok(()),
        Some("and") => {
            for sub in &items[1..] {
                conjunction(sub, effect, pos, neg)?;
            }
            Ok(())
        }
        Some("not") if effect => {
            if items.len() != 2 {
                return Err(PddlError::syntax(e.pos(), "(not ...) takes one atom"));
            }
            if let Some(h) = items[1].head() {
                if let Some(f) = keyword_feature(h) {
                    return Err(PddlError::unsupported(items[1].pos(), f));
                }
            }
            neg.push(&items[1]);
            Ok(())
        }
        Some(h) => {
            if let Some(f) = keyword_feature(h) {
                let f = if h == "not" && !effect { "negative preconditions" } else { f };
                return Err(PddlError::unsupported(e.pos(), f));
            }
            pos.push(e);
            Ok(())
        }
        None => Err(PddlError::syntax(e.pos(), "expected an atom")),
    }
}

struct DomainBuilder {
    model: DomainModel,
}

impl DomainBuilder {
    fn check_type(&self, ty: &str, pos: Pos) -> Result<(), PddlError> {
        if self.model.types.contains(ty) {
            Ok(())
        } else {
            Err(PddlError::semantic(pos, format!("undeclared type '{ty}'")))
        }
    }

    fn schema_atom(&self, e: &SExpr, params: &[TypedName]) -> Result<Atom, PddlError> {
        let items = expect_list(e, "atom")?;
        let pred_name = expect_atom(&items[0], "predicate")?;
        let pred = self.model.predicate(pred_name).ok_or_else(|| {
            PddlError::semantic(e.pos(), format!("undeclared predicate '{pred_name}'"))
        })?;
        let args = &items[1..];
        if args.len() != pred.arg_types.len() {
            return Err(PddlError::semantic(
                e.pos(),
                format!(
                    "predicate '{pred_name}' expects {} arguments, got {}",
                    pred.arg_types.len(),
                    args.len()
                ),
            ));
        }
        let mut terms = Vec::with_capacity(args.len());
        for (arg, want) in args.iter().zip(&pred.arg_types) {
            let s = expect_atom(arg, "argument")?;
            let (term, ty) = if let Some(v) = s.strip_prefix('?') {
                let p = params.iter().find(|p| p.name == v).ok_or_else(|| {
                    PddlError::semantic(arg.pos(), format!("undeclared variable '?{v}'"))
                })?;
                (Term::Var(v.to_string()), p.ty.clone())
            } else {
                let ty = self.model.constant_type(s).ok_or_else(|| {
                    PddlError::semantic(arg.pos(), format!("undeclared constant '{s}'"))
                })?;
                (Term::Const(s.to_string()), ty.to_string())
            };
            if !self.model.types.compatible(&ty, want) {
                return Err(PddlError::semantic(
                    arg.pos(),
                    format!("argument '{s}' of type '{ty}' is incompatible with '{want}' in '{pred_name}'"),
                ));
            }
            terms.push(term);
        }
        Ok(Atom {
            predicate: pred_name.to_string(),
            args: terms,
        })
    }

    fn action(&self, items: &[SExpr], pos: Pos) -> Result<OperatorSchema, PddlError> {
        let name = expect_atom(
            items
                .get(1)
                .ok_or_else(|| PddlError::syntax(pos, "missing action name"))?,
            "action name",
        )?
        .to_string();
        let mut params = Vec::new();
        let mut pre_expr = None;
        let mut eff_expr = None;
        let mut i = 2;
        while i < items.len() {
            let key = expect_atom(&items[i], "action keyword")?;
            let val = items
                .get(i + 1)
                .ok_or_else(|| PddlError::syntax(items[i].pos(), format!("missing value for {key}")))?;
            match key {
                ":parameters" => {
                    for (n, ty, p) in typed_list(expect_list(val, "parameters")?)? {
                        let n = n.strip_prefix('?').ok_or_else(|| {
                            PddlError::syntax(p, format!("parameter '{n}' must start with '?'"))
                        })?;
                        self.check_type(&ty, p)?;
                        if params.iter().any(|q: &TypedName| q.name == n) {
                            return Err(PddlError::semantic(p, format!("duplicate parameter '?{n}'")));
                        }
                        params.push(TypedName::new(n, ty));
                    }
                }
                ":precondition" => pre_expr = Some(val),
                ":effect" => eff_expr = Some(val),
                ":duration" => return Err(PddlError::unsupported(items[i].pos(), "durative actions")),
                other => {
                    return Err(PddlError::syntax(items[i].pos(), format!("unknown action keyword '{other}'")))
                }
            }
            i += 2;
        }
        let mut pre = Vec::new();
        if let Some(e) = pre_expr {
            let (mut p, mut n) = (Vec::new(), Vec::new());
            conjunction(e, false, &mut p, &mut n)?;
            for a in p {
                push_unique(&mut pre, self.schema_atom(a, &params)?);
            }
        }
        let (mut add, mut del) = (Vec::new(), Vec::new());
        if let Some(e) = eff_expr {
            let (mut p, mut n) = (Vec::new(), Vec::new());
            conjunction(e, true, &mut p, &mut n)?;
            for a in p {
                push_unique(&mut add, self.schema_atom(a, &params)?);
            }
            for a in n {
                push_unique(&mut del, self.schema_atom(a, &params)?);
            }
        }
        Ok(OperatorSchema {
            name,
            params,
            pre,
            add,
            del,
        })
    }
}

fn push_unique<T: PartialEq>(v: &mut Vec<T>, x: T) {
    if !v.contains(&x) {
        v.push(x);
    }
}

pub fn parse_domain(text: &str) -> Result<DomainModel, PddlError> {
    let root = sexpr::parse(text)?;
    let (name, sections) = define_header(&root, "domain")?;
    let mut b = DomainBuilder {
        model: DomainModel {
            name,
            requirements: Vec::new(),
            types: TypeHierarchy::default(),
            constants: Vec::new(),
            predicates: Vec::new(),
            operators: Vec::new(),
        },
    };
    for sec in sections {
        let items = expect_list(sec, "domain section")?;
        let key = items
            .first()
            .and_then(SExpr::as_atom)
            .ok_or_else(|| PddlError::syntax(sec.pos(), "expected a section keyword"))?;
        match key {
            ":requirements" => b.model.requirements = requirements(&items[1..])?,
            ":types" => {
                for (n, parent, p) in typed_list(&items[1..])? {
                    if n == OBJECT {
                        continue;
                    }
                    if !b.model.types.set_parent(&n, &parent) {
                        return Err(PddlError::semantic(p, format!("cyclic type hierarchy at '{n}'")));
                    }
                }
            }
            ":constants" => {
                for (n, ty, p) in typed_list(&items[1..])? {
                    b.check_type(&ty, p)?;
                    if b.model.constant_type(&n).is_some() {
                        return Err(PddlError::semantic(p, format!("duplicate constant '{n}'")));
                    }
                    b.model.constants.push(TypedName::new(n, ty));
                }
            }
            ":predicates" => {
                for decl in &items[1..] {
                    let d = expect_list(decl, "predicate declaration")?;
                    let pname = expect_atom(
                        d.first()
                            .ok_or_else(|| PddlError::syntax(decl.pos(), "empty predicate declaration"))?,
                        "predicate name",
                    )?;
                    if b.model.predicate(pname).is_some() {
                        return Err(PddlError::semantic(decl.pos(), format!("duplicate predicate '{pname}'")));
                    }
                    let mut arg_types = Vec::new();
                    for (_, ty, p) in typed_list(&d[1..])? {
                        b.check_type(&ty, p)?;
                        arg_types.push(ty);
                    }
                    b.model.predicates.push(PredicateDecl {
                        name: pname.to_string(),
                        arg_types,
                    });
                }
            }
            ":functions" => return Err(PddlError::unsupported(sec.pos(), "numeric fluents")),
            ":durative-action" => return Err(PddlError::unsupported(sec.pos(), "durative actions")),
            ":derived" => return Err(PddlError::unsupported(sec.pos(), "derived predicates")),
            ":action" => {
                let op = b.action(items, sec.pos())?;
                if b.model.operator(&op.name).is_some() {
                    return Err(PddlError::semantic(sec.pos(), format!("duplicate action '{}'", op.name)));
                }
                b.model.operators.push(op);
            }
            other => return Err(PddlError::syntax(sec.pos(), format!("unknown domain section '{other}'"))),
        }
    }
    Ok(b.model)
}

pub fn parse_problem(text: &str, domain: &DomainModel) -> Result<ProblemModel, PddlError> {
    let root = sexpr::parse(text)?;
    let (name, sections) = define_header(&root, "problem")?;
    let mut prob = ProblemModel {
        name,
        domain_name: String::new(),
        objects: Vec::new(),
        init: Vec::new(),
        goals: Vec::new(),
    };
    let mut obj_types: HashMap<String, String> = domain
        .constants
        .iter()
        .map(|c| (c.name.clone(), c.ty.clone()))
        .collect();
    // Sections are resolved after objects are known, so defer init/goal.
    let mut init_expr = None;
    let mut goal_expr = None;
    for sec in sections {
        let items = expect_list(sec, "problem section")?;
        let key = items
            .first()
            .and_then(SExpr::as_atom)
            .ok_or_else(|| PddlError::syntax(sec.pos(), "expected a section keyword"))?;
        match key {
            ":domain" => {
                let d = expect_atom(
                    items
                        .get(1)
                        .ok_or_else(|| PddlError::syntax(sec.pos(), "missing domain name"))?,
                    "domain name",
                )?;
                if d != domain.name {
                    return Err(PddlError::semantic(
                        sec.pos(),
                        format!("problem is for domain '{d}', not '{}'", domain.name),
                    ));
                }
                prob.domain_name = d.to_string();
            }
            ":requirements" => {
                requirements(&items[1..])?;
            }
            ":objects" => {
                for (n, ty, p) in typed_list(&items[1..])? {
                    if !domain.types.contains(&ty) {
                        return Err(PddlError::semantic(p, format!("object '{n}' has undeclared type '{ty}'")));
                    }
                    if obj_types.contains_key(&n) {
                        // A problem may redeclare a domain constant; duplicates among objects are errors.
                        if prob.objects.iter().any(|o| o.name == n) {
                            return Err(PddlError::semantic(p, format!("duplicate object '{n}'")));
                        }
                        continue;
                    }
                    obj_types.insert(n.clone(), ty.clone());
                    prob.objects.push(TypedName::new(n, ty));
                }
            }
            ":init" => init_expr = Some(&items[1..]),
            ":goal" => {
                goal_expr = Some(
                    items
                        .get(1)
                        .ok_or_else(|| PddlError::syntax(sec.pos(), "empty goal"))?,
                )
            }
            ":metric" => return Err(PddlError::unsupported(sec.pos(), "metric")),
            ":constraints" => return Err(PddlError::unsupported(sec.pos(), "preferences and constraints")),
            other => return Err(PddlError::syntax(sec.pos(), format!("unknown problem section '{other}'"))),
        }
    }
    let ground = |e: &SExpr| -> Result<GroundAtom, PddlError> {
        let items = expect_list(e, "ground atom")?;
        let pname = expect_atom(
            items
                .first()
                .ok_or_else(|| PddlError::syntax(e.pos(), "empty atom"))?,
            "predicate",
        )?;
        if let Some(f) = keyword_feature(pname) {
            return Err(PddlError::unsupported(e.pos(), f));
        }
        let pred = domain
            .predicate(pname)
            .ok_or_else(|| PddlError::semantic(e.pos(), format!("undeclared predicate '{pname}'")))?;
        if items.len() - 1 != pred.arg_types.len() {
            return Err(PddlError::semantic(
                e.pos(),
                format!(
                    "predicate '{pname}' expects {} arguments, got {}",
                    pred.arg_types.len(),
                    items.len() - 1
                ),
            ));
        }
        let mut args = Vec::new();
        for (a, want) in items[1..].iter().zip(&pred.arg_types) {
            let s = expect_atom(a, "object")?;
            let ty = obj_types
                .get(s)
                .ok_or_else(|| PddlError::semantic(a.pos(), format!("unknown object '{s}'")))?;
            if !domain.types.is_subtype(ty, want) {
                return Err(PddlError::semantic(
                    a.pos(),
                    format!("object '{s}' of type '{ty}' is not a '{want}' in '{pname}'"),
                ));
            }
            args.push(s.to_string());
        }
        Ok(GroundAtom {
            predicate: pname.to_string(),
            args,
        })
    };
    for e in init_expr.unwrap_or_default() {
        if e.head() == Some("not") {
            return Err(PddlError::unsupported(e.pos(), "negative literals in init"));
        }
        push_unique(&mut prob.init, ground(e)?);
    }
    if let Some(g) = goal_expr {
        let (mut p, mut n) = (Vec::new(), Vec::new());
        conjunction(g, false, &mut p, &mut n).map_err(|err| match err {
            PddlError::Unsupported { pos, feature } if feature == "negative preconditions" => {
                PddlError::Unsupported {
                    pos,
                    feature: "negative goals".into(),
                }
            }
            other => other,
        })?;
        for a in p {
            push_unique(&mut prob.goals, ground(a)?);
        }
    }
    Ok(prob)
}
