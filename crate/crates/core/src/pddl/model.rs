use std::collections::{BTreeSet, HashMap};

/// Name of the implicit root type.
pub const OBJECT: &str = "object";

/// Single-inheritance type tree rooted at [`OBJECT`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeHierarchy {
    names: Vec<String>,
    parent: HashMap<String, String>,
}

impl Default for TypeHierarchy {
    fn default() -> Self {
        Self {
            names: vec![OBJECT.to_string()],
            parent: HashMap::new(),
        }
    }
}

impl TypeHierarchy {
    /// Declared types in declaration order, `object` first.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn contains(&self, ty: &str) -> bool {
        self.names.iter().any(|n| n == ty)
    }

    pub fn parent(&self, ty: &str) -> Option<&str> {
        self.parent.get(ty).map(String::as_str)
    }

    pub(crate) fn declare(&mut self, ty: &str) {
        if !self.contains(ty) {
            self.names.push(ty.to_string());
        }
    }

    /// Sets the parent of `ty`. Returns false when this would create a cycle.
    pub(crate) fn set_parent(&mut self, ty: &str, parent: &str) -> bool {
        self.declare(ty);
        self.declare(parent);
        if ty == OBJECT || self.is_subtype(parent, ty) {
            return false;
        }
        self.parent.insert(ty.to_string(), parent.to_string());
        true
    }

    /// `sub` equals `sup` or descends from it.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        if sup == OBJECT {
            return true;
        }
        let mut cur = sub;
        loop {
            if cur == sup {
                return true;
            }
            match self.parent.get(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
    }

    /// Either type is an ancestor of the other.
    pub fn compatible(&self, a: &str, b: &str) -> bool {
        self.is_subtype(a, b) || self.is_subtype(b, a)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypedName {
    pub name: String,
    pub ty: String,
}

impl TypedName {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ty: ty.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub arg_types: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// Operator parameter, stored without the leading `?`.
    Var(String),
    Const(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorSchema {
    pub name: String,
    pub params: Vec<TypedName>,
    pub pre: Vec<Atom>,
    pub add: Vec<Atom>,
    pub del: Vec<Atom>,
}

impl OperatorSchema {
    pub fn param_index(&self, var: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == var)
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.pre.iter().chain(&self.add).chain(&self.del)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainModel {
    pub name: String,
    pub requirements: Vec<String>,
    pub types: TypeHierarchy,
    pub constants: Vec<TypedName>,
    pub predicates: Vec<PredicateDecl>,
    pub operators: Vec<OperatorSchema>,
}

impl DomainModel {
    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn operator(&self, name: &str) -> Option<&OperatorSchema> {
        self.operators.iter().find(|o| o.name == name)
    }

    pub fn constant_type(&self, name: &str) -> Option<&str> {
        self.constants
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.ty.as_str())
    }

    /// Predicates that occur in no operator's add or delete list.
    pub fn static_predicates(&self) -> BTreeSet<String> {
        let effected: BTreeSet<&str> = self
            .operators
            .iter()
            .flat_map(|o| o.add.iter().chain(&o.del))
            .map(|a| a.predicate.as_str())
            .collect();
        self.predicates
            .iter()
            .filter(|p| !effected.contains(p.name.as_str()))
            .map(|p| p.name.clone())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new(predicate: impl Into<String>, args: &[&str]) -> Self {
        Self {
            predicate: predicate.into(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl std::fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemModel {
    pub name: String,
    pub domain_name: String,
    pub objects: Vec<TypedName>,
    pub init: Vec<GroundAtom>,
    pub goals: Vec<GroundAtom>,
}
