//! Instantiation of operator schemas into integer-indexed ground actions, and
//! the STRIPS transition function over [`State`]s.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::pddl::{Atom, DomainModel, GroundAtom, ProblemModel, Term, TypedName};

pub type FactId = u32;
pub type ActionId = u32;

/// Bidirectional ground atom <-> dense fact id map, ids in first-seen order.
#[derive(Clone, Debug, Default)]
pub struct FactTable {
    atoms: Vec<GroundAtom>,
    index: HashMap<GroundAtom, FactId>,
}

impl FactTable {
    pub fn intern(&mut self, atom: GroundAtom) -> FactId {
        if let Some(&id) = self.index.get(&atom) {
            return id;
        }
        let id = self.atoms.len() as FactId;
        self.index.insert(atom.clone(), id);
        self.atoms.push(atom);
        id
    }

    pub fn get(&self, atom: &GroundAtom) -> Option<FactId> {
        self.index.get(atom).copied()
    }

    pub fn atom(&self, id: FactId) -> &GroundAtom {
        &self.atoms[id as usize]
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (FactId, &GroundAtom)> {
        self.atoms.iter().enumerate().map(|(i, a)| (i as FactId, a))
    }
}

/// Set of non-static fact ids, stored as a bitset over the task's fact table.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    words: Box<[u64]>,
}

impl State {
    pub fn empty(num_facts: usize) -> Self {
        Self {
            words: vec![0; num_facts.div_ceil(64).max(1)].into_boxed_slice(),
        }
    }

    pub fn from_facts(num_facts: usize, facts: impl IntoIterator<Item = FactId>) -> Self {
        let mut s = Self::empty(num_facts);
        for f in facts {
            s.insert(f);
        }
        s
    }

    #[inline]
    pub fn contains(&self, f: FactId) -> bool {
        let f = f as usize;
        self.words
            .get(f / 64)
            .is_some_and(|w| w & (1u64 << (f % 64)) != 0)
    }

    #[inline]
    pub fn insert(&mut self, f: FactId) {
        let f = f as usize;
        self.words[f / 64] |= 1u64 << (f % 64);
    }

    #[inline]
    pub fn remove(&mut self, f: FactId) {
        let f = f as usize;
        self.words[f / 64] &= !(1u64 << (f % 64));
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Fact ids in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = FactId> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros();
                bits &= bits - 1;
                Some((wi * 64) as FactId + b)
            })
        })
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundAction {
    pub id: ActionId,
    pub schema: String,
    /// Index of the schema in the domain's operator list.
    pub schema_index: usize,
    pub args: Vec<String>,
    /// Non-static preconditions. Static preconditions were checked against the
    /// initial state when the action was created.
    pub pre: Vec<FactId>,
    pub add: Vec<FactId>,
    pub del: Vec<FactId>,
}

impl GroundAction {
    /// IPC plan syntax, e.g. `(pick-up b1)`.
    pub fn ipc_name(&self) -> String {
        let mut s = format!("({}", self.schema);
        for a in &self.args {
            s.push(' ');
            s.push_str(a);
        }
        s.push(')');
        s
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.schema, self.args.join(","))
    }
}

#[derive(Clone, Debug)]
pub struct GroundTask {
    pub name: String,
    pub domain_name: String,
    pub operator_names: Vec<String>,
    pub facts: FactTable,
    pub actions: Vec<GroundAction>,
    pub init: State,
    /// Goal facts in problem order.
    pub goals: Vec<FactId>,
    /// Static facts of the initial state, ascending.
    pub static_facts: Vec<FactId>,
    pub static_predicates: BTreeSet<String>,
    /// Objects and domain constants with their types.
    pub objects: Vec<TypedName>,
    is_static: Vec<bool>,
    /// Goals over static predicates that do not hold initially.
    unsat_static_goals: bool,
    dynamic_goals: Vec<FactId>,
    pre_of: Vec<Vec<ActionId>>,
    achievers: Vec<Vec<ActionId>>,
}

impl GroundTask {
    pub fn num_facts(&self) -> usize {
        self.facts.len()
    }

    pub fn action(&self, id: ActionId) -> &GroundAction {
        &self.actions[id as usize]
    }

    pub fn is_static_fact(&self, f: FactId) -> bool {
        self.is_static[f as usize]
    }

    /// Goals over non-static predicates.
    pub fn dynamic_goals(&self) -> &[FactId] {
        &self.dynamic_goals
    }

    /// A static goal is false in the initial state, so no state satisfies the goals.
    pub fn has_unsatisfiable_static_goal(&self) -> bool {
        self.unsat_static_goals
    }

    /// Actions with `f` among their preconditions, ascending.
    pub fn actions_requiring(&self, f: FactId) -> &[ActionId] {
        &self.pre_of[f as usize]
    }

    /// Actions adding `f`, ascending.
    pub fn achievers(&self, f: FactId) -> &[ActionId] {
        &self.achievers[f as usize]
    }

    pub fn is_goal(&self, s: &State) -> bool {
        !self.unsat_static_goals && self.dynamic_goals.iter().all(|&g| s.contains(g))
    }

    pub fn is_applicable(&self, s: &State, a: &GroundAction) -> bool {
        a.pre.iter().all(|&p| s.contains(p))
    }

    /// Actions whose preconditions hold in `s`, ascending by id.
    pub fn applicable_actions(&self, s: &State) -> Vec<ActionId> {
        let mut out = Vec::new();
        self.applicable_into(s, &mut out);
        out
    }

    pub fn applicable_into(&self, s: &State, out: &mut Vec<ActionId>) {
        out.clear();
        out.extend(
            self.actions
                .iter()
                .filter(|a| self.is_applicable(s, a))
                .map(|a| a.id),
        );
    }

    /// `(s \ del) ∪ add`. Debug builds check applicability.
    pub fn apply(&self, s: &State, a: ActionId) -> State {
        let a = self.action(a);
        debug_assert!(self.is_applicable(s, a), "{a} is not applicable");
        apply_action(s, a)
    }

    /// Checked variant of [`GroundTask::apply`].
    pub fn try_apply(&self, s: &State, a: ActionId) -> Option<State> {
        let act = self.actions.get(a as usize)?;
        self.is_applicable(s, act).then(|| apply_action(s, act))
    }

    /// Replays `plan` from the initial state; `true` iff every step is
    /// applicable and the final state satisfies the goals.
    pub fn validate_plan(&self, plan: &[ActionId]) -> bool {
        let mut s = self.init.clone();
        for &a in plan {
            match self.try_apply(&s, a) {
                Some(next) => s = next,
                None => return false,
            }
        }
        self.is_goal(&s)
    }

    pub fn state_atoms(&self, s: &State) -> Vec<&GroundAtom> {
        s.iter().map(|f| self.facts.atom(f)).collect()
    }

    pub fn find_action(&self, schema: &str, args: &[&str]) -> Option<ActionId> {
        self.actions
            .iter()
            .find(|a| a.schema == schema && a.args.iter().map(String::as_str).eq(args.iter().copied()))
            .map(|a| a.id)
    }

    pub fn fact_id(&self, predicate: &str, args: &[&str]) -> Option<FactId> {
        self.facts.get(&GroundAtom::new(predicate, args))
    }
}

/// STRIPS successor `(s \ del(a)) ∪ add(a)`; the caller guarantees applicability.
pub fn apply_action(s: &State, a: &GroundAction) -> State {
    let mut next = s.clone();
    for &d in &a.del {
        next.remove(d);
    }
    for &f in &a.add {
        next.insert(f);
    }
    next
}

fn ground_atom(atom: &Atom, op_params: &[TypedName], binding: &[&str]) -> GroundAtom {
    GroundAtom {
        predicate: atom.predicate.clone(),
        args: atom
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => {
                    let i = op_params.iter().position(|p| &p.name == v).expect("validated variable");
                    binding[i].to_string()
                }
                Term::Const(c) => c.clone(),
            })
            .collect(),
    }
}

/// Largest parameter index an atom depends on, or `None` for a variable-free atom.
fn max_param(atom: &Atom, params: &[TypedName]) -> Option<usize> {
    atom.args
        .iter()
        .filter_map(|t| match t {
            Term::Var(v) => params.iter().position(|p| &p.name == v),
            Term::Const(_) => None,
        })
        .max()
}

/// Every type-consistent instantiation whose static preconditions hold in the
/// initial state. Delete effects that are also added are dropped (add wins),
/// and instantiations that can never change a state are skipped.
pub fn ground_task(domain: &DomainModel, problem: &ProblemModel) -> GroundTask {
    let static_predicates = domain.static_predicates();
    let mut facts = FactTable::default();
    let mut objects: Vec<TypedName> = domain.constants.clone();
    objects.extend(problem.objects.iter().cloned());

    let mut init_ids = Vec::new();
    for a in &problem.init {
        init_ids.push(facts.intern(a.clone()));
    }
    let goals: Vec<FactId> = problem.goals.iter().map(|g| facts.intern(g.clone())).collect();
    let init_set: HashSet<&GroundAtom> = problem.init.iter().collect();

    let mut actions = Vec::new();
    for (schema_index, op) in domain.operators.iter().enumerate() {
        let candidates: Vec<Vec<&str>> = op
            .params
            .iter()
            .map(|p| {
                objects
                    .iter()
                    .filter(|o| domain.types.is_subtype(&o.ty, &p.ty))
                    .map(|o| o.name.as_str())
                    .collect()
            })
            .collect();
        // Static preconditions bucketed by the depth at which they become checkable.
        let mut static_at: Vec<Vec<&Atom>> = vec![Vec::new(); op.params.len() + 1];
        for a in op.pre.iter().filter(|a| static_predicates.contains(&a.predicate)) {
            let depth = max_param(a, &op.params).map_or(0, |m| m + 1);
            static_at[depth].push(a);
        }
        let mut binding: Vec<&str> = Vec::with_capacity(op.params.len());
        let holds = |atoms: &[&Atom], binding: &[&str]| {
            atoms
                .iter()
                .all(|a| init_set.contains(&ground_atom(a, &op.params, binding)))
        };
        if !holds(&static_at[0], &binding) {
            continue;
        }
        // Iterative odometer over parameter candidates with static pruning.
        let n = op.params.len();
        let mut idx = vec![0usize; n];
        let mut depth = 0usize;
        loop {
            if depth == n {
                let b: &[&str] = &binding;
                let mut pre = Vec::new();
                for a in op.pre.iter().filter(|a| !static_predicates.contains(&a.predicate)) {
                    let f = facts.intern(ground_atom(a, &op.params, b));
                    if !pre.contains(&f) {
                        pre.push(f);
                    }
                }
                let mut add = Vec::new();
                for a in &op.add {
                    let f = facts.intern(ground_atom(a, &op.params, b));
                    if !add.contains(&f) {
                        add.push(f);
                    }
                }
                let mut del = Vec::new();
                for a in &op.del {
                    let f = facts.intern(ground_atom(a, &op.params, b));
                    if !add.contains(&f) && !del.contains(&f) {
                        del.push(f);
                    }
                }
                let noop = del.is_empty() && add.iter().all(|f| pre.contains(f));
                if !noop {
                    actions.push(GroundAction {
                        id: actions.len() as ActionId,
                        schema: op.name.clone(),
                        schema_index,
                        args: b.iter().map(|s| s.to_string()).collect(),
                        pre,
                        add,
                        del,
                    });
                }
                if depth == 0 {
                    break;
                }
                depth -= 1;
                binding.pop();
                idx[depth] += 1;
                continue;
            }
            if idx[depth] >= candidates[depth].len() {
                idx[depth] = 0;
                if depth == 0 {
                    break;
                }
                depth -= 1;
                binding.pop();
                idx[depth] += 1;
                continue;
            }
            binding.push(candidates[depth][idx[depth]]);
            if holds(&static_at[depth + 1], &binding) {
                depth += 1;
            } else {
                binding.pop();
                idx[depth] += 1;
            }
        }
    }

    let nf = facts.len();
    let is_static: Vec<bool> = (0..nf)
        .map(|f| static_predicates.contains(&facts.atom(f as FactId).predicate))
        .collect();
    let mut static_facts: Vec<FactId> = init_ids.iter().copied().filter(|&f| is_static[f as usize]).collect();
    static_facts.sort_unstable();
    static_facts.dedup();
    let init = State::from_facts(nf, init_ids.iter().copied().filter(|&f| !is_static[f as usize]));
    let unsat_static_goals = goals
        .iter()
        .any(|&g| is_static[g as usize] && static_facts.binary_search(&g).is_err());
    let dynamic_goals: Vec<FactId> = goals.iter().copied().filter(|&g| !is_static[g as usize]).collect();

    let mut pre_of = vec![Vec::new(); nf];
    let mut achievers = vec![Vec::new(); nf];
    for a in &actions {
        for &p in &a.pre {
            pre_of[p as usize].push(a.id);
        }
        for &f in &a.add {
            achievers[f as usize].push(a.id);
        }
    }

    GroundTask {
        name: problem.name.clone(),
        domain_name: domain.name.clone(),
        operator_names: domain.operators.iter().map(|o| o.name.clone()).collect(),
        facts,
        actions,
        init,
        goals,
        static_facts,
        static_predicates,
        objects,
        is_static,
        unsat_static_goals,
        dynamic_goals,
        pre_of,
        achievers,
    }
}


#[cfg(test)]
pub(crate) use tests::bw as ground_bw;
