//! Helpful contexts and tree-based action ordering.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use num_rational::Ratio;

use crate::grounding::{ActionId, FactId, GroundTask, State};
use crate::learner::{CompiledTree, FactSet, Leaf, RelationalTree, Sym, Vocab};
use crate::training::{sanitize, REJECTED, SELECTED};

pub type Priority = Ratio<i64>;

/// `H(s)`: helpful actions, unachieved goals and static facts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HelpfulContext {
    pub helpful: Vec<ActionId>,
    pub target: Vec<FactId>,
    pub statics: Vec<FactId>,
}

pub fn build_helpful_context(task: &GroundTask, s: &State, helpful: &[ActionId]) -> HelpfulContext {
    HelpfulContext {
        helpful: helpful.to_vec(),
        target: task
            .goals
            .iter()
            .copied()
            .filter(|&g| !s.contains(g) && !task.is_static_fact(g))
            .collect(),
        statics: task.static_facts.clone(),
    }
}

/// `selected / (selected + rejected)`, 0 when both are 0.
pub fn selection_ratio(selected: u64, rejected: u64) -> Priority {
    if selected + rejected == 0 {
        Priority::from_integer(0)
    } else {
        Priority::new(selected as i64, (selected + rejected) as i64)
    }
}

/// Operator tree plus one optional binding tree per operator.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DckBundle {
    pub operator_tree: Option<RelationalTree>,
    /// Keyed by operator name as it appears in knowledge bases.
    pub binding_trees: BTreeMap<String, RelationalTree>,
}

#[derive(Debug, thiserror::Error)]
pub enum DckError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Tree {
        path: String,
        source: crate::learner::TreeError,
    },
    #[error("operator tree class '{0}' is not an operator of the domain")]
    UnknownOperator(String),
}

pub fn operator_tree_file(domain: &str) -> String {
    format!("{}-ops.tree", sanitize(domain))
}

pub fn binding_tree_file(domain: &str, op: &str) -> String {
    format!("{}-{}.tree", sanitize(domain), sanitize(op))
}

impl DckBundle {
    pub fn is_empty(&self) -> bool {
        self.operator_tree.is_none()
    }

    /// Loads `<domain>-ops.tree` and any `<domain>-<op>.tree` for the given
    /// operators. A missing operator tree yields an empty bundle.
    pub fn load_dir(dir: &Path, domain: &str, operators: &[String]) -> Result<Self, DckError> {
        let read = |name: String| -> Result<Option<RelationalTree>, DckError> {
            let path = dir.join(&name);
            match std::fs::read_to_string(&path) {
                Ok(text) => RelationalTree::parse(&text).map(Some).map_err(|source| DckError::Tree {
                    path: path.display().to_string(),
                    source,
                }),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
                Err(source) => Err(DckError::Io {
                    path: path.display().to_string(),
                    source,
                }),
            }
        };
        let mut bundle = DckBundle {
            operator_tree: read(operator_tree_file(domain))?,
            binding_trees: BTreeMap::new(),
        };
        for op in operators {
            if let Some(t) = read(binding_tree_file(domain, op))? {
                bundle.binding_trees.insert(sanitize(op), t);
            }
        }
        if let Some(t) = &bundle.operator_tree {
            let known: Vec<String> = operators.iter().map(|o| sanitize(o)).collect();
            for leaf in t.leaves() {
                for (c, _) in &leaf.counts {
                    if !known.contains(c) {
                        return Err(DckError::UnknownOperator(c.clone()));
                    }
                }
            }
        }
        Ok(bundle)
    }

    pub fn save_dir(&self, dir: &Path, domain: &str) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        if let Some(t) = &self.operator_tree {
            std::fs::write(dir.join(operator_tree_file(domain)), t.to_string())?;
        }
        for (op, t) in &self.binding_trees {
            std::fs::write(dir.join(binding_tree_file(domain, op)), t.to_string())?;
        }
        Ok(())
    }
}

/// Actions in decreasing priority.
pub type PrioritizedActions = Vec<(ActionId, Priority)>;

/// Per-action breakdown of a priority.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionScore {
    pub action: ActionId,
    pub helpful: bool,
    pub operator_count: u64,
    pub selected: u64,
    pub rejected: u64,
    pub has_binding_tree: bool,
    /// Covered examples of the binding leaf.
    pub binding_support: u64,
    pub priority: Option<Priority>,
}

/// Trees compiled against one task, ready to order actions in its states.
pub struct Policy<'t> {
    task: &'t GroundTask,
    empty: bool,
    operator_tree: Option<CompiledTree>,
    binding_trees: Vec<Option<CompiledTree>>,
    /// Per action: sanitized operator name.
    op_class: Vec<String>,
    op_index: Vec<usize>,
    helpful_pred: Vec<Sym>,
    action_args: Vec<Box<[Sym]>>,
    /// Per fact: `target_goal_*` predicate and arguments.
    goal_tuple: BTreeMap<FactId, (Sym, Box<[Sym]>)>,
    statics: FactSet,
    id_sym: Sym,
    prob_sym: Sym,
}

impl<'t> Policy<'t> {
    pub fn new(task: &'t GroundTask, dck: &DckBundle) -> Self {
        let mut vocab = Vocab::default();
        let id_sym = vocab.intern("e");
        let prob_sym = vocab.intern("p");
        let operator_tree = dck.operator_tree.as_ref().map(|t| t.compile(&mut vocab));
        let ops: Vec<String> = task.operator_names.iter().map(|o| sanitize(o)).collect();
        let binding_trees = ops
            .iter()
            .map(|o| dck.binding_trees.get(o).map(|t| t.compile(&mut vocab)))
            .collect();
        let mut helpful_pred = Vec::new();
        let mut action_args = Vec::new();
        let mut op_class = Vec::new();
        let mut op_index = Vec::new();
        for a in &task.actions {
            helpful_pred.push(vocab.intern(&format!("helpful_{}", sanitize(&a.schema))));
            action_args.push(a.args.iter().map(|x| vocab.intern(x)).collect());
            op_class.push(sanitize(&a.schema));
            op_index.push(a.schema_index);
        }
        let mut goal_tuple = BTreeMap::new();
        for &g in &task.goals {
            let atom = task.facts.atom(g);
            let p = vocab.intern(&format!("target_goal_{}", sanitize(&atom.predicate)));
            let mut args = vec![id_sym, prob_sym];
            args.extend(atom.args.iter().map(|x| vocab.intern(x)));
            goal_tuple.insert(g, (p, args.into_boxed_slice()));
        }
        let mut statics = FactSet::new();
        for &f in &task.static_facts {
            let atom = task.facts.atom(f);
            let p = vocab.intern(&format!("static_fact_{}", sanitize(&atom.predicate)));
            let mut args = vec![prob_sym];
            args.extend(atom.args.iter().map(|x| vocab.intern(x)));
            statics.add(p, args.into_boxed_slice());
        }
        Self {
            task,
            empty: dck.is_empty(),
            operator_tree,
            binding_trees,
            op_class,
            op_index,
            helpful_pred,
            action_args,
            goal_tuple,
            statics,
            id_sym,
            prob_sym,
        }
    }

    pub fn task(&self) -> &'t GroundTask {
        self.task
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    fn facts(&self, ctx: &HelpfulContext) -> FactSet {
        let mut fs = self.statics.clone();
        for &a in &ctx.helpful {
            let mut args = vec![self.id_sym, self.prob_sym];
            args.extend_from_slice(&self.action_args[a as usize]);
            fs.add(self.helpful_pred[a as usize], args.into_boxed_slice());
        }
        for g in &ctx.target {
            if let Some((p, args)) = self.goal_tuple.get(g) {
                fs.add(*p, args.clone());
            }
        }
        fs
    }

    fn operator_leaf(&self, facts: &FactSet) -> Option<&Leaf> {
        self.operator_tree
            .as_ref()
            .map(|t| t.classify(facts, &[self.id_sym, self.prob_sym]))
    }

    fn binding_leaf(&self, facts: &FactSet, a: ActionId) -> Option<&Leaf> {
        let t = self.binding_trees[self.op_index[a as usize]].as_ref()?;
        let mut bound = vec![self.id_sym, self.prob_sym];
        bound.extend_from_slice(&self.action_args[a as usize]);
        Some(t.classify(facts, &bound))
    }

    fn score(&self, facts: &FactSet, leaf: &Leaf, a: ActionId, helpful: bool) -> ActionScore {
        let operator_count = leaf.count(&self.op_class[a as usize]);
        let mut s = ActionScore {
            action: a,
            helpful,
            operator_count,
            selected: 0,
            rejected: 0,
            has_binding_tree: false,
            binding_support: 0,
            priority: None,
        };
        if let Some(bl) = self.binding_leaf(facts, a) {
            s.has_binding_tree = true;
            s.selected = bl.count(SELECTED);
            s.rejected = bl.count(REJECTED);
            s.binding_support = bl.total();
        }
        s
    }

    /// Orders `applicable` as the filter-and-sort step of the policy:
    /// helpful actions with a positive operator count, then non-helpful
    /// actions whose operator count beats every kept helpful priority. Each
    /// kept action's priority is its operator count plus its selection
    /// ratio. Ties go to helpful actions, then lower ids.
    pub fn dt_filter_sort(&self, applicable: &[ActionId], ctx: &HelpfulContext) -> PrioritizedActions {
        self.scores(applicable, ctx)
            .1
            .into_iter()
            .filter_map(|s| s.priority.map(|p| (s.action, p)))
            .collect()
    }

    /// Operator leaf and the per-action scores, kept actions first in final
    /// order followed by dropped ones in input order.
    pub fn scores(&self, applicable: &[ActionId], ctx: &HelpfulContext) -> (Option<Leaf>, Vec<ActionScore>) {
        let is_helpful = |a: ActionId| ctx.helpful.contains(&a);
        let (ha, non_ha): (Vec<ActionId>, Vec<ActionId>) = applicable.iter().partition(|&&a| is_helpful(a));
        let mut ha = ha;
        ha.sort_unstable();
        if self.empty {
            let scores = ha
                .iter()
                .map(|&a| ActionScore {
                    action: a,
                    helpful: true,
                    operator_count: 0,
                    selected: 0,
                    rejected: 0,
                    has_binding_tree: false,
                    binding_support: 0,
                    priority: Some(Priority::from_integer(1)),
                })
                .chain(non_ha.iter().map(|&a| ActionScore {
                    action: a,
                    helpful: false,
                    operator_count: 0,
                    selected: 0,
                    rejected: 0,
                    has_binding_tree: false,
                    binding_support: 0,
                    priority: None,
                }))
                .collect();
            return (None, scores);
        }
        let facts = self.facts(ctx);
        let leaf = self.operator_leaf(&facts).expect("non-empty bundle has an operator tree");
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        let mut max_ha = Priority::from_integer(0);
        for &a in &ha {
            let mut s = self.score(&facts, leaf, a, true);
            if s.operator_count > 0 {
                let p = Priority::from_integer(s.operator_count as i64) + selection_ratio(s.selected, s.rejected);
                if p > max_ha {
                    max_ha = p;
                }
                s.priority = Some(p);
                kept.push(s);
            } else {
                dropped.push(s);
            }
        }
        for &a in &non_ha {
            let mut s = self.score(&facts, leaf, a, false);
            if Priority::from_integer(s.operator_count as i64) > max_ha {
                s.priority = Some(Priority::from_integer(s.operator_count as i64) + selection_ratio(s.selected, s.rejected));
                kept.push(s);
            } else {
                dropped.push(s);
            }
        }
        kept.sort_by(|x, y| {
            y.priority
                .cmp(&x.priority)
                .then(y.helpful.cmp(&x.helpful))
                .then(x.action.cmp(&y.action))
        });
        kept.extend(dropped);
        (Some(leaf.clone()), kept)
    }

    /// Human-readable account of the ordering in state `s`.
    pub fn explain(&self, s: &State, helpful: &[ActionId]) -> Explanation {
        let ctx = build_helpful_context(self.task, s, helpful);
        let applicable = self.task.applicable_actions(s);
        let (leaf, scores) = self.scores(&applicable, &ctx);
        let facts = crate::training::encode_context(self.task, s, helpful, "e", "p")
            .into_iter()
            .chain(crate::training::encode_statics(self.task, "p"))
            .map(|f| f.to_string())
            .collect();
        Explanation {
            context: facts,
            operator_leaf: leaf,
            scores: scores
                .into_iter()
                .map(|sc| (self.task.action(sc.action).to_string(), sc))
                .collect(),
        }
    }
}

/// Leaves covering fewer examples than this are flagged by `explain`.
pub const LOW_COVERAGE: u64 = 5;

#[derive(Clone, Debug)]
pub struct Explanation {
    pub context: Vec<String>,
    pub operator_leaf: Option<Leaf>,
    pub scores: Vec<(String, ActionScore)>,
}

impl fmt::Display for Explanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "context:")?;
        for c in &self.context {
            writeln!(f, "  {c}")?;
        }
        match &self.operator_leaf {
            Some(l) => writeln!(f, "operator leaf: {l}")?,
            None => writeln!(f, "operator leaf: none (empty policy, helpful actions in order)")?,
        }
        writeln!(f, "actions:")?;
        for (name, s) in &self.scores {
            let kind = if s.helpful { "helpful" } else { "non-helpful" };
            match &s.priority {
                Some(p) => {
                    write!(
                        f,
                        "  {name} [{kind}] priority={p} = {} + {}/{}",
                        s.operator_count,
                        s.selected,
                        s.selected + s.rejected
                    )?;
                    if !s.has_binding_tree {
                        write!(f, " (no binding tree)")?;
                    } else if s.binding_support < LOW_COVERAGE {
                        write!(f, " (low-coverage binding leaf: {} examples)", s.binding_support)?;
                    }
                    writeln!(f)?;
                }
                None => writeln!(f, "  {name} [{kind}] filtered (operator count {})", s.operator_count)?,
            }
        }
        Ok(())
    }
}
