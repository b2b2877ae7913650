//! Relaxed planning graph, FF relaxed-plan extraction and helpful actions.
//!
//! Extraction follows FF: goals are placed at the first layer where they
//! appear and processed from the top layer down. A goal is skipped when an
//! action already selected at the layer above (or this one) added it. Each
//! open goal gets an achiever from the layer just below its first appearance,
//! lowest action id first; the achiever's preconditions become goals at their
//! own first layers unless already marked true one layer below. Selected
//! actions mark their add effects true at the goal's layer and the layer below.
//! Goals within a layer are processed in ascending fact id.

use crate::grounding::{ActionId, FactId, GroundTask, State};

pub const UNREACHED: u32 = u32::MAX;

/// Layered reachability under the delete relaxation. Layers are stored as the
/// first layer index of every fact and action; `F_i = {f | layer(f) <= i}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelaxedPlanningGraph {
    pub fact_layer: Vec<u32>,
    pub action_layer: Vec<u32>,
    /// Index of the last fact layer built.
    pub depth: u32,
    pub goals_reachable: bool,
}

impl RelaxedPlanningGraph {
    pub fn first_layer_of(&self, f: FactId) -> Option<u32> {
        let l = self.fact_layer[f as usize];
        (l != UNREACHED).then_some(l)
    }

    /// `F_i`, ascending.
    pub fn facts_at(&self, i: u32) -> Vec<FactId> {
        (0..self.fact_layer.len() as FactId)
            .filter(|&f| self.fact_layer[f as usize] <= i)
            .collect()
    }

    /// `A_i`, ascending.
    pub fn actions_at(&self, i: u32) -> Vec<ActionId> {
        (0..self.action_layer.len() as ActionId)
            .filter(|&a| self.action_layer[a as usize] <= i)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelaxedResult {
    /// `None` when the goals are unreachable under the relaxation.
    pub h: Option<u32>,
    /// Selected actions, ascending.
    pub relaxed_plan: Vec<ActionId>,
    /// Helpful actions, ascending.
    pub helpful: Vec<ActionId>,
    /// `goal_sets[i]` is `G_i`, ascending; index 0 is always empty.
    pub goal_sets: Vec<Vec<FactId>>,
}

impl RelaxedResult {
    fn infinite() -> Self {
        Self {
            h: None,
            relaxed_plan: Vec::new(),
            helpful: Vec::new(),
            goal_sets: Vec::new(),
        }
    }
}

/// Heuristic value and helpful actions of a state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evaluation {
    pub h: Option<u32>,
    pub helpful: Vec<ActionId>,
}

impl Evaluation {
    pub fn is_dead_end(&self) -> bool {
        self.h.is_none()
    }
}

/// Reusable scratch buffers for repeated evaluations over one task.
pub struct Evaluator<'t> {
    task: &'t GroundTask,
    fact_layer: Vec<u32>,
    action_layer: Vec<u32>,
    counter: Vec<u32>,
    frontier: Vec<FactId>,
    next_frontier: Vec<FactId>,
    layer_actions: Vec<ActionId>,
    depth: u32,
    reachable: bool,
    // extraction scratch
    goal_layer_of: Vec<u32>,
    marked: Vec<u32>,
    selected: Vec<bool>,
    evaluations: u64,
}

impl<'t> Evaluator<'t> {
    pub fn new(task: &'t GroundTask) -> Self {
        let nf = task.num_facts();
        let na = task.actions.len();
        Self {
            task,
            fact_layer: vec![UNREACHED; nf],
            action_layer: vec![UNREACHED; na],
            counter: vec![0; na],
            frontier: Vec::new(),
            next_frontier: Vec::new(),
            layer_actions: Vec::new(),
            depth: 0,
            reachable: false,
            goal_layer_of: vec![UNREACHED; nf],
            marked: vec![UNREACHED; nf],
            selected: vec![false; na],
            evaluations: 0,
        }
    }

    pub fn task(&self) -> &'t GroundTask {
        self.task
    }

    /// Number of calls to [`Evaluator::evaluate`] so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    fn build(&mut self, s: &State) {
        let task = self.task;
        self.fact_layer.fill(UNREACHED);
        self.action_layer.fill(UNREACHED);
        self.frontier.clear();
        for &f in &task.static_facts {
            self.fact_layer[f as usize] = 0;
        }
        for f in s.iter() {
            self.fact_layer[f as usize] = 0;
            self.frontier.push(f);
        }
        self.layer_actions.clear();
        for a in &task.actions {
            self.counter[a.id as usize] = a.pre.len() as u32;
            if a.pre.is_empty() {
                self.layer_actions.push(a.id);
            }
        }
        self.reachable = !task.has_unsatisfiable_static_goal();
        let mut i = 0u32;
        loop {
            if !self.reachable {
                break;
            }
            if task
                .dynamic_goals()
                .iter()
                .all(|&g| self.fact_layer[g as usize] <= i)
            {
                self.depth = i;
                return;
            }
            for k in 0..self.frontier.len() {
                let f = self.frontier[k];
                for &a in task.actions_requiring(f) {
                    let c = &mut self.counter[a as usize];
                    *c -= 1;
                    if *c == 0 {
                        self.layer_actions.push(a);
                    }
                }
            }
            self.next_frontier.clear();
            for k in 0..self.layer_actions.len() {
                let a = self.layer_actions[k];
                self.action_layer[a as usize] = i;
                for &f in &task.action(a).add {
                    if self.fact_layer[f as usize] == UNREACHED {
                        self.fact_layer[f as usize] = i + 1;
                        self.next_frontier.push(f);
                    }
                }
            }
            self.layer_actions.clear();
            if self.next_frontier.is_empty() {
                self.reachable = false;
                self.depth = i;
                break;
            }
            std::mem::swap(&mut self.frontier, &mut self.next_frontier);
            i += 1;
        }
    }

    /// Builds the relaxed planning graph for `s`.
    pub fn build_rpg(&mut self, s: &State) -> RelaxedPlanningGraph {
        self.build(s);
        RelaxedPlanningGraph {
            fact_layer: self.fact_layer.clone(),
            action_layer: self.action_layer.clone(),
            depth: self.depth,
            goals_reachable: self.reachable,
        }
    }

    fn extract(&mut self, want_goal_sets: bool) -> RelaxedResult {
        if !self.reachable {
            return RelaxedResult::infinite();
        }
        let task = self.task;
        let t = self.depth as usize;
        if t == 0 {
            return RelaxedResult {
                h: Some(0),
                relaxed_plan: Vec::new(),
                helpful: Vec::new(),
                goal_sets: vec![Vec::new()],
            };
        }
        let mut goal_sets: Vec<Vec<FactId>> = vec![Vec::new(); t + 1];
        let mut touched_goals = Vec::new();
        for &g in task.dynamic_goals() {
            let l = self.fact_layer[g as usize];
            if l > 0 && self.goal_layer_of[g as usize] == UNREACHED {
                self.goal_layer_of[g as usize] = l;
                goal_sets[l as usize].push(g);
                touched_goals.push(g);
            }
        }
        let mut plan = Vec::new();
        let mut touched_marks = Vec::new();
        for i in (1..=t).rev() {
            let li = i as u32;
            goal_sets[i].sort_unstable();
            let mut k = 0;
            while k < goal_sets[i].len() {
                let g = goal_sets[i][k];
                k += 1;
                let m = self.marked[g as usize];
                if m == li || m == li + 1 {
                    continue;
                }
                let achiever = task
                    .achievers(g)
                    .iter()
                    .copied()
                    .find(|&a| self.action_layer[a as usize] == li - 1)
                    .expect("a fact at layer i has an achiever at layer i-1");
                if !self.selected[achiever as usize] {
                    self.selected[achiever as usize] = true;
                    plan.push(achiever);
                }
                let act = task.action(achiever);
                for &p in &act.pre {
                    let pl = self.fact_layer[p as usize];
                    if pl == 0 || self.goal_layer_of[p as usize] != UNREACHED || self.marked[p as usize] == li {
                        continue;
                    }
                    self.goal_layer_of[p as usize] = pl;
                    goal_sets[pl as usize].push(p);
                    touched_goals.push(p);
                }
                for &f in &act.add {
                    if self.marked[f as usize] == UNREACHED {
                        touched_marks.push(f);
                    }
                    self.marked[f as usize] = li;
                }
            }
        }
        // helpful(s) = {a in A_0 | add(a) ∩ G_1 ≠ ∅}
        let mut helpful = Vec::new();
        for &g in &goal_sets[1] {
            for &a in task.achievers(g) {
                if self.action_layer[a as usize] == 0 && !self.selected_helpful(a, &helpful) {
                    helpful.push(a);
                }
            }
        }
        helpful.sort_unstable();
        helpful.dedup();

        for &a in &plan {
            self.selected[a as usize] = false;
        }
        for g in touched_goals {
            self.goal_layer_of[g as usize] = UNREACHED;
        }
        for f in touched_marks {
            self.marked[f as usize] = UNREACHED;
        }
        plan.sort_unstable();
        RelaxedResult {
            h: Some(plan.len() as u32),
            relaxed_plan: plan,
            helpful,
            goal_sets: if want_goal_sets { goal_sets } else { Vec::new() },
        }
    }

    fn selected_helpful(&self, a: ActionId, helpful: &[ActionId]) -> bool {
        helpful.last() == Some(&a)
    }

    /// Full relaxed-plan result including the per-layer goal sets.
    pub fn relaxed_result(&mut self, s: &State) -> RelaxedResult {
        self.build(s);
        self.extract(true)
    }

    /// `(h, helpful)` for `s` in one pass.
    pub fn evaluate(&mut self, s: &State) -> Evaluation {
        self.evaluations += 1;
        self.build(s);
        let r = self.extract(false);
        Evaluation {
            h: r.h,
            helpful: r.helpful,
        }
    }
}

/// Relaxed planning graph of `s`.
pub fn build_rpg(task: &GroundTask, s: &State) -> RelaxedPlanningGraph {
    Evaluator::new(task).build_rpg(s)
}

/// Relaxed plan, heuristic and helpful actions extracted from a graph built
/// by [`build_rpg`] for the task's goals.
pub fn extract_relaxed_plan(task: &GroundTask, rpg: &RelaxedPlanningGraph) -> RelaxedResult {
    let mut ev = Evaluator::new(task);
    ev.fact_layer.clone_from(&rpg.fact_layer);
    ev.action_layer.clone_from(&rpg.action_layer);
    ev.depth = rpg.depth;
    ev.reachable = rpg.goals_reachable;
    ev.extract(true)
}

/// `{a ∈ A_0 | add(a) ∩ G_1 ≠ ∅}` from an extraction result and its graph.
pub fn helpful_actions(task: &GroundTask, result: &RelaxedResult, rpg: &RelaxedPlanningGraph) -> Vec<ActionId> {
    if result.h.is_none_or(|h| h == 0) {
        return Vec::new();
    }
    let g1 = &result.goal_sets[1];
    task.actions
        .iter()
        .filter(|a| rpg.action_layer[a.id as usize] == 0 && a.add.iter().any(|f| g1.contains(f)))
        .map(|a| a.id)
        .collect()
}
