//! Best-first branch and bound that collects every best-cost plan. Repeated
//! states are not pruned, so commutative orderings stay separate tree paths.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use rustc_hash::FxHashSet;

use crate::grounding::{ActionId, GroundTask, State};
use crate::relaxed::Evaluator;

pub const NO_PARENT: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct TreeNode {
    pub parent: u32,
    pub action: ActionId,
    pub g: u32,
    pub h: u32,
    pub state: State,
    pub on_solution: bool,
    /// Children tagged `on_solution`.
    pub solution_children: u32,
}

#[derive(Clone, Copy, Debug)]
pub struct BnbConfig {
    pub time_bound: Duration,
    /// Search-tree size limit; reaching it counts as not exhausted.
    pub max_nodes: usize,
}

impl Default for BnbConfig {
    fn default() -> Self {
        Self {
            time_bound: Duration::from_secs(60),
            max_nodes: 4_000_000,
        }
    }
}

impl BnbConfig {
    pub fn with_time_bound(secs: f64) -> Self {
        Self {
            time_bound: Duration::from_secs_f64(secs),
            ..Self::default()
        }
    }
}

/// All best-cost plans with the tagged search tree they came from.
#[derive(Clone, Debug)]
pub struct SolutionSet {
    /// `None` when no plan was found.
    pub best_cost: Option<u32>,
    /// Each plan as the node path `[root, n_1, ..., n_k]`.
    pub plan_nodes: Vec<Vec<u32>>,
    pub nodes: Vec<TreeNode>,
    on_solution_edges: FxHashSet<(u32, ActionId)>,
    pub exhausted: bool,
    pub expanded: u64,
}

impl SolutionSet {
    pub fn plans(&self) -> Vec<Vec<ActionId>> {
        self.plan_nodes.iter().map(|p| self.actions_of(p)).collect()
    }

    pub fn actions_of(&self, path: &[u32]) -> Vec<ActionId> {
        path[1..].iter().map(|&n| self.nodes[n as usize].action).collect()
    }

    pub fn node(&self, id: u32) -> &TreeNode {
        &self.nodes[id as usize]
    }

    /// Whether the child of `node` via `a` lies on a best-cost plan.
    pub fn edge_on_solution(&self, node: u32, a: ActionId) -> bool {
        self.on_solution_edges.contains(&(node, a))
    }

    /// Number of tree nodes generated.
    pub fn tree_size(&self) -> usize {
        self.nodes.len()
    }
}

pub fn bfs_bnb_solve_all(task: &GroundTask, cfg: &BnbConfig) -> SolutionSet {
    let start = Instant::now();
    let mut ev = Evaluator::new(task);
    let mut nodes: Vec<TreeNode> = Vec::new();
    let mut set = SolutionSet {
        best_cost: None,
        plan_nodes: Vec::new(),
        nodes: Vec::new(),
        on_solution_edges: FxHashSet::default(),
        exhausted: false,
        expanded: 0,
    };
    let root_h = ev.evaluate(&task.init).h;
    let Some(h0) = root_h else {
        set.exhausted = true;
        return set;
    };
    nodes.push(TreeNode {
        parent: NO_PARENT,
        action: 0,
        g: 0,
        h: h0,
        state: task.init.clone(),
        on_solution: false,
        solution_children: 0,
    });
    // min-heap on (f, h, insertion order)
    let mut open: BinaryHeap<Reverse<(u32, u32, u32)>> = BinaryHeap::new();
    open.push(Reverse((h0, h0, 0)));
    let mut best = u32::MAX;
    let mut goals: Vec<u32> = Vec::new();
    let mut applicable = Vec::new();
    let mut exhausted = true;
    let mut pops = 0u64;
    while let Some(Reverse((f, _, id))) = open.pop() {
        if f > best {
            break;
        }
        pops += 1;
        if pops % 256 == 0 && start.elapsed() > cfg.time_bound {
            exhausted = false;
            break;
        }
        let (g, state) = {
            let n = &nodes[id as usize];
            (n.g, n.state.clone())
        };
        if task.is_goal(&state) {
            if g < best {
                best = g;
                goals.clear();
            }
            goals.push(id);
            continue;
        }
        set.expanded += 1;
        task.applicable_into(&state, &mut applicable);
        for &a in &applicable {
            let child = task.apply(&state, a);
            let Some(h) = ev.evaluate(&child).h else {
                continue;
            };
            let cg = g + 1;
            if cg + h > best {
                continue;
            }
            if nodes.len() >= cfg.max_nodes {
                exhausted = false;
                break;
            }
            let cid = nodes.len() as u32;
            nodes.push(TreeNode {
                parent: id,
                action: a,
                g: cg,
                h,
                state: child,
                on_solution: false,
                solution_children: 0,
            });
            open.push(Reverse((cg + h, h, cid)));
        }
        if !exhausted {
            break;
        }
    }
    set.exhausted = exhausted;
    if goals.is_empty() {
        set.nodes = nodes;
        return set;
    }
    set.best_cost = Some(best);
    for &goal in &goals {
        let mut path = Vec::new();
        let mut cur = goal;
        loop {
            path.push(cur);
            let n = &nodes[cur as usize];
            if n.parent == NO_PARENT {
                break;
            }
            cur = n.parent;
        }
        path.reverse();
        for &n in &path {
            if !nodes[n as usize].on_solution {
                nodes[n as usize].on_solution = true;
                let p = nodes[n as usize].parent;
                if p != NO_PARENT {
                    nodes[p as usize].solution_children += 1;
                    set.on_solution_edges.insert((p, nodes[n as usize].action));
                }
            }
        }
        set.plan_nodes.push(path);
    }
    set.nodes = nodes;
    set
}
