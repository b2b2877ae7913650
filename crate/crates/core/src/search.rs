//! Policy-guided depth-first search, lookahead best-first search and their
//! anytime variants.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rustc_hash::FxHashMap;

use crate::grounding::{ActionId, GroundTask, State};
use crate::policy::{build_helpful_context, DckBundle, Policy, Priority};
use crate::relaxed::{Evaluation, Evaluator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    DfPolicy,
    LookaheadBfs,
    LookaheadBfsHa,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DckSource {
    Trees,
    FfOrder,
    None,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::DfPolicy, Algorithm::LookaheadBfs, Algorithm::LookaheadBfsHa];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::DfPolicy => "df-policy",
            Algorithm::LookaheadBfs => "lookahead-bfs",
            Algorithm::LookaheadBfsHa => "lookahead-bfs-ha",
        }
    }
}

impl DckSource {
    pub const ALL: [DckSource; 3] = [DckSource::Trees, DckSource::FfOrder, DckSource::None];

    pub fn name(self) -> &'static str {
        match self {
            DckSource::Trees => "trees",
            DckSource::FfOrder => "ff-order",
            DckSource::None => "none",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for DckSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm '{s}'"))
    }
}

impl FromStr for DckSource {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown dck source '{s}'"))
    }
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    pub dck_source: DckSource,
    pub horizon: u32,
    /// `ω` in `f = ω·h + g`.
    pub weight: Priority,
    pub time_bound: Option<Duration>,
    pub anytime: bool,
    /// Record the state of every expanded node.
    pub trace: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::DfPolicy,
            dck_source: DckSource::Trees,
            horizon: 100,
            weight: Priority::from_integer(1),
            time_bound: Some(Duration::from_secs(60)),
            anytime: false,
            trace: false,
        }
    }
}

impl SearchConfig {
    pub fn new(algorithm: Algorithm, dck_source: DckSource) -> Self {
        Self {
            algorithm,
            dck_source,
            ..Self::default()
        }
    }

    /// Configuration id such as `df-policy/trees`.
    pub fn id(&self) -> String {
        format!("{}/{}", self.algorithm, self.dck_source)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub evaluated: u64,
    pub expanded: u64,
    /// Nodes added to open by lookahead.
    pub lookahead: u64,
    pub popped: u64,
    pub time: Duration,
    pub timed_out: bool,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub plan: Option<Vec<ActionId>>,
    pub stats: SearchStats,
    /// Expanded states in order, when tracing.
    pub trace: Vec<State>,
}

impl SearchResult {
    pub fn solved(&self) -> bool {
        self.plan.is_some()
    }

    pub fn length(&self) -> Option<usize> {
        self.plan.as_ref().map(Vec::len)
    }

    /// `evaluated=<n> expanded=<n> lookahead=<n> length=<n> time=<s>`; the
    /// length is `-` without a plan.
    pub fn stats_line(&self) -> String {
        let length = self.length().map_or_else(|| "-".to_string(), |l| l.to_string());
        format!(
            "evaluated={} expanded={} lookahead={} length={} time={:.3}",
            self.stats.evaluated,
            self.stats.expanded,
            self.stats.lookahead,
            length,
            self.stats.time.as_secs_f64()
        )
    }
}

const NO_PARENT: u32 = u32::MAX;

struct Node {
    state: State,
    parent: u32,
    action: ActionId,
    g: u32,
}

#[derive(Default)]
struct Entry {
    g: u32,
    eval: Option<Evaluation>,
}

enum Orderer<'t> {
    Trees(Policy<'t>),
    Ff,
    None,
}

struct Search<'t> {
    task: &'t GroundTask,
    cfg: &'t SearchConfig,
    ev: Evaluator<'t>,
    orderer: Orderer<'t>,
    nodes: Vec<Node>,
    /// Best g and cached evaluation per state.
    table: FxHashMap<State, Entry>,
    stats: SearchStats,
    start: Instant,
    bound: Option<u32>,
    results: Vec<SearchResult>,
    trace: Vec<State>,
    applicable: Vec<ActionId>,
}

impl<'t> Search<'t> {
    fn new(task: &'t GroundTask, dck: &DckBundle, cfg: &'t SearchConfig) -> Self {
        let orderer = match cfg.dck_source {
            DckSource::Trees => Orderer::Trees(Policy::new(task, dck)),
            DckSource::FfOrder => Orderer::Ff,
            DckSource::None => Orderer::None,
        };
        Self {
            task,
            cfg,
            ev: Evaluator::new(task),
            orderer,
            nodes: Vec::new(),
            table: FxHashMap::default(),
            stats: SearchStats::default(),
            start: Instant::now(),
            bound: None,
            results: Vec::new(),
            trace: Vec::new(),
            applicable: Vec::new(),
        }
    }

    fn timed_out(&mut self) -> bool {
        if let Some(tb) = self.cfg.time_bound {
            if self.start.elapsed() > tb {
                self.stats.timed_out = true;
                return true;
            }
        }
        false
    }

    fn evaluate(&mut self, s: &State) -> Evaluation {
        if let Some(e) = self.table.get(s).and_then(|e| e.eval.as_ref()) {
            return e.clone();
        }
        let e = self.ev.evaluate(s);
        self.table.entry(s.clone()).or_insert_with(|| Entry { g: u32::MAX, eval: None }).eval = Some(e.clone());
        e
    }

    fn stored_g(&self, s: &State) -> u32 {
        self.table.get(s).map_or(u32::MAX, |e| e.g)
    }

    fn push_node(&mut self, state: State, parent: u32, action: ActionId, g: u32) -> u32 {
        self.table.entry(state.clone()).or_default().g = g;
        self.nodes.push(Node { state, parent, action, g });
        (self.nodes.len() - 1) as u32
    }

    fn path(&self, mut id: u32) -> Vec<ActionId> {
        let mut plan = Vec::new();
        while self.nodes[id as usize].parent != NO_PARENT {
            plan.push(self.nodes[id as usize].action);
            id = self.nodes[id as usize].parent;
        }
        plan.reverse();
        plan
    }

    fn snapshot(&mut self, plan: Option<Vec<ActionId>>) -> SearchResult {
        self.stats.evaluated = self.ev.evaluations();
        self.stats.time = self.start.elapsed();
        SearchResult {
            plan,
            stats: self.stats.clone(),
            trace: if self.cfg.trace { self.trace.clone() } else { Vec::new() },
        }
    }

    /// Records a plan ending at `id`. Returns whether to stop.
    fn solution(&mut self, id: u32) -> bool {
        let plan = self.path(id);
        debug_assert!(self.task.validate_plan(&plan));
        self.bound = Some(plan.len() as u32);
        let r = self.snapshot(Some(plan));
        self.results.push(r);
        !self.cfg.anytime || self.bound == Some(0)
    }

    fn pruned_by_bound(&self, g: u32) -> bool {
        self.bound.is_some_and(|l| g >= l)
    }

    /// AA': the ordered subset of `applicable` taken first in state `id`.
    fn order(&mut self, id: u32, eval: &Evaluation, applicable: &[ActionId]) -> Vec<(ActionId, Priority)> {
        match &self.orderer {
            Orderer::Trees(p) => {
                let ctx = build_helpful_context(self.task, &self.nodes[id as usize].state, &eval.helpful);
                p.dt_filter_sort(applicable, &ctx)
            }
            Orderer::None => applicable
                .iter()
                .filter(|a| eval.helpful.contains(a))
                .map(|&a| (a, Priority::from_integer(1)))
                .collect(),
            Orderer::Ff => {
                let state = self.nodes[id as usize].state.clone();
                let mut scored = Vec::new();
                for &a in applicable {
                    if !eval.helpful.contains(&a) {
                        continue;
                    }
                    let child = self.task.apply(&state, a);
                    if let Some(h) = self.evaluate(&child).h {
                        scored.push((h, a));
                    }
                }
                scored.sort_unstable();
                scored
                    .into_iter()
                    .map(|(h, a)| (a, Priority::new(1, h as i64 + 1)))
                    .collect()
            }
        }
    }

    fn run_df(&mut self) {
        let root = self.push_node(self.task.init.clone(), NO_PARENT, 0, 0);
        let mut open: Vec<u32> = vec![root];
        let mut delayed: Vec<(u32, ActionId)> = Vec::new();
        let mut batch = Vec::new();
        loop {
            let id = match open.pop() {
                Some(id) => id,
                None => {
                    let mut moved = None;
                    while let Some((p, a)) = delayed.pop() {
                        if let Some(c) = self.insert_df(p, a) {
                            moved = Some(c);
                            break;
                        }
                    }
                    match moved {
                        Some(c) => c,
                        None => return,
                    }
                }
            };
            if self.timed_out() {
                return;
            }
            self.stats.popped += 1;
            let (g, state) = {
                let n = &self.nodes[id as usize];
                (n.g, n.state.clone())
            };
            if self.stored_g(&state) < g || self.pruned_by_bound(g) {
                continue;
            }
            let eval = self.evaluate(&state);
            let Some(h) = eval.h else { continue };
            if h == 0 {
                if self.solution(id) {
                    return;
                }
                continue;
            }
            self.stats.expanded += 1;
            if self.cfg.trace {
                self.trace.push(state.clone());
            }
            let mut applicable = std::mem::take(&mut self.applicable);
            self.task.applicable_into(&state, &mut applicable);
            let ordered = self.order(id, &eval, &applicable);
            batch.clear();
            for &(a, _) in &ordered {
                if let Some(c) = self.insert_df(id, a) {
                    batch.push(c);
                }
            }
            open.extend(batch.iter().rev());
            for &a in applicable.iter().rev() {
                if !ordered.iter().any(|&(b, _)| b == a) {
                    delayed.push((id, a));
                }
            }
            self.applicable = applicable;
        }
    }

    /// Child of `parent` via `a` when new or reached with a strictly lower g.
    fn insert_df(&mut self, parent: u32, a: ActionId) -> Option<u32> {
        let g = self.nodes[parent as usize].g + 1;
        if self.pruned_by_bound(g) {
            return None;
        }
        let child = self.task.apply(&self.nodes[parent as usize].state, a);
        if self.stored_g(&child) <= g {
            return None;
        }
        Some(self.push_node(child, parent, a, g))
    }

    fn f(&self, g: u32, h: u32) -> Priority {
        self.cfg.weight * Priority::from_integer(h as i64) + Priority::from_integer(g as i64)
    }

    /// `add-to-open`: evaluates (or reuses a stored evaluation) and inserts by
    /// `f`. Rejects duplicates whose stored g is not higher, dead-ends and,
    /// once a plan of length L is known, nodes with `g >= L` or `f >= L`.
    fn add_to_open(&mut self, open: &mut Open, parent: u32, a: ActionId) -> Option<u32> {
        let g = self.nodes[parent as usize].g + 1;
        if self.pruned_by_bound(g) {
            return None;
        }
        let child = self.task.apply(&self.nodes[parent as usize].state, a);
        if self.stored_g(&child) <= g {
            return None;
        }
        let h = self.evaluate(&child).h?;
        let f = self.f(g, h);
        if let Some(l) = self.bound {
            if f >= Priority::from_integer(l as i64) {
                return None;
            }
        }
        let id = self.push_node(child, parent, a, g);
        open.push(f, h, id);
        Some(id)
    }

    /// Repeatedly applies the first action of the ordering that yields an
    /// accepted successor, up to `horizon` steps. Returns the last node.
    fn add_lookahead_successors(&mut self, open: &mut Open, mut n: u32, mut horizon: u32) -> u32 {
        loop {
            if horizon == 0 {
                return n;
            }
            let state = self.nodes[n as usize].state.clone();
            let eval = self.evaluate(&state);
            let applicable = self.task.applicable_actions(&state);
            let ordered = self.order(n, &eval, &applicable);
            let mut added = None;
            for (a, _) in ordered {
                if let Some(c) = self.add_to_open(open, n, a) {
                    added = Some(c);
                    break;
                }
            }
            let Some(c) = added else { return n };
            self.stats.lookahead += 1;
            if self.task.is_goal(&self.nodes[c as usize].state) {
                return c;
            }
            n = c;
            horizon -= 1;
        }
    }

    fn run_bfs(&mut self, ha: bool) {
        let mut open = Open::default();
        let mut secondary: VecDeque<(u32, ActionId)> = VecDeque::new();
        let init = self.task.init.clone();
        let Some(h0) = self.evaluate(&init).h else { return };
        let root = self.push_node(init, NO_PARENT, 0, 0);
        open.push(self.f(0, h0), h0, root);
        let lookahead = !matches!(self.orderer, Orderer::None) && self.cfg.horizon > 0;
        loop {
            let id = match open.pop() {
                Some(id) => id,
                None => {
                    let mut moved = None;
                    while let Some((p, a)) = secondary.pop_front() {
                        if let Some(c) = self.add_to_open(&mut open, p, a) {
                            moved = Some(c);
                            break;
                        }
                    }
                    if moved.is_none() {
                        return;
                    }
                    open.pop().expect("node was just added")
                }
            };
            if self.timed_out() {
                return;
            }
            self.stats.popped += 1;
            let (g, state) = {
                let n = &self.nodes[id as usize];
                (n.g, n.state.clone())
            };
            if self.stored_g(&state) < g || self.pruned_by_bound(g) {
                continue;
            }
            if self.task.is_goal(&state) {
                if self.solution(id) {
                    return;
                }
                continue;
            }
            self.stats.expanded += 1;
            if self.cfg.trace {
                self.trace.push(state.clone());
            }
            if lookahead {
                self.add_lookahead_successors(&mut open, id, self.cfg.horizon);
            }
            let helpful = if ha { self.evaluate(&state).helpful } else { Vec::new() };
            let mut applicable = std::mem::take(&mut self.applicable);
            self.task.applicable_into(&state, &mut applicable);
            for &a in &applicable {
                if ha && !helpful.contains(&a) {
                    secondary.push_back((id, a));
                } else {
                    self.add_to_open(&mut open, id, a);
                }
            }
            self.applicable = applicable;
        }
    }

    fn run(mut self) -> Vec<SearchResult> {
        match self.cfg.algorithm {
            Algorithm::DfPolicy => self.run_df(),
            Algorithm::LookaheadBfs => self.run_bfs(false),
            Algorithm::LookaheadBfsHa => self.run_bfs(true),
        }
        let last = self.snapshot(None);
        let mut results = std::mem::take(&mut self.results);
        match results.last_mut() {
            // final stats cover the whole run, including post-solution work
            Some(r) if self.cfg.anytime => {
                r.stats.time = last.stats.time;
                r.stats.timed_out = last.stats.timed_out;
            }
            Some(_) => {}
            None => results.push(last),
        }
        results
    }
}

/// Min-queue on `(f, h, insertion order)`.
#[derive(Default)]
struct Open {
    heap: BinaryHeap<Reverse<(Priority, u32, u64, u32)>>,
    seq: u64,
}

impl Open {
    fn push(&mut self, f: Priority, h: u32, id: u32) {
        self.heap.push(Reverse((f, h, self.seq, id)));
        self.seq += 1;
    }

    fn pop(&mut self) -> Option<u32> {
        self.heap.pop().map(|Reverse((_, _, _, id))| id)
    }
}

/// Runs the configured search. With `cfg.anytime` the search continues after
/// each plan and the last (shortest) plan is returned.
pub fn search(task: &GroundTask, dck: &DckBundle, cfg: &SearchConfig) -> SearchResult {
    Search::new(task, dck, cfg).run().pop().expect("at least one result")
}

/// Every strictly improving plan found until the open lists empty or the
/// time bound expires. Empty when no plan is found.
pub fn anytime(task: &GroundTask, dck: &DckBundle, cfg: &SearchConfig) -> Vec<SearchResult> {
    let cfg = SearchConfig {
        anytime: true,
        ..cfg.clone()
    };
    Search::new(task, dck, &cfg)
        .run()
        .into_iter()
        .filter(SearchResult::solved)
        .collect()
}

pub fn df_hcontext_policy(task: &GroundTask, dck: &DckBundle, cfg: &SearchConfig) -> SearchResult {
    search(
        task,
        dck,
        &SearchConfig {
            algorithm: Algorithm::DfPolicy,
            ..cfg.clone()
        },
    )
}

/// Lookahead BFS; `cfg.algorithm` chooses between the plain and HA variants.
pub fn hcontext_lookahead_bfs(task: &GroundTask, dck: &DckBundle, cfg: &SearchConfig) -> SearchResult {
    let algorithm = match cfg.algorithm {
        Algorithm::DfPolicy => Algorithm::LookaheadBfs,
        a => a,
    };
    search(task, dck, &SearchConfig { algorithm, ..cfg.clone() })
}
