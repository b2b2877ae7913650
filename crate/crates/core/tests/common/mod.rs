#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use rustc_hash::FxHashSet;

use roller::fixtures;
use roller::grounding::{ground_task, ActionId, GroundTask, State};
use roller::learner::{generate_candidate_queries, Leaf, Node, QArg, RelationalTree, TypedVar};
use roller::pddl::{parse_domain, parse_problem, DomainModel};
use roller::policy::DckBundle;
use roller::training::{emit_language_bias, sanitize, BiasTarget, LanguageBias, REJECTED, SELECTED};

pub fn bw_domain() -> DomainModel {
    parse_domain(fixtures::BLOCKSWORLD_DOMAIN).unwrap()
}

pub fn satellite_domain() -> DomainModel {
    parse_domain(fixtures::SATELLITE_DOMAIN).unwrap()
}

pub fn task(domain: &DomainModel, problem: &str) -> GroundTask {
    ground_task(domain, &parse_problem(problem, domain).unwrap())
}

pub fn bw(n: usize, seed: u64) -> GroundTask {
    task(&bw_domain(), &fixtures::blocksworld_problem(n, seed))
}

/// One satellite with one or two instruments, up to two modes, three or four
/// directions and one or two image goals. Always solvable.
pub fn satellite_problem(rng: &mut impl Rng) -> String {
    let ninst = rng.gen_range(1..=2);
    let nmode = rng.gen_range(1..=2);
    let ndir = rng.gen_range(3..=4);
    let dirs: Vec<String> = (0..ndir).map(|i| format!("d{i}")).collect();
    let mut init = vec!["(power_avail sat)".to_string()];
    init.push(format!("(pointing sat {})", dirs.choose(rng).unwrap()));
    for i in 0..ninst {
        init.push(format!("(on_board i{i} sat)"));
        init.push(format!("(calibration_target i{i} {})", dirs.choose(rng).unwrap()));
    }
    for m in 0..nmode {
        // every mode is supported by at least one instrument
        init.push(format!("(supports i{} m{m})", rng.gen_range(0..ninst)));
    }
    let ngoal = rng.gen_range(1..=2);
    let mut goals = Vec::new();
    while goals.len() < ngoal {
        let g = format!("(have_image {} m{})", dirs.choose(rng).unwrap(), rng.gen_range(0..nmode));
        if !goals.contains(&g) {
            goals.push(g);
        }
    }
    init.sort();
    init.dedup();
    format!(
        "(define (problem sat) (:domain satellite)
  (:objects sat - satellite {} - instrument {} - mode {} - direction)
  (:init {})
  (:goal (and {})))",
        (0..ninst).map(|i| format!("i{i}")).collect::<Vec<_>>().join(" "),
        (0..nmode).map(|m| format!("m{m}")).collect::<Vec<_>>().join(" "),
        dirs.join(" "),
        init.join(" "),
        goals.join(" ")
    )
}

pub fn satellite(rng: &mut impl Rng) -> GroundTask {
    task(&satellite_domain(), &satellite_problem(rng))
}

/// Positions `p0..p<n>` on a line: `walk` moves one step, `hop` two.
pub const LINE_DOMAIN: &str = "(define (domain line)
  (:requirements :strips :typing)
  (:types pos)
  (:predicates (at ?p - pos) (next ?a ?b - pos) (skip ?a ?b - pos))
  (:action walk :parameters (?a ?b - pos)
    :precondition (and (at ?a) (next ?a ?b))
    :effect (and (at ?b) (not (at ?a))))
  (:action hop :parameters (?a ?b - pos)
    :precondition (and (at ?a) (skip ?a ?b))
    :effect (and (at ?b) (not (at ?a)))))";

/// Operator tree that always prefers `walk`.
pub const LINE_WALK_TREE: &str = "selected(-A, -B, -C)\n[walk] 11.0 [[walk:10.0, hop:1.0]]\n";

pub fn line_problem(n: usize) -> String {
    let ps: Vec<String> = (0..=n).map(|i| format!("p{i}")).collect();
    let mut init = vec!["(at p0)".to_string()];
    for i in 0..n {
        init.push(format!("(next p{} p{})", i, i + 1));
        if i + 2 <= n {
            init.push(format!("(skip p{} p{})", i, i + 2));
        }
    }
    format!(
        "(define (problem line{n}) (:domain line) (:objects {} - pos) (:init {}) (:goal (at p{n})))",
        ps.join(" "),
        init.join(" ")
    )
}

pub fn line_task(n: usize) -> GroundTask {
    let d = parse_domain(LINE_DOMAIN).unwrap();
    task(&d, &line_problem(n))
}

pub fn line_walk_dck() -> DckBundle {
    DckBundle {
        operator_tree: Some(RelationalTree::parse(LINE_WALK_TREE).unwrap()),
        ..DckBundle::default()
    }
}

/// Shortest plan length by breadth-first search over states.
pub fn optimal_length(task: &GroundTask) -> Option<usize> {
    let mut seen = FxHashSet::default();
    let mut q = VecDeque::from([(task.init.clone(), 0usize)]);
    seen.insert(task.init.clone());
    while let Some((s, d)) = q.pop_front() {
        if task.is_goal(&s) {
            return Some(d);
        }
        for a in task.applicable_actions(&s) {
            let c = task.apply(&s, a);
            if seen.insert(c.clone()) {
                q.push_back((c, d + 1));
            }
        }
    }
    None
}

/// Number of reachable states, or `None` beyond `limit`.
pub fn reachable_states(task: &GroundTask, limit: usize) -> Option<usize> {
    let mut seen = FxHashSet::default();
    let mut stack = vec![task.init.clone()];
    seen.insert(task.init.clone());
    while let Some(s) = stack.pop() {
        for a in task.applicable_actions(&s) {
            let c = task.apply(&s, a);
            if seen.insert(c.clone()) {
                if seen.len() > limit {
                    return None;
                }
                stack.push(c);
            }
        }
    }
    Some(seen.len())
}

/// State after up to `steps` random applicable actions.
pub fn random_walk(task: &GroundTask, rng: &mut impl Rng, steps: usize) -> State {
    let mut s = task.init.clone();
    for _ in 0..steps {
        let app = task.applicable_actions(&s);
        let Some(&a) = app.choose(rng) else { break };
        s = task.apply(&s, a);
    }
    s
}

pub fn plan_names(task: &GroundTask, plan: &[ActionId]) -> Vec<String> {
    plan.iter().map(|&a| task.action(a).to_string()).collect()
}

/// A random well-scoped tree over the bias: queries drawn from the candidate
/// generator, leaves with random class counts.
pub fn random_tree(bias: &LanguageBias, rng: &mut impl Rng, max_depth: usize) -> RelationalTree {
    let arity = bias.target.args.len();
    let mut scope: Vec<TypedVar> = bias.target.args[2..arity - 1]
        .iter()
        .enumerate()
        .map(|(i, a)| TypedVar {
            var: i as u32 + 2,
            ty: a.ty.clone(),
        })
        .collect();
    let mut next_var = arity as u32;
    let root = random_node(bias, rng, max_depth, &mut scope, &mut next_var);
    RelationalTree {
        target: bias.target.predicate.clone(),
        target_arity: arity,
        root,
    }
}

fn random_node(bias: &LanguageBias, rng: &mut impl Rng, depth: usize, scope: &mut Vec<TypedVar>, next_var: &mut u32) -> Node {
    let candidates = generate_candidate_queries(bias, scope, *next_var);
    if depth == 0 || candidates.is_empty() || rng.gen_bool(0.25) {
        let counts: Vec<u64> = bias
            .classes
            .iter()
            .map(|_| if rng.gen_bool(0.5) { rng.gen_range(0..20) } else { 0 })
            .collect();
        return Node::Leaf(Leaf::from_counts(&bias.classes, &counts));
    }
    let query = candidates.choose(rng).unwrap().clone();
    let mode = bias.mode(&query.predicate).unwrap();
    let mark = scope.len();
    for (a, m) in query.args.iter().zip(&mode.args) {
        if let QArg::Fresh(v) = a {
            scope.push(TypedVar { var: *v, ty: m.ty.clone() });
            *next_var += 1;
        }
    }
    let yes = random_node(bias, rng, depth - 1, scope, next_var);
    scope.truncate(mark);
    let no = random_node(bias, rng, depth - 1, scope, next_var);
    Node::Test {
        query,
        yes: Box::new(yes),
        no: Box::new(no),
    }
}

/// Random operator tree plus random binding trees for a random subset of
/// operators; sometimes empty.
pub fn random_bundle(domain: &DomainModel, rng: &mut impl Rng) -> DckBundle {
    if rng.gen_bool(0.1) {
        return DckBundle::default();
    }
    let ops = emit_language_bias(domain, BiasTarget::Operators, None);
    let mut b = DckBundle {
        operator_tree: Some(random_tree(&ops, rng, 3)),
        binding_trees: BTreeMap::new(),
    };
    for o in &domain.operators {
        if rng.gen_bool(0.6) {
            let bias = emit_language_bias(domain, BiasTarget::Bindings(&o.name), None);
            debug_assert_eq!(bias.classes, [SELECTED, REJECTED]);
            b.binding_trees.insert(sanitize(&o.name), random_tree(&bias, rng, 3));
        }
    }
    b
}
