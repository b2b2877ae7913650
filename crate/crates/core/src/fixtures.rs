//! Bundled domains, small problems and a seeded Blocksworld generator.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::learner::RelationalTree;
use crate::policy::DckBundle;

pub const BLOCKSWORLD_DOMAIN: &str = include_str!("../fixtures/blocksworld-domain.pddl");
pub const SATELLITE_DOMAIN: &str = include_str!("../fixtures/satellite-domain.pddl");
/// One satellite, one instrument, three pending images.
pub const SATELLITE_TR01: &str = include_str!("../fixtures/satellite-tr01.pddl");
/// Two instruments on one satellite; only one of them can serve every goal.
pub const SATELLITE_TR07: &str = include_str!("../fixtures/satellite-tr07.pddl");
/// `switch_on` and `turn_to` commute before calibration.
pub const SATELLITE_SWITCH_OR_TURN: &str = include_str!("../fixtures/satellite-switch-or-turn.pddl");
/// Three interchangeable `turn_to` moves towards pending images.
pub const SATELLITE_THREE_TURNS: &str = include_str!("../fixtures/satellite-three-turns.pddl");
/// Operator tree for Satellite in the serialized tree format.
pub const SATELLITE_OPERATOR_TREE: &str = include_str!("../fixtures/satellite-ops.tree");
/// Binding tree for Satellite `switch_on`.
pub const SATELLITE_SWITCH_ON_TREE: &str = include_str!("../fixtures/satellite-switch_on.tree");

/// Blocksworld operator tree that stacks when a stack is helpful and picks up otherwise.
pub const BLOCKSWORLD_PERFECT_OPERATOR_TREE: &str = include_str!("../fixtures/bw-perfect-ops.tree");
/// Picks up a block whose goal destination has no pending `on` goal of its own.
pub const BLOCKSWORLD_PERFECT_PICK_UP_TREE: &str = include_str!("../fixtures/bw-perfect-pick_up.tree");
/// Stacks only onto the goal destination.
pub const BLOCKSWORLD_PERFECT_STACK_TREE: &str = include_str!("../fixtures/bw-perfect-stack.tree");

/// Hand-written trees that solve tower-building Blocksworld problems from an
/// all-on-table start without backtracking.
pub fn blocksworld_perfect_dck() -> DckBundle {
    let parse = |t: &str| RelationalTree::parse(t).expect("bundled tree parses");
    let mut b = DckBundle {
        operator_tree: Some(parse(BLOCKSWORLD_PERFECT_OPERATOR_TREE)),
        ..DckBundle::default()
    };
    b.binding_trees.insert("pick_up".into(), parse(BLOCKSWORLD_PERFECT_PICK_UP_TREE));
    b.binding_trees.insert("stack".into(), parse(BLOCKSWORLD_PERFECT_STACK_TREE));
    b
}

/// Environment variable that seeds problem generation.
pub const SEED_ENV: &str = "ROLLER_SEED";

/// Base seed from `ROLLER_SEED`, or `default` when unset or unparsable.
pub fn env_seed(default: u64) -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(default)
}

/// Random stacks over `blocks`: each block either starts a new tower or goes
/// on top of a uniformly chosen existing one.
fn random_towers(blocks: &[String], rng: &mut impl Rng) -> Vec<Vec<String>> {
    let mut order = blocks.to_vec();
    order.shuffle(rng);
    let mut towers: Vec<Vec<String>> = Vec::new();
    for b in order {
        let k = towers.len();
        let pick = rng.gen_range(0..=k);
        if pick == k {
            towers.push(vec![b]);
        } else {
            towers[pick].push(b);
        }
    }
    towers
}

/// PDDL text for a random `n`-block problem. Goals are the `on` facts of a
/// random goal configuration; never empty for `n >= 2` unless the goal
/// configuration happens to be all single blocks, which is rejected and redrawn.
pub fn blocksworld_problem(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks: Vec<String> = (1..=n).map(|i| format!("b{i}")).collect();
    let init = random_towers(&blocks, &mut rng);
    let goal = loop {
        let g = random_towers(&blocks, &mut rng);
        if n < 2 || g.iter().any(|t| t.len() > 1) {
            break g;
        }
    };
    let mut out = format!("(define (problem bw-{n}-{seed})\n  (:domain blocksworld)\n  (:objects");
    for b in &blocks {
        out.push(' ');
        out.push_str(b);
    }
    out.push_str(" - block)\n  (:init\n    (handempty)\n");
    for t in &init {
        out.push_str(&format!("    (ontable {})\n", t[0]));
        for w in t.windows(2) {
            out.push_str(&format!("    (on {} {})\n", w[1], w[0]));
        }
        out.push_str(&format!("    (clear {})\n", t[t.len() - 1]));
    }
    out.push_str("  )\n  (:goal (and\n");
    for t in &goal {
        for w in t.windows(2) {
            out.push_str(&format!("    (on {} {})\n", w[1], w[0]));
        }
    }
    out.push_str("  ))\n)\n");
    out
}
