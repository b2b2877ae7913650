//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::{FxHashMap, FxHashSet};

use common::*;
use roller::bench::{quality_score, time_score, RunRecord, ScoreReport};
use roller::fixtures;
use roller::grounding::{ActionId, FactId, GroundTask, State};
use roller::learner::{induce_tree, learn_bundle, training_accuracy, FactSet, LearnConfig, RelationalTree, Vocab};
use roller::policy::{selection_ratio, DckBundle, Priority};
use roller::relaxed::Evaluator;
use roller::search::{anytime, search, Algorithm, DckSource, SearchConfig};
use roller::training::{
    bfs_bnb_solve_all, rank_solutions, train, BnbConfig, Example, Fact, KnowledgeBase, LanguageBias, TargetAtom,
};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- 1

fn facts(vocab: &mut Vocab, atoms: &[(&str, &[&str])]) -> FactSet {
    let fs: Vec<Fact> = atoms
        .iter()
        .map(|(p, a)| Fact::new(*p, a.iter().map(|s| s.to_string()).collect()))
        .collect();
    FactSet::from_facts(vocab, &fs)
}

fn fixture_trees() -> Outcome {
    let ops = RelationalTree::parse(fixtures::SATELLITE_OPERATOR_TREE).map_err(|e| e.to_string())?;
    let sw = RelationalTree::parse(fixtures::SATELLITE_SWITCH_ON_TREE).map_err(|e| e.to_string())?;
    let mut v = Vocab::default();
    let bound = [v.intern("e1"), v.intern("tr01")];
    let goal: (&str, &[&str]) = ("target_goal_have_image", &["e1", "tr01", "phenomenon2", "spectrograph1"]);

    let cal = facts(
        &mut v,
        &[("helpful_calibrate", &["e1", "tr01", "satellite0", "instrument0", "groundstation1"]), goal],
    );
    let leaf = ops.classify(&mut v, &cal, &bound);
    check(leaf.majority == "calibrate" && leaf.count("calibrate") == 44, || format!("calibrate context gave {leaf}"))?;

    let none = facts(&mut v, &[goal]);
    let leaf = ops.classify(&mut v, &none, &bound);
    check(leaf.majority == "turn_to" && leaf.count("turn_to") == 149, || format!("no-match context gave {leaf}"))?;

    let ctx = facts(&mut v, &[("helpful_switch_on", &["e1", "tr01", "instrument0", "satellite0"]), goal]);
    let b = [bound[0], bound[1], v.intern("instrument0"), v.intern("satellite0")];
    let leaf = sw.classify(&mut v, &ctx, &b);
    check(leaf.count("selected") == 213 && leaf.count("rejected") == 36, || {
        format!("helpful switch_on binding gave {leaf}")
    })?;
    let r = selection_ratio(213, 36);
    check(r == Priority::new(213, 249), || format!("ratio {r}"))?;
    Ok("calibrate:44, turn_to:149, selected:213/rejected:36, ratio 213/249".into())
}

// ---------------------------------------------------------------- 2

/// Relaxed planning graph by saturation and backward extraction, written with
/// plain sets: `(h, relaxed plan, helpful)`.
fn naive_ff(task: &GroundTask, s: &State) -> (Option<u32>, Vec<ActionId>, Vec<ActionId>) {
    let na = task.actions.len();
    let mut fl: FxHashMap<FactId, u32> = FxHashMap::default();
    for f in s.iter().chain(task.static_facts.iter().copied()) {
        fl.insert(f, 0);
    }
    let mut al: Vec<Option<u32>> = vec![None; na];
    let mut t = 0u32;
    while !task.goals.iter().all(|g| fl.contains_key(g)) {
        for a in &task.actions {
            if al[a.id as usize].is_none() && a.pre.iter().all(|p| fl.get(p).is_some_and(|&l| l <= t)) {
                al[a.id as usize] = Some(t);
            }
        }
        let mut new = BTreeSet::new();
        for a in &task.actions {
            if al[a.id as usize] == Some(t) {
                new.extend(a.add.iter().copied().filter(|f| !fl.contains_key(f)));
            }
        }
        if new.is_empty() {
            return (None, vec![], vec![]);
        }
        for f in new {
            fl.insert(f, t + 1);
        }
        t += 1;
    }
    if t == 0 {
        return (Some(0), vec![], vec![]);
    }
    let mut goal_sets: Vec<BTreeSet<FactId>> = vec![BTreeSet::new(); t as usize + 1];
    let mut is_goal: FxHashSet<FactId> = FxHashSet::default();
    for &g in &task.goals {
        let l = fl[&g];
        if l > 0 && is_goal.insert(g) {
            goal_sets[l as usize].insert(g);
        }
    }
    let mut marks: FxHashMap<FactId, u32> = FxHashMap::default();
    let mut plan = BTreeSet::new();
    for i in (1..=t).rev() {
        let layer: Vec<FactId> = goal_sets[i as usize].iter().copied().collect();
        for g in layer {
            if marks.get(&g).is_some_and(|&m| m == i || m == i + 1) {
                continue;
            }
            let a = (0..na)
                .find(|&a| al[a] == Some(i - 1) && task.actions[a].add.contains(&g))
                .unwrap();
            plan.insert(a as ActionId);
            for &p in &task.actions[a].pre {
                let pl = fl[&p];
                if pl == 0 || is_goal.contains(&p) || marks.get(&p) == Some(&i) {
                    continue;
                }
                is_goal.insert(p);
                goal_sets[pl as usize].insert(p);
            }
            for &f in &task.actions[a].add {
                marks.insert(f, i);
            }
        }
    }
    let helpful = (0..na)
        .filter(|&a| al[a] == Some(0) && task.actions[a].add.iter().any(|f| goal_sets[1].contains(f)))
        .map(|a| a as ActionId)
        .collect();
    (Some(plan.len() as u32), plan.into_iter().collect(), helpful)
}

fn heuristic_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(fixtures::env_seed(2));
    let mut compared = 0;
    let mut dead = 0;
    let mut goals = 0;
    while compared < 200 {
        let n = rng.gen_range(3..=5);
        let t = bw(n, rng.gen());
        let mut ev = Evaluator::new(&t);
        for _ in 0..10 {
            let steps = rng.gen_range(0..25);
            let s = random_walk(&t, &mut rng, steps);
            let got = ev.relaxed_result(&s);
            let quick = ev.evaluate(&s);
            let want = naive_ff(&t, &s);
            check(got.h == want.0 && quick.h == want.0, || format!("h {:?} vs oracle {:?} in {s:?}", got.h, want.0))?;
            check(got.relaxed_plan == want.1, || format!("relaxed plan differs in {s:?}"))?;
            check(got.helpful == want.2 && quick.helpful == want.2, || format!("helpful differs in {s:?}"))?;
            dead += usize::from(want.0.is_none());
            goals += usize::from(want.0 == Some(0));
            compared += 1;
        }
    }
    Ok(format!("{compared} states equal fact-for-fact ({goals} goal states, {dead} dead ends)"))
}

// ---------------------------------------------------------------- 3

/// Every shortest plan by breadth-first enumeration of the search tree, or
/// `None` if more than `limit` nodes would be generated.
fn enumerate_best_plans(task: &GroundTask, limit: usize) -> Option<BTreeSet<Vec<ActionId>>> {
    let mut frontier: Vec<(State, Vec<ActionId>)> = vec![(task.init.clone(), vec![])];
    let mut generated = 1usize;
    loop {
        let found: BTreeSet<Vec<ActionId>> = frontier
            .iter()
            .filter(|(s, _)| task.is_goal(s))
            .map(|(_, p)| p.clone())
            .collect();
        if !found.is_empty() {
            return Some(found);
        }
        let mut next = Vec::new();
        for (s, p) in &frontier {
            for a in task.applicable_actions(s) {
                generated += 1;
                if generated > limit {
                    return None;
                }
                let mut q = p.clone();
                q.push(a);
                next.push((task.apply(s, a), q));
            }
        }
        if next.is_empty() {
            return None;
        }
        frontier = next;
    }
}

fn bnb_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(fixtures::env_seed(3));
    let (mut agreed, mut mismatched, mut too_big, mut tried) = (0, Vec::new(), 0, 0);
    let (mut bw_n, mut sat_n) = (0, 0);
    while agreed < 20 && tried < 400 {
        tried += 1;
        let is_bw = tried % 2 == 1;
        let t = if is_bw {
            bw(rng.gen_range(3..=4), rng.gen())
        } else {
            satellite(&mut rng)
        };
        let Some(oracle) = enumerate_best_plans(&t, 100_000) else {
            too_big += 1;
            continue;
        };
        let s = bfs_bnb_solve_all(&t, &BnbConfig::default());
        if !s.exhausted {
            return Err(format!("task {tried} not exhausted"));
        }
        let got: BTreeSet<Vec<ActionId>> = s.plans().into_iter().collect();
        if got == oracle {
            agreed += 1;
            if is_bw {
                bw_n += 1;
            } else {
                sat_n += 1;
            }
        } else {
            mismatched.push(format!("{} ({} vs {} plans)", t.name, got.len(), oracle.len()));
        }
    }
    for m in &mismatched {
        eprintln!("  bnb/oracle mismatch (logged): {m}");
    }
    check(agreed == 20, || format!("only {agreed} agreeing tasks in {tried} tries"))?;
    Ok(format!(
        "20 tasks ({bw_n} Blocksworld, {sat_n} Satellite) equal plan sets; {} heuristic-pruned mismatches logged, {too_big} over the enumeration limit",
        mismatched.len()
    ))
}

// ---------------------------------------------------------------- 4

fn q(n: usize, d: usize) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn weighted(phis: &[BigRational]) -> BigRational {
    let n = phis.len();
    phis.iter()
        .enumerate()
        .fold(BigRational::zero(), |acc, (i, p)| acc + q(n - i, n) * p)
}

fn ranking_oracle() -> Outcome {
    let t = task(&satellite_domain(), fixtures::SATELLITE_SWITCH_OR_TURN);
    let plans = enumerate_best_plans(&t, 1_000_000).ok_or("enumeration failed")?;
    let s = bfs_bnb_solve_all(&t, &BnbConfig::default());
    let got_plans = s.plans();
    check(got_plans.iter().cloned().collect::<BTreeSet<_>>() == plans, || "plan sets differ".into())?;
    let prefixes: BTreeSet<&[ActionId]> = plans.iter().flat_map(|p| (0..=p.len()).map(move |k| &p[..k])).collect();
    let children = |prefix: &[ActionId]| -> usize {
        let mut seen = BTreeSet::new();
        for p in &prefixes {
            if p.len() == prefix.len() + 1 && p.starts_with(prefix) {
                seen.insert(p[prefix.len()]);
            }
        }
        seen.len()
    };
    let supporters = |f: FactId| t.actions.iter().filter(|a| a.add.contains(&f)).count();
    let mut scored = Vec::new();
    for p in &plans {
        let c: Vec<BigRational> = (1..=p.len()).map(|i| q(children(&p[..i]), 1)).collect();
        let d: Vec<BigRational> = p
            .iter()
            .map(|&a| match t.action(a).add.iter().map(|&f| supporters(f)).min() {
                Some(m) if m > 0 => q(1, m),
                _ => BigRational::zero(),
            })
            .collect();
        scored.push((weighted(&c), weighted(&d), p.clone()));
    }
    let best_c = scored.iter().map(|x| x.0.clone()).max().unwrap();
    let best_d = scored.iter().filter(|x| x.0 == best_c).map(|x| x.1.clone()).max().unwrap();
    let want: BTreeSet<Vec<ActionId>> = scored
        .iter()
        .filter(|x| x.0 == best_c && x.1 == best_d)
        .map(|x| x.2.clone())
        .collect();
    let ranked = rank_solutions(&t, &s);
    let got: BTreeSet<Vec<ActionId>> = ranked.top.iter().map(|&i| got_plans[i].clone()).collect();
    check(got == want, || format!("top {got:?} vs oracle {want:?}"))?;
    check(got.iter().all(|p| t.action(p[0]).schema == "switch_on"), || "a top plan starts without switch_on".into())?;
    check(plans.iter().any(|p| t.action(p[0]).schema == "turn_to"), || "no turn_to-first plan to rank".into())?;
    Ok(format!("{} best-cost plans, top {} all switch_on-first, equal to oracle", plans.len(), got.len()))
}

// ---------------------------------------------------------------- 5

fn bias(classes: &[&str], preds: &[&str]) -> LanguageBias {
    let mut text = format!(
        "predict(selected(+IdExample,+IdProblem,-Class)).\ntype(selected(index,idprob,class)).\nclasses([{}]).\n",
        classes.join(",")
    );
    for p in preds {
        text.push_str(&format!("rmode({p}(+IdExample,+IdProblem,+O1)).\ntype({p}(index,idprob,obj)).\n"));
    }
    LanguageBias::parse(&text).unwrap()
}

fn example(k: usize, class: &str, atoms: Vec<(&str, usize)>) -> Example {
    let id = format!("d_e{k}");
    Example {
        id: id.clone(),
        problem: "d".into(),
        targets: vec![TargetAtom {
            args: vec![],
            class: class.into(),
        }],
        facts: atoms
            .into_iter()
            .map(|(p, o)| Fact::new(p, vec![id.clone(), "d".into(), format!("o{o}")]))
            .collect(),
    }
}

fn learner_datasets() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(fixtures::env_seed(5));
    let cfg = LearnConfig::default();
    let mut report = Vec::new();

    // class pos iff some p fact
    let mut kb = KnowledgeBase::new("selected");
    for k in 0..80 {
        let pos = rng.gen_bool(0.5);
        let mut atoms = vec![];
        if pos {
            atoms.push(("p", rng.gen_range(0..6)));
        }
        for _ in 0..rng.gen_range(0..3) {
            atoms.push(("q", rng.gen_range(0..6)));
        }
        kb.examples.push(example(k, if pos { "pos" } else { "neg" }, atoms));
    }
    let b = bias(&["pos", "neg"], &["q", "p"]);
    report.push(("single literal", kb, b, 1.0));

    // class pos iff p(X) and r(X) for one X
    let mut kb = KnowledgeBase::new("selected");
    for k in 0..120 {
        let x = rng.gen_range(0..6);
        let y = (x + rng.gen_range(1..6)) % 6;
        let (class, atoms) = match rng.gen_range(0..10) {
            0..=3 => ("pos", vec![("p", x), ("r", x)]),
            4..=6 => ("neg", vec![("p", x), ("r", y)]),
            _ => ("neg", if rng.gen_bool(0.5) { vec![("r", x)] } else { vec![] }),
        };
        kb.examples.push(example(k, class, atoms));
    }
    let b = bias(&["pos", "neg"], &["p", "r"]);
    report.push(("two-literal conjunction", kb, b, 0.95));

    // operator-style: a if helpful_a, else b if helpful_b, else c
    let mut kb = KnowledgeBase::new("selected");
    for k in 0..150 {
        let mut atoms = vec![];
        let ha = rng.gen_bool(0.35);
        let hb = rng.gen_bool(0.5);
        if ha {
            atoms.push(("helpful_a", rng.gen_range(0..6)));
        }
        if hb {
            atoms.push(("helpful_b", rng.gen_range(0..6)));
        }
        for _ in 0..rng.gen_range(0..3) {
            atoms.push(("target_goal_g", rng.gen_range(0..6)));
        }
        let class = if ha { "a" } else if hb { "b" } else { "c" };
        kb.examples.push(example(k, class, atoms));
    }
    let b = bias(&["a", "b", "c"], &["target_goal_g", "helpful_b", "helpful_a"]);
    report.push(("3-class operator-style", kb, b, 1.0));

    let mut lines = Vec::new();
    for (name, kb, b, need) in report {
        let tree = induce_tree(&kb, &b, &cfg).map_err(|e| e.to_string())?;
        let acc = training_accuracy(&tree, &kb, &b).map_err(|e| e.to_string())?;
        let total: u64 = tree.leaves().iter().map(|l| l.total()).sum();
        check(total as usize == kb.num_learning_examples(), || {
            format!("{name}: leaves cover {total} of {}", kb.num_learning_examples())
        })?;
        check(acc >= need, || format!("{name}: accuracy {acc:.3} below {need}"))?;
        lines.push(format!("{name} {:.1}%", acc * 100.0));
    }
    Ok(lines.join(", "))
}

// ---------------------------------------------------------------- 6

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn end_to_end() -> Outcome {
    let base = fixtures::env_seed(0);
    let d = bw_domain();
    let train_tasks: Vec<GroundTask> = (0..10)
        .map(|k| bw(if k < 5 { 5 } else { 6 }, base + 100 + k as u64))
        .collect();
    let out = train(&d, &train_tasks, &BnbConfig::with_time_bound(60.0));
    for r in &out.reports {
        check(r.exhausted && r.seconds < 60.0, || format!("training problem {} not exhausted", r.name))?;
    }
    let dck = learn_bundle(&out, &LearnConfig::default()).map_err(|e| e.to_string())?;
    check(!dck.is_empty(), || "no operator tree learned".into())?;

    let test: Vec<GroundTask> = (0..10).map(|k| bw(15, base + 1000 + k)).collect();
    let run = |src: DckSource| {
        let mut cfg = SearchConfig::new(Algorithm::DfPolicy, src);
        cfg.time_bound = Some(Duration::from_secs(60));
        test.iter()
            .map(|t| {
                let r = search(t, &dck, &cfg);
                if let Some(p) = &r.plan {
                    assert!(t.validate_plan(p), "invalid plan");
                }
                r
            })
            .collect::<Vec<_>>()
    };
    let roller = run(DckSource::Trees);
    let dfha = run(DckSource::None);
    let solved = roller.iter().filter(|r| r.solved()).count();
    let base_solved = dfha.iter().filter(|r| r.solved()).count();
    let ratio = median(
        roller
            .iter()
            .filter(|r| r.solved())
            .map(|r| r.stats.evaluated as f64 / r.length().unwrap().max(1) as f64)
            .collect(),
    );
    let med_evals = median(roller.iter().map(|r| r.stats.evaluated as f64).collect());
    let base_med_evals = median(dfha.iter().map(|r| r.stats.evaluated as f64).collect());
    let detail = format!(
        "trees solved {solved}/10, median evaluations/length {ratio:.2}, median evaluations {med_evals}; DF-HA solved {base_solved}/10, median evaluations {base_med_evals}"
    );
    check(solved >= 9, || detail.clone())?;
    check(ratio <= 3.0, || detail.clone())?;
    check(base_solved < solved || base_med_evals >= 10.0 * med_evals, || detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------- 7

fn completeness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(fixtures::env_seed(7));
    let (bwd, satd) = (bw_domain(), satellite_domain());
    let mut trials = 0;
    let mut with_trees = 0;
    while trials < 500 {
        let is_bw = rng.gen_bool(0.5);
        let (t, dom) = if is_bw {
            (bw(rng.gen_range(2..=5), rng.gen()), &bwd)
        } else {
            (satellite(&mut rng), &satd)
        };
        if reachable_states(&t, 10_000).is_none() || optimal_length(&t).is_none() {
            continue;
        }
        let dck = random_bundle(dom, &mut rng);
        with_trees += usize::from(!dck.is_empty());
        let mut cfg = SearchConfig::new(Algorithm::DfPolicy, DckSource::Trees);
        cfg.time_bound = None;
        let r = search(&t, &dck, &cfg);
        let Some(p) = r.plan else {
            return Err(format!("trial {trials}: no plan for {}", t.name));
        };
        check(t.validate_plan(&p), || format!("trial {trials}: invalid plan"))?;
        trials += 1;
    }
    Ok(format!("{trials} trials valid ({with_trees} with random trees)"))
}

// ---------------------------------------------------------------- 8

/// Weighted best-first search with `f = h + g`, ties by h then insertion,
/// duplicates accepted only with strictly lower g, dead ends dropped, goal
/// test on removal. Returns the expanded states in order.
fn reference_bfs(task: &GroundTask) -> Vec<State> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let mut ev = Evaluator::new(task);
    let mut hs: FxHashMap<State, Option<u32>> = FxHashMap::default();
    let mut best_g: FxHashMap<State, u32> = FxHashMap::default();
    let mut nodes: Vec<(State, u32)> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut expanded = Vec::new();
    let h0 = ev.evaluate(&task.init).h;
    hs.insert(task.init.clone(), h0);
    let Some(h0) = h0 else { return expanded };
    best_g.insert(task.init.clone(), 0);
    nodes.push((task.init.clone(), 0));
    heap.push(Reverse((h0, h0, seq, 0usize)));
    while let Some(Reverse((_, _, _, id))) = heap.pop() {
        let (s, g) = nodes[id].clone();
        if best_g[&s] < g {
            continue;
        }
        if task.is_goal(&s) {
            break;
        }
        expanded.push(s.clone());
        for a in task.applicable_actions(&s) {
            let c = task.apply(&s, a);
            if best_g.get(&c).is_some_and(|&bg| bg <= g + 1) {
                continue;
            }
            let h = *hs.entry(c.clone()).or_insert_with(|| ev.evaluate(&c).h);
            let Some(h) = h else { continue };
            best_g.insert(c.clone(), g + 1);
            nodes.push((c, g + 1));
            seq += 1;
            heap.push(Reverse((g + 1 + h, h, seq, nodes.len() - 1)));
        }
    }
    expanded
}

fn degeneracy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(fixtures::env_seed(8));
    let mut expansions = 0;
    for k in 0..20 {
        let t = if k % 4 == 3 {
            satellite(&mut rng)
        } else {
            bw(rng.gen_range(4..=6), rng.gen())
        };
        let mut cfg = SearchConfig::new(Algorithm::LookaheadBfs, DckSource::None);
        cfg.horizon = 0;
        cfg.trace = true;
        cfg.time_bound = None;
        let r = search(&t, &DckBundle::default(), &cfg);
        let want = reference_bfs(&t);
        check(r.trace == want, || {
            format!("task {k}: {} vs {} expansions", r.trace.len(), want.len())
        })?;
        expansions += want.len();
    }
    let mut streams = Vec::new();
    for n in 3..=12 {
        let t = line_task(n);
        let opt = optimal_length(&t).unwrap();
        for alg in Algorithm::ALL {
            let mut cfg = SearchConfig::new(alg, DckSource::Trees);
            cfg.time_bound = Some(Duration::from_secs(10));
            let rs = anytime(&t, &line_walk_dck(), &cfg);
            let lens: Vec<usize> = rs.iter().map(|r| r.length().unwrap()).collect();
            for r in &rs {
                check(t.validate_plan(r.plan.as_ref().unwrap()), || "invalid anytime plan".into())?;
            }
            check(lens.windows(2).all(|w| w[1] < w[0]), || format!("line {n} {alg}: lengths {lens:?}"))?;
            check(lens.last() == Some(&opt), || format!("line {n} {alg}: lengths {lens:?}, optimum {opt}"))?;
            if alg == Algorithm::DfPolicy {
                streams.push(format!("{lens:?}"));
            }
        }
    }
    Ok(format!(
        "20 tasks, {expansions} expansions identical; 10 anytime streams end at the optimum, df-policy streams {}",
        streams.join(" ")
    ))
}

// ---------------------------------------------------------------- 9

fn scoring() -> Outcome {
    let rec = |c: &str, p: &str, time: Option<f64>, len: u64| RunRecord {
        config: c.into(),
        problem: p.into(),
        solved: time.is_some(),
        time: time.unwrap_or(0.0),
        length: time.map(|_| len),
        evaluations: 0,
    };
    let records = vec![
        rec("A", "p1", Some(2.0), 10),
        rec("B", "p1", Some(4.0), 20),
        rec("C", "p1", Some(8.0), 10),
        rec("A", "p2", Some(10.0), 12),
        rec("B", "p2", None, 0),
        rec("C", "p2", Some(5.0), 8),
        rec("A", "p3", Some(3.0), 7),
        rec("B", "p3", Some(3.0), 7),
        rec("C", "p3", None, 0),
        rec("A", "p4", None, 0),
        rec("B", "p4", Some(6.0), 9),
        rec("C", "p4", Some(2.0), 12),
    ];
    // worked by hand:
    // time    A = 1 + 1/2 + 1 = 5/2,  B = 1/2 + 1 + 1/3 = 11/6,  C = 1/4 + 1 + 1 = 9/4
    // quality A = 1 + 2/3 + 1 = 8/3,  B = 1/2 + 1 + 1 = 5/2,     C = 1 + 1 + 3/4 = 11/4
    let want_t: BTreeMap<String, BigRational> =
        [("A", q(5, 2)), ("B", q(11, 6)), ("C", q(9, 4))].into_iter().map(|(c, v)| (c.to_string(), v)).collect();
    let want_q: BTreeMap<String, BigRational> =
        [("A", q(8, 3)), ("B", q(5, 2)), ("C", q(11, 4))].into_iter().map(|(c, v)| (c.to_string(), v)).collect();
    check(time_score(&records) == want_t, || format!("time scores {:?}", time_score(&records)))?;
    check(quality_score(&records) == want_q, || format!("quality scores {:?}", quality_score(&records)))?;
    let r = ScoreReport::from_records(&records);
    check(r.common_problems == ["p1"], || format!("common {:?}", r.common_problems))?;
    for (c, t, l, n) in [("A", 2.0, 10.0, 3), ("B", 4.0, 20.0, 3), ("C", 8.0, 10.0, 3)] {
        let s = r.get(c).unwrap();
        check(s.avg_time == Some(t) && s.avg_length == Some(l) && s.solved == n, || format!("{c}: {s:?}"))?;
    }
    Ok("time 5/2, 11/6, 9/4; quality 8/3, 5/2, 11/4; averages over p1".into())
}

// ----------------------------------------------------------------

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 9] = [
        ("fixture-tree replay", Duration::from_secs(1), fixture_trees),
        ("heuristic oracle", Duration::from_secs(30), heuristic_oracle),
        ("branch-and-bound oracle", Duration::from_secs(120), bnb_oracle),
        ("solution ranking", Duration::from_secs(5), ranking_oracle),
        ("learner datasets", Duration::from_secs(30), learner_datasets),
        ("end-to-end Blocksworld", Duration::from_secs(900), end_to_end),
        ("df-policy completeness", Duration::from_secs(120), completeness),
        ("degeneracy equivalences", Duration::from_secs(120), degeneracy),
        ("scoring", Duration::from_secs(1), scoring),
    ];
    let only: Option<usize> = std::env::var("ROLLER_CRITERION").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let t0 = Instant::now();
        let res = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let dt = t0.elapsed();
        let res = match res {
            Ok(d) if dt > limit => Err(format!("{d}; took {:.1}s, limit {}s", dt.as_secs_f64(), limit.as_secs())),
            r => r,
        };
        match res {
            Ok(d) => println!("PASS [{n}] {name} ({:.2}s): {d}", dt.as_secs_f64()),
            Err(d) => {
                failed += 1;
                println!("FAIL [{n}] {name} ({:.2}s): {d}", dt.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
