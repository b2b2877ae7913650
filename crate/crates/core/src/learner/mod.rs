//! Top-down induction of first-order decision trees over helpful-context
//! knowledge bases.
//!
//! Each internal node holds one query literal. A query succeeds for an
//! example when the conjunction of the queries on the yes-path to it, plus
//! the query itself, has a satisfying assignment over the example's facts.
//! Splits maximise information gain.

pub mod tree;

use rustc_hash::FxHashMap;

pub use tree::{CompiledTree, Leaf, Node, QArg, Query, RelationalTree, TreeError};

use crate::training::bias::{ArgMode, LanguageBias, ModeDecl};
use crate::policy::DckBundle;
use crate::training::kb::{sanitize, Fact, KnowledgeBase};
use crate::training::TrainingOutput;

pub type Sym = u32;

/// Interned predicate and constant names.
#[derive(Clone, Debug, Default)]
pub struct Vocab {
    map: FxHashMap<String, Sym>,
    names: Vec<String>,
}

impl Vocab {
    pub fn intern(&mut self, s: &str) -> Sym {
        if let Some(&id) = self.map.get(s) {
            return id;
        }
        let id = self.names.len() as Sym;
        self.names.push(s.to_string());
        self.map.insert(s.to_string(), id);
        id
    }

    pub fn get(&self, s: &str) -> Option<Sym> {
        self.map.get(s).copied()
    }

    pub fn name(&self, id: Sym) -> &str {
        &self.names[id as usize]
    }
}

/// Ground facts of one example, indexed by predicate.
#[derive(Clone, Debug, Default)]
pub struct FactSet {
    by_pred: FxHashMap<Sym, Vec<Box<[Sym]>>>,
    len: usize,
}

impl FactSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_facts<'a>(vocab: &mut Vocab, facts: impl IntoIterator<Item = &'a Fact>) -> Self {
        let mut fs = Self::new();
        for f in facts {
            fs.add_fact(vocab, f);
        }
        fs
    }

    pub fn add_fact(&mut self, vocab: &mut Vocab, f: &Fact) {
        let p = vocab.intern(&f.predicate);
        let args: Box<[Sym]> = f.args.iter().map(|a| vocab.intern(a)).collect();
        self.add(p, args);
    }

    pub fn add(&mut self, predicate: Sym, args: Box<[Sym]>) {
        self.by_pred.entry(predicate).or_default().push(args);
        self.len += 1;
    }

    pub fn tuples(&self, predicate: Sym) -> &[Box<[Sym]>] {
        self.by_pred.get(&predicate).map_or(&[], |v| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// A query with its predicate resolved; `pred` is `None` when the predicate
/// never occurs in the vocabulary and so cannot match.
#[derive(Clone, Debug)]
pub struct CompiledLit {
    pred: Option<Sym>,
    vars: Box<[u32]>,
}

impl CompiledLit {
    pub fn new(vocab: &mut Vocab, q: &Query) -> Self {
        Self {
            pred: Some(vocab.intern(&q.predicate)),
            vars: q.args.iter().map(|a| a.var()).collect(),
        }
    }
}

/// Partial assignment of variables to constants, indexed by variable.
pub type Bindings = Vec<Option<Sym>>;

/// Existential match of a conjunction by backtracking. On success the
/// witness is left in `bindings`; on failure `bindings` is unchanged.
pub(crate) fn solve(facts: &FactSet, conj: &[&CompiledLit], bindings: &mut Bindings) -> bool {
    let Some((first, rest)) = conj.split_first() else {
        return true;
    };
    let Some(pred) = first.pred else {
        return false;
    };
    debug_assert!(first.vars.len() <= 32);
    let mut newly = [0u32; 32];
    'tuples: for t in facts.tuples(pred) {
        if t.len() != first.vars.len() {
            continue;
        }
        let mut n = 0;
        for (&v, &c) in first.vars.iter().zip(t.iter()) {
            match bindings[v as usize] {
                Some(b) if b != c => {
                    for &u in &newly[..n] {
                        bindings[u as usize] = None;
                    }
                    continue 'tuples;
                }
                Some(_) => {}
                None => {
                    bindings[v as usize] = Some(c);
                    newly[n] = v;
                    n += 1;
                }
            }
        }
        if solve(facts, rest, bindings) {
            return true;
        }
        for &u in &newly[..n] {
            bindings[u as usize] = None;
        }
    }
    false
}

/// Whether `conj ∧ candidate` holds in `facts` under `bindings`. On success
/// returns the extended bindings.
pub fn query_succeeds(
    vocab: &mut Vocab,
    facts: &FactSet,
    conj: &[Query],
    candidate: &Query,
    bindings: &Bindings,
) -> Option<Bindings> {
    let lits: Vec<CompiledLit> = conj
        .iter()
        .chain(std::iter::once(candidate))
        .map(|q| CompiledLit::new(vocab, q))
        .collect();
    let refs: Vec<&CompiledLit> = lits.iter().collect();
    let max_var = lits
        .iter()
        .flat_map(|l| l.vars.iter().copied())
        .max()
        .map_or(0, |m| m as usize + 1);
    let mut b = bindings.clone();
    if b.len() < max_var {
        b.resize(max_var, None);
    }
    solve(facts, &refs, &mut b).then_some(b)
}

/// A variable in scope with its type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedVar {
    pub var: u32,
    pub ty: String,
}

/// Candidate literals for one node. Identifier positions take the example
/// (variable 0) and problem (variable 1) ids. A `+` position takes a new
/// variable or any in-scope variable of the same type; a `-` position always
/// takes a new variable. New variables are numbered from `next_var` in
/// argument order. Order: bias declaration, then per position new variable
/// first and in-scope variables in scope order.
pub fn generate_candidate_queries(bias: &LanguageBias, scope: &[TypedVar], next_var: u32) -> Vec<Query> {
    let mut out = Vec::new();
    for m in &bias.modes {
        mode_candidates(m, scope, next_var, &mut out);
    }
    out
}

#[derive(Clone, Copy)]
enum Slot {
    Fresh,
    Bound(u32),
}

fn mode_candidates(m: &ModeDecl, scope: &[TypedVar], next_var: u32, out: &mut Vec<Query>) {
    let options: Vec<Vec<Slot>> = m
        .args
        .iter()
        .map(|a| {
            if a.is_example_id() {
                vec![Slot::Bound(0)]
            } else if a.is_problem_id() {
                vec![Slot::Bound(1)]
            } else {
                let mut v = vec![Slot::Fresh];
                if a.mode == ArgMode::Input {
                    v.extend(scope.iter().filter(|s| s.ty == a.ty).map(|s| Slot::Bound(s.var)));
                }
                v
            }
        })
        .collect();
    let mut idx = vec![0usize; options.len()];
    loop {
        let mut fresh = next_var;
        let args = idx
            .iter()
            .zip(&options)
            .map(|(&i, o)| match o[i] {
                Slot::Bound(v) => QArg::Var(v),
                Slot::Fresh => {
                    fresh += 1;
                    QArg::Fresh(fresh - 1)
                }
            })
            .collect();
        out.push(Query {
            predicate: m.predicate.clone(),
            args,
        });
        // odometer, last position fastest
        let mut k = options.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < options[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearnConfig {
    pub gain_epsilon: f64,
    pub min_leaf: usize,
    /// Depth limit, a guard against runaway trees.
    pub max_depth: usize,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            gain_epsilon: 1e-6,
            min_leaf: 2,
            max_depth: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LearnError {
    #[error("knowledge base has no examples")]
    EmptyKb,
    #[error("class '{0}' is not declared in the bias")]
    UnknownClass(String),
    #[error("bias target must start with example and problem identifiers")]
    BadTarget,
    #[error("target atom of example {id} has {got} arguments, the bias declares {want}")]
    TargetArity { id: String, got: usize, want: usize },
}

/// Learning examples with interned facts.
pub struct LearningSet {
    pub vocab: Vocab,
    pub facts: Vec<FactSet>,
    /// Per learning example: index into `facts`, target bindings (ids then
    /// object arguments), class index.
    pub examples: Vec<(usize, Vec<Sym>, usize)>,
    pub classes: Vec<String>,
}

impl LearningSet {
    pub fn new(kb: &KnowledgeBase, bias: &LanguageBias) -> Result<Self, LearnError> {
        let t = &bias.target.args;
        if t.len() < 3 || !t[0].is_example_id() || !t[1].is_problem_id() {
            return Err(LearnError::BadTarget);
        }
        let want = t.len() - 3;
        let mut vocab = Vocab::default();
        let mut facts = Vec::new();
        let mut examples = Vec::new();
        for e in &kb.examples {
            let mut fs = FactSet::from_facts(&mut vocab, &e.facts);
            if let Some(st) = kb.statics.get(&e.problem) {
                for f in st {
                    fs.add_fact(&mut vocab, f);
                }
            }
            let id = vocab.intern(&e.id);
            let prob = vocab.intern(&e.problem);
            for ta in &e.targets {
                if ta.args.len() != want {
                    return Err(LearnError::TargetArity {
                        id: e.id.clone(),
                        got: ta.args.len(),
                        want,
                    });
                }
                let class = bias
                    .classes
                    .iter()
                    .position(|c| *c == ta.class)
                    .ok_or_else(|| LearnError::UnknownClass(ta.class.clone()))?;
                let mut bound = vec![id, prob];
                bound.extend(ta.args.iter().map(|a| vocab.intern(a)));
                examples.push((facts.len(), bound, class));
            }
            facts.push(fs);
        }
        Ok(Self {
            vocab,
            facts,
            examples,
            classes: bias.classes.clone(),
        })
    }
}

fn entropy(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

struct Inducer<'a> {
    set: &'a mut LearningSet,
    bias: &'a LanguageBias,
    cfg: LearnConfig,
    next_var: u32,
}

impl Inducer<'_> {
    fn counts(&self, members: &[usize]) -> Vec<u64> {
        let mut c = vec![0u64; self.set.classes.len()];
        for &m in members {
            c[self.set.examples[m].2] += 1;
        }
        c
    }

    fn holds(&self, m: usize, conj: &[&CompiledLit], nvars: usize) -> bool {
        let (fi, bound, _) = &self.set.examples[m];
        let mut b: Bindings = vec![None; nvars];
        for (i, &s) in bound.iter().enumerate() {
            b[i] = Some(s);
        }
        solve(&self.set.facts[*fi], conj, &mut b)
    }

    fn build(&mut self, members: Vec<usize>, conj: &mut Vec<(Query, CompiledLit)>, scope: &mut Vec<TypedVar>, depth: usize) -> Node {
        let counts = self.counts(&members);
        let leaf = || Node::Leaf(Leaf::from_counts(&self.set.classes, &counts));
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || members.len() < self.cfg.min_leaf || depth >= self.cfg.max_depth {
            return leaf();
        }
        let parent_h = entropy(&counts);
        let n = members.len() as f64;
        let candidates = generate_candidate_queries(self.bias, scope, self.next_var);
        let mut best: Option<(f64, Query, Vec<usize>, Vec<usize>)> = None;
        for cand in candidates {
            let lit = CompiledLit::new(&mut self.set.vocab, &cand);
            let nvars = (cand.args.iter().map(|a| a.var() + 1).max().unwrap_or(0) as usize)
                .max(self.next_var as usize)
                .max(self.bias.target.args.len());
            let mut refs: Vec<&CompiledLit> = conj.iter().map(|(_, l)| l).collect();
            refs.push(&lit);
            let (mut yes, mut no) = (Vec::new(), Vec::new());
            for &m in &members {
                if self.holds(m, &refs, nvars) {
                    yes.push(m);
                } else {
                    no.push(m);
                }
            }
            if yes.is_empty() || no.is_empty() {
                continue;
            }
            let h = (yes.len() as f64 / n) * entropy(&self.counts(&yes))
                + (no.len() as f64 / n) * entropy(&self.counts(&no));
            let gain = parent_h - h;
            if best.as_ref().is_none_or(|b| gain > b.0) {
                best = Some((gain, cand, yes, no));
            }
        }
        let Some((gain, query, yes, no)) = best else {
            return leaf();
        };
        if gain < self.cfg.gain_epsilon {
            return leaf();
        }
        let mark = scope.len();
        let mut introduced = 0;
        let mode = self.bias.mode(&query.predicate).expect("candidate from the bias");
        for (a, m) in query.args.iter().zip(&mode.args) {
            if let QArg::Fresh(v) = a {
                scope.push(TypedVar { var: *v, ty: m.ty.clone() });
                introduced += 1;
            }
        }
        self.next_var += introduced;
        let lit = CompiledLit::new(&mut self.set.vocab, &query);
        conj.push((query.clone(), lit));
        let yes_node = self.build(yes, conj, scope, depth + 1);
        conj.pop();
        scope.truncate(mark);
        let no_node = self.build(no, conj, scope, depth + 1);
        Node::Test {
            query,
            yes: Box::new(yes_node),
            no: Box::new(no_node),
        }
    }
}

/// Induces a tree from a knowledge base and its bias.
pub fn induce_tree(kb: &KnowledgeBase, bias: &LanguageBias, cfg: &LearnConfig) -> Result<RelationalTree, LearnError> {
    let mut set = LearningSet::new(kb, bias)?;
    if set.examples.is_empty() {
        return Err(LearnError::EmptyKb);
    }
    let arity = bias.target.args.len();
    let mut scope: Vec<TypedVar> = bias.target.args[2..arity - 1]
        .iter()
        .enumerate()
        .map(|(i, a)| TypedVar {
            var: i as u32 + 2,
            ty: a.ty.clone(),
        })
        .collect();
    let members: Vec<usize> = (0..set.examples.len()).collect();
    let mut ind = Inducer {
        set: &mut set,
        bias,
        cfg: *cfg,
        next_var: arity as u32,
    };
    let root = ind.build(members, &mut Vec::new(), &mut scope, 0);
    Ok(RelationalTree {
        target: bias.target.predicate.clone(),
        target_arity: arity,
        root,
    })
}

/// Fraction of learning examples whose leaf majority equals their class.
pub fn training_accuracy(tree: &RelationalTree, kb: &KnowledgeBase, bias: &LanguageBias) -> Result<f64, LearnError> {
    let mut set = LearningSet::new(kb, bias)?;
    if set.examples.is_empty() {
        return Err(LearnError::EmptyKb);
    }
    let ct = tree.compile(&mut set.vocab);
    let correct = set
        .examples
        .iter()
        .filter(|(fi, bound, class)| ct.classify(&set.facts[*fi], bound).majority == set.classes[*class])
        .count();
    Ok(correct as f64 / set.examples.len() as f64)
}

/// Operator tree plus one binding tree per operator with examples. An empty
/// operator knowledge base gives an empty bundle.
pub fn learn_bundle(output: &TrainingOutput, cfg: &LearnConfig) -> Result<DckBundle, LearnError> {
    let mut bundle = DckBundle::default();
    match induce_tree(&output.operators, &output.operator_bias, cfg) {
        Ok(t) => bundle.operator_tree = Some(t),
        Err(LearnError::EmptyKb) => return Ok(bundle),
        Err(e) => return Err(e),
    }
    for (op, (kb, bias)) in &output.bindings {
        match induce_tree(kb, bias, cfg) {
            Ok(t) => {
                bundle.binding_trees.insert(sanitize(op), t);
            }
            Err(LearnError::EmptyKb) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(bundle)
}
