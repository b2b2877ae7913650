//! Configuration suites, run records and competition-style scores.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::grounding::GroundTask;
use crate::policy::DckBundle;
use crate::search::{search, SearchConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: String,
    pub problem: String,
    pub solved: bool,
    /// Seconds.
    pub time: f64,
    pub length: Option<u64>,
    pub evaluations: u64,
}

pub fn write_csv<W: io::Write>(records: &[RunRecord], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: io::Read>(r: R) -> csv::Result<Vec<RunRecord>> {
    csv::Reader::from_reader(r).deserialize().collect()
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(BigRational::zero)
}

/// Sum over problems of `best / value` for each solver; unsolved runs score 0.
/// A value of 0 scores 1 when it is the best.
fn ratio_score(entries: &[(String, String, Option<BigRational>)]) -> BTreeMap<String, BigRational> {
    let mut by_problem: BTreeMap<&str, Vec<(&str, &BigRational)>> = BTreeMap::new();
    let mut scores: BTreeMap<String, BigRational> = BTreeMap::new();
    for (c, p, v) in entries {
        scores.entry(c.clone()).or_insert_with(BigRational::zero);
        if let Some(v) = v {
            by_problem.entry(p).or_default().push((c, v));
        }
    }
    for solvers in by_problem.values() {
        let best = solvers.iter().map(|s| s.1).min().expect("non-empty");
        for (c, v) in solvers {
            let s = if v.is_zero() {
                BigRational::from_integer(BigInt::from(1))
            } else {
                best / *v
            };
            *scores.get_mut(*c).expect("registered") += s;
        }
    }
    scores
}

/// Per-config sum of `T*/T`.
pub fn time_score(records: &[RunRecord]) -> BTreeMap<String, BigRational> {
    let entries: Vec<_> = records
        .iter()
        .map(|r| (r.config.clone(), r.problem.clone(), r.solved.then(|| rational(r.time))))
        .collect();
    ratio_score(&entries)
}

/// Per-config sum of `L*/L`.
pub fn quality_score(records: &[RunRecord]) -> BTreeMap<String, BigRational> {
    let entries: Vec<_> = records
        .iter()
        .map(|r| {
            let l = if r.solved { r.length } else { None };
            (
                r.config.clone(),
                r.problem.clone(),
                l.map(|l| BigRational::from_integer(BigInt::from(l))),
            )
        })
        .collect();
    ratio_score(&entries)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigScore {
    pub config: String,
    pub solved: usize,
    pub time_score: BigRational,
    pub quality_score: BigRational,
    /// Over problems solved by every config that solved anything; `None` for
    /// configs that solved nothing or when no problem is common.
    pub avg_time: Option<f64>,
    pub avg_length: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreReport {
    pub configs: Vec<ConfigScore>,
    pub common_problems: Vec<String>,
}

impl ScoreReport {
    pub fn from_records(records: &[RunRecord]) -> Self {
        let mut order: Vec<String> = Vec::new();
        for r in records {
            if !order.contains(&r.config) {
                order.push(r.config.clone());
            }
        }
        let ts = time_score(records);
        let qs = quality_score(records);
        let solved_by = |c: &str| -> BTreeSet<&str> {
            records
                .iter()
                .filter(|r| r.config == c && r.solved)
                .map(|r| r.problem.as_str())
                .collect()
        };
        let active: Vec<&String> = order.iter().filter(|c| !solved_by(c).is_empty()).collect();
        let common: BTreeSet<&str> = match active.split_first() {
            Some((first, rest)) => rest
                .iter()
                .fold(solved_by(first), |acc, c| acc.intersection(&solved_by(c)).copied().collect()),
            None => BTreeSet::new(),
        };
        let configs = order
            .iter()
            .map(|c| {
                let solved = solved_by(c).len();
                let common_runs: Vec<&RunRecord> = records
                    .iter()
                    .filter(|r| &r.config == c && r.solved && common.contains(r.problem.as_str()))
                    .collect();
                let (avg_time, avg_length) = if solved == 0 || common_runs.is_empty() {
                    (None, None)
                } else {
                    let n = common_runs.len() as f64;
                    (
                        Some(common_runs.iter().map(|r| r.time).sum::<f64>() / n),
                        Some(common_runs.iter().map(|r| r.length.unwrap_or(0) as f64).sum::<f64>() / n),
                    )
                };
                ConfigScore {
                    config: c.clone(),
                    solved,
                    time_score: ts[c].clone(),
                    quality_score: qs[c].clone(),
                    avg_time,
                    avg_length,
                }
            })
            .collect();
        ScoreReport {
            configs,
            common_problems: common.into_iter().map(str::to_string).collect(),
        }
    }

    pub fn get(&self, config: &str) -> Option<&ConfigScore> {
        self.configs.iter().find(|c| c.config == config)
    }
}

fn approx(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.configs.iter().map(|c| c.config.len()).max().unwrap_or(6).max(6);
        writeln!(
            f,
            "{:<w$}  {:>6}  {:>10}  {:>10}  {:>10}  {:>10}",
            "config", "solved", "time", "quality", "avg-time", "avg-length"
        )?;
        let opt = |x: Option<f64>, p: usize| x.map_or_else(|| "-".to_string(), |v| format!("{v:.p$}"));
        for c in &self.configs {
            writeln!(
                f,
                "{:<w$}  {:>6}  {:>10.3}  {:>10.3}  {:>10}  {:>10}",
                c.config,
                c.solved,
                approx(&c.time_score),
                approx(&c.quality_score),
                opt(c.avg_time, 3),
                opt(c.avg_length, 1)
            )?;
        }
        write!(f, "commonly solved problems: {}", self.common_problems.len())
    }
}

/// One problem of a suite.
pub struct SuiteProblem {
    pub name: String,
    pub task: GroundTask,
}

/// Runs every `(config, problem)` pair on `workers` threads. Records come back
/// in config-major, problem-minor order. Plans that fail replay are reported
/// on stderr and recorded as unsolved.
pub fn run_suite(problems: &[SuiteProblem], configs: &[SearchConfig], dck: &DckBundle, workers: usize) -> Vec<RunRecord> {
    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..problems.len()).map(move |p| (c, p)))
        .collect();
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<(usize, RunRecord)>> = Mutex::new(Vec::with_capacity(jobs.len()));
    std::thread::scope(|scope| {
        for _ in 0..workers.max(1).min(jobs.len().max(1)) {
            scope.spawn(|| loop {
                let j = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(c, p)) = jobs.get(j) else { break };
                let rec = run_one(&problems[p], &configs[c], dck);
                out.lock().expect("no poisoned runs").push((j, rec));
            });
        }
    });
    let mut out = out.into_inner().expect("no poisoned runs");
    out.sort_by_key(|e| e.0);
    out.into_iter().map(|e| e.1).collect()
}

pub fn run_one(problem: &SuiteProblem, cfg: &SearchConfig, dck: &DckBundle) -> RunRecord {
    let r = search(&problem.task, dck, cfg);
    let mut solved = r.solved();
    if let Some(plan) = &r.plan {
        if !problem.task.validate_plan(plan) {
            eprintln!(
                "INVALID PLAN: config {} on problem {} returned a plan that does not reach the goals",
                cfg.id(),
                problem.name
            );
            solved = false;
        }
    }
    RunRecord {
        config: cfg.id(),
        problem: problem.name.clone(),
        solved,
        time: r.stats.time.as_secs_f64(),
        length: if solved { r.length().map(|l| l as u64) } else { None },
        evaluations: r.stats.evaluated,
    }
}
