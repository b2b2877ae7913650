use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use num_rational::Ratio;

use roller::bench::{self, ScoreReport, SuiteProblem};
use roller::grounding::{ground_task, GroundTask};
use roller::learner::{induce_tree, training_accuracy, LearnConfig};
use roller::pddl::{self, DomainModel};
use roller::policy::{binding_tree_file, operator_tree_file, DckBundle, Policy};
use roller::relaxed::Evaluator;
use roller::search::{self, Algorithm, DckSource, SearchConfig};
use roller::training::{self, BnbConfig, KnowledgeBase, LanguageBias};

#[derive(Parser)]
#[command(name = "roller", version, about = "Learned relational control knowledge for heuristic planning")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Ground a problem and print task sizes.
    Ground(TaskArgs),
    /// Print h and the helpful actions of the initial state.
    Heuristic(TaskArgs),
    /// Write seeded random Blocksworld problems.
    Generate {
        #[arg(long)]
        blocks: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Base seed; defaults to ROLLER_SEED or 0.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve training problems and write knowledge bases and language biases.
    Train {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        problems: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Seconds per problem.
        #[arg(long, default_value_t = 60.0)]
        time_bound: f64,
    },
    /// Induce trees from the knowledge bases in a directory.
    Learn {
        #[arg(long)]
        dir: PathBuf,
        /// Domain name used in the file names.
        #[arg(long)]
        domain: String,
        /// Output directory; defaults to --dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a problem.
    Plan {
        #[command(flatten)]
        task: TaskArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Inspect the learned policy.
    Policy {
        #[command(subcommand)]
        cmd: PolicyCmd,
    },
    /// Run configurations over problems and print scores.
    Bench {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        problems: Vec<PathBuf>,
        /// Tree directory for the `trees` source.
        #[arg(long)]
        trees: Option<PathBuf>,
        /// `algorithm/source` ids; defaults to all nine.
        #[arg(long, num_args = 1..)]
        configs: Vec<String>,
        #[arg(long, default_value_t = 60.0)]
        time_bound: f64,
        #[arg(long, default_value_t = 100)]
        horizon: u32,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Recompute scores from a bench CSV.
    Score { csv: PathBuf },
}

#[derive(Subcommand)]
enum PolicyCmd {
    /// Show the context, operator leaf and action priorities in the initial state.
    Explain {
        #[command(flatten)]
        task: TaskArgs,
        #[arg(long)]
        trees: PathBuf,
    },
}

#[derive(Args)]
struct TaskArgs {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    problem: PathBuf,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value = "df-policy")]
    algo: Algorithm,
    #[arg(long, default_value = "trees")]
    dck: DckSource,
    /// Tree directory; without it the `trees` source has no trees.
    #[arg(long)]
    trees: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    horizon: u32,
    /// Weight of h, as `n` or `n/d`.
    #[arg(long, default_value = "1")]
    weight: Ratio<i64>,
    #[arg(long, default_value_t = 60.0)]
    time_bound: f64,
    #[arg(long)]
    anytime: bool,
}

type Res<T> = Result<T, String>;

fn read(path: &Path) -> Res<String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_domain(path: &Path) -> Res<DomainModel> {
    pddl::parse_domain(&read(path)?).map_err(|e| e.diagnostic(&path.display().to_string()))
}

fn load_task(domain: &DomainModel, path: &Path) -> Res<GroundTask> {
    let p = pddl::parse_problem(&read(path)?, domain).map_err(|e| e.diagnostic(&path.display().to_string()))?;
    Ok(ground_task(domain, &p))
}

fn load_bundle(dir: Option<&Path>, domain: &DomainModel) -> Res<DckBundle> {
    let Some(dir) = dir else { return Ok(DckBundle::default()) };
    let ops: Vec<String> = domain.operators.iter().map(|o| o.name.clone()).collect();
    DckBundle::load_dir(dir, &domain.name, &ops).map_err(|e| e.to_string())
}

fn write(path: &Path, text: &str) -> Res<()> {
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn learn_dir(dir: &Path, domain: &str, out: &Path) -> Res<()> {
    let cfg = LearnConfig::default();
    let prefix = format!("{}-", training::sanitize(domain));
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.starts_with(&prefix) && n.ends_with(".kb"))
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(format!("no {prefix}*.kb files in {}", dir.display()));
    }
    std::fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
    for name in names {
        let stem = &name[prefix.len()..name.len() - 3];
        let bias_path = dir.join(format!("{prefix}{stem}.bias"));
        let bias = LanguageBias::parse(&read(&bias_path)?).map_err(|e| format!("{}: {e}", bias_path.display()))?;
        let kb_path = dir.join(&name);
        let kb = KnowledgeBase::parse(&read(&kb_path)?, &bias.target.predicate)
            .map_err(|e| format!("{}: {e}", kb_path.display()))?;
        if kb.num_learning_examples() == 0 {
            println!("{name}: no examples, skipped");
            continue;
        }
        let tree = induce_tree(&kb, &bias, &cfg).map_err(|e| format!("{name}: {e}"))?;
        let acc = training_accuracy(&tree, &kb, &bias).map_err(|e| format!("{name}: {e}"))?;
        let file = if stem == "ops" {
            operator_tree_file(domain)
        } else {
            binding_tree_file(domain, stem)
        };
        write(&out.join(&file), &tree.to_string())?;
        println!(
            "{file}: {} examples, {} leaves, training accuracy {:.3}",
            kb.num_learning_examples(),
            tree.leaves().len(),
            acc
        );
    }
    Ok(())
}

fn search_config(a: &SearchArgs) -> SearchConfig {
    SearchConfig {
        algorithm: a.algo,
        dck_source: a.dck,
        horizon: a.horizon,
        weight: a.weight,
        time_bound: Some(Duration::from_secs_f64(a.time_bound)),
        anytime: a.anytime,
        trace: false,
    }
}

fn run(cli: Cli) -> Res<()> {
    match cli.cmd {
        Cmd::Ground(t) => {
            let d = load_domain(&t.domain)?;
            let task = load_task(&d, &t.problem)?;
            println!(
                "facts={} actions={} statics={} goals={}",
                task.num_facts(),
                task.actions.len(),
                task.static_facts.len(),
                task.goals.len()
            );
        }
        Cmd::Heuristic(t) => {
            let d = load_domain(&t.domain)?;
            let task = load_task(&d, &t.problem)?;
            let e = Evaluator::new(&task).evaluate(&task.init);
            match e.h {
                Some(h) => println!("h={h}"),
                None => println!("h=inf"),
            }
            for a in e.helpful {
                println!("helpful {}", task.action(a).ipc_name());
            }
        }
        Cmd::Generate { blocks, count, seed, out } => {
            let base = seed.unwrap_or_else(|| roller::fixtures::env_seed(0));
            std::fs::create_dir_all(&out).map_err(|e| format!("{}: {e}", out.display()))?;
            for k in 0..count as u64 {
                let path = out.join(format!("bw-{blocks}-{}.pddl", base + k));
                write(&path, &roller::fixtures::blocksworld_problem(blocks, base + k))?;
                println!("{}", path.display());
            }
        }
        Cmd::Train {
            domain,
            problems,
            out,
            time_bound,
        } => {
            let d = load_domain(&domain)?;
            let tasks = problems.iter().map(|p| load_task(&d, p)).collect::<Res<Vec<_>>>()?;
            let output = training::train(&d, &tasks, &BnbConfig::with_time_bound(time_bound));
            for r in &output.reports {
                println!(
                    "{} {}: exhausted={} cost={} plans={} top={} nodes={} time={:.3}",
                    r.problem,
                    r.name,
                    r.exhausted,
                    r.best_cost.map_or_else(|| "-".into(), |c| c.to_string()),
                    r.plans,
                    r.top,
                    r.tree_size,
                    r.seconds
                );
            }
            let files = output.write_to(&out).map_err(|e| format!("{}: {e}", out.display()))?;
            println!(
                "operator examples={} files={}",
                output.operators.num_learning_examples(),
                files.len()
            );
        }
        Cmd::Learn { dir, domain, out } => {
            let out = out.unwrap_or_else(|| dir.clone());
            learn_dir(&dir, &domain, &out)?;
        }
        Cmd::Plan { task, search: sa } => {
            let d = load_domain(&task.domain)?;
            let t = load_task(&d, &task.problem)?;
            let dck = load_bundle(sa.trees.as_deref(), &d)?;
            let cfg = search_config(&sa);
            let results = if cfg.anytime {
                search::anytime(&t, &dck, &cfg)
            } else {
                vec![search::search(&t, &dck, &cfg)]
            };
            let Some(best) = results.last() else {
                println!("no plan");
                return Err("no plan found".into());
            };
            for r in &results[..results.len() - 1] {
                println!("; improved: {}", r.stats_line());
            }
            match &best.plan {
                Some(plan) => {
                    for &a in plan {
                        println!("{}", t.action(a).ipc_name());
                    }
                    println!("{}", best.stats_line());
                }
                None => {
                    println!("{}", best.stats_line());
                    return Err("no plan found".into());
                }
            }
        }
        Cmd::Policy {
            cmd: PolicyCmd::Explain { task, trees },
        } => {
            let d = load_domain(&task.domain)?;
            let t = load_task(&d, &task.problem)?;
            let dck = load_bundle(Some(&trees), &d)?;
            let helpful = Evaluator::new(&t).evaluate(&t.init).helpful;
            print!("{}", Policy::new(&t, &dck).explain(&t.init, &helpful));
        }
        Cmd::Bench {
            domain,
            problems,
            trees,
            configs,
            time_bound,
            horizon,
            workers,
            csv,
        } => {
            let d = load_domain(&domain)?;
            let dck = load_bundle(trees.as_deref(), &d)?;
            let suite = problems
                .iter()
                .map(|p| {
                    Ok(SuiteProblem {
                        name: p.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned()),
                        task: load_task(&d, p)?,
                    })
                })
                .collect::<Res<Vec<_>>>()?;
            let mut cfgs = Vec::new();
            if configs.is_empty() {
                for a in Algorithm::ALL {
                    for s in DckSource::ALL {
                        cfgs.push(SearchConfig::new(a, s));
                    }
                }
            } else {
                for c in &configs {
                    let (a, s) = c.split_once('/').ok_or_else(|| format!("config '{c}' is not algorithm/source"))?;
                    cfgs.push(SearchConfig::new(a.parse()?, s.parse()?));
                }
            }
            for c in &mut cfgs {
                c.horizon = horizon;
                c.time_bound = Some(Duration::from_secs_f64(time_bound));
            }
            let records = bench::run_suite(&suite, &cfgs, &dck, workers);
            if let Some(path) = csv {
                let f = std::fs::File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                bench::write_csv(&records, f).map_err(|e| e.to_string())?;
            }
            println!("{}", ScoreReport::from_records(&records));
        }
        Cmd::Score { csv } => {
            let f = std::fs::File::open(&csv).map_err(|e| format!("{}: {e}", csv.display()))?;
            let records = bench::read_csv(f).map_err(|e| format!("{}: {e}", csv.display()))?;
            println!("{}", ScoreReport::from_records(&records));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("roller: {e}");
            ExitCode::FAILURE
        }
    }
}
