//! `mapf` command line: one-shot solves, lifelong runs, experiment matrices
//! and run-log replay.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mapf_core::cbs::{cbs_solve, CbsConfig};
use mapf_core::experiment::{self, parse_config};
use mapf_core::grid::{check_scen_entries, parse_scen, GridGraph, Vertex};
use mapf_core::lifelong::{
    run_lifelong, FailPolicy, ReplanTrigger, RhcrConfig, SolverKind, TargetStream,
};
use mapf_core::model::{serialize_paths, validate, Mode, Solution};
use mapf_core::pibt::pibt_run;
use mapf_core::prp::{lns_solve, prp_solve, LnsConfig, PrpConfig};
use mapf_core::scenario::{self, Instance};
use mapf_core::search::Horizon;

#[derive(Parser)]
#[command(name = "mapf", about = "Lifelong MAPF/TMAPF solver suite", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Classic,
    Transient,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Classic => Mode::Classic,
            ModeArg::Transient => Mode::Transient,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Prp,
    Lns,
    Cbs,
    Pibt,
}

#[derive(Args)]
struct InstanceArgs {
    /// MovingAI .map file
    #[arg(long)]
    map: Option<PathBuf>,
    /// MovingAI .scen file providing starts and targets
    #[arg(long)]
    scen: Option<PathBuf>,
    /// Number of scenario entries to use (in file order)
    #[arg(long)]
    agents: Option<usize>,
    /// Scripted instance fixture file
    #[arg(long)]
    fixture: Option<PathBuf>,
    /// Built-in pathological case: swap-corridor or starvation-ring
    #[arg(long)]
    case: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a one-shot MAPF/TMAPF instance
    Solve {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, value_enum, default_value = "prp")]
        solver: SolverArg,
        #[arg(long, value_enum, default_value = "classic")]
        mode: ModeArg,
        /// Planning horizon: integer or `inf`
        #[arg(long, default_value = "inf")]
        w: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        node_budget: Option<u64>,
        /// Write the solution paths here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one lifelong simulation and report throughput
    Lifelong {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, value_enum, default_value = "prp")]
        solver: SolverArg,
        #[arg(long, value_enum, default_value = "classic")]
        mode: ModeArg,
        /// Steps between replans
        #[arg(long, default_value_t = 5)]
        k: u32,
        /// Planning horizon: integer or `inf`
        #[arg(long, default_value = "10")]
        w: String,
        /// Replan after every step instead of every k steps
        #[arg(long)]
        every_step: bool,
        #[arg(long, default_value_t = 500)]
        steps: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        node_budget: Option<u64>,
        #[arg(long)]
        time_budget_ms: Option<u64>,
        /// all-wait or partial-plan
        #[arg(long, default_value = "partial-plan")]
        fail_policy: String,
        /// Write a replayable run log here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a config-driven experiment matrix and write CSV + summary
    Experiment {
        /// Experiment config file
        config: PathBuf,
        /// Output directory for results.csv, summary.txt, timings.txt
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Worker threads (default: MAPF_WORKERS or all cores)
        #[arg(long)]
        workers: Option<usize>,
        /// Exit 0 even when some rows failed
        #[arg(long)]
        allow_failures: bool,
    },
    /// Render a run log as ASCII boards, one frame per step
    Replay {
        /// Run log produced by `lifelong --out`
        log: PathBuf,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Resolve the instance flags into graph + starts + stream.
fn load_instance(args: &InstanceArgs) -> Result<Instance> {
    if let Some(case) = &args.case {
        return match case.as_str() {
            "swap-corridor" => Ok(scenario::make_swap_corridor()),
            "starvation-ring" => Ok(scenario::make_starvation_ring()),
            other => bail!("unknown case `{other}` (try swap-corridor or starvation-ring)"),
        };
    }
    if let Some(fixture) = &args.fixture {
        return scenario::parse_fixture(&read(fixture)?).map_err(|e| anyhow!("{e}"));
    }
    let map_path = args.map.as_ref().ok_or_else(|| anyhow!("need --map, --fixture or --case"))?;
    let graph = GridGraph::parse(&read(map_path)?).map_err(|e| anyhow!("{e}"))?;
    let scen_path = args.scen.as_ref().ok_or_else(|| anyhow!("--map also needs --scen"))?;
    let entries = parse_scen(&read(scen_path)?).map_err(|e| anyhow!("{e}"))?;
    check_scen_entries(&graph, &entries).map_err(|e| anyhow!("{e}"))?;
    let n = args.agents.unwrap_or(entries.len()).min(entries.len());
    let starts: Vec<Vertex> =
        entries[..n].iter().map(|e| graph.vertex_at(e.start).unwrap()).collect();
    let sequences: Vec<Vec<Vertex>> = entries[..n]
        .iter()
        .map(|e| vec![graph.vertex_at(e.goal).unwrap(), graph.vertex_at(e.start).unwrap()])
        .collect();
    Ok(Instance { graph, starts, stream: TargetStream::Scripted { sequences } })
}

fn parse_horizon(s: &str) -> Result<Horizon> {
    s.parse::<Horizon>().map_err(|e| anyhow!("{e}"))
}

fn solve_cmd(
    instance: &InstanceArgs,
    solver: SolverArg,
    mode: Mode,
    w: &str,
    seed: u64,
    node_budget: Option<u64>,
    out: Option<&PathBuf>,
) -> Result<()> {
    let inst = load_instance(instance)?;
    let targets = inst.one_shot_targets();
    let horizon = parse_horizon(w)?;
    let (solution, stats_line): (Solution, String) = match solver {
        SolverArg::Prp => {
            let cfg = PrpConfig { seed, node_budget, ..PrpConfig::new(mode, horizon) };
            let run = prp_solve(&inst.graph, &inst.starts, &targets, &cfg);
            let stats = format!(
                "expansions={} attempts={}",
                run.stats.expansions, run.stats.attempts
            );
            match run.result {
                Ok(s) => (s, stats),
                Err(f) => bail!("no solution: agent {} unplannable ({stats})", f.first_unplannable),
            }
        }
        SolverArg::Lns => {
            let cfg = LnsConfig { seed, node_budget, ..LnsConfig::new(mode, horizon, 200) };
            let run = lns_solve(&inst.graph, &inst.starts, &targets, &cfg);
            let stats = format!(
                "expansions={} iterations={} cost {}->{}",
                run.stats.expansions,
                run.stats.iterations_run,
                run.stats.initial_cost,
                run.stats.final_cost
            );
            match run.result {
                Ok(s) => (s, stats),
                Err(f) => bail!("no solution: agent {} unplannable", f.first_unplannable),
            }
        }
        SolverArg::Cbs => {
            let mut cfg = CbsConfig::new(mode, horizon);
            if let Some(b) = node_budget {
                cfg.node_budget = b;
            }
            let run = cbs_solve(&inst.graph, &inst.starts, &targets, &cfg);
            let stats = format!(
                "ct_expanded={} low_level_expansions={}",
                run.stats.ct_expanded, run.stats.low_level_expansions
            );
            match run.result {
                Ok(s) => (s, stats),
                Err(e) => bail!("no solution: {e:?} ({stats})"),
            }
        }
        SolverArg::Pibt => {
            let cap = 8 * inst.graph.num_vertices() as u32 + 100;
            let run = pibt_run(&inst.graph, &inst.starts, &targets, mode, cap, seed);
            let stats = format!("steps={}", run.steps);
            match run.result {
                Ok(s) => (s, stats),
                Err(_) => bail!("step cap hit without termination ({stats})"),
            }
        }
    };
    let violations = validate(&solution, &inst.graph, &inst.starts, &targets, mode);
    if !violations.is_empty() {
        bail!("solver returned an invalid solution: {violations:?}");
    }
    let text = serialize_paths(&inst.graph, &solution.paths);
    match out {
        Some(path) => fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    eprintln!(
        "solved mode={mode} soc={} makespan={} {stats_line}",
        solution.soc(),
        solution.makespan()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn lifelong_cmd(
    instance: &InstanceArgs,
    solver: SolverArg,
    mode: Mode,
    k: u32,
    w: &str,
    every_step: bool,
    steps: u32,
    seed: u64,
    node_budget: Option<u64>,
    time_budget_ms: Option<u64>,
    fail_policy: &str,
    out: Option<&PathBuf>,
) -> Result<()> {
    let inst = load_instance(instance)?;
    let horizon = parse_horizon(w)?;
    let kind = match solver {
        SolverArg::Prp => SolverKind::Prp { restarts: 4 },
        SolverArg::Lns => SolverKind::Lns {
            iterations: 100,
            neighborhood: 4,
            heuristics: vec![
                mapf_core::prp::DestroyHeuristic::Random,
                mapf_core::prp::DestroyHeuristic::MapBased,
            ],
        },
        SolverArg::Cbs => SolverKind::Cbs,
        SolverArg::Pibt => SolverKind::Pibt,
    };
    let cfg = RhcrConfig {
        solver: kind,
        mode,
        period: k,
        horizon,
        replan: if every_step { ReplanTrigger::EveryStep } else { ReplanTrigger::Periodic },
        node_budget,
        time_budget: time_budget_ms.map(Duration::from_millis),
        fail_policy: match fail_policy {
            "all-wait" => FailPolicy::AllWait,
            "partial-plan" => FailPolicy::PartialPlan,
            other => bail!("unknown fail policy `{other}`"),
        },
        seed,
    };
    let run = run_lifelong(&inst.graph, &inst.starts, inst.stream.clone(), &cfg, steps, &[300, 500, 1000]);
    for (t, tp) in &run.checkpoints {
        println!("throughput@{t} = {tp}");
    }
    println!("throughput@{steps} = {} (final)", run.throughput);
    println!(
        "expansions={} plan_failures={} fail_policy={} runtime_ms={}",
        run.stats.total_expansions,
        run.stats.plan_failures,
        run.stats.fail_policy_invocations,
        run.stats.runtime.as_millis()
    );
    if let Some(path) = out {
        fs::write(path, experiment::write_run_log(&inst.graph, &run))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn experiment_cmd(config: &Path, out: &Path, workers: Option<usize>, allow_failures: bool) -> Result<()> {
    let cfg = parse_config(&read(config)?).map_err(|e| anyhow!("{e}"))?;
    let workers = workers
        .or_else(|| std::env::var("MAPF_WORKERS").ok().and_then(|v| v.parse().ok()))
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let base = config.parent().unwrap_or(Path::new("."));
    let loader = |p: &str| -> Result<GridGraph, String> {
        let path = if Path::new(p).is_absolute() { PathBuf::from(p) } else { base.join(p) };
        let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        GridGraph::parse(&text).map_err(|e| e.to_string())
    };
    let output = experiment::run_experiment(&cfg, &loader, workers).map_err(|e| anyhow!("{e}"))?;
    fs::create_dir_all(out)?;
    fs::write(out.join("results.csv"), &output.csv)?;
    fs::write(out.join("summary.txt"), &output.summary)?;
    fs::write(out.join("timings.txt"), &output.timings)?;
    print!("{}", output.summary);
    if output.failed_rows > 0 {
        eprintln!("{} rows failed", output.failed_rows);
        if !allow_failures {
            bail!("failed rows present (pass --allow-failures to tolerate)");
        }
    }
    Ok(())
}

fn replay_cmd(log: &Path) -> Result<()> {
    let log = experiment::parse_run_log(&read(log)?).map_err(|e| anyhow!("{e}"))?;
    for frame in experiment::replay_frames(&log) {
        println!("{frame}");
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Solve { instance, solver, mode, w, seed, node_budget, out } => {
            solve_cmd(instance, *solver, (*mode).into(), w, *seed, *node_budget, out.as_ref())
        }
        Command::Lifelong {
            instance,
            solver,
            mode,
            k,
            w,
            every_step,
            steps,
            seed,
            node_budget,
            time_budget_ms,
            fail_policy,
            out,
        } => lifelong_cmd(
            instance,
            *solver,
            (*mode).into(),
            *k,
            w,
            *every_step,
            *steps,
            *seed,
            *node_budget,
            *time_budget_ms,
            fail_policy,
            out.as_ref(),
        ),
        Command::Experiment { config, out, workers, allow_failures } => {
            experiment_cmd(config, out, *workers, *allow_failures)
        }
        Command::Replay { log } => replay_cmd(log),
    }
}
