//! Config-driven experiment matrices, CSV output, run logs and replay.
//!
//! A config file holds flat `key = value` lines plus repeated `[solver]` and
//! `[stream]` blocks; the cross product map x agents x stream x solver x seed
//! becomes one lifelong run per cell. Rows are computed in parallel but
//! written in config order, and the CSV contains only deterministic fields
//! (wall-clock timings go to a separate report) so identical configs and
//! seeds produce byte-identical CSV files.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use crate::grid::GridGraph;
use crate::lifelong::{
    run_lifelong, FailPolicy, LifelongRun, ReplanTrigger, RhcrConfig, SolverKind,
};
use crate::model::{Mode, Path};
use crate::prp::DestroyHeuristic;
use crate::scenario::{self, Instance, StreamKind};
use crate::search::Horizon;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MapRef {
    File(String),
    /// `builtin:swap-corridor` or `builtin:starvation-ring`; carries its own
    /// agents and stream, so the agents/stream axes collapse for it.
    Builtin(String),
}

impl MapRef {
    pub fn label(&self) -> &str {
        match self {
            MapRef::File(p) => p.rsplit('/').next().unwrap_or(p),
            MapRef::Builtin(name) => name,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamSpec {
    pub kind: StreamKind,
}

impl StreamSpec {
    pub fn label(&self) -> String {
        match self.kind {
            StreamKind::Uniform => "uniform".to_string(),
            StreamKind::Dense(m) => format!("dense{m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverName {
    Prp,
    Lns,
    Cbs,
    Pibt,
}

#[derive(Debug, Clone)]
pub struct SolverSpec {
    pub name: SolverName,
    pub mode: Mode,
    pub restarts: u32,
    pub iterations: u32,
    pub neighborhood: usize,
}

impl SolverSpec {
    pub fn label(&self) -> String {
        let base = match self.name {
            SolverName::Prp => "prp",
            SolverName::Lns => "lns",
            SolverName::Cbs => "cbs",
            SolverName::Pibt => return "pibt".to_string(),
        };
        match self.mode {
            Mode::Classic => base.to_string(),
            Mode::Transient => format!("{base}t"),
        }
    }

    pub fn kind(&self) -> SolverKind {
        match self.name {
            SolverName::Prp => SolverKind::Prp { restarts: self.restarts },
            SolverName::Lns => SolverKind::Lns {
                iterations: self.iterations,
                neighborhood: self.neighborhood,
                heuristics: vec![DestroyHeuristic::Random, DestroyHeuristic::MapBased],
            },
            SolverName::Cbs => SolverKind::Cbs,
            SolverName::Pibt => SolverKind::Pibt,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub maps: Vec<MapRef>,
    pub agents: Vec<usize>,
    pub streams: Vec<StreamSpec>,
    pub solvers: Vec<SolverSpec>,
    pub seeds: Vec<u64>,
    pub steps: u32,
    pub k: u32,
    pub w: Horizon,
    pub replan: ReplanTrigger,
    pub node_budget: Option<u64>,
    pub time_budget_ms: Option<u64>,
    pub fail_policy: FailPolicy,
    pub checkpoints: Vec<u32>,
}

/// Parse the flat key-value + repeated-block config format.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, String> {
    let mut top: HashMap<String, String> = HashMap::new();
    let mut solvers: Vec<HashMap<String, String>> = Vec::new();
    let mut streams: Vec<HashMap<String, String>> = Vec::new();
    enum Section {
        Top,
        Solver,
        Stream,
    }
    let mut section = Section::Top;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "[solver]" => {
                solvers.push(HashMap::new());
                section = Section::Solver;
                continue;
            }
            "[stream]" => {
                streams.push(HashMap::new());
                section = Section::Stream;
                continue;
            }
            _ => {}
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", lineno + 1))?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        match section {
            Section::Top => top.insert(key, value),
            Section::Solver => solvers.last_mut().unwrap().insert(key, value),
            Section::Stream => streams.last_mut().unwrap().insert(key, value),
        };
    }

    let list = |key: &str| -> Vec<String> {
        top.get(key)
            .map(|v| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
            .unwrap_or_default()
    };
    let maps: Vec<MapRef> = list("map")
        .into_iter()
        .map(|m| match m.strip_prefix("builtin:") {
            Some(name) => MapRef::Builtin(name.to_string()),
            None => MapRef::File(m),
        })
        .collect();
    if maps.is_empty() {
        return Err("config needs at least one `map`".into());
    }
    let agents: Vec<usize> = list("agents")
        .iter()
        .map(|s| s.parse().map_err(|_| format!("bad agents value `{s}`")))
        .collect::<Result<_, _>>()?;
    let seeds: Vec<u64> = list("seeds")
        .iter()
        .map(|s| s.parse().map_err(|_| format!("bad seed `{s}`")))
        .collect::<Result<_, _>>()?;
    if seeds.is_empty() {
        return Err("config needs a nonempty `seeds` list".into());
    }
    let checkpoints: Vec<u32> = if top.contains_key("checkpoints") {
        list("checkpoints")
            .iter()
            .map(|s| s.parse().map_err(|_| format!("bad checkpoint `{s}`")))
            .collect::<Result<_, _>>()?
    } else {
        vec![300, 500, 1000]
    };
    let get_u32 = |key: &str, default: u32| -> Result<u32, String> {
        top.get(key).map_or(Ok(default), |s| s.parse().map_err(|_| format!("bad `{key}`: {s}")))
    };
    let steps = get_u32("steps", 500)?;
    let k = get_u32("k", 5)?;
    let w: Horizon = top.get("w").map_or(Ok(Horizon::Finite(10)), |s| s.parse())?;
    let replan = match top.get("replan").map(|s| s.as_str()) {
        None | Some("periodic") => ReplanTrigger::Periodic,
        Some("every-step") => ReplanTrigger::EveryStep,
        Some(other) => return Err(format!("bad `replan`: {other}")),
    };
    let node_budget = match top.get("node_budget") {
        None => None,
        Some(s) => Some(s.parse().map_err(|_| format!("bad `node_budget`: {s}"))?),
    };
    let time_budget_ms = match top.get("time_budget_ms") {
        None => None,
        Some(s) => Some(s.parse().map_err(|_| format!("bad `time_budget_ms`: {s}"))?),
    };
    let fail_policy = match top.get("fail_policy").map(|s| s.as_str()) {
        None | Some("partial-plan") => FailPolicy::PartialPlan,
        Some("all-wait") => FailPolicy::AllWait,
        Some(other) => return Err(format!("bad `fail_policy`: {other}")),
    };

    let stream_specs: Vec<StreamSpec> = if streams.is_empty() {
        vec![StreamSpec { kind: StreamKind::Uniform }]
    } else {
        streams
            .iter()
            .map(|s| {
                let kind = match s.get("kind").map(|s| s.as_str()) {
                    None | Some("uniform") => StreamKind::Uniform,
                    Some("dense") => {
                        let m = s
                            .get("targets")
                            .ok_or("dense stream needs `targets`")?
                            .parse()
                            .map_err(|_| "bad `targets`".to_string())?;
                        StreamKind::Dense(m)
                    }
                    Some(other) => return Err(format!("bad stream kind `{other}`")),
                };
                Ok(StreamSpec { kind })
            })
            .collect::<Result<_, String>>()?
    };

    let solver_specs: Vec<SolverSpec> = solvers
        .iter()
        .map(|s| {
            let name = match s.get("name").map(|s| s.as_str()) {
                Some("prp") => SolverName::Prp,
                Some("lns") => SolverName::Lns,
                Some("cbs") => SolverName::Cbs,
                Some("pibt") => SolverName::Pibt,
                other => return Err(format!("bad solver name `{other:?}`")),
            };
            let mode = match s.get("mode").map(|s| s.as_str()) {
                None | Some("classic") => Mode::Classic,
                Some("transient") => Mode::Transient,
                Some(other) => return Err(format!("bad mode `{other}`")),
            };
            let num = |key: &str, default: u32| -> Result<u32, String> {
                s.get(key).map_or(Ok(default), |v| v.parse().map_err(|_| format!("bad `{key}`")))
            };
            Ok(SolverSpec {
                name,
                mode,
                restarts: num("restarts", 4)?,
                iterations: num("iterations", 100)?,
                neighborhood: num("neighborhood", 4)? as usize,
            })
        })
        .collect::<Result<_, String>>()?;
    if solver_specs.is_empty() {
        return Err("config needs at least one [solver] block".into());
    }

    Ok(ExperimentConfig {
        maps,
        agents: if agents.is_empty() { vec![2] } else { agents },
        streams: stream_specs,
        solvers: solver_specs,
        seeds,
        steps,
        k,
        w,
        replan,
        node_budget,
        time_budget_ms,
        fail_policy,
        checkpoints,
    })
}

#[derive(Debug, Clone)]
struct Job {
    map_idx: usize,
    agents: usize,
    stream: StreamSpec,
    solver: SolverSpec,
    seed: u64,
    builtin: bool,
}

#[derive(Debug)]
struct RowResult {
    job: Job,
    outcome: Result<LifelongRun, String>,
    runtime_ms: u128,
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub csv: String,
    pub summary: String,
    pub timings: String,
    pub failed_rows: usize,
}

fn builtin_instance(name: &str) -> Result<Instance, String> {
    match name {
        "swap-corridor" => Ok(scenario::make_swap_corridor()),
        "starvation-ring" => Ok(scenario::make_starvation_ring()),
        other => Err(format!("unknown builtin instance `{other}`")),
    }
}

/// Run the whole matrix with up to `workers` threads. `load_map` resolves map
/// files to parsed graphs (the CLI reads from disk; tests can inject maps).
pub fn run_experiment(
    cfg: &ExperimentConfig,
    load_map: &dyn Fn(&str) -> Result<GridGraph, String>,
    workers: usize,
) -> Result<ExperimentOutput, String> {
    // resolve maps once
    let mut graphs: Vec<Option<GridGraph>> = Vec::new();
    for m in &cfg.maps {
        match m {
            MapRef::File(p) => graphs.push(Some(load_map(p)?)),
            MapRef::Builtin(name) => {
                builtin_instance(name)?; // validate the name early
                graphs.push(None);
            }
        }
    }

    let mut jobs: Vec<Job> = Vec::new();
    for (map_idx, m) in cfg.maps.iter().enumerate() {
        let builtin = matches!(m, MapRef::Builtin(_));
        let agent_axis: Vec<usize> = if builtin { vec![0] } else { cfg.agents.clone() };
        let stream_axis: Vec<StreamSpec> = if builtin {
            vec![StreamSpec { kind: StreamKind::Uniform }]
        } else {
            cfg.streams.clone()
        };
        for &agents in &agent_axis {
            for &stream in &stream_axis {
                for solver in &cfg.solvers {
                    for &seed in &cfg.seeds {
                        jobs.push(Job {
                            map_idx,
                            agents,
                            stream,
                            solver: solver.clone(),
                            seed,
                            builtin,
                        });
                    }
                }
            }
        }
    }

    let results: Mutex<Vec<Option<RowResult>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next: AtomicUsize = AtomicUsize::new(0);
    let workers = workers.max(1).min(jobs.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= jobs.len() {
                    break;
                }
                let job = jobs[idx].clone();
                let t0 = std::time::Instant::now();
                let outcome = catch_unwind(AssertUnwindSafe(|| {
                    run_one(&job, cfg, &cfg.maps[job.map_idx], graphs[job.map_idx].as_ref())
                }))
                .map_err(|_| "run panicked".to_string())
                .and_then(|r| r);
                let row = RowResult { job, outcome, runtime_ms: t0.elapsed().as_millis() };
                results.lock().unwrap()[idx] = Some(row);
            });
        }
    });

    let rows: Vec<RowResult> =
        results.into_inner().unwrap().into_iter().map(Option::unwrap).collect();
    Ok(render_output(cfg, &rows))
}

fn run_one(
    job: &Job,
    cfg: &ExperimentConfig,
    map_ref: &MapRef,
    graph: Option<&GridGraph>,
) -> Result<LifelongRun, String> {
    let instance = match map_ref {
        MapRef::Builtin(name) => builtin_instance(name)?,
        MapRef::File(_) => {
            let g = graph.expect("file maps are preloaded");
            scenario::make_random_instance(g, job.agents, job.stream.kind, job.seed)
                .map_err(|e| e.to_string())?
        }
    };
    let rhcr = RhcrConfig {
        solver: job.solver.kind(),
        mode: job.solver.mode,
        period: cfg.k,
        horizon: cfg.w,
        replan: cfg.replan,
        node_budget: cfg.node_budget,
        time_budget: cfg.time_budget_ms.map(Duration::from_millis),
        fail_policy: cfg.fail_policy,
        seed: job.seed,
    };
    Ok(run_lifelong(&instance.graph, &instance.starts, instance.stream, &rhcr, cfg.steps, &cfg.checkpoints))
}

fn render_output(cfg: &ExperimentConfig, rows: &[RowResult]) -> ExperimentOutput {
    let mut checkpoints: Vec<u32> = cfg.checkpoints.iter().copied().filter(|&c| c <= cfg.steps).collect();
    checkpoints.sort_unstable();
    checkpoints.dedup();

    let mut csv = String::from("map,agents,stream,solver,mode,seed,steps,k,w,node_budget");
    for c in &checkpoints {
        let _ = write!(csv, ",throughput_{c}");
    }
    csv.push_str(",throughput_final,expansions,plan_failures,fail_policy_invocations,status\n");

    let mut timings = String::new();
    let mut failed = 0usize;
    // (map,agents,stream,solver) -> seed throughputs, for the summary
    let mut agg: HashMap<(String, usize, String, String), Vec<u64>> = HashMap::new();

    for (i, row) in rows.iter().enumerate() {
        let j = &row.job;
        let map_label = cfg.maps[j.map_idx].label().to_string();
        let (agents_label, stream_label) = if j.builtin {
            (2usize, "scripted".to_string())
        } else {
            (j.agents, j.stream.label())
        };
        let budget = cfg.node_budget.map_or(String::from("none"), |b| b.to_string());
        let _ = write!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            map_label,
            agents_label,
            stream_label,
            j.solver.label(),
            j.solver.mode,
            j.seed,
            cfg.steps,
            cfg.k,
            cfg.w,
            budget
        );
        match &row.outcome {
            Ok(run) => {
                for c in &checkpoints {
                    let v = run
                        .checkpoints
                        .iter()
                        .find(|(t, _)| t == c)
                        .map(|&(_, tp)| tp)
                        .unwrap_or(run.throughput);
                    let _ = write!(csv, ",{v}");
                }
                let _ = writeln!(
                    csv,
                    ",{},{},{},{},ok",
                    run.throughput,
                    run.stats.total_expansions,
                    run.stats.plan_failures,
                    run.stats.fail_policy_invocations
                );
                agg.entry((map_label.clone(), agents_label, stream_label, j.solver.label()))
                    .or_default()
                    .push(run.throughput);
            }
            Err(e) => {
                failed += 1;
                for _ in &checkpoints {
                    csv.push(',');
                }
                let _ = writeln!(csv, ",,,,,failed");
                let _ = writeln!(timings, "# row {i} failed: {e}");
            }
        }
        let _ = writeln!(
            timings,
            "row={} map={} solver={} seed={} runtime_ms={}",
            i,
            map_label,
            j.solver.label(),
            j.seed,
            row.runtime_ms
        );
    }

    // summary: rows = agents x stream per map, columns = solvers
    let mut summary = String::new();
    let solver_labels: Vec<String> = {
        let mut seen = Vec::new();
        for s in &cfg.solvers {
            let l = s.label();
            if !seen.contains(&l) {
                seen.push(l);
            }
        }
        seen
    };
    for m in &cfg.maps {
        let map_label = m.label().to_string();
        let _ = writeln!(summary, "== {map_label} (mean final throughput over seeds) ==");
        let _ = write!(summary, "{:<8} {:<10}", "agents", "stream");
        for l in &solver_labels {
            let _ = write!(summary, " {l:>9}");
        }
        summary.push('\n');
        let mut combos: Vec<(usize, String)> = Vec::new();
        for key in agg.keys().filter(|k| k.0 == map_label) {
            let combo = (key.1, key.2.clone());
            if !combos.contains(&combo) {
                combos.push(combo);
            }
        }
        combos.sort();
        for (agents, stream) in combos {
            let _ = write!(summary, "{agents:<8} {stream:<10}");
            for l in &solver_labels {
                let key = (map_label.clone(), agents, stream.clone(), l.clone());
                match agg.get(&key) {
                    Some(values) => {
                        let mean = values.iter().sum::<u64>() as f64 / values.len() as f64;
                        let _ = write!(summary, " {mean:>9.1}");
                    }
                    None => {
                        let _ = write!(summary, " {:>9}", "-");
                    }
                }
            }
            summary.push('\n');
        }
    }

    ExperimentOutput { csv, summary, timings, failed_rows: failed }
}

// ---------------------------------------------------------------------------
// run logs and replay

/// Text log of one lifelong run: map, trajectories, events.
pub fn write_run_log(graph: &GridGraph, run: &LifelongRun) -> String {
    let mut s = String::from("run v1\n");
    let _ = write!(s, "height {}\nwidth {}\n", graph.height(), graph.width());
    for line in graph.to_map_text().lines().skip(4) {
        s.push_str(line);
        s.push('\n');
    }
    let steps = run.trajectories.first().map_or(0, |t| t.len().saturating_sub(1));
    let _ = writeln!(s, "steps {steps}");
    let _ = writeln!(s, "throughput {}", run.throughput);
    let paths: Vec<Path> = run
        .trajectories
        .iter()
        .enumerate()
        .map(|(i, t)| Path::new(i, t.clone()))
        .collect();
    s.push_str(&crate::model::serialize_paths(graph, &paths));
    for e in &run.events {
        s.push_str(&e.render());
        s.push('\n');
    }
    s
}

/// Parsed back form of [`write_run_log`], enough to replay.
pub struct RunLog {
    pub graph: GridGraph,
    pub trajectories: Vec<Path>,
    pub steps: usize,
    pub throughput: u64,
}

pub fn parse_run_log(text: &str) -> Result<RunLog, String> {
    let mut lines = text.lines();
    if lines.next() != Some("run v1") {
        return Err("missing `run v1` header".into());
    }
    let height: u32 = lines
        .next()
        .and_then(|l| l.strip_prefix("height "))
        .and_then(|n| n.parse().ok())
        .ok_or("missing height")?;
    let width: u32 = lines
        .next()
        .and_then(|l| l.strip_prefix("width "))
        .and_then(|n| n.parse().ok())
        .ok_or("missing width")?;
    let mut map_text = format!("type octile\nheight {height}\nwidth {width}\nmap\n");
    for _ in 0..height {
        map_text.push_str(lines.next().ok_or("missing map row")?);
        map_text.push('\n');
    }
    let graph = GridGraph::parse(&map_text).map_err(|e| e.to_string())?;
    let steps: usize = lines
        .next()
        .and_then(|l| l.strip_prefix("steps "))
        .and_then(|n| n.parse().ok())
        .ok_or("missing steps")?;
    let throughput: u64 = lines
        .next()
        .and_then(|l| l.strip_prefix("throughput "))
        .and_then(|n| n.parse().ok())
        .ok_or("missing throughput")?;
    let mut traj_text = String::new();
    for line in lines {
        if line.contains("->") || (line.contains(':') && !line.starts_with("t=")) {
            traj_text.push_str(line);
            traj_text.push('\n');
        }
    }
    let trajectories = crate::model::parse_paths(&graph, &traj_text)?;
    Ok(RunLog { graph, trajectories, steps, throughput })
}

/// ASCII board per step: `@` blocked, `.` free, agents as `0-9a-z` by id.
pub fn replay_frames(log: &RunLog) -> Vec<String> {
    if log.trajectories.is_empty() {
        return Vec::new();
    }
    let glyph = |agent: usize| -> char {
        let idx = agent % 36;
        if idx < 10 {
            (b'0' + idx as u8) as char
        } else {
            (b'a' + (idx - 10) as u8) as char
        }
    };
    let mut frames = Vec::with_capacity(log.steps + 1);
    for t in 0..=log.steps {
        let mut board: Vec<Vec<char>> = (0..log.graph.height())
            .map(|y| {
                (0..log.graph.width())
                    .map(|x| if log.graph.is_passable(crate::grid::Cell::new(x, y)) { '.' } else { '@' })
                    .collect()
            })
            .collect();
        for p in &log.trajectories {
            let cell = log.graph.cell_of(p.at(t as u32));
            board[cell.y as usize][cell.x as usize] = glyph(p.agent);
        }
        let mut frame = format!("t={t}\n");
        for row in board {
            frame.extend(row);
            frame.push('\n');
        }
        frames.push(frame);
    }
    frames
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Cell;
    use crate::lifelong::RunStats;

    const SMALL_CONFIG: &str = "\
# tiny smoke config
map = builtin:swap-corridor
steps = 40
k = 1
w = 10
replan = every-step
seeds = 1
node_budget = 50000
checkpoints = 20,40

[solver]
name = prp
mode = transient
";

    #[test]
    fn parse_and_run_tiny_config() {
        let cfg = parse_config(SMALL_CONFIG).unwrap();
        assert_eq!(cfg.maps, vec![MapRef::Builtin("swap-corridor".into())]);
        assert_eq!(cfg.checkpoints, vec![20, 40]);
        let out = run_experiment(&cfg, &|p| Err(format!("no maps expected, got {p}")), 2).unwrap();
        assert_eq!(out.failed_rows, 0);
        let lines: Vec<&str> = out.csv.lines().collect();
        assert_eq!(lines.len(), 2, "header + one row:\n{}", out.csv);
        assert!(lines[0].starts_with("map,agents,stream,solver,mode,seed"));
        assert!(lines[1].starts_with("swap-corridor,2,scripted,prpt,transient,1,40,1,10,50000,"));
        assert!(lines[1].ends_with(",ok"));
    }

    #[test]
    fn csv_is_deterministic_across_runs() {
        let cfg = parse_config(SMALL_CONFIG).unwrap();
        let a = run_experiment(&cfg, &|_| unreachable!(), 2).unwrap();
        let b = run_experiment(&cfg, &|_| unreachable!(), 1).unwrap();
        assert_eq!(a.csv, b.csv);
        assert_eq!(a.summary, b.summary);
    }

    #[test]
    fn file_maps_expand_the_matrix() {
        let cfg = parse_config(
            "map = grid.map\nagents = 2,3\nsteps = 10\nk = 2\nw = 5\nseeds = 1,2\n[stream]\nkind = uniform\n[solver]\nname = pibt\n",
        )
        .unwrap();
        let out = run_experiment(
            &cfg,
            &|_| Ok(GridGraph::open(5, 5)),
            4,
        )
        .unwrap();
        // 1 map x 2 agent counts x 1 stream x 1 solver x 2 seeds
        assert_eq!(out.csv.lines().count(), 1 + 4);
        assert_eq!(out.failed_rows, 0);
    }

    #[test]
    fn replay_round_trip_positions() {
        let g = GridGraph::open(4, 1);
        let v = |x: u32| g.vertex_at(Cell::new(x, 0)).unwrap();
        let run = LifelongRun {
            trajectories: vec![vec![v(0), v(1), v(2)]],
            throughput: 1,
            checkpoints: vec![],
            events: vec![],
            stats: RunStats::default(),
        };
        let log_text = write_run_log(&g, &run);
        let log = parse_run_log(&log_text).unwrap();
        assert_eq!(log.steps, 2);
        assert_eq!(log.throughput, 1);
        let frames = replay_frames(&log);
        assert_eq!(frames.len(), 3);
        assert_eq!(frames[0], "t=0\n0...\n");
        assert_eq!(frames[1], "t=1\n.0..\n");
        assert_eq!(frames[2], "t=2\n..0.\n");
    }

    #[test]
    fn empty_trajectory_zero_frames() {
        let g = GridGraph::open(2, 2);
        let run = LifelongRun {
            trajectories: vec![],
            throughput: 0,
            checkpoints: vec![],
            events: vec![],
            stats: RunStats::default(),
        };
        let log = parse_run_log(&write_run_log(&g, &run)).unwrap();
        assert!(replay_frames(&log).is_empty());
    }

    #[test]
    fn corrupt_log_is_a_diagnostic() {
        assert!(parse_run_log("not a log").is_err());
    }
}
