//! Rolling-horizon lifelong execution: plan, execute a bounded prefix,
//! hand out fresh targets on every reach, repeat.
//!
//! Each planning period the configured solver plans from the agents' current
//! positions to their current targets, ignoring conflicts at or beyond the
//! horizon `w`. The engine executes `min(k, plan length)` steps (short plans
//! park the agent on its final vertex), counts a reach whenever an agent ends
//! a step on its current target, and draws the next target immediately; the
//! planner sees it at the next planning period. Every committed prefix is
//! re-validated by the engine, so executed trajectories stay collision-free
//! no matter what a solver returns; invalid or failed plans go through the
//! fail policy.
//!
//! PIBT is inherently single-step: the engine calls it once per simulated
//! step regardless of `k`, so it always acts on up-to-date targets.

use std::time::{Duration, Instant};

use rand::prelude::*;
use rand::rngs::StdRng;

use crate::cbs::{cbs_solve, CbsConfig, ParkingRule};
use crate::grid::{GridGraph, Vertex};
use crate::model::{Mode, Path};
use crate::pibt::PibtState;
use crate::prp::{lns_solve, prp_solve, DestroyHeuristic, LnsConfig, PriorityOrder, PrpConfig};
use crate::search::Horizon;

/// Where the next target of an agent comes from.
#[derive(Debug, Clone)]
pub enum TargetStream {
    /// Uniform over all passable vertices.
    Uniform { seed: u64 },
    /// Uniform over a fixed list ("dense targets"); the list may repeat
    /// across agents and a draw may equal the agent's position.
    DenseSet { vertices: Vec<Vertex>, seed: u64 },
    /// Fixed cyclic sequence per agent.
    Scripted { sequences: Vec<Vec<Vertex>> },
}

/// Materialized stream state; draws are deterministic in the seed and the
/// order of reach events.
pub struct StreamState {
    stream: TargetStream,
    rng: StdRng,
    cursor: Vec<usize>,
}

impl StreamState {
    pub fn new(stream: TargetStream, agents: usize) -> Self {
        let seed = match &stream {
            TargetStream::Uniform { seed } => *seed,
            TargetStream::DenseSet { seed, .. } => *seed,
            TargetStream::Scripted { .. } => 0,
        };
        StreamState { stream, rng: StdRng::seed_from_u64(seed), cursor: vec![0; agents] }
    }

    pub fn next(&mut self, graph: &GridGraph, agent: usize) -> Vertex {
        match &self.stream {
            TargetStream::Uniform { .. } => {
                Vertex(self.rng.gen_range(0..graph.num_vertices() as u32))
            }
            TargetStream::DenseSet { vertices, .. } => {
                vertices[self.rng.gen_range(0..vertices.len())]
            }
            TargetStream::Scripted { sequences } => {
                let seq = &sequences[agent];
                let v = seq[self.cursor[agent] % seq.len()];
                self.cursor[agent] += 1;
                v
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplanTrigger {
    /// Replan every `period` steps.
    Periodic,
    /// Replan after every executed step.
    EveryStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailPolicy {
    /// Everyone waits out the period.
    AllWait,
    /// Agents with planned paths execute them, the rest wait; degrades to
    /// all-wait if the combined motion collides.
    PartialPlan,
}

#[derive(Debug, Clone)]
pub enum SolverKind {
    Prp { restarts: u32 },
    Lns { iterations: u32, neighborhood: usize, heuristics: Vec<DestroyHeuristic> },
    Cbs,
    Pibt,
}

#[derive(Debug, Clone)]
pub struct RhcrConfig {
    pub solver: SolverKind,
    pub mode: Mode,
    /// Steps executed between replans (`k`); must satisfy `k <= w`.
    pub period: u32,
    /// Planning horizon (`w`).
    pub horizon: Horizon,
    pub replan: ReplanTrigger,
    /// Per-agent expansion budget for the underlying searches.
    pub node_budget: Option<u64>,
    /// Wall-clock budget per planning period.
    pub time_budget: Option<Duration>,
    pub fail_policy: FailPolicy,
    pub seed: u64,
}

impl RhcrConfig {
    pub fn new(solver: SolverKind, mode: Mode, period: u32, horizon: Horizon) -> Self {
        if let Horizon::Finite(w) = horizon {
            assert!(w >= period, "horizon must cover the planning period");
        }
        assert!(period >= 1);
        RhcrConfig {
            solver,
            mode,
            period,
            horizon,
            replan: ReplanTrigger::Periodic,
            node_budget: None,
            time_budget: None,
            fail_policy: FailPolicy::PartialPlan,
            seed: 0,
        }
    }

    pub fn every_step(mut self) -> Self {
        self.replan = ReplanTrigger::EveryStep;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    Reach { t: u32, agent: usize, target: Vertex },
    PlanOk { t: u32, expansions: u64 },
    PlanFail { t: u32, agent: Option<usize> },
    FailPolicy { t: u32, degraded: bool },
}

impl Event {
    pub fn render(&self) -> String {
        match self {
            Event::Reach { t, agent, target } => {
                format!("t={t} event=reach agent={agent} target={target}")
            }
            Event::PlanOk { t, expansions } => {
                format!("t={t} event=plan_ok expansions={expansions}")
            }
            Event::PlanFail { t, agent } => match agent {
                Some(a) => format!("t={t} event=plan_fail agent={a}"),
                None => format!("t={t} event=plan_fail"),
            },
            Event::FailPolicy { t, degraded } => {
                format!("t={t} event=fail_policy degraded={degraded}")
            }
        }
    }
}

#[derive(Debug, Default, Clone)]
pub struct RunStats {
    pub total_expansions: u64,
    pub plans_ok: u64,
    pub plan_failures: u64,
    pub fail_policy_invocations: u64,
    pub runtime: Duration,
}

#[derive(Debug)]
pub struct LifelongRun {
    /// Position of each agent at every step `0..=total_steps`.
    pub trajectories: Vec<Vec<Vertex>>,
    pub throughput: u64,
    /// Throughput at each requested checkpoint step.
    pub checkpoints: Vec<(u32, u64)>,
    pub events: Vec<Event>,
    pub stats: RunStats,
}

impl LifelongRun {
    /// Collision-freeness of the executed trajectories; the engine maintains
    /// this, the method re-checks it from scratch.
    pub fn trajectories_collision_free(&self) -> bool {
        if self.trajectories.is_empty() {
            return true;
        }
        let steps = self.trajectories[0].len();
        for t in 0..steps {
            for i in 0..self.trajectories.len() {
                for j in (i + 1)..self.trajectories.len() {
                    let (a, b) = (&self.trajectories[i], &self.trajectories[j]);
                    if a[t] == b[t] {
                        return false;
                    }
                    if t + 1 < steps && a[t] == b[t + 1] && a[t + 1] == b[t] {
                        return false;
                    }
                }
            }
        }
        true
    }
}

fn period_seed(seed: u64, period: u64) -> u64 {
    seed ^ period.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// One consecutive configuration pair must be collision-free and physical.
fn step_ok(graph: &GridGraph, from: &[Vertex], to: &[Vertex]) -> bool {
    for i in 0..from.len() {
        if from[i] != to[i] && !graph.adjacent(from[i], to[i]) {
            return false;
        }
        for j in (i + 1)..from.len() {
            if to[i] == to[j] {
                return false;
            }
            if to[i] == from[j] && to[j] == from[i] && from[i] != from[j] {
                return false;
            }
        }
    }
    true
}

enum PlanOutcome {
    Planned(Vec<Path>),
    Failed { partial: Vec<Path>, agent: Option<usize> },
}

/// Run the lifelong loop for `total_steps` simulated steps.
pub fn run_lifelong(
    graph: &GridGraph,
    starts: &[Vertex],
    stream: TargetStream,
    cfg: &RhcrConfig,
    total_steps: u32,
    checkpoints: &[u32],
) -> LifelongRun {
    let t0 = Instant::now();
    let n = starts.len();
    let mut positions = starts.to_vec();
    let mut trajectories: Vec<Vec<Vertex>> = starts.iter().map(|&s| vec![s]).collect();
    let mut stream = StreamState::new(stream, n);
    let mut targets: Vec<Vertex> = (0..n).map(|i| stream.next(graph, i)).collect();
    let mut events = Vec::new();
    let mut stats = RunStats::default();
    let mut throughput = 0u64;
    let mut checkpoint_list: Vec<u32> = checkpoints.to_vec();
    checkpoint_list.sort_unstable();
    checkpoint_list.dedup();
    let mut recorded: Vec<(u32, u64)> = Vec::new();

    let mut pibt = match cfg.solver {
        SolverKind::Pibt => Some(PibtState::new(positions.clone(), cfg.seed)),
        _ => None,
    };
    let k = match cfg.replan {
        ReplanTrigger::EveryStep => 1,
        ReplanTrigger::Periodic => cfg.period.max(1),
    };

    let mut t = 0u32;
    let mut period_idx = 0u64;
    while t < total_steps {
        let steps_now = k.min(total_steps - t);
        let seed = period_seed(cfg.seed, period_idx);
        period_idx += 1;

        // next configurations for each of the steps_now steps
        let configs: Vec<Vec<Vertex>> = match &cfg.solver {
            SolverKind::Pibt => {
                // handled inline: PIBT sees fresh targets every step
                let state = pibt.as_mut().unwrap();
                let mut out = Vec::with_capacity(steps_now as usize);
                for _ in 0..steps_now {
                    let step_targets: Vec<Option<Vertex>> =
                        targets.iter().map(|&x| Some(x)).collect();
                    let next = state.step(graph, &step_targets);
                    out.push(next.clone());
                    positions = next;
                    t += 1;
                    commit_step(
                        graph,
                        &mut trajectories,
                        &positions,
                        &mut targets,
                        &mut stream,
                        &mut throughput,
                        &mut events,
                        t,
                    );
                    record_checkpoints(&checkpoint_list, &mut recorded, t, throughput);
                }
                // already committed
                trajectories_tail_sync(&trajectories, &positions);
                continue;
            }
            solver => {
                let outcome = plan_period(graph, &positions, &targets, solver, cfg, seed, &mut stats);
                match outcome {
                    PlanOutcome::Planned(paths) => {
                        let configs = prefix_configs(&paths, &positions, steps_now);
                        if prefix_valid(graph, &positions, &configs) {
                            events.push(Event::PlanOk { t, expansions: stats.total_expansions });
                            stats.plans_ok += 1;
                            configs
                        } else {
                            // solver produced something unsound: fail policy
                            stats.plan_failures += 1;
                            events.push(Event::PlanFail { t, agent: None });
                            fail_policy_configs(graph, &positions, &paths, steps_now, cfg, &mut stats, &mut events, t)
                        }
                    }
                    PlanOutcome::Failed { partial, agent } => {
                        stats.plan_failures += 1;
                        events.push(Event::PlanFail { t, agent });
                        fail_policy_configs(graph, &positions, &partial, steps_now, cfg, &mut stats, &mut events, t)
                    }
                }
            }
        };

        for next in configs {
            positions = next;
            t += 1;
            commit_step(
                graph,
                &mut trajectories,
                &positions,
                &mut targets,
                &mut stream,
                &mut throughput,
                &mut events,
                t,
            );
            record_checkpoints(&checkpoint_list, &mut recorded, t, throughput);
        }
    }

    stats.runtime = t0.elapsed();
    LifelongRun { trajectories, throughput, checkpoints: recorded, events, stats }
}

fn trajectories_tail_sync(trajectories: &[Vec<Vertex>], positions: &[Vertex]) {
    debug_assert!(trajectories
        .iter()
        .zip(positions)
        .all(|(tr, &p)| *tr.last().unwrap() == p));
}

#[allow(clippy::too_many_arguments)]
fn commit_step(
    graph: &GridGraph,
    trajectories: &mut [Vec<Vertex>],
    positions: &[Vertex],
    targets: &mut [Vertex],
    stream: &mut StreamState,
    throughput: &mut u64,
    events: &mut Vec<Event>,
    t: u32,
) {
    for (i, &p) in positions.iter().enumerate() {
        trajectories[i].push(p);
    }
    for i in 0..positions.len() {
        if positions[i] == targets[i] {
            *throughput += 1;
            events.push(Event::Reach { t, agent: i, target: targets[i] });
            targets[i] = stream.next(graph, i);
        }
    }
}

fn record_checkpoints(list: &[u32], recorded: &mut Vec<(u32, u64)>, t: u32, throughput: u64) {
    if list.contains(&t) {
        recorded.push((t, throughput));
    }
}

fn prefix_configs(paths: &[Path], positions: &[Vertex], steps: u32) -> Vec<Vec<Vertex>> {
    (1..=steps)
        .map(|s| {
            positions
                .iter()
                .enumerate()
                .map(|(i, &cur)| paths.iter().find(|p| p.agent == i).map_or(cur, |p| p.at(s)))
                .collect()
        })
        .collect()
}

fn prefix_valid(graph: &GridGraph, positions: &[Vertex], configs: &[Vec<Vertex>]) -> bool {
    let mut prev = positions;
    for next in configs {
        if !step_ok(graph, prev, next) {
            return false;
        }
        prev = next;
    }
    true
}

#[allow(clippy::too_many_arguments)]
fn fail_policy_configs(
    graph: &GridGraph,
    positions: &[Vertex],
    partial: &[Path],
    steps: u32,
    cfg: &RhcrConfig,
    stats: &mut RunStats,
    events: &mut Vec<Event>,
    t: u32,
) -> Vec<Vec<Vertex>> {
    stats.fail_policy_invocations += 1;
    let all_wait: Vec<Vec<Vertex>> = (0..steps).map(|_| positions.to_vec()).collect();
    match cfg.fail_policy {
        FailPolicy::AllWait => {
            events.push(Event::FailPolicy { t, degraded: false });
            all_wait
        }
        FailPolicy::PartialPlan => {
            // planned agents move, everyone else waits; checked as a whole
            let mut start_ok = true;
            for p in partial {
                if p.steps.first() != Some(&positions[p.agent]) {
                    start_ok = false;
                }
            }
            let configs = prefix_configs(partial, positions, steps);
            if start_ok && prefix_valid(graph, positions, &configs) {
                events.push(Event::FailPolicy { t, degraded: false });
                configs
            } else {
                events.push(Event::FailPolicy { t, degraded: true });
                all_wait
            }
        }
    }
}

fn plan_period(
    graph: &GridGraph,
    positions: &[Vertex],
    targets: &[Vertex],
    solver: &SolverKind,
    cfg: &RhcrConfig,
    seed: u64,
    stats: &mut RunStats,
) -> PlanOutcome {
    match solver {
        SolverKind::Prp { restarts } => {
            let prp_cfg = PrpConfig {
                mode: cfg.mode,
                order: PriorityOrder::DistanceDescending,
                restarts: *restarts,
                horizon: cfg.horizon,
                node_budget: cfg.node_budget,
                seed,
            };
            let run = prp_solve(graph, positions, targets, &prp_cfg);
            stats.total_expansions += run.stats.expansions;
            match run.result {
                Ok(sol) => PlanOutcome::Planned(sol.paths),
                Err(f) => PlanOutcome::Failed { partial: f.partial, agent: Some(f.first_unplannable) },
            }
        }
        SolverKind::Lns { iterations, neighborhood, heuristics } => {
            let lns_cfg = LnsConfig {
                mode: cfg.mode,
                horizon: cfg.horizon,
                iterations: *iterations,
                time_budget: cfg.time_budget,
                neighborhood: *neighborhood,
                heuristics: heuristics.clone(),
                node_budget: cfg.node_budget,
                restarts: 4,
                seed,
            };
            let run = lns_solve(graph, positions, targets, &lns_cfg);
            stats.total_expansions += run.stats.expansions;
            match run.result {
                Ok(sol) => PlanOutcome::Planned(sol.paths),
                Err(f) => PlanOutcome::Failed { partial: f.partial, agent: Some(f.first_unplannable) },
            }
        }
        SolverKind::Cbs => {
            let cbs_cfg = CbsConfig {
                mode: cfg.mode,
                horizon: cfg.horizon,
                node_budget: cfg.node_budget.unwrap_or(50_000),
                low_level_budget: None,
                parking: ParkingRule::Standard,
                time_budget: cfg.time_budget,
            };
            let run = cbs_solve(graph, positions, targets, &cbs_cfg);
            stats.total_expansions += run.stats.low_level_expansions;
            match run.result {
                Ok(sol) => PlanOutcome::Planned(sol.paths),
                Err(_) => PlanOutcome::Failed { partial: Vec::new(), agent: None },
            }
        }
        SolverKind::Pibt => unreachable!("pibt is stepped inline"),
    }
}
