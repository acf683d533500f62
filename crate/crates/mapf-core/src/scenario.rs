//! Instance constructors: the two pathological lifelong cases and randomized
//! benchmark-style instances, plus a text fixture format.
//!
//! The geometries of the two pathological cases are pinned by behavioral
//! contracts rather than by pictures: construction tests prove the swap
//! corridor is classically unsolvable yet transiently solvable, and the
//! starvation ring was found by [`search_starvation_ring`] (see
//! `examples/find_ring.rs`) and frozen here after verifying its deadlock /
//! starvation / rotation behavior under every solver.

use std::fmt;

use rand::prelude::*;
use rand::rngs::StdRng;
use thiserror::Error;

use crate::grid::{Cell, GridGraph, Vertex};
use crate::lifelong::{
    run_lifelong, FailPolicy, ReplanTrigger, RhcrConfig, SolverKind, StreamState, TargetStream,
};
use crate::model::Mode;
use crate::search::Horizon;

/// Agents with starts and a target stream; one-shot targets are the first
/// draw of the stream.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: GridGraph,
    pub starts: Vec<Vertex>,
    pub stream: TargetStream,
}

impl Instance {
    /// First target of every agent, as a one-shot MAPF/TMAPF instance.
    pub fn one_shot_targets(&self) -> Vec<Vertex> {
        let mut state = StreamState::new(self.stream.clone(), self.starts.len());
        (0..self.starts.len()).map(|i| state.next(&self.graph, i)).collect()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("{agents} agents do not fit on {cells} passable cells")]
    TooManyAgents { agents: usize, cells: usize },
    #[error("dense target count {targets} exceeds {cells} passable cells")]
    TooManyTargets { targets: usize, cells: usize },
    #[error("fixture parse error: {0}")]
    BadFixture(String),
}

/// Target-stream request for random instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    Uniform,
    /// Uniform over a random fixed list of this many vertices.
    Dense(usize),
}

/// The corridor p1-p2-p3-p4 where the agents would have to swap: agent 0
/// goes p1 -> p3, agent 1 goes p3 -> p2, and the lifelong streams bounce each
/// agent between its start and its target. No classic solution exists; a
/// transient one does (proved by the joint-space oracle in tests).
pub fn make_swap_corridor() -> Instance {
    let graph = GridGraph::open(4, 1);
    let p = |x: u32| graph.vertex_at(Cell::new(x, 0)).unwrap();
    let starts = vec![p(0), p(2)];
    let stream = TargetStream::Scripted {
        sequences: vec![vec![p(2), p(0)], vec![p(1), p(2)]],
    };
    Instance { graph, starts, stream }
}

/// Uniformly random distinct starts plus the requested stream kind.
pub fn make_random_instance(
    graph: &GridGraph,
    agents: usize,
    kind: StreamKind,
    seed: u64,
) -> Result<Instance, InstanceError> {
    let cells = graph.num_vertices();
    if agents > cells {
        return Err(InstanceError::TooManyAgents { agents, cells });
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let mut all: Vec<Vertex> = graph.vertices().collect();
    all.shuffle(&mut rng);
    let starts: Vec<Vertex> = all[..agents].to_vec();
    let stream = match kind {
        StreamKind::Uniform => TargetStream::Uniform { seed: seed.wrapping_add(1) },
        StreamKind::Dense(m) => {
            if m > cells {
                return Err(InstanceError::TooManyTargets { targets: m, cells });
            }
            let mut pool: Vec<Vertex> = graph.vertices().collect();
            pool.shuffle(&mut rng);
            pool.truncate(m);
            TargetStream::DenseSet { vertices: pool, seed: seed.wrapping_add(1) }
        }
    };
    Ok(Instance { graph: graph.clone(), starts, stream })
}

/// Distinct starts and distinct targets for one-shot experiments.
pub fn make_random_one_shot(
    graph: &GridGraph,
    agents: usize,
    seed: u64,
) -> Option<(Vec<Vertex>, Vec<Vertex>)> {
    if agents > graph.num_vertices() {
        return None;
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let mut all: Vec<Vertex> = graph.vertices().collect();
    all.shuffle(&mut rng);
    let starts = all[..agents].to_vec();
    all.shuffle(&mut rng);
    let targets = all[..agents].to_vec();
    Some((starts, targets))
}

// ---------------------------------------------------------------------------
// fixture format

/// Serialize a scripted instance:
/// ```text
/// height 3
/// width 3
/// ...
/// .@.
/// ...
/// agent 0,0 : 2,0 0,0
/// ```
pub fn write_fixture(inst: &Instance) -> String {
    let sequences = match &inst.stream {
        TargetStream::Scripted { sequences } => sequences,
        _ => panic!("only scripted instances are stored as fixtures"),
    };
    let mut s = String::new();
    s.push_str(&format!("height {}\nwidth {}\n", inst.graph.height(), inst.graph.width()));
    let body = inst.graph.to_map_text();
    for line in body.lines().skip(4) {
        s.push_str(line);
        s.push('\n');
    }
    for (i, &start) in inst.starts.iter().enumerate() {
        let c = inst.graph.cell_of(start);
        let targets: Vec<String> = sequences[i]
            .iter()
            .map(|&v| {
                let c = inst.graph.cell_of(v);
                format!("{},{}", c.x, c.y)
            })
            .collect();
        s.push_str(&format!("agent {},{} : {}\n", c.x, c.y, targets.join(" ")));
    }
    s
}

pub fn parse_fixture(text: &str) -> Result<Instance, InstanceError> {
    let bad = |m: &str| InstanceError::BadFixture(m.to_string());
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
    let height: u32 = lines
        .next()
        .and_then(|l| l.strip_prefix("height "))
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| bad("missing height"))?;
    let width: u32 = lines
        .next()
        .and_then(|l| l.strip_prefix("width "))
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| bad("missing width"))?;
    let mut map_text = format!("type octile\nheight {height}\nwidth {width}\nmap\n");
    for _ in 0..height {
        let row = lines.next().ok_or_else(|| bad("missing map row"))?;
        map_text.push_str(row);
        map_text.push('\n');
    }
    let graph = GridGraph::parse(&map_text).map_err(|e| bad(&e.to_string()))?;
    let mut starts = Vec::new();
    let mut sequences = Vec::new();
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let rest = line.strip_prefix("agent ").ok_or_else(|| bad("expected agent line"))?;
        let (start_part, targets_part) = rest.split_once(':').ok_or_else(|| bad("missing `:`"))?;
        let parse_cell = |s: &str| -> Result<Vertex, InstanceError> {
            let (x, y) = s.trim().split_once(',').ok_or_else(|| bad("bad cell"))?;
            let cell = Cell::new(
                x.trim().parse().map_err(|_| bad("bad x"))?,
                y.trim().parse().map_err(|_| bad("bad y"))?,
            );
            graph.vertex_at(cell).ok_or_else(|| bad(&format!("cell {cell} not passable")))
        };
        starts.push(parse_cell(start_part)?);
        let mut seq = Vec::new();
        for part in targets_part.split_whitespace() {
            seq.push(parse_cell(part)?);
        }
        if seq.is_empty() {
            return Err(bad("agent without targets"));
        }
        sequences.push(seq);
    }
    Ok(Instance { graph, starts, stream: TargetStream::Scripted { sequences } })
}

// ---------------------------------------------------------------------------
// pathological case 2: the starvation ring

/// Ring maps that embed a chordless cycle in a grid: a 3x3 donut (8-cycle)
/// and a 3x4 donut (10-cycle).
fn ring_maps() -> Vec<GridGraph> {
    vec![
        GridGraph::parse("type octile\nheight 3\nwidth 3\nmap\n...\n.@.\n...\n").unwrap(),
        GridGraph::parse("type octile\nheight 4\nwidth 3\nmap\n...\n.@.\n.@.\n...\n").unwrap(),
    ]
}

/// The frozen fixture found by [`search_starvation_ring`].
pub const STARVATION_RING_FIXTURE: &str = include_str!("../fixtures/starvation_ring.txt");

/// Cycle instance with two agents bouncing between scripted targets, built so
/// that: (a) myopic horizons deadlock both modes (throughput 0); (b) long
/// horizons starve one agent under classic planning (throughput = steps/2);
/// (c) transient planning with any horizon above 2 reaches a target nearly
/// every step (throughput = steps - 1).
pub fn make_starvation_ring() -> Instance {
    parse_fixture(STARVATION_RING_FIXTURE).expect("frozen fixture parses")
}

fn ring_run(inst: &Instance, solver: SolverKind, mode: Mode, horizon: Horizon, steps: u32) -> u64 {
    let cfg = RhcrConfig {
        solver,
        mode,
        period: 1,
        horizon,
        replan: ReplanTrigger::EveryStep,
        node_budget: Some(200_000),
        time_budget: None,
        fail_policy: FailPolicy::AllWait,
        seed: 1,
    };
    run_lifelong(&inst.graph, &inst.starts, inst.stream.clone(), &cfg, steps, &[]).throughput
}

/// The behavioral contract of the starvation ring, checked over `steps`
/// simulated steps with every-step replanning.
pub fn starvation_ring_contract(inst: &Instance, steps: u32, include_slow: bool) -> bool {
    let prp = || SolverKind::Prp { restarts: 2 };
    // (c) transient rotation: steps - 1 for any horizon > 2
    for w in [Horizon::Finite(3), Horizon::Finite(10), Horizon::Infinite] {
        if ring_run(inst, prp(), Mode::Transient, w, steps) != (steps - 1) as u64 {
            return false;
        }
    }
    // (b) classic starvation: steps / 2 for horizons > 6
    for w in [Horizon::Finite(7), Horizon::Finite(10), Horizon::Infinite] {
        if ring_run(inst, prp(), Mode::Classic, w, steps) != (steps / 2) as u64 {
            return false;
        }
    }
    // (a) deadlocks
    for w in 1..=5 {
        if ring_run(inst, prp(), Mode::Classic, Horizon::Finite(w), steps) != 0 {
            return false;
        }
    }
    for w in 1..=2 {
        if ring_run(inst, prp(), Mode::Transient, Horizon::Finite(w), steps) != 0 {
            return false;
        }
    }
    if include_slow {
        // the optimal and one-step solvers show the same split
        if ring_run(inst, SolverKind::Cbs, Mode::Classic, Horizon::Infinite, steps)
            != (steps / 2) as u64
        {
            return false;
        }
        if ring_run(inst, SolverKind::Cbs, Mode::Transient, Horizon::Infinite, steps)
            != (steps - 1) as u64
        {
            return false;
        }
        let pibt = ring_run(inst, SolverKind::Pibt, Mode::Transient, Horizon::Infinite, steps);
        if pibt + 2 < steps as u64 - 1 || pibt > steps as u64 {
            return false;
        }
    }
    true
}

#[derive(Debug)]
pub struct RingSearchOutcome {
    pub instance: Instance,
    pub candidates_tested: usize,
}

impl fmt::Display for RingSearchOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "found after {} candidates:\n{}",
            self.candidates_tested,
            write_fixture(&self.instance)
        )
    }
}

/// Brute-force search over ring sizes and start/target placements for an
/// instance satisfying [`starvation_ring_contract`]. Returns the first hit.
pub fn search_starvation_ring() -> Option<RingSearchOutcome> {
    let mut tested = 0;
    for graph in ring_maps() {
        let vertices: Vec<Vertex> = graph.vertices().collect();
        for &s1 in &vertices {
            for &t1 in &vertices {
                if t1 == s1 {
                    continue;
                }
                for &s2 in &vertices {
                    if s2 == s1 {
                        continue;
                    }
                    for &t2 in &vertices {
                        if t2 == s2 {
                            continue;
                        }
                        tested += 1;
                        let inst = Instance {
                            graph: graph.clone(),
                            starts: vec![s1, s2],
                            stream: TargetStream::Scripted {
                                sequences: vec![vec![t1, s1], vec![t2, s2]],
                            },
                        };
                        // cheap screens first, expensive battery afterwards
                        if ring_run(&inst, SolverKind::Prp { restarts: 2 }, Mode::Transient, Horizon::Infinite, 24)
                            != 23
                        {
                            continue;
                        }
                        if ring_run(&inst, SolverKind::Prp { restarts: 2 }, Mode::Classic, Horizon::Infinite, 24)
                            != 12
                        {
                            continue;
                        }
                        if !starvation_ring_contract(&inst, 60, false) {
                            continue;
                        }
                        if !starvation_ring_contract(&inst, 120, true) {
                            continue;
                        }
                        return Some(RingSearchOutcome { instance: inst, candidates_tested: tested });
                    }
                }
            }
        }
    }
    None
}
