//! Priority inheritance with backtracking: a one-step configuration
//! generator that doubles as a standalone solver.
//!
//! Every step, agents are processed in descending priority; each tries its
//! candidate moves in order of true distance to its target (random
//! tie-break). An agent sitting on a higher-priority agent's desired cell
//! inherits that priority and must move; if it cannot, the pusher tries its
//! next candidate. Waiting in place is always available to the root agent,
//! so a step never fails.
//!
//! Priorities: agents without an active target form the lowest tier (in
//! transient use, agents that already visited their target hand in their
//! target and become pushable); within a tier, higher elevation wins, ties go
//! to the lower agent id. Elevation grows by one per step without a reach and
//! resets on reach.

use std::collections::HashMap;
use std::sync::Arc;

use rand::prelude::*;
use rand::rngs::StdRng;

use crate::grid::{DistanceTable, GridGraph, Vertex};
use crate::model::{Mode, Path, Solution};

#[derive(Debug, Clone)]
pub struct PibtState {
    pub positions: Vec<Vertex>,
    elevation: Vec<u32>,
    rng: StdRng,
    steps_executed: u64,
}

impl PibtState {
    /// `positions` must be collision-free (pairwise distinct).
    pub fn new(positions: Vec<Vertex>, seed: u64) -> Self {
        let n = positions.len();
        debug_assert!({
            let mut s = positions.clone();
            s.sort_unstable();
            s.dedup();
            s.len() == n
        });
        PibtState { positions, elevation: vec![0; n], rng: StdRng::seed_from_u64(seed), steps_executed: 0 }
    }

    pub fn elevation(&self, agent: usize) -> u32 {
        self.elevation[agent]
    }

    pub fn steps_executed(&self) -> u64 {
        self.steps_executed
    }

    /// Advance one step toward `targets` (`None`: no active target, prefer to
    /// stay, lowest priority). Commits and returns the next configuration.
    pub fn step(&mut self, graph: &GridGraph, targets: &[Option<Vertex>]) -> Vec<Vertex> {
        let n = self.positions.len();
        debug_assert_eq!(targets.len(), n);
        let dists: Vec<Option<Arc<DistanceTable>>> = targets
            .iter()
            .map(|t| t.map(|t| graph.distance_table(t)))
            .collect();

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (targets[i].is_none(), std::cmp::Reverse(self.elevation[i]), i));

        let mut ctx = StepCtx {
            graph,
            dists: &dists,
            positions: &self.positions,
            at: self.positions.iter().enumerate().map(|(i, &v)| (v, i)).collect(),
            next: vec![None; n],
            rng: &mut self.rng,
        };
        for &i in &order {
            if ctx.next[i].is_none() {
                let ok = ctx.plan(i, None);
                debug_assert!(ok, "root agent can always wait");
            }
        }
        let next: Vec<Vertex> = ctx.next.into_iter().map(Option::unwrap).collect();
        for i in 0..n {
            match targets[i] {
                Some(t) if next[i] == t => self.elevation[i] = 0,
                Some(_) => self.elevation[i] += 1,
                None => self.elevation[i] = 0,
            }
        }
        self.positions = next.clone();
        self.steps_executed += 1;
        next
    }
}

struct StepCtx<'a> {
    graph: &'a GridGraph,
    dists: &'a [Option<Arc<DistanceTable>>],
    positions: &'a [Vertex],
    /// current occupancy
    at: HashMap<Vertex, usize>,
    /// claimed next vertex per agent
    next: Vec<Option<Vertex>>,
    rng: &'a mut StdRng,
}

impl StepCtx<'_> {
    /// Plan agent `i`; `pusher_at` is the current vertex of the agent that
    /// pushed `i` (moving there would swap).
    fn plan(&mut self, i: usize, pusher_at: Option<Vertex>) -> bool {
        let v = self.positions[i];
        let mut cands: Vec<(u32, u64, Vertex)> = self
            .graph
            .neighbors(v)
            .iter()
            .map(|&c| {
                let rank = match &self.dists[i] {
                    Some(d) => d.raw(c),
                    // no target: waiting ranks first, moves after
                    None => (c != v) as u32,
                };
                (rank, self.rng.gen::<u64>(), c)
            })
            .collect();
        cands.sort_unstable();
        for (_, _, c) in cands {
            if Some(c) == pusher_at {
                continue;
            }
            if self.next.iter().any(|&x| x == Some(c)) {
                continue;
            }
            self.next[i] = Some(c);
            if let Some(&j) = self.at.get(&c) {
                if j != i && self.next[j].is_none() {
                    // j holds the cell: it inherits i's priority and must move
                    if !self.plan(j, Some(v)) {
                        self.next[i] = None;
                        continue;
                    }
                }
            }
            return true;
        }
        self.next[i] = None;
        false
    }
}

#[derive(Debug)]
pub struct PibtRunFailure {
    /// Executed steps before hitting the cap, one entry per agent.
    pub prefix: Vec<Path>,
    pub steps: u32,
}

pub struct PibtRun {
    pub result: Result<Solution, PibtRunFailure>,
    pub steps: u32,
}

/// Run PIBT as a one-shot solver until the mode's stop condition or
/// `max_steps`.
///
/// Classic mode keeps every agent assigned to its target and stops when all
/// agents sit on their targets simultaneously. Transient mode retires an
/// agent's target on first visit (the agent becomes lowest priority) and
/// stops when everyone has visited.
pub fn pibt_run(
    graph: &GridGraph,
    starts: &[Vertex],
    targets: &[Vertex],
    mode: Mode,
    max_steps: u32,
    seed: u64,
) -> PibtRun {
    let n = starts.len();
    let mut state = PibtState::new(starts.to_vec(), seed);
    let mut reached: Vec<bool> = starts.iter().zip(targets).map(|(s, t)| s == t).collect();
    let mut trails: Vec<Vec<Vertex>> = starts.iter().map(|&s| vec![s]).collect();
    let mut steps = 0;
    loop {
        let done = match mode {
            Mode::Classic => (0..n).all(|i| state.positions[i] == targets[i]),
            Mode::Transient => reached.iter().all(|&r| r),
        };
        if done {
            let paths = trails.into_iter().enumerate().map(|(i, s)| Path::new(i, s)).collect();
            return PibtRun { result: Ok(Solution { mode, paths }), steps };
        }
        if steps >= max_steps {
            let prefix = trails.into_iter().enumerate().map(|(i, s)| Path::new(i, s)).collect();
            return PibtRun { result: Err(PibtRunFailure { prefix, steps }), steps };
        }
        let step_targets: Vec<Option<Vertex>> = (0..n)
            .map(|i| match mode {
                Mode::Classic => Some(targets[i]),
                Mode::Transient if reached[i] => None,
                Mode::Transient => Some(targets[i]),
            })
            .collect();
        let next = state.step(graph, &step_targets);
        for i in 0..n {
            trails[i].push(next[i]);
            if next[i] == targets[i] {
                reached[i] = true;
            }
        }
        steps += 1;
    }
}
