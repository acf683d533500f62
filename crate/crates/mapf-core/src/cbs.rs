//! Conflict-based search over a binary constraint tree.
//!
//! The low level replans one agent at a time under that agent's constraint
//! set; classic and transient low levels share the space-time search. Nodes
//! are ordered by cost (sum of costs, or sum of time-to-first-visit in
//! transient mode), ties by conflict count then FIFO. Expansion picks the
//! earliest conflict inside the horizon and branches into two children, one
//! constraining each agent. With a finite horizon a node counts as
//! conflict-free when no conflicts exist at timesteps below the window.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::grid::{GridGraph, Vertex};
use crate::model::{detect_conflicts, Conflict, ConflictKind, Mode, Path, Solution};
use crate::prp::standard_parking_filter;
use crate::search::{astar, Horizon, ReservationTable, SearchConfig, SearchFailure};

/// Where a transient path may end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParkingRule {
    /// Not on another agent's target or current position.
    Standard,
    /// Anywhere it can stand forever.
    Unrestricted,
}

#[derive(Debug, Clone)]
pub struct CbsConfig {
    pub mode: Mode,
    pub horizon: Horizon,
    /// Constraint-tree expansion budget.
    pub node_budget: u64,
    /// Budget per low-level search.
    pub low_level_budget: Option<u64>,
    pub parking: ParkingRule,
    /// Wall-clock cap, checked between expansions.
    pub time_budget: Option<Duration>,
}

impl CbsConfig {
    pub fn new(mode: Mode, horizon: Horizon) -> Self {
        CbsConfig {
            mode,
            horizon,
            node_budget: 50_000,
            low_level_budget: None,
            parking: ParkingRule::Standard,
            time_budget: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbsFailure {
    /// Some agent has no path even with no constraints.
    Unsolvable,
    /// Node or time budget exhausted first.
    BudgetExhausted,
}

#[derive(Debug, Default, Clone, Copy)]
pub struct CbsStats {
    pub ct_expanded: u64,
    pub ct_generated: u64,
    pub low_level_expansions: u64,
}

pub struct CbsRun {
    pub result: Result<Solution, CbsFailure>,
    pub stats: CbsStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Constraint {
    /// Agent may not stand on the vertex at the timestep.
    Vertex(Vertex, u32),
    /// Agent may not traverse `from -> to` departing at the timestep.
    Move(Vertex, Vertex, u32),
}

struct CtNode {
    constraints: Vec<Vec<Constraint>>,
    paths: Vec<Path>,
    cost: u32,
    conflicts: Vec<Conflict>,
}

fn table_for(constraints: &[Constraint]) -> ReservationTable {
    let mut table = ReservationTable::new();
    for &c in constraints {
        match c {
            Constraint::Vertex(v, t) => table.reserve_vertex(v, t),
            // blocking u -> w is the same as pretending w -> u is traversed
            Constraint::Move(from, to, t) => table.reserve_edge(to, from, t),
        }
    }
    table
}

fn node_cost(paths: &[Path], targets: &[Vertex], mode: Mode) -> u32 {
    match mode {
        Mode::Classic => paths.iter().map(Path::cost).sum(),
        Mode::Transient => paths
            .iter()
            .map(|p| p.first_visit(targets[p.agent]).expect("transient path visits target"))
            .sum(),
    }
}

/// Optimal (for its mode and horizon = infinite) conflict-based search.
pub fn cbs_solve(
    graph: &GridGraph,
    starts: &[Vertex],
    targets: &[Vertex],
    cfg: &CbsConfig,
) -> CbsRun {
    let n = starts.len();
    let mut stats = CbsStats::default();
    let started = Instant::now();

    let plan_agent = |agent: usize,
                      constraints: &[Constraint],
                      stats: &mut CbsStats|
     -> Result<Path, SearchFailure> {
        let table = table_for(constraints);
        let filter;
        let mut search_cfg = SearchConfig::new(cfg.mode, cfg.horizon);
        search_cfg.node_budget = cfg.low_level_budget;
        if cfg.mode == Mode::Transient && cfg.parking == ParkingRule::Standard {
            filter = standard_parking_filter(agent, starts, targets);
            search_cfg.parking_filter = Some(&filter);
        }
        let heuristic = graph.distance_table(targets[agent]);
        let run = astar(graph, starts[agent], targets[agent], &table, &heuristic, &search_cfg);
        stats.low_level_expansions += run.stats.expansions;
        run.result.map(|mut p| {
            p.agent = agent;
            p
        })
    };

    let mut root_paths = Vec::with_capacity(n);
    for agent in 0..n {
        match plan_agent(agent, &[], &mut stats) {
            Ok(p) => root_paths.push(p),
            Err(SearchFailure::Exhausted) => {
                return CbsRun { result: Err(CbsFailure::Unsolvable), stats }
            }
            Err(SearchFailure::BudgetExceeded) => {
                return CbsRun { result: Err(CbsFailure::BudgetExhausted), stats }
            }
        }
    }
    let root = CtNode {
        constraints: vec![Vec::new(); n],
        cost: node_cost(&root_paths, targets, cfg.mode),
        conflicts: detect_conflicts(&root_paths, cfg.horizon),
        paths: root_paths,
    };

    // min-heap on (cost, conflict count, insertion order)
    let mut open: BinaryHeap<Reverse<(u32, usize, u64)>> = BinaryHeap::new();
    let mut nodes: Vec<CtNode> = Vec::new();
    open.push(Reverse((root.cost, root.conflicts.len(), 0)));
    nodes.push(root);
    stats.ct_generated += 1;

    while let Some(Reverse((_, _, id))) = open.pop() {
        if stats.ct_expanded >= cfg.node_budget {
            return CbsRun { result: Err(CbsFailure::BudgetExhausted), stats };
        }
        if let Some(budget) = cfg.time_budget {
            if started.elapsed() >= budget {
                return CbsRun { result: Err(CbsFailure::BudgetExhausted), stats };
            }
        }
        stats.ct_expanded += 1;
        let (paths, conflict) = {
            let node = &nodes[id as usize];
            match node.conflicts.first() {
                None => {
                    return CbsRun {
                        result: Ok(Solution { mode: cfg.mode, paths: node.paths.clone() }),
                        stats,
                    }
                }
                Some(&c) => (node.paths.clone(), c),
            }
        };

        let (i, j) = conflict.agents;
        let branches: [(usize, Constraint); 2] = match conflict.kind {
            ConflictKind::Vertex(v) => [
                (i, Constraint::Vertex(v, conflict.time)),
                (j, Constraint::Vertex(v, conflict.time)),
            ],
            ConflictKind::Swap(from_i, to_i) => [
                (i, Constraint::Move(from_i, to_i, conflict.time)),
                (j, Constraint::Move(to_i, from_i, conflict.time)),
            ],
        };
        for (agent, constraint) in branches {
            let parent = &nodes[id as usize];
            let mut constraints = parent.constraints.clone();
            if constraints[agent].contains(&constraint) {
                continue;
            }
            constraints[agent].push(constraint);
            match plan_agent(agent, &constraints[agent], &mut stats) {
                Ok(path) => {
                    let mut child_paths = paths.clone();
                    child_paths[agent] = path;
                    let cost = node_cost(&child_paths, targets, cfg.mode);
                    debug_assert!(cost >= nodes[id as usize].cost);
                    let child = CtNode {
                        constraints,
                        cost,
                        conflicts: detect_conflicts(&child_paths, cfg.horizon),
                        paths: child_paths,
                    };
                    let child_id = nodes.len() as u64;
                    open.push(Reverse((child.cost, child.conflicts.len(), child_id)));
                    nodes.push(child);
                    stats.ct_generated += 1;
                }
                Err(SearchFailure::Exhausted) => {} // infeasible branch
                Err(SearchFailure::BudgetExceeded) => {
                    return CbsRun { result: Err(CbsFailure::BudgetExhausted), stats }
                }
            }
        }
    }
    // open exhausted: every branch ended in an infeasible low level
    CbsRun { result: Err(CbsFailure::Unsolvable), stats }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Cell;
    use crate::model::validate;
    use crate::scenario;

    fn v(g: &GridGraph, x: u32, y: u32) -> Vertex {
        g.vertex_at(Cell::new(x, y)).unwrap()
    }

    #[test]
    fn single_agent_no_expansion_beyond_root() {
        let g = GridGraph::open(5, 5);
        let cfg = CbsConfig::new(Mode::Classic, Horizon::Infinite);
        let run = cbs_solve(&g, &[v(&g, 0, 0)], &[v(&g, 4, 4)], &cfg);
        let sol = run.result.unwrap();
        assert_eq!(sol.paths[0].cost(), 8);
        assert_eq!(run.stats.ct_expanded, 1);
    }

    #[test]
    fn crossing_corridors_match_joint_optimum() {
        // plus-shaped crossing: two corridors sharing the center cell
        let g = GridGraph::parse(
            "type octile\nheight 3\nwidth 3\nmap\n@.@\n...\n@.@\n",
        )
        .unwrap();
        let starts = [v(&g, 0, 1), v(&g, 1, 0)];
        let targets = [v(&g, 2, 1), v(&g, 1, 2)];
        let cfg = CbsConfig::new(Mode::Classic, Horizon::Infinite);
        let run = cbs_solve(&g, &starts, &targets, &cfg);
        let sol = run.result.unwrap();
        assert!(validate(&sol, &g, &starts, &targets, Mode::Classic).is_empty());
        // minimal resolution: one agent waits once, 2 + 2 + 1
        assert_eq!(sol.soc(), 5);

        let cfg = CbsConfig {
            parking: ParkingRule::Unrestricted,
            ..CbsConfig::new(Mode::Transient, Horizon::Infinite)
        };
        let run = cbs_solve(&g, &starts, &targets, &cfg);
        let sol = run.result.unwrap();
        assert!(validate(&sol, &g, &starts, &targets, Mode::Transient).is_empty());
        assert!(sol.sum_time_to_first_visit(&targets).unwrap() <= 5);
    }

    #[test]
    fn swap_corridor_unsolvable_classic_solvable_transient() {
        let inst = scenario::make_swap_corridor();
        let targets = inst.one_shot_targets();
        let classic = cbs_solve(
            &inst.graph,
            &inst.starts,
            &targets,
            &CbsConfig { node_budget: 2_000, ..CbsConfig::new(Mode::Classic, Horizon::Infinite) },
        );
        assert!(classic.result.is_err());

        let transient = cbs_solve(
            &inst.graph,
            &inst.starts,
            &targets,
            &CbsConfig::new(Mode::Transient, Horizon::Infinite),
        );
        let sol = transient.result.unwrap();
        assert!(validate(&sol, &inst.graph, &inst.starts, &targets, Mode::Transient).is_empty());
    }

    #[test]
    fn budget_exhaustion_reported() {
        let inst = scenario::make_swap_corridor();
        let targets = inst.one_shot_targets();
        let run = cbs_solve(
            &inst.graph,
            &inst.starts,
            &targets,
            &CbsConfig { node_budget: 5, ..CbsConfig::new(Mode::Classic, Horizon::Infinite) },
        );
        assert_eq!(run.result.err().unwrap(), CbsFailure::BudgetExhausted);
    }

    #[test]
    fn transient_beats_classic_on_shared_targets() {
        // both agents must visit the same cell: classically unsolvable (they
        // cannot both end there), transiently fine
        let g = GridGraph::open(4, 1);
        let starts = [v(&g, 0, 0), v(&g, 3, 0)];
        let shared = v(&g, 1, 0);
        let targets = [shared, shared];
        let classic = cbs_solve(
            &g,
            &starts,
            &targets,
            &CbsConfig { node_budget: 2_000, ..CbsConfig::new(Mode::Classic, Horizon::Infinite) },
        );
        assert!(classic.result.is_err());
        let transient = cbs_solve(
            &g,
            &starts,
            &targets,
            &CbsConfig { parking: ParkingRule::Unrestricted, ..CbsConfig::new(Mode::Transient, Horizon::Infinite) },
        );
        let sol = transient.result.unwrap();
        assert!(validate(&sol, &g, &starts, &targets, Mode::Transient).is_empty());
    }
}
