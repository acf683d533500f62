//! Prioritized planning (classic and transient) and large-neighborhood search.
//!
//! Agents are planned one at a time against the reservations of everyone
//! planned before them; each finished path is reserved with its final vertex
//! parked. A failed agent triggers a restart with a freshly shuffled order,
//! up to the configured number of attempts.
//!
//! In transient mode the single-agent searches run with a parking filter: a
//! path may not end on another agent's target (that would lock the target
//! forever) nor on another agent's current position.

use rand::prelude::*;
use rand::rngs::StdRng;

use crate::grid::{GridGraph, Vertex};
use crate::model::{Mode, Path, Solution};
use crate::search::{astar, Horizon, ReservationTable, SearchConfig, SearchStats};

/// Priority order for the first attempt; restarts always shuffle.
#[derive(Debug, Clone)]
pub enum PriorityOrder {
    /// Farthest-from-target first, ties by agent id.
    DistanceDescending,
    /// Explicit permutation of agent indices.
    Fixed(Vec<usize>),
}

#[derive(Debug, Clone)]
pub struct PrpConfig {
    pub mode: Mode,
    pub order: PriorityOrder,
    /// Total planning attempts (>= 1); attempts beyond the first use seeded
    /// random orders.
    pub restarts: u32,
    pub horizon: Horizon,
    /// Per-agent search expansion budget.
    pub node_budget: Option<u64>,
    pub seed: u64,
}

impl PrpConfig {
    pub fn new(mode: Mode, horizon: Horizon) -> Self {
        PrpConfig {
            mode,
            order: PriorityOrder::DistanceDescending,
            restarts: 4,
            horizon,
            node_budget: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct PrpStats {
    pub expansions: u64,
    pub generated: u64,
    pub attempts: u32,
}

impl PrpStats {
    fn absorb(&mut self, s: SearchStats) {
        self.expansions += s.expansions;
        self.generated += s.generated;
    }
}

/// Planning failed for `first_unplannable`; `partial` holds the paths of the
/// attempt that planned the most agents.
#[derive(Debug)]
pub struct PrpFailure {
    pub first_unplannable: usize,
    pub partial: Vec<Path>,
    pub stats: PrpStats,
}

pub struct PrpRun {
    pub result: Result<Solution, PrpFailure>,
    pub stats: PrpStats,
}

/// Parking rule used by transient searches.
///
/// The returned predicate rejects other agents' targets and other agents'
/// current positions as final vertices.
pub fn standard_parking_filter(
    agent: usize,
    starts: &[Vertex],
    targets: &[Vertex],
) -> impl Fn(Vertex) -> bool {
    let mut banned: Vec<Vertex> = Vec::with_capacity(2 * starts.len());
    for i in 0..starts.len() {
        if i != agent {
            banned.push(starts[i]);
            banned.push(targets[i]);
        }
    }
    banned.sort_unstable();
    banned.dedup();
    move |v| banned.binary_search(&v).is_err()
}

fn initial_order(graph: &GridGraph, starts: &[Vertex], targets: &[Vertex], order: &PriorityOrder) -> Vec<usize> {
    match order {
        PriorityOrder::Fixed(o) => o.clone(),
        PriorityOrder::DistanceDescending => {
            let mut idx: Vec<usize> = (0..starts.len()).collect();
            let dists: Vec<u32> = idx
                .iter()
                .map(|&i| graph.distance_table(targets[i]).raw(starts[i]))
                .collect();
            idx.sort_by_key(|&i| (std::cmp::Reverse(dists[i]), i));
            idx
        }
    }
}

/// Plan all agents in priority order. See module docs for the retry rule.
pub fn prp_solve(
    graph: &GridGraph,
    starts: &[Vertex],
    targets: &[Vertex],
    cfg: &PrpConfig,
) -> PrpRun {
    let n = starts.len();
    let mut stats = PrpStats::default();
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let mut best_partial: Vec<Path> = Vec::new();
    let mut first_unplannable = 0;

    for attempt in 0..cfg.restarts.max(1) {
        stats.attempts = attempt + 1;
        let order = if attempt == 0 {
            initial_order(graph, starts, targets, &cfg.order)
        } else {
            let mut o: Vec<usize> = (0..n).collect();
            o.shuffle(&mut rng);
            o
        };
        let mut table = ReservationTable::new();
        let mut paths: Vec<Option<Path>> = vec![None; n];
        let mut planned: Vec<Path> = Vec::new();
        let mut failed = None;
        for &agent in &order {
            let filter;
            let mut search_cfg = SearchConfig::new(cfg.mode, cfg.horizon);
            search_cfg.node_budget = cfg.node_budget;
            if cfg.mode == Mode::Transient {
                filter = standard_parking_filter(agent, starts, targets);
                search_cfg.parking_filter = Some(&filter);
            }
            let heuristic = graph.distance_table(targets[agent]);
            let run = astar(graph, starts[agent], targets[agent], &table, &heuristic, &search_cfg);
            stats.absorb(run.stats);
            match run.result {
                Ok(mut path) => {
                    path.agent = agent;
                    table.reserve(&path, true);
                    planned.push(path.clone());
                    paths[agent] = Some(path);
                }
                Err(_) => {
                    // the agent stays put; keep planning the rest around it so
                    // the partial solution stays executable under a fail policy
                    failed = failed.or(Some(agent));
                    table.park(starts[agent], 0);
                }
            }
        }
        match failed {
            None => {
                let solution = Solution {
                    mode: cfg.mode,
                    paths: paths.into_iter().map(Option::unwrap).collect(),
                };
                return PrpRun { result: Ok(solution), stats };
            }
            Some(agent) => {
                if planned.len() >= best_partial.len() {
                    best_partial = planned;
                    first_unplannable = agent;
                }
            }
        }
    }
    PrpRun {
        result: Err(PrpFailure { first_unplannable, partial: best_partial, stats }),
        stats,
    }
}

/// Destroy heuristics available to [`lns_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DestroyHeuristic {
    /// Uniformly random agent subset.
    Random,
    /// A conflict-prone vertex is sampled weighted by path visit counts; the
    /// agents whose paths pass nearest to it are removed.
    MapBased,
}

#[derive(Debug, Clone)]
pub struct LnsConfig {
    pub mode: Mode,
    pub horizon: Horizon,
    pub iterations: u32,
    /// Optional wall-clock cap checked between iterations.
    pub time_budget: Option<std::time::Duration>,
    pub neighborhood: usize,
    pub heuristics: Vec<DestroyHeuristic>,
    pub node_budget: Option<u64>,
    pub restarts: u32,
    pub seed: u64,
}

impl LnsConfig {
    pub fn new(mode: Mode, horizon: Horizon, iterations: u32) -> Self {
        LnsConfig {
            mode,
            horizon,
            iterations,
            time_budget: None,
            neighborhood: 4,
            heuristics: vec![DestroyHeuristic::Random, DestroyHeuristic::MapBased],
            node_budget: None,
            restarts: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct LnsStats {
    pub expansions: u64,
    pub iterations_run: u32,
    pub accepted: u32,
    pub initial_cost: u32,
    pub final_cost: u32,
}

pub struct LnsRun {
    pub result: Result<Solution, PrpFailure>,
    pub stats: LnsStats,
}

fn solution_cost(solution: &Solution, targets: &[Vertex], mode: Mode) -> u32 {
    match mode {
        Mode::Classic => solution.soc(),
        Mode::Transient => solution
            .sum_time_to_first_visit(targets)
            .expect("transient paths must visit their targets"),
    }
}

/// Anytime improvement over [`prp_solve`]: destroy a neighborhood of paths,
/// replan it in removal order, accept when the cost does not increase.
pub fn lns_solve(
    graph: &GridGraph,
    starts: &[Vertex],
    targets: &[Vertex],
    cfg: &LnsConfig,
) -> LnsRun {
    let started = std::time::Instant::now();
    let prp_cfg = PrpConfig {
        mode: cfg.mode,
        order: PriorityOrder::DistanceDescending,
        restarts: cfg.restarts,
        horizon: cfg.horizon,
        node_budget: cfg.node_budget,
        seed: cfg.seed,
    };
    let init = prp_solve(graph, starts, targets, &prp_cfg);
    let mut stats = LnsStats { expansions: init.stats.expansions, ..Default::default() };
    let mut incumbent = match init.result {
        Ok(s) => s,
        Err(f) => return LnsRun { result: Err(f), stats },
    };
    let mut cost = solution_cost(&incumbent, targets, cfg.mode);
    stats.initial_cost = cost;

    let n = starts.len();
    let nsize = cfg.neighborhood.clamp(1, n);
    let mut rng = StdRng::seed_from_u64(cfg.seed.wrapping_add(0x9e3779b97f4a7c15));

    for _ in 0..cfg.iterations {
        if let Some(budget) = cfg.time_budget {
            if started.elapsed() >= budget {
                break;
            }
        }
        stats.iterations_run += 1;
        let heuristic = cfg.heuristics[rng.gen_range(0..cfg.heuristics.len().max(1))];
        let removed: Vec<usize> = match heuristic {
            DestroyHeuristic::Random => {
                let mut idx: Vec<usize> = (0..n).collect();
                idx.shuffle(&mut rng);
                idx.truncate(nsize);
                idx
            }
            DestroyHeuristic::MapBased => {
                // visit-count-weighted vertex, then the agents passing nearest
                let mut weights = vec![0u32; graph.num_vertices()];
                for p in &incumbent.paths {
                    for &v in &p.steps {
                        weights[v.index()] += 1;
                    }
                }
                let total: u32 = weights.iter().sum();
                let mut pick = rng.gen_range(0..total.max(1));
                let mut chosen = Vertex(0);
                for (i, &w) in weights.iter().enumerate() {
                    if pick < w {
                        chosen = Vertex(i as u32);
                        break;
                    }
                    pick -= w;
                }
                let dist = graph.distance_table(chosen);
                let mut by_dist: Vec<(u32, usize)> = incumbent
                    .paths
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        let d = p.steps.iter().map(|&v| dist.raw(v)).min().unwrap();
                        (d, i)
                    })
                    .collect();
                by_dist.sort_unstable();
                by_dist.into_iter().take(nsize).map(|(_, i)| i).collect()
            }
        };

        // reservations of the kept paths
        let mut table = ReservationTable::new();
        for (i, p) in incumbent.paths.iter().enumerate() {
            if !removed.contains(&i) {
                table.reserve(p, true);
            }
        }
        let mut new_paths = incumbent.paths.clone();
        let mut ok = true;
        for &agent in &removed {
            let filter;
            let mut search_cfg = SearchConfig::new(cfg.mode, cfg.horizon);
            search_cfg.node_budget = cfg.node_budget;
            if cfg.mode == Mode::Transient {
                filter = standard_parking_filter(agent, starts, targets);
                search_cfg.parking_filter = Some(&filter);
            }
            let heuristic = graph.distance_table(targets[agent]);
            let run = astar(graph, starts[agent], targets[agent], &table, &heuristic, &search_cfg);
            stats.expansions += run.stats.expansions;
            match run.result {
                Ok(mut path) => {
                    path.agent = agent;
                    table.reserve(&path, true);
                    new_paths[agent] = path;
                }
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let candidate = Solution { mode: cfg.mode, paths: new_paths };
        let new_cost = solution_cost(&candidate, targets, cfg.mode);
        if new_cost <= cost {
            incumbent = candidate;
            cost = new_cost;
            stats.accepted += 1;
        }
    }
    stats.final_cost = cost;
    LnsRun { result: Ok(incumbent), stats }
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
    fn single_agent_equals_plain_astar() {
        let g = GridGraph::open(5, 1);
        let starts = [v(&g, 0, 0)];
        let targets = [v(&g, 3, 0)];
        for mode in [Mode::Classic, Mode::Transient] {
            let run = prp_solve(&g, &starts, &targets, &PrpConfig::new(mode, Horizon::Infinite));
            let sol = run.result.unwrap();
            assert_eq!(sol.paths[0].cost(), 3);
        }
    }

    #[test]
    fn disjoint_corridors_get_shortest_paths() {
        let g = GridGraph::parse("type octile\nheight 3\nwidth 4\nmap\n....\n@@@@\n....\n").unwrap();
        let starts = [v(&g, 0, 0), v(&g, 0, 2)];
        let targets = [v(&g, 3, 0), v(&g, 2, 2)];
        let run = prp_solve(&g, &starts, &targets, &PrpConfig::new(Mode::Classic, Horizon::Infinite));
        let sol = run.result.unwrap();
        assert_eq!(sol.soc(), 3 + 2);
        assert!(validate(&sol, &g, &starts, &targets, Mode::Classic).is_empty());
    }

    /// The two-agent corridor where classic planning cannot work: starts
    /// (p1, p3), targets (p3, p2) on p1-p2-p3-p4.
    fn swap_corridor() -> (GridGraph, [Vertex; 2], [Vertex; 2]) {
        let inst = scenario::make_swap_corridor();
        let starts = [inst.starts[0], inst.starts[1]];
        let targets = {
            let t = inst.one_shot_targets();
            [t[0], t[1]]
        };
        (inst.graph, starts, targets)
    }

    #[test]
    fn swap_corridor_classic_fails_every_order() {
        let (g, starts, targets) = swap_corridor();
        for order in [vec![0, 1], vec![1, 0]] {
            let cfg = PrpConfig {
                order: PriorityOrder::Fixed(order.clone()),
                restarts: 1,
                ..PrpConfig::new(Mode::Classic, Horizon::Infinite)
            };
            let run = prp_solve(&g, &starts, &targets, &cfg);
            assert!(run.result.is_err(), "order {order:?} should fail");
        }
    }

    #[test]
    fn swap_corridor_transient_solvable_with_restarts() {
        let (g, starts, targets) = swap_corridor();
        let cfg = PrpConfig { restarts: 4, ..PrpConfig::new(Mode::Transient, Horizon::Infinite) };
        let run = prp_solve(&g, &starts, &targets, &cfg);
        let sol = run.result.unwrap();
        assert!(validate(&sol, &g, &starts, &targets, Mode::Transient).is_empty());
    }

    #[test]
    fn prp_failure_reports_partial() {
        let (g, starts, targets) = swap_corridor();
        let cfg = PrpConfig {
            order: PriorityOrder::Fixed(vec![0, 1]),
            restarts: 1,
            ..PrpConfig::new(Mode::Classic, Horizon::Infinite)
        };
        let run = prp_solve(&g, &starts, &targets, &cfg);
        let failure = run.result.err().unwrap();
        assert_eq!(failure.first_unplannable, 1);
        assert_eq!(failure.partial.len(), 1);
        assert_eq!(failure.partial[0].agent, 0);
    }

    #[test]
    fn determinism_same_seed_same_solution() {
        let g = GridGraph::open(8, 8);
        let inst = scenario::make_random_instance(&g, 6, scenario::StreamKind::Uniform, 42).unwrap();
        let targets = inst.one_shot_targets();
        for mode in [Mode::Classic, Mode::Transient] {
            let cfg = PrpConfig { seed: 9, ..PrpConfig::new(mode, Horizon::Infinite) };
            let a = prp_solve(&g, &inst.starts, &targets, &cfg).result.unwrap();
            let b = prp_solve(&g, &inst.starts, &targets, &cfg).result.unwrap();
            assert_eq!(a, b);
        }
    }

    /// Paper-style example: corridor s1-s2-t2-v1-t1 with a spur v2 under v1.
    /// Classic planning finds SOC 9 / makespan 5; transient finds SOC 7 /
    /// makespan 4.
    fn chained_targets_instance() -> (GridGraph, [Vertex; 2], [Vertex; 2]) {
        let g = GridGraph::parse("type octile\nheight 2\nwidth 5\nmap\n.....\n@@@.@\n").unwrap();
        let s1 = v(&g, 0, 0);
        let s2 = v(&g, 1, 0);
        let t2 = v(&g, 2, 0);
        let t1 = v(&g, 4, 0);
        (g, [s1, s2], [t1, t2])
    }

    #[test]
    fn chained_targets_classic_vs_transient_costs() {
        let (g, starts, targets) = chained_targets_instance();
        let order = PriorityOrder::Fixed(vec![0, 1]);
        let classic = prp_solve(
            &g,
            &starts,
            &targets,
            &PrpConfig { order: order.clone(), restarts: 1, ..PrpConfig::new(Mode::Classic, Horizon::Infinite) },
        )
        .result
        .unwrap();
        assert_eq!(classic.soc(), 9);
        assert_eq!(classic.makespan(), 5);
        assert!(validate(&classic, &g, &starts, &targets, Mode::Classic).is_empty());

        let transient = prp_solve(
            &g,
            &starts,
            &targets,
            &PrpConfig { order, restarts: 1, ..PrpConfig::new(Mode::Transient, Horizon::Infinite) },
        )
        .result
        .unwrap();
        assert_eq!(transient.soc(), 7);
        assert_eq!(transient.makespan(), 4);
        assert!(validate(&transient, &g, &starts, &targets, Mode::Transient).is_empty());

        // per-agent dominance under the same priority order
        for (c, t) in classic.paths.iter().zip(&transient.paths) {
            let visit = t.first_visit(targets[t.agent]).unwrap();
            assert!(visit <= c.cost());
        }
    }

    #[test]
    fn lns_zero_iterations_equals_prp() {
        let g = GridGraph::open(8, 8);
        let inst = scenario::make_random_instance(&g, 5, scenario::StreamKind::Uniform, 3).unwrap();
        let targets = inst.one_shot_targets();
        let lns_cfg = LnsConfig { iterations: 0, seed: 5, ..LnsConfig::new(Mode::Classic, Horizon::Infinite, 0) };
        let lns = lns_solve(&g, &inst.starts, &targets, &lns_cfg).result.unwrap();
        let prp_cfg = PrpConfig { seed: 5, ..PrpConfig::new(Mode::Classic, Horizon::Infinite) };
        let prp = prp_solve(&g, &inst.starts, &targets, &prp_cfg).result.unwrap();
        assert_eq!(lns, prp);
    }

    #[test]
    fn lns_improves_or_keeps_cost_and_validates() {
        let g = GridGraph::open(8, 8);
        let inst = scenario::make_random_instance(&g, 3, scenario::StreamKind::Uniform, 17).unwrap();
        let targets = inst.one_shot_targets();
        for mode in [Mode::Classic, Mode::Transient] {
            let cfg = LnsConfig { neighborhood: 2, seed: 1, ..LnsConfig::new(mode, Horizon::Infinite, 200) };
            let run = lns_solve(&g, &inst.starts, &targets, &cfg);
            let sol = run.result.unwrap();
            assert!(run.stats.final_cost <= run.stats.initial_cost);
            assert!(validate(&sol, &g, &inst.starts, &targets, mode).is_empty());
        }
    }
}
