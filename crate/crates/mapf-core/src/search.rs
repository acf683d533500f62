//! Space-time single-agent search.
//!
//! [`astar`] plans one agent against a [`ReservationTable`] in one of two goal
//! modes. Classic mode returns a minimal-cost path that ends parked on the
//! target. Transient mode extends each search state with a visited flag
//! `b` (`b = 1` once any ancestor stood on the target); the duplicate key is
//! the full `(vertex, time, b)` triple, the goal requires `b = 1` plus a
//! feasible parking vertex, and once `b = 1` further moves cost 0 with a zero
//! heuristic, so the search minimizes time-to-first-visit and then takes any
//! parking spot it can hold.
//!
//! With a finite horizon `w`, reservations at or beyond `w` are invisible and
//! goal parking is only checked up to `w`: conflicts further out are left to
//! later replanning rounds.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};

use crate::grid::{DistanceTable, GridGraph, Vertex};
use crate::model::{Mode, Path};

/// Timestep bound beyond which conflicts are ignored while planning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Finite(u32),
    Infinite,
}

impl Horizon {
    /// Is timestep `t` inside the checked window?
    #[inline]
    pub fn contains(self, t: u32) -> bool {
        match self {
            Horizon::Finite(w) => t < w,
            Horizon::Infinite => true,
        }
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            Horizon::Finite(w) => Some(w),
            Horizon::Infinite => None,
        }
    }
}

impl std::fmt::Display for Horizon {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Horizon::Finite(w) => write!(f, "{w}"),
            Horizon::Infinite => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for Horizon {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inf" | "infinite" | "∞" => Ok(Horizon::Infinite),
            n => n
                .parse::<u32>()
                .map(Horizon::Finite)
                .map_err(|_| format!("bad horizon `{s}` (expected integer or `inf`)")),
        }
    }
}

/// Space-time occupancy of already-planned agents.
///
/// A move `u -> w` departing at `x` is blocked when `(w, x+1)` is
/// vertex-reserved, when the opposing edge `(w, u)` departs at `x`
/// (swap), or when `w` is parked from some time `<= x+1`.
#[derive(Debug, Clone, Default)]
pub struct ReservationTable {
    vertex: HashSet<(Vertex, u32)>,
    edge: HashSet<(Vertex, Vertex, u32)>,
    parked: HashMap<Vertex, u32>,
    /// latest timed vertex reservation per vertex, for parking checks
    last_vertex_time: HashMap<Vertex, u32>,
    /// latest timed reservation anywhere, for search depth bounds
    stabilization: u32,
}

impl ReservationTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reserve every `(vertex, timestep)` of `path` and every traversed edge;
    /// with `park`, the final vertex is additionally occupied forever from the
    /// path's final timestep.
    pub fn reserve(&mut self, path: &Path, park: bool) {
        for (t, &v) in path.steps.iter().enumerate() {
            self.reserve_vertex(v, t as u32);
        }
        for (t, w) in path.steps.windows(2).enumerate() {
            if w[0] != w[1] {
                self.edge.insert((w[0], w[1], t as u32));
            }
        }
        if park {
            self.park(path.last(), path.cost());
        }
    }

    pub fn reserve_vertex(&mut self, v: Vertex, t: u32) {
        self.vertex.insert((v, t));
        let e = self.last_vertex_time.entry(v).or_insert(t);
        *e = (*e).max(t);
        self.stabilization = self.stabilization.max(t + 1);
    }

    pub fn reserve_edge(&mut self, from: Vertex, to: Vertex, t: u32) {
        self.edge.insert((from, to, t));
        self.stabilization = self.stabilization.max(t + 2);
    }

    /// Occupy `v` forever from time `t`.
    pub fn park(&mut self, v: Vertex, t: u32) {
        match self.parked.get_mut(&v) {
            Some(existing) => *existing = (*existing).min(t),
            None => {
                self.parked.insert(v, t);
            }
        }
    }

    /// Is standing on `v` at time `t` blocked (within `horizon`)?
    pub fn vertex_blocked(&self, v: Vertex, t: u32, horizon: Horizon) -> bool {
        if !horizon.contains(t) {
            return false;
        }
        if self.vertex.contains(&(v, t)) {
            return true;
        }
        matches!(self.parked.get(&v), Some(&from) if from <= t)
    }

    /// Is the move `u -> w` departing at `t` blocked?
    pub fn move_blocked(&self, u: Vertex, w: Vertex, t: u32, horizon: Horizon) -> bool {
        if self.vertex_blocked(w, t + 1, horizon) {
            return true;
        }
        // swap: someone traverses w -> u over the same tick
        u != w && horizon.contains(t) && self.edge.contains(&(w, u, t))
    }

    /// Can an agent occupy `v` forever from time `t`, within the horizon?
    pub fn can_park(&self, v: Vertex, t: u32, horizon: Horizon) -> bool {
        match self.parked.get(&v) {
            Some(&from) => {
                // parked occupancy extends forever; it collides unless the
                // whole overlap lies beyond the horizon
                if horizon.contains(from.max(t)) {
                    return false;
                }
            }
            None => {}
        }
        match horizon {
            Horizon::Infinite => self.last_vertex_time.get(&v).map_or(true, |&last| last < t),
            Horizon::Finite(w) => {
                for x in t..w {
                    if self.vertex.contains(&(v, x)) {
                        return false;
                    }
                }
                true
            }
        }
    }

    /// First timestep from which no timed reservation exists anywhere.
    pub fn stabilization_time(&self) -> u32 {
        self.stabilization
    }

    pub fn is_empty(&self) -> bool {
        self.vertex.is_empty() && self.edge.is_empty() && self.parked.is_empty()
    }
}

/// How a search run ended without a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchFailure {
    /// The reachable state space was exhausted: no path exists.
    Exhausted,
    /// The node budget or step limit was hit first.
    BudgetExceeded,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SearchStats {
    pub expansions: u64,
    pub generated: u64,
}

pub struct SearchRun {
    pub result: Result<Path, SearchFailure>,
    pub stats: SearchStats,
}

/// Per-call knobs for [`astar`].
pub struct SearchConfig<'a> {
    pub mode: Mode,
    pub horizon: Horizon,
    /// Expansion budget; `None` means unbounded.
    pub node_budget: Option<u64>,
    /// Transient mode only: the final (parked) vertex must satisfy this.
    pub parking_filter: Option<&'a dyn Fn(Vertex) -> bool>,
    /// Override the completeness-based depth cap.
    pub depth_cap: Option<u32>,
    /// Diagnostic: drop the visited flag from the duplicate key. Breaks
    /// transient completeness; exists for the regression test that shows why
    /// the flag must be part of the key.
    pub weak_duplicate_keys: bool,
}

impl<'a> SearchConfig<'a> {
    pub fn new(mode: Mode, horizon: Horizon) -> Self {
        SearchConfig {
            mode,
            horizon,
            node_budget: None,
            parking_filter: None,
            depth_cap: None,
            weak_duplicate_keys: false,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
struct Node {
    f: u32,
    g: u32,
    b: bool,
    v: Vertex,
    t: u32,
}

// min f; then max g; then b = 1 first; then min vertex id; then min time
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .cmp(&self.f)
            .then_with(|| self.g.cmp(&other.g))
            .then_with(|| self.b.cmp(&other.b))
            .then_with(|| other.v.cmp(&self.v))
            .then_with(|| other.t.cmp(&self.t))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn depth_cap(graph: &GridGraph, table: &ReservationTable, cfg: &SearchConfig) -> u32 {
    if let Some(cap) = cfg.depth_cap {
        return cap;
    }
    let nv = graph.num_vertices() as u32;
    // Beyond `base` the world is static (reservations past the horizon are
    // invisible; past stabilization only parked cells remain). A solution
    // then needs at most |V| steps to reach the target and |V| more to park.
    let base = match cfg.horizon {
        Horizon::Finite(w) => w,
        Horizon::Infinite => table.stabilization_time(),
    };
    let cap = base.saturating_add(2 * nv);
    match cfg.mode {
        Mode::Classic => cap.max(4 * nv),
        Mode::Transient => cap,
    }
}

/// Plan a single agent from `start` to `target` against `table`.
///
/// `heuristic` must be the exact distance table for `target`.
pub fn astar(
    graph: &GridGraph,
    start: Vertex,
    target: Vertex,
    table: &ReservationTable,
    heuristic: &DistanceTable,
    cfg: &SearchConfig,
) -> SearchRun {
    debug_assert_eq!(heuristic.target, target);
    let mut stats = SearchStats::default();
    let cap = depth_cap(graph, table, cfg);
    let passes_filter =
        |v: Vertex| cfg.parking_filter.map_or(true, |f| f(v));
    let key_of = |v: Vertex, t: u32, b: bool| (v, t, b && !cfg.weak_duplicate_keys);

    let mut open = BinaryHeap::new();
    let mut closed: HashSet<(Vertex, u32, bool)> = HashSet::new();
    let mut best_g: HashMap<(Vertex, u32, bool), u32> = HashMap::new();
    let mut parents: HashMap<(Vertex, u32, bool), (Vertex, u32, bool)> = HashMap::new();

    let root_b = match cfg.mode {
        Mode::Classic => false,
        Mode::Transient => start == target,
    };
    let root_h = match heuristic.get(start) {
        Some(d) => d,
        None => return SearchRun { result: Err(SearchFailure::Exhausted), stats },
    };
    best_g.insert(key_of(start, 0, root_b), 0);
    open.push(Node { f: if root_b { 0 } else { root_h }, g: 0, b: root_b, v: start, t: 0 });
    stats.generated += 1;

    while let Some(node) = open.pop() {
        let key = key_of(node.v, node.t, node.b);
        if !closed.insert(key) {
            continue;
        }
        stats.expansions += 1;
        if let Some(budget) = cfg.node_budget {
            if stats.expansions > budget {
                return SearchRun { result: Err(SearchFailure::BudgetExceeded), stats };
            }
        }

        let is_goal = match cfg.mode {
            Mode::Classic => node.v == target && table.can_park(node.v, node.t, cfg.horizon),
            Mode::Transient => {
                node.b && passes_filter(node.v) && table.can_park(node.v, node.t, cfg.horizon)
            }
        };
        if is_goal {
            let mut steps = Vec::with_capacity(node.t as usize + 1);
            let mut cur = key;
            steps.push(cur.0);
            while let Some(&p) = parents.get(&cur) {
                steps.push(p.0);
                cur = p;
            }
            steps.reverse();
            return SearchRun { result: Ok(Path::new(0, steps)), stats };
        }

        if node.t >= cap {
            continue;
        }
        for &w in graph.neighbors(node.v) {
            if table.move_blocked(node.v, w, node.t, cfg.horizon) {
                continue;
            }
            let child_b = match cfg.mode {
                Mode::Classic => false,
                Mode::Transient => node.b || w == target,
            };
            let child_key = key_of(w, node.t + 1, child_b);
            if closed.contains(&child_key) {
                continue;
            }
            let step_cost = if cfg.mode == Mode::Transient && node.b { 0 } else { 1 };
            let g = node.g + step_cost;
            if best_g.get(&child_key).map_or(false, |&old| old <= g) {
                continue;
            }
            let h = if child_b {
                0
            } else {
                match heuristic.get(w) {
                    Some(d) => d,
                    None => continue,
                }
            };
            best_g.insert(child_key, g);
            parents.insert(child_key, key);
            open.push(Node { f: g + h, g, b: child_b, v: w, t: node.t + 1 });
            stats.generated += 1;
        }
    }
    SearchRun { result: Err(SearchFailure::Exhausted), stats }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Cell;

    fn corridor(n: u32) -> GridGraph {
        GridGraph::open(n, 1)
    }

    fn v(g: &GridGraph, x: u32) -> Vertex {
        g.vertex_at(Cell::new(x, 0)).unwrap()
    }

    fn plan(
        g: &GridGraph,
        start: Vertex,
        target: Vertex,
        table: &ReservationTable,
        cfg: &SearchConfig,
    ) -> Result<Path, SearchFailure> {
        astar(g, start, target, table, &g.distance_table(target), cfg).result
    }

    #[test]
    fn reservation_blocking_rules() {
        let g = corridor(3);
        let (a, b, c) = (v(&g, 0), v(&g, 1), v(&g, 2));
        let mut table = ReservationTable::new();
        table.reserve(&Path::new(0, vec![a, b]), false);
        // vertex: moving c -> b arriving at t=1
        assert!(table.move_blocked(c, b, 0, Horizon::Infinite));
        // swap: moving b -> a over the same tick
        assert!(table.move_blocked(b, a, 0, Horizon::Infinite));
        assert!(!table.move_blocked(c, c, 0, Horizon::Infinite));

        let mut parked = ReservationTable::new();
        parked.reserve(&Path::new(0, vec![a, b]), true);
        assert!(parked.vertex_blocked(b, 9, Horizon::Infinite));
        assert!(!parked.can_park(b, 9, Horizon::Infinite));
        // beyond a finite horizon nothing is blocked
        assert!(!parked.vertex_blocked(b, 9, Horizon::Finite(5)));
    }

    #[test]
    fn unconstrained_classic_is_shortest() {
        let g = corridor(4);
        let cfg = SearchConfig::new(Mode::Classic, Horizon::Infinite);
        let p = plan(&g, v(&g, 0), v(&g, 2), &ReservationTable::new(), &cfg).unwrap();
        assert_eq!(p.steps, vec![v(&g, 0), v(&g, 1), v(&g, 2)]);
        assert_eq!(p.cost(), 2);
    }

    /// Brute-force enumeration of conflict-free paths up to a length bound;
    /// used as the oracle for the corridor examples.
    fn enumerate_transient_optimum(
        g: &GridGraph,
        start: Vertex,
        target: Vertex,
        table: &ReservationTable,
        filter: &dyn Fn(Vertex) -> bool,
        max_len: u32,
    ) -> Option<(u32, Vec<Vec<Vertex>>)> {
        let mut best: Option<u32> = None;
        let mut witnesses = Vec::new();
        let mut stack = vec![(vec![start], start == target)];
        while let Some((steps, visited)) = stack.pop() {
            let t = (steps.len() - 1) as u32;
            if visited {
                let last = *steps.last().unwrap();
                if filter(last) && table.can_park(last, t, Horizon::Infinite) {
                    let cost = steps.iter().position(|&s| s == target).unwrap() as u32;
                    match best {
                        Some(b) if b < cost => {}
                        Some(b) if b == cost => witnesses.push(steps.clone()),
                        _ => {
                            best = Some(cost);
                            witnesses = vec![steps.clone()];
                        }
                    }
                }
            }
            if t >= max_len {
                continue;
            }
            let cur = *steps.last().unwrap();
            for &w in g.neighbors(cur) {
                if table.move_blocked(cur, w, t, Horizon::Infinite) {
                    continue;
                }
                let mut next = steps.clone();
                next.push(w);
                stack.push((next, visited || w == target));
            }
        }
        best.map(|b| (b, witnesses))
    }

    #[test]
    fn transient_retreat_on_swap_corridor() {
        // corridor p1-p2-p3-p4; the other agent traverses [p1,p1,p2,p3] and
        // parks on p3. Planning from p3 to p2 must visit p2 then retreat to p4.
        let g = corridor(4);
        let (p1, p2, p3, p4) = (v(&g, 0), v(&g, 1), v(&g, 2), v(&g, 3));
        let mut table = ReservationTable::new();
        table.reserve(&Path::new(0, vec![p1, p1, p2, p3]), true);
        let filter = move |x: Vertex| x != p3 && x != p1; // other agent's target and start
        let cfg = SearchConfig {
            parking_filter: Some(&filter),
            ..SearchConfig::new(Mode::Transient, Horizon::Infinite)
        };
        let p = plan(&g, p3, p2, &table, &cfg).unwrap();
        assert_eq!(p.steps, vec![p3, p2, p3, p4]);

        // oracle: minimal time-to-first-visit over all paths of length <= 6
        let (best, witnesses) =
            enumerate_transient_optimum(&g, p3, p2, &table, &filter, 6).unwrap();
        assert_eq!(best, 1);
        assert!(witnesses.contains(&p.steps));
    }

    #[test]
    fn classic_fails_where_transient_succeeds() {
        let g = corridor(4);
        let (p1, p2, p3) = (v(&g, 0), v(&g, 1), v(&g, 2));
        let mut table = ReservationTable::new();
        table.reserve(&Path::new(0, vec![p1, p1, p2, p3]), true);
        let cfg = SearchConfig::new(Mode::Classic, Horizon::Infinite);
        assert_eq!(plan(&g, p3, p2, &table, &cfg), Err(SearchFailure::Exhausted));
    }

    #[test]
    fn transient_cost_never_exceeds_classic() {
        use rand::prelude::*;
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..30 {
            let passable: Vec<bool> = (0..36).map(|_| rng.gen_bool(0.8)).collect();
            let g = GridGraph::from_passable(6, 6, passable);
            if g.num_vertices() < 4 {
                continue;
            }
            let start = Vertex(rng.gen_range(0..g.num_vertices() as u32));
            let target = Vertex(rng.gen_range(0..g.num_vertices() as u32));
            let mut table = ReservationTable::new();
            // a few random moving obstacles
            for a in 0..2 {
                let mut at = Vertex(rng.gen_range(0..g.num_vertices() as u32));
                let mut steps = vec![at];
                for _ in 0..6 {
                    let ns = g.neighbors(at);
                    at = ns[rng.gen_range(0..ns.len())];
                    steps.push(at);
                }
                if steps[0] != start {
                    table.reserve(&Path::new(a, steps), false);
                }
            }
            if table.vertex_blocked(start, 0, Horizon::Infinite) {
                continue;
            }
            let classic = plan(
                &g,
                start,
                target,
                &table,
                &SearchConfig::new(Mode::Classic, Horizon::Infinite),
            );
            let transient = plan(
                &g,
                start,
                target,
                &table,
                &SearchConfig::new(Mode::Transient, Horizon::Infinite),
            );
            if let (Ok(c), Ok(t)) = (classic, transient) {
                let visit = t.first_visit(target).unwrap();
                assert!(visit <= c.cost(), "visit {visit} vs classic {}", c.cost());
            }
        }
    }

    #[test]
    fn finite_horizon_allows_waiting_out_conflicts() {
        // target parked-over by another agent within the window; with w=4 the
        // plan waits beyond the window and then claims the cell
        let g = corridor(3);
        let (a, b, c) = (v(&g, 0), v(&g, 1), v(&g, 2));
        let mut table = ReservationTable::new();
        table.reserve(&Path::new(0, vec![c, c, c, c, c]), true);
        let cfg = SearchConfig::new(Mode::Classic, Horizon::Finite(4));
        let p = plan(&g, a, c, &table, &cfg).unwrap();
        assert_eq!(p.last(), c);
        assert!(p.cost() >= 4, "must outlast the horizon, got {:?}", p.steps);
        let _ = b;
        // with an infinite horizon the same query is unsolvable
        let cfg = SearchConfig::new(Mode::Classic, Horizon::Infinite);
        assert_eq!(plan(&g, a, c, &table, &cfg), Err(SearchFailure::Exhausted));
    }

    #[test]
    fn budget_failure_is_distinguished() {
        let g = GridGraph::open(6, 6);
        let start = g.vertex_at(Cell::new(0, 0)).unwrap();
        let target = g.vertex_at(Cell::new(5, 5)).unwrap();
        let cfg = SearchConfig {
            node_budget: Some(3),
            ..SearchConfig::new(Mode::Classic, Horizon::Infinite)
        };
        assert_eq!(
            plan(&g, start, target, &ReservationTable::new(), &cfg),
            Err(SearchFailure::BudgetExceeded)
        );
    }

    #[test]
    fn start_already_on_target() {
        let g = corridor(2);
        let cfg = SearchConfig::new(Mode::Transient, Horizon::Infinite);
        let p = plan(&g, v(&g, 0), v(&g, 0), &ReservationTable::new(), &cfg).unwrap();
        assert_eq!(p.steps, vec![v(&g, 0)]);
    }

    #[test]
    fn classic_cost_equals_distance_on_empty_table() {
        use rand::prelude::*;
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let passable: Vec<bool> = (0..48).map(|_| rng.gen_bool(0.75)).collect();
            let g = GridGraph::from_passable(8, 6, passable);
            if g.num_vertices() < 2 {
                continue;
            }
            let start = Vertex(rng.gen_range(0..g.num_vertices() as u32));
            let target = Vertex(rng.gen_range(0..g.num_vertices() as u32));
            let table = ReservationTable::new();
            let cfg = SearchConfig::new(Mode::Classic, Horizon::Infinite);
            let result = plan(&g, start, target, &table, &cfg);
            match g.distance_table(target).get(start) {
                Some(d) => assert_eq!(result.unwrap().cost(), d),
                None => assert_eq!(result, Err(SearchFailure::Exhausted)),
            }
        }
    }
}
