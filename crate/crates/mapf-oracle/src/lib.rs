//! Exhaustive joint-configuration-space optima for tiny instances.
//!
//! These are test oracles: Dijkstra over the space of joint agent
//! configurations, completely independent of the single-agent space-time
//! searches they are used to check. Only feasible for a handful of agents on
//! a handful of vertices.
//!
//! Classic cost is sum-of-costs with stay-at-end semantics: an agent's path
//! ends (and stops paying) once it rests on its target forever. Transient
//! cost is the sum over agents of the time of their first target visit; a
//! final configuration is any conflict-free standstill in which every agent
//! has visited its target (optionally restricted by a parking rule).

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use mapf_core::grid::{GridGraph, Vertex};

#[derive(Clone, PartialEq, Eq, Hash)]
struct State {
    positions: Vec<Vertex>,
    mask: u32,
}

fn conflict_free(from: &[Vertex], to: &[Vertex]) -> bool {
    for i in 0..to.len() {
        for j in (i + 1)..to.len() {
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

fn joint_moves(graph: &GridGraph, from: &[Vertex], frozen: u32) -> Vec<Vec<Vertex>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(from.len());
    fn rec(
        graph: &GridGraph,
        from: &[Vertex],
        frozen: u32,
        i: usize,
        current: &mut Vec<Vertex>,
        out: &mut Vec<Vec<Vertex>>,
    ) {
        if i == from.len() {
            if conflict_free(from, current) {
                out.push(current.clone());
            }
            return;
        }
        if frozen & (1 << i) != 0 {
            current.push(from[i]);
            rec(graph, from, frozen, i + 1, current, out);
            current.pop();
            return;
        }
        for &w in graph.neighbors(from[i]) {
            current.push(w);
            rec(graph, from, frozen, i + 1, current, out);
            current.pop();
        }
    }
    rec(graph, from, frozen, 0, &mut current, &mut out);
    out
}

fn dijkstra<FGoal, FExpand>(start: State, start_cost: u32, goal: FGoal, expand: FExpand) -> Option<u32>
where
    FGoal: Fn(&State) -> bool,
    FExpand: Fn(&State, &mut Vec<(State, u32)>),
{
    let mut dist: HashMap<State, u32> = HashMap::new();
    let mut heap: BinaryHeap<Reverse<(u32, u64)>> = BinaryHeap::new();
    let mut by_id: Vec<State> = Vec::new();
    let mut id_of: HashMap<State, u64> = HashMap::new();

    let intern = |s: State, by_id: &mut Vec<State>, id_of: &mut HashMap<State, u64>| -> u64 {
        if let Some(&id) = id_of.get(&s) {
            return id;
        }
        let id = by_id.len() as u64;
        by_id.push(s.clone());
        id_of.insert(s, id);
        id
    };

    dist.insert(start.clone(), start_cost);
    let sid = intern(start, &mut by_id, &mut id_of);
    heap.push(Reverse((start_cost, sid)));
    let mut succ = Vec::new();

    while let Some(Reverse((d, id))) = heap.pop() {
        let state = by_id[id as usize].clone();
        if dist.get(&state).copied() != Some(d) {
            continue;
        }
        if goal(&state) {
            return Some(d);
        }
        succ.clear();
        expand(&state, &mut succ);
        for (next, cost) in succ.drain(..) {
            let nd = d + cost;
            if dist.get(&next).map_or(true, |&old| nd < old) {
                dist.insert(next.clone(), nd);
                let nid = intern(next, &mut by_id, &mut id_of);
                heap.push(Reverse((nd, nid)));
            }
        }
    }
    None
}

/// Optimal classic-MAPF sum of costs, or `None` if unsolvable.
pub fn optimal_soc(graph: &GridGraph, starts: &[Vertex], targets: &[Vertex]) -> Option<u32> {
    let n = starts.len();
    assert!(n <= 4, "oracle is exponential in agents");
    let all = (1u32 << n) - 1;
    let start = State { positions: starts.to_vec(), mask: 0 };
    dijkstra(
        start,
        0,
        |s| s.mask == all,
        |s, out| {
            // rest an agent standing on its target (its path ends here)
            for i in 0..n {
                if s.mask & (1 << i) == 0 && s.positions[i] == targets[i] {
                    out.push((State { positions: s.positions.clone(), mask: s.mask | (1 << i) }, 0));
                }
            }
            let active = n as u32 - s.mask.count_ones();
            if active == 0 {
                return;
            }
            for next in joint_moves(graph, &s.positions, s.mask) {
                if next == s.positions && s.mask == 0 && n > 0 {
                    // a full wait with nobody rested makes no progress but is
                    // still legal; keep it, Dijkstra prunes by cost
                }
                out.push((State { positions: next, mask: s.mask }, active));
            }
        },
    )
}

/// Optimal transient sum of time-to-first-visit, or `None` if unsolvable.
///
/// `parking` restricts where agent `i` may stand in the final configuration;
/// `None` allows any conflict-free standstill.
pub fn optimal_transient_cost(
    graph: &GridGraph,
    starts: &[Vertex],
    targets: &[Vertex],
    parking: Option<&dyn Fn(usize, Vertex) -> bool>,
) -> Option<u32> {
    let n = starts.len();
    assert!(n <= 4, "oracle is exponential in agents");
    let all = (1u32 << n) - 1;
    let mut mask = 0u32;
    for i in 0..n {
        if starts[i] == targets[i] {
            mask |= 1 << i;
        }
    }
    let start = State { positions: starts.to_vec(), mask };
    dijkstra(
        start,
        0,
        |s| {
            s.mask == all
                && parking.map_or(true, |ok| {
                    s.positions.iter().enumerate().all(|(i, &v)| ok(i, v))
                })
        },
        |s, out| {
            let paying = n as u32 - s.mask.count_ones();
            for next in joint_moves(graph, &s.positions, 0) {
                let mut m = s.mask;
                for i in 0..n {
                    if next[i] == targets[i] {
                        m |= 1 << i;
                    }
                }
                out.push((State { positions: next, mask: m }, paying));
            }
        },
    )
}
