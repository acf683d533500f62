//! Paths, conflicts, solution costs and validators.
//!
//! Conflict checking uses stay-at-end semantics: once a path runs out, the
//! agent keeps occupying its final vertex, so paths of different lengths can
//! be compared at every timestep.

use std::fmt;

use crate::grid::{Cell, GridGraph, Vertex};
use crate::search::Horizon;

/// Goal semantics of a solution or solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Every path must end at the agent's target.
    Classic,
    /// Every path must include the agent's target somewhere.
    Transient,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Classic => write!(f, "classic"),
            Mode::Transient => write!(f, "transient"),
        }
    }
}

/// Time-indexed vertex sequence for one agent, starting at timestep 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub agent: usize,
    pub steps: Vec<Vertex>,
}

impl Path {
    pub fn new(agent: usize, steps: Vec<Vertex>) -> Self {
        debug_assert!(!steps.is_empty());
        Path { agent, steps }
    }

    /// Number of moves: vertex count (non-unique) minus one.
    pub fn cost(&self) -> u32 {
        (self.steps.len() - 1) as u32
    }

    /// Position at `t` with stay-at-end padding.
    pub fn at(&self, t: u32) -> Vertex {
        *self.steps.get(t as usize).unwrap_or(self.steps.last().unwrap())
    }

    pub fn last(&self) -> Vertex {
        *self.steps.last().unwrap()
    }

    /// Earliest timestep at which the path occupies `v`.
    pub fn first_visit(&self, v: Vertex) -> Option<u32> {
        self.steps.iter().position(|&s| s == v).map(|i| i as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConflictKind {
    /// Both agents occupy `0` at the conflict timestep.
    Vertex(Vertex),
    /// The first agent moves `0 -> 1` while the second moves `1 -> 0`
    /// across timestep `time -> time + 1`.
    Swap(Vertex, Vertex),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conflict {
    pub agents: (usize, usize),
    pub time: u32,
    pub kind: ConflictKind,
}

/// One path per agent plus the goal semantics they were planned under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub mode: Mode,
    pub paths: Vec<Path>,
}

impl Solution {
    pub fn soc(&self) -> u32 {
        self.paths.iter().map(Path::cost).sum()
    }

    pub fn makespan(&self) -> u32 {
        self.paths.iter().map(Path::cost).max().unwrap_or(0)
    }

    /// Sum over agents of the earliest time their target is visited.
    /// The transient analogue of SOC; `targets[i]` must appear in path `i`.
    pub fn sum_time_to_first_visit(&self, targets: &[Vertex]) -> Option<u32> {
        let mut total = 0;
        for (path, &t) in self.paths.iter().zip(targets) {
            total += path.first_visit(t)?;
        }
        Some(total)
    }
}

/// All vertex and swap conflicts with timestep below `horizon`, in increasing
/// timestep order (ties: agent pair, vertex before swap). Shorter paths are
/// padded with their final vertex.
pub fn detect_conflicts(paths: &[Path], horizon: Horizon) -> Vec<Conflict> {
    let mut out = Vec::new();
    let max_len = paths.iter().map(|p| p.steps.len()).max().unwrap_or(0) as u32;
    for i in 0..paths.len() {
        for j in (i + 1)..paths.len() {
            let (a, b) = (&paths[i], &paths[j]);
            let pair_len = (a.steps.len().max(b.steps.len())) as u32;
            for t in 0..max_len.max(1) {
                if !horizon.contains(t) {
                    break;
                }
                let (pa, pb) = (a.at(t), b.at(t));
                if pa == pb {
                    out.push(Conflict {
                        agents: (a.agent, b.agent),
                        time: t,
                        kind: ConflictKind::Vertex(pa),
                    });
                }
                // swap across t -> t+1; beyond both paths nothing moves
                if t + 1 < pair_len {
                    let (na, nb) = (a.at(t + 1), b.at(t + 1));
                    if pa == nb && na == pb && pa != pb {
                        out.push(Conflict {
                            agents: (a.agent, b.agent),
                            time: t,
                            kind: ConflictKind::Swap(pa, na),
                        });
                    }
                }
            }
        }
    }
    out.sort_by_key(|c| {
        (c.time, c.agents, matches!(c.kind, ConflictKind::Swap(..)) as u8)
    });
    out
}

/// A reason a solution fails validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyPath { agent: usize },
    WrongStart { agent: usize, expected: Vertex, got: Vertex },
    IllegalMove { agent: usize, time: u32, from: Vertex, to: Vertex },
    Conflicting(Conflict),
    DoesNotEndAtTarget { agent: usize, target: Vertex },
    NeverVisitsTarget { agent: usize, target: Vertex },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyPath { agent } => write!(f, "agent {agent}: empty path"),
            Violation::WrongStart { agent, expected, got } => {
                write!(f, "agent {agent}: starts at {got}, expected {expected}")
            }
            Violation::IllegalMove { agent, time, from, to } => {
                write!(f, "agent {agent}: illegal move {from}->{to} at t={time}")
            }
            Violation::Conflicting(c) => write!(
                f,
                "agents {} and {} conflict at t={}",
                c.agents.0, c.agents.1, c.time
            ),
            Violation::DoesNotEndAtTarget { agent, target } => {
                write!(f, "path of agent {agent} does not end at {target}")
            }
            Violation::NeverVisitsTarget { agent, target } => {
                write!(f, "path of agent {agent} never visits {target}")
            }
        }
    }
}

/// Check starts, step adjacency, conflict-freeness (infinite horizon) and the
/// mode's target condition. Returns every violation found.
pub fn validate(
    solution: &Solution,
    graph: &GridGraph,
    starts: &[Vertex],
    targets: &[Vertex],
    mode: Mode,
) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, path) in solution.paths.iter().enumerate() {
        if path.steps.is_empty() {
            out.push(Violation::EmptyPath { agent: i });
            continue;
        }
        if path.steps[0] != starts[i] {
            out.push(Violation::WrongStart { agent: i, expected: starts[i], got: path.steps[0] });
        }
        for (t, w) in path.steps.windows(2).enumerate() {
            if w[0] != w[1] && !graph.adjacent(w[0], w[1]) {
                out.push(Violation::IllegalMove {
                    agent: i,
                    time: t as u32,
                    from: w[0],
                    to: w[1],
                });
            }
        }
        match mode {
            Mode::Classic => {
                if path.last() != targets[i] {
                    out.push(Violation::DoesNotEndAtTarget { agent: i, target: targets[i] });
                }
            }
            Mode::Transient => {
                if path.first_visit(targets[i]).is_none() {
                    out.push(Violation::NeverVisitsTarget { agent: i, target: targets[i] });
                }
            }
        }
    }
    for c in detect_conflicts(&solution.paths, Horizon::Infinite) {
        out.push(Violation::Conflicting(c));
    }
    out
}

/// `agent_id: (x0,y0)->(x1,y1)->...`, one line per agent.
pub fn serialize_paths(graph: &GridGraph, paths: &[Path]) -> String {
    let mut s = String::new();
    for p in paths {
        s.push_str(&format!("{}: ", p.agent));
        let parts: Vec<String> = p
            .steps
            .iter()
            .map(|&v| {
                let c = graph.cell_of(v);
                format!("({},{})", c.x, c.y)
            })
            .collect();
        s.push_str(&parts.join("->"));
        s.push('\n');
    }
    s
}

/// Inverse of [`serialize_paths`].
pub fn parse_paths(graph: &GridGraph, text: &str) -> Result<Vec<Path>, String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (id, rest) = line.split_once(':').ok_or_else(|| format!("missing `:` in {line}"))?;
        let agent: usize = id.trim().parse().map_err(|_| format!("bad agent id in {line}"))?;
        let mut steps = Vec::new();
        for part in rest.trim().split("->") {
            let coords = part.trim().trim_start_matches('(').trim_end_matches(')');
            let (x, y) = coords.split_once(',').ok_or_else(|| format!("bad cell {part}"))?;
            let cell = Cell::new(
                x.trim().parse().map_err(|_| format!("bad x in {part}"))?,
                y.trim().parse().map_err(|_| format!("bad y in {part}"))?,
            );
            steps.push(graph.vertex_at(cell).ok_or_else(|| format!("blocked cell {part}"))?);
        }
        out.push(Path::new(agent, steps));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridGraph;

    fn corridor(n: u32) -> GridGraph {
        GridGraph::open(n, 1)
    }

    fn v(g: &GridGraph, x: u32) -> Vertex {
        g.vertex_at(Cell::new(x, 0)).unwrap()
    }

    #[test]
    fn path_cost_counts_waits() {
        let g = corridor(4);
        let p = Path::new(0, vec![v(&g, 0), v(&g, 1), v(&g, 2), v(&g, 3)]);
        assert_eq!(p.cost(), 3);
        assert_eq!(Path::new(0, vec![v(&g, 0)]).cost(), 0);
        assert_eq!(Path::new(0, vec![v(&g, 0), v(&g, 0), v(&g, 1)]).cost(), 2);
    }

    #[test]
    fn soc_and_makespan() {
        let g = corridor(4);
        let s = Solution {
            mode: Mode::Classic,
            paths: vec![
                Path::new(0, vec![v(&g, 0), v(&g, 1), v(&g, 2), v(&g, 3)]),
                Path::new(1, vec![v(&g, 3), v(&g, 3), v(&g, 3)]),
            ],
        };
        assert_eq!(s.soc(), 5);
        assert_eq!(s.makespan(), 3);
        let single = Solution { mode: Mode::Classic, paths: vec![Path::new(0, vec![v(&g, 0)])] };
        assert_eq!(single.soc(), 0);
        assert_eq!(single.makespan(), 0);
    }

    #[test]
    fn vertex_conflict_detected() {
        let g = corridor(4);
        let paths = vec![
            Path::new(0, vec![v(&g, 0), v(&g, 1)]),
            Path::new(1, vec![v(&g, 2), v(&g, 1)]),
        ];
        let cs = detect_conflicts(&paths, Horizon::Infinite);
        assert_eq!(
            cs,
            vec![Conflict { agents: (0, 1), time: 1, kind: ConflictKind::Vertex(v(&g, 1)) }]
        );
    }

    #[test]
    fn swap_conflict_detected() {
        let g = corridor(2);
        let paths = vec![
            Path::new(0, vec![v(&g, 0), v(&g, 1)]),
            Path::new(1, vec![v(&g, 1), v(&g, 0)]),
        ];
        let cs = detect_conflicts(&paths, Horizon::Infinite);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].time, 0);
        assert_eq!(cs[0].kind, ConflictKind::Swap(v(&g, 0), v(&g, 1)));
    }

    #[test]
    fn stay_at_end_padding_conflicts() {
        let g = corridor(3);
        // [A,B,C] vs parked [C]: the mover arrives where the other parked
        let paths = vec![
            Path::new(0, vec![v(&g, 0), v(&g, 1), v(&g, 2)]),
            Path::new(1, vec![v(&g, 2)]),
        ];
        let cs = detect_conflicts(&paths, Horizon::Infinite);
        assert!(cs
            .iter()
            .any(|c| c.time == 2 && c.kind == ConflictKind::Vertex(v(&g, 2))));
    }

    #[test]
    fn horizon_truncates_conflicts() {
        let g = corridor(3);
        let paths = vec![
            Path::new(0, vec![v(&g, 0), v(&g, 1), v(&g, 2)]),
            Path::new(1, vec![v(&g, 2)]),
        ];
        assert!(detect_conflicts(&paths, Horizon::Finite(2)).is_empty());
        assert_eq!(detect_conflicts(&paths, Horizon::Finite(3)).len(), 1);
    }

    /// Naive checker that explicitly pads all paths to one length.
    fn naive_conflicts(paths: &[Path]) -> Vec<(usize, usize, u32, bool)> {
        let len = paths.iter().map(|p| p.steps.len()).max().unwrap();
        let padded: Vec<Vec<Vertex>> = paths
            .iter()
            .map(|p| (0..len as u32).map(|t| p.at(t)).collect())
            .collect();
        let mut out = Vec::new();
        for i in 0..paths.len() {
            for j in (i + 1)..paths.len() {
                for t in 0..len {
                    if padded[i][t] == padded[j][t] {
                        out.push((paths[i].agent, paths[j].agent, t as u32, false));
                    }
                    if t + 1 < len
                        && padded[i][t] == padded[j][t + 1]
                        && padded[i][t + 1] == padded[j][t]
                        && padded[i][t] != padded[j][t]
                    {
                        out.push((paths[i].agent, paths[j].agent, t as u32, true));
                    }
                }
            }
        }
        out
    }

    proptest::proptest! {
        #[test]
        fn detector_matches_naive_padding(seed in 0u64..200) {
            use rand::prelude::*;
            let g = GridGraph::open(4, 4);
            let mut rng = StdRng::seed_from_u64(seed);
            let n = rng.gen_range(2..4usize);
            let paths: Vec<Path> = (0..n)
                .map(|i| {
                    let mut at = Vertex(rng.gen_range(0..16));
                    let len = rng.gen_range(1..7usize);
                    let mut steps = vec![at];
                    for _ in 1..len {
                        let ns = g.neighbors(at);
                        at = ns[rng.gen_range(0..ns.len())];
                        steps.push(at);
                    }
                    Path::new(i, steps)
                })
                .collect();
            let got: Vec<(usize, usize, u32, bool)> = detect_conflicts(&paths, Horizon::Infinite)
                .iter()
                .map(|c| (c.agents.0, c.agents.1, c.time, matches!(c.kind, ConflictKind::Swap(..))))
                .collect();
            let mut expected = naive_conflicts(&paths);
            expected.sort_by_key(|&(i, j, t, swap)| (t, i, j, swap));
            proptest::prop_assert_eq!(got, expected);

            // symmetric in path order
            let mut rev = paths.clone();
            rev.reverse();
            let mut from_rev: Vec<(usize, usize, u32, bool)> = detect_conflicts(&rev, Horizon::Infinite)
                .iter()
                .map(|c| {
                    let (a, b) = c.agents;
                    (a.min(b), a.max(b), c.time, matches!(c.kind, ConflictKind::Swap(..)))
                })
                .collect();
            from_rev.sort_unstable();
            let mut fwd: Vec<(usize, usize, u32, bool)> = detect_conflicts(&paths, Horizon::Infinite)
                .iter()
                .map(|c| {
                    let (a, b) = c.agents;
                    (a.min(b), a.max(b), c.time, matches!(c.kind, ConflictKind::Swap(..)))
                })
                .collect();
            fwd.sort_unstable();
            proptest::prop_assert_eq!(fwd, from_rev);
        }
    }

    #[test]
    fn classic_accepted_implies_transient_accepted() {
        let g = corridor(4);
        let starts = [v(&g, 0), v(&g, 3)];
        let targets = [v(&g, 2), v(&g, 3)];
        let sol = Solution {
            mode: Mode::Classic,
            paths: vec![
                Path::new(0, vec![v(&g, 0), v(&g, 1), v(&g, 2)]),
                Path::new(1, vec![v(&g, 3)]),
            ],
        };
        assert!(validate(&sol, &g, &starts, &targets, Mode::Classic).is_empty());
        assert!(validate(&sol, &g, &starts, &targets, Mode::Transient).is_empty());
    }

    #[test]
    fn transient_path_fails_classic_check() {
        let g = corridor(4);
        // visits x=1 then parks at x=3: fine transiently, not classically
        let sol = Solution {
            mode: Mode::Transient,
            paths: vec![Path::new(0, vec![v(&g, 2), v(&g, 1), v(&g, 2), v(&g, 3)])],
        };
        let starts = [v(&g, 2)];
        let targets = [v(&g, 1)];
        assert!(validate(&sol, &g, &starts, &targets, Mode::Transient).is_empty());
        let violations = validate(&sol, &g, &starts, &targets, Mode::Classic);
        assert_eq!(
            violations,
            vec![Violation::DoesNotEndAtTarget { agent: 0, target: v(&g, 1) }]
        );
    }

    #[test]
    fn teleport_is_illegal() {
        let g = corridor(4);
        let sol = Solution {
            mode: Mode::Classic,
            paths: vec![Path::new(0, vec![v(&g, 0), v(&g, 2)])],
        };
        let violations = validate(&sol, &g, &[v(&g, 0)], &[v(&g, 2)], Mode::Classic);
        assert_eq!(
            violations,
            vec![Violation::IllegalMove { agent: 0, time: 0, from: v(&g, 0), to: v(&g, 2) }]
        );
    }

    #[test]
    fn shared_targets_are_not_errors() {
        let g = GridGraph::open(3, 3);
        let a = g.vertex_at(Cell::new(0, 0)).unwrap();
        let b = g.vertex_at(Cell::new(2, 2)).unwrap();
        let shared = g.vertex_at(Cell::new(1, 1)).unwrap();
        // both visit the shared target at different times
        let sol = Solution {
            mode: Mode::Transient,
            paths: vec![
                Path::new(0, vec![a, g.vertex_at(Cell::new(1, 0)).unwrap(), shared, g.vertex_at(Cell::new(1, 0)).unwrap()]),
                Path::new(1, vec![b, b, g.vertex_at(Cell::new(2, 1)).unwrap(), shared]),
            ],
        };
        assert!(validate(&sol, &g, &[a, b], &[shared, shared], Mode::Transient).is_empty());
    }

    #[test]
    fn paths_serialize_round_trip() {
        let g = GridGraph::open(3, 2);
        let paths = vec![
            Path::new(0, vec![g.vertex_at(Cell::new(0, 0)).unwrap(), g.vertex_at(Cell::new(1, 0)).unwrap()]),
            Path::new(1, vec![g.vertex_at(Cell::new(2, 1)).unwrap()]),
        ];
        let text = serialize_paths(&g, &paths);
        assert_eq!(text, "0: (0,0)->(1,0)\n1: (2,1)\n");
        assert_eq!(parse_paths(&g, &text).unwrap(), paths);
    }
}
