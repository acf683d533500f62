//! MovingAI-format grid maps and exact distance heuristics.
//!
//! A parsed map becomes an immutable [`GridGraph`]: passable cells get dense
//! vertex ids in row-major order, every vertex has a self-edge (waiting), and
//! motion is 4-connected. Distance tables are exact BFS distances to a target
//! vertex, computed lazily and cached per target.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use thiserror::Error;

/// Dense id of a passable cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex(pub u32);

impl Vertex {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// Grid coordinates, `x` is the column and `y` the row (MovingAI convention).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: u32,
    pub y: u32,
}

impl Cell {
    pub fn new(x: u32, y: u32) -> Self {
        Cell { x, y }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MapError {
    #[error("line {line}: expected `{expected}` header")]
    BadHeader { line: usize, expected: &'static str },
    #[error("line {line}: cannot parse dimension: {text}")]
    BadDimension { line: usize, text: String },
    #[error("line {line}: map row has width {got}, expected {expected}")]
    BadRowWidth { line: usize, got: usize, expected: usize },
    #[error("line {line}: unknown cell character `{ch}`")]
    UnknownCell { line: usize, ch: char },
    #[error("map body has {got} rows, expected {expected}")]
    BadRowCount { got: usize, expected: usize },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScenError {
    #[error("line {line}: expected `version` header")]
    MissingVersion { line: usize },
    #[error("line {line}: expected 9 fields, found {got}")]
    BadFieldCount { line: usize, got: usize },
    #[error("line {line}: cannot parse field `{field}`: {text}")]
    BadField { line: usize, field: &'static str, text: String },
    #[error("entry {entry}: cell {cell} is out of bounds")]
    OutOfBounds { entry: usize, cell: Cell },
    #[error("entry {entry}: cell {cell} is blocked")]
    Blocked { entry: usize, cell: Cell },
}

/// One `(start, goal)` row of a MovingAI scenario file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenEntry {
    pub start: Cell,
    pub goal: Cell,
}

/// Immutable 4-connected grid with wait moves.
///
/// Vertices are the passable cells in row-major order. `neighbors(v)` always
/// yields `v` itself first (the self-edge), then the passable 4-neighbors in
/// row-major order.
pub struct GridGraph {
    width: u32,
    height: u32,
    passable: Vec<bool>,
    /// cell index -> vertex id (u32::MAX for blocked cells)
    vertex_of_cell: Vec<u32>,
    /// vertex id -> cell
    cells: Vec<Cell>,
    /// CSR adjacency over vertices, self-edge first.
    adj_off: Vec<u32>,
    adj: Vec<Vertex>,
    dist_cache: RwLock<HashMap<Vertex, Arc<DistanceTable>>>,
}

impl fmt::Debug for GridGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridGraph")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("num_vertices", &self.cells.len())
            .finish()
    }
}

impl PartialEq for GridGraph {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height && self.passable == other.passable
    }
}

impl Clone for GridGraph {
    fn clone(&self) -> Self {
        GridGraph {
            width: self.width,
            height: self.height,
            passable: self.passable.clone(),
            vertex_of_cell: self.vertex_of_cell.clone(),
            cells: self.cells.clone(),
            adj_off: self.adj_off.clone(),
            adj: self.adj.clone(),
            dist_cache: RwLock::new(HashMap::new()),
        }
    }
}

impl GridGraph {
    /// Build a graph from explicit passability, row-major.
    pub fn from_passable(width: u32, height: u32, passable: Vec<bool>) -> Self {
        assert_eq!(passable.len(), (width * height) as usize);
        let mut vertex_of_cell = vec![u32::MAX; passable.len()];
        let mut cells = Vec::new();
        for y in 0..height {
            for x in 0..width {
                let idx = (y * width + x) as usize;
                if passable[idx] {
                    vertex_of_cell[idx] = cells.len() as u32;
                    cells.push(Cell::new(x, y));
                }
            }
        }
        let mut adj_off = Vec::with_capacity(cells.len() + 1);
        let mut adj = Vec::new();
        adj_off.push(0);
        for (v, cell) in cells.iter().enumerate() {
            adj.push(Vertex(v as u32)); // self-edge
            let (x, y) = (cell.x as i64, cell.y as i64);
            // row-major neighbor order: up, left, right, down
            for (nx, ny) in [(x, y - 1), (x - 1, y), (x + 1, y), (x, y + 1)] {
                if nx < 0 || ny < 0 || nx >= width as i64 || ny >= height as i64 {
                    continue;
                }
                let idx = (ny as u32 * width + nx as u32) as usize;
                if passable[idx] {
                    adj.push(Vertex(vertex_of_cell[idx]));
                }
            }
            adj_off.push(adj.len() as u32);
        }
        GridGraph {
            width,
            height,
            passable,
            vertex_of_cell,
            cells,
            adj_off,
            adj,
            dist_cache: RwLock::new(HashMap::new()),
        }
    }

    /// Fully passable `width x height` grid.
    pub fn open(width: u32, height: u32) -> Self {
        Self::from_passable(width, height, vec![true; (width * height) as usize])
    }

    /// Parse MovingAI `.map` text. Accepts `\n` and `\r\n` line endings.
    pub fn parse(text: &str) -> Result<Self, MapError> {
        let mut lines = text.lines().map(|l| l.trim_end_matches('\r')).enumerate();
        let (line, first) = lines.next().ok_or(MapError::BadHeader { line: 1, expected: "type" })?;
        if !first.starts_with("type") {
            return Err(MapError::BadHeader { line: line + 1, expected: "type" });
        }
        let mut height: Option<u32> = None;
        let mut width: Option<u32> = None;
        // height and width may come in either order, then the `map` marker
        for _ in 0..2 {
            let (line, l) = lines.next().ok_or(MapError::BadHeader { line: 0, expected: "height/width" })?;
            let mut parts = l.split_whitespace();
            match (parts.next(), parts.next()) {
                (Some("height"), Some(n)) => {
                    height = Some(n.parse().map_err(|_| MapError::BadDimension { line: line + 1, text: n.to_string() })?)
                }
                (Some("width"), Some(n)) => {
                    width = Some(n.parse().map_err(|_| MapError::BadDimension { line: line + 1, text: n.to_string() })?)
                }
                _ => return Err(MapError::BadHeader { line: line + 1, expected: "height/width" }),
            }
        }
        let (height, width) = match (height, width) {
            (Some(h), Some(w)) => (h, w),
            _ => return Err(MapError::BadHeader { line: 0, expected: "height/width" }),
        };
        let (line, l) = lines.next().ok_or(MapError::BadHeader { line: 0, expected: "map" })?;
        if l.trim() != "map" {
            return Err(MapError::BadHeader { line: line + 1, expected: "map" });
        }
        let mut passable = Vec::with_capacity((width * height) as usize);
        let mut rows = 0usize;
        for (line, l) in lines {
            if l.is_empty() {
                continue;
            }
            if l.chars().count() != width as usize {
                return Err(MapError::BadRowWidth { line: line + 1, got: l.chars().count(), expected: width as usize });
            }
            for ch in l.chars() {
                match ch {
                    '.' | 'G' => passable.push(true),
                    '@' | 'T' | 'O' => passable.push(false),
                    _ => return Err(MapError::UnknownCell { line: line + 1, ch }),
                }
            }
            rows += 1;
        }
        if rows != height as usize {
            return Err(MapError::BadRowCount { got: rows, expected: height as usize });
        }
        Ok(Self::from_passable(width, height, passable))
    }

    /// Render back to MovingAI `.map` text.
    pub fn to_map_text(&self) -> String {
        let mut s = format!("type octile\nheight {}\nwidth {}\nmap\n", self.height, self.width);
        for y in 0..self.height {
            for x in 0..self.width {
                let idx = (y * self.width + x) as usize;
                s.push(if self.passable[idx] { '.' } else { '@' });
            }
            s.push('\n');
        }
        s
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn num_vertices(&self) -> usize {
        self.cells.len()
    }

    pub fn is_passable(&self, cell: Cell) -> bool {
        cell.x < self.width
            && cell.y < self.height
            && self.passable[(cell.y * self.width + cell.x) as usize]
    }

    pub fn vertex_at(&self, cell: Cell) -> Option<Vertex> {
        if !self.is_passable(cell) {
            return None;
        }
        Some(Vertex(self.vertex_of_cell[(cell.y * self.width + cell.x) as usize]))
    }

    pub fn cell_of(&self, v: Vertex) -> Cell {
        self.cells[v.index()]
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.cells.len() as u32).map(Vertex)
    }

    /// Self-edge first, then passable 4-neighbors in row-major order.
    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        let lo = self.adj_off[v.index()] as usize;
        let hi = self.adj_off[v.index() + 1] as usize;
        &self.adj[lo..hi]
    }

    pub fn adjacent(&self, u: Vertex, w: Vertex) -> bool {
        self.neighbors(u).contains(&w)
    }

    /// Exact distance table to `target`, cached per target.
    pub fn distance_table(&self, target: Vertex) -> Arc<DistanceTable> {
        if let Some(t) = self.dist_cache.read().unwrap().get(&target) {
            return Arc::clone(t);
        }
        let table = Arc::new(DistanceTable::build(self, target));
        let mut cache = self.dist_cache.write().unwrap();
        Arc::clone(cache.entry(target).or_insert(table))
    }
}

/// BFS distances (edge counts, self-edges excluded) to one target vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceTable {
    pub target: Vertex,
    dist: Vec<u32>,
}

pub const UNREACHABLE: u32 = u32::MAX;

impl DistanceTable {
    pub fn build(graph: &GridGraph, target: Vertex) -> Self {
        let mut dist = vec![UNREACHABLE; graph.num_vertices()];
        dist[target.index()] = 0;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(target);
        while let Some(v) = queue.pop_front() {
            let d = dist[v.index()];
            for &w in graph.neighbors(v) {
                if w != v && dist[w.index()] == UNREACHABLE {
                    dist[w.index()] = d + 1;
                    queue.push_back(w);
                }
            }
        }
        DistanceTable { target, dist }
    }

    /// Distance from `v` to the target, `None` if unreachable.
    pub fn get(&self, v: Vertex) -> Option<u32> {
        match self.dist[v.index()] {
            UNREACHABLE => None,
            d => Some(d),
        }
    }

    pub fn raw(&self, v: Vertex) -> u32 {
        self.dist[v.index()]
    }
}

/// Parse MovingAI `.scen` text into `(start, goal)` entries in file order.
pub fn parse_scen(text: &str) -> Result<Vec<ScenEntry>, ScenError> {
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r')).enumerate();
    let (line, first) = lines.next().ok_or(ScenError::MissingVersion { line: 1 })?;
    if !first.trim_start().starts_with("version") {
        return Err(ScenError::MissingVersion { line: line + 1 });
    }
    let mut entries = Vec::new();
    for (line, l) in lines {
        if l.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields.len() != 9 {
            return Err(ScenError::BadFieldCount { line: line + 1, got: fields.len() });
        }
        let num = |field: &'static str, s: &str| -> Result<u32, ScenError> {
            s.parse().map_err(|_| ScenError::BadField { line: line + 1, field, text: s.to_string() })
        };
        let sx = num("sx", fields[4])?;
        let sy = num("sy", fields[5])?;
        let gx = num("gx", fields[6])?;
        let gy = num("gy", fields[7])?;
        entries.push(ScenEntry { start: Cell::new(sx, sy), goal: Cell::new(gx, gy) });
    }
    Ok(entries)
}

/// Validate scenario entries against a map: in bounds and passable.
pub fn check_scen_entries(graph: &GridGraph, entries: &[ScenEntry]) -> Result<(), ScenError> {
    for (i, e) in entries.iter().enumerate() {
        for cell in [e.start, e.goal] {
            if cell.x >= graph.width() || cell.y >= graph.height() {
                return Err(ScenError::OutOfBounds { entry: i, cell });
            }
            if !graph.is_passable(cell) {
                return Err(ScenError::Blocked { entry: i, cell });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_two_by_two_with_block() {
        let g = GridGraph::parse("type octile\nheight 2\nwidth 2\nmap\n.@\n..\n").unwrap();
        assert_eq!(g.num_vertices(), 3);
        let v00 = g.vertex_at(Cell::new(0, 0)).unwrap();
        let v01 = g.vertex_at(Cell::new(0, 1)).unwrap();
        assert_eq!(g.vertex_at(Cell::new(1, 0)), None);
        assert_eq!(g.neighbors(v00), &[v00, v01]);
    }

    #[test]
    fn parse_single_cell() {
        let g = GridGraph::parse("type octile\nheight 1\nwidth 1\nmap\n.\n").unwrap();
        assert_eq!(g.num_vertices(), 1);
        let v = g.vertex_at(Cell::new(0, 0)).unwrap();
        assert_eq!(g.neighbors(v), &[v]);
    }

    #[test]
    fn disconnected_cells_are_unreachable() {
        let g = GridGraph::parse("type octile\nheight 1\nwidth 3\nmap\n.@.\n").unwrap();
        assert_eq!(g.num_vertices(), 2);
        let a = g.vertex_at(Cell::new(0, 0)).unwrap();
        let b = g.vertex_at(Cell::new(2, 0)).unwrap();
        assert_eq!(g.distance_table(a).get(b), None);
        assert_eq!(g.distance_table(b).get(a), None);
    }

    #[test]
    fn corridor_distances() {
        let g = GridGraph::parse("type octile\nheight 1\nwidth 4\nmap\n....\n").unwrap();
        let target = g.vertex_at(Cell::new(3, 0)).unwrap();
        let t = g.distance_table(target);
        let dists: Vec<u32> = (0..4)
            .map(|x| t.get(g.vertex_at(Cell::new(x, 0)).unwrap()).unwrap())
            .collect();
        assert_eq!(dists, vec![3, 2, 1, 0]);
        assert_eq!(t.get(target), Some(0));
    }

    #[test]
    fn crlf_line_endings() {
        let g = GridGraph::parse("type octile\r\nheight 1\r\nwidth 2\r\nmap\r\n..\r\n").unwrap();
        assert_eq!(g.num_vertices(), 2);
    }

    #[test]
    fn swamp_passable_trees_blocked() {
        let g = GridGraph::parse("type octile\nheight 1\nwidth 4\nmap\n.GT@\n").unwrap();
        assert_eq!(g.num_vertices(), 2);
    }

    #[test]
    fn map_errors_name_lines() {
        let err = GridGraph::parse("type octile\nheight 2\nwidth 2\nmap\n..\n.x\n").unwrap_err();
        assert_eq!(err, MapError::UnknownCell { line: 6, ch: 'x' });
        let err = GridGraph::parse("type octile\nheight 2\nwidth 2\nmap\n...\n..\n").unwrap_err();
        assert_eq!(err, MapError::BadRowWidth { line: 5, got: 3, expected: 2 });
        let err = GridGraph::parse("type octile\nheight 3\nwidth 2\nmap\n..\n..\n").unwrap_err();
        assert_eq!(err, MapError::BadRowCount { got: 2, expected: 3 });
    }

    #[test]
    fn scen_basic() {
        let entries =
            parse_scen("version 1\n0\tempty.map\t8\t8\t0\t0\t1\t0\t1.0\n").unwrap();
        assert_eq!(
            entries,
            vec![ScenEntry { start: Cell::new(0, 0), goal: Cell::new(1, 0) }]
        );
        assert_eq!(parse_scen("version 1\n").unwrap(), vec![]);
    }

    #[test]
    fn scen_validation_rejects_blocked() {
        let g = GridGraph::parse("type octile\nheight 1\nwidth 2\nmap\n.@\n").unwrap();
        let entries = parse_scen("version 1\n0\tm\t2\t1\t1\t0\t0\t0\t1.0\n").unwrap();
        let err = check_scen_entries(&g, &entries).unwrap_err();
        assert_eq!(err, ScenError::Blocked { entry: 0, cell: Cell::new(1, 0) });
    }

    #[test]
    fn scen_field_count() {
        let err = parse_scen("version 1\n0\tm\t2\t1\t1\t0\n").unwrap_err();
        assert_eq!(err, ScenError::BadFieldCount { line: 2, got: 6 });
    }

    /// Per-query Dijkstra oracle, independent of the BFS table.
    fn dijkstra_dist(graph: &GridGraph, from: Vertex, to: Vertex) -> Option<u32> {
        use std::cmp::Reverse;
        use std::collections::BinaryHeap;
        let mut dist = vec![u32::MAX; graph.num_vertices()];
        dist[from.index()] = 0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0u32, from)));
        while let Some(Reverse((d, v))) = heap.pop() {
            if d > dist[v.index()] {
                continue;
            }
            if v == to {
                return Some(d);
            }
            for &w in graph.neighbors(v) {
                if w != v && d + 1 < dist[w.index()] {
                    dist[w.index()] = d + 1;
                    heap.push(Reverse((d + 1, w)));
                }
            }
        }
        None
    }

    #[test]
    fn distance_table_matches_dijkstra_on_random_map() {
        use rand::prelude::*;
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..4 {
            let passable: Vec<bool> = (0..64).map(|_| rng.gen_bool(0.75)).collect();
            let g = GridGraph::from_passable(8, 8, passable);
            if g.num_vertices() == 0 {
                continue;
            }
            let target = Vertex(rng.gen_range(0..g.num_vertices() as u32));
            let table = g.distance_table(target);
            for v in g.vertices() {
                assert_eq!(table.get(v), dijkstra_dist(&g, v, target), "vertex {v}");
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn heuristic_consistent_on_random_maps(seed in 0u64..50) {
            use rand::prelude::*;
            let mut rng = StdRng::seed_from_u64(seed);
            let passable: Vec<bool> = (0..48).map(|_| rng.gen_bool(0.7)).collect();
            let g = GridGraph::from_passable(8, 6, passable);
            if g.num_vertices() == 0 {
                return Ok(());
            }
            let target = Vertex(rng.gen_range(0..g.num_vertices() as u32));
            let t = g.distance_table(target);
            for v in g.vertices() {
                for &w in g.neighbors(v) {
                    if w == v { continue; }
                    if let (Some(a), Some(b)) = (t.get(v), t.get(w)) {
                        proptest::prop_assert!(a.abs_diff(b) <= 1);
                    } else {
                        // both sides of a broken pair must be unreachable
                        proptest::prop_assert_eq!(t.get(v), t.get(w));
                    }
                }
            }
        }

        #[test]
        fn map_text_round_trip(seed in 0u64..50) {
            use rand::prelude::*;
            let mut rng = StdRng::seed_from_u64(seed);
            let passable: Vec<bool> = (0..30).map(|_| rng.gen_bool(0.6)).collect();
            let g = GridGraph::from_passable(6, 5, passable);
            let reparsed = GridGraph::parse(&g.to_map_text()).unwrap();
            proptest::prop_assert_eq!(&g, &reparsed);
        }

        #[test]
        fn neighbors_symmetric(seed in 0u64..30) {
            use rand::prelude::*;
            let mut rng = StdRng::seed_from_u64(seed);
            let passable: Vec<bool> = (0..36).map(|_| rng.gen_bool(0.7)).collect();
            let g = GridGraph::from_passable(6, 6, passable);
            for v in g.vertices() {
                proptest::prop_assert!(g.neighbors(v).contains(&v));
                for &w in g.neighbors(v) {
                    proptest::prop_assert!(g.neighbors(w).contains(&v));
                }
            }
        }
    }
}
