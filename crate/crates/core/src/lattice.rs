//! Torus geometry, oriented edges and oriented paths in the dual lattice.
//!
//! Sites carry representative coordinates `lo..=hi` with `lo = -((L-1) div 2)`,
//! which is `-L/2+1` for even `L`. The site index is `(x1-lo)*L + (x2-lo)`, so
//! the first coordinate is the slow one. Dual vertices sit at half-integer
//! points and are stored by their lower-left site `(a, b) ~ (a+1/2, b+1/2)`.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

pub type Site = usize;
pub type SiteSet = BTreeSet<Site>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    East,
    North,
    West,
    South,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::East,
        Direction::North,
        Direction::West,
        Direction::South,
    ];

    pub fn offset(self) -> (i64, i64) {
        match self {
            Direction::East => (1, 0),
            Direction::North => (0, 1),
            Direction::West => (-1, 0),
            Direction::South => (0, -1),
        }
    }

    pub fn reverse(self) -> Direction {
        match self {
            Direction::East => Direction::West,
            Direction::North => Direction::South,
            Direction::West => Direction::East,
            Direction::South => Direction::North,
        }
    }

    /// Quarter turn counter-clockwise.
    pub fn left(self) -> Direction {
        match self {
            Direction::East => Direction::North,
            Direction::North => Direction::West,
            Direction::West => Direction::South,
            Direction::South => Direction::East,
        }
    }

    /// Quarter turn clockwise.
    pub fn right(self) -> Direction {
        self.left().reverse()
    }

    fn is_positive(self) -> bool {
        matches!(self, Direction::East | Direction::North)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TorusLattice {
    l: usize,
    lo: i64,
}

impl TorusLattice {
    pub fn new(l: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::Geometry(format!("side length {l} must be at least 2")));
        }
        let lo = -(((l - 1) / 2) as i64);
        Ok(TorusLattice { l, lo })
    }

    pub fn side(&self) -> usize {
        self.l
    }

    pub fn num_sites(&self) -> usize {
        self.l * self.l
    }

    pub fn num_edges(&self) -> usize {
        2 * self.l * self.l
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.l as i64 - 1
    }

    /// Representative of an integer coordinate modulo `L`.
    pub fn wrap(&self, c: i64) -> i64 {
        (c - self.lo).rem_euclid(self.l as i64) + self.lo
    }

    pub fn site(&self, x1: i64, x2: i64) -> Site {
        let a = (self.wrap(x1) - self.lo) as usize;
        let b = (self.wrap(x2) - self.lo) as usize;
        a * self.l + b
    }

    pub fn coords(&self, s: Site) -> (i64, i64) {
        debug_assert!(s < self.num_sites());
        ((s / self.l) as i64 + self.lo, (s % self.l) as i64 + self.lo)
    }

    pub fn sites(&self) -> std::ops::Range<Site> {
        0..self.num_sites()
    }

    pub fn all_sites(&self) -> SiteSet {
        self.sites().collect()
    }

    pub fn neighbor(&self, s: Site, dir: Direction) -> Site {
        let (x1, x2) = self.coords(s);
        let (d1, d2) = dir.offset();
        self.site(x1 + d1, x2 + d2)
    }

    /// Shortest signed displacement between representative coordinates.
    fn axis_gap(&self, a: i64, b: i64) -> f64 {
        let d = (a - b).rem_euclid(self.l as i64) as f64;
        d.min(self.l as f64 - d)
    }

    pub fn dist(&self, x: Site, y: Site) -> f64 {
        let (a1, a2) = self.coords(x);
        let (b1, b2) = self.coords(y);
        self.axis_gap(a1, b1).hypot(self.axis_gap(a2, b2))
    }

    /// `S^r = {x : dist(x, S) <= r}`.
    pub fn neighborhood(&self, set: &SiteSet, r: f64) -> SiteSet {
        self.sites()
            .filter(|&x| set.iter().any(|&y| self.dist(x, y) <= r + 1e-12))
            .collect()
    }

    /// The `2L^2` edges pointing in a positive direction, indexed `2*site + {0: East, 1: North}`.
    pub fn canonical_edges(&self) -> impl Iterator<Item = OrientedEdge> + '_ {
        self.sites().flat_map(|s| {
            [
                OrientedEdge::new(s, Direction::East),
                OrientedEdge::new(s, Direction::North),
            ]
        })
    }

    pub fn edge_target(&self, e: OrientedEdge) -> Site {
        self.neighbor(e.source, e.dir)
    }

    /// Canonical index and the sign relating `e` to the canonical orientation.
    pub fn canonical(&self, e: OrientedEdge) -> (usize, f64) {
        match e.dir {
            Direction::East => (2 * e.source, 1.0),
            Direction::North => (2 * e.source + 1, 1.0),
            Direction::West => (2 * self.neighbor(e.source, Direction::West), -1.0),
            Direction::South => (2 * self.neighbor(e.source, Direction::South) + 1, -1.0),
        }
    }

    pub fn edge_from_canonical(&self, idx: usize) -> OrientedEdge {
        let dir = if idx % 2 == 0 { Direction::East } else { Direction::North };
        OrientedEdge::new(idx / 2, dir)
    }

    pub fn reverse_edge(&self, e: OrientedEdge) -> OrientedEdge {
        OrientedEdge::new(self.edge_target(e), e.dir.reverse())
    }

    /// Straight loop winding once in the positive `direction` (1 or 2) through `through`.
    pub fn winding_loop(&self, direction: u8, through: Site) -> Vec<OrientedEdge> {
        let dir = if direction == 1 { Direction::East } else { Direction::North };
        let mut s = through;
        (0..self.l)
            .map(|_| {
                let e = OrientedEdge::new(s, dir);
                s = self.edge_target(e);
                e
            })
            .collect()
    }

    /// Counter-clockwise plaquette with lower-left corner `s`.
    pub fn plaquette(&self, s: Site) -> [OrientedEdge; 4] {
        let e1 = OrientedEdge::new(s, Direction::East);
        let s1 = self.edge_target(e1);
        let e2 = OrientedEdge::new(s1, Direction::North);
        let s2 = self.edge_target(e2);
        let e3 = OrientedEdge::new(s2, Direction::West);
        let s3 = self.edge_target(e3);
        [e1, e2, e3, OrientedEdge::new(s3, Direction::South)]
    }

    pub fn dual_vertex(&self, a: i64, b: i64) -> DualVertex {
        DualVertex {
            a: self.wrap(a),
            b: self.wrap(b),
        }
    }

    /// Dual edges of `∂X`, oriented with `X` on the right, grouped into closed loops.
    pub fn boundary_path(&self, x: &SiteSet) -> Vec<DualPath> {
        let mut edges: Vec<DualEdge> = Vec::new();
        for &s in x {
            for dir in Direction::ALL {
                let t = self.neighbor(s, dir);
                if !x.contains(&t) {
                    edges.push(DualEdge::from_crossing(self, OrientedEdge::new(s, dir)));
                }
            }
        }
        edges.sort();
        edges.dedup();

        let mut by_start: BTreeMap<DualVertex, Vec<usize>> = BTreeMap::new();
        for (i, e) in edges.iter().enumerate() {
            by_start.entry(e.from).or_default().push(i);
        }
        let mut used = vec![false; edges.len()];
        let mut loops = Vec::new();
        for first in 0..edges.len() {
            if used[first] {
                continue;
            }
            used[first] = true;
            let start = edges[first].from;
            let mut current = edges[first];
            let mut path = vec![current];
            loop {
                let v = current.to(self);
                if v == start {
                    break;
                }
                // Prefer the right turn at pinch points so each loop hugs X.
                let preference = [current.dir.right(), current.dir, current.dir.left()];
                let next = preference.iter().find_map(|&d| {
                    by_start[&v]
                        .iter()
                        .copied()
                        .find(|&i| !used[i] && edges[i].dir == d)
                });
                let Some(i) = next else { break };
                used[i] = true;
                current = edges[i];
                path.push(current);
            }
            loops.push(DualPath { edges: path });
        }
        loops
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrientedEdge {
    pub source: Site,
    pub dir: Direction,
}

impl OrientedEdge {
    pub fn new(source: Site, dir: Direction) -> Self {
        OrientedEdge { source, dir }
    }

    pub fn is_canonical(&self) -> bool {
        self.dir.is_positive()
    }
}

/// Dual vertex `(a + 1/2, b + 1/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DualVertex {
    pub a: i64,
    pub b: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DualEdge {
    pub from: DualVertex,
    pub dir: Direction,
}

impl DualEdge {
    pub fn new(lattice: &TorusLattice, from: DualVertex, dir: Direction) -> Self {
        DualEdge {
            from: lattice.dual_vertex(from.a, from.b),
            dir,
        }
    }

    pub fn to(&self, lattice: &TorusLattice) -> DualVertex {
        let (d1, d2) = self.dir.offset();
        lattice.dual_vertex(self.from.a + d1, self.from.b + d2)
    }

    /// Offset of `e_R` from the lower-left site of the start vertex.
    fn right_offset(dir: Direction) -> (i64, i64) {
        match dir {
            Direction::East => (1, 0),
            Direction::North => (1, 1),
            Direction::West => (0, 1),
            Direction::South => (0, 0),
        }
    }

    pub fn right_site(&self, lattice: &TorusLattice) -> Site {
        let (o1, o2) = Self::right_offset(self.dir);
        lattice.site(self.from.a + o1, self.from.b + o2)
    }

    pub fn left_site(&self, lattice: &TorusLattice) -> Site {
        lattice.neighbor(self.right_site(lattice), self.dir.left())
    }

    /// The lattice edge crossed by this dual edge, oriented `e_R -> e_L`.
    pub fn crossing(&self, lattice: &TorusLattice) -> OrientedEdge {
        OrientedEdge::new(self.right_site(lattice), self.dir.left())
    }

    /// Dual edge crossing `e` with `e.source` on its right.
    pub fn from_crossing(lattice: &TorusLattice, e: OrientedEdge) -> Self {
        let dir = e.dir.right();
        let (x1, x2) = lattice.coords(e.source);
        let (o1, o2) = Self::right_offset(dir);
        DualEdge::new(lattice, DualVertex { a: x1 - o1, b: x2 - o2 }, dir)
    }

    pub fn reversed(&self, lattice: &TorusLattice) -> Self {
        DualEdge::new(lattice, self.to(lattice), self.dir.reverse())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualPath {
    edges: Vec<DualEdge>,
}

impl DualPath {
    /// Validates that consecutive dual edges chain.
    pub fn new(lattice: &TorusLattice, edges: Vec<DualEdge>) -> Result<Self> {
        for (i, w) in edges.windows(2).enumerate() {
            if w[0].to(lattice) != w[1].from {
                return Err(Error::MalformedPath(format!(
                    "dual edge {} ends at {:?} but edge {} starts at {:?}",
                    i,
                    w[0].to(lattice),
                    i + 1,
                    w[1].from
                )));
            }
        }
        Ok(DualPath { edges })
    }

    /// Path from dual vertex `start` following the listed directions.
    pub fn from_steps(lattice: &TorusLattice, start: (i64, i64), steps: &[Direction]) -> Self {
        let mut v = lattice.dual_vertex(start.0, start.1);
        let edges = steps
            .iter()
            .map(|&d| {
                let e = DualEdge::new(lattice, v, d);
                v = e.to(lattice);
                e
            })
            .collect();
        DualPath { edges }
    }

    /// `γ_d`: eastward at `x2 = 1/2` from `x1 = -d+1/2` to `x1 = d+1/2`.
    pub fn horizontal_segment(lattice: &TorusLattice, d: usize) -> Self {
        Self::from_steps(lattice, (-(d as i64), 0), &vec![Direction::East; 2 * d])
    }

    pub fn edges(&self) -> &[DualEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn is_closed(&self, lattice: &TorusLattice) -> bool {
        match (self.edges.first(), self.edges.last()) {
            (Some(f), Some(l)) => l.to(lattice) == f.from,
            _ => false,
        }
    }

    pub fn start(&self) -> Option<DualVertex> {
        self.edges.first().map(|e| e.from)
    }

    pub fn end(&self, lattice: &TorusLattice) -> Option<DualVertex> {
        self.edges.last().map(|e| e.to(lattice))
    }

    pub fn reversed(&self, lattice: &TorusLattice) -> Self {
        DualPath {
            edges: self.edges.iter().rev().map(|e| e.reversed(lattice)).collect(),
        }
    }

    pub fn concat(&self, lattice: &TorusLattice, other: &DualPath) -> Result<Self> {
        let mut edges = self.edges.clone();
        edges.extend_from_slice(&other.edges);
        DualPath::new(lattice, edges)
    }

    /// Necessary condition for lying on some `∂X` with `X` on the right:
    /// no site is flanked on the right by one edge and on the left by another,
    /// and no dual edge repeats.
    pub fn check_boundary_compatible(&self, lattice: &TorusLattice) -> Result<()> {
        let rights: SiteSet = self.edges.iter().map(|e| e.right_site(lattice)).collect();
        let lefts: SiteSet = self.edges.iter().map(|e| e.left_site(lattice)).collect();
        if let Some(s) = rights.intersection(&lefts).next() {
            return Err(Error::Orientation(format!(
                "site {:?} lies on both sides of the path",
                lattice.coords(*s)
            )));
        }
        let mut seen = BTreeSet::new();
        for e in &self.edges {
            let key = lattice.canonical(e.crossing(lattice)).0;
            if !seen.insert(key) {
                return Err(Error::Orientation("path crosses a lattice edge twice".into()));
            }
        }
        Ok(())
    }

    /// Lattice path through the consecutive `e_R` sites, bridging diagonal steps
    /// through the site on the right of the turn.
    pub fn right_companion(&self, lattice: &TorusLattice) -> Vec<OrientedEdge> {
        let mut out = Vec::new();
        for w in self.edges.windows(2) {
            let a = w[0].right_site(lattice);
            let b = w[1].right_site(lattice);
            if a == b {
                continue;
            }
            if let Some(d) = Direction::ALL.into_iter().find(|&d| lattice.neighbor(a, d) == b) {
                out.push(OrientedEdge::new(a, d));
                continue;
            }
            // Concave corner: e_R jumps diagonally; go through the corner site on the right.
            let d1 = w[0].dir;
            let d2 = w[1].dir;
            let via = lattice.neighbor(a, d1);
            if lattice.neighbor(via, d2) == b {
                out.push(OrientedEdge::new(a, d1));
                out.push(OrientedEdge::new(via, d2));
            } else {
                let via = lattice.neighbor(a, d2);
                out.push(OrientedEdge::new(a, d2));
                out.push(OrientedEdge::new(via, d1));
            }
        }
        if self.is_closed(lattice) && self.edges.len() > 1 {
            let closing = DualPath {
                edges: vec![*self.edges.last().unwrap(), self.edges[0]],
            };
            out.extend(closing.right_companion(lattice));
        }
        out
    }
}
