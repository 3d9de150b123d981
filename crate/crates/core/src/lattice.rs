//! Triangular-lattice geometry.
//!
//! Vertices are integer pairs `(x, y)` with `x + y` even. The six neighbours of
//! a vertex sit at the offsets in [`OFFSETS`], listed in clockwise order when
//! the lattice is drawn with `x` scaled by `sqrt(3)` and `y` pointing up.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::error::{parse_err, Error, Result};

/// Neighbour offsets in the fixed clockwise cyclic order.
pub const OFFSETS: [(i32, i32); 6] = [(0, 2), (1, 1), (1, -1), (0, -2), (-1, -1), (-1, 1)];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeCoord {
    pub x: i32,
    pub y: i32,
}

impl LatticeCoord {
    pub fn new(x: i32, y: i32) -> Result<Self> {
        if (x + y).rem_euclid(2) != 0 {
            return Err(Error::InvalidCoordinate {
                x: x as i64,
                y: y as i64,
            });
        }
        Ok(LatticeCoord { x, y })
    }

    /// Builds a coordinate without the parity check. Callers must pass an even
    /// `x + y`.
    pub const fn at(x: i32, y: i32) -> Self {
        LatticeCoord { x, y }
    }

    pub fn is_valid(self) -> bool {
        (self.x + self.y).rem_euclid(2) == 0
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        LatticeCoord::at(self.x + dx, self.y + dy)
    }

    /// The six neighbours in clockwise order, starting straight up.
    pub fn neighbours(self) -> [LatticeCoord; 6] {
        OFFSETS.map(|(dx, dy)| self.offset(dx, dy))
    }

    pub fn is_adjacent(self, other: LatticeCoord) -> bool {
        self.direction_to(other).is_some()
    }

    /// Index into [`OFFSETS`] of the step from `self` to `other`.
    pub fn direction_to(self, other: LatticeCoord) -> Option<usize> {
        let d = (other.x - self.x, other.y - self.y);
        OFFSETS.iter().position(|&o| o == d)
    }

    /// Graph distance on the infinite lattice.
    pub fn distance(self, other: LatticeCoord) -> u32 {
        let dx = (other.x - self.x).unsigned_abs();
        let dy = (other.y - self.y).unsigned_abs();
        dx.max((dx + dy) / 2)
    }
}

impl fmt::Display for LatticeCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Checked neighbour list; fails on a parity-invalid vertex.
pub fn neighbours(v: LatticeCoord) -> Result<[LatticeCoord; 6]> {
    LatticeCoord::new(v.x, v.y)?;
    Ok(v.neighbours())
}

/// An undirected lattice edge, stored with its endpoints in lexicographic order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    a: LatticeCoord,
    b: LatticeCoord,
}

impl Edge {
    pub fn new(u: LatticeCoord, v: LatticeCoord) -> Result<Self> {
        if !u.is_valid() || !v.is_valid() || !u.is_adjacent(v) {
            return Err(Error::NotAnEdge(format!("{u}-{v}")));
        }
        Ok(if u <= v { Edge { a: u, b: v } } else { Edge { a: v, b: u } })
    }

    pub fn endpoints(self) -> (LatticeCoord, LatticeCoord) {
        (self.a, self.b)
    }

    pub fn is_incident(self, v: LatticeCoord) -> bool {
        self.a == v || self.b == v
    }

    /// The endpoint that is not `v`.
    pub fn other(self, v: LatticeCoord) -> Option<LatticeCoord> {
        if self.a == v {
            Some(self.b)
        } else if self.b == v {
            Some(self.a)
        } else {
            None
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}, {}}}", self.a, self.b)
    }
}

/// True iff `e1` and `e2` are consecutive in the clockwise cycle of edges at `at`.
pub fn clockwise_adjacent(e1: Edge, e2: Edge, at: LatticeCoord) -> Result<bool> {
    let dir = |e: Edge| {
        e.other(at)
            .and_then(|o| at.direction_to(o))
            .ok_or(Error::EdgeNotIncident { edge: e, at })
    };
    let (d1, d2) = (dir(e1)?, dir(e2)?);
    Ok((d1 + 1) % 6 == d2 || (d2 + 1) % 6 == d1)
}

/// Lattice distance, with "no path" ordered after every finite length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Distance {
    Finite(u32),
    Unreachable,
}

impl Distance {
    pub fn finite(self) -> Option<u32> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Unreachable => None,
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(d) => write!(f, "{d}"),
            Distance::Unreachable => f.write_str("unreachable"),
        }
    }
}

/// A point symmetry of the lattice: `Rotation(k)` turns by `k * 60` degrees
/// clockwise, `Reflection(k)` mirrors in the vertical axis and then rotates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symmetry {
    Rotation(u8),
    Reflection(u8),
}

impl Symmetry {
    pub const IDENTITY: Symmetry = Symmetry::Rotation(0);

    pub fn all() -> impl Iterator<Item = Symmetry> {
        (0..6)
            .map(Symmetry::Rotation)
            .chain((0..6).map(Symmetry::Reflection))
    }

    pub fn rotations() -> impl Iterator<Item = Symmetry> {
        (0..6).map(Symmetry::Rotation)
    }

    pub fn is_reflection(self) -> bool {
        matches!(self, Symmetry::Reflection(_))
    }

    /// Image of a displacement `(dx, dy)` (parity-valid) under the symmetry.
    pub fn apply_vector(self, dx: i32, dy: i32) -> (i32, i32) {
        let (mut x, mut y, k) = match self {
            Symmetry::Rotation(k) => (dx, dy, k),
            Symmetry::Reflection(k) => (-dx, dy, k),
        };
        for _ in 0..k % 6 {
            (x, y) = ((x + y) / 2, (-3 * x + y) / 2);
        }
        (x, y)
    }

    pub fn apply(self, p: LatticeCoord, anchor: LatticeCoord) -> LatticeCoord {
        let (x, y) = self.apply_vector(p.x - anchor.x, p.y - anchor.y);
        anchor.offset(x, y)
    }

    /// How the symmetry permutes the direction indices of [`OFFSETS`].
    pub fn apply_direction(self, d: usize) -> usize {
        match self {
            Symmetry::Rotation(k) => (d + k as usize) % 6,
            Symmetry::Reflection(k) => ((6 - d) % 6 + k as usize) % 6,
        }
    }

    pub fn compose(self, then: Symmetry) -> Symmetry {
        // Track where direction 0 and direction 1 go; that fixes the element.
        let d0 = then.apply_direction(self.apply_direction(0));
        let d1 = then.apply_direction(self.apply_direction(1));
        if (d0 + 1) % 6 == d1 {
            Symmetry::Rotation(d0 as u8)
        } else {
            Symmetry::Reflection(d0 as u8)
        }
    }

    pub fn inverse(self) -> Symmetry {
        match self {
            Symmetry::Rotation(k) => Symmetry::Rotation(((6 - k % 6) % 6) as u8),
            r @ Symmetry::Reflection(_) => r,
        }
    }
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symmetry::Rotation(k) => write!(f, "rot{}", k),
            Symmetry::Reflection(k) => write!(f, "ref{}", k),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Region {
    vertices: BTreeSet<LatticeCoord>,
    name: Option<String>,
}

impl Region {
    pub fn new<I: IntoIterator<Item = LatticeCoord>>(vertices: I) -> Result<Self> {
        let mut set = BTreeSet::new();
        for v in vertices {
            LatticeCoord::new(v.x, v.y)?;
            if !set.insert(v) {
                return Err(Error::DuplicateVertex(v));
            }
        }
        if set.is_empty() {
            return Err(Error::EmptyRegion);
        }
        Ok(Region {
            vertices: set,
            name: None,
        })
    }

    pub fn from_pairs(pairs: &[(i32, i32)]) -> Result<Self> {
        Region::new(
            pairs
                .iter()
                .map(|&(x, y)| LatticeCoord::new(x, y))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, v: LatticeCoord) -> bool {
        self.vertices.contains(&v)
    }

    /// Vertices in lexicographic order. Positions in this order are the
    /// vertex indices used by the counting engine.
    pub fn iter(&self) -> impl Iterator<Item = LatticeCoord> + '_ {
        self.vertices.iter().copied()
    }

    pub fn vertices(&self) -> &BTreeSet<LatticeCoord> {
        &self.vertices
    }

    pub fn index_of(&self, v: LatticeCoord) -> Option<usize> {
        if !self.contains(v) {
            return None;
        }
        Some(self.vertices.range(..v).count())
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.vertices.is_subset(&other.vertices)
    }

    /// ℰR: edges with exactly one endpoint in the region.
    pub fn edge_boundary(&self) -> BTreeSet<Edge> {
        let mut out = BTreeSet::new();
        for v in self.iter() {
            for w in v.neighbours() {
                if !self.contains(w) {
                    out.insert(Edge::new(v, w).expect("neighbours are adjacent"));
                }
            }
        }
        out
    }

    /// ∂R: outside vertices adjacent to the region.
    pub fn vertex_boundary(&self) -> BTreeSet<LatticeCoord> {
        self.iter()
            .flat_map(|v| v.neighbours())
            .filter(|w| !self.contains(*w))
            .collect()
    }

    pub fn internal_edges(&self) -> Vec<(LatticeCoord, LatticeCoord)> {
        let mut out = Vec::new();
        for v in self.iter() {
            for w in v.neighbours() {
                if v < w && self.contains(w) {
                    out.push((v, w));
                }
            }
        }
        out
    }

    /// Shortest path length from `w` to the nearest vertex of `target`, using
    /// only region vertices after the first step.
    pub fn internal_distance(&self, w: LatticeCoord, target: &BTreeSet<LatticeCoord>) -> Distance {
        let mut dist: BTreeMap<LatticeCoord, u32> = BTreeMap::new();
        let mut queue = VecDeque::new();
        for u in w.neighbours() {
            if self.contains(u) && !dist.contains_key(&u) {
                dist.insert(u, 1);
                queue.push_back(u);
            }
        }
        while let Some(u) = queue.pop_front() {
            let d = dist[&u];
            if target.contains(&u) {
                return Distance::Finite(d);
            }
            for n in u.neighbours() {
                if self.contains(n) && !dist.contains_key(&n) {
                    dist.insert(n, d + 1);
                    queue.push_back(n);
                }
            }
        }
        Distance::Unreachable
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }

    pub fn components(&self) -> Vec<Region> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for start in self.iter() {
            if seen.contains(&start) {
                continue;
            }
            let mut comp = vec![start];
            seen.insert(start);
            let mut i = 0;
            while i < comp.len() {
                for n in comp[i].neighbours() {
                    if self.contains(n) && seen.insert(n) {
                        comp.push(n);
                    }
                }
                i += 1;
            }
            out.push(Region::new(comp).expect("nonempty component"));
        }
        out
    }

    pub fn without(&self, v: LatticeCoord) -> Option<Region> {
        let rest: Vec<_> = self.iter().filter(|&u| u != v).collect();
        Region::new(rest).ok()
    }

    pub fn transform(&self, s: Symmetry, anchor: LatticeCoord) -> Region {
        Region {
            vertices: self.iter().map(|v| s.apply(v, anchor)).collect(),
            name: self.name.clone(),
        }
    }

    pub fn translate(&self, dx: i32, dy: i32) -> Region {
        Region {
            vertices: self.iter().map(|v| v.offset(dx, dy)).collect(),
            name: self.name.clone(),
        }
    }
}

/// Every vertex within lattice distance `d` of `v`.
pub fn ball(v: LatticeCoord, d: u32) -> Region {
    let d = d as i32;
    let mut out = Vec::new();
    for dx in -d..=d {
        for dy in -2 * d..=2 * d {
            let u = v.offset(dx, dy);
            if u.is_valid() && v.distance(u) as i32 <= d {
                out.push(u);
            }
        }
    }
    Region::new(out).expect("ball is nonempty")
}

/// Contents of a region file: the region, its listing order, and the
/// optional distinguished pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionFile {
    pub region: Region,
    /// Vertices in the order they were listed.
    pub order: Vec<LatticeCoord>,
    pub distinguished_v: Option<LatticeCoord>,
    pub distinguished_w: Option<LatticeCoord>,
}

pub(crate) fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

pub(crate) fn parse_i32(tok: Option<&str>, line: usize) -> Result<i32> {
    let t = tok.ok_or_else(|| parse_err(line, "missing integer"))?;
    t.parse::<i32>()
        .map_err(|_| parse_err(line, format!("bad integer `{t}`")))
}

pub(crate) fn parse_coord<'a, I: Iterator<Item = &'a str>>(toks: &mut I, line: usize) -> Result<LatticeCoord> {
    let x = parse_i32(toks.next(), line)?;
    let y = parse_i32(toks.next(), line)?;
    LatticeCoord::new(x, y).map_err(|e| parse_err(line, e.to_string()))
}

impl RegionFile {
    pub fn new(region: Region) -> Self {
        RegionFile {
            order: region.iter().collect(),
            region,
            distinguished_v: None,
            distinguished_w: None,
        }
    }

    pub fn with_pair(mut self, v: LatticeCoord, w: LatticeCoord) -> Self {
        self.distinguished_v = Some(v);
        self.distinguished_w = Some(w);
        self
    }

    /// Parses a region file. Unknown keywords are rejected so that pair files
    /// (which extend this format) go through their own parser.
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_lenient(text, |_, _| false)
    }

    /// Like [`RegionFile::parse`], but passes lines with unknown keywords to
    /// `extra`, which returns whether it consumed them.
    pub(crate) fn parse_lenient<F>(text: &str, mut extra: F) -> Result<Self>
    where
        F: FnMut(usize, &str) -> bool,
    {
        let mut name = None;
        let mut order = Vec::new();
        let mut dv = None;
        let mut dw = None;
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let mut toks = line.split_whitespace();
            let key = toks.next().unwrap();
            match key {
                "name" => {
                    let rest = line["name".len()..].trim();
                    if rest.is_empty() {
                        return Err(parse_err(ln, "empty name"));
                    }
                    name = Some(rest.to_string());
                    continue;
                }
                "v" => order.push(parse_coord(&mut toks, ln)?),
                "distinguished_v" => dv = Some(parse_coord(&mut toks, ln)?),
                "distinguished_w" => dw = Some(parse_coord(&mut toks, ln)?),
                _ => {
                    if extra(ln, line) {
                        continue;
                    }
                    return Err(parse_err(ln, format!("unknown keyword `{key}`")));
                }
            }
            if toks.next().is_some() {
                return Err(parse_err(ln, "trailing tokens"));
            }
        }
        let mut region = Region::new(order.clone()).map_err(|e| parse_err(0, e.to_string()))?;
        if let Some(n) = name {
            region = region.with_name(n);
        }
        Ok(RegionFile {
            region,
            order,
            distinguished_v: dv,
            distinguished_w: dw,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some(n) = self.region.name() {
            s.push_str(&format!("name {n}\n"));
        }
        for v in &self.order {
            s.push_str(&format!("v {} {}\n", v.x, v.y));
        }
        if let Some(v) = self.distinguished_v {
            s.push_str(&format!("distinguished_v {} {}\n", v.x, v.y));
        }
        if let Some(w) = self.distinguished_w {
            s.push_str(&format!("distinguished_w {} {}\n", w.x, w.y));
        }
        s
    }
}

impl FromStr for RegionFile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        RegionFile::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: i32, y: i32) -> LatticeCoord {
        LatticeCoord::new(x, y).unwrap()
    }

    #[test]
    fn origin_neighbours() {
        let n = neighbours(c(0, 0)).unwrap();
        assert_eq!(n, [c(0, 2), c(1, 1), c(1, -1), c(0, -2), c(-1, -1), c(-1, 1)]);
        assert!(neighbours(LatticeCoord::at(0, 1)).is_err());
        assert!(LatticeCoord::new(0, 1).is_err());
    }

    #[test]
    fn clockwise_examples() {
        let o = c(0, 0);
        let e = |x, y| Edge::new(o, c(x, y)).unwrap();
        assert!(clockwise_adjacent(e(0, 2), e(1, 1), o).unwrap());
        assert!(!clockwise_adjacent(e(0, 2), e(0, -2), o).unwrap());
        assert!(clockwise_adjacent(e(-1, 1), e(0, 2), o).unwrap());
        let far = Edge::new(c(4, 0), c(4, 2)).unwrap();
        assert!(clockwise_adjacent(far, e(0, 2), o).is_err());
    }

    #[test]
    fn boundary_sizes() {
        let one = Region::from_pairs(&[(0, 0)]).unwrap();
        assert_eq!(one.edge_boundary().len(), 6);
        assert_eq!(one.vertex_boundary().len(), 6);
        let two = Region::from_pairs(&[(0, 0), (1, 1)]).unwrap();
        assert_eq!(two.edge_boundary().len(), 10);
        assert_eq!(two.vertex_boundary().len(), 8);
        assert_eq!(ball(c(0, 0), 1).vertex_boundary().len(), 12);
    }

    #[test]
    fn balls() {
        assert_eq!(ball(c(2, 0), 0).len(), 1);
        assert_eq!(ball(c(0, 0), 1).len(), 7);
        assert_eq!(ball(c(0, 0), 2).len(), 19);
        for d in 0..=20 {
            assert_eq!(ball(c(1, 1), d).vertex_boundary().len() as u32, 6 * (d + 1));
        }
    }

    #[test]
    fn distances() {
        let r = Region::from_pairs(&[(0, 0), (0, 2), (0, 4)]).unwrap();
        let w = c(0, -2);
        let t = |v: &[(i32, i32)]| v.iter().map(|&(x, y)| c(x, y)).collect::<BTreeSet<_>>();
        assert_eq!(r.internal_distance(w, &t(&[(0, 0)])), Distance::Finite(1));
        assert_eq!(r.internal_distance(w, &t(&[(0, 4)])), Distance::Finite(3));
        assert_eq!(r.internal_distance(w, &t(&[(0, 4), (0, 2)])), Distance::Finite(2));
        let split = Region::from_pairs(&[(0, 0), (0, 6)]).unwrap();
        assert_eq!(split.internal_distance(w, &t(&[(0, 6)])), Distance::Unreachable);
    }

    #[test]
    fn symmetry_group() {
        let r = Region::from_pairs(&[(0, 0), (1, 1), (3, 1), (2, -2)]).unwrap();
        let a = c(1, 1);
        assert_eq!(r.transform(Symmetry::IDENTITY, a), r);
        let mut s = r.clone();
        for _ in 0..6 {
            s = s.transform(Symmetry::Rotation(1), a);
        }
        assert_eq!(s, r);
        let m = Symmetry::Reflection(3);
        assert_eq!(r.transform(m, a).transform(m, a), r);
        assert_eq!(Symmetry::all().count(), 12);
    }

    #[test]
    fn rotation_moves_directions_clockwise() {
        for d in 0..6 {
            let (dx, dy) = OFFSETS[d];
            for s in Symmetry::all() {
                let img = s.apply_vector(dx, dy);
                assert_eq!(img, OFFSETS[s.apply_direction(d)], "{s} {d}");
            }
        }
    }

    #[test]
    fn compose_matches_application() {
        for s in Symmetry::all() {
            for t in Symmetry::all() {
                let st = s.compose(t);
                for &(dx, dy) in &OFFSETS {
                    let (a, b) = s.apply_vector(dx, dy);
                    assert_eq!(t.apply_vector(a, b), st.apply_vector(dx, dy));
                }
            }
            assert_eq!(s.compose(s.inverse()), Symmetry::IDENTITY);
        }
    }

    #[test]
    fn region_file_round_trip() {
        let text = "# demo\nname tri\nv 0 0\nv 1 1 # second\nv 0 2\ndistinguished_v 0 0\ndistinguished_w 0 -2\n";
        let f = RegionFile::parse(text).unwrap();
        assert_eq!(f.region.len(), 3);
        assert_eq!(f.region.name(), Some("tri"));
        assert_eq!(f.distinguished_w, Some(c(0, -2)));
        assert_eq!(RegionFile::parse(&f.to_text()).unwrap(), f);
        assert!(RegionFile::parse("v 0 1\n").is_err());
        assert!(RegionFile::parse("v 0 0\nv 0 0\n").is_err());
        assert!(RegionFile::parse("bogus 1\n").is_err());
    }
}
