//! Proper colourings of regions: boundary colourings, exact counts, marginals.
//!
//! Colours are `1..=q`. Boundary objects may also use `0`, meaning no colour.

pub mod engine;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{parse_err, Error, Result};
use crate::lattice::{parse_coord, parse_i32, strip_comment, Edge, LatticeCoord, Region};
pub use engine::{Counter, EliminationPlan, RegionGraph};

pub type BigCount = BigUint;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Parameters {
    pub q: u32,
}

impl Parameters {
    pub fn new(q: u32) -> Result<Self> {
        if !(3..=31).contains(&q) {
            return Err(Error::InvalidColourCount(q));
        }
        Ok(Parameters { q })
    }

    pub fn q(self) -> usize {
        self.q as usize
    }

    /// Bitmask with one bit per colour, bit `c - 1` for colour `c`.
    pub fn full_mask(self) -> u32 {
        (1u32 << self.q) - 1
    }

    fn check(self, colour: u32) -> Result<()> {
        if colour > self.q {
            return Err(Error::ColourOutOfRange { colour, q: self.q });
        }
        Ok(())
    }
}

impl Default for Parameters {
    fn default() -> Self {
        Parameters { q: 9 }
    }
}

/// Colours on the edge boundary of a region; `0` constrains nothing.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartialEdgeColouring {
    colours: BTreeMap<Edge, u8>,
}

impl PartialEdgeColouring {
    /// All boundary edges uncoloured.
    pub fn zero(region: &Region) -> Self {
        PartialEdgeColouring {
            colours: region.edge_boundary().into_iter().map(|e| (e, 0)).collect(),
        }
    }

    /// Builds a colouring whose domain must be exactly the edge boundary.
    pub fn from_map(region: &Region, colours: BTreeMap<Edge, u8>, params: Parameters) -> Result<Self> {
        let eb = region.edge_boundary();
        if colours.len() != eb.len() || !colours.keys().all(|e| eb.contains(e)) {
            return Err(Error::DomainMismatch(format!(
                "expected {} boundary edges, got {}",
                eb.len(),
                colours.len()
            )));
        }
        for &c in colours.values() {
            params.check(c as u32)?;
        }
        Ok(PartialEdgeColouring { colours })
    }

    /// Colours every boundary edge at `w` with `B(w)`.
    pub fn from_vertex(region: &Region, b: &PartialVertexColouring) -> Self {
        let mut out = Self::zero(region);
        for (e, c) in out.colours.iter_mut() {
            let (a, z) = e.endpoints();
            let w = if region.contains(a) { z } else { a };
            *c = b.get(w).unwrap_or(0);
        }
        out
    }

    pub fn get(&self, e: Edge) -> Option<u8> {
        self.colours.get(&e).copied()
    }

    pub fn set(&mut self, e: Edge, colour: u8) -> Result<()> {
        match self.colours.get_mut(&e) {
            Some(c) => {
                *c = colour;
                Ok(())
            }
            None => Err(Error::DomainMismatch(format!("{e} is not a boundary edge"))),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Edge, u8)> + '_ {
        self.colours.iter().map(|(e, c)| (*e, *c))
    }

    pub fn len(&self) -> usize {
        self.colours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colours.is_empty()
    }

    /// Per-vertex allowed-colour masks in region index order.
    pub fn allowed_masks(&self, region: &Region, params: Parameters) -> Result<Vec<u32>> {
        let mut masks = vec![params.full_mask(); region.len()];
        for (e, c) in self.iter() {
            let (a, b) = e.endpoints();
            let inside = if region.contains(a) { a } else { b };
            let idx = region
                .index_of(inside)
                .ok_or_else(|| Error::DomainMismatch(format!("{e} does not touch the region")))?;
            if c > 0 {
                params.check(c as u32)?;
                masks[idx] &= !(1 << (c - 1));
            }
        }
        Ok(masks)
    }

    pub fn check_domain(&self, region: &Region) -> Result<()> {
        let eb = region.edge_boundary();
        if self.colours.len() != eb.len() || !self.colours.keys().all(|e| eb.contains(e)) {
            return Err(Error::DomainMismatch(
                "edge colouring domain differs from the edge boundary".into(),
            ));
        }
        Ok(())
    }

    /// Boundary colouring file body: `e x1 y1 x2 y2 colour` per edge.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (e, c) in self.iter() {
            let (a, b) = e.endpoints();
            s.push_str(&format!("e {} {} {} {} {}\n", a.x, a.y, b.x, b.y, c));
        }
        s
    }

    /// Parses a boundary colouring file against `region`.
    pub fn parse(text: &str, region: &Region, params: Parameters) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let (e, c) = parse_edge_line(line, ln)?;
            params.check(c as u32).map_err(|e| parse_err(ln, e.to_string()))?;
            if map.insert(e, c).is_some() {
                return Err(parse_err(ln, format!("edge {e} listed twice")));
            }
        }
        Self::from_map(region, map, params)
    }
}

/// Parses `e x1 y1 x2 y2 colour`.
pub(crate) fn parse_edge_line(line: &str, ln: usize) -> Result<(Edge, u8)> {
    let mut toks = line.split_whitespace();
    match toks.next() {
        Some("e") | Some("eX") => {}
        _ => return Err(parse_err(ln, "expected `e x1 y1 x2 y2 colour`")),
    }
    let a = parse_coord(&mut toks, ln)?;
    let b = parse_coord(&mut toks, ln)?;
    let c = parse_i32(toks.next(), ln)?;
    if toks.next().is_some() {
        return Err(parse_err(ln, "trailing tokens"));
    }
    if !(0..=255).contains(&c) {
        return Err(parse_err(ln, format!("colour {c} out of range")));
    }
    let e = Edge::new(a, b).map_err(|e| parse_err(ln, e.to_string()))?;
    Ok((e, c as u8))
}

/// Colours on the vertex boundary of a region; `0` constrains nothing.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartialVertexColouring {
    colours: BTreeMap<LatticeCoord, u8>,
}

impl PartialVertexColouring {
    pub fn zero(region: &Region) -> Self {
        PartialVertexColouring {
            colours: region.vertex_boundary().into_iter().map(|w| (w, 0)).collect(),
        }
    }

    pub fn from_map(region: &Region, colours: BTreeMap<LatticeCoord, u8>, params: Parameters) -> Result<Self> {
        let vb = region.vertex_boundary();
        if colours.len() != vb.len() || !colours.keys().all(|w| vb.contains(w)) {
            return Err(Error::DomainMismatch(format!(
                "expected {} boundary vertices, got {}",
                vb.len(),
                colours.len()
            )));
        }
        for &c in colours.values() {
            params.check(c as u32)?;
        }
        Ok(PartialVertexColouring { colours })
    }

    pub fn get(&self, w: LatticeCoord) -> Option<u8> {
        self.colours.get(&w).copied()
    }

    pub fn set(&mut self, w: LatticeCoord, colour: u8) -> Result<()> {
        match self.colours.get_mut(&w) {
            Some(c) => {
                *c = colour;
                Ok(())
            }
            None => Err(Error::DomainMismatch(format!("{w} is not a boundary vertex"))),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (LatticeCoord, u8)> + '_ {
        self.colours.iter().map(|(w, c)| (*w, *c))
    }

    pub fn len(&self) -> usize {
        self.colours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colours.is_empty()
    }

    pub fn allowed_masks(&self, region: &Region, params: Parameters) -> Result<Vec<u32>> {
        PartialEdgeColouring::from_vertex(region, self).allowed_masks(region, params)
    }

    /// Vertex boundary file body: `w x y colour` per boundary vertex.
    pub fn to_text(&self) -> String {
        self.iter().map(|(w, c)| format!("w {} {} {}\n", w.x, w.y, c)).collect()
    }

    /// Parses a vertex boundary file. Boundary vertices the file leaves out
    /// get colour 0.
    pub fn parse(text: &str, region: &Region, params: Parameters) -> Result<Self> {
        let mut out = Self::zero(region);
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let mut toks = line.split_whitespace();
            if toks.next() != Some("w") {
                return Err(parse_err(ln, "expected `w x y colour`"));
            }
            let w = parse_coord(&mut toks, ln)?;
            let c = parse_i32(toks.next(), ln)?;
            if toks.next().is_some() {
                return Err(parse_err(ln, "trailing tokens"));
            }
            if c < 0 {
                return Err(parse_err(ln, format!("colour {c} out of range")));
            }
            params.check(c as u32).map_err(|e| parse_err(ln, e.to_string()))?;
            if seen.insert(w, ()).is_some() {
                return Err(parse_err(ln, format!("vertex {w} listed twice")));
            }
            out.set(w, c as u8).map_err(|e| parse_err(ln, e.to_string()))?;
        }
        Ok(out)
    }
}

/// A colouring of every vertex of a region with colours `1..=q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Colouring {
    colours: BTreeMap<LatticeCoord, u8>,
}

impl Colouring {
    pub fn new(colours: BTreeMap<LatticeCoord, u8>) -> Self {
        Colouring { colours }
    }

    /// From a vector aligned with the region's index order.
    pub fn from_indexed(region: &Region, colours: &[u8]) -> Self {
        Colouring {
            colours: region.iter().zip(colours.iter().copied()).collect(),
        }
    }

    pub fn to_indexed(&self, region: &Region) -> Option<Vec<u8>> {
        region.iter().map(|v| self.get(v)).collect()
    }

    pub fn get(&self, v: LatticeCoord) -> Option<u8> {
        self.colours.get(&v).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (LatticeCoord, u8)> + '_ {
        self.colours.iter().map(|(v, c)| (*v, *c))
    }

    pub fn is_proper(&self) -> bool {
        self.colours.iter().all(|(v, c)| {
            v.neighbours()
                .iter()
                .all(|n| self.colours.get(n).map_or(true, |d| d != c))
        })
    }
}

/// Either kind of boundary colouring.
#[derive(Clone, Copy, Debug)]
pub enum BoundaryRef<'a> {
    Edge(&'a PartialEdgeColouring),
    Vertex(&'a PartialVertexColouring),
}

impl<'a> From<&'a PartialEdgeColouring> for BoundaryRef<'a> {
    fn from(b: &'a PartialEdgeColouring) -> Self {
        BoundaryRef::Edge(b)
    }
}

impl<'a> From<&'a PartialVertexColouring> for BoundaryRef<'a> {
    fn from(b: &'a PartialVertexColouring) -> Self {
        BoundaryRef::Vertex(b)
    }
}

/// Whether `c` avoids every boundary colour on the edges into its vertices.
/// Properness inside the region is not part of agreement.
pub fn agrees<'a>(region: &Region, c: &Colouring, b: impl Into<BoundaryRef<'a>>) -> Result<bool> {
    if c.colours.len() != region.len() || !region.iter().all(|v| c.colours.contains_key(&v)) {
        return Err(Error::DomainMismatch("colouring does not cover the region".into()));
    }
    let edge_form = match b.into() {
        BoundaryRef::Edge(e) => {
            e.check_domain(region)?;
            e.clone()
        }
        BoundaryRef::Vertex(v) => {
            if v.colours.len() != region.vertex_boundary().len() {
                return Err(Error::DomainMismatch("vertex colouring domain differs from the boundary".into()));
            }
            PartialEdgeColouring::from_vertex(region, v)
        }
    };
    let ok = edge_form.iter().all(|(e, col)| {
        let (x, y) = e.endpoints();
        let inside = if region.contains(x) { x } else { y };
        col == 0 || c.get(inside) != Some(col)
    });
    Ok(ok)
}

fn pinned_masks(
    region: &Region,
    b: &PartialEdgeColouring,
    pin: Option<(LatticeCoord, u8)>,
    params: Parameters,
) -> Result<Vec<u32>> {
    b.check_domain(region)?;
    let mut masks = b.allowed_masks(region, params)?;
    if let Some((v, c)) = pin {
        let i = region.index_of(v).ok_or(Error::VertexNotInRegion(v))?;
        if c == 0 || c as u32 > params.q {
            return Err(Error::ColourOutOfRange {
                colour: c as u32,
                q: params.q,
            });
        }
        masks[i] &= 1 << (c - 1);
    }
    Ok(masks)
}

/// Counts proper colourings of the region from per-vertex allowed masks.
pub fn count_masks(region: &Region, masks: &[u32], params: Parameters) -> Result<BigCount> {
    let counter = Counter::new(&RegionGraph::new(region), params.q(), None)?;
    Ok(counter.evaluate(masks).pop().expect("one total"))
}

/// Number of proper colourings agreeing with `b`, optionally with one vertex
/// pinned.
pub fn count(
    region: &Region,
    b: &PartialEdgeColouring,
    pin: Option<(LatticeCoord, u8)>,
    params: Parameters,
) -> Result<BigCount> {
    let masks = pinned_masks(region, b, pin, params)?;
    count_masks(region, &masks, params)
}

/// Counts `n_1..n_q` at `v` in one pass.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CountBreakdown {
    pub per_colour: Vec<BigCount>,
}

impl CountBreakdown {
    pub fn total(&self) -> BigCount {
        engine::sum_big(&self.per_colour)
    }

    /// Count for colour `c` in `1..=q`.
    pub fn n(&self, c: usize) -> &BigCount {
        &self.per_colour[c - 1]
    }
}

pub fn count_breakdown(
    region: &Region,
    b: &PartialEdgeColouring,
    v: LatticeCoord,
    params: Parameters,
) -> Result<CountBreakdown> {
    let keep = region.index_of(v).ok_or(Error::VertexNotInRegion(v))?;
    let masks = pinned_masks(region, b, None, params)?;
    let counter = Counter::new(&RegionGraph::new(region), params.q(), Some(keep))?;
    Ok(CountBreakdown {
        per_colour: counter.evaluate(&masks),
    })
}

pub const DEFAULT_BRUTE_FORCE_CAP: usize = 8;

/// Exhaustive `q^|R|` enumeration with the same contract as [`count`].
pub fn brute_force_count(
    region: &Region,
    b: &PartialEdgeColouring,
    pin: Option<(LatticeCoord, u8)>,
    params: Parameters,
    cap: usize,
) -> Result<BigCount> {
    if region.len() > cap {
        return Err(Error::CapExceeded {
            cap,
            len: region.len(),
        });
    }
    let masks = pinned_masks(region, b, pin, params)?;
    let edges: Vec<(usize, usize)> = region
        .internal_edges()
        .into_iter()
        .map(|(u, w)| (region.index_of(u).unwrap(), region.index_of(w).unwrap()))
        .collect();
    let n = region.len();
    let q = params.q() as u8;
    let mut col = vec![0u8; n];
    let mut total: u64 = 0;
    loop {
        let ok = (0..n).all(|i| masks[i] & (1 << col[i]) != 0)
            && edges.iter().all(|&(a, b)| col[a] != col[b]);
        if ok {
            total += 1;
        }
        let mut i = 0;
        loop {
            if i == n {
                return Ok(BigUint::from(total));
            }
            col[i] += 1;
            if col[i] < q {
                break;
            }
            col[i] = 0;
            i += 1;
        }
    }
}

/// An exact probability distribution on colours `1..=q`; entry `i` is colour `i + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Distribution(pub Vec<BigRational>);

impl Distribution {
    pub fn from_counts(counts: &[BigCount]) -> Result<Self> {
        let total = engine::sum_big(counts);
        if total.is_zero() {
            return Err(Error::NoValidColouring);
        }
        let t = BigRational::from_integer(total.into());
        Ok(Distribution(
            counts
                .iter()
                .map(|n| BigRational::from_integer(n.clone().into()) / &t)
                .collect(),
        ))
    }

    pub fn prob(&self, c: usize) -> &BigRational {
        &self.0[c - 1]
    }

    pub fn total(&self) -> BigRational {
        self.0.iter().fold(BigRational::zero(), |a, b| a + b)
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Exact distribution of the colour at `v`.
pub fn marginal(region: &Region, b: &PartialEdgeColouring, v: LatticeCoord, params: Parameters) -> Result<Distribution> {
    let bd = count_breakdown(region, b, v, params)?;
    Distribution::from_counts(&bd.per_colour)
}

/// Half the L1 distance. Distributions of different lengths are padded with zeros.
pub fn tv_distance(p: &Distribution, r: &Distribution) -> BigRational {
    let n = p.0.len().max(r.0.len());
    let zero = BigRational::zero();
    let mut s = BigRational::zero();
    for i in 0..n {
        let a = p.0.get(i).unwrap_or(&zero);
        let b = r.0.get(i).unwrap_or(&zero);
        s += (a - b).abs();
    }
    s / BigRational::from_integer(2.into())
}
