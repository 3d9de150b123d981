//! Boundary pairs and the canonical boundary enumeration.
//!
//! An edge-boundary pair is a region with a distinguished boundary edge
//! `e_X = {w_X, v_X}` and two edge colourings that differ only there. The
//! search for large μ ranges over colourings that give every boundary vertex
//! one colour, except that the edges from `w_X` into the region split into the
//! run clockwise after `e_X`, the run anticlockwise before it, and any runs
//! detached from `e_X`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::colouring::{parse_edge_line, Parameters, PartialEdgeColouring, PartialVertexColouring};
use crate::error::{parse_err, Error, Result};
use crate::lattice::{parse_coord, Edge, LatticeCoord, Region, RegionFile, OFFSETS};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EdgeBoundaryPair {
    pub region: Region,
    pub w: LatticeCoord,
    pub v: LatticeCoord,
    pub b: PartialEdgeColouring,
    pub b_prime: PartialEdgeColouring,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Violation {
    NotBoundaryEdge,
    TooManyNeighbours,
    DiscrepancyEqual,
    DiscrepancyUncoloured,
    DifferOffDiscrepancy(Edge),
    DomainMismatch,
    ClockwiseDisagreement(Edge, Edge),
    ColourOutOfRange(Edge),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotBoundaryEdge => f.write_str("e_X is not a boundary edge from w_X outside to v_X inside"),
            Violation::TooManyNeighbours => f.write_str("w_X must have at most five neighbours in the region"),
            Violation::DiscrepancyEqual => f.write_str("discrepancy edge colours equal"),
            Violation::DiscrepancyUncoloured => f.write_str("discrepancy edge must be coloured in both colourings"),
            Violation::DifferOffDiscrepancy(e) => write!(f, "colourings differ on {e}, which is not e_X"),
            Violation::DomainMismatch => f.write_str("colouring domain is not the edge boundary"),
            Violation::ClockwiseDisagreement(a, b) => {
                write!(f, "clockwise adjacent edges {a} and {b} disagree in both colourings")
            }
            Violation::ColourOutOfRange(e) => write!(f, "colour on {e} out of range"),
        }
    }
}

impl EdgeBoundaryPair {
    pub fn e_x(&self) -> Edge {
        Edge::new(self.w, self.v).expect("w and v adjacent")
    }

    /// Every violated clause of the pair definition.
    pub fn validate(&self, params: Parameters) -> Vec<Violation> {
        let mut out = Vec::new();
        let r = &self.region;
        let ex = match Edge::new(self.w, self.v) {
            Ok(e) if r.contains(self.v) && !r.contains(self.w) => e,
            _ => {
                out.push(Violation::NotBoundaryEdge);
                return out;
            }
        };
        if self.w.neighbours().iter().filter(|n| r.contains(**n)).count() > 5 {
            out.push(Violation::TooManyNeighbours);
        }
        if self.b.check_domain(r).is_err() || self.b_prime.check_domain(r).is_err() {
            out.push(Violation::DomainMismatch);
            return out;
        }
        for (e, c) in self.b.iter().chain(self.b_prime.iter()) {
            if c as u32 > params.q {
                out.push(Violation::ColourOutOfRange(e));
            }
        }
        let (c1, c2) = (self.b.get(ex).unwrap(), self.b_prime.get(ex).unwrap());
        if c1 == c2 {
            out.push(Violation::DiscrepancyEqual);
        }
        if c1 == 0 || c2 == 0 {
            out.push(Violation::DiscrepancyUncoloured);
        }
        for (e, c) in self.b.iter() {
            if e != ex && self.b_prime.get(e) != Some(c) {
                out.push(Violation::DifferOffDiscrepancy(e));
            }
        }
        for w in r.vertex_boundary() {
            for d in 0..6 {
                let (a, b) = (w.offset(OFFSETS[d].0, OFFSETS[d].1), {
                    let o = OFFSETS[(d + 1) % 6];
                    w.offset(o.0, o.1)
                });
                if !(r.contains(a) && r.contains(b)) {
                    continue;
                }
                let (ea, eb) = (Edge::new(w, a).unwrap(), Edge::new(w, b).unwrap());
                if self.b.get(ea) != self.b.get(eb) && self.b_prime.get(ea) != self.b_prime.get(eb) {
                    out.push(Violation::ClockwiseDisagreement(ea, eb));
                }
            }
        }
        out
    }

    /// `E_X`: edges from `v_X` into the region, clockwise starting after `e_X`.
    pub fn ordered_ex(&self) -> Vec<Edge> {
        ordered_ex(&self.region, self.v, self.w)
    }

    /// The pair `X_i(c, c')` on `R \ {v_X}` with distinguished edge `e_i`.
    pub fn child_pair(&self, i: usize, c: u8, c_prime: u8, params: Parameters) -> Result<EdgeBoundaryPair> {
        let ex = self.ordered_ex();
        if i == 0 || i > ex.len() {
            return Err(Error::InvalidPair(format!("child index {i} outside 1..={}", ex.len())));
        }
        if c == c_prime || c == 0 || c_prime == 0 || c as u32 > params.q || c_prime as u32 > params.q {
            return Err(Error::InvalidPair(format!("child colours {c}, {c_prime} invalid")));
        }
        let region = self
            .region
            .without(self.v)
            .ok_or_else(|| Error::InvalidPair("region has no vertex besides v_X".into()))?;
        let mut b = PartialEdgeColouring::zero(&region);
        for (e, col) in self.b.iter() {
            if !e.is_incident(self.v) {
                b.set(e, col)?;
            }
        }
        for (j, e) in ex.iter().enumerate() {
            b.set(*e, if j + 1 < i { c_prime } else { c })?;
        }
        let mut b_prime = b.clone();
        b_prime.set(ex[i - 1], c_prime)?;
        Ok(EdgeBoundaryPair {
            region,
            w: self.v,
            v: ex[i - 1].other(self.v).unwrap(),
            b,
            b_prime,
        })
    }

    /// Pair file: the region file followed by `eX` and the two colourings.
    pub fn to_text(&self) -> String {
        let mut s = RegionFile::new(self.region.clone())
            .with_pair(self.v, self.w)
            .to_text();
        s.push_str(&format!("eX {} {} {} {}\n", self.w.x, self.w.y, self.v.x, self.v.y));
        s.push_str("B:\n");
        s.push_str(&self.b.to_text());
        s.push_str("B':\n");
        s.push_str(&self.b_prime.to_text());
        s
    }

    pub fn parse(text: &str, params: Parameters) -> Result<Self> {
        let mut ex: Option<(LatticeCoord, LatticeCoord)> = None;
        let mut block = 0u8;
        let mut maps = [BTreeMap::new(), BTreeMap::new()];
        let mut err = None;
        let file = RegionFile::parse_lenient(text, |ln, line| {
            let key = line.split_whitespace().next().unwrap_or("");
            let res = match key {
                "eX" => {
                    let mut toks = line.split_whitespace().skip(1);
                    parse_coord(&mut toks, ln)
                        .and_then(|a| Ok((a, parse_coord(&mut toks, ln)?)))
                        .map(|p| ex = Some(p))
                }
                "B:" => {
                    block = 1;
                    Ok(())
                }
                "B':" => {
                    block = 2;
                    Ok(())
                }
                "e" if block > 0 => parse_edge_line(line, ln).and_then(|(e, c)| {
                    if maps[block as usize - 1].insert(e, c).is_some() {
                        Err(parse_err(ln, format!("edge {e} listed twice")))
                    } else {
                        Ok(())
                    }
                }),
                _ => return false,
            };
            if let Err(e) = res {
                err.get_or_insert(e);
            }
            true
        })?;
        if let Some(e) = err {
            return Err(e);
        }
        let (a, b) = ex.ok_or_else(|| parse_err(0, "missing eX line"))?;
        let region = file.region;
        let (w, v) = if region.contains(a) { (b, a) } else { (a, b) };
        let [mb, mbp] = maps;
        let pair = EdgeBoundaryPair {
            b: PartialEdgeColouring::from_map(&region, mb, params)?,
            b_prime: PartialEdgeColouring::from_map(&region, mbp, params)?,
            region,
            w,
            v,
        };
        Ok(pair)
    }
}

pub fn ordered_ex(region: &Region, v: LatticeCoord, w: LatticeCoord) -> Vec<Edge> {
    let Some(dw) = v.direction_to(w) else {
        return Vec::new();
    };
    (1..6)
        .map(|k| (dw + k) % 6)
        .map(|d| v.offset(OFFSETS[d].0, OFFSETS[d].1))
        .filter(|u| region.contains(*u))
        .map(|u| Edge::new(v, u).unwrap())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VertexBoundaryPair {
    pub region: Region,
    pub w: LatticeCoord,
    pub b: PartialVertexColouring,
    pub b_prime: PartialVertexColouring,
}

impl VertexBoundaryPair {
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let vb = self.region.vertex_boundary();
        if !vb.contains(&self.w) {
            out.push("w_X is not a boundary vertex".to_string());
            return out;
        }
        if self.b.len() != vb.len() || self.b_prime.len() != vb.len() {
            out.push("colouring domain is not the vertex boundary".to_string());
            return out;
        }
        for (u, c) in self.b.iter() {
            if u != self.w && self.b_prime.get(u) != Some(c) {
                out.push(format!("colourings differ at {u}, which is not w_X"));
            }
        }
        let (c1, c2) = (self.b.get(self.w).unwrap(), self.b_prime.get(self.w).unwrap());
        if c1 == c2 {
            out.push("discrepancy vertex colours equal".to_string());
        }
        if c1 == 0 || c2 == 0 {
            out.push("discrepancy vertex must be coloured in both colourings".to_string());
        }
        out
    }
}

/// Sort key placing `u - v` by clockwise angle from `r`, exactly. The
/// embedding scales `x` by `sqrt(3)`, which only rescales cross products and
/// adds a factor 3 to the `x` part of dot products.
fn cw_cmp(r: (i64, i64), a: (i64, i64), b: (i64, i64)) -> Ordering {
    let cross = |p: (i64, i64), q: (i64, i64)| p.0 * q.1 - p.1 * q.0;
    let dot = |p: (i64, i64), q: (i64, i64)| 3 * p.0 * q.0 + p.1 * q.1;
    // Half 0: angle in [0, pi) measured clockwise from r.
    let half = |p| {
        let c = cross(r, p);
        if c < 0 || (c == 0 && dot(r, p) > 0) {
            0
        } else {
            1
        }
    };
    half(a).cmp(&half(b)).then_with(|| {
        let c = cross(a, b);
        // b clockwise of a means a comes first.
        0.cmp(&c)
            .reverse()
            .then_with(|| (a.0 * a.0 * 3 + a.1 * a.1).cmp(&(b.0 * b.0 * 3 + b.1 * b.1)))
    })
}

/// One shared colour variable of the canonical search space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Slot {
    pub label: String,
    /// Boundary edges carrying this variable's colour.
    pub edges: Vec<Edge>,
    /// Region vertices whose allowed colours this variable restricts.
    pub touches: Vec<usize>,
}

/// The canonical search space for a region with a distinguished pair.
#[derive(Clone, Debug)]
pub struct BoundaryShape {
    pub region: Region,
    pub v: LatticeCoord,
    pub w: LatticeCoord,
    /// Slots of `w_X`'s two runs; `None` when the run is empty.
    pub cw_run: Option<usize>,
    pub ccw_run: Option<usize>,
    pub slots: Vec<Slot>,
    /// Indices of free slots (colours `0..=q`) in scan order.
    pub free: Vec<usize>,
    /// Groups of free-slot positions (indices into `free`) whose colours may be permuted.
    pub swap_groups: Vec<Vec<usize>>,
    pub params: Parameters,
    group_perms: Vec<Vec<Vec<usize>>>,
    /// For each free position, the previous position of its swap group.
    group_prev: Vec<Option<usize>>,
}

/// Upper bound on free slots per shape.
pub const MAX_SLOTS: usize = 64;

impl BoundaryShape {
    pub fn new(region: &Region, v: LatticeCoord, w: LatticeCoord, params: Parameters) -> Result<Self> {
        if !region.contains(v) || region.contains(w) || !v.is_adjacent(w) {
            return Err(Error::InvalidPair("need v_X in the region and w_X adjacent outside".into()));
        }
        let dx = w.direction_to(v).unwrap();
        let inside = |d: usize| region.contains(w.offset(OFFSETS[d % 6].0, OFFSETS[d % 6].1));
        if (0..6).all(inside) {
            return Err(Error::InvalidPair("w_X has six neighbours in the region".into()));
        }
        let touch = |e: &Edge| region.index_of(e.other(w).unwrap()).unwrap();
        let mut slots = Vec::new();
        let mut used = BTreeSet::from([dx]);
        let mut run = |dirs: Vec<usize>, label: &str, slots: &mut Vec<Slot>| -> Option<usize> {
            let dirs: Vec<usize> = dirs.into_iter().take_while(|&d| inside(d)).map(|d| d % 6).collect();
            if dirs.is_empty() {
                return None;
            }
            used.extend(dirs.iter().copied());
            let edges: Vec<Edge> = dirs
                .iter()
                .map(|&d| Edge::new(w, w.offset(OFFSETS[d].0, OFFSETS[d].1)).unwrap())
                .collect();
            let touches = edges.iter().map(touch).collect();
            slots.push(Slot {
                label: label.to_string(),
                edges,
                touches,
            });
            Some(slots.len() - 1)
        };
        let cw_run = run((1..6).map(|k| dx + k).collect(), "w+", &mut slots);
        let ccw_run = run((1..6).map(|k| dx + 6 - k).collect(), "w-", &mut slots);
        let mut free = Vec::new();
        // Runs at w_X not touching e_X take free colours of their own.
        let mut d = dx + 1;
        let mut det = 0;
        while d < dx + 6 {
            if inside(d) && !used.contains(&(d % 6)) {
                let mut edges = Vec::new();
                while d < dx + 6 && inside(d) {
                    let o = OFFSETS[d % 6];
                    edges.push(Edge::new(w, w.offset(o.0, o.1)).unwrap());
                    used.insert(d % 6);
                    d += 1;
                }
                let touches = edges.iter().map(touch).collect();
                det += 1;
                slots.push(Slot {
                    label: format!("w{det}"),
                    edges,
                    touches,
                });
                free.push(slots.len() - 1);
            }
            d += 1;
        }
        // Remaining boundary vertices, clockwise around v_X from w_X.
        let r = ((w.x - v.x) as i64, (w.y - v.y) as i64);
        let mut others: Vec<LatticeCoord> = region.vertex_boundary().into_iter().filter(|&u| u != w).collect();
        others.sort_by(|a, b| {
            cw_cmp(
                r,
                ((a.x - v.x) as i64, (a.y - v.y) as i64),
                ((b.x - v.x) as i64, (b.y - v.y) as i64),
            )
            .then(a.cmp(b))
        });
        let nbrs = |u: LatticeCoord| -> Vec<usize> {
            u.neighbours().iter().filter_map(|n| region.index_of(*n)).collect()
        };
        // Pull vertices with equal region-neighbour sets next to the first of them.
        let mut ordered: Vec<LatticeCoord> = Vec::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut placed = BTreeSet::new();
        for &u in &others {
            if placed.contains(&u) {
                continue;
            }
            let key = nbrs(u);
            let members: Vec<LatticeCoord> = others
                .iter()
                .copied()
                .filter(|x| !placed.contains(x) && nbrs(*x) == key)
                .collect();
            let start = free.len() + ordered.len();
            for m in &members {
                placed.insert(*m);
                ordered.push(*m);
            }
            if members.len() > 1 {
                groups.push((start..start + members.len()).collect());
            }
        }
        for u in ordered {
            let edges: Vec<Edge> = u
                .neighbours()
                .iter()
                .filter(|n| region.contains(**n))
                .map(|n| Edge::new(u, *n).unwrap())
                .collect();
            slots.push(Slot {
                label: format!("{},{}", u.x, u.y),
                touches: nbrs(u),
                edges,
            });
            free.push(slots.len() - 1);
        }
        let group_perms = groups.iter().map(|g| permutations(g.len())).collect();
        let mut group_prev = vec![None; free.len()];
        for g in &groups {
            for w in g.windows(2) {
                group_prev[w[1]] = Some(w[0]);
            }
        }
        Ok(BoundaryShape {
            group_perms,
            group_prev,
            region: region.clone(),
            v,
            w,
            cw_run,
            ccw_run,
            slots,
            free,
            swap_groups: groups,
            params,
        })
    }

    pub fn from_region_file(f: &RegionFile, params: Parameters) -> Result<Self> {
        let v = f
            .distinguished_v
            .ok_or_else(|| Error::InvalidPair("region file lacks distinguished_v".into()))?;
        let w = f
            .distinguished_w
            .ok_or_else(|| Error::InvalidPair("region file lacks distinguished_w".into()))?;
        BoundaryShape::new(&f.region, v, w, params)
    }

    /// Number of `w_X` runs that carry colours 1 and 2.
    pub fn run_count(&self) -> usize {
        self.cw_run.is_some() as usize + self.ccw_run.is_some() as usize
    }

    /// Assignments of `{1, 2}` to the runs: both orders when both runs exist.
    pub fn run_choices(&self) -> Vec<(u8, u8)> {
        match (self.cw_run, self.ccw_run) {
            (Some(_), Some(_)) => vec![(1, 2), (2, 1)],
            (Some(_), None) | (None, Some(_)) => vec![(1, 0), (2, 0)],
            (None, None) => vec![(0, 0)],
        }
    }

    pub fn v_index(&self) -> usize {
        self.region.index_of(self.v).unwrap()
    }

    /// Allowed-colour masks for `(runs, free colours)`; `e_X` is ignored.
    pub fn masks(&self, cb: &CanonicalBoundary, out: &mut [u32]) {
        let full = self.params.full_mask();
        out.iter_mut().for_each(|m| *m = full);
        let mut apply = |slot: usize, c: u8| {
            if c > 0 {
                for &t in &self.slots[slot].touches {
                    out[t] &= !(1 << (c - 1));
                }
            }
        };
        let runs = [self.cw_run, self.ccw_run].into_iter().flatten();
        for (s, &c) in runs.zip(&[cb.runs.0, cb.runs.1]) {
            apply(s, c);
        }
        for (&s, &c) in self.free.iter().zip(&cb.free) {
            apply(s, c);
        }
    }

    /// Masks contributed by the `w_X` runs alone.
    pub fn run_masks(&self, runs: (u8, u8)) -> Vec<u32> {
        let mut out = vec![self.params.full_mask(); self.region.len()];
        let slots = [self.cw_run, self.ccw_run].into_iter().flatten();
        for (s, c) in slots.zip([runs.0, runs.1]) {
            if c > 0 {
                for &t in &self.slots[s].touches {
                    out[t] &= !(1 << (c - 1));
                }
            }
        }
        out
    }

    /// The edge-boundary pair with `B(e_X) = 1` and `B'(e_X) = 2`.
    pub fn to_pair(&self, cb: &CanonicalBoundary) -> EdgeBoundaryPair {
        let mut b = PartialEdgeColouring::zero(&self.region);
        let runs = [self.cw_run, self.ccw_run].into_iter().flatten();
        for (s, &c) in runs.zip(&[cb.runs.0, cb.runs.1]) {
            for e in &self.slots[s].edges {
                b.set(*e, c).unwrap();
            }
        }
        for (&s, &c) in self.free.iter().zip(&cb.free) {
            for e in &self.slots[s].edges {
                b.set(*e, c).unwrap();
            }
        }
        let ex = Edge::new(self.w, self.v).unwrap();
        let mut b_prime = b.clone();
        b.set(ex, 1).unwrap();
        b_prime.set(ex, 2).unwrap();
        EdgeBoundaryPair {
            region: self.region.clone(),
            w: self.w,
            v: self.v,
            b,
            b_prime,
        }
    }

    /// Relabels colours `>= 3` in order of first use.
    pub fn relabel(&self, free: &mut [u8]) {
        let mut map = [0u8; 32];
        let mut next = 3u8;
        for c in free.iter_mut() {
            if *c >= 3 {
                if map[*c as usize] == 0 {
                    map[*c as usize] = next;
                    next += 1;
                }
                *c = map[*c as usize];
            }
        }
    }

    /// Whether `free` is the least element of its orbit under relabelling and
    /// swap-group permutations.
    pub fn is_canonical(&self, free: &[u8]) -> bool {
        let mut scratch = free.to_vec();
        self.relabel(&mut scratch);
        scratch == free
            && (0..free.len()).all(|p| free[p] >= self.lower_bound(p, free))
            && self.is_swap_minimal(free)
    }

    /// Orbit minimality for a tuple already in first-use form.
    ///
    /// A group whose values are all below 3, or all equal, can stay fixed:
    /// permuting it either changes nothing or makes the tuple larger at a
    /// position that relabelling does not touch.
    fn is_swap_minimal(&self, free: &[u8]) -> bool {
        let n = free.len();
        let mut active = [0usize; MAX_SLOTS];
        let mut groups = 0;
        for (g, group) in self.swap_groups.iter().enumerate() {
            let first = free[group[0]];
            let varied = group.iter().any(|&p| free[p] != first);
            let labelled = group.iter().any(|&p| free[p] >= 3);
            if varied && labelled {
                active[groups] = g;
                groups += 1;
            }
        }
        if groups == 0 {
            return true;
        }
        let mut scratch = [0u8; MAX_SLOTS];
        let mut idx = [0usize; MAX_SLOTS];
        loop {
            // Advance the mixed-radix counter over the active groups' permutations.
            let mut k = 0;
            while k < groups {
                idx[k] += 1;
                if idx[k] < self.group_perms[active[k]].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == groups {
                return true;
            }
            scratch[..n].copy_from_slice(free);
            for k in 0..groups {
                let group = &self.swap_groups[active[k]];
                let p = &self.group_perms[active[k]][idx[k]];
                for (j, &pos) in group.iter().enumerate() {
                    scratch[pos] = free[group[p[j]]];
                }
            }
            self.relabel(&mut scratch[..n]);
            if &scratch[..n] < free {
                return false;
            }
        }
    }

    /// Smallest value allowed at free position `pos` given the earlier
    /// values: inside a swap group, values never decrease. Every orbit
    /// minimum has this property, so the bound only prunes.
    fn lower_bound(&self, pos: usize, cur: &[u8]) -> u8 {
        match self.group_prev[pos] {
            Some(prev) => cur[prev],
            None => 0,
        }
    }

    /// Calls `f(free, masks, changed)` for every canonical tuple starting
    /// with `prefix`, in lexicographic order. `masks` are the allowed-colour
    /// masks of the free slots alone; callers add the `w_X` runs. `changed`
    /// is the first position that differs from the previous call's tuple.
    pub fn visit_free<F: FnMut(&[u8], &[u32], usize)>(&self, prefix: &[u8], mut f: F) {
        let n = self.free.len();
        assert!(n <= MAX_SLOTS, "too many boundary slots");
        let full = self.params.full_mask();
        let len = self.region.len();
        let mut masks = vec![full; len * (n + 1)];
        let mut cur = vec![0u8; n];
        let prefix = &prefix[..prefix.len().min(n)];
        let mut probe = prefix.to_vec();
        self.relabel(&mut probe);
        if probe != prefix {
            return;
        }
        let mut changed = 0;
        self.dfs(0, 2, prefix, &mut cur, &mut masks, &mut changed, &mut f);
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs<F: FnMut(&[u8], &[u32], usize)>(
        &self,
        pos: usize,
        top: u8,
        prefix: &[u8],
        cur: &mut [u8],
        masks: &mut [u32],
        changed: &mut usize,
        f: &mut F,
    ) {
        let n = cur.len();
        let len = self.region.len();
        if pos == n {
            if self.is_swap_minimal(cur) {
                f(cur, &masks[n * len..(n + 1) * len], *changed);
                *changed = n;
            }
            return;
        }
        let q = self.params.q as u8;
        let (lo, hi) = if pos < prefix.len() {
            (prefix[pos], prefix[pos])
        } else {
            (self.lower_bound(pos, cur), (top + 1).min(q))
        };
        if pos < prefix.len() && prefix[pos] < self.lower_bound(pos, cur) {
            return;
        }
        let touches = &self.slots[self.free[pos]].touches;
        for c in lo..=hi {
            cur[pos] = c;
            *changed = (*changed).min(pos);
            let (before, after) = masks.split_at_mut((pos + 1) * len);
            let next = &mut after[..len];
            next.copy_from_slice(&before[pos * len..]);
            if c > 0 {
                for &t in touches {
                    next[t] &= !(1 << (c - 1));
                }
            }
            self.dfs(pos + 1, top.max(c), prefix, cur, masks, changed, f);
        }
    }

    /// All canonical boundaries in lexicographic order of `(runs, free)`.
    pub fn enumerate(&self) -> Enumeration<'_> {
        Enumeration::new(self, &[])
    }

    /// Canonical boundaries whose free colours start with `prefix`.
    pub fn enumerate_with_prefix(&self, prefix: &[u8]) -> Enumeration<'_> {
        Enumeration::new(self, prefix)
    }

    /// Distinct first-use-canonical prefixes of length `len`, used to split
    /// the enumeration across workers.
    pub fn prefixes(&self, len: usize) -> Vec<Vec<u8>> {
        let len = len.min(self.free.len());
        let q = self.params.q as u8;
        let mut out = vec![Vec::new()];
        for _ in 0..len {
            let mut next = Vec::new();
            for p in out {
                let top = p.iter().copied().filter(|&c| c >= 3).max().unwrap_or(2);
                let lo = self.lower_bound(p.len(), &p);
                for c in lo..=(top + 1).min(q) {
                    let mut np: Vec<u8> = p.clone();
                    np.push(c);
                    next.push(np);
                }
            }
            out = next;
        }
        out
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut np = p.clone();
            np.insert(i, n - 1);
            out.push(np);
        }
    }
    out.sort();
    out
}

/// A point of the canonical search space: colours of the `w_X` runs and of
/// each free slot.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalBoundary {
    pub runs: (u8, u8),
    pub free: Vec<u8>,
}

impl fmt::Display for CanonicalBoundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.runs.0 > 0 {
            parts.push(self.runs.0.to_string());
        }
        if self.runs.1 > 0 {
            parts.push(self.runs.1.to_string());
        }
        parts.extend(self.free.iter().map(|c| c.to_string()));
        write!(f, "({})", parts.join(","))
    }
}

/// Lexicographic stream of canonical boundaries.
pub struct Enumeration<'a> {
    shape: &'a BoundaryShape,
    runs: Vec<(u8, u8)>,
    run_idx: usize,
    prefix_len: usize,
    current: Vec<u8>,
    started: bool,
    done: bool,
}

impl<'a> Enumeration<'a> {
    fn new(shape: &'a BoundaryShape, prefix: &[u8]) -> Self {
        let n = shape.free.len();
        let prefix_len = prefix.len().min(n);
        let mut current = prefix[..prefix_len].to_vec();
        current.resize(n, 0);
        let mut probe = prefix[..prefix_len].to_vec();
        shape.relabel(&mut probe);
        let done = probe != prefix[..prefix_len];
        Enumeration {
            shape,
            runs: shape.run_choices(),
            run_idx: 0,
            prefix_len,
            current,
            started: false,
            done,
        }
    }

    /// Next first-use-canonical tuple after `current`, keeping the prefix.
    fn advance(&mut self) -> bool {
        let q = self.shape.params.q as u8;
        let n = self.current.len();
        let mut i = n;
        while i > self.prefix_len {
            i -= 1;
            let top = self.current[..i].iter().copied().filter(|&c| c >= 3).max().unwrap_or(2);
            let limit = (top + 1).min(q);
            if self.current[i] < limit {
                self.current[i] += 1;
                for c in &mut self.current[i + 1..] {
                    *c = 0;
                }
                return true;
            }
        }
        false
    }
}

impl<'a> Iterator for Enumeration<'a> {
    type Item = CanonicalBoundary;

    fn next(&mut self) -> Option<CanonicalBoundary> {
        while !self.done {
            if self.started {
                if !self.advance() {
                    self.run_idx += 1;
                    if self.run_idx >= self.runs.len() {
                        self.done = true;
                        return None;
                    }
                    for c in &mut self.current[self.prefix_len..] {
                        *c = 0;
                    }
                }
            }
            self.started = true;
            if self.shape.is_canonical(&self.current) {
                return Some(CanonicalBoundary {
                    runs: self.runs[self.run_idx],
                    free: self.current.clone(),
                });
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: i32, y: i32) -> LatticeCoord {
        LatticeCoord::new(x, y).unwrap()
    }

    fn single() -> BoundaryShape {
        let r = Region::from_pairs(&[(0, 0)]).unwrap();
        BoundaryShape::new(&r, c(0, 0), c(0, -2), Parameters::default()).unwrap()
    }

    #[test]
    fn single_vertex_shape() {
        let s = single();
        assert_eq!(s.run_count(), 0);
        assert_eq!(s.free.len(), 5);
        // All five outer vertices touch only v_X.
        assert_eq!(s.swap_groups, vec![vec![0, 1, 2, 3, 4]]);
        // Scan order is clockwise from w_X = (0,-2).
        let labels: Vec<&str> = s.free.iter().map(|&i| s.slots[i].label.as_str()).collect();
        assert_eq!(labels, ["-1,-1", "-1,1", "0,2", "1,1", "1,-1"]);
    }

    #[test]
    fn single_vertex_pair_is_valid() {
        let s = single();
        let p = s.to_pair(&CanonicalBoundary {
            runs: (0, 0),
            free: vec![0; 5],
        });
        assert!(p.validate(Parameters::default()).is_empty());
        assert!(p.ordered_ex().is_empty());
        let mut bad = p.clone();
        bad.b_prime.set(p.e_x(), 1).unwrap();
        assert!(bad
            .validate(Parameters::default())
            .iter()
            .any(|v| v.to_string() == "discrepancy edge colours equal"));
    }

    #[test]
    fn six_neighbours_rejected() {
        let r = crate::lattice::ball(c(0, 0), 1);
        let r = r.without(c(0, 0)).unwrap();
        assert!(BoundaryShape::new(&r, c(0, 2), c(0, 0), Parameters::default()).is_err());
        let mut b = PartialEdgeColouring::zero(&r);
        let e = Edge::new(c(0, 0), c(0, 2)).unwrap();
        b.set(e, 1).unwrap();
        let mut bp = PartialEdgeColouring::zero(&r);
        bp.set(e, 2).unwrap();
        let p = EdgeBoundaryPair {
            region: r,
            w: c(0, 0),
            v: c(0, 2),
            b,
            b_prime: bp,
        };
        let v = p.validate(Parameters::default());
        assert!(v.contains(&Violation::TooManyNeighbours));
    }

    #[test]
    fn canonical_single_vertex_count() {
        // With all five slots interchangeable an orbit is fixed by the
        // multiset of {0, 1, 2} values plus a partition of the rest.
        let s = single();
        let n = s.enumerate().count();
        let mut orbits = BTreeSet::new();
        for code in 0..10u32.pow(5) {
            let mut t: Vec<u8> = (0..5).map(|i| ((code / 10u32.pow(i)) % 10) as u8).collect();
            t.sort();
            let (low, high): (Vec<u8>, Vec<u8>) = t.into_iter().partition(|&c| c < 3);
            let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
            for h in high {
                *counts.entry(h).or_default() += 1;
            }
            let mut blocks: Vec<usize> = counts.into_values().collect();
            blocks.sort();
            orbits.insert((low, blocks));
        }
        assert_eq!(n, orbits.len());
    }

    #[test]
    fn enumeration_is_sorted_and_valid() {
        let r = Region::from_pairs(&[(0, 0), (0, 2)]).unwrap();
        let s = BoundaryShape::new(&r, c(0, 0), c(1, -1), Parameters::default()).unwrap();
        let all: Vec<_> = s.enumerate().collect();
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        for cb in all.iter().step_by(97) {
            assert!(s.to_pair(cb).validate(Parameters::default()).is_empty());
        }
        let split: usize = s.prefixes(2).iter().map(|p| s.enumerate_with_prefix(p).count()).sum();
        assert_eq!(split, all.len());
    }

    #[test]
    fn visitor_matches_iterator() {
        let r = Region::from_pairs(&[(0, 0), (-1, -1), (1, -1)]).unwrap();
        let s = BoundaryShape::new(&r, c(0, 0), c(0, -2), Parameters::default()).unwrap();
        assert_eq!(s.run_count(), 2);
        assert!(!s.swap_groups.is_empty());
        let runs = s.run_choices()[0];
        let from_iter: Vec<Vec<u8>> = s.enumerate().filter(|cb| cb.runs == runs).map(|cb| cb.free).collect();
        let mut from_visit = Vec::new();
        s.visit_free(&[], |f, _, _| from_visit.push(f.to_vec()));
        assert_eq!(from_iter, from_visit);
        let mut split = Vec::new();
        for p in s.prefixes(3) {
            s.visit_free(&p, |f, _, _| split.push(f.to_vec()));
        }
        assert_eq!(split, from_visit);
    }

    #[test]
    fn children_are_valid() {
        let r = Region::from_pairs(&[(0, 0), (0, 2), (1, 1), (-1, 1)]).unwrap();
        let s = BoundaryShape::new(&r, c(0, 0), c(0, -2), Parameters::default()).unwrap();
        let cb = s.enumerate().nth(500).unwrap();
        let p = s.to_pair(&cb);
        let ex = p.ordered_ex();
        assert_eq!(ex.len(), 3);
        assert_eq!(ex[0].other(c(0, 0)), Some(c(-1, 1)));
        assert_eq!(ex[2].other(c(0, 0)), Some(c(1, 1)));
        for i in 1..=ex.len() {
            for (a, b) in [(1, 2), (3, 5), (9, 1)] {
                let ch = p.child_pair(i, a, b, Parameters::default()).unwrap();
                assert!(ch.validate(Parameters::default()).is_empty(), "{i} {a} {b}");
            }
        }
        assert!(p.child_pair(0, 1, 2, Parameters::default()).is_err());
        assert!(p.child_pair(1, 2, 2, Parameters::default()).is_err());
    }

    #[test]
    fn pair_file_round_trip() {
        let s = single();
        let p = s.to_pair(&CanonicalBoundary {
            runs: (0, 0),
            free: vec![0, 3, 3, 1, 4],
        });
        let text = p.to_text();
        assert_eq!(EdgeBoundaryPair::parse(&text, Parameters::default()).unwrap(), p);
    }
}
