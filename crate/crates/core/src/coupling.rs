//! The recursive coupling tree `T_X` and the level sums `Γ_d`.
//!
//! At the root the colours of `v_X` are coupled optimally. Every pair
//! `(c, c')` with `c != c'` pushes the discrepancy one step inward: the edges
//! of `E_X` are switched from `c` to `c'` one at a time, clockwise, and each
//! switch is a new edge-boundary pair on `R \ {v_X}`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Mutex;

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::boundary::EdgeBoundaryPair;
use crate::colouring::engine::{Counter, RegionGraph};
use crate::colouring::{count_breakdown, Colouring, Distribution, Parameters, PartialEdgeColouring};
use crate::error::{Error, Result};
use crate::lattice::{Edge, LatticeCoord, Region, Symmetry};

/// Joint law of the colour of `v_X` under the two boundaries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PTable {
    q: usize,
    p: Vec<BigRational>,
}

impl PTable {
    /// Colours are `1..=q`.
    pub fn get(&self, c: usize, c_prime: usize) -> &BigRational {
        &self.p[(c - 1) * self.q + (c_prime - 1)]
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn row_sum(&self, c: usize) -> BigRational {
        (1..=self.q).fold(BigRational::zero(), |a, j| a + self.get(c, j))
    }

    pub fn col_sum(&self, c_prime: usize) -> BigRational {
        (1..=self.q).fold(BigRational::zero(), |a, i| a + self.get(i, c_prime))
    }

    pub fn off_diagonal_mass(&self) -> BigRational {
        self.off_diagonal().fold(BigRational::zero(), |a, (_, _, p)| a + p)
    }

    /// Nonzero entries with `c != c'`, in row-major order.
    pub fn off_diagonal(&self) -> impl Iterator<Item = (u8, u8, &BigRational)> + '_ {
        (1..=self.q).flat_map(move |c| {
            (1..=self.q)
                .filter(move |&d| d != c)
                .map(move |d| (c as u8, d as u8, self.get(c, d)))
                .filter(|(_, _, p)| !p.is_zero())
        })
    }
}

impl fmt::Display for PTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in 1..=self.q {
            let row: Vec<String> = (1..=self.q).map(|d| self.get(c, d).to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Optimal coupling of two distributions on `1..=q`: as much mass as possible
/// on the diagonal, the leftovers matched greedily in colour order.
pub fn optimal_coupling(p: &Distribution, r: &Distribution) -> PTable {
    let q = p.0.len().max(r.0.len());
    let zero = BigRational::zero();
    let mut table = vec![BigRational::zero(); q * q];
    let mut left = Vec::with_capacity(q);
    let mut right = Vec::with_capacity(q);
    for c in 0..q {
        let a = p.0.get(c).unwrap_or(&zero);
        let b = r.0.get(c).unwrap_or(&zero);
        let m = a.min(b).clone();
        left.push(a - &m);
        right.push(b - &m);
        table[c * q + c] = m;
    }
    let (mut i, mut j) = (0, 0);
    while i < q && j < q {
        if left[i].is_zero() {
            i += 1;
            continue;
        }
        if right[j].is_zero() {
            j += 1;
            continue;
        }
        let m = (&left[i]).min(&right[j]).clone();
        table[i * q + j] += &m;
        left[i] -= &m;
        right[j] -= &m;
    }
    PTable { q, p: table }
}

pub fn p_table(x: &EdgeBoundaryPair, params: Parameters) -> Result<PTable> {
    let first = count_breakdown(&x.region, &x.b, x.v, params)?;
    let second = count_breakdown(&x.region, &x.b_prime, x.v, params)?;
    let p = Distribution::from_counts(&first.per_colour).map_err(|_| Error::UndefinedMu)?;
    let r = Distribution::from_counts(&second.per_colour).map_err(|_| Error::UndefinedMu)?;
    Ok(optimal_coupling(&p, &r))
}

/// Edge name: a vertex, or `·` for the glue edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeName {
    Vertex(LatticeCoord),
    Degenerate,
}

impl fmt::Display for EdgeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeName::Vertex(v) => write!(f, "{},{}", v.x, v.y),
            EdgeName::Degenerate => f.write_str("·"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeEdge {
    pub parent: usize,
    pub child: usize,
    pub weight: BigRational,
    pub name: EdgeName,
    /// Non-degenerate edges on the path from the root, this one included.
    pub level: usize,
    pub likelihood: BigRational,
}

/// `T_X` cut off below non-degenerate level `depth`. Node 0 is the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CouplingTree {
    pub nodes: usize,
    pub edges: Vec<TreeEdge>,
    pub depth: usize,
    /// Whether the cut removed any edge.
    pub truncated: bool,
}

impl CouplingTree {
    pub fn level_edges(&self, d: usize) -> impl Iterator<Item = &TreeEdge> + '_ {
        self.edges
            .iter()
            .filter(move |e| e.level == d && e.name != EdgeName::Degenerate)
    }

    /// Sum of likelihoods over level-`d` edges.
    pub fn gamma(&self, d: usize) -> BigRational {
        self.level_edges(d).fold(BigRational::zero(), |a, e| a + &e.likelihood)
    }

    pub fn levels(&self) -> usize {
        self.edges.iter().map(|e| e.level).max().unwrap_or(0)
    }

    /// One edge per line: `level parent child weight=n/d name=x,y`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for e in &self.edges {
            s.push_str(&format!(
                "{} {} {} weight={}/{} name={}\n",
                e.level,
                e.parent,
                e.child,
                e.weight.numer(),
                e.weight.denom(),
                e.name
            ));
        }
        s
    }
}

pub const DEFAULT_TREE_CAP: usize = 1_000_000;

pub fn build_tree(x: &EdgeBoundaryPair, depth: usize, params: Parameters) -> Result<CouplingTree> {
    build_tree_capped(x, depth, params, DEFAULT_TREE_CAP)
}

pub fn build_tree_capped(x: &EdgeBoundaryPair, depth: usize, params: Parameters, cap: usize) -> Result<CouplingTree> {
    if depth == 0 {
        return Err(Error::InvalidPair("depth must be positive".into()));
    }
    let mut tree = CouplingTree {
        nodes: 1,
        edges: Vec::new(),
        depth,
        truncated: false,
    };
    grow(&mut tree, x, 0, 0, &BigRational::one(), params, cap)?;
    Ok(tree)
}

fn grow(
    tree: &mut CouplingTree,
    x: &EdgeBoundaryPair,
    root: usize,
    level: usize,
    above: &BigRational,
    params: Parameters,
    cap: usize,
) -> Result<()> {
    let table = p_table(x, params)?;
    let ex = x.ordered_ex();
    for (c, c_prime, p) in table.off_diagonal() {
        if tree.edges.len() >= cap {
            return Err(Error::ResourceCap(format!("coupling tree exceeds {cap} edges")));
        }
        let node = tree.nodes;
        tree.nodes += 1;
        let likelihood = above * p;
        tree.edges.push(TreeEdge {
            parent: root,
            child: node,
            weight: p.clone(),
            name: EdgeName::Vertex(x.v),
            level: level + 1,
            likelihood: likelihood.clone(),
        });
        if ex.is_empty() {
            continue;
        }
        if level + 1 == tree.depth {
            tree.truncated = true;
            continue;
        }
        for i in 1..=ex.len() {
            let child = x.child_pair(i, c, c_prime, params)?;
            let sub = tree.nodes;
            tree.nodes += 1;
            tree.edges.push(TreeEdge {
                parent: node,
                child: sub,
                weight: BigRational::one(),
                name: EdgeName::Degenerate,
                level: level + 1,
                likelihood: likelihood.clone(),
            });
            grow(tree, &child, sub, level + 1, &likelihood, params, cap)?;
        }
    }
    Ok(())
}

/// `γ(v, T)`: likelihood summed over edges named `v`. A lower bound on the
/// untruncated cost when `tree.truncated` is set.
pub fn cost(v: LatticeCoord, tree: &CouplingTree) -> BigRational {
    tree.edges
        .iter()
        .filter(|e| e.name == EdgeName::Vertex(v))
        .fold(BigRational::zero(), |a, e| a + &e.likelihood)
}

/// The pair moved so that `v_X` is the origin and `w_X` lies at `(0, -2)`.
/// Rotations keep the clockwise order of `E_X`, so `Γ_d` is unchanged.
pub fn normalise(x: &EdgeBoundaryPair, params: Parameters) -> Result<EdgeBoundaryPair> {
    let d = x
        .v
        .direction_to(x.w)
        .ok_or_else(|| Error::InvalidPair("w_X is not adjacent to v_X".into()))?;
    let s = Symmetry::Rotation(((3 + 6 - d) % 6) as u8);
    let map = |p: LatticeCoord| {
        let q = s.apply(p, x.v);
        q.offset(-x.v.x, -x.v.y)
    };
    let region = Region::new(x.region.iter().map(map))?;
    let move_colouring = |b: &PartialEdgeColouring| -> Result<PartialEdgeColouring> {
        let mut m = BTreeMap::new();
        for (e, c) in b.iter() {
            let (a, z) = e.endpoints();
            m.insert(Edge::new(map(a), map(z))?, c);
        }
        PartialEdgeColouring::from_map(&region, m, params)
    };
    Ok(EdgeBoundaryPair {
        b: move_colouring(&x.b)?,
        b_prime: move_colouring(&x.b_prime)?,
        w: map(x.w),
        v: map(x.v),
        region,
    })
}

/// Memo for [`gamma_d`], keyed on normalised pairs.
#[derive(Default)]
pub struct GammaMemo {
    table: Mutex<HashMap<(EdgeBoundaryPair, usize), BigRational>>,
}

impl GammaMemo {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.table.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `Γ_d(X)` by the recursion over children. Root branches run in parallel.
pub fn gamma_d(x: &EdgeBoundaryPair, d: usize, params: Parameters) -> Result<BigRational> {
    gamma_d_with(x, d, params, &GammaMemo::new())
}

pub fn gamma_d_with(x: &EdgeBoundaryPair, d: usize, params: Parameters, memo: &GammaMemo) -> Result<BigRational> {
    if d == 0 {
        return Err(Error::InvalidPair("d must be at least 1".into()));
    }
    let key = (normalise(x, params)?, d);
    if let Some(g) = memo.table.lock().unwrap().get(&key) {
        return Ok(g.clone());
    }
    let table = p_table(x, params)?;
    let g = if d == 1 {
        table.off_diagonal_mass()
    } else {
        let ex = x.ordered_ex();
        let branches: Vec<(u8, u8, BigRational)> = table.off_diagonal().map(|(c, e, p)| (c, e, p.clone())).collect();
        let parts: Result<Vec<BigRational>> = branches
            .par_iter()
            .map(|(c, c_prime, p)| {
                let mut s = BigRational::zero();
                for i in 1..=ex.len() {
                    let child = x.child_pair(i, *c, *c_prime, params)?;
                    s += gamma_d_with(&child, d - 1, params, memo)?;
                }
                Ok(p * s)
            })
            .collect();
        parts?.into_iter().fold(BigRational::zero(), |a, b| a + b)
    };
    memo.table.lock().unwrap().entry(key).or_insert_with(|| g.clone());
    Ok(g)
}

/// Largest region [`sample_coupling`] accepts by default.
pub const DEFAULT_SAMPLE_CAP: usize = 6;

/// One draw `(C, C')` from the recursive coupling of `π_B` and `π_B'`.
pub fn sample_coupling(x: &EdgeBoundaryPair, seed: u64, params: Parameters) -> Result<(Colouring, Colouring)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_coupling_with(x, &mut rng, params, DEFAULT_SAMPLE_CAP)
}

pub fn sample_coupling_with<R: Rng>(
    x: &EdgeBoundaryPair,
    rng: &mut R,
    params: Parameters,
    cap: usize,
) -> Result<(Colouring, Colouring)> {
    if x.region.len() > cap {
        return Err(Error::CapExceeded {
            cap,
            len: x.region.len(),
        });
    }
    let first = sample_uniform(&x.region, &x.b, rng, params)?;
    let second = sample_given_first(x, &first, rng, params)?;
    Ok((first, second))
}

/// Exact uniform sample from the colourings agreeing with `b`, one vertex at
/// a time from conditional counts.
pub fn sample_uniform<R: Rng>(region: &Region, b: &PartialEdgeColouring, rng: &mut R, params: Parameters) -> Result<Colouring> {
    let mut masks = b.allowed_masks(region, params)?;
    let graph = RegionGraph::new(region);
    for k in 0..region.len() {
        let counter = Counter::new(&graph, params.q(), Some(k))?;
        let weights = counter.evaluate(&masks);
        let c = draw_big(&weights, rng).ok_or(Error::NoValidColouring)?;
        masks[k] = 1 << c;
    }
    let colours: Vec<u8> = masks.iter().map(|m| m.trailing_zeros() as u8 + 1).collect();
    Ok(Colouring::from_indexed(region, &colours))
}

fn draw_big<R: Rng>(weights: &[BigUint], rng: &mut R) -> Option<usize> {
    let total: BigUint = weights.iter().sum();
    if total.is_zero() {
        return None;
    }
    let mut t = rng.gen_biguint_below(&total);
    for (i, w) in weights.iter().enumerate() {
        if &t < w {
            return Some(i);
        }
        t -= w;
    }
    None
}

/// Draws from a list of nonnegative rationals, exactly.
fn draw_rational<R: Rng>(weights: &[BigRational], rng: &mut R) -> Option<usize> {
    let lcm = weights.iter().fold(BigInt::one(), |a, w| a.lcm(w.denom()));
    let ints: Vec<BigUint> = weights
        .iter()
        .map(|w| (w * BigRational::from_integer(lcm.clone())).to_integer().to_biguint().unwrap_or_default())
        .collect();
    draw_big(&ints, rng)
}

/// Second colouring drawn from the coupling conditioned on the first.
/// The discrepancy at `v_X` is pushed through `X_1(c, c'), .., X_k(c, c')`
/// in turn, each step conditioned on the colouring the previous one produced.
pub fn sample_given_first<R: Rng>(x: &EdgeBoundaryPair, first: &Colouring, rng: &mut R, params: Parameters) -> Result<Colouring> {
    let table = p_table(x, params)?;
    let c = first.get(x.v).ok_or(Error::VertexNotInRegion(x.v))? as usize;
    let row: Vec<BigRational> = (1..=table.q()).map(|d| table.get(c, d).clone()).collect();
    let c_prime = draw_rational(&row, rng).ok_or(Error::UndefinedMu)? + 1;
    if c_prime == c {
        return Ok(first.clone());
    }
    let mut rest: BTreeMap<LatticeCoord, u8> = first.iter().filter(|(u, _)| *u != x.v).collect();
    let k = x.ordered_ex().len();
    for i in 1..=k {
        let child = x.child_pair(i, c as u8, c_prime as u8, params)?;
        let next = sample_given_first(&child, &Colouring::new(rest), rng, params)?;
        rest = next.iter().collect();
    }
    rest.insert(x.v, c_prime as u8);
    Ok(Colouring::new(rest))
}
