//! Vertex-elimination counting of proper colourings.
//!
//! Each vertex carries a bitmask of allowed colours; inequality constraints
//! come from the region graph and are never materialised as tables. A plan is
//! compiled once per region and then evaluated for many masks.

use std::ops::{AddAssign, MulAssign};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::lattice::Region;

/// Largest factor scope a plan may create. `q^(MAX_WIDTH+1)` entries are
/// touched per step.
pub const MAX_WIDTH: usize = 7;

/// Counting semiring. Implemented for machine words (when the caller knows
/// the count fits) and for arbitrary precision.
pub trait Count:
    Clone + Zero + One + for<'a> AddAssign<&'a Self> + for<'a> MulAssign<&'a Self> + Send + Sync
{
    fn to_biguint(&self) -> BigUint;
}

impl Count for u64 {
    fn to_biguint(&self) -> BigUint {
        BigUint::from(*self)
    }
}

impl Count for u128 {
    fn to_biguint(&self) -> BigUint {
        BigUint::from(*self)
    }
}

impl Count for BigUint {
    fn to_biguint(&self) -> BigUint {
        self.clone()
    }
}

impl Count for f64 {
    fn to_biguint(&self) -> BigUint {
        BigUint::from(self.round().max(0.0).to_u128().unwrap_or(u128::MAX))
    }
}

/// Which integer type is wide enough for `q^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Width {
    U64,
    U128,
    Big,
}

pub fn width_for(n: usize, q: usize) -> Width {
    let bits = n as f64 * (q as f64).log2();
    if bits < 63.0 {
        Width::U64
    } else if bits < 127.0 {
        Width::U128
    } else {
        Width::Big
    }
}

/// Adjacency lists over region indices (lexicographic vertex order).
#[derive(Clone, Debug)]
pub struct RegionGraph {
    pub adj: Vec<Vec<usize>>,
}

impl RegionGraph {
    pub fn new(region: &Region) -> Self {
        let verts: Vec<_> = region.iter().collect();
        let adj = verts
            .iter()
            .map(|v| {
                v.neighbours()
                    .iter()
                    .filter_map(|n| region.index_of(*n))
                    .collect()
            })
            .collect();
        RegionGraph { adj }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }
}

#[derive(Clone, Debug)]
struct Input {
    factor: usize,
    /// Stride in the input table for each position of the step scope.
    strides: Vec<usize>,
    z_stride: usize,
}

#[derive(Clone, Debug)]
struct Step {
    z: usize,
    scope_len: usize,
    inputs: Vec<Input>,
    /// Scope positions holding graph neighbours of `z`.
    neq: Vec<usize>,
    out: usize,
    /// Vertices whose masks feed this step's table.
    deps: u64,
}

#[derive(Clone, Debug)]
pub struct EliminationPlan {
    q: usize,
    n: usize,
    keep: Option<usize>,
    steps: Vec<Step>,
    factor_sizes: Vec<usize>,
    /// Factors alive at the end, each with scope empty or `[keep]`.
    finals: Vec<(usize, bool)>,
    order: Vec<usize>,
    width: usize,
}

impl EliminationPlan {
    /// Greedy min-degree order; ties go to the smaller index. `keep`, if
    /// given, is left uneliminated so the result is a per-colour vector.
    pub fn new(graph: &RegionGraph, q: usize, keep: Option<usize>) -> Result<Self> {
        Self::build(graph, q, keep, None)
    }

    /// An order suited to incremental evaluation when vertex masks change
    /// in order of `priority` (higher changes more often). Vertices whose
    /// factors depend only on low priorities go first, subject to the width
    /// of the min-degree order.
    pub fn with_priority(graph: &RegionGraph, q: usize, keep: Option<usize>, priority: &[u32]) -> Result<Self> {
        let cap = Self::build(graph, q, keep, None)?.width;
        Self::build(graph, q, keep, Some((priority, cap)))
    }

    fn build(graph: &RegionGraph, q: usize, keep: Option<usize>, priority: Option<(&[u32], usize)>) -> Result<Self> {
        let n = graph.len();
        let mut nbr: Vec<std::collections::BTreeSet<usize>> =
            graph.adj.iter().map(|a| a.iter().copied().collect()).collect();
        let mut alive = vec![true; n];
        // Active factors: (id, sorted scope).
        let mut active: Vec<(usize, Vec<usize>)> = Vec::new();
        // Per factor id: vertices whose masks it depends on, and the top priority among them.
        let mut fdeps: Vec<u64> = Vec::new();
        let mut fprio: Vec<u32> = Vec::new();
        let mut factor_sizes = Vec::new();
        let mut steps = Vec::new();
        let mut order = Vec::new();
        let mut width = 0;
        for _ in 0..n - keep.is_some() as usize {
            let candidates = (0..n).filter(|&i| alive[i] && Some(i) != keep);
            let z = match priority {
                None => candidates.min_by_key(|&i| (nbr[i].len(), i)),
                Some((prio, cap)) => candidates.min_by_key(|&i| {
                    let p = active
                        .iter()
                        .filter(|(_, fs)| fs.contains(&i))
                        .map(|(id, _)| fprio[*id])
                        .fold(prio[i], u32::max);
                    (nbr[i].len() > cap, p, nbr[i].len(), i)
                }),
            }
            .expect("a vertex remains");
            let scope: Vec<usize> = nbr[z].iter().copied().collect();
            if scope.len() > MAX_WIDTH {
                return Err(Error::ResourceCap(format!(
                    "elimination width {} exceeds {MAX_WIDTH}",
                    scope.len()
                )));
            }
            width = width.max(scope.len());
            let pos = |v: usize| scope.iter().position(|&s| s == v);
            let mut inputs = Vec::new();
            let mut deps = if z < 64 { 1u64 << z } else { !0 };
            let mut prio = priority.map_or(0, |(p, _)| p[z]);
            active.retain(|(id, fs)| {
                if !fs.contains(&z) {
                    return true;
                }
                let mut strides = vec![0; scope.len()];
                let mut z_stride = 0;
                let mut stride = 1;
                for &v in fs {
                    if v == z {
                        z_stride = stride;
                    } else {
                        strides[pos(v).expect("factor scope within neighbourhood")] = stride;
                    }
                    stride *= q;
                }
                deps |= fdeps[*id];
                prio = prio.max(fprio[*id]);
                inputs.push(Input {
                    factor: *id,
                    strides,
                    z_stride,
                });
                false
            });
            let neq = graph.adj[z]
                .iter()
                .filter_map(|&u| if alive[u] { pos(u) } else { None })
                .collect();
            let out = factor_sizes.len();
            factor_sizes.push(q.pow(scope.len() as u32));
            fdeps.push(deps);
            fprio.push(prio);
            active.push((out, scope.clone()));
            steps.push(Step {
                z,
                scope_len: scope.len(),
                inputs,
                neq,
                out,
                deps,
            });
            alive[z] = false;
            order.push(z);
            for &a in &scope {
                nbr[a].remove(&z);
                for &b in &scope {
                    if a != b {
                        nbr[a].insert(b);
                    }
                }
            }
        }
        let finals = active
            .into_iter()
            .map(|(id, s)| (id, !s.is_empty()))
            .collect();
        Ok(EliminationPlan {
            q,
            n,
            keep,
            steps,
            factor_sizes,
            finals,
            order,
            width,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn workspace<C: Count>(&self) -> Workspace<C> {
        Workspace {
            tables: self
                .factor_sizes
                .iter()
                .map(|&s| vec![C::zero(); s])
                .collect(),
            digits: vec![0; MAX_WIDTH + 1],
            bases: Vec::new(),
            result: Vec::with_capacity(self.q),
            fresh: true,
        }
    }

    /// Runs the plan. `allowed[i]` has bit `c` set when colour `c + 1` is
    /// permitted at vertex `i`. Returns one entry per colour of the kept
    /// vertex, or a single total when nothing is kept.
    pub fn evaluate<'w, C: Count>(&self, allowed: &[u32], ws: &'w mut Workspace<C>) -> &'w [C] {
        ws.fresh = true;
        self.evaluate_incremental(allowed, ws, !0)
    }

    /// Like [`EliminationPlan::evaluate`], but reuses tables from the previous
    /// call on `ws` unless they depend on a vertex in `dirty` (bit `i` for
    /// vertex `i`; vertices from 64 on always count as dirty).
    pub fn evaluate_incremental<'w, C: Count>(&self, allowed: &[u32], ws: &'w mut Workspace<C>, dirty: u64) -> &'w [C] {
        debug_assert_eq!(allowed.len(), self.n);
        let q = self.q;
        let fresh = std::mem::replace(&mut ws.fresh, false);
        for step in &self.steps {
            if !fresh && step.deps & dirty == 0 {
                continue;
            }
            let Workspace {
                tables,
                digits,
                bases,
                ..
            } = ws;
            let (before, rest) = tables.split_at_mut(step.out);
            let out = &mut rest[0];
            let digits = &mut digits[..step.scope_len];
            bases.resize(step.inputs.len(), 0);
            digits.iter_mut().for_each(|d| *d = 0);
            let zmask = allowed[step.z];
            for cell in out.iter_mut() {
                let mut blocked = 0u32;
                for &p in &step.neq {
                    blocked |= 1 << digits[p];
                }
                let free = zmask & !blocked;
                let mut acc = C::zero();
                if free != 0 {
                    for (b, inp) in bases.iter_mut().zip(&step.inputs) {
                        *b = inp.strides.iter().zip(digits.iter()).map(|(s, d)| s * d).sum();
                    }
                    let mut m = free;
                    while m != 0 {
                        let c = m.trailing_zeros() as usize;
                        m &= m - 1;
                        let mut prod = C::one();
                        for (inp, base) in step.inputs.iter().zip(bases.iter()) {
                            prod *= &before[inp.factor][base + c * inp.z_stride];
                        }
                        acc += &prod;
                    }
                }
                *cell = acc;
                for d in digits.iter_mut() {
                    *d += 1;
                    if *d < q {
                        break;
                    }
                    *d = 0;
                }
            }
        }
        ws.result.clear();
        match self.keep {
            None => {
                let mut total = C::one();
                for &(id, _) in &self.finals {
                    total *= &ws.tables[id][0];
                }
                ws.result.push(total);
            }
            Some(k) => {
                for c in 0..q {
                    if allowed[k] & (1 << c) == 0 {
                        ws.result.push(C::zero());
                        continue;
                    }
                    let mut prod = C::one();
                    for &(id, scoped) in &self.finals {
                        prod *= &ws.tables[id][if scoped { c } else { 0 }];
                    }
                    ws.result.push(prod);
                }
            }
        }
        &ws.result
    }
}

/// Reusable factor tables for one plan.
pub struct Workspace<C> {
    tables: Vec<Vec<C>>,
    digits: Vec<usize>,
    bases: Vec<usize>,
    result: Vec<C>,
    fresh: bool,
}

/// A compiled plan together with the width decision, returning exact counts.
#[derive(Clone, Debug)]
pub struct Counter {
    plan: EliminationPlan,
    width: Width,
}

impl Counter {
    pub fn new(graph: &RegionGraph, q: usize, keep: Option<usize>) -> Result<Self> {
        Ok(Counter {
            plan: EliminationPlan::new(graph, q, keep)?,
            width: width_for(graph.len(), q),
        })
    }

    pub fn plan(&self) -> &EliminationPlan {
        &self.plan
    }

    pub fn integer_width(&self) -> Width {
        self.width
    }

    pub fn evaluate(&self, allowed: &[u32]) -> Vec<BigUint> {
        fn run<C: Count>(p: &EliminationPlan, a: &[u32]) -> Vec<BigUint> {
            let mut ws = p.workspace::<C>();
            p.evaluate(a, &mut ws).iter().map(Count::to_biguint).collect()
        }
        match self.width {
            Width::U64 => run::<u64>(&self.plan, allowed),
            Width::U128 => run::<u128>(&self.plan, allowed),
            Width::Big => run::<BigUint>(&self.plan, allowed),
        }
    }
}

pub fn sum_big(v: &[BigUint]) -> BigUint {
    v.iter().fold(BigUint::zero(), |a, b| a + b)
}
