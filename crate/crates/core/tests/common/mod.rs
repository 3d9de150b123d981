#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use trimix::boundary::EdgeBoundaryPair;
use trimix::colouring::{Parameters, PartialEdgeColouring, PartialVertexColouring};
use trimix::lattice::{Edge, LatticeCoord, Region};

pub fn p9() -> Parameters {
    Parameters::default()
}

/// Connected region of `n` vertices grown from the origin.
pub fn random_region<R: Rng>(rng: &mut R, n: usize) -> Region {
    let mut pts = vec![LatticeCoord::at(0, 0)];
    while pts.len() < n {
        let from = *pts.choose(rng).unwrap();
        let next = from.neighbours()[rng.gen_range(0..6)];
        if !pts.contains(&next) {
            pts.push(next);
        }
    }
    Region::new(pts).unwrap()
}

/// Vertex-form boundary with colours drawn from `0..=top`.
pub fn random_vertex_boundary<R: Rng>(rng: &mut R, region: &Region, top: u8) -> PartialVertexColouring {
    let map: BTreeMap<LatticeCoord, u8> = region
        .vertex_boundary()
        .into_iter()
        .map(|w| (w, rng.gen_range(0..=top)))
        .collect();
    PartialVertexColouring::from_map(region, map, p9()).unwrap()
}

pub fn random_edge_boundary<R: Rng>(rng: &mut R, region: &Region, top: u8) -> PartialEdgeColouring {
    let b = random_vertex_boundary(rng, region, top);
    PartialEdgeColouring::from_vertex(region, &b)
}

/// A valid edge-boundary pair on a random region of `n` vertices.
pub fn random_pair<R: Rng>(rng: &mut R, n: usize, top: u8) -> EdgeBoundaryPair {
    loop {
        let region = random_region(rng, n);
        let vs: Vec<LatticeCoord> = region.iter().collect();
        let v = *vs.choose(rng).unwrap();
        let outside: Vec<LatticeCoord> = v.neighbours().into_iter().filter(|u| !region.contains(*u)).collect();
        let Some(&w) = outside.choose(rng) else { continue };
        let mut b = random_edge_boundary(rng, &region, top);
        let a = rng.gen_range(1..=top.max(2));
        let mut c = rng.gen_range(1..=top.max(2));
        while c == a {
            c = rng.gen_range(1..=top.max(2));
        }
        let ex = Edge::new(w, v).unwrap();
        let pick = [a, c];
        for u in w.neighbours() {
            if region.contains(u) && u != v {
                b.set(Edge::new(w, u).unwrap(), pick[rng.gen_range(0..2)]).unwrap();
            }
        }
        let mut bp = b.clone();
        b.set(ex, a).unwrap();
        bp.set(ex, c).unwrap();
        let x = EdgeBoundaryPair {
            region,
            w,
            v,
            b,
            b_prime: bp,
        };
        if x.validate(p9()).is_empty() {
            return x;
        }
    }
}

/// Connected regions of up to `n` vertices holding `(0,0)` but not `(0,-2)`,
/// one per mirror pair.
pub fn shapes_up_to(n: usize) -> Vec<Region> {
    use std::collections::BTreeSet;
    let v = LatticeCoord::at(0, 0);
    let w = LatticeCoord::at(0, -2);
    let mut seen: BTreeSet<Vec<(i32, i32)>> = BTreeSet::new();
    let mut out = Vec::new();
    let mut frontier: Vec<BTreeSet<LatticeCoord>> = vec![[v].into_iter().collect()];
    while let Some(s) = frontier.pop() {
        let key: Vec<(i32, i32)> = s.iter().map(|p| (p.x, p.y)).collect();
        let mut mirror: Vec<(i32, i32)> = key.iter().map(|&(x, y)| (-x, y)).collect();
        mirror.sort();
        if seen.contains(&key) || seen.contains(&mirror) {
            continue;
        }
        seen.insert(key);
        out.push(Region::new(s.iter().copied()).unwrap());
        if s.len() == n {
            continue;
        }
        for p in &s {
            for u in p.neighbours() {
                if u != w && !s.contains(&u) {
                    let mut t = s.clone();
                    t.insert(u);
                    frontier.push(t);
                }
            }
        }
    }
    out
}

/// Largest μ over every per-vertex boundary of the shape, without any of the
/// canonical reductions: each boundary vertex other than `w` takes every
/// colour in `0..=q`, and each further edge at `w` every colour that keeps
/// the pair valid. Boundaries with the same forbidden colours at every
/// region vertex are merged as they appear, which cannot change the maximum.
/// Counts are worked out directly, for at most three vertices.
pub fn raw_mu_max(region: &Region, params: Parameters) -> num_rational::BigRational {
    use std::collections::HashSet;
    let v = LatticeCoord::at(0, 0);
    let w = LatticeCoord::at(0, -2);
    let q = params.q as u8;
    let n = region.len();
    assert!(n * params.q() <= 64);
    let vi = region.index_of(v).unwrap();
    let shift = |i: usize, c: u8| 1u64 << (i * params.q() + c as usize - 1);
    let w_in: Vec<LatticeCoord> = w.neighbours().into_iter().filter(|u| region.contains(*u) && *u != v).collect();
    let mut states: HashSet<u64> = HashSet::new();
    let base = q as usize + 1;
    for mut k in 0..base.pow(w_in.len() as u32) {
        let mut b = PartialEdgeColouring::zero(region);
        let mut s = 0u64;
        for u in &w_in {
            let c = (k % base) as u8;
            k /= base;
            b.set(Edge::new(w, *u).unwrap(), c).unwrap();
            if c > 0 {
                s |= shift(region.index_of(*u).unwrap(), c);
            }
        }
        let ex = Edge::new(w, v).unwrap();
        let mut bp = b.clone();
        b.set(ex, 1).unwrap();
        bp.set(ex, 2).unwrap();
        let x = EdgeBoundaryPair {
            region: region.clone(),
            w,
            v,
            b,
            b_prime: bp,
        };
        if x.validate(params).is_empty() {
            states.insert(s);
        }
    }
    for u in region.vertex_boundary() {
        if u == w {
            continue;
        }
        let touches: Vec<usize> = u.neighbours().into_iter().filter_map(|t| region.index_of(t)).collect();
        let mut next = HashSet::with_capacity(states.len() * 4);
        for &s in &states {
            next.insert(s);
            for c in 1..=q {
                next.insert(touches.iter().fold(s, |t, &i| t | shift(i, c)));
            }
        }
        states = next;
    }
    assert!(n <= 3, "direct counting handles at most three vertices");
    let others: Vec<usize> = (0..n).filter(|&i| i != vi).collect();
    let pts: Vec<LatticeCoord> = region.iter().collect();
    let adj = |a: usize, b: usize| pts[a].is_adjacent(pts[b]);
    let full = params.full_mask();
    let (mut best_m, mut best_d) = (0u64, 1u64);
    for s in states {
        let allowed = |i: usize| full & !((s >> (i * params.q())) as u32 & full);
        let mut counts = vec![0u64; q as usize];
        for c in 0..q as u32 {
            if allowed(vi) >> c & 1 == 0 {
                continue;
            }
            let drop = |i: usize| if adj(i, vi) { !(1u32 << c) } else { !0 };
            counts[c as usize] = match others.as_slice() {
                [] => 1,
                [a] => (allowed(*a) & drop(*a)).count_ones() as u64,
                [a, b] => {
                    let ma = allowed(*a) & drop(*a);
                    let mb = allowed(*b) & drop(*b);
                    if adj(*a, *b) {
                        (0..q as u32)
                            .filter(|&d| ma >> d & 1 == 1)
                            .map(|d| (mb & !(1 << d)).count_ones() as u64)
                            .sum()
                    } else {
                        ma.count_ones() as u64 * mb.count_ones() as u64
                    }
                }
                _ => unreachable!(),
            };
        }
        let m = counts[0].max(counts[1]);
        let d = m + counts[2..].iter().sum::<u64>();
        if d > 0 && (m as u128) * (best_d as u128) > (best_m as u128) * (d as u128) {
            best_m = m;
            best_d = d;
        }
    }
    num_rational::BigRational::new(best_m.into(), best_d.into())
}
