//! μ-values of edge-boundary pairs and their maximisation.
//!
//! For a pair with `B(e_X) = a` and `B'(e_X) = b`, let `n_i` count colourings
//! that pin `v_X` to `i` while ignoring `e_X`. Then `Ω = n_a`, `Ω' = n_b`,
//! `Ω_both` is the sum of the rest, and `μ = max / (Ω_both + max)`.

use std::fmt;
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::boundary::{BoundaryShape, CanonicalBoundary, EdgeBoundaryPair};
use crate::colouring::engine::{width_for, Count, EliminationPlan, RegionGraph, Width, Workspace};
use crate::colouring::{count_breakdown, Parameters};
use crate::error::{parse_err, Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MuResult {
    pub value: BigRational,
    pub omega: BigUint,
    pub omega_prime: BigUint,
    pub omega_both: BigUint,
    pub witness: Option<CanonicalBoundary>,
}

impl MuResult {
    pub fn from_counts(omega: BigUint, omega_prime: BigUint, omega_both: BigUint) -> Result<Self> {
        let m = (&omega).max(&omega_prime).clone();
        let den = &m + &omega_both;
        if den.is_zero() {
            return Err(Error::UndefinedMu);
        }
        Ok(MuResult {
            value: BigRational::new(m.into(), den.into()),
            omega,
            omega_prime,
            omega_both,
            witness: None,
        })
    }

    /// The one-line record `<name> mu=.. omega=.. omega'=.. both=.. witness=..`.
    pub fn record(&self, name: &str) -> String {
        let witness = self
            .witness
            .as_ref()
            .map_or_else(|| "-".to_string(), |w| w.to_string());
        format!(
            "{name} mu={} omega={} omega'={} both={} witness={witness}",
            ratio_text(&self.value),
            self.omega,
            self.omega_prime,
            self.omega_both
        )
    }
}

/// `n/d` even when `d = 1`.
pub fn ratio_text(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Exact μ of a pair.
pub fn mu_exact(x: &EdgeBoundaryPair, params: Parameters) -> Result<MuResult> {
    let ex = x.e_x();
    let a = x.b.get(ex).ok_or_else(|| Error::InvalidPair("e_X missing from B".into()))?;
    let b = x
        .b_prime
        .get(ex)
        .ok_or_else(|| Error::InvalidPair("e_X missing from B'".into()))?;
    if a == b || a == 0 || b == 0 {
        return Err(Error::InvalidPair("e_X colours must be distinct and nonzero".into()));
    }
    let mut base = x.b.clone();
    base.set(ex, 0)?;
    let bd = count_breakdown(&x.region, &base, x.v, params)?;
    let omega = bd.n(a as usize).clone();
    let omega_prime = bd.n(b as usize).clone();
    let both = bd.total() - &omega - &omega_prime;
    MuResult::from_counts(omega, omega_prime, both)
}

/// Counts that can be compared as μ-ratios without loss.
pub trait MuCount: Count {
    /// Whether `m1 / (m1 + b1) > m2 / (m2 + b2)`.
    fn beats(m1: &Self, b1: &Self, m2: &Self, b2: &Self) -> bool;
    fn max_of<'a>(a: &'a Self, b: &'a Self) -> &'a Self;
}

impl MuCount for u64 {
    fn beats(m1: &u64, b1: &u64, m2: &u64, b2: &u64) -> bool {
        (*m1 as u128) * (*b2 as u128) > (*m2 as u128) * (*b1 as u128)
    }
    fn max_of<'a>(a: &'a u64, b: &'a u64) -> &'a u64 {
        a.max(b)
    }
}

impl MuCount for u128 {
    fn beats(m1: &u128, b1: &u128, m2: &u128, b2: &u128) -> bool {
        BigUint::from(*m1) * BigUint::from(*b2) > BigUint::from(*m2) * BigUint::from(*b1)
    }
    fn max_of<'a>(a: &'a u128, b: &'a u128) -> &'a u128 {
        a.max(b)
    }
}

impl MuCount for BigUint {
    fn beats(m1: &BigUint, b1: &BigUint, m2: &BigUint, b2: &BigUint) -> bool {
        m1 * b2 > m2 * b1
    }
    fn max_of<'a>(a: &'a BigUint, b: &'a BigUint) -> &'a BigUint {
        a.max(b)
    }
}

struct Best<C> {
    omega: C,
    omega_prime: C,
    both: C,
    witness: CanonicalBoundary,
}

impl<C: MuCount> Best<C> {
    fn m(&self) -> &C {
        C::max_of(&self.omega, &self.omega_prime)
    }

    fn into_result(self) -> Result<MuResult> {
        let mut r = MuResult::from_counts(
            self.omega.to_biguint(),
            self.omega_prime.to_biguint(),
            self.both.to_biguint(),
        )?;
        r.witness = Some(self.witness);
        Ok(r)
    }
}

/// A region with its distinguished pair, compiled for repeated μ evaluation.
pub struct MuSearch {
    pub shape: BoundaryShape,
    plan: EliminationPlan,
    width: Width,
    /// Vertices touched by free slots at positions `>= i`.
    suffix_touch: Vec<u64>,
}

impl MuSearch {
    pub fn new(shape: BoundaryShape) -> Result<Self> {
        let graph = RegionGraph::new(&shape.region);
        let len = shape.region.len();
        let mut priority = vec![0u32; len];
        let mut suffix_touch = vec![0u64; shape.free.len() + 1];
        for (pos, &slot) in shape.free.iter().enumerate().rev() {
            let mut bits = suffix_touch[pos + 1];
            for &t in &shape.slots[slot].touches {
                priority[t] = priority[t].max(pos as u32 + 1);
                bits |= if t < 64 { 1 << t } else { !0 };
            }
            suffix_touch[pos] = bits;
        }
        let plan = EliminationPlan::with_priority(&graph, shape.params.q(), Some(shape.v_index()), &priority)?;
        let width = width_for(len, shape.params.q());
        Ok(MuSearch {
            shape,
            plan,
            width,
            suffix_touch,
        })
    }

    pub fn plan(&self) -> &EliminationPlan {
        &self.plan
    }

    fn eval<C: MuCount>(&self, cb: &CanonicalBoundary, masks: &mut [u32], ws: &mut Workspace<C>) -> (C, C, C) {
        self.shape.masks(cb, masks);
        split_counts(self.plan.evaluate(masks, ws))
    }

    /// μ of one point of the search space (`B(e_X) = 1`, `B'(e_X) = 2`).
    pub fn mu_of(&self, cb: &CanonicalBoundary) -> Result<MuResult> {
        let mut masks = vec![0; self.shape.region.len()];
        let mut ws = self.plan.workspace::<BigUint>();
        let (o, op, b) = self.eval(cb, &mut masks, &mut ws);
        let mut r = MuResult::from_counts(o, op, b)?;
        r.witness = Some(cb.clone());
        Ok(r)
    }

    fn scan<C: MuCount>(&self, prefix: &[u8], first_run_only: bool) -> Option<Best<C>> {
        let len = self.shape.region.len();
        let mut masks = vec![0; len];
        let mut ws = self.plan.workspace::<C>();
        let choices = self.shape.run_choices();
        let choices = if first_run_only { &choices[..1] } else { &choices[..] };
        let mut best: Option<Best<C>> = None;
        for &runs in choices {
            let run_masks = self.shape.run_masks(runs);
            let mut first = true;
            self.shape.visit_free(prefix, |free, fm, changed| {
                for i in 0..len {
                    masks[i] = fm[i] & run_masks[i];
                }
                let dirty = if std::mem::take(&mut first) { !0 } else { self.suffix_touch[changed] };
                let (omega, omega_prime, both) =
                    split_counts(self.plan.evaluate_incremental(&masks, &mut ws, dirty));
                let wins = match &best {
                    None => true,
                    // Strictly larger only: the stream is in increasing order.
                    Some(b) => C::beats(C::max_of(&omega, &omega_prime), &both, b.m(), &b.both),
                };
                if wins {
                    best = Some(Best {
                        omega,
                        omega_prime,
                        both,
                        witness: CanonicalBoundary {
                            runs,
                            free: free.to_vec(),
                        },
                    });
                }
            });
        }
        best
    }

    /// Best canonical boundary among those starting with `prefix`.
    ///
    /// Only the first `{1, 2}` assignment of the `w_X` runs is scanned:
    /// exchanging colours 1 and 2 maps the other assignment onto it and keeps
    /// `max(Ω, Ω')`, and its representatives sort first, so value and witness
    /// agree with a scan of the whole stream.
    pub fn search_prefix(&self, prefix: &[u8]) -> Result<Option<MuResult>> {
        match self.width {
            Width::U64 => self.scan::<u64>(prefix, true).map(Best::into_result).transpose(),
            Width::U128 => self.scan::<u128>(prefix, true).map(Best::into_result).transpose(),
            Width::Big => self.scan::<BigUint>(prefix, true).map(Best::into_result).transpose(),
        }
    }

    /// Maximum over the full stream without the run-swap shortcut. Used to
    /// check the shortcut.
    pub fn search_full_stream(&self) -> Result<MuResult> {
        self.scan::<BigUint>(&[], false)
            .ok_or(Error::UndefinedMu)?
            .into_result()
    }

    /// Prefix length giving enough partitions to keep `workers` busy.
    pub fn partition_depth(&self, workers: usize) -> usize {
        let mut depth = 0;
        while depth < self.shape.free.len() && self.shape.prefixes(depth).len() < 16 * workers.max(1) {
            depth += 1;
        }
        depth
    }

    pub fn mu_max(&self, workers: usize) -> Result<MuResult> {
        let prefixes = self.shape.prefixes(self.partition_depth(workers));
        let run = || -> Result<Vec<Option<MuResult>>> {
            prefixes.par_iter().map(|p| self.search_prefix(p)).collect()
        };
        let parts = if workers <= 1 {
            prefixes
                .iter()
                .map(|p| self.search_prefix(p))
                .collect::<Result<Vec<_>>>()?
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::ResourceCap(e.to_string()))?
                .install(run)?
        };
        reduce(parts.into_iter().flatten()).ok_or(Error::UndefinedMu)
    }
}

fn split_counts<C: MuCount>(n: &[C]) -> (C, C, C) {
    let mut both = C::zero();
    for c in &n[2..] {
        both += c;
    }
    (n[0].clone(), n[1].clone(), both)
}

/// Combines partial maxima: larger μ, then smaller witness.
pub fn reduce<I: IntoIterator<Item = MuResult>>(parts: I) -> Option<MuResult> {
    parts.into_iter().fold(None, |acc: Option<MuResult>, r| match acc {
        None => Some(r),
        Some(a) => {
            if r.value > a.value || (r.value == a.value && r.witness < a.witness) {
                Some(r)
            } else {
                Some(a)
            }
        }
    })
}

pub fn mu_max(shape: BoundaryShape, workers: usize) -> Result<MuResult> {
    MuSearch::new(shape)?.mu_max(workers)
}

impl BoundaryShape {
    /// The canonical representative of an arbitrary point of the space.
    pub fn canonicalize(&self, runs: (u8, u8), free: &[u8]) -> CanonicalBoundary {
        let mut best = free.to_vec();
        self.relabel(&mut best);
        let mut scratch = best.clone();
        let mut stack: Vec<Vec<u8>> = vec![best.clone()];
        // Closure under transpositions inside swap groups reaches the orbit.
        let mut seen = std::collections::BTreeSet::new();
        while let Some(s) = stack.pop() {
            if !seen.insert(s.clone()) {
                continue;
            }
            if s < best {
                best = s.clone();
            }
            for g in &self.swap_groups {
                for i in 0..g.len() {
                    for j in i + 1..g.len() {
                        scratch.copy_from_slice(&s);
                        scratch.swap(g[i], g[j]);
                        self.relabel(&mut scratch);
                        if !seen.contains(&scratch) {
                            stack.push(scratch.clone());
                        }
                    }
                }
            }
        }
        CanonicalBoundary { runs, free: best }
    }
}

/// Randomised local search for a large μ. The value is always attained by
/// some boundary, so it never exceeds the exact maximum.
pub fn mu_hill_climb(search: &MuSearch, seed: u64, restarts: usize, moves_per_restart: usize) -> Result<MuResult> {
    let shape = &search.shape;
    let q = shape.params.q as u8;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let choices = shape.run_choices();
    let mut masks = vec![0; shape.region.len()];
    let mut ws = search.plan.workspace::<BigUint>();
    let mut best: Option<MuResult> = None;
    let value = |o: &BigUint, op: &BigUint, b: &BigUint| {
        let m = o.max(op).clone();
        let d = &m + b;
        if d.is_zero() {
            None
        } else {
            Some(BigRational::new(m.into(), d.into()))
        }
    };
    for _ in 0..restarts.max(1) {
        let mut runs = choices[rng.gen_range(0..choices.len())];
        let mut free: Vec<u8> = (0..shape.free.len()).map(|_| rng.gen_range(0..=q)).collect();
        let cb = CanonicalBoundary {
            runs,
            free: free.clone(),
        };
        let (o, op, b) = search.eval(&cb, &mut masks, &mut ws);
        let mut cur = value(&o, &op, &b);
        let mut cur_counts = (o, op, b);
        for _ in 0..moves_per_restart {
            let slot = rng.gen_range(0..=free.len());
            let mut trial_runs = runs;
            let mut trial = free.clone();
            if slot == free.len() {
                if choices.len() < 2 {
                    continue;
                }
                trial_runs = choices[1 - choices.iter().position(|&c| c == runs).unwrap()];
            } else {
                let old = trial[slot];
                let mut nc = rng.gen_range(0..q);
                if nc >= old {
                    nc += 1;
                }
                trial[slot] = nc;
            }
            let cb = CanonicalBoundary {
                runs: trial_runs,
                free: trial.clone(),
            };
            let (o, op, b) = search.eval(&cb, &mut masks, &mut ws);
            let v = value(&o, &op, &b);
            if v.is_some() && (cur.is_none() || v > cur) {
                cur = v;
                cur_counts = (o, op, b);
                free = trial;
                runs = trial_runs;
            }
        }
        if cur.is_none() {
            continue;
        }
        let mut r = MuResult::from_counts(cur_counts.0, cur_counts.1, cur_counts.2)?;
        r.witness = Some(shape.canonicalize(runs, &free));
        best = reduce(best.into_iter().chain(std::iter::once(r)));
    }
    best.ok_or(Error::UndefinedMu)
}

/// Table of μ-values with the region file each belongs to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MuTable {
    pub entries: Vec<MuEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MuEntry {
    pub index: usize,
    pub value: BigRational,
    pub region_file: PathBuf,
}

pub(crate) fn parse_ratio(tok: &str, line: usize) -> Result<BigRational> {
    let (n, d) = tok
        .split_once('/')
        .ok_or_else(|| parse_err(line, format!("expected n/d, got `{tok}`")))?;
    let n: BigUint = n
        .parse()
        .map_err(|_| parse_err(line, format!("bad numerator `{n}`")))?;
    let d: BigUint = d
        .parse()
        .map_err(|_| parse_err(line, format!("bad denominator `{d}`")))?;
    if d.is_zero() {
        return Err(parse_err(line, "zero denominator"));
    }
    Ok(BigRational::new(n.into(), d.into()))
}

impl MuTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = crate::lattice::strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(parse_err(ln, "expected `M<i> <num>/<den> <region-file>`"));
            }
            let index: usize = toks[0]
                .strip_prefix('M')
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| parse_err(ln, format!("bad label `{}`", toks[0])))?;
            entries.push(MuEntry {
                index,
                value: parse_ratio(toks[1], ln)?,
                region_file: PathBuf::from(toks[2]),
            });
        }
        for (k, e) in entries.iter().enumerate() {
            if e.index != k + 1 {
                return Err(Error::MalformedTable(format!("entry {} labelled M{}", k + 1, e.index)));
            }
        }
        Ok(MuTable { entries })
    }

    /// The table shipped with the crate.
    pub fn shipped() -> Self {
        MuTable::parse(include_str!("../data/mu_table.txt")).expect("shipped table parses")
    }

    pub fn mu(&self, i: usize) -> &BigRational {
        &self.entries[i - 1].value
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("M{} {} {}\n", e.index, ratio_text(&e.value), e.region_file.display()))
            .collect()
    }

    /// Region file paths resolved against `base`.
    pub fn region_path(&self, i: usize, base: &Path) -> PathBuf {
        base.join(&self.entries[i - 1].region_file)
    }
}

impl fmt::Display for MuTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
