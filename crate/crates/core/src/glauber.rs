//! Glauber dynamics on the colourings of a region that agree with a fixed
//! boundary, plus exact small-state analysis and a sampling-based counter.
//!
//! A boundary colour `0` excludes nothing. The default update recolours a
//! uniform vertex with a uniform colour from those its neighbours leave
//! available; [`Update::Rejection`] instead proposes a uniform colour from
//! `1..=q` and keeps the old one if the proposal clashes.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::colouring::{Colouring, Parameters, PartialVertexColouring};
use crate::error::{Error, Result};
use crate::lattice::Region;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Update {
    #[default]
    HeatBath,
    Rejection,
}

/// Region, boundary and colour count; the chain itself lives in [`Chain`].
#[derive(Clone, Debug)]
pub struct ChainConfig {
    pub region: Region,
    pub boundary: PartialVertexColouring,
    pub params: Parameters,
    pub update: Update,
}

impl ChainConfig {
    pub fn new(region: Region, boundary: PartialVertexColouring, params: Parameters) -> Self {
        ChainConfig {
            region,
            boundary,
            params,
            update: Update::HeatBath,
        }
    }

    /// All-zero boundary.
    pub fn free(region: Region, params: Parameters) -> Self {
        let boundary = PartialVertexColouring::zero(&region);
        ChainConfig::new(region, boundary, params)
    }
}

/// Colours in region index order, and the number of steps taken.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ChainState {
    pub colours: Vec<u8>,
    pub step: u64,
}

/// Precomputed neighbourhoods and boundary masks for one configuration.
#[derive(Clone, Debug)]
pub struct Chain {
    pub params: Parameters,
    pub update: Update,
    masks: Vec<u32>,
    adj: Vec<Vec<usize>>,
    /// Vertices the chain may recolour.
    movable: Vec<usize>,
}

impl Chain {
    pub fn new(cfg: &ChainConfig) -> Result<Self> {
        let masks = cfg.boundary.allowed_masks(&cfg.region, cfg.params)?;
        Ok(Self::from_masks(&cfg.region, masks, cfg.params, cfg.update))
    }

    fn from_masks(region: &Region, masks: Vec<u32>, params: Parameters, update: Update) -> Self {
        let mut adj = vec![Vec::new(); region.len()];
        for (u, w) in region.internal_edges() {
            let (a, b) = (region.index_of(u).unwrap(), region.index_of(w).unwrap());
            adj[a].push(b);
            adj[b].push(a);
        }
        let movable = (0..region.len()).filter(|&i| masks[i].count_ones() > 1).collect();
        Chain {
            params,
            update,
            masks,
            adj,
            movable,
        }
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// Colours still open to vertex `i` given the rest of the state.
    fn available(&self, colours: &[u8], i: usize) -> u32 {
        let mut m = self.masks[i];
        for &j in &self.adj[i] {
            m &= !(1 << (colours[j] - 1));
        }
        m
    }

    pub fn is_valid(&self, colours: &[u8]) -> bool {
        colours.len() == self.len()
            && (0..self.len()).all(|i| {
                colours[i] >= 1 && self.masks[i] >> (colours[i] - 1) & 1 == 1 && self.adj[i].iter().all(|&j| colours[j] != colours[i])
            })
    }

    /// Least valid state in index order (first-fit with backtracking).
    pub fn first_state(&self) -> Result<ChainState> {
        let n = self.len();
        let mut col = vec![0u8; n];
        let mut i = 0;
        while i < n {
            let mut next = None;
            for c in col[i] + 1..=self.params.q as u8 {
                let ok = self.masks[i] >> (c - 1) & 1 == 1 && self.adj[i].iter().all(|&j| j >= i || col[j] != c);
                if ok {
                    next = Some(c);
                    break;
                }
            }
            match next {
                Some(c) => {
                    col[i] = c;
                    i += 1;
                }
                None => {
                    col[i] = 0;
                    if i == 0 {
                        return Err(Error::NoValidColouring);
                    }
                    i -= 1;
                }
            }
        }
        Ok(ChainState { colours: col, step: 0 })
    }

    pub fn step<R: Rng>(&self, s: &mut ChainState, rng: &mut R) {
        s.step += 1;
        if self.movable.is_empty() {
            return;
        }
        let i = self.movable[rng.gen_range(0..self.movable.len())];
        let avail = self.available(&s.colours, i);
        match self.update {
            Update::HeatBath => {
                let k = rng.gen_range(0..avail.count_ones());
                s.colours[i] = nth_bit(avail, k) as u8 + 1;
            }
            Update::Rejection => {
                let c = rng.gen_range(1..=self.params.q as u8);
                if avail >> (c - 1) & 1 == 1 {
                    s.colours[i] = c;
                }
            }
        }
        debug_assert!(self.is_valid(&s.colours));
    }

    pub fn run<R: Rng>(&self, s: &mut ChainState, steps: u64, rng: &mut R) {
        for _ in 0..steps {
            self.step(s, rng);
        }
    }

    /// Every valid state in lexicographic order, or an error past `cap`.
    pub fn states(&self, cap: usize) -> Result<Vec<Vec<u8>>> {
        let mut out = Vec::new();
        let mut col = vec![0u8; self.len()];
        self.enumerate(0, &mut col, &mut out, cap)?;
        Ok(out)
    }

    fn enumerate(&self, i: usize, col: &mut Vec<u8>, out: &mut Vec<Vec<u8>>, cap: usize) -> Result<()> {
        if i == col.len() {
            if out.len() == cap {
                return Err(Error::StateSpaceTooLarge { cap, len: cap + 1 });
            }
            out.push(col.clone());
            return Ok(());
        }
        for c in 1..=self.params.q as u8 {
            if self.masks[i] >> (c - 1) & 1 == 1 && self.adj[i].iter().all(|&j| j >= i || col[j] != c) {
                col[i] = c;
                self.enumerate(i + 1, col, out, cap)?;
            }
        }
        col[i] = 0;
        Ok(())
    }
}

fn nth_bit(mut m: u32, k: u32) -> u32 {
    for _ in 0..k {
        m &= m - 1;
    }
    m.trailing_zeros()
}

impl ChainState {
    pub fn colouring(&self, region: &Region) -> Colouring {
        Colouring::from_indexed(region, &self.colours)
    }
}

pub const DEFAULT_STATE_CAP: usize = 5000;

/// Exact transition probabilities, stored by row as `(column, p)`.
#[derive(Clone, Debug)]
pub struct TransitionMatrix {
    pub states: Vec<Vec<u8>>,
    pub rows: Vec<Vec<(usize, BigRational)>>,
}

pub fn exact_transition_matrix(cfg: &ChainConfig, cap: usize) -> Result<TransitionMatrix> {
    let chain = Chain::new(cfg)?;
    let states = chain.states(cap)?;
    let index: HashMap<&[u8], usize> = states.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let q = chain.params.q as i64;
    let pick = BigRational::new(BigInt::one(), BigInt::from(chain.movable.len().max(1)));
    let mut rows = Vec::with_capacity(states.len());
    for (si, s) in states.iter().enumerate() {
        let mut row: HashMap<usize, BigRational> = HashMap::new();
        if chain.movable.is_empty() {
            row.insert(si, BigRational::one());
        }
        for &i in &chain.movable {
            let avail = chain.available(s, i);
            let per = match chain.update {
                Update::HeatBath => &pick / BigRational::from_integer(avail.count_ones().into()),
                Update::Rejection => &pick / BigRational::from_integer(q.into()),
            };
            let mut t = s.clone();
            for c in 1..=chain.params.q as u8 {
                if avail >> (c - 1) & 1 == 1 {
                    t[i] = c;
                    *row.entry(index[t.as_slice()]).or_insert_with(BigRational::zero) += &per;
                }
            }
            if chain.update == Update::Rejection {
                let stay = BigRational::from_integer((q - avail.count_ones() as i64).into()) * (&pick / BigRational::from_integer(q.into()));
                *row.entry(si).or_insert_with(BigRational::zero) += stay;
            }
        }
        let mut row: Vec<(usize, BigRational)> = row.into_iter().collect();
        row.sort_by_key(|(j, _)| *j);
        rows.push(row);
    }
    Ok(TransitionMatrix { states, rows })
}

impl TransitionMatrix {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn rows_sum_to_one(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.iter().fold(BigRational::zero(), |s, (_, p)| s + p).is_one())
    }

    /// `π P` for a distribution `π`, exactly.
    pub fn apply(&self, pi: &[BigRational]) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); self.len()];
        for (i, row) in self.rows.iter().enumerate() {
            if pi[i].is_zero() {
                continue;
            }
            for (j, p) in row {
                out[*j] += &pi[i] * p;
            }
        }
        out
    }

    pub fn uniform_is_stationary(&self) -> bool {
        let u = vec![BigRational::new(BigInt::one(), BigInt::from(self.len())); self.len()];
        self.apply(&u) == u
    }

    pub fn has_positive_diagonal(&self) -> bool {
        self.rows
            .iter()
            .enumerate()
            .all(|(i, r)| r.iter().any(|(j, p)| *j == i && !p.is_zero()))
    }

    /// Strongly connected: everything reachable from state 0, and state 0
    /// reachable from everything (the chain is reversible, so the first
    /// implies the second, but both are checked).
    pub fn is_irreducible(&self) -> bool {
        let n = self.len();
        let reach = |forward: bool| {
            let mut rev = vec![Vec::new(); n];
            if !forward {
                for (i, r) in self.rows.iter().enumerate() {
                    for (j, _) in r {
                        rev[*j].push(i);
                    }
                }
            }
            let mut seen = vec![false; n];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                let next: Vec<usize> = if forward {
                    self.rows[i].iter().map(|(j, _)| *j).collect()
                } else {
                    rev[i].clone()
                };
                for j in next {
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        n > 0 && reach(true) && reach(false)
    }

    /// TV distance to uniform after `0..=steps` steps from state `start`, in
    /// floating point.
    pub fn tv_curve(&self, start: usize, steps: usize) -> Vec<f64> {
        let n = self.len();
        let rows: Vec<Vec<(usize, f64)>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|(j, p)| (*j, to_f64(p))).collect())
            .collect();
        let mut pi = vec![0.0; n];
        pi[start] = 1.0;
        let mut out = Vec::with_capacity(steps + 1);
        for t in 0..=steps {
            out.push(tv_to_uniform(&pi));
            if t == steps {
                break;
            }
            let mut next = vec![0.0; n];
            for (i, r) in rows.iter().enumerate() {
                for (j, p) in r {
                    next[*j] += pi[i] * p;
                }
            }
            pi = next;
        }
        out
    }
}

fn to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

fn tv_to_uniform(p: &[f64]) -> f64 {
    let u = 1.0 / p.len() as f64;
    0.5 * p.iter().map(|x| (x - u).abs()).sum::<f64>()
}

/// One point of an empirical decay curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TvPoint {
    pub step: u64,
    /// Worst of the two starting states.
    pub tv: f64,
    /// Running minimum of `tv`; TV to stationarity never increases.
    pub smoothed: f64,
    /// Rough 95% half-width of the sampling error.
    pub half_width: f64,
    /// Expected empirical TV of `trials` exact uniform draws, the floor the
    /// curve settles to.
    pub noise_floor: f64,
}

/// Empirical TV to uniform from the first and last states in lexicographic
/// order, over `trials` independent runs, at steps `0..=steps`.
pub fn tv_decay(cfg: &ChainConfig, trials: usize, steps: u64, seed: u64) -> Result<Vec<TvPoint>> {
    let chain = Chain::new(cfg)?;
    let states = chain.states(DEFAULT_STATE_CAP)?;
    let index: HashMap<&[u8], usize> = states.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let n = states.len();
    let starts = [0, n - 1];
    let mut hist = vec![vec![vec![0u32; n]; steps as usize + 1]; 2];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (k, &start) in starts.iter().enumerate() {
        for _ in 0..trials {
            let mut s = ChainState {
                colours: states[start].clone(),
                step: 0,
            };
            hist[k][0][start] += 1;
            for t in 1..=steps as usize {
                chain.step(&mut s, &mut rng);
                hist[k][t][index[s.colours.as_slice()]] += 1;
            }
        }
    }
    let u = 1.0 / n as f64;
    let noise_floor = 0.5 * n as f64 * (2.0 * u * (1.0 - u) / (std::f64::consts::PI * trials as f64)).sqrt();
    let mut out = Vec::new();
    let mut best = f64::INFINITY;
    for t in 0..=steps as usize {
        let mut tv: f64 = 0.0;
        let mut hw: f64 = 0.0;
        for h in &hist {
            let p: Vec<f64> = h[t].iter().map(|&c| c as f64 / trials as f64).collect();
            tv = tv.max(tv_to_uniform(&p));
            let var: f64 = p.iter().map(|x| x * (1.0 - x) / trials as f64).sum();
            hw = hw.max(1.96 * 0.5 * (n as f64 * var).sqrt());
        }
        best = best.min(tv);
        out.push(TvPoint {
            step: t as u64,
            tv,
            smoothed: best,
            half_width: hw,
            noise_floor,
        });
    }
    Ok(out)
}

/// Result of [`approx_count`]. Not a rigorous bound: the interval only
/// accounts for sampling error, treating the chain as mixed.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxCount {
    pub estimate: f64,
    pub low: f64,
    pub high: f64,
    /// Estimated marginal probability of each pin, in pinning order.
    pub factors: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxOptions {
    pub samples_per_factor: usize,
    /// Steps between samples; `None` means `10 n^2`.
    pub burn_in: Option<u64>,
    /// Normal quantile for the per-factor intervals.
    pub z: f64,
    pub seed: u64,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        ApproxOptions {
            samples_per_factor: 10_000,
            burn_in: None,
            z: 1.96,
            seed: 0,
        }
    }
}

/// Wilson score interval for a binomial proportion.
fn wilson(hits: usize, n: usize, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = hits as f64 / n;
    let den = 1.0 + z * z / n;
    let mid = (p + z * z / (2.0 * n)) / den;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / den;
    ((mid - half).max(0.0), (mid + half).min(1.0))
}

/// Telescoping estimate of the number of agreeing colourings: pin the
/// vertices one at a time to a sampled colour and multiply the inverse pin
/// probabilities.
pub fn approx_count(cfg: &ChainConfig, opts: ApproxOptions) -> Result<ApproxCount> {
    let base = Chain::new(cfg)?;
    let n = base.len();
    let gap = opts.burn_in.unwrap_or(10 * (n as u64).pow(2)).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut masks = base.masks.clone();
    let mut state = base.first_state()?;
    let mut factors = Vec::with_capacity(n);
    let (mut est, mut low, mut high) = (1.0f64, 1.0f64, 1.0f64);
    for i in 0..n {
        let chain = Chain::from_masks(&cfg.region, masks.clone(), base.params, base.update);
        chain.run(&mut state, gap, &mut rng);
        // Pin to the colour seen after burn-in; choosing the most frequent
        // colour of the same samples would bias the estimate.
        let c = state.colours[i] as usize - 1;
        let mut hits = 0;
        for _ in 0..opts.samples_per_factor {
            chain.run(&mut state, gap, &mut rng);
            hits += usize::from(state.colours[i] as usize - 1 == c);
        }
        if hits == 0 {
            return Err(Error::NoValidColouring);
        }
        let p = hits as f64 / opts.samples_per_factor as f64;
        let (lo, hi) = wilson(hits, opts.samples_per_factor, opts.z);
        factors.push(p);
        est /= p;
        low /= hi;
        high /= lo;
        masks[i] = 1 << c;
        state.colours[i] = c as u8 + 1;
        let pinned = Chain::from_masks(&cfg.region, masks.clone(), base.params, base.update);
        if !pinned.is_valid(&state.colours) {
            // The pin clashes with the current neighbours; restart from a
            // valid state of the pinned chain.
            state = pinned.first_state()?;
        }
    }
    Ok(ApproxCount {
        estimate: est,
        low,
        high,
        factors,
    })
}
