//! The decay certificate: subregions of `F` and `G`, the map Φ, the
//! α-inequalities, a feasibility search for them and their exact check.
//!
//! All geometry is data. `F`, `G`, the six placements of `F` inside `G` and
//! the `M`-regions are read from region files and moved into one frame, with
//! `v = (0, 0)` and `w = (0, -2)`, before anything is compared.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{parse_err, Error, Result};
use crate::lattice::{strip_comment, LatticeCoord, Region, RegionFile, Symmetry};
use crate::mu::{parse_ratio, ratio_text, MuTable};

const ORIGIN: LatticeCoord = LatticeCoord::at(0, 0);
const BELOW: LatticeCoord = LatticeCoord::at(0, -2);

/// Rotation and translation taking `v` to the origin and `w` to `(0, -2)`.
fn frame(v: LatticeCoord, w: LatticeCoord) -> Result<impl Fn(LatticeCoord) -> LatticeCoord> {
    let d = v
        .direction_to(w)
        .ok_or_else(|| Error::Geometry(format!("{w} is not a neighbour of {v}")))?;
    let s = Symmetry::Rotation(((9 - d) % 6) as u8);
    Ok(move |p: LatticeCoord| {
        let q = s.apply(p, v);
        q.offset(-v.x, -v.y)
    })
}

/// A region file with its distinguished pair, moved into the common frame.
/// `labels` are the listed vertices other than `v`, in file order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelledRegion {
    pub region: Region,
    pub labels: Vec<LatticeCoord>,
    pub source: String,
}

impl LabelledRegion {
    pub fn parse(text: &str) -> Result<Self> {
        let file = RegionFile::parse(text)?;
        let (v, w) = match (file.distinguished_v, file.distinguished_w) {
            (Some(v), Some(w)) => (v, w),
            _ => return Err(Error::Geometry("region file needs distinguished_v and distinguished_w".into())),
        };
        if !file.region.contains(v) || file.region.contains(w) {
            return Err(Error::Geometry("v must be inside the region and w outside".into()));
        }
        let map = frame(v, w)?;
        let labels: Vec<LatticeCoord> = file.order.iter().filter(|&&p| p != v).map(|&p| map(p)).collect();
        Ok(LabelledRegion {
            region: Region::new(file.order.iter().map(|&p| map(p)))?,
            labels,
            source: text.to_string(),
        })
    }
}

/// A subregion of `F` containing `v_F`, as a bit string over the labels of
/// `F`. Label `i` is character `i` of the string, and the index is the string
/// read in binary plus one, so `{v_F}` is 1 and `F` itself is `2^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FCode {
    pub bits: u32,
    pub width: u8,
}

impl FCode {
    pub fn from_index(index: u32, width: u8) -> Result<Self> {
        if index == 0 || index > 1 << width {
            return Err(Error::MalformedTable(format!("F-code index {index} outside 1..={}", 1u32 << width)));
        }
        Ok(FCode { bits: index - 1, width })
    }

    pub fn index(self) -> u32 {
        self.bits + 1
    }

    pub fn has(self, label: usize) -> bool {
        self.bits >> (self.width as usize - 1 - label) & 1 == 1
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s.is_empty() || s.len() > 16 || !s.chars().all(|c| c == '0' || c == '1') {
            return Err(Error::MalformedTable(format!("bad F-code `{s}`")));
        }
        Ok(FCode {
            bits: u32::from_str_radix(s, 2).unwrap(),
            width: s.len() as u8,
        })
    }
}

impl fmt::Display for FCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:0width$b}", self.bits, width = self.width as usize)
    }
}

/// A placement of `F` in `G`: the images of `v_F` and `w_F`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Placement {
    pub name: String,
    pub v: LatticeCoord,
    pub w: LatticeCoord,
}

impl Placement {
    /// The orientation-preserving map with `v_F -> v` and `w_F -> w`.
    pub fn map(&self, p: LatticeCoord) -> Result<LatticeCoord> {
        let d = self
            .v
            .direction_to(self.w)
            .ok_or_else(|| Error::Geometry(format!("placement {}: images not adjacent", self.name)))?;
        let s = Symmetry::Rotation(((d + 3) % 6) as u8);
        Ok(s.apply(p, ORIGIN).offset(self.v.x, self.v.y))
    }
}

pub fn parse_placements(text: &str) -> Result<Vec<Placement>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 6 || toks[0] != "placement" {
            return Err(parse_err(ln, "expected `placement <name> vx vy wx wy`"));
        }
        let num = |k: usize| -> Result<i32> {
            toks[k]
                .parse()
                .map_err(|_| parse_err(ln, format!("bad integer `{}`", toks[k])))
        };
        let v = LatticeCoord::new(num(2)?, num(3)?).map_err(|e| parse_err(ln, e.to_string()))?;
        let w = LatticeCoord::new(num(4)?, num(5)?).map_err(|e| parse_err(ln, e.to_string()))?;
        out.push(Placement {
            name: toks[1].to_string(),
            v,
            w,
        });
    }
    Ok(out)
}

/// A subregion of `G` as a bit mask over the labels of `G` (bit `i` is label `i`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GSubregion(pub u32);

#[derive(Clone, Debug)]
struct PlacedF {
    /// Label of the image of `v_F` in `G`; `None` when it is `v_G`.
    anchor: Option<usize>,
    /// For every `F` label, the `G` label it lands on (`None` on `w_G`).
    labels: Vec<Option<usize>>,
}

/// Everything Φ needs, in the common frame.
#[derive(Clone, Debug)]
pub struct Geometry {
    pub f: LabelledRegion,
    pub g: LabelledRegion,
    pub placements: Vec<Placement>,
    pub m: Vec<LabelledRegion>,
    placed: Vec<PlacedF>,
    /// Per M-region, its masks in `G` (the region and its mirror image).
    m_masks: Vec<Vec<u32>>,
    /// `G` labels of the neighbours of `w_G`.
    w_mask: u32,
    /// `G` label of `v_G`, if it carries one.
    v_label: Option<usize>,
    sources: Vec<(String, String)>,
}

impl Geometry {
    /// `m_files` are `(name, text)` in M-index order.
    pub fn new(f_text: &str, g_text: &str, placements_text: &str, m_files: &[(String, String)]) -> Result<Self> {
        let f = LabelledRegion::parse(f_text)?;
        let g = LabelledRegion::parse(g_text)?;
        if g.labels.len() > 31 || f.labels.len() > 16 {
            return Err(Error::Geometry("too many labels".into()));
        }
        let g_label = |p: LatticeCoord| g.labels.iter().position(|&q| q == p);
        let v_label = g_label(ORIGIN);
        let mut w_mask = 0;
        for n in BELOW.neighbours() {
            if n == ORIGIN {
                continue;
            }
            match g_label(n) {
                Some(i) => w_mask |= 1 << i,
                None => return Err(Error::Geometry(format!("neighbour {n} of w_G is not in G"))),
            }
        }
        let placements = parse_placements(placements_text)?;
        if placements.len() != 6 {
            return Err(Error::Geometry(format!("expected 6 placements, got {}", placements.len())));
        }
        if placements[0].v != ORIGIN || placements[0].w != BELOW {
            return Err(Error::Geometry("the first placement must put v_F on v_G and w_F on w_G".into()));
        }
        let mut placed = Vec::new();
        for p in &placements {
            let anchor_at = p.map(ORIGIN)?;
            let anchor = if anchor_at == ORIGIN {
                None
            } else {
                Some(g_label(anchor_at).ok_or_else(|| {
                    Error::Geometry(format!("placement {}: v_F lands outside G", p.name))
                })?)
            };
            let mut labels = Vec::new();
            for &q in &f.labels {
                let at = p.map(q)?;
                if at == BELOW {
                    labels.push(None);
                } else {
                    let l = g_label(at).ok_or_else(|| {
                        Error::Geometry(format!("placement {}: F vertex {q} lands on {at}, outside G", p.name))
                    })?;
                    labels.push(Some(l));
                }
            }
            placed.push(PlacedF { anchor, labels });
        }
        let mut m = Vec::new();
        let mut m_masks = Vec::new();
        for (name, text) in m_files {
            let r = LabelledRegion::parse(text).map_err(|e| Error::Geometry(format!("{name}: {e}")))?;
            let mut masks = Vec::new();
            for mirror in [false, true] {
                let mut mask = 0u32;
                let mut inside = true;
                for p in r.region.iter() {
                    let p = if mirror { LatticeCoord::at(-p.x, p.y) } else { p };
                    if p == ORIGIN && v_label.is_none() {
                        continue;
                    }
                    match g_label(p) {
                        Some(i) => mask |= 1 << i,
                        None => inside = false,
                    }
                }
                if inside && !masks.contains(&mask) {
                    masks.push(mask);
                }
            }
            if masks.is_empty() {
                return Err(Error::Geometry(format!("{name} does not fit in G")));
            }
            m.push(r);
            m_masks.push(masks);
        }
        let mut sources = vec![
            ("F.region".to_string(), f_text.to_string()),
            ("G.region".to_string(), g_text.to_string()),
            ("placements.txt".to_string(), placements_text.to_string()),
        ];
        sources.extend(m_files.iter().cloned());
        Ok(Geometry {
            f,
            g,
            placements,
            m,
            placed,
            m_masks,
            w_mask,
            v_label,
            sources,
        })
    }

    /// Reads `F.region`, `G.region`, `placements.txt` and the M-region files
    /// named by the table from `dir`.
    pub fn load(dir: &Path, table: &MuTable) -> Result<Self> {
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())));
        let f = read(&dir.join("regions/F.region"))?;
        let g = read(&dir.join("regions/G.region"))?;
        let pl = read(&dir.join("regions/placements.txt"))?;
        let mut ms = Vec::new();
        for e in &table.entries {
            let p = dir.join(&e.region_file);
            ms.push((e.region_file.display().to_string(), read(&p)?));
        }
        Geometry::new(&f, &g, &pl, &ms)
    }

    /// The reconstructed geometry shipped in `data/`.
    pub fn shipped() -> Self {
        Geometry::new(
            shipped::F,
            shipped::G,
            shipped::PLACEMENTS,
            &shipped::M
                .iter()
                .enumerate()
                .map(|(i, t)| (format!("regions/M{:02}.region", i + 1), t.to_string()))
                .collect::<Vec<_>>(),
        )
        .expect("shipped geometry is consistent")
    }

    pub fn f_width(&self) -> u8 {
        self.f.labels.len() as u8
    }

    pub fn g_width(&self) -> usize {
        self.g.labels.len()
    }

    /// `(name, sha256)` for every geometry input.
    pub fn hashes(&self) -> Vec<(String, String)> {
        self.sources.iter().map(|(n, t)| (n.clone(), sha256(t))).collect()
    }

    /// Whether a pattern over the `G` labels is in the family: `v_G` present
    /// and some neighbour of `w_G` missing.
    pub fn in_family(&self, g: GSubregion) -> bool {
        let has_v = self.v_label.map_or(true, |l| g.0 >> l & 1 == 1);
        has_v && g.0 & self.w_mask != self.w_mask
    }

    /// All members of the family, in counter order.
    pub fn enumerate_g(&self) -> impl Iterator<Item = GSubregion> + '_ {
        (0..1u32 << self.g_width())
            .map(GSubregion)
            .filter(move |&g| self.in_family(g))
    }

    pub fn g_region(&self, g: GSubregion) -> Region {
        let mut pts: Vec<LatticeCoord> = (0..self.g_width())
            .filter(|&i| g.0 >> i & 1 == 1)
            .map(|i| self.g.labels[i])
            .collect();
        if self.v_label.is_none() {
            pts.push(ORIGIN);
        }
        Region::new(pts).expect("v_G is present")
    }

    /// Code of a subregion of `F` given in the common frame.
    pub fn f_code(&self, s: &Region) -> Result<FCode> {
        if !s.contains(ORIGIN) {
            return Err(Error::Geometry("subregion of F must contain v_F".into()));
        }
        let width = self.f_width();
        let mut bits = 0;
        for p in s.iter() {
            if p == ORIGIN {
                continue;
            }
            let i = self
                .f
                .labels
                .iter()
                .position(|&q| q == p)
                .ok_or_else(|| Error::Geometry(format!("{p} is not a vertex of F")))?;
            bits |= 1 << (width as usize - 1 - i);
        }
        Ok(FCode { bits, width })
    }

    pub fn f_decode(&self, code: FCode) -> Region {
        let pts = std::iter::once(ORIGIN).chain(
            (0..self.f.labels.len())
                .filter(|&i| code.has(i))
                .map(|i| self.f.labels[i]),
        );
        Region::new(pts).expect("contains v_F")
    }

    /// Φ of a member of the family.
    pub fn phi(&self, table: &MuTable, g: GSubregion) -> Result<PhiResult> {
        let mut best: Option<usize> = None;
        for (i, masks) in self.m_masks.iter().enumerate() {
            if masks.iter().any(|&m| m & g.0 == m) {
                let better = match best {
                    None => true,
                    Some(j) => table.mu(i + 1) < table.mu(j + 1),
                };
                if better {
                    best = Some(i);
                }
            }
        }
        let m = best.ok_or_else(|| Error::Geometry("no M-region embeds".into()))? + 1;
        let mut b = [0u32; 6];
        let width = self.f_width();
        for (k, p) in self.placed.iter().enumerate() {
            if let Some(a) = p.anchor {
                if g.0 >> a & 1 == 0 {
                    continue;
                }
            }
            let mut bits = 0;
            for (j, l) in p.labels.iter().enumerate() {
                if let Some(l) = l {
                    if g.0 >> l & 1 == 1 {
                        bits |= 1 << (width as usize - 1 - j);
                    }
                }
            }
            b[k] = FCode { bits, width }.index();
        }
        Ok(PhiResult { m, b })
    }
}

mod shipped {
    pub const F: &str = include_str!("../data/regions/F.region");
    pub const G: &str = include_str!("../data/regions/G.region");
    pub const PLACEMENTS: &str = include_str!("../data/regions/placements.txt");
    pub const CONSTANTS: &str = include_str!("../data/constants.txt");
    macro_rules! m_files {
        ($($n:literal),*) => { [$(include_str!(concat!("../data/regions/M", $n, ".region"))),*] };
    }
    pub const M: [&str; 39] = m_files!(
        "01", "02", "03", "04", "05", "06", "07", "08", "09", "10", "11", "12", "13", "14", "15", "16", "17", "18",
        "19", "20", "21", "22", "23", "24", "25", "26", "27", "28", "29", "30", "31", "32", "33", "34", "35", "36",
        "37", "38", "39"
    );
}

pub fn sha256(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhiResult {
    pub m: usize,
    pub b: [u32; 6],
}

/// One distinct inequality `μ_m (α_b1 + .. + α_b5) <= (1 - ε) α_b0`, with the
/// number of family members that produce it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Inequality {
    pub phi: PhiResult,
    pub multiplicity: u64,
}

/// Φ of every family member, in counter order.
pub fn phi_all(geo: &Geometry, table: &MuTable) -> Result<Vec<(GSubregion, PhiResult)>> {
    let all: Vec<GSubregion> = geo.enumerate_g().collect();
    all.par_iter().map(|&g| Ok((g, geo.phi(table, g)?))).collect()
}

pub fn generate_inequalities(geo: &Geometry, table: &MuTable) -> Result<Vec<Inequality>> {
    let mut counts: BTreeMap<PhiResult, u64> = BTreeMap::new();
    for (_, phi) in phi_all(geo, table)? {
        *counts.entry(phi).or_default() += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(phi, multiplicity)| Inequality { phi, multiplicity })
        .collect())
}

fn one_minus(eps: &BigRational) -> BigRational {
    BigRational::one() - eps
}

pub fn check_eps(eps: &BigRational) -> Result<()> {
    if eps <= &BigRational::zero() || eps >= &BigRational::one() {
        return Err(Error::EpsilonOutOfRange);
    }
    Ok(())
}

/// Plain-text linear program: one variable `a<i>` per nonzero F-code, box
/// bounds, one constraint per distinct inequality.
pub fn export_lp(ineqs: &[Inequality], table: &MuTable, eps: &BigRational, width: u8, bounds: (u32, u32)) -> String {
    let n = 1u32 << width;
    let mut s = String::new();
    s.push_str("\\ alpha feasibility: any feasible point is a candidate certificate\n");
    s.push_str(&format!("\\ eps = {}\n", ratio_text(eps)));
    s.push_str("minimize\n obj: 0\nsubject to\n");
    let factor = ratio_text(&one_minus(eps));
    for (k, q) in ineqs.iter().enumerate() {
        let terms: Vec<String> = q.phi.b[1..].iter().filter(|&&b| b != 0).map(|b| format!("a{b}")).collect();
        let lhs = if terms.is_empty() {
            "0".to_string()
        } else {
            format!("{} * ({})", ratio_text(table.mu(q.phi.m)), terms.join(" + "))
        };
        s.push_str(&format!(" c{}: {} - {} * a{} <= 0\n", k + 1, lhs, factor, q.phi.b[0]));
    }
    s.push_str("bounds\n");
    for i in 1..=n {
        s.push_str(&format!(" {} <= a{} <= {}\n", bounds.0, i, bounds.1));
    }
    s.push_str("end\n");
    s
}

/// α-values indexed by F-code index; entry 0 is `α_0 = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlphaTable {
    pub width: u8,
    pub values: Vec<BigRational>,
}

impl AlphaTable {
    pub fn get(&self, b: u32) -> &BigRational {
        &self.values[b as usize]
    }

    /// The constants that ship with the crate (solved at ε = 1/1000).
    pub fn shipped() -> Self {
        Self::parse(shipped::CONSTANTS).expect("shipped constants parse")
    }

    /// Lines `<bit-string> <num>/<den>`; every code exactly once.
    pub fn parse(text: &str) -> Result<Self> {
        let mut found: BTreeMap<u32, BigRational> = BTreeMap::new();
        let mut width = None;
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(parse_err(ln, "expected `<bits> <num>/<den>`"));
            }
            let code = FCode::parse(toks[0]).map_err(|e| parse_err(ln, e.to_string()))?;
            if *width.get_or_insert(code.width) != code.width {
                return Err(parse_err(ln, "codes of different lengths"));
            }
            if found.insert(code.index(), parse_ratio(toks[1], ln)?).is_some() {
                return Err(parse_err(ln, format!("code {} listed twice", toks[0])));
            }
        }
        let width = width.ok_or_else(|| Error::MalformedTable("empty constants file".into()))?;
        let n = 1u32 << width;
        if found.len() != n as usize {
            return Err(Error::MalformedTable(format!("expected {n} constants, found {}", found.len())));
        }
        let mut values = vec![BigRational::zero()];
        values.extend(found.into_values());
        Ok(AlphaTable { width, values })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (b, v) in self.values.iter().enumerate().skip(1) {
            let code = FCode::from_index(b as u32, self.width).unwrap();
            s.push_str(&format!("{} {}\n", code, ratio_text(v)));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    Candidate(AlphaTable),
    /// Advisory only: the search gave up, which proves nothing.
    Infeasible(String),
}

pub const DEFAULT_DENOMINATOR: u64 = 100_000;

fn to_u128(x: &BigInt) -> Result<u128> {
    x.to_u128()
        .ok_or_else(|| Error::ResourceCap(format!("{x} does not fit in 128 bits")))
}

/// Least solution on the grid `1/denominator` above the lower bound.
///
/// Each α only ever needs to be at least `μ_m Σ α_children / (1 - ε)` for the
/// inequalities where it is the parent, so starting every α at the lower
/// bound and raising it to that requirement until nothing moves gives the
/// smallest solution, or shows there is none below the upper bound. A
/// floating-point pass gets close first; the exact pass on the grid then
/// finishes with integer arithmetic, so the output satisfies every
/// inequality exactly.
pub fn solve_lp(
    ineqs: &[Inequality],
    table: &MuTable,
    eps: &BigRational,
    width: u8,
    bounds: (u32, u32),
    denominator: u64,
) -> Result<SolveOutcome> {
    check_eps(eps)?;
    let n = (1usize << width) + 1;
    let (lo, hi) = (bounds.0 as f64, bounds.1 as f64);
    let keep = one_minus(eps);
    let rows: Vec<&Inequality> = ineqs.iter().filter(|q| q.phi.b[1..].iter().any(|&b| b != 0)).collect();
    let coef: Vec<f64> = rows
        .iter()
        .map(|q| (table.mu(q.phi.m) / &keep).to_f64().unwrap_or(f64::INFINITY))
        .collect();
    let mut a = vec![lo; n];
    a[0] = 0.0;
    let mut settled = false;
    for _ in 0..200_000 {
        let mut moved = 0.0f64;
        for (q, c) in rows.iter().zip(&coef) {
            let need = c * q.phi.b[1..].iter().map(|&b| a[b as usize]).sum::<f64>();
            let p = q.phi.b[0] as usize;
            if need > a[p] {
                moved = moved.max(need - a[p]);
                a[p] = need;
                if need > hi {
                    return Ok(SolveOutcome::Infeasible(format!(
                        "a{p} must exceed {hi} (floating-point search)"
                    )));
                }
            }
        }
        if moved < 1e-13 {
            settled = true;
            break;
        }
    }
    if !settled {
        return Ok(SolveOutcome::Infeasible("floating-point search did not settle".into()));
    }
    // Exact pass on the grid.
    let d = denominator as u128;
    let hi_grid = bounds.1 as u128 * d;
    let mut g: Vec<u128> = a.iter().map(|x| (x * d as f64).floor() as u128).collect();
    g[0] = 0;
    for x in g.iter_mut().skip(1) {
        *x = (*x).max(bounds.0 as u128 * d);
    }
    let (en, ed) = (to_u128(eps.numer())?, to_u128(eps.denom())?);
    let exact: Vec<(u128, u128)> = rows
        .iter()
        .map(|q| {
            let mu = table.mu(q.phi.m);
            Ok((to_u128(mu.numer())? * ed, to_u128(mu.denom())? * (ed - en)))
        })
        .collect::<Result<_>>()?;
    let mut sweeps = 0;
    loop {
        let mut changed = false;
        for (q, &(num, den)) in rows.iter().zip(&exact) {
            let s: u128 = q.phi.b[1..].iter().map(|&b| g[b as usize]).sum();
            let need = (num * s).div_ceil(den);
            let p = q.phi.b[0] as usize;
            if need > g[p] {
                g[p] = need;
                changed = true;
                if need > hi_grid {
                    return Ok(SolveOutcome::Infeasible(format!("a{p} must exceed {}", bounds.1)));
                }
            }
        }
        if !changed {
            break;
        }
        sweeps += 1;
        if sweeps > 1_000_000 {
            return Ok(SolveOutcome::Infeasible("exact pass did not settle".into()));
        }
    }
    let values = g
        .iter()
        .map(|&x| BigRational::new(BigInt::from(x), BigInt::from(d)))
        .collect();
    Ok(SolveOutcome::Candidate(AlphaTable { width, values }))
}

/// A family member whose inequality fails.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViolationRecord {
    pub g: GSubregion,
    pub phi: PhiResult,
    pub lhs: BigRational,
    pub rhs: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verification {
    pub eps: BigRational,
    pub checked: usize,
    pub distinct: usize,
    pub out_of_range: Vec<(u32, BigRational)>,
    pub violations: Vec<ViolationRecord>,
    pub inputs: Vec<(String, String)>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.out_of_range.is_empty() && self.violations.is_empty()
    }

    /// Machine-readable certificate: inputs' hashes, ε, counts, verdict and
    /// every violation.
    pub fn certificate(&self, g_width: usize) -> String {
        let mut s = String::new();
        s.push_str("certificate alpha-inequalities\n");
        for (name, h) in &self.inputs {
            s.push_str(&format!("input {name} sha256={h}\n"));
        }
        s.push_str(&format!("eps {}\n", ratio_text(&self.eps)));
        s.push_str(&format!("checked {}\n", self.checked));
        s.push_str(&format!("distinct {}\n", self.distinct));
        s.push_str(&format!("out_of_range {}\n", self.out_of_range.len()));
        s.push_str(&format!("violations {}\n", self.violations.len()));
        s.push_str(&format!("verdict {}\n", if self.passed() { "pass" } else { "fail" }));
        for (b, v) in &self.out_of_range {
            s.push_str(&format!("range a{b}={}\n", ratio_text(v)));
        }
        for v in &self.violations {
            s.push_str(&format!(
                "violation g={:0w$b} m={} b={:?} lhs={} rhs={}\n",
                v.g.0,
                v.phi.m,
                v.phi.b,
                ratio_text(&v.lhs),
                ratio_text(&v.rhs),
                w = g_width
            ));
        }
        s
    }
}

/// Exact check of every inequality over the family, plus the `[2, 6]` range.
pub fn verify_alphas(geo: &Geometry, alpha: &AlphaTable, table: &MuTable, eps: &BigRational) -> Result<Verification> {
    check_eps(eps)?;
    if alpha.width != geo.f_width() {
        return Err(Error::MalformedTable(format!(
            "constants use {} labels, F has {}",
            alpha.width,
            geo.f_width()
        )));
    }
    let (lo, hi) = (BigRational::from_integer(2.into()), BigRational::from_integer(6.into()));
    let out_of_range: Vec<(u32, BigRational)> = alpha
        .values
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, v)| **v < lo || **v > hi)
        .map(|(b, v)| (b as u32, v.clone()))
        .collect();
    let all = phi_all(geo, table)?;
    let keep = one_minus(eps);
    let mut verdicts: BTreeMap<PhiResult, Option<(BigRational, BigRational)>> = BTreeMap::new();
    for (_, phi) in &all {
        verdicts.entry(*phi).or_insert_with(|| {
            let sum = phi.b[1..].iter().fold(BigRational::zero(), |s, &b| s + alpha.get(b));
            let lhs = table.mu(phi.m) * sum;
            let rhs = alpha.get(phi.b[0]) * &keep;
            (lhs > rhs).then_some((lhs, rhs))
        });
    }
    let violations = all
        .iter()
        .filter_map(|(g, phi)| {
            verdicts[phi].as_ref().map(|(lhs, rhs)| ViolationRecord {
                g: *g,
                phi: *phi,
                lhs: lhs.clone(),
                rhs: rhs.clone(),
            })
        })
        .collect();
    let mut inputs = geo.hashes();
    inputs.push(("mu_table".into(), sha256(&table.to_text())));
    inputs.push(("constants".into(), sha256(&alpha.to_text())));
    Ok(Verification {
        eps: eps.clone(),
        checked: all.len(),
        distinct: verdicts.len(),
        out_of_range,
        violations,
        inputs,
    })
}

/// The constants of the decay statements for a given ε.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecayConstants {
    pub eps: BigRational,
    /// `50 / (ε (1 - ε))`.
    pub beta: BigRational,
    /// Prefactor `5 / ε` of the edge-decay bound.
    pub edge_prefactor: BigRational,
    /// Prefactor 5 of the bound `Γ_d <= 5 (1 - ε)^d`.
    pub gamma_prefactor: BigRational,
    pub max_degree: u32,
    /// The coupling-cover constant ε' with `Δ / ε' = β`.
    pub cover_eps: BigRational,
}

impl DecayConstants {
    /// `β' = -ln(1 - ε)`; only this float is inexact.
    pub fn beta_prime(&self) -> f64 {
        -(one_minus(&self.eps).to_f64().unwrap()).ln()
    }

    pub fn beta_prime_text(&self) -> String {
        format!("-ln({})", ratio_text(&one_minus(&self.eps)))
    }
}

pub fn decay_constants(eps: &BigRational) -> Result<DecayConstants> {
    check_eps(eps)?;
    let fifty = BigRational::from_integer(50.into());
    let beta = &fifty / (eps * one_minus(eps));
    let delta = BigRational::from_integer(6.into());
    Ok(DecayConstants {
        eps: eps.clone(),
        edge_prefactor: BigRational::from_integer(5.into()) / eps,
        gamma_prefactor: BigRational::from_integer(5.into()),
        max_degree: 6,
        cover_eps: &delta / &beta,
        beta,
    })
}

pub fn parse_eps(s: &str) -> Result<BigRational> {
    let e = parse_ratio(s, 0)?;
    check_eps(&e)?;
    Ok(e)
}

/// Numerator and denominator as unsigned integers.
pub fn ratio_parts(r: &BigRational) -> (BigUint, BigUint) {
    (
        r.numer().to_biguint().unwrap_or_default(),
        r.denom().to_biguint().unwrap_or_default(),
    )
}
