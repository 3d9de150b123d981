//! Batch recomputation of the μ-table with per-prefix checkpoints.
//!
//! The boundary stream of each region is split by its first `depth` free
//! colours. Each finished prefix is appended to `<dir>/M<i>.ckpt` as soon as
//! it completes, so a killed run resumes where it stopped.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use num_rational::BigRational;
use rayon::prelude::*;
use trimix::boundary::BoundaryShape;
use trimix::certify::Geometry;
use trimix::colouring::Parameters;
use trimix::lattice::LatticeCoord;
use trimix::mu::{ratio_text, MuSearch, MuTable};

use crate::manifest::RunManifest;
use crate::Failure;

pub struct Options {
    pub workers: usize,
    pub depth: Option<usize>,
    pub checkpoint: Option<PathBuf>,
}

/// Per-prefix outcome: the μ value as text and the record line.
type Done = BTreeMap<Vec<u8>, Option<(String, String)>>;

fn prefix_text(p: &[u8]) -> String {
    if p.is_empty() {
        "-".into()
    } else {
        p.iter().map(u8::to_string).collect::<Vec<_>>().join(",")
    }
}

fn parse_prefix(s: &str) -> Option<Vec<u8>> {
    if s == "-" {
        return Some(Vec::new());
    }
    s.split(',').map(|t| t.parse().ok()).collect()
}

fn load(path: &Path, depth: usize) -> Result<Done, Failure> {
    let mut done = Done::new();
    let Ok(text) = fs::read_to_string(path) else { return Ok(done) };
    let bad = |l: &str| Failure { code: 2, message: format!("{}: bad checkpoint line `{l}`", path.display()) };
    for line in text.lines() {
        if let Some(d) = line.strip_prefix("depth ") {
            if d.parse::<usize>().ok() != Some(depth) {
                return Err(Failure {
                    code: 2,
                    message: format!("{} was written with depth {d}, not {depth}", path.display()),
                });
            }
            continue;
        }
        let mut parts = line.splitn(4, ' ');
        let (Some("prefix"), Some(p), Some(v)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(bad(line));
        };
        let p = parse_prefix(p).ok_or_else(|| bad(line))?;
        let entry = match (v, parts.next()) {
            ("none", _) => None,
            (v, Some(rec)) => Some((v.to_string(), rec.to_string())),
            _ => return Err(bad(line)),
        };
        done.insert(p, entry);
    }
    Ok(done)
}

/// Recomputes the listed entries; the body has one line per entry and
/// whether every one matched the table.
pub fn run(table: &MuTable, geo: &Geometry, which: &[usize], opts: &Options, m: &mut RunManifest) -> Result<(String, bool), Failure> {
    let mut body = String::new();
    let mut all = true;
    if let Some(dir) = &opts.checkpoint {
        fs::create_dir_all(dir)?;
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.workers.max(1)).build()?;
    for &i in which {
        if i == 0 || i > table.len() {
            return Err(Failure { code: 2, message: format!("no entry M{i}") });
        }
        let region = &geo.m[i - 1].region;
        let shape = BoundaryShape::new(region, LatticeCoord::at(0, 0), LatticeCoord::at(0, -2), Parameters::default())?;
        let search = MuSearch::new(shape)?;
        let depth = opts.depth.unwrap_or_else(|| search.partition_depth(opts.workers)).min(search.shape.free.len());
        m.param(&format!("M{i}.depth"), depth);
        let prefixes = search.shape.prefixes(depth);
        let ckpt = opts.checkpoint.as_ref().map(|d| d.join(format!("M{i:02}.ckpt")));
        let done = match &ckpt {
            Some(p) => load(p, depth)?,
            None => Done::new(),
        };
        let file = match &ckpt {
            Some(p) => {
                let fresh = !p.exists();
                let mut f = OpenOptions::new().create(true).append(true).open(p)?;
                if fresh {
                    writeln!(f, "depth {depth}")?;
                }
                Some(Mutex::new(f))
            }
            None => None,
        };
        let todo: Vec<&Vec<u8>> = prefixes.iter().filter(|p| !done.contains_key(*p)).collect();
        let fresh: Vec<(Vec<u8>, Option<(String, String)>)> = pool.install(|| {
            todo.par_iter()
                .map(|p| -> Result<_, Failure> {
                    let r = search.search_prefix(p)?;
                    let entry = r.map(|r| (ratio_text(&r.value), r.record(&format!("M{i}"))));
                    if let Some(f) = &file {
                        let line = match &entry {
                            Some((v, rec)) => format!("prefix {} {v} {rec}\n", prefix_text(p)),
                            None => format!("prefix {} none\n", prefix_text(p)),
                        };
                        let mut f = f.lock().expect("checkpoint lock");
                        f.write_all(line.as_bytes())?;
                        f.flush()?;
                    }
                    Ok(((*p).clone(), entry))
                })
                .collect::<Result<Vec<_>, Failure>>()
        })?;
        let mut all_done = done;
        all_done.extend(fresh);
        // Larger μ wins; ties go to the earlier prefix, whose witness is smaller.
        let mut best: Option<(BigRational, &String)> = None;
        for p in &prefixes {
            if let Some(Some((v, rec))) = all_done.get(p) {
                let v: BigRational = v.parse()?;
                if best.as_ref().map_or(true, |(b, _)| &v > b) {
                    best = Some((v, rec));
                }
            }
        }
        let (v, rec) = best.ok_or_else(|| Failure { code: 2, message: format!("M{i}: no valid boundary pair") })?;
        let ok = &v == table.mu(i);
        all &= ok;
        body.push_str(&format!(
            "{rec} table={} {}\n",
            ratio_text(table.mu(i)),
            if ok { "match" } else { "MISMATCH" }
        ));
    }
    Ok((body, all))
}
