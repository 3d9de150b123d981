mod manifest;
mod table;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use trimix::boundary::{BoundaryShape, EdgeBoundaryPair};
use trimix::certify::{self, AlphaTable, Geometry, SolveOutcome};
use trimix::colouring::{count, Parameters, PartialEdgeColouring, PartialVertexColouring};
use trimix::coupling::{build_tree, gamma_d};
use trimix::glauber::{approx_count, tv_decay, ApproxOptions, Chain, ChainConfig, Update};
use trimix::lattice::RegionFile;
use trimix::mu::{mu_hill_climb, ratio_text, MuSearch, MuTable};

use manifest::RunManifest;

#[derive(Parser)]
#[command(name = "trimix", version, about = "Exact colouring counts, boundary-pair maxima and decay certificates on the triangular lattice")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Worker threads.
    #[arg(long, env = "TRIMIX_WORKERS", default_value_t = 1)]
    workers: usize,
    /// Also write the output to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Largest μ over all boundary pairs of a region file.
    Mu {
        region: PathBuf,
        /// Hill climbing instead of the exact search.
        #[arg(long)]
        heuristic: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 200)]
        moves: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Exact check of a constants table against every subregion of G.
    Verify {
        #[arg(long)]
        constants: PathBuf,
        /// μ-table; its directory must hold the region files. Defaults to
        /// the shipped table and geometry.
        #[arg(long)]
        mu_table: Option<PathBuf>,
        #[arg(long)]
        eps: String,
        #[command(flatten)]
        common: Common,
    },
    /// Build the α linear program, and optionally solve it.
    Lp {
        #[arg(long)]
        eps: String,
        #[arg(long)]
        mu_table: Option<PathBuf>,
        /// Write the program in LP text form.
        #[arg(long)]
        emit: Option<PathBuf>,
        /// Solve, verify and write the constants table to `--out`.
        #[arg(long)]
        solve: bool,
        #[arg(long, default_value_t = certify::DEFAULT_DENOMINATOR)]
        denominator: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Γ_d of an edge-boundary pair file.
    Gamma {
        pair: PathBuf,
        d: usize,
        /// Cross-check against the explicit coupling tree.
        #[arg(long)]
        tree: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run Glauber dynamics and dump colourings, or a TV-decay curve.
    Sample {
        region: PathBuf,
        /// Vertex boundary file (`w x y colour` lines); missing vertices get 0.
        #[arg(long)]
        boundary: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Dump every `stride` steps.
        #[arg(long, default_value_t = 100)]
        stride: u64,
        /// Use the rejection update instead of the heat-bath one.
        #[arg(long)]
        rejection: bool,
        /// Print the TV-decay curve over this many trials instead.
        #[arg(long)]
        curve: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Count colourings agreeing with a boundary.
    Count {
        region: PathBuf,
        /// Vertex boundary file (`w x y colour` lines).
        #[arg(long, conflicts_with = "edge_boundary")]
        boundary: Option<PathBuf>,
        /// Edge boundary file (`e x1 y1 x2 y2 colour` lines).
        #[arg(long)]
        edge_boundary: Option<PathBuf>,
        /// Sampling estimate instead of the exact count. Not rigorous.
        #[arg(long)]
        approx: bool,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Recompute the μ-table, resumably.
    Table {
        /// Every entry. Weeks of CPU time for the largest regions.
        #[arg(long)]
        full_table: bool,
        /// Entries to run, e.g. `--only 10,39`.
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
        #[arg(long)]
        mu_table: Option<PathBuf>,
        /// Directory for per-prefix checkpoint files.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Boundary prefix length used to split the work.
        #[arg(long)]
        depth: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

/// Failure with its exit code: 1 for a negative verdict, 2 for bad input.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure { code: 2, message: e.to_string() }
    }
}

type Out = std::result::Result<ExitCode, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure { code: 2, message: format!("{}: {e}", path.display()) })
}

fn emit(common: &Common, manifest: &RunManifest, body: &str) -> Result<(), Failure> {
    let text = format!("{}{body}", manifest.to_text("#"));
    print!("{text}");
    if let Some(p) = &common.out {
        fs::write(p, &text).map_err(|e| Failure { code: 2, message: format!("{}: {e}", p.display()) })?;
    }
    Ok(())
}

/// The table and geometry, from `--mu-table` or the shipped data.
pub fn load_table(path: Option<&Path>, m: &mut RunManifest) -> Result<(MuTable, Geometry), Failure> {
    match path {
        None => {
            let geo = Geometry::shipped();
            m.param("mu_table", "shipped");
            m.data(&geo.hashes());
            Ok((MuTable::shipped(), geo))
        }
        Some(p) => {
            let text = read(p)?;
            m.input(p, &text);
            let table = MuTable::parse(&text)?;
            let geo = Geometry::load(p.parent().unwrap_or(Path::new(".")), &table)?;
            m.data(&geo.hashes());
            Ok((table, geo))
        }
    }
}

fn region_file(path: &Path, m: &mut RunManifest) -> Result<RegionFile, Failure> {
    let text = read(path)?;
    m.input(path, &text);
    Ok(RegionFile::parse(&text)?)
}

fn run(cli: Cli) -> Out {
    let started = Instant::now();
    let params = Parameters::default();
    match cli.cmd {
        Cmd::Mu { region, heuristic, seed, restarts, moves, common } => {
            let mut m = RunManifest::new("mu", common.workers);
            let file = region_file(&region, &mut m)?;
            let shape = BoundaryShape::from_region_file(&file, params)?;
            let search = MuSearch::new(shape)?;
            let result = if heuristic {
                m.param("mode", "heuristic");
                m.param("seed", seed);
                m.param("restarts", restarts);
                m.param("moves", moves);
                mu_hill_climb(&search, seed, restarts, moves)?
            } else {
                m.param("mode", "exact");
                search.mu_max(common.workers)?
            };
            let name = file
                .region
                .name()
                .map(str::to_string)
                .unwrap_or_else(|| region.file_stem().unwrap_or_default().to_string_lossy().into_owned());
            m.finish(started);
            emit(&common, &m, &format!("{}\n", result.record(&name)))?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify { constants, mu_table, eps, common } => {
            let mut m = RunManifest::new("verify", common.workers);
            let eps = certify::parse_eps(&eps)?;
            m.param("eps", ratio_text(&eps));
            let text = read(&constants)?;
            m.input(&constants, &text);
            let alpha = AlphaTable::parse(&text)?;
            let (table, geo) = load_table(mu_table.as_deref(), &mut m)?;
            let v = certify::verify_alphas(&geo, &alpha, &table, &eps)?;
            m.finish(started);
            emit(&common, &m, &v.certificate(geo.g_width()))?;
            Ok(if v.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::Lp { eps, mu_table, emit: emit_path, solve, denominator, common } => {
            let mut m = RunManifest::new("lp", common.workers);
            let eps = certify::parse_eps(&eps)?;
            m.param("eps", ratio_text(&eps));
            m.param("denominator", denominator);
            let (table, geo) = load_table(mu_table.as_deref(), &mut m)?;
            let ineqs = certify::generate_inequalities(&geo, &table)?;
            let bounds = (2, 6);
            if let Some(p) = &emit_path {
                let lp = certify::export_lp(&ineqs, &table, &eps, geo.f_width(), bounds);
                fs::write(p, format!("{}{lp}", m.to_text("\\")))?;
                eprintln!("wrote {} ({} inequalities)", p.display(), ineqs.len());
            }
            if !solve {
                return Ok(ExitCode::SUCCESS);
            }
            match certify::solve_lp(&ineqs, &table, &eps, geo.f_width(), bounds, denominator)? {
                SolveOutcome::Infeasible(why) => {
                    m.finish(started);
                    emit(&common, &m, &format!("# infeasible: {why}\n"))?;
                    Ok(ExitCode::from(1))
                }
                SolveOutcome::Candidate(alpha) => {
                    let v = certify::verify_alphas(&geo, &alpha, &table, &eps)?;
                    m.param("verdict", if v.passed() { "pass" } else { "fail" });
                    m.finish(started);
                    emit(&common, &m, &alpha.to_text())?;
                    Ok(if v.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
                }
            }
        }
        Cmd::Gamma { pair, d, tree, common } => {
            let mut m = RunManifest::new("gamma", common.workers);
            let text = read(&pair)?;
            m.input(&pair, &text);
            m.param("d", d);
            let x = EdgeBoundaryPair::parse(&text, params)?;
            let g = gamma_d(&x, d, params)?;
            let mut body = format!("gamma_{d}={}\n", ratio_text(&g));
            if tree {
                let t = build_tree(&x, d, params)?.gamma(d);
                body.push_str(&format!("tree_gamma_{d}={}\n", ratio_text(&t)));
                if t != g {
                    return Err(Failure { code: 1, message: format!("recursion and tree disagree\n{body}") });
                }
            }
            m.finish(started);
            emit(&common, &m, &body)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Sample { region, boundary, steps, seed, stride, rejection, curve, common } => {
            let mut m = RunManifest::new("sample", common.workers);
            let cfg = chain_config(&region, boundary.as_deref(), rejection, &mut m)?;
            m.param("seed", seed);
            m.param("steps", steps);
            let mut body = String::new();
            if let Some(trials) = curve {
                m.param("trials", trials);
                body.push_str("step,tv,smoothed,half_width,noise_floor\n");
                for p in tv_decay(&cfg, trials, steps, seed)? {
                    body.push_str(&format!("{},{},{},{},{}\n", p.step, p.tv, p.smoothed, p.half_width, p.noise_floor));
                }
            } else {
                m.param("stride", stride);
                let chain = Chain::new(&cfg)?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut s = chain.first_state()?;
                let order: Vec<String> = cfg.region.iter().map(|v| format!("{},{}", v.x, v.y)).collect();
                body.push_str(&format!("# vertices {}\n", order.join(" ")));
                let stride = stride.max(1);
                let mut done = 0;
                while done < steps {
                    let k = stride.min(steps - done);
                    chain.run(&mut s, k, &mut rng);
                    done += k;
                    let cs: Vec<String> = s.colours.iter().map(u8::to_string).collect();
                    body.push_str(&format!("{} {}\n", s.step, cs.join(" ")));
                }
            }
            m.finish(started);
            emit(&common, &m, &body)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Count { region, boundary, edge_boundary, approx, samples, seed, common } => {
            let mut m = RunManifest::new("count", common.workers);
            let body = if approx {
                m.param("samples", samples);
                m.param("seed", seed);
                if edge_boundary.is_some() {
                    return Err(Failure { code: 2, message: "--approx takes a vertex boundary".into() });
                }
                let cfg = chain_config(&region, boundary.as_deref(), false, &mut m)?;
                let opts = ApproxOptions { samples_per_factor: samples, seed, ..Default::default() };
                let r = approx_count(&cfg, opts)?;
                format!("estimate={:.6} low={:.6} high={:.6} (sampling estimate, not rigorous)\n", r.estimate, r.low, r.high)
            } else {
                let file = region_file(&region, &mut m)?;
                let r = file.region;
                let b = match (boundary, edge_boundary) {
                    (Some(p), _) => {
                        let text = read(&p)?;
                        m.input(&p, &text);
                        PartialEdgeColouring::from_vertex(&r, &PartialVertexColouring::parse(&text, &r, params)?)
                    }
                    (None, Some(p)) => {
                        let text = read(&p)?;
                        m.input(&p, &text);
                        PartialEdgeColouring::parse(&text, &r, params)?
                    }
                    (None, None) => PartialEdgeColouring::zero(&r),
                };
                format!("count={}\n", count(&r, &b, None, params)?)
            };
            m.finish(started);
            emit(&common, &m, &body)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Table { full_table, only, mu_table, checkpoint, depth, common } => {
            let mut m = RunManifest::new("table", common.workers);
            let (table, geo) = load_table(mu_table.as_deref(), &mut m)?;
            let which: Vec<usize> = if full_table {
                (1..=table.len()).collect()
            } else if !only.is_empty() {
                only
            } else {
                return Err(Failure { code: 2, message: "pass --only i,j,.. or --full-table".into() });
            };
            let opts = table::Options { workers: common.workers, depth, checkpoint };
            let (body, all_match) = table::run(&table, &geo, &which, &opts, &mut m)?;
            m.finish(started);
            emit(&common, &m, &body)?;
            Ok(if all_match { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn chain_config(region: &Path, boundary: Option<&Path>, rejection: bool, m: &mut RunManifest) -> Result<ChainConfig, Failure> {
    let params = Parameters::default();
    let r = region_file(region, m)?.region;
    let b = match boundary {
        Some(p) => {
            let text = read(p)?;
            m.input(p, &text);
            PartialVertexColouring::parse(&text, &r, params)?
        }
        None => PartialVertexColouring::zero(&r),
    };
    let mut cfg = ChainConfig::new(r, b, params);
    if rejection {
        cfg.update = Update::Rejection;
        m.param("update", "rejection");
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
