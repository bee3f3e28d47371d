use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dmatch::dmatch_core::baseline::{match_global, match_global_sparse};
use dmatch::dmatch_core::cover::{build_cover, CoverComplex, CoverConfig};
use dmatch::dmatch_core::metrics::iou_error;
use dmatch::dmatch_core::solver::{union_graphs, AdmmSolution, RunOptions, SolverConfig};
use dmatch::dmatch_core::synth::{self, CorruptionMode};
use dmatch::dmatch_core::Error as CoreError;
use dmatch::harness::{self, Axis, CoverMode, CoverStudy, ExperimentGrid, FixedParams, Method};
use dmatch::{io, Error, Result};

#[derive(Parser)]
#[command(name = "dmatch", version, about = "Distributed cycle-consistent multi-object matching")]
struct Cli {
    /// Base random seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Directory for output files given as relative paths.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance with its ground truth and covers.
    Gen(GenArgs),
    /// Build or load a cover and print its verdict.
    Cover(CoverArgs),
    /// Solve with the distributed solver on a cover.
    Solve(SolveArgs),
    /// Solve with the single-node solver.
    SolveGlobal(SolveGlobalArgs),
    /// IOU error between a solution and a ground-truth graph.
    Score(ScoreArgs),
    /// Run an experiment grid over two instance parameters.
    Grid(GridArgs),
    /// Compare ground-truth and random covers under clustered noise.
    CoverStudy(CoverStudyArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    r: usize,
    #[arg(long, default_value_t = 0.6)]
    rho0: f64,
    #[arg(long, default_value_t = 0.0)]
    rhoe: f64,
    #[arg(long, value_enum, default_value_t = Corruption::Rewire)]
    corruption: Corruption,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0.2)]
    overlap: f64,
    /// Output directory.
    #[arg(long, default_value = "inst")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Corruption {
    Rewire,
    Independent,
}

impl From<Corruption> for CorruptionMode {
    fn from(c: Corruption) -> Self {
        match c {
            Corruption::Rewire => CorruptionMode::Rewire,
            Corruption::Independent => CorruptionMode::Independent,
        }
    }
}

#[derive(Args)]
struct CoverArgs {
    #[arg(long)]
    input: PathBuf,
    /// Verify this cover instead of building one.
    #[arg(long)]
    cover: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Expansion radius; defaults to a tenth of the embedding range.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 10)]
    max_rounds: usize,
    #[arg(long, default_value_t = 1)]
    dims: usize,
    /// Write the built cover here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the nerve edges and triangles here.
    #[arg(long)]
    nerve: Option<PathBuf>,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 50.0)]
    lambda: f64,
    #[arg(long, default_value_t = 64.0)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Universe size estimate; defaults to the largest object size.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, default_value = "solution.txt")]
    out: PathBuf,
    /// Write the per-node residual trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

impl SolverArgs {
    fn config(&self, g: &dmatch::dmatch_core::MapGraph, seed: u64) -> SolverConfig {
        let m = self.m.unwrap_or_else(|| g.objects().map(|(_, p)| p).max().unwrap_or(1));
        SolverConfig {
            alpha: self.alpha,
            lambda: self.lambda,
            mu: self.mu,
            beta: self.beta,
            max_iters: self.max_iters,
            tol: self.tol,
            threshold: self.threshold,
            seed,
            ..SolverConfig::with_universe(m)
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    cover: PathBuf,
    /// Solve even if the cover verdict is negative.
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct SolveGlobalArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, requires = "sparse")]
    cover: Option<PathBuf>,
    /// Keep only maps between objects that share a cover node.
    #[arg(long, requires = "cover")]
    sparse: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    solution: PathBuf,
    #[arg(long)]
    gt: PathBuf,
}

#[derive(Args)]
struct CommonGridArgs {
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    r: usize,
    #[arg(long, default_value_t = 0.6)]
    rho0: f64,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    #[arg(long, default_value_t = 0.2)]
    overlap: f64,
    /// Universe size as a multiple of `r`.
    #[arg(long, default_value_t = 2)]
    universe_factor: usize,
    #[arg(long, default_value_t = 50.0)]
    lambda: f64,
    #[arg(long, default_value_t = 64.0)]
    mu: f64,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
}

impl CommonGridArgs {
    fn fixed(&self) -> FixedParams {
        let solver = SolverConfig {
            lambda: self.lambda,
            mu: self.mu,
            tol: self.tol,
            max_iters: self.max_iters,
            ..SolverConfig::with_universe(self.universe_factor * self.r)
        };
        FixedParams {
            n: self.n,
            r: self.r,
            rho0: self.rho0,
            universe_factor: self.universe_factor,
            overlap_fraction: self.overlap,
            solver,
            ..FixedParams::default()
        }
    }
}

#[derive(Args)]
struct GridArgs {
    /// Row axis, e.g. `n=20,35,50`.
    #[arg(long, default_value = "n=20,35,50")]
    rows: Axis,
    /// Column axis, e.g. `rho_e=0,0.1,0.2`.
    #[arg(long, default_value = "rho_e=0,0.1,0.2,0.3,0.4,0.5")]
    cols: Axis,
    #[arg(long, default_value = "dmatch-dense")]
    method: Method,
    #[arg(long, default_value_t = 0.0)]
    rhoe: f64,
    #[arg(long, value_enum, default_value_t = Corruption::Rewire)]
    corruption: Corruption,
    #[command(flatten)]
    common: CommonGridArgs,
}

#[derive(Args)]
struct CoverStudyArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2")]
    rho_in: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5")]
    rho_out: Vec<f64>,
    #[arg(long, default_value = "gt")]
    mode: CoverMode,
    #[command(flatten)]
    common: CommonGridArgs,
}

fn out_path(out_dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        out_dir.join(p)
    }
}

fn finish_solve(res: dmatch::dmatch_core::Result<AdmmSolution>, args: &SolverArgs, out_dir: &Path) -> Result<()> {
    let sol = res?;
    let out = out_path(out_dir, &args.out);
    io::save_solution(&out, &sol)?;
    if let Some(trace) = &args.trace {
        io::write_trace(&out_path(out_dir, trace), &sol.report)?;
    }
    let last = sol.report.last();
    println!(
        "iterations {} converged {} factor_residual {:.3e} consensus_residual {:.3e}",
        sol.report.iterations,
        sol.report.converged,
        last.map_or(0.0, |r| r.max_factor()),
        last.map_or(0.0, |r| r.max_consensus()),
    );
    println!("wrote {}", out.display());
    Ok(())
}

fn print_table(table: &harness::ResultTable) {
    println!("{} {} {} mean_error std_error completed", table.method, table.row_param, table.col_param);
    for c in &table.cells {
        println!(
            "{:.6} {:.6} {:.6} {:.6} {}/{}",
            c.row_value, c.col_value, c.mean_error, c.std_error, c.completed, c.repetitions
        );
    }
}

fn run(cli: Cli) -> Result<()> {
    let out_dir = cli.out_dir.as_path();
    match cli.command {
        Command::Gen(a) => {
            let clean = synth::generate(a.n, a.r, a.rho0, cli.seed)?;
            let inst = synth::corrupt_with_mode(&clean, a.rhoe, a.corruption.into(), cli.seed)?;
            let dir = out_path(out_dir, &a.out);
            io::save_map_graph(&dir.join("graph.txt"), &inst.observed)?;
            io::save_map_graph(&dir.join("gt.txt"), &inst.gt_graph)?;
            io::save_cover(&dir.join("cover_sparse.txt"), &synth::make_sparse_cover(a.n, a.k, a.overlap, cli.seed)?)?;
            io::save_cover(&dir.join("cover_dense.txt"), &synth::make_dense_cover(a.n, a.k, a.overlap, cli.seed)?)?;
            println!("wrote {}", dir.display());
        }
        Command::Cover(a) => {
            let g = io::load_map_graph(&a.input)?;
            let cover: CoverComplex = match &a.cover {
                Some(p) => io::load_cover(p, &g)?,
                None => {
                    let cfg = CoverConfig {
                        k: a.k,
                        epsilon: a.epsilon,
                        max_rounds: a.max_rounds,
                        seed: cli.seed,
                        dims: a.dims,
                    };
                    build_cover(&g, &cfg)?
                }
            };
            if let Some(p) = &a.out {
                io::save_cover(&out_path(out_dir, p), &cover)?;
            }
            if let Some(p) = &a.nerve {
                io::write_text(&out_path(out_dir, p), &io::format_nerve(cover.nerve()))?;
            }
            let v = cover.verdict();
            println!(
                "nodes {} edges {} triangles {}",
                cover.len(),
                cover.nerve().edges.len(),
                cover.nerve().triangles.len()
            );
            println!(
                "covers_all {} connected {} h1_rank {} joint_normal {}",
                v.covers_all, v.connected, v.h1_rank, v.joint_normal
            );
            println!("verdict {}", if v.accepted() { "accept" } else { "reject" });
            if !v.accepted() {
                return Err(CoreError::CoverRejected(v).into());
            }
        }
        Command::Solve(a) => {
            let g = io::load_map_graph(&a.input)?;
            let cover = io::load_cover(&a.cover, &g)?;
            let cfg = a.solver.config(&g, cli.seed);
            let res = dmatch::solve(&g, &cover, &cfg, RunOptions { force: a.force }, cli.threads);
            finish_solve(res, &a.solver, out_dir)?;
        }
        Command::SolveGlobal(a) => {
            let g = io::load_map_graph(&a.input)?;
            let cfg = a.solver.config(&g, cli.seed);
            let res = match &a.cover {
                Some(p) => match_global_sparse(&g, &io::load_cover(p, &g)?, &cfg),
                None => match_global(&g, &cfg),
            };
            finish_solve(res, &a.solver, out_dir)?;
        }
        Command::Score(a) => {
            let nodes = io::load_solution(&a.solution)?;
            let gt = io::load_map_graph(&a.gt)?;
            let error = iou_error(&union_graphs(&nodes)?, &gt)?;
            println!("iou_error {error:.6}");
        }
        Command::Grid(a) => {
            let mut fixed = a.common.fixed();
            fixed.rho_e = a.rhoe;
            fixed.mode = a.corruption.into();
            let mut grid = ExperimentGrid::new(a.rows, a.cols, fixed, a.method, a.common.repetitions, cli.seed);
            grid.threads = cli.threads;
            let table = harness::run_grid(&grid)?;
            print_table(&table);
            harness::emit_results(&table, out_dir)?;
        }
        Command::CoverStudy(a) => {
            let study = CoverStudy {
                rho_in: a.rho_in,
                rho_out: a.rho_out,
                mode: a.mode,
                fixed: a.common.fixed(),
                seeds: (0..a.common.repetitions as u64).map(|k| cli.seed + k).collect(),
                threads: cli.threads,
            };
            let table = harness::run_cover_study(&study)?;
            print_table(&table);
            harness::emit_results(&table, out_dir)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Core(CoreError::CoverRejected(v))) => {
            eprintln!(
                "error: cover rejected (covers_all {}, connected {}, h1_rank {})",
                v.covers_all, v.connected, v.h1_rank
            );
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
