//! Synthetic experiment grids, the cover study and their CSV output.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use dmatch_core::baseline::{match_global, match_global_sparse};
use dmatch_core::cover::CoverComplex;
use dmatch_core::metrics::iou_error;
use dmatch_core::solver::{coverage_graph, max_overlap_gap, AdmmSolution, RunOptions, SolverConfig};
use dmatch_core::synth::{self, CorruptionMode, Instance};

use crate::error::{Error, Result};
use crate::exec::solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    DmatchSparse,
    DmatchDense,
    Global,
    GlobalSparse,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::DmatchSparse, Method::DmatchDense, Method::Global, Method::GlobalSparse];

    pub fn name(self) -> &'static str {
        match self {
            Method::DmatchSparse => "dmatch-sparse",
            Method::DmatchDense => "dmatch-dense",
            Method::Global => "global",
            Method::GlobalSparse => "global-sparse",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown method `{s}`"))
    }
}

/// Instance parameter swept along a grid axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    N,
    R,
    Rho0,
    RhoE,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::N => "n",
            Param::R => "r",
            Param::Rho0 => "rho0",
            Param::RhoE => "rho_e",
        }
    }
}

impl FromStr for Param {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [Param::N, Param::R, Param::Rho0, Param::RhoE]
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown parameter `{s}` (expected n, r, rho0 or rho_e)"))
    }
}

fn strictly_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] < w[1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub param: Param,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(param: Param, values: Vec<f64>) -> Result<Self, String> {
        if !strictly_increasing(&values) {
            return Err(format!("{} axis values must be strictly increasing", param.name()));
        }
        Ok(Self { param, values })
    }
}

/// `name=v1,v2,...`
impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (name, vals) = s.split_once('=').ok_or_else(|| format!("expected `param=v1,v2,...`, got `{s}`"))?;
        let values = vals
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| format!("invalid axis value `{v}`")))
            .collect::<Result<Vec<_>, _>>()?;
        Axis::new(name.trim().parse()?, values)
    }
}

/// Instance and solver settings not swept by a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedParams {
    pub n: usize,
    pub r: usize,
    pub rho0: f64,
    pub rho_e: f64,
    /// Universe estimate as a multiple of `r`.
    pub universe_factor: usize,
    pub overlap_fraction: f64,
    pub mode: CorruptionMode,
    /// Template for every solve; its universe size is replaced per cell.
    pub solver: SolverConfig,
}

impl Default for FixedParams {
    fn default() -> Self {
        Self {
            n: 50,
            r: 20,
            rho0: 0.6,
            rho_e: 0.0,
            universe_factor: 2,
            overlap_fraction: 0.2,
            mode: CorruptionMode::Rewire,
            solver: SolverConfig::with_universe(40),
        }
    }
}

impl FixedParams {
    fn with(&self, param: Param, v: f64) -> Self {
        let mut p = self.clone();
        match param {
            Param::N => p.n = v as usize,
            Param::R => p.r = v as usize,
            Param::Rho0 => p.rho0 = v,
            Param::RhoE => p.rho_e = v,
        }
        p
    }

    fn solver_config(&self, seed: u64) -> SolverConfig {
        SolverConfig { universe_size: self.universe_factor * self.r, seed, ..self.solver.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGrid {
    pub rows: Axis,
    pub cols: Axis,
    pub fixed: FixedParams,
    /// One seed per repetition.
    pub seeds: Vec<u64>,
    pub method: Method,
    /// Worker threads over (cell, repetition) tasks.
    pub threads: usize,
}

impl ExperimentGrid {
    /// `repetitions` consecutive seeds starting at `base_seed`.
    pub fn new(rows: Axis, cols: Axis, fixed: FixedParams, method: Method, repetitions: usize, base_seed: u64) -> Self {
        Self { rows, cols, fixed, seeds: (0..repetitions as u64).map(|k| base_seed + k).collect(), method, threads: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        for axis in [&self.rows, &self.cols] {
            Axis::new(axis.param, axis.values.clone()).map_err(dmatch_core::Error::Config)?;
        }
        check_seeds(&self.seeds)
    }
}

fn check_seeds(seeds: &[u64]) -> Result<()> {
    if seeds.is_empty() {
        return Err(dmatch_core::Error::Config("repetitions must be at least 1".into()).into());
    }
    Ok(())
}

/// Outcome of one repetition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunOutcome {
    Solved {
        error: f64,
        iterations: usize,
        converged: bool,
        wall_secs: f64,
        round_secs: f64,
        /// Largest consensus residual of the last round.
        consensus: f64,
        /// Largest entrywise disagreement on node overlaps.
        overlap_gap: f64,
    },
    /// The cover verdict was negative.
    Refused,
    /// The solution covers no object pair.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub row_value: f64,
    pub col_value: f64,
    pub repetitions: usize,
    /// Repetitions that produced a score.
    pub completed: usize,
    pub converged: usize,
    pub mean_error: f64,
    pub std_error: f64,
    pub mean_iterations: f64,
    pub mean_wall_secs: f64,
    /// Mean over rounds of the slowest node's time.
    pub mean_round_secs: f64,
    /// Per repetition, in seed order; empty when read back from CSV.
    pub outcomes: Vec<RunOutcome>,
}

impl CellResult {
    pub fn from_outcomes(row_value: f64, col_value: f64, outcomes: &[RunOutcome]) -> Self {
        type Sample = (f64, usize, bool, f64, f64);
        let solved: Vec<Sample> = outcomes
            .iter()
            .filter_map(|o| match *o {
                RunOutcome::Solved { error, iterations, converged, wall_secs, round_secs, .. } => {
                    Some((error, iterations, converged, wall_secs, round_secs))
                }
                _ => None,
            })
            .collect();
        let n = solved.len() as f64;
        let mean = |f: &dyn Fn(&Sample) -> f64| solved.iter().map(f).sum::<f64>() / n;
        let mean_error = mean(&|s| s.0);
        let std_error = if solved.len() > 1 {
            (solved.iter().map(|s| (s.0 - mean_error).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else if solved.len() == 1 {
            0.0
        } else {
            f64::NAN
        };
        Self {
            row_value,
            col_value,
            repetitions: outcomes.len(),
            completed: solved.len(),
            converged: solved.iter().filter(|s| s.2).count(),
            mean_error,
            std_error,
            mean_iterations: mean(&|s| s.1 as f64),
            mean_wall_secs: mean(&|s| s.3),
            mean_round_secs: mean(&|s| s.4),
            outcomes: outcomes.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    /// Label used in `results.csv` and the heatmap file name.
    pub method: String,
    pub row_param: String,
    pub col_param: String,
    pub row_values: Vec<f64>,
    pub col_values: Vec<f64>,
    /// Row-major over (row value, column value).
    pub cells: Vec<CellResult>,
}

impl ResultTable {
    pub fn cell(&self, row: f64, col: f64) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.row_value == row && c.col_value == col)
    }
}

fn score(sol: &AdmmSolution, cover: Option<&CoverComplex>, inst: &Instance, started: Instant) -> Result<RunOutcome> {
    let wall_secs = started.elapsed().as_secs_f64();
    let overlap_gap = cover.map_or(Ok(0.0), |c| max_overlap_gap(sol, c))?;
    match iou_error(&coverage_graph(sol)?, &inst.gt_graph) {
        Ok(error) => Ok(RunOutcome::Solved {
            error,
            iterations: sol.report.iterations,
            converged: sol.report.converged,
            wall_secs,
            round_secs: sol.report.mean_round_nanos() * 1e-9,
            consensus: sol.report.last().map_or(0.0, |r| r.max_consensus()),
            overlap_gap,
        }),
        Err(dmatch_core::Error::Degenerate(_)) => Ok(RunOutcome::Degenerate),
        Err(e) => Err(e.into()),
    }
}

fn finish(
    res: dmatch_core::Result<AdmmSolution>,
    cover: Option<&CoverComplex>,
    inst: &Instance,
    started: Instant,
) -> Result<RunOutcome> {
    match res {
        Ok(sol) => score(&sol, cover, inst, started),
        Err(dmatch_core::Error::CoverRejected(_)) => Ok(RunOutcome::Refused),
        Err(e) => Err(e.into()),
    }
}

/// One repetition of a grid cell: generate, corrupt, build the method's
/// cover, solve, score.
pub fn run_cell(p: &FixedParams, method: Method, seed: u64) -> Result<RunOutcome> {
    let clean = synth::generate(p.n, p.r, p.rho0, seed)?;
    let inst = synth::corrupt_with_mode(&clean, p.rho_e, p.mode, seed)?;
    let cfg = p.solver_config(seed);
    let started = Instant::now();
    match method {
        Method::DmatchSparse | Method::DmatchDense => {
            let cover = if method == Method::DmatchSparse {
                synth::make_sparse_cover(p.n, 3, p.overlap_fraction, seed)?
            } else {
                synth::make_dense_cover(p.n, 3, p.overlap_fraction, seed)?
            };
            let res = solve(&inst.observed, &cover, &cfg, RunOptions::default(), 1);
            finish(res, Some(&cover), &inst, started)
        }
        Method::Global => finish(match_global(&inst.observed, &cfg), None, &inst, started),
        Method::GlobalSparse => {
            let cover = synth::make_sparse_cover(p.n, 3, p.overlap_fraction, seed)?;
            finish(match_global_sparse(&inst.observed, &cover, &cfg), None, &inst, started)
        }
    }
}

/// Runs `task(cell, repetition)` for every pair on `threads` workers and
/// groups the outcomes by cell in input order.
fn run_tasks(
    cells: usize,
    reps: usize,
    threads: usize,
    task: impl Fn(usize, usize) -> Result<RunOutcome> + Sync,
) -> Result<Vec<Vec<RunOutcome>>> {
    let total = cells * reps;
    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<Result<RunOutcome>>>> = (0..total).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, total.max(1)) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                if k >= total {
                    break;
                }
                let out = task(k / reps, k % reps);
                *results[k].lock().unwrap() = Some(out);
            });
        }
    });
    let flat = results.into_iter().map(|r| r.into_inner().unwrap().expect("every task ran")).collect::<Result<Vec<_>>>()?;
    Ok(flat.chunks(reps.max(1)).map(<[RunOutcome]>::to_vec).take(cells).collect())
}

pub fn run_grid(grid: &ExperimentGrid) -> Result<ResultTable> {
    grid.validate()?;
    let pairs: Vec<(f64, f64)> =
        grid.rows.values.iter().flat_map(|&r| grid.cols.values.iter().map(move |&c| (r, c))).collect();
    let reps = grid.seeds.len();
    let outcomes = run_tasks(pairs.len(), reps, grid.threads, |cell, rep| {
        let (r, c) = pairs[cell];
        let p = grid.fixed.with(grid.rows.param, r).with(grid.cols.param, c);
        run_cell(&p, grid.method, grid.seeds[rep])
    })?;
    Ok(ResultTable {
        method: grid.method.name().into(),
        row_param: grid.rows.param.name().into(),
        col_param: grid.cols.param.name().into(),
        row_values: grid.rows.values.clone(),
        col_values: grid.cols.values.clone(),
        cells: pairs.iter().zip(&outcomes).map(|(&(r, c), o)| CellResult::from_outcomes(r, c, o)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverMode {
    /// Solve on the cover that generated the noise classes.
    GroundTruth,
    /// Solve on an independent random cover with the same size profile.
    Random,
}

impl CoverMode {
    pub fn name(self) -> &'static str {
        match self {
            CoverMode::GroundTruth => "gt",
            CoverMode::Random => "random",
        }
    }
}

impl FromStr for CoverMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gt" | "ground-truth" => Ok(CoverMode::GroundTruth),
            "random" => Ok(CoverMode::Random),
            _ => Err(format!("unknown cover mode `{s}` (expected gt or random)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverStudy {
    pub rho_in: Vec<f64>,
    pub rho_out: Vec<f64>,
    pub mode: CoverMode,
    /// `n`, `r`, `rho0`, overlap and solver settings; `rho_e` is unused.
    pub fixed: FixedParams,
    pub seeds: Vec<u64>,
    pub threads: usize,
}

const RANDOM_COVER_SALT: u64 = 0x5eed_c0de;

/// One repetition of a cover-study cell.
pub fn run_cover_cell(p: &FixedParams, mode: CoverMode, rho_in: f64, rho_out: f64, seed: u64) -> Result<RunOutcome> {
    let clean = synth::generate(p.n, p.r, p.rho0, seed)?;
    let gt_cover = synth::make_sparse_cover(p.n, 3, p.overlap_fraction, seed)?;
    let inst = synth::corrupt_clustered(&clean, &gt_cover, rho_in, rho_out, seed)?;
    let cover: CoverComplex = match mode {
        CoverMode::GroundTruth => gt_cover,
        CoverMode::Random => synth::make_sparse_cover(p.n, 3, p.overlap_fraction, seed ^ RANDOM_COVER_SALT)?,
    };
    let started = Instant::now();
    let res = solve(&inst.observed, &cover, &p.solver_config(seed), RunOptions::default(), 1);
    finish(res, Some(&cover), &inst, started)
}

/// Rows are `rho_in`, columns `rho_out`.
pub fn run_cover_study(study: &CoverStudy) -> Result<ResultTable> {
    for (name, vals) in [("rho_in", &study.rho_in), ("rho_out", &study.rho_out)] {
        if !strictly_increasing(vals) {
            return Err(dmatch_core::Error::Config(format!("{name} values must be strictly increasing")).into());
        }
    }
    check_seeds(&study.seeds)?;
    let pairs: Vec<(f64, f64)> =
        study.rho_in.iter().flat_map(|&r| study.rho_out.iter().map(move |&c| (r, c))).collect();
    let outcomes = run_tasks(pairs.len(), study.seeds.len(), study.threads, |cell, rep| {
        let (ri, ro) = pairs[cell];
        run_cover_cell(&study.fixed, study.mode, ri, ro, study.seeds[rep])
    })?;
    Ok(ResultTable {
        method: format!("cover-{}", study.mode.name()),
        row_param: "rho_in".into(),
        col_param: "rho_out".into(),
        row_values: study.rho_in.clone(),
        col_values: study.rho_out.clone(),
        cells: pairs.iter().zip(&outcomes).map(|(&(r, c), o)| CellResult::from_outcomes(r, c, o)).collect(),
    })
}

const RESULT_HEADER: [&str; 13] = [
    "method",
    "row_param",
    "row_value",
    "col_param",
    "col_value",
    "repetitions",
    "completed",
    "converged",
    "mean_error",
    "std_error",
    "mean_iterations",
    "mean_wall_secs",
    "mean_round_secs",
];

/// Writes `results.csv` and `heatmap_<method>.csv` into `dir`.
pub fn emit_results(table: &ResultTable, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let results = dir.join("results.csv");
    let mut w = csv::Writer::from_path(&results).map_err(Error::csv(&results))?;
    w.write_record(RESULT_HEADER).map_err(Error::csv(&results))?;
    for c in &table.cells {
        w.write_record([
            table.method.clone(),
            table.row_param.clone(),
            format!("{:.6}", c.row_value),
            table.col_param.clone(),
            format!("{:.6}", c.col_value),
            c.repetitions.to_string(),
            c.completed.to_string(),
            c.converged.to_string(),
            format!("{:.6}", c.mean_error),
            format!("{:.6}", c.std_error),
            format!("{:.6}", c.mean_iterations),
            format!("{:.6}", c.mean_wall_secs),
            format!("{:.6}", c.mean_round_secs),
        ])
        .map_err(Error::csv(&results))?;
    }
    w.flush().map_err(Error::io(&results))?;

    let heatmap = dir.join(format!("heatmap_{}.csv", table.method));
    let mut w = csv::Writer::from_path(&heatmap).map_err(Error::csv(&heatmap))?;
    let mut header = vec![format!("{}\\{}", table.row_param, table.col_param)];
    header.extend(table.col_values.iter().map(|v| format!("{v:.6}")));
    w.write_record(&header).map_err(Error::csv(&heatmap))?;
    for &r in &table.row_values {
        let mut row = vec![format!("{r:.6}")];
        for &c in &table.col_values {
            row.push(table.cell(r, c).map_or_else(|| "NaN".into(), |cell| format!("{:.6}", cell.mean_error)));
        }
        w.write_record(&row).map_err(Error::csv(&heatmap))?;
    }
    w.flush().map_err(Error::io(&heatmap))?;
    Ok((results, heatmap))
}

/// Reads a `results.csv` written by [`emit_results`], grouped by method.
pub fn parse_results(path: &Path) -> Result<BTreeMap<String, ResultTable>> {
    let mut r = csv::Reader::from_path(path).map_err(Error::csv(path))?;
    let parse_err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut tables: BTreeMap<String, ResultTable> = BTreeMap::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(Error::csv(path))?;
        let line = k + 2;
        if rec.len() != RESULT_HEADER.len() {
            return Err(parse_err(line, format!("expected {} fields, found {}", RESULT_HEADER.len(), rec.len())));
        }
        let f = |i: usize| rec[i].parse::<f64>().map_err(|_| parse_err(line, format!("invalid number `{}`", &rec[i])));
        let u = |i: usize| rec[i].parse::<usize>().map_err(|_| parse_err(line, format!("invalid count `{}`", &rec[i])));
        let cell = CellResult {
            row_value: f(2)?,
            col_value: f(4)?,
            repetitions: u(5)?,
            completed: u(6)?,
            converged: u(7)?,
            mean_error: f(8)?,
            std_error: f(9)?,
            mean_iterations: f(10)?,
            mean_wall_secs: f(11)?,
            mean_round_secs: f(12)?,
            outcomes: Vec::new(),
        };
        let t = tables.entry(rec[0].to_string()).or_insert_with(|| ResultTable {
            method: rec[0].to_string(),
            row_param: rec[1].to_string(),
            col_param: rec[3].to_string(),
            row_values: Vec::new(),
            col_values: Vec::new(),
            cells: Vec::new(),
        });
        if !t.row_values.contains(&cell.row_value) {
            t.row_values.push(cell.row_value);
        }
        if !t.col_values.contains(&cell.col_value) {
            t.col_values.push(cell.col_value);
        }
        t.cells.push(cell);
    }
    Ok(tables)
}
