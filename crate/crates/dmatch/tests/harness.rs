use dmatch::dmatch_core::solver::SolverConfig;
use dmatch::harness::{
    emit_results, parse_results, run_cover_study, run_grid, Axis, CoverMode, CoverStudy, ExperimentGrid, FixedParams,
    Method, Param,
};
use proptest::prelude::*;

fn small_fixed() -> FixedParams {
    FixedParams {
        n: 8,
        r: 6,
        rho0: 0.8,
        solver: SolverConfig { max_iters: 300, ..SolverConfig::with_universe(12) },
        ..FixedParams::default()
    }
}

fn grid(rows: Axis, cols: Axis, method: Method, reps: usize) -> ExperimentGrid {
    ExperimentGrid::new(rows, cols, small_fixed(), method, reps, 11)
}

#[test]
fn noiseless_single_cell_is_exact_for_every_method() {
    for method in Method::ALL {
        let mut g = grid(Axis::new(Param::N, vec![8.0]).unwrap(), Axis::new(Param::RhoE, vec![0.0]).unwrap(), method, 2);
        if method == Method::GlobalSparse {
            // With α > 0 the dropped cross-node blocks are pushed towards zero.
            g.fixed.solver.alpha = 0.0;
        }
        let t = run_grid(&g).unwrap();
        assert_eq!(t.cells.len(), 1);
        let c = &t.cells[0];
        assert_eq!((c.completed, c.repetitions), (2, 2), "{method}");
        assert_eq!(c.mean_error, 0.0, "{method}");
    }
}

#[test]
fn sparse_global_fill_biases_dropped_blocks() {
    let g = grid(Axis::new(Param::N, vec![8.0]).unwrap(), Axis::new(Param::RhoE, vec![0.0]).unwrap(), Method::GlobalSparse, 2);
    assert!(run_grid(&g).unwrap().cells[0].mean_error > 0.0);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let mut g = grid(
        Axis::new(Param::N, vec![6.0, 8.0]).unwrap(),
        Axis::new(Param::RhoE, vec![0.1, 0.3]).unwrap(),
        Method::DmatchSparse,
        2,
    );
    let strip = |t: dmatch::harness::ResultTable| {
        t.cells.iter().map(|c| (c.row_value, c.col_value, c.mean_error.to_bits(), c.std_error.to_bits(), c.mean_iterations.to_bits())).collect::<Vec<_>>()
    };
    let one = strip(run_grid(&g).unwrap());
    g.threads = 3;
    assert_eq!(strip(run_grid(&g).unwrap()), one);
}

#[test]
fn invalid_grids_are_rejected() {
    let mut g = grid(Axis::new(Param::N, vec![8.0]).unwrap(), Axis::new(Param::RhoE, vec![0.0]).unwrap(), Method::Global, 1);
    g.seeds.clear();
    assert!(run_grid(&g).is_err());
    let mut g = grid(Axis::new(Param::N, vec![8.0]).unwrap(), Axis::new(Param::RhoE, vec![0.0]).unwrap(), Method::Global, 1);
    g.cols.values = vec![0.2, 0.1];
    assert!(run_grid(&g).is_err());
}

#[test]
fn heatmap_has_one_row_and_column_per_axis_value() {
    let g = grid(
        Axis::new(Param::N, vec![6.0, 8.0]).unwrap(),
        Axis::new(Param::RhoE, vec![0.0, 0.2]).unwrap(),
        Method::Global,
        1,
    );
    let t = run_grid(&g).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (results, heatmap) = emit_results(&t, dir.path()).unwrap();
    assert_eq!(heatmap.file_name().unwrap(), "heatmap_global.csv");
    let text = std::fs::read_to_string(heatmap).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.len() == 3));
    assert_eq!(rows[0], ["n\\rho_e", "0.000000", "0.200000"]);
    assert_eq!(rows[1][0], "6.000000");
    assert_eq!(std::fs::read_to_string(results).unwrap().lines().count(), 5);
}

#[test]
fn empty_grid_writes_header_only_files() {
    let g = grid(Axis::new(Param::N, vec![]).unwrap(), Axis::new(Param::RhoE, vec![0.0]).unwrap(), Method::Global, 1);
    let t = run_grid(&g).unwrap();
    assert!(t.cells.is_empty());
    let dir = tempfile::tempdir().unwrap();
    let (results, heatmap) = emit_results(&t, dir.path()).unwrap();
    assert_eq!(std::fs::read_to_string(results).unwrap().lines().count(), 1);
    assert_eq!(std::fs::read_to_string(heatmap).unwrap().lines().count(), 1);
}

#[test]
fn emit_reports_unwritable_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let t = run_grid(&grid(Axis::new(Param::N, vec![]).unwrap(), Axis::new(Param::RhoE, vec![]).unwrap(), Method::Global, 1)).unwrap();
    let err = emit_results(&t, &blocker.join("sub")).unwrap_err();
    assert!(err.to_string().contains("file"), "{err}");
}

#[test]
fn cover_study_modes_run() {
    let study = |mode| CoverStudy {
        rho_in: vec![0.0],
        rho_out: vec![0.0, 0.2],
        mode,
        fixed: FixedParams { n: 9, ..small_fixed() },
        seeds: vec![1],
        threads: 2,
    };
    let gt = run_cover_study(&study(CoverMode::GroundTruth)).unwrap();
    assert_eq!(gt.method, "cover-gt");
    assert_eq!(gt.cell(0.0, 0.0).unwrap().mean_error, 0.0);
    let random = run_cover_study(&study(CoverMode::Random)).unwrap();
    assert_eq!(random.cell(0.0, 0.0).unwrap().mean_error, 0.0);
    let mut bad = study(CoverMode::Random);
    bad.rho_out = vec![0.2, 0.2];
    assert!(run_cover_study(&bad).is_err());
}

fn arb_cell() -> impl Strategy<Value = (f64, f64, f64, f64, f64)> {
    (0.0..100.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..0.5f64, 0.0..1000.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn emitted_results_round_trip_to_six_decimals(cells in prop::collection::vec(arb_cell(), 1..6)) {
        use dmatch::harness::{CellResult, ResultTable};
        let cells: Vec<CellResult> = cells.iter().enumerate().map(|(k, &(row, col, err, sd, it))| CellResult {
            row_value: row + k as f64 * 1000.0,
            col_value: col,
            repetitions: 5,
            completed: 4,
            converged: 3,
            mean_error: err,
            std_error: sd,
            mean_iterations: it,
            mean_wall_secs: sd * 2.0,
            mean_round_secs: sd / 3.0,
            outcomes: vec![],
        }).collect();
        let table = ResultTable {
            method: "dmatch-dense".into(),
            row_param: "n".into(),
            col_param: "rho_e".into(),
            row_values: cells.iter().map(|c| c.row_value).collect(),
            col_values: vec![],
            cells,
        };
        let dir = tempfile::tempdir().unwrap();
        let (results, _) = emit_results(&table, dir.path()).unwrap();
        let parsed = parse_results(&results).unwrap();
        let back = &parsed["dmatch-dense"];
        prop_assert_eq!(back.cells.len(), table.cells.len());
        let close = |a: f64, b: f64| (a - b).abs() <= 5e-7;
        for (a, b) in table.cells.iter().zip(&back.cells) {
            prop_assert!(close(a.row_value, b.row_value) && close(a.col_value, b.col_value));
            prop_assert!(close(a.mean_error, b.mean_error) && close(a.std_error, b.std_error));
            prop_assert!(close(a.mean_iterations, b.mean_iterations));
            prop_assert!(close(a.mean_wall_secs, b.mean_wall_secs) && close(a.mean_round_secs, b.mean_round_secs));
            prop_assert_eq!((a.repetitions, a.completed, a.converged), (b.repetitions, b.completed, b.converged));
        }
    }
}
