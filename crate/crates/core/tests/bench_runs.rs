mod common;

use common::*;
use helmdd::bench::{self, ProblemKind, ProblemSpec, SolverKind, Vary};
use helmdd::decomp::StripDecomposition;
use helmdd::grid::{Grid, Rect};
use helmdd::substructure::Preconditioner;
use proptest::prelude::*;

fn small(problem: ProblemKind, n: usize) -> ProblemSpec {
    ProblemSpec {
        k: Some(6.0),
        subdomains: n,
        nppwl: 10.0,
        overlap_cells: Some(2),
        ..ProblemSpec::new(problem)
    }
}

#[test]
fn converged_runs_are_close_to_direct_solve() {
    for problem in [ProblemKind::Waveguide, ProblemKind::Cavity] {
        for p in Preconditioner::ALL {
            for tol in [1e-4, 1e-8] {
                let spec = ProblemSpec {
                    precond: p,
                    tol,
                    check_direct: true,
                    ..small(problem, 4)
                };
                let r = bench::run(&spec).unwrap();
                assert!(r.converged);
                let err = r.direct_error.unwrap();
                assert!(err <= 100.0 * tol, "{problem:?} {} tol {tol}: {err}", p.name());
            }
        }
    }
}

#[test]
fn single_threaded_runs_are_deterministic() {
    let spec = ProblemSpec {
        precond: Preconditioner::Ds,
        ..small(ProblemKind::Cavity, 3)
    };
    let a = bench::run(&spec).unwrap();
    let b = bench::run(&spec).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(a.solution, b.solution);
    let par = bench::run(&ProblemSpec { parallel: true, ..spec }).unwrap();
    assert_eq!(a.solution, par.solution);
}

#[test]
fn counts_follow_history() {
    let spec = small(ProblemKind::Waveguide, 3);
    let r = bench::run(&spec).unwrap();
    let first = |tol: f64| r.history.iter().position(|&v| v <= tol);
    assert_eq!(r.iterations, first(spec.tol));
    assert_eq!(r.iterations_secondary, first(bench::SECONDARY_TOL));
    assert_eq!(r.history[0], 1.0);
}

#[test]
fn overflow_is_reported() {
    let spec = ProblemSpec {
        max_iters: 2,
        precond: Preconditioner::Jacobi,
        ..small(ProblemKind::Waveguide, 6)
    };
    let r = bench::run(&spec).unwrap();
    assert!(!r.converged);
    assert_eq!(r.iterations, None);
    assert_eq!(r.label(), "+2");
}

#[test]
fn fixed_point_solver_agrees_with_gmres() {
    let base = ProblemSpec {
        tol: 1e-9,
        ..small(ProblemKind::Waveguide, 3)
    };
    let g = bench::run(&base).unwrap();
    let f = bench::run(&ProblemSpec {
        solver: SolverKind::FixedPoint,
        ..base
    })
    .unwrap();
    assert!(f.converged);
    assert!(rel(&f.solution, &g.solution) <= 1e-7);
}

#[test]
fn overlap_sweep_table() {
    let base = small(ProblemKind::Waveguide, 3);
    let table = bench::sweep_study(&base, Vary::Overlap, &[2, 4], &[Preconditioner::Osds]).unwrap();
    let csv = table.to_csv();
    assert!(csv.starts_with("overlap_cells,osds,osds_1e-3\n"));
    assert_eq!(csv.lines().count(), 3);
    assert!(table.get(4, Preconditioner::Osds).is_some());
    assert!(table.get(4, Preconditioner::Jacobi).is_none());
}

#[test]
fn sweep_output_files() {
    let dir = std::env::temp_dir().join(format!("helmdd-sweep-{}", std::process::id()));
    let base = small(ProblemKind::Cavity, 2);
    let table = bench::sweep_study(&base, Vary::Subdomains, &[2, 3], &Preconditioner::ALL).unwrap();
    bench::write_study(&dir, &base, &table).unwrap();
    let csv = std::fs::read_to_string(dir.join("table.csv")).unwrap();
    assert_eq!(csv, table.to_csv());
    let manifest = std::fs::read_to_string(dir.join("manifest.toml")).unwrap();
    assert!(manifest.contains("cavity"));
    std::fs::remove_dir_all(&dir).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Strips cover the grid, interfaces sit inside their neighbors, and
    /// only the end strips lack an interface.
    #[test]
    fn decomposition_invariants(cells in 4usize..40, n in 2usize..8, half in 1usize..4) {
        let nx = cells * n;
        let grid = Grid::new(Rect::new(0.0, nx as f64, 0.0, 4.0), nx, 4).unwrap();
        let Ok(d) = StripDecomposition::new(&grid, n, 2 * half) else {
            return Ok(());
        };
        let strips = d.strips();
        prop_assert_eq!(strips[0].0, 0);
        prop_assert_eq!(strips[n - 1].1, nx);
        for i in 0..=nx {
            prop_assert!(strips.iter().any(|&(a, b)| a <= i && i <= b));
        }
        for s in 0..n {
            prop_assert_eq!(d.left_interface(s).is_none(), s == 0);
            prop_assert_eq!(d.right_interface(s).is_none(), s == n - 1);
            if let Some(col) = d.left_interface(s) {
                let (a, b) = strips[s - 1];
                prop_assert!(a < col && col < b);
            }
            if let Some(col) = d.right_interface(s) {
                let (a, b) = strips[s + 1];
                prop_assert!(a < col && col < b);
            }
        }
    }
}
