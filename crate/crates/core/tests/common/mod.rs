//! Small problems and a dense interface-operator oracle shared by the
//! integration tests and the acceptance runner.
#![allow(dead_code)]

use helmdd::decomp::StripDecomposition;
use helmdd::grid::{BoundarySpec, EdgeCondition, Grid, Rect, WavenumberField};
use helmdd::local::{extract_trace, Side};
use helmdd::substructure::{Substructured, TraceVector};
use helmdd::{Complex64, Execution};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};

pub type C = Complex64;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Waveguide-like strip problem on a grid of `nx x ny` cells with
/// `h = 1/ny`: Dirichlet top and bottom, absorbing left and right, with a
/// smooth Robin excitation on the left edge.
pub fn strip_problem(
    n: usize,
    nx: usize,
    ny: usize,
    k: f64,
    overlap: usize,
    execution: Execution,
) -> (Substructured, Vec<C>) {
    let h = 1.0 / ny as f64;
    let grid = Grid::new(Rect::new(0.0, nx as f64 * h, 0.0, 1.0), nx, ny).unwrap();
    let kf = WavenumberField::constant(&grid, k);
    let bc = BoundarySpec {
        left: EdgeCondition::Robin(
            (0..=ny)
                .map(|j| c((std::f64::consts::PI * grid.y(j)).sin(), 0.3 * grid.y(j)))
                .collect(),
        ),
        right: EdgeCondition::Robin(vec![c(0.0, 0.0); ny + 1]),
        bottom: EdgeCondition::Dirichlet0,
        top: EdgeCondition::Dirichlet0,
    };
    let strips = StripDecomposition::new(&grid, n, overlap).unwrap();
    let f = vec![c(0.0, 0.0); grid.n_nodes()];
    (Substructured::new(grid, kf, bc, strips, execution).unwrap(), f)
}

/// The tiny strip problems of the structural checks: `nx = 6N`, `ny = 8`.
pub fn tiny(n: usize) -> (Substructured, Vec<C>) {
    strip_problem(n, 6 * n, 8, 5.0, 2, Execution::Serial)
}

pub fn random_trace(sub: &Substructured, seed: u64) -> TraceVector {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut t = sub.zero_trace();
    for v in t.as_mut_slice() {
        *v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    t
}

pub fn rel(a: &[C], b: &[C]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

pub fn to_dvec(t: &TraceVector) -> DVector<C> {
    DVector::from_column_slice(t.as_slice())
}

/// Dense matrix of `T` assembled column by column from unit Robin data:
/// one local solve per unit vector and the neighbor traces read off with
/// [`extract_trace`]. Independent of the operator code in `substructure`.
pub fn dense_t(sub: &Substructured) -> DMatrix<C> {
    let n = sub.n_subdomains();
    let m = sub.grid().ny + 1;
    let dim = 2 * (n - 1) * m;
    let strips = sub.strips();
    let mut t = DMatrix::zeros(dim, dim);
    let left_block = |s: usize| s - 1;
    let right_block = |s: usize| n - 1 + s;
    for s in 0..n {
        let solver = &sub.solvers()[s];
        for (has, is_left) in [(s >= 1, true), (s + 1 < n, false)] {
            if !has {
                continue;
            }
            let col_block = if is_left { left_block(s) } else { right_block(s) };
            for j in 0..m {
                let mut e = vec![c(0.0, 0.0); m];
                e[j] = c(1.0, 0.0);
                let v = if is_left {
                    solver.solve(Some(&e), None, None).unwrap()
                } else {
                    solver.solve(None, Some(&e), None).unwrap()
                };
                let col = col_block * m + j;
                if s + 1 < n {
                    let column = strips.left_interface(s + 1).unwrap();
                    let tr = extract_trace(&v, column, Side::Left, sub.grid(), sub.wavenumber()).unwrap();
                    for (i, x) in tr.iter().enumerate() {
                        t[(left_block(s + 1) * m + i, col)] = *x;
                    }
                }
                if s >= 1 {
                    let column = strips.right_interface(s - 1).unwrap();
                    let tr = extract_trace(&v, column, Side::Right, sub.grid(), sub.wavenumber()).unwrap();
                    for (i, x) in tr.iter().enumerate() {
                        t[(right_block(s - 1) * m + i, col)] = *x;
                    }
                }
            }
        }
    }
    t
}

/// `(M_l, A_l, M_r, A_r)`: the left-to-left, right-to-left, right-to-right
/// and left-to-right couplings of a dense `T`.
pub struct Blocks {
    pub m_l: DMatrix<C>,
    pub a_l: DMatrix<C>,
    pub m_r: DMatrix<C>,
    pub a_r: DMatrix<C>,
}

pub fn split_blocks(t: &DMatrix<C>) -> Blocks {
    let half = t.nrows() / 2;
    let mask = |rows_left: bool, cols_left: bool| {
        DMatrix::from_fn(t.nrows(), t.ncols(), |i, j| {
            if (i < half) == rows_left && (j < half) == cols_left {
                t[(i, j)]
            } else {
                c(0.0, 0.0)
            }
        })
    };
    Blocks {
        m_l: mask(true, true),
        a_l: mask(true, false),
        m_r: mask(false, false),
        a_r: mask(false, true),
    }
}

pub fn max_abs(m: &DMatrix<C>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Dense double-sweep cascade:
/// `(I - M_l) x = r_l`, `(I - M_r) h_r = A_r x + r_r`, `h_l = M_l x + A_l h_r + r_l`.
pub fn dense_ds(b: &Blocks, r: &DVector<C>) -> DVector<C> {
    let dim = r.len();
    let id = DMatrix::<C>::identity(dim, dim);
    let half = dim / 2;
    let proj = |left: bool| {
        DVector::from_fn(dim, |i, _| if (i < half) == left { r[i] } else { c(0.0, 0.0) })
    };
    let r_l = proj(true);
    let r_r = proj(false);
    // (I - M_l) acts as identity on right blocks, so solving on the full
    // space keeps x supported on the left blocks.
    let x = (&id - &b.m_l).lu().solve(&r_l).unwrap();
    let h_r = (&id - &b.m_r).lu().solve(&(&b.a_r * &x + &r_r)).unwrap();
    let h_l = &b.m_l * &x + &b.a_l * &h_r + &r_l;
    h_l + h_r
}
