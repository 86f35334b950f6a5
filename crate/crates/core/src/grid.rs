//! Uniform square-cell grids, wavenumber fields, physical boundary
//! conditions and the 5-point finite-difference Helmholtz operator.
//!
//! Nodes are `(i, j)` with `0 <= i <= nx` along x and `0 <= j <= ny` along y.
//! Global node numbering is column-major: `i * (ny + 1) + j`, so every
//! vertical grid line is contiguous.
//!
//! Robin rows `(∂n + Ik) u = g` use ghost-node elimination with a centered
//! normal difference. The eliminated row is scaled by 1/2 per ghost so that
//! the assembled matrix stays complex symmetric. Dirichlet nodes carry
//! identity rows and their columns are dropped from neighboring rows.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::banded::{BandedLu, SparseMatrix};
use crate::{Complex64, Error, Result, I};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest denominator accepted for the domain aspect ratio.
pub const MAX_ASPECT_DENOMINATOR: usize = 100;

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
}

impl Grid {
    /// Grid with `nx x ny` square cells covering `domain`.
    pub fn new(domain: Rect, nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 cells per direction, got {nx} x {ny}"
            )));
        }
        if !(domain.width() > 0.0 && domain.height() > 0.0) {
            return Err(Error::InvalidGrid("empty domain".into()));
        }
        let hx = domain.width() / nx as f64;
        let hy = domain.height() / ny as f64;
        if ((hx - hy) / hx).abs() > 1e-12 {
            return Err(Error::InvalidGrid(format!(
                "cells are not square: hx = {hx}, hy = {hy}"
            )));
        }
        Ok(Self {
            x0: domain.x0,
            x1: domain.x1,
            y0: domain.y0,
            y1: domain.y1,
            nx,
            ny,
            h: hx,
        })
    }

    /// Coarsest square-cell grid with at least `nppwl` points per shortest
    /// wavelength `2π / k_max`.
    pub fn build(domain: Rect, k_max: f64, nppwl: f64) -> Result<Self> {
        if !(k_max > 0.0) || !(nppwl >= 2.0) {
            return Err(Error::InvalidGrid(format!(
                "need k_max > 0 and nppwl >= 2, got k_max = {k_max}, nppwl = {nppwl}"
            )));
        }
        let h_max = 2.0 * std::f64::consts::PI / k_max / nppwl;
        let (p, q) = aspect_ratio(domain.width(), domain.height()).ok_or(Error::NonCommensurate {
            width: domain.width(),
            height: domain.height(),
            max_denominator: MAX_ASPECT_DENOMINATOR,
        })?;
        let ny_min = (domain.height() / h_max - 1e-9).ceil().max(2.0) as usize;
        let mut ny = ny_min.div_ceil(q) * q;
        let mut nx = ny / q * p;
        while nx < 2 {
            ny += q;
            nx = ny / q * p;
        }
        Grid::new(domain, nx, ny)
    }

    pub fn domain(&self) -> Rect {
        Rect::new(self.x0, self.x1, self.y0, self.y1)
    }

    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    /// Nodes on one vertical grid line.
    pub fn column_len(&self) -> usize {
        self.ny + 1
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * (self.ny + 1) + j
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx {
            self.x1
        } else {
            self.x0 + i as f64 * self.h
        }
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        if j == self.ny {
            self.y1
        } else {
            self.y0 + j as f64 * self.h
        }
    }

    /// Samples `f(x, y)` at every node (column-major).
    pub fn sample(&self, f: impl Fn(f64, f64) -> Complex64) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.n_nodes());
        for i in 0..=self.nx {
            for j in 0..=self.ny {
                out.push(f(self.x(i), self.y(j)));
            }
        }
        out
    }
}

/// Finds `p / q == width / height` with the smallest `q <= MAX_ASPECT_DENOMINATOR`.
fn aspect_ratio(width: f64, height: f64) -> Option<(usize, usize)> {
    let r = width / height;
    (1..=MAX_ASPECT_DENOMINATOR).find_map(|q| {
        let p = (r * q as f64).round();
        (p >= 1.0 && ((p - r * q as f64) / p).abs() <= 1e-12).then_some((p as usize, q))
    })
}

/// Straight velocity interfaces of the wedge model, each given by its end
/// points at `x = x0` and `x = x1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WedgeGeometry {
    pub upper: [(f64, f64); 2],
    pub lower: [(f64, f64); 2],
    /// Velocities from the top region down.
    pub velocities: [f64; 3],
}

impl Default for WedgeGeometry {
    fn default() -> Self {
        Self {
            upper: [(0.0, 800.0), (600.0, 600.0)],
            lower: [(0.0, 500.0), (600.0, 300.0)],
            velocities: [2000.0, 1500.0, 3000.0],
        }
    }
}

impl WedgeGeometry {
    fn line_y(line: &[(f64, f64); 2], x: f64) -> f64 {
        let [(xa, ya), (xb, yb)] = *line;
        ya + (yb - ya) * (x - xa) / (xb - xa)
    }

    /// Velocity at `(x, y)`. Points on an interface belong to the region above.
    pub fn velocity(&self, x: f64, y: f64) -> f64 {
        let eps = 1e-9 * (1.0 + y.abs());
        if y >= Self::line_y(&self.upper, x) - eps {
            self.velocities[0]
        } else if y >= Self::line_y(&self.lower, x) - eps {
            self.velocities[1]
        } else {
            self.velocities[2]
        }
    }

    pub fn min_velocity(&self) -> f64 {
        self.velocities.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum VelocityModel {
    Homogeneous { k: f64 },
    Wedge { omega: f64, geometry: WedgeGeometry },
}

impl VelocityModel {
    pub fn k_max(&self) -> f64 {
        match self {
            VelocityModel::Homogeneous { k } => *k,
            VelocityModel::Wedge { omega, geometry } => omega / geometry.min_velocity(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct WavenumberField {
    pub values: Vec<Complex64>,
    pub omega: Option<f64>,
    pub description: String,
}

impl WavenumberField {
    pub fn constant(grid: &Grid, k: f64) -> Self {
        Self {
            values: vec![Complex64::new(k, 0.0); grid.n_nodes()],
            omega: None,
            description: format!("homogeneous k={k}"),
        }
    }

    pub fn build(grid: &Grid, model: &VelocityModel) -> Result<Self> {
        let field = match model {
            VelocityModel::Homogeneous { k } => Self::constant(grid, *k),
            VelocityModel::Wedge { omega, geometry } => Self {
                values: grid.sample(|x, y| Complex64::new(omega / geometry.velocity(x, y), 0.0)),
                omega: Some(*omega),
                description: format!("wedge omega={omega}"),
            },
        };
        if field.values.iter().any(|k| !k.is_finite() || k.norm() == 0.0) {
            return Err(Error::InvalidWavenumber(
                "wavenumber must be finite and nonzero at every node".into(),
            ));
        }
        Ok(field)
    }

    #[inline]
    pub fn at(&self, grid: &Grid, i: usize, j: usize) -> Complex64 {
        self.values[grid.index(i, j)]
    }
}

/// Physical edges of the rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

/// Condition on one edge. Robin data is sampled at the edge nodes, ordered
/// by increasing `j` on vertical edges and by increasing `i` on horizontal ones.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeCondition {
    Dirichlet0,
    Robin(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub left: EdgeCondition,
    pub right: EdgeCondition,
    pub bottom: EdgeCondition,
    pub top: EdgeCondition,
}

impl BoundarySpec {
    /// Homogeneous Robin condition on every edge.
    pub fn absorbing(grid: &Grid) -> Self {
        let vert = || EdgeCondition::Robin(vec![ZERO; grid.ny + 1]);
        let horiz = || EdgeCondition::Robin(vec![ZERO; grid.nx + 1]);
        Self {
            left: vert(),
            right: vert(),
            bottom: horiz(),
            top: horiz(),
        }
    }

    pub fn edge(&self, edge: Edge) -> &EdgeCondition {
        match edge {
            Edge::Left => &self.left,
            Edge::Right => &self.right,
            Edge::Bottom => &self.bottom,
            Edge::Top => &self.top,
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        for (edge, len) in [
            (Edge::Left, grid.ny + 1),
            (Edge::Right, grid.ny + 1),
            (Edge::Bottom, grid.nx + 1),
            (Edge::Top, grid.nx + 1),
        ] {
            if let EdgeCondition::Robin(g) = self.edge(edge) {
                if g.len() != len {
                    return Err(Error::Shape(format!(
                        "{edge:?} edge data has {} values, expected {len}",
                        g.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Copy with all Robin data set to zero.
    pub fn homogeneous(&self) -> Self {
        let zero = |c: &EdgeCondition| match c {
            EdgeCondition::Dirichlet0 => EdgeCondition::Dirichlet0,
            EdgeCondition::Robin(g) => EdgeCondition::Robin(vec![ZERO; g.len()]),
        };
        Self {
            left: zero(&self.left),
            right: zero(&self.right),
            bottom: zero(&self.bottom),
            top: zero(&self.top),
        }
    }

    /// True when node `(i, j)` lies on a Dirichlet edge (corners included).
    pub fn is_dirichlet(&self, grid: &Grid, i: usize, j: usize) -> bool {
        let d = |c: &EdgeCondition| matches!(c, EdgeCondition::Dirichlet0);
        (i == 0 && d(&self.left))
            || (i == grid.nx && d(&self.right))
            || (j == 0 && d(&self.bottom))
            || (j == grid.ny && d(&self.top))
    }

    fn robin_data(&self, edge: Edge, pos: usize) -> Complex64 {
        match self.edge(edge) {
            EdgeCondition::Robin(g) => g[pos],
            EdgeCondition::Dirichlet0 => ZERO,
        }
    }
}

/// Unknown ordering inside a block of columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeOrdering {
    /// Vertical lines contiguous; bandwidth `ny + 1`.
    ColumnMajor,
    /// Horizontal lines contiguous; bandwidth equal to the block column count.
    RowMajor,
}

/// A contiguous range of grid columns `a..=b` with its unknown numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ColumnBlock {
    pub a: usize,
    pub b: usize,
    pub ny: usize,
    pub ordering: NodeOrdering,
}

impl ColumnBlock {
    /// Block with the ordering that gives the narrower band.
    pub fn narrowest(a: usize, b: usize, ny: usize) -> Self {
        let ordering = if b - a < ny {
            NodeOrdering::RowMajor
        } else {
            NodeOrdering::ColumnMajor
        };
        Self { a, b, ny, ordering }
    }

    pub fn n_cols(&self) -> usize {
        self.b - self.a + 1
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cols() * (self.ny + 1)
    }

    /// Unknown index of global node `(i, j)`, `a <= i <= b`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        let il = i - self.a;
        match self.ordering {
            NodeOrdering::ColumnMajor => il * (self.ny + 1) + j,
            NodeOrdering::RowMajor => j * self.n_cols() + il,
        }
    }
}

/// Assembled block operator together with the data needed to form its
/// right-hand side.
pub(crate) struct BlockOperator {
    pub matrix: SparseMatrix,
    /// Row scaling applied to the unscaled stencil; zero on Dirichlet rows.
    pub row_scale: Vec<f64>,
    /// Contribution of physical Robin data to the right-hand side.
    pub boundary_rhs: Vec<Complex64>,
}

/// Assembles the Helmholtz operator on a block of columns. The block ends
/// that are not physical edges (`a > 0`, `b < nx`) carry Robin interface
/// rows with the same ghost elimination as physical Robin edges.
pub(crate) fn assemble_block(
    grid: &Grid,
    k: &WavenumberField,
    bc: &BoundarySpec,
    block: ColumnBlock,
) -> BlockOperator {
    let h = grid.h;
    let inv_h2 = 1.0 / (h * h);
    let n = block.n_nodes();
    let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); n];
    let mut row_scale = vec![0.0; n];
    let mut boundary_rhs = vec![ZERO; n];

    for i in block.a..=block.b {
        for j in 0..=grid.ny {
            let r = block.index(i, j);
            if bc.is_dirichlet(grid, i, j) {
                rows[r].push((r, Complex64::new(1.0, 0.0)));
                continue;
            }
            let kk = k.at(grid, i, j);
            let ghost_w = i == block.a;
            let ghost_e = i == block.b;
            let ghost_s = j == 0;
            let ghost_n = j == grid.ny;
            let n_ghost = [ghost_w, ghost_e, ghost_s, ghost_n]
                .iter()
                .filter(|&&g| g)
                .count();
            let scale = 0.5f64.powi(n_ghost as i32);
            row_scale[r] = scale;

            let mut center = Complex64::new(4.0 * inv_h2, 0.0) - kk * kk;
            center += (2.0 * n_ghost as f64 / h) * I * kk;
            rows[r].push((r, center * scale));

            let mut neighbor = |ni: usize, nj: usize, doubled: bool| {
                if bc.is_dirichlet(grid, ni, nj) {
                    return;
                }
                let w = if doubled { 2.0 } else { 1.0 };
                rows[r].push((block.index(ni, nj), Complex64::new(-w * inv_h2 * scale, 0.0)));
            };
            if !ghost_w {
                neighbor(i - 1, j, ghost_e);
            }
            if !ghost_e {
                neighbor(i + 1, j, ghost_w);
            }
            if !ghost_s {
                neighbor(i, j - 1, ghost_n);
            }
            if !ghost_n {
                neighbor(i, j + 1, ghost_s);
            }

            let mut g = ZERO;
            if ghost_w && i == 0 {
                g += bc.robin_data(Edge::Left, j);
            }
            if ghost_e && i == grid.nx {
                g += bc.robin_data(Edge::Right, j);
            }
            if ghost_s {
                g += bc.robin_data(Edge::Bottom, i);
            }
            if ghost_n {
                g += bc.robin_data(Edge::Top, i);
            }
            boundary_rhs[r] = g * (2.0 * scale / h);
        }
    }
    BlockOperator {
        matrix: SparseMatrix::from_rows(rows),
        row_scale,
        boundary_rhs,
    }
}

/// The global discrete Helmholtz system in column-major node ordering.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<Complex64>,
    nx: usize,
    ny: usize,
}

impl SparseSystem {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Direct banded solve. The factorization uses whichever of column- or
    /// row-major ordering yields the narrower band; the returned field is
    /// column-major.
    pub fn solve_direct(&self) -> Result<Vec<Complex64>> {
        let (nx, ny) = (self.nx, self.ny);
        let col_major = |i: usize, j: usize| i * (ny + 1) + j;
        if nx >= ny {
            let lu = BandedLu::factorize(&self.matrix)?;
            let mut x = self.rhs.clone();
            lu.solve_in_place(&mut x);
            return Ok(x);
        }
        let mut perm = vec![0; self.dim()];
        for i in 0..=nx {
            for j in 0..=ny {
                perm[col_major(i, j)] = j * (nx + 1) + i;
            }
        }
        let lu = BandedLu::factorize(&self.matrix.permuted(&perm))?;
        let mut y = vec![ZERO; self.dim()];
        for (old, &new) in perm.iter().enumerate() {
            y[new] = self.rhs[old];
        }
        lu.solve_in_place(&mut y);
        Ok(perm.iter().map(|&new| y[new]).collect())
    }

    /// Relative residual `||b - A x|| / ||b||` (absolute when `b = 0`).
    pub fn relative_residual(&self, x: &[Complex64]) -> f64 {
        let ax = self.matrix.matvec(x);
        let r: f64 = ax
            .iter()
            .zip(&self.rhs)
            .map(|(p, q)| (q - p).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let b: f64 = self.rhs.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if b > 0.0 {
            r / b
        } else {
            r
        }
    }
}

/// Assembles `(-Δ - k^2) u = f` with the physical boundary conditions.
pub fn assemble_global(
    grid: &Grid,
    k: &WavenumberField,
    bc: &BoundarySpec,
    f: &[Complex64],
) -> Result<SparseSystem> {
    if k.values.len() != grid.n_nodes() || f.len() != grid.n_nodes() {
        return Err(Error::Shape(format!(
            "grid has {} nodes, wavenumber has {}, source has {}",
            grid.n_nodes(),
            k.values.len(),
            f.len()
        )));
    }
    bc.validate(grid)?;
    let block = ColumnBlock {
        a: 0,
        b: grid.nx,
        ny: grid.ny,
        ordering: NodeOrdering::ColumnMajor,
    };
    let op = assemble_block(grid, k, bc, block);
    let rhs = f
        .iter()
        .zip(&op.row_scale)
        .zip(&op.boundary_rhs)
        .map(|((fv, s), g)| fv * *s + g)
        .collect();
    Ok(SparseSystem {
        matrix: op.matrix,
        rhs,
        nx: grid.nx,
        ny: grid.ny,
    })
}

/// Writes a nodal field: a header line `nx ny h`, then one `re im` line per
/// node in column-major order.
pub fn write_field(w: &mut impl Write, grid: &Grid, u: &[Complex64]) -> Result<()> {
    if u.len() != grid.n_nodes() {
        return Err(Error::Shape(format!(
            "field has {} values, grid has {} nodes",
            u.len(),
            grid.n_nodes()
        )));
    }
    writeln!(w, "{} {} {:e}", grid.nx, grid.ny, grid.h)?;
    for v in u {
        writeln!(w, "{:e} {:e}", v.re, v.im)?;
    }
    Ok(())
}

pub fn write_field_file(path: &Path, grid: &Grid, u: &[Complex64]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_field(&mut w, grid, u)?;
    w.flush()?;
    Ok(())
}

/// Reads a field written by [`write_field`], returning `(nx, ny, h, values)`.
pub fn read_field(r: impl BufRead) -> Result<(usize, usize, f64, Vec<Complex64>)> {
    let bad = |msg: &str| Error::Config(format!("malformed field file: {msg}"));
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| bad("empty"))??;
    let mut it = header.split_whitespace();
    let mut next = |what: &str| it.next().ok_or_else(|| bad(what)).map(str::to_owned);
    let nx: usize = next("nx")?.parse().map_err(|_| bad("nx"))?;
    let ny: usize = next("ny")?.parse().map_err(|_| bad("ny"))?;
    let h: f64 = next("h")?.parse().map_err(|_| bad("h"))?;
    let mut values = Vec::with_capacity((nx + 1) * (ny + 1));
    for line in lines {
        let line = line?;
        let mut parts = line.split_whitespace();
        let re: f64 = parts.next().ok_or_else(|| bad("re"))?.parse().map_err(|_| bad("re"))?;
        let im: f64 = parts.next().ok_or_else(|| bad("im"))?.parse().map_err(|_| bad("im"))?;
        values.push(Complex64::new(re, im));
    }
    if values.len() != (nx + 1) * (ny + 1) {
        return Err(bad("value count does not match header"));
    }
    Ok((nx, ny, h, values))
}
