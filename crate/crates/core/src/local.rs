//! Subdomain solution operators and interface traces.
//!
//! A [`LocalSolver`] owns the banded LU of one strip's Helmholtz matrix.
//! The strip's interface columns carry Robin rows `(∂n + Ik) v = h` built
//! with the same ghost elimination as physical Robin edges, and
//! [`extract_trace`] evaluates `(∂n + Ik) v` with the centered difference
//! that this elimination removes. Feeding the traces of the global discrete
//! solution back into a local solve therefore reproduces that solution
//! exactly (up to round-off).

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::banded::BandedLu;
use crate::decomp::StripDecomposition;
use crate::grid::{assemble_block, BoundarySpec, ColumnBlock, Grid, WavenumberField};
use crate::{Complex64, Error, Result, I};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Which interface of a strip a trace belongs to. The outward normal of the
/// strip points towards `-x` on the left interface and `+x` on the right one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Robin datum on one interface: one value per node of a vertical grid line.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub strip: usize,
    pub side: Side,
    pub values: Vec<Complex64>,
}

/// Solution of a local problem on the columns `a..=b` of one strip.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalField {
    block: ColumnBlock,
    values: Vec<Complex64>,
}

impl LocalField {
    pub fn columns(&self) -> (usize, usize) {
        (self.block.a, self.block.b)
    }

    /// Value at global node `(i, j)`, `a <= i <= b`.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.block.index(i, j)]
    }

    pub fn ny(&self) -> usize {
        self.block.ny
    }
}

#[derive(Debug)]
pub struct LocalSolver {
    strip: usize,
    block: ColumnBlock,
    h: f64,
    lu: BandedLu,
    row_scale: Vec<f64>,
    boundary_rhs: Vec<Complex64>,
    has_left: bool,
    has_right: bool,
    global_nodes: usize,
    solves: AtomicUsize,
}

impl LocalSolver {
    /// Assembles and factorizes the local problem of strip `s`.
    pub fn factorize(
        grid: &Grid,
        k: &WavenumberField,
        bc: &BoundarySpec,
        strips: &StripDecomposition,
        s: usize,
    ) -> Result<Self> {
        if s >= strips.n_subdomains() {
            return Err(Error::Shape(format!(
                "strip index {s} out of range for {} subdomains",
                strips.n_subdomains()
            )));
        }
        if strips.nx() != grid.nx {
            return Err(Error::Shape("decomposition was built for another grid".into()));
        }
        bc.validate(grid)?;
        let (a, b) = strips.strip(s);
        let block = ColumnBlock::narrowest(a, b, grid.ny);
        let op = assemble_block(grid, k, bc, block);
        let lu = BandedLu::factorize(&op.matrix).map_err(|e| match e {
            Error::Singular { row, .. } => Error::Singular {
                context: format!("local matrix of strip {s}"),
                row,
            },
            other => other,
        })?;
        Ok(Self {
            strip: s,
            block,
            h: grid.h,
            lu,
            row_scale: op.row_scale,
            boundary_rhs: op.boundary_rhs,
            has_left: strips.left_interface(s).is_some(),
            has_right: strips.right_interface(s).is_some(),
            global_nodes: grid.n_nodes(),
            solves: AtomicUsize::new(0),
        })
    }

    pub fn strip(&self) -> usize {
        self.strip
    }

    pub fn columns(&self) -> (usize, usize) {
        (self.block.a, self.block.b)
    }

    pub fn has_left(&self) -> bool {
        self.has_left
    }

    pub fn has_right(&self) -> bool {
        self.has_right
    }

    pub fn n_unknowns(&self) -> usize {
        self.block.n_nodes()
    }

    /// `(kl, ku)` of the factorized local matrix.
    pub fn bandwidths(&self) -> (usize, usize) {
        self.lu.bandwidths()
    }

    /// Number of solves performed so far.
    pub fn solve_count(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    /// Solves the local problem `S(h_l, h_r, f)`.
    ///
    /// `h_l`/`h_r` are the Robin data on the left/right interface and must be
    /// given exactly for the interfaces this strip has (`None` stands for
    /// zero data). `f`, when present, is the global nodal source; it also
    /// switches on the physical boundary data of the edges the strip
    /// touches. With `f = None` the physical boundary conditions are
    /// homogeneous.
    pub fn solve(
        &self,
        h_l: Option<&[Complex64]>,
        h_r: Option<&[Complex64]>,
        f: Option<&[Complex64]>,
    ) -> Result<LocalField> {
        let ny = self.block.ny;
        if h_l.is_some() && !self.has_left {
            return Err(Error::Shape(format!("strip {} has no left interface", self.strip)));
        }
        if h_r.is_some() && !self.has_right {
            return Err(Error::Shape(format!("strip {} has no right interface", self.strip)));
        }
        for t in [h_l, h_r].into_iter().flatten() {
            if t.len() != ny + 1 {
                return Err(Error::Shape(format!(
                    "trace has {} values, interface has {}",
                    t.len(),
                    ny + 1
                )));
            }
        }

        let mut rhs = match f {
            Some(f) => {
                if f.len() != self.global_nodes {
                    return Err(Error::Shape("source does not match the grid".into()));
                }
                let mut rhs = self.boundary_rhs.clone();
                for i in self.block.a..=self.block.b {
                    for j in 0..=ny {
                        let r = self.block.index(i, j);
                        rhs[r] += f[i * (ny + 1) + j] * self.row_scale[r];
                    }
                }
                rhs
            }
            None => vec![ZERO; self.block.n_nodes()],
        };
        let w = 2.0 / self.h;
        if let Some(t) = h_l {
            for (j, v) in t.iter().enumerate() {
                let r = self.block.index(self.block.a, j);
                rhs[r] += v * (w * self.row_scale[r]);
            }
        }
        if let Some(t) = h_r {
            for (j, v) in t.iter().enumerate() {
                let r = self.block.index(self.block.b, j);
                rhs[r] += v * (w * self.row_scale[r]);
            }
        }
        self.lu.solve_in_place(&mut rhs);
        self.solves.fetch_add(1, Ordering::Relaxed);
        Ok(LocalField {
            block: self.block,
            values: rhs,
        })
    }
}

/// Robin datum `(∂n + Ik) v` on grid column `column`, where `∂n` is the
/// derivative along the outward normal of the strip whose `side` interface
/// lies on that column. The normal derivative is the centered difference
/// across the column, so `column` must be strictly inside `v`'s strip.
pub fn extract_trace(
    v: &LocalField,
    column: usize,
    side: Side,
    grid: &Grid,
    k: &WavenumberField,
) -> Result<Vec<Complex64>> {
    let (a, b) = v.columns();
    if column <= a || column >= b {
        return Err(Error::Shape(format!(
            "interface column {column} is not strictly inside columns {a}..={b}"
        )));
    }
    let sign = match side {
        Side::Left => -1.0,
        Side::Right => 1.0,
    };
    let inv_2h = 0.5 / grid.h;
    Ok((0..=grid.ny)
        .map(|j| {
            let dn = (v.at(column + 1, j) - v.at(column - 1, j)) * (sign * inv_2h);
            dn + I * k.at(grid, column, j) * v.at(column, j)
        })
        .collect())
}

/// Restricts a global column-major field to the columns of a strip, in the
/// same layout as a [`LocalField`] produced by `solver`.
pub fn restrict(solver: &LocalSolver, grid: &Grid, u: &[Complex64]) -> LocalField {
    let block = solver.block;
    let mut values = vec![ZERO; block.n_nodes()];
    for i in block.a..=block.b {
        for j in 0..=grid.ny {
            values[block.index(i, j)] = u[grid.index(i, j)];
        }
    }
    LocalField { block, values }
}
