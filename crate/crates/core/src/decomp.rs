//! Overlapping vertical strip decomposition.
//!
//! Strip `s` (0-based) spans grid columns `a_s..=b_s`. Its left interface
//! is the column `a_s` (absent for the first strip) and its right interface
//! the column `b_s` (absent for the last one). The nonoverlapping cuts
//! `c_0 = 0 < c_1 < ... < c_N = nx` define node ownership for gluing.

use crate::grid::Grid;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StripDecomposition {
    nx: usize,
    overlap_cells: usize,
    cuts: Vec<usize>,
    strips: Vec<(usize, usize)>,
}

impl StripDecomposition {
    /// Splits `nx` columns into `n` strips overlapping by `overlap_cells`.
    ///
    /// Enforces the width bound `b_s - a_s >= 2 * overlap_cells` for every
    /// strip (through `nx >= 2 * n * overlap_cells`).
    pub fn new(grid: &Grid, n: usize, overlap_cells: usize) -> Result<Self> {
        if n >= 2 && grid.nx < 2 * n * overlap_cells {
            return Err(Error::StripBound(format!(
                "nx = {} < 2 * N * overlap = {}: strips would be narrower than twice the overlap",
                grid.nx,
                2 * n * overlap_cells
            )));
        }
        let d = Self::layout(grid.nx, n, overlap_cells)?;
        if let Some((s, (a, b))) = d
            .strips
            .iter()
            .enumerate()
            .find(|(_, (a, b))| b - a < 2 * overlap_cells)
        {
            return Err(Error::StripBound(format!(
                "strip {s} spans {} cells, less than twice the overlap ({})",
                b - a,
                2 * overlap_cells
            )));
        }
        Ok(d)
    }

    /// Like [`StripDecomposition::new`] but only requires each interface
    /// to sit strictly inside the neighboring strip with one spare column on
    /// each side, so overlaps wider than half a strip are allowed.
    pub fn new_wide_overlap(grid: &Grid, n: usize, overlap_cells: usize) -> Result<Self> {
        Self::layout(grid.nx, n, overlap_cells)
    }

    fn layout(nx: usize, n: usize, overlap_cells: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::StripBound(format!("need at least 2 subdomains, got {n}")));
        }
        if overlap_cells < 2 || overlap_cells % 2 != 0 {
            return Err(Error::StripBound(format!(
                "overlap must be an even number of cells >= 2, got {overlap_cells}"
            )));
        }
        let half = overlap_cells / 2;
        let cuts: Vec<usize> = (0..=n)
            .map(|i| (i as f64 * nx as f64 / n as f64).round() as usize)
            .collect();
        if cuts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::StripBound(format!(
                "{n} subdomains do not fit in {nx} columns"
            )));
        }
        if cuts[1] <= half || nx - cuts[n - 1] <= half {
            return Err(Error::StripBound(format!(
                "end strips are too narrow for an overlap of {overlap_cells} cells"
            )));
        }
        let strips = (1..=n)
            .map(|i| {
                let a = if i == 1 { 0 } else { cuts[i - 1] - half };
                let b = if i == n { nx } else { cuts[i] + half };
                (a, b)
            })
            .collect();
        Ok(Self {
            nx,
            overlap_cells,
            cuts,
            strips,
        })
    }

    pub fn n_subdomains(&self) -> usize {
        self.strips.len()
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn overlap_cells(&self) -> usize {
        self.overlap_cells
    }

    pub fn cuts(&self) -> &[usize] {
        &self.cuts
    }

    /// Column range `(a, b)` of strip `s`.
    pub fn strip(&self, s: usize) -> (usize, usize) {
        self.strips[s]
    }

    pub fn strips(&self) -> &[(usize, usize)] {
        &self.strips
    }

    /// Column of the left interface of strip `s`, if any.
    pub fn left_interface(&self, s: usize) -> Option<usize> {
        (s > 0).then(|| self.strips[s].0)
    }

    /// Column of the right interface of strip `s`, if any.
    pub fn right_interface(&self, s: usize) -> Option<usize> {
        (s + 1 < self.strips.len()).then(|| self.strips[s].1)
    }

    /// Strip owning grid column `i` in the nonoverlapping cut partition.
    pub fn owner(&self, i: usize) -> usize {
        let n = self.strips.len();
        match self.cuts[1..n].binary_search(&i) {
            Ok(pos) => pos + 1,
            Err(pos) => pos,
        }
    }
}
