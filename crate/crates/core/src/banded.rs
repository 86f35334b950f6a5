//! Compressed sparse rows and a banded LU factorization with partial pivoting.
//!
//! The LU follows the classic unblocked `gbtf2` scheme: the band is stored
//! column by column with `kl` extra superdiagonals reserved for the fill
//! produced by row interchanges.

use crate::{Complex64, Error, Result};

/// Square complex sparse matrix in CSR layout.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<Complex64>,
}

impl SparseMatrix {
    /// Builds a matrix from per-row `(column, value)` lists. Duplicate
    /// columns within a row are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, Complex64)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                debug_assert!(c < dim);
                if cols.len() > *row_ptr.last().unwrap() && *cols.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates over the stored entries of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// Entry `(r, c)`, zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// Lower and upper bandwidths `(kl, ku)`.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for r in 0..self.dim {
            for (c, _) in self.row(r) {
                if c < r {
                    kl = kl.max(r - c);
                } else {
                    ku = ku.max(c - r);
                }
            }
        }
        (kl, ku)
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// Returns `P A P^T` where `perm[old] = new`.
    pub fn permuted(&self, perm: &[usize]) -> SparseMatrix {
        assert_eq!(perm.len(), self.dim);
        let mut rows = vec![Vec::new(); self.dim];
        for r in 0..self.dim {
            rows[perm[r]] = self.row(r).map(|(c, v)| (perm[c], v)).collect();
        }
        SparseMatrix::from_rows(rows)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// LU factorization `P A = L U` of a banded matrix.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    /// Column-major band storage, `ldab = 2 kl + ku + 1` entries per column.
    ab: Vec<Complex64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    #[inline]
    fn ldab(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> usize {
        // valid for c - kl - ku <= r <= c + kl
        c * self.ldab() + self.kl + self.ku + r - c
    }

    /// Factorizes a sparse matrix whose nonzeros lie inside its bandwidth.
    pub fn factorize(a: &SparseMatrix) -> Result<Self> {
        let n = a.dim();
        let (kl, ku) = a.bandwidths();
        let ldab = 2 * kl + ku + 1;
        let mut lu = BandedLu {
            n,
            kl,
            ku,
            ab: vec![Complex64::new(0.0, 0.0); ldab * n],
            ipiv: vec![0; n],
        };
        for r in 0..n {
            for (c, v) in a.row(r) {
                let idx = lu.at(r, c);
                lu.ab[idx] = v;
            }
        }
        lu.factor_in_place()?;
        Ok(lu)
    }

    fn factor_in_place(&mut self) -> Result<()> {
        let n = self.n;
        let kl = self.kl;
        let kv = self.kl + self.ku;
        let ldab = self.ldab();
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            // Pivot search in column j, rows j..=j+km.
            let col = j * ldab + kv;
            let mut p = 0;
            let mut best = -1.0;
            for t in 0..=km {
                let m = self.ab[col + t].norm_sqr();
                if m > best {
                    best = m;
                    p = t;
                }
            }
            self.ipiv[j] = j + p;
            if best == 0.0 {
                return Err(Error::Singular {
                    context: "banded LU".into(),
                    row: j,
                });
            }
            ju = ju.max((j + self.ku + p).min(n - 1));
            if p != 0 {
                for c in j..=ju {
                    let base = c * ldab + kv;
                    // rows j and j+p in column c
                    self.ab.swap(base + j - c, base + j + p - c);
                }
            }
            let pivot = self.ab[col];
            let inv = Complex64::new(1.0, 0.0) / pivot;
            for t in 1..=km {
                self.ab[col + t] *= inv;
            }
            if km == 0 {
                continue;
            }
            let (head, tail) = self.ab.split_at_mut((j + 1) * ldab);
            let mult = &head[col + 1..col + 1 + km];
            for c in (j + 1)..=ju {
                let base = (c - j - 1) * ldab + kv;
                let u = tail[base + j - c];
                if u.re == 0.0 && u.im == 0.0 {
                    continue;
                }
                let dst = &mut tail[base + j + 1 - c..base + j + 1 - c + km];
                for (d, m) in dst.iter_mut().zip(mult) {
                    *d -= m * u;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    /// Overwrites `b` with `A^{-1} b`. Reentrant: only `b` is mutated.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let kv = self.kl + self.ku;
        let ldab = self.ldab();
        // L y = P b
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = self.kl.min(n - 1 - j);
            let bj = b[j];
            if km == 0 || (bj.re == 0.0 && bj.im == 0.0) {
                continue;
            }
            let col = j * ldab + kv;
            for (t, m) in self.ab[col + 1..col + 1 + km].iter().enumerate() {
                b[j + 1 + t] -= m * bj;
            }
        }
        // U x = y
        for j in (0..n).rev() {
            let col = j * ldab + kv;
            b[j] /= self.ab[col];
            let bj = b[j];
            if bj.re == 0.0 && bj.im == 0.0 {
                continue;
            }
            let top = j.saturating_sub(kv);
            for r in top..j {
                b[r] -= self.ab[col + r - j] * bj;
            }
        }
    }

    /// Dense reconstruction of `A` from the stored factors; intended for
    /// verifying small factorizations.
    pub fn reconstruct(&self) -> Vec<Vec<Complex64>> {
        let n = self.n;
        let zero = Complex64::new(0.0, 0.0);
        // Start from U, then undo each elimination step in reverse order:
        // A = P_0 L_0 P_1 L_1 ... U.
        let mut m = vec![vec![zero; n]; n];
        for c in 0..n {
            for r in c.saturating_sub(self.kl + self.ku)..=c {
                m[r][c] = self.ab[self.at(r, c)];
            }
        }
        for j in (0..n).rev() {
            let km = self.kl.min(n - 1 - j);
            for t in 1..=km {
                let l = self.ab[self.at(j + t, j)];
                for c in 0..n {
                    let v = m[j][c];
                    m[j + t][c] += l * v;
                }
            }
            let p = self.ipiv[j];
            if p != j {
                m.swap(j, p);
            }
        }
        m
    }
}
