//! The substructured (interface) formulation of the overlapping Schwarz
//! method and its sweeping preconditioners.
//!
//! Unknowns are the Robin traces `h = (h_{2,l}, ..., h_{N,l}, h_{1,r}, ...,
//! h_{N-1,r})` (1-based strip numbers). With `S_i` the local solution
//! operator and `B_{i,l}`, `B_{i,r}` the interface Robin operators,
//!
//! ```text
//! T(h)_{i+1,l} = B_{i+1,l} S_i(h_{i,l}, h_{i,r}, 0)
//! T(h)_{i-1,r} = B_{i-1,r} S_i(h_{i,l}, h_{i,r}, 0)
//! ```
//!
//! and the discrete solution solves `(Id - T) h = G`. `T_OSDS` keeps only the
//! same-direction transmission (`h_{i,l}` feeding `h_{i+1,l}` and `h_{i,r}`
//! feeding `h_{i-1,r}`), which makes it nilpotent of order `N - 1`.
//!
//! Internally strips are 0-based: strip `s` has a left trace when `s >= 1`
//! and a right trace when `s <= N - 2`.

use rayon::prelude::*;

use crate::decomp::StripDecomposition;
use crate::grid::{BoundarySpec, Grid, WavenumberField};
use crate::krylov::{gmres_right, GmresOptions, KrylovReport};
use crate::local::{extract_trace, LocalField, LocalSolver, Side};
use crate::{Complex64, Error, Execution, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Interface unknowns, block-ordered as all left traces then all right traces.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceVector {
    n_sub: usize,
    block_len: usize,
    data: Vec<Complex64>,
}

impl TraceVector {
    pub fn zeros(n_sub: usize, block_len: usize) -> Self {
        assert!(n_sub >= 2);
        Self {
            n_sub,
            block_len,
            data: vec![ZERO; 2 * (n_sub - 1) * block_len],
        }
    }

    pub fn from_vec(n_sub: usize, block_len: usize, data: Vec<Complex64>) -> Result<Self> {
        if n_sub < 2 || data.len() != 2 * (n_sub - 1) * block_len {
            return Err(Error::Shape(format!(
                "{} values do not form a trace vector for {n_sub} strips of {block_len}-node interfaces",
                data.len()
            )));
        }
        Ok(Self {
            n_sub,
            block_len,
            data,
        })
    }

    pub fn n_subdomains(&self) -> usize {
        self.n_sub
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn n_blocks(&self) -> usize {
        2 * (self.n_sub - 1)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Block position of the left trace of strip `s` (`1 <= s < N`).
    pub fn left_index(&self, s: usize) -> usize {
        assert!(s >= 1 && s < self.n_sub, "strip {s} has no left trace");
        s - 1
    }

    /// Block position of the right trace of strip `s` (`0 <= s < N - 1`).
    pub fn right_index(&self, s: usize) -> usize {
        assert!(s + 1 < self.n_sub, "strip {s} has no right trace");
        self.n_sub - 1 + s
    }

    pub fn block(&self, b: usize) -> &[Complex64] {
        &self.data[b * self.block_len..(b + 1) * self.block_len]
    }

    pub fn block_mut(&mut self, b: usize) -> &mut [Complex64] {
        &mut self.data[b * self.block_len..(b + 1) * self.block_len]
    }

    pub fn left(&self, s: usize) -> &[Complex64] {
        self.block(self.left_index(s))
    }

    pub fn right(&self, s: usize) -> &[Complex64] {
        self.block(self.right_index(s))
    }

    pub fn left_mut(&mut self, s: usize) -> &mut [Complex64] {
        let b = self.left_index(s);
        self.block_mut(b)
    }

    pub fn right_mut(&mut self, s: usize) -> &mut [Complex64] {
        let b = self.right_index(s);
        self.block_mut(b)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: Complex64, other: &TraceVector) {
        assert_eq!(self.data.len(), other.data.len());
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += alpha * y;
        }
    }

    pub fn scale(&mut self, alpha: Complex64) {
        self.data.iter_mut().for_each(|x| *x *= alpha);
    }

    /// Euclidean inner product, conjugate-linear in `self`.
    pub fn dot(&self, other: &TraceVector) -> Complex64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| x.conj() * y)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Preconditioner applied on the right of `Id - T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    /// Identity: plain GMRES on the Jacobi (additive Schwarz) system.
    Jacobi,
    /// Double sweep.
    Ds,
    /// Overlapping splitting double sweep, `(Id - T_OSDS)^{-1}`.
    Osds,
}

impl Preconditioner {
    pub const ALL: [Preconditioner; 3] = [Preconditioner::Jacobi, Preconditioner::Ds, Preconditioner::Osds];

    pub fn name(&self) -> &'static str {
        match self {
            Preconditioner::Jacobi => "jacobi",
            Preconditioner::Ds => "ds",
            Preconditioner::Osds => "osds",
        }
    }
}

impl std::str::FromStr for Preconditioner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jacobi" => Ok(Preconditioner::Jacobi),
            "ds" => Ok(Preconditioner::Ds),
            "osds" => Ok(Preconditioner::Osds),
            other => Err(Error::Config(format!("unknown preconditioner '{other}'"))),
        }
    }
}

/// Stationary iteration used by [`Substructured::fixed_point`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedPointMode {
    /// `h <- T h + G`
    Jacobi,
    /// `h <- h + M_DS (G - (Id - T) h)`
    Ds,
    /// `h <- (Id - T_OSDS)^{-1} ((T - T_OSDS) h + G)`
    Osds,
}

impl From<Preconditioner> for FixedPointMode {
    fn from(p: Preconditioner) -> Self {
        match p {
            Preconditioner::Jacobi => FixedPointMode::Jacobi,
            Preconditioner::Ds => FixedPointMode::Ds,
            Preconditioner::Osds => FixedPointMode::Osds,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FixedPointOutcome {
    /// Final iterate, or the iterate with the smallest residual when the
    /// iteration did not converge.
    pub h: TraceVector,
    /// `||(Id - T) h^n - G|| / ||G||` for `n = 0, 1, ...`
    pub history: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Contribution of one strip to an interface vector: the trace it sends to
/// its right neighbor's left interface and to its left neighbor's right
/// interface.
type StripOutput = (Option<Vec<Complex64>>, Option<Vec<Complex64>>);

/// Local solvers of a strip decomposition and the substructured operators
/// built from them.
#[derive(Debug)]
pub struct Substructured {
    grid: Grid,
    k: WavenumberField,
    bc: BoundarySpec,
    strips: StripDecomposition,
    solvers: Vec<LocalSolver>,
    execution: Execution,
}

impl Substructured {
    /// Factorizes every local problem.
    pub fn new(
        grid: Grid,
        k: WavenumberField,
        bc: BoundarySpec,
        strips: StripDecomposition,
        execution: Execution,
    ) -> Result<Self> {
        let n = strips.n_subdomains();
        let build = |s: usize| LocalSolver::factorize(&grid, &k, &bc, &strips, s);
        let solvers = match execution {
            Execution::Serial => (0..n).map(build).collect::<Result<Vec<_>>>()?,
            Execution::Parallel => (0..n).into_par_iter().map(build).collect::<Result<Vec<_>>>()?,
        };
        Ok(Self {
            grid,
            k,
            bc,
            strips,
            solvers,
            execution,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn wavenumber(&self) -> &WavenumberField {
        &self.k
    }

    pub fn boundary(&self) -> &BoundarySpec {
        &self.bc
    }

    pub fn strips(&self) -> &StripDecomposition {
        &self.strips
    }

    pub fn solvers(&self) -> &[LocalSolver] {
        &self.solvers
    }

    pub fn n_subdomains(&self) -> usize {
        self.solvers.len()
    }

    pub fn set_execution(&mut self, execution: Execution) {
        self.execution = execution;
    }

    /// Total number of local solves performed so far.
    pub fn solve_count(&self) -> usize {
        self.solvers.iter().map(LocalSolver::solve_count).sum()
    }

    pub fn zero_trace(&self) -> TraceVector {
        TraceVector::zeros(self.n_subdomains(), self.grid.column_len())
    }

    /// Wraps a flat vector in this decomposition's trace layout.
    pub fn trace_from(&self, data: Vec<Complex64>) -> Result<TraceVector> {
        TraceVector::from_vec(self.n_subdomains(), self.grid.column_len(), data)
    }

    fn check(&self, h: &TraceVector) -> Result<()> {
        if h.n_sub != self.n_subdomains() || h.block_len != self.grid.column_len() {
            return Err(Error::Shape(format!(
                "trace vector for {} strips x {} nodes, operator has {} x {}",
                h.n_sub,
                h.block_len,
                self.n_subdomains(),
                self.grid.column_len()
            )));
        }
        Ok(())
    }

    /// `B_{s+1,l}(v)`: trace of a field on strip `s` at its right neighbor's
    /// left interface.
    fn to_right_neighbor(&self, s: usize, v: &LocalField) -> Result<Vec<Complex64>> {
        let col = self.strips.left_interface(s + 1).expect("right neighbor exists");
        extract_trace(v, col, Side::Left, &self.grid, &self.k)
    }

    /// `B_{s-1,r}(v)`: trace of a field on strip `s` at its left neighbor's
    /// right interface.
    fn to_left_neighbor(&self, s: usize, v: &LocalField) -> Result<Vec<Complex64>> {
        let col = self.strips.right_interface(s - 1).expect("left neighbor exists");
        extract_trace(v, col, Side::Right, &self.grid, &self.k)
    }

    fn left_input<'a>(&self, h: &'a TraceVector, s: usize) -> Option<&'a [Complex64]> {
        (s >= 1).then(|| h.left(s))
    }

    fn right_input<'a>(&self, h: &'a TraceVector, s: usize) -> Option<&'a [Complex64]> {
        (s + 1 < self.n_subdomains()).then(|| h.right(s))
    }

    fn per_strip<F>(&self, f: F) -> Result<TraceVector>
    where
        F: Fn(usize) -> Result<StripOutput> + Sync,
    {
        let n = self.n_subdomains();
        let parts: Vec<StripOutput> = match self.execution {
            Execution::Serial => (0..n).map(&f).collect::<Result<_>>()?,
            Execution::Parallel => (0..n).into_par_iter().map(&f).collect::<Result<_>>()?,
        };
        let mut out = self.zero_trace();
        for (s, (to_right, to_left)) in parts.into_iter().enumerate() {
            if let Some(t) = to_right {
                out.left_mut(s + 1).copy_from_slice(&t);
            }
            if let Some(t) = to_left {
                out.right_mut(s - 1).copy_from_slice(&t);
            }
        }
        Ok(out)
    }

    fn both_outputs(&self, s: usize, v: &LocalField) -> Result<StripOutput> {
        let n = self.n_subdomains();
        let to_right = if s + 1 < n { Some(self.to_right_neighbor(s, v)?) } else { None };
        let to_left = if s >= 1 { Some(self.to_left_neighbor(s, v)?) } else { None };
        Ok((to_right, to_left))
    }

    /// `T(h)`: one local solve per strip.
    pub fn apply_t(&self, h: &TraceVector) -> Result<TraceVector> {
        self.check(h)?;
        self.per_strip(|s| {
            let v = self.solvers[s].solve(self.left_input(h, s), self.right_input(h, s), None)?;
            self.both_outputs(s, &v)
        })
    }

    /// `T_OSDS(h)`: same-direction transmission only.
    pub fn apply_t_osds(&self, h: &TraceVector) -> Result<TraceVector> {
        self.check(h)?;
        let n = self.n_subdomains();
        self.per_strip(|s| {
            let ls = &self.solvers[s];
            let to_right = if s >= 1 && s + 1 < n {
                let v = ls.solve(Some(h.left(s)), None, None)?;
                Some(self.to_right_neighbor(s, &v)?)
            } else {
                None
            };
            let to_left = if s >= 1 && s + 1 < n {
                let v = ls.solve(None, Some(h.right(s)), None)?;
                Some(self.to_left_neighbor(s, &v)?)
            } else {
                None
            };
            Ok((to_right, to_left))
        })
    }

    /// `(T - T_OSDS)(h)`: the reflected (cross-coupling) transmission.
    pub fn apply_t_cross(&self, h: &TraceVector) -> Result<TraceVector> {
        self.check(h)?;
        let n = self.n_subdomains();
        self.per_strip(|s| {
            let ls = &self.solvers[s];
            let to_right = if s + 1 < n {
                let v = ls.solve(None, Some(h.right(s)), None)?;
                Some(self.to_right_neighbor(s, &v)?)
            } else {
                None
            };
            let to_left = if s >= 1 {
                let v = ls.solve(Some(h.left(s)), None, None)?;
                Some(self.to_left_neighbor(s, &v)?)
            } else {
                None
            };
            Ok((to_right, to_left))
        })
    }

    /// `(Id - T)(h)`
    pub fn apply_id_minus_t(&self, h: &TraceVector) -> Result<TraceVector> {
        let mut out = self.apply_t(h)?;
        out.scale(Complex64::new(-1.0, 0.0));
        out.axpy(Complex64::new(1.0, 0.0), h);
        Ok(out)
    }

    /// Interface right-hand side `G` from the volume source `f` and the
    /// physical boundary data.
    pub fn compute_g(&self, f: &[Complex64]) -> Result<TraceVector> {
        if f.len() != self.grid.n_nodes() {
            return Err(Error::Shape(format!(
                "source has {} values, grid has {} nodes",
                f.len(),
                self.grid.n_nodes()
            )));
        }
        self.per_strip(|s| {
            let v = self.solvers[s].solve(None, None, Some(f))?;
            self.both_outputs(s, &v)
        })
    }

    /// Left-to-right substitution for `(Id - M_l) x = r_l`, returning the
    /// left blocks `x.left(1..N)`.
    fn sweep_left(&self, r: &TraceVector) -> Result<Vec<Vec<Complex64>>> {
        let n = self.n_subdomains();
        let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(n - 1);
        out.push(r.left(1).to_vec());
        for s in 1..n - 1 {
            let v = self.solvers[s].solve(Some(&out[s - 1]), None, None)?;
            let mut t = self.to_right_neighbor(s, &v)?;
            add_into(&mut t, r.left(s + 1));
            out.push(t);
        }
        Ok(out)
    }

    /// Right-to-left substitution for `(Id - M_r) x = r_r`, returning the
    /// right blocks `x.right(0..N-1)`.
    fn sweep_right(&self, r: &TraceVector) -> Result<Vec<Vec<Complex64>>> {
        let n = self.n_subdomains();
        let mut out = vec![Vec::new(); n - 1];
        out[n - 2] = r.right(n - 2).to_vec();
        for s in (1..n - 1).rev() {
            let v = self.solvers[s].solve(None, Some(&out[s]), None)?;
            let mut t = self.to_left_neighbor(s, &v)?;
            add_into(&mut t, r.right(s - 1));
            out[s - 1] = t;
        }
        Ok(out)
    }

    /// `(Id - T_OSDS)^{-1} r` by two independent opposite sweeps.
    pub fn precond_osds(&self, r: &TraceVector) -> Result<TraceVector> {
        self.check(r)?;
        let (left, right) = match self.execution {
            Execution::Serial => (self.sweep_left(r)?, self.sweep_right(r)?),
            Execution::Parallel => {
                let (l, r) = rayon::join(|| self.sweep_left(r), || self.sweep_right(r));
                (l?, r?)
            }
        };
        let mut out = self.zero_trace();
        for (idx, t) in left.iter().enumerate() {
            out.left_mut(idx + 1).copy_from_slice(t);
        }
        for (s, t) in right.iter().enumerate() {
            out.right_mut(s).copy_from_slice(t);
        }
        Ok(out)
    }

    /// Double sweep applied to `r` from a zero state: a forward sweep over
    /// the left traces followed by a backward sweep that updates both
    /// trace families. With `T = M_l + A_l + M_r + A_r`, the result solves
    ///
    /// ```text
    /// (Id - M_l) x = r_l
    /// (Id - M_r) h_r = A_r x + r_r
    /// h_l = M_l x + A_l h_r + r_l
    /// ```
    pub fn precond_ds(&self, r: &TraceVector) -> Result<TraceVector> {
        self.check(r)?;
        let n = self.n_subdomains();
        let half = self.sweep_left(r)?;
        let mut out = self.zero_trace();
        for s in (0..n).rev() {
            let hl = (s >= 1).then(|| half[s - 1].as_slice());
            let hr_owned;
            let hr = if s + 1 < n {
                hr_owned = out.right(s).to_vec();
                Some(hr_owned.as_slice())
            } else {
                None
            };
            let v = self.solvers[s].solve(hl, hr, None)?;
            if s >= 1 {
                let mut t = self.to_left_neighbor(s, &v)?;
                add_into(&mut t, r.right(s - 1));
                out.right_mut(s - 1).copy_from_slice(&t);
            }
            if s + 1 < n {
                let mut t = self.to_right_neighbor(s, &v)?;
                add_into(&mut t, r.left(s + 1));
                out.left_mut(s + 1).copy_from_slice(&t);
            }
        }
        Ok(out)
    }

    pub fn apply_preconditioner(&self, p: Preconditioner, r: &TraceVector) -> Result<TraceVector> {
        match p {
            Preconditioner::Jacobi => Ok(r.clone()),
            Preconditioner::Ds => self.precond_ds(r),
            Preconditioner::Osds => self.precond_osds(r),
        }
    }

    /// Relative substructured residual `||(Id - T) h - G|| / ||G||`.
    pub fn residual(&self, h: &TraceVector, g: &TraceVector) -> Result<f64> {
        let mut r = self.apply_id_minus_t(h)?;
        r.axpy(Complex64::new(-1.0, 0.0), g);
        Ok(relative(r.norm(), g.norm()))
    }

    /// Stationary Jacobi or OSDS iteration from a zero initial guess.
    pub fn fixed_point(
        &self,
        mode: FixedPointMode,
        g: &TraceVector,
        tol: f64,
        max_iters: usize,
    ) -> Result<FixedPointOutcome> {
        self.check(g)?;
        let g_norm = g.norm();
        let mut h = self.zero_trace();
        let mut history = Vec::new();
        if g_norm == 0.0 {
            history.push(0.0);
            return Ok(FixedPointOutcome {
                h,
                history,
                converged: true,
                iterations: 0,
            });
        }
        let one = Complex64::new(1.0, 0.0);
        let mut best = (f64::INFINITY, h.clone());
        for n in 0..=max_iters {
            let th = self.apply_t(&h)?;
            let mut r = h.clone();
            r.axpy(-one, &th);
            r.axpy(-one, g);
            let res = r.norm() / g_norm;
            history.push(res);
            if res < best.0 {
                best = (res, h.clone());
            }
            if res <= tol {
                return Ok(FixedPointOutcome {
                    h,
                    history,
                    converged: true,
                    iterations: n,
                });
            }
            if n == max_iters {
                break;
            }
            h = match mode {
                FixedPointMode::Jacobi => {
                    let mut next = th;
                    next.axpy(one, g);
                    next
                }
                FixedPointMode::Ds => {
                    let mut next = self.precond_ds(&r)?;
                    next.scale(-one);
                    next.axpy(one, &h);
                    next
                }
                FixedPointMode::Osds => {
                    let mut rhs = self.apply_t_cross(&h)?;
                    rhs.axpy(one, g);
                    self.precond_osds(&rhs)?
                }
            };
        }
        Ok(FixedPointOutcome {
            h: best.1,
            history,
            converged: false,
            iterations: max_iters,
        })
    }

    /// Solves `(Id - T) h = g` with GMRES right-preconditioned by `p`.
    pub fn solve_gmres(
        &self,
        p: Preconditioner,
        g: &TraceVector,
        opts: &GmresOptions,
    ) -> Result<(TraceVector, KrylovReport)> {
        self.check(g)?;
        let wrap = |x: &[Complex64]| self.trace_from(x.to_vec());
        let a = |x: &[Complex64]| Ok(self.apply_id_minus_t(&wrap(x)?)?.into_vec());
        let m = |x: &[Complex64]| Ok(self.apply_preconditioner(p, &wrap(x)?)?.into_vec());
        let (x, report) = gmres_right(a, m, g.as_slice(), opts)?;
        Ok((self.trace_from(x)?, report))
    }

    /// Glues the local solutions `S_s(h_{s,l}, h_{s,r}, f)` into a global
    /// column-major field; each column is taken from its owning strip.
    pub fn reconstruct(&self, h: &TraceVector, f: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(h)?;
        let n = self.n_subdomains();
        let ny = self.grid.ny;
        let cuts = self.strips.cuts();
        let solve = |s: usize| {
            self.solvers[s].solve(self.left_input(h, s), self.right_input(h, s), Some(f))
        };
        let fields: Vec<LocalField> = match self.execution {
            Execution::Serial => (0..n).map(solve).collect::<Result<_>>()?,
            Execution::Parallel => (0..n).into_par_iter().map(solve).collect::<Result<_>>()?,
        };
        let mut u = vec![ZERO; self.grid.n_nodes()];
        for (s, v) in fields.iter().enumerate() {
            let end = if s + 1 == n { cuts[n] + 1 } else { cuts[s + 1] };
            for i in cuts[s]..end {
                for j in 0..=ny {
                    u[self.grid.index(i, j)] = v.at(i, j);
                }
            }
        }
        Ok(u)
    }
}

fn add_into(dst: &mut [Complex64], src: &[Complex64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

pub(crate) fn relative(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        num
    }
}
