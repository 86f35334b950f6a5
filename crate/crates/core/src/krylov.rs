//! Full (unrestarted) right-preconditioned GMRES.
//!
//! Solves `A M^{-1} y = b` and returns `x = M^{-1} y`. With right
//! preconditioning the Arnoldi least-squares residual equals the residual
//! of the original system, so the stopping test is on `||b - A x|| / ||b||`.
//! The Arnoldi basis is built with modified Gram-Schmidt; a second pass is
//! made whenever the new vector has lost orthogonality beyond
//! [`REORTHOGONALIZATION_THRESHOLD`].

use std::time::{Duration, Instant};

use crate::{Complex64, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub const REORTHOGONALIZATION_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrylovReport {
    pub iterations: usize,
    /// Relative residual after each iteration, starting with the initial one.
    pub history: Vec<f64>,
    pub converged: bool,
    pub wall_time: Duration,
    /// `max |<v_i, v_j> - δ_ij|` over the Arnoldi basis at exit.
    pub orthogonality_loss: f64,
    /// Explicitly recomputed `||b - A x|| / ||b||`.
    pub true_residual: f64,
    pub reorthogonalizations: usize,
}

impl KrylovReport {
    /// First iteration whose residual is at or below `tol`.
    pub fn iterations_to(&self, tol: f64) -> Option<usize> {
        self.history.iter().position(|&r| r <= tol)
    }
}

fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

fn orthogonalize(basis: &[Vec<Complex64>], w: &mut [Complex64], coeffs: &mut [Complex64]) {
    for (v, c) in basis.iter().zip(coeffs.iter_mut()) {
        let p = dot(v, w);
        *c += p;
        for (wi, vi) in w.iter_mut().zip(v) {
            *wi -= p * vi;
        }
    }
}

/// Complex Givens rotation `(c, s)` with `c` real, mapping `(a, b)` to `(r, 0)`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64, Complex64) {
    let na = a.norm();
    if b.norm() == 0.0 {
        return (1.0, ZERO, a);
    }
    if na == 0.0 {
        return (0.0, b.conj() / b.norm(), Complex64::new(b.norm(), 0.0));
    }
    let nrm = na.hypot(b.norm());
    let phase = a / na;
    (na / nrm, phase * b.conj() / nrm, phase * nrm)
}

/// Right-preconditioned GMRES from a zero initial guess.
///
/// `apply_a` and `apply_m` map a vector to `A x` and `M^{-1} x`.
pub fn gmres_right<A, M>(
    apply_a: A,
    apply_m: M,
    b: &[Complex64],
    opts: &GmresOptions,
) -> Result<(Vec<Complex64>, KrylovReport)>
where
    A: Fn(&[Complex64]) -> Result<Vec<Complex64>>,
    M: Fn(&[Complex64]) -> Result<Vec<Complex64>>,
{
    let start = Instant::now();
    let n = b.len();
    let beta = norm(b);
    if beta == 0.0 {
        return Ok((
            vec![ZERO; n],
            KrylovReport {
                iterations: 0,
                history: vec![0.0],
                converged: true,
                wall_time: start.elapsed(),
                orthogonality_loss: 0.0,
                true_residual: 0.0,
                reorthogonalizations: 0,
            },
        ));
    }

    let mut basis: Vec<Vec<Complex64>> = vec![b.iter().map(|x| x / beta).collect()];
    // Columns of the rotated Hessenberg matrix (upper triangular part).
    let mut r_cols: Vec<Vec<Complex64>> = Vec::new();
    let mut rotations: Vec<(f64, Complex64)> = Vec::new();
    let mut g = vec![Complex64::new(beta, 0.0)];
    let mut history = vec![1.0];
    let mut converged = opts.tol >= 1.0;
    let mut reorth = 0;

    while !converged && r_cols.len() < opts.max_iters {
        let j = r_cols.len();
        let z = apply_m(&basis[j])?;
        let mut w = apply_a(&z)?;
        let mut col = vec![ZERO; j + 2];
        orthogonalize(&basis, &mut w, &mut col[..=j]);
        let mut wn = norm(&w);
        if wn > 0.0 {
            let loss = basis
                .iter()
                .map(|v| dot(v, &w).norm() / wn)
                .fold(0.0, f64::max);
            if loss > REORTHOGONALIZATION_THRESHOLD {
                orthogonalize(&basis, &mut w, &mut col[..=j]);
                wn = norm(&w);
                reorth += 1;
            }
        }
        col[j + 1] = Complex64::new(wn, 0.0);

        for (i, &(c, s)) in rotations.iter().enumerate() {
            let (x, y) = (col[i], col[i + 1]);
            col[i] = c * x + s * y;
            col[i + 1] = -s.conj() * x + c * y;
        }
        let (c, s, r) = givens(col[j], col[j + 1]);
        col[j] = r;
        col.truncate(j + 1);
        rotations.push((c, s));
        let gj = g[j];
        g[j] = c * gj;
        g.push(-s.conj() * gj);
        r_cols.push(col);

        let res = g[j + 1].norm() / beta;
        history.push(res);
        let breakdown = wn <= 1e-14 * r.norm().max(f64::MIN_POSITIVE);
        if res <= opts.tol || breakdown {
            converged = true;
        } else {
            basis.push(w.iter().map(|x| x / wn).collect());
        }
    }

    let m = r_cols.len();
    // back substitution R y = g
    let mut y = vec![ZERO; m];
    for i in (0..m).rev() {
        let mut acc = g[i];
        for (jj, yj) in y.iter().enumerate().skip(i + 1) {
            acc -= r_cols[jj][i] * yj;
        }
        y[i] = acc / r_cols[i][i];
    }
    let mut u = vec![ZERO; n];
    for (v, yi) in basis.iter().zip(&y) {
        for (ui, vi) in u.iter_mut().zip(v) {
            *ui += yi * vi;
        }
    }
    let x = if m > 0 { apply_m(&u)? } else { u };

    let ax = apply_a(&x)?;
    let true_residual = b.iter().zip(&ax).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt() / beta;

    let mut orthogonality_loss: f64 = 0.0;
    for (i, vi) in basis.iter().enumerate() {
        for (jj, vj) in basis.iter().enumerate().skip(i) {
            let d = dot(vi, vj) - if i == jj { Complex64::new(1.0, 0.0) } else { ZERO };
            orthogonality_loss = orthogonality_loss.max(d.norm());
        }
    }

    Ok((
        x,
        KrylovReport {
            iterations: m,
            history,
            converged,
            wall_time: start.elapsed(),
            orthogonality_loss,
            true_residual,
            reorthogonalizations: reorth,
        },
    ))
}

/// The identity map, for unpreconditioned GMRES.
pub fn identity(x: &[Complex64]) -> Result<Vec<Complex64>> {
    Ok(x.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};

    fn random_matrix(n: usize, seed: u64, shift: f64) -> DMatrix<Complex64> {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        DMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { shift } else { 0.0 };
            Complex64::new(rng.gen_range(-1.0..1.0) + d, rng.gen_range(-1.0..1.0))
        })
    }

    fn matvec(a: &DMatrix<Complex64>) -> impl Fn(&[Complex64]) -> Result<Vec<Complex64>> + '_ {
        move |x| Ok((a * DVector::from_column_slice(x)).as_slice().to_vec())
    }

    #[test]
    fn zero_rhs() {
        let a = random_matrix(5, 1, 0.0);
        let (x, rep) = gmres_right(matvec(&a), identity, &[ZERO; 5], &GmresOptions::default()).unwrap();
        assert!(x.iter().all(|v| *v == ZERO));
        assert_eq!(rep.iterations, 0);
        assert!(rep.converged);
    }

    #[test]
    fn identity_converges_in_one() {
        let b: Vec<_> = (0..7).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let (x, rep) = gmres_right(identity, identity, &b, &GmresOptions::default()).unwrap();
        assert_eq!(rep.iterations, 1);
        assert_eq!(rep.history.len(), 2);
        for (p, q) in x.iter().zip(&b) {
            assert!((p - q).norm() < 1e-14);
        }
    }

    #[test]
    fn dense_oracle_20() {
        let a = random_matrix(20, 7, 0.0);
        let mut rng = rand::rngs::StdRng::seed_from_u64(8);
        let b: Vec<_> = (0..20)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let exact = a.clone().lu().solve(&DVector::from_column_slice(&b)).unwrap();
        let opts = GmresOptions { tol: 1e-12, max_iters: 100 };
        let (x, rep) = gmres_right(matvec(&a), identity, &b, &opts).unwrap();
        let err = (DVector::from_column_slice(&x) - &exact).norm() / exact.norm();
        assert!(err <= 1e-10, "err {err}");
        assert!(rep.converged);
        assert_eq!(rep.history.len(), rep.iterations + 1);
        assert_eq!(rep.history[0], 1.0);
        for w in rep.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-14);
        }
        assert!(rep.orthogonality_loss <= 1e-8);
    }

    #[test]
    fn right_preconditioning_returns_original_unknown() {
        let a = random_matrix(15, 11, 4.0);
        let d: Vec<f64> = (0..15).map(|i| 1.0 + i as f64).collect();
        let b: Vec<_> = (0..15).map(|i| Complex64::new(1.0, i as f64 * 0.1)).collect();
        let prec = |x: &[Complex64]| Ok(x.iter().zip(&d).map(|(v, s)| v / s).collect());
        let opts = GmresOptions { tol: 1e-12, max_iters: 50 };
        let (x, rep) = gmres_right(matvec(&a), prec, &b, &opts).unwrap();
        assert!(rep.true_residual <= 1e-10);
        let exact = a.lu().solve(&DVector::from_column_slice(&b)).unwrap();
        assert!((DVector::from_column_slice(&x) - &exact).norm() <= 1e-9 * exact.norm());
    }

    #[test]
    fn max_iters_flagged() {
        let a = random_matrix(30, 5, 0.0);
        let b = vec![Complex64::new(1.0, 0.0); 30];
        let opts = GmresOptions { tol: 1e-14, max_iters: 3 };
        let (_, rep) = gmres_right(matvec(&a), identity, &b, &opts).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 3);
        assert_eq!(rep.iterations_to(1e-14), None);
    }

    #[test]
    fn loose_tolerance_zero_iterations() {
        let a = random_matrix(4, 2, 3.0);
        let b = vec![Complex64::new(1.0, 0.0); 4];
        let opts = GmresOptions { tol: 1.0, max_iters: 10 };
        let (_, rep) = gmres_right(matvec(&a), identity, &b, &opts).unwrap();
        assert_eq!(rep.iterations, 0);
    }
}
