//! Fourier-symbol convergence analysis for strips of the plane or of a
//! Dirichlet waveguide.
//!
//! For a Fourier number `ξ` the substructured iteration operator reduces to
//! four `(2N-2) x (2N-2)` complex matrices `A_l`, `A_r`, `M_l`, `M_r` with
//! `T = M_l + A_l + M_r + A_r`. Their entries depend on the half-space
//! Dirichlet-to-Neumann symbol `λ(ξ)`, the transmission symbol `λ_j` (here
//! `Ik` by default), the strip widths and the overlap `δ`.
//!
//! Matrix norms in [`rho_factor`] and [`c_factor`] are the largest entry
//! modulus. Each matrix has a single nonzero diagonal, so this coincides
//! with the spectral norm.

use nalgebra::DMatrix;

use crate::{Complex64, Error, Result, I};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative distance to `|ξ| = k` under which a Fourier number is treated
/// as the cutoff.
pub const CUTOFF_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lambda {
    pub value: Complex64,
    /// Set at the cutoff `|ξ| = k` (plane) or at a waveguide resonance.
    pub cutoff: bool,
}

/// Symbol of the half-plane Dirichlet-to-Neumann map:
/// `Ik sqrt(1 - ξ²/k²)` for `|ξ| < k`, `sqrt(ξ² - k²)` for `|ξ| > k`.
pub fn lambda_symbol(xi: f64, k: f64) -> Lambda {
    assert!(k > 0.0, "k must be positive");
    let ratio = xi.abs() / k;
    if (1.0 - ratio).abs() < CUTOFF_EPS {
        Lambda {
            value: ZERO,
            cutoff: true,
        }
    } else if ratio < 1.0 {
        Lambda {
            value: I * k * (1.0 - ratio * ratio).sqrt(),
            cutoff: false,
        }
    } else {
        Lambda {
            value: Complex64::new((xi * xi - k * k).sqrt(), 0.0),
            cutoff: false,
        }
    }
}

/// Symbol for the half waveguide of height `length` with Dirichlet walls:
/// `sqrt((ξπ/L)² - k²)` for the mode `sin(ξπy/L)`, on the outgoing branch
/// (`+I sqrt(k² - (ξπ/L)²)` for propagating modes).
pub fn lambda_waveguide(mode: u32, k: f64, length: f64) -> Lambda {
    assert!(length > 0.0, "waveguide height must be positive");
    let eta = mode as f64 * std::f64::consts::PI / length;
    let d = eta * eta - k * k;
    let resonant = k > 0.0 && ((eta - k.abs()) / k.abs()).abs() < CUTOFF_EPS;
    if resonant {
        Lambda {
            value: ZERO,
            cutoff: true,
        }
    } else if d >= 0.0 {
        Lambda {
            value: Complex64::new(d.sqrt(), 0.0),
            cutoff: false,
        }
    } else {
        Lambda {
            value: I * (-d).sqrt(),
            cutoff: false,
        }
    }
}

/// Two-half-space convergence factor `(λ - λ_j) / (λ + λ_j)`.
pub fn rho_two_domain(lambda: Complex64, lambda_j: Complex64) -> Result<Complex64> {
    let den = lambda + lambda_j;
    if den.norm() == 0.0 {
        return Err(Error::Relation("λ + λ_j = 0: two-domain factor undefined".into()));
    }
    Ok((lambda - lambda_j) / den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymbolMode {
    /// Fourier transform along the interfaces; `ξ` is any real number.
    Plane,
    /// Sine series on a guide of height `length`; `ξ` is the positive
    /// mode index and the effective Fourier number is `ξπ/length`.
    Waveguide { length: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolParams {
    pub k: f64,
    pub xi: f64,
    /// Transmission symbol; `None` means `Ik`.
    pub lambda_j: Option<Complex64>,
    /// Width `L_i - l_i` of each of the `N` strips. Infinite widths are
    /// allowed (unbounded end strips); their exponentials vanish.
    pub widths: Vec<f64>,
    pub overlap: f64,
    pub mode: SymbolMode,
}

impl SymbolParams {
    /// `n` strips of equal finite `width` in the plane.
    pub fn equal_strips(k: f64, xi: f64, n: usize, width: f64, overlap: f64) -> Self {
        Self {
            k,
            xi,
            lambda_j: None,
            widths: vec![width; n],
            overlap,
            mode: SymbolMode::Plane,
        }
    }

    pub fn with_xi(&self, xi: f64) -> Self {
        Self { xi, ..self.clone() }
    }

    pub fn with_overlap(&self, overlap: f64) -> Self {
        Self {
            overlap,
            ..self.clone()
        }
    }

    pub fn n_subdomains(&self) -> usize {
        self.widths.len()
    }

    pub fn lambda(&self) -> Lambda {
        match self.mode {
            SymbolMode::Plane => lambda_symbol(self.xi, self.k),
            SymbolMode::Waveguide { length } => {
                lambda_waveguide(self.xi.round().max(0.0) as u32, self.k, length)
            }
        }
    }

    /// Effective Fourier number (`ξπ/L` in waveguide mode).
    pub fn effective_xi(&self) -> f64 {
        match self.mode {
            SymbolMode::Plane => self.xi,
            SymbolMode::Waveguide { length } => self.xi.round() * std::f64::consts::PI / length,
        }
    }

    pub fn lambda_j(&self) -> Complex64 {
        self.lambda_j.unwrap_or(I * self.k)
    }

    pub fn rho_j(&self) -> Result<Complex64> {
        rho_two_domain(self.lambda().value, self.lambda_j())
    }

    fn validate(&self) -> Result<Lambda> {
        if self.widths.len() < 2 {
            return Err(Error::Config("need at least two strips".into()));
        }
        if !(self.overlap >= 0.0) || self.widths.iter().any(|w| !(*w > self.overlap)) {
            return Err(Error::Config(
                "every strip must be wider than the overlap".into(),
            ));
        }
        let lambda = self.lambda();
        if lambda.cutoff {
            return Err(Error::Cutoff {
                xi: self.effective_xi(),
                k: self.k,
            });
        }
        Ok(lambda)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolMatrices {
    pub a_l: DMatrix<Complex64>,
    pub a_r: DMatrix<Complex64>,
    pub m_l: DMatrix<Complex64>,
    pub m_r: DMatrix<Complex64>,
}

impl SymbolMatrices {
    pub fn n_subdomains(&self) -> usize {
        self.a_l.nrows() / 2 + 1
    }

    /// `T = M_l + A_l + M_r + A_r`
    pub fn total(&self) -> DMatrix<Complex64> {
        &self.m_l + &self.a_l + &self.m_r + &self.a_r
    }

    /// `(Σ_{i<N-1} M_r^i A_r, Σ_{i<N-1} M_l^i A_l)`
    pub fn sweep_sums(&self) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
        let n = self.n_subdomains();
        let dim = self.a_l.nrows();
        let series = |m: &DMatrix<Complex64>, a: &DMatrix<Complex64>| {
            let mut acc = DMatrix::zeros(dim, dim);
            let mut power = DMatrix::identity(dim, dim);
            for _ in 0..n - 1 {
                acc += &power * a;
                power = &power * m;
            }
            acc
        };
        (series(&self.m_r, &self.a_r), series(&self.m_l, &self.a_l))
    }

    /// `R_OSDS = Σ M_r^i A_r + Σ M_l^i A_l`
    pub fn r_osds(&self) -> DMatrix<Complex64> {
        let (p, q) = self.sweep_sums();
        p + q
    }
}

#[inline]
fn decay(lambda: Complex64, distance: f64) -> Complex64 {
    if distance.is_infinite() {
        ZERO
    } else {
        (-lambda * distance).exp()
    }
}

/// Builds the four symbol matrices at the parameters' Fourier number.
pub fn symbol_matrices(p: &SymbolParams) -> Result<SymbolMatrices> {
    let lambda = p.validate()?.value;
    let rho_j = rho_two_domain(lambda, p.lambda_j())?;
    let n = p.n_subdomains();
    let dim = 2 * n - 2;
    let delta = p.overlap;
    let rho2 = rho_j * rho_j;

    let a_entry = |w: f64| {
        rho_j * ((-lambda * delta).exp() + decay(lambda, w)) / (ONE - rho2 * decay(lambda, 2.0 * w))
    };
    let m_entry = |w: f64| {
        decay(lambda, w - delta) * (ONE - rho2) / (ONE - rho2 * decay(lambda, 2.0 * w))
    };

    let mut a_l = DMatrix::zeros(dim, dim);
    let mut a_r = DMatrix::zeros(dim, dim);
    let mut m_l = DMatrix::zeros(dim, dim);
    let mut m_r = DMatrix::zeros(dim, dim);
    // 1-based formula index n maps to row/column n-1.
    for idx in 1..n {
        a_r[(idx + n - 2, idx - 1)] = a_entry(p.widths[idx]);
        a_l[(idx - 1, idx + n - 2)] = a_entry(p.widths[idx - 1]);
    }
    for idx in 1..n - 1 {
        m_l[(idx, idx - 1)] = m_entry(p.widths[idx]);
    }
    for idx in n..2 * n - 2 {
        m_r[(idx - 1, idx)] = m_entry(p.widths[idx - n + 1]);
    }
    Ok(SymbolMatrices { a_l, a_r, m_l, m_r })
}

/// Largest entry modulus.
pub fn max_entry(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

struct Norms {
    a_l: f64,
    a_r: f64,
    rho: f64,
}

fn norms(p: &SymbolParams) -> Result<Norms> {
    let s = symbol_matrices(p)?;
    let n = p.n_subdomains();
    let geometric = |x: f64| (0..n - 1).map(|i| x.powi(i as i32)).sum::<f64>();
    let a_l = max_entry(&s.a_l);
    let a_r = max_entry(&s.a_r);
    let rho = a_r * a_l * geometric(max_entry(&s.m_l)) * geometric(max_entry(&s.m_r));
    Ok(Norms { a_l, a_r, rho })
}

/// `ρ(ξ) = ‖A_r‖ ‖A_l‖ (Σ_{i=0}^{N-2} ‖M_l‖^i) (Σ_{i=0}^{N-2} ‖M_r‖^i)`
pub fn rho_factor(p: &SymbolParams) -> Result<f64> {
    Ok(norms(p)?.rho)
}

/// `C(ξ) = (1 + ρ/‖A_l‖)(1 + ρ/‖A_r‖ + ρ/(‖A_r‖ ‖A_l‖))`, or `None` when
/// an `A` norm vanishes (e.g. at `ξ = 0` with `λ_j = Ik`).
pub fn c_factor(p: &SymbolParams) -> Result<Option<f64>> {
    let Norms { a_l, a_r, rho } = norms(p)?;
    if a_l == 0.0 || a_r == 0.0 {
        return Ok(None);
    }
    Ok(Some((1.0 + rho / a_l) * (1.0 + rho / a_r + rho / (a_r * a_l))))
}

/// Propagative-mode upper bound `|ρ_j|² 4 / (1 - |ρ_j|²)² (N-1)²` on `ρ(ξ)`.
pub fn propagative_bound(p: &SymbolParams) -> Result<f64> {
    let r2 = p.rho_j()?.norm_sqr();
    let n1 = (p.n_subdomains() - 1) as f64;
    Ok(r2 * 4.0 / (1.0 - r2).powi(2) * n1 * n1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationCheck {
    pub name: &'static str,
    /// Largest entry modulus of the product that must vanish.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolAlgebraReport {
    pub relations: Vec<RelationCheck>,
    /// `(n, relative error)` of `R^n = (PQ)^{n/2} + (QP)^{n/2}`.
    pub power_identities: Vec<(usize, f64)>,
    pub r2_spectral_norm: f64,
    pub rho: f64,
    pub violations: Vec<String>,
}

impl SymbolAlgebraReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub const RELATION_TOL: f64 = 1e-13;
pub const POWER_IDENTITY_TOL: f64 = 1e-12;

/// The ten vanishing products of the block structure.
pub fn cancellation_relations(
    m_l: &DMatrix<Complex64>,
    a_l: &DMatrix<Complex64>,
    m_r: &DMatrix<Complex64>,
    a_r: &DMatrix<Complex64>,
    n_sub: usize,
) -> Vec<RelationCheck> {
    let pow = |m: &DMatrix<Complex64>, e: usize| {
        let mut acc = DMatrix::identity(m.nrows(), m.ncols());
        for _ in 0..e {
            acc = &acc * m;
        }
        acc
    };
    vec![
        RelationCheck { name: "M_r^(N-1) = 0", value: max_entry(&pow(m_r, n_sub - 1)) },
        RelationCheck { name: "M_l^(N-1) = 0", value: max_entry(&pow(m_l, n_sub - 1)) },
        RelationCheck { name: "M_l M_r = 0", value: max_entry(&(m_l * m_r)) },
        RelationCheck { name: "M_r M_l = 0", value: max_entry(&(m_r * m_l)) },
        RelationCheck { name: "A_l^2 = 0", value: max_entry(&(a_l * a_l)) },
        RelationCheck { name: "A_r^2 = 0", value: max_entry(&(a_r * a_r)) },
        RelationCheck { name: "A_l M_l = 0", value: max_entry(&(a_l * m_l)) },
        RelationCheck { name: "A_r M_r = 0", value: max_entry(&(a_r * m_r)) },
        RelationCheck { name: "M_l A_r = 0", value: max_entry(&(m_l * a_r)) },
        RelationCheck { name: "M_r A_l = 0", value: max_entry(&(m_r * a_l)) },
    ]
}

/// Checks the cancellation relations, the even-power identity of
/// `R_OSDS` for `n = 2, 4`, and `‖R²‖₂ <= ρ(ξ)`.
pub fn verify_symbol_algebra(p: &SymbolParams) -> Result<SymbolAlgebraReport> {
    let s = symbol_matrices(p)?;
    let n = p.n_subdomains();
    let rho = rho_factor(p)?;
    let relations = cancellation_relations(&s.m_l, &s.a_l, &s.m_r, &s.a_r, n);
    let mut violations: Vec<String> = relations
        .iter()
        .filter(|r| r.value > RELATION_TOL)
        .map(|r| format!("{} (max entry {:.3e})", r.name, r.value))
        .collect();

    let (pp, qq) = s.sweep_sums();
    let r = &pp + &qq;
    let pq = &pp * &qq;
    let qp = &qq * &pp;
    let mut power_identities = Vec::new();
    let mut rn = r.clone();
    let mut pq_pow = DMatrix::identity(r.nrows(), r.ncols());
    let mut qp_pow = pq_pow.clone();
    for e in 1..=4 {
        if e > 1 {
            rn = &rn * &r;
        }
        if e % 2 == 0 {
            pq_pow = &pq_pow * &pq;
            qp_pow = &qp_pow * &qp;
            let rhs = &pq_pow + &qp_pow;
            let scale = rn.norm().max(f64::MIN_POSITIVE);
            let err = (&rn - rhs).norm() / scale;
            if err > POWER_IDENTITY_TOL && rn.norm() > 0.0 {
                violations.push(format!("R^{e} even-power identity (relative error {err:.3e})"));
            }
            power_identities.push((e, err));
        }
    }
    let r2 = &r * &r;
    let r2_spectral_norm = r2
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max);
    if r2_spectral_norm > rho * (1.0 + 1e-9) {
        violations.push(format!("||R^2|| = {r2_spectral_norm:.6e} exceeds rho = {rho:.6e}"));
    }
    Ok(SymbolAlgebraReport {
        relations,
        power_identities,
        r2_spectral_norm,
        rho,
        violations,
    })
}

/// Outcome of the overlap search for the vanishing-mode estimate
/// `ρ(ξ) < exp(-2 δ λ(ξ))`.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapSearch {
    /// Smallest tried overlap at which the estimate holds for every sample.
    pub threshold: Option<f64>,
    /// `(δ, max over samples of ρ(ξ) exp(2 δ λ(ξ)))` for each tried overlap.
    pub trials: Vec<(f64, f64)>,
}

/// Doubles the overlap from `start` until the vanishing-mode estimate holds
/// on all `xis` or the overlap reaches half the narrowest strip.
pub fn vanishing_overlap_search(base: &SymbolParams, xis: &[f64], start: f64) -> Result<OverlapSearch> {
    let max_overlap = base
        .widths
        .iter()
        .copied()
        .filter(|w| w.is_finite())
        .fold(f64::INFINITY, f64::min)
        / 2.0;
    if !max_overlap.is_finite() {
        return Err(Error::Config("overlap search needs a finite strip width".into()));
    }
    let mut delta = start.min(max_overlap);
    let mut trials = Vec::new();
    loop {
        let mut worst: f64 = 0.0;
        for &xi in xis {
            let p = base.with_xi(xi).with_overlap(delta);
            let lambda = p.lambda().value;
            let rho = rho_factor(&p)?;
            let ratio = if rho == 0.0 {
                0.0
            } else {
                (rho.ln() + 2.0 * delta * lambda.re).exp()
            };
            worst = worst.max(ratio);
        }
        trials.push((delta, worst));
        if worst < 1.0 {
            return Ok(OverlapSearch {
                threshold: Some(delta),
                trials,
            });
        }
        if delta >= max_overlap {
            return Ok(OverlapSearch {
                threshold: None,
                trials,
            });
        }
        delta = (delta * 2.0).min(max_overlap);
    }
}

/// One line of the symbol analysis table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolSample {
    pub xi: f64,
    pub lambda: Complex64,
    pub rho_j_abs: f64,
    /// `NaN` at the cutoff.
    pub rho: f64,
    /// `NaN` where undefined.
    pub c: f64,
}

pub fn sample(p: &SymbolParams) -> SymbolSample {
    let lambda = p.lambda();
    let rho_j_abs = p.rho_j().map(|r| r.norm()).unwrap_or(f64::NAN);
    let rho = rho_factor(p).unwrap_or(f64::NAN);
    let c = c_factor(p).ok().flatten().unwrap_or(f64::NAN);
    SymbolSample {
        xi: p.xi,
        lambda: lambda.value,
        rho_j_abs,
        rho,
        c,
    }
}

/// Writes `xi,lambda_re,lambda_im,rho_j_abs,rho,C` rows.
pub fn write_csv(w: &mut impl std::io::Write, samples: &[SymbolSample]) -> std::io::Result<()> {
    writeln!(w, "xi,lambda_re,lambda_im,rho_j_abs,rho,C")?;
    for s in samples {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            s.xi, s.lambda.re, s.lambda.im, s.rho_j_abs, s.rho, s.c
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const K: f64 = 20.0;

    #[test]
    fn lambda_values() {
        let l0 = lambda_symbol(0.0, K);
        assert!((l0.value - I * K).norm() < 1e-14 && !l0.cutoff);
        let l = lambda_symbol(K * 2f64.sqrt(), K);
        assert!((l.value - Complex64::new(K, 0.0)).norm() < 1e-12);
        let c = lambda_symbol(K, K);
        assert!(c.cutoff && c.value == ZERO);
    }

    #[test]
    fn lambda_square_both_branches() {
        for i in 0..400 {
            let xi = -3.0 * K + i as f64 * 0.15 * K / 10.0;
            let l = lambda_symbol(xi, K);
            if l.cutoff {
                continue;
            }
            let err = (l.value * l.value - Complex64::new(xi * xi - K * K, 0.0)).norm();
            assert!(err <= 1e-12 * (xi * xi + K * K), "xi {xi}");
        }
    }

    #[test]
    fn waveguide_lambda() {
        let pi = std::f64::consts::PI;
        let l = lambda_waveguide(1, 0.0, pi);
        assert!((l.value - ONE).norm() < 1e-14);
        let r = lambda_waveguide(3, 3.0, pi);
        assert!(r.cutoff && r.value == ZERO);
        // ξπ/L = k√2
        let k = 5.0;
        let length = 2.0 * pi / (k * 2f64.sqrt());
        let l = lambda_waveguide(2, k, length);
        assert!((l.value - Complex64::new(k, 0.0)).norm() < 1e-12);
        // propagating mode matches the plane branch
        let l = lambda_waveguide(1, 20.0, 1.0);
        let plane = lambda_symbol(pi, 20.0);
        assert!((l.value - plane.value).norm() < 1e-12);
    }

    #[test]
    fn two_domain_factor() {
        let lj = I * K;
        assert!(rho_two_domain(lambda_symbol(0.0, K).value, lj).unwrap().norm() < 1e-15);
        let r = rho_two_domain(lambda_symbol(1.5 * K, K).value, lj).unwrap();
        assert!((r.norm() - 1.0).abs() < 1e-14);
        let r = rho_two_domain(ZERO, lj).unwrap();
        assert!((r + ONE).norm() < 1e-15);
        for i in 1..100 {
            let xi = i as f64 * K / 100.0;
            let r = rho_two_domain(lambda_symbol(xi, K).value, lj).unwrap();
            assert!(r.norm() < 1.0);
        }
        assert!(rho_two_domain(lj, -lj).is_err());
    }

    #[test]
    fn equal_widths_give_equal_a_entries() {
        let p = SymbolParams::equal_strips(K, 7.0, 5, 1.0, 0.05);
        let s = symbol_matrices(&p).unwrap();
        for n in 1..5 {
            assert!((s.a_r[(n + 3, n - 1)] - s.a_l[(n - 1, n + 3)]).norm() < 1e-15);
        }
    }

    #[test]
    fn two_strips_have_no_m_blocks() {
        let p = SymbolParams::equal_strips(K, 7.0, 2, 1.0, 0.05);
        let s = symbol_matrices(&p).unwrap();
        assert_eq!(max_entry(&s.m_l), 0.0);
        assert_eq!(max_entry(&s.m_r), 0.0);
        let rho = rho_factor(&p).unwrap();
        assert!((rho - max_entry(&s.a_l) * max_entry(&s.a_r)).abs() < 1e-15);
        let c = c_factor(&p).unwrap().unwrap();
        let (al, ar) = (max_entry(&s.a_l), max_entry(&s.a_r));
        assert!((c - (1.0 + rho / al) * (1.0 + rho / ar + rho / (ar * al))).abs() < 1e-12);
        // R = A_r + A_l and R^2 = A_r A_l + A_l A_r
        let r = s.r_osds();
        assert!((&r - (&s.a_r + &s.a_l)).norm() < 1e-15);
        let r2 = &r * &r;
        assert!((r2 - (&s.a_r * &s.a_l + &s.a_l * &s.a_r)).norm() < 1e-15);
    }

    #[test]
    fn zero_xi_m_entries_unimodular() {
        let p = SymbolParams::equal_strips(K, 0.0, 4, 1.0, 0.25);
        let s = symbol_matrices(&p).unwrap();
        let expect = (-I * K * 0.75).exp();
        for n in 1..3 {
            assert!((s.m_l[(n, n - 1)] - expect).norm() < 1e-14);
            assert!((s.m_l[(n, n - 1)].norm() - 1.0).abs() < 1e-14);
        }
        assert_eq!(max_entry(&s.a_l), 0.0);
        assert_eq!(c_factor(&p).unwrap(), None);
    }

    #[test]
    fn cutoff_rejected() {
        let p = SymbolParams::equal_strips(K, K, 3, 1.0, 0.05);
        assert!(matches!(symbol_matrices(&p), Err(Error::Cutoff { .. })));
        let s = sample(&p);
        assert!(s.rho.is_nan());
    }

    #[test]
    fn block_sparsity() {
        let n = 4;
        let p = SymbolParams::equal_strips(K, 30.0, n, 1.0, 0.1);
        let s = symbol_matrices(&p).unwrap();
        let dim = 2 * n - 2;
        for i in 0..dim {
            for j in 0..dim {
                let lrow = i < n - 1;
                let lcol = j < n - 1;
                if s.m_l[(i, j)] != ZERO {
                    assert!(lrow && lcol && i == j + 1);
                }
                if s.m_r[(i, j)] != ZERO {
                    assert!(!lrow && !lcol && j == i + 1);
                }
                if s.a_l[(i, j)] != ZERO {
                    assert!(lrow && !lcol && j == i + n - 1);
                }
                if s.a_r[(i, j)] != ZERO {
                    assert!(!lrow && lcol && i == j + n - 1);
                }
            }
        }
    }

    #[test]
    fn algebra_n3() {
        let p = SymbolParams::equal_strips(K, 7.0, 3, 1.0, 0.05);
        let rep = verify_symbol_algebra(&p).unwrap();
        assert!(rep.passed(), "{:?}", rep.violations);
        assert_eq!(rep.relations.len(), 10);
    }

    #[test]
    fn propagative_m_entries_bounded() {
        for i in 1..50 {
            let xi = i as f64 * 0.019 * K;
            let p = SymbolParams::equal_strips(K, xi, 5, 1.0, 0.05);
            let s = symbol_matrices(&p).unwrap();
            assert!(max_entry(&s.m_l) <= 1.0 + 1e-12);
            assert!(max_entry(&s.m_r) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn infinite_end_strips() {
        let p = SymbolParams {
            widths: vec![f64::INFINITY, 1.0, 1.0, f64::INFINITY],
            ..SymbolParams::equal_strips(K, 30.0, 4, 1.0, 0.1)
        };
        let s = symbol_matrices(&p).unwrap();
        let lambda = p.lambda().value;
        let rho_j = p.rho_j().unwrap();
        // first A_l entry sees an unbounded strip
        assert!((s.a_l[(0, 3)] - rho_j * (-lambda * 0.1).exp()).norm() < 1e-15);
    }
}
