//! Tikhonov-regularized least squares through a full SVD, and the minimal
//! eigenpair of a Hermitian definite pencil.

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::{Error, Result};

fn check_finite<T: ComplexField<RealField = f64>>(m: &DMatrix<T>, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.clone().is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// A factored operator ready for repeated Tikhonov solves with different
/// right-hand sides or regularization parameters.
///
/// The SVD is checked after factoring; if `A V` and `U Σ` disagree by more
/// than a few hundred ulps of `σ₁`, the Hermitian eigen-decomposition of the
/// smaller Gram matrix is used instead.
#[derive(Debug, Clone)]
pub struct TikhonovSvd<T: ComplexField<RealField = f64>> {
    sigma: DVector<f64>,
    kind: Factor<T>,
}

#[derive(Debug, Clone)]
enum Factor<T: ComplexField<RealField = f64>> {
    Svd { u: DMatrix<T>, v_t: DMatrix<T> },
    /// `A* A = V Λ V*`.
    Normal { a: DMatrix<T>, v: DMatrix<T> },
    /// `A A* = W Λ W*`.
    Dual { a: DMatrix<T>, w: DMatrix<T> },
}

fn real_diag<T: ComplexField<RealField = f64>>(d: &DVector<f64>) -> DMatrix<T> {
    DMatrix::from_diagonal(&d.map(T::from_real))
}

impl<T: ComplexField<RealField = f64>> TikhonovSvd<T> {
    pub fn new(a: &DMatrix<T>) -> Result<Self> {
        check_finite(a, "Tikhonov operator")?;
        if let Some(svd) = SVD::try_new(a.clone(), true, true, f64::EPSILON, 0) {
            let SVD {
                u,
                v_t,
                singular_values,
            } = svd;
            let (u, v_t) = (u.expect("requested U"), v_t.expect("requested V^T"));
            let s1 = singular_values.iter().copied().fold(0.0, f64::max);
            let err = (a * v_t.adjoint() - &u * real_diag::<T>(&singular_values)).norm();
            let tol = 256.0 * f64::EPSILON * s1 * (a.nrows().max(a.ncols()) as f64).sqrt();
            if err <= tol {
                return Ok(Self {
                    sigma: singular_values,
                    kind: Factor::Svd { u, v_t },
                });
            }
        }
        Self::from_gram(a)
    }

    fn from_gram(a: &DMatrix<T>) -> Result<Self> {
        let tall = a.nrows() >= a.ncols();
        let gram = if tall { a.ad_mul(a) } else { a * a.adjoint() };
        let eig = SymmetricEigen::try_new(gram, f64::EPSILON, 0)
            .ok_or_else(|| Error::SolveFailed("Gram eigen-decomposition did not converge".into()))?;
        let sigma = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let kind = if tall {
            Factor::Normal { a: a.clone(), v: eig.eigenvectors }
        } else {
            Factor::Dual { a: a.clone(), w: eig.eigenvectors }
        };
        Ok(Self { sigma, kind })
    }

    pub fn singular_values(&self) -> &DVector<f64> {
        &self.sigma
    }

    pub fn largest_singular_value(&self) -> f64 {
        self.sigma.iter().copied().fold(0.0, f64::max)
    }

    fn rows(&self) -> usize {
        match &self.kind {
            Factor::Svd { u, .. } => u.nrows(),
            Factor::Normal { a, .. } | Factor::Dual { a, .. } => a.nrows(),
        }
    }

    /// The minimizer of `‖A x − b‖² + eps ‖x‖²`.
    pub fn solve(&self, b: &DVector<T>, eps: f64) -> Result<DVector<T>> {
        if b.len() != self.rows() {
            return Err(Error::DimensionMismatch(format!(
                "rhs has {} entries, operator has {} rows",
                b.len(),
                self.rows()
            )));
        }
        if !(eps >= 0.0) {
            return Err(Error::InvalidInput(format!("regularization must be >= 0, got {eps}")));
        }
        if !b.iter().all(|v| v.clone().is_finite()) {
            return Err(Error::NonFinite("Tikhonov right-hand side"));
        }
        let s1 = self.largest_singular_value();
        let cutoff = f64::EPSILON * s1 * s1 * self.sigma.len() as f64;
        // Filter on λ = σ²; with eps = 0 tiny eigenvalues are treated as zero.
        let inv = |s: f64| {
            let lam = s * s;
            if eps == 0.0 && lam <= cutoff {
                0.0
            } else if lam + eps > 0.0 {
                1.0 / (lam + eps)
            } else {
                0.0
            }
        };
        match &self.kind {
            Factor::Svd { u, v_t } => {
                let mut coeff = u.ad_mul(b);
                for (c, &s) in coeff.iter_mut().zip(self.sigma.iter()) {
                    let denom = s * s + eps;
                    let f = if denom > 0.0 { s / denom } else { 0.0 };
                    *c = c.clone().scale(f);
                }
                Ok(v_t.ad_mul(&coeff))
            }
            Factor::Normal { a, v } => {
                let mut coeff = v.ad_mul(&a.ad_mul(b));
                for (c, &s) in coeff.iter_mut().zip(self.sigma.iter()) {
                    *c = c.clone().scale(inv(s));
                }
                Ok(v * coeff)
            }
            Factor::Dual { a, w } => {
                let mut coeff = w.ad_mul(b);
                for (c, &s) in coeff.iter_mut().zip(self.sigma.iter()) {
                    *c = c.clone().scale(inv(s));
                }
                Ok(a.ad_mul(&(w * coeff)))
            }
        }
    }
}

/// `(A*A + eps I)^{-1} A* b` computed from the SVD of `A`.
pub fn tikhonov_solve<T: ComplexField<RealField = f64>>(
    a: &DMatrix<T>,
    b: &DVector<T>,
    eps: f64,
) -> Result<DVector<T>> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be > 0, got {eps}")));
    }
    TikhonovSvd::new(a)?.solve(b, eps)
}

/// Minimal eigenpair of `A v = λ M v` with `v* M v = 1`.
#[derive(Debug, Clone)]
pub struct GeneralizedEigenpair {
    pub value: f64,
    pub vector: DVector<Complex64>,
}

/// Rotates `v` so that its first non-negligible component is real positive.
pub fn fix_phase(v: &mut DVector<Complex64>) {
    let vmax = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if vmax == 0.0 {
        return;
    }
    if let Some(first) = v.iter().find(|c| c.norm() > 1e-8 * vmax).copied() {
        let rot = first.conj() / first.norm();
        for c in v.iter_mut() {
            *c *= rot;
        }
    }
}

fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

fn argmin(values: &DVector<f64>) -> usize {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Smallest eigenpair of the Hermitian pencil `(A, M)` with `M` positive
/// definite, via Cholesky reduction to a standard Hermitian problem.
pub fn min_generalized_eigenpair(
    a: &DMatrix<Complex64>,
    m: &DMatrix<Complex64>,
) -> Result<GeneralizedEigenpair> {
    let n = a.nrows();
    if a.ncols() != n || m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch("pencil matrices must be square and equal-sized".into()));
    }
    check_finite(a, "pencil matrix A")?;
    check_finite(m, "pencil matrix M")?;
    let chol = hermitian_part(m).cholesky().ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    // Complex square roots let an indefinite matrix "factor"; insist on a
    // real positive diagonal.
    if !l.diagonal().iter().all(|d| d.re > 0.0 && d.im.abs() <= 1e-12 * d.re) {
        return Err(Error::NotPositiveDefinite);
    }
    let x = l
        .solve_lower_triangular(&hermitian_part(a))
        .ok_or(Error::NotPositiveDefinite)?;
    let c = l
        .solve_lower_triangular(&x.adjoint())
        .ok_or(Error::NotPositiveDefinite)?;
    let eig = SymmetricEigen::try_new(hermitian_part(&c), f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigensolver("Hermitian eigensolver did not converge".into()))?;
    let i = argmin(&eig.eigenvalues);
    let y = eig.eigenvectors.column(i).into_owned();
    let mut v = l
        .adjoint()
        .solve_upper_triangular(&y)
        .ok_or(Error::NotPositiveDefinite)?;
    fix_phase(&mut v);
    Ok(GeneralizedEigenpair {
        value: eig.eigenvalues[i],
        vector: v,
    })
}

/// Like [`min_generalized_eigenpair`] but for a merely semidefinite,
/// possibly numerically singular `M`: the pencil is restricted to the
/// eigenspace of `M` whose eigenvalues exceed `rel_floor · λ_max(M)`.
///
/// Directions discarded this way carry (relatively) no `M`-norm, so they
/// cannot satisfy the normalization `v* M v = 1` with bounded size anyway.
pub fn min_generalized_eigenpair_truncated(
    a: &DMatrix<Complex64>,
    m: &DMatrix<Complex64>,
    rel_floor: f64,
) -> Result<GeneralizedEigenpair> {
    let n = a.nrows();
    if a.ncols() != n || m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch("pencil matrices must be square and equal-sized".into()));
    }
    check_finite(a, "pencil matrix A")?;
    check_finite(m, "pencil matrix M")?;
    let em = SymmetricEigen::try_new(hermitian_part(m), f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigensolver("Gram eigensolver did not converge".into()))?;
    let lmax = em.eigenvalues.iter().copied().fold(0.0, f64::max);
    if !(lmax > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    let keep: Vec<usize> = (0..n)
        .filter(|&i| em.eigenvalues[i] > rel_floor * lmax)
        .collect();
    // Columns of B map reduced coordinates y to v = B y with v* M v = y* y.
    let mut b = DMatrix::<Complex64>::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let s = 1.0 / em.eigenvalues[i].sqrt();
        b.set_column(c, &(em.eigenvectors.column(i) * Complex64::new(s, 0.0)));
    }
    let reduced = hermitian_part(&(b.adjoint() * hermitian_part(a) * &b));
    let eig = SymmetricEigen::try_new(reduced, f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigensolver("Hermitian eigensolver did not converge".into()))?;
    let i = argmin(&eig.eigenvalues);
    let mut v = &b * eig.eigenvectors.column(i);
    fix_phase(&mut v);
    Ok(GeneralizedEigenpair {
        value: eig.eigenvalues[i],
        vector: v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(r, c, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<Complex64> {
        DVector::from_fn(n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    /// Dense normal-equations oracle, independent of the SVD path.
    fn normal_equations(a: &DMatrix<Complex64>, b: &DVector<Complex64>, eps: f64) -> DVector<Complex64> {
        let n = a.ncols();
        let lhs = a.adjoint() * a + DMatrix::<Complex64>::identity(n, n) * Complex64::new(eps, 0.0);
        lhs.lu().solve(&(a.adjoint() * b)).unwrap()
    }

    #[test]
    fn identity_small_eps() {
        let a = DMatrix::<Complex64>::identity(3, 3);
        let b = DVector::from_vec(vec![
            Complex64::new(1.0, 2.0),
            Complex64::new(-0.5, 0.0),
            Complex64::new(0.0, 3.0),
        ]);
        let x = tikhonov_solve(&a, &b, 1e-12).unwrap();
        assert!((x - &b).norm() <= 1e-9 * b.norm());
    }

    #[test]
    fn scalar_closed_form() {
        let a = DMatrix::from_element(1, 1, 2.0f64);
        let b = DVector::from_element(1, 6.0f64);
        let x = tikhonov_solve(&a, &b, 1.0).unwrap();
        assert!((x[0] - 2.4).abs() < 1e-15);
    }

    #[test]
    fn matches_normal_equations_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(&mut rng, 8, 6);
        let b = random_vector(&mut rng, 8);
        let x = tikhonov_solve(&a, &b, 0.3).unwrap();
        let oracle = normal_equations(&a, &b, 0.3);
        assert!((&x - &oracle).norm() <= 1e-10 * oracle.norm());
    }

    #[test]
    fn normal_equation_residual_large() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(r, c) in &[(40, 40), (120, 90), (200, 200)] {
            let a = random_matrix(&mut rng, r, c);
            let b = random_vector(&mut rng, r);
            let eps = 1e-3;
            let x = tikhonov_solve(&a, &b, eps).unwrap();
            let res = a.adjoint() * (&a * &x) + &x * Complex64::new(eps, 0.0) - a.adjoint() * &b;
            let anorm = a.norm();
            assert!(res.norm() <= 1e-10 * (anorm * anorm + eps) * x.norm());
        }
    }

    #[test]
    fn rank_deficient_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for &(r, c, rank) in &[(10, 8, 3), (60, 60, 20), (12, 30, 5)] {
            let a = random_matrix(&mut rng, r, rank) * random_matrix(&mut rng, rank, c);
            let b = random_vector(&mut rng, r);
            let eps = 0.05;
            let oracle = normal_equations(&a, &b, eps);
            let x = tikhonov_solve(&a, &b, eps).unwrap();
            assert!((&x - &oracle).norm() <= 1e-10 * oracle.norm());
            let gram = TikhonovSvd::from_gram(&a).unwrap().solve(&b, eps).unwrap();
            assert!((&gram - &oracle).norm() <= 1e-10 * oracle.norm());
        }
    }

    #[test]
    fn gram_path_pseudo_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let a = random_matrix(&mut rng, 9, 5);
        let b = random_vector(&mut rng, 9);
        let x = TikhonovSvd::from_gram(&a).unwrap().solve(&b, 0.0).unwrap();
        let oracle = normal_equations(&a, &b, 0.0);
        assert!((&x - &oracle).norm() <= 1e-10 * oracle.norm());
        let s = TikhonovSvd::from_gram(&a).unwrap();
        let svd = TikhonovSvd::new(&a).unwrap();
        assert!((s.largest_singular_value() - svd.largest_singular_value()).abs() <= 1e-12 * svd.largest_singular_value());
    }

    #[test]
    fn rejects_bad_input() {
        let a = DMatrix::from_element(2, 2, f64::NAN);
        let b = DVector::from_element(2, 1.0);
        assert!(matches!(tikhonov_solve(&a, &b, 1.0), Err(Error::NonFinite(_))));
        let a = DMatrix::<f64>::identity(2, 2);
        assert!(tikhonov_solve(&a, &b, 0.0).is_err());
    }

    #[test]
    fn diagonal_pencil() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]));
        let m = DMatrix::<Complex64>::identity(2, 2);
        let p = min_generalized_eigenpair(&a, &m).unwrap();
        assert!((p.value - 1.0).abs() < 1e-14);
        assert!((p.vector[0].norm()) < 1e-14);
        assert!((p.vector[1] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    fn random_pencil(rng: &mut ChaCha8Rng, n: usize) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
        let x = random_matrix(rng, n, n);
        let y = random_matrix(rng, n, n);
        let a = x.adjoint() * &x;
        let m = y.adjoint() * &y + DMatrix::<Complex64>::identity(n, n);
        (a, m)
    }

    #[test]
    fn scaling_the_metric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (a, m) = random_pencil(&mut rng, 6);
        let p1 = min_generalized_eigenpair(&a, &m).unwrap();
        let c = 4.0;
        let m4 = &m * Complex64::new(c, 0.0);
        let p4 = min_generalized_eigenpair(&a, &m4).unwrap();
        assert!((p4.value - p1.value / c).abs() < 1e-12 * p1.value.max(1.0));
        let scaled = &p1.vector / Complex64::new(c.sqrt(), 0.0);
        assert!((&p4.vector - scaled).norm() < 1e-10);
        let res = &a * &p4.vector - &m4 * &p4.vector * Complex64::new(p4.value, 0.0);
        assert!(res.norm() < 1e-12 * (a.norm() + p4.value * m4.norm()));
    }

    #[test]
    fn matches_dense_oracle_and_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (a, m) = random_pencil(&mut rng, 10);
        let p = min_generalized_eigenpair(&a, &m).unwrap();
        // Oracle: eigenvalues of the real embedding of M^{-1} A (general
        // nonsymmetric Schur path, each eigenvalue appears twice).
        let minv_a = m.clone().lu().solve(&a).unwrap();
        let n = minv_a.nrows();
        let real = DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
            let c = minv_a[(i % n, j % n)];
            match (i < n, j < n) {
                (true, true) | (false, false) => c.re,
                (true, false) => -c.im,
                (false, true) => c.im,
            }
        });
        let ev = real.complex_eigenvalues();
        let oracle = ev.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
        assert!((p.value - oracle).abs() < 1e-10 * oracle.abs().max(1.0));
        let res = &a * &p.vector - &m * &p.vector * Complex64::new(p.value, 0.0);
        assert!(res.norm() <= 1e-10 * (a.norm() + p.value * m.norm()));
        let norm = (p.vector.adjoint() * &m * &p.vector)[0];
        assert!((norm.re - 1.0).abs() < 1e-12 && norm.im.abs() < 1e-12);
        let first = p.vector.iter().find(|c| c.norm() > 1e-8).unwrap();
        assert!(first.im.abs() < 1e-14 && first.re > 0.0);
    }

    #[test]
    fn indefinite_metric_is_rejected() {
        let a = DMatrix::<Complex64>::identity(2, 2);
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
        ]));
        assert!(matches!(min_generalized_eigenpair(&a, &m), Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn truncated_agrees_on_definite_pencils() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (a, m) = random_pencil(&mut rng, 8);
        let p = min_generalized_eigenpair(&a, &m).unwrap();
        let q = min_generalized_eigenpair_truncated(&a, &m, 1e-14).unwrap();
        assert!((p.value - q.value).abs() < 1e-10 * p.value.max(1.0));
        assert!((&p.vector - &q.vector).norm() < 1e-8);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn solution_norm_is_monotone_in_eps(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_matrix(&mut rng, 12, 9);
                let b = random_vector(&mut rng, 12);
                let f = TikhonovSvd::new(&a).unwrap();
                let mut prev = f64::INFINITY;
                for p in -12..=2 {
                    let x = f.solve(&b, 10f64.powi(p)).unwrap();
                    prop_assert!(x.norm() <= prev * (1.0 + 1e-12));
                    prev = x.norm();
                }
            }
        }
    }
}
