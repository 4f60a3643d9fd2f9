//! Dense complex-matrix kernels used by every solver in the crate.
//!
//! Matrices are plain [`nalgebra::DMatrix`] values over [`Complex64`]. The
//! Hermitian eigendecomposition is the workhorse: pseudo-inverses, maximum
//! eigenvalues and the eigen-shift shortcut of the single-PU precoder step all
//! go through [`hermitian_eig`].

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;
pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;

/// Relative threshold below which an eigenvalue counts as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Eigendecomposition `A = Q diag(values) Q^H` of a Hermitian matrix, with
/// eigenvalues sorted in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub vectors: CMatrix,
    pub values: RVector,
}

impl HermitianEig {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max_value(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.values[0]
        }
    }

    /// `Q diag(f(λ)) Q^H`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = f(self.values[j]);
            scaled.column_mut(j).scale_mut(s);
        }
        scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map_values(|v| v)
    }
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

pub fn is_square(a: &CMatrix) -> bool {
    a.nrows() == a.ncols()
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diagonal().sum()
}

/// Frobenius inner product `Tr(A^H B)`.
pub fn inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn frob_sq(a: &CMatrix) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn diag(v: &CVector) -> CMatrix {
    CMatrix::from_diagonal(v)
}

/// Eigendecomposition of a Hermitian matrix. The input is symmetrized first,
/// so products that are Hermitian only up to round-off are accepted.
pub fn hermitian_eig(a: &CMatrix) -> Result<HermitianEig> {
    if !is_square(a) {
        return Err(Error::Dimension(format!(
            "eigendecomposition of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(HermitianEig {
            vectors: CMatrix::zeros(0, 0),
            values: RVector::zeros(0),
        });
    }
    if a.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::Numerical("non-finite entry in eigendecomposition input".into()));
    }
    let sym = hermitian_part(a);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("Hermitian eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = RVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(HermitianEig { vectors, values })
}

/// Largest eigenvalue of a Hermitian PSD matrix, clamped at zero.
pub fn max_eigenvalue(a: &CMatrix) -> Result<f64> {
    Ok(hermitian_eig(a)?.max_value().max(0.0))
}

/// Moore–Penrose pseudo-inverse of a Hermitian PSD matrix. Eigenvalues below
/// `tol * λ_max` are treated as zero; anything more negative than
/// `-tol * λ_max` is rejected.
pub fn pinv_psd(a: &CMatrix, tol: f64) -> Result<CMatrix> {
    let eig = hermitian_eig(a)?;
    pinv_from_eig(&eig, tol)
}

pub fn pinv_from_eig(eig: &HermitianEig, tol: f64) -> Result<CMatrix> {
    let n = eig.dim();
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let lmax = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = tol * lmax;
    let lmin = eig.values[n - 1];
    if lmin < -cut {
        return Err(Error::NotPsd { min_eig: lmin });
    }
    Ok(eig.map_values(|v| if v > cut && v > 0.0 { 1.0 / v } else { 0.0 }))
}

/// `θ^H (B ⊙ C^T) θ`, which equals `Tr(B diag(θ) C diag(θ)^H)`.
pub fn hadamard_quadratic(b: &CMatrix, cm: &CMatrix, theta: &CVector) -> Result<Complex64> {
    let m = theta.len();
    if b.shape() != (m, m) || cm.shape() != (m, m) {
        return Err(Error::Dimension(format!(
            "hadamard quadratic with B {:?}, C {:?}, θ of length {m}",
            b.shape(),
            cm.shape()
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..m {
        for i in 0..m {
            acc += theta[i].conj() * b[(i, j)] * cm[(j, i)] * theta[j];
        }
    }
    Ok(acc)
}

/// `B ⊙ C^T`.
pub fn hadamard_transposed(b: &CMatrix, cm: &CMatrix) -> CMatrix {
    let n = b.nrows();
    CMatrix::from_fn(n, n, |i, j| b[(i, j)] * cm[(j, i)])
}

/// Cholesky factorization of a Hermitian positive definite matrix.
pub fn cholesky(a: &CMatrix) -> Result<nalgebra::Cholesky<Complex64, nalgebra::Dyn>> {
    hermitian_part(a)
        .cholesky()
        .ok_or_else(|| Error::Singular(format!("{}x{} matrix is not positive definite", a.nrows(), a.ncols())))
}

/// Solves `A X = B` for Hermitian positive definite `A`.
pub fn hpd_solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    Ok(cholesky(a)?.solve(b))
}

/// Inverse of a Hermitian positive definite matrix, returned Hermitian.
pub fn hpd_inverse(a: &CMatrix) -> Result<CMatrix> {
    let inv = cholesky(a)?.inverse();
    Ok(hermitian_part(&inv))
}

/// Natural-log determinant of a Hermitian positive definite matrix.
pub fn ln_det_hpd(a: &CMatrix) -> Result<f64> {
    let chol = cholesky(a)?;
    let l = chol.l_dirty();
    Ok(2.0 * (0..a.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>())
}

/// Phase-only projection `e^{j arg v_m}`, with `arg 0 = 0`.
pub fn unit_phase(v: &CVector) -> CVector {
    v.map(|x| {
        let r = x.norm();
        if r > 0.0 {
            x / r
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

/// Real embedding `[[Re A, -Im A], [Im A, Re A]]` of a complex matrix, so that
/// `z^H A z = x^T Ā x` with `x = [Re z; Im z]` for Hermitian `A`.
pub fn real_embedding(a: &CMatrix) -> RMatrix {
    let (r, cdim) = a.shape();
    let mut out = RMatrix::zeros(2 * r, 2 * cdim);
    for j in 0..cdim {
        for i in 0..r {
            let v = a[(i, j)];
            out[(i, j)] = v.re;
            out[(i, j + cdim)] = -v.im;
            out[(i + r, j)] = v.im;
            out[(i + r, j + cdim)] = v.re;
        }
    }
    out
}

pub fn to_real(z: &CVector) -> RVector {
    let n = z.len();
    RVector::from_fn(2 * n, |i, _| if i < n { z[i].re } else { z[i - n].im })
}

pub fn from_real(x: &RVector) -> CVector {
    let n = x.len() / 2;
    CVector::from_fn(n, |i, _| Complex64::new(x[i], x[i + n]))
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    pub fn randn_c<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, r: usize, cdim: usize) -> CMatrix {
        CMatrix::from_fn(r, cdim, |_, _| randn_c(rng))
    }

    pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
        CVector::from_fn(n, |_, _| randn_c(rng))
    }

    pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> CMatrix {
        let b = random_matrix(rng, n, rank);
        &b * b.adjoint()
    }

    pub fn rel_frob(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eig_of_identity() {
        let e = hermitian_eig(&identity(2)).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        let qq = &e.vectors * e.vectors.adjoint();
        assert!((qq - identity(2)).norm() < 1e-12);
    }

    #[test]
    fn eig_of_diagonal_sorted_descending() {
        let a = diag(&CVector::from_vec(vec![c(1.0, 0.0), c(3.0, 0.0)]));
        let e = hermitian_eig(&a).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        // Q is a (phased) permutation of I
        assert!((e.vectors[(1, 0)].norm() - 1.0).abs() < 1e-12);
        assert!((e.vectors[(0, 1)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_reconstructs_random_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = random_psd(&mut rng, 4, 4);
            let e = hermitian_eig(&a).unwrap();
            assert!(e.values.iter().all(|&v| v >= -1e-12));
            assert!(rel_frob(&e.reconstruct(), &a) < 1e-9);
            let qq = &e.vectors * e.vectors.adjoint();
            assert!((qq - identity(4)).norm() < 1e-10);
        }
    }

    #[test]
    fn eig_rejects_non_square() {
        assert!(matches!(hermitian_eig(&CMatrix::zeros(2, 3)), Err(Error::Dimension(_))));
    }

    #[test]
    fn pinv_cases() {
        let i2 = identity(2);
        assert!((pinv_psd(&i2, RANK_TOL).unwrap() - &i2).norm() < 1e-12);
        let a = diag(&CVector::from_vec(vec![c(2.0, 0.0), c(0.0, 0.0)]));
        let p = pinv_psd(&a, RANK_TOL).unwrap();
        let want = diag(&CVector::from_vec(vec![c(0.5, 0.0), c(0.0, 0.0)]));
        assert!((p - want).norm() < 1e-12);
    }

    #[test]
    fn pinv_rejects_indefinite() {
        let a = diag(&CVector::from_vec(vec![c(2.0, 0.0), c(-1.0, 0.0)]));
        assert!(matches!(pinv_psd(&a, RANK_TOL), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn pinv_penrose_conditions_up_to_64() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(n, rank) in &[(3, 3), (6, 2), (16, 9), (64, 40), (64, 64)] {
            let a = random_psd(&mut rng, n, rank);
            let p = pinv_psd(&a, RANK_TOL).unwrap();
            let scale = a.norm();
            assert!((&a * &p * &a - &a).norm() / scale < 1e-8, "A P A = A, n={n}");
            assert!((&p * &a * &p - &p).norm() / p.norm() < 1e-8, "P A P = P, n={n}");
            let ap = &a * &p;
            let pa = &p * &a;
            assert!((ap.adjoint() - &ap).norm() < 1e-8 * ap.norm().max(1.0));
            assert!((pa.adjoint() - &pa).norm() < 1e-8 * pa.norm().max(1.0));
        }
    }

    #[test]
    fn hadamard_quadratic_cases() {
        let m = 3;
        let ones = CVector::from_element(m, c(1.0, 0.0));
        let v = hadamard_quadratic(&identity(m), &identity(m), &ones).unwrap();
        assert!((v - c(m as f64, 0.0)).norm() < 1e-14);

        let b = CMatrix::from_element(1, 1, c(0.3, -1.2));
        let cm = CMatrix::from_element(1, 1, c(2.0, 0.5));
        let th = CVector::from_element(1, c(0.6, 0.8));
        let v = hadamard_quadratic(&b, &cm, &th).unwrap();
        assert!((v - b[(0, 0)] * cm[(0, 0)] * th[0].norm_sqr()).norm() < 1e-14);

        assert!(hadamard_quadratic(&identity(2), &identity(3), &ones).is_err());
    }

    #[test]
    fn hadamard_quadratic_matches_trace_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = random_matrix(&mut rng, 3, 3);
        let cm = random_matrix(&mut rng, 3, 3);
        let th = random_vector(&mut rng, 3);
        let t = diag(&th);
        let direct = trace(&(&b * &t * &cm * t.adjoint()));
        let via = hadamard_quadratic(&b, &cm, &th).unwrap();
        assert!((direct - via).norm() < 1e-10);
        let via2 = (th.adjoint() * hadamard_transposed(&b, &cm) * &th)[(0, 0)];
        assert!((direct - via2).norm() < 1e-10);
    }

    #[test]
    fn max_eigenvalue_cases() {
        assert!((max_eigenvalue(&identity(3)).unwrap() - 1.0).abs() < 1e-14);
        let a = diag(&CVector::from_vec(vec![c(5.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)]));
        assert!((max_eigenvalue(&a).unwrap() - 5.0).abs() < 1e-13);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_psd(&mut rng, 7, 3);
        let full = hermitian_eig(&a).unwrap();
        let top = full.values.iter().cloned().fold(f64::MIN, f64::max);
        assert!((max_eigenvalue(&a).unwrap() - top).abs() < 1e-10);
    }

    #[test]
    fn ln_det_and_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_psd(&mut rng, 4, 4) + identity(4);
        let e = hermitian_eig(&a).unwrap();
        let want: f64 = e.values.iter().map(|v| v.ln()).sum();
        assert!((ln_det_hpd(&a).unwrap() - want).abs() < 1e-10);
        let inv = hpd_inverse(&a).unwrap();
        assert!((&a * inv - identity(4)).norm() < 1e-10);
    }

    #[test]
    fn real_embedding_preserves_quadratic_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_psd(&mut rng, 3, 2);
        let z = random_vector(&mut rng, 3);
        let x = to_real(&z);
        let lhs = (z.adjoint() * &a * &z)[(0, 0)].re;
        let rhs = (x.transpose() * real_embedding(&a) * &x)[(0, 0)];
        assert!((lhs - rhs).abs() < 1e-12);
        assert_eq!(from_real(&x), z);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn eig_shift_moves_eigenvalues(seed in any::<u64>(), n in 1usize..7, shift in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_psd(&mut rng, n, n);
            let e0 = hermitian_eig(&a).unwrap();
            let e1 = hermitian_eig(&(&a + identity(n).scale(shift))).unwrap();
            for i in 0..n {
                prop_assert!((e1.values[i] - e0.values[i] - shift).abs() < 1e-10 * (1.0 + e0.values[0]));
            }
        }

        #[test]
        fn hadamard_identity_holds(seed in any::<u64>(), m in 1usize..9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = random_matrix(&mut rng, m, m);
            let cm = random_matrix(&mut rng, m, m);
            let th = random_vector(&mut rng, m);
            let t = diag(&th);
            let direct = trace(&(&b * &t * &cm * t.adjoint()));
            let via = hadamard_quadratic(&b, &cm, &th).unwrap();
            prop_assert!((direct - via).norm() < 1e-10 * (1.0 + direct.norm()));
        }
    }
}
