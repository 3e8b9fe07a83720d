//! Eigenvalue, definiteness and Lyapunov solves for small dense matrices.

use nalgebra::{Complex, DMatrix, Schur, SymmetricEigen};

use crate::error::{Error, Result};

const SCHUR_MAX_ITER: usize = 10_000;

/// Threshold on real parts used by [`is_hurwitz`].
pub const HURWITZ_MARGIN: f64 = 1e-12;

/// Extreme eigenvalues of a symmetric positive definite pair `(P, Q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSummary {
    pub lambda_min_p: f64,
    pub lambda_max_p: f64,
    pub lambda_min_q: f64,
}

fn check_square(a: &DMatrix<f64>, what: &str) -> Result<()> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "{what} must be square and non-empty, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    check_square(a, "matrix")?;
    let schur = Schur::try_new(a.clone(), f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::NoConvergence("real Schur decomposition".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// True iff every eigenvalue has real part below `-1e-12`.
pub fn is_hurwitz(a: &DMatrix<f64>) -> bool {
    match spectral_abscissa(a) {
        Ok(alpha) => alpha < -HURWITZ_MARGIN,
        Err(_) => false,
    }
}

pub(crate) fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    let scale = m.amax().max(1.0);
    let asym = asymmetry(m);
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    Ok(())
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_square(m, "matrix")?;
    check_symmetric(m)?;
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

fn positive_extremes(m: &DMatrix<f64>) -> Result<(f64, f64)> {
    let ev = symmetric_eigenvalues(m)?;
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if lo <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: lo });
    }
    Ok((lo, hi))
}

pub fn spectral_summary(p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<SpectralSummary> {
    let (lambda_min_p, lambda_max_p) = positive_extremes(p)?;
    let (lambda_min_q, _) = positive_extremes(q)?;
    Ok(SpectralSummary {
        lambda_min_p,
        lambda_max_p,
        lambda_min_q,
    })
}

/// Solves `AᵀP + PA = -Q` for symmetric positive definite `P`.
///
/// Bartels-Stewart on the complex Schur form `A = U T Uᴴ`: with `Y = Uᴴ P U`
/// the equation becomes `Tᴴ Y + Y T = -Uᴴ Q U`, which is solved entry by entry
/// in forward order because `T` is upper triangular.
pub fn lyapunov_solve(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(a, "A")?;
    check_square(q, "Q")?;
    if a.nrows() != q.nrows() {
        return Err(Error::Dimension(format!(
            "A is {0}x{0} but Q is {1}x{1}",
            a.nrows(),
            q.nrows()
        )));
    }
    check_symmetric(q)?;
    let alpha = spectral_abscissa(a)?;
    if alpha >= -HURWITZ_MARGIN {
        return Err(Error::NotHurwitz {
            spectral_abscissa: alpha,
        });
    }

    let n = a.nrows();
    let ac = a.map(|v| Complex::new(v, 0.0));
    let schur = Schur::try_new(ac, f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::NoConvergence("complex Schur decomposition".into()))?;
    let (u, t) = schur.unpack();
    let qc = q.map(|v| Complex::new(v, 0.0));
    let rhs = u.adjoint() * qc * &u;

    let mut y = DMatrix::<Complex<f64>>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = -rhs[(i, j)];
            for k in 0..i {
                acc -= t[(k, i)].conj() * y[(k, j)];
            }
            for k in 0..j {
                acc -= y[(i, k)] * t[(k, j)];
            }
            let denom = t[(i, i)].conj() + t[(j, j)];
            y[(i, j)] = acc / denom;
        }
    }
    let pc = &u * y * u.adjoint();
    let p = pc.map(|z| z.re);
    Ok((&p + p.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn am() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -1.4])
    }

    #[test]
    fn scalar_lyapunov() {
        let p = lyapunov_solve(&DMatrix::from_element(1, 1, -1.0), &DMatrix::from_element(1, 1, 2.0))
            .unwrap();
        assert!((p[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unstable_lyapunov_rejected() {
        let err = lyapunov_solve(&DMatrix::from_element(1, 1, 1.0), &DMatrix::from_element(1, 1, 1.0))
            .unwrap_err();
        assert!(matches!(err, Error::NotHurwitz { spectral_abscissa } if spectral_abscissa > 0.0));
    }

    #[test]
    fn asymmetric_q_rejected() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(lyapunov_solve(&am(), &q), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn robot_arm_lyapunov_against_kronecker_solve() {
        let a = am();
        let q = DMatrix::<f64>::identity(2, 2);
        let p = lyapunov_solve(&a, &q).unwrap();
        // Oracle: (I ⊗ Aᵀ + Aᵀ ⊗ I) vec(P) = -vec(Q)
        let n = 2;
        let eye = DMatrix::<f64>::identity(n, n);
        let at = a.transpose();
        let k = eye.kronecker(&at) + at.kronecker(&eye);
        let rhs = -DMatrix::from_column_slice(n * n, 1, q.as_slice());
        let vecp = k.lu().solve(&rhs).unwrap();
        let oracle = DMatrix::from_column_slice(n, n, vecp.as_slice());
        assert!((&p - &oracle).amax() < 1e-12);
        let resid = a.transpose() * &p + &p * &a + &q;
        assert!(resid.amax() <= 1e-10);
        assert!(asymmetry(&p) <= 1e-12);
    }

    #[test]
    fn hurwitz_examples() {
        assert!(is_hurwitz(&am()));
        // A_m + b θᵀ for θ = [2, 2]: s² - 0.6 s - 1 has root 0.3 + sqrt(1.09) > 0
        let hbar = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.6]);
        let pos_root = 0.3 + (0.09f64 + 1.0).sqrt();
        assert!((spectral_abscissa(&hbar).unwrap() - pos_root).abs() < 1e-12);
        assert!(!is_hurwitz(&hbar));
        assert!(!is_hurwitz(&DMatrix::zeros(3, 3)));
    }

    #[test]
    fn spectral_summary_diag() {
        let p = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 4.0]));
        let s = spectral_summary(&p, &DMatrix::identity(2, 2)).unwrap();
        assert_eq!((s.lambda_min_p, s.lambda_max_p, s.lambda_min_q), (1.0, 4.0, 1.0));
        let s = spectral_summary(&DMatrix::identity(2, 2), &DMatrix::identity(2, 2)).unwrap();
        assert_eq!((s.lambda_min_p, s.lambda_max_p), (1.0, 1.0));
    }

    #[test]
    fn spectral_summary_rejects_indefinite() {
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            spectral_summary(&p, &DMatrix::identity(2, 2)),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn robot_arm_p_eigenvalues_from_char_poly() {
        let p = lyapunov_solve(&am(), &DMatrix::identity(2, 2)).unwrap();
        let s = spectral_summary(&p, &DMatrix::identity(2, 2)).unwrap();
        // 2x2 symmetric: λ = tr/2 ± sqrt(tr²/4 - det)
        let tr = p[(0, 0)] + p[(1, 1)];
        let det = p[(0, 0)] * p[(1, 1)] - p[(0, 1)] * p[(1, 0)];
        let disc = (tr * tr / 4.0 - det).sqrt();
        assert!((s.lambda_min_p - (tr / 2.0 - disc)).abs() < 1e-12);
        assert!((s.lambda_max_p - (tr / 2.0 + disc)).abs() < 1e-12);
    }
}
