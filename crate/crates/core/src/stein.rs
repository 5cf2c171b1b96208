//! The Stein operator `X -> X - A* X A`, direct and series-based solvers for
//! the associated matrix equations, and stability certificates built on them.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::matrix::{
    classify_stability, complex_eigenvalues, nullity, CMatrix, HermitianMatrix, StabilityClass,
    DEFAULT_CLUSTER_TOL,
};

/// Relative residual bound enforced by [`stein_solve`] on its own output.
const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

/// Tolerance for the positive-(semi)definiteness decisions inside the
/// stability certificates.
const CERTIFICATE_TOL: f64 = 1e-10;

/// Singular-value cutoff factor for the nullity count of the certificate.
const NULLITY_CUTOFF_FACTOR: f64 = 1e-10;

/// Series truncation: stop once `rho(A)^K <= SERIES_DECAY_TOL`, capped at
/// `SERIES_MAX_TERMS` terms.
const SERIES_DECAY_TOL: f64 = 1e-12;
const SERIES_MAX_TERMS: usize = 10_000;

/// Which sign variant of the Stein equation to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteinSign {
    /// `X - A* X A = Q`
    Minus,
    /// `X + A* X A = Q`
    Plus,
}

/// A Stein equation instance.
#[derive(Debug, Clone)]
pub struct SteinProblem {
    a: CMatrix,
    q: HermitianMatrix,
    sign: SteinSign,
}

impl SteinProblem {
    pub fn new(a: CMatrix, q: HermitianMatrix, sign: SteinSign) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        if a.nrows() != q.dim() {
            return Err(Error::DimensionMismatch {
                context: "stein coefficients A vs Q",
                left: a.nrows(),
                right: q.dim(),
            });
        }
        Ok(Self { a, q, sign })
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn q(&self) -> &HermitianMatrix {
        &self.q
    }

    pub fn sign(&self) -> SteinSign {
        self.sign
    }
}

/// Applies the Stein operator: `symmetrize(X - A* X A)`.
pub fn stein_apply(a: &CMatrix, x: &HermitianMatrix) -> Result<HermitianMatrix> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if a.nrows() != x.dim() {
        return Err(Error::DimensionMismatch {
            context: "stein operator A vs X",
            left: a.nrows(),
            right: x.dim(),
        });
    }
    HermitianMatrix::symmetrize(&(x.matrix() - a.adjoint() * x.matrix() * a))
}

/// Solves the selected Stein equation by vectorization: the unknown is the
/// solution of an `n^2`-by-`n^2` linear system built from the Kronecker
/// product `A^T (x) A*`.
///
/// The minus variant requires `rho(A) < 1`; the plus variant requires that no
/// eigenvalue pair satisfies `conj(lambda_i) lambda_j = -1`. The result is
/// symmetrized and checked against the equation to a relative residual of
/// 1e-10.
pub fn stein_solve(sp: &SteinProblem) -> Result<HermitianMatrix> {
    let a = &sp.a;
    let n = a.nrows();
    let eigs = complex_eigenvalues(a)?;
    match sp.sign {
        SteinSign::Minus => {
            let rho = eigs.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
            if rho >= 1.0 {
                return Err(Error::NoUniqueSolution(format!(
                    "minus-sign equation needs rho(A) < 1, got rho = {rho}"
                )));
            }
        }
        SteinSign::Plus => {
            for li in &eigs {
                for lj in &eigs {
                    if (Complex::new(1.0, 0.0) + li.conj() * lj).norm() <= 1e-12 {
                        return Err(Error::NoUniqueSolution(format!(
                            "plus-sign equation is singular: conj({li}) * {lj} = -1"
                        )));
                    }
                }
            }
        }
    }

    let op = a.transpose().kronecker(&a.adjoint());
    let identity = CMatrix::identity(n * n, n * n);
    let system = match sp.sign {
        SteinSign::Minus => identity - op,
        SteinSign::Plus => identity + op,
    };
    let rhs = CMatrix::from_column_slice(n * n, 1, sp.q.matrix().as_slice());
    let sol = system
        .lu()
        .solve(&rhs)
        .ok_or(Error::NoUniqueSolution("vectorized system is singular".into()))?;
    let x = HermitianMatrix::symmetrize(&CMatrix::from_column_slice(n, n, sol.as_slice()))?;

    let image = match sp.sign {
        SteinSign::Minus => stein_apply(a, &x)?,
        SteinSign::Plus => {
            HermitianMatrix::symmetrize(&(x.matrix() + a.adjoint() * x.matrix() * a))?
        }
    };
    let resid = (image.matrix() - sp.q.matrix()).norm() / sp.q.norm_fro().max(1.0);
    if resid > SOLVE_RESIDUAL_TOL {
        return Err(Error::Inconsistency(format!(
            "stein solve residual {resid:.3e} exceeds {SOLVE_RESIDUAL_TOL:.0e}"
        )));
    }
    Ok(x)
}

/// Constructive solution of `X - A* X A = Q` as the truncated series
/// `sum_k (A^k)* Q A^k`, valid for `rho(A) < 1`. The truncation length is the
/// smallest `K` with `rho(A)^K <= 1e-12`, capped at 10^4 terms.
pub fn stein_solve_series(a: &CMatrix, q: &HermitianMatrix) -> Result<HermitianMatrix> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if a.nrows() != q.dim() {
        return Err(Error::DimensionMismatch {
            context: "stein series A vs Q",
            left: a.nrows(),
            right: q.dim(),
        });
    }
    let eigs = complex_eigenvalues(a)?;
    let rho = eigs.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if rho >= 1.0 {
        return Err(Error::NoUniqueSolution(format!(
            "series solution needs rho(A) < 1, got rho = {rho}"
        )));
    }
    let terms = if rho <= f64::MIN_POSITIVE {
        a.nrows()
    } else {
        (SERIES_DECAY_TOL.ln() / rho.ln()).ceil() as usize
    }
    .min(SERIES_MAX_TERMS);

    let mut sum = q.matrix().clone();
    let mut term = q.matrix().clone();
    for _ in 0..terms {
        term = a.adjoint() * term * a;
        sum += &term;
    }
    HermitianMatrix::symmetrize(&sum)
}

/// How a stability certificate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateBasis {
    /// The Stein image was positive definite.
    SteinDefinite,
    /// The Stein image was positive semidefinite (but not definite).
    SteinSemidefinite,
    /// Neither certificate applied; the class comes from the spectrum.
    SpectrumFallback,
}

/// Outcome of a Stein-based stability certificate.
#[derive(Debug, Clone)]
pub struct SteinCertificate {
    pub class: StabilityClass,
    /// Certified number of unimodular eigenvalues (counting multiplicities),
    /// available only when a Stein certificate applied.
    pub certified_unimodular_count: Option<usize>,
    pub basis: CertificateBasis,
}

/// Certifies discrete-time stability of `A` from the sign of `S_A(X0)` for a
/// positive definite trial matrix `X0`.
///
/// A positive definite image certifies asymptotic stability; a positive
/// semidefinite image certifies Lyapunov stability and its nullity counts the
/// unimodular eigenvalues of `A`. When neither holds the classification falls
/// back to the spectrum.
pub fn certify_stability_via_stein(
    a: &CMatrix,
    x0: &HermitianMatrix,
) -> Result<SteinCertificate> {
    if !x0.is_pd(CERTIFICATE_TOL)? {
        return Err(Error::Precondition(
            "certificate trial matrix X0 must be positive definite".into(),
        ));
    }
    let image = stein_apply(a, x0)?;
    if image.is_pd(CERTIFICATE_TOL)? {
        Ok(SteinCertificate {
            class: StabilityClass::AsymptoticallyStable,
            certified_unimodular_count: Some(0),
            basis: CertificateBasis::SteinDefinite,
        })
    } else if image.is_psd(CERTIFICATE_TOL)? {
        let count = nullity(image.matrix(), NULLITY_CUTOFF_FACTOR)?;
        Ok(SteinCertificate {
            class: StabilityClass::LyapunovStable,
            certified_unimodular_count: Some(count),
            basis: CertificateBasis::SteinSemidefinite,
        })
    } else {
        Ok(SteinCertificate {
            class: classify_stability(a, DEFAULT_CLUSTER_TOL)?,
            certified_unimodular_count: None,
            basis: CertificateBasis::SpectrumFallback,
        })
    }
}

/// Strength of the side condition `Q - A* Q A` for the plus-sign certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionStrength {
    Strict,
    NonStrict,
    Violated,
}

/// Classifies `Q - A* Q A` as positive definite, positive semidefinite, or
/// neither. Both the strict and the non-strict variant of the plus-sign
/// certificate are meaningful, so the caller learns which one held.
pub fn plus_sign_condition(a: &CMatrix, q: &HermitianMatrix) -> Result<ConditionStrength> {
    let diff = stein_apply(a, q)?;
    if diff.is_pd(CERTIFICATE_TOL)? {
        Ok(ConditionStrength::Strict)
    } else if diff.is_psd(CERTIFICATE_TOL)? {
        Ok(ConditionStrength::NonStrict)
    } else {
        Ok(ConditionStrength::Violated)
    }
}

/// Plus-sign certificate: solves `X + A* X A = Q` for positive definite `Q`
/// and, when the solution is positive definite, certifies asymptotic or
/// Lyapunov stability depending on whether `Q > A* Q A` holds strictly or
/// non-strictly. Any other outcome falls back to the spectrum.
pub fn certify_stability_via_stein_plus(
    a: &CMatrix,
    q: &HermitianMatrix,
) -> Result<SteinCertificate> {
    if !q.is_pd(CERTIFICATE_TOL)? {
        return Err(Error::Precondition(
            "plus-sign certificate needs positive definite Q".into(),
        ));
    }
    let x = stein_solve(&SteinProblem::new(a.clone(), q.clone(), SteinSign::Plus)?)?;
    let strength = plus_sign_condition(a, q)?;
    let fallback = |class| SteinCertificate {
        class,
        certified_unimodular_count: None,
        basis: CertificateBasis::SpectrumFallback,
    };
    if !x.is_pd(CERTIFICATE_TOL)? {
        return Ok(fallback(classify_stability(a, DEFAULT_CLUSTER_TOL)?));
    }
    match strength {
        ConditionStrength::Strict => Ok(SteinCertificate {
            class: StabilityClass::AsymptoticallyStable,
            certified_unimodular_count: Some(0),
            basis: CertificateBasis::SteinDefinite,
        }),
        ConditionStrength::NonStrict => Ok(SteinCertificate {
            class: StabilityClass::LyapunovStable,
            certified_unimodular_count: None,
            basis: CertificateBasis::SteinSemidefinite,
        }),
        ConditionStrength::Violated => Ok(fallback(classify_stability(a, DEFAULT_CLUSTER_TOL)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::C64;

    fn c(re: f64, im: f64) -> C64 {
        Complex::new(re, im)
    }

    #[test]
    fn apply_basics() {
        let q = HermitianMatrix::from_real_diagonal(&[1.0, 2.0]);
        let zero = CMatrix::zeros(2, 2);
        assert_eq!(stein_apply(&zero, &q).unwrap(), q);

        let id = CMatrix::identity(2, 2);
        assert_eq!(
            stein_apply(&id, &q).unwrap().matrix().norm(),
            0.0
        );

        let a = CMatrix::from_row_slice(1, 1, &[c(0.5, 0.0)]);
        let x = HermitianMatrix::from_real_diagonal(&[4.0 / 3.0]);
        let s = stein_apply(&a, &x).unwrap();
        assert!((s.matrix()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn solve_scalar_geometric_series() {
        let a = CMatrix::from_row_slice(1, 1, &[c(0.5, 0.0)]);
        let q = HermitianMatrix::from_real_diagonal(&[1.0]);
        let sp = SteinProblem::new(a.clone(), q.clone(), SteinSign::Minus).unwrap();
        let x = stein_solve(&sp).unwrap();
        assert!((x.matrix()[(0, 0)].re - 4.0 / 3.0).abs() < 1e-14);

        let series = stein_solve_series(&a, &q).unwrap();
        assert!((series.matrix()[(0, 0)].re - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn solve_with_zero_coefficient_returns_q() {
        let q = HermitianMatrix::from_real_diagonal(&[2.0, 0.5]);
        let sp = SteinProblem::new(CMatrix::zeros(2, 2), q.clone(), SteinSign::Minus).unwrap();
        assert_eq!(stein_solve(&sp).unwrap(), q);
    }

    #[test]
    fn solve_rejects_unstable_minus() {
        let sp = SteinProblem::new(
            CMatrix::identity(2, 2),
            HermitianMatrix::identity(2),
            SteinSign::Minus,
        )
        .unwrap();
        assert!(matches!(stein_solve(&sp), Err(Error::NoUniqueSolution(_))));
    }

    #[test]
    fn solve_rejects_singular_plus_pair() {
        // eigenvalues 1 and -1: conj(1) * (-1) = -1 makes the plus equation singular
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        let sp = SteinProblem::new(a, HermitianMatrix::identity(2), SteinSign::Plus).unwrap();
        assert!(matches!(stein_solve(&sp), Err(Error::NoUniqueSolution(_))));
    }

    #[test]
    fn plus_sign_composed_identity() {
        // for a solution of X + A* X A = Q: X - (A*)^2 X A^2 = Q - A* Q A
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.4, 0.1), c(0.2, 0.0), c(0.0, -0.1), c(0.3, 0.0)],
        );
        let q = HermitianMatrix::identity(2);
        let sp = SteinProblem::new(a.clone(), q.clone(), SteinSign::Plus).unwrap();
        let x = stein_solve(&sp).unwrap();
        let a2 = &a * &a;
        let lhs = stein_apply(&a2, &x).unwrap();
        let rhs = stein_apply(&a, &q).unwrap();
        assert!((lhs.matrix() - rhs.matrix()).norm() < 1e-10);
        assert!(x.is_pd(1e-10).unwrap());
        assert_eq!(plus_sign_condition(&a, &q).unwrap(), ConditionStrength::Strict);
    }

    #[test]
    fn certificate_from_constructed_solution() {
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.3, 0.2), c(0.1, 0.0), c(0.0, 0.0), c(-0.4, 0.1)],
        );
        let x0 = stein_solve(
            &SteinProblem::new(a.clone(), HermitianMatrix::identity(2), SteinSign::Minus).unwrap(),
        )
        .unwrap();
        let cert = certify_stability_via_stein(&a, &x0).unwrap();
        assert_eq!(cert.class, StabilityClass::AsymptoticallyStable);
        assert_eq!(cert.basis, CertificateBasis::SteinDefinite);
    }

    #[test]
    fn certificate_counts_unimodular_eigenvalues() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        let cert = certify_stability_via_stein(&a, &HermitianMatrix::identity(2)).unwrap();
        assert_eq!(cert.class, StabilityClass::LyapunovStable);
        assert_eq!(cert.certified_unimodular_count, Some(1));
        assert_eq!(cert.basis, CertificateBasis::SteinSemidefinite);
    }

    #[test]
    fn certificate_falls_back_to_spectrum() {
        let a = CMatrix::from_row_slice(1, 1, &[c(2.0, 0.0)]);
        let cert = certify_stability_via_stein(&a, &HermitianMatrix::identity(1)).unwrap();
        assert_eq!(cert.class, StabilityClass::Unstable);
        assert_eq!(cert.basis, CertificateBasis::SpectrumFallback);
        assert_eq!(cert.certified_unimodular_count, None);
    }

    #[test]
    fn certificate_rejects_indefinite_trial() {
        let a = CMatrix::identity(2, 2);
        let x0 = HermitianMatrix::from_real_diagonal(&[1.0, -1.0]);
        assert!(matches!(
            certify_stability_via_stein(&a, &x0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn plus_certificate_on_contraction() {
        let a = CMatrix::from_row_slice(1, 1, &[c(0.5, 0.0)]);
        let cert = certify_stability_via_stein_plus(&a, &HermitianMatrix::identity(1)).unwrap();
        assert_eq!(cert.class, StabilityClass::AsymptoticallyStable);
    }
}
