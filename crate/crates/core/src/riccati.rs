//! The Riccati operator `X -> H + A* X (I + G X)^{-1} A`, its closed-loop
//! matrix, residuals, the matrix-pencil solution check, and an existence
//! certificate for positive semidefinite solutions.

use crate::error::{Error, Result};
use crate::matrix::{all_finite, loewner_geq, CMatrix, HermitianMatrix};

/// Tolerance used when checking the coefficient matrices for positive
/// semidefiniteness at problem construction.
pub const PSD_FLAG_TOL: f64 = 1e-10;

/// Tolerance for the self-verification of the existence certificate.
const CERTIFICATE_VERIFY_TOL: f64 = 1e-10;

/// Coefficient triple `(A, G, H)` of the equation `X = H + A* X (I + G X)^{-1} A`.
///
/// `G` and `H` are expected positive semidefinite; indefinite matrices are
/// accepted but the corresponding `psd` flag stays unset and order-based
/// guarantees no longer apply.
#[derive(Debug, Clone)]
pub struct DareProblem {
    a: CMatrix,
    g: HermitianMatrix,
    h: HermitianMatrix,
    g_psd: bool,
    h_psd: bool,
}

impl DareProblem {
    pub fn new(a: CMatrix, g: HermitianMatrix, h: HermitianMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        if a.nrows() != g.dim() {
            return Err(Error::DimensionMismatch {
                context: "problem coefficients A vs G",
                left: a.nrows(),
                right: g.dim(),
            });
        }
        if a.nrows() != h.dim() {
            return Err(Error::DimensionMismatch {
                context: "problem coefficients A vs H",
                left: a.nrows(),
                right: h.dim(),
            });
        }
        let g_psd = g.is_psd(PSD_FLAG_TOL)?;
        let h_psd = h.is_psd(PSD_FLAG_TOL)?;
        Ok(Self {
            a,
            g,
            h,
            g_psd,
            h_psd,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn g(&self) -> &HermitianMatrix {
        &self.g
    }

    pub fn h(&self) -> &HermitianMatrix {
        &self.h
    }

    /// True when `G` passed the positive-semidefiniteness check at construction.
    pub fn is_g_psd(&self) -> bool {
        self.g_psd
    }

    /// True when `H` passed the positive-semidefiniteness check at construction.
    pub fn is_h_psd(&self) -> bool {
        self.h_psd
    }

    /// Both coefficient matrices certified positive semidefinite.
    pub fn is_psd_certified(&self) -> bool {
        self.g_psd && self.h_psd
    }

    /// Closed-loop matrix `(I + G X)^{-1} A`.
    pub fn closed_loop(&self, x: &HermitianMatrix) -> Result<CMatrix> {
        self.check_operand(x)?;
        let n = self.dim();
        let m = CMatrix::identity(n, n) + self.g.matrix() * x.matrix();
        let t = m
            .lu()
            .solve(&self.a)
            .ok_or(Error::SingularFactor { factor: "I + G*X" })?;
        if !all_finite(&t) {
            return Err(Error::SingularFactor { factor: "I + G*X" });
        }
        Ok(t)
    }

    /// One application of the Riccati operator: `H + A* X (I + G X)^{-1} A`,
    /// symmetrized.
    pub fn apply(&self, x: &HermitianMatrix) -> Result<HermitianMatrix> {
        let t = self.closed_loop(x)?;
        let r = self.h.matrix() + self.a.adjoint() * (x.matrix() * t);
        HermitianMatrix::symmetrize(&r)
    }

    /// Same value as [`DareProblem::apply`] computed through the identity
    /// `X (I + G X)^{-1} = X - X G (I + X G)^{-1} X`.
    pub fn apply_woodbury(&self, x: &HermitianMatrix) -> Result<HermitianMatrix> {
        self.check_operand(x)?;
        let n = self.dim();
        let m = CMatrix::identity(n, n) + x.matrix() * self.g.matrix();
        let v = m
            .lu()
            .solve(x.matrix())
            .ok_or(Error::SingularFactor { factor: "I + X*G" })?;
        if !all_finite(&v) {
            return Err(Error::SingularFactor { factor: "I + X*G" });
        }
        let core = x.matrix() - x.matrix() * self.g.matrix() * v;
        let r = self.h.matrix() + self.a.adjoint() * core * &self.a;
        HermitianMatrix::symmetrize(&r)
    }

    /// Relative fixed-point residual `||X - R(X)||_F / max(1, ||X||_F)`.
    pub fn residual(&self, x: &HermitianMatrix) -> Result<f64> {
        let rx = self.apply(x)?;
        Ok((x.matrix() - rx.matrix()).norm() / x.norm_fro().max(1.0))
    }

    /// The pencil blocks associated with the equation.
    pub fn pencil(&self) -> PencilPair {
        let n = self.dim();
        let mut m = CMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.a);
        m.view_mut((n, 0), (n, n))
            .copy_from(&(-self.h.matrix().clone()));
        m.view_mut((n, n), (n, n)).copy_from(&CMatrix::identity(n, n));

        let mut l = CMatrix::zeros(2 * n, 2 * n);
        l.view_mut((0, 0), (n, n)).copy_from(&CMatrix::identity(n, n));
        l.view_mut((0, n), (n, n)).copy_from(self.g.matrix());
        l.view_mut((n, n), (n, n)).copy_from(&self.a.adjoint());

        PencilPair { m, l }
    }

    /// Residual of the pencil solution identity `M [I; X] = L [I; X] T`,
    /// relative to `max(1, ||[I; X]||_F)`. Near zero exactly when `X` solves
    /// the equation and `T` is its closed-loop matrix.
    pub fn pencil_check(&self, x: &HermitianMatrix, t: &CMatrix) -> Result<f64> {
        self.check_operand(x)?;
        let n = self.dim();
        if t.nrows() != n || t.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "pencil check closed-loop matrix",
                left: t.nrows(),
                right: n,
            });
        }
        let PencilPair { m, l } = self.pencil();
        let mut stack = CMatrix::zeros(2 * n, n);
        stack.view_mut((0, 0), (n, n)).copy_from(&CMatrix::identity(n, n));
        stack.view_mut((n, 0), (n, n)).copy_from(x.matrix());
        let lhs = &m * &stack;
        let rhs = &l * &stack * t;
        Ok((lhs - rhs).norm() / stack.norm().max(1.0))
    }

    /// Certified scalar `x_c` such that `x_c I` dominates its own Riccati
    /// image, which brackets the minimal positive semidefinite solution from
    /// above. Derived from the quadratic inequality
    /// `g x^2 + (1 - a - h g) x - h >= 0` with `h = rho(H)`, `g = lambda_min(G)`
    /// and `a = ||A||_2^2`.
    ///
    /// Returns `None` when `G` is singular and `||A||_2^2 >= 1`, where the
    /// certificate does not apply.
    pub fn existence_certificate(&self) -> Result<Option<f64>> {
        let h = self.h.spectral_radius()?;
        let g = self.g.lambda_min()?.max(0.0);
        let a = spectral_norm(&self.a)?.powi(2);

        let x_c = if g > 0.0 {
            // larger root of g x^2 + (1 - a - h g) x - h
            let b = 1.0 - a - h * g;
            let disc = (b * b + 4.0 * g * h).sqrt();
            ((-b + disc) / (2.0 * g)).max(0.0)
        } else if a < 1.0 {
            h / (1.0 - a)
        } else {
            return Ok(None);
        };

        let candidate = HermitianMatrix::scaled_identity(self.dim(), x_c);
        let image = self.apply(&candidate)?;
        if !loewner_geq(&candidate, &image, CERTIFICATE_VERIFY_TOL)? {
            return Err(Error::Inconsistency(format!(
                "existence certificate x_c = {x_c} failed its own domination check"
            )));
        }
        Ok(Some(x_c))
    }

    fn check_operand(&self, x: &HermitianMatrix) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "problem vs operand",
                left: self.dim(),
                right: x.dim(),
            });
        }
        Ok(())
    }
}

/// The 2n-by-2n pencil blocks `M = [[A, 0], [-H, I]]` and `L = [[I, G], [0, A*]]`.
#[derive(Debug, Clone)]
pub struct PencilPair {
    pub m: CMatrix,
    pub l: CMatrix,
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> Result<f64> {
    let svd = m
        .clone()
        .try_svd(false, false, f64::EPSILON, 10_000)
        .ok_or(Error::EigenFailure {
            context: "singular value decomposition",
        })?;
    Ok(svd.singular_values.iter().fold(0.0f64, |a, s| a.max(*s)))
}
