//! Dense complex matrix utilities: Hermitian storage, positive semidefiniteness,
//! Loewner-order comparison, spectra, and stability classification.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = Complex<f64>;
/// Dense dynamically sized complex matrix.
pub type CMatrix = DMatrix<C64>;

/// Tolerance used to decide whether an eigenvalue sits on the unit circle and
/// to cluster nearby eigenvalues when estimating multiplicities.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

/// Relative singular-value cutoff factor for rank decisions: singular values
/// below `sigma_max * n * RANK_CUTOFF_FACTOR` are treated as zero.
pub const RANK_CUTOFF_FACTOR: f64 = 1e-12;

const EIG_MAX_ITER: usize = 10_000;

/// Dense complex square matrix with exactly Hermitian storage: the entry at
/// `(i, j)` is the complex conjugate of the entry at `(j, i)` and diagonal
/// entries have zero imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    mat: CMatrix,
}

impl HermitianMatrix {
    /// Builds a Hermitian matrix from an arbitrary square matrix as `(M + M*)/2`.
    pub fn symmetrize(m: &CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let n = m.nrows();
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = Complex::new(m[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let avg = (m[(i, j)] + m[(j, i)].conj()) * Complex::new(0.5, 0.0);
                out[(i, j)] = avg;
                out[(j, i)] = avg.conj();
            }
        }
        Ok(Self { mat: out })
    }

    /// Wraps a matrix whose storage is already exactly Hermitian.
    /// Returns the offending index on the first violation.
    pub fn try_from_exact(m: CMatrix) -> std::result::Result<Self, (usize, usize)> {
        let n = m.nrows();
        if n != m.ncols() {
            return Err((n, m.ncols()));
        }
        for i in 0..n {
            if m[(i, i)].im != 0.0 {
                return Err((i, i));
            }
            for j in (i + 1)..n {
                if m[(j, i)] != m[(i, j)].conj() {
                    return Err((j, i));
                }
            }
        }
        Ok(Self { mat: m })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            mat: CMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mat: CMatrix::identity(n, n),
        }
    }

    /// `x * I` for a real scalar `x`.
    pub fn scaled_identity(n: usize, x: f64) -> Self {
        Self {
            mat: CMatrix::identity(n, n) * Complex::new(x, 0.0),
        }
    }

    /// Builds a Hermitian matrix with the given real diagonal.
    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut mat = CMatrix::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            mat[(i, i)] = Complex::new(*d, 0.0);
        }
        Self { mat }
    }

    /// Direct sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        Self {
            mat: direct_sum(&self.mat, &other.mat),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn norm_fro(&self) -> f64 {
        self.mat.norm()
    }

    /// Real eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if self.dim() == 0 {
            return Ok(Vec::new());
        }
        if self.dim() == 1 {
            return Ok(vec![self.mat[(0, 0)].re]);
        }
        let se = self
            .mat
            .clone()
            .try_symmetric_eigen(f64::EPSILON, EIG_MAX_ITER)
            .ok_or(Error::EigenFailure {
                context: "hermitian eigendecomposition",
            })?;
        let mut ev: Vec<f64> = se.eigenvalues.iter().cloned().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalues are finite"));
        Ok(ev)
    }

    pub fn lambda_min(&self) -> Result<f64> {
        Ok(*self
            .eigenvalues()?
            .first()
            .ok_or(Error::InvalidParameter("empty matrix".into()))?)
    }

    pub fn lambda_max(&self) -> Result<f64> {
        Ok(*self
            .eigenvalues()?
            .last()
            .ok_or(Error::InvalidParameter("empty matrix".into()))?)
    }

    /// Spectral radius, i.e. the largest eigenvalue magnitude.
    pub fn spectral_radius(&self) -> Result<f64> {
        Ok(self
            .eigenvalues()?
            .iter()
            .fold(0.0, |acc, v| acc.max(v.abs())))
    }

    /// Positive semidefiniteness with a scale-free tolerance:
    /// `lambda_min >= -tol * max(1, ||X||_F)`.
    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        if tol < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "psd tolerance must be nonnegative, got {tol}"
            )));
        }
        Ok(self.lambda_min()? >= -tol * self.norm_fro().max(1.0))
    }

    /// Positive definiteness with the same scale convention:
    /// `lambda_min > tol * max(1, ||X||_F)`.
    pub fn is_pd(&self, tol: f64) -> Result<bool> {
        if tol < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "pd tolerance must be nonnegative, got {tol}"
            )));
        }
        Ok(self.lambda_min()? > tol * self.norm_fro().max(1.0))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other, "hermitian add")?;
        Ok(Self {
            mat: &self.mat + &other.mat,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other, "hermitian sub")?;
        Ok(Self {
            mat: &self.mat - &other.mat,
        })
    }

    pub fn scale(&self, x: f64) -> Self {
        Self {
            mat: &self.mat * Complex::new(x, 0.0),
        }
    }

    fn check_dim(&self, other: &Self, context: &'static str) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                context,
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }
}

/// Loewner-order comparison: `x >= y` iff `x - y` is positive semidefinite
/// under the given tolerance.
pub fn loewner_geq(x: &HermitianMatrix, y: &HermitianMatrix, tol: f64) -> Result<bool> {
    x.sub(y)?.is_psd(tol)
}

/// Eigenvalue summary of a general complex square matrix.
#[derive(Debug, Clone)]
pub struct SpectrumSummary {
    pub eigenvalues: Vec<C64>,
    pub spectral_radius: f64,
    /// Indices into `eigenvalues` whose magnitude is within the cluster
    /// tolerance of 1.
    pub unimodular_indices: Vec<usize>,
    /// Largest Jordan-block size over the unimodular eigenvalues, 0 if there
    /// are none.
    pub max_unimodular_index: usize,
}

/// Discrete-time stability of a square matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityClass {
    /// Spectral radius strictly inside the unit circle.
    AsymptoticallyStable,
    /// Spectral radius at most 1 and every unimodular eigenvalue semisimple.
    LyapunovStable,
    Unstable,
}

impl std::fmt::Display for StabilityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            StabilityClass::AsymptoticallyStable => "AsymptoticallyStable",
            StabilityClass::LyapunovStable => "LyapunovStable",
            StabilityClass::Unstable => "Unstable",
        };
        f.write_str(s)
    }
}

/// Eigenvalues of a general complex square matrix via the complex Schur form.
pub fn complex_eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let schur = m
        .clone()
        .try_schur(f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::EigenFailure {
            context: "complex schur decomposition",
        })?;
    let eigs = schur.eigenvalues().ok_or(Error::EigenFailure {
        context: "eigenvalue extraction from schur form",
    })?;
    Ok(eigs.iter().cloned().collect())
}

/// Numerical rank under a relative singular-value cutoff of
/// `sigma_max * n * cutoff_factor`.
pub fn rank(m: &CMatrix, cutoff_factor: f64) -> Result<usize> {
    let svd = m
        .clone()
        .try_svd(false, false, f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::EigenFailure {
            context: "singular value decomposition",
        })?;
    let sigma_max = svd.singular_values.iter().fold(0.0f64, |a, s| a.max(*s));
    if sigma_max == 0.0 {
        return Ok(0);
    }
    let cutoff = sigma_max * m.nrows().max(m.ncols()) as f64 * cutoff_factor;
    Ok(svd
        .singular_values
        .iter()
        .filter(|s| **s > cutoff)
        .count())
}

/// Nullity (kernel dimension) under the same cutoff convention as [`rank`].
pub fn nullity(m: &CMatrix, cutoff_factor: f64) -> Result<usize> {
    Ok(m.ncols() - rank(m, cutoff_factor)?)
}

/// Computes the spectrum of `m` together with its spectral radius, the set of
/// unimodular eigenvalues, and the largest Jordan index over those.
///
/// Unimodular eigenvalues are grouped into clusters of pairwise distance at
/// most `cluster_tol`; the cluster size plays the role of the algebraic
/// multiplicity and the Jordan index is recovered from the nullities of
/// successive powers of `m - lambda I`.
pub fn spectrum(m: &CMatrix, cluster_tol: f64) -> Result<SpectrumSummary> {
    let eigenvalues = complex_eigenvalues(m)?;
    let spectral_radius = eigenvalues.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let unimodular_indices: Vec<usize> = eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, z)| (z.norm() - 1.0).abs() <= cluster_tol)
        .map(|(i, _)| i)
        .collect();

    let mut max_unimodular_index = 0;
    for cluster in cluster_indices(&eigenvalues, &unimodular_indices, cluster_tol) {
        let center = cluster
            .iter()
            .map(|&i| eigenvalues[i])
            .sum::<C64>()
            / Complex::new(cluster.len() as f64, 0.0);
        let idx = jordan_index(m, center, cluster.len())?;
        max_unimodular_index = max_unimodular_index.max(idx);
    }

    Ok(SpectrumSummary {
        eigenvalues,
        spectral_radius,
        unimodular_indices,
        max_unimodular_index,
    })
}

/// Single-linkage clustering of the selected eigenvalues: two eigenvalues
/// belong to the same cluster when a chain of pairwise distances at most
/// `cluster_tol` connects them.
fn cluster_indices(eigenvalues: &[C64], selected: &[usize], cluster_tol: f64) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut assigned = vec![false; selected.len()];
    for (si, &i) in selected.iter().enumerate() {
        if assigned[si] {
            continue;
        }
        let mut cluster = vec![i];
        assigned[si] = true;
        let mut frontier = vec![i];
        while let Some(p) = frontier.pop() {
            for (sj, &j) in selected.iter().enumerate() {
                if !assigned[sj] && (eigenvalues[p] - eigenvalues[j]).norm() <= cluster_tol {
                    assigned[sj] = true;
                    cluster.push(j);
                    frontier.push(j);
                }
            }
        }
        clusters.push(cluster);
    }
    clusters
}

/// Size of the largest Jordan block of the eigenvalue cluster centered at
/// `lambda` with algebraic multiplicity `multiplicity`: the smallest power `j`
/// for which `nullity((m - lambda I)^j)` reaches the multiplicity.
fn jordan_index(m: &CMatrix, lambda: C64, multiplicity: usize) -> Result<usize> {
    let n = m.nrows();
    let shifted = m - CMatrix::identity(n, n) * lambda;
    if multiplicity <= 1 {
        return Ok(1);
    }
    let mut power = shifted.clone();
    for j in 1..=multiplicity {
        if nullity(&power, RANK_CUTOFF_FACTOR)? >= multiplicity {
            return Ok(j);
        }
        power = &power * &shifted;
    }
    Ok(multiplicity)
}

/// Classifies discrete-time stability from the spectrum: asymptotically stable
/// when the spectral radius is clearly inside the unit circle, Lyapunov stable
/// when it does not exceed 1 (up to the tolerance) and all unimodular
/// eigenvalues are semisimple, unstable otherwise.
pub fn classify_stability(m: &CMatrix, cluster_tol: f64) -> Result<StabilityClass> {
    Ok(classify_from_summary(&spectrum(m, cluster_tol)?, cluster_tol))
}

/// Same as [`classify_stability`] but reuses an already computed summary.
pub fn classify_from_summary(summary: &SpectrumSummary, cluster_tol: f64) -> StabilityClass {
    if summary.spectral_radius < 1.0 - cluster_tol {
        StabilityClass::AsymptoticallyStable
    } else if summary.spectral_radius <= 1.0 + cluster_tol && summary.max_unimodular_index <= 1 {
        StabilityClass::LyapunovStable
    } else {
        StabilityClass::Unstable
    }
}

/// Direct sum of two square matrices.
pub fn direct_sum(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (na, nb) = (a.nrows(), b.nrows());
    let mut out = CMatrix::zeros(na + nb, a.ncols() + b.ncols());
    out.view_mut((0, 0), (na, a.ncols())).copy_from(a);
    out.view_mut((na, a.ncols()), (nb, b.ncols())).copy_from(b);
    out
}

/// All entries finite.
pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        Complex::new(re, im)
    }

    #[test]
    fn symmetrize_mixed_entries() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 2.0), c(0.0, 0.0), c(3.0, 0.0)]);
        let h = HermitianMatrix::symmetrize(&m).unwrap();
        assert_eq!(h.matrix()[(0, 0)], c(1.0, 0.0));
        assert_eq!(h.matrix()[(0, 1)], c(0.0, 1.0));
        assert_eq!(h.matrix()[(1, 0)], c(0.0, -1.0));
        assert_eq!(h.matrix()[(1, 1)], c(3.0, 0.0));
    }

    #[test]
    fn symmetrize_fixed_points() {
        let id = CMatrix::identity(3, 3);
        assert_eq!(HermitianMatrix::symmetrize(&id).unwrap().matrix(), &id);

        let sym = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(HermitianMatrix::symmetrize(&sym).unwrap().matrix(), &sym);
    }

    #[test]
    fn symmetrize_is_idempotent() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.5), c(-0.25, 2.0), c(4.0, -1.0), c(3.0, -0.75)],
        );
        let once = HermitianMatrix::symmetrize(&m).unwrap();
        let twice = HermitianMatrix::symmetrize(once.matrix()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn symmetrize_rejects_non_square() {
        let m = CMatrix::zeros(2, 3);
        assert!(matches!(
            HermitianMatrix::symmetrize(&m),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn psd_checks() {
        let x = HermitianMatrix::from_real_diagonal(&[4.0, 1.0, 0.0]);
        assert!(x.is_psd(1e-12).unwrap());

        let y = HermitianMatrix::from_real_diagonal(&[1.0, -1.0]);
        assert!(!y.is_psd(1e-12).unwrap());
    }

    #[test]
    fn psd_block_with_offdiagonal_coupling() {
        // [[a, b], [conj(b), c]] with a*c >= |b|^2 is positive semidefinite
        for b in [c(2.0, 0.0), c(1.0, 1.0), c(0.5, -1.2), c(0.0, 0.0)] {
            let m = CMatrix::from_row_slice(2, 2, &[c(4.0, 0.0), b, b.conj(), c(1.0, 0.0)]);
            let h = HermitianMatrix::try_from_exact(m).unwrap();
            assert!(h.is_psd(1e-12).unwrap(), "b = {b}");
        }
    }

    #[test]
    fn loewner_order_basics() {
        let two_i = HermitianMatrix::scaled_identity(3, 2.0);
        let id = HermitianMatrix::identity(3);
        assert!(loewner_geq(&two_i, &id, 1e-12).unwrap());
        assert!(!loewner_geq(&id, &two_i, 1e-12).unwrap());

        let small = HermitianMatrix::identity(2);
        assert!(matches!(
            loewner_geq(&two_i, &small, 1e-12),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn spectrum_diagonal() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.25, 0.0)]);
        let s = spectrum(&m, DEFAULT_CLUSTER_TOL).unwrap();
        assert!((s.spectral_radius - 0.5).abs() < 1e-14);
        assert!(s.unimodular_indices.is_empty());
        assert_eq!(s.max_unimodular_index, 0);
    }

    #[test]
    fn spectrum_defective_unimodular() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let s = spectrum(&m, DEFAULT_CLUSTER_TOL).unwrap();
        assert!((s.spectral_radius - 1.0).abs() < 1e-12);
        assert_eq!(s.unimodular_indices.len(), 2);
        assert_eq!(s.max_unimodular_index, 2);
    }

    #[test]
    fn spectrum_rejects_non_square() {
        let m = CMatrix::zeros(2, 3);
        assert!(matches!(
            spectrum(&m, DEFAULT_CLUSTER_TOL),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn stability_classification() {
        let stable = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.9, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.1, 0.0)],
        );
        assert_eq!(
            classify_stability(&stable, DEFAULT_CLUSTER_TOL).unwrap(),
            StabilityClass::AsymptoticallyStable
        );

        let id = CMatrix::identity(3, 3);
        assert_eq!(
            classify_stability(&id, DEFAULT_CLUSTER_TOL).unwrap(),
            StabilityClass::LyapunovStable
        );

        let jordan =
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(
            classify_stability(&jordan, DEFAULT_CLUSTER_TOL).unwrap(),
            StabilityClass::Unstable
        );
    }

    #[test]
    fn rank_and_nullity() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(rank(&m, RANK_CUTOFF_FACTOR).unwrap(), 1);
        assert_eq!(nullity(&m, RANK_CUTOFF_FACTOR).unwrap(), 1);
        assert_eq!(rank(&CMatrix::zeros(3, 3), RANK_CUTOFF_FACTOR).unwrap(), 0);
    }

    #[test]
    fn semisimple_repeated_unimodular_eigenvalue() {
        // diag(1, 1, 0.3): multiplicity-2 unimodular eigenvalue, index 1
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.3, 0.0),
            ],
        );
        let s = spectrum(&m, DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(s.unimodular_indices.len(), 2);
        assert_eq!(s.max_unimodular_index, 1);
    }
}
