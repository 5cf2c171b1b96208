//! Deterministic problem generators: the built-in block example family, the
//! fixed 7x7 indefinite example, scalar instances, and seeded random families
//! with positive semidefinite coefficients.
//!
//! All randomness flows through a ChaCha8 stream cipher seeded from a single
//! 64-bit value, so every generator is a pure function of its parameters and
//! reproduces bit-identical matrices across runs and platforms.

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::afpi::CoefficientTriple;
use crate::error::{Error, Result};
use crate::matrix::{direct_sum, CMatrix, HermitianMatrix, C64};
use crate::riccati::{spectral_norm, DareProblem};

/// Parameters of the block example family. The leading 3x3 block is
/// deterministic in `(epsilon, g, a, c, b)`; the trailing 2x2 block is drawn
/// from the seeded generator. When `b` is `None` a value is drawn (and
/// redrawn until `a * c >= |b|^2` holds).
#[derive(Debug, Clone)]
pub struct Example1Params {
    pub epsilon: f64,
    pub g: f64,
    pub a: f64,
    pub c: f64,
    pub b: Option<C64>,
    pub seed: u64,
}

impl Example1Params {
    /// The customary parameter choice `g = 2, a = 4, c = 1` with a drawn `b`.
    pub fn standard(epsilon: f64, seed: u64) -> Self {
        Self {
            epsilon,
            g: 2.0,
            a: 4.0,
            c: 1.0,
            b: None,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("epsilon", self.epsilon),
            ("g", self.g),
            ("a", self.a),
            ("c", self.c),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "example1 parameter {name} must be positive, got {v}"
                )));
            }
        }
        if let Some(b) = self.b {
            if self.a * self.c < b.norm_sqr() {
                return Err(Error::InvalidParameter(format!(
                    "example1 needs a*c >= |b|^2, got a*c = {} and |b|^2 = {}",
                    self.a * self.c,
                    b.norm_sqr()
                )));
            }
        }
        Ok(())
    }
}

/// A generated block example together with the `b` value actually used.
#[derive(Debug, Clone)]
pub struct Example1Instance {
    pub problem: DareProblem,
    pub b: C64,
}

/// Builds the 5x5 block example: a fixed 3x3 block whose solution is the `H`
/// block itself (its closed-loop spectral radius equals `epsilon`), direct-
/// summed with a seeded random 2x2 block with positive definite `G` and `H`.
///
/// Draw order from the seeded stream: the 2x2 `A` block (row-major, real then
/// imaginary part per entry), the orthogonal factors `U` and `V` (each from a
/// row-major uniform 2x2 via QR), the two `H` eigenvalues, then `b` when not
/// supplied.
pub fn example1(params: &Example1Params) -> Result<Example1Instance> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let a2 = complex_uniform_matrix(2, &mut rng);
    let u = random_orthogonal_2x2(&mut rng);
    let v = random_orthogonal_2x2(&mut rng);
    let h_eigs = [rng.gen::<f64>(), rng.gen::<f64>()];
    let b = match params.b {
        Some(b) => b,
        None => loop {
            let candidate = Complex::new(rng.gen::<f64>(), rng.gen::<f64>());
            if candidate.norm_sqr() <= params.a * params.c {
                break candidate;
            }
        },
    };

    let zero = Complex::new(0.0, 0.0);
    let a1 = CMatrix::from_row_slice(
        3,
        3,
        &[
            Complex::new(params.epsilon, 0.0),
            Complex::new(1.0, 0.0),
            zero,
            zero,
            zero,
            zero,
            zero,
            zero,
            zero,
        ],
    );
    let g1 = HermitianMatrix::from_real_diagonal(&[params.g, 0.0, 0.0]);
    let h1 = HermitianMatrix::try_from_exact(CMatrix::from_row_slice(
        3,
        3,
        &[
            zero,
            zero,
            zero,
            zero,
            Complex::new(params.a, 0.0),
            b,
            zero,
            b.conj(),
            Complex::new(params.c, 0.0),
        ],
    ))
    .expect("leading block is hermitian by construction");

    let g2 = congruence_with_real_diagonal(&u, &[2.0, 1.0]);
    let h2 = congruence_with_real_diagonal(&v, &h_eigs);

    let a = direct_sum(&a1, &a2);
    let g = g1.direct_sum(&g2);
    let h = h1.direct_sum(&h2);
    Ok(Example1Instance {
        problem: DareProblem::new(a, g, h)?,
        b,
    })
}

/// The fixed 7x7 example with indefinite `H = -3.5 I`: block upper-triangular
/// `A` with repeated eigenvalues on and inside the unit circle, and a singular
/// positive semidefinite `G` assembled from rank-one blocks.
pub fn example2() -> DareProblem {
    let r = |x: f64| Complex::new(x, 0.0);
    let a_block1 = CMatrix::from_row_slice(2, 2, &[r(-1.0), r(-0.5), r(0.0), r(-1.0)]);
    let a_block2 = CMatrix::from_row_slice(
        3,
        3,
        &[
            r(-1.0),
            r(-0.5),
            r(-0.125),
            r(0.0),
            r(-1.0),
            r(-0.5),
            r(0.0),
            r(0.0),
            r(-1.0),
        ],
    );
    let a_block3 = CMatrix::identity(2, 2) * r(-2.0 / 3.0);
    let a = direct_sum(&direct_sum(&a_block1, &a_block2), &a_block3);

    let g_block1 = CMatrix::from_row_slice(
        2,
        2,
        &[r(1.0 / 32.0), r(1.0 / 8.0), r(1.0 / 8.0), r(1.0 / 2.0)],
    );
    let g_block2 = CMatrix::from_row_slice(
        3,
        3,
        &[
            r(1.0 / 512.0),
            r(1.0 / 128.0),
            r(1.0 / 32.0),
            r(1.0 / 128.0),
            r(1.0 / 32.0),
            r(1.0 / 8.0),
            r(1.0 / 32.0),
            r(1.0 / 8.0),
            r(1.0 / 2.0),
        ],
    );
    let g_block3 = CMatrix::identity(2, 2) * r(2.0 / 9.0);
    let g = HermitianMatrix::try_from_exact(direct_sum(&direct_sum(&g_block1, &g_block2), &g_block3))
        .expect("G blocks are symmetric by construction");

    let h = HermitianMatrix::scaled_identity(7, -3.5);
    DareProblem::new(a, g, h).expect("dimensions agree by construction")
}

/// A 1x1 problem.
pub fn scalar_problem(a: C64, g: f64, h: f64) -> Result<DareProblem> {
    if g < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "scalar problem needs g >= 0, got {g}"
        )));
    }
    DareProblem::new(
        CMatrix::from_row_slice(1, 1, &[a]),
        HermitianMatrix::from_real_diagonal(&[g]),
        HermitianMatrix::from_real_diagonal(&[h]),
    )
}

/// Seeded random problem with Gaussian `A` and Gram-matrix `G = B* B`,
/// `H = C* C`. With `spectral_cap` set, `A` is rescaled when its largest
/// singular value exceeds the cap. Deterministic per `(n, seed)`.
pub fn random_psd_problem(n: usize, seed: u64, spectral_cap: Option<f64>) -> Result<DareProblem> {
    if n == 0 {
        return Err(Error::InvalidParameter("problem dimension must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = complex_gaussian_matrix(n, &mut rng);
    let b = complex_gaussian_matrix(n, &mut rng);
    let c = complex_gaussian_matrix(n, &mut rng);
    if let Some(cap) = spectral_cap {
        if !(cap > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "spectral cap must be positive, got {cap}"
            )));
        }
        let norm = spectral_norm(&a)?;
        if norm > cap {
            a *= Complex::new(cap / norm, 0.0);
        }
    }
    let g = HermitianMatrix::symmetrize(&(b.adjoint() * &b))?;
    let h = HermitianMatrix::symmetrize(&(c.adjoint() * &c))?;
    DareProblem::new(a, g, h)
}

/// Seeded random Hermitian positive semidefinite matrix `B* B`.
pub fn random_psd_matrix(n: usize, seed: u64) -> HermitianMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = complex_gaussian_matrix(n, &mut rng);
    HermitianMatrix::symmetrize(&(b.adjoint() * &b)).expect("gram matrix is square")
}

/// Seeded random complex matrix with independent standard normal real and
/// imaginary parts.
pub fn random_complex_matrix(n: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    complex_gaussian_matrix(n, &mut rng)
}

/// Seeded random unitary matrix: QR of a complex Gaussian matrix with the
/// diagonal of `R` normalized to nonnegative phase.
pub fn random_unitary(n: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = complex_gaussian_matrix(n, &mut rng);
    let qr = m.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / Complex::new(d.norm(), 0.0);
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Seeded coefficient triple with a Gaussian general component and Gram-matrix
/// Hermitian components; handy for exercising the semigroup operator.
pub fn random_coefficient_triple(n: usize, seed: u64) -> CoefficientTriple {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = complex_gaussian_matrix(n, &mut rng);
    let b = complex_gaussian_matrix(n, &mut rng);
    let c = complex_gaussian_matrix(n, &mut rng);
    let g = HermitianMatrix::symmetrize(&(b.adjoint() * &b)).expect("square");
    let h = HermitianMatrix::symmetrize(&(c.adjoint() * &c)).expect("square");
    CoefficientTriple::new(a, g, h).expect("dimensions agree")
}

fn complex_gaussian_matrix(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            m[(i, j)] = Complex::new(re, im);
        }
    }
    m
}

fn complex_uniform_matrix(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let re: f64 = rng.gen();
            let im: f64 = rng.gen();
            m[(i, j)] = Complex::new(re, im);
        }
    }
    m
}

/// Real orthogonal 2x2 factor from a uniform random matrix via QR, with the
/// `R` diagonal sign-normalized so the factor is unique.
fn random_orthogonal_2x2(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m = DMatrix::<f64>::from_fn(2, 2, |_, _| rng.gen::<f64>());
    let qr = m.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..2 {
        if r[(j, j)] < 0.0 {
            for i in 0..2 {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// `U^T diag(d) U` for a real orthogonal `U`, lifted to a complex Hermitian
/// matrix.
fn congruence_with_real_diagonal(u: &DMatrix<f64>, d: &[f64]) -> HermitianMatrix {
    let n = d.len();
    let mut diag = DMatrix::<f64>::zeros(n, n);
    for (i, v) in d.iter().enumerate() {
        diag[(i, i)] = *v;
    }
    let real = u.transpose() * diag * u;
    let complex = CMatrix::from_fn(n, n, |i, j| Complex::new(real[(i, j)], 0.0));
    HermitianMatrix::symmetrize(&complex).expect("square")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{complex_eigenvalues, spectrum, DEFAULT_CLUSTER_TOL};

    #[test]
    fn example1_structure() {
        let inst = example1(&Example1Params::standard(0.5, 42)).unwrap();
        let p = &inst.problem;
        assert_eq!(p.dim(), 5);
        assert!(p.is_g_psd());
        assert!(p.is_h_psd());
        assert!(inst.b.norm_sqr() <= 4.0);

        // G H vanishes on the leading block, so H restricted there is a fixed point
        let gh = p.g().matrix() * p.h().matrix();
        assert_eq!(gh.view((0, 0), (3, 3)).norm(), 0.0);

        // embed the leading-block solution and check the block residual
        let mut x = CMatrix::zeros(5, 5);
        x.view_mut((0, 0), (3, 3))
            .copy_from(&p.h().matrix().view((0, 0), (3, 3)));
        let x = HermitianMatrix::try_from_exact(x).unwrap();
        let rx = p.apply(&x).unwrap();
        let block_residual = (x.matrix().view((0, 0), (3, 3))
            - rx.matrix().view((0, 0), (3, 3)))
        .norm();
        assert!(block_residual < 1e-13);
    }

    #[test]
    fn example1_closed_loop_radius_tracks_epsilon() {
        for eps in [0.5, 1.0, 1.5] {
            let inst = example1(&Example1Params::standard(eps, 7)).unwrap();
            let p = &inst.problem;
            // leading block of the closed loop at the leading-block solution
            let mut x = CMatrix::zeros(5, 5);
            x.view_mut((0, 0), (3, 3))
                .copy_from(&p.h().matrix().view((0, 0), (3, 3)));
            let x = HermitianMatrix::try_from_exact(x).unwrap();
            let t = p.closed_loop(&x).unwrap();
            let t1 = CMatrix::from_fn(3, 3, |i, j| t[(i, j)]);
            let rho = complex_eigenvalues(&t1)
                .unwrap()
                .iter()
                .fold(0.0f64, |a, z| a.max(z.norm()));
            assert!((rho - eps).abs() < 1e-12);
        }
    }

    #[test]
    fn example1_is_deterministic() {
        let a = example1(&Example1Params::standard(1.0, 11)).unwrap();
        let b = example1(&Example1Params::standard(1.0, 11)).unwrap();
        assert_eq!(a.problem.a(), b.problem.a());
        assert_eq!(a.problem.g(), b.problem.g());
        assert_eq!(a.problem.h(), b.problem.h());
        assert_eq!(a.b, b.b);

        let c = example1(&Example1Params::standard(1.0, 12)).unwrap();
        assert_ne!(a.problem.a(), c.problem.a());
    }

    #[test]
    fn example1_rejects_bad_parameters() {
        let mut params = Example1Params::standard(0.5, 0);
        params.epsilon = 0.0;
        assert!(example1(&params).is_err());

        let mut params = Example1Params::standard(0.5, 0);
        params.b = Some(Complex::new(3.0, 0.0)); // |b|^2 = 9 > a*c = 4
        assert!(example1(&params).is_err());
    }

    #[test]
    fn example2_golden_entries() {
        let p = example2();
        assert_eq!(p.dim(), 7);
        let a = p.a();
        assert_eq!(a[(0, 0)].re, -1.0);
        assert_eq!(a[(0, 1)].re, -0.5);
        assert_eq!(a[(2, 4)].re, -0.125);
        assert_eq!(a[(3, 4)].re, -0.5);
        assert_eq!(a[(5, 5)].re, -2.0 / 3.0);
        assert_eq!(a[(1, 0)].re, 0.0);

        let g = p.g().matrix();
        assert_eq!(g[(0, 0)].re, 1.0 / 32.0);
        assert_eq!(g[(2, 2)].re, 1.0 / 512.0);
        assert_eq!(g[(2, 4)].re, 1.0 / 32.0);
        assert_eq!(g[(4, 4)].re, 0.5);
        assert_eq!(g[(5, 5)].re, 2.0 / 9.0);
        assert_eq!(g[(0, 2)].re, 0.0);

        assert!(p.g().is_psd(1e-12).unwrap());
        assert!((p.h().lambda_max().unwrap() + 3.5).abs() < 1e-14);
        assert!(!p.is_h_psd());
        assert!(p.is_g_psd());

        // rho(A) = 1 with defective unimodular eigenvalues
        let s = spectrum(p.a(), DEFAULT_CLUSTER_TOL).unwrap();
        assert!((s.spectral_radius - 1.0).abs() < 1e-8);
    }

    #[test]
    fn scalar_problems() {
        let p = scalar_problem(Complex::new(2.0, 0.0), 1.0, 0.0).unwrap();
        assert_eq!(p.dim(), 1);
        assert!(scalar_problem(Complex::new(1.0, 0.0), -1.0, 0.0).is_err());
    }

    #[test]
    fn random_problem_determinism_and_cap() {
        let p1 = random_psd_problem(4, 99, Some(0.9)).unwrap();
        let p2 = random_psd_problem(4, 99, Some(0.9)).unwrap();
        assert_eq!(p1.a(), p2.a());
        assert_eq!(p1.g(), p2.g());
        assert_eq!(p1.h(), p2.h());

        assert!(spectral_norm(p1.a()).unwrap() <= 0.9 + 1e-12);
        assert!(p1.is_psd_certified());

        // G = B* B is almost surely positive definite, so the certificate applies
        assert!(p1.existence_certificate().unwrap().is_some());

        let p3 = random_psd_problem(1, 5, None).unwrap();
        assert_eq!(p3.dim(), 1);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let u = random_unitary(4, 3);
        let gram = u.adjoint() * &u;
        assert!((gram - CMatrix::identity(4, 4)).norm() < 1e-12);
    }
}
