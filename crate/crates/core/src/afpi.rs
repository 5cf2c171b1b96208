//! Fixed-point and accelerated fixed-point solvers for the Riccati equation.
//!
//! The accelerated iteration rests on a binary operator `F` on coefficient
//! triples `(A, G, H)` that is associative, so the induced discrete flow
//! satisfies `X_{k+l} = F(X_k, X_l)`. Composing the flow with itself advances
//! the plain fixed-point iterate from index `m` to index `r * m` per outer
//! step, which yields the `r^k`-th plain iterate after `k` outer steps. The
//! order-2 instance is the classical structure-preserving doubling iteration.

use crate::analysis;
use crate::error::{Error, Result};
use crate::matrix::{
    all_finite, classify_from_summary, loewner_geq, spectrum, CMatrix, HermitianMatrix,
    SpectrumSummary, StabilityClass, DEFAULT_CLUSTER_TOL,
};
use crate::riccati::DareProblem;

/// Loewner tolerance used when counting monotonicity violations.
pub const MONOTONE_TOL: f64 = 1e-9;

/// Any component norm beyond this aborts the iteration as divergent.
const OVERFLOW_GUARD: f64 = 1e150;

/// Residual improvement factor that counts as progress for the stagnation rule.
const STAGNATION_IMPROVEMENT: f64 = 0.99;

/// Element of the coefficient semigroup: a general matrix together with two
/// Hermitian ones. Seeded from a problem as `(A, G, H)`.
#[derive(Debug, Clone)]
pub struct CoefficientTriple {
    a: CMatrix,
    g: HermitianMatrix,
    h: HermitianMatrix,
}

impl CoefficientTriple {
    pub fn new(a: CMatrix, g: HermitianMatrix, h: HermitianMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        if a.nrows() != g.dim() || a.nrows() != h.dim() {
            return Err(Error::DimensionMismatch {
                context: "coefficient triple",
                left: g.dim(),
                right: h.dim(),
            });
        }
        Ok(Self { a, g, h })
    }

    pub fn from_problem(p: &DareProblem) -> Self {
        Self {
            a: p.a().clone(),
            g: p.g().clone(),
            h: p.h().clone(),
        }
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

    fn max_component_norm(&self) -> f64 {
        self.a
            .norm()
            .max(self.g.norm_fro())
            .max(self.h.norm_fro())
    }

    fn is_finite(&self) -> bool {
        all_finite(&self.a) && all_finite(self.g.matrix()) && all_finite(self.h.matrix())
    }
}

/// The semigroup operator
/// `F(Y, Z) = (Z1 D Y1, Z2 + Z1 D Y2 Z1*, Y3 + Y1* Z3 D Y1)` with
/// `D = (I + Y2 Z3)^{-1}`. The Hermitian components are re-symmetrized to
/// keep the storage invariant over long products.
pub fn op_f(y: &CoefficientTriple, z: &CoefficientTriple) -> Result<CoefficientTriple> {
    if y.dim() != z.dim() {
        return Err(Error::DimensionMismatch {
            context: "semigroup operands",
            left: y.dim(),
            right: z.dim(),
        });
    }
    let n = y.dim();
    let m = CMatrix::identity(n, n) + y.g.matrix() * z.h.matrix();
    let lu = m.lu();
    let dy1 = lu.solve(&y.a).ok_or(Error::SingularFactor {
        factor: "I + Y2*Z3",
    })?;
    let dy2 = lu.solve(y.g.matrix()).ok_or(Error::SingularFactor {
        factor: "I + Y2*Z3",
    })?;
    if !all_finite(&dy1) || !all_finite(&dy2) {
        return Err(Error::SingularFactor {
            factor: "I + Y2*Z3",
        });
    }

    let a_new = &z.a * &dy1;
    let g_new =
        HermitianMatrix::symmetrize(&(z.g.matrix() + &z.a * dy2 * z.a.adjoint()))?;
    let h_new =
        HermitianMatrix::symmetrize(&(y.h.matrix() + y.a.adjoint() * z.h.matrix() * dy1))?;
    CoefficientTriple::new(a_new, g_new, h_new)
}

/// Termination policy for the iterative solvers.
#[derive(Debug, Clone)]
pub struct StoppingRule {
    /// Relative residual threshold.
    pub tol: f64,
    /// Maximum number of (outer) iterations.
    pub max_iter: usize,
    /// Number of consecutive iterations without a residual improvement by a
    /// factor of 0.99 after which the run stops without a convergence claim.
    pub stagnation_window: usize,
}

impl StoppingRule {
    pub fn new(tol: f64, max_iter: usize, stagnation_window: usize) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "stopping tolerance must be positive, got {tol}"
            )));
        }
        if max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if stagnation_window == 0 {
            return Err(Error::InvalidParameter(
                "stagnation_window must be at least 1".into(),
            ));
        }
        Ok(Self {
            tol,
            max_iter,
            stagnation_window,
        })
    }

    /// Defaults for the accelerated iteration: tol 1e-12, 100 outer steps.
    pub fn afpi_default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100,
            stagnation_window: 10,
        }
    }

    /// Defaults for the plain iteration: tol 1e-12, 1000 steps.
    pub fn fpi_default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 1000,
            stagnation_window: 10,
        }
    }
}

/// Outcome of a solver run: the final iterate plus its convergence and
/// stability diagnostics. `residual_history` and `delta_history` both have
/// one entry per performed (outer) iteration.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: HermitianMatrix,
    pub converged: bool,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub delta_history: Vec<f64>,
    /// Cumulative wall-clock time after each iteration, in milliseconds.
    pub elapsed_ms_history: Vec<f64>,
    pub closed_loop_spectrum: SpectrumSummary,
    pub stability: StabilityClass,
    /// Geometric rate fitted to the tail of the residual history, when the
    /// history is long enough for a fit.
    pub rate_estimate: Option<f64>,
    /// 1 for the plain iteration, `r >= 2` for the accelerated one.
    pub order_used: usize,
    /// Number of consecutive iterate pairs that failed the Loewner
    /// monotonicity check. Expected 0 for positive semidefinite data.
    pub monotone_violations: usize,
}

struct RunTrace {
    residuals: Vec<f64>,
    deltas: Vec<f64>,
    elapsed_ms: Vec<f64>,
    monotone_violations: usize,
    stagnant: usize,
    started: std::time::Instant,
}

impl RunTrace {
    fn new() -> Self {
        Self {
            residuals: Vec::new(),
            deltas: Vec::new(),
            elapsed_ms: Vec::new(),
            monotone_violations: 0,
            stagnant: 0,
            started: std::time::Instant::now(),
        }
    }

    /// Records one iteration; returns true when the run should stop.
    fn record(
        &mut self,
        residual: f64,
        delta: f64,
        monotone_ok: bool,
        stop: &StoppingRule,
    ) -> Result<bool> {
        if !residual.is_finite() || !delta.is_finite() {
            return Err(Error::Divergence(format!(
                "nonfinite residual after {} iterations",
                self.residuals.len() + 1
            )));
        }
        if !monotone_ok {
            self.monotone_violations += 1;
        }
        if let Some(prev) = self.residuals.last() {
            if residual > STAGNATION_IMPROVEMENT * prev {
                self.stagnant += 1;
            } else {
                self.stagnant = 0;
            }
        }
        self.residuals.push(residual);
        self.deltas.push(delta);
        self.elapsed_ms
            .push(self.started.elapsed().as_secs_f64() * 1e3);
        Ok(residual <= stop.tol || self.stagnant >= stop.stagnation_window)
    }

    fn converged(&self, stop: &StoppingRule) -> bool {
        self.residuals
            .last()
            .map(|r| *r <= stop.tol)
            .unwrap_or(false)
    }
}

fn finish(
    p: &DareProblem,
    solution: HermitianMatrix,
    order_used: usize,
    stop: &StoppingRule,
    trace: RunTrace,
) -> Result<SolveReport> {
    let t = p.closed_loop(&solution)?;
    let closed_loop_spectrum = spectrum(&t, DEFAULT_CLUSTER_TOL)?;
    let stability = classify_from_summary(&closed_loop_spectrum, DEFAULT_CLUSTER_TOL);
    let rate_estimate = analysis::estimate_rates(&trace.residuals, None)
        .ok()
        .and_then(|r| r.r_linear_rate);
    Ok(SolveReport {
        converged: trace.converged(stop),
        iterations: trace.residuals.len(),
        residual_history: trace.residuals,
        delta_history: trace.deltas,
        elapsed_ms_history: trace.elapsed_ms,
        closed_loop_spectrum,
        stability,
        rate_estimate,
        order_used,
        monotone_violations: trace.monotone_violations,
        solution,
    })
}

/// Plain fixed-point iteration `X_{k+1} = R(X_k)` started at `X_1 = H`.
///
/// Iteration `k` records the residual of the iterate it produced, the norm of
/// the step, and whether the step moved up in the Loewner order. The run stops
/// at the residual tolerance, the iteration cap, or on stagnation.
pub fn fpi_solve(p: &DareProblem, stop: &StoppingRule) -> Result<SolveReport> {
    let mut trace = RunTrace::new();
    let mut prev = p.h().clone();
    let mut cur = p.apply(&prev)?;
    for _ in 1..=stop.max_iter {
        let next = p.apply(&cur)?;
        if cur.norm_fro() > OVERFLOW_GUARD {
            return Err(Error::Divergence(format!(
                "iterate norm exceeded {OVERFLOW_GUARD:e}"
            )));
        }
        let residual = (cur.matrix() - next.matrix()).norm() / cur.norm_fro().max(1.0);
        let delta = (cur.matrix() - prev.matrix()).norm();
        let monotone_ok = loewner_geq(&cur, &prev, MONOTONE_TOL)?;
        let done = trace.record(residual, delta, monotone_ok, stop)?;
        prev = cur;
        cur = next;
        if done {
            break;
        }
    }
    finish(p, prev, 1, stop, trace)
}

/// Accelerated fixed-point iteration of integer order `r >= 2`.
///
/// Each outer step first builds the inner ladder `W_1 = Xhat_k`,
/// `W_{l+1} = F(Xhat_k, W_l)` up to `W_{r-1}` and then advances
/// `Xhat_{k+1} = F(Xhat_k, W_{r-1})`, so the Hermitian component after `k`
/// outer steps equals the `r^k`-th plain fixed-point iterate. Residuals are
/// always measured against the original problem.
pub fn afpi_solve(p: &DareProblem, r: usize, stop: &StoppingRule) -> Result<SolveReport> {
    if r < 2 {
        return Err(Error::InvalidParameter(format!(
            "acceleration order must be at least 2, got {r}"
        )));
    }
    let mut trace = RunTrace::new();
    let mut xhat = CoefficientTriple::from_problem(p);
    let mut h_prev = p.h().clone();
    for _ in 1..=stop.max_iter {
        let mut ladder = xhat.clone();
        for _ in 0..(r - 2) {
            ladder = op_f(&xhat, &ladder)?;
        }
        xhat = op_f(&xhat, &ladder)?;
        if !xhat.is_finite() || xhat.max_component_norm() > OVERFLOW_GUARD {
            return Err(Error::Divergence(format!(
                "coefficient norm exceeded {OVERFLOW_GUARD:e} at order {r}"
            )));
        }
        let h_cur = xhat.h().clone();
        let residual = p.residual(&h_cur)?;
        let delta = (h_cur.matrix() - h_prev.matrix()).norm();
        let monotone_ok = loewner_geq(&h_cur, &h_prev, MONOTONE_TOL)?;
        let done = trace.record(residual, delta, monotone_ok, stop)?;
        h_prev = h_cur;
        if done {
            break;
        }
    }
    finish(p, h_prev, r, stop, trace)
}

/// The order-2 accelerated iteration under its usual name: the
/// structure-preserving doubling iteration.
pub fn sda_solve(p: &DareProblem, stop: &StoppingRule) -> Result<SolveReport> {
    afpi_solve(p, 2, stop)
}

/// Numerically certifies the discrete-flow identity `X_{k+l} = F(X_k, X_l)`
/// on the base recursion seeded from `p`: builds the three triples by plain
/// recursion and returns the largest relative component deviation.
pub fn discrete_flow_check(p: &DareProblem, k: usize, l: usize) -> Result<f64> {
    if k == 0 || l == 0 {
        return Err(Error::InvalidParameter(
            "discrete flow indices must be at least 1".into(),
        ));
    }
    let x1 = CoefficientTriple::from_problem(p);
    let top = k.max(l).max(k + l);
    let mut seq = Vec::with_capacity(top);
    seq.push(x1.clone());
    for _ in 1..top {
        let next = op_f(seq.last().expect("nonempty"), &x1)?;
        seq.push(next);
    }
    let composed = op_f(&seq[k - 1], &seq[l - 1])?;
    let target = &seq[k + l - 1];
    let rel = |lhs: &CMatrix, rhs: &CMatrix| (lhs - rhs).norm() / rhs.norm().max(1.0);
    Ok(rel(composed.a(), target.a())
        .max(rel(composed.g().matrix(), target.g().matrix()))
        .max(rel(composed.h().matrix(), target.h().matrix())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::C64;
    use nalgebra::Complex;

    fn c(re: f64, im: f64) -> C64 {
        Complex::new(re, im)
    }

    fn scalar_problem(a: f64, g: f64, h: f64) -> DareProblem {
        DareProblem::new(
            CMatrix::from_row_slice(1, 1, &[c(a, 0.0)]),
            HermitianMatrix::from_real_diagonal(&[g]),
            HermitianMatrix::from_real_diagonal(&[h]),
        )
        .unwrap()
    }

    fn small_psd_problem() -> DareProblem {
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.4, 0.1), c(0.2, -0.3), c(0.0, 0.2), c(0.5, 0.0)],
        );
        let b = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.7, 0.0), c(0.1, 0.2), c(0.3, -0.1), c(0.5, 0.0)],
        );
        let cmat = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.2, 0.1), c(0.6, 0.0), c(0.0, -0.4), c(0.3, 0.0)],
        );
        let g = HermitianMatrix::symmetrize(&(b.adjoint() * &b)).unwrap();
        let h = HermitianMatrix::symmetrize(&(cmat.adjoint() * &cmat)).unwrap();
        DareProblem::new(a, g, h).unwrap()
    }

    #[test]
    fn operator_reduces_to_power_iteration_without_g_h() {
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.5, 0.1), c(0.3, 0.0), c(0.0, -0.2), c(0.7, 0.0)],
        );
        let x1 = CoefficientTriple::new(
            a.clone(),
            HermitianMatrix::zeros(2),
            HermitianMatrix::zeros(2),
        )
        .unwrap();
        let mut xk = x1.clone();
        let mut power = a.clone();
        for _ in 0..3 {
            xk = op_f(&xk, &x1).unwrap();
            power = &a * &power;
            assert!((xk.a() - &power).norm() < 1e-13);
            assert_eq!(xk.g().matrix().norm(), 0.0);
            assert_eq!(xk.h().matrix().norm(), 0.0);
        }
    }

    #[test]
    fn operator_self_application_matches_riccati_image_of_h() {
        let p = small_psd_problem();
        let x1 = CoefficientTriple::from_problem(&p);
        let f11 = op_f(&x1, &x1).unwrap();
        let rh = p.apply(p.h()).unwrap();
        assert!((f11.h().matrix() - rh.matrix()).norm() < 1e-13);
    }

    #[test]
    fn operator_commutes_on_base_sequence() {
        let p = small_psd_problem();
        let x1 = CoefficientTriple::from_problem(&p);
        let mut xk = x1.clone();
        for _ in 0..4 {
            let forward = op_f(&xk, &x1).unwrap();
            let backward = op_f(&x1, &xk).unwrap();
            assert!(
                (forward.h().matrix() - backward.h().matrix()).norm() < 1e-12,
                "flow composition should commute in the Hermitian component"
            );
            xk = forward;
        }
    }

    #[test]
    fn fpi_scalar_zero_solution() {
        let p = scalar_problem(2.0, 1.0, 0.0);
        let report = fpi_solve(&p, &StoppingRule::fpi_default()).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 1);
        assert_eq!(report.solution.matrix()[(0, 0)], c(0.0, 0.0));
        assert_eq!(report.monotone_violations, 0);
        assert!((report.closed_loop_spectrum.spectral_radius - 2.0).abs() < 1e-12);
        assert_eq!(report.stability, StabilityClass::Unstable);
    }

    #[test]
    fn fpi_scalar_contraction_matches_quadratic_root() {
        // fixed point of x = h + |a|^2 x / (1 + g x): positive root of
        // g x^2 + (1 - |a|^2 - h g) x - h = 0
        let (a, g, h) = (0.5, 1.0, 1.0);
        let p = scalar_problem(a, g, h);
        let report = fpi_solve(&p, &StoppingRule::fpi_default()).unwrap();
        let b = 1.0 - a * a - h * g;
        let root = (-b + (b * b + 4.0 * g * h).sqrt()) / (2.0 * g);
        assert!(report.converged);
        assert!((report.solution.matrix()[(0, 0)].re - root).abs() < 1e-10);
        assert_eq!(report.monotone_violations, 0);
    }

    #[test]
    fn fpi_degenerate_unimodular() {
        let p = scalar_problem(1.0, 0.0, 0.0);
        let report = fpi_solve(&p, &StoppingRule::fpi_default()).unwrap();
        assert!(report.converged);
        assert_eq!(report.solution.matrix()[(0, 0)], c(0.0, 0.0));
        assert!((report.closed_loop_spectrum.spectral_radius - 1.0).abs() < 1e-12);
    }

    #[test]
    fn accelerated_iterate_equals_plain_power_iterate() {
        let p = small_psd_problem();
        // plain iterates X_1 = H, X_{j+1} = R(X_j)
        let mut plain = vec![p.h().clone()];
        for _ in 1..82 {
            let next = p.apply(plain.last().unwrap()).unwrap();
            plain.push(next);
        }
        for r in [2usize, 3] {
            for k in 1..=3usize {
                let stop = StoppingRule::new(1e-300, k, 1000).unwrap();
                let report = afpi_solve(&p, r, &stop).unwrap();
                let target = &plain[r.pow(k as u32) - 1];
                let dev = (report.solution.matrix() - target.matrix()).norm()
                    / target.norm_fro().max(1.0);
                assert!(dev <= 1e-10, "r = {r}, k = {k}, deviation {dev:e}");
            }
        }
    }

    #[test]
    fn doubling_alias_matches_order_two() {
        let p = small_psd_problem();
        let stop = StoppingRule::afpi_default();
        let sda = sda_solve(&p, &stop).unwrap();
        let afpi = afpi_solve(&p, 2, &stop).unwrap();
        assert_eq!(sda.solution, afpi.solution);
        assert_eq!(sda.iterations, afpi.iterations);
        assert_eq!(sda.converged, afpi.converged);
        assert_eq!(sda.residual_history, afpi.residual_history);
        assert_eq!(sda.delta_history, afpi.delta_history);
        assert_eq!(sda.monotone_violations, afpi.monotone_violations);
        assert_eq!(sda.order_used, 2);
    }

    #[test]
    fn flow_identity_definitional_case() {
        let p = small_psd_problem();
        assert!(discrete_flow_check(&p, 1, 1).unwrap() <= 1e-12);
        assert!(discrete_flow_check(&p, 2, 3).unwrap() <= 1e-10);
        assert!(discrete_flow_check(&p, 3, 3).unwrap() <= 1e-10);
    }

    #[test]
    fn rejects_bad_parameters() {
        let p = small_psd_problem();
        assert!(matches!(
            afpi_solve(&p, 1, &StoppingRule::afpi_default()),
            Err(Error::InvalidParameter(_))
        ));
        assert!(StoppingRule::new(0.0, 10, 10).is_err());
        assert!(StoppingRule::new(1e-10, 0, 10).is_err());
        assert!(StoppingRule::new(1e-10, 10, 0).is_err());
        assert!(matches!(
            discrete_flow_check(&p, 0, 1),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn monotone_iterates_stay_below_certificate() {
        let p = small_psd_problem();
        let x_c = p.existence_certificate().unwrap().unwrap();
        let cap = HermitianMatrix::scaled_identity(p.dim(), x_c);
        let mut x = p.h().clone();
        for _ in 0..30 {
            assert!(loewner_geq(&cap, &x, 1e-9).unwrap());
            x = p.apply(&x).unwrap();
        }
    }
}
