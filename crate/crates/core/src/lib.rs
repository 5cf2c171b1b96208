//! Solvers and stability diagnostics for the discrete-time algebraic Riccati
//! equation `X = H + A* X (I + G X)^{-1} A` with dense complex coefficients.
//!
//! The crate provides:
//!
//! - [`matrix`]: Hermitian storage, Loewner-order comparisons, spectra, and
//!   discrete-time stability classification;
//! - [`riccati`]: the Riccati operator, closed-loop matrices, residuals, a
//!   pencil-based solution check, and an existence certificate;
//! - [`stein`]: the Stein operator `X - A* X A`, equation solvers, and
//!   stability certificates derived from them;
//! - [`afpi`]: the plain fixed-point iteration and its accelerated variant of
//!   arbitrary integer order (order 2 is the structure-preserving doubling
//!   iteration), built on an associative operator on coefficient triples;
//! - [`analysis`]: convergence-rate estimation and solution classification;
//! - [`problems`]: deterministic, seed-reproducible problem generators.

pub mod afpi;
pub mod analysis;
pub mod error;
pub mod matrix;
pub mod problems;
pub mod riccati;
pub mod stein;

pub use afpi::{
    afpi_solve, discrete_flow_check, fpi_solve, op_f, sda_solve, CoefficientTriple, SolveReport,
    StoppingRule,
};
pub use analysis::{
    classify_solution, estimate_rates, estimate_rates_with_bound, rate_bound_from_solution,
    MinimalityEvidence, RateReport, SolutionClassification, StabilizingTag,
};
pub use error::{Error, Result};
pub use matrix::{
    classify_stability, complex_eigenvalues, loewner_geq, spectrum, CMatrix, HermitianMatrix,
    SpectrumSummary, StabilityClass, C64, DEFAULT_CLUSTER_TOL,
};
pub use problems::{
    example1, example2, random_psd_problem, scalar_problem, Example1Instance, Example1Params,
};
pub use riccati::{DareProblem, PencilPair};
pub use stein::{
    certify_stability_via_stein, certify_stability_via_stein_plus, plus_sign_condition,
    stein_apply, stein_solve, stein_solve_series, CertificateBasis, ConditionStrength,
    SteinCertificate, SteinProblem, SteinSign,
};
