//! Convergence-rate estimation from residual or error histories, theoretical
//! rate bounds from the closed-loop spectrum, and solution classification.

use crate::error::{Error, Result};
use crate::matrix::{spectrum, HermitianMatrix, DEFAULT_CLUSTER_TOL};
use crate::riccati::DareProblem;

/// Slack added to the predicted bound when deciding `bound_satisfied`; finite
/// histories only estimate the asymptotic rate.
pub const RATE_BOUND_SLACK: f64 = 0.05;

/// A run iterate is accepted as a solution when its relative residual is at
/// most this.
pub const SOLUTION_TOL: f64 = 1e-8;

/// Entries below `NOISE_FLOOR_FACTOR * eps * scale` sit on the rounding floor
/// and are excluded from rate fits.
const NOISE_FLOOR_FACTOR: f64 = 1e2;

/// Root-mean-square fit residual (in log units) beyond which the decay is
/// treated as super-geometric and an order fit is attempted.
const SUPERLINEAR_RMS_THRESHOLD: f64 = 1.0;

/// Fitted convergence rates together with the spectral prediction.
#[derive(Debug, Clone)]
pub struct RateReport {
    /// Estimated geometric rate `sigma` with `e_k ~ sigma^k`, present when the
    /// fit produced a value in `(0, 1]`.
    pub r_linear_rate: Option<f64>,
    /// Estimated order `r` with `e_k ~ sigma^(r^k)`, present when the history
    /// decays faster than geometrically.
    pub r_superlinear_order: Option<f64>,
    /// Squared magnitude of the largest closed-loop eigenvalue inside the open
    /// unit disk, 0 when a bound was not supplied or the disk part is empty.
    pub predicted_bound: f64,
    /// Whether the fitted geometric rate respects the predicted bound (with
    /// slack). Vacuously true when either side is unavailable.
    pub bound_satisfied: bool,
}

/// Fits convergence rates to a history of errors (or residuals as a proxy when
/// no reference errors are supplied). Requires at least 4 usable points.
pub fn estimate_rates(
    residual_history: &[f64],
    reference_errors: Option<&[f64]>,
) -> Result<RateReport> {
    let (sigma, order) = fit_rates(reference_errors.unwrap_or(residual_history))?;
    Ok(RateReport {
        r_linear_rate: sigma,
        r_superlinear_order: order,
        predicted_bound: 0.0,
        bound_satisfied: true,
    })
}

/// Same as [`estimate_rates`] but compares the fitted geometric rate against a
/// predicted bound, typically from [`rate_bound_from_solution`].
pub fn estimate_rates_with_bound(
    residual_history: &[f64],
    reference_errors: Option<&[f64]>,
    predicted_bound: f64,
) -> Result<RateReport> {
    let (sigma, order) = fit_rates(reference_errors.unwrap_or(residual_history))?;
    Ok(RateReport {
        r_linear_rate: sigma,
        r_superlinear_order: order,
        predicted_bound,
        bound_satisfied: sigma.map_or(true, |s| s <= predicted_bound + RATE_BOUND_SLACK),
    })
}

fn fit_rates(errors: &[f64]) -> Result<(Option<f64>, Option<f64>)> {
    if errors.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: errors.len(),
        });
    }
    let scale = errors
        .iter()
        .cloned()
        .filter(|e| e.is_finite())
        .fold(0.0f64, f64::max);
    let floor = NOISE_FLOOR_FACTOR * f64::EPSILON * scale.max(1.0);
    // keep (iteration index, error) pairs above the rounding floor
    let kept: Vec<(f64, f64)> = errors
        .iter()
        .enumerate()
        .filter(|(_, e)| e.is_finite() && **e > floor)
        .map(|(k, e)| ((k + 1) as f64, *e))
        .collect();
    if kept.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: kept.len(),
        });
    }

    // geometric fit on the tail half: log e_k vs k
    let tail = &kept[kept.len() / 2..];
    let points: Vec<(f64, f64)> = tail.iter().map(|(k, e)| (*k, e.ln())).collect();
    let (slope, rms) = least_squares_slope(&points);
    let sigma = slope.exp();
    let r_linear_rate = (sigma > 0.0 && sigma <= 1.0).then_some(sigma);

    // order fit only when the log-residuals are strongly convex, i.e. the
    // geometric model misfits: log(-log e_k) vs k
    let mut r_superlinear_order = None;
    if rms > SUPERLINEAR_RMS_THRESHOLD {
        let usable: Vec<(f64, f64)> = kept
            .iter()
            .filter(|(_, e)| *e < 1.0)
            .map(|(k, e)| (*k, (-e.ln()).ln()))
            .collect();
        if usable.len() >= 4 {
            let tail2 = &usable[usable.len() / 2..];
            let (slope2, _) = least_squares_slope(tail2);
            let order = slope2.exp();
            if order.is_finite() && order > 1.1 {
                r_superlinear_order = Some(order);
            }
        }
    }
    Ok((r_linear_rate, r_superlinear_order))
}

/// Slope of the least-squares line through `(x, y)` points plus the RMS fit
/// residual.
fn least_squares_slope(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|(x, _)| (x - mean_x).powi(2)).sum();
    let sxy: f64 = points
        .iter()
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = mean_y - slope * mean_x;
    let rms = (points
        .iter()
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, rms)
}

/// Theoretical rate bound at an (approximate) solution: the squared magnitude
/// of the largest closed-loop eigenvalue strictly inside the unit disk, 0 when
/// no eigenvalue lies inside.
pub fn rate_bound_from_solution(p: &DareProblem, x_star: &HermitianMatrix) -> Result<f64> {
    let residual = p.residual(x_star)?;
    if residual > SOLUTION_TOL {
        return Err(Error::Precondition(format!(
            "rate bound needs an approximate solution; residual {residual:.3e} exceeds {SOLUTION_TOL:.0e}"
        )));
    }
    let t = p.closed_loop(x_star)?;
    let summary = spectrum(&t, DEFAULT_CLUSTER_TOL)?;
    Ok(summary
        .eigenvalues
        .iter()
        .map(|z| z.norm())
        .filter(|m| *m < 1.0 - DEFAULT_CLUSTER_TOL)
        .fold(0.0f64, |acc, m| acc.max(m * m)))
}

/// Evidence that an iterate is the minimal positive semidefinite solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinimalityEvidence {
    /// Produced by a monotone fixed-point run started at `H` with no Loewner
    /// violations, which converges to the minimal solution for psd data.
    FromMonotoneFpi,
    Unknown,
}

/// Closed-loop placement of a solution's spectrum relative to the unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilizingTag {
    /// All closed-loop eigenvalues strictly inside the unit circle.
    Stabilizing,
    /// All closed-loop eigenvalues inside the closed unit disk.
    AlmostStabilizing,
    NotStabilizing,
}

impl std::fmt::Display for StabilizingTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            StabilizingTag::Stabilizing => "Stabilizing",
            StabilizingTag::AlmostStabilizing => "AlmostStabilizing",
            StabilizingTag::NotStabilizing => "NotStabilizing",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct SolutionClassification {
    pub is_solution: bool,
    pub minimality_evidence: MinimalityEvidence,
    pub stabilizing: StabilizingTag,
}

/// Classifies an iterate: residual-based solution acceptance, closed-loop
/// placement, and provenance-based minimality evidence.
pub fn classify_solution(
    p: &DareProblem,
    x: &HermitianMatrix,
    fpi_provenance: bool,
) -> Result<SolutionClassification> {
    let is_solution = p.residual(x)? <= SOLUTION_TOL;
    let t = p.closed_loop(x)?;
    let rho = spectrum(&t, DEFAULT_CLUSTER_TOL)?.spectral_radius;
    let stabilizing = if rho < 1.0 - DEFAULT_CLUSTER_TOL {
        StabilizingTag::Stabilizing
    } else if rho <= 1.0 + DEFAULT_CLUSTER_TOL {
        StabilizingTag::AlmostStabilizing
    } else {
        StabilizingTag::NotStabilizing
    };
    let minimality_evidence = if fpi_provenance {
        MinimalityEvidence::FromMonotoneFpi
    } else {
        MinimalityEvidence::Unknown
    };
    Ok(SolutionClassification {
        is_solution,
        minimality_evidence,
        stabilizing,
    })
}
