//! JSON wire formats: problem files, run summaries, solution files, and the
//! verify report. Complex entries are `[re, im]` pairs; matrices are row-major
//! lists of rows. Schema violations are reported with a JSON-pointer-style
//! location.

use std::fmt;
use std::fs;
use std::path::Path;

use dare_core::{CMatrix, DareProblem, HermitianMatrix};
use dare_core::C64;
use serde::{Deserialize, Serialize};

type ComplexPair = [f64; 2];
type MatrixRows = Vec<Vec<ComplexPair>>;

#[derive(Debug)]
pub struct SchemaError {
    /// JSON-pointer-style location of the offending value.
    pub location: String,
    pub message: String,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

impl std::error::Error for SchemaError {}

fn err(location: impl Into<String>, message: impl Into<String>) -> SchemaError {
    SchemaError {
        location: location.into(),
        message: message.into(),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ProblemFlags {
    pub g_psd: bool,
    pub h_psd: bool,
}

/// On-disk problem document.
#[derive(Debug, Serialize, Deserialize)]
pub struct ProblemFile {
    pub n: usize,
    #[serde(rename = "A")]
    pub a: MatrixRows,
    #[serde(rename = "G")]
    pub g: MatrixRows,
    #[serde(rename = "H")]
    pub h: MatrixRows,
    pub flags: ProblemFlags,
}

fn matrix_to_rows(m: &CMatrix) -> MatrixRows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn rows_to_matrix(rows: &MatrixRows, n: usize, field: &str) -> Result<CMatrix, SchemaError> {
    if rows.len() != n {
        return Err(err(
            format!("/{field}"),
            format!("expected {n} rows, found {}", rows.len()),
        ));
    }
    let mut m = CMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(err(
                format!("/{field}/{i}"),
                format!("expected {n} entries, found {}", row.len()),
            ));
        }
        for (j, pair) in row.iter().enumerate() {
            if !pair[0].is_finite() || !pair[1].is_finite() {
                return Err(err(
                    format!("/{field}/{i}/{j}"),
                    "entry must be finite".to_string(),
                ));
            }
            m[(i, j)] = C64::new(pair[0], pair[1]);
        }
    }
    Ok(m)
}

fn hermitian_from_rows(
    rows: &MatrixRows,
    n: usize,
    field: &str,
) -> Result<HermitianMatrix, SchemaError> {
    let m = rows_to_matrix(rows, n, field)?;
    HermitianMatrix::try_from_exact(m).map_err(|(i, j)| {
        err(
            format!("/{field}/{i}/{j}"),
            format!("matrix is not Hermitian: entry must equal the conjugate of /{field}/{j}/{i}"),
        )
    })
}

impl ProblemFile {
    pub fn from_problem(p: &DareProblem) -> Self {
        Self {
            n: p.dim(),
            a: matrix_to_rows(p.a()),
            g: matrix_to_rows(p.g().matrix()),
            h: matrix_to_rows(p.h().matrix()),
            flags: ProblemFlags {
                g_psd: p.is_g_psd(),
                h_psd: p.is_h_psd(),
            },
        }
    }

    /// Reconstructs the problem, re-deriving the psd flags from the matrices.
    pub fn into_problem(&self) -> Result<DareProblem, SchemaError> {
        if self.n == 0 {
            return Err(err("/n", "dimension must be at least 1"));
        }
        let a = rows_to_matrix(&self.a, self.n, "A")?;
        let g = hermitian_from_rows(&self.g, self.n, "G")?;
        let h = hermitian_from_rows(&self.h, self.n, "H")?;
        DareProblem::new(a, g, h).map_err(|e| err("/", e.to_string()))
    }
}

/// Loads a problem document, reporting the path and the parse or schema
/// location on failure.
pub fn load_problem(path: &Path) -> anyhow::Result<DareProblem> {
    let text = fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read problem file {}: {e}", path.display()))?;
    let file: ProblemFile = serde_json::from_str(&text).map_err(|e| {
        anyhow::anyhow!(
            "cannot parse problem file {} at line {} column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        )
    })?;
    file.into_problem()
        .map_err(|e| anyhow::anyhow!("invalid problem file {}: {e}", path.display()))
}

/// Writes a problem document; the round trip through [`load_problem`]
/// reproduces the matrices bit-exactly.
pub fn save_problem(path: &Path, p: &DareProblem) -> anyhow::Result<()> {
    let doc = ProblemFile::from_problem(p);
    let text = serde_json::to_string_pretty(&doc)?;
    fs::write(path, text + "\n")
        .map_err(|e| anyhow::anyhow!("cannot write problem file {}: {e}", path.display()))?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RateSummary {
    pub r_linear_rate: Option<f64>,
    pub r_superlinear_order: Option<f64>,
    pub predicted_bound: Option<f64>,
    pub bound_satisfied: Option<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ClassificationSummary {
    pub is_solution: bool,
    pub minimality_evidence: String,
    pub stabilizing: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub order: usize,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: Option<f64>,
    pub closed_loop_spectral_radius: Option<f64>,
    pub stability: Option<String>,
    pub monotone_violations: Option<usize>,
    pub rate: Option<RateSummary>,
    pub classification: Option<ClassificationSummary>,
    /// Mean wall-clock milliseconds per run; present only with timings enabled.
    pub elapsed_ms: Option<f64>,
    /// Solver error, when the run aborted.
    pub error: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ProblemSummary {
    pub source: String,
    pub n: usize,
    pub seed: Option<u64>,
    /// Drawn off-diagonal coupling of the block example, when applicable.
    pub example1_b: Option<ComplexPair>,
    pub g_psd: bool,
    pub h_psd: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SummaryFile {
    pub command: String,
    pub problem: ProblemSummary,
    pub tol: f64,
    pub runs: Vec<RunSummary>,
}

impl SummaryFile {
    /// Internal consistency of a summary document before it is written.
    pub fn validate(&self) -> Result<(), SchemaError> {
        if self.runs.is_empty() {
            return Err(err("/runs", "at least one run is required"));
        }
        for (i, run) in self.runs.iter().enumerate() {
            if run.order == 0 {
                return Err(err(format!("/runs/{i}/order"), "order must be at least 1"));
            }
            if run.error.is_none() && run.iterations == 0 {
                return Err(err(
                    format!("/runs/{i}/iterations"),
                    "a completed run performs at least one iteration",
                ));
            }
            if run.converged {
                match run.final_residual {
                    Some(r) if r <= self.tol => {}
                    _ => {
                        return Err(err(
                            format!("/runs/{i}/final_residual"),
                            "a converged run must report a residual within tolerance",
                        ))
                    }
                }
            }
        }
        Ok(())
    }
}

/// Solution document written by the solve command.
#[derive(Debug, Serialize, Deserialize)]
pub struct SolutionFile {
    pub n: usize,
    pub order: usize,
    pub converged: bool,
    pub final_residual: Option<f64>,
    #[serde(rename = "X")]
    pub x: MatrixRows,
}

impl SolutionFile {
    pub fn new(order: usize, report: &dare_core::SolveReport) -> Self {
        Self {
            n: report.solution.dim(),
            order,
            converged: report.converged,
            final_residual: report.residual_history.last().copied(),
            x: matrix_to_rows(report.solution.matrix()),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VerifyCheck {
    pub name: String,
    /// "pass", "fail", or "skipped".
    pub status: String,
    pub detail: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VerifyFile {
    pub problem: ProblemSummary,
    pub checks: Vec<VerifyCheck>,
}
