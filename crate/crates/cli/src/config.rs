//! Run configuration shared by the binary and the library-level entry point.

use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Bench,
    CompareOrders,
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Bench => "bench",
            Command::CompareOrders => "compare-orders",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone)]
pub enum ProblemSource {
    Example1 {
        epsilon: f64,
        g: f64,
        a: f64,
        c: f64,
        /// Fixed off-diagonal coupling; drawn from the seed when absent.
        b: Option<(f64, f64)>,
    },
    Example2,
    Scalar {
        a_re: f64,
        a_im: f64,
        g: f64,
        h: f64,
    },
    Random {
        n: usize,
        cap: Option<f64>,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Self {
            csv: true,
            json: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub source: ProblemSource,
    /// Iteration orders to run; 1 selects the plain fixed-point iteration.
    pub orders: Vec<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub stagnation_window: Option<usize>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub formats: Formats,
    /// Record wall-clock timings in the outputs. Off by default so repeated
    /// runs with the same configuration are byte-identical.
    pub timings: bool,
    /// Repetitions per order for the bench command.
    pub reps: usize,
}

impl RunConfig {
    /// Effective stopping rule for a given order: tol defaults to 1e-12,
    /// the iteration budget to 1000 for the plain iteration and 100 for the
    /// accelerated ones.
    pub fn stopping_rule(&self, order: usize) -> dare_core::Result<dare_core::StoppingRule> {
        let default_max = if order == 1 { 1000 } else { 100 };
        dare_core::StoppingRule::new(
            self.tol.unwrap_or(1e-12),
            self.max_iter.unwrap_or(default_max),
            self.stagnation_window.unwrap_or(10),
        )
    }
}
