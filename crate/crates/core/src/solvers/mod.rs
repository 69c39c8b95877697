//! Non-private base solvers for finite-sum minimization and saddle problems.
//!
//! Every solver stops as soon as a computable certificate (see
//! [`certificate`]) proves the requested accuracy, and fails with
//! [`Error::BudgetExceeded`](crate::error::Error::BudgetExceeded) once its
//! gradient-evaluation limit is spent.

pub mod certificate;
mod min;
mod minimax;

pub use min::{
    iteration_budget_min, iteration_budget_min_with, solve_min, MinSolveResult, MinSolver, MinSolverKind,
    MinSolverSpec,
};
pub use minimax::{
    iteration_budget_minimax, iteration_budget_minimax_with, prox_quadratic, solve_saddle, MinimaxSolverKind,
    MinimaxSolverSpec, ProxRegularizer, SaddleResult, SaddleSolver,
};

use crate::error::{Error, Result};

pub const DEFAULT_BUDGET_CONSTANT: f64 = 3.0;

/// Default evaluation limit as a multiple of the planned budget.
pub const DEFAULT_LIMIT_FACTOR: u64 = 50;

/// `ceil(ln(delta0 / gamma))`, zero when the start already meets the target.
pub(crate) fn log_factor(gamma: f64, delta0: f64) -> u64 {
    if delta0 <= gamma {
        0
    } else {
        (delta0 / gamma).ln().ceil() as u64
    }
}

/// Gradient-evaluation meter shared by all solvers.
#[derive(Debug, Clone)]
pub(crate) struct Meter {
    pub used: u64,
    pub limit: u64,
    pub planned: u64,
}

impl Meter {
    pub fn new(limit: Option<u64>) -> Self {
        Self { used: 0, limit: limit.unwrap_or(u64::MAX), planned: 0 }
    }

    /// Sets the plan once the initial certificate is known. An explicit
    /// limit from the spec always wins over the default multiple.
    pub fn plan(&mut self, planned: u64, explicit: Option<u64>, floor: u64) {
        self.planned = planned;
        if explicit.is_none() {
            self.limit = planned.saturating_mul(DEFAULT_LIMIT_FACTOR).max(floor);
        }
    }

    pub fn can_afford(&self, cost: u64) -> bool {
        self.used.saturating_add(cost) <= self.limit
    }

    pub fn charge(&mut self, cost: u64) {
        self.used += cost;
    }

    pub fn exceeded(&self, best_x: Vec<f64>, best_y: Option<Vec<f64>>) -> Error {
        Error::BudgetExceeded { used: self.used, limit: self.limit, planned: self.planned, best_x, best_y }
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("accuracy target must be positive, got {gamma}")))
    }
}
