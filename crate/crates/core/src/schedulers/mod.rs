//! SVMAP solvers. All of them return a [`SolveResult`] scored by [`crate::power`].

mod bfd;
mod chromosome;
mod exact;
mod gapa;
mod operators;
mod repair;
mod tree_ops;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Placement, Violation};
use crate::power::EnergyReport;

pub use bfd::bfd_schedule;
pub use chromosome::{AllocationTree, Chromosome};
pub use exact::{ExactOptions, exact_schedule, exact_schedule_with};
pub use gapa::{FitnessMode, GaConfig, OperatorSet, RNG_ALGORITHM, fitness, gapa_schedule};
pub use operators::{crossover, crossover_at, mutate, select_parents};
pub use repair::repair;
pub use tree_ops::{dissolve_mutation, group_crossover, group_crossover_at};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("instance has no VMs")]
    EmptyInstance,
    #[error("instance has no hosts")]
    NoHosts,
    #[error("no feasible host for VM {0}")]
    NoFeasibleHost(String),
    #[error("chromosome could not be repaired after {attempts} random reassignments")]
    Unrepairable { attempts: usize },
    #[error("exhaustive search needs {required} enumerations, budget is {budget}")]
    BudgetExceeded { required: String, budget: u64 },
    #[error("no feasible assignment exists")]
    NoFeasibleAssignment,
    #[error("invalid GA configuration: {0}")]
    InvalidConfig(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("chromosome is infeasible: {}", .0[0])]
    Infeasible(Vec<Violation>),
}

impl SolverError {
    /// Stable upper-case code used in reports.
    pub fn code(&self) -> &'static str {
        match self {
            Self::EmptyInstance => "EMPTY_INSTANCE",
            Self::NoHosts => "NO_HOSTS",
            Self::NoFeasibleHost(_) => "NO_FEASIBLE_HOST",
            Self::Unrepairable { .. } => "UNREPAIRABLE",
            Self::BudgetExceeded { .. } => "BUDGET_EXCEEDED",
            Self::NoFeasibleAssignment => "NO_FEASIBLE_ASSIGNMENT",
            Self::InvalidConfig(_) => "INVALID_CONFIG",
            Self::Contract(_) => "CONTRACT",
            Self::Infeasible(_) => "INFEASIBLE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub solver: String,
    pub generations_run: usize,
    /// Best fitness seen so far, one entry per evaluated population (initial population first).
    pub best_fitness: Vec<f64>,
    pub evaluations: u64,
    pub wall_time: Duration,
    /// Name of the pseudo-random generator, for solvers that use one.
    pub rng: Option<String>,
}

impl SolverStats {
    fn deterministic(solver: &str, evaluations: u64, wall_time: Duration) -> Self {
        Self {
            solver: solver.to_string(),
            generations_run: 0,
            best_fitness: Vec::new(),
            evaluations,
            wall_time,
            rng: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub placement: Placement,
    pub energy: EnergyReport,
    pub stats: SolverStats,
}
