//! Verification harness: manufactured solution, error norms, convergence
//! studies and the energy conservation experiment.

pub mod manufactured;
pub mod conservation;
pub mod convergence;
pub mod norms;

pub use conservation::{conservation_experiment, ConservationConfig, ConservationRun};
pub use convergence::{
    convergence_row, convergence_study, finest_rate, run_manufactured, ConvergenceCase, ConvergenceRow,
    ConvergenceTable, FittedRates, Rate, Refinement, temporal_distances,
};
pub use manufactured::{ManufacturedLoads, ManufacturedSolution, Quantity};
pub use norms::{discrete_distance, error_norms, ErrorNorms};
