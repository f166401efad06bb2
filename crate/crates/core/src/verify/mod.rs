//! Manufactured solutions, error norms, convergence studies and audits.

pub mod audit;
pub mod contaminant;
pub mod convergence;
pub mod manufactured;
pub mod norms;
pub mod rates;

pub use audit::{
    check_compatibility, compatibility_audit, AuditConfig, AuditReport, CONSERVATION_DRIFT_LIMIT, CONSTANT_DRIFT_LIMIT,
    FLOW_RESIDUAL_LIMIT,
};
pub use contaminant::{contaminant_inflow, contaminant_initial, contaminant_permeability, ContaminantCase};
pub use convergence::{
    convergence_study, manufactured_transport_problem, ConvergenceReport, LevelStats, StudyConfig, TimeStepRule,
};
pub use manufactured::{manufactured_concentration, manufactured_flow, unit_square_normal, ManufacturedCase};
pub use norms::{energy_error, energy_seminorm, energy_seminorm_with, l2_error};
pub use rates::{RateRow, RateTable};
