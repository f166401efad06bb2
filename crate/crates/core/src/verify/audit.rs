//! Compatibility audit: a constant concentration must survive transport
//! by the discrete velocity when the source balances the Darcy source.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::constant;
use crate::flow::{check_divergence, check_normal_jump, solve_flow, FlowProblem};
use crate::mesh::{Mesh, Region, Vec2};
use crate::transport::{run_transport, TransportProblem};

use super::norms::l2_error;

/// Pass threshold for `|c~ - c_h|` relative to `|c~| |Omega|^{1/2}`.
pub const CONSTANT_DRIFT_LIMIT: f64 = 1e-10;
/// Pass threshold for the per-step conservation drift.
pub const CONSERVATION_DRIFT_LIMIT: f64 = 1e-9;
/// Pass threshold for the relative divergence and normal-jump residuals.
pub const FLOW_RESIDUAL_LIMIT: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct AuditConfig {
    pub k: usize,
    pub c_tilde: f64,
    pub t_final: f64,
    pub dt: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    /// `|c~ - c_h(T)|` in L2.
    pub final_error: f64,
    /// Largest relative L2 deviation from the constant over all steps.
    pub constant_drift: f64,
    pub conservation_drift: f64,
    /// Largest `|div u_h + Pi f_d|` relative to the velocity scale.
    pub divergence_residual: f64,
    /// Largest normal-velocity jump relative to the velocity scale.
    pub jump_residual: f64,
    pub steps: usize,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.constant_drift <= CONSTANT_DRIFT_LIMIT
            && self.conservation_drift <= CONSERVATION_DRIFT_LIMIT
            && self.divergence_residual <= FLOW_RESIDUAL_LIMIT
            && self.jump_residual <= FLOW_RESIDUAL_LIMIT
    }
}

/// Check that the transport degree is compatible with the flow degree. A
/// nonzero Darcy source is only balanced exactly by the transport
/// divergence term when the concentration degree is `k - 1`.
pub fn check_compatibility(flow: &FlowProblem, k: usize, ell: usize) -> Result<()> {
    if flow.has_darcy_source() && ell + 1 != k {
        return Err(Error::Incompatible(format!(
            "with a nonzero Darcy source the transport degree must be k - 1 = {} to preserve constants (got ell = {ell})",
            k.saturating_sub(1)
        )));
    }
    Ok(())
}

/// Transport a constant `c~` with inflow `c~`, no diffusive flux and
/// source `-chi_d f_d c~`, and measure how far it strays.
///
/// `transport` supplies porosity, diffusion, penalty and degree; its
/// initial data and forcing are replaced.
pub fn compatibility_audit(
    mesh: &Mesh,
    flow_problem: &FlowProblem,
    transport: &TransportProblem,
    cfg: &AuditConfig,
) -> Result<AuditReport> {
    check_compatibility(flow_problem, cfg.k, transport.degree)?;
    let flow = solve_flow(mesh, flow_problem, cfg.k)?;
    let scale = flow.velocity_scale().max(f64::MIN_POSITIVE);
    let divergence_residual = check_divergence(&flow, flow_problem, mesh)? / scale;
    let jump_residual = check_normal_jump(&flow, mesh)? / scale;

    let c_tilde = cfg.c_tilde;
    let mut problem = transport.clone();
    problem.c0 = constant(c_tilde);
    problem.forcing.source = flow_problem.f_d.clone().map(|fd| {
        Arc::new(move |x: Vec2, r: Region, _t: f64| if r == Region::Darcy { -fd(x) * c_tilde } else { 0.0 })
            as crate::transport::RegionTimeField
    });
    problem.forcing.inflow = Some(Arc::new(move |_, _, _| c_tilde));
    problem.forcing.diffusive_flux = None;
    problem.forcing.steady = true;

    let area: f64 = (0..mesh.num_cells()).map(|c| 0.5 * mesh.cell_map(c).det.abs()).sum();
    let norm = c_tilde.abs().max(f64::MIN_POSITIVE) * area.sqrt();
    let spaces = crate::transport::TransportSpaces::new(mesh, problem.degree)?;
    let mut constant_drift: f64 = 0.0;
    let mut final_error = 0.0;
    let run = run_transport(mesh, &flow, &problem, cfg.t_final, cfg.dt, &mut |s, _| {
        let e = l2_error(mesh, &spaces.c, &s.c, &|_, _, _| c_tilde)?;
        constant_drift = constant_drift.max(e / norm);
        final_error = e;
        Ok(())
    })?;
    Ok(AuditReport {
        final_error,
        constant_drift,
        conservation_drift: run.max_relative_drift(),
        divergence_residual,
        jump_residual,
        steps: run.records.len() - 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::ManufacturedCase;

    #[test]
    fn incompatible_degrees_are_refused() {
        let p = ManufacturedCase::default().flow_problem();
        assert!(matches!(check_compatibility(&p, 2, 2), Err(Error::Incompatible(_))));
        assert!(check_compatibility(&p, 2, 1).is_ok());
        let closed = FlowProblem::new(1.0, 1.0, 1.0);
        assert!(check_compatibility(&closed, 2, 2).is_ok());
    }
}
