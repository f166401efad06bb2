//! Convergence studies on the manufactured case.

use std::sync::Arc;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::field::scalar;
use crate::flow::{solve_flow, FlowSolution};
use crate::mesh::{build_structured_mesh, mesh_size, Diagonal, Mesh, MeshParams, Region, Vec2};
use crate::transport::{run_transport, DiffusionModel, Forcing, TransportProblem, TransportState};

use super::manufactured::ManufacturedCase;
use super::norms::{energy_error, l2_error};
use super::rates::RateTable;

/// `dt = T / ceil(T / min(cap, factor h^2))`: the largest step below the
/// rule that divides the final time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeStepRule {
    pub cap: f64,
    pub factor: f64,
}

impl Default for TimeStepRule {
    fn default() -> Self {
        Self { cap: 1e-3, factor: 0.25 }
    }
}

impl TimeStepRule {
    pub fn dt(&self, h: f64, t_final: f64) -> f64 {
        let target = self.cap.min(self.factor * h * h);
        t_final / (t_final / target).ceil()
    }
}

#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub k: usize,
    pub ell: usize,
    /// Cells per side of each crossed mesh.
    pub ladder: Vec<usize>,
    pub dt_rule: TimeStepRule,
    pub t_final: f64,
    /// Number of time samples for the time-integrated energy error.
    pub energy_samples: usize,
}

impl StudyConfig {
    pub fn new(k: usize, ell: usize, ladder: Vec<usize>) -> Self {
        Self { k, ell, ladder, dt_rule: TimeStepRule::default(), t_final: 1.0, energy_samples: 100 }
    }
}

#[derive(Clone, Debug)]
pub struct LevelStats {
    pub n: usize,
    pub dt: f64,
    pub steps: usize,
    pub max_relative_drift: f64,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub velocity: RateTable,
    /// `|c - c_h|` in L2 at the final time.
    pub concentration: RateTable,
    /// `(int_0^T |||c - c_h|||^2 dt)^{1/2}`.
    pub energy: RateTable,
    pub levels: Vec<LevelStats>,
}

impl ConvergenceReport {
    pub fn max_relative_drift(&self) -> f64 {
        self.levels.iter().map(|l| l.max_relative_drift).fold(0.0, f64::max)
    }
}

/// The manufactured transport problem: exact initial data, source, inflow
/// concentration and diffusive boundary flux.
pub fn manufactured_transport_problem(case: &ManufacturedCase, ell: usize) -> TransportProblem {
    let me = *case;
    let [[a, b], [c, d]] = case.diffusion;
    let mut p = TransportProblem::new(
        ell,
        DiffusionModel::ConstantMatrix(Matrix2::new(a, b, c, d)),
        scalar(move |x| me.concentration(x, 0.0)),
    );
    p.phi_darcy = case.phi;
    p.forcing = Forcing {
        source: Some(Arc::new(move |x: Vec2, r: Region, t: f64| me.transport_source(x, t, r))),
        inflow: Some(Arc::new(move |x: Vec2, _n: Vec2, t: f64| me.concentration(x, t))),
        diffusive_flux: Some(Arc::new(move |x: Vec2, n: Vec2, t: f64| me.diffusive_flux(x, n, t))),
        steady: false,
    };
    p
}

fn concentration_errors(
    mesh: &Mesh,
    case: &ManufacturedCase,
    run_spaces: &crate::transport::TransportSpaces,
    s: &TransportState,
) -> Result<(f64, f64)> {
    let t = s.t;
    let l2 = l2_error(mesh, &run_spaces.c, &s.c, &|x, _, _| case.concentration(x, t))?;
    let energy = energy_error(mesh, &run_spaces.c, &s.c, &run_spaces.cbar, &s.cbar, &|x| {
        (case.concentration(x, t), case.concentration_gradient(x, t))
    })?;
    Ok((l2, energy))
}

/// Solve flow and transport on each level of the ladder and tabulate the
/// velocity error, the final concentration error and the time-integrated
/// energy error.
pub fn convergence_study(case: &ManufacturedCase, cfg: &StudyConfig) -> Result<ConvergenceReport> {
    if cfg.ladder.len() < 3 {
        return Err(Error::Problem(format!("a convergence ladder needs at least 3 levels (got {})", cfg.ladder.len())));
    }
    if cfg.energy_samples == 0 {
        return Err(Error::Problem("energy_samples must be positive".into()));
    }
    let flow_problem = case.flow_problem();
    let transport = manufactured_transport_problem(case, cfg.ell);
    let mut report = ConvergenceReport {
        velocity: RateTable::new(format!("velocity L2 error, k = {}", cfg.k)),
        concentration: RateTable::new(format!("concentration L2 error at t = {}, ell = {}", cfg.t_final, cfg.ell)),
        energy: RateTable::new(format!("time-integrated energy error, ell = {}", cfg.ell)),
        levels: Vec::new(),
    };
    for &n in &cfg.ladder {
        let mesh = build_structured_mesh(&MeshParams::square(n, Diagonal::Crossed))?;
        let h = mesh_size(&mesh)?;
        let flow: FlowSolution = solve_flow(&mesh, &flow_problem, cfg.k)?;
        let eu = l2_error(&mesh, &flow.spaces.u, &flow.u, &|x, r, c| case.velocity(x, r)[c])?;
        let dt = cfg.dt_rule.dt(h, cfg.t_final);
        let steps = (cfg.t_final / dt).round() as usize;
        let stride = (steps / cfg.energy_samples).max(1);
        let spaces = crate::transport::TransportSpaces::new(&mesh, cfg.ell)?;
        let mut final_l2 = f64::NAN;
        // Trapezoidal rule over the sampled levels.
        let mut energy_sq = 0.0;
        let mut last: Option<(f64, f64)> = None;
        let run = run_transport(&mesh, &flow, &transport, cfg.t_final, dt, &mut |s, rec| {
            if rec.step % stride != 0 && rec.step != steps {
                return Ok(());
            }
            let (l2, e) = concentration_errors(&mesh, case, &spaces, s)?;
            if let Some((t0, e0)) = last {
                energy_sq += 0.5 * (s.t - t0) * (e0 * e0 + e * e);
            }
            last = Some((s.t, e));
            final_l2 = l2;
            Ok(())
        })?;
        report.velocity.push(h, mesh.num_cells(), eu)?;
        report.concentration.push(h, mesh.num_cells(), final_l2)?;
        report.energy.push(h, mesh.num_cells(), energy_sq.sqrt())?;
        report.levels.push(LevelStats { n, dt, steps, max_relative_drift: run.max_relative_drift() });
    }
    Ok(report)
}
