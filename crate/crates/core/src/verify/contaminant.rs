//! Contaminant plume released in the free-flow region and carried into a
//! heterogeneous aquifer.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::field::{constant, scalar, vector, ScalarField};
use crate::flow::{FlowBoundary, FlowProblem, Gauge};
use crate::mesh::{BoundaryLabel, Diagonal, MeshParams, Vec2};
use crate::transport::{DiffusionModel, Forcing, TransportProblem};

/// `700 (1 + 0.5 (sin(10 pi x1) cos(20 pi x2^2) + cos^2(6.4 pi x1) sin(9.2 pi x2))) + 100`.
pub fn contaminant_permeability(x: Vec2) -> f64 {
    let osc = (10.0 * PI * x.x).sin() * (20.0 * PI * x.y * x.y).cos()
        + (6.4 * PI * x.x).cos().powi(2) * (9.2 * PI * x.y).sin();
    700.0 * (1.0 + 0.5 * osc) + 100.0
}

/// 0.95 inside the disc of radius 0.1 around (0.2, 0.7), 0.05 elsewhere.
pub fn contaminant_initial(x: Vec2) -> f64 {
    if (x - Vec2::new(0.2, 0.7)).norm() < 0.1 {
        0.95
    } else {
        0.05
    }
}

/// Free-flow inflow profile on the left wall, `(x2 (3/2 - x2) / 5, 0)`.
pub fn contaminant_inflow(x: Vec2) -> Vec2 {
    Vec2::new(x.y * (1.5 - x.y) / 5.0, 0.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContaminantCase {
    pub mesh: MeshParams,
    pub k: usize,
    pub ell: usize,
    pub mu: f64,
    pub alpha: f64,
    /// Pressure on the aquifer bottom.
    pub bottom_pressure: f64,
    pub delta: f64,
    pub phi_darcy: f64,
    pub d_m: f64,
    pub d_l: f64,
    pub d_t: f64,
    /// Concentration carried in by the inflow.
    pub inflow_concentration: f64,
    pub dt: f64,
    pub t_final: f64,
    pub snapshot_times: Vec<f64>,
}

impl ContaminantCase {
    /// Full resolution: 43 x 86 crossed cells, 14792 triangles.
    pub fn full() -> Self {
        Self {
            mesh: MeshParams::new(43, 86, Diagonal::Crossed),
            k: 3,
            ell: 2,
            mu: 0.1,
            alpha: 0.5,
            bottom_pressure: -0.05,
            delta: 1e-6,
            phi_darcy: 0.4,
            d_m: 1e-5,
            d_l: 1e-5,
            d_t: 1e-5,
            inflow_concentration: 0.05,
            dt: 1e-3,
            t_final: 10.0,
            snapshot_times: vec![0.0, 3.3, 6.6, 10.0],
        }
    }

    /// Quarter resolution, 22 x 44 crossed cells, with the same physics
    /// and time stepping.
    pub fn ci() -> Self {
        Self { mesh: MeshParams::new(22, 44, Diagonal::Crossed), ..Self::full() }
    }

    pub fn permeability(&self) -> ScalarField {
        scalar(contaminant_permeability)
    }

    pub fn flow_problem(&self) -> FlowProblem {
        let mut p = FlowProblem::new(self.mu, 1.0, self.alpha);
        p.kappa = self.permeability();
        p.gauge = Gauge::PressureBc;
        p.with_boundary(BoundaryLabel::StokesLeft, FlowBoundary::Velocity(vector(contaminant_inflow)))
            .with_boundary(BoundaryLabel::StokesRight, FlowBoundary::ZeroStress)
            .with_boundary(BoundaryLabel::StokesTop, FlowBoundary::Slip)
            .with_boundary(BoundaryLabel::DarcySide, FlowBoundary::NormalFlux(constant(0.0)))
            .with_boundary(BoundaryLabel::DarcyBottom, FlowBoundary::Pressure(constant(self.bottom_pressure)))
    }

    pub fn transport_problem(&self) -> TransportProblem {
        let diffusion = DiffusionModel::StokesDarcyDispersion {
            delta: self.delta,
            phi: self.phi_darcy,
            d_m: self.d_m,
            d_l: self.d_l,
            d_t: self.d_t,
        };
        let mut p = TransportProblem::new(self.ell, diffusion, scalar(contaminant_initial));
        p.phi_darcy = self.phi_darcy;
        let c_in = self.inflow_concentration;
        p.forcing = Forcing { inflow: Some(Arc::new(move |_, _, _| c_in)), steady: true, ..Forcing::none() };
        p
    }

    /// Step indices at which snapshots are written.
    pub fn snapshot_steps(&self) -> Vec<usize> {
        self.snapshot_times.iter().map(|t| (t / self.dt).round() as usize).collect()
    }
}
