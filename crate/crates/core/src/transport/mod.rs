//! Embedded DG transport: advection by a discrete flow velocity,
//! diffusion/dispersion, and Crank-Nicolson time stepping.
//!
//! Unknowns are ordered `[c | cbar]`: the discontinuous cell
//! concentration of degree `ell`, then its continuous trace on the whole
//! skeleton.

mod assemble;
mod stepping;

use std::sync::Arc;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::fespace::{build_cell_space, build_skeleton_space, Continuity, DofMap, Rank, Restriction};
use crate::field::ScalarField;
use crate::mesh::{Mesh, Region, Vec2};

pub use assemble::{
    assemble_advection, assemble_diffusion, assemble_load, assemble_mass, assemble_open_boundary, classify_inflow,
    InflowFlags, TransportOperators,
};
pub use stepping::{
    crank_nicolson_step, initial_state, run_transport, CrankNicolson, StepRecord, TransportRun, STEP_TOLERANCE,
};

/// Below this speed the dispersion tensor takes its zero-velocity limit.
const DISPERSION_SPEED_FLOOR: f64 = 1e-14;

/// Diffusion/dispersion tensor as a function of the local velocity.
#[derive(Clone, Debug)]
pub enum DiffusionModel {
    /// The same symmetric positive-definite matrix everywhere.
    ConstantMatrix(Matrix2<f64>),
    /// `delta I` in the free-flow region; velocity-dependent mechanical
    /// dispersion `phi d_m I + d_l |u| T + d_t |u| (I - T)`, `T = u u^T / |u|^2`,
    /// in the porous region.
    StokesDarcyDispersion { delta: f64, phi: f64, d_m: f64, d_l: f64, d_t: f64 },
}

impl DiffusionModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DiffusionModel::ConstantMatrix(d) => {
                if !d.iter().all(|v| v.is_finite()) || (d[(0, 1)] - d[(1, 0)]).abs() > 1e-14 * d.amax() {
                    return Err(Error::Problem(format!("diffusion matrix {d:?} is not symmetric")));
                }
                let min_eig = d.symmetric_eigenvalues().min();
                if min_eig <= 0.0 {
                    return Err(Error::Problem(format!(
                        "diffusion matrix is not positive definite (smallest eigenvalue {min_eig:e})"
                    )));
                }
            }
            DiffusionModel::StokesDarcyDispersion { delta, phi, d_m, d_l, d_t } => {
                if !(delta > 0.0) {
                    return Err(Error::Problem(format!("free-flow diffusivity delta = {delta} must be positive")));
                }
                if !(phi > 0.0 && phi <= 1.0) {
                    return Err(Error::Problem(format!("porosity {phi} must lie in (0, 1]")));
                }
                if !(d_m > 0.0) {
                    return Err(Error::Problem(format!("molecular diffusivity d_m = {d_m} must be positive")));
                }
                if !(d_t >= 0.0 && d_l >= d_t) {
                    return Err(Error::Problem(format!(
                        "dispersivities need d_l >= d_t >= 0 (got d_l = {d_l}, d_t = {d_t})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The diffusion tensor at a point with velocity `u` in `region`.
pub fn eval_diffusion(model: &DiffusionModel, u: Vec2, region: Region) -> Matrix2<f64> {
    match *model {
        DiffusionModel::ConstantMatrix(d) => d,
        DiffusionModel::StokesDarcyDispersion { delta, phi, d_m, d_l, d_t } => match region {
            Region::Stokes => Matrix2::identity() * delta,
            Region::Darcy => {
                let speed = u.norm();
                let base = Matrix2::identity() * (phi * d_m);
                if speed < DISPERSION_SPEED_FLOOR {
                    return base;
                }
                let t = u * u.transpose() / (speed * speed);
                base + t * (d_l * speed) + (Matrix2::identity() - t) * (d_t * speed)
            }
        },
    }
}

/// Source `f(x, region, t)`; the region disambiguates points on the interface.
pub type RegionTimeField = Arc<dyn Fn(Vec2, Region, f64) -> f64 + Send + Sync>;
/// Boundary data `g(x, n, t)` with `n` the outward unit normal.
pub type BoundaryTimeField = Arc<dyn Fn(Vec2, Vec2, f64) -> f64 + Send + Sync>;

/// Right-hand-side data of the transport problem.
///
/// The outer boundary is open: where the flow enters, the advective flux
/// carries `inflow`; where it leaves, it carries the trace of the solution.
/// `diffusive_flux` prescribes `D grad c . n` everywhere on the boundary.
/// With a flow that has no normal velocity on the boundary this reduces to
/// the closed problem with a Neumann condition.
#[derive(Clone, Default)]
pub struct Forcing {
    pub source: Option<RegionTimeField>,
    pub inflow: Option<BoundaryTimeField>,
    pub diffusive_flux: Option<BoundaryTimeField>,
    /// Whether all data are independent of time; the load is then
    /// assembled once.
    pub steady: bool,
}

impl Forcing {
    pub fn none() -> Self {
        Self { steady: true, ..Default::default() }
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_none() && self.inflow.is_none() && self.diffusive_flux.is_none()
    }
}

impl std::fmt::Debug for Forcing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Forcing")
            .field("source", &self.source.is_some())
            .field("inflow", &self.inflow.is_some())
            .field("diffusive_flux", &self.diffusive_flux.is_some())
            .field("steady", &self.steady)
            .finish()
    }
}

#[derive(Clone)]
pub struct TransportProblem {
    /// Porosity in the porous region; it is 1 in the free-flow region.
    pub phi_darcy: f64,
    pub diffusion: DiffusionModel,
    /// Penalty; `None` selects `6 ell^2`.
    pub beta_c: Option<f64>,
    pub forcing: Forcing,
    pub c0: ScalarField,
    pub degree: usize,
    /// Volume/facet quadrature degree for the operators; `None` selects
    /// `k + 2 ell + 2` for flow degree `k`.
    pub quad_degree: Option<usize>,
    /// Quadrature degree of the source term; `None` selects `2k + 2`, the
    /// flow load default. It must match the flow load rule for the
    /// constant-preservation property.
    pub source_quad_degree: Option<usize>,
}

impl std::fmt::Debug for TransportProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransportProblem")
            .field("phi_darcy", &self.phi_darcy)
            .field("diffusion", &self.diffusion)
            .field("beta_c", &self.beta_c)
            .field("forcing", &self.forcing)
            .field("degree", &self.degree)
            .field("quad_degree", &self.quad_degree)
            .field("source_quad_degree", &self.source_quad_degree)
            .finish_non_exhaustive()
    }
}

impl TransportProblem {
    pub fn new(degree: usize, diffusion: DiffusionModel, c0: ScalarField) -> Self {
        Self {
            phi_darcy: 1.0,
            diffusion,
            beta_c: None,
            forcing: Forcing::none(),
            c0,
            degree,
            quad_degree: None,
            source_quad_degree: None,
        }
    }

    pub fn beta_c(&self) -> f64 {
        self.beta_c.unwrap_or(6.0 * (self.degree * self.degree) as f64)
    }

    pub fn phi(&self, region: Region) -> f64 {
        match region {
            Region::Stokes => 1.0,
            Region::Darcy => self.phi_darcy,
        }
    }

    pub fn quad_degree(&self, k: usize) -> usize {
        self.quad_degree.unwrap_or(k + 2 * self.degree + 2)
    }

    pub fn source_quad_degree(&self, k: usize) -> usize {
        self.source_quad_degree.unwrap_or(2 * k + 2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree == 0 {
            return Err(Error::Problem("transport degree ell must be at least 1".into()));
        }
        if !(self.phi_darcy > 0.0 && self.phi_darcy <= 1.0) {
            return Err(Error::Problem(format!("porosity {} must lie in (0, 1]", self.phi_darcy)));
        }
        if !(self.beta_c() > 0.0) {
            return Err(Error::Problem(format!("penalty beta_c = {} must be positive", self.beta_c())));
        }
        self.diffusion.validate()
    }
}

/// Cell space `C_h` and continuous skeleton space `Cbar_h`.
#[derive(Clone, Debug)]
pub struct TransportSpaces {
    pub ell: usize,
    pub c: DofMap,
    pub cbar: DofMap,
}

impl TransportSpaces {
    pub fn new(mesh: &Mesh, ell: usize) -> Result<Self> {
        if ell == 0 {
            return Err(Error::Space("continuous skeleton concentration needs ell >= 1".into()));
        }
        Ok(Self {
            ell,
            c: build_cell_space(mesh, ell, Rank::Scalar, Restriction::All)?,
            cbar: build_skeleton_space(mesh, ell, Rank::Scalar, Continuity::Continuous, Restriction::All, &[])?,
        })
    }

    pub fn off_cbar(&self) -> usize {
        self.c.n_free()
    }

    pub fn dim(&self) -> usize {
        self.c.n_free() + self.cbar.n_free()
    }

    /// Cell unknowns of each cell, the blocks eliminated before the global
    /// solve.
    pub fn cell_blocks(&self, mesh: &Mesh) -> Vec<Vec<usize>> {
        (0..mesh.num_cells())
            .map(|c| self.c.entity_dofs(c).into_iter().filter_map(|d| self.c.free_index(d)).collect())
            .collect()
    }
}

/// Concentration coefficients at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportState {
    pub c: Vec<f64>,
    pub cbar: Vec<f64>,
    pub t: f64,
}

impl TransportState {
    pub fn from_vector(spaces: &TransportSpaces, x: &[f64], t: f64) -> Self {
        let off = spaces.off_cbar();
        Self { c: x[..off].to_vec(), cbar: x[off..].to_vec(), t }
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let mut x = self.c.clone();
        x.extend_from_slice(&self.cbar);
        x
    }
}
