//! Hybridized Stokes-Darcy flow: problem description, discrete spaces,
//! assembly and solution.
//!
//! Unknowns are the cell velocity `u` (vector DG, degree k), the
//! continuous velocity trace `ubar` on the Stokes skeleton, the cell
//! pressure `p` (DG, degree k-1), discontinuous facet pressures on the
//! Stokes and Darcy skeletons, and optionally a scalar multiplier fixing
//! the pressure mean. Interface facets belong to both facet-pressure
//! spaces.

mod assemble;
mod solution;

pub use assemble::{assemble_ah, assemble_bh, assemble_flow_rhs, assemble_flow_system, assemble_gauge, FlowSystem};
pub use solution::{check_divergence, check_normal_jump, solve_flow, FlowSolution};

use std::fmt;

use crate::error::{Error, Result};
use crate::fespace::{build_cell_space, build_skeleton_space, Continuity, DofMap, Rank, Restriction};
use crate::field::{constant, constant_vector, ScalarField, VectorField};
use crate::mesh::{BoundaryLabel, FacetKind, Mesh, Region, Vec2};

/// Boundary condition attached to one boundary label.
#[derive(Clone)]
pub enum FlowBoundary {
    /// Prescribed Stokes velocity, imposed on the facet velocity.
    Velocity(VectorField),
    /// Zero normal stress (natural).
    ZeroStress,
    /// Zero normal velocity and zero tangential stress; axis-aligned
    /// facets only.
    Slip,
    /// Prescribed Darcy normal flux `u . n = g`.
    NormalFlux(ScalarField),
    /// Prescribed Darcy pressure, imposed on the facet pressure.
    Pressure(ScalarField),
}

impl FlowBoundary {
    pub fn no_slip() -> Self {
        FlowBoundary::Velocity(constant_vector(Vec2::zeros()))
    }

    pub fn no_flux() -> Self {
        FlowBoundary::NormalFlux(constant(0.0))
    }

    fn name(&self) -> &'static str {
        match self {
            FlowBoundary::Velocity(_) => "Velocity",
            FlowBoundary::ZeroStress => "ZeroStress",
            FlowBoundary::Slip => "Slip",
            FlowBoundary::NormalFlux(_) => "NormalFlux",
            FlowBoundary::Pressure(_) => "Pressure",
        }
    }

    fn region(&self) -> Region {
        match self {
            FlowBoundary::Velocity(_) | FlowBoundary::ZeroStress | FlowBoundary::Slip => Region::Stokes,
            FlowBoundary::NormalFlux(_) | FlowBoundary::Pressure(_) => Region::Darcy,
        }
    }

    /// Whether this condition determines the pressure level.
    fn fixes_pressure_level(&self) -> bool {
        matches!(self, FlowBoundary::ZeroStress | FlowBoundary::Pressure(_))
    }

    /// Whether the normal flux through this boundary is data.
    fn is_flux_type(&self) -> bool {
        matches!(self, FlowBoundary::Velocity(_) | FlowBoundary::Slip | FlowBoundary::NormalFlux(_))
    }
}

impl fmt::Debug for FlowBoundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gauge {
    /// Zero mean cell pressure via a scalar multiplier.
    ZeroMean,
    /// The pressure level is fixed by a boundary condition.
    PressureBc,
}

/// Coefficients, sources and boundary data of the coupled flow problem.
#[derive(Clone)]
pub struct FlowProblem {
    pub mu: f64,
    pub kappa: ScalarField,
    pub alpha: f64,
    /// Velocity penalty; `None` selects `10 k^2`.
    pub beta_f: Option<f64>,
    pub f_s: Option<VectorField>,
    pub f_d: Option<ScalarField>,
    /// Conditions per label; absent labels default to no-slip (Stokes) or
    /// no-flux (Darcy).
    pub boundary: Vec<(BoundaryLabel, FlowBoundary)>,
    pub gauge: Gauge,
    /// Volume quadrature degree; `None` selects `2k + 2`.
    pub quad_degree: Option<usize>,
}

impl fmt::Debug for FlowProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowProblem")
            .field("mu", &self.mu)
            .field("alpha", &self.alpha)
            .field("beta_f", &self.beta_f)
            .field("f_s", &self.f_s.is_some())
            .field("f_d", &self.f_d.is_some())
            .field("boundary", &self.boundary)
            .field("gauge", &self.gauge)
            .finish()
    }
}

impl FlowProblem {
    /// Homogeneous problem with constant coefficients and zero sources.
    pub fn new(mu: f64, kappa: f64, alpha: f64) -> Self {
        Self {
            mu,
            kappa: constant(kappa),
            alpha,
            beta_f: None,
            f_s: None,
            f_d: None,
            boundary: Vec::new(),
            gauge: Gauge::ZeroMean,
            quad_degree: None,
        }
    }

    pub fn with_boundary(mut self, label: BoundaryLabel, bc: FlowBoundary) -> Self {
        self.boundary.retain(|(l, _)| *l != label);
        self.boundary.push((label, bc));
        self
    }

    pub fn boundary_for(&self, label: BoundaryLabel) -> FlowBoundary {
        self.boundary.iter().find(|(l, _)| *l == label).map(|(_, b)| b.clone()).unwrap_or_else(|| {
            match label.region() {
                Region::Stokes => FlowBoundary::no_slip(),
                Region::Darcy => FlowBoundary::no_flux(),
            }
        })
    }

    pub fn beta_f(&self, k: usize) -> f64 {
        self.beta_f.unwrap_or(10.0 * (k * k) as f64)
    }

    pub fn quad_degree(&self, k: usize) -> usize {
        self.quad_degree.unwrap_or(2 * k + 2)
    }

    pub fn has_darcy_source(&self) -> bool {
        self.f_d.is_some()
    }

    /// Check coefficients, boundary data and the gauge choice against the
    /// mesh.
    pub fn validate(&self, mesh: &Mesh, k: usize) -> Result<()> {
        if k == 0 {
            return Err(Error::Problem("velocity degree k must be at least 1".into()));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::Problem(format!("viscosity mu = {} must be positive", self.mu)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Problem(format!("slip coefficient alpha = {} must be nonnegative", self.alpha)));
        }
        let beta = self.beta_f(k);
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Problem(format!("penalty beta_f = {beta} must be positive")));
        }
        for (i, (l, b)) in self.boundary.iter().enumerate() {
            if self.boundary[..i].iter().any(|(m, _)| m == l) {
                return Err(Error::Problem(format!("boundary label {l:?} given twice")));
            }
            if b.region() != l.region() {
                return Err(Error::Problem(format!(
                    "{} condition is not valid on {:?} boundary {l:?}",
                    b.name(),
                    l.region()
                )));
            }
            if !mesh.has_label(*l) {
                return Err(Error::Problem(format!("boundary label {l:?} is absent from the mesh")));
            }
        }
        for region in [Region::Stokes, Region::Darcy] {
            if mesh.cells_in(region).next().is_none() {
                return Err(Error::Problem(format!("mesh has no {region:?} cells")));
            }
        }
        let level_fixed =
            BoundaryLabel::ALL.iter().any(|&l| mesh.has_label(l) && self.boundary_for(l).fixes_pressure_level());
        match (self.gauge, level_fixed) {
            (Gauge::ZeroMean, true) => Err(Error::Problem(
                "ZeroMean gauge conflicts with a zero-stress or pressure boundary that already fixes the pressure level"
                    .into(),
            )),
            (Gauge::PressureBc, false) => Err(Error::Problem(
                "PressureBc gauge requested but no zero-stress or pressure boundary fixes the pressure level; the system would be singular".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Dof maps of all flow unknowns and their offsets in the global system.
#[derive(Clone, Debug)]
pub struct FlowSpaces {
    pub k: usize,
    pub u: DofMap,
    pub ubar: DofMap,
    pub p: DofMap,
    pub pbar_s: DofMap,
    pub pbar_d: DofMap,
    pub multiplier: bool,
}

impl FlowSpaces {
    pub fn new(mesh: &Mesh, problem: &FlowProblem, k: usize) -> Result<Self> {
        problem.validate(mesh, k)?;
        let u = build_cell_space(mesh, k, Rank::Vector, Restriction::All)?;
        let p = build_cell_space(mesh, k - 1, Rank::Scalar, Restriction::All)?;
        let stokes = Restriction::Region(Region::Stokes);
        let darcy = Restriction::Region(Region::Darcy);
        let mut ubar = build_skeleton_space(mesh, k, Rank::Vector, Continuity::Continuous, stokes, &[])?;
        let pbar_s = build_skeleton_space(mesh, k, Rank::Scalar, Continuity::Discontinuous, stokes, &[])?;
        let mut pbar_d = build_skeleton_space(mesh, k, Rank::Scalar, Continuity::Discontinuous, darcy, &[])?;

        let present: Vec<BoundaryLabel> = BoundaryLabel::ALL.iter().copied().filter(|&l| mesh.has_label(l)).collect();
        for &l in &present {
            match problem.boundary_for(l) {
                FlowBoundary::Slip => ubar.constrain(mesh, &[l], Some(slip_component(mesh, l)?))?,
                FlowBoundary::Velocity(_) => ubar.constrain(mesh, &[l], None)?,
                FlowBoundary::Pressure(_) => pbar_d.constrain(mesh, &[l], None)?,
                _ => {}
            }
        }
        for &l in &present {
            match problem.boundary_for(l) {
                FlowBoundary::Velocity(g) => ubar.interpolate_constraints(mesh, &[l], &|x, c| g(x)[c]),
                FlowBoundary::Pressure(g) => pbar_d.interpolate_constraints(mesh, &[l], &|x, _| g(x)),
                _ => {}
            }
        }
        Ok(Self { k, u, ubar, p, pbar_s, pbar_d, multiplier: problem.gauge == Gauge::ZeroMean })
    }

    pub fn off_ubar(&self) -> usize {
        self.u.n_free()
    }

    pub fn off_p(&self) -> usize {
        self.off_ubar() + self.ubar.n_free()
    }

    pub fn off_pbar_s(&self) -> usize {
        self.off_p() + self.p.n_free()
    }

    pub fn off_pbar_d(&self) -> usize {
        self.off_pbar_s() + self.pbar_s.n_free()
    }

    /// Index of the mean-pressure multiplier (meaningful only with the
    /// zero-mean gauge).
    pub fn off_multiplier(&self) -> usize {
        self.off_pbar_d() + self.pbar_d.n_free()
    }

    pub fn dim(&self) -> usize {
        self.off_multiplier() + usize::from(self.multiplier)
    }
}

/// Velocity component normal to the (axis-aligned) facets of `label`.
fn slip_component(mesh: &Mesh, label: BoundaryLabel) -> Result<usize> {
    let mut comp = None;
    for f in &mesh.facets {
        if f.kind != FacetKind::Boundary(label) {
            continue;
        }
        let n = f.sides[0].normal;
        let c = if (n.x.abs() - 1.0).abs() < 1e-12 {
            0
        } else if (n.y.abs() - 1.0).abs() < 1e-12 {
            1
        } else {
            return Err(Error::Problem(format!("slip boundary {label:?} has a facet that is not axis-aligned")));
        };
        if comp.is_some_and(|d| d != c) {
            return Err(Error::Problem(format!("slip boundary {label:?} is not a single straight side")));
        }
        comp = Some(c);
    }
    comp.ok_or_else(|| Error::Problem(format!("slip boundary {label:?} has no facets")))
}
