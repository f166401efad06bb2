//! Closed-form manufactured flow and concentration fields with their
//! sources.

use std::f64::consts::PI;

use crate::field::{scalar, vector};
use crate::flow::{FlowBoundary, FlowProblem, Gauge};
use crate::mesh::{BoundaryLabel, Region, Vec2};

/// Coupled manufactured case on the unit square with the interface at
/// `x2 = 1/2`. The flow fields are smooth per region and satisfy the
/// interface conditions with `alpha = mu sqrt(kappa) (1 + 4 pi^2) / 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManufacturedCase {
    pub mu: f64,
    pub kappa: f64,
    /// Constant symmetric diffusion tensor of the transport problem.
    pub diffusion: [[f64; 2]; 2],
    /// Porosity of the porous region; the free-flow region has porosity 1.
    pub phi: f64,
}

impl Default for ManufacturedCase {
    fn default() -> Self {
        Self { mu: 1.0, kappa: 1.0, diffusion: [[0.01, 0.005], [0.005, 0.02]], phi: 1.0 }
    }
}

fn parts(x: Vec2) -> (f64, f64, f64) {
    ((PI * x.x).sin(), (PI * x.x).cos(), (x.y / 2.0).exp())
}

impl ManufacturedCase {
    pub fn alpha(&self) -> f64 {
        self.mu * self.kappa.sqrt() * (1.0 + 4.0 * PI * PI) / 2.0
    }

    pub fn velocity(&self, x: Vec2, region: Region) -> Vec2 {
        let (s, c, e) = parts(x);
        match region {
            Region::Stokes => Vec2::new(-s * e / (2.0 * PI * PI), c * e / PI),
            Region::Darcy => Vec2::new(-2.0 * s * e, c * e / PI),
        }
    }

    pub fn pressure(&self, x: Vec2, region: Region) -> f64 {
        let (_, c, e) = parts(x);
        match region {
            Region::Stokes => (self.kappa * self.mu - 2.0) / (self.kappa * PI) * c * e,
            Region::Darcy => -2.0 / (self.kappa * PI) * c * e,
        }
    }

    /// Stokes body force `-div(2 mu eps(u)) + grad p`.
    pub fn stokes_source(&self, x: Vec2) -> Vec2 {
        let (s, c, e) = parts(x);
        let a = (self.kappa * self.mu - 2.0) / (self.kappa * PI);
        let mu = self.mu;
        Vec2::new(
            -mu * s * e * (0.5 - 1.0 / (8.0 * PI * PI)) - a * PI * s * e,
            -mu * c * e * (-PI + 1.0 / (4.0 * PI)) + a * c * e / 2.0,
        )
    }

    /// Darcy source `-div u`.
    pub fn darcy_source(&self, x: Vec2) -> f64 {
        let (_, c, e) = parts(x);
        c * e * (2.0 * PI - 1.0 / (2.0 * PI))
    }

    /// Divergence of the exact velocity.
    pub fn velocity_divergence(&self, x: Vec2, region: Region) -> f64 {
        match region {
            Region::Stokes => 0.0,
            Region::Darcy => -self.darcy_source(x),
        }
    }

    /// Flow problem with exact velocity on the Stokes boundary, exact
    /// normal flux on the Darcy boundary and the zero-mean gauge.
    pub fn flow_problem(&self) -> FlowProblem {
        let me = *self;
        let mut p = FlowProblem::new(self.mu, self.kappa, self.alpha());
        p.f_s = Some(vector(move |x| me.stokes_source(x)));
        p.f_d = Some(scalar(move |x| me.darcy_source(x)));
        p.gauge = Gauge::ZeroMean;
        for l in BoundaryLabel::ALL {
            let bc = match l.region() {
                Region::Stokes => FlowBoundary::Velocity(vector(move |x| me.velocity(x, Region::Stokes))),
                Region::Darcy => FlowBoundary::NormalFlux(scalar(move |x| {
                    me.velocity(x, Region::Darcy).dot(&unit_square_normal(x, l))
                })),
            };
            p = p.with_boundary(l, bc);
        }
        p
    }

    pub fn concentration(&self, x: Vec2, t: f64) -> f64 {
        manufactured_concentration(x, t)
    }

    pub fn concentration_gradient(&self, x: Vec2, t: f64) -> Vec2 {
        let (s1, c1) = (2.0 * PI * (x.x - t)).sin_cos();
        let (s2, c2) = (2.0 * PI * (x.y - t)).sin_cos();
        Vec2::new(2.0 * PI * c1 * c2, -2.0 * PI * s1 * s2)
    }

    /// Diffusive flux `D grad c . n`.
    pub fn diffusive_flux(&self, x: Vec2, n: Vec2, t: f64) -> f64 {
        let g = self.concentration_gradient(x, t);
        let d = self.diffusion;
        let dg = Vec2::new(d[0][0] * g.x + d[0][1] * g.y, d[1][0] * g.x + d[1][1] * g.y);
        dg.dot(&n)
    }

    /// Transport source `phi c_t + div(c u - D grad c)` for the exact
    /// velocity.
    pub fn transport_source(&self, x: Vec2, t: f64, region: Region) -> f64 {
        let (s1, c1) = (2.0 * PI * (x.x - t)).sin_cos();
        let (s2, c2) = (2.0 * PI * (x.y - t)).sin_cos();
        let c = s1 * c2;
        let dt = -2.0 * PI * c1 * c2 + 2.0 * PI * s1 * s2;
        let grad = Vec2::new(2.0 * PI * c1 * c2, -2.0 * PI * s1 * s2);
        let [[a, b], [_, d]] = self.diffusion;
        let div_dgrad = -4.0 * PI * PI * ((a + d) * s1 * c2 + 2.0 * b * c1 * s2);
        let u = self.velocity(x, region);
        let phi = if region == Region::Darcy { self.phi } else { 1.0 };
        phi * dt + u.dot(&grad) + c * self.velocity_divergence(x, region) - div_dgrad
    }
}

/// `sin(2 pi (x1 - t)) cos(2 pi (x2 - t))`.
pub fn manufactured_concentration(x: Vec2, t: f64) -> f64 {
    (2.0 * PI * (x.x - t)).sin() * (2.0 * PI * (x.y - t)).cos()
}

/// Exact flow fields `(u, p)` of the default case.
pub fn manufactured_flow(x: Vec2, region: Region) -> (Vec2, f64) {
    let m = ManufacturedCase::default();
    (m.velocity(x, region), m.pressure(x, region))
}

/// Outward unit normal of the unit square on the side carrying `label`.
pub fn unit_square_normal(x: Vec2, label: BoundaryLabel) -> Vec2 {
    match label {
        BoundaryLabel::StokesLeft => Vec2::new(-1.0, 0.0),
        BoundaryLabel::StokesRight => Vec2::new(1.0, 0.0),
        BoundaryLabel::StokesTop => Vec2::new(0.0, 1.0),
        BoundaryLabel::DarcyBottom => Vec2::new(0.0, -1.0),
        BoundaryLabel::DarcySide => Vec2::new(if x.x < 0.5 { -1.0 } else { 1.0 }, 0.0),
    }
}
