//! Gauss-Legendre rules on the unit segment and collapsed (Duffy) product
//! rules on the reference triangle.

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 20;

#[derive(Clone, Debug)]
pub struct SegmentRule {
    /// Points in `[0, 1]`.
    pub points: Vec<f64>,
    /// Weights summing to 1.
    pub weights: Vec<f64>,
    pub degree: usize,
}

#[derive(Clone, Debug)]
pub struct TriangleRule {
    /// Points in reference coordinates of `{x >= 0, y >= 0, x + y <= 1}`.
    pub points: Vec<[f64; 2]>,
    /// Weights summing to 1/2.
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl SegmentRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n and its derivative
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                z
            } else {
                p1
            };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Gauss-Legendre rule on `[0, 1]` exact for polynomials up to `degree`.
pub fn quadrature_segment(degree: usize) -> Result<SegmentRule> {
    if degree > MAX_DEGREE {
        return Err(Error::QuadratureDegree { degree, max: MAX_DEGREE });
    }
    let n = degree / 2 + 1;
    let (x, w) = gauss_legendre(n);
    Ok(SegmentRule {
        points: x.iter().map(|&z| 0.5 * (z + 1.0)).collect(),
        weights: w.iter().map(|&wi| 0.5 * wi).collect(),
        degree,
    })
}

/// Collapsed product rule on the reference triangle exact up to `degree`.
///
/// Uses `x = u`, `y = (1 - u) v` with Gauss-Legendre in both directions;
/// the Jacobian factor `1 - u` raises the degree in `u` by one.
pub fn quadrature_triangle(degree: usize) -> Result<TriangleRule> {
    if degree > MAX_DEGREE {
        return Err(Error::QuadratureDegree { degree, max: MAX_DEGREE });
    }
    let nu = degree.div_ceil(2) + 1;
    let nv = degree / 2 + 1;
    let (xu, wu) = gauss_legendre(nu);
    let (xv, wv) = gauss_legendre(nv);
    let mut points = Vec::with_capacity(nu * nv);
    let mut weights = Vec::with_capacity(nu * nv);
    for (zu, au) in xu.iter().zip(&wu) {
        let u = 0.5 * (zu + 1.0);
        for (zv, av) in xv.iter().zip(&wv) {
            let v = 0.5 * (zv + 1.0);
            points.push([u, (1.0 - u) * v]);
            weights.push(0.25 * au * av * (1.0 - u));
        }
    }
    Ok(TriangleRule { points, weights, degree })
}
