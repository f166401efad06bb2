//! Nodal Lagrange bases on equispaced reference nodes.

use nalgebra::DMatrix;

/// Dimension of `P_k` in two variables.
pub fn dim_p(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Lagrange basis of `P_k` on the reference triangle.
///
/// Node order: the three vertices, then `k - 1` nodes on each edge (edge
/// `e` is opposite vertex `e`), then interior nodes. For `k = 0` the single
/// node is the centroid.
#[derive(Clone, Debug)]
pub struct ReferenceBasis {
    pub degree: usize,
    pub nodes: Vec<[f64; 2]>,
    exponents: Vec<(i32, i32)>,
    /// Row `i` holds the monomial coefficients of basis function `i`.
    coeffs: DMatrix<f64>,
}

impl ReferenceBasis {
    pub fn new(degree: usize) -> Self {
        let nodes = triangle_nodes(degree);
        let exponents: Vec<(i32, i32)> = (0..=degree as i32).flat_map(|s| (0..=s).map(move |b| (s - b, b))).collect();
        let n = nodes.len();
        let vander = DMatrix::from_fn(n, n, |i, j| {
            let (a, b) = exponents[j];
            nodes[i][0].powi(a) * nodes[i][1].powi(b)
        });
        // V c_i = e_i  =>  coefficients are the columns of V^{-1}
        let inv = vander.try_inverse().expect("unisolvent node set");
        Self { degree, nodes, exponents, coeffs: inv.transpose() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Basis values at a reference point.
    pub fn values_into(&self, xi: [f64; 2], out: &mut [f64]) {
        let mono: Vec<f64> = self.exponents.iter().map(|&(a, b)| xi[0].powi(a) * xi[1].powi(b)).collect();
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..mono.len()).map(|j| self.coeffs[(i, j)] * mono[j]).sum();
        }
    }

    pub fn values(&self, xi: [f64; 2]) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        self.values_into(xi, &mut v);
        v
    }

    /// Basis values and reference gradients at a reference point.
    pub fn eval(&self, xi: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let n = self.len();
        let (x, y) = (xi[0], xi[1]);
        let pw = |t: f64, e: i32| if e < 0 { 0.0 } else { t.powi(e) };
        let mut mono = Vec::with_capacity(n);
        let mut dx = Vec::with_capacity(n);
        let mut dy = Vec::with_capacity(n);
        for &(a, b) in &self.exponents {
            mono.push(pw(x, a) * pw(y, b));
            dx.push(if a > 0 { a as f64 * pw(x, a - 1) * pw(y, b) } else { 0.0 });
            dy.push(if b > 0 { b as f64 * pw(x, a) * pw(y, b - 1) } else { 0.0 });
        }
        let mut values = vec![0.0; n];
        let mut grads = vec![[0.0; 2]; n];
        for i in 0..n {
            for j in 0..n {
                let c = self.coeffs[(i, j)];
                values[i] += c * mono[j];
                grads[i][0] += c * dx[j];
                grads[i][1] += c * dy[j];
            }
        }
        (values, grads)
    }
}

fn triangle_nodes(k: usize) -> Vec<[f64; 2]> {
    if k == 0 {
        return vec![[1.0 / 3.0, 1.0 / 3.0]];
    }
    let kf = k as f64;
    let verts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let mut nodes = verts.to_vec();
    for e in 0..3 {
        let a = verts[(e + 1) % 3];
        let b = verts[(e + 2) % 3];
        for j in 1..k {
            let t = j as f64 / kf;
            nodes.push([a[0] * (1.0 - t) + b[0] * t, a[1] * (1.0 - t) + b[1] * t]);
        }
    }
    for j in 1..k {
        for i in 1..k - j {
            nodes.push([i as f64 / kf, j as f64 / kf]);
        }
    }
    nodes
}

/// Lagrange basis of `P_k` on `[0, 1]`.
///
/// Node order: `t = 0`, `t = 1`, then interior nodes `j / k` ascending.
/// For `k = 0` the single node is `t = 1/2`.
#[derive(Clone, Debug)]
pub struct SegmentBasis {
    pub degree: usize,
    pub nodes: Vec<f64>,
}

impl SegmentBasis {
    pub fn new(degree: usize) -> Self {
        let nodes = if degree == 0 {
            vec![0.5]
        } else {
            let mut n = vec![0.0, 1.0];
            n.extend((1..degree).map(|j| j as f64 / degree as f64));
            n
        };
        Self { degree, nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn values_into(&self, t: f64, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let ti = self.nodes[i];
            *o = self.nodes.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &tj)| (t - tj) / (ti - tj)).product();
        }
    }

    pub fn values(&self, t: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        self.values_into(t, &mut v);
        v
    }

    /// Derivatives with respect to `t`.
    pub fn derivatives(&self, t: f64) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let ti = self.nodes[i];
                let mut s = 0.0;
                for m in 0..n {
                    if m == i {
                        continue;
                    }
                    let mut p = 1.0 / (ti - self.nodes[m]);
                    for j in 0..n {
                        if j != i && j != m {
                            p *= (t - self.nodes[j]) / (ti - self.nodes[j]);
                        }
                    }
                    s += p;
                }
                s
            })
            .collect()
    }
}
