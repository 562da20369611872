//! P1 and P2 Lagrange shape functions on straight-sided triangles.
//!
//! Local node order is v0, v1, v2 followed by the midsides of edges
//! (0,1), (1,2), (2,0). Everything is written in barycentric coordinates,
//! whose gradients are constant on an affine cell.

use crate::mesh::{Mesh, Point};

use super::quadrature::QuadratureRule;

/// Shape function data at one quadrature point of one cell.
#[derive(Debug, Clone, Copy)]
pub struct QpValues {
    pub x: Point,
    /// Quadrature weight times the Jacobian determinant.
    pub jxw: f64,
    pub n: usize,
    pub val: [f64; 6],
    pub grad: [[f64; 2]; 6],
}

impl QpValues {
    pub fn values(&self) -> &[f64] {
        &self.val[..self.n]
    }

    pub fn grads(&self) -> &[[f64; 2]] {
        &self.grad[..self.n]
    }

    /// Interpolates a scalar from local nodal values.
    pub fn eval(&self, local: &[f64]) -> f64 {
        self.values().iter().zip(local).map(|(n, u)| n * u).sum()
    }

    pub fn eval_grad(&self, local: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (dn, u) in self.grads().iter().zip(local) {
            g[0] += dn[0] * u;
            g[1] += dn[1] * u;
        }
        g
    }
}

/// Shape data for all quadrature points of a cell.
#[derive(Debug, Clone)]
pub struct CellValues {
    pub area: f64,
    pub qps: Vec<QpValues>,
}

impl CellValues {
    pub fn new(mesh: &Mesh, cell: usize, rule: &QuadratureRule) -> Self {
        let v = mesh.vertices(cell);
        let (area, gl) = barycentric_gradients(&v);
        let qps = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(l, w)| {
                let x = [
                    l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
                    l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
                ];
                let (n, val, grad) = shape(mesh.order(), l, &gl);
                QpValues {
                    x,
                    jxw: 2.0 * area * w,
                    n,
                    val,
                    grad,
                }
            })
            .collect();
        Self { area, qps }
    }
}

/// Signed area and the (constant) gradients of the barycentric coordinates.
pub fn barycentric_gradients(v: &[Point; 3]) -> (f64, [[f64; 2]; 3]) {
    let area = crate::mesh::signed_area(&v[0], &v[1], &v[2]);
    let inv = 1.0 / (2.0 * area);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let a = v[(i + 1) % 3];
        let b = v[(i + 2) % 3];
        g[i] = [(a[1] - b[1]) * inv, (b[0] - a[0]) * inv];
    }
    (area, g)
}

/// Shape function values and physical gradients at barycentric point `l`.
pub fn shape(order: usize, l: &[f64; 3], gl: &[[f64; 2]; 3]) -> (usize, [f64; 6], [[f64; 2]; 6]) {
    let mut val = [0.0; 6];
    let mut grad = [[0.0; 2]; 6];
    match order {
        1 => {
            val[..3].copy_from_slice(l);
            grad[..3].copy_from_slice(gl);
            (3, val, grad)
        }
        2 => {
            for i in 0..3 {
                val[i] = l[i] * (2.0 * l[i] - 1.0);
                let s = 4.0 * l[i] - 1.0;
                grad[i] = [s * gl[i][0], s * gl[i][1]];
            }
            for k in 0..3 {
                let (i, j) = (k, (k + 1) % 3);
                val[3 + k] = 4.0 * l[i] * l[j];
                grad[3 + k] = [
                    4.0 * (l[j] * gl[i][0] + l[i] * gl[j][0]),
                    4.0 * (l[j] * gl[i][1] + l[i] * gl[j][1]),
                ];
            }
            (6, val, grad)
        }
        _ => panic!("unsupported element order {order}"),
    }
}

/// Barycentric coordinates of the local nodes.
pub fn node_barycentrics(order: usize) -> Vec<[f64; 3]> {
    let mut out = vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    if order == 2 {
        out.extend([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]);
    }
    out
}
