//! Interpolation and error norms for scalar fields.

use super::dofmap::DofMap;
use super::element::CellValues;
use super::quadrature::QuadratureRule;
use crate::mesh::{Mesh, Point};

/// Nodal interpolant of `f` for a scalar dof map.
pub fn interpolate(mesh: &Mesh, dofmap: &DofMap, f: impl Fn(Point) -> f64) -> Vec<f64> {
    assert_eq!(dofmap.ncomp(), 1);
    (0..dofmap.ndofs())
        .map(|d| f(mesh.nodes()[dofmap.node_of(d)]))
        .collect()
}

/// `sqrt(∫ (u_h − exact)²)` over the cells of `dofmap`, with a degree-4
/// rule (at least twice the element order).
pub fn l2_error(mesh: &Mesh, dofmap: &DofMap, field: &[f64], exact: impl Fn(Point) -> f64) -> f64 {
    let rule = QuadratureRule::new(4).expect("degree-4 rule");
    let mut sum = 0.0;
    for &c in dofmap.cells() {
        let cv = CellValues::new(mesh, c, &rule);
        let local: Vec<f64> = dofmap.cell_dofs(mesh, c).iter().map(|&d| field[d]).collect();
        for qp in &cv.qps {
            let e = qp.eval(&local) - exact(qp.x);
            sum += e * e * qp.jxw;
        }
    }
    sum.sqrt()
}

/// `sqrt(∫ |∇u_h − ∇exact|²)`.
pub fn h1_seminorm_error(
    mesh: &Mesh,
    dofmap: &DofMap,
    field: &[f64],
    exact_grad: impl Fn(Point) -> [f64; 2],
) -> f64 {
    let rule = QuadratureRule::new(4).expect("degree-4 rule");
    let mut sum = 0.0;
    for &c in dofmap.cells() {
        let cv = CellValues::new(mesh, c, &rule);
        let local: Vec<f64> = dofmap.cell_dofs(mesh, c).iter().map(|&d| field[d]).collect();
        for qp in &cv.qps {
            let g = qp.eval_grad(&local);
            let ge = exact_grad(qp.x);
            sum += ((g[0] - ge[0]).powi(2) + (g[1] - ge[1]).powi(2)) * qp.jxw;
        }
    }
    sum.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{rectangle, CellTag};
    use std::f64::consts::PI;

    #[test]
    fn linear_interpolant_is_exact() {
        let mesh = rectangle([0.0, 0.0], [1.0, 1.0], 4, 4, CellTag::Solid);
        let map = DofMap::new(&mesh, 1);
        let f = |p: Point| 2.0 * p[0] - 3.0 * p[1] + 0.5;
        let u = interpolate(&mesh, &map, f);
        assert!(l2_error(&mesh, &map, &u, f) <= 1e-13);
    }

    #[test]
    fn zero_field_against_one() {
        let mesh = rectangle([0.0, 0.0], [1.0, 1.0], 3, 3, CellTag::Solid);
        let map = DofMap::new(&mesh, 1);
        let u = vec![0.0; map.ndofs()];
        assert!((l2_error(&mesh, &map, &u, |_| 1.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn p1_interpolation_error_quarters() {
        let f = |p: Point| (PI * p[0]).sin() * (PI * p[1]).sin();
        let err = |n: usize| {
            let mesh = rectangle([0.0, 0.0], [1.0, 1.0], n, n, CellTag::Solid);
            let map = DofMap::new(&mesh, 1);
            let u = interpolate(&mesh, &map, f);
            l2_error(&mesh, &map, &u, f)
        };
        let ratio = err(16) / err(32);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }
}
