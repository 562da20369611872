//! Oracles shared by the integration and acceptance targets.
#![allow(dead_code)]

use std::collections::BTreeSet;

use magfrac::constitutive::{cauchy_stress, energy_total, magnetization, Sym2};
use magfrac::elasticity::{DisplacementBc, ElasticProblem, NewtonConfig};
use magfrac::fem::QpField;
use magfrac::material::MaterialSet;
use magfrac::mesh::Mesh;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BODY: [f64; 2] = [0.02, -0.05];
pub const PULL: f64 = 0.01;

pub fn edge_nodes(mesh: &Mesh, x: f64) -> BTreeSet<usize> {
    (0..mesh.num_nodes()).filter(|&n| (mesh.nodes()[n][0] - x).abs() < 1e-12).collect()
}

/// Dense P1 plane-strain solve with Gaussian elimination on the full
/// system; Dirichlet rows are replaced by identities.
pub fn hooke_reference(mesh: &Mesh, e: f64, nu: f64, fixed: &[(usize, f64)]) -> Vec<f64> {
    let lam = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    let d = [[lam + 2.0 * mu, lam, 0.0], [lam, lam + 2.0 * mu, 0.0], [0.0, 0.0, mu]];
    let n = 2 * mesh.num_nodes();
    let mut k = vec![vec![0.0; n]; n];
    let mut f = vec![0.0; n];
    for c in 0..mesh.num_cells() {
        let v = mesh.vertices(c);
        let det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
        let area = 0.5 * det;
        let bx = [v[1][1] - v[2][1], v[2][1] - v[0][1], v[0][1] - v[1][1]].map(|x| x / det);
        let by = [v[2][0] - v[1][0], v[0][0] - v[2][0], v[1][0] - v[0][0]].map(|x| x / det);
        // Strain-displacement matrix with engineering shear.
        let mut bm = [[0.0; 6]; 3];
        for a in 0..3 {
            bm[0][2 * a] = bx[a];
            bm[1][2 * a + 1] = by[a];
            bm[2][2 * a] = by[a];
            bm[2][2 * a + 1] = bx[a];
        }
        let nodes = mesh.cell(c);
        for i in 0..6 {
            for j in 0..6 {
                let mut s = 0.0;
                for p in 0..3 {
                    for q in 0..3 {
                        s += bm[p][i] * d[p][q] * bm[q][j];
                    }
                }
                k[2 * nodes[i / 2] + i % 2][2 * nodes[j / 2] + j % 2] += s * area;
            }
            f[2 * nodes[i / 2] + i % 2] += BODY[i % 2] * area / 3.0;
        }
    }
    for &(dof, val) in fixed {
        k[dof].iter_mut().for_each(|x| *x = 0.0);
        k[dof][dof] = 1.0;
        f[dof] = val;
    }
    gauss(k, f)
}

pub fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let m = a[r][col] / a[col][col];
            if m != 0.0 {
                for c in col..n {
                    a[r][c] -= m * a[col][c];
                }
                b[r] -= m * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

pub fn compare_with_hooke(mesh: &Mesh) -> f64 {
    let mat = MaterialSet::example12();
    let xmax = mesh.nodes().iter().map(|p| p[0]).fold(f64::MIN, f64::max);
    let left = edge_nodes(mesh, 0.0);
    let right = edge_nodes(mesh, xmax);
    let bc = |nodes: &BTreeSet<usize>, comp, value| DisplacementBc {
        nodes: nodes.clone(),
        comp,
        value,
        slope: 0.0,
    };
    let bcs = vec![bc(&left, 0, 0.0), bc(&left, 1, 0.0), bc(&right, 0, PULL)];
    let mut p = ElasticProblem::new(mesh, mat.clone(), bcs).unwrap();
    p.body_force = BODY;
    p.newton = NewtonConfig {
        rtol: 1e-13,
        atol: 1e-15,
        ..NewtonConfig::default()
    };
    p.set_time(0.0);
    let b = QpField::<[f64; 2]>::zeros(mesh.num_cells(), p.rule().len());
    let (u, _) = p.solve(&b, None, &p.zeros()).unwrap();

    let mut fixed: Vec<(usize, f64)> = left.iter().flat_map(|&n| [(2 * n, 0.0), (2 * n + 1, 0.0)]).collect();
    fixed.extend(right.iter().map(|&n| (2 * n, PULL)));
    let reference = hooke_reference(mesh, mat.young, mat.poisson, &fixed);

    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for node in 0..mesh.num_nodes() {
        for comp in 0..2 {
            let got = u[p.dofmap().dof(node, comp).unwrap()];
            err = err.max((got - reference[2 * node + comp]).abs());
            scale = scale.max(reference[2 * node + comp].abs());
        }
    }
    err / scale
}

/// Worst relative mismatch over `n` random states between the analytic
/// stress and magnetisation and central differences of the energy.
/// States within `1e-6` of the tension/compression switch are redrawn,
/// since the energy is only once differentiable there.
pub fn constitutive_fd_mismatch(n: usize, seed: u64) -> (f64, f64) {
    let mat = MaterialSet::example12();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_s, mut worst_m): (f64, f64) = (0.0, 0.0);
    let mut done = 0;
    while done < n {
        let e = Sym2::new(
            rng.gen_range(-1e-3..1e-3),
            rng.gen_range(-1e-3..1e-3),
            rng.gen_range(-1e-3..1e-3),
        );
        if e.trace().abs() < 1e-6 {
            continue;
        }
        let bmag = 0.1 * mat.b_ref * rng.gen::<f64>();
        let th = rng.gen_range(0.0..std::f64::consts::TAU);
        let b = [bmag * th.cos(), bmag * th.sin()];
        let d: f64 = rng.gen();
        let w = |e: &Sym2, b: [f64; 2]| energy_total(e, b, d, [0.0; 2], &mat).unwrap().total();

        let s = cauchy_stress(&e, b, d, &mat).unwrap();
        let he = 1e-8;
        let fd_e = |k: usize| {
            let (p, m) = (e.with(k, e.get(k) + he), e.with(k, e.get(k) - he));
            (w(&p, b) - w(&m, b)) / (2.0 * he)
        };
        // The shear component enters the energy twice.
        let fd_s = [fd_e(0), fd_e(1), 0.5 * fd_e(2)];
        let an_s = [s.xx, s.yy, s.xy];
        worst_s = worst_s.max(rel(&an_s, &fd_s));

        let m = magnetization(&e, b, &mat).unwrap();
        let hb = 1e-6 * bmag.max(1.0);
        let fd_b = |k: usize| {
            let (mut p, mut q) = (b, b);
            p[k] += hb;
            q[k] -= hb;
            -(w(&e, p) - w(&e, q)) / (2.0 * hb)
        };
        worst_m = worst_m.max(rel(&m, &[fd_b(0), fd_b(1)]));
        done += 1;
    }
    (worst_s, worst_m)
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}
