//! Magneto-mechanical constitutive law at a material point.
//!
//! State variables are the in-plane small strain `ε` (plane strain,
//! `ε_zz = 0`), the in-plane flux density `B` and the phase field `d`.
//! The energy density is
//!
//! ```text
//! W = g_e(d) ψ⁺ + ψ⁻ + W_mag(I1, I4) + W_mos(I5, I6)
//! ```
//!
//! with a volumetric/deviatoric tension-compression split of the elastic
//! energy. Stress is `∂W/∂ε`, magnetisation is `−∂W/∂B`; both are checked
//! against finite differences of [`energy_total`] in the tests.
//!
//! Conventions worth knowing:
//! - `ψ_dev = μ (I2 − I1²/3) = μ |ε_dev|²`, which is non-negative and whose
//!   derivative is `2μ ε_dev`.
//! - The coefficient `g_0` uses the permeability of the undamaged solid.
//! - The `B ⊗ M` part of the electromagnetic stress is symmetrised.

use thiserror::Error;

use crate::fracture::{surface_density, Variant};
use crate::material::{DomainError, MaterialSet};

/// Largest admissible argument of the exponentials in `g_i`.
pub const EXP_GUARD: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ConstitutiveError {
    #[error("exponential overflow guard hit (I1 = {i1:e})")]
    Overflow { i1: f64 },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Symmetric in-plane tensor `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl Sym2 {
    pub const fn new(xx: f64, yy: f64, xy: f64) -> Self {
        Self { xx, yy, xy }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn dot(&self, v: [f64; 2]) -> [f64; 2] {
        [self.xx * v[0] + self.xy * v[1], self.xy * v[0] + self.yy * v[1]]
    }

    /// `ε · ε`.
    pub fn square(&self) -> Sym2 {
        Sym2 {
            xx: self.xx * self.xx + self.xy * self.xy,
            yy: self.yy * self.yy + self.xy * self.xy,
            xy: self.xy * (self.xx + self.yy),
        }
    }

    pub fn ddot(&self, o: &Sym2) -> f64 {
        self.xx * o.xx + self.yy * o.yy + 2.0 * self.xy * o.xy
    }

    pub fn norm(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    /// Component by index 0 = xx, 1 = yy, 2 = xy.
    pub fn get(&self, k: usize) -> f64 {
        [self.xx, self.yy, self.xy][k]
    }

    pub fn with(&self, k: usize, v: f64) -> Sym2 {
        let mut s = *self;
        match k {
            0 => s.xx = v,
            1 => s.yy = v,
            _ => s.xy = v,
        }
        s
    }
}

/// Plane tensor with its out-of-plane normal component (xz = yz = 0).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlaneTensor {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
    pub zz: f64,
}

impl PlaneTensor {
    pub fn in_plane(&self) -> Sym2 {
        Sym2::new(self.xx, self.yy, self.xy)
    }

    fn add(self, o: PlaneTensor) -> PlaneTensor {
        PlaneTensor {
            xx: self.xx + o.xx,
            yy: self.yy + o.yy,
            xy: self.xy + o.xy,
            zz: self.zz + o.zz,
        }
    }

    fn scale(self, s: f64) -> PlaneTensor {
        PlaneTensor {
            xx: s * self.xx,
            yy: s * self.yy,
            xy: s * self.xy,
            zz: s * self.zz,
        }
    }

    fn iso(s: f64) -> PlaneTensor {
        PlaneTensor {
            xx: s,
            yy: s,
            xy: 0.0,
            zz: s,
        }
    }

    fn outer_sym(a: [f64; 2], b: [f64; 2]) -> PlaneTensor {
        PlaneTensor {
            xx: a[0] * b[0],
            yy: a[1] * b[1],
            xy: 0.5 * (a[0] * b[1] + a[1] * b[0]),
            zz: 0.0,
        }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    pub fn von_mises(&self) -> f64 {
        let (a, b, c) = (self.xx - self.yy, self.yy - self.zz, self.zz - self.xx);
        (0.5 * (a * a + b * b + c * c) + 3.0 * self.xy * self.xy).sqrt()
    }
}

/// `I1 = tr ε`, `I2 = tr ε²` (3D sense, `ε_zz = 0`).
pub fn invariants(e: &Sym2) -> (f64, f64) {
    (e.trace(), e.ddot(e))
}

/// Volumetric and deviatoric parts, `ε_vol = (I1/3) I` with the 3D
/// identity.
pub fn split_strain(e: &Sym2) -> (PlaneTensor, PlaneTensor) {
    let v = e.trace() / 3.0;
    let vol = PlaneTensor::iso(v);
    let dev = PlaneTensor {
        xx: e.xx - v,
        yy: e.yy - v,
        xy: e.xy,
        zz: -v,
    };
    (vol, dev)
}

fn heaviside(i1: f64) -> f64 {
    if i1 > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Tension and compression parts `(ψ⁺, ψ⁻)` of the elastic energy.
pub fn psi_elastic(e: &Sym2, mat: &MaterialSet) -> (f64, f64) {
    let (i1, i2) = invariants(e);
    let vol = 0.5 * mat.bulk() * i1 * i1;
    let dev = mat.shear() * (i2 - i1 * i1 / 3.0);
    let h = heaviside(i1);
    (h * vol + dev, (1.0 - h) * vol)
}

/// Coefficients `g_0..g_4` of the magnetisation energy and their
/// derivatives with respect to `I1`.
pub fn g_coefficients(i1: f64, mat: &MaterialSet) -> Result<([f64; 5], [f64; 5]), ConstitutiveError> {
    if 20.0 / 3.0 * i1 > EXP_GUARD {
        return Err(ConstitutiveError::Overflow { i1 });
    }
    let a = &mat.alpha;
    let mut g = [0.0; 5];
    let mut dg = [0.0; 5];
    let e0 = (0.75 * i1).exp();
    g[0] = 0.75 * a[0] * e0 - (1.0 / mat.solid.mu0 - a[5]) / 3.0;
    dg[0] = 0.5625 * a[0] * e0;
    for i in 1..5 {
        let k = (i + 1) as f64;
        let ex = (4.0 * k / 3.0 * i1).exp();
        g[i] = 0.75 * k * a[i] * ex;
        dg[i] = k * k * a[i] * ex;
    }
    Ok((g, dg))
}

/// Energy densities at a material point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    pub w_elas: f64,
    pub w_mag: f64,
    pub w_mos: f64,
    pub w_frac: f64,
    pub psi_plus: f64,
    pub psi_minus: f64,
    pub h_plus: bool,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.w_elas + self.w_mag + self.w_mos + self.w_frac
    }
}

/// `I4 = B·B`, `I5 = B·ε·B`, `I6 = B·ε²·B`.
pub fn magnetic_invariants(e: &Sym2, b: [f64; 2]) -> (f64, f64, f64) {
    let eb = e.dot(b);
    let i4 = b[0] * b[0] + b[1] * b[1];
    let i5 = b[0] * eb[0] + b[1] * eb[1];
    let i6 = eb[0] * eb[0] + eb[1] * eb[1];
    (i4, i5, i6)
}

/// `W_mag = ½ Σ g_i/(i+1) (I4/B_ref²)^i I4`.
pub fn w_mag(i1: f64, i4: f64, mat: &MaterialSet) -> Result<f64, ConstitutiveError> {
    let (g, _) = g_coefficients(i1, mat)?;
    let r = i4 / (mat.b_ref * mat.b_ref);
    let mut sum = 0.0;
    let mut p = 1.0;
    for (i, gi) in g.iter().enumerate() {
        sum += gi / (i + 1) as f64 * p * i4;
        p *= r;
    }
    Ok(0.5 * sum)
}

/// Energy breakdown; the fracture part uses the AT2 surface density with
/// `∇d = grad_d`.
pub fn energy_total(
    e: &Sym2,
    b: [f64; 2],
    d: f64,
    grad_d: [f64; 2],
    mat: &MaterialSet,
) -> Result<EnergyBreakdown, ConstitutiveError> {
    let ge = mat.rule.g_elastic(d)?;
    let (pp, pm) = psi_elastic(e, mat);
    let (i4, i5, i6) = magnetic_invariants(e, b);
    let gamma = surface_density(d.clamp(0.0, 1.0), grad_d, mat.l_d, Variant::At2);
    Ok(EnergyBreakdown {
        w_elas: ge * pp + pm,
        w_mag: w_mag(e.trace(), i4, mat)?,
        w_mos: 0.5 * mat.alpha[5] * i5 + 0.5 * mat.alpha[6] * i6,
        w_frac: mat.g_c * gamma,
        psi_plus: pp,
        psi_minus: pm,
        h_plus: e.trace() > 0.0,
    })
}

/// Undegraded tension and compression stresses `(σ̃⁺, σ̃⁻)`.
pub fn effective_stresses(e: &Sym2, mat: &MaterialSet) -> (PlaneTensor, PlaneTensor) {
    let i1 = e.trace();
    let h = heaviside(i1);
    let (_, dev) = split_strain(e);
    let k = mat.bulk();
    let plus = PlaneTensor::iso(k * h * i1).add(dev.scale(2.0 * mat.shear()));
    let minus = PlaneTensor::iso(k * (1.0 - h) * i1);
    (plus, minus)
}

fn elastic_stress(e: &Sym2, d: f64, mat: &MaterialSet) -> Result<PlaneTensor, ConstitutiveError> {
    let ge = mat.rule.g_elastic(d)?;
    let (plus, minus) = effective_stresses(e, mat);
    Ok(plus.scale(ge).add(minus))
}

/// Magnetisation and magnetostriction terms of `∂W/∂ε`.
fn magnetic_cauchy(e: &Sym2, b: [f64; 2], mat: &MaterialSet) -> Result<PlaneTensor, ConstitutiveError> {
    let (i4, _, _) = magnetic_invariants(e, b);
    if i4 == 0.0 {
        return Ok(PlaneTensor::default());
    }
    let (_, dg) = g_coefficients(e.trace(), mat)?;
    let r = i4 / (mat.b_ref * mat.b_ref);
    let mut p = 1.0;
    let mut m = 0.0;
    for (i, dgi) in dg.iter().enumerate() {
        m += dgi / (i + 1) as f64 * p * i4;
        p *= r;
    }
    Ok(PlaneTensor::iso(0.5 * m)
        .add(PlaneTensor::outer_sym(b, b).scale(0.5 * mat.alpha[5]))
        // ½ α6 (B⊗B·ε + ε·B⊗B) = α6 sym(B ⊗ εB)
        .add(PlaneTensor::outer_sym(b, e.dot(b)).scale(mat.alpha[6])))
}

/// Cauchy stress `∂W/∂ε` (elastic, magnetisation and magnetostriction
/// terms).
pub fn cauchy_stress(e: &Sym2, b: [f64; 2], d: f64, mat: &MaterialSet) -> Result<PlaneTensor, ConstitutiveError> {
    Ok(elastic_stress(e, d, mat)?.add(magnetic_cauchy(e, b, mat)?))
}

/// `Σ g_i (I4/B_ref²)^i`, the factor of `B` in `∂W_mag/∂B`.
fn mag_factor(i1: f64, i4: f64, mat: &MaterialSet) -> Result<f64, ConstitutiveError> {
    let (g, _) = g_coefficients(i1, mat)?;
    let r = i4 / (mat.b_ref * mat.b_ref);
    let mut p = 1.0;
    let mut c = 0.0;
    for gi in g {
        c += gi * p;
        p *= r;
    }
    Ok(c)
}

/// Magnetisation `M = −∂W/∂B = −Σ g_i (I4/B_ref²)^i B − α5 ε·B − α6 ε²·B`.
pub fn magnetization(e: &Sym2, b: [f64; 2], mat: &MaterialSet) -> Result<[f64; 2], ConstitutiveError> {
    let (i4, _, _) = magnetic_invariants(e, b);
    let c = mag_factor(e.trace(), i4, mat)?;
    let eb = e.dot(b);
    let e2b = e.dot(eb);
    Ok([
        -c * b[0] - mat.alpha[5] * eb[0] - mat.alpha[6] * e2b[0],
        -c * b[1] - mat.alpha[5] * eb[1] - mat.alpha[6] * e2b[1],
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmRegion {
    Solid,
    Vacuum,
}

/// Electromagnetic stress
/// `(E_M/μ0)(B⊗B − ½|B|² I) + (M·B) I − sym(B⊗M)`; only the first term in
/// vacuum.
pub fn em_stress(b: [f64; 2], m: [f64; 2], mu0: f64, e_m: f64, region: EmRegion) -> PlaneTensor {
    let i4 = b[0] * b[0] + b[1] * b[1];
    let mut t = PlaneTensor::outer_sym(b, b)
        .add(PlaneTensor::iso(-0.5 * i4))
        .scale(e_m / mu0);
    if region == EmRegion::Solid {
        let mb = m[0] * b[0] + m[1] * b[1];
        t = t
            .add(PlaneTensor::iso(mb))
            .add(PlaneTensor::outer_sym(b, m).scale(-1.0));
    }
    t
}

/// Every term of the total stress that involves `B`.
fn coupling_stress(e: &Sym2, b: [f64; 2], d: f64, mat: &MaterialSet) -> Result<PlaneTensor, ConstitutiveError> {
    if b == [0.0, 0.0] {
        return Ok(PlaneTensor::default());
    }
    let m = magnetization(e, b, mat)?;
    let mu0 = mat.interp_constants(d)?.mu0;
    Ok(magnetic_cauchy(e, b, mat)?.add(em_stress(b, m, mu0, mat.e_m, EmRegion::Solid)))
}

/// Total stress `σ + τ_m` in the solid.
pub fn total_stress(e: &Sym2, b: [f64; 2], d: f64, mat: &MaterialSet) -> Result<PlaneTensor, ConstitutiveError> {
    Ok(elastic_stress(e, d, mat)?.add(coupling_stress(e, b, d, mat)?))
}

/// Magnetic field
/// `H = B/μ0(d) − 2 Σ g_i (I4/B_ref²)^i B − ½ (α5 ε·B + α6 ε²·B)`.
pub fn h_field(e: &Sym2, b: [f64; 2], d: f64, mat: &MaterialSet) -> Result<[f64; 2], ConstitutiveError> {
    let mu0 = mat.interp_constants(d)?.mu0;
    let (i4, _, _) = magnetic_invariants(e, b);
    let c = mag_factor(e.trace(), i4, mat)?;
    let eb = e.dot(b);
    let e2b = e.dot(eb);
    Ok([
        b[0] / mu0 - 2.0 * c * b[0] - 0.5 * (mat.alpha[5] * eb[0] + mat.alpha[6] * e2b[0]),
        b[1] / mu0 - 2.0 * c * b[1] - 0.5 * (mat.alpha[5] * eb[1] + mat.alpha[6] * e2b[1]),
    ])
}

/// Tangent `∂τ/∂ε` of the total stress; row `k` holds the in-plane stress
/// response to a perturbation of strain component `k` (xx, yy, xy).
/// Columns are (xx, yy, xy).
///
/// The elastic part is exact (one-sided at `I1 = 0`, following the
/// Heaviside convention); the field-dependent part uses central
/// differences. Keeping them apart matters in cracked zones, where the
/// degraded stiffness is far below the rounding error of a difference
/// quotient of the full stress.
pub fn total_stress_tangent(
    e: &Sym2,
    b: [f64; 2],
    d: f64,
    mat: &MaterialSet,
) -> Result<[[f64; 3]; 3], ConstitutiveError> {
    let ge = mat.rule.g_elastic(d)?;
    let h_plus = heaviside(e.trace());
    let kv = mat.bulk() * (ge * h_plus + 1.0 - h_plus);
    let mu = ge * mat.shear();
    let mut t = [
        [kv + 4.0 * mu / 3.0, kv - 2.0 * mu / 3.0, 0.0],
        [kv - 2.0 * mu / 3.0, kv + 4.0 * mu / 3.0, 0.0],
        [0.0, 0.0, 2.0 * mu],
    ];
    if b == [0.0, 0.0] {
        return Ok(t);
    }
    let scale = e.norm().max(1e-3);
    let h = 1e-6 * scale;
    for (k, row) in t.iter_mut().enumerate() {
        let sp = coupling_stress(&e.with(k, e.get(k) + h), b, d, mat)?.in_plane();
        let sm = coupling_stress(&e.with(k, e.get(k) - h), b, d, mat)?.in_plane();
        for (j, x) in row.iter_mut().enumerate() {
            *x += (sp.get(j) - sm.get(j)) / (2.0 * h);
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat() -> MaterialSet {
        MaterialSet::example12()
    }

    fn rel(a: f64, b: f64, floor: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(floor)
    }

    #[test]
    fn split_examples() {
        let (vol, dev) = split_strain(&Sym2::new(2.0, -2.0, 0.0));
        assert_eq!(vol, PlaneTensor::default());
        assert_eq!(dev.in_plane(), Sym2::new(2.0, -2.0, 0.0));
        let (vol, _) = split_strain(&Sym2::new(1.0, 1.0, 0.0));
        assert!((vol.xx - 2.0 / 3.0).abs() < 1e-15 && (vol.zz - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn psi_examples() {
        let m = mat();
        assert_eq!(psi_elastic(&Sym2::default(), &m), (0.0, 0.0));
        let e = Sym2::new(-1e-3, -1e-3, 0.0);
        let (pp, pm) = psi_elastic(&e, &m);
        let (i1, i2) = invariants(&e);
        assert!((pm - 0.5 * m.bulk() * i1 * i1).abs() < 1e-18);
        assert!((pp - m.shear() * (i2 - i1 * i1 / 3.0)).abs() < 1e-18);
    }

    #[test]
    fn g_at_zero_strain() {
        let m = mat();
        let (g, _) = g_coefficients(0.0, &m).unwrap();
        assert!((g[1] - 3e-6).abs() < 1e-20);
        let g0 = 0.75 * 2e-6 - (0.001 - 2.5) / 3.0;
        assert!((g[0] - g0).abs() < 1e-15);
    }

    #[test]
    fn g_derivatives_match_fd() {
        let m = mat();
        for &i1 in &[-0.3, -1e-3, 0.0, 2e-3, 0.4] {
            let (_, dg) = g_coefficients(i1, &m).unwrap();
            let h = 1e-4;
            let (gp, _) = g_coefficients(i1 + h, &m).unwrap();
            let (gm, _) = g_coefficients(i1 - h, &m).unwrap();
            for i in 0..5 {
                // g_0 carries an O(1) constant, so its difference loses digits
                let fd = (gp[i] - gm[i]) / (2.0 * h);
                assert!((fd - dg[i]).abs() < 1e-6 * dg[i].abs() + 1e-10, "g_{i}' at {i1}");
            }
        }
    }

    #[test]
    fn overflow_guard() {
        assert!(matches!(
            g_coefficients(31.0, &mat()),
            Err(ConstitutiveError::Overflow { .. })
        ));
        assert!(g_coefficients(29.0, &mat()).is_ok());
    }

    #[test]
    fn zero_field_energies() {
        let m = mat();
        let e = Sym2::new(1e-3, -2e-4, 3e-4);
        let w = energy_total(&e, [0.0, 0.0], 0.0, [0.0, 0.0], &m).unwrap();
        assert_eq!((w.w_mag, w.w_mos), (0.0, 0.0));
        let w = energy_total(&Sym2::default(), [0.3, 0.0], 0.0, [0.0, 0.0], &m).unwrap();
        assert_eq!(w.w_mos, 0.0);
    }

    #[test]
    fn stress_vanishes_without_strain_and_field() {
        let s = total_stress(&Sym2::default(), [0.0, 0.0], 0.0, &mat()).unwrap();
        assert_eq!(s, PlaneTensor::default());
    }

    #[test]
    fn vacuum_em_stress_example() {
        let t = em_stress([1.0, 0.0], [0.0, 0.0], 1.0, 1.0, EmRegion::Vacuum);
        assert_eq!((t.xx, t.yy, t.xy), (0.5, -0.5, 0.0));
        let z = em_stress([0.0, 0.0], [3.0, 1.0], 1.0, 1.0, EmRegion::Solid);
        assert_eq!(z, PlaneTensor::default());
    }

    #[test]
    fn hooke_with_heaviside_split() {
        // Independent plane-strain Hooke law with λ, μ.
        let m = mat();
        let (lam, mu) = (m.lame_lambda(), m.shear());
        for e in [Sym2::new(1e-3, 0.0, 0.0), Sym2::new(-1e-3, 0.0, 0.0), Sym2::new(2e-4, -5e-4, 3e-4)] {
            let s = total_stress(&e, [0.0, 0.0], 0.0, &m).unwrap();
            let tr = e.trace();
            assert!(rel(s.xx, lam * tr + 2.0 * mu * e.xx, 1e-12) < 1e-12);
            assert!(rel(s.yy, lam * tr + 2.0 * mu * e.yy, 1e-12) < 1e-12);
            assert!(rel(s.xy, 2.0 * mu * e.xy, 1e-12) < 1e-12);
            assert!(rel(s.zz, lam * tr, 1e-12) < 1e-12);
            // degraded: only the tensile part scales
            let sd = total_stress(&e, [0.0, 0.0], 1.0, &m).unwrap();
            let (plus, minus) = effective_stresses(&e, &m);
            let ge = m.rule.g_elastic(1.0).unwrap();
            assert!((sd.xx - (ge * plus.xx + minus.xx)).abs() < 1e-15);
            if tr < 0.0 {
                assert!((minus.xx - m.bulk() * tr).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn h_field_reduces_to_linear_medium() {
        // All g_i vanish when α0..α4 = 0 and α5 = 1/μ0 (solid).
        let mut m = mat();
        m.alpha = [0.0, 0.0, 0.0, 0.0, 0.0, 1.0 / m.solid.mu0, 3.0];
        let b = [0.2, -0.1];
        for d in [0.0, 0.5, 1.0] {
            let h = h_field(&Sym2::default(), b, d, &m).unwrap();
            let mu0 = m.interp_constants(d).unwrap().mu0;
            assert!(rel(h[0], b[0] / mu0, 1e-30) < 1e-12 && rel(h[1], b[1] / mu0, 1e-30) < 1e-12);
            // and B = μ0 (H + M) in this sub-case
            let mm = magnetization(&Sym2::default(), b, &m).unwrap();
            assert!(rel(mu0 * (h[0] + mm[0]), b[0], 1e-30) < 1e-8);
        }
        assert_eq!(h_field(&Sym2::new(1e-3, 0.0, 0.0), [0.0, 0.0], 0.3, &mat()).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn field_scaling() {
        let m = mat();
        let e = Sym2::new(3e-4, -1e-4, 2e-4);
        let b = [0.3, 0.7];
        let s = 3.0;
        let w1 = energy_total(&e, b, 0.0, [0.0; 2], &m).unwrap();
        let w2 = energy_total(&e, [s * b[0], s * b[1]], 0.0, [0.0; 2], &m).unwrap();
        assert!(rel(w2.w_mos, s * s * w1.w_mos, 1e-30) < 1e-13);
        let t1 = em_stress(b, [0.0; 2], 2.0, 1.0, EmRegion::Vacuum);
        let t2 = em_stress([s * b[0], s * b[1]], [0.0; 2], 2.0, 1.0, EmRegion::Vacuum);
        assert!(rel(t2.xy, s * s * t1.xy, 1e-30) < 1e-14);
    }

    /// Expanded total stress written term by term from the printed
    /// formula, with the α5 and α6 groups kept separate.
    fn expanded(e: &Sym2, b: [f64; 2], d: f64, m: &MaterialSet) -> (PlaneTensor, [[f64; 2]; 2], [[f64; 2]; 2]) {
        let ge = m.rule.g_elastic(d).unwrap();
        let (plus, minus) = effective_stresses(e, m);
        let mu0 = m.interp_constants(d).unwrap().mu0;
        let i4 = b[0] * b[0] + b[1] * b[1];
        let (g, dg) = g_coefficients(e.trace(), m).unwrap();
        let r = i4 / (m.b_ref * m.b_ref);
        let (mut s1, mut s2) = (0.0, 0.0);
        for i in 0..5 {
            s1 += 0.5 / (i + 1) as f64 * dg[i] * i4.powi(i as i32 + 1) / m.b_ref.powi(2 * i as i32);
            s2 += g[i] * r.powi(i as i32);
        }
        let cb = m.e_m / mu0 + s2 + 0.5 * m.alpha[5];
        let ci = -(0.5 * m.e_m / mu0 + s2) * i4;
        let base = PlaneTensor {
            xx: ge * plus.xx + minus.xx + s1 + cb * b[0] * b[0] + ci,
            yy: ge * plus.yy + minus.yy + s1 + cb * b[1] * b[1] + ci,
            xy: ge * plus.xy + minus.xy + cb * b[0] * b[1],
            zz: ge * plus.zz + minus.zz + s1 + ci,
        };
        let bb = [[b[0] * b[0], b[0] * b[1]], [b[1] * b[0], b[1] * b[1]]];
        let ee = [[e.xx, e.xy], [e.xy, e.yy]];
        let e2 = e.square();
        let ee2 = [[e2.xx, e2.xy], [e2.xy, e2.yy]];
        let mul = |a: [[f64; 2]; 2], c: [[f64; 2]; 2]| {
            let mut o = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    o[i][j] = a[i][0] * c[0][j] + a[i][1] * c[1][j];
                }
            }
            o
        };
        let (_, i5, i6) = magnetic_invariants(e, b);
        let bbe = mul(bb, ee);
        let ebb = mul(ee, bb);
        let bbe2 = mul(bb, ee2);
        let mut a5 = [[0.0; 2]; 2];
        let mut a6 = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let id = if i == j { 1.0 } else { 0.0 };
                a5[i][j] = 0.5 * m.alpha[5] * (bbe[i][j] - i5 * id);
                a6[i][j] = 0.5 * m.alpha[6] * (bb[i][j] + bbe2[i][j] - i6 * id + bbe[i][j] + ebb[i][j]);
            }
        }
        (base, a5, a6)
    }

    #[test]
    fn composition_agrees_with_expanded_form_by_group() {
        let m = mat();
        let e = Sym2::new(4e-4, -2e-4, 3e-4);
        let b = [0.4, -0.25];
        for d in [0.0, 0.3, 0.95] {
            // Without magnetostriction the two forms coincide.
            let mut m0 = m.clone();
            m0.alpha[5] = 0.0;
            m0.alpha[6] = 0.0;
            let (base, _, _) = expanded(&e, b, d, &m0);
            let comp = total_stress(&e, b, d, &m0).unwrap();
            for (x, y) in [(comp.xx, base.xx), (comp.yy, base.yy), (comp.xy, base.xy), (comp.zz, base.zz)] {
                assert!(rel(x, y, 1e-12) < 1e-12);
            }
            // α5 group: composition = 2·sym(printed group).
            let mut m5 = m0.clone();
            m5.alpha[5] = m.alpha[5];
            let (base5, a5, _) = expanded(&e, b, d, &m5);
            let c5 = total_stress(&e, b, d, &m5).unwrap();
            let sym5 = [a5[0][0], a5[1][1], 0.5 * (a5[0][1] + a5[1][0])];
            let got = [c5.xx - base5.xx, c5.yy - base5.yy, c5.xy - base5.xy];
            for k in 0..3 {
                assert!(rel(got[k], 2.0 * sym5[k], 1e-12) < 1e-9, "alpha5 group {k}");
            }
            // α6 group: composition = α6 sym(B⊗ε²B) − α6 I6 I + ½α6(B⊗Bε + εB⊗B);
            // the printed group has an extra ½α6 B⊗B and halves the ε² terms.
            let mut m6 = m0.clone();
            m6.alpha[6] = m.alpha[6];
            let (base6, _, a6) = expanded(&e, b, d, &m6);
            let c6 = total_stress(&e, b, d, &m6).unwrap();
            let a = m.alpha[6];
            let eb = e.dot(b);
            let bb = [[b[0] * b[0], b[0] * b[1]], [b[1] * b[0], b[1] * b[1]]];
            let be = [b[0] * eb[0] + 0.0, 0.0];
            let _ = be;
            let sym_bbe = [b[0] * eb[0], b[1] * eb[1], 0.5 * (b[0] * eb[1] + b[1] * eb[0])];
            // printed minus its spurious ½α6 B⊗B and minus the ½α6(B⊗Bε+εB⊗B) part
            let rest = [
                a6[0][0] - 0.5 * a * bb[0][0] - a * sym_bbe[0],
                a6[1][1] - 0.5 * a * bb[1][1] - a * sym_bbe[1],
                0.5 * (a6[0][1] + a6[1][0]) - 0.5 * a * bb[0][1] - a * sym_bbe[2],
            ];
            let got = [c6.xx - base6.xx, c6.yy - base6.yy, c6.xy - base6.xy];
            for k in 0..3 {
                let expect = 2.0 * rest[k] + a * sym_bbe[k];
                assert!(rel(got[k], expect, 1e-12) < 1e-9, "alpha6 group {k}");
            }
        }
    }

    fn energy(e: &Sym2, b: [f64; 2], d: f64, m: &MaterialSet) -> f64 {
        energy_total(e, b, d, [0.0; 2], m).unwrap().total()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn psi_partition(xx in -1e-2f64..1e-2, yy in -1e-2f64..1e-2, xy in -1e-2f64..1e-2) {
            let m = mat();
            let e = Sym2::new(xx, yy, xy);
            let (pp, pm) = psi_elastic(&e, &m);
            // direct evaluation of ψ = K/2 I1² + μ |ε_dev|²
            let (_, dev) = split_strain(&e);
            let dev2 = dev.xx * dev.xx + dev.yy * dev.yy + dev.zz * dev.zz + 2.0 * dev.xy * dev.xy;
            let psi = 0.5 * m.bulk() * e.trace().powi(2) + m.shear() * dev2;
            prop_assert!((pp + pm - psi).abs() <= 1e-12 * psi.max(1e-12));
            prop_assert!(pp >= 0.0 && pm >= 0.0);
        }

        #[test]
        fn deviator_is_traceless(xx in -1.0f64..1.0, yy in -1.0f64..1.0, xy in -1.0f64..1.0) {
            let (vol, dev) = split_strain(&Sym2::new(xx, yy, xy));
            prop_assert!(dev.trace().abs() < 1e-14);
            prop_assert!((vol.xx + dev.xx - xx).abs() < 1e-15);
        }

        #[test]
        fn w_mag_termwise(i1 in -1e-2f64..1e-2, b0 in -2e5f64..2e5, b1 in -2e5f64..2e5) {
            let m = mat();
            let i4 = b0 * b0 + b1 * b1;
            let (g, _) = g_coefficients(i1, &m).unwrap();
            let mut direct = 0.0;
            for i in 0..5 {
                direct += 0.5 * g[i] / (i + 1) as f64 * i4.powi(i as i32 + 1) / m.b_ref.powi(2 * i as i32);
            }
            let w = w_mag(i1, i4, &m).unwrap();
            prop_assert!((w - direct).abs() <= 1e-12 * direct.abs().max(1e-300));
        }

        #[test]
        fn stress_is_energy_gradient(
            xx in -1e-3f64..1e-3, yy in -1e-3f64..1e-3, xy in -1e-3f64..1e-3,
            b0 in -2e5f64..2e5, b1 in -2e5f64..2e5, d in 0.0f64..1.0,
        ) {
            let m = mat();
            let e = Sym2::new(xx, yy, xy);
            let b = [b0, b1];
            prop_assume!(e.trace().abs() > 1e-5);
            let s = cauchy_stress(&e, b, d, &m).unwrap().in_plane();
            let h = 1e-6 * e.norm().max(1e-4);
            for k in 0..3 {
                let wp = energy(&e.with(k, e.get(k) + h), b, d, &m);
                let wm = energy(&e.with(k, e.get(k) - h), b, d, &m);
                let mut fd = (wp - wm) / (2.0 * h);
                if k == 2 {
                    fd *= 0.5;
                }
                let scale = s.norm().max(1e-300);
                prop_assert!((fd - s.get(k)).abs() <= 1e-5 * scale, "k={} fd={} s={}", k, fd, s.get(k));
            }
        }

        #[test]
        fn magnetization_is_negative_field_gradient(
            xx in -1e-3f64..1e-3, yy in -1e-3f64..1e-3, xy in -1e-3f64..1e-3,
            b0 in -2e5f64..2e5, b1 in -2e5f64..2e5, d in 0.0f64..1.0,
        ) {
            let m = mat();
            let e = Sym2::new(xx, yy, xy);
            let b = [b0, b1];
            let mm = magnetization(&e, b, &m).unwrap();
            let h = 1e-6 * (b0.abs() + b1.abs()).max(1.0);
            let scale = (mm[0].hypot(mm[1])).max(1e-300);
            for k in 0..2 {
                let mut bp = b;
                let mut bm = b;
                bp[k] += h;
                bm[k] -= h;
                let fd = -(energy(&e, bp, d, &m) - energy(&e, bm, d, &m)) / (2.0 * h);
                prop_assert!((fd - mm[k]).abs() <= 1e-5 * scale);
            }
        }

        #[test]
        fn stresses_are_symmetric_and_finite(
            xx in -1e-3f64..1e-3, yy in -1e-3f64..1e-3, xy in -1e-3f64..1e-3,
            b0 in -1.0f64..1.0, b1 in -1.0f64..1.0, d in 0.0f64..1.0,
        ) {
            let t = total_stress(&Sym2::new(xx, yy, xy), [b0, b1], d, &mat()).unwrap();
            prop_assert!(t.xx.is_finite() && t.xy.is_finite() && t.zz.is_finite());
            prop_assert!(t.von_mises() >= 0.0);
        }
    }
}
