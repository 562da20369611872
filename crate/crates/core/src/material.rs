//! Material constants and the damage-driven transition between solid and
//! crack (vacuum-like) electromagnetic properties.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::CellTag;

/// Overshoot of `d` beyond `[0, 1]` that is silently clamped.
pub const D_CLAMP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("phase field value {0} outside [0, 1]")]
pub struct DomainError(pub f64);

fn check_d(d: f64) -> Result<f64, DomainError> {
    if (-D_CLAMP_TOL..=1.0 + D_CLAMP_TOL).contains(&d) {
        Ok(d.clamp(0.0, 1.0))
    } else {
        Err(DomainError(d))
    }
}

/// Indicator functions `G^s`, `G^f` and the elastic degradation `g_e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionRule {
    pub m: f64,
    pub c1: f64,
    pub c2: f64,
    pub kappa: f64,
}

impl Default for TransitionRule {
    fn default() -> Self {
        Self {
            m: 2.0,
            c1: 0.1,
            c2: 0.9,
            kappa: 1e-8,
        }
    }
}

impl TransitionRule {
    /// Solid indicator: 1 below `c1`, 0 above `c2`, `((c2 − d)/(c2 − c1))^m`
    /// in between.
    pub fn g_solid(&self, d: f64) -> Result<f64, DomainError> {
        let d = check_d(d)?;
        Ok(if d < self.c1 {
            1.0
        } else if d > self.c2 {
            0.0
        } else {
            ((self.c2 - d) / (self.c2 - self.c1)).powf(self.m)
        })
    }

    /// Crack indicator, the mirror image of [`TransitionRule::g_solid`].
    pub fn g_fracture(&self, d: f64) -> Result<f64, DomainError> {
        let d = check_d(d)?;
        Ok(if d < self.c1 {
            0.0
        } else if d > self.c2 {
            1.0
        } else {
            ((d - self.c1) / (self.c2 - self.c1)).powf(self.m)
        })
    }

    /// `g_e(d) = (1 − κ)(1 − d)² + κ`.
    pub fn g_elastic(&self, d: f64) -> Result<f64, DomainError> {
        let d = check_d(d)?;
        Ok((1.0 - self.kappa) * (1.0 - d) * (1.0 - d) + self.kappa)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0 <= self.c1 && self.c1 < self.c2 && self.c2 <= 1.0) {
            return Err(format!("need 0 <= c1 < c2 <= 1, got ({}, {})", self.c1, self.c2));
        }
        if self.m < 1.0 {
            return Err(format!("transition exponent m = {} < 1", self.m));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(format!("kappa = {} not in (0, 1)", self.kappa));
        }
        Ok(())
    }
}

/// Electromagnetic constants of one region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmConstants {
    /// Permeability, H/mm.
    pub mu0: f64,
    /// Permittivity (unused by the magnetostatic solve).
    pub eps0: f64,
    /// Conductivity, S/mm.
    pub sigma0: f64,
    /// Free charge density (stored only).
    pub rho0: f64,
}

impl EmConstants {
    pub const fn new(mu0: f64, sigma0: f64) -> Self {
        Self {
            mu0,
            eps0: 0.0,
            sigma0,
            rho0: 0.0,
        }
    }
}

pub const MU_VACUUM: f64 = 4.0e-7 * std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialSet {
    /// Young's modulus, GPa.
    pub young: f64,
    pub poisson: f64,
    /// Griffith energy release rate, kN/mm.
    pub g_c: f64,
    /// Regularisation length, mm.
    pub l_d: f64,
    /// Damage viscosity.
    pub eta_d: f64,
    pub vacuum: EmConstants,
    pub wire: EmConstants,
    pub solid: EmConstants,
    /// Fully cracked material; equal to vacuum in all examples.
    pub fracture: EmConstants,
    /// Magnetisation (`α0..α4`) and magnetostriction (`α5`, `α6`) constants.
    pub alpha: [f64; 7],
    pub b_ref: f64,
    pub e_m: f64,
    /// Listed with the parameters but not used by any equation.
    pub zeta: f64,
    pub rule: TransitionRule,
}

impl MaterialSet {
    /// Parameters of the beam and cylinder examples.
    pub fn example12() -> Self {
        let vacuum = EmConstants::new(MU_VACUUM, 0.0);
        Self {
            young: 160.0,
            poisson: 0.33,
            g_c: 0.0027,
            l_d: 0.1,
            eta_d: 1e-6,
            vacuum,
            wire: EmConstants::new(126.0, 1.0),
            solid: EmConstants::new(1000.0, 1.0),
            fracture: vacuum,
            alpha: [2e-6, 2e-6, 2e-6, 2e-6, 2e-6, 2.5, 7.75],
            b_ref: 2e6,
            e_m: 1e-9,
            zeta: 50.0,
            rule: TransitionRule::default(),
        }
    }

    /// Parameters of the plate examples.
    pub fn example3() -> Self {
        Self {
            young: 16.0,
            poisson: 0.2,
            wire: EmConstants::new(1260.0, 1.0),
            solid: EmConstants::new(1e7, 1.0),
            ..Self::example12()
        }
    }

    pub fn lame_lambda(&self) -> f64 {
        self.young * self.poisson / ((1.0 + self.poisson) * (1.0 - 2.0 * self.poisson))
    }

    pub fn shear(&self) -> f64 {
        self.young / (2.0 * (1.0 + self.poisson))
    }

    /// `K_n = λ + 2μ/3`.
    pub fn bulk(&self) -> f64 {
        self.lame_lambda() + 2.0 * self.shear() / 3.0
    }

    /// `G^s(d)·solid + G^f(d)·fracture` for each constant.
    pub fn interp_constants(&self, d: f64) -> Result<EmConstants, DomainError> {
        let gs = self.rule.g_solid(d)?;
        let gf = self.rule.g_fracture(d)?;
        let mix = |s: f64, f: f64| gs * s + gf * f;
        Ok(EmConstants {
            mu0: mix(self.solid.mu0, self.fracture.mu0),
            eps0: mix(self.solid.eps0, self.fracture.eps0),
            sigma0: mix(self.solid.sigma0, self.fracture.sigma0),
            rho0: mix(self.solid.rho0, self.fracture.rho0),
        })
    }

    /// Constants of an undamaged region. Notches carry current and take
    /// the wire constants.
    pub fn region_constants(&self, tag: CellTag) -> EmConstants {
        match tag {
            CellTag::Vacuum => self.vacuum,
            CellTag::Solid => self.solid,
            CellTag::Wire(_) | CellTag::Notch(_) => self.wire,
        }
    }

    /// Constants in a cell with phase field `d` (only the solid degrades).
    pub fn constants_at(&self, tag: CellTag, d: f64) -> Result<EmConstants, DomainError> {
        if tag.is_solid() {
            self.interp_constants(d)
        } else {
            Ok(self.region_constants(tag))
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("young_modulus", self.young),
            ("fracture_energy", self.g_c),
            ("length_scale", self.l_d),
            ("b_ref", self.b_ref),
            ("mu_vacuum", self.vacuum.mu0),
            ("mu_wire", self.wire.mu0),
            ("mu_solid", self.solid.mu0),
            ("mu_fracture", self.fracture.mu0),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        let non_negative = [
            ("damage_viscosity", self.eta_d),
            ("e_m", self.e_m),
            ("sigma_vacuum", self.vacuum.sigma0),
            ("sigma_wire", self.wire.sigma0),
            ("sigma_solid", self.solid.sigma0),
            ("sigma_fracture", self.fracture.sigma0),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !(self.poisson > -1.0 && self.poisson < 0.5) {
            return Err(format!("poisson_ratio = {} outside (-1, 0.5)", self.poisson));
        }
        if self.bulk() <= 0.0 {
            return Err("bulk modulus must be positive".to_string());
        }
        self.rule.validate()
    }
}
