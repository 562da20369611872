//! TOML case configuration.
//!
//! A case file may name a built-in `preset`; its own keys are then merged
//! over the preset (tables recursively, arrays replaced). A `[mesh]` table
//! with a different `kind` than the preset's replaces the preset mesh
//! entirely. Omitted material constants take the values of the cylinder
//! and beam examples.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::driver::{Case, StaggeredConfig};
use crate::output::VtkField;
use crate::magnetics::{GradPhi, SourceLaw};
use crate::material::{EmConstants, MaterialSet, TransitionRule, MU_VACUUM};
use crate::mesh::generate::generate_notched_plate_seeded;
use crate::mesh::{
    generate_notched_beam, generate_wire_cylinder, gmsh, rectangle, BoundaryTag, CellTag, Mesh, MeshError,
    NotchSpec, NotchedBeamSpec, Point, WireCylinderSpec, WireSpec,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid physical constant: {0}")]
    Unit(String),
    #[error("tag error: {0}")]
    Tag(String),
    #[error("invalid setting: {0}")]
    Invalid(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

pub const PRESETS: [(&str, &str); 6] = [
    ("example1", include_str!("../presets/example1.toml")),
    ("example2", include_str!("../presets/example2.toml")),
    ("example3.1", include_str!("../presets/example3.1.toml")),
    ("example3.2", include_str!("../presets/example3.2.toml")),
    ("example3.3", include_str!("../presets/example3.3.toml")),
    ("example3.4", include_str!("../presets/example3.4.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

fn preset_source(name: &str) -> Result<&'static str, ConfigError> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
        .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))
}

fn default_order() -> usize {
    1
}

fn default_seed() -> u64 {
    7
}

fn default_true() -> bool {
    true
}

/// Source of the mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSpec {
    /// Gmsh MSH 2.2 file; relative paths are resolved against the config
    /// file's directory.
    File {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        order: Option<usize>,
    },
    /// Vacuum disk with an iron annulus and wires inside and outside it.
    WireCylinder {
        r_v: f64,
        r_1: f64,
        thickness: f64,
        n_wires: usize,
        r_w: f64,
        h: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h_max: Option<f64>,
        #[serde(default = "default_seed")]
        seed: u64,
        #[serde(default = "default_true")]
        mirror: bool,
        #[serde(default = "default_order")]
        order: usize,
    },
    /// Notched beam on two supports in a vacuum disk, one wire above and
    /// one below.
    NotchedBeam {
        h_beam: f64,
        h_wire: f64,
        h_max: f64,
        #[serde(default = "default_seed")]
        seed: u64,
        #[serde(default = "default_order")]
        order: usize,
    },
    /// Square plate `[0, side]²` with conducting notches and wires.
    NotchedPlate {
        side: f64,
        h: f64,
        #[serde(default)]
        notches: Vec<NotchSpec>,
        #[serde(default)]
        wires: Vec<WireSpec>,
        #[serde(default = "default_seed")]
        seed: u64,
        #[serde(default = "default_order")]
        order: usize,
    },
    /// Structured rectangle with a single subdomain.
    Rectangle {
        min: Point,
        max: Point,
        nx: usize,
        ny: usize,
        tag: String,
        #[serde(default = "default_order")]
        order: usize,
    },
}

impl MeshSpec {
    /// Builds the mesh. `base` resolves relative file paths.
    pub fn build(&self, base: Option<&Path>) -> Result<Mesh, ConfigError> {
        let elevate = |m: Mesh, order: usize| -> Result<Mesh, ConfigError> {
            match order {
                1 if m.order() == 1 => Ok(m),
                2 => Ok(m.to_order2()),
                o => Err(ConfigError::Invalid(format!("cannot produce order {o} from an order {} mesh", m.order()))),
            }
        };
        match self {
            MeshSpec::File { path, order } => {
                let p = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                let m = gmsh::load_mesh(&p)?;
                match order {
                    Some(o) => elevate(m, *o),
                    None => Ok(m),
                }
            }
            MeshSpec::WireCylinder {
                r_v,
                r_1,
                thickness,
                n_wires,
                r_w,
                h,
                h_max,
                seed,
                mirror,
                order,
            } => {
                let mut spec = WireCylinderSpec::new(*r_v, *r_1, *thickness, *n_wires, *r_w, *h);
                if let Some(hm) = h_max {
                    spec.h_max = *hm;
                }
                spec.seed = *seed;
                spec.mirror = *mirror;
                elevate(generate_wire_cylinder(&spec)?, *order)
            }
            MeshSpec::NotchedBeam {
                h_beam,
                h_wire,
                h_max,
                seed,
                order,
            } => {
                let spec = NotchedBeamSpec {
                    h_beam: *h_beam,
                    h_wire: *h_wire,
                    h_max: *h_max,
                    seed: *seed,
                    ..NotchedBeamSpec::default()
                };
                elevate(generate_notched_beam(&spec)?, *order)
            }
            MeshSpec::NotchedPlate {
                side,
                h,
                notches,
                wires,
                seed,
                order,
            } => elevate(generate_notched_plate_seeded(*side, notches, wires, *h, *seed)?, *order),
            MeshSpec::Rectangle {
                min,
                max,
                nx,
                ny,
                tag,
                order,
            } => {
                if *nx == 0 || *ny == 0 {
                    return Err(ConfigError::Invalid("rectangle needs nx, ny >= 1".to_string()));
                }
                let tag: CellTag = tag.parse()?;
                elevate(rectangle(*min, *max, *nx, *ny, tag), *order)
            }
        }
    }

    /// Nominal element size in the solid, when the generator states one.
    pub fn nominal_h(&self) -> Option<f64> {
        match self {
            MeshSpec::File { .. } => None,
            MeshSpec::WireCylinder { h, .. } | MeshSpec::NotchedPlate { h, .. } => Some(*h),
            MeshSpec::NotchedBeam { h_beam, .. } => Some(*h_beam),
            MeshSpec::Rectangle { min, max, nx, ny, .. } => {
                Some(((max[0] - min[0]) / *nx as f64).max((max[1] - min[1]) / *ny as f64))
            }
        }
    }
}

/// Material constants; every field defaults to the cylinder/beam examples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialConfig {
    /// GPa.
    pub young_modulus: f64,
    pub poisson_ratio: f64,
    /// kN/mm.
    pub fracture_energy: f64,
    /// mm; twice the nominal solid element size when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length_scale: Option<f64>,
    pub damage_viscosity: f64,
    pub kappa: f64,
    pub transition_exponent: f64,
    pub c1: f64,
    pub c2: f64,
    pub mu_vacuum: f64,
    pub mu_wire: f64,
    pub mu_solid: f64,
    /// Defaults to `mu_vacuum`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_fracture: Option<f64>,
    pub sigma_vacuum: f64,
    pub sigma_wire: f64,
    pub sigma_solid: f64,
    /// Defaults to `sigma_vacuum`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_fracture: Option<f64>,
    pub alpha: [f64; 7],
    pub b_ref: f64,
    pub e_m: f64,
    pub zeta: f64,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        let m = MaterialSet::example12();
        Self {
            young_modulus: m.young,
            poisson_ratio: m.poisson,
            fracture_energy: m.g_c,
            length_scale: None,
            damage_viscosity: m.eta_d,
            kappa: m.rule.kappa,
            transition_exponent: m.rule.m,
            c1: m.rule.c1,
            c2: m.rule.c2,
            mu_vacuum: MU_VACUUM,
            mu_wire: m.wire.mu0,
            mu_solid: m.solid.mu0,
            mu_fracture: None,
            sigma_vacuum: m.vacuum.sigma0,
            sigma_wire: m.wire.sigma0,
            sigma_solid: m.solid.sigma0,
            sigma_fracture: None,
            alpha: m.alpha,
            b_ref: m.b_ref,
            e_m: m.e_m,
            zeta: m.zeta,
        }
    }
}

impl MaterialConfig {
    fn check(&self) -> Result<(), ConfigError> {
        let positive = [
            ("young_modulus", self.young_modulus),
            ("fracture_energy", self.fracture_energy),
            ("mu_vacuum", self.mu_vacuum),
            ("mu_wire", self.mu_wire),
            ("mu_solid", self.mu_solid),
            ("mu_fracture", self.mu_fracture.unwrap_or(self.mu_vacuum)),
            ("b_ref", self.b_ref),
            ("e_m", self.e_m),
            ("length_scale", self.length_scale.unwrap_or(1.0)),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::Unit(format!("{name} = {v} must be positive")));
            }
        }
        let non_negative = [
            ("damage_viscosity", self.damage_viscosity),
            ("sigma_vacuum", self.sigma_vacuum),
            ("sigma_wire", self.sigma_wire),
            ("sigma_solid", self.sigma_solid),
            ("sigma_fracture", self.sigma_fracture.unwrap_or(0.0)),
            ("zeta", self.zeta),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ConfigError::Unit(format!("{name} = {v} must be non-negative")));
            }
        }
        if !(self.poisson_ratio > -1.0 && self.poisson_ratio < 0.5) {
            return Err(ConfigError::Unit(format!(
                "poisson_ratio = {} must lie in (-1, 0.5)",
                self.poisson_ratio
            )));
        }
        if self.alpha.iter().any(|a| !a.is_finite()) {
            return Err(ConfigError::Unit("alpha entries must be finite".to_string()));
        }
        Ok(())
    }

    /// Material set with the regularisation length `l_d`.
    pub fn to_material(&self, l_d: f64) -> Result<MaterialSet, ConfigError> {
        self.check()?;
        let vacuum = EmConstants::new(self.mu_vacuum, self.sigma_vacuum);
        let m = MaterialSet {
            young: self.young_modulus,
            poisson: self.poisson_ratio,
            g_c: self.fracture_energy,
            l_d,
            eta_d: self.damage_viscosity,
            vacuum,
            wire: EmConstants::new(self.mu_wire, self.sigma_wire),
            solid: EmConstants::new(self.mu_solid, self.sigma_solid),
            fracture: EmConstants::new(
                self.mu_fracture.unwrap_or(self.mu_vacuum),
                self.sigma_fracture.unwrap_or(self.sigma_vacuum),
            ),
            alpha: self.alpha,
            b_ref: self.b_ref,
            e_m: self.e_m,
            zeta: self.zeta,
            rule: TransitionRule {
                m: self.transition_exponent,
                c1: self.c1,
                c2: self.c2,
                kappa: self.kappa,
            },
        };
        m.rule.validate().map_err(ConfigError::Unit)?;
        Ok(m)
    }
}

/// Current density `value + slope·t` (A/mm²) in one subdomain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub tag: String,
    #[serde(default)]
    pub value: f64,
    #[serde(default)]
    pub slope: f64,
}

/// Prescribed displacement components on a boundary tag (mm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplacementConfig {
    pub tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ux: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uy: Option<f64>,
}

/// Constant traction on a boundary tag (GPa).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TractionConfig {
    pub tag: String,
    pub t: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Snapshot cadence in steps; 0 writes none. The final step is always
    /// included when snapshots are on.
    pub every: usize,
    pub vtk: bool,
    pub csv: bool,
    pub fields: Vec<VtkField>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            every: 1,
            vtk: true,
            csv: true,
            fields: VtkField::ALL.to_vec(),
        }
    }
}

fn zero2() -> [f64; 2] {
    [0.0; 2]
}

fn is_zero2(v: &[f64; 2]) -> bool {
    *v == [0.0; 2]
}

fn default_mesh() -> MeshSpec {
    MeshSpec::Rectangle {
        min: [0.0, 0.0],
        max: [1.0, 1.0],
        nx: 8,
        ny: 8,
        tag: "solid".to_string(),
        order: 1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default)]
    pub description: String,
    #[serde(default = "default_mesh")]
    pub mesh: MeshSpec,
    #[serde(default)]
    pub material: MaterialConfig,
    #[serde(default)]
    pub sources: Vec<SourceConfig>,
    #[serde(default)]
    pub grad_phi: GradPhi,
    #[serde(default)]
    pub displacement: Vec<DisplacementConfig>,
    #[serde(default)]
    pub traction: Vec<TractionConfig>,
    #[serde(default = "zero2", skip_serializing_if = "is_zero2")]
    pub body_force: [f64; 2],
    #[serde(default)]
    pub solver: StaggeredConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Directory against which relative mesh paths are resolved.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Default for CaseConfig {
    fn default() -> Self {
        Self::from_toml("").expect("empty configuration is valid")
    }
}

/// Recursively overlays `top` on `base`.
fn merge(base: &mut toml::Value, top: toml::Value) {
    match (base, top) {
        (toml::Value::Table(b), toml::Value::Table(t)) => {
            for (k, v) in t {
                let replace_mesh = k == "mesh"
                    && matches!((b.get("mesh"), &v), (Some(bm), tm) if bm.get("kind") != tm.get("kind") && tm.get("kind").is_some());
                match b.get_mut(&k) {
                    Some(slot) if !replace_mesh => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

impl CaseConfig {
    /// Parses a configuration, applying its preset if any.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let user: toml::Value = text.parse::<toml::Table>().map(toml::Value::Table).map_err(schema)?;
        let merged = match user.get("preset") {
            Some(toml::Value::String(name)) => {
                let mut base: toml::Value = preset_source(name)?
                    .parse::<toml::Table>()
                    .map(toml::Value::Table)
                    .map_err(schema)?;
                merge(&mut base, user);
                base
            }
            Some(other) => return Err(ConfigError::Schema(format!("preset must be a string, got {other}"))),
            None => user,
        };
        let cfg: CaseConfig = merged.try_into().map_err(schema)?;
        cfg.solver.validate().map_err(ConfigError::Invalid)?;
        cfg.material.check()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        Self::from_toml(&format!("preset = {name:?}\n"))
    }

    /// Serialises the fully resolved configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is serialisable")
    }

    /// Builds the mesh and checks every referenced tag.
    pub fn into_case(&self) -> Result<Case, ConfigError> {
        let mesh = self.mesh.build(self.base_dir.as_deref())?;
        let h = self.mesh.nominal_h().unwrap_or_else(|| {
            let solid = mesh.mean_edge_length(Some(CellTag::Solid));
            if solid > 0.0 {
                solid
            } else {
                mesh.mean_edge_length(None)
            }
        });
        let material = self.material.to_material(self.material.length_scale.unwrap_or(2.0 * h))?;
        let cell_tags = mesh.subdomains();
        let mut sources = std::collections::BTreeMap::new();
        for s in &self.sources {
            let tag: CellTag = s.tag.parse()?;
            if !cell_tags.contains(&tag) {
                return Err(ConfigError::Tag(format!("source subdomain {tag} is not in the mesh")));
            }
            if sources
                .insert(
                    tag,
                    SourceLaw {
                        value: s.value,
                        slope: s.slope,
                    },
                )
                .is_some()
            {
                return Err(ConfigError::Tag(format!("source subdomain {tag} given twice")));
            }
        }
        let boundary_tag = |name: &str| -> Result<BoundaryTag, ConfigError> {
            let tag: BoundaryTag = name.parse()?;
            if mesh.tagged_boundary_nodes(tag).is_empty() {
                return Err(ConfigError::Tag(format!("boundary {tag} is not in the mesh")));
            }
            Ok(tag)
        };
        let mut displacement = Vec::new();
        for d in &self.displacement {
            let tag = boundary_tag(&d.tag)?;
            for (comp, v) in [d.ux, d.uy].into_iter().enumerate() {
                if let Some(v) = v {
                    displacement.push((tag, comp, v));
                }
            }
        }
        let mut tractions = Vec::new();
        for t in &self.traction {
            tractions.push((boundary_tag(&t.tag)?, t.t));
        }
        Ok(Case {
            mesh,
            material,
            sources,
            grad_phi: self.grad_phi,
            displacement,
            tractions,
            body_force: self.body_force,
        })
    }
}

fn schema(e: impl std::fmt::Display) -> ConfigError {
    ConfigError::Schema(e.to_string())
}
