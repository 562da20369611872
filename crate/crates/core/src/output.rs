//! File outputs: time-series CSV and legacy ASCII VTK snapshots.
//!
//! Files are written to a temporary sibling and renamed into place.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::driver::{Snapshot, StepDiagnostics};
use crate::mesh::{CellTag, Mesh};

/// Fields written to VTK snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VtkField {
    U,
    D,
    AZ,
    BMagnitude,
    VonMises,
    Subdomain,
}

impl VtkField {
    pub const ALL: [VtkField; 6] = [
        VtkField::U,
        VtkField::D,
        VtkField::AZ,
        VtkField::BMagnitude,
        VtkField::VonMises,
        VtkField::Subdomain,
    ];
}

pub const CSV_HEADER: &str = "t,A_ave_solid,max_d,elastic_energy,stagger_iters,u_residual,A_residual";

/// Writes `contents` to `path` via a temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

/// Time series with one row per committed step.
pub fn timeseries_csv(rows: &[StepDiagnostics]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{:.12e},{:.12e},{:.12e},{:.12e},{},{:.12e},{:.12e}",
            r.t, r.a_ave_solid, r.max_d, r.elastic_energy, r.stagger_iters, r.u_residual, r.a_residual
        );
    }
    s
}

pub fn write_timeseries(rows: &[StepDiagnostics], path: &Path) -> std::io::Result<()> {
    write_atomic(path, timeseries_csv(rows).as_bytes())
}

/// Integer code of a subdomain for visualisation: vacuum 0, solid 1,
/// wires 100 + k, notches 200 + k.
pub fn subdomain_code(tag: CellTag) -> u32 {
    match tag {
        CellTag::Vacuum => 0,
        CellTag::Solid => 1,
        CellTag::Wire(k) => 100 + k,
        CellTag::Notch(k) => 200 + k,
    }
}

/// Legacy VTK 3.0 unstructured grid with the requested `fields`.
/// Second-order meshes are written as quadratic triangles.
pub fn vtk_string(mesh: &Mesh, snap: &Snapshot, fields: &[VtkField]) -> String {
    let has = |f: VtkField| fields.contains(&f);
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(s, "step {} t = {:e}", snap.step, snap.t);
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", mesh.num_nodes());
    for p in mesh.nodes() {
        let _ = writeln!(s, "{:e} {:e} 0", p[0], p[1]);
    }
    let npc = if mesh.order() == 2 { 6 } else { 3 };
    let _ = writeln!(s, "CELLS {} {}", mesh.num_cells(), mesh.num_cells() * (npc + 1));
    for c in mesh.cells() {
        s.push_str(&npc.to_string());
        for n in c {
            let _ = write!(s, " {n}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {}", mesh.num_cells());
    let ty = if mesh.order() == 2 { "22" } else { "5" };
    for _ in 0..mesh.num_cells() {
        s.push_str(ty);
        s.push('\n');
    }
    if has(VtkField::U) || has(VtkField::D) || has(VtkField::AZ) {
        let _ = writeln!(s, "POINT_DATA {}", mesh.num_nodes());
    }
    if has(VtkField::U) {
        s.push_str("VECTORS u double\n");
        for u in &snap.u {
            let _ = writeln!(s, "{:e} {:e} 0", u[0], u[1]);
        }
    }
    if has(VtkField::D) {
        scalars(&mut s, "d", &snap.d);
    }
    if has(VtkField::AZ) {
        scalars(&mut s, "A_z", &snap.a);
    }
    if has(VtkField::BMagnitude) || has(VtkField::VonMises) || has(VtkField::Subdomain) {
        let _ = writeln!(s, "CELL_DATA {}", mesh.num_cells());
    }
    if has(VtkField::BMagnitude) {
        scalars(&mut s, "B_magnitude", &snap.b_magnitude);
    }
    if has(VtkField::VonMises) {
        scalars(&mut s, "von_mises", &snap.von_mises);
    }
    if has(VtkField::Subdomain) {
        s.push_str("SCALARS subdomain int 1\nLOOKUP_TABLE default\n");
        for &t in mesh.cell_tags() {
            let _ = writeln!(s, "{}", subdomain_code(t));
        }
    }
    s
}

fn scalars(s: &mut String, name: &str, v: &[f64]) {
    let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
    for x in v {
        let _ = writeln!(s, "{x:e}");
    }
}

pub fn write_vtk(mesh: &Mesh, snap: &Snapshot, fields: &[VtkField], path: &Path) -> std::io::Result<()> {
    write_atomic(path, vtk_string(mesh, snap, fields).as_bytes())
}
