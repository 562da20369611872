//! Triangular meshes with subdomain and boundary tags.
//!
//! A [`Mesh`] is immutable once built. It can be read from and written to
//! Gmsh MSH 2.2 ASCII files ([`gmsh`]) or produced by the built-in
//! generators in [`generate`].

pub mod generate;
pub mod gmsh;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use generate::{
    generate_notched_beam, generate_notched_plate, generate_wire_cylinder, rectangle, NotchSpec,
    NotchedBeamSpec, Orientation, WireCylinderSpec, WireSpec,
};

/// Smallest admissible signed triangle area in mm².
pub const MIN_AREA: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unmapped physical group: {0}")]
    Tag(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Point = [f64; 2];

/// Material region of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellTag {
    Vacuum,
    Solid,
    Wire(u32),
    Notch(u32),
}

impl CellTag {
    /// Whether the cell belongs to the deformable, fracturing body.
    pub fn is_solid(self) -> bool {
        matches!(self, CellTag::Solid)
    }

    /// Whether the cell is a current-carrying conductor (wire or notch).
    pub fn is_conductor(self) -> bool {
        matches!(self, CellTag::Wire(_) | CellTag::Notch(_))
    }
}

impl fmt::Display for CellTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellTag::Vacuum => write!(f, "vacuum"),
            CellTag::Solid => write!(f, "solid"),
            CellTag::Wire(k) => write!(f, "wire_{k}"),
            CellTag::Notch(k) => write!(f, "notch_{k}"),
        }
    }
}

impl FromStr for CellTag {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "vacuum" => return Ok(CellTag::Vacuum),
            "solid" => return Ok(CellTag::Solid),
            _ => {}
        }
        let indexed = |prefix: &str| {
            s.strip_prefix(prefix)
                .and_then(|k| k.parse::<u32>().ok())
        };
        if let Some(k) = indexed("wire_") {
            Ok(CellTag::Wire(k))
        } else if let Some(k) = indexed("notch_") {
            Ok(CellTag::Notch(k))
        } else {
            Err(MeshError::Tag(s.to_string()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    /// `A_z = 0` on the outer boundary of a vacuum box.
    OuterDirichlet,
    /// Clamped solid boundary (displacements prescribed).
    SolidDirichlet,
    /// Traction boundary of the solid.
    SolidNeumann,
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryTag::OuterDirichlet => "outer_dirichlet",
            BoundaryTag::SolidDirichlet => "solid_dirichlet",
            BoundaryTag::SolidNeumann => "solid_neumann",
        })
    }
}

impl FromStr for BoundaryTag {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "outer_dirichlet" => Ok(BoundaryTag::OuterDirichlet),
            "solid_dirichlet" => Ok(BoundaryTag::SolidDirichlet),
            "solid_neumann" => Ok(BoundaryTag::SolidNeumann),
            other => Err(MeshError::Tag(other.to_string())),
        }
    }
}

/// A tagged boundary segment. For second-order meshes `mid` holds the
/// midside node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub mid: Option<usize>,
    pub tag: BoundaryTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<Point>,
    /// 3 (order 1) or 6 (order 2) node indices per cell, vertices first,
    /// then midsides of edges (0,1), (1,2), (2,0).
    cells: Vec<Vec<usize>>,
    cell_tags: Vec<CellTag>,
    boundary: Vec<BoundaryEdge>,
    order: usize,
}

impl Mesh {
    /// Builds a mesh and checks its invariants.
    ///
    /// When `boundary` is empty, the topological outer boundary is tagged
    /// automatically: `outer_dirichlet` if the mesh contains vacuum,
    /// `solid_dirichlet` otherwise.
    pub fn new(
        nodes: Vec<Point>,
        cells: Vec<Vec<usize>>,
        cell_tags: Vec<CellTag>,
        boundary: Vec<BoundaryEdge>,
        order: usize,
    ) -> Result<Self, MeshError> {
        if order != 1 && order != 2 {
            return Err(MeshError::Geometry(format!("unsupported element order {order}")));
        }
        if cells.len() != cell_tags.len() {
            return Err(MeshError::Geometry(
                "cell and tag counts differ".to_string(),
            ));
        }
        let npc = if order == 1 { 3 } else { 6 };
        for (c, cell) in cells.iter().enumerate() {
            if cell.len() != npc {
                return Err(MeshError::Geometry(format!(
                    "cell {c} has {} nodes, expected {npc}",
                    cell.len()
                )));
            }
            if let Some(&bad) = cell.iter().find(|&&n| n >= nodes.len()) {
                return Err(MeshError::Geometry(format!(
                    "cell {c} references node {bad} of {}",
                    nodes.len()
                )));
            }
            let a = signed_area(&nodes[cell[0]], &nodes[cell[1]], &nodes[cell[2]]);
            if a <= MIN_AREA {
                return Err(MeshError::Geometry(format!(
                    "cell {c} has signed area {a:e}"
                )));
            }
        }
        for e in &boundary {
            if e.nodes.iter().chain(e.mid.iter()).any(|&n| n >= nodes.len()) {
                return Err(MeshError::Geometry(
                    "boundary edge references missing node".to_string(),
                ));
            }
        }
        let mut mesh = Mesh {
            nodes,
            cells,
            cell_tags,
            boundary,
            order,
        };
        let outer = mesh.outer_edges();
        if mesh.boundary.is_empty() {
            let tag = if mesh.cell_tags.contains(&CellTag::Vacuum) {
                BoundaryTag::OuterDirichlet
            } else {
                BoundaryTag::SolidDirichlet
            };
            mesh.boundary = outer
                .into_iter()
                .map(|(nodes, mid)| BoundaryEdge { nodes, mid, tag })
                .collect();
        } else {
            let tagged: BTreeSet<[usize; 2]> =
                mesh.boundary.iter().map(|e| sorted(e.nodes)).collect();
            if let Some((e, _)) = outer.iter().find(|(e, _)| !tagged.contains(&sorted(*e))) {
                return Err(MeshError::Geometry(format!(
                    "outer boundary edge {:?} carries no boundary tag",
                    e
                )));
            }
        }
        Ok(mesh)
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c]
    }

    pub fn cell_tags(&self) -> &[CellTag] {
        &self.cell_tags
    }

    pub fn cell_tag(&self, c: usize) -> CellTag {
        self.cell_tags[c]
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Vertex coordinates of cell `c`.
    pub fn vertices(&self, c: usize) -> [Point; 3] {
        let cell = &self.cells[c];
        [self.nodes[cell[0]], self.nodes[cell[1]], self.nodes[cell[2]]]
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        let [a, b, d] = self.vertices(c);
        signed_area(&a, &b, &d)
    }

    pub fn centroid(&self, c: usize) -> Point {
        let [a, b, d] = self.vertices(c);
        [(a[0] + b[0] + d[0]) / 3.0, (a[1] + b[1] + d[1]) / 3.0]
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.cell_area(c)).sum()
    }

    pub fn area_of(&self, tag: CellTag) -> f64 {
        (0..self.num_cells())
            .filter(|&c| self.cell_tags[c] == tag)
            .map(|c| self.cell_area(c))
            .sum()
    }

    /// Distinct subdomain tags present, sorted.
    pub fn subdomains(&self) -> Vec<CellTag> {
        let set: BTreeSet<CellTag> = self.cell_tags.iter().copied().collect();
        set.into_iter().collect()
    }

    /// Edges that belong to exactly one cell, with their midside node.
    pub fn outer_edges(&self) -> Vec<([usize; 2], Option<usize>)> {
        let mut count: HashMap<[usize; 2], (usize, [usize; 2], Option<usize>)> = HashMap::new();
        for cell in &self.cells {
            for k in 0..3 {
                let e = [cell[k], cell[(k + 1) % 3]];
                let mid = if self.order == 2 { Some(cell[3 + k]) } else { None };
                let entry = count.entry(sorted(e)).or_insert((0, e, mid));
                entry.0 += 1;
            }
        }
        let mut out: Vec<_> = count
            .into_values()
            .filter(|(n, _, _)| *n == 1)
            .map(|(_, e, m)| (e, m))
            .collect();
        out.sort();
        out
    }

    /// All nodes on the topological outer boundary (including midsides).
    pub fn outer_boundary_nodes(&self) -> BTreeSet<usize> {
        self.outer_edges()
            .into_iter()
            .flat_map(|(e, m)| e.into_iter().chain(m))
            .collect()
    }

    /// Nodes of boundary edges carrying `tag` (including midsides).
    pub fn tagged_boundary_nodes(&self, tag: BoundaryTag) -> BTreeSet<usize> {
        self.boundary
            .iter()
            .filter(|e| e.tag == tag)
            .flat_map(|e| e.nodes.into_iter().chain(e.mid))
            .collect()
    }

    /// Smallest and largest edge length over all cells.
    pub fn edge_length_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for c in 0..self.num_cells() {
            let v = self.vertices(c);
            for k in 0..3 {
                let a = v[k];
                let b = v[(k + 1) % 3];
                let l = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                lo = lo.min(l);
                hi = hi.max(l);
            }
        }
        (lo, hi)
    }

    /// Mean edge length over cells matching `tag`.
    pub fn mean_edge_length(&self, tag: Option<CellTag>) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for c in 0..self.num_cells() {
            if tag.is_some_and(|t| t != self.cell_tags[c]) {
                continue;
            }
            let v = self.vertices(c);
            for k in 0..3 {
                let a = v[k];
                let b = v[(k + 1) % 3];
                sum += ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    /// Converts a first-order mesh to second order by inserting edge
    /// midpoints. Second-order meshes are returned unchanged.
    pub fn to_order2(&self) -> Mesh {
        if self.order == 2 {
            return self.clone();
        }
        let mut nodes = self.nodes.clone();
        let mut mids: HashMap<[usize; 2], usize> = HashMap::new();
        let mut mid_of = |a: usize, b: usize, nodes: &mut Vec<Point>| -> usize {
            *mids.entry(sorted([a, b])).or_insert_with(|| {
                let (pa, pb) = (nodes[a], nodes[b]);
                nodes.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                nodes.len() - 1
            })
        };
        let cells: Vec<Vec<usize>> = self
            .cells
            .iter()
            .map(|c| {
                let m01 = mid_of(c[0], c[1], &mut nodes);
                let m12 = mid_of(c[1], c[2], &mut nodes);
                let m20 = mid_of(c[2], c[0], &mut nodes);
                vec![c[0], c[1], c[2], m01, m12, m20]
            })
            .collect();
        let boundary = self
            .boundary
            .iter()
            .map(|e| BoundaryEdge {
                nodes: e.nodes,
                mid: Some(mid_of(e.nodes[0], e.nodes[1], &mut nodes)),
                tag: e.tag,
            })
            .collect();
        Mesh {
            nodes,
            cells,
            cell_tags: self.cell_tags.clone(),
            boundary,
            order: 2,
        }
    }

    /// Locates the cell containing `p`, returning it with barycentric
    /// coordinates. Linear scan; meant for probes and tests.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        const TOL: f64 = 1e-12;
        (0..self.num_cells()).find_map(|c| {
            let l = barycentric(&self.vertices(c), p);
            l.iter().all(|&x| x >= -TOL).then_some((c, l))
        })
    }
}

pub fn signed_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

pub fn barycentric(v: &[Point; 3], p: Point) -> [f64; 3] {
    let area = signed_area(&v[0], &v[1], &v[2]);
    let l0 = signed_area(&p, &v[1], &v[2]) / area;
    let l1 = signed_area(&v[0], &p, &v[2]) / area;
    [l0, l1, 1.0 - l0 - l1]
}

fn sorted(e: [usize; 2]) -> [usize; 2] {
    if e[0] <= e[1] {
        e
    } else {
        [e[1], e[0]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Mesh {
        Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![vec![0, 1, 2], vec![0, 2, 3]],
            vec![CellTag::Solid; 2],
            vec![],
            1,
        )
        .unwrap()
    }

    #[test]
    fn auto_tags_outer_boundary() {
        let m = square();
        assert_eq!(m.boundary_edges().len(), 4);
        assert!(m
            .boundary_edges()
            .iter()
            .all(|e| e.tag == BoundaryTag::SolidDirichlet));
        assert!((m.total_area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_clockwise_cell() {
        let err = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![vec![0, 2, 1]],
            vec![CellTag::Solid],
            vec![],
            1,
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::Geometry(_)));
    }

    #[test]
    fn rejects_out_of_range_node() {
        let err = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![vec![0, 1, 7]],
            vec![CellTag::Solid],
            vec![],
            1,
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::Geometry(_)));
    }

    #[test]
    fn tag_names_round_trip() {
        for t in [
            CellTag::Vacuum,
            CellTag::Solid,
            CellTag::Wire(3),
            CellTag::Notch(10),
        ] {
            assert_eq!(t.to_string().parse::<CellTag>().unwrap(), t);
        }
        assert!("copper".parse::<CellTag>().is_err());
        assert!("wire_x".parse::<CellTag>().is_err());
    }

    #[test]
    fn order2_shares_midside_nodes() {
        let m = square().to_order2();
        assert_eq!(m.order(), 2);
        // 4 vertices + 5 edges
        assert_eq!(m.num_nodes(), 9);
        assert!(m.boundary_edges().iter().all(|e| e.mid.is_some()));
    }

    #[test]
    fn locate_finds_containing_cell() {
        let m = square();
        let (c, l) = m.locate([0.75, 0.25]).unwrap();
        assert_eq!(c, 0);
        assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }
}
