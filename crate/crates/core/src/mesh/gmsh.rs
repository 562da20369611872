//! Gmsh MSH 2.2 ASCII reader and writer.
//!
//! Physical groups are mapped by name: two-dimensional groups named
//! `vacuum`, `solid`, `wire_<k>` or `notch_<k>` become cell tags,
//! one-dimensional groups named `outer_dirichlet`, `solid_dirichlet` or
//! `solid_neumann` become boundary tags. Any other name is rejected.
//!
//! Supported element types: 1 (2-node line), 2 (3-node triangle),
//! 8 (3-node line), 9 (6-node triangle) and 15 (point, ignored).

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use super::{BoundaryEdge, BoundaryTag, CellTag, Mesh, MeshError, Point};

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    parse_msh(&text)
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    std::fs::write(path, write_msh(mesh))?;
    Ok(())
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str, MeshError> {
        loop {
            match self.inner.next() {
                Some((i, l)) => {
                    self.line = i + 1;
                    let l = l.trim();
                    if !l.is_empty() {
                        return Ok(l);
                    }
                }
                None => return Err(self.err("unexpected end of file")),
            }
        }
    }

    fn err(&self, msg: impl Into<String>) -> MeshError {
        MeshError::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn expect(&mut self, what: &str) -> Result<(), MeshError> {
        let l = self.next()?;
        if l == what {
            Ok(())
        } else {
            Err(self.err(format!("expected {what}, found {l:?}")))
        }
    }

    fn count(&mut self) -> Result<usize, MeshError> {
        let l = self.next()?;
        l.parse().map_err(|_| self.err(format!("bad count {l:?}")))
    }
}

fn nums<T: std::str::FromStr>(lines: &Lines, l: &str) -> Result<Vec<T>, MeshError> {
    l.split_whitespace()
        .map(|t| t.parse::<T>().map_err(|_| lines.err(format!("bad number {t:?}"))))
        .collect()
}

enum Group {
    Cell(CellTag),
    Boundary(BoundaryTag),
}

pub fn parse_msh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let mut groups: HashMap<i64, Group> = HashMap::new();
    let mut node_ids: HashMap<i64, usize> = HashMap::new();
    let mut nodes: Vec<Point> = Vec::new();
    let mut cells: Vec<Vec<usize>> = Vec::new();
    let mut tags: Vec<CellTag> = Vec::new();
    let mut boundary: Vec<BoundaryEdge> = Vec::new();
    let mut order = None;
    let mut seen_format = false;

    loop {
        let header = match lines.inner.next() {
            Some((i, l)) => {
                lines.line = i + 1;
                let l = l.trim();
                if l.is_empty() {
                    continue;
                }
                l
            }
            None => break,
        };
        match header {
            "$MeshFormat" => {
                let l = lines.next()?;
                let f: Vec<&str> = l.split_whitespace().collect();
                if f.len() < 3 || !f[0].starts_with("2.") || f[1] != "0" {
                    return Err(lines.err(format!("unsupported format line {l:?}")));
                }
                lines.expect("$EndMeshFormat")?;
                seen_format = true;
            }
            "$PhysicalNames" => {
                let n = lines.count()?;
                for _ in 0..n {
                    let l = lines.next()?;
                    let mut it = l.splitn(3, char::is_whitespace);
                    let dim: i64 = it
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| lines.err("bad physical dimension"))?;
                    let id: i64 = it
                        .next()
                        .and_then(|t| t.trim().parse().ok())
                        .ok_or_else(|| lines.err("bad physical id"))?;
                    let name = it
                        .next()
                        .map(|t| t.trim().trim_matches('"'))
                        .ok_or_else(|| lines.err("missing physical name"))?;
                    let g = match dim {
                        2 => Group::Cell(name.parse()?),
                        1 => Group::Boundary(name.parse()?),
                        _ => continue,
                    };
                    groups.insert(id, g);
                }
                lines.expect("$EndPhysicalNames")?;
            }
            "$Nodes" => {
                let n = lines.count()?;
                for _ in 0..n {
                    let l = lines.next()?;
                    let f: Vec<f64> = nums(&lines, l)?;
                    if f.len() < 3 {
                        return Err(lines.err("node line needs id x y [z]"));
                    }
                    let id = f[0] as i64;
                    if node_ids.insert(id, nodes.len()).is_some() {
                        return Err(lines.err(format!("duplicate node id {id}")));
                    }
                    nodes.push([f[1], f[2]]);
                }
                lines.expect("$EndNodes")?;
            }
            "$Elements" => {
                let n = lines.count()?;
                for _ in 0..n {
                    let l = lines.next()?;
                    let f: Vec<i64> = nums(&lines, l)?;
                    if f.len() < 3 {
                        return Err(lines.err("short element line"));
                    }
                    let (etype, ntags) = (f[1], f[2] as usize);
                    if f.len() < 3 + ntags {
                        return Err(lines.err("element tag count exceeds line"));
                    }
                    let phys = if ntags > 0 { f[3] } else { 0 };
                    let raw = &f[3 + ntags..];
                    let (nn, eorder, is_cell) = match etype {
                        1 => (2, 1, false),
                        8 => (3, 2, false),
                        2 => (3, 1, true),
                        9 => (6, 2, true),
                        15 => continue,
                        _ => return Err(lines.err(format!("unsupported element type {etype}"))),
                    };
                    if raw.len() != nn {
                        return Err(lines.err(format!("element type {etype} needs {nn} nodes")));
                    }
                    let ids = raw
                        .iter()
                        .map(|id| {
                            node_ids
                                .get(id)
                                .copied()
                                .ok_or_else(|| lines.err(format!("unknown node id {id}")))
                        })
                        .collect::<Result<Vec<usize>, _>>()?;
                    let group = groups.get(&phys).ok_or_else(|| {
                        MeshError::Tag(format!("physical group {phys} has no name"))
                    })?;
                    match (group, is_cell) {
                        (Group::Cell(t), true) => {
                            if *order.get_or_insert(eorder) != eorder {
                                return Err(lines.err("mixed element orders"));
                            }
                            cells.push(ids);
                            tags.push(*t);
                        }
                        (Group::Boundary(t), false) => boundary.push(BoundaryEdge {
                            nodes: [ids[0], ids[1]],
                            mid: ids.get(2).copied(),
                            tag: *t,
                        }),
                        _ => {
                            return Err(MeshError::Tag(format!(
                                "physical group {phys} has the wrong dimension for element type {etype}"
                            )))
                        }
                    }
                }
                lines.expect("$EndElements")?;
            }
            other if other.starts_with("$") => {
                // Skip unknown sections.
                let end = format!("$End{}", &other[1..]);
                while lines.next()? != end {}
            }
            other => return Err(lines.err(format!("unexpected line {other:?}"))),
        }
    }
    if !seen_format {
        return Err(MeshError::Parse {
            line: 0,
            msg: "missing $MeshFormat".to_string(),
        });
    }
    if cells.is_empty() {
        return Err(MeshError::Parse {
            line: lines.line,
            msg: "no triangles".to_string(),
        });
    }
    for c in &mut cells {
        let a = super::signed_area(&nodes[c[0]], &nodes[c[1]], &nodes[c[2]]);
        if a < 0.0 {
            c.swap(1, 2);
            if c.len() == 6 {
                // midsides (0,1),(1,2),(2,0) -> (0,2),(2,1),(1,0)
                c.swap(3, 5);
            }
        }
    }
    Mesh::new(nodes, cells, tags, boundary, order.unwrap_or(1))
}

pub fn write_msh(mesh: &Mesh) -> String {
    let mut ids: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut bnd_tags: Vec<BoundaryTag> = mesh.boundary_edges().iter().map(|e| e.tag).collect();
    bnd_tags.sort();
    bnd_tags.dedup();
    let mut next = 1;
    for t in &bnd_tags {
        ids.insert(t.to_string(), (1, next));
        next += 1;
    }
    for t in mesh.subdomains() {
        ids.insert(t.to_string(), (2, next));
        next += 1;
    }
    let mut s = String::new();
    s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n");
    let mut groups: Vec<_> = ids.iter().collect();
    groups.sort_by_key(|(_, (_, id))| *id);
    let _ = writeln!(s, "$PhysicalNames\n{}", groups.len());
    for (name, (dim, id)) in groups {
        let _ = writeln!(s, "{dim} {id} \"{name}\"");
    }
    s.push_str("$EndPhysicalNames\n");
    let _ = writeln!(s, "$Nodes\n{}", mesh.num_nodes());
    for (i, p) in mesh.nodes().iter().enumerate() {
        let _ = writeln!(s, "{} {:?} {:?} 0", i + 1, p[0], p[1]);
    }
    s.push_str("$EndNodes\n");
    let n_el = mesh.boundary_edges().len() + mesh.num_cells();
    let _ = writeln!(s, "$Elements\n{n_el}");
    let mut eid = 1;
    let (ltype, ttype) = if mesh.order() == 2 { (8, 9) } else { (1, 2) };
    for e in mesh.boundary_edges() {
        let phys = ids[&e.tag.to_string()].1;
        let _ = write!(s, "{eid} {ltype} 2 {phys} {phys} {} {}", e.nodes[0] + 1, e.nodes[1] + 1);
        if let Some(m) = e.mid {
            let _ = write!(s, " {}", m + 1);
        }
        s.push('\n');
        eid += 1;
    }
    for c in 0..mesh.num_cells() {
        let phys = ids[&mesh.cell_tag(c).to_string()].1;
        let _ = write!(s, "{eid} {ttype} 2 {phys} {phys}");
        for n in mesh.cell(c) {
            let _ = write!(s, " {}", n + 1);
        }
        s.push('\n');
        eid += 1;
    }
    s.push_str("$EndElements\n");
    s
}
