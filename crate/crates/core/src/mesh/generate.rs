//! Built-in mesh generators for the example geometries.
//!
//! Geometry is described as a background region with overlapping feature
//! shapes painted on top of it in order. Feature boundaries are polygonised
//! and inserted as constraints of a Delaunay triangulation; interior points
//! come from a quadtree driven by a graded size function, jittered with a
//! seeded RNG and relaxed by a few Laplacian smoothing passes. Each triangle
//! takes the tag of the last shape containing its centroid.
//!
//! Circles are polygonised with vertices on the circle, so polygon areas
//! converge to πr² at second order in the edge length.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use rand_chacha::ChaCha8Rng;
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::{signed_area, BoundaryEdge, BoundaryTag, CellTag, Mesh, MeshError, Point};

/// Structured triangulation of an axis-aligned rectangle with `nx × ny`
/// squares, each split along its diagonal. All cells get `tag`; the outer
/// boundary is tagged automatically.
pub fn rectangle(min: Point, max: Point, nx: usize, ny: usize, tag: CellTag) -> Mesh {
    assert!(nx > 0 && ny > 0);
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([
                min[0] + (max[0] - min[0]) * i as f64 / nx as f64,
                min[1] + (max[1] - min[1]) * j as f64 / ny as f64,
            ]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            cells.push(vec![a, b, c]);
            cells.push(vec![a, c, d]);
        }
    }
    let tags = vec![tag; cells.len()];
    Mesh::new(nodes, cells, tags, vec![], 1).expect("structured rectangle is valid")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Circle { center: Point, radius: f64 },
    Rect { min: Point, max: Point },
}

impl Shape {
    fn bbox(&self) -> (Point, Point) {
        match *self {
            Shape::Circle { center: c, radius: r } => ([c[0] - r, c[1] - r], [c[0] + r, c[1] + r]),
            Shape::Rect { min, max } => (min, max),
        }
    }

    /// Distance from `p` to the shape (0 inside).
    fn distance(&self, p: Point) -> f64 {
        match *self {
            Shape::Circle { center: c, radius: r } => (dist(p, c) - r).max(0.0),
            Shape::Rect { min, max } => {
                let dx = (min[0] - p[0]).max(p[0] - max[0]).max(0.0);
                let dy = (min[1] - p[1]).max(p[1] - max[1]).max(0.0);
                (dx * dx + dy * dy).sqrt()
            }
        }
    }

    /// Counter-clockwise boundary polygon with edge length close to `h`.
    fn polygon(&self, h: f64) -> Vec<Point> {
        match *self {
            Shape::Circle { center: c, radius: r } => {
                // Even count keeps the polygon symmetric about both axes.
                let mut n = ((2.0 * PI * r / h).ceil() as usize).max(12);
                n += n % 2;
                (0..n)
                    .map(|j| {
                        let t = 2.0 * PI * j as f64 / n as f64;
                        [c[0] + r * t.cos(), c[1] + r * t.sin()]
                    })
                    .collect()
            }
            Shape::Rect { min, max } => {
                vec![min, [max[0], min[1]], max, [min[0], max[1]]]
            }
        }
    }
}

/// A painted feature: a polygon (given or derived from a shape) with a tag
/// and a target element size.
#[derive(Debug, Clone)]
struct Feature {
    tag: CellTag,
    h: f64,
    shape: Option<Shape>,
    polygon: Vec<Point>,
}

/// Planar domain description consumed by [`Domain::triangulate`].
#[derive(Debug, Clone)]
struct Domain {
    outer: Feature,
    features: Vec<Feature>,
    h_max: f64,
    grading: f64,
    seed: u64,
    smoothing: usize,
    mirror_x_axis: bool,
}

impl Domain {
    fn new(outer_shape: Shape, tag: CellTag, h: f64) -> Self {
        Self {
            outer: Feature {
                tag,
                h,
                shape: Some(outer_shape),
                polygon: vec![],
            },
            features: vec![],
            h_max: h,
            grading: 0.3,
            seed: 7,
            smoothing: 3,
            mirror_x_axis: false,
        }
    }

    fn add_shape(&mut self, shape: Shape, tag: CellTag, h: f64) {
        self.features.push(Feature {
            tag,
            h,
            shape: Some(shape),
            polygon: vec![],
        });
    }

    fn add_polygon(&mut self, polygon: Vec<Point>, tag: CellTag, h: f64) {
        self.features.push(Feature {
            tag,
            h,
            shape: None,
            polygon,
        });
    }

    fn size_at(&self, p: Point) -> f64 {
        let mut h = self.h_max.max(self.outer.h);
        if self.outer.h < h {
            h = self.outer.h;
        }
        for f in &self.features {
            let d = match f.shape {
                Some(s) => s.distance(p),
                None => polygon_distance(&f.polygon, p),
            };
            h = h.min(f.h + self.grading * d);
        }
        h
    }

    fn triangulate(
        mut self,
        tagger: impl Fn(Point, Point, bool) -> Option<BoundaryTag>,
    ) -> Result<Mesh, MeshError> {
        // Polygonise features.
        let mut all: Vec<&mut Feature> = std::iter::once(&mut self.outer)
            .chain(self.features.iter_mut())
            .collect();
        for f in all.iter_mut() {
            if let Some(s) = f.shape {
                f.polygon = s.polygon(f.h);
            }
        }
        let this = &self;
        // Subdivide polygon edges by the local size and collect constraints.
        let mut pts = PointSet::default();
        let mut segments: Vec<[usize; 2]> = Vec::new();
        let loops: Vec<&Feature> = std::iter::once(&this.outer).chain(&this.features).collect();
        for f in &loops {
            let poly = &f.polygon;
            let n = poly.len();
            let mut ring = Vec::new();
            for k in 0..n {
                let a = poly[k];
                let b = poly[(k + 1) % n];
                let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                let hl = this.size_at(mid).min(f.h.max(this.size_at(mid)));
                let m = ((dist(a, b) / hl).round() as usize).max(1);
                for s in 0..m {
                    let t = s as f64 / m as f64;
                    ring.push(pts.insert([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]));
                }
            }
            for k in 0..ring.len() {
                let e = [ring[k], ring[(k + 1) % ring.len()]];
                if e[0] != e[1] {
                    segments.push(e);
                }
            }
        }
        segments.sort_unstable_by_key(|e| (e[0].min(e[1]), e[0].max(e[1])));
        segments.dedup_by_key(|e| (e[0].min(e[1]), e[0].max(e[1])));

        let mirror = this.mirror_x_axis;
        let tol = 1e-12;
        if mirror {
            for &p in &pts.points {
                if p[1].abs() <= tol {
                    continue;
                }
                let q = [p[0], -p[1]];
                if pts.find(q).is_none() {
                    return Err(MeshError::Geometry(
                        "constraint set is not mirror symmetric".to_string(),
                    ));
                }
            }
        }

        // Axis points and constraints for symmetric meshes.
        let outer_poly = &this.outer.polygon;
        if mirror {
            let (lo, hi) = polygon_bbox(outer_poly);
            let mut xs: Vec<f64> = pts
                .points
                .iter()
                .filter(|p| p[1].abs() <= tol)
                .map(|p| p[0])
                .collect();
            xs.sort_by(f64::total_cmp);
            let mut axis = Vec::new();
            for w in xs.windows(2) {
                let (a, b) = ([w[0], 0.0], [w[1], 0.0]);
                let mid = [0.5 * (a[0] + b[0]), 0.0];
                if !point_in_polygon(outer_poly, mid) || mid[0] < lo[0] || mid[0] > hi[0] {
                    continue;
                }
                let m = ((dist(a, b) / this.size_at(mid)).round() as usize).max(1);
                let mut prev = pts.find(a).expect("axis point");
                for s in 1..=m {
                    let t = s as f64 / m as f64;
                    let id = pts.insert([a[0] + t * (b[0] - a[0]), 0.0]);
                    axis.push([prev, id]);
                    prev = id;
                }
            }
            segments.extend(axis);
        }
        let n_fixed = pts.points.len();

        // Interior points from a size-driven quadtree.
        let seg_index = SegmentIndex::new(&pts.points, &segments, this.min_h());
        let mut rng = ChaCha8Rng::seed_from_u64(this.seed);
        let (lo, hi) = polygon_bbox(outer_poly);
        let side = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let mut stack = vec![(lo, side)];
        let mut interior = Vec::new();
        while let Some((o, s)) = stack.pop() {
            let c = [o[0] + 0.5 * s, o[1] + 0.5 * s];
            // Skip boxes fully outside the domain.
            if polygon_distance(outer_poly, c) > s && !point_in_polygon(outer_poly, c) {
                continue;
            }
            let h = this.size_at(c);
            if s > h {
                let t = 0.5 * s;
                for (dx, dy) in [(0.0, 0.0), (t, 0.0), (0.0, t), (t, t)] {
                    stack.push(([o[0] + dx, o[1] + dy], t));
                }
                continue;
            }
            let p = [
                c[0] + s * rng.gen_range(-0.15..0.15),
                c[1] + s * rng.gen_range(-0.15..0.15),
            ];
            interior.push(p);
        }
        interior.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        let keep = |p: Point| -> bool {
            if !point_in_polygon(outer_poly, p) {
                return false;
            }
            if mirror && p[1] < 0.0 {
                return false;
            }
            let h = this.size_at(p);
            if mirror && p[1] < 0.5 * h {
                return false;
            }
            seg_index.min_distance(p, 0.55 * h) >= 0.55 * h
        };
        let mut free: Vec<Point> = interior.into_iter().filter(|&p| keep(p)).collect();

        let upper = |p: &Point| !mirror || p[1] >= -tol;
        let fixed: Vec<Point> = pts.points.clone();
        let constraint_upper: Vec<[usize; 2]> = segments
            .iter()
            .copied()
            .filter(|e| upper(&fixed[e[0]]) && upper(&fixed[e[1]]))
            .collect();

        let mut tri;
        let mut iteration = 0;
        loop {
            let mut verts: Vec<Point> = fixed.clone();
            verts.extend(free.iter().copied());
            let keep_vert: Vec<bool> = verts.iter().map(upper).collect();
            // Compact to the upper half when mirroring.
            let mut remap = vec![usize::MAX; verts.len()];
            let mut compact = Vec::new();
            for (i, v) in verts.iter().enumerate() {
                if keep_vert[i] {
                    remap[i] = compact.len();
                    compact.push(*v);
                }
            }
            let edges: Vec<[usize; 2]> = constraint_upper
                .iter()
                .map(|e| [remap[e[0]], remap[e[1]]])
                .collect();
            tri = cdt(&compact, &edges)?;
            // Keep triangles inside the outer polygon.
            tri.retain(|t| {
                let c = centroid(&compact, t);
                point_in_polygon(outer_poly, c) && (!mirror || c[1] > 0.0)
            });
            let verts = compact;
            let n_fixed_upper = remap[..n_fixed].iter().filter(|&&r| r != usize::MAX).count();
            if iteration == this.smoothing {
                free = verts;
                break;
            }
            iteration += 1;
            // Laplacian smoothing of interior points.
            let mut sum = vec![[0.0, 0.0]; verts.len()];
            let mut cnt = vec![0usize; verts.len()];
            for t in &tri {
                for k in 0..3 {
                    let (a, b) = (t[k], t[(k + 1) % 3]);
                    for (i, j) in [(a, b), (b, a)] {
                        sum[i][0] += verts[j][0];
                        sum[i][1] += verts[j][1];
                        cnt[i] += 1;
                    }
                }
            }
            let mut moved = Vec::new();
            for i in n_fixed_upper..verts.len() {
                if cnt[i] == 0 {
                    continue;
                }
                let p = [sum[i][0] / cnt[i] as f64, sum[i][1] / cnt[i] as f64];
                if keep(p) {
                    moved.push(p);
                }
            }
            free = moved;
        }
        let mut verts = free;

        // Mirror the upper half.
        if mirror {
            let n = verts.len();
            let mut image = vec![0usize; n];
            for i in 0..n {
                if verts[i][1].abs() <= tol {
                    image[i] = i;
                } else {
                    image[i] = verts.len();
                    let p = verts[i];
                    verts.push([p[0], -p[1]]);
                }
            }
            let lower: Vec<[usize; 3]> = tri
                .iter()
                .map(|t| [image[t[0]], image[t[2]], image[t[1]]])
                .collect();
            tri.extend(lower);
        }

        // Classify and drop unused vertices.
        let classify = |c: Point| -> CellTag {
            let mut tag = this.outer.tag;
            for f in &this.features {
                if point_in_polygon(&f.polygon, c) {
                    tag = f.tag;
                }
            }
            tag
        };
        let mut used = vec![usize::MAX; verts.len()];
        let mut nodes = Vec::new();
        let mut cells = Vec::with_capacity(tri.len());
        let mut tags = Vec::with_capacity(tri.len());
        for t in &tri {
            let c = centroid(&verts, t);
            let mut cell = Vec::with_capacity(3);
            for &v in t {
                if used[v] == usize::MAX {
                    used[v] = nodes.len();
                    nodes.push(verts[v]);
                }
                cell.push(used[v]);
            }
            if signed_area(&nodes[cell[0]], &nodes[cell[1]], &nodes[cell[2]]) < 0.0 {
                cell.swap(1, 2);
            }
            cells.push(cell);
            tags.push(classify(c));
        }

        // Boundary tags.
        let mut edge_count: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        for c in &cells {
            for k in 0..3 {
                let (a, b) = (c[k], c[(k + 1) % 3]);
                *edge_count.entry([a.min(b), a.max(b)]).or_default() += 1;
            }
        }
        let mut boundary = Vec::new();
        for (e, n) in edge_count {
            let (pa, pb) = (nodes[e[0]], nodes[e[1]]);
            if let Some(tag) = tagger(pa, pb, n == 1) {
                boundary.push(BoundaryEdge {
                    nodes: e,
                    mid: None,
                    tag,
                });
            }
        }
        Mesh::new(nodes, cells, tags, boundary, 1)
    }

    fn min_h(&self) -> f64 {
        self.features
            .iter()
            .map(|f| f.h)
            .fold(self.outer.h, f64::min)
    }
}

#[derive(Default)]
struct PointSet {
    points: Vec<Point>,
    index: HashMap<(u64, u64), usize>,
}

impl PointSet {
    fn key(p: Point) -> (u64, u64) {
        // Normalise signed zero so mirrored points hash alike.
        ((p[0] + 0.0).to_bits(), (p[1] + 0.0).to_bits())
    }

    fn insert(&mut self, p: Point) -> usize {
        let p = [snap(p[0]), snap(p[1])];
        let k = Self::key(p);
        if let Some(&i) = self.index.get(&k) {
            return i;
        }
        self.points.push(p);
        self.index.insert(k, self.points.len() - 1);
        self.points.len() - 1
    }

    fn find(&self, p: Point) -> Option<usize> {
        self.index.get(&Self::key([snap(p[0]), snap(p[1])])).copied()
    }
}

/// Rounds to a 1e-12 grid so that coordinates computed along different
/// paths (e.g. a point and its mirror image) compare equal.
fn snap(x: f64) -> f64 {
    let s = (x * 1e12).round() / 1e12;
    if s == 0.0 {
        0.0
    } else {
        s
    }
}

/// Uniform grid over constraint segments for distance queries.
struct SegmentIndex<'a> {
    pts: &'a [Point],
    cell: f64,
    grid: HashMap<(i64, i64), Vec<[usize; 2]>>,
}

impl<'a> SegmentIndex<'a> {
    fn new(pts: &'a [Point], segments: &[[usize; 2]], cell: f64) -> Self {
        let cell = cell.max(1e-9);
        let mut grid: HashMap<(i64, i64), Vec<[usize; 2]>> = HashMap::new();
        for &e in segments {
            let (a, b) = (pts[e[0]], pts[e[1]]);
            let (i0, j0) = (
                (a[0].min(b[0]) / cell).floor() as i64,
                (a[1].min(b[1]) / cell).floor() as i64,
            );
            let (i1, j1) = (
                (a[0].max(b[0]) / cell).floor() as i64,
                (a[1].max(b[1]) / cell).floor() as i64,
            );
            for i in i0..=i1 {
                for j in j0..=j1 {
                    grid.entry((i, j)).or_default().push(e);
                }
            }
        }
        Self { pts, cell, grid }
    }

    /// Distance from `p` to the nearest segment, or `radius` if none is
    /// closer than `radius`.
    fn min_distance(&self, p: Point, radius: f64) -> f64 {
        let r = (radius / self.cell).ceil() as i64;
        let (ci, cj) = ((p[0] / self.cell).floor() as i64, (p[1] / self.cell).floor() as i64);
        let mut best = radius;
        for i in ci - r..=ci + r {
            for j in cj - r..=cj + r {
                if let Some(list) = self.grid.get(&(i, j)) {
                    for e in list {
                        best = best.min(segment_distance(p, self.pts[e[0]], self.pts[e[1]]));
                    }
                }
            }
        }
        best
    }
}

fn cdt(verts: &[Point], edges: &[[usize; 2]]) -> Result<Vec<[usize; 3]>, MeshError> {
    let v: Vec<Point2<f64>> = verts.iter().map(|p| Point2::new(p[0], p[1])).collect();
    let mut conflict = false;
    let t = ConstrainedDelaunayTriangulation::<Point2<f64>>::try_bulk_load_cdt(
        v,
        edges.to_vec(),
        |_| conflict = true,
    )
    .map_err(|e| MeshError::Geometry(format!("triangulation failed: {e:?}")))?;
    if conflict {
        return Err(MeshError::Geometry("feature boundaries intersect".to_string()));
    }
    if t.num_vertices() != verts.len() {
        return Err(MeshError::Geometry("duplicate generator points".to_string()));
    }
    Ok(t
        .inner_faces()
        .map(|f| {
            let [a, b, c] = f.vertices();
            [a.fix().index(), b.fix().index(), c.fix().index()]
        })
        .collect())
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn centroid(v: &[Point], t: &[usize; 3]) -> Point {
    [
        (v[t[0]][0] + v[t[1]][0] + v[t[2]][0]) / 3.0,
        (v[t[0]][1] + v[t[1]][1] + v[t[2]][1]) / 3.0,
    ]
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let l2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if l2 > 0.0 {
        (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

fn point_in_polygon(poly: &[Point], p: Point) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1])
            && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0]
        {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn polygon_distance(poly: &[Point], p: Point) -> f64 {
    if point_in_polygon(poly, p) {
        return 0.0;
    }
    let n = poly.len();
    (0..n)
        .map(|k| segment_distance(p, poly[k], poly[(k + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

fn polygon_bbox(poly: &[Point]) -> (Point, Point) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in poly {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

fn shapes_overlap(a: &Shape, b: &Shape, clearance: f64) -> bool {
    match (*a, *b) {
        (Shape::Circle { center: c1, radius: r1 }, Shape::Circle { center: c2, radius: r2 }) => {
            dist(c1, c2) < r1 + r2 + clearance
        }
        (Shape::Circle { center, radius }, r @ Shape::Rect { .. })
        | (r @ Shape::Rect { .. }, Shape::Circle { center, radius }) => {
            r.distance(center) < radius + clearance
        }
        (Shape::Rect { min: a0, max: a1 }, Shape::Rect { min: b0, max: b1 }) => {
            a0[0] < b1[0] + clearance
                && b0[0] < a1[0] + clearance
                && a0[1] < b1[1] + clearance
                && b0[1] < a1[1] + clearance
        }
    }
}

fn shape_inside(inner: &Shape, outer: &Shape, clearance: f64) -> bool {
    let (lo, hi) = inner.bbox();
    match *outer {
        Shape::Rect { min, max } => {
            lo[0] > min[0] + clearance
                && lo[1] > min[1] + clearance
                && hi[0] < max[0] - clearance
                && hi[1] < max[1] - clearance
        }
        Shape::Circle { center, radius } => match *inner {
            Shape::Circle { center: c, radius: r } => dist(c, center) + r < radius - clearance,
            Shape::Rect { min, max } => [min, max, [min[0], max[1]], [max[0], min[1]]]
                .iter()
                .all(|&p| dist(p, center) < radius - clearance),
        },
    }
}

/// Parameters of the wire-wound cylinder (annulus in a vacuum disk).
#[derive(Debug, Clone, PartialEq)]
pub struct WireCylinderSpec {
    pub r_v: f64,
    pub r_1: f64,
    pub thickness: f64,
    pub n_wires: usize,
    pub r_w: f64,
    /// Element size in the annulus and wires.
    pub h: f64,
    /// Element size at the far vacuum boundary.
    pub h_max: f64,
    /// Radial clearance between a wire and the annulus.
    pub gap: f64,
    pub grading: f64,
    pub seed: u64,
    /// Build the mesh mirror-symmetric about the x axis.
    pub mirror: bool,
}

impl WireCylinderSpec {
    pub fn new(r_v: f64, r_1: f64, thickness: f64, n_wires: usize, r_w: f64, h: f64) -> Self {
        Self {
            r_v,
            r_1,
            thickness,
            n_wires,
            r_w,
            h,
            h_max: (r_v / 10.0).max(h),
            gap: r_w,
            grading: 0.25,
            seed: 7,
            mirror: true,
        }
    }

    /// Wire centers; even indices lie inside the annulus, odd ones outside.
    pub fn wire_centers(&self) -> Vec<Point> {
        (0..self.n_wires)
            .map(|k| {
                let theta = 2.0 * PI * k as f64 / self.n_wires as f64;
                let rc = if k % 2 == 0 {
                    self.r_1 - self.gap - self.r_w
                } else {
                    self.r_1 + self.thickness + self.gap + self.r_w
                };
                [rc * theta.cos(), rc * theta.sin()]
            })
            .collect()
    }
}

/// Vacuum disk of radius `r_v` containing a SOLID annulus and `n_wires`
/// WIRE disks alternating inside/outside the annulus. Wires are numbered
/// from 1 in counter-clockwise order starting on the positive x axis.
pub fn generate_wire_cylinder(spec: &WireCylinderSpec) -> Result<Mesh, MeshError> {
    let s = spec;
    if !(s.h > 0.0 && s.r_w > 0.0 && s.r_w < s.r_1 && s.r_1 + s.thickness < s.r_v && s.thickness > 0.0)
    {
        return Err(MeshError::Geometry(
            "need 0 < r_w < r_1 < r_1 + thickness < r_v and h > 0".to_string(),
        ));
    }
    let centers = s.wire_centers();
    let wires: Vec<Shape> = centers
        .iter()
        .map(|&c| Shape::Circle {
            center: c,
            radius: s.r_w,
        })
        .collect();
    let ring_out = Shape::Circle {
        center: [0.0, 0.0],
        radius: s.r_1 + s.thickness,
    };
    let clearance = 0.5 * s.h;
    for (k, w) in wires.iter().enumerate() {
        let c = centers[k];
        let rc = dist(c, [0.0, 0.0]);
        let clear_inner = if k % 2 == 0 {
            rc + s.r_w < s.r_1 - clearance && rc - s.r_w > clearance
        } else {
            rc - s.r_w > s.r_1 + s.thickness + clearance
        };
        if !clear_inner || !shape_inside(w, &Shape::Circle { center: [0.0, 0.0], radius: s.r_v }, clearance) {
            return Err(MeshError::Geometry(format!("wire {} overlaps the annulus or boundary", k + 1)));
        }
        for w2 in &wires[..k] {
            if shapes_overlap(w, w2, clearance) {
                return Err(MeshError::Geometry(format!("wire {} overlaps another wire", k + 1)));
            }
        }
    }
    let mut dom = Domain::new(
        Shape::Circle {
            center: [0.0, 0.0],
            radius: s.r_v,
        },
        CellTag::Vacuum,
        s.h_max,
    );
    dom.h_max = s.h_max;
    dom.grading = s.grading;
    dom.seed = s.seed;
    dom.mirror_x_axis = s.mirror;
    dom.add_shape(ring_out, CellTag::Solid, s.h);
    dom.add_shape(
        Shape::Circle {
            center: [0.0, 0.0],
            radius: s.r_1,
        },
        CellTag::Vacuum,
        s.h,
    );
    for (k, w) in wires.into_iter().enumerate() {
        dom.add_shape(w, CellTag::Wire(k as u32 + 1), s.h.min(s.r_w / 2.0));
    }
    dom.triangulate(|_, _, outer| outer.then_some(BoundaryTag::OuterDirichlet))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Horizontal,
    Vertical,
}

/// A thin rectangular notch of the given length; its width defaults to
/// twice the element size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NotchSpec {
    pub center: Point,
    pub length: f64,
    pub orientation: Orientation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireSpec {
    pub center: Point,
    pub radius: f64,
}

/// SOLID square `(0, side)²` with NOTCH and WIRE subdomains; the outer
/// boundary is tagged SOLID_DIRICHLET.
pub fn generate_notched_plate(
    side: f64,
    notches: &[NotchSpec],
    wires: &[WireSpec],
    h: f64,
) -> Result<Mesh, MeshError> {
    generate_notched_plate_seeded(side, notches, wires, h, 7)
}

pub fn generate_notched_plate_seeded(
    side: f64,
    notches: &[NotchSpec],
    wires: &[WireSpec],
    h: f64,
    seed: u64,
) -> Result<Mesh, MeshError> {
    if !(side > 0.0 && h > 0.0) {
        return Err(MeshError::Geometry("side and h must be positive".to_string()));
    }
    let plate = Shape::Rect {
        min: [0.0, 0.0],
        max: [side, side],
    };
    let mut shapes = Vec::new();
    for n in notches {
        let w = n.width.unwrap_or(2.0 * h);
        let (hx, hy) = match n.orientation {
            Orientation::Horizontal => (0.5 * n.length, 0.5 * w),
            Orientation::Vertical => (0.5 * w, 0.5 * n.length),
        };
        shapes.push(Shape::Rect {
            min: [n.center[0] - hx, n.center[1] - hy],
            max: [n.center[0] + hx, n.center[1] + hy],
        });
    }
    for w in wires {
        shapes.push(Shape::Circle {
            center: w.center,
            radius: w.radius,
        });
    }
    for (k, s) in shapes.iter().enumerate() {
        if !shape_inside(s, &plate, 0.5 * h) {
            return Err(MeshError::Geometry(format!("feature {} is not strictly inside the plate", k + 1)));
        }
        for s2 in &shapes[..k] {
            if shapes_overlap(s, s2, 0.5 * h) {
                return Err(MeshError::Geometry(format!("feature {} overlaps another feature", k + 1)));
            }
        }
    }
    let mut dom = Domain::new(plate, CellTag::Solid, h);
    dom.seed = seed;
    for (k, s) in shapes.into_iter().enumerate() {
        let tag = if k < notches.len() {
            CellTag::Notch(k as u32 + 1)
        } else {
            CellTag::Wire((k - notches.len()) as u32 + 1)
        };
        dom.add_shape(s, tag, h);
    }
    dom.triangulate(|_, _, outer| outer.then_some(BoundaryTag::SolidDirichlet))
}

/// Parameters of the simply supported notched beam in a vacuum disk.
#[derive(Debug, Clone, PartialEq)]
pub struct NotchedBeamSpec {
    pub r_v: f64,
    pub disk_center: Point,
    pub length: f64,
    pub height: f64,
    pub notch_x: f64,
    pub notch_depth: f64,
    /// Defaults to twice the beam element size.
    pub notch_width: Option<f64>,
    pub wires: Vec<WireSpec>,
    /// Centers (x) of the two support segments on the bottom face.
    pub supports: Vec<f64>,
    pub support_length: f64,
    pub h_beam: f64,
    pub h_wire: f64,
    pub h_max: f64,
    pub grading: f64,
    pub seed: u64,
}

impl Default for NotchedBeamSpec {
    fn default() -> Self {
        Self {
            r_v: 8.0,
            disk_center: [2.0, 1.0],
            length: 4.0,
            height: 2.0,
            notch_x: 2.0,
            notch_depth: 0.8,
            notch_width: None,
            wires: vec![
                WireSpec {
                    center: [2.0, 3.25],
                    radius: 0.5,
                },
                WireSpec {
                    center: [2.0, -1.25],
                    radius: 0.5,
                },
            ],
            supports: vec![0.2, 3.8],
            support_length: 0.2,
            h_beam: 0.05,
            h_wire: 0.1,
            h_max: 1.0,
            grading: 0.3,
            seed: 7,
        }
    }
}

/// Iron beam `(0, length) × (0, height)` with an open notch rising from the
/// bottom face, two wires, all inside a vacuum disk. The notch is vacuum.
/// Bottom-face support segments are tagged SOLID_DIRICHLET, the disk
/// boundary OUTER_DIRICHLET.
pub fn generate_notched_beam(spec: &NotchedBeamSpec) -> Result<Mesh, MeshError> {
    let s = spec;
    let w = s.notch_width.unwrap_or(2.0 * s.h_beam);
    let (xl, xr) = (s.notch_x - 0.5 * w, s.notch_x + 0.5 * w);
    if !(xl > 0.0 && xr < s.length && s.notch_depth < s.height && s.notch_depth > 0.0) {
        return Err(MeshError::Geometry("notch does not fit the beam".to_string()));
    }
    let mut bottom: Vec<f64> = vec![0.0, xl, xr, s.length];
    for &c in &s.supports {
        let (a, b) = (c - 0.5 * s.support_length, c + 0.5 * s.support_length);
        if a < 0.0 || b > s.length || (b > xl && a < xr) {
            return Err(MeshError::Geometry("support segment off the beam or on the notch".to_string()));
        }
        bottom.extend([a, b]);
    }
    bottom.sort_by(f64::total_cmp);
    bottom.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    // Counter-clockwise outline with the notch cut out.
    let mut beam = Vec::new();
    for &x in &bottom {
        if x == xl {
            beam.extend([[xl, 0.0], [xl, s.notch_depth], [xr, s.notch_depth]]);
        } else {
            beam.push([x, 0.0]);
        }
    }
    beam.extend([[s.length, s.height], [0.0, s.height]]);
    let disk = Shape::Circle {
        center: s.disk_center,
        radius: s.r_v,
    };
    let beam_rect = Shape::Rect {
        min: [0.0, 0.0],
        max: [s.length, s.height],
    };
    let clearance = 0.5 * s.h_beam;
    if !shape_inside(&beam_rect, &disk, clearance) {
        return Err(MeshError::Geometry("beam leaves the vacuum disk".to_string()));
    }
    for (k, wspec) in s.wires.iter().enumerate() {
        let ws = Shape::Circle {
            center: wspec.center,
            radius: wspec.radius,
        };
        if !shape_inside(&ws, &disk, clearance) || shapes_overlap(&ws, &beam_rect, clearance) {
            return Err(MeshError::Geometry(format!("wire {} overlaps the beam or boundary", k + 1)));
        }
    }
    let mut dom = Domain::new(disk, CellTag::Vacuum, s.h_max);
    dom.grading = s.grading;
    dom.seed = s.seed;
    dom.add_polygon(beam, CellTag::Solid, s.h_beam);
    for (k, wspec) in s.wires.iter().enumerate() {
        dom.add_shape(
            Shape::Circle {
                center: wspec.center,
                radius: wspec.radius,
            },
            CellTag::Wire(k as u32 + 1),
            s.h_wire,
        );
    }
    let supports: Vec<(f64, f64)> = s
        .supports
        .iter()
        .map(|&c| (c - 0.5 * s.support_length, c + 0.5 * s.support_length))
        .collect();
    let eps = 1e-9;
    dom.triangulate(move |a, b, outer| {
        if outer {
            return Some(BoundaryTag::OuterDirichlet);
        }
        let on_bottom = a[1].abs() < eps && b[1].abs() < eps;
        let on_support = supports.iter().any(|&(lo, hi)| {
            a[0] >= lo - eps && a[0] <= hi + eps && b[0] >= lo - eps && b[0] <= hi + eps
        });
        (on_bottom && on_support).then_some(BoundaryTag::SolidDirichlet)
    })
}
