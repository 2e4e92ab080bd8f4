//! Closed oriented triangle surface meshes: structured cube generation,
//! OFF / Gmsh (ASCII v2) readers, validation, statistics.

use nalgebra::{Point3, Vector3};
use std::collections::HashMap;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("io error reading mesh: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("vertex index {index} out of range (mesh has {n_vertices} vertices)")]
    IndexOutOfRange { index: usize, n_vertices: usize },
    #[error("non-manifold edge ({a}, {b}): {count} adjacent triangles (expected 2)")]
    NonManifoldEdge { a: usize, b: usize, count: usize },
    #[error("inconsistent triangle orientation across edge ({a}, {b})")]
    InconsistentOrientation { a: usize, b: usize },
    #[error("component {component} has non-positive signed volume {volume}: normals point inward")]
    InwardOrientation { component: usize, volume: f64 },
    #[error("degenerate triangle {triangle} with area {area}")]
    DegenerateTriangle { triangle: usize, area: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

/// An undirected mesh edge, canonically stored with `verts[0] < verts[1]`,
/// together with its two adjacent triangles (lower triangle index first).
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub verts: [usize; 2],
    pub tris: [usize; 2],
}

/// Closed, consistently oriented triangulated surface with outward normals.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    pub normals: Vec<Vector3<f64>>,
    pub areas: Vec<f64>,
    /// For triangle t, `tri_edges[t][k]` is the global edge opposite local vertex k.
    pub tri_edges: Vec<[usize; 3]>,
    /// Connected component id per triangle.
    pub component: Vec<usize>,
    pub n_components: usize,
}

/// Summary data used to label convergence series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshStatistics {
    pub h_max: f64,
    pub h_min: f64,
    pub n_vertices: usize,
    pub n_edges: usize,
    pub n_triangles: usize,
    pub components: usize,
    pub euler_characteristic: i64,
    pub total_area: f64,
}

pub mod format {
    /// Supported mesh file formats.
    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum MeshFormat {
        OffAscii,
        GmshAsciiV2,
    }
}
pub use format::MeshFormat;

impl SurfaceMesh {
    /// Build and validate a mesh from raw vertex and triangle lists.
    ///
    /// Normals are recomputed from orientation; the mesh must be closed,
    /// consistently oriented, outward (positive signed volume per component).
    pub fn from_raw(
        vertices: Vec<Point3<f64>>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Self, MeshError> {
        let nv = vertices.len();
        for tri in &triangles {
            for &i in tri {
                if i >= nv {
                    return Err(MeshError::IndexOutOfRange {
                        index: i,
                        n_vertices: nv,
                    });
                }
            }
        }

        let mut normals = Vec::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let [a, b, c] = tri.map(|i| vertices[i]);
            let n = (b - a).cross(&(c - a));
            let len = n.norm();
            if len <= 1e-14 {
                return Err(MeshError::DegenerateTriangle {
                    triangle: t,
                    area: 0.5 * len,
                });
            }
            normals.push(n / len);
            areas.push(0.5 * len);
        }

        // Undirected edge -> (adjacent triangles, directed traversal count).
        let mut edge_map: HashMap<[usize; 2], (Vec<usize>, [usize; 2])> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let a = tri[(k + 1) % 3];
                let b = tri[(k + 2) % 3];
                let key = [a.min(b), a.max(b)];
                let entry = edge_map.entry(key).or_insert((Vec::new(), [0, 0]));
                entry.0.push(t);
                // direction 0: key[0] -> key[1] as traversed in the triangle
                let dir = usize::from(a > b);
                entry.1[dir] += 1;
            }
        }

        let mut keys: Vec<[usize; 2]> = edge_map.keys().copied().collect();
        keys.sort_unstable();

        let mut edges = Vec::with_capacity(keys.len());
        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::with_capacity(keys.len());
        for key in keys {
            let (tris, dirs) = &edge_map[&key];
            if tris.len() != 2 {
                return Err(MeshError::NonManifoldEdge {
                    a: key[0],
                    b: key[1],
                    count: tris.len(),
                });
            }
            if dirs[0] != 1 || dirs[1] != 1 {
                return Err(MeshError::InconsistentOrientation {
                    a: key[0],
                    b: key[1],
                });
            }
            let (t0, t1) = (tris[0].min(tris[1]), tris[0].max(tris[1]));
            edge_index.insert(key, edges.len());
            edges.push(Edge {
                verts: key,
                tris: [t0, t1],
            });
        }

        let mut tri_edges = vec![[usize::MAX; 3]; triangles.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let a = tri[(k + 1) % 3];
                let b = tri[(k + 2) % 3];
                tri_edges[t][k] = edge_index[&[a.min(b), a.max(b)]];
            }
        }

        // Connected components over triangle adjacency (union-find).
        let mut parent: Vec<usize> = (0..triangles.len()).collect();
        fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for e in &edges {
            let (a, b) = (find(&mut parent, e.tris[0]), find(&mut parent, e.tris[1]));
            if a != b {
                parent[a] = b;
            }
        }
        let mut comp_ids: HashMap<usize, usize> = HashMap::new();
        let mut component = vec![0usize; triangles.len()];
        for t in 0..triangles.len() {
            let root = find(&mut parent, t);
            let next = comp_ids.len();
            let id = *comp_ids.entry(root).or_insert(next);
            component[t] = id;
        }
        let n_components = comp_ids.len();

        // Outward orientation: signed volume of each component must be positive.
        let mut volume = vec![0.0f64; n_components];
        for (t, tri) in triangles.iter().enumerate() {
            let [a, b, c] = tri.map(|i| vertices[i]);
            volume[component[t]] += a.coords.dot(&b.coords.cross(&c.coords)) / 6.0;
        }
        for (cid, &v) in volume.iter().enumerate() {
            if v <= 0.0 {
                return Err(MeshError::InwardOrientation {
                    component: cid,
                    volume: v,
                });
            }
        }

        Ok(SurfaceMesh {
            vertices,
            triangles,
            edges,
            normals,
            areas,
            tri_edges,
            component,
            n_components,
        })
    }

    /// Vertices of triangle `t`.
    pub fn tri_vertices(&self, t: usize) -> [Point3<f64>; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    /// Chart point of triangle `t` at reference coordinates (u, v).
    pub fn chart(&self, t: usize, u: f64, v: f64) -> Point3<f64> {
        let [a, b, c] = self.tri_vertices(t);
        a + u * (b - a) + v * (c - b)
    }

    /// Length of global edge `e`.
    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].verts;
        (self.vertices[a] - self.vertices[b]).norm()
    }

    /// Diameter (longest edge) of triangle `t`.
    pub fn tri_diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.tri_vertices(t);
        (b - a).norm().max((c - b).norm()).max((a - c).norm())
    }

    pub fn centroid(&self, t: usize) -> Point3<f64> {
        let [a, b, c] = self.tri_vertices(t);
        Point3::from((a.coords + b.coords + c.coords) / 3.0)
    }

    /// Exact distance from a point to triangle `t`.
    pub fn point_triangle_distance(&self, x: &Point3<f64>, t: usize) -> f64 {
        let [a, b, c] = self.tri_vertices(t);
        point_triangle_distance(x, &a, &b, &c)
    }

    /// Minimum distance from `x` to the surface.
    pub fn distance_to_surface(&self, x: &Point3<f64>) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.point_triangle_distance(x, t))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn statistics(&self) -> MeshStatistics {
        let mut h_max = 0.0f64;
        let mut h_min = f64::INFINITY;
        for e in 0..self.edges.len() {
            let l = self.edge_length(e);
            h_max = h_max.max(l);
            h_min = h_min.min(l);
        }
        MeshStatistics {
            h_max,
            h_min,
            n_vertices: self.vertices.len(),
            n_edges: self.edges.len(),
            n_triangles: self.triangles.len(),
            components: self.n_components,
            euler_characteristic: self.vertices.len() as i64 + self.triangles.len() as i64
                - self.edges.len() as i64,
            total_area: self.areas.iter().sum(),
        }
    }

    /// Disjoint union of meshes (used to build multi-scatterer scenes).
    pub fn merged(parts: &[SurfaceMesh]) -> Result<SurfaceMesh, MeshError> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for part in parts {
            let offset = vertices.len();
            vertices.extend_from_slice(&part.vertices);
            triangles.extend(part.triangles.iter().map(|t| t.map(|i| i + offset)));
        }
        SurfaceMesh::from_raw(vertices, triangles)
    }
}

/// Structured triangulation of an axis-aligned cube surface: 12 n^2 triangles,
/// every square cell split along its (0,0)-(1,1) diagonal.
pub fn make_cube_mesh(center: Point3<f64>, side: f64, n: usize) -> Result<SurfaceMesh, MeshError> {
    if n < 1 {
        return Err(MeshError::InvalidParam("cube subdivisions n must be >= 1".into()));
    }
    if side <= 0.0 {
        return Err(MeshError::InvalidParam("cube side must be positive".into()));
    }

    // Deduplicate vertices across faces with exact integer lattice keys.
    let mut index_of: HashMap<[usize; 3], usize> = HashMap::new();
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut vertex = |key: [usize; 3]| -> usize {
        if let Some(&i) = index_of.get(&key) {
            return i;
        }
        let i = vertices.len();
        let p = Point3::new(
            center.x + side * (key[0] as f64 / n as f64 - 0.5),
            center.y + side * (key[1] as f64 / n as f64 - 0.5),
            center.z + side * (key[2] as f64 / n as f64 - 0.5),
        );
        index_of.insert(key, i);
        vertices.push(p);
        i
    };

    // Each face: origin lattice key plus (du, dv) lattice steps with
    // du x dv pointing outward.
    type L = [i64; 3];
    let nn = n as i64;
    let faces: [(L, L, L); 6] = [
        ([nn, 0, 0], [0, 1, 0], [0, 0, 1]), // +x
        ([0, 0, 0], [0, 0, 1], [0, 1, 0]),  // -x
        ([0, nn, 0], [0, 0, 1], [1, 0, 0]), // +y
        ([0, 0, 0], [1, 0, 0], [0, 0, 1]),  // -y
        ([0, 0, nn], [1, 0, 0], [0, 1, 0]), // +z
        ([0, 0, 0], [0, 1, 0], [1, 0, 0]),  // -z
    ];

    let mut triangles: Vec<[usize; 3]> = Vec::with_capacity(12 * n * n);
    for (origin, du, dv) in faces {
        let at = |p: i64, q: i64| -> [usize; 3] {
            let mut key = [0usize; 3];
            for ax in 0..3 {
                key[ax] = (origin[ax] + p * du[ax] + q * dv[ax]) as usize;
            }
            key
        };
        for p in 0..nn {
            for q in 0..nn {
                let v00 = vertex(at(p, q));
                let v10 = vertex(at(p + 1, q));
                let v11 = vertex(at(p + 1, q + 1));
                let v01 = vertex(at(p, q + 1));
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
    }
    SurfaceMesh::from_raw(vertices, triangles)
}

/// Load a mesh from a file in the given format.
pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<SurfaceMesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    match format {
        MeshFormat::OffAscii => parse_off(&text),
        MeshFormat::GmshAsciiV2 => parse_gmsh_v2(&text),
    }
}

/// Parse OFF (ASCII) text.
pub fn parse_off(text: &str) -> Result<SurfaceMesh, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line_no, header) = lines
        .next()
        .ok_or_else(|| parse_err(0, "empty OFF file"))?;
    if header != "OFF" {
        return Err(parse_err(line_no, "expected OFF header"));
    }
    let (line_no, counts) = lines
        .next()
        .ok_or_else(|| parse_err(line_no, "missing OFF counts line"))?;
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| parse_err(line_no, "bad count")))
        .collect::<Result<_, _>>()?;
    if counts.len() < 2 {
        return Err(parse_err(line_no, "OFF counts line needs V F [E]"));
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(line_no, "truncated vertex list"))?;
        let xyz: Vec<f64> = l
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| parse_err(ln, "bad vertex coordinate")))
            .collect::<Result<_, _>>()?;
        if xyz.len() != 3 {
            return Err(parse_err(ln, "vertex line must have 3 coordinates"));
        }
        vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(line_no, "truncated face list"))?;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| parse_err(ln, "bad face index")))
            .collect::<Result<_, _>>()?;
        if idx.first() != Some(&3) || idx.len() != 4 {
            return Err(parse_err(ln, "only triangle faces (3 i j k) are supported"));
        }
        triangles.push([idx[1], idx[2], idx[3]]);
    }
    SurfaceMesh::from_raw(vertices, triangles)
}

/// Parse Gmsh ASCII v2 text.  Only 3-node triangles (type 2) become mesh
/// faces; point (15) and line (1) bookkeeping elements are skipped; every
/// other element type and any non-2.x or binary format is rejected.
pub fn parse_gmsh_v2(text: &str) -> Result<SurfaceMesh, MeshError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .collect();
    let mut pos = 0usize;
    let next = |pos: &mut usize| -> Option<(usize, &str)> {
        while *pos < lines.len() {
            let item = lines[*pos];
            *pos += 1;
            if !item.1.is_empty() {
                return Some(item);
            }
        }
        None
    };

    let (ln, l) = next(&mut pos).ok_or_else(|| parse_err(0, "empty Gmsh file"))?;
    if l != "$MeshFormat" {
        return Err(parse_err(ln, "expected $MeshFormat"));
    }
    let (ln, l) = next(&mut pos).ok_or_else(|| parse_err(ln, "truncated $MeshFormat"))?;
    let parts: Vec<&str> = l.split_whitespace().collect();
    if parts.len() != 3 || !parts[0].starts_with("2.") || parts[1] != "0" {
        return Err(parse_err(
            ln,
            "only Gmsh ASCII v2 is supported (version 2.x, file-type 0)",
        ));
    }
    let (ln, l) = next(&mut pos).ok_or_else(|| parse_err(ln, "truncated file"))?;
    if l != "$EndMeshFormat" {
        return Err(parse_err(ln, "expected $EndMeshFormat"));
    }

    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut node_index: HashMap<usize, usize> = HashMap::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut seen_nodes = false;
    let mut seen_elements = false;

    while let Some((ln, l)) = next(&mut pos) {
        match l {
            "$Nodes" => {
                seen_nodes = true;
                let (ln2, l2) = next(&mut pos).ok_or_else(|| parse_err(ln, "truncated $Nodes"))?;
                let count: usize = l2
                    .parse()
                    .map_err(|_| parse_err(ln2, "bad node count"))?;
                for _ in 0..count {
                    let (ln3, l3) =
                        next(&mut pos).ok_or_else(|| parse_err(ln2, "truncated node list"))?;
                    let parts: Vec<&str> = l3.split_whitespace().collect();
                    if parts.len() != 4 {
                        return Err(parse_err(ln3, "node line must be: tag x y z"));
                    }
                    let tag: usize =
                        parts[0].parse().map_err(|_| parse_err(ln3, "bad node tag"))?;
                    let xyz: Result<Vec<f64>, _> = parts[1..].iter().map(|s| s.parse()).collect();
                    let xyz = xyz.map_err(|_| parse_err(ln3, "bad node coordinate"))?;
                    node_index.insert(tag, vertices.len());
                    vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
                }
                let (ln4, l4) = next(&mut pos).ok_or_else(|| parse_err(ln2, "truncated $Nodes"))?;
                if l4 != "$EndNodes" {
                    return Err(parse_err(ln4, "expected $EndNodes"));
                }
            }
            "$Elements" => {
                seen_elements = true;
                let (ln2, l2) =
                    next(&mut pos).ok_or_else(|| parse_err(ln, "truncated $Elements"))?;
                let count: usize = l2
                    .parse()
                    .map_err(|_| parse_err(ln2, "bad element count"))?;
                for _ in 0..count {
                    let (ln3, l3) =
                        next(&mut pos).ok_or_else(|| parse_err(ln2, "truncated element list"))?;
                    let parts: Vec<usize> = l3
                        .split_whitespace()
                        .map(|s| s.parse().map_err(|_| parse_err(ln3, "bad element field")))
                        .collect::<Result<_, _>>()?;
                    if parts.len() < 3 {
                        return Err(parse_err(ln3, "element line too short"));
                    }
                    let etype = parts[1];
                    let ntags = parts[2];
                    let nodes = &parts[3 + ntags..];
                    match etype {
                        2 => {
                            if nodes.len() != 3 {
                                return Err(parse_err(ln3, "triangle needs 3 nodes"));
                            }
                            let mut tri = [0usize; 3];
                            for (k, tag) in nodes.iter().enumerate() {
                                tri[k] = *node_index.get(tag).ok_or_else(|| {
                                    parse_err(ln3, "element references unknown node")
                                })?;
                            }
                            triangles.push(tri);
                        }
                        1 | 15 => {} // line / point bookkeeping elements
                        other => {
                            return Err(parse_err(
                                ln3,
                                &format!("unsupported element type {other} (only triangles)"),
                            ));
                        }
                    }
                }
                let (ln4, l4) =
                    next(&mut pos).ok_or_else(|| parse_err(ln2, "truncated $Elements"))?;
                if l4 != "$EndElements" {
                    return Err(parse_err(ln4, "expected $EndElements"));
                }
            }
            _ if l.starts_with('$') => {
                // Skip unknown sections ($PhysicalNames etc.) up to their end tag.
                let end = format!("$End{}", &l[1..]);
                loop {
                    let (_, l2) = next(&mut pos)
                        .ok_or_else(|| parse_err(ln, &format!("unterminated section {l}")))?;
                    if l2 == end {
                        break;
                    }
                }
            }
            _ => return Err(parse_err(ln, "unexpected content outside sections")),
        }
    }

    if !seen_nodes || !seen_elements {
        return Err(parse_err(0, "missing $Nodes or $Elements section"));
    }
    SurfaceMesh::from_raw(vertices, triangles)
}

fn parse_err(line: usize, msg: &str) -> MeshError {
    MeshError::Parse {
        line,
        msg: msg.into(),
    }
}

fn point_triangle_distance(
    x: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> f64 {
    // Ericson, Real-Time Collision Detection: closest point on triangle.
    let ab = b - a;
    let ac = c - a;
    let ap = x - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm();
    }
    let bp = x - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let t = d1 / (d1 - d3);
        return (ap - t * ab).norm();
    }
    let cp = x - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let t = d2 / (d2 - d6);
        return (ap - t * ac).norm();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (bp - t * (c - b)).norm();
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (ap - v * ab - w * ac).norm()
}
