//! Half-edge triangle meshes.
//!
//! Face `f` owns half-edges `3f`, `3f+1`, `3f+2`; half-edge `3f+k` starts at the
//! face's `k`-th corner. Boundary half-edges have no twin.

pub mod io;
pub mod spatial;
mod validate;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geom::{orient2d, triangle_area, Point2, Tolerance};

pub use validate::{validate_soup, validate_watertight, Defect, WatertightReport};

pub const NO_TWIN: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HalfEdge {
    pub origin: u32,
    pub twin: u32,
    pub next: u32,
    pub face: u32,
}

impl HalfEdge {
    pub fn is_boundary(&self) -> bool {
        self.twin == NO_TWIN
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HalfEdgeMesh {
    vertices: Vec<Point2>,
    faces: Vec<[u32; 3]>,
    half_edges: Vec<HalfEdge>,
}

impl HalfEdgeMesh {
    /// Builds connectivity for an indexed triangle list whose faces are already CCW.
    pub fn from_indexed(vertices: Vec<Point2>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len() as u32;
        let mut half_edges = Vec::with_capacity(faces.len() * 3);
        let mut directed: HashMap<(u32, u32), u32> = HashMap::with_capacity(faces.len() * 3);
        for (f, tri) in faces.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::ZeroAreaFace(f));
            }
            let [a, b, c] = tri.map(|v| vertices[v as usize]);
            if triangle_area(a, b, c) <= 0.0 {
                return Err(Error::ZeroAreaFace(f));
            }
            for k in 0..3 {
                let h = (3 * f + k) as u32;
                let (u, v) = (tri[k], tri[(k + 1) % 3]);
                if directed.insert((u, v), h).is_some() {
                    return Err(Error::NonManifoldEdge(u.min(v), u.max(v)));
                }
                half_edges.push(HalfEdge {
                    origin: u,
                    twin: NO_TWIN,
                    next: (3 * f + (k + 1) % 3) as u32,
                    face: f as u32,
                });
            }
        }
        for (f, tri) in faces.iter().enumerate() {
            for k in 0..3 {
                let (u, v) = (tri[k], tri[(k + 1) % 3]);
                if let Some(&t) = directed.get(&(v, u)) {
                    half_edges[3 * f + k].twin = t;
                }
            }
        }
        Ok(Self { vertices, faces, half_edges })
    }

    pub fn empty() -> Self {
        Self { vertices: Vec::new(), faces: Vec::new(), half_edges: Vec::new() }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn half_edges(&self) -> &[HalfEdge] {
        &self.half_edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn vertex(&self, v: u32) -> Point2 {
        self.vertices[v as usize]
    }

    pub fn face_points(&self, f: usize) -> [Point2; 3] {
        self.faces[f].map(|v| self.vertices[v as usize])
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.face_points(f);
        triangle_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Destination vertex of half-edge `h`.
    pub fn dest(&self, h: u32) -> u32 {
        self.half_edges[self.half_edges[h as usize].next as usize].origin
    }

    /// Unordered edges, each once, as `(min, max)` vertex pairs.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.half_edges.len() / 2 + 1);
        for (h, he) in self.half_edges.iter().enumerate() {
            if he.is_boundary() || (h as u32) < he.twin {
                let (u, v) = (he.origin, self.dest(h as u32));
                out.push((u.min(v), u.max(v)));
            }
        }
        out
    }

    pub fn num_boundary_half_edges(&self) -> usize {
        self.half_edges.iter().filter(|h| h.is_boundary()).count()
    }

    /// Vertices incident to a boundary half-edge.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut b = vec![false; self.vertices.len()];
        for (h, he) in self.half_edges.iter().enumerate() {
            if he.is_boundary() {
                b[he.origin as usize] = true;
                b[self.dest(h as u32) as usize] = true;
            }
        }
        b
    }

    /// Number of closed boundary loops.
    pub fn boundary_loops(&self) -> usize {
        let mut next_b: HashMap<u32, Vec<u32>> = HashMap::new();
        for (h, he) in self.half_edges.iter().enumerate() {
            if he.is_boundary() {
                next_b.entry(he.origin).or_default().push(h as u32);
            }
        }
        let mut seen = vec![false; self.half_edges.len()];
        let mut loops = 0;
        let mut starts: Vec<u32> = next_b.values().flatten().copied().collect();
        starts.sort_unstable();
        for s in starts {
            if seen[s as usize] {
                continue;
            }
            loops += 1;
            let mut h = s;
            loop {
                seen[h as usize] = true;
                let d = self.dest(h);
                match next_b.get(&d).and_then(|c| c.iter().find(|&&x| !seen[x as usize])) {
                    Some(&n) => h = n,
                    None => break,
                }
            }
        }
        loops
    }

    /// Euler characteristic V - E + F.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges().len() as i64 + self.faces.len() as i64
    }

    /// Keeps the faces selected by `keep` and the vertices they use.
    pub fn submesh(&self, keep: &[bool]) -> Result<Self> {
        let mut remap = vec![u32::MAX; self.vertices.len()];
        let mut verts = Vec::new();
        let mut faces = Vec::new();
        for (f, tri) in self.faces.iter().enumerate() {
            if !keep[f] {
                continue;
            }
            faces.push(tri.map(|v| {
                if remap[v as usize] == u32::MAX {
                    remap[v as usize] = verts.len() as u32;
                    verts.push(self.vertices[v as usize]);
                }
                remap[v as usize]
            }));
        }
        Self::from_indexed(verts, faces)
    }
}

/// Builds a mesh from a triangle soup: welds vertices at `eps` and flips CW faces.
pub fn build_mesh(triangles: &[[Point2; 3]], tol: Tolerance) -> Result<HalfEdgeMesh> {
    let mut welder = spatial::Welder::new(tol.eps);
    let mut faces = Vec::with_capacity(triangles.len());
    for (f, t) in triangles.iter().enumerate() {
        let mut ids = t.map(|p| welder.insert(p));
        match orient2d(t[0], t[1], t[2], tol) {
            1 => {}
            -1 => ids.swap(1, 2),
            _ => return Err(Error::ZeroAreaFace(f)),
        }
        faces.push(ids);
    }
    HalfEdgeMesh::from_indexed(welder.points, faces)
}
