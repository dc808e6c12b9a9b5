//! Watertightness checks: T-junctions, cracks, non-manifold edges, inverted faces.

use std::collections::HashMap;

use super::spatial::BucketGrid;
use super::HalfEdgeMesh;
use crate::geom::{triangle_area, Aabb, Point2, Tolerance};

#[derive(Clone, Debug, PartialEq)]
pub enum Defect {
    /// `vertex` lies on the interior of edge `(u, v)` without being one of its ends.
    TJunction { vertex: u32, edge: (u32, u32) },
    /// Two distinct vertices closer than `eps`: an unwelded seam.
    Crack { a: u32, b: u32 },
    NonManifoldEdge { edge: (u32, u32), faces: usize },
    InvertedFace { face: usize },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WatertightReport {
    pub defects: Vec<Defect>,
    pub boundary_loops: usize,
}

impl WatertightReport {
    pub fn ok(&self) -> bool {
        self.defects.is_empty()
    }
}

fn vertex_grid(verts: &[Point2], cell: f64) -> BucketGrid {
    let mut g = BucketGrid::new(Aabb::from_points(verts.iter().copied()), cell);
    for (i, &p) in verts.iter().enumerate() {
        g.insert_point(i as u32, p);
    }
    g
}

fn mean_edge_length(verts: &[Point2], edges: &[(u32, u32)]) -> f64 {
    if edges.is_empty() {
        return 1.0;
    }
    let s: f64 = edges.iter().map(|&(u, v)| verts[u as usize].dist(verts[v as usize])).sum();
    (s / edges.len() as f64).max(1e-6)
}

fn geometric_defects(verts: &[Point2], edges: &[(u32, u32)], tol: Tolerance, out: &mut Vec<Defect>) {
    let cell = mean_edge_length(verts, edges);
    let grid = vertex_grid(verts, cell);
    for (i, &p) in verts.iter().enumerate() {
        for j in grid.query_radius(p, tol.eps) {
            if j as usize > i && verts[j as usize].dist(p) < tol.eps {
                out.push(Defect::Crack { a: i as u32, b: j });
            }
        }
    }
    for &(u, v) in edges {
        let (a, b) = (verts[u as usize], verts[v as usize]);
        let bb = Aabb::from_points([a, b]).inflate(tol.eps);
        let d = b - a;
        let l2 = d.norm2();
        for w in grid.query_unique(bb) {
            if w == u || w == v {
                continue;
            }
            let p = verts[w as usize];
            let t = (p - a).dot(d) / l2;
            if t <= 0.0 || t >= 1.0 {
                continue;
            }
            let foot = a + d * t;
            if foot.dist(p) <= tol.eps && p.dist(a) > tol.eps && p.dist(b) > tol.eps {
                out.push(Defect::TJunction { vertex: w, edge: (u, v) });
            }
        }
    }
}

/// Reports every defect found; an empty list means the mesh is watertight.
pub fn validate_watertight(mesh: &HalfEdgeMesh, tol: Tolerance) -> WatertightReport {
    let mut defects = Vec::new();
    for f in 0..mesh.num_faces() {
        if mesh.face_area(f) <= 0.0 {
            defects.push(Defect::InvertedFace { face: f });
        }
    }
    let edges = mesh.edges();
    geometric_defects(mesh.vertices(), &edges, tol, &mut defects);
    WatertightReport { defects, boundary_loops: mesh.boundary_loops() }
}

/// Same checks on an indexed soup that may not admit half-edge connectivity.
pub fn validate_soup(verts: &[Point2], faces: &[[u32; 3]], tol: Tolerance) -> WatertightReport {
    let mut defects = Vec::new();
    let mut count: HashMap<(u32, u32), usize> = HashMap::new();
    for (f, t) in faces.iter().enumerate() {
        let [a, b, c] = t.map(|v| verts[v as usize]);
        if triangle_area(a, b, c) <= 0.0 {
            defects.push(Defect::InvertedFace { face: f });
        }
        for k in 0..3 {
            let (u, v) = (t[k], t[(k + 1) % 3]);
            *count.entry((u.min(v), u.max(v))).or_default() += 1;
        }
    }
    let mut edges: Vec<(u32, u32)> = count.keys().copied().collect();
    edges.sort_unstable();
    for e in &edges {
        if count[e] > 2 {
            defects.push(Defect::NonManifoldEdge { edge: *e, faces: count[e] });
        }
    }
    geometric_defects(verts, &edges, tol, &mut defects);
    let boundary_loops = match HalfEdgeMesh::from_indexed(verts.to_vec(), faces.to_vec()) {
        Ok(m) => m.boundary_loops(),
        Err(_) => 0,
    };
    WatertightReport { defects, boundary_loops }
}
