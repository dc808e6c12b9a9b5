//! Global intersection registry between boundary segments and mesh edges.
//!
//! Built once from the preprocessed mesh and then only read. Every contact is
//! stored on the undirected edge `(min, max)` with its parameter measured from the
//! lower vertex id, so both incident faces see the same points in the same order.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::boundary::Boundary;
use crate::exec::Exec;
use crate::geom::{orient2d, project_param, seg_seg_intersect, Aabb, IntersectKind, Point2, Tolerance};
use crate::mesh::spatial::BucketGrid;
use crate::mesh::HalfEdgeMesh;

/// Identity of a vertex in the remeshed output. Positions are attached to
/// identities, never the other way round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VRef {
    Mesh(u32),
    Chain(u32),
    /// Crossing of segment `seg` with edge `(u, v)`, `u < v`.
    Cross { u: u32, v: u32, seg: u32 },
    /// Fan centre used by the ablation fallback.
    Centroid(u32),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeHit {
    /// Parameter along the edge from its lower vertex id, in `[0, 1]`.
    pub t: f64,
    pub point: Point2,
    pub vref: VRef,
    pub seg: u32,
    /// Part of a collinear overlap between the segment and the edge.
    pub overlap: bool,
}

pub fn edge_key(u: u32, v: u32) -> (u32, u32) {
    (u.min(v), u.max(v))
}

#[derive(Debug)]
pub struct Registry {
    edges: HashMap<(u32, u32), Vec<EdgeHit>>,
    /// Chain vertices strictly inside each face.
    inside: HashMap<u32, Vec<u32>>,
    /// Identity of each chain vertex: a mesh vertex when one coincides with it.
    chain_ref: Vec<VRef>,
    /// Faces touched by any segment, ascending.
    faces: Vec<u32>,
    /// Test hook: when set, every read perturbs returned points by a
    /// read-count-dependent offset, making the registry order-sensitive.
    drift: Option<AtomicUsize>,
}

impl Registry {
    pub fn build(mesh: &HalfEdgeMesh, boundary: &Boundary, exec: Exec, tol: Tolerance) -> Self {
        let verts = mesh.vertices();
        let bounds = Aabb::from_points(verts.iter().copied()).inflate(1.0);
        let cell = mesh.faces().first().map(|f| verts[f[0] as usize].dist(verts[f[1] as usize])).unwrap_or(1.0);
        let mut face_grid = BucketGrid::new(bounds, cell);
        let mut vert_grid = BucketGrid::new(bounds, cell);
        for (f, t) in mesh.faces().iter().enumerate() {
            face_grid.insert(f as u32, Aabb::from_points(t.map(|v| verts[v as usize])));
        }
        for (i, p) in verts.iter().enumerate() {
            vert_grid.insert_point(i as u32, *p);
        }

        let chain_ref: Vec<VRef> = boundary
            .vertices
            .iter()
            .enumerate()
            .map(|(cv, p)| {
                vert_grid
                    .query_radius(*p, tol.eps)
                    .into_iter()
                    .find(|&v| verts[v as usize].dist(*p) <= tol.eps)
                    .map_or(VRef::Chain(cv as u32), VRef::Mesh)
            })
            .collect();

        let per_seg: Vec<Vec<((u32, u32), EdgeHit)>> = exec.map_range(boundary.num_segments(), |s| {
            let s = s as u32;
            let seg = boundary.seg(s);
            let [s0, s1] = boundary.segments[s as usize];
            let mut seen = Vec::new();
            let mut out = Vec::new();
            for f in face_grid.query_unique(Aabb::from_points([seg.0, seg.1]).inflate(tol.eps)) {
                let t = mesh.faces()[f as usize];
                for k in 0..3 {
                    let key = edge_key(t[k], t[(k + 1) % 3]);
                    if seen.contains(&key) {
                        continue;
                    }
                    seen.push(key);
                    let (pu, pv) = (verts[key.0 as usize], verts[key.1 as usize]);
                    let Ok(kind) = seg_seg_intersect((pu, pv), seg, tol) else { continue };
                    let classify = |x: Point2| -> VRef {
                        if x.dist(pu) <= tol.eps {
                            VRef::Mesh(key.0)
                        } else if x.dist(pv) <= tol.eps {
                            VRef::Mesh(key.1)
                        } else if x.dist(seg.0) <= tol.eps {
                            chain_ref[s0 as usize]
                        } else if x.dist(seg.1) <= tol.eps {
                            chain_ref[s1 as usize]
                        } else {
                            VRef::Cross { u: key.0, v: key.1, seg: s }
                        }
                    };
                    let hit = |x: Point2, overlap: bool| {
                        let vref = classify(x);
                        let (point, t) = match vref {
                            VRef::Mesh(m) if m == key.0 => (pu, 0.0),
                            VRef::Mesh(m) if m == key.1 => (pv, 1.0),
                            _ => (x, project_param(x, (pu, pv)).clamp(0.0, 1.0)),
                        };
                        (key, EdgeHit { t, point, vref, seg: s, overlap })
                    };
                    match kind {
                        IntersectKind::None => {}
                        IntersectKind::Point(x) => out.push(hit(x, false)),
                        IntersectKind::Overlap(a, b) => {
                            out.push(hit(a, true));
                            out.push(hit(b, true));
                        }
                    }
                }
            }
            out
        });

        let mut edges: HashMap<(u32, u32), Vec<EdgeHit>> = HashMap::new();
        for (key, h) in per_seg.into_iter().flatten() {
            edges.entry(key).or_default().push(h);
        }
        for list in edges.values_mut() {
            list.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.seg.cmp(&b.seg)).then(a.vref.cmp(&b.vref)));
        }

        let mut inside: HashMap<u32, Vec<u32>> = HashMap::new();
        for (cv, p) in boundary.vertices.iter().enumerate() {
            if matches!(chain_ref[cv], VRef::Mesh(_)) {
                continue;
            }
            for f in face_grid.query_radius(*p, tol.eps) {
                let [a, b, c] = mesh.face_points(f as usize);
                let o = [orient2d(a, b, *p, tol), orient2d(b, c, *p, tol), orient2d(c, a, *p, tol)];
                if o.iter().all(|&x| x > 0) {
                    inside.entry(f).or_default().push(cv as u32);
                    break;
                }
            }
        }

        let mut faces: Vec<u32> = (0..mesh.num_faces() as u32)
            .filter(|&f| {
                let t = mesh.faces()[f as usize];
                inside.contains_key(&f) || (0..3).any(|k| edges.contains_key(&edge_key(t[k], t[(k + 1) % 3])))
            })
            .collect();
        faces.sort_unstable();
        Self { edges, inside, chain_ref, faces, drift: None }
    }

    /// Turns on the order-sensitive read hook used as a negative control.
    pub fn with_read_drift(mut self) -> Self {
        self.drift = Some(AtomicUsize::new(0));
        self
    }

    fn perturb(&self, p: Point2) -> Point2 {
        match &self.drift {
            None => p,
            Some(n) => {
                let k = n.fetch_add(1, Ordering::Relaxed) % 7;
                Point2::new(p.x + k as f64 * 1e-12, p.y)
            }
        }
    }

    /// Contacts on edge `(u, v)` in either orientation, sorted from `min(u, v)`.
    pub fn hits(&self, u: u32, v: u32) -> Vec<EdgeHit> {
        let mut out = self.edges.get(&edge_key(u, v)).cloned().unwrap_or_default();
        if self.drift.is_some() {
            for h in &mut out {
                if !matches!(h.vref, VRef::Mesh(_)) {
                    h.point = self.perturb(h.point);
                }
            }
        }
        out
    }

    pub fn inside(&self, face: u32) -> &[u32] {
        self.inside.get(&face).map_or(&[], |v| v.as_slice())
    }

    pub fn chain_ref(&self, cv: u32) -> VRef {
        self.chain_ref[cv as usize]
    }

    pub fn intersected_faces(&self) -> &[u32] {
        &self.faces
    }

    pub fn num_records(&self) -> usize {
        self.edges.values().map(Vec::len).sum()
    }

    /// Every registered edge with its contacts, in key order.
    pub fn edge_records(&self) -> Vec<((u32, u32), &[EdgeHit])> {
        let mut v: Vec<_> = self.edges.iter().map(|(k, h)| (*k, h.as_slice())).collect();
        v.sort_by_key(|(k, _)| *k);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::PolyChain;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn strip() -> HalfEdgeMesh {
        HalfEdgeMesh::from_indexed(vec![p(0., 0.), p(1., 0.), p(0.5, 1.), p(0.5, -1.)], vec![[0, 1, 2], [1, 0, 3]])
            .unwrap()
    }

    #[test]
    fn shared_edge_reads_identically_from_both_sides() {
        let m = strip();
        let b = Boundary::new(vec![PolyChain::new(vec![p(0.3, -2.), p(0.6, 2.)], false)]);
        let r = Registry::build(&m, &b, Exec::Sequential, Tolerance::default());
        let h1 = r.hits(0, 1);
        let h2 = r.hits(1, 0);
        assert_eq!(h1, h2);
        assert_eq!(h1.len(), 1);
        assert!(matches!(h1[0].vref, VRef::Cross { u: 0, v: 1, seg: 0 }));
        assert_eq!(r.intersected_faces(), &[0, 1]);
    }

    #[test]
    fn records_sorted_by_parameter() {
        let m = strip();
        let b = Boundary::new(vec![
            PolyChain::new(vec![p(0.7, -2.), p(0.7, 2.)], false),
            PolyChain::new(vec![p(0.2, -2.), p(0.2, 2.)], false),
        ]);
        let r = Registry::build(&m, &b, Exec::Parallel, Tolerance::default());
        let h = r.hits(1, 0);
        assert_eq!(h.len(), 2);
        assert!(h[0].t < h[1].t);
        assert_eq!(h[0].seg, 1);
    }

    #[test]
    fn chain_vertex_inside_and_on_mesh_vertex() {
        let m = strip();
        let b = Boundary::new(vec![PolyChain::new(vec![p(0.5, 0.3), p(1.0, 0.0), p(3., 0.)], false)]);
        let r = Registry::build(&m, &b, Exec::Sequential, Tolerance::default());
        assert_eq!(r.inside(0), &[0]);
        assert_eq!(r.chain_ref(1), VRef::Mesh(1));
        assert_eq!(r.chain_ref(0), VRef::Chain(0));
    }

    #[test]
    fn overlap_records_both_ends() {
        let m = strip();
        let b = Boundary::new(vec![PolyChain::new(vec![p(-1., 0.), p(0.5, 0.)], false)]);
        let r = Registry::build(&m, &b, Exec::Sequential, Tolerance::default());
        let h = r.hits(0, 1);
        assert_eq!(h.len(), 2);
        assert!(h.iter().all(|x| x.overlap));
        assert_eq!(h[0].vref, VRef::Mesh(0));
        assert_eq!(h[1].vref, VRef::Chain(1));
    }

    #[test]
    fn drift_hook_changes_reads() {
        let m = strip();
        let b = Boundary::new(vec![PolyChain::new(vec![p(0.3, -2.), p(0.6, 2.)], false)]);
        let r = Registry::build(&m, &b, Exec::Sequential, Tolerance::default()).with_read_drift();
        let a = r.hits(0, 1)[0].point;
        let c = r.hits(0, 1)[0].point;
        assert_ne!(a, c);
    }
}
