//! Edge events and the per-face configuration key.
//!
//! A face configuration is reduced to a [`Topology`]: the perimeter of the face
//! (corners plus every boundary point on its edges, counter-clockwise) and one
//! piece per boundary segment listing where, in segment order, the segment meets
//! the face. The canonical key is the lexicographically smallest rendering over
//! the three rotations of the corner labels.

use std::collections::BTreeMap;

use crate::boundary::Boundary;
use crate::error::{Error, Result};
use crate::geom::{cross3, project_param, seg_seg_intersect, IntersectKind, Point2, Segment, Tolerance};
use crate::mesh::HalfEdgeMesh;
use crate::registry::{Registry, VRef};

/// Bit of each triangle edge in the edge mask: AB, BC, CA.
pub const EDGE_BITS: [u8; 3] = [2, 4, 8];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    Crossing,
    EndpointOnEdge,
    VertexOnSegment,
    ColinearOverlap,
}

/// Which point an event is attributed to: the edge's endpoints `A`, `B` or the
/// segment's endpoints `P`, `Q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Attribution {
    None,
    A,
    B,
    P,
    Q,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeEvent {
    pub kind: EventKind,
    pub point: Point2,
    pub attributed_to: Attribution,
    /// Position on the edge, 0 at `A`.
    pub t_edge: f64,
}

/// Events between edge `AB` and segment `PQ`. A collinear overlap counts once and
/// is attributed to `A`, `B`, `P`, `Q` in that priority.
pub fn classify_edge_event(edge: Segment, seg: Segment, tol: Tolerance) -> Result<Vec<EdgeEvent>> {
    let (a, b) = edge;
    let (p, q) = seg;
    let ev = |kind, point: Point2, attributed_to| EdgeEvent {
        kind,
        point,
        attributed_to,
        t_edge: project_param(point, edge).clamp(0.0, 1.0),
    };
    Ok(match seg_seg_intersect(edge, seg, tol)? {
        IntersectKind::None => vec![],
        IntersectKind::Point(x) => {
            let e = if x.dist(a) <= tol.eps {
                ev(EventKind::VertexOnSegment, a, Attribution::A)
            } else if x.dist(b) <= tol.eps {
                ev(EventKind::VertexOnSegment, b, Attribution::B)
            } else if x.dist(p) <= tol.eps {
                ev(EventKind::EndpointOnEdge, p, Attribution::P)
            } else if x.dist(q) <= tol.eps {
                ev(EventKind::EndpointOnEdge, q, Attribution::Q)
            } else {
                ev(EventKind::Crossing, x, Attribution::None)
            };
            vec![e]
        }
        IntersectKind::Overlap(lo, hi) => {
            let has = |x: Point2| x.dist(lo) <= tol.eps || x.dist(hi) <= tol.eps;
            let (pt, who) = if has(a) {
                (a, Attribution::A)
            } else if has(b) {
                (b, Attribution::B)
            } else if has(p) {
                (p, Attribution::P)
            } else {
                (q, Attribution::Q)
            };
            vec![ev(EventKind::ColinearOverlap, pt, who)]
        }
    })
}

/// A perimeter node: corner `k` or a point on edge `k` (from corner `k` to `k+1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PerimKind {
    Corner(u8),
    Edge(u8),
}

impl PerimKind {
    /// Triangle edges this node lies on.
    pub fn edges(self) -> &'static [u8] {
        match self {
            PerimKind::Corner(0) => &[0, 2],
            PerimKind::Corner(1) => &[0, 1],
            PerimKind::Corner(_) => &[1, 2],
            PerimKind::Edge(0) => &[0],
            PerimKind::Edge(1) => &[1],
            PerimKind::Edge(_) => &[2],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Station {
    Perim(u16),
    Apex,
}

/// Combinatorial face configuration; see the module docs.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Topology {
    pub perim: Vec<PerimKind>,
    /// One piece per segment in chain order; stations in segment order.
    pub pieces: Vec<Vec<Station>>,
}

impl Topology {
    pub fn has_apex(&self) -> bool {
        self.pieces.iter().flatten().any(|s| *s == Station::Apex)
    }

    pub fn corner_pos(&self, k: u8) -> usize {
        self.perim.iter().position(|&n| n == PerimKind::Corner(k)).expect("corner on perimeter")
    }

    /// Triangle-edge bitmask touched by each piece.
    pub fn edge_masks(&self) -> Vec<u8> {
        self.pieces
            .iter()
            .map(|st| {
                st.iter()
                    .filter_map(|s| match s {
                        Station::Perim(i) => Some(self.perim[*i as usize].edges()),
                        Station::Apex => None,
                    })
                    .flatten()
                    .fold(0u8, |m, e| m | EDGE_BITS[*e as usize])
            })
            .collect()
    }

    /// `(m, n)`: distinct triangle edges touched per segment, ascending, with a
    /// single segment reported as `(0, k)`.
    pub fn class(&self) -> (u8, u8) {
        let c: Vec<u8> = self.edge_masks().iter().map(|m| m.count_ones() as u8).collect();
        match c.as_slice() {
            [] => (0, 0),
            [k] => (0, *k),
            [a, b, ..] => ((*a).min(*b), (*a).max(*b)),
        }
    }

    /// The topology with corner `r` relabelled as `A`.
    pub fn rotated(&self, r: u8) -> Topology {
        let n = self.perim.len();
        let shift = self.corner_pos(r);
        let rot = |k: u8| (k + 3 - r) % 3;
        let perim = (0..n)
            .map(|i| match self.perim[(i + shift) % n] {
                PerimKind::Corner(k) => PerimKind::Corner(rot(k)),
                PerimKind::Edge(k) => PerimKind::Edge(rot(k)),
            })
            .collect();
        let pieces = self
            .pieces
            .iter()
            .map(|st| {
                st.iter()
                    .map(|s| match s {
                        Station::Perim(i) => Station::Perim(((*i as usize + n - shift) % n) as u16),
                        Station::Apex => Station::Apex,
                    })
                    .collect()
            })
            .collect();
        Topology { perim, pieces }
    }

    /// Key string of this labelling, e.g. `2,2|AqBqCqq|1-6,5-3`.
    pub fn key_string(&self) -> String {
        let (m, n) = self.class();
        let perim: String = self
            .perim
            .iter()
            .map(|k| match k {
                PerimKind::Corner(0) => 'A',
                PerimKind::Corner(1) => 'B',
                PerimKind::Corner(_) => 'C',
                PerimKind::Edge(_) => 'q',
            })
            .collect();
        let pieces: Vec<String> = self
            .pieces
            .iter()
            .map(|st| {
                st.iter()
                    .map(|s| match s {
                        Station::Perim(i) => i.to_string(),
                        Station::Apex => "p".to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join("-")
            })
            .collect();
        format!("{m},{n}|{perim}|{}", pieces.join(","))
    }

    /// Rotations whose key is smallest, and that key.
    pub fn canonical_rotations(&self) -> (String, Vec<u8>) {
        let keys: Vec<String> = (0..3).map(|r| self.rotated(r).key_string()).collect();
        let best = keys.iter().min().expect("three rotations").clone();
        let rots = (0..3u8).filter(|&r| keys[r as usize] == best).collect();
        (best, rots)
    }
}

/// Element of the dihedral group acting on the corner labels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SymTag {
    /// Index into the counter-clockwise corner order of the corner that becomes
    /// canonical `A`.
    pub rotation: u8,
    /// The input labelling was clockwise and has been reversed.
    pub mirror: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigKey {
    pub class: (u8, u8),
    /// Per segment, in canonical labels.
    pub edge_masks: Vec<u8>,
    pub key: String,
    pub sym: SymTag,
}

/// A face configuration bound to concrete vertices.
#[derive(Clone, Debug)]
pub struct FaceConfig {
    pub face: u32,
    /// Corner mesh ids in the (counter-clockwise) labelling order used.
    pub corners: [u32; 3],
    pub topology: Topology,
    /// Identity and position of each perimeter node.
    pub nodes: Vec<(VRef, Point2)>,
    pub apex: Option<(VRef, Point2)>,
    /// Segment of each piece.
    pub segments: Vec<u32>,
    pub key: ConfigKey,
}

impl FaceConfig {
    /// Binding of a canonical perimeter index.
    pub fn canonical_node(&self, i: usize) -> (VRef, Point2) {
        let n = self.nodes.len();
        let shift = self.topology.corner_pos(self.key.sym.rotation);
        self.nodes[(i + shift) % n]
    }

    /// Configuration relabelled so that its canonical rotation is the identity.
    pub fn canonical_topology(&self) -> Topology {
        self.topology.rotated(self.key.sym.rotation)
    }
}

fn violation(face: u32, reason: impl Into<String>) -> Error {
    Error::ProtocolViolation { face: face as usize, reason: reason.into() }
}

/// Builds the configuration of `face` with corners labelled in the order given by
/// `labels` (a permutation of the face's vertices).
pub fn face_config_labelled(
    mesh: &HalfEdgeMesh,
    registry: &Registry,
    boundary: &Boundary,
    face: u32,
    labels: [u32; 3],
) -> Result<FaceConfig> {
    let pt = |v: u32| mesh.vertex(v);
    let mirror = cross3(pt(labels[0]), pt(labels[1]), pt(labels[2])) < 0.0;
    let corners = if mirror { [labels[0], labels[2], labels[1]] } else { labels };

    // Perimeter: corner k, then the points strictly inside edge k in CCW order.
    let mut perim = Vec::new();
    let mut nodes: Vec<(VRef, Point2)> = Vec::new();
    let mut seg_hits: BTreeMap<u32, Vec<(VRef, Point2)>> = BTreeMap::new();
    for k in 0..3 {
        let (u, v) = (corners[k], corners[(k + 1) % 3]);
        perim.push(PerimKind::Corner(k as u8));
        nodes.push((VRef::Mesh(u), pt(u)));
        let mut hits = registry.hits(u, v);
        if u > v {
            hits.reverse();
        }
        for h in &hits {
            seg_hits.entry(h.seg).or_default().push((h.vref, h.point));
            if matches!(h.vref, VRef::Mesh(_)) || nodes.iter().any(|(r, _)| *r == h.vref) {
                continue;
            }
            perim.push(PerimKind::Edge(k as u8));
            nodes.push((h.vref, h.point));
        }
    }

    let inside = registry.inside(face);
    if inside.len() > 1 {
        return Err(violation(face, "two boundary vertices inside one face"));
    }
    let apex = inside.first().map(|&cv| (registry.chain_ref(cv), boundary.vertices[cv as usize]));
    if let Some(&cv) = inside.first() {
        for s in [boundary.seg_in(cv), boundary.seg_out(cv)].into_iter().flatten() {
            seg_hits.entry(s).or_default();
        }
    }

    let mut pieces: Vec<(u32, Vec<Station>)> = Vec::new();
    for (&s, hits) in &seg_hits {
        let seg = boundary.seg(s);
        let mut st: Vec<(f64, VRef, Station)> = Vec::new();
        for &(r, p) in hits {
            if st.iter().any(|x| x.1 == r) {
                continue;
            }
            let i = nodes.iter().position(|(n, _)| *n == r).expect("hit on perimeter");
            st.push((project_param(p, seg), r, Station::Perim(i as u16)));
        }
        if let (Some(&cv), Some(a)) = (inside.first(), apex) {
            if boundary.segments[s as usize].contains(&cv) {
                st.push((project_param(a.1, seg), a.0, Station::Apex));
            }
        }
        st.sort_by(|a, b| a.0.total_cmp(&b.0));
        if st.len() > 2 {
            return Err(violation(face, format!("segment {s} meets the face {} times", st.len())));
        }
        pieces.push((s, st.into_iter().map(|x| x.2).collect()));
    }

    if pieces.len() > 2 {
        // Segments that only graze a corner do not change the triangulation.
        pieces.retain(|(_, st)| !(st.len() == 1 && matches!(st[0], Station::Perim(i) if matches!(perim[i as usize], PerimKind::Corner(_)))));
    }
    if pieces.len() > 2 {
        return Err(violation(face, format!("{} segments meet the face", pieces.len())));
    }
    if pieces.len() == 2 {
        let (a, b) = (pieces[0].0, pieces[1].0);
        if boundary.junction(a, b).is_some() {
        } else if boundary.junction(b, a).is_some() {
            pieces.swap(0, 1);
        } else {
            return Err(violation(face, format!("segments {a} and {b} are not consecutive")));
        }
    }
    if perim.len() > u16::MAX as usize {
        return Err(violation(face, "perimeter too long"));
    }

    let topology = Topology { perim, pieces: pieces.iter().map(|p| p.1.clone()).collect() };
    let segments = pieces.iter().map(|p| p.0).collect();
    let (key, rots) = topology.canonical_rotations();
    // Ties between rotations go to the corner with the smallest (x, y).
    let rotation = *rots
        .iter()
        .min_by(|&&a, &&b| {
            let (pa, pb) = (pt(corners[a as usize]), pt(corners[b as usize]));
            pa.x.total_cmp(&pb.x).then(pa.y.total_cmp(&pb.y))
        })
        .expect("at least one rotation");
    let canon = topology.rotated(rotation);
    let key = ConfigKey { class: canon.class(), edge_masks: canon.edge_masks(), key, sym: SymTag { rotation, mirror } };
    let cfg = FaceConfig { face, corners, topology, nodes, apex, segments, key };
    Ok(cfg)
}

/// Configuration of `face` in its own counter-clockwise corner order.
pub fn triangle_config(mesh: &HalfEdgeMesh, registry: &Registry, boundary: &Boundary, face: u32) -> Result<FaceConfig> {
    face_config_labelled(mesh, registry, boundary, face, mesh.faces()[face as usize])
}

/// Faces met by the boundary, each with its segments in chain order.
pub fn find_intersected_faces(
    mesh: &HalfEdgeMesh,
    registry: &Registry,
    boundary: &Boundary,
) -> Result<BTreeMap<u32, Vec<u32>>> {
    let mut out = BTreeMap::new();
    for &f in registry.intersected_faces() {
        let cfg = triangle_config(mesh, registry, boundary, f)?;
        if !cfg.segments.is_empty() {
            out.insert(f, cfg.segments);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::PolyChain;
    use crate::exec::Exec;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn tri() -> HalfEdgeMesh {
        HalfEdgeMesh::from_indexed(vec![p(1., 0.), p(3., 0.), p(2., 3f64.sqrt())], vec![[0, 1, 2]]).unwrap()
    }

    fn config(chain: &[Point2]) -> FaceConfig {
        let m = tri();
        let b = Boundary::new(vec![PolyChain::new(chain.to_vec(), false)]);
        let r = Registry::build(&m, &b, Exec::Sequential, Tolerance::default());
        triangle_config(&m, &r, &b, 0).unwrap()
    }

    #[test]
    fn crossing_event() {
        let e = classify_edge_event((p(0., 0.), p(2., 0.)), (p(1., -1.), p(1., 1.)), Tolerance::default()).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].kind, EventKind::Crossing);
        assert!((e[0].t_edge - 0.5).abs() < 1e-12);
    }

    #[test]
    fn vertex_event_on_both_incident_edges() {
        let t = Tolerance::default();
        let seg = (p(-1., -1.), p(1., 1.));
        let ab = classify_edge_event((p(0., 0.), p(2., 0.)), seg, t).unwrap();
        let ca = classify_edge_event((p(0., 2.), p(0., 0.)), seg, t).unwrap();
        assert_eq!(ab.len(), 1);
        assert_eq!(ca.len(), 1);
        assert_eq!(ab[0].kind, EventKind::VertexOnSegment);
        assert_eq!(ab[0].attributed_to, Attribution::A);
        assert_eq!(ca[0].attributed_to, Attribution::B);
    }

    #[test]
    fn overlap_priority() {
        let t = Tolerance::default();
        let e = classify_edge_event((p(0., 0.), p(2., 0.)), (p(-1., 0.), p(1., 0.)), t).unwrap();
        assert_eq!((e[0].kind, e[0].attributed_to), (EventKind::ColinearOverlap, Attribution::A));
        let e = classify_edge_event((p(0., 0.), p(2., 0.)), (p(1., 0.), p(3., 0.)), t).unwrap();
        assert_eq!(e[0].attributed_to, Attribution::B);
        let e = classify_edge_event((p(0., 0.), p(2., 0.)), (p(0.5, 0.), p(1.5, 0.)), t).unwrap();
        assert_eq!(e[0].attributed_to, Attribution::P);
    }

    #[test]
    fn single_crossing_through_two_edges() {
        let c = config(&[p(0., 1.), p(3., 1.)]);
        assert_eq!(c.key.class, (0, 2));
        assert_eq!(c.topology.edge_masks(), vec![4 | 8]);
    }

    #[test]
    fn vertex_then_edge_is_three() {
        // Enters through B and leaves through CA.
        let c = config(&[p(4., -1.), p(1., 2.)]);
        assert_eq!(c.key.class, (0, 3));
    }

    #[test]
    fn apex_inside_two_crossings() {
        let c = config(&[p(0., 1.732), p(2., 0.5), p(3.5, 1.0)]);
        assert_eq!(c.key.class, (1, 1));
        assert!(c.apex.is_some());
    }

    #[test]
    fn key_invariant_under_relabelling() {
        let m = tri();
        let b = Boundary::new(vec![PolyChain::new(vec![p(0., 1.732), p(2., 0.5), p(3.5, 1.0)], false)]);
        let r = Registry::build(&m, &b, Exec::Sequential, Tolerance::default());
        let base = triangle_config(&m, &r, &b, 0).unwrap().key.key;
        for labels in [[0, 1, 2], [1, 2, 0], [2, 0, 1], [0, 2, 1], [2, 1, 0], [1, 0, 2]] {
            let c = face_config_labelled(&m, &r, &b, 0, labels).unwrap();
            assert_eq!(c.key.key, base);
            assert_eq!(c.key.sym.mirror, labels != [0, 1, 2] && labels != [1, 2, 0] && labels != [2, 0, 1]);
        }
    }

    #[test]
    fn untouched_face_not_reported() {
        let m = tri();
        let b = Boundary::new(vec![PolyChain::new(vec![p(10., 10.), p(12., 10.)], false)]);
        let r = Registry::build(&m, &b, Exec::Sequential, Tolerance::default());
        assert!(find_intersected_faces(&m, &r, &b).unwrap().is_empty());
    }
}
