//! Threshold rules that move the scaffold into an admissible state.
//!
//! Step 1 snaps grid vertices onto nearby chain vertices (radius `a`), step 2
//! pushes the remaining near-boundary vertices out to distance `c`, and step 3
//! removes grid edges that pass within `b` of a chain vertex by re-fanning the
//! cavity from that vertex. Steps 1 and 2 read only the input positions of the
//! vertices they move and run data-parallel; step 3 is sequential.

use std::collections::HashMap;

use crate::boundary::Boundary;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geom::{orient2d, point_segment_distance, Aabb, Point2, Tolerance};
use crate::mesh::spatial::BucketGrid;
use crate::mesh::HalfEdgeMesh;
use crate::scaffold::SQRT_045;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    /// Snapping radius.
    pub a: f64,
    /// Edge elimination distance.
    pub b: f64,
    /// Repulsion distance.
    pub c: f64,
    /// Grid edge length.
    pub e: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { a: 0.26, b: 0.125, c: 0.183, e: SQRT_045 }
    }
}

impl Thresholds {
    pub fn new(a: f64, b: f64, c: f64, e: f64) -> Self {
        Self { a, b, c, e }
    }

    /// Errors with every violated inequality joined by `; `.
    pub fn validate(&self, min_boundary_seg: f64) -> Result<()> {
        let v = validate_thresholds(self, min_boundary_seg);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidThresholds(v.join("; ")))
        }
    }
}

/// Names each violated admissibility inequality. Pass `f64::INFINITY` as
/// `min_boundary_seg` to skip the boundary check.
pub fn validate_thresholds(t: &Thresholds, min_boundary_seg: f64) -> Vec<String> {
    let mut out = Vec::new();
    for (name, v) in [("a", t.a), ("b", t.b), ("c", t.c), ("e", t.e)] {
        if !(v > 0.0 && v.is_finite()) {
            out.push(format!("{name} must be positive"));
        }
    }
    if t.b >= t.a / 2.0 {
        out.push("b ≥ a/2".to_string());
    }
    if t.c >= t.a / std::f64::consts::SQRT_2 {
        out.push("c ≥ a/√2".to_string());
    }
    if t.a >= t.e / 2.0 {
        out.push("a ≥ e/2".to_string());
    }
    if t.e >= min_boundary_seg {
        out.push("e ≥ min boundary segment length".to_string());
    }
    out
}

/// Which of the three rules run; the ablation study toggles them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RuleSet {
    pub snap: bool,
    pub repel: bool,
    pub eliminate: bool,
}

impl Default for RuleSet {
    fn default() -> Self {
        Self::ALL
    }
}

impl RuleSet {
    pub const ALL: Self = Self { snap: true, repel: true, eliminate: true };
    pub const NONE: Self = Self { snap: false, repel: false, eliminate: false };

    pub fn is_full(&self) -> bool {
        *self == Self::ALL
    }
}

/// Bucketed chain vertices and segments for proximity queries.
pub struct BoundaryIndex<'a> {
    pub boundary: &'a Boundary,
    vertices: BucketGrid,
    segments: BucketGrid,
}

impl<'a> BoundaryIndex<'a> {
    pub fn new(boundary: &'a Boundary, cell: f64) -> Self {
        let bounds = boundary.bbox().inflate(cell);
        let mut vertices = BucketGrid::new(bounds, cell);
        let mut segments = BucketGrid::new(bounds, cell);
        for (i, p) in boundary.vertices.iter().enumerate() {
            vertices.insert_point(i as u32, *p);
        }
        for s in 0..boundary.num_segments() as u32 {
            let (a, b) = boundary.seg(s);
            segments.insert(s, Aabb::from_points([a, b]));
        }
        Self { boundary, vertices, segments }
    }

    /// Nearest chain vertex strictly within `r`; ties go to the lower id.
    pub fn nearest_vertex(&self, p: Point2, r: f64) -> Option<(f64, u32)> {
        let mut best: Option<(f64, u32)> = None;
        for id in self.vertices.query_radius(p, r) {
            let d = self.boundary.vertices[id as usize].dist(p);
            if d < r && best.is_none_or(|b| (d, id) < b) {
                best = Some((d, id));
            }
        }
        best
    }

    /// Nearest segment strictly within `r` as `(distance, foot, segment)`.
    pub fn nearest_segment(&self, p: Point2, r: f64) -> Option<(f64, Point2, u32)> {
        let mut best: Option<(f64, Point2, u32)> = None;
        for s in self.segments.query_radius(p, r) {
            let Ok((d, foot, _)) = point_segment_distance(p, self.boundary.seg(s)) else { continue };
            if d < r && best.is_none_or(|(bd, _, bs)| (d, s) < (bd, bs)) {
                best = Some((d, foot, s));
            }
        }
        best
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SnapResult {
    /// New position per mesh vertex, when it moves.
    pub moves: Vec<Option<Point2>>,
    /// Chain vertex each mesh vertex was snapped onto.
    pub targets: Vec<Option<u32>>,
    /// Mesh vertices that lost a chain vertex to a nearer competitor.
    pub collisions: usize,
}

/// Step 1: moves each vertex within `a` of a chain vertex onto the nearest one.
/// When two vertices claim the same chain vertex the nearer one wins.
pub fn snap_vertices(positions: &[Point2], index: &BoundaryIndex, a: f64, exec: Exec) -> SnapResult {
    let claims: Vec<Option<(f64, u32)>> = exec.map(positions, |p| index.nearest_vertex(*p, a));
    let mut winner: HashMap<u32, (f64, u32)> = HashMap::new();
    for (v, c) in claims.iter().enumerate() {
        if let Some((d, cv)) = *c {
            let e = winner.entry(cv).or_insert((d, v as u32));
            if (d, v as u32) < *e {
                *e = (d, v as u32);
            }
        }
    }
    let mut out = SnapResult { moves: vec![None; positions.len()], targets: vec![None; positions.len()], collisions: 0 };
    for (v, c) in claims.iter().enumerate() {
        if let Some((_, cv)) = *c {
            if winner[&cv].1 == v as u32 {
                out.moves[v] = Some(index.boundary.vertices[cv as usize]);
                out.targets[v] = Some(cv);
            } else {
                out.collisions += 1;
            }
        }
    }
    out
}

/// Step 2: pushes each vertex that is off the boundary but within `c` of a
/// segment out to distance exactly `c`, keeping its side. With `snap_guard` set,
/// vertices inside the snapping radius of a chain vertex are left to step 1.
pub fn repel_vertices(
    positions: &[Point2],
    index: &BoundaryIndex,
    c: f64,
    snap_guard: Option<f64>,
    exec: Exec,
    tol: Tolerance,
) -> Vec<Option<Point2>> {
    exec.map(positions, |&p| {
        if snap_guard.is_some_and(|a| index.nearest_vertex(p, a).is_some()) {
            return None;
        }
        let (d, foot, s) = index.nearest_segment(p, c)?;
        if d <= tol.eps {
            return None;
        }
        let q = foot + (p - foot) * (c / d);
        debug_assert!(index.nearest_segment(q, c - tol.eps).is_none_or(|(_, _, t)| t != s));
        Some(q)
    })
}

fn apply(positions: &[Point2], moves: &[Option<Point2>]) -> Vec<Point2> {
    positions.iter().zip(moves).map(|(p, m)| m.unwrap_or(*p)).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PreprocessStats {
    pub snapped: usize,
    pub snap_collisions: usize,
    pub repelled: usize,
    pub eliminated: usize,
    /// Chain vertices with two nearby edges that were resolved by nearest edge.
    pub conflicts: usize,
}

/// Order of the two vertex rules; both produce the same result.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum VertexOrder {
    #[default]
    SnapFirst,
    RepelFirst,
}

/// Steps 1 and 2 on a position array.
pub fn update_vertices(
    positions: &[Point2],
    index: &BoundaryIndex,
    t: &Thresholds,
    rules: RuleSet,
    order: VertexOrder,
    exec: Exec,
    tol: Tolerance,
) -> (Vec<Point2>, PreprocessStats) {
    let mut stats = PreprocessStats::default();
    let guard = rules.snap.then_some(t.a);
    let mut pos = positions.to_vec();
    let steps = match order {
        VertexOrder::SnapFirst => [true, false],
        VertexOrder::RepelFirst => [false, true],
    };
    for snap_step in steps {
        if snap_step && rules.snap {
            let s = snap_vertices(&pos, index, t.a, exec);
            stats.snapped = s.targets.iter().flatten().count();
            stats.snap_collisions = s.collisions;
            pos = apply(&pos, &s.moves);
        } else if !snap_step && rules.repel {
            let m = repel_vertices(&pos, index, t.c, guard, exec, tol);
            stats.repelled = m.iter().flatten().count();
            pos = apply(&pos, &m);
        }
    }
    (pos, stats)
}

/// Triangle soup with edge adjacency and a face bucket grid, for step 3.
struct Soup {
    verts: Vec<Point2>,
    faces: Vec<Option<[u32; 3]>>,
    edges: HashMap<(u32, u32), Vec<u32>>,
    face_grid: BucketGrid,
    vert_grid: BucketGrid,
}

fn ekey(u: u32, v: u32) -> (u32, u32) {
    (u.min(v), u.max(v))
}

impl Soup {
    fn new(mesh: &HalfEdgeMesh, cell: f64) -> Self {
        let bounds = Aabb::from_points(mesh.vertices().iter().copied()).inflate(cell);
        let mut s = Self {
            verts: mesh.vertices().to_vec(),
            faces: Vec::new(),
            edges: HashMap::new(),
            face_grid: BucketGrid::new(bounds, cell),
            vert_grid: BucketGrid::new(bounds, cell),
        };
        for (i, p) in mesh.vertices().iter().enumerate() {
            s.vert_grid.insert_point(i as u32, *p);
        }
        for f in mesh.faces() {
            s.add_face(*f);
        }
        s
    }

    fn add_face(&mut self, f: [u32; 3]) {
        let id = self.faces.len() as u32;
        for k in 0..3 {
            self.edges.entry(ekey(f[k], f[(k + 1) % 3])).or_default().push(id);
        }
        self.face_grid.insert(id, Aabb::from_points(f.map(|v| self.verts[v as usize])));
        self.faces.push(Some(f));
    }

    fn remove_face(&mut self, id: u32) {
        let f = self.faces[id as usize].take().expect("face removed twice");
        for k in 0..3 {
            let key = ekey(f[k], f[(k + 1) % 3]);
            let list = self.edges.get_mut(&key).expect("edge map out of sync");
            list.retain(|&x| x != id);
            if list.is_empty() {
                self.edges.remove(&key);
            }
        }
    }

    fn add_vertex(&mut self, p: Point2) -> u32 {
        let id = self.verts.len() as u32;
        self.verts.push(p);
        self.vert_grid.insert_point(id, p);
        id
    }

    fn has_vertex_near(&self, p: Point2, eps: f64) -> bool {
        self.vert_grid.query_radius(p, eps).iter().any(|&v| self.verts[v as usize].dist(p) <= eps)
    }

    /// Live faces whose closed triangle contains `p`, lowest id first.
    fn containing_face(&self, p: Point2, tol: Tolerance) -> Option<u32> {
        self.face_grid.query_radius(p, tol.eps).into_iter().find(|&f| {
            self.faces[f as usize].is_some_and(|t| {
                let [a, b, c] = t.map(|v| self.verts[v as usize]);
                orient2d(a, b, p, tol) >= 0 && orient2d(b, c, p, tol) >= 0 && orient2d(c, a, p, tol) >= 0
            })
        })
    }

    /// Edges of live faces near `p` within distance `r`, sorted by (distance, key).
    fn edges_within(&self, p: Point2, r: f64) -> Vec<(f64, (u32, u32))> {
        let mut out: Vec<(f64, (u32, u32))> = Vec::new();
        for f in self.face_grid.query_radius(p, r) {
            let Some(t) = self.faces[f as usize] else { continue };
            for k in 0..3 {
                let key = ekey(t[k], t[(k + 1) % 3]);
                let seg = (self.verts[key.0 as usize], self.verts[key.1 as usize]);
                if let Ok((d, _, _)) = point_segment_distance(p, seg) {
                    if d < r && !out.iter().any(|(_, e)| *e == key) {
                        out.push((d, key));
                    }
                }
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out
    }

    /// Replaces the faces on edge `(u, v)` by a fan around new vertex `p`.
    fn split_edge(&mut self, key: (u32, u32), p: Point2, tol: Tolerance) {
        let incident = self.edges[&key].clone();
        let pid = self.add_vertex(p);
        let mut new_faces = Vec::new();
        let hull = incident.len() == 1;
        for f in incident {
            let t = self.faces[f as usize].expect("live face");
            // Rotate so the shared edge is t[0] -> t[1].
            let k = (0..3).find(|&k| ekey(t[k], t[(k + 1) % 3]) == key).expect("edge in face");
            let (u, v, w) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
            self.remove_face(f);
            new_faces.push([pid, v, w]);
            new_faces.push([pid, w, u]);
            // On a hull edge the point may sit off the edge line; keep the sliver
            // between them so the covered area is unchanged.
            if hull && orient2d(self.verts[u as usize], self.verts[v as usize], p, tol) != 0 {
                new_faces.push([pid, u, v]);
            }
        }
        for f in new_faces {
            self.add_face(f);
        }
    }

    fn into_mesh(self) -> Result<HalfEdgeMesh> {
        HalfEdgeMesh::from_indexed(self.verts, self.faces.into_iter().flatten().collect())
    }
}

/// Step 3: for each chain vertex within `b` of a mesh edge, removes that edge and
/// fans its cavity from the chain vertex. Two flagged edges is a
/// `ConflictingDeletion` when `strict`, and otherwise resolved by the nearest edge.
pub fn eliminate_edges(
    mesh: &HalfEdgeMesh,
    boundary: &Boundary,
    b: f64,
    strict: bool,
    tol: Tolerance,
) -> Result<(HalfEdgeMesh, PreprocessStats)> {
    let mut stats = PreprocessStats::default();
    let cell = mesh
        .faces()
        .first()
        .map(|f| mesh.vertex(f[0]).dist(mesh.vertex(f[1])))
        .unwrap_or(1.0)
        .max(b);
    let mut soup = Soup::new(mesh, cell);
    for (cv, &p) in boundary.vertices.iter().enumerate() {
        if soup.has_vertex_near(p, tol.eps) {
            continue;
        }
        let Some(face) = soup.containing_face(p, tol) else { continue };
        let flagged = soup.edges_within(p, b);
        let key = match flagged.len() {
            0 => continue,
            1 => flagged[0].1,
            _ if strict => return Err(Error::ConflictingDeletion { face: face as usize, point: cv }),
            _ => {
                stats.conflicts += 1;
                flagged[0].1
            }
        };
        soup.split_edge(key, p, tol);
        stats.eliminated += 1;
    }
    Ok((soup.into_mesh()?, stats))
}

#[derive(Clone, Debug)]
pub struct PreprocessOutput {
    pub mesh: HalfEdgeMesh,
    pub stats: PreprocessStats,
}

/// Runs the enabled rules on `mesh` against `boundary`. A repelled vertex can skew
/// its faces enough that a chain vertex outside every snapping disc lies within
/// `b` of two edges; such conflicts go to the nearest edge and are counted.
pub fn preprocess(
    mesh: &HalfEdgeMesh,
    boundary: &Boundary,
    t: &Thresholds,
    rules: RuleSet,
    exec: Exec,
    tol: Tolerance,
) -> Result<PreprocessOutput> {
    let index = BoundaryIndex::new(boundary, t.e.max(t.a));
    let (pos, mut stats) = update_vertices(mesh.vertices(), &index, t, rules, VertexOrder::SnapFirst, exec, tol);
    let moved = HalfEdgeMesh::from_indexed(pos, mesh.faces().to_vec())?;
    if !rules.eliminate {
        return Ok(PreprocessOutput { mesh: moved, stats });
    }
    let (out, s3) = eliminate_edges(&moved, boundary, t.b, false, tol)?;
    stats.eliminated = s3.eliminated;
    stats.conflicts = s3.conflicts;
    Ok(PreprocessOutput { mesh: out, stats })
}
