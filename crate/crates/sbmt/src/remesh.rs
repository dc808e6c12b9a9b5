//! The end-to-end pipeline: preprocess, freeze the registry, generate one patch per
//! intersected face out of place, and stitch.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::boundary::{enforce_protocol, point_in_chains, trace_contours, BitmapMask, Boundary, PolyChain, ProtocolParams};
use crate::classify::{triangle_config, FaceConfig};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geom::{triangle_area, Aabb, Point2, Tolerance};
use crate::mesh::HalfEdgeMesh;
use crate::preprocess::{preprocess, PreprocessStats, RuleSet, Thresholds};
use crate::registry::{VRef, Registry};
use crate::scaffold::{build_grid, GridSpec};
use crate::templates::{instantiate, table, BoundTri, TemplateTable};

#[derive(Clone, Copy, Debug)]
pub struct RemeshOptions {
    pub thresholds: Thresholds,
    pub rules: RuleSet,
    pub exec: Exec,
    pub tol: Tolerance,
    /// Replace faces the table cannot handle with a fan instead of failing.
    pub fallback: bool,
}

impl Default for RemeshOptions {
    fn default() -> Self {
        Self {
            thresholds: Thresholds::default(),
            rules: RuleSet::ALL,
            exec: Exec::default(),
            tol: Tolerance::from_env(),
            fallback: false,
        }
    }
}

impl RemeshOptions {
    /// Options for an ablation run: the full rule set stays strict, every other
    /// set falls back to fans.
    pub fn with_rules(mut self, rules: RuleSet) -> Self {
        self.rules = rules;
        self.fallback = !rules.is_full();
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RemeshStats {
    pub preprocess: PreprocessStats,
    pub intersected_faces: usize,
    /// Faces whose configuration leaves them unchanged.
    pub untouched_faces: usize,
    pub patched_faces: usize,
    pub fallback_faces: usize,
    pub per_class: BTreeMap<(u8, u8), usize>,
    /// Distinct reasons for fallbacks, with counts.
    pub fallback_reasons: BTreeMap<String, usize>,
}

#[derive(Clone, Debug)]
pub struct RemeshOutput {
    pub mesh: HalfEdgeMesh,
    pub stats: RemeshStats,
    /// Class of the base face each output face came from; `None` for untouched faces.
    pub face_class: Vec<Option<(u8, u8)>>,
}

/// A preprocessed mesh and its boundary, ready for patch generation.
#[derive(Clone, Debug)]
pub struct RemeshJob {
    pub base: HalfEdgeMesh,
    pub boundary: Boundary,
    pub preprocess: PreprocessStats,
    pub options: RemeshOptions,
    /// Test hook: make registry reads order dependent.
    pub registry_drift: bool,
}

impl RemeshJob {
    /// Builds the grid over the chains and runs the preprocessing rules.
    pub fn prepare(chains: Vec<PolyChain>, grid: &GridSpec, options: RemeshOptions) -> Result<Self> {
        let boundary = Boundary::new(chains);
        if boundary.num_segments() > 0 {
            options.thresholds.validate(boundary.min_segment_length())?;
        }
        let raw = build_grid(grid)?;
        let pre = preprocess(&raw, &boundary, &options.thresholds, options.rules, options.exec, options.tol)?;
        Ok(Self { base: pre.mesh, boundary, preprocess: pre.stats, options, registry_drift: false })
    }

    /// Runs patch generation and stitching. `schedule` shuffles the order in which
    /// faces are processed and stitched.
    pub fn run(&self, schedule: Option<u64>) -> Result<RemeshOutput> {
        self.run_with_table(table(), schedule)
    }

    pub fn run_with_table(&self, table: &TemplateTable, schedule: Option<u64>) -> Result<RemeshOutput> {
        let o = &self.options;
        let mut registry = Registry::build(&self.base, &self.boundary, o.exec, o.tol);
        if self.registry_drift {
            registry = registry.with_read_drift();
        }
        let mut order: Vec<u32> = registry.intersected_faces().to_vec();
        if let Some(seed) = schedule {
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        let results = o.exec.map(&order, |&f| face_patch(&self.base, &registry, &self.boundary, table, f, o.fallback));

        let mut stats = RemeshStats {
            preprocess: self.preprocess,
            intersected_faces: order.len(),
            ..Default::default()
        };
        let mut patches = Vec::new();
        for (&f, r) in order.iter().zip(results) {
            match r? {
                FacePatch::Untouched => stats.untouched_faces += 1,
                FacePatch::Template { class, tris } => {
                    stats.patched_faces += 1;
                    *stats.per_class.entry(class).or_default() += 1;
                    patches.push((f, Some(class), tris));
                }
                FacePatch::Fallback { reason, tris } => {
                    stats.fallback_faces += 1;
                    *stats.fallback_reasons.entry(reason).or_default() += 1;
                    patches.push((f, None, tris));
                }
            }
        }
        let (mesh, face_class) = stitch_classified(&self.base, &patches, o.tol)?;
        Ok(RemeshOutput { mesh, stats, face_class })
    }
}

/// Traced contours of `mask`, each brought into protocol for edge length `e`.
pub fn chains_from_mask(mask: &BitmapMask, e: f64) -> Result<Vec<PolyChain>> {
    let params = ProtocolParams::new(e);
    trace_contours(mask)?.iter().map(|c| enforce_protocol(c, &params)).collect()
}

/// Grid covering the whole bitmap.
pub fn grid_for_mask(mask: &BitmapMask, e: f64) -> GridSpec {
    let bbox = Aabb { min: Point2::new(0.0, 0.0), max: Point2::new((mask.width - 1) as f64, (mask.height - 1) as f64) };
    GridSpec::new(bbox, e)
}

/// Traces, prepares and meshes a bitmap.
pub fn mesh_bitmap(mask: &BitmapMask, options: RemeshOptions) -> Result<(RemeshJob, RemeshOutput)> {
    let e = options.thresholds.e;
    let job = RemeshJob::prepare(chains_from_mask(mask, e)?, &grid_for_mask(mask, e), options)?;
    let out = job.run(None)?;
    Ok((job, out))
}

/// Meshes the chains on the grid with the given options.
pub fn remesh(chains: Vec<PolyChain>, grid: &GridSpec, options: RemeshOptions) -> Result<RemeshOutput> {
    RemeshJob::prepare(chains, grid, options)?.run(None)
}

enum FacePatch {
    Untouched,
    Template { class: (u8, u8), tris: Vec<BoundTri> },
    Fallback { reason: String, tris: Vec<BoundTri> },
}

fn face_patch(
    mesh: &HalfEdgeMesh,
    registry: &Registry,
    boundary: &Boundary,
    table: &TemplateTable,
    f: u32,
    fallback: bool,
) -> Result<FacePatch> {
    let attempt = triangle_config(mesh, registry, boundary, f).and_then(|cfg| {
        if cfg.nodes.len() == 3 && cfg.apex.is_none() {
            return Ok((cfg, None));
        }
        let patch = table.lookup(&cfg.key.key)?;
        let tris = instantiate(patch, &cfg)?;
        Ok((cfg, Some(tris)))
    });
    match attempt {
        Ok((_, None)) => Ok(FacePatch::Untouched),
        Ok((cfg, Some(tris))) => Ok(FacePatch::Template { class: cfg.key.class, tris }),
        Err(e) if fallback => {
            let reason = match &e {
                Error::ProtocolViolation { .. } => "protocol violation".to_string(),
                Error::UnknownConfiguration(_) => "unknown configuration".to_string(),
                Error::OrientationFailure(_) => "orientation failure".to_string(),
                other => other.to_string(),
            };
            Ok(FacePatch::Fallback { reason, tris: fallback_fan(mesh, registry, boundary, f) })
        }
        Err(e) => Err(e),
    }
}

/// Fan over the face's perimeter nodes from the boundary vertex inside it, or
/// from the centroid when there is none (or more than one).
pub fn fallback_fan(mesh: &HalfEdgeMesh, registry: &Registry, boundary: &Boundary, f: u32) -> Vec<BoundTri> {
    let corners = mesh.faces()[f as usize];
    let mut nodes: Vec<(VRef, Point2)> = Vec::new();
    for k in 0..3 {
        let (u, v) = (corners[k], corners[(k + 1) % 3]);
        nodes.push((VRef::Mesh(u), mesh.vertex(u)));
        let mut hits = registry.hits(u, v);
        if u > v {
            hits.reverse();
        }
        for h in hits {
            if !matches!(h.vref, VRef::Mesh(_)) && !nodes.iter().any(|(r, _)| *r == h.vref) {
                nodes.push((h.vref, h.point));
            }
        }
    }
    let inside = registry.inside(f);
    let hub = match inside {
        [cv] => (registry.chain_ref(*cv), boundary.vertices[*cv as usize]),
        _ => {
            let [a, b, c] = mesh.face_points(f as usize);
            (VRef::Centroid(f), (a + b + c) * (1.0 / 3.0))
        }
    };
    let n = nodes.len();
    (0..n)
        .map(|i| [nodes[i], nodes[(i + 1) % n], hub])
        .filter(|t| triangle_area(t[0].1, t[1].1, t[2].1) > 0.0)
        .collect()
}

/// Replaces the patched faces of `base` and merges vertices by identity.
pub fn stitch(base: &HalfEdgeMesh, patches: &[(u32, Vec<BoundTri>)], tol: Tolerance) -> Result<HalfEdgeMesh> {
    let tagged: Vec<_> = patches.iter().map(|(f, t)| (*f, None, t.clone())).collect();
    Ok(stitch_classified(base, &tagged, tol)?.0)
}

type TaggedPatch = (u32, Option<(u8, u8)>, Vec<BoundTri>);

fn stitch_classified(
    base: &HalfEdgeMesh,
    patches: &[TaggedPatch],
    tol: Tolerance,
) -> Result<(HalfEdgeMesh, Vec<Option<(u8, u8)>>)> {
    let nv = base.num_vertices() as u32;
    let mut replaced = vec![false; base.num_faces()];
    let mut fresh: HashMap<VRef, Point2> = HashMap::new();
    for (f, _, tris) in patches {
        replaced[*f as usize] = true;
        for &(r, p) in tris.iter().flatten() {
            match r {
                VRef::Mesh(m) => {
                    if m >= nv || base.vertex(m).dist(p) > tol.eps {
                        return Err(Error::StitchMismatch(format!("mesh vertex {m} bound at {p:?}")));
                    }
                }
                _ => {
                    let q = *fresh.entry(r).or_insert(p);
                    if q.dist(p) > tol.eps {
                        return Err(Error::StitchMismatch(format!("{r:?} at {q:?} and {p:?}")));
                    }
                }
            }
        }
    }
    let mut new_refs: Vec<VRef> = fresh.keys().copied().collect();
    new_refs.sort();
    let mut id: HashMap<VRef, u32> = HashMap::with_capacity(new_refs.len());
    let mut vertices = base.vertices().to_vec();
    for r in new_refs {
        id.insert(r, vertices.len() as u32);
        vertices.push(fresh[&r]);
    }
    let lookup = |r: VRef| match r {
        VRef::Mesh(m) => m,
        _ => id[&r],
    };

    let mut faces = Vec::with_capacity(base.num_faces() + patches.len() * 4);
    let mut classes = Vec::with_capacity(faces.capacity());
    for (f, t) in base.faces().iter().enumerate() {
        if !replaced[f] {
            faces.push(*t);
            classes.push(None);
        }
    }
    let mut sorted: Vec<&TaggedPatch> = patches.iter().collect();
    sorted.sort_by_key(|p| p.0);
    for (_, class, tris) in sorted {
        for t in tris {
            faces.push(t.map(|(r, _)| lookup(r)));
            classes.push(*class);
        }
    }
    Ok((HalfEdgeMesh::from_indexed(vertices, faces)?, classes))
}

/// Order-independent text form: vertices sorted by position quantised at `eps/4`,
/// faces rotated to start at their smallest index and sorted.
pub fn canonical_serialization(mesh: &HalfEdgeMesh, tol: Tolerance) -> String {
    let q = tol.eps / 4.0;
    let verts = mesh.vertices();
    let key = |p: Point2| ((p.x / q).round() as i64, (p.y / q).round() as i64);
    let mut order: Vec<u32> = (0..verts.len() as u32).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (verts[a as usize], verts[b as usize]);
        key(pa).cmp(&key(pb)).then(pa.x.total_cmp(&pb.x)).then(pa.y.total_cmp(&pb.y))
    });
    let mut rank = vec![0u32; verts.len()];
    for (i, &v) in order.iter().enumerate() {
        rank[v as usize] = i as u32;
    }
    let mut faces: Vec<[u32; 3]> = mesh
        .faces()
        .iter()
        .map(|t| {
            let r = t.map(|v| rank[v as usize]);
            let i = (0..3).min_by_key(|&i| r[i]).unwrap();
            [r[i], r[(i + 1) % 3], r[(i + 2) % 3]]
        })
        .collect();
    faces.sort_unstable();
    let mut s = String::with_capacity(verts.len() * 40 + faces.len() * 24);
    let _ = writeln!(s, "{} {}", verts.len(), faces.len());
    for &v in &order {
        let p = verts[v as usize];
        let _ = writeln!(s, "{:?} {:?}", p.x, p.y);
    }
    for f in faces {
        let _ = writeln!(s, "{} {} {}", f[0], f[1], f[2]);
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub enum PathIndependence {
    Ok { schedules: usize },
    Counterexample { seed_a: u64, seed_b: u64, first_diff_line: usize },
}

impl PathIndependence {
    pub fn is_ok(&self) -> bool {
        matches!(self, PathIndependence::Ok { .. })
    }
}

/// Runs the job under the unshuffled schedule and `seeds.len()` shuffled ones and
/// compares canonical serializations.
pub fn check_path_independence(job: &RemeshJob, seeds: &[u64]) -> Result<PathIndependence> {
    let tol = job.options.tol;
    let reference = canonical_serialization(&job.run(None)?.mesh, tol);
    for &seed in seeds {
        let s = canonical_serialization(&job.run(Some(seed))?.mesh, tol);
        if s != reference {
            let line = reference.lines().zip(s.lines()).position(|(a, b)| a != b).unwrap_or(0);
            return Ok(PathIndependence::Counterexample { seed_a: u64::MAX, seed_b: seed, first_diff_line: line + 1 });
        }
    }
    Ok(PathIndependence::Ok { schedules: seeds.len() + 1 })
}

/// Faces whose centroid lies inside the closed chains (even-odd rule).
pub fn domain_submesh(mesh: &HalfEdgeMesh, chains: &[PolyChain]) -> Result<HalfEdgeMesh> {
    let keep: Vec<bool> = (0..mesh.num_faces())
        .map(|f| {
            let [a, b, c] = mesh.face_points(f);
            point_in_chains((a + b + c) * (1.0 / 3.0), chains)
        })
        .collect();
    mesh.submesh(&keep)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConformityReport {
    pub chain_vertices: usize,
    pub intersections: usize,
    pub segments: usize,
    /// Chain vertices with no mesh vertex within ε.
    pub missing_chain_vertices: Vec<u32>,
    /// Recorded intersection points with no mesh vertex within ε.
    pub missing_intersections: Vec<Point2>,
    /// Segments not realised by a contiguous path of mesh edges.
    pub uncovered_segments: Vec<u32>,
}

impl ConformityReport {
    pub fn ok(&self) -> bool {
        self.missing_chain_vertices.is_empty() && self.missing_intersections.is_empty() && self.uncovered_segments.is_empty()
    }
}

/// Checks that `mesh` reproduces the job's boundary: chain vertices and the
/// intersection points recorded on the preprocessed grid are mesh vertices, and
/// every segment is the union of the mesh edges joining the vertices that lie on it.
pub fn check_conformity(job: &RemeshJob, mesh: &HalfEdgeMesh) -> ConformityReport {
    let tol = job.options.tol;
    let eps = tol.eps;
    let verts = mesh.vertices();
    let bounds = Aabb::from_points(verts.iter().copied()).inflate(1.0);
    let mut grid = crate::mesh::spatial::BucketGrid::new(bounds, job.options.thresholds.e.max(4.0 * eps));
    for (i, &p) in verts.iter().enumerate() {
        grid.insert_point(i as u32, p);
    }
    let find = |p: Point2| grid.query_radius(p, eps).into_iter().find(|&v| verts[v as usize].dist(p) <= eps);
    let edges: std::collections::HashSet<(u32, u32)> =
        mesh.edges().into_iter().map(|(u, v)| crate::registry::edge_key(u, v)).collect();

    let b = &job.boundary;
    let mut r = ConformityReport { chain_vertices: b.vertices.len(), segments: b.num_segments(), ..Default::default() };
    for (i, &p) in b.vertices.iter().enumerate() {
        if find(p).is_none() {
            r.missing_chain_vertices.push(i as u32);
        }
    }
    let registry = Registry::build(&job.base, b, job.options.exec, tol);
    for (_, hits) in registry.edge_records() {
        for h in hits {
            r.intersections += 1;
            if find(h.point).is_none() {
                r.missing_intersections.push(h.point);
            }
        }
    }
    for s in 0..b.num_segments() as u32 {
        let (p, q) = b.seg(s);
        let d = q - p;
        let len2 = d.norm2();
        let box_ = Aabb::from_points([p, q]).inflate(eps);
        let mut on: Vec<(f64, u32)> = grid
            .query_unique(box_)
            .into_iter()
            .filter_map(|v| {
                let x = verts[v as usize];
                let t = (x - p).dot(d) / len2;
                let foot = p.lerp(q, t.clamp(0.0, 1.0));
                (x.dist(foot) <= eps).then_some((t, v))
            })
            .collect();
        on.sort_by(|a, b| a.0.total_cmp(&b.0));
        let ends_ok = on.first().is_some_and(|&(_, v)| verts[v as usize].dist(p) <= eps)
            && on.last().is_some_and(|&(_, v)| verts[v as usize].dist(q) <= eps);
        let path_ok = on.windows(2).all(|w| edges.contains(&crate::registry::edge_key(w[0].1, w[1].1)));
        if !(ends_ok && path_ok) {
            r.uncovered_segments.push(s);
        }
    }
    r
}

/// Identity of the patch stage: the faces a configuration would emit, without
/// touching the mesh. Used by the debug dump.
pub fn face_configs(job: &RemeshJob) -> Vec<(u32, Result<FaceConfig>)> {
    let o = &job.options;
    let registry = Registry::build(&job.base, &job.boundary, o.exec, o.tol);
    registry
        .intersected_faces()
        .iter()
        .map(|&f| (f, triangle_config(&job.base, &registry, &job.boundary, f)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::validate_watertight;
    use crate::scaffold::SQRT_045;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn grid() -> GridSpec {
        GridSpec::new(Aabb { min: p(0., 0.), max: p(10., 10.) }, SQRT_045)
    }

    #[test]
    fn empty_chain_set_is_the_raw_grid() {
        let out = remesh(Vec::new(), &grid(), RemeshOptions::default()).unwrap();
        assert_eq!(out.mesh, build_grid(&grid()).unwrap());
        assert_eq!(out.stats.intersected_faces, 0);
    }

    #[test]
    fn horizontal_chain_is_realised_by_mesh_edges() {
        let chain = PolyChain::new(vec![p(1.0, 5.13), p(9.0, 5.13)], false);
        let out = remesh(vec![chain.clone()], &grid(), RemeshOptions::default()).unwrap();
        assert!(validate_watertight(&out.mesh, Tolerance::default()).ok());
        let v = out.mesh.vertices();
        let on: Vec<(u32, u32)> = out
            .mesh
            .edges()
            .into_iter()
            .filter(|&(a, b)| (v[a as usize].y - 5.13).abs() < 1e-9 && (v[b as usize].y - 5.13).abs() < 1e-9)
            .collect();
        let covered: f64 = on.iter().map(|&(a, b)| v[a as usize].dist(v[b as usize])).sum();
        assert!((covered - 8.0).abs() < 1e-9, "covered {covered}");
        assert!(out.stats.patched_faces > 0);
    }

    #[test]
    fn stitch_identity_and_shared_vertex() {
        let base = build_grid(&grid()).unwrap();
        assert_eq!(stitch(&base, &[], Tolerance::default()).unwrap(), base);
        // Split faces 0 and its neighbour across their shared edge at the midpoint.
        let h = base.half_edges().iter().position(|h| !h.is_boundary()).unwrap();
        let he = base.half_edges()[h];
        let (f0, u, v) = (he.face, he.origin, base.dest(h as u32));
        let g = base.half_edges()[he.twin as usize].face;
        let mid = base.vertex(u).lerp(base.vertex(v), 0.5);
        let r = VRef::Cross { u: u.min(v), v: u.max(v), seg: 0 };
        let split = |f: u32| -> Vec<BoundTri> {
            let t = base.faces()[f as usize];
            let k = (0..3).find(|&k| edge_pair(t[k], t[(k + 1) % 3]) == edge_pair(u, v)).unwrap();
            let (a, b, c) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
            let b_ = |x: u32| (VRef::Mesh(x), base.vertex(x));
            vec![[b_(a), (r, mid), b_(c)], [(r, mid), b_(b), b_(c)]]
        };
        let out = stitch(&base, &[(f0, split(f0)), (g, split(g))], Tolerance::default()).unwrap();
        assert_eq!(out.num_vertices(), base.num_vertices() + 1);
        assert!(validate_watertight(&out, Tolerance::default()).ok());
    }

    fn edge_pair(a: u32, b: u32) -> (u32, u32) {
        (a.min(b), a.max(b))
    }

    #[test]
    fn mismatched_positions_are_rejected() {
        let base = build_grid(&grid()).unwrap();
        let t = base.faces()[0];
        let b_ = |x: u32| (VRef::Mesh(x), base.vertex(x));
        let r = VRef::Chain(0);
        let c = (base.vertex(t[0]) + base.vertex(t[1]) + base.vertex(t[2])) * (1.0 / 3.0);
        let fan = |q: Point2| vec![[b_(t[0]), b_(t[1]), (r, q)], [b_(t[1]), b_(t[2]), (r, q)], [b_(t[2]), b_(t[0]), (r, q)]];
        let t1 = base.faces()[1];
        let c1 = (base.vertex(t1[0]) + base.vertex(t1[1]) + base.vertex(t1[2])) * (1.0 / 3.0);
        let b1 = |x: u32| (VRef::Mesh(x), base.vertex(x));
        let other = vec![[b1(t1[0]), b1(t1[1]), (r, c1)], [b1(t1[1]), b1(t1[2]), (r, c1)], [b1(t1[2]), b1(t1[0]), (r, c1)]];
        assert!(matches!(stitch(&base, &[(0, fan(c)), (1, other)], Tolerance::default()), Err(Error::StitchMismatch(_))));
    }

    #[test]
    fn canonical_form_ignores_vertex_and_face_order() {
        let m = HalfEdgeMesh::from_indexed(vec![p(0., 0.), p(1., 0.), p(0., 1.), p(1., 1.)], vec![[0, 1, 2], [1, 3, 2]]).unwrap();
        let n = HalfEdgeMesh::from_indexed(vec![p(1., 1.), p(0., 1.), p(1., 0.), p(0., 0.)], vec![[2, 0, 1], [3, 2, 1]]).unwrap();
        assert_eq!(canonical_serialization(&m, Tolerance::default()), canonical_serialization(&n, Tolerance::default()));
    }
}
