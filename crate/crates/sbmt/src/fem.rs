//! Linear finite elements on triangle meshes: cotangent stiffness, lumped mass,
//! implicit Euler heat steps and Dirichlet harmonic solves.
//!
//! The stiffness matrix is stored positive semidefinite: `K_ij = -w_ij` off the
//! diagonal with `w_ij = (cot α + cot β) / 2`, and `K_ii = Σ_j w_ij`.

use crate::boundary::PolyChain;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geom::{point_segment_distance, Point2, Tolerance};
use crate::mesh::HalfEdgeMesh;

/// Symmetric sparse matrix in compressed-row form.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate triplets in their given order.
    fn from_triplets(n: usize, mut t: Vec<(u32, u32, f64)>) -> Self {
        t.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut last: Option<(u32, u32)> = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i as usize + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(|k| (self.cols[k] as usize, self.vals[k]))
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| (self.get(j, i) - v).abs() <= tol))
    }
}

/// Stiffness, lumped mass and the set of vertices held by Dirichlet conditions.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub stiffness: CsrMatrix,
    pub mass: Vec<f64>,
    pub constrained: Vec<bool>,
    /// Faces with an angle above 90°, whose opposite edge gets a negative weight
    /// contribution.
    pub obtuse_faces: usize,
}

impl SparseSystem {
    pub fn num_vertices(&self) -> usize {
        self.mass.len()
    }

    /// Off-diagonal cotangent weight `w_ij`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        -self.stiffness.get(i, j)
    }

    /// Additionally constrains every vertex lying on one of `chains`.
    pub fn constrain_chains(&mut self, mesh: &HalfEdgeMesh, chains: &[PolyChain], tol: Tolerance) {
        for (v, p) in mesh.vertices().iter().enumerate() {
            if !self.constrained[v] && on_chains(*p, chains, tol) {
                self.constrained[v] = true;
            }
        }
    }

    pub fn free(mut self) -> Self {
        self.constrained.iter_mut().for_each(|c| *c = false);
        self
    }

    /// Dirichlet energy `uᵀ K u`.
    pub fn energy(&self, u: &ScalarField) -> f64 {
        self.stiffness.quadratic_form(&u.values)
    }
}

fn on_chains(p: Point2, chains: &[PolyChain], tol: Tolerance) -> bool {
    chains.iter().any(|c| {
        (0..c.num_segments()).any(|k| {
            let (a, b) = c.segment(k);
            point_segment_distance(p, (a, b)).is_ok_and(|(d, _, _)| d <= tol.eps)
        })
    })
}

/// One value per mesh vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    pub fn from_fn(mesh: &HalfEdgeMesh, f: impl Fn(Point2) -> f64) -> Self {
        Self { values: mesh.vertices().iter().map(|&p| f(p)).collect() }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn cot(at: Point2, a: Point2, b: Point2) -> f64 {
    let (u, v) = (a - at, b - at);
    u.dot(v) / u.cross(v).abs()
}

pub fn assemble(mesh: &HalfEdgeMesh) -> Result<SparseSystem> {
    assemble_with(mesh, Exec::default())
}

/// Assembles with per-face work spread over `exec`; contributions are summed in
/// face order, so the result does not depend on the schedule. The hull vertices
/// are constrained.
pub fn assemble_with(mesh: &HalfEdgeMesh, exec: Exec) -> Result<SparseSystem> {
    let n = mesh.num_vertices();
    let local = exec.map_range(mesh.num_faces(), |f| {
        let tri = mesh.faces()[f];
        let p = mesh.face_points(f);
        let area = mesh.face_area(f);
        if !(area > 0.0) {
            return Err(Error::DegenerateFace(f));
        }
        let mut w = [0.0; 3];
        for k in 0..3 {
            // Weight of the edge opposite corner k.
            w[k] = 0.5 * cot(p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
        }
        Ok((tri, w, area, w.iter().any(|&x| x < 0.0)))
    });
    let mut triplets = Vec::with_capacity(mesh.num_faces() * 9);
    let mut mass = vec![0.0; n];
    let mut obtuse = 0;
    for r in local {
        let (tri, w, area, obt) = r?;
        obtuse += obt as usize;
        for k in 0..3 {
            let (i, j) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
            triplets.push((i, j, -w[k]));
            triplets.push((j, i, -w[k]));
            triplets.push((i, i, w[k]));
            triplets.push((j, j, w[k]));
            mass[tri[k] as usize] += area / 3.0;
        }
    }
    Ok(SparseSystem {
        stiffness: CsrMatrix::from_triplets(n, triplets),
        mass,
        constrained: mesh.boundary_vertices(),
        obtuse_faces: obtuse,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Relative residual target.
    pub tol: f64,
    /// Iteration cap as a multiple of the vertex count.
    pub max_iter_factor: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter_factor: 10 }
    }
}

/// Jacobi-preconditioned conjugate gradients for `A x = b` on the free vertices.
/// `apply` must leave constrained entries at zero.
fn pcg(apply: impl Fn(&[f64]) -> Vec<f64>, diag: &[f64], b: &[f64], free: &[bool], opts: SolverOptions) -> Result<Vec<f64>> {
    let n = b.len();
    let dot = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let precond = |r: &[f64]| -> Vec<f64> { (0..n).map(|i| if free[i] { r[i] / diag[i] } else { 0.0 }).collect() };
    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let max_iter = opts.max_iter_factor * n.max(1);
    let mut res = bnorm;
    for _ in 0..max_iter {
        let ap = apply(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = dot(&r, &r).sqrt();
        if res <= opts.tol * bnorm {
            return Ok(x);
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverFailure { iterations: max_iter, residual: res / bnorm })
}

/// `(M + s K)` restricted to the free vertices.
fn apply_shifted(sys: &SparseSystem, s: f64, x: &[f64]) -> Vec<f64> {
    (0..sys.num_vertices())
        .map(|i| {
            if sys.constrained[i] {
                return 0.0;
            }
            let kx: f64 = sys.stiffness.row(i).filter(|&(j, _)| !sys.constrained[j]).map(|(j, v)| v * x[j]).sum();
            sys.mass[i] * x[i] + s * kx
        })
        .collect()
}

/// One implicit Euler step of `u_t = α Δu` with the constrained values of `u`
/// held fixed.
pub fn heat_step(sys: &SparseSystem, u: &ScalarField, alpha: f64, dt: f64) -> Result<ScalarField> {
    heat_step_with(sys, u, alpha, dt, SolverOptions::default())
}

pub fn heat_step_with(sys: &SparseSystem, u: &ScalarField, alpha: f64, dt: f64, opts: SolverOptions) -> Result<ScalarField> {
    let n = sys.num_vertices();
    if u.values.len() != n {
        return Err(Error::InvalidInput(format!("field has {} values for {n} vertices", u.values.len())));
    }
    let s = alpha * dt;
    let free: Vec<bool> = sys.constrained.iter().map(|c| !c).collect();
    let b: Vec<f64> = (0..n)
        .map(|i| {
            if sys.constrained[i] {
                return 0.0;
            }
            let lift: f64 = sys.stiffness.row(i).filter(|&(j, _)| sys.constrained[j]).map(|(j, v)| v * u.values[j]).sum();
            sys.mass[i] * u.values[i] - s * lift
        })
        .collect();
    let diag: Vec<f64> = sys.stiffness.diag().iter().zip(&sys.mass).map(|(k, m)| m + s * k).collect();
    let mut x = pcg(|p| apply_shifted(sys, s, p), &diag, &b, &free, opts)?;
    for i in 0..n {
        if sys.constrained[i] {
            x[i] = u.values[i];
        }
    }
    Ok(ScalarField { values: x })
}

/// Solves `K u = 0` on the free vertices with `u = g` on the constrained ones.
pub fn solve_harmonic(sys: &SparseSystem, g: &ScalarField) -> Result<ScalarField> {
    let n = sys.num_vertices();
    if !sys.constrained.iter().any(|&c| c) {
        return Err(Error::InvalidInput("harmonic solve needs at least one constrained vertex".into()));
    }
    let free: Vec<bool> = sys.constrained.iter().map(|c| !c).collect();
    let b: Vec<f64> = (0..n)
        .map(|i| {
            if sys.constrained[i] {
                return 0.0;
            }
            -sys.stiffness.row(i).filter(|&(j, _)| sys.constrained[j]).map(|(j, v)| v * g.values[j]).sum::<f64>()
        })
        .collect();
    let apply = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| if free[i] { sys.stiffness.row(i).filter(|&(j, _)| free[j]).map(|(j, v)| v * x[j]).sum() } else { 0.0 })
            .collect()
    };
    let mut x = pcg(apply, &sys.stiffness.diag(), &b, &free, SolverOptions::default())?;
    for i in 0..n {
        if sys.constrained[i] {
            x[i] = g.values[i];
        }
    }
    Ok(ScalarField { values: x })
}

/// Area-weighted centroid of the mesh.
pub fn centroid(mesh: &HalfEdgeMesh) -> Point2 {
    let (mut c, mut a) = (Point2::new(0.0, 0.0), 0.0);
    for f in 0..mesh.num_faces() {
        let [p, q, r] = mesh.face_points(f);
        let w = mesh.face_area(f);
        c = c + (p + q + r) * (w / 3.0);
        a += w;
    }
    c * (1.0 / a)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatParams {
    pub alpha: f64,
    pub dt: f64,
    pub steps: usize,
    pub amplitude: f64,
    /// Pulse width in pixels.
    pub sigma: f64,
    /// Pulse centre; the mesh centroid when `None`.
    pub center: Option<Point2>,
}

impl Default for HeatParams {
    fn default() -> Self {
        Self { alpha: 500.0, dt: 1e-3, steps: 500, amplitude: 100.0, sigma: 5.0, center: None }
    }
}

/// `amplitude · exp(-|x - c|² / (2σ²))`, zero on constrained vertices.
pub fn gaussian_pulse(mesh: &HalfEdgeMesh, sys: &SparseSystem, params: &HeatParams) -> ScalarField {
    let c = params.center.unwrap_or_else(|| centroid(mesh));
    let mut u = ScalarField::from_fn(mesh, |p| {
        params.amplitude * (-(p - c).norm2() / (2.0 * params.sigma * params.sigma)).exp()
    });
    for (v, &con) in sys.constrained.iter().enumerate() {
        if con {
            u.values[v] = 0.0;
        }
    }
    u
}

#[derive(Clone, Debug)]
pub struct HeatRun {
    /// Peak value before the first step and after each step.
    pub peaks: Vec<f64>,
    pub energies: Vec<f64>,
    /// Steps at which the field left the range of the previous one.
    pub max_principle_flags: Vec<usize>,
    pub snapshots: Vec<(usize, ScalarField)>,
    pub obtuse_faces: usize,
}

impl HeatRun {
    pub fn peak_strictly_decreasing(&self) -> bool {
        self.peaks.windows(2).all(|w| w[1] < w[0])
    }

    /// Energy non-increasing up to a relative slack of `rel`.
    pub fn energy_non_increasing(&self, rel: f64) -> bool {
        self.energies.windows(2).all(|w| w[1] <= w[0] * (1.0 + rel))
    }
}

/// Runs `params.steps` implicit steps from a Gaussian pulse, keeping the fields
/// after the steps listed in `snapshot_steps` (0 is the initial field).
pub fn run_heat(mesh: &HalfEdgeMesh, sys: &SparseSystem, params: &HeatParams, snapshot_steps: &[usize]) -> Result<HeatRun> {
    let mut u = gaussian_pulse(mesh, sys, params);
    let mut run = HeatRun {
        peaks: vec![u.max()],
        energies: vec![sys.energy(&u)],
        max_principle_flags: Vec::new(),
        snapshots: Vec::new(),
        obtuse_faces: sys.obtuse_faces,
    };
    if snapshot_steps.contains(&0) {
        run.snapshots.push((0, u.clone()));
    }
    for step in 1..=params.steps {
        let next = heat_step(sys, &u, params.alpha, params.dt)?;
        let slack = 1e-9 * params.amplitude;
        if next.max() > u.max() + slack || next.min() < u.min() - slack {
            run.max_principle_flags.push(step);
        }
        u = next;
        run.peaks.push(u.max());
        run.energies.push(sys.energy(&u));
        if snapshot_steps.contains(&step) {
            run.snapshots.push((step, u.clone()));
        }
    }
    Ok(run)
}
