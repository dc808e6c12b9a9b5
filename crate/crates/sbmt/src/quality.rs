//! Mesh statistics, the closed-form angle and area bounds, the angle histogram,
//! and the rule ablation and threshold sweep drivers.

use crate::boundary::BitmapMask;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geom::{min_angle_deg, triangle_area, Point2};
use crate::mesh::HalfEdgeMesh;
use crate::preprocess::{validate_thresholds, RuleSet, Thresholds};
use crate::remesh::{mesh_bitmap, RemeshOptions, RemeshStats};

/// Faces with a smaller minimum angle are slivers.
pub const SLIVER_DEG: f64 = 5.0;
/// Relative edge-length spread below which a face counts as equilateral.
pub const EQUILATERAL_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct QualityReport {
    pub triangle_count: usize,
    pub min_angle: f64,
    pub min_area: f64,
    pub sliver_count: usize,
    pub equilateral_count: usize,
    pub area_variance: f64,
    pub ar_median: f64,
    pub ar_p95: f64,
    pub ar_max: f64,
}

impl QualityReport {
    pub fn equilateral_ratio(&self) -> f64 {
        self.equilateral_count as f64 / self.triangle_count as f64
    }

    pub const CSV_HEADER: &'static str =
        "triangles,min_angle_deg,min_area,slivers,equilateral,equilateral_ratio,area_variance,ar_median,ar_p95,ar_max";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.6},{:.6e},{},{},{:.6},{:.6e},{:.9},{:.9},{:.9}",
            self.triangle_count,
            self.min_angle,
            self.min_area,
            self.sliver_count,
            self.equilateral_count,
            self.equilateral_ratio(),
            self.area_variance,
            self.ar_median,
            self.ar_p95,
            self.ar_max
        )
    }
}

/// Longest edge over shortest altitude.
pub fn aspect_ratio(p: [Point2; 3]) -> f64 {
    let l = (0..3).map(|k| p[k].dist(p[(k + 1) % 3])).fold(0.0, f64::max);
    l * l / (2.0 * triangle_area(p[0], p[1], p[2]).abs())
}

pub fn is_equilateral(p: [Point2; 3]) -> bool {
    let l: Vec<f64> = (0..3).map(|k| p[k].dist(p[(k + 1) % 3])).collect();
    let (lo, hi) = (l.iter().copied().fold(f64::INFINITY, f64::min), l.iter().copied().fold(0.0, f64::max));
    hi - lo <= EQUILATERAL_TOL * hi
}

/// Nearest-rank quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let i = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[i]
}

pub fn quality_report(mesh: &HalfEdgeMesh) -> Result<QualityReport> {
    let n = mesh.num_faces();
    if n == 0 {
        return Err(Error::EmptyMesh);
    }
    let mut min_angle = f64::INFINITY;
    let mut min_area = f64::INFINITY;
    let mut slivers = 0;
    let mut equilateral = 0;
    let mut areas = Vec::with_capacity(n);
    let mut ar = Vec::with_capacity(n);
    for f in 0..n {
        let p = mesh.face_points(f);
        let a = min_angle_deg(p);
        let area = mesh.face_area(f);
        min_angle = min_angle.min(a);
        min_area = min_area.min(area);
        slivers += usize::from(a < SLIVER_DEG);
        equilateral += usize::from(is_equilateral(p));
        areas.push(area);
        ar.push(aspect_ratio(p));
    }
    let mean = areas.iter().sum::<f64>() / n as f64;
    let area_variance = areas.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64;
    ar.sort_by(f64::total_cmp);
    let ar_median = if n % 2 == 1 { ar[n / 2] } else { 0.5 * (ar[n / 2 - 1] + ar[n / 2]) };
    Ok(QualityReport {
        triangle_count: n,
        min_angle,
        min_area,
        sliver_count: slivers,
        equilateral_count: equilateral,
        area_variance,
        ar_median,
        ar_p95: quantile(&ar, 0.95),
        ar_max: ar[n - 1],
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    /// Lower bound on every interior angle, degrees.
    pub theta_min: f64,
    /// Lower bound on every face area.
    pub area_min: f64,
}

/// `θ > min(atan(b / (e + a - sqrt(a² - b²))), atan(c / (e + a)))` and `A > bc/2`.
pub fn theoretical_bounds(t: &Thresholds) -> Result<Bounds> {
    let d = t.a * t.a - t.b * t.b;
    if d < 0.0 {
        return Err(Error::InvalidThresholds("a² < b²".into()));
    }
    let t1 = (t.b / (t.e + t.a - d.sqrt())).atan();
    let t2 = (t.c / (t.e + t.a)).atan();
    Ok(Bounds { theta_min: t1.min(t2).to_degrees(), area_min: 0.5 * t.b * t.c })
}

/// Minimum-angle histogram: bins of width 2° centred at 0°, 2°, ..., 60°.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub centers: Vec<f64>,
    pub raw: Vec<u64>,
    pub smoothed: Vec<f64>,
}

pub const BIN_WIDTH: f64 = 2.0;
pub const NUM_BINS: usize = 31;

pub fn bin_of(angle_deg: f64) -> usize {
    (((angle_deg + 0.5 * BIN_WIDTH) / BIN_WIDTH).floor().max(0.0) as usize).min(NUM_BINS - 1)
}

/// Gaussian kernel with sigma one bin, truncated at three bins and normalised.
fn kernel() -> [f64; 7] {
    let mut k = [0.0; 7];
    for (i, v) in k.iter_mut().enumerate() {
        let x = i as f64 - 3.0;
        *v = (-0.5 * x * x).exp();
    }
    let s: f64 = k.iter().sum();
    k.map(|v| v / s)
}

pub fn angle_histogram(mesh: &HalfEdgeMesh) -> Result<Histogram> {
    if mesh.num_faces() == 0 {
        return Err(Error::EmptyMesh);
    }
    let mut raw = vec![0u64; NUM_BINS];
    for f in 0..mesh.num_faces() {
        raw[bin_of(min_angle_deg(mesh.face_points(f)))] += 1;
    }
    let k = kernel();
    let smoothed = (0..NUM_BINS)
        .map(|i| {
            (0..7)
                .filter_map(|j| {
                    let src = i as i64 + j as i64 - 3;
                    (0..NUM_BINS as i64).contains(&src).then(|| k[j] * raw[src as usize] as f64)
                })
                .sum()
        })
        .collect();
    let centers = (0..NUM_BINS).map(|i| i as f64 * BIN_WIDTH).collect();
    Ok(Histogram { centers, raw, smoothed })
}

impl Histogram {
    /// Index of the largest raw bin (the first one on ties).
    pub fn mode(&self) -> usize {
        let m = *self.raw.iter().max().unwrap_or(&0);
        self.raw.iter().position(|&c| c == m).unwrap_or(0)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_center_deg,raw,smoothed\n");
        for i in 0..self.centers.len() {
            s.push_str(&format!("{},{},{:.6}\n", self.centers[i], self.raw[i], self.smoothed[i]));
        }
        s
    }
}

/// The five ablation configurations.
pub const ABLATIONS: [(&str, RuleSet); 5] = [
    ("E1", RuleSet { snap: true, repel: true, eliminate: true }),
    ("E2", RuleSet { snap: false, repel: true, eliminate: true }),
    ("E3", RuleSet { snap: true, repel: false, eliminate: true }),
    ("E4", RuleSet { snap: true, repel: true, eliminate: false }),
    ("E5", RuleSet { snap: false, repel: false, eliminate: false }),
];

#[derive(Debug)]
pub struct AblationRow {
    pub name: &'static str,
    pub rules: RuleSet,
    pub outcome: Result<(QualityReport, RemeshStats)>,
}

impl AblationRow {
    /// A disabled rule let some face break the table's preconditions.
    pub fn warning(&self) -> Option<String> {
        match &self.outcome {
            Ok((_, s)) if s.fallback_faces > 0 => {
                Some(format!("{}: {} faces outside the table's preconditions, fan-split", self.name, s.fallback_faces))
            }
            _ => None,
        }
    }
}

pub fn run_ablation(mask: &BitmapMask, t: Thresholds, exec: Exec) -> Vec<AblationRow> {
    ABLATIONS
        .iter()
        .map(|&(name, rules)| {
            let opts = RemeshOptions { thresholds: t, exec, ..Default::default() }.with_rules(rules);
            let outcome = mesh_bitmap(mask, opts).and_then(|(_, out)| Ok((quality_report(&out.mesh)?, out.stats)));
            AblationRow { name, rules, outcome }
        })
        .collect()
}

#[derive(Debug)]
pub struct SweepRow {
    pub thresholds: Thresholds,
    /// Violated inequalities; the triplet is not run when this is nonempty.
    pub invalid: Vec<String>,
    pub outcome: Option<Result<QualityReport>>,
}

/// One run per admissible triplet; inadmissible ones are flagged and skipped.
pub fn sensitivity_sweep(mask: &BitmapMask, triplets: &[Thresholds], exec: Exec) -> Vec<SweepRow> {
    triplets
        .iter()
        .map(|&t| {
            let invalid = validate_thresholds(&t, f64::INFINITY);
            let outcome = invalid.is_empty().then(|| {
                let opts = RemeshOptions { thresholds: t, exec, ..Default::default() };
                mesh_bitmap(mask, opts).and_then(|(_, out)| quality_report(&out.mesh))
            });
            SweepRow { thresholds: t, invalid, outcome }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Aabb;
    use crate::scaffold::{build_grid, GridSpec, SQRT_045};
    use approx::assert_relative_eq;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn paper_bounds() {
        let b = theoretical_bounds(&Thresholds::default()).unwrap();
        assert!((10.0..10.2).contains(&b.theta_min), "{}", b.theta_min);
        assert!((1.13e-2..1.15e-2).contains(&b.area_min));
        assert_relative_eq!(b.area_min, 0.0114375, epsilon = 1e-12);
    }

    #[test]
    fn bound_limits_and_errors() {
        let t = Thresholds::new(0.26, 1e-12, 0.183, SQRT_045);
        let b = theoretical_bounds(&t).unwrap();
        assert!(b.theta_min < 1e-6 && b.area_min < 1e-9);
        assert!(theoretical_bounds(&Thresholds::new(0.1, 0.2, 0.05, 1.0)).is_err());
    }

    #[test]
    fn single_equilateral_and_right_triangles() {
        let h = 3f64.sqrt() / 2.0;
        let m = HalfEdgeMesh::from_indexed(vec![p(0., 0.), p(1., 0.), p(0.5, h)], vec![[0, 1, 2]]).unwrap();
        let r = quality_report(&m).unwrap();
        assert_relative_eq!(r.min_angle, 60.0, epsilon = 1e-9);
        assert_relative_eq!(r.ar_max, 2.0 / 3f64.sqrt(), epsilon = 1e-12);
        assert_eq!(r.equilateral_ratio(), 1.0);
        let m = HalfEdgeMesh::from_indexed(vec![p(0., 0.), p(4., 0.), p(0., 3.)], vec![[0, 1, 2]]).unwrap();
        let r = quality_report(&m).unwrap();
        assert_relative_eq!(r.min_angle, (3f64 / 4.0).atan().to_degrees(), epsilon = 1e-9);
        assert_relative_eq!(r.ar_max, 5.0 / 2.4, epsilon = 1e-12);
        assert_eq!(r.equilateral_count, 0);
    }

    #[test]
    fn raw_grid_statistics() {
        let g = build_grid(&GridSpec::new(Aabb { min: p(0., 0.), max: p(20., 20.) }, SQRT_045)).unwrap();
        let r = quality_report(&g).unwrap();
        let ar = 2.0 / 3f64.sqrt();
        assert!((r.ar_median - ar).abs() < 1e-9 && (r.ar_max - ar).abs() < 1e-9);
        let h = angle_histogram(&g).unwrap();
        assert_eq!(h.raw[h.mode()], g.num_faces() as u64);
        assert_eq!(h.centers[h.mode()], 60.0);
        assert_eq!(h.raw.iter().sum::<u64>(), g.num_faces() as u64);
    }

    #[test]
    fn bins_are_centred_on_even_degrees() {
        assert_eq!(bin_of(59.2), 30);
        assert_eq!(bin_of(60.0), 30);
        assert_eq!(bin_of(58.9), 29);
        assert_eq!(bin_of(0.3), 0);
        assert_eq!(bin_of(10.085), 5);
    }

    #[test]
    fn empty_mesh_errors() {
        assert!(matches!(quality_report(&HalfEdgeMesh::empty()), Err(Error::EmptyMesh)));
        assert!(matches!(angle_histogram(&HalfEdgeMesh::empty()), Err(Error::EmptyMesh)));
    }
}
