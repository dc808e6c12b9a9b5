use proptest::prelude::*;

use sbmt::boundary::{parse_bitmap, BitmapMask};
use sbmt::exec::Exec;
use sbmt::fem::{assemble, solve_harmonic, ScalarField};
use sbmt::geom::{orient2d, seg_seg_intersect, IntersectKind, Point2, Tolerance};
use sbmt::mesh::io::{off_string, read_off};
use sbmt::mesh::validate_watertight;
use sbmt::preprocess::{validate_thresholds, Thresholds};
use sbmt::quality::{quality_report, theoretical_bounds};
use sbmt::remesh::{canonical_serialization, check_conformity, grid_for_mask, mesh_bitmap, RemeshOptions};
use sbmt::scaffold::build_grid;
use sbmt::{Error, HalfEdgeMesh};

/// A smooth star-shaped blob whose features are wider than a grid cell.
fn smooth_blob() -> impl Strategy<Value = BitmapMask> {
    (9.0..16.0f64, 0.0..1.5f64, 0.0..1.5f64, 0.0..6.3f64, 0.0..6.3f64).prop_map(|(r, a2, a3, p2, p3)| {
        BitmapMask::from_fn(48, 48, |x, y| {
            let (dx, dy) = (x as f64 - 23.5, y as f64 - 23.5);
            let t = dy.atan2(dx);
            dx.hypot(dy) <= r + a2 * (2.0 * t + p2).cos() + a3 * (3.0 * t + p3).cos()
        })
    })
}

/// A union of up to four discs on a 48 px canvas, kept off the frame. Near
/// misses between discs can leave gaps narrower than a grid cell.
fn blob() -> impl Strategy<Value = BitmapMask> {
    prop::collection::vec((12.0..36.0f64, 12.0..36.0f64, 5.0..11.0f64), 1..4).prop_map(|discs| {
        BitmapMask::from_fn(48, 48, |x, y| {
            let (px, py) = (x as f64, y as f64);
            discs.iter().any(|&(cx, cy, r)| (px - cx).powi(2) + (py - cy).powi(2) <= r * r)
        })
    })
}

fn point() -> impl Strategy<Value = Point2> {
    (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y)| Point2::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn meshed_blobs_are_watertight_conforming_and_cover_the_grid(mask in smooth_blob()) {
        let opts = RemeshOptions::default();
        let (job, out) = mesh_bitmap(&mask, opts).unwrap();
        let tol = opts.tol;
        prop_assert!(validate_watertight(&out.mesh, tol).ok());
        let c = check_conformity(&job, &out.mesh);
        prop_assert!(c.ok(), "{:?}", c);
        let raw = build_grid(&grid_for_mask(&mask, opts.thresholds.e)).unwrap();
        let rel = (out.mesh.total_area() - raw.total_area()).abs() / raw.total_area();
        prop_assert!(rel < 1e-9, "area drift {rel}");
        let q = quality_report(&out.mesh).unwrap();
        prop_assert_eq!(q.sliver_count, 0);
        prop_assert!(q.min_area > 0.5 * theoretical_bounds(&opts.thresholds).unwrap().area_min);
    }

    #[test]
    fn blobs_mesh_cleanly_or_report_the_protocol(mask in blob()) {
        let opts = RemeshOptions::default();
        match mesh_bitmap(&mask, opts) {
            Ok((job, out)) => {
                prop_assert!(validate_watertight(&out.mesh, opts.tol).ok());
                prop_assert!(check_conformity(&job, &out.mesh).ok());
            }
            Err(e) => prop_assert!(matches!(e, Error::ProtocolViolation { .. }), "{e}"),
        }
    }

    #[test]
    fn schedules_and_thread_counts_do_not_change_the_mesh(mask in smooth_blob(), seed in any::<u64>()) {
        let seq = RemeshOptions { exec: Exec::Sequential, ..Default::default() };
        let par = RemeshOptions { exec: Exec::Threads(3), ..Default::default() };
        let (job, a) = mesh_bitmap(&mask, seq).unwrap();
        let (_, b) = mesh_bitmap(&mask, par).unwrap();
        let shuffled = job.run(Some(seed)).unwrap();
        let tol = seq.tol;
        let reference = canonical_serialization(&a.mesh, tol);
        prop_assert_eq!(&reference, &canonical_serialization(&b.mesh, tol));
        prop_assert_eq!(&reference, &canonical_serialization(&shuffled.mesh, tol));
        prop_assert_eq!(off_string(&a.mesh), off_string(&b.mesh));
    }

    #[test]
    fn pgm_round_trip(mask in blob()) {
        prop_assert_eq!(parse_bitmap(&mask.to_pgm(), false).unwrap(), mask);
    }

    #[test]
    fn orientation_is_antisymmetric(p in point(), q in point(), r in point()) {
        let tol = Tolerance::default();
        prop_assert_eq!(orient2d(p, q, r, tol), -orient2d(q, p, r, tol));
        prop_assert_eq!(orient2d(p, q, r, tol), orient2d(q, r, p, tol));
    }

    #[test]
    fn intersection_points_lie_on_both_segments(a in point(), b in point(), c in point(), d in point()) {
        let tol = Tolerance::default();
        prop_assume!(a.dist(b) > 1e-3 && c.dist(d) > 1e-3);
        let on = |p: Point2, s: (Point2, Point2)| {
            let t = ((p - s.0).dot(s.1 - s.0) / (s.1 - s.0).norm2()).clamp(0.0, 1.0);
            p.dist(s.0.lerp(s.1, t))
        };
        match seg_seg_intersect((a, b), (c, d), tol).unwrap() {
            IntersectKind::Point(p) => {
                prop_assert!(on(p, (a, b)) < 1e-7 && on(p, (c, d)) < 1e-7);
                prop_assert!(!matches!(seg_seg_intersect((c, d), (a, b), tol).unwrap(), IntersectKind::None));
            }
            IntersectKind::Overlap(..) => {}
            IntersectKind::None => {
                prop_assert_eq!(seg_seg_intersect((c, d), (a, b), tol).unwrap(), IntersectKind::None);
            }
        }
    }

    #[test]
    fn admissible_thresholds_have_positive_bounds(a in 0.05..0.33f64, fb in 0.01..0.99f64, fc in 0.01..0.99f64) {
        let e = sbmt::scaffold::SQRT_045;
        let t = Thresholds::new(a, fb * a / 2.0, fc * a / std::f64::consts::SQRT_2, e);
        prop_assert!(validate_thresholds(&t, f64::INFINITY).is_empty());
        let bd = theoretical_bounds(&t).unwrap();
        prop_assert!(bd.theta_min > 0.0 && bd.theta_min < 60.0);
        prop_assert!(bd.area_min > 0.0 && bd.area_min < 3f64.sqrt() / 4.0 * e * e);
    }

    #[test]
    fn stiffness_is_symmetric_with_zero_row_sums(jitter in prop::collection::vec((-0.08..0.08f64, -0.08..0.08f64), 64)) {
        let mesh = jittered_grid(&jitter);
        let sys = assemble(&mesh).unwrap();
        prop_assert!(sys.stiffness.is_symmetric(1e-12));
        for i in 0..sys.num_vertices() {
            let s: f64 = sys.stiffness.row(i).map(|(_, v)| v).sum();
            prop_assert!(s.abs() < 1e-9, "row {i} sums to {s}");
        }
        let ones = vec![1.0; sys.num_vertices()];
        prop_assert!(sys.stiffness.quadratic_form(&ones).abs() < 1e-9);
    }

    #[test]
    fn harmonic_solve_reproduces_affine_data(jitter in prop::collection::vec((-0.08..0.08f64, -0.08..0.08f64), 64),
                                             k in (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64)) {
        let mesh = jittered_grid(&jitter);
        let sys = assemble(&mesh).unwrap();
        let f = |p: Point2| k.0 * p.x + k.1 * p.y + k.2;
        let u = solve_harmonic(&sys, &ScalarField::from_fn(&mesh, f)).unwrap();
        for (p, v) in mesh.vertices().iter().zip(&u.values) {
            prop_assert!((v - f(*p)).abs() < 1e-6);
        }
    }

    #[test]
    fn off_round_trip_preserves_the_mesh(jitter in prop::collection::vec((-0.08..0.08f64, -0.08..0.08f64), 64)) {
        let mesh = jittered_grid(&jitter);
        let back = read_off(off_string(&mesh).as_bytes()).unwrap();
        prop_assert_eq!(back.faces(), mesh.faces());
        for (a, b) in back.vertices().iter().zip(mesh.vertices()) {
            prop_assert!(a.dist(*b) < 1e-12);
        }
    }
}

/// A chain vertex 0.27 from its nearest grid vertex sits within `b` of two edges
/// of a face skewed by a repelled vertex.
#[test]
fn deletion_conflict_after_repulsion_is_resolved() {
    let (r, a2, a3, p2, p3) = (10.296, 0.788, 0.402, 0.557, 0.633);
    let mask = BitmapMask::from_fn(48, 48, |x, y| {
        let (dx, dy) = (x as f64 - 23.5, y as f64 - 23.5);
        let t = dy.atan2(dx);
        dx.hypot(dy) <= r + a2 * (2.0 * t + p2).cos() + a3 * (3.0 * t + p3).cos()
    });
    let opts = RemeshOptions::default();
    let (job, out) = mesh_bitmap(&mask, opts).unwrap();
    assert!(out.stats.preprocess.conflicts >= 1);
    assert!(validate_watertight(&out.mesh, opts.tol).ok());
    assert!(check_conformity(&job, &out.mesh).ok());
    let q = quality_report(&out.mesh).unwrap();
    assert_eq!(q.sliver_count, 0);
    assert!(q.min_angle > 10.0, "{}", q.min_angle);
}

/// An 8 × 8 vertex grid split into right triangles, interior vertices jittered.
fn jittered_grid(jitter: &[(f64, f64)]) -> HalfEdgeMesh {
    let n = 8;
    let mut v = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let interior = i > 0 && j > 0 && i < n - 1 && j < n - 1;
            let (dx, dy) = if interior { jitter[j * n + i] } else { (0.0, 0.0) };
            v.push(Point2::new(i as f64 + dx, j as f64 + dy));
        }
    }
    let id = |i: usize, j: usize| (j * n + i) as u32;
    let mut f = Vec::new();
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            f.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            f.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    HalfEdgeMesh::from_indexed(v, f).unwrap()
}
