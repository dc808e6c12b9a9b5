use std::path::PathBuf;

use sbmt::boundary::load_bitmap;
use sbmt::exec::Exec;
use sbmt::fixtures::Fixture;
use sbmt::mesh::io::{obj_string, off_string, read_obj, read_off};
use sbmt::mesh::validate_watertight;
use sbmt::preprocess::{RuleSet, Thresholds};
use sbmt::quality::{quality_report, theoretical_bounds};
use sbmt::remesh::{check_conformity, domain_submesh, mesh_bitmap, RemeshOptions};
use sbmt::templates::{generate, table, verify_table};

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(format!("{name}.pgm"))
}

#[test]
fn shipped_fixtures_match_their_generators() {
    for f in Fixture::MAIN {
        let shipped = load_bitmap(&fixture_path(f.name()), false).unwrap();
        assert_eq!(shipped, f.mask(200), "{}", f.name());
    }
}

#[test]
fn embedded_catalog_is_the_generated_table() {
    let (generated, _) = generate();
    assert_eq!(generated.to_tsv(), table().to_tsv());
    assert!(verify_table(table()).ok());
}

#[test]
fn domain_with_a_hole_meshes_with_two_boundary_loops() {
    let opts = RemeshOptions::default();
    let (job, out) = mesh_bitmap(&Fixture::StarWithHole.mask(120), opts).unwrap();
    assert_eq!(job.boundary.chains.len(), 2);
    assert!(validate_watertight(&out.mesh, opts.tol).ok());
    assert!(check_conformity(&job, &out.mesh).ok());
    let domain = domain_submesh(&out.mesh, &job.boundary.chains).unwrap();
    assert_eq!(domain.boundary_loops(), 2);
    assert_eq!(domain.euler_characteristic(), 0);
    let q = quality_report(&domain).unwrap();
    assert_eq!(q.sliver_count, 0);
    assert!(q.min_area > theoretical_bounds(&opts.thresholds).unwrap().area_min);
}

#[test]
fn domain_area_matches_the_traced_polygon() {
    let (job, out) = mesh_bitmap(&Fixture::Droplet.mask(100), RemeshOptions::default()).unwrap();
    let domain = domain_submesh(&out.mesh, &job.boundary.chains).unwrap();
    let enclosed: f64 = job.boundary.chains.iter().map(|c| c.signed_area().abs()).sum();
    assert!((domain.total_area() - enclosed).abs() < 1e-8 * enclosed);
}

#[test]
fn output_bytes_do_not_depend_on_thread_count() {
    let mask = Fixture::Y.mask(120);
    let off: Vec<String> = [Exec::Sequential, Exec::Threads(2), Exec::Parallel]
        .into_iter()
        .map(|exec| off_string(&mesh_bitmap(&mask, RemeshOptions { exec, ..Default::default() }).unwrap().1.mesh))
        .collect();
    assert_eq!(off[0], off[1]);
    assert_eq!(off[0], off[2]);
}

#[test]
fn off_and_obj_round_trip_a_fixture_mesh() {
    let (_, out) = mesh_bitmap(&Fixture::Star.mask(80), RemeshOptions::default()).unwrap();
    let a = read_off(off_string(&out.mesh).as_bytes()).unwrap();
    let b = read_obj(obj_string(&out.mesh).as_bytes()).unwrap();
    assert_eq!(a.faces(), out.mesh.faces());
    assert_eq!(b.faces(), out.mesh.faces());
    assert_eq!(off_string(&a), off_string(&out.mesh));
}

#[test]
fn disabling_rules_never_beats_the_full_set_on_slivers() {
    let mask = Fixture::Star.mask(100);
    let t = Thresholds::default();
    let full = quality_report(&mesh_bitmap(&mask, RemeshOptions { thresholds: t, ..Default::default() }).unwrap().1.mesh).unwrap();
    let none = RemeshOptions { thresholds: t, ..Default::default() }.with_rules(RuleSet { snap: false, repel: false, eliminate: false });
    let (_, out) = mesh_bitmap(&mask, none).unwrap();
    let bare = quality_report(&out.mesh).unwrap();
    assert_eq!(full.sliver_count, 0);
    assert!(bare.sliver_count > 0 && bare.min_angle < full.min_angle);
}

#[test]
fn inadmissible_thresholds_are_rejected_before_meshing() {
    let opts = RemeshOptions { thresholds: Thresholds::new(0.3, 0.2, 0.1, Thresholds::default().e), ..Default::default() };
    let err = mesh_bitmap(&Fixture::Star.mask(60), opts).unwrap_err();
    assert!(matches!(err, sbmt::Error::InvalidThresholds(_)), "{err}");
}
