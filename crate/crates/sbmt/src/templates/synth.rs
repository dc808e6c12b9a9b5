//! Patch synthesis for configurations without a reference face list.
//!
//! With a boundary vertex inside the face the patch is a fan from it. Otherwise the
//! chords cut the perimeter polygon into regions and each region is triangulated
//! exhaustively, keeping the triangulation with the lexicographically largest
//! sorted list of face minimum angles on the reference instances.

use std::cmp::Ordering;

use super::{canonical_instance, label_point, normalized_faces, Label};
use crate::classify::Topology;
use crate::geom::{min_angle_deg, triangle_area, Point2};

pub fn synthesize(topo: &Topology) -> Vec<[Label; 3]> {
    synthesize_on(topo, &[canonical_instance(topo)])
}

/// Synthesis scored on the given instances (perimeter points and apex).
pub fn synthesize_on(topo: &Topology, instances: &[(Vec<Point2>, Point2)]) -> Vec<[Label; 3]> {
    let n = topo.perim.len() as u16;
    if topo.has_apex() {
        return (0..n).map(|i| [Label::Node(i), Label::Node((i + 1) % n), Label::Apex]).collect();
    }
    let mut regions: Vec<Vec<u16>> = vec![(0..n).collect()];
    for (a, b) in super::enumerate::chords(topo) {
        let Some(r) = regions.iter().position(|r| r.contains(&a) && r.contains(&b)) else { continue };
        let reg = regions.swap_remove(r);
        let (i, j) = {
            let i = reg.iter().position(|&x| x == a).unwrap();
            let j = reg.iter().position(|&x| x == b).unwrap();
            (i.min(j), i.max(j))
        };
        let m = reg.len();
        if j - i == 1 || (i == 0 && j == m - 1) {
            regions.push(reg);
            continue;
        }
        regions.push(reg[i..=j].to_vec());
        let mut other: Vec<u16> = reg[j..].to_vec();
        other.extend_from_slice(&reg[..=i]);
        regions.push(other);
    }
    regions.sort();
    let mut faces = Vec::new();
    for reg in &regions {
        faces.extend(best_triangulation(reg, instances));
    }
    faces
}

fn triangulations(poly: &[u16]) -> Vec<Vec<[u16; 3]>> {
    let k = poly.len();
    if k < 3 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for m in 1..k - 1 {
        let left = triangulations(&poly[..=m]);
        let right = triangulations(&poly[m..]);
        for l in &left {
            for r in &right {
                let mut t = vec![[poly[0], poly[m], poly[k - 1]]];
                t.extend_from_slice(l);
                t.extend_from_slice(r);
                out.push(t);
            }
        }
    }
    out
}

fn score(faces: &[[Label; 3]], instances: &[(Vec<Point2>, Point2)]) -> Option<Vec<f64>> {
    let mut s = Vec::new();
    for (nodes, apex) in instances {
        for f in faces {
            let p = f.map(|l| label_point(nodes, *apex, l));
            if triangle_area(p[0], p[1], p[2]) <= 1e-12 {
                return None;
            }
            s.push(min_angle_deg(p));
        }
    }
    s.sort_by(f64::total_cmp);
    Some(s)
}

fn compare_scores(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > 1e-9 {
            return x.total_cmp(y);
        }
    }
    Ordering::Equal
}

fn best_triangulation(poly: &[u16], instances: &[(Vec<Point2>, Point2)]) -> Vec<[Label; 3]> {
    let mut best: Option<(Vec<f64>, Vec<[Label; 3]>)> = None;
    for t in triangulations(poly) {
        let faces: Vec<[Label; 3]> = t.iter().map(|f| f.map(Label::Node)).collect();
        let Some(s) = score(&faces, instances) else { continue };
        let norm = normalized_faces(&faces);
        let better = match &best {
            None => true,
            Some((bs, bf)) => match compare_scores(&s, bs) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => norm < *bf,
            },
        };
        if better {
            best = Some((s, norm));
        }
    }
    best.map(|b| b.1).unwrap_or_default()
}
