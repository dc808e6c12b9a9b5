//! Reference configurations with hand-written face lists.
//!
//! Each case is a drawing: a triangle `A B C`, a chain `P1 P2 [P3]` and labelled
//! edge points. Running the case through the registry and classifier yields its
//! key; the face list, written in the drawing's labels, becomes the patch.

use std::collections::BTreeMap;

use super::{normalized_faces, parse_key, Label, Patch, TemplateTable};
use crate::boundary::{Boundary, PolyChain};
use crate::classify::{triangle_config, FaceConfig};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geom::{triangle_area, Point2, Tolerance};
use crate::mesh::HalfEdgeMesh;
use crate::registry::Registry;

pub const REFERENCE_CASES: &str = include_str!("reference_cases.txt");

#[derive(Clone, Debug, PartialEq)]
pub struct Case {
    pub name: String,
    pub class: (u8, u8),
    pub alias: Option<String>,
    pub points: Vec<(String, Point2)>,
    /// `None` when the configuration leaves the face unchanged.
    pub faces: Option<Vec<[String; 3]>>,
    pub corrected: Option<Vec<[String; 3]>>,
}

fn parse_face_list(s: &str) -> Option<Vec<[String; 3]>> {
    if s.trim() == "-" {
        return None;
    }
    Some(
        s.split(';')
            .map(|f| {
                let v: Vec<String> = f.split_whitespace().map(str::to_string).collect();
                <[String; 3]>::try_from(v).expect("three labels per face")
            })
            .collect(),
    )
}

pub fn parse_cases(text: &str) -> Result<Vec<Case>> {
    let mut out: Vec<Case> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |m: &str| Error::Parse { line: n + 1, msg: m.to_string() };
        let (head, rest) = line.split_once(' ').ok_or_else(|| err("missing value"))?;
        if head == "case" {
            out.push(Case {
                name: rest.to_string(),
                class: (0, 0),
                alias: None,
                points: Vec::new(),
                faces: None,
                corrected: None,
            });
            continue;
        }
        let c = out.last_mut().ok_or_else(|| err("field before case"))?;
        match head {
            "class" => {
                let (m, k) = rest.split_once(',').ok_or_else(|| err("class is m,n"))?;
                c.class = (m.parse().map_err(|_| err("class"))?, k.parse().map_err(|_| err("class"))?);
            }
            "alias" => c.alias = Some(rest.to_string()),
            "faces" => c.faces = parse_face_list(rest),
            "corrected" => c.corrected = parse_face_list(rest),
            _ => {
                let xy: Vec<f64> = rest.split_whitespace().map(|s| s.parse().map_err(|_| err("coordinate"))).collect::<Result<_>>()?;
                if xy.len() != 2 {
                    return Err(err("expected `label x y`"));
                }
                c.points.push((head.to_string(), Point2::new(xy[0], xy[1])));
            }
        }
    }
    Ok(out)
}

pub fn cases() -> Vec<Case> {
    parse_cases(REFERENCE_CASES).expect("reference cases parse")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Variant {
    Original,
    Mirror,
    Reversed,
    MirrorReversed,
}

impl Variant {
    /// Priority order: a reversed chain keeps the drawing's triangulation, so it
    /// comes before the mirror image.
    pub const ALL: [Variant; 4] = [Variant::Original, Variant::Reversed, Variant::Mirror, Variant::MirrorReversed];

    fn mirror(self) -> bool {
        matches!(self, Variant::Mirror | Variant::MirrorReversed)
    }

    fn reversed(self) -> bool {
        matches!(self, Variant::Reversed | Variant::MirrorReversed)
    }

    fn suffix(self) -> &'static str {
        match self {
            Variant::Original => "",
            Variant::Mirror => ":mirror",
            Variant::Reversed => ":reversed",
            Variant::MirrorReversed => ":mirror-reversed",
        }
    }
}

/// Largest distance between a drawn label and the perimeter node it names.
const LABEL_SNAP: f64 = 0.05;

/// A case realised as a one-triangle mesh and classified.
pub struct Instance {
    pub mesh: HalfEdgeMesh,
    pub boundary: Boundary,
    pub config: FaceConfig,
    /// Drawing label positions after the variant transform.
    pub points: BTreeMap<String, Point2>,
}

impl Case {
    pub fn point(&self, label: &str) -> Option<Point2> {
        self.points.iter().find(|(l, _)| l == label).map(|(_, p)| *p)
    }

    pub fn effective_faces(&self) -> Option<&Vec<[String; 3]>> {
        self.corrected.as_ref().or(self.faces.as_ref())
    }

    pub fn instance(&self, v: Variant) -> Result<Instance> {
        let tf = |p: Point2| if v.mirror() { Point2::new(4.0 - p.x, p.y) } else { p };
        let get = |l: &str| self.point(l).map(tf).ok_or_else(|| Error::MissingVertexBinding(format!("{}: {l}", self.name)));
        let (a, b, c) = (get("A")?, get("B")?, get("C")?);
        let face = if triangle_area(a, b, c) > 0.0 { [0, 1, 2] } else { [0, 2, 1] };
        let mesh = HalfEdgeMesh::from_indexed(vec![a, b, c], vec![face])?;
        let mut chain: Vec<Point2> = ["P1", "P2", "P3"].iter().filter_map(|l| self.point(l).map(tf)).collect();
        if v.reversed() {
            chain.reverse();
        }
        let boundary = Boundary::new(vec![PolyChain::new(chain, false)]);
        let tol = Tolerance::default();
        let registry = Registry::build(&mesh, &boundary, Exec::Sequential, tol);
        let config = triangle_config(&mesh, &registry, &boundary, 0)?;
        let points = self.points.iter().map(|(l, p)| (l.clone(), tf(*p))).collect();
        Ok(Instance { mesh, boundary, config, points })
    }
}

impl Instance {
    /// Canonical label of a drawing label.
    pub fn label(&self, name: &str) -> Result<Label> {
        let p = *self.points.get(name).ok_or_else(|| Error::MissingVertexBinding(name.to_string()))?;
        let mut best = (f64::INFINITY, Label::Apex);
        for i in 0..self.config.nodes.len() {
            let d = self.config.canonical_node(i).1.dist(p);
            if d < best.0 {
                best = (d, Label::Node(i as u16));
            }
        }
        if let Some((_, a)) = self.config.apex {
            if a.dist(p) < best.0 {
                best = (a.dist(p), Label::Apex);
            }
        }
        if best.0 > LABEL_SNAP {
            return Err(Error::MissingVertexBinding(name.to_string()));
        }
        Ok(best.1)
    }

    pub fn position(&self, l: Label) -> Point2 {
        match l {
            Label::Node(i) => self.config.canonical_node(i as usize).1,
            Label::Apex => self.config.apex.expect("apex bound").1,
        }
    }

    /// Maps a face list in drawing labels to canonical labels, oriented
    /// counter-clockwise on this instance. `None` means the unchanged face.
    pub fn map_faces(&self, faces: Option<&Vec<[String; 3]>>) -> Result<Vec<[Label; 3]>> {
        let names: Vec<[String; 3]> = match faces {
            Some(f) => f.clone(),
            None => vec![["A", "B", "C"].map(str::to_string)],
        };
        names
            .iter()
            .map(|f| {
                let mut l = [self.label(&f[0])?, self.label(&f[1])?, self.label(&f[2])?];
                let p = l.map(|x| self.position(x));
                if triangle_area(p[0], p[1], p[2]) < 0.0 {
                    l.swap(1, 2);
                }
                Ok(l)
            })
            .collect()
    }
}

fn patch_for(case: &Case, v: Variant) -> Result<Patch> {
    let inst = case.instance(v)?;
    let faces = inst.map_faces(case.effective_faces())?;
    let key = inst.config.key.key.clone();
    Ok(Patch { topology: parse_key(&key)?, key, faces, source: format!("ref:{}{}", case.name, v.suffix()) })
}

/// Patches from the reference cases and their mirror and reversed-chain variants.
/// Original drawings take priority; disagreements and failures are reported.
pub fn hand_patches() -> (Vec<Patch>, Vec<String>) {
    let all = cases();
    let mut out: Vec<Patch> = Vec::new();
    let mut notes = Vec::new();
    for v in Variant::ALL {
        for case in &all {
            let p = match patch_for(case, v) {
                Ok(p) => p,
                Err(e) => {
                    notes.push(format!("{}{}: {e}", case.name, v.suffix()));
                    continue;
                }
            };
            if !super::verify_patch(&p).is_empty() {
                notes.push(format!("{}: does not verify on the reference triangle", p.source));
                continue;
            }
            match out.iter().find(|q| q.key == p.key) {
                Some(q) if normalized_faces(&q.faces) != normalized_faces(&p.faces) => {
                    notes.push(format!("{} disagrees with {} on {}", p.source, q.source, p.key));
                }
                Some(_) => {}
                None => out.push(p),
            }
        }
    }
    (out, notes)
}

/// Whether the table's entry for `case` equals its listed faces. Errors when the
/// case cannot be classified or its key is missing.
pub fn golden_check(case: &Case, table: &TemplateTable) -> Result<bool> {
    let inst = case.instance(Variant::Original)?;
    let want = inst.map_faces(case.effective_faces())?;
    let patch = table.lookup(&inst.config.key.key)?;
    Ok(normalized_faces(&patch.faces) == normalized_faces(&want))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_cases_parse_with_triangle_and_chain() {
        let cs = cases();
        assert_eq!(cs.len(), 34);
        for c in &cs {
            for l in ["A", "B", "C", "P1", "P2"] {
                assert!(c.point(l).is_some(), "{} lacks {l}", c.name);
            }
        }
    }

    #[test]
    fn every_case_classifies_to_its_class() {
        for c in cases() {
            let inst = c.instance(Variant::Original).unwrap_or_else(|e| panic!("{}: {e}", c.name));
            let got = inst.config.key.class;
            match &c.alias {
                Some(_) => {}
                None => assert_eq!(got, c.class, "{}", c.name),
            }
        }
    }
}
