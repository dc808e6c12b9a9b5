//! The static lookup table from canonical configuration keys to patches.
//!
//! # Catalog format
//!
//! `catalog.tsv` holds one patch per line as three tab-separated columns:
//!
//! ```text
//! <key>\t<faces>\t<source>
//! ```
//!
//! * `key` is a canonical configuration key as produced by
//!   [`Topology::key_string`], e.g. `0,2|ABqCq|2-4`.
//! * `faces` lists triangles separated by `; `, each as three space-separated
//!   labels in counter-clockwise order. Corners are `A`, `B`, `C`; the boundary
//!   points on the edges are `q1`, `q2`, ... in perimeter order starting after
//!   `A`; the boundary vertex inside the face, if any, is `p`.
//! * `source` is `ref:<case>` for one of the reference cases,
//!   `ref:<case>:<variant>` for its mirror image or reversed chain, `gen` for a
//!   patch synthesised by [`synth`], and `gen:<variant>` for the image of the
//!   patch of the reflected or reversed key.
//!
//! Lines starting with `#` are comments. The file is regenerated with
//! `sbmt verify-table --write-catalog <path>` and a test checks that the embedded
//! copy matches the generator.

pub mod cases;
pub mod enumerate;
pub mod synth;

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use crate::classify::{FaceConfig, PerimKind, Station, Topology};
use crate::error::{Error, Result};
use crate::geom::{min_angle_deg, triangle_area, Point2};
use crate::registry::VRef;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    /// Index into the canonical perimeter.
    Node(u16),
    Apex,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub key: String,
    pub topology: Topology,
    /// Counter-clockwise faces.
    pub faces: Vec<[Label; 3]>,
    pub source: String,
}

impl Patch {
    /// Label pairs that must appear as patch edges: chords, legs to the apex and
    /// overlaps along the triangle's edges.
    pub fn embedded_edges(&self) -> Vec<(Label, Label)> {
        let lab = |s: &Station| match s {
            Station::Perim(i) => Label::Node(*i),
            Station::Apex => Label::Apex,
        };
        self.topology
            .pieces
            .iter()
            .filter(|st| st.len() == 2)
            .map(|st| (lab(&st[0]), lab(&st[1])))
            .collect()
    }

    pub fn is_noop(&self) -> bool {
        self.faces.len() == 1 && self.topology.perim.len() == 3 && !self.topology.has_apex()
    }
}

/// Text labels of the perimeter nodes: `A`, `B`, `C` and `q1..`.
pub fn node_names(topo: &Topology) -> Vec<String> {
    let mut q = 0;
    topo.perim
        .iter()
        .map(|k| match k {
            PerimKind::Corner(0) => "A".to_string(),
            PerimKind::Corner(1) => "B".to_string(),
            PerimKind::Corner(_) => "C".to_string(),
            PerimKind::Edge(_) => {
                q += 1;
                format!("q{q}")
            }
        })
        .collect()
}

pub fn label_name(topo: &Topology, l: Label) -> String {
    match l {
        Label::Node(i) => node_names(topo)[i as usize].clone(),
        Label::Apex => "p".to_string(),
    }
}

/// Parses a key string back into its topology.
pub fn parse_key(key: &str) -> Result<Topology> {
    let bad = |m: &str| Error::UnknownConfiguration(format!("{key}: {m}"));
    let mut parts = key.split('|');
    let (_class, perim_s, pieces_s) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
        (Some(c), Some(p), Some(q), None) => (c, p, q),
        _ => return Err(bad("expected three fields")),
    };
    let mut perim = Vec::new();
    let mut last = None;
    for ch in perim_s.chars() {
        match ch {
            'A' | 'B' | 'C' => {
                let k = ch as u8 - b'A';
                perim.push(PerimKind::Corner(k));
                last = Some(k);
            }
            'q' => perim.push(PerimKind::Edge(last.ok_or_else(|| bad("edge point before A"))?)),
            _ => return Err(bad("bad perimeter character")),
        }
    }
    if perim.first() != Some(&PerimKind::Corner(0)) {
        return Err(bad("perimeter must start at A"));
    }
    let mut pieces = Vec::new();
    for piece in pieces_s.split(',').filter(|s| !s.is_empty()) {
        let mut st = Vec::new();
        for s in piece.split('-') {
            st.push(if s == "p" {
                Station::Apex
            } else {
                let i: u16 = s.parse().map_err(|_| bad("bad station"))?;
                if i as usize >= perim.len() {
                    return Err(bad("station out of range"));
                }
                Station::Perim(i)
            });
        }
        pieces.push(st);
    }
    Ok(Topology { perim, pieces })
}

fn parse_label(topo: &Topology, names: &[String], s: &str) -> Option<Label> {
    if s == "p" {
        return topo.has_apex().then_some(Label::Apex);
    }
    names.iter().position(|n| n == s).map(|i| Label::Node(i as u16))
}

pub fn parse_faces(topo: &Topology, text: &str) -> Option<Vec<[Label; 3]>> {
    let names = node_names(topo);
    text.split(';')
        .map(|f| {
            let l: Vec<Label> = f.split_whitespace().map(|s| parse_label(topo, &names, s)).collect::<Option<_>>()?;
            <[Label; 3]>::try_from(l).ok()
        })
        .collect()
}

pub fn format_faces(topo: &Topology, faces: &[[Label; 3]]) -> String {
    faces
        .iter()
        .map(|f| f.map(|l| label_name(topo, l)).join(" "))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Equilateral reference triangle with edge points evenly spaced on each edge and
/// the apex at the centroid.
pub fn canonical_instance(topo: &Topology) -> (Vec<Point2>, Point2) {
    let corners = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.5, 3f64.sqrt() / 2.0)];
    let mut count = [0usize; 3];
    for k in &topo.perim {
        if let PerimKind::Edge(e) = k {
            count[*e as usize] += 1;
        }
    }
    let mut seen = [0usize; 3];
    let pts = topo
        .perim
        .iter()
        .map(|k| match *k {
            PerimKind::Corner(c) => corners[c as usize],
            PerimKind::Edge(e) => {
                let e = e as usize;
                seen[e] += 1;
                let t = seen[e] as f64 / (count[e] + 1) as f64;
                corners[e].lerp(corners[(e + 1) % 3], t)
            }
        })
        .collect();
    let centroid = (corners[0] + corners[1] + corners[2]) * (1.0 / 3.0);
    (pts, centroid)
}

pub fn label_point(nodes: &[Point2], apex: Point2, l: Label) -> Point2 {
    match l {
        Label::Node(i) => nodes[i as usize],
        Label::Apex => apex,
    }
}

/// Rotates a face so its smallest label comes first, keeping orientation.
pub fn normalize_face(f: [Label; 3]) -> [Label; 3] {
    let i = (0..3).min_by_key(|&i| f[i]).unwrap();
    [f[i], f[(i + 1) % 3], f[(i + 2) % 3]]
}

pub fn normalized_faces(faces: &[[Label; 3]]) -> Vec<[Label; 3]> {
    let mut v: Vec<_> = faces.iter().copied().map(normalize_face).collect();
    v.sort();
    v
}

#[derive(Clone, Debug, Default)]
pub struct TemplateTable {
    entries: BTreeMap<String, Patch>,
}

impl TemplateTable {
    pub fn from_patches(patches: Vec<Patch>) -> Self {
        Self { entries: patches.into_iter().map(|p| (p.key.clone(), p)).collect() }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| Error::Parse { line: n + 1, msg: msg.to_string() };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(err("expected three tab-separated columns"));
            }
            let topology = parse_key(cols[0]).map_err(|e| err(&e.to_string()))?;
            let faces = parse_faces(&topology, cols[1]).ok_or_else(|| err("bad face list"))?;
            let p = Patch { key: cols[0].to_string(), topology, faces, source: cols[2].to_string() };
            if entries.insert(p.key.clone(), p).is_some() {
                return Err(err("duplicate key"));
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn patches(&self) -> impl Iterator<Item = &Patch> {
        self.entries.values()
    }

    pub fn lookup(&self, key: &str) -> Result<&Patch> {
        self.entries.get(key).ok_or_else(|| Error::UnknownConfiguration(key.to_string()))
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("# key\tfaces\tsource\n");
        for p in self.entries.values() {
            s.push_str(&format!("{}\t{}\t{}\n", p.key, format_faces(&p.topology, &p.faces), p.source));
        }
        s
    }
}

pub const CATALOG: &str = include_str!("catalog.tsv");

/// The embedded table, parsed once.
pub fn table() -> &'static TemplateTable {
    static T: OnceLock<TemplateTable> = OnceLock::new();
    T.get_or_init(|| TemplateTable::parse(CATALOG).expect("embedded catalog parses"))
}

/// A concrete output triangle: vertex identities and positions.
pub type BoundTri = [(VRef, Point2); 3];

/// Maps a patch onto a face through the face's symmetry tag.
pub fn instantiate(patch: &Patch, cfg: &FaceConfig) -> Result<Vec<BoundTri>> {
    let bind = |l: Label| -> Result<(VRef, Point2)> {
        match l {
            Label::Node(i) if (i as usize) < cfg.nodes.len() => Ok(cfg.canonical_node(i as usize)),
            Label::Apex => cfg.apex.ok_or_else(|| Error::MissingVertexBinding("p".into())),
            _ => Err(Error::MissingVertexBinding(label_name(&patch.topology, l))),
        }
    };
    let mut out = Vec::with_capacity(patch.faces.len());
    for (k, f) in patch.faces.iter().enumerate() {
        let t = [bind(f[0])?, bind(f[1])?, bind(f[2])?];
        if triangle_area(t[0].1, t[1].1, t[2].1) <= 0.0 {
            return Err(Error::OrientationFailure(k));
        }
        out.push(t);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub enum PatchDefect {
    AreaMismatch { expected: f64, got: f64 },
    NotCcw { face: usize },
    Degenerate { face: usize },
    DuplicateFace { face: usize },
    MissingEmbeddedEdge(Label, Label),
    BoundaryEdge { from: Label, to: Label, count: usize },
    NonManifoldEdge(Label, Label),
    UnusedNode(Label),
}

/// Checks one patch on its canonical instance.
pub fn verify_patch(p: &Patch) -> Vec<PatchDefect> {
    let mut d = Vec::new();
    let (nodes, apex) = canonical_instance(&p.topology);
    let pt = |l: Label| label_point(&nodes, apex, l);
    let corner = |k: u8| {
        let i = p.topology.perim.iter().position(|&x| x == PerimKind::Corner(k)).unwrap();
        nodes[i]
    };
    let expected = triangle_area(corner(0), corner(1), corner(2));
    let mut got = 0.0;
    for (k, f) in p.faces.iter().enumerate() {
        let a = triangle_area(pt(f[0]), pt(f[1]), pt(f[2]));
        got += a.abs();
        if a.abs() <= 1e-12 {
            d.push(PatchDefect::Degenerate { face: k });
        } else if a < 0.0 {
            d.push(PatchDefect::NotCcw { face: k });
        }
    }
    if (got - expected).abs() > 1e-9 * expected {
        d.push(PatchDefect::AreaMismatch { expected, got });
    }
    let norm = normalized_faces(&p.faces);
    for k in 1..norm.len() {
        if norm[k] == norm[k - 1] {
            d.push(PatchDefect::DuplicateFace { face: k });
        }
    }
    let mut directed: HashMap<(Label, Label), usize> = HashMap::new();
    for f in &p.faces {
        for k in 0..3 {
            *directed.entry((f[k], f[(k + 1) % 3])).or_default() += 1;
        }
    }
    let undirected = |a: Label, b: Label| directed.get(&(a, b)).copied().unwrap_or(0) + directed.get(&(b, a)).copied().unwrap_or(0);
    for (a, b) in p.embedded_edges() {
        // An overlap between non-adjacent labels cannot occur; legs and chords must exist.
        if undirected(a, b) == 0 {
            d.push(PatchDefect::MissingEmbeddedEdge(a, b));
        }
    }
    let n = p.topology.perim.len() as u16;
    for i in 0..n {
        let (a, b) = (Label::Node(i), Label::Node((i + 1) % n));
        let c = directed.get(&(a, b)).copied().unwrap_or(0);
        if c != 1 || directed.contains_key(&(b, a)) {
            d.push(PatchDefect::BoundaryEdge { from: a, to: b, count: c });
        }
    }
    for (&(a, b), &c) in &directed {
        let perimeter = matches!((a, b), (Label::Node(i), Label::Node(j)) if (i + 1) % n == j || (j + 1) % n == i);
        if c > 1 || (!perimeter && !directed.contains_key(&(b, a))) {
            d.push(PatchDefect::NonManifoldEdge(a, b));
        }
    }
    let used: Vec<Label> = p.faces.iter().flatten().copied().collect();
    for i in 0..n {
        if !used.contains(&Label::Node(i)) {
            d.push(PatchDefect::UnusedNode(Label::Node(i)));
        }
    }
    if p.topology.has_apex() && !used.contains(&Label::Apex) {
        d.push(PatchDefect::UnusedNode(Label::Apex));
    }
    d
}

/// Smallest angle of the patch on its canonical instance, degrees.
pub fn canonical_min_angle(p: &Patch) -> f64 {
    let (nodes, apex) = canonical_instance(&p.topology);
    p.faces
        .iter()
        .map(|f| min_angle_deg(f.map(|l| label_point(&nodes, apex, l))))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, Default)]
pub struct TableReport {
    pub entries: usize,
    pub defects: Vec<(String, PatchDefect)>,
    /// Reference cases whose key is absent from the table.
    pub missing_cases: Vec<String>,
    /// Reference cases whose table entry disagrees with the listed faces.
    pub mismatched_cases: Vec<String>,
}

impl TableReport {
    pub fn ok(&self) -> bool {
        self.defects.is_empty() && self.missing_cases.is_empty() && self.mismatched_cases.is_empty()
    }
}

/// Self-test of every entry plus coverage of the reference cases.
pub fn verify_table(t: &TemplateTable) -> TableReport {
    let mut r = TableReport { entries: t.len(), ..Default::default() };
    for p in t.patches() {
        for d in verify_patch(p) {
            r.defects.push((p.key.clone(), d));
        }
    }
    for case in cases::cases() {
        match cases::golden_check(&case, t) {
            Ok(true) => {}
            Ok(false) => r.mismatched_cases.push(case.name.clone()),
            Err(_) => r.missing_cases.push(case.name.clone()),
        }
    }
    r
}

/// All entries: reference cases and their variants first, then synthesised
/// patches for every remaining enumerated configuration.
pub fn generate() -> (TemplateTable, Vec<String>) {
    let (mut patches, collisions) = cases::hand_patches();
    let mut have: std::collections::HashSet<String> = patches.iter().map(|p| p.key.clone()).collect();
    for topo in enumerate::all_topologies() {
        let key = topo.key_string();
        if have.insert(key.clone()) {
            let faces = synth::synthesize(&topo);
            patches.push(Patch { key, topology: topo, faces, source: "gen".into() });
        }
    }
    let synthesised = TemplateTable::from_patches(patches);
    // Synthesised patches are replaced by images of one representative per
    // orbit under reflection and reversal: the smallest reference key if the
    // orbit has one, else the smallest key. Symmetric input then yields a
    // symmetric mesh.
    let mut table = synthesised.clone();
    for (key, p) in &synthesised.entries {
        if p.source != "gen" {
            continue;
        }
        let orbit = Symmetry::NON_TRIVIAL.map(|g| (g, transform_topology(&p.topology, g).0.key_string()));
        let is_ref = |k: &String| synthesised.entries.get(k).is_some_and(|q| q.source.starts_with("ref:"));
        let rep = orbit
            .iter()
            .filter(|(_, k)| is_ref(k))
            .min_by(|a, b| a.1.cmp(&b.1))
            .or_else(|| orbit.iter().filter(|(_, k)| k < key).min_by(|a, b| a.1.cmp(&b.1)));
        if let Some((g, k)) = rep {
            let image = transform_patch(&synthesised.entries[k], *g);
            debug_assert_eq!(&image.key, key);
            table.entries.insert(key.clone(), Patch { source: format!("gen:{}", g.name()), ..image });
        }
    }
    (table, collisions)
}

/// A reflection of the face, a reversal of the chain, or both.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Symmetry {
    pub mirror: bool,
    pub reverse: bool,
}

impl Symmetry {
    pub const NON_TRIVIAL: [Symmetry; 3] = [
        Symmetry { mirror: false, reverse: true },
        Symmetry { mirror: true, reverse: false },
        Symmetry { mirror: true, reverse: true },
    ];

    pub fn name(self) -> &'static str {
        match (self.mirror, self.reverse) {
            (false, false) => "identity",
            (false, true) => "reversed",
            (true, false) => "mirror",
            (true, true) => "mirror-reversed",
        }
    }
}

/// The image of a configuration under `g` in canonical form, and the map from
/// old perimeter indices to new ones. Symmetries are involutions.
pub fn transform_topology(t: &Topology, g: Symmetry) -> (Topology, Vec<u16>) {
    let n = t.perim.len();
    let flip = |i: usize| if g.mirror { (n - i) % n } else { i };
    let mut perim = t.perim.clone();
    if g.mirror {
        for (i, k) in t.perim.iter().enumerate() {
            perim[flip(i)] = match *k {
                PerimKind::Corner(c) => PerimKind::Corner((3 - c) % 3),
                PerimKind::Edge(e) => PerimKind::Edge(2 - e),
            };
        }
    }
    let mut pieces: Vec<Vec<Station>> = t
        .pieces
        .iter()
        .map(|st| {
            st.iter()
                .map(|s| match s {
                    Station::Perim(i) => Station::Perim(flip(*i as usize) as u16),
                    Station::Apex => Station::Apex,
                })
                .collect()
        })
        .collect();
    if g.reverse {
        pieces.reverse();
        pieces.iter_mut().for_each(|st| st.reverse());
    }
    let image = Topology { perim, pieces };
    let (_, rots) = image.canonical_rotations();
    let shift = image.corner_pos(rots[0]);
    let map = (0..n).map(|i| ((flip(i) + n - shift) % n) as u16).collect();
    (image.rotated(rots[0]), map)
}

/// The image of a patch under `g`, keyed by the transformed configuration.
pub fn transform_patch(p: &Patch, g: Symmetry) -> Patch {
    let (topology, map) = transform_topology(&p.topology, g);
    let relabel = |l: Label| match l {
        Label::Node(i) => Label::Node(map[i as usize]),
        Label::Apex => Label::Apex,
    };
    let faces = p
        .faces
        .iter()
        .map(|f| if g.mirror { [relabel(f[0]), relabel(f[2]), relabel(f[1])] } else { f.map(relabel) })
        .collect();
    Patch { key: topology.key_string(), topology, faces, source: p.source.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetries_are_involutions_and_preserve_validity() {
        for p in table().patches() {
            for g in Symmetry::NON_TRIVIAL {
                let img = transform_patch(p, g);
                let back = transform_patch(&img, g);
                assert_eq!(back.key, p.key);
                assert_eq!(normalized_faces(&back.faces), normalized_faces(&p.faces), "{}", p.key);
                assert!(verify_patch(&img).is_empty(), "{} {}", p.key, g.name());
                assert!(table().lookup(&img.key).is_ok());
            }
        }
    }

    #[test]
    fn synthesised_entries_commute_with_symmetries() {
        for p in table().patches().filter(|p| p.source.starts_with("gen")) {
            let orbit: Vec<String> = Symmetry::NON_TRIVIAL.iter().map(|&g| transform_topology(&p.topology, g).0.key_string()).collect();
            let refs = orbit.iter().filter(|k| table().lookup(k).unwrap().source.starts_with("ref:")).count();
            let mut distinct = orbit.clone();
            distinct.push(p.key.clone());
            distinct.sort();
            distinct.dedup();
            // A symmetric key or several reference patches can make the orbit
            // inconsistent by construction.
            if distinct.len() < 4 || refs > 1 {
                continue;
            }
            for g in Symmetry::NON_TRIVIAL {
                let img = transform_patch(p, g);
                let q = table().lookup(&img.key).unwrap();
                if q.source.starts_with("gen") {
                    assert_eq!(normalized_faces(&q.faces), normalized_faces(&img.faces), "{} {}", p.key, g.name());
                }
            }
        }
    }

    #[test]
    fn transformed_key_matches_transformed_drawing() {
        for c in cases::cases() {
            let a = c.instance(cases::Variant::Original).unwrap();
            let t = parse_key(&a.config.key.key).unwrap();
            for (v, g) in [cases::Variant::Reversed, cases::Variant::Mirror, cases::Variant::MirrorReversed].into_iter().zip(Symmetry::NON_TRIVIAL) {
                let b = c.instance(v).unwrap();
                assert_eq!(transform_topology(&t, g).0.key_string(), b.config.key.key, "{} {}", c.name, g.name());
            }
        }
    }

    #[test]
    fn key_roundtrip() {
        let t = parse_key("2,2|AqBqCqq|1-6,5-3").unwrap();
        assert_eq!(t.key_string(), "2,2|AqBqCqq|1-6,5-3");
        assert_eq!(node_names(&t), ["A", "q1", "B", "q2", "C", "q3", "q4"]);
    }

    #[test]
    fn dropped_face_and_flipped_face_are_caught() {
        let topo = parse_key("0,2|ABqCq|2-4").unwrap();
        let faces = parse_faces(&topo, "q2 q1 C; q2 A B; q1 q2 B").unwrap();
        let good = Patch { key: topo.key_string(), topology: topo.clone(), faces: faces.clone(), source: "t".into() };
        assert!(verify_patch(&good).is_empty(), "{:?}", verify_patch(&good));
        let mut dropped = good.clone();
        dropped.faces.pop();
        assert!(verify_patch(&dropped).iter().any(|d| matches!(d, PatchDefect::AreaMismatch { .. })));
        let mut flipped = good.clone();
        flipped.faces[0].swap(1, 2);
        assert!(verify_patch(&flipped).iter().any(|d| matches!(d, PatchDefect::NotCcw { face: 0 })));
    }

    #[test]
    fn embedded_catalog_parses_and_verifies() {
        let t = table();
        assert!(!t.is_empty());
        let r = verify_table(t);
        assert!(r.ok(), "{:?}", &r.defects[..r.defects.len().min(10)]);
    }

    #[test]
    fn embedded_catalog_matches_generator() {
        let (t, _) = generate();
        let text = t.to_tsv();
        if std::env::var_os("SBMT_BLESS").is_some() {
            std::fs::write(concat!(env!("CARGO_MANIFEST_DIR"), "/src/templates/catalog.tsv"), &text).unwrap();
            return;
        }
        assert_eq!(text, CATALOG);
    }
}
