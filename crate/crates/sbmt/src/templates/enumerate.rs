//! Enumeration of every face configuration reachable under the boundary protocol.
//!
//! A face meets at most two consecutive segments. Each segment contributes a piece
//! of one or two stations; the shapes are a single touch, a span between two
//! perimeter points, a leg to or from a vertex inside the face, two legs through
//! that vertex, two pieces sharing a perimeter point, and two disjoint pieces.

use std::collections::BTreeMap;

use crate::classify::{PerimKind, Station, Topology};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Corner(u8),
    /// Distinct point `id` on triangle edge `edge`.
    Edge { edge: u8, id: u8 },
    Apex,
}

/// Station choices for `count` distinct perimeter points.
fn perimeter_choices(count: usize) -> Vec<Vec<Slot>> {
    let mut out = vec![Vec::new()];
    for i in 0..count {
        let mut next = Vec::new();
        for prefix in &out {
            for c in 0..3u8 {
                if !prefix.contains(&Slot::Corner(c)) {
                    let mut v = prefix.clone();
                    v.push(Slot::Corner(c));
                    next.push(v);
                }
            }
            for e in 0..3u8 {
                let mut v = prefix.clone();
                v.push(Slot::Edge { edge: e, id: i as u8 });
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Piece lists of all shapes, over all station choices.
fn shapes() -> Vec<Vec<Vec<Slot>>> {
    use Slot::Apex;
    let mut out = Vec::new();
    for s in perimeter_choices(1) {
        let x = s[0];
        out.push(vec![vec![x]]);
        out.push(vec![vec![x, Apex]]);
        out.push(vec![vec![Apex, x]]);
    }
    for s in perimeter_choices(2) {
        let (x, y) = (s[0], s[1]);
        out.push(vec![vec![x, y]]);
        out.push(vec![vec![x, Apex], vec![Apex, y]]);
    }
    // Two pieces through a shared perimeter point t.
    for s in perimeter_choices(3) {
        let (t, x, y) = (s[0], s[1], s[2]);
        for first in [vec![t], vec![x, t]] {
            for second in [vec![t], vec![t, y]] {
                out.push(vec![first.clone(), second]);
            }
        }
    }
    // Two disjoint pieces, each a corner touch or a span.
    for s in perimeter_choices(4) {
        let corner = |k: usize| matches!(s[k], Slot::Corner(_));
        let firsts: Vec<Vec<Slot>> = if corner(0) { vec![vec![s[0]], vec![s[0], s[1]]] } else { vec![vec![s[0], s[1]]] };
        let seconds: Vec<Vec<Slot>> = if corner(2) { vec![vec![s[2]], vec![s[2], s[3]]] } else { vec![vec![s[2], s[3]]] };
        for a in &firsts {
            for b in &seconds {
                out.push(vec![a.clone(), b.clone()]);
            }
        }
    }
    out
}

fn permutations(items: &[u8]) -> Vec<Vec<u8>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// Every perimeter ordering of the edge points in `pieces`.
fn realize(pieces: &[Vec<Slot>]) -> Vec<Topology> {
    let mut on_edge: [Vec<u8>; 3] = Default::default();
    for s in pieces.iter().flatten() {
        if let Slot::Edge { edge, id } = *s {
            if !on_edge[edge as usize].contains(&id) {
                on_edge[edge as usize].push(id);
            }
        }
    }
    let perms: Vec<Vec<Vec<u8>>> = on_edge.iter().map(|ids| permutations(ids)).collect();
    let mut out = Vec::new();
    for p0 in &perms[0] {
        for p1 in &perms[1] {
            for p2 in &perms[2] {
                let order = [p0, p1, p2];
                let mut perim = Vec::new();
                let mut index_of = BTreeMap::new();
                let mut corner_at = [0u16; 3];
                for e in 0..3u8 {
                    corner_at[e as usize] = perim.len() as u16;
                    perim.push(PerimKind::Corner(e));
                    for &id in order[e as usize] {
                        index_of.insert(id, perim.len() as u16);
                        perim.push(PerimKind::Edge(e));
                    }
                }
                let pieces = pieces
                    .iter()
                    .map(|st| {
                        st.iter()
                            .map(|s| match *s {
                                Slot::Corner(c) => Station::Perim(corner_at[c as usize]),
                                Slot::Edge { id, .. } => Station::Perim(index_of[&id]),
                                Slot::Apex => Station::Apex,
                            })
                            .collect()
                    })
                    .collect();
                out.push(Topology { perim, pieces });
            }
        }
    }
    out
}

fn shares_edge(a: PerimKind, b: PerimKind) -> bool {
    a.edges().iter().any(|e| b.edges().contains(e))
}

/// Chords of a configuration: spans between perimeter points on different lines.
pub fn chords(t: &Topology) -> Vec<(u16, u16)> {
    t.pieces
        .iter()
        .filter_map(|st| match st.as_slice() {
            [Station::Perim(i), Station::Perim(j)] if !shares_edge(t.perim[*i as usize], t.perim[*j as usize]) => {
                Some((*i, *j))
            }
            _ => None,
        })
        .collect()
}

fn strictly_between(x: u16, a: u16, b: u16, n: u16) -> bool {
    let d = |p: u16, q: u16| (q + n - p) % n;
    d(a, x) > 0 && d(a, x) < d(a, b)
}

/// Whether straight segments can realise the configuration.
pub fn is_realizable(t: &Topology) -> bool {
    let n = t.perim.len() as u16;
    for st in &t.pieces {
        if let [Station::Perim(i), Station::Perim(j)] = st.as_slice() {
            if i == j {
                return false;
            }
            let along = shares_edge(t.perim[*i as usize], t.perim[*j as usize]);
            let adjacent = (i + 1) % n == *j || (j + 1) % n == *i;
            if along && !adjacent {
                return false;
            }
        }
    }
    let c = chords(t);
    for (k, &(a, b)) in c.iter().enumerate() {
        for &(x, y) in &c[k + 1..] {
            if [x, y].iter().any(|v| *v == a || *v == b) {
                continue;
            }
            if strictly_between(x, a, b, n) != strictly_between(y, a, b, n) {
                return false;
            }
        }
    }
    true
}

/// All realisable configurations in canonical labelling, keyed by canonical key.
pub fn all_topologies() -> Vec<Topology> {
    let mut out: BTreeMap<String, Topology> = BTreeMap::new();
    for pieces in shapes() {
        for t in realize(&pieces) {
            if !is_realizable(&t) {
                continue;
            }
            let (key, rots) = t.canonical_rotations();
            out.entry(key).or_insert_with(|| t.rotated(rots[0]));
        }
    }
    out.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::templates::parse_key;

    #[test]
    fn keys_are_canonical_and_unique() {
        let all = all_topologies();
        assert!(all.len() > 100);
        for t in &all {
            assert_eq!(t.canonical_rotations().0, t.key_string());
            assert_eq!(&parse_key(&t.key_string()).unwrap(), t);
        }
    }

    #[test]
    fn crossing_chords_rejected() {
        // A-q(BC) and B-q(CA) cross.
        let t = parse_key("2,2|ABqCq|0-2,1-4").unwrap();
        assert!(!is_realizable(&t));
        let t = parse_key("2,2|ABqCq|0-2,4-1").unwrap();
        assert!(!is_realizable(&t));
        let t = parse_key("1,1|AqBCq|1-4").unwrap();
        assert!(is_realizable(&t));
    }

    #[test]
    fn span_along_edge_must_be_adjacent() {
        assert!(!is_realizable(&parse_key("0,1|AqqBC|1-3").unwrap()));
        assert!(is_realizable(&parse_key("0,1|AqqBC|1-2").unwrap()));
    }
}
