//! Edge-connected lattice pieces, their symmetries and free enumeration.

use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::GeometryError;

pub type Cell = (i32, i32);

/// A 4-connected set of unit cells, stored sorted and translation-normalized
/// (minimum x and minimum y both zero).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Cell>", into = "Vec<Cell>")]
pub struct Polyomino {
    cells: Vec<Cell>,
}

/// How one polyomino maps onto another: optional mirror (x -> -x) first, then
/// `quarter_turns` counterclockwise quarter turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Congruence {
    pub quarter_turns: u8,
    pub mirrored: bool,
}

impl Congruence {
    pub fn angle_deg(&self) -> u32 {
        self.quarter_turns as u32 * 90
    }
}

impl Polyomino {
    pub fn new(cells: impl IntoIterator<Item = Cell>) -> Result<Self, GeometryError> {
        let set: BTreeSet<Cell> = cells.into_iter().collect();
        if set.is_empty() {
            return Err(GeometryError::Precondition("polyomino needs at least one cell"));
        }
        if !is_connected(&set) {
            return Err(GeometryError::Precondition("polyomino cells are not 4-connected"));
        }
        Ok(Self::normalize(set.into_iter()))
    }

    fn normalize(cells: impl Iterator<Item = Cell>) -> Self {
        let cells: Vec<Cell> = cells.collect();
        let mx = cells.iter().map(|c| c.0).min().unwrap_or(0);
        let my = cells.iter().map(|c| c.1).min().unwrap_or(0);
        let mut cells: Vec<Cell> = cells.into_iter().map(|(x, y)| (x - mx, y - my)).collect();
        cells.sort_unstable();
        cells.dedup();
        Self { cells }
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, c: Cell) -> bool {
        self.cells.binary_search(&c).is_ok()
    }

    /// Width and height of the bounding box.
    pub fn extent(&self) -> (i32, i32) {
        let w = self.cells.iter().map(|c| c.0).max().unwrap_or(0) + 1;
        let h = self.cells.iter().map(|c| c.1).max().unwrap_or(0) + 1;
        (w, h)
    }

    /// Counterclockwise rotation by `k` quarter turns, renormalized.
    pub fn rotate(&self, k: u8) -> Polyomino {
        let k = k % 4;
        Self::normalize(self.cells.iter().map(|&(x, y)| match k {
            0 => (x, y),
            1 => (-y, x),
            2 => (-x, -y),
            _ => (y, -x),
        }))
    }

    /// Reflection across the vertical axis, renormalized.
    pub fn mirror(&self) -> Polyomino {
        Self::normalize(self.cells.iter().map(|&(x, y)| (-x, y)))
    }

    pub fn transformed(&self, c: Congruence) -> Polyomino {
        let base = if c.mirrored { self.mirror() } else { self.clone() };
        base.rotate(c.quarter_turns)
    }

    /// Number of quarter-turn rotations (of 4) that leave the piece unchanged: 1, 2 or 4.
    pub fn rotation_symmetry_order(&self) -> usize {
        (0..4).filter(|&k| self.rotate(k) == *self).count()
    }

    /// True when no rotation maps the mirror image onto the piece.
    pub fn is_chiral(&self) -> bool {
        congruent_under_rotation(self, &self.mirror(), false).is_none()
    }

    /// Lexicographically least image under the 8 symmetries of the square.
    pub fn canonical_free(&self) -> Polyomino {
        all_congruences()
            .map(|c| self.transformed(c))
            .min()
            .expect("eight transforms")
    }

    /// Canonical form under rotations only.
    pub fn canonical_fixed_rotation(&self) -> Polyomino {
        (0..4).map(|k| self.rotate(k)).min().expect("four rotations")
    }

    /// Cells 4-adjacent to the piece but not in it.
    pub fn frontier(&self) -> Vec<Cell> {
        let own: HashSet<Cell> = self.cells.iter().copied().collect();
        let mut out: BTreeSet<Cell> = BTreeSet::new();
        for &(x, y) in &self.cells {
            for n in neighbours((x, y)) {
                if !own.contains(&n) {
                    out.insert(n);
                }
            }
        }
        out.into_iter().collect()
    }

    /// Centroid of the cell centres.
    pub fn centroid(&self) -> (f64, f64) {
        let n = self.cells.len() as f64;
        let (sx, sy) = self
            .cells
            .iter()
            .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x as f64 + 0.5, b + y as f64 + 0.5));
        (sx / n, sy / n)
    }
}

impl TryFrom<Vec<Cell>> for Polyomino {
    type Error = GeometryError;
    fn try_from(v: Vec<Cell>) -> Result<Self, Self::Error> {
        Polyomino::new(v)
    }
}

impl From<Polyomino> for Vec<Cell> {
    fn from(p: Polyomino) -> Self {
        p.cells
    }
}

fn neighbours((x, y): Cell) -> [Cell; 4] {
    [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)]
}

fn is_connected(set: &BTreeSet<Cell>) -> bool {
    let Some(&start) = set.iter().next() else {
        return false;
    };
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        for n in neighbours(c) {
            if set.contains(&n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen.len() == set.len()
}

fn all_congruences() -> impl Iterator<Item = Congruence> {
    [false, true]
        .into_iter()
        .flat_map(|m| (0..4).map(move |k| Congruence { quarter_turns: k, mirrored: m }))
}

/// The quarter-turn rotation (and mirror flag) mapping `a` onto `b`, if any.
/// Pure rotations are preferred over mirrored matches, and smaller angles first.
pub fn congruent_under_rotation(a: &Polyomino, b: &Polyomino, allow_mirror: bool) -> Option<Congruence> {
    if a.len() != b.len() {
        return None;
    }
    all_congruences()
        .filter(|c| allow_mirror || !c.mirrored)
        .find(|&c| a.transformed(c) == *b)
}

/// Every free polyomino with `n` cells, each in canonical free form, sorted.
pub fn enumerate_free(n: usize) -> Vec<Polyomino> {
    if n == 0 {
        return Vec::new();
    }
    let mut level: BTreeSet<Polyomino> = BTreeSet::from([Polyomino { cells: vec![(0, 0)] }]);
    for _ in 1..n {
        let mut next = BTreeSet::new();
        for p in &level {
            for f in p.frontier() {
                let grown = Polyomino::normalize(p.cells.iter().copied().chain(std::iter::once(f)));
                next.insert(grown.canonical_free());
            }
        }
        level = next;
    }
    level.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(cells: &[Cell]) -> Polyomino {
        Polyomino::new(cells.iter().copied()).unwrap()
    }

    #[test]
    fn rejects_disconnected_and_empty() {
        assert!(Polyomino::new([(0, 0), (2, 0)]).is_err());
        assert!(Polyomino::new(Vec::<Cell>::new()).is_err());
    }

    #[test]
    fn normalizes_translation() {
        assert_eq!(p(&[(5, 5), (6, 5)]).cells(), &[(0, 0), (1, 0)]);
    }

    #[test]
    fn l_tromino_rotation_is_found() {
        let l = p(&[(0, 0), (1, 0), (0, 1)]);
        assert_eq!(congruent_under_rotation(&l, &l.rotate(1), false).unwrap().angle_deg(), 90);
        assert_eq!(congruent_under_rotation(&l, &l, false).unwrap().angle_deg(), 0);
    }

    #[test]
    fn l_tetromino_mirror_needs_mirroring() {
        let l = p(&[(0, 0), (0, 1), (0, 2), (1, 0)]);
        assert!(congruent_under_rotation(&l, &l.mirror(), false).is_none());
        assert!(congruent_under_rotation(&l, &l.mirror(), true).unwrap().mirrored);
    }

    #[test]
    fn free_counts() {
        let counts: Vec<usize> = (1..=7).map(|n| enumerate_free(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 5, 12, 35, 108]);
    }

    #[test]
    fn symmetry_orders() {
        assert_eq!(p(&[(0, 0), (1, 0), (0, 1), (1, 1)]).rotation_symmetry_order(), 4);
        assert_eq!(p(&[(0, 0), (1, 0), (2, 0)]).rotation_symmetry_order(), 2);
        assert_eq!(p(&[(0, 0), (0, 1), (0, 2), (1, 0)]).rotation_symmetry_order(), 1);
        assert!(p(&[(0, 0), (0, 1), (0, 2), (1, 0)]).is_chiral());
        assert!(!p(&[(0, 0), (1, 0), (2, 0), (1, 1)]).is_chiral());
    }

    /// Brute force over raw cell sets, independent of `transformed`.
    fn brute_congruent(a: &Polyomino, b: &Polyomino, allow_mirror: bool) -> bool {
        let norm = |v: Vec<Cell>| {
            let mx = v.iter().map(|c| c.0).min().unwrap();
            let my = v.iter().map(|c| c.1).min().unwrap();
            let mut w: Vec<Cell> = v.into_iter().map(|(x, y)| (x - mx, y - my)).collect();
            w.sort();
            w
        };
        let target = norm(b.cells().to_vec());
        for m in [false, true] {
            if m && !allow_mirror {
                continue;
            }
            let mut cur: Vec<Cell> = a.cells().iter().map(|&(x, y)| if m { (-x, y) } else { (x, y) }).collect();
            for _ in 0..4 {
                if norm(cur.clone()) == target {
                    return true;
                }
                cur = cur.into_iter().map(|(x, y)| (-y, x)).collect();
            }
        }
        false
    }

    #[test]
    fn congruence_agrees_with_brute_force_up_to_size_six() {
        for n in 1..=6 {
            // all fixed orientations of each free piece
            let pieces: Vec<Polyomino> = enumerate_free(n)
                .iter()
                .flat_map(|f| all_congruences().map(move |c| f.transformed(c)))
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            for a in &pieces {
                assert!(congruent_under_rotation(a, a, false).is_some());
                for b in &pieces {
                    for m in [false, true] {
                        let got = congruent_under_rotation(a, b, m).is_some();
                        assert_eq!(got, brute_congruent(a, b, m));
                        assert_eq!(got, congruent_under_rotation(b, a, m).is_some());
                    }
                }
            }
        }
    }
}
