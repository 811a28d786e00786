//! Polyomino: pick the piece turned by a stated angle, without flipping.

use serde::{Deserialize, Serialize};

use super::draw;
use super::{margin_fail, symmetry_fail, Answer, Candidate, CandidateSet, FamilyError, NearMissKind, ValidationReport};
use crate::geometry::{Polyomino, Vec2};
use crate::manifest::{Margins, ParamSample};
use crate::renderer::palette::PALETTE_SLOTS;
use crate::renderer::{Fragment, Paint};
use crate::rng::Stream;

/// Off-lattice tolerance when snapping un-rotated centres.
const SNAP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyominoScene {
    pub base: Polyomino,
    /// Clockwise turn named in the prompt, degrees.
    pub rotation_deg: i64,
    pub mirror_distractors: bool,
    pub color: u8,
}

pub fn generate(sample: &ParamSample, s: &mut Stream) -> Result<PolyominoScene, FamilyError> {
    let size = sample.int("PIECE_SIZE")? as usize;
    let rotation_deg = sample.int("ROTATION_DEG")?;
    let mirror_distractors = sample.enum_value("MIRROR_DISTRACTORS")? == "present";
    let mut g = s.split("growth");
    let mut piece = Polyomino::new([(0, 0)])?;
    while piece.len() < size {
        let frontier = piece.frontier();
        let next = frontier[g.index(frontier.len())];
        piece = Polyomino::new(piece.cells().iter().copied().chain([next]))?;
    }
    Ok(PolyominoScene {
        base: piece,
        rotation_deg,
        mirror_distractors,
        color: s.split("color").index(PALETTE_SLOTS) as u8,
    })
}

/// Cell centres about the centroid, turned `deg` degrees clockwise.
fn centers(p: &Polyomino, deg: f64) -> Vec<Vec2> {
    let (cx, cy) = p.centroid();
    let turn = -deg.to_radians();
    p.cells()
        .iter()
        .map(|&(x, y)| Vec2::new(x as f64 + 0.5 - cx, y as f64 + 0.5 - cy).rotated(turn))
        .collect()
}

/// Snap centres back onto the unit lattice, if they sit on one.
fn snap(points: &[Vec2]) -> Option<Polyomino> {
    let t = *points.first()?;
    let mut cells = Vec::with_capacity(points.len());
    for &p in points {
        let d = p - t;
        let (rx, ry) = (d.x.round(), d.y.round());
        if (d.x - rx).abs() > SNAP || (d.y - ry).abs() > SNAP {
            return None;
        }
        cells.push((rx as i32, ry as i32));
    }
    Polyomino::new(cells).ok().filter(|q| q.len() == points.len())
}

fn angular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

impl PolyominoScene {
    fn window(&self) -> f64 {
        centers(&self.base, 0.0).iter().map(|c| c.norm()).fold(0.0, f64::max) + 0.9
    }

    fn drawing(&self, piece: &Polyomino, deg: f64) -> Fragment {
        let r = self.window();
        let mut f = Fragment::new(Vec2::new(-r, -r), Vec2::new(r, r));
        let turn = -deg.to_radians();
        for c in centers(piece, deg) {
            let corners = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)]
                .iter()
                .map(|&(dx, dy)| c + Vec2::new(dx, dy).rotated(turn))
                .collect();
            f.push(draw::polygon(corners, Paint::Palette(self.color)));
        }
        f
    }

    fn candidate(&self, mirrored: bool, deg: f64, kind: Option<NearMissKind>) -> Candidate {
        let piece = if mirrored { self.base.mirror() } else { self.base.clone() };
        Candidate {
            answer: Answer::Cells {
                centers: centers(&piece, deg),
                turn_deg: deg,
                mirrored,
            },
            fragment: self.drawing(&piece, deg),
            kind,
        }
    }

    pub fn candidates(&self, n: usize, s: &mut Stream) -> Result<Vec<Candidate>, FamilyError> {
        let t = self.rotation_deg as f64;
        let mut pool: Vec<(bool, f64, NearMissKind)> = [-30.0, -15.0, 15.0, 30.0]
            .into_iter()
            .map(|d| (false, t + d, NearMissKind::NearRotation))
            .chain([90.0, 180.0, 270.0].into_iter().map(|d| (false, t + d, NearMissKind::OffByOneTransform)))
            .collect();
        let mut fixed = Vec::new();
        if self.mirror_distractors {
            fixed.push((true, t, NearMissKind::Mirror));
            pool.extend([-15.0, 15.0].into_iter().map(|d| (true, t + d, NearMissKind::Mirror)));
        }
        let want = n.checked_sub(1 + fixed.len()).ok_or_else(|| FamilyError::Distractors("too few slots".into()))?;
        let picked = super::pick_spread(&pool, want, &fixed, s, |a, b| a != b)
            .ok_or_else(|| FamilyError::Distractors("rotation pool exhausted".into()))?;
        let mut out = vec![self.candidate(false, t, None)];
        out.extend(fixed.into_iter().chain(picked).map(|(m, d, k)| self.candidate(m, d, Some(k))));
        Ok(out)
    }

    pub fn stimulus(&self) -> Fragment {
        self.drawing(&self.base, 0.0)
    }

    pub fn outputs(&self) -> Vec<(&'static str, String)> {
        vec![("ROTATION", self.rotation_deg.to_string())]
    }

    /// Undo the stated turn, snap to the lattice and compare cell sets.
    pub fn holds(&self, answer: &Answer) -> bool {
        let Answer::Cells { centers, .. } = answer else {
            return false;
        };
        let back = (self.rotation_deg as f64).to_radians();
        let undone: Vec<Vec2> = centers.iter().map(|c| c.rotated(back)).collect();
        snap(&undone).is_some_and(|p| p == self.base)
    }

    pub fn checks(&self, set: &CandidateSet, margins: &Margins) -> ValidationReport {
        let mut r = ValidationReport::default();
        if self.base.rotation_symmetry_order() != 1 {
            symmetry_fail(&mut r, format!("base has rotation order {}", self.base.rotation_symmetry_order()));
        }
        if self.mirror_distractors && !self.base.is_chiral() {
            symmetry_fail(&mut r, "base equals its mirror image");
        }
        let t = self.rotation_deg as f64;
        for (i, c) in set.candidates.iter().enumerate() {
            if i == set.correct_index {
                continue;
            }
            if let Answer::Cells {
                turn_deg,
                mirrored: false,
                ..
            } = c.answer
            {
                if angular_gap(turn_deg, t) + 1e-9 < margins.angle_deg {
                    margin_fail(&mut r, format!("candidate {i} is within the angular margin"));
                }
            }
        }
        let keys: Vec<Vec<(i64, i64)>> = set
            .candidates
            .iter()
            .map(|c| match &c.answer {
                Answer::Cells { centers, .. } => {
                    let mut k: Vec<(i64, i64)> =
                        centers.iter().map(|p| ((p.x * 1e6).round() as i64, (p.y * 1e6).round() as i64)).collect();
                    k.sort_unstable();
                    k
                }
                _ => Vec::new(),
            })
            .collect();
        for i in 0..keys.len() {
            if keys[i + 1..].contains(&keys[i]) {
                symmetry_fail(&mut r, format!("candidate {i} duplicates another drawing"));
            }
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snap_recovers_quarter_turns_only() {
        let l = Polyomino::new([(0, 0), (0, 1), (0, 2), (1, 0)]).unwrap();
        for deg in [0.0, 90.0, 180.0, 270.0] {
            let back = snap(&centers(&l, deg)).unwrap();
            assert_eq!(back, l.rotate(((4 - (deg as i32 / 90)) % 4) as u8), "{deg}");
        }
        assert!(snap(&centers(&l, 15.0)).is_none());
        assert!(snap(&centers(&l, 45.0)).is_none());
    }

    #[test]
    fn angular_gap_wraps() {
        assert_eq!(angular_gap(350.0, 10.0), 20.0);
        assert_eq!(angular_gap(195.0, 15.0), 180.0);
    }
}
