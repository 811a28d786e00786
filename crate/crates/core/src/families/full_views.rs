//! Full Views: the front, side and top views that belong to a block assembly.

use serde::{Deserialize, Serialize};

use super::solids::{column_projections, mirror_within, one_cell_moves, solid_drawing, staircase, voxel_projections};
use super::{draw, margin_fail, Answer, Candidate, CandidateSet, FamilyError, NearMissKind, ValidationReport};
use crate::geometry::{Projections, Vec2};
use crate::manifest::{Margins, ParamSample};
use crate::renderer::palette::PALETTE_SLOTS;
use crate::renderer::{Fragment, Paint};
use crate::rng::Stream;

const ALTERNATIVE_TRIES: usize = 80;
/// Near misses drawn from swaps, mirrors and other solids before single-cell moves.
const STRUCTURAL_PICKS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullViewsScene {
    /// Column heights `h[y][x]`.
    pub heights: Vec<Vec<usize>>,
    pub max_height: usize,
    /// Top, left and right face shades, then the view fill.
    pub colors: [u8; 4],
}

pub fn generate(sample: &ParamSample, s: &mut Stream) -> Result<FullViewsScene, FamilyError> {
    let nx = sample.int("BASE_X")? as usize;
    let ny = sample.int("BASE_Y")? as usize;
    let max_height = sample.int("MAX_HEIGHT")? as usize;
    let heights = staircase(nx, ny, max_height, &mut s.split("heights"));
    let c = s.split("colors").sample_indices(PALETTE_SLOTS, 4);
    Ok(FullViewsScene {
        heights,
        max_height,
        colors: [c[0] as u8, c[1] as u8, c[2] as u8, c[3] as u8],
    })
}

fn total(p: &Projections) -> usize {
    p.front.count() + p.side.count() + p.top.count()
}

fn distance(a: &Projections, b: &Projections) -> usize {
    a.front.hamming(&b.front) + a.side.hamming(&b.side) + a.top.hamming(&b.top)
}

impl FullViewsScene {
    fn nx(&self) -> usize {
        self.heights[0].len()
    }

    fn ny(&self) -> usize {
        self.heights.len()
    }

    fn window(&self) -> usize {
        self.nx().max(self.ny()).max(self.max_height)
    }

    /// Front lower left, side lower right, top above the front.
    fn sheet(&self, p: &Projections) -> Fragment {
        let w = self.window() as f64;
        let span = 2.0 * w + 1.0;
        let mut f = Fragment::new(Vec2::new(-0.3, -0.3), Vec2::new(span + 0.3, span + 0.3));
        let fill = Paint::Palette(self.colors[3]);
        let place = |m: &crate::geometry::Mask, ox: f64, oy: f64| {
            m.cells()
                .map(|(u, v)| draw::cell(ox + u as f64, oy + v as f64, fill))
                .collect::<Vec<_>>()
        };
        for c in place(&p.front, 0.0, 0.0)
            .into_iter()
            .chain(place(&p.side, w + 1.0, 0.0))
            .chain(place(&p.top, 0.0, w + 1.0))
        {
            f.push(c);
        }
        f
    }

    fn candidate(&self, views: Projections, kind: Option<NearMissKind>) -> Candidate {
        Candidate {
            fragment: self.sheet(&views),
            answer: Answer::Views { views },
            kind,
        }
    }

    pub fn candidates(&self, n: usize, margins: &Margins, s: &mut Stream) -> Result<Vec<Candidate>, FamilyError> {
        let w = self.window();
        let correct = voxel_projections(&self.heights, w)?;
        let m = margins.hamming as usize;
        let far = |a: &Projections, b: &Projections| distance(a, b) >= m && total(a) == total(b);

        let mut structural: Vec<(Projections, NearMissKind)> = vec![
            (
                Projections {
                    front: correct.side.clone(),
                    side: correct.front.clone(),
                    top: correct.top.clone(),
                },
                NearMissKind::InconsistentProjection,
            ),
            (
                Projections {
                    front: mirror_within(&correct.front, self.nx()),
                    ..correct.clone()
                },
                NearMissKind::Mirror,
            ),
            (
                Projections {
                    side: mirror_within(&correct.side, self.ny()),
                    ..correct.clone()
                },
                NearMissKind::Mirror,
            ),
            (
                Projections {
                    top: mirror_within(&correct.top, self.nx()),
                    ..correct.clone()
                },
                NearMissKind::Mirror,
            ),
        ];
        let mut alt = s.split("alternative");
        for _ in 0..ALTERNATIVE_TRIES {
            let h = staircase(self.nx(), self.ny(), self.max_height, &mut alt);
            let p = voxel_projections(&h, w)?;
            if far(&p, &correct) {
                structural.push((p, NearMissKind::InconsistentProjection));
                break;
            }
        }
        let base = vec![(correct.clone(), NearMissKind::Mirror)];
        let want = STRUCTURAL_PICKS.min(n - 1);
        let mut picked = Vec::new();
        for k in (0..=want).rev() {
            if let Some(p) = super::pick_spread(&structural, k, &base, &mut s.split("structural"), |a, b| far(&a.0, &b.0)) {
                picked = p;
                break;
            }
        }
        let mut moves: Vec<(Projections, NearMissKind)> = Vec::new();
        for mv in one_cell_moves(&correct.front) {
            moves.push((Projections { front: mv, ..correct.clone() }, NearMissKind::OffByOneTransform));
        }
        for mv in one_cell_moves(&correct.side) {
            moves.push((Projections { side: mv, ..correct.clone() }, NearMissKind::OffByOneTransform));
        }
        for mv in one_cell_moves(&correct.top) {
            moves.push((Projections { top: mv, ..correct.clone() }, NearMissKind::OffByOneTransform));
        }
        let mut against = base;
        against.extend(picked.iter().cloned());
        let rest = super::pick_spread(&moves, n - 1 - picked.len(), &against, s, |a, b| far(&a.0, &b.0))
            .ok_or_else(|| FamilyError::Distractors("not enough distinct view sets".into()))?;
        let mut out = vec![self.candidate(correct, None)];
        out.extend(picked.into_iter().chain(rest).map(|(p, k)| self.candidate(p, Some(k))));
        Ok(out)
    }

    pub fn stimulus(&self) -> Fragment {
        let items = solid_drawing(&self.heights, [self.colors[0], self.colors[1], self.colors[2]]).unwrap_or_default();
        Fragment::fitted(items, 0.06)
    }

    /// All three views equal the ones read off the columns directly.
    pub fn holds(&self, answer: &Answer) -> bool {
        match answer {
            Answer::Views { views } => *views == column_projections(&self.heights, self.window()),
            _ => false,
        }
    }

    pub fn checks(&self, set: &CandidateSet, margins: &Margins) -> ValidationReport {
        let mut r = ValidationReport::default();
        let all: Vec<&Projections> = set
            .candidates
            .iter()
            .filter_map(|c| match &c.answer {
                Answer::Views { views } => Some(views),
                _ => None,
            })
            .collect();
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                if distance(all[i], all[j]) < margins.hamming as usize {
                    margin_fail(&mut r, format!("view sets {i} and {j} differ in too few cells"));
                }
                if total(all[i]) != total(all[j]) {
                    margin_fail(&mut r, format!("view sets {i} and {j} differ in size"));
                }
            }
        }
        r
    }
}
