//! Pyramid: the silhouette of a stepped block pile seen along a marked direction.

use serde::{Deserialize, Serialize};

use super::solids::{iso_arrow, mirror_within, one_cell_moves, solid_drawing, staircase, voxel_projections};
use super::{draw, margin_fail, Answer, Candidate, CandidateSet, FamilyError, NearMissKind, ValidationReport};
use crate::geometry::{Mask, Vec3};
use crate::manifest::{Margins, ParamSample};
use crate::renderer::palette::PALETTE_SLOTS;
use crate::renderer::{Fragment, Paint};
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    Top,
    Front,
    Side,
}

impl View {
    pub fn as_str(self) -> &'static str {
        match self {
            View::Top => "top",
            View::Front => "front",
            View::Side => "side",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PyramidScene {
    /// Column heights `h[y][x]`.
    pub heights: Vec<Vec<usize>>,
    pub view: View,
    pub max_height: usize,
    /// Top, left and right face shades, then the silhouette fill.
    pub colors: [u8; 4],
}

pub fn generate(sample: &ParamSample, s: &mut Stream) -> Result<PyramidScene, FamilyError> {
    let base = sample.int("BASE_SIZE")? as usize;
    let max_height = sample.int("MAX_HEIGHT")? as usize;
    let view = match sample.enum_value("VIEW")? {
        "top" => View::Top,
        "front" => View::Front,
        _ => View::Side,
    };
    let heights = staircase(base, base, max_height, &mut s.split("heights"));
    let c = s.split("colors").sample_indices(PALETTE_SLOTS, 4);
    Ok(PyramidScene {
        heights,
        view,
        max_height,
        colors: [c[0] as u8, c[1] as u8, c[2] as u8, c[3] as u8],
    })
}

impl PyramidScene {
    fn base(&self) -> usize {
        self.heights.len()
    }

    fn window(&self) -> usize {
        self.base().max(self.max_height)
    }

    fn mask_of(&self, view: View) -> Result<Mask, FamilyError> {
        let p = voxel_projections(&self.heights, self.window())?;
        Ok(match view {
            View::Top => p.top,
            View::Front => p.front,
            View::Side => p.side,
        })
    }

    fn candidate(&self, mask: Mask, kind: Option<NearMissKind>) -> Candidate {
        Candidate {
            fragment: draw::mask_fragment(&mask, self.window(), Paint::Palette(self.colors[3])),
            answer: Answer::Mask { mask },
            kind,
        }
    }

    pub fn candidates(&self, n: usize, margins: &Margins, s: &mut Stream) -> Result<Vec<Candidate>, FamilyError> {
        let correct = self.mask_of(self.view)?;
        let m = margins.hamming as usize;
        let far = |a: &Mask, b: &Mask| a.hamming(b) >= m && a.count() == b.count();
        let mut fixed: Vec<(Mask, NearMissKind)> = Vec::new();
        let mirrored = mirror_within(&correct, self.base());
        if far(&mirrored, &correct) {
            fixed.push((mirrored, NearMissKind::Mirror));
        }
        for other in [View::Top, View::Front, View::Side] {
            let o = self.mask_of(other)?;
            if other != self.view && far(&o, &correct) && fixed.iter().all(|(f, _)| far(f, &o)) {
                fixed.push((o, NearMissKind::InconsistentProjection));
                break;
            }
        }
        fixed.truncate(n - 1);
        let pool: Vec<(Mask, NearMissKind)> = one_cell_moves(&correct)
            .into_iter()
            .map(|mv| (mv, NearMissKind::OffByOneTransform))
            .collect();
        let mut against = vec![(correct.clone(), NearMissKind::Mirror)];
        against.extend(fixed.iter().cloned());
        let rest = super::pick_spread(&pool, n - 1 - fixed.len(), &against, s, |a, b| far(&a.0, &b.0))
            .ok_or_else(|| FamilyError::Distractors("not enough distinct silhouettes".into()))?;
        let mut out = vec![self.candidate(correct, None)];
        out.extend(fixed.into_iter().chain(rest).map(|(mask, k)| self.candidate(mask, Some(k))));
        Ok(out)
    }

    pub fn stimulus(&self) -> Fragment {
        let mut items = solid_drawing(&self.heights, [self.colors[0], self.colors[1], self.colors[2]])
            .unwrap_or_default();
        let b = self.base() as f64;
        let h = self.max_height as f64;
        let (from, to) = match self.view {
            View::Front => (Vec3::new(b / 2.0, -2.4, h / 2.0), Vec3::new(b / 2.0, -0.6, h / 2.0)),
            View::Side => (Vec3::new(b + 2.4, b / 2.0, h / 2.0), Vec3::new(b + 0.6, b / 2.0, h / 2.0)),
            View::Top => (Vec3::new(b / 2.0, b / 2.0, h + 2.4), Vec3::new(b / 2.0, b / 2.0, h + 0.6)),
        };
        items.push(iso_arrow(from, to));
        Fragment::fitted(items, 0.06)
    }

    pub fn outputs(&self) -> Vec<(&'static str, String)> {
        vec![("VIEW", self.view.as_str().into())]
    }

    /// The candidate equals the marked view, read off the columns directly.
    pub fn holds(&self, answer: &Answer) -> bool {
        let Answer::Mask { mask } = answer else {
            return false;
        };
        let (w, hh) = (mask.width(), mask.height());
        let ny = self.heights.len();
        let nx = self.heights[0].len();
        (0..hh).all(|v| {
            (0..w).all(|u| {
                let expect = match self.view {
                    View::Top => u < nx && v < ny && self.heights[v][u] > 0,
                    View::Front => u < nx && (0..ny).any(|y| self.heights[y][u] > v),
                    View::Side => u < ny && (0..nx).any(|x| self.heights[u][x] > v),
                };
                mask.get(u, v) == expect
            })
        })
    }

    pub fn checks(&self, set: &CandidateSet, margins: &Margins) -> ValidationReport {
        let mut r = ValidationReport::default();
        let masks: Vec<&Mask> = set
            .candidates
            .iter()
            .filter_map(|c| match &c.answer {
                Answer::Mask { mask } => Some(mask),
                _ => None,
            })
            .collect();
        for i in 0..masks.len() {
            for j in i + 1..masks.len() {
                if masks[i].hamming(masks[j]) < margins.hamming as usize {
                    margin_fail(&mut r, format!("silhouettes {i} and {j} differ in too few cells"));
                }
                if masks[i].count() != masks[j].count() {
                    margin_fail(&mut r, format!("silhouettes {i} and {j} differ in size"));
                }
            }
        }
        r
    }
}
