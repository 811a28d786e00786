//! Unfolded: pick the flat pattern that folds into the pictured cube.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::draw;
use super::{margin_fail, symmetry_fail, Answer, Candidate, CandidateSet, FamilyError, NearMissKind, ValidationReport};
use crate::geometry::cube::{cube_net_shapes, Face};
use crate::geometry::polyomino::{enumerate_free, Congruence};
use crate::geometry::{fold_net, CubeNet, CubeRotation, LabeledCube, Vec2, VoxelGrid};
use crate::manifest::ParamSample;
use crate::renderer::palette::PALETTE_SLOTS;
use crate::renderer::{Fragment, Paint, Primitive};
use crate::rng::Stream;

/// Square window every net is centred in, in cells.
const NET_WINDOW: f64 = 6.0;
/// Half turn about (1, -1, 0): brings the three hidden faces to the front.
const OPPOSITE_CORNER: CubeRotation = CubeRotation([[0, -1, 0], [-1, 0, 0], [0, 0, -1]]);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnfoldedScene {
    /// The pattern that folds into `cube`.
    pub net: CubeNet,
    /// Target cube as displayed.
    pub cube: LabeledCube,
    pub foldable_distractors: usize,
}

pub fn generate(sample: &ParamSample, s: &mut Stream) -> Result<UnfoldedScene, FamilyError> {
    let index = sample.int("NET_INDEX")? as usize;
    let foldable_distractors = sample.int("FOLDABLE_DISTRACTORS")? as usize;
    let shapes = cube_net_shapes();
    let shape = shapes
        .get(index)
        .ok_or_else(|| FamilyError::Distractors(format!("net index {index} out of range")))?;
    let turn = Congruence {
        quarter_turns: s.split("turn").below(4) as u8,
        mirrored: false,
    };
    let slots = s.split("colors").sample_indices(PALETTE_SLOTS, 6);
    let net = CubeNet::from_shape(&shape.transformed(turn), slots.iter().map(|&c| c as u32).collect())?;
    let folded = fold_net(&net).ok_or_else(|| FamilyError::Distractors("listed net does not fold".into()))?;
    let rotations = CubeRotation::all();
    let pose = rotations[s.split("pose").index(rotations.len())];
    Ok(UnfoldedScene {
        net,
        cube: folded.rotated(&pose),
        foldable_distractors,
    })
}

fn net_fragment(net: &CubeNet) -> Fragment {
    let (w, h) = net.shape().extent();
    let (ox, oy) = ((NET_WINDOW - w as f64) / 2.0, (NET_WINDOW - h as f64) / 2.0);
    let (mx, my) = net
        .cells()
        .iter()
        .fold((i32::MAX, i32::MAX), |(a, b), &(x, y)| (a.min(x), b.min(y)));
    let mut f = Fragment::new(Vec2::new(-0.2, -0.2), Vec2::new(NET_WINDOW + 0.2, NET_WINDOW + 0.2));
    for (&(x, y), &label) in net.cells().iter().zip(net.labels()) {
        f.push(draw::cell(ox + (x - mx) as f64, oy + (y - my) as f64, Paint::Palette(label as u8)));
    }
    f
}

fn same_net(a: &CubeNet, b: &CubeNet) -> bool {
    let key = |n: &CubeNet| {
        let (mx, my) = n.cells().iter().fold((i32::MAX, i32::MAX), |(a, b), &(x, y)| (a.min(x), b.min(y)));
        n.cells()
            .iter()
            .zip(n.labels())
            .map(|(&(x, y), &l)| (x - mx, y - my, l))
            .collect::<BTreeSet<_>>()
    };
    key(a) == key(b)
}

impl UnfoldedScene {
    pub fn candidates(&self, n: usize, s: &mut Stream) -> Result<Vec<Candidate>, FamilyError> {
        let d = n.saturating_sub(1);
        let f = self.foldable_distractors.min(d);
        let mut foldable: Vec<(CubeNet, NearMissKind)> = Vec::new();
        if f > 0 {
            foldable.push((self.net.mirrored(), NearMissKind::Mirror));
        }
        let mut pairs: Vec<(usize, usize)> = (0..6).flat_map(|i| (i + 1..6).map(move |j| (i, j))).collect();
        s.split("swaps").shuffle(&mut pairs);
        for (i, j) in pairs {
            if foldable.len() == f {
                break;
            }
            let swapped = self.net.with_swapped_labels(i, j);
            if !foldable.iter().any(|(o, _)| same_net(o, &swapped)) {
                foldable.push((swapped, NearMissKind::OffByOneTransform));
            }
        }
        let mut bad: Vec<_> = enumerate_free(6)
            .into_iter()
            .filter(|p| fold_net(&CubeNet::from_shape(p, (0..6).collect()).expect("hexomino")).is_none())
            .collect();
        let mut bs = s.split("non_folding");
        bs.shuffle(&mut bad);
        let mut rest = Vec::new();
        for shape in bad.into_iter().take(d - f) {
            let turn = Congruence {
                quarter_turns: bs.below(4) as u8,
                mirrored: bs.chance(1, 2),
            };
            let mut labels = self.net.labels().to_vec();
            bs.shuffle(&mut labels);
            rest.push((CubeNet::from_shape(&shape.transformed(turn), labels)?, NearMissKind::InconsistentProjection));
        }
        let mut out = vec![Candidate {
            answer: Answer::Net { net: self.net.clone() },
            fragment: net_fragment(&self.net),
            kind: None,
        }];
        out.extend(foldable.into_iter().chain(rest).map(|(net, kind)| Candidate {
            fragment: net_fragment(&net),
            answer: Answer::Net { net },
            kind: Some(kind),
        }));
        Ok(out)
    }

    fn drawing(cube: &LabeledCube, dx: f64) -> Vec<Primitive> {
        let mut g = VoxelGrid::new(1, 1, 1).expect("unit grid");
        g.set(0, 0, 0, true);
        let paint = |face: Face| Paint::Palette(cube.label(face) as u8);
        draw::voxel_faces(&g, paint(Face::PosZ), paint(Face::PosY), paint(Face::PosX))
            .into_iter()
            .map(|p| match p {
                Primitive::Polygon { points, fill, stroke } => Primitive::Polygon {
                    points: points.into_iter().map(|q| q + Vec2::new(dx, 0.0)).collect(),
                    fill,
                    stroke,
                },
                other => other,
            })
            .collect()
    }

    pub fn stimulus(&self) -> Fragment {
        let mut items = Self::drawing(&self.cube, 0.0);
        items.extend(Self::drawing(&self.cube.rotated(&OPPOSITE_CORNER), 2.6));
        Fragment::fitted(items, 0.15)
    }

    /// The candidate folds, and some rotation maps its colouring onto the target cube.
    pub fn holds(&self, answer: &Answer) -> bool {
        match answer {
            Answer::Net { net } => fold_net(net).is_some_and(|c| c.same_coloring(&self.cube, false)),
            _ => false,
        }
    }

    pub fn checks(&self, set: &CandidateSet, _margins: &crate::manifest::Margins) -> ValidationReport {
        let mut r = ValidationReport::default();
        if self.net.labels().iter().collect::<BTreeSet<_>>().len() != 6 {
            symmetry_fail(&mut r, "face colours repeat");
        }
        let nets: Vec<&CubeNet> = set
            .candidates
            .iter()
            .filter_map(|c| match &c.answer {
                Answer::Net { net } => Some(net),
                _ => None,
            })
            .collect();
        for i in 0..nets.len() {
            for j in i + 1..nets.len() {
                if same_net(nets[i], nets[j]) {
                    margin_fail(&mut r, format!("patterns {i} and {j} are identical"));
                }
            }
        }
        let folding = nets.iter().filter(|n| fold_net(n).is_some()).count();
        if folding != 1 + self.foldable_distractors.min(nets.len().saturating_sub(1)) {
            margin_fail(&mut r, format!("{folding} patterns fold, knob asks for {}", 1 + self.foldable_distractors));
        }
        r
    }
}
