//! The seven task families: scene generation, near-miss synthesis and validation.
//!
//! Each family module exposes the same five functions:
//! `generate` (scene from knobs), `candidates` (correct answer first, then near
//! misses), `holds` (the answer predicate, evaluated from the scene only), `checks`
//! (family margins) and `stimulus` / `outputs` for presentation.

mod agent_sight;
mod draw;
mod full_views;
mod polyomino;
mod pyramid;
mod revolution;
mod solids;
mod sun_direction;
mod unfolded;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{CubeNet, GeometryError, Mask, Projections, Vec2};
use crate::manifest::{FamilyType, Manifest, ManifestError, ParamSample, ValidatorKind};
use crate::renderer::palette::{self, contrast_ratio, delta_e, PALETTE_SLOTS};
use crate::renderer::{Fragment, Paint, RenderError, StyleConfig};
use crate::rng::Stream;

pub use agent_sight::AgentSightScene;
pub use full_views::FullViewsScene;
pub use polyomino::PolyominoScene;
pub use pyramid::PyramidScene;
pub use revolution::RevolutionScene;
pub use sun_direction::{SunDirectionScene, COMPASS};
pub use unfolded::UnfoldedScene;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FamilyError {
    #[error(transparent)]
    Param(#[from] ManifestError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("manifest family {manifest} does not match scene family {scene}")]
    FamilyMismatch { manifest: FamilyType, scene: FamilyType },
    #[error("cannot build distractors: {0}")]
    Distractors(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NearMissKind {
    FakeViewpoint,
    Mirror,
    NearRotation,
    OffByOneTransform,
    MisalignedParallel,
    InconsistentProjection,
}

impl NearMissKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NearMissKind::FakeViewpoint => "fake_viewpoint",
            NearMissKind::Mirror => "mirror",
            NearMissKind::NearRotation => "near_rotation",
            NearMissKind::OffByOneTransform => "off_by_one_transform",
            NearMissKind::MisalignedParallel => "misaligned_parallel",
            NearMissKind::InconsistentProjection => "inconsistent_projection",
        }
    }
}

/// Near-miss kinds each family may produce.
pub fn allowed_kinds(family: FamilyType) -> &'static [NearMissKind] {
    use NearMissKind::*;
    match family {
        FamilyType::AgentSight => &[FakeViewpoint],
        FamilyType::SunDirection => &[Mirror, MisalignedParallel],
        FamilyType::Polyomino => &[Mirror, NearRotation, OffByOneTransform],
        FamilyType::Revolution => &[Mirror, OffByOneTransform, InconsistentProjection],
        FamilyType::Unfolded => &[Mirror, OffByOneTransform, InconsistentProjection],
        FamilyType::Pyramid => &[Mirror, OffByOneTransform, InconsistentProjection],
        FamilyType::FullViews => &[Mirror, OffByOneTransform, InconsistentProjection],
    }
}

/// What a candidate asserts, in scene terms. Predicates read only this and the scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Answer {
    /// Object ids from the viewer's left to right.
    Sequence { ids: Vec<u32> },
    /// Index into [`COMPASS`], clockwise from north.
    Compass { point: u8 },
    /// Centres of the unit cells as drawn, plus how the drawing was made. Predicates
    /// read only the centres.
    Cells {
        centers: Vec<Vec2>,
        turn_deg: f64,
        mirrored: bool,
    },
    /// Closed silhouette outline.
    Outline { points: Vec<Vec2> },
    Net { net: CubeNet },
    Mask { mask: Mask },
    Views { views: Projections },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub answer: Answer,
    pub fragment: Fragment,
    /// `None` for the correct candidate.
    pub kind: Option<NearMissKind>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
    pub correct_index: usize,
}

impl CandidateSet {
    /// Near-miss kinds in presentation order; the correct slot is skipped.
    pub fn near_miss_kinds(&self) -> Vec<NearMissKind> {
        self.candidates.iter().filter_map(|c| c.kind).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedCheck {
    pub check: ValidatorKind,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub failed: Vec<FailedCheck>,
}

impl ValidationReport {
    pub fn accepted(&self) -> bool {
        self.failed.is_empty()
    }

    fn fail(&mut self, check: ValidatorKind, detail: impl Into<String>) {
        self.failed.push(FailedCheck {
            check,
            detail: detail.into(),
        });
    }

    fn absorb(&mut self, other: ValidationReport) {
        self.failed.extend(other.failed);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Scene {
    AgentSight(AgentSightScene),
    SunDirection(SunDirectionScene),
    Polyomino(PolyominoScene),
    Revolution(RevolutionScene),
    Unfolded(UnfoldedScene),
    Pyramid(PyramidScene),
    FullViews(FullViewsScene),
}

impl Scene {
    pub fn family(&self) -> FamilyType {
        match self {
            Scene::AgentSight(_) => FamilyType::AgentSight,
            Scene::SunDirection(_) => FamilyType::SunDirection,
            Scene::Polyomino(_) => FamilyType::Polyomino,
            Scene::Revolution(_) => FamilyType::Revolution,
            Scene::Unfolded(_) => FamilyType::Unfolded,
            Scene::Pyramid(_) => FamilyType::Pyramid,
            Scene::FullViews(_) => FamilyType::FullViews,
        }
    }

    /// The scene as the solver sees it.
    pub fn stimulus(&self) -> Fragment {
        match self {
            Scene::AgentSight(s) => s.stimulus(),
            Scene::SunDirection(s) => s.stimulus(),
            Scene::Polyomino(s) => s.stimulus(),
            Scene::Revolution(s) => s.stimulus(),
            Scene::Unfolded(s) => s.stimulus(),
            Scene::Pyramid(s) => s.stimulus(),
            Scene::FullViews(s) => s.stimulus(),
        }
    }

    /// Values for the prompt placeholders.
    pub fn outputs(&self) -> BTreeMap<String, String> {
        let pairs: Vec<(&str, String)> = match self {
            Scene::AgentSight(s) => s.outputs(),
            Scene::SunDirection(s) => s.outputs(),
            Scene::Polyomino(s) => s.outputs(),
            Scene::Revolution(s) => s.outputs(),
            Scene::Unfolded(_) => Vec::new(),
            Scene::Pyramid(s) => s.outputs(),
            Scene::FullViews(_) => Vec::new(),
        };
        pairs.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
    }

    /// Independent re-evaluation of the family predicate for one candidate.
    pub fn holds(&self, answer: &Answer) -> bool {
        match self {
            Scene::AgentSight(s) => s.holds(answer),
            Scene::SunDirection(s) => s.holds(answer),
            Scene::Polyomino(s) => s.holds(answer),
            Scene::Revolution(s) => s.holds(answer),
            Scene::Unfolded(s) => s.holds(answer),
            Scene::Pyramid(s) => s.holds(answer),
            Scene::FullViews(s) => s.holds(answer),
        }
    }

    /// Predicate verdict for every candidate, in order.
    pub fn sweep(&self, set: &CandidateSet) -> Vec<bool> {
        set.candidates.iter().map(|c| self.holds(&c.answer)).collect()
    }
}

fn scene_stream(sample: &ParamSample) -> Stream {
    Stream::new(sample.seed).split("scene")
}

/// Build the scene for a sample. Degenerate scenes are left for [`validate_scene`].
pub fn generate_scene(manifest: &Manifest, sample: &ParamSample) -> Result<Scene, FamilyError> {
    let mut s = scene_stream(sample);
    let margins = &manifest.margins;
    Ok(match manifest.family() {
        FamilyType::AgentSight => {
            let fakes = manifest.answer.num_variants.saturating_sub(1);
            Scene::AgentSight(agent_sight::generate(sample, margins, fakes, &mut s)?)
        }
        FamilyType::SunDirection => Scene::SunDirection(sun_direction::generate(sample, margins, &mut s)?),
        FamilyType::Polyomino => Scene::Polyomino(polyomino::generate(sample, &mut s)?),
        FamilyType::Revolution => Scene::Revolution(revolution::generate(sample, &mut s)?),
        FamilyType::Unfolded => Scene::Unfolded(unfolded::generate(sample, &mut s)?),
        FamilyType::Pyramid => Scene::Pyramid(pyramid::generate(sample, &mut s)?),
        FamilyType::FullViews => Scene::FullViews(full_views::generate(sample, &mut s)?),
    })
}

/// Correct candidate plus `num_variants - 1` near misses, in shuffled order.
pub fn synthesize_distractors(
    manifest: &Manifest,
    scene: &Scene,
    sample: &ParamSample,
) -> Result<CandidateSet, FamilyError> {
    if manifest.family() != scene.family() {
        return Err(FamilyError::FamilyMismatch {
            manifest: manifest.family(),
            scene: scene.family(),
        });
    }
    let n = manifest.answer.num_variants;
    let mut s = Stream::new(sample.seed).split("distractors");
    let margins = &manifest.margins;
    let mut list = match scene {
        Scene::AgentSight(sc) => sc.candidates(n, margins, &mut s)?,
        Scene::SunDirection(sc) => sc.candidates(n, &mut s)?,
        Scene::Polyomino(sc) => sc.candidates(n, &mut s)?,
        Scene::Revolution(sc) => sc.candidates(n, margins, &mut s)?,
        Scene::Unfolded(sc) => sc.candidates(n, &mut s)?,
        Scene::Pyramid(sc) => sc.candidates(n, margins, &mut s)?,
        Scene::FullViews(sc) => sc.candidates(n, margins, &mut s)?,
    };
    if list.len() != n {
        return Err(FamilyError::Distractors(format!("built {} of {n} candidates", list.len())));
    }
    // Position of the correct answer comes from its own stream.
    let mut order: Vec<usize> = (0..n).collect();
    Stream::new(sample.seed).split("shuffle").shuffle(&mut order);
    let mut slots: Vec<Option<Candidate>> = list.drain(..).map(Some).collect();
    let candidates: Vec<Candidate> = order.iter().map(|&i| slots[i].take().expect("permutation")).collect();
    let correct_index = order.iter().position(|&i| i == 0).expect("correct candidate present");
    Ok(CandidateSet {
        candidates,
        correct_index,
    })
}

fn style_for(manifest: &Manifest, sample: &ParamSample) -> Result<StyleConfig, FamilyError> {
    let r = &manifest.renderer;
    Ok(StyleConfig::new(r.canvas, &manifest.palette_for(sample)?, r.stroke_width, &r.background)?)
}

/// Run every validator the manifest lists.
pub fn validate_scene(
    manifest: &Manifest,
    sample: &ParamSample,
    scene: &Scene,
    set: &CandidateSet,
) -> Result<ValidationReport, FamilyError> {
    let margins = &manifest.margins;
    let mut report = ValidationReport::default();
    let enabled = |k: ValidatorKind| manifest.validators.contains(&k);

    if set.candidates.len() != manifest.answer.num_variants || set.correct_index >= set.candidates.len() {
        report.fail(ValidatorKind::Uniqueness, "candidate count does not match the manifest");
        return Ok(report);
    }
    let allowed = allowed_kinds(scene.family());
    for (i, c) in set.candidates.iter().enumerate() {
        match (i == set.correct_index, c.kind) {
            (true, None) => {}
            (false, Some(k)) if allowed.contains(&k) => {}
            _ => report.fail(ValidatorKind::Uniqueness, format!("candidate {i} has an inconsistent near-miss kind")),
        }
    }

    let family = match scene {
        Scene::AgentSight(s) => s.checks(set, margins),
        Scene::SunDirection(s) => s.checks(set, margins),
        Scene::Polyomino(s) => s.checks(set, margins),
        Scene::Revolution(s) => s.checks(set, margins),
        Scene::Unfolded(s) => s.checks(set, margins),
        Scene::Pyramid(s) => s.checks(set, margins),
        Scene::FullViews(s) => s.checks(set, margins),
    };
    let mut family_report = ValidationReport::default();
    for f in family.failed {
        if enabled(f.check) {
            family_report.failed.push(f);
        }
    }
    report.absorb(family_report);

    if enabled(ValidatorKind::Uniqueness) {
        let verdicts = scene.sweep(set);
        let true_at: Vec<usize> = verdicts.iter().enumerate().filter(|(_, &t)| t).map(|(i, _)| i).collect();
        if true_at != [set.correct_index] {
            report.fail(
                ValidatorKind::Uniqueness,
                format!("predicate true at {true_at:?}, expected [{}]", set.correct_index),
            );
        }
    }
    if enabled(ValidatorKind::Parity) {
        report.absorb(parity(set));
    }
    if enabled(ValidatorKind::Contrast) {
        let style = style_for(manifest, sample)?;
        let mut fragments = vec![scene.stimulus()];
        fragments.extend(set.candidates.iter().map(|c| c.fragment.clone()));
        report.absorb(contrast(&fragments, &style));
    }
    Ok(report)
}

/// Every distractor matches the correct candidate on primitive count and palette multiset.
fn parity(set: &CandidateSet) -> ValidationReport {
    let mut r = ValidationReport::default();
    let correct = &set.candidates[set.correct_index].fragment;
    let key = (correct.primitive_count(), correct.palette_multiset());
    for (i, c) in set.candidates.iter().enumerate() {
        if (c.fragment.primitive_count(), c.fragment.palette_multiset()) != key {
            r.fail(ValidatorKind::Parity, format!("candidate {i} differs in primitive count or palette use"));
        }
    }
    r
}

/// Fills stand out from the background and from each other.
fn contrast(fragments: &[Fragment], style: &StyleConfig) -> ValidationReport {
    let mut r = ValidationReport::default();
    let Some(pal) = palette::palette(&style.palette) else {
        r.fail(ValidatorKind::Contrast, format!("unknown palette {}", style.palette));
        return r;
    };
    let mut slots: Vec<u8> = fragments
        .iter()
        .flat_map(|f| f.items.iter().map(|p| p.fill()))
        .filter_map(|p| match p {
            Paint::Palette(i) => Some(i),
            _ => None,
        })
        .collect();
    slots.sort_unstable();
    slots.dedup();
    let mut colors = Vec::new();
    for &i in &slots {
        if i as usize >= PALETTE_SLOTS.min(pal.colors.len()) {
            r.fail(ValidatorKind::Contrast, format!("palette slot {i} outside the usable range"));
            continue;
        }
        let c = pal.colors[i as usize];
        if contrast_ratio(c, style.background) < palette::MIN_CONTRAST {
            r.fail(ValidatorKind::Contrast, format!("slot {i} too close to the background"));
        }
        colors.push((i, c));
    }
    for (a, (i, ca)) in colors.iter().enumerate() {
        for (j, cb) in &colors[a + 1..] {
            if delta_e(*ca, *cb) < palette::MIN_DELTA_E {
                r.fail(ValidatorKind::Contrast, format!("slots {i} and {j} are too similar"));
            }
        }
    }
    r
}

/// Pick `k` items from `pool` so that every pair passes `apart`, in stream order.
/// Returns `None` if no such selection is found greedily.
pub(crate) fn pick_spread<T: Clone>(
    pool: &[T],
    k: usize,
    fixed: &[T],
    s: &mut Stream,
    apart: impl Fn(&T, &T) -> bool,
) -> Option<Vec<T>> {
    let mut order: Vec<usize> = (0..pool.len()).collect();
    s.shuffle(&mut order);
    let mut chosen: Vec<T> = Vec::with_capacity(k);
    for i in order {
        if chosen.len() == k {
            break;
        }
        let c = &pool[i];
        if fixed.iter().chain(chosen.iter()).all(|o| apart(o, c)) {
            chosen.push(c.clone());
        }
    }
    (chosen.len() == k).then_some(chosen)
}

pub(crate) fn margin_fail(r: &mut ValidationReport, detail: impl Into<String>) {
    r.fail(ValidatorKind::Margin, detail);
}

pub(crate) fn symmetry_fail(r: &mut ValidationReport, detail: impl Into<String>) {
    r.fail(ValidatorKind::Symmetry, detail);
}

pub(crate) fn overlap_fail(r: &mut ValidationReport, detail: impl Into<String>) {
    r.fail(ValidatorKind::NonIntersection, detail);
}
