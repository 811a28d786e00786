//! Agent Sight: which strip shows what a marked agent sees, left to right.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::draw;
use super::{margin_fail, overlap_fail, Answer, Candidate, CandidateSet, FamilyError, NearMissKind, ValidationReport};
use crate::geometry::shapes::footprint_gap;
use crate::geometry::visibility::{ray_cast_sequence, view, VisibleObject};
use crate::geometry::{AgentPose, Footprint, PlacedObject, Vec2};
use crate::manifest::{Margins, ParamSample};
use crate::renderer::palette::{accent_name, ACCENTS, PALETTE_SLOTS};
use crate::renderer::{Fragment, Paint, Primitive};
use crate::rng::Stream;

/// Side of the square world, used to scale the gap margin.
const WORLD: f64 = 10.0;
const HALF_ARENA: f64 = 3.8;
const AGENT_RING: f64 = 6.5;
const AGENT_RADIUS: f64 = 0.35;
const FOV: f64 = 80.0 * PI / 180.0;
const HEADING_JITTER: f64 = 12.0 * PI / 180.0;
const PLACEMENT_TRIES: usize = 60;
const FAKE_TRIES: usize = 400;
/// Rays for the independent visibility evaluation.
pub const AUDIT_RAYS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    Box,
    Cylinder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: u32,
    pub kind: ObjectKind,
    pub color: u8,
    pub footprint: Footprint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub pose: AgentPose,
    pub accent: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSightScene {
    pub objects: Vec<SceneObject>,
    pub agent: Agent,
    pub fakes: Vec<Agent>,
}

fn random_pose(s: &mut Stream) -> Result<AgentPose, FamilyError> {
    aimed_pose(s, Vec2::ZERO)
}

/// Pose on the ring facing `target`, up to the heading jitter.
fn aimed_pose(s: &mut Stream, target: Vec2) -> Result<AgentPose, FamilyError> {
    let pos = Vec2::from_angle(s.uniform(-PI, PI)) * AGENT_RING;
    let to = target - pos;
    let heading = to.y.atan2(to.x) + s.uniform(-HEADING_JITTER, HEADING_JITTER);
    Ok(AgentPose::new(pos, heading, FOV)?)
}

fn gap_margin(m: &Margins) -> f64 {
    m.gap_fraction * WORLD
}

pub fn generate(
    sample: &ParamSample,
    margins: &Margins,
    fakes_wanted: usize,
    s: &mut Stream,
) -> Result<AgentSightScene, FamilyError> {
    let boxes = sample.int("BOX_COUNT")? as usize;
    let cylinders = sample.int("CYLINDER_COUNT")? as usize;
    let jitter = sample.real("YAW_JITTER_DEG")?.to_radians();
    let gap = gap_margin(margins);

    let box_colors = s.split("box_colors").sample_indices(PALETTE_SLOTS, boxes);
    let cyl_colors = s.split("cylinder_colors").sample_indices(PALETTE_SLOTS, cylinders);
    let specs = box_colors
        .iter()
        .map(|&c| (ObjectKind::Box, c as u8))
        .chain(cyl_colors.iter().map(|&c| (ObjectKind::Cylinder, c as u8)));

    let mut place = s.split("placement");
    let mut objects: Vec<SceneObject> = Vec::new();
    for (id, (kind, color)) in specs.enumerate() {
        let mut last = None;
        for _ in 0..PLACEMENT_TRIES {
            let center = Vec2::new(place.uniform(-HALF_ARENA, HALF_ARENA), place.uniform(-HALF_ARENA, HALF_ARENA));
            let fp = match kind {
                ObjectKind::Box => Footprint::Rect {
                    center,
                    half: Vec2::new(place.uniform(0.35, 0.75), place.uniform(0.35, 0.75)),
                    angle: place.uniform(-jitter, jitter),
                },
                ObjectKind::Cylinder => Footprint::Circle {
                    center,
                    radius: place.uniform(0.3, 0.6),
                },
            };
            let clear = objects.iter().all(|o| footprint_gap(&o.footprint, &fp) >= gap);
            last = Some(fp);
            if clear {
                break;
            }
        }
        objects.push(SceneObject {
            id: id as u32,
            kind,
            color,
            footprint: last.expect("at least one placement try"),
        });
    }

    let accents = s.split("accents").sample_indices(ACCENTS.len(), fakes_wanted + 1);
    let mut poses = s.split("agent");
    let pose = random_pose(&mut poses)?;
    let placed = placed(&objects);
    let truth = view(&pose, &placed);
    let truth_ids: Vec<u32> = truth.iter().map(|v| v.id).collect();
    let truth_set: BTreeSet<u32> = truth_ids.iter().copied().collect();

    let mut fakes: Vec<Agent> = Vec::new();
    let mut seen = vec![truth_ids.clone()];
    let mut fs = s.split("fakes");
    // fakes face the objects the true agent sees, so they tend to see the same set
    let focus = objects
        .iter()
        .filter(|o| truth_set.contains(&o.id))
        .fold(Vec2::ZERO, |acc, o| acc + o.footprint.center())
        * (1.0 / truth_set.len().max(1) as f64);
    for _ in 0..FAKE_TRIES {
        if fakes.len() == fakes_wanted || truth_ids.len() < 2 {
            break;
        }
        let p = aimed_pose(&mut fs, focus)?;
        let crowded = std::iter::once(&pose)
            .chain(fakes.iter().map(|a| &a.pose))
            .any(|q| q.position().distance(p.position()) < 4.0 * AGENT_RADIUS);
        if crowded {
            continue;
        }
        let v = view(&p, &placed);
        let ids: Vec<u32> = v.iter().map(|o| o.id).collect();
        let same_set = ids.iter().copied().collect::<BTreeSet<_>>() == truth_set;
        if same_set && !seen.contains(&ids) && robust(&p, &placed, margins) {
            seen.push(ids);
            fakes.push(Agent {
                pose: p,
                accent: accents[fakes.len() + 1] as u8,
            });
        }
    }

    Ok(AgentSightScene {
        objects,
        agent: Agent {
            pose,
            accent: accents[0] as u8,
        },
        fakes,
    })
}

fn placed(objects: &[SceneObject]) -> Vec<PlacedObject> {
    objects
        .iter()
        .map(|o| PlacedObject {
            id: o.id,
            footprint: o.footprint,
        })
        .collect()
}

/// Every visible piece is wide enough and the visible set survives widening or narrowing
/// the field of view by the margin.
fn robust(pose: &AgentPose, objects: &[PlacedObject], margins: &Margins) -> bool {
    let m = margins.view_angle_rad();
    let v = view(pose, objects);
    if v.iter().any(|o| o.min_piece < m) {
        return false;
    }
    let ids: BTreeSet<u32> = v.iter().map(|o| o.id).collect();
    [pose.fov() - 2.0 * m, pose.fov() + 2.0 * m].into_iter().all(|fov| {
        AgentPose::new(pose.position(), pose.heading(), fov)
            .map(|p| view(&p, objects).iter().map(|o| o.id).collect::<BTreeSet<_>>() == ids)
            .unwrap_or(false)
    })
}

impl AgentSightScene {
    fn placed(&self) -> Vec<PlacedObject> {
        placed(&self.objects)
    }

    fn object(&self, id: u32) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn candidates(&self, n: usize, _margins: &Margins, _s: &mut Stream) -> Result<Vec<Candidate>, FamilyError> {
        if self.fakes.len() + 1 < n {
            return Err(FamilyError::Distractors(format!(
                "found {} fake viewpoints, need {}",
                self.fakes.len(),
                n - 1
            )));
        }
        let objects = self.placed();
        let agents = std::iter::once(&self.agent).chain(&self.fakes).take(n);
        Ok(agents
            .enumerate()
            .map(|(i, a)| {
                let seen = view(&a.pose, &objects);
                Candidate {
                    answer: Answer::Sequence {
                        ids: seen.iter().map(|v| v.id).collect(),
                    },
                    fragment: self.strip(&a.pose, &seen),
                    kind: (i > 0).then_some(NearMissKind::FakeViewpoint),
                }
            })
            .collect())
    }

    /// First-person strip: horizontal position from bearing, height from distance.
    fn strip(&self, pose: &AgentPose, seen: &[VisibleObject]) -> Fragment {
        const W: f64 = 4.0;
        let half = pose.fov() / 2.0;
        let x = |a: f64| (half - a) / pose.fov() * W;
        let mut f = Fragment::new(Vec2::new(0.0, -1.2), Vec2::new(W, 2.8));
        f.push(draw::line(vec![Vec2::new(0.0, 0.0), Vec2::new(W, 0.0)], Paint::Ink, false, 0.5));
        let mut order: Vec<&VisibleObject> = seen.iter().collect();
        order.sort_by(|a, b| b.distance.total_cmp(&a.distance).then(a.id.cmp(&b.id)));
        for v in order {
            let Some(o) = self.object(v.id) else { continue };
            let (x0, x1) = (x(v.left), x(v.right));
            let h = (6.0 / (v.distance + 1.0)).clamp(0.3, 2.6);
            let fill = Paint::Palette(o.color);
            match o.kind {
                ObjectKind::Box => f.push(Primitive::Rect {
                    min: Vec2::new(x0, 0.0),
                    size: Vec2::new(x1 - x0, h),
                    fill,
                    stroke: Paint::Ink,
                }),
                ObjectKind::Cylinder => {
                    let w = x1 - x0;
                    let ry = (w * 0.18).min(0.2);
                    f.push(Primitive::Rect {
                        min: Vec2::new(x0, 0.0),
                        size: Vec2::new(w, h),
                        fill,
                        stroke: Paint::Ink,
                    });
                    f.push(draw::polygon(
                        draw::ellipse(Vec2::new(x0 + w / 2.0, h), w / 2.0, ry, 20),
                        fill,
                    ));
                }
            }
        }
        f
    }

    pub fn stimulus(&self) -> Fragment {
        let mut items = Vec::new();
        for o in &self.objects {
            items.push(draw::footprint(&o.footprint, Paint::Palette(o.color)));
        }
        for a in std::iter::once(&self.agent).chain(&self.fakes) {
            let p = a.pose.position();
            let paint = Paint::Accent(a.accent);
            for side in [-1.0, 1.0] {
                let d = Vec2::from_angle(a.pose.heading() + side * a.pose.fov() / 2.0);
                items.push(draw::line(vec![p, p + d * 1.6], paint, true, 0.6));
            }
            items.push(Primitive::Circle {
                center: p,
                radius: AGENT_RADIUS,
                fill: paint,
                stroke: Paint::Ink,
            });
            let h = Vec2::from_angle(a.pose.heading());
            items.push(draw::arrow(p, p + h * (AGENT_RADIUS * 2.6), 0.14, paint));
        }
        Fragment::fitted(items, 0.03)
    }

    pub fn outputs(&self) -> Vec<(&'static str, String)> {
        let name = accent_name(self.agent.accent as usize).unwrap_or("marked");
        let count = view(&self.agent.pose, &self.placed()).len();
        vec![("TARGET", format!("{name} agent")), ("OBJECT_COUNT", count.to_string())]
    }

    /// The candidate lists exactly the objects a dense ray sweep from the marked agent hits.
    pub fn holds(&self, answer: &Answer) -> bool {
        match answer {
            Answer::Sequence { ids } => *ids == ray_cast_sequence(&self.agent.pose, &self.placed(), AUDIT_RAYS),
            _ => false,
        }
    }

    pub fn checks(&self, set: &CandidateSet, margins: &Margins) -> ValidationReport {
        let mut r = ValidationReport::default();
        let gap = gap_margin(margins);
        for (i, a) in self.objects.iter().enumerate() {
            for b in &self.objects[i + 1..] {
                if footprint_gap(&a.footprint, &b.footprint) < gap {
                    overlap_fail(&mut r, format!("objects {} and {} closer than {gap:.3}", a.id, b.id));
                }
            }
        }
        let pairs: BTreeSet<(ObjectKind, u8)> = self.objects.iter().map(|o| (o.kind, o.color)).collect();
        if pairs.len() != self.objects.len() {
            margin_fail(&mut r, "two objects share kind and colour");
        }
        let objects = self.placed();
        for a in std::iter::once(&self.agent).chain(&self.fakes) {
            for o in &self.objects {
                if o.footprint.distance_to_point(a.pose.position()) < AGENT_RADIUS + gap {
                    overlap_fail(&mut r, format!("agent overlaps object {}", o.id));
                }
            }
            if !robust(&a.pose, &objects, margins) {
                margin_fail(&mut r, "a view has a piece below the angular margin");
            }
        }
        let n_visible = view(&self.agent.pose, &objects).len();
        if n_visible < 2 {
            margin_fail(&mut r, "fewer than two objects visible");
        }
        let seqs: BTreeSet<&Vec<u32>> = set
            .candidates
            .iter()
            .filter_map(|c| match &c.answer {
                Answer::Sequence { ids } => Some(ids),
                _ => None,
            })
            .collect();
        if seqs.len() != set.candidates.len() {
            margin_fail(&mut r, "two candidates show the same order");
        }
        r
    }
}
