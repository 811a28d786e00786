//! Egocentric visibility of opaque footprints from a planar agent.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::shapes::Footprint;
use super::vector::{wrap_angle, Vec2};
use super::GeometryError;
use super::motion::{RigidMotion, RigidMotion2};

/// Angular pieces narrower than this are treated as hidden.
pub const MIN_VISIBLE_WIDTH: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPose")]
pub struct AgentPose {
    position: Vec2,
    heading: f64,
    fov: f64,
}

#[derive(Deserialize)]
struct RawPose {
    position: Vec2,
    heading: f64,
    fov: f64,
}

impl TryFrom<RawPose> for AgentPose {
    type Error = GeometryError;
    fn try_from(r: RawPose) -> Result<Self, Self::Error> {
        AgentPose::new(r.position, r.heading, r.fov)
    }
}

impl AgentPose {
    /// `heading` and `fov` in radians; requires `0 < fov < pi`.
    pub fn new(position: Vec2, heading: f64, fov: f64) -> Result<Self, GeometryError> {
        if !position.is_finite() || !heading.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if !(fov > 0.0 && fov < std::f64::consts::PI) {
            return Err(GeometryError::Precondition("field of view must lie in (0, pi)"));
        }
        Ok(Self {
            position,
            heading: wrap_angle(heading),
            fov,
        })
    }

    pub fn position(&self) -> Vec2 {
        self.position
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    pub fn fov(&self) -> f64 {
        self.fov
    }

    pub fn transformed(&self, m: &RigidMotion2) -> AgentPose {
        AgentPose {
            position: m.apply(self.position),
            heading: wrap_angle(self.heading + m.angle),
            fov: self.fov,
        }
    }

    /// Bearing of a world point relative to the heading, in `(-pi, pi]`; positive is left.
    pub fn bearing(&self, p: Vec2) -> f64 {
        wrap_angle((p - self.position).angle() - self.heading)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacedObject {
    pub id: u32,
    pub footprint: Footprint,
}

/// One object as seen by the agent. Angles are relative to the heading (left positive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibleObject {
    pub id: u32,
    /// Leftmost visible angle.
    pub left: f64,
    /// Rightmost visible angle.
    pub right: f64,
    /// Total unoccluded angular width.
    pub visible_width: f64,
    /// Narrowest unoccluded piece.
    pub min_piece: f64,
    pub distance: f64,
}

type Interval = (f64, f64);

/// Angular extent `(lo, hi)` of a footprint in the agent frame, unclipped. `None` if the
/// agent stands inside it.
fn angular_extent(agent: &AgentPose, fp: &Footprint) -> Option<Interval> {
    let p = agent.position;
    if fp.contains(p) {
        return None;
    }
    let c = fp.center();
    let base = (c - p).angle();
    let b = wrap_angle(base - agent.heading);
    match *fp {
        Footprint::Circle { radius, .. } => {
            let h = (radius / c.distance(p)).min(1.0).asin();
            Some((b - h, b + h))
        }
        Footprint::Rect { .. } => {
            let (lo, hi) = fp
                .outline(0)
                .into_iter()
                .map(|q| wrap_angle((q - p).angle() - base))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
            Some((b + lo, b + hi))
        }
    }
}

fn clip_to_fov(extent: Interval, fov: f64) -> Option<Interval> {
    let half = fov / 2.0;
    (-1..=1).find_map(|k| {
        let shift = TAU * k as f64;
        let lo = (extent.0 + shift).max(-half);
        let hi = (extent.1 + shift).min(half);
        (hi > lo).then_some((lo, hi))
    })
}

fn subtract(pieces: Vec<Interval>, cut: Interval) -> Vec<Interval> {
    let mut out = Vec::with_capacity(pieces.len() + 1);
    for (lo, hi) in pieces {
        if cut.1 <= lo || cut.0 >= hi {
            out.push((lo, hi));
            continue;
        }
        if cut.0 > lo {
            out.push((lo, cut.0));
        }
        if cut.1 < hi {
            out.push((cut.1, hi));
        }
    }
    out
}

/// Every object with an unoccluded angular piece inside the field of view, ordered left
/// to right by leftmost visible angle (ties by id).
pub fn view(agent: &AgentPose, objects: &[PlacedObject]) -> Vec<VisibleObject> {
    let clipped: Vec<Option<Interval>> = objects
        .iter()
        .map(|o| angular_extent(agent, &o.footprint).and_then(|e| clip_to_fov(e, agent.fov)))
        .collect();
    let mut out = Vec::new();
    for (i, obj) in objects.iter().enumerate() {
        let Some(own) = clipped[i] else { continue };
        let mut pieces = vec![own];
        for (j, other) in objects.iter().enumerate() {
            let Some(theirs) = clipped[j] else { continue };
            if i == j {
                continue;
            }
            let (lo, hi) = (own.0.max(theirs.0), own.1.min(theirs.1));
            if hi <= lo {
                continue;
            }
            // depth order is constant over the shared sector of two disjoint convex shapes
            let dir = Vec2::from_angle(agent.heading + 0.5 * (lo + hi));
            let ti = obj.footprint.ray_hit(agent.position, dir);
            let tj = other.footprint.ray_hit(agent.position, dir);
            if let (Some(ti), Some(tj)) = (ti, tj) {
                if tj < ti {
                    pieces = subtract(pieces, theirs);
                }
            }
        }
        pieces.retain(|&(lo, hi)| hi - lo > MIN_VISIBLE_WIDTH);
        if pieces.is_empty() {
            continue;
        }
        out.push(VisibleObject {
            id: obj.id,
            left: pieces.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
            right: pieces.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
            visible_width: pieces.iter().map(|p| p.1 - p.0).sum(),
            min_piece: pieces.iter().map(|p| p.1 - p.0).fold(f64::INFINITY, f64::min),
            distance: obj.footprint.distance_to_point(agent.position),
        });
    }
    out.sort_by(|a, b| b.left.total_cmp(&a.left).then(a.id.cmp(&b.id)));
    out
}

pub fn visible_sequence(agent: &AgentPose, objects: &[PlacedObject]) -> Vec<u32> {
    view(agent, objects).into_iter().map(|v| v.id).collect()
}

/// Sweep `rays` evenly spaced rays from the left edge of the field of view to the right and
/// record the id of the first object hit by each, in order of first appearance.
pub fn ray_cast_sequence(agent: &AgentPose, objects: &[PlacedObject], rays: usize) -> Vec<u32> {
    let half = agent.fov / 2.0;
    let mut seen = Vec::new();
    for k in 0..rays {
        let a = half - (k as f64 + 0.5) * agent.fov / rays as f64;
        let dir = Vec2::from_angle(agent.heading + a);
        let hit = objects
            .iter()
            .filter_map(|o| o.footprint.ray_hit(agent.position, dir).map(|t| (t, o.id)))
            .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        if let Some((_, id)) = hit {
            if !seen.contains(&id) {
                seen.push(id);
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes::footprint_gap;
    use crate::rng::Stream;

    const FOV: f64 = std::f64::consts::FRAC_PI_2;

    fn circle(id: u32, x: f64, y: f64, r: f64) -> PlacedObject {
        PlacedObject {
            id,
            footprint: Footprint::Circle {
                center: Vec2::new(x, y),
                radius: r,
            },
        }
    }

    fn origin_agent() -> AgentPose {
        AgentPose::new(Vec2::ZERO, 0.0, FOV).unwrap()
    }

    #[test]
    fn pose_requires_valid_fov() {
        assert!(AgentPose::new(Vec2::ZERO, 0.0, 0.0).is_err());
        assert!(AgentPose::new(Vec2::ZERO, 0.0, std::f64::consts::PI).is_err());
    }

    #[test]
    fn front_and_behind() {
        let a = origin_agent();
        assert_eq!(visible_sequence(&a, &[circle(7, 2.0, 0.0, 0.3)]), vec![7]);
        assert!(visible_sequence(&a, &[circle(7, -2.0, 0.0, 0.3)]).is_empty());
    }

    #[test]
    fn collinear_objects_nearer_occludes() {
        let a = origin_agent();
        let objs = [circle(1, 5.0, 0.0, 0.3), circle(2, 2.0, 0.0, 0.5)];
        // analytic: far disc subtends asin(0.3/5) < asin(0.5/2)
        assert!((0.3f64 / 5.0).asin() < (0.5f64 / 2.0).asin());
        assert_eq!(visible_sequence(&a, &objs), vec![2]);
    }

    #[test]
    fn left_to_right_is_descending_bearing() {
        let a = origin_agent();
        let objs = [circle(1, 3.0, -1.0, 0.2), circle(2, 3.0, 1.0, 0.2), circle(3, 3.0, 0.0, 0.2)];
        assert_eq!(visible_sequence(&a, &objs), vec![2, 3, 1]);
    }

    fn random_scene(s: &mut Stream) -> Option<(AgentPose, Vec<PlacedObject>)> {
        let n = 2 + s.index(5);
        let mut objs: Vec<PlacedObject> = Vec::new();
        while objs.len() < n {
            let c = Vec2::new(s.uniform(-3.0, 3.0), s.uniform(-3.0, 3.0));
            let fp = if s.chance(1, 2) {
                Footprint::Circle {
                    center: c,
                    radius: s.uniform(0.2, 0.6),
                }
            } else {
                Footprint::Rect {
                    center: c,
                    half: Vec2::new(s.uniform(0.15, 0.6), s.uniform(0.15, 0.6)),
                    angle: s.uniform(-3.1, 3.1),
                }
            };
            if objs.iter().all(|o| footprint_gap(&o.footprint, &fp) > 0.05) {
                objs.push(PlacedObject {
                    id: objs.len() as u32,
                    footprint: fp,
                });
            }
        }
        let pos = Vec2::from_angle(s.uniform(0.0, TAU)) * s.uniform(4.0, 5.0);
        let heading = (-pos).angle() + s.uniform(-0.4, 0.4);
        let agent = AgentPose::new(pos, heading, FOV).ok()?;
        if objs.iter().any(|o| o.footprint.distance_to_point(pos) < 0.3) {
            return None;
        }
        Some((agent, objs))
    }

    /// Scenes where every visible piece is wide enough for a 4096-ray sweep to resolve.
    fn resolvable(agent: &AgentPose, objs: &[PlacedObject]) -> bool {
        let spacing = agent.fov / 4096.0;
        view(agent, objs).iter().all(|v| v.min_piece > 8.0 * spacing)
            && sliver_free(agent, objs, 8.0 * spacing)
    }

    /// No object is hidden or clipped by less than `margin`: perturbing each occluder's
    /// cut by the margin must not change which objects are visible.
    fn sliver_free(agent: &AgentPose, objs: &[PlacedObject], margin: f64) -> bool {
        let widen = |a: &AgentPose, d: f64| AgentPose::new(a.position, a.heading, a.fov + d).unwrap();
        visible_sequence(&widen(agent, margin), objs).len() == visible_sequence(agent, objs).len()
            && visible_sequence(&widen(agent, -margin), objs).len() == visible_sequence(agent, objs).len()
    }

    #[test]
    fn agrees_with_dense_ray_casting() {
        let mut s = Stream::new(404);
        let mut checked = 0;
        while checked < 300 {
            let Some((agent, objs)) = random_scene(&mut s) else { continue };
            if !resolvable(&agent, &objs) {
                continue;
            }
            assert_eq!(visible_sequence(&agent, &objs), ray_cast_sequence(&agent, &objs, 4096), "{objs:?}");
            checked += 1;
        }
    }

    #[test]
    fn invariant_under_shared_rigid_motion() {
        let mut s = Stream::new(505);
        let mut checked = 0;
        while checked < 1000 {
            let Some((agent, objs)) = random_scene(&mut s) else { continue };
            if !resolvable(&agent, &objs) {
                continue;
            }
            let m = RigidMotion2::new(s.uniform(-3.2, 3.2), Vec2::new(s.uniform(-9.0, 9.0), s.uniform(-9.0, 9.0)));
            let moved: Vec<PlacedObject> = objs
                .iter()
                .map(|o| PlacedObject {
                    id: o.id,
                    footprint: o.footprint.transformed(&m),
                })
                .collect();
            assert_eq!(visible_sequence(&agent, &objs), visible_sequence(&agent.transformed(&m), &moved));
            checked += 1;
        }
    }
}
