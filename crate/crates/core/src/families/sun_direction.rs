//! Sun Direction: infer the light's compass direction from cast shadows on a turned map.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::draw;
use super::{margin_fail, overlap_fail, Answer, Candidate, CandidateSet, FamilyError, NearMissKind, ValidationReport};
use crate::geometry::shapes::{convex_hull, convex_polygons_intersect, footprint_gap, polygon_centroid};
use crate::geometry::{Footprint, RigidMotion, RigidMotion2, Vec2};
use crate::manifest::{Margins, ParamSample};
use crate::renderer::palette::PALETTE_SLOTS;
use crate::renderer::{Fragment, Paint, Primitive};
use crate::rng::Stream;

pub const COMPASS: [&str; 8] = ["N", "NE", "E", "SE", "S", "SW", "W", "NW"];
const WORLD: f64 = 8.0;
const HALF_ARENA: f64 = 2.6;
const OUTLINE_SEGMENTS: usize = 32;
const PLACEMENT_TRIES: usize = 60;
/// Tolerance on the recovered sun bearing, radians.
const BEARING_TOLERANCE: f64 = 1e-6;

/// Unit vector of compass point `k` (0 = north = +y, clockwise).
pub fn compass_dir(k: u8) -> Vec2 {
    let b = f64::from(k % 8) * PI / 4.0;
    Vec2::new(b.sin(), b.cos())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Caster {
    pub footprint: Footprint,
    pub height: f64,
    pub color: u8,
    /// Ground shadow under parallel rays, convex.
    pub shadow: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SunDirectionScene {
    pub casters: Vec<Caster>,
    /// Compass point of the sun.
    pub sun: u8,
    /// Counterclockwise map rotation in the stimulus, radians.
    pub tilt: f64,
}

fn shadow_of(fp: &Footprint, offset: Vec2) -> Vec<Vec2> {
    let base = fp.outline(OUTLINE_SEGMENTS);
    let moved = base.iter().map(|&p| p + offset);
    let all: Vec<Vec2> = base.iter().copied().chain(moved).collect();
    convex_hull(&all)
}

fn gap_margin(m: &Margins) -> f64 {
    m.gap_fraction * WORLD
}

pub fn generate(sample: &ParamSample, margins: &Margins, s: &mut Stream) -> Result<SunDirectionScene, FamilyError> {
    let count = sample.int("OBJECT_COUNT")? as usize;
    let tilt = sample.real("TILT_DEG")?.to_radians();
    let factor = sample.real("SHADOW_FACTOR")?;
    let sun = match sample.enum_value("AZIMUTH_SET")? {
        "cardinal" => 2 * s.split("sun").below(4) as u8,
        _ => s.split("sun").below(8) as u8,
    };
    let offset_dir = compass_dir(sun) * -1.0;
    let colors = s.split("colors").sample_indices(PALETTE_SLOTS, count);
    let mut place = s.split("placement");
    let mut casters: Vec<Caster> = Vec::new();
    for &color in &colors {
        let mut last = None;
        for _ in 0..PLACEMENT_TRIES {
            let center = Vec2::new(place.uniform(-HALF_ARENA, HALF_ARENA), place.uniform(-HALF_ARENA, HALF_ARENA));
            let fp = if place.chance(1, 2) {
                Footprint::Rect {
                    center,
                    half: Vec2::new(place.uniform(0.3, 0.7), place.uniform(0.3, 0.7)),
                    angle: place.uniform(-PI / 2.0, PI / 2.0),
                }
            } else {
                Footprint::Circle {
                    center,
                    radius: place.uniform(0.3, 0.6),
                }
            };
            let height = place.uniform(0.8, 1.4);
            let shadow = shadow_of(&fp, offset_dir * (height * factor));
            let c = Caster {
                footprint: fp,
                height,
                color: color as u8,
                shadow,
            };
            let clear = casters.iter().all(|o| separated(o, &c, gap_margin(margins)));
            last = Some(c);
            if clear {
                break;
            }
        }
        casters.push(last.expect("at least one placement try"));
    }
    Ok(SunDirectionScene { casters, sun, tilt })
}

fn separated(a: &Caster, b: &Caster, gap: f64) -> bool {
    footprint_gap(&a.footprint, &b.footprint) >= gap
        && !convex_polygons_intersect(&a.shadow, &b.shadow)
        && !convex_polygons_intersect(&a.shadow, &b.footprint.outline(OUTLINE_SEGMENTS))
        && !convex_polygons_intersect(&b.shadow, &a.footprint.outline(OUTLINE_SEGMENTS))
}

/// Compass point read back from the shadows alone, if it is unambiguous.
pub fn recovered_sun(casters: &[Caster]) -> Option<u8> {
    let mut sum = Vec2::ZERO;
    for c in casters {
        let d = polygon_centroid(&c.shadow) - polygon_centroid(&c.footprint.outline(OUTLINE_SEGMENTS));
        if d.norm() < 1e-9 {
            return None;
        }
        sum += d.normalized();
    }
    if sum.norm() < 1e-9 {
        return None;
    }
    let sun = sum * -1.0;
    let bearing = sun.x.atan2(sun.y).rem_euclid(2.0 * PI);
    let k = (bearing / (PI / 4.0)).round();
    ((bearing - k * PI / 4.0).abs() < BEARING_TOLERANCE).then_some((k as u8) % 8)
}

impl SunDirectionScene {
    pub fn candidates(&self, n: usize, s: &mut Stream) -> Result<Vec<Candidate>, FamilyError> {
        if !(2..=8).contains(&n) {
            return Err(FamilyError::Distractors(format!("{n} compass candidates requested")));
        }
        let opposite = (self.sun + 4) % 8;
        let mut others: Vec<u8> = (0..8).filter(|&k| k != self.sun && k != opposite).collect();
        s.shuffle(&mut others);
        let mut points = vec![(self.sun, None), (opposite, Some(NearMissKind::Mirror))];
        points.extend(others.into_iter().map(|k| (k, Some(NearMissKind::MisalignedParallel))));
        points.truncate(n);
        Ok(points
            .into_iter()
            .map(|(k, kind)| Candidate {
                answer: Answer::Compass { point: k },
                fragment: compass_card(k),
                kind,
            })
            .collect())
    }

    pub fn stimulus(&self) -> Fragment {
        let turn = RigidMotion2::rotation(self.tilt);
        let mut items = Vec::new();
        for c in &self.casters {
            let shadow = c.shadow.iter().map(|&p| turn.apply(p)).collect();
            items.push(Primitive::Polygon {
                points: shadow,
                fill: Paint::Shade,
                stroke: Paint::None,
            });
        }
        for c in &self.casters {
            items.push(draw::footprint(&c.footprint.transformed(&turn), Paint::Palette(c.color)));
        }
        // north arrow in the upper left corner
        let base = Vec2::new(-WORLD / 2.0 + 0.6, WORLD / 2.0 - 0.6);
        let north = turn.apply(Vec2::new(0.0, 0.45)) - turn.apply(Vec2::ZERO);
        items.push(draw::arrow(base - north, base + north, 0.12, Paint::Ink));
        items.push(Primitive::Circle {
            center: base + north * 1.35,
            radius: 0.08,
            fill: Paint::Ink,
            stroke: Paint::None,
        });
        let h = WORLD / 2.0;
        Fragment {
            view_min: Vec2::new(-h, -h),
            view_max: Vec2::new(h, h),
            items,
        }
    }

    pub fn outputs(&self) -> Vec<(&'static str, String)> {
        vec![("OBJECT_COUNT", self.casters.len().to_string())]
    }

    pub fn holds(&self, answer: &Answer) -> bool {
        match answer {
            Answer::Compass { point } => recovered_sun(&self.casters) == Some(*point),
            _ => false,
        }
    }

    pub fn checks(&self, set: &CandidateSet, margins: &Margins) -> ValidationReport {
        let mut r = ValidationReport::default();
        let gap = gap_margin(margins);
        for (i, a) in self.casters.iter().enumerate() {
            for b in &self.casters[i + 1..] {
                if !separated(a, b, gap) {
                    overlap_fail(&mut r, "objects or shadows touch");
                }
            }
            let h = WORLD / 2.0 - 0.1;
            if a.shadow.iter().any(|p| p.x.abs() > h || p.y.abs() > h) {
                overlap_fail(&mut r, "shadow leaves the map");
            }
        }
        let points: Vec<u8> = set
            .candidates
            .iter()
            .filter_map(|c| match c.answer {
                Answer::Compass { point } => Some(point),
                _ => None,
            })
            .collect();
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                let sep = (f64::from((*a as i32 - *b as i32).rem_euclid(8).min((*b as i32 - *a as i32).rem_euclid(8))))
                    * 45.0;
                if sep < margins.angle_deg {
                    margin_fail(&mut r, format!("arrows {a} and {b} are closer than the angular margin"));
                }
            }
        }
        r
    }
}

/// North-up card with an arrow toward compass point `k` and a north tick.
fn compass_card(k: u8) -> Fragment {
    let d = compass_dir(k);
    let mut f = Fragment::new(Vec2::new(-1.3, -1.3), Vec2::new(1.3, 1.3));
    f.push(Primitive::Polygon {
        points: vec![Vec2::new(-0.12, 1.05), Vec2::new(0.12, 1.05), Vec2::new(0.0, 1.25)],
        fill: Paint::Ink,
        stroke: Paint::None,
    });
    f.push(draw::arrow(d * -0.8, d * 0.8, 0.16, Paint::Ink));
    f
}
