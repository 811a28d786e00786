//! Planar footprints and convex-polygon utilities.

use serde::{Deserialize, Serialize};

use super::motion::{RigidMotion, RigidMotion2};
use super::vector::{wrap_angle, Vec2};

/// An opaque convex footprint on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Footprint {
    /// Rectangle with half-extents `half` in its own frame, turned `angle` radians.
    Rect {
        center: Vec2,
        half: Vec2,
        #[serde(default)]
        angle: f64,
    },
    Circle { center: Vec2, radius: f64 },
}

impl Footprint {
    pub fn center(&self) -> Vec2 {
        match *self {
            Footprint::Rect { center, .. } | Footprint::Circle { center, .. } => center,
        }
    }

    pub fn transformed(&self, m: &RigidMotion2) -> Footprint {
        match *self {
            Footprint::Rect { center, half, angle } => Footprint::Rect {
                center: m.apply(center),
                half,
                angle: wrap_angle(angle + m.angle),
            },
            Footprint::Circle { center, radius } => Footprint::Circle {
                center: m.apply(center),
                radius,
            },
        }
    }

    /// Radius of the smallest enclosing circle about the center.
    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Footprint::Rect { half, .. } => half.norm(),
            Footprint::Circle { radius, .. } => radius,
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        match *self {
            Footprint::Rect { center, half, angle } => {
                let q = (p - center).rotated(-angle);
                q.x.abs() <= half.x && q.y.abs() <= half.y
            }
            Footprint::Circle { center, radius } => p.distance(center) <= radius,
        }
    }

    /// Distance from a point to the footprint (0 inside).
    pub fn distance_to_point(&self, p: Vec2) -> f64 {
        match *self {
            Footprint::Rect { center, half, angle } => {
                let q = (p - center).rotated(-angle);
                let dx = (q.x.abs() - half.x).max(0.0);
                let dy = (q.y.abs() - half.y).max(0.0);
                dx.hypot(dy)
            }
            Footprint::Circle { center, radius } => (p.distance(center) - radius).max(0.0),
        }
    }

    /// Boundary approximated by a convex polygon (counterclockwise).
    pub fn outline(&self, circle_segments: usize) -> Vec<Vec2> {
        match *self {
            Footprint::Rect { center, half, angle } => [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
                .into_iter()
                .map(|(sx, sy)| center + Vec2::new(sx * half.x, sy * half.y).rotated(angle))
                .collect(),
            Footprint::Circle { center, radius } => (0..circle_segments)
                .map(|i| center + Vec2::from_angle(std::f64::consts::TAU * i as f64 / circle_segments as f64) * radius)
                .collect(),
        }
    }

    /// Nearest non-negative parameter `t` where `origin + t * dir` enters the footprint.
    /// `dir` need not be normalized; `t` is in units of `dir`.
    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        match *self {
            Footprint::Circle { center, radius } => {
                let oc = origin - center;
                let a = dir.dot(dir);
                let b = 2.0 * oc.dot(dir);
                let c = oc.dot(oc) - radius * radius;
                let disc = b * b - 4.0 * a * c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                let t0 = (-b - sq) / (2.0 * a);
                let t1 = (-b + sq) / (2.0 * a);
                if t1 < 0.0 {
                    None
                } else {
                    Some(t0.max(0.0))
                }
            }
            Footprint::Rect { center, half, angle } => {
                let origin = (origin - center).rotated(-angle);
                let dir = dir.rotated(-angle);
                let (lo, hi) = (-half, half);
                let mut tmin = f64::NEG_INFINITY;
                let mut tmax = f64::INFINITY;
                for (o, d, l, h) in [(origin.x, dir.x, lo.x, hi.x), (origin.y, dir.y, lo.y, hi.y)] {
                    if d.abs() < 1e-300 {
                        if o < l || o > h {
                            return None;
                        }
                    } else {
                        let (mut t1, mut t2) = ((l - o) / d, (h - o) / d);
                        if t1 > t2 {
                            std::mem::swap(&mut t1, &mut t2);
                        }
                        tmin = tmin.max(t1);
                        tmax = tmax.min(t2);
                    }
                }
                if tmax < tmin || tmax < 0.0 {
                    None
                } else {
                    Some(tmin.max(0.0))
                }
            }
        }
    }
}

/// Euclidean gap between two footprints; 0 when they touch or overlap.
pub fn footprint_gap(a: &Footprint, b: &Footprint) -> f64 {
    match (*a, *b) {
        (Footprint::Circle { center: c1, radius: r1 }, Footprint::Circle { center: c2, radius: r2 }) => {
            (c1.distance(c2) - r1 - r2).max(0.0)
        }
        (Footprint::Rect { .. }, Footprint::Rect { .. }) => {
            let (pa, pb) = (a.outline(0), b.outline(0));
            if convex_polygons_intersect(&pa, &pb) {
                return 0.0;
            }
            let vertex_edge = |ps: &[Vec2], qs: &[Vec2]| {
                ps.iter()
                    .flat_map(|&p| (0..qs.len()).map(move |i| point_segment_distance(p, qs[i], qs[(i + 1) % qs.len()])))
                    .fold(f64::INFINITY, f64::min)
            };
            vertex_edge(&pa, &pb).min(vertex_edge(&pb, &pa))
        }
        (rect @ Footprint::Rect { .. }, Footprint::Circle { center, radius })
        | (Footprint::Circle { center, radius }, rect @ Footprint::Rect { .. }) => {
            (rect.distance_to_point(center) - radius).max(0.0)
        }
    }
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Convex hull (Andrew's monotone chain), counterclockwise, no repeated endpoint.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| (a.x - b.x).abs() < 1e-12 && (a.y - b.y).abs() < 1e-12);
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Vec2> = Vec::with_capacity(pts.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vec2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                if (b - a).cross(p - a) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Area-weighted centroid of a simple polygon.
pub fn polygon_centroid(poly: &[Vec2]) -> Vec2 {
    let mut area = 0.0;
    let mut c = Vec2::ZERO;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let cr = a.cross(b);
        area += cr;
        c += (a + b) * cr;
    }
    if area.abs() < 1e-15 {
        let n = poly.len().max(1) as f64;
        return poly.iter().fold(Vec2::ZERO, |acc, &p| acc + p) * (1.0 / n);
    }
    c * (1.0 / (3.0 * area))
}

pub fn polygon_area(poly: &[Vec2]) -> f64 {
    (0..poly.len())
        .map(|i| poly[i].cross(poly[(i + 1) % poly.len()]))
        .sum::<f64>()
        * 0.5
}

/// Separating-axis test for two convex polygons. Touching counts as intersecting.
pub fn convex_polygons_intersect(a: &[Vec2], b: &[Vec2]) -> bool {
    for poly in [a, b] {
        for i in 0..poly.len() {
            let e = poly[(i + 1) % poly.len()] - poly[i];
            let axis = Vec2::new(-e.y, e.x);
            let (amin, amax) = project(a, axis);
            let (bmin, bmax) = project(b, axis);
            if amax < bmin || bmax < amin {
                return false;
            }
        }
    }
    true
}

fn project(poly: &[Vec2], axis: Vec2) -> (f64, f64) {
    poly.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let d = p.dot(axis);
        (lo.min(d), hi.max(d))
    })
}

/// The horizontal extent `[min_x, max_x]` of a polygon's boundary crossings at height `y`.
pub fn horizontal_slice(poly: &[Vec2], y: f64) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (ymin, ymax) = (a.y.min(b.y), a.y.max(b.y));
        if y < ymin || y > ymax {
            continue;
        }
        if (b.y - a.y).abs() < 1e-15 {
            lo = lo.min(a.x.min(b.x));
            hi = hi.max(a.x.max(b.x));
        } else {
            let t = (y - a.y) / (b.y - a.y);
            let x = a.x + t * (b.x - a.x);
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    (lo <= hi).then_some((lo, hi))
}
