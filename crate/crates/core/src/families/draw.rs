//! Shared drawing helpers for stimulus and candidate fragments.

use std::f64::consts::{FRAC_PI_6, TAU};

use crate::geometry::{Footprint, Mask, Vec2, Vec3, VoxelGrid};
use crate::renderer::{Fragment, Paint, Primitive};

pub fn polygon(points: Vec<Vec2>, fill: Paint) -> Primitive {
    Primitive::Polygon {
        points,
        fill,
        stroke: Paint::Ink,
    }
}

pub fn line(points: Vec<Vec2>, stroke: Paint, dashed: bool, weight: f64) -> Primitive {
    Primitive::Path {
        points,
        stroke,
        dashed,
        weight,
    }
}

pub fn footprint(fp: &Footprint, fill: Paint) -> Primitive {
    match *fp {
        Footprint::Circle { center, radius } => Primitive::Circle {
            center,
            radius,
            fill,
            stroke: Paint::Ink,
        },
        Footprint::Rect { .. } => polygon(fp.outline(0), fill),
    }
}

/// Filled arrow from `tail` to `tip`.
pub fn arrow(tail: Vec2, tip: Vec2, width: f64, fill: Paint) -> Primitive {
    let d = tip - tail;
    let len = d.norm();
    let u = d * (1.0 / len);
    let n = Vec2::new(-u.y, u.x);
    let head = (len * 0.4).min(width * 2.5);
    let neck = tip - u * head;
    polygon(
        vec![
            tail + n * (width * 0.5),
            neck + n * (width * 0.5),
            neck + n * (width * 1.2),
            tip,
            neck - n * (width * 1.2),
            neck - n * (width * 0.5),
            tail - n * (width * 0.5),
        ],
        fill,
    )
}

pub fn ellipse(center: Vec2, rx: f64, ry: f64, segments: usize) -> Vec<Vec2> {
    (0..segments)
        .map(|k| {
            let a = TAU * k as f64 / segments as f64;
            Vec2::new(center.x + rx * a.cos(), center.y + ry * a.sin())
        })
        .collect()
}

/// Unit cells of a mask as squares in a fixed `size`-cell window; `v` grows upwards.
pub fn mask_fragment(mask: &Mask, window: usize, fill: Paint) -> Fragment {
    let mut f = Fragment::new(Vec2::new(-0.3, -0.3), Vec2::new(window as f64 + 0.3, window as f64 + 0.3));
    for (u, v) in mask.cells() {
        f.push(cell(u as f64, v as f64, fill));
    }
    f
}

pub fn cell(x: f64, y: f64, fill: Paint) -> Primitive {
    Primitive::Rect {
        min: Vec2::new(x, y),
        size: Vec2::new(1.0, 1.0),
        fill,
        stroke: Paint::Ink,
    }
}

/// Isometric projection with +x to the lower right, +y to the lower left and +z up.
pub fn iso(p: Vec3) -> Vec2 {
    let (c, s) = (FRAC_PI_6.cos(), FRAC_PI_6.sin());
    Vec2::new((p.x - p.y) * c, p.z - (p.x + p.y) * s)
}

/// Visible faces of a voxel solid seen from the (+x, +y, +z) corner, far to near.
pub fn voxel_faces(grid: &VoxelGrid, top: Paint, left: Paint, right: Paint) -> Vec<Primitive> {
    let [nx, ny, nz] = grid.dims();
    let mut cubes: Vec<[usize; 3]> = grid.occupied().collect();
    cubes.sort_by_key(|&[x, y, z]| (x + y + z, z, x));
    let mut out = Vec::new();
    for [x, y, z] in cubes {
        let (fx, fy, fz) = (x as f64, y as f64, z as f64);
        let q = |dx: f64, dy: f64, dz: f64| iso(Vec3::new(fx + dx, fy + dy, fz + dz));
        if z + 1 >= nz || !grid.get(x, y, z + 1) {
            out.push(polygon(vec![q(0., 0., 1.), q(1., 0., 1.), q(1., 1., 1.), q(0., 1., 1.)], top));
        }
        if y + 1 >= ny || !grid.get(x, y + 1, z) {
            out.push(polygon(vec![q(0., 1., 0.), q(1., 1., 0.), q(1., 1., 1.), q(0., 1., 1.)], left));
        }
        if x + 1 >= nx || !grid.get(x + 1, y, z) {
            out.push(polygon(vec![q(1., 0., 0.), q(1., 1., 0.), q(1., 1., 1.), q(1., 0., 1.)], right));
        }
    }
    out
}
