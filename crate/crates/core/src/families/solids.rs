//! Stepped voxel solids shared by the projection families.

use crate::geometry::{Mask, Projections, Vec3, VoxelGrid};
use crate::renderer::{Paint, Primitive};
use crate::rng::Stream;

use super::{draw, FamilyError};

/// Heights `h[y][x]` that never increase along +x or +y, with `h[0][0] = max_height`.
/// Seen from the (+x, +y, +z) corner, such a solid hides no voxel's top.
pub fn staircase(nx: usize, ny: usize, max_height: usize, s: &mut Stream) -> Vec<Vec<usize>> {
    let mut h = vec![vec![0usize; nx]; ny];
    for y in 0..ny {
        for x in 0..nx {
            let bound = match (x, y) {
                (0, 0) => {
                    h[0][0] = max_height;
                    continue;
                }
                (0, _) => h[y - 1][0],
                (_, 0) => h[0][x - 1],
                _ => h[y - 1][x].min(h[y][x - 1]),
            };
            h[y][x] = s.range_i64(0, bound as i64) as usize;
        }
    }
    h
}

/// Projections read straight off the height field.
pub fn column_projections(h: &[Vec<usize>], window: usize) -> Projections {
    let nx = h.first().map_or(0, Vec::len);
    let mut p = Projections {
        front: Mask::new(window, window),
        side: Mask::new(window, window),
        top: Mask::new(window, window),
    };
    let mut columns = vec![0; nx];
    for row in h {
        for (c, &v) in columns.iter_mut().zip(row) {
            *c = (*c).max(v);
        }
    }
    for (x, &tallest) in columns.iter().enumerate() {
        for z in 0..tallest {
            p.front.set(x, z, true);
        }
    }
    for (y, row) in h.iter().enumerate() {
        let tallest = row.iter().copied().max().unwrap_or(0);
        for z in 0..tallest {
            p.side.set(y, z, true);
        }
        for (x, &v) in row.iter().enumerate() {
            if v > 0 {
                p.top.set(x, y, true);
            }
        }
    }
    p
}

/// Copy a mask into a `window` x `window` frame.
pub fn padded(m: &Mask, window: usize) -> Mask {
    let mut out = Mask::new(window, window);
    for (u, v) in m.cells() {
        if u < window && v < window {
            out.set(u, v, true);
        }
    }
    out
}

/// Left-right reflection of the columns `0..width`.
pub fn mirror_within(m: &Mask, width: usize) -> Mask {
    let mut out = Mask::new(m.width(), m.height());
    for (u, v) in m.cells() {
        if u < width {
            out.set(width - 1 - u, v, true);
        }
    }
    out
}

/// Generator-side projections through the voxel grid, framed to `window`.
pub fn voxel_projections(h: &[Vec<usize>], window: usize) -> Result<Projections, FamilyError> {
    let p = crate::geometry::orthographic_projections(&grid(h)?)?;
    Ok(Projections {
        front: padded(&p.front, window),
        side: padded(&p.side, window),
        top: padded(&p.top, window),
    })
}

/// Masks with one cell moved to an empty 4-neighbour of the remaining cells.
pub fn one_cell_moves(m: &Mask) -> Vec<Mask> {
    let (w, h) = (m.width(), m.height());
    let on: Vec<(usize, usize)> = m.cells().collect();
    let mut out = Vec::new();
    for &(u0, v0) in &on {
        let mut base = m.clone();
        base.set(u0, v0, false);
        if base.count() == 0 {
            continue;
        }
        for v in 0..h {
            for u in 0..w {
                if base.get(u, v) || (u, v) == (u0, v0) {
                    continue;
                }
                let touches = [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)].iter().any(|&(du, dv)| {
                    let (a, b) = (u as i64 + du, v as i64 + dv);
                    a >= 0 && b >= 0 && base.get(a as usize, b as usize)
                });
                if touches {
                    let mut moved = base.clone();
                    moved.set(u, v, true);
                    out.push(moved);
                }
            }
        }
    }
    out
}

pub fn grid(h: &[Vec<usize>]) -> Result<VoxelGrid, FamilyError> {
    Ok(VoxelGrid::from_heights(h)?)
}

/// Isometric drawing of the solid in three shades.
pub fn solid_drawing(h: &[Vec<usize>], colors: [u8; 3]) -> Result<Vec<Primitive>, FamilyError> {
    let g = grid(h)?;
    Ok(draw::voxel_faces(
        &g,
        Paint::Palette(colors[0]),
        Paint::Palette(colors[1]),
        Paint::Palette(colors[2]),
    ))
}

/// Arrow between two world points, drawn in projection.
pub fn iso_arrow(from: Vec3, to: Vec3) -> Primitive {
    draw::arrow(draw::iso(from), draw::iso(to), 0.14, Paint::Accent(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::orthographic_projections;

    #[test]
    fn staircase_is_monotone_and_column_projections_match_voxels() {
        for seed in 0..200 {
            let mut s = Stream::new(seed);
            let (nx, ny, hm) = (2 + seed as usize % 4, 2 + (seed as usize / 4) % 4, 2 + seed as usize % 3);
            let h = staircase(nx, ny, hm, &mut s);
            for y in 0..ny {
                for x in 0..nx {
                    if x > 0 {
                        assert!(h[y][x] <= h[y][x - 1]);
                    }
                    if y > 0 {
                        assert!(h[y][x] <= h[y - 1][x]);
                    }
                }
            }
            let w = nx.max(ny).max(hm);
            let direct = column_projections(&h, w);
            let voxels = orthographic_projections(&grid(&h).unwrap()).unwrap();
            assert_eq!(direct.front, padded(&voxels.front, w));
            assert_eq!(direct.side, padded(&voxels.side, w));
            assert_eq!(direct.top, padded(&voxels.top, w));
        }
    }

    #[test]
    fn moves_keep_count_and_differ_by_two() {
        let mut m = Mask::new(3, 3);
        m.set(0, 0, true);
        m.set(1, 0, true);
        let moves = one_cell_moves(&m);
        assert!(!moves.is_empty());
        for mv in moves {
            assert_eq!(mv.count(), 2);
            assert_eq!(mv.hamming(&m), 2);
        }
    }
}
