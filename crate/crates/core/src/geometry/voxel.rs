//! Bounded voxel grids and their axis-aligned silhouettes.

use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Largest extent along any axis.
pub const MAX_DIM: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VoxelGrid {
    dims: [usize; 3],
    cells: Vec<bool>,
}

impl VoxelGrid {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self, GeometryError> {
        for d in [nx, ny, nz] {
            if d == 0 || d > MAX_DIM {
                return Err(GeometryError::Precondition("voxel dims must lie in 1..=16"));
            }
        }
        Ok(Self {
            dims: [nx, ny, nz],
            cells: vec![false; nx * ny * nz],
        })
    }

    /// Solid of stacked columns: column `(x, y)` is filled from `z = 0` to `heights[y][x] - 1`.
    pub fn from_heights(heights: &[Vec<usize>]) -> Result<Self, GeometryError> {
        let ny = heights.len();
        let nx = heights.first().map_or(0, Vec::len);
        let nz = heights.iter().flatten().copied().max().unwrap_or(0).max(1);
        if heights.iter().any(|r| r.len() != nx) {
            return Err(GeometryError::Precondition("height rows must have equal length"));
        }
        let mut g = Self::new(nx, ny, nz)?;
        for (y, row) in heights.iter().enumerate() {
            for (x, &h) in row.iter().enumerate() {
                for z in 0..h {
                    g.set(x, y, z, true);
                }
            }
        }
        Ok(g)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    fn idx(&self, x: usize, y: usize, z: usize) -> usize {
        debug_assert!(x < self.dims[0] && y < self.dims[1] && z < self.dims[2]);
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.cells[self.idx(x, y, z)]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, v: bool) {
        let i = self.idx(x, y, z);
        self.cells[i] = v;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn occupied(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let [nx, ny, _] = self.dims;
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(move |(i, _)| [i % nx, (i / nx) % ny, i / (nx * ny)])
    }

    /// Column heights `heights[y][x]` (top occupied z + 1, 0 for empty columns).
    pub fn heights(&self) -> Vec<Vec<usize>> {
        let [nx, ny, nz] = self.dims;
        (0..ny)
            .map(|y| (0..nx).map(|x| (0..nz).rev().find(|&z| self.get(x, y, z)).map_or(0, |z| z + 1)).collect())
            .collect()
    }
}

/// A boolean silhouette; `u` runs along columns, `v` along rows.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, u: usize, v: usize) -> bool {
        u < self.width && v < self.height && self.bits[u + self.width * v]
    }

    pub fn set(&mut self, u: usize, v: usize, on: bool) {
        self.bits[u + self.width * v] = on;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.height).flat_map(move |v| (0..self.width).filter(move |&u| self.get(u, v)).map(move |u| (u, v)))
    }

    /// Number of differing cells over the union of both extents (absent cells are off).
    pub fn hamming(&self, other: &Mask) -> usize {
        let w = self.width.max(other.width);
        let h = self.height.max(other.height);
        (0..h)
            .flat_map(|v| (0..w).map(move |u| (u, v)))
            .filter(|&(u, v)| self.get(u, v) != other.get(u, v))
            .count()
    }

    /// Left-right reflection.
    pub fn mirrored(&self) -> Mask {
        let mut out = Mask::new(self.width, self.height);
        for (u, v) in self.cells() {
            out.set(self.width - 1 - u, v, true);
        }
        out
    }
}

/// Front looks along +y (mask over x, z); side looks along +x (mask over y, z);
/// top looks down z (mask over x, y).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Projections {
    pub front: Mask,
    pub side: Mask,
    pub top: Mask,
}

pub fn orthographic_projections(grid: &VoxelGrid) -> Result<Projections, GeometryError> {
    if grid.is_empty() {
        return Err(GeometryError::Precondition("empty voxel grid"));
    }
    let [nx, ny, nz] = grid.dims;
    let mut p = Projections {
        front: Mask::new(nx, nz),
        side: Mask::new(ny, nz),
        top: Mask::new(nx, ny),
    };
    for [x, y, z] in grid.occupied() {
        p.front.set(x, z, true);
        p.side.set(y, z, true);
        p.top.set(x, y, true);
    }
    Ok(p)
}
