//! Cube nets, folding by rolling, and face colourings up to rotation.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::polyomino::{Cell, Polyomino};
use super::GeometryError;

/// Integer rotation of the cube body: a signed permutation matrix with determinant +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CubeRotation(pub [[i8; 3]; 3]);

impl CubeRotation {
    pub const IDENTITY: CubeRotation = CubeRotation([[1, 0, 0], [0, 1, 0], [0, 0, 1]]);

    pub fn apply(&self, v: [i8; 3]) -> [i8; 3] {
        let m = &self.0;
        [0, 1, 2].map(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2])
    }

    pub fn then_after(&self, other: &CubeRotation) -> CubeRotation {
        let (a, b) = (&self.0, &other.0);
        let mut out = [[0i8; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        CubeRotation(out)
    }

    pub fn transpose(&self) -> CubeRotation {
        let m = &self.0;
        CubeRotation([0, 1, 2].map(|i| [m[0][i], m[1][i], m[2][i]]))
    }

    pub fn determinant(&self) -> i32 {
        let m = self.0.map(|r| r.map(i32::from));
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// The 24 proper rotations of the cube.
    pub fn all() -> Vec<CubeRotation> {
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut out = Vec::with_capacity(24);
        for p in PERMS {
            for signs in 0..8u8 {
                let mut m = [[0i8; 3]; 3];
                for (row, &col) in p.iter().enumerate() {
                    m[row][col] = if signs >> row & 1 == 1 { -1 } else { 1 };
                }
                let r = CubeRotation(m);
                if r.determinant() == 1 {
                    out.push(r);
                }
            }
        }
        out
    }

    /// The rotation applied when the cube rolls one cell in lattice direction `(dx, dy)`.
    fn roll(dx: i32, dy: i32) -> CubeRotation {
        match (dx, dy) {
            // +x face goes down: x' = z, z' = -x
            (1, 0) => CubeRotation([[0, 0, 1], [0, 1, 0], [-1, 0, 0]]),
            (-1, 0) => CubeRotation([[0, 0, -1], [0, 1, 0], [1, 0, 0]]),
            (0, 1) => CubeRotation([[1, 0, 0], [0, 0, 1], [0, -1, 0]]),
            (0, -1) => CubeRotation([[1, 0, 0], [0, 0, -1], [0, 1, 0]]),
            _ => unreachable!("roll direction must be a unit lattice step"),
        }
    }
}

/// A face of the cube body, by outward normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Face {
    PosX,
    NegX,
    PosY,
    NegY,
    PosZ,
    NegZ,
}

impl Face {
    pub const ALL: [Face; 6] = [Face::PosX, Face::NegX, Face::PosY, Face::NegY, Face::PosZ, Face::NegZ];

    pub fn normal(self) -> [i8; 3] {
        match self {
            Face::PosX => [1, 0, 0],
            Face::NegX => [-1, 0, 0],
            Face::PosY => [0, 1, 0],
            Face::NegY => [0, -1, 0],
            Face::PosZ => [0, 0, 1],
            Face::NegZ => [0, 0, -1],
        }
    }

    pub fn from_normal(n: [i8; 3]) -> Option<Face> {
        Face::ALL.into_iter().find(|f| f.normal() == n)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// A hexomino whose cells carry face labels, in the plane of the net.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeNet {
    cells: Vec<Cell>,
    labels: Vec<u32>,
}

impl CubeNet {
    pub fn new(cells: Vec<Cell>, labels: Vec<u32>) -> Result<Self, GeometryError> {
        if cells.len() != 6 || labels.len() != 6 {
            return Err(GeometryError::Precondition("cube net needs exactly six labelled cells"));
        }
        let shape = Polyomino::new(cells.iter().copied())?;
        if shape.len() != 6 {
            return Err(GeometryError::Precondition("cube net cells must be distinct"));
        }
        Ok(Self { cells, labels })
    }

    /// Net over a polyomino's cells in their stored order.
    pub fn from_shape(shape: &Polyomino, labels: Vec<u32>) -> Result<Self, GeometryError> {
        Self::new(shape.cells().to_vec(), labels)
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn shape(&self) -> Polyomino {
        Polyomino::new(self.cells.iter().copied()).expect("validated at construction")
    }

    /// Mirror image of the net (x -> -x), labels carried along.
    pub fn mirrored(&self) -> CubeNet {
        CubeNet {
            cells: self.cells.iter().map(|&(x, y)| (-x, y)).collect(),
            labels: self.labels.clone(),
        }
    }

    /// Same cells with labels at positions `i` and `j` exchanged.
    pub fn with_swapped_labels(&self, i: usize, j: usize) -> CubeNet {
        let mut labels = self.labels.clone();
        labels.swap(i, j);
        CubeNet {
            cells: self.cells.clone(),
            labels,
        }
    }
}

/// A folded cube: per body face, the label and the body direction of the net's +y axis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledCube {
    faces: [(u32, [i8; 3]); 6],
}

impl LabeledCube {
    pub fn label(&self, face: Face) -> u32 {
        self.faces[face.index()].0
    }

    pub fn up(&self, face: Face) -> [i8; 3] {
        self.faces[face.index()].1
    }

    /// This cube after a body rotation.
    pub fn rotated(&self, r: &CubeRotation) -> LabeledCube {
        let mut faces = self.faces;
        for f in Face::ALL {
            let to = Face::from_normal(r.apply(f.normal())).expect("rotation maps faces to faces");
            faces[to.index()] = (self.label(f), r.apply(self.up(f)));
        }
        LabeledCube { faces }
    }

    /// Whether some rotation maps this cube's labels onto `other`'s.
    /// With `oriented`, the per-face up directions must match too.
    pub fn same_coloring(&self, other: &LabeledCube, oriented: bool) -> bool {
        CubeRotation::all().iter().any(|r| {
            let m = self.rotated(r);
            Face::ALL
                .iter()
                .all(|&f| m.label(f) == other.label(f) && (!oriented || m.up(f) == other.up(f)))
        })
    }
}

/// Fold a net by rolling a cube across its cells. Returns `None` when two cells land on
/// the same face or when some pair of adjacent cells would not share a cube edge.
pub fn fold_net(net: &CubeNet) -> Option<LabeledCube> {
    let index: HashMap<Cell, usize> = net.cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut placed: Vec<Option<CubeRotation>> = vec![None; 6];
    placed[0] = Some(CubeRotation::IDENTITY);
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        let ru = placed[u].expect("queued cells are placed");
        let (x, y) = net.cells[u];
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let Some(&v) = index.get(&(x + dx, y + dy)) else {
                continue;
            };
            let rv = CubeRotation::roll(dx, dy).then_after(&ru);
            match placed[v] {
                None => {
                    placed[v] = Some(rv);
                    queue.push_back(v);
                }
                Some(existing) if existing != rv => return None,
                Some(_) => {}
            }
        }
    }
    let mut faces: [Option<(u32, [i8; 3])>; 6] = [None; 6];
    for (i, r) in placed.iter().enumerate() {
        let rt = r.expect("net is connected").transpose();
        let bottom = Face::from_normal(rt.apply([0, 0, -1])).expect("unit normal");
        if faces[bottom.index()].is_some() {
            return None;
        }
        faces[bottom.index()] = Some((net.labels[i], rt.apply([0, 1, 0])));
    }
    Some(LabeledCube {
        faces: faces.map(|f| f.expect("six distinct faces")),
    })
}

/// The eleven free hexominoes that fold to a cube, in canonical free form, sorted.
pub fn cube_net_shapes() -> Vec<Polyomino> {
    super::polyomino::enumerate_free(6)
        .into_iter()
        .filter(|p| fold_net(&CubeNet::from_shape(p, (0..6).collect()).expect("hexomino")).is_some())
        .collect()
}
