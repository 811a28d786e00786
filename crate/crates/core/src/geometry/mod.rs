//! Geometric substrate shared by scene generators and validators.

pub mod cube;
pub mod motion;
pub mod polyomino;
pub mod predicates;
pub mod shapes;
pub mod vector;
pub mod visibility;
pub mod voxel;

pub use cube::{fold_net, CubeNet, CubeRotation, LabeledCube};
pub use motion::{compose, RigidMotion, RigidMotion2, RigidMotion3};
pub use polyomino::{congruent_under_rotation, Congruence, Polyomino};
pub use predicates::{collinear, parallel, EXACT_TOLERANCE};
pub use shapes::Footprint;
pub use vector::{wrap_angle, Vec2, Vec3};
pub use visibility::{visible_sequence, AgentPose, PlacedObject};
pub use voxel::{orthographic_projections, Mask, Projections, VoxelGrid};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeometryError {
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
}
