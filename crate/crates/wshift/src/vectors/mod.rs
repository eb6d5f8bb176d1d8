//! Payload enumeration, index partitions, and assembly of the image
//! vectors `x_q` from a built schedule.

pub mod ball;
pub mod embed;
pub mod partition;

pub use ball::{QScalar, RationalBallEnumerator};
pub use embed::{
    ConstructionContext, IsometryReport, LevelAssignment, OmittedRun, RealizedBlock,
    TransferImage, XqBuild,
};
pub use partition::{PartKey, PartitionMap, PartitionShape};
