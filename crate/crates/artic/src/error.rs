//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

/// Errors raised by the structure-discovery pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("kinematic graph is not a tree: {0}")]
    CyclicKinematics(String),
    #[error("mesh file not found: {0}")]
    MissingMeshFile(PathBuf),
    #[error("unsupported joint type: {0}")]
    UnsupportedJointType(String),
    #[error("joint state out of range: joint {joint} value {value} outside [{lo}, {hi}]")]
    JointStateOutOfRange {
        joint: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("model has no geometry")]
    EmptyGeometry,
    #[error("joint {0} is fixed and cannot be actuated")]
    FixedJoint(usize),
    #[error("unknown joint id {0}")]
    UnknownJoint(usize),
    #[error("action makes no contact with the object")]
    NoContact,
    #[error("misaligned inputs: {0}")]
    MisalignedInputs(String),
    #[error("no valid pixels in any depth image")]
    EmptyObservation,
    #[error("all points fall outside the voxel grid domain")]
    AllPointsOutOfBounds,
    #[error("voxel grid has no occupied voxels")]
    EmptyGrid,
    #[error("no motion detected between observations")]
    NoMotionDetected,
    #[error("part budget exceeded: would require more than {0} labels")]
    PartBudgetExceeded(usize),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("motion too small to classify")]
    ZeroMotion,
    #[error("model has no movable joint")]
    NoMovableJoint,
    #[error("no sampled action candidate produces motion")]
    NoValidCandidate,
    #[error("action log is empty")]
    EmptyLog,
    #[error("both voxel sets are empty")]
    BothEmpty,
    #[error("zero-length vector where a direction is required")]
    ZeroVector,
    #[error("operation defined for revolute joints only")]
    NotRevolute,
    #[error("no joints to evaluate")]
    NoJoints,
    #[error("label {0} is not allocated")]
    UnknownLabel(usize),
    #[error("part volume has no allocated labels")]
    NoPartsAllocated,
    #[error("dataset directory contains no objects")]
    EmptyDataset,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("io failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization failure: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
