//! Semantic-consistency correspondence filtering for point cloud registration.
//!
//! Keypoint correspondences from a local descriptor are constrained twice:
//! keypoints may only match inside groups that share a nearby semantic label,
//! and each source keypoint only considers the targets whose surrounding
//! landmark layout agrees best with its own. Robust estimation, evaluation
//! metrics, a synthetic scene generator and file I/O complete the toolkit.

pub mod config;
pub mod error;
pub mod estimation;
pub mod evaluation;
pub mod geometry;
pub mod io;
pub mod matching;
pub mod semantic;
pub mod spatial;
pub mod synth;

pub use config::{PipelineConfig, Preset};
pub use error::{Error, Result};
pub use estimation::{ransac_register, ransac_register_pairs, refine_transform, RansacConfig, Refinement, RegistrationResult};
pub use geometry::{apply_transform, kabsch, KeypointSet, LabelId, LabeledPointCloud, Point3, RigidTransform};
pub use matching::{
    ml_semreg_pipeline, select_mnn, select_nn, Correspondence, CorrespondenceSet, Matcher, MatchingMode, PipelineParams,
    PreparedPair,
};
pub use semantic::{BmrConfig, BmrSignature, LabelAlphabet, LandmarkSet, LocalSignature};
pub use spatial::SpatialIndex;
