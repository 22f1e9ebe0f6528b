//! Semantic side of the pipeline: label alphabets, local label signatures,
//! landmark extraction and ring-based scene signatures.

mod alphabet;
mod bmr;
mod landmarks;
mod local;
mod saliency;

pub use alphabet::{LabelAlphabet, OUTDOOR_LANDMARK_CATEGORIES};
pub use bmr::{compute_bmr_ss, ring_index, rws_consistent, scene_similarity, BmrConfig, BmrSignature};
pub use landmarks::{cluster_landmarks, voxel_landmarks, ClusterParams, LandmarkSet};
pub use local::{compute_local_ss, ls_consistent, LocalSignature};
pub use saliency::{compute_saliency, select_landmark_categories, SaliencyMatrix, DEFAULT_SALIENCY_THRESHOLD};
