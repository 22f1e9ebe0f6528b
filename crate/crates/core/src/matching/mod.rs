//! Descriptor matching with semantic consistency constraints.
//!
//! Plain matchers pick correspondences from a descriptor score matrix. Group
//! matching restricts the search to keypoints whose local label signatures
//! share a category; mask matching further keeps, for every source keypoint,
//! only the `K` target keypoints with the highest scene similarity. The full
//! pipeline applies mask matching inside every group and merges the results.

mod correspondence;
mod descriptor;
mod group;
mod mask;
mod pipeline;
mod score;
mod select;

pub use correspondence::{Correspondence, CorrespondenceSet};
pub use descriptor::{compute_fpfh, DescriptorSet, FPFH_BINS, FPFH_DIM, MIN_FEATURE_NEIGHBORS};
pub use group::{build_category_groups, build_matching_groups, group_match, MatchingGroup};
pub use mask::{mask_match, mask_match_within, scene_similarity_matrix, topk_mask, ConsistencyMask, SimilarityMatrix};
pub use pipeline::{
    ml_semreg_pipeline, LandmarkSource, MatchingMode, PipelineParams, PreparedCloud, PreparedPair,
};
pub use score::{score_matrix, ScoreMatrix};
pub use select::{select_mnn, select_nn, Matcher};
