//! Fixtures shared by the benchmarks.

use semreg_core::synth::{generate_scene_pair, keypoint_sample, SceneSpec};
use semreg_core::{KeypointSet, LabeledPointCloud, PipelineParams, PreparedPair, RigidTransform};

/// A synthetic pair with sampled keypoints.
pub struct Fixture {
    pub src: LabeledPointCloud,
    pub dst: LabeledPointCloud,
    pub src_kp: KeypointSet,
    pub dst_kp: KeypointSet,
    pub t_gt: RigidTransform,
}

impl Fixture {
    /// Repeated-structure scene with `keypoints` keypoints per scan.
    pub fn repeated(seed: u64, keypoints: usize) -> Self {
        let pair = generate_scene_pair(&SceneSpec::repeated_structure(seed)).expect("valid scene spec");
        let src_kp = keypoint_sample(&pair.src, keypoints.min(pair.src.len()), seed).expect("enough points");
        let dst_kp = keypoint_sample(&pair.dst, keypoints.min(pair.dst.len()), seed + 1).expect("enough points");
        Self {
            src: pair.src,
            dst: pair.dst,
            src_kp,
            dst_kp,
            t_gt: pair.t_gt,
        }
    }

    pub fn prepare(&self, params: &PipelineParams) -> PreparedPair {
        PreparedPair::new(&self.src, &self.dst, &self.src_kp, &self.dst_kp, params).expect("valid fixture")
    }
}
