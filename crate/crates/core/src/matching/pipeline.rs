//! The fused pipeline: group matching on local signatures with mask matching
//! on ring signatures inside every group.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{KeypointSet, LabelId, LabeledPointCloud, Point3};
use crate::matching::{
    build_category_groups, build_matching_groups, compute_fpfh, group_match, mask_match_within, score_matrix,
    scene_similarity_matrix, Correspondence, CorrespondenceSet, DescriptorSet, Matcher, ScoreMatrix,
};
use crate::semantic::{
    cluster_landmarks, compute_bmr_ss, compute_local_ss, select_landmark_categories, voxel_landmarks, BmrConfig,
    BmrSignature, ClusterParams, LandmarkSet, LocalSignature, DEFAULT_SALIENCY_THRESHOLD,
    OUTDOOR_LANDMARK_CATEGORIES,
};
use crate::spatial::SpatialIndex;

/// Where ring-signature landmarks come from.
#[derive(Debug, Clone, PartialEq)]
pub enum LandmarkSource {
    /// Euclidean clusters of the named categories. Names missing from the
    /// alphabet are ignored.
    Categories(Vec<String>),
    /// Euclidean clusters of every non-dynamic category whose mean saliency
    /// reaches `threshold`.
    Saliency { threshold: f64 },
    /// Voxel-downsampled cloud, all categories.
    Voxel { size: f64 },
}

impl Default for LandmarkSource {
    fn default() -> Self {
        LandmarkSource::Categories(OUTDOOR_LANDMARK_CATEGORIES.iter().map(|s| s.to_string()).collect())
    }
}

/// Which semantic constraints are applied on top of the plain matcher.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum MatchingMode {
    /// Matcher on the full score matrix.
    Baseline,
    /// Only keypoints with the same point label may match.
    SameCategory,
    /// Group matching on local signatures.
    GroupOnly,
    /// Mask matching on the full score matrix.
    MaskOnly,
    /// Mask matching inside every matching group.
    #[default]
    Full,
}

impl MatchingMode {
    pub const ALL: [MatchingMode; 5] = [
        MatchingMode::Baseline,
        MatchingMode::SameCategory,
        MatchingMode::GroupOnly,
        MatchingMode::MaskOnly,
        MatchingMode::Full,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MatchingMode::Baseline => "baseline",
            MatchingMode::SameCategory => "same-category",
            MatchingMode::GroupOnly => "group",
            MatchingMode::MaskOnly => "mask",
            MatchingMode::Full => "full",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

/// Every tunable of the correspondence pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineParams {
    /// Local signature radius, meters.
    pub r_local: f64,
    pub bmr: BmrConfig,
    /// Scene-consistency mask width.
    pub k: usize,
    pub landmarks: LandmarkSource,
    /// Clustering radius for categories not listed in `cluster_radii`.
    pub cluster_default_radius: f64,
    /// Clustering radius per category name.
    pub cluster_radii: BTreeMap<String, f64>,
    pub min_cluster_size: usize,
    pub normal_radius: f64,
    pub feature_radius: f64,
    pub mode: MatchingMode,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self::outdoor()
    }
}

impl PipelineParams {
    pub fn outdoor() -> Self {
        let cluster_radii = [
            ("pole", 0.5),
            ("traffic-sign", 0.5),
            ("trunk", 0.5),
            ("car", 1.0),
            ("truck", 1.0),
        ]
        .into_iter()
        .map(|(n, r)| (n.to_string(), r))
        .collect();
        Self {
            r_local: 0.8,
            bmr: BmrConfig::OUTDOOR,
            k: 2,
            landmarks: LandmarkSource::default(),
            cluster_default_radius: 0.5,
            cluster_radii,
            min_cluster_size: 10,
            normal_radius: 0.5,
            feature_radius: 1.0,
            mode: MatchingMode::Full,
        }
    }

    pub fn indoor() -> Self {
        Self {
            r_local: 0.05,
            bmr: BmrConfig::INDOOR,
            k: 3,
            landmarks: LandmarkSource::Voxel { size: 0.25 },
            normal_radius: 0.05,
            feature_radius: 0.1,
            ..Self::outdoor()
        }
    }

    /// Saliency-driven category selection at the default threshold.
    pub fn with_saliency_landmarks(mut self) -> Self {
        self.landmarks = LandmarkSource::Saliency {
            threshold: DEFAULT_SALIENCY_THRESHOLD,
        };
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive, got {v}")))
            }
        };
        positive("r_local", self.r_local)?;
        self.bmr.validate()?;
        if self.k < 1 {
            return Err(Error::invalid("K must be at least 1"));
        }
        positive("cluster default radius", self.cluster_default_radius)?;
        for (name, &r) in &self.cluster_radii {
            positive(&format!("cluster radius for {name}"), r)?;
        }
        if self.min_cluster_size < 1 {
            return Err(Error::invalid("min_cluster_size must be at least 1"));
        }
        positive("normal_radius", self.normal_radius)?;
        positive("feature_radius", self.feature_radius)?;
        match &self.landmarks {
            LandmarkSource::Categories(_) => {}
            LandmarkSource::Saliency { threshold } => {
                if !(0.0..=1.0).contains(threshold) {
                    return Err(Error::invalid(format!("saliency threshold must lie in [0, 1], got {threshold}")));
                }
            }
            LandmarkSource::Voxel { size } => positive("voxel size", *size)?,
        }
        Ok(())
    }

    /// Clustering parameters resolved against `cloud`'s alphabet.
    pub fn cluster_params(&self, alphabet: &crate::semantic::LabelAlphabet) -> ClusterParams {
        ClusterParams {
            default_radius: self.cluster_default_radius,
            radii: self
                .cluster_radii
                .iter()
                .filter_map(|(n, &r)| alphabet.id_of(n).map(|id| (id, r)))
                .collect(),
            min_cluster_size: self.min_cluster_size,
        }
    }
}

/// Extracts landmarks from `cloud` according to `params.landmarks`.
pub(crate) fn extract_landmarks(cloud: &LabeledPointCloud, params: &PipelineParams) -> Result<LandmarkSet> {
    let alphabet = cloud.alphabet();
    match &params.landmarks {
        LandmarkSource::Categories(names) => {
            let cats: Vec<LabelId> = names.iter().filter_map(|n| alphabet.id_of(n)).collect();
            cluster_landmarks(cloud, &params.cluster_params(alphabet), &cats)
        }
        LandmarkSource::Saliency { threshold } => {
            if cloud.is_empty() {
                return Ok(LandmarkSet::default());
            }
            let candidates: Vec<LabelId> = alphabet.ids().filter(|&t| !alphabet.is_dynamic(t)).collect();
            let all = cluster_landmarks(cloud, &params.cluster_params(alphabet), &candidates)?;
            let keep = select_landmark_categories(cloud, &all, &params.bmr, *threshold)?;
            Ok(all.filter_labels(|l| keep.contains(&l)))
        }
        LandmarkSource::Voxel { size } => voxel_landmarks(cloud, *size),
    }
}

/// One cloud with everything that does not depend on the matching knobs:
/// spatial index, keypoint descriptors and landmarks.
#[derive(Debug, Clone)]
pub struct PreparedCloud {
    cloud: LabeledPointCloud,
    keypoints: KeypointSet,
    index: SpatialIndex,
    descriptors: DescriptorSet,
    landmarks: LandmarkSet,
}

impl PreparedCloud {
    pub fn new(cloud: &LabeledPointCloud, keypoints: &KeypointSet, params: &PipelineParams) -> Result<Self> {
        params.validate()?;
        if let Some(&bad) = keypoints.indices().iter().find(|&&i| i >= cloud.len()) {
            return Err(Error::invalid(format!(
                "keypoint index {bad} out of range for a cloud of {} points",
                cloud.len()
            )));
        }
        let index = SpatialIndex::build(cloud.points());
        let descriptors = if keypoints.is_empty() {
            DescriptorSet::from_rows(crate::matching::FPFH_DIM, Vec::new())?
        } else {
            compute_fpfh(cloud, &index, keypoints, params.normal_radius, params.feature_radius)?
        };
        let landmarks = extract_landmarks(cloud, params)?;
        Ok(Self {
            cloud: cloud.clone(),
            keypoints: keypoints.clone(),
            index,
            descriptors,
            landmarks,
        })
    }

    pub fn cloud(&self) -> &LabeledPointCloud {
        &self.cloud
    }

    pub fn keypoints(&self) -> &KeypointSet {
        &self.keypoints
    }

    pub fn index(&self) -> &SpatialIndex {
        &self.index
    }

    pub fn descriptors(&self) -> &DescriptorSet {
        &self.descriptors
    }

    pub fn landmarks(&self) -> &LandmarkSet {
        &self.landmarks
    }

    pub fn keypoint_positions(&self) -> Vec<Point3> {
        self.keypoints.positions(&self.cloud)
    }

    pub fn keypoint_labels(&self) -> Vec<LabelId> {
        self.keypoints.indices().iter().map(|&i| self.cloud.label(i)).collect()
    }

    pub fn local_signatures(&self, r_local: f64) -> Result<Vec<LocalSignature>> {
        self.keypoints
            .indices()
            .iter()
            .map(|&i| compute_local_ss(&self.cloud, &self.index, &self.cloud.point(i), r_local))
            .collect()
    }

    pub fn bmr_signatures(&self, cfg: &BmrConfig) -> Vec<BmrSignature> {
        let n = self.cloud.alphabet().len();
        self.keypoints
            .indices()
            .iter()
            .map(|&i| compute_bmr_ss(&self.cloud.point(i), &self.landmarks, cfg, n))
            .collect()
    }
}

/// Source and target clouds plus their descriptor score matrix.
///
/// [`PreparedPair::run`] may be called repeatedly with different `r_local`,
/// `K`, ring settings, mode or matcher; descriptors and landmarks are reused.
#[derive(Debug, Clone)]
pub struct PreparedPair {
    pub src: PreparedCloud,
    pub dst: PreparedCloud,
    scores: ScoreMatrix,
}

impl PreparedPair {
    pub fn new(
        src_cloud: &LabeledPointCloud,
        dst_cloud: &LabeledPointCloud,
        src_kp: &KeypointSet,
        dst_kp: &KeypointSet,
        params: &PipelineParams,
    ) -> Result<Self> {
        if src_cloud.alphabet().names() != dst_cloud.alphabet().names() {
            return Err(Error::invalid("source and target clouds use different label alphabets"));
        }
        let src = PreparedCloud::new(src_cloud, src_kp, params)?;
        let dst = PreparedCloud::new(dst_cloud, dst_kp, params)?;
        Self::from_prepared(src, dst)
    }

    pub fn from_prepared(src: PreparedCloud, dst: PreparedCloud) -> Result<Self> {
        let scores = score_matrix(&src.descriptors, &dst.descriptors)?;
        Ok(Self { src, dst, scores })
    }

    pub fn scores(&self) -> &ScoreMatrix {
        &self.scores
    }

    /// Correspondences between keypoint positions under `params.mode`.
    pub fn run(&self, params: &PipelineParams, matcher: Matcher) -> Result<CorrespondenceSet> {
        params.validate()?;
        let alphabet = self.src.cloud.alphabet();
        match params.mode {
            MatchingMode::Baseline => Ok(matcher.select(&self.scores)),
            MatchingMode::SameCategory => {
                let groups = build_category_groups(&self.src.keypoint_labels(), &self.dst.keypoint_labels(), alphabet);
                Ok(group_match(&groups, &self.scores, matcher))
            }
            MatchingMode::GroupOnly => {
                let groups = build_matching_groups(
                    &self.src.local_signatures(params.r_local)?,
                    &self.dst.local_signatures(params.r_local)?,
                    alphabet,
                );
                Ok(group_match(&groups, &self.scores, matcher))
            }
            MatchingMode::MaskOnly => {
                let sim = scene_similarity_matrix(&self.src.bmr_signatures(&params.bmr), &self.dst.bmr_signatures(&params.bmr))?;
                mask_match_within(&self.scores, &sim, params.k, matcher)
            }
            MatchingMode::Full => {
                let groups = build_matching_groups(
                    &self.src.local_signatures(params.r_local)?,
                    &self.dst.local_signatures(params.r_local)?,
                    alphabet,
                );
                if groups.is_empty() {
                    return Ok(CorrespondenceSet::new());
                }
                let sim = scene_similarity_matrix(&self.src.bmr_signatures(&params.bmr), &self.dst.bmr_signatures(&params.bmr))?;
                let mut all = Vec::new();
                for g in &groups {
                    let scores = self.scores.submatrix(&g.src_indices, &g.dst_indices);
                    let s = sim.submatrix(&g.src_indices, &g.dst_indices);
                    let found = mask_match_within(&scores, &s, params.k, matcher)?;
                    all.extend(found.iter().map(|c| Correspondence {
                        src_index: g.src_indices[c.src_index],
                        dst_index: g.dst_indices[c.dst_index],
                        score: c.score,
                        group_label: Some(g.anchor_label),
                    }));
                }
                Ok(CorrespondenceSet::from_iter_dedup(all))
            }
        }
    }
}

/// End-to-end correspondence search between two labelled clouds.
///
/// Correspondence indices are positions within `src_kp` and `dst_kp`.
pub fn ml_semreg_pipeline(
    src_cloud: &LabeledPointCloud,
    dst_cloud: &LabeledPointCloud,
    src_kp: &KeypointSet,
    dst_kp: &KeypointSet,
    params: &PipelineParams,
    matcher: Matcher,
) -> Result<CorrespondenceSet> {
    PreparedPair::new(src_cloud, dst_cloud, src_kp, dst_kp, params)?.run(params, matcher)
}
