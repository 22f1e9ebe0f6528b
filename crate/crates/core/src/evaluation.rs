//! Correspondence and registration metrics, label degradation and parameter
//! sweeps.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{LabelId, LabeledPointCloud, Point3, RigidTransform};
use crate::matching::{CorrespondenceSet, Matcher, PipelineParams, PreparedPair};
use crate::spatial::SpatialIndex;

/// Inlier and registration-success thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalThresholds {
    /// Correspondence inlier threshold, meters.
    pub inlier_threshold: f64,
    /// Maximum rotation error for a registered pair, degrees.
    pub re_max_deg: f64,
    /// Maximum translation error for a registered pair, meters.
    pub te_max: f64,
}

impl Default for EvalThresholds {
    fn default() -> Self {
        Self::OUTDOOR
    }
}

impl EvalThresholds {
    pub const OUTDOOR: EvalThresholds = EvalThresholds {
        inlier_threshold: 0.5,
        re_max_deg: 5.0,
        te_max: 0.6,
    };
    pub const INDOOR: EvalThresholds = EvalThresholds {
        inlier_threshold: 0.1,
        re_max_deg: 15.0,
        te_max: 0.3,
    };

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("inlier threshold", self.inlier_threshold),
            ("rotation threshold", self.re_max_deg),
            ("translation threshold", self.te_max),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn is_registered(&self, re_deg: f64, te: f64) -> bool {
        re_deg <= self.re_max_deg && te <= self.te_max
    }
}

/// `‖p − T_gt(q)‖ ≤ τ`.
pub fn classify_inlier(p: &Point3, q: &Point3, t_gt: &RigidTransform, tau: f64) -> bool {
    (p - t_gt.apply(q)).norm() <= tau
}

/// Inlier number and inlier ratio of `corr` (ratio 0 for an empty set).
pub fn correspondence_metrics(
    corr: &CorrespondenceSet,
    src_keypoints: &[Point3],
    dst_keypoints: &[Point3],
    t_gt: &RigidTransform,
    tau: f64,
) -> (usize, f64) {
    let inliers = corr
        .iter()
        .filter(|c| classify_inlier(&src_keypoints[c.src_index], &dst_keypoints[c.dst_index], t_gt, tau))
        .count();
    let ratio = if corr.is_empty() {
        0.0
    } else {
        inliers as f64 / corr.len() as f64
    };
    (inliers, ratio)
}

/// Rotation error in degrees and translation error in meters.
///
/// The angle `arccos((tr(R_gtᵀ R) − 1) / 2)` is evaluated as `atan2(sin, cos)`
/// with the sine taken from the skew part, which keeps it accurate near zero.
pub fn registration_errors(estimate: &RigidTransform, truth: &RigidTransform) -> (f64, f64) {
    let d = truth.rotation.transpose() * estimate.rotation;
    let cos = (d.trace() - 1.0) / 2.0;
    let skew = Vector3::new(d[(2, 1)] - d[(1, 2)], d[(0, 2)] - d[(2, 0)], d[(1, 0)] - d[(0, 1)]);
    let re = (skew.norm() / 2.0).atan2(cos).to_degrees();
    let te = (estimate.translation - truth.translation).norm();
    (re, te)
}

/// Fraction of `(RE, TE)` results within both thresholds.
pub fn registration_recall(results: &[(f64, f64)], thresholds: &EvalThresholds) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::invalid("registration recall of an empty result list"));
    }
    let ok = results.iter().filter(|&&(re, te)| thresholds.is_registered(re, te)).count();
    Ok(ok as f64 / results.len() as f64)
}

/// Metrics for one registered pair under one matcher configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub pair_id: String,
    pub matcher: String,
    pub correspondences: usize,
    pub inlier_count: usize,
    pub inlier_ratio: f64,
    pub rotation_error_deg: f64,
    pub translation_error: f64,
    pub registered: bool,
    pub timing_ms: f64,
}

/// Per-pair rows plus aggregates; mean RE/TE cover registered pairs only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<PairMetrics>,
    pub pair_count: usize,
    pub registered_count: usize,
    pub registration_recall: f64,
    pub mean_rotation_error_deg: Option<f64>,
    pub mean_translation_error: Option<f64>,
    pub mean_inlier_count: f64,
    pub mean_inlier_ratio: f64,
    /// Echo of the configuration that produced the report.
    pub config: Vec<(String, String)>,
}

impl BenchmarkReport {
    /// Sorts rows by `(pair_id, matcher)` and computes the aggregates.
    pub fn new(mut rows: Vec<PairMetrics>, config: Vec<(String, String)>) -> Self {
        rows.sort_by(|a, b| a.pair_id.cmp(&b.pair_id).then(a.matcher.cmp(&b.matcher)));
        let pair_count = rows.len();
        let registered: Vec<&PairMetrics> = rows.iter().filter(|r| r.registered).collect();
        let mean = |it: &mut dyn Iterator<Item = f64>, n: usize| {
            (n > 0).then(|| it.sum::<f64>() / n as f64)
        };
        let registered_count = registered.len();
        Self {
            pair_count,
            registered_count,
            registration_recall: if pair_count == 0 {
                0.0
            } else {
                registered_count as f64 / pair_count as f64
            },
            mean_rotation_error_deg: mean(&mut registered.iter().map(|r| r.rotation_error_deg), registered_count),
            mean_translation_error: mean(&mut registered.iter().map(|r| r.translation_error), registered_count),
            mean_inlier_count: mean(&mut rows.iter().map(|r| r.inlier_count as f64), pair_count).unwrap_or(0.0),
            mean_inlier_ratio: mean(&mut rows.iter().map(|r| r.inlier_ratio), pair_count).unwrap_or(0.0),
            rows,
            config,
        }
    }
}

/// Relabels boundary points.
///
/// A point is on a boundary when some point within `blur_radius` carries a
/// different label. With probability `prob` such a point takes one of those
/// other labels, chosen uniformly. Neighbourhoods are evaluated on the
/// original labels, so the outcome does not depend on visiting order.
pub fn blur_labels(cloud: &LabeledPointCloud, blur_radius: f64, prob: f64, seed: u64) -> Result<LabeledPointCloud> {
    if !(blur_radius >= 0.0) || !blur_radius.is_finite() {
        return Err(Error::invalid(format!("blur radius must be non-negative, got {blur_radius}")));
    }
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::invalid(format!("blur probability must lie in [0, 1], got {prob}")));
    }
    if blur_radius == 0.0 || prob == 0.0 {
        return Ok(cloud.clone());
    }
    let index = SpatialIndex::build(cloud.points());
    let labels = cloud.labels();
    let mut out = labels.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut others: Vec<LabelId> = Vec::new();
    for (i, p) in cloud.points().iter().enumerate() {
        others.clear();
        index.for_each_in_ball(p, blur_radius, |j| {
            if labels[j] != labels[i] {
                others.push(labels[j]);
            }
        });
        if others.is_empty() {
            continue;
        }
        others.sort_unstable();
        others.dedup();
        if rng.random_bool(prob) {
            out[i] = others[rng.random_range(0..others.len())];
        }
    }
    cloud.with_labels(out)
}

/// Points that [`blur_labels`] may relabel: those with a differently labelled
/// neighbour within `blur_radius`.
pub fn boundary_points(cloud: &LabeledPointCloud, blur_radius: f64) -> Vec<usize> {
    let index = SpatialIndex::build(cloud.points());
    let labels = cloud.labels();
    (0..cloud.len())
        .filter(|&i| {
            let mut found = false;
            index.for_each_in_ball(&cloud.point(i), blur_radius, |j| found |= labels[j] != labels[i]);
            found
        })
        .collect()
}

/// A scene pair ready for repeated matching, with its ground truth.
#[derive(Debug, Clone)]
pub struct EvalPair {
    pub pair: PreparedPair,
    pub t_gt: RigidTransform,
}

impl EvalPair {
    /// `(IN, IR)` of `corr` against the ground truth.
    pub fn metrics(&self, corr: &CorrespondenceSet, tau: f64) -> (usize, f64) {
        correspondence_metrics(
            corr,
            &self.pair.src.keypoint_positions(),
            &self.pair.dst.keypoint_positions(),
            &self.t_gt,
            tau,
        )
    }
}

/// A pipeline knob that a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    RLocal,
    K,
    Rings,
    RingWidth,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::RLocal => "r_local",
            SweepParam::K => "k",
            SweepParam::Rings => "bmr.N",
            SweepParam::RingWidth => "bmr.L",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [SweepParam::RLocal, SweepParam::K, SweepParam::Rings, SweepParam::RingWidth]
            .into_iter()
            .find(|p| p.name() == s)
    }

    fn apply(&self, params: &mut PipelineParams, value: f64) -> Result<()> {
        let as_count = |v: f64| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::invalid(format!("{} needs a positive integer, got {v}", self.name())))
            }
        };
        match self {
            SweepParam::RLocal => params.r_local = value,
            SweepParam::K => params.k = as_count(value)?,
            SweepParam::Rings => params.bmr.rings = as_count(value)?,
            SweepParam::RingWidth => params.bmr.ring_width = value,
        }
        params.validate()
    }
}

/// One grid value of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    /// `(IN, IR)` per pair, in input order.
    pub per_pair: Vec<(usize, f64)>,
    pub mean_inlier_count: f64,
    pub mean_inlier_ratio: f64,
}

/// Runs the pipeline once per grid value of `param`, other settings fixed.
///
/// Ring settings only affect signatures; landmarks and descriptors are those
/// prepared with each pair.
pub fn sweep_parameter(
    pairs: &[EvalPair],
    param: SweepParam,
    values: &[f64],
    base: &PipelineParams,
    matcher: Matcher,
    tau: f64,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one value"));
    }
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::invalid("sweep values must be positive"));
    }
    values
        .iter()
        .map(|&value| {
            let mut params = base.clone();
            param.apply(&mut params, value)?;
            let per_pair = pairs
                .iter()
                .map(|p| Ok(p.metrics(&p.pair.run(&params, matcher)?, tau)))
                .collect::<Result<Vec<_>>>()?;
            let n = per_pair.len().max(1) as f64;
            Ok(SweepRow {
                param: param.name().to_string(),
                value,
                mean_inlier_count: per_pair.iter().map(|x| x.0 as f64).sum::<f64>() / n,
                mean_inlier_ratio: per_pair.iter().map(|x| x.1).sum::<f64>() / n,
                per_pair,
            })
        })
        .collect()
}

/// [`sweep_parameter`] over the local signature radius.
pub fn sweep_r_local(
    pairs: &[EvalPair],
    r_values: &[f64],
    base: &PipelineParams,
    matcher: Matcher,
    tau: f64,
) -> Result<Vec<SweepRow>> {
    sweep_parameter(pairs, SweepParam::RLocal, r_values, base, matcher, tau)
}
