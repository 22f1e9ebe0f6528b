//! Robust rigid-transform estimation from putative correspondences.
//!
//! Transforms map target points into the source frame, matching the
//! ground-truth convention: the residual of pair `(p, q)` is `‖p − T(q)‖`.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{kabsch, Point3, RigidTransform};
use crate::matching::CorrespondenceSet;

/// Samples whose triangle area is below this fraction of the edge product are
/// treated as collinear.
pub const COLLINEARITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct RansacConfig {
    pub max_iterations: usize,
    /// Inlier threshold, meters.
    pub inlier_threshold: f64,
    pub sample_size: usize,
    pub seed: u64,
    /// Early-exit confidence in `(0, 1)`.
    pub confidence: f64,
    /// Kabsch-and-regate rounds applied to the best consensus set.
    pub refine_rounds: usize,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self::outdoor()
    }
}

impl RansacConfig {
    pub fn outdoor() -> Self {
        Self {
            max_iterations: 10_000,
            inlier_threshold: 0.5,
            sample_size: 3,
            seed: 0,
            confidence: 0.999,
            refine_rounds: 10,
        }
    }

    pub fn indoor() -> Self {
        Self {
            inlier_threshold: 0.1,
            ..Self::outdoor()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        if !(self.inlier_threshold > 0.0 && self.inlier_threshold.is_finite()) {
            return Err(Error::invalid(format!(
                "inlier threshold must be positive, got {}",
                self.inlier_threshold
            )));
        }
        if self.sample_size < 3 {
            return Err(Error::invalid("sample_size must be at least 3"));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::invalid(format!("confidence must lie in (0, 1), got {}", self.confidence)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationResult {
    pub transform: RigidTransform,
    /// Positions within the input correspondence list.
    pub inlier_indices: Vec<usize>,
    pub iterations_used: usize,
    /// A hypothesis reached at least `sample_size` inliers.
    pub converged: bool,
}

/// Outcome of [`refine_transform`].
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub transform: RigidTransform,
    pub inliers: Vec<usize>,
    pub rounds_used: usize,
    /// The solve hit a degenerate configuration; `transform` is the last valid one.
    pub degraded: bool,
}

fn residual(t: &RigidTransform, p: &Point3, q: &Point3) -> f64 {
    (p - t.apply(q)).norm()
}

fn gate(t: &RigidTransform, src: &[Point3], dst: &[Point3], tau: f64) -> Vec<usize> {
    (0..src.len()).filter(|&i| residual(t, &src[i], &dst[i]) <= tau).collect()
}

fn truncated_cost(t: &RigidTransform, src: &[Point3], dst: &[Point3], tau: f64) -> f64 {
    src.iter()
        .zip(dst)
        .map(|(p, q)| residual(t, p, q).powi(2).min(tau * tau))
        .sum()
}

fn solve(src: &[Point3], dst: &[Point3], idx: &[usize]) -> Result<RigidTransform> {
    let s: Vec<Point3> = idx.iter().map(|&i| dst[i]).collect();
    let d: Vec<Point3> = idx.iter().map(|&i| src[i]).collect();
    kabsch(&s, &d)
}

fn is_collinear(a: &Point3, b: &Point3, c: &Point3) -> bool {
    let (u, v) = (b - a, c - a);
    u.cross(&v).norm() <= COLLINEARITY_TOL * u.norm() * v.norm()
}

/// Iterated kabsch-and-regate on paired points `src[i] ↔ dst[i]`.
///
/// Starts from a solve over `inliers` and stops after `rounds` re-solves or
/// once the gated set stops changing. The truncated cost
/// `Σ min(r², τ²)` never increases from one round to the next.
pub fn refine_transform(
    src: &[Point3],
    dst: &[Point3],
    inliers: &[usize],
    rounds: usize,
    inlier_threshold: f64,
) -> Result<Refinement> {
    if src.len() != dst.len() {
        return Err(Error::invalid("source and target point lists differ in length"));
    }
    if inliers.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: inliers.len(),
        });
    }
    if inliers.iter().any(|&i| i >= src.len()) {
        return Err(Error::invalid("inlier index out of range"));
    }
    let mut current: Vec<usize> = inliers.to_vec();
    current.sort_unstable();
    current.dedup();
    let mut transform = match solve(src, dst, &current) {
        Ok(t) => t,
        Err(_) => {
            return Ok(Refinement {
                transform: RigidTransform::identity(),
                inliers: Vec::new(),
                rounds_used: 0,
                degraded: true,
            })
        }
    };
    let mut cost = truncated_cost(&transform, src, dst, inlier_threshold);
    let mut rounds_used = 1;
    let mut degraded = false;
    while rounds_used < rounds.max(1) {
        let gated = gate(&transform, src, dst, inlier_threshold);
        if gated == current {
            break;
        }
        if gated.len() < 3 {
            degraded = true;
            break;
        }
        let Ok(next) = solve(src, dst, &gated) else {
            degraded = true;
            break;
        };
        let next_cost = truncated_cost(&next, src, dst, inlier_threshold);
        rounds_used += 1;
        if next_cost > cost {
            break;
        }
        transform = next;
        cost = next_cost;
        current = gated;
    }
    Ok(Refinement {
        inliers: gate(&transform, src, dst, inlier_threshold),
        transform,
        rounds_used,
        degraded,
    })
}

/// RANSAC over paired points `src[i] ↔ dst[i]`.
pub fn ransac_register_pairs(src: &[Point3], dst: &[Point3], cfg: &RansacConfig) -> Result<RegistrationResult> {
    cfg.validate()?;
    if src.len() != dst.len() {
        return Err(Error::invalid("source and target point lists differ in length"));
    }
    let n = src.len();
    if n < cfg.sample_size {
        return Err(Error::InsufficientData {
            needed: cfg.sample_size,
            got: n,
        });
    }
    let tau = cfg.inlier_threshold;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(RigidTransform, Vec<usize>)> = None;
    let mut needed = cfg.max_iterations as f64;
    let mut iterations = 0;
    while iterations < cfg.max_iterations && (iterations as f64) < needed {
        iterations += 1;
        let picked = sample(&mut rng, n, cfg.sample_size).into_vec();
        if is_collinear(&dst[picked[0]], &dst[picked[1]], &dst[picked[2]])
            || is_collinear(&src[picked[0]], &src[picked[1]], &src[picked[2]])
        {
            continue;
        }
        let Ok(t) = solve(src, dst, &picked) else {
            continue;
        };
        let inliers = gate(&t, src, dst, tau);
        if best.as_ref().is_none_or(|(_, b)| inliers.len() > b.len()) {
            let w = inliers.len() as f64 / n as f64;
            let miss = 1.0 - w.powi(cfg.sample_size as i32);
            needed = if miss <= 0.0 {
                0.0
            } else if miss >= 1.0 {
                f64::INFINITY
            } else {
                (1.0 - cfg.confidence).ln() / miss.ln()
            };
            best = Some((t, inliers));
        }
    }

    let Some((hypothesis, hyp_inliers)) = best else {
        return Ok(RegistrationResult {
            transform: RigidTransform::identity(),
            inlier_indices: Vec::new(),
            iterations_used: iterations,
            converged: false,
        });
    };
    let converged = hyp_inliers.len() >= cfg.sample_size;
    let (transform, inlier_indices) = if converged {
        match refine_transform(src, dst, &hyp_inliers, cfg.refine_rounds, tau) {
            Ok(r) if !r.degraded && r.inliers.len() >= hyp_inliers.len() => (r.transform, r.inliers),
            _ => (hypothesis, hyp_inliers),
        }
    } else {
        (hypothesis, hyp_inliers)
    };
    Ok(RegistrationResult {
        transform,
        inlier_indices,
        iterations_used: iterations,
        converged,
    })
}

/// RANSAC over a correspondence set between keypoint position lists.
pub fn ransac_register(
    src_keypoints: &[Point3],
    dst_keypoints: &[Point3],
    corr: &CorrespondenceSet,
    cfg: &RansacConfig,
) -> Result<RegistrationResult> {
    let mut src = Vec::with_capacity(corr.len());
    let mut dst = Vec::with_capacity(corr.len());
    for c in corr.iter() {
        let (Some(p), Some(q)) = (src_keypoints.get(c.src_index), dst_keypoints.get(c.dst_index)) else {
            return Err(Error::invalid(format!(
                "correspondence ({}, {}) out of range",
                c.src_index, c.dst_index
            )));
        };
        src.push(*p);
        dst.push(*q);
    }
    ransac_register_pairs(&src, &dst, cfg)
}
