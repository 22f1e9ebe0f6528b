//! Per-(category, ring) saliency and the landmark-category selection built on it.
//!
//! `W[t][k] = 1 − |⋃ points in ring k of any landmark of category t| / |cloud|`.
//! A category whose landmarks cover most of the scene at every ring radius
//! localizes poorly and scores close to zero.

use crate::error::{Error, Result};
use crate::geometry::{LabelId, LabeledPointCloud};
use crate::semantic::{ring_index, BmrConfig, LandmarkSet};
use crate::spatial::SpatialIndex;

/// Categories whose mean saliency falls below this are not used as landmarks.
pub const DEFAULT_SALIENCY_THRESHOLD: f64 = 0.5;

/// `|S| × N` matrix with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl SaliencyMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, label: usize, ring: usize) -> f64 {
        self.values[label * self.cols + ring]
    }

    pub fn row(&self, label: usize) -> &[f64] {
        &self.values[label * self.cols..(label + 1) * self.cols]
    }

    /// Arithmetic mean over rings.
    pub fn mean_saliency(&self, label: usize) -> f64 {
        self.row(label).iter().sum::<f64>() / self.cols as f64
    }
}

pub fn compute_saliency(
    cloud: &LabeledPointCloud,
    landmarks: &LandmarkSet,
    cfg: &BmrConfig,
) -> Result<SaliencyMatrix> {
    if cloud.is_empty() {
        return Err(Error::invalid("saliency needs a non-empty cloud"));
    }
    cfg.validate()?;
    let rows = cloud.alphabet().len();
    let cols = cfg.rings;
    let n = cloud.len();
    let index = SpatialIndex::build(cloud.points());
    let mut values = vec![1.0; rows * cols];

    // covered[k * n + i]: point i lies in ring k of some landmark of the current category.
    let mut covered = vec![false; cols * n];
    let mut counts = vec![0usize; cols];
    for t in 0..rows {
        let members: Vec<usize> = (0..landmarks.len())
            .filter(|&i| usize::from(landmarks.labels()[i]) == t)
            .collect();
        if members.is_empty() {
            continue;
        }
        covered.fill(false);
        counts.fill(0);
        for &m in &members {
            let c = landmarks.centers()[m];
            index.for_each_in_ball(&c, cfg.max_radius(), |i| {
                if let Some(k) = ring_index((cloud.point(i) - c).norm(), cfg) {
                    let slot = &mut covered[k * n + i];
                    if !*slot {
                        *slot = true;
                        counts[k] += 1;
                    }
                }
            });
        }
        for k in 0..cols {
            values[t * cols + k] = 1.0 - counts[k] as f64 / n as f64;
        }
    }
    Ok(SaliencyMatrix { rows, cols, values })
}

/// Categories with mean saliency at or above `threshold`, excluding dynamic ones.
pub fn select_landmark_categories(
    cloud: &LabeledPointCloud,
    landmarks: &LandmarkSet,
    cfg: &BmrConfig,
    saliency_threshold: f64,
) -> Result<Vec<LabelId>> {
    if !(0.0..=1.0).contains(&saliency_threshold) {
        return Err(Error::invalid(format!(
            "saliency threshold must lie in [0, 1], got {saliency_threshold}"
        )));
    }
    let w = compute_saliency(cloud, landmarks, cfg)?;
    Ok(cloud
        .alphabet()
        .ids()
        .filter(|&t| !cloud.alphabet().is_dynamic(t))
        .filter(|&t| w.mean_saliency(usize::from(t)) >= saliency_threshold)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3;
    use crate::semantic::LabelAlphabet;
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeSet;

    fn alphabet() -> LabelAlphabet {
        LabelAlphabet::from_names(["ground", "pole", "car"]).unwrap()
    }

    #[test]
    fn empty_cloud_rejected() {
        let cloud = LabeledPointCloud::empty(alphabet());
        assert!(compute_saliency(&cloud, &LandmarkSet::default(), &BmrConfig::OUTDOOR).is_err());
    }

    #[test]
    fn category_without_landmarks_is_fully_salient() {
        let cloud = LabeledPointCloud::new(vec![Point3::origin(); 5], vec![0; 5], alphabet()).unwrap();
        let w = compute_saliency(&cloud, &LandmarkSet::default(), &BmrConfig::new(4, 1.0).unwrap()).unwrap();
        for t in 0..3 {
            assert!(w.row(t).iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn full_shell_coverage_gives_zero() {
        // Every point sits 2.5 m from the landmark: ring 2 with L = 1.
        let pts: Vec<_> = (0..36)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / 36.0;
                Point3::new(2.5 * a.cos(), 2.5 * a.sin(), 0.0)
            })
            .collect();
        let cloud = LabeledPointCloud::new(pts, vec![0; 36], alphabet()).unwrap();
        let lm = LandmarkSet::new(vec![Point3::origin()], vec![1], vec![10]).unwrap();
        let w = compute_saliency(&cloud, &lm, &BmrConfig::new(4, 1.0).unwrap()).unwrap();
        assert_eq!(w.get(1, 2), 0.0);
        assert_eq!(w.get(1, 0), 1.0);
        assert_eq!(w.get(1, 3), 1.0);
    }

    #[test]
    fn overlapping_shells_count_union() {
        // Ring 1 is [10, 20). A at x = 0 covers x = 10..=19; B at x = 15
        // covers x = 0..=5 and x = 25..=34. Union checked by enumeration.
        let pts: Vec<_> = (0..100).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        let cloud = LabeledPointCloud::new(pts.clone(), vec![0; 100], alphabet()).unwrap();
        let centers = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(15.0, 0.0, 0.0)];
        let lm = LandmarkSet::new(centers.clone(), vec![2, 2], vec![10, 10]).unwrap();
        let cfg = BmrConfig::new(3, 10.0).unwrap();
        let union: BTreeSet<usize> = (0..100)
            .filter(|&i| {
                centers.iter().any(|c| {
                    let d = (pts[i] - c).norm();
                    (10.0..20.0).contains(&d)
                })
            })
            .collect();
        assert_eq!(union.len(), 26);
        let w = compute_saliency(&cloud, &lm, &cfg).unwrap();
        assert_abs_diff_eq!(w.get(2, 1), 1.0 - union.len() as f64 / 100.0, epsilon = 1e-15);
    }

    #[test]
    fn hundred_points_thirty_covered() {
        // Two landmarks whose ring-0 balls overlap: A covers points 0..20,
        // B covers points 10..30, union = 30 distinct points → 0.70.
        let pts: Vec<_> = (0..100).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        let cloud = LabeledPointCloud::new(pts, vec![0; 100], alphabet()).unwrap();
        let lm = LandmarkSet::new(
            vec![Point3::new(9.5, 0.0, 0.0), Point3::new(19.5, 0.0, 0.0)],
            vec![1, 1],
            vec![10, 10],
        )
        .unwrap();
        let cfg = BmrConfig::new(1, 10.0).unwrap();
        let w = compute_saliency(&cloud, &lm, &cfg).unwrap();
        assert_abs_diff_eq!(w.get(1, 0), 0.70, epsilon = 1e-15);
    }

    #[test]
    fn ground_everywhere_is_excluded_and_rare_pole_kept() {
        // 41x41 ground grid at 1 m; ground landmarks on the same grid; one pole far away.
        let mut pts = Vec::new();
        for x in 0..41 {
            for y in 0..41 {
                pts.push(Point3::new(x as f64, y as f64, 0.0));
            }
        }
        let n = pts.len();
        let mut labels = vec![0; n];
        pts.push(Point3::new(300.0, 300.0, 0.0));
        labels.push(1);
        let cloud = LabeledPointCloud::new(pts.clone(), labels, alphabet()).unwrap();
        let mut centers: Vec<Point3> = pts[..n].to_vec();
        let mut lm_labels = vec![0; n];
        centers.push(Point3::new(300.0, 300.0, 0.0));
        lm_labels.push(1);
        let sizes = vec![10; centers.len()];
        let lm = LandmarkSet::new(centers, lm_labels, sizes).unwrap();
        let cfg = BmrConfig::new(10, 1.0).unwrap();
        let w = compute_saliency(&cloud, &lm, &cfg).unwrap();
        assert!(w.mean_saliency(0) < 0.01, "ground saliency {}", w.mean_saliency(0));
        assert!(w.mean_saliency(1) > 0.99);
        let picked = select_landmark_categories(&cloud, &lm, &cfg, DEFAULT_SALIENCY_THRESHOLD).unwrap();
        assert!(!picked.contains(&0));
        assert!(picked.contains(&1));
    }

    #[test]
    fn dynamic_categories_never_selected() {
        let mut a = alphabet();
        a.set_dynamic(2, true);
        let cloud = LabeledPointCloud::new(vec![Point3::origin(); 3], vec![0, 1, 2], a).unwrap();
        let picked = select_landmark_categories(&cloud, &LandmarkSet::default(), &BmrConfig::OUTDOOR, 0.5).unwrap();
        assert_eq!(picked, vec![0, 1]);
        assert!(select_landmark_categories(&cloud, &LandmarkSet::default(), &BmrConfig::OUTDOOR, 1.5).is_err());
    }
}
