//! Landmark extraction: per-category euclidean clustering for outdoor scenes,
//! voxel downsampling for indoor scenes.

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::geometry::{LabelId, LabeledPointCloud, Point3, RigidTransform};
use crate::semantic::LabelAlphabet;
use crate::spatial::SpatialIndex;

/// Cluster centroids with their category and support size.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LandmarkSet {
    centers: Vec<Point3>,
    labels: Vec<LabelId>,
    cluster_sizes: Vec<usize>,
}

impl LandmarkSet {
    pub fn new(centers: Vec<Point3>, labels: Vec<LabelId>, cluster_sizes: Vec<usize>) -> Result<Self> {
        if centers.len() != labels.len() || centers.len() != cluster_sizes.len() {
            return Err(Error::invalid("landmark sequences must have equal length"));
        }
        Ok(Self {
            centers,
            labels,
            cluster_sizes,
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Point3] {
        &self.centers
    }

    pub fn labels(&self) -> &[LabelId] {
        &self.labels
    }

    pub fn cluster_sizes(&self) -> &[usize] {
        &self.cluster_sizes
    }

    /// Keeps only landmarks whose label satisfies `keep`.
    pub fn filter_labels(&self, keep: impl Fn(LabelId) -> bool) -> Self {
        let mut out = Self::default();
        for i in 0..self.len() {
            if keep(self.labels[i]) {
                out.centers.push(self.centers[i]);
                out.labels.push(self.labels[i]);
                out.cluster_sizes.push(self.cluster_sizes[i]);
            }
        }
        out
    }

    pub fn transformed(&self, t: &RigidTransform) -> Self {
        Self {
            centers: self.centers.iter().map(|c| t.apply(c)).collect(),
            labels: self.labels.clone(),
            cluster_sizes: self.cluster_sizes.clone(),
        }
    }

    fn push(&mut self, center: Point3, label: LabelId, size: usize) {
        self.centers.push(center);
        self.labels.push(label);
        self.cluster_sizes.push(size);
    }
}

/// Euclidean clustering parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterParams {
    /// Linking distance for categories without an explicit entry.
    pub default_radius: f64,
    /// Per-category linking distance.
    pub radii: BTreeMap<LabelId, f64>,
    /// Components with fewer points are discarded.
    pub min_cluster_size: usize,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            default_radius: 0.5,
            radii: BTreeMap::new(),
            min_cluster_size: 10,
        }
    }
}

impl ClusterParams {
    /// Thin objects (poles, signs, trunks) link at 0.5 m, vehicles at 1.0 m.
    pub fn outdoor_defaults(alphabet: &LabelAlphabet) -> Self {
        let mut p = Self::default();
        for (name, r) in [
            ("pole", 0.5),
            ("traffic-sign", 0.5),
            ("trunk", 0.5),
            ("car", 1.0),
            ("truck", 1.0),
        ] {
            if let Some(id) = alphabet.id_of(name) {
                p.radii.insert(id, r);
            }
        }
        p
    }

    pub fn radius_for(&self, label: LabelId) -> f64 {
        self.radii.get(&label).copied().unwrap_or(self.default_radius)
    }

    pub fn validate(&self) -> Result<()> {
        let all_positive = std::iter::once(self.default_radius)
            .chain(self.radii.values().copied())
            .all(|r| r > 0.0 && r.is_finite());
        if !all_positive {
            return Err(Error::invalid("cluster radii must be positive"));
        }
        Ok(())
    }
}

/// Centroid of `pts` summed in lexicographic order, so the result does not
/// depend on how the caller ordered the cloud.
fn canonical_centroid(pts: &mut [Point3]) -> Point3 {
    pts.sort_by(|a, b| {
        a.x.total_cmp(&b.x)
            .then(a.y.total_cmp(&b.y))
            .then(a.z.total_cmp(&b.z))
    });
    let sum = pts.iter().fold(nalgebra::Vector3::zeros(), |acc, p| acc + p.coords);
    Point3::from(sum / pts.len() as f64)
}

fn lexicographic(a: &Point3, b: &Point3) -> std::cmp::Ordering {
    a.x.total_cmp(&b.x)
        .then(a.y.total_cmp(&b.y))
        .then(a.z.total_cmp(&b.z))
}

/// Connected components of each selected category under its linking radius,
/// reported as centroids. Output is sorted by category, then centroid.
pub fn cluster_landmarks(
    cloud: &LabeledPointCloud,
    params: &ClusterParams,
    categories: &[LabelId],
) -> Result<LandmarkSet> {
    params.validate()?;
    let mut cats = categories.to_vec();
    cats.sort_unstable();
    cats.dedup();

    let mut out = LandmarkSet::default();
    for &cat in &cats {
        let members: Vec<usize> = (0..cloud.len()).filter(|&i| cloud.label(i) == cat).collect();
        if members.len() < params.min_cluster_size.max(1) {
            continue;
        }
        let sub: Vec<Point3> = members.iter().map(|&i| cloud.point(i)).collect();
        let index = SpatialIndex::build(&sub);
        let radius = params.radius_for(cat);

        let mut visited = vec![false; sub.len()];
        let mut queue = VecDeque::new();
        let mut found = Vec::new();
        for seed in 0..sub.len() {
            if visited[seed] {
                continue;
            }
            visited[seed] = true;
            queue.push_back(seed);
            let mut component = Vec::new();
            while let Some(i) = queue.pop_front() {
                component.push(sub[i]);
                index.for_each_in_ball(&sub[i], radius, |j| {
                    if !visited[j] {
                        visited[j] = true;
                        queue.push_back(j);
                    }
                });
            }
            if component.len() >= params.min_cluster_size {
                let size = component.len();
                found.push((canonical_centroid(&mut component), size));
            }
        }
        found.sort_by(|a, b| lexicographic(&a.0, &b.0));
        for (c, size) in found {
            out.push(c, cat, size);
        }
    }
    Ok(out)
}

/// One landmark per occupied (voxel, category) cell at the cell's centroid.
pub fn voxel_landmarks(cloud: &LabeledPointCloud, voxel: f64) -> Result<LandmarkSet> {
    if !(voxel > 0.0) || !voxel.is_finite() {
        return Err(Error::invalid(format!("voxel size must be positive, got {voxel}")));
    }
    let mut cells: HashMap<(i64, i64, i64, LabelId), Vec<Point3>> = HashMap::new();
    for (p, &l) in cloud.points().iter().zip(cloud.labels()) {
        let key = (
            (p.x / voxel).floor() as i64,
            (p.y / voxel).floor() as i64,
            (p.z / voxel).floor() as i64,
            l,
        );
        cells.entry(key).or_default().push(*p);
    }
    let mut keys: Vec<_> = cells.keys().copied().collect();
    keys.sort_unstable_by_key(|k| (k.3, k.0, k.1, k.2));
    let mut out = LandmarkSet::default();
    for k in keys {
        let mut pts = cells.remove(&k).unwrap_or_default();
        let size = pts.len();
        out.push(canonical_centroid(&mut pts), k.3, size);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn alphabet() -> LabelAlphabet {
        LabelAlphabet::from_names(["ground", "pole"]).unwrap()
    }

    fn blob(center: Point3, n: usize, spread: f64, rng: &mut impl Rng) -> Vec<Point3> {
        (0..n)
            .map(|_| {
                center
                    + nalgebra::Vector3::new(
                        rng.random_range(-spread..spread),
                        rng.random_range(-spread..spread),
                        rng.random_range(-spread..spread),
                    )
            })
            .collect()
    }

    #[test]
    fn no_points_of_category_gives_empty_set() {
        let cloud = LabeledPointCloud::new(vec![Point3::origin(); 20], vec![0; 20], alphabet()).unwrap();
        let lm = cluster_landmarks(&cloud, &ClusterParams::default(), &[1]).unwrap();
        assert!(lm.is_empty());
    }

    #[test]
    fn two_separated_blobs_give_two_centroids() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let a = blob(Point3::new(0., 0., 0.), 10, 0.2, &mut rng);
        let b = blob(Point3::new(10., 0., 0.), 10, 0.2, &mut rng);
        let mean = |v: &[Point3]| Point3::from(v.iter().fold(nalgebra::Vector3::zeros(), |s, p| s + p.coords) / v.len() as f64);
        let (ma, mb) = (mean(&a), mean(&b));
        let pts: Vec<_> = a.into_iter().chain(b).collect();
        let cloud = LabeledPointCloud::new(pts, vec![1; 20], alphabet()).unwrap();
        let params = ClusterParams {
            default_radius: 1.0,
            ..ClusterParams::default()
        };
        let lm = cluster_landmarks(&cloud, &params, &[1]).unwrap();
        assert_eq!(lm.len(), 2);
        assert_eq!(lm.cluster_sizes(), &[10, 10]);
        assert_abs_diff_eq!(lm.centers()[0], ma, epsilon = 1e-12);
        assert_abs_diff_eq!(lm.centers()[1], mb, epsilon = 1e-12);
        assert_eq!(lm.labels(), &[1, 1]);
    }

    #[test]
    fn radius_below_spacing_fragments_into_nothing() {
        // 3x4 grid with 1 m spacing; a 0.5 m radius leaves every point alone.
        let pts: Vec<_> = (0..12).map(|i| Point3::new((i % 3) as f64, (i / 3) as f64, 0.0)).collect();
        let cloud = LabeledPointCloud::new(pts, vec![1; 12], alphabet()).unwrap();
        let params = ClusterParams {
            default_radius: 0.5,
            min_cluster_size: 5,
            ..ClusterParams::default()
        };
        assert!(cluster_landmarks(&cloud, &params, &[1]).unwrap().is_empty());
        let params = ClusterParams {
            default_radius: 1.0,
            min_cluster_size: 5,
            ..ClusterParams::default()
        };
        assert_eq!(cluster_landmarks(&cloud, &params, &[1]).unwrap().len(), 1);
    }

    #[test]
    fn order_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut pts = Vec::new();
        let mut labels = Vec::new();
        for c in 0..6 {
            let b = blob(Point3::new(c as f64 * 4.0, (c % 2) as f64 * 3.0, 0.), 15, 0.5, &mut rng);
            labels.extend(std::iter::repeat_n((c % 2) as LabelId, b.len()));
            pts.extend(b);
        }
        let cloud = LabeledPointCloud::new(pts.clone(), labels.clone(), alphabet()).unwrap();
        let params = ClusterParams::default();
        let base = cluster_landmarks(&cloud, &params, &[0, 1]).unwrap();
        let mut order: Vec<usize> = (0..pts.len()).collect();
        for _ in 0..5 {
            order.shuffle(&mut rng);
            let shuffled = cloud.select(&order);
            assert_eq!(cluster_landmarks(&shuffled, &params, &[1, 0]).unwrap(), base);
        }
    }

    #[test]
    fn per_category_radius() {
        let a = LabelAlphabet::outdoor_default();
        let p = ClusterParams::outdoor_defaults(&a);
        assert_eq!(p.radius_for(a.id_of("car").unwrap()), 1.0);
        assert_eq!(p.radius_for(a.id_of("pole").unwrap()), 0.5);
        assert_eq!(p.min_cluster_size, 10);
        let bad = ClusterParams {
            default_radius: 0.0,
            ..ClusterParams::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn voxel_landmarks_keep_every_category() {
        let pts = vec![
            Point3::new(0.01, 0.01, 0.01),
            Point3::new(0.02, 0.02, 0.02),
            Point3::new(0.03, 0.01, 0.01),
            Point3::new(0.6, 0.0, 0.0),
        ];
        let cloud = LabeledPointCloud::new(pts, vec![0, 0, 1, 0], alphabet()).unwrap();
        let lm = voxel_landmarks(&cloud, 0.25).unwrap();
        assert_eq!(lm.len(), 3);
        assert_eq!(lm.labels(), &[0, 0, 1]);
        assert_eq!(lm.cluster_sizes(), &[2, 1, 1]);
        assert!(voxel_landmarks(&cloud, 0.0).is_err());
    }
}
