//! Fast point feature histograms (FPFH).
//!
//! Normals come from local PCA. For each keypoint every normal taking part in
//! its descriptor is flipped to agree with the keypoint normal, and the
//! keypoint normal points away from the centroid of its neighbourhood. This
//! keeps the histogram covariant with rigid motion without a viewpoint.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{KeypointSet, LabeledPointCloud, Point3};
use crate::spatial::SpatialIndex;

/// Bins per angular feature.
pub const FPFH_BINS: usize = 11;
/// Descriptor length: three angular features with [`FPFH_BINS`] bins each.
pub const FPFH_DIM: usize = 3 * FPFH_BINS;
/// Keypoints with fewer neighbours than this get a degenerate descriptor.
pub const MIN_FEATURE_NEIGHBORS: usize = 5;

/// One fixed-length feature per keypoint; rows are L2-normalised.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSet {
    dim: usize,
    values: Vec<f64>,
    degenerate: Vec<bool>,
}

impl DescriptorSet {
    /// Normalises each row; all-zero rows are flagged degenerate.
    pub fn from_rows(dim: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * dim);
        let mut degenerate = Vec::with_capacity(rows.len());
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::invalid(format!("descriptor row {i} has length {}, expected {dim}", row.len())));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("descriptor row {i} is not finite")));
            }
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                values.extend(row.iter().map(|v| v / norm));
                degenerate.push(false);
            } else {
                values.extend(std::iter::repeat_n(0.0, dim));
                degenerate.push(true);
            }
        }
        Ok(Self {
            dim,
            values,
            degenerate,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.degenerate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degenerate.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_degenerate(&self, i: usize) -> bool {
        self.degenerate[i]
    }

    pub fn degenerate_count(&self) -> usize {
        self.degenerate.iter().filter(|d| **d).count()
    }
}

fn pca_normal(points: &[Point3], neighbors: &[usize]) -> Option<Vector3<f64>> {
    if neighbors.len() < 3 {
        return None;
    }
    let n = neighbors.len() as f64;
    let mean = neighbors.iter().fold(Vector3::zeros(), |s, &i| s + points[i].coords) / n;
    let mut cov = Matrix3::zeros();
    for &i in neighbors {
        let d = points[i].coords - mean;
        cov += d * d.transpose();
    }
    cov /= n;
    let eig = SymmetricEigen::new(cov);
    let (mut k, mut best) = (0, f64::INFINITY);
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        if v < best {
            best = v;
            k = i;
        }
    }
    let normal = eig.eigenvectors.column(k).into_owned();
    let len = normal.norm();
    (len > 0.0 && len.is_finite()).then(|| normal / len)
}

/// Angular pair features `(theta, alpha, phi)` for an oriented point pair.
fn pair_features(p1: &Point3, n1: &Vector3<f64>, p2: &Point3, n2: &Vector3<f64>) -> Option<[f64; 3]> {
    let mut dp = p2 - p1;
    let dist = dp.norm();
    if dist <= 0.0 {
        return None;
    }
    dp /= dist;
    let angle1 = n1.dot(&dp);
    let angle2 = n2.dot(&dp);
    // Use as source the point whose normal is closer to the connecting line.
    let (ns, nt, d, phi) = if angle1.abs().acos() > angle2.abs().acos() {
        (n2, n1, -dp, -angle2)
    } else {
        (n1, n2, dp, angle1)
    };
    let v = d.cross(ns);
    let vn = v.norm();
    if vn <= 0.0 {
        return None;
    }
    let v = v / vn;
    let w = ns.cross(&v);
    let alpha = v.dot(nt);
    let theta = w.dot(nt).atan2(ns.dot(nt));
    Some([theta, alpha, phi])
}

fn bin(value: f64, lo: f64, hi: f64) -> usize {
    let b = ((value - lo) / (hi - lo) * FPFH_BINS as f64).floor();
    (b.max(0.0) as usize).min(FPFH_BINS - 1)
}

struct Normals<'a> {
    points: &'a [Point3],
    index: &'a SpatialIndex,
    radius: f64,
    cache: Vec<Option<Option<Vector3<f64>>>>,
    scratch: Vec<usize>,
}

impl Normals<'_> {
    fn get(&mut self, i: usize) -> Option<Vector3<f64>> {
        if let Some(n) = self.cache[i] {
            return n;
        }
        self.scratch.clear();
        let scratch = &mut self.scratch;
        self.index.for_each_in_ball(&self.points[i], self.radius, |j| scratch.push(j));
        let n = pca_normal(self.points, &self.scratch);
        self.cache[i] = Some(n);
        n
    }
}

/// Simplified point feature histogram of `center` against `neighbors`.
fn spfh(
    points: &[Point3],
    center: usize,
    neighbors: &[usize],
    oriented: &dyn Fn(usize) -> Option<Vector3<f64>>,
) -> [f64; FPFH_DIM] {
    let mut hist = [0.0; FPFH_DIM];
    let Some(nc) = oriented(center) else {
        return hist;
    };
    let mut feats = Vec::with_capacity(neighbors.len());
    for &j in neighbors {
        if j == center {
            continue;
        }
        if let Some(nj) = oriented(j) {
            if let Some(f) = pair_features(&points[center], &nc, &points[j], &nj) {
                feats.push(f);
            }
        }
    }
    if feats.is_empty() {
        return hist;
    }
    let inc = 100.0 / feats.len() as f64;
    for [theta, alpha, phi] in feats {
        hist[bin(theta, -std::f64::consts::PI, std::f64::consts::PI)] += inc;
        hist[FPFH_BINS + bin(alpha, -1.0, 1.0)] += inc;
        hist[2 * FPFH_BINS + bin(phi, -1.0, 1.0)] += inc;
    }
    hist
}

/// 33-bin FPFH descriptors for `keypoints`.
///
/// `index` must be built over `cloud.points()`. Keypoints with fewer than
/// [`MIN_FEATURE_NEIGHBORS`] neighbours within `feature_radius`, or without a
/// well-defined normal, receive a zero row flagged degenerate.
pub fn compute_fpfh(
    cloud: &LabeledPointCloud,
    index: &SpatialIndex,
    keypoints: &KeypointSet,
    normal_radius: f64,
    feature_radius: f64,
) -> Result<DescriptorSet> {
    if !(normal_radius > 0.0) || !(feature_radius > 0.0) {
        return Err(Error::invalid("descriptor radii must be positive"));
    }
    if cloud.is_empty() {
        return Err(Error::invalid("cannot describe keypoints of an empty cloud"));
    }
    let points = cloud.points();
    let mut normals = Normals {
        points,
        index,
        radius: normal_radius,
        cache: vec![None; points.len()],
        scratch: Vec::new(),
    };
    let mut neighbor_cache: std::collections::HashMap<usize, Vec<usize>> = std::collections::HashMap::new();
    let mut neighbors_of = |i: usize| -> Vec<usize> {
        neighbor_cache
            .entry(i)
            .or_insert_with(|| index.radius_neighbors(&points[i], feature_radius).unwrap_or_default())
            .clone()
    };

    let mut rows = Vec::with_capacity(keypoints.len());
    for &kp in keypoints.indices() {
        let nbrs = neighbors_of(kp);
        let others: Vec<usize> = nbrs.iter().copied().filter(|&j| j != kp).collect();
        let Some(raw_kp_normal) = normals.get(kp) else {
            rows.push(vec![0.0; FPFH_DIM]);
            continue;
        };
        if others.len() < MIN_FEATURE_NEIGHBORS {
            rows.push(vec![0.0; FPFH_DIM]);
            continue;
        }
        let centroid = nbrs.iter().fold(Vector3::zeros(), |s, &j| s + points[j].coords) / nbrs.len() as f64;
        let kp_normal = if raw_kp_normal.dot(&(points[kp].coords - centroid)) < 0.0 {
            -raw_kp_normal
        } else {
            raw_kp_normal
        };

        // Gather every normal this descriptor touches, oriented to the keypoint.
        let mut involved: Vec<usize> = others.clone();
        let mut second: Vec<Vec<usize>> = Vec::with_capacity(others.len());
        for &j in &others {
            let nj = neighbors_of(j);
            involved.extend(nj.iter().copied());
            second.push(nj);
        }
        involved.sort_unstable();
        involved.dedup();
        let mut oriented_map = std::collections::HashMap::with_capacity(involved.len() + 1);
        oriented_map.insert(kp, Some(kp_normal));
        for &j in &involved {
            if j == kp {
                continue;
            }
            let n = normals.get(j).map(|n| if n.dot(&kp_normal) < 0.0 { -n } else { n });
            oriented_map.insert(j, n);
        }
        let oriented = |j: usize| oriented_map.get(&j).copied().flatten();

        let mut fpfh = spfh(points, kp, &nbrs, &oriented);
        let mut acc = [0.0; FPFH_DIM];
        let mut used = 0usize;
        for (&j, nj) in others.iter().zip(&second) {
            let d = (points[j] - points[kp]).norm();
            if d <= 1e-12 || oriented(j).is_none() {
                continue;
            }
            let h = spfh(points, j, nj, &oriented);
            for (a, v) in acc.iter_mut().zip(h) {
                *a += v / d;
            }
            used += 1;
        }
        if used > 0 {
            for (f, a) in fpfh.iter_mut().zip(acc) {
                *f += a / used as f64;
            }
        }
        rows.push(fpfh.to_vec());
    }
    DescriptorSet::from_rows(FPFH_DIM, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{apply_transform, RigidTransform};
    use crate::semantic::LabelAlphabet;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(points: Vec<Point3>) -> LabeledPointCloud {
        let n = points.len();
        LabeledPointCloud::new(points, vec![0; n], LabelAlphabet::from_names(["x"]).unwrap()).unwrap()
    }

    fn describe(c: &LabeledPointCloud, kp: usize) -> DescriptorSet {
        let idx = SpatialIndex::build(c.points());
        compute_fpfh(c, &idx, &KeypointSet::new(vec![kp], c.len()).unwrap(), 0.3, 0.6).unwrap()
    }

    fn distance(a: &DescriptorSet, b: &DescriptorSet) -> f64 {
        a.row(0).iter().zip(b.row(0)).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    fn bumpy_patch(rng: &mut impl Rng) -> Vec<Point3> {
        let mut pts = vec![Point3::new(0.0, 0.0, 0.0)];
        for _ in 0..800 {
            let x: f64 = rng.random_range(-1.0..1.0);
            let y: f64 = rng.random_range(-1.0..1.0);
            pts.push(Point3::new(x, y, 0.3 * (2.0 * x).sin() * (1.5 * y).cos() + 0.2 * x * x));
        }
        pts
    }

    fn planar_patch(rng: &mut impl Rng) -> Vec<Point3> {
        let mut pts = vec![Point3::new(0.0, 0.0, 0.0)];
        for _ in 0..800 {
            pts.push(Point3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0));
        }
        pts
    }

    fn spherical_patch(rng: &mut impl Rng) -> Vec<Point3> {
        // Cap of a sphere with radius 0.5 whose apex is the keypoint.
        let mut pts = vec![Point3::new(0.0, 0.0, 0.0)];
        while pts.len() < 801 {
            let v: Vector3<f64> = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let n = v.norm();
            if n < 1e-3 || n > 1.0 {
                continue;
            }
            let p = v / n * 0.5;
            pts.push(Point3::new(p.x, p.y, p.z - 0.5));
        }
        pts
    }

    #[test]
    fn congruent_patches_share_descriptor() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let c = cloud(bumpy_patch(&mut rng));
        let base = describe(&c, 0);
        assert!(!base.is_degenerate(0));
        for _ in 0..5 {
            let t = RigidTransform::from_axis_angle(
                Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                rng.random_range(-3.0..3.0),
                Vector3::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)),
            );
            let moved = apply_transform(&t, &c);
            assert!(distance(&base, &describe(&moved, 0)) < 1e-6);
        }
    }

    #[test]
    fn plane_and_sphere_are_told_apart() {
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let p1 = describe(&cloud(planar_patch(&mut rng)), 0);
        let p2 = describe(&cloud(planar_patch(&mut rng)), 0);
        let s = describe(&cloud(spherical_patch(&mut rng)), 0);
        let plane_plane = distance(&p1, &p2);
        let plane_sphere = distance(&p1, &s);
        assert!(plane_sphere > plane_plane, "{plane_sphere} <= {plane_plane}");
    }

    #[test]
    fn isolated_keypoint_is_degenerate() {
        let mut pts = vec![Point3::new(100.0, 0.0, 0.0)];
        pts.extend((0..50).map(|i| Point3::new(i as f64 * 0.05, (i % 7) as f64 * 0.05, 0.0)));
        let d = describe(&cloud(pts), 0);
        assert!(d.is_degenerate(0));
        assert!(d.row(0).iter().all(|&v| v == 0.0));
        assert_eq!(d.dim(), FPFH_DIM);
    }

    #[test]
    fn rows_are_unit_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let c = cloud(bumpy_patch(&mut rng));
        let idx = SpatialIndex::build(c.points());
        let kps = KeypointSet::new((0..40).collect(), c.len()).unwrap();
        let d = compute_fpfh(&c, &idx, &kps, 0.3, 0.6).unwrap();
        for i in 0..d.len() {
            if !d.is_degenerate(i) {
                let n: f64 = d.row(i).iter().map(|v| v * v).sum();
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bad_radii_rejected() {
        let c = cloud(vec![Point3::origin()]);
        let idx = SpatialIndex::build(c.points());
        assert!(compute_fpfh(&c, &idx, &KeypointSet::all(1), 0.0, 1.0).is_err());
    }
}
