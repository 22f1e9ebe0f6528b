//! Point containers, rigid transforms and least-squares rigid alignment.

use nalgebra::{Matrix3, Vector3, SVD};

use crate::error::{Error, Result};
use crate::semantic::LabelAlphabet;

/// A point in metres.
pub type Point3 = nalgebra::Point3<f64>;

/// Index of a semantic category within a [`LabelAlphabet`].
pub type LabelId = u16;

/// A point cloud where every point carries one semantic label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPointCloud {
    points: Vec<Point3>,
    labels: Vec<LabelId>,
    alphabet: LabelAlphabet,
}

impl LabeledPointCloud {
    pub fn new(points: Vec<Point3>, labels: Vec<LabelId>, alphabet: LabelAlphabet) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        if let Some((i, _)) = points
            .iter()
            .enumerate()
            .find(|(_, p)| !p.coords.iter().all(|c| c.is_finite()))
        {
            return Err(Error::invalid(format!("point {i} has a non-finite coordinate")));
        }
        if let Some((i, l)) = labels
            .iter()
            .enumerate()
            .find(|(_, &l)| usize::from(l) >= alphabet.len())
        {
            return Err(Error::invalid(format!(
                "point {i} has label {l} outside an alphabet of {}",
                alphabet.len()
            )));
        }
        Ok(Self {
            points,
            labels,
            alphabet,
        })
    }

    pub fn empty(alphabet: LabelAlphabet) -> Self {
        Self {
            points: Vec::new(),
            labels: Vec::new(),
            alphabet,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn labels(&self) -> &[LabelId] {
        &self.labels
    }

    pub fn alphabet(&self) -> &LabelAlphabet {
        &self.alphabet
    }

    pub fn point(&self, i: usize) -> Point3 {
        self.points[i]
    }

    pub fn label(&self, i: usize) -> LabelId {
        self.labels[i]
    }

    /// Same geometry with a new label assignment.
    pub fn with_labels(&self, labels: Vec<LabelId>) -> Result<Self> {
        Self::new(self.points.clone(), labels, self.alphabet.clone())
    }

    /// Keeps the points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            alphabet: self.alphabet.clone(),
        }
    }

    pub fn into_parts(self) -> (Vec<Point3>, Vec<LabelId>, LabelAlphabet) {
        (self.points, self.labels, self.alphabet)
    }
}

/// Indices of keypoints within one [`LabeledPointCloud`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KeypointSet {
    indices: Vec<usize>,
}

impl KeypointSet {
    /// Validates uniqueness and range against a cloud of `cloud_len` points.
    pub fn new(indices: Vec<usize>, cloud_len: usize) -> Result<Self> {
        let mut seen = vec![false; cloud_len];
        for &i in &indices {
            if i >= cloud_len {
                return Err(Error::invalid(format!(
                    "keypoint index {i} out of range for cloud of {cloud_len}"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid(format!("duplicate keypoint index {i}")));
            }
        }
        Ok(Self { indices })
    }

    /// Every point of the cloud, in order.
    pub fn all(cloud_len: usize) -> Self {
        Self {
            indices: (0..cloud_len).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Keypoint positions looked up in `cloud`.
    pub fn positions(&self, cloud: &LabeledPointCloud) -> Vec<Point3> {
        self.indices.iter().map(|&i| cloud.point(i)).collect()
    }
}

/// A proper rigid motion `x -> R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    /// Tolerance used when validating `RᵀR = I` and `det R = 1`.
    pub const ORTHONORMAL_TOL: f64 = 1e-9;

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a transform, rejecting rotations that are not orthonormal with det +1.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let t = Self {
            rotation,
            translation,
        };
        if !t.is_valid() {
            return Err(Error::invalid("rotation is not a proper orthonormal matrix"));
        }
        Ok(t)
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Rotation by `angle` radians about `axis` (need not be normalised), then translation.
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        let axis = nalgebra::Unit::new_normalize(axis);
        let rotation = *nalgebra::Rotation3::from_axis_angle(&axis, angle).matrix();
        Self {
            rotation,
            translation,
        }
    }

    /// Rotation about +z, the usual case for gravity-aligned scans.
    pub fn from_yaw(yaw: f64, translation: Vector3<f64>) -> Self {
        Self::from_axis_angle(Vector3::z(), yaw, translation)
    }

    pub fn is_valid(&self) -> bool {
        let r = &self.rotation;
        let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
        self.rotation.iter().all(|v| v.is_finite())
            && self.translation.iter().all(|v| v.is_finite())
            && ortho <= Self::ORTHONORMAL_TOL
            && (r.determinant() - 1.0).abs() <= Self::ORTHONORMAL_TOL
    }

    pub fn apply(&self, p: &Point3) -> Point3 {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    /// Row-major 3×4 `[R | t]`.
    pub fn to_row_major_3x4(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        for r in 0..3 {
            for c in 0..3 {
                out[r * 4 + c] = self.rotation[(r, c)];
            }
            out[r * 4 + 3] = self.translation[r];
        }
        out
    }

    /// Inverse of [`to_row_major_3x4`](Self::to_row_major_3x4). The rotation is
    /// not re-validated; pose files written by other tools carry rounding.
    pub fn from_row_major_3x4(v: &[f64; 12]) -> Self {
        let rotation = Matrix3::new(v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10]);
        let translation = Vector3::new(v[3], v[7], v[11]);
        Self {
            rotation,
            translation,
        }
    }
}

/// Maps every point by `R p + t`; labels are carried over unchanged.
pub fn apply_transform(transform: &RigidTransform, cloud: &LabeledPointCloud) -> LabeledPointCloud {
    LabeledPointCloud {
        points: cloud.points.iter().map(|p| transform.apply(p)).collect(),
        labels: cloud.labels.clone(),
        alphabet: cloud.alphabet.clone(),
    }
}

/// Ratio of smallest to largest singular value below which an alignment is
/// considered rank deficient.
pub const KABSCH_DEGENERACY_RATIO: f64 = 1e-12;

/// Least-squares rigid transform mapping `src[i]` onto `dst[i]`.
///
/// Reflections are excluded by flipping the sign of the last singular
/// direction when `det(V Uᵀ) < 0`. Inputs whose cross-covariance has a second
/// singular value below [`KABSCH_DEGENERACY_RATIO`] times the largest (all
/// points collinear or coincident) are rejected.
pub fn kabsch(src: &[Point3], dst: &[Point3]) -> Result<RigidTransform> {
    if src.len() != dst.len() {
        return Err(Error::invalid(format!(
            "kabsch needs paired points, got {} and {}",
            src.len(),
            dst.len()
        )));
    }
    if src.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "kabsch needs at least 3 pairs, got {}",
            src.len()
        )));
    }
    kabsch_pairs(src.iter().zip(dst).map(|(a, b)| (*a, *b)))
}

fn kabsch_pairs(pairs: impl Iterator<Item = (Point3, Point3)> + Clone) -> Result<RigidTransform> {
    let mut n = 0usize;
    let mut cs = Vector3::zeros();
    let mut cd = Vector3::zeros();
    for (s, d) in pairs.clone() {
        cs += s.coords;
        cd += d.coords;
        n += 1;
    }
    let inv = 1.0 / n as f64;
    cs *= inv;
    cd *= inv;

    let mut h = Matrix3::zeros();
    for (s, d) in pairs {
        h += (s.coords - cs) * (d.coords - cd).transpose();
    }

    let svd = SVD::new(h, true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::DegenerateInput("SVD did not converge".into())),
    };
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    // Collinear configurations leave one non-zero singular value; a planar
    // point set still determines the rotation uniquely.
    if !(sv[0] > 0.0) || sv[1] < KABSCH_DEGENERACY_RATIO * sv[0] {
        return Err(Error::DegenerateInput(
            "points are collinear or coincident".into(),
        ));
    }

    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let correction = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d));
    let rotation = v * correction * u.transpose();
    let translation = cd - rotation * cs;
    Ok(RigidTransform {
        rotation,
        translation,
    })
}

/// Sum of squared residuals `Σ ‖T(src_i) − dst_i‖²`.
pub fn alignment_residual(t: &RigidTransform, src: &[Point3], dst: &[Point3]) -> f64 {
    src.iter()
        .zip(dst)
        .map(|(s, d)| (t.apply(s) - d).norm_squared())
        .sum()
}
