use crate::error::{Error, Result};
use crate::geometry::{LabelId, LabeledPointCloud, Point3};
use crate::spatial::SpatialIndex;

/// The set of labels found within `r_local` of a keypoint, stored as a bitset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LocalSignature {
    words: Vec<u64>,
}

impl LocalSignature {
    pub fn new(alphabet_size: usize) -> Self {
        Self {
            words: vec![0; alphabet_size.div_ceil(64)],
        }
    }

    pub fn from_labels(alphabet_size: usize, labels: impl IntoIterator<Item = LabelId>) -> Self {
        let mut s = Self::new(alphabet_size);
        for l in labels {
            s.insert(l);
        }
        s
    }

    pub fn insert(&mut self, label: LabelId) {
        let (w, b) = (usize::from(label) / 64, usize::from(label) % 64);
        if w >= self.words.len() {
            self.words.resize(w + 1, 0);
        }
        self.words[w] |= 1 << b;
    }

    pub fn contains(&self, label: LabelId) -> bool {
        let (w, b) = (usize::from(label) / 64, usize::from(label) % 64);
        self.words.get(w).is_some_and(|word| word & (1 << b) != 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.words
            .iter()
            .enumerate()
            .all(|(i, &w)| w & !other.words.get(i).copied().unwrap_or(0) == 0)
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = LabelId> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            (0..64)
                .filter(move |b| w & (1u64 << b) != 0)
                .map(move |b| (wi * 64 + b) as LabelId)
        })
    }
}

/// Labels of all cloud points within the closed ball of radius `r_local`.
///
/// `index` must have been built over `cloud.points()`.
pub fn compute_local_ss(
    cloud: &LabeledPointCloud,
    index: &SpatialIndex,
    keypoint: &Point3,
    r_local: f64,
) -> Result<LocalSignature> {
    if r_local.is_nan() || r_local <= 0.0 {
        return Err(Error::invalid(format!("r_local must be positive, got {r_local}")));
    }
    let mut sig = LocalSignature::new(cloud.alphabet().len());
    let labels = cloud.labels();
    index.for_each_in_ball(keypoint, r_local, |i| sig.insert(labels[i]));
    Ok(sig)
}

/// Two keypoints are locally consistent when their signatures share a label.
pub fn ls_consistent(a: &LocalSignature, b: &LocalSignature) -> bool {
    a.intersects(b)
}
