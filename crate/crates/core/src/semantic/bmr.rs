//! Binary multi-ring semantic signatures.
//!
//! Around each keypoint the scene is divided into `N` concentric rings of
//! width `L`. Ring `k` (zero-based) covers distances in `[kL, (k+1)L)`. A
//! signature has one row per semantic category and one column per ring; a bit
//! is set when a landmark of that category falls inside that ring. Because
//! only distances enter the encoding it is invariant to rigid motion.

use crate::error::{Error, Result};
use crate::geometry::{LabelId, Point3};
use crate::semantic::LandmarkSet;

/// Ring layout of a signature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmrConfig {
    /// Number of rings, `N`.
    pub rings: usize,
    /// Radial width of every ring in metres, `L`.
    pub ring_width: f64,
}

impl BmrConfig {
    /// Outdoor LiDAR setting: 33 rings of 1.5 m.
    pub const OUTDOOR: BmrConfig = BmrConfig {
        rings: 33,
        ring_width: 1.5,
    };
    /// Indoor RGB-D setting: 10 rings of 20 cm.
    pub const INDOOR: BmrConfig = BmrConfig {
        rings: 10,
        ring_width: 0.2,
    };

    pub fn new(rings: usize, ring_width: f64) -> Result<Self> {
        let cfg = Self { rings, ring_width };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rings < 1 {
            return Err(Error::invalid("bmr ring count must be at least 1"));
        }
        if !(self.ring_width > 0.0) || !self.ring_width.is_finite() {
            return Err(Error::invalid(format!(
                "bmr ring width must be positive, got {}",
                self.ring_width
            )));
        }
        Ok(())
    }

    /// Outer radius of the last ring, `N·L` (exclusive).
    pub fn max_radius(&self) -> f64 {
        self.rings as f64 * self.ring_width
    }
}

impl Default for BmrConfig {
    fn default() -> Self {
        Self::OUTDOOR
    }
}

/// Zero-based ring containing `distance`, or `None` beyond the last ring.
///
/// The bounds are evaluated as `k·L ≤ d < (k+1)·L` exactly, so a distance of
/// precisely `L` lands in ring 1, not ring 0.
pub fn ring_index(distance: f64, cfg: &BmrConfig) -> Option<usize> {
    if distance.is_nan() || distance < 0.0 {
        return None;
    }
    let l = cfg.ring_width;
    let guess = (distance / l).floor();
    if !guess.is_finite() || guess > cfg.rings as f64 {
        return None;
    }
    let mut k = guess as usize;
    // Division can round across a boundary; settle on the product form.
    if k > 0 && k as f64 * l > distance {
        k -= 1;
    } else if (k + 1) as f64 * l <= distance {
        k += 1;
    }
    (k < cfg.rings).then_some(k)
}

/// `|S| × N` binary matrix, bit-packed row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BmrSignature {
    rows: usize,
    cols: usize,
    words: Vec<u64>,
}

impl BmrSignature {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            words: vec![0; (rows * cols).div_ceil(64)],
        }
    }

    /// Number of categories.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of rings.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, label: usize, ring: usize) -> bool {
        assert!(label < self.rows && ring < self.cols, "bmr index out of range");
        let bit = label * self.cols + ring;
        self.words[bit / 64] & (1 << (bit % 64)) != 0
    }

    pub fn set(&mut self, label: usize, ring: usize) {
        assert!(label < self.rows && ring < self.cols, "bmr index out of range");
        let bit = label * self.cols + ring;
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Row-major 0/1 values.
    pub fn to_dense(&self) -> Vec<u8> {
        (0..self.rows)
            .flat_map(|t| (0..self.cols).map(move |k| (t, k)))
            .map(|(t, k)| u8::from(self.get(t, k)))
            .collect()
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    /// Popcount of the elementwise AND; shapes must already agree.
    pub(crate) fn and_count(&self, other: &Self) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }
}

/// Signature of one keypoint against a landmark set.
pub fn compute_bmr_ss(
    keypoint: &Point3,
    landmarks: &LandmarkSet,
    cfg: &BmrConfig,
    alphabet_size: usize,
) -> BmrSignature {
    let mut sig = BmrSignature::zeros(alphabet_size, cfg.rings);
    for (center, &label) in landmarks.centers().iter().zip(landmarks.labels()) {
        let label = usize::from(label);
        if label >= alphabet_size {
            continue;
        }
        if let Some(k) = ring_index((center - keypoint).norm(), cfg) {
            sig.set(label, k);
        }
    }
    sig
}

/// Number of (category, ring) cells occupied in both signatures.
pub fn scene_similarity(a: &BmrSignature, b: &BmrSignature) -> Result<u32> {
    if !a.same_shape(b) {
        return Err(Error::invalid(format!(
            "signature shapes differ: {}x{} vs {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(a.and_count(b))
}

/// Both keypoints see a landmark of category `label` in ring `ring`.
pub fn rws_consistent(a: &BmrSignature, b: &BmrSignature, label: LabelId, ring: usize) -> Result<bool> {
    let t = usize::from(label);
    if !a.same_shape(b) {
        return Err(Error::invalid("signature shapes differ"));
    }
    if t >= a.rows || ring >= a.cols {
        return Err(Error::invalid(format!(
            "cell ({t}, {ring}) outside a {}x{} signature",
            a.rows, a.cols
        )));
    }
    Ok(a.get(t, ring) && b.get(t, ring))
}
