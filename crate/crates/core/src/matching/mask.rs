use crate::error::{Error, Result};
use crate::matching::{CorrespondenceSet, Matcher, ScoreMatrix};
use crate::semantic::{scene_similarity, BmrSignature};

/// Integer scene-similarity matrix between two keypoint sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    values: Vec<u32>,
}

impl SimilarityMatrix {
    pub fn from_row_major(rows: usize, cols: usize, values: Vec<u32>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::invalid(format!(
                "{} values for a {rows}x{cols} similarity matrix",
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.values[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn submatrix(&self, row_idx: &[usize], col_idx: &[usize]) -> Self {
        let mut values = Vec::with_capacity(row_idx.len() * col_idx.len());
        for &r in row_idx {
            let row = self.row(r);
            values.extend(col_idx.iter().map(|&c| row[c]));
        }
        Self {
            rows: row_idx.len(),
            cols: col_idx.len(),
            values,
        }
    }
}

/// `S[i][j] = Θ(src_i, dst_j)`.
pub fn scene_similarity_matrix(src: &[BmrSignature], dst: &[BmrSignature]) -> Result<SimilarityMatrix> {
    let mut values = Vec::with_capacity(src.len() * dst.len());
    for a in src {
        for b in dst {
            values.push(scene_similarity(a, b)?);
        }
    }
    Ok(SimilarityMatrix {
        rows: src.len(),
        cols: dst.len(),
        values,
    })
}

/// Binary matrix with exactly `min(K, cols)` ones per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyMask {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl ConsistencyMask {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.bits[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[bool] {
        &self.bits[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_sum(&self, r: usize) -> usize {
        self.row(r).iter().filter(|b| **b).count()
    }
}

/// Keeps the `k` largest entries of every row; ties at the cutoff go to the
/// lowest column.
pub fn topk_mask(sim: &SimilarityMatrix, k: usize) -> Result<ConsistencyMask> {
    if k < 1 {
        return Err(Error::invalid("K must be at least 1"));
    }
    let (rows, cols) = (sim.rows, sim.cols);
    let mut bits = vec![false; rows * cols];
    let keep = k.min(cols);
    let mut order: Vec<usize> = Vec::with_capacity(cols);
    for r in 0..rows {
        let row = sim.row(r);
        order.clear();
        order.extend(0..cols);
        if keep < cols {
            order.select_nth_unstable_by(keep - 1, |&a, &b| row[b].cmp(&row[a]).then(a.cmp(&b)));
        }
        for &c in &order[..keep] {
            bits[r * cols + c] = true;
        }
    }
    Ok(ConsistencyMask { rows, cols, bits })
}

/// Matcher over `scores ⊙ topk_mask(sim, k)` for precomputed similarities.
pub fn mask_match_within(
    scores: &ScoreMatrix,
    sim: &SimilarityMatrix,
    k: usize,
    matcher: Matcher,
) -> Result<CorrespondenceSet> {
    if scores.rows() != sim.rows() || scores.cols() != sim.cols() {
        return Err(Error::invalid(format!(
            "score matrix {}x{} and similarity matrix {}x{} differ in shape",
            scores.rows(),
            scores.cols(),
            sim.rows(),
            sim.cols()
        )));
    }
    let mask = topk_mask(sim, k)?;
    Ok(matcher.select(&scores.masked(|r, c| mask.get(r, c))))
}

/// Mask matching: the matcher only sees, for each source keypoint, the `k`
/// target keypoints with the highest scene similarity.
pub fn mask_match(
    scores: &ScoreMatrix,
    src_bmr: &[BmrSignature],
    dst_bmr: &[BmrSignature],
    k: usize,
    matcher: Matcher,
) -> Result<CorrespondenceSet> {
    let sim = scene_similarity_matrix(src_bmr, dst_bmr)?;
    mask_match_within(scores, &sim, k, matcher)
}
