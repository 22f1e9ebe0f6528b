//! Selection functions: turn a score matrix into correspondences.
//!
//! Zero scores carry no evidence, so a row (or column) whose best entry is
//! zero produces no correspondence. Ties break toward the lowest index.

use crate::matching::{Correspondence, CorrespondenceSet, ScoreMatrix};

/// A stateless selection function over a score matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Matcher {
    /// Row-wise argmax.
    #[default]
    NearestNeighbor,
    /// Pairs that are each other's argmax.
    MutualNearestNeighbor,
}

impl Matcher {
    pub fn name(&self) -> &'static str {
        match self {
            Matcher::NearestNeighbor => "nn",
            Matcher::MutualNearestNeighbor => "mnn",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nn" => Some(Matcher::NearestNeighbor),
            "mnn" => Some(Matcher::MutualNearestNeighbor),
            _ => None,
        }
    }

    /// `(row, col, score)` triples in row order.
    pub fn select_raw(&self, scores: &ScoreMatrix) -> Vec<(usize, usize, f64)> {
        match self {
            Matcher::NearestNeighbor => nn_raw(scores),
            Matcher::MutualNearestNeighbor => mnn_raw(scores),
        }
    }

    pub fn select(&self, scores: &ScoreMatrix) -> CorrespondenceSet {
        to_set(self.select_raw(scores))
    }
}

fn to_set(raw: Vec<(usize, usize, f64)>) -> CorrespondenceSet {
    raw.into_iter()
        .map(|(s, d, score)| Correspondence {
            src_index: s,
            dst_index: d,
            score,
            group_label: None,
        })
        .collect()
}

fn argmax(values: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.filter(|&(_, v)| v > 0.0)
}

fn row_argmax(scores: &ScoreMatrix, r: usize) -> Option<(usize, f64)> {
    argmax(scores.row(r).iter().copied())
}

fn col_argmax(scores: &ScoreMatrix, c: usize) -> Option<(usize, f64)> {
    argmax((0..scores.rows()).map(|r| scores.get(r, c)))
}

fn nn_raw(scores: &ScoreMatrix) -> Vec<(usize, usize, f64)> {
    (0..scores.rows())
        .filter_map(|r| row_argmax(scores, r).map(|(c, v)| (r, c, v)))
        .collect()
}

fn mnn_raw(scores: &ScoreMatrix) -> Vec<(usize, usize, f64)> {
    let col_best: Vec<Option<usize>> = (0..scores.cols())
        .map(|c| col_argmax(scores, c).map(|(r, _)| r))
        .collect();
    nn_raw(scores)
        .into_iter()
        .filter(|&(r, c, _)| col_best[c] == Some(r))
        .collect()
}

/// One correspondence per row at the row maximum.
pub fn select_nn(scores: &ScoreMatrix) -> CorrespondenceSet {
    Matcher::NearestNeighbor.select(scores)
}

/// Row maxima that are also column maxima.
pub fn select_mnn(scores: &ScoreMatrix) -> CorrespondenceSet {
    Matcher::MutualNearestNeighbor.select(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(rows: usize, cols: usize, v: &[f64]) -> ScoreMatrix {
        ScoreMatrix::from_row_major(rows, cols, v.to_vec()).unwrap()
    }

    #[test]
    fn single_entry() {
        assert_eq!(select_nn(&m(1, 1, &[0.5])).pairs(), vec![(0, 0)]);
    }

    #[test]
    fn tie_goes_to_lowest_column() {
        assert_eq!(select_nn(&m(1, 3, &[0.2, 0.9, 0.9])).pairs(), vec![(0, 1)]);
    }

    #[test]
    fn all_zero_row_yields_nothing() {
        assert_eq!(select_nn(&m(2, 2, &[0.0, 0.0, 0.3, 0.1])).pairs(), vec![(1, 0)]);
    }

    #[test]
    fn mnn_diagonal() {
        let s = m(3, 3, &[1.0, 0.1, 0.1, 0.1, 1.0, 0.1, 0.1, 0.1, 1.0]);
        assert_eq!(select_mnn(&s).pairs(), vec![(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn mnn_drops_unreciprocated() {
        // Row 0 prefers column 0, but column 0 prefers row 1.
        let s = m(2, 2, &[0.9, 0.8, 0.95, 0.1]);
        assert_eq!(select_nn(&s).pairs(), vec![(0, 0), (1, 0)]);
        assert_eq!(select_mnn(&s).pairs(), vec![(1, 0)]);
    }

    #[test]
    fn matchers_agree_with_exhaustive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..20 {
            let (rows, cols) = (50, 60);
            // Coarse values force plenty of ties.
            let v: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(0..20) as f64 / 19.0).collect();
            let s = m(rows, cols, &v);
            let mut nn = Vec::new();
            for r in 0..rows {
                let mut best = 0;
                for c in 1..cols {
                    if v[r * cols + c] > v[r * cols + best] {
                        best = c;
                    }
                }
                if v[r * cols + best] > 0.0 {
                    nn.push((r, best));
                }
            }
            assert_eq!(select_nn(&s).pairs(), nn);
            let mnn: Vec<_> = nn
                .iter()
                .copied()
                .filter(|&(r, c)| {
                    let mut best = 0;
                    for rr in 1..rows {
                        if v[rr * cols + c] > v[best * cols + c] {
                            best = rr;
                        }
                    }
                    best == r
                })
                .collect();
            assert_eq!(select_mnn(&s).pairs(), mnn);
            let nn_set = select_nn(&s);
            assert!(select_mnn(&s).iter().all(|c| nn_set.contains_pair(c.src_index, c.dst_index)));
        }
    }
}
