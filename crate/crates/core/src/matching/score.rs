use crate::error::{Error, Result};
use crate::matching::DescriptorSet;

/// Dense `|P| × |Q|` match-score matrix with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ScoreMatrix {
    /// Row-major values; every entry must lie in `[0, 1]`.
    pub fn from_row_major(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::invalid(format!(
                "{} values for a {rows}x{cols} score matrix",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("score {v} outside [0, 1]")));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Rows `row_idx` × columns `col_idx`, in the given orders.
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

    /// Elementwise product with a 0/1 mask of the same shape.
    pub(crate) fn masked(&self, keep: impl Fn(usize, usize) -> bool) -> Self {
        let mut values = self.values.clone();
        for r in 0..self.rows {
            for c in 0..self.cols {
                if !keep(r, c) {
                    values[r * self.cols + c] = 0.0;
                }
            }
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            values,
        }
    }
}

/// `(1 + cos(src_i, dst_j)) / 2`, clamped to `[0, 1]`. Degenerate rows on
/// either side score zero everywhere.
pub fn score_matrix(src: &DescriptorSet, dst: &DescriptorSet) -> Result<ScoreMatrix> {
    if src.dim() != dst.dim() {
        return Err(Error::invalid(format!(
            "descriptor dimensions differ: {} vs {}",
            src.dim(),
            dst.dim()
        )));
    }
    let (rows, cols) = (src.len(), dst.len());
    let mut values = vec![0.0; rows * cols];
    for i in 0..rows {
        if src.is_degenerate(i) {
            continue;
        }
        let a = src.row(i);
        let out = &mut values[i * cols..(i + 1) * cols];
        for (j, slot) in out.iter_mut().enumerate() {
            if dst.is_degenerate(j) {
                continue;
            }
            let dot: f64 = a.iter().zip(dst.row(j)).map(|(x, y)| x * y).sum();
            *slot = ((1.0 + dot) * 0.5).clamp(0.0, 1.0);
        }
    }
    Ok(ScoreMatrix { rows, cols, values })
}
