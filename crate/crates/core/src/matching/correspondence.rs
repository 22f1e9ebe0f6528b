use std::collections::BTreeMap;

use crate::geometry::LabelId;

/// A putative match between source keypoint `src_index` and target keypoint
/// `dst_index` (positions within their keypoint sets).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub src_index: usize,
    pub dst_index: usize,
    pub score: f64,
    /// Anchor category of the matching group that produced this pair, if any.
    pub group_label: Option<LabelId>,
}

/// Correspondences with unique `(src, dst)` pairs, sorted by that pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrespondenceSet {
    items: Vec<Correspondence>,
}

impl CorrespondenceSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Collapses repeated pairs to their highest-scoring instance. Among equal
    /// scores the first occurrence wins.
    pub fn from_iter_dedup(items: impl IntoIterator<Item = Correspondence>) -> Self {
        let mut best: BTreeMap<(usize, usize), Correspondence> = BTreeMap::new();
        for c in items {
            best.entry((c.src_index, c.dst_index))
                .and_modify(|e| {
                    if c.score > e.score {
                        *e = c;
                    }
                })
                .or_insert(c);
        }
        Self {
            items: best.into_values().collect(),
        }
    }

    /// Merges `other` into `self`, keeping the higher score on collisions.
    pub fn union(&self, other: &Self) -> Self {
        Self::from_iter_dedup(self.items.iter().chain(&other.items).copied())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Correspondence> {
        self.items.iter()
    }

    pub fn as_slice(&self) -> &[Correspondence] {
        &self.items
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.items.iter().map(|c| (c.src_index, c.dst_index)).collect()
    }

    pub fn contains_pair(&self, src: usize, dst: usize) -> bool {
        self.items
            .binary_search_by(|c| (c.src_index, c.dst_index).cmp(&(src, dst)))
            .is_ok()
    }
}

impl FromIterator<Correspondence> for CorrespondenceSet {
    fn from_iter<T: IntoIterator<Item = Correspondence>>(iter: T) -> Self {
        Self::from_iter_dedup(iter)
    }
}

impl<'a> IntoIterator for &'a CorrespondenceSet {
    type Item = &'a Correspondence;
    type IntoIter = std::slice::Iter<'a, Correspondence>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: usize, d: usize, score: f64, g: Option<LabelId>) -> Correspondence {
        Correspondence {
            src_index: s,
            dst_index: d,
            score,
            group_label: g,
        }
    }

    #[test]
    fn dedup_keeps_max_score() {
        let set = CorrespondenceSet::from_iter_dedup([c(1, 2, 0.3, Some(0)), c(0, 5, 0.9, None), c(1, 2, 0.7, Some(4))]);
        assert_eq!(set.len(), 2);
        assert_eq!(set.as_slice()[0], c(0, 5, 0.9, None));
        assert_eq!(set.as_slice()[1], c(1, 2, 0.7, Some(4)));
        assert!(set.contains_pair(1, 2));
        assert!(!set.contains_pair(2, 1));
    }

    #[test]
    fn union_never_loses_pairs() {
        let a = CorrespondenceSet::from_iter_dedup([c(0, 0, 0.5, Some(1)), c(1, 1, 0.5, Some(1))]);
        let b = CorrespondenceSet::from_iter_dedup([c(1, 1, 0.8, Some(2)), c(2, 0, 0.1, Some(2))]);
        let u = a.union(&b);
        for x in a.iter().chain(b.iter()) {
            assert!(u.contains_pair(x.src_index, x.dst_index));
        }
        assert_eq!(u.len(), 3);
        assert_eq!(u.as_slice()[1].group_label, Some(2));
    }
}
