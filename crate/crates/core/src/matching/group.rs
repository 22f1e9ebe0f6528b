use crate::geometry::LabelId;
use crate::matching::{Correspondence, CorrespondenceSet, Matcher, ScoreMatrix};
use crate::semantic::{LabelAlphabet, LocalSignature};

/// Source and target keypoints that share one anchor category.
///
/// Indices are positions within the source and target keypoint sets, in
/// ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingGroup {
    pub anchor_label: LabelId,
    pub src_indices: Vec<usize>,
    pub dst_indices: Vec<usize>,
}

fn groups_by(
    alphabet_size: usize,
    src_has: impl Fn(usize, LabelId) -> bool,
    src_len: usize,
    dst_has: impl Fn(usize, LabelId) -> bool,
    dst_len: usize,
) -> Vec<MatchingGroup> {
    (0..alphabet_size)
        .map(|t| t as LabelId)
        .filter_map(|t| {
            let src_indices: Vec<usize> = (0..src_len).filter(|&i| src_has(i, t)).collect();
            let dst_indices: Vec<usize> = (0..dst_len).filter(|&j| dst_has(j, t)).collect();
            (!src_indices.is_empty() && !dst_indices.is_empty()).then_some(MatchingGroup {
                anchor_label: t,
                src_indices,
                dst_indices,
            })
        })
        .collect()
}

/// One group per label present on both sides; a keypoint joins every group
/// whose label its local signature contains.
pub fn build_matching_groups(
    src_sigs: &[LocalSignature],
    dst_sigs: &[LocalSignature],
    alphabet: &LabelAlphabet,
) -> Vec<MatchingGroup> {
    groups_by(
        alphabet.len(),
        |i, t| src_sigs[i].contains(t),
        src_sigs.len(),
        |j, t| dst_sigs[j].contains(t),
        dst_sigs.len(),
    )
}

/// Strict same-category grouping: each keypoint joins only the group of its
/// own point label.
pub fn build_category_groups(src_labels: &[LabelId], dst_labels: &[LabelId], alphabet: &LabelAlphabet) -> Vec<MatchingGroup> {
    groups_by(
        alphabet.len(),
        |i, t| src_labels[i] == t,
        src_labels.len(),
        |j, t| dst_labels[j] == t,
        dst_labels.len(),
    )
}

/// Runs `matcher` on each group's slice of `scores` and merges the results,
/// keeping the best-scoring instance of any repeated pair.
pub fn group_match(groups: &[MatchingGroup], scores: &ScoreMatrix, matcher: Matcher) -> CorrespondenceSet {
    CorrespondenceSet::from_iter_dedup(groups.iter().flat_map(|g| {
        let sub = scores.submatrix(&g.src_indices, &g.dst_indices);
        matcher
            .select_raw(&sub)
            .into_iter()
            .map(move |(r, c, score)| Correspondence {
                src_index: g.src_indices[r],
                dst_index: g.dst_indices[c],
                score,
                group_label: Some(g.anchor_label),
            })
    }))
}
