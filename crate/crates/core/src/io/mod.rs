//! File formats: labelled PLY clouds, SemanticKITTI scans, pose files and
//! CSV/JSON reports.

mod kitti;
mod ply;
mod pose;
mod report;

pub use kitti::{
    encode_semantickitti, parse_semantickitti, read_semantickitti_pair, write_semantickitti_pair, LabelMap, UNLABELED,
};
pub use ply::{
    encode_ply, format_alphabet, parse_alphabet, parse_ply, read_alphabet, read_labeled_cloud, sidecar_path,
    write_alphabet, write_labeled_cloud, PlyFormat,
};
pub use pose::{format_poses, parse_poses, read_pose, read_poses, write_poses, POSE_ORTHONORMALITY_TOL};
pub use report::{correspondences_csv, fmt_f64, report_csv, report_json, saliency_csv, sweep_csv, REPORT_COLUMNS};
