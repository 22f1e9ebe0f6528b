//! Loading clouds, configuration and pair directories.

use std::path::{Path, PathBuf};

use semreg_core::io::{read_labeled_cloud, read_pose, read_semantickitti_pair, write_labeled_cloud, write_semantickitti_pair, LabelMap, PlyFormat};
use semreg_core::matching::MatchingMode;
use semreg_core::synth::keypoint_sample;
use semreg_core::{KeypointSet, LabeledPointCloud, PipelineConfig, RigidTransform};

use crate::args::PipelineArgs;
use crate::{CmdResult, Failure};

fn is_kitti(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "bin")
}

fn label_map(path: &Path, map: Option<&Path>) -> CmdResult<LabelMap> {
    let map = map.ok_or_else(|| Failure::Usage(format!("{} is a SemanticKITTI scan; pass --label-map", path.display())))?;
    Ok(LabelMap::read(map)?)
}

/// Reads a PLY cloud or a SemanticKITTI scan whose `.label` file sits next to it.
pub fn load_cloud(path: &Path, map: Option<&Path>) -> CmdResult<LabeledPointCloud> {
    if is_kitti(path) {
        let map = label_map(path, map)?;
        Ok(read_semantickitti_pair(path, &path.with_extension("label"), &map)?)
    } else {
        Ok(read_labeled_cloud(path)?)
    }
}

/// Writes `cloud` in the format implied by the extension of `path`.
pub fn save_cloud(path: &Path, cloud: &LabeledPointCloud, map: Option<&Path>) -> CmdResult {
    if is_kitti(path) {
        let map = label_map(path, map)?;
        Ok(write_semantickitti_pair(path, &path.with_extension("label"), cloud, &map)?)
    } else {
        Ok(write_labeled_cloud(path, cloud, PlyFormat::BinaryLittleEndian)?)
    }
}

pub fn load_config(args: &PipelineArgs) -> CmdResult<PipelineConfig> {
    let mut cfg = match &args.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if args.baseline {
        cfg.pipeline.mode = MatchingMode::Baseline;
    }
    Ok(cfg)
}

/// Keypoints of one cloud; `salt` decorrelates the source and target draws.
pub fn keypoints(cloud: &LabeledPointCloud, cfg: &PipelineConfig, salt: u64) -> CmdResult<KeypointSet> {
    if cfg.keypoints == 0 || cfg.keypoints >= cloud.len() {
        return Ok(KeypointSet::all(cloud.len()));
    }
    Ok(keypoint_sample(cloud, cfg.keypoints, cfg.keypoint_seed.wrapping_add(salt))?)
}

pub fn load_gt(path: Option<&Path>) -> CmdResult<Option<RigidTransform>> {
    path.map(|p| read_pose(p).map_err(Failure::from)).transpose()
}

/// One benchmark pair on disk.
#[derive(Debug, Clone)]
pub struct PairFiles {
    pub id: String,
    pub src: PathBuf,
    pub dst: PathBuf,
    pub gt: PathBuf,
}

fn pair_in(dir: &Path) -> Option<PairFiles> {
    let files = PairFiles {
        id: dir.file_name().map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned()),
        src: dir.join("a.ply"),
        dst: dir.join("b.ply"),
        gt: dir.join("gt.txt"),
    };
    (files.src.is_file() && files.dst.is_file() && files.gt.is_file()).then_some(files)
}

/// Pairs under `dir`, sorted by id. A directory that is itself a pair
/// yields just that pair.
pub fn pair_dirs(dir: &Path) -> CmdResult<Vec<PairFiles>> {
    if let Some(p) = pair_in(dir) {
        return Ok(vec![p]);
    }
    let entries = std::fs::read_dir(dir).map_err(|e| Failure::Data(format!("cannot list {}: {e}", dir.display())))?;
    let mut pairs = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Failure::Data(format!("cannot list {}: {e}", dir.display())))?.path();
        if path.is_dir() {
            pairs.extend(pair_in(&path));
        }
    }
    if pairs.is_empty() {
        return Err(Failure::Data(format!("no pair directories (a.ply, b.ply, gt.txt) under {}", dir.display())));
    }
    pairs.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use semreg_core::{LabelAlphabet, Point3};

    fn cloud(n: usize) -> LabeledPointCloud {
        let pts = (0..n).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        LabeledPointCloud::new(pts, vec![0; n], LabelAlphabet::from_names(["ground"]).unwrap()).unwrap()
    }

    #[test]
    fn keypoint_count_is_capped_by_the_cloud() {
        let mut cfg = PipelineConfig {
            keypoints: 50,
            ..PipelineConfig::default()
        };
        assert_eq!(keypoints(&cloud(20), &cfg, 0).unwrap().len(), 20);
        assert_eq!(keypoints(&cloud(200), &cfg, 0).unwrap().len(), 50);
        assert_ne!(keypoints(&cloud(200), &cfg, 0).unwrap(), keypoints(&cloud(200), &cfg, 1).unwrap());
        cfg.keypoints = 0;
        assert_eq!(keypoints(&cloud(200), &cfg, 0).unwrap().len(), 200);
    }

    #[test]
    fn pair_directories_are_sorted_and_complete() {
        let tmp = tempfile::tempdir().unwrap();
        for name in ["b", "a", "partial"] {
            let d = tmp.path().join(name);
            std::fs::create_dir(&d).unwrap();
            for f in ["a.ply", "b.ply", "gt.txt"] {
                if !(name == "partial" && f == "gt.txt") {
                    std::fs::write(d.join(f), "").unwrap();
                }
            }
        }
        let ids: Vec<String> = pair_dirs(tmp.path()).unwrap().into_iter().map(|p| p.id).collect();
        assert_eq!(ids, ["a", "b"]);
        assert_eq!(pair_dirs(&tmp.path().join("a")).unwrap().len(), 1);
        assert!(matches!(pair_dirs(&tmp.path().join("partial")), Err(Failure::Data(_))));
    }
}
