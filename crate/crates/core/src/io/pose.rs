//! Pose files: one row-major 3×4 `[R | t]` per line, KITTI style.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::RigidTransform;

/// Largest deviation of `RᵀR` from identity accepted on read.
pub const POSE_ORTHONORMALITY_TOL: f64 = 1e-6;

pub fn parse_poses(text: &str, path: &Path) -> Result<Vec<RigidTransform>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let loc = format!("line {}", n + 1);
        if line.trim().is_empty() {
            continue;
        }
        let mut v = [0.0; 12];
        let mut tok = line.split_whitespace();
        for (k, slot) in v.iter_mut().enumerate() {
            let t = tok
                .next()
                .ok_or_else(|| Error::parse(path, &loc, format!("expected 12 numbers, found {k}")))?;
            *slot = t
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::parse(path, &loc, format!("bad number {t:?}")))?;
        }
        if let Some(extra) = tok.next() {
            return Err(Error::parse(path, loc, format!("unexpected token {extra:?} after 12 numbers")));
        }
        let t = RigidTransform::from_row_major_3x4(&v);
        let err = (t.rotation.transpose() * t.rotation - nalgebra::Matrix3::identity()).abs().max();
        if err > POSE_ORTHONORMALITY_TOL || t.rotation.determinant() < 0.0 {
            return Err(Error::parse(path, loc, "rotation block is not a proper rotation"));
        }
        out.push(t);
    }
    Ok(out)
}

pub fn format_poses(poses: &[RigidTransform]) -> String {
    let mut out = String::new();
    for p in poses {
        let v = p.to_row_major_3x4();
        let words: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
        out.push_str(&words.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_poses(path: &Path) -> Result<Vec<RigidTransform>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_poses(&text, path)
}

/// Reads a file that must hold exactly one pose.
pub fn read_pose(path: &Path) -> Result<RigidTransform> {
    let mut poses = read_poses(path)?;
    if poses.len() != 1 {
        return Err(Error::parse(path, "file", format!("expected one pose, found {}", poses.len())));
    }
    Ok(poses.remove(0))
}

pub fn write_poses(path: &Path, poses: &[RigidTransform]) -> Result<()> {
    std::fs::write(path, format_poses(poses)).map_err(|e| Error::io(path, e))
}
