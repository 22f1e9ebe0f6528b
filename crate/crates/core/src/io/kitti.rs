//! SemanticKITTI scans: `.bin` float quadruples plus `.label` words.
//!
//! Raw semantic ids (the low 16 bits of each label word) are remapped
//! through a label map of `<raw-id> <name>` lines. Ids the map does not
//! mention become `unlabeled`, which no default landmark category uses.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{LabelId, LabeledPointCloud, Point3};
use crate::semantic::LabelAlphabet;

pub const UNLABELED: &str = "unlabeled";

/// Raw-id to category mapping with the alphabet it induces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    raw_to_label: BTreeMap<u16, LabelId>,
    alphabet: LabelAlphabet,
    unlabeled: LabelId,
}

impl LabelMap {
    /// Alphabet order is the order names first appear; `unlabeled` is
    /// appended when the map never names it. Blank lines and `#` comments
    /// are ignored.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        let mut raw_to_label = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let loc = format!("line {}", n + 1);
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let tok: Vec<&str> = content.split_whitespace().collect();
            let [raw, name] = tok.as_slice() else {
                return Err(Error::parse(path, loc, "expected `<raw-id> <name>`"));
            };
            let raw: u16 = raw
                .parse()
                .map_err(|_| Error::parse(path, &loc, format!("raw id {raw:?} is not a 16-bit unsigned integer")))?;
            let id = match names.iter().position(|x| x == name) {
                Some(i) => i,
                None => {
                    names.push(name.to_string());
                    names.len() - 1
                }
            };
            if raw_to_label.insert(raw, id as LabelId).is_some() {
                return Err(Error::parse(path, loc, format!("raw id {raw} mapped twice")));
            }
        }
        let unlabeled = match names.iter().position(|x| x == UNLABELED) {
            Some(i) => i,
            None => {
                names.push(UNLABELED.to_string());
                names.len() - 1
            }
        } as LabelId;
        let alphabet = LabelAlphabet::from_names(names).map_err(|e| Error::parse(path, "label map", e.to_string()))?;
        Ok(Self {
            raw_to_label,
            alphabet,
            unlabeled,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn alphabet(&self) -> &LabelAlphabet {
        &self.alphabet
    }

    pub fn label_of(&self, raw: u16) -> LabelId {
        self.raw_to_label.get(&raw).copied().unwrap_or(self.unlabeled)
    }

    /// Smallest raw id mapping to `label`; `unlabeled` falls back to 0.
    pub fn raw_of(&self, label: LabelId) -> Option<u16> {
        self.raw_to_label
            .iter()
            .find(|(_, &l)| l == label)
            .map(|(&r, _)| r)
            .or_else(|| (label == self.unlabeled).then_some(0))
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Decodes an in-memory scan; see [`read_semantickitti_pair`].
pub fn parse_semantickitti(bin: &[u8], label: &[u8], map: &LabelMap, bin_path: &Path, label_path: &Path) -> Result<LabeledPointCloud> {
    if bin.len() % 16 != 0 {
        return Err(Error::parse(
            bin_path,
            format!("byte {}", bin.len() - bin.len() % 16),
            format!("length {} is not a multiple of 16", bin.len()),
        ));
    }
    if label.len() % 4 != 0 {
        return Err(Error::parse(
            label_path,
            format!("byte {}", label.len() - label.len() % 4),
            format!("length {} is not a multiple of 4", label.len()),
        ));
    }
    let n = bin.len() / 16;
    if label.len() / 4 != n {
        return Err(Error::parse(
            label_path,
            format!("byte {}", label.len().min(n * 4)),
            format!("{} labels for {n} points", label.len() / 4),
        ));
    }
    let mut points = Vec::with_capacity(n);
    for (i, q) in bin.chunks_exact(16).enumerate() {
        let f = |k: usize| f64::from(f32::from_le_bytes([q[4 * k], q[4 * k + 1], q[4 * k + 2], q[4 * k + 3]]));
        let p = Point3::new(f(0), f(1), f(2));
        if !p.coords.iter().all(|c| c.is_finite()) {
            return Err(Error::parse(bin_path, format!("byte {}", i * 16), "non-finite coordinate"));
        }
        points.push(p);
    }
    let labels = label
        .chunks_exact(4)
        .map(|w| map.label_of(u32::from_le_bytes([w[0], w[1], w[2], w[3]]) as u16))
        .collect();
    LabeledPointCloud::new(points, labels, map.alphabet().clone()).map_err(|e| Error::parse(bin_path, "scan", e.to_string()))
}

/// Reads a scan and its labels; intensity and instance ids are discarded.
pub fn read_semantickitti_pair(bin_path: &Path, label_path: &Path, map: &LabelMap) -> Result<LabeledPointCloud> {
    parse_semantickitti(&read_bytes(bin_path)?, &read_bytes(label_path)?, map, bin_path, label_path)
}

/// Encodes a scan with zero intensity and zero instance ids. Coordinates
/// are stored as `f32`.
pub fn encode_semantickitti(cloud: &LabeledPointCloud, map: &LabelMap) -> Result<(Vec<u8>, Vec<u8>)> {
    if cloud.alphabet() != map.alphabet() {
        return Err(Error::invalid("cloud alphabet differs from the label map alphabet"));
    }
    let mut bin = Vec::with_capacity(cloud.len() * 16);
    let mut label = Vec::with_capacity(cloud.len() * 4);
    for (p, &l) in cloud.points().iter().zip(cloud.labels()) {
        for c in [p.x, p.y, p.z, 0.0] {
            bin.extend((c as f32).to_le_bytes());
        }
        let raw = map
            .raw_of(l)
            .ok_or_else(|| Error::invalid(format!("no raw id for category {}", cloud.alphabet().name(l))))?;
        label.extend(u32::from(raw).to_le_bytes());
    }
    Ok((bin, label))
}

pub fn write_semantickitti_pair(bin_path: &Path, label_path: &Path, cloud: &LabeledPointCloud, map: &LabelMap) -> Result<()> {
    let (bin, label) = encode_semantickitti(cloud, map)?;
    std::fs::write(bin_path, bin).map_err(|e| Error::io(bin_path, e))?;
    std::fs::write(label_path, label).map_err(|e| Error::io(label_path, e))
}
