//! Labelled PLY clouds with a sidecar alphabet file.
//!
//! The sidecar sits next to the cloud with extension `.labels` and holds one
//! category name per line; the line number (from 0) is the label id. A name
//! may be followed by the token `dynamic`.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::{LabelId, LabeledPointCloud, Point3};
use crate::semantic::LabelAlphabet;

/// Body encoding of a written PLY file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlyFormat {
    #[default]
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn is_float(self) -> bool {
        matches!(self, Scalar::F32 | Scalar::F64)
    }

    fn is_unsigned(self) -> bool {
        matches!(self, Scalar::U8 | Scalar::U16 | Scalar::U32)
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => f64::from(b[0] as i8),
            Scalar::U8 => f64::from(b[0]),
            Scalar::I16 => f64::from(i16::from_le_bytes([b[0], b[1]])),
            Scalar::U16 => f64::from(u16::from_le_bytes([b[0], b[1]])),
            Scalar::I32 => f64::from(i32::from_le_bytes([b[0], b[1], b[2], b[3]])),
            Scalar::U32 => f64::from(u32::from_le_bytes([b[0], b[1], b[2], b[3]])),
            Scalar::F32 => f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]])),
            Scalar::F64 => f64::from_le_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]]),
        }
    }
}

struct Header {
    binary: bool,
    count: usize,
    props: Vec<(Scalar, String)>,
    body_start: usize,
    /// Lines consumed by the header, for ASCII body line numbers.
    lines: usize,
}

/// Sidecar alphabet path for a cloud file.
pub fn sidecar_path(cloud_path: &Path) -> PathBuf {
    cloud_path.with_extension("labels")
}

pub fn parse_alphabet(text: &str, path: &Path) -> Result<LabelAlphabet> {
    let mut names = Vec::new();
    let mut dynamic = Vec::new();
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() {
        return Err(Error::parse(path, "line 1", "alphabet file is empty"));
    }
    for (n, line) in body.split('\n').enumerate() {
        let loc = format!("line {}", n + 1);
        let mut tok = line.trim_end_matches('\r').split_whitespace();
        let name = tok.next().ok_or_else(|| Error::parse(path, &loc, "blank line in alphabet file"))?;
        let dyn_flag = match tok.next() {
            None => false,
            Some("dynamic") => true,
            Some(other) => return Err(Error::parse(path, &loc, format!("unexpected token {other:?}"))),
        };
        if let Some(extra) = tok.next() {
            return Err(Error::parse(path, &loc, format!("unexpected token {extra:?}")));
        }
        names.push(name.to_string());
        dynamic.push(dyn_flag);
    }
    LabelAlphabet::new(names, dynamic).map_err(|e| Error::parse(path, "alphabet", e.to_string()))
}

pub fn format_alphabet(alphabet: &LabelAlphabet) -> String {
    let mut out = String::new();
    for id in alphabet.ids() {
        out.push_str(alphabet.name(id));
        if alphabet.is_dynamic(id) {
            out.push_str(" dynamic");
        }
        out.push('\n');
    }
    out
}

pub fn read_alphabet(path: &Path) -> Result<LabelAlphabet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_alphabet(&text, path)
}

pub fn write_alphabet(path: &Path, alphabet: &LabelAlphabet) -> Result<()> {
    std::fs::write(path, format_alphabet(alphabet)).map_err(|e| Error::io(path, e))
}

/// Reads a PLY cloud and resolves its labels through the sidecar alphabet.
pub fn read_labeled_cloud(path: &Path) -> Result<LabeledPointCloud> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let alphabet = read_alphabet(&sidecar_path(path))?;
    parse_ply(&bytes, alphabet, path)
}

/// Writes the cloud as PLY plus its sidecar alphabet.
pub fn write_labeled_cloud(path: &Path, cloud: &LabeledPointCloud, format: PlyFormat) -> Result<()> {
    write_alphabet(&sidecar_path(path), cloud.alphabet())?;
    std::fs::write(path, encode_ply(cloud, format)).map_err(|e| Error::io(path, e))
}

/// PLY bytes with `double` coordinates and a `uint` label.
pub fn encode_ply(cloud: &LabeledPointCloud, format: PlyFormat) -> Vec<u8> {
    let fmt = match format {
        PlyFormat::Ascii => "ascii",
        PlyFormat::BinaryLittleEndian => "binary_little_endian",
    };
    let mut out = format!(
        "ply\nformat {fmt} 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nproperty uint label\nend_header\n",
        cloud.len()
    )
    .into_bytes();
    for (p, &l) in cloud.points().iter().zip(cloud.labels()) {
        match format {
            PlyFormat::Ascii => out.extend(format!("{} {} {} {}\n", p.x, p.y, p.z, l).bytes()),
            PlyFormat::BinaryLittleEndian => {
                for c in [p.x, p.y, p.z] {
                    out.extend(c.to_le_bytes());
                }
                out.extend(u32::from(l).to_le_bytes());
            }
        }
    }
    out
}

fn parse_header(bytes: &[u8], path: &Path) -> Result<Header> {
    let mut pos = 0;
    let mut line_no = 0;
    let mut next_line = |pos: &mut usize| -> Result<(usize, String)> {
        let start = *pos;
        let end = bytes[start..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|i| start + i)
            .ok_or_else(|| Error::parse(path, format!("byte {start}"), "header ends without end_header"))?;
        *pos = end + 1;
        line_no += 1;
        let text = std::str::from_utf8(&bytes[start..end])
            .map_err(|_| Error::parse(path, format!("byte {start}"), "header is not valid UTF-8"))?;
        Ok((start, text.trim_end_matches('\r').to_string()))
    };

    let (_, magic) = next_line(&mut pos)?;
    if magic != "ply" {
        return Err(Error::parse(path, "byte 0", "missing ply magic"));
    }
    let mut binary = None;
    let mut count = None;
    let mut props = Vec::new();
    // Name of the element whose properties are currently being declared.
    let mut current: Option<String> = None;
    loop {
        let (off, line) = next_line(&mut pos)?;
        let loc = format!("byte {off}");
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["end_header"] => break,
            ["comment", ..] | ["obj_info", ..] => {}
            ["format", f, "1.0"] => {
                binary = Some(match *f {
                    "ascii" => false,
                    "binary_little_endian" => true,
                    other => return Err(Error::parse(path, loc, format!("unsupported format {other}"))),
                })
            }
            ["element", name, n] => {
                let n: usize = n.parse().map_err(|_| Error::parse(path, &loc, format!("bad element count {n:?}")))?;
                if *name == "vertex" {
                    if count.is_some() {
                        return Err(Error::parse(path, loc, "duplicate vertex element"));
                    }
                    count = Some(n);
                } else if n > 0 {
                    return Err(Error::parse(path, loc, format!("unsupported element {name}")));
                }
                current = Some(name.to_string());
            }
            ["property", "list", ..] => {
                if current.as_deref() == Some("vertex") {
                    return Err(Error::parse(path, loc, "list properties on vertices are not supported"));
                }
            }
            ["property", ty, name] => match current.as_deref() {
                Some("vertex") => {
                    let s = Scalar::parse(ty).ok_or_else(|| Error::parse(path, &loc, format!("unknown type {ty}")))?;
                    if props.iter().any(|(_, n): &(Scalar, String)| n == name) {
                        return Err(Error::parse(path, loc, format!("duplicate property {name}")));
                    }
                    props.push((s, name.to_string()));
                }
                Some(_) => {}
                None => return Err(Error::parse(path, loc, "property before any element")),
            },
            _ => return Err(Error::parse(path, loc, format!("malformed header line {line:?}"))),
        }
    }
    let binary = binary.ok_or_else(|| Error::parse(path, "header", "missing format line"))?;
    let count = count.ok_or_else(|| Error::parse(path, "header", "missing vertex element"))?;
    Ok(Header {
        binary,
        count,
        props,
        body_start: pos,
        lines: line_no,
    })
}

/// Parses PLY bytes; label ids must lie inside `alphabet`.
pub fn parse_ply(bytes: &[u8], alphabet: LabelAlphabet, path: &Path) -> Result<LabeledPointCloud> {
    let header = parse_header(bytes, path)?;
    let find = |name: &str| header.props.iter().position(|(_, n)| n == name);
    let mut slots = [0usize; 4];
    for (slot, name) in slots.iter_mut().zip(["x", "y", "z", "label"]) {
        *slot = find(name).ok_or_else(|| Error::parse(path, "header", format!("missing vertex property {name}")))?;
    }
    for &s in &slots[..3] {
        if !header.props[s].0.is_float() {
            return Err(Error::parse(path, "header", format!("property {} must be float or double", header.props[s].1)));
        }
    }
    if !header.props[slots[3]].0.is_unsigned() {
        return Err(Error::parse(path, "header", "property label must be an unsigned integer"));
    }

    let mut points = Vec::with_capacity(header.count);
    let mut labels = Vec::with_capacity(header.count);
    let mut row = vec![0.0; header.props.len()];
    let mut push = |row: &[f64], loc: &dyn Fn() -> String| -> Result<()> {
        let l = row[slots[3]];
        if l >= alphabet.len() as f64 {
            return Err(Error::parse(path, loc(), format!("label {l} outside an alphabet of {}", alphabet.len())));
        }
        let p = Point3::new(row[slots[0]], row[slots[1]], row[slots[2]]);
        if !p.coords.iter().all(|c| c.is_finite()) {
            return Err(Error::parse(path, loc(), "non-finite coordinate"));
        }
        points.push(p);
        labels.push(l as LabelId);
        Ok(())
    };

    if header.binary {
        let stride: usize = header.props.iter().map(|(s, _)| s.size()).sum();
        let body = &bytes[header.body_start..];
        let need = stride * header.count;
        if body.len() < need {
            return Err(Error::parse(
                path,
                format!("byte {}", bytes.len()),
                format!("body truncated: expected {need} bytes, found {}", body.len()),
            ));
        }
        if body.len() > need {
            return Err(Error::parse(path, format!("byte {}", header.body_start + need), "trailing data after vertices"));
        }
        for v in 0..header.count {
            let base = v * stride;
            let mut off = base;
            for (slot, (s, _)) in row.iter_mut().zip(&header.props) {
                *slot = s.read_le(&body[off..]);
                off += s.size();
            }
            push(&row, &|| format!("byte {}", header.body_start + base))?;
        }
    } else {
        let text = std::str::from_utf8(&bytes[header.body_start..])
            .map_err(|e| Error::parse(path, format!("byte {}", header.body_start + e.valid_up_to()), "body is not valid UTF-8"))?;
        let mut lines = text.split('\n');
        let mut offset = header.body_start;
        for v in 0..header.count {
            let line_no = header.lines + v + 1;
            let loc = || format!("line {line_no}, byte {offset}");
            let line = lines.next().ok_or_else(|| Error::parse(path, loc(), "missing vertex lines"))?;
            let mut tok = line.split_whitespace();
            for (slot, (s, name)) in row.iter_mut().zip(&header.props) {
                let t = tok.next().ok_or_else(|| Error::parse(path, loc(), format!("missing value for {name}")))?;
                *slot = if s.is_float() {
                    t.parse::<f64>().ok()
                } else {
                    t.parse::<i64>().ok().map(|i| i as f64)
                }
                .ok_or_else(|| Error::parse(path, loc(), format!("bad {name} value {t:?}")))?;
                if !s.is_float() && *slot < 0.0 && s.is_unsigned() {
                    return Err(Error::parse(path, loc(), format!("negative {name}")));
                }
            }
            if let Some(extra) = tok.next() {
                return Err(Error::parse(path, loc(), format!("unexpected token {extra:?}")));
            }
            push(&row, &loc)?;
            offset += line.len() + 1;
        }
        let rest: String = lines.collect::<Vec<_>>().join("\n");
        if let Some(i) = rest.find(|c: char| !c.is_whitespace()) {
            return Err(Error::parse(path, format!("byte {}", offset + i), "trailing data after vertices"));
        }
    }
    LabeledPointCloud::new(points, labels, alphabet).map_err(|e| Error::parse(path, "body", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn alphabet() -> LabelAlphabet {
        LabelAlphabet::from_names(["ground", "pole", "car"]).unwrap()
    }

    fn parse(text: &str) -> Result<LabeledPointCloud> {
        parse_ply(text.as_bytes(), alphabet(), Path::new("t.ply"))
    }

    const HEAD: &str = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nproperty uchar label\nend_header\n";

    #[test]
    fn one_point_ascii() {
        let c = parse(&format!("{HEAD}1 2 3 0\n")).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.point(0), Point3::new(1.0, 2.0, 3.0));
        assert_eq!(c.label(0), 0);
    }

    #[test]
    fn extra_properties_are_skipped() {
        let text = "ply\nformat ascii 1.0\ncomment hi\nelement vertex 2\nproperty float intensity\nproperty double x\nproperty double y\nproperty double z\nproperty uint label\nelement face 0\nproperty list uchar int vertex_indices\nend_header\n9 1 2 3 2\n9 4 5 6 1\n";
        let c = parse(text).unwrap();
        assert_eq!(c.labels(), &[2, 1]);
        assert_eq!(c.point(1), Point3::new(4.0, 5.0, 6.0));
    }

    #[test]
    fn malformed_inputs() {
        let no_label = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 3\n";
        let msg = parse(no_label).unwrap_err().to_string();
        assert!(msg.contains("label"), "{msg}");
        assert!(parse("plx\n").is_err());
        assert!(parse("ply\nformat ascii 1.0\nelement vertex 1\n").is_err());
        assert!(parse(&format!("{HEAD}1 2 3 7\n")).unwrap_err().to_string().contains("line 9"));
        assert!(parse(&format!("{HEAD}1 2 x 0\n")).is_err());
        assert!(parse(&format!("{HEAD}1 2 3 0 5\n")).is_err());
        assert!(parse(HEAD).is_err());
        let trailing = parse(&format!("{HEAD}1 2 3 0\n\n  junk\n")).unwrap_err().to_string();
        assert!(trailing.contains("trailing") && trailing.contains(&format!("byte {}", HEAD.len() + 11)), "{trailing}");
        assert!(parse(&format!("{HEAD}1 2 3 0\n \n")).is_ok());
        let bad_format = HEAD.replace("ascii", "binary_big_endian");
        assert!(parse(&format!("{bad_format}1 2 3 0\n")).is_err());
    }

    #[test]
    fn binary_length_checks() {
        let a = alphabet();
        let cloud = LabeledPointCloud::new(vec![Point3::new(1.0, -2.5, 3.25)], vec![2], a.clone()).unwrap();
        let mut bytes = encode_ply(&cloud, PlyFormat::BinaryLittleEndian);
        assert_eq!(parse_ply(&bytes, a.clone(), Path::new("b")).unwrap(), cloud);
        bytes.push(0);
        let msg = parse_ply(&bytes, a.clone(), Path::new("b")).unwrap_err().to_string();
        assert!(msg.contains("trailing") && msg.contains(&format!("byte {}", bytes.len() - 1)), "{msg}");
        bytes.truncate(bytes.len() - 3);
        assert!(parse_ply(&bytes, a, Path::new("b")).unwrap_err().to_string().contains("truncated"));
    }

    #[test]
    fn alphabet_sidecar_format() {
        let a = parse_alphabet("ground\ncar dynamic\n", Path::new("a")).unwrap();
        assert_eq!(a.names(), &["ground".to_string(), "car".to_string()]);
        assert!(a.is_dynamic(1) && !a.is_dynamic(0));
        assert_eq!(format_alphabet(&a), "ground\ncar dynamic\n");
        assert!(parse_alphabet("ground\n\ncar\n", Path::new("a")).is_err());
        assert!(parse_alphabet("ground moving\n", Path::new("a")).is_err());
        assert!(parse_alphabet("", Path::new("a")).is_err());
        assert!(parse_alphabet("a\na\n", Path::new("a")).is_err());
    }

    #[test]
    fn file_round_trip_writes_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scan.ply");
        let cloud = LabeledPointCloud::new(
            vec![Point3::new(0.1, 0.2, 0.3), Point3::new(-1e-9, 4e12, 7.0)],
            vec![1, 0],
            alphabet(),
        )
        .unwrap();
        write_labeled_cloud(&path, &cloud, PlyFormat::Ascii).unwrap();
        assert!(dir.path().join("scan.labels").exists());
        assert_eq!(read_labeled_cloud(&path).unwrap(), cloud);
    }

    proptest! {
        #[test]
        fn encode_parse_is_exact_and_byte_stable(
            pts in prop::collection::vec((any::<f64>(), any::<f64>(), any::<f64>(), 0u16..3), 0..40),
            binary in any::<bool>(),
        ) {
            let pts: Vec<_> = pts.into_iter().filter(|(x, y, z, _)| x.is_finite() && y.is_finite() && z.is_finite()).collect();
            let cloud = LabeledPointCloud::new(
                pts.iter().map(|&(x, y, z, _)| Point3::new(x, y, z)).collect(),
                pts.iter().map(|p| p.3).collect(),
                alphabet(),
            ).unwrap();
            let format = if binary { PlyFormat::BinaryLittleEndian } else { PlyFormat::Ascii };
            let bytes = encode_ply(&cloud, format);
            let back = parse_ply(&bytes, alphabet(), Path::new("p")).unwrap();
            prop_assert_eq!(&back, &cloud);
            prop_assert_eq!(encode_ply(&back, format), bytes);
        }
    }
}
