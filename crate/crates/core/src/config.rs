//! `key = value` configuration covering every tunable of the toolkit.
//!
//! One setting per line; `#` starts a comment. `mode = outdoor|indoor`
//! selects the preset every other key overrides, wherever it appears in the
//! file. Keys:
//!
//! | key | meaning |
//! |-----|---------|
//! | `mode` | `outdoor` or `indoor` preset |
//! | `matching` | `baseline`, `same-category`, `group`, `mask` or `full` |
//! | `matcher` | `nn` or `mnn` |
//! | `keypoints`, `keypoint_seed` | keypoints sampled per cloud (0 = all points) |
//! | `r_local`, `k`, `bmr.N`, `bmr.L` | signature settings |
//! | `landmarks.categories` | comma-separated clustered categories |
//! | `saliency_threshold` | cluster categories selected by saliency instead |
//! | `voxel` | voxel landmarks of this size instead |
//! | `cluster.default_radius`, `cluster.min_size`, `cluster.radius.<name>` | clustering |
//! | `descriptor.normal_radius`, `descriptor.feature_radius` | FPFH radii |
//! | `ransac.*` | `max_iterations`, `inlier_threshold`, `sample_size`, `seed`, `confidence`, `refine_rounds` |
//! | `eval.*` | `inlier_threshold`, `re_max_deg`, `te_max` |

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimation::RansacConfig;
use crate::evaluation::EvalThresholds;
use crate::matching::{LandmarkSource, Matcher, MatchingMode, PipelineParams};

/// Scene preset a configuration starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preset {
    #[default]
    Outdoor,
    Indoor,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Outdoor => "outdoor",
            Preset::Indoor => "indoor",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "outdoor" => Some(Preset::Outdoor),
            "indoor" => Some(Preset::Indoor),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub preset: Preset,
    pub pipeline: PipelineParams,
    pub matcher: Matcher,
    /// Keypoints sampled per cloud; 0 keeps every point.
    pub keypoints: usize,
    pub keypoint_seed: u64,
    pub ransac: RansacConfig,
    pub eval: EvalThresholds,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::preset(Preset::Outdoor)
    }
}

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {raw:?}")))
}

impl PipelineConfig {
    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::Outdoor => Self {
                preset,
                pipeline: PipelineParams::outdoor(),
                matcher: Matcher::NearestNeighbor,
                keypoints: 1000,
                keypoint_seed: 0,
                ransac: RansacConfig::outdoor(),
                eval: EvalThresholds::OUTDOOR,
            },
            Preset::Indoor => Self {
                preset,
                pipeline: PipelineParams::indoor(),
                ransac: RansacConfig::indoor(),
                eval: EvalThresholds::INDOOR,
                ..Self::preset(Preset::Outdoor)
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |r: Result<()>| r.map_err(|e| Error::Config(e.to_string()));
        wrap(self.pipeline.validate())?;
        wrap(self.ransac.validate())?;
        wrap(self.eval.validate())
    }

    /// Parses and validates configuration text.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        let mut seen = HashSet::new();
        for (n, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if k.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", n + 1)));
            }
            if !seen.insert(k.clone()) {
                return Err(Error::Config(format!("line {}: duplicate key {k}", n + 1)));
            }
            entries.push((n + 1, k, v));
        }
        let preset = match entries.iter().find(|(_, k, _)| k == "mode") {
            Some((n, _, v)) => Preset::parse(v)
                .ok_or_else(|| Error::Config(format!("line {n}: mode must be outdoor or indoor, got {v:?}")))?,
            None => Preset::Outdoor,
        };
        let mut cfg = Self::preset(preset);
        let mut landmark_keys = Vec::new();
        for (n, k, v) in &entries {
            cfg.set(k, v)
                .map_err(|e| Error::Config(format!("line {n}: {}", e.to_string().trim_start_matches("invalid configuration: "))))?;
            if matches!(k.as_str(), "landmarks.categories" | "saliency_threshold" | "voxel") {
                landmark_keys.push(k.as_str());
            }
        }
        if landmark_keys.len() > 1 {
            return Err(Error::Config(format!("conflicting landmark settings: {}", landmark_keys.join(", "))));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Applies one setting; values are checked by [`validate`](Self::validate).
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let p = &mut self.pipeline;
        match key {
            "mode" => {}
            "matching" => {
                p.mode = MatchingMode::parse(raw).ok_or_else(|| Error::Config(format!("matching: unknown mode {raw:?}")))?
            }
            "matcher" => {
                self.matcher = Matcher::parse(raw).ok_or_else(|| Error::Config(format!("matcher: unknown matcher {raw:?}")))?
            }
            "keypoints" => self.keypoints = value(key, raw)?,
            "keypoint_seed" => self.keypoint_seed = value(key, raw)?,
            "r_local" => p.r_local = value(key, raw)?,
            "k" => p.k = value(key, raw)?,
            "bmr.N" => p.bmr.rings = value(key, raw)?,
            "bmr.L" => p.bmr.ring_width = value(key, raw)?,
            "landmarks.categories" => {
                p.landmarks = LandmarkSource::Categories(
                    raw.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect(),
                )
            }
            "saliency_threshold" => p.landmarks = LandmarkSource::Saliency { threshold: value(key, raw)? },
            "voxel" => p.landmarks = LandmarkSource::Voxel { size: value(key, raw)? },
            "cluster.default_radius" => p.cluster_default_radius = value(key, raw)?,
            "cluster.min_size" => p.min_cluster_size = value(key, raw)?,
            "descriptor.normal_radius" => p.normal_radius = value(key, raw)?,
            "descriptor.feature_radius" => p.feature_radius = value(key, raw)?,
            "ransac.max_iterations" => self.ransac.max_iterations = value(key, raw)?,
            "ransac.inlier_threshold" => self.ransac.inlier_threshold = value(key, raw)?,
            "ransac.sample_size" => self.ransac.sample_size = value(key, raw)?,
            "ransac.seed" => self.ransac.seed = value(key, raw)?,
            "ransac.confidence" => self.ransac.confidence = value(key, raw)?,
            "ransac.refine_rounds" => self.ransac.refine_rounds = value(key, raw)?,
            "eval.inlier_threshold" => self.eval.inlier_threshold = value(key, raw)?,
            "eval.re_max_deg" => self.eval.re_max_deg = value(key, raw)?,
            "eval.te_max" => self.eval.te_max = value(key, raw)?,
            _ => match key.strip_prefix("cluster.radius.") {
                Some(name) if !name.is_empty() => {
                    p.cluster_radii.insert(name.to_string(), value(key, raw)?);
                }
                _ => return Err(Error::Config(format!("unknown key {key}"))),
            },
        }
        Ok(())
    }

    /// Every setting in a fixed order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let p = &self.pipeline;
        let mut out: Vec<(String, String)> = vec![
            ("mode".into(), self.preset.name().into()),
            ("matching".into(), p.mode.name().into()),
            ("matcher".into(), self.matcher.name().into()),
            ("keypoints".into(), self.keypoints.to_string()),
            ("keypoint_seed".into(), self.keypoint_seed.to_string()),
            ("r_local".into(), p.r_local.to_string()),
            ("k".into(), p.k.to_string()),
            ("bmr.N".into(), p.bmr.rings.to_string()),
            ("bmr.L".into(), p.bmr.ring_width.to_string()),
        ];
        out.push(match &p.landmarks {
            LandmarkSource::Categories(c) => ("landmarks.categories".into(), c.join(",")),
            LandmarkSource::Saliency { threshold } => ("saliency_threshold".into(), threshold.to_string()),
            LandmarkSource::Voxel { size } => ("voxel".into(), size.to_string()),
        });
        out.push(("cluster.default_radius".into(), p.cluster_default_radius.to_string()));
        out.push(("cluster.min_size".into(), p.min_cluster_size.to_string()));
        let radii: BTreeMap<_, _> = p.cluster_radii.iter().collect();
        for (name, r) in radii {
            out.push((format!("cluster.radius.{name}"), r.to_string()));
        }
        let r = &self.ransac;
        out.extend([
            ("descriptor.normal_radius".into(), p.normal_radius.to_string()),
            ("descriptor.feature_radius".into(), p.feature_radius.to_string()),
            ("ransac.max_iterations".into(), r.max_iterations.to_string()),
            ("ransac.inlier_threshold".into(), r.inlier_threshold.to_string()),
            ("ransac.sample_size".into(), r.sample_size.to_string()),
            ("ransac.seed".into(), r.seed.to_string()),
            ("ransac.confidence".into(), r.confidence.to_string()),
            ("ransac.refine_rounds".into(), r.refine_rounds.to_string()),
            ("eval.inlier_threshold".into(), self.eval.inlier_threshold.to_string()),
            ("eval.re_max_deg".into(), self.eval.re_max_deg.to_string()),
            ("eval.te_max".into(), self.eval.te_max.to_string()),
        ]);
        out
    }

    pub fn serialize(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
