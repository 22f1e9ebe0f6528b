//! Subcommand implementations.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use semreg_core::evaluation::{correspondence_metrics, registration_errors, sweep_parameter, BenchmarkReport, EvalPair, PairMetrics, SweepParam};
use semreg_core::io::{correspondences_csv, format_poses, report_csv, report_json, saliency_csv, sweep_csv, write_labeled_cloud, write_poses, PlyFormat};
use semreg_core::semantic::{cluster_landmarks, compute_saliency};
use semreg_core::synth::{generate_scene_pair, SceneSpec};
use semreg_core::{ransac_register, CorrespondenceSet, LabelId, PipelineConfig, PreparedPair, RegistrationResult, RigidTransform};

use crate::args::*;
use crate::input::{keypoints, load_cloud, load_config, load_gt, pair_dirs, save_cloud, PairFiles};
use crate::{CmdResult, Failure};

pub fn dispatch(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Match(a) => match_cmd(a),
        Command::Register(a) => register_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Synth(a) => synth_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Saliency(a) => saliency_cmd(a),
        Command::Blur(a) => blur_cmd(a),
    }
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    std::fs::write(path, text).map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))
}

fn emit(path: Option<&Path>, text: &str) -> CmdResult {
    match path {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn matcher_label(cfg: &PipelineConfig) -> String {
    format!("{}-{}", cfg.pipeline.mode.name(), cfg.matcher.name())
}

fn prepare(src: &Path, dst: &Path, cfg: &PipelineConfig, map: Option<&Path>) -> CmdResult<PreparedPair> {
    let src = load_cloud(src, map)?;
    let dst = load_cloud(dst, map)?;
    let src_kp = keypoints(&src, cfg, 0)?;
    let dst_kp = keypoints(&dst, cfg, 1)?;
    Ok(PreparedPair::new(&src, &dst, &src_kp, &dst_kp, &cfg.pipeline)?)
}

fn metrics(pair: &PreparedPair, corr: &CorrespondenceSet, gt: &RigidTransform, cfg: &PipelineConfig) -> (usize, f64) {
    correspondence_metrics(
        corr,
        &pair.src.keypoint_positions(),
        &pair.dst.keypoint_positions(),
        gt,
        cfg.eval.inlier_threshold,
    )
}

/// RANSAC on the correspondences; `None` when there are too few to sample.
fn register(pair: &PreparedPair, corr: &CorrespondenceSet, cfg: &PipelineConfig) -> CmdResult<Option<RegistrationResult>> {
    if corr.len() < cfg.ransac.sample_size {
        return Ok(None);
    }
    Ok(Some(ransac_register(
        &pair.src.keypoint_positions(),
        &pair.dst.keypoint_positions(),
        corr,
        &cfg.ransac,
    )?))
}

fn match_cmd(a: MatchArgs) -> CmdResult {
    let cfg = load_config(&a.pipeline)?;
    let gt = load_gt(a.pair.gt.as_deref())?;
    let pair = prepare(&a.pair.src, &a.pair.dst, &cfg, a.pipeline.label_map.as_deref())?;
    let corr = pair.run(&cfg.pipeline, cfg.matcher)?;
    println!("matcher {}", matcher_label(&cfg));
    println!("correspondences {}", corr.len());
    if let Some(gt) = gt {
        let (n, ir) = metrics(&pair, &corr, &gt, &cfg);
        println!("IN {n}");
        println!("IR {ir:.6}");
    }
    if let Some(out) = &a.out {
        write_text(out, &correspondences_csv(&corr, pair.src.cloud().alphabet())?)?;
    }
    Ok(())
}

fn register_cmd(a: RegisterArgs) -> CmdResult {
    let cfg = load_config(&a.pipeline)?;
    let gt = load_gt(a.pair.gt.as_deref())?;
    let pair = prepare(&a.pair.src, &a.pair.dst, &cfg, a.pipeline.label_map.as_deref())?;
    let corr = pair.run(&cfg.pipeline, cfg.matcher)?;
    let result = register(&pair, &corr, &cfg)?.ok_or_else(|| {
        Failure::Data(format!(
            "{} correspondences, need at least {} to register",
            corr.len(),
            cfg.ransac.sample_size
        ))
    })?;
    println!("correspondences {}", corr.len());
    println!("inliers {}", result.inlier_indices.len());
    println!("iterations {}", result.iterations_used);
    println!("converged {}", result.converged);
    print!("transform {}", format_poses(std::slice::from_ref(&result.transform)));
    if let Some(gt) = gt {
        let (re, te) = registration_errors(&result.transform, &gt);
        println!("RE {re:.6}");
        println!("TE {te:.6}");
        println!("registered {}", cfg.eval.is_registered(re, te));
    }
    if let Some(out) = &a.out {
        write_poses(out, std::slice::from_ref(&result.transform))?;
    }
    Ok(())
}

fn bench_pair(files: &PairFiles, cfg: &PipelineConfig, map: Option<&Path>) -> CmdResult<PairMetrics> {
    let gt = load_gt(Some(&files.gt))?.expect("ground truth path given");
    let pair = prepare(&files.src, &files.dst, cfg, map)?;
    let start = Instant::now();
    let corr = pair.run(&cfg.pipeline, cfg.matcher)?;
    // Without enough correspondences the estimate stays at identity.
    let estimate = register(&pair, &corr, cfg)?.map_or_else(RigidTransform::identity, |r| r.transform);
    let timing_ms = start.elapsed().as_secs_f64() * 1e3;
    let (inlier_count, inlier_ratio) = metrics(&pair, &corr, &gt, cfg);
    let (re, te) = registration_errors(&estimate, &gt);
    Ok(PairMetrics {
        pair_id: files.id.clone(),
        matcher: matcher_label(cfg),
        correspondences: corr.len(),
        inlier_count,
        inlier_ratio,
        rotation_error_deg: re,
        translation_error: te,
        registered: cfg.eval.is_registered(re, te),
        timing_ms,
    })
}

fn bench_cmd(a: BenchArgs) -> CmdResult {
    let cfg = load_config(&a.pipeline)?;
    let pairs = pair_dirs(&a.dir)?;
    let map = a.pipeline.label_map.as_deref();
    let rows = pairs
        .par_iter()
        .map(|p| bench_pair(p, &cfg, map))
        .collect::<CmdResult<Vec<_>>>()?;
    let report = BenchmarkReport::new(rows, cfg.entries());
    std::fs::create_dir_all(&a.out).map_err(|e| Failure::Data(format!("cannot create {}: {e}", a.out.display())))?;
    write_text(&a.out.join("report.csv"), &report_csv(&report)?)?;
    write_text(&a.out.join("report.json"), &report_json(&report)?)?;
    println!("pairs {}", report.pair_count);
    println!("RR {:.6}", report.registration_recall);
    println!("mean IN {:.3}", report.mean_inlier_count);
    println!("mean IR {:.6}", report.mean_inlier_ratio);
    Ok(())
}

fn synth_cmd(a: SynthArgs) -> CmdResult {
    let mut spec = match a.scene {
        ScenePreset::Easy => SceneSpec::easy(a.seed),
        ScenePreset::Repeated => SceneSpec::repeated_structure(a.seed),
    };
    if let Some(n) = a.noise {
        spec.noise_sigma = n;
    }
    if let Some(o) = a.offset {
        spec.overlap_offset = o;
    }
    let pair = generate_scene_pair(&spec)?;
    let format = match a.format {
        PlyEncoding::Ascii => PlyFormat::Ascii,
        PlyEncoding::Binary => PlyFormat::BinaryLittleEndian,
    };
    std::fs::create_dir_all(&a.out).map_err(|e| Failure::Data(format!("cannot create {}: {e}", a.out.display())))?;
    write_labeled_cloud(&a.out.join("a.ply"), &pair.src, format)?;
    write_labeled_cloud(&a.out.join("b.ply"), &pair.dst, format)?;
    write_poses(&a.out.join("gt.txt"), std::slice::from_ref(&pair.t_gt))?;
    println!("src points {}", pair.src.len());
    println!("dst points {}", pair.dst.len());
    Ok(())
}

fn default_grid(param: SweepParam) -> Vec<f64> {
    match param {
        SweepParam::RLocal => vec![0.25, 0.5, 1.0, 1.5, 2.0],
        SweepParam::K => (1..=10).map(f64::from).collect(),
        SweepParam::Rings => vec![10.0, 20.0, 30.0, 40.0, 50.0],
        SweepParam::RingWidth => vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
    }
}

fn sweep_cmd(a: SweepArgs) -> CmdResult {
    let param = SweepParam::parse(&a.param)
        .ok_or_else(|| Failure::Usage(format!("unknown sweep parameter {:?}; use r_local, k, bmr.N or bmr.L", a.param)))?;
    let values = if a.values.is_empty() { default_grid(param) } else { a.values };
    let cfg = load_config(&a.pipeline)?;
    let map = a.pipeline.label_map.as_deref();
    let pairs = pair_dirs(&a.dir)?
        .par_iter()
        .map(|p| {
            let t_gt = load_gt(Some(&p.gt))?.expect("ground truth path given");
            Ok(EvalPair {
                pair: prepare(&p.src, &p.dst, &cfg, map)?,
                t_gt,
            })
        })
        .collect::<CmdResult<Vec<_>>>()?;
    let rows = sweep_parameter(&pairs, param, &values, &cfg.pipeline, cfg.matcher, cfg.eval.inlier_threshold)?;
    emit(a.out.as_deref(), &sweep_csv(&rows)?)
}

fn saliency_cmd(a: SaliencyArgs) -> CmdResult {
    let cfg = match &a.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let cloud = load_cloud(&a.cloud, a.label_map.as_deref())?;
    let alphabet = cloud.alphabet();
    let categories: Vec<LabelId> = alphabet.ids().filter(|&t| !alphabet.is_dynamic(t)).collect();
    let landmarks = cluster_landmarks(&cloud, &cfg.pipeline.cluster_params(alphabet), &categories)?;
    let w = compute_saliency(&cloud, &landmarks, &cfg.pipeline.bmr)?;
    emit(a.out.as_deref(), &saliency_csv(&w, alphabet)?)
}

fn blur_cmd(a: BlurArgs) -> CmdResult {
    let cloud = load_cloud(&a.cloud, a.label_map.as_deref())?;
    let blurred = semreg_core::evaluation::blur_labels(&cloud, a.radius, a.prob, a.seed)?;
    let changed = cloud.labels().iter().zip(blurred.labels()).filter(|(x, y)| x != y).count();
    save_cloud(&a.out, &blurred, a.label_map.as_deref())?;
    println!("relabeled {changed}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grids_are_valid_sweep_values() {
        for p in [SweepParam::RLocal, SweepParam::K, SweepParam::Rings, SweepParam::RingWidth] {
            let g = default_grid(p);
            assert!(!g.is_empty() && g.iter().all(|v| *v > 0.0));
            assert!(g.windows(2).all(|w| w[0] < w[1]));
        }
        assert_eq!(default_grid(SweepParam::K).len(), 10);
    }

    #[test]
    fn baseline_flag_shows_in_the_matcher_label() {
        let args = PipelineArgs {
            config: None,
            baseline: true,
            label_map: None,
        };
        assert_eq!(matcher_label(&load_config(&args).unwrap()), "baseline-nn");
        assert_eq!(matcher_label(&PipelineConfig::default()), "full-nn");
    }
}
