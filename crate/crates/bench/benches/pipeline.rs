use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use semreg_bench::Fixture;
use semreg_core::matching::{compute_fpfh, score_matrix, scene_similarity_matrix, topk_mask, MatchingMode};
use semreg_core::{ransac_register, Matcher, PipelineParams, RansacConfig, SpatialIndex};

fn spatial(c: &mut Criterion) {
    let f = Fixture::repeated(0, 1000);
    let pts = f.src.points();
    c.bench_function("spatial_index_build", |b| b.iter(|| SpatialIndex::build(black_box(pts))));
    let index = SpatialIndex::build(pts);
    let centers: Vec<_> = f.src_kp.indices().iter().map(|&i| pts[i]).collect();
    c.bench_function("radius_query_1000x0.8m", |b| {
        let mut out = Vec::new();
        b.iter(|| {
            let mut total = 0;
            for p in &centers {
                index.radius_neighbors_into(p, 0.8, &mut out).unwrap();
                total += out.len();
            }
            total
        })
    });
}

fn descriptors(c: &mut Criterion) {
    let f = Fixture::repeated(0, 1000);
    let params = PipelineParams::outdoor();
    let index = SpatialIndex::build(f.src.points());
    c.bench_function("fpfh_1000_keypoints", |b| {
        b.iter(|| compute_fpfh(&f.src, &index, &f.src_kp, params.normal_radius, params.feature_radius).unwrap())
    });
}

fn matching(c: &mut Criterion) {
    let f = Fixture::repeated(0, 1000);
    let params = PipelineParams::outdoor();
    let pair = f.prepare(&params);
    c.bench_function("score_matrix_1000x1000", |b| {
        b.iter(|| score_matrix(pair.src.descriptors(), pair.dst.descriptors()).unwrap())
    });
    let src_sig = pair.src.bmr_signatures(&params.bmr);
    let dst_sig = pair.dst.bmr_signatures(&params.bmr);
    c.bench_function("bmr_signatures_1000", |b| b.iter(|| pair.src.bmr_signatures(&params.bmr)));
    let sim = scene_similarity_matrix(&src_sig, &dst_sig).unwrap();
    c.bench_function("scene_similarity_1000x1000", |b| {
        b.iter(|| scene_similarity_matrix(&src_sig, &dst_sig).unwrap())
    });
    c.bench_function("topk_mask_k2", |b| b.iter(|| topk_mask(&sim, 2).unwrap()));
    for mode in [MatchingMode::Baseline, MatchingMode::Full] {
        let p = PipelineParams { mode, ..params.clone() };
        c.bench_function(&format!("pipeline_run_{}", mode.name()), |b| {
            b.iter(|| pair.run(&p, Matcher::NearestNeighbor).unwrap())
        });
    }
    c.bench_function("prepare_pair", |b| b.iter(|| f.prepare(&params)));
}

fn estimation(c: &mut Criterion) {
    let f = Fixture::repeated(0, 1000);
    let params = PipelineParams::outdoor();
    let pair = f.prepare(&params);
    let corr = pair.run(&params, Matcher::NearestNeighbor).unwrap();
    let (src, dst) = (pair.src.keypoint_positions(), pair.dst.keypoint_positions());
    c.bench_function("ransac_full_correspondences", |b| {
        b.iter_batched(
            RansacConfig::outdoor,
            |cfg| ransac_register(&src, &dst, &corr, &cfg).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = spatial, descriptors, matching, estimation
}
criterion_main!(benches);
