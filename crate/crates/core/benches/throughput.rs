use std::hint::black_box;
use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use salmon_core::gtgen::{build_ground_truth, GtConfig, SubjectCounts, ViewingGeometry};
use salmon_core::metrics::{evaluate, kendall_tau_combined_with, EvalConfig, SaliencyMap, ThresholdMode};
use salmon_core::synth::{detector_map, generate_batch, to_dataset, DetectorKind, SceneParams};
use salmon_core::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn params() -> SceneParams {
    SceneParams {
        width: 320,
        height: 240,
        subjects: SubjectCounts { et: 20, pc: 30, rd: 35 },
        ..SceneParams::default()
    }
}

fn gt_build(c: &mut Criterion) {
    let scenes = generate_batch(1, 16, &params(), Execution::Parallel).unwrap();
    let ds = to_dataset(&scenes, Path::new("."), ViewingGeometry::default());
    let config = GtConfig::default();
    let mut g = c.benchmark_group("gt_build");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| build_ground_truth(black_box(&ds), &config, exec).unwrap())
        });
    }
    g.finish();
}

fn evaluation(c: &mut Criterion) {
    let scenes = generate_batch(2, 16, &params(), Execution::Parallel).unwrap();
    let ds = to_dataset(&scenes, Path::new("."), ViewingGeometry::default());
    let gts = build_ground_truth(&ds, &GtConfig::default(), Execution::Parallel).unwrap().images;
    let maps: Vec<SaliencyMap> = scenes
        .iter()
        .map(|s| SaliencyMap::new(s.scene.spec.image_id.clone(), detector_map(&s.scene, DetectorKind::Noisy)).unwrap())
        .collect();
    let mut g = c.benchmark_group("evaluate");
    g.sample_size(10);
    for thresholds in [ThresholdMode::Uniform256, ThresholdMode::Exact] {
        let config = EvalConfig {
            thresholds,
            ..EvalConfig::default()
        };
        for (name, exec) in MODES {
            g.bench_function(BenchmarkId::new(name, thresholds), |b| {
                b.iter(|| evaluate(black_box(&ds), &gts, &maps, &config, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn tau(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 3000;
    let mut draw = || (0..n).map(|_| f64::from(rng.random_range(0..200u32)) / 199.0).collect::<Vec<_>>();
    let est = draw();
    let refs = [draw(), draw(), draw()];
    let refs: Vec<&[f64]> = refs.iter().map(Vec::as_slice).collect();
    let mut g = c.benchmark_group("tau_combined_3000");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| kendall_tau_combined_with(black_box(&est), &refs, 1e-9, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, gt_build, evaluation, tau);
criterion_main!(benches);
