use edgefit::analysis::cube_benchmark;
use edgefit::camera::{default_angle_pool, PointCloud};
use edgefit::fit::{fit, FitConfig};
use edgefit::losses::{chamfer, LossWeights, RenderConfig};

fn short(steps1: usize, steps2: usize) -> FitConfig {
    FitConfig { phase1_steps: steps1, phase2_steps: steps2, seed: 5, ..FitConfig::default() }
}

#[test]
fn fit_from_target_stays_put() {
    let (_, target) = cube_benchmark(1, 96, 0.05).unwrap();
    let (out, trace) = fit(&target, &target, &default_angle_pool(), &short(5, 2), &RenderConfig::default()).unwrap();
    assert_eq!(trace.reports[0].total, 0.0);
    assert_eq!(out, target);
    assert_eq!(trace.len(), 7);
    assert_eq!(trace.step_seconds.len(), 7);
}

#[test]
fn identical_configs_give_identical_traces() {
    let (init, target) = cube_benchmark(2, 96, 0.05).unwrap();
    let pool = default_angle_pool();
    let cfg = FitConfig { snapshot_every: 5, ..short(12, 8) };
    let (a, ta) = fit(&init, &target, &pool, &cfg, &RenderConfig::default()).unwrap();
    let (b, tb) = fit(&init, &target, &pool, &cfg, &RenderConfig::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(ta.reports, tb.reports);
    assert_eq!(ta.views, tb.views);
    assert_eq!(ta.snapshots, tb.snapshots);
    assert_eq!(ta.snapshots.len(), 4);
    assert!(ta.reports[4].emd.is_some() && ta.reports[3].emd.is_none());
    for drawn in &ta.views {
        let mut d = drawn.clone();
        d.sort();
        d.dedup();
        assert_eq!(d.len(), 4);
    }
    let other = FitConfig { seed: 6, ..cfg };
    let (_, tc) = fit(&init, &target, &pool, &other, &RenderConfig::default()).unwrap();
    assert_ne!(ta.views, tc.views);
}

/// Plain Chamfer descent with its own Adam loop.
fn chamfer_descent(init: &PointCloud, target: &PointCloud, cfg: &FitConfig) -> (Vec<f64>, Vec<f64>) {
    let mut p = init.to_flat();
    let (mut m, mut v) = (vec![0.0; p.len()], vec![0.0; p.len()]);
    let mut values = Vec::new();
    for t in 1..=cfg.total_steps() {
        let (cd, g) = chamfer(&PointCloud::from_flat(&p).unwrap(), target).unwrap();
        values.push(cd);
        let g: Vec<f64> = g.into_iter().flatten().collect();
        let (b1, b2) = (cfg.beta1, cfg.beta2);
        let (c1, c2) = (1.0 - b1.powf(t as f64), 1.0 - b2.powf(t as f64));
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            p[i] -= cfg.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + cfg.adam_eps);
        }
    }
    (p, values)
}

#[test]
fn zero_weights_reduce_to_chamfer_descent() {
    let (init, target) = cube_benchmark(3, 128, 0.05).unwrap();
    let cfg = FitConfig {
        weights_phase1: LossWeights::CHAMFER_ONLY,
        weights_phase2: LossWeights::CHAMFER_ONLY,
        ..short(40, 10)
    };
    let (out, trace) = fit(&init, &target, &default_angle_pool(), &cfg, &RenderConfig::default()).unwrap();
    let (p, values) = chamfer_descent(&init, &target, &cfg);
    assert_eq!(out.to_flat(), p);
    let fitted: Vec<f64> = trace.reports.iter().map(|r| r.total).collect();
    assert_eq!(fitted, values);
}

#[test]
fn benchmark_trend_and_stability() {
    let (init, target) = cube_benchmark(0, 256, 0.05).unwrap();
    let cfg = FitConfig { snapshot_every: 1, ..FitConfig::default() };
    let (_, trace) = fit(&init, &target, &default_angle_pool(), &cfg, &RenderConfig::default()).unwrap();
    assert_eq!(trace.len(), 2500);

    let alpha = 2.0 / 51.0;
    let totals: Vec<f64> = trace.reports.iter().map(|r| r.total).collect();
    let ema = totals[1..].iter().fold(totals[0], |e, &x| alpha * x + (1.0 - alpha) * e);
    assert!(ema < totals[0], "ema {ema} vs start {}", totals[0]);

    let (lo, hi) = target.bounds();
    assert_eq!(trace.snapshots.len(), 2500);
    for (step, cloud) in &trace.snapshots {
        for p in cloud.points() {
            for k in 0..3 {
                let (c, half) = (0.5 * (lo[k] + hi[k]), hi[k] - lo[k]);
                assert!((p[k] - c).abs() <= half, "step {step}: point {p:?} left the 2x box");
            }
        }
    }
}
