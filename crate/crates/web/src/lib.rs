//! Browser bindings for the edgefit demo page.
//!
//! Three operations are exposed: rendering a cloud's splat, edge and corner
//! maps from a chosen view ([`Scene`]), sweeping the splat variance over a
//! sparse ring ([`sweep_sigma`]), and stepping a coordinate fit with or
//! without the edge/corner terms ([`Fitter`]). Images cross the boundary as
//! flat row-major `Float64Array`s.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

use edgefit::analysis::{connected_components, cube_benchmark, HALF_MAX};
use edgefit::camera::{default_angle_pool, normalize_cloud, PointCloud, ViewSpec};
use edgefit::fit::{adam_step, AdamState, FitConfig};
use edgefit::losses::{chamfer, evaluate, render, render_maps, view_targets, LossWeights, RenderConfig, ViewTarget};
use edgefit::shapes;
use edgefit::splat::SplatConfig;

fn msg(e: edgefit::Error) -> String {
    e.to_string()
}

fn render_config(sigma2: f64) -> Result<RenderConfig, String> {
    let cfg = RenderConfig { splat: SplatConfig::with_sigma2(sigma2), ..RenderConfig::default() };
    cfg.validate().map_err(msg)?;
    Ok(cfg)
}

fn view(azimuth: f64, elevation: f64) -> Result<ViewSpec, String> {
    let v = ViewSpec::new(azimuth, elevation);
    v.validate().map_err(msg)?;
    Ok(v)
}

/// Splat image, edge map and corner map of `cloud`, concatenated.
fn three_maps(cloud: &PointCloud, view: &ViewSpec, cfg: &RenderConfig) -> Result<Vec<f64>, String> {
    let img = render(cloud, view, cfg).map_err(msg)?;
    let maps = render_maps(cloud, view, cfg).map_err(msg)?;
    let mut out = img.into_vec();
    out.extend_from_slice(maps.edge.data());
    out.extend_from_slice(maps.corner.data());
    Ok(out)
}

fn build_shape(shape: &str, n: usize, seed: u64) -> Result<PointCloud, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cloud = match shape {
        "cube" => shapes::cube_surface(&mut rng, n),
        "solid" => shapes::uniform_cube(&mut rng, n),
        "ring" => shapes::ring(n, 0.4),
        "square" => shapes::square_outline(0.4, n.div_ceil(4).max(1)),
        other => return Err(format!("unknown shape {other:?}")),
    }
    .map_err(msg)?;
    normalize_cloud(&cloud).map_err(msg)
}

/// A fixed cloud that can be viewed from any angle.
#[wasm_bindgen]
pub struct Scene {
    cloud: PointCloud,
}

#[wasm_bindgen]
impl Scene {
    /// `shape` is one of `cube`, `solid`, `ring`, `square`.
    #[wasm_bindgen(constructor)]
    pub fn new(shape: &str, points: usize, seed: u64) -> Result<Scene, String> {
        Ok(Scene { cloud: build_shape(shape, points, seed)? })
    }

    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }

    /// Three 64×64 images back to back: splat, edge map, corner map.
    pub fn render(&self, azimuth: f64, elevation: f64, sigma2: f64) -> Result<Vec<f64>, String> {
        three_maps(&self.cloud, &view(azimuth, elevation)?, &render_config(sigma2)?)
    }
}

/// Result of [`sweep_sigma`]: one splat per variance, side by side.
#[wasm_bindgen]
pub struct Sweep {
    strip: Vec<f64>,
    components: Vec<u32>,
    width: usize,
}

#[wasm_bindgen]
impl Sweep {
    /// Row-major strip of height 64.
    pub fn strip(&self) -> Vec<f64> {
        self.strip.clone()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Connected components above half the maximum, per variance.
    pub fn components(&self) -> Vec<u32> {
        self.components.clone()
    }
}

/// Renders a ring of `points` points of `radius` at each splat variance.
#[wasm_bindgen]
pub fn sweep_sigma(values: Vec<f64>, points: usize, radius: f64) -> Result<Sweep, String> {
    let cloud = shapes::ring(points, radius).map_err(msg)?;
    let mut images = Vec::with_capacity(values.len());
    let mut components = Vec::with_capacity(values.len());
    for &s2 in &values {
        let img = render(&cloud, &ViewSpec::default(), &render_config(s2)?).map_err(msg)?;
        components.push(connected_components(&img, HALF_MAX) as u32);
        images.push(img);
    }
    let strip = edgefit::analysis::hstack(&images).map_err(msg)?;
    Ok(Sweep { width: strip.width(), strip: strip.into_vec(), components })
}

/// Step-by-step fit of a jittered cube to the clean one.
#[wasm_bindgen]
pub struct Fitter {
    params: Vec<f64>,
    target: PointCloud,
    targets: Vec<ViewTarget>,
    render: RenderConfig,
    cfg: FitConfig,
    state: AdamState,
    rng: ChaCha8Rng,
    step: usize,
    last_cd: f64,
}

#[wasm_bindgen]
impl Fitter {
    /// `use_visual` selects the scheduled edge/corner weights; otherwise the
    /// fit uses Chamfer distance alone.
    #[wasm_bindgen(constructor)]
    pub fn new(points: usize, jitter: f64, seed: u64, use_visual: bool) -> Result<Fitter, String> {
        let (initial, target) = cube_benchmark(seed, points, jitter).map_err(msg)?;
        let render = RenderConfig::default();
        let pool = default_angle_pool();
        let targets = view_targets(&target, &pool, &render).map_err(msg)?;
        let mut cfg = FitConfig { seed, ..FitConfig::default() };
        if !use_visual {
            cfg.weights_phase1 = LossWeights::CHAMFER_ONLY;
            cfg.weights_phase2 = LossWeights::CHAMFER_ONLY;
        }
        let last_cd = chamfer(&initial, &target).map_err(msg)?.0;
        Ok(Fitter {
            state: AdamState::new(initial.len() * 3),
            params: initial.to_flat(),
            target,
            targets,
            render,
            rng: ChaCha8Rng::seed_from_u64(seed),
            cfg,
            step: 0,
            last_cd,
        })
    }

    /// Runs `n` optimizer steps and returns the last total loss.
    pub fn advance(&mut self, n: usize) -> Result<f64, String> {
        let mut total = f64::NAN;
        for _ in 0..n {
            let drawn = rand::seq::index::sample(&mut self.rng, self.targets.len(), self.cfg.views_per_step);
            let step_targets: Vec<ViewTarget> = drawn.iter().map(|i| self.targets[i].clone()).collect();
            let cloud = PointCloud::from_flat(&self.params).map_err(msg)?;
            let weights = self.cfg.weights_at(self.step);
            let eval = evaluate(&cloud, &self.target, &step_targets, &weights, &self.render, None).map_err(msg)?;
            let grad: Vec<f64> = eval.grad.into_iter().flatten().collect();
            adam_step(&mut self.params, &grad, &mut self.state, &self.cfg).map_err(msg)?;
            total = eval.report.total;
            self.last_cd = eval.report.cd;
            self.step += 1;
        }
        Ok(total)
    }

    pub fn steps(&self) -> usize {
        self.step
    }

    /// Chamfer distance at the start of the most recent step.
    pub fn chamfer(&self) -> f64 {
        self.last_cd
    }

    /// Flat `x y z` coordinates of the current cloud.
    pub fn points(&self) -> Vec<f64> {
        self.params.clone()
    }

    /// Current cloud's splat, edge and corner maps from one view.
    pub fn render(&self, azimuth: f64, elevation: f64) -> Result<Vec<f64>, String> {
        let cloud = PointCloud::from_flat(&self.params).map_err(msg)?;
        three_maps(&cloud, &view(azimuth, elevation)?, &self.render)
    }

    /// Target cloud's maps from the same view, for side-by-side display.
    pub fn render_target(&self, azimuth: f64, elevation: f64) -> Result<Vec<f64>, String> {
        three_maps(&self.target, &view(azimuth, elevation)?, &self.render)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scene_renders_three_maps() {
        let s = Scene::new("cube", 200, 1).unwrap();
        assert_eq!(s.len(), 200);
        let out = s.render(30.0, 20.0, 0.5).unwrap();
        assert_eq!(out.len(), 3 * 64 * 64);
        let edge = &out[4096..8192];
        assert!(edge.iter().all(|&v| (0.0..=0.37 + 1e-12).contains(&v)));
        assert!(Scene::new("teapot", 10, 0).is_err());
        assert!(s.render(0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn sweep_matches_cli_defaults() {
        let sw = sweep_sigma(vec![0.1, 0.5, 1.0, 2.0], 24, 0.15).unwrap();
        assert_eq!(sw.width(), 256);
        assert_eq!(sw.strip().len(), 64 * 256);
        let c = sw.components();
        assert!(c[0] > 1);
        assert_eq!(&c[1..], &[1, 1, 1]);
    }

    #[test]
    fn fitter_reduces_chamfer() {
        let mut f = Fitter::new(96, 0.05, 2, true).unwrap();
        let start = f.chamfer();
        f.advance(150).unwrap();
        assert_eq!(f.steps(), 150);
        assert!(f.chamfer() < start);
        assert_eq!(f.points().len(), 96 * 3);
        assert_eq!(f.render(0.0, 0.0).unwrap().len(), 3 * 4096);
        assert_eq!(f.render_target(0.0, 0.0).unwrap().len(), 3 * 4096);
    }

    #[test]
    fn fitter_is_deterministic() {
        let mut a = Fitter::new(64, 0.05, 3, false).unwrap();
        let mut b = Fitter::new(64, 0.05, 3, false).unwrap();
        assert_eq!(a.advance(20).unwrap(), b.advance(20).unwrap());
        assert_eq!(a.points(), b.points());
    }
}
