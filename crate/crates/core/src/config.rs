//! Run configuration as flat `key = value` text.
//!
//! Keys carry their units (`splat.sigma2_px2`, `camera.fx_px`, ...). Lines
//! starting with `#` are comments. Unknown or repeated keys are errors;
//! absent keys keep their defaults. Every value is validated on load.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::camera::{default_angle_pool, ViewSpec};
use crate::error::{Error, Result};
use crate::fit::FitConfig;
use crate::losses::RenderConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub render: RenderConfig,
    /// Camera distance applied to every pool view.
    pub distance: f64,
    /// `(azimuth, elevation)` pairs in degrees.
    pub pool: Vec<(f64, f64)>,
    pub fit: FitConfig,
    pub initial_path: Option<PathBuf>,
    pub target_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub trace_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            render: RenderConfig::default(),
            distance: ViewSpec::DEFAULT_DISTANCE,
            pool: default_angle_pool().iter().map(|v| (v.azimuth, v.elevation)).collect(),
            fit: FitConfig::default(),
            initial_path: None,
            target_path: None,
            output_path: None,
            trace_path: None,
        }
    }
}

const KEYS: &[&str] = &[
    "camera.fx_px",
    "camera.fy_px",
    "camera.cx_px",
    "camera.cy_px",
    "camera.distance_units",
    "image.height_px",
    "image.width_px",
    "splat.sigma2_px2",
    "splat.truncation_radius_px",
    "visual.kernel_sigma_px",
    "visual.eps",
    "visual.sobel_threshold",
    "views.pool_deg",
    "loss.lambda1_phase1",
    "loss.lambda2_phase1",
    "loss.lambda1_phase2",
    "loss.lambda2_phase2",
    "fit.learning_rate",
    "fit.beta1",
    "fit.beta2",
    "fit.adam_eps",
    "fit.views_per_step",
    "fit.phase1_steps",
    "fit.phase2_steps",
    "fit.snapshot_every_steps",
    "seed",
    "io.initial_path",
    "io.target_path",
    "io.output_path",
    "io.trace_path",
];

fn parse_value<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("line {line}: bad value {value:?} for {key}")))
}

fn parse_pool(value: &str, line: usize) -> Result<Vec<(f64, f64)>> {
    value
        .split_whitespace()
        .map(|pair| {
            let (a, e) = pair
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("line {line}: pool entry {pair:?} is not azimuth:elevation")))?;
            Ok((parse_value("views.pool_deg", a, line)?, parse_value("views.pool_deg", e, line)?))
        })
        .collect()
}

fn opt_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

impl RunConfig {
    pub fn pool_views(&self) -> Vec<ViewSpec> {
        self.pool.iter().map(|&(azimuth, elevation)| ViewSpec { azimuth, elevation, distance: self.distance }).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.render.validate()?;
        self.fit.validate()?;
        if self.pool.is_empty() {
            return Err(Error::Config("angle pool is empty".into()));
        }
        for v in self.pool_views() {
            v.validate()?;
        }
        if self.pool.len() < self.fit.views_per_step {
            return Err(Error::Config(format!(
                "angle pool has {} views but fit.views_per_step is {}",
                self.pool.len(),
                self.fit.views_per_step
            )));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse()
    }

    pub fn to_text(&self) -> String {
        let r = &self.render;
        let f = &self.fit;
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let pool: Vec<String> = self.pool.iter().map(|(a, e)| format!("{a}:{e}")).collect();
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("camera.fx_px", r.intrinsics.fx.to_string());
        kv("camera.fy_px", r.intrinsics.fy.to_string());
        kv("camera.cx_px", r.intrinsics.cx.to_string());
        kv("camera.cy_px", r.intrinsics.cy.to_string());
        kv("camera.distance_units", self.distance.to_string());
        kv("image.height_px", r.splat.height.to_string());
        kv("image.width_px", r.splat.width.to_string());
        kv("splat.sigma2_px2", r.splat.sigma2.to_string());
        kv("splat.truncation_radius_px", r.splat.truncation_radius.to_string());
        kv("visual.kernel_sigma_px", r.visual.kernel_sigma.to_string());
        kv("visual.eps", r.visual.eps.to_string());
        kv("visual.sobel_threshold", r.visual.sobel_threshold.to_string());
        kv("views.pool_deg", pool.join(" "));
        kv("loss.lambda1_phase1", f.weights_phase1.lambda1.to_string());
        kv("loss.lambda2_phase1", f.weights_phase1.lambda2.to_string());
        kv("loss.lambda1_phase2", f.weights_phase2.lambda1.to_string());
        kv("loss.lambda2_phase2", f.weights_phase2.lambda2.to_string());
        kv("fit.learning_rate", f.learning_rate.to_string());
        kv("fit.beta1", f.beta1.to_string());
        kv("fit.beta2", f.beta2.to_string());
        kv("fit.adam_eps", f.adam_eps.to_string());
        kv("fit.views_per_step", f.views_per_step.to_string());
        kv("fit.phase1_steps", f.phase1_steps.to_string());
        kv("fit.phase2_steps", f.phase2_steps.to_string());
        kv("fit.snapshot_every_steps", f.snapshot_every.to_string());
        kv("seed", f.seed.to_string());
        kv("io.initial_path", path(&self.initial_path));
        kv("io.target_path", path(&self.target_path));
        kv("io.output_path", path(&self.output_path));
        kv("io.trace_path", path(&self.trace_path));
        s
    }
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = HashSet::new();
        let mut sigma2_set = false;
        let mut radius_set = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::Config(format!("line {line_no}: expected key = value")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Config(format!("line {line_no}: unknown key {key:?}")));
            }
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {line_no}: duplicate key {key:?}")));
            }
            let f64v = || parse_value::<f64>(key, value, line_no);
            let usizev = || parse_value::<usize>(key, value, line_no);
            let r = &mut cfg.render;
            let fc = &mut cfg.fit;
            match key {
                "camera.fx_px" => r.intrinsics.fx = f64v()?,
                "camera.fy_px" => r.intrinsics.fy = f64v()?,
                "camera.cx_px" => r.intrinsics.cx = f64v()?,
                "camera.cy_px" => r.intrinsics.cy = f64v()?,
                "camera.distance_units" => cfg.distance = f64v()?,
                "image.height_px" => r.splat.height = usizev()?,
                "image.width_px" => r.splat.width = usizev()?,
                "splat.sigma2_px2" => {
                    r.splat.sigma2 = f64v()?;
                    sigma2_set = true;
                }
                "splat.truncation_radius_px" => {
                    r.splat.truncation_radius = f64v()?;
                    radius_set = true;
                }
                "visual.kernel_sigma_px" => r.visual.kernel_sigma = f64v()?,
                "visual.eps" => r.visual.eps = f64v()?,
                "visual.sobel_threshold" => r.visual.sobel_threshold = f64v()?,
                "views.pool_deg" => cfg.pool = parse_pool(value, line_no)?,
                "loss.lambda1_phase1" => fc.weights_phase1.lambda1 = f64v()?,
                "loss.lambda2_phase1" => fc.weights_phase1.lambda2 = f64v()?,
                "loss.lambda1_phase2" => fc.weights_phase2.lambda1 = f64v()?,
                "loss.lambda2_phase2" => fc.weights_phase2.lambda2 = f64v()?,
                "fit.learning_rate" => fc.learning_rate = f64v()?,
                "fit.beta1" => fc.beta1 = f64v()?,
                "fit.beta2" => fc.beta2 = f64v()?,
                "fit.adam_eps" => fc.adam_eps = f64v()?,
                "fit.views_per_step" => fc.views_per_step = usizev()?,
                "fit.phase1_steps" => fc.phase1_steps = usizev()?,
                "fit.phase2_steps" => fc.phase2_steps = usizev()?,
                "fit.snapshot_every_steps" => fc.snapshot_every = usizev()?,
                "seed" => fc.seed = parse_value(key, value, line_no)?,
                "io.initial_path" => cfg.initial_path = opt_path(value),
                "io.target_path" => cfg.target_path = opt_path(value),
                "io.output_path" => cfg.output_path = opt_path(value),
                "io.trace_path" => cfg.trace_path = opt_path(value),
                _ => unreachable!("key list and match arms agree"),
            }
        }
        if sigma2_set && !radius_set {
            cfg.render.splat.truncation_radius =
                crate::splat::SplatConfig::with_sigma2(cfg.render.splat.sigma2).truncation_radius;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
