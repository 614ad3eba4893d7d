//! Differentiable splatting of projected points.
//!
//! Each point contributes the outer product of a row activation
//! `exp(-(r - v)² / 2σ²)` and a column activation `exp(-(c - u)² / 2σ²)`;
//! the image is the plain sum over points (no saturation). Activations more
//! than `truncation_radius` pixels from the point along either axis are
//! exactly zero, in the forward pass and in the pullback alike.

use crate::camera::PixelCoords;
use crate::error::{Error, Result};
use crate::raster::ImageGrid;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplatConfig {
    pub sigma2: f64,
    pub height: usize,
    pub width: usize,
    pub truncation_radius: f64,
}

impl SplatConfig {
    pub const DEFAULT_SIGMA2: f64 = 0.5;
    /// Default truncation radius in units of σ.
    pub const RADIUS_SIGMAS: f64 = 5.0;

    /// 64×64 grid with the default truncation for `sigma2`.
    pub fn with_sigma2(sigma2: f64) -> Self {
        Self { sigma2, height: 64, width: 64, truncation_radius: Self::RADIUS_SIGMAS * sigma2.sqrt() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::Parameter(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        if self.height == 0 || self.width == 0 {
            return Err(Error::Parameter("splat grid must be non-empty".into()));
        }
        if !(self.truncation_radius >= 3.0 * self.sigma2.sqrt()) {
            return Err(Error::Parameter(format!(
                "truncation radius {} is below 3 sigma ({})",
                self.truncation_radius,
                3.0 * self.sigma2.sqrt()
            )));
        }
        Ok(())
    }
}

impl Default for SplatConfig {
    fn default() -> Self {
        Self::with_sigma2(Self::DEFAULT_SIGMA2)
    }
}

/// Activation window of one point along one axis.
struct Window {
    start: usize,
    /// `exp(-d² / 2σ²)` for each index in the window.
    act: Vec<f64>,
    /// `d = index - center` for each index in the window.
    offset: Vec<f64>,
}

fn window(center: f64, len: usize, cfg: &SplatConfig) -> Window {
    let lo = (center - cfg.truncation_radius).ceil().max(0.0);
    let hi = (center + cfg.truncation_radius).floor().min(len as f64 - 1.0);
    if !(lo <= hi) {
        return Window { start: 0, act: Vec::new(), offset: Vec::new() };
    }
    let (lo, hi) = (lo as usize, hi as usize);
    let inv = 1.0 / (2.0 * cfg.sigma2);
    let offset: Vec<f64> = (lo..=hi).map(|i| i as f64 - center).collect();
    let act = offset.iter().map(|d| (-d * d * inv).exp()).collect();
    Window { start: lo, act, offset }
}

pub fn splat(coords: &PixelCoords, cfg: &SplatConfig) -> Result<ImageGrid> {
    cfg.validate()?;
    if coords.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut img = ImageGrid::zeros(cfg.height, cfg.width);
    let w = cfg.width;
    let data = img.data_mut();
    for &[u, v] in &coords.coords {
        let rows = window(v, cfg.height, cfg);
        let cols = window(u, cfg.width, cfg);
        for (dr, &a) in rows.act.iter().enumerate() {
            let base = (rows.start + dr) * w + cols.start;
            for (dc, &b) in cols.act.iter().enumerate() {
                data[base + dc] += a * b;
            }
        }
    }
    Ok(img)
}

/// Gradient of `⟨upstream, splat(coords)⟩` with respect to each `(u, v)`.
pub fn splat_pullback(coords: &PixelCoords, cfg: &SplatConfig, upstream: &ImageGrid) -> Result<Vec<[f64; 2]>> {
    cfg.validate()?;
    if upstream.dims() != (cfg.height, cfg.width) {
        return Err(Error::Dimension(format!(
            "upstream {}x{} vs splat grid {}x{}",
            upstream.height(),
            upstream.width(),
            cfg.height,
            cfg.width
        )));
    }
    let w = cfg.width;
    let up = upstream.data();
    let inv_s2 = 1.0 / cfg.sigma2;
    let mut out = Vec::with_capacity(coords.len());
    for &[u, v] in &coords.coords {
        let rows = window(v, cfg.height, cfg);
        let cols = window(u, cfg.width, cfg);
        // d/du exp(-(c-u)²/2σ²) = (c-u)/σ² · exp(..), likewise for v.
        let (mut gu, mut gv) = (0.0, 0.0);
        for (dr, (&a, &dy)) in rows.act.iter().zip(&rows.offset).enumerate() {
            let base = (rows.start + dr) * w + cols.start;
            let (mut s_b, mut s_db) = (0.0, 0.0);
            for (dc, (&b, &dx)) in cols.act.iter().zip(&cols.offset).enumerate() {
                let g = up[base + dc];
                s_b += g * b;
                s_db += g * b * dx;
            }
            gu += a * s_db;
            gv += a * dy * s_b;
        }
        out.push([gu * inv_s2, gv * inv_s2]);
    }
    Ok(out)
}
