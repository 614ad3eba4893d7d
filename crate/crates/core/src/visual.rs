//! Edge and Harris-corner maps of a projected image, max-normalization with
//! piecewise-linear suppression, and the reverse pass through all of it.
//!
//! Pipeline for an image `I`:
//!
//! ```text
//! ix = I * Kx          iy = I * Ky           (Gaussian derivative kernels)
//! edge   = |ix| + |iy|
//! m11 = W * ix²   m12 = W * ix·iy   m22 = W * iy²      (W: 3×3 Gaussian window)
//! corner = (m11·m22 − m12²) / (m11 + m22 + eps)
//! map    = suppress(raw / max(raw))
//! ```
//!
//! The per-image maximum is a constant during differentiation.

use crate::error::{Error, Result};
use crate::raster::{
    convolve_same, convolve_same_pullback, gaussian_derivative_kernels3, gaussian_kernel3, ImageGrid, Kernel3,
};

/// Normalized inputs above this value are compressed.
pub const SUPPRESSION_KNEE: f64 = 0.1;
/// Slope applied above the knee.
pub const SUPPRESSION_SLOPE: f64 = 0.3;
/// Output of the suppression at normalized input 1.
pub const SUPPRESSION_MAX: f64 = SUPPRESSION_KNEE + SUPPRESSION_SLOPE * (1.0 - SUPPRESSION_KNEE);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VisualConfig {
    /// σ of the 3×3 derivative kernels and the structure-tensor window.
    pub kernel_sigma: f64,
    /// Added to the structure-tensor trace in the corner response.
    pub eps: f64,
    /// Binarization threshold for [`sobel_edges`].
    pub sobel_threshold: f64,
}

impl Default for VisualConfig {
    fn default() -> Self {
        Self { kernel_sigma: 1.0, eps: 1e-6, sobel_threshold: 0.5 }
    }
}

impl VisualConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kernel_sigma > 0.0 && self.kernel_sigma.is_finite()) {
            return Err(Error::Parameter(format!("kernel sigma must be positive, got {}", self.kernel_sigma)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Parameter(format!("eps must be positive, got {}", self.eps)));
        }
        if !(0.0..=1.0).contains(&self.sobel_threshold) {
            return Err(Error::Parameter(format!("sobel threshold must lie in [0, 1], got {}", self.sobel_threshold)));
        }
        Ok(())
    }
}

/// Suppressed edge and corner maps, values in `[0, SUPPRESSION_MAX]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeCornerMaps {
    pub edge: ImageGrid,
    pub corner: ImageGrid,
}

/// Per-image normalizers for the raw edge and corner responses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Normalizers {
    pub edge: f64,
    pub corner: f64,
}

/// Suppression curve for one normalized value.
#[inline]
pub fn suppress(x: f64) -> f64 {
    if x <= SUPPRESSION_KNEE {
        x
    } else {
        SUPPRESSION_KNEE + SUPPRESSION_SLOPE * (x - SUPPRESSION_KNEE)
    }
}

/// Pullback slope of [`suppress`]; the knee takes the upper slope.
#[inline]
pub fn suppress_slope(x: f64) -> f64 {
    if x < SUPPRESSION_KNEE {
        1.0
    } else {
        SUPPRESSION_SLOPE
    }
}

#[inline]
fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Returns `(raw_edge, ix, iy)`.
pub fn edge_map(img: &ImageGrid, sigma: f64) -> Result<(ImageGrid, ImageGrid, ImageGrid)> {
    let (kx, ky) = gaussian_derivative_kernels3(sigma)?;
    let ix = convolve_same(img, &kx)?;
    let iy = convolve_same(img, &ky)?;
    let edge = ix.zip_map(&iy, |a, b| a.abs() + b.abs())?;
    Ok((edge, ix, iy))
}

struct Tensor {
    m11: ImageGrid,
    m12: ImageGrid,
    m22: ImageGrid,
}

fn structure_tensor(ix: &ImageGrid, iy: &ImageGrid, window: &Kernel3) -> Result<Tensor> {
    let xx = ix.zip_map(ix, |a, b| a * b)?;
    let xy = ix.zip_map(iy, |a, b| a * b)?;
    let yy = iy.zip_map(iy, |a, b| a * b)?;
    Ok(Tensor { m11: convolve_same(&xx, window)?, m12: convolve_same(&xy, window)?, m22: convolve_same(&yy, window)? })
}

fn harris_response(t: &Tensor, eps: f64) -> ImageGrid {
    let (h, w) = t.m11.dims();
    ImageGrid::from_fn(h, w, |r, c| {
        let (a, b, d) = (t.m11.get(r, c), t.m12.get(r, c), t.m22.get(r, c));
        (a * d - b * b) / (a + d + eps)
    })
}

/// Harris response `det(M) / (trace(M) + eps)` of the windowed structure tensor.
pub fn corner_map(ix: &ImageGrid, iy: &ImageGrid, window: &Kernel3, eps: f64) -> Result<ImageGrid> {
    ix.check_same_dims(iy)?;
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
    }
    Ok(harris_response(&structure_tensor(ix, iy, window)?, eps))
}

fn check_non_negative(raw: &ImageGrid) -> Result<()> {
    // Harris responses can dip below zero by a rounding error where det(M) ≈ 0.
    let tol = 1e-12 * raw.data().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    if let Some(i) = raw.data().iter().position(|&v| v < -tol || v.is_nan()) {
        return Err(Error::Contract(format!("negative raw response {} at pixel {i}", raw.data()[i])));
    }
    Ok(())
}

fn apply_suppression(raw: &ImageGrid, scale: f64) -> ImageGrid {
    if scale <= 0.0 {
        return ImageGrid::zeros(raw.height(), raw.width());
    }
    raw.map(|v| suppress(v.max(0.0) / scale))
}

fn suppression_pullback(raw: &ImageGrid, scale: f64, upstream: &ImageGrid) -> ImageGrid {
    if scale <= 0.0 {
        return ImageGrid::zeros(raw.height(), raw.width());
    }
    let inv = 1.0 / scale;
    raw.zip_map(upstream, |v, g| if v < 0.0 { 0.0 } else { g * suppress_slope(v * inv) * inv })
        .expect("dimensions checked by caller")
}

/// Divides by the image maximum and applies the suppression curve.
pub fn normalize_and_suppress(raw: &ImageGrid) -> Result<ImageGrid> {
    check_non_negative(raw)?;
    Ok(apply_suppression(raw, raw.max()))
}

/// Every intermediate of one forward pass, kept for the pullback.
#[derive(Clone, Debug)]
pub struct VisualForward {
    pub ix: ImageGrid,
    pub iy: ImageGrid,
    pub raw_edge: ImageGrid,
    pub raw_corner: ImageGrid,
    pub normalizers: Normalizers,
    pub maps: EdgeCornerMaps,
    m11: ImageGrid,
    m12: ImageGrid,
    m22: ImageGrid,
    trace_eps: f64,
}

/// Forward pass; `frozen` replaces the per-image maxima when given.
pub fn visual_forward(img: &ImageGrid, cfg: &VisualConfig, frozen: Option<Normalizers>) -> Result<VisualForward> {
    cfg.validate()?;
    let (raw_edge, ix, iy) = edge_map(img, cfg.kernel_sigma)?;
    let window = gaussian_kernel3(cfg.kernel_sigma)?;
    let tensor = structure_tensor(&ix, &iy, &window)?;
    let raw_corner = harris_response(&tensor, cfg.eps);
    check_non_negative(&raw_corner)?;
    let normalizers = frozen.unwrap_or(Normalizers { edge: raw_edge.max(), corner: raw_corner.max() });
    let maps = EdgeCornerMaps {
        edge: apply_suppression(&raw_edge, normalizers.edge),
        corner: apply_suppression(&raw_corner, normalizers.corner),
    };
    Ok(VisualForward {
        ix,
        iy,
        raw_edge,
        raw_corner,
        normalizers,
        maps,
        m11: tensor.m11,
        m12: tensor.m12,
        m22: tensor.m22,
        trace_eps: cfg.eps,
    })
}

pub fn visual_maps(img: &ImageGrid, cfg: &VisualConfig) -> Result<EdgeCornerMaps> {
    Ok(visual_forward(img, cfg, None)?.maps)
}

/// Gradient with respect to the image, given gradients on the suppressed maps.
pub fn visual_forward_pullback(
    fwd: &VisualForward,
    cfg: &VisualConfig,
    upstream_edge: &ImageGrid,
    upstream_corner: &ImageGrid,
) -> Result<ImageGrid> {
    fwd.raw_edge.check_same_dims(upstream_edge)?;
    fwd.raw_edge.check_same_dims(upstream_corner)?;
    let g_edge = suppression_pullback(&fwd.raw_edge, fwd.normalizers.edge, upstream_edge);
    let g_corner = suppression_pullback(&fwd.raw_corner, fwd.normalizers.corner, upstream_corner);

    // Quotient rule on det/trace.
    let (h, w) = g_corner.dims();
    let mut g11 = ImageGrid::zeros(h, w);
    let mut g12 = ImageGrid::zeros(h, w);
    let mut g22 = ImageGrid::zeros(h, w);
    for i in 0..h * w {
        let g = g_corner.data()[i];
        if g == 0.0 {
            continue;
        }
        let (a, b, d) = (fwd.m11.data()[i], fwd.m12.data()[i], fwd.m22.data()[i]);
        let t = a + d + fwd.trace_eps;
        let det = a * d - b * b;
        let q = det / (t * t);
        g11.data_mut()[i] = g * (d / t - q);
        g22.data_mut()[i] = g * (a / t - q);
        g12.data_mut()[i] = g * (-2.0 * b / t);
    }
    let window = gaussian_kernel3(cfg.kernel_sigma)?;
    let g_xx = convolve_same_pullback(&g11, &window, &g11)?;
    let g_xy = convolve_same_pullback(&g12, &window, &g12)?;
    let g_yy = convolve_same_pullback(&g22, &window, &g22)?;

    let mut g_ix = ImageGrid::zeros(h, w);
    let mut g_iy = ImageGrid::zeros(h, w);
    for i in 0..h * w {
        let (x, y) = (fwd.ix.data()[i], fwd.iy.data()[i]);
        let ge = g_edge.data()[i];
        g_ix.data_mut()[i] = ge * sign0(x) + 2.0 * x * g_xx.data()[i] + y * g_xy.data()[i];
        g_iy.data_mut()[i] = ge * sign0(y) + 2.0 * y * g_yy.data()[i] + x * g_xy.data()[i];
    }
    let (kx, ky) = gaussian_derivative_kernels3(cfg.kernel_sigma)?;
    let mut g_img = convolve_same_pullback(&g_ix, &kx, &g_ix)?;
    g_img.add_scaled(&convolve_same_pullback(&g_iy, &ky, &g_iy)?, 1.0)?;
    Ok(g_img)
}

/// Gradient of `⟨ue, edge⟩ + ⟨uc, corner⟩` with respect to `img`.
pub fn visual_maps_pullback(
    img: &ImageGrid,
    cfg: &VisualConfig,
    upstream_edge: &ImageGrid,
    upstream_corner: &ImageGrid,
) -> Result<ImageGrid> {
    let fwd = visual_forward(img, cfg, None)?;
    visual_forward_pullback(&fwd, cfg, upstream_edge, upstream_corner)
}

const SOBEL_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];

/// Binarize at `threshold`, then `|Sobel_x| + |Sobel_y|`.
///
/// Borders replicate the nearest pixel so a constant image has no edges.
/// Not differentiable; used to preprocess input silhouettes.
pub fn sobel_edges(img: &ImageGrid, threshold: f64) -> ImageGrid {
    let (h, w) = img.dims();
    let bin = img.map(|v| if v > threshold { 1.0 } else { 0.0 });
    let at = |r: isize, c: isize| {
        let r = r.clamp(0, h as isize - 1) as usize;
        let c = c.clamp(0, w as isize - 1) as usize;
        bin.get(r, c)
    };
    ImageGrid::from_fn(h, w, |r, c| {
        let (mut gx, mut gy) = (0.0, 0.0);
        for (i, row) in SOBEL_X.iter().enumerate() {
            for (j, &k) in row.iter().enumerate() {
                let v = at(r as isize + i as isize - 1, c as isize + j as isize - 1);
                gx += k * v;
                gy += SOBEL_X[j][i] * v;
            }
        }
        gx.abs() + gy.abs()
    })
}
