//! Training objective and evaluation metrics.
//!
//! The objective is `CD + λ1·edge + λ2·corner`, where `edge` and `corner`
//! are per-pixel mean absolute differences between suppressed maps of the
//! predicted and target projections, averaged over the rendered views.
//! EMD and ICP are evaluation-only.

pub mod chamfer;
pub mod emd;
pub mod icp;

pub use chamfer::{chamfer, nearest_neighbors, KdTree};
pub use emd::{emd, emd_assignment, solve_assignment};
pub use icp::{icp_align, rigid_fit, IcpResult};

use crate::camera::{project, project_pullback, CameraIntrinsics, GradientCloud, PointCloud, ViewSpec};
use crate::error::{Error, Result};
use crate::raster::ImageGrid;
use crate::splat::{splat, splat_pullback, SplatConfig};
use crate::visual::{visual_forward, visual_forward_pullback, EdgeCornerMaps, Normalizers, VisualConfig};

/// Weights of the edge and corner terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl LossWeights {
    pub const PHASE1: LossWeights = LossWeights { lambda1: 20.0, lambda2: 10.0 };
    pub const PHASE2: LossWeights = LossWeights { lambda1: 2.0, lambda2: 0.2 };
    pub const CHAMFER_ONLY: LossWeights = LossWeights { lambda1: 0.0, lambda2: 0.0 };

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        Self::PHASE1
    }
}

/// Per-term breakdown of one objective evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct LossReport {
    pub cd: f64,
    pub edge: f64,
    pub corner: f64,
    pub total: f64,
    /// `(edge, corner)` for each rendered view.
    pub per_view: Vec<(f64, f64)>,
    /// Filled only where an EMD evaluation was requested.
    pub emd: Option<f64>,
}

/// Everything needed to turn a cloud into edge/corner maps.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RenderConfig {
    pub intrinsics: CameraIntrinsics,
    pub splat: SplatConfig,
    pub visual: VisualConfig,
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        self.splat.validate()?;
        self.visual.validate()
    }
}

/// Projected image of `cloud` seen from `view`.
pub fn render(cloud: &PointCloud, view: &ViewSpec, cfg: &RenderConfig) -> Result<ImageGrid> {
    splat(&project(cloud, view, &cfg.intrinsics)?, &cfg.splat)
}

/// Suppressed edge and corner maps of `cloud` seen from `view`.
pub fn render_maps(cloud: &PointCloud, view: &ViewSpec, cfg: &RenderConfig) -> Result<EdgeCornerMaps> {
    let img = render(cloud, view, cfg)?;
    Ok(visual_forward(&img, &cfg.visual, None)?.maps)
}

/// Mean absolute differences and their subgradients with respect to `pred`.
pub fn edge_corner_loss(pred: &EdgeCornerMaps, gt: &EdgeCornerMaps) -> Result<(f64, f64, ImageGrid, ImageGrid)> {
    let (edge, up_edge) = mean_abs_diff(&pred.edge, &gt.edge)?;
    let (corner, up_corner) = mean_abs_diff(&pred.corner, &gt.corner)?;
    Ok((edge, corner, up_edge, up_corner))
}

pub fn mean_abs_diff(pred: &ImageGrid, gt: &ImageGrid) -> Result<(f64, ImageGrid)> {
    pred.check_same_dims(gt)?;
    let inv = 1.0 / pred.len() as f64;
    let value = pred.data().iter().zip(gt.data()).map(|(p, g)| (p - g).abs()).sum::<f64>() * inv;
    let grad = pred.zip_map(gt, |p, g| {
        if p > g {
            inv
        } else if p < g {
            -inv
        } else {
            0.0
        }
    })?;
    Ok((value, grad))
}

/// A view paired with the target's maps from that view.
#[derive(Clone, Debug)]
pub struct ViewTarget {
    pub view: ViewSpec,
    pub maps: EdgeCornerMaps,
}

pub fn view_targets(gt: &PointCloud, views: &[ViewSpec], cfg: &RenderConfig) -> Result<Vec<ViewTarget>> {
    views.iter().map(|v| Ok(ViewTarget { view: *v, maps: render_maps(gt, v, cfg)? })).collect()
}

/// Result of [`evaluate`], including the map normalizers used per view.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub report: LossReport,
    pub grad: GradientCloud,
    pub normalizers: Vec<Normalizers>,
}

/// Objective and gradient against precomputed targets.
///
/// `frozen` pins the per-view map normalizers; the gradient always treats
/// them as constants, so freezing them makes the returned value a smooth
/// function whose derivative is exactly `grad`.
pub fn evaluate(
    pred: &PointCloud,
    gt: &PointCloud,
    targets: &[ViewTarget],
    weights: &LossWeights,
    cfg: &RenderConfig,
    frozen: Option<&[Normalizers]>,
) -> Result<Evaluation> {
    weights.validate()?;
    if targets.is_empty() {
        return Err(Error::Parameter("at least one view is required".into()));
    }
    if let Some(f) = frozen {
        if f.len() != targets.len() {
            return Err(Error::Dimension(format!("{} normalizers for {} views", f.len(), targets.len())));
        }
    }
    let (cd, mut grad) = chamfer(pred, gt)?;
    let scale = 1.0 / targets.len() as f64;
    let mut per_view = Vec::with_capacity(targets.len());
    let mut normalizers = Vec::with_capacity(targets.len());
    let need_grad = weights.lambda1 != 0.0 || weights.lambda2 != 0.0;

    for (k, target) in targets.iter().enumerate() {
        let coords = project(pred, &target.view, &cfg.intrinsics)?;
        let img = splat(&coords, &cfg.splat)?;
        let fwd = visual_forward(&img, &cfg.visual, frozen.map(|f| f[k]))?;
        let (edge, corner, mut up_edge, mut up_corner) = edge_corner_loss(&fwd.maps, &target.maps)?;
        per_view.push((edge, corner));
        normalizers.push(fwd.normalizers);
        if !need_grad {
            continue;
        }
        up_edge = up_edge.map(|g| g * weights.lambda1 * scale);
        up_corner = up_corner.map(|g| g * weights.lambda2 * scale);
        let g_img = visual_forward_pullback(&fwd, &cfg.visual, &up_edge, &up_corner)?;
        let g_uv = splat_pullback(&coords, &cfg.splat, &g_img)?;
        let g_p = project_pullback(pred, &target.view, &cfg.intrinsics, &g_uv)?;
        for (a, b) in grad.iter_mut().zip(&g_p) {
            for i in 0..3 {
                a[i] += b[i];
            }
        }
    }

    let edge = per_view.iter().map(|v| v.0).sum::<f64>() * scale;
    let corner = per_view.iter().map(|v| v.1).sum::<f64>() * scale;
    let total = cd + weights.lambda1 * edge + weights.lambda2 * corner;
    Ok(Evaluation { report: LossReport { cd, edge, corner, total, per_view, emd: None }, grad, normalizers })
}

/// Full objective: Chamfer on the clouds plus edge/corner terms over `views`.
/// The target branch carries no gradient.
pub fn total_loss(
    pred: &PointCloud,
    gt: &PointCloud,
    views: &[ViewSpec],
    weights: &LossWeights,
    cfg: &RenderConfig,
) -> Result<(LossReport, GradientCloud)> {
    let targets = view_targets(gt, views, cfg)?;
    let e = evaluate(pred, gt, &targets, weights, cfg, None)?;
    Ok((e.report, e.grad))
}

/// Table-style metrics after aligning the prediction with ICP.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub cd_x100: f64,
    pub emd_x100: f64,
}

pub fn eval_metrics(pred: &PointCloud, gt: &PointCloud) -> Result<Metrics> {
    let aligned = icp_align(pred, gt, icp::DEFAULT_MAX_ITERS, icp::DEFAULT_TOL)?.aligned;
    Ok(Metrics { cd_x100: 100.0 * chamfer(&aligned, gt)?.0, emd_x100: 100.0 * emd(&aligned, gt)? })
}
