//! Finite-difference audit of every hand-written pullback.
//!
//! Each check draws random instances, compares the analytic gradient against
//! central differences in f64 and reports the worst relative error
//! `‖g − g_fd‖₂ / max(‖g‖₂, ‖g_fd‖₂)`. Objectives with kinks (nearest
//! neighbour switches, `|·|`, the suppression knee, L1) are retried on a
//! freshly drawn instance when a check fails; an instance only counts as
//! failed once all attempts fail.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::camera::{project, project_pullback, CameraIntrinsics, PixelCoords, PointCloud, ViewSpec};
use crate::error::Result;
use crate::losses::{chamfer, evaluate, view_targets, LossWeights, RenderConfig};
use crate::raster::{
    convolve_same, convolve_same_pullback, gaussian_derivative_kernels3, gaussian_kernel3, ImageGrid, Kernel3,
};
use crate::shapes;
use crate::splat::{splat, splat_pullback, SplatConfig};
use crate::visual::{visual_forward, visual_forward_pullback, VisualConfig};

/// Attempts per instance, including the first.
pub const MAX_ATTEMPTS: usize = 3;

type Objective = Box<dyn Fn(&[f64]) -> Result<f64>>;

struct Instance {
    x: Vec<f64>,
    grad: Vec<f64>,
    f: Objective,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub rtol: f64,
    pub instances: usize,
    pub passed: usize,
    pub retries: usize,
    pub worst_rel_err: f64,
}

impl CheckOutcome {
    pub fn ok(&self) -> bool {
        self.passed == self.instances
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradcheckReport {
    pub seed: u64,
    pub outcomes: Vec<CheckOutcome>,
}

impl GradcheckReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(CheckOutcome::ok)
    }
}

impl fmt::Display for GradcheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "gradcheck seed={}", self.seed)?;
        for o in &self.outcomes {
            writeln!(
                f,
                "{:<16} {:>3}/{:<3} retries={:<2} worst_rel_err={:.3e} rtol={:.0e} {}",
                o.name,
                o.passed,
                o.instances,
                o.retries,
                o.worst_rel_err,
                o.rtol,
                if o.ok() { "PASS" } else { "FAIL" }
            )?;
        }
        write!(f, "{}", if self.all_passed() { "ALL PASS" } else { "FAILED" })
    }
}

fn central_differences(inst: &Instance, h: f64) -> Result<Vec<f64>> {
    let mut x = inst.x.clone();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let x0 = x[i];
        x[i] = x0 + h;
        let fp = (inst.f)(&x)?;
        x[i] = x0 - h;
        let fm = (inst.f)(&x)?;
        x[i] = x0;
        out.push((fp - fm) / (2.0 * h));
    }
    Ok(out)
}

/// Relative 2-norm discrepancy between two gradients.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

fn audit(
    name: &'static str,
    rtol: f64,
    h: f64,
    instances: usize,
    rng: &mut ChaCha8Rng,
    make: impl Fn(&mut ChaCha8Rng) -> Result<Instance>,
) -> Result<CheckOutcome> {
    let mut out = CheckOutcome { name, rtol, instances, passed: 0, retries: 0, worst_rel_err: 0.0 };
    for _ in 0..instances {
        let mut best = f64::INFINITY;
        for attempt in 0..MAX_ATTEMPTS {
            if attempt > 0 {
                out.retries += 1;
            }
            let inst = make(rng)?;
            let fd = central_differences(&inst, h)?;
            best = best.min(relative_error(&inst.grad, &fd));
            if best <= rtol {
                break;
            }
        }
        if best <= rtol {
            out.passed += 1;
        }
        out.worst_rel_err = out.worst_rel_err.max(best);
    }
    Ok(out)
}

fn random_grid(rng: &mut ChaCha8Rng, h: usize, w: usize, lo: f64, hi: f64) -> ImageGrid {
    ImageGrid::from_fn(h, w, |_, _| rng.random_range(lo..hi))
}

fn random_view(rng: &mut ChaCha8Rng) -> ViewSpec {
    ViewSpec::new(rng.random_range(0.0..360.0), rng.random_range(-30.0..30.0))
}

fn convolution_instance(rng: &mut ChaCha8Rng) -> Result<Instance> {
    let img = random_grid(rng, 6, 6, -1.0, 1.0);
    let up = random_grid(rng, 6, 6, -1.0, 1.0);
    let (kx, ky) = gaussian_derivative_kernels3(rng.random_range(0.5..2.0))?;
    let k = match rng.random_range(0..4) {
        0 => gaussian_kernel3(rng.random_range(0.5..2.0))?,
        1 => kx,
        2 => ky,
        _ => Kernel3::new(std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))))?,
    };
    let grad = convolve_same_pullback(&img, &k, &up)?.into_vec();
    Ok(Instance {
        x: img.data().to_vec(),
        grad,
        f: Box::new(move |x| up.dot(&convolve_same(&ImageGrid::from_vec(6, 6, x.to_vec())?, &k)?)),
    })
}

fn projection_instance(rng: &mut ChaCha8Rng) -> Result<Instance> {
    let cloud = shapes::uniform_cube(rng, 16)?;
    let view = random_view(rng);
    let intr = CameraIntrinsics::default();
    let up: Vec<[f64; 2]> = (0..16).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
    let grad = project_pullback(&cloud, &view, &intr, &up)?.into_iter().flatten().collect();
    Ok(Instance {
        x: cloud.to_flat(),
        grad,
        f: Box::new(move |x| {
            let c = project(&PointCloud::from_flat(x)?, &view, &intr)?;
            Ok(c.coords.iter().zip(&up).map(|(a, b)| a[0] * b[0] + a[1] * b[1]).sum())
        }),
    })
}

fn splat_instance(rng: &mut ChaCha8Rng) -> Result<Instance> {
    let n = 8;
    let coords: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(4.0..60.0), rng.random_range(4.0..60.0)]).collect();
    let cfg = SplatConfig::default();
    let up = random_grid(rng, 64, 64, -1.0, 1.0);
    let pc = PixelCoords { coords: coords.clone(), depths: vec![1.0; n] };
    let grad = splat_pullback(&pc, &cfg, &up)?.into_iter().flatten().collect();
    Ok(Instance {
        x: coords.into_iter().flatten().collect(),
        grad,
        f: Box::new(move |x| {
            let pc = PixelCoords {
                coords: x.chunks_exact(2).map(|c| [c[0], c[1]]).collect(),
                depths: vec![1.0; x.len() / 2],
            };
            up.dot(&splat(&pc, &cfg)?)
        }),
    })
}

fn visual_instance(rng: &mut ChaCha8Rng) -> Result<Instance> {
    let img = random_grid(rng, 12, 12, 0.0, 1.0);
    let ue = random_grid(rng, 12, 12, -1.0, 1.0);
    let uc = random_grid(rng, 12, 12, -1.0, 1.0);
    let cfg = VisualConfig::default();
    let fwd = visual_forward(&img, &cfg, None)?;
    let frozen = fwd.normalizers;
    let grad = visual_forward_pullback(&fwd, &cfg, &ue, &uc)?.into_vec();
    Ok(Instance {
        x: img.data().to_vec(),
        grad,
        f: Box::new(move |x| {
            let m = visual_forward(&ImageGrid::from_vec(12, 12, x.to_vec())?, &cfg, Some(frozen))?.maps;
            Ok(ue.dot(&m.edge)? + uc.dot(&m.corner)?)
        }),
    })
}

fn chamfer_instance(rng: &mut ChaCha8Rng) -> Result<Instance> {
    let a = shapes::uniform_cube(rng, 20)?;
    let b = shapes::uniform_cube(rng, 20)?;
    let grad = chamfer(&a, &b)?.1.into_iter().flatten().collect();
    Ok(Instance { x: a.to_flat(), grad, f: Box::new(move |x| Ok(chamfer(&PointCloud::from_flat(x)?, &b)?.0)) })
}

fn total_loss_instance(rng: &mut ChaCha8Rng) -> Result<Instance> {
    let gt = crate::camera::normalize_cloud(&shapes::uniform_cube(rng, 24)?)?;
    let pred = shapes::jitter(rng, &gt, 0.05)?;
    let views = [random_view(rng), random_view(rng)];
    let cfg = RenderConfig::default();
    let weights = LossWeights::PHASE1;
    let targets = view_targets(&gt, &views, &cfg)?;
    let base = evaluate(&pred, &gt, &targets, &weights, &cfg, None)?;
    let frozen = base.normalizers.clone();
    Ok(Instance {
        x: pred.to_flat(),
        grad: base.grad.into_iter().flatten().collect(),
        f: Box::new(move |x| {
            let p = PointCloud::from_flat(x)?;
            Ok(evaluate(&p, &gt, &targets, &weights, &cfg, Some(&frozen))?.report.total)
        }),
    })
}

/// Runs every check with `instances` random instances each.
pub fn run_gradcheck(seed: u64, instances: usize) -> Result<GradcheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outcomes = vec![
        audit("convolve_same", 1e-5, 1e-5, instances, &mut rng, convolution_instance)?,
        audit("project", 1e-5, 1e-5, instances, &mut rng, projection_instance)?,
        audit("splat", 1e-5, 1e-5, instances, &mut rng, splat_instance)?,
        audit("visual_maps", 1e-4, 1e-6, instances, &mut rng, visual_instance)?,
        audit("chamfer", 1e-6, 1e-6, instances, &mut rng, chamfer_instance)?,
        audit("total_loss", 1e-4, 1e-6, instances, &mut rng, total_loss_instance)?,
    ];
    Ok(GradcheckReport { seed, outcomes })
}
