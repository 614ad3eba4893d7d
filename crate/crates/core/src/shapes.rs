//! Synthetic clouds and images used by the benchmarks, the CLI and the demo.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::camera::PointCloud;
use crate::error::{Error, Result};
use crate::raster::ImageGrid;

/// `n` points uniform on the surface of the cube `[-0.5, 0.5]³`.
pub fn cube_surface<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<PointCloud> {
    let points = (0..n)
        .map(|_| {
            let face = rng.random_range(0..6);
            let axis = face / 2;
            let side = if face % 2 == 0 { -0.5 } else { 0.5 };
            let mut p: [f64; 3] = std::array::from_fn(|_| rng.random_range(-0.5..0.5));
            p[axis] = side;
            p
        })
        .collect();
    PointCloud::new(points)
}

/// `n` points uniform in the cube `[-0.5, 0.5]³`.
pub fn uniform_cube<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<PointCloud> {
    PointCloud::new((0..n).map(|_| std::array::from_fn(|_| rng.random_range(-0.5..0.5))).collect())
}

/// `n` evenly spaced points on a circle of `radius` in the `z = 0` plane.
pub fn ring(n: usize, radius: f64) -> Result<PointCloud> {
    PointCloud::new(
        (0..n)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / n as f64;
                [radius * t.cos(), radius * t.sin(), 0.0]
            })
            .collect(),
    )
}

/// Copy of `cloud` with i.i.d. Gaussian noise of standard deviation `sigma` per coordinate.
pub fn jitter<R: Rng + ?Sized>(rng: &mut R, cloud: &PointCloud, sigma: f64) -> Result<PointCloud> {
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Parameter(e.to_string()))?;
    PointCloud::new(cloud.points().iter().map(|p| std::array::from_fn(|k| p[k] + normal.sample(rng))).collect())
}

/// Anti-aliased filled square: each pixel holds the covered fraction, estimated
/// on a `supersample × supersample` grid of sub-pixel samples.
///
/// The square has side `side` pixels, is centered at `(cu, cv)` and rotated by
/// `angle_deg`.
pub fn filled_square(
    height: usize,
    width: usize,
    (cu, cv): (f64, f64),
    side: f64,
    angle_deg: f64,
    supersample: usize,
) -> ImageGrid {
    let (s, c) = angle_deg.to_radians().sin_cos();
    let half = 0.5 * side;
    let inv = 1.0 / supersample as f64;
    ImageGrid::from_fn(height, width, |r, col| {
        let mut hits = 0usize;
        for i in 0..supersample {
            for j in 0..supersample {
                let x = col as f64 - 0.5 + (j as f64 + 0.5) * inv - cu;
                let y = r as f64 - 0.5 + (i as f64 + 0.5) * inv - cv;
                let (lx, ly) = (c * x + s * y, -s * x + c * y);
                if lx.abs() <= half && ly.abs() <= half {
                    hits += 1;
                }
            }
        }
        hits as f64 * inv * inv
    })
}

/// Corners of the square drawn by [`filled_square`], as `(u, v)`.
pub fn square_corners(center: (f64, f64), side: f64, angle_deg: f64) -> [(f64, f64); 4] {
    let (s, c) = angle_deg.to_radians().sin_cos();
    let half = 0.5 * side;
    [(-half, -half), (half, -half), (half, half), (-half, half)]
        .map(|(lx, ly)| (center.0 + c * lx - s * ly, center.1 + s * lx + c * ly))
}

/// Points along the outline of the square `[-h, h]²` in the `z = 0` plane,
/// `per_side` points per side.
pub fn square_outline(half: f64, per_side: usize) -> Result<PointCloud> {
    let mut points = Vec::with_capacity(4 * per_side);
    for k in 0..per_side {
        let t = -half + 2.0 * half * k as f64 / per_side as f64;
        points.push([t, -half, 0.0]);
        points.push([half, t, 0.0]);
        points.push([-t, half, 0.0]);
        points.push([-half, -t, 0.0]);
    }
    PointCloud::new(points)
}
