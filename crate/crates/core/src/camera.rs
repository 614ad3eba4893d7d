//! Virtual pinhole camera: intrinsics, view poses from an angle pool,
//! projection to continuous pixel coordinates and its pullback.
//!
//! Camera-frame coordinates are `c = R·p + (0, 0, distance)` and
//! `q = K·c`. Pixel coordinates are `(u, v) = (-q_x / q_z, -q_y / q_z)`;
//! with the default intrinsics (`fx = fy = 120`, `cx = cy = -32`) and
//! `distance = 2.5` the negation puts a centered unit cube inside
//! `[8, 56]²` of a 64×64 image. `u` indexes columns, `v` rows.

use nalgebra::{Matrix3, Vector3};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Per-point gradient with respect to `(x, y, z)`.
pub type GradientCloud = Vec<[f64; 3]>;

/// Ordered list of 3D points.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    points: Vec<[f64; 3]>,
}

impl PointCloud {
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if let Some(i) = points.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::Parameter(format!("point {i} has a non-finite coordinate")));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<[f64; 3]> {
        self.points
    }

    /// Coordinates flattened as `x0 y0 z0 x1 ...`.
    pub fn to_flat(&self) -> Vec<f64> {
        self.points.iter().flatten().copied().collect()
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if !flat.len().is_multiple_of(3) {
            return Err(Error::Dimension(format!("{} coordinates is not a multiple of 3", flat.len())));
        }
        Self::new(flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.points {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        (lo, hi)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { points: self.points.iter().map(|p| [p[0] * s, p[1] * s, p[2] * s]).collect() }
    }

    /// Applies `p ↦ R·p + t` to every point.
    pub fn transformed(&self, rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| {
                    let q = rotation * Vector3::from(*p) + translation;
                    [q.x, q.y, q.z]
                })
                .collect(),
        }
    }
}

/// Pinhole intrinsics in pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self { fx: 120.0, fy: 120.0, cx: -32.0, cy: -32.0 }
    }
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        if self.fx == 0.0 || self.fy == 0.0 {
            return Err(Error::Parameter("focal lengths must be non-zero".into()));
        }
        if ![self.fx, self.fy, self.cx, self.cy].iter().all(|v| v.is_finite()) {
            return Err(Error::Parameter("intrinsics must be finite".into()));
        }
        Ok(())
    }
}

/// Camera pose on a sphere around the object, angles in degrees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ViewSpec {
    pub azimuth: f64,
    pub elevation: f64,
    pub distance: f64,
}

impl ViewSpec {
    pub const DEFAULT_DISTANCE: f64 = 2.5;

    pub fn new(azimuth: f64, elevation: f64) -> Self {
        Self { azimuth, elevation, distance: Self::DEFAULT_DISTANCE }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.distance > 0.0 && self.distance.is_finite()) {
            return Err(Error::Parameter(format!("view distance must be positive, got {}", self.distance)));
        }
        if !self.azimuth.is_finite() || !self.elevation.is_finite() {
            return Err(Error::Parameter("view angles must be finite".into()));
        }
        Ok(())
    }
}

impl Default for ViewSpec {
    fn default() -> Self {
        Self::new(0.0, 0.0)
    }
}

/// Eight azimuths 45° apart at elevations 0° and 20°.
pub fn default_angle_pool() -> Vec<ViewSpec> {
    let mut pool = Vec::with_capacity(16);
    for elevation in [0.0, 20.0] {
        for k in 0..8 {
            pool.push(ViewSpec::new(45.0 * k as f64, elevation));
        }
    }
    pool
}

/// Projected pixel coordinates and camera-frame depths.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelCoords {
    /// `(u, v)`: column then row coordinate.
    pub coords: Vec<[f64; 2]>,
    pub depths: Vec<f64>,
}

impl PixelCoords {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// `R = Rx(elevation) · Ry(azimuth)`.
pub fn rotation_from_view(view: &ViewSpec) -> Matrix3<f64> {
    let (sa, ca) = view.azimuth.to_radians().sin_cos();
    let (se, ce) = view.elevation.to_radians().sin_cos();
    let ry = Matrix3::new(ca, 0.0, sa, 0.0, 1.0, 0.0, -sa, 0.0, ca);
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, ce, -se, 0.0, se, ce);
    rx * ry
}

fn camera_frame(rotation: &Matrix3<f64>, distance: f64, p: &[f64; 3]) -> Vector3<f64> {
    rotation * Vector3::from(*p) + Vector3::new(0.0, 0.0, distance)
}

pub fn project(cloud: &PointCloud, view: &ViewSpec, intr: &CameraIntrinsics) -> Result<PixelCoords> {
    view.validate()?;
    intr.validate()?;
    let rot = rotation_from_view(view);
    let mut coords = Vec::with_capacity(cloud.len());
    let mut depths = Vec::with_capacity(cloud.len());
    for (index, p) in cloud.points().iter().enumerate() {
        let c = camera_frame(&rot, view.distance, p);
        let qx = intr.fx * c.x + intr.cx * c.z;
        let qy = intr.fy * c.y + intr.cy * c.z;
        let qz = c.z;
        if qz <= 0.0 || !qz.is_finite() {
            return Err(Error::Projection { index, depth: qz });
        }
        coords.push([-qx / qz, -qy / qz]);
        depths.push(qz);
    }
    Ok(PixelCoords { coords, depths })
}

/// Gradient of `Σ_i du_i·u_i + dv_i·v_i` with respect to the cloud.
pub fn project_pullback(
    cloud: &PointCloud,
    view: &ViewSpec,
    intr: &CameraIntrinsics,
    upstream: &[[f64; 2]],
) -> Result<GradientCloud> {
    if upstream.len() != cloud.len() {
        return Err(Error::Dimension(format!("{} upstream pairs for {} points", upstream.len(), cloud.len())));
    }
    view.validate()?;
    intr.validate()?;
    let rot = rotation_from_view(view);
    let rot_t = rot.transpose();
    let mut grad = Vec::with_capacity(cloud.len());
    for (index, (p, g)) in cloud.points().iter().zip(upstream).enumerate() {
        let c = camera_frame(&rot, view.distance, p);
        if c.z <= 0.0 {
            return Err(Error::Projection { index, depth: c.z });
        }
        // u = -fx·cx_/cz - cx, v = -fy·cy_/cz - cy
        let inv_z = 1.0 / c.z;
        let gc = Vector3::new(
            -g[0] * intr.fx * inv_z,
            -g[1] * intr.fy * inv_z,
            (g[0] * intr.fx * c.x + g[1] * intr.fy * c.y) * inv_z * inv_z,
        );
        let gp = rot_t * gc;
        grad.push([gp.x, gp.y, gp.z]);
    }
    Ok(grad)
}

/// Centers the bounding box at the origin and scales its longest edge to 1.
pub fn normalize_cloud(cloud: &PointCloud) -> Result<PointCloud> {
    let (lo, hi) = cloud.bounds();
    let extent = (0..3).map(|a| hi[a] - lo[a]).fold(0.0_f64, f64::max);
    if extent <= 0.0 {
        return Err(Error::DegenerateCloud);
    }
    let center: [f64; 3] = std::array::from_fn(|a| 0.5 * (lo[a] + hi[a]));
    let points = cloud.points().iter().map(|p| std::array::from_fn(|a| (p[a] - center[a]) / extent)).collect();
    PointCloud::new(points)
}

/// Draws `k` distinct pool entries from a caller-owned generator.
pub fn sample_views_with<R: Rng + ?Sized>(rng: &mut R, pool: &[ViewSpec], k: usize) -> Result<Vec<ViewSpec>> {
    if k == 0 || k > pool.len() {
        return Err(Error::Parameter(format!("cannot draw {k} views from a pool of {}", pool.len())));
    }
    Ok(index::sample(rng, pool.len(), k).into_iter().map(|i| pool[i]).collect())
}

/// Draws `k` distinct pool entries, reproducibly from `seed`.
pub fn sample_views(pool: &[ViewSpec], k: usize, seed: u64) -> Result<Vec<ViewSpec>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_views_with(&mut rng, pool, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn single(p: [f64; 3]) -> PointCloud {
        PointCloud::new(vec![p]).unwrap()
    }

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> PointCloud {
        PointCloud::new((0..n).map(|_| std::array::from_fn(|_| rng.random_range(-0.5..0.5))).collect()).unwrap()
    }

    #[test]
    fn zero_view_is_identity() {
        let r = rotation_from_view(&ViewSpec::default());
        assert_eq!(r, Matrix3::identity());
    }

    #[test]
    fn azimuth_quarter_turn() {
        let r = rotation_from_view(&ViewSpec::new(90.0, 0.0));
        let x = r * Vector3::new(1.0, 0.0, 0.0);
        assert!((x - Vector3::new(0.0, 0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn hand_derived_projections() {
        let intr = CameraIntrinsics::default();
        let view = ViewSpec::default();
        let c = project(&single([0.0, 0.0, 0.0]), &view, &intr).unwrap();
        assert!((c.coords[0][0] - 32.0).abs() < 1e-9);
        assert!((c.coords[0][1] - 32.0).abs() < 1e-9);
        assert!((c.depths[0] - 2.5).abs() < 1e-12);
        let c = project(&single([0.5, 0.0, 0.0]), &view, &intr).unwrap();
        assert!((c.coords[0][0] - 8.0).abs() < 1e-9);
        let c = project(&single([-0.5, 0.0, 0.0]), &view, &intr).unwrap();
        assert!((c.coords[0][0] - 56.0).abs() < 1e-9);
        let c = project(&single([0.0, 0.5, 0.0]), &view, &intr).unwrap();
        assert!((c.coords[0][1] - 8.0).abs() < 1e-9);
    }

    #[test]
    fn behind_camera_names_the_point() {
        let cloud = PointCloud::new(vec![[0.0; 3], [0.0, 0.0, -3.0]]).unwrap();
        match project(&cloud, &ViewSpec::default(), &CameraIntrinsics::default()) {
            Err(Error::Projection { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn depth_is_z_plus_distance_at_zero_view() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cloud = random_cloud(&mut rng, 50);
        let c = project(&cloud, &ViewSpec::default(), &CameraIntrinsics::default()).unwrap();
        for (p, d) in cloud.points().iter().zip(&c.depths) {
            assert_eq!(*d, p[2] + 2.5);
        }
    }

    #[test]
    fn normalized_clouds_land_in_image() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let raw =
            PointCloud::new((0..1000).map(|_| std::array::from_fn(|_| rng.random_range(-3.0..7.0))).collect()).unwrap();
        let cloud = normalize_cloud(&raw).unwrap();
        let c = project(&cloud, &ViewSpec::default(), &CameraIntrinsics::default()).unwrap();
        for [u, v] in c.coords {
            assert!((0.0..=64.0).contains(&u) && (0.0..=64.0).contains(&v));
        }
    }

    #[test]
    fn points_in_half_unit_ball_stay_inside_for_every_pool_view() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pts: Vec<[f64; 3]> = (0..2000)
            .map(|_| std::array::from_fn(|_| rng.random_range(-0.5..0.5)))
            .filter(|p: &[f64; 3]| p.iter().map(|v| v * v).sum::<f64>() <= 0.25)
            .collect();
        let cloud = PointCloud::new(pts).unwrap();
        for view in default_angle_pool() {
            let c = project(&cloud, &view, &CameraIntrinsics::default()).unwrap();
            assert!(c.coords.iter().flatten().all(|x| (0.0..=64.0).contains(x)));
        }
    }

    #[test]
    fn pullback_zero_upstream_and_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cloud = random_cloud(&mut rng, 4);
        let view = ViewSpec::new(30.0, 10.0);
        let g = project_pullback(&cloud, &view, &CameraIntrinsics::default(), &[[0.0; 2]; 4]).unwrap();
        assert!(g.iter().flatten().all(|&v| v == 0.0));
        assert!(matches!(
            project_pullback(&cloud, &view, &CameraIntrinsics::default(), &[[0.0; 2]; 3]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn du_dx_single_point() {
        let intr = CameraIntrinsics::default();
        let view = ViewSpec::default();
        let p = [0.1, -0.2, 0.3];
        let g = project_pullback(&single(p), &view, &intr, &[[1.0, 0.0]]).unwrap();
        let analytic = -intr.fx / (p[2] + 2.5);
        assert!((g[0][0] - analytic).abs() < 1e-12);
        let h = 1e-6;
        let u = |x: f64| project(&single([x, p[1], p[2]]), &view, &intr).unwrap().coords[0][0];
        let fd = (u(p[0] + h) - u(p[0] - h)) / (2.0 * h);
        assert!((fd - analytic).abs() <= 1e-6 * analytic.abs());
    }

    #[test]
    fn pullback_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let intr = CameraIntrinsics::default();
        for _ in 0..5 {
            let cloud = random_cloud(&mut rng, 16);
            let view = ViewSpec::new(rng.random_range(0.0..360.0), rng.random_range(-30.0..30.0));
            let up: Vec<[f64; 2]> =
                (0..16).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
            let f = |flat: &[f64]| {
                let c = project(&PointCloud::from_flat(flat).unwrap(), &view, &intr).unwrap();
                c.coords.iter().zip(&up).map(|(a, b)| a[0] * b[0] + a[1] * b[1]).sum::<f64>()
            };
            let g: Vec<f64> = project_pullback(&cloud, &view, &intr, &up).unwrap().into_iter().flatten().collect();
            let x = cloud.to_flat();
            let h = 1e-5;
            for i in 0..x.len() {
                let mut p = x.clone();
                p[i] += h;
                let mut m = x.clone();
                m[i] -= h;
                let fd = (f(&p) - f(&m)) / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-5 * fd.abs().max(g[i].abs()).max(1e-6));
            }
        }
    }

    #[test]
    fn normalize_examples() {
        let c = PointCloud::new(vec![[0.0; 3], [2.0, 0.0, 0.0]]).unwrap();
        let n = normalize_cloud(&c).unwrap();
        assert_eq!(n.points(), &[[-0.5, 0.0, 0.0], [0.5, 0.0, 0.0]]);
        let fixed = PointCloud::new(vec![[-0.5, -0.25, 0.0], [0.5, 0.25, 0.1], [0.0, 0.0, -0.1]]).unwrap();
        let n = normalize_cloud(&fixed).unwrap();
        for (a, b) in n.points().iter().zip(fixed.points()) {
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-12);
            }
        }
        let flat = PointCloud::new(vec![[1.0, 2.0, 3.0]; 4]).unwrap();
        assert!(matches!(normalize_cloud(&flat), Err(Error::DegenerateCloud)));
    }

    #[test]
    fn sample_views_contract() {
        let pool = default_angle_pool();
        let mut all = sample_views(&pool, pool.len(), 9).unwrap();
        all.sort_by(|a, b| (a.elevation, a.azimuth).partial_cmp(&(b.elevation, b.azimuth)).unwrap());
        assert_eq!(all, pool);
        assert_eq!(sample_views(&pool, 4, 42).unwrap(), sample_views(&pool, 4, 42).unwrap());
        assert!(matches!(sample_views(&pool, 17, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn single_draw_frequencies() {
        let pool = default_angle_pool();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = [0usize; 16];
        for _ in 0..10_000 {
            let v = sample_views_with(&mut rng, &pool, 1).unwrap()[0];
            counts[pool.iter().position(|p| *p == v).unwrap()] += 1;
        }
        for c in counts {
            assert!((525..=725).contains(&c), "{counts:?}");
        }
    }

    proptest! {
        #[test]
        fn rotation_is_proper(az in -720.0f64..720.0, el in -720.0f64..720.0) {
            let r = rotation_from_view(&ViewSpec::new(az, el));
            prop_assert!((r.transpose() * r - Matrix3::identity()).abs().max() < 1e-12);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn normalize_postcondition(seed in any::<u64>(), n in 2usize..60) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let raw = PointCloud::new((0..n).map(|_| std::array::from_fn(|_| rng.random_range(-5.0..5.0))).collect()).unwrap();
            let c = normalize_cloud(&raw).unwrap();
            let (lo, hi) = c.bounds();
            let ext = (0..3).map(|a| hi[a] - lo[a]).fold(0.0, f64::max);
            prop_assert!((ext - 1.0).abs() < 1e-9);
            for a in 0..3 {
                prop_assert!((lo[a] + hi[a]).abs() < 1e-9);
            }
        }

        #[test]
        fn projection_is_permutation_equivariant(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cloud = random_cloud(&mut rng, 12);
            let mut perm: Vec<usize> = (0..12).collect();
            perm.reverse();
            perm.swap(2, 7);
            let permuted = PointCloud::new(perm.iter().map(|&i| cloud.points()[i]).collect()).unwrap();
            let view = ViewSpec::new(rng.random_range(0.0..360.0), 20.0);
            let a = project(&cloud, &view, &CameraIntrinsics::default()).unwrap();
            let b = project(&permuted, &view, &CameraIntrinsics::default()).unwrap();
            for (k, &i) in perm.iter().enumerate() {
                prop_assert_eq!(a.coords[i], b.coords[k]);
                prop_assert_eq!(a.depths[i], b.depths[k]);
            }
        }
    }
}
