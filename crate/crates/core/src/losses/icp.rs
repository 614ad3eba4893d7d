//! Point-to-point ICP used to align predictions before scoring them.

use nalgebra::{Matrix3, Vector3};

use super::chamfer::nearest_neighbors;
use crate::camera::PointCloud;
use crate::error::Result;

pub const DEFAULT_MAX_ITERS: usize = 50;
pub const DEFAULT_TOL: f64 = 1e-7;

/// Relative size of the second singular value below which the cross
/// covariance is treated as rank deficient.
const RANK_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct IcpResult {
    pub aligned: PointCloud,
    /// Accumulated transform: `aligned = rotation · src + translation`.
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    /// Correspondence mean squared error at the start of each accepted iteration.
    pub mse_history: Vec<f64>,
    /// Set when some iteration fell back to an identity rotation.
    pub degenerate: bool,
}

impl IcpResult {
    pub fn iterations(&self) -> usize {
        self.mse_history.len()
    }
}

/// Best rigid transform taking `src[i]` onto `dst[i]`; `None` for the rotation
/// when the cross covariance has rank below 2.
pub fn rigid_fit(src: &[Vector3<f64>], dst: &[Vector3<f64>]) -> (Option<Matrix3<f64>>, Vector3<f64>) {
    let n = src.len() as f64;
    let cs = src.iter().sum::<Vector3<f64>>() / n;
    let cd = dst.iter().sum::<Vector3<f64>>() / n;
    let mut h = Matrix3::zeros();
    for (p, q) in src.iter().zip(dst) {
        h += (p - cs) * (q - cd).transpose();
    }
    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u.expect("requested U"), svd.v_t.expect("requested V^T"));
    let s = svd.singular_values;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    if s[order[0]] == 0.0 || s[order[1]] <= RANK_TOL * s[order[0]] {
        return (None, cd - cs);
    }
    let v = v_t.transpose();
    let mut d = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        d[(order[2], order[2])] = -1.0;
    }
    let r = v * d * u.transpose();
    (Some(r), cd - r * cs)
}

fn to_vectors(cloud: &[[f64; 3]]) -> Vec<Vector3<f64>> {
    cloud.iter().map(|p| Vector3::from(*p)).collect()
}

/// Aligns `src` onto `dst`.
///
/// Stops after `max_iters` iterations, when the correspondence MSE improves
/// by less than `tol`, or when an update would increase it (that update is
/// rolled back). The recorded MSE sequence is therefore non-increasing.
pub fn icp_align(src: &PointCloud, dst: &PointCloud, max_iters: usize, tol: f64) -> Result<IcpResult> {
    let target = dst.points();
    let mut rotation = Matrix3::identity();
    let mut translation = Vector3::zeros();
    let mut current = src.clone();
    let mut previous: Option<(Matrix3<f64>, Vector3<f64>, PointCloud)> = None;
    let mut history: Vec<f64> = Vec::new();
    let mut degenerate = false;

    for _ in 0..max_iters {
        let nn = nearest_neighbors(target, current.points());
        let mse = nn.iter().map(|&(_, d)| d).sum::<f64>() / nn.len() as f64;
        if let Some(&last) = history.last() {
            if mse > last {
                let (r, t, c) = previous.take().expect("previous pose exists after first iteration");
                rotation = r;
                translation = t;
                current = c;
                break;
            }
        }
        history.push(mse);
        if mse == 0.0 {
            break;
        }
        if history.len() >= 2 && history[history.len() - 2] - mse < tol {
            break;
        }

        let moving = to_vectors(current.points());
        let matched: Vec<Vector3<f64>> = nn.iter().map(|&(j, _)| Vector3::from(target[j])).collect();
        let (r, t) = match rigid_fit(&moving, &matched) {
            (Some(r), t) => (r, t),
            (None, t) => {
                degenerate = true;
                (Matrix3::identity(), t)
            }
        };
        previous = Some((rotation, translation, current.clone()));
        rotation = r * rotation;
        translation = r * translation + t;
        current = current.transformed(&r, &t);
    }

    Ok(IcpResult { aligned: current, rotation, translation, mse_history: history, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Unit};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(rng: &mut ChaCha8Rng, n: usize) -> PointCloud {
        PointCloud::new((0..n).map(|_| std::array::from_fn(|_| rng.random_range(-0.5..0.5))).collect()).unwrap()
    }

    #[test]
    fn rigid_fit_recovers_exact_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let src = cloud(&mut rng, 30);
        let axis = Unit::new_normalize(Vector3::new(0.3, -1.0, 0.5));
        let r = *Rotation3::from_axis_angle(&axis, 2.0).matrix();
        let t = Vector3::new(0.5, 1.0, -2.0);
        let dst = src.transformed(&r, &t);
        let (rr, tt) = rigid_fit(&to_vectors(src.points()), &to_vectors(dst.points()));
        assert!((rr.unwrap() - r).abs().max() < 1e-12);
        assert!((tt - t).norm() < 1e-12);
    }

    #[test]
    fn reflection_is_corrected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let src = cloud(&mut rng, 20);
        let mirror = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        let dst = src.transformed(&mirror, &Vector3::zeros());
        let (r, _) = rigid_fit(&to_vectors(src.points()), &to_vectors(dst.points()));
        assert!((r.unwrap().determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_points_fall_back() {
        let src = PointCloud::new((0..5).map(|i| [i as f64, 0.0, 0.0]).collect()).unwrap();
        let dst = src.transformed(&Matrix3::identity(), &Vector3::new(0.0, 0.3, 0.0));
        let res = icp_align(&src, &dst, 10, 1e-12).unwrap();
        assert!(res.degenerate);
        assert!((res.translation - Vector3::new(0.0, 0.3, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn self_alignment_stops_immediately() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let src = cloud(&mut rng, 50);
        let res = icp_align(&src, &src, 50, 1e-7).unwrap();
        assert_eq!(res.iterations(), 1);
        assert_eq!(res.rotation, Matrix3::identity());
        assert_eq!(res.translation, Vector3::zeros());
        assert_eq!(res.aligned, src);
    }

    #[test]
    fn noisy_copy_improves() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let src = cloud(&mut rng, 200);
        let axis = Unit::new_normalize(Vector3::new(1.0, 2.0, 3.0));
        let r = *Rotation3::from_axis_angle(&axis, 0.1).matrix();
        let moved = src.transformed(&r, &Vector3::new(0.02, -0.03, 0.01));
        let noisy = PointCloud::new(
            moved
                .points()
                .iter()
                .map(|p| std::array::from_fn(|k| p[k] + 0.01 * (rng.random::<f64>() - 0.5) * 3.46))
                .collect(),
        )
        .unwrap();
        let res = icp_align(&noisy, &src, 50, 1e-7).unwrap();
        let before = super::super::chamfer::chamfer(&noisy, &src).unwrap().0;
        let after = super::super::chamfer::chamfer(&res.aligned, &src).unwrap().0;
        assert!(after < before);
        assert!(res.mse_history.windows(2).all(|w| w[1] <= w[0]));
    }
}
