//! Measurements on rendered images and fitted clouds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::camera::{normalize_cloud, PointCloud, ViewSpec};
use crate::error::{Error, Result};
use crate::losses::{mean_abs_diff, render_maps, view_targets, RenderConfig};
use crate::raster::ImageGrid;
use crate::shapes;

/// Fraction of the image maximum a pixel must exceed to count as foreground.
pub const HALF_MAX: f64 = 0.5;

/// Counts 8-connected components of pixels strictly above `rel * max`.
/// An image whose maximum is not positive has no components.
pub fn connected_components(img: &ImageGrid, rel: f64) -> usize {
    let max = img.max();
    if !(max > 0.0) {
        return 0;
    }
    let level = rel * max;
    let (h, w) = img.dims();
    let mut seen = vec![false; h * w];
    let mut stack = Vec::new();
    let mut count = 0;
    for start in 0..h * w {
        if seen[start] || img.data()[start] <= level {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(p) = stack.pop() {
            let (r, c) = ((p / w) as isize, (p % w) as isize);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (rr, cc) = (r + dr, c + dc);
                    if rr < 0 || cc < 0 || rr >= h as isize || cc >= w as isize {
                        continue;
                    }
                    let q = rr as usize * w + cc as usize;
                    if !seen[q] && img.data()[q] > level {
                        seen[q] = true;
                        stack.push(q);
                    }
                }
            }
        }
    }
    count
}

/// Jittered cube benchmark: a normalized 256-point cube surface and a
/// normalized copy with per-coordinate Gaussian noise of `sigma`.
pub fn cube_benchmark(seed: u64, n: usize, sigma: f64) -> Result<(PointCloud, PointCloud)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = normalize_cloud(&shapes::cube_surface(&mut rng, n)?)?;
    let initial = normalize_cloud(&shapes::jitter(&mut rng, &target, sigma)?)?;
    Ok((initial, target))
}

/// Mean over `views` of the per-pixel L1 between edge maps of `pred` and `gt`.
pub fn mean_edge_l1(pred: &PointCloud, gt: &PointCloud, views: &[ViewSpec], cfg: &RenderConfig) -> Result<f64> {
    if views.is_empty() {
        return Err(Error::Parameter("no views given".into()));
    }
    let targets = view_targets(gt, views, cfg)?;
    let mut total = 0.0;
    for t in &targets {
        let maps = render_maps(pred, &t.view, cfg)?;
        total += mean_abs_diff(&maps.edge, &t.maps.edge)?.0;
    }
    Ok(total / views.len() as f64)
}

/// Horizontal strip of equally sized images.
pub fn hstack(images: &[ImageGrid]) -> Result<ImageGrid> {
    let first = images.first().ok_or_else(|| Error::Parameter("no images to stack".into()))?;
    let (h, w) = first.dims();
    for img in images {
        if img.dims() != (h, w) {
            return Err(Error::Dimension(format!("strip images {:?} vs {:?}", img.dims(), (h, w))));
        }
    }
    Ok(ImageGrid::from_fn(h, w * images.len(), |r, c| images[c / w].get(r, c % w)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_counts() {
        let mut img = ImageGrid::zeros(8, 8);
        assert_eq!(connected_components(&img, HALF_MAX), 0);
        img.set(1, 1, 1.0);
        img.set(2, 2, 1.0);
        assert_eq!(connected_components(&img, HALF_MAX), 1);
        img.set(5, 5, 0.9);
        assert_eq!(connected_components(&img, HALF_MAX), 2);
        img.set(6, 6, 0.5);
        assert_eq!(connected_components(&img, HALF_MAX), 2);
        img.set(4, 4, 0.6);
        img.set(3, 3, 0.6);
        assert_eq!(connected_components(&img, HALF_MAX), 1);
    }

    #[test]
    fn strip_layout() {
        let a = ImageGrid::filled(2, 3, 1.0);
        let b = ImageGrid::filled(2, 3, 2.0);
        let s = hstack(&[a, b]).unwrap();
        assert_eq!(s.dims(), (2, 6));
        assert_eq!(s.get(1, 2), 1.0);
        assert_eq!(s.get(0, 3), 2.0);
        assert!(hstack(&[]).is_err());
    }

    #[test]
    fn benchmark_is_seeded() {
        let (i1, t1) = cube_benchmark(3, 64, 0.05).unwrap();
        let (i2, t2) = cube_benchmark(3, 64, 0.05).unwrap();
        assert_eq!(i1, i2);
        assert_eq!(t1, t2);
        assert_eq!(i1.len(), 64);
    }

    #[test]
    fn edge_l1_zero_on_self() {
        let (_, t) = cube_benchmark(0, 64, 0.05).unwrap();
        let views = crate::camera::default_angle_pool();
        assert_eq!(mean_edge_l1(&t, &t, &views[..3], &RenderConfig::default()).unwrap(), 0.0);
    }
}
