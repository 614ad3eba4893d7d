//! Dense 2D grids, 3×3 kernels and same-size convolution with its adjoint.
//!
//! Convolution here is true convolution (the kernel is flipped) with zero
//! padding outside the image. Every forward operation has a pullback that
//! maps an upstream gradient on the output to a gradient on the input.

use crate::error::{Error, Result};

/// Row-major real raster.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageGrid {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImageGrid {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self { height, width, data: vec![0.0; height * width] }
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self { height, width, data: vec![value; height * width] }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Dimension(format!("empty grid {height}x{width}")));
        }
        if data.len() != height * width {
            return Err(Error::Dimension(format!("{} values for a {height}x{width} grid", data.len())));
        }
        Ok(Self { height, width, data })
    }

    /// Builds a grid by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self { height, width, data }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    #[inline]
    pub fn add_at(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] += value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { height: self.height, width: self.width, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Elementwise combination of two grids of equal dimensions.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_dims(other)?;
        Ok(Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// In-place `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Self, scale: f64) -> Result<()> {
        self.check_same_dims(other)?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
        Ok(())
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Row and column of the first maximum in row-major order.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.data.iter().enumerate() {
            if v > self.data[best] {
                best = i;
            }
        }
        (best / self.width, best % self.width)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )));
        }
        Ok(())
    }
}

/// A 3×3 kernel; `taps[i][j]` sits at row offset `i - 1`, column offset `j - 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kernel3 {
    pub taps: [[f64; 3]; 3],
}

impl Kernel3 {
    pub fn new(taps: [[f64; 3]; 3]) -> Result<Self> {
        if taps.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("kernel taps must be finite".into()));
        }
        Ok(Self { taps })
    }

    pub fn identity() -> Self {
        let mut taps = [[0.0; 3]; 3];
        taps[1][1] = 1.0;
        Self { taps }
    }

    pub fn transpose(&self) -> Self {
        let mut taps = [[0.0; 3]; 3];
        for (i, row) in taps.iter_mut().enumerate() {
            for (j, t) in row.iter_mut().enumerate() {
                *t = self.taps[j][i];
            }
        }
        Self { taps }
    }

    pub fn sum(&self) -> f64 {
        self.taps.iter().flatten().sum()
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Parameter(format!("kernel sigma must be positive and finite, got {sigma}")));
    }
    Ok(())
}

/// Normalized 3×3 Gaussian window.
pub fn gaussian_kernel3(sigma: f64) -> Result<Kernel3> {
    check_sigma(sigma)?;
    let mut taps = [[0.0; 3]; 3];
    let mut total = 0.0;
    for (i, row) in taps.iter_mut().enumerate() {
        for (j, t) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 1.0, j as f64 - 1.0);
            *t = (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp();
            total += *t;
        }
    }
    for t in taps.iter_mut().flatten() {
        *t /= total;
    }
    Ok(Kernel3 { taps })
}

/// Gaussian derivative kernels `(kx, ky)`, scaled so the largest tap magnitude is 1.
///
/// `kx[i][j] ∝ -dj * exp(-(di² + dj²) / 2σ²)`. Under true convolution this
/// gives a positive response where intensity increases with the column index.
pub fn gaussian_derivative_kernels3(sigma: f64) -> Result<(Kernel3, Kernel3)> {
    check_sigma(sigma)?;
    let mut taps = [[0.0; 3]; 3];
    for (i, row) in taps.iter_mut().enumerate() {
        for (j, t) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 1.0, j as f64 - 1.0);
            *t = -dj * (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp();
        }
    }
    let peak = taps.iter().flatten().fold(0.0_f64, |m, &t| m.max(t.abs()));
    for t in taps.iter_mut().flatten() {
        *t /= peak;
    }
    let kx = Kernel3 { taps };
    Ok((kx, kx.transpose()))
}

fn check_min_size(img: &ImageGrid) -> Result<()> {
    if img.height < 3 || img.width < 3 {
        return Err(Error::Dimension(format!("image {}x{} is smaller than a 3x3 kernel", img.height, img.width)));
    }
    Ok(())
}

/// `out[r][c] = Σ k[i][j] · img[r - (i-1)][c - (j-1)]`, zero outside the image.
pub fn convolve_same(img: &ImageGrid, k: &Kernel3) -> Result<ImageGrid> {
    check_min_size(img)?;
    let (h, w) = img.dims();
    let mut out = ImageGrid::zeros(h, w);
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (i, row) in k.taps.iter().enumerate() {
                // source row r - (i - 1)
                let sr = r as isize + 1 - i as isize;
                if sr < 0 || sr >= h as isize {
                    continue;
                }
                let base = sr as usize * w;
                for (j, &t) in row.iter().enumerate() {
                    let sc = c as isize + 1 - j as isize;
                    if sc < 0 || sc >= w as isize {
                        continue;
                    }
                    acc += t * img.data[base + sc as usize];
                }
            }
            out.data[r * w + c] = acc;
        }
    }
    Ok(out)
}

/// Adjoint of [`convolve_same`]: correlation of `upstream` with `k`.
///
/// `img` is only used for its dimensions; convolution is linear so the
/// pullback does not depend on the input values.
pub fn convolve_same_pullback(img: &ImageGrid, k: &Kernel3, upstream: &ImageGrid) -> Result<ImageGrid> {
    check_min_size(img)?;
    img.check_same_dims(upstream)?;
    let (h, w) = img.dims();
    let mut out = ImageGrid::zeros(h, w);
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (i, row) in k.taps.iter().enumerate() {
                let ur = r as isize + i as isize - 1;
                if ur < 0 || ur >= h as isize {
                    continue;
                }
                let base = ur as usize * w;
                for (j, &t) in row.iter().enumerate() {
                    let uc = c as isize + j as isize - 1;
                    if uc < 0 || uc >= w as isize {
                        continue;
                    }
                    acc += t * upstream.data[base + uc as usize];
                }
            }
            out.data[r * w + c] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(rng: &mut ChaCha8Rng, h: usize, w: usize) -> ImageGrid {
        ImageGrid::from_fn(h, w, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn gaussian_kernel_limits_and_symmetry() {
        let wide = gaussian_kernel3(100.0).unwrap();
        for &t in wide.taps.iter().flatten() {
            assert!((t - 1.0 / 9.0).abs() < 1e-5);
        }
        let k = gaussian_kernel3(1.0).unwrap();
        assert!((k.sum() - 1.0).abs() < 1e-12);
        let center = k.taps[1][1];
        assert!(k.taps.iter().flatten().all(|&t| t <= center && t > 0.0));
        assert_eq!(k.taps[0][0], k.taps[0][2]);
        assert_eq!(k.taps[0][0], k.taps[2][0]);
        assert_eq!(k.taps[0][0], k.taps[2][2]);
    }

    #[test]
    fn bad_sigma_rejected() {
        assert!(matches!(gaussian_kernel3(0.0), Err(Error::Parameter(_))));
        assert!(matches!(gaussian_derivative_kernels3(-1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn derivative_kernels_shape() {
        for sigma in [0.3, 1.0, 2.5] {
            let (kx, ky) = gaussian_derivative_kernels3(sigma).unwrap();
            assert!(kx.sum().abs() < 1e-12);
            assert_eq!(ky, kx.transpose());
            let peak = kx.taps.iter().flatten().fold(0.0_f64, |m, t| m.max(t.abs()));
            assert!((peak - 1.0).abs() < 1e-15);
        }
        let (kx, _) = gaussian_derivative_kernels3(1.0).unwrap();
        for row in kx.taps {
            assert_eq!(row[1], 0.0);
        }
    }

    #[test]
    fn derivative_kernel_sign_follows_increasing_columns() {
        let ramp = ImageGrid::from_fn(5, 5, |_, c| c as f64);
        let (kx, ky) = gaussian_derivative_kernels3(1.0).unwrap();
        let ix = convolve_same(&ramp, &kx).unwrap();
        let iy = convolve_same(&ramp, &ky).unwrap();
        assert!(ix.get(2, 2) > 0.0);
        assert!(iy.get(2, 2).abs() < 1e-15);
    }

    #[test]
    fn zero_sum_kernel_kills_constant_interior() {
        let img = ImageGrid::filled(6, 7, 3.5);
        let (kx, _) = gaussian_derivative_kernels3(1.0).unwrap();
        let out = convolve_same(&img, &kx).unwrap();
        for r in 1..5 {
            for c in 1..6 {
                assert!(out.get(r, c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_kernel_and_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img = random_grid(&mut rng, 5, 8);
        let id = Kernel3::identity();
        assert_eq!(convolve_same(&img, &id).unwrap(), img);
        assert_eq!(convolve_same_pullback(&img, &id, &img).unwrap(), img);
    }

    #[test]
    fn hand_computed_interior_pixel() {
        // 5×5 image with values r*5+c; the Gaussian is symmetric so flipping is moot.
        let img = ImageGrid::from_fn(5, 5, |r, c| (r * 5 + c) as f64);
        let k = gaussian_kernel3(1.0).unwrap();
        let out = convolve_same(&img, &k).unwrap();
        let e1 = (-0.5f64).exp();
        let e2 = (-1.0f64).exp();
        let norm = 1.0 + 4.0 * e1 + 4.0 * e2;
        // neighbours of (2,2): 12 at the center, edges 7,11,13,17, corners 6,8,16,18
        let expected = (12.0 + e1 * (7.0 + 11.0 + 13.0 + 17.0) + e2 * (6.0 + 8.0 + 16.0 + 18.0)) / norm;
        assert!((out.get(2, 2) - expected).abs() < 1e-12);
    }

    #[test]
    fn too_small_image_rejected() {
        let img = ImageGrid::zeros(2, 5);
        assert!(matches!(convolve_same(&img, &Kernel3::identity()), Err(Error::Dimension(_))));
        let img = ImageGrid::zeros(4, 4);
        let up = ImageGrid::zeros(4, 5);
        assert!(matches!(convolve_same_pullback(&img, &Kernel3::identity(), &up), Err(Error::Dimension(_))));
    }

    #[test]
    fn pullback_zero_upstream() {
        let img = ImageGrid::filled(4, 4, 1.0);
        let k = gaussian_kernel3(1.0).unwrap();
        let g = convolve_same_pullback(&img, &k, &ImageGrid::zeros(4, 4)).unwrap();
        assert!(g.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pullback_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let img = random_grid(&mut rng, 6, 6);
        let up = random_grid(&mut rng, 6, 6);
        let (kx, _) = gaussian_derivative_kernels3(1.0).unwrap();
        for k in [gaussian_kernel3(1.0).unwrap(), kx] {
            let g = convolve_same_pullback(&img, &k, &up).unwrap();
            let f = |x: &ImageGrid| up.dot(&convolve_same(x, &k).unwrap()).unwrap();
            let h = 1e-5;
            for i in 0..img.len() {
                let mut p = img.clone();
                p.data_mut()[i] += h;
                let mut m = img.clone();
                m.data_mut()[i] -= h;
                let fd = (f(&p) - f(&m)) / (2.0 * h);
                let a = g.data()[i];
                assert!((fd - a).abs() <= 1e-5 * fd.abs().max(a.abs()).max(1e-8), "{i}: {fd} vs {a}");
            }
        }
    }

    proptest! {
        #[test]
        fn convolution_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_grid(&mut rng, 5, 7);
            let y = random_grid(&mut rng, 5, 7);
            let k = Kernel3::new(std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))).unwrap();
            let lhs = convolve_same(&x.zip_map(&y, |p, q| a * p + b * q).unwrap(), &k).unwrap();
            let cx = convolve_same(&x, &k).unwrap();
            let cy = convolve_same(&y, &k).unwrap();
            for i in 0..lhs.len() {
                prop_assert!((lhs.data()[i] - (a * cx.data()[i] + b * cy.data()[i])).abs() < 1e-10);
            }
        }

        #[test]
        fn adjoint_identity(seed in any::<u64>(), h in 3usize..9, w in 3usize..9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_grid(&mut rng, h, w);
            let u = random_grid(&mut rng, h, w);
            let k = Kernel3::new(std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))).unwrap();
            let lhs = u.dot(&convolve_same(&x, &k).unwrap()).unwrap();
            let rhs = convolve_same_pullback(&x, &k, &u).unwrap().dot(&x).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1e-12));
        }

        #[test]
        fn gaussian_taps_positive_normalized(sigma in 0.05f64..50.0) {
            let k = gaussian_kernel3(sigma).unwrap();
            prop_assert!(k.taps.iter().flatten().all(|&t| t > 0.0));
            prop_assert!((k.sum() - 1.0).abs() < 1e-12);
        }
    }
}
