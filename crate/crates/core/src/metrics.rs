//! MSE, PSNR, SSIM and multi-scale SSIM.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{Image, Plane};

pub fn mse(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {} samples", x.len(), y.len())));
    }
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64)
}

/// `10 log10(peak² / mse)`; identical inputs give `f64::INFINITY`.
pub fn psnr(x: &[f64], y: &[f64], peak: f64) -> Result<f64> {
    if !(peak > 0.0) {
        return Err(Error::InvalidParameter("peak must be positive".into()));
    }
    let m = mse(x, y)?;
    Ok(if m == 0.0 { f64::INFINITY } else { 10.0 * (peak * peak / m).log10() })
}

/// Local statistics of a pair of patches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchStats {
    pub mu_x: f64,
    pub mu_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub cov_xy: f64,
    pub c1: f64,
    pub c2: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 && num == 0.0 {
        1.0
    } else {
        num / den
    }
}

impl PatchStats {
    /// Weighted statistics; `w` sums to one.
    pub fn weighted(x: &[f64], y: &[f64], w: &[f64], c1: f64, c2: f64) -> Self {
        let (mut mu_x, mut mu_y) = (0.0, 0.0);
        for i in 0..w.len() {
            mu_x += w[i] * x[i];
            mu_y += w[i] * y[i];
        }
        let (mut var_x, mut var_y, mut cov_xy) = (0.0, 0.0, 0.0);
        for i in 0..w.len() {
            let (dx, dy) = (x[i] - mu_x, y[i] - mu_y);
            var_x += w[i] * dx * dx;
            var_y += w[i] * dy * dy;
            cov_xy += w[i] * dx * dy;
        }
        Self { mu_x, mu_y, var_x, var_y, cov_xy, c1, c2 }
    }

    pub fn new(x: &[f64], y: &[f64], c1: f64, c2: f64) -> Self {
        let w = vec![1.0 / x.len() as f64; x.len()];
        Self::weighted(x, y, &w, c1, c2)
    }

    pub fn sigma_x(&self) -> f64 {
        self.var_x.sqrt()
    }

    pub fn sigma_y(&self) -> f64 {
        self.var_y.sqrt()
    }

    pub fn luminance(&self) -> f64 {
        ratio(2.0 * self.mu_x * self.mu_y + self.c1, self.mu_x * self.mu_x + self.mu_y * self.mu_y + self.c1)
    }

    pub fn contrast(&self) -> f64 {
        ratio(2.0 * self.sigma_x() * self.sigma_y() + self.c2, self.var_x + self.var_y + self.c2)
    }

    /// Uses `c3 = c2 / 2`.
    pub fn structure(&self) -> f64 {
        let c3 = self.c2 / 2.0;
        ratio(self.cov_xy + c3, self.sigma_x() * self.sigma_y() + c3)
    }

    /// Contrast times structure in closed form.
    pub fn contrast_structure(&self) -> f64 {
        ratio(2.0 * self.cov_xy + self.c2, self.var_x + self.var_y + self.c2)
    }

    pub fn ssim(&self, alpha: f64, beta: f64, gamma: f64) -> f64 {
        if beta == gamma {
            self.luminance().powf(alpha) * self.contrast_structure().powf(beta)
        } else {
            self.luminance().powf(alpha) * self.contrast().powf(beta) * self.structure().powf(gamma)
        }
    }
}

pub fn ssim_patch(x: &[f64], y: &[f64], cfg: &SsimConfig) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::ShapeMismatch(format!("{} vs {} samples", x.len(), y.len())));
    }
    Ok(PatchStats::new(x, y, cfg.c1, cfg.c2).ssim(cfg.alpha, cfg.beta, cfg.gamma))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Window {
    Uniform(usize),
    Gaussian { size: usize, sigma: f64 },
}

impl Window {
    pub fn size(&self) -> usize {
        match self {
            Window::Uniform(s) | Window::Gaussian { size: s, .. } => *s,
        }
    }

    /// Normalized `size × size` weights, row-major.
    pub fn weights(&self) -> Vec<f64> {
        match self {
            Window::Uniform(s) => vec![1.0 / (s * s) as f64; s * s],
            Window::Gaussian { size, sigma } => {
                let c = (*size as f64 - 1.0) / 2.0;
                let g: Vec<f64> = (0..*size).map(|i| (-(i as f64 - c).powi(2) / (2.0 * sigma * sigma)).exp()).collect();
                let mut w: Vec<f64> = g.iter().flat_map(|a| g.iter().map(move |b| a * b)).collect();
                let s: f64 = w.iter().sum();
                w.iter_mut().for_each(|v| *v /= s);
                w
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsimConfig {
    pub c1: f64,
    pub c2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub window: Window,
}

impl SsimConfig {
    /// `c1 = (0.01 peak)²`, `c2 = (0.03 peak)²`, 8×8 uniform window.
    pub fn for_peak(peak: f64) -> Self {
        Self {
            c1: (0.01 * peak).powi(2),
            c2: (0.03 * peak).powi(2),
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            window: Window::Uniform(8),
        }
    }

    pub fn zero_constants(mut self) -> Self {
        self.c1 = 0.0;
        self.c2 = 0.0;
        self
    }

    pub fn with_window(mut self, window: Window) -> Self {
        self.window = window;
        self
    }
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self::for_peak(255.0)
    }
}

/// Statistics of every window position (stride 1), row-major.
fn window_stats(x: &Plane, y: &Plane, cfg: &SsimConfig) -> Result<Vec<PatchStats>> {
    x.same_shape(y)?;
    let k = cfg.window.size();
    if k == 0 || k > x.width() || k > x.height() {
        return Err(Error::ShapeMismatch(format!("{k}x{k} window on {}x{} image", x.width(), x.height())));
    }
    let w = cfg.window.weights();
    let (nx, ny) = (x.width() - k + 1, x.height() - k + 1);
    let row = |j: usize| {
        let mut px = vec![0.0; k * k];
        let mut py = vec![0.0; k * k];
        (0..nx)
            .map(|i| {
                for dy in 0..k {
                    for dx in 0..k {
                        px[dy * k + dx] = x.get(i + dx, j + dy);
                        py[dy * k + dx] = y.get(i + dx, j + dy);
                    }
                }
                PatchStats::weighted(&px, &py, &w, cfg.c1, cfg.c2)
            })
            .collect::<Vec<_>>()
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<PatchStats>> = (0..ny).into_par_iter().map(row).collect();
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<PatchStats>> = (0..ny).map(row).collect();
    Ok(rows.concat())
}

/// Mean SSIM over all window positions.
pub fn ssim_image(x: &Plane, y: &Plane, cfg: &SsimConfig) -> Result<f64> {
    let stats = window_stats(x, y, cfg)?;
    Ok(stats.iter().map(|s| s.ssim(cfg.alpha, cfg.beta, cfg.gamma)).sum::<f64>() / stats.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsSsimConfig {
    pub ssim: SsimConfig,
    /// One weight per scale, finest first.
    pub weights: Vec<f64>,
}

impl MsSsimConfig {
    pub const STANDARD_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];

    pub fn for_peak(peak: f64) -> Self {
        Self {
            ssim: SsimConfig::for_peak(peak).with_window(Window::Gaussian { size: 11, sigma: 1.5 }),
            weights: Self::STANDARD_WEIGHTS.to_vec(),
        }
    }
}

impl Default for MsSsimConfig {
    fn default() -> Self {
        Self::for_peak(255.0)
    }
}

/// Mean contrast-structure at each of the first `S − 1` scales and full SSIM at
/// the coarsest, each raised to its weight. Negative contrast-structure means
/// clamp to zero.
pub fn ms_ssim(x: &Plane, y: &Plane, cfg: &MsSsimConfig) -> Result<f64> {
    x.same_shape(y)?;
    let scales = cfg.weights.len();
    if scales == 0 {
        return Err(Error::InvalidParameter("no scales".into()));
    }
    let min_side = x.width().min(x.height()) >> (scales - 1);
    if min_side < cfg.ssim.window.size() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} image too small for {scales} scales",
            x.width(),
            x.height()
        )));
    }
    let (mut x, mut y) = (x.clone(), y.clone());
    let mut out = 1.0;
    for (s, &w) in cfg.weights.iter().enumerate() {
        let stats = window_stats(&x, &y, &cfg.ssim)?;
        let n = stats.len() as f64;
        let v = if s + 1 == scales {
            stats.iter().map(|p| p.luminance() * p.contrast_structure()).sum::<f64>() / n
        } else {
            stats.iter().map(|p| p.contrast_structure()).sum::<f64>() / n
        };
        out *= v.max(0.0).powf(w);
        if s + 1 < scales {
            x = x.downsample2();
            y = y.downsample2();
        }
    }
    Ok(out)
}

/// Mean of a per-channel metric.
pub fn color_metric<F>(x: &Image, y: &Image, metric: F) -> Result<f64>
where
    F: Fn(&Plane, &Plane) -> Result<f64>,
{
    if x.channels() != y.channels() {
        return Err(Error::ShapeMismatch(format!("{} vs {} channels", x.channels(), y.channels())));
    }
    let vals = x.planes().iter().zip(y.planes()).map(|(a, b)| metric(a, b)).collect::<Result<Vec<_>>>()?;
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise_plane(w: usize, h: usize, seed: u64) -> Plane {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Plane::new(w, h, (0..w * h).map(|_| rng.gen_range(0.0..255.0)).collect()).unwrap()
    }

    #[test]
    fn mse_psnr_examples() {
        let x: Vec<f64> = (0..64).map(|v| v as f64).collect();
        assert_eq!(mse(&x, &x).unwrap(), 0.0);
        assert_eq!(psnr(&x, &x, 255.0).unwrap(), f64::INFINITY);
        let y: Vec<f64> = x.iter().map(|v| v + 1.0).collect();
        assert_eq!(mse(&x, &y).unwrap(), 1.0);
        assert!((psnr(&x, &y, 255.0).unwrap() - 48.1308).abs() < 1e-4);
        let cb: Vec<f64> = (0..16).map(|i| ((i / 4 + i % 4) % 2) as f64).collect();
        let inv: Vec<f64> = cb.iter().map(|v| 1.0 - v).collect();
        assert_eq!(mse(&cb, &inv).unwrap(), 1.0);
        assert!(mse(&x, &x[1..]).is_err());
    }

    #[test]
    fn identical_patch_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..64).map(|_| rng.gen_range(0.0..255.0)).collect();
        assert_eq!(ssim_patch(&x, &x, &SsimConfig::default()).unwrap(), 1.0);
        assert_eq!(ssim_patch(&x, &x, &SsimConfig::default().zero_constants()).unwrap(), 1.0);
    }

    #[test]
    fn scaling_both_inputs_keeps_luminance_and_contrast() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<f64> = (0..64).map(|_| rng.gen_range(1.0..255.0)).collect();
        let y: Vec<f64> = (0..64).map(|_| rng.gen_range(1.0..255.0)).collect();
        let base = PatchStats::new(&x, &y, 0.0, 0.0);
        for a in [0.1, 3.0, 17.0] {
            let xs: Vec<f64> = x.iter().map(|v| a * v).collect();
            let ys: Vec<f64> = y.iter().map(|v| a * v).collect();
            let s = PatchStats::new(&xs, &ys, 0.0, 0.0);
            assert!((s.luminance() - base.luminance()).abs() < 1e-12);
            assert!((s.contrast() - base.contrast()).abs() < 1e-12);
        }
    }

    #[test]
    fn proportional_patch_has_unit_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..64).map(|_| rng.gen_range(1.0..255.0)).collect();
        let a = 2.0;
        let y: Vec<f64> = x.iter().map(|v| a * v).collect();
        let s = PatchStats::new(&x, &y, 0.0, 0.0);
        assert!((s.structure() - 1.0).abs() < 1e-12);
        assert!((s.luminance() - 2.0 * a / (1.0 + a * a)).abs() < 1e-12);
        assert!((s.contrast() - 2.0 * a / (1.0 + a * a)).abs() < 1e-12);
    }

    #[test]
    fn negated_noise_has_negative_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<f64> = (0..64).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        let s = PatchStats::new(&x, &y, 0.0, 0.0);
        assert!((s.structure() + 1.0).abs() < 1e-12);
        assert!(ssim_patch(&x, &y, &SsimConfig::default()).unwrap() <= 0.0);
    }

    #[test]
    fn ssim_image_identity_and_window_error() {
        let x = noise_plane(20, 16, 5);
        assert_eq!(ssim_image(&x, &x, &SsimConfig::default()).unwrap(), 1.0);
        let small = noise_plane(6, 6, 1);
        assert!(matches!(ssim_image(&small, &small, &SsimConfig::default()), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn ms_ssim_identity_and_single_scale() {
        let x = noise_plane(192, 176, 6);
        let y = x.map(|v| v * 0.9 + 10.0);
        let cfg = MsSsimConfig::default();
        assert_eq!(ms_ssim(&x, &x, &cfg).unwrap(), 1.0);
        let single = MsSsimConfig { ssim: cfg.ssim.clone(), weights: vec![1.0] };
        let a = ms_ssim(&x, &y, &single).unwrap();
        let b = ssim_image(&x, &y, &cfg.ssim).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} {b}");
        assert!(ms_ssim(&noise_plane(100, 100, 1), &noise_plane(100, 100, 2), &cfg).is_err());
    }

    #[test]
    fn color_metric_examples() {
        let g = noise_plane(16, 16, 7);
        let rgb = Image::new(vec![g.clone(), g.clone(), g.clone()]).unwrap();
        let cfg = SsimConfig::default();
        let f = |a: &Plane, b: &Plane| ssim_image(a, b, &cfg);
        assert_eq!(color_metric(&rgb, &rgb, f).unwrap(), 1.0);
        let h = noise_plane(16, 16, 8);
        let single = ssim_image(&g, &h, &cfg).unwrap();
        let other = Image::new(vec![h.clone(), h.clone(), h]).unwrap();
        assert!((color_metric(&rgb, &other, f).unwrap() - single).abs() < 1e-15);
        let inv = g.map(|v| 255.0 - v);
        let s_inv = ssim_image(&g, &inv, &cfg).unwrap();
        let mixed = Image::new(vec![inv, g.clone(), g.clone()]).unwrap();
        assert!((color_metric(&rgb, &mixed, f).unwrap() - (s_inv + 2.0) / 3.0).abs() < 1e-15);
        assert!(color_metric(&rgb, &Image::gray(g), f).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn ssim_symmetric_and_bounded(seed in any::<u64>(), zero in any::<bool>()) {
            let x = noise_plane(12, 10, seed);
            let y = noise_plane(12, 10, seed.wrapping_add(1));
            let mut cfg = SsimConfig::default();
            if zero { cfg = cfg.zero_constants(); }
            let a = ssim_image(&x, &y, &cfg).unwrap();
            let b = ssim_image(&y, &x, &cfg).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&a));
            prop_assert_eq!(mse(x.data(), y.data()).unwrap(), mse(y.data(), x.data()).unwrap());
        }
    }
}
