//! SSIM with an analytic gradient.
//!
//! Mean local SSIM over valid 11x11 windows (sigma 1.5 separable Gaussian,
//! C1 = 0.01^2, C2 = 0.03^2), per channel then averaged. The gradient
//! w.r.t. the first image comes from re-convolving the per-window partials,
//! the standard adjoint of the windowed statistics.

use crate::img::ImageRgb;
use crate::{Error, Result};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let x = i as f64 - half;
        *v = (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// One scalar channel as a plane for windowed statistics.
struct Plane {
    w: usize,
    h: usize,
    data: Vec<f64>,
}

impl Plane {
    fn from_channel(img: &ImageRgb, c: usize) -> Self {
        Plane {
            w: img.width,
            h: img.height,
            data: (0..img.width * img.height)
                .map(|p| img.data[p * 3 + c])
                .collect(),
        }
    }

    /// Valid separable convolution; output is (w-10) x (h-10).
    fn conv_valid(&self, k: &[f64; SSIM_WINDOW]) -> Plane {
        let ow = self.w - SSIM_WINDOW + 1;
        // horizontal pass
        let mut tmp = vec![0.0; ow * self.h];
        for y in 0..self.h {
            for x in 0..ow {
                let mut s = 0.0;
                for (i, kv) in k.iter().enumerate() {
                    s += self.data[y * self.w + x + i] * kv;
                }
                tmp[y * ow + x] = s;
            }
        }
        let oh = self.h - SSIM_WINDOW + 1;
        let mut out = vec![0.0; ow * oh];
        for y in 0..oh {
            for x in 0..ow {
                let mut s = 0.0;
                for (i, kv) in k.iter().enumerate() {
                    s += tmp[(y + i) * ow + x] * kv;
                }
                out[y * ow + x] = s;
            }
        }
        Plane {
            w: ow,
            h: oh,
            data: out,
        }
    }

    /// Adjoint of [`conv_valid`]: scatter window-space values back to
    /// pixel space (full correlation with the same separable kernel).
    fn conv_valid_transpose(&self, k: &[f64; SSIM_WINDOW], pw: usize, ph: usize) -> Plane {
        let ow = self.w;
        // vertical scatter
        let mut tmp = vec![0.0; ow * ph];
        for y in 0..self.h {
            for x in 0..ow {
                let v = self.data[y * self.w + x];
                if v == 0.0 {
                    continue;
                }
                for (i, kv) in k.iter().enumerate() {
                    tmp[(y + i) * ow + x] += v * kv;
                }
            }
        }
        let mut out = vec![0.0; pw * ph];
        for y in 0..ph {
            for x in 0..ow {
                let v = tmp[y * ow + x];
                if v == 0.0 {
                    continue;
                }
                for (i, kv) in k.iter().enumerate() {
                    out[y * pw + x + i] += v * kv;
                }
            }
        }
        Plane {
            w: pw,
            h: ph,
            data: out,
        }
    }
}

fn mul(a: &Plane, b: &Plane) -> Plane {
    Plane {
        w: a.w,
        h: a.h,
        data: a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect(),
    }
}

/// Mean SSIM and the gradient of that mean w.r.t. image `a`.
pub fn ssim(a: &ImageRgb, b: &ImageRgb) -> Result<(f64, ImageRgb)> {
    ssim_masked(a, b, None)
}

/// SSIM averaged over windows whose center pixel is inside the mask.
/// With no selected windows the score is 1 (empty support contributes no
/// dissimilarity).
pub fn ssim_masked(
    a: &ImageRgb,
    b: &ImageRgb,
    mask: Option<&crate::img::ImageGray>,
) -> Result<(f64, ImageRgb)> {
    a.same_dims(b)?;
    if a.width < SSIM_WINDOW || a.height < SSIM_WINDOW {
        return Err(Error::Dimension(format!(
            "image {}x{} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window",
            a.width, a.height
        )));
    }
    let k = gaussian_kernel();
    let mut total = 0.0;
    let mut grad = ImageRgb::new(a.width, a.height);
    let ww = a.width - SSIM_WINDOW + 1;
    let wh = a.height - SSIM_WINDOW + 1;
    let half = SSIM_WINDOW / 2;
    let selected: Vec<bool> = (0..ww * wh)
        .map(|i| {
            let wx = i % ww;
            let wy = i / ww;
            match mask {
                Some(m) => m.get(wx + half, wy + half) > 0.5,
                None => true,
            }
        })
        .collect();
    let windows = selected.iter().filter(|s| **s).count() as f64;
    if windows == 0.0 {
        return Ok((1.0, grad));
    }

    for c in 0..3 {
        let pa = Plane::from_channel(a, c);
        let pb = Plane::from_channel(b, c);
        let mu_a = pa.conv_valid(&k);
        let mu_b = pb.conv_valid(&k);
        let aa = mul(&pa, &pa).conv_valid(&k);
        let bb = mul(&pb, &pb).conv_valid(&k);
        let ab = mul(&pa, &pb).conv_valid(&k);

        let n = mu_a.data.len();
        let mut channel_sum = 0.0;
        // per-window partials to be re-convolved
        let mut g_mu = Plane {
            w: mu_a.w,
            h: mu_a.h,
            data: vec![0.0; n],
        };
        let mut g_sig = Plane {
            w: mu_a.w,
            h: mu_a.h,
            data: vec![0.0; n],
        };
        let mut g_cov = Plane {
            w: mu_a.w,
            h: mu_a.h,
            data: vec![0.0; n],
        };
        for i in 0..n {
            if !selected[i] {
                continue;
            }
            let ma = mu_a.data[i];
            let mb = mu_b.data[i];
            let var_a = aa.data[i] - ma * ma;
            let var_b = bb.data[i] - mb * mb;
            let cov = ab.data[i] - ma * mb;
            let n1 = 2.0 * ma * mb + SSIM_C1;
            let n2 = 2.0 * cov + SSIM_C2;
            let d1 = ma * ma + mb * mb + SSIM_C1;
            let d2 = var_a + var_b + SSIM_C2;
            let s = (n1 * n2) / (d1 * d2);
            channel_sum += s;

            // ds/dmu_a, ds/dvar_a, ds/dcov
            let ds_dn1 = n2 / (d1 * d2);
            let ds_dn2 = n1 / (d1 * d2);
            let ds_dd1 = -s / d1;
            let ds_dd2 = -s / d2;
            let ds_dmu_a = ds_dn1 * 2.0 * mb + ds_dd1 * 2.0 * ma;
            let ds_dvar_a = ds_dd2;
            let ds_dcov = ds_dn2 * 2.0;
            // var_a = conv(a^2) - mu_a^2, cov = conv(ab) - mu_a mu_b:
            // fold their mu_a terms into the mu channel
            g_mu.data[i] = ds_dmu_a - ds_dvar_a * 2.0 * ma - ds_dcov * mb;
            g_sig.data[i] = ds_dvar_a; // weights conv(a^2) -> 2a factor later
            g_cov.data[i] = ds_dcov; // weights conv(ab) -> b factor later
        }
        total += channel_sum / windows;

        let scale = 1.0 / (3.0 * windows);
        let t_mu = g_mu.conv_valid_transpose(&k, a.width, a.height);
        let t_sig = g_sig.conv_valid_transpose(&k, a.width, a.height);
        let t_cov = g_cov.conv_valid_transpose(&k, a.width, a.height);
        for p in 0..a.width * a.height {
            let ax = pa.data[p];
            let bx = pb.data[p];
            grad.data[p * 3 + c] =
                (t_mu.data[p] + 2.0 * ax * t_sig.data[p] + bx * t_cov.data[p]) * scale;
        }
    }
    Ok((total / 3.0, grad))
}
